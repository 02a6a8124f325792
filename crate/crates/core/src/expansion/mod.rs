//! Tensor-product wavelet expansions on `R^d`.
//!
//! Analysis and synthesis run the separable biorthogonal filter bank with
//! zero extension and no truncation, so `synthesize ∘ analyze` is the
//! identity up to roundoff.
//!
//! A [`SampledField`] over `[lo, hi]^d` at resolution `2^J` is identified
//! with fine-level scaling coefficients through
//! `c_{J,k} = 2^{−Jd/2} f(2^{−J}(k + ⌊L/2⌋))`, i.e. each sample is paired
//! with the scaling function centred nearest to it. For `L = 2` this is
//! exact interpolation. Exact values of an expansion are available through
//! [`eval_nodes`] and [`eval_point`].

mod coeffs;
mod field;
pub mod fwt;

pub use coeffs::{besov_seminorm, inv, n_term_select, BesovParams, CoeffMap, LambdaIndex};
pub use field::{lp_error, lp_norm_monte_carlo, modulus, modulus_seminorm, Boundary, SampledField};

use coeffs::e_from_bits;
use fwt::Grid;

use crate::error::{Error, Result};
use crate::wavelets::BiorthWaveletSystem;

/// Fine index of node 0 on each axis.
fn node_origin(lo: f64, level: i32, sys: &BiorthWaveletSystem) -> i64 {
    (lo * 2f64.powi(level)) as i64 - (sys.l() / 2) as i64
}

/// Fast wavelet transform of a sampled field down to level `j0`.
///
/// Coefficients are `L²`-normalized. The field must vanish within
/// `len(h̃)` nodes of the box boundary.
pub fn analyze(f: &SampledField, sys: &BiorthWaveletSystem, j0: i32) -> Result<CoeffMap> {
    analyze_impl(f, sys, j0, true)
}

/// Single-threaded [`analyze`].
pub fn analyze_seq(f: &SampledField, sys: &BiorthWaveletSystem, j0: i32) -> Result<CoeffMap> {
    analyze_impl(f, sys, j0, false)
}

fn analyze_impl(
    f: &SampledField,
    sys: &BiorthWaveletSystem,
    j0: i32,
    parallel: bool,
) -> Result<CoeffMap> {
    let level = f.level();
    if j0 > level {
        return Err(Error::Parameter(format!(
            "coarsest level {j0} exceeds the field level {level}"
        )));
    }
    check_margin(f, sys.h_dual().len())?;
    let d = f.dim();
    let n = f.n();
    let origin = node_origin(f.bounds().0, level, sys);
    let scale = 2f64.powf(-(level as f64) * d as f64 / 2.0);
    let mut c = Grid {
        lo: vec![origin; d],
        n: vec![n; d],
        data: f.values().iter().map(|v| v * scale).collect(),
    };
    let mut map = CoeffMap::new(d, 2.0, j0)?;
    for j in (j0..level).rev() {
        let mut bands = fwt::analyze_step(&c, sys.h_dual(), sys.g_dual(), parallel);
        for (bits, band) in bands.iter().enumerate().skip(1) {
            let e = e_from_bits(bits, d);
            for (k, v) in band.nonzeros() {
                map.insert(LambdaIndex { j, e: e.clone(), k }, v)?;
            }
        }
        c = bands.swap_remove(0);
    }
    for (k, v) in c.nonzeros() {
        map.insert_coarse(k, v)?;
    }
    Ok(map)
}

fn check_margin(f: &SampledField, width: usize) -> Result<()> {
    let n = f.n();
    let d = f.dim();
    let max = f.values().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let tol = 1e-12 * max;
    for (flat, v) in f.values().iter().enumerate() {
        if v.abs() <= tol {
            continue;
        }
        let mut rem = flat;
        for _ in 0..d {
            let i = rem % n;
            rem /= n;
            if i < width || i + width >= n {
                return Err(Error::Contract(format!(
                    "field is nonzero within {width} nodes of the box boundary; enlarge the box"
                )));
            }
        }
    }
    Ok(())
}

/// Scaling coefficients `c_{J,k}` (`L²`-normalized) of the expansion at level `J`.
pub fn synthesize_level(c: &CoeffMap, sys: &BiorthWaveletSystem, level: i32) -> Result<Grid> {
    synthesize_level_impl(c, sys, level, true)
}

/// Single-threaded [`synthesize_level`].
pub fn synthesize_level_seq(c: &CoeffMap, sys: &BiorthWaveletSystem, level: i32) -> Result<Grid> {
    synthesize_level_impl(c, sys, level, false)
}

fn bounding_box<'a, I: Iterator<Item = &'a Vec<i64>>>(
    keys: I,
    d: usize,
) -> Option<(Vec<i64>, Vec<usize>)> {
    let mut lo = vec![i64::MAX; d];
    let mut hi = vec![i64::MIN; d];
    let mut any = false;
    for k in keys {
        any = true;
        for ax in 0..d {
            lo[ax] = lo[ax].min(k[ax]);
            hi[ax] = hi[ax].max(k[ax]);
        }
    }
    any.then(|| {
        let n = lo
            .iter()
            .zip(&hi)
            .map(|(a, b)| (b - a + 1) as usize)
            .collect();
        (lo, n)
    })
}

fn synthesize_level_impl(
    c: &CoeffMap,
    sys: &BiorthWaveletSystem,
    level: i32,
    parallel: bool,
) -> Result<Grid> {
    if level <= c.j_max() || level < c.j0() {
        return Err(Error::Contract(format!(
            "synthesis level {level} must exceed the finest detail level {}",
            c.j_max()
        )));
    }
    let c = if c.p() == 2.0 {
        c.clone()
    } else {
        c.renormalize(2.0)
    };
    let d = c.dim();
    let mut by_level: Vec<Vec<(&LambdaIndex, f64)>> = vec![Vec::new(); (level - c.j0()) as usize];
    for (l, v) in c.entries() {
        by_level[(l.j - c.j0()) as usize].push((l, *v));
    }
    let mut cur: Option<Grid> = bounding_box(c.coarse().keys(), d).map(|(lo, n)| {
        let mut g = Grid::zeros(lo, n);
        for (k, v) in c.coarse() {
            let i = g.index(k).unwrap();
            g.data[i] = *v;
        }
        g
    });
    for details in &by_level {
        let det_box = bounding_box(details.iter().map(|(l, _)| &l.k), d);
        let (lo, n) = match (&cur, det_box) {
            (None, None) => continue,
            (Some(g), None) => (g.lo.clone(), g.n.clone()),
            (None, Some(b)) => b,
            (Some(g), Some(b)) => Grid::hull((&g.lo, &g.n), (&b.0, &b.1)),
        };
        let mut bands = vec![Grid::zeros(lo.clone(), n.clone()); 1 << d];
        if let Some(g) = &cur {
            bands[0] = g.embed(&lo, &n);
        }
        for (l, v) in details {
            let band = &mut bands[l.e_bits()];
            let i = band.index(&l.k).unwrap();
            band.data[i] = *v;
        }
        cur = Some(fwt::synthesize_step(&bands, sys.h(), sys.g(), parallel));
    }
    // lift the remaining coarse grid to `level`
    let mut g = cur.unwrap_or_else(|| Grid::zeros(vec![0; d], vec![0; d]));
    let reached = c.j0() + by_level.len() as i32;
    for _ in reached..level {
        let zeros = Grid::zeros(g.lo.clone(), g.n.clone());
        let mut bands = vec![zeros; 1 << d];
        bands[0] = g;
        g = fwt::synthesize_step(&bands, sys.h(), sys.g(), parallel);
    }
    Ok(g)
}

/// Inverse of [`analyze`] onto the nodes of `[lo, hi]^d` at `resolution`.
pub fn synthesize(
    c: &CoeffMap,
    sys: &BiorthWaveletSystem,
    lo: f64,
    hi: f64,
    resolution: usize,
) -> Result<SampledField> {
    let level = resolution_level(resolution)?;
    let d = c.dim();
    let empty = SampledField::from_fn(d, lo, hi, resolution, |_| 0.0)?;
    if c.is_empty() {
        return Ok(empty);
    }
    let fine = synthesize_level(c, sys, level)?;
    let origin = node_origin(lo, level, sys);
    let scale = 2f64.powf(level as f64 * d as f64 / 2.0);
    grid_to_field(&fine, origin, scale, &empty)
}

/// Exact values `f(x)` of the expansion at the nodes of `[lo, hi]^d`.
pub fn eval_nodes(
    c: &CoeffMap,
    sys: &BiorthWaveletSystem,
    lo: f64,
    hi: f64,
    resolution: usize,
) -> Result<SampledField> {
    let level = resolution_level(resolution)?;
    let d = c.dim();
    let empty = SampledField::from_fn(d, lo, hi, resolution, |_| 0.0)?;
    if c.is_empty() {
        return Ok(empty);
    }
    let level_fine = level.max(c.j_max() + 1).max(c.j0());
    if level_fine != level {
        return Err(Error::Contract(format!(
            "node resolution 2^{level} is coarser than the expansion (needs 2^{level_fine})"
        )));
    }
    let fine = synthesize_level(c, sys, level)?;
    // φ at the integers 1, …, L−1
    let kernel: Vec<f64> = (1..sys.l()).map(|t| sys.phi().eval(t as f64)).collect();
    let values = fwt::convolve(&fine, &kernel, 1, true);
    let origin = (lo * 2f64.powi(level)) as i64;
    let scale = 2f64.powf(level as f64 * d as f64 / 2.0);
    grid_to_field(&values, origin, scale, &empty)
}

fn resolution_level(resolution: usize) -> Result<i32> {
    if !resolution.is_power_of_two() {
        return Err(Error::Parameter(format!(
            "resolution must be a power of two, got {resolution}"
        )));
    }
    Ok(resolution.trailing_zeros() as i32)
}

/// Copies `scale · g` onto the field nodes (node `i` ↔ index `origin + i`).
fn grid_to_field(
    g: &Grid,
    origin: i64,
    scale: f64,
    template: &SampledField,
) -> Result<SampledField> {
    let d = template.dim();
    let n = template.n();
    let max = g.data.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut values = vec![0.0; template.values().len()];
    for (flat, v) in g.data.iter().enumerate() {
        if v.abs() == 0.0 {
            continue;
        }
        let k = g.multi_index(flat);
        let mut pos = 0usize;
        let mut inside = true;
        for &kv in &k {
            let i = kv - origin;
            if i < 0 || i >= n as i64 {
                inside = false;
                break;
            }
            pos = pos * n + i as usize;
        }
        if inside {
            values[pos] = scale * v;
        } else if v.abs() > 1e-12 * max {
            return Err(Error::Contract(
                "expansion extends beyond the requested box".into(),
            ));
        }
    }
    SampledField::new(
        d,
        template.bounds().0,
        template.bounds().1,
        template.resolution(),
        values,
    )
}

/// `ψ^e_{j,k,p}(x) = 2^{jd/p} Π_ν ψ^{e_ν}(2^j x_ν − k_ν)`.
pub fn eval_wavelet(
    sys: &BiorthWaveletSystem,
    e: &[u8],
    j: i32,
    k: &[i64],
    p: f64,
    x: &[f64],
) -> f64 {
    let s = 2f64.powi(j);
    let mut v = 2f64.powf(j as f64 * e.len() as f64 * inv(p));
    for ((&ev, &kv), &xv) in e.iter().zip(k).zip(x) {
        v *= sys.generator(ev).eval(s * xv - kv as f64);
        if v == 0.0 {
            return 0.0;
        }
    }
    v
}

/// Direct summation of the expansion at one point.
pub fn eval_point(c: &CoeffMap, sys: &BiorthWaveletSystem, x: &[f64]) -> f64 {
    let zero = vec![0u8; c.dim()];
    let coarse: f64 = c
        .coarse()
        .iter()
        .map(|(k, v)| v * eval_wavelet(sys, &zero, c.j0(), k, c.p(), x))
        .sum();
    let detail: f64 = c
        .entries()
        .iter()
        .map(|(l, v)| v * eval_wavelet(sys, &l.e, l.j, &l.k, c.p(), x))
        .sum();
    coarse + detail
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn basis_function_projects_to_one_coefficient() {
        let sys = BiorthWaveletSystem::cdf(2, 2).unwrap();
        let mut c = CoeffMap::new(1, 2.0, 2).unwrap();
        c.insert(LambdaIndex::new(vec![1], 3, vec![4]).unwrap(), 1.0)
            .unwrap();
        let f = synthesize(&c, &sys, -1.0, 2.0, 64).unwrap();
        let back = analyze(&f, &sys, 2).unwrap();
        for (l, v) in back.entries() {
            let want = if l.j == 3 && l.k == vec![4] { 1.0 } else { 0.0 };
            assert!((v - want).abs() <= 1e-10, "{l:?} {v}");
        }
        assert!(back.coarse().values().all(|v| v.abs() <= 1e-10));
    }

    #[test]
    fn exact_nodes_match_pointwise_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for (l, ld) in [(2, 2), (3, 3), (4, 2)] {
            let sys = BiorthWaveletSystem::cdf(l, ld).unwrap();
            for d in 1..=2 {
                let mut c = CoeffMap::new(d, 2.0, 1).unwrap();
                c.insert_coarse(vec![0; d], 0.7).unwrap();
                for _ in 0..6 {
                    let mut e: Vec<u8> = (0..d).map(|_| rng.gen_range(0..2)).collect();
                    e[0] = 1;
                    let k = (0..d).map(|_| rng.gen_range(0..5)).collect();
                    c.insert(
                        LambdaIndex::new(e, rng.gen_range(1..4), k).unwrap(),
                        rng.gen_range(-1.0..1.0),
                    )
                    .unwrap();
                }
                let res = 32;
                let f = eval_nodes(&c, &sys, -4.0, 5.0, res).unwrap();
                for i in (0..f.values().len()).step_by(7) {
                    let x = f.node(i);
                    assert!((f.values()[i] - eval_point(&c, &sys, &x)).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn empty_map_synthesizes_zero() {
        let sys = BiorthWaveletSystem::cdf(2, 2).unwrap();
        let c = CoeffMap::new(2, 2.0, 0).unwrap();
        let f = synthesize(&c, &sys, 0.0, 1.0, 8).unwrap();
        assert!(f.values().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn margin_violation_is_reported() {
        let sys = BiorthWaveletSystem::cdf(2, 2).unwrap();
        let f = SampledField::from_fn(1, 0.0, 1.0, 64, |x| x[0]).unwrap();
        assert!(matches!(analyze(&f, &sys, 0), Err(Error::Contract(_))));
    }

    #[test]
    fn synthesis_below_finest_level_rejected() {
        let sys = BiorthWaveletSystem::cdf(2, 2).unwrap();
        let mut c = CoeffMap::new(1, 2.0, 0).unwrap();
        c.insert(LambdaIndex::new(vec![1], 5, vec![0]).unwrap(), 1.0)
            .unwrap();
        assert!(synthesize(&c, &sys, 0.0, 1.0, 16).is_err());
    }
}

//! Dense samples on dyadic grids over a cube.

use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use crate::error::{Error, Result};
use crate::par;
use crate::piecewise::binomial;

/// Values at the nodes `x = lo + i/resolution`, `i ∈ [0, n)^d`, of the cube
/// `[lo, hi]^d`, stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct SampledField {
    d: usize,
    lo: f64,
    hi: f64,
    resolution: usize,
    values: Vec<f64>,
}

impl SampledField {
    pub fn new(d: usize, lo: f64, hi: f64, resolution: usize, values: Vec<f64>) -> Result<Self> {
        let n = Self::check_shape(d, lo, hi, resolution)?;
        if values.len() != n.pow(d as u32) {
            return Err(Error::Dimension {
                context: "sampled field values",
                expected: n.pow(d as u32),
                got: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Contract("field values must be finite".into()));
        }
        Ok(SampledField {
            d,
            lo,
            hi,
            resolution,
            values,
        })
    }

    fn check_shape(d: usize, lo: f64, hi: f64, resolution: usize) -> Result<usize> {
        if d == 0 {
            return Err(Error::Parameter("dimension must be positive".into()));
        }
        if !resolution.is_power_of_two() {
            return Err(Error::Parameter(format!(
                "resolution must be a power of two, got {resolution}"
            )));
        }
        let r = resolution as f64;
        let (a, b) = (lo * r, hi * r);
        if !(lo < hi) || a.fract() != 0.0 || b.fract() != 0.0 {
            return Err(Error::Parameter(format!(
                "box [{lo}, {hi}] must be nonempty with endpoints on the 1/{resolution} grid"
            )));
        }
        Ok((b - a) as usize)
    }

    /// Samples `f` at every node.
    pub fn from_fn<F>(d: usize, lo: f64, hi: f64, resolution: usize, f: F) -> Result<Self>
    where
        F: Fn(&[f64]) -> f64 + Sync + Send,
    {
        let n = Self::check_shape(d, lo, hi, resolution)?;
        let total = n.pow(d as u32);
        let h = 1.0 / resolution as f64;
        let values = par::map_range(total, |flat| {
            let mut x = vec![0.0; d];
            let mut rem = flat;
            for ax in (0..d).rev() {
                x[ax] = lo + (rem % n) as f64 * h;
                rem /= n;
            }
            f(&x)
        });
        Self::new(d, lo, hi, resolution, values)
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn bounds(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    /// `J` with `resolution = 2^J`.
    pub fn level(&self) -> i32 {
        self.resolution.trailing_zeros() as i32
    }

    /// Nodes per axis.
    pub fn n(&self) -> usize {
        ((self.hi - self.lo) * self.resolution as f64) as usize
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Coordinates of the node at flat position `flat`.
    pub fn node(&self, flat: usize) -> Vec<f64> {
        let n = self.n();
        let mut x = vec![0.0; self.d];
        let mut rem = flat;
        for ax in (0..self.d).rev() {
            x[ax] = self.lo + (rem % n) as f64 / self.resolution as f64;
            rem /= n;
        }
        x
    }

    /// All node coordinates, flattened point by point.
    pub fn nodes_flat(&self) -> Vec<f64> {
        (0..self.values.len()).flat_map(|i| self.node(i)).collect()
    }

    fn same_grid(&self, other: &SampledField) -> Result<()> {
        if self.d != other.d
            || self.lo != other.lo
            || self.hi != other.hi
            || self.resolution != other.resolution
        {
            return Err(Error::Contract("fields live on different grids".into()));
        }
        Ok(())
    }

    /// Cell-volume quadrature of `|f|^p` (maximum for `p = ∞`).
    pub fn lp_norm(&self, p: f64) -> f64 {
        lp_of(&self.values, p, self.cell_volume())
    }

    fn cell_volume(&self) -> f64 {
        (self.resolution as f64).powi(-(self.d as i32))
    }

    /// Pointwise difference `self − other`.
    pub fn sub(&self, other: &SampledField) -> Result<SampledField> {
        self.same_grid(other)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a - b)
            .collect();
        Ok(SampledField {
            values,
            ..self.clone()
        })
    }

    /// Writes little-endian doubles to `path` and `{d, box, resolution}` to `path.json`.
    pub fn write(&self, path: &Path) -> Result<()> {
        let bytes: Vec<u8> = self.values.iter().flat_map(|v| v.to_le_bytes()).collect();
        fs::write(path, bytes).map_err(|e| Error::io(path, e))?;
        let side = sidecar(path);
        let meta = json!({ "d": self.d, "box": [self.lo, self.hi], "resolution": self.resolution });
        fs::write(&side, serde_json::to_string_pretty(&meta).unwrap())
            .map_err(|e| Error::io(&side, e))
    }

    /// Reads a field written by [`SampledField::write`].
    pub fn read(path: &Path) -> Result<Self> {
        let side = sidecar(path);
        let text = fs::read_to_string(&side).map_err(|e| Error::io(&side, e))?;
        let meta: serde_json::Value =
            serde_json::from_str(&text).map_err(|e| Error::parse("sidecar", e.to_string()))?;
        let d = meta["d"]
            .as_u64()
            .ok_or_else(|| Error::parse("d", "expected a positive integer"))?
            as usize;
        let lo = meta["box"][0]
            .as_f64()
            .ok_or_else(|| Error::parse("box[0]", "expected a number"))?;
        let hi = meta["box"][1]
            .as_f64()
            .ok_or_else(|| Error::parse("box[1]", "expected a number"))?;
        let res = meta["resolution"]
            .as_u64()
            .ok_or_else(|| Error::parse("resolution", "expected a positive integer"))?
            as usize;
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        if bytes.len() % 8 != 0 {
            return Err(Error::parse("values", "byte length is not a multiple of 8"));
        }
        let values = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Self::new(d, lo, hi, res, values)
    }
}

fn sidecar(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

pub(crate) fn lp_of(values: &[f64], p: f64, cell: f64) -> f64 {
    if p.is_infinite() {
        values.iter().fold(0.0, |m, v| m.max(v.abs()))
    } else {
        (values.iter().map(|v| v.abs().powf(p)).sum::<f64>() * cell).powf(1.0 / p)
    }
}

/// `‖f − g‖_p` by cell quadrature on the shared grid.
pub fn lp_error(f: &SampledField, g: &SampledField, p: f64) -> Result<f64> {
    Ok(f.sub(g)?.lp_norm(p))
}

/// Monte Carlo estimate of `‖u‖_p` over `[lo, hi]^d` (maximum over samples for `p = ∞`).
pub fn lp_norm_monte_carlo<F>(
    u: F,
    d: usize,
    lo: f64,
    hi: f64,
    p: f64,
    samples: usize,
    seed: u64,
) -> f64
where
    F: Fn(&[f64]) -> f64,
{
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let vol = (hi - lo).powi(d as i32);
    let mut x = vec![0.0; d];
    let vals: Vec<f64> = (0..samples)
        .map(|_| {
            x.iter_mut().for_each(|v| *v = rng.gen_range(lo..hi));
            u(&x)
        })
        .collect();
    lp_of(&vals, p, vol / samples as f64)
}

/// Besov seminorm from the modulus of smoothness of order `m = ⌊α⌋ + 1`.
///
/// Uses `t = 2^{−i}` for `i ≥ 0` down to one grid step, shifts `h` along
/// each axis and the main diagonal with dyadic step counts `|h| ≤ t`, zero
/// extension outside the box, and `∫ [t^{−α} ω_m(f,t)_p]^q dt/t ≈
/// Σ_i ln 2 · (2^{iα} ω_m(f, 2^{−i})_p)^q` (maximum for `q = ∞`).
pub fn modulus_seminorm(f: &SampledField, alpha: f64, q: f64, p: f64) -> Result<f64> {
    let m = alpha.floor() as usize + 1;
    let n = f.n();
    if m >= n {
        return Err(Error::Contract(format!(
            "difference order {m} exceeds the grid of {n} nodes per axis"
        )));
    }
    let level = f.level();
    let moduli: Vec<(i32, f64)> = (0..=level)
        .map(|i| {
            (
                i,
                modulus(f, m, 1i64 << (level - i), p, Boundary::ZeroExtension),
            )
        })
        .collect();
    let ln2 = std::f64::consts::LN_2;
    let terms = moduli.iter().map(|(i, w)| 2f64.powf(*i as f64 * alpha) * w);
    Ok(if q.is_infinite() {
        terms.fold(0.0, f64::max)
    } else {
        terms.map(|v| ln2 * v.powf(q)).sum::<f64>().powf(1.0 / q)
    })
}

/// Treatment of differences reaching outside the box.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Boundary {
    /// `f` is zero outside the box.
    ZeroExtension,
    /// Only differences with every node inside the box count.
    Restricted,
}

/// `ω_m(f, t)_p` for `t = steps/resolution`, over dyadic step counts along
/// each axis and the main diagonal.
pub fn modulus(f: &SampledField, m: usize, steps: i64, p: f64, boundary: Boundary) -> f64 {
    let mut directions: Vec<Vec<i64>> = (0..f.d)
        .map(|ax| (0..f.d).map(|b| (b == ax) as i64).collect())
        .collect();
    if f.d > 1 {
        directions.push(vec![1; f.d]);
    }
    let mut omega: f64 = 0.0;
    let mut s = 1i64;
    while s <= steps {
        for dir in &directions {
            let norm = (dir.iter().map(|v| v * v).sum::<i64>() as f64).sqrt();
            if s as f64 * norm > steps as f64 + 1e-9 {
                continue;
            }
            let shift: Vec<i64> = dir.iter().map(|v| v * s).collect();
            omega = omega.max(difference_norm(f, &shift, m, p, boundary));
        }
        s *= 2;
    }
    omega
}

/// `‖Δ_h^m f‖_p` with `h` given in grid steps.
fn difference_norm(f: &SampledField, shift: &[i64], m: usize, p: f64, boundary: Boundary) -> f64 {
    let n = f.n() as i64;
    let d = f.d;
    let weights: Vec<f64> = (0..=m)
        .map(|l| {
            let sign = if (m - l) % 2 == 0 { 1.0 } else { -1.0 };
            sign * binomial(m, l)
        })
        .collect();
    let mm = m as i64;
    let (lo, hi): (Vec<i64>, Vec<i64>) = match boundary {
        // support of Δ^m f: nodes shifted back by up to m·h
        Boundary::ZeroExtension => (
            shift.iter().map(|s| -mm * s.max(&0)).collect(),
            shift.iter().map(|s| n - mm * s.min(&0)).collect(),
        ),
        Boundary::Restricted => (
            shift.iter().map(|s| -mm * s.min(&0)).collect(),
            shift.iter().map(|s| n - mm * s.max(&0)).collect(),
        ),
    };
    if lo.iter().zip(&hi).any(|(a, b)| a >= b) {
        return 0.0;
    }
    let ext: Vec<usize> = lo.iter().zip(&hi).map(|(a, b)| (b - a) as usize).collect();
    let total: usize = ext.iter().product();
    let vals = par::map_range(total, |flat| {
        let mut idx = vec![0i64; d];
        let mut rem = flat;
        for ax in (0..d).rev() {
            idx[ax] = lo[ax] + (rem % ext[ax]) as i64;
            rem /= ext[ax];
        }
        let mut acc = 0.0;
        'terms: for (l, w) in weights.iter().enumerate() {
            let mut pos = 0usize;
            for ax in 0..d {
                let c = idx[ax] + l as i64 * shift[ax];
                if c < 0 || c >= n {
                    continue 'terms;
                }
                pos = pos * n as usize + c as usize;
            }
            acc += w * f.values[pos];
        }
        acc
    });
    lp_of(&vals, p, f.cell_volume())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lp_error_examples() {
        let f = SampledField::from_fn(1, 0.0, 1.0, 64, |x| x[0]).unwrap();
        assert_eq!(lp_error(&f, &f, 2.0).unwrap(), 0.0);
        let g = SampledField::from_fn(1, 0.0, 1.0, 64, |x| x[0] - 0.3).unwrap();
        for p in [1.0, 2.0, 3.5, f64::INFINITY] {
            assert!((lp_error(&f, &g, p).unwrap() - 0.3).abs() < 1e-14);
        }
        let other = SampledField::from_fn(1, 0.0, 1.0, 32, |_| 0.0).unwrap();
        assert!(lp_error(&f, &other, 2.0).is_err());
    }

    #[test]
    fn shape_errors() {
        assert!(SampledField::new(1, 0.0, 1.0, 3, vec![0.0; 3]).is_err());
        assert!(SampledField::new(1, 0.0, 1.0, 4, vec![0.0; 3]).is_err());
        assert!(SampledField::new(1, 0.1, 1.0, 4, vec![0.0; 3]).is_err());
    }

    #[test]
    fn modulus_examples() {
        let c = SampledField::from_fn(2, 0.0, 1.0, 16, |_| 1.0).unwrap();
        // zero extension makes a constant on the box a jump at its edges
        assert!(modulus_seminorm(&c, 0.5, 2.0, 2.0).unwrap() > 0.0);
        let tiny = SampledField::from_fn(1, 0.0, 1.0, 2, |_| 0.0).unwrap();
        assert!(modulus_seminorm(&tiny, 2.5, 2.0, 2.0).is_err());
    }

    #[test]
    fn linear_first_modulus() {
        let f = SampledField::from_fn(1, 0.0, 1.0, 256, |x| x[0]).unwrap();
        for steps in [1, 4, 32] {
            let w = modulus(&f, 1, steps, f64::INFINITY, Boundary::Restricted);
            assert!((w - steps as f64 / 256.0).abs() < 1e-14);
        }
        let c = SampledField::from_fn(1, 0.0, 1.0, 64, |_| 3.0).unwrap();
        assert_eq!(modulus(&c, 2, 8, 2.0, Boundary::Restricted), 0.0);
    }

    #[test]
    fn io_round_trip() {
        let dir = std::env::temp_dir().join(format!("besovnet-field-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("f.bin");
        let f = SampledField::from_fn(2, -1.0, 2.0, 4, |x| x[0] * x[1]).unwrap();
        f.write(&path).unwrap();
        assert_eq!(SampledField::read(&path).unwrap(), f);
        let err = SampledField::read(&dir.join("missing.bin")).unwrap_err();
        assert!(err.to_string().contains("missing.bin"));
        std::fs::remove_dir_all(&dir).unwrap();
    }
}

//! Networks for single wavelets and for whole N-term expansions.
//!
//! A tensor wavelet `ψ^e = ψ^{e_1} ⊗ … ⊗ ψ^{e_d}` is realized as a product
//! network applied to one-dimensional factor networks. ReLU factors are
//! spline approximations multiplied by an exactly representable trapezoid
//! mask, so every factor and hence the product vanishes exactly outside the
//! support. `ψ_λ` then follows by affine precomposition and scaling.

use std::collections::BTreeMap;

use crate::calculus::{add, compose, parallel, precompose_affine, scale, tuple};
use crate::error::{Error, Result};
use crate::expansion::{inv, BesovParams, CoeffMap, LambdaIndex};
use crate::gadgets::{
    hat_basis_relu, mult2_relu, mult_d_relu, mult_d_repu2, spline_to_relu, spline_to_repu2,
    spline_to_repu2_smoothed, REPU_LINEAR_SMOOTHING,
};
use crate::network::{Activation, AffineMap, Layer, Network};
use crate::piecewise::PiecewisePoly;
use crate::wavelets::BiorthWaveletSystem;

/// Smallest smoothing half-width used for RePU linear terms.
pub const REPU_MIN_SMOOTHING: f64 = 1e-7;

/// Accuracy split for one wavelet network.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CompileBudget {
    /// Target `L^p` accuracy `ε` per wavelet.
    pub epsilon: f64,
    pub r_class: u32,
    /// Range bound `max{‖φ‖_∞, ‖ψ‖_∞} + δ` of the product network.
    pub k: f64,
    /// Factor accuracy `ε·max{1, ‖φ‖_∞, ‖ψ‖_∞}^{1−d}/(d 2^d)`.
    pub delta: f64,
    /// Product accuracy `S^{−d/p} ε/2`.
    pub eta: f64,
    /// `S = |supp φ ∪ supp ψ|`.
    pub support_measure: f64,
}

impl CompileBudget {
    pub fn new(
        sys: &BiorthWaveletSystem,
        d: usize,
        p: f64,
        epsilon: f64,
        r_class: u32,
    ) -> Result<Self> {
        if r_class != 1 && r_class != 2 {
            return Err(Error::Parameter(format!(
                "activation class must be 1 or 2, got {r_class}"
            )));
        }
        if r_class == 1 && !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(Error::Parameter(format!(
                "ReLU accuracy ε must lie in (0, 1), got {epsilon}"
            )));
        }
        if !(epsilon > 0.0) {
            return Err(Error::Parameter(format!(
                "accuracy ε must be positive, got {epsilon}"
            )));
        }
        let sup = sys.sup_norm_phi().max(sys.sup_norm_psi());
        let s = sys.support_measure();
        let delta = epsilon * sup.max(1.0).powi(1 - d as i32) / (d as f64 * 2f64.powi(d as i32));
        Ok(CompileBudget {
            epsilon,
            r_class,
            k: sup + delta,
            delta,
            eta: s.powf(-(d as f64) * inv(p)) * epsilon / 2.0,
            support_measure: s,
        })
    }
}

/// `x ↦ min{1, min{x − a, b − x}/w}` clipped below at 0, exactly zero outside `[a, b]`.
pub fn trapezoid_mask(a: f64, b: f64, w: f64) -> Network {
    let relu = Activation::RectPower(1);
    let layer =
        |rows, cols, e: Vec<(usize, usize, f64)>, bias: Vec<f64>, act: Option<Vec<Activation>>| {
            Layer {
                map: AffineMap::new(rows, cols, e, bias).unwrap(),
                activations: act,
            }
        };
    Network::new(
        1,
        vec![
            // t1 = ρ(x − a), t2 = ρ(b − x)
            layer(
                2,
                1,
                vec![(0, 0, 1.0), (1, 0, -1.0)],
                vec![-a, b],
                Some(vec![relu; 2]),
            ),
            // ρ(t1), ρ(t1 − t2)
            layer(
                2,
                2,
                vec![(0, 0, 1.0), (1, 0, 1.0), (1, 1, -1.0)],
                vec![0.0; 2],
                Some(vec![relu; 2]),
            ),
            // m = min{t1, t2} ≥ 0: ρ(m), ρ(m − w)
            layer(
                2,
                2,
                vec![(0, 0, 1.0), (0, 1, -1.0), (1, 0, 1.0), (1, 1, -1.0)],
                vec![0.0, -w],
                Some(vec![relu; 2]),
            ),
            layer(
                1,
                2,
                vec![(0, 0, 1.0 / w), (0, 1, -1.0 / w)],
                vec![0.0],
                None,
            ),
        ],
    )
    .unwrap()
}

/// Largest `w ≤ (b−a)/2` with `sup |v|` on both `w`-margins at most `budget`.
fn mask_margin(v: &PiecewisePoly, budget: f64) -> f64 {
    let (a, b) = v.support().unwrap();
    let edge = |w: f64| v.sup_abs_on(a, a + w).max(v.sup_abs_on(b - w, b));
    let mut hi = 0.5 * (b - a);
    if edge(hi) <= budget {
        return hi;
    }
    let mut lo = 0.0;
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if edge(mid) <= budget {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// One-dimensional factor network for `v`, sup-accurate to `δ`, with
/// exactly the support of `v` (up to roundoff for RePU on the right).
pub fn factor_network(v: &PiecewisePoly, delta: f64, r_class: u32) -> Result<Network> {
    if r_class == 2 {
        // linear terms: sup error Σ|jump|·h/4 ≤ δ, floored against cancellation roundoff
        let jumps: f64 = v
            .truncated_powers()
            .iter()
            .filter_map(|(_, a)| a.get(1))
            .map(|a| a.abs())
            .sum();
        if jumps == 0.0 {
            return spline_to_repu2(v);
        }
        let h = (4.0 * delta / jumps).clamp(REPU_MIN_SMOOTHING, REPU_LINEAR_SMOOTHING);
        return spline_to_repu2_smoothed(v, h);
    }
    if v.degree() <= 1 {
        return hat_basis_relu(v);
    }
    let (a, b) = v
        .support()
        .ok_or_else(|| Error::Contract("factor function is identically zero".into()))?;
    // δ/2 spline, δ/4 mask product, δ/4 mask transition
    let spline = spline_to_relu(v, 0.5 * delta)?;
    let w = mask_margin(v, 0.25 * delta);
    if !(w > 0.0) {
        return Err(Error::Contract(
            "support mask margin collapsed to zero".into(),
        ));
    }
    let mask = trapezoid_mask(a, b, w);
    let k = (v.sup_norm() + delta).max(1.0);
    compose(&tuple(&[spline, mask])?, &mult2_relu(k, 0.25 * delta)?)
}

/// Network for the unscaled tensor generator `ψ^e` (`e = 0` gives `φ ⊗ … ⊗ φ`).
pub fn generator_network(
    sys: &BiorthWaveletSystem,
    e: &[u8],
    budget: &CompileBudget,
) -> Result<Network> {
    let d = e.len();
    let mut cache: BTreeMap<u8, Network> = BTreeMap::new();
    for &bit in e {
        if !cache.contains_key(&bit) {
            cache.insert(
                bit,
                factor_network(sys.generator(bit), budget.delta, budget.r_class)?,
            );
        }
    }
    let factors: Vec<Network> = e.iter().map(|b| cache[b].clone()).collect();
    if d == 1 {
        return Ok(factors.into_iter().next().unwrap());
    }
    let product = match budget.r_class {
        1 => mult_d_relu(d, budget.k, budget.eta.min(0.5))?,
        _ => mult_d_repu2(d)?,
    };
    compose(&parallel(&factors)?, &product)
}

/// `x ↦ 2^{jd/p} R(Φ)(2^j x − k)`.
pub fn place(generator: &Network, j: i32, k: &[i64], p: f64) -> Result<Network> {
    let shift: Vec<f64> = k.iter().map(|&v| v as f64).collect();
    let (net, _) = precompose_affine(generator, 2f64.powi(j), &shift)?;
    let d = k.len() as f64;
    Ok(scale(2f64.powf(j as f64 * d * inv(p)), &net))
}

/// Network for `ψ_λ` in `L^p` normalization with `L^p` accuracy `ε`.
pub fn wavelet_network(
    lambda: &LambdaIndex,
    sys: &BiorthWaveletSystem,
    epsilon: f64,
    p: f64,
    r_class: u32,
) -> Result<Network> {
    let budget = CompileBudget::new(sys, lambda.k.len(), p, epsilon, r_class)?;
    place(
        &generator_network(sys, &lambda.e, &budget)?,
        lambda.j,
        &lambda.k,
        p,
    )
}

/// `ε = N^{−α/d}/2` for `τ < 1`, else `N^{−α/d−1/τ̄}/2`.
pub fn compile_epsilon(n: usize, params: &BesovParams) -> f64 {
    let n = n.max(1) as f64;
    let rate = params.alpha / params.d as f64;
    if params.tau < 1.0 {
        0.5 * n.powf(-rate)
    } else {
        0.5 * n.powf(-rate - inv(params.tau_bar()))
    }
}

/// A compiled expansion and its accounting.
#[derive(Clone, Debug)]
pub struct CompiledExpansion {
    pub network: Network,
    /// Detail terms compiled (coarse terms are extra).
    pub n_terms: usize,
    pub epsilon: f64,
    pub budget: CompileBudget,
    /// `Σ |c_{λ,p}|` over compiled terms, coarse included.
    pub coefficient_sum: f64,
}

/// `Σ_λ c_{λ,p} R(Φ_λ^ε)` over the stored terms of `c`.
pub fn compile_expansion(
    c: &CoeffMap,
    sys: &BiorthWaveletSystem,
    params: &BesovParams,
    r_class: u32,
) -> Result<CompiledExpansion> {
    params.validate()?;
    if params.d != c.dim() {
        return Err(Error::Dimension {
            context: "compile (Besov dimension vs coefficients)",
            expected: c.dim(),
            got: params.d,
        });
    }
    let p = params.p;
    let c = if c.p() == p {
        c.clone()
    } else {
        c.renormalize(p)
    };
    let epsilon = compile_epsilon(c.len(), params);
    let budget = CompileBudget::new(sys, c.dim(), p, epsilon, r_class)?;
    let mut generators: BTreeMap<Vec<u8>, Network> = BTreeMap::new();
    let mut terms: Vec<(Vec<u8>, i32, Vec<i64>, f64)> =
        Vec::with_capacity(c.len() + c.coarse().len());
    let zero = vec![0u8; c.dim()];
    for (k, v) in c.coarse() {
        terms.push((zero.clone(), c.j0(), k.clone(), *v));
    }
    for (l, v) in c.entries() {
        terms.push((l.e.clone(), l.j, l.k.clone(), *v));
    }
    for (e, ..) in &terms {
        if !generators.contains_key(e) {
            generators.insert(e.clone(), generator_network(sys, e, &budget)?);
        }
    }
    let parts = crate::par::map(&terms, |(e, j, k, v)| -> Result<Network> {
        Ok(scale(*v, &place(&generators[e], *j, k, p)?))
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let network = if parts.is_empty() {
        Network::affine(r_class, AffineMap::new(1, c.dim(), vec![], vec![0.0])?)?
    } else {
        add(&parts)?
    };
    Ok(CompiledExpansion {
        network,
        n_terms: c.len(),
        epsilon,
        budget,
        coefficient_sum: c.abs_sum(),
    })
}

/// One sweep row: `(N, W, depth, ε, measured error)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ApproximationRecord {
    pub n: usize,
    pub weights: usize,
    pub depth: usize,
    pub epsilon: f64,
    pub error: f64,
}

impl ApproximationRecord {
    pub const CSV_HEADER: &'static str = "N,weights,depth,epsilon,error_p";

    pub fn to_csv_row(&self) -> String {
        format!(
            "{},{},{},{:e},{:e}",
            self.n, self.weights, self.depth, self.epsilon, self.error
        )
    }
}

/// Bundles a compiled expansion with its measured error.
pub fn compile_report(compiled: &CompiledExpansion, error: f64) -> ApproximationRecord {
    ApproximationRecord {
        n: compiled.n_terms,
        weights: compiled.network.weight_count(),
        depth: compiled.network.depth(),
        epsilon: compiled.epsilon,
        error,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mask_is_exactly_zero_outside() {
        let m = trapezoid_mask(-1.0, 2.0, 0.25);
        for i in 0..=1000 {
            let x = -5.0 + 12.0 * i as f64 / 1000.0;
            let y = m.eval_scalar(x).unwrap();
            if x <= -1.0 || x >= 2.0 {
                assert_eq!(y, 0.0);
            } else {
                let want = ((x + 1.0).min(2.0 - x) / 0.25).min(1.0);
                assert!((y - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn budget_constants() {
        let sys = BiorthWaveletSystem::cdf(2, 2).unwrap();
        let b = CompileBudget::new(&sys, 2, 2.0, 1e-2, 1).unwrap();
        let sup = sys.sup_norm_phi().max(sys.sup_norm_psi());
        assert!((b.delta - 1e-2 / sup / 8.0).abs() < 1e-18);
        assert!((b.eta - 1e-2 / 2.0 / sys.support_measure()).abs() < 1e-18);
        assert!((b.k - sup - b.delta).abs() < 1e-15);
        assert!(CompileBudget::new(&sys, 1, 2.0, 1.5, 1).is_err());
        assert!(CompileBudget::new(&sys, 1, 2.0, 1.5, 2).is_ok());
    }

    #[test]
    fn piecewise_linear_wavelet_is_exact() {
        let sys = BiorthWaveletSystem::cdf(2, 2).unwrap();
        let lambda = LambdaIndex::new(vec![1], 3, vec![2]).unwrap();
        let net = wavelet_network(&lambda, &sys, 0.1, 2.0, 1).unwrap();
        let psi = sys.psi();
        for i in 0..=4096 {
            let x = -1.0 + 3.0 * i as f64 / 4096.0;
            let want = 2f64.powf(1.5) * psi.eval(8.0 * x - 2.0);
            assert!((net.eval_scalar(x).unwrap() - want).abs() <= 1e-12);
        }
    }

    #[test]
    fn single_term_expansion_is_the_scaled_wavelet() {
        let sys = BiorthWaveletSystem::cdf(2, 2).unwrap();
        let params = BesovParams::critical(1.0, f64::INFINITY, 1).unwrap();
        let mut c = CoeffMap::new(1, f64::INFINITY, 0).unwrap();
        let lambda = LambdaIndex::new(vec![1], 2, vec![1]).unwrap();
        c.insert(lambda.clone(), 1.0).unwrap();
        let compiled = compile_expansion(&c, &sys, &params, 1).unwrap();
        let single = scale(
            1.0,
            &wavelet_network(&lambda, &sys, compiled.epsilon, f64::INFINITY, 1).unwrap(),
        );
        assert_eq!(compiled.network, single);
    }

    #[test]
    fn inadmissible_params_rejected() {
        let sys = BiorthWaveletSystem::cdf(2, 2).unwrap();
        let c = CoeffMap::new(1, 2.0, 0).unwrap();
        let bad = BesovParams {
            alpha: 0.1,
            tau: 0.5,
            q: 0.5,
            p: 2.0,
            d: 1,
        };
        let err = compile_expansion(&c, &sys, &bad, 1).unwrap_err();
        assert!(err.to_string().contains("1/τ − 1/p"));
    }

    #[test]
    fn record_csv_row() {
        let r = ApproximationRecord {
            n: 8,
            weights: 100,
            depth: 5,
            epsilon: 0.25,
            error: 1e-3,
        };
        assert_eq!(r.to_csv_row(), "8,100,5,2.5e-1,1e-3");
    }

    fn grid_errors(
        net: &Network,
        sys: &BiorthWaveletSystem,
        lambda: &LambdaIndex,
        p: f64,
        lo: f64,
        hi: f64,
        n: usize,
    ) -> (f64, f64, bool) {
        let h = (hi - lo) / n as f64;
        let mut pts = Vec::with_capacity(2 * (n + 1) * (n + 1));
        for a in 0..=n {
            for b in 0..=n {
                pts.push(lo + h * a as f64);
                pts.push(lo + h * b as f64);
            }
        }
        let vals = net.eval_batch(&pts).unwrap();
        let (mut l2, mut sup, mut exterior_zero) = (0.0, 0.0f64, true);
        for (x, v) in pts.chunks(2).zip(&vals) {
            let want = crate::expansion::eval_wavelet(sys, &lambda.e, lambda.j, &lambda.k, p, x);
            let err = (v - want).abs();
            l2 += err * err * h * h;
            sup = sup.max(err);
            if want == 0.0 && !inside(sys, lambda, x) && *v != 0.0 {
                exterior_zero = false;
            }
        }
        (l2.sqrt(), sup, exterior_zero)
    }

    fn inside(sys: &BiorthWaveletSystem, lambda: &LambdaIndex, x: &[f64]) -> bool {
        let s = 2f64.powi(lambda.j);
        lambda
            .e
            .iter()
            .zip(&lambda.k)
            .zip(x)
            .all(|((&e, &k), &xv)| {
                let (a, b) = sys.generator(e).support().unwrap();
                let t = s * xv - k as f64;
                t > a && t < b
            })
    }

    #[test]
    fn relu_tensor_wavelet_meets_accuracy() {
        let sys = BiorthWaveletSystem::cdf(3, 3).unwrap();
        let lambda = LambdaIndex::new(vec![1, 0], 0, vec![0, 0]).unwrap();
        let net = wavelet_network(&lambda, &sys, 1e-3, 2.0, 1).unwrap();
        let (l2, sup, zero) = grid_errors(&net, &sys, &lambda, 2.0, -4.0, 5.0, 360);
        eprintln!(
            "relu d=2 W={} depth={} l2={l2:e} sup={sup:e}",
            net.weight_count(),
            net.depth()
        );
        assert!(l2 <= 1e-3);
        assert!(zero);
    }

    #[test]
    fn repu_tensor_wavelet_near_roundoff() {
        let sys = BiorthWaveletSystem::cdf(2, 2).unwrap();
        for e in [vec![1, 1], vec![0, 1]] {
            let lambda = LambdaIndex::new(e, 1, vec![1, -1]).unwrap();
            let net = wavelet_network(&lambda, &sys, 1e-6, 2.0, 2).unwrap();
            assert_eq!(
                net.weight_count(),
                wavelet_network(&lambda, &sys, 1e-1, 2.0, 2)
                    .unwrap()
                    .weight_count()
            );
            let (l2, sup, _) = grid_errors(&net, &sys, &lambda, 2.0, -2.0, 3.0, 400);
            eprintln!("repu d=2 W={} l2={l2:e} sup={sup:e}", net.weight_count());
            assert!(l2 <= 5e-7 && sup <= 5e-6);
        }
    }
}

//! CDF biorthogonal B-spline wavelets.
//!
//! Masks follow `φ = Σ_k h_k φ(2·−k)` with `Σ_k h_k = 2`, and the wavelet is
//! `ψ = Σ_k g_k φ(2·−k)` with `g_k = (−1)^k h̃_{1−k}`.

use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::piecewise::{binomial, PiecewisePoly};

const BIORTH_TOL: f64 = 1e-12;

/// Finitely supported filter `(c_offset, …, c_{offset+len−1})`.
#[derive(Clone, Debug, PartialEq)]
pub struct Mask {
    coeffs: Vec<f64>,
    offset: i64,
}

impl Mask {
    pub fn new(coeffs: Vec<f64>, offset: i64) -> Result<Self> {
        if coeffs.is_empty() || coeffs[0] == 0.0 || *coeffs.last().unwrap() == 0.0 {
            return Err(Error::Parameter(
                "mask must have nonzero end coefficients".into(),
            ));
        }
        Ok(Mask { coeffs, offset })
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn offset(&self) -> i64 {
        self.offset
    }

    /// Index of the last stored coefficient.
    pub fn last(&self) -> i64 {
        self.offset + self.coeffs.len() as i64 - 1
    }

    pub fn get(&self, k: i64) -> f64 {
        let i = k - self.offset;
        if i < 0 || i >= self.coeffs.len() as i64 {
            0.0
        } else {
            self.coeffs[i as usize]
        }
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// `(k, c_k)` pairs.
    pub fn iter(&self) -> impl Iterator<Item = (i64, f64)> + '_ {
        self.coeffs
            .iter()
            .enumerate()
            .map(move |(i, &c)| (self.offset + i as i64, c))
    }

    /// `k ↦ (−1)^k c_{1−k}`.
    fn alternating_flip(&self) -> Mask {
        let n = self.coeffs.len() as i64;
        let offset = 1 - self.last();
        let coeffs = (0..n)
            .map(|i| {
                let k = offset + i;
                let sign = if k.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
                sign * self.get(1 - k)
            })
            .collect();
        Mask { coeffs, offset }
    }

    fn to_json(&self) -> Value {
        json!({ "offset": self.offset, "coeffs": self.coeffs })
    }
}

/// `Σ_k a_k b_{k+2m}`.
fn correlation(a: &Mask, b: &Mask, m: i64) -> f64 {
    a.iter().map(|(k, c)| c * b.get(k + 2 * m)).sum()
}

fn check_biorthogonal(a: &Mask, b: &Mask, expect_delta: bool, what: &str) -> Result<()> {
    let lo = (b.offset() - a.last()).div_euclid(2) - 1;
    let hi = (b.last() - a.offset()).div_euclid(2) + 1;
    for m in lo..=hi {
        let want = if expect_delta && m == 0 { 2.0 } else { 0.0 };
        let got = correlation(a, b, m);
        if (got - want).abs() > BIORTH_TOL {
            return Err(Error::Contract(format!(
                "{what}: correlation at shift {m} is {got}, expected {want}"
            )));
        }
    }
    Ok(())
}

/// CDF system of primal order `L` and dual order `L̃`.
#[derive(Clone, Debug)]
pub struct BiorthWaveletSystem {
    l: usize,
    l_dual: usize,
    h: Mask,
    h_dual: Mask,
    g: Mask,
    g_dual: Mask,
    phi: PiecewisePoly,
    psi: PiecewisePoly,
    sup_norm_phi: f64,
    sup_norm_psi: f64,
    support_measure: f64,
}

/// Cardinal B-spline of degree `L − 1` on `[0, L]`.
pub fn scaling_pp(l: usize) -> Result<PiecewisePoly> {
    if l < 2 {
        return Err(Error::Parameter(format!(
            "scaling order L must be ≥ 2, got {l}"
        )));
    }
    let degree = l - 1;
    let fact: f64 = (1..=degree).map(|i| i as f64).product();
    let terms: Vec<(f64, usize, f64)> = (0..=l)
        .map(|k| {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            (k as f64, degree, sign * binomial(l, k) / fact)
        })
        .collect();
    PiecewisePoly::from_truncated_powers((0..=l).map(|k| k as f64).collect(), &terms)
}

/// `ψ = Σ_k g_k φ(2·−k)`.
pub fn wavelet_pp(sys: &BiorthWaveletSystem) -> Result<PiecewisePoly> {
    build_psi(&sys.phi, &sys.g)
}

/// Piecewise Horner evaluation, zero outside the support.
pub fn eval_pp(pp: &PiecewisePoly, x: f64) -> f64 {
    pp.eval(x)
}

fn build_psi(phi: &PiecewisePoly, g: &Mask) -> Result<PiecewisePoly> {
    let parts: Vec<PiecewisePoly> = g
        .iter()
        .map(|(k, _)| phi.dilate_translate(2.0, k as f64))
        .collect::<Result<_>>()?;
    let terms: Vec<(f64, &PiecewisePoly)> = g.iter().map(|(_, c)| c).zip(&parts).collect();
    PiecewisePoly::linear_combination(&terms)
}

fn poly_mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// Dual mask: `2 ((1+z)/2)^{L̃} Σ_{n<K} C(K−1+n, n) ((2 − z − z⁻¹)/4)^n`, `K = (L+L̃)/2`,
/// the minimal symmetric solution of the Bezout identity, shifted to share
/// the primal centre.
fn dual_mask(l: usize, l_dual: usize) -> Result<Mask> {
    let k = (l + l_dual) / 2;
    // Laurent polynomials stored from z^{-(K−1)}
    let y = [-0.25, 0.5, -0.25];
    let mut p = vec![0.0; 2 * k - 1];
    let mut y_pow = vec![1.0];
    for n in 0..k {
        let c = binomial(k - 1 + n, n);
        let shift = (k - 1) - n;
        for (i, v) in y_pow.iter().enumerate() {
            p[shift + i] += c * v;
        }
        y_pow = poly_mul(&y_pow, &y);
    }
    let mut sym = p;
    for _ in 0..l_dual {
        sym = poly_mul(&sym, &[0.5, 0.5]);
    }
    let coeffs: Vec<f64> = sym.iter().map(|c| 2.0 * c).collect();
    Mask::new(coeffs, 1 - l_dual as i64)
}

impl BiorthWaveletSystem {
    /// Builds CDF(`L`, `L̃`) and verifies biorthogonality and vanishing moments.
    pub fn cdf(l: usize, l_dual: usize) -> Result<Self> {
        if l < 2 {
            return Err(Error::Parameter(format!(
                "primal order L must be ≥ 2, got {l}"
            )));
        }
        if l_dual < 1 || (l + l_dual) % 2 != 0 {
            return Err(Error::Parameter(format!(
                "orders must satisfy L̃ ≥ 1 and L + L̃ even, got ({l}, {l_dual})"
            )));
        }
        let scale = 2f64.powi(1 - l as i32);
        let h = Mask::new((0..=l).map(|k| scale * binomial(l, k)).collect(), 0)?;
        let h_dual = dual_mask(l, l_dual)?;
        let g = h_dual.alternating_flip();
        let g_dual = h.alternating_flip();
        check_biorthogonal(&h, &h_dual, true, "h/h̃")?;
        check_biorthogonal(&g, &g_dual, true, "g/g̃")?;
        check_biorthogonal(&h, &g_dual, false, "h/g̃")?;
        check_biorthogonal(&g, &h_dual, false, "g/h̃")?;

        let phi = scaling_pp(l)?;
        let psi = build_psi(&phi, &g)?;
        let sup_norm_psi = psi.sup_norm();
        for m in 0..l_dual {
            let (a, b) = psi.support().unwrap();
            let scale = a.abs().max(b.abs()).powi(m as i32 + 1) * sup_norm_psi;
            if psi.moment(m).abs() > 1e-8 * scale.max(1.0) {
                return Err(Error::Contract(format!("ψ moment {m} does not vanish")));
            }
        }
        let (pa, pb) = phi.support().unwrap();
        let (qa, qb) = psi.support().unwrap();
        let support_measure = if qb < pa || pb < qa {
            (pb - pa) + (qb - qa)
        } else {
            pb.max(qb) - pa.min(qa)
        };
        Ok(BiorthWaveletSystem {
            l,
            l_dual,
            sup_norm_phi: phi.sup_norm(),
            sup_norm_psi,
            h,
            h_dual,
            g,
            g_dual,
            phi,
            psi,
            support_measure,
        })
    }

    pub fn l(&self) -> usize {
        self.l
    }

    pub fn l_dual(&self) -> usize {
        self.l_dual
    }

    pub fn h(&self) -> &Mask {
        &self.h
    }

    pub fn h_dual(&self) -> &Mask {
        &self.h_dual
    }

    pub fn g(&self) -> &Mask {
        &self.g
    }

    pub fn g_dual(&self) -> &Mask {
        &self.g_dual
    }

    pub fn phi(&self) -> &PiecewisePoly {
        &self.phi
    }

    pub fn psi(&self) -> &PiecewisePoly {
        &self.psi
    }

    pub fn sup_norm_phi(&self) -> f64 {
        self.sup_norm_phi
    }

    pub fn sup_norm_psi(&self) -> f64 {
        self.sup_norm_psi
    }

    /// `|supp φ ∪ supp ψ|`.
    pub fn support_measure(&self) -> f64 {
        self.support_measure
    }

    /// Sobolev regularity of `φ`, `L − 1/2` (metadata).
    pub fn regularity(&self) -> f64 {
        self.l as f64 - 0.5
    }

    /// Integrability exponent of `φ` (metadata): bounded, so `∞`.
    pub fn integrability(&self) -> f64 {
        f64::INFINITY
    }

    /// `φ` (`e = 0`) or `ψ` (`e = 1`).
    pub fn generator(&self, e: u8) -> &PiecewisePoly {
        if e == 0 {
            &self.phi
        } else {
            &self.psi
        }
    }

    /// Masks, piecewise forms and metadata as JSON.
    pub fn to_json(&self) -> Value {
        let pp =
            |p: &PiecewisePoly| json!({ "breakpoints": p.breakpoints(), "coeffs": p.coeffs() });
        json!({
            "L": self.l,
            "L_dual": self.l_dual,
            "h": self.h.to_json(),
            "h_dual": self.h_dual.to_json(),
            "g": self.g.to_json(),
            "g_dual": self.g_dual.to_json(),
            "phi": pp(&self.phi),
            "psi": pp(&self.psi),
            "sup_norm_phi": self.sup_norm_phi,
            "sup_norm_psi": self.sup_norm_psi,
            "support_measure": self.support_measure,
            "regularity": self.regularity(),
            "integrability": "inf",
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cdf22_masks() {
        let s = BiorthWaveletSystem::cdf(2, 2).unwrap();
        assert_eq!(s.h().coeffs(), &[0.5, 1.0, 0.5]);
        assert_eq!(s.h().offset(), 0);
        assert_eq!(s.h_dual().offset(), -1);
        let want = [-0.25, 0.5, 1.5, 0.5, -0.25];
        for (a, b) in s.h_dual().coeffs().iter().zip(want) {
            assert!((a - b).abs() < 1e-15);
        }
        assert_eq!(s.psi().support(), Some((-1.0, 2.0)));
        assert_eq!(s.support_measure(), 3.0);
        assert!(s.psi().moment(1).abs() < 1e-10);
    }

    #[test]
    fn parameter_errors() {
        assert!(BiorthWaveletSystem::cdf(1, 1).is_err());
        assert!(BiorthWaveletSystem::cdf(2, 1).is_err());
        assert!(BiorthWaveletSystem::cdf(3, 0).is_err());
    }

    #[test]
    fn scaling_values() {
        let hat = scaling_pp(2).unwrap();
        assert_eq!(eval_pp(&hat, 1.0), 1.0);
        assert_eq!(eval_pp(&hat, 0.5), 0.5);
        assert_eq!(eval_pp(&hat, 2.5), 0.0);
        assert_eq!(eval_pp(&hat, -3.0), 0.0);
        assert!((eval_pp(&scaling_pp(3).unwrap(), 1.5) - 0.75).abs() < 1e-15);
    }

    #[test]
    fn systems_used_by_the_harness() {
        for (l, ld) in [(2, 2), (2, 4), (3, 1), (3, 3), (4, 2), (4, 4)] {
            let s = BiorthWaveletSystem::cdf(l, ld).unwrap();
            assert_eq!(s.psi().degree(), l - 1);
            assert!(s.psi().is_continuous());
            assert!(s.psi().integral().abs() < 1e-10);
            let sum: f64 = s.h_dual().coeffs().iter().sum();
            assert!((sum - 2.0).abs() < 1e-13);
            for b in s.psi().breakpoints() {
                assert_eq!((2.0 * b).fract(), 0.0);
            }
        }
    }
}

//! Compactly supported piecewise polynomials.
//!
//! Each piece `[ξ_i, ξ_{i+1})` stores the coefficients of its polynomial in
//! the local basis `(x − ξ_i)^s`. The function vanishes outside
//! `[ξ_0, ξ_M]`.

use crate::error::{Error, Result};

const CONT_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct PiecewisePoly {
    breaks: Vec<f64>,
    coeffs: Vec<Vec<f64>>,
    degree: usize,
    continuous: bool,
}

pub(crate) fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Re-expands local coefficients around a point shifted by `delta`.
fn taylor_shift(c: &[f64], delta: f64) -> Vec<f64> {
    (0..c.len())
        .map(|j| {
            (j..c.len())
                .map(|s| c[s] * binomial(s, j) * delta.powi((s - j) as i32))
                .sum()
        })
        .collect()
}

fn horner(c: &[f64], u: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &a| acc * u + a)
}

impl PiecewisePoly {
    /// Builds from breakpoints `ξ_0 < … < ξ_M` and `M` local coefficient
    /// vectors. The degree is the longest vector minus one.
    pub fn new(breaks: Vec<f64>, coeffs: Vec<Vec<f64>>) -> Result<Self> {
        if breaks.is_empty() {
            if !coeffs.is_empty() {
                return Err(Error::Parameter("pieces given without breakpoints".into()));
            }
            return Ok(Self::zero());
        }
        if breaks.iter().any(|b| !b.is_finite()) || breaks.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Parameter(
                "breakpoints must be finite and strictly increasing".into(),
            ));
        }
        if coeffs.len() + 1 != breaks.len() {
            return Err(Error::Dimension {
                context: "piecewise polynomial pieces",
                expected: breaks.len() - 1,
                got: coeffs.len(),
            });
        }
        let degree = coeffs.iter().map(|c| c.len().max(1) - 1).max().unwrap_or(0);
        let coeffs: Vec<Vec<f64>> = coeffs
            .into_iter()
            .map(|mut c| {
                c.resize(degree + 1, 0.0);
                c
            })
            .collect();
        let mut pp = PiecewisePoly {
            breaks,
            coeffs,
            degree,
            continuous: true,
        };
        pp.continuous = pp.max_jump() <= CONT_TOL * pp.sup_norm().max(1.0);
        Ok(pp)
    }

    /// The zero function (no pieces).
    pub fn zero() -> Self {
        PiecewisePoly {
            breaks: Vec::new(),
            coeffs: Vec::new(),
            degree: 0,
            continuous: true,
        }
    }

    /// `Σ a (x − κ)_+^s` restricted to pieces between the given breakpoints.
    ///
    /// The sum must vanish beyond the last breakpoint; the caller supplies
    /// every knot among `breaks`.
    pub fn from_truncated_powers(breaks: Vec<f64>, terms: &[(f64, usize, f64)]) -> Result<Self> {
        let degree = terms.iter().map(|t| t.1).max().unwrap_or(0);
        let mut coeffs = Vec::with_capacity(breaks.len().saturating_sub(1));
        for w in breaks.windows(2) {
            let left = w[0];
            let mut c = vec![0.0; degree + 1];
            for &(knot, s, a) in terms.iter().filter(|t| t.0 <= left) {
                let delta = left - knot;
                for (j, cj) in c.iter_mut().enumerate().take(s + 1) {
                    *cj += a * binomial(s, j) * delta.powi((s - j) as i32);
                }
            }
            coeffs.push(c);
        }
        Self::new(breaks, coeffs)
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breaks
    }

    pub fn coeffs(&self) -> &[Vec<f64>] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn num_pieces(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_continuous(&self) -> bool {
        self.continuous
    }

    /// `[ξ_0, ξ_M]`, or `None` for the zero function.
    pub fn support(&self) -> Option<(f64, f64)> {
        Some((*self.breaks.first()?, *self.breaks.last()?))
    }

    pub fn eval(&self, x: f64) -> f64 {
        let Some((a, b)) = self.support() else {
            return 0.0;
        };
        if !(a..b).contains(&x) {
            return 0.0;
        }
        let i = self.breaks.partition_point(|&t| t <= x) - 1;
        horner(&self.coeffs[i], x - self.breaks[i])
    }

    /// Derivative, as a piecewise polynomial on the same breakpoints.
    pub fn derivative(&self) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .map(|c| (1..c.len()).map(|s| s as f64 * c[s]).collect())
            .collect();
        Self::new(self.breaks.clone(), coeffs).unwrap()
    }

    /// `c · v`.
    pub fn scale(&self, c: f64) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .map(|p| p.iter().map(|a| c * a).collect())
            .collect();
        Self::new(self.breaks.clone(), coeffs).unwrap()
    }

    /// `x ↦ v(a x − k)` for `a > 0`.
    pub fn dilate_translate(&self, a: f64, k: f64) -> Result<Self> {
        if !(a > 0.0) {
            return Err(Error::Parameter("dilation factor must be positive".into()));
        }
        let breaks = self.breaks.iter().map(|t| (t + k) / a).collect();
        let coeffs = self
            .coeffs
            .iter()
            .map(|p| {
                p.iter()
                    .enumerate()
                    .map(|(s, c)| c * a.powi(s as i32))
                    .collect()
            })
            .collect();
        Self::new(breaks, coeffs)
    }

    /// `Σ c_i v_i` on the merged breakpoints.
    pub fn linear_combination(terms: &[(f64, &PiecewisePoly)]) -> Result<Self> {
        let mut breaks: Vec<f64> = terms
            .iter()
            .filter(|(c, _)| *c != 0.0)
            .flat_map(|(_, v)| v.breaks.iter().copied())
            .collect();
        breaks.sort_by(f64::total_cmp);
        breaks.dedup();
        if breaks.len() < 2 {
            return Ok(Self::zero());
        }
        let degree = terms.iter().map(|(_, v)| v.degree).max().unwrap_or(0);
        let mut coeffs = vec![vec![0.0; degree + 1]; breaks.len() - 1];
        for &(c, v) in terms.iter().filter(|(c, _)| *c != 0.0) {
            for (i, w) in breaks.windows(2).enumerate() {
                let mid = 0.5 * (w[0] + w[1]);
                let Some((a, b)) = v.support() else { continue };
                if !(a..b).contains(&mid) {
                    continue;
                }
                let p = v.breaks.partition_point(|&t| t <= mid) - 1;
                let local = taylor_shift(&v.coeffs[p], w[0] - v.breaks[p]);
                for (dst, src) in coeffs[i].iter_mut().zip(local) {
                    *dst += c * src;
                }
            }
        }
        Self::new(breaks, coeffs)
    }

    /// Truncated-power form `v = Σ_i Σ_s a_{i,s} (x − ξ_i)_+^s`.
    ///
    /// Entry `i` holds `(ξ_i, [a_{i,0}, …, a_{i,t}])`, the jumps of the local
    /// Taylor coefficients at `ξ_i`. Valid on all of `R`.
    pub fn truncated_powers(&self) -> Vec<(f64, Vec<f64>)> {
        let m = self.coeffs.len();
        (0..self.breaks.len())
            .map(|i| {
                let right = if i < m {
                    self.coeffs[i].clone()
                } else {
                    vec![0.0; self.degree + 1]
                };
                let left = if i > 0 {
                    taylor_shift(&self.coeffs[i - 1], self.breaks[i] - self.breaks[i - 1])
                } else {
                    vec![0.0; self.degree + 1]
                };
                (
                    self.breaks[i],
                    right.iter().zip(&left).map(|(r, l)| r - l).collect(),
                )
            })
            .collect()
    }

    /// Largest value jump across any breakpoint, endpoints included.
    pub fn max_jump(&self) -> f64 {
        self.truncated_powers()
            .iter()
            .map(|(_, a)| a[0].abs())
            .fold(0.0, f64::max)
    }

    /// `∫ x^m v(x) dx`, exact up to roundoff.
    pub fn moment(&self, m: usize) -> f64 {
        let mut total = 0.0;
        for (i, c) in self.coeffs.iter().enumerate() {
            let xi = self.breaks[i];
            let h = self.breaks[i + 1] - xi;
            for (s, cs) in c.iter().enumerate() {
                for j in 0..=m {
                    let p = (s + j + 1) as i32;
                    total += cs * binomial(m, j) * xi.powi((m - j) as i32) * h.powi(p) / p as f64;
                }
            }
        }
        total
    }

    pub fn integral(&self) -> f64 {
        self.moment(0)
    }

    /// `sup |v|` over `[lo, hi]`, from piece endpoints and derivative roots.
    pub fn sup_abs_on(&self, lo: f64, hi: f64) -> f64 {
        let mut best: f64 = 0.0;
        for (i, c) in self.coeffs.iter().enumerate() {
            let (l, r) = (self.breaks[i].max(lo), self.breaks[i + 1].min(hi));
            if l > r {
                continue;
            }
            let f = |x: f64| horner(c, x - self.breaks[i]);
            best = best.max(f(l).abs()).max(f(r).abs());
            if self.degree < 2 || l == r {
                continue;
            }
            let dc: Vec<f64> = (1..c.len()).map(|s| s as f64 * c[s]).collect();
            let df = |x: f64| horner(&dc, x - self.breaks[i]);
            const SUB: usize = 64;
            let step = (r - l) / SUB as f64;
            for q in 0..SUB {
                let (mut u, mut v) = (l + q as f64 * step, l + (q + 1) as f64 * step);
                let (du, dv) = (df(u), df(v));
                if du == 0.0 {
                    best = best.max(f(u).abs());
                }
                if du * dv >= 0.0 {
                    continue;
                }
                for _ in 0..60 {
                    let mid = 0.5 * (u + v);
                    if df(mid) * du > 0.0 {
                        u = mid;
                    } else {
                        v = mid;
                    }
                }
                best = best.max(f(0.5 * (u + v)).abs());
            }
        }
        best
    }

    /// `sup_R |v|`.
    pub fn sup_norm(&self) -> f64 {
        match self.support() {
            Some((a, b)) => self.sup_abs_on(a, b),
            None => 0.0,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn hat2() -> PiecewisePoly {
        PiecewisePoly::new(vec![0.0, 1.0, 2.0], vec![vec![0.0, 1.0], vec![1.0, -1.0]]).unwrap()
    }

    #[test]
    fn hat_basics() {
        let h = hat2();
        assert!(h.is_continuous());
        assert_eq!(h.eval(1.0), 1.0);
        assert_eq!(h.eval(0.5), 0.5);
        assert_eq!(h.eval(-1.0), 0.0);
        assert_eq!(h.eval(2.0), 0.0);
        assert_eq!(h.integral(), 1.0);
        assert_eq!(h.moment(1), 1.0);
        assert_eq!(h.sup_norm(), 1.0);
        let tp = h.truncated_powers();
        let slopes: Vec<f64> = tp.iter().map(|(_, a)| a[1]).collect();
        assert_eq!(slopes, vec![1.0, -2.0, 1.0]);
    }

    #[test]
    fn discontinuity_detected() {
        let step = PiecewisePoly::new(vec![0.0, 1.0], vec![vec![1.0]]).unwrap();
        assert!(!step.is_continuous());
        assert_eq!(step.max_jump(), 1.0);
        assert!(PiecewisePoly::new(vec![1.0, 0.0], vec![vec![1.0]]).is_err());
    }

    #[test]
    fn truncated_power_roundtrip_quadratic_bspline() {
        // (1/2) Σ (−1)^k C(3,k) (x−k)_+^2
        let terms: Vec<(f64, usize, f64)> = (0..4)
            .map(|k| (k as f64, 2, 0.5 * [1.0, -3.0, 3.0, -1.0][k]))
            .collect();
        let b = PiecewisePoly::from_truncated_powers(vec![0.0, 1.0, 2.0, 3.0], &terms).unwrap();
        assert!(b.is_continuous());
        assert!((b.eval(1.5) - 0.75).abs() < 1e-15);
        assert!((b.sup_norm() - 0.75).abs() < 1e-12);
        assert!((b.integral() - 1.0).abs() < 1e-14);
        let back = b.truncated_powers();
        for (k, (knot, a)) in back.iter().enumerate() {
            assert_eq!(*knot, k as f64);
            assert!((a[2] - terms[k].2).abs() < 1e-14);
            assert!(a[0].abs() < 1e-14 && a[1].abs() < 1e-14);
        }
    }

    #[test]
    fn dilate_and_combine() {
        let h = hat2();
        let d = h.dilate_translate(2.0, 1.0).unwrap();
        assert_eq!(d.support(), Some((0.5, 1.5)));
        assert_eq!(d.eval(1.0), 1.0);
        let sum = PiecewisePoly::linear_combination(&[(1.0, &h), (-0.5, &d)]).unwrap();
        for i in 0..100 {
            let x = -0.5 + 3.0 * i as f64 / 99.0;
            assert!((sum.eval(x) - (h.eval(x) - 0.5 * d.eval(x))).abs() < 1e-14);
        }
    }

    proptest! {
        #[test]
        fn truncated_powers_reproduce(coeffs in proptest::collection::vec(
            proptest::collection::vec(-2.0f64..2.0, 3), 1..6), x in -1.0f64..7.0) {
            let breaks: Vec<f64> = (0..=coeffs.len()).map(|i| i as f64).collect();
            let v = PiecewisePoly::new(breaks, coeffs).unwrap();
            let tp = v.truncated_powers();
            let mut direct = 0.0;
            for (knot, a) in &tp {
                if x >= *knot {
                    for (s, c) in a.iter().enumerate() {
                        direct += c * (x - knot).powi(s as i32);
                    }
                }
            }
            prop_assert!((direct - v.eval(x)).abs() < 1e-9);
        }
    }
}

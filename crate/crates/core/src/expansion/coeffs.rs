//! Wavelet coefficient maps, Besov seminorms and N-term selection.

use std::collections::BTreeMap;

use crate::error::{Error, Result};

/// `λ = (e, j, k)`; ordered by `(j, e, k)`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LambdaIndex {
    pub j: i32,
    pub e: Vec<u8>,
    pub k: Vec<i64>,
}

impl LambdaIndex {
    pub fn new(e: Vec<u8>, j: i32, k: Vec<i64>) -> Result<Self> {
        if e.len() != k.len() {
            return Err(Error::Dimension {
                context: "wavelet index (e vs k)",
                expected: e.len(),
                got: k.len(),
            });
        }
        if e.iter().any(|&b| b > 1) || e.iter().all(|&b| b == 0) {
            return Err(Error::Parameter(
                "e must be a nonzero element of {0,1}^d".into(),
            ));
        }
        Ok(LambdaIndex { j, e, k })
    }

    /// `e` as a bitmask with bit `ν` for coordinate `ν`.
    pub fn e_bits(&self) -> usize {
        self.e
            .iter()
            .enumerate()
            .map(|(i, &b)| (b as usize) << i)
            .sum()
    }
}

pub(crate) fn e_from_bits(bits: usize, d: usize) -> Vec<u8> {
    (0..d).map(|i| ((bits >> i) & 1) as u8).collect()
}

/// `1/p` with `1/∞ = 0`.
pub fn inv(p: f64) -> f64 {
    if p.is_infinite() {
        0.0
    } else {
        1.0 / p
    }
}

/// Sparse expansion `Σ_k c_k φ_{j0,k,p} + Σ_λ c_λ ψ_{λ,p}` with
/// `ψ_{λ,p} = 2^{jd/p} ψ^e(2^j · − k)`.
#[derive(Clone, Debug, PartialEq)]
pub struct CoeffMap {
    d: usize,
    p: f64,
    j0: i32,
    entries: BTreeMap<LambdaIndex, f64>,
    coarse: BTreeMap<Vec<i64>, f64>,
}

impl CoeffMap {
    pub fn new(d: usize, p: f64, j0: i32) -> Result<Self> {
        if d == 0 {
            return Err(Error::Parameter("dimension must be positive".into()));
        }
        if !(p > 0.0) {
            return Err(Error::Parameter(format!(
                "normalization p must be positive, got {p}"
            )));
        }
        Ok(CoeffMap {
            d,
            p,
            j0,
            entries: BTreeMap::new(),
            coarse: BTreeMap::new(),
        })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    /// Normalization exponent `p`.
    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn j0(&self) -> i32 {
        self.j0
    }

    /// Finest detail level, or `j0 − 1` without details.
    pub fn j_max(&self) -> i32 {
        self.entries
            .keys()
            .map(|l| l.j)
            .max()
            .unwrap_or(self.j0 - 1)
    }

    pub fn entries(&self) -> &BTreeMap<LambdaIndex, f64> {
        &self.entries
    }

    pub fn coarse(&self) -> &BTreeMap<Vec<i64>, f64> {
        &self.coarse
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty() && self.coarse.is_empty()
    }

    pub fn insert(&mut self, lambda: LambdaIndex, value: f64) -> Result<()> {
        if lambda.k.len() != self.d {
            return Err(Error::Dimension {
                context: "coefficient index",
                expected: self.d,
                got: lambda.k.len(),
            });
        }
        if lambda.j < self.j0 {
            return Err(Error::Contract(format!(
                "detail level {} below coarsest level {}",
                lambda.j, self.j0
            )));
        }
        if !value.is_finite() {
            return Err(Error::Contract("coefficients must be finite".into()));
        }
        self.entries.insert(lambda, value);
        Ok(())
    }

    pub fn insert_coarse(&mut self, k: Vec<i64>, value: f64) -> Result<()> {
        if k.len() != self.d {
            return Err(Error::Dimension {
                context: "coarse index",
                expected: self.d,
                got: k.len(),
            });
        }
        if !value.is_finite() {
            return Err(Error::Contract("coefficients must be finite".into()));
        }
        self.coarse.insert(k, value);
        Ok(())
    }

    /// Same metadata, no coefficients.
    pub fn empty_like(&self) -> Self {
        CoeffMap {
            d: self.d,
            p: self.p,
            j0: self.j0,
            entries: BTreeMap::new(),
            coarse: BTreeMap::new(),
        }
    }

    /// `Σ |c|` over details and coarse terms.
    pub fn abs_sum(&self) -> f64 {
        self.entries
            .values()
            .chain(self.coarse.values())
            .map(|c| c.abs())
            .sum()
    }

    /// Per-entry scaling `2^{−jd(1/to − 1/from)}` to the `L^to` normalization.
    pub fn renormalize(&self, to_p: f64) -> Self {
        let shift = inv(to_p) - inv(self.p);
        let factor = |j: i32| 2f64.powf(-(j as f64) * self.d as f64 * shift);
        let fc = factor(self.j0);
        CoeffMap {
            d: self.d,
            p: to_p,
            j0: self.j0,
            entries: self
                .entries
                .iter()
                .map(|(l, c)| (l.clone(), c * factor(l.j)))
                .collect(),
            coarse: self
                .coarse
                .iter()
                .map(|(k, c)| (k.clone(), c * fc))
                .collect(),
        }
    }

    /// Splits into the `n` largest details (plus all coarse terms) and the rest.
    ///
    /// Ties are broken by index order.
    pub fn n_term_partition(&self, n: usize) -> Result<(Self, Self)> {
        if n == 0 {
            return Err(Error::Parameter("N must be positive".into()));
        }
        let mut order: Vec<(&LambdaIndex, f64)> =
            self.entries.iter().map(|(l, c)| (l, *c)).collect();
        // stable sort keeps index order among equal magnitudes
        order.sort_by(|a, b| b.1.abs().total_cmp(&a.1.abs()));
        let mut kept = self.empty_like();
        kept.coarse = self.coarse.clone();
        let mut dropped = self.empty_like();
        for (i, (l, c)) in order.into_iter().enumerate() {
            let target = if i < n { &mut kept } else { &mut dropped };
            target.entries.insert(l.clone(), c);
        }
        Ok((kept, dropped))
    }

    /// CSV rows `e,j,k_1,…,k_d,value`; coarse rows carry `e = 0…0` and `j = j0`.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["e".to_string(), "j".to_string()];
        header.extend((1..=self.d).map(|i| format!("k{i}")));
        header.push("value".into());
        let csv_err = |e: csv::Error| Error::Contract(format!("csv encoding failed: {e}"));
        w.write_record(&header).map_err(csv_err)?;
        let zeros = "0".repeat(self.d);
        for (k, c) in &self.coarse {
            let mut row = vec![zeros.clone(), self.j0.to_string()];
            row.extend(k.iter().map(|v| v.to_string()));
            row.push(format!("{c:e}"));
            w.write_record(&row).map_err(csv_err)?;
        }
        for (l, c) in &self.entries {
            let e: String = l.e.iter().map(|b| char::from(b'0' + b)).collect();
            let mut row = vec![e, l.j.to_string()];
            row.extend(l.k.iter().map(|v| v.to_string()));
            row.push(format!("{c:e}"));
            w.write_record(&row).map_err(csv_err)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Contract(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    /// Inverse of [`CoeffMap::to_csv`].
    pub fn from_csv(text: &str, p: f64) -> Result<Self> {
        let mut r = csv::Reader::from_reader(text.as_bytes());
        let header = r
            .headers()
            .map_err(|e| Error::parse("header", e.to_string()))?
            .clone();
        if header.len() < 4 {
            return Err(Error::parse("header", "expected e,j,k1..kd,value"));
        }
        let d = header.len() - 3;
        let mut rows = Vec::new();
        for (i, rec) in r.records().enumerate() {
            let rec = rec.map_err(|e| Error::parse(format!("row {i}"), e.to_string()))?;
            let field = |c: usize| format!("row {i}, column {}", header.get(c).unwrap_or("?"));
            let e: Vec<u8> = rec[0]
                .bytes()
                .map(|b| match b {
                    b'0' | b'1' => Ok(b - b'0'),
                    _ => Err(Error::parse(field(0), "expected a 0/1 string")),
                })
                .collect::<Result<_>>()?;
            if e.len() != d {
                return Err(Error::parse(field(0), format!("expected {d} bits")));
            }
            let j: i32 = rec[1]
                .parse()
                .map_err(|_| Error::parse(field(1), "expected an integer"))?;
            let k: Vec<i64> = (0..d)
                .map(|c| {
                    rec[2 + c]
                        .parse()
                        .map_err(|_| Error::parse(field(2 + c), "expected an integer"))
                })
                .collect::<Result<_>>()?;
            let v: f64 = rec[2 + d]
                .parse()
                .map_err(|_| Error::parse(field(2 + d), "expected a number"))?;
            rows.push((e, j, k, v));
        }
        let j0 = rows
            .iter()
            .filter(|r| r.0.iter().all(|&b| b == 0))
            .map(|r| r.1)
            .chain(rows.iter().map(|r| r.1))
            .min()
            .unwrap_or(0);
        let mut map = CoeffMap::new(d, p, j0)?;
        for (e, j, k, v) in rows {
            if e.iter().all(|&b| b == 0) {
                map.insert_coarse(k, v)?;
            } else {
                map.insert(LambdaIndex::new(e, j, k)?, v)?;
            }
        }
        Ok(map)
    }
}

/// Besov parameters `(α, τ, q)` measured in `L^p` on `R^d`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BesovParams {
    pub alpha: f64,
    pub tau: f64,
    pub q: f64,
    pub p: f64,
    pub d: usize,
}

impl BesovParams {
    /// Checks `α/d ≥ 1/τ − 1/p` and `0 < q ≤ τ ≤ p`.
    pub fn new(alpha: f64, tau: f64, q: f64, p: f64, d: usize) -> Result<Self> {
        let params = BesovParams {
            alpha,
            tau,
            q,
            p,
            d,
        };
        params.validate()?;
        Ok(params)
    }

    /// The critical line `1/τ = α/d + 1/p` with `q = τ`.
    pub fn critical(alpha: f64, p: f64, d: usize) -> Result<Self> {
        let tau = 1.0 / (alpha / d as f64 + inv(p));
        Self::new(alpha, tau, tau, p, d)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0) || self.d == 0 {
            return Err(Error::Contract(
                "Besov smoothness α and dimension d must be positive".into(),
            ));
        }
        let lhs = self.alpha / self.d as f64;
        let rhs = inv(self.tau) - inv(self.p);
        if lhs < rhs - 1e-12 {
            return Err(Error::Contract(format!(
                "inadmissible Besov parameters: α/d = {lhs} < 1/τ − 1/p = {rhs}"
            )));
        }
        if !(self.q > 0.0 && self.q <= self.tau && self.tau <= self.p) {
            return Err(Error::Contract(format!(
                "inadmissible Besov parameters: need 0 < q ≤ τ ≤ p, got q = {}, τ = {}, p = {}",
                self.q, self.tau, self.p
            )));
        }
        Ok(())
    }

    /// `τ̄` with `1/τ + 1/τ̄ = 1` (`∞` at `τ = 1`); meaningful for `τ ≥ 1`.
    pub fn tau_bar(&self) -> f64 {
        let r = 1.0 - 1.0 / self.tau;
        if r <= 0.0 {
            f64::INFINITY
        } else {
            1.0 / r
        }
    }
}

/// `( Σ_j 2^{jαq} (Σ_{λ∈∇_j} |c_{λ,τ}|^τ)^{q/τ} )^{1/q}` over stored levels.
pub fn besov_seminorm(c: &CoeffMap, params: &BesovParams) -> f64 {
    let c = if c.p() == params.tau {
        c.clone()
    } else {
        c.renormalize(params.tau)
    };
    let tau = params.tau;
    let mut levels: BTreeMap<i32, f64> = BTreeMap::new();
    for (l, v) in c.entries() {
        let m = levels.entry(l.j).or_insert(0.0);
        if tau.is_infinite() {
            *m = m.max(v.abs());
        } else {
            *m += v.abs().powf(tau);
        }
    }
    let level_norm = |m: f64| {
        if tau.is_infinite() {
            m
        } else {
            m.powf(1.0 / tau)
        }
    };
    if params.q.is_infinite() {
        return levels
            .iter()
            .map(|(j, m)| 2f64.powf(*j as f64 * params.alpha) * level_norm(*m))
            .fold(0.0, f64::max);
    }
    levels
        .iter()
        .map(|(j, m)| (2f64.powf(*j as f64 * params.alpha) * level_norm(*m)).powf(params.q))
        .sum::<f64>()
        .powf(1.0 / params.q)
}

/// The `N` largest details in `L^p` normalization plus all coarse terms.
pub fn n_term_select(c: &CoeffMap, n: usize, p: f64) -> Result<CoeffMap> {
    let c = if c.p() == p {
        c.clone()
    } else {
        c.renormalize(p)
    };
    Ok(c.n_term_partition(n)?.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn one_d(values: &[f64]) -> CoeffMap {
        let mut c = CoeffMap::new(1, 2.0, 0).unwrap();
        for (i, v) in values.iter().enumerate() {
            c.insert(LambdaIndex::new(vec![1], 2, vec![i as i64]).unwrap(), *v)
                .unwrap();
        }
        c
    }

    #[test]
    fn renormalize_examples() {
        let c = one_d(&[1.0]);
        let r = c.renormalize(f64::INFINITY);
        assert_eq!(*r.entries().values().next().unwrap(), 2.0);
        assert_eq!(c.renormalize(2.0), c);
        let back = c.renormalize(0.7).renormalize(2.0);
        assert!((back.entries().values().next().unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn selection_examples() {
        let c = one_d(&[3.0, 1.0, 0.5, 0.1]);
        let s = n_term_select(&c, 2, 2.0).unwrap();
        let kept: Vec<f64> = s.entries().values().copied().collect();
        assert_eq!(kept, vec![3.0, 1.0]);
        assert_eq!(n_term_select(&c, 10, 2.0).unwrap(), c);
        assert!(n_term_select(&c, 0, 2.0).is_err());
        let ties = one_d(&[1.0, -1.0, 1.0]);
        let s = n_term_select(&ties, 1, 2.0).unwrap();
        assert_eq!(s.entries().keys().next().unwrap().k, vec![0]);
    }

    #[test]
    fn seminorm_single_term() {
        let mut c = CoeffMap::new(1, 0.5, 0).unwrap();
        c.insert(LambdaIndex::new(vec![1], 3, vec![1]).unwrap(), -0.25)
            .unwrap();
        for q in [0.5, f64::INFINITY] {
            let params = BesovParams {
                alpha: 1.5,
                tau: 0.5,
                q,
                p: 2.0,
                d: 1,
            };
            assert!((besov_seminorm(&c, &params) - 2f64.powf(4.5) * 0.25).abs() < 1e-12);
        }
    }

    #[test]
    fn params_admissibility() {
        let b = BesovParams::critical(1.5, 2.0, 1).unwrap();
        assert!((b.tau - 0.5).abs() < 1e-15);
        assert!((BesovParams::critical(1.5, 2.0, 2).unwrap().tau - 0.8).abs() < 1e-15);
        assert!((BesovParams::critical(1.0, f64::INFINITY, 2).unwrap().tau - 2.0).abs() < 1e-15);
        let err = BesovParams::new(0.1, 0.5, 0.5, 2.0, 1).unwrap_err();
        assert!(err.to_string().contains("α/d"));
        assert!(BesovParams::new(1.0, 2.0, 3.0, 2.0, 1).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let mut c = CoeffMap::new(2, 2.0, 1).unwrap();
        c.insert_coarse(vec![0, -1], 0.5).unwrap();
        c.insert(
            LambdaIndex::new(vec![1, 0], 2, vec![3, 4]).unwrap(),
            -1.25e-3,
        )
        .unwrap();
        let text = c.to_csv().unwrap();
        assert!(text.starts_with("e,j,k1,k2,value"));
        assert_eq!(CoeffMap::from_csv(&text, 2.0).unwrap(), c);
    }

    proptest! {
        #[test]
        fn seminorm_homogeneous_and_monotone(vals in proptest::collection::vec(-1.0f64..1.0, 1..12), s in 0.1f64..5.0) {
            let params = BesovParams { alpha: 1.0, tau: 0.8, q: 0.8, p: 2.0, d: 1 };
            let c = one_d(&vals);
            let base = besov_seminorm(&c, &params);
            let mut scaled = c.empty_like();
            let mut bigger = c.empty_like();
            for (l, v) in c.entries() {
                scaled.insert(l.clone(), s * v).unwrap();
                bigger.insert(l.clone(), v * 1.5).unwrap();
            }
            prop_assert!((besov_seminorm(&scaled, &params) - s * base).abs() <= 1e-10 * (1.0 + s * base));
            prop_assert!(besov_seminorm(&bigger, &params) >= base);
        }
    }
}

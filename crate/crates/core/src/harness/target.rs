use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::expansion::{
    analyze, besov_seminorm, eval_nodes, inv, modulus_seminorm, BesovParams, CoeffMap, LambdaIndex,
    SampledField,
};
use crate::wavelets::BiorthWaveletSystem;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TargetKind {
    /// Sparse random wavelet series with prescribed level masses.
    RandomSeries,
    /// `max{0, 1 − ‖x − x₀‖}^β` centred in the box.
    Cusp,
    /// Random sum of tensor B-splines `φ(2^j x − k)` at one level.
    SplineBump,
}

impl FromStr for TargetKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "random_series" => Ok(TargetKind::RandomSeries),
            "cusp" => Ok(TargetKind::Cusp),
            "spline_bump" => Ok(TargetKind::SplineBump),
            _ => Err(Error::parse(
                "kind",
                format!("unknown target kind `{s}` (random_series, cusp, spline_bump)"),
            )),
        }
    }
}

impl fmt::Display for TargetKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TargetKind::RandomSeries => "random_series",
            TargetKind::Cusp => "cusp",
            TargetKind::SplineBump => "spline_bump",
        })
    }
}

/// Everything needed to regenerate a target bit for bit.
#[derive(Clone, Debug, PartialEq)]
pub struct TargetSpec {
    pub kind: TargetKind,
    pub params: BesovParams,
    pub seed: u64,
    /// Sampling box `[lo, hi]^d`.
    pub lo: f64,
    pub hi: f64,
    /// CDF orders `(L, L̃)`.
    pub wavelet: (usize, usize),
    pub j0: i32,
    /// Finest detail level; samples live at resolution `2^{j_max+1}`.
    pub j_max: i32,
    /// Level `j` of a random series holds `⌈2^{jdθ}⌉` active terms.
    pub theta: f64,
    /// Magnitudes within a level are log-uniform over a factor `spread`.
    pub spread: f64,
    /// Cusp exponent.
    pub beta: f64,
    /// Number of B-splines in a spline bump.
    pub bumps: usize,
}

impl TargetSpec {
    /// Defaults for `kind` on the critical line `1/τ = α/d + 1/p`.
    pub fn new(kind: TargetKind, alpha: f64, p: f64, d: usize) -> Result<Self> {
        let params = BesovParams::critical(alpha, p, d)?;
        let (lo, hi) = match kind {
            TargetKind::Cusp => (-1.25, 1.25),
            _ => (-0.25, 1.25),
        };
        Ok(TargetSpec {
            kind,
            params,
            seed: 0,
            lo,
            hi,
            wavelet: (3, 3),
            j0: 0,
            j_max: if d == 1 { 10 } else { 6 },
            theta: 0.5,
            spread: 10.0,
            beta: 1.0,
            bumps: 1,
        })
    }

    pub fn d(&self) -> usize {
        self.params.d
    }

    pub fn resolution(&self) -> usize {
        1usize << (self.j_max + 1)
    }

    pub fn system(&self) -> Result<BiorthWaveletSystem> {
        BiorthWaveletSystem::cdf(self.wavelet.0, self.wavelet.1)
    }

    /// Sets one field from its text form.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn num<T: FromStr>(key: &str, v: &str) -> Result<T> {
            v.trim()
                .parse()
                .map_err(|_| Error::parse(key.to_string(), format!("cannot parse `{v}`")))
        }
        let v = value.trim();
        match key {
            "kind" => self.kind = v.parse()?,
            "alpha" => self.params.alpha = num(key, v)?,
            "tau" => self.params.tau = num(key, v)?,
            "q" => self.params.q = num(key, v)?,
            "p" => self.params.p = parse_p(v)?,
            "d" => self.params.d = num(key, v)?,
            "seed" => self.seed = num(key, v)?,
            "lo" => self.lo = num(key, v)?,
            "hi" => self.hi = num(key, v)?,
            "wavelet" => {
                let (a, b) = v
                    .split_once(',')
                    .ok_or_else(|| Error::parse("wavelet", "expected `L,L_dual`"))?;
                self.wavelet = (num(key, a)?, num(key, b)?);
            }
            "j0" => self.j0 = num(key, v)?,
            "j_max" => self.j_max = num(key, v)?,
            "theta" => self.theta = num(key, v)?,
            "spread" => self.spread = num(key, v)?,
            "beta" => self.beta = num(key, v)?,
            "bumps" => self.bumps = num(key, v)?,
            _ => return Err(Error::parse(key.to_string(), "unknown target key")),
        }
        Ok(())
    }

    /// Puts `(τ, q)` back on the critical line for the current `α, p, d`.
    pub fn recenter(&mut self) -> Result<()> {
        self.params = BesovParams::critical(self.params.alpha, self.params.p, self.params.d)?;
        Ok(())
    }

    /// Key/value echo, inverse of [`TargetSpec::set`].
    pub fn to_pairs(&self) -> BTreeMap<String, String> {
        let mut m = BTreeMap::new();
        let mut put = |k: &str, v: String| {
            m.insert(k.to_string(), v);
        };
        put("kind", self.kind.to_string());
        put("alpha", self.params.alpha.to_string());
        put("tau", self.params.tau.to_string());
        put("q", self.params.q.to_string());
        put("p", format_p(self.params.p));
        put("d", self.params.d.to_string());
        put("seed", self.seed.to_string());
        put("lo", self.lo.to_string());
        put("hi", self.hi.to_string());
        put("wavelet", format!("{},{}", self.wavelet.0, self.wavelet.1));
        put("j0", self.j0.to_string());
        put("j_max", self.j_max.to_string());
        put("theta", self.theta.to_string());
        put("spread", self.spread.to_string());
        put("beta", self.beta.to_string());
        put("bumps", self.bumps.to_string());
        m
    }

    fn validate(&self) -> Result<()> {
        self.params.validate()?;
        if self.j_max < self.j0 || self.j0 < 0 || self.j_max > 40 {
            return Err(Error::Parameter(format!(
                "need 0 ≤ j0 ≤ j_max ≤ 40, got j0 = {}, j_max = {}",
                self.j0, self.j_max
            )));
        }
        if !(0.0..=1.0).contains(&self.theta) || !(self.spread >= 1.0) {
            return Err(Error::Parameter(
                "need θ ∈ [0, 1] and spread ≥ 1".to_string(),
            ));
        }
        if self.kind == TargetKind::RandomSeries && (self.lo > 0.0 || self.hi < 1.0) {
            return Err(Error::Parameter(
                "random series live on [0, 1]^d; the box must contain it".into(),
            ));
        }
        Ok(())
    }
}

/// `p` from text, accepting `inf`.
pub fn parse_p(v: &str) -> Result<f64> {
    match v.trim() {
        "inf" | "infinity" | "∞" => Ok(f64::INFINITY),
        s => s
            .parse::<f64>()
            .ok()
            .filter(|p| *p >= 1.0)
            .ok_or_else(|| Error::parse("p", format!("expected a number ≥ 1 or `inf`, got `{s}`"))),
    }
}

pub fn format_p(p: f64) -> String {
    if p.is_infinite() {
        "inf".to_string()
    } else {
        p.to_string()
    }
}

/// Besov seminorms attached to a generated target.
#[derive(Clone, Debug, PartialEq)]
pub struct ReferenceSeminorms {
    /// Analytic value, when the construction fixes it.
    pub closed_form: Option<f64>,
    /// Wavelet-coefficient seminorm of the returned coefficients.
    pub coefficient: f64,
    /// Modulus-of-smoothness seminorm of the sampled field.
    pub modulus: f64,
}

#[derive(Clone, Debug)]
pub struct Target {
    pub field: SampledField,
    /// `L²`-normalized coefficients.
    pub coeffs: CoeffMap,
    pub seminorms: ReferenceSeminorms,
}

pub fn generate_target(spec: &TargetSpec) -> Result<Target> {
    spec.validate()?;
    let sys = spec.system()?;
    let (field, coeffs, closed_form) = match spec.kind {
        TargetKind::RandomSeries => {
            let (c, levels) = random_series(spec, &sys)?;
            let field = eval_nodes(&c, &sys, spec.lo, spec.hi, spec.resolution())?;
            (field, c, Some((levels as f64).powf(inv(spec.params.q))))
        }
        TargetKind::Cusp => {
            let x0 = 0.5 * (spec.lo + spec.hi);
            let beta = spec.beta;
            let field = SampledField::from_fn(spec.d(), spec.lo, spec.hi, spec.resolution(), |x| {
                let r = x.iter().map(|v| (v - x0) * (v - x0)).sum::<f64>().sqrt();
                (1.0 - r).max(0.0).powf(beta)
            })?;
            let c = analyze(&field, &sys, spec.j0)?;
            (field, c, None)
        }
        TargetKind::SplineBump => {
            let c = spline_bump(spec, &sys)?;
            let field = eval_nodes(&c, &sys, spec.lo, spec.hi, spec.resolution())?;
            let analyzed = analyze(&field, &sys, spec.j0)?;
            (field, analyzed, None)
        }
    };
    let params = spec.params;
    let seminorms = ReferenceSeminorms {
        closed_form,
        coefficient: besov_seminorm(&coeffs, &params),
        modulus: modulus_seminorm(&field, params.alpha, params.q, params.tau)?,
    };
    Ok(Target {
        field,
        coeffs,
        seminorms,
    })
}

/// Admissible translations `k` with `supp ψ^e(2^j · − k) ⊂ [0, 1]` per generator.
fn k_range(sys: &BiorthWaveletSystem, e: u8, j: i32) -> (i64, i64) {
    let (a, b) = sys.generator(e).support().unwrap();
    let lo = (-a).ceil() as i64;
    let hi = ((1i64 << j) as f64 - b).floor() as i64;
    (lo, hi)
}

/// Random series on `[0, 1]^d` and the number of nonempty levels.
fn random_series(spec: &TargetSpec, sys: &BiorthWaveletSystem) -> Result<(CoeffMap, usize)> {
    let d = spec.d();
    let tau = spec.params.tau;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut c = CoeffMap::new(d, tau, spec.j0)?;
    let mut levels = 0;
    for j in spec.j0..=spec.j_max {
        // per-e blocks of admissible k, in bit order of e
        let blocks: Vec<(Vec<u8>, Vec<(i64, i64)>, usize)> = (1..1usize << d)
            .map(|bits| {
                let e: Vec<u8> = (0..d).map(|ax| ((bits >> ax) & 1) as u8).collect();
                let ranges: Vec<(i64, i64)> = e.iter().map(|&b| k_range(sys, b, j)).collect();
                let count = ranges
                    .iter()
                    .map(|(lo, hi)| (hi - lo + 1).max(0) as usize)
                    .product();
                (e, ranges, count)
            })
            .collect();
        let available: usize = blocks.iter().map(|b| b.2).sum();
        let wanted = 2f64.powf(j as f64 * d as f64 * spec.theta).ceil() as usize;
        let n = wanted.min(available);
        if n == 0 {
            continue;
        }
        let mut picks = index::sample(&mut rng, available, n).into_vec();
        picks.sort_unstable();
        let raw: Vec<f64> = picks
            .iter()
            .map(|_| {
                let m = spec.spread.powf(-rng.gen::<f64>());
                if rng.gen::<bool>() {
                    m
                } else {
                    -m
                }
            })
            .collect();
        let mass = raw.iter().map(|v| v.abs().powf(tau)).sum::<f64>().powf(1.0 / tau);
        let target = 2f64.powf(-(j as f64) * spec.params.alpha);
        for (pick, v) in picks.into_iter().zip(raw) {
            let (e, k) = decode(&blocks, pick);
            c.insert(LambdaIndex::new(e, j, k)?, v * target / mass)?;
        }
        levels += 1;
    }
    Ok((c.renormalize(2.0), levels))
}

fn decode(blocks: &[(Vec<u8>, Vec<(i64, i64)>, usize)], mut i: usize) -> (Vec<u8>, Vec<i64>) {
    for (e, ranges, count) in blocks {
        if i < *count {
            let mut k = vec![0i64; e.len()];
            for ax in (0..e.len()).rev() {
                let (lo, hi) = ranges[ax];
                let n = (hi - lo + 1) as usize;
                k[ax] = lo + (i % n) as i64;
                i /= n;
            }
            return (e.clone(), k);
        }
        i -= count;
    }
    unreachable!("pick index below the available count")
}

/// `Σ a_i 2^{j d/2} φ^{⊗d}(2^j x − k_i)` at `j = j0`, inside the box.
fn spline_bump(spec: &TargetSpec, sys: &BiorthWaveletSystem) -> Result<CoeffMap> {
    let d = spec.d();
    let j = spec.j0;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let (a, b) = sys.phi().support().unwrap();
    let s = 2f64.powi(j);
    // keep a margin of one unit at level j inside the box
    let lo = (spec.lo * s - a + 1.0).ceil() as i64;
    let hi = (spec.hi * s - b - 1.0).floor() as i64;
    if hi < lo {
        return Err(Error::Parameter(format!(
            "box [{}, {}] too small for a B-spline at level {j}",
            spec.lo, spec.hi
        )));
    }
    let mut c = CoeffMap::new(d, 2.0, j)?;
    for _ in 0..spec.bumps.max(1) {
        let k: Vec<i64> = (0..d).map(|_| rng.gen_range(lo..=hi)).collect();
        let v = if spec.bumps <= 1 {
            1.0
        } else {
            rng.gen_range(-1.0..1.0)
        };
        let prev = c.coarse().get(&k).copied().unwrap_or(0.0);
        c.insert_coarse(k, prev + v)?;
    }
    Ok(c)
}

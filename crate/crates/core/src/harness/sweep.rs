use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde_json::{json, Value};

use super::target::{generate_target, Target, TargetKind, TargetSpec};
use crate::compiler::{compile_expansion, compile_report, ApproximationRecord};
use crate::error::{Error, Result};
use crate::expansion::{besov_seminorm, eval_nodes, inv, n_term_select, SampledField};
use crate::par;

/// Least-squares line `y = intercept + slope·x`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub stderr: f64,
    pub r_squared: f64,
}

/// Fits `y` against `x`; needs at least two distinct abscissae.
pub fn fit_line(x: &[f64], y: &[f64]) -> Result<LinearFit> {
    let n = x.len();
    if n < 2 || n != y.len() {
        return Err(Error::Parameter(format!(
            "a line fit needs ≥ 2 paired points, got {n} and {}",
            y.len()
        )));
    }
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|v| (v - my) * (v - my)).sum();
    if sxx == 0.0 {
        return Err(Error::Parameter("line fit with a single abscissa".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| {
            let r = b - intercept - slope * a;
            r * r
        })
        .sum();
    let stderr = if n > 2 {
        (ss_res / (nf - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    let r_squared = if syy == 0.0 { 1.0 } else { 1.0 - ss_res / syy };
    Ok(LinearFit {
        slope,
        intercept,
        stderr,
        r_squared,
    })
}

/// Fits `log y` against `log x`.
pub fn fit_loglog(x: &[f64], y: &[f64]) -> Result<LinearFit> {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    fit_line(&lx, &ly)
}

/// Budget bookkeeping for one compiled sweep point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BudgetCheck {
    /// `‖f_N − R(Φ_N)‖_p`.
    pub network_error: f64,
    /// `‖f − f_N‖_p`.
    pub nterm_error: f64,
    /// `Σ |c_{λ,p}|` over every compiled term.
    pub coefficient_sum: f64,
    /// `Σ_{λ∈Λ_N} |c_{λ,p}|` over detail terms only.
    pub detail_sum: f64,
}

/// Sweep rows plus the fitted log-log slope of error against weights.
#[derive(Clone, Debug, PartialEq)]
pub struct RateReport {
    pub config: BTreeMap<String, String>,
    /// Sorted by `N`.
    pub rows: Vec<ApproximationRecord>,
    /// Present for compiled sweeps.
    pub budgets: Vec<BudgetCheck>,
    pub fit: LinearFit,
    /// Smallest `N` values left out of the fit.
    pub fit_excluded: usize,
}

/// Rows excluded from slope fits.
pub const FIT_EXCLUDED: usize = 2;

impl RateReport {
    fn assemble(
        config: BTreeMap<String, String>,
        rows: Vec<ApproximationRecord>,
        budgets: Vec<BudgetCheck>,
    ) -> Result<Self> {
        let skip = if rows.len() >= FIT_EXCLUDED + 2 {
            FIT_EXCLUDED
        } else {
            0
        };
        let used: Vec<&ApproximationRecord> = rows.iter().skip(skip).collect();
        let x: Vec<f64> = used.iter().map(|r| r.weights as f64).collect();
        let y: Vec<f64> = used.iter().map(|r| r.error).collect();
        let fit = fit_loglog(&x, &y)?;
        Ok(RateReport {
            config,
            rows,
            budgets,
            fit,
            fit_excluded: skip,
        })
    }

    /// `error / (W^{−s}(1 + ln W)^{s})` per row.
    pub fn log_corrected_constants(&self, s: f64) -> Vec<f64> {
        self.rows
            .iter()
            .map(|r| {
                let w = r.weights as f64;
                r.error / (w.powf(-s) * (1.0 + w.ln()).powf(s))
            })
            .collect()
    }

    /// Config echo as `# key=value` lines, then the table.
    pub fn to_csv(&self) -> Result<String> {
        let mut out = String::new();
        for (k, v) in &self.config {
            out.push_str(&format!("# {k}={v}\n"));
        }
        out.push_str(&format!(
            "# fitted_slope={:e}\n# slope_stderr={:e}\n# r_squared={:e}\n# fit_excluded={}\n",
            self.fit.slope, self.fit.stderr, self.fit.r_squared, self.fit_excluded
        ));
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(ApproximationRecord::CSV_HEADER.split(','))
            .map_err(csv_err)?;
        for r in &self.rows {
            w.write_record(r.to_csv_row().split(',')).map_err(csv_err)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Contract(e.to_string()))?;
        out.push_str(&String::from_utf8(bytes).expect("csv output is UTF-8"));
        Ok(out)
    }

    /// Inverse of [`RateReport::to_csv`] (budget columns are not stored).
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut config = BTreeMap::new();
        for line in text.lines().filter_map(|l| l.strip_prefix("# ")) {
            if let Some((k, v)) = line.split_once('=') {
                if !matches!(k, "fitted_slope" | "slope_stderr" | "r_squared" | "fit_excluded") {
                    config.insert(k.to_string(), v.to_string());
                }
            }
        }
        let mut reader = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .from_reader(text.as_bytes());
        let mut rows = Vec::new();
        for (i, rec) in reader.records().enumerate() {
            let rec = rec.map_err(csv_err)?;
            let get = |c: usize| -> Result<&str> {
                rec.get(c)
                    .ok_or_else(|| Error::parse(format!("row {}", i + 1), "missing column"))
            };
            let num = |c: usize| -> Result<f64> {
                get(c)?
                    .parse()
                    .map_err(|_| Error::parse(format!("row {} column {}", i + 1, c + 1), "not a number"))
            };
            rows.push(ApproximationRecord {
                n: num(0)? as usize,
                weights: num(1)? as usize,
                depth: num(2)? as usize,
                epsilon: num(3)?,
                error: num(4)?,
            });
        }
        Self::assemble(config, rows, Vec::new())
    }

    pub fn to_json(&self) -> Value {
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|r| {
                json!({
                    "N": r.n,
                    "weights": r.weights,
                    "depth": r.depth,
                    "epsilon": r.epsilon,
                    "error_p": r.error,
                })
            })
            .collect();
        let budgets: Vec<Value> = self
            .budgets
            .iter()
            .map(|b| {
                json!({
                    "network_error": b.network_error,
                    "nterm_error": b.nterm_error,
                    "coefficient_sum": b.coefficient_sum,
                    "detail_sum": b.detail_sum,
                })
            })
            .collect();
        json!({
            "config": self.config,
            "rows": rows,
            "budgets": budgets,
            "fitted_slope": self.fit.slope,
            "slope_stderr": self.fit.stderr,
            "r_squared": self.fit.r_squared,
            "fit_excluded": self.fit_excluded,
        })
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Contract(format!("csv: {e}"))
}

/// JSON Schema of [`RateReport::to_json`].
pub const RATE_REPORT_SCHEMA: &str = r#"{
  "$schema": "https://json-schema.org/draft/2020-12/schema",
  "title": "RateReport",
  "type": "object",
  "required": ["config", "rows", "budgets", "fitted_slope", "slope_stderr", "r_squared", "fit_excluded"],
  "properties": {
    "config": {"type": "object", "additionalProperties": {"type": "string"}},
    "rows": {
      "type": "array",
      "items": {
        "type": "object",
        "required": ["N", "weights", "depth", "epsilon", "error_p"],
        "properties": {
          "N": {"type": "integer", "minimum": 0},
          "weights": {"type": "integer", "minimum": 0},
          "depth": {"type": "integer", "minimum": 0},
          "epsilon": {"type": "number"},
          "error_p": {"type": "number", "minimum": 0}
        }
      }
    },
    "budgets": {
      "type": "array",
      "items": {
        "type": "object",
        "required": ["network_error", "nterm_error", "coefficient_sum", "detail_sum"],
        "additionalProperties": {"type": "number"}
      }
    },
    "fitted_slope": {"type": "number"},
    "slope_stderr": {"type": "number"},
    "r_squared": {"type": "number"},
    "fit_excluded": {"type": "integer", "minimum": 0}
  }
}"#;

/// Checks `v` against the required fields and types of [`RATE_REPORT_SCHEMA`].
pub fn validate_report_json(v: &Value) -> Result<()> {
    let bad = |what: &str| Err(Error::parse("report", what.to_string()));
    let obj = match v.as_object() {
        Some(o) => o,
        None => return bad("not an object"),
    };
    for key in ["fitted_slope", "slope_stderr", "r_squared"] {
        if !obj.get(key).is_some_and(Value::is_number) {
            return bad(&format!("`{key}` must be a number"));
        }
    }
    if !obj.get("fit_excluded").is_some_and(Value::is_u64) {
        return bad("`fit_excluded` must be a non-negative integer");
    }
    match obj.get("config").and_then(Value::as_object) {
        Some(c) if c.values().all(Value::is_string) => {}
        _ => return bad("`config` must map keys to strings"),
    }
    let rows = match obj.get("rows").and_then(Value::as_array) {
        Some(r) => r,
        None => return bad("`rows` must be an array"),
    };
    for row in rows {
        for key in ["N", "weights", "depth"] {
            if !row.get(key).is_some_and(Value::is_u64) {
                return bad(&format!("row `{key}` must be a non-negative integer"));
            }
        }
        if !row.get("epsilon").is_some_and(Value::is_number)
            || !row
                .get("error_p")
                .and_then(Value::as_f64)
                .is_some_and(|e| e >= 0.0)
        {
            return bad("row `epsilon`/`error_p` must be numbers, error non-negative");
        }
    }
    match obj.get("budgets").and_then(Value::as_array) {
        Some(b) if b.iter().all(|x| {
            ["network_error", "nterm_error", "coefficient_sum", "detail_sum"]
                .iter()
                .all(|k| x.get(*k).is_some_and(Value::is_number))
        }) => Ok(()),
        _ => bad("`budgets` entries need four numeric fields"),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Json,
}

impl std::str::FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(ReportFormat::Csv),
            "json" => Ok(ReportFormat::Json),
            _ => Err(Error::parse("format", format!("expected csv or json, got `{s}`"))),
        }
    }
}

/// Writes the report; identical reports give identical bytes.
pub fn emit(report: &RateReport, format: ReportFormat, path: &Path) -> Result<()> {
    let text = match format {
        ReportFormat::Csv => report.to_csv()?,
        ReportFormat::Json => {
            let mut s = serde_json::to_string_pretty(&report.to_json())
                .map_err(|e| Error::Contract(e.to_string()))?;
            s.push('\n');
            s
        }
    };
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Error-measurement box: the unit cube for random series, else the sampling box.
fn eval_box(spec: &TargetSpec) -> (f64, f64) {
    match spec.kind {
        TargetKind::RandomSeries => (0.0, 1.0),
        _ => (spec.lo, spec.hi),
    }
}

fn config_echo(spec: &TargetSpec, extra: &[(&str, String)], ns: &[usize]) -> BTreeMap<String, String> {
    let mut c = spec.to_pairs();
    for (k, v) in extra {
        c.insert(k.to_string(), v.clone());
    }
    let list: Vec<String> = ns.iter().map(|n| n.to_string()).collect();
    c.insert("n_list".into(), list.join(" "));
    c
}

fn check_ns(ns: &[usize]) -> Result<()> {
    if ns.is_empty() || ns.windows(2).any(|w| w[0] >= w[1]) || ns[0] == 0 {
        return Err(Error::Parameter(
            "N list must be nonempty, positive and strictly increasing".into(),
        ));
    }
    Ok(())
}

/// Best N-term errors `‖f − f_N‖_p`; the `weights` column holds `N`.
pub fn nterm_sweep(spec: &TargetSpec, ns: &[usize]) -> Result<RateReport> {
    check_ns(ns)?;
    let target = generate_target(spec)?;
    nterm_sweep_on(spec, &target, ns)
}

/// [`nterm_sweep`] on an already generated target.
pub fn nterm_sweep_on(spec: &TargetSpec, target: &Target, ns: &[usize]) -> Result<RateReport> {
    check_ns(ns)?;
    let sys = spec.system()?;
    let p = spec.params.p;
    let (lo, hi) = eval_box(spec);
    let res = spec.resolution();
    let f = eval_nodes(&target.coeffs, &sys, lo, hi, res)?;
    let rows = par::map(ns, |&n| -> Result<ApproximationRecord> {
        let sel = n_term_select(&target.coeffs, n, p)?;
        let f_n = eval_nodes(&sel, &sys, lo, hi, res)?;
        Ok(ApproximationRecord {
            n: sel.len(),
            weights: sel.len(),
            depth: 0,
            epsilon: 0.0,
            error: f.sub(&f_n)?.lp_norm(p),
        })
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    RateReport::assemble(config_echo(spec, &[("mode", "nterm".into())], ns), rows, Vec::new())
}

/// Compiles the best `N`-term approximant for each `N` and measures
/// `‖f − R(Φ_N)‖_p` on the nodes of the error box.
pub fn rate_sweep(spec: &TargetSpec, ns: &[usize], r_class: u32) -> Result<RateReport> {
    check_ns(ns)?;
    let target = generate_target(spec)?;
    rate_sweep_on(spec, &target, ns, r_class)
}

/// [`rate_sweep`] on an already generated target.
pub fn rate_sweep_on(
    spec: &TargetSpec,
    target: &Target,
    ns: &[usize],
    r_class: u32,
) -> Result<RateReport> {
    check_ns(ns)?;
    let sys = spec.system()?;
    let params = spec.params;
    let p = params.p;
    let (lo, hi) = eval_box(spec);
    let res = spec.resolution();
    let f = eval_nodes(&target.coeffs, &sys, lo, hi, res)?;
    let nodes = f.nodes_flat();
    let points = par::map(ns, |&n| -> Result<(ApproximationRecord, BudgetCheck)> {
        let sel = n_term_select(&target.coeffs, n, p)?;
        let f_n = eval_nodes(&sel, &sys, lo, hi, res)?;
        let compiled = compile_expansion(&sel, &sys, &params, r_class)?;
        let values = compiled.network.eval_batch_seq(&nodes)?;
        let net = SampledField::new(f.dim(), lo, hi, res, values)?;
        let error = f.sub(&net)?.lp_norm(p);
        let budget = BudgetCheck {
            network_error: f_n.sub(&net)?.lp_norm(p),
            nterm_error: f.sub(&f_n)?.lp_norm(p),
            coefficient_sum: compiled.coefficient_sum,
            detail_sum: sel.entries().values().map(|c| c.abs()).sum(),
        };
        Ok((compile_report(&compiled, error), budget))
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let (rows, budgets) = points.into_iter().unzip();
    let extra = [("mode", "compile".to_string()), ("r_class", r_class.to_string())];
    RateReport::assemble(config_echo(spec, &extra, ns), rows, budgets)
}

/// Factor in `Σ_{Λ_N} |c_{λ,p}| ≤ factor · |f|_{B^α_τ(L^τ)}`: `2` for `τ < 1`, else `2N^{1/τ̄}`.
pub fn coefficient_sum_factor(params: &crate::expansion::BesovParams, n: usize) -> f64 {
    if params.tau < 1.0 {
        2.0
    } else {
        2.0 * (n as f64).powf(inv(params.tau_bar()))
    }
}

/// `besov_seminorm` of a target's own coefficients.
pub fn target_seminorm(target: &Target, params: &crate::expansion::BesovParams) -> f64 {
    besov_seminorm(&target.coeffs, params)
}

//! `besovnet` command line: wavelet inspection, target generation, analysis,
//! compilation, network evaluation and rate sweeps.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use besovnet::compiler::{compile_expansion, compile_report, ApproximationRecord};
use besovnet::expansion::{analyze, besov_seminorm, n_term_select, BesovParams, CoeffMap, SampledField};
use besovnet::harness::{
    emit, generate_target, nterm_sweep, parse_p, rate_sweep, ReportFormat, TargetKind, TargetSpec,
};
use besovnet::{BiorthWaveletSystem, Network};
use clap::{Args, Parser, Subcommand};
use serde_json::json;

#[derive(Parser, Debug)]
#[command(name = "besovnet", version, about, args_override_self = true)]
struct Cli {
    /// Flat `key = value` file; its entries override command-line flags.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Wavelet system inspection.
    Wavelet {
        #[command(subcommand)]
        action: WaveletAction,
    },
    /// Target generation.
    Target {
        #[command(subcommand)]
        action: TargetAction,
    },
    /// Fast wavelet transform of a sampled field into a coefficient CSV.
    Analyze(AnalyzeArgs),
    /// Compile the best N-term approximant of a sampled field into a network.
    Compile(CompileArgs),
    /// Evaluate a network JSON on points from a CSV file.
    Eval(EvalArgs),
    /// N-term or compiled-network rate sweep.
    Rates(RatesArgs),
}

#[derive(Subcommand, Debug)]
enum WaveletAction {
    /// Masks, φ/ψ breakpoints and piecewise coefficients as JSON.
    Dump(DumpArgs),
}

#[derive(Subcommand, Debug)]
enum TargetAction {
    /// Sample a target field and write it with its coefficients.
    Generate(GenerateArgs),
}

#[derive(Args, Debug)]
struct WaveletArgs {
    /// CDF primal order `L`.
    #[arg(long, default_value_t = 2)]
    l: usize,
    /// CDF dual order `L̃`.
    #[arg(long, default_value_t = 2)]
    l_dual: usize,
}

impl WaveletArgs {
    fn system(&self) -> Result<BiorthWaveletSystem> {
        Ok(BiorthWaveletSystem::cdf(self.l, self.l_dual)?)
    }
}

#[derive(Args, Debug)]
struct DumpArgs {
    #[command(flatten)]
    wavelet: WaveletArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct BesovArgs {
    #[arg(long, default_value_t = 1.5)]
    alpha: f64,
    /// Target norm `p`, a number or `inf`.
    #[arg(long, default_value = "2")]
    p: String,
    /// Defaults to the critical line `1/τ = α/d + 1/p`.
    #[arg(long)]
    tau: Option<f64>,
    /// Defaults to `τ`.
    #[arg(long)]
    q: Option<f64>,
}

impl BesovArgs {
    fn params(&self, d: usize) -> Result<BesovParams> {
        let mut params = BesovParams::critical(self.alpha, parse_p(&self.p)?, d)?;
        if let Some(tau) = self.tau {
            params.tau = tau;
            params.q = tau;
        }
        if let Some(q) = self.q {
            params.q = q;
        }
        params.validate()?;
        Ok(params)
    }
}

/// Target keys; unset keys keep the defaults of the chosen kind.
#[derive(Args, Debug)]
struct TargetArgs {
    #[arg(long, default_value = "random_series")]
    kind: String,
    #[arg(long, default_value_t = 1.5)]
    alpha: f64,
    #[arg(long, default_value = "2")]
    p: String,
    #[arg(long, default_value_t = 1)]
    d: usize,
    #[arg(long)]
    tau: Option<String>,
    #[arg(long)]
    q: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    lo: Option<String>,
    #[arg(long)]
    hi: Option<String>,
    /// CDF orders as `L,L_dual`.
    #[arg(long)]
    wavelet: Option<String>,
    #[arg(long)]
    j0: Option<String>,
    #[arg(long)]
    j_max: Option<String>,
    #[arg(long)]
    theta: Option<String>,
    #[arg(long)]
    spread: Option<String>,
    #[arg(long)]
    beta: Option<String>,
    #[arg(long)]
    bumps: Option<String>,
}

impl TargetArgs {
    fn spec(&self) -> Result<TargetSpec> {
        let kind: TargetKind = self.kind.parse()?;
        let mut spec = TargetSpec::new(kind, self.alpha, parse_p(&self.p)?, self.d)?;
        let optional = [
            ("tau", &self.tau),
            ("q", &self.q),
            ("seed", &self.seed),
            ("lo", &self.lo),
            ("hi", &self.hi),
            ("wavelet", &self.wavelet),
            ("j0", &self.j0),
            ("j_max", &self.j_max),
            ("theta", &self.theta),
            ("spread", &self.spread),
            ("beta", &self.beta),
            ("bumps", &self.bumps),
        ];
        for (key, value) in optional {
            if let Some(v) = value {
                spec.set(key, v)?;
            }
        }
        Ok(spec)
    }
}

#[derive(Args, Debug)]
struct GenerateArgs {
    #[command(flatten)]
    target: TargetArgs,
    /// Field output; the sidecar goes to `<out>.json`.
    #[arg(long)]
    out: PathBuf,
    /// Optional coefficient CSV (`L²`-normalized).
    #[arg(long)]
    coeffs: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct AnalyzeArgs {
    #[arg(long)]
    field: PathBuf,
    #[command(flatten)]
    wavelet: WaveletArgs,
    #[arg(long, default_value_t = 0)]
    j0: i32,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct CompileArgs {
    #[arg(long)]
    field: PathBuf,
    #[command(flatten)]
    wavelet: WaveletArgs,
    #[command(flatten)]
    besov: BesovArgs,
    #[arg(long, default_value_t = 0)]
    j0: i32,
    /// Number of detail terms.
    #[arg(long)]
    n: usize,
    /// 1 for ReLU, 2 for RePU(2).
    #[arg(long, default_value_t = 1)]
    r: u32,
    /// Network JSON output.
    #[arg(long)]
    out: PathBuf,
    /// Report CSV output; stdout when absent.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct EvalArgs {
    #[arg(long)]
    network: PathBuf,
    /// Headerless CSV, one point per row.
    #[arg(long)]
    points: PathBuf,
    /// One value per line; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct RatesArgs {
    #[command(flatten)]
    target: TargetArgs,
    /// Increasing comma-separated term counts.
    #[arg(long, value_delimiter = ',', default_values_t = [16usize, 32, 64, 128, 256])]
    ns: Vec<usize>,
    /// Compile with activation class r (1 or 2); best N-term errors only when absent.
    #[arg(long)]
    r: Option<u32>,
    #[arg(long, default_value = "csv")]
    format: String,
    #[arg(long)]
    out: PathBuf,
}

/// Reads `key = value` lines; `#` starts a comment.
fn read_config(path: &Path) -> Result<Vec<(String, String)>> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading config {}", path.display()))?;
    let mut pairs = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            bail!("{}:{}: expected `key = value`", path.display(), i + 1);
        };
        pairs.push((k.trim().replace('_', "-"), v.trim().to_string()));
    }
    Ok(pairs)
}

/// Appends config entries as trailing flags so they win over earlier ones.
fn with_config(args: Vec<OsString>) -> Result<Vec<OsString>> {
    let first = Cli::try_parse_from(&args);
    let Ok(cli) = first else {
        return Ok(args);
    };
    let Some(path) = cli.config else {
        return Ok(args);
    };
    let mut args = args;
    for (k, v) in read_config(&path)? {
        if k != "config" {
            args.push(format!("--{k}={v}").into());
        }
    }
    Ok(args)
}

fn write_text(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn wavelet_dump(a: &DumpArgs) -> Result<()> {
    let sys = a.wavelet.system()?;
    let text = serde_json::to_string_pretty(&sys.to_json())? + "\n";
    write_text(a.out.as_deref(), &text)
}

fn target_generate(a: &GenerateArgs) -> Result<()> {
    let spec = a.target.spec()?;
    let target = generate_target(&spec)?;
    target.field.write(&a.out)?;
    if let Some(path) = &a.coeffs {
        write_text(Some(path), &target.coeffs.to_csv()?)?;
    }
    let s = &target.seminorms;
    let summary = json!({
        "config": spec.to_pairs(),
        "terms": target.coeffs.len(),
        "seminorm_closed_form": s.closed_form,
        "seminorm_coefficient": s.coefficient,
        "seminorm_modulus": s.modulus,
    });
    println!("{}", serde_json::to_string_pretty(&summary)?);
    Ok(())
}

fn analyze_cmd(a: &AnalyzeArgs) -> Result<()> {
    let sys = a.wavelet.system()?;
    let field = SampledField::read(&a.field)?;
    let c = analyze(&field, &sys, a.j0)?;
    write_text(Some(&a.out), &c.to_csv()?)
}

fn compile_cmd(a: &CompileArgs) -> Result<()> {
    let sys = a.wavelet.system()?;
    let field = SampledField::read(&a.field)?;
    let params = a.besov.params(field.dim())?;
    let c: CoeffMap = analyze(&field, &sys, a.j0)?;
    let sel = n_term_select(&c, a.n, params.p)?;
    let compiled = compile_expansion(&sel, &sys, &params, a.r)?;
    let values = compiled.network.eval_batch(&field.nodes_flat())?;
    let (lo, hi) = field.bounds();
    let net_field = SampledField::new(field.dim(), lo, hi, field.resolution(), values)?;
    let error = field.sub(&net_field)?.lp_norm(params.p);
    fs::write(&a.out, compiled.network.to_json_string()? + "\n")
        .with_context(|| format!("writing {}", a.out.display()))?;
    let record = compile_report(&compiled, error);
    let text = format!(
        "# seminorm={:e}\n{}\n{}\n",
        besov_seminorm(&c.renormalize(params.tau), &params),
        ApproximationRecord::CSV_HEADER,
        record.to_csv_row()
    );
    write_text(a.report.as_deref(), &text)
}

fn read_points(path: &Path, dim: usize) -> Result<Vec<f64>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)
        .with_context(|| format!("reading points {}", path.display()))?;
    let mut flat = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.with_context(|| format!("{}: row {}", path.display(), i + 1))?;
        if record.len() != dim {
            bail!("{}: row {} has {} columns, network input is {dim}", path.display(), i + 1, record.len());
        }
        for field in record.iter() {
            flat.push(
                field
                    .parse::<f64>()
                    .with_context(|| format!("{}: row {}: `{field}`", path.display(), i + 1))?,
            );
        }
    }
    Ok(flat)
}

fn eval_cmd(a: &EvalArgs) -> Result<()> {
    let text = fs::read_to_string(&a.network)
        .with_context(|| format!("reading {}", a.network.display()))?;
    let net = Network::from_json_str(&text)?;
    let points = read_points(&a.points, net.input_dim())?;
    let values = net.eval_batch(&points)?;
    let mut out = String::new();
    for v in values {
        out.push_str(&format!("{v:e}\n"));
    }
    write_text(a.out.as_deref(), &out)
}

fn rates_cmd(a: &RatesArgs) -> Result<()> {
    let spec = a.target.spec()?;
    let format: ReportFormat = a.format.parse()?;
    let report = match a.r {
        Some(r) => rate_sweep(&spec, &a.ns, r)?,
        None => nterm_sweep(&spec, &a.ns)?,
    };
    emit(&report, format, &a.out)?;
    println!(
        "slope {:.4} ± {:.4} over {} points",
        report.fit.slope,
        report.fit.stderr,
        report.rows.len()
    );
    Ok(())
}

fn main() -> Result<()> {
    let args = with_config(std::env::args_os().collect())?;
    let cli = Cli::parse_from(args);
    match &cli.command {
        Command::Wavelet {
            action: WaveletAction::Dump(a),
        } => wavelet_dump(a),
        Command::Target {
            action: TargetAction::Generate(a),
        } => target_generate(a),
        Command::Analyze(a) => analyze_cmd(a),
        Command::Compile(a) => compile_cmd(a),
        Command::Eval(a) => eval_cmd(a),
        Command::Rates(a) => rates_cmd(a),
    }
}

//! `sr-bounds` command line. Exit codes: 0 success, 1 usage or input error,
//! 2 when range errors dominate an experiment or stop a computation.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use num_traits::ToPrimitive;

use super::config::{parse_fraction, EntryDist, ExperimentConfig, XGrid};
use super::experiment::{run_experiment, ExperimentOutput};
use super::write_outputs;
use crate::bounds::{self, BoundInputs, BoundKind};
use crate::error::{Error, Result};
use crate::fp_core::{self, ExactValue, FloatFormat};
use crate::kernels::{InnerProductInstance, KernelInstance, PolynomialInstance};
use crate::oracle::{self, theta_of_fast};
use crate::sr_arith::{sr_round, RngStream};

/// Parses `2^-7`, `2^(-7)`, `A/B` or a decimal number.
pub fn parse_real(s: &str) -> std::result::Result<f64, String> {
    let t = s.trim().replace(['(', ')'], "").replace('−', "-");
    if let Some(exp) = t.strip_prefix("2^") {
        let k: i32 = exp.parse().map_err(|_| format!("bad power of two {s:?}"))?;
        return Ok(2f64.powi(k));
    }
    if t.contains('/') {
        let r = parse_fraction(&t).map_err(|e| e.to_string())?;
        return r.to_f64().ok_or_else(|| format!("{s:?} out of range"));
    }
    t.parse().map_err(|_| format!("bad number {s:?}"))
}

fn parse_format(s: &str) -> std::result::Result<FloatFormat, String> {
    FloatFormat::from_name(s).map_err(|e| e.to_string())
}

#[derive(Parser, Debug)]
#[command(name = "sr-bounds", version, about = "Stochastic rounding error experiments and bounds")]
struct Cli {
    /// Print the random generator identity.
    #[arg(long, global = true)]
    rng_info: bool,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Round one value stochastically and show its neighbours and θ.
    Round(RoundArgs),
    /// Inner-product experiment over random vectors.
    Dot(DotArgs),
    /// Horner evaluation of an even Chebyshev polynomial over an x grid.
    Horner(HornerArgs),
    /// Evaluate one bound.
    Bounds(BoundsArgs),
    /// Smallest n at which the BC inner-product bound beats AH2.
    Crossover(CrossoverArgs),
    /// Exact output distribution of a small SR computation.
    Enumerate(EnumerateArgs),
}

#[derive(Args, Debug)]
struct RoundArgs {
    /// Value as `A/B`, `2^k` or decimal; `A/B` is rounded from the exact quotient.
    #[arg(long, allow_hyphen_values = true)]
    value: String,
    #[arg(long, default_value = "bf16", value_parser = parse_format)]
    format: FloatFormat,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1000)]
    samples: usize,
}

#[derive(Args, Debug)]
struct ExperimentArgs {
    #[arg(long, default_value = "b32", value_parser = parse_format)]
    format: FloatFormat,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 30)]
    samples: usize,
    /// Failure probability; repeatable.
    #[arg(long)]
    lambda: Vec<f64>,
    /// Success probability `1 - λ`; repeatable.
    #[arg(long)]
    prob: Vec<f64>,
    /// Output directory for CSV files; a summary is printed otherwise.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write plot.svg (requires --out).
    #[arg(long)]
    svg: bool,
    #[arg(long)]
    threads: Option<usize>,
    /// Divide errors and bounds by the condition number.
    #[arg(long)]
    normalize: bool,
}

impl ExperimentArgs {
    fn apply(&self, cfg: &mut ExperimentConfig) {
        cfg.format = self.format;
        cfg.seed = self.seed;
        cfg.samples = self.samples;
        let mut lambdas: Vec<f64> = self.lambda.clone();
        lambdas.extend(self.prob.iter().map(|p| 1.0 - p));
        if !lambdas.is_empty() {
            cfg.lambdas = lambdas;
        }
        cfg.threads = self.threads;
        cfg.normalize = self.normalize;
    }
}

#[derive(Args, Debug)]
struct DotArgs {
    #[command(flatten)]
    common: ExperimentArgs,
    /// Vector length; repeatable.
    #[arg(long)]
    n: Vec<u64>,
    #[arg(long, default_value = "uniform01")]
    dist: EntryDist,
    /// Lift the default cap on sampled vector lengths.
    #[arg(long)]
    allow_large_n: bool,
}

#[derive(Args, Debug)]
struct HornerArgs {
    #[command(flatten)]
    common: ExperimentArgs,
    #[arg(long, default_value_t = 20)]
    degree: u32,
    /// `A/B:C/D:COUNT`
    #[arg(long, default_value = "8/64:1:57")]
    x_grid: XGrid,
    /// Form x² exactly (rounded to nearest) instead of in the kernel's mode.
    #[arg(long)]
    exact_square: bool,
}

#[derive(Args, Debug)]
struct BoundsArgs {
    #[arg(long)]
    kind: String,
    #[arg(long)]
    n: u64,
    /// Unit roundoff; defaults to that of --format.
    #[arg(long, value_parser = parse_real, allow_hyphen_values = true)]
    u: Option<f64>,
    #[arg(long, default_value = "b32", value_parser = parse_format)]
    format: FloatFormat,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    prob: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    k1: f64,
}

#[derive(Args, Debug)]
struct CrossoverArgs {
    /// Unit roundoff; without it (and --format) the full table is printed.
    #[arg(long, value_parser = parse_real, allow_hyphen_values = true)]
    u: Option<f64>,
    #[arg(long, value_parser = parse_format)]
    format: Option<FloatFormat>,
    #[arg(long)]
    prob: Vec<f64>,
    #[arg(long)]
    lambda: Vec<f64>,
    #[arg(long, default_value_t = 1_000_000_000_000_000_000)]
    n_max: u64,
    /// Also print the probability below which BC is tighter for every n.
    #[arg(long)]
    threshold: bool,
}

#[derive(Args, Debug)]
struct EnumerateArgs {
    /// `dot` or `horner`.
    #[arg(long, default_value = "dot")]
    kernel: String,
    /// `two-term-bf16`
    #[arg(long)]
    preset: Option<String>,
    #[arg(long, value_delimiter = ',', value_parser = parse_real, allow_hyphen_values = true)]
    a: Vec<f64>,
    #[arg(long, value_delimiter = ',', value_parser = parse_real, allow_hyphen_values = true)]
    b: Vec<f64>,
    /// Polynomial coefficients, lowest degree first.
    #[arg(long, value_delimiter = ',', value_parser = parse_real, allow_hyphen_values = true)]
    coeffs: Vec<f64>,
    #[arg(long, value_parser = parse_real, allow_hyphen_values = true)]
    x: Option<f64>,
    #[arg(long, default_value = "bf16", value_parser = parse_format)]
    format: FloatFormat,
    #[arg(long, default_value_t = oracle::DEFAULT_BRANCH_LIMIT)]
    branch_limit: u32,
}

/// Runs the CLI on `argv` (including the program name), writing to the
/// given streams, and returns the exit code.
pub fn run_cli<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let text = e.render().to_string();
            let _ = if code == 0 { write!(out, "{text}") } else { write!(err, "{text}") };
            return code;
        }
    };
    if cli.rng_info {
        let _ = writeln!(out, "rng: {}", RngStream::ALGORITHM);
    }
    let Some(cmd) = cli.command else {
        if cli.rng_info {
            return 0;
        }
        let _ = writeln!(err, "no subcommand given; see --help");
        return 1;
    };
    match dispatch(cmd, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            if e.is_range() {
                2
            } else {
                1
            }
        }
    }
}

/// Entry point for the binary.
pub fn cli_main() -> i32 {
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_cli(std::env::args_os(), &mut stdout.lock(), &mut stderr.lock())
}

fn dispatch(cmd: Command, out: &mut dyn Write) -> Result<i32> {
    match cmd {
        Command::Round(a) => cmd_round(a, out),
        Command::Dot(a) => {
            let mut cfg = ExperimentConfig::inner();
            a.common.apply(&mut cfg);
            if !a.n.is_empty() {
                cfg.n_list = a.n;
            }
            cfg.dist = a.dist;
            if a.allow_large_n {
                cfg.n_cap = u64::MAX;
            }
            experiment(&cfg, &a.common, out)
        }
        Command::Horner(a) => {
            let mut cfg = ExperimentConfig::horner();
            a.common.apply(&mut cfg);
            cfg.degree = a.degree;
            cfg.x_grid = a.x_grid;
            cfg.square_in_mode = !a.exact_square;
            experiment(&cfg, &a.common, out)
        }
        Command::Bounds(a) => cmd_bounds(a, out),
        Command::Crossover(a) => cmd_crossover(a, out),
        Command::Enumerate(a) => cmd_enumerate(a, out),
    }
}

fn cmd_round(a: RoundArgs, out: &mut dyn Write) -> Result<i32> {
    let value = match a.value.split_once('/') {
        Some((n, d)) => {
            let n = parse_real(n).map_err(Error::Parse)?;
            let d = parse_real(d).map_err(Error::Parse)?;
            ExactValue::quotient(n, d)?
        }
        None => ExactValue::from_f64(parse_real(&a.value).map_err(Error::Parse)?),
    };
    let br = fp_core::bracket(&value, &a.format)?;
    writeln!(out, "format: {} (u = {:e})", a.format, a.format.unit_roundoff())?;
    writeln!(out, "down: {:.17e}", br.down)?;
    writeln!(out, "up: {:.17e}", br.up)?;
    writeln!(out, "theta: {} ({:.17e})", theta_of_fast(&br.theta), br.theta.approx())?;
    if a.samples > 0 {
        let mut rng = RngStream::new(a.seed);
        let mut ups = 0usize;
        for _ in 0..a.samples {
            if sr_round(&value, &a.format, &mut rng)? == br.up && !br.is_exact() {
                ups += 1;
            }
        }
        writeln!(out, "samples: {} rounded up: {} ({:.6})", a.samples, ups, ups as f64 / a.samples as f64)?;
    }
    Ok(0)
}

fn experiment(cfg: &ExperimentConfig, common: &ExperimentArgs, out: &mut dyn Write) -> Result<i32> {
    let result = run_experiment(cfg)?;
    if let Some(dir) = &common.out {
        for path in write_outputs(&result, dir, common.svg)? {
            writeln!(out, "wrote {}", path.display())?;
        }
    } else {
        print_summary(&result, out)?;
    }
    Ok(if result.range_error_dominated() { 2 } else { 0 })
}

fn print_summary(r: &ExperimentOutput, out: &mut dyn Write) -> Result<()> {
    for h in r.header_lines() {
        writeln!(out, "# {h}")?;
    }
    writeln!(out, "size,x,k1,median_sr_error,mean_error,rn_error,bounds")?;
    for p in &r.points {
        let bounds: Vec<String> = p
            .bounds
            .iter()
            .map(|(k, l, v)| match l {
                Some(l) => format!("{k}@{l}={v:.3e}"),
                None => format!("{k}={v:.3e}"),
            })
            .collect();
        writeln!(
            out,
            "{},{},{:.3e},{:.3e},{:.3e},{:.3e},{}",
            p.size,
            p.x.map(|x| x.to_string()).unwrap_or_default(),
            p.k1,
            p.median_sr_error(),
            p.mean_error,
            p.rn_error,
            bounds.join(" ")
        )?;
    }
    Ok(())
}

fn cmd_bounds(a: BoundsArgs, out: &mut dyn Write) -> Result<i32> {
    let kind = BoundKind::from_name(&a.kind)?;
    let u = a.u.unwrap_or_else(|| a.format.unit_roundoff());
    let lambda = match (a.lambda, a.prob) {
        (Some(l), _) => l,
        (None, Some(p)) => 1.0 - p,
        (None, None) if kind.is_probabilistic() => {
            return Err(Error::Domain(format!("{kind} needs --lambda or --prob")));
        }
        (None, None) => 1.0,
    };
    let inputs = BoundInputs::new(a.n, u, lambda, a.k1)?;
    let r = bounds::bound(kind, &inputs)?;
    writeln!(out, "{:.16e}", r.value)?;
    writeln!(out, "# kind={} n={} u={:e} lambda={} k1={} ln_value={:.16e}", kind, a.n, u, lambda, a.k1, r.ln_value)?;
    Ok(0)
}

fn cmd_crossover(a: CrossoverArgs, out: &mut dyn Write) -> Result<i32> {
    let mut lambdas: Vec<f64> = a.lambda.clone();
    lambdas.extend(a.prob.iter().map(|p| 1.0 - p));
    if lambdas.is_empty() {
        lambdas = vec![0.05, 0.01];
    }
    let rows: Vec<(String, f64)> = match (a.u, a.format) {
        (Some(u), _) => vec![(format!("{u:e}"), u)],
        (None, Some(f)) => vec![(f.name().to_string(), f.unit_roundoff())],
        (None, None) => vec![
            ("bf16".into(), 2f64.powi(-7)),
            ("b16".into(), 2f64.powi(-10)),
            ("b32".into(), 2f64.powi(-23)),
            ("b64".into(), 2f64.powi(-52)),
        ],
    };
    writeln!(out, "u,prob,n_star,ln_bc_minus_ln_ah2_at_n_star,ln_bc_minus_ln_ah2_before")?;
    for (name, u) in &rows {
        for &lambda in &lambdas {
            let c = bounds::crossover_n(*u, lambda, a.n_max)?;
            let before = c.previous_gap.map(|g| format!("{g:.6e}")).unwrap_or_default();
            writeln!(out, "{name},{},{},{:.6e},{before}", 1.0 - lambda, c.n, c.gap)?;
        }
    }
    if a.threshold {
        writeln!(out, "# threshold (u -> 0): {:.6}", bounds::bc_ah2_threshold(None))?;
        for (name, u) in &rows {
            writeln!(out, "# threshold ({name}): {:.6}", bounds::bc_ah2_threshold(Some(*u)))?;
        }
    }
    Ok(0)
}

fn cmd_enumerate(a: EnumerateArgs, out: &mut dyn Write) -> Result<i32> {
    let (mut av, mut bv, mut coeffs, mut x) = (a.a, a.b, a.coeffs, a.x);
    match a.preset.as_deref() {
        None => {}
        Some("two-term-bf16") => {
            av = vec![1.0, 1.0];
            bv = vec![1.0, 2f64.powi(-9)];
            coeffs = vec![2f64.powi(-9), 1.0];
            x = Some(1.0);
        }
        Some(p) => return Err(Error::Parse(format!("unknown preset {p:?}"))),
    }
    let fmt = a.format;
    let (ip, poly);
    let kernel = match a.kernel.as_str() {
        "dot" => {
            ip = InnerProductInstance::new(av, bv)?;
            ip.validate_for(&fmt)?;
            KernelInstance::InnerProduct(&ip)
        }
        "horner" => {
            let x = x.ok_or_else(|| Error::Domain("horner enumeration needs --x".into()))?;
            poly = PolynomialInstance::new(coeffs, x)?;
            poly.validate_for(&fmt)?;
            KernelInstance::Horner(&poly)
        }
        k => return Err(Error::Parse(format!("unknown kernel {k:?}"))),
    };
    let dist = oracle::enumerate_distribution(kernel, &fmt, a.branch_limit)?;
    writeln!(out, "value,probability,probability_f64")?;
    for o in &dist.outcomes {
        writeln!(out, "{:.17e},{},{:.17e}", o.value, o.prob, o.prob.to_f64().unwrap_or(f64::NAN))?;
    }
    let reference = kernel.exact_reference();
    writeln!(out, "# exact: {}", reference.value)?;
    writeln!(out, "# mean: {}", oracle::dist_mean(&dist))?;
    writeln!(out, "# variance: {}", oracle::dist_variance(&dist))?;
    writeln!(out, "# variance bound: {}", oracle::exact_variance_bound(kernel, &fmt))?;
    Ok(0)
}

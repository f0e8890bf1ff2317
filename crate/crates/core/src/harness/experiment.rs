use num_traits::{Signed, ToPrimitive, Zero};
use rayon::prelude::*;

use super::config::{round_rational_nearest, ExperimentConfig, ExperimentKind};
use super::output::{BoundRow, SampleRow, StatsRow};
use crate::bounds::{self, BoundInputs, BoundKind, Kernel};
use crate::error::{Error, Result};
use crate::fp_core::{ExactValue, FloatFormat};
use crate::kernels::{
    chebyshev_coeffs, exact_reference_horner, exact_reference_inner, horner, inner_product, ExactReference,
    InnerProductInstance, PolynomialInstance,
};
use crate::oracle::{to_rational, DyadicSum, Rational};
use crate::sr_arith::{fp_op_value, rn_round, Op, RngStream, RoundingMode};

/// Outcome of comparing sample errors with a probabilistic bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoverageResult {
    pub covered: usize,
    pub total: usize,
    pub rate: f64,
    /// Three binomial standard deviations at the nominal rate.
    pub slack: f64,
    pub pass: bool,
}

/// Fraction of `errors` at most `bound`; passes iff the rate is at least
/// `1 - lambda - slack`. Non-finite errors count as not covered.
pub fn coverage_check(errors: &[f64], bound: f64, lambda: f64) -> Result<CoverageResult> {
    if errors.is_empty() {
        return Err(Error::Domain("coverage needs at least one sample".into()));
    }
    if !(lambda > 0.0 && lambda <= 1.0) {
        return Err(Error::Domain(format!("failure probability {lambda} outside (0, 1]")));
    }
    let total = errors.len();
    let covered = errors.iter().filter(|&&e| e <= bound).count();
    let rate = covered as f64 / total as f64;
    let slack = 3.0 * (lambda * (1.0 - lambda) / total as f64).sqrt();
    Ok(CoverageResult { covered, total, rate, slack, pass: rate >= 1.0 - lambda - slack })
}

/// Everything measured at one grid point or vector length.
#[derive(Debug, Clone, PartialEq)]
pub struct PointResult {
    /// Chebyshev degree `N` or vector length `n`.
    pub size: u64,
    /// `n` used in the bound formulas.
    pub bound_n: u64,
    pub x: Option<f64>,
    pub reference: f64,
    pub k1: f64,
    /// NaN where the run hit a range error.
    pub sr_values: Vec<f64>,
    pub sr_errors: Vec<f64>,
    pub rn_value: f64,
    pub rn_error: f64,
    pub mean_value: f64,
    pub mean_error: f64,
    pub empirical_variance: f64,
    pub variance_bound: f64,
    /// `(kind, lambda, value)`; `lambda` is `None` for the deterministic kind.
    pub bounds: Vec<(BoundKind, Option<f64>, f64)>,
    pub coverage: Vec<(BoundKind, f64, CoverageResult)>,
    pub range_errors: usize,
}

impl PointResult {
    pub fn bound(&self, kind: BoundKind, lambda: Option<f64>) -> Option<f64> {
        self.bounds.iter().find(|b| b.0 == kind && b.1 == lambda).map(|b| b.2)
    }

    pub fn coverage(&self, kind: BoundKind, lambda: f64) -> Option<&CoverageResult> {
        self.coverage.iter().find(|c| c.0 == kind && c.1 == lambda).map(|c| &c.2)
    }

    pub fn median_sr_error(&self) -> f64 {
        let mut e: Vec<f64> = self.sr_errors.iter().copied().filter(|e| !e.is_nan()).collect();
        if e.is_empty() {
            return f64::NAN;
        }
        e.sort_by(f64::total_cmp);
        let m = e.len();
        if m % 2 == 1 {
            e[m / 2]
        } else {
            0.5 * (e[m / 2 - 1] + e[m / 2])
        }
    }

    fn x_fraction(&self) -> (Option<i64>, Option<u64>) {
        let Some(x) = self.x else { return (None, None) };
        let r = to_rational(x);
        (r.numer().to_i64(), r.denom().to_u64())
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub config: ExperimentConfig,
    pub points: Vec<PointResult>,
    pub warnings: Vec<String>,
}

impl ExperimentOutput {
    pub fn runs(&self) -> usize {
        self.points.iter().map(|p| p.sr_values.len() + 1).sum()
    }

    pub fn range_errors(&self) -> usize {
        self.points.iter().map(|p| p.range_errors).sum()
    }

    /// More than half of all kernel runs hit a range error.
    pub fn range_error_dominated(&self) -> bool {
        2 * self.range_errors() > self.runs()
    }

    pub fn header_lines(&self) -> Vec<String> {
        let mut h = vec![
            format!("sr-bounds {}", env!("CARGO_PKG_VERSION")),
            format!("rng: {}", RngStream::ALGORITHM),
            format!("seed: {}", self.config.seed),
            format!("config: {}", self.config.describe()),
        ];
        h.extend(self.warnings.iter().map(|w| format!("warning: {w}")));
        h
    }

    /// Divisor applied to errors and bounds in emitted rows.
    fn divisor(&self, p: &PointResult) -> f64 {
        if self.config.normalize && p.k1.is_finite() {
            p.k1
        } else {
            1.0
        }
    }

    pub fn sample_rows(&self) -> Vec<SampleRow> {
        let cfg = &self.config;
        let mut rows = Vec::new();
        for p in &self.points {
            let (x_num, x_den) = p.x_fraction();
            let d = self.divisor(p);
            let row = |i: usize, mode: RoundingMode, value: f64, err: f64| SampleRow {
                experiment: cfg.experiment.name().into(),
                fmt: cfg.format.name().into(),
                n_or_big_n: p.size,
                x_num,
                x_den,
                sample_index: i,
                mode: mode.to_string(),
                value,
                reference: p.reference,
                rel_error: err / d,
            };
            for (i, (&v, &e)) in p.sr_values.iter().zip(&p.sr_errors).enumerate() {
                rows.push(row(i, RoundingMode::StochasticNearest, v, e));
            }
            rows.push(row(0, RoundingMode::NearestEven, p.rn_value, p.rn_error));
        }
        rows
    }

    pub fn bound_rows(&self) -> Vec<BoundRow> {
        let cfg = &self.config;
        let mut rows = Vec::new();
        for p in &self.points {
            let (x_num, x_den) = p.x_fraction();
            let d = self.divisor(p);
            for &(kind, lambda, value) in &p.bounds {
                rows.push(BoundRow {
                    experiment: cfg.experiment.name().into(),
                    fmt: cfg.format.name().into(),
                    n_or_big_n: p.size,
                    x_num,
                    x_den,
                    kind: kind.name().into(),
                    lambda,
                    k1: p.k1,
                    bound_value: value / d,
                });
            }
        }
        rows
    }

    pub fn stats_rows(&self) -> Vec<StatsRow> {
        let cfg = &self.config;
        let mut rows = Vec::new();
        for p in &self.points {
            let (x_num, x_den) = p.x_fraction();
            let d = self.divisor(p);
            for (kind, lambda, c) in &p.coverage {
                rows.push(StatsRow {
                    experiment: cfg.experiment.name().into(),
                    fmt: cfg.format.name().into(),
                    n_or_big_n: p.size,
                    x_num,
                    x_den,
                    mean_value: p.mean_value,
                    mean_of_samples_rel_error: p.mean_error / d,
                    rn_rel_error: p.rn_error / d,
                    empirical_variance: p.empirical_variance,
                    variance_bound: p.variance_bound,
                    coverage_kind: kind.name().into(),
                    coverage_lambda: *lambda,
                    coverage_rate: c.rate,
                });
            }
        }
        rows
    }
}

fn with_pool<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match threads {
        None => Ok(f()),
        Some(t) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(t)
                .build()
                .map_err(|e| Error::Domain(format!("thread pool: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

fn rel_error_rational(approx: &Rational, reference: &Rational) -> f64 {
    let diff = (approx - reference).abs();
    if reference.is_zero() {
        return if diff.is_zero() { 0.0 } else { f64::INFINITY };
    }
    (diff / reference.abs()).to_f64().unwrap_or(f64::INFINITY)
}

/// Kernel outputs at one unit: `samples` SR runs then one RN run.
struct Runs {
    sr: Vec<f64>,
    rn: f64,
    range_errors: usize,
}

fn collect_runs(
    samples: usize,
    unit: &RngStream,
    run: impl Fn(RoundingMode, &mut RngStream) -> Result<f64> + Sync,
) -> Result<Runs> {
    let results: Vec<Result<f64>> = (0..=samples)
        .into_par_iter()
        .map(|i| {
            if i < samples {
                let mut rng = unit.split(i as u64 + 1);
                run(RoundingMode::StochasticNearest, &mut rng)
            } else {
                let mut rng = unit.split(u64::MAX);
                run(RoundingMode::NearestEven, &mut rng)
            }
        })
        .collect();
    let mut range_errors = 0;
    let mut values = Vec::with_capacity(results.len());
    for r in results {
        match r {
            Ok(v) => values.push(v),
            Err(e) if e.is_range() => {
                range_errors += 1;
                values.push(f64::NAN);
            }
            Err(e) => return Err(e),
        }
    }
    let rn = values.pop().expect("RN run");
    Ok(Runs { sr: values, rn, range_errors })
}

struct PointSpec {
    size: u64,
    bound_n: u64,
    x: Option<f64>,
    kernel: Kernel,
}

fn summarize(cfg: &ExperimentConfig, spec: PointSpec, reference: &ExactReference, runs: Runs) -> Result<PointResult> {
    let u = cfg.format.unit_roundoff();
    let k1 = reference.cond_f64();
    let ref_f64 = reference.value_f64();
    let err = |v: f64| if v.is_nan() { f64::NAN } else { reference.relative_error(v) };
    let sr_errors: Vec<f64> = runs.sr.iter().map(|&v| err(v)).collect();

    let finite: Vec<f64> = runs.sr.iter().copied().filter(|v| v.is_finite()).collect();
    let (mean_value, mean_error, empirical_variance) = if finite.is_empty() {
        (f64::NAN, f64::NAN, f64::NAN)
    } else {
        let mut sum = DyadicSum::new();
        finite.iter().for_each(|&v| sum.add(v));
        let mean = sum.value() / Rational::from_integer((finite.len() as u64).into());
        let mean_f = mean.to_f64().unwrap_or(f64::NAN);
        let var = if finite.len() < 2 {
            0.0
        } else {
            finite.iter().map(|v| (v - mean_f).powi(2)).sum::<f64>() / (finite.len() - 1) as f64
        };
        (mean_f, rel_error_rational(&mean, &reference.value), var)
    };

    let probabilistic: &[BoundKind] = match spec.kernel {
        Kernel::InnerProduct => &[BoundKind::Ah1Ip, BoundKind::Ah2Ip, BoundKind::BcIp],
        Kernel::Horner => &[BoundKind::AhH, BoundKind::BcH],
    };
    let det = match spec.kernel {
        Kernel::InnerProduct => BoundKind::DetIp,
        Kernel::Horner => BoundKind::DetH,
    };
    let k1_for_bounds = if k1.is_finite() { k1.max(1.0) } else { f64::INFINITY };
    let eval = |kind: BoundKind, lambda: f64| -> Result<f64> {
        if spec.bound_n == 0 {
            return Ok(0.0);
        }
        if !k1_for_bounds.is_finite() {
            return Ok(f64::INFINITY);
        }
        let inputs = BoundInputs::new(spec.bound_n, u, lambda, k1_for_bounds)?;
        Ok(bounds::bound(kind, &inputs)?.value)
    };
    let mut bound_list = vec![(det, None, eval(det, 1.0)?)];
    let mut coverage = Vec::new();
    for &lambda in &cfg.lambdas {
        for &kind in probabilistic {
            let b = eval(kind, lambda)?;
            bound_list.push((kind, Some(lambda), b));
            coverage.push((kind, lambda, coverage_check(&sr_errors, b, lambda)?));
        }
    }
    let variance_bound = if spec.bound_n == 0 {
        0.0
    } else {
        bounds::variance_bound(spec.kernel, spec.bound_n, u, k1_for_bounds, ref_f64)
    };

    Ok(PointResult {
        size: spec.size,
        bound_n: spec.bound_n,
        x: spec.x,
        reference: ref_f64,
        k1,
        sr_errors,
        rn_error: err(runs.rn),
        sr_values: runs.sr,
        rn_value: runs.rn,
        mean_value,
        mean_error,
        empirical_variance,
        variance_bound,
        bounds: bound_list,
        coverage,
        range_errors: runs.range_errors,
    })
}

/// Chebyshev coefficients rounded to the target format.
fn chebyshev_in_format(degree: u32, fmt: &FloatFormat, warnings: &mut Vec<String>) -> Result<Vec<f64>> {
    let ints = chebyshev_coeffs(degree)?;
    let mut rounded = 0;
    let coeffs = ints
        .iter()
        .map(|&c| {
            let r = round_rational_nearest(&Rational::from_integer(c.into()), fmt)?;
            if r != c as f64 {
                rounded += 1;
            }
            Ok(r)
        })
        .collect::<Result<Vec<f64>>>()?;
    if rounded > 0 {
        warnings.push(format!("{rounded} Chebyshev coefficients rounded to nearest in {fmt}"));
    }
    Ok(coeffs)
}

/// Horner evaluation of `T_N(x)` in powers of `x²` over the configured grid.
pub fn run_horner_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    cfg.validate()?;
    if cfg.experiment != ExperimentKind::HornerChebyshev {
        return Err(Error::Domain("configuration is not a Horner experiment".into()));
    }
    let fmt = cfg.format;
    let mut warnings = Vec::new();
    let coeffs = chebyshev_in_format(cfg.degree, &fmt, &mut warnings)?;
    if cfg.degree == 0 {
        warnings.push("degree 0 performs no rounding operations; all errors and bounds are zero".into());
    }
    let grid = cfg.x_grid.points_in(&fmt)?;
    let rounded = grid.iter().filter(|p| p.rounded).count();
    if rounded > 0 {
        warnings.push(format!("{rounded} grid points rounded to nearest in {fmt}"));
    }
    let inexact_squares = grid.iter().filter(|p| !fmt.is_representable(p.x * p.x)).count();
    if inexact_squares > 0 {
        warnings.push(format!("x^2 is not representable in {fmt} at {inexact_squares} grid points"));
    }
    let root = RngStream::new(cfg.seed);
    let points = with_pool(cfg.threads, || {
        grid.par_iter()
            .enumerate()
            .map(|(idx, gp)| {
                let x = gp.x;
                // x has at most 24 significant bits, so x² is exact in the carrier.
                let reference = exact_reference_horner(&PolynomialInstance::new(coeffs.clone(), x * x)?);
                let unit = root.split(idx as u64);
                let runs = collect_runs(cfg.samples, &unit, |mode, rng| {
                    let w = if cfg.square_in_mode {
                        fp_op_value(x, x, Op::Mul, &fmt, mode, rng)?
                    } else {
                        round_rational_nearest(&(to_rational(x) * to_rational(x)), &fmt)?
                    };
                    let inst = PolynomialInstance::new(coeffs.clone(), w)?;
                    Ok(horner(&inst, &fmt, mode, rng, false)?.value)
                })?;
                let spec = PointSpec {
                    size: cfg.degree as u64,
                    bound_n: cfg.degree as u64 / 2,
                    x: Some(x),
                    kernel: Kernel::Horner,
                };
                summarize(cfg, spec, &reference, runs)
            })
            .collect::<Result<Vec<_>>>()
    })??;
    Ok(ExperimentOutput { config: cfg.clone(), points, warnings })
}

/// Draws `n` entries from the configured distribution, rounded to nearest in
/// `fmt`; values below the normal range flush to zero.
fn draw_vector(n: usize, cfg: &ExperimentConfig, rng: &mut RngStream) -> Result<Vec<f64>> {
    (0..n)
        .map(|_| {
            let v = cfg.dist.map(rng.next_uniform());
            match rn_round(&ExactValue::from_f64(v), &cfg.format) {
                Err(Error::Underflow { .. }) => Ok(0.0),
                r => r,
            }
        })
        .collect()
}

/// Recursive inner products of random vectors for each configured length.
pub fn run_inner_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    cfg.validate()?;
    if cfg.experiment != ExperimentKind::InnerUniform {
        return Err(Error::Domain("configuration is not an inner-product experiment".into()));
    }
    let fmt = cfg.format;
    let root = RngStream::new(cfg.seed);
    let points = with_pool(cfg.threads, || {
        cfg.n_list
            .iter()
            .enumerate()
            .map(|(idx, &n)| {
                let unit = root.split(idx as u64);
                let mut input_rng = unit.split(0);
                let a = draw_vector(n as usize, cfg, &mut input_rng)?;
                let b = draw_vector(n as usize, cfg, &mut input_rng)?;
                let inst = InnerProductInstance::new(a, b)?;
                let reference = exact_reference_inner(&inst);
                let runs =
                    collect_runs(cfg.samples, &unit, |mode, rng| Ok(inner_product(&inst, &fmt, mode, rng, false)?.value))?;
                let spec = PointSpec { size: n, bound_n: n, x: None, kernel: Kernel::InnerProduct };
                summarize(cfg, spec, &reference, runs)
            })
            .collect::<Result<Vec<_>>>()
    })??;
    Ok(ExperimentOutput { config: cfg.clone(), points, warnings: Vec::new() })
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    match cfg.experiment {
        ExperimentKind::HornerChebyshev => run_horner_experiment(cfg),
        ExperimentKind::InnerUniform => run_inner_experiment(cfg),
    }
}

//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.

mod common;

use std::time::{Duration, Instant};

use common::{random_value, safe_exponents};
use num_traits::{One, Zero};
use sr_bounds::bounds::{self, bound_horner, compare_bounds, crossover_n, variance_log_margin, BoundInputs, BoundKind};
use sr_bounds::fp_core::{self, FloatFormat};
use sr_bounds::harness::{run_experiment, write_outputs, ExperimentConfig};
use sr_bounds::kernels::{InnerProductInstance, KernelInstance, PolynomialInstance};
use sr_bounds::oracle::{
    bracket_rational, dist_mean, dist_variance, enumerate_distribution, exact_op, exact_variance_bound, theta_of_fast,
    theta_rational, to_rational, Rational, DEFAULT_BRANCH_LIMIT,
};
use sr_bounds::sr_arith::Op;
use sr_bounds::RngStream;

type Outcome = Result<String, String>;

struct Criterion {
    id: u32,
    name: &'static str,
    limit: Option<Duration>,
    run: fn() -> Outcome,
}

enum Instance {
    Dot(InnerProductInstance),
    Poly(PolynomialInstance),
}

impl Instance {
    fn kernel(&self) -> KernelInstance<'_> {
        match self {
            Instance::Dot(i) => KernelInstance::InnerProduct(i),
            Instance::Poly(p) => KernelInstance::Horner(p),
        }
    }
}

/// Randomized enumerable instances paired with their format; half inner
/// products with n ≤ 4, half Horner with degree ≤ 3.
fn enumerable_instances(count: usize) -> Vec<(Instance, FloatFormat)> {
    let mut rng = RngStream::new(0xacce);
    let formats = [FloatFormat::BFLOAT16, FloatFormat::BINARY16];
    let mut out = Vec::new();
    let mut k = 0usize;
    while out.len() < count {
        let fmt = formats[k % 2];
        let v = |rng: &mut RngStream| random_value(rng, &fmt, -3, 3);
        let inst = if k % 4 < 2 {
            let n = 1 + (rng.next_u64() % 4) as usize;
            let a = (0..n).map(|_| v(&mut rng)).collect();
            let b = (0..n).map(|_| v(&mut rng)).collect();
            Instance::Dot(InnerProductInstance::new(a, b).unwrap())
        } else {
            let degree = 1 + (rng.next_u64() % 3) as usize;
            let c = (0..=degree).map(|_| v(&mut rng)).collect();
            Instance::Poly(PolynomialInstance::new(c, v(&mut rng)).unwrap())
        };
        k += 1;
        // Instances whose computation leaves the format's range are redrawn.
        if enumerate_distribution(inst.kernel(), &fmt, DEFAULT_BRANCH_LIMIT).is_ok() {
            out.push((inst, fmt));
        }
    }
    out
}

fn c1_unbiasedness() -> Outcome {
    let instances = enumerable_instances(100);
    let mut paths = 0;
    for (i, (inst, fmt)) in instances.iter().enumerate() {
        let d = enumerate_distribution(inst.kernel(), fmt, DEFAULT_BRANCH_LIMIT).map_err(|e| e.to_string())?;
        if !d.total_probability().is_one() {
            return Err(format!("instance {i}: probabilities do not sum to 1"));
        }
        if dist_mean(&d) != inst.kernel().exact_reference().value {
            return Err(format!("instance {i}: mean differs from the exact value"));
        }
        paths += d.paths.len();
    }
    Ok(format!("{} instances, {paths} rounding paths, all means exact", instances.len()))
}

fn c2_variance_bounds() -> Outcome {
    let instances = enumerable_instances(100);
    let mut tightest = f64::INFINITY;
    for (i, (inst, fmt)) in instances.iter().enumerate() {
        let d = enumerate_distribution(inst.kernel(), fmt, DEFAULT_BRANCH_LIMIT).map_err(|e| e.to_string())?;
        let var = dist_variance(&d);
        let bound = exact_variance_bound(inst.kernel(), fmt);
        if var > bound {
            return Err(format!("instance {i}: variance {var} exceeds {bound}"));
        }
        if !bound.is_zero() {
            use num_traits::ToPrimitive;
            tightest = tightest.min((&bound - &var).to_f64().unwrap() / bound.to_f64().unwrap());
        }
    }
    Ok(format!("{} instances within bound; smallest relative slack {tightest:.3e}", instances.len()))
}

fn c3_single_op_law() -> Outcome {
    let mut rng = RngStream::new(0x5e);
    let formats = [FloatFormat::BFLOAT16, FloatFormat::BINARY16, FloatFormat::BINARY32];
    let ops = [Op::Add, Op::Sub, Op::Mul];
    let one = Rational::one();
    let mut checked = 0u32;
    let mut k = 0usize;
    while checked < 10_000 {
        let fmt = formats[k % 3];
        let op = ops[k / 3 % 3];
        k += 1;
        let (lo, hi) = safe_exponents(&fmt);
        let a = random_value(&mut rng, &fmt, lo, hi);
        let b = if op == Op::Mul {
            random_value(&mut rng, &fmt, lo, hi)
        } else {
            let e = a.abs().log2().floor() as i32 - (rng.next_u64() % 12) as i32;
            random_value(&mut rng, &fmt, e.clamp(lo, hi), e.clamp(lo, hi))
        };
        let exact = op.exact(a, b).map_err(|e| e.to_string())?;
        let Ok(fast) = fp_core::theta(&exact, &fmt) else { continue };
        let slow = theta_rational(a, b, op, &fmt).map_err(|e| e.to_string())?;
        if slow.is_zero() {
            continue;
        }
        if theta_of_fast(&fast) != slow {
            return Err(format!("θ mismatch for {a:e} {} {b:e} in {fmt}", op.symbol()));
        }
        let c = exact_op(a, b, op).unwrap();
        let br = bracket_rational(&c, &fmt).unwrap();
        let var = &slow * (&br.up - &c) * (&br.up - &c) + (&one - &slow) * (&br.down - &c) * (&br.down - &c);
        let eps = to_rational(fp_core::epsilon(&exact, &fmt).map_err(|e| e.to_string())?);
        if var != &eps * &eps * &slow * (&one - &slow) {
            return Err(format!("variance law fails for {a:e} {} {b:e}", op.symbol()));
        }
        checked += 1;
    }
    Ok(format!("{checked} inexact ops: θ and ε²θ(1-θ) exact"))
}

fn c4_inequality() -> Outcome {
    let mut rng = RngStream::new(0x51);
    let mut min_margin = f64::INFINITY;
    for _ in 0..10_000 {
        // Log-uniform n in [1, 10^12].
        let n = (10f64.powf(12.0 * rng.next_uniform()).floor() as u64).clamp(1, 1_000_000_000_000);
        let k = 7 + (rng.next_u64() % 46) as i32;
        let m = variance_log_margin(n, 2f64.powi(-k));
        if m < 0.0 {
            return Err(format!("violation at n={n}, u=2^-{k}: margin {m:e}"));
        }
        min_margin = min_margin.min(m);
    }
    Ok(format!("10000 cases, smallest log margin {min_margin:.3e}"))
}

fn c5_table() -> Outcome {
    let rows = [
        (0.95, [(7, 110.0), (10, 890.0), (23, 7.3e6), (52, 3.9e15)]),
        (0.99, [(7, 220.0), (10, 1810.0), (23, 1.48e7), (52, 7.9e15)]),
    ];
    let mut detail = Vec::new();
    let mut worst = 0.0f64;
    for (prob, entries) in rows {
        for (k, paper) in entries {
            let c = crossover_n(2f64.powi(-k), 1.0 - prob, u64::MAX / 4).map_err(|e| e.to_string())?;
            let rel = (c.n as f64 - paper) / paper;
            worst = worst.max(rel.abs());
            detail.push(format!("{prob}/2^-{k}: {} ({:+.1}%)", c.n, 100.0 * rel));
            if rel.abs() > 0.05 {
                return Err(format!("{} outside ±5%", detail.join(", ")));
            }
        }
    }
    Ok(format!("{}; worst {:.1}%", detail.join(", "), 100.0 * worst))
}

fn c6_threshold() -> Outcome {
    let limit = bounds::bc_ah2_threshold(None);
    let per_format: Vec<String> = [(7, "bf16"), (10, "b16"), (23, "b32")]
        .iter()
        .map(|&(k, name)| format!("{name} {:.4}", bounds::bc_ah2_threshold(Some(2f64.powi(-k)))))
        .collect();
    let detail = format!("computed {limit:.4} (u -> 0); {}; target 0.758 ± 0.002", per_format.join(", "));
    if (limit - 0.758).abs() <= 0.002 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn c7_horner() -> Outcome {
    let cfg = ExperimentConfig { seed: 2024, ..ExperimentConfig::horner() };
    let out = run_experiment(&cfg).map_err(|e| e.to_string())?;
    let (mut a, mut b, mut c, mut d) = (true, true, true, true);
    let mut notes = Vec::new();
    for p in &out.points {
        let x = p.x.unwrap();
        let det = p.bound(BoundKind::DetH, None).unwrap();
        if p.sr_errors.iter().any(|&e| !(e <= det)) {
            a = false;
            notes.push(format!("(a) x={x}"));
        }
        let bound = |kind, l| p.bound(kind, Some(l)).unwrap();
        if !(bound(BoundKind::BcH, 0.5) < bound(BoundKind::AhH, 0.5)) {
            b = false;
            notes.push(format!("(b) x={x}"));
        }
        if !(bound(BoundKind::AhH, 0.1) < bound(BoundKind::BcH, 0.1)) {
            c = false;
            notes.push(format!("(c) x={x}"));
        }
        for (kind, l, cov) in &p.coverage {
            if !cov.pass {
                d = false;
                notes.push(format!("(d) x={x} {kind} λ={l} rate {}", cov.rate));
            }
        }
    }
    let k1_max = out.points.iter().map(|p| p.k1).fold(0.0, f64::max);
    let summary = format!(
        "{} grid points × {} samples, K1 up to {k1_max:.2e}; (a) {a} (b) {b} (c) {c} (d) {d}",
        out.points.len(),
        cfg.samples
    );
    if a && b && c && d {
        Ok(summary)
    } else {
        Err(format!("{summary}; {}", notes.join(", ")))
    }
}

fn c8_inner() -> Outcome {
    let cfg = ExperimentConfig {
        seed: 2024,
        samples: 10,
        n_list: vec![1_000, 100_000, 10_000_000],
        ..ExperimentConfig::inner()
    };
    let out = run_experiment(&cfg).map_err(|e| e.to_string())?;
    let describe: Vec<String> = out
        .points
        .iter()
        .map(|p| format!("n={}: median SR {:.2e}, RN {:.2e}", p.size, p.median_sr_error(), p.rn_error))
        .collect();
    let large = &out.points[2];
    let small = &out.points[0];
    let ratio = small.median_sr_error() / small.rn_error;
    let ok = large.median_sr_error() < large.rn_error && (0.1..=10.0).contains(&ratio);
    if ok {
        Ok(describe.join("; "))
    } else {
        Err(format!("{}; n=1000 ratio {ratio:.2}", describe.join("; ")))
    }
}

fn c9_determinism() -> Outcome {
    let mut files = Vec::new();
    for threads in [1, 8, 1] {
        let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
        let cfg = ExperimentConfig { seed: 99, threads: Some(threads), ..ExperimentConfig::horner() };
        let out = run_experiment(&cfg).map_err(|e| e.to_string())?;
        write_outputs(&out, dir.path(), false).map_err(|e| e.to_string())?;
        files.push(std::fs::read(dir.path().join("samples.csv")).map_err(|e| e.to_string())?);
    }
    if files.windows(2).all(|w| w[0] == w[1]) {
        Ok(format!("samples.csv identical ({} bytes) for 1, 8 and 1 threads", files[0].len()))
    } else {
        Err("samples.csv differs between runs".into())
    }
}

fn c10_bound_only() -> Outcome {
    let u = 2f64.powi(-23);
    let grid: Vec<u64> = (0..=16).map(|e| 10u64.pow(e)).collect();
    let rows = compare_bounds(u, 0.1, &grid).map_err(|e| e.to_string())?;
    if rows.iter().any(|r| !(r.bc.ln_value.is_finite() && r.ah1.ln_value.is_finite() && r.ah2.ln_value.is_finite())) {
        return Err("non-finite log bound on the grid".into());
    }
    let r13 = rows.iter().find(|r| r.n == 10u64.pow(13)).unwrap();
    // Horner counterparts stay finite in log form as well.
    let h = bound_horner(BoundKind::AhH, &BoundInputs::new(10u64.pow(16), u, 0.1, 1.0).unwrap()).unwrap();
    let detail = format!(
        "n=1e13: BC {:.3e} < AH1 {:.3e}; ln AH-H at n=1e16 = {:.3e}",
        r13.bc.value, r13.ah1.value, h.ln_value
    );
    if r13.bc.ln_value < r13.ah1.ln_value && h.ln_value.is_finite() {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn main() {
    let criteria = [
        Criterion { id: 1, name: "exact unbiasedness", limit: Some(Duration::from_secs(10)), run: c1_unbiasedness },
        Criterion { id: 2, name: "variance bounds", limit: None, run: c2_variance_bounds },
        Criterion { id: 3, name: "single-op law", limit: Some(Duration::from_secs(30)), run: c3_single_op_law },
        Criterion { id: 4, name: "variance inequality", limit: None, run: c4_inequality },
        Criterion { id: 5, name: "crossover table", limit: Some(Duration::from_secs(5)), run: c5_table },
        Criterion { id: 6, name: "BC/AH2 probability threshold", limit: None, run: c6_threshold },
        Criterion { id: 7, name: "Chebyshev T_20 regime", limit: Some(Duration::from_secs(60)), run: c7_horner },
        Criterion { id: 8, name: "inner product regime", limit: Some(Duration::from_secs(300)), run: c8_inner },
        Criterion { id: 9, name: "determinism", limit: None, run: c9_determinism },
        Criterion { id: 10, name: "bound-only large n", limit: None, run: c10_bound_only },
    ];
    let mut failed = 0;
    for c in &criteria {
        let start = Instant::now();
        let result = (c.run)();
        let elapsed = start.elapsed();
        let result = match (result, c.limit) {
            (Ok(d), Some(limit)) if elapsed > limit => Err(format!("{d}; exceeded {limit:?}")),
            (r, _) => r,
        };
        let (status, detail) = match result {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!("criterion {:>2} {status}: {} [{:.2}s] {detail}", c.id, c.name, elapsed.as_secs_f64());
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}

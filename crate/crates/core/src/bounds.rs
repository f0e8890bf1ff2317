//! Deterministic, Azuma-Hoeffding and Bienaymé-Chebyshev forward-error
//! bounds for the recursive inner product and Horner's rule.
//!
//! All evaluation happens in double-double arithmetic and, where the value
//! can exceed the `f64` range (`γ_{2n}(u)` for `nu >> 1`), in the log
//! domain. [`BoundReport::ln_value`] is always finite for valid inputs even
//! when [`BoundReport::value`] overflows to infinity.

use std::fmt;

use crate::ddouble::Dd;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Kernel {
    InnerProduct,
    Horner,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BoundKind {
    /// `K1 γ_n(u)`
    DetIp,
    /// `K1 γ̃_n(√(2 ln(2n/λ)))`
    Ah1Ip,
    /// `K1 √(u γ_2n(u)) √(ln(2/λ))`
    Ah2Ip,
    /// `K1 √(γ_n(u²)/λ)`
    BcIp,
    /// `K1 γ_2n(u)`
    DetH,
    /// `K1 √(u γ_4n(u)) √(ln(2/λ))`
    AhH,
    /// `K1 √(γ_2n(u²)/λ)`
    BcH,
    /// Relative variance bound `K1² γ_n(u²)`.
    VarIp,
    /// Relative variance bound `K1² γ_2n(u²)`.
    VarH,
}

impl BoundKind {
    pub const ALL: [BoundKind; 9] = [
        BoundKind::DetIp,
        BoundKind::Ah1Ip,
        BoundKind::Ah2Ip,
        BoundKind::BcIp,
        BoundKind::DetH,
        BoundKind::AhH,
        BoundKind::BcH,
        BoundKind::VarIp,
        BoundKind::VarH,
    ];

    pub fn kernel(self) -> Kernel {
        match self {
            BoundKind::DetIp | BoundKind::Ah1Ip | BoundKind::Ah2Ip | BoundKind::BcIp | BoundKind::VarIp => {
                Kernel::InnerProduct
            }
            _ => Kernel::Horner,
        }
    }

    pub fn is_probabilistic(self) -> bool {
        matches!(self, BoundKind::Ah1Ip | BoundKind::Ah2Ip | BoundKind::BcIp | BoundKind::AhH | BoundKind::BcH)
    }

    pub fn name(self) -> &'static str {
        match self {
            BoundKind::DetIp => "det-ip",
            BoundKind::Ah1Ip => "ah1-ip",
            BoundKind::Ah2Ip => "ah2-ip",
            BoundKind::BcIp => "bc-ip",
            BoundKind::DetH => "det-h",
            BoundKind::AhH => "ah-h",
            BoundKind::BcH => "bc-h",
            BoundKind::VarIp => "var-ip",
            BoundKind::VarH => "var-h",
        }
    }

    pub fn from_name(s: &str) -> Result<Self> {
        let s = s.to_ascii_lowercase().replace('_', "-");
        BoundKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Parse(format!("unknown bound kind {s:?}")))
    }
}

impl fmt::Display for BoundKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundInputs {
    pub n: u64,
    pub u: f64,
    /// Failure probability; ignored by deterministic and variance kinds.
    pub lambda: f64,
    pub cond_k1: f64,
}

impl BoundInputs {
    pub fn new(n: u64, u: f64, lambda: f64, cond_k1: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::Domain("n must be at least 1".into()));
        }
        if !(u > 0.0 && u < 1.0) {
            return Err(Error::Domain(format!("unit roundoff {u} outside (0, 1)")));
        }
        if !(cond_k1 >= 1.0) {
            return Err(Error::Domain(format!("condition number {cond_k1} below 1")));
        }
        Ok(BoundInputs { n, u, lambda, cond_k1 })
    }

    fn check_lambda(&self) -> Result<()> {
        // λ = 1 is admitted: the statement is vacuous but the formula is defined.
        if self.lambda > 0.0 && self.lambda <= 1.0 {
            Ok(())
        } else {
            Err(Error::Domain(format!("failure probability {} outside (0, 1]", self.lambda)))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundReport {
    pub kind: BoundKind,
    pub value: f64,
    /// Natural log of `value`, finite even where `value` overflows.
    pub ln_value: f64,
    pub inputs: BoundInputs,
}

/// `ln(e^t - 1)` for `t > 0`.
fn ln_expm1(t: Dd) -> Dd {
    if t.hi < 0.5 {
        t.expm1().ln()
    } else {
        t + (-(-t).exp()).ln1p()
    }
}

fn ln_gamma_dd(n: Dd, u: Dd) -> Dd {
    ln_expm1(n * u.ln1p())
}

fn gamma_dd(n: Dd, u: Dd) -> Dd {
    (n * u.ln1p()).expm1()
}

/// `γ_n(u) = (1+u)^n - 1`, evaluated as `expm1(n ln1p(u))` in double-double.
pub fn gamma(n: u64, u: f64) -> f64 {
    gamma_dd(Dd::from_u64(n), Dd::new(u)).to_f64()
}

/// `ln γ_n(u)`; finite for every `n >= 1`, `0 < u < 1`.
pub fn ln_gamma(n: u64, u: f64) -> f64 {
    ln_gamma_dd(Dd::from_u64(n), Dd::new(u)).to_f64()
}

fn tilde_exponent(n: Dd, u: Dd, lam_arg: Dd) -> Dd {
    (lam_arg * n.sqrt() * u + n * u * u) / (Dd::ONE - u)
}

/// `γ̃_n(λ) = exp((λ √n u + n u²)/(1-u)) - 1`.
pub fn gamma_tilde(n: u64, u: f64, lam_arg: f64) -> f64 {
    tilde_exponent(Dd::from_u64(n), Dd::new(u), Dd::new(lam_arg)).expm1().to_f64()
}

/// Natural log of the bound factor (without `K1`).
fn ln_factor(kind: BoundKind, n: u64, u: f64, lambda: f64) -> Dd {
    let nd = Dd::from_u64(n);
    let ud = Dd::new(u);
    let u2 = ud * ud;
    let two = Dd::new(2.0);
    let half = Dd::new(0.5);
    let lam = Dd::new(lambda);
    let ln_ln_2_over_lam = || (two / lam).ln().ln();
    match kind {
        BoundKind::DetIp => ln_gamma_dd(nd, ud),
        BoundKind::DetH => ln_gamma_dd(two * nd, ud),
        BoundKind::Ah1Ip => {
            let lam_arg = (two * (two * nd / lam).ln()).sqrt();
            ln_expm1(tilde_exponent(nd, ud, lam_arg))
        }
        BoundKind::Ah2Ip => half * (ud.ln() + ln_gamma_dd(two * nd, ud) + ln_ln_2_over_lam()),
        BoundKind::AhH => half * (ud.ln() + ln_gamma_dd(Dd::new(4.0) * nd, ud) + ln_ln_2_over_lam()),
        BoundKind::BcIp => half * (ln_gamma_dd(nd, u2) - lam.ln()),
        BoundKind::BcH => half * (ln_gamma_dd(two * nd, u2) - lam.ln()),
        BoundKind::VarIp => ln_gamma_dd(nd, u2),
        BoundKind::VarH => ln_gamma_dd(two * nd, u2),
    }
}

fn report(kind: BoundKind, inputs: &BoundInputs) -> Result<BoundReport> {
    if kind.is_probabilistic() {
        inputs.check_lambda()?;
    }
    let k1 = Dd::new(inputs.cond_k1).ln();
    let k1_power = if matches!(kind, BoundKind::VarIp | BoundKind::VarH) { k1 + k1 } else { k1 };
    let ln_value = k1_power + ln_factor(kind, inputs.n, inputs.u, inputs.lambda);
    // Direct evaluation keeps full precision where it fits in f64.
    let direct = match kind {
        BoundKind::DetIp => Some(gamma_dd(Dd::from_u64(inputs.n), Dd::new(inputs.u))),
        BoundKind::DetH => Some(gamma_dd(Dd::from_u64(2 * inputs.n), Dd::new(inputs.u))),
        _ => None,
    };
    let value = match direct {
        Some(g) if g.hi.is_finite() => (Dd::new(inputs.cond_k1) * g).to_f64(),
        _ => ln_value.exp().to_f64(),
    };
    Ok(BoundReport { kind, value, ln_value: ln_value.to_f64(), inputs: *inputs })
}

/// Inner-product bound of the given kind.
pub fn bound_ip(kind: BoundKind, inputs: &BoundInputs) -> Result<BoundReport> {
    if kind.kernel() != Kernel::InnerProduct {
        return Err(Error::Domain(format!("{kind} is not an inner-product bound")));
    }
    report(kind, inputs)
}

/// Horner bound of the given kind; `inputs.n` is the polynomial degree.
pub fn bound_horner(kind: BoundKind, inputs: &BoundInputs) -> Result<BoundReport> {
    if kind.kernel() != Kernel::Horner {
        return Err(Error::Domain(format!("{kind} is not a Horner bound")));
    }
    report(kind, inputs)
}

/// Either kernel's bound, dispatching on `kind`.
pub fn bound(kind: BoundKind, inputs: &BoundInputs) -> Result<BoundReport> {
    report(kind, inputs)
}

/// `reference² K1² γ_m(u²)` with `m = n` (inner product) or `2n` (Horner).
pub fn variance_bound(kernel: Kernel, n: u64, u: f64, cond_k1: f64, reference: f64) -> f64 {
    if reference == 0.0 || n == 0 {
        return 0.0;
    }
    let m = match kernel {
        Kernel::InnerProduct => n,
        Kernel::Horner => 2 * n,
    };
    let ud = Dd::new(u);
    let y = Dd::new(reference) * Dd::new(cond_k1);
    (y * y * gamma_dd(Dd::from_u64(m), ud * ud)).to_f64()
}

/// Lower bound on significant bits, `-log2(K1 √γ_m(u²))`.
pub fn significant_bits(cond_k1: f64, n: u64, u: f64, kernel: Kernel) -> f64 {
    let kind = match kernel {
        Kernel::InnerProduct => BoundKind::VarIp,
        Kernel::Horner => BoundKind::VarH,
    };
    let ln_sd = Dd::new(cond_k1).ln() + Dd::new(0.5) * ln_factor(kind, n, u, 1.0);
    -(ln_sd / Dd::new(2.0).ln()).to_f64()
}

/// `ln((u/2) γ_2n(u)) - ln γ_n(u²)`, evaluated in extended precision. It is
/// nonnegative for all `n >= 1` and `0 < u <= 1/2`, so BC with
/// `λ` is at most AH2 whenever `1/λ <= 2 ln(2/λ)`.
pub fn variance_log_margin(n: u64, u: f64) -> f64 {
    let nd = Dd::from_u64(n);
    let ud = Dd::new(u);
    let lhs = (ud * Dd::new(0.5)).ln() + ln_gamma_dd(Dd::new(2.0) * nd, ud);
    (lhs - ln_gamma_dd(nd, ud * ud)).to_f64()
}

/// Smallest `n` at which the BC inner-product bound beats AH2, with the
/// bracketing certificate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Crossover {
    pub n: u64,
    pub ln_bc: f64,
    pub ln_ah2: f64,
    /// `(ln BC, ln AH2)` at `n - 1`, absent when `n == 1`.
    pub previous: Option<(f64, f64)>,
    /// `ln BC - ln AH2` at `n` (negative), from the extended-precision difference.
    pub gap: f64,
    /// The same at `n - 1` (nonnegative).
    pub previous_gap: Option<f64>,
}

fn bc_minus_ah2(n: u64, u: f64, lambda: f64) -> Dd {
    ln_factor(BoundKind::BcIp, n, u, lambda) - ln_factor(BoundKind::Ah2Ip, n, u, lambda)
}

/// Exponential bracketing then bisection on `n`; `ln BC - ln AH2` is
/// decreasing in `n`.
pub fn crossover_n(u: f64, lambda: f64, n_max: u64) -> Result<Crossover> {
    BoundInputs::new(1, u, lambda, 1.0)?.check_lambda()?;
    let tighter = |n: u64| bc_minus_ah2(n, u, lambda).hi < 0.0;
    let cert = |n: u64| Crossover {
        n,
        ln_bc: ln_factor(BoundKind::BcIp, n, u, lambda).to_f64(),
        ln_ah2: ln_factor(BoundKind::Ah2Ip, n, u, lambda).to_f64(),
        previous: (n > 1).then(|| {
            (ln_factor(BoundKind::BcIp, n - 1, u, lambda).to_f64(), ln_factor(BoundKind::Ah2Ip, n - 1, u, lambda).to_f64())
        }),
        gap: bc_minus_ah2(n, u, lambda).to_f64(),
        previous_gap: (n > 1).then(|| bc_minus_ah2(n - 1, u, lambda).to_f64()),
    };
    if tighter(1) {
        return Ok(cert(1));
    }
    let mut lo = 1u64;
    let mut hi = 2u64;
    while !tighter(hi) {
        if hi >= n_max {
            return Err(Error::NotFound { n_max });
        }
        lo = hi;
        hi = hi.saturating_mul(2).min(n_max);
    }
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if tighter(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(cert(hi))
}

/// Probability `1 - λ*` at or below which BC is tighter than AH2 for every `n`.
///
/// The ratio `γ_n(u²) / ((u/2) γ_2n(u))` peaks at `n = 1` with value
/// `1/(1+u/2)`, so BC ≤ AH2 for all `n` iff `1/λ ≤ (2+u) ln(2/λ)`. With
/// `u = None` the `u → 0` limit `1/λ = 2 ln(2/λ)` is solved.
pub fn bc_ah2_threshold(u: Option<f64>) -> f64 {
    let c = 2.0 + u.unwrap_or(0.0);
    let h = |lam: f64| 1.0 / lam - c * (2.0 / lam).ln();
    // h is positive near 0 and negative at 1/2.
    let (mut lo, mut hi) = (1e-12, 0.5);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if h(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    1.0 - 0.5 * (lo + hi)
}

/// All inner-product bounds at one `n`, with `K1 = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundComparison {
    pub n: u64,
    pub det: BoundReport,
    pub ah1: BoundReport,
    pub ah2: BoundReport,
    pub bc: BoundReport,
}

impl BoundComparison {
    /// Kind with the smallest probabilistic bound.
    pub fn tightest_probabilistic(&self) -> BoundKind {
        [self.ah1, self.ah2, self.bc]
            .into_iter()
            .min_by(|a, b| a.ln_value.total_cmp(&b.ln_value))
            .map(|r| r.kind)
            .expect("nonempty")
    }
}

pub fn compare_bounds(u: f64, lambda: f64, n_grid: &[u64]) -> Result<Vec<BoundComparison>> {
    n_grid
        .iter()
        .map(|&n| {
            let inputs = BoundInputs::new(n, u, lambda, 1.0)?;
            Ok(BoundComparison {
                n,
                det: bound_ip(BoundKind::DetIp, &inputs)?,
                ah1: bound_ip(BoundKind::Ah1Ip, &inputs)?,
                ah2: bound_ip(BoundKind::Ah2Ip, &inputs)?,
                bc: bound_ip(BoundKind::BcIp, &inputs)?,
            })
        })
        .collect()
}

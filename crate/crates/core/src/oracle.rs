//! Exact rational ground truth for rounding decisions and small SR runs.
//!
//! Everything here works on [`BigRational`] and recomputes the lattice from
//! scratch, so it shares no arithmetic with the carrier fast path in
//! [`crate::fp_core`].

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Float, One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::fp_core::{FloatFormat, Theta};
use crate::kernels::KernelInstance;
use crate::sr_arith::Op;

pub type Rational = BigRational;

/// Default cap on inexact branchings along the enumeration (4096 paths).
pub const DEFAULT_BRANCH_LIMIT: u32 = 12;

/// Exact rational value of a finite carrier number.
pub fn to_rational(x: f64) -> Rational {
    Rational::from_float(x).expect("finite carrier value")
}

/// Exact `2^k`.
pub fn pow2(k: i64) -> Rational {
    let one = BigInt::one();
    if k >= 0 {
        Rational::from_integer(one << (k as usize))
    } else {
        Rational::new(one.clone(), one << ((-k) as usize))
    }
}

/// `floor(log2 |c|)` for nonzero `c`.
pub fn floor_log2(c: &Rational) -> i64 {
    let num = c.numer().abs();
    let den = c.denom().abs();
    let mut e = num.bits() as i64 - den.bits() as i64;
    // 2^(e-1) < |c| < 2^(e+1); settle which side of 2^e it lies.
    if c.abs() < pow2(e) {
        e -= 1;
    }
    e
}

/// Exact sum of many carrier numbers or products, kept as an integer
/// multiple of a common power of two.
#[derive(Debug, Clone, Default)]
pub struct DyadicSum {
    terms: Vec<(i128, i32)>,
}

impl DyadicSum {
    pub fn new() -> Self {
        Self::default()
    }

    fn decompose(x: f64) -> (i128, i32) {
        let (m, e, s) = x.integer_decode();
        (s as i128 * m as i128, e as i32)
    }

    pub fn add(&mut self, x: f64) {
        if x != 0.0 {
            self.terms.push(Self::decompose(x));
        }
    }

    /// Adds the exact product `a * b`.
    pub fn add_product(&mut self, a: f64, b: f64) {
        if a != 0.0 && b != 0.0 {
            let (ma, ea) = Self::decompose(a);
            let (mb, eb) = Self::decompose(b);
            self.terms.push((ma * mb, ea + eb));
        }
    }

    fn fold(&self, abs: bool) -> Rational {
        let Some(min_e) = self.terms.iter().map(|t| t.1).min() else {
            return Rational::zero();
        };
        let mut acc = BigInt::zero();
        for &(m, e) in &self.terms {
            let m = if abs { m.abs() } else { m };
            acc += BigInt::from(m) << ((e - min_e) as usize);
        }
        Rational::from_integer(acc) * pow2(min_e as i64)
    }

    pub fn value(&self) -> Rational {
        self.fold(false)
    }

    pub fn abs_value(&self) -> Rational {
        self.fold(true)
    }
}

/// Lattice neighbours and exact θ of a rational value.
#[derive(Debug, Clone, PartialEq)]
pub struct RationalBracket {
    pub down: Rational,
    pub up: Rational,
    pub theta: Rational,
}

pub fn bracket_rational(c: &Rational, fmt: &FloatFormat) -> Result<RationalBracket> {
    if c.is_zero() {
        return Ok(RationalBracket { down: c.clone(), up: c.clone(), theta: Rational::zero() });
    }
    let e = floor_log2(c);
    let approx = c.to_f64().unwrap_or(f64::NAN);
    if e < fmt.e_min() as i64 {
        return Err(Error::Underflow { value: approx, format: fmt.name() });
    }
    if e > fmt.e_max() as i64 {
        return Err(Error::Overflow { value: approx, format: fmt.name() });
    }
    let q = pow2(e - fmt.precision() as i64 + 1);
    let scaled = c / &q;
    let k = scaled.floor();
    let theta = &scaled - &k;
    let down = &k * &q;
    let up = if theta.is_zero() { down.clone() } else { &down + &q };
    Ok(RationalBracket { down, up, theta })
}

/// Exact `a op b` over the rationals.
pub fn exact_op(a: f64, b: f64, op: Op) -> Result<Rational> {
    let (a, b) = (to_rational(a), to_rational(b));
    Ok(match op {
        Op::Add => a + b,
        Op::Sub => a - b,
        Op::Mul => a * b,
        Op::Div => {
            if b.is_zero() {
                return Err(Error::DivisionByZero);
            }
            a / b
        }
    })
}

/// Exact θ of `a op b` on the lattice of `fmt`.
pub fn theta_rational(a: f64, b: f64, op: Op, fmt: &FloatFormat) -> Result<Rational> {
    Ok(bracket_rational(&exact_op(a, b, op)?, fmt)?.theta)
}

/// Exact rational value of a fast-path [`Theta`].
pub fn theta_of_fast(theta: &Theta) -> Rational {
    match *theta {
        Theta::Dyadic { hi, lo } => to_rational(hi) + to_rational(lo),
        Theta::Quotient { offset, residual, divisor, spacing } => {
            (to_rational(offset) + to_rational(residual) / to_rational(divisor)) / to_rational(spacing)
        }
    }
}

/// One rounding path through a kernel.
#[derive(Debug, Clone, PartialEq)]
pub struct PathRecord {
    pub value: f64,
    pub prob: Rational,
    /// Realized relative error of every operation, in execution order
    /// (zero for exact operations).
    pub deltas: Vec<Rational>,
}

impl PathRecord {
    /// `Π (1 + δ_k)` over the given operation indices (0-based).
    pub fn psi(&self, indices: impl IntoIterator<Item = usize>) -> Rational {
        indices.into_iter().fold(Rational::one(), |acc, k| acc * (Rational::one() + &self.deltas[k]))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub value: f64,
    pub prob: Rational,
}

/// Exact output distribution of an SR computation.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactDist {
    /// Deduplicated by value, sorted by increasing value.
    pub outcomes: Vec<Outcome>,
    pub paths: Vec<PathRecord>,
}

impl ExactDist {
    pub fn total_probability(&self) -> Rational {
        self.outcomes.iter().map(|o| &o.prob).sum()
    }
}

#[derive(Clone)]
struct PathState {
    acc: Rational,
    tmp: Rational,
    prob: Rational,
    deltas: Vec<Rational>,
}

#[derive(Clone, Copy)]
enum Slot {
    Acc,
    Tmp,
}

struct Enumerator<'a> {
    fmt: &'a FloatFormat,
    max_paths: usize,
    limit: u32,
    paths: Vec<PathState>,
}

impl Enumerator<'_> {
    fn step(&mut self, slot: Slot, exact: impl Fn(&PathState) -> Rational) -> Result<()> {
        let mut next = Vec::with_capacity(self.paths.len() * 2);
        for st in self.paths.drain(..) {
            let c = exact(&st);
            let br = bracket_rational(&c, self.fmt)?;
            let mut push = |value: Rational, p: Rational| {
                let delta = if c.is_zero() { Rational::zero() } else { (&value - &c) / &c };
                let mut child = st.clone();
                match slot {
                    Slot::Acc => child.acc = value,
                    Slot::Tmp => child.tmp = value,
                }
                child.prob = &st.prob * p;
                child.deltas.push(delta);
                next.push(child);
            };
            if br.theta.is_zero() {
                push(br.down, Rational::one());
            } else {
                let up_p = br.theta.clone();
                push(br.down, Rational::one() - &br.theta);
                push(br.up, up_p);
            }
        }
        if next.len() > self.max_paths {
            return Err(Error::Explosion { paths: next.len(), limit: self.limit });
        }
        self.paths = next;
        Ok(())
    }
}

/// Enumerates every SR-nearness rounding path of a kernel instance.
///
/// Exact operations contribute a single edge; each inexact one splits a path
/// into `(⌊c⌋, 1-θ)` and `(⌈c⌉, θ)`. Fails with `Explosion` once more than
/// `2^branch_limit` paths are live.
pub fn enumerate_distribution(kernel: KernelInstance<'_>, fmt: &FloatFormat, branch_limit: u32) -> Result<ExactDist> {
    let start = PathState { acc: Rational::zero(), tmp: Rational::zero(), prob: Rational::one(), deltas: Vec::new() };
    let mut en = Enumerator { fmt, max_paths: 1usize << branch_limit.min(30), limit: branch_limit, paths: vec![start] };
    match kernel {
        KernelInstance::InnerProduct(inst) => {
            let a: Vec<Rational> = inst.a().iter().map(|&v| to_rational(v)).collect();
            let b: Vec<Rational> = inst.b().iter().map(|&v| to_rational(v)).collect();
            en.step(Slot::Acc, |_| &a[0] * &b[0])?;
            for i in 1..a.len() {
                let prod = &a[i] * &b[i];
                en.step(Slot::Tmp, |_| prod.clone())?;
                en.step(Slot::Acc, |st| &st.acc + &st.tmp)?;
            }
        }
        KernelInstance::Horner(poly) => {
            let x = to_rational(poly.x());
            let coeffs: Vec<Rational> = poly.coeffs().iter().map(|&v| to_rational(v)).collect();
            let n = coeffs.len() - 1;
            for st in &mut en.paths {
                st.acc = coeffs[n].clone();
            }
            for k in 1..=n {
                en.step(Slot::Acc, |st| &st.acc * &x)?;
                en.step(Slot::Acc, |st| &st.acc + &coeffs[n - k])?;
            }
        }
    }

    let mut merged: BTreeMap<Rational, Rational> = BTreeMap::new();
    let mut paths = Vec::with_capacity(en.paths.len());
    for st in en.paths {
        *merged.entry(st.acc.clone()).or_insert_with(Rational::zero) += &st.prob;
        paths.push(PathRecord { value: st.acc.to_f64().expect("lattice value"), prob: st.prob, deltas: st.deltas });
    }
    let outcomes = merged
        .into_iter()
        .map(|(v, prob)| Outcome { value: v.to_f64().expect("lattice value"), prob })
        .collect();
    Ok(ExactDist { outcomes, paths })
}

pub fn dist_mean(d: &ExactDist) -> Rational {
    d.outcomes.iter().map(|o| to_rational(o.value) * &o.prob).sum()
}

pub fn dist_variance(d: &ExactDist) -> Rational {
    let mean = dist_mean(d);
    d.outcomes
        .iter()
        .map(|o| {
            let dev = to_rational(o.value) - &mean;
            &dev * &dev * &o.prob
        })
        .sum()
}

/// `(1 + u^2)^m - 1`, exactly.
pub fn gamma_u2_exact(m: usize, u: f64) -> Rational {
    let u = to_rational(u);
    let base = Rational::one() + &u * &u;
    num_traits::pow(base, m) - Rational::one()
}

/// Variance bound `y^2 K_1^2 γ_m(u^2) = (Σ|terms|)^2 γ_m(u^2)`, exactly, with
/// `m = n` for the inner product and `m = 2n` for Horner.
pub fn exact_variance_bound(kernel: KernelInstance<'_>, fmt: &FloatFormat) -> Rational {
    let reference = kernel.exact_reference();
    let m = match kernel {
        KernelInstance::InnerProduct(i) => i.len(),
        KernelInstance::Horner(p) => 2 * p.degree(),
    };
    &reference.abs_sum * &reference.abs_sum * gamma_u2_exact(m, fmt.unit_roundoff())
}

/// Exact probability that the relative error is at most `rel_bound`.
pub fn coverage_probability(d: &ExactDist, reference: &Rational, rel_bound: f64) -> Rational {
    let limit = to_rational(rel_bound) * reference.abs();
    d.outcomes
        .iter()
        .filter(|o| (to_rational(o.value) - reference).abs() <= limit)
        .map(|o| o.prob.clone())
        .sum()
}

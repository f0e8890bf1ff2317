//! Recursive inner product and Horner evaluation over a rounding mode.

use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::fp_core::FloatFormat;
use crate::oracle::{to_rational, DyadicSum};
use crate::sr_arith::{fp_op, fp_op_value, Op, OpRecord, RngStream, RoundingMode};

/// `y = a_1 b_1 + ... + a_n b_n`.
#[derive(Debug, Clone, PartialEq)]
pub struct InnerProductInstance {
    a: Vec<f64>,
    b: Vec<f64>,
}

impl InnerProductInstance {
    pub fn new(a: Vec<f64>, b: Vec<f64>) -> Result<Self> {
        if a.is_empty() {
            return Err(Error::InvalidInstance("inner product needs n >= 1".into()));
        }
        if a.len() != b.len() {
            return Err(Error::InvalidInstance(format!("length mismatch {} vs {}", a.len(), b.len())));
        }
        if a.iter().chain(&b).any(|v| !v.is_finite()) {
            return Err(Error::InvalidInstance("non-finite entry".into()));
        }
        Ok(InnerProductInstance { a, b })
    }

    pub fn len(&self) -> usize {
        self.a.len()
    }

    pub fn is_empty(&self) -> bool {
        self.a.is_empty()
    }

    pub fn a(&self) -> &[f64] {
        &self.a
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    /// Checks every entry is a value of `fmt`.
    pub fn validate_for(&self, fmt: &FloatFormat) -> Result<()> {
        match self.a.iter().chain(&self.b).find(|v| !fmt.is_representable(**v)) {
            Some(v) => Err(Error::InvalidInstance(format!("{v:e} is not a {} value", fmt.name()))),
            None => Ok(()),
        }
    }
}

/// `P(x) = a_0 + a_1 x + ... + a_n x^n`, coefficients in increasing degree.
#[derive(Debug, Clone, PartialEq)]
pub struct PolynomialInstance {
    coeffs: Vec<f64>,
    x: f64,
}

impl PolynomialInstance {
    pub fn new(coeffs: Vec<f64>, x: f64) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::InvalidInstance("polynomial needs at least one coefficient".into()));
        }
        if coeffs.len() > 1 && *coeffs.last().unwrap() == 0.0 {
            return Err(Error::InvalidInstance("leading coefficient is zero".into()));
        }
        if coeffs.iter().any(|v| !v.is_finite()) || !x.is_finite() {
            return Err(Error::InvalidInstance("non-finite coefficient or point".into()));
        }
        Ok(PolynomialInstance { coeffs, x })
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn x(&self) -> f64 {
        self.x
    }

    pub fn validate_for(&self, fmt: &FloatFormat) -> Result<()> {
        match self.coeffs.iter().chain(std::iter::once(&self.x)).find(|v| !fmt.is_representable(**v)) {
            Some(v) => Err(Error::InvalidInstance(format!("{v:e} is not a {} value", fmt.name()))),
            None => Ok(()),
        }
    }
}

/// Output of one kernel evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelRun {
    pub value: f64,
    /// Elementary operations performed.
    pub ops: usize,
    pub trace: Option<Vec<OpRecord>>,
}

struct Stepper<'a> {
    fmt: &'a FloatFormat,
    mode: RoundingMode,
    rng: &'a mut RngStream,
    trace: Option<Vec<OpRecord>>,
    ops: usize,
}

impl Stepper<'_> {
    #[inline]
    fn op(&mut self, a: f64, b: f64, op: Op) -> Result<f64> {
        self.ops += 1;
        match self.trace.as_mut() {
            Some(t) => {
                let (r, rec) = fp_op(a, b, op, self.fmt, self.mode, self.rng)?;
                t.push(rec);
                Ok(r)
            }
            None => fp_op_value(a, b, op, self.fmt, self.mode, self.rng),
        }
    }

    fn finish(self, value: f64) -> KernelRun {
        KernelRun { value, ops: self.ops, trace: self.trace }
    }
}

/// Left-to-right inner product: `s_1 = fl(a_1 b_1)`, `s_i = fl(s_{i-1} + fl(a_i b_i))`.
pub fn inner_product(
    inst: &InnerProductInstance,
    fmt: &FloatFormat,
    mode: RoundingMode,
    rng: &mut RngStream,
    trace: bool,
) -> Result<KernelRun> {
    let mut st = Stepper { fmt, mode, rng, trace: trace.then(Vec::new), ops: 0 };
    let mut s = st.op(inst.a[0], inst.b[0], Op::Mul)?;
    for (&a, &b) in inst.a.iter().zip(&inst.b).skip(1) {
        let p = st.op(a, b, Op::Mul)?;
        s = st.op(s, p, Op::Add)?;
    }
    Ok(st.finish(s))
}

/// Horner's rule: `r_0 = a_n`, then `r <- fl(fl(r x) + a_{n-k})` for `k = 1..n`.
pub fn horner(
    inst: &PolynomialInstance,
    fmt: &FloatFormat,
    mode: RoundingMode,
    rng: &mut RngStream,
    trace: bool,
) -> Result<KernelRun> {
    let mut st = Stepper { fmt, mode, rng, trace: trace.then(Vec::new), ops: 0 };
    let mut coeffs = inst.coeffs.iter().rev();
    let mut r = *coeffs.next().expect("nonempty");
    for &a in coeffs {
        let t = st.op(r, inst.x, Op::Mul)?;
        r = st.op(t, a, Op::Add)?;
    }
    Ok(st.finish(r))
}

/// Integer coefficients of the Chebyshev polynomial `T_N` (`N` even) as a
/// polynomial in `w = x^2`, lowest degree first.
pub fn chebyshev_coeffs(degree: u32) -> Result<Vec<i64>> {
    if degree % 2 != 0 {
        return Err(Error::Domain(format!("Chebyshev degree {degree} must be even")));
    }
    let n = degree as usize;
    // Coefficients in powers of x: T_{k+1} = 2x T_k - T_{k-1}.
    let mut prev: Vec<i64> = vec![1];
    let mut cur: Vec<i64> = vec![0, 1];
    if n == 0 {
        return Ok(prev);
    }
    for k in 1..n {
        let mut next = vec![0i64; k + 2];
        for (i, &c) in cur.iter().enumerate() {
            next[i + 1] = c
                .checked_mul(2)
                .and_then(|v| v.checked_add(next[i + 1]))
                .ok_or_else(|| Error::IntegerOverflow(format!("T_{} coefficients", k + 1)))?;
        }
        for (i, &c) in prev.iter().enumerate() {
            next[i] = next[i]
                .checked_sub(c)
                .ok_or_else(|| Error::IntegerOverflow(format!("T_{} coefficients", k + 1)))?;
        }
        prev = std::mem::replace(&mut cur, next);
    }
    Ok(cur.iter().step_by(2).copied().collect())
}

/// Exact value of a kernel and the numerator of its 1-norm condition number.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactReference {
    pub value: BigRational,
    /// `Σ |a_i b_i|` or `Σ |a_i x^i|`.
    pub abs_sum: BigRational,
}

impl ExactReference {
    /// `K_1 = abs_sum / |value|`; `None` when the value is zero.
    pub fn cond(&self) -> Option<BigRational> {
        (!self.value.is_zero()).then(|| &self.abs_sum / self.value.abs())
    }

    pub fn cond_f64(&self) -> f64 {
        self.cond().and_then(|k| k.to_f64()).unwrap_or(f64::INFINITY)
    }

    pub fn value_f64(&self) -> f64 {
        self.value.to_f64().unwrap_or(f64::NAN)
    }

    /// `|computed - value| / |value|`, computed exactly then rounded.
    pub fn relative_error(&self, computed: f64) -> f64 {
        if !computed.is_finite() {
            return f64::NAN;
        }
        let diff = (to_rational(computed) - &self.value).abs();
        if self.value.is_zero() {
            return if diff.is_zero() { 0.0 } else { f64::INFINITY };
        }
        (diff / self.value.abs()).to_f64().unwrap_or(f64::INFINITY)
    }
}

pub fn exact_reference_inner(inst: &InnerProductInstance) -> ExactReference {
    let mut sum = DyadicSum::new();
    for (&a, &b) in inst.a.iter().zip(&inst.b) {
        sum.add_product(a, b);
    }
    ExactReference { value: sum.value(), abs_sum: sum.abs_value() }
}

pub fn exact_reference_horner(inst: &PolynomialInstance) -> ExactReference {
    let x = to_rational(inst.x);
    let mut value = BigRational::zero();
    let mut abs_sum = BigRational::zero();
    let mut power = BigRational::from_integer(1.into());
    for &a in &inst.coeffs {
        let t = to_rational(a) * &power;
        abs_sum += t.abs();
        value += t;
        power *= &x;
    }
    ExactReference { value, abs_sum }
}

/// A kernel instance, for APIs that accept either model.
#[derive(Debug, Clone, Copy)]
pub enum KernelInstance<'a> {
    InnerProduct(&'a InnerProductInstance),
    Horner(&'a PolynomialInstance),
}

impl KernelInstance<'_> {
    pub fn exact_reference(&self) -> ExactReference {
        match self {
            KernelInstance::InnerProduct(i) => exact_reference_inner(i),
            KernelInstance::Horner(p) => exact_reference_horner(p),
        }
    }

    /// `n` of the variance bound: vector length, or polynomial degree.
    pub fn size(&self) -> usize {
        match self {
            KernelInstance::InnerProduct(i) => i.len(),
            KernelInstance::Horner(p) => p.degree(),
        }
    }

    pub fn run(&self, fmt: &FloatFormat, mode: RoundingMode, rng: &mut RngStream, trace: bool) -> Result<KernelRun> {
        match self {
            KernelInstance::InnerProduct(i) => inner_product(i, fmt, mode, rng, trace),
            KernelInstance::Horner(p) => horner(p, fmt, mode, rng, trace),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BF: FloatFormat = FloatFormat::BFLOAT16;

    fn p2(k: i32) -> f64 {
        2f64.powi(k)
    }

    #[test]
    fn single_term_is_exact() {
        let inst = InnerProductInstance::new(vec![1.0], vec![1.0]).unwrap();
        let mut rng = RngStream::new(0);
        let run = inner_product(&inst, &BF, RoundingMode::StochasticNearest, &mut rng, true).unwrap();
        assert_eq!(run.value, 1.0);
        assert_eq!(run.ops, 1);
        assert_eq!(rng.draws(), 0);
    }

    #[test]
    fn op_counts() {
        let n = 9;
        let inst = InnerProductInstance::new(vec![0.5; n], vec![0.75; n]).unwrap();
        let mut rng = RngStream::new(0);
        let run = inner_product(&inst, &BF, RoundingMode::StochasticNearest, &mut rng, true).unwrap();
        assert_eq!(run.ops, 2 * n - 1);
        assert_eq!(run.trace.unwrap().len(), 2 * n - 1);

        let poly = PolynomialInstance::new(vec![1.0, -3.0, 0.5, 2.0], 0.75).unwrap();
        let run = horner(&poly, &BF, RoundingMode::NearestEven, &mut rng, true).unwrap();
        assert_eq!(run.ops, 6);
        let run0 = horner(&PolynomialInstance::new(vec![3.0], 0.5).unwrap(), &BF, RoundingMode::StochasticNearest, &mut rng, true).unwrap();
        assert_eq!((run0.value, run0.ops), (3.0, 0));
    }

    #[test]
    fn all_ones_sum_is_exact() {
        let n = 100;
        let inst = InnerProductInstance::new(vec![1.0; n], vec![1.0; n]).unwrap();
        let mut rng = RngStream::new(5);
        for mode in [RoundingMode::StochasticNearest, RoundingMode::NearestEven] {
            let run = inner_product(&inst, &BF, mode, &mut rng, false).unwrap();
            assert_eq!(run.value, n as f64);
        }
        assert_eq!(rng.draws(), 0);
    }

    #[test]
    fn square_is_exact_when_representable() {
        let poly = PolynomialInstance::new(vec![0.0, 0.0, 1.0], 1.5).unwrap();
        let mut rng = RngStream::new(5);
        let run = horner(&poly, &BF, RoundingMode::StochasticNearest, &mut rng, false).unwrap();
        assert_eq!(run.value, 2.25);
    }

    #[test]
    fn two_term_horner_outcomes() {
        let poly = PolynomialInstance::new(vec![p2(-9), 1.0], 1.0).unwrap();
        let mut rng = RngStream::new(11);
        for _ in 0..50 {
            let v = horner(&poly, &BF, RoundingMode::StochasticNearest, &mut rng, false).unwrap().value;
            assert!(v == 1.0 || v == 1.0 + p2(-7));
        }
    }

    #[test]
    fn chebyshev_small_degrees() {
        assert_eq!(chebyshev_coeffs(0).unwrap(), vec![1]);
        assert_eq!(chebyshev_coeffs(2).unwrap(), vec![-1, 2]);
        assert_eq!(chebyshev_coeffs(4).unwrap(), vec![1, -8, 8]);
        assert_eq!(chebyshev_coeffs(6).unwrap(), vec![-1, 18, -48, 32]);
        assert!(chebyshev_coeffs(3).is_err());
        let t20 = chebyshev_coeffs(20).unwrap();
        assert_eq!(t20.len(), 11);
        assert_eq!(*t20.last().unwrap(), 1 << 19);
        assert!(matches!(chebyshev_coeffs(200), Err(Error::IntegerOverflow(_))));
    }

    #[test]
    fn chebyshev_matches_cosine() {
        let mut rng = RngStream::new(99);
        for degree in [2u32, 8, 20] {
            let c = chebyshev_coeffs(degree).unwrap();
            for _ in 0..100 {
                let t = rng.next_uniform() * std::f64::consts::PI;
                // Exact evaluation so only the coefficients are under test.
                let x = to_rational(t.cos());
                let w = &x * &x;
                let p = c.iter().rev().fold(BigRational::zero(), |acc, &a| acc * &w + BigRational::from_integer(a.into()));
                let p = p.to_f64().unwrap();
                assert!((p - (degree as f64 * t).cos()).abs() < 1e-12, "T_{degree}({t})");
            }
        }
    }

    #[test]
    fn exact_reference_examples() {
        let i = InnerProductInstance::new(vec![1.0, 1.0], vec![1.0, p2(-9)]).unwrap();
        let r = exact_reference_inner(&i);
        assert_eq!(r.value, to_rational(1.0 + p2(-9)));
        assert_eq!(r.cond().unwrap(), to_rational(1.0));

        let i = InnerProductInstance::new(vec![1.0, -1.0 + p2(-10)], vec![1.0, 1.0]).unwrap();
        let r = exact_reference_inner(&i);
        assert_eq!(r.value, to_rational(p2(-10)));
        assert_eq!(r.abs_sum, to_rational(2.0 - p2(-10)));
        assert_eq!(r.cond().unwrap(), to_rational(p2(10) * (2.0 - p2(-10))));

        let t2: Vec<f64> = chebyshev_coeffs(2).unwrap().into_iter().map(|c| c as f64).collect();
        let r = exact_reference_horner(&PolynomialInstance::new(t2, 1.0).unwrap());
        assert_eq!(r.value, to_rational(1.0));
        assert_eq!(r.cond().unwrap(), to_rational(3.0));
        assert_eq!(r.relative_error(1.0), 0.0);
        assert_eq!(r.relative_error(1.5), 0.5);
    }

    #[test]
    fn invalid_instances() {
        assert!(InnerProductInstance::new(vec![], vec![]).is_err());
        assert!(InnerProductInstance::new(vec![1.0], vec![1.0, 2.0]).is_err());
        assert!(PolynomialInstance::new(vec![1.0, 0.0], 2.0).is_err());
        assert!(PolynomialInstance::new(vec![], 2.0).is_err());
        let i = InnerProductInstance::new(vec![1.0 + p2(-9)], vec![1.0]).unwrap();
        assert!(i.validate_for(&BF).is_err());
    }
}

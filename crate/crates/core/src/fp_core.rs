//! Reduced-precision binary formats emulated inside an `f64` carrier.
//!
//! A [`FloatFormat`] with `p <= 24` significand bits keeps every product of
//! two target values exact in the carrier, and every sum or quotient
//! recoverable through an error-free transformation. That is what lets the
//! round-down/round-up neighbours and the round-up fraction `θ(x)` be
//! computed exactly rather than approximately.
//!
//! Conventions: a nonzero real `x` lives in binade `e` when
//! `2^e <= |x| < 2^(e+1)`; the lattice spacing there is `2^(e-p+1)`, and the
//! normal range of the format is `e_min <= e <= e_max` (IEEE-754 style).

use std::cmp::Ordering;
use std::fmt;

use crate::eft::{exp2i, expansion_sign, exponent_of, fast_two_sum, is_power_of_two, two_prod, two_sum};
use crate::error::{Error, Result};

/// A binary floating-point target format.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FloatFormat {
    precision: u32,
    e_min: i32,
    e_max: i32,
    name: &'static str,
}

impl FloatFormat {
    pub const BFLOAT16: FloatFormat = FloatFormat { precision: 8, e_min: -126, e_max: 127, name: "bf16" };
    pub const BINARY16: FloatFormat = FloatFormat { precision: 11, e_min: -14, e_max: 15, name: "b16" };
    pub const BINARY32: FloatFormat = FloatFormat { precision: 24, e_min: -126, e_max: 127, name: "b32" };

    /// Builds a custom format; `2 <= precision <= 24` and `e_min < e_max`.
    pub fn new(precision: u32, e_min: i32, e_max: i32) -> Result<Self> {
        if !(2..=24).contains(&precision) {
            return Err(Error::InvalidFormat(format!("precision {precision} outside 2..=24")));
        }
        if e_min >= e_max {
            return Err(Error::InvalidFormat(format!("e_min {e_min} must be below e_max {e_max}")));
        }
        // Keep spacings and products comfortably inside the normal f64 range.
        if e_min < -300 || e_max > 300 {
            return Err(Error::InvalidFormat("exponent range exceeds carrier headroom".into()));
        }
        Ok(FloatFormat { precision, e_min, e_max, name: "custom" })
    }

    pub fn with_name(mut self, name: &'static str) -> Self {
        self.name = name;
        self
    }

    /// Looks up a preset by its short or long name.
    pub fn from_name(name: &str) -> Result<Self> {
        match name.to_ascii_lowercase().as_str() {
            "bf16" | "bfloat16" => Ok(Self::BFLOAT16),
            "b16" | "binary16" | "fp16" | "half" => Ok(Self::BINARY16),
            "b32" | "binary32" | "fp32" | "single" => Ok(Self::BINARY32),
            other => Err(Error::InvalidFormat(format!("unknown format name {other:?}"))),
        }
    }

    pub fn precision(&self) -> u32 {
        self.precision
    }

    pub fn e_min(&self) -> i32 {
        self.e_min
    }

    pub fn e_max(&self) -> i32 {
        self.e_max
    }

    pub fn name(&self) -> &'static str {
        self.name
    }

    /// `u = 2^(1-p)`.
    pub fn unit_roundoff(&self) -> f64 {
        exp2i(1 - self.precision as i32)
    }

    /// Smallest positive normal value, `2^e_min`.
    pub fn min_normal(&self) -> f64 {
        exp2i(self.e_min)
    }

    /// Largest finite value, `(2 - 2^(1-p)) 2^e_max`.
    pub fn max_finite(&self) -> f64 {
        (2.0 - self.unit_roundoff()) * exp2i(self.e_max)
    }

    /// Lattice spacing in binade `e`.
    fn spacing(&self, e: i32) -> f64 {
        exp2i(e - self.precision as i32 + 1)
    }

    /// True when `x` is zero or a normal number of this format.
    pub fn is_representable(&self, x: f64) -> bool {
        if x == 0.0 {
            return true;
        }
        if !x.is_finite() {
            return false;
        }
        let e = exponent_of(x);
        if e < self.e_min || e > self.e_max {
            return false;
        }
        let scaled = x / self.spacing(e);
        scaled == scaled.trunc()
    }

    fn check_result(&self, x: f64) -> Result<f64> {
        if x.abs() > self.max_finite() {
            Err(Error::Overflow { value: x, format: self.name })
        } else {
            Ok(x)
        }
    }
}

impl fmt::Display for FloatFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} (p={}, e in [{}, {}])", self.name, self.precision, self.e_min, self.e_max)
    }
}

/// Free-function form of [`FloatFormat::unit_roundoff`].
pub fn unit_roundoff(fmt: &FloatFormat) -> f64 {
    fmt.unit_roundoff()
}

/// An exactly represented real number, typically the unrounded result of one
/// elementary operation on carrier values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExactValue {
    /// `head + tail`, with `|tail| <= ulp(head)/2` once normalized.
    Pair { head: f64, tail: f64 },
    /// `num / den`, kept symbolic because the quotient is generally not a
    /// finite binary fraction.
    Quotient { num: f64, den: f64 },
}

impl ExactValue {
    pub fn from_f64(x: f64) -> Self {
        ExactValue::Pair { head: x, tail: 0.0 }
    }

    /// `head + tail`, normalized.
    pub fn pair(head: f64, tail: f64) -> Self {
        let (head, tail) = two_sum(head, tail);
        ExactValue::Pair { head, tail }
    }

    pub fn sum(a: f64, b: f64) -> Self {
        let (head, tail) = two_sum(a, b);
        ExactValue::Pair { head, tail }
    }

    pub fn difference(a: f64, b: f64) -> Self {
        Self::sum(a, -b)
    }

    pub fn product(a: f64, b: f64) -> Self {
        let (head, tail) = two_prod(a, b);
        ExactValue::Pair { head, tail }
    }

    pub fn quotient(a: f64, b: f64) -> Result<Self> {
        if b == 0.0 {
            return Err(Error::DivisionByZero);
        }
        Ok(ExactValue::Quotient { num: a, den: b })
    }

    /// Nearest carrier approximation.
    pub fn approx(&self) -> f64 {
        match *self {
            ExactValue::Pair { head, tail } => head + tail,
            ExactValue::Quotient { num, den } => num / den,
        }
    }

    pub fn is_zero(&self) -> bool {
        match *self {
            ExactValue::Pair { head, tail } => head == 0.0 && tail == 0.0,
            ExactValue::Quotient { num, .. } => num == 0.0,
        }
    }
}

impl From<f64> for ExactValue {
    fn from(x: f64) -> Self {
        ExactValue::from_f64(x)
    }
}

/// The round-up fraction `θ(x) = (x - ⌊x⌋) / (⌈x⌉ - ⌊x⌋)`, held exactly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Theta {
    /// `θ = hi + lo`.
    Dyadic { hi: f64, lo: f64 },
    /// `θ = (offset + residual / divisor) / spacing`, with `divisor > 0`.
    Quotient { offset: f64, residual: f64, divisor: f64, spacing: f64 },
}

impl Theta {
    pub const ZERO: Theta = Theta::Dyadic { hi: 0.0, lo: 0.0 };

    pub fn is_zero(&self) -> bool {
        matches!(*self, Theta::Dyadic { hi, lo } if hi == 0.0 && lo == 0.0)
    }

    /// Carrier approximation of θ, for reporting.
    pub fn approx(&self) -> f64 {
        match *self {
            Theta::Dyadic { hi, lo } => hi + lo,
            Theta::Quotient { offset, residual, divisor, spacing } => (offset + residual / divisor) / spacing,
        }
    }

    /// Exact comparison of θ against a carrier number.
    pub fn cmp_f64(&self, d: f64) -> Ordering {
        match *self {
            Theta::Dyadic { hi, lo } => expansion_sign(&[hi, lo, -d]),
            Theta::Quotient { offset, residual, divisor, spacing } => {
                // sign(offset*divisor + residual - d*spacing*divisor); divisor > 0
                let (p1, e1) = two_prod(offset, divisor);
                let (p2, e2) = two_prod(d * spacing, divisor);
                expansion_sign(&[p1, e1, residual, -p2, -e2])
            }
        }
    }

    /// SR-nearness decision: round up iff `draw < θ`.
    #[inline]
    pub fn rounds_up(&self, draw: f64) -> bool {
        self.cmp_f64(draw) == Ordering::Greater
    }
}

/// The two lattice neighbours of an exact value and its round-up fraction.
///
/// For a representable value `down == up` and `theta` is zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bracket {
    pub down: f64,
    pub up: f64,
    pub theta: Theta,
    /// Significand parity of `down` (used for ties-to-even).
    pub(crate) down_is_even: bool,
}

impl Bracket {
    fn exact(x: f64) -> Self {
        Bracket { down: x, up: x, theta: Theta::ZERO, down_is_even: true }
    }

    pub fn is_exact(&self) -> bool {
        self.theta.is_zero()
    }

    /// `⌈x⌉ - ⌊x⌋`; zero for representable values.
    pub fn spacing(&self) -> f64 {
        self.up - self.down
    }
}

fn check_binade(e: i32, approx: f64, fmt: &FloatFormat) -> Result<()> {
    if e < fmt.e_min {
        Err(Error::Underflow { value: approx, format: fmt.name })
    } else if e > fmt.e_max {
        Err(Error::Overflow { value: approx, format: fmt.name })
    } else {
        Ok(())
    }
}

/// Locates `x` on the lattice of `fmt`.
///
/// Errors with `Underflow`/`Overflow` when `x` is nonzero and outside the
/// normal binades of `fmt`. Neighbours themselves are not range checked here;
/// see [`round_down`] and [`round_up`].
pub fn bracket(x: &ExactValue, fmt: &FloatFormat) -> Result<Bracket> {
    match *x {
        ExactValue::Pair { head, tail } => bracket_pair(head, tail, fmt),
        ExactValue::Quotient { num, den } => bracket_quotient(num, den, fmt),
    }
}

fn bracket_pair(head: f64, tail: f64, fmt: &FloatFormat) -> Result<Bracket> {
    let (head, tail) = two_sum(head, tail);
    if !head.is_finite() {
        return Err(Error::Overflow { value: head, format: fmt.name });
    }
    if head == 0.0 {
        return Ok(Bracket::exact(0.0));
    }
    let mut e = exponent_of(head);
    if tail != 0.0 && is_power_of_two(head) && (tail < 0.0) != (head < 0.0) {
        e -= 1;
    }
    check_binade(e, head, fmt)?;
    let q = fmt.spacing(e);
    let mut k = (head / q).floor();
    let rem_hi = head - k * q;
    let (mut r, mut rl) = two_sum(rem_hi, tail);
    if r == 0.0 && rl == 0.0 {
        return Ok(Bracket::exact(head));
    }
    if r < 0.0 {
        k -= 1.0;
        let (a, b) = two_sum(rem_hi + q, tail);
        r = a;
        rl = b;
    }
    let (r, rl) = fast_two_sum(r, rl);
    Ok(Bracket {
        down: k * q,
        up: (k + 1.0) * q,
        theta: Theta::Dyadic { hi: r / q, lo: rl / q },
        down_is_even: k % 2.0 == 0.0,
    })
}

fn bracket_quotient(num: f64, den: f64, fmt: &FloatFormat) -> Result<Bracket> {
    if den == 0.0 {
        return Err(Error::DivisionByZero);
    }
    let (a, b) = if den < 0.0 { (-num, -den) } else { (num, den) };
    if a == 0.0 {
        return Ok(Bracket::exact(0.0));
    }
    let q0 = a / b;
    if !q0.is_finite() || q0 == 0.0 {
        let value = q0;
        return Err(if q0 == 0.0 {
            Error::Underflow { value, format: fmt.name }
        } else {
            Error::Overflow { value, format: fmt.name }
        });
    }
    // a = q0*b + residual exactly, so a/b = q0 + residual/b.
    let residual = (-q0).mul_add(b, a);
    if residual == 0.0 {
        return bracket_pair(q0, 0.0, fmt);
    }
    let mut e = exponent_of(q0);
    if is_power_of_two(q0) && (residual < 0.0) != (q0 < 0.0) {
        e -= 1;
    }
    check_binade(e, q0, fmt)?;
    let q = fmt.spacing(e);
    let mut k = (q0 / q).floor();
    let mut offset = q0 - k * q;
    if offset == 0.0 && residual < 0.0 {
        k -= 1.0;
        offset = q;
    }
    Ok(Bracket {
        down: k * q,
        up: (k + 1.0) * q,
        theta: Theta::Quotient { offset, residual, divisor: b, spacing: q },
        down_is_even: k % 2.0 == 0.0,
    })
}

/// `⌊x⌋`, the largest format value not above `x`.
pub fn round_down(x: &ExactValue, fmt: &FloatFormat) -> Result<f64> {
    fmt.check_result(bracket(x, fmt)?.down)
}

/// `⌈x⌉`, the smallest format value not below `x`.
pub fn round_up(x: &ExactValue, fmt: &FloatFormat) -> Result<f64> {
    fmt.check_result(bracket(x, fmt)?.up)
}

/// `ε(x) = 2^(e-p+1)` for `x` in binade `e`; equals `⌈x⌉ - ⌊x⌋` whenever `x`
/// is not representable. Undefined (domain error) at zero.
pub fn epsilon(x: &ExactValue, fmt: &FloatFormat) -> Result<f64> {
    if x.is_zero() {
        return Err(Error::Domain("epsilon is undefined at zero".into()));
    }
    let b = bracket(x, fmt)?;
    if !b.is_exact() {
        return Ok(b.spacing());
    }
    let e = exponent_of(b.down);
    Ok(fmt.spacing(e))
}

/// Exact `θ(x)`; zero for representable `x` (including zero).
pub fn theta(x: &ExactValue, fmt: &FloatFormat) -> Result<Theta> {
    Ok(bracket(x, fmt)?.theta)
}

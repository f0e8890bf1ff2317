//! Elementary operations under SR-nearness or round-to-nearest-even.

use std::fmt;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::error::{Error, Result};
use crate::fp_core::{bracket, Bracket, ExactValue, FloatFormat, Theta};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RoundingMode {
    /// Round up with probability `θ(x)`, down otherwise.
    StochasticNearest,
    /// IEEE-754 round to nearest, ties to even.
    NearestEven,
}

impl fmt::Display for RoundingMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RoundingMode::StochasticNearest => "SR",
            RoundingMode::NearestEven => "RN",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Op {
    Add,
    Sub,
    Mul,
    Div,
}

impl Op {
    pub fn exact(self, a: f64, b: f64) -> Result<ExactValue> {
        Ok(match self {
            Op::Add => ExactValue::sum(a, b),
            Op::Sub => ExactValue::difference(a, b),
            Op::Mul => ExactValue::product(a, b),
            Op::Div => ExactValue::quotient(a, b)?,
        })
    }

    pub fn symbol(self) -> char {
        match self {
            Op::Add => '+',
            Op::Sub => '-',
            Op::Mul => '*',
            Op::Div => '/',
        }
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seeded, splittable source of uniform draws in `[0, 1)`.
///
/// The key is derived from the seed; `stream_id` selects a ChaCha8 stream.
/// Children from [`RngStream::split`] depend only on `(seed, stream_id,
/// index)`, never on how many draws the parent has made.
#[derive(Clone)]
pub struct RngStream {
    seed: u64,
    stream_id: u64,
    rng: ChaCha8Rng,
    draws: u64,
}

impl fmt::Debug for RngStream {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RngStream")
            .field("seed", &self.seed)
            .field("stream_id", &self.stream_id)
            .field("draws", &self.draws)
            .finish()
    }
}

impl RngStream {
    /// Identity recorded in experiment headers.
    pub const ALGORITHM: &'static str = "chacha8-stream/splitmix64-split v1";

    pub fn new(seed: u64) -> Self {
        Self::with_stream(seed, 0)
    }

    fn with_stream(seed: u64, stream_id: u64) -> Self {
        let mut key = [0u8; 32];
        let mut state = seed;
        for chunk in key.chunks_exact_mut(8) {
            state = splitmix64(state);
            chunk.copy_from_slice(&state.to_le_bytes());
        }
        let mut rng = ChaCha8Rng::from_seed(key);
        rng.set_stream(stream_id);
        RngStream { seed, stream_id, rng, draws: 0 }
    }

    /// Child stream number `index`.
    pub fn split(&self, index: u64) -> Self {
        let child = splitmix64(self.stream_id.rotate_left(17) ^ splitmix64(index ^ 0xA076_1D64_78BD_642F));
        Self::with_stream(self.seed, child)
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    /// Number of draws consumed so far.
    pub fn draws(&self) -> u64 {
        self.draws
    }

    /// Uniform draw `k 2^-53`, `0 <= k < 2^53`.
    pub fn next_uniform(&mut self) -> f64 {
        self.draws += 1;
        (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.draws += 1;
        self.rng.next_u64()
    }
}

/// Free-function constructor, mirrors [`RngStream::new`].
pub fn new_stream(seed: u64) -> RngStream {
    RngStream::new(seed)
}

/// Free-function form of [`RngStream::split`].
pub fn split(stream: &RngStream, index: u64) -> RngStream {
    stream.split(index)
}

/// One rounded elementary operation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OpRecord {
    pub op: Op,
    pub exact: ExactValue,
    pub rounded: f64,
    /// `(rounded - exact) / exact`, carrier approximation; zero when exact is zero.
    pub delta: f64,
    pub theta: f64,
    pub draw: Option<f64>,
}

fn checked(x: f64, fmt: &FloatFormat) -> Result<f64> {
    if x.abs() > fmt.max_finite() {
        Err(Error::Overflow { value: x, format: fmt.name() })
    } else {
        Ok(x)
    }
}

fn nearest_even(b: &Bracket) -> f64 {
    if b.is_exact() {
        return b.down;
    }
    match b.theta.cmp_f64(0.5) {
        std::cmp::Ordering::Less => b.down,
        std::cmp::Ordering::Greater => b.up,
        std::cmp::Ordering::Equal => {
            if b.down_is_even {
                b.down
            } else {
                b.up
            }
        }
    }
}

/// Rounds per `mode`, returning the result, the draw consumed (if any), and
/// the lattice bracket. Exact values never consume a draw.
pub fn round_with(
    v: &ExactValue,
    fmt: &FloatFormat,
    mode: RoundingMode,
    rng: &mut RngStream,
) -> Result<(f64, Option<f64>, Bracket)> {
    let b = bracket(v, fmt)?;
    if b.is_exact() {
        return Ok((checked(b.down, fmt)?, None, b));
    }
    match mode {
        RoundingMode::NearestEven => Ok((checked(nearest_even(&b), fmt)?, None, b)),
        RoundingMode::StochasticNearest => {
            let draw = rng.next_uniform();
            let r = if b.theta.rounds_up(draw) { b.up } else { b.down };
            Ok((checked(r, fmt)?, Some(draw), b))
        }
    }
}

/// SR-nearness rounding of an exact value.
pub fn sr_round(v: &ExactValue, fmt: &FloatFormat, rng: &mut RngStream) -> Result<f64> {
    round_with(v, fmt, RoundingMode::StochasticNearest, rng).map(|(r, _, _)| r)
}

/// SR-nearness with a caller-supplied draw (`draw < θ` rounds up).
pub fn sr_round_with_draw(v: &ExactValue, fmt: &FloatFormat, draw: f64) -> Result<f64> {
    let b = bracket(v, fmt)?;
    let r = if b.theta.rounds_up(draw) { b.up } else { b.down };
    checked(r, fmt)
}

/// Round to nearest, ties to even.
pub fn rn_round(v: &ExactValue, fmt: &FloatFormat) -> Result<f64> {
    let b = bracket(v, fmt)?;
    checked(nearest_even(&b), fmt)
}

fn relative_delta(rounded: f64, exact: &ExactValue) -> f64 {
    match *exact {
        ExactValue::Pair { head, tail } => {
            let x = head + tail;
            if x == 0.0 {
                0.0
            } else {
                ((rounded - head) - tail) / x
            }
        }
        ExactValue::Quotient { num, den } => {
            if num == 0.0 {
                0.0
            } else {
                // rounded/q - 1 with q = num/den
                (rounded * den - num) / num
            }
        }
    }
}

/// `fl(a op b)` in `fmt` under `mode`, with its record.
pub fn fp_op(
    a: f64,
    b: f64,
    op: Op,
    fmt: &FloatFormat,
    mode: RoundingMode,
    rng: &mut RngStream,
) -> Result<(f64, OpRecord)> {
    let exact = op.exact(a, b)?;
    let (rounded, draw, br) = round_with(&exact, fmt, mode, rng)?;
    let theta: Theta = br.theta;
    Ok((
        rounded,
        OpRecord { op, exact, rounded, delta: relative_delta(rounded, &exact), theta: theta.approx(), draw },
    ))
}

/// [`fp_op`] without building a record.
#[inline]
pub fn fp_op_value(a: f64, b: f64, op: Op, fmt: &FloatFormat, mode: RoundingMode, rng: &mut RngStream) -> Result<f64> {
    let exact = op.exact(a, b)?;
    round_with(&exact, fmt, mode, rng).map(|(r, _, _)| r)
}

#[cfg(test)]
mod tests {
    use super::*;

    const BF: FloatFormat = FloatFormat::BFLOAT16;

    fn p2(k: i32) -> f64 {
        2f64.powi(k)
    }

    #[test]
    fn sr_round_with_fixed_draws() {
        let v = ExactValue::from_f64(1.0 + p2(-8));
        assert_eq!(sr_round_with_draw(&v, &BF, 0.3).unwrap(), 1.0 + p2(-7));
        assert_eq!(sr_round_with_draw(&v, &BF, 0.7).unwrap(), 1.0);
        // draw == θ rounds down
        assert_eq!(sr_round_with_draw(&v, &BF, 0.5).unwrap(), 1.0);
    }

    #[test]
    fn rn_examples() {
        assert_eq!(rn_round(&(1.0 + p2(-9)).into(), &BF).unwrap(), 1.0);
        assert_eq!(rn_round(&(1.0 + p2(-8)).into(), &BF).unwrap(), 1.0);
        assert_eq!(rn_round(&(1.0 + 3.0 * p2(-9)).into(), &BF).unwrap(), 1.0 + p2(-7));
        // tie with odd lower neighbour goes up
        assert_eq!(rn_round(&(1.0 + 3.0 * p2(-8)).into(), &BF).unwrap(), 1.0 + p2(-6));
        assert_eq!(rn_round(&(-(1.0 + 3.0 * p2(-8))).into(), &BF).unwrap(), -(1.0 + p2(-6)));
    }

    #[test]
    fn exact_ops_consume_no_draw() {
        let mut rng = RngStream::new(7);
        for mode in [RoundingMode::StochasticNearest, RoundingMode::NearestEven] {
            let (r, rec) = fp_op(1.0, 1.0, Op::Add, &BF, mode, &mut rng).unwrap();
            assert_eq!(r, 2.0);
            assert_eq!(rec.delta, 0.0);
            assert_eq!(rec.draw, None);
        }
        assert_eq!(rng.draws(), 0);
        let (_, rec) = fp_op(1.0, p2(-9), Op::Add, &BF, RoundingMode::StochasticNearest, &mut rng).unwrap();
        assert!(rec.draw.is_some());
        assert_eq!(rec.theta, 0.25);
        assert_eq!(rng.draws(), 1);
        let (_, rec) = fp_op(1.0, p2(-9), Op::Add, &BF, RoundingMode::NearestEven, &mut rng).unwrap();
        assert!(rec.draw.is_none());
        assert_eq!(rng.draws(), 1);
    }

    #[test]
    fn square_example() {
        let a = 1.0 + p2(-7);
        let mut rng = RngStream::new(3);
        let (r, rec) = fp_op(a, a, Op::Mul, &BF, RoundingMode::StochasticNearest, &mut rng).unwrap();
        assert_eq!(rec.exact.approx(), 1.0 + p2(-6) + p2(-14));
        assert_eq!(rec.theta, p2(-7));
        assert!(r == 1.0 + p2(-6) || r == 1.0 + p2(-6) + p2(-7));
    }

    #[test]
    fn division_by_zero() {
        let mut rng = RngStream::new(1);
        assert!(matches!(
            fp_op(1.0, 0.0, Op::Div, &BF, RoundingMode::NearestEven, &mut rng),
            Err(Error::DivisionByZero)
        ));
    }

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let mut a = new_stream(42);
        let mut b = new_stream(42);
        let xs: Vec<f64> = (0..16).map(|_| a.next_uniform()).collect();
        let ys: Vec<f64> = (0..16).map(|_| b.next_uniform()).collect();
        assert_eq!(xs, ys);
        assert!(xs.iter().all(|x| (0.0..1.0).contains(x)));

        let root = new_stream(42);
        let mut c0 = split(&root, 0);
        let mut c1 = split(&root, 1);
        let s0: Vec<u64> = (0..8).map(|_| c0.next_u64()).collect();
        let s1: Vec<u64> = (0..8).map(|_| c1.next_u64()).collect();
        assert_ne!(s0, s1);

        // Splitting after the parent has drawn gives the same child.
        let mut used = new_stream(42);
        for _ in 0..100 {
            used.next_uniform();
        }
        let mut late = used.split(1);
        let s1_late: Vec<u64> = (0..8).map(|_| late.next_u64()).collect();
        assert_eq!(s1, s1_late);
        assert_ne!(root.split(3).stream_id(), root.stream_id());
    }
}

mod common;

use common::{p2, random_value, safe_exponents, FORMATS};
use num_traits::{Signed, Zero};
use proptest::prelude::*;
use sr_bounds::fp_core::{self, ExactValue, FloatFormat};
use sr_bounds::oracle::{bracket_rational, exact_op, theta_of_fast, theta_rational, to_rational, Rational};
use sr_bounds::sr_arith::{fp_op, rn_round, Op, RoundingMode};
use sr_bounds::RngStream;

const ADD_SUB_MUL: [Op; 3] = [Op::Add, Op::Sub, Op::Mul];

#[test]
fn fast_theta_matches_rational_theta_on_1e5_pairs() {
    let mut rng = RngStream::new(0x7e7a);
    let mut checked = 0usize;
    let mut inexact = 0usize;
    for i in 0..120_000u32 {
        let fmt = FORMATS[(i % 3) as usize];
        let op = ADD_SUB_MUL[(i / 3 % 3) as usize];
        let (lo, hi) = safe_exponents(&fmt);
        let a = random_value(&mut rng, &fmt, lo, hi);
        // Nearby exponents make additions interesting.
        let b = if op == Op::Mul {
            random_value(&mut rng, &fmt, lo, hi)
        } else {
            let e = fp_core::epsilon(&ExactValue::from_f64(a), &fmt).unwrap().log2() as i32 + fmt.precision() as i32 - 1;
            let d = (rng.next_u64() % 40) as i32 - 20;
            random_value(&mut rng, &fmt, (e + d).clamp(lo, hi), (e + d).clamp(lo, hi))
        };
        let exact = op.exact(a, b).unwrap();
        let fast = fp_core::theta(&exact, &fmt);
        let slow = theta_rational(a, b, op, &fmt);
        match (fast, slow) {
            (Ok(f), Ok(s)) => {
                assert_eq!(theta_of_fast(&f), s, "{a:e} {} {b:e} in {fmt}", op.symbol());
                checked += 1;
                inexact += usize::from(!s.is_zero());
            }
            (Err(f), Err(s)) => assert_eq!(f.is_range(), s.is_range()),
            (f, s) => panic!("disagreement on {a:e} {} {b:e}: {f:?} vs {s:?}", op.symbol()),
        }
    }
    assert!(checked >= 100_000, "{checked}");
    assert!(inexact > checked / 2, "{inexact}");
}

#[test]
fn fast_theta_matches_rational_theta_for_division() {
    let mut rng = RngStream::new(0xd1);
    for i in 0..20_000u32 {
        let fmt = FORMATS[(i % 3) as usize];
        let (lo, hi) = safe_exponents(&fmt);
        let a = random_value(&mut rng, &fmt, lo, hi);
        let b = random_value(&mut rng, &fmt, lo, hi);
        let t = fp_core::theta(&ExactValue::quotient(a, b).unwrap(), &fmt).unwrap();
        assert_eq!(theta_of_fast(&t), theta_rational(a, b, Op::Div, &fmt).unwrap(), "{a:e}/{b:e} in {fmt}");
    }
}

#[test]
fn rn_binary32_matches_native_f32() {
    let mut rng = RngStream::new(0xf32);
    let fmt = FloatFormat::BINARY32;
    let mut rng_unused = RngStream::new(0);
    for i in 0..50_000u32 {
        let a = random_value(&mut rng, &fmt, -60, 60) as f32;
        let b = random_value(&mut rng, &fmt, -60, 60) as f32;
        let op = [Op::Add, Op::Sub, Op::Mul, Op::Div][(i % 4) as usize];
        let native = match op {
            Op::Add => a + b,
            Op::Sub => a - b,
            Op::Mul => a * b,
            Op::Div => a / b,
        };
        if native != 0.0 && native.abs() < f32::MIN_POSITIVE {
            continue;
        }
        let (r, _) = fp_op(a as f64, b as f64, op, &fmt, RoundingMode::NearestEven, &mut rng_unused).unwrap();
        assert_eq!(r, native as f64, "{a:e} {} {b:e}", op.symbol());
    }
    assert_eq!(rng_unused.draws(), 0);
}

fn exact_of(a: f64, b: f64, op: Op) -> Rational {
    exact_op(a, b, op).unwrap()
}

fn value_in(fmt: FloatFormat) -> impl Strategy<Value = f64> {
    let (lo, hi) = safe_exponents(&fmt);
    let p = fmt.precision();
    (any::<bool>(), 0u64..(1u64 << (p - 1)), lo..=hi).prop_map(move |(neg, frac, e)| {
        let m = ((1u64 << (p - 1)) | frac) as f64;
        let v = m * 2f64.powi(e - (p as i32 - 1));
        if neg {
            -v
        } else {
            v
        }
    })
}

fn format_and_pair() -> impl Strategy<Value = (FloatFormat, f64, f64, Op)> {
    (0usize..3, 0usize..4)
        .prop_flat_map(|(fi, oi)| {
            let fmt = FORMATS[fi];
            (Just(fmt), value_in(fmt), value_in(fmt), Just([Op::Add, Op::Sub, Op::Mul, Op::Div][oi]))
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn bracket_invariants((fmt, a, b, op) in format_and_pair()) {
        let v = op.exact(a, b).unwrap();
        let c = exact_of(a, b, op);
        let Ok(br) = fp_core::bracket(&v, &fmt) else { return Ok(()) };
        let down = to_rational(br.down);
        let up = to_rational(br.up);
        prop_assert!(down <= c && c <= up);
        let representable = fmt.is_representable(c.clone().try_into_f64());
        prop_assert_eq!(br.is_exact(), representable && down == c);
        if !br.is_exact() {
            let eps = fp_core::epsilon(&v, &fmt).unwrap();
            prop_assert_eq!(to_rational(eps), &up - &down);
            // ε(x) ≤ |x| u
            prop_assert!(to_rational(eps) <= c.abs() * to_rational(fmt.unit_roundoff()));
        }
        // Agreement with the rational lattice.
        let rb = bracket_rational(&c, &fmt).unwrap();
        prop_assert_eq!(rb.down, down);
        prop_assert_eq!(rb.up, up);
    }

    #[test]
    fn sign_antisymmetry((fmt, a, b, op) in format_and_pair()) {
        let v = op.exact(a, b).unwrap();
        let neg = op.exact(-a, b).unwrap();
        if let (Ok(d), Ok(u)) = (fp_core::round_down(&neg, &fmt), fp_core::round_up(&v, &fmt)) {
            if op != Op::Add && op != Op::Sub {
                prop_assert_eq!(d, -u);
            }
        }
        let x = ExactValue::pair(a, 0.0);
        let mx = ExactValue::pair(-a, 0.0);
        prop_assert_eq!(fp_core::round_down(&mx, &fmt).unwrap(), -fp_core::round_up(&x, &fmt).unwrap());
    }

    #[test]
    fn per_op_error_bounds((fmt, a, b, op) in format_and_pair(), seed in any::<u64>()) {
        let c = exact_of(a, b, op);
        let u = to_rational(fmt.unit_roundoff());
        let mut rng = RngStream::new(seed);
        for mode in [RoundingMode::StochasticNearest, RoundingMode::NearestEven] {
            let Ok((r, rec)) = fp_op(a, b, op, &fmt, mode, &mut rng) else { continue };
            let err = (to_rational(r) - &c).abs();
            let limit = match mode {
                RoundingMode::StochasticNearest => &u * c.abs(),
                RoundingMode::NearestEven => &u * c.abs() / Rational::from_integer(2.into()),
            };
            prop_assert!(err <= limit);
            if err.is_zero() {
                prop_assert_eq!(rec.delta, 0.0);
                prop_assert!(rec.draw.is_none());
            }
        }
    }

    #[test]
    fn single_op_law((fmt, a, b, op) in format_and_pair()) {
        let c = exact_of(a, b, op);
        let Ok(rb) = bracket_rational(&c, &fmt) else { return Ok(()) };
        let one = Rational::from_integer(1.into());
        // Two-point mean is exact.
        let mean = &rb.theta * &rb.up + (&one - &rb.theta) * &rb.down;
        prop_assert_eq!(&mean, &c);
        // Variance ε²θ(1-θ) ≤ c²u²/4.
        let eps = &rb.up - &rb.down;
        let var = &rb.theta * (&rb.up - &c) * (&rb.up - &c) + (&one - &rb.theta) * (&rb.down - &c) * (&rb.down - &c);
        prop_assert_eq!(&var, &(&eps * &eps * &rb.theta * (&one - &rb.theta)));
        let u = to_rational(fmt.unit_roundoff());
        prop_assert!(var <= &c * &c * &u * &u / Rational::from_integer(4.into()));
    }
}

trait TryF64 {
    fn try_into_f64(self) -> f64;
}

impl TryF64 for Rational {
    fn try_into_f64(self) -> f64 {
        use num_traits::ToPrimitive;
        let f = self.to_f64().unwrap_or(f64::NAN);
        if to_rational(f) == self {
            f
        } else {
            f64::NAN
        }
    }
}

#[test]
fn exact_passthrough_consumes_no_draw() {
    let mut rng = RngStream::new(3);
    let fmt = FloatFormat::BFLOAT16;
    let (r, rec) = fp_op(1.0, p2(-7), Op::Add, &fmt, RoundingMode::StochasticNearest, &mut rng).unwrap();
    assert_eq!(r, 1.0 + p2(-7));
    assert_eq!(rec.delta, 0.0);
    assert_eq!(rng.draws(), 0);
    assert_eq!(rn_round(&ExactValue::from_f64(0.75), &fmt).unwrap(), 0.75);
}

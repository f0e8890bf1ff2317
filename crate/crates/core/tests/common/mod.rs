#![allow(dead_code)]

use sr_bounds::fp_core::FloatFormat;
use sr_bounds::RngStream;

pub const FORMATS: [FloatFormat; 3] = [FloatFormat::BFLOAT16, FloatFormat::BINARY16, FloatFormat::BINARY32];

/// Random representable value of `fmt` with exponent in `[e_lo, e_hi]`.
pub fn random_value(rng: &mut RngStream, fmt: &FloatFormat, e_lo: i32, e_hi: i32) -> f64 {
    let p = fmt.precision();
    let frac = rng.next_u64() >> (64 - (p - 1));
    let significand = (1u64 << (p - 1)) | frac;
    let span = (e_hi - e_lo + 1) as u64;
    let e = e_lo + (rng.next_u64() % span) as i32;
    let sign = if rng.next_u64() & 1 == 0 { 1.0 } else { -1.0 };
    sign * significand as f64 * 2f64.powi(e - (p as i32 - 1))
}

/// Exponent window that keeps products and quotients of two values in range.
pub fn safe_exponents(fmt: &FloatFormat) -> (i32, i32) {
    let lo = fmt.e_min() / 2 + 2;
    let hi = fmt.e_max() / 2 - 2;
    (lo, hi)
}

pub fn p2(k: i32) -> f64 {
    2f64.powi(k)
}

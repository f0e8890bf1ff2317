//! Error-free transformations on carrier (`f64`) numbers.

use std::cmp::Ordering;

/// Returns `(s, e)` with `s = fl(a + b)` and `a + b = s + e` exactly.
#[inline]
pub(crate) fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let e = (a - (s - bb)) + (b - bb);
    (s, e)
}

/// Same as [`two_sum`] but requires `|a| >= |b|` (or `a == 0`).
#[inline]
pub(crate) fn fast_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let e = b - (s - a);
    (s, e)
}

/// Returns `(p, e)` with `p = fl(a * b)` and `a * b = p + e` exactly, barring underflow.
#[inline]
pub(crate) fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    let e = a.mul_add(b, -p);
    (p, e)
}

/// Exact sign of `terms.iter().sum()`.
///
/// Accumulates a nonoverlapping expansion (Shewchuk's grow-expansion with
/// zero elimination); the largest surviving component carries the sign.
pub(crate) fn expansion_sign(terms: &[f64]) -> Ordering {
    let mut expansion: Vec<f64> = Vec::with_capacity(terms.len());
    for &t in terms {
        let mut q = t;
        let mut next = Vec::with_capacity(expansion.len() + 1);
        for &c in &expansion {
            let (s, e) = two_sum(q, c);
            if e != 0.0 {
                next.push(e);
            }
            q = s;
        }
        if q != 0.0 {
            next.push(q);
        }
        expansion = next;
    }
    match expansion.last() {
        None => Ordering::Equal,
        Some(v) if *v > 0.0 => Ordering::Greater,
        Some(_) => Ordering::Less,
    }
}

/// `2^k` for exponents in the normal `f64` range.
#[inline]
pub(crate) fn exp2i(k: i32) -> f64 {
    debug_assert!((-1022..=1023).contains(&k));
    f64::from_bits(((k + 1023) as u64) << 52)
}

/// `floor(log2 |x|)` for finite nonzero `x`, subnormals included.
pub(crate) fn exponent_of(x: f64) -> i32 {
    let bits = x.abs().to_bits();
    let biased = (bits >> 52) as i32;
    if biased == 0 {
        let mantissa = bits & ((1u64 << 52) - 1);
        -1022 - (mantissa.leading_zeros() as i32 - 11)
    } else {
        biased - 1023
    }
}

#[inline]
pub(crate) fn is_power_of_two(x: f64) -> bool {
    x != 0.0 && x.is_finite() && (x.abs().to_bits() & ((1u64 << 52) - 1)) == 0
}

//! Double-double arithmetic (~106-bit significand) for bound evaluation.

use std::ops::{Add, Div, Mul, Neg, Sub};

use crate::eft::{fast_two_sum, two_prod, two_sum};

#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub(crate) struct Dd {
    pub hi: f64,
    pub lo: f64,
}

const LN2: Dd = Dd { hi: 6.931_471_805_599_452_862e-1, lo: 2.319_046_813_846_299_558e-17 };

impl Dd {
    pub const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };
    pub const ONE: Dd = Dd { hi: 1.0, lo: 0.0 };

    pub fn new(x: f64) -> Dd {
        Dd { hi: x, lo: 0.0 }
    }

    /// Exact for every `u64`.
    pub fn from_u64(n: u64) -> Dd {
        let hi = n as f64;
        let lo = (n as i128 - hi as i128) as f64;
        let (hi, lo) = fast_two_sum(hi, lo);
        Dd { hi, lo }
    }

    pub fn to_f64(self) -> f64 {
        if self.hi.is_finite() {
            self.hi + self.lo
        } else {
            self.hi
        }
    }

    /// Scales by `2^k` in two steps so `2^k` itself need not be representable.
    fn ldexp(self, k: i32) -> Dd {
        let s1 = 2f64.powi(k / 2);
        let s2 = 2f64.powi(k - k / 2);
        Dd { hi: self.hi * s1 * s2, lo: self.lo * s1 * s2 }
    }

    pub fn sqrt(self) -> Dd {
        if self.hi <= 0.0 {
            return Dd::ZERO;
        }
        let q = self.hi.sqrt();
        let (p, e) = two_prod(q, q);
        let r = (self - Dd { hi: p, lo: e }).hi;
        let (hi, lo) = fast_two_sum(q, r / (2.0 * q));
        Dd { hi, lo }
    }

    /// `e^x - 1` via a short Taylor series after halving `m` times, then
    /// `expm1(2r) = expm1(r) (2 + expm1(r))`. Accurate in relative terms.
    fn expm1_small(self) -> Dd {
        const HALVINGS: i32 = 10;
        let r = self.ldexp(-HALVINGS);
        let mut term = r;
        let mut sum = r;
        for k in 2..30 {
            term = term * r / Dd::new(k as f64);
            sum = sum + term;
            if term.hi.abs() <= 1e-36 * sum.hi.abs() {
                break;
            }
        }
        for _ in 0..HALVINGS {
            sum = sum * (sum + Dd::new(2.0));
        }
        sum
    }

    pub fn exp(self) -> Dd {
        if self.hi > 709.79 {
            return Dd::new(f64::INFINITY);
        }
        if self.hi < -745.0 {
            return Dd::ZERO;
        }
        let k = (self.hi / LN2.hi).round();
        let r = self - LN2 * Dd::new(k);
        (r.expm1_small() + Dd::ONE).ldexp(k as i32)
    }

    pub fn expm1(self) -> Dd {
        if self.hi > 709.79 {
            Dd::new(f64::INFINITY)
        } else if self.hi.abs() < 0.5 {
            self.expm1_small()
        } else {
            self.exp() - Dd::ONE
        }
    }

    /// Natural logarithm, `x > 0`.
    pub fn ln(self) -> Dd {
        if self.hi <= 0.0 {
            return Dd::new(f64::NAN);
        }
        if self.hi.is_infinite() {
            return self;
        }
        // x = m 2^k with m near 1 keeps exp(-y) well inside the normal range.
        let k = crate::eft::exponent_of(self.hi);
        let m = self.ldexp(-k);
        let mut y = Dd::new(m.hi.ln());
        for _ in 0..2 {
            y = y + m * (-y).exp() - Dd::ONE;
        }
        y + LN2 * Dd::new(k as f64)
    }

    /// `ln(1 + x)`, accurate for small `|x|`; requires `x > -1`.
    pub fn ln1p(self) -> Dd {
        if self.hi.abs() < 0.5 {
            // ln(1+x) = 2 atanh(z), z = x / (2 + x)
            let z = self / (Dd::new(2.0) + self);
            let z2 = z * z;
            let mut power = z;
            let mut sum = z;
            for k in 1..200 {
                power = power * z2;
                let term = power / Dd::new((2 * k + 1) as f64);
                sum = sum + term;
                if term.hi.abs() <= 1e-36 * sum.hi.abs() {
                    break;
                }
            }
            sum + sum
        } else {
            (Dd::ONE + self).ln()
        }
    }
}

impl Add for Dd {
    type Output = Dd;
    fn add(self, b: Dd) -> Dd {
        let (s, e) = two_sum(self.hi, b.hi);
        let (t, f) = two_sum(self.lo, b.lo);
        let (s, e) = fast_two_sum(s, e + t);
        let (hi, lo) = fast_two_sum(s, e + f);
        Dd { hi, lo }
    }
}

impl Neg for Dd {
    type Output = Dd;
    fn neg(self) -> Dd {
        Dd { hi: -self.hi, lo: -self.lo }
    }
}

impl Sub for Dd {
    type Output = Dd;
    fn sub(self, b: Dd) -> Dd {
        self + (-b)
    }
}

impl Mul for Dd {
    type Output = Dd;
    fn mul(self, b: Dd) -> Dd {
        let (p, e) = two_prod(self.hi, b.hi);
        let e = e + (self.hi * b.lo + self.lo * b.hi);
        let (hi, lo) = fast_two_sum(p, e);
        Dd { hi, lo }
    }
}

impl Div for Dd {
    type Output = Dd;
    fn div(self, b: Dd) -> Dd {
        let q1 = self.hi / b.hi;
        let r = self - b * Dd::new(q1);
        let q2 = r.hi / b.hi;
        let r = r - b * Dd::new(q2);
        let q3 = r.hi / b.hi;
        let (hi, lo) = fast_two_sum(q1, q2);
        Dd { hi, lo } + Dd::new(q3)
    }
}

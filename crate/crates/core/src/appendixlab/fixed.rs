//! Binary fixed-point arithmetic on big integers: a value `x` is stored as
//! the integer `round_down(x * 2^frac_bits)`.

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};

pub(crate) fn one(frac_bits: u64) -> BigInt {
    BigInt::one() << frac_bits
}

/// Exact for every finite `x` whose lowest set bit is at or above
/// `2^-frac_bits`; truncated otherwise.
pub(crate) fn from_f64(x: f64, frac_bits: u64) -> BigInt {
    if x == 0.0 {
        return BigInt::zero();
    }
    let bits = x.to_bits();
    let negative = bits >> 63 == 1;
    let exp_bits = ((bits >> 52) & 0x7ff) as i64;
    let frac = bits & ((1u64 << 52) - 1);
    let (mantissa, exponent) = if exp_bits == 0 {
        (frac, -1074)
    } else {
        (frac | (1u64 << 52), exp_bits - 1075)
    };
    let mut v = BigInt::from(mantissa);
    let shift = exponent + frac_bits as i64;
    if shift >= 0 {
        v <<= shift as u64;
    } else {
        v >>= (-shift) as u64;
    }
    if negative {
        -v
    } else {
        v
    }
}

pub(crate) fn to_f64(x: &BigInt, frac_bits: u64) -> f64 {
    if x.is_zero() {
        return 0.0;
    }
    let len = x.bits();
    let shift = len.saturating_sub(64);
    let top = (x.abs() >> shift).to_f64().unwrap_or(f64::INFINITY);
    let sign = if x.is_negative() { -1.0 } else { 1.0 };
    // scale by 2^(shift - frac_bits) in two steps to avoid early underflow
    let total = shift as i64 - frac_bits as i64;
    let half = (total / 2) as i32;
    sign * top * 2f64.powi(half) * 2f64.powi(total as i32 - half)
}

pub(crate) fn mul(a: &BigInt, b: &BigInt, frac_bits: u64) -> BigInt {
    (a * b) >> frac_bits
}

/// `exp(-s)` for `s >= 0`: Taylor series after halving the argument below
/// `2^-10`, then repeated squaring.
pub(crate) fn exp_neg(s: f64, frac_bits: u64) -> BigInt {
    let mut halvings = 0u32;
    let mut r = s;
    while r > 1.0 / 1024.0 {
        r *= 0.5;
        halvings += 1;
    }
    let r = -from_f64(r, frac_bits);
    let mut term = one(frac_bits);
    let mut sum = term.clone();
    let mut j = 1u32;
    while !term.is_zero() {
        term = mul(&term, &r, frac_bits) / j;
        sum += &term;
        j += 1;
    }
    for _ in 0..halvings {
        sum = mul(&sum, &sum, frac_bits);
    }
    sum
}

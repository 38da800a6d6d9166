//! Exact rational reference values at q = 1/2.

#![allow(dead_code)]

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

fn pow2(e: i64) -> BigRational {
    let two = BigInt::from(2);
    if e >= 0 {
        BigRational::from_integer(two.pow(e as u32))
    } else {
        BigRational::new(BigInt::one(), two.pow((-e) as u32))
    }
}

/// `j_v(2^{-n}; 1/4)` with `2v + 2 = a_exp`, summed exactly until the
/// remainder of the alternating tail is below `2^{-160}` of the sum.
pub fn j_half_exact(n: i32, a_exp: u32) -> BigRational {
    let x2 = pow2(-2 * n as i64);
    let mut term = BigRational::one();
    let mut sum = BigRational::one();
    let tiny = pow2(-160);
    for k in 1i64.. {
        // term_k / term_{k-1} = -q^{2k} x^2 / ((1 - q^{2v+2k}) (1 - q^{2k}))
        let q2k = pow2(-2 * k);
        let den = (BigRational::one() - pow2(-(a_exp as i64) - 2 * k + 2)) * (BigRational::one() - &q2k);
        let ratio = -(&q2k * &x2) / den;
        term = &term * &ratio;
        sum = &sum + &term;
        if ratio.abs() < BigRational::new(BigInt::one(), BigInt::from(2))
            && !sum.is_zero()
            && term.abs() < &sum.abs() * &tiny
        {
            break;
        }
    }
    sum
}

/// Whether `x` lies within one unit in the last place of `exact`.
pub fn within_one_ulp(x: f64, exact: &BigRational) -> bool {
    let Some(xr) = BigRational::from_float(x) else {
        return false;
    };
    if x == 0.0 {
        return exact.is_zero();
    }
    let e = x.abs().log2().floor() as i64;
    let ulp = pow2(e - 52);
    (xr - exact).abs() <= ulp
}

pub fn to_f64(r: &BigRational) -> f64 {
    use num_traits::ToPrimitive;
    r.to_f64().unwrap_or(f64::NAN)
}

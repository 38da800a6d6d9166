//! Scalar q-series primitives: Pochhammer symbols, the q-exponential, the
//! normalization constant `c_{q,v}` and the Gauss-kernel amplitude `A(t)`.
//!
//! Every primitive has a binary64 path and an `_hp` twin evaluated in
//! software precision.

use serde::{Deserialize, Serialize};

use crate::error::{QError, Result};
use crate::precision::{hp, hp_one, log2_abs, to_f64, Hp, PrecisionCtx};

/// Lattice base `q` and Bessel order `v`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QParams {
    pub q: f64,
    pub v: f64,
}

impl QParams {
    pub fn new(q: f64, v: f64) -> Result<Self> {
        if !(q > 0.0 && q < 1.0) {
            return Err(QError::InvalidParams(format!(
                "q must satisfy 0 < q < 1, got q={q}"
            )));
        }
        if !(v > -1.0) || !v.is_finite() {
            return Err(QError::InvalidParams(format!("v must satisfy v > -1, got v={v}")));
        }
        Ok(Self { q, v })
    }

    /// Exponent `2v+2` of the Jackson weight `q^{n(2v+2)}`.
    pub fn weight_exp(&self) -> f64 {
        2.0 * self.v + 2.0
    }

    /// `q^n`.
    pub fn pow(&self, n: i32) -> f64 {
        self.q.powi(n)
    }

    /// `q^{2v+2}` in binary64.
    pub fn a(&self) -> f64 {
        self.q.powf(self.weight_exp())
    }

    pub fn q_hp(&self, bits: usize) -> Hp {
        hp(self.q, bits)
    }

    /// `q^{2v+2}` in software precision.
    pub fn a_hp(&self, bits: usize) -> Hp {
        hp_qpow(self.q, self.weight_exp(), bits)
    }
}

/// `q^e` for real `e` at `bits` precision; exact for integral `e`.
pub fn hp_qpow(q: f64, e: f64, bits: usize) -> Hp {
    let qh = hp(q, bits);
    if e.fract() == 0.0 && e.abs() < 1e9 {
        crate::precision::hp_powi(&qh, e as i64)
    } else {
        qh.powf(&hp(e, bits))
    }
}

/// `(a;q)_n = prod_{k<n} (1 - a q^k)`.
pub fn qpoch_finite(a: f64, q: f64, n: usize) -> f64 {
    let mut p = 1.0;
    let mut aq = a;
    for _ in 0..n {
        p *= 1.0 - aq;
        aq *= q;
    }
    p
}

pub fn qpoch_finite_hp(a: &Hp, q: &Hp, n: usize) -> Hp {
    let bits = a.precision().max(q.precision());
    let one = hp_one(bits);
    let mut p = one.clone();
    let mut aq = a.clone();
    for _ in 0..n {
        p *= &one - &aq;
        aq = &aq * q;
    }
    p
}

fn check_inf_args(a: f64, q: f64) -> Result<()> {
    if !(q > 0.0 && q < 1.0) {
        return Err(QError::InvalidParams(format!(
            "q must satisfy 0 < q < 1, got q={q}"
        )));
    }
    if !a.is_finite() {
        return Err(QError::InvalidArgument(format!("a={a} is not finite")));
    }
    if a == 1.0 {
        return Err(QError::NonConvergent { a, q });
    }
    Ok(())
}

/// `(a;q)_inf`, truncated at the first `K` with `|a| q^K < tail_tol`; the
/// omitted tail has relative size at most `tail_tol/(1-q-tail_tol)`.
///
/// `a = 1` is rejected. For `a > 1` a factor may vanish exactly, in which case
/// the product is 0.
pub fn qpoch_inf(a: f64, q: f64, ctx: &PrecisionCtx) -> Result<f64> {
    check_inf_args(a, q)?;
    let mut p = 1.0;
    let mut aq = a;
    while aq.abs() >= ctx.tail_tol {
        let f = 1.0 - aq;
        if f == 0.0 {
            return Ok(0.0);
        }
        p *= f;
        aq *= q;
    }
    Ok(p)
}

/// Software-precision `(a;q)_inf` at the precision of `a` and `q`, truncated
/// once `|a q^K|` drops below the tighter of `tail_tol` and the working
/// precision.
pub fn qpoch_inf_hp(a: &Hp, q: &Hp, ctx: &PrecisionCtx) -> Result<Hp> {
    let (af, qf) = (to_f64(a), to_f64(q));
    check_inf_args(af, qf)?;
    let bits = a.precision().max(q.precision());
    let cutoff = ctx
        .hp_cutoff_log2()
        .min(-(bits as f64) - 8.0);
    let one = hp_one(bits);
    let mut p = one.clone();
    let mut aq = a.clone();
    while log2_abs(&aq) >= cutoff {
        let f = &one - &aq;
        if crate::precision::is_zero(&f) {
            return Ok(crate::precision::hp_zero(bits));
        }
        p *= f;
        aq = &aq * q;
    }
    Ok(p)
}

/// `c_{q,v} = (q^{2v+2};q^2)_inf / ((1-q) (q^2;q^2)_inf)`, evaluated in
/// software precision and rounded once.
pub fn c_qv(p: &QParams, ctx: &PrecisionCtx) -> f64 {
    to_f64(&c_qv_hp(p, ctx))
}

pub fn c_qv_hp(p: &QParams, ctx: &PrecisionCtx) -> Hp {
    let bits = ctx.bits();
    let q = p.q_hp(bits);
    let q2 = &q * &q;
    let num = qpoch_inf_hp(&p.a_hp(bits), &q2, ctx).expect("q^{2v+2} < 1 for v > -1");
    let den = qpoch_inf_hp(&q2, &q2, ctx).expect("q^2 < 1");
    num / (den * (hp_one(bits) - q))
}

/// q-exponential `e(z,q) = 1/(z;q)_inf`, valid for every `z < 1`. For
/// `|z| < 1` it coincides with `sum z^n/(q;q)_n`.
pub fn qexp(z: f64, q: f64, ctx: &PrecisionCtx) -> Result<f64> {
    if !(z < 1.0) {
        return Err(QError::PoleAtOne { z });
    }
    Ok(1.0 / qpoch_inf(z, q, ctx)?)
}

pub fn qexp_hp(z: &Hp, q: &Hp, ctx: &PrecisionCtx) -> Result<Hp> {
    let zf = to_f64(z);
    if !(zf < 1.0) {
        return Err(QError::PoleAtOne { z: zf });
    }
    let bits = z.precision().max(q.precision());
    Ok(hp_one(bits) / qpoch_inf_hp(z, q, ctx)?)
}

/// Partial sum `sum_{n<=N} z^n/(q;q)_n` of the q-exponential series.
pub fn qexp_series(z: f64, q: f64, terms: usize) -> f64 {
    let mut sum = 0.0;
    let mut term = 1.0;
    for n in 0..=terms {
        sum += term;
        term *= z / (1.0 - q.powi(n as i32 + 1));
    }
    sum
}

/// Gauss-kernel amplitude
/// `A(t) = (-q^{2v+2} t, -q^{-2v}/t; q^2)_inf / (-t, -q^2/t; q^2)_inf`.
pub fn gauss_amplitude(t: f64, p: &QParams, ctx: &PrecisionCtx) -> Result<f64> {
    Ok(to_f64(&gauss_amplitude_hp(t, p, ctx)?))
}

pub fn gauss_amplitude_hp(t: f64, p: &QParams, ctx: &PrecisionCtx) -> Result<Hp> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(QError::InvalidArgument(format!("time t must be positive, got {t}")));
    }
    gauss_amplitude_at(&hp(t, ctx.bits()), p, ctx)
}

/// `A(t)` at a software-precision time, so lattice times `q^{2m}` can be exact.
pub fn gauss_amplitude_at(t: &Hp, p: &QParams, ctx: &PrecisionCtx) -> Result<Hp> {
    let bits = ctx.bits();
    let q = p.q_hp(bits);
    let q2 = &q * &q;
    let inv_t = hp_one(bits) / t;
    let a = p.a_hp(bits);
    let q_m2v = hp_qpow(p.q, -2.0 * p.v, bits);
    let num1 = qpoch_inf_hp(&-(&a * t), &q2, ctx)?;
    let num2 = qpoch_inf_hp(&-(&q_m2v * &inv_t), &q2, ctx)?;
    let den1 = qpoch_inf_hp(&-t.clone(), &q2, ctx)?;
    let den2 = qpoch_inf_hp(&-(&q2 * &inv_t), &q2, ctx)?;
    Ok(num1 * num2 / (den1 * den2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn ctx() -> PrecisionCtx {
        PrecisionCtx::default()
    }

    #[test]
    fn params_validation() {
        assert!(QParams::new(1.5, 0.0).is_err());
        assert!(QParams::new(0.0, 0.0).is_err());
        assert!(QParams::new(0.5, -1.0).is_err());
        assert!(QParams::new(0.5, f64::NAN).is_err());
        assert!(QParams::new(0.5, -0.7).is_ok());
    }

    #[test]
    fn finite_products() {
        assert_eq!(qpoch_finite(0.7, 0.5, 0), 1.0);
        assert_eq!(qpoch_finite(0.5, 0.5, 2), 0.375);
        assert_eq!(qpoch_finite(2.0, 0.5, 3), 0.0);
        for n in 0..20 {
            let (a, q) = (0.37, 0.81);
            assert_relative_eq!(
                qpoch_finite(a, q, n + 1),
                qpoch_finite(a, q, n) * (1.0 - a * q.powi(n as i32)),
                max_relative = 1e-15
            );
        }
    }

    #[test]
    fn infinite_products() {
        let c = ctx();
        assert_eq!(qpoch_inf(0.0, 0.5, &c).unwrap(), 1.0);
        assert_relative_eq!(
            qpoch_inf(0.25, 0.25, &c).unwrap(),
            0.688_537_537_120_339_715_456_514_357_293_508_184_675_549_82,
            max_relative = 1e-15
        );
        assert_relative_eq!(
            qpoch_inf(-1.0, 0.5, &c).unwrap(),
            4.768_462_058_062_743_448_299_798_577_356_794_477_543_239_026_334_8,
            max_relative = 1e-15
        );
        assert!(matches!(qpoch_inf(1.0, 0.5, &c), Err(QError::NonConvergent { .. })));
        assert_eq!(qpoch_inf(4.0, 0.5, &c).unwrap(), 0.0);
    }

    #[test]
    fn infinite_product_factorizes() {
        let c = ctx();
        for &(a, q) in &[(0.3, 0.5), (-2.5, 0.8), (0.9, 0.25)] {
            let full = qpoch_inf(a, q, &c).unwrap();
            for k in [1usize, 5, 10] {
                let split = qpoch_finite(a, q, k) * qpoch_inf(a * q.powi(k as i32), q, &c).unwrap();
                assert_relative_eq!(full, split, max_relative = 1e-14);
            }
        }
    }

    #[test]
    fn normalization_constant() {
        let c = ctx();
        assert_eq!(c_qv(&QParams::new(0.5, 0.0).unwrap(), &c), 2.0);
        assert_relative_eq!(
            c_qv(&QParams::new(0.5, 1.0).unwrap(), &c),
            8.0 / 3.0,
            max_relative = 2e-16
        );
        assert_relative_eq!(
            c_qv(&QParams::new(0.9, 0.5).unwrap(), &c),
            25.559_909_919_576_740_781_743_089_297_340_276_814_291,
            max_relative = 2e-16
        );
    }

    #[test]
    fn q_exponential() {
        let c = ctx();
        assert_eq!(qexp(0.0, 0.5, &c).unwrap(), 1.0);
        assert!(matches!(qexp(1.0, 0.5, &c), Err(QError::PoleAtOne { .. })));
        assert!(matches!(qexp(2.0, 0.5, &c), Err(QError::PoleAtOne { .. })));
        assert_relative_eq!(
            qexp(-4.0, 0.25, &c).unwrap(),
            0.073_751_225_415_380_112_550_169_134_456_163_983,
            max_relative = 1e-15
        );
        let e = qexp(0.3, 0.25, &c).unwrap();
        assert_relative_eq!(e, 1.583_798_774_533_082_402_075_930_887_187_617_987, max_relative = 1e-15);
        assert!((qexp_series(0.3, 0.25, 30) - e).abs() < 1e-12);
        for &q in &[0.25, 0.5, 0.81] {
            for &z in &[-4.0, -1.0, -0.5, 0.0, 0.3, 0.9] {
                let prod = qexp(z, q, &c).unwrap() * qpoch_inf(z, q, &c).unwrap();
                assert_relative_eq!(prod, 1.0, max_relative = 1e-12);
                if z.abs() < 1.0 {
                    let series = qexp_series(z, q, 400);
                    assert!((series - qexp(z, q, &c).unwrap()).abs() < 1e-12 * (1.0 + series.abs()));
                }
            }
        }
    }

    #[test]
    fn amplitude() {
        let c = ctx();
        let p0 = QParams::new(0.5, 0.0).unwrap();
        assert_relative_eq!(gauss_amplitude(1.0, &p0, &c).unwrap(), 1.0, max_relative = 1e-15);
        let p = QParams::new(0.5, 0.5).unwrap();
        assert_relative_eq!(
            gauss_amplitude(1.0, &p, &c).unwrap(),
            1.681_797_235_934_866_395_901_544_818_691_983_954,
            max_relative = 1e-15
        );
        let a1 = gauss_amplitude(1.0, &p, &c).unwrap();
        for m in -3i32..=3 {
            let t = p.q.powi(2 * m);
            let scaled = gauss_amplitude(t, &p, &c).unwrap() * p.q.powf(2.0 * m as f64 * (p.v + 1.0));
            assert_relative_eq!(scaled, a1, max_relative = 1e-12);
        }
        assert!(gauss_amplitude(0.0, &p, &c).is_err());
        assert!(gauss_amplitude(0.37, &p, &c).unwrap() > 0.0);
    }
}

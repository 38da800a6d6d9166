//! The normalized q-Bessel function
//! `j_v(x, q^2) = sum_n (-1)^n q^{n(n+1)} x^{2n} / ((q^{2v+2};q^2)_n (q^2;q^2)_n)`,
//! its lattice tables, the decay bound and the eigen relation.
//!
//! At `x = q^{-m}` the largest term is near `q^{-m^2}` while the sum is near
//! `q^{m^2}`, so roughly `2 m^2 log10(1/q)` digits cancel. Such points are
//! summed in software precision sized for that loss and rounded once.

use std::path::{Path, PathBuf};
use std::sync::OnceLock;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{QError, Result};
use crate::lattice::LatticeGrid;
use crate::precision::{
    compensated_sum, digits_to_bits, hp, hp_abs, hp_one, hp_powi, log2_abs, to_f64, Hp,
    PrecisionCtx,
};
use crate::qseries::{hp_qpow, qpoch_inf, qpoch_inf_hp, QParams};

/// Cancellation ratio (max term / |sum|) above which binary64 is abandoned.
const CANCELLATION_LIMIT: f64 = 1e6;
/// Guard digits added on top of the predicted loss.
const GUARD_DIGITS: u32 = 10;
/// Hard ceiling on the escalated precision.
const MAX_DIGITS: u32 = 20_000;

const LOG10_2: f64 = std::f64::consts::LOG10_2;

/// `j_v(x, q^2)`. Sums in binary64 when the series is benign and falls back
/// to software precision when more than six digits cancel.
pub fn jv(x: f64, p: &QParams, ctx: &PrecisionCtx) -> Result<f64> {
    if let Some(v) = jv_native(x, p, ctx) {
        return Ok(v);
    }
    Ok(to_f64(&jv_hp(x, p, ctx)?))
}

/// Binary64 summation; `None` when cancellation is too strong to trust it.
fn jv_native(x: f64, p: &QParams, ctx: &PrecisionCtx) -> Option<f64> {
    if !x.is_finite() {
        return None;
    }
    let q2 = p.q * p.q;
    let a = p.a();
    let x2 = x * x;
    let mut terms = Vec::with_capacity(32);
    let mut term = 1.0f64;
    let mut q2n = 1.0f64;
    let mut max_term = 1.0f64;
    terms.push(1.0);
    for _ in 1..10_000 {
        let prev = term;
        let a_shift = a * q2n; // q^{2v+2} q^{2(n-1)}
        q2n *= q2;
        term *= -q2n * x2 / ((1.0 - a_shift) * (1.0 - q2n));
        if !term.is_finite() {
            return None;
        }
        terms.push(term);
        max_term = max_term.max(term.abs());
        let shrinking = term.abs() <= 0.5 * prev.abs();
        if (term.abs() < ctx.tail_tol * max_term && shrinking) || term == 0.0 {
            break;
        }
    }
    let sum = compensated_sum(terms);
    if sum == 0.0 || max_term / sum.abs() > CANCELLATION_LIMIT {
        None
    } else {
        Some(sum)
    }
}

/// Predicted digit loss for `x = q^{-m}` (zero when `|x| <= 1`).
fn predicted_loss_digits(x: f64, q: f64) -> u32 {
    let ax = x.abs();
    if ax <= 1.0 {
        return 0;
    }
    let m = ax.ln() / (1.0 / q).ln();
    (2.0 * m * m * (1.0 / q).log10()).ceil() as u32
}

/// `j_v(x, q^2)` in software precision, certified to `ctx.work_digits`
/// significant digits.
pub fn jv_hp(x: f64, p: &QParams, ctx: &PrecisionCtx) -> Result<Hp> {
    if !x.is_finite() {
        return Err(QError::InvalidArgument(format!("x={x} is not finite")));
    }
    certified(predicted_loss_digits(x, p.q), p, ctx, |bits| {
        let xh = hp(x, bits);
        &xh * &xh
    })
}

/// `j_v(q^n, q^2)` with the lattice point formed exactly in software
/// precision. Rounding `q^n` to binary64 first would be amplified by the
/// cancellation at large `x`.
pub fn jv_lattice_hp(n: i32, p: &QParams, ctx: &PrecisionCtx) -> Result<Hp> {
    certified(predicted_loss_digits(p.q.powi(n), p.q), p, ctx, |bits| {
        hp_powi(&p.q_hp(bits), 2 * n as i64)
    })
}

fn certified(
    loss: u32,
    p: &QParams,
    ctx: &PrecisionCtx,
    x_squared: impl Fn(usize) -> Hp,
) -> Result<Hp> {
    let mut digits = ctx.work_digits + loss + GUARD_DIGITS;
    for _attempt in 0..2 {
        if digits > MAX_DIGITS {
            break;
        }
        let bits = digits_to_bits(digits);
        let a = p.a_hp(bits);
        let (sum, loss) = series_hp(&x_squared(bits), p.q, &a, bits, ctx.work_digits);
        let needed = ctx.work_digits + loss.ceil().max(0.0) as u32 + 3;
        if needed <= digits {
            return Ok(sum.with_precision(ctx.bits()).value());
        }
        digits = needed + GUARD_DIGITS;
    }
    Err(QError::PrecisionExhausted {
        needed: digits,
        available: MAX_DIGITS.min(digits),
    })
}

/// Sum the series at `bits` precision given `x^2` and `a = q^{2v+2}`. Returns the sum
/// and the observed cancellation `log10(max term / |sum|)`.
fn series_hp(x2: &Hp, q: f64, a: &Hp, bits: usize, work_digits: u32) -> (Hp, f64) {
    let one = hp_one(bits);
    let qh = hp(q, bits);
    let q2 = &qh * &qh;
    let a = a.clone().with_precision(bits).value();
    let mut sum = one.clone();
    let mut term = one.clone();
    let mut q2n = one.clone();
    let mut max_log2 = 0.0f64;
    // Stop once terms are this far below the largest term.
    let drop_log2 = (bits as f64).max(work_digits as f64 / LOG10_2) + 8.0;
    let mut prev_log2 = 0.0f64;
    loop {
        let a_shift = &a * &q2n;
        q2n = &q2n * &q2;
        let num = -(&q2n * x2);
        let den = (&one - &a_shift) * (&one - &q2n);
        term = term * num / den;
        sum += &term;
        let t_log2 = log2_abs(&term);
        if t_log2 == f64::NEG_INFINITY {
            break;
        }
        max_log2 = max_log2.max(t_log2);
        let shrinking = t_log2 < prev_log2 - 1.0;
        if shrinking && t_log2 < max_log2 - drop_log2 {
            break;
        }
        prev_log2 = t_log2;
    }
    let loss = (max_log2 - log2_abs(&sum)) * LOG10_2;
    (sum, loss)
}

/// Constant `C = (-q^2;q^2)_inf (-q^{2v+2};q^2)_inf / (q^{2v+2};q^2)_inf` of
/// the decay bound.
pub fn decay_constant(p: &QParams, ctx: &PrecisionCtx) -> f64 {
    let q2 = p.q * p.q;
    let a = p.a();
    let num = qpoch_inf(-q2, q2, ctx).unwrap() * qpoch_inf(-a, q2, ctx).unwrap();
    num / qpoch_inf(a, q2, ctx).unwrap()
}

fn decay_constant_hp(p: &QParams, ctx: &PrecisionCtx) -> Hp {
    let bits = ctx.bits();
    let q = p.q_hp(bits);
    let q2 = &q * &q;
    let a = p.a_hp(bits);
    let num = qpoch_inf_hp(&-q2.clone(), &q2, ctx).unwrap() * qpoch_inf_hp(&-a.clone(), &q2, ctx).unwrap();
    num / qpoch_inf_hp(&a, &q2, ctx).unwrap()
}

/// Upper bound for `|j_v(q^n, q^2)|`: `C` for `n >= 0` and
/// `C q^{n^2-(2v+1)n}` for `n < 0`.
pub fn decay_bound(n: i32, p: &QParams, ctx: &PrecisionCtx) -> f64 {
    let c = decay_constant(p, ctx);
    if n >= 0 {
        c
    } else {
        let e = (n as f64) * (n as f64) - (2.0 * p.v + 1.0) * n as f64;
        c * p.q.powf(e)
    }
}

/// Tabulated `j_v(q^n, q^2)` for `n_min <= n <= n_max`, generated in software
/// precision and rounded once.
#[derive(Debug, Clone)]
pub struct BesselTable {
    pub params: QParams,
    pub n_min: i32,
    pub n_max: i32,
    pub values: Vec<f64>,
    pub ctx: PrecisionCtx,
    hp_values: OnceLock<Vec<Hp>>,
}

impl BesselTable {
    /// Table over `[2 n_lo, 2 n_hi]`, the range `j_v(q^{n+m})` needs.
    pub fn build(grid: &LatticeGrid, ctx: &PrecisionCtx) -> Result<Self> {
        Self::build_range(grid.params, 2 * grid.n_lo, 2 * grid.n_hi, ctx)
    }

    pub fn build_range(params: QParams, n_min: i32, n_max: i32, ctx: &PrecisionCtx) -> Result<Self> {
        if n_max < n_min {
            return Err(QError::InvalidArgument(format!(
                "empty table range [{n_min}, {n_max}]"
            )));
        }
        let hp_values = compute_hp(&params, n_min, n_max, ctx)?;
        let values = hp_values.iter().map(to_f64).collect();
        let lock = OnceLock::new();
        let _ = lock.set(hp_values);
        Ok(Self {
            params,
            n_min,
            n_max,
            values,
            ctx: *ctx,
            hp_values: lock,
        })
    }

    /// Load from `dir` when a matching cache file exists, otherwise build and
    /// write it there.
    pub fn load_or_build(grid: &LatticeGrid, ctx: &PrecisionCtx, dir: Option<&Path>) -> Result<Self> {
        let Some(dir) = dir else {
            return Self::build(grid, ctx);
        };
        let (n_min, n_max) = (2 * grid.n_lo, 2 * grid.n_hi);
        let path = cache_path(dir, &grid.params, n_min, n_max, ctx.work_digits);
        if path.exists() {
            return Self::load_csv(&path, grid.params, n_min, n_max, ctx);
        }
        let table = Self::build(grid, ctx)?;
        std::fs::create_dir_all(dir)?;
        table.save_csv(&path)?;
        Ok(table)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn contains(&self, n: i32) -> bool {
        self.n_min <= n && n <= self.n_max
    }

    /// `j_v(q^n)`; panics outside the table.
    pub fn at(&self, n: i32) -> f64 {
        assert!(self.contains(n), "j_v(q^{n}) is outside the table [{}, {}]", self.n_min, self.n_max);
        self.values[(n - self.n_min) as usize]
    }

    pub fn get(&self, n: i32) -> Option<f64> {
        self.contains(n).then(|| self.at(n))
    }

    /// Software-precision entries at `ctx.work_digits`; regenerated on first
    /// use for tables read from a cache.
    pub fn hp_values(&self) -> Result<&[Hp]> {
        if let Some(v) = self.hp_values.get() {
            return Ok(v);
        }
        let v = compute_hp(&self.params, self.n_min, self.n_max, &self.ctx)?;
        let _ = self.hp_values.set(v);
        Ok(self.hp_values.get().expect("just set"))
    }

    pub fn hp_at(&self, n: i32) -> Result<&Hp> {
        if !self.contains(n) {
            return Err(QError::OffWindow {
                exp: n,
                lo: self.n_min,
                hi: self.n_max,
            });
        }
        Ok(&self.hp_values()?[(n - self.n_min) as usize])
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut wr = csv::Writer::from_path(path)?;
        wr.write_record(["n", "jv"])?;
        for (k, v) in self.values.iter().enumerate() {
            wr.write_record([(self.n_min + k as i32).to_string(), format!("{v:.16e}")])?;
        }
        wr.flush()?;
        Ok(())
    }

    pub fn load_csv(
        path: impl AsRef<Path>,
        params: QParams,
        n_min: i32,
        n_max: i32,
        ctx: &PrecisionCtx,
    ) -> Result<Self> {
        let mut rd = csv::Reader::from_path(path)?;
        let mut values = Vec::new();
        for (k, rec) in rd.records().enumerate() {
            let rec = rec?;
            let n: i32 = rec
                .get(0)
                .and_then(|s| s.trim().parse().ok())
                .ok_or_else(|| QError::Parse(format!("table row {}: bad exponent", k + 2)))?;
            let v: f64 = rec
                .get(1)
                .and_then(|s| s.trim().parse().ok())
                .ok_or_else(|| QError::Parse(format!("table row {}: bad value", k + 2)))?;
            if n != n_min + k as i32 {
                return Err(QError::GridMismatch(format!(
                    "table row {} holds exponent {n}, expected {}",
                    k + 2,
                    n_min + k as i32
                )));
            }
            values.push(v);
        }
        if values.len() != (n_max - n_min + 1) as usize {
            return Err(QError::GridMismatch(format!(
                "cached table has {} rows, expected {}",
                values.len(),
                n_max - n_min + 1
            )));
        }
        Ok(Self {
            params,
            n_min,
            n_max,
            values,
            ctx: *ctx,
            hp_values: OnceLock::new(),
        })
    }
}

/// Cache file for a table keyed by `(q, v, n_min, n_max, digits)`.
pub fn cache_path(dir: &Path, p: &QParams, n_min: i32, n_max: i32, digits: u32) -> PathBuf {
    dir.join(format!(
        "jv_q{:?}_v{:?}_n{}_{}_d{}.csv",
        p.q, p.v, n_min, n_max, digits
    ))
}

fn compute_hp(p: &QParams, n_min: i32, n_max: i32, ctx: &PrecisionCtx) -> Result<Vec<Hp>> {
    // the most negative exponent cancels worst; refuse early if it cannot fit
    let worst = ctx.work_digits + predicted_loss_digits(p.q.powi(n_min), p.q) + GUARD_DIGITS;
    if worst > MAX_DIGITS {
        return Err(QError::PrecisionExhausted {
            needed: worst,
            available: MAX_DIGITS,
        });
    }
    (n_min..=n_max)
        .into_par_iter()
        .map(|n| jv_lattice_hp(n, p, ctx))
        .collect()
}

/// Outcome of checking `|j_v(q^n)| <= bound(n)` over a table.
#[derive(Debug, Clone, Serialize)]
pub struct DecayReport {
    pub constant: f64,
    /// Largest `|j_v(q^n)|/bound(n)` over `n >= 0`.
    pub max_ratio_nonneg: f64,
    /// Largest ratio over `n < 0`.
    pub max_ratio_neg: f64,
    pub argmax: i32,
}

impl DecayReport {
    pub fn max_ratio(&self) -> f64 {
        self.max_ratio_nonneg.max(self.max_ratio_neg)
    }
}

/// Ratio of every table entry to its decay bound. Negative exponents are
/// compared in software precision since the bound can leave binary64 range.
pub fn decay_bound_check(table: &BesselTable) -> Result<DecayReport> {
    let p = &table.params;
    let ctx = &table.ctx;
    let bits = ctx.bits();
    let c = decay_constant_hp(p, ctx);
    let qh = p.q_hp(bits);
    let mut report = DecayReport {
        constant: to_f64(&c),
        max_ratio_nonneg: 0.0,
        max_ratio_neg: 0.0,
        argmax: table.n_min,
    };
    let mut best = f64::NEG_INFINITY;
    for n in table.n_min..=table.n_max {
        let j = hp_abs(table.hp_at(n)?);
        let ratio = if n >= 0 {
            to_f64(&(j / &c))
        } else {
            // q^{n^2-(2v+1)n} = q^{n^2 - n} * q^{-2vn}
            let nn = n as i64;
            let int_part = hp_powi(&qh, nn * nn - nn);
            let frac_part = hp_qpow(p.q, -2.0 * p.v * n as f64, bits);
            to_f64(&(j / (&c * int_part * frac_part)))
        };
        if n >= 0 {
            report.max_ratio_nonneg = report.max_ratio_nonneg.max(ratio);
        } else {
            report.max_ratio_neg = report.max_ratio_neg.max(ratio);
        }
        if ratio > best {
            best = ratio;
            report.argmax = n;
        }
    }
    Ok(report)
}

/// Largest relative residual of `Delta_{q,v} j_v(lambda .) = -lambda^2 j_v(lambda .)`
/// over interior grid points, `lambda = q^k`:
/// `|Delta u + lambda^2 u| / (1 + |lambda^2 u|)`.
///
/// The second difference is formed from the software-precision table since
/// `x^{-2}` amplifies binary64 rounding by up to `q^{-2 n_hi}`.
pub fn eigen_residual(grid: &LatticeGrid, lambda_exp: i32, table: &BesselTable) -> Result<f64> {
    let p = &grid.params;
    let bits = table.ctx.bits();
    let qh = p.q_hp(bits);
    let one = hp_one(bits);
    let q2v = hp_qpow(p.q, 2.0 * p.v, bits);
    let lam2 = hp_powi(&qh, 2 * lambda_exp as i64);
    let mut worst = 0.0f64;
    for n in grid.interior().iter() {
        let k = lambda_exp + n;
        let (up, mid, down) = (table.hp_at(k - 1)?, table.hp_at(k)?, table.hp_at(k + 1)?);
        let bracket = up - (&one + &q2v) * mid + &q2v * down;
        let delta = bracket * hp_powi(&qh, -2 * n as i64);
        let rhs = &lam2 * mid;
        let num = to_f64(&hp_abs(&(delta + &rhs)));
        let r = num / (1.0 + to_f64(&hp_abs(&rhs)));
        worst = worst.max(r);
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn ctx() -> PrecisionCtx {
        PrecisionCtx::default()
    }

    #[test]
    fn value_at_origin_and_small_argument() {
        let p = QParams::new(0.5, 0.5).unwrap();
        assert_eq!(jv(0.0, &p, &ctx()).unwrap(), 1.0);
        let x = 0.5f64.powi(10);
        let q2 = 0.25;
        let two_terms = 1.0 - q2 * x * x / ((1.0 - p.a()) * (1.0 - q2));
        assert!((jv(x, &p, &ctx()).unwrap() - two_terms).abs() < 1e-10);
    }

    #[test]
    fn cancellation_triggers_software_path() {
        let p = QParams::new(0.5, 0.0).unwrap();
        assert!(jv_native(0.5f64.powi(-5), &p, &ctx()).is_none());
        let v = jv(0.5f64.powi(-5), &p, &ctx()).unwrap();
        assert_relative_eq!(v, -1.351_729_221_403_994_4e-9, max_relative = 1e-15);
        // benign argument: both paths agree
        let x = 0.7;
        let native = jv_native(x, &p, &ctx()).unwrap();
        assert_relative_eq!(native, to_f64(&jv_hp(x, &p, &ctx()).unwrap()), max_relative = 1e-14);
    }

    #[test]
    fn table_entry_matches_scalar() {
        let p = QParams::new(0.5, 0.5).unwrap();
        let g = LatticeGrid::new(p, -4, 6).unwrap();
        let t = BesselTable::build(&g, &ctx()).unwrap();
        assert_eq!((t.n_min, t.n_max), (-8, 12));
        assert_eq!(t.at(0), jv(1.0, &p, &ctx()).unwrap());
    }

    #[test]
    fn table_stable_under_more_digits() {
        let p = QParams::new(0.5, 1.5).unwrap();
        let g = LatticeGrid::new(p, -6, 10).unwrap();
        let a = BesselTable::build(&g, &ctx()).unwrap();
        let b = BesselTable::build(&g, &ctx().with_digits(80)).unwrap();
        for (x, y) in a.values.iter().zip(&b.values) {
            assert!((x - y).abs() <= f64::EPSILON * x.abs().max(f64::MIN_POSITIVE));
        }
    }

    #[test]
    fn decay_bound_holds() {
        let p = QParams::new(0.5, 0.0).unwrap();
        assert_relative_eq!(
            decay_constant(&p, &ctx()),
            2.670_139_163_894_623_265_871_939_735_829_800_739,
            max_relative = 1e-14
        );
        let g = LatticeGrid::new(p, -4, 10).unwrap();
        let t = BesselTable::build(&g, &ctx()).unwrap();
        let r = decay_bound_check(&t).unwrap();
        assert!(r.max_ratio_nonneg <= 1.0 + 1e-12, "{r:?}");
        assert!(r.max_ratio_neg <= 1.0, "{r:?}");
        for n in -8..0 {
            assert!(t.at(n).abs() <= decay_bound(n, &p, &ctx()));
        }
    }

    #[test]
    fn eigen_relation() {
        for v in [0.0, 0.5] {
            let p = QParams::new(0.5, v).unwrap();
            let g = LatticeGrid::new(p, -6, 20).unwrap();
            let t = BesselTable::build(&g, &ctx()).unwrap();
            for k in [-2, 0, 1, 2, 3] {
                let r = eigen_residual(&g, k, &t).unwrap();
                assert!(r < 1e-10, "v={v} k={k} residual {r}");
            }
        }
    }

    #[test]
    fn refuses_ranges_beyond_the_digit_ceiling() {
        let p = QParams::new(0.9, 0.5).unwrap();
        let err = BesselTable::build_range(p, -600, 20, &ctx()).unwrap_err();
        assert!(matches!(err, QError::PrecisionExhausted { .. }), "{err}");
    }

    #[test]
    fn cache_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let p = QParams::new(0.5, 0.5).unwrap();
        let g = LatticeGrid::new(p, -3, 6).unwrap();
        let a = BesselTable::load_or_build(&g, &ctx(), Some(dir.path())).unwrap();
        let path = cache_path(dir.path(), &p, -6, 12, 50);
        assert!(path.exists());
        let b = BesselTable::load_or_build(&g, &ctx(), Some(dir.path())).unwrap();
        assert_eq!(a.values, b.values);
        assert_eq!(to_f64(b.hp_at(-6).unwrap()), a.at(-6));
    }
}

//! q-Gauss kernel and the heat semigroup `P_t f = G(., t) * f`.

use serde::Serialize;

use crate::error::{QError, Result};
use crate::lattice::{jackson_integral, norm2, sup_norm, ExpWindow, GridFn, LatticeGrid};
use crate::precision::{hp, hp_abs, hp_powi, to_f64, PrecisionCtx};
use crate::qseries::{gauss_amplitude_at, gauss_amplitude_hp, hp_qpow, qexp, qexp_hp, QParams};
use crate::transform::{q_bessel_operator, TransformOp};
use crate::translation::{markov_check, ConvolutionOp, Kernel3, MarkovReport};

/// Largest `x^{-2}` at which a binary64 second difference still resolves the
/// heat residual.
pub const MAX_INV_X2: f64 = 1e6;

/// `G(x, t) = A(t) e(-q^{-2v} x^2 / t, q^2)` sampled on a grid.
#[derive(Debug, Clone)]
pub struct GaussKernel {
    pub t: f64,
    pub amplitude: f64,
    pub values: GridFn,
}

impl GaussKernel {
    pub fn new(t: f64, grid: LatticeGrid, ctx: &PrecisionCtx) -> Result<Self> {
        let p = grid.params;
        let amplitude = to_f64(&gauss_amplitude_hp(t, &p, ctx)?);
        let q2 = p.q * p.q;
        let s = p.q.powf(-2.0 * p.v) / t;
        let mut values = GridFn::zeros(grid);
        for n in grid.exps() {
            let x = grid.x(n);
            values.values[grid.idx(n)] = amplitude * qexp(-s * x * x, q2, ctx)?;
        }
        Ok(Self { t, amplitude, values })
    }

    /// `|c ||G||_1 - 1|`.
    pub fn mass_defect(&self, c: f64) -> f64 {
        (c * jackson_integral(&self.values) - 1.0).abs()
    }
}

/// `t = q^{2m}`.
pub fn lattice_time(p: &QParams, m: i32) -> f64 {
    p.q.powi(2 * m)
}

/// `y -> e(-t y^2, q^2)` on the grid.
pub fn heat_symbol(t: f64, grid: LatticeGrid, ctx: &PrecisionCtx) -> Result<GridFn> {
    let q2 = grid.params.q.powi(2);
    let mut f = GridFn::zeros(grid);
    for n in grid.exps() {
        let x = grid.x(n);
        f.values[grid.idx(n)] = qexp(-t * x * x, q2, ctx)?;
    }
    Ok(f)
}

/// `P_t f`.
pub fn heat_apply(f: &GridFn, t: f64, kernel: &Kernel3, ctx: &PrecisionCtx) -> Result<GridFn> {
    let g = GaussKernel::new(t, kernel.grid(), ctx)?;
    kernel.convolve(&g.values, f)
}

/// Closed-form kernel against the transform of the heat symbol, as
/// `max |F[e(-t y^2)] - G| / max |G|` over `window`.
pub fn gauss_transform_defect(op: &TransformOp, t: f64, window: &ExpWindow, ctx: &PrecisionCtx) -> Result<f64> {
    let g = GaussKernel::new(t, op.grid, ctx)?;
    let fe = op.forward(&heat_symbol(t, op.grid, ctx)?)?;
    let sup = window.iter().map(|n| g.values.at(n).abs()).fold(0.0, f64::max);
    let d = window
        .iter()
        .map(|n| (fe.at(n) - g.values.at(n)).abs())
        .fold(0.0, f64::max);
    Ok(d / sup)
}

/// `||F(P_t f) - e(-t x^2) Ff|| / ||Ff||`, both sides restricted to `window`.
pub fn spectral_defect(
    op: &TransformOp,
    kernel: &Kernel3,
    f: &GridFn,
    t: f64,
    window: &ExpWindow,
    ctx: &PrecisionCtx,
) -> Result<f64> {
    let u = heat_apply(f, t, kernel, ctx)?;
    let lhs = op.forward(&u)?;
    let ff = op.forward(f)?;
    let rhs = ff.mul(&heat_symbol(t, op.grid, ctx)?)?;
    let d = norm2(&lhs.sub(&rhs)?.restrict(window));
    Ok(d / norm2(&ff.restrict(window)))
}

/// Exponents inside `window` where the heat equation residual is taken: the
/// three-point stencil fits and `x^{-2} <= MAX_INV_X2`.
pub fn residual_window(grid: &LatticeGrid, window: &ExpWindow) -> ExpWindow {
    let inner = window.shrink(1).intersect(&grid.interior());
    let q = grid.params.q;
    let hi = (0.5 * MAX_INV_X2.log10() / (1.0 / q).log10()).floor() as i32;
    inner.intersect(&ExpWindow::new(inner.lo, hi))
}

/// Heat-equation check at one time.
#[derive(Debug, Clone, Serialize)]
pub struct HeatResidual {
    pub t: f64,
    /// max over the residual window of
    /// `|Delta u - (u(t) - u(q^2 t))/t| / (1 + |Delta u|)`.
    pub residual: f64,
    /// `|int u - int f| / (1 + |int f|)`.
    pub mass_defect: f64,
    pub window: ExpWindow,
}

/// Residual of `Delta_{q,v} u = (1-q^2) D_{q^2,t} u` for `u = P_t f`, with the
/// Jackson time derivative `(u(t) - u(q^2 t)) / ((1-q^2) t)`.
pub fn heat_residual(f: &GridFn, t: f64, kernel: &Kernel3, ctx: &PrecisionCtx) -> Result<HeatResidual> {
    let grid = kernel.grid();
    grid.check_same(&f.grid)?;
    let q2 = grid.params.q.powi(2);
    let u = heat_apply(f, t, kernel, ctx)?;
    let u_prev = heat_apply(f, q2 * t, kernel, ctx)?;
    let lap = q_bessel_operator(&u);
    let window = residual_window(&grid, &kernel.window);
    if window.is_empty() {
        return Err(QError::InvalidArgument(format!(
            "no residual points in kernel window {}",
            kernel.window
        )));
    }
    let residual = window
        .iter()
        .map(|n| {
            let dt = (u.at(n) - u_prev.at(n)) / t;
            (lap.at(n) - dt).abs() / (1.0 + lap.at(n).abs())
        })
        .fold(0.0, f64::max);
    let mf = jackson_integral(f);
    let mass_defect = (jackson_integral(&u) - mf).abs() / (1.0 + mf.abs());
    Ok(HeatResidual {
        t,
        residual,
        mass_defect,
        window,
    })
}

/// Markov axioms for `f -> f * G(., t)`.
pub fn heat_markov_check(
    t: f64,
    kernel: &Kernel3,
    probes: &[GridFn],
    min_kernel: f64,
    ctx: &PrecisionCtx,
) -> Result<MarkovReport> {
    let g = GaussKernel::new(t, kernel.grid(), ctx)?;
    let op = ConvolutionOp { kernel, rho: g.values };
    markov_check(&op, probes, min_kernel)
}

/// `||P_t P_s f - P_{t+s} f||_2 / ||f||_2` on the kernel window. Reported
/// only: the q-exponential has no addition law.
pub fn semigroup_defect(f: &GridFn, t: f64, s: f64, kernel: &Kernel3, ctx: &PrecisionCtx) -> Result<f64> {
    let ps = heat_apply(f, s, kernel, ctx)?;
    let pts = heat_apply(&ps, t, kernel, ctx)?;
    let direct = heat_apply(f, t + s, kernel, ctx)?;
    Ok(norm2(&pts.sub(&direct)?.restrict(&kernel.window)) / norm2(f))
}

/// Largest `|e(z) - e(q^2 z) - z e(z)| / |z e(z)|` over the sample points,
/// evaluated in software precision.
pub fn scalar_identity_defect(q: f64, zs: &[f64], ctx: &PrecisionCtx) -> Result<f64> {
    let bits = ctx.bits();
    let q2 = hp_qpow(q, 2.0, bits);
    let mut worst = 0.0f64;
    for &z in zs {
        let zh = hp(z, bits);
        let ez = qexp_hp(&zh, &q2, ctx)?;
        let ez2 = qexp_hp(&(&q2 * &zh), &q2, ctx)?;
        let rhs = &zh * &ez;
        let d = to_f64(&hp_abs(&(ez - ez2 - &rhs))) / to_f64(&hp_abs(&rhs));
        worst = worst.max(d);
    }
    Ok(worst)
}

/// Spread of `A(q^{2m}) q^{2m(v+1)}` over `ms`, relative to its first value.
pub fn amplitude_quasi_period_defect(p: &QParams, ms: &[i32], ctx: &PrecisionCtx) -> Result<f64> {
    let bits = ctx.bits();
    let q = p.q_hp(bits);
    let mut first = None;
    let mut worst = 0.0f64;
    for &m in ms {
        let t = hp_qpow(p.q, 2.0 * m as f64, bits);
        let a = gauss_amplitude_at(&t, p, ctx)?;
        let scaled = a * hp_powi(&q, 2 * m as i64) * hp_qpow(p.q, 2.0 * m as f64 * p.v, bits);
        match &first {
            None => first = Some(scaled),
            Some(f0) => {
                let d = to_f64(&hp_abs(&(&scaled - f0))) / to_f64(&hp_abs(f0));
                worst = worst.max(d);
            }
        }
    }
    Ok(worst)
}

/// Smallest value of a Gauss kernel relative to its sup.
pub fn gauss_min_ratio(g: &GaussKernel) -> f64 {
    let min = g.values.values.iter().copied().fold(f64::INFINITY, f64::min);
    min / sup_norm(&g.values)
}

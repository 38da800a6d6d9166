//! The full identity suite over a list of `(q, v)` cells.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::bessel::{decay_bound_check, eigen_residual, BesselTable};
use crate::error::{QError, Result};
use crate::heat::{
    amplitude_quasi_period_defect, gauss_min_ratio, gauss_transform_defect, heat_markov_check, heat_residual,
    lattice_time, scalar_identity_defect, semigroup_defect, spectral_defect, GaussKernel,
};
use crate::lattice::{jackson_integral, norm2, norm_p, ExpWindow, GridFn, LatticeGrid};
use crate::precision::PrecisionCtx;
use crate::probes::ProbeGen;
use crate::qseries::{qexp, qpoch_finite, qpoch_inf, QParams};
use crate::report::{CellReport, CellWindows, CheckEntry, CheckReport, Environment, GridInfo};
use crate::transform::TransformOp;
use crate::translation::{
    eigen_check, hypergroup_expansion_defect, markov_check, multiplier_defect, positivity_min, ConvolutionOp, Kernel3,
    KernelEval, Translation,
};

/// Tail tolerance for the transform interior window.
pub const INTERIOR_TOL: f64 = 1e-12;

/// Tail tolerance for inversion probes. A relative norm tail `e` leaves an
/// inversion residual near `sqrt(e)`, so this is the square of the target.
pub const INVERSION_TOL: f64 = 1e-20;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellSpec {
    pub q: f64,
    pub v: f64,
    #[serde(default)]
    pub n_lo: Option<i32>,
    #[serde(default)]
    pub n_hi: Option<i32>,
}

impl CellSpec {
    pub fn new(q: f64, v: f64) -> Self {
        Self {
            q,
            v,
            n_lo: None,
            n_hi: None,
        }
    }

    pub fn grid(&self) -> Result<LatticeGrid> {
        let p = QParams::new(self.q, self.v)?;
        let (lo, hi) = LatticeGrid::default_range(&p);
        LatticeGrid::new(p, self.n_lo.unwrap_or(lo), self.n_hi.unwrap_or(hi))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SuiteConfig {
    pub cells: Vec<CellSpec>,
    /// Caps the probe window at this many points around `x = 1`.
    pub window: Option<usize>,
    pub digits: u32,
    pub tail_tol: f64,
    pub seed: u64,
    /// Probes per cell for inversion and Plancherel.
    pub probes: usize,
    /// Product-formula pairs per cell.
    pub pairs: usize,
    /// Overrides keyed by entry name or by a dotted prefix of it.
    pub tolerances: BTreeMap<String, f64>,
    pub table_cache: Option<PathBuf>,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        let ctx = PrecisionCtx::default();
        Self {
            cells: vec![
                CellSpec::new(0.5, 0.0),
                CellSpec::new(0.5, 0.5),
                CellSpec::new(0.5, 1.5),
                CellSpec::new(0.8, 0.5),
            ],
            window: None,
            digits: ctx.work_digits,
            tail_tol: ctx.tail_tol,
            seed: 20240611,
            probes: 100,
            pairs: 20,
            tolerances: BTreeMap::new(),
            table_cache: None,
        }
    }
}

impl SuiteConfig {
    /// Every `(q, v)` in the product of the two lists on default grids.
    pub fn from_lists(qs: &[f64], vs: &[f64]) -> Self {
        let cells = qs
            .iter()
            .flat_map(|&q| vs.iter().map(move |&v| CellSpec::new(q, v)))
            .collect();
        Self {
            cells,
            ..Self::default()
        }
    }

    pub fn ctx(&self) -> Result<PrecisionCtx> {
        PrecisionCtx::new(self.digits, self.tail_tol)
    }

    pub fn validate(&self) -> Result<()> {
        self.ctx()?;
        if self.cells.is_empty() {
            return Err(QError::InvalidParams("no (q, v) cells configured".into()));
        }
        for c in &self.cells {
            c.grid()?;
        }
        for (k, &t) in &self.tolerances {
            if !(t >= 0.0) {
                return Err(QError::InvalidParams(format!("tolerance {k} must be nonnegative, got {t}")));
            }
        }
        if let Some(w) = self.window {
            if w < 3 {
                return Err(QError::InvalidParams(format!("window must hold at least 3 points, got {w}")));
            }
        }
        if self.probes == 0 || self.pairs == 0 {
            return Err(QError::InvalidParams("probe and pair counts must be positive".into()));
        }
        Ok(())
    }

    fn override_for(&self, name: &str) -> Option<f64> {
        // longest matching key wins
        self.tolerances
            .iter()
            .filter(|(k, _)| name == k.as_str() || name.starts_with(&format!("{k}.")))
            .max_by_key(|(k, _)| k.len())
            .map(|(_, &t)| t)
    }
}

/// Operators shared by the checks of one cell.
pub struct CellContext {
    pub grid: LatticeGrid,
    pub op: TransformOp,
    pub kernel: Kernel3,
    pub interior: ExpWindow,
    pub probe_window: ExpWindow,
    pub ctx: PrecisionCtx,
}

impl CellContext {
    pub fn build(spec: &CellSpec, cfg: &SuiteConfig) -> Result<Self> {
        let ctx = cfg.ctx()?;
        let grid = spec.grid()?;
        let table = Arc::new(BesselTable::load_or_build(&grid, &ctx, cfg.table_cache.as_deref())?);
        let op = TransformOp::new(grid, table.clone(), &ctx)?;
        let kernel = Kernel3::build(grid, table, &ctx)?;
        let interior = op.interior_window(INTERIOR_TOL, &ctx);
        let mut probe_window = interior.intersect(&kernel.window);
        if let Some(w) = cfg.window {
            probe_window = cap_window(&probe_window, w);
        }
        if probe_window.len() < 3 {
            return Err(QError::InvalidParams(format!(
                "probe window {probe_window} is too small; widen the grid"
            )));
        }
        Ok(Self {
            grid,
            op,
            kernel,
            interior,
            probe_window,
            ctx,
        })
    }
}

/// At most `width` points of `w`, kept as centred on exponent 0 as possible.
pub fn cap_window(w: &ExpWindow, width: usize) -> ExpWindow {
    if w.len() <= width {
        return *w;
    }
    let width = width as i32;
    let lo = (-(width / 2)).clamp(w.lo, w.hi - width + 1);
    ExpWindow::new(lo, lo + width - 1)
}

/// `rho(0) = 1`, `rho(q^{+-1}) = 1/2`, scaled to `c int rho = 1`.
pub fn normalized_bump(op: &TransformOp) -> GridFn {
    let g = op.grid;
    let rho = GridFn::from_exp_fn(g, |n| match n.abs() {
        0 => 1.0,
        1 => 0.5,
        _ => 0.0,
    });
    let mass = op.c * jackson_integral(&rho);
    rho.scale(1.0 / mass)
}

/// Five evenly spread exponents of `w`.
pub fn spread_points(w: &ExpWindow) -> Vec<i32> {
    let span = (w.hi - w.lo) as f64;
    let mut pts: Vec<i32> = (0..5).map(|k| w.lo + (span * k as f64 / 4.0).round() as i32).collect();
    pts.dedup();
    pts
}

fn fmt_exp(base: &str, e: i32) -> String {
    if e == 0 {
        "1".into()
    } else if e == 1 {
        base.into()
    } else {
        format!("{base}^{e}")
    }
}

struct Entries(Vec<CheckEntry>);

impl Entries {
    fn gate(&mut self, name: impl Into<String>, anchor: &str, residual: f64, tol: f64) {
        self.0.push(CheckEntry::gated(name, anchor, residual, tol));
    }
    fn report(&mut self, name: impl Into<String>, anchor: &str, residual: f64) {
        self.0.push(CheckEntry::reported(name, anchor, residual));
    }
    /// Gated when `gated`, reported otherwise.
    fn maybe(&mut self, gated: bool, name: impl Into<String>, anchor: &str, residual: f64, tol: f64) {
        if gated {
            self.gate(name, anchor, residual, tol)
        } else {
            self.report(name, anchor, residual)
        }
    }
}

fn qseries_checks(cx: &CellContext, out: &mut Entries) -> Result<()> {
    let p = cx.grid.params;
    let ctx = &cx.ctx;
    let q2 = p.q * p.q;
    let mut worst = 0.0f64;
    for a in [p.a(), -1.0, 0.3, -q2] {
        let full = qpoch_inf(a, q2, ctx)?;
        for k in [1usize, 5, 10] {
            let split = qpoch_finite(a, q2, k) * qpoch_inf(a * q2.powi(k as i32), q2, ctx)?;
            worst = worst.max((split - full).abs() / full.abs());
        }
    }
    out.gate(
        "qseries.pochhammer_split",
        "(a;q)_inf = (a;q)_k (aq^k;q)_inf",
        worst,
        1e-13,
    );
    let mut worst = 0.0f64;
    for z in [-50.0, -3.0, -0.5, 0.2, 0.9] {
        let e = qexp(z, q2, ctx)?;
        worst = worst.max((e * qpoch_inf(z, q2, ctx)? - 1.0).abs());
    }
    out.gate("qseries.exp_inverse", "e(z) (z;q)_inf = 1", worst, 1e-13);
    Ok(())
}

fn bessel_checks(cx: &CellContext, out: &mut Entries) -> Result<()> {
    let table = &cx.op.table;
    let dr = decay_bound_check(table)?;
    out.gate(
        "bessel.decay_bound",
        "|j_v(q^n)| / bound(n) <= 1 on every tabulated n",
        (dr.max_ratio() - 1.0).max(0.0),
        1e-12,
    );
    for k in [-2, 0, 1, 3] {
        let r = eigen_residual(&cx.grid, k, table)?;
        out.gate(
            format!("bessel.eigen.lambda={}", fmt_exp("q", k)),
            "Delta j_v(lambda x) = -lambda^2 j_v(lambda x)",
            r,
            1e-9,
        );
    }
    Ok(())
}

fn transform_checks(cx: &CellContext, cfg: &SuiteConfig, out: &mut Entries) -> Result<()> {
    let op = &cx.op;
    let mut gen = ProbeGen::new(cfg.seed);
    let support = op.interior_window(INVERSION_TOL, &cx.ctx);
    let probes = gen.mixed(cx.grid, &support, cfg.probes);
    let (mut inv, mut plan) = (0.0f64, 0.0f64);
    for f in &probes {
        inv = inv.max(op.inversion_residual(f)?);
        plan = plan.max(op.plancherel_defect(f)?);
    }
    out.gate("transform.inversion", "F(Ff) = f", inv, 1e-9);
    out.gate("transform.plancherel", "||Ff|| = ||f||", plan, 1e-9);
    let orth = op.orthogonality_matrix(&cx.interior)?;
    out.gate(
        "transform.orthogonality.offdiag",
        "<psi_x, psi_y> = 0 for x != y",
        orth.off_diag_max,
        1e-9,
    );
    out.gate(
        "transform.orthogonality.diag",
        "<psi_x, psi_x> = 1/((1-q) x^{2v+2})",
        orth.diag_rel_max,
        1e-9,
    );
    Ok(())
}

fn translation_checks(cx: &CellContext, cfg: &SuiteConfig, out: &mut Entries) -> Result<f64> {
    let (op, k, pw) = (&cx.op, &cx.kernel, cx.probe_window);
    let positive_v = cx.grid.params.v >= 0.0;

    out.gate(
        "translation.kernel.symmetry",
        "D invariant under argument permutations",
        if k.is_totally_symmetric() { 0.0 } else { 1.0 },
        0.0,
    );
    out.gate(
        "translation.kernel.row_sum",
        "int D(x,y,z) z^{2v+1} d_qz = 1",
        k.row_sum_defect(),
        1e-8,
    );
    out.gate(
        "translation.kernel.projection",
        "int D(x,y,z) j_v(xt) x^{2v+1} d_qx = j_v(yt) j_v(zt)",
        k.projection_defect(&ExpWindow::new(-2, 4)),
        1e-8,
    );

    let pos = positivity_min(&k.eval, &pw, &cx.ctx)?;
    out.maybe(
        positive_v,
        "translation.positivity",
        "min D >= 0",
        (-pos.min_kernel).max(0.0),
        1e-10,
    );

    let mut gen = ProbeGen::new(cfg.seed ^ 0x7f4a_7c15);
    let probes = gen.mixed(cx.grid, &pw, 10);
    for x in spread_points(&pw) {
        let r = markov_check(&Translation { kernel: k, x_exp: x }, &probes, pos.min_kernel)?;
        out.maybe(
            positive_v,
            format!("translation.markov.T_x.x={}", fmt_exp("q", x)),
            "T_x is a Markov operator",
            r.max_defect(),
            1e-8,
        );
    }
    let bump = normalized_bump(op);
    let gauss = GaussKernel::new(1.0, cx.grid, &cx.ctx)?;
    for (label, rho) in [("bump", &bump), ("gauss", &gauss.values)] {
        let r = markov_check(
            &ConvolutionOp {
                kernel: k,
                rho: rho.clone(),
            },
            &probes,
            pos.min_kernel,
        )?;
        out.maybe(
            positive_v,
            format!("translation.markov.convolution.{label}"),
            "f -> f * rho is a Markov operator",
            r.max_defect(),
            1e-8,
        );
    }

    // f scaled to ||f||_2 = 1 and g to c ||g||_1 = 1, so ||Ff Fg|| <= 1.
    let (mut prod, mut comm) = (0.0f64, 0.0f64);
    for i in 0..cfg.pairs {
        let f = if i % 2 == 0 { gen.dense(cx.grid, &pw) } else { gen.sparse_bump(cx.grid, &pw) };
        let g = if i % 2 == 0 { gen.sparse_bump(cx.grid, &pw) } else { gen.dense(cx.grid, &pw) };
        let f = f.scale(1.0 / norm2(&f));
        let g = g.scale(1.0 / (op.c * norm_p(&g, 1.0)?));
        let fg = k.convolve(&f, &g)?;
        let gf = k.convolve(&g, &f)?;
        let lhs = op.forward(&fg)?;
        let rhs = op.forward(&f)?.mul(&op.forward(&g)?)?;
        prod = prod.max(norm2(&lhs.sub(&rhs)?));
        comm = comm.max(norm2(&fg.sub(&gf)?) / norm2(&fg));
    }
    out.gate("translation.product_formula", "F(f * g) = Ff Fg", prod, 1e-8);
    out.gate("translation.commutativity", "f * g = g * f", comm, 1e-8);

    for n in -2..=4 {
        let r = eigen_check(k, op, n, 0)?;
        out.gate(
            format!("translation.eigen.n={n}"),
            "T_x f_n = (f_n(x)/f_n(0)) f_n",
            r,
            1e-8,
        );
    }
    let ns: Vec<i32> = (-2..=4).collect();
    for (label, rho) in [("bump", &bump), ("gauss", &gauss.values)] {
        out.gate(
            format!("translation.multiplier.{label}"),
            "f_n * rho = c_n f_n with c_n = F rho(q^n)",
            multiplier_defect(k, op, rho, &ns)?,
            1e-8,
        );
    }

    let g = cx.grid;
    let full = hypergroup_expansion_defect(k, op, &pw, &g.window())?;
    let d14 = hypergroup_expansion_defect(k, op, &pw, &ExpWindow::new(g.n_lo, g.n_lo + 13))?;
    let d20 = hypergroup_expansion_defect(k, op, &pw, &ExpWindow::new(g.n_lo, g.n_lo + 19))?;
    out.gate(
        "translation.hypergroup",
        "D(x,y,z) = sum_n f_n(x) f_n(y) f_n(z) / f_n(0)",
        full,
        1e-7,
    );
    out.gate(
        "translation.hypergroup.growth",
        "truncated expansion error does not grow from 14 to 20 terms",
        (d20 - d14).max(0.0),
        0.0,
    );
    Ok(pos.min_kernel)
}

fn heat_checks(cx: &CellContext, cfg: &SuiteConfig, min_kernel: f64, out: &mut Entries) -> Result<()> {
    let (op, k, pw, ctx) = (&cx.op, &cx.kernel, cx.probe_window, &cx.ctx);
    let p = cx.grid.params;
    let positive_v = p.v >= 0.0;

    let zs: Vec<f64> = (0..20).map(|i| -0.01 * 1.6f64.powi(i)).collect();
    out.gate(
        "heat.scalar_identity",
        "e(z) - e(q^2 z) = z e(z)",
        scalar_identity_defect(p.q, &zs, ctx)?,
        1e-12,
    );
    let ms: Vec<i32> = (-3..=3).collect();
    out.gate(
        "heat.amplitude_quasi_period",
        "A(q^{2m}) q^{2m(v+1)} independent of m",
        amplitude_quasi_period_defect(&p, &ms, ctx)?,
        1e-10,
    );

    let mut gen = ProbeGen::new(cfg.seed ^ 0x51ed_270b);
    let mut fs = vec![normalized_bump(op)];
    fs.push(gen.dense(cx.grid, &pw));
    fs.push(gen.sparse_bump(cx.grid, &pw));
    let probes = gen.mixed(cx.grid, &pw, 10);

    for m in [2, 1, 0, -1] {
        let t = lattice_time(&p, m);
        let tl = fmt_exp("q", 2 * m);
        let g = GaussKernel::new(t, cx.grid, ctx)?;
        out.gate(
            format!("heat.gauss.positive.t={tl}"),
            "G(x,t) > 0",
            if gauss_min_ratio(&g) > 0.0 { 0.0 } else { 1.0 },
            0.0,
        );
        out.gate(
            format!("heat.gauss.mass.t={tl}"),
            "c ||G(.,t)||_1 = 1",
            g.mass_defect(op.c),
            1e-8,
        );
        out.gate(
            format!("heat.gauss.transform.t={tl}"),
            "F[e(-t y^2)] = G(., t)",
            gauss_transform_defect(op, t, &cx.interior, ctx)?,
            1e-8,
        );
        let (mut spec, mut res, mut mass) = (0.0f64, 0.0f64, 0.0f64);
        for f in &fs {
            spec = spec.max(spectral_defect(op, k, f, t, &cx.interior, ctx)?);
            let r = heat_residual(f, t, k, ctx)?;
            res = res.max(r.residual);
            mass = mass.max(r.mass_defect);
        }
        out.gate(
            format!("heat.spectral.t={tl}"),
            "F(P_t f) = e(-t x^2) Ff",
            spec,
            1e-8,
        );
        out.gate(
            format!("heat.equation.t={tl}"),
            "Delta u = (1-q^2) D_{q^2,t} u",
            res,
            1e-7,
        );
        out.gate(format!("heat.mass.t={tl}"), "int P_t f = int f", mass, 1e-8);
        let mk = heat_markov_check(t, k, &probes, min_kernel, ctx)?;
        out.maybe(
            positive_v,
            format!("heat.markov.t={tl}"),
            "P_t is a Markov operator",
            mk.max_defect(),
            1e-8,
        );
        out.report(
            format!("heat.semigroup.t={tl}"),
            "P_t P_t f vs P_{2t} f (no addition law; reported only)",
            semigroup_defect(&fs[0], t, t, k, ctx)?,
        );
    }
    Ok(())
}

/// Every check for one cell.
pub fn run_cell(spec: &CellSpec, cfg: &SuiteConfig) -> Result<CellReport> {
    let cx = CellContext::build(spec, cfg)?;
    let mut out = Entries(Vec::new());
    qseries_checks(&cx, &mut out)?;
    bessel_checks(&cx, &mut out)?;
    transform_checks(&cx, cfg, &mut out)?;
    let min_kernel = translation_checks(&cx, cfg, &mut out)?;
    heat_checks(&cx, cfg, min_kernel, &mut out)?;
    let mut entries = out.0;
    for e in &mut entries {
        if let Some(t) = cfg.override_for(&e.name) {
            e.retolerate(t);
        }
    }
    Ok(CellReport {
        q: spec.q,
        v: spec.v,
        grid: GridInfo {
            n_lo: cx.grid.n_lo,
            n_hi: cx.grid.n_hi,
        },
        windows: CellWindows {
            interior: cx.interior,
            kernel: cx.kernel.window,
            probe: cx.probe_window,
        },
        entries,
    })
}

pub fn run_suite(cfg: &SuiteConfig) -> Result<CheckReport> {
    cfg.validate()?;
    let start = Instant::now();
    let cells = cfg.cells.iter().map(|c| run_cell(c, cfg)).collect::<Result<Vec<_>>>()?;
    let env = Environment {
        version: env!("CARGO_PKG_VERSION").into(),
        digits: cfg.digits,
        tail_tol: cfg.tail_tol,
        seed: cfg.seed,
        probes: cfg.probes,
        runtime: start.elapsed().as_secs_f64(),
    };
    Ok(CheckReport::new(env, cells))
}

/// Whether rows touching the low or high end of `w` leak kernel mass.
fn leaking_ends(eval: &KernelEval, w: &ExpWindow) -> (bool, bool) {
    let g = eval.grid;
    let (mut low, mut high) = (false, false);
    for a in w.iter() {
        for b in a..=w.hi {
            if !g.contains(a) || !g.contains(b) {
                low |= a < g.n_lo;
                high |= b > g.n_hi;
                continue;
            }
            if eval.leaked_mass(a, b) >= Kernel3::WINDOW_TOL {
                // mass escapes on the side nearer the grid end
                if a - g.n_lo <= g.n_hi - b {
                    low = true;
                } else {
                    high = true;
                }
            }
        }
    }
    (low, high)
}

/// One row of a positivity scan.
#[derive(Debug, Clone, Serialize)]
pub struct ScanRow {
    pub q: f64,
    pub v: f64,
    pub window: ExpWindow,
    pub min_kernel: f64,
    pub argmin: (i32, i32, i32),
    /// Positivity is only asserted for `v >= 0`.
    pub gated: bool,
}

impl ScanRow {
    pub fn pass(&self, tol: f64) -> bool {
        !self.gated || self.min_kernel >= -tol
    }
}

/// `min D` over a `width`-point window around `x = 1`. The default grid is
/// widened until no row of the window loses kernel mass off the grid.
pub fn scan_cell(q: f64, v: f64, width: usize, ctx: &PrecisionCtx, cache: Option<&Path>) -> Result<ScanRow> {
    let mut grid = CellSpec::new(q, v).grid()?;
    let w = cap_window(&ExpWindow::new(-(width as i32), width as i32), width);
    let mut attempts = 0;
    let eval = loop {
        let table = Arc::new(BesselTable::load_or_build(&grid, ctx, cache)?);
        let eval = KernelEval::new(grid, table, ctx)?;
        let (low, high) = leaking_ends(&eval, &w);
        if !low && !high {
            break eval;
        }
        attempts += 1;
        if attempts > 12 {
            return Err(QError::InvalidParams(format!(
                "window {w} is not supported by any grid tried at q={q}, v={v}; use a smaller window"
            )));
        }
        let n_lo = if low { grid.n_lo.min(w.lo) - 2 } else { grid.n_lo };
        let n_hi = if high { grid.n_hi + grid.n_hi / 4 + 2 } else { grid.n_hi };
        grid = LatticeGrid::new(grid.params, n_lo, n_hi)?;
    };
    let rep = positivity_min(&eval, &w, ctx)?;
    Ok(ScanRow {
        q,
        v,
        window: w,
        min_kernel: rep.min_kernel,
        argmin: rep.argmin,
        gated: v >= 0.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn window_cap_centres_on_one() {
        let w = ExpWindow::new(-6, 20);
        assert_eq!(cap_window(&w, 8), ExpWindow::new(-4, 3));
        assert_eq!(cap_window(&ExpWindow::new(2, 30), 5), ExpWindow::new(2, 6));
        assert_eq!(cap_window(&w, 100), w);
    }

    #[test]
    fn override_prefers_longest_key() {
        let mut cfg = SuiteConfig::default();
        cfg.tolerances.insert("heat".into(), 1.0);
        cfg.tolerances.insert("heat.mass".into(), 2.0);
        assert_eq!(cfg.override_for("heat.mass.t=1"), Some(2.0));
        assert_eq!(cfg.override_for("heat.spectral.t=1"), Some(1.0));
        assert_eq!(cfg.override_for("heatwave"), None);
        assert_eq!(cfg.override_for("transform.inversion"), None);
    }

    #[test]
    fn config_validation() {
        let mut cfg = SuiteConfig::default();
        assert!(cfg.validate().is_ok());
        cfg.cells.push(CellSpec::new(1.5, 0.0));
        assert!(matches!(cfg.validate(), Err(QError::InvalidParams(_))));
        let cfg = SuiteConfig {
            digits: 3,
            ..SuiteConfig::default()
        };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn single_cell_passes() {
        let cfg = SuiteConfig {
            cells: vec![CellSpec::new(0.5, 0.5)],
            probes: 10,
            pairs: 4,
            ..SuiteConfig::default()
        };
        let r = run_suite(&cfg).unwrap();
        let bad: Vec<_> = r.failures().iter().map(|(_, e)| e.name.clone()).collect();
        assert!(r.pass, "{bad:?}");
    }
}

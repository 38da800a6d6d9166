//! The q-Bessel Fourier transform
//! `Ff(q^n) = c (1-q) sum_m q^{m(2v+2)} f(q^m) j_v(q^{n+m})` as a finite
//! operator on grid functions, with its inversion, Plancherel, orthogonality
//! and multiplier identities.

use std::sync::Arc;

use serde::Serialize;

use crate::bessel::{decay_constant, BesselTable};
use crate::error::{QError, Result};
use crate::lattice::{norm2, sup_norm, ExpWindow, GridFn, LatticeGrid};
use crate::precision::{compensated_sum, dot, PrecisionCtx};
use crate::qseries::c_qv;

const TINY: f64 = 1e-300;

#[derive(Debug, Clone)]
pub struct TransformOp {
    pub grid: LatticeGrid,
    pub table: Arc<BesselTable>,
    pub c: f64,
    weights: Vec<f64>,
}

impl TransformOp {
    pub fn new(grid: LatticeGrid, table: Arc<BesselTable>, ctx: &PrecisionCtx) -> Result<Self> {
        if table.params != grid.params
            || !table.contains(2 * grid.n_lo)
            || !table.contains(2 * grid.n_hi)
        {
            return Err(QError::GridMismatch(format!(
                "table [{}, {}] does not cover [{}, {}] for this grid",
                table.n_min,
                table.n_max,
                2 * grid.n_lo,
                2 * grid.n_hi
            )));
        }
        Ok(Self {
            c: c_qv(&grid.params, ctx),
            weights: grid.weights(),
            grid,
            table,
        })
    }

    /// Builds the Bessel table as well.
    pub fn build(grid: LatticeGrid, ctx: &PrecisionCtx) -> Result<Self> {
        let table = Arc::new(BesselTable::build(&grid, ctx)?);
        Self::new(grid, table, ctx)
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Symmetric part `c j_v(q^{n+m})` of the matrix.
    pub fn kernel(&self, n: i32, m: i32) -> f64 {
        self.c * self.table.at(n + m)
    }

    /// Matrix entry `c (1-q) q^{m(2v+2)} j_v(q^{n+m})`.
    pub fn entry(&self, n: i32, m: i32) -> f64 {
        self.kernel(n, m) * self.weights[self.grid.idx(m)]
    }

    /// Dense matrix, row-major over grid exponents.
    pub fn matrix(&self) -> Vec<f64> {
        let g = self.grid;
        g.exps()
            .flat_map(|n| g.exps().map(move |m| (n, m)))
            .map(|(n, m)| self.entry(n, m))
            .collect()
    }

    /// `j_v(q^{n+m})` for `m` across the grid, as a contiguous slice.
    fn row(&self, n: i32) -> &[f64] {
        let start = (n + self.grid.n_lo - self.table.n_min) as usize;
        &self.table.values[start..start + self.grid.len()]
    }

    pub fn forward(&self, f: &GridFn) -> Result<GridFn> {
        self.grid.check_same(&f.grid)?;
        let wf: Vec<f64> = self.weights.iter().zip(&f.values).map(|(w, v)| w * v).collect();
        Ok(GridFn::from_exp_fn(self.grid, |n| self.c * dot(self.row(n), &wf)))
    }

    /// `psi_x(t) = c j_v(x t)` for `x = q^{x_exp}`.
    pub fn basis_fn(&self, x_exp: i32) -> Result<GridFn> {
        self.check_on_grid(x_exp)?;
        Ok(GridFn::from_exp_fn(self.grid, |n| self.kernel(x_exp, n)))
    }

    /// Exact `||psi_x||^2 = x^{-2(v+1)}/(1-q)` on the infinite lattice.
    pub fn basis_norm_sq(&self, x_exp: i32) -> f64 {
        1.0 / self.grid.weight(x_exp)
    }

    fn check_on_grid(&self, n: i32) -> Result<()> {
        if self.grid.contains(n) {
            Ok(())
        } else {
            Err(QError::OffWindow {
                exp: n,
                lo: self.grid.n_lo,
                hi: self.grid.n_hi,
            })
        }
    }

    /// `||F(Ff) - f||_2 / ||f||_2`.
    pub fn inversion_residual(&self, f: &GridFn) -> Result<f64> {
        let ff = self.forward(&self.forward(f)?)?;
        Ok(norm2(&ff.sub(f)?) / norm2(f).max(TINY))
    }

    /// `| ||Ff||_2 - ||f||_2 | / ||f||_2`.
    pub fn plancherel_defect(&self, f: &GridFn) -> Result<f64> {
        let nf = norm2(f);
        Ok((norm2(&self.forward(f)?) - nf).abs() / nf.max(TINY))
    }

    /// Expand `f` in the normalized basis `psi_x/||psi_x||` over every grid
    /// point, resum, and return the relative L2 error.
    pub fn basis_resum_residual(&self, f: &GridFn) -> Result<f64> {
        let ff = self.forward(f)?; // Ff(x) = <f, psi_x>
        let g = self.grid;
        let mut acc = vec![Vec::with_capacity(g.len()); g.len()];
        for x in g.exps() {
            let coeff = ff.at(x) / self.basis_norm_sq(x);
            for t in g.exps() {
                acc[g.idx(t)].push(coeff * self.kernel(x, t));
            }
        }
        let resum = GridFn::new(g, acc.into_iter().map(compensated_sum).collect())?;
        Ok(norm2(&resum.sub(f)?) / norm2(f).max(TINY))
    }

    /// Normalized Gram defects of `{psi_x}` for `x` in `window`.
    pub fn orthogonality_matrix(&self, window: &ExpWindow) -> Result<OrthogonalityReport> {
        let g = self.grid;
        let w = window.intersect(&g.window());
        let basis: Vec<GridFn> = w.iter().map(|x| self.basis_fn(x)).collect::<Result<_>>()?;
        let v1 = g.params.v + 1.0;
        let q = g.params.q;
        let mut rep = OrthogonalityReport {
            window: w,
            off_diag_max: 0.0,
            diag_rel_max: 0.0,
            unit_diag: f64::NAN,
        };
        for (i, x) in w.iter().enumerate() {
            for (j, y) in w.iter().enumerate().skip(i) {
                let gram = crate::lattice::inner(&basis[i], &basis[j])?;
                if x == y {
                    let rel = (gram / self.basis_norm_sq(x) - 1.0).abs();
                    rep.diag_rel_max = rep.diag_rel_max.max(rel);
                    if x == 0 {
                        rep.unit_diag = gram;
                    }
                } else {
                    let scale = (1.0 - q) * q.powf((x + y) as f64 * v1);
                    rep.off_diag_max = rep.off_diag_max.max(gram.abs() * scale);
                }
            }
        }
        Ok(rep)
    }

    /// Exponents whose Gram-diagonal truncation tail, bounded through the
    /// decay bound, is below `tol` relative to `||psi_x||^2`.
    pub fn interior_window(&self, tol: f64, ctx: &PrecisionCtx) -> ExpWindow {
        let tails: Vec<(i32, f64)> = self
            .grid
            .exps()
            .map(|x| (x, gram_tail_bound(&self.grid, self.c, x, ctx)))
            .collect();
        let good: Vec<i32> = tails.iter().filter(|(_, t)| *t < tol).map(|(x, _)| *x).collect();
        // the good set is an interval around x = 1 for every grid we use; take
        // the run containing 0 to be safe
        let (mut lo, mut hi) = (0, 0);
        if !good.contains(&0) {
            return ExpWindow::new(1, 0);
        }
        while good.contains(&(lo - 1)) {
            lo -= 1;
        }
        while good.contains(&(hi + 1)) {
            hi += 1;
        }
        ExpWindow::new(lo, hi)
    }

    /// `Delta_{q,v} f` on interior exponents; boundary entries are 0.
    pub fn q_bessel_operator(&self, f: &GridFn) -> GridFn {
        q_bessel_operator(f)
    }

    /// `||F[Delta f] + x^2 Ff||_2 / ||x^2 Ff||_2`. `f` must vanish within two
    /// points of either grid end.
    pub fn delta_multiplier_defect(&self, f: &GridFn) -> Result<f64> {
        self.grid.check_same(&f.grid)?;
        if let Some(s) = f.support() {
            if s.lo < self.grid.n_lo + 2 || s.hi > self.grid.n_hi - 2 {
                return Err(QError::InvalidArgument(format!(
                    "support {s} needs a margin of 2 inside [{}, {}]",
                    self.grid.n_lo, self.grid.n_hi
                )));
            }
        } else {
            return Ok(0.0);
        }
        let lhs = self.forward(&q_bessel_operator(f))?;
        let ff = self.forward(f)?;
        let x2ff = GridFn::from_exp_fn(self.grid, |n| self.grid.x(n).powi(2) * ff.at(n));
        Ok(norm2(&lhs.add(&x2ff)?) / norm2(&x2ff).max(TINY))
    }

    /// For `f` scaled to `||f||_1 = 1`: `sup|Ff| / (c sup|j_v|)` (at most 1) and
    /// `|Ff(q^{n_lo})| / sup|Ff|` (small: the transform vanishes at infinity).
    pub fn l1_bound_check(&self, f: &GridFn) -> Result<(f64, f64)> {
        let l1 = crate::lattice::norm_p(f, 1.0)?;
        let f = f.scale(1.0 / l1.max(TINY));
        let ff = self.forward(&f)?;
        let sup = sup_norm(&ff);
        let jmax = self.table.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        Ok((sup / (self.c * jmax), ff.at(self.grid.n_lo).abs() / sup.max(TINY)))
    }
}

/// `Delta_{q,v} f(x) = x^{-2} [f(x/q) - (1+q^{2v}) f(x) + q^{2v} f(qx)]` on
/// interior exponents; 0 on the two end points.
pub fn q_bessel_operator(f: &GridFn) -> GridFn {
    let g = f.grid;
    let q2v = g.params.q.powf(2.0 * g.params.v);
    let inner = g.interior();
    GridFn::from_exp_fn(g, |n| {
        if !inner.contains(n) {
            return 0.0;
        }
        let b = f.at(n - 1) - (1.0 + q2v) * f.at(n) + q2v * f.at(n + 1);
        b / g.x(n).powi(2)
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct OrthogonalityReport {
    pub window: ExpWindow,
    /// max over x != y of `|<psi_x, psi_y>| (1-q) x^{v+1} y^{v+1}`.
    pub off_diag_max: f64,
    /// max over x of `|<psi_x, psi_x> (1-q) x^{2(v+1)} - 1|`.
    pub diag_rel_max: f64,
    /// `<psi_1, psi_1>` when `x = 1` lies in the window.
    pub unit_diag: f64,
}

/// Bound on the part of `||psi_x||^2` lost by truncating the lattice,
/// relative to `||psi_x||^2`, using `|j_v(q^k)| <= bound(k)`.
pub fn gram_tail_bound(grid: &LatticeGrid, c: f64, x: i32, ctx: &PrecisionCtx) -> f64 {
    let p = grid.params;
    let lq = p.q.ln();
    let cb = decay_constant(&p, ctx);
    let we = p.weight_exp();
    // log of (1-q) x^{2v+2} c^2 w_t bound(x+t)^2
    let log_term = |t: i32| {
        let k = (x + t) as f64;
        let lb = if k >= 0.0 {
            cb.ln()
        } else {
            cb.ln() + (k * k - (2.0 * p.v + 1.0) * k) * lq
        };
        2.0 * (1.0 - p.q).ln() + 2.0 * c.ln() + (x as f64 + t as f64) * we * lq + 2.0 * lb
    };
    let mut total = 0.0f64;
    // upper tail: geometric beyond n_hi
    let mut t = grid.n_hi + 1;
    loop {
        let term = log_term(t).exp();
        total += term;
        if term < 1e-40 * total.max(1e-300) || t > grid.n_hi + 100_000 {
            break;
        }
        t += 1;
    }
    // lower tail: grows with the weight until the decay bound takes over
    let mut t = grid.n_lo - 1;
    let mut peak = f64::NEG_INFINITY;
    loop {
        let lt = log_term(t);
        peak = peak.max(lt);
        total += lt.exp();
        if lt < peak - 100.0 || t < grid.n_lo - 100_000 {
            break;
        }
        t -= 1;
    }
    total
}

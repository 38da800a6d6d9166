//! q-translation and q-convolution through the kernel
//! `D(x,y,z) = c^2 (1-q) sum_s q^{s(2v+2)} j_v(x q^s) j_v(y q^s) j_v(z q^s)`,
//! positivity of that kernel, Markov-operator checks, the eigenfunction and
//! multiplier calculus, and the hypergroup expansion.

use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::bessel::BesselTable;
use crate::error::{QError, Result};
use crate::lattice::{inner, jackson_integral, norm2, sup_norm, ExpWindow, GridFn, LatticeGrid};
use crate::precision::{hp, hp_abs, hp_powi, to_f64, Hp, PrecisionCtx};
use crate::qseries::c_qv;
use crate::transform::TransformOp;

/// How far past each grid end the leaked row mass is measured.
const LEAK_EXTENT: i32 = 12;

/// Entry-wise evaluator of `D` from a Bessel table. The `s`-sum runs over
/// every shift for which all three table lookups exist; outside the table
/// `j_v` is either super-exponentially small or multiplied by a negligible
/// weight.
#[derive(Debug, Clone)]
pub struct KernelEval {
    pub grid: LatticeGrid,
    pub table: Arc<BesselTable>,
    pub c: f64,
    ctx: PrecisionCtx,
    s_min: i32,
    /// `q^{s(2v+2)}` for `s >= s_min`.
    wprime: Vec<f64>,
    /// `c^2 (1-q)`.
    pref: f64,
}

impl KernelEval {
    pub fn new(grid: LatticeGrid, table: Arc<BesselTable>, ctx: &PrecisionCtx) -> Result<Self> {
        if table.params != grid.params {
            return Err(QError::GridMismatch("table and grid parameters differ".into()));
        }
        let c = c_qv(&grid.params, ctx);
        let s_min = table.n_min - grid.n_hi - LEAK_EXTENT;
        let s_max = table.n_max - grid.n_lo + LEAK_EXTENT;
        let we = grid.params.weight_exp();
        let wprime = (s_min..=s_max).map(|s| grid.params.q.powf(s as f64 * we)).collect();
        Ok(Self {
            pref: c * c * (1.0 - grid.params.q),
            grid,
            table,
            c,
            ctx: *ctx,
            s_min,
            wprime,
        })
    }

    /// Shifts `s` with `a+s, b+s, c+s` all inside the table.
    pub fn s_range(&self, a: i32, b: i32, c: i32) -> (i32, i32) {
        let lo = a.min(b).min(c);
        let hi = a.max(b).max(c);
        (self.table.n_min - lo, self.table.n_max - hi)
    }

    fn wp(&self, s: i32) -> f64 {
        self.wprime[(s - self.s_min) as usize]
    }

    /// `D(q^a, q^b, q^c)` with arguments sorted first, so every permutation
    /// gives the same bits.
    pub fn d(&self, a: i32, b: i32, c: i32) -> f64 {
        self.d_scaled(a, b, c).0
    }

    /// `D` together with `c^2 (1-q) sum_s |term_s|`, the scale against which
    /// its rounding error is measured.
    pub fn d_scaled(&self, a: i32, b: i32, c: i32) -> (f64, f64) {
        let mut t = [a, b, c];
        t.sort_unstable();
        let [a, b, c] = t;
        let (lo, hi) = self.s_range(a, b, c);
        let j = &self.table.values;
        let base = self.table.n_min;
        let (mut sum, mut comp, mut scale) = (0.0f64, 0.0f64, 0.0f64);
        for s in lo..=hi {
            let term = self.wp(s)
                * j[(a + s - base) as usize]
                * j[(b + s - base) as usize]
                * j[(c + s - base) as usize];
            let tsum = sum + term;
            comp += if sum.abs() >= term.abs() {
                (sum - tsum) + term
            } else {
                (term - tsum) + sum
            };
            sum = tsum;
            scale += term.abs();
        }
        (self.pref * (sum + comp), self.pref * scale)
    }

    /// `D` summed in software precision from the software-precision table.
    pub fn d_hp(&self, a: i32, b: i32, c: i32, consts: &HpConsts) -> Result<(Hp, Hp)> {
        let mut t = [a, b, c];
        t.sort_unstable();
        let [a, b, c] = t;
        let (lo, hi) = self.s_range(a, b, c);
        let j = self.table.hp_values()?;
        let base = self.table.n_min;
        let mut sum = hp(0.0, consts.bits);
        let mut scale = hp(0.0, consts.bits);
        let mut w = hp_powi(&consts.qa, lo as i64);
        for s in lo..=hi {
            let term = &w
                * &j[(a + s - base) as usize]
                * &j[(b + s - base) as usize]
                * &j[(c + s - base) as usize];
            scale += hp_abs(&term);
            sum += term;
            w = &w * &consts.qa;
        }
        Ok((&consts.pref * sum, &consts.pref * scale))
    }

    pub fn hp_consts(&self) -> HpConsts {
        let bits = self.ctx.bits();
        let p = &self.grid.params;
        let c = crate::qseries::c_qv_hp(p, &self.ctx);
        HpConsts {
            bits,
            qa: p.a_hp(bits),
            pref: &c * &c * (hp(1.0, bits) - hp(p.q, bits)),
        }
    }

    /// Mass of `z -> (1-q) q^{z(2v+2)} |D(a,b,z)|` lying within
    /// `LEAK_EXTENT` points outside the grid.
    pub fn leaked_mass(&self, a: i32, b: i32) -> f64 {
        let g = &self.grid;
        let outside = (g.n_lo - LEAK_EXTENT..g.n_lo).chain(g.n_hi + 1..=g.n_hi + LEAK_EXTENT);
        outside.map(|z| g.weight(z) * self.d(a, b, z).abs()).sum()
    }

    /// Largest interval around `x = 1` on which every row `(a, b)` leaks
    /// less than `tol` of its mass off the grid.
    pub fn trusted_window(&self, tol: f64) -> ExpWindow {
        let g = self.grid;
        let n = g.len();
        let leak: Vec<f64> = (0..n * n)
            .into_par_iter()
            .map(|k| {
                let (i, j) = (k / n, k % n);
                if j < i {
                    0.0
                } else {
                    self.leaked_mass(g.n_lo + i as i32, g.n_lo + j as i32)
                }
            })
            .collect();
        let bad = |a: i32, b: i32| {
            let (i, j) = (g.idx(a.min(b)), g.idx(a.max(b)));
            leak[i * n + j] >= tol
        };
        let (mut lo, mut hi) = (g.n_lo, g.n_hi);
        // Shrink whichever end carries the worst row until none leaks.
        loop {
            let worst_lo = (lo..=hi).any(|b| bad(lo, b));
            let worst_hi = (lo..=hi).any(|b| bad(hi, b));
            if !worst_lo && !worst_hi {
                break;
            }
            if worst_lo {
                lo += 1;
            }
            if worst_hi {
                hi -= 1;
            }
            if lo > hi {
                break;
            }
        }
        ExpWindow::new(lo, hi)
    }
}

/// Software-precision constants shared by `D` evaluations.
#[derive(Debug, Clone)]
pub struct HpConsts {
    bits: usize,
    qa: Hp,
    pref: Hp,
}

/// `D` tabulated on the whole grid cube, with the window on which row masses
/// are complete.
#[derive(Debug, Clone)]
pub struct Kernel3 {
    pub eval: KernelEval,
    pub window: ExpWindow,
    values: Vec<f64>,
}

impl Kernel3 {
    /// Leak tolerance defining the trusted window.
    pub const WINDOW_TOL: f64 = 1e-12;

    pub fn build(grid: LatticeGrid, table: Arc<BesselTable>, ctx: &PrecisionCtx) -> Result<Self> {
        let eval = KernelEval::new(grid, table, ctx)?;
        let window = eval.trusted_window(Self::WINDOW_TOL);
        if window.is_empty() {
            return Err(QError::InvalidParams(format!(
                "grid [{}, {}] is too small to hold a trusted kernel window",
                grid.n_lo, grid.n_hi
            )));
        }
        let n = grid.len();
        let lo = grid.n_lo;
        // unique sorted triples, then mirrored into all permutations
        let triples: Vec<(usize, usize, usize)> = (0..n)
            .flat_map(|i| (i..n).flat_map(move |j| (j..n).map(move |k| (i, j, k))))
            .collect();
        let vals: Vec<f64> = triples
            .par_iter()
            .map(|&(i, j, k)| eval.d(lo + i as i32, lo + j as i32, lo + k as i32))
            .collect();
        let mut values = vec![0.0; n * n * n];
        for (&(i, j, k), &v) in triples.iter().zip(&vals) {
            for (a, b, c) in [(i, j, k), (i, k, j), (j, i, k), (j, k, i), (k, i, j), (k, j, i)] {
                values[(a * n + b) * n + c] = v;
            }
        }
        Ok(Self { eval, window, values })
    }

    pub fn grid(&self) -> LatticeGrid {
        self.eval.grid
    }

    pub fn c(&self) -> f64 {
        self.eval.c
    }

    pub fn at(&self, a: i32, b: i32, c: i32) -> f64 {
        let g = self.grid();
        let n = g.len();
        self.values[(g.idx(a) * n + g.idx(b)) * n + g.idx(c)]
    }

    fn slab(&self, a: i32, b: i32) -> &[f64] {
        let g = self.grid();
        let n = g.len();
        let start = (g.idx(a) * n + g.idx(b)) * n;
        &self.values[start..start + n]
    }

    fn check_window(&self, x: i32) -> Result<()> {
        if self.window.contains(x) {
            Ok(())
        } else {
            Err(QError::OffWindow {
                exp: x,
                lo: self.window.lo,
                hi: self.window.hi,
            })
        }
    }

    /// `(1-q) sum_z q^{z(2v+2)} D(q^a, q^b, q^z)`.
    pub fn row_sum(&self, a: i32, b: i32) -> f64 {
        let g = self.grid();
        crate::precision::dot(self.slab(a, b), &g.weights())
    }

    /// Largest `|row_sum - 1|` over the trusted window.
    pub fn row_sum_defect(&self) -> f64 {
        let w = self.window;
        w.iter()
            .flat_map(|a| w.iter().map(move |b| (a, b)))
            .map(|(a, b)| (self.row_sum(a, b) - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// True when every permutation of every triple holds identical bits.
    pub fn is_totally_symmetric(&self) -> bool {
        let g = self.grid();
        g.exps().all(|a| {
            g.exps().all(|b| {
                g.exps().all(|c| {
                    let v = self.at(a, b, c).to_bits();
                    [
                        self.at(a, c, b),
                        self.at(b, a, c),
                        self.at(b, c, a),
                        self.at(c, a, b),
                        self.at(c, b, a),
                    ]
                    .iter()
                    .all(|w| w.to_bits() == v)
                })
            })
        })
    }

    /// Largest `|(1-q) sum_a q^{a(2v+2)} D(a,b,c) j_v(q^{a+t}) - j_v(q^{c+t}) j_v(q^{b+t})|`
    /// for `b, c` in the trusted window and `t` in `freqs`. At `t -> +inf`
    /// this is the row-sum identity, which fixes the normalization.
    pub fn projection_defect(&self, freqs: &ExpWindow) -> f64 {
        let g = self.grid();
        let w = self.window;
        let tab = &self.eval.table;
        let weights = g.weights();
        let mut worst = 0.0f64;
        for t in freqs.iter() {
            let jt: Vec<f64> = g
                .exps()
                .zip(&weights)
                .map(|(a, wa)| wa * tab.at(a + t))
                .collect();
            for b in w.iter() {
                for c in w.iter() {
                    let lhs = crate::precision::dot(self.slab(b, c), &jt);
                    let rhs = tab.at(c + t) * tab.at(b + t);
                    worst = worst.max((lhs - rhs).abs());
                }
            }
        }
        worst
    }

    /// `T_x f(y) = (1-q) sum_z q^{z(2v+2)} f(q^z) D(x, y, q^z)`.
    pub fn translate(&self, f: &GridFn, x_exp: i32) -> Result<GridFn> {
        self.check_window(x_exp)?;
        let g = self.grid();
        g.check_same(&f.grid)?;
        let wf: Vec<f64> = g.weights().iter().zip(&f.values).map(|(w, v)| w * v).collect();
        Ok(GridFn::from_exp_fn(g, |y| crate::precision::dot(self.slab(x_exp, y), &wf)))
    }

    /// `f * g (x) = c int T_x f(y) g(y) y^{2v+1} d_q y`.
    pub fn convolve(&self, f: &GridFn, g: &GridFn) -> Result<GridFn> {
        let grid = self.grid();
        grid.check_same(&f.grid)?;
        grid.check_same(&g.grid)?;
        let w = grid.weights();
        let wf: Vec<f64> = w.iter().zip(&f.values).map(|(a, b)| a * b).collect();
        let wg: Vec<f64> = w.iter().zip(&g.values).map(|(a, b)| a * b).collect();
        let c = self.c();
        let values: Vec<f64> = grid
            .exps()
            .collect::<Vec<_>>()
            .par_iter()
            .map(|&x| {
                let per_y: Vec<f64> = grid
                    .exps()
                    .zip(&wg)
                    .map(|(y, wgy)| wgy * crate::precision::dot(self.slab(x, y), &wf))
                    .collect();
                c * crate::precision::compensated_sum(per_y)
            })
            .collect();
        GridFn::new(grid, values)
    }
}

/// Smallest `D` over a window cube.
#[derive(Debug, Clone, Serialize)]
pub struct PositivityReport {
    pub window: ExpWindow,
    pub min_kernel: f64,
    pub argmin: (i32, i32, i32),
    /// Entries whose binary64 sign was not certain and were re-summed in
    /// software precision.
    pub hp_evaluations: usize,
    /// Entries below `-10^{-(work_digits-5)}` times their term scale.
    pub below_tolerance: usize,
}

/// Minimum of `D` over `window^3`. Entries are screened in binary64; any
/// entry whose sign is not certified by the rounding bound is re-summed in
/// software precision.
pub fn positivity_min(eval: &KernelEval, window: &ExpWindow, ctx: &PrecisionCtx) -> Result<PositivityReport> {
    if window.is_empty() {
        return Err(QError::InvalidArgument("empty positivity window".into()));
    }
    let triples: Vec<(i32, i32, i32)> = window
        .iter()
        .flat_map(|a| (a..=window.hi).flat_map(move |b| (b..=window.hi).map(move |c| (a, b, c))))
        .collect();
    let consts = eval.hp_consts();
    let rel_tol = 10f64.powi(-(ctx.work_digits as i32 - 5));
    let results: Vec<Result<(f64, bool, bool)>> = triples
        .par_iter()
        .map(|&(a, b, c)| {
            let (d, scale) = eval.d_scaled(a, b, c);
            let (lo, hi) = eval.s_range(a, b, c);
            let err = (hi - lo + 8) as f64 * f64::EPSILON * scale;
            if d - err > 0.0 {
                return Ok((d, false, false));
            }
            let (dh, sh) = eval.d_hp(a, b, c, &consts)?;
            let v = to_f64(&dh);
            let below = v < -rel_tol * to_f64(&sh);
            Ok((v, true, below))
        })
        .collect();
    let mut rep = PositivityReport {
        window: *window,
        min_kernel: f64::INFINITY,
        argmin: (window.lo, window.lo, window.lo),
        hp_evaluations: 0,
        below_tolerance: 0,
    };
    for (r, t) in results.into_iter().zip(triples) {
        let (v, used_hp, below) = r?;
        rep.hp_evaluations += used_hp as usize;
        rep.below_tolerance += below as usize;
        if v < rep.min_kernel {
            rep.min_kernel = v;
            rep.argmin = t;
        }
    }
    Ok(rep)
}

/// Linear operator on grid functions with a window on which it is trusted.
pub trait GridOperator: Sync {
    fn grid(&self) -> LatticeGrid;
    fn window(&self) -> ExpWindow;
    fn apply(&self, f: &GridFn) -> Result<GridFn>;
}

/// `f -> T_{q,x} f`.
pub struct Translation<'a> {
    pub kernel: &'a Kernel3,
    pub x_exp: i32,
}

impl GridOperator for Translation<'_> {
    fn grid(&self) -> LatticeGrid {
        self.kernel.grid()
    }
    fn window(&self) -> ExpWindow {
        self.kernel.window
    }
    fn apply(&self, f: &GridFn) -> Result<GridFn> {
        self.kernel.translate(f, self.x_exp)
    }
}

/// `f -> f * rho`.
pub struct ConvolutionOp<'a> {
    pub kernel: &'a Kernel3,
    pub rho: GridFn,
}

impl GridOperator for ConvolutionOp<'_> {
    fn grid(&self) -> LatticeGrid {
        self.kernel.grid()
    }
    fn window(&self) -> ExpWindow {
        self.kernel.window
    }
    fn apply(&self, f: &GridFn) -> Result<GridFn> {
        self.kernel.convolve(f, &self.rho)
    }
}

/// Defects of the Markov axioms; all are 0 for an exact Markov operator.
#[derive(Debug, Clone, Default, Serialize)]
pub struct MarkovReport {
    pub min_kernel: f64,
    /// max over the window of `|K1 - 1|`.
    pub unit_defect: f64,
    /// max over probes of `|int Kf - int f| / (1 + |int f|)`.
    pub mass_defect: f64,
    /// max over probe pairs of `|<Kf,g> - <f,Kg>| / (||f|| ||g||)`.
    pub symmetry_defect: f64,
    /// max over probes of `max(0, ||Kf||_2/||f||_2 - 1)`.
    pub contraction_defect: f64,
    /// max over nonnegative probes and the window of `max(0, (Kf)^2 - K(f^2))`,
    /// relative to `||f||_inf^2`.
    pub jensen_defect: f64,
    /// max over probes of `max(0, ||Kf||_inf/||f||_inf - 1)` on the window.
    pub sup_defect: f64,
    /// max over nonnegative probes of `max(0, -min Kf)/||f||_inf`.
    pub positivity_defect: f64,
}

impl MarkovReport {
    pub fn max_defect(&self) -> f64 {
        [
            self.unit_defect,
            self.mass_defect,
            self.symmetry_defect,
            self.contraction_defect,
            self.jensen_defect,
            self.sup_defect,
            self.positivity_defect,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

fn window_sup(f: &GridFn, w: &ExpWindow) -> f64 {
    w.iter().map(|n| f.at(n).abs()).fold(0.0, f64::max)
}

/// Run the Markov axioms on `op` with the given probes (which should be
/// supported inside the operator window).
pub fn markov_check(op: &dyn GridOperator, probes: &[GridFn], min_kernel: f64) -> Result<MarkovReport> {
    let g = op.grid();
    let w = op.window();
    let mut rep = MarkovReport {
        min_kernel,
        ..Default::default()
    };
    let k1 = op.apply(&GridFn::constant(g, 1.0))?;
    rep.unit_defect = w.iter().map(|n| (k1.at(n) - 1.0).abs()).fold(0.0, f64::max);

    let images: Vec<GridFn> = probes.iter().map(|f| op.apply(f)).collect::<Result<_>>()?;
    for (f, kf) in probes.iter().zip(&images) {
        let nf = norm2(f);
        if nf == 0.0 {
            continue;
        }
        let mf = jackson_integral(f);
        rep.mass_defect = rep
            .mass_defect
            .max((jackson_integral(kf) - mf).abs() / (1.0 + mf.abs()));
        rep.contraction_defect = rep.contraction_defect.max((norm2(kf) / nf - 1.0).max(0.0));
        let sf = sup_norm(f);
        rep.sup_defect = rep.sup_defect.max((window_sup(kf, &w) / sf - 1.0).max(0.0));
        if f.values.iter().all(|&v| v >= 0.0) {
            let kf2 = op.apply(&f.map(|v| v * v))?;
            for n in w.iter() {
                let j = (kf.at(n).powi(2) - kf2.at(n)) / (sf * sf);
                rep.jensen_defect = rep.jensen_defect.max(j.max(0.0));
            }
            let min = kf.values.iter().copied().fold(f64::INFINITY, f64::min);
            rep.positivity_defect = rep.positivity_defect.max((-min / sf).max(0.0));
        }
    }
    for (i, f) in probes.iter().enumerate() {
        for (j, h) in probes.iter().enumerate().skip(i + 1) {
            let scale = norm2(f) * norm2(h);
            if scale == 0.0 {
                continue;
            }
            let d = (inner(&images[i], h)? - inner(f, &images[j])?).abs() / scale;
            rep.symmetry_defect = rep.symmetry_defect.max(d);
        }
    }
    Ok(rep)
}

/// `f_n = psi_{q^n} / ||psi_{q^n}||` on the grid, and `f_n(0) = c/||psi_{q^n}||`.
pub fn normalized_basis(op: &TransformOp, n: i32) -> Result<(GridFn, f64)> {
    let norm = op.basis_norm_sq(n).sqrt();
    let psi = op.basis_fn(n)?;
    Ok((psi.scale(1.0 / norm), op.c / norm))
}

/// `||T_x f_n - (f_n(x)/f_n(0)) f_n||_2` over the trusted window.
pub fn eigen_check(kernel: &Kernel3, op: &TransformOp, n: i32, x_exp: i32) -> Result<f64> {
    let (fn_, f0) = normalized_basis(op, n)?;
    let lambda = fn_.at(x_exp) / f0;
    let tf = kernel.translate(&fn_, x_exp)?;
    let diff = tf.sub(&fn_.scale(lambda))?.restrict(&kernel.window);
    Ok(norm2(&diff))
}

/// Multiplier sequence `c_n = c int f_n(y)/f_n(0) rho(y) y^{2v+1} d_q y = F rho(q^n)`
/// of a probability density `rho`.
pub fn multiplier_coeffs(rho: &GridFn, op: &TransformOp) -> Result<GridFn> {
    let mass = op.c * jackson_integral(rho);
    let min = rho.values.iter().copied().fold(f64::INFINITY, f64::min);
    if min < 0.0 || (mass - 1.0).abs() > 1e-10 {
        return Err(QError::NotProbability { mass, min });
    }
    op.forward(rho)
}

/// Largest `||f_n * rho - c_n f_n||_2` over `ns`, restricted to the trusted
/// window.
pub fn multiplier_defect(kernel: &Kernel3, op: &TransformOp, rho: &GridFn, ns: &[i32]) -> Result<f64> {
    let cn = multiplier_coeffs(rho, op)?;
    let mut worst = 0.0f64;
    for &n in ns {
        let (f, _) = normalized_basis(op, n)?;
        let conv = kernel.convolve(&f, rho)?;
        let diff = conv.sub(&f.scale(cn.at(n)))?.restrict(&kernel.window);
        worst = worst.max(norm2(&diff));
    }
    Ok(worst)
}

/// Max over `cube^3` of `|D(x,y,z) - sum_{n in basis} f_n(x) f_n(y) f_n(z)/f_n(0)|`,
/// relative to `max |D|` on the cube. The expansion side is built from the
/// transform's basis functions, independently of the kernel code.
pub fn hypergroup_expansion_defect(
    kernel: &Kernel3,
    op: &TransformOp,
    cube: &ExpWindow,
    basis: &ExpWindow,
) -> Result<f64> {
    let fns: Vec<(GridFn, f64)> = basis
        .iter()
        .map(|n| normalized_basis(op, n))
        .collect::<Result<_>>()?;
    let mut dmax = 0.0f64;
    let mut worst = 0.0f64;
    for x in cube.iter() {
        for y in cube.iter() {
            for z in cube.iter() {
                let d = kernel.at(x, y, z);
                let terms = fns.iter().map(|(f, f0)| f.at(x) * f.at(y) * f.at(z) / f0);
                let e = crate::precision::compensated_sum(terms);
                dmax = dmax.max(d.abs());
                worst = worst.max((d - e).abs());
            }
        }
    }
    Ok(worst / dmax.max(f64::MIN_POSITIVE))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qseries::QParams;

    struct Setup {
        op: TransformOp,
        kernel: Kernel3,
    }

    fn setup(q: f64, v: f64) -> Setup {
        let ctx = PrecisionCtx::default();
        let p = QParams::new(q, v).unwrap();
        let grid = LatticeGrid::with_defaults(p).unwrap();
        let op = TransformOp::build(grid, &ctx).unwrap();
        let kernel = Kernel3::build(grid, op.table.clone(), &ctx).unwrap();
        Setup { op, kernel }
    }

    fn bump(g: LatticeGrid, center: i32) -> GridFn {
        GridFn::from_exp_fn(g, |n| match (n - center).abs() {
            0 => 1.0,
            1 => 0.5,
            _ => 0.0,
        })
    }

    #[test]
    fn kernel_identities() {
        let s = setup(0.5, 0.5);
        let k = &s.kernel;
        assert!(k.window.len() > 20, "{}", k.window);
        assert!(k.is_totally_symmetric());
        assert!(k.row_sum_defect() < 1e-8, "{}", k.row_sum_defect());
        let freqs = ExpWindow::new(-2, 4);
        assert!(k.projection_defect(&freqs) < 1e-8, "{}", k.projection_defect(&freqs));
    }

    #[test]
    fn translation_examples() {
        let s = setup(0.5, 0.5);
        let k = &s.kernel;
        let g = k.grid();
        let one = GridFn::constant(g, 1.0);
        let t1 = k.translate(&one, 0).unwrap();
        for y in k.window.iter() {
            assert!((t1.at(y) - 1.0).abs() < 1e-8);
        }
        // delta at a reduces to D(x, y, a)
        let a = 1;
        let d = crate::lattice::delta_at(&g, a).unwrap();
        let td = k.translate(&d, 0).unwrap();
        for y in k.window.iter() {
            let want = k.at(0, y, a);
            assert!((td.at(y) - want).abs() <= 1e-12 * want.abs().max(1e-300) + 1e-300);
        }
        assert!(matches!(k.translate(&one, g.n_lo), Err(QError::OffWindow { .. })));
    }

    #[test]
    fn positivity_screen() {
        let s = setup(0.5, 0.5);
        let ctx = PrecisionCtx::default();
        let w = ExpWindow::new(s.kernel.window.lo, s.kernel.window.lo + 9);
        let r = positivity_min(&s.kernel.eval, &w, &ctx).unwrap();
        assert!(r.min_kernel >= -1e-10, "{r:?}");
        assert_eq!(r.below_tolerance, 0);
    }

    #[test]
    fn convolution_is_commutative_and_kills_zero() {
        let s = setup(0.5, 0.0);
        let g = s.kernel.grid();
        let f = bump(g, 0);
        let h = bump(g, 2).scale(0.3).add(&bump(g, -1)).unwrap();
        let fh = s.kernel.convolve(&f, &h).unwrap();
        let hf = s.kernel.convolve(&h, &f).unwrap();
        assert!(norm2(&fh.sub(&hf).unwrap()) <= 1e-8 * norm2(&fh));
        let z = s.kernel.convolve(&f, &GridFn::zeros(g)).unwrap();
        assert!(z.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn multiplier_of_point_mass() {
        let s = setup(0.5, 0.5);
        let g = s.kernel.grid();
        let rho = crate::lattice::delta_at(&g, 0).unwrap().scale(1.0 / s.op.c);
        let cn = multiplier_coeffs(&rho, &s.op).unwrap();
        for n in -2..=4 {
            let want = s.op.table.at(n);
            assert!((cn.at(n) - want).abs() < 1e-12 * (1.0 + want.abs()));
        }
        assert!(matches!(
            multiplier_coeffs(&rho.scale(2.0), &s.op),
            Err(QError::NotProbability { .. })
        ));
    }
}

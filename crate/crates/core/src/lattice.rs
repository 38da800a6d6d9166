//! Truncated q-lattice, even functions sampled on it, the weighted Jackson
//! integral, norms and the discrete delta.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{QError, Result};
use crate::precision::compensated_sum;
use crate::qseries::QParams;

/// Points `x_n = q^n` for `n_lo <= n <= n_hi`, stored by exponent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatticeGrid {
    pub params: QParams,
    pub n_lo: i32,
    pub n_hi: i32,
}

/// Inclusive range of lattice exponents.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExpWindow {
    pub lo: i32,
    pub hi: i32,
}

impl ExpWindow {
    pub fn new(lo: i32, hi: i32) -> Self {
        Self { lo, hi }
    }

    pub fn len(&self) -> usize {
        if self.hi < self.lo {
            0
        } else {
            (self.hi - self.lo + 1) as usize
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn contains(&self, n: i32) -> bool {
        self.lo <= n && n <= self.hi
    }

    pub fn iter(&self) -> std::ops::RangeInclusive<i32> {
        self.lo..=self.hi
    }

    pub fn intersect(&self, other: &ExpWindow) -> ExpWindow {
        ExpWindow::new(self.lo.max(other.lo), self.hi.min(other.hi))
    }

    /// Shrink by `margin` on both ends.
    pub fn shrink(&self, margin: i32) -> ExpWindow {
        ExpWindow::new(self.lo + margin, self.hi - margin)
    }
}

impl std::fmt::Display for ExpWindow {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "[{}, {}]", self.lo, self.hi)
    }
}

impl LatticeGrid {
    pub const MIN_POINTS: i32 = 8;

    pub fn new(params: QParams, n_lo: i32, n_hi: i32) -> Result<Self> {
        if !(n_lo < 0 && 0 < n_hi) {
            return Err(QError::InvalidParams(format!(
                "grid must straddle x = 1 (n_lo < 0 < n_hi), got [{n_lo}, {n_hi}]"
            )));
        }
        if n_hi - n_lo + 1 < Self::MIN_POINTS {
            return Err(QError::InvalidParams(format!(
                "grid needs at least {} points, got {}",
                Self::MIN_POINTS,
                n_hi - n_lo + 1
            )));
        }
        Ok(Self { params, n_lo, n_hi })
    }

    /// Default exponent range for `params`: the weight tail `q^{n(2v+2)}` and
    /// the super-exponential decay of `j_v` at large `x` both fall below
    /// roughly 1e-12 at the ends.
    pub fn default_range(params: &QParams) -> (i32, i32) {
        let q = params.q;
        if q == 0.5 && (0.0..=2.0).contains(&params.v) {
            return (-10, 40);
        }
        if q == 0.8 && (0.0..=2.0).contains(&params.v) {
            return (-20, 120);
        }
        let l = (1.0 / q).log10();
        let n_hi = (12.0 / ((params.v + 1.0).min(1.0) * l)).ceil() as i32;
        let n_lo = -((30.0 / l).sqrt().ceil() as i32);
        (n_lo.min(-1), n_hi.max(7 - n_lo.min(-1)))
    }

    pub fn with_defaults(params: QParams) -> Result<Self> {
        let (lo, hi) = Self::default_range(&params);
        Self::new(params, lo, hi)
    }

    pub fn len(&self) -> usize {
        (self.n_hi - self.n_lo + 1) as usize
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn window(&self) -> ExpWindow {
        ExpWindow::new(self.n_lo, self.n_hi)
    }

    /// Interior exponents, where `f(x/q)` and `f(qx)` are both on the grid.
    pub fn interior(&self) -> ExpWindow {
        self.window().shrink(1)
    }

    pub fn exps(&self) -> std::ops::RangeInclusive<i32> {
        self.n_lo..=self.n_hi
    }

    pub fn contains(&self, n: i32) -> bool {
        self.n_lo <= n && n <= self.n_hi
    }

    pub fn idx(&self, n: i32) -> usize {
        debug_assert!(self.contains(n));
        (n - self.n_lo) as usize
    }

    pub fn x(&self, n: i32) -> f64 {
        self.params.q.powi(n)
    }

    /// Jackson weight `(1-q) q^{n(2v+2)}` of the point `q^n`.
    pub fn weight(&self, n: i32) -> f64 {
        (1.0 - self.params.q) * self.params.q.powf(n as f64 * self.params.weight_exp())
    }

    pub fn weights(&self) -> Vec<f64> {
        self.exps().map(|n| self.weight(n)).collect()
    }

    /// Exponent of the grid point equal to `x` (to 1e-12 relative).
    pub fn locate(&self, x: f64) -> Result<i32> {
        if x > 0.0 && x.is_finite() {
            let n = (x.ln() / self.params.q.ln()).round() as i32;
            if self.contains(n) && rel_close(self.x(n), x, 1e-12) {
                return Ok(n);
            }
        }
        Err(QError::OffGrid { x })
    }

    pub fn check_same(&self, other: &LatticeGrid) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(QError::GridMismatch(format!(
                "grid (q={}, v={}, [{}, {}]) vs (q={}, v={}, [{}, {}])",
                self.params.q,
                self.params.v,
                self.n_lo,
                self.n_hi,
                other.params.q,
                other.params.v,
                other.n_lo,
                other.n_hi
            )))
        }
    }
}

fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs())
}

/// Even function sampled on the positive half of a grid; entry `k` holds
/// `f(q^{n_lo+k})`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridFn {
    pub grid: LatticeGrid,
    pub values: Vec<f64>,
}

impl GridFn {
    pub fn new(grid: LatticeGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(QError::GridMismatch(format!(
                "{} values for a grid of {} points",
                values.len(),
                grid.len()
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: LatticeGrid) -> Self {
        Self {
            grid,
            values: vec![0.0; grid.len()],
        }
    }

    pub fn constant(grid: LatticeGrid, c: f64) -> Self {
        Self {
            grid,
            values: vec![c; grid.len()],
        }
    }

    /// Sample `f(n)` at every exponent.
    pub fn from_exp_fn(grid: LatticeGrid, f: impl Fn(i32) -> f64) -> Self {
        Self {
            grid,
            values: grid.exps().map(f).collect(),
        }
    }

    /// Indicator of the point `q^m`.
    pub fn indicator(grid: LatticeGrid, m: i32) -> Result<Self> {
        let mut f = Self::zeros(grid);
        f.set(m, 1.0)?;
        Ok(f)
    }

    pub fn at(&self, n: i32) -> f64 {
        self.values[self.grid.idx(n)]
    }

    pub fn get(&self, n: i32) -> Option<f64> {
        self.grid.contains(n).then(|| self.at(n))
    }

    pub fn set(&mut self, n: i32, value: f64) -> Result<()> {
        if !self.grid.contains(n) {
            return Err(QError::OffWindow {
                exp: n,
                lo: self.grid.n_lo,
                hi: self.grid.n_hi,
            });
        }
        let k = self.grid.idx(n);
        self.values[k] = value;
        Ok(())
    }

    pub fn iter(&self) -> impl Iterator<Item = (i32, f64)> + '_ {
        self.grid.exps().zip(self.values.iter().copied())
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            grid: self.grid,
            values: self.values.iter().map(|&x| f(x)).collect(),
        }
    }

    pub fn scale(&self, a: f64) -> Self {
        self.map(|x| a * x)
    }

    fn zip_with(&self, other: &GridFn, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        self.grid.check_same(&other.grid)?;
        Ok(Self {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn add(&self, other: &GridFn) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &GridFn) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    /// Pointwise product.
    pub fn mul(&self, other: &GridFn) -> Result<Self> {
        self.zip_with(other, |a, b| a * b)
    }

    /// Smallest window holding every nonzero value, if any.
    pub fn support(&self) -> Option<ExpWindow> {
        let nz: Vec<i32> = self.iter().filter(|(_, v)| *v != 0.0).map(|(n, _)| n).collect();
        Some(ExpWindow::new(*nz.first()?, *nz.last()?))
    }

    /// Zero every value outside `w`.
    pub fn restrict(&self, w: &ExpWindow) -> Self {
        Self::from_exp_fn(self.grid, |n| if w.contains(n) { self.at(n) } else { 0.0 })
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }

    /// Columns `n,x,value`, 17 significant digits.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["n", "x", "value"])?;
        for (n, v) in self.iter() {
            wr.write_record([
                n.to_string(),
                format!("{:.16e}", self.grid.x(n)),
                format!("{v:.16e}"),
            ])?;
        }
        wr.flush()?;
        Ok(())
    }

    pub fn load_csv(path: impl AsRef<Path>, grid: LatticeGrid) -> Result<Self> {
        Self::read_csv(std::fs::File::open(path)?, grid)
    }

    /// Inverse of [`GridFn::write_csv`]. Every grid exponent must appear once
    /// and `x` must equal `q^n` to 1e-12 relative.
    pub fn read_csv<R: Read>(r: R, grid: LatticeGrid) -> Result<Self> {
        let mut rd = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(r);
        let headers = rd.headers()?.clone();
        if headers.is_empty() {
            return Err(QError::Parse("empty CSV input".into()));
        }
        let col = |name: &str| {
            headers
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| QError::Parse(format!("missing column `{name}`")))
        };
        let (cn, cx, cv) = (col("n")?, col("x")?, col("value")?);
        let mut values = vec![None; grid.len()];
        for (line, rec) in rd.records().enumerate() {
            let rec = rec?;
            let field = |c: usize| {
                rec.get(c)
                    .ok_or_else(|| QError::Parse(format!("row {}: too few fields", line + 2)))
            };
            let n: i32 = field(cn)?
                .parse()
                .map_err(|_| QError::Parse(format!("row {}: bad exponent", line + 2)))?;
            let x: f64 = field(cx)?
                .parse()
                .map_err(|_| QError::Parse(format!("row {}: bad x", line + 2)))?;
            let v: f64 = field(cv)?
                .parse()
                .map_err(|_| QError::Parse(format!("row {}: bad value", line + 2)))?;
            if !grid.contains(n) {
                return Err(QError::GridMismatch(format!(
                    "exponent {n} is outside the grid [{}, {}]",
                    grid.n_lo, grid.n_hi
                )));
            }
            if !rel_close(grid.x(n), x, 1e-12) {
                return Err(QError::GridMismatch(format!(
                    "row {}: x={x} but q^{n}={}",
                    line + 2,
                    grid.x(n)
                )));
            }
            let slot = &mut values[grid.idx(n)];
            if slot.is_some() {
                return Err(QError::Parse(format!("exponent {n} appears twice")));
            }
            *slot = Some(v);
        }
        if values.iter().all(Option::is_none) {
            return Err(QError::Parse("CSV has no data rows".into()));
        }
        let values = values
            .into_iter()
            .zip(grid.exps())
            .map(|(v, n)| v.ok_or_else(|| QError::GridMismatch(format!("exponent {n} missing"))))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { grid, values })
    }
}

/// `(1-q) sum_n q^{n(2v+2)} f(q^n)`.
pub fn jackson_integral(f: &GridFn) -> f64 {
    let g = &f.grid;
    compensated_sum(f.iter().map(|(n, v)| g.weight(n) * v))
}

/// `<f, g> = int f g t^{2v+1} d_q t`.
pub fn inner(f: &GridFn, g: &GridFn) -> Result<f64> {
    f.grid.check_same(&g.grid)?;
    let grid = &f.grid;
    Ok(compensated_sum(
        grid.exps()
            .zip(f.values.iter().zip(&g.values))
            .map(|(n, (a, b))| grid.weight(n) * a * b),
    ))
}

pub fn norm_p(f: &GridFn, p: f64) -> Result<f64> {
    if !(p >= 1.0) {
        return Err(QError::InvalidArgument(format!("norm exponent must be >= 1, got {p}")));
    }
    let s = jackson_integral(&f.map(|x| x.abs().powf(p)));
    Ok(s.powf(1.0 / p))
}

/// `||f||_{q,2,v}`.
pub fn norm2(f: &GridFn) -> f64 {
    jackson_integral(&f.map(|x| x * x)).sqrt()
}

pub fn sup_norm(f: &GridFn) -> f64 {
    f.values.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Value of the discrete delta `delta_q(x, x) = 1/((1-q) x^{2(v+1)})` at `x = q^m`.
pub fn delta_value(grid: &LatticeGrid, m: i32) -> f64 {
    1.0 / grid.weight(m)
}

/// Discrete delta at the grid point `x`: reproduces `f(x)` under the
/// weighted Jackson integral.
pub fn delta_fn(grid: &LatticeGrid, x: f64) -> Result<GridFn> {
    let m = grid.locate(x)?;
    delta_at(grid, m)
}

pub fn delta_at(grid: &LatticeGrid, m: i32) -> Result<GridFn> {
    let mut f = GridFn::zeros(*grid);
    f.set(m, delta_value(grid, m))?;
    Ok(f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn grid(q: f64, v: f64) -> LatticeGrid {
        LatticeGrid::with_defaults(QParams::new(q, v).unwrap()).unwrap()
    }

    #[test]
    fn grid_validation() {
        let p = QParams::new(0.5, 0.0).unwrap();
        assert!(LatticeGrid::new(p, 0, 10).is_err());
        assert!(LatticeGrid::new(p, -2, 3).is_err());
        assert!(LatticeGrid::new(p, -2, 5).is_ok());
        assert_eq!(LatticeGrid::default_range(&p), (-10, 40));
        let p8 = QParams::new(0.8, 0.5).unwrap();
        assert_eq!(LatticeGrid::default_range(&p8), (-20, 120));
        let (lo, hi) = LatticeGrid::default_range(&QParams::new(0.9, -0.7).unwrap());
        assert!(lo < 0 && hi > 0 && LatticeGrid::new(QParams::new(0.9, -0.7).unwrap(), lo, hi).is_ok());
    }

    #[test]
    fn indicator_integrals() {
        let g = grid(0.5, 0.5);
        for m in [-3, 0, 7] {
            let f = GridFn::indicator(g, m).unwrap();
            let w = 0.5 * 0.5f64.powf(3.0 * m as f64);
            assert_relative_eq!(jackson_integral(&f), w, max_relative = 1e-15);
            for p in [1.0, 2.0, 3.5] {
                assert_relative_eq!(norm_p(&f, p).unwrap(), w.powf(1.0 / p), max_relative = 1e-14);
            }
            assert_eq!(sup_norm(&f), 1.0);
            let one = GridFn::constant(g, 1.0);
            assert_relative_eq!(inner(&one, &f).unwrap(), w, max_relative = 1e-15);
        }
        assert_eq!(norm_p(&GridFn::zeros(g), 2.0).unwrap(), 0.0);
        assert!(norm_p(&GridFn::zeros(g), 0.5).is_err());
    }

    #[test]
    fn delta_reproduces_point_values() {
        let g = grid(0.5, 0.0);
        let d = delta_fn(&g, 1.0).unwrap();
        assert_eq!(d.at(0), 2.0);
        assert_eq!(d.values.iter().filter(|&&v| v != 0.0).count(), 1);
        let g1 = LatticeGrid::new(QParams::new(0.5, 1.0).unwrap(), -10, 40).unwrap();
        assert_eq!(delta_fn(&g1, 0.5).unwrap().at(1), 32.0);
        let f = GridFn::from_exp_fn(g, |n| (n as f64 * 0.3).sin());
        for m in g.exps() {
            let got = inner(&delta_at(&g, m).unwrap(), &f).unwrap();
            assert_relative_eq!(got, f.at(m), max_relative = 1e-15, epsilon = 1e-300);
        }
        assert!(matches!(delta_fn(&g, 0.3), Err(QError::OffGrid { .. })));
    }

    #[test]
    fn grid_mismatch_is_reported() {
        let a = grid(0.5, 0.0);
        let b = grid(0.5, 0.5);
        assert!(matches!(
            inner(&GridFn::zeros(a), &GridFn::zeros(b)),
            Err(QError::GridMismatch(_))
        ));
        assert!(GridFn::new(a, vec![0.0; 3]).is_err());
    }

    #[test]
    fn csv_roundtrip_and_errors() {
        let g = grid(0.5, 0.5);
        let f = GridFn::from_exp_fn(g, |n| (n as f64).cos() / 3.0);
        let mut buf = Vec::new();
        f.write_csv(&mut buf).unwrap();
        let back = GridFn::read_csv(&buf[..], g).unwrap();
        assert_eq!(back.values, f.values);

        let text = String::from_utf8(buf).unwrap();
        let bad = text.replacen("1.0000000000000000e0", "1.1000000000000000e0", 1);
        assert!(matches!(GridFn::read_csv(bad.as_bytes(), g), Err(QError::GridMismatch(_))));
        assert!(matches!(GridFn::read_csv(&b""[..], g), Err(QError::Parse(_))));
        assert!(matches!(GridFn::read_csv(&b"n,x,value\n"[..], g), Err(QError::Parse(_))));
        let short: String = text.lines().take(5).collect::<Vec<_>>().join("\n");
        assert!(matches!(GridFn::read_csv(short.as_bytes(), g), Err(QError::GridMismatch(_))));
    }
}

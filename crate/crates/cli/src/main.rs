#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand};
use qhankel::bessel::BesselTable;
use qhankel::heat::{heat_apply, heat_residual};
use qhankel::lattice::{ExpWindow, GridFn, LatticeGrid};
use qhankel::qseries::QParams;
use qhankel::suite::{run_suite, scan_cell, CellSpec, SuiteConfig};
use qhankel::transform::TransformOp;
use qhankel::translation::{Kernel3, KernelEval};
use qhankel::{PrecisionCtx, QError};
use serde_json::json;

/// Gate for heat residuals at times on the lattice `q^{2m}`.
const LATTICE_TIME_TOL: f64 = 1e-7;
/// Gate for heat residuals at other times.
const OFF_LATTICE_TIME_TOL: f64 = 1e-6;
const POSITIVITY_TOL: f64 = 1e-10;

#[derive(Parser)]
#[command(name = "qhankel", version, about = "q-Bessel Fourier analysis on truncated q-lattices")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct Common {
    /// Lattice base, 0 < q < 1.
    #[arg(long, global = true)]
    q: Option<f64>,
    /// Bessel order, v > -1.
    #[arg(long, global = true, allow_negative_numbers = true)]
    v: Option<f64>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    nlo: Option<i32>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    nhi: Option<i32>,
    /// Window width in lattice points.
    #[arg(long, global = true)]
    window: Option<usize>,
    /// Working decimal digits of the software-precision path.
    #[arg(long, global = true, env = "QF_DIGITS")]
    digits: Option<u32>,
    /// Truncation tolerance for infinite products and series.
    #[arg(long, global = true, env = "QF_TAIL_TOL")]
    tail_tol: Option<f64>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Print machine-readable JSON on stdout.
    #[arg(long, global = true)]
    json: bool,
    /// Directory for cached Bessel tables.
    #[arg(long, global = true, env = "QF_TABLE_CACHE")]
    table_cache: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run the identity suite and emit a report.
    Check(CheckArgs),
    /// Apply the transform to a CSV grid function.
    Transform(IoArgs),
    /// Print the kernel row z -> D(x, y, z).
    Kernel(KernelArgs),
    /// Minimum of the kernel over a window for each (q, v).
    ScanPositivity(ScanArgs),
    /// Apply the heat semigroup to a CSV grid function.
    Heat(HeatArgs),
}

#[derive(Args)]
struct CheckArgs {
    /// Restrict the report to one family (qseries, bessel, transform,
    /// translation, heat).
    section: Option<String>,
    /// JSON suite configuration; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    q_list: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    v_list: Option<Vec<f64>>,
    /// Tolerance override `name=value`; `name` may be a dotted prefix.
    #[arg(long = "tol")]
    tol: Vec<String>,
    #[arg(long)]
    probes: Option<usize>,
    /// Write the JSON report here.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct IoArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct KernelArgs {
    /// Lattice point x = q^a.
    #[arg(long)]
    x: f64,
    /// Lattice point y = q^b.
    #[arg(long)]
    y: f64,
    /// Write the row as CSV here.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ScanArgs {
    #[arg(long, value_delimiter = ',', default_value = "0.3,0.5,0.7,0.9")]
    q_list: Vec<f64>,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true, default_value = "0,0.5,1.5")]
    v_list: Vec<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct HeatArgs {
    #[arg(long, default_value_t = 1.0)]
    t: f64,
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also check the heat equation and print `{t, residual, mass_defect}`.
    #[arg(long)]
    residual: bool,
}

impl Common {
    fn ctx(&self) -> qhankel::Result<PrecisionCtx> {
        let d = PrecisionCtx::default();
        PrecisionCtx::new(self.digits.unwrap_or(d.work_digits), self.tail_tol.unwrap_or(d.tail_tol))
    }

    fn grid(&self) -> qhankel::Result<LatticeGrid> {
        CellSpec {
            q: self.q.unwrap_or(0.5),
            v: self.v.unwrap_or(0.5),
            n_lo: self.nlo,
            n_hi: self.nhi,
        }
        .grid()
    }

    fn table(&self, grid: &LatticeGrid, ctx: &PrecisionCtx) -> qhankel::Result<Arc<BesselTable>> {
        Ok(Arc::new(BesselTable::load_or_build(grid, ctx, self.table_cache.as_deref())?))
    }
}

/// Outcome of a subcommand that ran to completion.
enum Verdict {
    Pass,
    Fail,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(Verdict::Pass) => ExitCode::SUCCESS,
        Ok(Verdict::Fail) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            let precision = e
                .chain()
                .any(|c| matches!(c.downcast_ref::<QError>(), Some(QError::PrecisionExhausted { .. })));
            ExitCode::from(if precision { 3 } else { 2 })
        }
    }
}

fn run(cli: &Cli) -> anyhow::Result<Verdict> {
    match &cli.cmd {
        Cmd::Check(a) => cmd_check(&cli.common, a),
        Cmd::Transform(a) => cmd_transform(&cli.common, a),
        Cmd::Kernel(a) => cmd_kernel(&cli.common, a),
        Cmd::ScanPositivity(a) => cmd_scan(&cli.common, a),
        Cmd::Heat(a) => cmd_heat(&cli.common, a),
    }
}

fn suite_config(c: &Common, a: &CheckArgs) -> anyhow::Result<SuiteConfig> {
    let mut cfg = match &a.config {
        Some(p) => {
            let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            serde_json::from_str(&text).map_err(|e| QError::Parse(format!("{}: {e}", p.display())))?
        }
        None => SuiteConfig::default(),
    };
    if a.q_list.is_some() || a.v_list.is_some() {
        let qs = a.q_list.clone().unwrap_or_else(|| vec![c.q.unwrap_or(0.5)]);
        let vs = a.v_list.clone().unwrap_or_else(|| vec![c.v.unwrap_or(0.5)]);
        cfg.cells = SuiteConfig::from_lists(&qs, &vs).cells;
    } else if c.q.is_some() || c.v.is_some() || c.nlo.is_some() || c.nhi.is_some() {
        cfg.cells = vec![CellSpec {
            q: c.q.unwrap_or(0.5),
            v: c.v.unwrap_or(0.5),
            n_lo: c.nlo,
            n_hi: c.nhi,
        }];
    }
    if let Some(d) = c.digits {
        cfg.digits = d;
    }
    if let Some(t) = c.tail_tol {
        cfg.tail_tol = t;
    }
    if let Some(s) = c.seed {
        cfg.seed = s;
    }
    if c.window.is_some() {
        cfg.window = c.window;
    }
    if c.table_cache.is_some() {
        cfg.table_cache = c.table_cache.clone();
    }
    if let Some(p) = a.probes {
        cfg.probes = p;
    }
    for t in &a.tol {
        let (k, v) = t
            .split_once('=')
            .ok_or_else(|| QError::InvalidParams(format!("--tol expects name=value, got {t}")))?;
        let v: f64 = v
            .trim()
            .parse()
            .map_err(|_| QError::InvalidParams(format!("bad tolerance value in {t}")))?;
        cfg.tolerances.insert(k.trim().to_string(), v);
    }
    cfg.validate()?;
    Ok(cfg)
}

fn cmd_check(c: &Common, a: &CheckArgs) -> anyhow::Result<Verdict> {
    const SECTIONS: [&str; 5] = ["qseries", "bessel", "transform", "translation", "heat"];
    if let Some(s) = &a.section {
        if !SECTIONS.contains(&s.as_str()) {
            return Err(QError::InvalidParams(format!("unknown section {s}; expected one of {SECTIONS:?}")).into());
        }
    }
    let cfg = suite_config(c, a)?;
    let mut report = run_suite(&cfg)?;
    if let Some(s) = &a.section {
        let prefix = format!("{s}.");
        for cell in &mut report.cells {
            cell.entries.retain(|e| e.name.starts_with(&prefix));
        }
        report = qhankel::report::CheckReport::new(report.environment, report.cells);
    }
    let text = report.to_json();
    if let Some(p) = &a.out {
        write_text(p, &text)?;
    }
    if c.json {
        println!("{text}");
    } else {
        for cell in &report.cells {
            let gated = cell.entries.iter().filter(|e| e.is_gated()).count();
            let passed = cell.entries.iter().filter(|e| e.is_gated() && e.pass).count();
            println!(
                "q={} v={} grid [{}, {}]: {passed}/{gated} gated checks pass",
                cell.q, cell.v, cell.grid.n_lo, cell.grid.n_hi
            );
        }
        for (cell, e) in report.failures() {
            println!(
                "FAIL q={} v={} {}: residual {:e} > {:e} ({})",
                cell.q,
                cell.v,
                e.name,
                e.residual,
                e.tolerance.unwrap_or(f64::NAN),
                e.anchor
            );
        }
        println!("runtime {:.1}s", report.environment.runtime);
    }
    Ok(if report.pass { Verdict::Pass } else { Verdict::Fail })
}

fn cmd_transform(c: &Common, a: &IoArgs) -> anyhow::Result<Verdict> {
    let ctx = c.ctx()?;
    let grid = c.grid()?;
    let f = GridFn::load_csv(&a.input, grid)?;
    let op = TransformOp::new(grid, c.table(&grid, &ctx)?, &ctx)?;
    let ff = op.forward(&f)?;
    write_fn(&ff, a.out.as_deref())?;
    Ok(Verdict::Pass)
}

fn cmd_kernel(c: &Common, a: &KernelArgs) -> anyhow::Result<Verdict> {
    let ctx = c.ctx()?;
    let grid = c.grid()?;
    let (xa, yb) = (grid.locate(a.x)?, grid.locate(a.y)?);
    let eval = KernelEval::new(grid, c.table(&grid, &ctx)?, &ctx)?;
    let row = GridFn::from_exp_fn(grid, |z| eval.d(xa, yb, z));
    let row_sum = qhankel::lattice::jackson_integral(&row);
    let trusted = eval.leaked_mass(xa, yb) < Kernel3::WINDOW_TOL;
    if let Some(p) = &a.out {
        row.save_csv(p)?;
    }
    let summary = json!({
        "q": grid.params.q,
        "v": grid.params.v,
        "x_exp": xa,
        "y_exp": yb,
        "row_sum": row_sum,
        "row_sum_defect": (row_sum - 1.0).abs(),
        "trusted": trusted,
        "min": row.values.iter().copied().fold(f64::INFINITY, f64::min),
    });
    if c.json {
        println!("{summary}");
    } else {
        if a.out.is_none() {
            row.write_csv(std::io::stdout().lock())?;
        }
        eprintln!("row sum {row_sum:.16} (trusted: {trusted})");
    }
    Ok(Verdict::Pass)
}

fn cmd_scan(c: &Common, a: &ScanArgs) -> anyhow::Result<Verdict> {
    let ctx = c.ctx()?;
    let width = c.window.unwrap_or(16);
    if width < 1 {
        bail!(QError::InvalidParams("window must be positive".into()));
    }
    let mut rows = Vec::new();
    for &q in &a.q_list {
        for &v in &a.v_list {
            QParams::new(q, v)?;
            rows.push(scan_cell(q, v, width, &ctx, c.table_cache.as_deref())?);
        }
    }
    let mut out = String::from("q,v,min_kernel,argmin_a,argmin_b,argmin_c\n");
    for r in &rows {
        out.push_str(&format!(
            "{},{},{:.16e},{},{},{}\n",
            r.q, r.v, r.min_kernel, r.argmin.0, r.argmin.1, r.argmin.2
        ));
    }
    match &a.out {
        Some(p) => write_text(p, &out)?,
        None if !c.json => print!("{out}"),
        None => {}
    }
    if c.json {
        println!("{}", serde_json::to_string_pretty(&rows)?);
    }
    let ok = rows.iter().all(|r| r.pass(POSITIVITY_TOL));
    Ok(if ok { Verdict::Pass } else { Verdict::Fail })
}

/// True when `t = q^{2m}` for an integer `m`.
fn on_time_lattice(t: f64, q: f64) -> bool {
    let m = t.ln() / (2.0 * q.ln());
    (m - m.round()).abs() < 1e-9
}

fn cmd_heat(c: &Common, a: &HeatArgs) -> anyhow::Result<Verdict> {
    if !(a.t > 0.0) || !a.t.is_finite() {
        bail!(QError::InvalidArgument(format!("time t must be positive, got {}", a.t)));
    }
    let ctx = c.ctx()?;
    let grid = c.grid()?;
    let f = GridFn::load_csv(&a.input, grid)?;
    let kernel = Kernel3::build(grid, c.table(&grid, &ctx)?, &ctx)?;
    check_support(&f, &kernel.window)?;
    let u = heat_apply(&f, a.t, &kernel, &ctx)?;
    if a.out.is_some() || !(c.json && a.residual) {
        write_fn(&u, a.out.as_deref())?;
    }
    if !a.residual {
        return Ok(Verdict::Pass);
    }
    let r = heat_residual(&f, a.t, &kernel, &ctx)?;
    let tol = if on_time_lattice(a.t, grid.params.q) {
        LATTICE_TIME_TOL
    } else {
        OFF_LATTICE_TIME_TOL
    };
    let summary = json!({ "t": r.t, "residual": r.residual, "mass_defect": r.mass_defect });
    if c.json || a.out.is_some() {
        println!("{summary}");
    } else {
        // stdout already carries the CSV
        eprintln!("{summary}");
    }
    Ok(if r.residual <= tol { Verdict::Pass } else { Verdict::Fail })
}

fn check_support(f: &GridFn, w: &ExpWindow) -> anyhow::Result<()> {
    if let Some(s) = f.support() {
        if s.lo < w.lo || s.hi > w.hi {
            return Err(anyhow!(QError::InvalidArgument(format!(
                "input support {s} leaves the trusted kernel window {w}"
            ))));
        }
    }
    Ok(())
}

fn write_fn(f: &GridFn, out: Option<&Path>) -> anyhow::Result<()> {
    match out {
        Some(p) => f.save_csv(p)?,
        None => f.write_csv(std::io::stdout().lock())?,
    }
    Ok(())
}

fn write_text(p: &Path, text: &str) -> anyhow::Result<()> {
    std::fs::write(p, text).with_context(|| format!("writing {}", p.display()))
}

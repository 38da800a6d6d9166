//! Machine-readable check reports.

use serde::Serialize;

use crate::lattice::ExpWindow;

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct CheckEntry {
    pub name: String,
    /// The identity being checked, in words.
    pub anchor: String,
    pub residual: f64,
    /// `None` for entries that are reported but not gated.
    pub tolerance: Option<f64>,
    pub pass: bool,
}

impl CheckEntry {
    /// Gated entry; NaN residuals fail.
    pub fn gated(name: impl Into<String>, anchor: impl Into<String>, residual: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            anchor: anchor.into(),
            residual,
            tolerance: Some(tolerance),
            pass: residual <= tolerance,
        }
    }

    pub fn reported(name: impl Into<String>, anchor: impl Into<String>, residual: f64) -> Self {
        Self {
            name: name.into(),
            anchor: anchor.into(),
            residual,
            tolerance: None,
            pass: true,
        }
    }

    pub fn is_gated(&self) -> bool {
        self.tolerance.is_some()
    }

    /// Replace the tolerance of a gated entry and recompute `pass`.
    pub fn retolerate(&mut self, tolerance: f64) {
        if self.tolerance.is_some() {
            self.tolerance = Some(tolerance);
            self.pass = self.residual <= tolerance;
        }
    }
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct GridInfo {
    pub n_lo: i32,
    pub n_hi: i32,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct CellWindows {
    /// Exponents whose transform rows are complete.
    pub interior: ExpWindow,
    /// Exponents whose kernel rows are complete.
    pub kernel: ExpWindow,
    /// Support of the random probes.
    pub probe: ExpWindow,
}

/// Results for one `(q, v)` pair.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct CellReport {
    pub q: f64,
    pub v: f64,
    pub grid: GridInfo,
    pub windows: CellWindows,
    pub entries: Vec<CheckEntry>,
}

impl CellReport {
    pub fn pass(&self) -> bool {
        self.entries.iter().all(|e| e.pass)
    }
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct Environment {
    pub version: String,
    pub digits: u32,
    pub tail_tol: f64,
    pub seed: u64,
    pub probes: usize,
    /// Wall-clock seconds; the only nondeterministic field.
    pub runtime: f64,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct CheckReport {
    pub pass: bool,
    pub environment: Environment,
    pub cells: Vec<CellReport>,
}

impl CheckReport {
    pub fn new(environment: Environment, cells: Vec<CellReport>) -> Self {
        let pass = cells.iter().all(CellReport::pass);
        Self {
            pass,
            environment,
            cells,
        }
    }

    pub fn entries(&self) -> impl Iterator<Item = (&CellReport, &CheckEntry)> {
        self.cells.iter().flat_map(|c| c.entries.iter().map(move |e| (c, e)))
    }

    pub fn failures(&self) -> Vec<(&CellReport, &CheckEntry)> {
        self.entries().filter(|(_, e)| !e.pass).collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pass_follows_tolerance() {
        let e = CheckEntry::gated("a", "x", 1e-10, 1e-9);
        assert!(e.pass);
        let mut e = CheckEntry::gated("a", "x", f64::NAN, 1e-9);
        assert!(!e.pass);
        e.retolerate(1.0);
        assert!(!e.pass);
        let mut r = CheckEntry::reported("b", "y", 5.0);
        assert!(r.pass);
        r.retolerate(0.0);
        assert!(r.pass && !r.is_gated());
    }

    #[test]
    fn report_json_is_stable() {
        let cell = CellReport {
            q: 0.5,
            v: 0.0,
            grid: GridInfo { n_lo: -10, n_hi: 40 },
            windows: CellWindows {
                interior: ExpWindow::new(-10, 6),
                kernel: ExpWindow::new(-6, 20),
                probe: ExpWindow::new(-6, 6),
            },
            entries: vec![CheckEntry::gated("a", "x", 0.0, 0.0)],
        };
        let env = Environment {
            version: "0".into(),
            digits: 50,
            tail_tol: 1e-30,
            seed: 1,
            probes: 3,
            runtime: 0.0,
        };
        let r = CheckReport::new(env, vec![cell]);
        assert!(r.pass);
        assert_eq!(r.to_json(), r.clone().to_json());
        assert!(r.to_json().contains("\"anchor\": \"x\""));
    }
}

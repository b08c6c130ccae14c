//! JSON problem files.
//!
//! ```json
//! {
//!   "order": 4,
//!   "coefficients": ["0", "50", "0", "0"],
//!   "interval": [0, 1],
//!   "m_ref": 200,
//!   "solver": { "grid_nodes": 4096 }
//! }
//! ```

use std::path::Path;

use disconj_core::{parse, GridSpec, ProblemDef, SolverSettings};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

pub const DEFAULT_GREEN_MESH: usize = 64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub order: usize,
    /// `a_1 .. a_n` as expressions in `t`.
    pub coefficients: Vec<String>,
    pub interval: [f64; 2],
    pub m_ref: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solver: Option<SolverOverrides>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverOverrides {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub abs_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rel_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid_nodes: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scan_radius: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scan_step: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub green_mesh: Option<usize>,
}

/// A validated problem file with its effective settings.
#[derive(Debug, Clone)]
pub struct Loaded {
    pub file: ProblemFile,
    pub problem: ProblemDef,
    pub settings: SolverSettings,
    pub green_mesh: usize,
}

impl ProblemFile {
    pub fn read(path: &Path) -> Result<ProblemFile> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        ProblemFile::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<ProblemFile> {
        serde_json::from_str(text).map_err(|e| CliError::input(format!("problem file: {e}")))
    }

    pub fn load(self) -> Result<Loaded> {
        if self.order < 2 {
            return Err(CliError::input(format!(
                "order must be at least 2, got {}",
                self.order
            )));
        }
        if self.coefficients.len() != self.order {
            return Err(CliError::input(format!(
                "order {} needs {} coefficients, got {}",
                self.order,
                self.order,
                self.coefficients.len()
            )));
        }
        let mut exprs = Vec::with_capacity(self.order);
        for (i, src) in self.coefficients.iter().enumerate() {
            let e = parse(src).map_err(|e| {
                CliError::input(format!(
                    "coefficients[{i}] = {src:?}: {e} (byte {})",
                    e.pos.offset
                ))
            })?;
            exprs.push(e);
        }
        let [a, b] = self.interval;
        if !(a.is_finite() && b.is_finite() && a < b) {
            return Err(CliError::input(format!(
                "interval [{a}, {b}] must satisfy a < b"
            )));
        }
        if !self.m_ref.is_finite() {
            return Err(CliError::input("m_ref must be finite"));
        }
        let problem = ProblemDef::new(exprs, (a, b), self.m_ref)?;

        let mut settings = SolverSettings::for_problem(&problem);
        let mut green_mesh = DEFAULT_GREEN_MESH;
        if let Some(o) = &self.solver {
            let g: &mut GridSpec = &mut settings.grid;
            if let Some(v) = o.abs_tol {
                g.abs_tol = v;
            }
            if let Some(v) = o.rel_tol {
                g.rel_tol = v;
            }
            if let Some(v) = o.grid_nodes {
                g.nodes = v;
            }
            if let Some(v) = o.scan_radius {
                settings.scan.radius = v;
            }
            if o.scan_step.is_some() {
                settings.scan.step = o.scan_step;
            }
            if let Some(v) = o.green_mesh {
                green_mesh = v;
            }
        }
        check_settings(&settings, green_mesh)?;
        Ok(Loaded {
            file: self,
            problem,
            settings,
            green_mesh,
        })
    }
}

pub fn check_settings(s: &SolverSettings, green_mesh: usize) -> Result<()> {
    s.grid
        .validate()
        .map_err(|e| CliError::input(format!("solver settings: {e}")))?;
    if !(s.scan.radius > 0.0 && s.scan.radius.is_finite()) {
        return Err(CliError::input("scan radius must be positive"));
    }
    if let Some(step) = s.scan.step {
        if !(step > 0.0 && step.is_finite()) {
            return Err(CliError::input("scan step must be positive"));
        }
    }
    if !(s.zeros.tol > 0.0 && s.zeros.tol < 1.0) {
        return Err(CliError::input("zero tolerance must lie in (0, 1)"));
    }
    if green_mesh < 4 {
        return Err(CliError::input("green mesh needs at least 4 nodes"));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const FOURTH: &str =
        r#"{"order": 4, "coefficients": ["0", "50", "0", "0"], "interval": [0, 1], "m_ref": 200}"#;

    #[test]
    fn reads_minimal_file() {
        let l = ProblemFile::from_json(FOURTH).unwrap().load().unwrap();
        assert_eq!(l.problem.order(), 4);
        assert_eq!(l.problem.m_ref(), 200.0);
        assert_eq!(l.green_mesh, DEFAULT_GREEN_MESH);
        assert_eq!(l.settings.scan.radius, 1e6);
    }

    #[test]
    fn overrides_apply() {
        let text = r#"{"order": 2, "coefficients": ["0", "0"], "interval": [0, 2], "m_ref": 0,
            "solver": {"grid_nodes": 512, "scan_radius": 50, "scan_step": 0.5, "green_mesh": 16, "abs_tol": 1e-9}}"#;
        let l = ProblemFile::from_json(text).unwrap().load().unwrap();
        assert_eq!(l.settings.grid.nodes, 512);
        assert_eq!(l.settings.grid.abs_tol, 1e-9);
        assert_eq!(l.settings.scan.radius, 50.0);
        assert_eq!(l.settings.scan.step, Some(0.5));
        assert_eq!(l.green_mesh, 16);
    }

    #[test]
    fn default_radius_scales_with_the_interval() {
        let text = r#"{"order": 2, "coefficients": ["0", "0"], "interval": [0, 2], "m_ref": 0}"#;
        let l = ProblemFile::from_json(text).unwrap().load().unwrap();
        assert_eq!(l.settings.scan.radius, 2.5e5);
    }

    #[test]
    fn rejects_bad_files() {
        let cases = [
            r#"{"order": 1, "coefficients": ["0"], "interval": [0, 1], "m_ref": 0}"#,
            r#"{"order": 2, "coefficients": ["0"], "interval": [0, 1], "m_ref": 0}"#,
            r#"{"order": 2, "coefficients": ["0", "cos("], "interval": [0, 1], "m_ref": 0}"#,
            r#"{"order": 2, "coefficients": ["0", "0"], "interval": [1, 0], "m_ref": 0}"#,
            r#"{"order": 2, "coefficients": ["0", "0"], "interval": [0, 1], "m_ref": 0, "extra": 1}"#,
            r#"{"order": 2, "coefficients": ["0", "0"], "interval": [0, 1], "m_ref": 0, "solver": {"grid_nodes": 3}}"#,
            r#"{"order": 2, "coefficients": ["0", "0"], "interval": [0, 1]}"#,
        ];
        for c in cases {
            let err = ProblemFile::from_json(c)
                .and_then(ProblemFile::load)
                .unwrap_err();
            assert!(matches!(err, CliError::Input(_)), "{c}: {err}");
        }
    }

    #[test]
    fn parse_error_names_the_coefficient_and_position() {
        let text = r#"{"order": 2, "coefficients": ["0", "cos("], "interval": [0, 1], "m_ref": 0}"#;
        let msg = ProblemFile::from_json(text)
            .unwrap()
            .load()
            .unwrap_err()
            .to_string();
        assert!(msg.contains("coefficients[1]"), "{msg}");
        assert!(msg.contains("column 4"), "{msg}");
    }
}

//! Serializable views of core results.
//!
//! Field order is fixed by the struct definitions, so two runs on the same
//! input produce identical JSON apart from `timing`.

use disconj_core::{
    ClosestEigenvalues, DisconjugacyInterval, DisconjugacyReport, EigenRecord, Parity, SignReport,
    SolverSettings,
};
use serde::Serialize;

use crate::problem::ProblemFile;

/// Eigenfunction samples kept per record.
pub const EIGENFUNCTION_POINTS: usize = 65;

#[derive(Debug, Serialize)]
pub struct RunReport {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub input: ProblemFile,
    pub settings: Settings,
    pub verdict: Verdict,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub spectrum: Option<Vec<Spectrum>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub interval: Option<Interval>,
    pub timing: Timing,
}

impl RunReport {
    pub fn new(
        command: &'static str,
        input: ProblemFile,
        settings: Settings,
        verdict: Verdict,
    ) -> RunReport {
        RunReport {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command,
            input,
            settings,
            verdict,
            spectrum: None,
            interval: None,
            timing: Timing::default(),
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

#[derive(Debug, Default, Serialize)]
pub struct Timing {
    pub elapsed_ms: f64,
}

#[derive(Debug, Serialize)]
pub struct Settings {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub grid_nodes: usize,
    pub zero_tol: f64,
    pub delta_frac: f64,
    pub scan_radius: f64,
    /// Smallest step in `M` actually used.
    pub scan_step: f64,
    pub freq_step: f64,
    pub green_mesh: usize,
}

impl Settings {
    pub fn new(s: &SolverSettings, m_ref: f64, green_mesh: usize) -> Settings {
        Settings {
            abs_tol: s.grid.abs_tol,
            rel_tol: s.grid.rel_tol,
            grid_nodes: s.grid.nodes,
            zero_tol: s.zeros.tol,
            delta_frac: s.zeros.delta_frac,
            scan_radius: s.scan.radius,
            scan_step: s.scan.step.unwrap_or_else(|| (0.01 * m_ref.abs()).max(1.0)),
            freq_step: s.scan.freq_step,
            green_mesh,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct Verdict {
    pub m: f64,
    pub disconjugate: bool,
    pub omega: Option<f64>,
    pub witness_k: Option<usize>,
    pub tied_k: Vec<usize>,
}

impl From<&DisconjugacyReport> for Verdict {
    fn from(r: &DisconjugacyReport) -> Verdict {
        Verdict {
            m: r.m,
            disconjugate: r.disconjugate,
            omega: r.omega,
            witness_k: r.witness_k,
            tied_k: r.tied_k.clone(),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct Spectrum {
    pub k: usize,
    /// Parity of `n - k`.
    pub parity: &'static str,
    pub least_positive: Option<Record>,
    pub biggest_negative: Option<Record>,
    pub reached_down: f64,
    pub reached_up: f64,
    pub truncated_down: bool,
    pub truncated_up: bool,
}

impl Spectrum {
    pub fn new(order: usize, c: &ClosestEigenvalues) -> Spectrum {
        Spectrum {
            k: c.k,
            parity: if (order - c.k).is_multiple_of(2) {
                "even"
            } else {
                "odd"
            },
            least_positive: c.positive.as_ref().map(Record::from),
            biggest_negative: c.negative.as_ref().map(Record::from),
            reached_down: c.reached_down,
            reached_up: c.reached_up,
            truncated_down: c.truncated_down,
            truncated_up: c.truncated_up,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct Record {
    pub lambda: f64,
    pub m_star: f64,
    pub residual: f64,
    pub boundary_residual: f64,
    pub sign_violation: f64,
    pub eigenfunction: Samples,
}

#[derive(Debug, Serialize)]
pub struct Samples {
    pub t: Vec<f64>,
    pub u: Vec<f64>,
}

impl From<&EigenRecord> for Record {
    fn from(r: &EigenRecord) -> Record {
        let e = &r.eigenfunction;
        let idx = subsample(e.t.len(), EIGENFUNCTION_POINTS);
        Record {
            lambda: r.lambda,
            m_star: r.m_star,
            residual: r.residual,
            boundary_residual: e.boundary_residual(),
            sign_violation: e.sign_violation(0.01),
            eigenfunction: Samples {
                t: idx.iter().map(|&i| e.t[i]).collect(),
                u: idx.iter().map(|&i| e.values()[i]).collect(),
            },
        }
    }
}

/// About `want` evenly spread indices into `0..len`, both ends included.
pub fn subsample(len: usize, want: usize) -> Vec<usize> {
    if len <= want {
        return (0..len).collect();
    }
    let mut idx: Vec<usize> = (0..want)
        .map(|i| (i as f64 * (len - 1) as f64 / (want - 1) as f64).round() as usize)
        .collect();
    idx.dedup();
    idx
}

#[derive(Debug, Serialize)]
pub struct Interval {
    pub m_ref: f64,
    /// `null` when unbounded below.
    pub lower: Option<f64>,
    pub upper: f64,
    pub unbounded_below: bool,
    /// `null` when there is no positive eigenvalue bound.
    pub lambda1: Option<f64>,
    pub lambda2: f64,
    pub attained_k_lower: Option<usize>,
    pub attained_k_upper: usize,
}

impl From<&DisconjugacyInterval> for Interval {
    fn from(iv: &DisconjugacyInterval) -> Interval {
        let bounded = iv.is_bounded_below();
        Interval {
            m_ref: iv.m_ref,
            lower: bounded.then_some(iv.lower),
            upper: iv.upper,
            unbounded_below: !bounded,
            lambda1: iv.lambda1.is_finite().then_some(iv.lambda1),
            lambda2: iv.lambda2,
            attained_k_lower: iv.attained_k_lower,
            attained_k_upper: iv.attained_k_upper,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct TraceSummary {
    pub k: usize,
    pub m: f64,
    pub samples: usize,
    pub zeros: Vec<TraceZero>,
}

#[derive(Debug, Serialize)]
pub struct TraceZero {
    pub t: f64,
    pub kind: &'static str,
}

#[derive(Debug, Serialize)]
pub struct SignSummary {
    pub k: usize,
    pub m: f64,
    /// Parity of `n - k`; `g p >= 0` is expected for either.
    pub parity: &'static str,
    pub pass: bool,
    pub worst_violation: f64,
    pub worst_at: Option<[f64; 2]>,
    pub tol: f64,
    pub mesh: usize,
    pub boundary_residual: f64,
    pub jump_error: f64,
}

pub fn parity_name(p: Parity) -> &'static str {
    match p {
        Parity::Even => "even",
        Parity::Odd => "odd",
    }
}

impl SignSummary {
    pub fn new(
        r: &SignReport,
        tol: f64,
        mesh: usize,
        boundary_residual: f64,
        jump_error: f64,
    ) -> Self {
        SignSummary {
            k: r.k,
            m: r.m,
            parity: parity_name(r.parity),
            pass: r.pass,
            worst_violation: r.worst_violation,
            worst_at: r.worst_at.map(|(t, s)| [t, s]),
            tol,
            mesh,
            boundary_residual,
            jump_error,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

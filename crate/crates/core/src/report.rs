//! Machine-readable summary of a planning run, one JSON object per line.

use std::time::Duration;

use serde::Serialize;

use crate::engine::Mode;
use crate::oracle::SoundnessReport;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct OracleSummary {
    pub checked: usize,
    pub impossible: usize,
    pub violations: usize,
}

impl From<&SoundnessReport> for OracleSummary {
    fn from(r: &SoundnessReport) -> Self {
        OracleSummary { checked: r.checked, impossible: r.impossible, violations: r.violations.len() }
    }
}

/// Oracle outcome: a summary, or why the check could not run.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum OracleCheck {
    Checked(OracleSummary),
    Skipped(String),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunReport {
    pub domain: String,
    pub size: Option<usize>,
    pub max_steps: usize,
    pub max_branches: usize,
    pub mode: Mode,
    pub plan_found: bool,
    /// The plan in compact form.
    pub plan: Option<String>,
    pub occ_count: Option<usize>,
    /// Steps used by the plan.
    pub horizon: Option<usize>,
    pub search_nodes: usize,
    pub wall_time_ms: f64,
    /// Knowledge atoms over all branches, per eval step of the replayed plan.
    pub atom_counts: Vec<usize>,
    pub oracle: Option<OracleCheck>,
}

impl RunReport {
    pub fn new(domain: impl Into<String>, max_steps: usize, max_branches: usize, mode: Mode) -> Self {
        RunReport {
            domain: domain.into(),
            size: None,
            max_steps,
            max_branches,
            mode,
            plan_found: false,
            plan: None,
            occ_count: None,
            horizon: None,
            search_nodes: 0,
            wall_time_ms: 0.0,
            atom_counts: Vec::new(),
            oracle: None,
        }
    }

    pub fn set_wall_time(&mut self, d: Duration) {
        self.wall_time_ms = d.as_secs_f64() * 1e3;
    }

    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("report serializes")
    }
}

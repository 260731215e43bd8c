//! JSON run report.

use std::io::{self, Write};
use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};

use periodyn::certify::{Certificate, ConditionCheck, Criterion, CriterionReport, Witness};
use periodyn::ensemble::EnsembleSummary;
use periodyn::periodic::RateFit;

pub const TOOL: &str = "periodyn";

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Clone, Serialize)]
pub struct ConfigInfo {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct OutputFile {
    pub kind: &'static str,
    pub path: String,
    pub sha256: String,
    pub rows: Option<usize>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CriterionEntry {
    pub criterion: Criterion,
    pub satisfied: Option<bool>,
    pub worst_row_residual: Option<f64>,
    /// 1-based.
    pub worst_row: Option<usize>,
    pub witness: Option<Witness>,
    pub note: Option<String>,
}

impl CriterionEntry {
    pub fn from_report(r: &CriterionReport) -> Self {
        Self {
            criterion: r.criterion,
            satisfied: Some(r.satisfied),
            worst_row_residual: Some(r.worst_row_residual),
            worst_row: Some(r.worst_row + 1),
            witness: r.witness.clone(),
            note: None,
        }
    }

    pub fn not_applicable(criterion: Criterion, why: String) -> Self {
        Self {
            criterion,
            satisfied: None,
            worst_row_residual: None,
            worst_row: None,
            witness: None,
            note: Some(why),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct EnsembleCounts {
    pub seed: u64,
    pub instances: usize,
    pub grid_points: usize,
    pub paper: usize,
    pub cor1: usize,
    pub thm_a: usize,
    pub thm_b: usize,
    pub l: usize,
    pub thm_a_without_paper: usize,
    pub paper_without_thm_a: usize,
    /// Instance indices where the quadratic-form criterion holds and the weight search fails.
    pub inclusion_violations: Vec<u64>,
}

impl From<&EnsembleSummary> for EnsembleCounts {
    fn from(s: &EnsembleSummary) -> Self {
        Self {
            seed: s.seed,
            instances: s.instances,
            grid_points: s.grid_points,
            paper: s.paper,
            cor1: s.cor1,
            thm_a: s.thm_a,
            thm_b: s.thm_b,
            l: s.l,
            thm_a_without_paper: s.thm_a_without_paper,
            paper_without_thm_a: s.paper_without_thm_a,
            inclusion_violations: s.outcomes.iter().filter(|o| o.thm_a && !o.paper).map(|o| o.index).collect(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct NamedFit {
    pub name: String,
    #[serde(flatten)]
    pub fit: RateFit,
    /// Certified rate the fit is compared with, when known.
    pub certified_alpha: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct PeriodicResult {
    pub residual: f64,
    pub iterations: usize,
    pub residual_history: Vec<f64>,
    pub nodes_per_period: usize,
    pub seam_gap: f64,
    pub verify_periods: usize,
    pub deviation: Option<f64>,
    /// Max node error against the closed-form orbit of a decoupled linear model.
    pub closed_form_error: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ErrorInfo {
    pub kind: &'static str,
    pub message: String,
    pub residual_history: Option<Vec<f64>>,
    pub time: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub config: Option<ConfigInfo>,
    /// Canonical form of the loaded model.
    pub model: Option<String>,
    pub parameters: serde_json::Map<String, serde_json::Value>,
    pub status: &'static str,
    pub exit_code: i32,
    pub validation: Vec<String>,
    pub certificate: Option<Certificate>,
    /// Existence margin with all weights equal to one.
    pub unit_weights: Option<ConditionCheck>,
    pub criteria: Vec<CriterionEntry>,
    pub ensemble: Option<EnsembleCounts>,
    pub rate_fits: Vec<NamedFit>,
    pub periodic: Option<PeriodicResult>,
    pub outputs: Vec<OutputFile>,
    pub error: Option<ErrorInfo>,
}

impl RunReport {
    pub fn new(command: &'static str) -> Self {
        Self {
            tool: TOOL,
            version: env!("CARGO_PKG_VERSION"),
            command,
            config: None,
            model: None,
            parameters: serde_json::Map::new(),
            status: "ok",
            exit_code: 0,
            validation: Vec::new(),
            certificate: None,
            unit_weights: None,
            criteria: Vec::new(),
            ensemble: None,
            rate_fits: Vec::new(),
            periodic: None,
            outputs: Vec::new(),
            error: None,
        }
    }

    pub fn param(&mut self, key: &str, value: impl Serialize) {
        let v = serde_json::to_value(value).unwrap_or(serde_json::Value::Null);
        self.parameters.insert(key.to_string(), v);
    }

    pub fn fail(&mut self, status: &'static str, exit_code: i32, kind: &'static str, message: String) {
        self.status = status;
        self.exit_code = exit_code;
        self.error = Some(ErrorInfo {
            kind,
            message,
            residual_history: None,
            time: None,
        });
    }

    pub fn write_json<W: Write>(&self, mut w: W) -> io::Result<()> {
        serde_json::to_writer_pretty(&mut w, self)?;
        writeln!(w)
    }

    pub fn save(&self, path: &Path) -> io::Result<()> {
        let mut buf = Vec::new();
        self.write_json(&mut buf)?;
        std::fs::write(path, buf)
    }
}

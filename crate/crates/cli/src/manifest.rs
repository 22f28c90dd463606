//! Machine-readable summary of one run.

use std::time::Instant;

use serde::Serialize;

use cooproute_core::experiments::{Annotation, MixedSweepRow, SweepTable};
use cooproute_core::mixed::MixedConfig;
use cooproute_core::{EquilibriumSet, SolverConfig};

use crate::config::SolverDoc;
use crate::csvio::format_number;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum WarningKind {
    /// A preset value that had to be assumed.
    Assumed,
    /// Some starts of the dynamics did not settle.
    NonConverged,
    /// Converged clusters that failed verification.
    RejectedCluster,
    /// A grid point with no result.
    PointFailed,
    /// The case-1 closed form was skipped near `alpha = 0.5`.
    ClosedFormSkipped,
    /// A printed closed-form variant disagrees with the derived one.
    CaseAudit,
    /// A cooperation paradox without multiple equilibria anywhere.
    ParadoxDiscrepancy,
}

/// One warning per annotated preset field or per solver event.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Warning {
    pub kind: WarningKind,
    /// Field name or grid point the warning refers to.
    pub context: String,
    pub message: String,
}

impl Warning {
    pub fn new(kind: WarningKind, context: impl Into<String>, message: impl Into<String>) -> Self {
        Self { kind, context: context.into(), message: message.into() }
    }
}

impl std::fmt::Display for Warning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "warning [{}]: {}", self.context, self.message)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Phase {
    pub name: String,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MixedSettings {
    pub starts: usize,
    pub tol: f64,
    pub max_alternations: usize,
    pub dedupe_radius: f64,
    pub verify_tol: f64,
    pub bracket_points: usize,
    pub bracketing: bool,
}

impl From<&MixedConfig> for MixedSettings {
    fn from(c: &MixedConfig) -> Self {
        Self {
            starts: c.starts,
            tol: c.tol,
            max_alternations: c.max_alternations,
            dedupe_radius: c.dedupe_radius,
            verify_tol: c.verify_tol,
            bracket_points: c.bracket_points,
            bracketing: c.bracketing,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunManifest {
    pub version: &'static str,
    pub command: String,
    /// Preset name or config path.
    pub source: String,
    pub threads: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub solver: Option<SolverDoc>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mixed_solver: Option<MixedSettings>,
    pub phases: Vec<Phase>,
    pub warnings: Vec<Warning>,
}

impl RunManifest {
    pub fn new(command: &str, source: &str, threads: usize) -> Self {
        Self {
            version: env!("CARGO_PKG_VERSION"),
            command: command.into(),
            source: source.into(),
            threads,
            solver: None,
            mixed_solver: None,
            phases: Vec::new(),
            warnings: Vec::new(),
        }
    }

    pub fn set_solver(&mut self, cfg: &SolverConfig) {
        self.solver = Some(SolverDoc::full(cfg));
    }

    /// Runs `f` and records its wall-clock time under `name`.
    pub fn time<T>(&mut self, name: &str, f: impl FnOnce() -> T) -> T {
        let start = Instant::now();
        let out = f();
        self.phases.push(Phase { name: name.into(), seconds: start.elapsed().as_secs_f64() });
        out
    }

    pub fn annotations(&mut self, notes: &[Annotation]) {
        for a in notes {
            self.warnings.push(Warning::new(WarningKind::Assumed, a.field.clone(), a.note.clone()));
        }
    }

    /// Solver events of one equilibrium set; `context` names the grid point.
    pub fn solver_events(&mut self, context: &str, set: &EquilibriumSet) {
        let d = &set.diagnostics;
        if d.non_converged > 0 {
            self.warnings.push(Warning::new(
                WarningKind::NonConverged,
                context,
                format!("{} of {} starts did not converge", d.non_converged, d.starts),
            ));
        }
        if d.rejected_clusters > 0 {
            self.warnings.push(Warning::new(
                WarningKind::RejectedCluster,
                context,
                format!("{} converged clusters failed verification", d.rejected_clusters),
            ));
        }
    }

    pub fn sweep_events(&mut self, table: &SweepTable) {
        let name = table.param.name();
        for row in &table.rows {
            let context = format!("{name}={}", format_number(row.value));
            match &row.outcome {
                Ok(set) => self.solver_events(&context, set),
                Err(e) => self.warnings.push(Warning::new(WarningKind::PointFailed, context, e.to_string())),
            }
        }
    }

    pub fn mixed_events(&mut self, rows: &[MixedSweepRow]) {
        for row in rows {
            let context = format!("alpha={}", format_number(row.alpha));
            match &row.numeric {
                Ok(n) if !n.non_converged.is_empty() => self.warnings.push(Warning::new(
                    WarningKind::NonConverged,
                    context.clone(),
                    format!("{} alternation starts did not settle", n.non_converged.len()),
                )),
                Ok(_) => {}
                Err(e) => self.warnings.push(Warning::new(WarningKind::PointFailed, context.clone(), e.to_string())),
            }
            if row.closed.first().is_some_and(|c| c.case1_skipped) {
                self.warnings.push(Warning::new(
                    WarningKind::ClosedFormSkipped,
                    context,
                    "case-1 closed form skipped: 2 alpha - 1 is too close to 0",
                ));
            }
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest is serializable")
    }
}

//! Command-line dispatch. Data goes to files or standard output, every
//! diagnostic to standard error.
//!
//! Exit codes: 0 success, 1 output failure or a profile that fails
//! verification, 2 configuration error, 3 infeasible scenario, 4 solver
//! non-convergence.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use cooproute_core::experiments::{
    detect_braess, detect_cooperation_paradox, mixed_alpha_sweep, parameter_sweep_with, preset, Annotation, CoopMode,
    Direction, Grid, ParadoxReport, PresetKind, Scenario, SweepParam, SweepSpec, SweepTable, EXTRA_PRESETS,
    PRESET_NAMES,
};
use cooproute_core::mixed::{case_audit, AuditKind, MixedConfig};
use cooproute_core::nash::Executor;
use cooproute_core::{ExperimentError, ModelError, SolveError};

use crate::config::{ConfigDoc, ConfigError, Document};
use crate::csvio::{emit_csv, emit_mixed_csv, format_number, CsvTable};
use crate::exec::Threaded;
use crate::manifest::{MixedSettings, RunManifest, Warning, WarningKind};

#[derive(Debug, Parser)]
#[command(name = "cooproute", version, about = "Equilibria of routing games with cooperative users")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve one scenario and write its equilibria as CSV.
    Solve {
        #[command(flatten)]
        source: Source,
        #[command(flatten)]
        output: Output,
    },
    /// Sweep a parameter, write the table as CSV and report paradoxes.
    Sweep {
        #[command(flatten)]
        source: Source,
        /// Override how an alpha sweep assigns cooperation.
        #[arg(long, value_enum)]
        mode: Option<ModeArg>,
        /// Write the paradox report as JSON here instead of summarizing it
        /// on standard error.
        #[arg(long)]
        report: Option<PathBuf>,
        #[command(flatten)]
        output: Output,
    },
    /// Mixed group-versus-population equilibria over an alpha grid.
    Mixed {
        #[command(flatten)]
        source: Source,
        /// `start:stop:step`; defaults to the document's sweep or its alpha.
        #[arg(long, value_parser = parse_grid)]
        alpha_grid: Option<Grid>,
        /// Also emit rejected closed-form candidates and warn about every
        /// disagreement between the printed and derived formulas.
        #[arg(long)]
        case_audit: bool,
        #[command(flatten)]
        output: Output,
    },
    /// Check whether a flow profile is an equilibrium.
    Verify {
        #[command(flatten)]
        source: Source,
        /// JSON file: {"users": [{"id": 1, "paths": [{"links": [1], "flow": 2.0}]}]}.
        #[arg(long)]
        flows: PathBuf,
        /// Tolerance of the checks; defaults to the solver's.
        #[arg(long)]
        tol: Option<f64>,
    },
    /// List the named presets.
    Presets {
        /// Include variant presets.
        #[arg(long)]
        all: bool,
        /// Print the scenario document of one preset.
        #[arg(long)]
        show: Option<String>,
    },
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
pub struct Source {
    /// JSON scenario document.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Named preset.
    #[arg(long)]
    pub preset: Option<String>,
}

#[derive(Debug, Args)]
pub struct Output {
    /// Write the CSV here instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Write the run manifest as JSON here.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Symmetric,
    Asymmetric,
}

fn parse_grid(s: &str) -> Result<Grid, String> {
    let parts: Vec<&str> = s.split(':').collect();
    let [a, b, c] = parts[..] else {
        return Err("expected start:stop:step".into());
    };
    let num = |t: &str| t.trim().parse::<f64>().map_err(|e| format!("{t:?}: {e}"));
    let grid = Grid { start: num(a)?, stop: num(b)?, step: num(c)? };
    grid.values().map_err(|e| e.to_string())?;
    Ok(grid)
}

/// Why a command stopped.
#[derive(Debug, Clone, PartialEq)]
pub enum Failure {
    Output(String),
    Rejected(String),
    Config(String),
    Infeasible(String),
    NonConvergence(String),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Output(_) | Self::Rejected(_) => 1,
            Self::Config(_) => 2,
            Self::Infeasible(_) => 3,
            Self::NonConvergence(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            Self::Output(m) | Self::Rejected(m) | Self::Config(m) | Self::Infeasible(m) | Self::NonConvergence(m) => m,
        }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        match e {
            ConfigError::Infeasible(_) => Self::Infeasible(e.to_string()),
            _ => Self::Config(e.to_string()),
        }
    }
}

impl From<SolveError> for Failure {
    fn from(e: SolveError) -> Self {
        match &e {
            SolveError::Model(ModelError::Infeasible(_)) | SolveError::AllResponsesInfeasible { .. } => {
                Self::Infeasible(e.to_string())
            }
            SolveError::NoConvergence(_) | SolveError::NoEquilibrium(_) => Self::NonConvergence(e.to_string()),
            SolveError::Model(_) | SolveError::Config(_) => Self::Config(e.to_string()),
        }
    }
}

impl From<ExperimentError> for Failure {
    fn from(e: ExperimentError) -> Self {
        match &e {
            ExperimentError::Model(ModelError::Infeasible(_)) => Self::Infeasible(e.to_string()),
            ExperimentError::Mixed(cooproute_core::MixedError::Infeasible { .. }) => Self::Infeasible(e.to_string()),
            _ => Self::Config(e.to_string()),
        }
    }
}

/// Parses `args` (program name first), runs the command and returns the
/// exit code.
pub fn run_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(cli.command) {
        Ok(()) => 0,
        Err(f) => {
            eprintln!("error: {}", f.message());
            f.exit_code()
        }
    }
}

pub fn run(command: Command) -> Result<(), Failure> {
    match command {
        Command::Presets { all, show } => presets(all, show.as_deref()),
        Command::Solve { source, output } => solve(&source, &output),
        Command::Sweep { source, mode, report, output } => sweep(&source, mode, report.as_deref(), &output),
        Command::Mixed { source, alpha_grid, case_audit, output } => mixed(&source, alpha_grid, case_audit, &output),
        Command::Verify { source, flows, tol } => verify(&source, &flows, tol),
    }
}

struct Loaded {
    doc: Document,
    annotations: Vec<Annotation>,
    name: String,
}

fn load(source: &Source) -> Result<Loaded, Failure> {
    if let Some(name) = &source.preset {
        let p = preset(name)?;
        let doc = match p.kind {
            PresetKind::Sweep(spec) => Document::Sweep(spec),
            PresetKind::Mixed { scenario, grid } => Document::Mixed { scenario, grid: Some(grid) },
        };
        return Ok(Loaded { doc, annotations: p.annotations, name: name.clone() });
    }
    let path = source.config.as_ref().expect("clap requires a source");
    let text =
        std::fs::read_to_string(path).map_err(|e| Failure::Config(format!("cannot read {}: {e}", path.display())))?;
    Ok(Loaded { doc: crate::config::parse_document(&text)?, annotations: Vec::new(), name: path.display().to_string() })
}

fn threads() -> Result<Threaded, Failure> {
    Threaded::from_env().map_err(|e| Failure::Config(e.to_string()))
}

fn write_to(path: Option<&Path>, text: &str) -> Result<(), Failure> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| Failure::Output(format!("cannot write {}: {e}", p.display()))),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes()).and_then(|_| out.flush()).map_err(|e| Failure::Output(e.to_string()))
        }
    }
}

fn finish(manifest: &RunManifest, output: &Output) -> Result<(), Failure> {
    for w in &manifest.warnings {
        eprintln!("{w}");
    }
    if let Some(p) = &output.manifest {
        write_to(Some(p), &manifest.to_json())?;
    }
    Ok(())
}

fn presets(all: bool, show: Option<&str>) -> Result<(), Failure> {
    if let Some(name) = show {
        let p = preset(name)?;
        let doc = match &p.kind {
            PresetKind::Sweep(spec) => ConfigDoc::from_sweep(spec),
            PresetKind::Mixed { scenario, grid } => ConfigDoc::from_mixed(scenario, Some(*grid)),
        };
        for a in &p.annotations {
            eprintln!("assumed [{}]: {}", a.field, a.note);
        }
        return write_to(None, &(doc.to_json() + "\n"));
    }
    let extra: &[&str] = if all { &EXTRA_PRESETS } else { &[] };
    let mut text = String::new();
    for name in PRESET_NAMES.iter().chain(extra) {
        let summary = match preset(name) {
            Ok(p) => p.summary.to_string(),
            Err(e) => e.to_string(),
        };
        text.push_str(&format!("{name}\t{summary}\n"));
    }
    write_to(None, &text)
}

fn solve(source: &Source, output: &Output) -> Result<(), Failure> {
    let loaded = load(source)?;
    let scenario: Scenario = match loaded.doc {
        Document::Scenario(s) => s,
        Document::Sweep(spec) => spec.base,
        Document::Mixed { .. } => return Err(Failure::Config("mixed scenarios are solved by `mixed`".into())),
    };
    let exec = threads()?;
    let mut manifest = RunManifest::new("solve", &loaded.name, exec.threads());
    manifest.set_solver(&scenario.solver);
    manifest.annotations(&loaded.annotations);
    let set = manifest.time("solve", || scenario.solve_with(&exec))?;
    manifest.solver_events("scenario", &set);
    let links: Vec<_> = scenario.network.links().iter().map(|l| l.id).collect();
    let csv = emit_csv(&CsvTable::from_set(&set, scenario.users.len(), &links));
    write_to(output.out.as_deref(), &csv)?;
    finish(&manifest, output)
}

/// Runs a sweep and the paradox detector that fits its parameter.
pub fn sweep_and_detect<E: Executor>(
    spec: &SweepSpec,
    exec: &E,
) -> Result<(SweepTable, ParadoxReport), ExperimentError> {
    let table = parameter_sweep_with(spec, exec)?;
    let report = match table.param.resource_direction() {
        Some(dir) => detect_braess(&table, dir),
        None => detect_cooperation_paradox(&table, 0),
    };
    Ok((table, report))
}

fn sweep(source: &Source, mode: Option<ModeArg>, report: Option<&Path>, output: &Output) -> Result<(), Failure> {
    let loaded = load(source)?;
    let Document::Sweep(mut spec) = loaded.doc else {
        return Err(Failure::Config("the document has no sweep".into()));
    };
    if let Some(m) = mode {
        let SweepParam::Alpha(_) = spec.param else {
            return Err(Failure::Config("--mode applies to alpha sweeps only".into()));
        };
        spec.param = SweepParam::Alpha(match m {
            ModeArg::Symmetric => CoopMode::Symmetric,
            ModeArg::Asymmetric => CoopMode::Asymmetric,
        });
    }
    let exec = threads()?;
    let mut manifest = RunManifest::new("sweep", &loaded.name, exec.threads());
    manifest.set_solver(&spec.base.solver);
    manifest.annotations(&loaded.annotations);
    let (table, paradox) = manifest.time("sweep", || sweep_and_detect(&spec, &exec))?;
    manifest.sweep_events(&table);
    if paradox.discrepancy {
        manifest.warnings.push(Warning::new(
            WarningKind::ParadoxDiscrepancy,
            "cooperation paradox",
            "paradox witnessed although every grid point has a single equilibrium",
        ));
    }
    write_to(output.out.as_deref(), &emit_csv(&CsvTable::from_sweep(&table)))?;
    let doc = ReportDoc::new(&table, &paradox);
    match report {
        Some(p) => write_to(Some(p), &(serde_json::to_string_pretty(&doc).expect("serializable") + "\n"))?,
        None => eprint!("{}", doc.summary()),
    }
    finish(&manifest, output)?;
    let stalled = table.rows.iter().find_map(|r| match &r.outcome {
        Err(e @ (SolveError::NoConvergence(_) | SolveError::NoEquilibrium(_))) => {
            Some(format!("{}={}: {e}", table.param.name(), format_number(r.value)))
        }
        _ => None,
    });
    match stalled {
        Some(m) => Err(Failure::NonConvergence(m)),
        None => Ok(()),
    }
}

/// Serialized form of a paradox report.
#[derive(Debug, Clone, Serialize)]
pub struct ReportDoc {
    pub kind: &'static str,
    pub param: &'static str,
    /// Direction in which the parameter was read.
    pub direction: &'static str,
    pub multiplicity_in_sweep: bool,
    pub discrepancy: bool,
    pub witnesses: Vec<WitnessDoc>,
}

#[derive(Debug, Clone, Serialize)]
pub struct WitnessDoc {
    pub track: usize,
    pub from: f64,
    pub to: f64,
    pub via_birth: bool,
    pub points: Vec<WitnessPoint>,
    pub delta: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct WitnessPoint {
    pub param: f64,
    pub cluster: usize,
    pub costs: Vec<f64>,
}

impl ReportDoc {
    pub fn new(table: &SweepTable, r: &ParadoxReport) -> Self {
        Self {
            kind: r.kind.label(),
            param: table.param.name(),
            direction: match r.direction {
                Direction::Increasing => "increasing",
                Direction::Decreasing => "decreasing",
            },
            multiplicity_in_sweep: r.multiplicity_in_sweep,
            discrepancy: r.discrepancy,
            witnesses: r
                .witnesses
                .iter()
                .map(|w| WitnessDoc {
                    track: w.track,
                    from: w.interval.0,
                    to: w.interval.1,
                    via_birth: w.via_birth,
                    points: w
                        .points
                        .iter()
                        .zip(&w.costs)
                        .map(|(p, c)| WitnessPoint {
                            param: table.rows[p.row].value,
                            cluster: p.cluster,
                            costs: c.clone(),
                        })
                        .collect(),
                    delta: w.delta.clone(),
                })
                .collect(),
        }
    }

    pub fn summary(&self) -> String {
        let mut s = format!("{} paradox: {} witness(es)\n", self.kind, self.witnesses.len());
        for w in &self.witnesses {
            s.push_str(&format!(
                "  track {}: {} in [{}, {}]{}\n",
                w.track,
                self.param,
                format_number(w.from),
                format_number(w.to),
                if w.via_birth { " (new branch)" } else { "" }
            ));
        }
        s
    }
}

fn mixed(source: &Source, alpha_grid: Option<Grid>, audit: bool, output: &Output) -> Result<(), Failure> {
    let loaded = load(source)?;
    let Document::Mixed { scenario, grid } = loaded.doc else {
        return Err(Failure::Config("the document has no mixed scenario".into()));
    };
    let grid = alpha_grid.or(grid).unwrap_or(Grid { start: scenario.alpha, stop: scenario.alpha, step: 1.0 });
    let exec = threads()?;
    let cfg = MixedConfig::default();
    let mut manifest = RunManifest::new("mixed", &loaded.name, exec.threads());
    manifest.mixed_solver = Some(MixedSettings::from(&cfg));
    manifest.annotations(&loaded.annotations);
    let rows = manifest.time("mixed", || mixed_alpha_sweep(&scenario, grid, &cfg, &exec))?;
    manifest.mixed_events(&rows);
    if audit {
        let findings = manifest.time("case audit", || {
            exec.map(rows.len(), |k| case_audit(&scenario.with_alpha(rows[k].alpha), cfg.verify_tol, 1e-6))
        });
        for (row, found) in rows.iter().zip(findings) {
            for f in found.into_iter().flatten() {
                let what = match f.kind {
                    AuditKind::Rejected => "emits an unverified candidate",
                    AuditKind::Missed => "misses the verified solution",
                };
                manifest.warnings.push(Warning::new(
                    WarningKind::CaseAudit,
                    format!("alpha={}", format_number(row.alpha)),
                    format!(
                        "{} variant {what} ({}, {}) [{}]",
                        f.variant.label(),
                        format_number(f.x),
                        format_number(f.y),
                        f.case.label()
                    ),
                ));
            }
        }
    }
    write_to(output.out.as_deref(), &emit_mixed_csv(&scenario, &rows, audit))?;
    finish(&manifest, output)
}

/// Path flows of a profile to verify.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowsDoc {
    pub users: Vec<UserFlowsDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UserFlowsDoc {
    pub id: u32,
    pub paths: Vec<PathFlowDoc>,
}

/// Flow on the path given by its link ids in travel order; unlisted paths
/// carry nothing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathFlowDoc {
    pub links: Vec<u32>,
    pub flow: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub passed: bool,
    pub feasible: bool,
    pub kkt_residual: f64,
    pub dual_residual: f64,
    pub complementarity: f64,
    pub multipliers: Vec<f64>,
    pub deviation_gain: Vec<f64>,
    pub raw_costs: Vec<f64>,
    pub operating_costs: Vec<f64>,
}

fn verify(source: &Source, flows: &Path, tol: Option<f64>) -> Result<(), Failure> {
    let loaded = load(source)?;
    let scenario = match loaded.doc {
        Document::Scenario(s) => s,
        Document::Sweep(spec) => spec.base,
        Document::Mixed { .. } => return Err(Failure::Config("verify takes a routing scenario".into())),
    };
    let text =
        std::fs::read_to_string(flows).map_err(|e| Failure::Config(format!("cannot read {}: {e}", flows.display())))?;
    let doc: FlowsDoc =
        serde_json::from_str(&text).map_err(|e| Failure::Config(format!("{}: {e}", flows.display())))?;
    let game = scenario.game().map_err(SolveError::from)?;
    let mut path_flows = Vec::new();
    for (i, user) in game.users().iter().enumerate() {
        let entry = doc
            .users
            .iter()
            .find(|u| u.id == user.id.0)
            .ok_or_else(|| Failure::Config(format!("flows file has no entry for user {}", user.id)))?;
        let paths = game.paths().user(i);
        let mut x = vec![0.0; paths.len()];
        for p in &entry.paths {
            let k = paths
                .iter()
                .position(|q| q.link_ids(game.network()).iter().map(|l| l.0).eq(p.links.iter().copied()))
                .ok_or_else(|| Failure::Config(format!("user {} has no path {:?}", user.id, p.links)))?;
            x[k] += p.flow;
        }
        path_flows.push(x);
    }
    let profile = game.profile(path_flows).map_err(|e| Failure::Config(e.to_string()))?;
    let v = game.verify_nash(&profile, tol.unwrap_or(scenario.solver.verify_tol), scenario.solver.deviation_points);
    let costs = game.costs(&profile);
    let report = VerifyReport {
        passed: v.passed,
        feasible: v.feasible,
        kkt_residual: v.kkt_residual(),
        dual_residual: v.dual_residual,
        complementarity: v.complementarity,
        multipliers: v.multipliers.clone(),
        deviation_gain: v.deviation_gain.clone(),
        raw_costs: costs.raw,
        operating_costs: costs.operating,
    };
    write_to(None, &(serde_json::to_string_pretty(&report).expect("serializable") + "\n"))?;
    if v.passed {
        Ok(())
    } else {
        Err(Failure::Rejected("the profile is not an equilibrium".into()))
    }
}

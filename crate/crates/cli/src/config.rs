//! JSON scenario documents.
//!
//! A document describes one routing game, optionally with a sweep over one
//! parameter, or a mixed group-versus-population scenario. Parsing is strict:
//! unknown keys are errors.

use serde::{Deserialize, Serialize};

use cooproute_core::experiments::{CoopMode, Grid, Scenario, SweepParam, SweepSpec};
use cooproute_core::mixed::MixedScenario;
use cooproute_core::network::{LinkMultiplicity, LinkSpec};
use cooproute_core::{
    CooperationProfile, CostSpec, ExperimentError, LinkId, MixedError, ModelError, Network, NodeId, SolverConfig,
    UserSpec,
};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConfigError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error("{field}: {message}")]
    Semantic { field: String, message: String },
    #[error("infeasible: {0}")]
    Infeasible(String),
}

fn semantic(field: impl Into<String>, message: impl Into<String>) -> ConfigError {
    ConfigError::Semantic { field: field.into(), message: message.into() }
}

fn from_model(field: &str, e: ModelError) -> ConfigError {
    match e {
        ModelError::Infeasible(msg) => ConfigError::Infeasible(msg),
        other => semantic(field, other.to_string()),
    }
}

fn from_experiment(field: &str, e: ExperimentError) -> ConfigError {
    match e {
        ExperimentError::Model(m) => from_model(field, m),
        ExperimentError::Mixed(m) => from_mixed(field, m),
        other => semantic(field, other.to_string()),
    }
}

fn from_mixed(field: &str, e: MixedError) -> ConfigError {
    match e {
        MixedError::Infeasible { .. } | MixedError::NoFeasibleSplit => ConfigError::Infeasible(e.to_string()),
        other => semantic(field, other.to_string()),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Topology {
    /// Parallel links between one origin and one destination.
    Parallel,
    /// Nodes 1, 2, 3 with direct links l1: 1->3, l2: 2->3 and cross links
    /// l3: 1->2, l4: 2->1; user 1 ships from node 1, user 2 from node 2.
    LoadBalancing,
    Custom,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigDoc {
    pub topology: Topology,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub links: Vec<LinkDoc>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub users: Vec<UserDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solver: Option<SolverDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mixed: Option<MixedDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkDoc {
    pub id: u32,
    pub from: u32,
    pub to: u32,
    pub cost: CostDoc,
}

/// `T(f) = a f + g` or `T(f) = 1 / (capacity - f)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum CostDoc {
    Linear { a: f64, g: f64 },
    Mm1 { capacity: f64 },
}

impl From<CostDoc> for CostSpec {
    fn from(c: CostDoc) -> Self {
        match c {
            CostDoc::Linear { a, g } => CostSpec::linear(a, g),
            CostDoc::Mm1 { capacity } => CostSpec::mm1(capacity),
        }
    }
}

impl From<CostSpec> for CostDoc {
    fn from(c: CostSpec) -> Self {
        match c {
            CostSpec::Linear { slope, intercept } => CostDoc::Linear { a: slope, g: intercept },
            CostSpec::Mm1 { capacity } => CostDoc::Mm1 { capacity },
        }
    }
}

/// A user gives either a scalar degree of cooperation `alpha`, spread
/// evenly over the other users, or a full row of cooperation weights.
/// Neither means selfish.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UserDoc {
    pub id: u32,
    pub source: u32,
    pub dest: u32,
    pub demand: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta_row: Option<Vec<f64>>,
}

/// Overrides of the solver defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub br_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fixed_point_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_sweeps: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid_density: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cluster_radius: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verify_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub deviation_points: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bracket_points: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bracketing: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path_cap: Option<usize>,
}

macro_rules! solver_fields {
    ($m:ident) => {
        $m!(
            br_tol,
            fixed_point_tol,
            max_sweeps,
            grid_density,
            cluster_radius,
            verify_tol,
            deviation_points,
            bracket_points,
            bracketing,
            path_cap
        )
    };
}

impl SolverDoc {
    pub fn resolve(&self) -> SolverConfig {
        let mut cfg = SolverConfig::default();
        macro_rules! apply {
            ($($f:ident),*) => { $( if let Some(v) = self.$f { cfg.$f = v; } )* };
        }
        solver_fields!(apply);
        cfg
    }

    /// Records the fields that differ from the defaults.
    pub fn from_config(cfg: &SolverConfig) -> Self {
        let base = SolverConfig::default();
        let mut doc = Self::default();
        macro_rules! diff {
            ($($f:ident),*) => { $( if cfg.$f != base.$f { doc.$f = Some(cfg.$f); } )* };
        }
        solver_fields!(diff);
        doc
    }

    /// Every field set, for reporting the resolved configuration.
    pub fn full(cfg: &SolverConfig) -> Self {
        let mut doc = Self::default();
        macro_rules! all {
            ($($f:ident),*) => { $( doc.$f = Some(cfg.$f); )* };
        }
        solver_fields!(all);
        doc
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ParamDoc {
    Alpha,
    Slope,
    Capacity,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModeDoc {
    Symmetric,
    Asymmetric,
}

impl From<ModeDoc> for CoopMode {
    fn from(m: ModeDoc) -> Self {
        match m {
            ModeDoc::Symmetric => CoopMode::Symmetric,
            ModeDoc::Asymmetric => CoopMode::Asymmetric,
        }
    }
}

impl From<CoopMode> for ModeDoc {
    fn from(m: CoopMode) -> Self {
        match m {
            CoopMode::Symmetric => ModeDoc::Symmetric,
            CoopMode::Asymmetric => ModeDoc::Asymmetric,
        }
    }
}

/// `from:to:step` over `param`. Alpha sweeps take a `mode` (default
/// asymmetric); slope and capacity sweeps list the links they change.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepDoc {
    pub param: ParamDoc,
    pub from: f64,
    pub to: f64,
    pub step: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<ModeDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub links: Option<Vec<u32>>,
}

impl SweepDoc {
    fn grid(&self) -> Grid {
        Grid { start: self.from, stop: self.to, step: self.step }
    }
}

/// Group user with demand `r1` and degree `alpha` against a Wardrop
/// population of mass `r2` on two parallel M/M/1 links.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MixedDoc {
    pub c1: f64,
    pub c2: f64,
    pub r1: f64,
    pub r2: f64,
    pub alpha: f64,
}

/// A validated document.
#[derive(Debug, Clone, PartialEq)]
pub enum Document {
    Scenario(Scenario),
    Sweep(SweepSpec),
    Mixed { scenario: MixedScenario, grid: Option<Grid> },
}

/// Parses and validates a JSON document.
pub fn parse_document(text: &str) -> Result<Document, ConfigError> {
    ConfigDoc::from_json(text)?.resolve()
}

const LOAD_BALANCING_LINKS: [(u32, u32, u32); 4] = [(1, 1, 3), (2, 2, 3), (3, 1, 2), (4, 2, 1)];
const LOAD_BALANCING_USERS: [(u32, u32); 2] = [(1, 3), (2, 3)];

impl ConfigDoc {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        serde_json::from_str(text).map_err(|e| {
            use serde_json::error::Category;
            match e.classify() {
                Category::Data => semantic("document", e.to_string()),
                _ => ConfigError::Syntax { line: e.line(), column: e.column(), message: e.to_string() },
            }
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("documents contain only serializable values")
    }

    pub fn resolve(&self) -> Result<Document, ConfigError> {
        if let Some(mixed) = &self.mixed {
            return self.resolve_mixed(mixed);
        }
        let base = self.resolve_scenario()?;
        let Some(sweep) = &self.sweep else {
            return Ok(Document::Scenario(base));
        };
        let ids = |field: &str| -> Result<Vec<LinkId>, ConfigError> {
            match &sweep.links {
                Some(l) if !l.is_empty() => Ok(l.iter().map(|&i| LinkId(i)).collect()),
                _ => Err(semantic(field, "slope and capacity sweeps need a nonempty link list")),
            }
        };
        let param = match sweep.param {
            ParamDoc::Alpha => {
                if sweep.links.is_some() {
                    return Err(semantic("sweep.links", "alpha sweeps take no link list"));
                }
                SweepParam::Alpha(sweep.mode.unwrap_or(ModeDoc::Asymmetric).into())
            }
            ParamDoc::Slope | ParamDoc::Capacity if sweep.mode.is_some() => {
                return Err(semantic("sweep.mode", "mode only applies to alpha sweeps"));
            }
            ParamDoc::Slope => SweepParam::LinearSlope(ids("sweep.links")?),
            ParamDoc::Capacity => SweepParam::Capacity(ids("sweep.links")?),
        };
        let spec = SweepSpec { param, grid: sweep.grid(), base };
        spec.validate().map_err(|e| from_experiment("sweep", e))?;
        Ok(Document::Sweep(spec))
    }

    fn resolve_mixed(&self, m: &MixedDoc) -> Result<Document, ConfigError> {
        if self.topology != Topology::Parallel {
            return Err(semantic("topology", "mixed scenarios use the parallel topology"));
        }
        if !self.links.is_empty() || !self.users.is_empty() {
            return Err(semantic("mixed", "mixed scenarios take no links or users"));
        }
        if self.solver.is_some() {
            return Err(semantic("solver", "mixed scenarios use the mixed solver defaults"));
        }
        let grid = match &self.sweep {
            None => None,
            Some(s) if s.param == ParamDoc::Alpha && s.mode.is_none() && s.links.is_none() => Some(s.grid()),
            Some(_) => return Err(semantic("sweep", "mixed scenarios sweep alpha only")),
        };
        if m.r1 < 0.0 || m.r2 < 0.0 {
            return Err(semantic("mixed", "demand must be nonnegative"));
        }
        let scenario = MixedScenario::new(m.c1, m.c2, m.r1, m.r2, m.alpha).map_err(|e| from_mixed("mixed", e))?;
        if let Some(g) = grid {
            let v = g.values().map_err(|e| from_experiment("sweep", e))?;
            if v.first().is_some_and(|a| *a < 0.0) || v.last().is_some_and(|a| *a > 1.0) {
                return Err(semantic("sweep", "alpha grid must lie in [0, 1]"));
            }
        }
        Ok(Document::Mixed { scenario, grid })
    }

    fn resolve_scenario(&self) -> Result<Scenario, ConfigError> {
        if self.links.is_empty() {
            return Err(semantic("links", "at least one link is required"));
        }
        if self.users.is_empty() {
            return Err(semantic("users", "at least one user is required"));
        }
        for (k, u) in self.users.iter().enumerate() {
            if !u.demand.is_finite() || u.demand < 0.0 {
                return Err(semantic(format!("users[{k}].demand"), "demand must be nonnegative"));
            }
            if let Some(a) = u.alpha {
                if !(0.0..=1.0).contains(&a) {
                    return Err(semantic(format!("users[{k}].alpha"), "alpha must lie in [0, 1]"));
                }
                if u.beta_row.is_some() {
                    return Err(semantic(format!("users[{k}]"), "give either alpha or beta_row, not both"));
                }
            }
        }
        self.check_topology()?;

        let specs: Vec<LinkSpec> =
            self.links.iter().map(|l| LinkSpec::new(l.id, l.from, l.to, l.cost.into())).collect();
        let mut nodes: Vec<NodeId> = specs.iter().flat_map(|l| [l.from, l.to]).collect();
        nodes.sort();
        nodes.dedup();
        let multiplicity = match self.topology {
            Topology::Parallel => LinkMultiplicity::Parallel,
            _ => LinkMultiplicity::Single,
        };
        let network = Network::with_multiplicity(nodes, specs, multiplicity).map_err(|e| from_model("links", e))?;
        let users: Vec<UserSpec> = self.users.iter().map(|u| UserSpec::new(u.id, u.source, u.dest, u.demand)).collect();

        let alphas: Vec<f64> = self.users.iter().map(|u| u.alpha.unwrap_or(0.0)).collect();
        let uniform = CooperationProfile::uniform(&alphas).map_err(|e| from_model("users", e))?;
        let cooperation = if self.users.iter().any(|u| u.beta_row.is_some()) {
            let rows = self
                .users
                .iter()
                .enumerate()
                .map(|(k, u)| u.beta_row.clone().unwrap_or_else(|| uniform.row(k).to_vec()))
                .collect();
            CooperationProfile::from_rows(rows).map_err(|e| from_model("users.beta_row", e))?
        } else {
            uniform
        };

        let solver = self.solver.clone().unwrap_or_default().resolve();
        solver.validate().map_err(|e| semantic("solver", e.to_string()))?;
        Scenario::new(network, users, cooperation, solver).map_err(|e| from_model("users", e))
    }

    fn check_topology(&self) -> Result<(), ConfigError> {
        match self.topology {
            Topology::Custom => Ok(()),
            Topology::Parallel => {
                let (from, to) = (self.links[0].from, self.links[0].to);
                if self.links.iter().any(|l| (l.from, l.to) != (from, to)) {
                    return Err(semantic("links", "parallel links must share their endpoints"));
                }
                if self.users.iter().any(|u| (u.source, u.dest) != (from, to)) {
                    return Err(semantic("users", "users of parallel links ship between the link endpoints"));
                }
                Ok(())
            }
            Topology::LoadBalancing => {
                let mut links: Vec<(u32, u32, u32)> = self.links.iter().map(|l| (l.id, l.from, l.to)).collect();
                links.sort();
                if links != LOAD_BALANCING_LINKS {
                    return Err(semantic("links", "load_balancing expects links 1: 1->3, 2: 2->3, 3: 1->2, 4: 2->1"));
                }
                let users: Vec<(u32, u32)> = self.users.iter().map(|u| (u.source, u.dest)).collect();
                if users != LOAD_BALANCING_USERS {
                    return Err(semantic("users", "load_balancing expects users 1->3 and 2->3, in that order"));
                }
                Ok(())
            }
        }
    }

    /// Document describing `s`; resolving it gives back `s`.
    pub fn from_scenario(s: &Scenario) -> Self {
        let links: Vec<LinkDoc> = s
            .network
            .links()
            .iter()
            .map(|l| LinkDoc { id: l.id.0, from: l.from.0, to: l.to.0, cost: l.cost.into() })
            .collect();
        let degrees: Vec<f64> = (0..s.users.len()).map(|i| s.cooperation.degree(i)).collect();
        let uniform = CooperationProfile::uniform(&degrees).ok().filter(|u| *u == s.cooperation);
        let users = s
            .users
            .iter()
            .enumerate()
            .map(|(k, u)| UserDoc {
                id: u.id.0,
                source: u.source.0,
                dest: u.dest.0,
                demand: u.demand,
                alpha: uniform.as_ref().map(|_| degrees[k]).filter(|a| *a != 0.0),
                beta_row: match uniform {
                    Some(_) => None,
                    None => Some(s.cooperation.row(k).to_vec()),
                },
            })
            .collect();
        let solver = Some(SolverDoc::from_config(&s.solver)).filter(|d| *d != SolverDoc::default());
        let mut doc = Self { topology: Topology::Custom, links, users, solver, sweep: None, mixed: None };
        doc.topology = if s.network.multiplicity() == LinkMultiplicity::Parallel {
            Topology::Parallel
        } else {
            Topology::LoadBalancing
        };
        if doc.check_topology().is_err() {
            doc.topology = Topology::Custom;
        }
        doc
    }

    pub fn from_sweep(spec: &SweepSpec) -> Self {
        let mut doc = Self::from_scenario(&spec.base);
        let (param, mode, links) = match &spec.param {
            SweepParam::Alpha(m) => (ParamDoc::Alpha, Some((*m).into()), None),
            SweepParam::LinearSlope(l) => (ParamDoc::Slope, None, Some(l.iter().map(|i| i.0).collect())),
            SweepParam::Capacity(l) => (ParamDoc::Capacity, None, Some(l.iter().map(|i| i.0).collect())),
        };
        let g = spec.grid;
        doc.sweep = Some(SweepDoc { param, from: g.start, to: g.stop, step: g.step, mode, links });
        doc
    }

    pub fn from_mixed(s: &MixedScenario, grid: Option<Grid>) -> Self {
        Self {
            topology: Topology::Parallel,
            links: Vec::new(),
            users: Vec::new(),
            solver: None,
            sweep: grid.map(|g| SweepDoc {
                param: ParamDoc::Alpha,
                from: g.start,
                to: g.stop,
                step: g.step,
                mode: None,
                links: None,
            }),
            mixed: Some(MixedDoc { c1: s.c1, c2: s.c2, r1: s.r1, r2: s.r2, alpha: s.alpha }),
        }
    }
}

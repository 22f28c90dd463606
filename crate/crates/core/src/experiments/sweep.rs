use alloc::vec;
use alloc::vec::Vec;

use super::{CoopMode, Scenario};
use crate::cost::{CooperationProfile, CostSpec};
use crate::error::{ExperimentError, MixedError, SolveError};
use crate::mixed::{mixed_closed_form, mixed_numeric, ClosedForm, MixedConfig, MixedNumeric, MixedScenario, Variant};
use crate::nash::{EquilibriumSet, Executor, Sequential};
use crate::network::LinkId;
use crate::num::linspace;

/// Largest sup-norm flow distance at which clusters at adjacent grid points
/// are treated as the same equilibrium branch.
pub const CONTINUATION_RADIUS: f64 = 0.1;

/// `start, start + step, ..., stop`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl Grid {
    /// Grid values. When the step divides the range, points are computed as
    /// fractions of the range so that `0:1:0.01` gives exactly `0.07`, not
    /// `7 * 0.01`.
    pub fn values(&self) -> Result<Vec<f64>, ExperimentError> {
        let Grid { start, stop, step } = *self;
        if !(start.is_finite() && stop.is_finite() && step.is_finite()) {
            return Err(ExperimentError::Grid("bounds and step must be finite"));
        }
        if step <= 0.0 {
            return Err(ExperimentError::Grid("step must be positive"));
        }
        if stop < start {
            return Err(ExperimentError::Grid("stop must not be below start"));
        }
        let span = (stop - start) / step;
        if span > 1e6 {
            return Err(ExperimentError::Grid("too many grid points"));
        }
        let whole = libm::round(span);
        if (span - whole).abs() <= 1e-9 * whole.max(1.0) {
            return Ok(linspace(start, stop, whole as usize + 1));
        }
        let n = libm::floor(span) as usize + 1;
        Ok((0..n).map(|k| start + k as f64 * step).collect())
    }
}

/// Which way a parameter moves when the network gains resources.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Increasing,
    Decreasing,
}

/// The swept quantity.
#[derive(Debug, Clone, PartialEq)]
pub enum SweepParam {
    /// Scalar degree of cooperation.
    Alpha(CoopMode),
    /// Slope of the listed linear links.
    LinearSlope(Vec<LinkId>),
    /// Capacity of the listed M/M/1 links.
    Capacity(Vec<LinkId>),
}

impl SweepParam {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Alpha(_) => "alpha",
            Self::LinearSlope(_) => "slope",
            Self::Capacity(_) => "capacity",
        }
    }

    /// Direction in which the parameter adds resources; `None` for alpha.
    pub fn resource_direction(&self) -> Option<Direction> {
        match self {
            Self::Alpha(_) => None,
            Self::LinearSlope(_) => Some(Direction::Decreasing),
            Self::Capacity(_) => Some(Direction::Increasing),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub param: SweepParam,
    pub grid: Grid,
    pub base: Scenario,
}

impl SweepSpec {
    /// Checks that the parameter applies to the base scenario.
    pub fn validate(&self) -> Result<(), ExperimentError> {
        self.grid.values()?;
        let links = match &self.param {
            SweepParam::Alpha(_) => {
                let g = self.grid;
                if g.start < 0.0 || g.stop > 1.0 {
                    return Err(ExperimentError::Grid("alpha grid must lie in [0, 1]"));
                }
                return Ok(());
            }
            SweepParam::LinearSlope(l) | SweepParam::Capacity(l) => l,
        };
        if links.is_empty() {
            return Err(ExperimentError::Parameter("no links selected"));
        }
        for id in links {
            let idx =
                self.base.network.link_index(*id).ok_or(ExperimentError::Model(crate::ModelError::UnknownLink(*id)))?;
            let cost = self.base.network.links()[idx].cost;
            match (&self.param, cost) {
                (SweepParam::LinearSlope(_), CostSpec::Linear { .. })
                | (SweepParam::Capacity(_), CostSpec::Mm1 { .. }) => {}
                (SweepParam::LinearSlope(_), _) => {
                    return Err(ExperimentError::Parameter("slope sweep needs linear links"))
                }
                _ => return Err(ExperimentError::Parameter("capacity sweep needs M/M/1 links")),
            }
        }
        Ok(())
    }

    /// The base scenario with the parameter set to `value`.
    pub fn scenario_at(&self, value: f64) -> Result<Scenario, ExperimentError> {
        let base = &self.base;
        match &self.param {
            SweepParam::Alpha(mode) => {
                let degrees = mode.degrees(value, base.users.len());
                Ok(base.with_cooperation(CooperationProfile::uniform(&degrees)?))
            }
            SweepParam::LinearSlope(links) | SweepParam::Capacity(links) => {
                let mut net = base.network.clone();
                for id in links {
                    let idx = net.link_index(*id).ok_or(crate::ModelError::UnknownLink(*id))?;
                    let cost = match net.links()[idx].cost {
                        CostSpec::Linear { intercept, .. } => CostSpec::Linear { slope: value, intercept },
                        CostSpec::Mm1 { .. } => CostSpec::Mm1 { capacity: value },
                    };
                    net = net.with_link_cost(*id, cost)?;
                }
                Ok(Scenario::new(net, base.users.clone(), base.cooperation.clone(), base.solver.clone())?)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub value: f64,
    pub outcome: Result<EquilibriumSet, SolveError>,
}

/// One grid point and cluster of a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct TrackPoint {
    pub row: usize,
    pub cluster: usize,
}

/// An equilibrium branch followed across grid points.
#[derive(Debug, Clone, PartialEq)]
pub struct Track {
    pub id: usize,
    /// Nearest cluster at the preceding grid point when the branch appears
    /// there without a continuation.
    pub parent: Option<TrackPoint>,
    pub points: Vec<TrackPoint>,
}

/// Branches of a sweep, built in forward or reverse grid order.
#[derive(Debug, Clone, PartialEq)]
pub struct Tracks {
    pub tracks: Vec<Track>,
    /// `index[row][cluster]` is the track id.
    pub index: Vec<Vec<usize>>,
    pub reversed: bool,
}

impl Tracks {
    /// Greedy nearest-flow continuation: pairs of clusters at adjacent grid
    /// points are matched in order of increasing distance while within
    /// [`CONTINUATION_RADIUS`].
    pub fn build(rows: &[SweepRow], reversed: bool) -> Self {
        let mut order: Vec<usize> = (0..rows.len()).collect();
        if reversed {
            order.reverse();
        }
        let mut tracks: Vec<Track> = Vec::new();
        let mut index: Vec<Vec<usize>> = vec![Vec::new(); rows.len()];
        let mut prev: Option<usize> = None;
        for &row in &order {
            let Ok(set) = &rows[row].outcome else {
                prev = None;
                continue;
            };
            let n = set.equilibria.len();
            let mut assigned: Vec<Option<usize>> = vec![None; n];
            let mut parents: Vec<Option<TrackPoint>> = vec![None; n];
            if let Some(p) = prev {
                let Ok(before) = &rows[p].outcome else { unreachable!() };
                let mut pairs = Vec::new();
                for (j, a) in before.equilibria.iter().enumerate() {
                    for (k, b) in set.equilibria.iter().enumerate() {
                        pairs.push((a.profile.distance(&b.profile), j, k));
                    }
                }
                pairs.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2)));
                let mut used = vec![false; before.equilibria.len()];
                for &(d, j, k) in &pairs {
                    if d <= CONTINUATION_RADIUS && !used[j] && assigned[k].is_none() {
                        used[j] = true;
                        assigned[k] = Some(index[p][j]);
                    }
                }
                for k in 0..n {
                    if assigned[k].is_none() {
                        parents[k] = pairs
                            .iter()
                            .find(|&&(_, _, kk)| kk == k)
                            .map(|&(_, j, _)| TrackPoint { row: p, cluster: j });
                    }
                }
            }
            let mut ids = Vec::with_capacity(n);
            for k in 0..n {
                let point = TrackPoint { row, cluster: k };
                let id = match assigned[k] {
                    Some(id) => {
                        tracks[id].points.push(point);
                        id
                    }
                    None => {
                        let id = tracks.len();
                        tracks.push(Track { id, parent: parents[k], points: vec![point] });
                        id
                    }
                };
                ids.push(id);
            }
            index[row] = ids;
            prev = Some(row);
        }
        Self { tracks, index, reversed }
    }
}

/// Flattened view of one cluster at one grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct FlatRow {
    pub param: f64,
    pub cluster: usize,
    pub basin: usize,
    pub raw: Vec<f64>,
    pub operating: Vec<f64>,
    /// Per-user link flows.
    pub flows: Vec<Vec<f64>>,
}

/// Equilibrium sets over a parameter grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepTable {
    pub param: SweepParam,
    pub rows: Vec<SweepRow>,
    pub users: usize,
    pub links: Vec<LinkId>,
    /// Branches in grid order; cluster indices within a row follow the
    /// equilibrium set order.
    pub tracks: Tracks,
}

impl SweepTable {
    pub fn new(param: SweepParam, rows: Vec<SweepRow>, users: usize, links: Vec<LinkId>) -> Self {
        let tracks = Tracks::build(&rows, false);
        Self { param, rows, users, links, tracks }
    }

    pub fn flat(&self) -> Vec<FlatRow> {
        let mut out = Vec::new();
        for row in &self.rows {
            let Ok(set) = &row.outcome else { continue };
            for (k, e) in set.equilibria.iter().enumerate() {
                out.push(FlatRow {
                    param: row.value,
                    cluster: k,
                    basin: e.basin,
                    raw: e.costs.raw.clone(),
                    operating: e.costs.operating.clone(),
                    flows: e.profile.user_link_flows().to_vec(),
                });
            }
        }
        out
    }

    pub fn cluster(&self, p: TrackPoint) -> Option<&crate::nash::EquilibriumResult> {
        self.rows.get(p.row)?.outcome.as_ref().ok()?.equilibria.get(p.cluster)
    }

    pub fn max_clusters(&self) -> usize {
        self.rows.iter().filter_map(|r| r.outcome.as_ref().ok()).map(|s| s.len()).max().unwrap_or(0)
    }
}

pub fn parameter_sweep(spec: &SweepSpec) -> Result<SweepTable, ExperimentError> {
    parameter_sweep_with(spec, &Sequential)
}

/// Solves every grid point; grid points may run concurrently through
/// `exec`. Per-point failures are recorded in the table.
pub fn parameter_sweep_with<E: Executor>(spec: &SweepSpec, exec: &E) -> Result<SweepTable, ExperimentError> {
    spec.validate()?;
    let values = spec.grid.values()?;
    let rows = exec.map(values.len(), |k| {
        let outcome = match spec.scenario_at(values[k]) {
            Ok(s) => s.solve_with(&Sequential),
            Err(ExperimentError::Model(e)) => Err(SolveError::Model(e)),
            Err(_) => Err(SolveError::Config("sweep parameter does not apply")),
        };
        SweepRow { value: values[k], outcome }
    });
    let links = spec.base.network.links().iter().map(|l| l.id).collect();
    Ok(SweepTable::new(spec.param.clone(), rows, spec.base.users.len(), links))
}

/// Sweeps the scalar degree of cooperation.
pub fn alpha_sweep<E: Executor>(
    base: &Scenario,
    mode: CoopMode,
    grid: Grid,
    exec: &E,
) -> Result<SweepTable, ExperimentError> {
    let spec = SweepSpec { param: SweepParam::Alpha(mode), grid, base: base.clone() };
    parameter_sweep_with(&spec, exec)
}

/// One alpha of a mixed sweep: the numerical solutions and every
/// closed-form variant.
#[derive(Debug, Clone, PartialEq)]
pub struct MixedSweepRow {
    pub alpha: f64,
    pub numeric: Result<MixedNumeric, MixedError>,
    pub closed: Vec<ClosedForm>,
}

pub fn mixed_alpha_sweep<E: Executor>(
    base: &MixedScenario,
    grid: Grid,
    cfg: &MixedConfig,
    exec: &E,
) -> Result<Vec<MixedSweepRow>, ExperimentError> {
    let values = grid.values()?;
    if values.first().is_some_and(|a| *a < 0.0) || values.last().is_some_and(|a| *a > 1.0) {
        return Err(ExperimentError::Grid("alpha grid must lie in [0, 1]"));
    }
    Ok(exec.map(values.len(), |k| {
        let s = base.with_alpha(values[k]);
        MixedSweepRow {
            alpha: values[k],
            numeric: mixed_numeric(&s, cfg),
            closed: Variant::ALL.iter().filter_map(|v| mixed_closed_form(&s, *v, cfg.verify_tol).ok()).collect(),
        }
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_values() {
        let v = Grid { start: 0.0, stop: 1.0, step: 0.01 }.values().unwrap();
        assert_eq!(v.len(), 101);
        assert_eq!(v[7], 0.07);
        assert_eq!(v[100], 1.0);
        let v = Grid { start: 0.0, stop: 1.0, step: 0.3 }.values().unwrap();
        assert_eq!(v.len(), 4);
        assert!(Grid { start: 1.0, stop: 0.0, step: 0.1 }.values().is_err());
        assert!(Grid { start: 0.0, stop: 1.0, step: 0.0 }.values().is_err());
        assert_eq!(Grid { start: 2.0, stop: 2.0, step: 1.0 }.values().unwrap(), [2.0]);
    }
}

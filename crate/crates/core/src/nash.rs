//! Nash equilibria of the cooperation-weighted routing game.
//!
//! Each user's operating cost is convex in its own path flows, so a best
//! response is a one-dimensional root find for two-path users and a pairwise
//! mass-shifting scheme otherwise. Equilibria are collected by Gauss-Seidel
//! best-response dynamics from a grid of starts. For two-user games the
//! unstable equilibria, which dynamics can never land on, are located
//! directly as roots of the composed best-response map. Every reported
//! equilibrium is verified through its Kuhn-Tucker conditions and a grid of
//! unilateral deviations.

use alloc::boxed::Box;
use alloc::vec;
use alloc::vec::Vec;

use crate::cost::{blend, CooperationProfile, CostReport};
use crate::error::{ModelError, NonConvergence, SolveError};
use crate::network::{
    check_capacity, validate_users, FlowProfile, LinkId, Network, PathSet, UserSpec, DEFAULT_PATH_CAP,
};
use crate::num::{bisect_increasing, linspace, scan_roots, sup_dist};

/// Tunable tolerances and budgets of the equilibrium search.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    /// Optimality gap (in operating cost) accepted from an iterative best
    /// response on users with more than two paths.
    pub br_tol: f64,
    /// Sup-norm change in path flows below which dynamics stop.
    pub fixed_point_tol: f64,
    pub max_sweeps: usize,
    /// Number of start values per two-path user split.
    pub grid_density: usize,
    /// Sup-norm radius on per-user link flows identifying one equilibrium.
    pub cluster_radius: f64,
    /// Tolerance of the Kuhn-Tucker and deviation checks.
    pub verify_tol: f64,
    /// Grid points per deviation segment.
    pub deviation_points: usize,
    /// Grid points used to bracket roots of the composed best response.
    pub bracket_points: usize,
    /// Whether to search for unstable equilibria of two-user games.
    pub bracketing: bool,
    pub path_cap: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            br_tol: 1e-10,
            fixed_point_tol: 1e-8,
            max_sweeps: 10_000,
            grid_density: 21,
            cluster_radius: 1e-4,
            verify_tol: 1e-6,
            deviation_points: 1001,
            bracket_points: 201,
            bracketing: true,
            path_cap: DEFAULT_PATH_CAP,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<(), SolveError> {
        let positive = |x: f64| x > 0.0 && x.is_finite();
        if !positive(self.br_tol) {
            return Err(SolveError::Config("br_tol must be positive"));
        }
        if !positive(self.fixed_point_tol) {
            return Err(SolveError::Config("fixed_point_tol must be positive"));
        }
        if !positive(self.cluster_radius) {
            return Err(SolveError::Config("cluster_radius must be positive"));
        }
        if !positive(self.verify_tol) {
            return Err(SolveError::Config("verify_tol must be positive"));
        }
        if self.max_sweeps == 0 {
            return Err(SolveError::Config("max_sweeps must be positive"));
        }
        if self.grid_density < 2 {
            return Err(SolveError::Config("grid_density must be at least 2"));
        }
        if self.deviation_points < 2 || self.bracket_points < 2 {
            return Err(SolveError::Config("deviation and bracket grids need at least 2 points"));
        }
        if self.path_cap == 0 {
            return Err(SolveError::Config("path_cap must be positive"));
        }
        Ok(())
    }
}

/// Runs independent jobs. The core crate only ships the sequential runner;
/// the order of the returned vector must match the job indices.
pub trait Executor: Sync {
    fn map<R, F>(&self, jobs: usize, f: F) -> Vec<R>
    where
        R: Send,
        F: Fn(usize) -> R + Sync;
}

/// Runs jobs one after another on the calling thread.
#[derive(Debug, Clone, Copy, Default)]
pub struct Sequential;

impl Executor for Sequential {
    fn map<R, F>(&self, jobs: usize, f: F) -> Vec<R>
    where
        R: Send,
        F: Fn(usize) -> R + Sync,
    {
        (0..jobs).map(f).collect()
    }
}

/// Outcome of [`RoutingGame::verify_nash`].
#[derive(Debug, Clone, PartialEq)]
pub struct Verification {
    /// Kuhn-Tucker multiplier estimate per user: the least path marginal
    /// over the paths it uses.
    pub multipliers: Vec<f64>,
    /// Largest `max(lambda - m_p, 0)` over users and paths.
    pub dual_residual: f64,
    /// Largest `|x_p (m_p - lambda)|` over users and paths.
    pub complementarity: f64,
    /// Largest operating-cost improvement found on the deviation grid, per user.
    pub deviation_gain: Vec<f64>,
    /// Every M/M/1 link strictly below capacity.
    pub feasible: bool,
    pub passed: bool,
}

impl Verification {
    pub fn kkt_residual(&self) -> f64 {
        self.dual_residual.max(self.complementarity)
    }

    pub fn max_deviation_gain(&self) -> f64 {
        self.deviation_gain.iter().fold(0.0, |m, g| m.max(*g))
    }
}

/// How an equilibrium was first found.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Discovery {
    Dynamics,
    /// Root of the composed best-response map; possibly unstable.
    Bracketing,
}

/// A verified equilibrium.
#[derive(Debug, Clone, PartialEq)]
pub struct EquilibriumResult {
    pub profile: FlowProfile,
    pub costs: CostReport,
    pub verification: Verification,
    /// Number of dynamics starts that converged into this cluster. Zero
    /// means no start was attracted, which marks an unstable equilibrium.
    pub basin: usize,
    /// Fewest sweeps any start of the cluster needed.
    pub sweeps: usize,
    /// Largest sup-norm distance between two members of the cluster.
    pub diameter: f64,
    pub discovery: Discovery,
}

impl EquilibriumResult {
    pub fn kkt_residual(&self) -> f64 {
        self.verification.kkt_residual()
    }
}

/// Diagnostics of a multi-start run.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Diagnostics {
    pub starts: usize,
    pub non_converged: usize,
    /// Starts abandoned because some user had no finite-cost response.
    pub infeasible_starts: usize,
    pub bracket_roots: usize,
    /// Clusters whose representative failed verification.
    pub rejected_clusters: usize,
    /// Up to four non-convergence reports, in start order.
    pub failures: Vec<NonConvergence>,
}

/// Distinct equilibria sorted by the first user's operating cost.
#[derive(Debug, Clone, PartialEq)]
pub struct EquilibriumSet {
    pub equilibria: Vec<EquilibriumResult>,
    pub diagnostics: Diagnostics,
}

impl EquilibriumSet {
    pub fn len(&self) -> usize {
        self.equilibria.len()
    }

    pub fn is_empty(&self) -> bool {
        self.equilibria.is_empty()
    }
}

/// A validated game: network, users, cooperation weights and path sets.
#[derive(Debug, Clone, PartialEq)]
pub struct RoutingGame {
    net: Network,
    users: Vec<UserSpec>,
    coop: CooperationProfile,
    paths: PathSet,
}

impl RoutingGame {
    pub fn new(
        net: Network,
        users: Vec<UserSpec>,
        coop: CooperationProfile,
        path_cap: usize,
    ) -> Result<Self, ModelError> {
        validate_users(&net, &users)?;
        if coop.user_count() != users.len() {
            return Err(ModelError::DimensionMismatch {
                what: "cooperation rows",
                expected: users.len(),
                got: coop.user_count(),
            });
        }
        let paths = PathSet::build(&net, &users, path_cap)?;
        check_capacity(&net, &users)?;
        Ok(Self { net, users, coop, paths })
    }

    pub fn network(&self) -> &Network {
        &self.net
    }

    pub fn users(&self) -> &[UserSpec] {
        &self.users
    }

    pub fn cooperation(&self) -> &CooperationProfile {
        &self.coop
    }

    pub fn paths(&self) -> &PathSet {
        &self.paths
    }

    pub fn profile(&self, path_flows: Vec<Vec<f64>>) -> Result<FlowProfile, ModelError> {
        FlowProfile::assemble(&self.paths, path_flows, &self.users)
    }

    pub fn costs(&self, profile: &FlowProfile) -> CostReport {
        CostReport::compute(profile, &self.net, &self.coop)
    }

    /// The same game with users relabelled: user `i` becomes position
    /// `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self, ModelError> {
        let mut users = self.users.clone();
        for (i, u) in self.users.iter().enumerate() {
            users[perm[i]] = u.clone();
        }
        Self::new(self.net.clone(), users, self.coop.permuted(perm), usize::MAX)
    }

    fn view(&self, profile: &FlowProfile, i: usize) -> UserView<'_> {
        let n = self.net.links().len();
        let row = self.coop.row(i);
        let mut others = vec![0.0; n];
        let mut weighted = vec![0.0; n];
        for l in 0..n {
            others[l] = profile.complement(i, l);
            for k in (0..profile.user_count()).filter(|&k| k != i) {
                weighted[l] += row[k] * profile.user_link(k, l);
            }
        }
        UserView { game: self, i, others, weighted, own_weight: row[i] }
    }

    /// Path flows of user `i` minimizing its operating cost against the
    /// other users' flows in `profile`.
    pub fn best_response(&self, profile: &FlowProfile, i: usize, cfg: &SolverConfig) -> Result<Vec<f64>, SolveError> {
        let view = self.view(profile, i);
        let r = self.users[i].demand;
        match self.paths.user(i).len() {
            1 => Ok(vec![r]),
            _ if r == 0.0 => Ok(vec![0.0; self.paths.user(i).len()]),
            2 => view.two_path_response(r),
            _ => view.pairwise_response(&profile.path_flows()[i], r, cfg),
        }
    }

    /// Gauss-Seidel best-response sweeps in ascending user order from
    /// `start` until the path flows stop moving.
    pub fn br_dynamics(&self, start: &FlowProfile, cfg: &SolverConfig) -> Result<EquilibriumResult, SolveError> {
        cfg.validate()?;
        let (profile, sweeps) = self.run_dynamics(start.path_flows().to_vec(), cfg)?;
        Ok(self.result(profile, cfg, 1, sweeps, Discovery::Dynamics))
    }

    fn run_dynamics(&self, mut flows: Vec<Vec<f64>>, cfg: &SolverConfig) -> Result<(FlowProfile, usize), SolveError> {
        const HISTORY: usize = 8;
        let mut changes: Vec<f64> = Vec::new();
        let mut two_back = flows.clone();
        let mut one_back = flows.clone();
        for sweep in 1..=cfg.max_sweeps {
            let mut change: f64 = 0.0;
            for i in 0..self.users.len() {
                let profile = FlowProfile::from_path_flows(&self.paths, flows.clone());
                let next = self.best_response(&profile, i, cfg)?;
                for (a, b) in next.iter().zip(&flows[i]) {
                    change = change.max((a - b).abs());
                }
                flows[i] = next;
            }
            if change < cfg.fixed_point_tol {
                return Ok((FlowProfile::from_path_flows(&self.paths, flows), sweep));
            }
            if changes.len() == HISTORY {
                changes.remove(0);
            }
            changes.push(change);
            two_back = core::mem::replace(&mut one_back, flows.clone());
        }
        Err(SolveError::NoConvergence(Box::new(NonConvergence {
            sweeps: cfg.max_sweeps,
            period_two_gap: sup_dist(&flows, &two_back),
            last_path_flows: flows,
            recent_changes: changes,
        })))
    }

    fn result(
        &self,
        profile: FlowProfile,
        cfg: &SolverConfig,
        basin: usize,
        sweeps: usize,
        discovery: Discovery,
    ) -> EquilibriumResult {
        let verification = self.verify_nash(&profile, cfg.verify_tol, cfg.deviation_points);
        let costs = self.costs(&profile);
        EquilibriumResult { profile, costs, verification, basin, sweeps, diameter: 0.0, discovery }
    }

    /// Start profiles: the product of per-user split grids. Two-path users
    /// contribute `grid_density` splits, users with more paths contribute
    /// every pure path plus the even split.
    pub fn start_grid(&self, cfg: &SolverConfig) -> Vec<Vec<Vec<f64>>> {
        let per_user: Vec<Vec<Vec<f64>>> = self
            .users
            .iter()
            .enumerate()
            .map(|(i, u)| {
                let p = self.paths.user(i).len();
                let r = u.demand;
                match p {
                    1 => vec![vec![r]],
                    2 => linspace(0.0, r, cfg.grid_density).into_iter().map(|s| vec![s, r - s]).collect(),
                    _ => {
                        let mut v: Vec<Vec<f64>> = (0..p)
                            .map(|q| {
                                let mut x = vec![0.0; p];
                                x[q] = r;
                                x
                            })
                            .collect();
                        v.push(vec![r / p as f64; p]);
                        v
                    }
                }
            })
            .collect();
        let mut starts: Vec<Vec<Vec<f64>>> = vec![Vec::new()];
        for options in &per_user {
            let mut next = Vec::with_capacity(starts.len() * options.len());
            for s in &starts {
                for o in options {
                    let mut t = s.clone();
                    t.push(o.clone());
                    next.push(t);
                }
            }
            starts = next;
        }
        starts
    }

    pub fn multistart_nash(&self, cfg: &SolverConfig) -> Result<EquilibriumSet, SolveError> {
        self.multistart_nash_with(cfg, &Sequential)
    }

    /// Multi-start equilibrium search. Starts may run concurrently through
    /// `exec`; the merge is sequential in start order, so the result does
    /// not depend on scheduling.
    pub fn multistart_nash_with<E: Executor>(
        &self,
        cfg: &SolverConfig,
        exec: &E,
    ) -> Result<EquilibriumSet, SolveError> {
        cfg.validate()?;
        let starts = self.start_grid(cfg);
        let runs = exec.map(starts.len(), |k| self.run_dynamics(starts[k].clone(), cfg));
        let roots = if cfg.bracketing { self.bracket_equilibria(cfg) } else { Vec::new() };

        let mut diagnostics =
            Diagnostics { starts: starts.len(), bracket_roots: roots.len(), ..Diagnostics::default() };
        let mut first_infeasible = None;
        let mut candidates: Vec<(FlowProfile, Discovery, usize)> =
            roots.into_iter().map(|p| (p, Discovery::Bracketing, 0)).collect();
        for run in runs {
            match run {
                Ok((profile, sweeps)) => candidates.push((profile, Discovery::Dynamics, sweeps)),
                Err(SolveError::NoConvergence(report)) => {
                    diagnostics.non_converged += 1;
                    if diagnostics.failures.len() < 4 {
                        diagnostics.failures.push(*report);
                    }
                }
                Err(err @ SolveError::AllResponsesInfeasible { .. }) => {
                    diagnostics.infeasible_starts += 1;
                    first_infeasible.get_or_insert(err);
                }
                Err(err) => return Err(err),
            }
        }

        struct Cluster {
            rep: FlowProfile,
            discovery: Discovery,
            basin: usize,
            sweeps: usize,
            members: Vec<Vec<Vec<f64>>>,
        }
        let mut clusters: Vec<Cluster> = Vec::new();
        for (profile, discovery, sweeps) in candidates {
            let from_dynamics = discovery == Discovery::Dynamics;
            match clusters.iter_mut().find(|c| c.rep.distance(&profile) <= cfg.cluster_radius) {
                Some(c) => {
                    if from_dynamics {
                        c.basin += 1;
                        c.sweeps = if c.basin == 1 { sweeps } else { c.sweeps.min(sweeps) };
                    }
                    c.members.push(profile.user_link_flows().to_vec());
                }
                None => clusters.push(Cluster {
                    members: vec![profile.user_link_flows().to_vec()],
                    rep: profile,
                    discovery,
                    basin: usize::from(from_dynamics),
                    sweeps,
                }),
            }
        }

        let mut equilibria = Vec::new();
        for c in clusters {
            let mut result = self.result(c.rep, cfg, c.basin, c.sweeps, c.discovery);
            if !result.verification.passed {
                diagnostics.rejected_clusters += 1;
                continue;
            }
            let mut diameter: f64 = 0.0;
            for (a, ma) in c.members.iter().enumerate() {
                for mb in &c.members[a + 1..] {
                    diameter = diameter.max(sup_dist(ma, mb));
                }
            }
            result.diameter = diameter;
            equilibria.push(result);
        }
        if equilibria.is_empty() {
            if let Some(err) = first_infeasible {
                if diagnostics.non_converged == 0 {
                    return Err(err);
                }
            }
            return Err(SolveError::NoEquilibrium(Box::new(diagnostics)));
        }
        equilibria.sort_by(|a, b| {
            a.costs.operating[0]
                .total_cmp(&b.costs.operating[0])
                .then_with(|| cmp_flows(a.profile.path_flows(), b.profile.path_flows()))
        });
        Ok(EquilibriumSet { equilibria, diagnostics })
    }

    /// Equilibria of a two-user game as roots of `s -> B_j(B_o(s)) - s` over
    /// the split `s` of a two-path user `j`, where `o` is the other user.
    /// Finds unstable equilibria that dynamics cannot reach.
    pub fn bracket_equilibria(&self, cfg: &SolverConfig) -> Vec<FlowProfile> {
        let mut found = Vec::new();
        if self.users.len() != 2 {
            return found;
        }
        for j in 0..2 {
            if self.paths.user(j).len() != 2 {
                continue;
            }
            let o = 1 - j;
            let r = self.users[j].demand;
            // The other user's response to split `s`, and the composed gap.
            let respond = |s: f64| -> Option<(Vec<Vec<f64>>, f64)> {
                let mut flows: Vec<Vec<f64>> = self.users.iter().enumerate().map(|(k, _)| self.paths_even(k)).collect();
                flows[j] = vec![s, r - s];
                let p = FlowProfile::from_path_flows(&self.paths, flows.clone());
                flows[o] = self.best_response(&p, o, cfg).ok()?;
                let p = FlowProfile::from_path_flows(&self.paths, flows.clone());
                let back = self.best_response(&p, j, cfg).ok()?;
                Some((flows, back[0] - s))
            };
            for s in scan_roots(0.0, r, cfg.bracket_points, &|s| respond(s).map(|(_, g)| g)) {
                if let Some((flows, _)) = respond(s) {
                    found.push(FlowProfile::from_path_flows(&self.paths, flows));
                }
            }
        }
        found
    }

    fn paths_even(&self, k: usize) -> Vec<f64> {
        let p = self.paths.user(k).len();
        vec![self.users[k].demand / p as f64; p]
    }

    /// Kuhn-Tucker residuals and a unilateral-deviation grid check.
    pub fn verify_nash(&self, profile: &FlowProfile, tol: f64, points: usize) -> Verification {
        let n = self.users.len();
        let feasible = self.net.links().iter().enumerate().all(|(l, link)| {
            let f = profile.link_flow(l);
            f < link.cost.capacity() || (f == 0.0 && self.users_avoid(profile, l))
        });
        let mut multipliers = Vec::with_capacity(n);
        let mut dual_residual: f64 = 0.0;
        let mut complementarity: f64 = 0.0;
        let mut deviation_gain = Vec::with_capacity(n);
        for i in 0..n {
            let view = self.view(profile, i);
            let x = &profile.path_flows()[i];
            let r = self.users[i].demand;
            let marginals: Vec<f64> =
                self.paths.user(i).iter().map(|p| view.path_marginal(&own_links(self, i, x), &p.links)).collect();
            let used = 1e-12 * r.max(1.0);
            let lambda = marginals
                .iter()
                .zip(x)
                .filter(|(_, &xp)| xp > used || r == 0.0)
                .map(|(m, _)| *m)
                .fold(f64::INFINITY, f64::min);
            for (m, &xp) in marginals.iter().zip(x) {
                let gap = lambda - m;
                dual_residual = dual_residual.max(if gap.is_nan() { f64::INFINITY } else { gap.max(0.0) });
                let comp = if xp == 0.0 { 0.0 } else { (xp * (m - lambda)).abs() };
                complementarity = complementarity.max(if comp.is_nan() { f64::INFINITY } else { comp });
            }
            multipliers.push(lambda);

            let current = view.operating(&own_links(self, i, x));
            let mut best = current;
            for q in 0..x.len() {
                for t in linspace(0.0, 1.0, points) {
                    let y: Vec<f64> = x
                        .iter()
                        .enumerate()
                        .map(|(p, &xp)| (1.0 - t) * xp + if p == q { t * r } else { 0.0 })
                        .collect();
                    best = best.min(view.operating(&own_links(self, i, &y)));
                }
            }
            let gain = if current.is_finite() { current - best } else { f64::INFINITY };
            deviation_gain.push(gain);
        }
        let mut v =
            Verification { multipliers, dual_residual, complementarity, deviation_gain, feasible, passed: false };
        v.passed = feasible && v.kkt_residual() <= tol && v.max_deviation_gain() <= tol;
        v
    }

    fn users_avoid(&self, profile: &FlowProfile, l: usize) -> bool {
        (0..self.users.len()).all(|i| profile.user_link(i, l) == 0.0)
    }
}

fn cmp_flows(a: &[Vec<f64>], b: &[Vec<f64>]) -> core::cmp::Ordering {
    for (ra, rb) in a.iter().zip(b) {
        for (x, y) in ra.iter().zip(rb) {
            let o = x.total_cmp(y);
            if o.is_ne() {
                return o;
            }
        }
    }
    core::cmp::Ordering::Equal
}

/// Link flows of user `i` for the path flows `x`.
fn own_links(game: &RoutingGame, i: usize, x: &[f64]) -> Vec<f64> {
    let mut own = vec![0.0; game.net.links().len()];
    for (path, &xp) in game.paths.user(i).iter().zip(x) {
        for &l in &path.links {
            own[l] += xp;
        }
    }
    own
}

/// User `i`'s objective with the other users frozen.
struct UserView<'a> {
    game: &'a RoutingGame,
    i: usize,
    /// Aggregate flow of the other users per link.
    others: Vec<f64>,
    /// `sum_{k != i} beta_ik f^k_l` per link.
    weighted: Vec<f64>,
    own_weight: f64,
}

impl UserView<'_> {
    fn link_marginal(&self, l: usize, own: f64) -> f64 {
        let spec = &self.game.net.links()[l].cost;
        let f = self.others[l] + own;
        let t = spec.latency(f);
        if t.is_infinite() {
            return f64::INFINITY;
        }
        let w = self.own_weight * own + self.weighted[l];
        let mut k = 0.0;
        if self.own_weight != 0.0 {
            k += self.own_weight * t;
        }
        if w != 0.0 {
            k += w * spec.latency_slope(f);
        }
        k
    }

    fn path_marginal(&self, own: &[f64], links: &[usize]) -> f64 {
        links.iter().map(|&l| self.link_marginal(l, own[l])).sum()
    }

    /// Operating cost for own link flows `own`. Sending flow onto a
    /// saturated link is infinitely expensive even when the user places no
    /// weight on the users hurt by it.
    fn operating(&self, own: &[f64]) -> f64 {
        let mut total = 0.0;
        for (l, link) in self.game.net.links().iter().enumerate() {
            let t = link.cost.latency(self.others[l] + own[l]);
            let w = self.own_weight * own[l] + self.weighted[l];
            if t.is_infinite() {
                if own[l] > 0.0 || w > 0.0 {
                    return f64::INFINITY;
                }
            } else if w != 0.0 {
                total += w * t;
            }
        }
        total
    }

    fn own_for_split(&self, s: f64, r: f64) -> Vec<f64> {
        own_links(self.game, self.i, &[s, r - s])
    }

    /// Derivative of the operating cost in the flow `s` on the first path.
    fn split_derivative(&self, s: f64, r: f64) -> f64 {
        let own = self.own_for_split(s, r);
        let paths = self.game.paths.user(self.i);
        let a = self.path_marginal(&own, &paths[0].links);
        let b = self.path_marginal(&own, &paths[1].links);
        match (a.is_infinite(), b.is_infinite()) {
            (true, true) => f64::NAN,
            _ => a - b,
        }
    }

    fn blocked(&self, own: &[f64]) -> SolveError {
        let mut blocking: Vec<LinkId> = Vec::new();
        for path in self.game.paths.user(self.i) {
            for &l in &path.links {
                let link = &self.game.net.links()[l];
                if link.cost.latency(self.others[l] + own[l]).is_infinite() && !blocking.contains(&link.id) {
                    blocking.push(link.id);
                }
            }
        }
        blocking.sort();
        SolveError::AllResponsesInfeasible { user: self.game.users[self.i].id, blocking }
    }

    fn two_path_response(&self, r: f64) -> Result<Vec<f64>, SolveError> {
        let d0 = self.split_derivative(0.0, r);
        if d0.is_nan() {
            return Err(self.blocked(&self.own_for_split(0.0, r)));
        }
        if d0 >= 0.0 {
            return Ok(vec![0.0, r]);
        }
        let d1 = self.split_derivative(r, r);
        if d1.is_nan() {
            return Err(self.blocked(&self.own_for_split(r, r)));
        }
        if d1 <= 0.0 {
            return Ok(vec![r, 0.0]);
        }
        let s = bisect_increasing(0.0, r, |s| self.split_derivative(s, r))
            .ok_or_else(|| self.blocked(&self.own_for_split(0.5 * r, r)))?;
        Ok(vec![s, r - s])
    }

    /// Shifts mass from the worst used path to the cheapest path by exact
    /// line search until the first-order gap falls below `br_tol`.
    fn pairwise_response(&self, start: &[f64], r: f64, cfg: &SolverConfig) -> Result<Vec<f64>, SolveError> {
        let paths = self.game.paths.user(self.i);
        let mut x = start.to_vec();
        for _ in 0..cfg.max_sweeps {
            let own = own_links(self.game, self.i, &x);
            let m: Vec<f64> = paths.iter().map(|p| self.path_marginal(&own, &p.links)).collect();
            let best = (0..m.len()).min_by(|&a, &b| m[a].total_cmp(&m[b])).unwrap_or(0);
            if m[best].is_infinite() {
                return Err(self.blocked(&own));
            }
            let worst = (0..m.len()).filter(|&p| x[p] > 0.0).max_by(|&a, &b| m[a].total_cmp(&m[b])).unwrap_or(best);
            if worst == best || r * (m[worst] - m[best]) <= cfg.br_tol {
                break;
            }
            let cap = x[worst];
            let shifted = |t: f64| {
                let mut y = x.clone();
                y[worst] -= t;
                y[best] += t;
                y
            };
            let slope = |t: f64| {
                let y = shifted(t);
                let own = own_links(self.game, self.i, &y);
                let a = self.path_marginal(&own, &paths[best].links);
                let b = self.path_marginal(&own, &paths[worst].links);
                if a.is_infinite() && b.is_infinite() {
                    f64::NAN
                } else {
                    a - b
                }
            };
            let t = if slope(cap) <= 0.0 {
                cap
            } else {
                bisect_increasing(0.0, cap, slope).ok_or_else(|| self.blocked(&own))?
            };
            x = shifted(t);
            if t == cap {
                x[worst] = 0.0;
            }
        }
        Ok(x)
    }
}

/// Operating cost of every user, skipping zero weights.
pub fn operating_costs(coop: &CooperationProfile, raw: &[f64]) -> Vec<f64> {
    (0..raw.len()).map(|i| blend(coop.row(i), raw)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cost::CostSpec;
    use crate::network::{LinkMultiplicity, LinkSpec, NodeId};

    fn parallel(c1: f64, c2: f64, demands: &[f64], alphas: &[f64]) -> RoutingGame {
        let net = Network::with_multiplicity(
            [NodeId(1), NodeId(2)],
            [LinkSpec::new(1, 1, 2, CostSpec::mm1(c1)), LinkSpec::new(2, 1, 2, CostSpec::mm1(c2))],
            LinkMultiplicity::Parallel,
        )
        .unwrap();
        let users = demands.iter().enumerate().map(|(k, &r)| UserSpec::new(k as u32 + 1, 1, 2, r)).collect();
        RoutingGame::new(net, users, CooperationProfile::uniform(alphas).unwrap(), 64).unwrap()
    }

    fn braess(cross: f64, alphas: [f64; 2]) -> RoutingGame {
        let net = Network::new(
            [1, 2, 3].map(NodeId),
            [
                LinkSpec::new(1, 1, 3, CostSpec::mm1(4.1)),
                LinkSpec::new(2, 2, 3, CostSpec::mm1(4.1)),
                LinkSpec::new(3, 1, 2, CostSpec::mm1(cross)),
                LinkSpec::new(4, 2, 1, CostSpec::mm1(cross)),
            ],
        )
        .unwrap();
        let users = vec![UserSpec::new(1, 1, 3, 2.0), UserSpec::new(2, 2, 3, 1.0)];
        RoutingGame::new(net, users, CooperationProfile::uniform(&alphas).unwrap(), 64).unwrap()
    }

    #[test]
    fn symmetric_links_split_evenly() {
        let g = parallel(4.1, 4.1, &[1.0], &[0.0]);
        let p = g.profile(vec![vec![1.0, 0.0]]).unwrap();
        let br = g.best_response(&p, 0, &SolverConfig::default()).unwrap();
        assert!((br[0] - 0.5).abs() < 1e-12 && (br[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn selfish_corner_response_matches_grid() {
        let g = parallel(4.1, 1.0, &[0.1, 0.0], &[0.0, 0.0]);
        let p = g.profile(vec![vec![0.05, 0.05], vec![0.0, 0.0]]).unwrap();
        let br = g.best_response(&p, 0, &SolverConfig::default()).unwrap();
        let cost = |s: f64| s / (4.1 - s) + (0.1 - s) / (1.0 - (0.1 - s));
        let grid_best =
            (0..=1000).map(|k| 0.1 * k as f64 / 1000.0).min_by(|a, b| cost(*a).total_cmp(&cost(*b))).unwrap();
        assert_eq!(br, [0.1, 0.0]);
        assert!((grid_best - 0.1).abs() < 1e-12);
    }

    #[test]
    fn infeasible_response_names_blocking_links() {
        let g = parallel(1.0, 1.0, &[0.5, 0.5], &[0.0, 0.0]);
        // user 2 saturates both links on its own
        let p = FlowProfile::from_path_flows(g.paths(), vec![vec![0.25, 0.25], vec![1.0, 1.0]]);
        let err = g.best_response(&p, 0, &SolverConfig::default()).unwrap_err();
        assert_eq!(
            err,
            SolveError::AllResponsesInfeasible { user: crate::UserId(1), blocking: vec![LinkId(1), LinkId(2)] }
        );
    }

    #[test]
    fn pairwise_response_matches_two_path_response() {
        // three parallel links, the third never attractive
        let net = Network::with_multiplicity(
            [NodeId(1), NodeId(2)],
            [
                LinkSpec::new(1, 1, 2, CostSpec::mm1(4.0)),
                LinkSpec::new(2, 1, 2, CostSpec::mm1(3.0)),
                LinkSpec::new(3, 1, 2, CostSpec::linear(1.0, 5.0)),
            ],
            LinkMultiplicity::Parallel,
        )
        .unwrap();
        let users = vec![UserSpec::new(1, 1, 2, 1.0), UserSpec::new(2, 1, 2, 1.5)];
        let coop = CooperationProfile::uniform(&[0.3, 0.0]).unwrap();
        let g = RoutingGame::new(net, users, coop, 64).unwrap();
        let p = g.profile(vec![vec![0.2, 0.3, 0.5], vec![0.5, 1.0, 0.0]]).unwrap();
        let br = g.best_response(&p, 0, &SolverConfig::default()).unwrap();
        assert_eq!(br[2], 0.0);
        let two = parallel(4.0, 3.0, &[1.0, 1.5], &[0.3, 0.0]);
        let p2 = two.profile(vec![vec![0.5, 0.5], vec![0.5, 1.0]]).unwrap();
        let br2 = two.best_response(&p2, 0, &SolverConfig::default()).unwrap();
        assert!((br[0] - br2[0]).abs() < 1e-7, "{br:?} vs {br2:?}");
    }

    #[test]
    fn dynamics_fixed_point_takes_one_sweep() {
        let g = parallel(4.1, 4.1, &[1.0, 1.0], &[0.0, 0.0]);
        let p = g.profile(vec![vec![0.5, 0.5], vec![0.5, 0.5]]).unwrap();
        let res = g.br_dynamics(&p, &SolverConfig::default()).unwrap();
        assert_eq!(res.sweeps, 1);
        assert_eq!(res.profile.path_flows(), p.path_flows());
        assert!(res.verification.passed);
        assert!(res.kkt_residual() < 1e-10);
    }

    #[test]
    fn braess_starts() {
        let g = braess(10.0, [0.93, 0.0]);
        let cfg = SolverConfig::default();
        // all-direct routing is itself an equilibrium
        let direct = g.profile(vec![vec![2.0, 0.0], vec![1.0, 0.0]]).unwrap();
        let res = g.br_dynamics(&direct, &cfg).unwrap();
        assert_eq!(res.sweeps, 1);
        assert!((res.costs.raw[0] - 2.0 / 2.1).abs() < 1e-12);
        assert!((res.costs.raw[1] - 1.0 / 3.1).abs() < 1e-12);

        let cross = g.profile(vec![vec![0.0, 2.0], vec![0.0, 1.0]]).unwrap();
        let res = g.br_dynamics(&cross, &cfg).unwrap();
        let f = res.profile.user_link_flows();
        assert!(f[0][0].abs() < 1e-9);
        assert!((f[1][1] - 0.0951).abs() < 5e-4, "{:?}", f[1][1]);
        assert!(res.verification.passed);
    }

    #[test]
    fn selfish_parallel_links_have_one_equilibrium() {
        let g = parallel(4.1, 4.1, &[1.0, 1.0], &[0.0, 0.0]);
        let set = g.multistart_nash(&SolverConfig::default()).unwrap();
        assert_eq!(set.len(), 1);
        assert!(set.equilibria[0].diameter < 1e-5);
        assert!(set.equilibria[0].basin == 21 * 21);
    }

    #[test]
    fn perturbed_equilibrium_fails_verification() {
        let g = parallel(4.1, 4.1, &[1.0, 1.0], &[0.0, 0.0]);
        let p = g.profile(vec![vec![0.55, 0.45], vec![0.5, 0.5]]).unwrap();
        let v = g.verify_nash(&p, 1e-6, 1001);
        assert!(!v.passed);
        assert!(v.complementarity > 1e-6 && v.deviation_gain[0] > 1e-6);
    }

    #[test]
    fn braess_has_bracketed_unstable_equilibrium() {
        let g = braess(10.0, [0.93, 0.0]);
        let set = g.multistart_nash(&SolverConfig::default()).unwrap();
        assert_eq!(set.len(), 3);
        assert_eq!(set.equilibria.iter().filter(|e| e.basin == 0).count(), 1);
        for e in &set.equilibria {
            assert!(e.verification.passed);
        }
    }

    #[test]
    fn config_validation() {
        let bad = SolverConfig { grid_density: 1, ..SolverConfig::default() };
        assert!(bad.validate().is_err());
        assert!(SolverConfig { verify_tol: 0.0, ..SolverConfig::default() }.validate().is_err());
    }
}

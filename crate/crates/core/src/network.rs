//! Directed networks, users, path enumeration and flow profiles.
//!
//! Users route over simple paths, so a user's strategy is a vector of path
//! flows summing to its demand. Link flows are derived from path flows, which
//! makes node conservation hold by construction.

use alloc::collections::{BTreeMap, BTreeSet, VecDeque};
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::cost::CostSpec;
use crate::error::ModelError;

macro_rules! id_type {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
        pub struct $name(pub u32);

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, "{}", self.0)
            }
        }
    };
}

id_type!(
    /// Node identifier.
    NodeId
);
id_type!(
    /// Link identifier. Paths are ordered lexicographically by link id.
    LinkId
);
id_type!(
    /// User identifier.
    UserId
);

/// Default cap on the number of simple paths enumerated per user.
pub const DEFAULT_PATH_CAP: usize = 64;

/// Whether more than one link may join the same ordered pair of nodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LinkMultiplicity {
    /// At most one link per ordered node pair.
    #[default]
    Single,
    /// Parallel links between the same pair are allowed (the parallel-links
    /// topology).
    Parallel,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinkSpec {
    pub id: LinkId,
    pub from: NodeId,
    pub to: NodeId,
    pub cost: CostSpec,
}

impl LinkSpec {
    pub fn new(id: u32, from: u32, to: u32, cost: CostSpec) -> Self {
        Self { id: LinkId(id), from: NodeId(from), to: NodeId(to), cost }
    }
}

/// A validated directed network. Links are stored sorted by id, so link
/// indices are ordered the same way as link ids.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    nodes: Vec<NodeId>,
    links: Vec<LinkSpec>,
    multiplicity: LinkMultiplicity,
}

impl Network {
    /// Builds a network with at most one link per ordered node pair.
    pub fn new(
        nodes: impl IntoIterator<Item = NodeId>,
        links: impl IntoIterator<Item = LinkSpec>,
    ) -> Result<Self, ModelError> {
        Self::with_multiplicity(nodes, links, LinkMultiplicity::Single)
    }

    pub fn with_multiplicity(
        nodes: impl IntoIterator<Item = NodeId>,
        links: impl IntoIterator<Item = LinkSpec>,
        multiplicity: LinkMultiplicity,
    ) -> Result<Self, ModelError> {
        let nodes: BTreeSet<NodeId> = nodes.into_iter().collect();
        let mut links: Vec<LinkSpec> = links.into_iter().collect();
        links.sort_by_key(|l| l.id);

        let mut pairs = BTreeSet::new();
        for (k, link) in links.iter().enumerate() {
            if k > 0 && links[k - 1].id == link.id {
                return Err(ModelError::DuplicateLinkId(link.id));
            }
            for node in [link.from, link.to] {
                if !nodes.contains(&node) {
                    return Err(ModelError::DanglingEndpoint { link: link.id, node });
                }
            }
            if link.from == link.to {
                return Err(ModelError::SelfLoop(link.id));
            }
            if multiplicity == LinkMultiplicity::Single && !pairs.insert((link.from, link.to)) {
                return Err(ModelError::DuplicateLink { link: link.id, from: link.from, to: link.to });
            }
            link.cost.validate().map_err(|reason| ModelError::InvalidCost { link: link.id, reason })?;
        }

        Ok(Self { nodes: nodes.into_iter().collect(), links, multiplicity })
    }

    pub fn nodes(&self) -> &[NodeId] {
        &self.nodes
    }

    pub fn links(&self) -> &[LinkSpec] {
        &self.links
    }

    pub fn multiplicity(&self) -> LinkMultiplicity {
        self.multiplicity
    }

    pub fn link_index(&self, id: LinkId) -> Option<usize> {
        self.links.binary_search_by_key(&id, |l| l.id).ok()
    }

    pub fn contains_node(&self, node: NodeId) -> bool {
        self.nodes.binary_search(&node).is_ok()
    }

    /// Returns a copy with the cost of one link replaced.
    pub fn with_link_cost(&self, id: LinkId, cost: CostSpec) -> Result<Self, ModelError> {
        let idx = self.link_index(id).ok_or(ModelError::UnknownLink(id))?;
        cost.validate().map_err(|reason| ModelError::InvalidCost { link: id, reason })?;
        let mut net = self.clone();
        net.links[idx].cost = cost;
        Ok(net)
    }

    /// All simple paths from `source` to `dest`, ordered lexicographically by
    /// link ids.
    pub fn enumerate_paths(&self, source: NodeId, dest: NodeId, cap: usize) -> Result<Vec<Path>, ModelError> {
        for node in [source, dest] {
            if !self.contains_node(node) {
                return Err(ModelError::UnknownNode(node));
            }
        }
        let mut out = Vec::new();
        if source != dest {
            let mut visited = BTreeSet::new();
            visited.insert(source);
            let mut stack = Vec::new();
            self.extend_paths(source, dest, cap, &mut visited, &mut stack, &mut out)?;
        }
        if out.is_empty() {
            return Err(ModelError::NoPath { origin: source, dest });
        }
        out.sort();
        Ok(out)
    }

    fn extend_paths(
        &self,
        at: NodeId,
        dest: NodeId,
        cap: usize,
        visited: &mut BTreeSet<NodeId>,
        stack: &mut Vec<usize>,
        out: &mut Vec<Path>,
    ) -> Result<(), ModelError> {
        for (idx, link) in self.links.iter().enumerate() {
            if link.from != at || visited.contains(&link.to) {
                continue;
            }
            stack.push(idx);
            if link.to == dest {
                if out.len() == cap {
                    let source = self.links[stack[0]].from;
                    return Err(ModelError::PathCapExceeded { origin: source, dest, cap });
                }
                out.push(Path { links: stack.clone() });
            } else {
                visited.insert(link.to);
                self.extend_paths(link.to, dest, cap, visited, stack, out)?;
                visited.remove(&link.to);
            }
            stack.pop();
        }
        Ok(())
    }

    /// Largest flow that can be pushed from the weighted sources into `sink`
    /// with M/M/1 capacities as link bounds (linear links are unbounded).
    pub fn max_flow(&self, sources: &[(NodeId, f64)], sink: NodeId) -> f64 {
        // Node 0 is the super source; real nodes are shifted by one.
        let n = self.nodes.len() + 1;
        let pos = |v: NodeId| self.nodes.binary_search(&v).map(|i| i + 1).ok();
        let mut cap = vec![vec![0.0f64; n]; n];
        for link in &self.links {
            if let (Some(a), Some(b)) = (pos(link.from), pos(link.to)) {
                cap[a][b] += link.cost.capacity();
            }
        }
        for &(s, amount) in sources {
            if let Some(a) = pos(s) {
                cap[0][a] += amount;
            }
        }
        let Some(t) = pos(sink) else { return 0.0 };

        let mut total = 0.0;
        loop {
            let mut prev = vec![usize::MAX; n];
            prev[0] = 0;
            let mut queue = VecDeque::from([0usize]);
            while let Some(u) = queue.pop_front() {
                for v in 0..n {
                    if prev[v] == usize::MAX && cap[u][v] > 1e-15 {
                        prev[v] = u;
                        queue.push_back(v);
                    }
                }
            }
            if prev[t] == usize::MAX {
                return total;
            }
            let mut push = f64::INFINITY;
            let mut v = t;
            while v != 0 {
                push = push.min(cap[prev[v]][v]);
                v = prev[v];
            }
            if !push.is_finite() {
                return f64::INFINITY;
            }
            let mut v = t;
            while v != 0 {
                let u = prev[v];
                cap[u][v] -= push;
                cap[v][u] += push;
                v = u;
            }
            total += push;
        }
    }
}

/// A simple path, stored as indices into [`Network::links`].
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Path {
    pub links: Vec<usize>,
}

impl Path {
    pub fn link_ids(&self, net: &Network) -> Vec<LinkId> {
        self.links.iter().map(|&i| net.links[i].id).collect()
    }
}

/// A user shipping `demand` from `source` to `dest`.
#[derive(Debug, Clone, PartialEq)]
pub struct UserSpec {
    pub id: UserId,
    pub source: NodeId,
    pub dest: NodeId,
    pub demand: f64,
}

impl UserSpec {
    pub fn new(id: u32, source: u32, dest: u32, demand: f64) -> Self {
        Self { id: UserId(id), source: NodeId(source), dest: NodeId(dest), demand }
    }

    pub fn validate(&self, net: &Network) -> Result<(), ModelError> {
        if !(self.demand >= 0.0 && self.demand.is_finite()) {
            return Err(ModelError::InvalidDemand { user: self.id, demand: self.demand });
        }
        if self.source == self.dest {
            return Err(ModelError::SameEndpoints(self.id));
        }
        for node in [self.source, self.dest] {
            if !net.contains_node(node) {
                return Err(ModelError::UnknownNode(node));
            }
        }
        Ok(())
    }

    /// Signed node divergence: `+demand` at the source, `-demand` at the
    /// destination, zero elsewhere.
    pub fn divergence(&self, node: NodeId) -> f64 {
        if node == self.source {
            self.demand
        } else if node == self.dest {
            -self.demand
        } else {
            0.0
        }
    }
}

/// Validates a user list against a network: distinct ids and valid endpoints.
pub fn validate_users(net: &Network, users: &[UserSpec]) -> Result<(), ModelError> {
    let mut seen = BTreeSet::new();
    for u in users {
        if !seen.insert(u.id) {
            return Err(ModelError::DuplicateUser(u.id));
        }
        u.validate(net)?;
    }
    Ok(())
}

/// Checks that the demands can be carried strictly below every M/M/1
/// capacity, destination by destination.
pub fn check_capacity(net: &Network, users: &[UserSpec]) -> Result<(), ModelError> {
    let mut by_dest: BTreeMap<NodeId, Vec<(NodeId, f64)>> = BTreeMap::new();
    for u in users {
        by_dest.entry(u.dest).or_default().push((u.source, u.demand));
    }
    for (dest, sources) in by_dest {
        let total: f64 = sources.iter().map(|s| s.1).sum();
        if total == 0.0 {
            continue;
        }
        // Routing slightly more than the demand proves there is slack on
        // every cut; scaling that flow back down keeps every link strictly
        // below capacity.
        const MARGIN: f64 = 1.0 + 1e-9;
        let inflated: Vec<(NodeId, f64)> = sources.iter().map(|&(s, r)| (s, r * MARGIN)).collect();
        let available = net.max_flow(&inflated, dest);
        if available < total * MARGIN * (1.0 - 1e-12) {
            return Err(ModelError::Infeasible(format!(
                "sum of demands >= sum of capacities into node {dest}: demand {total} \
                 >= minimum-cut capacity {available}"
            )));
        }
    }
    Ok(())
}

/// Per-user simple paths in deterministic order.
#[derive(Debug, Clone, PartialEq)]
pub struct PathSet {
    per_user: Vec<Vec<Path>>,
    link_count: usize,
}

impl PathSet {
    pub fn build(net: &Network, users: &[UserSpec], cap: usize) -> Result<Self, ModelError> {
        let per_user =
            users.iter().map(|u| net.enumerate_paths(u.source, u.dest, cap)).collect::<Result<Vec<_>, _>>()?;
        Ok(Self { per_user, link_count: net.links().len() })
    }

    pub fn user(&self, i: usize) -> &[Path] {
        &self.per_user[i]
    }

    pub fn user_count(&self) -> usize {
        self.per_user.len()
    }

    pub fn link_count(&self) -> usize {
        self.link_count
    }

    pub fn path_counts(&self) -> Vec<usize> {
        self.per_user.iter().map(Vec::len).collect()
    }
}

/// Per-user path flows together with the derived link flows.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowProfile {
    path_flows: Vec<Vec<f64>>,
    user_link: Vec<Vec<f64>>,
    total: Vec<f64>,
}

impl FlowProfile {
    /// Validates path flows against the users' demands and derives link flows.
    pub fn assemble(paths: &PathSet, path_flows: Vec<Vec<f64>>, users: &[UserSpec]) -> Result<Self, ModelError> {
        if path_flows.len() != paths.user_count() || users.len() != paths.user_count() {
            return Err(ModelError::DimensionMismatch {
                what: "users",
                expected: paths.user_count(),
                got: path_flows.len().min(users.len()),
            });
        }
        for (i, (flows, user)) in path_flows.iter().zip(users).enumerate() {
            if flows.len() != paths.user(i).len() {
                return Err(ModelError::DimensionMismatch {
                    what: "path flows",
                    expected: paths.user(i).len(),
                    got: flows.len(),
                });
            }
            for (p, &x) in flows.iter().enumerate() {
                if !(x >= 0.0 && x.is_finite()) {
                    return Err(ModelError::NegativeFlow { user: user.id, path: p, flow: x });
                }
            }
            let total: f64 = flows.iter().sum();
            if (total - user.demand).abs() > 1e-12 * user.demand.max(1.0) {
                return Err(ModelError::DemandMismatch { user: user.id, total, demand: user.demand });
            }
        }
        Ok(Self::from_path_flows(paths, path_flows))
    }

    /// Derives link flows without validating demands.
    pub(crate) fn from_path_flows(paths: &PathSet, path_flows: Vec<Vec<f64>>) -> Self {
        let n = paths.link_count();
        let mut user_link = vec![vec![0.0; n]; path_flows.len()];
        for (i, flows) in path_flows.iter().enumerate() {
            for (path, &x) in paths.user(i).iter().zip(flows) {
                for &l in &path.links {
                    user_link[i][l] += x;
                }
            }
        }
        let mut total = vec![0.0; n];
        for row in &user_link {
            for (t, x) in total.iter_mut().zip(row) {
                *t += x;
            }
        }
        Self { path_flows, user_link, total }
    }

    pub fn path_flows(&self) -> &[Vec<f64>] {
        &self.path_flows
    }

    pub fn into_path_flows(self) -> Vec<Vec<f64>> {
        self.path_flows
    }

    /// `f^i_l` for every user and link.
    pub fn user_link_flows(&self) -> &[Vec<f64>] {
        &self.user_link
    }

    pub fn user_link(&self, i: usize, l: usize) -> f64 {
        self.user_link[i][l]
    }

    /// Aggregate flow `f_l`.
    pub fn link_flow(&self, l: usize) -> f64 {
        self.total[l]
    }

    pub fn link_flows(&self) -> &[f64] {
        &self.total
    }

    /// Flow of every user other than `i` on link `l`.
    pub fn complement(&self, i: usize, l: usize) -> f64 {
        self.total[l] - self.user_link[i][l]
    }

    pub fn user_count(&self) -> usize {
        self.path_flows.len()
    }

    /// Sup-norm distance on per-user link flows.
    pub fn distance(&self, other: &FlowProfile) -> f64 {
        crate::num::sup_dist(&self.user_link, &other.user_link)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeasibilityReport {
    /// `conservation[i][v]`: outflow minus inflow minus divergence of user `i`
    /// at node `v` (nodes in [`Network::nodes`] order).
    pub conservation: Vec<Vec<f64>>,
    /// Remaining capacity `C_l - f_l` of each M/M/1 link; `None` for linear
    /// links.
    pub slack: Vec<Option<f64>>,
    pub feasible: bool,
}

impl FeasibilityReport {
    pub fn max_conservation_residual(&self) -> f64 {
        self.conservation.iter().flatten().fold(0.0, |m, r| m.max(r.abs()))
    }
}

pub fn check_feasibility(profile: &FlowProfile, net: &Network, users: &[UserSpec]) -> FeasibilityReport {
    let conservation = users
        .iter()
        .enumerate()
        .map(|(i, user)| {
            net.nodes()
                .iter()
                .map(|&v| {
                    let mut out = 0.0;
                    let mut inflow = 0.0;
                    for (l, link) in net.links().iter().enumerate() {
                        if link.from == v {
                            out += profile.user_link(i, l);
                        }
                        if link.to == v {
                            inflow += profile.user_link(i, l);
                        }
                    }
                    out - inflow - user.divergence(v)
                })
                .collect()
        })
        .collect();
    let slack: Vec<Option<f64>> = net
        .links()
        .iter()
        .enumerate()
        .map(|(l, link)| match link.cost {
            CostSpec::Mm1 { capacity } => Some(capacity - profile.link_flow(l)),
            CostSpec::Linear { .. } => None,
        })
        .collect();
    let feasible = slack.iter().flatten().all(|s| *s > 0.0);
    FeasibilityReport { conservation, slack, feasible }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn nodes(ids: &[u32]) -> Vec<NodeId> {
        ids.iter().map(|&i| NodeId(i)).collect()
    }

    fn mm1(c: f64) -> CostSpec {
        CostSpec::Mm1 { capacity: c }
    }

    fn load_balancing() -> Network {
        Network::new(
            nodes(&[1, 2, 3]),
            [
                LinkSpec::new(1, 1, 3, mm1(4.1)),
                LinkSpec::new(2, 2, 3, mm1(4.1)),
                LinkSpec::new(3, 1, 2, mm1(10.0)),
                LinkSpec::new(4, 2, 1, mm1(10.0)),
            ],
        )
        .unwrap()
    }

    fn ids(net: &Network, paths: &[Path]) -> Vec<Vec<u32>> {
        paths.iter().map(|p| p.link_ids(net).iter().map(|l| l.0).collect()).collect()
    }

    #[test]
    fn parallel_links_need_parallel_multiplicity() {
        let links = [LinkSpec::new(1, 1, 2, mm1(4.0)), LinkSpec::new(2, 1, 2, mm1(3.0))];
        let net = Network::with_multiplicity(nodes(&[1, 2]), links.clone(), LinkMultiplicity::Parallel).unwrap();
        assert_eq!(ids(&net, &net.enumerate_paths(NodeId(1), NodeId(2), 64).unwrap()), [[1], [2]]);
        assert_eq!(
            Network::new(nodes(&[1, 2]), links),
            Err(ModelError::DuplicateLink { link: LinkId(2), from: NodeId(1), to: NodeId(2) })
        );
    }

    #[test]
    fn load_balancing_paths() {
        let net = load_balancing();
        assert_eq!(ids(&net, &net.enumerate_paths(NodeId(1), NodeId(3), 64).unwrap()), [vec![1], vec![3, 2]]);
        assert_eq!(ids(&net, &net.enumerate_paths(NodeId(2), NodeId(3), 64).unwrap()), [vec![2], vec![4, 1]]);
    }

    #[test]
    fn rejects_bad_links() {
        let err = Network::new(nodes(&[1, 2]), [LinkSpec::new(1, 1, 9, mm1(1.0))]);
        assert_eq!(err, Err(ModelError::DanglingEndpoint { link: LinkId(1), node: NodeId(9) }));
        let err = Network::new(nodes(&[1, 2]), [LinkSpec::new(1, 2, 2, mm1(1.0))]);
        assert_eq!(err, Err(ModelError::SelfLoop(LinkId(1))));
        let err = Network::new(nodes(&[1, 2]), [LinkSpec::new(1, 1, 2, mm1(1.0)), LinkSpec::new(1, 2, 1, mm1(1.0))]);
        assert_eq!(err, Err(ModelError::DuplicateLinkId(LinkId(1))));
    }

    #[test]
    fn path_cap_and_missing_paths() {
        let net = load_balancing();
        assert!(matches!(
            net.enumerate_paths(NodeId(1), NodeId(3), 1),
            Err(ModelError::PathCapExceeded { cap: 1, .. })
        ));
        assert_eq!(
            net.enumerate_paths(NodeId(3), NodeId(1), 64),
            Err(ModelError::NoPath { origin: NodeId(3), dest: NodeId(1) })
        );
    }

    #[test]
    fn assemble_profile_single_path_assignment() {
        let net = load_balancing();
        let users = [UserSpec::new(1, 1, 3, 2.0), UserSpec::new(2, 2, 3, 1.0)];
        let paths = PathSet::build(&net, &users, 64).unwrap();
        let profile = FlowProfile::assemble(&paths, vec![vec![2.0, 0.0], vec![1.0, 0.0]], &users).unwrap();
        assert_eq!(profile.user_link_flows()[0], [2.0, 0.0, 0.0, 0.0]);
        assert_eq!(profile.link_flows(), [2.0, 1.0, 0.0, 0.0]);
        let report = check_feasibility(&profile, &net, &users);
        assert!(report.feasible);
        assert_eq!(report.max_conservation_residual(), 0.0);
        assert!((report.slack[0].unwrap() - 2.1).abs() < 1e-15);
    }

    #[test]
    fn assemble_profile_rejects_demand_mismatch_and_negative_flow() {
        let net = load_balancing();
        let users = [UserSpec::new(1, 1, 3, 1.0)];
        let paths = PathSet::build(&net, &users, 64).unwrap();
        assert!(matches!(
            FlowProfile::assemble(&paths, vec![vec![0.5, 0.4]], &users),
            Err(ModelError::DemandMismatch { .. })
        ));
        assert!(matches!(
            FlowProfile::assemble(&paths, vec![vec![1.5, -0.5]], &users),
            Err(ModelError::NegativeFlow { .. })
        ));
    }

    #[test]
    fn saturated_link_is_infeasible() {
        let net = Network::with_multiplicity(
            nodes(&[1, 2]),
            [LinkSpec::new(1, 1, 2, mm1(4.1)), LinkSpec::new(2, 1, 2, mm1(4.1))],
            LinkMultiplicity::Parallel,
        )
        .unwrap();
        let users = [UserSpec::new(1, 1, 2, 4.1)];
        let paths = PathSet::build(&net, &users, 64).unwrap();
        let profile = FlowProfile::assemble(&paths, vec![vec![4.1, 0.0]], &users).unwrap();
        let report = check_feasibility(&profile, &net, &users);
        assert!(!report.feasible);
        assert_eq!(report.slack[0], Some(0.0));
    }

    #[test]
    fn capacity_check_uses_cut_capacity() {
        let par = |c: f64| {
            Network::with_multiplicity(
                nodes(&[1, 2]),
                [LinkSpec::new(1, 1, 2, mm1(c)), LinkSpec::new(2, 1, 2, mm1(c))],
                LinkMultiplicity::Parallel,
            )
            .unwrap()
        };
        let users = [UserSpec::new(1, 1, 2, 1.0), UserSpec::new(2, 1, 2, 2.0)];
        // r1 + r2 = 3 < C1 + C2 = 8.2
        assert!(check_capacity(&par(4.1), &users).is_ok());
        assert!(matches!(check_capacity(&par(0.001), &users), Err(ModelError::Infeasible(_))));
        assert!(matches!(check_capacity(&par(1.5), &users), Err(ModelError::Infeasible(_))));
    }
}

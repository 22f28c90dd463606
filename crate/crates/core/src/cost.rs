//! Link latencies, per-user costs and cooperation-weighted operating costs.
//!
//! Infinite cost is an ordinary `f64::INFINITY`. It propagates through sums
//! and compares above every finite cost, so the solvers treat it as a
//! barrier. A user with zero flow on a saturated link pays nothing there.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::ModelError;
use crate::network::{FlowProfile, Network, Path};
use crate::num::share;

/// Latency of a single link as a function of its aggregate flow.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CostSpec {
    /// `T(f) = slope * f + intercept`.
    Linear { slope: f64, intercept: f64 },
    /// M/M/1 delay `T(f) = 1 / (C - f)` for `f < C`, infinite otherwise.
    /// A capacity of zero models a link that is absent.
    Mm1 { capacity: f64 },
}

impl CostSpec {
    pub fn linear(slope: f64, intercept: f64) -> Self {
        Self::Linear { slope, intercept }
    }

    pub fn mm1(capacity: f64) -> Self {
        Self::Mm1 { capacity }
    }

    pub fn validate(&self) -> Result<(), &'static str> {
        match *self {
            Self::Linear { slope, intercept } => {
                if !(slope.is_finite() && intercept.is_finite()) {
                    Err("linear coefficients must be finite")
                } else if slope < 0.0 || intercept < 0.0 {
                    Err("linear coefficients must be nonnegative")
                } else {
                    Ok(())
                }
            }
            Self::Mm1 { capacity } => {
                if capacity.is_finite() && capacity >= 0.0 {
                    Ok(())
                } else {
                    Err("capacity must be finite and nonnegative")
                }
            }
        }
    }

    /// Per-unit cost `T(f)`.
    pub fn latency(&self, f: f64) -> f64 {
        match *self {
            Self::Linear { slope, intercept } => slope * f + intercept,
            Self::Mm1 { capacity } => {
                if f < capacity {
                    1.0 / (capacity - f)
                } else {
                    f64::INFINITY
                }
            }
        }
    }

    /// `T'(f)`; infinite at or above an M/M/1 capacity.
    pub fn latency_slope(&self, f: f64) -> f64 {
        match *self {
            Self::Linear { slope, .. } => slope,
            Self::Mm1 { capacity } => {
                if f < capacity {
                    let gap = capacity - f;
                    1.0 / (gap * gap)
                } else {
                    f64::INFINITY
                }
            }
        }
    }

    /// Flow bound of the link: the M/M/1 capacity, infinite for linear links.
    pub fn capacity(&self) -> f64 {
        match *self {
            Self::Linear { .. } => f64::INFINITY,
            Self::Mm1 { capacity } => capacity,
        }
    }
}

/// Row-stochastic matrix `beta`: user `i` minimizes `sum_k beta[i][k] * J^k`.
#[derive(Debug, Clone, PartialEq)]
pub struct CooperationProfile {
    rows: Vec<Vec<f64>>,
}

impl CooperationProfile {
    /// Every user selfish: `beta` is the identity.
    pub fn selfish(users: usize) -> Self {
        let rows = (0..users)
            .map(|i| {
                let mut row = vec![0.0; users];
                row[i] = 1.0;
                row
            })
            .collect();
        Self { rows }
    }

    /// Scalar degrees of cooperation: user `i` keeps `1 - alpha_i` on its own
    /// cost and spreads `alpha_i` evenly over the others.
    pub fn uniform(alphas: &[f64]) -> Result<Self, ModelError> {
        let n = alphas.len();
        let mut rows = Vec::with_capacity(n);
        for (i, &a) in alphas.iter().enumerate() {
            if !(0.0..=1.0).contains(&a) {
                return Err(ModelError::InvalidCooperation {
                    row: i,
                    reason: "degree of cooperation must lie in [0, 1]",
                });
            }
            let mut row = vec![if n > 1 { a / (n - 1) as f64 } else { 0.0 }; n];
            row[i] = if n > 1 { 1.0 - a } else { 1.0 };
            rows.push(row);
        }
        Ok(Self { rows })
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self, ModelError> {
        let n = rows.len();
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(ModelError::DimensionMismatch { what: "cooperation row", expected: n, got: row.len() });
            }
            if row.iter().any(|w| !(0.0..=1.0).contains(w)) {
                return Err(ModelError::InvalidCooperation { row: i, reason: "weights must lie in [0, 1]" });
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > 1e-12 {
                return Err(ModelError::InvalidCooperation { row: i, reason: "weights must sum to 1" });
            }
        }
        Ok(Self { rows })
    }

    pub fn user_count(&self) -> usize {
        self.rows.len()
    }

    pub fn weight(&self, i: usize, k: usize) -> f64 {
        self.rows[i][k]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.rows[i]
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    /// Scalar degree `alpha_i = 1 - beta_ii`.
    pub fn degree(&self, i: usize) -> f64 {
        1.0 - self.rows[i][i]
    }

    /// Same weights with users relabelled: user `perm[i]` of the result is
    /// user `i` of `self`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        let n = self.rows.len();
        let mut rows = vec![vec![0.0; n]; n];
        for i in 0..n {
            for k in 0..n {
                rows[perm[i]][perm[k]] = self.rows[i][k];
            }
        }
        Self { rows }
    }
}

/// `J^i = sum_l f^i_l T_l(f_l)`.
pub fn user_cost(profile: &FlowProfile, net: &Network, i: usize) -> f64 {
    net.links()
        .iter()
        .enumerate()
        .map(|(l, link)| share(profile.user_link(i, l), link.cost.latency(profile.link_flow(l))))
        .sum()
}

pub fn user_costs(profile: &FlowProfile, net: &Network) -> Vec<f64> {
    (0..profile.user_count()).map(|i| user_cost(profile, net, i)).collect()
}

/// `sum_k beta_ik x_k`, skipping zero weights so an infinite cost the user
/// ignores does not turn into NaN.
pub(crate) fn blend(row: &[f64], values: &[f64]) -> f64 {
    row.iter().zip(values).filter(|(w, _)| **w != 0.0).map(|(w, x)| w * x).sum()
}

/// `Jhat^i = sum_k beta_ik J^k`.
pub fn operating_cost(profile: &FlowProfile, net: &Network, coop: &CooperationProfile, i: usize) -> f64 {
    blend(coop.row(i), &user_costs(profile, net))
}

/// `K^i_l`: derivative of `Jhat^i` with respect to user `i`'s flow on link `l`,
/// `beta_ii T_l + (sum_k beta_ik f^k_l) T'_l`.
pub fn marginal_cost(profile: &FlowProfile, net: &Network, coop: &CooperationProfile, i: usize, l: usize) -> f64 {
    let spec = &net.links()[l].cost;
    let f = profile.link_flow(l);
    let t = spec.latency(f);
    if t.is_infinite() {
        return f64::INFINITY;
    }
    let row = coop.row(i);
    let weighted: f64 = (0..profile.user_count()).map(|k| row[k] * profile.user_link(k, l)).sum();
    let own = if row[i] == 0.0 { 0.0 } else { row[i] * t };
    own + share(weighted, spec.latency_slope(f))
}

/// Sum of `K^i_l` along a path.
pub fn path_marginal(profile: &FlowProfile, net: &Network, coop: &CooperationProfile, i: usize, path: &Path) -> f64 {
    path.links.iter().map(|&l| marginal_cost(profile, net, coop, i, l)).sum()
}

/// Raw and operating costs of every user plus the per-link cost shares.
#[derive(Debug, Clone, PartialEq)]
pub struct CostReport {
    /// `J^i`.
    pub raw: Vec<f64>,
    /// `Jhat^i`.
    pub operating: Vec<f64>,
    /// `link_shares[i][l] = f^i_l T_l(f_l)`.
    pub link_shares: Vec<Vec<f64>>,
}

impl CostReport {
    pub fn compute(profile: &FlowProfile, net: &Network, coop: &CooperationProfile) -> Self {
        let link_shares: Vec<Vec<f64>> = (0..profile.user_count())
            .map(|i| {
                net.links()
                    .iter()
                    .enumerate()
                    .map(|(l, link)| share(profile.user_link(i, l), link.cost.latency(profile.link_flow(l))))
                    .collect()
            })
            .collect();
        let raw: Vec<f64> = link_shares.iter().map(|row| row.iter().sum()).collect();
        let operating = (0..raw.len()).map(|i| blend(coop.row(i), &raw)).collect();
        Self { raw, operating, link_shares }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{LinkMultiplicity, LinkSpec, NodeId, PathSet, UserSpec};

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn latencies() {
        assert!(close(CostSpec::mm1(4.1).latency(2.0), 1.0 / 2.1, 1e-15));
        assert!(close(CostSpec::mm1(4.1).latency(2.0), 0.476190476190, 1e-12));
        assert_eq!(CostSpec::linear(1.0, 0.0).latency(0.5), 0.5);
        assert_eq!(CostSpec::mm1(4.1).latency(4.2), f64::INFINITY);
        assert_eq!(CostSpec::mm1(0.0).latency(0.0), f64::INFINITY);
    }

    #[test]
    fn latency_slopes() {
        assert!(close(CostSpec::mm1(4.1).latency_slope(2.0), 0.226757369614, 1e-12));
        assert_eq!(CostSpec::linear(4.1, 3.0).latency_slope(17.0), 4.1);
        assert_eq!(CostSpec::mm1(4.1).latency_slope(4.1), f64::INFINITY);
        // central difference oracle
        let spec = CostSpec::mm1(4.0);
        let h = 1e-5;
        let fd = (spec.latency(1.3 + h) - spec.latency(1.3 - h)) / (2.0 * h);
        assert!(close(spec.latency_slope(1.3), fd, 1e-6));
    }

    #[test]
    fn validation() {
        assert!(CostSpec::linear(-1.0, 0.0).validate().is_err());
        assert!(CostSpec::linear(0.0, f64::NAN).validate().is_err());
        assert!(CostSpec::mm1(-0.5).validate().is_err());
        assert!(CostSpec::mm1(0.0).validate().is_ok());
    }

    #[test]
    fn cooperation_rows() {
        let c = CooperationProfile::uniform(&[0.93, 0.0]).unwrap();
        assert!(close(c.weight(0, 0), 0.07, 1e-15));
        assert_eq!(c.weight(0, 1), 0.93);
        assert_eq!(c.row(1), [0.0, 1.0]);
        assert!(close(c.degree(0), 0.93, 1e-15));
        assert!(CooperationProfile::uniform(&[1.2]).is_err());
        assert!(CooperationProfile::from_rows(vec![vec![0.5, 0.4], vec![0.0, 1.0]]).is_err());
        assert!(CooperationProfile::from_rows(vec![vec![0.5, 0.5]]).is_err());
        assert_eq!(CooperationProfile::selfish(2).rows(), [[1.0, 0.0], [0.0, 1.0]]);
    }

    fn load_balancing(cross: f64) -> (Network, Vec<UserSpec>, PathSet) {
        let nodes = [1, 2, 3].map(NodeId);
        let net = Network::new(
            nodes,
            [
                LinkSpec::new(1, 1, 3, CostSpec::mm1(4.1)),
                LinkSpec::new(2, 2, 3, CostSpec::mm1(4.1)),
                LinkSpec::new(3, 1, 2, CostSpec::mm1(cross)),
                LinkSpec::new(4, 2, 1, CostSpec::mm1(cross)),
            ],
        )
        .unwrap();
        let users = vec![UserSpec::new(1, 1, 3, 2.0), UserSpec::new(2, 2, 3, 1.0)];
        let paths = PathSet::build(&net, &users, 64).unwrap();
        (net, users, paths)
    }

    #[test]
    fn direct_routing_costs() {
        let (net, users, paths) = load_balancing(0.0);
        let p = FlowProfile::assemble(&paths, vec![vec![2.0, 0.0], vec![1.0, 0.0]], &users).unwrap();
        // closed cross links carry nothing and cost nothing
        assert!(close(user_cost(&p, &net, 0), 2.0 / 2.1, 1e-15));
        assert!(close(user_cost(&p, &net, 1), 1.0 / 3.1, 1e-15));
        let coop = CooperationProfile::uniform(&[0.93, 0.0]).unwrap();
        let jhat = operating_cost(&p, &net, &coop, 0);
        assert!(close(jhat, 0.07 * 2.0 / 2.1 + 0.93 / 3.1, 1e-15));
        assert!(close(0.07 * 0.952 + 0.93 * 0.3225, 0.366565, 1e-12));
        assert_eq!(operating_cost(&p, &net, &CooperationProfile::selfish(2), 0), user_cost(&p, &net, 0));
        let half = CooperationProfile::uniform(&[0.5, 0.5]).unwrap();
        let j = user_costs(&p, &net);
        assert!(close(operating_cost(&p, &net, &half, 1), (j[0] + j[1]) / 2.0, 1e-15));
        // marginals on the closed link are infinite
        assert_eq!(marginal_cost(&p, &net, &coop, 0, 2), f64::INFINITY);
    }

    #[test]
    fn zero_demand_costs_nothing() {
        let (net, _, _) = load_balancing(10.0);
        let users = vec![UserSpec::new(1, 1, 3, 0.0), UserSpec::new(2, 2, 3, 1.0)];
        let paths = PathSet::build(&net, &users, 64).unwrap();
        let p = FlowProfile::assemble(&paths, vec![vec![0.0, 0.0], vec![0.3, 0.7]], &users).unwrap();
        assert_eq!(user_cost(&p, &net, 0), 0.0);
    }

    #[test]
    fn selfish_linear_marginal() {
        let net = Network::with_multiplicity(
            [NodeId(1), NodeId(2)],
            [LinkSpec::new(1, 1, 2, CostSpec::linear(1.0, 0.0)), LinkSpec::new(2, 1, 2, CostSpec::linear(1.0, 0.0))],
            LinkMultiplicity::Parallel,
        )
        .unwrap();
        let users = vec![UserSpec::new(1, 1, 2, 1.0), UserSpec::new(2, 1, 2, 1.0)];
        let paths = PathSet::build(&net, &users, 64).unwrap();
        let p = FlowProfile::assemble(&paths, vec![vec![0.5, 0.5], vec![0.3, 0.7]], &users).unwrap();
        let k = marginal_cost(&p, &net, &CooperationProfile::selfish(2), 0, 0);
        assert!(close(k, 1.3, 1e-15));

        let sym = FlowProfile::assemble(&paths, vec![vec![0.4, 0.6], vec![0.4, 0.6]], &users).unwrap();
        let half = CooperationProfile::uniform(&[0.5, 0.5]).unwrap();
        assert_eq!(marginal_cost(&sym, &net, &half, 0, 0), marginal_cost(&sym, &net, &half, 1, 0));
    }

    #[test]
    fn report_matches_blend() {
        let (net, users, paths) = load_balancing(10.0);
        let p = FlowProfile::assemble(&paths, vec![vec![1.2, 0.8], vec![0.1, 0.9]], &users).unwrap();
        let coop = CooperationProfile::uniform(&[0.93, 0.2]).unwrap();
        let rep = CostReport::compute(&p, &net, &coop);
        for i in 0..2 {
            assert!(close(rep.raw[i], user_cost(&p, &net, i), 1e-14));
            let expected = coop.weight(i, 0) * rep.raw[0] + coop.weight(i, 1) * rep.raw[1];
            assert!(close(rep.operating[i], expected, 1e-10));
        }
    }
}

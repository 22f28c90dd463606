use alloc::boxed::Box;
use alloc::string::String;
use alloc::vec::Vec;

use crate::network::{LinkId, NodeId, UserId};

/// Validation failures for networks, users, costs and flow profiles.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ModelError {
    #[error("link id {0} is declared more than once")]
    DuplicateLinkId(LinkId),
    #[error("link {link} duplicates an existing link from node {from} to node {to}")]
    DuplicateLink { link: LinkId, from: NodeId, to: NodeId },
    #[error("link {link} references undeclared node {node}")]
    DanglingEndpoint { link: LinkId, node: NodeId },
    #[error("link {0} is a self-loop")]
    SelfLoop(LinkId),
    #[error("node {0} is not part of the network")]
    UnknownNode(NodeId),
    #[error("link {0} is not part of the network")]
    UnknownLink(LinkId),
    #[error("invalid cost on link {link}: {reason}")]
    InvalidCost { link: LinkId, reason: &'static str },
    #[error("user {0}: source and destination coincide")]
    SameEndpoints(UserId),
    #[error("user {user}: demand must be nonnegative and finite, got {demand}")]
    InvalidDemand { user: UserId, demand: f64 },
    #[error("user id {0} is declared more than once")]
    DuplicateUser(UserId),
    #[error("no path from node {origin} to node {dest}")]
    NoPath { origin: NodeId, dest: NodeId },
    #[error("more than {cap} simple paths from node {origin} to node {dest}")]
    PathCapExceeded { origin: NodeId, dest: NodeId, cap: usize },
    #[error("{what}: expected {expected} entries, got {got}")]
    DimensionMismatch { what: &'static str, expected: usize, got: usize },
    #[error("user {user}: path {path} carries negative or non-finite flow {flow}")]
    NegativeFlow { user: UserId, path: usize, flow: f64 },
    #[error("user {user}: path flows sum to {total}, demand is {demand}")]
    DemandMismatch { user: UserId, total: f64, demand: f64 },
    #[error("cooperation row {row}: {reason}")]
    InvalidCooperation { row: usize, reason: &'static str },
    #[error("infeasible demand: {0}")]
    Infeasible(String),
}

/// Failures of the equilibrium solvers.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SolveError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("invalid solver configuration: {0}")]
    Config(&'static str),
    #[error("user {user} has no finite-cost response; blocking links {blocking:?}")]
    AllResponsesInfeasible { user: UserId, blocking: Vec<LinkId> },
    #[error("best-response dynamics did not converge after {} sweeps", .0.sweeps)]
    NoConvergence(Box<NonConvergence>),
    #[error("no start converged to a verified equilibrium ({} non-converged, {} rejected)", .0.non_converged, .0.rejected_clusters)]
    NoEquilibrium(Box<crate::nash::Diagnostics>),
}

/// Failures of the mixed-equilibrium solvers.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MixedError {
    #[error("invalid mixed scenario: {0}")]
    InvalidScenario(&'static str),
    #[error("infeasible mixed scenario: r1 + r2 = {demand} is not below C1 + C2 = {capacity}")]
    Infeasible { demand: f64, capacity: f64 },
    #[error("no Wardrop allocation keeps both links below capacity")]
    NoFeasibleSplit,
}

/// Failures building presets, scenarios and sweeps.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ExperimentError {
    #[error("unknown preset {0:?}")]
    UnknownPreset(String),
    #[error("invalid sweep grid: {0}")]
    Grid(&'static str),
    #[error("sweep parameter does not apply: {0}")]
    Parameter(&'static str),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Mixed(#[from] MixedError),
}

/// State left behind by best-response dynamics that hit the sweep cap.
#[derive(Debug, Clone, PartialEq)]
pub struct NonConvergence {
    pub sweeps: usize,
    /// Path flows after the final sweep.
    pub last_path_flows: Vec<Vec<f64>>,
    /// Sup-norm change of the last few sweeps, oldest first.
    pub recent_changes: Vec<f64>,
    /// Distance between the final state and the state two sweeps earlier;
    /// near zero with a large `recent_changes` means a period-2 oscillation.
    pub period_two_gap: f64,
}

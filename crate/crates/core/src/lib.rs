//! Equilibria of routing games in which users blend other users' costs into
//! their own objective.
//!
//! A user with *degree of cooperation* `α` minimizes a convex combination of
//! its own cost and the costs of the other users: `α = 0` is the selfish
//! (classical Nash) user and `α = 1` is fully altruistic. The crate covers
//!
//!  - small directed networks with linear and M/M/1 link latencies
//!    ([`network`], [`cost`]),
//!  - Nash equilibria of the cooperation-weighted game by multi-start
//!    best-response dynamics, plus Kuhn-Tucker and unilateral-deviation
//!    verification ([`nash`]),
//!  - mixed equilibria of one cooperative group user and a Wardrop population
//!    on two parallel M/M/1 links, both in closed form and numerically
//!    ([`mixed`]),
//!  - the named experiment presets, parameter sweeps and the detectors for the
//!    Braess-like and cooperation paradoxes ([`experiments`]).
//!
//! The crate is `no_std` and only needs `alloc`. File formats, the command
//! line and threading live in the `cooproute` companion crate.
#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod cost;
pub mod error;
pub mod experiments;
pub mod mixed;
pub mod nash;
pub mod network;

mod num;

pub use cost::{CooperationProfile, CostReport, CostSpec};
pub use error::{ExperimentError, MixedError, ModelError, SolveError};
pub use nash::{EquilibriumResult, EquilibriumSet, RoutingGame, SolverConfig};
pub use network::{FlowProfile, LinkId, Network, NodeId, PathSet, UserId, UserSpec};

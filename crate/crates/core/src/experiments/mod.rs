//! Named experiment presets, parameter sweeps and paradox detection.

use alloc::string::String;
use alloc::vec::Vec;

use crate::cost::CooperationProfile;
use crate::error::{ModelError, SolveError};
use crate::nash::{EquilibriumSet, Executor, RoutingGame, SolverConfig};
use crate::network::{Network, UserSpec};

mod paradox;
mod presets;
mod sweep;

pub use paradox::{detect_braess, detect_cooperation_paradox, ParadoxKind, ParadoxReport, Witness, STRICTNESS_MARGIN};
pub use presets::{load_balancing, parallel_links, preset, Preset, PresetKind, EXTRA_PRESETS, PRESET_NAMES};
pub use sweep::{
    alpha_sweep, mixed_alpha_sweep, parameter_sweep, parameter_sweep_with, Direction, FlatRow, Grid, MixedSweepRow,
    SweepParam, SweepRow, SweepSpec, SweepTable, Track, TrackPoint, Tracks, CONTINUATION_RADIUS,
};

/// How a scalar degree of cooperation is assigned to two users.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoopMode {
    /// `alpha^1 = alpha^2 = alpha`.
    Symmetric,
    /// `alpha^1 = alpha`, every other user selfish.
    Asymmetric,
}

impl CoopMode {
    pub fn label(self) -> &'static str {
        match self {
            Self::Symmetric => "symmetric",
            Self::Asymmetric => "asymmetric",
        }
    }

    pub fn degrees(self, alpha: f64, users: usize) -> Vec<f64> {
        (0..users).map(|i| if i == 0 || self == Self::Symmetric { alpha } else { 0.0 }).collect()
    }
}

/// A parameter value a preset had to assume because the source leaves it
/// unstated or contradicts itself.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Annotation {
    pub field: String,
    pub note: String,
}

/// A fully specified game plus the solver settings used on it.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub network: Network,
    pub users: Vec<UserSpec>,
    pub cooperation: CooperationProfile,
    pub solver: SolverConfig,
}

impl Scenario {
    /// Validates dimensions and feasibility.
    pub fn new(
        network: Network,
        users: Vec<UserSpec>,
        cooperation: CooperationProfile,
        solver: SolverConfig,
    ) -> Result<Self, ModelError> {
        let s = Self { network, users, cooperation, solver };
        s.game()?;
        Ok(s)
    }

    pub fn game(&self) -> Result<RoutingGame, ModelError> {
        RoutingGame::new(self.network.clone(), self.users.clone(), self.cooperation.clone(), self.solver.path_cap)
    }

    pub fn solve_with<E: Executor>(&self, exec: &E) -> Result<EquilibriumSet, SolveError> {
        self.game()?.multistart_nash_with(&self.solver, exec)
    }

    pub fn with_cooperation(&self, cooperation: CooperationProfile) -> Self {
        Self { cooperation, ..self.clone() }
    }
}

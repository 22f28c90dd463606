use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;

use super::sweep::{Grid, SweepParam, SweepSpec};
use super::{Annotation, CoopMode, Scenario};
use crate::cost::{CooperationProfile, CostSpec};
use crate::error::{ExperimentError, ModelError};
use crate::mixed::MixedScenario;
use crate::nash::SolverConfig;
use crate::network::{LinkId, LinkMultiplicity, LinkSpec, Network, NodeId, UserSpec};

/// Presets listed by default.
pub const PRESET_NAMES: [&str; 8] =
    ["exp1", "exp2", "exp3", "exp4", "exp5", "braess-lb-asym", "braess-lb-sym", "mixed-fig7"];

/// Variant presets that are not part of the default listing.
pub const EXTRA_PRESETS: [&str; 2] = ["exp3-text", "exp4-feasible"];

#[derive(Debug, Clone, PartialEq)]
pub enum PresetKind {
    Sweep(SweepSpec),
    Mixed { scenario: MixedScenario, grid: Grid },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Preset {
    pub name: &'static str,
    pub summary: &'static str,
    pub kind: PresetKind,
    /// Assumed values, one per field.
    pub annotations: Vec<Annotation>,
}

/// Load-balancing network: nodes 1, 2, 3; direct links `l1: 1->3`,
/// `l2: 2->3`; cross links `l3: 1->2`, `l4: 2->1`. User 1 ships from node 1
/// and user 2 from node 2, both to node 3.
pub fn load_balancing(
    direct: [CostSpec; 2],
    cross: [CostSpec; 2],
    demands: [f64; 2],
) -> Result<(Network, Vec<UserSpec>), ModelError> {
    let net = Network::new(
        [1, 2, 3].map(NodeId),
        [
            LinkSpec::new(1, 1, 3, direct[0]),
            LinkSpec::new(2, 2, 3, direct[1]),
            LinkSpec::new(3, 1, 2, cross[0]),
            LinkSpec::new(4, 2, 1, cross[1]),
        ],
    )?;
    let users = vec![UserSpec::new(1, 1, 3, demands[0]), UserSpec::new(2, 2, 3, demands[1])];
    Ok((net, users))
}

/// Two parallel links `l1`, `l2` from node 1 to node 2 shared by two users.
pub fn parallel_links(links: [CostSpec; 2], demands: [f64; 2]) -> Result<(Network, Vec<UserSpec>), ModelError> {
    let net = Network::with_multiplicity(
        [NodeId(1), NodeId(2)],
        [LinkSpec::new(1, 1, 2, links[0]), LinkSpec::new(2, 1, 2, links[1])],
        LinkMultiplicity::Parallel,
    )?;
    let users = vec![UserSpec::new(1, 1, 2, demands[0]), UserSpec::new(2, 1, 2, demands[1])];
    Ok((net, users))
}

fn note(field: &str, note: &str) -> Annotation {
    Annotation { field: field.to_string(), note: note.to_string() }
}

fn scenario((network, users): (Network, Vec<UserSpec>), alphas: [f64; 2]) -> Result<Scenario, ExperimentError> {
    let coop = CooperationProfile::uniform(&alphas)?;
    Ok(Scenario::new(network, users, coop, SolverConfig::default())?)
}

fn alpha_grid() -> Grid {
    Grid { start: 0.0, stop: 1.0, step: 0.01 }
}

fn alpha_sweep_preset(
    name: &'static str,
    summary: &'static str,
    base: Scenario,
    annotations: Vec<Annotation>,
) -> Preset {
    Preset {
        name,
        summary,
        kind: PresetKind::Sweep(SweepSpec { param: SweepParam::Alpha(CoopMode::Asymmetric), grid: alpha_grid(), base }),
        annotations,
    }
}

/// Looks up a preset by name.
pub fn preset(name: &str) -> Result<Preset, ExperimentError> {
    let lin = CostSpec::linear;
    let mm1 = CostSpec::mm1;
    let cross = [LinkId(3), LinkId(4)];
    let preset = match name {
        "exp1" => alpha_sweep_preset(
            "exp1",
            "load balancing, linear costs a=1, c=0, d=0.5, alpha sweep",
            scenario(load_balancing([lin(1.0, 0.0); 2], [lin(0.0, 0.5); 2], [1.0, 1.0])?, [0.0; 2])?,
            vec![
                note("g1, g2", "assumed 0: unstated; gives J = 1 without cross links"),
                note("r1, r2", "assumed 1: unstated; gives J = 1 without cross links"),
            ],
        ),
        "exp2" => alpha_sweep_preset(
            "exp2",
            "parallel links, linear costs a=1, c=0, d=0.5, alpha sweep",
            scenario(parallel_links([lin(1.0, 0.0), lin(0.0, 0.5)], [1.0, 1.0])?, [0.0; 2])?,
            vec![
                note(
                    "l2",
                    "assumed T = c f + d: the cross-link coefficients c, d are applied to the second parallel link",
                ),
                note("g1", "assumed 0: unstated"),
                note("r1, r2", "assumed 1: unstated"),
            ],
        ),
        "exp3" => alpha_sweep_preset(
            "exp3",
            "load balancing, M/M/1 C1=C2=4.1, C3=C4=5, r=(1,1), alpha sweep",
            scenario(load_balancing([mm1(4.1); 2], [mm1(5.0); 2], [1.0, 1.0])?, [0.0; 2])?,
            vec![note(
                "cost model",
                "caption parameters (M/M/1) followed; the body text gives linear costs instead, see exp3-text",
            )],
        ),
        "exp3-text" => alpha_sweep_preset(
            "exp3-text",
            "load balancing, linear a1=4, g1=1, a2=2, g2=2, r=(1.2,1), alpha sweep",
            scenario(load_balancing([lin(4.0, 1.0), lin(2.0, 2.0)], [lin(0.0, 0.5); 2], [1.2, 1.0])?, [0.0; 2])?,
            vec![
                note("cost model", "body-text parameters followed instead of the caption"),
                note("c, d", "assumed c=0, d=0.5 on the cross links, as in exp1"),
            ],
        ),
        "exp4" => {
            // The caption capacities cannot carry the demand; building the
            // scenario reports the violated constraint.
            let base = scenario(parallel_links([mm1(0.001); 2], [1.0, 1.0])?, [0.0; 2])?;
            alpha_sweep_preset("exp4", "parallel links, M/M/1 C1=C2=0.001, r=(1,1)", base, Vec::new())
        }
        "exp4-feasible" => alpha_sweep_preset(
            "exp4-feasible",
            "parallel links, M/M/1 C1=C2=4.1, r=(1,1), alpha sweep",
            scenario(parallel_links([mm1(4.1); 2], [1.0, 1.0])?, [0.0; 2])?,
            vec![note("C1, C2", "corrected to 4.1: the stated 0.001 is infeasible for r=(1,1)")],
        ),
        "exp5" => Preset {
            name: "exp5",
            summary: "load balancing, linear a1=a2=4.1, d=0.5, alpha=0.93, cross slope c swept 0..1000",
            kind: PresetKind::Sweep(SweepSpec {
                param: SweepParam::LinearSlope(cross.to_vec()),
                grid: Grid { start: 0.0, stop: 1000.0, step: 20.0 },
                base: scenario(load_balancing([lin(4.1, 0.0); 2], [lin(0.0, 0.5); 2], [1.0, 1.0])?, [0.93, 0.93])?,
            }),
            annotations: vec![note("g1, g2", "assumed 0: unstated"), note("r1, r2", "assumed 1: unstated")],
        },
        "braess-lb-asym" | "braess-lb-sym" => {
            let (name, summary, alphas) = if name == "braess-lb-asym" {
                (
                    "braess-lb-asym",
                    "load balancing, M/M/1, only user 1 cooperates, cross capacity swept 0..10",
                    [0.93, 0.0],
                )
            } else {
                ("braess-lb-sym", "load balancing, M/M/1, both users cooperate, cross capacity swept 0..10", [0.9, 0.9])
            };
            Preset {
                name,
                summary,
                kind: PresetKind::Sweep(SweepSpec {
                    param: SweepParam::Capacity(cross.to_vec()),
                    grid: Grid { start: 0.0, stop: 10.0, step: 0.5 },
                    base: scenario(load_balancing([mm1(4.1); 2], [mm1(10.0); 2], [2.0, 1.0])?, alphas)?,
                }),
                annotations: vec![note("grid step", "assumed 0.5: the cross capacity path from 0 to 10 is unstated")],
            }
        }
        "mixed-fig7" => Preset {
            name: "mixed-fig7",
            summary: "mixed equilibrium on parallel M/M/1 links C1=4, C2=3, r1=1.2, r2=1, alpha sweep",
            kind: PresetKind::Mixed { scenario: MixedScenario::new(4.0, 3.0, 1.2, 1.0, 0.0)?, grid: alpha_grid() },
            annotations: vec![note("alpha grid", "assumed 0:1:0.01")],
        },
        other => return Err(ExperimentError::UnknownPreset(other.to_string())),
    };
    Ok(preset)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_listed_preset_resolves_except_exp4() {
        for name in PRESET_NAMES.iter().chain(&EXTRA_PRESETS) {
            let p = preset(name);
            if *name == "exp4" {
                assert!(matches!(p, Err(ExperimentError::Model(ModelError::Infeasible(_)))));
            } else {
                assert_eq!(p.unwrap().name, *name);
            }
        }
        assert!(matches!(preset("exp9"), Err(ExperimentError::UnknownPreset(_))));
    }

    #[test]
    fn exp3_parameters() {
        let PresetKind::Sweep(spec) = preset("exp3").unwrap().kind else { panic!() };
        let caps: Vec<f64> = spec.base.network.links().iter().map(|l| l.cost.capacity()).collect();
        assert_eq!(caps, [4.1, 4.1, 5.0, 5.0]);
        assert_eq!(spec.base.users.iter().map(|u| u.demand).collect::<Vec<_>>(), [1.0, 1.0]);
    }

    #[test]
    fn braess_asym_parameters() {
        let p = preset("braess-lb-asym").unwrap();
        let PresetKind::Sweep(spec) = p.kind else { panic!() };
        assert_eq!(spec.base.cooperation.degree(0), 0.93);
        assert_eq!(spec.base.cooperation.degree(1), 0.0);
        assert_eq!(spec.grid.values().unwrap().first(), Some(&0.0));
        assert_eq!(spec.grid.values().unwrap().last(), Some(&10.0));
        assert!(!p.annotations.is_empty());
    }

    #[test]
    fn exp5_grid() {
        let PresetKind::Sweep(spec) = preset("exp5").unwrap().kind else { panic!() };
        let v = spec.grid.values().unwrap();
        assert_eq!((v.len(), v[1], v[50]), (51, 20.0, 1000.0));
        assert_eq!(spec.base.cooperation.degree(1), 0.93);
    }
}

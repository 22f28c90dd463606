use cooproute_core::experiments::{load_balancing, parallel_links};
use cooproute_core::{CooperationProfile, CostSpec, EquilibriumSet, RoutingGame, SolverConfig};
use proptest::prelude::*;

fn parallel_game(caps: (f64, f64), demands: (f64, f64), alphas: (f64, f64)) -> RoutingGame {
    let (net, users) = parallel_links([CostSpec::mm1(caps.0), CostSpec::mm1(caps.1)], [demands.0, demands.1]).unwrap();
    RoutingGame::new(net, users, CooperationProfile::uniform(&[alphas.0, alphas.1]).unwrap(), 64).unwrap()
}

fn lb_game(cross: f64, alphas: (f64, f64)) -> RoutingGame {
    let (net, users) = load_balancing([CostSpec::mm1(4.1); 2], [CostSpec::mm1(cross); 2], [2.0, 1.0]).unwrap();
    RoutingGame::new(net, users, CooperationProfile::uniform(&[alphas.0, alphas.1]).unwrap(), 64).unwrap()
}

fn assert_verified(set: &EquilibriumSet) -> Result<(), TestCaseError> {
    for e in &set.equilibria {
        prop_assert!(e.verification.passed);
        prop_assert!(e.kkt_residual() <= 1e-6);
        prop_assert!(e.verification.max_deviation_gain() < 1e-6);
    }
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn low_cooperation_on_parallel_links_is_unique(
        caps in (2.5..6.0f64, 2.5..6.0f64),
        demands in (0.2..1.0f64, 0.2..1.0f64),
        alphas in (0.0..0.5f64, 0.0..0.5f64),
    ) {
        let set = parallel_game(caps, demands, alphas).multistart_nash(&SolverConfig::default()).unwrap();
        prop_assert_eq!(set.len(), 1);
        prop_assert!(set.equilibria[0].diameter < 1e-5);
        assert_verified(&set)?;
    }

    #[test]
    fn repeated_runs_are_identical(cross in 0.5..12.0f64, a in 0.0..1.0f64, b in 0.0..1.0f64) {
        let game = lb_game(cross, (a, b));
        let cfg = SolverConfig::default();
        let first = game.multistart_nash(&cfg).unwrap();
        prop_assert_eq!(&first, &game.multistart_nash(&cfg).unwrap());
        assert_verified(&first)?;
    }

    #[test]
    fn relabelling_users_relabels_equilibria(
        caps in (2.5..6.0f64, 2.5..6.0f64),
        demands in (0.2..1.0f64, 0.2..1.0f64),
        alphas in (0.0..1.0f64, 0.0..1.0f64),
    ) {
        let game = parallel_game(caps, demands, alphas);
        let swapped = game.permuted(&[1, 0]).unwrap();
        let cfg = SolverConfig::default();
        let a = game.multistart_nash(&cfg).unwrap();
        let b = swapped.multistart_nash(&cfg).unwrap();
        prop_assert_eq!(a.len(), b.len());
        for e in &a.equilibria {
            let f = e.profile.user_link_flows();
            let matched = b.equilibria.iter().any(|g| {
                let h = g.profile.user_link_flows();
                (0..2).all(|l| (f[0][l] - h[1][l]).abs() < 1e-6 && (f[1][l] - h[0][l]).abs() < 1e-6)
            });
            prop_assert!(matched, "no relabelled match for {:?}", f);
        }
    }

    /// Two equilibria with all flows positive cannot coexist: whenever
    /// several are found, supports differ or some user leaves a path empty.
    #[test]
    fn multiple_equilibria_involve_unused_paths(cross in 0.5..12.0f64, a in 0.5..1.0f64, b in 0.0..1.0f64) {
        let set = lb_game(cross, (a, b)).multistart_nash(&SolverConfig::default()).unwrap();
        if set.len() >= 2 {
            let support = |k: usize| -> Vec<Vec<bool>> {
                set.equilibria[k].profile.path_flows().iter().map(|r| r.iter().map(|f| *f > 1e-9).collect()).collect()
            };
            let differ = (1..set.len()).any(|k| support(k) != support(0));
            let some_zero = (0..set.len()).any(|k| support(k).iter().flatten().any(|used| !used));
            prop_assert!(differ || some_zero);
        }
    }
}

#[test]
fn perturbed_equilibrium_fails_verification() {
    let game = lb_game(10.0, (0.93, 0.0));
    let cfg = SolverConfig::default();
    let set = game.multistart_nash(&cfg).unwrap();
    for e in &set.equilibria {
        let mut flows = e.profile.path_flows().to_vec();
        // move 0.05 of user 1 from one path to the other, whichever way is feasible
        let (from, to) = if flows[0][0] >= 0.05 { (0, 1) } else { (1, 0) };
        flows[0][from] -= 0.05;
        flows[0][to] += 0.05;
        let moved = game.profile(flows).unwrap();
        let v = game.verify_nash(&moved, cfg.verify_tol, cfg.deviation_points);
        assert!(!v.passed);
        assert!(v.max_deviation_gain() > 1e-6 || v.kkt_residual() > 1e-6);
    }
}

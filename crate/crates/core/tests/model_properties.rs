use cooproute_core::cost::{marginal_cost, operating_cost, user_costs};
use cooproute_core::network::{check_feasibility, LinkMultiplicity, LinkSpec};
use cooproute_core::{CooperationProfile, CostSpec, FlowProfile, Network, NodeId, PathSet, UserSpec};
use proptest::prelude::*;

fn load_balancing(costs: [CostSpec; 4]) -> Network {
    let ends = [(1, 3), (2, 3), (1, 2), (2, 1)];
    Network::new([1, 2, 3].map(NodeId), (0..4).map(|k| LinkSpec::new(k as u32 + 1, ends[k].0, ends[k].1, costs[k])))
        .unwrap()
}

fn cost_strategy() -> impl Strategy<Value = CostSpec> {
    prop_oneof![
        (0.1..5.0f64, 0.0..2.0f64).prop_map(|(a, g)| CostSpec::linear(a, g)),
        (10.0..20.0f64).prop_map(CostSpec::mm1),
    ]
}

/// Splits `demand` over `n` paths by the given weights.
fn split(demand: f64, weights: &[f64]) -> Vec<f64> {
    let total: f64 = weights.iter().sum();
    let mut x: Vec<f64> = weights.iter().map(|w| demand * w / total).collect();
    let rest: f64 = x[1..].iter().sum();
    x[0] = demand - rest;
    x
}

proptest! {
    #[test]
    fn assembled_profiles_conserve_flow_and_round_trip(
        costs in prop::array::uniform4(cost_strategy()),
        demands in (0.0..3.0f64, 0.0..3.0f64),
        w in prop::collection::vec(0.01..1.0f64, 4),
    ) {
        let net = load_balancing(costs);
        let users = vec![UserSpec::new(1, 1, 3, demands.0), UserSpec::new(2, 2, 3, demands.1)];
        let paths = PathSet::build(&net, &users, 64).unwrap();
        let flows = vec![split(demands.0, &w[..2]), split(demands.1, &w[2..])];
        let profile = FlowProfile::assemble(&paths, flows.clone(), &users).unwrap();
        let report = check_feasibility(&profile, &net, &users);
        prop_assert!(report.max_conservation_residual() <= 1e-12);
        prop_assert_eq!(profile.path_flows(), &flows[..]);
    }

    #[test]
    fn path_enumeration_ignores_link_order(
        present in prop::collection::vec(any::<bool>(), 12),
        order in Just((0..12usize).collect::<Vec<_>>()).prop_shuffle(),
    ) {
        let mut pairs = Vec::new();
        for a in 1..=4u32 {
            for b in (1..=4u32).filter(|&b| b != a) {
                pairs.push((a, b));
            }
        }
        let spec = |k: usize| LinkSpec::new(k as u32 + 1, pairs[k].0, pairs[k].1, CostSpec::linear(1.0, 0.0));
        let sorted: Vec<LinkSpec> = (0..12).filter(|&k| present[k]).map(spec).collect();
        let shuffled: Vec<LinkSpec> = order.iter().copied().filter(|&k| present[k]).map(spec).collect();
        let a = Network::new([1, 2, 3, 4].map(NodeId), sorted).unwrap();
        let b = Network::new([1, 2, 3, 4].map(NodeId), shuffled).unwrap();
        let pa = a.enumerate_paths(NodeId(1), NodeId(4), 64);
        let pb = b.enumerate_paths(NodeId(1), NodeId(4), 64);
        match (pa, pb) {
            (Ok(pa), Ok(pb)) => {
                let ids = |n: &Network, p: &[cooproute_core::network::Path]| {
                    p.iter().map(|q| q.link_ids(n)).collect::<Vec<_>>()
                };
                prop_assert_eq!(ids(&a, &pa), ids(&b, &pb));
            }
            (Err(x), Err(y)) => prop_assert_eq!(x, y),
            _ => prop_assert!(false, "enumeration succeeded for one order only"),
        }
    }

    #[test]
    fn latencies_are_increasing_and_convex(cost in cost_strategy(), f in 0.0..9.0f64) {
        let h = 1e-3;
        let t = |x: f64| cost.latency(x);
        prop_assert!(t(f + h) > t(f));
        prop_assert!(t(f + 2.0 * h) - 2.0 * t(f + h) + t(f) >= -1e-9);
    }

    #[test]
    fn doubly_stochastic_blend_preserves_total_cost(
        costs in prop::array::uniform4(cost_strategy()),
        alpha in 0.0..1.0f64,
        w in prop::collection::vec(0.01..1.0f64, 4),
    ) {
        let net = load_balancing(costs);
        let users = vec![UserSpec::new(1, 1, 3, 1.0), UserSpec::new(2, 2, 3, 1.5)];
        let paths = PathSet::build(&net, &users, 64).unwrap();
        let profile = FlowProfile::assemble(&paths, vec![split(1.0, &w[..2]), split(1.5, &w[2..])], &users).unwrap();
        // symmetric two-user blend: columns sum to one
        let coop = CooperationProfile::uniform(&[alpha, alpha]).unwrap();
        let raw: f64 = user_costs(&profile, &net).iter().sum();
        let blended: f64 = (0..2).map(|i| operating_cost(&profile, &net, &coop, i)).sum();
        prop_assert!((raw - blended).abs() <= 1e-12 * raw.max(1.0));
    }

    #[test]
    fn uniform_blend_matches_two_user_identity(
        costs in prop::array::uniform4(cost_strategy()),
        alphas in (0.0..1.0f64, 0.0..1.0f64),
        w in prop::collection::vec(0.01..1.0f64, 4),
    ) {
        let net = load_balancing(costs);
        let users = vec![UserSpec::new(1, 1, 3, 2.0), UserSpec::new(2, 2, 3, 1.0)];
        let paths = PathSet::build(&net, &users, 64).unwrap();
        let profile = FlowProfile::assemble(&paths, vec![split(2.0, &w[..2]), split(1.0, &w[2..])], &users).unwrap();
        let coop = CooperationProfile::uniform(&[alphas.0, alphas.1]).unwrap();
        let j = user_costs(&profile, &net);
        let expect = [(1.0 - alphas.0) * j[0] + alphas.0 * j[1], (1.0 - alphas.1) * j[1] + alphas.1 * j[0]];
        for (i, want) in expect.iter().enumerate() {
            let got = operating_cost(&profile, &net, &coop, i);
            prop_assert!((got - want).abs() <= 1e-12 * want.max(1.0));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    /// On parallel links every path is one link, so changing a user's
    /// demand moves exactly its flow on that link.
    #[test]
    fn marginal_cost_matches_finite_differences(
        caps in (3.0..6.0f64, 3.0..6.0f64),
        linear in any::<bool>(),
        flows in prop::collection::vec(0.1..1.0f64, 4),
        alphas in (0.0..1.0f64, 0.0..1.0f64),
        i in 0..2usize,
        l in 0..2usize,
    ) {
        let costs = if linear {
            [CostSpec::linear(caps.0, 0.5), CostSpec::linear(caps.1, 0.2)]
        } else {
            [CostSpec::mm1(caps.0), CostSpec::mm1(caps.1)]
        };
        let net = Network::with_multiplicity(
            [NodeId(1), NodeId(2)],
            [LinkSpec::new(1, 1, 2, costs[0]), LinkSpec::new(2, 1, 2, costs[1])],
            LinkMultiplicity::Parallel,
        )
        .unwrap();
        let coop = CooperationProfile::uniform(&[alphas.0, alphas.1]).unwrap();
        let base = [[flows[0], flows[1]], [flows[2], flows[3]]];
        let jhat = |delta: f64| {
            let mut x = base;
            x[i][l] += delta;
            let users: Vec<UserSpec> =
                (0..2).map(|k| UserSpec::new(k as u32 + 1, 1, 2, x[k][0] + x[k][1])).collect();
            let paths = PathSet::build(&net, &users, 64).unwrap();
            let p = FlowProfile::assemble(&paths, x.iter().map(|r| r.to_vec()).collect(), &users).unwrap();
            let cost = operating_cost(&p, &net, &coop, i);
            (p, cost)
        };
        let h = 1e-5;
        let (p0, _) = jhat(0.0);
        let fd = (jhat(h).1 - jhat(-h).1) / (2.0 * h);
        let k = marginal_cost(&p0, &net, &coop, i, l);
        prop_assert!((fd - k).abs() <= 1e-5 * k.abs().max(1.0), "fd {} vs {}", fd, k);
    }
}

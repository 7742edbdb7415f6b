//! Property-based invariants over randomized structures and profiles.

use proptest::prelude::*;
use seqlearn_core::beliefs::{ActionHistory, LikelihoodEngine, StrategyProfile};
use seqlearn_core::netform::CapacityStructure;
use seqlearn_core::signals::{SignalStructure, Theta};

fn structures() -> impl Strategy<Value = SignalStructure> {
    prop_oneof![
        Just(SignalStructure::linear_unbounded()),
        (0.05f64..0.95).prop_map(|l| SignalStructure::bounded_linear(l).unwrap()),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    /// Inverse-CDF sampling composed with the CDF is the identity.
    #[test]
    fn quantile_roundtrip(structure in structures(), u in 1e-6f64..1.0 - 1e-6, one in any::<bool>()) {
        let state = if one { Theta::One } else { Theta::Zero };
        let s = structure.sample_signal(state, u);
        let back = structure.cdf(state, s).unwrap();
        prop_assert!((back - u).abs() <= 1e-10, "u = {u}, cdf(quantile) = {back}");
    }

    /// Symmetric structures have mirrored private beliefs.
    #[test]
    fn belief_symmetry(structure in structures(), s in -0.999f64..0.999) {
        let a = structure.private_belief(s).unwrap();
        let b = structure.private_belief(-s).unwrap();
        prop_assert!((a + b - 1.0).abs() <= 1e-12);
    }

    /// The likelihood ratio is strictly increasing on a fine grid.
    #[test]
    fn mlrp_on_grid(structure in structures()) {
        let report = structure.validate(1001).unwrap();
        prop_assert!(report.mlrp && report.positivity && report.symmetry);
    }

    /// History likelihoods are a probability distribution over the 2^k
    /// action sequences for any cutoff profile on either canonical
    /// topology.
    #[test]
    fn history_likelihoods_normalize(
        structure in structures(),
        cutoffs in proptest::collection::vec(0.0f64..1.0, 5),
        prefix_topology in any::<bool>(),
    ) {
        let k = cutoffs.len() as u32;
        let mut padded = vec![0.0];
        padded.extend(cutoffs);
        let profile = if prefix_topology {
            let ks: Vec<u32> = (0..=k).collect();
            StrategyProfile::first_k(&ks, &padded).unwrap()
        } else {
            StrategyProfile::line(&padded).unwrap()
        };
        let engine = LikelihoodEngine::new(&profile, &structure).unwrap();
        for theta in [Theta::Zero, Theta::One] {
            let total: f64 = (0..(1u64 << (k + 1)))
                .map(|bits| {
                    engine
                        .history_likelihood(&ActionHistory::from_bits(k + 1, bits), theta)
                        .unwrap()
                })
                .sum();
            prop_assert!((total - 1.0).abs() <= 1e-10, "theta {theta:?}: sum {total}");
        }
    }

    /// Posteriors stay in [0, 1] and respond monotonically to the signal.
    #[test]
    fn posterior_monotone_in_signal(
        structure in structures(),
        bits in 0u64..8,
    ) {
        let profile = StrategyProfile::line(&[0.0, 0.4, 0.5]).unwrap();
        let engine = LikelihoodEngine::new(&profile, &structure).unwrap();
        let h = ActionHistory::from_bits(3, bits);
        let mut prev = -1.0;
        for i in 0..50 {
            let s = -0.98 + 1.96 * i as f64 / 49.0;
            let r = engine.posterior(s, &h).unwrap();
            prop_assert!((0.0..=1.0).contains(&r));
            prop_assert!(r >= prev - 1e-12);
            prev = r;
        }
    }

    /// Capacity is always clamped by the number of predecessors.
    #[test]
    fn capacity_clamped(n in 1u32..5000, k in 0u32..64, zeros in 0u32..50) {
        let families = [
            CapacityStructure::FullHistory,
            CapacityStructure::Constant(k.max(1)),
            CapacityStructure::ImmediateOne,
            CapacityStructure::SqrtGrowth,
            CapacityStructure::ZeroPrefix { zeros, inner: Box::new(CapacityStructure::SqrtGrowth) },
        ];
        for family in &families {
            prop_assert!(family.capacity(n) <= n - 1);
        }
    }
}

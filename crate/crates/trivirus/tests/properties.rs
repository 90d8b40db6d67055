// Structural invariants under randomized inputs: state round trips, the
// dead-virus dichotomy, domain validation, Perron monotonicity, threshold
// dichotomy of the single-virus solver, family residuals, determinism.

use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use trivirus::families;
use trivirus::model::{self, SystemState, TriVirusParams};
use trivirus::sim::{self, SimConfig};
use trivirus::spectral::{self, OrderVerdict};

// Ring backbone keeps every drawn matrix irreducible.
fn ring_backed(n: usize, entries: &[f64], ring: f64) -> DMatrix<f64> {
    let mut b = DMatrix::from_fn(n, n, |i, j| entries[i * n + j]);
    for i in 0..n {
        b[(i, (i + 1) % n)] += ring;
    }
    b
}

prop_compose! {
    fn arb_dim()(n in 1usize..=5) -> usize { n }
}

prop_compose! {
    fn arb_system()(n in arb_dim())(
        n in Just(n),
        deltas in prop::collection::vec(0.3f64..1.5, 3 * n),
        betas in prop::collection::vec(0.0f64..1.0, 3 * n * n),
    ) -> TriVirusParams {
        let deltas = (0..3)
            .map(|k| DVector::from_fn(n, |i, _| deltas[k * n + i]))
            .collect();
        let betas = (0..3)
            .map(|k| ring_backed(n, &betas[k * n * n..(k + 1) * n * n], 0.3))
            .collect();
        TriVirusParams::new(deltas, betas).expect("draws are positive and dimension-consistent")
    }
}

// Per-node shares drawn jointly and normalized, so totals stay below 1.
prop_compose! {
    fn arb_state(n: usize)(
        shares in prop::collection::vec(1e-3f64..1.0, 4 * n),
    ) -> SystemState {
        let mut state = SystemState::zeros(3, n);
        for i in 0..n {
            let sum: f64 = (0..4).map(|k| shares[4 * i + k]).sum();
            for k in 0..3 {
                state.block_mut(k)[i] = shares[4 * i + k] / sum;
            }
        }
        state
    }
}

proptest! {
    #[test]
    fn flat_round_trip_preserves_blocks(n in arb_dim(), entries in prop::collection::vec(0.0f64..0.33, 15)) {
        let mut state = SystemState::zeros(3, n);
        for k in 0..3 {
            for i in 0..n {
                state.block_mut(k)[i] = entries[k * n + i];
            }
        }
        let back = SystemState::from_flat(3, n, &state.flat());
        prop_assert_eq!(state.max_distance(&back), 0.0);
        let totals = state.node_totals();
        for i in 0..n {
            let direct: f64 = (0..3).map(|k| state.block(k)[i]).sum();
            prop_assert_eq!(totals[i], direct);
        }
    }

    #[test]
    fn extinct_viruses_stay_extinct((params, seed, dead) in arb_system().prop_flat_map(|p| {
        (Just(p), any::<u64>(), 0usize..3)
    })) {
        let n = params.node_count();
        let mut state = sim::random_initial_condition(n, seed);
        state.block_mut(dead).fill(0.0);
        let field = model::vector_field_unchecked(&params, &state);
        prop_assert_eq!(field.block(dead).amax(), 0.0);
    }

    #[test]
    fn domain_validation_accepts_interior_and_flags_violations(
        (params, state) in arb_system().prop_flat_map(|p| {
            let n = p.node_count();
            (Just(p), arb_state(n))
        }),
        node in 0usize..5,
    ) {
        prop_assert!(model::validate_state(&state, 1e-12).is_empty());
        let n = state.node_count();
        let node = node % n;

        let mut negative = state.clone();
        negative.block_mut(0)[node] = -1e-6;
        prop_assert!(!model::validate_state(&negative, 1e-12).is_empty());

        let mut crowded = state.clone();
        let total = crowded.node_totals()[node];
        crowded.block_mut(0)[node] += (1.0 - total) + 1e-6;
        prop_assert!(!model::validate_state(&crowded, 1e-12).is_empty());
    }

    #[test]
    fn spectral_radius_grows_with_any_entry(
        n in 2usize..=6,
        entries in prop::collection::vec(0.0f64..1.0, 36),
        cell in (0usize..36, 0.05f64..1.0),
    ) {
        let a = ring_backed(n, &entries, 0.3);
        let (i, j) = (cell.0 / n % n, cell.0 % n);
        let mut b = a.clone();
        b[(i, j)] += cell.1;
        let ra = spectral::spectral_radius(&a).unwrap();
        let rb = spectral::spectral_radius(&b).unwrap();
        prop_assert!(rb > ra, "radius must rise: {} vs {}", ra, rb);
    }

    #[test]
    fn perron_pair_agrees_with_dense_radius(
        n in 2usize..=6,
        entries in prop::collection::vec(0.0f64..1.0, 36),
    ) {
        let a = ring_backed(n, &entries, 0.3);
        let (r, v) = spectral::perron_pair(&a).unwrap();
        prop_assert!(v.min() > 0.0);
        let residual = (&a * &v - &v * r).amax();
        prop_assert!(residual < 1e-8 * r.max(1.0), "residual {}", residual);
        let dense = spectral::spectral_radius(&a).unwrap();
        prop_assert!((r - dense).abs() < 1e-8 * r.max(1.0));
    }

    #[test]
    fn single_virus_solver_obeys_the_threshold(
        n in 2usize..=6,
        entries in prop::collection::vec(0.0f64..1.0, 36),
        deltas in prop::collection::vec(0.5f64..1.5, 6),
        scale in 0.3f64..3.0,
    ) {
        let b = ring_backed(n, &entries, 0.3) * scale;
        let d = DVector::from_fn(n, |i, _| deltas[i]);
        let ratio = DMatrix::from_fn(n, n, |i, j| b[(i, j)] / d[i]);
        let rho = spectral::spectral_radius(&ratio).unwrap();
        prop_assume!((rho - 1.0).abs() > 0.01);
        let solved = trivirus::equilibria::single_virus_equilibrium(&d, &b).unwrap();
        if rho > 1.0 {
            let x = solved.expect("above threshold admits an endemic state");
            prop_assert!(x.min() > 0.0 && x.max() < 1.0);
            let residual = {
                let xb = &b * &x;
                DVector::from_fn(n, |i, _| -d[i] * x[i] + (1.0 - x[i]) * xb[i]).amax()
            };
            prop_assert!(residual < 1e-10, "residual {}", residual);
        } else {
            prop_assert!(solved.is_none());
        }
    }

    #[test]
    fn order_verdicts_match_their_definitions(
        n in 1usize..=4,
        entries in prop::collection::vec(0.0f64..1.0, 16),
        cell in 0usize..16,
        bump in 0.1f64..1.0,
    ) {
        let a = ring_backed(n, &entries, 0.1);
        prop_assert_eq!(spectral::elementwise_greater(&a, &a).unwrap(), OrderVerdict::GreaterEqual);
        prop_assert!(!spectral::elementwise_greater(&a, &a).unwrap().dominates());

        let everywhere = a.map(|v| v + bump);
        prop_assert_eq!(spectral::elementwise_greater(&everywhere, &a).unwrap(), OrderVerdict::StrictlyGreater);

        let (i, j) = (cell / n % n, cell % n);
        let mut one_up = a.clone();
        one_up[(i, j)] += bump;
        let verdict = spectral::elementwise_greater(&one_up, &a).unwrap();
        if n == 1 {
            prop_assert_eq!(verdict, OrderVerdict::StrictlyGreater);
        } else {
            prop_assert_eq!(verdict, OrderVerdict::Greater);
        }
        prop_assert!(verdict.dominates());

        let mut mixed = one_up.clone();
        mixed[((i + 1) % n, j)] -= bump + entries[((i + 1) % n) * n + j] + 0.05;
        if n > 1 {
            prop_assert_eq!(spectral::elementwise_greater(&mixed, &a).unwrap(), OrderVerdict::Incomparable);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn line_family_states_are_equilibria(
        b1_entries in prop::collection::vec(0.0f64..1.0, 16),
        m_entries in prop::collection::vec(0.0f64..1.0, 16),
        b3_entries in prop::collection::vec(0.0f64..1.0, 16),
        beta1 in 0.0f64..=1.0,
    ) {
        let n = 4;
        // ring weight 1.3 puts every row sum of B1 above 1, hence rho > 1
        let b1 = ring_backed(n, &b1_entries, 1.3);
        let m = ring_backed(n, &m_entries, 0.3);
        let b3 = ring_backed(n, &b3_entries, 0.3);
        let family = families::build_line_family(&b1, &m, &b3).unwrap();
        prop_assert!(family.z.min() > 0.0 && family.z.max() < 1.0);
        let state = family.state(beta1);
        let field = model::vector_field_unchecked(family.params(), &state);
        let residual = field.blocks().iter().map(|b| b.amax()).fold(0.0, f64::max);
        prop_assert!(residual < 1e-10, "residual {} at beta1 {}", residual, beta1);
    }

    #[test]
    fn identical_virus_plane_states_are_equilibria(
        n in 2usize..=5,
        entries in prop::collection::vec(0.0f64..1.0, 25),
        weights in prop::collection::vec(0.05f64..1.0, 3),
    ) {
        // the construction fixes unit healing; ring weight 1.3 keeps rho > 1
        let b = ring_backed(n, &entries, 1.3);
        let d = DVector::from_element(n, 1.0);
        let family = families::build_plane_identical(&d, &b).unwrap();
        let sum: f64 = weights.iter().sum();
        let alpha = [weights[0] / sum, weights[1] / sum, weights[2] / sum];
        let state = family.state(alpha);
        let field = model::vector_field_unchecked(family.params(), &state);
        let residual = field.blocks().iter().map(|b| b.amax()).fold(0.0, f64::max);
        prop_assert!(residual < 1e-10, "residual {} at alpha {:?}", residual, alpha);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn integration_is_deterministic((params, seed) in arb_system().prop_flat_map(|p| {
        (Just(p), any::<u64>())
    })) {
        let n = params.node_count();
        let x0 = sim::random_initial_condition(n, seed);
        let cfg = SimConfig { horizon: 5.0, sample_interval: 0.5, ..SimConfig::default() };
        let a = sim::integrate(&params, &x0, &cfg).unwrap();
        let b = sim::integrate(&params, &x0, &cfg).unwrap();
        prop_assert_eq!(&a.times, &b.times);
        prop_assert_eq!(a.states.len(), b.states.len());
        for (sa, sb) in a.states.iter().zip(&b.states) {
            prop_assert_eq!(sa.max_distance(sb), 0.0);
        }
        prop_assert_eq!(a.termination, b.termination);
    }

    #[test]
    fn restricted_subsystem_matches_the_full_field(
        (params, seed, pair) in arb_system().prop_flat_map(|p| {
            (Just(p), any::<u64>(), prop::sample::select(vec![[0usize, 1], [0, 2], [1, 2]]))
        }),
    ) {
        let n = params.node_count();
        let full_start = sim::random_initial_condition(n, seed);
        let dead = (0..3).find(|k| !pair.contains(k)).unwrap();
        let mut full = full_start.clone();
        full.block_mut(dead).fill(0.0);

        let sub = params.restrict(&pair);
        let mut sub_state = SystemState::zeros(2, n);
        for (slot, &k) in pair.iter().enumerate() {
            sub_state.block_mut(slot).copy_from(full.block(k));
        }

        let f_full = model::vector_field_unchecked(&params, &full);
        let f_sub = model::vector_field_unchecked(&sub, &sub_state);
        for (slot, &k) in pair.iter().enumerate() {
            let gap = (f_full.block(k) - f_sub.block(slot)).amax();
            prop_assert!(gap < 1e-14, "blocks disagree by {}", gap);
        }
    }
}

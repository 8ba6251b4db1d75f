use proptest::prelude::*;

use pocf::bandit::{features, true_parameter, RidgeEstimator};
use pocf::dataset::{sample_dataset, Dataset, FeedbackKind};
use pocf::generators::{generate_game_with, random_pairwise_game, GeneratorKind, GeneratorParams};
use pocf::policy::ExplorationPolicy;
use pocf::semi_bandit::SemiBanditEstimator;
use pocf::solver::{surrogate_gap, SolverConfig, TrueMeans};
use pocf::{exact_duality_gap, CoalitionSet, ExpectationMode, GameSpec, JointAction, MixedProfile};

fn action_from(game: &GameSpec, picks: &[usize]) -> JointAction {
    let idx: Vec<usize> = (0..game.n()).map(|i| picks[i] % game.action_set(i).len()).collect();
    game.joint_action_from_indices(&idx).unwrap()
}

fn profile_from(game: &GameSpec, weights: &[f64]) -> MixedProfile {
    let mut w = weights.iter().cycle();
    let probs = (0..game.n())
        .map(|i| {
            let raw: Vec<f64> = (0..game.action_set(i).len()).map(|_| *w.next().unwrap()).collect();
            let s: f64 = raw.iter().sum();
            raw.into_iter().map(|x| x / s).collect()
        })
        .collect();
    MixedProfile::new(game, probs).unwrap()
}

fn kind_strategy() -> impl Strategy<Value = GeneratorKind> {
    prop::sample::select(vec![
        GeneratorKind::Uniform,
        GeneratorKind::Gaussian,
        GeneratorKind::SizeUniform,
        GeneratorKind::SizeGaussian,
    ])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn coalition_set_roundtrip(bits in 1u64..(1 << 20)) {
        let s = CoalitionSet::from_bits(bits);
        prop_assert_eq!(CoalitionSet::from_one_based(&s.to_one_based()).unwrap(), s);
        prop_assert_eq!(s.iter().count(), s.len());
    }

    #[test]
    fn potential_identity_on_size_independent_games(
        n in 2usize..6, k in 1usize..4, seed in any::<u64>(),
        picks in prop::collection::vec(0usize..8, 6), i in 0usize..6, dev in 0usize..8,
    ) {
        let game = random_pairwise_game(n, k, 3, seed).unwrap();
        let i = i % n;
        let a = action_from(&game, &picks);
        let b = a.with_action(i, game.action_set(i)[dev % game.action_set(i).len()]);
        let lhs = game.potential(&a).unwrap() - game.potential(&b).unwrap();
        let rhs = game.mean_utility(&a, i).unwrap() - game.mean_utility(&b, i).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-12 * lhs.abs().max(1.0));
    }

    #[test]
    fn generated_means_are_bounded(kind in kind_strategy(), n in 2usize..6, k in 1usize..4, seed in any::<u64>(), s in 0usize..7) {
        let game = generate_game_with(kind, n, k, &GeneratorParams::default(), seed, None).unwrap();
        let s = s.min(n);
        for i in 0..n {
            for j in 0..n {
                for l in 0..k {
                    let v = game.mean(i, j, l, s);
                    prop_assert!((-1.0..=1.0).contains(&v));
                    prop_assert_eq!(v, game.mean(j, i, l, s));
                }
            }
        }
    }

    #[test]
    fn duality_gap_is_nonnegative_and_matches_true_surrogate(
        kind in kind_strategy(), n in 2usize..5, k in 1usize..3, seed in any::<u64>(),
        weights in prop::collection::vec(0.01f64..1.0, 8),
    ) {
        let game = generate_game_with(kind, n, k, &GeneratorParams::default(), seed, None).unwrap();
        let phi = profile_from(&game, &weights);
        let exact = exact_duality_gap(&game, &phi, ExpectationMode::Exact).unwrap().gap;
        prop_assert!(exact >= 0.0);
        let sur = surrogate_gap(&TrueMeans(&game), &game, &phi, &SolverConfig::default()).unwrap();
        prop_assert!((sur.surrogate_gap - exact).abs() <= 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn semi_estimator_is_symmetric_and_bounded(n in 2usize..5, k in 1usize..4, seed in any::<u64>(), m in 0usize..200) {
        let game = generate_game_with(GeneratorKind::Gaussian, n, k, &GeneratorParams::default(), seed, None).unwrap();
        let ds = sample_dataset(&game, &ExplorationPolicy::UniformRandom, m, FeedbackKind::Semi, seed).unwrap();
        let est = SemiBanditEstimator::fit(&ds, 0.05).unwrap();
        for i in 0..n {
            for j in 0..n {
                for l in 0..k {
                    prop_assert_eq!(est.count(i, j, l), est.count(j, i, l));
                    prop_assert_eq!(est.mean(i, j, l), est.mean(j, i, l));
                    prop_assert!(est.mean(i, j, l).abs() <= 1.0);
                    if est.count(i, j, l) == 0 {
                        prop_assert_eq!(est.mean(i, j, l), 0.0);
                    }
                }
            }
        }
    }

    #[test]
    fn gram_matrix_reconstructs_from_features(n in 2usize..4, k in 1usize..3, seed in any::<u64>(), m in 0usize..60) {
        let game = generate_game_with(GeneratorKind::Gaussian, n, k, &GeneratorParams::default(), seed, None).unwrap();
        let ds = sample_dataset(&game, &ExplorationPolicy::UniformRandom, m, FeedbackKind::Bandit, seed).unwrap();
        let est = RidgeEstimator::fit(&ds, 0.1).unwrap();
        let dim = n * n * k;
        let mut v = nalgebra::DMatrix::<f64>::identity(dim, dim);
        for r in &ds.records {
            for i in 0..n {
                let z = nalgebra::DVector::from_vec(features(&game, &r.action, i).unwrap());
                v += &z * z.transpose();
            }
        }
        prop_assert!((est.dense_gram() - v).abs().max() < 1e-9);
    }

    #[test]
    fn ridge_estimate_matches_linear_model(n in 2usize..4, k in 1usize..3, seed in any::<u64>(), picks in prop::collection::vec(0usize..8, 4)) {
        let game = random_pairwise_game(n, k, 3, seed).unwrap();
        let a = action_from(&game, &picks);
        let theta = true_parameter(&game);
        for i in 0..n {
            let z = features(&game, &a, i).unwrap();
            let lin: f64 = z.iter().zip(&theta).map(|(x, t)| x * t).sum();
            prop_assert!((lin - game.mean_utility(&a, i).unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn dataset_jsonl_roundtrip(n in 2usize..4, k in 1usize..3, seed in any::<u64>(), m in 0usize..20, semi in any::<bool>()) {
        let game = generate_game_with(GeneratorKind::SizeGaussian, n, k, &GeneratorParams::default(), seed, None).unwrap();
        let fb = if semi { FeedbackKind::Semi } else { FeedbackKind::Bandit };
        let ds = sample_dataset(&game, &ExplorationPolicy::OneRand, m, fb, seed).unwrap();
        let mut buf = Vec::new();
        ds.write_to(&mut buf).unwrap();
        let back = Dataset::read_from(buf.as_slice()).unwrap();
        prop_assert_eq!(back, ds);
    }
}

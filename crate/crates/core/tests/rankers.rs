//! Cross-checks between rankers that must coincide in special cases.

use std::sync::Arc;

use popbias::analysis::{rank_size_empirical, TwoItemWalkConfig};
use popbias::environment::{make_synthetic_instance, GeneratorConfig, SelectionHistory};
use popbias::estimator::{GateRule, ParamVector, QpConfig, QpRanker, QpVariant};
use popbias::harness::{run_seed, ExperimentConfig, RhoSetting};
use popbias::rankers::{ObservableView, QualityRanker, Ranker, RankerKind};
use popbias::slate::{ItemId, UserId};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn small_generator() -> GeneratorConfig {
    GeneratorConfig {
        corpus_size: 5,
        slate_size: 2,
        quality_dim: 2,
        popularity_dim: 2,
        users: 16,
        ..GeneratorConfig::default()
    }
}

#[test]
fn greedy_cold_start_shows_first_items() {
    let env = make_synthetic_instance(&GeneratorConfig::default(), &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
    let view = ObservableView::new(&env);
    let mut r = QpRanker::new(&view, QpVariant::Greedy, QpConfig::default(), 0.5).unwrap();
    let h = SelectionHistory::new(env.corpus_size());
    let s = r.select(&view, &h, UserId(0)).unwrap();
    assert_eq!(s.items(), &[ItemId(0), ItemId(1), ItemId(2)]);
}

#[test]
fn qp_with_true_parameters_and_no_bonus_matches_quality() {
    let gen = GeneratorConfig {
        corpus_size: 4,
        ..small_generator()
    };
    for seed in 0..5 {
        let env = Arc::new(make_synthetic_instance(&gen, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap());
        let view = ObservableView::new(&env);
        let config = QpConfig {
            bonus_scale: 0.0,
            ..QpConfig::default()
        };
        let mut qp = QpRanker::new(&view, QpVariant::Qp, config, 0.5).unwrap();
        qp.set_estimate(ParamVector::from_instance(&env, true)).unwrap();
        let mut quality = QualityRanker::new(env.clone());
        let h = SelectionHistory::new(env.corpus_size());
        for u in 0..env.user_count() {
            let user = UserId(u);
            assert_eq!(qp.select(&view, &h, user).unwrap(), quality.best_slate(user).unwrap());
        }
    }
}

#[test]
fn oblivious_matches_qp_without_popularity_features() {
    let base = ExperimentConfig {
        generator: GeneratorConfig {
            popularity_features: false,
            ..small_generator()
        },
        qp: QpConfig {
            gate: GateRule::Saturation,
            bonus_scale: 1e-3,
            ..QpConfig::default()
        },
        rho_min: RhoSetting::Fixed(0.5),
        horizon: 300,
        seeds: vec![7],
        ..ExperimentConfig::default()
    };
    let qp = run_seed(&ExperimentConfig { ranker: RankerKind::Qp, ..base.clone() }, 7).unwrap();
    let ob = run_seed(&ExperimentConfig { ranker: RankerKind::Oblivious, ..base }, 7).unwrap();
    assert_eq!(qp.rows, ob.rows);
    assert_eq!(qp.selections, ob.selections);
}

#[test]
fn equal_positions_rerank_far_more_often() {
    let seeds: Vec<u64> = (0..20).collect();
    let biased = rank_size_empirical(&TwoItemWalkConfig { kappa: [1.0, 0.0] }, 20_000, &seeds).unwrap();
    let flat = rank_size_empirical(&TwoItemWalkConfig { kappa: [0.0, 0.0] }, 20_000, &seeds).unwrap();
    assert!(
        flat.mean_reranks >= 10.0 * biased.mean_reranks,
        "p = q: {} reranks, p > q: {}",
        flat.mean_reranks,
        biased.mean_reranks
    );
}

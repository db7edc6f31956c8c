use std::sync::Arc;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{ExperimentConfig, RhoSetting};
use crate::analysis::{estimate_rho_min_for_instance, RhoEstimate};
use crate::environment::{
    expected_instantaneous_value, make_synthetic_instance, sample_choice_for, sample_user, EnvironmentInstance,
    SelectionHistory,
};
use crate::error::{Error, Result};
use crate::estimator::{ParamVector, QpRanker, QpVariant, TraceRow};
use crate::rankers::{ObservableView, PopularityDrivenRanker, QualityRanker, Ranker, RankerKind};
use crate::slate::{Slate, UserId};

/// One step of a paired run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRow {
    /// 1-based step index.
    pub t: usize,
    pub user: UserId,
    pub slate: Slate,
    pub choice: usize,
    pub value_policy: f64,
    pub value_reference: f64,
    pub regret_cum: f64,
}

/// Run-level facts needed to interpret the rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMeta {
    pub profile: Option<String>,
    pub bonus_scale: f64,
    pub rho_min: Option<f64>,
    pub tau: Option<f64>,
    pub lambda: Option<f64>,
    pub admitted: usize,
    pub refits: usize,
    /// Recovered estimator failures, in order.
    pub estimator_errors: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub seed: u64,
    pub ranker: RankerKind,
    pub corpus_size: usize,
    pub rows: Vec<StepRow>,
    pub selections: Vec<u64>,
    pub presented: Vec<u64>,
    pub reference_selections: Vec<u64>,
    pub meta: RunMeta,
    pub trace: Vec<TraceRow>,
}

impl RunRecord {
    pub fn final_regret(&self) -> f64 {
        self.rows.last().map_or(0.0, |r| r.regret_cum)
    }

    /// Mean cumulative regret over the last `window` steps.
    pub fn final_window_regret(&self, window: usize) -> f64 {
        let k = window.min(self.rows.len()).max(1);
        self.rows[self.rows.len().saturating_sub(k)..].iter().map(|r| r.regret_cum).sum::<f64>() / k as f64
    }

    /// Mean per-step regret increment over steps `[from, to)`.
    pub fn mean_increment(&self, from: usize, to: usize) -> f64 {
        let to = to.min(self.rows.len());
        if to <= from {
            return 0.0;
        }
        let start = if from == 0 { 0.0 } else { self.rows[from - 1].regret_cum };
        (self.rows[to - 1].regret_cum - start) / (to - from) as f64
    }
}

enum Policy {
    Learning(QpRanker),
    Quality(QualityRanker),
    Popularity(PopularityDrivenRanker),
}

impl Policy {
    fn ranker(&mut self) -> &mut dyn Ranker {
        match self {
            Policy::Learning(r) => r,
            Policy::Quality(r) => r,
            Policy::Popularity(r) => r,
        }
    }
}

fn stream(seed: u64, k: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(k);
    r
}

/// `ρ_min` for the model a variant fits: configured, or estimated from the
/// instance's embeddings.
pub fn resolve_rho(config: &ExperimentConfig, env: &EnvironmentInstance, variant: QpVariant) -> Result<f64> {
    if variant == QpVariant::Greedy {
        return Ok(0.0);
    }
    if let RhoSetting::Fixed(r) = config.rho_min {
        return Ok(r);
    }
    let view = ObservableView::new(env);
    let with_pop = variant.models_popularity(&view);
    match estimate_rho_min_for_instance(&view, with_pop, config.rho_sample_slates, config.rho_tol)? {
        RhoEstimate::Feasible(r) => Ok(r),
        RhoEstimate::Infeasible => Err(Error::invalid(
            "the variability assumption fails for this instance (ρ_min infeasible); \
             set rho_min explicitly or add users",
        )),
    }
}

fn variant_of(kind: RankerKind) -> Option<QpVariant> {
    match kind {
        RankerKind::Qp => Some(QpVariant::Qp),
        RankerKind::Greedy => Some(QpVariant::Greedy),
        RankerKind::Oblivious => Some(QpVariant::Oblivious),
        _ => None,
    }
}

/// Runs one seed: the configured policy and the quality reference, each in
/// its own copy of the world, on the same users and choice streams.
pub fn run_seed(config: &ExperimentConfig, seed: u64) -> Result<RunRecord> {
    let env = Arc::new(make_synthetic_instance(&config.generator, &mut stream(seed, 0))?);
    let view = ObservableView::new(&env);
    let ranker_seed = stream(seed, 3).next_u64();

    let mut meta = RunMeta {
        profile: config.profile.clone(),
        bonus_scale: config.qp.bonus_scale,
        rho_min: None,
        tau: None,
        lambda: None,
        admitted: 0,
        refits: 0,
        estimator_errors: Vec::new(),
    };
    let mut policy = match config.ranker {
        RankerKind::Quality => Policy::Quality(QualityRanker::new(env.clone()).with_budget(config.qp.enumeration_budget)),
        RankerKind::PopularityDriven => Policy::Popularity(PopularityDrivenRanker::new(ranker_seed)),
        kind => {
            let variant = variant_of(kind).expect("learning ranker");
            let rho = resolve_rho(config, &env, variant)?;
            meta.rho_min = Some(rho);
            let truth = ParamVector::from_instance(&env, variant.models_popularity(&view));
            let r = QpRanker::new(&view, variant, config.qp.clone(), rho)?.with_truth(truth);
            meta.tau = Some(r.tau());
            meta.lambda = Some(r.lambda());
            Policy::Learning(r)
        }
    };
    let mut reference = QualityRanker::new(env.clone()).with_budget(config.qp.enumeration_budget);

    let mut users = stream(seed, 1);
    let mut reference_users = stream(seed, 1);
    let mut choices = stream(seed, 2);
    let mut reference_choices = stream(seed, 2);
    let mut h = SelectionHistory::new(env.corpus_size());
    let mut h_ref = SelectionHistory::new(env.corpus_size());
    let mut rows = Vec::with_capacity(config.horizon);
    let mut regret = 0.0;
    for t in 1..=config.horizon {
        let user = sample_user(&env, &mut users);
        let ref_user = sample_user(&env, &mut reference_users);
        if user != ref_user {
            return Err(Error::invalid(format!("user streams diverged at step {t}")));
        }

        let slate = policy.ranker().select(&view, &h, user)?;
        let value_policy = expected_instantaneous_value(&env, &h, user, &slate)?;
        let choice = sample_choice_for(&env, &h, user, &slate, &mut choices)?;
        policy.ranker().observe(&view, &h, user, &slate, choice)?;
        h.record(user, slate.clone(), choice);

        let ref_slate = reference.select(&view, &h_ref, user)?;
        let value_reference = expected_instantaneous_value(&env, &h_ref, user, &ref_slate)?;
        let ref_choice = sample_choice_for(&env, &h_ref, user, &ref_slate, &mut reference_choices)?;
        h_ref.record(user, ref_slate, ref_choice);

        regret += value_reference - value_policy;
        rows.push(StepRow {
            t,
            user,
            slate,
            choice,
            value_policy,
            value_reference,
            regret_cum: regret,
        });
    }

    let mut trace = Vec::new();
    if let Policy::Learning(r) = &policy {
        meta.admitted = r.filtered().len();
        meta.refits = r.refits();
        meta.estimator_errors = r.errors().to_vec();
        trace = r.trace().to_vec();
    }
    Ok(RunRecord {
        seed,
        ranker: config.ranker,
        corpus_size: env.corpus_size(),
        rows,
        selections: h.selection_counts().to_vec(),
        presented: h.presentation_counts().to_vec(),
        reference_selections: h_ref.selection_counts().to_vec(),
        meta,
        trace,
    })
}

/// Runs every configured seed (in parallel) and returns records in seed-list order.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Vec<RunRecord>> {
    config.validate()?;
    config.seeds.par_iter().map(|&seed| run_seed(config, seed)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::environment::GeneratorConfig;

    fn small(ranker: RankerKind) -> ExperimentConfig {
        ExperimentConfig {
            generator: GeneratorConfig {
                corpus_size: 5,
                slate_size: 2,
                quality_dim: 2,
                popularity_dim: 2,
                users: 16,
                ..GeneratorConfig::default()
            },
            ranker,
            horizon: 200,
            seeds: vec![3, 4],
            ..ExperimentConfig::default()
        }
    }

    #[test]
    fn quality_has_zero_regret() {
        for r in run_experiment(&small(RankerKind::Quality)).unwrap() {
            assert!(r.rows.iter().all(|row| row.regret_cum == 0.0));
        }
    }

    #[test]
    fn regret_is_prefix_sum() {
        let recs = run_experiment(&small(RankerKind::PopularityDriven)).unwrap();
        for r in recs {
            let total: f64 = r.rows.iter().map(|row| row.value_reference - row.value_policy).sum();
            assert!((total - r.final_regret()).abs() < 1e-9);
        }
    }

    #[test]
    fn seed_order_permutes_outputs() {
        let mut cfg = small(RankerKind::Greedy);
        let a = run_experiment(&cfg).unwrap();
        cfg.seeds.reverse();
        let b = run_experiment(&cfg).unwrap();
        assert_eq!(a[0], b[1]);
        assert_eq!(a[1], b[0]);
    }
}

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::bonus::BonusTable;
use super::{
    fit_mle, project_mle_from, tau_min, BonusParams, DesignMatrix, FilteredHistory, FitOptions, ParamLayout, ParamVector,
    ProjectOptions,
};
use crate::environment::{NormBounds, SelectionHistory};
use crate::error::{Error, Result};
use crate::rankers::{slate_argmax, ObservableView, Ranker, SlateScorer, DEFAULT_ENUMERATION_BUDGET};
use crate::slate::{Slate, UserId};

/// Which records are admitted for learning.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum GateRule {
    /// `τ_min = (8 M b_max / α_min) ln(|D| / δ)`.
    #[default]
    Theory,
    /// `τ = b_max / α_min`: every item past it has a saturated bias under
    /// count-proportional dynamics.
    Saturation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QpConfig {
    pub delta: f64,
    /// Ridge parameter; `1/√L` when absent.
    pub lambda: Option<f64>,
    pub bonus_scale: f64,
    pub gate: GateRule,
    /// Overrides the gate threshold when set.
    pub tau: Option<f64>,
    /// Refit once the admitted count has grown by this fraction; 0 refits on
    /// every admitted record.
    pub refit_growth: f64,
    pub enumeration_budget: u64,
    pub fit: FitOptions,
    pub project: ProjectOptions,
    /// Keep one trace row per admitted record.
    pub trace: bool,
}

impl Default for QpConfig {
    fn default() -> Self {
        QpConfig {
            delta: 0.05,
            lambda: None,
            bonus_scale: 1.0,
            gate: GateRule::Theory,
            tau: None,
            refit_growth: 0.0,
            enumeration_budget: DEFAULT_ENUMERATION_BUDGET,
            fit: FitOptions::default(),
            project: ProjectOptions::default(),
            trace: false,
        }
    }
}

impl QpConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::config(format!("delta must lie in (0, 1), got {}", self.delta)));
        }
        if let Some(l) = self.lambda {
            if !(l > 0.0) {
                return Err(Error::config(format!("lambda must be positive, got {l}")));
            }
        }
        if !(self.bonus_scale >= 0.0 && self.bonus_scale.is_finite()) {
            return Err(Error::config("bonus_scale must be finite and non-negative"));
        }
        if !(self.refit_growth >= 0.0) {
            return Err(Error::config("refit_growth must be non-negative"));
        }
        if self.tau.is_some_and(|t| !(t >= 0.0)) {
            return Err(Error::config("tau must be non-negative"));
        }
        Ok(())
    }
}

/// The three policies built on the same estimator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum QpVariant {
    /// Full model with the exploration bonus.
    Qp,
    /// Full model, no bonus.
    Greedy,
    /// Model without the popularity block, with the bonus.
    Oblivious,
}

impl QpVariant {
    /// Whether the fitted model carries the popularity block. Identically
    /// zero popularity features are dropped for every variant.
    pub fn models_popularity(self, view: &ObservableView<'_>) -> bool {
        self != QpVariant::Oblivious && view.has_popularity_features()
    }
}

/// One admitted record's snapshot of the estimator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub t: usize,
    pub admitted: usize,
    pub param_error: Option<f64>,
    pub min_eig_v: f64,
    pub bonus: f64,
}

pub struct QpRanker {
    variant: QpVariant,
    config: QpConfig,
    bounds: NormBounds,
    lambda: f64,
    tau: f64,
    bonus: BonusParams,
    filtered: FilteredHistory,
    design: DesignMatrix,
    psi_ml: ParamVector,
    psi: ParamVector,
    truth: Option<ParamVector>,
    next_refit: usize,
    refits: usize,
    scorers: HashMap<UserId, SlateScorer>,
    table: Option<BonusTable>,
    table_stale: bool,
    last_bonus: f64,
    trace: Vec<TraceRow>,
    errors: Vec<String>,
}

impl QpRanker {
    /// `rho_min` is the correlation constant of the model this variant fits.
    pub fn new(view: &ObservableView<'_>, variant: QpVariant, config: QpConfig, rho_min: f64) -> Result<Self> {
        config.validate()?;
        let with_pop = variant.models_popularity(view);
        let layout = ParamLayout {
            slate_size: view.slate_size(),
            quality_dim: view.quality_dim(),
            popularity_dim: if with_pop { view.popularity_dim() } else { 0 },
        };
        let bounds = view.norm_bounds();
        let l = bounds.total();
        let lambda = config.lambda.unwrap_or(1.0 / l.sqrt());
        let tau = match (config.tau, config.gate) {
            (Some(t), _) => t,
            (None, GateRule::Theory) => tau_min(
                view.slate_size(),
                view.b_max(),
                view.alpha_min(),
                view.corpus_size(),
                config.delta,
            )?,
            (None, GateRule::Saturation) => view.b_max() / view.alpha_min(),
        };
        let bonus = BonusParams {
            delta: config.delta,
            rho_min,
            slate_size: layout.slate_size,
            dim: layout.block_dim(),
            norm_total: l,
            lambda,
            scale: if variant == QpVariant::Greedy { 0.0 } else { config.bonus_scale },
        };
        bonus.coefficient(0.0)?;
        let table = (bonus.scale > 0.0).then(|| {
            BonusTable::new(
                view.quality_embeddings(),
                with_pop.then(|| view.popularity_embeddings()),
                layout.slate_size,
            )
        });
        Ok(QpRanker {
            variant,
            bounds,
            lambda,
            tau,
            bonus,
            filtered: FilteredHistory::new(layout, view.rank_bias().to_vec(), tau),
            design: DesignMatrix::new(layout.block_dim(), lambda)?,
            psi_ml: ParamVector::zeros(layout),
            psi: ParamVector::zeros(layout),
            truth: None,
            next_refit: 1,
            refits: 0,
            scorers: HashMap::new(),
            table,
            table_stale: true,
            last_bonus: 0.0,
            trace: Vec::new(),
            errors: Vec::new(),
            config,
        })
    }

    /// Ground truth in this model's layout, used only for trace output.
    pub fn with_truth(mut self, truth: ParamVector) -> Self {
        self.truth = Some(truth);
        self
    }

    pub fn variant(&self) -> QpVariant {
        self.variant
    }

    pub fn config(&self) -> &QpConfig {
        &self.config
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn bonus_params(&self) -> &BonusParams {
        &self.bonus
    }

    pub fn filtered(&self) -> &FilteredHistory {
        &self.filtered
    }

    pub fn design(&self) -> &DesignMatrix {
        &self.design
    }

    /// Projected estimate used for ranking.
    pub fn estimate(&self) -> &ParamVector {
        &self.psi
    }

    pub fn mle(&self) -> &ParamVector {
        &self.psi_ml
    }

    pub fn refits(&self) -> usize {
        self.refits
    }

    pub fn trace(&self) -> &[TraceRow] {
        &self.trace
    }

    /// Estimator failures that were recovered from.
    pub fn errors(&self) -> &[String] {
        &self.errors
    }

    /// Replaces the estimate directly (bypassing the data).
    pub fn set_estimate(&mut self, psi: ParamVector) -> Result<()> {
        if psi.layout() != self.filtered.layout() {
            return Err(Error::invalid("estimate has the wrong layout"));
        }
        self.psi_ml = psi.clone();
        self.psi = psi;
        self.scorers.clear();
        Ok(())
    }

    fn refit(&mut self) {
        self.refits += 1;
        match fit_mle(&self.filtered, self.lambda, Some(&self.psi_ml), self.config.fit) {
            Ok(ml) => self.psi_ml = ml,
            Err(e) => {
                log::warn!("keeping previous estimate: {e}");
                self.errors.push(e.to_string());
                return;
            }
        }
        self.psi = match project_mle_from(&self.psi_ml, Some(&self.psi), &self.filtered, &self.design, self.bounds, self.config.project) {
            Ok(p) => p,
            Err(e) => {
                log::warn!("falling back to the norm-ball projection: {e}");
                self.errors.push(e.to_string());
                let mut p = self.psi_ml.clone();
                p.project_to_balls(self.bounds);
                p
            }
        };
        self.scorers.clear();
    }
}

impl Ranker for QpRanker {
    fn name(&self) -> &'static str {
        match self.variant {
            QpVariant::Qp => "qp",
            QpVariant::Greedy => "greedy",
            QpVariant::Oblivious => "oblivious",
        }
    }

    fn select(&mut self, view: &ObservableView<'_>, history: &SelectionHistory, user: UserId) -> Result<Slate> {
        let coef = if self.bonus.scale > 0.0 {
            self.bonus.coefficient(history.steps() as f64)?
        } else {
            0.0
        };
        if coef > 0.0 && self.table_stale {
            if let Some(t) = self.table.as_mut() {
                t.refresh(self.design.inverse());
            }
            self.table_stale = false;
        }
        let psi = &self.psi;
        let scorer = self.scorers.entry(user).or_insert_with(|| {
            SlateScorer::build(
                view.quality_embeddings(),
                view.popularity_embeddings(),
                user,
                &psi.thetas(),
                &psi.phis(),
            )
        });
        let kappa = view.rank_bias();
        let table = self.table.as_ref().filter(|_| coef > 0.0);
        let bonus_of = |s: &[usize]| table.map_or(0.0, |t| coef * t.expected_sq_norm(s).max(0.0).sqrt());
        let slate = slate_argmax(view.corpus_size(), view.slate_size(), self.config.enumeration_budget, |s| {
            scorer.saturated_value(s, kappa, 0.0) + bonus_of(s)
        })?;
        let ids: Vec<usize> = slate.items().iter().map(|i| i.0).collect();
        self.last_bonus = bonus_of(&ids);
        Ok(slate)
    }

    fn observe(
        &mut self,
        view: &ObservableView<'_>,
        history: &SelectionHistory,
        user: UserId,
        slate: &Slate,
        choice: usize,
    ) -> Result<()> {
        if !FilteredHistory::gate_open(history.selection_counts(), slate, self.tau) {
            return Ok(());
        }
        let x = view.features(user, slate, self.filtered.layout().popularity_dim > 0);
        self.design.add(&x);
        self.table_stale = true;
        self.filtered.admit(history.steps(), user, slate.clone(), choice, x)?;
        let admitted = self.filtered.len();
        if admitted >= self.next_refit {
            self.refit();
            let grown = (admitted as f64 * (1.0 + self.config.refit_growth)).ceil() as usize;
            self.next_refit = grown.max(admitted + 1);
        }
        if self.config.trace {
            self.trace.push(TraceRow {
                t: history.steps(),
                admitted,
                param_error: self.truth.as_ref().map(|t| t.distance(&self.psi)),
                min_eig_v: self.design.min_eigenvalue(),
                bonus: self.last_bonus,
            });
        }
        Ok(())
    }
}

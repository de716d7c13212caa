//! Configuration proposals for new tasks.
//!
//! The GP searcher keeps a [`PendingLedger`] of labeled and pending `(x, r)`
//! covariates, fits the joint surrogate, fantasizes pending outcomes and
//! maximizes fantasy-averaged expected improvement at the resource `r_acq`.
//! The random searcher samples the space uniformly.

mod acquisition;
mod ledger;

use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::gp::{
    fit_hyperparameters, DatasetStats, FitOptions, GpError, KernelSpec, KernelVariant, LbfgsOptions,
    Observation, PosteriorState, RefitPolicy, RefitSchedule, SurrogatePoint,
};
use crate::scheduler::{ConfigId, RungGeometry};
use crate::space::{Config, ConfigSpace, SpaceError};

pub use acquisition::{choose_r_acq, expected_improvement};
pub use ledger::{DataMode, LedgerEvent, PendingLedger};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum SearcherError {
    #[error("config {0} is not tracked by the searcher")]
    UnknownConfig(ConfigId),
    #[error("config {0} was already started")]
    DuplicateStart(ConfigId),
    #[error("bracket {0} does not exist")]
    InvalidBracket(usize),
    #[error("config {id} reported at resource {got}, pending is {expected:?}")]
    UnexpectedReport { id: ConfigId, expected: Option<u32>, got: u32 },
    #[error(transparent)]
    Space(#[from] SpaceError),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SearcherKind {
    #[default]
    Gp,
    Random,
}

/// Reference value for expected improvement.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IncumbentRule {
    /// Lowest fantasy-averaged posterior mean over configs labeled at `r_acq`.
    #[default]
    PosteriorMean,
    /// Lowest observed metric at `r_acq`.
    Observed,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RefitKind {
    #[default]
    Always,
    EveryK,
    FullResourceGate,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SearcherConfig {
    pub data_mode: DataMode,
    /// Observation threshold for `r_acq`; defaults to the number of
    /// hyperparameters.
    pub l_acq: Option<usize>,
    /// Labeled points needed at some rung before the model is used;
    /// defaults to `l_acq`.
    pub init_random: Option<usize>,
    pub ei_candidates: usize,
    pub refine_top: usize,
    pub refine_steps: usize,
    pub refine_scale: f64,
    pub fantasy_samples: usize,
    pub kernel: KernelVariant,
    pub refit: RefitKind,
    pub refit_k: usize,
    pub refit_warmup: usize,
    pub fit_restarts: usize,
    pub fit_max_iters: usize,
    pub incumbent: IncumbentRule,
    /// Pins `gamma` (in metric units) instead of fitting it.
    pub fixed_gamma: Option<f64>,
}

impl Default for SearcherConfig {
    fn default() -> Self {
        Self {
            data_mode: DataMode::RungsOnly,
            l_acq: None,
            init_random: None,
            ei_candidates: 200,
            refine_top: 5,
            refine_steps: 20,
            refine_scale: 0.1,
            fantasy_samples: 10,
            kernel: KernelVariant::ExpdecayLearned,
            refit: RefitKind::Always,
            refit_k: 5,
            refit_warmup: 30,
            fit_restarts: 5,
            fit_max_iters: 50,
            incumbent: IncumbentRule::PosteriorMean,
            fixed_gamma: None,
        }
    }
}

impl SearcherConfig {
    pub fn refit_policy(&self) -> RefitPolicy {
        match self.refit {
            RefitKind::Always => RefitPolicy::Always,
            RefitKind::EveryK => RefitPolicy::EveryK { k: self.refit_k.max(1), warmup: self.refit_warmup },
            RefitKind::FullResourceGate => RefitPolicy::FullResourceGate { warmup: self.refit_warmup },
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.ei_candidates == 0 {
            return Err("ei_candidates must be >= 1".into());
        }
        if self.fantasy_samples == 0 {
            return Err("fantasy_samples must be >= 1".into());
        }
        if !(self.refine_scale > 0.0 && self.refine_scale <= 1.0) {
            return Err("refine_scale must be in (0, 1]".into());
        }
        if self.l_acq == Some(0) {
            return Err("l_acq must be >= 1".into());
        }
        if matches!(self.fixed_gamma, Some(g) if !g.is_finite()) {
            return Err("fixed_gamma must be finite".into());
        }
        Ok(())
    }
}

/// Diagnostics of the most recent model-based proposal.
#[derive(Clone, Debug, PartialEq)]
pub struct SuggestionInfo {
    pub r_acq: u32,
    /// Incumbent in standardized metric units.
    pub incumbent: f64,
    pub ei: f64,
    /// Expected improvement of every candidate evaluated, in order.
    pub evaluated: Vec<f64>,
}

pub struct Searcher {
    kind: SearcherKind,
    config: SearcherConfig,
    space: ConfigSpace,
    ledger: PendingLedger,
    spec: KernelSpec,
    refit: RefitSchedule,
    r_acq: Option<u32>,
    last: Option<SuggestionInfo>,
}

impl Searcher {
    pub fn new(kind: SearcherKind, config: SearcherConfig, space: ConfigSpace, geometry: RungGeometry) -> Self {
        let mut spec = KernelSpec::new(config.kernel, space.encoded_dim(), f64::from(geometry.r_max()));
        spec.fixed_gamma = config.fixed_gamma.is_some();
        Self {
            kind,
            refit: RefitSchedule::new(config.refit_policy()),
            ledger: PendingLedger::new(geometry, config.data_mode),
            spec,
            space,
            config,
            r_acq: None,
            last: None,
        }
    }

    pub fn kind(&self) -> SearcherKind {
        self.kind
    }

    pub fn space(&self) -> &ConfigSpace {
        &self.space
    }

    pub fn ledger(&self) -> &PendingLedger {
        &self.ledger
    }

    /// Current kernel hyperparameters (fitted on standardized targets).
    pub fn kernel_spec(&self) -> &KernelSpec {
        &self.spec
    }

    pub fn l_acq(&self) -> usize {
        self.config.l_acq.unwrap_or(self.space.len()).max(1)
    }

    fn init_threshold(&self) -> usize {
        self.config.init_random.unwrap_or_else(|| self.l_acq())
    }

    /// `r_acq` of the latest model-based proposal.
    pub fn r_acq(&self) -> Option<u32> {
        self.r_acq
    }

    pub fn last_suggestion(&self) -> Option<&SuggestionInfo> {
        self.last.as_ref()
    }

    pub fn on_task_start(&mut self, id: ConfigId, config: &Config, bracket: usize) -> Result<(), SearcherError> {
        let features = self.space.encode(config)?;
        self.ledger.on_task_start(id, features, bracket)
    }

    pub fn on_epoch_report(&mut self, id: ConfigId, epoch: u32, y: f64) -> Result<(), SearcherError> {
        self.ledger.on_epoch_report(id, epoch, y)
    }

    pub fn on_rung_report(&mut self, id: ConfigId, r: u32, y: f64, survived: bool) -> Result<(), SearcherError> {
        self.ledger.on_rung_report(id, r, y, survived)
    }

    pub fn on_promote(&mut self, id: ConfigId, to: u32) -> Result<(), SearcherError> {
        self.ledger.on_promote(id, to)
    }

    pub fn on_task_end(&mut self, id: ConfigId) -> Result<(), SearcherError> {
        self.ledger.clear(id)
    }

    pub fn suggest_random(&self, rng: &mut dyn RngCore) -> Config {
        self.space.sample_random(rng)
    }

    /// Proposes a configuration for a new task. Falls back to a random
    /// sample during cold start and whenever the surrogate fails.
    pub fn suggest(&mut self, rng: &mut dyn RngCore) -> Config {
        if self.kind == SearcherKind::Random {
            return self.suggest_random(rng);
        }
        let counts = self.ledger.rung_counts();
        if counts.iter().all(|(_, c)| *c < self.init_threshold()) {
            return self.suggest_random(rng);
        }
        match self.model_suggest(rng) {
            Ok(config) => config,
            Err(e) => {
                log::warn!("surrogate failed ({e}); proposing a random configuration");
                self.suggest_random(rng)
            }
        }
    }

    fn model_suggest(&mut self, rng: &mut dyn RngCore) -> Result<Config, GpError> {
        let labeled = self.ledger.labeled();
        let n = labeled.len() as f64;
        let mean = labeled.iter().map(|(_, _, y)| y).sum::<f64>() / n;
        let var = labeled.iter().map(|(_, _, y)| (y - mean).powi(2)).sum::<f64>() / n;
        let scale = if var.sqrt() > 1e-12 { var.sqrt() } else { 1.0 };
        let features = |id: ConfigId| self.ledger.features(id).expect("labeled config is tracked").0.clone();
        let data: Vec<Observation> = labeled
            .iter()
            .map(|&(id, r, y)| Observation::new(features(id), f64::from(r), (y - mean) / scale))
            .collect();

        if let Some(g) = self.config.fixed_gamma {
            self.spec.gamma = ((g - mean) / scale).max(0.05);
        }
        let r_max = self.ledger.geometry().r_max();
        let stats = DatasetStats {
            size: data.len(),
            full_resource: labeled.iter().filter(|(_, r, _)| *r == r_max).count(),
        };
        if self.refit.should_refit(stats) {
            let opts = FitOptions {
                restarts: self.config.fit_restarts,
                lbfgs: LbfgsOptions { max_iters: self.config.fit_max_iters, ..Default::default() },
            };
            self.spec = fit_hyperparameters(&data, &self.spec, rng, &opts).spec;
        }

        let pending: Vec<SurrogatePoint> = self
            .ledger
            .pending()
            .into_iter()
            .map(|(id, r)| SurrogatePoint::new(features(id), f64::from(r)))
            .collect();
        let post = PosteriorState::fit(&data, &self.spec)?.fantasize(&pending, self.config.fantasy_samples, rng)?;

        let chosen = choose_r_acq(&self.ledger.rung_counts(), self.l_acq());
        let r_acq = self.r_acq.map_or(chosen, |prev| prev.max(chosen));
        self.r_acq = Some(r_acq);
        let r = f64::from(r_acq);

        let mut at_r: Vec<usize> = (0..labeled.len()).filter(|&i| labeled[i].1 == r_acq).collect();
        if at_r.is_empty() {
            at_r = (0..labeled.len()).collect();
        }
        let incumbent = match self.config.incumbent {
            IncumbentRule::Observed => at_r.iter().map(|&i| data[i].y).fold(f64::INFINITY, f64::min),
            IncumbentRule::PosteriorMean => {
                let queries: Vec<SurrogatePoint> =
                    at_r.iter().map(|&i| SurrogatePoint::new(data[i].point.x.clone(), r)).collect();
                post.predict_batch(&queries).iter().map(|p| p.mean()).fold(f64::INFINITY, f64::min)
            }
        };

        let ei_of = |configs: &[Config]| -> Vec<f64> {
            let queries: Vec<SurrogatePoint> = configs
                .iter()
                .map(|c| SurrogatePoint::new(self.space.encode(c).expect("sampled config is valid").0, r))
                .collect();
            post.predict_batch(&queries)
                .iter()
                .map(|p| expected_improvement(&p.means, p.variance, incumbent))
                .collect()
        };

        let candidates: Vec<Config> =
            (0..self.config.ei_candidates).map(|_| self.space.sample_random(rng)).collect();
        let scores = ei_of(&candidates);
        let mut evaluated = scores.clone();
        let mut best = 0;
        for (i, s) in scores.iter().enumerate() {
            if *s > scores[best] {
                best = i;
            }
        }
        let mut best_config = candidates[best].clone();
        let mut best_ei = scores[best];

        let mut order: Vec<usize> = (0..candidates.len()).collect();
        order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
        for &start in order.iter().take(self.config.refine_top) {
            let (mut current, mut current_ei) = (candidates[start].clone(), scores[start]);
            let mut step_scale = self.config.refine_scale;
            for _ in 0..self.config.refine_steps {
                let proposal = self.space.perturb(&current, step_scale, rng);
                let ei = ei_of(std::slice::from_ref(&proposal))[0];
                evaluated.push(ei);
                if ei > current_ei {
                    current = proposal;
                    current_ei = ei;
                    if ei > best_ei {
                        best_ei = ei;
                        best_config = current.clone();
                    }
                }
                step_scale *= 0.9;
            }
        }
        self.last = Some(SuggestionInfo { r_acq, incumbent, ei: best_ei, evaluated });
        Ok(best_config)
    }
}

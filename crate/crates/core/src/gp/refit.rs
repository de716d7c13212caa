use serde::{Deserialize, Serialize};

/// When to re-run the (expensive) hyperparameter fit before a model update.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RefitPolicy {
    Always,
    /// Refit on every update while the dataset has at most `warmup` points,
    /// afterwards only on every `k`-th update.
    EveryK { k: usize, warmup: usize },
    /// After warmup, refit only when the number of full-resource points grew
    /// since the last fit.
    FullResourceGate { warmup: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub struct DatasetStats {
    pub size: usize,
    /// Labeled points observed at `r_max`.
    pub full_resource: usize,
}

/// Stateful evaluation of a [`RefitPolicy`] across successive updates.
#[derive(Clone, Debug)]
pub struct RefitSchedule {
    policy: RefitPolicy,
    updates_past_warmup: usize,
    full_resource_at_fit: Option<usize>,
}

impl RefitSchedule {
    pub fn new(policy: RefitPolicy) -> Self {
        Self { policy, updates_past_warmup: 0, full_resource_at_fit: None }
    }

    pub fn policy(&self) -> RefitPolicy {
        self.policy
    }

    /// Decides for the current update and advances the schedule.
    pub fn should_refit(&mut self, stats: DatasetStats) -> bool {
        let refit = match self.policy {
            RefitPolicy::Always => true,
            RefitPolicy::EveryK { k, warmup } => {
                if stats.size <= warmup || self.full_resource_at_fit.is_none() {
                    true
                } else {
                    self.updates_past_warmup += 1;
                    self.updates_past_warmup % k.max(1) == 0
                }
            }
            RefitPolicy::FullResourceGate { warmup } => {
                stats.size <= warmup
                    || self.full_resource_at_fit.is_none_or(|c| stats.full_resource > c)
            }
        };
        if refit {
            self.full_resource_at_fit = Some(stats.full_resource);
        }
        refit
    }
}

//! Successive-halving scheduling: rung geometry, the bracket distribution,
//! the continue predicate, and the stopping, promotion (ASHA) and synchronous
//! Hyperband variants.
//!
//! Schedulers are pure decision logic over recorded metrics. They never run
//! anything: the simulator asks [`Scheduler::next_job`] when a worker is idle
//! and feeds rung reports to [`Scheduler::on_report`]. Metrics are minimized.

mod asynchronous;
mod geometry;
mod rung;
mod synchronous;

use rand::RngCore;
use serde::{Deserialize, Serialize};
use std::fmt;

pub use asynchronous::{PromotionScheduler, StoppingScheduler};
pub use geometry::RungGeometry;
pub use rung::{continue_predicate, RungRecord};
pub use synchronous::SynchronousScheduler;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ConfigId(pub u64);

impl fmt::Display for ConfigId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum SchedulerError {
    #[error("invalid rung geometry: {0}")]
    InvalidGeometry(String),
    #[error("config {0} is not known to the scheduler")]
    UnknownConfig(ConfigId),
    #[error("config {0} was already started")]
    DuplicateStart(ConfigId),
    #[error("config {id} reported at rung {got}, expected {expected:?}")]
    UnexpectedRung { id: ConfigId, expected: Option<u32>, got: u32 },
    #[error("duplicate report for config {id} at rung {rung}")]
    DuplicateReport { id: ConfigId, rung: u32 },
    #[error("non-finite metric for config {id} at rung {rung}")]
    NonFiniteMetric { id: ConfigId, rung: u32 },
    #[error("bracket {bracket} cannot be started now: {reason}")]
    InvalidStart { bracket: usize, reason: String },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SchedulerKind {
    Stopping,
    Promotion,
    Synchronous,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SchedulerDecision {
    /// Keep training the reporting job towards `next`.
    Continue { next: u32 },
    /// The reporting job ends here (stopped early or reached `r_max`).
    Stop,
    /// The reporting job is paused at its rung and the worker released.
    Pause,
    /// Resume `id` and train it up to rung `to`.
    PromoteExisting { id: ConfigId, to: u32 },
    /// Start a fresh configuration in bracket `bracket`.
    StartNew { bracket: usize },
    /// A paused configuration loses at a synchronization point.
    Terminate { id: ConfigId },
    /// No work is available until the current rung fills up.
    Idle,
}

pub trait Scheduler {
    fn kind(&self) -> SchedulerKind;

    fn geometry(&self) -> &RungGeometry;

    /// Work for an idle worker: `StartNew`, `PromoteExisting` or `Idle`.
    fn next_job(&mut self, rng: &mut dyn RngCore) -> SchedulerDecision;

    /// Registers a freshly started configuration in bracket `bracket`.
    fn on_start(&mut self, id: ConfigId, bracket: usize) -> Result<(), SchedulerError>;

    /// Records metric `y` of `id` at rung `rung` and returns the resulting
    /// decisions. The first decision always concerns the reporting job.
    fn on_report(
        &mut self,
        id: ConfigId,
        rung: u32,
        y: f64,
    ) -> Result<Vec<SchedulerDecision>, SchedulerError>;

    fn bracket_of(&self, id: ConfigId) -> Option<usize>;

    /// Rung the running job for `id` must report at next.
    fn target_rung(&self, id: ConfigId) -> Option<u32>;
}

pub fn build_scheduler(kind: SchedulerKind, geometry: RungGeometry) -> Box<dyn Scheduler> {
    match kind {
        SchedulerKind::Stopping => Box::new(StoppingScheduler::new(geometry)),
        SchedulerKind::Promotion => Box::new(PromotionScheduler::new(geometry)),
        SchedulerKind::Synchronous => Box::new(SynchronousScheduler::new(geometry)),
    }
}

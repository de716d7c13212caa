use std::cmp::{Ordering, Reverse};
use std::collections::{BTreeMap, BinaryHeap};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::benchmark::{Benchmark, BenchmarkError, EpochResult};
use super::trace::{EventKind, EventTrace, TraceEvent};
use crate::scheduler::{ConfigId, Scheduler, SchedulerDecision, SchedulerError};
use crate::searcher::{Searcher, SearcherError};

#[derive(Debug, thiserror::Error)]
pub enum SimError {
    #[error("invalid simulation setup: {0}")]
    Invalid(String),
    #[error(transparent)]
    Benchmark(#[from] BenchmarkError),
    #[error(transparent)]
    Scheduler(#[from] SchedulerError),
    #[error(transparent)]
    Searcher(#[from] SearcherError),
    #[error("event limit of {0} reached")]
    EventLimit(usize),
}

fn default_workers() -> usize {
    4
}
fn default_max_events() -> usize {
    10_000_000
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationConfig {
    #[serde(default = "default_workers")]
    pub n_workers: usize,
    /// Simulated seconds; the run ends at the first event past it.
    pub time_budget: f64,
    #[serde(default)]
    pub seed: u64,
    /// Promoted jobs continue from their last epoch instead of retraining
    /// from epoch 1.
    #[serde(default)]
    pub resume_from_checkpoint: bool,
    /// Simulated seconds charged for every new-configuration decision.
    #[serde(default)]
    pub decision_overhead: f64,
    /// Stop starting new configurations after this many.
    #[serde(default)]
    pub max_configs: Option<usize>,
    #[serde(default = "default_max_events")]
    pub max_events: usize,
}

impl SimulationConfig {
    pub fn new(n_workers: usize, time_budget: f64, seed: u64) -> Self {
        Self {
            n_workers,
            time_budget,
            seed,
            resume_from_checkpoint: false,
            decision_overhead: 0.0,
            max_configs: None,
            max_events: default_max_events(),
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.n_workers == 0 {
            return Err("n_workers must be >= 1".into());
        }
        if self.time_budget.is_nan() {
            return Err("time_budget must be a number".into());
        }
        if !(self.decision_overhead.is_finite() && self.decision_overhead >= 0.0) {
            return Err("decision_overhead must be finite and >= 0".into());
        }
        if self.time_budget.is_infinite() && self.max_configs.is_none() {
            return Err("an infinite time_budget needs max_configs".into());
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
struct Time(f64);

impl Eq for Time {}

impl PartialOrd for Time {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Time {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

#[derive(Clone, Copy, Debug)]
struct Job {
    id: ConfigId,
    /// Epoch currently being trained.
    epoch: u32,
    /// Rung at which the job reports to the scheduler.
    target: u32,
}

#[derive(Clone, Copy, Debug)]
enum Worker {
    Free,
    /// Told to idle by the scheduler; an idle event has been logged.
    Waiting,
    Busy(Job),
}

struct Trial {
    curve: Vec<EpochResult>,
    trained: u32,
}

struct Sim<'a> {
    cfg: &'a SimulationConfig,
    bench: &'a dyn Benchmark,
    scheduler: &'a mut dyn Scheduler,
    searcher: &'a mut Searcher,
    sched_rng: ChaCha8Rng,
    search_rng: ChaCha8Rng,
    workers: Vec<Worker>,
    trials: BTreeMap<ConfigId, Trial>,
    queue: BinaryHeap<Reverse<(Time, usize, u64)>>,
    seq: u64,
    trace: EventTrace,
    r_max: u32,
}

impl Sim<'_> {
    fn log(&mut self, time: f64, worker: usize, kind: EventKind, config: ConfigId, resource: Option<u32>) {
        self.trace.events.push(TraceEvent {
            time,
            worker,
            kind,
            config: Some(config),
            resource,
            metric: None,
            seconds: None,
        });
    }

    fn schedule(&mut self, worker: usize, at: f64) {
        self.queue.push(Reverse((Time(at), worker, self.seq)));
        self.seq += 1;
    }

    fn begin(&mut self, worker: usize, t: f64, job: Job) {
        let seconds = self.trials[&job.id].curve[job.epoch as usize - 1].seconds;
        self.workers[worker] = Worker::Busy(job);
        self.schedule(worker, t + seconds);
    }

    /// Asks the scheduler for work for every non-busy worker, lowest id first.
    fn dispatch(&mut self, t: f64) -> Result<(), SimError> {
        for w in 0..self.workers.len() {
            if matches!(self.workers[w], Worker::Busy(_)) {
                continue;
            }
            match self.scheduler.next_job(&mut self.sched_rng) {
                SchedulerDecision::StartNew { bracket } => {
                    if self.cfg.max_configs.is_some_and(|m| self.trials.len() >= m) {
                        continue;
                    }
                    self.start_new(w, t, bracket)?;
                }
                SchedulerDecision::PromoteExisting { id, to } => {
                    self.searcher.on_promote(id, to)?;
                    self.log(t, w, EventKind::Promote, id, Some(to));
                    let trial = self.trials.get(&id).ok_or(SchedulerError::UnknownConfig(id))?;
                    let epoch = if self.cfg.resume_from_checkpoint { trial.trained + 1 } else { 1 };
                    self.begin(w, t, Job { id, epoch, target: to });
                }
                SchedulerDecision::Idle => {
                    if !matches!(self.workers[w], Worker::Waiting) {
                        self.trace.events.push(TraceEvent {
                            time: t,
                            worker: w,
                            kind: EventKind::Idle,
                            config: None,
                            resource: None,
                            metric: None,
                            seconds: None,
                        });
                        self.workers[w] = Worker::Waiting;
                    }
                }
                other => {
                    return Err(SimError::Invalid(format!("scheduler returned {other:?} from next_job")));
                }
            }
        }
        Ok(())
    }

    fn start_new(&mut self, w: usize, t: f64, bracket: usize) -> Result<(), SimError> {
        let config = self.searcher.suggest(&mut self.search_rng);
        let id = ConfigId(self.trials.len() as u64);
        let curve = self.bench.curve(&config, self.r_max)?;
        self.scheduler.on_start(id, bracket)?;
        self.searcher.on_task_start(id, &config, bracket)?;
        self.trials.insert(id, Trial { curve, trained: 0 });
        let target = self.scheduler.target_rung(id).ok_or(SchedulerError::UnknownConfig(id))?;
        self.log(t, w, EventKind::Start, id, Some(target));
        let job = Job { id, epoch: 1, target };
        let seconds = self.trials[&id].curve[0].seconds;
        self.workers[w] = Worker::Busy(job);
        self.schedule(w, t + self.cfg.decision_overhead + seconds);
        Ok(())
    }

    fn epoch_done(&mut self, w: usize, t: f64) -> Result<(), SimError> {
        let Worker::Busy(mut job) = self.workers[w] else {
            return Err(SimError::Invalid(format!("event for idle worker {w}")));
        };
        let trial = self.trials.get_mut(&job.id).expect("running trial exists");
        let EpochResult { metric, seconds } = trial.curve[job.epoch as usize - 1];
        trial.trained = trial.trained.max(job.epoch);
        self.trace.busy_seconds += seconds;
        self.trace.events.push(TraceEvent {
            time: t,
            worker: w,
            kind: EventKind::EpochReport,
            config: Some(job.id),
            resource: Some(job.epoch),
            metric: Some(metric),
            seconds: Some(seconds),
        });
        if self.trace.best_metric().is_none_or(|b| metric < b) {
            self.trace.incumbent.push((t, metric));
        }
        self.searcher.on_epoch_report(job.id, job.epoch, metric)?;

        if job.epoch < job.target {
            job.epoch += 1;
            self.begin(w, t, job);
            return Ok(());
        }
        let decisions = self.scheduler.on_report(job.id, job.epoch, metric)?;
        self.trace.events.push(TraceEvent {
            time: t,
            worker: w,
            kind: EventKind::RungReport,
            config: Some(job.id),
            resource: Some(job.epoch),
            metric: Some(metric),
            seconds: None,
        });
        let mut rest = decisions.iter();
        match rest.next() {
            Some(&SchedulerDecision::Continue { next }) => {
                self.searcher.on_rung_report(job.id, job.epoch, metric, true)?;
                job.target = next;
                job.epoch += 1;
                self.begin(w, t, job);
            }
            Some(&d @ (SchedulerDecision::Stop | SchedulerDecision::Pause)) => {
                self.searcher.on_rung_report(job.id, job.epoch, metric, false)?;
                let kind = match d {
                    _ if job.epoch == self.r_max => EventKind::Complete,
                    SchedulerDecision::Stop => EventKind::Stop,
                    _ => EventKind::Pause,
                };
                self.log(t, w, kind, job.id, Some(job.epoch));
                self.workers[w] = Worker::Free;
            }
            other => {
                return Err(SimError::Invalid(format!("unexpected first decision {other:?}")));
            }
        }
        for d in rest {
            match *d {
                SchedulerDecision::Terminate { id } => {
                    self.searcher.on_task_end(id)?;
                    let level = self.trials.get(&id).map(|tr| tr.trained);
                    self.log(t, w, EventKind::Stop, id, level);
                }
                other => return Err(SimError::Invalid(format!("unexpected decision {other:?}"))),
            }
        }
        Ok(())
    }
}

/// Runs one simulated experiment and returns its event trace.
///
/// The loop owns all state. Pending epoch completions sit in one queue
/// ordered by `(time, worker, sequence number)`, so runs are deterministic
/// in the seed. After every completion all non-busy workers ask the
/// scheduler for work. The run ends when the next completion lies past the
/// budget (running jobs get a `timeout` event) or no work remains.
pub fn run_simulation(
    cfg: &SimulationConfig,
    bench: &dyn Benchmark,
    scheduler: &mut dyn Scheduler,
    searcher: &mut Searcher,
) -> Result<EventTrace, SimError> {
    cfg.validate().map_err(SimError::Invalid)?;
    let r_max = scheduler.geometry().r_max();
    if r_max > bench.max_resource() {
        return Err(SimError::Invalid(format!(
            "geometry r_max {r_max} exceeds benchmark r_max {}",
            bench.max_resource()
        )));
    }
    if cfg.time_budget <= 0.0 {
        return Ok(EventTrace::default());
    }
    let mut sched_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    sched_rng.set_stream(1);
    let mut search_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    search_rng.set_stream(2);
    let mut sim = Sim {
        cfg,
        bench,
        scheduler,
        searcher,
        sched_rng,
        search_rng,
        workers: vec![Worker::Free; cfg.n_workers],
        trials: BTreeMap::new(),
        queue: BinaryHeap::new(),
        seq: 0,
        trace: EventTrace::default(),
        r_max,
    };

    sim.dispatch(0.0)?;
    let mut processed = 0usize;
    while let Some(&Reverse((Time(t), w, _))) = sim.queue.peek() {
        if t > cfg.time_budget {
            break;
        }
        sim.queue.pop();
        processed += 1;
        if processed > cfg.max_events {
            return Err(SimError::EventLimit(cfg.max_events));
        }
        sim.epoch_done(w, t)?;
        sim.dispatch(t)?;
    }
    for w in 0..sim.workers.len() {
        if let Worker::Busy(job) = sim.workers[w] {
            sim.searcher.on_task_end(job.id)?;
            sim.log(cfg.time_budget, w, EventKind::Timeout, job.id, Some(job.epoch));
        }
    }
    Ok(sim.trace)
}

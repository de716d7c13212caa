use rand::RngCore;
use std::collections::BTreeMap;

use super::{
    continue_predicate, ConfigId, RungGeometry, RungRecord, Scheduler, SchedulerDecision,
    SchedulerError, SchedulerKind,
};

#[derive(Clone, Copy, Debug, PartialEq)]
enum Status {
    Running { target: u32 },
    Paused { at: u32 },
    Finished,
}

#[derive(Clone, Debug)]
struct Trial {
    bracket: usize,
    status: Status,
}

/// Per-bracket rung ledgers plus per-config status, shared by both
/// asynchronous variants.
#[derive(Clone, Debug)]
struct Ledger {
    geometry: RungGeometry,
    // records[s][i] is the ledger of rung geometry.bracket(s)[i]
    records: Vec<Vec<RungRecord>>,
    trials: BTreeMap<ConfigId, Trial>,
}

impl Ledger {
    fn new(geometry: RungGeometry) -> Self {
        let records = (0..geometry.rungs().len())
            .map(|s| geometry.bracket(s).iter().map(|&r| RungRecord::new(r)).collect())
            .collect();
        Self { geometry, records, trials: BTreeMap::new() }
    }

    fn start(&mut self, id: ConfigId, bracket: usize) -> Result<(), SchedulerError> {
        if bracket >= self.geometry.num_brackets() {
            return Err(SchedulerError::InvalidStart {
                bracket,
                reason: format!("only {} brackets", self.geometry.num_brackets()),
            });
        }
        if self.trials.contains_key(&id) {
            return Err(SchedulerError::DuplicateStart(id));
        }
        let target = self.geometry.bracket(bracket)[0];
        self.trials.insert(id, Trial { bracket, status: Status::Running { target } });
        Ok(())
    }

    /// Validates and stores a report; returns (bracket, rung index in bracket).
    fn record(&mut self, id: ConfigId, rung: u32, y: f64) -> Result<(usize, usize), SchedulerError> {
        let trial = self.trials.get(&id).ok_or(SchedulerError::UnknownConfig(id))?;
        let expected = match trial.status {
            Status::Running { target } => Some(target),
            _ => None,
        };
        if expected != Some(rung) {
            return Err(SchedulerError::UnexpectedRung { id, expected, got: rung });
        }
        let s = trial.bracket;
        let idx = self.geometry.bracket(s).iter().position(|&r| r == rung).expect("target in bracket");
        self.records[s][idx].insert(id, y)?;
        Ok((s, idx))
    }

    fn set_status(&mut self, id: ConfigId, status: Status) {
        self.trials.get_mut(&id).expect("known trial").status = status;
    }

    fn target(&self, id: ConfigId) -> Option<u32> {
        match self.trials.get(&id)?.status {
            Status::Running { target } => Some(target),
            _ => None,
        }
    }
}

/// Stopping variant: a job reaching a rung continues iff it ranks in the top
/// `1/eta` of that rung's records, otherwise it is stopped for good.
#[derive(Clone, Debug)]
pub struct StoppingScheduler {
    ledger: Ledger,
}

impl StoppingScheduler {
    pub fn new(geometry: RungGeometry) -> Self {
        Self { ledger: Ledger::new(geometry) }
    }

    pub fn records(&self, bracket: usize) -> &[RungRecord] {
        &self.ledger.records[bracket]
    }
}

impl Scheduler for StoppingScheduler {
    fn kind(&self) -> SchedulerKind {
        SchedulerKind::Stopping
    }

    fn geometry(&self) -> &RungGeometry {
        &self.ledger.geometry
    }

    fn next_job(&mut self, rng: &mut dyn RngCore) -> SchedulerDecision {
        SchedulerDecision::StartNew { bracket: self.ledger.geometry.sample_bracket(rng) }
    }

    fn on_start(&mut self, id: ConfigId, bracket: usize) -> Result<(), SchedulerError> {
        self.ledger.start(id, bracket)
    }

    fn on_report(
        &mut self,
        id: ConfigId,
        rung: u32,
        y: f64,
    ) -> Result<Vec<SchedulerDecision>, SchedulerError> {
        let (s, idx) = self.ledger.record(id, rung, y)?;
        let eta = self.ledger.geometry.eta();
        let decision = match self.ledger.geometry.bracket(s).get(idx + 1).copied() {
            Some(next) if continue_predicate(&self.ledger.records[s][idx], id, y, eta) => {
                self.ledger.set_status(id, Status::Running { target: next });
                SchedulerDecision::Continue { next }
            }
            _ => {
                self.ledger.set_status(id, Status::Finished);
                SchedulerDecision::Stop
            }
        };
        Ok(vec![decision])
    }

    fn bracket_of(&self, id: ConfigId) -> Option<usize> {
        self.ledger.trials.get(&id).map(|t| t.bracket)
    }

    fn target_rung(&self, id: ConfigId) -> Option<u32> {
        self.ledger.target(id)
    }
}

/// Promotion variant (ASHA): jobs pause at every rung; idle workers promote
/// the best paused configuration that ranks in its rung's top `1/eta`,
/// scanning the sampled bracket from the highest rung down.
#[derive(Clone, Debug)]
pub struct PromotionScheduler {
    ledger: Ledger,
}

impl PromotionScheduler {
    pub fn new(geometry: RungGeometry) -> Self {
        Self { ledger: Ledger::new(geometry) }
    }

    pub fn records(&self, bracket: usize) -> &[RungRecord] {
        &self.ledger.records[bracket]
    }

    /// Promotion scan of bracket `s` without sampling it.
    pub fn next_job_in_bracket(&mut self, s: usize) -> SchedulerDecision {
        let eta = self.ledger.geometry.eta();
        let bracket = self.ledger.geometry.bracket(s).to_vec();
        for idx in (0..bracket.len().saturating_sub(1)).rev() {
            let record = &self.ledger.records[s][idx];
            if record.len() < eta as usize {
                continue;
            }
            let mut best: Option<(ConfigId, f64)> = None;
            for &(id, y) in record.entries() {
                let paused_here = matches!(
                    self.ledger.trials[&id].status,
                    Status::Paused { at } if at == bracket[idx]
                );
                if paused_here
                    && continue_predicate(record, id, y, eta)
                    && best.is_none_or(|(_, b)| y < b)
                {
                    best = Some((id, y));
                }
            }
            if let Some((id, _)) = best {
                let to = bracket[idx + 1];
                self.ledger.set_status(id, Status::Running { target: to });
                return SchedulerDecision::PromoteExisting { id, to };
            }
        }
        SchedulerDecision::StartNew { bracket: s }
    }
}

impl Scheduler for PromotionScheduler {
    fn kind(&self) -> SchedulerKind {
        SchedulerKind::Promotion
    }

    fn geometry(&self) -> &RungGeometry {
        &self.ledger.geometry
    }

    fn next_job(&mut self, rng: &mut dyn RngCore) -> SchedulerDecision {
        let s = self.ledger.geometry.sample_bracket(rng);
        self.next_job_in_bracket(s)
    }

    fn on_start(&mut self, id: ConfigId, bracket: usize) -> Result<(), SchedulerError> {
        self.ledger.start(id, bracket)
    }

    fn on_report(
        &mut self,
        id: ConfigId,
        rung: u32,
        y: f64,
    ) -> Result<Vec<SchedulerDecision>, SchedulerError> {
        self.ledger.record(id, rung, y)?;
        self.ledger.set_status(id, Status::Paused { at: rung });
        Ok(vec![SchedulerDecision::Pause])
    }

    fn bracket_of(&self, id: ConfigId) -> Option<usize> {
        self.ledger.trials.get(&id).map(|t| t.bracket)
    }

    fn target_rung(&self, id: ConfigId) -> Option<u32> {
        self.ledger.target(id)
    }
}

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::SearcherError;
use crate::scheduler::{ConfigId, RungGeometry};
use crate::space::FeatureVector;

/// Which reported metrics become labeled surrogate data.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DataMode {
    /// Only metrics at the rungs of the task's bracket.
    #[default]
    RungsOnly,
    /// Rung metrics plus the most recent epoch of each task.
    RungsAndLast,
    /// Every epoch.
    AllEpochs,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum LedgerEvent {
    Started { id: ConfigId, bracket: usize },
    Pending { id: ConfigId, r: u32 },
    Labeled { id: ConfigId, r: u32 },
    /// A pending evaluation withdrawn without a label.
    Cleared { id: ConfigId, r: u32 },
    /// A non-rung label superseded by a more recent observation.
    Dropped { id: ConfigId, r: u32 },
}

#[derive(Clone, Debug)]
struct Task {
    features: FeatureVector,
    bracket: usize,
    pending: Option<u32>,
    /// Highest resource labeled so far; later re-traversals below it are
    /// ignored.
    labeled_upto: u32,
}

/// Labeled and pending `(x, r)` covariates of all tasks, maintained so that
/// every labeled covariate was pending before.
#[derive(Clone, Debug)]
pub struct PendingLedger {
    geometry: RungGeometry,
    mode: DataMode,
    tasks: BTreeMap<ConfigId, Task>,
    rung_obs: Vec<(ConfigId, u32, f64)>,
    last_obs: BTreeMap<ConfigId, (u32, f64)>,
    events: Vec<LedgerEvent>,
}

impl PendingLedger {
    pub fn new(geometry: RungGeometry, mode: DataMode) -> Self {
        Self {
            geometry,
            mode,
            tasks: BTreeMap::new(),
            rung_obs: Vec::new(),
            last_obs: BTreeMap::new(),
            events: Vec::new(),
        }
    }

    pub fn mode(&self) -> DataMode {
        self.mode
    }

    pub fn geometry(&self) -> &RungGeometry {
        &self.geometry
    }

    fn task(&mut self, id: ConfigId) -> Result<&mut Task, SearcherError> {
        self.tasks.get_mut(&id).ok_or(SearcherError::UnknownConfig(id))
    }

    fn set_pending(&mut self, id: ConfigId, r: u32) {
        self.tasks.get_mut(&id).expect("known task").pending = Some(r);
        self.events.push(LedgerEvent::Pending { id, r });
    }

    fn in_bracket(&self, bracket: usize, r: u32) -> bool {
        self.geometry.bracket(bracket).contains(&r)
    }

    pub fn on_task_start(
        &mut self,
        id: ConfigId,
        features: FeatureVector,
        bracket: usize,
    ) -> Result<(), SearcherError> {
        if self.tasks.contains_key(&id) {
            return Err(SearcherError::DuplicateStart(id));
        }
        if bracket >= self.geometry.rungs().len() {
            return Err(SearcherError::InvalidBracket(bracket));
        }
        self.tasks.insert(id, Task { features, bracket, pending: None, labeled_upto: 0 });
        self.events.push(LedgerEvent::Started { id, bracket });
        let first = match self.mode {
            DataMode::RungsOnly => self.geometry.bracket(bracket)[0],
            _ => 1,
        };
        self.set_pending(id, first);
        Ok(())
    }

    /// Per-epoch metric. Only consumed outside `rungs_only` mode.
    pub fn on_epoch_report(&mut self, id: ConfigId, epoch: u32, y: f64) -> Result<(), SearcherError> {
        let mode = self.mode;
        let task = self.task(id)?;
        if mode == DataMode::RungsOnly || epoch <= task.labeled_upto {
            return Ok(());
        }
        if task.pending != Some(epoch) {
            return Err(SearcherError::UnexpectedReport { id, expected: task.pending, got: epoch });
        }
        task.pending = None;
        task.labeled_upto = epoch;
        let bracket = task.bracket;
        self.events.push(LedgerEvent::Labeled { id, r: epoch });
        let at_rung = self.in_bracket(bracket, epoch);
        let superseded = match mode {
            DataMode::RungsAndLast if at_rung => self.last_obs.remove(&id),
            DataMode::RungsAndLast => self.last_obs.insert(id, (epoch, y)),
            _ => None,
        };
        if let Some((r, _)) = superseded {
            self.events.push(LedgerEvent::Dropped { id, r });
        }
        if at_rung || mode == DataMode::AllEpochs {
            self.rung_obs.push((id, epoch, y));
        }
        if !at_rung {
            self.set_pending(id, epoch + 1);
        }
        Ok(())
    }

    /// Metric at a rung of the task's bracket, after the scheduler decided
    /// whether the task keeps running (`survived`).
    pub fn on_rung_report(
        &mut self,
        id: ConfigId,
        r: u32,
        y: f64,
        survived: bool,
    ) -> Result<(), SearcherError> {
        let mode = self.mode;
        let task = self.task(id)?;
        let bracket = task.bracket;
        match mode {
            DataMode::RungsOnly => {
                if task.pending != Some(r) {
                    return Err(SearcherError::UnexpectedReport { id, expected: task.pending, got: r });
                }
                task.pending = None;
                task.labeled_upto = r;
                self.rung_obs.push((id, r, y));
                self.events.push(LedgerEvent::Labeled { id, r });
                if survived {
                    if let Some(next) = self.geometry.next_rung(bracket, r) {
                        self.set_pending(id, next);
                    }
                }
            }
            _ => {
                if task.labeled_upto != r || task.pending.is_some() {
                    return Err(SearcherError::UnexpectedReport { id, expected: task.pending, got: r });
                }
                if survived && r < self.geometry.r_max() {
                    self.set_pending(id, r + 1);
                }
            }
        }
        Ok(())
    }

    /// A paused task resumes towards rung `to`. Rungs it already reported
    /// are not registered again.
    pub fn on_promote(&mut self, id: ConfigId, to: u32) -> Result<(), SearcherError> {
        let mode = self.mode;
        let task = self.task(id)?;
        if task.pending.is_some() {
            return Err(SearcherError::UnexpectedReport { id, expected: task.pending, got: to });
        }
        let (bracket, upto) = (task.bracket, task.labeled_upto);
        let next = match mode {
            DataMode::RungsOnly => self.geometry.next_rung(bracket, upto),
            _ => Some(upto + 1),
        };
        match next {
            Some(n) if mode != DataMode::RungsOnly || n == to => {
                self.set_pending(id, n);
                Ok(())
            }
            _ => Err(SearcherError::UnexpectedReport { id, expected: next, got: to }),
        }
    }

    /// Withdraws the pending evaluation of a task that ends without
    /// reporting.
    pub fn clear(&mut self, id: ConfigId) -> Result<(), SearcherError> {
        let task = self.task(id)?;
        if let Some(r) = task.pending.take() {
            self.events.push(LedgerEvent::Cleared { id, r });
        }
        Ok(())
    }

    pub fn is_tracked(&self, id: ConfigId) -> bool {
        self.tasks.contains_key(&id)
    }

    pub fn features(&self, id: ConfigId) -> Option<&FeatureVector> {
        self.tasks.get(&id).map(|t| &t.features)
    }

    pub fn pending_of(&self, id: ConfigId) -> Option<u32> {
        self.tasks.get(&id).and_then(|t| t.pending)
    }

    /// Labeled `(id, r, y)` triples: rung data in report order, then the
    /// latest non-rung epoch per task ordered by id.
    pub fn labeled(&self) -> Vec<(ConfigId, u32, f64)> {
        let mut out = self.rung_obs.clone();
        out.extend(self.last_obs.iter().map(|(&id, &(r, y))| (id, r, y)));
        out
    }

    pub fn num_labeled(&self) -> usize {
        self.rung_obs.len() + self.last_obs.len()
    }

    /// Pending `(id, r)` pairs ordered by id.
    pub fn pending(&self) -> Vec<(ConfigId, u32)> {
        self.tasks.iter().filter_map(|(&id, t)| t.pending.map(|r| (id, r))).collect()
    }

    /// Number of labeled points at each rung level, lowest rung first.
    pub fn rung_counts(&self) -> Vec<(u32, usize)> {
        let labeled = self.labeled();
        self.geometry
            .rungs()
            .iter()
            .map(|&level| (level, labeled.iter().filter(|(_, r, _)| *r == level).count()))
            .collect()
    }

    pub fn events(&self) -> &[LedgerEvent] {
        &self.events
    }
}

use rand::RngCore;
use std::collections::{BTreeMap, VecDeque};

use super::{ConfigId, RungGeometry, Scheduler, SchedulerDecision, SchedulerError, SchedulerKind};

/// Synchronous Hyperband: cycles over brackets; each rung has a fixed quota
/// and is a synchronization point. Only once every slot of a rung has
/// reported are the best `size(k+1)` configurations promoted and the rest
/// terminated. Workers with nothing to do get [`SchedulerDecision::Idle`].
///
/// With a single bracket this is plain successive halving.
#[derive(Clone, Debug)]
pub struct SynchronousScheduler {
    geometry: RungGeometry,
    // rung_sizes[s][k]: number of slots at rung k of bracket s
    rung_sizes: Vec<Vec<usize>>,
    bracket: usize,
    rung: usize,
    starts_left: usize,
    promote_queue: VecDeque<(ConfigId, u32)>,
    reported: Vec<(ConfigId, f64)>,
    members: BTreeMap<ConfigId, usize>,
    running: BTreeMap<ConfigId, u32>,
}

impl SynchronousScheduler {
    /// Uses the Hyperband rung sizes: `n_0 = ceil((K+1)/(K-s+1) * eta^(K-s))`
    /// and `n_k = floor(n_0 / eta^k)` (at least 1).
    pub fn new(geometry: RungGeometry) -> Self {
        let k = geometry.k();
        let eta = geometry.eta() as usize;
        let sizes = (0..geometry.num_brackets())
            .map(|s| {
                let n0 = ((k + 1) as f64 / (k - s + 1) as f64 * (eta as f64).powi((k - s) as i32))
                    .ceil() as usize;
                (0..=(k - s)).map(|j| (n0 / eta.pow(j as u32)).max(1)).collect()
            })
            .collect();
        Self::with_rung_sizes(geometry, sizes).expect("hyperband sizes are valid")
    }

    /// Explicit per-bracket rung sizes (non-increasing, all >= 1).
    pub fn with_rung_sizes(
        geometry: RungGeometry,
        rung_sizes: Vec<Vec<usize>>,
    ) -> Result<Self, SchedulerError> {
        if rung_sizes.len() != geometry.num_brackets() {
            return Err(SchedulerError::InvalidGeometry(format!(
                "expected sizes for {} brackets, got {}",
                geometry.num_brackets(),
                rung_sizes.len()
            )));
        }
        for (s, sizes) in rung_sizes.iter().enumerate() {
            if sizes.len() != geometry.bracket(s).len()
                || sizes.contains(&0)
                || sizes.windows(2).any(|w| w[1] > w[0])
            {
                return Err(SchedulerError::InvalidGeometry(format!(
                    "bracket {s}: rung sizes {sizes:?} must be non-increasing, positive, one per rung"
                )));
            }
        }
        let starts_left = rung_sizes[0][0];
        Ok(Self {
            geometry,
            rung_sizes,
            bracket: 0,
            rung: 0,
            starts_left,
            promote_queue: VecDeque::new(),
            reported: Vec::new(),
            members: BTreeMap::new(),
            running: BTreeMap::new(),
        })
    }

    pub fn rung_sizes(&self) -> &[Vec<usize>] {
        &self.rung_sizes
    }

    /// Bracket and rung index currently being filled.
    pub fn position(&self) -> (usize, usize) {
        (self.bracket, self.rung)
    }

    fn level(&self) -> u32 {
        self.geometry.bracket(self.bracket)[self.rung]
    }

    fn complete_rung(&mut self) -> Vec<SchedulerDecision> {
        let sizes = &self.rung_sizes[self.bracket];
        let mut out = Vec::new();
        let done = std::mem::take(&mut self.reported);
        if self.rung + 1 < sizes.len() {
            let keep = sizes[self.rung + 1];
            let mut order: Vec<usize> = (0..done.len()).collect();
            // stable: ties keep report order
            order.sort_by(|&a, &b| done[a].1.total_cmp(&done[b].1));
            let to = self.geometry.bracket(self.bracket)[self.rung + 1];
            for (rank, &i) in order.iter().enumerate() {
                let id = done[i].0;
                if rank < keep {
                    self.promote_queue.push_back((id, to));
                } else {
                    out.push(SchedulerDecision::Terminate { id });
                }
            }
            self.rung += 1;
        } else {
            self.bracket = (self.bracket + 1) % self.geometry.num_brackets();
            self.rung = 0;
            self.starts_left = self.rung_sizes[self.bracket][0];
        }
        out
    }
}

impl Scheduler for SynchronousScheduler {
    fn kind(&self) -> SchedulerKind {
        SchedulerKind::Synchronous
    }

    fn geometry(&self) -> &RungGeometry {
        &self.geometry
    }

    fn next_job(&mut self, _rng: &mut dyn RngCore) -> SchedulerDecision {
        if self.rung == 0 && self.starts_left > 0 {
            return SchedulerDecision::StartNew { bracket: self.bracket };
        }
        match self.promote_queue.pop_front() {
            Some((id, to)) => {
                self.running.insert(id, to);
                SchedulerDecision::PromoteExisting { id, to }
            }
            None => SchedulerDecision::Idle,
        }
    }

    fn on_start(&mut self, id: ConfigId, bracket: usize) -> Result<(), SchedulerError> {
        if self.members.contains_key(&id) {
            return Err(SchedulerError::DuplicateStart(id));
        }
        if bracket != self.bracket || self.rung != 0 || self.starts_left == 0 {
            return Err(SchedulerError::InvalidStart {
                bracket,
                reason: "no open slot in the base rung of the current bracket".into(),
            });
        }
        self.starts_left -= 1;
        self.members.insert(id, bracket);
        self.running.insert(id, self.level());
        Ok(())
    }

    fn on_report(
        &mut self,
        id: ConfigId,
        rung: u32,
        y: f64,
    ) -> Result<Vec<SchedulerDecision>, SchedulerError> {
        if !self.members.contains_key(&id) {
            return Err(SchedulerError::UnknownConfig(id));
        }
        let expected = self.running.get(&id).copied();
        if expected != Some(rung) || rung != self.level() {
            return Err(SchedulerError::UnexpectedRung { id, expected, got: rung });
        }
        if !y.is_finite() {
            return Err(SchedulerError::NonFiniteMetric { id, rung });
        }
        self.running.remove(&id);
        self.reported.push((id, y));
        let mut out = vec![SchedulerDecision::Pause];
        if self.reported.len() == self.rung_sizes[self.bracket][self.rung] {
            out.extend(self.complete_rung());
        }
        Ok(out)
    }

    fn bracket_of(&self, id: ConfigId) -> Option<usize> {
        self.members.get(&id).copied()
    }

    fn target_rung(&self, id: ConfigId) -> Option<u32> {
        self.running.get(&id).copied()
    }
}

use serde::{Deserialize, Serialize};

use super::{ConfigId, SchedulerError};

/// Metric ledger of one rung: append-only, at most one entry per config.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RungRecord {
    level: u32,
    entries: Vec<(ConfigId, f64)>,
}

impl RungRecord {
    pub fn new(level: u32) -> Self {
        Self { level, entries: Vec::new() }
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn entries(&self) -> &[(ConfigId, f64)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, id: ConfigId) -> Option<f64> {
        self.entries.iter().find(|(c, _)| *c == id).map(|(_, y)| *y)
    }

    pub fn insert(&mut self, id: ConfigId, y: f64) -> Result<(), SchedulerError> {
        if !y.is_finite() {
            return Err(SchedulerError::NonFiniteMetric { id, rung: self.level });
        }
        if self.get(id).is_some() {
            return Err(SchedulerError::DuplicateReport { id, rung: self.level });
        }
        self.entries.push((id, y));
        Ok(())
    }
}

/// True iff `y` ranks within the best `ceil(n / eta)` of the `n` metrics
/// recorded at this rung (lower is better, ties continue). With fewer than
/// `eta` records the answer is always true.
pub fn continue_predicate(record: &RungRecord, id: ConfigId, y: f64, eta: u32) -> bool {
    let n = record.len();
    let eta = eta as usize;
    if n < eta {
        return true;
    }
    let cutoff = n.div_ceil(eta);
    let better = record.entries.iter().filter(|(c, v)| *c != id && *v < y).count();
    better < cutoff
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(values: &[f64]) -> RungRecord {
        let mut r = RungRecord::new(1);
        for (i, &v) in values.iter().enumerate() {
            r.insert(ConfigId(i as u64), v).unwrap();
        }
        r
    }

    #[test]
    fn best_of_three_continues() {
        let r = record(&[0.30, 0.20, 0.10]);
        assert!(continue_predicate(&r, ConfigId(2), 0.10, 3));
    }

    #[test]
    fn worst_of_three_stops() {
        let r = record(&[0.10, 0.20, 0.30]);
        assert!(!continue_predicate(&r, ConfigId(2), 0.30, 3));
    }

    #[test]
    fn fewer_than_eta_always_continues() {
        let r = record(&[0.90]);
        assert!(continue_predicate(&r, ConfigId(0), 0.90, 3));
        let r = record(&[0.1, 0.9]);
        assert!(continue_predicate(&r, ConfigId(1), 0.9, 3));
    }

    #[test]
    fn ties_at_cutoff_continue() {
        let r = record(&[0.2, 0.2, 0.5]);
        assert!(continue_predicate(&r, ConfigId(0), 0.2, 3));
        assert!(continue_predicate(&r, ConfigId(1), 0.2, 3));
    }

    #[test]
    fn duplicate_and_nan_rejected() {
        let mut r = record(&[0.2]);
        assert_eq!(
            r.insert(ConfigId(0), 0.3),
            Err(SchedulerError::DuplicateReport { id: ConfigId(0), rung: 1 })
        );
        assert!(r.insert(ConfigId(5), f64::NAN).is_err());
    }
}

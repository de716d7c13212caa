use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::RngCore;
use serde::{Deserialize, Serialize};

use super::SchedulerError;

/// Rung levels and brackets of (asynchronous) Hyperband.
///
/// Rungs are `r_min * eta^k`; when `r_max / r_min` is not a power of `eta`
/// the top rung is clamped to `r_max`. Bracket `s` uses the rungs from index
/// `s` upwards, so every bracket ends at `r_max`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RungGeometry {
    r_min: u32,
    r_max: u32,
    eta: u32,
    rungs: Vec<u32>,
    num_brackets: usize,
}

impl RungGeometry {
    pub fn new(r_min: u32, r_max: u32, eta: u32) -> Result<Self, SchedulerError> {
        if r_min < 1 || r_min >= r_max {
            return Err(SchedulerError::InvalidGeometry(format!(
                "need 1 <= r_min < r_max, got r_min={r_min}, r_max={r_max}"
            )));
        }
        if !(2..=4).contains(&eta) {
            return Err(SchedulerError::InvalidGeometry(format!("eta must be 2, 3 or 4, got {eta}")));
        }
        let mut rungs = Vec::new();
        let mut r = u64::from(r_min);
        while r < u64::from(r_max) {
            rungs.push(r as u32);
            r *= u64::from(eta);
        }
        // r is now the first level >= r_max; clamp it.
        rungs.push(r_max);
        let num_brackets = rungs.len();
        Ok(Self { r_min, r_max, eta, rungs, num_brackets })
    }

    /// Degenerate single-rung geometry `{r_max}`: every evaluation runs to
    /// completion and no scheduling decisions are made on the way.
    pub fn single(r_max: u32, eta: u32) -> Result<Self, SchedulerError> {
        if r_max < 1 {
            return Err(SchedulerError::InvalidGeometry("r_max must be >= 1".into()));
        }
        Ok(Self { r_min: r_max, r_max, eta: eta.max(2), rungs: vec![r_max], num_brackets: 1 })
    }

    /// Restricts bracket sampling to `s < n`.
    pub fn with_num_brackets(mut self, n: usize) -> Result<Self, SchedulerError> {
        if n == 0 || n > self.rungs.len() {
            return Err(SchedulerError::InvalidGeometry(format!(
                "num_brackets must be in 1..={}, got {n}",
                self.rungs.len()
            )));
        }
        self.num_brackets = n;
        Ok(self)
    }

    pub fn r_min(&self) -> u32 {
        self.r_min
    }

    pub fn r_max(&self) -> u32 {
        self.r_max
    }

    pub fn eta(&self) -> u32 {
        self.eta
    }

    pub fn rungs(&self) -> &[u32] {
        &self.rungs
    }

    /// `K`: index of the top rung.
    pub fn k(&self) -> usize {
        self.rungs.len() - 1
    }

    pub fn num_brackets(&self) -> usize {
        self.num_brackets
    }

    pub fn bracket(&self, s: usize) -> &[u32] {
        &self.rungs[s..]
    }

    /// The rung after `r` in bracket `s`, or `None` at the top.
    pub fn next_rung(&self, s: usize, r: u32) -> Option<u32> {
        let b = self.bracket(s);
        let i = b.iter().position(|&x| x == r)?;
        b.get(i + 1).copied()
    }

    pub fn rung_index(&self, r: u32) -> Option<usize> {
        self.rungs.iter().position(|&x| x == r)
    }

    /// Unnormalized bracket weights `(K+1)/(K-s+1) * eta^(K-s)` for the
    /// usable brackets. Proportional to the number of configurations started
    /// per bracket in synchronous Hyperband.
    pub fn bracket_weights(&self) -> Vec<f64> {
        let k = self.k();
        (0..self.num_brackets)
            .map(|s| {
                (k + 1) as f64 / (k - s + 1) as f64 * f64::from(self.eta).powi((k - s) as i32)
            })
            .collect()
    }

    pub fn sample_bracket(&self, rng: &mut dyn RngCore) -> usize {
        if self.num_brackets == 1 {
            return 0;
        }
        let dist = WeightedIndex::new(self.bracket_weights()).expect("positive weights");
        dist.sample(rng)
    }
}

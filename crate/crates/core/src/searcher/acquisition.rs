use statrs::distribution::{Continuous, ContinuousCDF, Normal};

/// Largest rung with at least `l_acq` labeled points, or the lowest rung
/// when none qualifies. `counts` is ordered by rung level.
pub fn choose_r_acq(counts: &[(u32, usize)], l_acq: usize) -> u32 {
    counts
        .iter()
        .rev()
        .find(|(_, c)| *c >= l_acq)
        .or(counts.first())
        .map(|(r, _)| *r)
        .expect("at least one rung")
}

/// Expected improvement below `incumbent` (minimization), averaged over the
/// fantasy means that share one predictive variance.
pub fn expected_improvement(means: &[f64], variance: f64, incumbent: f64) -> f64 {
    if means.is_empty() {
        return 0.0;
    }
    let sigma = variance.max(0.0).sqrt();
    let total: f64 = if sigma <= 0.0 {
        means.iter().map(|m| (incumbent - m).max(0.0)).sum()
    } else {
        let normal = Normal::standard();
        means
            .iter()
            .map(|m| {
                let z = (incumbent - m) / sigma;
                sigma * (z * normal.cdf(z) + normal.pdf(z))
            })
            .sum()
    };
    total / means.len() as f64
}

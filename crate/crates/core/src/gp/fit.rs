//! Empirical-Bayes fitting of kernel hyperparameters.
//!
//! Hyperparameters are optimized in an unconstrained space: positive
//! parameters go through a log transform squashed into their box by a
//! logistic, `delta` through a logistic onto [0, 1], and the mean constant is
//! left as is.

use rand::{Rng, RngCore};

use super::kernel::{KernelSpec, Param};
use super::optimize::{lbfgs_minimize, LbfgsOptions};
use super::posterior::{log_marginal_likelihood, log_marginal_likelihood_grad, Observation};

const EDGE: f64 = 1e-9;

#[derive(Clone, Copy, Debug)]
pub struct FitOptions {
    pub restarts: usize,
    pub lbfgs: LbfgsOptions,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self { restarts: 5, lbfgs: LbfgsOptions::default() }
    }
}

#[derive(Clone, Debug)]
pub struct FitOutcome {
    pub spec: KernelSpec,
    pub log_likelihood: f64,
    /// Every restart failed and the template was returned unchanged.
    pub fell_back: bool,
}

fn sigmoid(u: f64) -> f64 {
    1.0 / (1.0 + (-u).exp())
}

fn logit(t: f64) -> f64 {
    let t = t.clamp(EDGE, 1.0 - EDGE);
    (t / (1.0 - t)).ln()
}

pub(crate) fn to_unconstrained(p: Param, value: f64) -> f64 {
    match p.bounds() {
        None => value,
        Some((lo, hi)) if p == Param::Delta => logit((value - lo) / (hi - lo)),
        Some((lo, hi)) => {
            let v = value.clamp(lo, hi);
            logit((v.ln() - lo.ln()) / (hi.ln() - lo.ln()))
        }
    }
}

/// Natural value and its derivative w.r.t. the unconstrained coordinate.
pub(crate) fn from_unconstrained(p: Param, u: f64) -> (f64, f64) {
    match p.bounds() {
        None => (u, 1.0),
        Some((lo, hi)) if p == Param::Delta => {
            let s = sigmoid(u);
            (lo + (hi - lo) * s, (hi - lo) * s * (1.0 - s))
        }
        Some((lo, hi)) => {
            let s = sigmoid(u);
            let span = hi.ln() - lo.ln();
            let v = (lo.ln() + span * s).exp();
            (v, v * span * s * (1.0 - s))
        }
    }
}

fn apply(template: &KernelSpec, params: &[Param], u: &[f64]) -> (KernelSpec, Vec<f64>) {
    let mut spec = template.clone();
    let mut jac = Vec::with_capacity(params.len());
    for (&p, &ui) in params.iter().zip(u) {
        let (v, d) = from_unconstrained(p, ui);
        spec.set(p, v);
        jac.push(d);
    }
    (spec, jac)
}

/// Maximizes the log marginal likelihood over the template's free
/// hyperparameters with multi-restart L-BFGS. The first restart starts at
/// the template itself (moved inside the box if needed), so the result is
/// never worse than the template. Deterministic given the random source.
pub fn fit_hyperparameters(
    data: &[Observation],
    template: &KernelSpec,
    rng: &mut dyn RngCore,
    opts: &FitOptions,
) -> FitOutcome {
    let params = template.active_params();
    let start: Vec<f64> = params.iter().map(|&p| to_unconstrained(p, template.get(p))).collect();
    let objective = |u: &[f64]| {
        let (spec, jac) = apply(template, &params, u);
        let (lml, grad) = log_marginal_likelihood_grad(data, &spec, &params).ok()?;
        Some((-lml, grad.iter().zip(&jac).map(|(g, j)| -g * j).collect()))
    };

    let mut best: Option<(Vec<f64>, f64)> = None;
    for restart in 0..opts.restarts.max(1) {
        let x0 = if restart == 0 {
            start.clone()
        } else {
            params
                .iter()
                .map(|p| match p.bounds() {
                    None => rng.random_range(-1.0..1.0),
                    Some(_) => rng.random_range(-2.5..2.5),
                })
                .collect()
        };
        if let Some((u, v)) = lbfgs_minimize(objective, x0, opts.lbfgs) {
            if best.as_ref().is_none_or(|(_, b)| v < *b) {
                best = Some((u, v));
            }
        }
    }

    match best {
        Some((u, v)) => FitOutcome { spec: apply(template, &params, &u).0, log_likelihood: -v, fell_back: false },
        None => {
            log::warn!("all hyperparameter restarts failed; keeping template spec");
            let log_likelihood = log_marginal_likelihood(data, template).unwrap_or(f64::NEG_INFINITY);
            FitOutcome { spec: template.clone(), log_likelihood, fell_back: true }
        }
    }
}

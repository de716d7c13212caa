//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use std::collections::BTreeMap;

use abohb::gp::{KernelSpec, KernelVariant, Observation, SurrogatePoint};
use abohb::scheduler::{ConfigId, RungGeometry, SchedulerDecision};
use abohb::searcher::{DataMode, LedgerEvent};
use abohb::sim::{EventKind, EventTrace};
use rand::Rng;

pub const VARIANTS: [KernelVariant; 4] = [
    KernelVariant::MaternJoint,
    KernelVariant::ExpdecayAdditive,
    KernelVariant::ExpdecayFixed,
    KernelVariant::ExpdecayLearned,
];

// ---------------------------------------------------------------- kernels

fn matern(a: &[f64], b: &[f64], ls: &[f64], amp: f64) -> f64 {
    let mut d2 = 0.0;
    for i in 0..a.len() {
        d2 += ((a[i] - b[i]) / ls[i]) * ((a[i] - b[i]) / ls[i]);
    }
    let d = d2.sqrt();
    amp * (1.0 + 5f64.sqrt() * d + 5.0 * d2 / 3.0) * (-(5f64.sqrt()) * d).exp()
}

pub fn kappa(u: f64, alpha: f64, beta: f64) -> f64 {
    beta.powf(alpha) / (u + beta).powf(alpha)
}

fn delta_of(spec: &KernelSpec) -> f64 {
    match spec.variant {
        KernelVariant::ExpdecayFixed => 1.0,
        KernelVariant::ExpdecayLearned => spec.delta,
        _ => 0.0,
    }
}

/// Closed-form covariance of `gamma e^{-lr} + f(x)(1 - delta e^{-lr})` with
/// resources divided by `resource_max`; the Matérn variant appends
/// `log r / log r_max` as an extra input.
pub fn oracle_kernel(spec: &KernelSpec, p: &SurrogatePoint, q: &SurrogatePoint) -> f64 {
    if spec.variant == KernelVariant::MaternJoint {
        let warp = |r: f64| r.ln() / spec.resource_max.ln();
        let mut a = p.x.clone();
        a.push(warp(p.r));
        let mut b = q.x.clone();
        b.push(warp(q.r));
        let mut ls = spec.matern_length_scales.clone();
        ls.push(spec.resource_length_scale);
        return matern(&a, &b, &ls, spec.matern_amplitude);
    }
    let (r, s) = (p.r / spec.resource_max, q.r / spec.resource_max);
    let k = |u| kappa(u, spec.alpha, spec.beta);
    let d = delta_of(spec);
    let kr = k(r + s) - k(r) * k(s);
    let c = spec.gamma - d * spec.mean_constant;
    c * kr * c
        + matern(&p.x, &q.x, &spec.matern_length_scales, spec.matern_amplitude)
            * (1.0 - d * (k(r) + k(s) - d * k(r + s)))
}

pub fn oracle_mean(spec: &KernelSpec, p: &SurrogatePoint) -> f64 {
    if spec.variant == KernelVariant::MaternJoint {
        return spec.mean_constant;
    }
    let kr = kappa(p.r / spec.resource_max, spec.alpha, spec.beta);
    spec.gamma * kr + spec.mean_constant * (1.0 - delta_of(spec) * kr)
}

// ---------------------------------------------------------- linear algebra

/// Gauss-Jordan inverse with partial pivoting.
pub fn invert(a: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = a.len();
    let mut m: Vec<Vec<f64>> = a
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..n).map(|j| if i == j { 1.0 } else { 0.0 }));
            r
        })
        .collect();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs())).unwrap();
        m.swap(col, piv);
        let p = m[col][col];
        for v in m[col].iter_mut() {
            *v /= p;
        }
        for row in 0..n {
            if row != col {
                let f = m[row][col];
                if f != 0.0 {
                    for j in 0..2 * n {
                        m[row][j] -= f * m[col][j];
                    }
                }
            }
        }
    }
    m.into_iter().map(|r| r[n..].to_vec()).collect()
}

/// Posterior mean and variance at `q` from the explicit inverse of
/// `K + (noise + jitter) I`.
pub fn naive_posterior(
    spec: &KernelSpec,
    data: &[Observation],
    jitter: f64,
    q: &SurrogatePoint,
) -> (f64, f64) {
    let n = data.len();
    let k: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    let v = oracle_kernel(spec, &data[i].point, &data[j].point);
                    if i == j { v + spec.noise_variance + jitter } else { v }
                })
                .collect()
        })
        .collect();
    let kinv = invert(&k);
    let kq: Vec<f64> = data.iter().map(|o| oracle_kernel(spec, &o.point, q)).collect();
    let resid: Vec<f64> = data.iter().map(|o| o.y - oracle_mean(spec, &o.point)).collect();
    let mut mean = oracle_mean(spec, q);
    let mut quad = 0.0;
    for i in 0..n {
        for j in 0..n {
            mean += kq[i] * kinv[i][j] * resid[j];
            quad += kq[i] * kinv[i][j] * kq[j];
        }
    }
    (mean, oracle_kernel(spec, q, q) - quad)
}

// ---------------------------------------------------------- random inputs

pub fn random_spec<R: Rng>(rng: &mut R, variant: KernelVariant, dim: usize, r_max: f64) -> KernelSpec {
    let mut s = KernelSpec::new(variant, dim, r_max);
    s.alpha = rng.random_range(0.3..3.0);
    s.beta = rng.random_range(0.1..2.0);
    s.gamma = rng.random_range(0.1..2.0);
    if variant == KernelVariant::ExpdecayLearned {
        s.delta = rng.random_range(0.0..=1.0);
    }
    s.noise_variance = rng.random_range(1e-3..1e-1);
    s.matern_amplitude = rng.random_range(0.5..2.0);
    for l in s.matern_length_scales.iter_mut() {
        *l = rng.random_range(0.2..2.0);
    }
    s.resource_length_scale = rng.random_range(0.2..2.0);
    s.mean_constant = rng.random_range(-1.0..1.0);
    s
}

pub fn random_point<R: Rng>(rng: &mut R, dim: usize, r_max: u32) -> SurrogatePoint {
    SurrogatePoint::new((0..dim).map(|_| rng.random::<f64>()).collect(), f64::from(rng.random_range(1..=r_max)))
}

pub fn random_data<R: Rng>(rng: &mut R, n: usize, dim: usize, r_max: u32) -> Vec<Observation> {
    (0..n)
        .map(|_| {
            let p = random_point(rng, dim, r_max);
            Observation { point: p, y: rng.random_range(-1.0..1.0) }
        })
        .collect()
}

// ------------------------------------------------------ scheduler oracles

/// `y` survives a rung holding `values` (which include `y`) iff it is no
/// worse than the `ceil(n / eta)`-th smallest value, or fewer than `eta`
/// values are recorded.
pub fn in_top_fraction(values: &[f64], y: f64, eta: usize) -> bool {
    if values.len() < eta {
        return true;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    y <= sorted[values.len().div_ceil(eta) - 1]
}

/// Brackets `B_s = {r_min eta^(k+s)}` of a power geometry.
pub fn brackets(r_min: u32, eta: u32, k: usize) -> Vec<Vec<u32>> {
    (0..=k).map(|s| (s..=k).map(|j| r_min * eta.pow(j as u32)).collect()).collect()
}

#[derive(Default)]
pub struct AsyncOracle {
    pub brackets: Vec<Vec<u32>>,
    pub eta: usize,
    /// (bracket, level) -> reports in arrival order
    pub rungs: BTreeMap<(usize, u32), Vec<(ConfigId, f64)>>,
    pub bracket_of: BTreeMap<ConfigId, usize>,
    pub paused_at: BTreeMap<ConfigId, u32>,
}

impl AsyncOracle {
    pub fn new(brackets: Vec<Vec<u32>>, eta: usize) -> Self {
        Self { brackets, eta, ..Default::default() }
    }

    fn record(&mut self, id: ConfigId, r: u32, y: f64) -> Vec<f64> {
        let s = self.bracket_of[&id];
        let rung = self.rungs.entry((s, r)).or_default();
        rung.push((id, y));
        rung.iter().map(|e| e.1).collect()
    }

    pub fn stopping_report(&mut self, id: ConfigId, r: u32, y: f64) -> SchedulerDecision {
        let values = self.record(id, r, y);
        let b = &self.brackets[self.bracket_of[&id]];
        let pos = b.iter().position(|&l| l == r).unwrap();
        if pos + 1 < b.len() && in_top_fraction(&values, y, self.eta) {
            SchedulerDecision::Continue { next: b[pos + 1] }
        } else {
            SchedulerDecision::Stop
        }
    }

    pub fn promotion_report(&mut self, id: ConfigId, r: u32, y: f64) -> SchedulerDecision {
        self.record(id, r, y);
        self.paused_at.insert(id, r);
        SchedulerDecision::Pause
    }

    /// Scan `B_s` from its second-highest rung down; promote the best
    /// eligible paused config (earliest report among ties).
    pub fn promotion_next(&mut self, s: usize) -> SchedulerDecision {
        let b = self.brackets[s].clone();
        for pos in (0..b.len().saturating_sub(1)).rev() {
            let Some(rung) = self.rungs.get(&(s, b[pos])) else { continue };
            if rung.len() < self.eta {
                continue;
            }
            let values: Vec<f64> = rung.iter().map(|e| e.1).collect();
            let mut eligible: Vec<(usize, ConfigId, f64)> = rung
                .iter()
                .enumerate()
                .filter(|(_, (id, y))| self.paused_at.get(id) == Some(&b[pos]) && in_top_fraction(&values, *y, self.eta))
                .map(|(i, &(id, y))| (i, id, y))
                .collect();
            eligible.sort_by(|a, c| a.2.total_cmp(&c.2).then(a.0.cmp(&c.0)));
            if let Some(&(_, id, _)) = eligible.first() {
                self.paused_at.remove(&id);
                return SchedulerDecision::PromoteExisting { id, to: b[pos + 1] };
            }
        }
        SchedulerDecision::StartNew { bracket: s }
    }
}

/// Synchronous Hyperband as a plain state machine over fixed quotas.
pub struct SyncOracle {
    pub brackets: Vec<Vec<u32>>,
    pub sizes: Vec<Vec<usize>>,
    pub s: usize,
    pub k: usize,
    pub started: usize,
    pub queue: Vec<(ConfigId, u32)>,
    pub done: Vec<(ConfigId, f64)>,
}

impl SyncOracle {
    pub fn new(brackets: Vec<Vec<u32>>, eta: usize) -> Self {
        let kmax = brackets.len() - 1;
        let sizes = (0..=kmax)
            .map(|s| {
                let n0 = ((kmax + 1) as f64 / (kmax - s + 1) as f64 * (eta as f64).powi((kmax - s) as i32)).ceil() as usize;
                let mut v = vec![n0];
                for j in 1..=(kmax - s) {
                    v.push((n0 / eta.pow(j as u32)).max(1));
                }
                v
            })
            .collect();
        Self { brackets, sizes, s: 0, k: 0, started: 0, queue: Vec::new(), done: Vec::new() }
    }

    pub fn next(&mut self) -> SchedulerDecision {
        if self.k == 0 && self.started < self.sizes[self.s][0] {
            return SchedulerDecision::StartNew { bracket: self.s };
        }
        if self.queue.is_empty() {
            SchedulerDecision::Idle
        } else {
            let (id, to) = self.queue.remove(0);
            SchedulerDecision::PromoteExisting { id, to }
        }
    }

    pub fn started(&mut self) {
        self.started += 1;
    }

    pub fn report(&mut self, id: ConfigId, y: f64) -> Vec<SchedulerDecision> {
        self.done.push((id, y));
        let mut out = vec![SchedulerDecision::Pause];
        if self.done.len() < self.sizes[self.s][self.k] {
            return out;
        }
        if self.k + 1 < self.sizes[self.s].len() {
            let mut ranked: Vec<(usize, ConfigId, f64)> =
                self.done.iter().enumerate().map(|(i, &(id, y))| (i, id, y)).collect();
            ranked.sort_by(|a, b| a.2.total_cmp(&b.2).then(a.0.cmp(&b.0)));
            let keep = self.sizes[self.s][self.k + 1];
            let to = self.brackets[self.s][self.k + 1];
            for (rank, &(_, id, _)) in ranked.iter().enumerate() {
                if rank < keep {
                    self.queue.push((id, to));
                } else {
                    out.push(SchedulerDecision::Terminate { id });
                }
            }
            self.k += 1;
        } else {
            self.s = (self.s + 1) % self.brackets.len();
            self.k = 0;
            self.started = 0;
        }
        self.done.clear();
        out
    }
}

// ------------------------------------------------------------ trace checks

/// Replays ledger events; returns the number of protocol violations.
pub fn ledger_violations(events: &[LedgerEvent], geometry: &RungGeometry, mode: DataMode) -> usize {
    #[derive(Default)]
    struct T {
        bracket: usize,
        labeled: u32,
        pending: Option<u32>,
    }
    let mut tasks: BTreeMap<ConfigId, T> = BTreeMap::new();
    let mut bad = 0;
    for e in events {
        match *e {
            LedgerEvent::Started { id, bracket } => {
                bad += usize::from(tasks.insert(id, T { bracket, ..T::default() }).is_some());
            }
            LedgerEvent::Pending { id, r } => {
                let Some(t) = tasks.get_mut(&id) else { bad += 1; continue };
                let expected = match mode {
                    DataMode::RungsOnly => {
                        let b = geometry.bracket(t.bracket);
                        if t.labeled == 0 { Some(b[0]) } else { b.iter().copied().find(|&l| l > t.labeled) }
                    }
                    _ => Some(t.labeled + 1),
                };
                bad += usize::from(t.pending.is_some() || expected != Some(r));
                t.pending = Some(r);
            }
            LedgerEvent::Labeled { id, r } => {
                let Some(t) = tasks.get_mut(&id) else { bad += 1; continue };
                bad += usize::from(t.pending != Some(r));
                t.pending = None;
                t.labeled = r;
            }
            LedgerEvent::Cleared { id, r } => {
                let Some(t) = tasks.get_mut(&id) else { bad += 1; continue };
                bad += usize::from(t.pending != Some(r));
                t.pending = None;
            }
            LedgerEvent::Dropped { id, r } => {
                bad += usize::from(mode != DataMode::RungsAndLast || !tasks.contains_key(&id) || r == 0);
            }
        }
    }
    bad
}


/// Replays worker occupancy. Returns an error message on the first event
/// that starts work on a busy worker, reports from a job the worker does not
/// hold, or releases a worker twice.
pub fn check_worker_conservation(trace: &EventTrace, n_workers: usize) -> Result<(), String> {
    let mut held: Vec<Option<ConfigId>> = vec![None; n_workers];
    let mut last_t = f64::NEG_INFINITY;
    for (i, e) in trace.events.iter().enumerate() {
        if e.time < last_t {
            return Err(format!("event {i}: time goes backwards"));
        }
        last_t = e.time;
        if e.worker >= n_workers {
            return Err(format!("event {i}: worker {} out of range", e.worker));
        }
        let slot = &mut held[e.worker];
        match e.kind {
            EventKind::Start | EventKind::Promote => {
                if slot.is_some() {
                    return Err(format!("event {i}: worker {} already busy", e.worker));
                }
                *slot = e.config;
            }
            EventKind::EpochReport | EventKind::RungReport => {
                if *slot != e.config {
                    return Err(format!("event {i}: report from a job worker {} does not hold", e.worker));
                }
            }
            k if k.releases_worker() => {
                if *slot == e.config {
                    *slot = None;
                } else if k != EventKind::Stop || held.contains(&e.config) {
                    // a Stop for a config held nowhere terminates a paused config
                    return Err(format!("event {i}: {k:?} for a job worker {} does not hold", e.worker));
                }
            }
            _ => {
                if slot.is_some() {
                    return Err(format!("event {i}: idle event on a busy worker"));
                }
            }
        }
    }
    if held.iter().any(Option::is_some) {
        return Err("a worker is still busy at the end of the trace".into());
    }
    Ok(())
}

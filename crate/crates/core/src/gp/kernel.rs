//! Covariance and mean functions over joint (configuration, resource) inputs.
//!
//! Two families are provided. `MaternJoint` is a Matérn 5/2 ARD kernel over
//! the feature vector concatenated with a log-warped resource. The
//! exponential-decay family models each learning curve as
//!
//! ```text
//! f(x, r) = gamma * exp(-lambda r) + f(x) * (1 - delta * exp(-lambda r))
//! ```
//!
//! with `lambda ~ Gamma(alpha, beta)` integrated out, which gives the mean
//! `gamma k(r) + mu (1 - delta k(r))` and a covariance built from
//! `kappa(u) = beta^alpha / (u + beta)^alpha`. `delta = 0` is the additive
//! model; `delta = 1` pins `f(x, 0) = gamma` regardless of `x`.

use serde::{Deserialize, Serialize};

const SQRT5: f64 = 2.236_067_977_499_79;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelVariant {
    MaternJoint,
    ExpdecayAdditive,
    ExpdecayFixed,
    ExpdecayLearned,
}

impl KernelVariant {
    pub fn is_expdecay(self) -> bool {
        !matches!(self, KernelVariant::MaternJoint)
    }
}

/// Kernel variant plus all hyperparameters. Fields not used by the variant
/// are ignored.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub variant: KernelVariant,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub delta: f64,
    pub noise_variance: f64,
    pub matern_amplitude: f64,
    pub matern_length_scales: Vec<f64>,
    /// Length scale of the warped resource coordinate (`MaternJoint` only).
    pub resource_length_scale: f64,
    pub mean_constant: f64,
    /// Resources are normalized by this value before entering the kernel.
    pub resource_max: f64,
    /// Keep `gamma` out of hyperparameter fitting.
    #[serde(default)]
    pub fixed_gamma: bool,
}

impl KernelSpec {
    pub fn new(variant: KernelVariant, dim: usize, resource_max: f64) -> Self {
        Self {
            variant,
            alpha: 1.0,
            beta: 0.5,
            gamma: 1.0,
            delta: match variant {
                KernelVariant::ExpdecayFixed => 1.0,
                KernelVariant::ExpdecayLearned => 0.5,
                _ => 0.0,
            },
            noise_variance: 1e-3,
            matern_amplitude: 1.0,
            matern_length_scales: vec![1.0; dim],
            resource_length_scale: 1.0,
            mean_constant: 0.0,
            resource_max,
            fixed_gamma: false,
        }
    }

    pub fn dim(&self) -> usize {
        self.matern_length_scales.len()
    }

    /// `delta` as used by the variant: 0 for additive, 1 for fixed.
    pub fn effective_delta(&self) -> f64 {
        match self.variant {
            KernelVariant::MaternJoint | KernelVariant::ExpdecayAdditive => 0.0,
            KernelVariant::ExpdecayFixed => 1.0,
            KernelVariant::ExpdecayLearned => self.delta,
        }
    }

    fn unit_resource(&self, r: f64) -> f64 {
        r / self.resource_max
    }

    fn warp(&self, r: f64) -> f64 {
        if self.resource_max > 1.0 {
            r.ln() / self.resource_max.ln()
        } else {
            0.0
        }
    }
}

/// A GP input: encoded configuration plus resource level.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SurrogatePoint {
    pub x: Vec<f64>,
    pub r: f64,
}

impl SurrogatePoint {
    pub fn new(x: Vec<f64>, r: f64) -> Self {
        Self { x, r }
    }
}

/// Hyperparameters addressable by the fitter and by gradients.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Param {
    Amplitude,
    LengthScale(usize),
    ResourceLengthScale,
    Alpha,
    Beta,
    Gamma,
    Delta,
    MeanConstant,
    Noise,
}

impl Param {
    /// Box constraints; `None` for the unconstrained mean constant.
    pub fn bounds(self) -> Option<(f64, f64)> {
        match self {
            Param::Amplitude => Some((1e-2, 1e2)),
            Param::LengthScale(_) | Param::ResourceLengthScale => Some((0.01, 10.0)),
            Param::Alpha | Param::Beta => Some((1e-3, 1e3)),
            Param::Gamma => Some((0.05, 10.0)),
            Param::Delta => Some((0.0, 1.0)),
            Param::MeanConstant => None,
            Param::Noise => Some((1e-9, 1.0)),
        }
    }
}

impl KernelSpec {
    /// Free hyperparameters of this spec, in gradient order.
    pub fn active_params(&self) -> Vec<Param> {
        let mut out = vec![Param::Amplitude];
        out.extend((0..self.dim()).map(Param::LengthScale));
        if self.variant.is_expdecay() {
            out.extend([Param::Alpha, Param::Beta]);
            if !self.fixed_gamma {
                out.push(Param::Gamma);
            }
            if self.variant == KernelVariant::ExpdecayLearned {
                out.push(Param::Delta);
            }
        } else {
            out.push(Param::ResourceLengthScale);
        }
        out.extend([Param::MeanConstant, Param::Noise]);
        out
    }

    pub fn get(&self, p: Param) -> f64 {
        match p {
            Param::Amplitude => self.matern_amplitude,
            Param::LengthScale(i) => self.matern_length_scales[i],
            Param::ResourceLengthScale => self.resource_length_scale,
            Param::Alpha => self.alpha,
            Param::Beta => self.beta,
            Param::Gamma => self.gamma,
            Param::Delta => self.delta,
            Param::MeanConstant => self.mean_constant,
            Param::Noise => self.noise_variance,
        }
    }

    pub fn set(&mut self, p: Param, v: f64) {
        match p {
            Param::Amplitude => self.matern_amplitude = v,
            Param::LengthScale(i) => self.matern_length_scales[i] = v,
            Param::ResourceLengthScale => self.resource_length_scale = v,
            Param::Alpha => self.alpha = v,
            Param::Beta => self.beta = v,
            Param::Gamma => self.gamma = v,
            Param::Delta => self.delta = v,
            Param::MeanConstant => self.mean_constant = v,
            Param::Noise => self.noise_variance = v,
        }
    }

    /// True when every hyperparameter satisfies its positivity / box constraint.
    pub fn is_valid(&self) -> bool {
        let positive = |v: f64| v.is_finite() && v > 0.0;
        positive(self.alpha)
            && positive(self.beta)
            && positive(self.gamma)
            && (0.0..=1.0).contains(&self.delta)
            && positive(self.noise_variance)
            && positive(self.matern_amplitude)
            && self.matern_length_scales.iter().all(|&l| positive(l))
            && positive(self.resource_length_scale)
            && self.mean_constant.is_finite()
            && positive(self.resource_max)
    }
}

/// `kappa(u) = beta^alpha / (u + beta)^alpha`.
pub fn kappa(u: f64, alpha: f64, beta: f64) -> f64 {
    (beta / (u + beta)).powf(alpha)
}

/// `kappa` and its partial derivatives in `alpha` and `beta`.
fn kappa_grad(u: f64, alpha: f64, beta: f64) -> (f64, f64, f64) {
    let k = kappa(u, alpha, beta);
    let d_alpha = k * (beta.ln() - (u + beta).ln());
    let d_beta = k * alpha * u / (beta * (u + beta));
    (k, d_alpha, d_beta)
}

/// `k~_R(r, r') = kappa(r + r') - kappa(r) kappa(r')` on normalized resources.
pub fn resource_kernel(u: f64, v: f64, alpha: f64, beta: f64) -> f64 {
    kappa(u + v, alpha, beta) - kappa(u, alpha, beta) * kappa(v, alpha, beta)
}

/// Matérn 5/2 ARD.
pub fn matern52(a: &[f64], b: &[f64], length_scales: &[f64], amplitude: f64) -> f64 {
    let d2: f64 = a
        .iter()
        .zip(b)
        .zip(length_scales)
        .map(|((x, y), l)| ((x - y) / l).powi(2))
        .sum();
    let d = d2.sqrt();
    amplitude * (1.0 + SQRT5 * d + 5.0 / 3.0 * d2) * (-SQRT5 * d).exp()
}

fn matern_joint_inputs(p: &SurrogatePoint, spec: &KernelSpec) -> Vec<f64> {
    let mut z = p.x.clone();
    z.push(spec.warp(p.r));
    z
}

pub fn kernel_eval(p1: &SurrogatePoint, p2: &SurrogatePoint, spec: &KernelSpec) -> f64 {
    match spec.variant {
        KernelVariant::MaternJoint => {
            let mut ls = spec.matern_length_scales.clone();
            ls.push(spec.resource_length_scale);
            matern52(
                &matern_joint_inputs(p1, spec),
                &matern_joint_inputs(p2, spec),
                &ls,
                spec.matern_amplitude,
            )
        }
        _ => {
            let delta = spec.effective_delta();
            let (alpha, beta) = (spec.alpha, spec.beta);
            let (u, v) = (spec.unit_resource(p1.r), spec.unit_resource(p2.r));
            let (ku, kv, kuv) = (kappa(u, alpha, beta), kappa(v, alpha, beta), kappa(u + v, alpha, beta));
            let g = spec.gamma - delta * spec.mean_constant;
            let kx = matern52(&p1.x, &p2.x, &spec.matern_length_scales, spec.matern_amplitude);
            g * g * (kuv - ku * kv) + kx * (1.0 - delta * (ku + kv - delta * kuv))
        }
    }
}

pub fn mean_eval(p: &SurrogatePoint, spec: &KernelSpec) -> f64 {
    match spec.variant {
        KernelVariant::MaternJoint => spec.mean_constant,
        _ => {
            let k = kappa(spec.unit_resource(p.r), spec.alpha, spec.beta);
            spec.gamma * k + spec.mean_constant * (1.0 - spec.effective_delta() * k)
        }
    }
}

/// Matérn value and derivatives w.r.t. amplitude and each length scale.
fn matern52_grad(a: &[f64], b: &[f64], ls: &[f64], amp: f64, d_ls: &mut [f64]) -> (f64, f64) {
    let d2: f64 = a.iter().zip(b).zip(ls).map(|((x, y), l)| ((x - y) / l).powi(2)).sum();
    let d = d2.sqrt();
    let e = (-SQRT5 * d).exp();
    let base = (1.0 + SQRT5 * d + 5.0 / 3.0 * d2) * e;
    let c = amp * 5.0 / 3.0 * (1.0 + SQRT5 * d) * e;
    for (i, out) in d_ls.iter_mut().enumerate() {
        let diff = a[i] - b[i];
        *out = c * diff * diff / ls[i].powi(3);
    }
    (amp * base, base)
}

/// Kernel value plus its partial derivatives w.r.t. `params` (written to
/// `grad`). The noise variance does not enter the kernel; its partial is 0.
pub fn kernel_grad(
    p1: &SurrogatePoint,
    p2: &SurrogatePoint,
    spec: &KernelSpec,
    params: &[Param],
    grad: &mut [f64],
) -> f64 {
    let dim = spec.dim();
    let mut d_ls = vec![0.0; dim + 1];
    match spec.variant {
        KernelVariant::MaternJoint => {
            let mut ls = spec.matern_length_scales.clone();
            ls.push(spec.resource_length_scale);
            let (k, d_amp) = matern52_grad(
                &matern_joint_inputs(p1, spec),
                &matern_joint_inputs(p2, spec),
                &ls,
                spec.matern_amplitude,
                &mut d_ls,
            );
            for (g, p) in grad.iter_mut().zip(params) {
                *g = match *p {
                    Param::Amplitude => d_amp,
                    Param::LengthScale(i) => d_ls[i],
                    Param::ResourceLengthScale => d_ls[dim],
                    _ => 0.0,
                };
            }
            k
        }
        _ => {
            let delta = spec.effective_delta();
            let (alpha, beta, mu) = (spec.alpha, spec.beta, spec.mean_constant);
            let (u, v) = (spec.unit_resource(p1.r), spec.unit_resource(p2.r));
            let (ku, ku_a, ku_b) = kappa_grad(u, alpha, beta);
            let (kv, kv_a, kv_b) = kappa_grad(v, alpha, beta);
            let (kuv, kuv_a, kuv_b) = kappa_grad(u + v, alpha, beta);
            let g = spec.gamma - delta * mu;
            let kr = kuv - ku * kv;
            let s = 1.0 - delta * (ku + kv - delta * kuv);
            let (kx, d_amp) =
                matern52_grad(&p1.x, &p2.x, &spec.matern_length_scales, spec.matern_amplitude, &mut d_ls[..dim]);
            for (out, p) in grad.iter_mut().zip(params) {
                *out = match *p {
                    Param::Amplitude => d_amp * s,
                    Param::LengthScale(i) => d_ls[i] * s,
                    Param::Alpha => {
                        g * g * (kuv_a - ku_a * kv - ku * kv_a)
                            - kx * delta * (ku_a + kv_a - delta * kuv_a)
                    }
                    Param::Beta => {
                        g * g * (kuv_b - ku_b * kv - ku * kv_b)
                            - kx * delta * (ku_b + kv_b - delta * kuv_b)
                    }
                    Param::Gamma => 2.0 * g * kr,
                    Param::Delta => -2.0 * g * mu * kr + kx * (2.0 * delta * kuv - ku - kv),
                    Param::MeanConstant => -2.0 * g * delta * kr,
                    Param::ResourceLengthScale | Param::Noise => 0.0,
                };
            }
            g * g * kr + kx * s
        }
    }
}

/// Mean value plus partial derivatives w.r.t. `params`.
pub fn mean_grad(p: &SurrogatePoint, spec: &KernelSpec, params: &[Param], grad: &mut [f64]) -> f64 {
    match spec.variant {
        KernelVariant::MaternJoint => {
            for (out, q) in grad.iter_mut().zip(params) {
                *out = if *q == Param::MeanConstant { 1.0 } else { 0.0 };
            }
            spec.mean_constant
        }
        _ => {
            let delta = spec.effective_delta();
            let mu = spec.mean_constant;
            let (k, k_a, k_b) = kappa_grad(spec.unit_resource(p.r), spec.alpha, spec.beta);
            for (out, q) in grad.iter_mut().zip(params) {
                *out = match *q {
                    Param::Alpha => (spec.gamma - delta * mu) * k_a,
                    Param::Beta => (spec.gamma - delta * mu) * k_b,
                    Param::Gamma => k,
                    Param::Delta => -mu * k,
                    Param::MeanConstant => 1.0 - delta * k,
                    _ => 0.0,
                };
            }
            spec.gamma * k + mu * (1.0 - delta * k)
        }
    }
}

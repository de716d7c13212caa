use nalgebra::{DMatrix, DVector};
use rand::RngCore;
use rand_distr::{Distribution, StandardNormal};

use super::kernel::{kernel_eval, kernel_grad, mean_eval, mean_grad, KernelSpec, Param, SurrogatePoint};
use super::GpError;

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// Relative jitter levels tried (times mean diagonal) when the Cholesky
/// factorization fails.
const JITTER_LEVELS: [f64; 7] = [1e-10, 1e-9, 1e-8, 1e-7, 1e-6, 1e-5, 1e-4];

#[derive(Clone, Debug, PartialEq)]
pub struct Observation {
    pub point: SurrogatePoint,
    pub y: f64,
}

impl Observation {
    pub fn new(x: Vec<f64>, r: f64, y: f64) -> Self {
        Self { point: SurrogatePoint::new(x, r), y }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Prediction {
    /// One posterior mean per target column (fantasy sample).
    pub means: Vec<f64>,
    /// Common posterior variance of the latent function.
    pub variance: f64,
}

impl Prediction {
    pub fn mean(&self) -> f64 {
        self.means.iter().sum::<f64>() / self.means.len() as f64
    }
}

/// Cholesky representation of a GP posterior:
/// `L L^T = K + sigma^2 I` and `P = L^{-1} (Y - mu(X) 1^T)`.
///
/// `Y` has one column per fantasy sample; rows of labeled inputs repeat the
/// observed value across columns.
#[derive(Clone, Debug)]
pub struct PosteriorState {
    chol: DMatrix<f64>,
    solved: DMatrix<f64>,
    targets: DMatrix<f64>,
    inputs: Vec<SurrogatePoint>,
    num_labeled: usize,
    spec: KernelSpec,
    jitter: f64,
}

/// Kernel matrix without the noise term.
pub fn gram_matrix(inputs: &[SurrogatePoint], spec: &KernelSpec) -> DMatrix<f64> {
    let n = inputs.len();
    let mut k = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let v = kernel_eval(&inputs[i], &inputs[j], spec);
            k[(i, j)] = v;
            k[(j, i)] = v;
        }
    }
    k
}

/// Factorizes a symmetric matrix, escalating diagonal jitter on failure.
/// Returns the lower factor and the absolute jitter added.
pub(crate) fn cholesky_with_jitter(mut a: DMatrix<f64>) -> Result<(DMatrix<f64>, f64), GpError> {
    let n = a.nrows();
    if a.iter().any(|v| !v.is_finite()) {
        return Err(GpError::NonFinite);
    }
    if let Some(c) = a.clone().cholesky() {
        return Ok((c.unpack(), 0.0));
    }
    let scale = (a.trace() / n as f64).abs().max(f64::MIN_POSITIVE);
    let mut added = 0.0;
    for level in JITTER_LEVELS {
        let jitter = level * scale;
        for i in 0..n {
            a[(i, i)] += jitter - added;
        }
        added = jitter;
        if let Some(c) = a.clone().cholesky() {
            return Ok((c.unpack(), jitter));
        }
    }
    Err(GpError::IllConditioned { max_jitter: added })
}

fn mean_vector(inputs: &[SurrogatePoint], spec: &KernelSpec) -> DVector<f64> {
    DVector::from_iterator(inputs.len(), inputs.iter().map(|p| mean_eval(p, spec)))
}

fn factorize(inputs: &[SurrogatePoint], spec: &KernelSpec) -> Result<(DMatrix<f64>, f64), GpError> {
    let mut k = gram_matrix(inputs, spec);
    for i in 0..inputs.len() {
        k[(i, i)] += spec.noise_variance;
    }
    cholesky_with_jitter(k)
}

fn check_dims(points: &[SurrogatePoint], spec: &KernelSpec) -> Result<(), GpError> {
    for p in points {
        if p.x.len() != spec.dim() {
            return Err(GpError::DimensionMismatch { expected: spec.dim(), got: p.x.len() });
        }
        if !(p.r.is_finite() && p.r > 0.0) || p.x.iter().any(|v| !v.is_finite()) {
            return Err(GpError::NonFinite);
        }
    }
    Ok(())
}

impl PosteriorState {
    /// Posterior over labeled data only (a single target column).
    pub fn fit(data: &[Observation], spec: &KernelSpec) -> Result<Self, GpError> {
        if data.is_empty() {
            return Err(GpError::EmptyData);
        }
        if data.iter().any(|o| !o.y.is_finite()) {
            return Err(GpError::NonFinite);
        }
        let inputs: Vec<SurrogatePoint> = data.iter().map(|o| o.point.clone()).collect();
        check_dims(&inputs, spec)?;
        let targets = DMatrix::from_iterator(data.len(), 1, data.iter().map(|o| o.y));
        Self::build(inputs, targets, data.len(), spec.clone())
    }

    fn build(
        inputs: Vec<SurrogatePoint>,
        targets: DMatrix<f64>,
        num_labeled: usize,
        spec: KernelSpec,
    ) -> Result<Self, GpError> {
        let (chol, jitter) = factorize(&inputs, &spec)?;
        let mu = mean_vector(&inputs, &spec);
        let mut centered = targets.clone();
        for mut col in centered.column_iter_mut() {
            col -= &mu;
        }
        let solved = chol.solve_lower_triangular(&centered).ok_or(GpError::NonFinite)?;
        Ok(Self { chol, solved, targets, inputs, num_labeled, spec, jitter })
    }

    pub fn spec(&self) -> &KernelSpec {
        &self.spec
    }

    pub fn inputs(&self) -> &[SurrogatePoint] {
        &self.inputs
    }

    pub fn cholesky_factor(&self) -> &DMatrix<f64> {
        &self.chol
    }

    pub fn solved_targets(&self) -> &DMatrix<f64> {
        &self.solved
    }

    pub fn targets(&self) -> &DMatrix<f64> {
        &self.targets
    }

    pub fn num_labeled(&self) -> usize {
        self.num_labeled
    }

    pub fn num_samples(&self) -> usize {
        self.solved.ncols()
    }

    /// Diagonal jitter added on top of the noise variance (0 when the plain
    /// factorization succeeded).
    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    pub fn predict(&self, query: &SurrogatePoint) -> Prediction {
        self.predict_batch(std::slice::from_ref(query)).pop().expect("one query")
    }

    pub fn predict_batch(&self, queries: &[SurrogatePoint]) -> Vec<Prediction> {
        let n = self.inputs.len();
        let mut cross = DMatrix::zeros(n, queries.len());
        for (j, q) in queries.iter().enumerate() {
            for (i, x) in self.inputs.iter().enumerate() {
                cross[(i, j)] = kernel_eval(x, q, &self.spec);
            }
        }
        let v = self.chol.solve_lower_triangular(&cross).expect("factor has positive diagonal");
        let means = v.transpose() * &self.solved;
        queries
            .iter()
            .enumerate()
            .map(|(j, q)| {
                let prior_mean = mean_eval(q, &self.spec);
                let col = v.column(j);
                let variance = (kernel_eval(q, q, &self.spec) - col.dot(&col)).max(0.0);
                Prediction {
                    means: means.row(j).iter().map(|m| prior_mean + m).collect(),
                    variance,
                }
            })
            .collect()
    }

    /// Joint predictive mean and covariance (including observation noise)
    /// of noisy outcomes at `points`, using the first target column.
    fn predictive_joint(&self, points: &[SurrogatePoint]) -> (DVector<f64>, DMatrix<f64>) {
        let n = self.inputs.len();
        let p = points.len();
        let mut cross = DMatrix::zeros(n, p);
        for (j, q) in points.iter().enumerate() {
            for (i, x) in self.inputs.iter().enumerate() {
                cross[(i, j)] = kernel_eval(x, q, &self.spec);
            }
        }
        let v = self.chol.solve_lower_triangular(&cross).expect("positive diagonal");
        let mean = mean_vector(points, &self.spec) + v.transpose() * self.solved.column(0);
        let mut cov = gram_matrix(points, &self.spec) - v.transpose() * &v;
        for i in 0..p {
            cov[(i, i)] += self.spec.noise_variance;
        }
        let cov = (&cov + cov.transpose()) * 0.5;
        (mean, cov)
    }

    /// Draws `m` joint samples of the pending outcomes from the posterior
    /// predictive and returns the posterior over labeled plus pending inputs
    /// with an `n x m` target matrix. The factor does not depend on the
    /// sampled values, so all columns share the same predictive variances.
    pub fn fantasize(
        &self,
        pending: &[SurrogatePoint],
        m: usize,
        rng: &mut dyn RngCore,
    ) -> Result<Self, GpError> {
        let m = m.max(1);
        let labeled_y: Vec<f64> = self.targets.column(0).iter().copied().take(self.num_labeled).collect();
        if pending.is_empty() && self.num_labeled < self.inputs.len() {
            let targets = DMatrix::from_fn(self.num_labeled, m, |i, _| labeled_y[i]);
            let inputs = self.inputs[..self.num_labeled].to_vec();
            return Self::build(inputs, targets, self.num_labeled, self.spec.clone());
        }
        if pending.is_empty() {
            let targets = DMatrix::from_fn(self.num_labeled, m, |i, _| labeled_y[i]);
            let solved = DMatrix::from_fn(self.solved.nrows(), m, |i, _| self.solved[(i, 0)]);
            return Ok(Self { targets, solved, ..self.clone() });
        }
        check_dims(pending, &self.spec)?;
        let (mean, cov) = self.predictive_joint(pending);
        let (chol, _) = cholesky_with_jitter(cov)?;
        let z = DMatrix::from_fn(pending.len(), m, |_, _| {
            <StandardNormal as Distribution<f64>>::sample(&StandardNormal, rng)
        });
        let samples = chol * z;
        let n = self.num_labeled;
        let targets = DMatrix::from_fn(n + pending.len(), m, |i, j| {
            if i < n {
                labeled_y[i]
            } else {
                mean[i - n] + samples[(i - n, j)]
            }
        });
        let mut inputs = self.inputs[..n].to_vec();
        inputs.extend_from_slice(pending);
        Self::build(inputs, targets, n, self.spec.clone())
    }

    /// Gaussian log evidence of the first target column:
    /// `-1/2 |p|^2 - sum log diag(L) - n/2 log 2 pi`.
    pub fn log_marginal_likelihood(&self) -> f64 {
        let n = self.inputs.len() as f64;
        let p = self.solved.column(0);
        -0.5 * p.dot(&p) - self.chol.diagonal().iter().map(|d| d.ln()).sum::<f64>() - 0.5 * n * LN_2PI
    }
}

pub fn log_marginal_likelihood(data: &[Observation], spec: &KernelSpec) -> Result<f64, GpError> {
    Ok(PosteriorState::fit(data, spec)?.log_marginal_likelihood())
}

/// Log evidence and its gradient w.r.t. `params` (natural parameterization).
pub fn log_marginal_likelihood_grad(
    data: &[Observation],
    spec: &KernelSpec,
    params: &[Param],
) -> Result<(f64, Vec<f64>), GpError> {
    let post = PosteriorState::fit(data, spec)?;
    let lml = post.log_marginal_likelihood();
    let n = data.len();
    let l = &post.chol;
    // a = K^{-1}(y - mu), Kinv = L^{-T} L^{-1}
    let a = l
        .transpose()
        .solve_upper_triangular(&post.solved.column(0).into_owned())
        .ok_or(GpError::NonFinite)?;
    let l_inv = l.solve_lower_triangular(&DMatrix::identity(n, n)).ok_or(GpError::NonFinite)?;
    let k_inv = l_inv.transpose() * &l_inv;
    let np = params.len();
    let mut grad = vec![0.0; np];
    let mut kg = vec![0.0; np];
    for i in 0..n {
        for j in 0..=i {
            let w = a[i] * a[j] - k_inv[(i, j)];
            kernel_grad(&post.inputs[i], &post.inputs[j], spec, params, &mut kg);
            let factor = if i == j { 0.5 * w } else { w };
            for (g, d) in grad.iter_mut().zip(&kg) {
                *g += factor * d;
            }
        }
    }
    for i in 0..n {
        mean_grad(&post.inputs[i], spec, params, &mut kg);
        for (g, d) in grad.iter_mut().zip(&kg) {
            *g += a[i] * d;
        }
    }
    if let Some(idx) = params.iter().position(|p| *p == Param::Noise) {
        grad[idx] = 0.5 * (a.dot(&a) - k_inv.trace());
    }
    Ok((lml, grad))
}

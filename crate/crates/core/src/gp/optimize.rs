//! Limited-memory BFGS with a backtracking Armijo line search.

use std::collections::VecDeque;

#[derive(Clone, Copy, Debug)]
pub struct LbfgsOptions {
    pub max_iters: usize,
    pub history: usize,
    pub grad_tol: f64,
    pub rel_tol: f64,
}

impl Default for LbfgsOptions {
    fn default() -> Self {
        Self { max_iters: 50, history: 7, grad_tol: 1e-6, rel_tol: 1e-10 }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Minimizes `f`, which returns `None` where the objective is undefined
/// (treated as +inf). Returns the best point and value seen, or `None` when
/// `f(x0)` itself is undefined.
pub fn lbfgs_minimize<F>(mut f: F, x0: Vec<f64>, opts: LbfgsOptions) -> Option<(Vec<f64>, f64)>
where
    F: FnMut(&[f64]) -> Option<(f64, Vec<f64>)>,
{
    let valid = |v: &(f64, Vec<f64>)| v.0.is_finite() && v.1.iter().all(|g| g.is_finite());
    let (mut fx, mut gx) = f(&x0).filter(valid)?;
    let mut x = x0;
    let mut hist: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::new();

    for iter in 0..opts.max_iters {
        if gx.iter().all(|g| g.abs() < opts.grad_tol) {
            break;
        }
        // two-loop recursion
        let mut q = gx.clone();
        let mut alphas = Vec::with_capacity(hist.len());
        for (s, y, rho) in hist.iter().rev() {
            let a = rho * dot(s, &q);
            q.iter_mut().zip(y).for_each(|(qi, yi)| *qi -= a * yi);
            alphas.push(a);
        }
        if let Some((s, y, _)) = hist.back() {
            let gamma = dot(s, y) / dot(y, y);
            q.iter_mut().for_each(|qi| *qi *= gamma);
        } else {
            let norm = dot(&gx, &gx).sqrt().max(1.0);
            q.iter_mut().for_each(|qi| *qi /= norm);
        }
        for ((s, y, rho), a) in hist.iter().zip(alphas.iter().rev()) {
            let b = rho * dot(y, &q);
            q.iter_mut().zip(s).for_each(|(qi, si)| *qi += (a - b) * si);
        }
        let mut dir: Vec<f64> = q.iter().map(|v| -v).collect();
        let mut slope = dot(&gx, &dir);
        if slope >= 0.0 {
            hist.clear();
            let norm = dot(&gx, &gx).sqrt().max(1.0);
            dir = gx.iter().map(|g| -g / norm).collect();
            slope = dot(&gx, &dir);
        }

        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..40 {
            let trial: Vec<f64> = x.iter().zip(&dir).map(|(xi, di)| xi + step * di).collect();
            if let Some(v) = f(&trial).filter(valid) {
                if v.0 <= fx + 1e-4 * step * slope {
                    accepted = Some((trial, v));
                    break;
                }
            }
            step *= 0.5;
        }
        let Some((x_new, (f_new, g_new))) = accepted else { break };
        let s: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = g_new.iter().zip(&gx).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 {
            hist.push_back((s, y, 1.0 / sy));
            if hist.len() > opts.history {
                hist.pop_front();
            }
        }
        let converged = (fx - f_new).abs() <= opts.rel_tol * fx.abs().max(1.0) && iter > 0;
        x = x_new;
        fx = f_new;
        gx = g_new;
        if converged {
            break;
        }
    }
    Some((x, fx))
}

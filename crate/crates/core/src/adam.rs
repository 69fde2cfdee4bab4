//! Adam with step rejection.
//!
//! The first [`WARMUP_ITERS`] iterations are plain Adam; the best iterate seen
//! is restored at the end of that phase. Afterwards a proposal that raises either the
//! penalized total or the bare objective is rejected and the step multiplier
//! halves. When the
//! multiplier has dropped to 1/1024 the moments are cleared, so the next try is
//! a fresh sign-like step that points downhill. Accepted steps double the
//! multiplier back toward 1. The returned iterate is never worse than the
//! starting point.

use serde::{Deserialize, Serialize};

use crate::error::{NaoError, Result};
use crate::vector::inf_norm;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamSettings {
    pub step_size: f64,
    pub max_iters: usize,
    /// Stop once the gradient infinity-norm falls to this value.
    pub grad_tol: f64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_eps: f64,
}

impl Default for AdamSettings {
    fn default() -> Self {
        AdamSettings {
            step_size: 1e-2,
            max_iters: 2000,
            grad_tol: 1e-6,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_eps: 1e-8,
        }
    }
}

impl AdamSettings {
    pub fn validate(&self) -> Result<()> {
        let ok = self.step_size.is_finite()
            && self.step_size > 0.0
            && self.max_iters >= 1
            && self.grad_tol.is_finite()
            && self.grad_tol > 0.0
            && (0.0..1.0).contains(&self.adam_beta1)
            && (0.0..1.0).contains(&self.adam_beta2)
            && self.adam_eps > 0.0;
        if ok {
            Ok(())
        } else {
            Err(NaoError::invalid(format!("invalid optimizer settings: {self:?}")))
        }
    }
}

/// Objective and penalty at one parameter vector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    pub objective: f64,
    pub penalty: f64,
}

impl Evaluation {
    pub fn total(&self) -> f64 {
        self.objective + self.penalty
    }
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub params: Vec<f64>,
    pub objective_trace: Vec<f64>,
    pub penalty_trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub grad_inf_norm: f64,
    pub rejected_steps: usize,
}

const MIN_STEP_MULTIPLIER: f64 = 1e-12;
/// Plain Adam steps taken before rejection starts.
pub const WARMUP_ITERS: usize = 50;
/// Once ten halvings have not produced an acceptable step the moments are
/// cleared.
const RESET_MULTIPLIER: f64 = 1.0 / 1024.0;

/// Minimizes `objective + penalty` starting at `x0`.
///
/// `groups` splits the coordinates into consecutive runs that share one
/// second-moment estimate; a run of length `d` holding one point steps along
/// that point's own gradient direction instead of a per-coordinate rescaling
/// of it. All-ones groups give ordinary Adam.
///
/// `eval` writes the full gradient into its second argument and returns the
/// two parts of the loss. Iteration stops when the gradient infinity-norm is at
/// most `grad_tol`, when `max_iters` is reached, or when rejected steps shrink
/// the multiplier below `1e-12`.
pub fn minimize<F>(settings: &AdamSettings, x0: Vec<f64>, groups: &[usize], mut eval: F) -> Trajectory
where
    F: FnMut(&[f64], &mut [f64]) -> Evaluation,
{
    assert!(
        groups.iter().all(|&g| g > 0) && groups.iter().sum::<usize>() == x0.len(),
        "groups must be positive and cover the parameters"
    );
    let len = x0.len();
    let blocks = groups.len();
    let mut x = x0;
    let mut grad = vec![0.0; len];
    let mut current = eval(&x, &mut grad);

    let mut m = vec![0.0; len];
    let mut v = vec![0.0; blocks];
    let mut m_next = vec![0.0; len];
    let mut v_next = vec![0.0; blocks];
    let mut proposal = vec![0.0; len];
    let mut grad_next = vec![0.0; len];
    let mut t = 0i32;
    let mut multiplier = 1.0;

    let mut objective_trace = vec![current.objective];
    let mut penalty_trace = vec![current.penalty];
    let mut iterations = 0;
    let mut rejected_steps = 0;
    let mut converged = false;
    let mut grad_inf = inf_norm(&grad);
    let mut best = (x.clone(), current, grad.clone());

    let (b1, b2) = (settings.adam_beta1, settings.adam_beta2);
    while iterations < settings.max_iters {
        if grad_inf <= settings.grad_tol {
            converged = true;
            break;
        }
        let step = t + 1;
        let bias1 = 1.0 - b1.powi(step);
        let bias2 = 1.0 - b2.powi(step);
        let lr = multiplier * settings.step_size;
        let mut start = 0;
        for (b, &size) in groups.iter().enumerate() {
            let range = start..start + size;
            start += size;
            let mean_sq = grad[range.clone()].iter().map(|g| g * g).sum::<f64>() / size as f64;
            let vb = b2 * v[b] + (1.0 - b2) * mean_sq;
            v_next[b] = vb;
            let denom = (vb / bias2).sqrt() + settings.adam_eps;
            for i in range {
                let mi = b1 * m[i] + (1.0 - b1) * grad[i];
                m_next[i] = mi;
                proposal[i] = x[i] - lr * (mi / bias1) / denom;
            }
        }
        let candidate = eval(&proposal, &mut grad_next);
        iterations += 1;
        if iterations <= WARMUP_ITERS {
            if candidate.total().is_finite() {
                std::mem::swap(&mut x, &mut proposal);
                std::mem::swap(&mut grad, &mut grad_next);
                std::mem::swap(&mut m, &mut m_next);
                std::mem::swap(&mut v, &mut v_next);
                t = step;
                current = candidate;
                grad_inf = inf_norm(&grad);
                if current.total() < best.1.total() {
                    best = (x.clone(), current, grad.clone());
                }
            } else {
                rejected_steps += 1;
                multiplier *= 0.5;
            }
            if iterations == WARMUP_ITERS && best.1.total() < current.total() {
                x.copy_from_slice(&best.0);
                grad.copy_from_slice(&best.2);
                current = best.1;
                grad_inf = inf_norm(&grad);
                m.iter_mut().for_each(|e| *e = 0.0);
                v.iter_mut().for_each(|e| *e = 0.0);
                t = 0;
            }
        } else if candidate.total().is_finite()
            && candidate.total() <= current.total()
            && candidate.objective <= current.objective
        {
            std::mem::swap(&mut x, &mut proposal);
            std::mem::swap(&mut grad, &mut grad_next);
            std::mem::swap(&mut m, &mut m_next);
            std::mem::swap(&mut v, &mut v_next);
            t = step;
            current = candidate;
            grad_inf = inf_norm(&grad);
            multiplier = (multiplier * 2.0).min(1.0);
        } else {
            rejected_steps += 1;
            if t > 0 && multiplier <= RESET_MULTIPLIER {
                m.iter_mut().for_each(|e| *e = 0.0);
                v.iter_mut().for_each(|e| *e = 0.0);
                t = 0;
            } else {
                multiplier *= 0.5;
            }
        }
        objective_trace.push(current.objective);
        penalty_trace.push(current.penalty);
        if multiplier < MIN_STEP_MULTIPLIER {
            break;
        }
    }
    if !converged && grad_inf <= settings.grad_tol {
        converged = true;
    }

    Trajectory {
        params: x,
        objective_trace,
        penalty_trace,
        iterations,
        converged,
        grad_inf_norm: grad_inf,
        rejected_steps,
    }
}

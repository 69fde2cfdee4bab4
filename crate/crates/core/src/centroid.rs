//! Fréchet-mean centroids under the prior-induced distance.
//!
//! The centroid `c` and `k` piecewise-linear paths `c → z^l` are optimized
//! jointly: one parameter vector holds `c` followed by the interior points of
//! every path, and the loss is
//! `W(c) + Σ_l Σ_i W(m^l_i)·L^l_i + α·Σ_l Σ_i ReLU(L^l_i − δ_l)`.
//! The leading `W(c)` term can be switched off.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::adam::{self, AdamSettings, Evaluation};
use crate::baselines::euclidean_centroid;
use crate::error::{NaoError, Result};
use crate::path::{self, chain_eval, OptimReport, PathConfig, PiecewisePath};
use crate::prior::{rescale_to_norm, PriorSpec, SeedPoint};
use crate::rng::RngState;
use crate::vector;

/// Initial centroids closer to the origin than this fraction of the mode
/// radius are moved out to the mode sphere.
pub const NEAR_ORIGIN_FRACTION: f64 = 1e-3;

/// Interior path points start this fraction of the mode radius away from the
/// straight line, in a direction drawn from a fixed seed.
pub const INIT_JITTER: f64 = 1e-6;
const INIT_JITTER_SEED: u64 = 0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CentroidDelta {
    /// `δ_l = ‖z^l − c_init‖ / n`, fixed for the whole run. A seed equal to
    /// `c_init` gets `δ = 0`, so its whole path length is penalized.
    Auto,
    PerPath(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CentroidProblem {
    pub seeds: Vec<SeedPoint>,
    pub per_path_n: usize,
    pub delta: CentroidDelta,
    /// Include the `−ln P(c)` term of the centroid itself.
    pub centroid_prior: bool,
    pub alpha: f64,
    #[serde(flatten)]
    pub optimizer: AdamSettings,
}

impl CentroidProblem {
    pub fn new(seeds: Vec<SeedPoint>) -> Self {
        let defaults = PathConfig::default();
        CentroidProblem {
            seeds,
            per_path_n: defaults.n,
            delta: CentroidDelta::Auto,
            centroid_prior: true,
            alpha: defaults.alpha,
            optimizer: defaults.optimizer,
        }
    }

    /// Path settings with the same `n`, `α` and optimizer, for re-optimizing
    /// paths to a fixed centroid.
    pub fn path_config(&self) -> PathConfig {
        PathConfig {
            n: self.per_path_n,
            delta: path::Delta::Auto,
            alpha: self.alpha,
            optimizer: self.optimizer,
        }
    }
}

#[derive(Debug, Clone)]
pub struct CentroidResult {
    pub centroid: SeedPoint,
    pub initial_centroid: SeedPoint,
    pub paths: Vec<PiecewisePath>,
    pub deltas: Vec<f64>,
    /// `max_i L^l_i − δ_l` for each path.
    pub path_violations: Vec<f64>,
    pub report: OptimReport,
}

/// `W(c) + Σ_l Σ_i W(m^l_i)·L^l_i`, without penalties. Every path must start
/// exactly at `c`.
pub fn centroid_objective(
    spec: &PriorSpec,
    c: &SeedPoint,
    paths: &[PiecewisePath],
    centroid_prior: bool,
) -> Result<f64> {
    spec.check_dim(c)?;
    let mut total = if centroid_prior {
        spec.nll_at_radius(c.norm())
    } else {
        0.0
    };
    for (l, p) in paths.iter().enumerate() {
        if p.dim() != c.dim() || p.point(0) != c.as_slice() {
            return Err(NaoError::invalid(format!("path {l} is not anchored at the centroid")));
        }
        total += path::path_objective(spec, p)?;
    }
    Ok(total)
}

/// Seed indices sorted lexicographically by component. The optimizer walks
/// seeds in this order so a permuted input gives bit-identical output.
fn canonical_order(seeds: &[SeedPoint]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..seeds.len()).collect();
    order.sort_by(|&a, &b| {
        let (x, y) = (seeds[a].as_slice(), seeds[b].as_slice());
        x.iter()
            .zip(y)
            .map(|(p, q)| p.total_cmp(q))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    order
}

/// Starting centroid: the Euclidean mean, moved to the mode sphere along the
/// first seed's direction when the mean sits near the origin.
pub fn initial_centroid(spec: &PriorSpec, seeds: &[SeedPoint]) -> Result<SeedPoint> {
    let sorted: Vec<SeedPoint> = canonical_order(seeds).into_iter().map(|i| seeds[i].clone()).collect();
    let mean = euclidean_centroid(&sorted)?;
    if mean.norm() < NEAR_ORIGIN_FRACTION * spec.mode_radius() {
        return rescale_to_norm(&seeds[0], spec.mode_radius());
    }
    Ok(mean)
}

struct PathWork {
    seed: Vec<f64>,
    delta: f64,
    buffer: Vec<f64>,
    grad: Vec<f64>,
    eval: Evaluation,
}

pub fn optimize_centroid(spec: &PriorSpec, problem: &CentroidProblem) -> Result<CentroidResult> {
    let seeds = &problem.seeds;
    if seeds.is_empty() {
        return Err(NaoError::invalid("centroid needs at least one seed"));
    }
    for s in seeds {
        spec.check_dim(s)?;
        if s.norm() == 0.0 {
            return Err(NaoError::DegenerateOrigin("seed at the origin".into()));
        }
    }
    let n = problem.per_path_n;
    if n == 0 {
        return Err(NaoError::invalid("per_path_n must be >= 1"));
    }
    if !(problem.alpha >= 0.0 && problem.alpha.is_finite()) {
        return Err(NaoError::invalid("alpha must be finite and >= 0"));
    }
    problem.optimizer.validate()?;

    let d = spec.dim();
    let k = seeds.len();
    let c0 = initial_centroid(spec, seeds)?;
    let order = canonical_order(seeds);
    let deltas: Vec<f64> = match &problem.delta {
        CentroidDelta::Auto => seeds
            .iter()
            .map(|s| vector::distance(s.as_slice(), c0.as_slice()) / n as f64)
            .collect(),
        CentroidDelta::PerPath(v) => {
            if v.len() != k || v.iter().any(|x| x.is_nan() || *x <= 0.0) {
                return Err(NaoError::invalid("need one positive delta per seed"));
            }
            v.clone()
        }
    };

    let interior = (n - 1) * d;
    let mut params = Vec::with_capacity(d + k * interior);
    params.extend_from_slice(c0.as_slice());
    for &i in &order {
        let line = path::linear_init(&c0, &seeds[i], n)?;
        params.extend_from_slice(&line.as_flat()[d..n * d]);
    }
    // Symmetric seed sets (an antipodal pair, say) put every straight path on
    // a saddle that exact gradients never leave. A fixed tiny offset breaks
    // the tie without touching the centroid or the endpoints.
    let mut jitter = RngState::new(INIT_JITTER_SEED);
    let scale = INIT_JITTER * spec.mode_radius() / (d as f64).sqrt();
    for x in params[d..].iter_mut() {
        *x += scale * jitter.standard_normal();
    }

    let mut work: Vec<PathWork> = order
        .iter()
        .map(|&i| PathWork {
            seed: seeds[i].as_slice().to_vec(),
            delta: deltas[i],
            buffer: vec![0.0; (n + 1) * d],
            grad: vec![0.0; (n + 1) * d],
            eval: Evaluation {
                objective: 0.0,
                penalty: 0.0,
            },
        })
        .collect();

    let alpha = problem.alpha;
    let use_prior = problem.centroid_prior;
    let mut evaluate = |params: &[f64], grad: &mut [f64]| -> Evaluation {
        let c = &params[..d];
        work.par_iter_mut().enumerate().for_each(|(l, w)| {
            w.buffer[..d].copy_from_slice(c);
            w.buffer[d..n * d].copy_from_slice(&params[d + l * interior..d + (l + 1) * interior]);
            w.buffer[n * d..].copy_from_slice(&w.seed);
            w.grad.fill(0.0);
            w.eval = chain_eval(spec, d, &w.buffer, w.delta, alpha, Some(&mut w.grad));
        });
        // Reduce in a fixed order so results do not depend on scheduling.
        let mut objective = 0.0;
        let mut penalty = 0.0;
        let (gc, gi) = grad.split_at_mut(d);
        if use_prior {
            let r = vector::norm(c);
            objective += spec.weight(r);
            let s = spec.weight_gradient_scale(r);
            for (g, x) in gc.iter_mut().zip(c) {
                *g = s * x;
            }
        } else {
            gc.fill(0.0);
        }
        for (l, w) in work.iter().enumerate() {
            objective += w.eval.objective;
            penalty += w.eval.penalty;
            for (g, x) in gc.iter_mut().zip(&w.grad[..d]) {
                *g += x;
            }
            gi[l * interior..(l + 1) * interior].copy_from_slice(&w.grad[d..n * d]);
        }
        Evaluation { objective, penalty }
    };

    let mut scratch = vec![0.0; params.len()];
    let start = evaluate(&params, &mut scratch);
    if !start.total().is_finite() {
        return Err(NaoError::DegenerateOrigin(
            "objective is not finite at initialization".into(),
        ));
    }
    // Per-point moments: coordinate-wise scaling rotates the centroid's
    // direction and it never settles on the mode sphere.
    let groups = vec![d; params.len() / d];
    let trajectory = adam::minimize(&problem.optimizer, params, &groups, evaluate);

    let centroid = SeedPoint::from_trusted(trajectory.params[..d].to_vec());
    let mut slot = vec![0; k];
    for (l, &i) in order.iter().enumerate() {
        slot[i] = l;
    }
    let paths: Vec<PiecewisePath> = seeds
        .iter()
        .zip(&slot)
        .map(|(s, &l)| {
            let mut data = Vec::with_capacity((n + 1) * d);
            data.extend_from_slice(centroid.as_slice());
            data.extend_from_slice(&trajectory.params[d + l * interior..d + (l + 1) * interior]);
            data.extend_from_slice(s.as_slice());
            PiecewisePath::from_flat(d, data)
        })
        .collect();
    let path_violations: Vec<f64> = paths
        .iter()
        .zip(&deltas)
        .map(|(p, &delta)| p.max_segment_violation(delta))
        .collect();
    let report = OptimReport {
        final_objective: *trajectory.objective_trace.last().expect("trace is never empty"),
        final_penalty: *trajectory.penalty_trace.last().expect("trace is never empty"),
        max_segment_violation: path_violations.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        delta: deltas.iter().copied().fold(f64::INFINITY, f64::min),
        iterations_used: trajectory.iterations,
        rejected_steps: trajectory.rejected_steps,
        converged: trajectory.converged,
        grad_inf_norm: trajectory.grad_inf_norm,
        objective_trace: trajectory.objective_trace,
        penalty_trace: trajectory.penalty_trace,
    };
    Ok(CentroidResult {
        centroid,
        initial_centroid: c0,
        paths,
        deltas,
        path_violations,
        report,
    })
}

/// Joint objective at a fixed centroid: paths to every seed are optimized
/// independently (δ resolved against `c`) and their objectives summed with
/// `W(c)`.
pub fn fixed_centroid_objective(
    spec: &PriorSpec,
    c: &SeedPoint,
    seeds: &[SeedPoint],
    cfg: &PathConfig,
    centroid_prior: bool,
) -> Result<(f64, Vec<PiecewisePath>)> {
    let mut paths = Vec::with_capacity(seeds.len());
    for s in seeds {
        let (p, _) = path::optimize_path(spec, c, s, cfg)?;
        paths.push(p);
    }
    let total = centroid_objective(spec, c, &paths, centroid_prior)?;
    Ok((total, paths))
}

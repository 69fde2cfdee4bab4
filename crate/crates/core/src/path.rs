//! Likelihood-maximizing piecewise-linear paths between two seeds.
//!
//! A path `x_0 … x_n` with fixed endpoints is scored by the midpoint Riemann
//! sum `Σ W((x_i + x_{i−1})/2)·‖x_i − x_{i−1}‖` of the prior weight `W`.
//! The segment cap `‖x_i − x_{i−1}‖ ≤ δ` is enforced softly through
//! `α·Σ ReLU(‖x_i − x_{i−1}‖ − δ)`, and the interior points are optimized
//! with [`adam::minimize`](crate::adam::minimize) starting from the straight line.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::adam::{self, AdamSettings, Evaluation};
use crate::error::{NaoError, Result};
use crate::prior::{PriorSpec, SeedPoint};
use crate::vector;

/// Points of a piecewise-linear path, stored contiguously (row-major).
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewisePath {
    dim: usize,
    data: Vec<f64>,
}

impl PiecewisePath {
    pub fn from_points(points: &[SeedPoint]) -> Result<Self> {
        if points.len() < 2 {
            return Err(NaoError::invalid("a path needs at least two points"));
        }
        let dim = points[0].dim();
        if points.iter().any(|p| p.dim() != dim) {
            return Err(NaoError::invalid("path points must share one dimension"));
        }
        let data = points.iter().flat_map(|p| p.as_slice().iter().copied()).collect();
        Ok(PiecewisePath { dim, data })
    }

    pub(crate) fn from_flat(dim: usize, data: Vec<f64>) -> Self {
        debug_assert!(dim > 0 && data.len().is_multiple_of(dim) && data.len() >= 2 * dim);
        PiecewisePath { dim, data }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of points, `n + 1`.
    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// Number of segments `n`.
    pub fn segments(&self) -> usize {
        self.len() - 1
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> impl DoubleEndedIterator<Item = &[f64]> + ExactSizeIterator {
        self.data.chunks_exact(self.dim)
    }

    pub fn to_seed_points(&self) -> Vec<SeedPoint> {
        self.points().map(|p| SeedPoint::from_trusted(p.to_vec())).collect()
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.data
    }

    pub fn segment_lengths(&self) -> Vec<f64> {
        (1..self.len())
            .map(|i| vector::distance(self.point(i - 1), self.point(i)))
            .collect()
    }

    pub fn arc_length(&self) -> f64 {
        self.segment_lengths().iter().sum()
    }

    pub fn point_norms(&self) -> Vec<f64> {
        self.points().map(vector::norm).collect()
    }

    /// `W` at every path point (endpoints included).
    pub fn point_nll(&self, spec: &PriorSpec) -> Vec<f64> {
        self.points().map(|p| spec.nll_at_radius(vector::norm(p))).collect()
    }

    pub fn mean_point_nll(&self, spec: &PriorSpec) -> f64 {
        let w = self.point_nll(spec);
        w.iter().sum::<f64>() / w.len() as f64
    }

    /// `max_i ‖x_i − x_{i−1}‖ − δ`; negative when every segment has slack.
    pub fn max_segment_violation(&self, delta: f64) -> f64 {
        self.segment_lengths().into_iter().fold(f64::NEG_INFINITY, f64::max) - delta
    }
}

/// Segment cap δ.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Delta {
    /// `‖z1 − z2‖ / n`
    #[default]
    Auto,
    Value(f64),
}

impl Delta {
    pub fn resolve(&self, z1: &[f64], z2: &[f64], n: usize) -> f64 {
        match *self {
            Delta::Auto => vector::distance(z1, z2) / n as f64,
            Delta::Value(v) => v,
        }
    }
}

impl fmt::Display for Delta {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Delta::Auto => f.write_str("auto"),
            Delta::Value(v) if v.is_infinite() => f.write_str("inf"),
            Delta::Value(v) => write!(f, "{v}"),
        }
    }
}

impl FromStr for Delta {
    type Err = NaoError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "auto" | "AUTO" => Ok(Delta::Auto),
            "inf" | "infinity" => Ok(Delta::Value(f64::INFINITY)),
            other => match other.parse::<f64>() {
                Ok(v) if v > 0.0 && !v.is_nan() => Ok(Delta::Value(v)),
                _ => Err(NaoError::invalid(format!(
                    "delta must be 'auto' or a positive number, got {s:?}"
                ))),
            },
        }
    }
}

impl Serialize for Delta {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Delta::Value(v) if v.is_finite() => s.serialize_f64(*v),
            _ => s.serialize_str(&self.to_string()),
        }
    }
}

impl<'de> Deserialize<'de> for Delta {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Num(f64),
            Text(String),
        }
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(Delta::Value(v)),
            Repr::Text(t) => t.parse().map_err(serde::de::Error::custom),
        }
    }
}

/// Default penalty weight. Small next to the minimum of `W` (about 0.5 to
/// 0.6 for any `d`), so paths may bend away from the chord; an automatic `δ`
/// leaves no slack for that.
pub const DEFAULT_ALPHA: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathConfig {
    /// Number of segments; the path has `n + 1` points.
    pub n: usize,
    pub delta: Delta,
    /// Weight of the segment-cap penalty.
    pub alpha: f64,
    #[serde(flatten)]
    pub optimizer: AdamSettings,
}

impl Default for PathConfig {
    fn default() -> Self {
        PathConfig {
            n: 10,
            delta: Delta::Auto,
            alpha: DEFAULT_ALPHA,
            optimizer: AdamSettings::default(),
        }
    }
}

impl PathConfig {
    pub fn with_n(n: usize) -> Self {
        PathConfig {
            n,
            ..PathConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(NaoError::invalid("n must be >= 1"));
        }
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return Err(NaoError::invalid(format!(
                "alpha must be finite and >= 0, got {}",
                self.alpha
            )));
        }
        if let Delta::Value(v) = self.delta {
            if v.is_nan() || v <= 0.0 {
                return Err(NaoError::invalid(format!("delta must be > 0, got {v}")));
            }
        }
        self.optimizer.validate()
    }
}

/// Outcome of a path or centroid optimization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimReport {
    /// Unpenalized objective of the accepted iterate, one entry per iteration
    /// plus the starting value.
    pub objective_trace: Vec<f64>,
    pub penalty_trace: Vec<f64>,
    /// Last entry of `objective_trace`; the distance estimate for a path.
    pub final_objective: f64,
    pub final_penalty: f64,
    pub max_segment_violation: f64,
    pub delta: f64,
    pub iterations_used: usize,
    pub rejected_steps: usize,
    pub converged: bool,
    pub grad_inf_norm: f64,
}

impl OptimReport {
    pub(crate) fn trivial(objective: f64, delta: f64, violation: f64) -> Self {
        OptimReport {
            objective_trace: vec![objective],
            penalty_trace: vec![0.0],
            final_objective: objective,
            final_penalty: 0.0,
            max_segment_violation: violation,
            delta,
            iterations_used: 0,
            rejected_steps: 0,
            converged: true,
            grad_inf_norm: 0.0,
        }
    }
}

/// Objective, penalty and gradient of one chain of points stored row-major in
/// `points`. Gradients for every point, endpoints included, are added into `grad`.
pub(crate) fn chain_eval(
    spec: &PriorSpec,
    dim: usize,
    points: &[f64],
    delta: f64,
    alpha: f64,
    mut grad: Option<&mut [f64]>,
) -> Evaluation {
    let count = points.len() / dim;
    let mut objective = 0.0;
    let mut penalty = 0.0;
    for i in 1..count {
        let a = &points[(i - 1) * dim..i * dim];
        let b = &points[i * dim..(i + 1) * dim];
        let mut len_sq = 0.0;
        let mut mid_sq = 0.0;
        for (x, y) in a.iter().zip(b) {
            let e = y - x;
            let m = 0.5 * (x + y);
            len_sq += e * e;
            mid_sq += m * m;
        }
        let len = len_sq.sqrt();
        let r = mid_sq.sqrt();
        let w = spec.weight(r);
        objective += w * len;
        let active = len > delta;
        if active {
            penalty += alpha * (len - delta);
        }
        if let Some(g) = grad.as_deref_mut() {
            // ∇W(m)·L/2 pushed to both ends (∂m/∂x = I/2, ∇W(m) = s·m, m = (a+b)/2).
            let q = 0.25 * spec.weight_gradient_scale(r) * len;
            // (W + α[L > δ])·e/L, with zero-length segments contributing nothing.
            let c = if len > 0.0 {
                (w + if active { alpha } else { 0.0 }) / len
            } else {
                0.0
            };
            let (head, tail) = g.split_at_mut(i * dim);
            let ga = &mut head[(i - 1) * dim..];
            let gb = &mut tail[..dim];
            for j in 0..dim {
                let s = a[j] + b[j];
                let e = b[j] - a[j];
                ga[j] += q * s - c * e;
                gb[j] += q * s + c * e;
            }
        }
    }
    Evaluation { objective, penalty }
}

fn check_path(spec: &PriorSpec, path: &PiecewisePath) -> Result<()> {
    if path.dim() != spec.dim() {
        return Err(NaoError::invalid(format!(
            "path has dimension {}, prior expects {}",
            path.dim(),
            spec.dim()
        )));
    }
    Ok(())
}

/// `Σ W(m_i)·L_i` over the segments (no penalty).
pub fn path_objective(spec: &PriorSpec, path: &PiecewisePath) -> Result<f64> {
    check_path(spec, path)?;
    Ok(chain_eval(spec, path.dim, &path.data, f64::INFINITY, 0.0, None).objective)
}

/// `α·Σ max(0, L_i − δ)`
pub fn penalty(path: &PiecewisePath, delta: f64, alpha: f64) -> f64 {
    alpha
        * path
            .segment_lengths()
            .into_iter()
            .map(|l| (l - delta).max(0.0))
            .sum::<f64>()
}

/// Gradient of objective plus penalty with respect to every point. Endpoint
/// rows are zero since the endpoints are fixed.
pub fn path_gradient(spec: &PriorSpec, path: &PiecewisePath, delta: f64, alpha: f64) -> Result<Vec<Vec<f64>>> {
    check_path(spec, path)?;
    let dim = path.dim;
    let mut grad = vec![0.0; path.data.len()];
    chain_eval(spec, dim, &path.data, delta, alpha, Some(&mut grad));
    let last = path.len() - 1;
    Ok(grad
        .chunks_exact(dim)
        .enumerate()
        .map(|(i, g)| {
            if i == 0 || i == last {
                vec![0.0; dim]
            } else {
                g.to_vec()
            }
        })
        .collect())
}

/// `x_i = z1 + (i/n)(z2 − z1)`
pub fn linear_init(z1: &SeedPoint, z2: &SeedPoint, n: usize) -> Result<PiecewisePath> {
    if z1.dim() != z2.dim() {
        return Err(NaoError::invalid("endpoints differ in dimension"));
    }
    if n == 0 {
        return Err(NaoError::invalid("n must be >= 1"));
    }
    let (a, b) = (z1.as_slice(), z2.as_slice());
    let mut data = Vec::with_capacity((n + 1) * a.len());
    data.extend_from_slice(a);
    for i in 1..n {
        data.extend(vector::lerp(a, b, i as f64 / n as f64));
    }
    data.extend_from_slice(b);
    Ok(PiecewisePath::from_flat(a.len(), data))
}

/// Optimizes the interior points of a path from `z1` to `z2`.
///
/// Non-convergence is not an error; it is reported through
/// [`OptimReport::converged`].
pub fn optimize_path(
    spec: &PriorSpec,
    z1: &SeedPoint,
    z2: &SeedPoint,
    cfg: &PathConfig,
) -> Result<(PiecewisePath, OptimReport)> {
    cfg.validate()?;
    spec.check_dim(z1)?;
    spec.check_dim(z2)?;
    let init = linear_init(z1, z2, cfg.n)?;
    let delta = cfg.delta.resolve(z1.as_slice(), z2.as_slice(), cfg.n);
    if z1 == z2 {
        let violation = init.max_segment_violation(delta);
        return Ok((init, OptimReport::trivial(0.0, delta, violation)));
    }
    if z1.norm() == 0.0 || z2.norm() == 0.0 {
        return Err(NaoError::DegenerateOrigin("path endpoint at the origin".into()));
    }
    optimize_from(spec, init, delta, cfg.alpha, &cfg.optimizer)
}

/// Optimizes the interior points of an arbitrary starting path, keeping its
/// endpoints fixed.
pub fn optimize_from(
    spec: &PriorSpec,
    init: PiecewisePath,
    delta: f64,
    alpha: f64,
    settings: &AdamSettings,
) -> Result<(PiecewisePath, OptimReport)> {
    check_path(spec, &init)?;
    settings.validate()?;
    if delta.is_nan() || delta <= 0.0 || alpha.is_nan() || alpha < 0.0 {
        return Err(NaoError::invalid(format!(
            "need delta > 0 and alpha >= 0, got {delta}, {alpha}"
        )));
    }
    let dim = init.dim;
    let count = init.len();
    let start = chain_eval(spec, dim, &init.data, delta, alpha, None);
    if !start.total().is_finite() {
        return Err(NaoError::DegenerateOrigin(
            "objective is not finite at the initial path".into(),
        ));
    }
    if count == 2 {
        let violation = init.max_segment_violation(delta);
        let mut report = OptimReport::trivial(start.objective, delta, violation);
        report.final_penalty = start.penalty;
        report.penalty_trace = vec![start.penalty];
        return Ok((init, report));
    }

    let interior = init.data[dim..(count - 1) * dim].to_vec();
    let mut buffer = init.data.clone();
    let mut full_grad = vec![0.0; buffer.len()];
    // Per-coordinate moments leave single paths with lower per-point nll than
    // per-point blocks, which stall earlier on this objective.
    let groups = vec![1; interior.len()];
    let trajectory = adam::minimize(settings, interior, &groups, |params, grad| {
        buffer[dim..(count - 1) * dim].copy_from_slice(params);
        full_grad.fill(0.0);
        let eval = chain_eval(spec, dim, &buffer, delta, alpha, Some(&mut full_grad));
        grad.copy_from_slice(&full_grad[dim..(count - 1) * dim]);
        eval
    });

    let mut data = init.data;
    data[dim..(count - 1) * dim].copy_from_slice(&trajectory.params);
    let path = PiecewisePath::from_flat(dim, data);
    let report = OptimReport {
        final_objective: *trajectory.objective_trace.last().expect("trace is never empty"),
        final_penalty: *trajectory.penalty_trace.last().expect("trace is never empty"),
        max_segment_violation: path.max_segment_violation(delta),
        delta,
        iterations_used: trajectory.iterations,
        rejected_steps: trajectory.rejected_steps,
        converged: trajectory.converged,
        grad_inf_norm: trajectory.grad_inf_norm,
        objective_trace: trajectory.objective_trace,
        penalty_trace: trajectory.penalty_trace,
    };
    Ok((path, report))
}

/// `m` points at arc-length fractions `k/(m+1)`, `k = 1..=m`.
pub fn sample_along(path: &PiecewisePath, m: usize) -> Result<Vec<SeedPoint>> {
    if m == 0 {
        return Err(NaoError::invalid("sample count must be >= 1"));
    }
    let lengths = path.segment_lengths();
    let total: f64 = lengths.iter().sum();
    if total == 0.0 {
        return Ok(vec![SeedPoint::from_trusted(path.point(0).to_vec()); m]);
    }
    let mut out = Vec::with_capacity(m);
    let mut seg = 0;
    let mut covered = 0.0;
    for k in 1..=m {
        let target = total * k as f64 / (m + 1) as f64;
        while seg + 1 < lengths.len() && covered + lengths[seg] < target {
            covered += lengths[seg];
            seg += 1;
        }
        let t = if lengths[seg] > 0.0 {
            ((target - covered) / lengths[seg]).clamp(0.0, 1.0)
        } else {
            0.0
        };
        out.push(SeedPoint::from_trusted(vector::lerp(
            path.point(seg),
            path.point(seg + 1),
            t,
        )));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::baselines::slerp_path;
    use crate::rng::RngState;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn seed(v: &[f64]) -> SeedPoint {
        SeedPoint::new(v.to_vec()).unwrap()
    }

    fn path(points: &[&[f64]]) -> PiecewisePath {
        PiecewisePath::from_points(&points.iter().map(|p| seed(p)).collect::<Vec<_>>()).unwrap()
    }

    fn random_path(rng: &mut RngState, d: usize, points: usize, scale: f64) -> PiecewisePath {
        let data = rng.gaussian_stream(d * points).into_iter().map(|x| x * scale).collect();
        PiecewisePath::from_flat(d, data)
    }

    fn total(spec: &PriorSpec, p: &PiecewisePath, delta: f64, alpha: f64) -> f64 {
        path_objective(spec, p).unwrap() + penalty(p, delta, alpha)
    }

    #[test]
    fn objective_of_equal_points_is_zero() {
        let spec = PriorSpec::new(2).unwrap();
        let p = path(&[&[1.0, 1.0], &[1.0, 1.0], &[1.0, 1.0]]);
        assert_eq!(path_objective(&spec, &p).unwrap(), 0.0);
    }

    #[test]
    fn single_segment_quarter_turn() {
        // W(r) = r²/2 − ln r for d = 2; midpoint radius √½, length √2.
        let spec = PriorSpec::new(2).unwrap();
        let p = path(&[&[1.0, 0.0], &[0.0, 1.0]]);
        let want = (0.25 + 0.5 * 2f64.ln()) * 2f64.sqrt();
        assert_relative_eq!(path_objective(&spec, &p).unwrap(), want, max_relative = 1e-14);
        assert_relative_eq!(want, 0.843_682_462_327_547_4, max_relative = 1e-15);
    }

    #[test]
    fn objective_is_not_scale_invariant() {
        let spec = PriorSpec::new(2).unwrap();
        let p = path(&[&[1.0, 0.0], &[0.5, 0.7], &[0.0, 1.0]]);
        let doubled = path(&[&[2.0, 0.0], &[1.0, 1.4], &[0.0, 2.0]]);
        let (a, b) = (
            path_objective(&spec, &p).unwrap(),
            path_objective(&spec, &doubled).unwrap(),
        );
        assert!((a - b).abs() > 1e-3, "{a} vs {b}");
    }

    #[test]
    fn objective_rejects_wrong_dimension() {
        let spec = PriorSpec::new(3).unwrap();
        let p = path(&[&[1.0, 0.0], &[0.0, 1.0]]);
        assert!(matches!(path_objective(&spec, &p), Err(NaoError::InvalidInput(_))));
    }

    #[test]
    fn penalty_examples() {
        let p = path(&[&[0.0, 0.0], &[0.5, 0.0], &[1.0, 0.0]]);
        assert_eq!(penalty(&p, 0.5, 10.0), 0.0);
        let long = path(&[&[0.0, 0.0], &[3.0, 0.0]]);
        assert_relative_eq!(penalty(&long, 2.0, 10.0), 10.0, max_relative = 1e-15);

        let z1 = seed(&[0.3, -1.2, 2.0]);
        let z2 = seed(&[-1.0, 0.4, 0.1]);
        let init = linear_init(&z1, &z2, 7).unwrap();
        let delta = Delta::Auto.resolve(z1.as_slice(), z2.as_slice(), 7);
        assert!(penalty(&init, delta, 10.0) < 1e-13);
    }

    #[test]
    fn linear_init_examples() {
        let a = seed(&[0.0, 2.0]);
        let b = seed(&[2.0, 0.0]);
        let one = linear_init(&a, &b, 1).unwrap();
        assert_eq!(one.len(), 2);
        assert_eq!(one.point(0), a.as_slice());
        assert_eq!(one.point(1), b.as_slice());
        let two = linear_init(&a, &b, 2).unwrap();
        assert_eq!(two.point(1), &[1.0, 1.0]);
        assert!(linear_init(&a, &b, 0).is_err());
        assert!(linear_init(&a, &seed(&[1.0]), 3).is_err());
    }

    #[test]
    fn gradient_of_symmetric_arc_has_no_tangential_part() {
        let spec = PriorSpec::new(2).unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let p = path(&[&[1.0, 0.0], &[s, s], &[0.0, 1.0]]);
        let g = path_gradient(&spec, &p, 10.0, 10.0).unwrap();
        // Tangent to the circle at (s, s) is (−s, s).
        assert!((-s * g[1][0] + s * g[1][1]).abs() < 1e-14);
        assert!(g[0].iter().chain(&g[2]).all(|&x| x == 0.0));
    }

    /// Largest deviation of central differences along random directions,
    /// relative to ‖∇‖ (kink-free configurations only).
    fn directional_fd_error(spec: &PriorSpec, p: &PiecewisePath, delta: f64, alpha: f64, rng: &mut RngState) -> f64 {
        let d = p.dim();
        let g: Vec<f64> = path_gradient(spec, p, delta, alpha).unwrap().concat();
        let gnorm = vector::norm(&g);
        let scale = p.point_norms().iter().copied().fold(1.0, f64::max);
        let h = 1e-6 * scale;
        let mut worst: f64 = 0.0;
        for _ in 0..4 {
            let mut dir = rng.gaussian_stream(p.as_flat().len());
            dir[..d].fill(0.0);
            let last = dir.len() - d;
            dir[last..].fill(0.0);
            let norm = vector::norm(&dir);
            dir.iter_mut().for_each(|x| *x /= norm);
            let shifted = |sign: f64| {
                let data = p.as_flat().iter().zip(&dir).map(|(x, v)| x + sign * h * v).collect();
                total(spec, &PiecewisePath::from_flat(d, data), delta, alpha)
            };
            let fd = (shifted(1.0) - shifted(-1.0)) / (2.0 * h);
            worst = worst.max((fd - vector::dot(&g, &dir)).abs() / gnorm);
        }
        worst
    }

    fn kink_free_delta(p: &PiecewisePath) -> f64 {
        let mut lengths = p.segment_lengths();
        lengths.sort_by(f64::total_cmp);
        // Halfway between the two middle lengths: some segments active, some not.
        let mid = lengths.len() / 2;
        0.5 * (lengths[mid.saturating_sub(1)] + lengths[mid])
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = RngState::new(99);
        for &(d, points, reps) in &[(2usize, 12usize, 20usize), (16, 8, 20), (16384, 6, 3)] {
            let spec = PriorSpec::new(d).unwrap();
            for _ in 0..reps {
                let p = random_path(&mut rng, d, points, 1.0);
                let delta = kink_free_delta(&p);
                let err = directional_fd_error(&spec, &p, delta, 10.0, &mut rng);
                assert!(err <= 1e-5, "d={d}: relative error {err}");
            }
        }
    }

    #[test]
    fn full_gradient_matches_finite_differences_in_low_dimension() {
        let spec = PriorSpec::new(16).unwrap();
        let mut rng = RngState::new(3);
        let p = random_path(&mut rng, 16, 5, 1.5);
        let delta = kink_free_delta(&p);
        let g = path_gradient(&spec, &p, delta, 3.0).unwrap();
        let h = 1e-6;
        let mut worst: f64 = 0.0;
        for i in 1..4 {
            for j in 0..16 {
                let bump = |s: f64| {
                    let mut data = p.as_flat().to_vec();
                    data[i * 16 + j] += s * h;
                    total(&spec, &PiecewisePath::from_flat(16, data), delta, 3.0)
                };
                let fd = (bump(1.0) - bump(-1.0)) / (2.0 * h);
                worst = worst.max((fd - g[i][j]).abs());
            }
        }
        let gmax = g.iter().flatten().fold(0.0f64, |m, x| m.max(x.abs()));
        assert!(worst / gmax <= 1e-5, "{}", worst / gmax);
    }

    #[test]
    fn zero_length_segment_has_zero_length_gradient() {
        let spec = PriorSpec::new(2).unwrap();
        let p = path(&[&[1.0, 0.0], &[0.0, 1.0], &[0.0, 1.0], &[-1.0, 0.0]]);
        let g = path_gradient(&spec, &p, 0.1, 1.0).unwrap();
        assert!(g.iter().flatten().all(|x| x.is_finite()));
    }

    #[test]
    fn sample_along_examples() {
        let p = path(&[&[0.0, 0.0], &[4.0, 0.0]]);
        let one = sample_along(&p, 1).unwrap();
        assert_eq!(one[0].as_slice(), &[2.0, 0.0]);

        let bent = path(&[&[0.0, 0.0], &[1.0, 0.0], &[1.0, 3.0]]);
        let three = sample_along(&bent, 3).unwrap();
        let total = bent.arc_length();
        for (k, s) in three.iter().enumerate() {
            let x = s.as_slice();
            let along = if x[1] == 0.0 { x[0] } else { 1.0 + x[1] };
            assert!((along / total - (k + 1) as f64 / 4.0).abs() < 1e-12);
        }

        let still = path(&[&[1.0, 1.0], &[1.0, 1.0]]);
        let copies = sample_along(&still, 2).unwrap();
        assert!(copies.iter().all(|s| s.as_slice() == [1.0, 1.0]));
        assert!(sample_along(&p, 0).is_err());
    }

    #[test]
    fn equal_endpoints_return_immediately() {
        let spec = PriorSpec::new(2).unwrap();
        let z = seed(&[0.6, 0.8]);
        let (p, report) = optimize_path(&spec, &z, &z, &PathConfig::default()).unwrap();
        assert_eq!(report.final_objective, 0.0);
        assert_eq!(report.iterations_used, 0);
        assert!(p.points().all(|x| x == z.as_slice()));
    }

    #[test]
    fn endpoint_at_origin_is_degenerate() {
        let spec = PriorSpec::new(2).unwrap();
        let err = optimize_path(&spec, &seed(&[0.0, 0.0]), &seed(&[1.0, 0.0]), &PathConfig::default());
        assert!(matches!(err, Err(NaoError::DegenerateOrigin(_))));
    }

    #[test]
    fn invalid_configurations_are_rejected() {
        let spec = PriorSpec::new(2).unwrap();
        let (a, b) = (seed(&[1.0, 0.0]), seed(&[0.0, 1.0]));
        for cfg in [
            PathConfig {
                n: 0,
                ..PathConfig::default()
            },
            PathConfig {
                alpha: -1.0,
                ..PathConfig::default()
            },
            PathConfig {
                delta: Delta::Value(-1.0),
                ..PathConfig::default()
            },
        ] {
            assert!(matches!(
                optimize_path(&spec, &a, &b, &cfg),
                Err(NaoError::InvalidInput(_))
            ));
        }
    }

    #[test]
    fn quarter_turn_beats_both_baselines() {
        let spec = PriorSpec::new(2).unwrap();
        let (a, b) = (seed(&[1.0, 0.0]), seed(&[0.0, 1.0]));
        let (p, report) = optimize_path(&spec, &a, &b, &PathConfig::default()).unwrap();
        let lerp = path_objective(&spec, &linear_init(&a, &b, 10).unwrap()).unwrap();
        let slerp = path_objective(&spec, &slerp_path(&a, &b, 10).unwrap()).unwrap();
        assert!(report.final_objective <= lerp && report.final_objective <= slerp);
        assert_eq!(p.point(0), a.as_slice());
        assert_eq!(p.point(10), b.as_slice());
        assert_eq!(report.final_objective, *report.objective_trace.last().unwrap());
        assert_relative_eq!(
            report.final_objective,
            path_objective(&spec, &p).unwrap(),
            max_relative = 1e-12
        );
    }

    #[test]
    fn trace_settles_after_warm_up() {
        let spec = PriorSpec::new(64).unwrap();
        let mut rng = RngState::new(8);
        let a = spec.sample_seed(&mut rng);
        let b = spec.sample_seed(&mut rng);
        let (_, report) = optimize_path(&spec, &a, &b, &PathConfig::default()).unwrap();
        let start = report.objective_trace[0];
        assert!(report.final_objective < start);
        for w in report.objective_trace[adam::WARMUP_ITERS..].windows(2) {
            assert!(w[1] <= w[0] + 1e-9);
        }
    }

    #[test]
    fn infinite_delta_never_penalizes() {
        let spec = PriorSpec::new(2).unwrap();
        let cfg = PathConfig {
            delta: Delta::Value(f64::INFINITY),
            ..PathConfig::default()
        };
        let (_, report) = optimize_path(&spec, &seed(&[1.0, 0.2]), &seed(&[-0.3, 1.1]), &cfg).unwrap();
        assert!(report.penalty_trace.iter().all(|&p| p == 0.0));
    }

    #[test]
    fn delta_parsing_and_serialization() {
        assert_eq!("auto".parse::<Delta>().unwrap(), Delta::Auto);
        assert_eq!("0.25".parse::<Delta>().unwrap(), Delta::Value(0.25));
        assert_eq!("inf".parse::<Delta>().unwrap(), Delta::Value(f64::INFINITY));
        assert!("0".parse::<Delta>().is_err());
        assert!("-2".parse::<Delta>().is_err());
        assert!("nan".parse::<Delta>().is_err());
        for d in [Delta::Auto, Delta::Value(0.5), Delta::Value(f64::INFINITY)] {
            let json = serde_json::to_string(&d).unwrap();
            assert_eq!(serde_json::from_str::<Delta>(&json).unwrap(), d);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn objective_is_nonnegative_and_reversible(
            coords in proptest::collection::vec(-3.0f64..3.0, 8..40),
        ) {
            let d = 4;
            let usable = coords.len() / d * d;
            prop_assume!(usable >= 2 * d);
            let spec = PriorSpec::new(d).unwrap();
            let p = PiecewisePath::from_flat(d, coords[..usable].to_vec());
            let rev: Vec<f64> = p.points().rev().flatten().copied().collect();
            let f = path_objective(&spec, &p).unwrap();
            let g = path_objective(&spec, &PiecewisePath::from_flat(d, rev)).unwrap();
            prop_assert!(f >= 0.0);
            prop_assert!((f - g).abs() <= 1e-12 * f.max(1.0));
        }

        #[test]
        fn linear_init_is_evenly_spaced(
            a in proptest::collection::vec(-5.0f64..5.0, 3),
            b in proptest::collection::vec(-5.0f64..5.0, 3),
            n in 1usize..30,
        ) {
            let p = linear_init(&seed(&a), &seed(&b), n).unwrap();
            let lengths = p.segment_lengths();
            let hi = lengths.iter().copied().fold(f64::MIN, f64::max);
            let lo = lengths.iter().copied().fold(f64::MAX, f64::min);
            prop_assert!(hi - lo <= 1e-12 * hi.max(1e-300));
            prop_assert_eq!(p.point(0), &a[..]);
            prop_assert_eq!(p.point(n), &b[..]);
        }

        #[test]
        fn penalty_vanishes_under_the_cap(
            coords in proptest::collection::vec(-2.0f64..2.0, 6..30),
            alpha in 0.0f64..100.0,
        ) {
            let usable = coords.len() / 2 * 2;
            let p = PiecewisePath::from_flat(2, coords[..usable].to_vec());
            let cap = p.segment_lengths().into_iter().fold(0.0, f64::max);
            prop_assert_eq!(penalty(&p, cap, alpha), 0.0);
            prop_assert!(penalty(&p, cap * 0.5 + 1e-9, alpha) >= 0.0);
        }

        #[test]
        fn optimizer_pins_endpoints_and_never_ends_above_its_start(
            a in proptest::collection::vec(-2.0f64..2.0, 3),
            b in proptest::collection::vec(-2.0f64..2.0, 3),
        ) {
            let (za, zb) = (seed(&a), seed(&b));
            prop_assume!(za.norm() > 0.1 && zb.norm() > 0.1);
            let spec = PriorSpec::new(3).unwrap();
            let mut cfg = PathConfig::with_n(6);
            cfg.optimizer.max_iters = 150;
            let start = path_objective(&spec, &linear_init(&za, &zb, 6).unwrap()).unwrap();
            let (p, report) = optimize_path(&spec, &za, &zb, &cfg).unwrap();
            prop_assert_eq!(p.point(0), za.as_slice());
            prop_assert_eq!(p.point(6), zb.as_slice());
            prop_assert!(report.final_objective <= start + 1e-9);
            prop_assert!(za == zb || report.final_objective > 0.0);
        }
    }
}

//! The induced distance and an empirical audit of the metric axioms.
//!
//! `distance` returns the optimized discretized path objective, an estimate of
//! the true infimum. Symmetry and the triangle inequality only hold for the
//! infimum, so the audit measures them with explicit slack. The concatenation
//! check is exact: re-optimizing the joined path `x → y → z` can only lower its
//! objective.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{NaoError, Result};
use crate::path::{optimize_from, optimize_path, PathConfig, PiecewisePath};
use crate::prior::{PriorSpec, SeedPoint};
use crate::rng::{RngState, ALGORITHM};

pub fn distance(spec: &PriorSpec, x: &SeedPoint, y: &SeedPoint, cfg: &PathConfig) -> Result<f64> {
    Ok(optimize_path(spec, x, y, cfg)?.1.final_objective)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AuditTolerances {
    /// Allowed relative gap between `f(x,y)` and `f(y,x)`.
    pub symmetry_rel: f64,
    /// Triangle slack beyond this fraction of `f(x,z)` counts as a violation.
    pub triangle_rel: f64,
    /// Absolute slack for the concatenation check.
    pub concatenation_abs: f64,
}

impl Default for AuditTolerances {
    fn default() -> Self {
        AuditTolerances {
            symmetry_rel: 0.01,
            triangle_rel: 0.02,
            concatenation_abs: 1e-9,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub d_xy: f64,
    pub d_yx: f64,
    pub d_yz: f64,
    pub d_xz: f64,
    pub d_xx: f64,
    pub symmetry_rel: f64,
    /// `f(x,z) − f(x,y) − f(y,z)`
    pub triangle_slack: f64,
    pub concatenated_objective: f64,
    pub reoptimized_objective: f64,
    /// Path optimizations in this trial that reached the gradient tolerance.
    pub converged_runs: usize,
    /// Largest `max_segment_violation / δ` among those runs, 0 if none.
    pub converged_violation_rel: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricAuditReport {
    pub trials: usize,
    pub identity_max_abs: f64,
    pub symmetry_max_rel: f64,
    pub symmetry_failures: usize,
    pub triangle_violations: usize,
    /// Largest `f(x,z) − f(x,y) − f(y,z)` seen (positive means the raw
    /// inequality failed).
    pub triangle_worst_slack: f64,
    pub triangle_worst_slack_rel: f64,
    pub negative_distances: usize,
    pub concatenation_failures: usize,
    pub config: PathConfig,
    pub tolerances: AuditTolerances,
    pub dim: usize,
    pub rng_algorithm: String,
    pub rng_seed: Option<u64>,
    pub records: Vec<TrialRecord>,
}

impl MetricAuditReport {
    /// No hard failures: identity, non-negativity, symmetry tolerance,
    /// concatenation and triangle tolerance all hold.
    pub fn passed(&self) -> bool {
        self.identity_max_abs <= 1e-9
            && self.negative_distances == 0
            && self.symmetry_failures == 0
            && self.concatenation_failures == 0
            && self.triangle_violations == 0
    }
}

fn audit_triple(
    spec: &PriorSpec,
    x: &SeedPoint,
    y: &SeedPoint,
    z: &SeedPoint,
    cfg: &PathConfig,
) -> Result<TrialRecord> {
    let (p_xy, r_xy) = optimize_path(spec, x, y, cfg)?;
    let (p_yz, r_yz) = optimize_path(spec, y, z, cfg)?;
    let r_yx = optimize_path(spec, y, x, cfg)?.1;
    let r_xz = optimize_path(spec, x, z, cfg)?.1;
    let r_xx = optimize_path(spec, x, x, cfg)?.1;
    let (d_xy, d_yz) = (r_xy.final_objective, r_yz.final_objective);
    let (d_yx, d_xz, d_xx) = (r_yx.final_objective, r_xz.final_objective, r_xx.final_objective);
    let mut runs = vec![r_xy, r_yz, r_yx, r_xz, r_xx];

    // Join x → y → z and re-optimize it as one path, with δ wide enough that
    // the joined path itself carries no penalty.
    let mut joined = p_xy.to_seed_points();
    joined.extend(p_yz.to_seed_points().into_iter().skip(1));
    let joined = PiecewisePath::from_points(&joined)?;
    let concatenated_objective = d_xy + d_yz;
    let reoptimized_objective = if x == z || joined.arc_length() == 0.0 {
        0.0
    } else {
        let delta = joined
            .segment_lengths()
            .into_iter()
            .fold(0.0, f64::max)
            .max(f64::MIN_POSITIVE);
        let report = optimize_from(spec, joined, delta, cfg.alpha, &cfg.optimizer)?.1;
        let value = report.final_objective;
        runs.push(report);
        value
    };
    let converged: Vec<_> = runs.iter().filter(|r| r.converged).collect();
    let converged_violation_rel = converged
        .iter()
        .filter(|r| r.delta > 0.0)
        .map(|r| r.max_segment_violation / r.delta)
        .fold(0.0, f64::max);

    let scale = d_xy.max(d_yx);
    let symmetry_rel = if scale > 0.0 { (d_xy - d_yx).abs() / scale } else { 0.0 };
    Ok(TrialRecord {
        d_xy,
        d_yx,
        d_yz,
        d_xz,
        d_xx,
        symmetry_rel,
        triangle_slack: d_xz - d_xy - d_yz,
        concatenated_objective,
        reoptimized_objective,
        converged_runs: converged.len(),
        converged_violation_rel,
    })
}

/// Audits explicit triples `(x, y, z)`.
pub fn audit_triples(
    spec: &PriorSpec,
    triples: &[(SeedPoint, SeedPoint, SeedPoint)],
    cfg: &PathConfig,
    tolerances: AuditTolerances,
) -> Result<MetricAuditReport> {
    if triples.is_empty() {
        return Err(NaoError::invalid("audit needs at least one trial"));
    }
    cfg.validate()?;
    // Collect preserves input order regardless of thread scheduling.
    let records = triples
        .par_iter()
        .map(|(x, y, z)| audit_triple(spec, x, y, z, cfg))
        .collect::<Result<Vec<_>>>()?;

    let mut report = MetricAuditReport {
        trials: records.len(),
        identity_max_abs: 0.0,
        symmetry_max_rel: 0.0,
        symmetry_failures: 0,
        triangle_violations: 0,
        triangle_worst_slack: f64::NEG_INFINITY,
        triangle_worst_slack_rel: f64::NEG_INFINITY,
        negative_distances: 0,
        concatenation_failures: 0,
        config: *cfg,
        tolerances,
        dim: spec.dim(),
        rng_algorithm: ALGORITHM.to_string(),
        rng_seed: None,
        records: Vec::new(),
    };
    for r in &records {
        report.identity_max_abs = report.identity_max_abs.max(r.d_xx.abs());
        report.symmetry_max_rel = report.symmetry_max_rel.max(r.symmetry_rel);
        if r.symmetry_rel > tolerances.symmetry_rel {
            report.symmetry_failures += 1;
        }
        report.negative_distances += [r.d_xy, r.d_yx, r.d_yz, r.d_xz, r.d_xx]
            .iter()
            .filter(|v| **v < 0.0)
            .count();
        let rel = if r.d_xz > 0.0 { r.triangle_slack / r.d_xz } else { 0.0 };
        if r.triangle_slack > report.triangle_worst_slack {
            report.triangle_worst_slack = r.triangle_slack;
        }
        report.triangle_worst_slack_rel = report.triangle_worst_slack_rel.max(rel);
        if r.triangle_slack > tolerances.triangle_rel * r.d_xz {
            report.triangle_violations += 1;
        }
        if r.reoptimized_objective > r.concatenated_objective + tolerances.concatenation_abs {
            report.concatenation_failures += 1;
        }
    }
    report.records = records;
    Ok(report)
}

/// Samples `trials` Gaussian triples (trial `i` draws from substream `i` of the
/// generator's seed) and audits them.
pub fn audit_metric(
    spec: &PriorSpec,
    trials: usize,
    cfg: &PathConfig,
    rng: &RngState,
    tolerances: AuditTolerances,
) -> Result<MetricAuditReport> {
    if trials == 0 {
        return Err(NaoError::invalid("trials must be >= 1"));
    }
    let triples: Vec<_> = (0..trials as u64)
        .map(|i| {
            let mut r = RngState::substream(rng.seed(), i);
            (
                spec.sample_seed(&mut r),
                spec.sample_seed(&mut r),
                spec.sample_seed(&mut r),
            )
        })
        .collect();
    let mut report = audit_triples(spec, &triples, cfg, tolerances)?;
    report.rng_seed = Some(rng.seed());
    Ok(report)
}

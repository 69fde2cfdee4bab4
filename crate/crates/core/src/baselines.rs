//! Comparison methods: LERP, SLERP, the Euclidean centroid, its projection to
//! the mode sphere, and the fixed-point spherical centroid.

use serde::Serialize;

use crate::error::{NaoError, Result};
use crate::path::PiecewisePath;
use crate::prior::{rescale_to_norm, PriorSpec, SeedPoint};
use crate::vector;

/// Below this `sin Ω` SLERP falls back to LERP.
pub const SLERP_PARALLEL_SIN: f64 = 1e-7;
/// Angles closer than this to π have no well-defined great-circle arc.
pub const SLERP_ANTIPODAL_MARGIN: f64 = 1e-4;
/// Guard on `1 − (u·u_i)²` in the spherical fixed-point iterate.
const SPHERE_GUARD: f64 = 1e-12;

fn same_dim(x: &SeedPoint, y: &SeedPoint) -> Result<()> {
    if x.dim() != y.dim() {
        return Err(NaoError::invalid(format!(
            "dimension mismatch: {} vs {}",
            x.dim(),
            y.dim()
        )));
    }
    Ok(())
}

fn check_t(t: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&t) {
        return Err(NaoError::invalid(format!("t must lie in [0, 1], got {t}")));
    }
    Ok(())
}

pub fn lerp(x: &SeedPoint, y: &SeedPoint, t: f64) -> Result<SeedPoint> {
    same_dim(x, y)?;
    check_t(t)?;
    if t == 0.0 {
        return Ok(x.clone());
    }
    if t == 1.0 {
        return Ok(y.clone());
    }
    Ok(SeedPoint::from_trusted(vector::lerp(x.as_slice(), y.as_slice(), t)))
}

/// Angle between two non-zero vectors, with the cosine clamped to `[−1, 1]`.
pub fn angle_between(x: &[f64], y: &[f64]) -> f64 {
    let c = vector::dot(x, y) / (vector::norm(x) * vector::norm(y));
    c.clamp(-1.0, 1.0).acos()
}

/// `sin((1−t)Ω)/sin Ω · x + sin(tΩ)/sin Ω · y`.
///
/// Unequal norms are blended by the same sine weights. Nearly parallel inputs
/// fall back to [`lerp`]; nearly antipodal inputs are an error.
pub fn slerp(x: &SeedPoint, y: &SeedPoint, t: f64) -> Result<SeedPoint> {
    same_dim(x, y)?;
    check_t(t)?;
    if x.norm() == 0.0 || y.norm() == 0.0 {
        return Err(NaoError::DegenerateOrigin("slerp endpoint at the origin".into()));
    }
    let omega = angle_between(x.as_slice(), y.as_slice());
    if omega > std::f64::consts::PI - SLERP_ANTIPODAL_MARGIN {
        return Err(NaoError::AmbiguousArc { angle: omega });
    }
    let sin_omega = omega.sin();
    if sin_omega <= SLERP_PARALLEL_SIN {
        return lerp(x, y, t);
    }
    if t == 0.0 {
        return Ok(x.clone());
    }
    if t == 1.0 {
        return Ok(y.clone());
    }
    let a = ((1.0 - t) * omega).sin() / sin_omega;
    let b = (t * omega).sin() / sin_omega;
    Ok(SeedPoint::from_trusted(
        x.as_slice()
            .iter()
            .zip(y.as_slice())
            .map(|(p, q)| a * p + b * q)
            .collect(),
    ))
}

/// `n + 1` points `slerp(x, y, i/n)`.
pub fn slerp_path(x: &SeedPoint, y: &SeedPoint, n: usize) -> Result<PiecewisePath> {
    if n == 0 {
        return Err(NaoError::invalid("n must be >= 1"));
    }
    let points = (0..=n)
        .map(|i| slerp(x, y, i as f64 / n as f64))
        .collect::<Result<Vec<_>>>()?;
    PiecewisePath::from_points(&points)
}

fn check_seeds(seeds: &[SeedPoint]) -> Result<usize> {
    let first = seeds.first().ok_or_else(|| NaoError::invalid("seed set is empty"))?;
    if seeds.iter().any(|s| s.dim() != first.dim()) {
        return Err(NaoError::invalid("seeds must share one dimension"));
    }
    Ok(first.dim())
}

/// Component-wise mean.
pub fn euclidean_centroid(seeds: &[SeedPoint]) -> Result<SeedPoint> {
    let d = check_seeds(seeds)?;
    let mut mean = vec![0.0; d];
    for s in seeds {
        for (m, x) in mean.iter_mut().zip(s.as_slice()) {
            *m += x;
        }
    }
    let k = seeds.len() as f64;
    mean.iter_mut().for_each(|m| *m /= k);
    Ok(SeedPoint::from_trusted(mean))
}

/// Euclidean mean rescaled to the mode radius `√(d−1)`.
pub fn normalized_euclidean_centroid(spec: &PriorSpec, seeds: &[SeedPoint]) -> Result<SeedPoint> {
    let mean = euclidean_centroid(seeds)?;
    spec.check_dim(&mean)?;
    if mean.norm() <= crate::prior::NORM_FLOOR {
        return Err(NaoError::DegenerateDirection(
            "Euclidean mean is at the origin; it has no direction to normalize".into(),
        ));
    }
    rescale_to_norm(&mean, spec.mode_radius())
}

#[derive(Debug, Clone, Serialize)]
pub struct SphereCentroid {
    pub centroid: SeedPoint,
    pub iterations: usize,
    pub converged: bool,
    /// Sum of great-circle angles from the unit direction to each projected
    /// seed, recorded after every iterate (the first entry is the start).
    pub arc_trace: Vec<f64>,
}

/// Spherical centroid by the fixed-point iterate
/// `u ← normalize(Σ u_i / √(1 − (u·u_i)²))`, scaled to the mode radius.
///
/// The seeds are projected to the unit sphere first, and the iterate starts at
/// their normalized mean. It can fail to settle when the seeds spread beyond a
/// hemisphere; the last iterate is returned with `converged = false`.
pub fn sphere_projection_centroid(
    spec: &PriorSpec,
    seeds: &[SeedPoint],
    tol: f64,
    max_iter: usize,
) -> Result<SphereCentroid> {
    let d = check_seeds(seeds)?;
    if d != spec.dim() {
        return Err(NaoError::invalid("seed dimension does not match the prior"));
    }
    let units = seeds
        .iter()
        .map(|s| {
            let r = s.norm();
            if r == 0.0 {
                Err(NaoError::DegenerateOrigin("seed at the origin".into()))
            } else {
                Ok(vector::scaled(s.as_slice(), 1.0 / r))
            }
        })
        .collect::<Result<Vec<_>>>()?;

    let mut u = vec![0.0; d];
    for p in &units {
        for (a, b) in u.iter_mut().zip(p) {
            *a += b;
        }
    }
    normalize_or_degenerate(&mut u)?;

    let arc_sum = |u: &[f64]| -> f64 { units.iter().map(|p| vector::dot(u, p).clamp(-1.0, 1.0).acos()).sum() };
    let mut arc_trace = vec![arc_sum(&u)];
    let mut converged = false;
    let mut iterations = 0;
    while iterations < max_iter {
        let mut next = vec![0.0; d];
        for p in &units {
            let c = vector::dot(&u, p);
            let w = 1.0 / (1.0 - (c * c).clamp(0.0, 1.0 - SPHERE_GUARD)).sqrt();
            for (a, b) in next.iter_mut().zip(p) {
                *a += w * b;
            }
        }
        normalize_or_degenerate(&mut next)?;
        iterations += 1;
        let moved = vector::distance(&next, &u);
        u = next;
        arc_trace.push(arc_sum(&u));
        if moved <= tol {
            converged = true;
            break;
        }
    }
    Ok(SphereCentroid {
        centroid: SeedPoint::from_trusted(vector::scaled(&u, spec.mode_radius())),
        iterations,
        converged,
        arc_trace,
    })
}

fn normalize_or_degenerate(u: &mut [f64]) -> Result<()> {
    let r = vector::norm(u);
    if !r.is_finite() || r <= crate::prior::NORM_FLOOR {
        return Err(NaoError::DegenerateDirection(
            "spherical mean direction vanishes".into(),
        ));
    }
    u.iter_mut().for_each(|x| *x /= r);
    Ok(())
}

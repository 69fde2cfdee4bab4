//! The χ^d norm prior over seeds.
//!
//! The density of `r = ‖z‖` for `z ~ N(0, I_d)` is
//! `r^(d−1) e^(−r²/2) / (2^(d/2−1) Γ(d/2))`. Everything here stays in log
//! space; `W(z) = −ln χ^d(‖z‖)` is the positive path weight used by the
//! optimizers.

use serde::{Deserialize, Serialize};

use crate::error::{NaoError, Result};
use crate::rng::RngState;
use crate::special::ln_gamma;
use crate::vector;

/// Norm floor applied inside optimizer objectives so `W` and `∇W` stay finite.
pub const NORM_FLOOR: f64 = 1e-8;

/// A seed vector. All components are finite and the dimension is at least one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct SeedPoint(Vec<f64>);

impl SeedPoint {
    pub fn new(components: Vec<f64>) -> Result<Self> {
        if components.is_empty() {
            return Err(NaoError::invalid("seed must have at least one component"));
        }
        if let Some(i) = components.iter().position(|x| !x.is_finite()) {
            return Err(NaoError::invalid(format!("seed component {i} is not finite")));
        }
        Ok(SeedPoint(components))
    }

    pub fn zeros(d: usize) -> Self {
        SeedPoint(vec![0.0; d.max(1)])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn norm(&self) -> f64 {
        vector::norm(&self.0)
    }

    /// Builds a seed from a vector already known to be finite (internal fast path).
    pub(crate) fn from_trusted(components: Vec<f64>) -> Self {
        debug_assert!(components.iter().all(|x| x.is_finite()));
        SeedPoint(components)
    }
}

impl TryFrom<Vec<f64>> for SeedPoint {
    type Error = NaoError;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        SeedPoint::new(v)
    }
}

impl From<SeedPoint> for Vec<f64> {
    fn from(s: SeedPoint) -> Self {
        s.0
    }
}

/// The χ^d prior for a fixed seed dimension `d ≥ 2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PriorSpec {
    d: usize,
    log_normalizer: f64,
    mode_radius: f64,
}

impl PriorSpec {
    /// `d = 1` is rejected: the χ_1 density peaks at the origin, so there is no
    /// mode sphere for paths to follow.
    pub fn new(d: usize) -> Result<Self> {
        if d < 2 {
            return Err(NaoError::invalid(format!("prior dimension must be >= 2, got {d}")));
        }
        let half = d as f64 / 2.0;
        let log_normalizer = (half - 1.0) * std::f64::consts::LN_2 + ln_gamma(half);
        Ok(PriorSpec {
            d,
            log_normalizer,
            mode_radius: ((d - 1) as f64).sqrt(),
        })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    /// `ln(2^(d/2−1) Γ(d/2))`
    pub fn log_normalizer(&self) -> f64 {
        self.log_normalizer
    }

    /// `√(d−1)`, the argmax of the χ^d density.
    pub fn mode_radius(&self) -> f64 {
        self.mode_radius
    }

    /// `ln χ^d(r)`; `−∞` at `r = 0`.
    pub fn log_pdf(&self, r: f64) -> Result<f64> {
        if !r.is_finite() || r < 0.0 {
            return Err(NaoError::invalid(format!("radius must be finite and >= 0, got {r}")));
        }
        if r == 0.0 {
            return Ok(f64::NEG_INFINITY);
        }
        Ok(self.log_pdf_unchecked(r))
    }

    #[inline]
    fn log_pdf_unchecked(&self, r: f64) -> f64 {
        (self.d - 1) as f64 * r.ln() - 0.5 * r * r - self.log_normalizer
    }

    /// `W(r) = −ln χ^d(r)` for `r ≥ 0`, `+∞` at the origin. No validation.
    #[inline]
    pub fn nll_at_radius(&self, r: f64) -> f64 {
        if r == 0.0 {
            f64::INFINITY
        } else {
            -self.log_pdf_unchecked(r)
        }
    }

    /// `W` with the radius floored at [`NORM_FLOOR`].
    #[inline]
    pub(crate) fn weight(&self, r: f64) -> f64 {
        -self.log_pdf_unchecked(r.max(NORM_FLOOR))
    }

    /// `∇W(x) = s(r)·x`; returns the scalar `s(r) = 1 − (d−1)/r²`, or zero
    /// below the norm floor where the clamped weight is constant.
    #[inline]
    pub(crate) fn weight_gradient_scale(&self, r: f64) -> f64 {
        if r < NORM_FLOOR {
            0.0
        } else {
            1.0 - (self.d - 1) as f64 / (r * r)
        }
    }

    /// Negative log-likelihood of a seed, `W(z) = −ln χ^d(‖z‖)`.
    ///
    /// Strictly positive everywhere; `+∞` at the origin.
    pub fn nll(&self, z: &SeedPoint) -> Result<f64> {
        self.check_dim(z)?;
        Ok(self.nll_at_radius(z.norm()))
    }

    /// `∇W(z) = (1 − (d−1)/‖z‖²)·z`
    pub fn nll_gradient(&self, z: &SeedPoint) -> Result<Vec<f64>> {
        self.check_dim(z)?;
        let r = z.norm();
        if r == 0.0 {
            return Err(NaoError::DegenerateOrigin(
                "gradient of the norm prior is undefined at the origin".into(),
            ));
        }
        Ok(vector::scaled(z.as_slice(), 1.0 - (self.d - 1) as f64 / (r * r)))
    }

    /// `d` i.i.d. standard normals.
    pub fn sample_seed(&self, rng: &mut RngState) -> SeedPoint {
        SeedPoint::from_trusted(rng.gaussian_stream(self.d))
    }

    pub(crate) fn check_dim(&self, z: &SeedPoint) -> Result<()> {
        if z.dim() != self.d {
            return Err(NaoError::invalid(format!(
                "seed has dimension {}, prior expects {}",
                z.dim(),
                self.d
            )));
        }
        Ok(())
    }
}

/// Rescales `z` to norm `target`, keeping its direction.
pub fn rescale_to_norm(z: &SeedPoint, target: f64) -> Result<SeedPoint> {
    if !(target.is_finite() && target > 0.0) {
        return Err(NaoError::invalid(format!("target norm must be positive, got {target}")));
    }
    let r = z.norm();
    if r == 0.0 {
        return Err(NaoError::DegenerateOrigin("cannot rescale the zero vector".into()));
    }
    SeedPoint::new(vector::scaled(z.as_slice(), target / r))
}

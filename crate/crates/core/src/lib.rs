//! Norm-aware optimization over high-dimensional Gaussian seed spaces.
//!
//! A seed `z ~ N(0, I_d)` has a norm that follows the χ distribution with `d`
//! degrees of freedom, which concentrates tightly around `√(d−1)`. This crate
//! uses the negative log χ density of a point's norm as a positive weight `W`
//! and builds everything on top of it:
//!
//! * [`prior`]: the χ^d density, its negative log-likelihood and gradient.
//! * [`path`]: likelihood-maximizing piecewise-linear interpolation between two seeds.
//! * [`centroid`]: Fréchet-mean centroids under the induced distance.
//! * [`baselines`]: LERP, SLERP and the Euclidean / spherical centroid baselines.
//! * [`metric`]: the induced distance and an empirical audit of its axioms.
//! * [`oracle2d`]: a brute-force grid shortest-path oracle for `d = 2`.
//! * [`seedio`]: seed-set files and path dumps; [`rng`]: the reproducible generator.
//! * [`cli`]: the `nao` command-line front end.

pub mod adam;
pub mod baselines;
pub mod centroid;
pub mod cli;
pub mod error;
pub mod metric;
pub mod oracle2d;
pub mod path;
pub mod prior;
pub mod rng;
pub mod seedio;
pub mod special;
pub mod vector;

pub use error::{NaoError, Result};
pub use path::{Delta, OptimReport, PathConfig, PiecewisePath};
pub use prior::{PriorSpec, SeedPoint};
pub use rng::RngState;

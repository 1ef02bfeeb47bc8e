//! Convex floating bodies of polytopes.
//!
//! The crate computes outer polyhedral approximations of the convex floating
//! body `K_δ` (the intersection of all half-spaces that cut off at most a
//! `δ`-fraction of the volume of `K`), brings bodies to isotropic position,
//! evaluates Hausdorff and logarithmic Hausdorff distances, and checks the
//! classical one-dimensional log-concave rigidity inequalities that control
//! these objects.
//!
//! Module map:
//! - [`body`]: H/V representations, standard bodies, support, membership,
//!   ray shooting, polarity and affine images.
//! - [`measure`]: exact simplicial volumetrics, cap fractions, quantiles,
//!   section profiles and Monte-Carlo sampling.
//! - [`logconcave`]: piecewise log-linear densities and rigidity checks.
//! - [`isotropic`]: isotropic position and the isotropic constant.
//! - [`floating`]: the floating body itself and cap-bound diagnostics.
//! - [`distances`]: Hausdorff, logarithmic Hausdorff and Banach-Mazur bounds.
//! - [`harness`]: verification suites producing [`harness::VerificationRow`]s.

pub mod body;
pub mod distances;
pub mod error;
pub mod floating;
pub mod harness;
mod hull;
pub mod isotropic;
pub mod linalg;
pub mod logconcave;
pub mod lp;
pub mod measure;
pub mod par;
pub mod report;

pub use body::{AffineMap, ConvexBody, HalfSpace, StandardShape};
pub use error::{Error, Result};
pub use linalg::Vector;

//! Isotropic position: centroid at the origin, unit volume, covariance
//! `L_K^2 I`.

use std::f64::consts::E;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::body::{matrix_from_rows, matrix_rows, AffineMap, ConvexBody};
use crate::error::{Error, Result};
use crate::linalg::{from_slice, symmetric_eigen, Vector};
use crate::measure::{decompose, Decomposition};
use crate::report::Check;

/// Largest accepted covariance condition number.
pub const MAX_CONDITION: f64 = 1e10;
/// Tolerance on volume, centroid and covariance of the normalised body.
pub const ISOTROPY_TOL: f64 = 1e-8;

/// The map `x -> matrix (x - shift)` taking a body to isotropic position,
/// and its isotropic constant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "IsotropicFormJson", into = "IsotropicFormJson")]
pub struct IsotropicForm {
    pub matrix: DMatrix<f64>,
    pub shift: Vector,
    pub lk: f64,
}

#[derive(Serialize, Deserialize)]
struct IsotropicFormJson {
    matrix: Vec<Vec<f64>>,
    shift: Vec<f64>,
    #[serde(rename = "LK")]
    lk: f64,
}

impl From<IsotropicForm> for IsotropicFormJson {
    fn from(f: IsotropicForm) -> Self {
        Self { matrix: matrix_rows(&f.matrix), shift: f.shift.iter().copied().collect(), lk: f.lk }
    }
}

impl TryFrom<IsotropicFormJson> for IsotropicForm {
    type Error = Error;

    fn try_from(j: IsotropicFormJson) -> Result<Self> {
        let matrix = matrix_from_rows(&j.matrix)?;
        if matrix.nrows() != matrix.ncols() || matrix.nrows() != j.shift.len() {
            return Err(Error::DimensionMismatch { expected: matrix.nrows(), got: j.shift.len() });
        }
        Ok(Self { matrix, shift: from_slice(&j.shift), lk: j.lk })
    }
}

impl IsotropicForm {
    /// The affine map `x -> A x - A b`.
    pub fn affine_map(&self) -> AffineMap {
        AffineMap { matrix: self.matrix.clone(), shift: -(&self.matrix * &self.shift) }
    }
}

/// Moments of a body in isotropic position, for checking the invariants.
#[derive(Debug, Clone)]
pub struct IsotropyResiduals {
    pub volume_error: f64,
    pub centroid_norm: f64,
    pub covariance_error: f64,
}

pub fn isotropy_residuals(dec: &Decomposition, lk: f64) -> IsotropyResiduals {
    let d = dec.dim();
    IsotropyResiduals {
        volume_error: (dec.total_volume() - 1.0).abs(),
        centroid_norm: dec.centroid().norm(),
        covariance_error: (dec.covariance() - DMatrix::identity(d, d) * (lk * lk)).amax(),
    }
}

/// Brings `body` to isotropic position with `s Σ^{-1/2} (x - b)`, where `b`
/// is the centroid, `Σ` the covariance (principal inverse square root) and
/// `s` fixes unit volume. Then `cov = s^2 I`, so `L_K = s`.
pub fn to_isotropic(body: &ConvexBody) -> Result<(ConvexBody, IsotropicForm)> {
    let dec = decompose(body)?;
    let d = body.dim();
    let b = dec.centroid();
    let sigma = dec.covariance();
    let (values, vectors) = symmetric_eigen(&sigma);
    let max = values.max();
    let min = values.min();
    if !(min > 0.0) || max / min > MAX_CONDITION {
        return Err(Error::IllConditioned(if min > 0.0 { max / min } else { f64::INFINITY }));
    }
    let inv_sqrt = DMatrix::from_diagonal(&values.map(|x| 1.0 / x.sqrt()));
    let w = &vectors * inv_sqrt * vectors.transpose();
    // vol(W (K - b)) = det(W) vol(K); scale to 1.
    let det_w: f64 = values.iter().map(|x| -0.5 * x.ln()).sum::<f64>().exp();
    let s = (dec.total_volume() * det_w).powf(-1.0 / d as f64);
    let form = IsotropicForm { matrix: w * s, shift: b, lk: s };
    let image = body.affine_image(&form.affine_map())?;
    let r = isotropy_residuals(&decompose(&image)?, s);
    if r.volume_error > ISOTROPY_TOL || r.centroid_norm > ISOTROPY_TOL || r.covariance_error > ISOTROPY_TOL {
        return Err(Error::Consistency(format!(
            "isotropic image off: volume {:e}, centroid {:e}, covariance {:e}",
            r.volume_error, r.centroid_norm, r.covariance_error
        )));
    }
    Ok((image, form))
}

pub fn isotropic_constant(body: &ConvexBody) -> Result<f64> {
    Ok(to_isotropic(body)?.1.lk)
}

/// `(e^{-1} - ρ) L_K <= A_θ^{-1}(ρ) <= 10 ln(2/ρ) L_K` on an isotropic body.
pub fn check_halfspace_depth_bracket(dec: &Decomposition, lk: f64, theta: &Vector, rho: f64) -> Result<Check> {
    if !(rho > 0.0 && rho < 1.0 / E) {
        return Err(Error::OutOfRange(format!("ρ = {rho} not in (0, 1/e)")));
    }
    let t = dec.cap_quantile(theta, rho)?;
    Ok(Check::new(
        "halfspace_depth",
        &format!("t_theta(rho={rho})"),
        (1.0 / E - rho) * lk,
        t,
        10.0 * (2.0 / rho).ln() * lk,
        1e-9,
    ))
}

/// `1/(8 L_K) <= ψ_θ(0) <= 1/L_K` on an isotropic body of unit volume.
pub fn check_central_section(dec: &Decomposition, lk: f64, theta: &Vector) -> Check {
    let m = dec.marginal(theta);
    let c = dec.centroid().dot(theta);
    Check::new("central_section", "psi_theta(centroid)", 1.0 / (8.0 * lk), m.density(c), 1.0 / lk, 1e-9)
}

//! Convex bodies in half-space (H) and vertex (V) representation.
//!
//! Half-spaces are the *kept* sides `{x : <normal, x> <= offset}` with unit
//! normals; non-unit input is normalised on ingestion so that offsets compare
//! directly with support values. Bodies are immutable after construction.
//!
//! Exact conversion between the two representations is implemented for
//! `d <= 3`. Higher-dimensional bodies must be built with both
//! representations (the standard constructors do this).

use std::f64::consts::PI;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hull;
use crate::isotropic::IsotropicForm;
use crate::linalg::{basis, from_slice, Vector};
use crate::lp::{self, Constraint, LpError};

/// Membership tolerance: a point is inside iff its margin is at least `-INSIDE_TOL`.
pub const INSIDE_TOL: f64 = 1e-12;
/// A point is strictly interior iff its margin exceeds this.
pub const INTERIOR_TOL: f64 = 1e-9;
/// Vertex/half-space consistency tolerance.
pub const REP_TOL: f64 = 1e-9;

/// Closed half-space `{x : <normal, x> <= offset}` with a unit normal.
#[derive(Debug, Clone, PartialEq)]
pub struct HalfSpace {
    normal: Vector,
    offset: f64,
}

impl HalfSpace {
    /// Builds a half-space, rescaling so the normal has unit length.
    pub fn new(normal: Vector, offset: f64) -> Result<Self> {
        let len = normal.norm();
        if !(len.is_finite() && len > 1e-300) || !offset.is_finite() {
            return Err(Error::InvalidBody(format!("degenerate half-space (|normal| = {len}, offset = {offset})")));
        }
        Ok(Self { normal: normal / len, offset: offset / len })
    }

    pub fn normal(&self) -> &Vector {
        &self.normal
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    /// `offset - <normal, x>`; non-negative on the kept side.
    pub fn slack(&self, x: &Vector) -> f64 {
        self.offset - self.normal.dot(x)
    }
}

/// Affine map `x -> matrix * x + shift`.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineMap {
    pub matrix: DMatrix<f64>,
    pub shift: Vector,
}

impl AffineMap {
    pub fn new(matrix: DMatrix<f64>, shift: Vector) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() || matrix.nrows() != shift.len() {
            return Err(Error::DimensionMismatch { expected: matrix.nrows(), got: shift.len() });
        }
        Ok(Self { matrix, shift })
    }

    pub fn identity(dim: usize) -> Self {
        Self { matrix: DMatrix::identity(dim, dim), shift: Vector::zeros(dim) }
    }

    pub fn translation(shift: Vector) -> Self {
        let d = shift.len();
        Self { matrix: DMatrix::identity(d, d), shift }
    }

    pub fn apply(&self, x: &Vector) -> Vector {
        &self.matrix * x + &self.shift
    }

    /// `self ∘ inner`.
    pub fn compose(&self, inner: &AffineMap) -> AffineMap {
        AffineMap { matrix: &self.matrix * &inner.matrix, shift: &self.matrix * &inner.shift + &self.shift }
    }

    pub fn determinant(&self) -> f64 {
        self.matrix.determinant()
    }

    pub fn inverse(&self) -> Result<AffineMap> {
        let inv = self.matrix.clone().try_inverse().ok_or_else(|| Error::SingularMatrix(self.determinant().abs()))?;
        let shift = -(&inv * &self.shift);
        Ok(AffineMap { matrix: inv, shift })
    }
}

/// Standard shapes with known simplicial decompositions in every dimension.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StandardShape {
    /// `[-s, s]^d`.
    Cube {
        #[serde(rename = "halfSide")]
        half_side: f64,
    },
    /// `{x_i >= 0, sum x_i <= 1}`.
    Simplex,
    /// `{sum |x_i| <= r}`.
    CrossPolytope { radius: f64 },
    /// Regular polygon with `vertices` corners on the circle of radius
    /// `circumradius`, first vertex on the positive x axis.
    DiskPolygon { vertices: usize, circumradius: f64 },
}

impl StandardShape {
    pub fn name(&self) -> &'static str {
        match self {
            StandardShape::Cube { .. } => "cube",
            StandardShape::Simplex => "simplex",
            StandardShape::CrossPolytope { .. } => "cross_polytope",
            StandardShape::DiskPolygon { .. } => "disk_polygon",
        }
    }
}

/// Where a body came from: a standard shape, possibly followed by an affine
/// map. Used to decompose high-dimensional bodies without vertex enumeration.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Provenance {
    pub shape: Option<StandardShape>,
    pub transform: Option<AffineMap>,
}

/// A bounded convex polytope with nonempty interior.
#[derive(Debug, Clone)]
pub struct ConvexBody {
    dim: usize,
    halfspaces: Vec<HalfSpace>,
    vertices: Option<Vec<Vector>>,
    label: String,
    provenance: Provenance,
}

impl ConvexBody {
    /// Validating constructor. Missing representations are filled in for
    /// `d <= 3`.
    pub fn new(
        dim: usize,
        halfspaces: Vec<HalfSpace>,
        vertices: Option<Vec<Vector>>,
        label: impl Into<String>,
    ) -> Result<Self> {
        let label = label.into();
        if dim == 0 {
            return Err(Error::InvalidBody("dimension must be at least 1".into()));
        }
        for h in &halfspaces {
            if h.normal.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: h.normal.len() });
            }
        }
        if let Some(vs) = &vertices {
            for v in vs {
                if v.len() != dim {
                    return Err(Error::DimensionMismatch { expected: dim, got: v.len() });
                }
                if !v.iter().all(|x| x.is_finite()) {
                    return Err(Error::InvalidBody("non-finite vertex".into()));
                }
            }
        }
        let body = match (halfspaces.is_empty(), vertices) {
            (true, None) => return Err(Error::InvalidBody("no representation given".into())),
            (true, Some(vs)) => Self::from_vertices(vs, label)?,
            (false, None) => {
                let body = Self::raw(dim, halfspaces, None, label);
                body.check_bounded_interior()?;
                if dim <= 3 {
                    body.hrep_to_vrep()?
                } else {
                    body
                }
            }
            (false, Some(vs)) => {
                let body = Self::raw(dim, halfspaces, Some(vs), label);
                body.check_bounded_interior()?;
                body.check_consistency()?;
                body
            }
        };
        Ok(body)
    }

    /// Body from an H-representation.
    pub fn from_halfspaces(dim: usize, halfspaces: Vec<HalfSpace>, label: impl Into<String>) -> Result<Self> {
        Self::new(dim, halfspaces, None, label)
    }

    /// Body as the convex hull of points (`d <= 3`).
    pub fn from_vertices(points: Vec<Vector>, label: impl Into<String>) -> Result<Self> {
        let dim = points.first().map(|p| p.len()).ok_or_else(|| Error::InvalidBody("no points".into()))?;
        let body = Self::raw(dim, Vec::new(), Some(points), label.into());
        body.vrep_to_hrep()
    }

    pub(crate) fn raw(dim: usize, halfspaces: Vec<HalfSpace>, vertices: Option<Vec<Vector>>, label: String) -> Self {
        Self { dim, halfspaces, vertices, label, provenance: Provenance::default() }
    }

    /// Builds a standard body with both representations.
    pub fn standard(shape: StandardShape, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Unsupported("dimension 0".into()));
        }
        let (halfspaces, vertices) = match shape {
            StandardShape::Cube { half_side: s } => {
                if !(s > 0.0 && s.is_finite()) {
                    return Err(Error::OutOfRange(format!("cube half side {s}")));
                }
                if dim > 16 {
                    return Err(Error::Unsupported(format!("cube vertex list in dimension {dim}")));
                }
                let mut hs = Vec::with_capacity(2 * dim);
                for i in 0..dim {
                    hs.push(HalfSpace::new(basis(dim, i), s)?);
                    hs.push(HalfSpace::new(-basis(dim, i), s)?);
                }
                let vs = (0..1usize << dim)
                    .map(|mask| Vector::from_fn(dim, |i, _| if mask >> i & 1 == 1 { s } else { -s }))
                    .collect();
                (hs, vs)
            }
            StandardShape::Simplex => {
                let mut hs: Vec<HalfSpace> =
                    (0..dim).map(|i| HalfSpace::new(-basis(dim, i), 0.0)).collect::<Result<_>>()?;
                hs.push(HalfSpace::new(Vector::from_element(dim, 1.0), 1.0)?);
                let mut vs = vec![Vector::zeros(dim)];
                vs.extend((0..dim).map(|i| basis(dim, i)));
                (hs, vs)
            }
            StandardShape::CrossPolytope { radius: r } => {
                if !(r > 0.0 && r.is_finite()) {
                    return Err(Error::OutOfRange(format!("cross-polytope radius {r}")));
                }
                if dim > 16 {
                    return Err(Error::Unsupported(format!("cross-polytope facet list in dimension {dim}")));
                }
                let hs = (0..1usize << dim)
                    .map(|mask| {
                        let n = Vector::from_fn(dim, |i, _| if mask >> i & 1 == 1 { -1.0 } else { 1.0 });
                        HalfSpace::new(n, r)
                    })
                    .collect::<Result<_>>()?;
                let mut vs = Vec::with_capacity(2 * dim);
                for i in 0..dim {
                    vs.push(basis(dim, i) * r);
                    vs.push(basis(dim, i) * -r);
                }
                (hs, vs)
            }
            StandardShape::DiskPolygon { vertices: n, circumradius: r } => {
                if dim != 2 {
                    return Err(Error::Unsupported(format!("disk polygon in dimension {dim}")));
                }
                if n < 3 || !(r > 0.0 && r.is_finite()) {
                    return Err(Error::OutOfRange(format!("disk polygon with {n} vertices, radius {r}")));
                }
                let vs = (0..n)
                    .map(|k| {
                        let a = 2.0 * PI * k as f64 / n as f64;
                        from_slice(&[r * a.cos(), r * a.sin()])
                    })
                    .collect();
                let inradius = r * (PI / n as f64).cos();
                let hs = (0..n)
                    .map(|k| {
                        let a = 2.0 * PI * (k as f64 + 0.5) / n as f64;
                        HalfSpace::new(from_slice(&[a.cos(), a.sin()]), inradius)
                    })
                    .collect::<Result<_>>()?;
                (hs, vs)
            }
        };
        let label = match shape {
            StandardShape::Cube { .. } => format!("cube{dim}"),
            StandardShape::Simplex => format!("simplex{dim}"),
            StandardShape::CrossPolytope { .. } => format!("cross{dim}"),
            StandardShape::DiskPolygon { vertices, .. } => format!("ngon{vertices}"),
        };
        Ok(Self {
            dim,
            halfspaces,
            vertices: Some(vertices),
            label,
            provenance: Provenance { shape: Some(shape), transform: None },
        })
    }

    /// `[-s, s]^d`.
    pub fn cube(dim: usize, half_side: f64) -> Result<Self> {
        Self::standard(StandardShape::Cube { half_side }, dim)
    }

    /// `[-1/2, 1/2]^d`, the unit-volume cube.
    pub fn unit_cube(dim: usize) -> Result<Self> {
        Self::cube(dim, 0.5)
    }

    /// The simplex `{x_i >= 0, sum x_i <= 1}` in standard orthogonal position.
    pub fn simplex(dim: usize) -> Result<Self> {
        Self::standard(StandardShape::Simplex, dim)
    }

    /// `{sum |x_i| <= 1}`.
    pub fn cross_polytope(dim: usize) -> Result<Self> {
        Self::standard(StandardShape::CrossPolytope { radius: 1.0 }, dim)
    }

    /// Regular `n`-gon with the given circumradius.
    pub fn regular_polygon(n: usize, circumradius: f64) -> Result<Self> {
        Self::standard(StandardShape::DiskPolygon { vertices: n, circumradius }, 2)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn halfspaces(&self) -> &[HalfSpace] {
        &self.halfspaces
    }

    pub fn vertices(&self) -> Result<&[Vector]> {
        self.vertices.as_deref().ok_or(Error::MissingVertices)
    }

    pub fn has_vertices(&self) -> bool {
        self.vertices.is_some()
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub(crate) fn with_provenance(mut self, provenance: Provenance) -> Self {
        self.provenance = provenance;
        self
    }

    pub fn facet_normals(&self) -> Vec<Vector> {
        self.halfspaces.iter().map(|h| h.normal.clone()).collect()
    }

    /// Support function `max_{x in K} <y, x>`; the positively homogeneous
    /// extension is the dual norm `||y||_{K°}`.
    pub fn support(&self, direction: &Vector) -> Result<f64> {
        self.check_dim(direction)?;
        let vs = self.vertices()?;
        if direction.norm() == 0.0 {
            return Err(Error::OutOfRange("zero direction".into()));
        }
        Ok(support_of(vs, direction))
    }

    /// `(inside, margin)` with margin `min_i (offset_i - <normal_i, x>)`.
    pub fn membership(&self, point: &Vector) -> (bool, f64) {
        let margin = self.margin(point);
        (margin >= -INSIDE_TOL, margin)
    }

    pub fn margin(&self, point: &Vector) -> f64 {
        self.halfspaces.iter().map(|h| h.slack(point)).fold(f64::INFINITY, f64::min)
    }

    pub fn contains(&self, point: &Vector) -> bool {
        self.membership(point).0
    }

    /// Radial function about `center`: `sup{s >= 0 : center + s u in K}`.
    pub fn ray_shoot(&self, center: &Vector, direction: &Vector) -> Result<f64> {
        self.check_dim(center)?;
        self.check_dim(direction)?;
        let margin = self.margin(center);
        if margin <= INTERIOR_TOL {
            return Err(Error::NotInterior { margin });
        }
        let rho = self.exit_distance(center, direction);
        if !rho.is_finite() {
            return Err(Error::InvalidBody("ray does not leave the body".into()));
        }
        Ok(rho)
    }

    /// Distance along `direction` from `point` to the boundary, without the
    /// interior precondition. `+inf` when no constraint blocks the ray.
    pub(crate) fn exit_distance(&self, point: &Vector, direction: &Vector) -> f64 {
        let mut best = f64::INFINITY;
        for h in &self.halfspaces {
            let rate = h.normal.dot(direction);
            if rate > 0.0 {
                let s = (h.offset - h.normal.dot(point)) / rate;
                best = best.min(s.max(0.0));
            }
        }
        best
    }

    /// Gauge of `K - center` at `y`: `max_i <n_i, y> / (c_i - <n_i, center>)`.
    pub fn gauge(&self, center: &Vector, y: &Vector) -> f64 {
        self.halfspaces.iter().map(|h| h.normal.dot(y) / h.slack(center)).fold(f64::NEG_INFINITY, f64::max)
    }

    /// Polar body `K° = {y : <x, y> <= 1 for all x in K}`.
    pub fn polar(&self) -> Result<ConvexBody> {
        let origin = Vector::zeros(self.dim);
        let margin = self.margin(&origin);
        if margin <= INTERIOR_TOL {
            return Err(Error::NotInterior { margin });
        }
        let dual_points: Vec<Vector> = self.halfspaces.iter().map(|h| &h.normal / h.offset).collect();
        let label = format!("polar({})", self.label);
        if self.dim <= 3 {
            return ConvexBody::from_vertices(dual_points, label);
        }
        let vs = self.vertices()?;
        let halfspaces = vs.iter().map(|v| HalfSpace::new(v.clone(), 1.0)).collect::<Result<_>>()?;
        Ok(Self::raw(self.dim, halfspaces, Some(dual_points), label))
    }

    /// Image under `x -> M x + b`.
    pub fn affine_image(&self, map: &AffineMap) -> Result<ConvexBody> {
        if map.matrix.nrows() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: map.matrix.nrows() });
        }
        let det = map.determinant();
        if det.abs() <= 1e-12 {
            return Err(Error::SingularMatrix(det.abs()));
        }
        let inv_t = map.matrix.clone().try_inverse().ok_or(Error::SingularMatrix(det.abs()))?.transpose();
        let halfspaces = self
            .halfspaces
            .iter()
            .map(|h| {
                let n = &inv_t * &h.normal;
                let c = h.offset + n.dot(&map.shift);
                HalfSpace::new(n, c)
            })
            .collect::<Result<Vec<_>>>()?;
        let vertices = self.vertices.as_ref().map(|vs| vs.iter().map(|v| map.apply(v)).collect());
        let transform = match &self.provenance.transform {
            Some(t) => map.compose(t),
            None => map.clone(),
        };
        Ok(Self {
            dim: self.dim,
            halfspaces,
            vertices,
            label: self.label.clone(),
            provenance: Provenance { shape: self.provenance.shape, transform: Some(transform) },
        })
    }

    /// `K + shift`.
    pub fn translate(&self, shift: &Vector) -> Result<ConvexBody> {
        self.affine_image(&AffineMap::translation(shift.clone()))
    }

    /// `s K` (homothety about the origin).
    pub fn scale(&self, s: f64) -> Result<ConvexBody> {
        self.affine_image(&AffineMap {
            matrix: DMatrix::identity(self.dim, self.dim) * s,
            shift: Vector::zeros(self.dim),
        })
    }

    /// Homothety `center + s (K - center)`.
    pub fn scale_about(&self, center: &Vector, s: f64) -> Result<ConvexBody> {
        self.affine_image(&AffineMap { matrix: DMatrix::identity(self.dim, self.dim) * s, shift: center * (1.0 - s) })
    }

    /// Chebyshev center and radius of the H-representation.
    pub fn chebyshev_center(&self) -> Result<(Vector, f64)> {
        let d = self.dim;
        let mut cons: Vec<Constraint> = self
            .halfspaces
            .iter()
            .map(|h| {
                let mut a: Vec<f64> = h.normal.iter().copied().collect();
                a.push(1.0);
                Constraint::new(a, h.offset)
            })
            .collect();
        // Cap the radius so slabs do not make the problem unbounded.
        let mut cap = vec![0.0; d + 1];
        cap[d] = 1.0;
        cons.push(Constraint::new(cap, 1e12));
        let mut obj = vec![0.0; d + 1];
        obj[d] = 1.0;
        let sol = lp::maximize(&obj, &cons)?;
        let center = Vector::from_iterator(d, sol.x.iter().take(d).copied());
        Ok((center, sol.objective))
    }

    /// Axis-aligned bounding box `(lower, upper)`.
    pub fn bounding_box(&self) -> Result<(Vector, Vector)> {
        let d = self.dim;
        if let Some(vs) = &self.vertices {
            let lo = Vector::from_fn(d, |i, _| vs.iter().map(|v| v[i]).fold(f64::INFINITY, f64::min));
            let hi = Vector::from_fn(d, |i, _| vs.iter().map(|v| v[i]).fold(f64::NEG_INFINITY, f64::max));
            return Ok((lo, hi));
        }
        let cons = self.lp_constraints();
        let mut lo = Vector::zeros(d);
        let mut hi = Vector::zeros(d);
        for i in 0..d {
            let e: Vec<f64> = basis(d, i).iter().copied().collect();
            hi[i] = lp::maximize(&e, &cons).map_err(bound_err)?.objective;
            lo[i] = lp::minimize(&e, &cons).map_err(bound_err)?.objective;
        }
        Ok((lo, hi))
    }

    pub(crate) fn lp_constraints(&self) -> Vec<Constraint> {
        self.halfspaces.iter().map(|h| Constraint::new(h.normal.iter().copied().collect(), h.offset)).collect()
    }

    /// Fills in the V-representation from the H-representation (`d <= 3`),
    /// dropping redundant half-spaces.
    pub fn hrep_to_vrep(&self) -> Result<ConvexBody> {
        let d = self.dim;
        if d > 3 {
            return Err(Error::Unsupported(format!("exact vertex enumeration in dimension {d}")));
        }
        let (center, radius) = self.chebyshev_center()?;
        if radius <= INTERIOR_TOL {
            return Err(Error::InvalidBody("empty interior".into()));
        }
        let vertices: Vec<Vector> = match d {
            1 => {
                let hi = self
                    .halfspaces
                    .iter()
                    .filter(|h| h.normal[0] > 0.0)
                    .map(|h| h.offset / h.normal[0])
                    .fold(f64::INFINITY, f64::min);
                let lo = self
                    .halfspaces
                    .iter()
                    .filter(|h| h.normal[0] < 0.0)
                    .map(|h| h.offset / h.normal[0])
                    .fold(f64::NEG_INFINITY, f64::max);
                vec![from_slice(&[lo]), from_slice(&[hi])]
            }
            2 => {
                let dual: Vec<Vector> = self.halfspaces.iter().map(|h| &h.normal / h.slack(&center)).collect();
                let ring = hull::hull_2d(&dual)?;
                let mut out = Vec::with_capacity(ring.len());
                for k in 0..ring.len() {
                    let a = &self.halfspaces[ring[k]];
                    let b = &self.halfspaces[ring[(k + 1) % ring.len()]];
                    let m = nalgebra::Matrix2::new(a.normal[0], a.normal[1], b.normal[0], b.normal[1]);
                    let rhs = nalgebra::Vector2::new(a.offset, b.offset);
                    let x = m
                        .lu()
                        .solve(&rhs)
                        .ok_or_else(|| Error::InvalidBody("parallel adjacent edges (unbounded?)".into()))?;
                    out.push(from_slice(&[x[0], x[1]]));
                }
                if !dual_contains_origin_2d(&dual, &ring) {
                    return Err(Error::InvalidBody("unbounded half-space intersection".into()));
                }
                out
            }
            _ => {
                // Each hull triangle of the dual points names three half-spaces
                // meeting at a vertex; solve for it directly.
                let dual: Vec<Vector> = self.halfspaces.iter().map(|h| &h.normal / h.slack(&center)).collect();
                let tris = hull::hull_3d_triangles(&dual)?;
                let origin = Vector::zeros(3);
                let mut out = Vec::with_capacity(tris.len());
                for t in tris {
                    if hull::orientation(&dual, t, &origin) <= 0.0 {
                        return Err(Error::InvalidBody("unbounded half-space intersection".into()));
                    }
                    let hs = t.map(|i| &self.halfspaces[i]);
                    let m = nalgebra::Matrix3::from_fn(|r, c| hs[r].normal[c]);
                    let rhs = nalgebra::Vector3::new(hs[0].offset, hs[1].offset, hs[2].offset);
                    if let Some(x) = m.lu().solve(&rhs) {
                        let x = from_slice(&[x[0], x[1], x[2]]);
                        if x.iter().all(|v| v.is_finite()) && self.margin(&x) >= -REP_TOL * (1.0 + x.amax()) {
                            out.push(x);
                        }
                    }
                }
                out
            }
        };
        let vertices = dedup_points(vertices);
        let halfspaces = tight_halfspaces(&self.halfspaces, &vertices, d);
        Ok(Self {
            dim: d,
            halfspaces,
            vertices: Some(vertices),
            label: self.label.clone(),
            provenance: self.provenance.clone(),
        })
    }

    /// Computes the H-representation from the vertex list (`d <= 3`),
    /// dropping non-extreme points.
    pub fn vrep_to_hrep(&self) -> Result<ConvexBody> {
        let d = self.dim;
        let pts = self.vertices()?;
        if d > 3 {
            return Err(Error::Unsupported(format!("exact facet enumeration in dimension {d}")));
        }
        let (halfspaces, vertices) = match d {
            1 => {
                let lo = pts.iter().map(|p| p[0]).fold(f64::INFINITY, f64::min);
                let hi = pts.iter().map(|p| p[0]).fold(f64::NEG_INFINITY, f64::max);
                if hi - lo <= INTERIOR_TOL {
                    return Err(Error::InvalidBody("degenerate segment".into()));
                }
                (
                    vec![HalfSpace::new(from_slice(&[1.0]), hi)?, HalfSpace::new(from_slice(&[-1.0]), -lo)?],
                    vec![from_slice(&[lo]), from_slice(&[hi])],
                )
            }
            2 => {
                let ring = hull::hull_2d(pts)?;
                let mut hs = Vec::with_capacity(ring.len());
                for k in 0..ring.len() {
                    let a = &pts[ring[k]];
                    let b = &pts[ring[(k + 1) % ring.len()]];
                    let n = from_slice(&[b[1] - a[1], a[0] - b[0]]);
                    let c = n.dot(a);
                    hs.push(HalfSpace::new(n, c)?);
                }
                (hs, ring.iter().map(|&i| pts[i].clone()).collect())
            }
            _ => {
                let facets = hull::hull_3d(pts)?;
                let hs: Vec<HalfSpace> =
                    facets.iter().map(|f| HalfSpace::new(f.normal.clone(), f.offset)).collect::<Result<_>>()?;
                let candidates: Vec<Vector> = {
                    let mut used: Vec<usize> =
                        facets.iter().flat_map(|f| f.triangles.iter().flatten().copied()).collect();
                    used.sort_unstable();
                    used.dedup();
                    used.into_iter().map(|i| pts[i].clone()).collect()
                };
                let scale = pts.iter().map(|p| p.amax()).fold(0.0, f64::max).max(1.0);
                let vs = candidates
                    .into_iter()
                    .filter(|v| {
                        let tight: Vec<&HalfSpace> =
                            hs.iter().filter(|h| h.slack(v).abs() <= REP_TOL * scale).collect();
                        tight.len() >= 3 && rank_of(&tight) >= 3
                    })
                    .collect();
                (hs, dedup_points(vs))
            }
        };
        let body = Self {
            dim: d,
            halfspaces,
            vertices: Some(vertices),
            label: self.label.clone(),
            provenance: self.provenance.clone(),
        };
        body.check_bounded_interior()?;
        Ok(body)
    }

    fn check_dim(&self, v: &Vector) -> Result<()> {
        if v.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: v.len() });
        }
        Ok(())
    }

    /// Bounded and with nonempty interior, probed by linear programs along
    /// `±e_i` and a Chebyshev-ball LP.
    fn check_bounded_interior(&self) -> Result<()> {
        if self.halfspaces.is_empty() {
            return Err(Error::InvalidBody("no half-spaces".into()));
        }
        let cons = self.lp_constraints();
        for i in 0..self.dim {
            let e: Vec<f64> = basis(self.dim, i).iter().copied().collect();
            lp::maximize(&e, &cons).map_err(bound_err)?;
            lp::minimize(&e, &cons).map_err(bound_err)?;
        }
        let (_, r) = self.chebyshev_center()?;
        if r <= INTERIOR_TOL {
            return Err(Error::InvalidBody(format!("empty interior (inradius {r:e})")));
        }
        Ok(())
    }

    fn check_consistency(&self) -> Result<()> {
        let Some(vs) = &self.vertices else { return Ok(()) };
        let scale = vs.iter().map(|v| v.amax()).fold(0.0, f64::max).max(1.0);
        for v in vs {
            let m = self.margin(v);
            if m < -REP_TOL * scale {
                return Err(Error::InvalidBody(format!("vertex violates a half-space by {:e}", -m)));
            }
        }
        if self.dim <= 3 {
            for h in &self.halfspaces {
                let tight = vs.iter().filter(|v| h.slack(v).abs() <= REP_TOL * scale).count();
                if tight < self.dim {
                    return Err(Error::InvalidBody(format!(
                        "half-space tight at {tight} vertices, expected at least {}",
                        self.dim
                    )));
                }
            }
        }
        Ok(())
    }
}

fn bound_err(e: LpError) -> Error {
    match e {
        LpError::Unbounded => Error::InvalidBody("unbounded half-space intersection".into()),
        LpError::Infeasible => Error::InvalidBody("empty half-space intersection".into()),
        other => Error::Lp(other),
    }
}

pub(crate) fn support_of(vertices: &[Vector], direction: &Vector) -> f64 {
    vertices.iter().map(|v| v.dot(direction)).fold(f64::NEG_INFINITY, f64::max)
}

fn dual_contains_origin_2d(dual: &[Vector], ring: &[usize]) -> bool {
    (0..ring.len()).all(|k| {
        let a = &dual[ring[k]];
        let b = &dual[ring[(k + 1) % ring.len()]];
        // Origin strictly left of every CCW edge.
        (b[0] - a[0]) * (-a[1]) - (b[1] - a[1]) * (-a[0]) > 1e-12
    })
}

fn dedup_points(points: Vec<Vector>) -> Vec<Vector> {
    let scale = points.iter().map(|p| p.amax()).fold(0.0, f64::max).max(1.0);
    let mut out: Vec<Vector> = Vec::with_capacity(points.len());
    for p in points {
        if !out.iter().any(|q| (q - &p).amax() <= 1e-10 * scale) {
            out.push(p);
        }
    }
    out
}

fn tight_halfspaces(halfspaces: &[HalfSpace], vertices: &[Vector], d: usize) -> Vec<HalfSpace> {
    let scale = vertices.iter().map(|p| p.amax()).fold(0.0, f64::max).max(1.0);
    let mut out: Vec<HalfSpace> = Vec::new();
    for h in halfspaces {
        let tight = vertices.iter().filter(|v| h.slack(v).abs() <= REP_TOL * scale).count();
        let duplicate =
            out.iter().any(|g| (&g.normal - &h.normal).amax() <= 1e-12 && (g.offset - h.offset).abs() <= 1e-12 * scale);
        if tight >= d && !duplicate {
            out.push(h.clone());
        }
    }
    out
}

fn rank_of(hs: &[&HalfSpace]) -> usize {
    let d = hs[0].normal.len();
    let m = DMatrix::from_fn(hs.len(), d, |i, j| hs[i].normal[j]);
    m.rank(1e-9)
}

// ---------------------------------------------------------------------------
// JSON wire format

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HalfSpaceJson {
    pub normal: Vec<f64>,
    pub offset: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProvenanceJson {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shape: Option<StandardShape>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shift: Option<Vec<f64>>,
}

/// `{"dim", "label", "halfspaces": [{"normal", "offset"}], "vertices"}` plus
/// optional `provenance` and `isotropic` blocks.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BodyJson {
    pub dim: usize,
    #[serde(default)]
    pub label: String,
    #[serde(default)]
    pub halfspaces: Vec<HalfSpaceJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vertices: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<ProvenanceJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub isotropic: Option<IsotropicForm>,
}

pub(crate) fn matrix_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

pub(crate) fn matrix_from_rows(rows: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let n = rows.len();
    let m = rows.first().map_or(0, |r| r.len());
    if rows.iter().any(|r| r.len() != m) {
        return Err(Error::InvalidBody("ragged matrix".into()));
    }
    Ok(DMatrix::from_fn(n, m, |i, j| rows[i][j]))
}

impl From<&ConvexBody> for BodyJson {
    fn from(b: &ConvexBody) -> Self {
        let provenance = if b.provenance == Provenance::default() {
            None
        } else {
            Some(ProvenanceJson {
                shape: b.provenance.shape,
                matrix: b.provenance.transform.as_ref().map(|t| matrix_rows(&t.matrix)),
                shift: b.provenance.transform.as_ref().map(|t| t.shift.iter().copied().collect()),
            })
        };
        BodyJson {
            dim: b.dim,
            label: b.label.clone(),
            halfspaces: b
                .halfspaces
                .iter()
                .map(|h| HalfSpaceJson { normal: h.normal.iter().copied().collect(), offset: h.offset })
                .collect(),
            vertices: b.vertices.as_ref().map(|vs| vs.iter().map(|v| v.iter().copied().collect()).collect()),
            provenance,
            isotropic: None,
        }
    }
}

impl TryFrom<&BodyJson> for ConvexBody {
    type Error = Error;

    fn try_from(j: &BodyJson) -> Result<Self> {
        let halfspaces =
            j.halfspaces.iter().map(|h| HalfSpace::new(from_slice(&h.normal), h.offset)).collect::<Result<Vec<_>>>()?;
        let vertices = j.vertices.as_ref().map(|vs| vs.iter().map(|v| from_slice(v)).collect());
        let body = ConvexBody::new(j.dim, halfspaces, vertices, j.label.clone())?;
        let provenance = match &j.provenance {
            None => Provenance::default(),
            Some(p) => {
                let transform = match (&p.matrix, &p.shift) {
                    (Some(m), Some(s)) => Some(AffineMap::new(matrix_from_rows(m)?, from_slice(s))?),
                    (None, None) => None,
                    _ => return Err(Error::InvalidBody("provenance needs both matrix and shift".into())),
                };
                Provenance { shape: p.shape, transform }
            }
        };
        Ok(body.with_provenance(provenance))
    }
}

impl ConvexBody {
    pub fn to_json(&self) -> BodyJson {
        BodyJson::from(self)
    }

    pub fn to_json_string(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.to_json())?)
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let j: BodyJson = serde_json::from_str(s)?;
        ConvexBody::try_from(&j)
    }
}

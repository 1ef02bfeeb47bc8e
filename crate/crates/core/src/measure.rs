//! Volumetrics of polytopes: simplicial decompositions, exact moments, cap
//! fractions `A(t)`, section densities `ψ(t)`, quantiles, and Monte-Carlo
//! sampling.
//!
//! Everything exact goes through a [`Decomposition`]. For a fixed direction
//! `θ` the pushforward of the uniform measure on a simplex depends only on the
//! projections of its vertices, so a body's marginal along `θ` is a weighted
//! mixture of per-simplex distributions; see [`Marginal`].

use std::f64::consts::PI;
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::body::{ConvexBody, StandardShape};
use crate::error::{Error, Result};
use crate::hull;
use crate::linalg::{simplex_volume, Vector};
use crate::par;
use nalgebra::DMatrix;

/// Largest dimension handled by the exact marginal machinery.
pub const MAX_DIM: usize = 16;
/// Largest cube dimension decomposed exactly (`d!` simplices).
pub const MAX_CUBE_DIM: usize = 8;
/// Largest cross-polytope dimension decomposed exactly (`2^d` simplices).
pub const MAX_CROSS_DIM: usize = 10;

/// Partition of a polytope into simplices, up to measure zero.
#[derive(Debug, Clone)]
pub struct Decomposition {
    dim: usize,
    simplices: Vec<Vec<Vector>>,
    volumes: Vec<f64>,
    total_volume: f64,
}

impl Decomposition {
    /// Builds a decomposition from explicit simplices, dropping degenerate ones.
    pub fn from_simplices(dim: usize, simplices: Vec<Vec<Vector>>) -> Result<Self> {
        let mut kept = Vec::with_capacity(simplices.len());
        let mut volumes = Vec::with_capacity(simplices.len());
        for s in simplices {
            if s.len() != dim + 1 || s.iter().any(|v| v.len() != dim) {
                return Err(Error::DimensionMismatch { expected: dim + 1, got: s.len() });
            }
            let vol = simplex_volume(&s);
            if vol > 1e-14 {
                kept.push(s);
                volumes.push(vol);
            }
        }
        if kept.is_empty() {
            return Err(Error::InvalidBody("decomposition has no full-dimensional simplex".into()));
        }
        let total_volume = volumes.iter().sum();
        Ok(Self { dim, simplices: kept, volumes, total_volume })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn simplices(&self) -> &[Vec<Vector>] {
        &self.simplices
    }

    pub fn volumes(&self) -> &[f64] {
        &self.volumes
    }

    pub fn total_volume(&self) -> f64 {
        self.total_volume
    }

    fn reference(&self) -> Vector {
        self.simplices[0][0].clone()
    }

    pub fn centroid(&self) -> Vector {
        let r = self.reference();
        let mut acc = Vector::zeros(self.dim);
        for (s, &w) in self.simplices.iter().zip(&self.volumes) {
            let mean = s.iter().fold(Vector::zeros(self.dim), |a, v| a + (v - &r)) / (self.dim + 1) as f64;
            acc += mean * w;
        }
        acc / self.total_volume + r
    }

    /// Covariance of the uniform probability measure.
    ///
    /// For a simplex with vertices `v_0..v_d`,
    /// `E[X X^T] = (Σ v_i v_i^T + (Σ v_i)(Σ v_i)^T) / ((d+1)(d+2))`.
    pub fn covariance(&self) -> DMatrix<f64> {
        let d = self.dim;
        let c = self.centroid();
        let mut m = DMatrix::zeros(d, d);
        let norm = ((d + 1) * (d + 2)) as f64;
        for (s, &w) in self.simplices.iter().zip(&self.volumes) {
            let mut sum = Vector::zeros(d);
            let mut outer = DMatrix::zeros(d, d);
            for v in s {
                let y = v - &c;
                outer += &y * y.transpose();
                sum += y;
            }
            outer += &sum * sum.transpose();
            m += outer * (w / norm);
        }
        let mut m = m / self.total_volume;
        for i in 0..d {
            for j in 0..i {
                let s = 0.5 * (m[(i, j)] + m[(j, i)]);
                m[(i, j)] = s;
                m[(j, i)] = s;
            }
        }
        m
    }

    /// Distribution of `<X, θ>` for `X` uniform on the body.
    pub fn marginal(&self, theta: &Vector) -> Marginal {
        let k = self.dim + 1;
        let mut knots = Vec::with_capacity(self.simplices.len() * k);
        let mut weights = Vec::with_capacity(self.simplices.len());
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for (s, &w) in self.simplices.iter().zip(&self.volumes) {
            let start = knots.len();
            knots.extend(s.iter().map(|v| v.dot(theta)));
            let piece = &mut knots[start..];
            piece.sort_by(f64::total_cmp);
            lo = lo.min(piece[0]);
            hi = hi.max(piece[k - 1]);
            weights.push(w / self.total_volume);
        }
        Marginal { order: self.dim, knots, weights, lo, hi }
    }

    /// `vol(K ∩ {<x,θ> >= t}) / vol(K)`.
    pub fn cap_fraction(&self, theta: &Vector, t: f64) -> f64 {
        self.marginal(theta).cap(t)
    }

    pub fn cap_quantile(&self, theta: &Vector, delta: f64) -> Result<f64> {
        self.marginal(theta).quantile(delta)
    }

    pub fn median_depth(&self, theta: &Vector) -> Result<f64> {
        self.marginal(theta).quantile(0.5)
    }

    pub fn section_profile(&self, theta: &Vector, grid_size: usize) -> Result<SectionProfile> {
        SectionProfile::from_marginal(theta, &self.marginal(theta), grid_size)
    }
}

/// Mixture of simplex marginals along one direction.
///
/// Each piece stores the sorted projections of a simplex's `d + 1` vertices;
/// its density is the normalised B-spline of order `d` on those knots.
#[derive(Debug, Clone)]
pub struct Marginal {
    order: usize,
    knots: Vec<f64>,
    weights: Vec<f64>,
    lo: f64,
    hi: f64,
}

impl Marginal {
    /// `-h_K(-θ)`.
    pub fn lo(&self) -> f64 {
        self.lo
    }

    /// `h_K(θ)`.
    pub fn hi(&self) -> f64 {
        self.hi
    }

    fn pieces(&self) -> impl Iterator<Item = (f64, &[f64])> {
        self.weights.iter().copied().zip(self.knots.chunks_exact(self.order + 1))
    }

    /// Sorted distinct vertex projections; `ψ` is smooth between them.
    pub fn kinks(&self) -> Vec<f64> {
        let mut k = self.knots.clone();
        k.sort_by(f64::total_cmp);
        k.dedup();
        k
    }

    /// `A(t)`: mass of `{<x,θ> >= t}`.
    pub fn cap(&self, t: f64) -> f64 {
        if t <= self.lo {
            return 1.0;
        }
        if t >= self.hi {
            return 0.0;
        }
        let mut buf = [0.0; MAX_DIM + 1];
        let mut total = 0.0;
        for (w, s) in self.pieces() {
            if t <= s[0] {
                total += w;
            } else if t < s[s.len() - 1] {
                let b = &mut buf[..s.len()];
                b.copy_from_slice(s);
                total += w * simplex_cap(b, t);
            }
        }
        total.clamp(0.0, 1.0)
    }

    /// Right-continuous density `ψ(t)`.
    pub fn density(&self, t: f64) -> f64 {
        self.pieces().map(|(w, s)| w * bspline(s, t, false)).sum()
    }

    /// Left-continuous density `ψ(t-)`.
    pub fn density_left(&self, t: f64) -> f64 {
        self.pieces().map(|(w, s)| w * bspline(s, t, true)).sum()
    }

    /// Density with one-sided limits at the support endpoints, so that
    /// `ψ(lo)` and `ψ(hi)` are the boundary values of the section function.
    pub fn section_density(&self, t: f64) -> f64 {
        if t >= self.hi {
            self.density_left(self.hi)
        } else {
            self.density(t.max(self.lo))
        }
    }

    /// `A^{-1}(δ)` by bisection; stops when the bracket is below
    /// `1e-12 * (hi - lo)`.
    pub fn quantile(&self, delta: f64) -> Result<f64> {
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::OutOfRange(format!("cap mass {delta} not in (0, 1)")));
        }
        let (mut a, mut b) = (self.lo, self.hi);
        let stop = 1e-12 * (self.hi - self.lo);
        while b - a > stop {
            let mid = 0.5 * (a + b);
            if mid <= a || mid >= b {
                break;
            }
            let m = self.cap(mid);
            if m == delta {
                return Ok(mid);
            }
            if m > delta {
                a = mid;
            } else {
                b = mid;
            }
        }
        Ok(0.5 * (a + b))
    }
}

/// Fraction of a simplex lying in `{<x,θ> >= t}` given its vertex
/// projections `s` (modified in place, restored on return).
///
/// Splitting the simplex by the hyperplane through the point where level `t`
/// crosses the edge from the lowest to the highest vertex (and through all
/// remaining vertices) gives two simplices whose volume ratio is the edge
/// ratio `w`; in each one vertex moves onto level `t`.
fn simplex_cap(s: &mut [f64], t: f64) -> f64 {
    let mut above = 0;
    let mut below = 0;
    let mut u = 0;
    let mut l = 0;
    for i in 0..s.len() {
        if s[i] > t {
            if above == 0 || s[i] > s[u] {
                u = i;
            }
            above += 1;
        } else if s[i] < t {
            if below == 0 || s[i] < s[l] {
                l = i;
            }
            below += 1;
        }
    }
    if above == 0 {
        return 0.0;
    }
    if below == 0 {
        return 1.0;
    }
    if above == 1 {
        // The cap is the corner simplex at vertex u.
        let top = s[u];
        return s.iter().enumerate().filter(|&(i, _)| i != u).map(|(_, &x)| (top - t) / (top - x)).product();
    }
    if below == 1 {
        let bottom = s[l];
        let rest: f64 =
            s.iter().enumerate().filter(|&(i, _)| i != l).map(|(_, &x)| (t - bottom) / (x - bottom)).product();
        return 1.0 - rest;
    }
    let (su, sl) = (s[u], s[l]);
    let w = (t - sl) / (su - sl);
    s[u] = t;
    let lower_part = simplex_cap(s, t);
    s[u] = su;
    s[l] = t;
    let upper_part = simplex_cap(s, t);
    s[l] = sl;
    w * lower_part + (1.0 - w) * upper_part
}

/// Normalised B-spline (unit integral) on sorted knots `x`, evaluated by the
/// de Boor-Cox recursion. Coincident knots give zero-width base intervals.
fn bspline(x: &[f64], t: f64, left: bool) -> f64 {
    let k = x.len() - 1;
    if t < x[0] || t > x[k] {
        return 0.0;
    }
    let mut m = [0.0; MAX_DIM + 1];
    for i in 0..k {
        let width = x[i + 1] - x[i];
        let inside = if left { x[i] < t && t <= x[i + 1] } else { x[i] <= t && t < x[i + 1] };
        m[i] = if width > 0.0 && inside { 1.0 / width } else { 0.0 };
    }
    for r in 2..=k {
        let c = r as f64 / (r - 1) as f64;
        for i in 0..=(k - r) {
            let width = x[i + r] - x[i];
            m[i] = if width > 0.0 { c * ((t - x[i]) * m[i] + (x[i + r] - t) * m[i + 1]) / width } else { 0.0 };
        }
    }
    m[0]
}

/// Section function and cap fractions along one direction, sampled on a grid.
#[derive(Debug, Clone)]
pub struct SectionProfile {
    pub direction: Vector,
    /// `h_K(θ)`.
    pub h_plus: f64,
    /// `h_K(-θ)`.
    pub h_minus: f64,
    pub grid: Vec<f64>,
    pub psi: Vec<f64>,
    pub a: Vec<f64>,
    pub median: f64,
}

impl SectionProfile {
    /// Uniform grid of `grid_size` points on the support, refined by the
    /// vertex projections (where `ψ` may have kinks).
    pub fn from_marginal(theta: &Vector, marginal: &Marginal, grid_size: usize) -> Result<Self> {
        if grid_size < 16 {
            return Err(Error::OutOfRange(format!("grid size {grid_size} below 16")));
        }
        let (lo, hi) = (marginal.lo(), marginal.hi());
        let mut grid: Vec<f64> = (0..grid_size).map(|i| lo + (hi - lo) * i as f64 / (grid_size - 1) as f64).collect();
        grid.extend(marginal.kinks().into_iter().filter(|&t| t > lo && t < hi));
        grid.sort_by(f64::total_cmp);
        let tol = 1e-13 * (hi - lo);
        grid.dedup_by(|b, a| (*b - *a).abs() <= tol);
        let psi = grid.iter().map(|&t| marginal.section_density(t)).collect();
        let a = grid.iter().map(|&t| marginal.cap(t)).collect();
        Ok(Self { direction: theta.clone(), h_plus: hi, h_minus: -lo, grid, psi, a, median: marginal.quantile(0.5)? })
    }

    /// Trapezoidal integral of `ψ` over the grid.
    pub fn trapezoid_mass(&self) -> f64 {
        self.grid.windows(2).zip(self.psi.windows(2)).map(|(t, p)| 0.5 * (t[1] - t[0]) * (p[0] + p[1])).sum()
    }

    /// Writes `t,psi,A` rows.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["t", "psi", "A"])?;
        for ((t, p), a) in self.grid.iter().zip(&self.psi).zip(&self.a) {
            w.write_record([t.to_string(), p.to_string(), a.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Whether `body` has an exact simplicial decomposition available.
pub fn is_decomposable(body: &ConvexBody) -> bool {
    let d = body.dim();
    match body.provenance().shape {
        Some(StandardShape::Cube { .. }) => d <= MAX_CUBE_DIM,
        Some(StandardShape::CrossPolytope { .. }) => d <= MAX_CROSS_DIM,
        Some(StandardShape::Simplex) => d <= MAX_DIM,
        Some(StandardShape::DiskPolygon { .. }) => true,
        None => d <= 3 && body.has_vertices(),
    }
}

/// Simplicial decomposition of a body.
///
/// Standard shapes (possibly under an affine map) use their known
/// decompositions in any supported dimension; other bodies need `d <= 3`
/// and a vertex list.
pub fn decompose(body: &ConvexBody) -> Result<Decomposition> {
    let d = body.dim();
    if d > MAX_DIM {
        return Err(Error::Unsupported(format!("exact volumetrics in dimension {d}")));
    }
    let simplices = match body.provenance().shape {
        Some(shape) => {
            let raw = standard_simplices(shape, d)?;
            let mapped: Vec<Vec<Vector>> = match &body.provenance().transform {
                Some(map) => raw.into_iter().map(|s| s.iter().map(|v| map.apply(v)).collect()).collect(),
                None => raw,
            };
            check_inside(body, &mapped)?;
            mapped
        }
        None => general_simplices(body)?,
    };
    Decomposition::from_simplices(d, simplices)
}

fn check_inside(body: &ConvexBody, simplices: &[Vec<Vector>]) -> Result<()> {
    // Vertices repeat across simplices; checking the first few simplices
    // catches metadata that does not describe this body.
    let scale = body.bounding_box().map(|(lo, hi)| lo.amax().max(hi.amax())).unwrap_or(1.0).max(1.0);
    for s in simplices.iter().take(64) {
        for v in s {
            if body.margin(v) < -1e-9 * scale {
                return Err(Error::Consistency("decomposition leaves the body; provenance does not match".into()));
            }
        }
    }
    Ok(())
}

fn standard_simplices(shape: StandardShape, d: usize) -> Result<Vec<Vec<Vector>>> {
    match shape {
        StandardShape::Simplex => {
            let mut s = vec![Vector::zeros(d)];
            s.extend((0..d).map(|i| crate::linalg::basis(d, i)));
            Ok(vec![s])
        }
        StandardShape::Cube { half_side } => {
            if d > MAX_CUBE_DIM {
                return Err(Error::Unsupported(format!("cube decomposition in dimension {d} ({d}! simplices)")));
            }
            // One order simplex per permutation: walk from the lowest corner
            // along the axes in permutation order.
            let mut out = Vec::new();
            let mut perm: Vec<usize> = (0..d).collect();
            loop {
                let mut v = Vector::from_element(d, -half_side);
                let mut s = vec![v.clone()];
                for &axis in &perm {
                    v[axis] = half_side;
                    s.push(v.clone());
                }
                out.push(s);
                if !next_permutation(&mut perm) {
                    break;
                }
            }
            Ok(out)
        }
        StandardShape::CrossPolytope { radius } => {
            if d > MAX_CROSS_DIM {
                return Err(Error::Unsupported(format!("cross-polytope decomposition in dimension {d}")));
            }
            Ok((0..1usize << d)
                .map(|mask| {
                    let mut s = vec![Vector::zeros(d)];
                    for i in 0..d {
                        let sign = if mask >> i & 1 == 1 { -1.0 } else { 1.0 };
                        let mut v = Vector::zeros(d);
                        v[i] = sign * radius;
                        s.push(v);
                    }
                    s
                })
                .collect())
        }
        StandardShape::DiskPolygon { vertices: n, circumradius: r } => {
            let corner = |k: usize| {
                let a = 2.0 * PI * (k % n) as f64 / n as f64;
                crate::linalg::from_slice(&[r * a.cos(), r * a.sin()])
            };
            Ok((0..n).map(|k| vec![Vector::zeros(2), corner(k), corner(k + 1)]).collect())
        }
    }
}

fn next_permutation(p: &mut [usize]) -> bool {
    let n = p.len();
    if n < 2 {
        return false;
    }
    let mut i = n - 1;
    while i > 0 && p[i - 1] >= p[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = n - 1;
    while p[j] <= p[i - 1] {
        j -= 1;
    }
    p.swap(i - 1, j);
    p[i..].reverse();
    true
}

fn general_simplices(body: &ConvexBody) -> Result<Vec<Vec<Vector>>> {
    let d = body.dim();
    let vs = body.vertices()?;
    match d {
        1 => {
            let lo = vs.iter().map(|v| v[0]).fold(f64::INFINITY, f64::min);
            let hi = vs.iter().map(|v| v[0]).fold(f64::NEG_INFINITY, f64::max);
            Ok(vec![vec![crate::linalg::from_slice(&[lo]), crate::linalg::from_slice(&[hi])]])
        }
        2 => {
            let ring = hull::hull_2d(vs)?;
            let apex = &vs[ring[0]];
            Ok((1..ring.len() - 1).map(|k| vec![apex.clone(), vs[ring[k]].clone(), vs[ring[k + 1]].clone()]).collect())
        }
        3 => {
            let tris = hull::hull_3d_triangles(vs)?;
            let center = vs.iter().fold(Vector::zeros(3), |a, v| a + v) / vs.len() as f64;
            Ok(tris
                .into_iter()
                .map(|t| vec![center.clone(), vs[t[0]].clone(), vs[t[1]].clone(), vs[t[2]].clone()])
                .collect())
        }
        _ => Err(Error::Unsupported(format!(
            "exact decomposition of a general body in dimension {d}; use a standard shape or Monte-Carlo mode"
        ))),
    }
}

pub fn volume(body: &ConvexBody) -> Result<f64> {
    Ok(decompose(body)?.total_volume())
}

pub fn centroid(body: &ConvexBody) -> Result<Vector> {
    Ok(decompose(body)?.centroid())
}

pub fn covariance(body: &ConvexBody) -> Result<DMatrix<f64>> {
    Ok(decompose(body)?.covariance())
}

pub fn cap_volume_fraction(body: &ConvexBody, theta: &Vector, t: f64) -> Result<f64> {
    Ok(decompose(body)?.cap_fraction(theta, t))
}

pub fn cap_quantile(body: &ConvexBody, theta: &Vector, delta: f64) -> Result<f64> {
    decompose(body)?.cap_quantile(theta, delta)
}

pub fn median_depth(body: &ConvexBody, theta: &Vector) -> Result<f64> {
    decompose(body)?.median_depth(theta)
}

pub fn section_profile(body: &ConvexBody, theta: &Vector, grid_size: usize) -> Result<SectionProfile> {
    decompose(body)?.section_profile(theta, grid_size)
}

/// `vol_d(B_2^d) = π^{d/2} / Γ(d/2 + 1)`.
pub fn ball_volume(d: usize) -> f64 {
    let h = d as f64 / 2.0;
    (h * PI.ln() - statrs::function::gamma::ln_gamma(h + 1.0)).exp()
}

// ---------------------------------------------------------------------------
// Monte Carlo

/// Points stored row-major in one flat buffer.
#[derive(Debug, Clone, PartialEq)]
pub struct Samples {
    dim: usize,
    coords: Vec<f64>,
}

impl Samples {
    pub fn new(dim: usize, coords: Vec<f64>) -> Result<Self> {
        if dim == 0 || !coords.len().is_multiple_of(dim) {
            return Err(Error::DimensionMismatch { expected: dim, got: coords.len() });
        }
        Ok(Self { dim, coords })
    }

    pub fn from_points(points: &[Vector]) -> Result<Self> {
        let dim = points.first().map(|p| p.len()).ok_or_else(|| Error::Sampling("empty point set".into()))?;
        let mut coords = Vec::with_capacity(points.len() * dim);
        for p in points {
            if p.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: p.len() });
            }
            coords.extend(p.iter());
        }
        Ok(Self { dim, coords })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &[f64]> {
        self.coords.chunks_exact(self.dim)
    }

    pub fn point(&self, i: usize) -> Vector {
        Vector::from_column_slice(&self.coords[i * self.dim..(i + 1) * self.dim])
    }

    /// `<x_i, θ>` for every sample.
    pub fn project(&self, theta: &Vector) -> Vec<f64> {
        let th = theta.as_slice();
        self.iter().map(|p| p.iter().zip(th).map(|(a, b)| a * b).sum()).collect()
    }

    pub fn mean(&self) -> Vector {
        let mut m = Vector::zeros(self.dim);
        for p in self.iter() {
            for (i, x) in p.iter().enumerate() {
                m[i] += x;
            }
        }
        m / self.len() as f64
    }

    /// Sample covariance (denominator `n - 1`).
    pub fn covariance(&self) -> DMatrix<f64> {
        let mean = self.mean();
        let d = self.dim;
        let mut c = DMatrix::zeros(d, d);
        for p in self.iter() {
            for i in 0..d {
                let yi = p[i] - mean[i];
                for j in 0..=i {
                    c[(i, j)] += yi * (p[j] - mean[j]);
                }
            }
        }
        for i in 0..d {
            for j in 0..i {
                c[(j, i)] = c[(i, j)];
            }
        }
        c / (self.len() as f64 - 1.0)
    }
}

/// Samples per independent RNG stream. Fixed so that output does not depend
/// on the number of threads.
const CHUNK: usize = 8192;

fn chunk_rng(seed: u64, chunk: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chunk as u64);
    rng
}

/// `n` uniform points in `body`, deterministic in `seed`.
///
/// Rejection from the bounding box for `d <= 4`; hit-and-run otherwise, with
/// `8 d^2` burn-in steps per stream and `d^2` steps between kept points.
pub fn sample_uniform(body: &ConvexBody, n: usize, seed: u64) -> Result<Samples> {
    if n == 0 {
        return Err(Error::OutOfRange("sample count must be positive".into()));
    }
    let d = body.dim();
    let chunks = n.div_ceil(CHUNK);
    let parts: Vec<Vec<f64>> = if d <= 4 {
        let (lo, hi) = body.bounding_box()?;
        par::map_range(chunks, |c| {
            let m = CHUNK.min(n - c * CHUNK);
            rejection_chunk(body, &lo, &hi, m, chunk_rng(seed, c))
        })
        .into_iter()
        .collect::<Result<_>>()?
    } else {
        let (start, _) = body.chebyshev_center()?;
        par::map_range(chunks, |c| {
            let m = CHUNK.min(n - c * CHUNK);
            hit_and_run_chunk(body, &start, m, chunk_rng(seed, c))
        })
        .into_iter()
        .collect::<Result<_>>()?
    };
    Samples::new(d, parts.concat())
}

fn rejection_chunk(body: &ConvexBody, lo: &Vector, hi: &Vector, m: usize, mut rng: ChaCha8Rng) -> Result<Vec<f64>> {
    let d = body.dim();
    let mut out = Vec::with_capacity(m * d);
    let mut x = Vector::zeros(d);
    let mut attempts: u64 = 0;
    let mut accepted: u64 = 0;
    while accepted < m as u64 {
        for i in 0..d {
            x[i] = lo[i] + (hi[i] - lo[i]) * rng.random::<f64>();
        }
        attempts += 1;
        if body.margin(&x) >= 0.0 {
            out.extend(x.iter());
            accepted += 1;
        } else if attempts >= 1_000_000 && accepted * 1_000_000 < attempts {
            return Err(Error::Sampling(format!("rejection efficiency below 1e-6 ({accepted} of {attempts})")));
        }
    }
    Ok(out)
}

fn hit_and_run_chunk(body: &ConvexBody, start: &Vector, m: usize, mut rng: ChaCha8Rng) -> Result<Vec<f64>> {
    let d = body.dim();
    let mut out = Vec::with_capacity(m * d);
    let mut x = start.clone();
    let mut u = Vector::zeros(d);
    let mut step = |x: &mut Vector, rng: &mut ChaCha8Rng| -> Result<()> {
        for _ in 0..100 {
            for i in 0..d {
                u[i] = rng.sample(StandardNormal);
            }
            let len = u.norm();
            if len == 0.0 {
                continue;
            }
            u /= len;
            let fwd = body.exit_distance(x, &u);
            let back = body.exit_distance(x, &(-&u));
            if !(fwd.is_finite() && back.is_finite()) {
                return Err(Error::Sampling("unbounded chord in hit-and-run".into()));
            }
            let s = -back + (fwd + back) * rng.random::<f64>();
            let y = &*x + &u * s;
            if body.margin(&y) >= 0.0 {
                *x = y;
                return Ok(());
            }
        }
        Err(Error::Sampling("hit-and-run could not stay inside the body".into()))
    };
    for _ in 0..8 * d * d {
        step(&mut x, &mut rng)?;
    }
    for _ in 0..m {
        for _ in 0..d * d {
            step(&mut x, &mut rng)?;
        }
        out.extend(x.iter());
    }
    Ok(out)
}

/// Empirical `(1-δ)`-quantile of `<x_i, θ>`: the order statistic of rank
/// `ceil((1-δ) n)`. Requires `n δ >= 10`.
pub fn mc_cap_quantile(samples: &Samples, theta: &Vector, delta: f64) -> Result<f64> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::OutOfRange(format!("cap mass {delta} not in (0, 1)")));
    }
    let n = samples.len();
    if (n as f64) * delta < 10.0 {
        return Err(Error::Sampling(format!("{n} samples too few for cap mass {delta} (need n·δ >= 10)")));
    }
    let mut proj = samples.project(theta);
    Ok(order_statistic(&mut proj, quantile_rank(n, delta)))
}

/// `ceil((1-δ) n)`, guarded against round-off, clamped to `1..=n`.
pub fn quantile_rank(n: usize, delta: f64) -> usize {
    (((1.0 - delta) * n as f64 - 1e-9).ceil() as usize).clamp(1, n)
}

/// `k`-th smallest value (1-based).
pub fn order_statistic(values: &mut [f64], k: usize) -> f64 {
    let (_, v, _) = values.select_nth_unstable_by(k - 1, f64::total_cmp);
    *v
}

/// Fraction of samples with `<x, θ> >= t`.
pub fn mc_cap_fraction(samples: &Samples, theta: &Vector, t: f64) -> f64 {
    let proj = samples.project(theta);
    proj.iter().filter(|&&p| p >= t).count() as f64 / proj.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{basis, from_slice};
    use approx::assert_abs_diff_eq;

    fn v(xs: &[f64]) -> Vector {
        from_slice(xs)
    }

    /// Brute-force cap fraction of a 2-D simplex by clipping the triangle
    /// against the half-plane (Sutherland-Hodgman) and taking polygon areas.
    fn clipped_area_fraction(tri: &[Vector], theta: &Vector, t: f64) -> f64 {
        let area = |poly: &[Vector]| -> f64 {
            let n = poly.len();
            (0..n)
                .map(|i| {
                    let (a, b) = (&poly[i], &poly[(i + 1) % n]);
                    a[0] * b[1] - a[1] * b[0]
                })
                .sum::<f64>()
                .abs()
                / 2.0
        };
        let mut out = vec![];
        for i in 0..tri.len() {
            let (a, b) = (&tri[i], &tri[(i + 1) % tri.len()]);
            let (fa, fb) = (a.dot(theta) - t, b.dot(theta) - t);
            if fa >= 0.0 {
                out.push(a.clone());
            }
            if (fa >= 0.0) != (fb >= 0.0) {
                out.push(a + (b - a) * (fa / (fa - fb)));
            }
        }
        if out.len() < 3 {
            0.0
        } else {
            area(&out) / area(tri)
        }
    }

    #[test]
    fn decompositions() {
        let s3 = decompose(&ConvexBody::simplex(3).unwrap()).unwrap();
        assert_eq!(s3.simplices().len(), 1);
        assert_abs_diff_eq!(s3.total_volume(), 1.0 / 6.0, epsilon = 1e-15);

        let cube = ConvexBody::cube(3, 0.5).unwrap().translate(&v(&[0.5, 0.5, 0.5])).unwrap();
        let dc = decompose(&cube).unwrap();
        assert_eq!(dc.simplices().len(), 6);
        for &w in dc.volumes() {
            assert_abs_diff_eq!(w, 1.0 / 6.0, epsilon = 1e-14);
        }
        assert_abs_diff_eq!(dc.total_volume(), 1.0, epsilon = 1e-14);

        let x = decompose(&ConvexBody::cross_polytope(2).unwrap()).unwrap();
        assert_eq!(x.simplices().len(), 4);
        for &w in x.volumes() {
            assert_abs_diff_eq!(w, 0.5, epsilon = 1e-15);
        }
        assert_abs_diff_eq!(x.total_volume(), 2.0, epsilon = 1e-15);
    }

    #[test]
    fn general_decomposition_matches_standard_one() {
        for body in [ConvexBody::cube(3, 1.0).unwrap(), ConvexBody::cross_polytope(3).unwrap()] {
            let general = ConvexBody::from_vertices(body.vertices().unwrap().to_vec(), "g").unwrap();
            let a = decompose(&body).unwrap();
            let b = decompose(&general).unwrap();
            assert_abs_diff_eq!(a.total_volume(), b.total_volume(), epsilon = 1e-12);
            assert!((a.covariance() - b.covariance()).amax() < 1e-12);
            let th = v(&[0.3, -0.5, 0.8]).normalize();
            for t in [-0.7, -0.1, 0.2, 0.6] {
                assert_abs_diff_eq!(a.cap_fraction(&th, t), b.cap_fraction(&th, t), epsilon = 1e-13);
            }
        }
    }

    #[test]
    fn moments() {
        let s = decompose(&ConvexBody::simplex(2).unwrap()).unwrap();
        assert_abs_diff_eq!(s.total_volume(), 0.5, epsilon = 1e-15);
        assert!((s.centroid() - v(&[1.0 / 3.0, 1.0 / 3.0])).amax() < 1e-15);
        // Triangle with vertices 0, e1, e2: Var x1 = 1/18, Cov = -1/36.
        let c = s.covariance();
        assert_abs_diff_eq!(c[(0, 0)], 1.0 / 18.0, epsilon = 1e-15);
        assert_abs_diff_eq!(c[(0, 1)], -1.0 / 36.0, epsilon = 1e-15);

        for d in 1..=4 {
            let cov = covariance(&ConvexBody::unit_cube(d).unwrap()).unwrap();
            assert!((cov - DMatrix::identity(d, d) / 12.0).amax() < 1e-14);
        }
    }

    #[test]
    fn covariance_matches_monte_carlo() {
        let body = ConvexBody::simplex(2).unwrap();
        let exact = covariance(&body).unwrap();
        let n = 1_000_000;
        let s = sample_uniform(&body, n, 11).unwrap();
        let mc = s.covariance();
        // Var of x1^2-type products is bounded by E[x^4] <= 1 on this body.
        let se = (1.0 / n as f64).sqrt();
        assert!((exact - mc).amax() < 3.0 * se, "MC covariance off");
    }

    #[test]
    fn cap_fraction_examples() {
        let cube = ConvexBody::cube(2, 1.0).unwrap();
        assert_abs_diff_eq!(cap_volume_fraction(&cube, &basis(2, 0), 0.8).unwrap(), 0.1, epsilon = 1e-15);
        for d in 1..=5 {
            let s = decompose(&ConvexBody::simplex(d).unwrap()).unwrap();
            for t in [0.0, 0.1, 0.5, 0.9, 1.0] {
                let expected = (1.0f64 - t).powi(d as i32);
                assert_abs_diff_eq!(s.cap_fraction(&basis(d, 0), t), expected, epsilon = 1e-15);
            }
        }
        let body = ConvexBody::cross_polytope(3).unwrap();
        let th = v(&[0.2, 0.4, -0.6]).normalize();
        let h_plus = body.support(&th).unwrap();
        let h_minus = body.support(&-&th).unwrap();
        assert_eq!(cap_volume_fraction(&body, &th, -h_minus).unwrap(), 1.0);
        assert_eq!(cap_volume_fraction(&body, &th, h_plus).unwrap(), 0.0);
    }

    #[test]
    fn simplex_cap_matches_polygon_clipping() {
        let tris = [
            vec![v(&[0.0, 0.0]), v(&[1.0, 0.2]), v(&[0.3, 0.9])],
            vec![v(&[-1.0, 0.5]), v(&[2.0, -0.4]), v(&[0.1, 1.3])],
        ];
        for tri in &tris {
            let dec = Decomposition::from_simplices(2, vec![tri.clone()]).unwrap();
            for k in 0..24 {
                let a = k as f64 * 0.27;
                let th = v(&[a.cos(), a.sin()]);
                let m = dec.marginal(&th);
                for j in 0..=10 {
                    let t = m.lo() + (m.hi() - m.lo()) * j as f64 / 10.0;
                    assert_abs_diff_eq!(m.cap(t), clipped_area_fraction(tri, &th, t), epsilon = 1e-13);
                }
            }
        }
    }

    #[test]
    fn quantile_examples() {
        let cube = ConvexBody::cube(2, 1.0).unwrap();
        assert_abs_diff_eq!(cap_quantile(&cube, &basis(2, 0), 0.1).unwrap(), 0.8, epsilon = 1e-11);
        let diag = v(&[1.0, 1.0]).normalize();
        let expected = (2.0 - (8.0f64 * 0.02).sqrt()) / 2f64.sqrt();
        assert_abs_diff_eq!(cap_quantile(&cube, &diag, 0.02).unwrap(), expected, epsilon = 1e-11);
        for d in 2..=4 {
            let s = ConvexBody::simplex(d).unwrap();
            for delta in [0.001, 0.05, 0.3] {
                let expected = 1.0 - f64::powf(delta, 1.0 / d as f64);
                assert_abs_diff_eq!(cap_quantile(&s, &basis(d, 0), delta).unwrap(), expected, epsilon = 1e-11);
            }
        }
        assert!(cap_quantile(&cube, &basis(2, 0), 0.0).is_err());
        assert!(cap_quantile(&cube, &basis(2, 0), 1.0).is_err());
    }

    #[test]
    fn median_examples() {
        let x = ConvexBody::cross_polytope(3).unwrap();
        let th = v(&[0.1, -0.3, 0.7]).normalize();
        assert_abs_diff_eq!(median_depth(&x, &th).unwrap(), 0.0, epsilon = 1e-10);
        let s2 = ConvexBody::simplex(2).unwrap();
        assert_abs_diff_eq!(median_depth(&s2, &basis(2, 0)).unwrap(), 1.0 - 0.5f64.sqrt(), epsilon = 1e-11);
        let s3 = ConvexBody::simplex(3).unwrap();
        assert_abs_diff_eq!(median_depth(&s3, &basis(3, 0)).unwrap(), 1.0 - 0.5f64.cbrt(), epsilon = 1e-11);
    }

    #[test]
    fn profile_examples() {
        let cube = ConvexBody::cube(2, 1.0).unwrap();
        let p = section_profile(&cube, &basis(2, 0), 32).unwrap();
        assert!(p.psi.iter().all(|&x| (x - 0.5).abs() < 1e-15));
        assert_abs_diff_eq!(p.trapezoid_mass(), 1.0, epsilon = 1e-14);

        let s = ConvexBody::simplex(2).unwrap();
        let p = section_profile(&s, &basis(2, 0), 17).unwrap();
        for (&t, &psi) in p.grid.iter().zip(&p.psi) {
            assert_abs_diff_eq!(psi, 2.0 * (1.0 - t), epsilon = 1e-14);
        }
        assert_abs_diff_eq!(p.trapezoid_mass(), 1.0, epsilon = 1e-14);
        assert!(p.a.windows(2).all(|w| w[1] <= w[0]));
        assert_eq!(p.a[0], 1.0);
        assert_eq!(*p.a.last().unwrap(), 0.0);

        let s3 = ConvexBody::simplex(3).unwrap();
        let p = section_profile(&s3, &v(&[1.0, 2.0, 2.0]).normalize(), 4096).unwrap();
        assert_abs_diff_eq!(p.trapezoid_mass(), 1.0, epsilon = 1e-6);
        assert!(section_profile(&s3, &basis(3, 0), 8).is_err());
    }

    #[test]
    fn density_matches_cap_derivative() {
        let body = ConvexBody::cross_polytope(3).unwrap();
        let dec = decompose(&body).unwrap();
        let th = v(&[0.3, 0.5, -0.2]).normalize();
        let m = dec.marginal(&th);
        let h = 1e-5;
        for k in 1..20 {
            let t = m.lo() + (m.hi() - m.lo()) * k as f64 / 20.0 + 1e-3;
            let numeric = (m.cap(t - h) - m.cap(t + h)) / (2.0 * h);
            assert_abs_diff_eq!(m.density(t), numeric, epsilon = 1e-6);
        }
    }

    #[test]
    fn ball_volumes() {
        assert_abs_diff_eq!(ball_volume(2), PI, epsilon = 1e-14);
        assert_abs_diff_eq!(ball_volume(3), 4.0 * PI / 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(ball_volume(4), PI * PI / 2.0, epsilon = 1e-13);
    }

    #[test]
    fn sampling_is_deterministic_and_inside() {
        let body = ConvexBody::simplex(3).unwrap();
        let a = sample_uniform(&body, 20_000, 5).unwrap();
        let b = sample_uniform(&body, 20_000, 5).unwrap();
        assert_eq!(a, b);
        assert!(a.iter().all(|p| body.contains(&from_slice(p))));
        let c = sample_uniform(&body, 20_000, 6).unwrap();
        assert_ne!(a, c);

        let hd = ConvexBody::cube(5, 1.0).unwrap();
        let s = sample_uniform(&hd, 2000, 1).unwrap();
        assert_eq!(s.len(), 2000);
        assert!(s.iter().all(|p| hd.contains(&from_slice(p))));
    }

    #[test]
    fn sample_mean_of_cube() {
        let body = ConvexBody::cube(3, 1.0).unwrap();
        let n = 1_000_000;
        let s = sample_uniform(&body, n, 3).unwrap();
        let sigma = (1.0f64 / 3.0).sqrt();
        assert!(s.mean().amax() < 3.0 * sigma / (n as f64).sqrt());
        let half = sample_uniform(&ConvexBody::unit_cube(2).unwrap(), n, 4).unwrap();
        // Var of x^2 for uniform on [-1/2, 1/2] is 1/80 - 1/144.
        let se = ((1.0 / 80.0 - 1.0 / 144.0) / n as f64).sqrt();
        let cov = half.covariance();
        assert!((cov[(0, 0)] - 1.0 / 12.0).abs() < 3.0 * se);
        assert!((cov[(1, 1)] - 1.0 / 12.0).abs() < 3.0 * se);
        assert!(cov[(0, 1)].abs() < 3.0 / (144.0 * n as f64).sqrt());
    }

    #[test]
    fn mc_quantiles() {
        let body = ConvexBody::cube(2, 1.0).unwrap();
        let s = sample_uniform(&body, 1_000_000, 9).unwrap();
        assert_abs_diff_eq!(mc_cap_quantile(&s, &basis(2, 0), 0.1).unwrap(), 0.8, epsilon = 0.01);
        assert!(mc_cap_quantile(&s, &basis(2, 0), 1e-6).is_err());

        let same = Samples::from_points(&vec![v(&[0.3, -0.2]); 100]).unwrap();
        assert_eq!(mc_cap_quantile(&same, &basis(2, 0), 0.2).unwrap(), 0.3);

        let mut values = vec![3.0, 1.0, 2.0];
        assert_eq!(quantile_rank(3, 1e-3), 3);
        assert_eq!(order_statistic(&mut values, 3), 3.0);
    }
}

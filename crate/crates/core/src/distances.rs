//! Hausdorff distance, logarithmic Hausdorff distance `d_𝔏` and the
//! Banach–Mazur bound `d_BM <= d_𝔏²`.
//!
//! `d_𝔏(A, B, x)` is the least `λ >= 1` with
//! `λ^{-1}(A - x) + x ⊂ B ⊂ λ(A - x) + x`; `d_𝔏(A, B)` minimizes over
//! interior points `x`.

use std::f64::consts::PI;

use serde::Serialize;

use crate::body::{ConvexBody, HalfSpace, INTERIOR_TOL};
use crate::error::{Error, Result};
use crate::linalg::{from_slice, normalized, Vector};
use crate::lp::{self, Constraint};
use crate::measure;
use crate::par;

#[derive(Debug, Clone, Serialize)]
pub struct HausdorffValue {
    pub value: f64,
    pub witness: Vec<f64>,
    /// `false` when `value` is only a lower bound over the evaluated directions.
    pub exact: bool,
}

/// `max_θ |h_A(θ) - h_B(θ)|` over `directions` and the facet normals of both
/// bodies. In the plane the directions are refined over the common normal
/// fan: on each arc where both supports are attained at fixed vertices `a`,
/// `b` the difference is `<a - b, θ>`, maximal at an arc end or at
/// `±(a - b)`; the result is then exact.
pub fn hausdorff(a: &ConvexBody, b: &ConvexBody, directions: &[Vector]) -> Result<HausdorffValue> {
    let d = a.dim();
    if b.dim() != d {
        return Err(Error::DimensionMismatch { expected: d, got: b.dim() });
    }
    let va = a.vertices()?;
    let vb = b.vertices()?;
    let mut candidates: Vec<Vector> = directions.iter().filter_map(normalized).collect();
    candidates.extend(a.facet_normals());
    candidates.extend(b.facet_normals());
    let exact = d <= 2;
    if d == 2 {
        let mut angles: Vec<f64> = candidates.iter().map(|u| u[1].atan2(u[0])).collect();
        angles.sort_by(f64::total_cmp);
        angles.dedup_by(|x, y| (*x - *y).abs() < 1e-15);
        for k in 0..angles.len() {
            let lo = angles[k];
            let hi = if k + 1 < angles.len() { angles[k + 1] } else { angles[0] + 2.0 * PI };
            let mid = 0.5 * (lo + hi);
            let u = from_slice(&[mid.cos(), mid.sin()]);
            let pa = argmax(va, &u);
            let pb = argmax(vb, &u);
            if let Some(w) = normalized(&(pa - pb)) {
                for s in [w.clone(), -w] {
                    let mut phi = s[1].atan2(s[0]);
                    while phi < lo {
                        phi += 2.0 * PI;
                    }
                    if phi <= hi {
                        candidates.push(s);
                    }
                }
            }
        }
    } else if d == 1 {
        candidates.push(from_slice(&[1.0]));
        candidates.push(from_slice(&[-1.0]));
    }
    let gaps = par::map(&candidates, |u| (crate::body::support_of(va, u) - crate::body::support_of(vb, u)).abs());
    let (i, value) =
        gaps.iter()
            .copied()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |best, (i, g)| if g > best.1 { (i, g) } else { best });
    if candidates.is_empty() {
        return Err(Error::OutOfRange("no directions".into()));
    }
    Ok(HausdorffValue { value, witness: candidates[i].iter().copied().collect(), exact })
}

fn argmax<'a>(points: &'a [Vector], u: &Vector) -> &'a Vector {
    points.iter().max_by(|p, q| p.dot(u).total_cmp(&q.dot(u))).expect("non-empty vertex list")
}

/// `d_𝔏(A, B, x)` with the direction realizing it.
#[derive(Debug, Clone)]
pub struct PointDistance {
    pub value: f64,
    pub witness: Vector,
}

/// Largest gauge of `outer - x` over points of `inner`, i.e. the least `λ`
/// with `inner - x ⊂ λ (outer - x)`, and the point attaining it. Uses the
/// vertices of `inner` when present, otherwise one LP per facet of `outer`.
fn max_gauge(inner: &ConvexBody, outer: &ConvexBody, x: &Vector) -> Result<(f64, Vector)> {
    if let Ok(vs) = inner.vertices() {
        let gauges = par::map(vs, |v| outer.gauge(x, &(v - x)));
        let (i, g) =
            gauges
                .iter()
                .copied()
                .enumerate()
                .fold((0, f64::NEG_INFINITY), |best, (i, g)| if g > best.1 { (i, g) } else { best });
        return Ok((g, vs[i].clone()));
    }
    let cons = inner.lp_constraints();
    let per_facet = par::try_map(outer.halfspaces(), |h: &HalfSpace| -> Result<(f64, Vector)> {
        let c: Vec<f64> = h.normal().iter().copied().collect();
        let sol = lp::maximize(&c, &cons)?;
        let y = Vector::from_iterator(x.len(), sol.x.iter().copied());
        Ok(((sol.objective - h.normal().dot(x)) / h.slack(x), y))
    })?;
    Ok(per_facet.into_iter().fold((f64::NEG_INFINITY, x.clone()), |best, cur| if cur.0 > best.0 { cur } else { best }))
}

/// `d_𝔏(A, B, x) = max(1, max_{v ∈ A} g_{B,x}(v), max_{w ∈ B} g_{A,x}(w))`,
/// where `g_{K,x}` is the gauge of `K - x`. Equivalently
/// `exp sup_u |log ρ_{A-x}(u) - log ρ_{B-x}(u)|`; the radial ratio of two
/// polytopes peaks at a vertex direction of one of them, so this is exact.
pub fn log_hausdorff_at(a: &ConvexBody, b: &ConvexBody, x: &Vector) -> Result<PointDistance> {
    if b.dim() != a.dim() {
        return Err(Error::DimensionMismatch { expected: a.dim(), got: b.dim() });
    }
    if x.len() != a.dim() {
        return Err(Error::DimensionMismatch { expected: a.dim(), got: x.len() });
    }
    for body in [a, b] {
        let margin = body.margin(x);
        if margin <= INTERIOR_TOL {
            return Err(Error::NotInterior { margin });
        }
    }
    let (ga, pa) = max_gauge(a, b, x)?;
    let (gb, pb) = max_gauge(b, a, x)?;
    let (value, point) = if ga >= gb { (ga, pa) } else { (gb, pb) };
    let witness = normalized(&(point - x)).unwrap_or_else(|| crate::linalg::basis(x.len(), 0));
    Ok(PointDistance { value: value.max(1.0), witness })
}

/// Distances between two bodies.
#[derive(Debug, Clone, Serialize)]
pub struct DistanceReport {
    #[serde(rename = "dH")]
    pub d_h: f64,
    #[serde(rename = "dHExact")]
    pub d_h_exact: bool,
    #[serde(rename = "dLAtCentroid")]
    pub d_l_at_centroid: f64,
    #[serde(rename = "dLOptimized")]
    pub d_l_optimized: f64,
    /// `false` when vertex lists were missing and `dLOptimized` is only the
    /// value at the centroid.
    pub optimized: bool,
    #[serde(rename = "dBMUpper")]
    pub d_bm_upper: f64,
    #[serde(rename = "witnessDirection")]
    pub witness_direction: Vec<f64>,
    /// Centroid of `A` (or a common interior point) used for `dLAtCentroid`.
    pub centroid: Vec<f64>,
    /// Center attaining `dLOptimized`.
    pub center: Vec<f64>,
}

/// A point well inside both bodies: the centroid of `a` when it is interior
/// to `b`, otherwise the Chebyshev center of the intersection.
pub fn common_interior_point(a: &ConvexBody, b: &ConvexBody) -> Result<Vector> {
    if let Ok(c) = measure::centroid(a) {
        if a.margin(&c) > INTERIOR_TOL && b.margin(&c) > INTERIOR_TOL {
            return Ok(c);
        }
    }
    let mut hs = a.halfspaces().to_vec();
    hs.extend(b.halfspaces().iter().cloned());
    let both = ConvexBody::raw(a.dim(), hs, None, "intersection".into());
    let (c, r) = both.chebyshev_center()?;
    if r <= INTERIOR_TOL {
        return Err(Error::NotInterior { margin: r });
    }
    Ok(c)
}

/// Minimizes `λ` over centers. With `y = (λ - 1) x`, the containment
/// `λ^{-1}(A - x) + x ⊂ B` reads `<n, v> + <n, y> - λ c <= 0` for every
/// vertex `v` of `A` and facet `(n, c)` of `B`, and `B ⊂ λ(A - x) + x`
/// reads the same with the roles swapped, so the optimum is one LP in
/// `(y, λ)`.
fn optimize_center(a: &ConvexBody, b: &ConvexBody) -> Result<(f64, Option<Vector>)> {
    let d = a.dim();
    let mut cons = Vec::new();
    for (inner, outer) in [(a, b), (b, a)] {
        for v in inner.vertices()? {
            for h in outer.halfspaces() {
                let mut row: Vec<f64> = h.normal().iter().copied().collect();
                row.push(-h.offset());
                cons.push(Constraint::new(row, -h.normal().dot(v)));
            }
        }
    }
    let mut floor = vec![0.0; d + 1];
    floor[d] = -1.0;
    cons.push(Constraint::new(floor, -1.0));
    let mut obj = vec![0.0; d + 1];
    obj[d] = 1.0;
    let sol = lp::minimize(&obj, &cons)?;
    let lambda = sol.objective.max(1.0);
    let center =
        (lambda - 1.0 > 1e-9).then(|| Vector::from_iterator(d, sol.x.iter().take(d).map(|y| y / (lambda - 1.0))));
    Ok((lambda, center))
}

pub fn log_hausdorff(a: &ConvexBody, b: &ConvexBody) -> Result<DistanceReport> {
    let x0 = common_interior_point(a, b)?;
    let at = log_hausdorff_at(a, b, &x0)?;
    let (d_h, d_h_exact) = match hausdorff(a, b, &[]) {
        Ok(h) => (h.value, h.exact),
        Err(Error::MissingVertices) => (f64::NAN, false),
        Err(e) => return Err(e),
    };
    let (mut d_l_optimized, mut center, optimized) = if a.has_vertices() && b.has_vertices() {
        let (lambda, center) = optimize_center(a, b)?;
        (lambda, center.unwrap_or_else(|| x0.clone()), true)
    } else {
        (at.value, x0.clone(), false)
    };
    if d_l_optimized > at.value {
        d_l_optimized = at.value;
        center = x0.clone();
    }
    Ok(DistanceReport {
        d_h,
        d_h_exact,
        d_l_at_centroid: at.value,
        d_l_optimized,
        optimized,
        d_bm_upper: d_l_optimized * d_l_optimized,
        witness_direction: at.witness.iter().copied().collect(),
        centroid: x0.iter().copied().collect(),
        center: center.iter().copied().collect(),
    })
}

/// `d_BM <= d_𝔏²`.
pub fn bm_upper(report: &DistanceReport) -> f64 {
    report.d_l_optimized * report.d_l_optimized
}

/// `1 + 24 δ^{1/d}`, the bound on `d_BM(K, K_δ)` for `δ <= 8^{-d}`.
pub fn bm_floating_bound(delta: f64, dim: usize) -> f64 {
    1.0 + 24.0 * delta.powf(1.0 / dim as f64)
}

#[derive(Debug, Clone, Serialize)]
pub struct PolarDualityReport {
    pub primal: f64,
    pub dual: f64,
    pub pass: bool,
}

/// `d_𝔏(A, B, 0) = d_𝔏(A°, B°, 0)`, checked to `1e-6` in log scale.
pub fn polar_duality_check(a: &ConvexBody, b: &ConvexBody) -> Result<PolarDualityReport> {
    let origin = Vector::zeros(a.dim());
    let primal = log_hausdorff_at(a, b, &origin)?.value;
    let dual = log_hausdorff_at(&a.polar()?, &b.polar()?, &origin)?.value;
    Ok(PolarDualityReport { primal, dual, pass: (primal.ln() - dual.ln()).abs() <= 1e-6 })
}

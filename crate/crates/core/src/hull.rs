//! Convex hulls in two and three dimensions.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::linalg::{cross3, Vector};

/// Indices of the strict convex hull of planar points, counter-clockwise.
/// Collinear boundary points are dropped.
pub fn hull_2d(points: &[Vector]) -> Result<Vec<usize>> {
    if points.len() < 3 {
        return Err(Error::InvalidBody("fewer than 3 points for a planar hull".into()));
    }
    let scale = points.iter().map(|p| p.amax()).fold(0.0, f64::max).max(1e-300);
    let eps = 1e-12 * scale * scale;
    let mut idx: Vec<usize> = (0..points.len()).collect();
    idx.sort_by(|&a, &b| points[a][0].total_cmp(&points[b][0]).then(points[a][1].total_cmp(&points[b][1])));
    let cross = |o: usize, a: usize, b: usize| {
        (points[a][0] - points[o][0]) * (points[b][1] - points[o][1])
            - (points[a][1] - points[o][1]) * (points[b][0] - points[o][0])
    };
    let mut lower: Vec<usize> = Vec::new();
    for &p in &idx {
        while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], p) <= eps {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<usize> = Vec::new();
    for &p in idx.iter().rev() {
        while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], p) <= eps {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    if lower.len() < 3 {
        return Err(Error::InvalidBody("planar points are collinear".into()));
    }
    Ok(lower)
}

/// A facet of a 3-D hull: unit outward normal, offset and the (ordered for
/// triangles only) indices of the points lying on it.
#[derive(Debug, Clone)]
pub struct Facet3 {
    pub normal: Vector,
    pub offset: f64,
    pub triangles: Vec<[usize; 3]>,
}

#[derive(Clone)]
struct Face {
    v: [usize; 3],
    normal: Vector,
    offset: f64,
    alive: bool,
}

fn make_face(points: &[Vector], v: [usize; 3]) -> Face {
    let a = &points[v[0]];
    let n = cross3(&(&points[v[1]] - a), &(&points[v[2]] - a));
    let len = n.norm();
    let normal = if len > 0.0 { n / len } else { n };
    let offset = normal.dot(a);
    Face { v, normal, offset, alive: true }
}

/// Exact orientation of `p` against the oriented triangle `v`: negative
/// on the outer side, zero when coplanar.
pub(crate) fn orientation(points: &[Vector], v: [usize; 3], p: &Vector) -> f64 {
    let c = |q: &Vector| robust::Coord3D { x: q[0], y: q[1], z: q[2] };
    robust::orient3d(c(&points[v[0]]), c(&points[v[1]]), c(&points[v[2]]), c(p))
}

fn strictly_outside(points: &[Vector], v: [usize; 3], p: &Vector) -> bool {
    orientation(points, v, p) < 0.0
}

/// Outward-oriented triangles of the convex hull of points in `R^3`
/// (incremental construction).
pub fn hull_3d_triangles(points: &[Vector]) -> Result<Vec<[usize; 3]>> {
    let n = points.len();
    if n < 4 {
        return Err(Error::InvalidBody("fewer than 4 points for a spatial hull".into()));
    }
    let scale = points.iter().map(|p| p.amax()).fold(0.0, f64::max).max(1e-300);
    let eps = 1e-11 * scale;

    // Initial tetrahedron from extreme points.
    let i0 = (0..n).min_by(|&a, &b| points[a][0].total_cmp(&points[b][0])).unwrap();
    let i1 = (0..n)
        .max_by(|&a, &b| (&points[a] - &points[i0]).norm().total_cmp(&(&points[b] - &points[i0]).norm()))
        .unwrap();
    let dir = &points[i1] - &points[i0];
    let line_dist = |p: &Vector| cross3(&(p - &points[i0]), &dir).norm();
    let i2 = (0..n).max_by(|&a, &b| line_dist(&points[a]).total_cmp(&line_dist(&points[b]))).unwrap();
    if line_dist(&points[i2]) <= eps * dir.norm() {
        return Err(Error::InvalidBody("spatial points are collinear".into()));
    }
    let base = make_face(points, [i0, i1, i2]);
    let plane_dist = |p: &Vector| base.normal.dot(p) - base.offset;
    let i3 = (0..n).max_by(|&a, &b| plane_dist(&points[a]).abs().total_cmp(&plane_dist(&points[b]).abs())).unwrap();
    if plane_dist(&points[i3]).abs() <= eps {
        return Err(Error::InvalidBody("spatial points are coplanar".into()));
    }
    let interior = (&points[i0] + &points[i1] + &points[i2] + &points[i3]) / 4.0;

    let mut faces: Vec<Face> = Vec::new();
    let mut edge_face: HashMap<(usize, usize), usize> = HashMap::new();
    let add_face = |faces: &mut Vec<Face>, edge_face: &mut HashMap<(usize, usize), usize>, v: [usize; 3]| {
        let f = make_face(points, v);
        let id = faces.len();
        for k in 0..3 {
            edge_face.insert((v[k], v[(k + 1) % 3]), id);
        }
        faces.push(f);
    };
    for tri in [[i0, i1, i2], [i0, i1, i3], [i0, i2, i3], [i1, i2, i3]] {
        let mut f = make_face(points, tri);
        let v = if f.normal.dot(&interior) - f.offset > 0.0 {
            f.v.swap(1, 2);
            f.v
        } else {
            tri
        };
        add_face(&mut faces, &mut edge_face, v);
    }

    for p in 0..n {
        if [i0, i1, i2, i3].contains(&p) {
            continue;
        }
        let pt = &points[p];
        // Visibility uses the exact orientation predicate, so the visible
        // region is a topological disk even for nearly coplanar input.
        let dist = |f: &Face| f.normal.dot(pt) - f.offset;
        let sees = |f: &Face| strictly_outside(points, f.v, pt);
        let Some(seed) = (0..faces.len())
            .filter(|&f| faces[f].alive && sees(&faces[f]))
            .max_by(|&a, &b| dist(&faces[a]).total_cmp(&dist(&faces[b])))
        else {
            continue;
        };
        let mut visible = vec![seed];
        let mut queue = vec![seed];
        while let Some(f) = queue.pop() {
            let v = faces[f].v;
            for k in 0..3 {
                if let Some(&g) = edge_face.get(&(v[(k + 1) % 3], v[k])) {
                    if faces[g].alive && !visible.contains(&g) && sees(&faces[g]) {
                        visible.push(g);
                        queue.push(g);
                    }
                }
            }
        }
        let mut horizon: Vec<(usize, usize)> = Vec::new();
        for &f in &visible {
            let v = faces[f].v;
            for k in 0..3 {
                let (a, b) = (v[k], v[(k + 1) % 3]);
                let neighbour = edge_face.get(&(b, a)).copied();
                let neighbour_visible = neighbour.is_some_and(|g| visible.contains(&g));
                if !neighbour_visible {
                    horizon.push((a, b));
                }
            }
        }
        for &f in &visible {
            faces[f].alive = false;
            let v = faces[f].v;
            for k in 0..3 {
                let key = (v[k], v[(k + 1) % 3]);
                if edge_face.get(&key) == Some(&f) {
                    edge_face.remove(&key);
                }
            }
        }
        for (a, b) in horizon {
            add_face(&mut faces, &mut edge_face, [a, b, p]);
        }
    }
    Ok(faces.into_iter().filter(|f| f.alive).map(|f| f.v).collect())
}

/// Hull facets of points in `R^3`, with coplanar triangles merged.
pub fn hull_3d(points: &[Vector]) -> Result<Vec<Facet3>> {
    let tris = hull_3d_triangles(points)?;
    let scale = points.iter().map(|p| p.amax()).fold(0.0, f64::max).max(1e-300);
    let mut facets: Vec<Facet3> = Vec::new();
    for t in tris {
        let f = make_face(points, t);
        if !f.normal.iter().all(|x| x.is_finite()) || f.normal.norm() < 0.5 {
            continue;
        }
        match facets
            .iter_mut()
            .find(|g| (&g.normal - &f.normal).amax() < 1e-9 && (g.offset - f.offset).abs() < 1e-9 * scale)
        {
            Some(g) => g.triangles.push(t),
            None => facets.push(Facet3 { normal: f.normal, offset: f.offset, triangles: vec![t] }),
        }
    }
    Ok(facets)
}

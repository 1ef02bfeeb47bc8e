//! The convex floating body `K_δ`: the intersection of all half-spaces
//! `{<x,θ> <= t}` whose complement cuts off at most a `δ`-fraction of the
//! volume of `K`.
//!
//! `K_δ` is represented by an outer approximation: for each direction `θ` in
//! a finite set, the depth `t_θ = A_θ^{-1}(δ)` gives one defining half-space,
//! and their intersection contains the true `K_δ`.

use std::f64::consts::{E, PI};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::body::{BodyJson, ConvexBody, HalfSpace};
use crate::error::{Error, Result};
use crate::linalg::{basis, from_slice, Vector};
use crate::measure::{self, decompose, mc_cap_quantile, sample_uniform, Decomposition};
use crate::par;
use crate::report::Check;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Exact,
    Mc,
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(Mode::Exact),
            "mc" => Ok(Mode::Mc),
            other => Err(Error::OutOfRange(format!("unknown mode {other:?} (expected exact or mc)"))),
        }
    }
}

/// Direction count used when none is given: 64 in the plane, 256 in space,
/// 1024 above.
pub fn default_direction_count(dim: usize) -> usize {
    match dim {
        0..=2 => 64,
        3 => 256,
        _ => 1024,
    }
}

/// Monte-Carlo sample count used when none is given.
pub fn default_sample_count(delta: f64) -> usize {
    1_000_000usize.max((100.0 / delta).ceil() as usize)
}

#[derive(Debug, Clone)]
pub struct FloatingOptions {
    pub directions: usize,
    pub mode: Mode,
    pub samples: Option<usize>,
    pub seed: u64,
}

impl FloatingOptions {
    pub fn exact(directions: usize) -> Self {
        Self { directions, mode: Mode::Exact, samples: None, seed: 0 }
    }

    pub fn mc(directions: usize, samples: Option<usize>, seed: u64) -> Self {
        Self { directions, mode: Mode::Mc, samples, seed }
    }
}

#[derive(Debug, Clone)]
pub struct FloatingBodyApprox {
    pub delta: f64,
    pub directions: Vec<Vector>,
    pub depths: Vec<f64>,
    /// `∩ {<x, θ_i> <= t_i}`, redundant half-spaces pruned when `d <= 3`.
    pub outer: ConvexBody,
    /// `1 - 4 δ^{1/d}`.
    pub inner_scale: f64,
    pub mode: Mode,
    pub mc_samples: Option<usize>,
    pub seed: Option<u64>,
    /// Centroid of `K` (exact, or the sample mean in Monte-Carlo mode).
    pub centroid: Vector,
}

/// Unit directions containing `±e_i` and, when a body is given, all of its
/// facet normals; filled up to `n` by a sphere sequence (uniform angles in
/// the plane, a Fibonacci lattice in space, seeded Gaussian directions
/// above). Directions closer than `1e-9` are merged, so the result has
/// `max(n, #base)` entries.
pub fn direction_set(dim: usize, n: usize, body: Option<&ConvexBody>, seed: u64) -> Result<Vec<Vector>> {
    if dim == 0 {
        return Err(Error::OutOfRange("dimension 0".into()));
    }
    if n < 2 * dim {
        return Err(Error::OutOfRange(format!("{n} directions, need at least {}", 2 * dim)));
    }
    let mut dirs: Vec<Vector> = Vec::with_capacity(n);
    let push = |dirs: &mut Vec<Vector>, u: Vector| {
        if !dirs.iter().any(|v| (v - &u).norm() <= 1e-9) {
            dirs.push(u);
        }
    };
    for i in 0..dim {
        push(&mut dirs, basis(dim, i));
        push(&mut dirs, -basis(dim, i));
    }
    if let Some(b) = body {
        if b.dim() != dim {
            return Err(Error::DimensionMismatch { expected: dim, got: b.dim() });
        }
        for h in b.halfspaces() {
            push(&mut dirs, h.normal().clone());
        }
    }
    match dim {
        1 => {}
        2 => {
            for k in 0..n {
                if dirs.len() >= n {
                    break;
                }
                let a = 2.0 * PI * k as f64 / n as f64;
                push(&mut dirs, from_slice(&[a.cos(), a.sin()]));
            }
            let golden = PI * (3.0 - 5f64.sqrt());
            let mut k = 1;
            while dirs.len() < n {
                let a = golden * k as f64;
                push(&mut dirs, from_slice(&[a.cos(), a.sin()]));
                k += 1;
            }
        }
        3 => {
            let golden = PI * (3.0 - 5f64.sqrt());
            let mut total = n;
            while dirs.len() < n {
                for k in 0..total {
                    if dirs.len() >= n {
                        break;
                    }
                    let z = 1.0 - (2 * k + 1) as f64 / total as f64;
                    let r = (1.0 - z * z).sqrt();
                    let a = golden * k as f64;
                    push(&mut dirs, from_slice(&[r * a.cos(), r * a.sin(), z]));
                }
                total += n;
            }
        }
        _ => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            while dirs.len() < n {
                let g = Vector::from_fn(dim, |_, _| StandardNormal.sample(&mut rng));
                let len = g.norm();
                if len > 1e-12 {
                    push(&mut dirs, g / len);
                }
            }
        }
    }
    Ok(dirs)
}

/// Floating body over the default direction set for `opts.directions`.
pub fn floating_body(body: &ConvexBody, delta: f64, opts: &FloatingOptions) -> Result<FloatingBodyApprox> {
    let dirs = direction_set(body.dim(), opts.directions, Some(body), opts.seed)?;
    floating_body_with_directions(body, delta, dirs, opts)
}

/// Floating body over explicit unit directions.
pub fn floating_body_with_directions(
    body: &ConvexBody,
    delta: f64,
    directions: Vec<Vector>,
    opts: &FloatingOptions,
) -> Result<FloatingBodyApprox> {
    if !(delta > 0.0 && delta < 1.0 / E) {
        return Err(Error::OutOfRange(format!("δ = {delta} not in (0, 1/e)")));
    }
    let d = body.dim();
    for u in &directions {
        if u.len() != d {
            return Err(Error::DimensionMismatch { expected: d, got: u.len() });
        }
        if (u.norm() - 1.0).abs() > 1e-9 {
            return Err(Error::OutOfRange("directions must be unit vectors".into()));
        }
    }
    let (depths, centroid, samples) = match opts.mode {
        Mode::Exact => {
            let dec = decompose(body)?;
            let depths = par::try_map(&directions, |u| dec.cap_quantile(u, delta))?;
            (depths, dec.centroid(), None)
        }
        Mode::Mc => {
            let n = opts.samples.unwrap_or_else(|| default_sample_count(delta));
            if (n as f64) < 10.0 / delta {
                return Err(Error::Sampling(format!("{n} samples too few for δ = {delta} (need 10/δ)")));
            }
            let cloud = sample_uniform(body, n, opts.seed)?;
            let depths = par::try_map(&directions, |u| mc_cap_quantile(&cloud, u, delta))?;
            (depths, cloud.mean(), Some(n))
        }
    };
    if body.has_vertices() {
        for (u, &t) in directions.iter().zip(&depths) {
            let h = body.support(u)?;
            if t > h + 1e-12 * (1.0 + h.abs()) {
                return Err(Error::Consistency(format!("depth {t} exceeds support {h}")));
            }
        }
    }
    let halfspaces =
        directions.iter().zip(&depths).map(|(u, &t)| HalfSpace::new(u.clone(), t)).collect::<Result<Vec<_>>>()?;
    let label = format!("{}_float({delta})", body.label());
    let outer = if d <= 3 {
        ConvexBody::from_halfspaces(d, halfspaces, label)?
    } else {
        ConvexBody::raw(d, halfspaces, None, label)
    };
    let margin = outer.margin(&centroid);
    if margin < -1e-9 {
        return Err(Error::Consistency(format!(
            "centroid outside the outer approximation (margin {margin:e}) although δ < 1/e"
        )));
    }
    Ok(FloatingBodyApprox {
        delta,
        directions,
        depths,
        outer,
        inner_scale: 1.0 - 4.0 * delta.powf(1.0 / d as f64),
        mode: opts.mode,
        mc_samples: samples,
        seed: (opts.mode == Mode::Mc).then_some(opts.seed),
        centroid,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FloatingBodyJson {
    pub delta: f64,
    pub mode: Mode,
    pub directions: Vec<Vec<f64>>,
    pub depths: Vec<f64>,
    pub outer: BodyJson,
    #[serde(rename = "innerScale")]
    pub inner_scale: f64,
    #[serde(rename = "mcSamples", default, skip_serializing_if = "Option::is_none")]
    pub mc_samples: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub centroid: Vec<f64>,
}

impl FloatingBodyApprox {
    pub fn to_json(&self) -> FloatingBodyJson {
        FloatingBodyJson {
            delta: self.delta,
            mode: self.mode,
            directions: self.directions.iter().map(|u| u.iter().copied().collect()).collect(),
            depths: self.depths.clone(),
            outer: self.outer.to_json(),
            inner_scale: self.inner_scale,
            mc_samples: self.mc_samples,
            seed: self.seed,
            centroid: self.centroid.iter().copied().collect(),
        }
    }
}

/// Per-direction inner-bound checks and their aggregate.
#[derive(Debug, Clone)]
pub struct InnerBoundReport {
    pub checks: Vec<Check>,
    /// `min_i (t_i - lower_i)`.
    pub min_slack: f64,
    pub pass: bool,
}

/// `t_θ >= (1 - 4 δ^{1/d}) h_K(θ)`, the per-direction form of
/// `(1 - 4 δ^{1/d}) K ⊂ K_δ`. Evaluated about the centroid `c`, i.e.
/// `t_θ - <c,θ> >= (1 - 4δ^{1/d}) (h_K(θ) - <c,θ>)`, which is the stated
/// inequality when `c = 0`.
pub fn inner_bound_check(body: &ConvexBody, fb: &FloatingBodyApprox) -> Result<InnerBoundReport> {
    let c = &fb.centroid;
    let mut checks = Vec::with_capacity(fb.directions.len());
    for (i, (u, &t)) in fb.directions.iter().zip(&fb.depths).enumerate() {
        let h = body.support(u)?;
        let ct = c.dot(u);
        let lower = ct + fb.inner_scale * (h - ct);
        checks.push(Check::at_least("inner_bound", &format!("t[{i}]"), lower, t, 1e-9));
    }
    let min_slack = checks.iter().map(|c| c.value - c.lower).fold(f64::INFINITY, f64::min);
    let pass = checks.iter().all(|c| c.pass);
    Ok(InnerBoundReport { checks, min_slack, pass })
}

/// The lower bounds on `A_θ(t)` for `t` between the median and the support.
#[derive(Debug, Clone, Serialize)]
pub struct CapBoundBreakdown {
    pub theta: Vec<f64>,
    pub t: f64,
    #[serde(rename = "hK")]
    pub h_k: f64,
    pub median: f64,
    #[serde(rename = "psiT")]
    pub psi_t: f64,
    #[serde(rename = "aT")]
    pub a_t: f64,
    /// `(h - t) / d`.
    pub alpha: f64,
    /// `(h - t)^{1-d} ((h - m)^d - (h - t)^d) / d`.
    pub beta: f64,
    /// `α ψ(t)`.
    #[serde(rename = "primaryLB")]
    pub primary_lb: f64,
    /// `1/2 - β ψ(t)` (`-inf` at `t = h`).
    #[serde(rename = "secondaryLB")]
    pub secondary_lb: f64,
    /// `½ ((h - t) / (h - m))^d`.
    #[serde(rename = "combinedLB")]
    pub combined_lb: f64,
}

impl CapBoundBreakdown {
    /// `A(t)` dominates all three bounds within `tol`.
    pub fn holds(&self, tol: f64) -> bool {
        self.a_t >= self.primary_lb - tol && self.a_t >= self.secondary_lb - tol && self.a_t >= self.combined_lb - tol
    }
}

pub fn cap_bound_breakdown(dec: &Decomposition, theta: &Vector, t: f64) -> Result<CapBoundBreakdown> {
    let d = dec.dim() as i32;
    let marginal = dec.marginal(theta);
    let m = marginal.quantile(0.5)?;
    let h = marginal.hi();
    let slack = 1e-12 * (h - marginal.lo());
    if t < m - slack || t > h + slack {
        return Err(Error::OutOfRange(format!("t = {t} outside [median {m}, support {h}]")));
    }
    let t = t.clamp(m, h);
    let psi = marginal.section_density(t);
    let gap = h - t;
    let alpha = gap / d as f64;
    let (beta, secondary) = if gap > 0.0 {
        let beta = gap.powi(1 - d) * ((h - m).powi(d) - gap.powi(d)) / d as f64;
        (beta, 0.5 - beta * psi)
    } else {
        (f64::INFINITY, f64::NEG_INFINITY)
    };
    Ok(CapBoundBreakdown {
        theta: theta.iter().copied().collect(),
        t,
        h_k: h,
        median: m,
        psi_t: psi,
        a_t: marginal.cap(t),
        alpha,
        beta,
        primary_lb: alpha * psi,
        secondary_lb: secondary,
        combined_lb: 0.5 * (gap / (h - m)).powi(d),
    })
}

/// Depth bracket on an isotropic body of unit volume.
#[derive(Debug, Clone)]
pub struct Sandwich {
    /// `(e^{-1} - δ) L_K`.
    pub r_lower: f64,
    /// `10 ln(2/δ) L_K`.
    pub r_upper: f64,
    /// `(e^{-1} - δ') L_K` with `δ' = (δ + e^{-1}) / 2`.
    pub r_lower_mid: f64,
    pub min_depth: f64,
    pub max_depth: f64,
    pub pass: bool,
}

/// `(e^{-1} - δ) L_K <= t_θ <= 10 ln(2/δ) L_K` for every direction, with
/// depths measured from the centroid.
pub fn theorem1_sandwich(fb: &FloatingBodyApprox, lk: f64) -> Sandwich {
    let delta = fb.delta;
    let r_lower = (1.0 / E - delta) * lk;
    let r_upper = 10.0 * (2.0 / delta).ln() * lk;
    let delta_mid = 0.5 * (delta + 1.0 / E);
    let rel: Vec<f64> = fb.directions.iter().zip(&fb.depths).map(|(u, t)| t - fb.centroid.dot(u)).collect();
    let min_depth = rel.iter().copied().fold(f64::INFINITY, f64::min);
    let max_depth = rel.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Sandwich {
        r_lower,
        r_upper,
        r_lower_mid: (1.0 / E - delta_mid) * lk,
        min_depth,
        max_depth,
        pass: min_depth >= r_lower - 1e-9 && max_depth <= r_upper + 1e-9,
    }
}

/// Exact per-direction depths of a body without building the outer body.
pub fn exact_depths(body: &ConvexBody, delta: f64, directions: &[Vector]) -> Result<Vec<f64>> {
    let dec = measure::decompose(body)?;
    par::try_map(directions, |u| dec.cap_quantile(u, delta))
}

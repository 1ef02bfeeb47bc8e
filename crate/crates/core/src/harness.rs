//! Verification suites over the standard bodies and the density battery.
//! Every suite returns flat [`VerificationRow`]s in a deterministic order.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::body::ConvexBody;
use crate::distances::{bm_floating_bound, log_hausdorff, log_hausdorff_at};
use crate::error::{Error, Result};
use crate::floating::{
    cap_bound_breakdown, default_direction_count, direction_set, floating_body, inner_bound_check, theorem1_sandwich,
    FloatingOptions,
};
use crate::isotropic::{check_central_section, to_isotropic};
use crate::linalg::{basis, Vector};
use crate::logconcave::{
    check_brunn, check_centroid_mass, check_quantile_bracket, check_rigidity, check_tail, PiecewiseLogLinearDensity,
};
use crate::measure::{ball_volume, decompose};
use crate::par;
use crate::report::Check;

pub const BODY_NAMES: [&str; 3] = ["cube", "simplex", "cross_polytope"];
pub const LEMMA_RHOS: [f64; 5] = [0.01, 0.05, 0.1, 0.2, 0.3];
/// Regression floor for the dimension-trend ratio.
pub const TREND_FLOOR: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationRow {
    pub suite: String,
    pub body: String,
    pub dim: usize,
    pub delta: f64,
    pub quantity: String,
    pub lower: f64,
    pub value: f64,
    pub upper: f64,
    pub pass: bool,
    pub tolerance: f64,
}

impl VerificationRow {
    pub fn from_check(suite: &str, body: &str, dim: usize, delta: f64, check: &Check) -> Self {
        Self {
            suite: suite.to_string(),
            body: body.to_string(),
            dim,
            delta,
            quantity: format!("{}:{}", check.name, check.quantity),
            lower: check.lower,
            value: check.value,
            upper: check.upper,
            pass: check.pass,
            tolerance: check.tolerance,
        }
    }
}

pub fn all_pass(rows: &[VerificationRow]) -> bool {
    rows.iter().all(|r| r.pass)
}

pub fn write_csv<W: Write>(rows: &[VerificationRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

/// `[-1,1]^d`, the standard simplex or the unit cross-polytope.
pub fn standard_body(name: &str, dim: usize) -> Result<ConvexBody> {
    match name {
        "cube" => ConvexBody::cube(dim, 1.0),
        "simplex" => ConvexBody::simplex(dim),
        "cross_polytope" | "cross" => ConvexBody::cross_polytope(dim),
        other => Err(Error::Unsupported(format!("unknown body {other:?}"))),
    }
}

fn grid<'a>(bodies: &'a [String], dims: &[usize], deltas: &[f64]) -> Vec<(&'a str, usize, f64)> {
    let mut items = Vec::new();
    for b in bodies {
        for &d in dims {
            for &delta in deltas {
                items.push((b.as_str(), d, delta));
            }
        }
    }
    items
}

fn flatten(groups: Vec<Vec<VerificationRow>>) -> Vec<VerificationRow> {
    groups.into_iter().flatten().collect()
}

/// Inner inclusion, the distance bounds and simplex sharpness, on the
/// exact outer approximation. Requires `d ∈ {2, 3}` and `δ <= 8^{-d}`.
pub fn verify_thm2(
    bodies: &[String],
    dims: &[usize],
    deltas: &[f64],
    directions: Option<usize>,
) -> Result<Vec<VerificationRow>> {
    for &d in dims {
        if !(2..=3).contains(&d) {
            return Err(Error::OutOfRange(format!("dimension {d} (exact mode needs 2 or 3)")));
        }
        for &delta in deltas {
            if !(delta > 0.0 && delta <= 8f64.powi(-(d as i32))) {
                return Err(Error::OutOfRange(format!("δ = {delta} exceeds 8^-{d}")));
            }
        }
    }
    let items = grid(bodies, dims, deltas);
    let groups = par::try_map(&items, |&(name, d, delta)| -> Result<Vec<VerificationRow>> {
        let k = standard_body(name, d)?;
        let n = directions.unwrap_or_else(|| default_direction_count(d));
        let fb = floating_body(&k, delta, &FloatingOptions::exact(n))?;
        let u = delta.powf(1.0 / d as f64);
        let row = |c: &Check| VerificationRow::from_check("thm2", name, d, delta, c);
        let mut rows: Vec<VerificationRow> = inner_bound_check(&k, &fb)?.checks.iter().map(row).collect();

        let at = log_hausdorff_at(&k, &fb.outer, &fb.centroid)?;
        rows.push(row(&Check::at_most("distance", "dL(K,outer,centroid)", at.value, 1.0 + 8.0 * u, 1e-6)));
        rows.push(row(&Check::at_most(
            "distance",
            "dL(K,outer,centroid) vs 1/(1-4u)",
            at.value,
            1.0 / fb.inner_scale,
            1e-9,
        )));
        let report = log_hausdorff(&k, &fb.outer)?;
        rows.push(row(&Check::at_most(
            "banach_mazur",
            "dBM upper",
            report.d_bm_upper,
            bm_floating_bound(delta, d),
            1e-6,
        )));
        if name == "simplex" {
            let e1 = basis(d, 0);
            let i = fb
                .directions
                .iter()
                .position(|v| (v - &e1).norm() < 1e-12)
                .ok_or_else(|| Error::Consistency("e1 missing from direction set".into()))?;
            rows.push(row(&Check::new("simplex", "depth(e1)", 1.0 - u, fb.depths[i], 1.0 - u, 1e-9)));
            rows.push(row(&Check::at_least(
                "simplex",
                "dL(K,outer) optimized",
                1.0 + 0.5 * u,
                report.d_l_optimized,
                1e-6,
            )));
        }
        Ok(rows)
    })?;
    Ok(flatten(groups))
}

/// Depth bracket on the isotropic image for every direction, reported as
/// the minimum and maximum depth.
pub fn verify_thm1(
    bodies: &[String],
    dims: &[usize],
    deltas: &[f64],
    directions: Option<usize>,
) -> Result<Vec<VerificationRow>> {
    let items = grid(bodies, dims, deltas);
    let groups = par::try_map(&items, |&(name, d, delta)| -> Result<Vec<VerificationRow>> {
        let (iso, form) = to_isotropic(&standard_body(name, d)?)?;
        let n = directions.unwrap_or_else(|| default_direction_count(d));
        let fb = floating_body(&iso, delta, &FloatingOptions::exact(n))?;
        let s = theorem1_sandwich(&fb, form.lk);
        let row = |c: &Check| VerificationRow::from_check("thm1", name, d, delta, c);
        Ok(vec![
            row(&Check::at_least("sandwich", "min depth", s.r_lower, s.min_depth, 1e-9)),
            row(&Check::at_most("sandwich", "max depth", s.max_depth, s.r_upper, 1e-9)),
            row(&Check::at_most("sandwich", "rLower with delta'", s.r_lower_mid, s.r_lower, 1e-12)),
        ])
    })?;
    Ok(flatten(groups))
}

/// Central sections, cap lower bounds above the median and Brunn concavity
/// on isotropic bodies.
pub fn verify_sections(bodies: &[String], dims: &[usize], directions: usize) -> Result<Vec<VerificationRow>> {
    let items = grid(bodies, dims, &[0.0]);
    let groups = par::try_map(&items, |&(name, d, _)| -> Result<Vec<VerificationRow>> {
        let (iso, form) = to_isotropic(&standard_body(name, d)?)?;
        let dec = decompose(&iso)?;
        let dirs = direction_set(d, directions.max(2 * d), None, 0)?;
        let row = |c: &Check| VerificationRow::from_check("sections", name, d, 0.0, c);
        let mut rows = Vec::new();
        let mut central = Vec::with_capacity(dirs.len());
        for u in &dirs {
            let c = check_central_section(&dec, form.lk, u);
            central.push(c.value);
            rows.push(row(&c));
            let m = dec.median_depth(u)?;
            let h = dec.marginal(u).hi();
            for k in 0..20 {
                let t = m + (h - m) * k as f64 / 19.0;
                let b = cap_bound_breakdown(&dec, u, t)?;
                rows.push(row(&Check::at_least("cap_bound", "A - primaryLB", 0.0, b.a_t - b.primary_lb, 1e-9)));
                // The secondary bound is -inf at the support point.
                if b.secondary_lb.is_finite() {
                    rows.push(row(&Check::at_least("cap_bound", "A - secondaryLB", 0.0, b.a_t - b.secondary_lb, 1e-9)));
                }
                rows.push(row(&Check::at_least("cap_bound", "A - combinedLB", 0.0, b.a_t - b.combined_lb, 1e-9)));
                if k == 0 {
                    rows.push(row(&Check::new(
                        "cap_bound",
                        "A(median) - combinedLB",
                        0.0,
                        b.a_t - b.combined_lb,
                        0.0,
                        1e-9,
                    )));
                }
            }
            rows.push(row(&check_brunn(&dec.section_profile(u, 256)?, d)?));
        }
        let max = central.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let min = central.iter().copied().fold(f64::INFINITY, f64::min);
        rows.push(row(&Check::at_most("central_section", "max/min over directions", max / min, 8.0, 0.0)));
        Ok(rows)
    })?;
    Ok(flatten(groups))
}

/// Rigidity, quantile bracket, tail and centroid-mass checks over a density
/// battery, plus closed forms of the shifted exponential.
pub fn verify_lemmas(battery: &[(&str, PiecewiseLogLinearDensity)]) -> Result<Vec<VerificationRow>> {
    let t_grid: Vec<f64> = (0..=40).map(|i| 0.25 * i as f64).collect();
    let groups = par::try_map(battery, |(name, density)| -> Result<Vec<VerificationRow>> {
        let row = |delta: f64, c: &Check| VerificationRow::from_check("lemmas", name, 1, delta, c);
        let mut rows: Vec<VerificationRow> = check_rigidity(density)?.checks.iter().map(|c| row(0.0, c)).collect();
        for &rho in &LEMMA_RHOS {
            rows.push(row(rho, &check_quantile_bracket(density, rho)?));
        }
        rows.extend(check_tail(density, &t_grid)?.iter().map(|c| row(0.0, c)));
        rows.push(row(0.0, &check_centroid_mass(density)?));
        Ok(rows)
    })?;
    let mut rows = flatten(groups);
    rows.extend(shifted_exponential_rows()?);
    Ok(rows)
}

fn shifted_exponential_rows() -> Result<Vec<VerificationRow>> {
    let e = PiecewiseLogLinearDensity::exponential();
    let exact = |quantity: &str, expected: f64, value: f64| {
        Check::new("closed_form", quantity, expected, value, expected, 1e-10)
    };
    let mut checks = vec![
        exact("mean", 0.0, e.mean()),
        exact("variance", 1.0, e.variance()),
        exact("f(0)", (-1.0f64).exp(), e.pdf(0.0)),
        exact("median", 2f64.ln() - 1.0, e.median()),
        exact("f(median)", 0.5, e.pdf(e.median())),
        exact("1-F(0)", (-1.0f64).exp(), e.sf(0.0)),
        exact("1-F(5)", (-6.0f64).exp(), e.sf(5.0)),
    ];
    for &rho in &LEMMA_RHOS {
        checks.push(exact(&format!("F^-1(1-{rho})"), (1.0 / rho).ln() - 1.0, e.quantile(1.0 - rho)?));
    }
    Ok(checks.iter().map(|c| VerificationRow::from_check("lemmas", "shifted_exponential", 1, 0.0, c)).collect())
}

/// One line of the dimension trend for a floating body of the cube.
#[derive(Debug, Clone, Serialize)]
pub struct Theorem3Report {
    pub dim: usize,
    pub delta: f64,
    #[serde(rename = "dL")]
    pub d_l: f64,
    pub vd: f64,
    /// `dL ln(2/δ) / d^{1/4}`.
    pub ratio: f64,
    /// `10 L_K ln(2/δ)`.
    #[serde(rename = "radiusUpper")]
    pub radius_upper: f64,
    pub mode: crate::floating::Mode,
}

/// `d_𝔏(K, outer, centroid)` for `K = [-1,1]^d`: exact depths for `d <= 3`,
/// Monte-Carlo depths above.
pub fn thm3_trend(
    dims: &[usize],
    delta: f64,
    directions: Option<usize>,
    samples: Option<usize>,
    seed: u64,
) -> Result<Vec<Theorem3Report>> {
    let mut out = Vec::with_capacity(dims.len());
    for &d in dims {
        let k = standard_body("cube", d)?;
        let n = directions.unwrap_or_else(|| default_direction_count(d));
        let opts = if d <= 3 { FloatingOptions::exact(n) } else { FloatingOptions::mc(n, samples, seed) };
        let fb = floating_body(&k, delta, &opts)?;
        let center: Vector = fb.centroid.clone();
        let d_l = log_hausdorff_at(&k, &fb.outer, &center)?.value;
        let lk = crate::isotropic::isotropic_constant(&k)?;
        let ln = (2.0 / delta).ln();
        out.push(Theorem3Report {
            dim: d,
            delta,
            d_l,
            vd: ball_volume(d),
            ratio: d_l * ln / (d as f64).powf(0.25),
            radius_upper: 10.0 * lk * ln,
            mode: opts.mode,
        });
    }
    Ok(out)
}

pub fn thm3_rows(reports: &[Theorem3Report]) -> Vec<VerificationRow> {
    reports
        .iter()
        .map(|r| {
            let c = Check::at_least("trend", "dL ln(2/delta) / d^(1/4)", TREND_FLOOR, r.ratio, 0.0);
            VerificationRow::from_check("thm3", "cube", r.dim, r.delta, &c)
        })
        .collect()
}

//! End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any criterion fails.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use floatbody::distances::polar_duality_check;
use floatbody::floating::direction_set;
use floatbody::harness::{
    all_pass, standard_body, thm3_trend, verify_lemmas, verify_sections, verify_thm1, verify_thm2, VerificationRow,
    TREND_FLOOR,
};
use floatbody::linalg::from_slice;
use floatbody::logconcave::PiecewiseLogLinearDensity;
use floatbody::measure::{decompose, mc_cap_fraction, mc_cap_quantile, sample_uniform};
use floatbody::{ConvexBody, Vector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Criterion = fn() -> floatbody::Result<Outcome>;

struct Outcome {
    pass: bool,
    detail: String,
}

fn names(xs: &[&str]) -> Vec<String> {
    xs.iter().map(|s| s.to_string()).collect()
}

fn summarize(rows: &[VerificationRow]) -> String {
    let failed = rows.iter().filter(|r| !r.pass).count();
    match rows.iter().find(|r| !r.pass) {
        Some(r) => format!(
            "{} rows, {failed} failed; first: {} {} d={} {} = {}",
            rows.len(),
            r.suite,
            r.body,
            r.dim,
            r.quantity,
            r.value
        ),
        None => format!("{} rows", rows.len()),
    }
}

fn thm2_grid_rows() -> floatbody::Result<Vec<VerificationRow>> {
    let mut rows = Vec::new();
    for d in [2usize, 3] {
        let base = 8f64.powi(-(d as i32));
        rows.extend(verify_thm2(&names(&["cube", "simplex", "cross_polytope"]), &[d], &[base, base / 4.0], None)?);
    }
    Ok(rows)
}

fn inner_inclusion() -> floatbody::Result<Outcome> {
    let start = Instant::now();
    let rows: Vec<_> = thm2_grid_rows()?.into_iter().filter(|r| r.quantity.starts_with("inner_bound")).collect();
    let elapsed = start.elapsed();
    Ok(Outcome {
        pass: all_pass(&rows) && !rows.is_empty() && elapsed < Duration::from_secs(30),
        detail: format!("{}, {:.1}s", summarize(&rows), elapsed.as_secs_f64()),
    })
}

fn distance_bounds() -> floatbody::Result<Outcome> {
    let rows: Vec<_> = thm2_grid_rows()?
        .into_iter()
        .filter(|r| r.quantity.starts_with("distance") || r.quantity.starts_with("banach_mazur"))
        .collect();
    let worst = rows
        .iter()
        .filter(|r| r.quantity == "distance:dL(K,outer,centroid)")
        .map(|r| r.value / r.upper)
        .fold(0.0, f64::max);
    Ok(Outcome {
        pass: all_pass(&rows) && !rows.is_empty(),
        detail: format!("{}, worst dL/bound {worst:.4}", summarize(&rows)),
    })
}

fn simplex_sharpness() -> floatbody::Result<Outcome> {
    let mut rows = Vec::new();
    for d in [2usize, 3] {
        rows.extend(verify_thm2(&names(&["simplex"]), &[d], &[8f64.powi(-(d as i32)), 1e-3], None)?);
    }
    let rows: Vec<_> = rows.into_iter().filter(|r| r.quantity.starts_with("simplex")).collect();
    Ok(Outcome { pass: all_pass(&rows) && rows.len() == 8, detail: summarize(&rows) })
}

fn theorem1_sandwich() -> floatbody::Result<Outcome> {
    let rows = verify_thm1(&names(&["cube", "simplex", "cross_polytope"]), &[2, 3], &[0.05, 0.1, 0.2, 0.3], None)?;
    let cube = verify_thm1(&names(&["cube"]), &[2], &[0.1], Some(4))?;
    let concrete = (cube[0].value - 0.4).abs() < 1e-9
        && (cube[1].value - 0.4).abs() < 1e-9
        && (cube[0].lower - 0.0774).abs() < 1e-4
        && (cube[1].upper - 8.648).abs() < 1e-3;
    Ok(Outcome {
        pass: all_pass(&rows) && concrete,
        detail: format!(
            "{}, cube d=2 δ=0.1 depth {:.6} in [{:.4}, {:.3}]",
            summarize(&rows),
            cube[0].value,
            cube[0].lower,
            cube[1].upper
        ),
    })
}

fn lemma_suite() -> floatbody::Result<Outcome> {
    let rows = verify_lemmas(&PiecewiseLogLinearDensity::battery())?;
    Ok(Outcome { pass: all_pass(&rows), detail: summarize(&rows) })
}

fn central_sections() -> floatbody::Result<Outcome> {
    let rows: Vec<_> = verify_sections(&names(&["cube", "simplex"]), &[2, 3], 32)?
        .into_iter()
        .filter(|r| r.quantity.starts_with("central_section"))
        .collect();
    let ratio = rows.iter().filter(|r| r.quantity.contains("max/min")).map(|r| r.value).fold(0.0, f64::max);
    Ok(Outcome { pass: all_pass(&rows), detail: format!("{}, max section ratio {ratio:.4}", summarize(&rows)) })
}

fn cap_bounds() -> floatbody::Result<Outcome> {
    let rows: Vec<_> = verify_sections(&names(&["cube", "simplex"]), &[2, 3], 32)?
        .into_iter()
        .filter(|r| r.quantity.starts_with("cap_bound"))
        .collect();
    Ok(Outcome { pass: all_pass(&rows), detail: summarize(&rows) })
}

fn brunn() -> floatbody::Result<Outcome> {
    let rows: Vec<_> = verify_sections(&names(&["cube", "simplex", "cross_polytope"]), &[2, 3], 32)?
        .into_iter()
        .filter(|r| r.quantity.starts_with("brunn"))
        .collect();
    let worst = rows.iter().map(|r| r.value).fold(f64::INFINITY, f64::min);
    Ok(Outcome { pass: all_pass(&rows), detail: format!("{}, min chord slack {worst:.3e}", summarize(&rows)) })
}

/// Each run draws 10^6 points from one body and compares cap fractions at
/// the exact depth and the empirical depths against the exact values.
fn exact_vs_monte_carlo() -> floatbody::Result<Outcome> {
    let start = Instant::now();
    let n = 1_000_000;
    let bodies = [("cube", 2usize), ("simplex", 2), ("cross_polytope", 2), ("cube", 3), ("simplex", 3)];
    let mut passed = 0;
    let runs = 20;
    for run in 0..runs {
        let (name, d) = bodies[run % bodies.len()];
        let k = standard_body(name, d)?;
        let dec = decompose(&k)?;
        let cloud = sample_uniform(&k, n, 1000 + run as u64)?;
        let dirs = direction_set(d, 2 * d + 2, Some(&k), run as u64)?;
        let mut ok = true;
        for u in dirs.iter().take(2 * d + 2) {
            for delta in [0.01, 0.1] {
                let se = (delta * (1.0 - delta) / n as f64).sqrt();
                let t = dec.cap_quantile(u, delta)?;
                ok &= (mc_cap_fraction(&cloud, u, t) - delta).abs() <= 4.0 * se;
                let psi = dec.marginal(u).density(t).max(dec.marginal(u).density_left(t));
                ok &= (mc_cap_quantile(&cloud, u, delta)? - t).abs() <= 4.0 * se / psi;
            }
        }
        passed += ok as usize;
    }
    let elapsed = start.elapsed();
    Ok(Outcome {
        pass: passed * 100 >= 95 * runs && elapsed < Duration::from_secs(120),
        detail: format!("{passed}/{runs} runs within 4 standard errors, {:.1}s", elapsed.as_secs_f64()),
    })
}

fn random_polygon(rng: &mut ChaCha8Rng) -> ConvexBody {
    loop {
        let k = rng.random_range(3..=10);
        let mut angles: Vec<f64> = (0..k).map(|_| rng.random::<f64>() * 2.0 * PI).collect();
        angles.sort_by(f64::total_cmp);
        let max_gap = angles.windows(2).map(|w| w[1] - w[0]).fold(angles[0] + 2.0 * PI - angles[k - 1], f64::max);
        if max_gap > 0.9 * PI {
            continue;
        }
        let points: Vec<Vector> = angles
            .iter()
            .map(|a| {
                let r = 0.3 + 1.7 * rng.random::<f64>();
                from_slice(&[r * a.cos(), r * a.sin()])
            })
            .collect();
        if let Ok(p) = ConvexBody::from_vertices(points, "random") {
            if p.margin(&Vector::zeros(2)) > 1e-3 {
                return p;
            }
        }
    }
}

fn polarity() -> floatbody::Result<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst: f64 = 0.0;
    let mut pass = true;
    for _ in 0..20 {
        let a = random_polygon(&mut rng);
        let b = random_polygon(&mut rng);
        let r = polar_duality_check(&a, &b)?;
        worst = worst.max((r.primal.ln() - r.dual.ln()).abs());
        pass &= r.pass;
    }
    Ok(Outcome { pass, detail: format!("20 pairs, max |log difference| {worst:.2e}") })
}

fn dimension_trend() -> floatbody::Result<Outcome> {
    let start = Instant::now();
    let reports = thm3_trend(&[2, 3, 4, 5, 6], 0.1, None, None, 7)?;
    let elapsed = start.elapsed();
    let min = reports.iter().map(|r| r.ratio).fold(f64::INFINITY, f64::min);
    let ratios: Vec<String> = reports.iter().map(|r| format!("d={}:{:.3}", r.dim, r.ratio)).collect();
    Ok(Outcome {
        pass: min > TREND_FLOOR && elapsed < Duration::from_secs(300),
        detail: format!("min ratio {min:.4} ({}), {:.1}s", ratios.join(" "), elapsed.as_secs_f64()),
    })
}

fn main() -> ExitCode {
    let criteria: [(&str, Criterion); 11] = [
        ("inner inclusion (1-4δ^(1/d))K in K_δ", inner_inclusion),
        ("distance bounds dL <= 1+8δ^(1/d), dBM <= 1+24δ^(1/d)", distance_bounds),
        ("simplex sharpness", simplex_sharpness),
        ("isotropic depth sandwich", theorem1_sandwich),
        ("log-concave lemma suite", lemma_suite),
        ("central section bracket", central_sections),
        ("cap lower bounds above the median", cap_bounds),
        ("Brunn concavity", brunn),
        ("exact vs Monte-Carlo", exact_vs_monte_carlo),
        ("polarity identity", polarity),
        ("dimension trend", dimension_trend),
    ];
    let mut failures = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let outcome = run().unwrap_or_else(|e| Outcome { pass: false, detail: format!("error: {e}") });
        let tag = if outcome.pass { "PASS" } else { "FAIL" };
        println!("criterion {:>2} [{tag}] {name}: {}", i + 1, outcome.detail);
        failures += (!outcome.pass) as usize;
    }
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failures} criteria failed");
        ExitCode::FAILURE
    }
}

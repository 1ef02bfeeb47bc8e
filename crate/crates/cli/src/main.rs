use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use floatbody::distances::log_hausdorff;
use floatbody::floating::{default_direction_count, floating_body, FloatingOptions, Mode};
use floatbody::harness::{
    all_pass, standard_body, thm3_rows, thm3_trend, verify_lemmas, verify_sections, verify_thm1, verify_thm2,
    write_csv, VerificationRow,
};
use floatbody::isotropic::to_isotropic;
use floatbody::logconcave::PiecewiseLogLinearDensity;
use floatbody::ConvexBody;

#[derive(Parser)]
#[command(name = "floatbody", version, about = "Convex floating bodies of polytopes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a standard body as JSON.
    Body {
        #[arg(long)]
        shape: String,
        #[arg(long)]
        dim: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Outer approximation of the floating body of a body.
    Compute {
        #[arg(long)]
        body: PathBuf,
        #[arg(long)]
        delta: f64,
        #[arg(long)]
        directions: Option<usize>,
        #[arg(long, default_value = "exact")]
        mode: Mode,
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Bring a body to isotropic position. The image goes to `--out`, the
    /// normalizing map to stdout.
    Isotropic {
        #[arg(long)]
        body: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Hausdorff and logarithmic Hausdorff distances between two bodies.
    /// Either file may also be a floating-body report, whose outer body is used.
    Distance {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Inclusion, distance and simplex sharpness bounds.
    VerifyThm2 {
        #[command(flatten)]
        grid: Grid,
    },
    /// Isotropic depth sandwich.
    VerifyThm1 {
        #[command(flatten)]
        grid: Grid,
    },
    /// One-dimensional log-concave inequalities on the density battery.
    VerifyLemmas {
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Central sections, cap lower bounds and Brunn concavity.
    VerifySections {
        #[arg(long, value_delimiter = ',', default_values_t = default_bodies())]
        bodies: Vec<String>,
        #[arg(long, value_delimiter = ',', default_values_t = vec![2, 3])]
        dims: Vec<usize>,
        #[arg(long, default_value_t = 32)]
        directions: usize,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Distance from the cube to its floating body across dimensions.
    Thm3Trend {
        #[arg(long, value_delimiter = ',', default_values_t = vec![2, 3, 4, 5, 6])]
        dims: Vec<usize>,
        #[arg(long, default_value_t = 0.1)]
        delta: f64,
        #[arg(long)]
        directions: Option<usize>,
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// JSON reports.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
}

#[derive(Args)]
struct Grid {
    #[arg(long, value_delimiter = ',', default_values_t = default_bodies())]
    bodies: Vec<String>,
    #[arg(long, value_delimiter = ',', default_values_t = vec![2])]
    dims: Vec<usize>,
    #[arg(long, value_delimiter = ',', required = true)]
    deltas: Vec<f64>,
    #[arg(long)]
    directions: Option<usize>,
    #[arg(long)]
    csv: Option<PathBuf>,
}

fn default_bodies() -> Vec<String> {
    ["cube", "simplex", "cross_polytope"].map(String::from).to_vec()
}

/// Outcome of a command that ran to completion.
enum Status {
    Ok,
    FailedRows(usize),
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            let mut stdout = io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            stdout.write_all(b"\n")?;
            Ok(())
        }
    }
}

fn emit_rows(out: Option<&Path>, rows: &[VerificationRow]) -> Result<Status> {
    match out {
        Some(path) => write_csv(rows, fs::File::create(path).with_context(|| format!("creating {}", path.display()))?)?,
        None => write_csv(rows, io::stdout().lock())?,
    }
    let failed = rows.iter().filter(|r| !r.pass).count();
    Ok(if all_pass(rows) { Status::Ok } else { Status::FailedRows(failed) })
}

fn load_body(path: &Path) -> Result<ConvexBody> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let value: serde_json::Value =
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    let body = match value.get("outer") {
        Some(outer) => ConvexBody::from_json_str(&outer.to_string()),
        None => ConvexBody::from_json_str(&text),
    };
    body.with_context(|| format!("loading body from {}", path.display()))
}

fn run(cli: Cli) -> Result<Status> {
    match cli.command {
        Command::Body { shape, dim, out } => {
            emit(out.as_deref(), &standard_body(&shape, dim)?.to_json_string()?)?;
        }
        Command::Compute { body, delta, directions, mode, samples, seed, out } => {
            let k = load_body(&body)?;
            let n = directions.unwrap_or_else(|| default_direction_count(k.dim()));
            let opts = match mode {
                Mode::Exact => FloatingOptions::exact(n),
                Mode::Mc => FloatingOptions::mc(n, samples, seed),
            };
            let fb = floating_body(&k, delta, &opts)?;
            emit(out.as_deref(), &serde_json::to_string_pretty(&fb.to_json())?)?;
        }
        Command::Isotropic { body, out } => {
            let (iso, form) = to_isotropic(&load_body(&body)?)?;
            if let Some(path) = out.as_deref() {
                emit(Some(path), &iso.to_json_string()?)?;
            }
            emit(None, &serde_json::to_string_pretty(&form)?)?;
        }
        Command::Distance { a, b, out } => {
            let report = log_hausdorff(&load_body(&a)?, &load_body(&b)?)?;
            emit(out.as_deref(), &serde_json::to_string_pretty(&report)?)?;
            eprintln!(
                "dLAtCentroid {:.9} dLOptimized {:.9} witness {:?}",
                report.d_l_at_centroid, report.d_l_optimized, report.witness_direction
            );
        }
        Command::VerifyThm2 { grid } => {
            let rows = verify_thm2(&grid.bodies, &grid.dims, &grid.deltas, grid.directions)?;
            return emit_rows(grid.csv.as_deref(), &rows);
        }
        Command::VerifyThm1 { grid } => {
            for &delta in &grid.deltas {
                if !(delta > 0.0 && delta < (-1f64).exp()) {
                    bail!("δ = {delta} must lie in (0, 1/e)");
                }
            }
            let rows = verify_thm1(&grid.bodies, &grid.dims, &grid.deltas, grid.directions)?;
            return emit_rows(grid.csv.as_deref(), &rows);
        }
        Command::VerifyLemmas { csv } => {
            let rows = verify_lemmas(&PiecewiseLogLinearDensity::battery())?;
            return emit_rows(csv.as_deref(), &rows);
        }
        Command::VerifySections { bodies, dims, directions, csv } => {
            let rows = verify_sections(&bodies, &dims, directions)?;
            return emit_rows(csv.as_deref(), &rows);
        }
        Command::Thm3Trend { dims, delta, directions, samples, seed, out, csv } => {
            let reports = thm3_trend(&dims, delta, directions, samples, seed)?;
            if let Some(path) = out.as_deref() {
                emit(Some(path), &serde_json::to_string_pretty(&reports)?)?;
            }
            // Reporting only: the exit code does not depend on the trend rows.
            emit_rows(csv.as_deref(), &thm3_rows(&reports))?;
        }
    }
    Ok(Status::Ok)
}

fn configure_threads() -> Result<()> {
    let Ok(raw) = std::env::var("FLOATBODY_THREADS") else {
        return Ok(());
    };
    let threads: usize = raw.trim().parse().with_context(|| format!("FLOATBODY_THREADS={raw:?}"))?;
    if threads == 0 {
        bail!("FLOATBODY_THREADS must be positive");
    }
    #[cfg(feature = "parallel")]
    rayon::ThreadPoolBuilder::new().num_threads(threads).build_global()?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match configure_threads().and_then(|()| run(cli)) {
        Ok(Status::Ok) => ExitCode::SUCCESS,
        Ok(Status::FailedRows(n)) => {
            eprintln!("{n} rows failed");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

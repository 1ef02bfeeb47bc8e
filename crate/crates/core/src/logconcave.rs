//! One-dimensional log-concave densities with piecewise linear logarithm,
//! and the classical rigidity checks for such densities.
//!
//! A density is given by knots `t_0 < ... < t_k`, log-values `g_i` at the
//! knots (up to an additive constant) and optional exponential tails: on
//! `(-inf, t_0]` with positive log-slope and on `[t_k, inf)` with negative
//! log-slope. Between knots `log f` is linear, so every integral is a closed
//! form in `exp`/`expm1`/`ln_1p`.

use std::f64::consts::E;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measure::SectionProfile;
use crate::report::Check;

/// Boundary tolerance for the rigidity checks; the exponential attains
/// equality in the centroid-mass bound and the uniform in `f(m) >= 1/√12`.
pub const CHECK_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
enum Piece {
    /// `(-inf, t_0]`.
    LeftTail { slope: f64 },
    /// `[t_i, t_{i+1}]`.
    Segment { i: usize },
    /// `[t_k, inf)`.
    RightTail { slope: f64 },
}

#[derive(Debug, Clone)]
pub struct PiecewiseLogLinearDensity {
    knots: Vec<f64>,
    /// Log-values shifted so the maximum is 0.
    log_values: Vec<f64>,
    left_slope: Option<f64>,
    right_slope: Option<f64>,
    pieces: Vec<Piece>,
    /// Unnormalised mass of each piece.
    masses: Vec<f64>,
    /// Prefix sums of `masses` (length `pieces + 1`).
    prefix: Vec<f64>,
    /// Suffix sums of `masses` (`suffix[p]` = mass of pieces `p..`).
    suffix: Vec<f64>,
    z: f64,
    mean: f64,
    variance: f64,
}

/// `∫_0^1 v^j e^{-x v} dv` for `j = 0, 1, 2` and `x >= 0`.
fn truncated_exp_moments(x: f64) -> [f64; 3] {
    if x <= 1.0 {
        let mut out = [0.0; 3];
        for (j, o) in out.iter_mut().enumerate() {
            let mut term = 1.0; // (-x)^n / n!
            let mut sum = 0.0;
            for n in 0..40 {
                sum += term / (n + j + 1) as f64;
                term *= -x / (n + 1) as f64;
            }
            *o = sum;
        }
        out
    } else {
        let ex = (-x).exp();
        let j0 = -(-x).exp_m1() / x;
        let j1 = (j0 - ex) / x;
        let j2 = (2.0 * j1 - ex) / x;
        [j0, j1, j2]
    }
}

/// `(e^z - 1) / z`, continuous at 0.
fn expm1_ratio(z: f64) -> f64 {
    if z.abs() < 1e-12 {
        1.0 + 0.5 * z
    } else {
        z.exp_m1() / z
    }
}

impl PiecewiseLogLinearDensity {
    /// Validating constructor; `log_values` need not be normalised.
    pub fn new(
        knots: Vec<f64>,
        log_values: Vec<f64>,
        left_slope: Option<f64>,
        right_slope: Option<f64>,
    ) -> Result<Self> {
        if knots.is_empty() || knots.len() != log_values.len() {
            return Err(Error::InvalidDensity("knots and log-values must be nonempty and of equal length".into()));
        }
        if knots.iter().chain(&log_values).any(|x| !x.is_finite()) {
            return Err(Error::InvalidDensity("non-finite knot or log-value".into()));
        }
        if knots.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidDensity("knots must be strictly increasing".into()));
        }
        if let Some(s) = left_slope {
            if !(s > 0.0 && s.is_finite()) {
                return Err(Error::InvalidDensity(format!("left tail needs a positive log-slope, got {s}")));
            }
        }
        if let Some(s) = right_slope {
            if !(s < 0.0 && s.is_finite()) {
                return Err(Error::InvalidDensity(format!("right tail needs a negative log-slope, got {s}")));
            }
        }
        if knots.len() == 1 && left_slope.is_none() && right_slope.is_none() {
            return Err(Error::InvalidDensity("a single knot needs at least one tail".into()));
        }
        let mut slopes: Vec<f64> = left_slope.into_iter().collect();
        slopes.extend(knots.windows(2).zip(log_values.windows(2)).map(|(t, g)| (g[1] - g[0]) / (t[1] - t[0])));
        slopes.extend(right_slope);
        for w in slopes.windows(2) {
            if w[1] > w[0] + 1e-12 * (1.0 + w[0].abs().max(w[1].abs())) {
                return Err(Error::InvalidDensity(format!(
                    "log-density is not concave (slope {} followed by {})",
                    w[0], w[1]
                )));
            }
        }
        let gmax = log_values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let log_values: Vec<f64> = log_values.iter().map(|g| g - gmax).collect();

        let mut pieces = Vec::new();
        if let Some(slope) = left_slope {
            pieces.push(Piece::LeftTail { slope });
        }
        pieces.extend((0..knots.len() - 1).map(|i| Piece::Segment { i }));
        if let Some(slope) = right_slope {
            pieces.push(Piece::RightTail { slope });
        }

        let k = knots.len() - 1;
        let mut masses = Vec::with_capacity(pieces.len());
        let mut means = Vec::with_capacity(pieces.len());
        let mut vars = Vec::with_capacity(pieces.len());
        for &p in &pieces {
            let (m, mu, var) = match p {
                Piece::LeftTail { slope } => {
                    (log_values[0].exp() / slope, knots[0] - 1.0 / slope, 1.0 / (slope * slope))
                }
                Piece::RightTail { slope } => {
                    let r = -slope;
                    (log_values[k].exp() / r, knots[k] + 1.0 / r, 1.0 / (r * r))
                }
                Piece::Segment { i } => {
                    let (a, b) = (knots[i], knots[i + 1]);
                    let (ga, gb) = (log_values[i], log_values[i + 1]);
                    let len = b - a;
                    // Anchor at the larger end so the exponent decays.
                    let x = (ga - gb).abs();
                    let [j0, j1, j2] = truncated_exp_moments(x);
                    let gtop = ga.max(gb);
                    let mass = gtop.exp() * len * j0;
                    let offset = len * j1 / j0;
                    let var = len * len * (j2 / j0 - (j1 / j0) * (j1 / j0));
                    let mu = if ga >= gb { a + offset } else { b - offset };
                    (mass, mu, var.max(0.0))
                }
            };
            masses.push(m);
            means.push(mu);
            vars.push(var);
        }
        let z: f64 = masses.iter().sum();
        let mean = masses.iter().zip(&means).map(|(m, mu)| m * mu).sum::<f64>() / z;
        let variance = masses
            .iter()
            .zip(means.iter().zip(&vars))
            .map(|(m, (mu, v))| m * (v + (mu - mean) * (mu - mean)))
            .sum::<f64>()
            / z;
        if !(variance > 0.0) {
            return Err(Error::InvalidDensity("zero variance".into()));
        }
        let mut prefix = vec![0.0];
        for m in &masses {
            prefix.push(prefix.last().unwrap() + m);
        }
        let mut suffix = vec![0.0; masses.len() + 1];
        for p in (0..masses.len()).rev() {
            suffix[p] = suffix[p + 1] + masses[p];
        }
        Ok(Self { knots, log_values, left_slope, right_slope, pieces, masses, prefix, suffix, z, mean, variance })
    }

    /// Standardised shifted exponential `f(t) = e^{-(t+1)}` on `[-1, inf)`.
    pub fn exponential() -> Self {
        Self::new(vec![-1.0], vec![0.0], None, Some(-1.0)).expect("valid exponential")
    }

    /// Uniform on `[a, b]`.
    pub fn uniform(a: f64, b: f64) -> Result<Self> {
        Self::new(vec![a, b], vec![0.0, 0.0], None, None)
    }

    /// Laplace with location 0 and scale `b` (variance `2 b^2`).
    pub fn laplace(b: f64) -> Result<Self> {
        if !(b > 0.0) {
            return Err(Error::InvalidDensity(format!("Laplace scale {b}")));
        }
        Self::new(vec![0.0], vec![0.0], Some(1.0 / b), Some(-1.0 / b))
    }

    /// Standard Gaussian truncated to `[-8, 8]`, log-density interpolated
    /// linearly between `knots` equally spaced points.
    pub fn gaussian(knots: usize) -> Result<Self> {
        if knots < 2 {
            return Err(Error::InvalidDensity("need at least 2 knots".into()));
        }
        let t: Vec<f64> = (0..knots).map(|i| -8.0 + 16.0 * i as f64 / (knots - 1) as f64).collect();
        let g = t.iter().map(|x| -0.5 * x * x).collect();
        Self::new(t, g, None, None)
    }

    /// Triangular density on `[-a, 2a]` with its mode at `-a` (mean 0,
    /// variance `a^2 / 2`). The log of the linear decay is interpolated on
    /// knots that cluster geometrically at the zero end; the support is cut
    /// where the remaining mass is below `1e-14`.
    pub fn triangular(a: f64) -> Result<Self> {
        if !(a > 0.0) {
            return Err(Error::InvalidDensity(format!("triangular scale {a}")));
        }
        let end = 2.0 * a;
        let n = 4000;
        let step = 3.0 * a / n as f64;
        let mut t: Vec<f64> = (0..n).map(|i| -a + step * i as f64).collect();
        // Geometric knots into the zero at the right end, down to about 1e-7 * a.
        let mut gap = 0.9 * step;
        while gap > 3e-7 * a {
            t.push(end - gap);
            gap *= 0.9;
        }
        let g = t.iter().map(|x| (end - x).ln()).collect();
        Self::new(t, g, None, None)
    }

    /// `e^{-t}` restricted to `[0, len]`.
    pub fn truncated_exponential(len: f64) -> Result<Self> {
        if !(len > 0.0) {
            return Err(Error::InvalidDensity(format!("truncation length {len}")));
        }
        Self::new(vec![0.0, len], vec![0.0, -len], None, None)
    }

    /// The standard battery used by the lemma suite.
    pub fn battery() -> Vec<(&'static str, Self)> {
        let s3 = 3f64.sqrt();
        vec![
            ("exponential", Self::exponential()),
            ("uniform", Self::uniform(-s3, s3).expect("valid")),
            ("laplace", Self::laplace(0.5f64.sqrt()).expect("valid")),
            ("gaussian64", Self::gaussian(64).expect("valid")),
            ("triangular", Self::triangular(2f64.sqrt()).expect("valid")),
            ("truncated_exponential", Self::truncated_exponential(3.0).expect("valid")),
        ]
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn variance(&self) -> f64 {
        self.variance
    }

    pub fn std_dev(&self) -> f64 {
        self.variance.sqrt()
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    /// Support `(lo, hi)`, possibly infinite.
    pub fn support(&self) -> (f64, f64) {
        let lo = if self.left_slope.is_some() { f64::NEG_INFINITY } else { self.knots[0] };
        let hi = if self.right_slope.is_some() { f64::INFINITY } else { *self.knots.last().unwrap() };
        (lo, hi)
    }

    /// Unnormalised log-density (`-inf` outside the support).
    fn log_density(&self, t: f64) -> f64 {
        let k = self.knots.len() - 1;
        if t < self.knots[0] {
            return match self.left_slope {
                Some(s) => self.log_values[0] + s * (t - self.knots[0]),
                None => f64::NEG_INFINITY,
            };
        }
        if t > self.knots[k] {
            return match self.right_slope {
                Some(s) => self.log_values[k] + s * (t - self.knots[k]),
                None => f64::NEG_INFINITY,
            };
        }
        let i = self.knots.partition_point(|&x| x <= t).saturating_sub(1).min(k.saturating_sub(1));
        if k == 0 {
            return self.log_values[0];
        }
        let (a, b) = (self.knots[i], self.knots[i + 1]);
        let w = (t - a) / (b - a);
        self.log_values[i] * (1.0 - w) + self.log_values[i + 1] * w
    }

    pub fn pdf(&self, t: f64) -> f64 {
        self.log_density(t).exp() / self.z
    }

    /// `sup f`, attained at a knot.
    pub fn sup(&self) -> f64 {
        1.0 / self.z
    }

    fn piece_of(&self, t: f64) -> usize {
        let k = self.knots.len() - 1;
        let left = usize::from(self.left_slope.is_some());
        if t < self.knots[0] {
            return 0;
        }
        if t >= self.knots[k] {
            return self.pieces.len() - 1;
        }
        left + self.knots.partition_point(|&x| x <= t) - 1
    }

    /// Unnormalised mass of piece `p` to the left of `t` (t inside the piece).
    fn partial_left(&self, p: usize, t: f64) -> f64 {
        let k = self.knots.len() - 1;
        match self.pieces[p] {
            Piece::LeftTail { slope } => (self.log_values[0] + slope * (t - self.knots[0])).exp() / slope,
            Piece::Segment { i } => {
                let a = self.knots[i];
                let s = (self.log_values[i + 1] - self.log_values[i]) / (self.knots[i + 1] - a);
                let u = t - a;
                self.log_values[i].exp() * u * expm1_ratio(s * u)
            }
            Piece::RightTail { slope } => {
                let u = t - self.knots[k];
                self.log_values[k].exp() * u * expm1_ratio(slope * u)
            }
        }
    }

    /// Unnormalised mass of piece `p` to the right of `t`.
    fn partial_right(&self, p: usize, t: f64) -> f64 {
        match self.pieces[p] {
            Piece::RightTail { slope } => {
                let k = self.knots.len() - 1;
                (self.log_values[k] + slope * (t - self.knots[k])).exp() / -slope
            }
            Piece::LeftTail { slope } => {
                let u = self.knots[0] - t;
                self.log_values[0].exp() * u * expm1_ratio(-slope * u)
            }
            Piece::Segment { i } => {
                let b = self.knots[i + 1];
                let s = (self.log_values[i + 1] - self.log_values[i]) / (b - self.knots[i]);
                let u = b - t;
                self.log_values[i + 1].exp() * u * expm1_ratio(-s * u)
            }
        }
    }

    pub fn cdf(&self, t: f64) -> f64 {
        let (lo, hi) = self.support();
        if t <= lo {
            return 0.0;
        }
        if t >= hi {
            return 1.0;
        }
        let p = self.piece_of(t);
        ((self.prefix[p] + self.partial_left(p, t)) / self.z).clamp(0.0, 1.0)
    }

    /// `1 - F(t)`, computed from the right so tails keep relative accuracy.
    pub fn sf(&self, t: f64) -> f64 {
        let (lo, hi) = self.support();
        if t <= lo {
            return 1.0;
        }
        if t >= hi {
            return 0.0;
        }
        let p = self.piece_of(t);
        ((self.suffix[p + 1] + self.partial_right(p, t)) / self.z).clamp(0.0, 1.0)
    }

    /// `F^{-1}(p)` in closed form.
    pub fn quantile(&self, p: f64) -> Result<f64> {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::OutOfRange(format!("probability {p} not in (0, 1)")));
        }
        if p <= 0.5 {
            let target = p * self.z;
            let piece = (0..self.pieces.len()).find(|&q| self.prefix[q + 1] >= target).unwrap_or(self.pieces.len() - 1);
            Ok(self.invert_left(piece, target - self.prefix[piece]))
        } else {
            let target = (1.0 - p) * self.z;
            let piece = (0..self.pieces.len()).rev().find(|&q| self.suffix[q] >= target).unwrap_or(0);
            Ok(self.invert_right(piece, target - self.suffix[piece + 1]))
        }
    }

    /// `t` inside piece `p` with `partial_left(p, t) = r`.
    fn invert_left(&self, p: usize, r: f64) -> f64 {
        let r = r.clamp(0.0, self.masses[p]);
        let k = self.knots.len() - 1;
        match self.pieces[p] {
            Piece::LeftTail { slope } => self.knots[0] + (r * slope).ln() / slope - self.log_values[0] / slope,
            Piece::Segment { i } => {
                let a = self.knots[i];
                let s = (self.log_values[i + 1] - self.log_values[i]) / (self.knots[i + 1] - a);
                a + solve_linear_exp(self.log_values[i], s, r).min(self.knots[i + 1] - a)
            }
            Piece::RightTail { slope } => self.knots[k] + solve_linear_exp(self.log_values[k], slope, r),
        }
    }

    /// `t` inside piece `p` with `partial_right(p, t) = r`.
    fn invert_right(&self, p: usize, r: f64) -> f64 {
        let r = r.clamp(0.0, self.masses[p]);
        let k = self.knots.len() - 1;
        match self.pieces[p] {
            Piece::RightTail { slope } => self.knots[k] + ((r * -slope).ln() - self.log_values[k]) / slope,
            Piece::Segment { i } => {
                let b = self.knots[i + 1];
                let s = (self.log_values[i + 1] - self.log_values[i]) / (b - self.knots[i]);
                b - solve_linear_exp(self.log_values[i + 1], -s, r).min(b - self.knots[i])
            }
            Piece::LeftTail { slope } => self.knots[0] - solve_linear_exp(self.log_values[0], -slope, r),
        }
    }

    pub fn median(&self) -> f64 {
        self.quantile(0.5).expect("0.5 is a valid probability")
    }

    /// Density of `(X - a) / b` for `b > 0`.
    pub fn affine(&self, a: f64, b: f64) -> Result<Self> {
        if !(b > 0.0 && b.is_finite()) || !a.is_finite() {
            return Err(Error::OutOfRange(format!("affine change ({a}, {b})")));
        }
        Self::new(
            self.knots.iter().map(|t| (t - a) / b).collect(),
            self.log_values.clone(),
            self.left_slope.map(|s| s * b),
            self.right_slope.map(|s| s * b),
        )
    }

    /// Mean 0, variance 1.
    pub fn standardized(&self) -> Result<Self> {
        self.affine(self.mean, self.std_dev())
    }

    /// Mean 0, same scale.
    pub fn centered(&self) -> Result<Self> {
        self.affine(self.mean, 1.0)
    }
}

/// `u >= 0` with `∫_0^u e^{g + s v} dv = r`.
fn solve_linear_exp(g: f64, s: f64, r: f64) -> f64 {
    let q = r * (-g).exp();
    if s.abs() * q < 1e-12 {
        q
    } else {
        (s * q).ln_1p() / s
    }
}

// ---------------------------------------------------------------------------
// Rigidity checks

#[derive(Debug, Clone)]
pub struct RigidityReport {
    pub f0: f64,
    pub fm: f64,
    pub sup: f64,
    pub pass: bool,
    pub checks: Vec<Check>,
}

/// `1/8 <= f(0) <= sup f <= 1` and `1/√12 <= f(m) <= 1/√2` for the
/// standardised density.
pub fn check_rigidity(density: &PiecewiseLogLinearDensity) -> Result<RigidityReport> {
    let std = density.standardized()?;
    let f0 = std.pdf(0.0);
    let m = std.median();
    let fm = std.pdf(m);
    let sup = std.sup();
    let checks = vec![
        Check::new("rigidity", "f(0)", 0.125, f0, sup, CHECK_TOL),
        Check::new("rigidity", "sup f", f0, sup, 1.0, CHECK_TOL),
        Check::new("rigidity", "f(m)", 1.0 / 12f64.sqrt(), fm, 0.5f64.sqrt(), CHECK_TOL),
    ];
    let pass = checks.iter().all(|c| c.pass);
    Ok(RigidityReport { f0, fm, sup, pass, checks })
}

/// `(e^{-1} - ρ) σ <= F^{-1}(1 - ρ) <= 10 ln(2/ρ) σ` after centring.
pub fn check_quantile_bracket(density: &PiecewiseLogLinearDensity, rho: f64) -> Result<Check> {
    if !(rho > 0.0 && rho < 1.0 / E) {
        return Err(Error::OutOfRange(format!("ρ = {rho} not in (0, 1/e)")));
    }
    let c = density.centered()?;
    let sigma = c.std_dev();
    let q = c.quantile(1.0 - rho)?;
    Ok(Check::new(
        "quantile_bracket",
        &format!("F^-1(1-{rho})"),
        (1.0 / E - rho) * sigma,
        q,
        10.0 * (2.0 / rho).ln() * sigma,
        CHECK_TOL,
    ))
}

/// `1 - F(t) <= 2 e^{-t/10}` for the standardised density at every `t >= 0`.
pub fn check_tail(density: &PiecewiseLogLinearDensity, t_grid: &[f64]) -> Result<Vec<Check>> {
    let std = density.standardized()?;
    Ok(t_grid
        .iter()
        .filter(|&&t| t >= 0.0)
        .map(|&t| {
            Check::new("tail", &format!("1-F({t})"), f64::NEG_INFINITY, std.sf(t), 2.0 * (-t / 10.0).exp(), CHECK_TOL)
        })
        .collect())
}

/// `e^{-1} <= 1 - F(0) <= 1 - e^{-1}` after centring.
pub fn check_centroid_mass(density: &PiecewiseLogLinearDensity) -> Result<Check> {
    let c = density.centered()?;
    Ok(Check::new("centroid_mass", "1-F(0)", 1.0 / E, c.sf(0.0), 1.0 - 1.0 / E, CHECK_TOL))
}

/// Concavity of `ψ^{1/(d-1)}` across consecutive grid triples. The check
/// value is the smallest chord slack, which must be `>= -1e-7`.
pub fn check_brunn(profile: &SectionProfile, d: usize) -> Result<Check> {
    if d < 2 {
        return Err(Error::OutOfRange("Brunn concavity needs d >= 2".into()));
    }
    let p = 1.0 / (d - 1) as f64;
    let g: Vec<f64> = profile.psi.iter().map(|&x| x.max(0.0).powf(p)).collect();
    let slack = concavity_slack(&profile.grid, &g);
    Ok(Check::new("brunn", "min chord slack of psi^(1/(d-1))", -1e-7, slack, f64::INFINITY, 0.0))
}

/// Concavity of `log ψ` on the open support (points with `ψ > 0`).
pub fn check_log_concave_profile(profile: &SectionProfile) -> Check {
    let (t, g): (Vec<f64>, Vec<f64>) =
        profile.grid.iter().zip(&profile.psi).filter(|&(_, &p)| p > 0.0).map(|(&t, &p)| (t, p.ln())).unzip();
    let slack = concavity_slack(&t, &g);
    Check::new("log_concavity", "min chord slack of log psi", -1e-7, slack, f64::INFINITY, 0.0)
}

/// `min_i g(t_i) - chord(t_{i-1}, t_{i+1})(t_i)`; non-negative for concave data.
pub fn concavity_slack(t: &[f64], g: &[f64]) -> f64 {
    (1..t.len().saturating_sub(1))
        .map(|i| {
            let w = (t[i] - t[i - 1]) / (t[i + 1] - t[i - 1]);
            g[i] - ((1.0 - w) * g[i - 1] + w * g[i + 1])
        })
        .fold(f64::INFINITY, f64::min)
}

// ---------------------------------------------------------------------------
// JSON

/// `{"knots": [...], "logValues": [...]}` (with optional `leftSlope`,
/// `rightSlope`) or `{"family": "...", "params": {...}}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DensityJson {
    Knots {
        knots: Vec<f64>,
        #[serde(rename = "logValues")]
        log_values: Vec<f64>,
        #[serde(rename = "leftSlope", default, skip_serializing_if = "Option::is_none")]
        left_slope: Option<f64>,
        #[serde(rename = "rightSlope", default, skip_serializing_if = "Option::is_none")]
        right_slope: Option<f64>,
    },
    Family {
        family: String,
        #[serde(default)]
        params: serde_json::Map<String, serde_json::Value>,
    },
}

impl TryFrom<&DensityJson> for PiecewiseLogLinearDensity {
    type Error = Error;

    fn try_from(j: &DensityJson) -> Result<Self> {
        match j {
            DensityJson::Knots { knots, log_values, left_slope, right_slope } => {
                Self::new(knots.clone(), log_values.clone(), *left_slope, *right_slope)
            }
            DensityJson::Family { family, params } => {
                let get = |k: &str, default: f64| -> Result<f64> {
                    match params.get(k) {
                        None => Ok(default),
                        Some(v) => {
                            v.as_f64().ok_or_else(|| Error::InvalidDensity(format!("parameter {k} must be a number")))
                        }
                    }
                };
                let s3 = 3f64.sqrt();
                match family.as_str() {
                    "exponential" => Ok(Self::exponential()),
                    "uniform" => Self::uniform(get("a", -s3)?, get("b", s3)?),
                    "laplace" => Self::laplace(get("b", 0.5f64.sqrt())?),
                    "gaussian" => Self::gaussian(get("knots", 64.0)? as usize),
                    "triangular" => Self::triangular(get("a", 2f64.sqrt())?),
                    "truncated_exponential" => Self::truncated_exponential(get("length", 3.0)?),
                    other => Err(Error::InvalidDensity(format!("unknown family {other:?}"))),
                }
            }
        }
    }
}

/// `1 / sqrt(2π)`.
pub const GAUSSIAN_PEAK: f64 = 0.398_942_280_401_432_7;

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    /// Composite Simpson on a fine grid as an independent integrator.
    fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
        let h = (b - a) / n as f64;
        let mut s = f(a) + f(b);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            s += w * f(a + i as f64 * h);
        }
        s * h / 3.0
    }

    #[test]
    fn family_moments() {
        let e = PiecewiseLogLinearDensity::exponential();
        assert_abs_diff_eq!(e.mean(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(e.variance(), 1.0, epsilon = 1e-15);
        let u = PiecewiseLogLinearDensity::uniform(-3f64.sqrt(), 3f64.sqrt()).unwrap();
        assert_abs_diff_eq!(u.mean(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(u.variance(), 1.0, epsilon = 1e-14);
        let l = PiecewiseLogLinearDensity::laplace(0.5f64.sqrt()).unwrap();
        assert_abs_diff_eq!(l.mean(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(l.variance(), 1.0, epsilon = 1e-14);
        let t = PiecewiseLogLinearDensity::triangular(2f64.sqrt()).unwrap();
        assert_abs_diff_eq!(t.mean(), 0.0, epsilon = 1e-4);
        assert_abs_diff_eq!(t.variance(), 1.0, epsilon = 1e-4);
    }

    #[test]
    fn moments_match_quadrature() {
        let d = PiecewiseLogLinearDensity::new(
            vec![-1.0, -0.2, 0.1, 0.5, 2.0],
            vec![-3.0, -0.5, 0.0, -0.05, -2.0],
            Some(4.0),
            Some(-2.5),
        )
        .unwrap();
        let (a, b) = (-12.0, 20.0);
        let mass = simpson(|t| d.pdf(t), a, b, 400_000);
        let mean = simpson(|t| t * d.pdf(t), a, b, 400_000);
        let second = simpson(|t| t * t * d.pdf(t), a, b, 400_000);
        assert_abs_diff_eq!(mass, 1.0, epsilon = 1e-8);
        assert_abs_diff_eq!(mean, d.mean(), epsilon = 1e-8);
        assert_abs_diff_eq!(second - mean * mean, d.variance(), epsilon = 1e-8);
        for t in [-3.0, -0.5, 0.0, 0.3, 1.7, 4.0] {
            assert_abs_diff_eq!(simpson(|s| d.pdf(s), a, t, 200_000), d.cdf(t), epsilon = 1e-8);
            assert_abs_diff_eq!(d.cdf(t) + d.sf(t), 1.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn rejects_non_concave() {
        let r = PiecewiseLogLinearDensity::new(vec![0.0, 1.0, 2.0], vec![0.0, -1.0, 0.0], None, None);
        assert!(matches!(r, Err(Error::InvalidDensity(_))));
        assert!(PiecewiseLogLinearDensity::new(vec![0.0], vec![0.0], None, Some(1.0)).is_err());
        assert!(PiecewiseLogLinearDensity::new(vec![0.0, 0.0], vec![0.0, 0.0], None, None).is_err());
    }

    #[test]
    fn exponential_closed_forms() {
        let e = PiecewiseLogLinearDensity::exponential();
        assert_abs_diff_eq!(e.quantile(0.9).unwrap(), 10f64.ln() - 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(e.quantile(0.9).unwrap(), 1.302585, epsilon = 1e-6);
        assert_abs_diff_eq!(e.median(), 2f64.ln() - 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(e.sf(5.0), (-6.0f64).exp(), epsilon = 1e-16);
        assert_abs_diff_eq!(e.sf(0.0), (-1.0f64).exp(), epsilon = 1e-15);
        assert_abs_diff_eq!(e.pdf(0.0), (-1.0f64).exp(), epsilon = 1e-15);
    }

    #[test]
    fn uniform_quantile() {
        let u = PiecewiseLogLinearDensity::uniform(-3f64.sqrt(), 3f64.sqrt()).unwrap();
        assert_abs_diff_eq!(u.quantile(0.9).unwrap(), 0.8 * 3f64.sqrt(), epsilon = 1e-12);
        assert!(u.quantile(0.0).is_err());
        assert!(u.quantile(1.0).is_err());
    }

    #[test]
    fn quantile_inverts_cdf_across_battery() {
        for (name, d) in PiecewiseLogLinearDensity::battery() {
            for k in 1..100 {
                let p = k as f64 / 100.0;
                let q = d.quantile(p).unwrap();
                assert_abs_diff_eq!(d.cdf(q), p, epsilon = 1e-12);
                let back = d.quantile(d.cdf(q)).unwrap();
                assert!((back - q).abs() < 1e-10, "{name}: {back} vs {q}");
            }
            assert_abs_diff_eq!(d.cdf(d.median()), 0.5, epsilon = 1e-13);
        }
    }

    #[test]
    fn rigidity_examples() {
        let r = check_rigidity(&PiecewiseLogLinearDensity::exponential()).unwrap();
        assert_abs_diff_eq!(r.f0, (-1.0f64).exp(), epsilon = 1e-14);
        assert_abs_diff_eq!(r.fm, 0.5, epsilon = 1e-14);
        assert!(r.pass);
        let u = check_rigidity(&PiecewiseLogLinearDensity::uniform(-3f64.sqrt(), 3f64.sqrt()).unwrap()).unwrap();
        assert_abs_diff_eq!(u.f0, 1.0 / 12f64.sqrt(), epsilon = 1e-14);
        assert!(u.pass);
        let g = check_rigidity(&PiecewiseLogLinearDensity::gaussian(64).unwrap()).unwrap();
        assert_abs_diff_eq!(g.f0, GAUSSIAN_PEAK, epsilon = 5e-3);
        assert!(g.pass);
    }

    #[test]
    fn quantile_bracket_examples() {
        let c = check_quantile_bracket(&PiecewiseLogLinearDensity::exponential(), 0.05).unwrap();
        assert_abs_diff_eq!(c.value, 20f64.ln() - 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(c.lower, 1.0 / E - 0.05, epsilon = 1e-15);
        assert_abs_diff_eq!(c.upper, 10.0 * 40f64.ln(), epsilon = 1e-12);
        assert!(c.pass);
        let u = check_quantile_bracket(&PiecewiseLogLinearDensity::uniform(-3f64.sqrt(), 3f64.sqrt()).unwrap(), 0.1)
            .unwrap();
        assert_abs_diff_eq!(u.value, 0.8 * 3f64.sqrt(), epsilon = 1e-12);
        assert!(u.pass);
        let near = check_quantile_bracket(&PiecewiseLogLinearDensity::exponential(), 1.0 / E - 1e-9).unwrap();
        assert!(near.value >= 0.0 && near.pass);
        assert!(check_quantile_bracket(&PiecewiseLogLinearDensity::exponential(), 0.5).is_err());
    }

    #[test]
    fn tail_examples() {
        let rows = check_tail(&PiecewiseLogLinearDensity::exponential(), &[0.0, 5.0]).unwrap();
        assert_abs_diff_eq!(rows[1].value, (-6.0f64).exp(), epsilon = 1e-16);
        assert!(rows.iter().all(|r| r.pass));
        let u = check_tail(&PiecewiseLogLinearDensity::uniform(-3f64.sqrt(), 3f64.sqrt()).unwrap(), &[2.0]).unwrap();
        assert_eq!(u[0].value, 0.0);
    }

    #[test]
    fn centroid_mass_examples() {
        let e = check_centroid_mass(&PiecewiseLogLinearDensity::exponential()).unwrap();
        assert_abs_diff_eq!(e.value, 1.0 / E, epsilon = 1e-15);
        assert!(e.pass);
        let l = check_centroid_mass(&PiecewiseLogLinearDensity::laplace(1.0).unwrap()).unwrap();
        assert_abs_diff_eq!(l.value, 0.5, epsilon = 1e-15);
        let t = check_centroid_mass(&PiecewiseLogLinearDensity::triangular(1.0).unwrap()).unwrap();
        // Closed form for the exact triangle on [-a, 2a] with mode -a: (2a)^2 / (3a)^2.
        assert_abs_diff_eq!(t.value, 4.0 / 9.0, epsilon = 1e-4);
        assert!(t.pass && t.value > t.lower + 0.01 && t.value < t.upper - 0.01);
    }

    #[test]
    fn standardization_is_idempotent() {
        for (_, d) in PiecewiseLogLinearDensity::battery() {
            let once = d.standardized().unwrap();
            let twice = once.standardized().unwrap();
            assert_abs_diff_eq!(once.mean(), 0.0, epsilon = 1e-12);
            assert_abs_diff_eq!(once.variance(), 1.0, epsilon = 1e-12);
            for (a, b) in once.knots().iter().zip(twice.knots()) {
                assert_abs_diff_eq!(a, b, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn json_forms() {
        let j: DensityJson = serde_json::from_str(r#"{"family": "laplace", "params": {"b": 2.0}}"#).unwrap();
        let d = PiecewiseLogLinearDensity::try_from(&j).unwrap();
        assert_abs_diff_eq!(d.variance(), 8.0, epsilon = 1e-12);
        let j: DensityJson = serde_json::from_str(r#"{"knots": [0, 1], "logValues": [0, 0]}"#).unwrap();
        let d = PiecewiseLogLinearDensity::try_from(&j).unwrap();
        assert_abs_diff_eq!(d.variance(), 1.0 / 12.0, epsilon = 1e-15);
        let j: DensityJson = serde_json::from_str(r#"{"family": "cauchy"}"#).unwrap();
        assert!(PiecewiseLogLinearDensity::try_from(&j).is_err());
    }

    #[test]
    fn gaussian_peak_constant() {
        assert_abs_diff_eq!(GAUSSIAN_PEAK, 1.0 / (2.0 * PI).sqrt(), epsilon = 1e-16);
    }
}

//! Bound checks shared by the verification routines.

use serde::Serialize;

/// One inequality `lower - tolerance <= value <= upper + tolerance`.
/// One-sided checks use an infinite bound.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub quantity: String,
    pub lower: f64,
    pub value: f64,
    pub upper: f64,
    pub pass: bool,
    pub tolerance: f64,
}

impl Check {
    pub fn new(name: &str, quantity: &str, lower: f64, value: f64, upper: f64, tolerance: f64) -> Self {
        let pass = value.is_finite() && lower - tolerance <= value && value <= upper + tolerance;
        Self { name: name.to_string(), quantity: quantity.to_string(), lower, value, upper, pass, tolerance }
    }

    /// `value >= lower`.
    pub fn at_least(name: &str, quantity: &str, lower: f64, value: f64, tolerance: f64) -> Self {
        Self::new(name, quantity, lower, value, f64::INFINITY, tolerance)
    }

    /// `value <= upper`.
    pub fn at_most(name: &str, quantity: &str, value: f64, upper: f64, tolerance: f64) -> Self {
        Self::new(name, quantity, f64::NEG_INFINITY, value, upper, tolerance)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pass_uses_tolerance() {
        assert!(Check::new("n", "q", 0.0, -1e-10, 1.0, 1e-9).pass);
        assert!(!Check::new("n", "q", 0.0, -1e-8, 1.0, 1e-9).pass);
        assert!(Check::at_most("n", "q", 5.0, f64::INFINITY, 0.0).pass);
        assert!(!Check::at_least("n", "q", 0.0, f64::NAN, 0.0).pass);
    }
}

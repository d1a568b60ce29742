//! Closed-form predictions of the polarized-state dynamics for small `ε`.
//!
//! After the first two kicks only the fully polarized state and the `L`
//! one-magnon states carry appreciable weight, which gives `P(2T)` in closed
//! form. Truncating the dynamics to those states for longer runs gives the
//! one-magnon amplitude `c₁(2nT)` and `P(2nT) = 1 − L|c₁|²`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoPulsePrediction {
    /// `|1 − Lε²(1 + e^{-iJT})|²`.
    pub lowest_order: f64,
    /// `|cos(ε)^{2L} − L e^{-iJT} cos(ε)^{2L−2} sin(ε)²|²`.
    pub unexpanded: f64,
    /// False once `Lε² ≥ 1`, where the expansion is meaningless.
    pub perturbative: bool,
}

/// Return probability after the first two kicks from a polarized state.
pub fn predicted_p2t(length: usize, jt: f64, epsilon: f64) -> TwoPulsePrediction {
    let l = length as f64;
    let phase = Complex64::from_polar(1.0, -jt);
    let lowest =
        Complex64::new(1.0, 0.0) - (Complex64::new(1.0, 0.0) + phase) * (l * epsilon * epsilon);
    let (s, c) = epsilon.sin_cos();
    let unexpanded =
        c.powi(2 * length as i32) - phase * (l * c.powi(2 * length as i32 - 2) * s * s);
    TwoPulsePrediction {
        lowest_order: lowest.norm_sqr(),
        unexpanded: unexpanded.norm_sqr(),
        perturbative: l * epsilon * epsilon < 1.0,
    }
}

/// `|c₁(2nT)|`, the one-magnon amplitude after `2n` kicks.
///
/// Each kick adds `ε` times the phase accumulated so far, so the amplitude is
/// the geometric sum `ε Σ_{j=0}^{2n−1} e^{-ijJT}`. It equals
/// `ε |sin(nJT) / sin(JT/2)|` and is finite (`2nε`) at `JT = 2πm`.
pub fn c1_magnitude(n: usize, jt: f64, epsilon: f64) -> f64 {
    let sum: Complex64 = (0..2 * n)
        .map(|j| Complex64::from_polar(1.0, -(j as f64) * jt))
        .sum();
    epsilon.abs() * sum.norm()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MagnonPrediction {
    pub n: usize,
    pub c1_magnitude: f64,
    /// `1 − L|c₁|²`, clamped at 0.
    pub predicted_p: f64,
    /// Set when the unclamped prediction was negative.
    pub out_of_validity: bool,
}

/// One-magnon prediction of `P(2nT)` from the polarized state.
pub fn predicted_return(n: usize, length: usize, jt: f64, epsilon: f64) -> MagnonPrediction {
    let c1 = c1_magnitude(n, jt, epsilon);
    let raw = 1.0 - length as f64 * c1 * c1;
    MagnonPrediction {
        n,
        c1_magnitude: c1,
        predicted_p: raw.max(0.0),
        out_of_validity: raw < 0.0,
    }
}

//! Basis encoding, drive parameters and state vectors over the `2^L` σᶻ basis.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest chain that may be evolved as a state vector (2^24 amplitudes).
pub const EVOLVE_CAP: usize = 24;
/// Largest chain for which a dense `2^L × 2^L` propagator may be built.
pub const DENSE_CAP: usize = 14;

/// Drive and interaction parameters of the kicked ring.
///
/// Everything except the quasi-energy scale depends on `J` and `T` only
/// through the product `JT`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FloquetParams {
    length: usize,
    coupling: f64,
    period: f64,
    epsilon: f64,
}

impl FloquetParams {
    pub fn new(length: usize, coupling: f64, period: f64, epsilon: f64) -> Result<Self> {
        if length < 2 {
            return Err(Error::invalid(format!(
                "a periodic chain needs L >= 2, got L = {length}"
            )));
        }
        if !period.is_finite() || period <= 0.0 {
            return Err(Error::invalid(format!("period must be > 0, got {period}")));
        }
        if !coupling.is_finite() || !epsilon.is_finite() {
            return Err(Error::invalid("coupling and epsilon must be finite"));
        }
        Ok(FloquetParams {
            length,
            coupling,
            period,
            epsilon,
        })
    }

    /// Parameters from the dimensionless pair `(JT, ε)` with `T = 1`.
    pub fn from_jt(length: usize, jt: f64, epsilon: f64) -> Result<Self> {
        Self::new(length, jt, 1.0, epsilon)
    }

    /// Parameters from `JT/π` and `ε/π`, the units used on the command line.
    pub fn from_units_of_pi(length: usize, jt_over_pi: f64, epsilon_over_pi: f64) -> Result<Self> {
        Self::from_jt(length, jt_over_pi * PI, epsilon_over_pi * PI)
    }

    pub fn length(&self) -> usize {
        self.length
    }

    pub fn coupling(&self) -> f64 {
        self.coupling
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// The dimensionless interaction strength `JT`.
    pub fn jt(&self) -> f64 {
        self.coupling * self.period
    }

    /// Per-site rotation angle of the kick, `π/2 − ε` (no wrapping).
    pub fn kick_angle(&self) -> f64 {
        FRAC_PI_2 - self.epsilon
    }

    pub fn dimension(&self) -> usize {
        1usize << self.length
    }

    pub fn with_jt(&self, jt: f64) -> Self {
        FloquetParams {
            coupling: jt / self.period,
            ..*self
        }
    }

    pub fn with_length(&self, length: usize) -> Result<Self> {
        Self::new(length, self.coupling, self.period, self.epsilon)
    }
}

pub(crate) fn check_evolve_cap(length: usize) -> Result<()> {
    if length > EVOLVE_CAP {
        return Err(Error::Capacity {
            what: "state-vector evolution",
            length,
            cap: EVOLVE_CAP,
        });
    }
    Ok(())
}

pub(crate) fn check_dense_cap(length: usize) -> Result<()> {
    if length > DENSE_CAP {
        return Err(Error::Capacity {
            what: "dense propagator",
            length,
            cap: DENSE_CAP,
        });
    }
    Ok(())
}

fn check_length(length: usize) -> Result<()> {
    if length < 2 {
        return Err(Error::invalid(format!(
            "a periodic chain needs L >= 2, got L = {length}"
        )));
    }
    check_evolve_cap(length)
}

/// `Σᵢ s(i) s(i+1 mod L)` for a basis index, `s = +1` for a set bit.
///
/// For `L = 2` the single physical bond is counted twice (0→1 and 1→0).
pub fn bond_sum(index: usize, length: usize) -> Result<i32> {
    if length == 0 || length > usize::BITS as usize - 1 || index >> length != 0 {
        return Err(Error::invalid(format!(
            "basis index {index} out of range for L = {length}"
        )));
    }
    Ok(bond_sum_unchecked(index, length))
}

/// Number of antiparallel bonds is the popcount of `x XOR rotate(x)`.
#[inline]
pub(crate) fn bond_sum_unchecked(index: usize, length: usize) -> i32 {
    let mask = (1usize << length) - 1;
    let rotated = ((index >> 1) | (index << (length - 1))) & mask;
    let domain_walls = ((index ^ rotated) & mask).count_ones() as i32;
    length as i32 - 2 * domain_walls
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Up,
    Down,
}

/// Normalized amplitudes over the `2^L` σᶻ basis.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    length: usize,
    amplitudes: Vec<Complex64>,
}

impl StateVector {
    /// Wraps raw amplitudes, which must have length `2^L` and unit norm
    /// within `1e-10`.
    pub fn from_amplitudes(length: usize, amplitudes: Vec<Complex64>) -> Result<Self> {
        check_length(length)?;
        if amplitudes.len() != 1 << length {
            return Err(Error::DimensionMismatch {
                left: 1 << length,
                right: amplitudes.len(),
            });
        }
        let state = StateVector { length, amplitudes };
        let norm = state.norm();
        if (norm - 1.0).abs() > 1e-10 {
            return Err(Error::invalid(format!("state norm {norm} is not 1")));
        }
        Ok(state)
    }

    pub(crate) fn from_raw(length: usize, amplitudes: Vec<Complex64>) -> Self {
        debug_assert_eq!(amplitudes.len(), 1 << length);
        StateVector { length, amplitudes }
    }

    pub fn basis(length: usize, index: usize) -> Result<Self> {
        check_length(length)?;
        if index >> length != 0 {
            return Err(Error::invalid(format!(
                "basis index {index} out of range for L = {length}"
            )));
        }
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); 1 << length];
        amplitudes[index] = Complex64::new(1.0, 0.0);
        Ok(StateVector { length, amplitudes })
    }

    pub fn length(&self) -> usize {
        self.length
    }

    pub fn dimension(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub(crate) fn amplitudes_mut(&mut self) -> &mut [Complex64] {
        &mut self.amplitudes
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes
            .iter()
            .map(|a| a.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }
}

/// All-up (index `2^L − 1`) or all-down (index 0) product state.
pub fn polarized_state(length: usize, direction: Direction) -> Result<StateVector> {
    check_length(length)?;
    let index = match direction {
        Direction::Up => (1 << length) - 1,
        Direction::Down => 0,
    };
    StateVector::basis(length, index)
}

/// `(cos(θ/2), sin(θ/2))`, exact when θ is an integer multiple of π.
fn half_angle(theta: f64) -> (f64, f64) {
    let turns = theta / PI;
    if turns.fract() == 0.0 && turns.abs() < 1e15 {
        // θ/2 = kπ/2
        return match (turns as i64).rem_euclid(4) {
            0 => (1.0, 0.0),
            1 => (0.0, 1.0),
            2 => (-1.0, 0.0),
            _ => (0.0, -1.0),
        };
    }
    let (s, c) = (0.5 * theta).sin_cos();
    (c, s)
}

/// Tensor product of single-site Bloch states
/// `cos(θᵢ/2)|↑⟩ + e^{iφᵢ} sin(θᵢ/2)|↓⟩`, one `(θ, φ)` pair per site.
pub fn product_state(length: usize, orientations: &[(f64, f64)]) -> Result<StateVector> {
    check_length(length)?;
    if orientations.len() != length {
        return Err(Error::invalid(format!(
            "expected {length} site orientations, got {}",
            orientations.len()
        )));
    }
    let mut amplitudes = vec![Complex64::new(1.0, 0.0)];
    // Appending site i doubles the vector: bit i clear (↓) is the low half,
    // bit i set (↑) the high half.
    for &(theta, phi) in orientations {
        let (c, s) = half_angle(theta);
        let up = Complex64::new(c, 0.0);
        let down = if s == 0.0 {
            Complex64::new(0.0, 0.0)
        } else {
            Complex64::from_polar(s, phi)
        };
        let lower: Vec<Complex64> = amplitudes.iter().map(|a| a * down).collect();
        let upper: Vec<Complex64> = amplitudes.iter().map(|a| a * up).collect();
        amplitudes = lower;
        amplitudes.extend(upper);
    }
    Ok(StateVector::from_raw(length, amplitudes))
}

/// `⟨a|b⟩ = Σ conj(aₖ) bₖ`.
pub fn overlap(a: &StateVector, b: &StateVector) -> Result<Complex64> {
    if a.dimension() != b.dimension() {
        return Err(Error::DimensionMismatch {
            left: a.dimension(),
            right: b.dimension(),
        });
    }
    Ok(a.amplitudes
        .iter()
        .zip(&b.amplitudes)
        .map(|(x, y)| x.conj() * y)
        .sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn brute_bond_sum(index: usize, length: usize) -> i32 {
        let spin = |i: usize| {
            if index >> (i % length) & 1 == 1 {
                1
            } else {
                -1
            }
        };
        (0..length).map(|i| spin(i) * spin(i + 1)).sum()
    }

    #[test]
    fn polarized_indices() {
        let up = polarized_state(2, Direction::Up).unwrap();
        assert_eq!(up.amplitudes()[3], Complex64::new(1.0, 0.0));
        assert_eq!(up.amplitudes().iter().filter(|a| a.norm() > 0.0).count(), 1);

        let down = polarized_state(4, Direction::Down).unwrap();
        assert_eq!(down.amplitudes()[0], Complex64::new(1.0, 0.0));

        let big = polarized_state(11, Direction::Up).unwrap();
        assert_eq!(big.norm(), 1.0);
        assert_eq!(big.amplitudes()[2047], Complex64::new(1.0, 0.0));
        assert_eq!(
            big.amplitudes().iter().filter(|a| a.norm() > 0.0).count(),
            1
        );
    }

    #[test]
    fn polarized_rejects_bad_lengths() {
        assert!(matches!(
            polarized_state(1, Direction::Up),
            Err(Error::InvalidParameter(_))
        ));
        let err = polarized_state(EVOLVE_CAP + 1, Direction::Up).unwrap_err();
        assert!(err.is_capacity());
    }

    #[test]
    fn product_state_examples() {
        let zeros = product_state(5, &[(0.0, 0.0); 5]).unwrap();
        assert_eq!(zeros, polarized_state(5, Direction::Up).unwrap());

        let flipped = product_state(2, &[(PI, 0.0), (0.0, 0.0)]).unwrap();
        let expected = StateVector::basis(2, 2).unwrap();
        assert_eq!(flipped, expected);

        let tilted = product_state(3, &[(FRAC_PI_2, 0.0), (0.0, 0.0), (0.0, 0.0)]).unwrap();
        for (k, a) in tilted.amplitudes().iter().enumerate() {
            let want = if k == 7 || k == 6 { FRAC_1_SQRT_2 } else { 0.0 };
            assert!((a - Complex64::new(want, 0.0)).norm() < 1e-15, "k={k}");
        }
    }

    #[test]
    fn product_state_wrong_count() {
        assert!(product_state(3, &[(0.0, 0.0); 2]).is_err());
    }

    #[test]
    fn overlap_examples() {
        let up = polarized_state(2, Direction::Up).unwrap();
        let down = polarized_state(2, Direction::Down).unwrap();
        assert_eq!(overlap(&up, &down).unwrap(), Complex64::new(0.0, 0.0));
        assert!((overlap(&up, &up).unwrap() - 1.0).norm() < 1e-15);

        let tilted = product_state(2, &[(FRAC_PI_2, 0.0), (0.0, 0.0)]).unwrap();
        assert!((overlap(&up, &tilted).unwrap() - FRAC_1_SQRT_2).norm() < 1e-15);

        let small = polarized_state(3, Direction::Up).unwrap();
        assert!(matches!(
            overlap(&up, &small),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn bond_sum_examples() {
        assert_eq!(bond_sum(0b1111, 4).unwrap(), 4);
        assert_eq!(bond_sum(0b0101, 4).unwrap(), -4);
        assert_eq!(bond_sum(0b1110, 4).unwrap(), 0);
        // L = 2 double counts the only bond
        assert_eq!(bond_sum(0b01, 2).unwrap(), -2);
        assert_eq!(bond_sum(0b11, 2).unwrap(), 2);
        assert!(bond_sum(16, 4).is_err());
    }

    #[test]
    fn bond_sum_matches_brute_force() {
        for length in 2..=10 {
            for index in 0..1usize << length {
                let b = bond_sum(index, length).unwrap();
                assert_eq!(b, brute_bond_sum(index, length));
                assert!(b.abs() <= length as i32);
                assert_eq!(
                    (b - length as i32).rem_euclid(4),
                    0,
                    "domain walls come in pairs"
                );
            }
        }
    }

    #[test]
    fn params_validation() {
        assert!(FloquetParams::new(1, 1.0, 1.0, 0.0).is_err());
        assert!(FloquetParams::new(4, 1.0, 0.0, 0.0).is_err());
        assert!(FloquetParams::new(4, 1.0, -1.0, 0.0).is_err());
        let p = FloquetParams::from_units_of_pi(4, 1.0, 0.1).unwrap();
        assert_eq!(p.jt(), PI);
        assert!((p.kick_angle() - 0.4 * PI).abs() < 1e-15);
    }

    fn arb_state(length: usize) -> impl Strategy<Value = StateVector> {
        prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 1 << length).prop_filter_map(
            "non-zero",
            move |raw| {
                let amps: Vec<Complex64> = raw.iter().map(|&(r, i)| Complex64::new(r, i)).collect();
                let n = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
                (n > 1e-3).then(|| {
                    StateVector::from_amplitudes(length, amps.iter().map(|a| a / n).collect())
                        .unwrap()
                })
            },
        )
    }

    proptest! {
        #[test]
        fn overlap_is_conjugate_symmetric(a in arb_state(4), b in arb_state(4)) {
            let ab = overlap(&a, &b).unwrap();
            let ba = overlap(&b, &a).unwrap();
            prop_assert!((ab - ba.conj()).norm() < 1e-15);
        }

        #[test]
        fn classical_product_states_are_basis_states(index in 0usize..64) {
            let orientations: Vec<(f64, f64)> = (0..6)
                .map(|i| if index >> i & 1 == 1 { (0.0, 0.3) } else { (PI, 0.0) })
                .collect();
            let state = product_state(6, &orientations).unwrap();
            prop_assert_eq!(state, StateVector::basis(6, index).unwrap());
        }

        #[test]
        fn product_states_are_normalized(angles in prop::collection::vec((0.0f64..PI, -PI..PI), 5)) {
            let state = product_state(5, &angles).unwrap();
            prop_assert!((state.norm() - 1.0).abs() < 1e-12);
        }
    }
}

//! Scalar diagnostics over stroboscopic trajectories.

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::state::{overlap, FloquetParams, StateVector};

/// Default critical value of `P(2nT)` that ends the DTC lifetime.
pub const DEFAULT_THRESHOLD: f64 = 0.05;
/// Default number of `P(2nT)` samples averaged for the phase diagram.
pub const DEFAULT_WINDOW: usize = 1000;

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    /// Period index, starting at 1.
    pub n: usize,
    /// Return probability `|⟨ψ(0)|ψ(nT)⟩|²`.
    pub p: f64,
    /// Per-site `⟨σᶻᵢ⟩`, when requested.
    pub sz: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StroboscopicSeries {
    params: FloquetParams,
    samples: Vec<Sample>,
    norm_drift: f64,
}

impl StroboscopicSeries {
    pub(crate) fn new(params: FloquetParams, samples: Vec<Sample>, norm_drift: f64) -> Self {
        debug_assert!(samples.iter().enumerate().all(|(i, s)| s.n == i + 1));
        StroboscopicSeries {
            params,
            samples,
            norm_drift,
        }
    }

    pub fn params(&self) -> &FloquetParams {
        &self.params
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn norm_drift(&self) -> f64 {
        self.norm_drift
    }

    /// `P(nT)` for `n = 1..=N`.
    pub fn return_probabilities(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.p).collect()
    }

    /// `P(2nT)` for `n = 1..=N/2`.
    pub fn even_return_probabilities(&self) -> Vec<f64> {
        self.samples
            .iter()
            .skip(1)
            .step_by(2)
            .map(|s| s.p)
            .collect()
    }

    /// `⟨σᶻ_site⟩(nT)`, if magnetizations were recorded.
    pub fn sz_series(&self, site: usize) -> Option<Vec<f64>> {
        self.samples
            .iter()
            .map(|s| s.sz.as_ref().and_then(|v| v.get(site).copied()))
            .collect()
    }
}

/// `|⟨initial|current⟩|²`.
pub fn return_probability(current: &StateVector, initial: &StateVector) -> Result<f64> {
    Ok(overlap(initial, current)?.norm_sqr())
}

/// `⟨σᶻ_site⟩ = Σₖ |ψₖ|² s(k, site)`.
pub fn local_sz(state: &StateVector, site: usize) -> Result<f64> {
    if site >= state.length() {
        return Err(Error::invalid(format!(
            "site {site} out of range for L = {}",
            state.length()
        )));
    }
    Ok(state
        .amplitudes()
        .iter()
        .enumerate()
        .map(|(k, a)| {
            let w = a.norm_sqr();
            if k >> site & 1 == 1 {
                w
            } else {
                -w
            }
        })
        .sum())
}

/// `⟨σᶻᵢ⟩` for every site in one pass over the amplitudes.
pub fn sz_profile(state: &StateVector) -> Vec<f64> {
    let length = state.length();
    let mut up = vec![0.0; length];
    let mut total = 0.0;
    for (k, a) in state.amplitudes().iter().enumerate() {
        let w = a.norm_sqr();
        total += w;
        let mut bits = k;
        while bits != 0 {
            let site = bits.trailing_zeros() as usize;
            up[site] += w;
            bits &= bits - 1;
        }
    }
    up.into_iter().map(|u| 2.0 * u - total).collect()
}

/// Plain DFT magnitudes on the grid `ωₖ = k ω₀ / N`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FourierSpectrum {
    /// `ωₖ / ω₀ = k / N`, `k ∈ [0, N)`.
    pub frequencies: Vec<f64>,
    /// `|Σₙ xₙ e^{-2πi kn/N}| / N`.
    pub magnitudes: Vec<f64>,
    pub n_samples: usize,
    /// Drive period, so that `ω₀ = 2π / period`.
    pub period: f64,
}

impl FourierSpectrum {
    /// Bin `k` with the largest magnitude among `1..=N/2`. Lower bins win
    /// ties.
    pub fn dominant_nonzero_bin(&self) -> Option<usize> {
        let half = self.n_samples / 2;
        (1..=half).fold(None, |best, k| match best {
            Some(b) if self.magnitudes[b] >= self.magnitudes[k] => Some(b),
            _ => Some(k),
        })
    }

    /// Bin holding `ω₀/2`, present only for an even number of samples.
    pub fn half_drive_bin(&self) -> Option<usize> {
        self.n_samples
            .is_multiple_of(2)
            .then_some(self.n_samples / 2)
    }

    /// `ωₖ` in the same units as `1/period`.
    pub fn angular_frequency(&self, k: usize) -> f64 {
        2.0 * std::f64::consts::PI / self.period * self.frequencies[k]
    }
}

/// DFT of a stroboscopic sequence sampled at `t = nT`.
///
/// No windowing or detrending is applied.
pub fn fourier_spectrum(samples: &[f64], period: f64) -> Result<FourierSpectrum> {
    let n = samples.len();
    if n == 0 {
        return Err(Error::EmptySeries);
    }
    if n < 2 {
        return Err(Error::invalid(
            "a Fourier spectrum needs at least 2 samples",
        ));
    }
    if period.is_nan() || period <= 0.0 {
        return Err(Error::invalid(format!("period must be > 0, got {period}")));
    }
    let mut buf: Vec<Complex64> = samples.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let scale = 1.0 / n as f64;
    Ok(FourierSpectrum {
        frequencies: (0..n).map(|k| k as f64 / n as f64).collect(),
        magnitudes: buf.iter().map(|z| z.norm() * scale).collect(),
        n_samples: n,
        period,
    })
}

/// Outcome of a lifetime measurement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "n", rename_all = "lowercase")]
pub enum Lifetime {
    /// First `n` with `P(2nT)` below the threshold.
    Crossed(usize),
    /// No crossing within the `n_max` samples available.
    Censored(usize),
}

impl Lifetime {
    /// `n*` for a crossing, `n_max` for a censored run.
    pub fn value(self) -> usize {
        match self {
            Lifetime::Crossed(n) | Lifetime::Censored(n) => n,
        }
    }

    pub fn is_censored(self) -> bool {
        matches!(self, Lifetime::Censored(_))
    }
}

/// Smallest `n` (1-based) with `P(2nT) < threshold`.
pub fn lifetime(even_samples: &[f64], threshold: f64) -> Lifetime {
    even_samples
        .iter()
        .position(|&p| p < threshold)
        .map_or(Lifetime::Censored(even_samples.len()), |i| {
            Lifetime::Crossed(i + 1)
        })
}

/// Mean of the first `window` samples of `P(2nT)`.
pub fn average_return(even_samples: &[f64], window: usize) -> Result<f64> {
    if window == 0 {
        return Err(Error::invalid("averaging window must be at least 1"));
    }
    if window > even_samples.len() {
        return Err(Error::WindowTooLarge {
            window,
            available: even_samples.len(),
        });
    }
    Ok(even_samples[..window].iter().sum::<f64>() / window as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::{polarized_state, product_state, Direction};
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn naive_dft(x: &[f64]) -> Vec<f64> {
        let n = x.len();
        (0..n)
            .map(|k| {
                let z: Complex64 = x
                    .iter()
                    .enumerate()
                    .map(|(m, &v)| {
                        Complex64::from_polar(v, -2.0 * PI * (k * m % n) as f64 / n as f64)
                    })
                    .sum();
                z.norm() / n as f64
            })
            .collect()
    }

    #[test]
    fn return_probability_examples() {
        let up = polarized_state(3, Direction::Up).unwrap();
        let down = polarized_state(3, Direction::Down).unwrap();
        assert!((return_probability(&up, &up).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(return_probability(&up, &down).unwrap(), 0.0);
    }

    #[test]
    fn local_sz_examples() {
        let up = polarized_state(4, Direction::Up).unwrap();
        for site in 0..4 {
            assert_eq!(local_sz(&up, site).unwrap(), 1.0);
        }
        let tilted = product_state(3, &[(0.0, 0.0), (FRAC_PI_2, 0.0), (0.0, 0.0)]).unwrap();
        assert!(local_sz(&tilted, 1).unwrap().abs() < 1e-15);

        let neel = StateVector::basis(4, 0b0101).unwrap();
        let profile: Vec<f64> = (0..4).map(|i| local_sz(&neel, i).unwrap()).collect();
        assert_eq!(profile, vec![1.0, -1.0, 1.0, -1.0]);
        assert_eq!(sz_profile(&neel), profile);

        assert!(local_sz(&neel, 4).is_err());
    }

    #[test]
    fn fourier_examples() {
        let flat = fourier_spectrum(&[0.7; 16], 1.0).unwrap();
        assert!((flat.magnitudes[0] - 0.7).abs() < 1e-15);
        assert!(flat.magnitudes[1..].iter().all(|&m| m < 1e-15));

        let alt: Vec<f64> = (0..16)
            .map(|n| if n % 2 == 0 { 1.0 } else { -1.0 })
            .collect();
        let spec = fourier_spectrum(&alt, 2.0).unwrap();
        assert_eq!(spec.dominant_nonzero_bin(), Some(8));
        assert_eq!(spec.half_drive_bin(), Some(8));
        assert_eq!(spec.frequencies[8], 0.5);
        // ω₀/2 = π/T
        assert!((spec.angular_frequency(8) - PI / 2.0).abs() < 1e-15);
        assert!((spec.magnitudes[8] - 1.0).abs() < 1e-15);

        assert_eq!(fourier_spectrum(&[], 1.0), Err(Error::EmptySeries));
        assert!(fourier_spectrum(&[1.0], 1.0).is_err());
    }

    #[test]
    fn fft_matches_naive_dft() {
        let x: Vec<f64> = (0..37)
            .map(|n| (0.3 * n as f64).sin() + 0.1 * n as f64)
            .collect();
        let fast = fourier_spectrum(&x, 1.0).unwrap();
        for (a, b) in fast.magnitudes.iter().zip(naive_dft(&x)) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn lifetime_examples() {
        assert_eq!(lifetime(&[0.95; 40], 0.05), Lifetime::Censored(40));
        let mut dip = vec![0.5; 20];
        dip[6] = 0.01;
        dip[12] = 0.0;
        assert_eq!(lifetime(&dip, 0.05), Lifetime::Crossed(7));
        assert_eq!(Lifetime::Crossed(7).value(), 7);
        assert!(Lifetime::Censored(3).is_censored());
    }

    #[test]
    fn average_examples() {
        assert_eq!(average_return(&[1.0; 1000], 1000).unwrap(), 1.0);
        let alt: Vec<f64> = (0..1200)
            .map(|n| if n % 2 == 0 { 1.0 } else { 0.0 })
            .collect();
        assert_eq!(average_return(&alt, 1000).unwrap(), 0.5);
        assert_eq!(
            average_return(&alt, 1201),
            Err(Error::WindowTooLarge {
                window: 1201,
                available: 1200
            })
        );
    }

    proptest! {
        #[test]
        fn parseval(x in prop::collection::vec(-1.0f64..1.0, 2..300)) {
            let spec = fourier_spectrum(&x, 1.0).unwrap();
            let n = x.len() as f64;
            let lhs: f64 = spec.magnitudes.iter().map(|m| m * m * n).sum();
            let rhs: f64 = x.iter().map(|v| v * v).sum();
            prop_assert!((lhs - rhs).abs() < 1e-10);
        }

        #[test]
        fn lifetime_monotone_in_threshold(
            x in prop::collection::vec(0.0f64..1.0, 1..200),
            t1 in 0.0f64..1.0,
            t2 in 0.0f64..1.0,
        ) {
            let (lo, hi) = if t1 < t2 { (t1, t2) } else { (t2, t1) };
            prop_assert!(lifetime(&x, hi).value() <= lifetime(&x, lo).value());
        }
    }
}

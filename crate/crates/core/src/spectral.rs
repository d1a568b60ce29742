//! Quasi-energy spectra of the dense propagator, π-pairing diagnostics and
//! the time-reflection symmetry at `JT = π`.
//!
//! Quasi-energies live on the branch `(−π/T, π/T]`. An eigenvalue `λ` of
//! `U(T)` maps to `ε = −arg(λ)/T`; values within [`EDGE_TOL`] of `−π/T` are
//! folded onto `+π/T`, since both ends are the same point of the Floquet
//! circle.
//!
//! At `JT = π` the protected degenerate states do not sit at literal
//! quasi-energy `0` and `π/T` for every `L`: the global phase of `U(T)` moves
//! them to `3πL/(4T) mod π/T`. Pair counting and pair-state construction are
//! done relative to that reference, see [`pair_reference`]. For `L ≡ 0 mod 4`
//! it is exactly `0`.

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::os::raw::c_char;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::engine::{build_dense_propagator, unitarity_residual, DensePropagator};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::state::{check_dense_cap, FloquetParams, StateVector};

/// Branch-edge tolerance for folding `−π/T` onto `+π/T`.
pub const EDGE_TOL: f64 = 1e-10;
/// Default tolerance for "exact" degeneracies.
pub const PAIR_TOL: f64 = 1e-10;
/// Largest unitarity residual accepted by [`quasi_energies`].
pub const UNITARITY_TOL: f64 = 1e-10;

/// Folds `x` into `(−π/T, π/T]`.
pub fn fold_quasi_energy(x: f64, period: f64) -> f64 {
    let half = PI / period;
    let width = 2.0 * half;
    let mut y = x - width * ((x + half) / width).floor();
    if y <= -half + EDGE_TOL {
        y += width;
    }
    if y > half {
        y -= width;
    }
    y
}

/// Distance between two quasi-energies on the Floquet circle.
fn circle_distance(a: f64, b: f64, period: f64) -> f64 {
    fold_quasi_energy(a - b, period).abs()
}

/// Quasi-energy at which the protected states of the `JT = π` point sit:
/// the quasi-energy of the perfect-pulse propagator there, `3πL/(4T)`,
/// reduced modulo `π/T` into `[0, π/T)`.
pub fn pair_reference(length: usize, period: f64) -> f64 {
    let quarters = (3 * length) % 4;
    quarters as f64 * PI / 4.0 / period
}

#[derive(Debug, Clone)]
pub struct QuasiEnergySpectrum {
    length: usize,
    period: f64,
    energies: Vec<f64>,
    eigenvectors: Option<DMatrix<Complex64>>,
}

impl QuasiEnergySpectrum {
    /// Builds a spectrum from raw quasi-energies, folding and sorting them.
    /// Mainly useful for constructed examples.
    pub fn from_energies(length: usize, period: f64, energies: &[f64]) -> Result<Self> {
        if period.is_nan() || period <= 0.0 {
            return Err(Error::invalid(format!("period must be > 0, got {period}")));
        }
        let mut folded: Vec<f64> = energies
            .iter()
            .map(|&e| fold_quasi_energy(e, period))
            .collect();
        folded.sort_by(f64::total_cmp);
        Ok(QuasiEnergySpectrum {
            length,
            period,
            energies: folded,
            eigenvectors: None,
        })
    }

    pub fn length(&self) -> usize {
        self.length
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    /// Sorted ascending, in `(−π/T, π/T]`.
    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    /// Columns aligned with [`energies`](Self::energies).
    pub fn eigenvectors(&self) -> Option<&DMatrix<Complex64>> {
        self.eigenvectors.as_ref()
    }

    pub fn pair_reference(&self) -> f64 {
        pair_reference(self.length, self.period)
    }

    /// Indices of energies within `tol` of the pair reference and of the
    /// reference plus `π/T`.
    pub fn pair_indices(&self, tol: f64) -> (Vec<usize>, Vec<usize>) {
        let zero = self.pair_reference();
        let pi = zero + PI / self.period;
        let near = |target: f64| {
            self.energies
                .iter()
                .enumerate()
                .filter(|(_, &e)| circle_distance(e, target, self.period) < tol)
                .map(|(i, _)| i)
                .collect::<Vec<_>>()
        };
        (near(zero), near(pi))
    }

    fn eigenvector(&self, index: usize) -> Result<Vec<Complex64>> {
        let vecs = self
            .eigenvectors
            .as_ref()
            .ok_or_else(|| Error::Spectrum("spectrum was computed without eigenvectors".into()))?;
        if index >= vecs.ncols() {
            return Err(Error::Spectrum(format!(
                "eigenvector index {index} out of range"
            )));
        }
        Ok(vecs.column(index).iter().copied().collect())
    }
}

/// Complex Schur factorization `m = Q T Q†` through LAPACK `zgees`.
///
/// Returns the diagonal of `T` and, when `want_vectors` is set, `Q`.
fn schur_decompose(
    m: &DMatrix<Complex64>,
    want_vectors: bool,
) -> Result<(Vec<Complex64>, Option<DMatrix<Complex64>>)> {
    let n = m.nrows();
    let dim = i32::try_from(n)
        .map_err(|_| Error::Spectrum(format!("dimension {n} exceeds LAPACK range")))?;
    let zero = Complex64::new(0.0, 0.0);
    let mut a = m.clone();
    let mut w = vec![zero; n];
    let mut vs = DMatrix::from_element(if want_vectors { n } else { 1 }, n.max(1), zero);
    let jobvs = if want_vectors { b'V' } else { b'N' } as c_char;
    let sort = b'N' as c_char;
    let ldvs = if want_vectors { dim.max(1) } else { 1 };
    let mut rwork = vec![0.0f64; n.max(1)];
    let mut sdim = 0;
    let mut info = 0;

    let mut call = |work: &mut [Complex64], lwork: i32, info: &mut i32| unsafe {
        lapack_sys::zgees_(
            &jobvs,
            &sort,
            None,
            &dim,
            a.as_mut_ptr().cast(),
            &dim.max(1),
            &mut sdim,
            w.as_mut_ptr().cast(),
            vs.as_mut_ptr().cast(),
            &ldvs,
            work.as_mut_ptr().cast(),
            &lwork,
            rwork.as_mut_ptr(),
            std::ptr::null_mut(),
            info,
        )
    };

    let mut query = [zero];
    call(&mut query, -1, &mut info);
    if info != 0 {
        return Err(Error::Spectrum(format!(
            "zgees workspace query failed: info {info}"
        )));
    }
    let lwork = (query[0].re as usize).max(2 * n).max(1);
    let mut work = vec![zero; lwork];
    call(&mut work, lwork as i32, &mut info);
    if info != 0 {
        return Err(Error::Spectrum(format!(
            "zgees failed for dimension {n}: info {info}"
        )));
    }
    Ok((w, want_vectors.then_some(vs)))
}

/// Diagonalizes `U` and returns its sorted quasi-energies.
///
/// `U` is normal, so its complex Schur form is diagonal and the Schur
/// vectors are an orthonormal eigenbasis even inside degenerate clusters.
pub fn quasi_energies(
    propagator: &DensePropagator,
    period: f64,
    keep_vectors: bool,
) -> Result<QuasiEnergySpectrum> {
    check_dense_cap(propagator.length())?;
    if period.is_nan() || period <= 0.0 {
        return Err(Error::invalid(format!("period must be > 0, got {period}")));
    }
    let residual = unitarity_residual(propagator.matrix(), Execution::default());
    if residual.is_nan() || residual > UNITARITY_TOL {
        return Err(Error::NotUnitary {
            residual,
            tolerance: UNITARITY_TOL,
        });
    }

    let (eigenvalues, vectors) = schur_decompose(propagator.matrix(), keep_vectors)?;

    let raw: Vec<f64> = eigenvalues
        .iter()
        .map(|l| fold_quasi_energy(-l.arg() / period, period))
        .collect();
    let mut order: Vec<usize> = (0..raw.len()).collect();
    order.sort_by(|&a, &b| raw[a].total_cmp(&raw[b]));

    let energies = order.iter().map(|&i| raw[i]).collect();
    let eigenvectors = vectors.map(|q| q.select_columns(order.iter()));
    Ok(QuasiEnergySpectrum {
        length: propagator.length(),
        period,
        energies,
        eigenvectors,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapStatistics {
    /// Mean of `ε_{i+1} − ε_i`.
    pub delta0_mean: f64,
    /// Mean of `|ε_{i+D/2} − ε_i − π/T|`, each deviation folded into the
    /// branch before taking the absolute value.
    pub delta_pi_mean: f64,
    pub ratio: f64,
}

pub fn gap_statistics(spec: &QuasiEnergySpectrum) -> Result<GapStatistics> {
    let e = &spec.energies;
    let d = e.len();
    if d < 2 || !d.is_multiple_of(2) {
        return Err(Error::Spectrum(format!(
            "gap statistics need an even number (>= 2) of levels, got {d}"
        )));
    }
    let delta0_mean = e.windows(2).map(|w| w[1] - w[0]).sum::<f64>() / (d - 1) as f64;
    let half = d / 2;
    let shift = PI / spec.period;
    let delta_pi_mean = (0..half)
        .map(|i| fold_quasi_energy(e[i + half] - e[i] - shift, spec.period).abs())
        .sum::<f64>()
        / half as f64;
    Ok(GapStatistics {
        delta0_mean,
        delta_pi_mean,
        ratio: delta_pi_mean / delta0_mean,
    })
}

/// Sign of `R` on basis state `k`: `Πσᶻ` gives `(−1)^{#down}`.
fn reflection_sign(k: usize, length: usize) -> f64 {
    if (length as u32 - k.count_ones()).is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

/// `R = Πᵢσˣᵢ · Πⱼσᶻⱼ`: maps `|k⟩` to `(−1)^{#down(k)} |k̄⟩`.
pub fn reflection_operator(length: usize) -> Result<DMatrix<Complex64>> {
    if length == 0 {
        return Err(Error::invalid("reflection operator needs L >= 1"));
    }
    check_dense_cap(length)?;
    let dim = 1usize << length;
    let mask = dim - 1;
    let mut r = DMatrix::from_element(dim, dim, Complex64::new(0.0, 0.0));
    for k in 0..dim {
        r[(k ^ mask, k)] = Complex64::new(reflection_sign(k, length), 0.0);
    }
    Ok(r)
}

/// `e^{-iLπ/2}`, exact.
fn reflection_phase(length: usize) -> Complex64 {
    match length % 4 {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, -1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, 1.0),
    }
}

/// `‖R U R† − e^{-iLπ/2} Ū‖_max` for a given dense propagator, with `Ū`
/// the entrywise complex conjugate in the σᶻ basis.
///
/// The reflection is antiunitary (it reverses time), which is why `U`
/// appears conjugated on the right.
pub fn time_reflection_residual(propagator: &DensePropagator) -> f64 {
    let length = propagator.length();
    let u = propagator.matrix();
    let dim = u.nrows();
    let mask = dim - 1;
    let phase = reflection_phase(length);
    let mut worst = 0.0f64;
    for m in 0..dim {
        let sm = reflection_sign(m, length);
        for k in 0..dim {
            let lhs = u[(k, m)] * (reflection_sign(k, length) * sm);
            let rhs = phase * u[(k ^ mask, m ^ mask)].conj();
            worst = worst.max((lhs - rhs).norm());
        }
    }
    worst
}

/// Builds `U(T)` and returns its time-reflection residual.
pub fn check_time_reflection(params: &FloquetParams) -> Result<f64> {
    check_dense_cap(params.length())?;
    let u = build_dense_propagator(params)?;
    Ok(time_reflection_residual(&u))
}

/// Number of quasi-energies within `tol` of the pair reference (`n_zero`)
/// and of the reference plus `π/T` (`n_pi`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PiPairCounts {
    pub n_zero: usize,
    pub n_pi: usize,
    pub reference: f64,
}

pub fn count_exact_pi_pairs(spec: &QuasiEnergySpectrum, tol: f64) -> PiPairCounts {
    let (zero, pi) = spec.pair_indices(tol);
    PiPairCounts {
        n_zero: zero.len(),
        n_pi: pi.len(),
        reference: spec.pair_reference(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PairSign {
    Plus,
    Minus,
}

/// `(|φ₀⟩ ± |φ_π⟩)/√2` from two eigenvectors of the spectrum.
///
/// `zero_index` must point at a level within [`PAIR_TOL`] of the pair
/// reference and `pi_index` at one within [`PAIR_TOL`] of the reference plus
/// `π/T`.
pub fn paired_superposition(
    spec: &QuasiEnergySpectrum,
    zero_index: usize,
    pi_index: usize,
    sign: PairSign,
) -> Result<StateVector> {
    let n = spec.energies.len();
    if zero_index >= n || pi_index >= n {
        return Err(Error::Spectrum("eigenvector index out of range".into()));
    }
    let zero = spec.pair_reference();
    let pi = zero + PI / spec.period;
    let e0 = spec.energies[zero_index];
    let epi = spec.energies[pi_index];
    if circle_distance(e0, zero, spec.period) >= PAIR_TOL {
        return Err(Error::Spectrum(format!(
            "level {zero_index} has quasi-energy {e0}, not {zero}"
        )));
    }
    if circle_distance(epi, pi, spec.period) >= PAIR_TOL {
        return Err(Error::Spectrum(format!(
            "level {pi_index} has quasi-energy {epi}, not {pi}"
        )));
    }
    let v0 = spec.eigenvector(zero_index)?;
    let vpi = spec.eigenvector(pi_index)?;
    let s = match sign {
        PairSign::Plus => FRAC_1_SQRT_2,
        PairSign::Minus => -FRAC_1_SQRT_2,
    };
    let amps: Vec<Complex64> = v0
        .iter()
        .zip(&vpi)
        .map(|(a, b)| a * FRAC_1_SQRT_2 + b * s)
        .collect();
    let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    StateVector::from_amplitudes(spec.length, amps.into_iter().map(|a| a / norm).collect())
}

/// Squared norm of the projection of `state` onto the eigenvectors at the
/// pair reference and at the reference plus `π/T`.
pub fn overlap_with_pair_manifold(
    state: &StateVector,
    spec: &QuasiEnergySpectrum,
    tol: f64,
) -> Result<f64> {
    let vecs = spec
        .eigenvectors
        .as_ref()
        .ok_or_else(|| Error::Spectrum("spectrum was computed without eigenvectors".into()))?;
    if state.dimension() != vecs.nrows() {
        return Err(Error::DimensionMismatch {
            left: vecs.nrows(),
            right: state.dimension(),
        });
    }
    let (zero, pi) = spec.pair_indices(tol);
    Ok(zero
        .iter()
        .chain(&pi)
        .map(|&j| {
            vecs.column(j)
                .iter()
                .zip(state.amplitudes())
                .map(|(v, a)| v.conj() * a)
                .sum::<Complex64>()
                .norm_sqr()
        })
        .sum())
}

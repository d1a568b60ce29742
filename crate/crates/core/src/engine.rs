//! One-period propagator `U(T) = exp(-i JT/4 Σ σᶻᵢσᶻᵢ₊₁) · ⊗ᵢ exp(-i θ σˣᵢ)`
//! with `θ = π/2 − ε`.
//!
//! The kick acts first, then the Ising phase. States are updated in place by
//! `L` butterfly sweeps (one per site) and a diagonal phase, so no matrix is
//! formed unless [`build_dense_propagator`] is asked for one.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::observables::{Lifetime, Sample, StroboscopicSeries};
use crate::state::{
    bond_sum_unchecked, check_dense_cap, check_evolve_cap, overlap, FloquetParams, StateVector,
};

/// Below this dimension a sweep is cheaper than waking the thread pool.
#[cfg(feature = "parallel")]
const PAR_MIN_DIM: usize = 1 << 14;
#[cfg(feature = "parallel")]
const PAR_CHUNK: usize = 1 << 12;

/// Single-site rotation `exp(-iθσˣ) = cos θ − i sin θ σˣ` on the pair of
/// amplitudes that differ in one bit (`down` has the bit clear).
#[inline(always)]
fn rotate_pair(down: &mut Complex64, up: &mut Complex64, c: f64, s: f64) {
    let (d, u) = (*down, *up);
    // -i s z = (s z.im, -s z.re)
    *down = Complex64::new(c * d.re + s * u.im, c * d.im - s * u.re);
    *up = Complex64::new(c * u.re + s * d.im, c * u.im - s * d.re);
}

fn rotate_block(block: &mut [Complex64], half: usize, c: f64, s: f64) {
    let (lo, hi) = block.split_at_mut(half);
    for (d, u) in lo.iter_mut().zip(hi.iter_mut()) {
        rotate_pair(d, u, c, s);
    }
}

fn sweep_site(amps: &mut [Complex64], site: usize, c: f64, s: f64, exec: Execution) {
    let half = 1usize << site;
    let block = half << 1;
    #[cfg(feature = "parallel")]
    if exec.is_parallel() && amps.len() >= PAR_MIN_DIM {
        use rayon::prelude::*;
        if amps.len() / block >= 64 {
            amps.par_chunks_mut(block)
                .for_each(|b| rotate_block(b, half, c, s));
        } else {
            for b in amps.chunks_mut(block) {
                let (lo, hi) = b.split_at_mut(half);
                lo.par_chunks_mut(PAR_CHUNK)
                    .zip(hi.par_chunks_mut(PAR_CHUNK))
                    .for_each(|(l, h)| {
                        for (d, u) in l.iter_mut().zip(h.iter_mut()) {
                            rotate_pair(d, u, c, s);
                        }
                    });
            }
        }
        return;
    }
    let _ = exec;
    for b in amps.chunks_mut(block) {
        rotate_block(b, half, c, s);
    }
}

fn kick_in_place(amps: &mut [Complex64], length: usize, theta: f64, exec: Execution) {
    let (s, c) = theta.sin_cos();
    for site in 0..length {
        sweep_site(amps, site, c, s, exec);
    }
}

/// `exp(-i JT/4 · B)` for every attainable bond sum `B = L − 2w`, indexed by
/// the number of antiparallel bonds `w`.
fn phase_table(params: &FloquetParams) -> Vec<Complex64> {
    let length = params.length() as i32;
    let quarter = 0.25 * params.jt();
    (0..=length)
        .map(|walls| Complex64::from_polar(1.0, -quarter * f64::from(length - 2 * walls)))
        .collect()
}

fn phase_in_place(amps: &mut [Complex64], length: usize, table: &[Complex64], exec: Execution) {
    let apply = |offset: usize, chunk: &mut [Complex64]| {
        for (k, a) in chunk.iter_mut().enumerate() {
            let b = bond_sum_unchecked(offset + k, length);
            let walls = ((length as i32 - b) / 2) as usize;
            *a *= table[walls];
        }
    };
    #[cfg(feature = "parallel")]
    if exec.is_parallel() && amps.len() >= PAR_MIN_DIM {
        use rayon::prelude::*;
        amps.par_chunks_mut(PAR_CHUNK)
            .enumerate()
            .for_each(|(i, chunk)| apply(i * PAR_CHUNK, chunk));
        return;
    }
    let _ = exec;
    apply(0, amps);
}

/// Multiplies each amplitude by `exp(-i (JT/4) B(k))`.
pub fn apply_zz_phase(state: &StateVector, params: &FloquetParams) -> Result<StateVector> {
    check_same_length(state, params)?;
    let mut out = state.clone();
    let table = phase_table(params);
    phase_in_place(
        out.amplitudes_mut(),
        state.length(),
        &table,
        Execution::default(),
    );
    Ok(out)
}

/// Applies `exp(-iθσˣᵢ)` on every site.
pub fn apply_global_x_rotation(state: &StateVector, theta: f64) -> StateVector {
    let mut out = state.clone();
    kick_in_place(
        out.amplitudes_mut(),
        state.length(),
        theta,
        Execution::default(),
    );
    out
}

/// One drive period: the imperfect π pulse followed by the Ising phase.
pub fn floquet_step(state: &StateVector, params: &FloquetParams) -> Result<StateVector> {
    let evolver = Evolver::new(*params)?;
    check_same_length(state, params)?;
    let mut out = state.clone();
    evolver.step(&mut out);
    Ok(out)
}

fn check_same_length(state: &StateVector, params: &FloquetParams) -> Result<()> {
    if state.length() != params.length() {
        return Err(Error::DimensionMismatch {
            left: params.dimension(),
            right: state.dimension(),
        });
    }
    Ok(())
}

/// Precomputed period step for repeated application.
#[derive(Debug, Clone)]
pub struct Evolver {
    params: FloquetParams,
    table: Vec<Complex64>,
    exec: Execution,
}

impl Evolver {
    pub fn new(params: FloquetParams) -> Result<Self> {
        check_evolve_cap(params.length())?;
        Ok(Evolver {
            table: phase_table(&params),
            params,
            exec: Execution::default(),
        })
    }

    pub fn with_execution(mut self, exec: Execution) -> Self {
        self.exec = exec;
        self
    }

    pub fn params(&self) -> &FloquetParams {
        &self.params
    }

    /// Advances `state` by one period in place.
    pub fn step(&self, state: &mut StateVector) {
        debug_assert_eq!(state.length(), self.params.length());
        let length = self.params.length();
        let amps = state.amplitudes_mut();
        kick_in_place(amps, length, self.params.kick_angle(), self.exec);
        phase_in_place(amps, length, &self.table, self.exec);
    }

    fn check(&self, state: &StateVector) -> Result<()> {
        check_same_length(state, &self.params)
    }

    /// Runs `n_periods` periods from `initial`, sampling after every period.
    pub fn evolve(
        &self,
        initial: &StateVector,
        n_periods: usize,
        selection: ObservableSelection,
    ) -> Result<StroboscopicSeries> {
        self.check(initial)?;
        if n_periods == 0 {
            return Err(Error::invalid("n_periods must be at least 1"));
        }
        let mut state = initial.clone();
        let mut samples = Vec::with_capacity(n_periods);
        let mut drift = 0.0f64;
        for n in 1..=n_periods {
            self.step(&mut state);
            let p = overlap(initial, &state)?.norm_sqr();
            let sz = selection.sz.then(|| crate::observables::sz_profile(&state));
            drift = drift.max((state.norm() - 1.0).abs());
            samples.push(Sample { n, p, sz });
        }
        Ok(StroboscopicSeries::new(self.params, samples, drift))
    }

    /// First `n ≤ n_max` with `P(2nT) < threshold`, evolving only as far as
    /// needed. Also returns the largest norm drift seen.
    pub fn scan_lifetime(
        &self,
        initial: &StateVector,
        n_max: usize,
        threshold: f64,
    ) -> Result<(Lifetime, f64)> {
        self.check(initial)?;
        let mut state = initial.clone();
        let mut drift = 0.0f64;
        for n in 1..=n_max {
            self.step(&mut state);
            self.step(&mut state);
            let p = overlap(initial, &state)?.norm_sqr();
            if n % 1024 == 0 {
                drift = drift.max((state.norm() - 1.0).abs());
            }
            if p < threshold {
                drift = drift.max((state.norm() - 1.0).abs());
                return Ok((Lifetime::Crossed(n), drift));
            }
        }
        drift = drift.max((state.norm() - 1.0).abs());
        Ok((Lifetime::Censored(n_max), drift))
    }
}

/// Which observables to record at each period. The return probability
/// against the initial state is always recorded.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ObservableSelection {
    pub sz: bool,
}

impl ObservableSelection {
    pub fn with_sz() -> Self {
        ObservableSelection { sz: true }
    }
}

/// Iterates [`floquet_step`] and records observables after each period.
///
/// No renormalization is applied; the largest deviation of the norm from 1
/// is reported as `norm_drift`.
pub fn evolve_stroboscopic(
    initial: &StateVector,
    params: &FloquetParams,
    n_periods: usize,
    selection: ObservableSelection,
) -> Result<StroboscopicSeries> {
    Evolver::new(*params)?.evolve(initial, n_periods, selection)
}

/// Explicit `2^L × 2^L` one-period propagator.
#[derive(Debug, Clone, PartialEq)]
pub struct DensePropagator {
    length: usize,
    matrix: DMatrix<Complex64>,
}

impl DensePropagator {
    pub fn from_matrix(length: usize, matrix: DMatrix<Complex64>) -> Result<Self> {
        let dim = 1usize << length;
        if matrix.nrows() != dim || matrix.ncols() != dim {
            return Err(Error::DimensionMismatch {
                left: dim,
                right: matrix.nrows().max(matrix.ncols()),
            });
        }
        Ok(DensePropagator { length, matrix })
    }

    pub fn length(&self) -> usize {
        self.length
    }

    pub fn dimension(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<Complex64> {
        self.matrix
    }

    /// `‖U†U − I‖_max`, from column inner products.
    pub fn unitarity_residual(&self) -> f64 {
        unitarity_residual(&self.matrix, Execution::default())
    }

    /// Matrix-vector product `U|ψ⟩`.
    pub fn apply(&self, state: &StateVector) -> Result<StateVector> {
        if state.dimension() != self.dimension() {
            return Err(Error::DimensionMismatch {
                left: self.dimension(),
                right: state.dimension(),
            });
        }
        let dim = self.dimension();
        let mut out = vec![Complex64::new(0.0, 0.0); dim];
        for (col, &a) in self.matrix.column_iter().zip(state.amplitudes()) {
            if a == Complex64::new(0.0, 0.0) {
                continue;
            }
            for (o, u) in out.iter_mut().zip(col.iter()) {
                *o += u * a;
            }
        }
        Ok(StateVector::from_raw(self.length, out))
    }
}

pub(crate) fn unitarity_residual(matrix: &DMatrix<Complex64>, exec: Execution) -> f64 {
    let n = matrix.ncols();
    let cols: Vec<usize> = (0..n).collect();
    let per_col = crate::exec::map_ordered(exec, &cols, |&j| {
        let cj = matrix.column(j);
        (0..=j)
            .map(|i| {
                let dot: Complex64 = matrix
                    .column(i)
                    .iter()
                    .zip(cj.iter())
                    .map(|(a, b)| a.conj() * b)
                    .sum();
                let target = if i == j { 1.0 } else { 0.0 };
                (dot - target).norm()
            })
            .fold(0.0f64, f64::max)
    });
    per_col.into_iter().fold(0.0, f64::max)
}

/// Dense `U(T) = D·K`. Each column is a basis vector pushed through the same
/// sweeps as [`floquet_step`], so column `j` equals the step applied to `|j⟩`.
pub fn build_dense_propagator(params: &FloquetParams) -> Result<DensePropagator> {
    build_dense_propagator_with(params, Execution::default())
}

pub fn build_dense_propagator_with(
    params: &FloquetParams,
    exec: Execution,
) -> Result<DensePropagator> {
    check_dense_cap(params.length())?;
    let length = params.length();
    let dim = params.dimension();
    let table = phase_table(params);
    let theta = params.kick_angle();
    let mut data = vec![Complex64::new(0.0, 0.0); dim * dim];
    // Columns are small; sweep them sequentially and spread columns instead.
    let fill = |j: usize, col: &mut [Complex64]| {
        col[j] = Complex64::new(1.0, 0.0);
        kick_in_place(col, length, theta, Execution::Sequential);
        phase_in_place(col, length, &table, Execution::Sequential);
    };
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        use rayon::prelude::*;
        data.par_chunks_mut(dim)
            .enumerate()
            .for_each(|(j, col)| fill(j, col));
        return DensePropagator::from_matrix(length, DMatrix::from_vec(dim, dim, data));
    }
    let _ = exec;
    for (j, col) in data.chunks_mut(dim).enumerate() {
        fill(j, col);
    }
    DensePropagator::from_matrix(length, DMatrix::from_vec(dim, dim, data))
}

//! Wave functions, projectors and pure-state density operators over the
//! term basis.
//!
//! A document with term counts `c` is the unit vector `φ(j) = sqrt(c_j / Σc)`,
//! so `φ(j)²` is the probability of term `j` in the document. Measuring a
//! subspace with projector `P` on the state `ρ = |φ⟩⟨φ|` has probability
//! `tr(ρP) = Σ_k ⟨φ|β_k⟩²` for an orthonormal basis `{β_k}` of the subspace.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::sparse::{CscMatrix, SparseColumn};

/// Tolerance on unit norms.
pub const NORM_TOL: f64 = 1e-9;
/// Tolerance on basis orthonormality.
pub const ORTHO_TOL: f64 = 1e-8;

#[derive(Debug, Error, PartialEq)]
pub enum QuantumError {
    #[error("all counts are zero; the wave function is undefined")]
    ZeroCounts,
    #[error("term index {index} out of range for dimension {dim}")]
    IndexOutOfRange { index: usize, dim: usize },
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("vector norm {0} is not 1")]
    NotUnitNorm(f64),
    #[error("negative amplitude {value} at index {index}")]
    NegativeAmplitude { index: usize, value: f64 },
    #[error("basis is not orthonormal: |<b{a}|b{b}> - delta| = {deviation:e}")]
    NotOrthonormal { a: usize, b: usize, deviation: f64 },
}

/// Unit-norm, non-negative vector in the term basis.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveFunction {
    amplitudes: DVector<f64>,
}

impl WaveFunction {
    /// Validates an explicit amplitude vector.
    pub fn new(amplitudes: Vec<f64>) -> Result<Self, QuantumError> {
        if let Some((index, &value)) = amplitudes.iter().enumerate().find(|(_, a)| **a < 0.0) {
            return Err(QuantumError::NegativeAmplitude { index, value });
        }
        let amplitudes = DVector::from_vec(amplitudes);
        let norm = amplitudes.norm();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(QuantumError::NotUnitNorm(norm));
        }
        Ok(Self { amplitudes })
    }

    /// The canonical basis state `τ_j` of an `m`-term space.
    pub fn basis_state(m: usize, j: usize) -> Result<Self, QuantumError> {
        if j >= m {
            return Err(QuantumError::IndexOutOfRange { index: j, dim: m });
        }
        Ok(Self { amplitudes: DVector::from_fn(m, |i, _| if i == j { 1.0 } else { 0.0 }) })
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &DVector<f64> {
        &self.amplitudes
    }
}

/// Square-root amplitudes of a sparse count vector, on the same sparsity pattern.
pub(crate) fn sqrt_amplitudes(counts: SparseColumn<'_, u32>) -> Result<Vec<f64>, QuantumError> {
    let total = counts.total();
    if total == 0 {
        return Err(QuantumError::ZeroCounts);
    }
    let total = total as f64;
    Ok(counts.values.iter().map(|&c| (f64::from(c) / total).sqrt()).collect())
}

/// `φ(j) = sqrt(count_j / Σ count)`.
pub fn wave_function(counts: SparseColumn<'_, u32>) -> Result<WaveFunction, QuantumError> {
    let amps = sqrt_amplitudes(counts)?;
    let mut amplitudes = DVector::zeros(counts.dim);
    for (&j, a) in counts.indices.iter().zip(amps) {
        amplitudes[j] = a;
    }
    Ok(WaveFunction { amplitudes })
}

/// `P(t_j | d) = φ(j)²`.
pub fn term_probability(phi: &WaveFunction, j: usize) -> Result<f64, QuantumError> {
    phi.amplitudes.get(j).map(|a| a * a).ok_or(QuantumError::IndexOutOfRange { index: j, dim: phi.dim() })
}

/// Column-wise wave functions of a whole collection, kept sparse.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveFunctionMatrix {
    columns: CscMatrix<f64>,
}

impl WaveFunctionMatrix {
    /// Fails if any column has no positive count.
    pub fn from_counts(counts: &CscMatrix<u32>) -> Result<Self, QuantumError> {
        for col in counts.columns() {
            if col.total() == 0 {
                return Err(QuantumError::ZeroCounts);
            }
        }
        let columns = counts.map_columns(|c| sqrt_amplitudes(c).expect("checked non-zero"));
        Ok(Self { columns })
    }

    pub fn as_sparse(&self) -> &CscMatrix<f64> {
        &self.columns
    }

    pub fn ndocs(&self) -> usize {
        self.columns.ncols()
    }

    pub fn column(&self, i: usize) -> WaveFunction {
        let col = self.columns.column(i);
        let mut amplitudes = DVector::zeros(col.dim);
        for (j, a) in col.iter() {
            amplitudes[j] = a;
        }
        WaveFunction { amplitudes }
    }
}

/// Orthogonal projector `P = Σ_k |β_k⟩⟨β_k|`, stored as its basis (columns).
#[derive(Debug, Clone, PartialEq)]
pub struct Projector {
    basis: DMatrix<f64>,
}

impl Projector {
    /// Checks `|⟨β_a|β_b⟩ - δ_ab| ≤ 1e-8` for every pair of columns.
    pub fn from_basis(basis: DMatrix<f64>) -> Result<Self, QuantumError> {
        let gram = basis.tr_mul(&basis);
        for a in 0..gram.nrows() {
            for b in 0..gram.ncols() {
                let delta = if a == b { 1.0 } else { 0.0 };
                let deviation = (gram[(a, b)] - delta).abs();
                if deviation > ORTHO_TOL {
                    return Err(QuantumError::NotOrthonormal { a, b, deviation });
                }
            }
        }
        Ok(Self { basis })
    }

    /// Rank-one projector onto `τ_j`.
    pub fn term(m: usize, j: usize) -> Result<Self, QuantumError> {
        let tau = WaveFunction::basis_state(m, j)?;
        Ok(Self { basis: DMatrix::from_column_slice(m, 1, tau.amplitudes.as_slice()) })
    }

    /// The identity on an `m`-dimensional space.
    pub fn identity(m: usize) -> Self {
        Self { basis: DMatrix::identity(m, m) }
    }

    pub fn dim(&self) -> usize {
        self.basis.nrows()
    }

    pub fn rank(&self) -> usize {
        self.basis.ncols()
    }

    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    fn check_dim(&self, dim: usize) -> Result<(), QuantumError> {
        if dim != self.dim() {
            return Err(QuantumError::DimensionMismatch { left: self.dim(), right: dim });
        }
        Ok(())
    }

    /// `Σ_k ⟨β_k|v⟩ β_k`.
    pub fn apply(&self, v: &DVector<f64>) -> Result<DVector<f64>, QuantumError> {
        self.check_dim(v.len())?;
        Ok(&self.basis * self.basis.tr_mul(v))
    }
}

/// Pure state `ρ = |ψ⟩⟨ψ|`, stored as `ψ`. Amplitudes may have either sign.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityOperator {
    state: DVector<f64>,
}

impl DensityOperator {
    pub fn pure(state: DVector<f64>) -> Result<Self, QuantumError> {
        let norm = state.norm();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(QuantumError::NotUnitNorm(norm));
        }
        Ok(Self { state })
    }

    pub fn state(&self) -> &DVector<f64> {
        &self.state
    }

    /// `tr(ρ) = ‖ψ‖²`.
    pub fn trace(&self) -> f64 {
        self.state.norm_squared()
    }
}

impl From<&WaveFunction> for DensityOperator {
    fn from(phi: &WaveFunction) -> Self {
        Self { state: phi.amplitudes.clone() }
    }
}

/// Trace rule `tr(ρP) = Σ_k ⟨ψ|β_k⟩²`.
pub fn measure_probability(rho: &DensityOperator, p: &Projector) -> Result<f64, QuantumError> {
    p.check_dim(rho.state.len())?;
    Ok(p.basis.tr_mul(&rho.state).norm_squared())
}

/// Unnormalized projection `P|φ⟩`.
pub fn project(p: &Projector, phi: &WaveFunction) -> Result<DVector<f64>, QuantumError> {
    p.apply(&phi.amplitudes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sparse::SparseVector;
    use proptest::prelude::*;

    fn wf(counts: &[u32]) -> WaveFunction {
        wave_function(SparseVector::from_dense(counts).view()).unwrap()
    }

    fn close(a: &[f64], b: &[f64], tol: f64) {
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(b) {
            assert!((x - y).abs() <= tol, "{a:?} vs {b:?}");
        }
    }

    #[test]
    fn wave_function_examples() {
        close(wf(&[2, 2]).amplitudes.as_slice(), &[0.5f64.sqrt(), 0.5f64.sqrt()], 1e-15);
        close(wf(&[1, 0, 0]).amplitudes.as_slice(), &[1.0, 0.0, 0.0], 0.0);
        let phi = wf(&[1, 3]);
        close(phi.amplitudes.as_slice(), &[0.5, 0.75f64.sqrt()], 1e-15);
        assert!((term_probability(&phi, 0).unwrap() - 0.25).abs() < 1e-15);
        assert!((term_probability(&phi, 1).unwrap() - 0.75).abs() < 1e-15);
    }

    #[test]
    fn zero_counts_rejected() {
        assert_eq!(wave_function(SparseVector::from_dense(&[0u32, 0]).view()), Err(QuantumError::ZeroCounts));
    }

    #[test]
    fn term_probability_edges() {
        let tau = WaveFunction::basis_state(4, 2).unwrap();
        assert_eq!(term_probability(&tau, 2).unwrap(), 1.0);
        assert!(matches!(term_probability(&tau, 4), Err(QuantumError::IndexOutOfRange { .. })));
    }

    #[test]
    fn wave_function_validation() {
        assert!(WaveFunction::new(vec![0.6, 0.8]).is_ok());
        assert!(matches!(WaveFunction::new(vec![0.6, 0.7]), Err(QuantumError::NotUnitNorm(_))));
        assert!(matches!(WaveFunction::new(vec![-0.6, 0.8]), Err(QuantumError::NegativeAmplitude { .. })));
    }

    #[test]
    fn measure_probability_examples() {
        let phi = wf(&[1, 3, 0, 5]);
        let rho = DensityOperator::from(&phi);
        for j in 0..4 {
            let p = measure_probability(&rho, &Projector::term(4, j).unwrap()).unwrap();
            assert!((p - term_probability(&phi, j).unwrap()).abs() < 1e-15);
        }
        assert!((measure_probability(&rho, &Projector::identity(4)).unwrap() - 1.0).abs() < 1e-12);
        let half = DensityOperator::from(&wf(&[1, 1]));
        let p = Projector::from_basis(DMatrix::from_column_slice(2, 1, &[1.0, 0.0])).unwrap();
        assert!((measure_probability(&half, &p).unwrap() - 0.5).abs() < 1e-15);
        assert!(matches!(
            measure_probability(&half, &Projector::identity(3)),
            Err(QuantumError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn project_examples() {
        let phi = wf(&[1, 1]);
        let p1 = Projector::term(2, 0).unwrap();
        close(project(&p1, &phi).unwrap().as_slice(), &[0.5f64.sqrt(), 0.0], 1e-15);
        close(project(&Projector::identity(2), &phi).unwrap().as_slice(), phi.amplitudes.as_slice(), 1e-9);
        let tau = WaveFunction::basis_state(2, 1).unwrap();
        close(project(&p1, &tau).unwrap().as_slice(), &[0.0, 0.0], 0.0);
    }

    #[test]
    fn projector_rejects_non_orthonormal_basis() {
        let b = DMatrix::from_column_slice(2, 2, &[1.0, 0.0, 0.1, 1.0]);
        assert!(matches!(Projector::from_basis(b), Err(QuantumError::NotOrthonormal { .. })));
    }

    #[test]
    fn density_trace() {
        let rho = DensityOperator::from(&wf(&[3, 4, 5]));
        assert!((rho.trace() - 1.0).abs() < 1e-9);
        assert!(DensityOperator::pure(DVector::from_vec(vec![1.0, 1.0])).is_err());
    }

    #[test]
    fn matrix_columns_match_single_wave_functions() {
        let cols = vec![SparseVector::from_dense(&[1u32, 0, 3]), SparseVector::from_dense(&[0u32, 2, 2])];
        let counts = CscMatrix::from_columns(3, cols.clone());
        let phi = WaveFunctionMatrix::from_counts(&counts).unwrap();
        for (i, c) in cols.iter().enumerate() {
            assert_eq!(phi.column(i), wave_function(c.view()).unwrap());
        }
    }

    fn orthonormal_basis(m: usize, r: usize, seed: &[f64]) -> DMatrix<f64> {
        let raw = DMatrix::from_fn(m, r, |i, j| seed[(i * r + j) % seed.len()] + (i * 7 + j * 3) as f64 * 0.01);
        raw.qr().q()
    }

    proptest! {
        #[test]
        fn probabilities_sum_to_one(counts in proptest::collection::vec(0u32..20, 1..40)) {
            prop_assume!(counts.iter().any(|&c| c > 0));
            let phi = wf(&counts);
            let sum: f64 = (0..phi.dim()).map(|j| term_probability(&phi, j).unwrap()).sum();
            prop_assert!((sum - 1.0).abs() <= 1e-9);
            prop_assert!((phi.amplitudes.norm() - 1.0).abs() <= 1e-9);
        }

        #[test]
        fn projection_is_idempotent_and_pythagorean(
            counts in proptest::collection::vec(0u32..10, 6),
            seed in proptest::collection::vec(-1.0f64..1.0, 12),
            r in 1usize..6,
        ) {
            prop_assume!(counts.iter().any(|&c| c > 0));
            let phi = wf(&counts);
            let p = Projector::from_basis(orthonormal_basis(6, r, &seed)).unwrap();
            let proj = project(&p, &phi).unwrap();
            let rest = phi.amplitudes() - &proj;
            prop_assert!((proj.norm_squared() + rest.norm_squared() - 1.0).abs() <= 1e-9);
            prop_assert!(proj.norm() <= 1.0 + 1e-9);
            if proj.norm() > 1e-6 {
                let unit = &proj / proj.norm();
                let again = p.apply(&unit).unwrap();
                let again = &again / again.norm();
                for (a, b) in again.iter().zip(unit.iter()) {
                    prop_assert!((a - b).abs() <= 1e-8);
                }
            }
        }
    }
}

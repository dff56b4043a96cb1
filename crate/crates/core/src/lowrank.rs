//! Truncated singular value decomposition.
//!
//! The leading subspace is seeded from an eigendecomposition of the smaller
//! Gram matrix (`AᵀA` or `AAᵀ`, assembled sparsely when `A` is sparse) and
//! then refined by block subspace iteration with a Rayleigh–Ritz step: with
//! `W` an orthonormal basis of the current left subspace, the small matrix
//! `WᵀA` is decomposed densely and `W` is replaced by `orth(A V)`. The Gram
//! start makes the first Ritz values accurate to roughly `√ε`; the
//! Rayleigh–Ritz steps bring them to working precision, including the small
//! singular values the Gram route alone resolves poorly.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::sparse::CscMatrix;

#[derive(Debug, Error, PartialEq)]
pub enum SvdError {
    #[error("requested rank {requested} is outside 1..={max}")]
    InvalidRank { requested: usize, max: usize },
    #[error("matrix has no nonzero entry")]
    ZeroMatrix,
    #[error("no convergence after {iterations} iterations (best relative residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("dense eigen/singular solver failed to converge")]
    DenseSolver,
    #[error("dimension mismatch: matrix is {matrix:?}, factors are {factors:?}")]
    DimensionMismatch { matrix: (usize, usize), factors: (usize, usize) },
}

/// Matrix operations the solver needs; implemented for dense and CSC storage.
pub trait LinearOperator {
    fn nrows(&self) -> usize;
    fn ncols(&self) -> usize;
    /// `A X`
    fn mul(&self, x: &DMatrix<f64>) -> DMatrix<f64>;
    /// `Aᵀ X`
    fn tr_mul(&self, x: &DMatrix<f64>) -> DMatrix<f64>;
    /// `AᵀA` when `ncols ≤ nrows`, otherwise `AAᵀ`.
    fn small_gram(&self) -> DMatrix<f64>;
    fn column(&self, i: usize) -> DVector<f64>;
}

impl LinearOperator for DMatrix<f64> {
    fn nrows(&self) -> usize {
        self.nrows()
    }

    fn ncols(&self) -> usize {
        self.ncols()
    }

    fn mul(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        self * x
    }

    fn tr_mul(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        DMatrix::tr_mul(self, x)
    }

    fn small_gram(&self) -> DMatrix<f64> {
        if self.ncols() <= self.nrows() {
            DMatrix::tr_mul(self, self)
        } else {
            self * self.transpose()
        }
    }

    fn column(&self, i: usize) -> DVector<f64> {
        DMatrix::column(self, i).into_owned()
    }
}

impl LinearOperator for CscMatrix<f64> {
    fn nrows(&self) -> usize {
        CscMatrix::nrows(self)
    }

    fn ncols(&self) -> usize {
        CscMatrix::ncols(self)
    }

    fn mul(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        assert_eq!(x.nrows(), self.ncols());
        let mut out = DMatrix::zeros(self.nrows(), x.ncols());
        for t in 0..x.ncols() {
            let xt = x.column(t);
            let mut ot = out.column_mut(t);
            for (i, col) in self.columns().enumerate() {
                let xi = xt[i];
                if xi != 0.0 {
                    for (j, v) in col.iter() {
                        ot[j] += v * xi;
                    }
                }
            }
        }
        out
    }

    fn tr_mul(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        assert_eq!(x.nrows(), self.nrows());
        let mut out = DMatrix::zeros(self.ncols(), x.ncols());
        for t in 0..x.ncols() {
            let xt = x.column(t);
            for (i, col) in self.columns().enumerate() {
                out[(i, t)] = col.iter().map(|(j, v)| v * xt[j]).sum();
            }
        }
        out
    }

    fn small_gram(&self) -> DMatrix<f64> {
        let (m, n) = (self.nrows(), self.ncols());
        if n <= m {
            // G[a,b] = Σ_j A[j,a] A[j,b], accumulated row by row
            let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); m];
            for (i, col) in self.columns().enumerate() {
                for (j, v) in col.iter() {
                    rows[j].push((i, v));
                }
            }
            let mut g = DMatrix::zeros(n, n);
            for row in &rows {
                for &(a, va) in row {
                    for &(b, vb) in row {
                        g[(a, b)] += va * vb;
                    }
                }
            }
            g
        } else {
            let mut g = DMatrix::zeros(m, m);
            for col in self.columns() {
                for (a, va) in col.iter() {
                    for (b, vb) in col.iter() {
                        g[(a, b)] += va * vb;
                    }
                }
            }
            g
        }
    }

    fn column(&self, i: usize) -> DVector<f64> {
        let col = CscMatrix::column(self, i);
        let mut out = DVector::zeros(col.dim);
        for (j, v) in col.iter() {
            out[j] = v;
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SvdOptions {
    /// Stop once every retained singular value moves by less than `tol · s_1`
    /// between iterations; `0.0` runs the whole budget.
    pub tol: f64,
    /// Iteration cap; `None` means `300 · r`.
    pub max_iter: Option<usize>,
    /// Extra block columns beyond `r` carried through the iteration.
    pub oversample: usize,
}

impl Default for SvdOptions {
    fn default() -> Self {
        Self { tol: 1e-10, max_iter: None, oversample: 10 }
    }
}

/// Leading singular triplets of a matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SvdFactors {
    /// m × k, orthonormal columns.
    pub left: DMatrix<f64>,
    /// Non-increasing, all positive.
    pub singular_values: DVector<f64>,
    /// n × k, orthonormal columns.
    pub right: DMatrix<f64>,
    /// The rank that was asked for; `k` is smaller when the matrix rank is.
    pub requested: usize,
}

impl SvdFactors {
    pub fn rank(&self) -> usize {
        self.singular_values.len()
    }

    /// How many requested factors were missing because the matrix rank was lower.
    pub fn shortfall(&self) -> usize {
        self.requested - self.rank()
    }

    /// Leading `r` factors.
    pub fn truncate(&self, r: usize) -> SvdFactors {
        let r = r.min(self.rank());
        SvdFactors {
            left: self.left.columns(0, r).into_owned(),
            singular_values: self.singular_values.rows(0, r).into_owned(),
            right: self.right.columns(0, r).into_owned(),
            requested: r,
        }
    }
}

fn orthonormalize(x: DMatrix<f64>) -> DMatrix<f64> {
    x.qr().q()
}

/// Top eigenpairs (descending) of a symmetric matrix.
fn top_eigen(g: DMatrix<f64>, k: usize) -> Result<(Vec<f64>, DMatrix<f64>), SvdError> {
    let eig = g.try_symmetric_eigen(f64::EPSILON, 0).ok_or(SvdError::DenseSolver)?;
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    order.truncate(k);
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_columns(&order.iter().map(|&i| eig.eigenvectors.column(i)).collect::<Vec<_>>());
    Ok((values, vectors))
}

struct Ritz {
    left: DMatrix<f64>,
    values: Vec<f64>,
    right: DMatrix<f64>,
}

/// Rayleigh–Ritz on the left subspace spanned by `w` (orthonormal columns).
fn rayleigh_ritz<A: LinearOperator + ?Sized>(a: &A, w: &DMatrix<f64>) -> Result<Ritz, SvdError> {
    // B = WᵀA, decomposed as its transpose (n × block) so the SVD sees a tall matrix.
    let bt = a.tr_mul(w);
    let svd = bt.try_svd(true, true, f64::EPSILON, 0).ok_or(SvdError::DenseSolver)?;
    let (ub, vbt) = (svd.u.expect("requested"), svd.v_t.expect("requested"));
    // Bᵀ = Ub S Vbᵀ  ⇒  B = Vb S Ubᵀ: right singular vectors of A are Ub,
    // left ones are W·Vb.
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&x, &y| svd.singular_values[y].total_cmp(&svd.singular_values[x]));
    let values = order.iter().map(|&i| svd.singular_values[i]).collect();
    let right = DMatrix::from_columns(&order.iter().map(|&i| ub.column(i)).collect::<Vec<_>>());
    let vb = DMatrix::from_columns(&order.iter().map(|&i| vbt.row(i).transpose()).collect::<Vec<_>>());
    Ok(Ritz { left: w * vb, values, right })
}

fn relative_residual<A: LinearOperator + ?Sized>(a: &A, r: &Ritz, k: usize) -> f64 {
    let s1 = r.values.first().copied().unwrap_or(0.0);
    if s1 == 0.0 || k == 0 {
        return 0.0;
    }
    let av = a.mul(&r.right.columns(0, k).into_owned());
    (0..k).map(|i| (av.column(i) - r.left.column(i) * r.values[i]).norm()).fold(0.0, f64::max) / s1
}

/// Leading `r` singular triplets of `a`.
///
/// If the numerical rank of `a` is below `r`, fewer factors come back and
/// [`SvdFactors::shortfall`] says how many. Each left vector is signed so
/// that its largest-magnitude coordinate is non-negative.
pub fn truncated_svd<A: LinearOperator + ?Sized>(a: &A, r: usize, opts: &SvdOptions) -> Result<SvdFactors, SvdError> {
    let (m, n) = (a.nrows(), a.ncols());
    let kmax = m.min(n);
    if r == 0 || r > kmax {
        return Err(SvdError::InvalidRank { requested: r, max: kmax });
    }
    let block = (r + opts.oversample).min(kmax);

    let gram = a.small_gram();
    if gram.iter().all(|&g| g == 0.0) {
        return Err(SvdError::ZeroMatrix);
    }
    let (eigvals, eigvecs) = top_eigen(gram, block)?;
    let mut w = if n <= m { orthonormalize(a.mul(&eigvecs)) } else { eigvecs };
    let mut previous: Vec<f64> = eigvals.iter().map(|&l| l.max(0.0).sqrt()).collect();

    let budget = opts.max_iter.unwrap_or(300 * r).max(1);
    let mut ritz = None;
    let mut best = f64::INFINITY;
    for _ in 0..budget {
        let current = rayleigh_ritz(a, &w)?;
        let scale = current.values[0];
        let moved = (0..r).map(|k| (current.values[k] - previous[k]).abs()).fold(0.0, f64::max);
        previous.clone_from(&current.values);
        if moved < opts.tol * scale {
            ritz = Some(current);
            break;
        }
        best = best.min(relative_residual(a, &current, r));
        w = orthonormalize(a.mul(&current.right));
    }
    let Some(ritz) = ritz else {
        return Err(SvdError::NoConvergence { iterations: budget, residual: best });
    };

    let cutoff = ritz.values[0] * (m.max(n) as f64) * f64::EPSILON;
    let keep = (0..r).take_while(|&k| ritz.values[k] > cutoff).count();
    let mut left = ritz.left.columns(0, keep).into_owned();
    let mut right = ritz.right.columns(0, keep).into_owned();
    for k in 0..keep {
        let pivot = left.column(k).iter().copied().fold(0.0f64, |best, x| if x.abs() > best.abs() { x } else { best });
        if pivot < 0.0 {
            left.column_mut(k).neg_mut();
            right.column_mut(k).neg_mut();
        }
    }
    Ok(SvdFactors {
        left,
        singular_values: DVector::from_iterator(keep, ritz.values.into_iter().take(keep)),
        right,
        requested: r,
    })
}

/// `Σ_i ‖U Uᵀ a_i − a_i‖²` over the columns of `a`, with `U` the left factors.
pub fn reconstruction_residual<A: LinearOperator + ?Sized>(a: &A, f: &SvdFactors) -> Result<f64, SvdError> {
    if f.left.nrows() != a.nrows() {
        return Err(SvdError::DimensionMismatch {
            matrix: (a.nrows(), a.ncols()),
            factors: (f.left.nrows(), f.rank()),
        });
    }
    let u = &f.left;
    Ok((0..a.ncols())
        .map(|i| {
            let col = a.column(i);
            let proj = u * u.tr_mul(&col);
            (proj - col).norm_squared()
        })
        .sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sparse::SparseVector;

    fn projector(u: &DMatrix<f64>) -> DMatrix<f64> {
        u * u.transpose()
    }

    #[test]
    fn diagonal_rank_one() {
        let a = DMatrix::from_diagonal(&DVector::from_vec(vec![3.0, 1.0]));
        let f = truncated_svd(&a, 1, &SvdOptions::default()).unwrap();
        assert!((f.singular_values[0] - 3.0).abs() < 1e-12);
        assert!((f.left[(0, 0)].abs() - 1.0).abs() < 1e-12);
        assert!((f.right[(0, 0)].abs() - 1.0).abs() < 1e-12);
        // sign convention: largest coordinate non-negative
        assert!(f.left[(0, 0)] > 0.0);
        assert!((reconstruction_residual(&a, &f).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn identity_degenerate_spectrum() {
        let a = DMatrix::<f64>::identity(2, 2);
        let f = truncated_svd(&a, 2, &SvdOptions::default()).unwrap();
        assert!((f.singular_values[0] - 1.0).abs() < 1e-12);
        assert!((f.singular_values[1] - 1.0).abs() < 1e-12);
        assert!((projector(&f.left) - DMatrix::identity(2, 2)).norm() < 1e-10);
        assert!(reconstruction_residual(&a, &f).unwrap() < 1e-9);
    }

    #[test]
    fn rank_shortfall_is_reported() {
        // rank 1
        let a = DMatrix::from_row_slice(3, 2, &[1.0, 2.0, 2.0, 4.0, 3.0, 6.0]);
        let f = truncated_svd(&a, 2, &SvdOptions::default()).unwrap();
        assert_eq!(f.rank(), 1);
        assert_eq!(f.shortfall(), 1);
        assert!((f.singular_values[0] - 70f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn errors() {
        let z = DMatrix::<f64>::zeros(3, 2);
        assert_eq!(truncated_svd(&z, 1, &SvdOptions::default()), Err(SvdError::ZeroMatrix));
        let a = DMatrix::<f64>::identity(3, 2);
        assert!(matches!(truncated_svd(&a, 3, &SvdOptions::default()), Err(SvdError::InvalidRank { .. })));
        assert!(matches!(truncated_svd(&a, 0, &SvdOptions::default()), Err(SvdError::InvalidRank { .. })));
        let f = truncated_svd(&a, 1, &SvdOptions::default()).unwrap();
        let b = DMatrix::<f64>::identity(4, 2);
        assert!(matches!(reconstruction_residual(&b, &f), Err(SvdError::DimensionMismatch { .. })));
    }

    #[test]
    fn iteration_budget_is_enforced() {
        let a = DMatrix::from_fn(6, 5, |i, j| ((i * 5 + j) as f64).sin());
        let opts = SvdOptions { tol: 0.0, max_iter: Some(1), oversample: 0 };
        match truncated_svd(&a, 2, &opts) {
            Err(SvdError::NoConvergence { iterations: 1, residual }) => assert!(residual.is_finite()),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn sparse_and_dense_agree_both_orientations() {
        let dense_tall = DMatrix::from_fn(7, 4, |i, j| if (i + 2 * j) % 3 == 0 { (i + j + 1) as f64 } else { 0.0 });
        for dense in [dense_tall.clone(), dense_tall.transpose()] {
            let cols: Vec<_> =
                (0..dense.ncols()).map(|i| SparseVector::from_dense(dense.column(i).as_slice())).collect();
            let sparse = CscMatrix::from_columns(dense.nrows(), cols);
            assert_eq!(sparse.small_gram(), dense.small_gram());
            let fd = truncated_svd(&dense, 3, &SvdOptions::default()).unwrap();
            let fs = truncated_svd(&sparse, 3, &SvdOptions::default()).unwrap();
            assert!((&fd.singular_values - &fs.singular_values).norm() < 1e-12);
            assert!((projector(&fd.left) - projector(&fs.left)).norm() < 1e-10);
        }
    }
}

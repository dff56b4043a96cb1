//! Compressed sparse column storage.

use nalgebra::DMatrix;

/// Borrowed view of one sparse column (or any sparse vector).
#[derive(Debug, Clone, Copy)]
pub struct SparseColumn<'a, T> {
    pub dim: usize,
    pub indices: &'a [usize],
    pub values: &'a [T],
}

impl<'a, T: Copy> SparseColumn<'a, T> {
    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, T)> + 'a {
        self.indices.iter().copied().zip(self.values.iter().copied())
    }
}

impl SparseColumn<'_, u32> {
    pub fn total(&self) -> u64 {
        self.values.iter().map(|&v| u64::from(v)).sum()
    }

    pub fn to_dense_f64(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        for (j, c) in self.iter() {
            out[j] = f64::from(c);
        }
        out
    }
}

/// Owned sparse vector with sorted, unique indices.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseVector<T> {
    dim: usize,
    indices: Vec<usize>,
    values: Vec<T>,
}

impl<T: Copy + Default + PartialEq> SparseVector<T> {
    /// Builds from `(index, value)` pairs. Indices must be sorted, unique and `< dim`.
    pub fn from_sorted(dim: usize, indices: Vec<usize>, values: Vec<T>) -> Self {
        assert_eq!(indices.len(), values.len());
        debug_assert!(indices.windows(2).all(|w| w[0] < w[1]));
        debug_assert!(indices.last().is_none_or(|&i| i < dim));
        Self { dim, indices, values }
    }

    /// Keeps the non-default entries of a dense slice.
    pub fn from_dense(dense: &[T]) -> Self {
        let zero = T::default();
        let (indices, values) = dense.iter().enumerate().filter(|(_, v)| **v != zero).map(|(i, v)| (i, *v)).unzip();
        Self { dim: dense.len(), indices, values }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn view(&self) -> SparseColumn<'_, T> {
        SparseColumn { dim: self.dim, indices: &self.indices, values: &self.values }
    }

    pub fn map<U>(&self, f: impl Fn(T) -> U) -> SparseVector<U> {
        SparseVector {
            dim: self.dim,
            indices: self.indices.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }
}

/// Column-compressed sparse matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CscMatrix<T> {
    nrows: usize,
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    values: Vec<T>,
}

impl<T: Copy> CscMatrix<T> {
    /// Assembles a matrix from per-column sparse vectors of equal dimension.
    pub fn from_columns(nrows: usize, columns: impl IntoIterator<Item = SparseVector<T>>) -> Self {
        let mut col_ptr = vec![0];
        let mut row_idx = Vec::new();
        let mut values = Vec::new();
        for col in columns {
            assert_eq!(col.dim, nrows, "column dimension mismatch");
            row_idx.extend_from_slice(&col.indices);
            values.extend_from_slice(&col.values);
            col_ptr.push(row_idx.len());
        }
        Self { nrows, col_ptr, row_idx, values }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.col_ptr.len() - 1
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn column(&self, i: usize) -> SparseColumn<'_, T> {
        let range = self.col_ptr[i]..self.col_ptr[i + 1];
        SparseColumn { dim: self.nrows, indices: &self.row_idx[range.clone()], values: &self.values[range] }
    }

    pub fn columns(&self) -> impl Iterator<Item = SparseColumn<'_, T>> + '_ {
        (0..self.ncols()).map(move |i| self.column(i))
    }

    /// Applies `f` to every column, keeping the sparsity pattern.
    pub fn map_columns<U: Copy>(&self, mut f: impl FnMut(SparseColumn<'_, T>) -> Vec<U>) -> CscMatrix<U> {
        let mut values = Vec::with_capacity(self.nnz());
        for col in self.columns() {
            let mapped = f(col);
            assert_eq!(mapped.len(), col.nnz());
            values.extend(mapped);
        }
        CscMatrix { nrows: self.nrows, col_ptr: self.col_ptr.clone(), row_idx: self.row_idx.clone(), values }
    }
}

impl CscMatrix<f64> {
    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(self.nrows, self.ncols());
        for (i, col) in self.columns().enumerate() {
            for (j, v) in col.iter() {
                out[(j, i)] = v;
            }
        }
        out
    }
}

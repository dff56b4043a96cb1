//! Brute-force reference SVD for small matrices.
//!
//! One-sided cyclic Jacobi: plane rotations applied to the columns of `A`
//! until every pair is orthogonal. This is the cyclic Jacobi eigen-iteration
//! on `AᵀA` carried out implicitly, so singular values come out as column
//! norms without squaring the condition number.

#![allow(dead_code)]

use nalgebra::DMatrix;

pub struct OracleSvd {
    /// m × k, k = min(m, n)
    pub u: DMatrix<f64>,
    pub s: Vec<f64>,
    /// n × k
    pub v: DMatrix<f64>,
}

fn jacobi_tall(a: &DMatrix<f64>) -> OracleSvd {
    let (m, n) = a.shape();
    assert!(m >= n);
    let mut w = a.clone();
    let mut v = DMatrix::<f64>::identity(n, n);
    for _sweep in 0..100 {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let alpha: f64 = w.column(p).norm_squared();
                let beta: f64 = w.column(q).norm_squared();
                let gamma: f64 = w.column(p).dot(&w.column(q));
                if gamma == 0.0 || gamma.abs() <= 1e-15 * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for i in 0..m {
                    let (x, y) = (w[(i, p)], w[(i, q)]);
                    w[(i, p)] = c * x - s * y;
                    w[(i, q)] = s * x + c * y;
                }
                for i in 0..n {
                    let (x, y) = (v[(i, p)], v[(i, q)]);
                    v[(i, p)] = c * x - s * y;
                    v[(i, q)] = s * x + c * y;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    let norms: Vec<f64> = (0..n).map(|k| w.column(k).norm()).collect();
    order.sort_by(|&x, &y| norms[y].total_cmp(&norms[x]));
    let mut u = DMatrix::zeros(m, n);
    let mut vs = DMatrix::zeros(n, n);
    let mut s = Vec::with_capacity(n);
    for (dst, &src) in order.iter().enumerate() {
        s.push(norms[src]);
        if norms[src] > 0.0 {
            u.set_column(dst, &(w.column(src) / norms[src]));
        }
        vs.set_column(dst, &v.column(src));
    }
    OracleSvd { u, s, v: vs }
}

pub fn svd(a: &DMatrix<f64>) -> OracleSvd {
    if a.nrows() >= a.ncols() {
        jacobi_tall(a)
    } else {
        let t = jacobi_tall(&a.transpose());
        OracleSvd { u: t.v, s: t.s, v: t.u }
    }
}

/// `U_r U_rᵀ` from the leading `r` left vectors.
pub fn left_projector(f: &OracleSvd, r: usize) -> DMatrix<f64> {
    let u = f.u.columns(0, r);
    u * u.transpose()
}

pub fn projector_of(basis: &DMatrix<f64>) -> DMatrix<f64> {
    basis * basis.transpose()
}

/// Column-normalized `sqrt(count / column total)`, built directly from dense counts.
pub fn wave_matrix(counts: &DMatrix<f64>) -> DMatrix<f64> {
    let mut phi = counts.clone();
    for mut col in phi.column_iter_mut() {
        let total: f64 = col.sum();
        col.apply(|x| *x = (*x / total).sqrt());
    }
    phi
}

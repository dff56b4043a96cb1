//! Latent topic spaces.
//!
//! QLSA decomposes the wave-function matrix `Φ` (column `i` is
//! `sqrt(td_i / Σ td_i)`); LSA decomposes the raw counts. Either way the
//! topic basis `{σ_k}` is the leading `r` left singular vectors. Only QLSA
//! views have a probabilistic reading:
//!
//! - `P(z_k|d) = ⟨φ|σ_k⟩² / ‖P_S φ‖²`
//! - `P̂(t_j|d) = ((Σ_k σ_k(j) ⟨σ_k|φ⟩) / ‖P_S φ‖)²`
//!
//! and `P̂(t_j|d) = Σ_k σ_k(j)² P(z_k|d) + I_j`, where `I_j` collects the
//! `k ≠ l` cross products (see [`interference_term`]).

use std::fmt;
use std::io::{self, BufRead, Read, Write};
use std::str::FromStr;

use log::warn;
use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::corpus::TermDocMatrix;
use crate::lowrank::{truncated_svd, SvdError, SvdFactors, SvdOptions};
use crate::quantum::{sqrt_amplitudes, Projector, QuantumError, WaveFunctionMatrix, ORTHO_TOL};
use crate::sparse::SparseColumn;

/// Projections shorter than this are treated as zero.
pub const ZERO_PROJECTION: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum TopicError {
    #[error(transparent)]
    Svd(#[from] SvdError),
    #[error(transparent)]
    Quantum(#[from] QuantumError),
    #[error("document has no projection on the latent space")]
    Unrepresentable,
    #[error("LSA views carry no probabilistic interpretation")]
    NotProbabilistic,
    #[error("view was built for {view} but the space is {space}")]
    MethodMismatch { space: Method, view: Method },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("term index {index} out of range for {terms} terms")]
    IndexOutOfRange { index: usize, terms: usize },
    #[error("malformed model file: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

pub type Result<T, E = TopicError> = std::result::Result<T, E>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    Qlsa,
    Lsa,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Qlsa => "qlsa",
            Method::Lsa => "lsa",
        })
    }
}

impl FromStr for Method {
    type Err = TopicError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "qlsa" => Ok(Method::Qlsa),
            "lsa" => Ok(Method::Lsa),
            other => Err(TopicError::Format(format!("unknown method {other:?}"))),
        }
    }
}

/// An `r`-dimensional topic subspace of the term space.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentSpace {
    method: Method,
    /// m × r, orthonormal columns `σ_k`.
    basis: DMatrix<f64>,
    singular_values: DVector<f64>,
    requested: usize,
}

impl LatentSpace {
    pub fn new(method: Method, basis: DMatrix<f64>, singular_values: DVector<f64>) -> Result<Self> {
        if basis.ncols() == 0 {
            return Err(TopicError::Format("latent space needs r >= 1".into()));
        }
        if singular_values.len() != basis.ncols() {
            return Err(TopicError::DimensionMismatch { expected: basis.ncols(), got: singular_values.len() });
        }
        Projector::from_basis(basis.clone())?;
        let requested = basis.ncols();
        Ok(Self { method, basis, singular_values, requested })
    }

    fn from_factors(method: Method, f: SvdFactors) -> Self {
        if f.shortfall() > 0 {
            warn!("{method}: matrix rank {} is below requested r = {}", f.rank(), f.requested);
        }
        Self { method, basis: f.left, singular_values: f.singular_values, requested: f.requested }
    }

    pub fn method(&self) -> Method {
        self.method
    }

    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    pub fn singular_values(&self) -> &DVector<f64> {
        &self.singular_values
    }

    pub fn rank(&self) -> usize {
        self.basis.ncols()
    }

    pub fn nterms(&self) -> usize {
        self.basis.nrows()
    }

    /// Dimension asked for at fit time; larger than [`rank`](Self::rank) on a shortfall.
    pub fn requested(&self) -> usize {
        self.requested
    }

    /// The leading `r` topics. `r` larger than the rank keeps everything.
    pub fn truncate(&self, r: usize) -> Self {
        let k = r.min(self.rank()).max(1);
        Self {
            method: self.method,
            basis: self.basis.columns(0, k).into_owned(),
            singular_values: self.singular_values.rows(0, k).into_owned(),
            requested: r.max(1),
        }
    }

    pub fn projector(&self) -> Projector {
        Projector::from_basis(self.basis.clone()).expect("basis is orthonormal")
    }

    /// Returns a copy with column `k` negated.
    pub fn flip_sign(&self, k: usize) -> Self {
        let mut out = self.clone();
        out.basis.column_mut(k).neg_mut();
        out
    }
}

/// QLSA: leading left singular vectors of the wave-function matrix.
pub fn fit_qlsa(td: &TermDocMatrix, r: usize, opts: &SvdOptions) -> Result<LatentSpace> {
    let phi = WaveFunctionMatrix::from_counts(td.counts())?;
    let f = truncated_svd(phi.as_sparse(), r, opts)?;
    Ok(LatentSpace::from_factors(Method::Qlsa, f))
}

/// LSA: leading left singular vectors of the unweighted counts.
pub fn fit_lsa(td: &TermDocMatrix, r: usize, opts: &SvdOptions) -> Result<LatentSpace> {
    let f = truncated_svd(&td.to_f64(), r, opts)?;
    Ok(LatentSpace::from_factors(Method::Lsa, f))
}

pub fn fit(method: Method, td: &TermDocMatrix, r: usize, opts: &SvdOptions) -> Result<LatentSpace> {
    match method {
        Method::Qlsa => fit_qlsa(td, r, opts),
        Method::Lsa => fit_lsa(td, r, opts),
    }
}

/// A document (or query) expressed in a latent space.
#[derive(Debug, Clone, PartialEq)]
pub struct DocumentLatentView {
    pub method: Method,
    /// QLSA: `⟨σ_k|φ⟩`; LSA: `σ_kᵀ counts`.
    pub coords: DVector<f64>,
    /// `‖P_S φ‖`, QLSA only.
    pub projected_norm: Option<f64>,
}

fn sparse_coords(space: &LatentSpace, indices: &[usize], values: &[f64]) -> DVector<f64> {
    let basis = &space.basis;
    DVector::from_fn(space.rank(), |k, _| indices.iter().zip(values).map(|(&j, &v)| basis[(j, k)] * v).sum())
}

/// Projects one term-count column onto the space.
///
/// A projection shorter than [`ZERO_PROJECTION`] is reported as
/// [`TopicError::Unrepresentable`].
pub fn doc_view(space: &LatentSpace, counts: SparseColumn<'_, u32>) -> Result<DocumentLatentView> {
    if counts.dim != space.nterms() {
        return Err(TopicError::DimensionMismatch { expected: space.nterms(), got: counts.dim });
    }
    let (coords, projected_norm) = match space.method {
        Method::Qlsa => {
            let amps = sqrt_amplitudes(counts)?;
            let coords = sparse_coords(space, counts.indices, &amps);
            let norm = coords.norm();
            (coords, Some(norm))
        }
        Method::Lsa => {
            let values: Vec<f64> = counts.values.iter().map(|&c| f64::from(c)).collect();
            (sparse_coords(space, counts.indices, &values), None)
        }
    };
    if coords.norm() < ZERO_PROJECTION {
        return Err(TopicError::Unrepresentable);
    }
    Ok(DocumentLatentView { method: space.method, coords, projected_norm })
}

fn qlsa_norm(view: &DocumentLatentView) -> Result<f64> {
    match (view.method, view.projected_norm) {
        (Method::Qlsa, Some(n)) if n >= ZERO_PROJECTION => Ok(n),
        (Method::Qlsa, _) => Err(TopicError::Unrepresentable),
        (Method::Lsa, _) => Err(TopicError::NotProbabilistic),
    }
}

fn check_pair(space: &LatentSpace, view: &DocumentLatentView) -> Result<()> {
    if space.method != view.method {
        return Err(TopicError::MethodMismatch { space: space.method, view: view.method });
    }
    if space.rank() != view.coords.len() {
        return Err(TopicError::DimensionMismatch { expected: space.rank(), got: view.coords.len() });
    }
    Ok(())
}

/// `P(z_k|d) = (coords_k / ‖P_S φ‖)²`.
pub fn topic_given_doc(view: &DocumentLatentView) -> Result<Vec<f64>> {
    let norm = qlsa_norm(view)?;
    Ok(view.coords.iter().map(|c| (c / norm).powi(2)).collect())
}

/// `P̂(t_j|d) = ((basis · coords)_j / ‖P_S φ‖)²` for every term.
pub fn smoothed_term_given_doc(space: &LatentSpace, view: &DocumentLatentView) -> Result<Vec<f64>> {
    check_pair(space, view)?;
    let norm = qlsa_norm(view)?;
    Ok((&space.basis * &view.coords).iter().map(|a| (a / norm).powi(2)).collect())
}

/// Cross-topic part of `P̂(t_j|d)`:
/// `Σ_{k≠l} σ_k(j)⟨σ_k|φ⟩ σ_l(j)⟨σ_l|φ⟩ / ‖P_S φ‖²`.
pub fn interference_term(space: &LatentSpace, view: &DocumentLatentView, j: usize) -> Result<f64> {
    check_pair(space, view)?;
    let norm = qlsa_norm(view)?;
    if j >= space.nterms() {
        return Err(TopicError::IndexOutOfRange { index: j, terms: space.nterms() });
    }
    // Σ_{k≠l} a_k a_l = (Σ a_k)² − Σ a_k²
    let row = space.basis.row(j);
    let terms = row.iter().zip(view.coords.iter()).map(|(s, c)| s * c);
    let (sum, sum_sq) = terms.fold((0.0, 0.0), |(s, q), a| (s + a, q + a * a));
    Ok((sum * sum - sum_sq) / (norm * norm))
}

const TEXT_MAGIC: &str = "qlsa-latent-space 1";
const BINARY_MAGIC: &[u8; 8] = b"QLSALS01";

impl LatentSpace {
    /// Text form: header lines, then singular values one per line, then the
    /// basis one term per line. Values use 17 significant digits, so reading
    /// the file back gives bit-identical numbers.
    pub fn write_text<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "{TEXT_MAGIC}")?;
        writeln!(w, "method {}", self.method)?;
        writeln!(w, "terms {}", self.nterms())?;
        writeln!(w, "rank {}", self.rank())?;
        writeln!(w, "requested {}", self.requested)?;
        writeln!(w, "singular_values")?;
        for s in self.singular_values.iter() {
            writeln!(w, "{s:.16e}")?;
        }
        writeln!(w, "basis")?;
        let mut line = String::new();
        for row in self.basis.row_iter() {
            line.clear();
            for (k, v) in row.iter().enumerate() {
                if k > 0 {
                    line.push(' ');
                }
                line.push_str(&format!("{v:.16e}"));
            }
            writeln!(w, "{line}")?;
        }
        Ok(())
    }

    pub fn read_text<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines();
        let mut next = || -> Result<String> {
            lines.next().ok_or_else(|| TopicError::Format("unexpected end of file".into()))?.map_err(Into::into)
        };
        let bad = |what: &str| TopicError::Format(what.to_owned());
        if next()? != TEXT_MAGIC {
            return Err(bad("missing header"));
        }
        let mut field = |key: &str| -> Result<String> {
            let line = next()?;
            line.strip_prefix(key)
                .and_then(|rest| rest.strip_prefix(' '))
                .map(str::to_owned)
                .ok_or_else(|| bad(&format!("expected {key}")))
        };
        let method: Method = field("method")?.parse()?;
        let terms: usize = field("terms")?.parse().map_err(|_| bad("terms"))?;
        let rank: usize = field("rank")?.parse().map_err(|_| bad("rank"))?;
        let requested: usize = field("requested")?.parse().map_err(|_| bad("requested"))?;
        let num = |s: &str| s.parse::<f64>().map_err(|_| bad(&format!("not a number: {s:?}")));
        if next()? != "singular_values" {
            return Err(bad("expected singular_values"));
        }
        let mut sv = Vec::with_capacity(rank);
        for _ in 0..rank {
            sv.push(num(next()?.trim())?);
        }
        if next()? != "basis" {
            return Err(bad("expected basis"));
        }
        let mut basis = DMatrix::zeros(terms, rank);
        for j in 0..terms {
            let line = next()?;
            let values: Vec<&str> = line.split_whitespace().collect();
            if values.len() != rank {
                return Err(bad(&format!("basis row {j} has {} values", values.len())));
            }
            for (k, v) in values.into_iter().enumerate() {
                basis[(j, k)] = num(v)?;
            }
        }
        let mut space = Self::new(method, basis, DVector::from_vec(sv))?;
        space.requested = requested;
        Ok(space)
    }

    /// Little-endian binary form with the same content as the text form.
    pub fn write_binary<W: Write>(&self, mut w: W) -> io::Result<()> {
        w.write_all(BINARY_MAGIC)?;
        w.write_all(&[match self.method {
            Method::Qlsa => 0,
            Method::Lsa => 1,
        }])?;
        for n in [self.nterms(), self.rank(), self.requested] {
            w.write_all(&(n as u64).to_le_bytes())?;
        }
        for v in self.singular_values.iter().chain(self.basis.iter()) {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != BINARY_MAGIC {
            return Err(TopicError::Format("bad binary magic".into()));
        }
        let mut tag = [0u8; 1];
        r.read_exact(&mut tag)?;
        let method = match tag[0] {
            0 => Method::Qlsa,
            1 => Method::Lsa,
            t => return Err(TopicError::Format(format!("bad method tag {t}"))),
        };
        let mut read_u64 = || -> Result<usize> {
            let mut b = [0u8; 8];
            r.read_exact(&mut b)?;
            Ok(u64::from_le_bytes(b) as usize)
        };
        let (terms, rank, requested) = (read_u64()?, read_u64()?, read_u64()?);
        let mut values = vec![0.0; rank + terms * rank];
        let mut b = [0u8; 8];
        for v in values.iter_mut() {
            r.read_exact(&mut b)?;
            *v = f64::from_le_bytes(b);
        }
        let basis = DMatrix::from_column_slice(terms, rank, &values[rank..]);
        values.truncate(rank);
        let mut space = Self::new(method, basis, DVector::from_vec(values))?;
        space.requested = requested;
        Ok(space)
    }
}

/// Orthonormality check used by [`LatentSpace::new`], exposed for tests.
pub fn basis_is_orthonormal(basis: &DMatrix<f64>) -> bool {
    let g = basis.tr_mul(basis);
    (g - DMatrix::identity(basis.ncols(), basis.ncols())).abs().max() <= ORTHO_TOL
}

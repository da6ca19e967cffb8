//! Gram-matrix certificates `f = sum_j sigma_j h_j`, where each
//! `sigma_j = z_j^T Q_j z_j` is a sum of squares and `h_j` is a generator
//! (`g_i` for the quadratic module, `g^delta` for the preordering).
//!
//! JSON layout:
//!
//! ```text
//! {
//!   "mode": "quadratic_module" | "preordering",
//!   "n": 2,
//!   "level": 2,
//!   "generators": ["-x1^2 + 1", ...],
//!   "target": "x1 + 1",                      (optional)
//!   "entries": [
//!     { "index": 0, "basis": [[0,0],[1,0],[0,1]], "gram": [[...], ...] },
//!     { "delta": [1,0], ... }
//!   ]
//! }
//! ```
//!
//! Entries use `index` (with `0` for the unit generator) in quadratic-module
//! mode and `delta` in preordering mode. Grams are row-major.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{argument, Error, Result};
use crate::poly::{Monomial, Polynomial};
use crate::sdp::min_eigenvalue;
use crate::semialg::SemialgebraicSystem;
use crate::sos::{monomial_basis_capped, MonomialBasis};

pub const DEFAULT_PSD_TOL: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CertificateMode {
    QuadraticModule,
    Preordering,
}

/// Which generator an entry multiplies.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum GeneratorIndex {
    /// `g_i`, with `g_0 = 1`.
    Index(usize),
    /// `g^delta`.
    Delta(Vec<u8>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct CertificateEntry {
    pub index: GeneratorIndex,
    pub basis: MonomialBasis,
    pub gram: DMatrix<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Certificate {
    pub mode: CertificateMode,
    pub system: SemialgebraicSystem,
    pub level: u32,
    pub entries: Vec<CertificateEntry>,
    /// The polynomial this certificate was produced for, if recorded.
    pub target: Option<Polynomial>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    /// Weighted norm of `f - sum_j sigma_j h_j`.
    pub residual_norm: f64,
    pub min_gram_eigenvalue: f64,
    pub level: u32,
    pub pass: bool,
}

impl Certificate {
    /// The generator polynomial `h_j` of an entry.
    pub fn generator(&self, index: &GeneratorIndex) -> Result<Polynomial> {
        match (self.mode, index) {
            (CertificateMode::QuadraticModule, GeneratorIndex::Index(i)) => self
                .system
                .generator(*i)
                .ok_or_else(|| Error::Argument(format!("generator index {i} out of range"))),
            (CertificateMode::Preordering, GeneratorIndex::Delta(d)) => self.system.product(d),
            (mode, idx) => argument(format!("entry {idx:?} does not fit mode {mode:?}")),
        }
    }

    fn check_entry(&self, e: &CertificateEntry) -> Result<Polynomial> {
        let n = self.system.dimension();
        if e.basis.dimension() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: e.basis.dimension(),
            });
        }
        let s = e.basis.len();
        if e.gram.nrows() != s || e.gram.ncols() != s {
            return argument(format!(
                "Gram matrix is {}x{}, basis has {s} monomials",
                e.gram.nrows(),
                e.gram.ncols()
            ));
        }
        let g = self.generator(&e.index)?;
        if 2 * e.basis.max_degree() + g.degree() > self.level {
            return argument(format!(
                "entry {:?} has degree {} above level {}",
                e.index,
                2 * e.basis.max_degree() + g.degree(),
                self.level
            ));
        }
        Ok(g)
    }

    /// `sum_j (z_j^T Q_j z_j) h_j`, summed in entry order.
    pub fn reconstruct(&self) -> Result<Polynomial> {
        let mut acc = Polynomial::zero(self.system.dimension());
        for e in &self.entries {
            let g = self.check_entry(e)?;
            let sigma = e.basis.quadratic_form(&e.gram)?;
            acc = acc.add(&sigma.mul(&g)?)?;
        }
        Ok(acc)
    }

    /// Smallest eigenvalue over all Gram blocks; `0` with no entries.
    pub fn min_gram_eigenvalue(&self) -> f64 {
        if self.entries.is_empty() {
            return 0.0;
        }
        self.entries
            .iter()
            .map(|e| {
                if e.gram.nrows() == 0 {
                    0.0
                } else {
                    min_eigenvalue(&e.gram)
                }
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// Checks `f = reconstruct()` up to `residual_tol` in the weighted norm and
    /// every Gram PSD up to the default PSD tolerance.
    pub fn verify(&self, f: &Polynomial, residual_tol: f64) -> VerificationReport {
        self.verify_with(f, residual_tol, DEFAULT_PSD_TOL)
    }

    /// Never fails: a malformed certificate reports an infinite residual.
    pub fn verify_with(&self, f: &Polynomial, residual_tol: f64, psd_tol: f64) -> VerificationReport {
        let min_gram_eigenvalue = self.min_gram_eigenvalue();
        let residual_norm = if f.dimension() != self.system.dimension() {
            f64::INFINITY
        } else {
            match self.reconstruct().and_then(|r| f.sub(&r)) {
                Ok(d) => d.weighted_norm(),
                Err(_) => f64::INFINITY,
            }
        };
        let pass = residual_norm <= residual_tol && min_gram_eigenvalue >= -psd_tol;
        VerificationReport {
            residual_norm,
            min_gram_eigenvalue,
            level: self.level,
            pass,
        }
    }

    /// Per entry, the generator and polynomials `p_j` with `sigma = sum_j p_j^2`.
    /// Grams are first passed through [`round_psd`] with `clip`.
    pub fn extract_squares(&self, clip: f64) -> Result<Vec<(Polynomial, Vec<Polynomial>)>> {
        let mut out = Vec::with_capacity(self.entries.len());
        for e in &self.entries {
            let g = self.check_entry(e)?;
            let q = round_psd(&e.gram, clip)?;
            let mut squares = Vec::new();
            if q.nrows() > 0 {
                let eig = SymmetricEigen::new(q);
                let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
                order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
                for j in order {
                    let lambda = eig.eigenvalues[j];
                    if lambda <= 0.0 {
                        continue;
                    }
                    let mut v: Vec<f64> = eig
                        .eigenvectors
                        .column(j)
                        .iter()
                        .map(|c| c * lambda.sqrt())
                        .collect();
                    // sign is arbitrary; make the largest coefficient positive
                    let lead = v
                        .iter()
                        .copied()
                        .fold(0.0f64, |m, c| if c.abs() > m.abs() { c } else { m });
                    if lead < 0.0 {
                        v.iter_mut().for_each(|c| *c = -*c);
                    }
                    squares.push(e.basis.linear_form(&v)?);
                }
            }
            out.push((g, squares));
        }
        Ok(out)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&CertificateDoc::from(self))?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: CertificateDoc = serde_json::from_str(text)?;
        doc.into_certificate()
    }

    pub fn to_json_value(&self) -> Result<serde_json::Value> {
        Ok(serde_json::to_value(CertificateDoc::from(self))?)
    }

    pub fn from_json_value(value: serde_json::Value) -> Result<Self> {
        let doc: CertificateDoc = serde_json::from_value(value)?;
        doc.into_certificate()
    }
}

/// Eigenvalue clipping: negatives in `[-clip, 0)` become `0`.
pub fn round_psd(q: &DMatrix<f64>, clip: f64) -> Result<DMatrix<f64>> {
    if !(clip >= 0.0) {
        return argument("clip must be nonnegative");
    }
    if q.nrows() != q.ncols() {
        return argument(format!("matrix is {}x{}, not square", q.nrows(), q.ncols()));
    }
    if q.nrows() == 0 {
        return Ok(q.clone());
    }
    let sym = (q + q.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym.clone());
    let worst = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    if worst < -clip {
        return Err(Error::Rounding {
            eigenvalue: worst,
            clip,
        });
    }
    if worst >= 0.0 {
        return Ok(sym);
    }
    let clipped = eig.eigenvalues.map(|l| l.max(0.0));
    let v = &eig.eigenvectors;
    let r = v * DMatrix::from_diagonal(&clipped) * v.transpose();
    Ok((&r + r.transpose()) * 0.5)
}

#[derive(Serialize, Deserialize)]
struct CertificateDoc {
    mode: CertificateMode,
    n: usize,
    level: u32,
    generators: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    target: Option<String>,
    entries: Vec<EntryDoc>,
}

#[derive(Serialize, Deserialize)]
struct EntryDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    index: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    delta: Option<Vec<u8>>,
    basis: Vec<Vec<u32>>,
    gram: Vec<Vec<f64>>,
}

impl From<&Certificate> for CertificateDoc {
    fn from(c: &Certificate) -> Self {
        let entries = c
            .entries
            .iter()
            .map(|e| {
                let (index, delta) = match &e.index {
                    GeneratorIndex::Index(i) => (Some(*i), None),
                    GeneratorIndex::Delta(d) => (None, Some(d.clone())),
                };
                EntryDoc {
                    index,
                    delta,
                    basis: e
                        .basis
                        .monomials()
                        .iter()
                        .map(|m| m.exponents().to_vec())
                        .collect(),
                    gram: e
                        .gram
                        .row_iter()
                        .map(|r| r.iter().copied().collect())
                        .collect(),
                }
            })
            .collect();
        CertificateDoc {
            mode: c.mode,
            n: c.system.dimension(),
            level: c.level,
            generators: c.system.constraints().iter().map(|g| g.to_string()).collect(),
            target: c.target.as_ref().map(|t| t.to_string()),
            entries,
        }
    }
}

impl CertificateDoc {
    fn into_certificate(self) -> Result<Certificate> {
        let n = self.n;
        if n == 0 {
            return Err(Error::Schema("n must be at least 1".into()));
        }
        let gens = self
            .generators
            .iter()
            .map(|s| Polynomial::parse_with_dimension(s, n))
            .collect::<Result<Vec<_>>>()?;
        let system = SemialgebraicSystem::new(n, gens)?;
        let target = self
            .target
            .as_deref()
            .map(|s| Polynomial::parse_with_dimension(s, n))
            .transpose()?;
        let mut entries = Vec::with_capacity(self.entries.len());
        for (j, e) in self.entries.into_iter().enumerate() {
            let index = match (self.mode, e.index, e.delta) {
                (CertificateMode::QuadraticModule, Some(i), None) => GeneratorIndex::Index(i),
                (CertificateMode::Preordering, None, Some(d)) => GeneratorIndex::Delta(d),
                _ => {
                    return Err(Error::Schema(format!(
                        "entry {j}: {:?} mode needs exactly one of {}",
                        self.mode,
                        match self.mode {
                            CertificateMode::QuadraticModule => "\"index\"",
                            CertificateMode::Preordering => "\"delta\"",
                        }
                    )))
                }
            };
            let basis = parse_basis(n, &e.basis).map_err(|m| Error::Schema(format!("entry {j}: {m}")))?;
            let s = basis.len();
            if e.gram.len() != s || e.gram.iter().any(|r| r.len() != s) {
                return Err(Error::Schema(format!(
                    "entry {j}: gram must be {s}x{s} to match the basis"
                )));
            }
            let gram = DMatrix::from_fn(s, s, |r, c| e.gram[r][c]);
            let scale = gram.amax().max(1.0);
            if (&gram - gram.transpose()).amax() > 1e-9 * scale {
                return Err(Error::Schema(format!("entry {j}: gram is not symmetric")));
            }
            entries.push(CertificateEntry { index, basis, gram });
        }
        let cert = Certificate {
            mode: self.mode,
            system,
            level: self.level,
            entries,
            target,
        };
        for e in &cert.entries {
            cert.check_entry(e).map_err(|err| Error::Schema(err.to_string()))?;
        }
        Ok(cert)
    }
}

/// Accepts only the full graded basis of some degree, in order.
fn parse_basis(n: usize, rows: &[Vec<u32>]) -> std::result::Result<MonomialBasis, String> {
    if rows.is_empty() {
        return Err("basis is empty".into());
    }
    if let Some(r) = rows.iter().find(|r| r.len() != n) {
        return Err(format!("basis exponent {r:?} does not have {n} entries"));
    }
    let d = rows.iter().map(|r| r.iter().sum::<u32>()).max().unwrap_or(0);
    let full = monomial_basis_capped(n, d, rows.len()).map_err(|_| {
        format!("basis is not the full monomial basis of degree {d}")
    })?;
    let listed: Vec<Monomial> = rows.iter().map(|r| Monomial::new(r.clone())).collect();
    if full.monomials() != listed.as_slice() {
        return Err(format!(
            "basis is not the full monomial basis of degree {d} in graded order"
        ));
    }
    Ok(full)
}

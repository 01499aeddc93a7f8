//! Complex operators over named, dimensioned subsystems.
//!
//! A [`LabeledOperator`] is a square matrix whose composite index runs
//! row-major over its label list: the first label is the most significant
//! digit. Every contraction in the crate (channel application, process
//! insertion, the link product) goes through the index bookkeeping here.

use std::collections::HashSet;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;

/// Default tolerance for equality and positivity checks.
pub const DEFAULT_TOL: f64 = 1e-9;

/// A named subsystem with a fixed Hilbert-space dimension.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SystemLabel {
    pub name: String,
    pub dim: usize,
}

impl SystemLabel {
    pub fn new(name: impl Into<String>, dim: usize) -> Self {
        Self { name: name.into(), dim }
    }
}

/// Complex square matrix acting on an ordered list of subsystems.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "OperatorRepr", into = "OperatorRepr")]
pub struct LabeledOperator {
    labels: Vec<SystemLabel>,
    matrix: CMatrix,
}

/// Row strides of the composite index.
fn strides(dims: &[usize]) -> Vec<usize> {
    let mut out = vec![1; dims.len()];
    for k in (0..dims.len().saturating_sub(1)).rev() {
        out[k] = out[k + 1] * dims[k + 1];
    }
    out
}

/// Composite-index offsets of every digit combination over `positions`,
/// enumerated row-major in the order the positions are given.
fn offsets(dims: &[usize], strides: &[usize], positions: &[usize]) -> Vec<usize> {
    let mut out = vec![0usize];
    for &pos in positions {
        let mut next = Vec::with_capacity(out.len() * dims[pos]);
        for &base in &out {
            for digit in 0..dims[pos] {
                next.push(base + digit * strides[pos]);
            }
        }
        out = next;
    }
    out
}

fn check_labels(labels: &[SystemLabel]) -> Result<()> {
    let mut seen = HashSet::new();
    for l in labels {
        if l.dim == 0 {
            return Err(Error::Dimension(format!("subsystem `{}` has dimension 0", l.name)));
        }
        if !seen.insert(l.name.as_str()) {
            return Err(Error::DuplicateLabel(l.name.clone()));
        }
    }
    Ok(())
}

impl LabeledOperator {
    pub fn new(labels: Vec<SystemLabel>, matrix: CMatrix) -> Result<Self> {
        check_labels(&labels)?;
        let dim: usize = labels.iter().map(|l| l.dim).product();
        if matrix.nrows() != dim || matrix.ncols() != dim {
            return Err(Error::Dimension(format!(
                "matrix is {}x{} but labels require {dim}x{dim}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        Ok(Self { labels, matrix })
    }

    /// Single-subsystem operator from a square matrix.
    pub fn single(name: impl Into<String>, matrix: CMatrix) -> Result<Self> {
        let dim = matrix.nrows();
        Self::new(vec![SystemLabel::new(name, dim)], matrix)
    }

    pub fn identity(labels: Vec<SystemLabel>) -> Result<Self> {
        let dim = labels.iter().map(|l| l.dim).product();
        Self::new(labels, CMatrix::identity(dim, dim))
    }

    pub fn zeros(labels: Vec<SystemLabel>) -> Result<Self> {
        let dim = labels.iter().map(|l| l.dim).product();
        Self::new(labels, CMatrix::zeros(dim, dim))
    }

    /// Operator with no subsystems, i.e. a 1x1 scalar.
    pub fn scalar(value: Complex64) -> Self {
        Self {
            labels: Vec::new(),
            matrix: CMatrix::from_element(1, 1, value),
        }
    }

    /// Projector `|v><v|` on the given labels.
    pub fn projector(labels: Vec<SystemLabel>, v: &[Complex64]) -> Result<Self> {
        let ket = nalgebra::DVector::from_column_slice(v);
        Self::new(labels, &ket * ket.adjoint())
    }

    pub fn labels(&self) -> &[SystemLabel] {
        &self.labels
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn names(&self) -> Vec<&str> {
        self.labels.iter().map(|l| l.name.as_str()).collect()
    }

    pub fn label(&self, name: &str) -> Option<&SystemLabel> {
        self.labels.iter().find(|l| l.name == name)
    }

    pub fn has_label(&self, name: &str) -> bool {
        self.label(name).is_some()
    }

    /// Dimension of the named subsystem.
    pub fn dim_of(&self, name: &str) -> Result<usize> {
        self.label(name)
            .map(|l| l.dim)
            .ok_or_else(|| Error::UnknownLabel(name.to_string()))
    }

    fn position(&self, name: &str) -> Result<usize> {
        self.labels
            .iter()
            .position(|l| l.name == name)
            .ok_or_else(|| Error::UnknownLabel(name.to_string()))
    }

    fn dims(&self) -> Vec<usize> {
        self.labels.iter().map(|l| l.dim).collect()
    }

    fn same_label_set(&self, other: &Self) -> bool {
        self.labels.len() == other.labels.len() && self.labels.iter().all(|l| other.labels.contains(l))
    }

    pub fn trace(&self) -> Complex64 {
        self.matrix.trace()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.matrix.norm()
    }

    pub fn scale(&self, factor: f64) -> Self {
        Self {
            labels: self.labels.clone(),
            matrix: &self.matrix * Complex64::new(factor, 0.0),
        }
    }

    pub fn dagger(&self) -> Self {
        Self {
            labels: self.labels.clone(),
            matrix: self.matrix.adjoint(),
        }
    }

    /// Brings `other` into this operator's label order. The label sets must match.
    pub fn align(&self, other: &Self) -> Result<Self> {
        if !self.same_label_set(other) {
            return Err(Error::LabelSet(format!("{:?} vs {:?}", self.names(), other.names())));
        }
        other.permute_to(&self.names())
    }

    /// Linear combination `a*self + b*other` (labels aligned by name).
    pub fn combine(&self, a: f64, other: &Self, b: f64) -> Result<Self> {
        let other = self.align(other)?;
        Ok(Self {
            labels: self.labels.clone(),
            matrix: &self.matrix * Complex64::new(a, 0.0) + other.matrix * Complex64::new(b, 0.0),
        })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.combine(1.0, other, 1.0)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.combine(1.0, other, -1.0)
    }

    /// Frobenius distance after aligning labels.
    pub fn distance(&self, other: &Self) -> Result<f64> {
        Ok(self.sub(other)?.frobenius_norm())
    }

    /// `‖self − other‖_F ≤ tol · max(1, ‖self‖_F)`.
    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        match self.distance(other) {
            Ok(d) => d <= tol * self.frobenius_norm().max(1.0),
            Err(_) => false,
        }
    }

    /// Renames subsystems; pairs are `(old, new)`.
    pub fn relabel(&self, renames: &[(&str, &str)]) -> Result<Self> {
        let mut labels = self.labels.clone();
        for (old, new) in renames {
            let pos = self.position(old)?;
            labels[pos].name = (*new).to_string();
        }
        Self::new(labels, self.matrix.clone())
    }

    /// Appends a suffix to every label name.
    pub fn suffixed(&self, suffix: &str) -> Self {
        let labels = self
            .labels
            .iter()
            .map(|l| SystemLabel::new(format!("{}{suffix}", l.name), l.dim))
            .collect();
        Self {
            labels,
            matrix: self.matrix.clone(),
        }
    }

    /// Kronecker product; labels are concatenated, `self` first.
    pub fn tensor_product(&self, other: &Self) -> Result<Self> {
        let mut labels = self.labels.clone();
        labels.extend(other.labels.iter().cloned());
        Self::new(labels, self.matrix.kronecker(&other.matrix))
    }

    /// Reorders subsystems so the label list reads as `order`.
    pub fn permute_to<S: AsRef<str>>(&self, order: &[S]) -> Result<Self> {
        if order.len() != self.labels.len() {
            return Err(Error::NotPermutation);
        }
        let mut positions = Vec::with_capacity(order.len());
        for name in order {
            let pos = self.position(name.as_ref()).map_err(|_| Error::NotPermutation)?;
            if positions.contains(&pos) {
                return Err(Error::NotPermutation);
            }
            positions.push(pos);
        }
        if positions.iter().enumerate().all(|(k, &p)| k == p) {
            return Ok(self.clone());
        }
        let dims = self.dims();
        let map = offsets(&dims, &strides(&dims), &positions);
        let n = self.dim();
        let matrix = CMatrix::from_fn(n, n, |r, c| self.matrix[(map[r], map[c])]);
        let labels = positions.iter().map(|&p| self.labels[p].clone()).collect();
        Ok(Self { labels, matrix })
    }

    fn positions_of<S: AsRef<str>>(&self, names: &[S]) -> Result<Vec<usize>> {
        let mut out = Vec::with_capacity(names.len());
        for name in names {
            let pos = self.position(name.as_ref())?;
            if !out.contains(&pos) {
                out.push(pos);
            }
        }
        Ok(out)
    }

    /// Traces out the named subsystems; remaining labels keep their order.
    pub fn partial_trace<S: AsRef<str>>(&self, over: &[S]) -> Result<Self> {
        let traced = self.positions_of(over)?;
        if traced.is_empty() {
            return Ok(self.clone());
        }
        let kept: Vec<usize> = (0..self.labels.len()).filter(|p| !traced.contains(p)).collect();
        let dims = self.dims();
        let st = strides(&dims);
        let kept_off = offsets(&dims, &st, &kept);
        let traced_off = offsets(&dims, &st, &traced);
        let n = kept_off.len();
        let mut matrix = CMatrix::zeros(n, n);
        for &t in &traced_off {
            for (r, &kr) in kept_off.iter().enumerate() {
                for (c, &kc) in kept_off.iter().enumerate() {
                    matrix[(r, c)] += self.matrix[(kr + t, kc + t)];
                }
            }
        }
        let labels = kept.iter().map(|&p| self.labels[p].clone()).collect();
        Ok(Self { labels, matrix })
    }

    /// Transposes the named tensor factors; involutive.
    pub fn partial_transpose<S: AsRef<str>>(&self, on: &[S]) -> Result<Self> {
        let flipped = self.positions_of(on)?;
        if flipped.is_empty() {
            return Ok(self.clone());
        }
        let rest: Vec<usize> = (0..self.labels.len()).filter(|p| !flipped.contains(p)).collect();
        let dims = self.dims();
        let st = strides(&dims);
        let rest_off = offsets(&dims, &st, &rest);
        let flip_off = offsets(&dims, &st, &flipped);
        let n = self.dim();
        let mut matrix = CMatrix::zeros(n, n);
        for &a1 in &rest_off {
            for &t1 in &flip_off {
                for &a2 in &rest_off {
                    for &t2 in &flip_off {
                        matrix[(a1 + t2, a2 + t1)] = self.matrix[(a1 + t1, a2 + t2)];
                    }
                }
            }
        }
        Ok(Self {
            labels: self.labels.clone(),
            matrix,
        })
    }

    /// Trace-and-replace: discards the named subsystems and puts back the
    /// normalized identity on them. Label order is unchanged.
    pub fn trace_replace<S: AsRef<str>>(&self, over: &[S]) -> Result<Self> {
        let traced = self.positions_of(over)?;
        if traced.is_empty() {
            return Ok(self.clone());
        }
        let reduced = self.partial_trace(over)?;
        let replaced: Vec<SystemLabel> = traced.iter().map(|&p| self.labels[p].clone()).collect();
        let d: usize = replaced.iter().map(|l| l.dim).product();
        let id = Self::identity(replaced)?.scale(1.0 / d as f64);
        id.tensor_product(&reduced)?.permute_to(&self.names())
    }

    /// Link product `Tr_s[self^{T_s} other]` over the subsystems `s` the two
    /// operators share by name. Result labels: `self`-only labels followed by
    /// `other`-only labels, each in their original order.
    pub fn link_product(&self, other: &Self) -> Result<Self> {
        let mut shared = Vec::new();
        for l in &self.labels {
            if let Some(r) = other.label(&l.name) {
                if r.dim != l.dim {
                    return Err(Error::LabelDimMismatch {
                        name: l.name.clone(),
                        left: l.dim,
                        right: r.dim,
                    });
                }
                shared.push(l.name.as_str());
            }
        }
        if shared.is_empty() {
            return self.tensor_product(other);
        }
        let a_pos: Vec<usize> = (0..self.labels.len())
            .filter(|&p| !shared.contains(&self.labels[p].name.as_str()))
            .collect();
        let b_pos: Vec<usize> = (0..other.labels.len())
            .filter(|&p| !shared.contains(&other.labels[p].name.as_str()))
            .collect();
        let s_pos_m = self.positions_of(&shared)?;
        let s_pos_n = other.positions_of(&shared)?;

        let dm = self.dims();
        let stm = strides(&dm);
        let dn = other.dims();
        let stn = strides(&dn);
        let a_off = offsets(&dm, &stm, &a_pos);
        let sm_off = offsets(&dm, &stm, &s_pos_m);
        let sn_off = offsets(&dn, &stn, &s_pos_n);
        let b_off = offsets(&dn, &stn, &b_pos);
        let (da, ds, db) = (a_off.len(), sm_off.len(), b_off.len());

        // result[(a,b),(a',b')] = Σ_{s,s'} M[(a,s'),(a',s)] N[(s',b),(s,b')]
        let x = CMatrix::from_fn(da * da, ds * ds, |row, col| {
            let (a, ap) = (row / da, row % da);
            let (sp, s) = (col / ds, col % ds);
            self.matrix[(a_off[a] + sm_off[sp], a_off[ap] + sm_off[s])]
        });
        let y = CMatrix::from_fn(ds * ds, db * db, |row, col| {
            let (sp, s) = (row / ds, row % ds);
            let (b, bp) = (col / db, col % db);
            other.matrix[(sn_off[sp] + b_off[b], sn_off[s] + b_off[bp])]
        });
        let z = x * y;
        let n = da * db;
        let matrix = CMatrix::from_fn(n, n, |r, c| {
            let (a, b) = (r / db, r % db);
            let (ap, bp) = (c / db, c % db);
            z[(a * da + ap, b * db + bp)]
        });
        let mut labels: Vec<SystemLabel> = a_pos.iter().map(|&p| self.labels[p].clone()).collect();
        labels.extend(b_pos.iter().map(|&p| other.labels[p].clone()));
        Self::new(labels, matrix)
    }

    /// `‖M − M†‖_F`.
    pub fn hermiticity_residual(&self) -> f64 {
        (&self.matrix - self.matrix.adjoint()).norm()
    }

    /// `(M + M†)/2`.
    pub fn hermitian_part(&self) -> CMatrix {
        (&self.matrix + self.matrix.adjoint()) * Complex64::new(0.5, 0.0)
    }

    /// Ascending eigenvalues of the Hermitian part.
    pub fn eigenvalues(&self) -> Vec<f64> {
        hermitian_eigenvalues(&self.hermitian_part())
    }

    /// Positive-semidefiniteness with a relative tolerance. Non-Hermitian
    /// input is an error rather than `false`.
    pub fn is_psd(&self, tol: f64) -> Result<bool> {
        let residual = self.hermiticity_residual();
        if residual > tol * self.frobenius_norm().max(1.0) {
            return Err(Error::NotHermitian { residual });
        }
        let eig = self.eigenvalues();
        let scale = eig.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        Ok(eig.first().is_none_or(|&min| min >= -tol * scale))
    }
}

/// Ascending eigenvalues of a Hermitian matrix.
pub fn hermitian_eigenvalues(m: &CMatrix) -> Vec<f64> {
    let mut eig: Vec<f64> = SymmetricEigen::new(m.clone()).eigenvalues.iter().copied().collect();
    eig.sort_by(f64::total_cmp);
    eig
}

/// `f(M)` for Hermitian `M` through its spectral decomposition.
pub fn hermitian_function(m: &CMatrix, f: impl Fn(f64) -> f64) -> CMatrix {
    let eig = SymmetricEigen::new(m.clone());
    let d = CMatrix::from_diagonal(&eig.eigenvalues.map(|v| Complex64::new(f(v), 0.0)));
    &eig.eigenvectors * d * eig.eigenvectors.adjoint()
}

#[derive(Serialize, Deserialize)]
struct OperatorRepr {
    labels: Vec<SystemLabel>,
    matrix: Vec<Vec<[f64; 2]>>,
}

/// Decodes a matrix written as rows of `[re, im]` pairs.
pub(crate) fn matrix_from_pairs(rows: &[Vec<[f64; 2]>]) -> Result<CMatrix> {
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|row| row.len() != ncols) {
        return Err(Error::Dimension("matrix rows are ragged".into()));
    }
    Ok(CMatrix::from_fn(nrows, ncols, |r, c| {
        let [re, im] = rows[r][c];
        Complex64::new(re, im)
    }))
}

pub(crate) fn matrix_to_pairs(m: &CMatrix) -> Vec<Vec<[f64; 2]>> {
    (0..m.nrows())
        .map(|r| (0..m.ncols()).map(|c| [m[(r, c)].re, m[(r, c)].im]).collect())
        .collect()
}

impl TryFrom<OperatorRepr> for LabeledOperator {
    type Error = Error;

    fn try_from(repr: OperatorRepr) -> Result<Self> {
        let matrix = matrix_from_pairs(&repr.matrix)?;
        if matrix.nrows() != matrix.ncols() {
            return Err(Error::Dimension(format!(
                "operator matrix is {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        LabeledOperator::new(repr.labels, matrix)
    }
}

impl From<LabeledOperator> for OperatorRepr {
    fn from(op: LabeledOperator) -> Self {
        OperatorRepr {
            matrix: matrix_to_pairs(&op.matrix),
            labels: op.labels,
        }
    }
}

//! Complex sparse matrices on the tensor basis.
//!
//! Assembly is coordinate-based: duplicate entries are summed
//! deterministically in (row, col) order, so builds are reproducible.
//! Operators flagged hermitian are verified entrywise against their
//! conjugate transpose at assembly time; the flag is never "repaired" by
//! symmetrization.

use crate::error::{Error, Result};
use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

#[derive(Debug, Clone)]
pub struct SparseOperator {
    pub dim: usize,
    pub hermitian: bool,
    pub label: String,
    /// Optional JSON blob describing the physical parameters the operator
    /// was assembled with; carried through exports.
    pub metadata: Option<String>,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<Complex64>,
}

impl SparseOperator {
    /// Assemble from coordinate triplets. Duplicates are summed in sorted
    /// (row, col) order; exact zeros produced by cancellation are kept out.
    pub fn from_triplets(
        dim: usize,
        label: impl Into<String>,
        hermitian: bool,
        mut triplets: Vec<(usize, usize, Complex64)>,
    ) -> Result<Self> {
        let label = label.into();
        triplets.sort_by(|x, y| (x.0, x.1).cmp(&(y.0, y.1)));
        let mut row_ptr = vec![0usize; dim + 1];
        let mut col_idx = Vec::with_capacity(triplets.len());
        let mut values: Vec<Complex64> = Vec::with_capacity(triplets.len());
        let mut i = 0;
        while i < triplets.len() {
            let (r, c, _) = triplets[i];
            if r >= dim || c >= dim {
                return Err(Error::DimMismatch(r.max(c), dim));
            }
            let mut v = Complex64::new(0.0, 0.0);
            while i < triplets.len() && triplets[i].0 == r && triplets[i].1 == c {
                v += triplets[i].2;
                i += 1;
            }
            if v != Complex64::new(0.0, 0.0) {
                row_ptr[r + 1] += 1;
                col_idx.push(c);
                values.push(v);
            }
        }
        for r in 0..dim {
            row_ptr[r + 1] += row_ptr[r];
        }
        let op = SparseOperator {
            dim,
            hermitian,
            label,
            metadata: None,
            row_ptr,
            col_idx,
            values,
        };
        if hermitian {
            op.verify_hermitian()?;
        }
        Ok(op)
    }

    /// Diagonal operator from real eigenvalues.
    pub fn diagonal(label: impl Into<String>, diag: &[f64]) -> Self {
        let dim = diag.len();
        let mut row_ptr = vec![0usize; dim + 1];
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        for (i, &d) in diag.iter().enumerate() {
            if d != 0.0 {
                col_idx.push(i);
                values.push(Complex64::new(d, 0.0));
                row_ptr[i + 1] = 1;
            }
        }
        for r in 0..dim {
            row_ptr[r + 1] += row_ptr[r];
        }
        SparseOperator {
            dim,
            hermitian: true,
            label: label.into(),
            metadata: None,
            row_ptr,
            col_idx,
            values,
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self::diagonal("1", &vec![1.0; dim])
    }

    pub fn zero(dim: usize, label: impl Into<String>) -> Self {
        SparseOperator {
            dim,
            hermitian: true,
            label: label.into(),
            metadata: None,
            row_ptr: vec![0; dim + 1],
            col_idx: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn relabel(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn with_metadata(mut self, metadata: String) -> Self {
        self.metadata = Some(metadata);
        self
    }

    /// Entry lookup by binary search within the row.
    pub fn get(&self, r: usize, c: usize) -> Complex64 {
        let lo = self.row_ptr[r];
        let hi = self.row_ptr[r + 1];
        match self.col_idx[lo..hi].binary_search(&c) {
            Ok(p) => self.values[lo + p],
            Err(_) => Complex64::new(0.0, 0.0),
        }
    }

    pub fn rows(&self) -> impl Iterator<Item = (usize, &[usize], &[Complex64])> {
        (0..self.dim).map(move |r| {
            let lo = self.row_ptr[r];
            let hi = self.row_ptr[r + 1];
            (r, &self.col_idx[lo..hi], &self.values[lo..hi])
        })
    }

    /// Exact entrywise hermiticity check.
    pub fn verify_hermitian(&self) -> Result<()> {
        for (r, cols, vals) in self.rows() {
            for (&c, &v) in cols.iter().zip(vals) {
                let vt = self.get(c, r);
                if vt != v.conj() {
                    return Err(Error::NotHermitian(self.label.clone(), r, c));
                }
            }
        }
        Ok(())
    }

    pub fn is_hermitian_exact(&self) -> bool {
        self.verify_hermitian().is_ok()
    }

    /// Claim hermiticity for an operator that is hermitian by construction
    /// (for instance `X + X*` or `C C*` assembled from exactly paired
    /// triplets); the claim is verified entrywise, never repaired.
    pub fn assert_hermitian(mut self) -> Result<SparseOperator> {
        self.hermitian = true;
        self.verify_hermitian()?;
        Ok(self)
    }

    /// Matrix-vector product; row-parallel with a fixed per-row summation
    /// order, so results are identical for any thread count.
    pub fn apply(&self, x: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(x.len(), self.dim);
        (0..self.dim)
            .into_par_iter()
            .map(|r| {
                let lo = self.row_ptr[r];
                let hi = self.row_ptr[r + 1];
                let mut acc = Complex64::new(0.0, 0.0);
                for p in lo..hi {
                    acc += self.values[p] * x[self.col_idx[p]];
                }
                acc
            })
            .collect()
    }

    pub fn adjoint(&self) -> SparseOperator {
        let mut t: Vec<(usize, usize, Complex64)> = Vec::with_capacity(self.nnz());
        for (r, cols, vals) in self.rows() {
            for (&c, &v) in cols.iter().zip(vals) {
                t.push((c, r, v.conj()));
            }
        }
        SparseOperator::from_triplets(self.dim, format!("{}*", self.label), self.hermitian, t)
            .expect("adjoint assembly cannot fail")
    }

    /// Sum of scaled operators. The hermitian flag is set only when every
    /// part is hermitian with a real coefficient, and is then re-verified.
    pub fn linear_combination(
        label: impl Into<String>,
        parts: &[(Complex64, &SparseOperator)],
    ) -> Result<SparseOperator> {
        let label = label.into();
        let dim = parts
            .first()
            .map(|(_, op)| op.dim)
            .ok_or_else(|| Error::InvalidArgument("empty linear combination".into()))?;
        let mut t = Vec::new();
        let mut herm = true;
        for (coeff, op) in parts {
            if op.dim != dim {
                return Err(Error::DimMismatch(op.dim, dim));
            }
            if !(op.hermitian && coeff.im == 0.0) {
                herm = false;
            }
            for (r, cols, vals) in op.rows() {
                for (&c, &v) in cols.iter().zip(vals) {
                    t.push((r, c, coeff * v));
                }
            }
        }
        SparseOperator::from_triplets(dim, label, herm, t)
    }

    pub fn add(&self, other: &SparseOperator, label: impl Into<String>) -> Result<SparseOperator> {
        let one = Complex64::new(1.0, 0.0);
        SparseOperator::linear_combination(label, &[(one, self), (one, other)])
    }

    pub fn sub(&self, other: &SparseOperator, label: impl Into<String>) -> Result<SparseOperator> {
        SparseOperator::linear_combination(
            label,
            &[
                (Complex64::new(1.0, 0.0), self),
                (Complex64::new(-1.0, 0.0), other),
            ],
        )
    }

    pub fn scale(&self, coeff: Complex64, label: impl Into<String>) -> SparseOperator {
        SparseOperator::linear_combination(label, &[(coeff, self)])
            .expect("scaling cannot fail")
    }

    /// CSR * CSR product (row-by-row accumulation).
    pub fn matmul(&self, other: &SparseOperator, label: impl Into<String>) -> Result<SparseOperator> {
        if self.dim != other.dim {
            return Err(Error::DimMismatch(self.dim, other.dim));
        }
        let dim = self.dim;
        let rows: Vec<Vec<(usize, usize, Complex64)>> = (0..dim)
            .into_par_iter()
            .map(|r| {
                let mut acc: std::collections::BTreeMap<usize, Complex64> =
                    std::collections::BTreeMap::new();
                let lo = self.row_ptr[r];
                let hi = self.row_ptr[r + 1];
                for p in lo..hi {
                    let k = self.col_idx[p];
                    let va = self.values[p];
                    let lo2 = other.row_ptr[k];
                    let hi2 = other.row_ptr[k + 1];
                    for q in lo2..hi2 {
                        *acc.entry(other.col_idx[q]).or_insert(Complex64::new(0.0, 0.0)) +=
                            va * other.values[q];
                    }
                }
                acc.into_iter().map(|(c, v)| (r, c, v)).collect()
            })
            .collect();
        let t: Vec<(usize, usize, Complex64)> = rows.into_iter().flatten().collect();
        SparseOperator::from_triplets(dim, label, false, t)
    }

    pub fn to_dense(&self) -> DMatrix<Complex64> {
        let mut m = DMatrix::<Complex64>::zeros(self.dim, self.dim);
        for (r, cols, vals) in self.rows() {
            for (&c, &v) in cols.iter().zip(vals) {
                m[(r, c)] = v;
            }
        }
        m
    }

    pub fn from_dense(
        m: &DMatrix<Complex64>,
        label: impl Into<String>,
        hermitian: bool,
    ) -> Result<SparseOperator> {
        let dim = m.nrows();
        let mut t = Vec::new();
        for r in 0..dim {
            for c in 0..dim {
                let v = m[(r, c)];
                if v != Complex64::new(0.0, 0.0) {
                    t.push((r, c, v));
                }
            }
        }
        SparseOperator::from_triplets(dim, label, hermitian, t)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs_entry(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Dense operator norm (largest singular value). For hermitian-flagged
    /// operators this is the largest absolute eigenvalue.
    pub fn op_norm_dense(&self) -> f64 {
        if self.dim == 0 {
            return 0.0;
        }
        let m = self.to_dense();
        if self.hermitian {
            let eig = m.symmetric_eigen();
            eig.eigenvalues.iter().map(|l| l.abs()).fold(0.0, f64::max)
        } else {
            let mm = m.adjoint() * &m;
            let eig = mm.symmetric_eigen();
            eig.eigenvalues
                .iter()
                .map(|l| l.max(0.0))
                .fold(0.0, f64::max)
                .sqrt()
        }
    }

    /// Extremal eigenvalues of a hermitian operator via dense decomposition.
    pub fn extremal_eigs_dense(&self) -> Result<(f64, f64)> {
        if !self.hermitian {
            return Err(Error::HermitianRequired(self.label.clone()));
        }
        let eig = self.to_dense().symmetric_eigen();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for &l in eig.eigenvalues.iter() {
            lo = lo.min(l);
            hi = hi.max(l);
        }
        Ok((lo, hi))
    }

    /// Dense submatrix on a subset of basis indices (used to compress
    /// residuals onto protected occupation sectors).
    pub fn submatrix_dense(&self, indices: &[usize]) -> DMatrix<Complex64> {
        let pos: std::collections::HashMap<usize, usize> =
            indices.iter().enumerate().map(|(i, &g)| (g, i)).collect();
        let mut m = DMatrix::<Complex64>::zeros(indices.len(), indices.len());
        for (i, &r) in indices.iter().enumerate() {
            let lo = self.row_ptr[r];
            let hi = self.row_ptr[r + 1];
            for p in lo..hi {
                if let Some(&j) = pos.get(&self.col_idx[p]) {
                    m[(i, j)] = self.values[p];
                }
            }
        }
        m
    }

    /// Export in the sparse triplet text format:
    /// header `dim label hermitian`, then one `row col re im` line per entry.
    pub fn export_triplets(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "{} {} {}\n",
            self.dim,
            self.label.replace(' ', "_"),
            if self.hermitian { 1 } else { 0 }
        ));
        for (r, cols, vals) in self.rows() {
            for (&c, &v) in cols.iter().zip(vals) {
                out.push_str(&format!("{} {} {:.17e} {:.17e}\n", r, c, v.re, v.im));
            }
        }
        out
    }

    pub fn import_triplets(text: &str) -> Result<SparseOperator> {
        let mut lines = text.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::InvalidArgument("empty triplet text".into()))?;
        let mut h = header.split_whitespace();
        let dim: usize = h
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::InvalidArgument("bad triplet header".into()))?;
        let label = h.next().unwrap_or("op").to_string();
        let herm: u8 = h
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::InvalidArgument("bad triplet header".into()))?;
        let mut t = Vec::new();
        for line in lines {
            if line.trim().is_empty() {
                continue;
            }
            let mut it = line.split_whitespace();
            let r: usize = it
                .next()
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| Error::InvalidArgument("bad triplet row".into()))?;
            let c: usize = it
                .next()
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| Error::InvalidArgument("bad triplet col".into()))?;
            let re: f64 = it
                .next()
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| Error::InvalidArgument("bad triplet value".into()))?;
            let im: f64 = it
                .next()
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| Error::InvalidArgument("bad triplet value".into()))?;
            t.push((r, c, Complex64::new(re, im)));
        }
        SparseOperator::from_triplets(dim, label, herm == 1, t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn duplicate_entries_summed() {
        let op = SparseOperator::from_triplets(
            2,
            "t",
            false,
            vec![(0, 1, c(1.0, 0.0)), (0, 1, c(2.0, 1.0)), (1, 0, c(0.5, 0.0))],
        )
        .unwrap();
        assert_eq!(op.get(0, 1), c(3.0, 1.0));
        assert_eq!(op.nnz(), 2);
    }

    #[test]
    fn hermitian_enforced_at_assembly() {
        let bad = SparseOperator::from_triplets(
            2,
            "bad",
            true,
            vec![(0, 1, c(1.0, 1.0)), (1, 0, c(1.0, 1.0))],
        );
        assert!(matches!(bad, Err(Error::NotHermitian(..))));
        let good = SparseOperator::from_triplets(
            2,
            "good",
            true,
            vec![(0, 1, c(1.0, 1.0)), (1, 0, c(1.0, -1.0))],
        );
        assert!(good.is_ok());
    }

    #[test]
    fn matvec_and_matmul_agree_with_dense() {
        let a = SparseOperator::from_triplets(
            3,
            "a",
            false,
            vec![
                (0, 0, c(1.0, 0.0)),
                (0, 2, c(0.0, 1.0)),
                (1, 1, c(2.0, -1.0)),
                (2, 0, c(0.5, 0.5)),
            ],
        )
        .unwrap();
        let b = SparseOperator::from_triplets(
            3,
            "b",
            false,
            vec![(0, 1, c(1.0, 1.0)), (1, 2, c(3.0, 0.0)), (2, 2, c(0.0, -2.0))],
        )
        .unwrap();
        let ab = a.matmul(&b, "ab").unwrap();
        let dense = a.to_dense() * b.to_dense();
        for r in 0..3 {
            for col in 0..3 {
                assert!((ab.get(r, col) - dense[(r, col)]).norm() < 1e-15);
            }
        }
        let x = vec![c(1.0, 0.0), c(0.0, 1.0), c(-1.0, 2.0)];
        let y = a.apply(&x);
        let xd = nalgebra::DVector::from_vec(x.clone());
        let yd = a.to_dense() * xd;
        for i in 0..3 {
            assert!((y[i] - yd[i]).norm() < 1e-15);
        }
    }

    #[test]
    fn triplet_export_roundtrip() {
        let a = SparseOperator::from_triplets(
            2,
            "phi",
            true,
            vec![(0, 1, c(1.5, -0.25)), (1, 0, c(1.5, 0.25)), (0, 0, c(2.0, 0.0))],
        )
        .unwrap();
        let text = a.export_triplets();
        let b = SparseOperator::import_triplets(&text).unwrap();
        assert_eq!(b.dim, 2);
        assert!(b.hermitian);
        assert_eq!(b.get(0, 1), a.get(0, 1));
        assert_eq!(b.get(0, 0), a.get(0, 0));
    }

    #[test]
    fn op_norm_matches_known() {
        let a = SparseOperator::diagonal("d", &[3.0, -7.0, 2.0]);
        assert!((a.op_norm_dense() - 7.0).abs() < 1e-12);
        let n = SparseOperator::from_triplets(2, "n", false, vec![(0, 1, c(5.0, 0.0))]).unwrap();
        assert!((n.op_norm_dense() - 5.0).abs() < 1e-12);
    }
}

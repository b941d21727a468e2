//! Time evolution `e^{-itH} psi`: Lanczos (Krylov) propagation with full
//! reorthogonalization and adaptive time substepping, plus a dense
//! eigendecomposition oracle for reference-quality results at small
//! dimensions.

use crate::error::{Error, Result};
use crate::sparse::SparseOperator;
use nalgebra::{Complex, DMatrix, DVector};
use num_complex::Complex64;

/// Normalized amplitude vector over a tensor basis.
#[derive(Debug, Clone)]
pub struct SimState {
    pub amplitudes: Vec<Complex64>,
    pub provenance: String,
    /// Hash of the basis the amplitudes refer to; deviations between states
    /// from different bases are rejected.
    pub basis_hash: u64,
}

impl SimState {
    pub fn new(amplitudes: Vec<Complex64>, provenance: impl Into<String>, basis_hash: u64) -> Self {
        SimState {
            amplitudes,
            provenance: provenance.into(),
            basis_hash,
        }
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes
            .iter()
            .map(|a| a.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    pub fn normalize(&mut self) {
        let n = self.norm();
        if n > 0.0 {
            for a in &mut self.amplitudes {
                *a /= n;
            }
        }
    }

    pub fn inner(&self, other: &SimState) -> Complex64 {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// Real expectation value `<psi, A psi>` (meaningful for hermitian `A`).
    pub fn expectation(&self, op: &SparseOperator) -> f64 {
        let y = op.apply(&self.amplitudes);
        self.amplitudes
            .iter()
            .zip(&y)
            .map(|(a, b)| (a.conj() * b).re)
            .sum()
    }
}

/// Squared norm of the difference of two states on the same basis.
pub fn deviation(a: &SimState, b: &SimState) -> Result<f64> {
    if a.dim() != b.dim() || a.basis_hash != b.basis_hash {
        return Err(Error::BasisMismatch);
    }
    Ok(a.amplitudes
        .iter()
        .zip(&b.amplitudes)
        .map(|(x, y)| (x - y).norm_sqr())
        .sum())
}

#[derive(Debug, Clone, Copy)]
pub struct KrylovOptions {
    /// Maximum Krylov subspace dimension per substep.
    pub max_subspace: usize,
    /// Breakdown threshold on the Lanczos off-diagonal.
    pub breakdown_tol: f64,
    /// Maximum substep bisection depth.
    pub max_depth: usize,
}

impl Default for KrylovOptions {
    fn default() -> Self {
        KrylovOptions {
            max_subspace: 48,
            breakdown_tol: 1e-13,
            max_depth: 48,
        }
    }
}

/// `e^{-itH} psi` for hermitian `H` by Lanczos iteration with full
/// reorthogonalization; substeps are bisected adaptively until the
/// a-posteriori error estimate passes the tolerance.
pub fn krylov_expmv(
    h: &SparseOperator,
    psi: &SimState,
    t: f64,
    tol: f64,
    opts: &KrylovOptions,
) -> Result<SimState> {
    if !h.hermitian {
        return Err(Error::HermitianRequired(h.label.clone()));
    }
    if h.dim != psi.dim() {
        return Err(Error::DimMismatch(h.dim, psi.dim()));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument("krylov tolerance must be > 0".into()));
    }
    let mut amps = psi.amplitudes.clone();
    if t != 0.0 {
        amps = krylov_step(h, amps, t, tol, opts, 0)?;
    }
    Ok(SimState::new(
        amps,
        format!("exp(-i {} t)[{}]", h.label, psi.provenance),
        psi.basis_hash,
    ))
}

fn krylov_step(
    h: &SparseOperator,
    v0: Vec<Complex64>,
    t: f64,
    tol: f64,
    opts: &KrylovOptions,
    depth: usize,
) -> Result<Vec<Complex64>> {
    let beta0 = vec_norm(&v0);
    if beta0 == 0.0 {
        return Ok(v0);
    }
    let dim = v0.len();
    let m_cap = opts.max_subspace.min(dim);
    let mut basis: Vec<Vec<Complex64>> = Vec::with_capacity(m_cap);
    basis.push(v0.iter().map(|a| a / beta0).collect());
    let mut alphas: Vec<f64> = Vec::new();
    let mut betas: Vec<f64> = Vec::new();
    let mut happy = false;

    for j in 0..m_cap {
        let mut w = h.apply(&basis[j]);
        if j > 0 {
            let b = betas[j - 1];
            for (wi, vi) in w.iter_mut().zip(&basis[j - 1]) {
                *wi -= b * vi;
            }
        }
        let alpha = basis[j]
            .iter()
            .zip(&w)
            .map(|(v, x)| (v.conj() * x).re)
            .sum::<f64>();
        for (wi, vi) in w.iter_mut().zip(&basis[j]) {
            *wi -= alpha * vi;
        }
        // full reorthogonalization, two passes
        for _ in 0..2 {
            for v in &basis {
                let c: Complex64 = v.iter().zip(&w).map(|(a, b)| a.conj() * b).sum();
                if c.norm() > 0.0 {
                    for (wi, vi) in w.iter_mut().zip(v) {
                        *wi -= c * vi;
                    }
                }
            }
        }
        alphas.push(alpha);
        let beta = vec_norm(&w);
        if beta < opts.breakdown_tol {
            happy = true;
            break;
        }
        if basis.len() < m_cap {
            betas.push(beta);
            basis.push(w.iter().map(|a| a / beta).collect());
        } else {
            betas.push(beta);
            break;
        }
    }

    let m = alphas.len();
    let y = tridiag_expm_e1(&alphas, &betas[..m.saturating_sub(1)], t);
    // a-posteriori error estimate: weight falling off the last basis vector
    let err_est = if happy || m == dim {
        0.0
    } else {
        let beta_m = betas.get(m - 1).copied().unwrap_or(0.0);
        (beta_m * y[m - 1].norm() * t.abs()).min(2.0)
    };
    if err_est > tol && depth < opts.max_depth {
        let half = krylov_step(h, v0, 0.5 * t, tol * 0.5, opts, depth + 1)?;
        return krylov_step(h, half, 0.5 * t, tol * 0.5, opts, depth + 1);
    }
    if err_est > tol {
        return Err(Error::ExpTolerance {
            residual: err_est,
            tol,
        });
    }
    let mut out = vec![Complex64::new(0.0, 0.0); dim];
    for (j, v) in basis.iter().enumerate().take(m) {
        let c = beta0 * y[j];
        for (oi, vi) in out.iter_mut().zip(v) {
            *oi += c * vi;
        }
    }
    Ok(out)
}

fn vec_norm(v: &[Complex64]) -> f64 {
    v.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
}

/// First column of `exp(-i t T)` for the real symmetric tridiagonal `T`.
fn tridiag_expm_e1(alphas: &[f64], betas: &[f64], t: f64) -> Vec<Complex64> {
    let m = alphas.len();
    let mut tm = DMatrix::<f64>::zeros(m, m);
    for j in 0..m {
        tm[(j, j)] = alphas[j];
        if j + 1 < m {
            tm[(j, j + 1)] = betas[j];
            tm[(j + 1, j)] = betas[j];
        }
    }
    let eig = tm.symmetric_eigen();
    // y = V exp(-i t L) V^T e1
    let v = &eig.eigenvectors;
    let mut y = vec![Complex64::new(0.0, 0.0); m];
    for k in 0..m {
        let phase = Complex64::new(0.0, -t * eig.eigenvalues[k]).exp();
        let ve1 = v[(0, k)];
        for j in 0..m {
            y[j] += Complex64::new(v[(j, k)] * ve1, 0.0) * phase;
        }
    }
    y
}

/// Dense eigendecomposition of a hermitian operator, reusable across
/// evolution times.
pub struct DensePropagator {
    eigenvalues: Vec<f64>,
    eigenvectors: DMatrix<Complex<f64>>,
    pub dim: usize,
    pub label: String,
}

pub const DEFAULT_DENSE_CAP: usize = 2000;

impl DensePropagator {
    pub fn new(h: &SparseOperator, cap: usize) -> Result<Self> {
        if !h.hermitian {
            return Err(Error::HermitianRequired(h.label.clone()));
        }
        if h.dim > cap {
            return Err(Error::DenseCapExceeded { dim: h.dim, cap });
        }
        let eig = h.to_dense().symmetric_eigen();
        Ok(DensePropagator {
            eigenvalues: eig.eigenvalues.iter().copied().collect(),
            eigenvectors: eig.eigenvectors,
            dim: h.dim,
            label: h.label.clone(),
        })
    }

    pub fn apply(&self, psi: &SimState, t: f64) -> Result<SimState> {
        if psi.dim() != self.dim {
            return Err(Error::DimMismatch(psi.dim(), self.dim));
        }
        let x = DVector::from_iterator(self.dim, psi.amplitudes.iter().copied());
        let mut coeffs = self.eigenvectors.adjoint() * x;
        for (k, c) in coeffs.iter_mut().enumerate() {
            *c *= Complex64::new(0.0, -t * self.eigenvalues[k]).exp();
        }
        let y = &self.eigenvectors * coeffs;
        Ok(SimState::new(
            y.iter().copied().collect(),
            format!("exp(-i {} t)[{}]", self.label, psi.provenance),
            psi.basis_hash,
        ))
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }
}

/// One-shot dense oracle.
pub fn dense_expmv_oracle(
    h: &SparseOperator,
    psi: &SimState,
    t: f64,
    cap: usize,
) -> Result<SimState> {
    DensePropagator::new(h, cap)?.apply(psi, t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn random_state(dim: usize, seed: u64) -> SimState {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut v: Vec<Complex64> = (0..dim)
            .map(|_| Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
            .collect();
        let n = v.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        for a in &mut v {
            *a /= n;
        }
        SimState::new(v, "random", 1)
    }

    fn random_hermitian(dim: usize, seed: u64, density: f64) -> SparseOperator {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut t = Vec::new();
        for r in 0..dim {
            t.push((r, r, Complex64::new(2.0 * rng.gen::<f64>() - 1.0, 0.0)));
            for c in r + 1..dim {
                if rng.gen::<f64>() < density {
                    let v = Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5);
                    t.push((r, c, v));
                    t.push((c, r, v.conj()));
                }
            }
        }
        SparseOperator::from_triplets(dim, "H_rand", true, t).unwrap()
    }

    #[test]
    fn zero_time_is_identity() {
        let h = random_hermitian(40, 7, 0.1);
        let psi = random_state(40, 8);
        let out = krylov_expmv(&h, &psi, 0.0, 1e-12, &KrylovOptions::default()).unwrap();
        assert_eq!(out.amplitudes, psi.amplitudes);
    }

    #[test]
    fn diagonal_hamiltonian_exact_phases() {
        let diag: Vec<f64> = (0..30).map(|i| (i as f64) * 0.37 - 3.0).collect();
        let h = SparseOperator::diagonal("D", &diag);
        let psi = random_state(30, 3);
        let t = 1.3;
        let out = krylov_expmv(&h, &psi, t, 1e-12, &KrylovOptions::default()).unwrap();
        for i in 0..30 {
            let expected = psi.amplitudes[i] * Complex64::new(0.0, -t * diag[i]).exp();
            assert!((out.amplitudes[i] - expected).norm() < 1e-13);
        }
    }

    #[test]
    fn krylov_matches_dense_oracle() {
        for seed in 0..5u64 {
            let dim = 120 + 17 * seed as usize;
            let h = random_hermitian(dim, seed, 0.05);
            let psi = random_state(dim, 100 + seed);
            let t = 0.8;
            let k = krylov_expmv(&h, &psi, t, 1e-12, &KrylovOptions::default()).unwrap();
            let d = dense_expmv_oracle(&h, &psi, t, 2000).unwrap();
            let diff = deviation(&k, &d).unwrap().sqrt();
            assert!(diff < 1e-10, "seed {seed}: diff {diff}");
            assert!((k.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn dense_oracle_2x2_analytic() {
        // H = [[0, w], [w, 0]]: e^{-itH} = cos(wt) I - i sin(wt) X
        let w = 0.9;
        let h = SparseOperator::from_triplets(
            2,
            "X",
            true,
            vec![(0, 1, Complex64::new(w, 0.0)), (1, 0, Complex64::new(w, 0.0))],
        )
        .unwrap();
        let psi = SimState::new(vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)], "e0", 1);
        let t = 0.6;
        let out = dense_expmv_oracle(&h, &psi, t, 10).unwrap();
        assert!((out.amplitudes[0] - Complex64::new((w * t).cos(), 0.0)).norm() < 1e-14);
        assert!((out.amplitudes[1] - Complex64::new(0.0, -(w * t).sin())).norm() < 1e-14);
    }

    #[test]
    fn commuting_hamiltonians_compose() {
        // two diagonal (hence commuting) parts
        let d1: Vec<f64> = (0..25).map(|i| 0.1 * i as f64).collect();
        let d2: Vec<f64> = (0..25).map(|i| ((i * i) % 7) as f64 * 0.3).collect();
        let h1 = SparseOperator::diagonal("D1", &d1);
        let h2 = SparseOperator::diagonal("D2", &d2);
        let sum: Vec<f64> = d1.iter().zip(&d2).map(|(a, b)| a + b).collect();
        let h12 = SparseOperator::diagonal("D12", &sum);
        let psi = random_state(25, 5);
        let t = 0.9;
        let a = dense_expmv_oracle(&h1, &dense_expmv_oracle(&h2, &psi, t, 100).unwrap(), t, 100)
            .unwrap();
        let b = dense_expmv_oracle(&h12, &psi, t, 100).unwrap();
        assert!(deviation(&a, &b).unwrap() < 1e-24);
    }

    #[test]
    fn reversibility_and_energy_conservation() {
        let h = random_hermitian(200, 42, 0.03);
        let psi = random_state(200, 43);
        let t = 1.1;
        let opts = KrylovOptions::default();
        let fwd = krylov_expmv(&h, &psi, t, 1e-12, &opts).unwrap();
        let back = krylov_expmv(&h, &fwd, -t, 1e-12, &opts).unwrap();
        assert!(deviation(&back, &psi).unwrap().sqrt() < 2e-12);
        let e0 = psi.expectation(&h);
        let e1 = fwd.expectation(&h);
        assert!((e1 - e0).abs() < 1e-10 * (1.0 + e0.abs()));
    }

    #[test]
    fn deviation_properties() {
        let a = random_state(10, 1);
        let b = random_state(10, 2);
        assert_eq!(deviation(&a, &a).unwrap(), 0.0);
        // orthonormal pair -> 2
        let mut e0 = vec![Complex64::new(0.0, 0.0); 4];
        e0[0] = Complex64::new(1.0, 0.0);
        let mut e1 = vec![Complex64::new(0.0, 0.0); 4];
        e1[1] = Complex64::new(1.0, 0.0);
        let s0 = SimState::new(e0, "e0", 9);
        let s1 = SimState::new(e1, "e1", 9);
        assert_eq!(deviation(&s0, &s1).unwrap(), 2.0);
        // triangle inequality on norms for random triples
        let c = random_state(10, 3);
        let dab = deviation(&a, &b).unwrap().sqrt();
        let dbc = deviation(&b, &c).unwrap().sqrt();
        let dac = deviation(&a, &c).unwrap().sqrt();
        assert!(dac <= dab + dbc + 1e-15);
        // basis mismatch rejected
        let other = SimState::new(vec![Complex64::new(1.0, 0.0); 10], "x", 777);
        assert!(matches!(deviation(&a, &other), Err(Error::BasisMismatch)));
    }

    #[test]
    fn non_hermitian_rejected() {
        let bad = SparseOperator::from_triplets(
            2,
            "bad",
            false,
            vec![(0, 1, Complex64::new(1.0, 0.0))],
        )
        .unwrap();
        let psi = random_state(2, 11);
        assert!(matches!(
            krylov_expmv(&bad, &psi, 1.0, 1e-10, &KrylovOptions::default()),
            Err(Error::HermitianRequired(_))
        ));
    }
}

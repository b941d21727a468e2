//! Dressing-identity verification: on a dense-oracle-sized toy, the
//! conjugated Hamiltonian `U (H_Lambda + E_Lambda) U*` is compared against
//! the directly assembled dressed Hamiltonian. On the truncated Fock space
//! the identity holds only up to truncation effects, so the residual is
//! compressed onto the occupation sectors at least two levels below the
//! truncation and must decrease as `n_max` grows.

use crate::error::{Error, Result};
use crate::ham::{
    assemble_gross_unitary, assemble_hk, assemble_hn, e_cut_discrete_total, make_vhat_v,
    PhysParams, ScalarSource,
};
use crate::ops::kinetic;
use crate::space::{build_box_modes, enumerate_fock, ParticleLattice, TensorBasis};
use crate::sparse::SparseOperator;
use num_complex::Complex64;
use std::sync::Arc;

use super::common::{SweepRecord, ToySpec};

#[derive(Debug, Clone)]
pub struct GrossReport {
    pub params: PhysParams,
    /// `(n_max, compressed residual norm)` series.
    pub residuals: Vec<(usize, f64)>,
    pub strictly_decreasing: bool,
    /// Residual of the same construction at `K = Lambda` (must vanish).
    pub k_eq_lambda_residual: f64,
    /// Largest entry mismatch of the vacuum-sector scalar audit at the
    /// finest `n_max`.
    pub scalar_audit_err: f64,
}

impl GrossReport {
    pub fn passed(&self) -> bool {
        self.strictly_decreasing && self.k_eq_lambda_residual == 0.0
    }

    pub fn to_records(&self) -> Result<Vec<SweepRecord>> {
        let mut out = Vec::new();
        for &(n_max, r) in &self.residuals {
            out.push(SweepRecord::new(
                "gross_residual",
                &self.params,
                r,
                n_max as f64,
            )?);
        }
        out.push(SweepRecord::new(
            "gross_residual_k_eq_lambda",
            &self.params,
            self.k_eq_lambda_residual,
            0.0,
        )?);
        out.push(SweepRecord::new(
            "gross_scalar_audit",
            &self.params,
            self.scalar_audit_err,
            0.0,
        )?);
        Ok(out)
    }
}

fn conjugation_residual(
    params: &PhysParams,
    toy: &ToySpec,
    n_max: usize,
    compress_at: usize,
) -> Result<(f64, f64)> {
    let lat = Arc::new(ParticleLattice::new(
        toy.dim,
        toy.box_length,
        toy.points_per_dim,
    )?);
    let grid = build_box_modes(&lat, toy.grid_lo, toy.grid_hi)?;
    let fock = Arc::new(enumerate_fock(grid.len(), n_max)?);
    let basis = TensorBasis::new(lat, fock)?;

    let hn = assemble_hn(params, &grid, &basis)?;
    let e_lambda = e_cut_discrete_total(params.mu, params.lambda_uv, params.k_cut, &grid, true);
    let u = assemble_gross_unitary(params, &grid, &basis, 6000, 1e-11)?;
    let hk = assemble_hk(params, &grid, &basis, ScalarSource::Discrete, true)?;

    let ident = SparseOperator::identity(basis.total_dim);
    let h_plus_e = SparseOperator::linear_combination(
        "H+E",
        &[
            (Complex64::new(1.0, 0.0), &hn),
            (Complex64::new(e_lambda, 0.0), &ident),
        ],
    )?;
    let conj = u.matmul(&h_plus_e, "U(H+E)")?.matmul(&u.adjoint(), "U(H+E)U*")?;
    let diff = conj.sub(&hk, "U(H+E)U* - H_K")?;

    // compress onto total occupation <= compress_at
    let keep: Vec<usize> = (0..basis.total_dim)
        .filter(|&i| {
            let (_, _, f) = basis.unflatten(i);
            basis.fock.total_occupation(f) <= compress_at
        })
        .collect();
    let sub = diff.submatrix_dense(&keep);
    // hermitian difference: spectral norm via eigenvalues
    let herm = sub
        .iter()
        .zip(sub.adjoint().iter())
        .all(|(a, b)| (a - b.conj()).norm() < 1e-12);
    let norm = if herm {
        sub.clone()
            .symmetric_eigen()
            .eigenvalues
            .iter()
            .map(|l| l.abs())
            .fold(0.0, f64::max)
    } else {
        let m = sub.adjoint() * &sub;
        m.symmetric_eigen()
            .eigenvalues
            .iter()
            .map(|l| l.max(0.0))
            .fold(0.0, f64::max)
            .sqrt()
    };

    // scalar audit on the vacuum sector: the vacuum block of the conjugated
    // operator must reproduce kinetic + E_K + V_{K,Lambda} kernel
    let vac: Vec<usize> = (0..basis.total_dim)
        .filter(|&i| {
            let (_, _, f) = basis.unflatten(i);
            basis.fock.total_occupation(f) == 0
        })
        .collect();
    let vac_block = conj.submatrix_dense(&vac);
    let e_k = e_cut_discrete_total(params.mu, params.k_cut, params.k_cut, &grid, true);
    let kin = kinetic(&basis);
    let w = basis.lattice.delta.powi(basis.lattice.dim as i32);
    let vhat = make_vhat_v(params.mu, params.k_cut, params.lambda_uv, w);
    let v_op = crate::ops::pair_potential(&vhat, &basis)?;
    let mut audit: f64 = 0.0;
    for (a, &ia) in vac.iter().enumerate() {
        for (b, &ib) in vac.iter().enumerate() {
            let mut expected = v_op.get(ia, ib);
            if ia == ib {
                expected += kin.get(ia, ia) + Complex64::new(e_k, 0.0);
            }
            audit = audit.max((vac_block[(a, b)] - expected).norm());
        }
    }
    Ok((norm, audit))
}

/// Run the identity check for each `n_max`, compressing to occupation
/// `n_max - 2`, plus the exact `K = Lambda` case.
pub fn verify_gross_identity(
    params: &PhysParams,
    toy: &ToySpec,
    n_max_list: &[usize],
) -> Result<GrossReport> {
    if n_max_list.iter().any(|&n| n < 2) {
        return Err(Error::InvalidArgument(
            "gross identity needs n_max >= 2".into(),
        ));
    }
    let mut residuals = Vec::new();
    let mut audit_err = 0.0;
    for &n_max in n_max_list {
        let (r, audit) = conjugation_residual(params, toy, n_max, n_max - 2)?;
        residuals.push((n_max, r));
        audit_err = audit; // keep the finest
    }
    let strictly_decreasing = residuals.windows(2).all(|w| w[1].1 < w[0].1);

    // K = Lambda: empty dressing window, U = 1 exactly, residual must be 0
    let mut p_eq = *params;
    p_eq.k_cut = params.lambda_uv;
    if p_eq.eps > p_eq.k_cut {
        p_eq.eps = 0.0;
    }
    let n0 = n_max_list[0];
    let (k_eq_lambda_residual, _) = conjugation_residual(&p_eq, toy, n0, n0)?;

    Ok(GrossReport {
        params: *params,
        residuals,
        strictly_decreasing,
        k_eq_lambda_residual,
        scalar_audit_err: audit_err,
    })
}

/// The standard toy: d = 1, lattice momenta {-2, 0, 2}, two field modes
/// at `|k| = 2`, `mu = 4`, `K = 1`, `Lambda = 2`.
pub fn standard_toy() -> (PhysParams, ToySpec) {
    let params = PhysParams::new(4.0, 2.0, 1.0, 0.0, 0.0).expect("valid parameters");
    let toy = ToySpec::d1(2.0, 3, 2.0, 2);
    (params, toy)
}

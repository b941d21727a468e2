//! Removal of subleading terms: the dynamics of the dressed Hamiltonian
//! and of the simplified Hamiltonian stay close on vacuum-sector data,
//! with squared deviation controlled by `|t| (K/sqrt(mu) + sqrt(eps K))`.

use crate::error::Result;
use crate::ham::{assemble_heps_k, assemble_hk, PhysParams, ScalarSource};
use crate::propagate::{deviation, krylov_expmv, KrylovOptions};
use crate::space::{ModeGrid, TensorBasis};

use super::common::{gaussian_state, sobolev_norm, SweepRecord, ToySpec};

#[derive(Debug, Clone)]
pub struct RemovalRecord {
    pub params: PhysParams,
    pub t: f64,
    pub deviation_sq: f64,
    /// `|t| (K/sqrt(mu) + sqrt(eps K)) ||phi||_{H1}^2`
    pub bound: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone)]
pub struct RemovalReport {
    pub records: Vec<RemovalRecord>,
    pub nondecreasing_in_t: bool,
}

impl RemovalReport {
    pub fn to_records(&self) -> Result<Vec<SweepRecord>> {
        self.records
            .iter()
            .map(|r| {
                let mut p = r.params;
                p.t = r.t;
                SweepRecord::new("removal_deviation_sq", &p, r.deviation_sq, r.ratio)
            })
            .collect()
    }
}

/// Evolve under both Hamiltonians and record squared deviations on a
/// `t`-grid.
pub fn verify_removal(
    params: &PhysParams,
    grid: &ModeGrid,
    basis: &TensorBasis,
    t_grid: &[f64],
    sigma: f64,
) -> Result<RemovalReport> {
    let hk = assemble_hk(params, grid, basis, ScalarSource::Discrete, true)?;
    let heps = assemble_heps_k(params, grid, basis, ScalarSource::Discrete, true)?;
    let phi = gaussian_state(basis, sigma);
    let h1_sq = sobolev_norm(basis, &phi, 1).powi(2);
    let opts = KrylovOptions::default();
    let mut records = Vec::new();
    for &t in t_grid {
        let a = krylov_expmv(&hk, &phi, t, 1e-11, &opts)?;
        let b = krylov_expmv(&heps, &phi, t, 1e-11, &opts)?;
        let dev = deviation(&a, &b)?;
        let bound = t.abs()
            * (params.k_cut / params.mu.sqrt() + (params.eps * params.k_cut).sqrt())
            * h1_sq;
        let ratio = if bound > 0.0 { dev / bound } else { 0.0 };
        records.push(RemovalRecord {
            params: *params,
            t,
            deviation_sq: dev,
            bound,
            ratio,
        });
    }
    let nondecreasing_in_t = records
        .windows(2)
        .all(|w| w[1].deviation_sq >= w[0].deviation_sq - 1e-15);
    Ok(RemovalReport {
        records,
        nondecreasing_in_t,
    })
}

/// Per-`mu` toy with dressing modes: spacing `K/2`, grid `(0, 2K]`, so the
/// coupling window holds `{K/2, K}` and the dressing window `{3K/2, 2K}`.
pub fn sweep_toy(mu: f64, t: f64) -> Result<(PhysParams, ModeGrid, TensorBasis)> {
    let k = mu.powf(1.0 / 3.0);
    let params = PhysParams::new(mu, 2.0 * k, k, mu.recip(), t)?;
    let (grid, basis) = ToySpec::d1(k / 2.0, 9, 2.0 * k, 2).build()?;
    Ok((params, grid, basis))
}

/// Sweep over `mu` with `K = mu^{1/3}`, `eps = 1/mu`; the deviation/bound
/// ratio must stay bounded.
pub fn removal_sweep(mus: &[f64], t_grid: &[f64], sigma: f64) -> Result<Vec<RemovalReport>> {
    mus.iter()
        .map(|&mu| {
            let (params, grid, basis) = sweep_toy(mu, *t_grid.last().unwrap_or(&0.1))?;
            verify_removal(&params, &grid, &basis, t_grid, sigma)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_time_zero_deviation_and_growth() {
        let (params, grid, basis) = sweep_toy(100.0, 0.1).unwrap();
        let report =
            verify_removal(&params, &grid, &basis, &[0.0, 0.025, 0.05, 0.1], 1.0).unwrap();
        assert_eq!(report.records[0].deviation_sq, 0.0);
        assert!(
            report.nondecreasing_in_t,
            "deviations {:?}",
            report
                .records
                .iter()
                .map(|r| r.deviation_sq)
                .collect::<Vec<_>>()
        );
    }

    #[test]
    fn ratio_bounded_over_mu_decade() {
        let reports = removal_sweep(&[1e2, 1e3, 1e4], &[0.1], 1.0).unwrap();
        for rep in &reports {
            for r in &rep.records {
                assert!(r.ratio < 1.0, "mu={}: ratio {}", r.params.mu, r.ratio);
            }
        }
    }
}

//! Energy sandwich and trajectory regularity: extremal eigenvalues of
//! `H_K - (1/2)(P^2 + mu T)` and `H_K - (3/2)(P^2 + mu T)` give the
//! sandwich constants `C_lower`, `C_upper` (in units of `K`), and evolved
//! states obey the momentum / field-energy growth bounds with stable
//! fitted constants.

use crate::error::Result;
use crate::ham::{assemble_hk, PhysParams, ScalarSource};
use crate::ops::{field_energy, kinetic, particle_diagonal};
use crate::propagate::{krylov_expmv, KrylovOptions};
use crate::space::{ModeGrid, TensorBasis};
use crate::sparse::SparseOperator;
use num_complex::Complex64;

use super::common::{gaussian_state, sobolev_norm, SweepRecord, ToySpec};

#[derive(Debug, Clone)]
pub struct SandwichRecord {
    pub params: PhysParams,
    pub c_lower: f64,
    pub c_upper: f64,
}

#[derive(Debug, Clone)]
pub struct TrajectoryRecord {
    pub params: PhysParams,
    /// max over the t-grid of `||p_i Psi_t|| / (K^{1/2} ||phi||_{H1})`
    pub c_momentum: f64,
    /// max over the t-grid of `||T^{1/2} Psi_t|| mu^{1/2} / (K^{1/2} ||phi||_{H1})`
    pub c_field: f64,
}

#[derive(Debug, Clone)]
pub struct EnergyReport {
    pub sandwich: Vec<SandwichRecord>,
    pub trajectory: Vec<TrajectoryRecord>,
}

impl EnergyReport {
    pub fn to_records(&self) -> Result<Vec<SweepRecord>> {
        let mut out = Vec::new();
        for s in &self.sandwich {
            out.push(SweepRecord::new("sandwich_c_lower", &s.params, s.c_lower, 0.0)?);
            out.push(SweepRecord::new("sandwich_c_upper", &s.params, s.c_upper, 0.0)?);
        }
        for t in &self.trajectory {
            out.push(SweepRecord::new("trajectory_c_momentum", &t.params, t.c_momentum, 0.0)?);
            out.push(SweepRecord::new("trajectory_c_field", &t.params, t.c_field, 0.0)?);
        }
        Ok(out)
    }

    pub fn max_sandwich_constant(&self) -> f64 {
        self.sandwich
            .iter()
            .flat_map(|s| [s.c_lower, s.c_upper])
            .fold(0.0, f64::max)
    }

    pub fn max_trajectory_constant(&self) -> f64 {
        self.trajectory
            .iter()
            .flat_map(|t| [t.c_momentum, t.c_field])
            .fold(0.0, f64::max)
    }
}

/// Toy used per `(mu, K)` point: spacing `2K/3`, grid `(0, 4K/3]`, so the
/// coupling window holds `{2K/3}` and the dressing window `{4K/3}`.
pub fn sandwich_toy(mu: f64, k_cut: f64, n_max: usize) -> Result<(PhysParams, ModeGrid, TensorBasis)> {
    let params = PhysParams::new(mu, 4.0 * k_cut / 3.0, k_cut, 0.0, 0.0)?;
    let (grid, basis) = ToySpec::d1(2.0 * k_cut / 3.0, 5, 4.0 * k_cut / 3.0, n_max).build()?;
    Ok((params, grid, basis))
}

pub fn sandwich_at(params: &PhysParams, grid: &ModeGrid, basis: &TensorBasis) -> Result<SandwichRecord> {
    let hk = assemble_hk(params, grid, basis, ScalarSource::Discrete, true)?;
    let kin = kinetic(basis);
    let t_op = field_energy(0.0, f64::INFINITY, grid, basis);
    let free = SparseOperator::linear_combination(
        "P^2+muT",
        &[
            (Complex64::new(1.0, 0.0), &kin),
            (Complex64::new(params.mu, 0.0), &t_op),
        ],
    )?;
    let lower_gap = SparseOperator::linear_combination(
        "H_K - free/2",
        &[
            (Complex64::new(1.0, 0.0), &hk),
            (Complex64::new(-0.5, 0.0), &free),
        ],
    )?;
    let upper_gap = SparseOperator::linear_combination(
        "H_K - 3 free/2",
        &[
            (Complex64::new(1.0, 0.0), &hk),
            (Complex64::new(-1.5, 0.0), &free),
        ],
    )?;
    let (lo, _) = lower_gap.extremal_eigs_dense()?;
    let (_, hi) = upper_gap.extremal_eigs_dense()?;
    Ok(SandwichRecord {
        params: *params,
        c_lower: (-lo).max(0.0) / params.k_cut,
        c_upper: hi.max(0.0) / params.k_cut,
    })
}

pub fn trajectory_at(
    params: &PhysParams,
    grid: &ModeGrid,
    basis: &TensorBasis,
    t_grid: &[f64],
    sigma: f64,
) -> Result<TrajectoryRecord> {
    let hk = assemble_hk(params, grid, basis, ScalarSource::Discrete, true)?;
    let phi = gaussian_state(basis, sigma);
    let h1 = sobolev_norm(basis, &phi, 1);
    let t_op = field_energy(0.0, f64::INFINITY, grid, basis);
    let mut c_momentum: f64 = 0.0;
    let mut c_field: f64 = 0.0;
    let opts = KrylovOptions::default();
    for particle in 0..2 {
        let psq = particle_diagonal(basis, "p_i^2", |p1, p2| {
            basis.p_squared(if particle == 0 { p1 } else { p2 })
        });
        for &t in t_grid {
            let psi_t = krylov_expmv(&hk, &phi, t, 1e-11, &opts)?;
            let p_norm = psi_t.expectation(&psq).max(0.0).sqrt();
            let t_norm = psi_t.expectation(&t_op).max(0.0).sqrt();
            c_momentum = c_momentum.max(p_norm / (params.k_cut.sqrt() * h1));
            c_field =
                c_field.max(t_norm * params.mu.sqrt() / (params.k_cut.sqrt() * h1));
        }
    }
    Ok(TrajectoryRecord {
        params: *params,
        c_momentum,
        c_field,
    })
}

/// Full report over a `(mu, K)` grid.
pub fn verify_energy_sandwich(
    mu_list: &[f64],
    k_list: &[f64],
    n_max: usize,
    t_grid: &[f64],
    sigma: f64,
) -> Result<EnergyReport> {
    let mut sandwich = Vec::new();
    let mut trajectory = Vec::new();
    for &mu in mu_list {
        for &k in k_list {
            if k > mu {
                continue; // regime of interest is mu >= K
            }
            let (params, grid, basis) = sandwich_toy(mu, k, n_max)?;
            sandwich.push(sandwich_at(&params, &grid, &basis)?);
            trajectory.push(trajectory_at(&params, &grid, &basis, t_grid, sigma)?);
        }
    }
    Ok(EnergyReport {
        sandwich,
        trajectory,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ham::e_cut_discrete_total;

    #[test]
    fn coupling_zeroed_constants_reduce_to_scalar_shift() {
        // with the coupling removed, H_K - free/2 = free/2 + E_K >= 0 and
        // H_K - 3 free/2 = -free/2 + E_K <= E_K: both constants come out
        // as E_K / K
        let (params, grid, basis) = sandwich_toy(50.0, 2.0, 2).unwrap();
        let kin = kinetic(&basis);
        let t_op = field_energy(0.0, f64::INFINITY, &grid, &basis);
        let e_k = e_cut_discrete_total(params.mu, params.k_cut, params.k_cut, &grid, true);
        let ident = SparseOperator::identity(basis.total_dim);
        let decoupled = SparseOperator::linear_combination(
            "free+E",
            &[
                (Complex64::new(1.0, 0.0), &kin),
                (Complex64::new(params.mu, 0.0), &t_op),
                (Complex64::new(e_k, 0.0), &ident),
            ],
        )
        .unwrap();
        let free = SparseOperator::linear_combination(
            "free",
            &[
                (Complex64::new(1.0, 0.0), &kin),
                (Complex64::new(params.mu, 0.0), &t_op),
            ],
        )
        .unwrap();
        let gap = decoupled
            .sub(&free.scale(Complex64::new(1.5, 0.0), "1.5free"), "g")
            .unwrap();
        let (_, hi) = gap.assert_hermitian().unwrap().extremal_eigs_dense().unwrap();
        assert!((hi - e_k).abs() < 1e-10, "hi = {hi}, E_K = {e_k}");
    }

    #[test]
    fn sandwich_constants_bounded_and_k_stable() {
        let report = verify_energy_sandwich(
            &[20.0, 100.0],
            &[2.0, 4.0],
            2,
            &[0.1],
            1.0,
        )
        .unwrap();
        assert!(report.max_sandwich_constant() < 25.0);
        assert!(report.max_trajectory_constant() < 25.0);
        // K-doubling at fixed mu: constants stable within a factor 2
        let at = |mu: f64, k: f64| {
            report
                .sandwich
                .iter()
                .find(|s| s.params.mu == mu && s.params.k_cut == k)
                .map(|s| s.c_lower.max(s.c_upper).max(1e-6))
                .unwrap()
        };
        for &mu in &[20.0, 100.0] {
            let a = at(mu, 2.0);
            let b = at(mu, 4.0);
            let ratio = if a > b { a / b } else { b / a };
            assert!(ratio < 2.0, "mu={mu}: C(2K)/C(K) = {ratio}");
        }
    }
}

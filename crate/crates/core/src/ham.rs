//! Assembly of the model Hamiltonians and transformations: the cutoff
//! Hamiltonian, the dressing (Gross) unitary, the dressed Hamiltonian, the
//! simplified Hamiltonian with subleading terms removed, the quadratic
//! `A = a(kB).a(kB)` operators, the effective two-particle Hamiltonian and
//! the vacuum-sector self-energy kernel.
//!
//! Window conventions on a discrete grid: coupling windows are upper
//! inclusive (`|k| <= K`), dressing windows are lower strict (`K < |k|`),
//! so the two windows partition the grid exactly and `K = Lambda` gives an
//! empty dressing window and the identity transformation.
//!
//! Scalar sources: `Continuum` takes `E_K`, `V_K` and `W` from the
//! integrals module (quadrature / closed forms); `Discrete` evaluates the
//! same expressions as sums over the active mode grid, which makes the
//! dressing identity exact on the discrete space and keeps convergence
//! experiments free of grid error.

use crate::error::{Error, Result};
use crate::integrals;
use crate::ops::{
    dressed_annihilate_component, dressed_smeared, field_energy, kinetic, pair_potential,
    particle_diagonal, windowed_resolvent, FormFactor, Particle, SmearedKind,
};
use crate::propagate::{krylov_expmv, KrylovOptions, SimState};
use crate::space::{ModeGrid, TensorBasis};
use crate::sparse::SparseOperator;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Physical parameters of a run.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct PhysParams {
    /// Scaling parameter `mu > 0`.
    pub mu: f64,
    /// Ultraviolet cutoff `Lambda`.
    pub lambda_uv: f64,
    /// Dressing cutoff `K` (upper cutoff for the coupling, lower cutoff for
    /// the dressing).
    pub k_cut: f64,
    /// Infrared cutoff `eps`.
    pub eps: f64,
    /// Evolution time.
    pub t: f64,
}

impl PhysParams {
    pub fn new(mu: f64, lambda_uv: f64, k_cut: f64, eps: f64, t: f64) -> Result<Self> {
        let p = PhysParams {
            mu,
            lambda_uv,
            k_cut,
            eps,
            t,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mu > 0.0) {
            return Err(Error::InvalidParams(format!("mu must be > 0 (got {})", self.mu)));
        }
        if !(self.eps >= 0.0) {
            return Err(Error::InvalidParams(format!(
                "eps must be >= 0 (got {})",
                self.eps
            )));
        }
        if self.eps > self.k_cut {
            return Err(Error::InvalidParams(format!(
                "need eps <= K (got eps = {}, K = {})",
                self.eps, self.k_cut
            )));
        }
        if self.k_cut > self.lambda_uv {
            return Err(Error::InvalidParams(format!(
                "need K <= Lambda (got K = {}, Lambda = {})",
                self.k_cut, self.lambda_uv
            )));
        }
        Ok(())
    }

    /// Parameter choice of the weak-coupling sweeps:
    /// `K = mu^{1/3}`, `eps = mu^{-1}`.
    pub fn weak_coupling_sweep(mu: f64, lambda_uv: f64, t: f64) -> Result<Self> {
        PhysParams::new(mu, lambda_uv, mu.powf(1.0 / 3.0), mu.recip(), t)
    }

    fn metadata(&self, extra: &[(&str, &str)]) -> String {
        let mut v = serde_json::json!({
            "mu": self.mu,
            "lambda_uv": self.lambda_uv,
            "K": self.k_cut,
            "eps": self.eps,
            "t": self.t,
        });
        for (k, val) in extra {
            v[k] = serde_json::Value::String(val.to_string());
        }
        v.to_string()
    }
}

/// Where scalar quantities (`E_K`, `V_K`, `W`) come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ScalarSource {
    /// Quadrature / closed-form values of the continuum integrals.
    Continuum,
    /// The same expressions as sums over the active mode grid.
    Discrete,
}

impl ScalarSource {
    pub fn as_str(&self) -> &'static str {
        match self {
            ScalarSource::Continuum => "continuum",
            ScalarSource::Discrete => "discrete",
        }
    }
}

// ---------------------------------------------------------------------------
// discrete scalar sums
// ---------------------------------------------------------------------------

/// Discrete self-energy sum `sum_{|k_j| <= cut} w_j 2 mu / (|k_j| (k_j^2 + mu |k_j|))`.
pub fn e_cut_discrete(mu: f64, cut: f64, grid: &ModeGrid) -> f64 {
    grid.modes
        .iter()
        .filter(|m| m.omega <= cut)
        .map(|m| m.weight * 2.0 * mu / (m.omega * (m.omega * m.omega + mu * m.omega)))
        .sum()
}

/// Scalar part of `F(k) = k / (|k|^{1/2} (mu |k| + k^2))` at radius `r`.
fn f_scalar(mu: f64, r: f64) -> f64 {
    1.0 / (r.sqrt() * (mu * r + r * r))
}

/// Discrete vacuum-sector kernel of `mu A R A*` for a single particle
/// index, evaluated at zero particle momentum and without the `E_K` shift:
/// `2 mu sum_{j,l > K} w_j w_l (F_j . F_l)^2 / (|k_j| + |k_l| + (k_j+k_l)^2/mu)`.
pub fn selfenergy_kernel_discrete(mu: f64, k_cut: f64, grid: &ModeGrid) -> f64 {
    let idx = grid.window_indices(k_cut, true, f64::INFINITY);
    let mut total = 0.0;
    for &j in &idx {
        let mj = &grid.modes[j];
        let fj = f_scalar(mu, mj.omega);
        for &l in &idx {
            let ml = &grid.modes[l];
            let fl = f_scalar(mu, ml.omega);
            let dot = mj.k[0] * ml.k[0] + mj.k[1] * ml.k[1] + mj.k[2] * ml.k[2];
            let ff = dot * fj * fl;
            let sum_sq = (mj.k[0] + ml.k[0]).powi(2)
                + (mj.k[1] + ml.k[1]).powi(2)
                + (mj.k[2] + ml.k[2]).powi(2);
            total += mj.weight * ml.weight * ff * ff
                / (mj.omega + ml.omega + sum_sq / mu);
        }
    }
    2.0 * mu * total
}

/// Total discrete vacuum-energy shift (both particle indices).
pub fn vacuum_shift_discrete(mu: f64, k_cut: f64, grid: &ModeGrid) -> f64 {
    2.0 * selfenergy_kernel_discrete(mu, k_cut, grid)
}

/// Discrete `E_cut` including the vacuum shift generated by the dressing
/// modes above `k_cut` (the shift plays the role the constant `e0` plays in
/// the continuum and is the same for every cutoff, so it cancels in
/// differences).
pub fn e_cut_discrete_total(
    mu: f64,
    cut: f64,
    k_cut: f64,
    grid: &ModeGrid,
    include_shift: bool,
) -> f64 {
    e_cut_discrete(mu, cut, grid)
        + if include_shift {
            vacuum_shift_discrete(mu, k_cut, grid)
        } else {
            0.0
        }
}

fn vec_norm(q: &[f64; 3]) -> f64 {
    (q[0] * q[0] + q[1] * q[1] + q[2] * q[2]).sqrt()
}

/// Momentum-space kernel of `V_{K,Lambda}(x1 - x2)` on the lattice:
/// `vhat(q) = -2 mu w_q (mu|q| + 2q^2) / (|q| (mu|q| + q^2)^2)` for
/// `K < |q| <= hi`, zero otherwise (and zero at `q = 0`).
pub fn make_vhat_v(mu: f64, k_cut: f64, hi: f64, weight: f64) -> impl Fn(&[f64; 3]) -> f64 {
    move |q: &[f64; 3]| {
        let r = vec_norm(q);
        if r <= k_cut || r > hi {
            return 0.0;
        }
        let d = mu * r + r * r;
        -2.0 * mu * weight * (mu * r + 2.0 * r * r) / (r * d * d)
    }
}

/// Momentum-space kernel of the discretized Coulomb pair potential:
/// `vhat(q) = 2 w_q / q^2` for `lo < |q| <= hi`, `vhat(0) = 0`.
pub fn make_vhat_w(lo: f64, hi: f64, weight: f64) -> impl Fn(&[f64; 3]) -> f64 {
    move |q: &[f64; 3]| {
        let r = vec_norm(q);
        if r <= lo || r > hi {
            return 0.0;
        }
        2.0 * weight / (r * r)
    }
}

/// `E_K` value for the requested source (`cut` is the self-energy cutoff,
/// `k_cut` the dressing cutoff that generates the vacuum shift).
pub fn e_value(
    mu: f64,
    cut: f64,
    k_cut: f64,
    grid: &ModeGrid,
    source: ScalarSource,
    include_shift: bool,
) -> f64 {
    match source {
        ScalarSource::Continuum => {
            integrals::self_energy_log_term(mu, cut).value
                + if include_shift {
                    integrals::e0_default().value
                } else {
                    0.0
                }
        }
        ScalarSource::Discrete => e_cut_discrete_total(mu, cut, k_cut, grid, include_shift),
    }
}

// ---------------------------------------------------------------------------
// Hamiltonians
// ---------------------------------------------------------------------------

fn check_grid(params: &PhysParams, grid: &ModeGrid, basis: &TensorBasis) -> Result<()> {
    params.validate()?;
    if !grid.box_aligned {
        return Err(Error::GridNotBoxAligned);
    }
    let max_k = grid.modes.iter().map(|m| m.omega).fold(0.0, f64::max);
    if max_k > params.lambda_uv * (1.0 + 1e-12) {
        return Err(Error::InvalidParams(format!(
            "grid reaches |k| = {max_k} beyond Lambda = {}",
            params.lambda_uv
        )));
    }
    if grid.dim != basis.lattice.dim {
        return Err(Error::DimMismatch(grid.dim, basis.lattice.dim));
    }
    Ok(())
}

/// Cutoff Hamiltonian `H_Lambda = P^2 + mu T + sqrt(mu) sum_i phi(G_{Lambda,i})`.
pub fn assemble_hn(params: &PhysParams, grid: &ModeGrid, basis: &TensorBasis) -> Result<SparseOperator> {
    assemble_hn_scaled(params, grid, basis, 1.0)
}

/// Same with the coupling multiplied by `coupling_scale` (0 decouples).
pub fn assemble_hn_scaled(
    params: &PhysParams,
    grid: &ModeGrid,
    basis: &TensorBasis,
    coupling_scale: f64,
) -> Result<SparseOperator> {
    check_grid(params, grid, basis)?;
    let kin = kinetic(basis);
    let t_op = field_energy(0.0, f64::INFINITY, grid, basis);
    let mut parts: Vec<(Complex64, SparseOperator)> = vec![
        (Complex64::new(1.0, 0.0), kin),
        (Complex64::new(params.mu, 0.0), t_op),
    ];
    if coupling_scale != 0.0 {
        for particle in [Particle::One, Particle::Two] {
            let g = FormFactor::g_window(grid, 0.0, false, params.lambda_uv, particle);
            let phi = dressed_smeared(&g, SmearedKind::Phi, grid, basis)?;
            parts.push((
                Complex64::new(coupling_scale * params.mu.sqrt(), 0.0),
                phi,
            ));
        }
    }
    let refs: Vec<(Complex64, &SparseOperator)> = parts.iter().map(|(c, op)| (*c, op)).collect();
    Ok(SparseOperator::linear_combination("H_Lambda", &refs)?
        .with_metadata(params.metadata(&[("operator", "H_Lambda")])))
}

/// Anti-hermitian generator of the dressing transformation:
/// `sqrt(mu) sum_i (a*(B_i) - a(B_i))` with `B` supported on `K < |k| <= Lambda`.
pub fn gross_generator(
    params: &PhysParams,
    grid: &ModeGrid,
    basis: &TensorBasis,
) -> Result<SparseOperator> {
    check_grid(params, grid, basis)?;
    let mut t: Vec<(usize, usize, Complex64)> = Vec::new();
    let root_mu = Complex64::new(params.mu.sqrt(), 0.0);
    for particle in [Particle::One, Particle::Two] {
        let b = FormFactor::b_window(grid, params.mu, params.k_cut, params.lambda_uv, particle);
        let ann = dressed_annihilate_component(&b, 0, grid, basis)?;
        for (r, cols, vals) in ann.rows() {
            for (&c, &v) in cols.iter().zip(vals) {
                t.push((c, r, root_mu * v.conj())); // a*
                t.push((r, c, -root_mu * v)); // -a
            }
        }
    }
    SparseOperator::from_triplets(basis.total_dim, "A_gross", false, t)
}

/// Dressing (Gross) unitary `U = exp(generator)` by dense eigendecomposition
/// of the hermitian `i * generator`; rejected above `dense_threshold`.
pub fn assemble_gross_unitary(
    params: &PhysParams,
    grid: &ModeGrid,
    basis: &TensorBasis,
    dense_threshold: usize,
    tol: f64,
) -> Result<SparseOperator> {
    let gen = gross_generator(params, grid, basis)?;
    if gen.nnz() == 0 {
        // empty dressing window (K = Lambda): the transformation is the
        // identity, exactly
        return Ok(SparseOperator::identity(basis.total_dim)
            .relabel("U_K")
            .with_metadata(params.metadata(&[("operator", "U_K")])));
    }
    if gen.dim > dense_threshold {
        return Err(Error::DenseCapExceeded {
            dim: gen.dim,
            cap: dense_threshold,
        });
    }
    // H = i A is hermitian; U = exp(A) = exp(-i H)
    let mut t: Vec<(usize, usize, Complex64)> = Vec::new();
    for (r, cols, vals) in gen.rows() {
        for (&c, &v) in cols.iter().zip(vals) {
            t.push((r, c, Complex64::new(0.0, 1.0) * v));
        }
    }
    let h = SparseOperator::from_triplets(gen.dim, "iA_gross", true, t)?;
    let eig = h.to_dense().symmetric_eigen();
    let dim = gen.dim;
    let mut phases = nalgebra::DMatrix::<Complex64>::zeros(dim, dim);
    for k in 0..dim {
        phases[(k, k)] = Complex64::new(0.0, -eig.eigenvalues[k]).exp();
    }
    let u = &eig.eigenvectors * phases * eig.eigenvectors.adjoint();
    // unitarity residual
    let resid = (&u * u.adjoint() - nalgebra::DMatrix::<Complex64>::identity(dim, dim))
        .iter()
        .map(|c| c.norm_sqr())
        .sum::<f64>()
        .sqrt();
    if resid > tol {
        return Err(Error::ExpTolerance {
            residual: resid,
            tol,
        });
    }
    Ok(SparseOperator::from_dense(&u, "U_K", false)?
        .with_metadata(params.metadata(&[("operator", "U_K")])))
}

/// Apply the dressing unitary (or its adjoint, `sign = -1`) to a state via
/// Krylov propagation; usable beyond the dense threshold.
pub fn apply_gross_unitary(
    params: &PhysParams,
    grid: &ModeGrid,
    basis: &TensorBasis,
    psi: &SimState,
    sign: f64,
    tol: f64,
) -> Result<SimState> {
    let gen = gross_generator(params, grid, basis)?;
    let mut t: Vec<(usize, usize, Complex64)> = Vec::new();
    for (r, cols, vals) in gen.rows() {
        for (&c, &v) in cols.iter().zip(vals) {
            t.push((r, c, Complex64::new(0.0, 1.0) * v));
        }
    }
    let h = SparseOperator::from_triplets(gen.dim, "iA_gross", true, t)?;
    // exp(sign A) = exp(-i sign H)
    krylov_expmv(&h, psi, sign, tol, &KrylovOptions::default())
}

struct DressedBlocks {
    /// `sum_i phi(G_i)` on the coupling window.
    phi_g: SparseOperator,
    /// `sum_i 2 (a*(kB_i).p_i + p_i.a(kB_i))`.
    cross: SparseOperator,
    /// `sum_i 2 a*(kB_i) a(kB_i)`.
    number_quad: SparseOperator,
    /// `sum_i (A_i + A_i*)` with `A_i = a(kB_i).a(kB_i)`.
    aa_plus_adj: SparseOperator,
}

fn dressed_blocks(
    params: &PhysParams,
    grid: &ModeGrid,
    basis: &TensorBasis,
    g_lo: f64,
    g_lo_strict: bool,
) -> Result<DressedBlocks> {
    let dim = basis.total_dim;
    let mut phi_parts: Vec<SparseOperator> = Vec::new();
    let mut cross_parts: Vec<SparseOperator> = Vec::new();
    let mut nq_parts: Vec<SparseOperator> = Vec::new();
    let mut aa_parts: Vec<SparseOperator> = Vec::new();
    for particle in [Particle::One, Particle::Two] {
        let g = FormFactor::g_window(grid, g_lo, g_lo_strict, params.k_cut, particle);
        phi_parts.push(dressed_smeared(&g, SmearedKind::Phi, grid, basis)?);

        let kb = FormFactor::kb_window(grid, params.mu, params.k_cut, params.lambda_uv, particle);
        let p_axis: Vec<SparseOperator> = (0..grid.dim)
            .map(|axis| {
                particle_diagonal(basis, format!("p{}[{}]", particle.index() + 1, axis), |p1, p2| {
                    let p = if particle == Particle::One { p1 } else { p2 };
                    basis.momentum(p)[axis]
                })
            })
            .collect();
        for axis in 0..grid.dim {
            let ann = dressed_annihilate_component(&kb, axis, grid, basis)?;
            let create = ann.adjoint();
            // cross: 2 (a*(kB^axis) p^axis + p^axis a(kB^axis)) -- the second
            // summand is the exact adjoint of the first
            let x = create.matmul(&p_axis[axis], "a*p")?;
            let xd = x.adjoint();
            cross_parts.push(x);
            cross_parts.push(xd);
            // number-type quadratic 2 a* a
            nq_parts.push(create.matmul(&ann, "a*a")?);
            // aa and its adjoint
            let aa = ann.matmul(&ann, "aa")?;
            let aad = aa.adjoint();
            aa_parts.push(aa);
            aa_parts.push(aad);
        }
    }
    let one = Complex64::new(1.0, 0.0);
    let two = Complex64::new(2.0, 0.0);
    let combine = |label: &str, parts: &[SparseOperator], coeff: Complex64| -> Result<SparseOperator> {
        if parts.is_empty() {
            return Ok(SparseOperator::zero(dim, label));
        }
        let refs: Vec<(Complex64, &SparseOperator)> = parts.iter().map(|p| (coeff, p)).collect();
        // each block is hermitian by construction (adjoint-paired triplets)
        SparseOperator::linear_combination(label, &refs)?.assert_hermitian()
    };
    Ok(DressedBlocks {
        phi_g: combine("phi(G)", &phi_parts, one)?,
        cross: combine("cross(kB,p)", &cross_parts, two)?,
        number_quad: combine("2a*(kB)a(kB)", &nq_parts, two)?,
        aa_plus_adj: combine("A+A*", &aa_parts, one)?,
    })
}

/// Dressed Hamiltonian
/// `H_K = P^2 + mu T + sqrt(mu) [phi(G_K) + cross] + mu [2a*a + aa + a*a*] + E_K + V_K`.
pub fn assemble_hk(
    params: &PhysParams,
    grid: &ModeGrid,
    basis: &TensorBasis,
    source: ScalarSource,
    include_shift: bool,
) -> Result<SparseOperator> {
    check_grid(params, grid, basis)?;
    let blocks = dressed_blocks(params, grid, basis, 0.0, false)?;
    let kin = kinetic(basis);
    let t_op = field_energy(0.0, f64::INFINITY, grid, basis);
    let e_k = e_value(params.mu, params.k_cut, params.k_cut, grid, source, include_shift);
    let ident = SparseOperator::identity(basis.total_dim);
    let v_hi = match source {
        ScalarSource::Continuum => f64::INFINITY,
        ScalarSource::Discrete => params.lambda_uv,
    };
    let w = basis.lattice.delta.powi(basis.lattice.dim as i32);
    let vhat = make_vhat_v(params.mu, params.k_cut, v_hi, w);
    let v_op = pair_potential(&vhat, basis)?;
    let rm = Complex64::new(params.mu.sqrt(), 0.0);
    let m = Complex64::new(params.mu, 0.0);
    let one = Complex64::new(1.0, 0.0);
    let op = SparseOperator::linear_combination(
        "H_K",
        &[
            (one, &kin),
            (m, &t_op),
            (rm, &blocks.phi_g),
            (rm, &blocks.cross),
            (m, &blocks.number_quad),
            (m, &blocks.aa_plus_adj),
            (Complex64::new(e_k, 0.0), &ident),
            (one, &v_op),
        ],
    )?;
    Ok(op.with_metadata(params.metadata(&[
        ("operator", "H_K"),
        ("source", source.as_str()),
        ("vacuum_shift", if include_shift { "included" } else { "excluded" }),
    ])))
}

/// Quadratic lowering operator `A_{K,i} = a(kB_{K,i}) . a(kB_{K,i})`.
pub fn assemble_a(
    params: &PhysParams,
    particle: Particle,
    grid: &ModeGrid,
    basis: &TensorBasis,
) -> Result<SparseOperator> {
    check_grid(params, grid, basis)?;
    let kb = FormFactor::kb_window(grid, params.mu, params.k_cut, params.lambda_uv, particle);
    let mut parts: Vec<SparseOperator> = Vec::new();
    for axis in 0..grid.dim {
        let ann = dressed_annihilate_component(&kb, axis, grid, basis)?;
        parts.push(ann.matmul(&ann, "aa")?);
    }
    let refs: Vec<(Complex64, &SparseOperator)> = parts
        .iter()
        .map(|p| (Complex64::new(1.0, 0.0), p))
        .collect();
    let label = format!("A_K,{}", particle.index() + 1);
    Ok(SparseOperator::linear_combination(label.clone(), &refs)?
        .with_metadata(params.metadata(&[("operator", label.as_str())])))
}

/// Simplified Hamiltonian
/// `H_{eps,K} = P^2 + mu T + E_K + V_K + sum_i [ sqrt(mu) phi(G_{eps,K,i}) + mu (A_i + A_i*) ]`.
pub fn assemble_heps_k(
    params: &PhysParams,
    grid: &ModeGrid,
    basis: &TensorBasis,
    source: ScalarSource,
    include_shift: bool,
) -> Result<SparseOperator> {
    check_grid(params, grid, basis)?;
    let blocks = dressed_blocks(params, grid, basis, params.eps, true)?;
    let kin = kinetic(basis);
    let t_op = field_energy(0.0, f64::INFINITY, grid, basis);
    let e_k = e_value(params.mu, params.k_cut, params.k_cut, grid, source, include_shift);
    let ident = SparseOperator::identity(basis.total_dim);
    let v_hi = match source {
        ScalarSource::Continuum => f64::INFINITY,
        ScalarSource::Discrete => params.lambda_uv,
    };
    let w = basis.lattice.delta.powi(basis.lattice.dim as i32);
    let vhat = make_vhat_v(params.mu, params.k_cut, v_hi, w);
    let v_op = pair_potential(&vhat, basis)?;
    let rm = Complex64::new(params.mu.sqrt(), 0.0);
    let m = Complex64::new(params.mu, 0.0);
    let one = Complex64::new(1.0, 0.0);
    let op = SparseOperator::linear_combination(
        "H_eps_K",
        &[
            (one, &kin),
            (m, &t_op),
            (rm, &blocks.phi_g),
            (m, &blocks.aa_plus_adj),
            (Complex64::new(e_k, 0.0), &ident),
            (one, &v_op),
        ],
    )?;
    Ok(op.with_metadata(params.metadata(&[
        ("operator", "H_eps_K"),
        ("source", source.as_str()),
        ("vacuum_shift", if include_shift { "included" } else { "excluded" }),
    ])))
}

/// Effective two-particle Hamiltonian `h_eff = P^2 - W(x1 - x2)`, acting
/// trivially on the Fock factor. The discrete source windows the Coulomb
/// kernel to the active coupling modes `eps < |q| <= K`; the continuum
/// source uses every nonzero lattice vector.
pub fn assemble_heff(
    params: &PhysParams,
    basis: &TensorBasis,
    source: ScalarSource,
) -> Result<SparseOperator> {
    params.validate()?;
    let w = basis.lattice.delta.powi(basis.lattice.dim as i32);
    let (lo, hi) = match source {
        ScalarSource::Continuum => (0.0, f64::INFINITY),
        ScalarSource::Discrete => (params.eps, params.k_cut),
    };
    let vhat = make_vhat_w(lo, hi, w);
    let w_op = pair_potential(&vhat, basis)?;
    let kin = kinetic(basis);
    let op = SparseOperator::linear_combination(
        "h_eff",
        &[
            (Complex64::new(1.0, 0.0), &kin),
            (Complex64::new(-1.0, 0.0), &w_op),
        ],
    )?;
    Ok(op.with_metadata(params.metadata(&[
        ("operator", "h_eff"),
        ("source", source.as_str()),
    ])))
}

/// Vacuum-sector self-energy kernel `mu A_i R_{K,inf} A_j*`.
pub fn assemble_vacuum_kernel_aa(
    params: &PhysParams,
    i: Particle,
    j: Particle,
    grid: &ModeGrid,
    basis: &TensorBasis,
    source: ScalarSource,
    include_shift: bool,
) -> Result<SparseOperator> {
    let a_i = assemble_a(params, i, grid, basis)?;
    let a_j_star = assemble_a(params, j, grid, basis)?.adjoint();
    let e_k = e_value(params.mu, params.k_cut, params.k_cut, grid, source, include_shift);
    let r = windowed_resolvent(
        params.k_cut,
        true,
        f64::INFINITY,
        e_k,
        params.mu,
        grid,
        basis,
    )?;
    let ra = r.matmul(&a_j_star, "RA*")?;
    let composite = a_i.matmul(&ra, "ARA*")?;
    let label = format!("mu_A{}RA{}*", i.index() + 1, j.index() + 1);
    Ok(composite
        .scale(Complex64::new(params.mu, 0.0), label.clone())
        .with_metadata(params.metadata(&[("operator", label.as_str())])))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ops::total_momentum;
    use crate::space::{build_box_modes, enumerate_fock, ParticleLattice, TensorBasis};
    use std::sync::Arc;

    /// d = 1 toy: lattice momenta {-2, 0, 2} (delta = 2), modes {+-2}.
    fn toy_coarse(n_max: usize) -> (ModeGrid, TensorBasis) {
        let lat = Arc::new(ParticleLattice::new(1, std::f64::consts::PI, 3).unwrap());
        let grid = build_box_modes(&lat, 0.0, 2.0).unwrap();
        let fock = Arc::new(enumerate_fock(grid.len(), n_max).unwrap());
        let basis = TensorBasis::new(lat, fock).unwrap();
        (grid, basis)
    }

    /// d = 1 toy: lattice momenta -4..4 (delta = 1), modes |k| in 1..=4.
    fn toy_fine(n_max: usize) -> (ModeGrid, TensorBasis) {
        let lat = Arc::new(ParticleLattice::new(1, 2.0 * std::f64::consts::PI, 9).unwrap());
        let grid = build_box_modes(&lat, 0.0, 4.0).unwrap();
        let fock = Arc::new(enumerate_fock(grid.len(), n_max).unwrap());
        let basis = TensorBasis::new(lat, fock).unwrap();
        (grid, basis)
    }

    fn params(mu: f64, lambda: f64, k: f64, eps: f64) -> PhysParams {
        PhysParams::new(mu, lambda, k, eps, 0.1).unwrap()
    }

    #[test]
    fn params_constraints() {
        assert!(PhysParams::new(1.0, 2.0, 1.0, 0.5, 0.0).is_ok());
        assert!(PhysParams::new(-1.0, 2.0, 1.0, 0.5, 0.0).is_err());
        assert!(PhysParams::new(1.0, 2.0, 3.0, 0.5, 0.0).is_err()); // K > Lambda
        assert!(PhysParams::new(1.0, 2.0, 1.0, 1.5, 0.0).is_err()); // eps > K
        let p = PhysParams::weak_coupling_sweep(1000.0, 1e6, 0.1).unwrap();
        assert!((p.k_cut - 10.0).abs() < 1e-12);
        assert!((p.eps - 1e-3).abs() < 1e-18);
    }

    #[test]
    fn hn_decoupled_limit_and_vacuum_expectation() {
        let (grid, basis) = toy_coarse(2);
        let p = params(4.0, 2.0, 1.0, 0.0);
        let decoupled = assemble_hn_scaled(&p, &grid, &basis, 0.0).unwrap();
        let kin = kinetic(&basis);
        let t_op = field_energy(0.0, f64::INFINITY, &grid, &basis);
        let expected = SparseOperator::linear_combination(
            "kin+muT",
            &[
                (Complex64::new(1.0, 0.0), &kin),
                (Complex64::new(p.mu, 0.0), &t_op),
            ],
        )
        .unwrap();
        assert_eq!(decoupled.sub(&expected, "d").unwrap().max_abs_entry(), 0.0);

        // <phi x vacuum | H | phi x vacuum> = <phi, P^2 phi>
        let h = assemble_hn(&p, &grid, &basis).unwrap();
        let nf = basis.fock.len();
        let np = basis.np;
        let mut amps = vec![Complex64::new(0.0, 0.0); basis.total_dim];
        // arbitrary particle wavefunction on the vacuum sector
        let mut norm = 0.0;
        for p1 in 0..np {
            for p2 in 0..np {
                let v = 1.0 / (1.0 + (p1 + 2 * p2) as f64);
                amps[(p1 * np + p2) * nf] = Complex64::new(v, 0.0);
                norm += v * v;
            }
        }
        for a in &mut amps {
            *a /= norm.sqrt();
        }
        let psi = SimState::new(amps, "phi vac", 0);
        let kin_exp = psi.expectation(&kinetic(&basis));
        let h_exp = psi.expectation(&h);
        assert!((h_exp - kin_exp).abs() < 1e-12 * (1.0 + h_exp.abs()));
    }

    #[test]
    fn hn_single_mode_ground_state_negative() {
        // one-mode toy at strong coupling: level repulsion pushes the ground
        // state below zero (dense diagonalization oracle)
        let lat = Arc::new(ParticleLattice::new(1, std::f64::consts::PI, 3).unwrap());
        let full = build_box_modes(&lat, 0.0, 2.0).unwrap();
        let mode = full.modes.iter().find(|m| m.k[0] == 2.0).unwrap().clone();
        let grid = ModeGrid::from_modes(1, 0.0, Some(2.0), vec![mode]).unwrap();
        let fock = Arc::new(enumerate_fock(1, 2).unwrap());
        let basis = TensorBasis::new(lat, fock).unwrap();
        let p = params(25.0, 2.0, 2.0, 0.0);
        let h = assemble_hn(&p, &grid, &basis).unwrap();
        let (lo, _) = h.extremal_eigs_dense().unwrap();
        assert!(lo < 0.0, "ground state {lo}");
    }

    #[test]
    fn hamiltonians_hermitian_and_momentum_conserving() {
        let (grid, basis) = toy_fine(2);
        let p = params(10.0, 4.0, 2.0, 0.5);
        let ops = vec![
            assemble_hn(&p, &grid, &basis).unwrap(),
            assemble_hk(&p, &grid, &basis, ScalarSource::Discrete, true).unwrap(),
            assemble_heps_k(&p, &grid, &basis, ScalarSource::Discrete, true).unwrap(),
            assemble_heff(&p, &basis, ScalarSource::Discrete).unwrap(),
        ];
        let ptot = total_momentum(&grid, &basis).unwrap();
        for op in &ops {
            assert!(op.hermitian);
            assert!(op.is_hermitian_exact(), "{} not hermitian", op.label);
            for pt in &ptot {
                let comm = op
                    .matmul(pt, "hp")
                    .unwrap()
                    .sub(&pt.matmul(op, "ph").unwrap(), "[H,P]")
                    .unwrap();
                assert_eq!(comm.max_abs_entry(), 0.0, "{} breaks P_tot", op.label);
            }
        }
    }

    #[test]
    fn gross_unitary_identity_at_k_equals_lambda() {
        let (grid, basis) = toy_coarse(3);
        let p = params(4.0, 2.0, 2.0, 0.0); // K = Lambda: empty dressing window
        let u = assemble_gross_unitary(&p, &grid, &basis, 4000, 1e-12).unwrap();
        let ident = SparseOperator::identity(basis.total_dim);
        assert!(u.sub(&ident, "U-1").unwrap().max_abs_entry() < 1e-14);
    }

    #[test]
    fn gross_unitary_unitary_and_dressing_nontrivial() {
        let (grid, basis) = toy_coarse(3);
        let p = params(4.0, 2.0, 1.0, 0.0); // dressing window (1, 2] = {+-2}
        let u = assemble_gross_unitary(&p, &grid, &basis, 4000, 1e-12).unwrap();
        let udu = u.adjoint().matmul(&u, "U*U").unwrap();
        let ident = SparseOperator::identity(basis.total_dim);
        assert!(udu.sub(&ident, "U*U-1").unwrap().frobenius_norm() < 1e-12);
        // vacuum-sector overlap strictly below one: dressing populates bosons
        let np = basis.np;
        let nf = basis.fock.len();
        let p0 = basis.lattice.index(&[0, 0, 0]);
        let mut amps = vec![Complex64::new(0.0, 0.0); basis.total_dim];
        amps[(p0 * np + p0) * nf] = Complex64::new(1.0, 0.0);
        let psi = SimState::new(amps, "vac", 0);
        let u_psi = SimState::new(u.apply(&psi.amplitudes), "U vac", 0);
        let vac_weight: f64 = (0..np * np)
            .map(|pp| u_psi.amplitudes[pp * nf].norm_sqr())
            .sum();
        assert!(vac_weight < 1.0 - 1e-6, "vacuum overlap {vac_weight}");
        assert!((u_psi.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn hk_reduces_to_hn_plus_e_at_k_equals_lambda() {
        let (grid, basis) = toy_coarse(2);
        let p = params(4.0, 2.0, 2.0, 0.0); // K = Lambda
        let hk = assemble_hk(&p, &grid, &basis, ScalarSource::Discrete, true).unwrap();
        let hn = assemble_hn(&p, &grid, &basis).unwrap();
        let e_lambda = e_cut_discrete_total(p.mu, p.lambda_uv, p.k_cut, &grid, true);
        let ident = SparseOperator::identity(basis.total_dim);
        let expected = SparseOperator::linear_combination(
            "H+E",
            &[
                (Complex64::new(1.0, 0.0), &hn),
                (Complex64::new(e_lambda, 0.0), &ident),
            ],
        )
        .unwrap();
        assert!(hk.sub(&expected, "d").unwrap().max_abs_entry() < 1e-14);
    }

    #[test]
    fn a_operator_lowers_by_two_and_kernel_positive() {
        let (grid, basis) = toy_fine(2);
        let p = params(6.0, 4.0, 2.0, 0.0);
        let a = assemble_a(&p, Particle::One, &grid, &basis).unwrap();
        // annihilates vacuum and one-boson states; lowers N by exactly 2
        for (r, cols, vals) in a.rows() {
            let (_, _, fr) = basis.unflatten(r);
            for (&c, &v) in cols.iter().zip(vals) {
                let (_, _, fc) = basis.unflatten(c);
                assert!(v.norm() > 0.0);
                assert_eq!(
                    basis.fock.total_occupation(fc),
                    basis.fock.total_occupation(fr) + 2
                );
            }
        }
        // <vac | A R A* | vac> > 0
        let kernel =
            assemble_vacuum_kernel_aa(&p, Particle::One, Particle::One, &grid, &basis,
                ScalarSource::Discrete, true)
            .unwrap();
        let p0 = basis.lattice.index(&[0, 0, 0]);
        let vac = basis.flatten(p0, p0, 0);
        assert!(kernel.get(vac, vac).re > 0.0);
        // output restricted to the vacuum sector: (1 - P_vac) output = 0
        let np = basis.np;
        let nf = basis.fock.len();
        let mut amps = vec![Complex64::new(0.0, 0.0); basis.total_dim];
        for pp in 0..np * np {
            amps[pp * nf] = Complex64::new((pp as f64 * 0.37).sin(), 0.2);
        }
        let out = kernel.apply(&amps);
        for (idx, v) in out.iter().enumerate() {
            let (_, _, f) = basis.unflatten(idx);
            if basis.fock.total_occupation(f) != 0 {
                assert_eq!(v.norm(), 0.0);
            }
        }
    }

    #[test]
    fn heps_term_accounting() {
        let (grid, basis) = toy_fine(2);
        let p = params(9.0, 4.0, 2.0, 0.0); // eps = 0
        let hk = assemble_hk(&p, &grid, &basis, ScalarSource::Discrete, true).unwrap();
        let heps = assemble_heps_k(&p, &grid, &basis, ScalarSource::Discrete, true).unwrap();
        // difference = sqrt(mu) cross + mu 2a*(kB)a(kB) (eps = 0 kills the
        // infrared window term)
        let blocks = dressed_blocks(&p, &grid, &basis, 0.0, false).unwrap();
        let expected = SparseOperator::linear_combination(
            "removed",
            &[
                (Complex64::new(p.mu.sqrt(), 0.0), &blocks.cross),
                (Complex64::new(p.mu, 0.0), &blocks.number_quad),
            ],
        )
        .unwrap();
        let diff = hk.sub(&heps, "H_K - H_eps_K").unwrap();
        assert!(diff.sub(&expected, "acct").unwrap().max_abs_entry() < 1e-12);
        // no vacuum-sector diagonal part in the difference
        let np = basis.np;
        let nf = basis.fock.len();
        for pp in 0..np * np {
            let idx = pp * nf;
            assert_eq!(diff.get(idx, idx).norm(), 0.0);
        }
    }

    #[test]
    fn heff_commutes_with_number() {
        let (grid, basis) = toy_fine(1);
        let p = params(10.0, 4.0, 2.0, 0.5);
        let heff = assemble_heff(&p, &basis, ScalarSource::Discrete).unwrap();
        let n_op = crate::ops::number_windowed(0.0, false, f64::INFINITY, &grid, &basis);
        let comm = heff
            .matmul(&n_op, "hn")
            .unwrap()
            .sub(&n_op.matmul(&heff, "nh").unwrap(), "[h,N]")
            .unwrap();
        assert_eq!(comm.max_abs_entry(), 0.0);
        // attractive: <phi, -W phi> < 0 for phi concentrated near zero
        // relative momentum
        let w = basis.lattice.delta.powi(basis.lattice.dim as i32);
        let vhat = make_vhat_w(p.eps, p.k_cut, w);
        let w_op = pair_potential(&vhat, &basis).unwrap();
        let np = basis.np;
        let nf = basis.fock.len();
        let mut amps = vec![Complex64::new(0.0, 0.0); basis.total_dim];
        let half = basis.lattice.half();
        let mut norm = 0.0;
        for p1 in 0..np {
            for p2 in 0..np {
                let m1 = basis.lattice.coords(p1)[0] as f64;
                let m2 = basis.lattice.coords(p2)[0] as f64;
                let v = (-0.5 * (m1 * m1 + m2 * m2) / (half as f64)).exp();
                amps[(p1 * np + p2) * nf] = Complex64::new(v, 0.0);
                norm += v * v;
            }
        }
        for a in &mut amps {
            *a /= norm.sqrt();
        }
        let psi = SimState::new(amps, "gauss", 0);
        let attraction = -psi.expectation(&w_op);
        assert!(attraction < 0.0, "[-W] expectation = {attraction}");
    }
}

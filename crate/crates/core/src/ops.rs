//! Second-quantized operators on the tensor basis: ladder operators,
//! windowed number/field-energy operators, smeared and dressed-smeared
//! creation/annihilation operators, particle kinetic terms, pair
//! potentials, and the windowed resolvent.
//!
//! Shift convention: `e^{-ikx} |p> = |p - k>`, wrapped periodically on the
//! momentum lattice. Every dressed `a*_j` term therefore shifts the dressed
//! particle's momentum by `-k_j`.

use crate::error::{Error, Result};
use crate::space::{ModeGrid, TensorBasis};
use crate::sparse::SparseOperator;
use num_complex::Complex64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LadderKind {
    Create,
    Annihilate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SmearedKind {
    Annihilate,
    Create,
    Phi,
}

/// Marker for the shift convention carried by dressed form factors.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShiftSign {
    /// `e^{-ikx} |p> = |p - k>`
    EMinusIkxLowers,
}

/// Which particle a dressed form factor is attached to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Particle {
    One,
    Two,
}

impl Particle {
    pub fn index(self) -> usize {
        match self {
            Particle::One => 0,
            Particle::Two => 1,
        }
    }

    pub fn other(self) -> Particle {
        match self {
            Particle::One => Particle::Two,
            Particle::Two => Particle::One,
        }
    }
}

/// Per-mode coupling coefficients of a (possibly vector-valued) form factor
/// attached to one particle. Coefficients are stored sparsely as
/// `(mode index, value)` pairs per vector component; modes outside the
/// window simply do not appear.
#[derive(Debug, Clone)]
pub struct FormFactor {
    pub particle: Particle,
    pub label: String,
    pub shift_sign: ShiftSign,
    /// `components[c]` lists `(mode, coefficient)` for vector component `c`.
    pub components: Vec<Vec<(usize, f64)>>,
}

impl FormFactor {
    /// Coupling `G(k) = |k|^{-1/2}` on `lo <(=) |k| <= hi`.
    pub fn g_window(
        grid: &ModeGrid,
        lo: f64,
        lo_strict: bool,
        hi: f64,
        particle: Particle,
    ) -> FormFactor {
        let coeffs = grid
            .window_indices(lo, lo_strict, hi)
            .into_iter()
            .map(|j| (j, grid.modes[j].omega.sqrt().recip()))
            .collect();
        FormFactor {
            particle,
            label: "G".into(),
            shift_sign: ShiftSign::EMinusIkxLowers,
            components: vec![coeffs],
        }
    }

    /// Dressing amplitude `B(k) = |k|^{-1/2} / (k^2 + mu |k|)` on
    /// `k_cut < |k| <= hi` (strict lower edge so that `k_cut = hi` gives an
    /// empty window and the unit dressing).
    pub fn b_window(grid: &ModeGrid, mu: f64, k_cut: f64, hi: f64, particle: Particle) -> FormFactor {
        let coeffs = grid
            .window_indices(k_cut, true, hi)
            .into_iter()
            .map(|j| {
                let r = grid.modes[j].omega;
                (j, r.sqrt().recip() / (r * r + mu * r))
            })
            .collect();
        FormFactor {
            particle,
            label: "B".into(),
            shift_sign: ShiftSign::EMinusIkxLowers,
            components: vec![coeffs],
        }
    }

    /// Vector-valued `k B(k)`, one scalar component per space dimension.
    pub fn kb_window(grid: &ModeGrid, mu: f64, k_cut: f64, hi: f64, particle: Particle) -> FormFactor {
        let idx = grid.window_indices(k_cut, true, hi);
        let components = (0..grid.dim)
            .map(|c| {
                idx.iter()
                    .map(|&j| {
                        let m = &grid.modes[j];
                        let r = m.omega;
                        (j, m.k[c] * r.sqrt().recip() / (r * r + mu * r))
                    })
                    .collect()
            })
            .collect();
        FormFactor {
            particle,
            label: "kB".into(),
            shift_sign: ShiftSign::EMinusIkxLowers,
            components,
        }
    }

    pub fn is_scalar(&self) -> bool {
        self.components.len() == 1
    }

    /// Discrete norm squared `sum_j w_j |f(k_j)|^2` (all components).
    pub fn norm_sq(&self, grid: &ModeGrid) -> f64 {
        self.components
            .iter()
            .flat_map(|comp| comp.iter())
            .map(|&(j, c)| grid.modes[j].weight * c * c)
            .sum()
    }

    /// Discrete norm squared of `omega^s f`.
    pub fn weighted_norm_sq(&self, grid: &ModeGrid, s: f64) -> f64 {
        self.components
            .iter()
            .flat_map(|comp| comp.iter())
            .map(|&(j, c)| grid.modes[j].weight * grid.modes[j].omega.powf(2.0 * s) * c * c)
            .sum()
    }
}

/// Diagonal operator whose eigenvalue depends on the full basis label.
pub fn full_diagonal(
    basis: &TensorBasis,
    label: impl Into<String>,
    f: impl Fn(usize, usize, &[u8]) -> f64,
) -> SparseOperator {
    let nf = basis.fock.len();
    let mut diag = vec![0.0; basis.total_dim];
    for p1 in 0..basis.np {
        for p2 in 0..basis.np {
            for (fi, occ) in basis.fock.states.iter().enumerate() {
                diag[(p1 * basis.np + p2) * nf + fi] = f(p1, p2, occ);
            }
        }
    }
    SparseOperator::diagonal(label, &diag)
}

/// Diagonal operator depending only on the Fock occupation.
pub fn fock_diagonal(
    basis: &TensorBasis,
    label: impl Into<String>,
    f: impl Fn(&[u8]) -> f64,
) -> SparseOperator {
    let vals: Vec<f64> = basis.fock.states.iter().map(|occ| f(occ)).collect();
    fock_diagonal_from_values(basis, label, &vals)
}

/// Single-mode ladder operator on the tensor basis (identity on particles).
pub fn ladder(mode: usize, kind: LadderKind, basis: &TensorBasis) -> Result<SparseOperator> {
    let fock = &basis.fock;
    if mode >= fock.mode_count {
        return Err(Error::InvalidArgument(format!(
            "mode {mode} out of range (M = {})",
            fock.mode_count
        )));
    }
    // transitions on the Fock factor
    let mut trans: Vec<(usize, usize, f64)> = Vec::new();
    for (fi, occ) in fock.states.iter().enumerate() {
        match kind {
            LadderKind::Create => {
                let total: usize = occ.iter().map(|&n| n as usize).sum();
                if total + 1 <= fock.n_max {
                    let mut target = occ.clone();
                    target[mode] += 1;
                    let fj = fock.index_of(&target).expect("in-range occupation");
                    trans.push((fj, fi, ((occ[mode] as f64) + 1.0).sqrt()));
                }
            }
            LadderKind::Annihilate => {
                if occ[mode] > 0 {
                    let mut target = occ.clone();
                    target[mode] -= 1;
                    let fj = fock.index_of(&target).expect("in-range occupation");
                    trans.push((fj, fi, (occ[mode] as f64).sqrt()));
                }
            }
        }
    }
    let nf = fock.len();
    let pairs = basis.np * basis.np;
    let mut t = Vec::with_capacity(pairs * trans.len());
    for pp in 0..pairs {
        for &(fj, fi, v) in &trans {
            t.push((pp * nf + fj, pp * nf + fi, Complex64::new(v, 0.0)));
        }
    }
    let name = match kind {
        LadderKind::Create => format!("a*_{mode}"),
        LadderKind::Annihilate => format!("a_{mode}"),
    };
    SparseOperator::from_triplets(basis.total_dim, name, false, t)
}

/// Windowed field energy `T_{lo,hi}`: diagonal with eigenvalue
/// `sum_j |k_j| n_j` over modes with `lo <= |k_j| <= hi`.
pub fn field_energy(lo: f64, hi: f64, grid: &ModeGrid, basis: &TensorBasis) -> SparseOperator {
    let omegas: Vec<f64> = grid.modes.iter().map(|m| m.omega).collect();
    let label = format!("T[{lo},{hi}]");
    let vals: Vec<f64> = basis
        .fock
        .states
        .iter()
        .map(|occ| {
            occ.iter()
                .enumerate()
                .filter(|(j, _)| omegas[*j] >= lo && omegas[*j] <= hi)
                .map(|(j, &n)| omegas[j] * n as f64)
                .sum()
        })
        .collect();
    fock_diagonal_from_values(basis, label, &vals)
}

/// Windowed number operator `N_{lo,hi}`.
pub fn number_windowed(
    lo: f64,
    lo_strict: bool,
    hi: f64,
    grid: &ModeGrid,
    basis: &TensorBasis,
) -> SparseOperator {
    let in_window: Vec<bool> = grid
        .modes
        .iter()
        .map(|m| {
            let above = if lo_strict { m.omega > lo } else { m.omega >= lo };
            above && m.omega <= hi
        })
        .collect();
    let vals: Vec<f64> = basis
        .fock
        .states
        .iter()
        .map(|occ| {
            occ.iter()
                .enumerate()
                .filter(|(j, _)| in_window[*j])
                .map(|(_, &n)| n as f64)
                .sum()
        })
        .collect();
    fock_diagonal_from_values(basis, format!("N[{lo},{hi}]"), &vals)
}

/// Diagonal from per-Fock-state values, tensored with the particle identity.
pub fn fock_diagonal_from_values(
    basis: &TensorBasis,
    label: impl Into<String>,
    vals: &[f64],
) -> SparseOperator {
    let nf = basis.fock.len();
    assert_eq!(vals.len(), nf);
    let mut diag = vec![0.0; basis.total_dim];
    for pp in 0..basis.np * basis.np {
        diag[pp * nf..(pp + 1) * nf].copy_from_slice(vals);
    }
    SparseOperator::diagonal(label, &diag)
}

/// Diagonal from a function of the two particle indices.
pub fn particle_diagonal(
    basis: &TensorBasis,
    label: impl Into<String>,
    f: impl Fn(usize, usize) -> f64,
) -> SparseOperator {
    let nf = basis.fock.len();
    let mut diag = vec![0.0; basis.total_dim];
    for p1 in 0..basis.np {
        for p2 in 0..basis.np {
            let v = f(p1, p2);
            let base = (p1 * basis.np + p2) * nf;
            for x in diag[base..base + nf].iter_mut() {
                *x = v;
            }
        }
    }
    SparseOperator::diagonal(label, &diag)
}

/// Kinetic energy `p1^2 + p2^2` (diagonal, nonnegative).
pub fn kinetic(basis: &TensorBasis) -> SparseOperator {
    particle_diagonal(basis, "P^2", |p1, p2| {
        basis.p_squared(p1) + basis.p_squared(p2)
    })
}

/// Smeared operator with X-independent coefficients:
/// `a*(F) = sum_j sqrt(w_j) F(k_j) a*_j` (no particle shifts).
pub fn smeared(
    grid: &ModeGrid,
    f: &dyn Fn(&[f64; 3]) -> Complex64,
    kind: SmearedKind,
    basis: &TensorBasis,
) -> Result<SparseOperator> {
    // annihilation triplets: a(F) = sum_j sqrt(w_j) conj(F_j) a_j
    let fock = &basis.fock;
    let nf = fock.len();
    let mut ann: Vec<(usize, usize, Complex64)> = Vec::new();
    let coeffs: Vec<Complex64> = grid
        .modes
        .iter()
        .map(|m| m.weight.sqrt() * f(&m.k))
        .collect();
    for (fi, occ) in fock.states.iter().enumerate() {
        for (j, &n) in occ.iter().enumerate() {
            if n == 0 || coeffs[j] == Complex64::new(0.0, 0.0) {
                continue;
            }
            let mut target = occ.clone();
            target[j] -= 1;
            let fj = fock.index_of(&target).expect("in-range occupation");
            ann.push((fj, fi, coeffs[j].conj() * (n as f64).sqrt()));
        }
    }
    let pairs = basis.np * basis.np;
    let expand = |fock_trip: &[(usize, usize, Complex64)], adjoint: bool| {
        let mut t = Vec::with_capacity(pairs * fock_trip.len());
        for pp in 0..pairs {
            for &(r, c, v) in fock_trip {
                if adjoint {
                    t.push((pp * nf + c, pp * nf + r, v.conj()));
                } else {
                    t.push((pp * nf + r, pp * nf + c, v));
                }
            }
        }
        t
    };
    match kind {
        SmearedKind::Annihilate => {
            SparseOperator::from_triplets(basis.total_dim, "a(F)", false, expand(&ann, false))
        }
        SmearedKind::Create => {
            SparseOperator::from_triplets(basis.total_dim, "a*(F)", false, expand(&ann, true))
        }
        SmearedKind::Phi => {
            let mut t = expand(&ann, false);
            t.extend(expand(&ann, true));
            SparseOperator::from_triplets(basis.total_dim, "phi(F)", true, t)
        }
    }
}

/// One vector component of the dressed annihilation operator
/// `a(f)` with `f(X, k) = c(k) e^{-ik x_i}`:
/// each term `sqrt(w_j) c_j a_j` shifts the particle momentum by `+k_j`.
pub fn dressed_annihilate_component(
    ff: &FormFactor,
    component: usize,
    grid: &ModeGrid,
    basis: &TensorBasis,
) -> Result<SparseOperator> {
    if !grid.box_aligned {
        return Err(Error::GridNotBoxAligned);
    }
    let fock = &basis.fock;
    let nf = fock.len();
    let np = basis.np;
    let coeffs = &ff.components[component];
    let mut t: Vec<(usize, usize, Complex64)> = Vec::new();
    // Fock transitions for each contributing mode
    for &(j, cval) in coeffs {
        let steps = grid.modes[j]
            .steps
            .ok_or(Error::GridNotBoxAligned)?;
        let w_sqrt = grid.modes[j].weight.sqrt();
        for (fi, occ) in fock.states.iter().enumerate() {
            if occ[j] == 0 {
                continue;
            }
            let mut target = occ.clone();
            target[j] -= 1;
            let fj = fock.index_of(&target).expect("in-range occupation");
            let amp = Complex64::new(w_sqrt * cval * (occ[j] as f64).sqrt(), 0.0);
            // particle shift by +k_j on the dressed particle
            match ff.particle {
                Particle::One => {
                    for p1 in 0..np {
                        let p1s = basis.shift_index(p1, &steps, 1);
                        for p2 in 0..np {
                            t.push((
                                (p1s * np + p2) * nf + fj,
                                (p1 * np + p2) * nf + fi,
                                amp,
                            ));
                        }
                    }
                }
                Particle::Two => {
                    for p2 in 0..np {
                        let p2s = basis.shift_index(p2, &steps, 1);
                        for p1 in 0..np {
                            t.push((
                                (p1 * np + p2s) * nf + fj,
                                (p1 * np + p2) * nf + fi,
                                amp,
                            ));
                        }
                    }
                }
            }
        }
    }
    SparseOperator::from_triplets(
        basis.total_dim,
        format!("a({}_{})", ff.label, component),
        false,
        t,
    )
}

/// Dressed smeared operator for a scalar form factor.
pub fn dressed_smeared(
    ff: &FormFactor,
    kind: SmearedKind,
    grid: &ModeGrid,
    basis: &TensorBasis,
) -> Result<SparseOperator> {
    if !ff.is_scalar() {
        return Err(Error::InvalidArgument(
            "dressed_smeared requires a scalar form factor; use components".into(),
        ));
    }
    let ann = dressed_annihilate_component(ff, 0, grid, basis)?;
    match kind {
        SmearedKind::Annihilate => Ok(ann.relabel(format!("a({})", ff.label))),
        SmearedKind::Create => Ok(ann.adjoint().relabel(format!("a*({})", ff.label))),
        SmearedKind::Phi => {
            let label = format!("phi({})", ff.label);
            let mut t: Vec<(usize, usize, Complex64)> = Vec::with_capacity(2 * ann.nnz());
            for (r, cols, vals) in ann.rows() {
                for (&c, &v) in cols.iter().zip(vals) {
                    t.push((r, c, v));
                    t.push((c, r, v.conj()));
                }
            }
            SparseOperator::from_triplets(basis.total_dim, label, true, t)
        }
    }
}

/// Multiplication operator `v(x_1 - x_2)` in momentum space:
/// `<p1', p2'| V |p1, p2> = vhat(p1' - p1)` whenever total momentum is
/// conserved (wrapped), zero otherwise. `vhat` must be real and even for
/// the assembled operator to pass the hermiticity check.
pub fn pair_potential(
    vhat: &dyn Fn(&[f64; 3]) -> f64,
    basis: &TensorBasis,
) -> Result<SparseOperator> {
    let lat = &basis.lattice;
    let np = basis.np;
    let nf = basis.fock.len();
    let mut t: Vec<(usize, usize, Complex64)> = Vec::new();
    for qi in 0..np {
        let q = lat.coords(qi);
        let v = vhat(&lat.momentum(&q));
        if v == 0.0 {
            continue;
        }
        let amp = Complex64::new(v, 0.0);
        for p1 in 0..np {
            let p1s = basis.shift_index(p1, &q, 1);
            for p2 in 0..np {
                let p2s = basis.shift_index(p2, &q, -1);
                let row_base = (p1s * np + p2s) * nf;
                let col_base = (p1 * np + p2) * nf;
                for f in 0..nf {
                    t.push((row_base + f, col_base + f, amp));
                }
            }
        }
    }
    SparseOperator::from_triplets(basis.total_dim, "v(x1-x2)", true, t)
}

/// Windowed resolvent
/// `R_{lo,hi} = Q (T_{lo,hi} + (E_K + p1^2 + p2^2)/mu)^{-1} Q`
/// where `Q` projects onto states with at least one boson in the window.
/// Diagonal in the tensor basis; zero on the window-vacuum sector.
pub fn windowed_resolvent(
    lo: f64,
    lo_strict: bool,
    hi: f64,
    e_k: f64,
    mu: f64,
    grid: &ModeGrid,
    basis: &TensorBasis,
) -> Result<SparseOperator> {
    if !(e_k > 0.0) {
        return Err(Error::InvalidParams("windowed resolvent needs E_K > 0".into()));
    }
    let in_window: Vec<bool> = grid
        .modes
        .iter()
        .map(|m| {
            let above = if lo_strict { m.omega > lo } else { m.omega >= lo };
            above && m.omega <= hi
        })
        .collect();
    let omegas: Vec<f64> = grid.modes.iter().map(|m| m.omega).collect();
    let nf = basis.fock.len();
    let mut diag = vec![0.0; basis.total_dim];
    for (fi, occ) in basis.fock.states.iter().enumerate() {
        let mut n_w = 0usize;
        let mut t_w = 0.0;
        for (j, &n) in occ.iter().enumerate() {
            if in_window[j] && n > 0 {
                n_w += n as usize;
                t_w += omegas[j] * n as f64;
            }
        }
        if n_w == 0 {
            continue;
        }
        for p1 in 0..basis.np {
            for p2 in 0..basis.np {
                let psq = basis.p_squared(p1) + basis.p_squared(p2);
                diag[(p1 * basis.np + p2) * nf + fi] = 1.0 / (t_w + (e_k + psq) / mu);
            }
        }
    }
    Ok(SparseOperator::diagonal(format!("R[{lo},{hi}]"), &diag))
}

/// Wrapped total momentum, one diagonal operator per space dimension.
/// Eigenvalues are computed in integer lattice steps (so conservation under
/// wrapped shifts is exact) and returned in momentum units.
pub fn total_momentum(grid: &ModeGrid, basis: &TensorBasis) -> Result<Vec<SparseOperator>> {
    if !grid.box_aligned {
        return Err(Error::GridNotBoxAligned);
    }
    let lat = &basis.lattice;
    let n = lat.points_per_dim as i64;
    let h = lat.half() as i64;
    let steps: Vec<[i32; 3]> = grid
        .modes
        .iter()
        .map(|m| m.steps.ok_or(Error::GridNotBoxAligned))
        .collect::<Result<_>>()?;
    let nf = basis.fock.len();
    let mut out = Vec::with_capacity(lat.dim);
    for axis in 0..lat.dim {
        let mut diag = vec![0.0; basis.total_dim];
        for p1 in 0..basis.np {
            let m1 = lat.coords(p1)[axis] as i64;
            for p2 in 0..basis.np {
                let m2 = lat.coords(p2)[axis] as i64;
                for (fi, occ) in basis.fock.states.iter().enumerate() {
                    let mut total = m1 + m2;
                    for (j, &nb) in occ.iter().enumerate() {
                        total += nb as i64 * steps[j][axis] as i64;
                    }
                    // wrap into centered representative
                    let wrapped = (total + h).rem_euclid(n) - h;
                    diag[(p1 * basis.np + p2) * nf + fi] = wrapped as f64 * lat.delta;
                }
            }
        }
        out.push(SparseOperator::diagonal(format!("P_tot[{axis}]"), &diag));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::{build_box_modes, enumerate_fock, ParticleLattice, TensorBasis};
    use std::sync::Arc;

    fn toy_1d(n_lattice: usize, lo: f64, hi: f64, n_max: usize) -> (ModeGrid, TensorBasis) {
        let lat = Arc::new(ParticleLattice::new(1, 2.0 * std::f64::consts::PI, n_lattice).unwrap());
        let grid = build_box_modes(&lat, lo, hi).unwrap();
        let fock = Arc::new(enumerate_fock(grid.len(), n_max).unwrap());
        let basis = TensorBasis::new(lat, fock).unwrap();
        (grid, basis)
    }

    #[test]
    fn ladder_matrix_elements() {
        let (_grid, basis) = toy_1d(3, 0.5, 1.5, 2);
        let create = ladder(0, LadderKind::Create, &basis).unwrap();
        // on the (n_0 = 1) state: sqrt(2) into (n_0 = 2)
        let f1 = basis.fock.index_of(&[1, 0]).unwrap();
        let f2 = basis.fock.index_of(&[2, 0]).unwrap();
        let col = basis.flatten(0, 0, f1);
        let row = basis.flatten(0, 0, f2);
        assert!((create.get(row, col).re - 2f64.sqrt()).abs() < 1e-15);
        // a on vacuum = 0
        let ann = ladder(0, LadderKind::Annihilate, &basis).unwrap();
        let vac = basis.flatten(0, 0, 0);
        let mut x = vec![Complex64::new(0.0, 0.0); basis.total_dim];
        x[vac] = Complex64::new(1.0, 0.0);
        let y = ann.apply(&x);
        assert!(y.iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn projected_ccr() {
        // P [a_j, a*_l] P = delta_jl P on the sector with occupation <= n_max - 1
        let (_grid, basis) = toy_1d(3, 0.5, 1.5, 2);
        let m = basis.fock.mode_count;
        assert_eq!(m, 2);
        let proj: Vec<usize> = (0..basis.total_dim)
            .filter(|&i| {
                let (_, _, f) = basis.unflatten(i);
                basis.fock.total_occupation(f) <= basis.fock.n_max - 1
            })
            .collect();
        for j in 0..m {
            for l in 0..m {
                let aj = ladder(j, LadderKind::Annihilate, &basis).unwrap();
                let cl = ladder(l, LadderKind::Create, &basis).unwrap();
                let comm = aj
                    .matmul(&cl, "ac")
                    .unwrap()
                    .sub(&cl.matmul(&aj, "ca").unwrap(), "[a,a*]")
                    .unwrap();
                let sub = comm.submatrix_dense(&proj);
                for r in 0..proj.len() {
                    for c in 0..proj.len() {
                        let expected = if j == l && r == c { 1.0 } else { 0.0 };
                        assert!(
                            (sub[(r, c)] - Complex64::new(expected, 0.0)).norm() < 1e-14,
                            "commutator mismatch at j={j} l={l} r={r} c={c}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn field_energy_eigenvalues() {
        let (grid, basis) = toy_1d(5, 0.5, 2.5, 2);
        let t = field_energy(0.0, f64::INFINITY, &grid, &basis);
        // vacuum -> 0
        assert_eq!(t.get(basis.flatten(0, 0, 0), basis.flatten(0, 0, 0)).re, 0.0);
        // one boson in a |k| = 2 mode -> 2
        let j2 = grid.modes.iter().position(|m| m.omega == 2.0).unwrap();
        let mut occ = vec![0u8; grid.len()];
        occ[j2] = 1;
        let f = basis.fock.index_of(&occ).unwrap();
        let idx = basis.flatten(1, 2, f);
        assert!((t.get(idx, idx).re - 2.0).abs() < 1e-15);
    }

    #[test]
    fn field_energy_dominates_number() {
        // T_{a,b} >= a N_{a,b} entrywise on the diagonal
        let (grid, basis) = toy_1d(5, 0.5, 2.5, 2);
        let a = 1.0;
        let t = field_energy(a, 2.5, &grid, &basis);
        let n = number_windowed(a, false, 2.5, &grid, &basis);
        for i in 0..basis.total_dim {
            assert!(t.get(i, i).re >= a * n.get(i, i).re - 1e-15);
        }
    }

    #[test]
    fn smeared_zero_function() {
        let (grid, basis) = toy_1d(3, 0.5, 1.5, 2);
        let z = smeared(&grid, &|_| Complex64::new(0.0, 0.0), SmearedKind::Phi, &basis).unwrap();
        assert_eq!(z.nnz(), 0);
    }

    #[test]
    fn dressed_single_mode_matrix_element() {
        // single mode k = delta = 1: <p=-1, n=1| a*(G) |p=0, n=0> = sqrt(w) |k|^{-1/2}
        let (grid, basis) = toy_1d(3, 0.5, 1.5, 1);
        // keep only the k = +1 mode
        let j = grid.modes.iter().position(|m| m.k[0] == 1.0).unwrap();
        let mut ff = FormFactor::g_window(&grid, 0.0, false, 10.0, Particle::One);
        ff.components[0].retain(|&(jj, _)| jj == j);
        let astar = dressed_smeared(&ff, SmearedKind::Create, &grid, &basis).unwrap();
        let lat = &basis.lattice;
        let p0 = lat.index(&[0, 0, 0]);
        let pm1 = lat.index(&[-1, 0, 0]);
        let mut occ = vec![0u8; grid.len()];
        occ[j] = 1;
        let f1 = basis.fock.index_of(&occ).unwrap();
        let row = basis.flatten(pm1, p0, f1);
        let col = basis.flatten(p0, p0, 0);
        let expected = grid.modes[j].weight.sqrt() * 1.0;
        assert!((astar.get(row, col).re - expected).abs() < 1e-15);
    }

    #[test]
    fn dressed_phi_hermitian_and_momentum_conserving() {
        let (grid, basis) = toy_1d(3, 0.5, 1.5, 1);
        let ff = FormFactor::g_window(&grid, 0.0, false, 10.0, Particle::One);
        let phi = dressed_smeared(&ff, SmearedKind::Phi, &grid, &basis).unwrap();
        assert!(phi.is_hermitian_exact());
        let ptot = total_momentum(&grid, &basis).unwrap();
        for p in &ptot {
            let comm = phi
                .matmul(p, "hp")
                .unwrap()
                .sub(&p.matmul(&phi, "ph").unwrap(), "[phi,P]")
                .unwrap();
            assert_eq!(comm.max_abs_entry(), 0.0);
        }
    }

    #[test]
    fn kinetic_values() {
        let (_grid, basis) = toy_1d(5, 0.5, 1.5, 1);
        let kin = kinetic(&basis);
        let lat = &basis.lattice;
        let p0 = lat.index(&[0, 0, 0]);
        let idx = basis.flatten(p0, p0, 0);
        assert_eq!(kin.get(idx, idx).re, 0.0);
        let pp = lat.index(&[1, 0, 0]);
        let pm = lat.index(&[-1, 0, 0]);
        let idx2 = basis.flatten(pp, pm, 0);
        assert!((kin.get(idx2, idx2).re - 2.0).abs() < 1e-15);
        // min eigenvalue 0, attained
        let (lo, _) = kin.extremal_eigs_dense().unwrap();
        assert_eq!(lo, 0.0);
    }

    #[test]
    fn pair_potential_constant_and_conservation() {
        let (grid, basis) = toy_1d(3, 0.5, 1.5, 1);
        // vhat = c only at q = 0: pure diagonal c
        let c = 0.7;
        let v = pair_potential(
            &|q: &[f64; 3]| {
                if q[0] == 0.0 && q[1] == 0.0 && q[2] == 0.0 {
                    c
                } else {
                    0.0
                }
            },
            &basis,
        )
        .unwrap();
        for i in 0..basis.total_dim {
            assert!((v.get(i, i).re - c).abs() < 1e-15);
        }
        // generic even vhat commutes with total momentum
        let v2 = pair_potential(&|q: &[f64; 3]| 1.0 / (1.0 + q[0] * q[0]), &basis).unwrap();
        assert!(v2.is_hermitian_exact());
        let ptot = total_momentum(&grid, &basis).unwrap();
        for p in &ptot {
            let comm = v2
                .matmul(p, "vp")
                .unwrap()
                .sub(&p.matmul(&v2, "pv").unwrap(), "[v,P]")
                .unwrap();
            assert_eq!(comm.max_abs_entry(), 0.0);
        }
        // zero vhat -> zero operator
        let z = pair_potential(&|_| 0.0, &basis).unwrap();
        assert_eq!(z.nnz(), 0);
    }

    #[test]
    fn resolvent_values_and_bound() {
        let (grid, basis) = toy_1d(5, 0.5, 2.5, 2);
        // one boson at |k| = 2, window [1, inf), p = 0, E_K = 1, mu = 1 -> 1/3
        let r = windowed_resolvent(1.0, false, f64::INFINITY, 1.0, 1.0, &grid, &basis).unwrap();
        let j2 = grid.modes.iter().position(|m| m.omega == 2.0).unwrap();
        let mut occ = vec![0u8; grid.len()];
        occ[j2] = 1;
        let f = basis.fock.index_of(&occ).unwrap();
        let p0 = basis.lattice.index(&[0, 0, 0]);
        let idx = basis.flatten(p0, p0, f);
        assert!((r.get(idx, idx).re - 1.0 / 3.0).abs() < 1e-15);
        // vacuum sector annihilated
        let vac = basis.flatten(p0, p0, 0);
        assert_eq!(r.get(vac, vac).re, 0.0);
        // norm bound 1/lo across parameter draws
        for (ek, mu, lo) in [(0.5, 2.0, 1.0), (3.0, 10.0, 2.0), (1.0, 1.0, 0.5)] {
            let r = windowed_resolvent(lo, false, f64::INFINITY, ek, mu, &grid, &basis).unwrap();
            assert!(r.max_abs_entry() <= 1.0 / lo + 1e-15);
        }
    }
}

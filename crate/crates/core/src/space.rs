//! Discretized model space: field-mode grids, the periodic two-particle
//! momentum lattice, the truncated Fock basis, and the combined tensor basis.
//!
//! Box-mode grids are aligned with the particle lattice so that every
//! plane-wave shift `e^{-ikx}` acts as an exact (wrapped) permutation of
//! lattice momenta. Radial grids exist only for scalar-integral checks in
//! dimension 3 and are never used for dynamics.

use crate::error::{Error, Result};
use crate::quad::gauss_legendre;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::sync::Arc;

/// Default cap on basis sizes; constructors reject anything larger.
pub const DEFAULT_MAX_DIM: usize = 20_000_000;

/// A single field mode: wavevector, frequency `omega = |k|` and quadrature weight.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Mode {
    /// Wavevector, zero-padded to three components.
    pub k: [f64; 3],
    /// Frequency, equal to `|k|`.
    pub omega: f64,
    /// Quadrature weight in momentum-volume units.
    pub weight: f64,
    /// Integer lattice steps for box-aligned modes (`k = steps * delta`).
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub steps: Option<[i32; 3]>,
}

impl Mode {
    pub fn norm(&self) -> f64 {
        self.omega
    }
}

/// A finite set of field modes covering the momentum shell `lo <= |k| <= hi`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModeGrid {
    pub dim: usize,
    pub lo: f64,
    /// Upper cutoff; `None` means unbounded (tail-substituted radial grids).
    pub hi: Option<f64>,
    pub modes: Vec<Mode>,
    /// True when every mode lies on the particle lattice.
    pub box_aligned: bool,
}

impl ModeGrid {
    /// Construct from an explicit mode list, checking the shell invariants.
    pub fn from_modes(dim: usize, lo: f64, hi: Option<f64>, modes: Vec<Mode>) -> Result<Self> {
        if modes.is_empty() {
            return Err(Error::EmptyModeWindow {
                lo,
                hi: hi.unwrap_or(f64::INFINITY),
            });
        }
        for m in &modes {
            let r = norm3(&m.k);
            if r == 0.0 {
                return Err(Error::InvalidArgument("mode with k = 0".into()));
            }
            if m.omega != r {
                return Err(Error::InvalidArgument(format!(
                    "mode omega {} != |k| {}",
                    m.omega, r
                )));
            }
            if !(m.weight > 0.0) {
                return Err(Error::InvalidArgument("non-positive mode weight".into()));
            }
            let hi_v = hi.unwrap_or(f64::INFINITY);
            if r < lo - 1e-12 || r > hi_v * (1.0 + 1e-12) {
                return Err(Error::InvalidArgument(format!(
                    "mode |k| = {r} outside window [{lo}, {hi_v}]"
                )));
            }
        }
        let box_aligned = modes.iter().all(|m| m.steps.is_some());
        Ok(ModeGrid {
            dim,
            lo,
            hi,
            modes,
            box_aligned,
        })
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    /// Sum of all quadrature weights (approximates the shell volume).
    pub fn total_weight(&self) -> f64 {
        self.modes.iter().map(|m| m.weight).sum()
    }

    /// Indices of modes with `|k|` in the window; bounds are interpreted as
    /// `lo_incl <= |k|` (or strict when `lo_strict`) and `|k| <= hi`.
    pub fn window_indices(&self, lo: f64, lo_strict: bool, hi: f64) -> Vec<usize> {
        self.modes
            .iter()
            .enumerate()
            .filter(|(_, m)| {
                let r = m.omega;
                let above = if lo_strict { r > lo } else { r >= lo };
                above && r <= hi
            })
            .map(|(i, _)| i)
            .collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("mode grid serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let g: ModeGrid =
            serde_json::from_str(s).map_err(|e| Error::InvalidArgument(e.to_string()))?;
        ModeGrid::from_modes(g.dim, g.lo, g.hi, g.modes)
    }
}

fn norm3(k: &[f64; 3]) -> f64 {
    (k[0] * k[0] + k[1] * k[1] + k[2] * k[2]).sqrt()
}

/// Periodic momentum lattice for a single particle in dimension `dim`:
/// integer multiples of `delta = 2*pi/box_length`, centered at zero.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ParticleLattice {
    pub dim: usize,
    pub box_length: f64,
    /// Odd number of points per dimension, so negation symmetry is exact.
    pub points_per_dim: usize,
    pub delta: f64,
}

impl ParticleLattice {
    pub fn new(dim: usize, box_length: f64, points_per_dim: usize) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(Error::InvalidArgument(format!("dim {dim} not in 1..=3")));
        }
        if points_per_dim % 2 == 0 {
            return Err(Error::InvalidArgument(
                "points_per_dim must be odd".into(),
            ));
        }
        if !(box_length > 0.0) {
            return Err(Error::InvalidArgument("box_length must be positive".into()));
        }
        Ok(ParticleLattice {
            dim,
            box_length,
            points_per_dim,
            delta: 2.0 * std::f64::consts::PI / box_length,
        })
    }

    /// Number of lattice points (single-particle momentum states).
    pub fn num_points(&self) -> usize {
        self.points_per_dim.pow(self.dim as u32)
    }

    pub fn half(&self) -> i32 {
        ((self.points_per_dim - 1) / 2) as i32
    }

    /// Integer coordinates of the point with flat index `idx` (row-major).
    pub fn coords(&self, idx: usize) -> [i32; 3] {
        let n = self.points_per_dim;
        let h = self.half();
        let mut rem = idx;
        let mut m = [0i32; 3];
        for a in (0..self.dim).rev() {
            m[a] = (rem % n) as i32 - h;
            rem /= n;
        }
        m
    }

    /// Flat index of integer coordinates, which must lie in range.
    pub fn index(&self, m: &[i32; 3]) -> usize {
        let n = self.points_per_dim;
        let h = self.half();
        let mut idx = 0usize;
        for a in 0..self.dim {
            debug_assert!(m[a].abs() <= h);
            idx = idx * n + (m[a] + h) as usize;
        }
        idx
    }

    /// Wrap integer coordinates periodically into `[-half, half]`.
    pub fn wrap(&self, m: &[i32; 3]) -> [i32; 3] {
        let n = self.points_per_dim as i32;
        let h = self.half();
        let mut out = [0i32; 3];
        for a in 0..self.dim {
            let mut v = (m[a] + h).rem_euclid(n);
            v -= h;
            // rem_euclid maps to [0, n); shift back to centered coordinates
            out[a] = v;
        }
        out
    }

    /// Momentum value of integer coordinates.
    pub fn momentum(&self, m: &[i32; 3]) -> [f64; 3] {
        let mut k = [0.0; 3];
        for a in 0..self.dim {
            k[a] = m[a] as f64 * self.delta;
        }
        k
    }

    /// All integer coordinate vectors in row-major order.
    pub fn all_coords(&self) -> Vec<[i32; 3]> {
        (0..self.num_points()).map(|i| self.coords(i)).collect()
    }

    /// Largest representable |k| along a single axis.
    pub fn max_axis_momentum(&self) -> f64 {
        self.half() as f64 * self.delta
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("lattice serializes")
    }
}

/// Box-aligned field modes: all nonzero lattice vectors with `lo <= |k| <= hi`,
/// each carrying the uniform Riemann weight `delta^dim`.
pub fn build_box_modes(lattice: &ParticleLattice, lo: f64, hi: f64) -> Result<ModeGrid> {
    if !(lo >= 0.0 && lo < hi) {
        return Err(Error::InvalidArgument(format!(
            "need 0 <= lo < hi, got lo={lo} hi={hi}"
        )));
    }
    let w = lattice.delta.powi(lattice.dim as i32);
    let mut modes = Vec::new();
    for idx in 0..lattice.num_points() {
        let m = lattice.coords(idx);
        if m[..lattice.dim].iter().all(|&c| c == 0) {
            continue;
        }
        let k = lattice.momentum(&m);
        let r = norm3(&k);
        if r >= lo && r <= hi {
            modes.push(Mode {
                k,
                omega: r,
                weight: w,
                steps: Some(m),
            });
        }
    }
    if modes.is_empty() {
        return Err(Error::EmptyModeWindow { lo, hi });
    }
    ModeGrid::from_modes(lattice.dim, lo, Some(hi), modes)
}

/// Radial quadrature grid for scalar-integral verification, dimension 3 only.
///
/// Product of a Gauss-Legendre rule in radius, a Gauss-Legendre rule in
/// `cos(theta)` and a uniform rule in `phi`. Weights include the `r^2`
/// Jacobian, so `sum_j w_j f(k_j)` approximates the shell integral of `f`.
/// An infinite upper cutoff must be declared through `tail_substitution`,
/// which maps the radius via `r = lo/u`, `u` in `(0, 1]`.
pub fn build_radial_modes(
    dim: usize,
    lo: f64,
    hi: f64,
    n_radial: usize,
    n_angular: usize,
    tail_substitution: bool,
) -> Result<ModeGrid> {
    if dim != 3 {
        return Err(Error::RadialGridDim(dim));
    }
    if n_radial < 1 || n_angular < 1 {
        return Err(Error::InvalidArgument("need n_radial, n_angular >= 1".into()));
    }
    if !(lo < hi) {
        return Err(Error::InvalidArgument(format!("need lo < hi, got {lo}, {hi}")));
    }
    let infinite = hi.is_infinite();
    if infinite && !tail_substitution {
        return Err(Error::MissingTailSubstitution);
    }
    if infinite && lo <= 0.0 {
        return Err(Error::InvalidArgument(
            "tail substitution requires lo > 0".into(),
        ));
    }

    // radial nodes and weights, with r^2 folded in
    let (gl_x, gl_w) = gauss_legendre(n_radial);
    let mut radial: Vec<(f64, f64)> = Vec::with_capacity(n_radial);
    if infinite {
        // u in (0, 1], r = lo/u, dr = lo/u^2 du
        for (x, w) in gl_x.iter().zip(gl_w.iter()) {
            let u = 0.5 * (x + 1.0); // (0,1)
            let r = lo / u;
            let wr = w * 0.5 * lo / (u * u);
            radial.push((r, wr * r * r));
        }
    } else {
        for (x, w) in gl_x.iter().zip(gl_w.iter()) {
            let r = lo + 0.5 * (x + 1.0) * (hi - lo);
            let wr = w * 0.5 * (hi - lo);
            radial.push((r, wr * r * r));
        }
    }

    // angular nodes: cos(theta) Gauss-Legendre x uniform phi
    let (cu, cw) = gauss_legendre(n_angular);
    let n_phi = 2 * n_angular;
    let w_phi = 2.0 * std::f64::consts::PI / n_phi as f64;

    let mut modes = Vec::with_capacity(n_radial * n_angular * n_phi);
    for &(r, wr) in &radial {
        for (u, wu) in cu.iter().zip(cw.iter()) {
            let s = (1.0 - u * u).max(0.0).sqrt();
            for p in 0..n_phi {
                let phi = w_phi * p as f64;
                let k = [r * s * phi.cos(), r * s * phi.sin(), r * u];
                // omega recomputed from the rounded components so the
                // `omega = |k|` invariant holds bitwise
                let omega = (k[0] * k[0] + k[1] * k[1] + k[2] * k[2]).sqrt();
                modes.push(Mode {
                    k,
                    omega,
                    weight: wr * wu * w_phi,
                    steps: None,
                });
            }
        }
    }
    ModeGrid::from_modes(3, lo, if infinite { None } else { Some(hi) }, modes)
}

/// Occupation-number basis of the boson Fock space truncated at total
/// occupation `n_max`, in lexicographic order with the vacuum first.
#[derive(Debug, Clone)]
pub struct FockBasis {
    pub mode_count: usize,
    pub n_max: usize,
    pub states: Vec<Vec<u8>>,
    index: HashMap<Vec<u8>, usize>,
}

/// Number of occupation vectors of length `m` with total at most `n_max`.
pub fn fock_dimension(m: usize, n_max: usize) -> Option<usize> {
    // sum_{n=0}^{n_max} C(m+n-1, n) = C(m+n_max, n_max)
    let mut acc: u128 = 1;
    for i in 1..=n_max as u128 {
        acc = acc.checked_mul(m as u128 + i)?;
        acc /= i;
    }
    usize::try_from(acc).ok()
}

pub fn enumerate_fock(mode_count: usize, n_max: usize) -> Result<FockBasis> {
    enumerate_fock_capped(mode_count, n_max, DEFAULT_MAX_DIM)
}

pub fn enumerate_fock_capped(
    mode_count: usize,
    n_max: usize,
    max_dim: usize,
) -> Result<FockBasis> {
    if mode_count < 1 {
        return Err(Error::InvalidArgument("mode_count must be >= 1".into()));
    }
    let dim = fock_dimension(mode_count, n_max).ok_or(Error::DimensionOverflow {
        dim: usize::MAX,
        max: max_dim,
    })?;
    if dim > max_dim {
        return Err(Error::DimensionOverflow { dim, max: max_dim });
    }
    let mut states = Vec::with_capacity(dim);
    let mut current = vec![0u8; mode_count];
    enumerate_rec(&mut states, &mut current, 0, n_max);
    states.sort();
    debug_assert_eq!(states.len(), dim);
    debug_assert!(states[0].iter().all(|&n| n == 0));
    let index = states
        .iter()
        .enumerate()
        .map(|(i, s)| (s.clone(), i))
        .collect();
    Ok(FockBasis {
        mode_count,
        n_max,
        states,
        index,
    })
}

fn enumerate_rec(states: &mut Vec<Vec<u8>>, current: &mut Vec<u8>, pos: usize, budget: usize) {
    if pos == current.len() {
        states.push(current.clone());
        return;
    }
    for n in 0..=budget {
        current[pos] = n as u8;
        enumerate_rec(states, current, pos + 1, budget - n);
    }
    current[pos] = 0;
}

impl FockBasis {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn index_of(&self, occ: &[u8]) -> Option<usize> {
        self.index.get(occ).copied()
    }

    pub fn total_occupation(&self, idx: usize) -> usize {
        self.states[idx].iter().map(|&n| n as usize).sum()
    }

    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct FockJson<'a> {
            mode_count: usize,
            n_max: usize,
            states: &'a [Vec<u8>],
        }
        serde_json::to_string_pretty(&FockJson {
            mode_count: self.mode_count,
            n_max: self.n_max,
            states: &self.states,
        })
        .expect("fock basis serializes")
    }
}

/// Combined basis: two particles on the momentum lattice tensored with the
/// truncated Fock basis. Flat layout: `(p1 * np + p2) * nf + fock`.
#[derive(Debug, Clone)]
pub struct TensorBasis {
    pub lattice: Arc<ParticleLattice>,
    pub fock: Arc<FockBasis>,
    /// Single-particle lattice size `points_per_dim^dim`.
    pub np: usize,
    pub total_dim: usize,
    /// Cached momentum vectors per single-particle index.
    momenta: Vec<[f64; 3]>,
    /// Cached p^2 per single-particle index.
    psq: Vec<f64>,
}

impl TensorBasis {
    pub fn new(lattice: Arc<ParticleLattice>, fock: Arc<FockBasis>) -> Result<Self> {
        Self::with_cap(lattice, fock, DEFAULT_MAX_DIM)
    }

    pub fn with_cap(
        lattice: Arc<ParticleLattice>,
        fock: Arc<FockBasis>,
        max_dim: usize,
    ) -> Result<Self> {
        let np = lattice.num_points();
        let total = np
            .checked_mul(np)
            .and_then(|x| x.checked_mul(fock.len()))
            .ok_or(Error::DimensionOverflow {
                dim: usize::MAX,
                max: max_dim,
            })?;
        if total > max_dim {
            return Err(Error::DimensionOverflow {
                dim: total,
                max: max_dim,
            });
        }
        let momenta: Vec<[f64; 3]> = (0..np)
            .map(|i| lattice.momentum(&lattice.coords(i)))
            .collect();
        let psq = momenta
            .iter()
            .map(|k| k[0] * k[0] + k[1] * k[1] + k[2] * k[2])
            .collect();
        Ok(TensorBasis {
            lattice,
            fock,
            np,
            total_dim: total,
            momenta,
            psq,
        })
    }

    #[inline]
    pub fn flatten(&self, p1: usize, p2: usize, f: usize) -> usize {
        (p1 * self.np + p2) * self.fock.len() + f
    }

    #[inline]
    pub fn unflatten(&self, idx: usize) -> (usize, usize, usize) {
        let nf = self.fock.len();
        let f = idx % nf;
        let rest = idx / nf;
        (rest / self.np, rest % self.np, f)
    }

    #[inline]
    pub fn momentum(&self, p: usize) -> &[f64; 3] {
        &self.momenta[p]
    }

    #[inline]
    pub fn p_squared(&self, p: usize) -> f64 {
        self.psq[p]
    }

    /// Shift a single-particle index by integer steps, wrapping periodically.
    #[inline]
    pub fn shift_index(&self, p: usize, steps: &[i32; 3], sign: i32) -> usize {
        let m = self.lattice.coords(p);
        let mut shifted = [0i32; 3];
        for a in 0..self.lattice.dim {
            shifted[a] = m[a] + sign * steps[a];
        }
        let wrapped = self.lattice.wrap(&shifted);
        self.lattice.index(&wrapped)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lattice_1d(n: usize) -> ParticleLattice {
        // L = 2*pi so delta = 1
        ParticleLattice::new(1, 2.0 * std::f64::consts::PI, n).unwrap()
    }

    #[test]
    fn box_modes_1d_window() {
        let lat = lattice_1d(5);
        let g = build_box_modes(&lat, 0.5, 1.5).unwrap();
        let mut ks: Vec<f64> = g.modes.iter().map(|m| m.k[0]).collect();
        ks.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(ks, vec![-1.0, 1.0]);
        for m in &g.modes {
            assert_eq!(m.weight, 1.0);
        }
    }

    #[test]
    fn box_modes_1d_wider_window() {
        let lat = lattice_1d(5);
        let g = build_box_modes(&lat, 0.5, 2.5).unwrap();
        let mut ks: Vec<f64> = g.modes.iter().map(|m| m.k[0]).collect();
        ks.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(ks, vec![-2.0, -1.0, 1.0, 2.0]);
    }

    #[test]
    fn box_modes_3d_shell() {
        // Brute-force enumeration of the 26 nonzero vectors of {-1,0,1}^3:
        // 6 unit vectors (|k|=1), 12 face diagonals (|k|=sqrt(2)),
        // 8 space diagonals (|k|=sqrt(3) > 2? no, sqrt(3)=1.732 <= 2).
        // Window [0.5, 2] keeps all with |k| in {1, sqrt2, sqrt3}. The spec
        // case asks for |k| <= 2 with lo 0.5 -- enumerate directly.
        let mut expected = 0;
        for x in -1i32..=1 {
            for y in -1i32..=1 {
                for z in -1i32..=1 {
                    if (x, y, z) == (0, 0, 0) {
                        continue;
                    }
                    let r = ((x * x + y * y + z * z) as f64).sqrt();
                    if (0.5..=2.0).contains(&r) {
                        expected += 1;
                    }
                }
            }
        }
        let lat = ParticleLattice::new(3, 2.0 * std::f64::consts::PI, 3).unwrap();
        let g = build_box_modes(&lat, 0.5, 2.0).unwrap();
        assert_eq!(g.len(), expected);
        // and the magnitude-resolved counts: 6 at |k|=1, 12 at sqrt(2), 8 at sqrt(3)
        let count_at = |r: f64| {
            g.modes
                .iter()
                .filter(|m| (m.omega - r).abs() < 1e-12)
                .count()
        };
        assert_eq!(count_at(1.0), 6);
        assert_eq!(count_at(2f64.sqrt()), 12);
        assert_eq!(count_at(3f64.sqrt()), 8);
    }

    #[test]
    fn box_modes_empty_window_errors() {
        let lat = lattice_1d(5);
        assert!(matches!(
            build_box_modes(&lat, 2.5, 3.5),
            Err(Error::EmptyModeWindow { .. })
        ));
    }

    #[test]
    fn box_modes_never_contain_zero() {
        let lat = lattice_1d(9);
        let g = build_box_modes(&lat, 0.0, 100.0).unwrap();
        assert!(g.modes.iter().all(|m| m.omega > 0.0));
        assert_eq!(g.len(), 8);
    }

    #[test]
    fn lattice_negation_symmetry_and_wrap() {
        let lat = ParticleLattice::new(2, 1.0, 5).unwrap();
        for idx in 0..lat.num_points() {
            let m = lat.coords(idx);
            let neg = [-m[0], -m[1], -m[2]];
            // negation stays on the lattice
            let j = lat.index(&lat.wrap(&neg));
            assert_eq!(lat.coords(j), lat.wrap(&neg));
            assert_eq!(lat.wrap(&neg), neg);
        }
        // wrap is periodic with period n
        assert_eq!(lat.wrap(&[3, 0, 0]), [-2, 0, 0]);
        assert_eq!(lat.wrap(&[-3, 4, 0]), [2, -1, 0]);
    }

    #[test]
    fn radial_shell_volume() {
        let g = build_radial_modes(3, 1.0, 2.0, 8, 6, false).unwrap();
        let vol: f64 = g.total_weight();
        let exact = 4.0 * std::f64::consts::PI / 3.0 * (8.0 - 1.0);
        assert!((vol - exact).abs() < 1e-10 * exact, "vol={vol} exact={exact}");
    }

    #[test]
    fn radial_one_over_k() {
        // int_{1<=|k|<=2} dk/|k| = 4 pi int_1^2 r dr = 6 pi
        let g = build_radial_modes(3, 1.0, 2.0, 12, 6, false).unwrap();
        let v: f64 = g.modes.iter().map(|m| m.weight / m.omega).sum();
        let exact = 6.0 * std::f64::consts::PI;
        assert!((v - exact).abs() < 1e-10 * exact);
    }

    #[test]
    fn radial_tail_substitution() {
        // self-energy-type tail: f(k) = 1/(k^2 (k^2 + |k|)) gives
        // int_{|k|>=1} f dk = 4 pi int_1^inf dr/(r^2+r) = 4 pi ln 2
        let g = build_radial_modes(3, 1.0, f64::INFINITY, 40, 4, true).unwrap();
        let v: f64 = g
            .modes
            .iter()
            .map(|m| {
                let w2 = m.omega * m.omega;
                m.weight / (w2 * (w2 + m.omega))
            })
            .sum();
        let exact = 4.0 * std::f64::consts::PI * 2f64.ln();
        assert!((v - exact).abs() < 1e-8 * exact, "v={v} exact={exact}");
    }

    #[test]
    fn radial_requires_declared_tail() {
        assert!(matches!(
            build_radial_modes(3, 1.0, f64::INFINITY, 8, 4, false),
            Err(Error::MissingTailSubstitution)
        ));
        assert!(matches!(
            build_radial_modes(2, 1.0, 2.0, 8, 4, false),
            Err(Error::RadialGridDim(2))
        ));
    }

    #[test]
    fn fock_sizes() {
        assert_eq!(enumerate_fock(2, 1).unwrap().len(), 3);
        assert_eq!(enumerate_fock(2, 2).unwrap().len(), 6);
        assert_eq!(enumerate_fock(3, 2).unwrap().len(), 10);
        // formula against brute force for all M <= 6, n_max <= 4
        for m in 1..=6usize {
            for nm in 0..=4usize {
                let mut count = 0usize;
                let total = (nm + 1).pow(m as u32);
                for code in 0..total {
                    let mut c = code;
                    let mut sum = 0;
                    for _ in 0..m {
                        sum += c % (nm + 1);
                        c /= nm + 1;
                    }
                    if sum <= nm {
                        count += 1;
                    }
                }
                assert_eq!(enumerate_fock(m, nm).unwrap().len(), count);
                assert_eq!(fock_dimension(m, nm).unwrap(), count);
            }
        }
    }

    #[test]
    fn fock_vacuum_first_lexicographic() {
        let f = enumerate_fock(3, 2).unwrap();
        assert!(f.states[0].iter().all(|&n| n == 0));
        for w in f.states.windows(2) {
            assert!(w[0] < w[1]);
        }
        assert_eq!(f.index_of(&[0, 0, 0]), Some(0));
        assert_eq!(f.index_of(&[2, 0, 0]), Some(f.len() - 1));
    }

    #[test]
    fn fock_overflow_guard() {
        assert!(matches!(
            enumerate_fock_capped(10, 4, 100),
            Err(Error::DimensionOverflow { .. })
        ));
    }

    #[test]
    fn tensor_basis_dims_and_roundtrip() {
        let lat = Arc::new(lattice_1d(3));
        let fock = Arc::new(enumerate_fock(2, 1).unwrap());
        let tb = TensorBasis::new(lat.clone(), fock).unwrap();
        assert_eq!(tb.total_dim, 27);

        let lat5 = Arc::new(lattice_1d(5));
        let fock6 = Arc::new(enumerate_fock(2, 2).unwrap());
        let tb5 = TensorBasis::new(lat5, fock6).unwrap();
        assert_eq!(tb5.total_dim, 150);

        // round-trip on 100 deterministic pseudo-random indices
        let mut x = 88172645463325252u64;
        for _ in 0..100 {
            x ^= x << 13;
            x ^= x >> 7;
            x ^= x << 17;
            let idx = (x % tb5.total_dim as u64) as usize;
            let (a, b, f) = tb5.unflatten(idx);
            assert_eq!(tb5.flatten(a, b, f), idx);
        }
    }

    #[test]
    fn grid_json_roundtrip() {
        let lat = lattice_1d(5);
        let g = build_box_modes(&lat, 0.5, 2.5).unwrap();
        let s = g.to_json();
        let g2 = ModeGrid::from_json(&s).unwrap();
        assert_eq!(g.len(), g2.len());
        assert_eq!(g.lo, g2.lo);
        assert_eq!(g.hi, g2.hi);
    }
}

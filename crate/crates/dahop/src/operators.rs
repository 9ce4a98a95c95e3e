//! Sparse sector operators: hopping, density-assisted correlation, parent
//! Hamiltonian, pair annihilation, correlators, and the particle-hole twin.
//!
//! All builders walk the domain basis configuration by configuration and
//! emit nonzeros column-wise; nothing dense is ever materialized during
//! assembly. Fermionic signs come from the two primitive rules in
//! [`crate::fockspace`].

use std::sync::Arc;

use ndarray::Array2;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fockspace::{annihilate_bit, create_bit, enumerate_sector, FockBasis, StateVector};
use crate::lattice::CouplingSet;

/// Assembly guard: refuse operators whose estimated nonzero count exceeds
/// this (≈4.8 GiB of entries).
pub const MAX_OPERATOR_NNZ: u128 = 300_000_000;

/// A sparse linear map between two fixed-`N` sector bases, stored
/// column-major (one sorted entry list per domain configuration).
#[derive(Debug, Clone)]
pub struct SectorOperator {
    domain: Arc<FockBasis>,
    codomain: Arc<FockBasis>,
    cols: Vec<Vec<(u32, Complex64)>>,
    is_real: bool,
}

impl SectorOperator {
    pub fn domain(&self) -> &Arc<FockBasis> {
        &self.domain
    }

    pub fn codomain(&self) -> &Arc<FockBasis> {
        &self.codomain
    }

    pub fn is_square(&self) -> bool {
        self.domain.len() == self.codomain.len()
            && self.domain.n_particles() == self.codomain.n_particles()
    }

    /// Every matrix element has zero imaginary part.
    pub fn is_real(&self) -> bool {
        self.is_real
    }

    pub fn nnz(&self) -> usize {
        self.cols.iter().map(Vec::len).sum()
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.codomain.len(), self.domain.len())
    }

    /// Assemble from a per-configuration term generator. `emit` receives the
    /// domain configuration and pushes `(target_config, coefficient)` pairs.
    pub fn assemble<F>(
        domain: Arc<FockBasis>,
        codomain: Arc<FockBasis>,
        is_real: bool,
        terms_per_config: usize,
        emit: F,
    ) -> Result<Self>
    where
        F: Fn(u64, &mut Vec<(u64, Complex64)>) + Sync,
    {
        let est = domain.len() as u128 * terms_per_config.max(1) as u128;
        if est > MAX_OPERATOR_NNZ {
            return Err(Error::InvalidParameter(format!(
                "estimated nonzero count {est} exceeds assembly cap {MAX_OPERATOR_NNZ}"
            )));
        }
        let cols: Vec<Vec<(u32, Complex64)>> = domain
            .configs()
            .par_iter()
            .map(|&config| {
                let mut raw: Vec<(u64, Complex64)> = Vec::new();
                emit(config, &mut raw);
                let mut entries: Vec<(u32, Complex64)> = raw
                    .into_iter()
                    .map(|(target, v)| {
                        let row = codomain
                            .index_of(target)
                            .expect("operator term landed outside the codomain sector");
                        (row as u32, v)
                    })
                    .collect();
                entries.sort_by_key(|e| e.0);
                // Merge duplicates, drop exact zeros.
                let mut merged: Vec<(u32, Complex64)> = Vec::with_capacity(entries.len());
                for (row, v) in entries {
                    match merged.last_mut() {
                        Some((r, acc)) if *r == row => *acc += v,
                        _ => merged.push((row, v)),
                    }
                }
                merged.retain(|(_, v)| v.norm_sqr() != 0.0);
                merged
            })
            .collect();
        Ok(Self {
            domain,
            codomain,
            cols,
            is_real,
        })
    }

    /// y = A x over raw amplitude slices.
    pub fn apply_slice(&self, x: &[Complex64]) -> Vec<Complex64> {
        debug_assert_eq!(x.len(), self.domain.len());
        let mut y = vec![Complex64::default(); self.codomain.len()];
        for (col, entries) in self.cols.iter().enumerate() {
            let xv = x[col];
            if xv == Complex64::default() {
                continue;
            }
            for &(row, v) in entries {
                y[row as usize] += v * xv;
            }
        }
        y
    }

    /// y = A† x over raw amplitude slices.
    pub fn apply_adjoint_slice(&self, x: &[Complex64]) -> Vec<Complex64> {
        debug_assert_eq!(x.len(), self.codomain.len());
        self.cols
            .iter()
            .map(|entries| {
                entries
                    .iter()
                    .map(|&(row, v)| v.conj() * x[row as usize])
                    .sum()
            })
            .collect()
    }

    /// Apply to a state with sector bookkeeping.
    pub fn apply(&self, state: &StateVector) -> Result<StateVector> {
        self.check_domain(state)?;
        Ok(StateVector {
            basis: Arc::clone(&self.codomain),
            amplitudes: self.apply_slice(&state.amplitudes),
        })
    }

    fn check_domain(&self, state: &StateVector) -> Result<()> {
        if state.basis.n_sites() != self.domain.n_sites()
            || state.basis.n_particles() != self.domain.n_particles()
        {
            return Err(Error::SectorMismatch {
                expected_sites: self.domain.n_sites(),
                expected_n: self.domain.n_particles(),
                got_sites: state.basis.n_sites(),
                got_n: state.basis.n_particles(),
            });
        }
        Ok(())
    }

    /// Entry-wise sum of two maps over the same sectors.
    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.shape() != other.shape()
            || self.domain.n_particles() != other.domain.n_particles()
            || self.codomain.n_particles() != other.codomain.n_particles()
        {
            return Err(Error::SectorMismatch {
                expected_sites: self.domain.n_sites(),
                expected_n: self.domain.n_particles(),
                got_sites: other.domain.n_sites(),
                got_n: other.domain.n_particles(),
            });
        }
        let cols = self
            .cols
            .iter()
            .zip(&other.cols)
            .map(|(a, b)| {
                let mut merged: Vec<(u32, Complex64)> = Vec::with_capacity(a.len() + b.len());
                let (mut i, mut j) = (0, 0);
                while i < a.len() || j < b.len() {
                    match (a.get(i), b.get(j)) {
                        (Some(&(ra, va)), Some(&(rb, _))) if ra < rb => {
                            merged.push((ra, va));
                            i += 1;
                        }
                        (Some(&(ra, _)), Some(&(rb, vb))) if rb < ra => {
                            merged.push((rb, vb));
                            j += 1;
                        }
                        (Some(&(ra, va)), Some(&(_, vb))) => {
                            let v = va + vb;
                            if v.norm_sqr() != 0.0 {
                                merged.push((ra, v));
                            }
                            i += 1;
                            j += 1;
                        }
                        (Some(&e), None) => {
                            merged.push(e);
                            i += 1;
                        }
                        (None, Some(&e)) => {
                            merged.push(e);
                            j += 1;
                        }
                        (None, None) => unreachable!(),
                    }
                }
                merged
            })
            .collect();
        Ok(Self {
            domain: Arc::clone(&self.domain),
            codomain: Arc::clone(&self.codomain),
            cols,
            is_real: self.is_real && other.is_real,
        })
    }

    pub fn scaled(mut self, factor: f64) -> Self {
        for col in &mut self.cols {
            for (_, v) in col {
                *v *= factor;
            }
        }
        self
    }

    /// Dense complex matrix (codomain × domain). Guarded by the caller's
    /// dimension cap; use for desk-scale sectors only.
    pub fn to_dense(&self) -> Array2<Complex64> {
        let mut m = Array2::<Complex64>::zeros(self.shape());
        for (col, entries) in self.cols.iter().enumerate() {
            for &(row, v) in entries {
                m[[row as usize, col]] = v;
            }
        }
        m
    }

    /// Dense real matrix when every entry is real.
    pub fn to_dense_real(&self) -> Option<Array2<f64>> {
        if !self.is_real {
            return None;
        }
        let mut m = Array2::<f64>::zeros(self.shape());
        for (col, entries) in self.cols.iter().enumerate() {
            for &(row, v) in entries {
                m[[row as usize, col]] = v.re;
            }
        }
        Some(m)
    }

    pub fn trace(&self) -> Complex64 {
        self.cols
            .iter()
            .enumerate()
            .map(|(col, entries)| {
                entries
                    .iter()
                    .find(|&&(row, _)| row as usize == col)
                    .map(|&(_, v)| v)
                    .unwrap_or_default()
            })
            .sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.cols
            .iter()
            .flatten()
            .map(|(_, v)| v.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// Spectral-norm estimate by power iteration on A†A with a fixed
    /// deterministic start vector. Slight underestimates are harmless for
    /// the relative residuals this scales; `iters` ≈ 20 is plenty.
    pub fn spectral_norm_est(&self, iters: usize) -> f64 {
        let dim = self.domain.len();
        if dim == 0 || self.codomain.len() == 0 || self.nnz() == 0 {
            return 0.0;
        }
        // SplitMix64 start vector: deterministic, no axis alignment.
        let mut s = 0x9e3779b97f4a7c15u64 ^ dim as u64;
        let mut v: Vec<Complex64> = (0..dim)
            .map(|_| {
                s = s.wrapping_add(0x9e3779b97f4a7c15);
                let mut z = s;
                z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
                z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
                z ^= z >> 31;
                Complex64::new((z >> 11) as f64 / (1u64 << 53) as f64 - 0.5, 0.0)
            })
            .collect();
        let mut lambda = 0.0f64;
        for _ in 0..iters {
            let w = self.apply_adjoint_slice(&self.apply_slice(&v));
            let norm = w.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
            if norm == 0.0 {
                return 0.0;
            }
            lambda = norm;
            v = w.into_iter().map(|a| a / norm).collect();
        }
        lambda.sqrt()
    }

    /// Write the coordinate-list text form, one `row col re im` line per
    /// nonzero, 0-based indices.
    pub fn write_coo<W: std::io::Write>(&self, mut w: W) -> Result<()> {
        for (col, entries) in self.cols.iter().enumerate() {
            for &(row, v) in entries {
                writeln!(w, "{} {} {} {}", row, col, v.re, v.im)?;
            }
        }
        Ok(())
    }
}

/// Nonzero entries of one matrix row, as (0-based bit, value) pairs.
fn row_support(m: &Array2<f64>, x: usize) -> Vec<(usize, f64)> {
    (0..m.ncols())
        .filter_map(|y| {
            let v = m[[x, y]];
            (v != 0.0).then_some((y, v))
        })
        .collect()
}

/// `H_hop = Σ t_{xy} c†_x c_y` on one sector.
pub fn build_hop(couplings: &CouplingSet, basis: &Arc<FockBasis>) -> Result<SectorOperator> {
    let n = couplings.n_sites();
    check_sites(couplings, basis)?;
    let is_real = couplings.is_real();
    // Directed pairs (x, y), t_{xy} ≠ 0, as 0-based bits.
    let mut pairs: Vec<(usize, usize, Complex64)> = Vec::new();
    for x in 0..n {
        for y in 0..n {
            if x != y && couplings.hop[[x, y]] != 0.0 {
                pairs.push((x, y, couplings.t_entry(x + 1, y + 1)));
            }
        }
    }
    let terms = pairs.len();
    SectorOperator::assemble(
        Arc::clone(basis),
        Arc::clone(basis),
        is_real,
        terms,
        move |config, out| {
            for &(x, y, t) in &pairs {
                if let Some((c1, s1)) = annihilate_bit(config, y) {
                    if let Some((c2, s2)) = create_bit(c1, x) {
                        out.push((c2, t * (s1 * s2)));
                    }
                }
            }
        },
    )
}

/// Middle projector of the correlated term.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum MiddleProjector {
    /// `c_x c†_x` — site `x` empty (the particle-language model).
    Empty,
    /// `c†_x c_x` — site `x` occupied (the hole-language twin).
    Occupied,
}

/// `Σ_x coeff_x (Σ_y q_{xy} c†_y) P_x (Σ_y' q_{xy'} c_y')` with `P_x` one of
/// the two on-site projectors. Number-conserving and Hermitian for real
/// coefficient vectors.
fn build_correlated(
    q: &Array2<f64>,
    coeff: &[f64],
    middle: MiddleProjector,
    basis: &Arc<FockBasis>,
) -> Result<SectorOperator> {
    let n = coeff.len();
    let supports: Vec<Vec<(usize, f64)>> = (0..n).map(|x| row_support(q, x)).collect();
    let terms: usize = supports.iter().map(|s| s.len() * s.len()).sum();
    SectorOperator::assemble(
        Arc::clone(basis),
        Arc::clone(basis),
        true,
        terms.max(1),
        move |config, out| {
            for x in 0..n {
                if coeff[x] == 0.0 {
                    continue;
                }
                let x_occupied = config & (1u64 << x) != 0;
                let pass = match middle {
                    MiddleProjector::Empty => !x_occupied,
                    MiddleProjector::Occupied => x_occupied,
                };
                if !pass {
                    continue;
                }
                for &(yp, q_xyp) in &supports[x] {
                    let Some((c1, s1)) = annihilate_bit(config, yp) else {
                        continue;
                    };
                    for &(y, q_xy) in &supports[x] {
                        let Some((c2, s2)) = create_bit(c1, y) else {
                            continue;
                        };
                        out.push((c2, Complex64::new(coeff[x] * q_xy * q_xyp * s1 * s2, 0.0)));
                    }
                }
            }
        },
    )
}

/// `H_cor = Σ_x A_x (Σ_y q_{xy} c†_y) c_x c†_x (Σ_y' q_{xy'} c_y')`.
pub fn build_cor(couplings: &CouplingSet, basis: &Arc<FockBasis>) -> Result<SectorOperator> {
    check_sites(couplings, basis)?;
    build_correlated(&couplings.q, &couplings.a, MiddleProjector::Empty, basis)
}

/// Parent Hamiltonian: the correlated term with all-positive weights `B_x`.
pub fn build_parent(couplings: &CouplingSet, basis: &Arc<FockBasis>) -> Result<SectorOperator> {
    check_sites(couplings, basis)?;
    let b = couplings
        .b
        .as_ref()
        .ok_or_else(|| Error::InvalidParameter("couplings carry no parent weights B".into()))?;
    if let Some(bad) = b.iter().find(|&&w| w <= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "parent weights must all be positive, found {bad}"
        )));
    }
    build_correlated(&couplings.q, b, MiddleProjector::Empty, basis)
}

/// `H = H_hop + H_cor`.
pub fn build_hamiltonian(couplings: &CouplingSet, basis: &Arc<FockBasis>) -> Result<SectorOperator> {
    build_hop(couplings, basis)?.add(&build_cor(couplings, basis)?)
}

/// The pair annihilation operator `Q = Σ_{x,y} q_{xy} c_x c_y`, mapping the
/// `N`-particle sector into `N − 2`.
pub fn build_q_operator(couplings: &CouplingSet, basis: &Arc<FockBasis>) -> Result<SectorOperator> {
    check_sites(couplings, basis)?;
    let n_particles = basis.n_particles();
    if n_particles < 2 {
        return Err(Error::EmptyCodomain(n_particles));
    }
    let codomain = enumerate_sector(basis.n_sites(), n_particles - 2)?;
    let n = couplings.n_sites();
    let mut pairs: Vec<(usize, usize, f64)> = Vec::new();
    for x in 0..n {
        for y in 0..n {
            if couplings.q[[x, y]] != 0.0 {
                pairs.push((x, y, couplings.q[[x, y]]));
            }
        }
    }
    let terms = pairs.len();
    SectorOperator::assemble(
        Arc::clone(basis),
        codomain,
        true,
        terms.max(1),
        move |config, out| {
            for &(x, y, qv) in &pairs {
                if let Some((c1, s1)) = annihilate_bit(config, y) {
                    if let Some((c2, s2)) = annihilate_bit(c1, x) {
                        out.push((c2, Complex64::new(qv * s1 * s2, 0.0)));
                    }
                }
            }
        },
    )
}

/// The creation-pair twin `Q̃ = Σ_{x,y} q_{xy} c†_x c†_y`, mapping `N` into
/// `N + 2`.
pub fn build_q_creation(couplings: &CouplingSet, basis: &Arc<FockBasis>) -> Result<SectorOperator> {
    check_sites(couplings, basis)?;
    let n_sites = basis.n_sites();
    let n_particles = basis.n_particles();
    if n_particles + 2 > n_sites {
        return Err(Error::ParticleNumberOutOfRange {
            n: n_particles + 2,
            sites: n_sites,
        });
    }
    let codomain = enumerate_sector(n_sites, n_particles + 2)?;
    let n = couplings.n_sites();
    let mut pairs: Vec<(usize, usize, f64)> = Vec::new();
    for x in 0..n {
        for y in 0..n {
            if couplings.q[[x, y]] != 0.0 {
                pairs.push((x, y, couplings.q[[x, y]]));
            }
        }
    }
    let terms = pairs.len();
    SectorOperator::assemble(
        Arc::clone(basis),
        codomain,
        true,
        terms.max(1),
        move |config, out| {
            for &(x, y, qv) in &pairs {
                if let Some((c1, s1)) = create_bit(config, y) {
                    if let Some((c2, s2)) = create_bit(c1, x) {
                        out.push((c2, Complex64::new(qv * s1 * s2, 0.0)));
                    }
                }
            }
        },
    )
}

/// `Σ_{(x,y)} c_x c_y` over an explicit list of ordered site pairs
/// (1-based), mapping `N` into `N − 2`. Used for the uniform-pair initial
/// state, where each bond contributes one term with a fixed orientation.
pub fn pair_annihilation_sum(
    pairs: &[(usize, usize)],
    basis: &Arc<FockBasis>,
) -> Result<SectorOperator> {
    let n_particles = basis.n_particles();
    if n_particles < 2 {
        return Err(Error::EmptyCodomain(n_particles));
    }
    let codomain = enumerate_sector(basis.n_sites(), n_particles - 2)?;
    let pairs = pairs.to_vec();
    let terms = pairs.len();
    SectorOperator::assemble(
        Arc::clone(basis),
        codomain,
        true,
        terms.max(1),
        move |config, out| {
            for &(x, y) in &pairs {
                if let Some((c1, s1)) = annihilate_bit(config, y - 1) {
                    if let Some((c2, s2)) = annihilate_bit(c1, x - 1) {
                        out.push((c2, Complex64::new(s1 * s2, 0.0)));
                    }
                }
            }
        },
    )
}

/// Diagonal on-site potential `Σ_x v_x n_x`.
pub fn build_onsite(potential: &[f64], basis: &Arc<FockBasis>) -> Result<SectorOperator> {
    let n = potential.len();
    if n != basis.n_sites() {
        return Err(Error::InvalidParameter(
            "potential length differs from site count".into(),
        ));
    }
    let potential = potential.to_vec();
    SectorOperator::assemble(
        Arc::clone(basis),
        Arc::clone(basis),
        true,
        1,
        move |config, out| {
            let v: f64 = (0..n)
                .filter(|&x| config & (1u64 << x) != 0)
                .map(|x| potential[x])
                .sum();
            if v != 0.0 {
                out.push((config, Complex64::new(v, 0.0)));
            }
        },
    )
}

/// Single-mode annihilation `Σ_x w_x c_x` (N → N−1).
pub fn mode_annihilation(weights: &[f64], basis: &Arc<FockBasis>) -> Result<SectorOperator> {
    let n_particles = basis.n_particles();
    if n_particles < 1 {
        return Err(Error::EmptyCodomain(n_particles));
    }
    let codomain = enumerate_sector(basis.n_sites(), n_particles - 1)?;
    let w = weights.to_vec();
    SectorOperator::assemble(
        Arc::clone(basis),
        codomain,
        true,
        w.len(),
        move |config, out| {
            for (x, &wx) in w.iter().enumerate() {
                if wx == 0.0 {
                    continue;
                }
                if let Some((c1, s1)) = annihilate_bit(config, x) {
                    out.push((c1, Complex64::new(wx * s1, 0.0)));
                }
            }
        },
    )
}

/// Mode-pair annihilation `(Σ_x w1_x c_x)(Σ_y w2_y c_y)` (N → N−2).
pub fn mode_pair_annihilation(
    w1: &[f64],
    w2: &[f64],
    basis: &Arc<FockBasis>,
) -> Result<SectorOperator> {
    let n_particles = basis.n_particles();
    if n_particles < 2 {
        return Err(Error::EmptyCodomain(n_particles));
    }
    let codomain = enumerate_sector(basis.n_sites(), n_particles - 2)?;
    let (w1, w2) = (w1.to_vec(), w2.to_vec());
    SectorOperator::assemble(
        Arc::clone(basis),
        codomain,
        true,
        w1.len() * w2.len(),
        move |config, out| {
            for (y, &wy) in w2.iter().enumerate() {
                if wy == 0.0 {
                    continue;
                }
                let Some((c1, s1)) = annihilate_bit(config, y) else {
                    continue;
                };
                for (x, &wx) in w1.iter().enumerate() {
                    if wx == 0.0 {
                        continue;
                    }
                    if let Some((c2, s2)) = annihilate_bit(c1, x) {
                        out.push((c2, Complex64::new(wx * wy * s1 * s2, 0.0)));
                    }
                }
            }
        },
    )
}

/// Mode hopping `(Σ_x w1_x c†_x)(Σ_y w2_y c_y)` (number conserving).
pub fn mode_hopping(w1: &[f64], w2: &[f64], basis: &Arc<FockBasis>) -> Result<SectorOperator> {
    let (w1, w2) = (w1.to_vec(), w2.to_vec());
    SectorOperator::assemble(
        Arc::clone(basis),
        Arc::clone(basis),
        true,
        w1.len() * w2.len(),
        move |config, out| {
            for (y, &wy) in w2.iter().enumerate() {
                if wy == 0.0 {
                    continue;
                }
                let Some((c1, s1)) = annihilate_bit(config, y) else {
                    continue;
                };
                for (x, &wx) in w1.iter().enumerate() {
                    if wx == 0.0 {
                        continue;
                    }
                    if let Some((c2, s2)) = create_bit(c1, x) {
                        out.push((c2, Complex64::new(wx * wy * s1 * s2, 0.0)));
                    }
                }
            }
        },
    )
}

/// Bond-averaged density-density correlator
/// `O = (1/|B|) Σ_{⟨x,y⟩∈B} ⟨ψ| n_x n_y |ψ⟩` for a normalized state.
pub fn bond_density_expectation(state: &StateVector, bonds: &[(usize, usize)]) -> Result<f64> {
    if bonds.is_empty() {
        return Err(Error::EmptyBonds);
    }
    state.check_normalized(1e-10)?;
    let mut acc = 0.0;
    for (&config, amp) in state.basis.configs().iter().zip(&state.amplitudes) {
        let p = amp.norm_sqr();
        if p == 0.0 {
            continue;
        }
        let mut occupied_bonds = 0usize;
        for &(x, y) in bonds {
            let mask = (1u64 << (x - 1)) | (1u64 << (y - 1));
            if config & mask == mask {
                occupied_bonds += 1;
            }
        }
        acc += p * occupied_bonds as f64;
    }
    Ok(acc / bonds.len() as f64)
}

/// The particle-hole transformed model: hopping and on-site data for
/// `H̃ = U† H U` with `U = ∏_x (c_x − c†_x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct HoleModel {
    /// Couplings with `hop → −hop` and `A → −A`; `Q` unchanged.
    pub couplings: CouplingSet,
    /// On-site potential `−A_x (Q²)_{xx}` accompanying the transformed
    /// correlated term.
    pub onsite: Vec<f64>,
}

/// Map a coupling set to its hole-language twin.
pub fn particle_hole_transform(couplings: &CouplingSet) -> HoleModel {
    let q2 = couplings.q.dot(&couplings.q);
    let onsite: Vec<f64> = couplings
        .a
        .iter()
        .enumerate()
        .map(|(x, &ax)| -ax * q2[[x, x]])
        .collect();
    let mut transformed = couplings.clone();
    transformed.hop.mapv_inplace(|v| -v);
    for ax in &mut transformed.a {
        *ax = -*ax;
    }
    HoleModel {
        couplings: transformed,
        onsite,
    }
}

impl HoleModel {
    /// `H̃ = −H_hop + (transformed correlated term) + (on-site potential)`.
    /// The sign flips live in `self.couplings` already.
    pub fn build_hamiltonian(&self, basis: &Arc<FockBasis>) -> Result<SectorOperator> {
        let hop = build_hop(&self.couplings, basis)?;
        let cor = build_correlated(
            &self.couplings.q,
            &self.couplings.a,
            MiddleProjector::Occupied,
            basis,
        )?;
        let onsite = build_onsite(&self.onsite, basis)?;
        hop.add(&cor)?.add(&onsite)
    }

    /// `Q̃ = Σ q_{xy} c†_x c†_y` on a sector.
    pub fn build_q_creation(&self, basis: &Arc<FockBasis>) -> Result<SectorOperator> {
        build_q_creation(&self.couplings, basis)
    }

    /// The transform is an involution on the coupling data.
    pub fn transform_back(&self) -> CouplingSet {
        let mut original = self.couplings.clone();
        original.hop.mapv_inplace(|v| -v);
        for ax in &mut original.a {
            *ax = -*ax;
        }
        original
    }
}

/// Number-conserving or sector-shifting operator families, used where a
/// commutator needs the same physical operator realized on two different
/// sectors.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FamilyKind {
    Hop,
    Cor,
    Parent,
    Hamiltonian,
    /// The pair annihilation operator `Q` (N → N−2).
    PairAnnihilation,
}

/// Lazily realizes one operator on whatever sector a state lives in.
#[derive(Debug, Clone, Copy)]
pub struct OperatorFamily<'a> {
    couplings: &'a CouplingSet,
    kind: FamilyKind,
}

impl<'a> OperatorFamily<'a> {
    pub fn new(couplings: &'a CouplingSet, kind: FamilyKind) -> Self {
        Self { couplings, kind }
    }

    pub fn on_sector(&self, basis: &Arc<FockBasis>) -> Result<SectorOperator> {
        match self.kind {
            FamilyKind::Hop => build_hop(self.couplings, basis),
            FamilyKind::Cor => build_cor(self.couplings, basis),
            FamilyKind::Parent => build_parent(self.couplings, basis),
            FamilyKind::Hamiltonian => build_hamiltonian(self.couplings, basis),
            FamilyKind::PairAnnihilation => build_q_operator(self.couplings, basis),
        }
    }

    pub fn apply(&self, state: &StateVector) -> Result<StateVector> {
        self.on_sector(&state.basis)?.apply(state)
    }
}

/// `(AB − BA)|state⟩` with each family realized on the sectors the
/// composition actually visits.
pub fn commutator_apply(
    a: &OperatorFamily,
    b: &OperatorFamily,
    state: &StateVector,
) -> Result<StateVector> {
    let mut ab = a.apply(&b.apply(state)?)?;
    let ba = b.apply(&a.apply(state)?)?;
    if ab.basis.n_particles() != ba.basis.n_particles()
        || ab.basis.n_sites() != ba.basis.n_sites()
    {
        return Err(Error::SectorMismatch {
            expected_sites: ab.basis.n_sites(),
            expected_n: ab.basis.n_particles(),
            got_sites: ba.basis.n_sites(),
            got_n: ba.basis.n_particles(),
        });
    }
    ab.sub_assign(&ba);
    Ok(ab)
}

fn check_sites(couplings: &CouplingSet, basis: &Arc<FockBasis>) -> Result<()> {
    if couplings.n_sites() != basis.n_sites() {
        return Err(Error::InvalidParameter(format!(
            "couplings are for {} sites, basis has {}",
            couplings.n_sites(),
            basis.n_sites()
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fockspace::filled_state;
    use crate::lattice::{build_chain, sample_couplings, Boundary, CouplingMode, SamplingRanges};

    fn two_site_unit() -> CouplingSet {
        let lat = build_chain(2, Boundary::Open).unwrap();
        let ranges = SamplingRanges {
            t: (1.0, 1.0),
            a: (0.3, 0.3),
            b: None,
        };
        sample_couplings(&lat, ranges, 0, CouplingMode::Bipartite).unwrap()
    }

    #[test]
    fn two_site_hop_matrix() {
        let c = two_site_unit();
        let basis = enumerate_sector(2, 1).unwrap();
        let h = build_hop(&c, &basis).unwrap();
        let dense = h.to_dense_real().unwrap();
        assert_eq!(dense[[0, 0]], 0.0);
        assert_eq!(dense[[0, 1]], 1.0);
        assert_eq!(dense[[1, 0]], 1.0);
        assert_eq!(dense[[1, 1]], 0.0);
    }

    #[test]
    fn single_particle_hop_equals_t() {
        let lat = build_chain(5, Boundary::Open).unwrap();
        let c = sample_couplings(&lat, SamplingRanges::standard(), 9, CouplingMode::Bipartite)
            .unwrap();
        let basis = enumerate_sector(5, 1).unwrap();
        let h = build_hop(&c, &basis).unwrap().to_dense_real().unwrap();
        // Basis configs are 1<<0, 1<<1, ... so ordering matches site order.
        for x in 0..5 {
            for y in 0..5 {
                assert!((h[[x, y]] - c.hop[[x, y]]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn hop_annihilates_filled_state() {
        let c = two_site_unit();
        let filled = filled_state(2).unwrap();
        let h = build_hop(&c, &filled.basis).unwrap();
        let out = h.apply(&filled).unwrap();
        assert!(out.norm() < 1e-15);
    }

    #[test]
    fn cor_annihilates_filled_state() {
        let lat = build_chain(6, Boundary::Open).unwrap();
        let c = sample_couplings(&lat, SamplingRanges::standard(), 21, CouplingMode::Bipartite)
            .unwrap();
        let filled = filled_state(6).unwrap();
        let hc = build_cor(&c, &filled.basis).unwrap();
        assert!(hc.apply(&filled).unwrap().norm() < 1e-14);
    }

    #[test]
    fn zero_a_gives_zero_cor() {
        let lat = build_chain(4, Boundary::Open).unwrap();
        let ranges = SamplingRanges {
            t: (0.5, 1.5),
            a: (0.0, 0.0),
            b: None,
        };
        let c = sample_couplings(&lat, ranges, 2, CouplingMode::Bipartite).unwrap();
        let basis = enumerate_sector(4, 2).unwrap();
        let hc = build_cor(&c, &basis).unwrap();
        assert_eq!(hc.nnz(), 0);
    }

    #[test]
    fn q_on_two_site_filled_state() {
        let c = two_site_unit();
        let filled = filled_state(2).unwrap();
        let q = build_q_operator(&c, &filled.basis).unwrap();
        let out = q.apply(&filled).unwrap();
        // Q|11⟩ = −2|00⟩ under the crate sign convention.
        assert_eq!(out.basis.n_particles(), 0);
        assert!((out.amplitudes[0] - Complex64::new(-2.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn q_rejected_below_two_particles() {
        let c = two_site_unit();
        let basis = enumerate_sector(2, 1).unwrap();
        assert!(matches!(
            build_q_operator(&c, &basis),
            Err(Error::EmptyCodomain(1))
        ));
    }

    #[test]
    fn q_lands_in_zero_particle_sector() {
        let lat = build_chain(4, Boundary::Open).unwrap();
        let c = sample_couplings(&lat, SamplingRanges::standard(), 4, CouplingMode::Bipartite)
            .unwrap();
        let basis = enumerate_sector(4, 2).unwrap();
        let q = build_q_operator(&c, &basis).unwrap();
        assert_eq!(q.codomain().n_particles(), 0);
    }

    #[test]
    fn bond_correlator_extremes() {
        let bonds = vec![(1, 2)];
        let filled = filled_state(2).unwrap();
        assert!((bond_density_expectation(&filled, &bonds).unwrap() - 1.0).abs() < 1e-15);
        let vac = crate::fockspace::vacuum_state(2).unwrap();
        assert_eq!(bond_density_expectation(&vac, &bonds).unwrap(), 0.0);
        assert!(matches!(
            bond_density_expectation(&filled, &[]),
            Err(Error::EmptyBonds)
        ));
    }

    #[test]
    fn commutator_of_operator_with_itself_vanishes() {
        let lat = build_chain(4, Boundary::Open).unwrap();
        let c = sample_couplings(&lat, SamplingRanges::standard(), 8, CouplingMode::Bipartite)
            .unwrap();
        let basis = enumerate_sector(4, 2).unwrap();
        let psi = StateVector::basis_state(basis, 0b0101).unwrap();
        let h = OperatorFamily::new(&c, FamilyKind::Hamiltonian);
        let out = commutator_apply(&h, &h, &psi).unwrap();
        assert!(out.norm() < 1e-14);
    }

    #[test]
    fn hop_commutes_with_pair_annihilation() {
        let lat = build_chain(6, Boundary::Open).unwrap();
        for seed in 0..5 {
            let c =
                sample_couplings(&lat, SamplingRanges::standard(), seed, CouplingMode::Bipartite)
                    .unwrap();
            let basis = enumerate_sector(6, 3).unwrap();
            let mut psi = StateVector::zero(Arc::clone(&basis));
            // Deterministic pseudo-random test vector.
            for (i, a) in psi.amplitudes.iter_mut().enumerate() {
                *a = Complex64::new(((i * 37 + 11) % 17) as f64 - 8.0, ((i * 53) % 13) as f64);
            }
            psi.normalize();
            let hop = OperatorFamily::new(&c, FamilyKind::Hop);
            let q = OperatorFamily::new(&c, FamilyKind::PairAnnihilation);
            let out = commutator_apply(&hop, &q, &psi).unwrap();
            assert!(out.norm() < 1e-12, "seed {seed}: ‖[H_hop,Q]ψ‖ = {}", out.norm());
        }
    }

    #[test]
    fn full_commutator_annihilates_filled_state() {
        let lat = build_chain(6, Boundary::Open).unwrap();
        let c = sample_couplings(&lat, SamplingRanges::standard(), 3, CouplingMode::Bipartite)
            .unwrap();
        let filled = filled_state(6).unwrap();
        let h = OperatorFamily::new(&c, FamilyKind::Hamiltonian);
        let q = OperatorFamily::new(&c, FamilyKind::PairAnnihilation);
        let out = commutator_apply(&h, &q, &filled).unwrap();
        assert!(out.norm() < 1e-12);
    }

    #[test]
    fn parent_requires_positive_weights() {
        let lat = build_chain(4, Boundary::Open).unwrap();
        let mut c = sample_couplings(
            &lat,
            SamplingRanges::standard().with_b((0.5, 1.5)),
            1,
            CouplingMode::Bipartite,
        )
        .unwrap();
        let basis = enumerate_sector(4, 2).unwrap();
        assert!(build_parent(&c, &basis).is_ok());
        c.b.as_mut().unwrap()[2] = -0.1;
        assert!(build_parent(&c, &basis).is_err());
    }

    #[test]
    fn parent_equals_cor_with_renamed_coefficients() {
        let lat = build_chain(4, Boundary::Open).unwrap();
        let mut c = sample_couplings(
            &lat,
            SamplingRanges::standard().with_b((0.5, 1.5)),
            6,
            CouplingMode::Bipartite,
        )
        .unwrap();
        let basis = enumerate_sector(4, 2).unwrap();
        let parent = build_parent(&c, &basis).unwrap().to_dense();
        c.a = c.b.clone().unwrap();
        let cor = build_cor(&c, &basis).unwrap().to_dense();
        let diff = (&parent - &cor).iter().map(|v| v.norm()).fold(0.0, f64::max);
        assert!(diff < 1e-15);
    }

    #[test]
    fn double_particle_hole_transform_is_identity() {
        let lat = build_chain(4, Boundary::Open).unwrap();
        let c = sample_couplings(&lat, SamplingRanges::standard(), 12, CouplingMode::Bipartite)
            .unwrap();
        let hole = particle_hole_transform(&c);
        assert_eq!(hole.transform_back(), c);
    }

    #[test]
    fn coo_export_round_trips_entry_count() {
        let c = two_site_unit();
        let basis = enumerate_sector(2, 1).unwrap();
        let h = build_hop(&c, &basis).unwrap();
        let mut buf = Vec::new();
        h.write_coo(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), h.nnz());
    }
}

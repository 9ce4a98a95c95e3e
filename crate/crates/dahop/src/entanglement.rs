//! Reduced density matrices for site bipartitions of fermionic states,
//! von Neumann entropy, and the random-state average-entropy baseline.
//!
//! Tracing out fermionic modes needs one sign bookkeeping step that spin
//! systems hide: the global mode ordering is first permuted so all `A`
//! sites precede all `B` sites, and each basis amplitude picks up the
//! parity of that permutation restricted to its occupied sites. For
//! number-conserving states the resulting `ρ_A` is block diagonal in the
//! `A`-side particle number, so the spectrum is computed block by block.

use std::sync::Arc;

use ndarray::Array2;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fockspace::{enumerate_sector, FockBasis, StateVector};
use crate::linalg::eigh_complex;

/// A two-block partition of the site labels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Bipartition {
    /// Sites of subsystem `A`, ascending 1-based labels.
    pub sites_a: Vec<usize>,
    /// The complement, ascending.
    pub sites_b: Vec<usize>,
    pub n_sites: usize,
}

impl Bipartition {
    /// Build from the `A` block; `B` is the complement. Both must be
    /// nonempty.
    pub fn new(n_sites: usize, sites_a: impl IntoIterator<Item = usize>) -> Result<Self> {
        let mut in_a = vec![false; n_sites];
        for s in sites_a {
            if s == 0 || s > n_sites {
                return Err(Error::InvalidParameter(format!(
                    "site {s} outside 1..={n_sites}"
                )));
            }
            if in_a[s - 1] {
                return Err(Error::InvalidParameter(format!("duplicate site {s}")));
            }
            in_a[s - 1] = true;
        }
        let sites_a: Vec<usize> = (1..=n_sites).filter(|&s| in_a[s - 1]).collect();
        let sites_b: Vec<usize> = (1..=n_sites).filter(|&s| !in_a[s - 1]).collect();
        if sites_a.is_empty() || sites_b.is_empty() {
            return Err(Error::InvalidParameter(
                "both blocks of a bipartition must be nonempty".into(),
            ));
        }
        Ok(Self {
            sites_a,
            sites_b,
            n_sites,
        })
    }

    /// The half-system split used for the entanglement figures:
    /// `A = {1, …, ⌈n/2⌉}`.
    pub fn half(n_sites: usize) -> Result<Self> {
        Self::new(n_sites, 1..=n_sites.div_ceil(2))
    }
}

/// One fixed-`N_A` block of a reduced density matrix.
#[derive(Debug, Clone)]
pub struct RdmBlock {
    /// Particle number on the `A` side.
    pub n_a: usize,
    /// Basis of `A`-subconfigurations for this block (bit `i` = `i`-th
    /// site of `A` in ascending label order).
    pub a_basis: Arc<FockBasis>,
    /// Hermitian PSD block matrix.
    pub matrix: Array2<Complex64>,
}

/// Reduced density matrix over the `A` Fock space, stored by particle
/// number block; entries between different `N_A` vanish identically for
/// number-conserving states.
#[derive(Debug, Clone)]
pub struct ReducedDensityMatrix {
    pub blocks: Vec<RdmBlock>,
    pub a_sites: Vec<usize>,
}

impl ReducedDensityMatrix {
    pub fn trace(&self) -> f64 {
        self.blocks
            .iter()
            .map(|b| b.matrix.diag().iter().map(|v| v.re).sum::<f64>())
            .sum()
    }

    /// All eigenvalues, descending.
    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        let mut all = Vec::new();
        for block in &self.blocks {
            let (w, _) = eigh_complex(&block.matrix, false)?;
            all.extend(w);
        }
        all.sort_by(|a, b| b.total_cmp(a));
        Ok(all)
    }

    /// Dense 2^|A| × 2^|A| matrix with rows/columns indexed by the
    /// `A`-subconfiguration bit pattern.
    pub fn to_dense(&self) -> Array2<Complex64> {
        let dim = 1usize << self.a_sites.len();
        let mut m = Array2::zeros((dim, dim));
        for block in &self.blocks {
            for (i, &ci) in block.a_basis.configs().iter().enumerate() {
                for (j, &cj) in block.a_basis.configs().iter().enumerate() {
                    m[[ci as usize, cj as usize]] = block.matrix[[i, j]];
                }
            }
        }
        m
    }

    /// Von Neumann entropy in nats from the block spectrum.
    pub fn entropy(&self) -> Result<f64> {
        Ok(entropy_from_eigenvalues(&self.eigenvalues()?))
    }
}

fn entropy_from_eigenvalues(eigs: &[f64]) -> f64 {
    eigs.iter()
        .filter(|&&l| l > 1e-14)
        .map(|&l| -l * l.ln())
        .sum()
}

/// Parity sign of reordering the occupied sites of `config` from global
/// ascending order into (A ascending, then B ascending): −1 per occupied
/// (A-site, B-site) pair with the B label smaller.
fn reorder_sign(config: u64, a_mask: u64) -> f64 {
    let mut crossings = 0u32;
    let mut b_seen = 0u32;
    let mut rest = config;
    while rest != 0 {
        let bit = rest.trailing_zeros();
        let site_mask = 1u64 << bit;
        if a_mask & site_mask != 0 {
            crossings += b_seen;
        } else {
            b_seen += 1;
        }
        rest &= rest - 1;
    }
    if crossings % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Gather the amplitude matrices M[N_A] with entries ψ(a, b) × sign, one
/// per A-side particle number.
fn amplitude_blocks(
    state: &StateVector,
    part: &Bipartition,
) -> Result<Vec<(usize, Arc<FockBasis>, Arc<FockBasis>, Array2<Complex64>)>> {
    let n = state.basis.n_sites();
    if part.n_sites != n {
        return Err(Error::InvalidParameter(format!(
            "bipartition is over {} sites, state over {n}",
            part.n_sites
        )));
    }
    let n_particles = state.basis.n_particles();
    let na_sites = part.sites_a.len();
    let nb_sites = part.sites_b.len();
    let a_mask: u64 = part.sites_a.iter().map(|&s| 1u64 << (s - 1)).sum();

    // Map global bit position → position within its block.
    let mut a_pos = vec![0usize; n];
    for (i, &s) in part.sites_a.iter().enumerate() {
        a_pos[s - 1] = i;
    }
    let mut b_pos = vec![0usize; n];
    for (i, &s) in part.sites_b.iter().enumerate() {
        b_pos[s - 1] = i;
    }

    let lo = n_particles.saturating_sub(nb_sites);
    let hi = n_particles.min(na_sites);
    let mut blocks = Vec::new();
    for n_a in lo..=hi {
        let a_basis = enumerate_sector(na_sites, n_a)?;
        let b_basis = enumerate_sector(nb_sites, n_particles - n_a)?;
        blocks.push((
            n_a,
            a_basis.clone(),
            b_basis.clone(),
            Array2::<Complex64>::zeros((a_basis.len(), b_basis.len())),
        ));
    }

    for (&config, &amp) in state.basis.configs().iter().zip(&state.amplitudes) {
        if amp == Complex64::default() {
            continue;
        }
        let mut a_sub = 0u64;
        let mut b_sub = 0u64;
        let mut rest = config;
        while rest != 0 {
            let bit = rest.trailing_zeros() as usize;
            if a_mask & (1u64 << bit) != 0 {
                a_sub |= 1u64 << a_pos[bit];
            } else {
                b_sub |= 1u64 << b_pos[bit];
            }
            rest &= rest - 1;
        }
        let n_a = a_sub.count_ones() as usize;
        let sign = reorder_sign(config, a_mask);
        let block = &mut blocks[n_a - lo];
        let i = block.1.index_of(a_sub).expect("A subconfig in basis");
        let j = block.2.index_of(b_sub).expect("B subconfig in basis");
        block.3[[i, j]] += amp * sign;
    }
    Ok(blocks)
}

/// `ρ_A = Tr_B |ψ⟩⟨ψ|` for a normalized state.
pub fn reduced_density_matrix(
    state: &StateVector,
    part: &Bipartition,
) -> Result<ReducedDensityMatrix> {
    state.check_normalized(1e-10)?;
    let blocks = amplitude_blocks(state, part)?;
    let rdm_blocks = blocks
        .into_iter()
        .map(|(n_a, a_basis, _b_basis, m)| {
            // ρ block = M M†.
            let mh = m.map(|v| v.conj()).reversed_axes();
            RdmBlock {
                n_a,
                a_basis,
                matrix: m.dot(&mh),
            }
        })
        .collect();
    Ok(ReducedDensityMatrix {
        blocks: rdm_blocks,
        a_sites: part.sites_a.clone(),
    })
}

/// Half-system entanglement entropy of a normalized state, in nats.
/// Equivalent to `reduced_density_matrix(..).entropy()` but skips the ρ
/// assembly: the nonzero spectrum of `M M†` is the squared singular-value
/// spectrum of each amplitude block.
pub fn entropy_of_state(state: &StateVector, part: &Bipartition) -> Result<f64> {
    state.check_normalized(1e-10)?;
    let blocks = amplitude_blocks(state, part)?;
    let mut entropy = 0.0;
    for (_, _, _, m) in blocks {
        // Eigenvalues of the smaller Gram matrix of M.
        let (rows, cols) = (m.nrows(), m.ncols());
        let gram = if rows <= cols {
            let mh = m.map(|v| v.conj()).reversed_axes();
            m.dot(&mh)
        } else {
            let mh = m.map(|v| v.conj()).reversed_axes();
            mh.dot(&m)
        };
        let (w, _) = eigh_complex(&gram, false)?;
        entropy += entropy_from_eigenvalues(&w);
    }
    Ok(entropy)
}

/// Von Neumann entropy `−Tr ρ ln ρ` (nats) of a dense trace-one PSD
/// matrix. Eigenvalues below 1e−14 are dropped; a trace deviating from 1
/// by more than 1e−8 is rejected.
pub fn von_neumann_entropy(rho: &Array2<Complex64>) -> Result<f64> {
    if rho.nrows() != rho.ncols() {
        return Err(Error::InvalidDensity("matrix is not square".into()));
    }
    let tr: f64 = rho.diag().iter().map(|v| v.re).sum();
    if (tr - 1.0).abs() > 1e-8 {
        return Err(Error::InvalidDensity(format!("trace = {tr}")));
    }
    let (w, _) = eigh_complex(rho, false)?;
    if let Some(&min) = w.first() {
        if min < -1e-8 {
            return Err(Error::InvalidDensity(format!(
                "negative eigenvalue {min}"
            )));
        }
    }
    Ok(entropy_from_eigenvalues(&w))
}

/// Mean entanglement entropy (nats) of random fixed-`N` states across a
/// half-system cut, as a function of sites and filling `n = N/|Λ|`:
///
/// ```text
/// S = ½[(n−1)ln(1−n) − n ln n]·|Λ|
///     − √(n(1−n)/2π)·|ln((1−n)/n)|·√|Λ|
///     + (1 − 2 ln 2)/4
/// ```
pub fn average_random_entropy(n_sites: usize, n_particles: usize) -> Result<f64> {
    if n_particles == 0 || n_particles >= n_sites {
        return Err(Error::InvalidParameter(
            "average entropy needs 0 < N < |Λ|".into(),
        ));
    }
    let l = n_sites as f64;
    let n = n_particles as f64 / l;
    let leading = 0.5 * ((n - 1.0) * (1.0 - n).ln() - n * n.ln()) * l;
    let sqrt_term = ((n * (1.0 - n)) / (2.0 * std::f64::consts::PI)).sqrt()
        * ((1.0 - n) / n).ln().abs()
        * l.sqrt();
    let constant = (1.0 - 2.0 * std::f64::consts::LN_2) / 4.0;
    Ok(leading - sqrt_term + constant)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fockspace::StateVector;

    #[test]
    fn product_state_gives_rank_one_projector() {
        // |1100⟩ on 4 sites, A = {1, 2} fully occupied.
        let basis = enumerate_sector(4, 2).unwrap();
        let state = StateVector::basis_state(basis, 0b0011).unwrap();
        let part = Bipartition::new(4, [1, 2]).unwrap();
        let rho = reduced_density_matrix(&state, &part).unwrap();
        assert!((rho.trace() - 1.0).abs() < 1e-12);
        let eigs = rho.eigenvalues().unwrap();
        assert!((eigs[0] - 1.0).abs() < 1e-12);
        assert!(eigs[1..].iter().all(|&l| l.abs() < 1e-12));
        assert!(rho.entropy().unwrap().abs() < 1e-12);
    }

    #[test]
    fn singlet_like_state_is_maximally_mixed() {
        // (|10⟩ − |01⟩)/√2 over 2 sites, A = site 1.
        let basis = enumerate_sector(2, 1).unwrap();
        let mut state = StateVector::zero(basis);
        let i10 = state.basis.index_of(0b01).unwrap(); // site 1 occupied
        let i01 = state.basis.index_of(0b10).unwrap();
        state.amplitudes[i10] = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        state.amplitudes[i01] = Complex64::new(-std::f64::consts::FRAC_1_SQRT_2, 0.0);
        let part = Bipartition::new(2, [1]).unwrap();
        let rho = reduced_density_matrix(&state, &part).unwrap();
        let dense = rho.to_dense();
        assert!((dense[[0, 0]].re - 0.5).abs() < 1e-12);
        assert!((dense[[1, 1]].re - 0.5).abs() < 1e-12);
        assert!(dense[[0, 1]].norm() < 1e-12);
        assert!((rho.entropy().unwrap() - std::f64::consts::LN_2).abs() < 1e-12);
    }

    #[test]
    fn entropy_symmetric_between_blocks() {
        let basis = enumerate_sector(6, 3).unwrap();
        let mut state = StateVector::zero(basis);
        for (i, a) in state.amplitudes.iter_mut().enumerate() {
            *a = Complex64::new((i as f64 * 0.9).sin(), (i as f64 * 0.4).cos());
        }
        state.normalize();
        let part = Bipartition::new(6, [1, 2]).unwrap();
        let flipped = Bipartition::new(6, [3, 4, 5, 6]).unwrap();
        let sa = entropy_of_state(&state, &part).unwrap();
        let sb = entropy_of_state(&state, &flipped).unwrap();
        assert!((sa - sb).abs() < 1e-10, "S(A)={sa}, S(B)={sb}");
    }

    #[test]
    fn pure_and_maximally_mixed_reference_entropies() {
        let mut rho = Array2::<Complex64>::zeros((3, 3));
        rho[[0, 0]] = Complex64::new(1.0, 0.0);
        assert!(von_neumann_entropy(&rho).unwrap().abs() < 1e-12);
        let d = 4;
        let mixed = Array2::from_diag_elem(d, Complex64::new(0.25, 0.0));
        assert!((von_neumann_entropy(&mixed).unwrap() - (d as f64).ln()).abs() < 1e-12);
    }

    #[test]
    fn invalid_trace_rejected() {
        let rho = Array2::from_diag_elem(2, Complex64::new(1.0, 0.0));
        assert!(matches!(
            von_neumann_entropy(&rho),
            Err(Error::InvalidDensity(_))
        ));
    }

    #[test]
    fn half_filling_average_entropy_closed_form() {
        // At half filling the √|Λ| term vanishes: |ln((1−n)/n)| = 0.
        let s = average_random_entropy(18, 9).unwrap();
        let expected = 9.0 * std::f64::consts::LN_2 + (1.0 - 2.0 * std::f64::consts::LN_2) / 4.0;
        assert!((s - expected).abs() < 1e-12);
        assert!((s - 6.1417).abs() < 1e-4);
    }

    #[test]
    fn average_entropy_rejects_trivial_fillings() {
        assert!(average_random_entropy(10, 0).is_err());
        assert!(average_random_entropy(10, 10).is_err());
    }

    #[test]
    fn rdm_blocks_follow_particle_number() {
        let basis = enumerate_sector(6, 2).unwrap();
        let mut state = StateVector::zero(basis);
        for (i, a) in state.amplitudes.iter_mut().enumerate() {
            *a = Complex64::new(1.0 + i as f64, 0.5);
        }
        state.normalize();
        let part = Bipartition::half(6).unwrap();
        let rho = reduced_density_matrix(&state, &part).unwrap();
        let nas: Vec<usize> = rho.blocks.iter().map(|b| b.n_a).collect();
        assert_eq!(nas, vec![0, 1, 2]);
        assert!((rho.trace() - 1.0).abs() < 1e-12);
        // PSD within tolerance.
        let eigs = rho.eigenvalues().unwrap();
        assert!(eigs.iter().all(|&l| l > -1e-12));
    }
}

//! Ground-space census of the parent Hamiltonian.
//!
//! `H_par` is the correlated term with all-positive weights, hence
//! positive semidefinite with the scar tower in its kernel. When the two
//! sublattices have equal size and `Q` is regular and connected, the
//! kernel over the whole Fock space is exactly the tower: one zero mode in
//! every even-distance sector, `|Λ|/2 + 1` in total. The census counts
//! zero eigenvalues sector by sector (the parent Hamiltonian conserves
//! particle number) and reports the hypothesis checks alongside.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fockspace::{enumerate_sector, StateVector};
use crate::lattice::{check_theorem_hypotheses, CouplingSet, HypothesisReport, LatticeSpec};
use crate::operators::build_parent;
use crate::scars::ScarTower;
use crate::spectra::diagonalize_with_cap;

/// Absolute floor under the norm-scaled zero threshold.
pub const ZERO_TOL_FLOOR: f64 = 1e-12;
/// Relative zero threshold: |E| < `ZERO_TOL_REL`·‖H_par‖ counts as zero.
pub const ZERO_TOL_REL: f64 = 1e-10;
/// Default system-size guard for the full-Fock-space census.
pub const DEFAULT_MAX_SITES: usize = 16;

#[derive(Debug, Clone, Serialize)]
pub struct SectorCensus {
    pub n_particles: usize,
    pub dim: usize,
    /// Number of eigenvalues below the zero threshold.
    pub zero_count: usize,
    /// The threshold used for this sector.
    pub threshold: f64,
    /// Smallest eigenvalue (PSD check: must not dip below −threshold).
    pub min_eigenvalue: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CensusReport {
    pub per_sector: Vec<SectorCensus>,
    pub total_zero_modes: usize,
    pub hypotheses: HypothesisReport,
    /// `|Λ|/2 + 1` when `|Λ|` is even, the theorem's predicted count.
    pub predicted: Option<usize>,
}

/// The census plus the kept zero-eigenvectors per sector.
pub struct CensusVectors {
    pub report: CensusReport,
    /// For each sector (same order as `report.per_sector`): the zero-space
    /// basis vectors.
    pub zero_vectors: Vec<Vec<StateVector>>,
}

/// Count zero modes of `H_par` across the whole Fock space.
pub fn zero_mode_census(couplings: &CouplingSet, lattice: &LatticeSpec) -> Result<CensusReport> {
    Ok(census_impl(couplings, lattice, false)?.report)
}

/// As [`zero_mode_census`], also keeping the zero-space eigenvectors.
pub fn zero_mode_census_with_vectors(
    couplings: &CouplingSet,
    lattice: &LatticeSpec,
) -> Result<CensusVectors> {
    census_impl(couplings, lattice, true)
}

fn census_impl(
    couplings: &CouplingSet,
    lattice: &LatticeSpec,
    keep_vectors: bool,
) -> Result<CensusVectors> {
    let n_sites = lattice.n_sites;
    if n_sites > DEFAULT_MAX_SITES {
        return Err(Error::InvalidParameter(format!(
            "full-Fock-space census guarded at {DEFAULT_MAX_SITES} sites, got {n_sites}"
        )));
    }
    let labels = lattice.labels.as_ref().ok_or_else(|| {
        Error::InvalidParameter("census needs a bipartite lattice with labels".into())
    })?;
    let hypotheses = check_theorem_hypotheses(&couplings.q, labels);

    let mut per_sector = Vec::with_capacity(n_sites + 1);
    let mut zero_vectors = Vec::with_capacity(n_sites + 1);
    let mut total = 0usize;
    for n in 0..=n_sites {
        let basis = enumerate_sector(n_sites, n)?;
        let h_par = build_parent(couplings, &basis)?;
        let spec = diagonalize_with_cap(&h_par, keep_vectors, basis.len().max(1))?;
        let scale = spec
            .eigenvalues
            .iter()
            .map(|e| e.abs())
            .fold(0.0, f64::max);
        let threshold = (ZERO_TOL_REL * scale).max(ZERO_TOL_FLOOR);
        let zero_count = spec
            .eigenvalues
            .iter()
            .filter(|e| e.abs() < threshold)
            .count();
        let min_eigenvalue = spec.eigenvalues.first().copied().unwrap_or(0.0);
        total += zero_count;
        if keep_vectors {
            let vectors = spec.eigenvectors.as_ref().expect("vectors requested");
            let kept: Vec<StateVector> = spec
                .eigenvalues
                .iter()
                .enumerate()
                .filter(|(_, e)| e.abs() < threshold)
                .map(|(j, _)| StateVector {
                    basis: basis.clone(),
                    amplitudes: vectors.column(j),
                })
                .collect();
            zero_vectors.push(kept);
        } else {
            zero_vectors.push(Vec::new());
        }
        per_sector.push(SectorCensus {
            n_particles: n,
            dim: basis.len(),
            zero_count,
            threshold,
            min_eigenvalue,
        });
    }
    let predicted = (n_sites % 2 == 0).then_some(n_sites / 2 + 1);
    Ok(CensusVectors {
        report: CensusReport {
            per_sector,
            total_zero_modes: total,
            hypotheses,
            predicted,
        },
        zero_vectors,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct SectorMatch {
    pub k: usize,
    pub n_particles: usize,
    /// Norm of the tower state's projection onto the numerically found
    /// zero space; 1 when the tower member lies inside it.
    pub projection_norm: f64,
    /// Dimension of the numerical zero space in this sector.
    pub zero_dim: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct MatchReport {
    pub per_k: Vec<SectorMatch>,
    /// True when every projection norm is 1 within 1e−8 and every
    /// even-distance sector's zero space is one-dimensional.
    pub tower_spans_ground_space: bool,
}

/// Project each tower member onto the census zero spaces.
pub fn ground_space_match(census: &CensusVectors, tower: &ScarTower) -> Result<MatchReport> {
    let mut per_k = Vec::new();
    let mut all_good = true;
    for (k, state) in tower.states.iter().enumerate() {
        let n = state.basis.n_particles();
        let sector = census
            .report
            .per_sector
            .iter()
            .position(|s| s.n_particles == n)
            .ok_or_else(|| Error::InvalidParameter(format!("sector N={n} missing from census")))?;
        let zero_space = &census.zero_vectors[sector];
        let projection_sq: f64 = zero_space
            .iter()
            .map(|v| v.inner(state).norm_sqr())
            .sum();
        let projection_norm = projection_sq.sqrt();
        let zero_dim = zero_space.len();
        if (projection_norm - 1.0).abs() > 1e-8 || zero_dim != 1 {
            all_good = false;
        }
        per_k.push(SectorMatch {
            k,
            n_particles: n,
            projection_norm,
            zero_dim,
        });
    }
    Ok(MatchReport {
        per_k,
        tower_spans_ground_space: all_good,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{build_chain, sample_couplings, Boundary, CouplingMode, SamplingRanges};
    use crate::scars::build_scar_tower;

    fn chain_couplings(l: usize, seed: u64) -> (LatticeSpec, CouplingSet) {
        let lat = build_chain(l, Boundary::Open).unwrap();
        let c = sample_couplings(
            &lat,
            SamplingRanges::standard().with_b((0.5, 1.5)),
            seed,
            CouplingMode::Bipartite,
        )
        .unwrap();
        (lat, c)
    }

    #[test]
    fn two_site_chain_has_two_zero_modes() {
        let (lat, c) = chain_couplings(2, 3);
        let report = zero_mode_census(&c, &lat).unwrap();
        assert_eq!(report.total_zero_modes, 2);
        assert_eq!(report.predicted, Some(2));
        // One zero mode each in N = 0 and N = 2, none in N = 1.
        let counts: Vec<usize> = report.per_sector.iter().map(|s| s.zero_count).collect();
        assert_eq!(counts, vec![1, 0, 1]);
    }

    #[test]
    fn four_site_chain_count_is_three() {
        let (lat, c) = chain_couplings(4, 11);
        let report = zero_mode_census(&c, &lat).unwrap();
        assert!(report.hypotheses.all_hold());
        assert_eq!(report.total_zero_modes, 3);
    }

    #[test]
    fn odd_parity_sectors_are_gapped() {
        let (lat, c) = chain_couplings(6, 4);
        let report = zero_mode_census(&c, &lat).unwrap();
        for s in &report.per_sector {
            if s.n_particles % 2 == 1 {
                assert_eq!(s.zero_count, 0, "sector N={}", s.n_particles);
            }
        }
    }

    #[test]
    fn parent_is_positive_semidefinite() {
        let (lat, c) = chain_couplings(6, 8);
        let report = zero_mode_census(&c, &lat).unwrap();
        for s in &report.per_sector {
            assert!(
                s.min_eigenvalue > -s.threshold,
                "sector N={} min eigenvalue {}",
                s.n_particles,
                s.min_eigenvalue
            );
        }
    }

    #[test]
    fn tower_spans_the_ground_space() {
        let (lat, c) = chain_couplings(6, 21);
        let census = zero_mode_census_with_vectors(&c, &lat).unwrap();
        assert!(census.report.hypotheses.all_hold());
        let tower = build_scar_tower(&c, 6).unwrap();
        assert_eq!(tower.k_max, 3);
        let matched = ground_space_match(&census, &tower).unwrap();
        assert!(matched.tower_spans_ground_space, "{matched:?}");
    }

    #[test]
    fn disconnected_q_inflates_the_count() {
        // Two decoupled 4-chains glued into one 8-site lattice.
        let lat = LatticeSpec::new(
            8,
            [(1, 2), (2, 3), (3, 4), (5, 6), (6, 7), (7, 8)],
            Some(vec![1, 2, 1, 2, 1, 2, 1, 2]),
            "two-chains-4+4",
        )
        .unwrap();
        let c = sample_couplings(
            &lat,
            SamplingRanges::standard().with_b((0.5, 1.5)),
            5,
            CouplingMode::Bipartite,
        )
        .unwrap();
        let report = zero_mode_census(&c, &lat).unwrap();
        assert!(!report.hypotheses.connected);
        // Kernel factorizes: 3 × 3 = 9 > 8/2 + 1 = 5.
        assert_eq!(report.total_zero_modes, 9);
        assert!(report.total_zero_modes > report.predicted.unwrap());
    }

    #[test]
    fn unequal_sublattices_flagged_but_census_completes() {
        let lat = LatticeSpec::new(
            3,
            [(1, 2), (2, 3)],
            Some(vec![1, 2, 1]),
            "path-3",
        )
        .unwrap();
        let c = sample_couplings(
            &lat,
            SamplingRanges::standard().with_b((0.5, 1.5)),
            9,
            CouplingMode::Bipartite,
        )
        .unwrap();
        let report = zero_mode_census(&c, &lat).unwrap();
        assert!(!report.hypotheses.equal_sublattices);
        assert!(report.predicted.is_none());
        assert!(report.total_zero_modes >= 1);
    }
}

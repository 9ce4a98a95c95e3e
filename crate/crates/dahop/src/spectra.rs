//! Dense Hermitian diagonalization and level-spacing statistics.
//!
//! Level statistics follow the standard recipe: sort the sector spectrum,
//! restrict to a window (by default the middle half, indices
//! `⌊D/4⌋ .. ⌈3D/4⌉`), normalize consecutive spacings by their window mean,
//! and form the ratios `r_i = min(s_i, s_{i+1}) / max(s_i, s_{i+1})`. The
//! ensemble means `⟨r⟩` distinguish GOE, GUE, and Poisson spectra without
//! any unfolding beyond the mean-spacing normalization.

use ndarray::Array2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{eigh_complex, eigh_real};
use crate::operators::SectorOperator;

/// Default refusal threshold for dense solves (matrix dimension).
pub const DEFAULT_DENSE_CAP: usize = 20_000;

/// Reference mean level-spacing ratios.
pub const GOE_MEAN_R: f64 = 0.53590;
pub const GUE_MEAN_R: f64 = 0.60266;
pub const POISSON_MEAN_R: f64 = 0.38629;

/// Eigenvectors from a dense solve, kept real when the operator was real.
#[derive(Debug, Clone)]
pub enum EigenVectors {
    Real(Array2<f64>),
    Complex(Array2<Complex64>),
}

impl EigenVectors {
    pub fn dim(&self) -> usize {
        match self {
            EigenVectors::Real(m) => m.nrows(),
            EigenVectors::Complex(m) => m.nrows(),
        }
    }

    /// Column `j` as a complex vector.
    pub fn column(&self, j: usize) -> Vec<Complex64> {
        match self {
            EigenVectors::Real(m) => m.column(j).iter().map(|&v| Complex64::new(v, 0.0)).collect(),
            EigenVectors::Complex(m) => m.column(j).to_vec(),
        }
    }

    /// Coefficients `c = V† ψ` of a state in the eigenbasis.
    pub fn project(&self, psi: &[Complex64]) -> Vec<Complex64> {
        let n = self.dim();
        match self {
            EigenVectors::Real(m) => (0..n)
                .map(|j| {
                    let mut acc = Complex64::default();
                    for i in 0..n {
                        acc += m[[i, j]] * psi[i];
                    }
                    acc
                })
                .collect(),
            EigenVectors::Complex(m) => (0..n)
                .map(|j| {
                    let mut acc = Complex64::default();
                    for i in 0..n {
                        acc += m[[i, j]].conj() * psi[i];
                    }
                    acc
                })
                .collect(),
        }
    }

    /// Reconstruct `ψ = V c` from eigenbasis coefficients.
    pub fn reconstruct(&self, coeff: &[Complex64]) -> Vec<Complex64> {
        let n = self.dim();
        let mut psi = vec![Complex64::default(); n];
        match self {
            EigenVectors::Real(m) => {
                for j in 0..n {
                    let cj = coeff[j];
                    if cj == Complex64::default() {
                        continue;
                    }
                    for i in 0..n {
                        psi[i] += m[[i, j]] * cj;
                    }
                }
            }
            EigenVectors::Complex(m) => {
                for j in 0..n {
                    let cj = coeff[j];
                    if cj == Complex64::default() {
                        continue;
                    }
                    for i in 0..n {
                        psi[i] += m[[i, j]] * cj;
                    }
                }
            }
        }
        psi
    }
}

/// Full spectrum of one sector operator, eigenvalues ascending.
#[derive(Debug, Clone)]
pub struct SpectrumResult {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: Option<EigenVectors>,
}

impl SpectrumResult {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }
}

/// Full dense diagonalization of a square Hermitian sector operator.
/// Refuses dimensions beyond `DEFAULT_DENSE_CAP`; use
/// [`diagonalize_with_cap`] to override.
pub fn diagonalize(op: &SectorOperator, want_vectors: bool) -> Result<SpectrumResult> {
    diagonalize_with_cap(op, want_vectors, DEFAULT_DENSE_CAP)
}

/// As [`diagonalize`] with an explicit dimension cap.
pub fn diagonalize_with_cap(
    op: &SectorOperator,
    want_vectors: bool,
    cap: usize,
) -> Result<SpectrumResult> {
    if !op.is_square() {
        return Err(Error::InvalidParameter(
            "diagonalize needs a square sector operator".into(),
        ));
    }
    let dim = op.shape().0;
    if dim > cap {
        let elem = if op.is_real() { 8 } else { 16 };
        let mem_gib = (dim as f64).powi(2) * elem as f64 / (1u64 << 30) as f64;
        return Err(Error::DenseCapExceeded { dim, cap, mem_gib });
    }
    if op.is_real() {
        let dense = op.to_dense_real().expect("real flag implies real entries");
        let (w, v) = eigh_real(&dense, want_vectors)?;
        Ok(SpectrumResult {
            eigenvalues: w,
            eigenvectors: v.map(EigenVectors::Real),
        })
    } else {
        let dense = op.to_dense();
        let (w, v) = eigh_complex(&dense, want_vectors)?;
        Ok(SpectrumResult {
            eigenvalues: w,
            eigenvectors: v.map(EigenVectors::Complex),
        })
    }
}

/// Spectrum window selection for level statistics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Window {
    /// Indices `⌊D/4⌋ .. ⌈3D/4⌉` of the sorted spectrum.
    MiddleHalf,
    /// Explicit index range (lo inclusive, hi exclusive).
    Custom(usize, usize),
}

/// Level-spacing data for one spectrum window.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LevelStats {
    /// Spacings normalized by the window mean (mean 1 by construction).
    pub spacings: Vec<f64>,
    /// Consecutive-spacing ratios in [0, 1].
    pub r_values: Vec<f64>,
    pub mean_r: f64,
    /// Index window (lo, hi) into the sorted spectrum.
    pub window: (usize, usize),
    /// Histogram of the normalized spacings.
    pub histogram: Histogram,
    /// Number of exactly zero spacings in the window (degeneracies kept).
    pub zero_spacings: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Histogram {
    /// `bins + 1` edges, uniform over [0, s_max].
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
}

impl Histogram {
    fn build(values: &[f64], bins: usize, s_max: f64) -> Self {
        let mut counts = vec![0usize; bins];
        let width = s_max / bins as f64;
        for &v in values {
            if v >= s_max {
                continue;
            }
            let b = ((v / width) as usize).min(bins - 1);
            counts[b] += 1;
        }
        let edges = (0..=bins).map(|i| i as f64 * width).collect();
        Self { edges, counts }
    }

    /// Bin midpoints and probability-density heights (area normalized to
    /// the kept fraction of samples).
    pub fn density(&self, total: usize) -> Vec<(f64, f64)> {
        let width = self.edges[1] - self.edges[0];
        self.counts
            .iter()
            .enumerate()
            .map(|(i, &c)| {
                let mid = 0.5 * (self.edges[i] + self.edges[i + 1]);
                (mid, c as f64 / (total as f64 * width))
            })
            .collect()
    }
}

/// Default histogram binning for spacing distributions.
pub const DEFAULT_BINS: usize = 50;
pub const DEFAULT_S_MAX: f64 = 5.0;

/// Compute normalized spacings, r-ratios, and a histogram over a spectrum
/// window. Needs at least 10 levels in the window.
pub fn level_statistics(eigenvalues: &[f64], window: Window) -> Result<LevelStats> {
    level_statistics_binned(eigenvalues, window, DEFAULT_BINS, DEFAULT_S_MAX)
}

/// As [`level_statistics`] with explicit histogram binning.
pub fn level_statistics_binned(
    eigenvalues: &[f64],
    window: Window,
    bins: usize,
    s_max: f64,
) -> Result<LevelStats> {
    let d = eigenvalues.len();
    let (lo, hi) = match window {
        Window::MiddleHalf => (d / 4, (3 * d + 3) / 4),
        Window::Custom(lo, hi) => (lo, hi),
    };
    if hi > d || lo >= hi {
        return Err(Error::InvalidParameter(format!(
            "window ({lo}, {hi}) invalid for {d} levels"
        )));
    }
    let levels = &eigenvalues[lo..hi];
    if levels.len() < 10 {
        return Err(Error::InvalidParameter(format!(
            "need ≥ 10 levels in the window, got {}",
            levels.len()
        )));
    }
    if levels.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidParameter(
            "eigenvalues must be sorted ascending".into(),
        ));
    }
    let raw: Vec<f64> = levels.windows(2).map(|w| w[1] - w[0]).collect();
    let mean = raw.iter().sum::<f64>() / raw.len() as f64;
    if mean == 0.0 {
        return Err(Error::InvalidParameter(
            "window is a single degenerate level cluster".into(),
        ));
    }
    let spacings: Vec<f64> = raw.iter().map(|s| s / mean).collect();
    let zero_spacings = spacings.iter().filter(|&&s| s == 0.0).count();
    let r_values: Vec<f64> = spacings
        .windows(2)
        .map(|w| {
            let (a, b) = (w[0], w[1]);
            let (mn, mx) = (a.min(b), a.max(b));
            if mx == 0.0 {
                1.0 // two exactly degenerate spacings
            } else {
                mn / mx
            }
        })
        .collect();
    let mean_r = r_values.iter().sum::<f64>() / r_values.len() as f64;
    let histogram = Histogram::build(&spacings, bins, s_max);
    Ok(LevelStats {
        spacings,
        r_values,
        mean_r,
        window: (lo, hi),
        histogram,
        zero_spacings,
    })
}

/// Reference spacing distributions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReferenceKind {
    Goe,
    Gue,
    Poisson,
}

/// Closed-form reference density `P(s)`.
///
/// GOE: `(π/2) s exp(−πs²/4)`; GUE: `(32/π²) s² exp(−4s²/π)`;
/// Poisson: `exp(−s)`. (The GUE exponent is negative — the distribution
/// would not normalize otherwise.)
pub fn reference_distribution(kind: ReferenceKind, s: f64) -> f64 {
    use std::f64::consts::PI;
    debug_assert!(s >= 0.0);
    match kind {
        ReferenceKind::Goe => 0.5 * PI * s * (-0.25 * PI * s * s).exp(),
        ReferenceKind::Gue => (32.0 / (PI * PI)) * s * s * (-4.0 * s * s / PI).exp(),
        ReferenceKind::Poisson => (-s).exp(),
    }
}

impl ReferenceKind {
    /// The literature value of ⟨r⟩ for this ensemble.
    pub fn mean_r(self) -> f64 {
        match self {
            ReferenceKind::Goe => GOE_MEAN_R,
            ReferenceKind::Gue => GUE_MEAN_R,
            ReferenceKind::Poisson => POISSON_MEAN_R,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fockspace::enumerate_sector;
    use crate::lattice::{build_chain, sample_couplings, Boundary, CouplingMode, SamplingRanges};
    use crate::operators::build_hop;

    #[test]
    fn two_level_flip_matrix() {
        let lat = build_chain(2, Boundary::Open).unwrap();
        let ranges = SamplingRanges {
            t: (1.0, 1.0),
            a: (0.0, 0.0),
            b: None,
        };
        let c = sample_couplings(&lat, ranges, 0, CouplingMode::Bipartite).unwrap();
        let basis = enumerate_sector(2, 1).unwrap();
        let h = build_hop(&c, &basis).unwrap();
        let spec = diagonalize(&h, false).unwrap();
        assert!((spec.eigenvalues[0] + 1.0).abs() < 1e-14);
        assert!((spec.eigenvalues[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn dense_cap_refusal_reports_memory() {
        let lat = build_chain(16, Boundary::Open).unwrap();
        let c = sample_couplings(&lat, SamplingRanges::standard(), 0, CouplingMode::Bipartite)
            .unwrap();
        let basis = enumerate_sector(16, 8).unwrap(); // dim 12870
        let h = build_hop(&c, &basis).unwrap();
        match diagonalize_with_cap(&h, false, 1000) {
            Err(Error::DenseCapExceeded { dim, cap, mem_gib }) => {
                assert_eq!(dim, 12870);
                assert_eq!(cap, 1000);
                assert!(mem_gib > 1.0);
            }
            other => panic!("expected cap refusal, got {other:?}"),
        }
    }

    #[test]
    fn equally_spaced_levels_have_unit_ratios() {
        let eigs: Vec<f64> = (0..40).map(|i| i as f64 * 0.37).collect();
        let stats = level_statistics(&eigs, Window::Custom(0, 40)).unwrap();
        assert!(stats.spacings.iter().all(|&s| (s - 1.0).abs() < 1e-12));
        assert!((stats.mean_r - 1.0).abs() < 1e-12);
        let mean_s = stats.spacings.iter().sum::<f64>() / stats.spacings.len() as f64;
        assert!((mean_s - 1.0).abs() < 1e-12);
    }

    #[test]
    fn middle_half_window_indices() {
        let eigs: Vec<f64> = (0..100).map(|i| i as f64).collect();
        let stats = level_statistics(&eigs, Window::MiddleHalf).unwrap();
        assert_eq!(stats.window, (25, 75));
        let eigs: Vec<f64> = (0..49).map(|i| i as f64).collect();
        let stats = level_statistics(&eigs, Window::MiddleHalf).unwrap();
        assert_eq!(stats.window, (12, 37)); // ⌊49/4⌋ = 12, ⌈147/4⌉ = 37
    }

    #[test]
    fn degenerate_levels_kept_and_counted() {
        let mut eigs: Vec<f64> = (0..30).map(|i| i as f64).collect();
        eigs[10] = eigs[9]; // one exact degeneracy
        eigs.sort_by(f64::total_cmp);
        let stats = level_statistics(&eigs, Window::Custom(0, 30)).unwrap();
        assert_eq!(stats.zero_spacings, 1);
        assert!(stats.r_values.iter().any(|&r| r == 0.0));
    }

    #[test]
    fn too_few_levels_rejected() {
        let eigs: Vec<f64> = (0..8).map(|i| i as f64).collect();
        assert!(level_statistics(&eigs, Window::Custom(0, 8)).is_err());
    }

    #[test]
    fn poisson_density_at_zero() {
        assert_eq!(reference_distribution(ReferenceKind::Poisson, 0.0), 1.0);
    }

    #[test]
    fn reference_mean_r_constants() {
        assert_eq!(ReferenceKind::Goe.mean_r(), 0.53590);
        assert_eq!(ReferenceKind::Gue.mean_r(), 0.60266);
        assert_eq!(ReferenceKind::Poisson.mean_r(), 0.38629);
        // Poisson ⟨r⟩ = 2 ln 2 − 1 to the printed precision.
        assert!((POISSON_MEAN_R - (2.0 * std::f64::consts::LN_2 - 1.0)).abs() < 5e-6);
    }

    #[test]
    fn real_and_complex_solver_paths_agree() {
        let lat = build_chain(6, Boundary::Open).unwrap();
        let c = sample_couplings(&lat, SamplingRanges::standard(), 17, CouplingMode::Bipartite)
            .unwrap();
        let basis = enumerate_sector(6, 3).unwrap();
        let h = crate::operators::build_hamiltonian(&c, &basis).unwrap();
        let real = diagonalize(&h, false).unwrap();
        let dense = h.to_dense();
        let (complex_w, _) = eigh_complex(&dense, false).unwrap();
        for (a, b) in real.eigenvalues.iter().zip(&complex_w) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn eigenvalue_sum_matches_trace() {
        let lat = build_chain(6, Boundary::Open).unwrap();
        let c = sample_couplings(&lat, SamplingRanges::standard(), 23, CouplingMode::Bipartite)
            .unwrap();
        let basis = enumerate_sector(6, 3).unwrap();
        let h = crate::operators::build_hamiltonian(&c, &basis).unwrap();
        let spec = diagonalize(&h, false).unwrap();
        let sum: f64 = spec.eigenvalues.iter().sum();
        let tr = h.trace().re;
        let scale = spec
            .eigenvalues
            .iter()
            .map(|e| e.abs())
            .fold(0.0, f64::max)
            .max(1.0);
        assert!((sum - tr).abs() < 1e-8 * scale * spec.dim() as f64);
    }

    #[test]
    fn eigenvector_residuals_small() {
        let lat = build_chain(6, Boundary::Open).unwrap();
        let c = sample_couplings(&lat, SamplingRanges::standard(), 29, CouplingMode::Bipartite)
            .unwrap();
        let basis = enumerate_sector(6, 2).unwrap();
        let h = crate::operators::build_hamiltonian(&c, &basis).unwrap();
        let spec = diagonalize(&h, true).unwrap();
        let hnorm = h.spectral_norm_est(30);
        let vectors = spec.eigenvectors.as_ref().unwrap();
        for j in 0..spec.dim() {
            let v = vectors.column(j);
            let hv = h.apply_slice(&v);
            let resid: f64 = hv
                .iter()
                .zip(&v)
                .map(|(a, b)| (a - spec.eigenvalues[j] * b).norm_sqr())
                .sum::<f64>()
                .sqrt();
            assert!(resid <= 1e-10 * hnorm.max(1.0), "residual {resid}");
        }
    }
}

//! Lattice graphs, bipartition detection, and seeded coupling matrices.
//!
//! A model instance is a graph `(Λ, B)` plus a coupling set: the Hermitian
//! hopping matrix `T`, the real skew-symmetric pair matrix `Q`, and per-site
//! coefficient vectors `A` (and `B` for the parent Hamiltonian). In
//! bipartite mode `T` is real symmetric and `Q` follows the sign rule
//!
//! ```text
//! q_{xy} =  t_{xy}   x ∈ Λ⁽¹⁾, y ∈ Λ⁽²⁾
//! q_{xy} = −t_{xy}   x ∈ Λ⁽²⁾, y ∈ Λ⁽¹⁾
//! q_{xy} =  0        otherwise.
//! ```
//!
//! In non-bipartite mode `T = iK` with `K` real skew-symmetric supported on
//! the bonds, and `Q = Kⁿ` for an odd power `n`.
//!
//! Randomness is drawn from ChaCha12 with one stream per coefficient family
//! (stream 0: T/K bond entries in sorted bond order; stream 1: A in site
//! order; stream 2: B in site order), so equal seeds reproduce equal
//! couplings bit for bit.

use std::collections::{BTreeSet, VecDeque};

use ndarray::Array2;
use num_complex::Complex64;
use rand::distributions::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Human-readable record of the PRNG and stream-splitting rule, echoed into
/// run metadata.
pub const RNG_DESCRIPTOR: &str = "ChaCha12 seed_from_u64; streams: 0=T/K (sorted bond order), 1=A (site order), 2=B (site order)";

/// Sublattice label values used when a bipartition is attached.
pub const SUBLATTICE_ONE: u8 = 1;
pub const SUBLATTICE_TWO: u8 = 2;

/// Open or periodic boundary conditions for the regular builders.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    Open,
    Periodic,
}

/// A lattice graph: 1-based site labels, canonical (min, max) bonds, and
/// optional sublattice labels.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LatticeSpec {
    pub n_sites: usize,
    /// Unordered bonds stored as (min, max) pairs, sorted, no duplicates,
    /// no self-loops.
    pub bonds: Vec<(usize, usize)>,
    /// Per-site sublattice labels (index = label − 1, values 1 or 2) when a
    /// bipartition is attached.
    pub labels: Option<Vec<u8>>,
    pub geometry_tag: String,
}

impl LatticeSpec {
    /// Build from raw parts, canonicalizing and validating the bond list.
    pub fn new(
        n_sites: usize,
        bonds: impl IntoIterator<Item = (usize, usize)>,
        labels: Option<Vec<u8>>,
        geometry_tag: impl Into<String>,
    ) -> Result<Self> {
        let mut set = BTreeSet::new();
        for (a, b) in bonds {
            if a == b {
                return Err(Error::InvalidParameter(format!("self-loop at site {a}")));
            }
            if a == 0 || b == 0 || a > n_sites || b > n_sites {
                return Err(Error::InvalidParameter(format!(
                    "bond ({a},{b}) outside 1..={n_sites}"
                )));
            }
            set.insert((a.min(b), a.max(b)));
        }
        let spec = Self {
            n_sites,
            bonds: set.into_iter().collect(),
            labels,
            geometry_tag: geometry_tag.into(),
        };
        if let Some(labels) = &spec.labels {
            if labels.len() != n_sites {
                return Err(Error::InvalidParameter(
                    "label vector length differs from site count".into(),
                ));
            }
            for &(a, b) in &spec.bonds {
                if labels[a - 1] == labels[b - 1] {
                    return Err(Error::InvalidParameter(format!(
                        "bond ({a},{b}) joins two sites of sublattice {}",
                        labels[a - 1]
                    )));
                }
            }
        }
        Ok(spec)
    }

    pub fn n_bonds(&self) -> usize {
        self.bonds.len()
    }

    /// Sites of each sublattice (1-based labels), when labels are attached.
    pub fn sublattices(&self) -> Option<(Vec<usize>, Vec<usize>)> {
        let labels = self.labels.as_ref()?;
        let mut one = Vec::new();
        let mut two = Vec::new();
        for (i, &l) in labels.iter().enumerate() {
            if l == SUBLATTICE_ONE {
                one.push(i + 1);
            } else {
                two.push(i + 1);
            }
        }
        Some((one, two))
    }

    /// Adjacency lists (0-based internal indices).
    fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.n_sites];
        for &(a, b) in &self.bonds {
            adj[a - 1].push(b - 1);
            adj[b - 1].push(a - 1);
        }
        adj
    }
}

/// BFS 2-coloring. On success returns labels (1/2 per site); on failure
/// returns the odd cycle found, as 1-based labels.
pub fn detect_bipartition(spec: &LatticeSpec) -> Result<Vec<u8>> {
    let adj = spec.adjacency();
    let mut color = vec![0u8; spec.n_sites];
    let mut parent = vec![usize::MAX; spec.n_sites];
    for start in 0..spec.n_sites {
        if color[start] != 0 {
            continue;
        }
        color[start] = SUBLATTICE_ONE;
        let mut queue = VecDeque::from([start]);
        while let Some(u) = queue.pop_front() {
            for &v in &adj[u] {
                if color[v] == 0 {
                    color[v] = if color[u] == SUBLATTICE_ONE {
                        SUBLATTICE_TWO
                    } else {
                        SUBLATTICE_ONE
                    };
                    parent[v] = u;
                    queue.push_back(v);
                } else if color[v] == color[u] {
                    return Err(Error::BipartitionImpossible(odd_cycle(&parent, u, v)));
                }
            }
        }
    }
    Ok(color)
}

/// Reconstruct the odd cycle witnessed by the conflicting edge (u, v):
/// walk both BFS ancestries to their meeting point.
fn odd_cycle(parent: &[usize], u: usize, v: usize) -> Vec<usize> {
    let path_to_root = |mut x: usize| {
        let mut path = vec![x];
        while parent[x] != usize::MAX {
            x = parent[x];
            path.push(x);
        }
        path
    };
    let pu = path_to_root(u);
    let pv = path_to_root(v);
    // Trim the common tail.
    let mut iu = pu.len();
    let mut iv = pv.len();
    while iu > 0 && iv > 0 && pu[iu - 1] == pv[iv - 1] {
        iu -= 1;
        iv -= 1;
    }
    let mut cycle: Vec<usize> = pu[..=iu.min(pu.len() - 1)].to_vec();
    let mut back: Vec<usize> = pv[..=iv.min(pv.len() - 1)].to_vec();
    back.reverse();
    cycle.extend(back);
    cycle.iter().map(|&x| x + 1).collect()
}

/// Rectangular (square-grid) lattice, row-major 1-based labels, with
/// checkerboard sublattice labels attached.
pub fn build_rectangular(rows: usize, cols: usize, boundary: Boundary) -> Result<LatticeSpec> {
    if rows < 1 || cols < 1 {
        return Err(Error::InvalidParameter("rows, cols must be ≥ 1".into()));
    }
    if boundary == Boundary::Periodic {
        if rows > 1 && rows % 2 != 0 {
            return Err(Error::BipartitionImpossible(odd_wrap_cycle(rows, cols, true)));
        }
        if cols > 1 && cols % 2 != 0 {
            return Err(Error::BipartitionImpossible(odd_wrap_cycle(rows, cols, false)));
        }
    }
    let site = |r: usize, c: usize| r * cols + c + 1;
    let mut bonds = Vec::new();
    for r in 0..rows {
        for c in 0..cols {
            if c + 1 < cols {
                bonds.push((site(r, c), site(r, c + 1)));
            } else if boundary == Boundary::Periodic && cols > 1 {
                bonds.push((site(r, c), site(r, 0)));
            }
            if r + 1 < rows {
                bonds.push((site(r, c), site(r + 1, c)));
            } else if boundary == Boundary::Periodic && rows > 1 {
                bonds.push((site(r, c), site(0, c)));
            }
        }
    }
    let labels: Vec<u8> = (0..rows)
        .flat_map(|r| (0..cols).map(move |c| ((r + c) % 2) as u8 + 1))
        .collect();
    let tag = format!(
        "rect-{rows}x{cols}-{}",
        match boundary {
            Boundary::Open => "open",
            Boundary::Periodic => "periodic",
        }
    );
    LatticeSpec::new(rows * cols, bonds, Some(labels), tag)
}

/// The shortest wrap cycle in the odd-extent direction, used as the error
/// witness for impossible periodic bipartitions.
fn odd_wrap_cycle(rows: usize, cols: usize, wrap_rows: bool) -> Vec<usize> {
    if wrap_rows {
        (0..rows).map(|r| r * cols + 1).collect()
    } else {
        (1..=cols).collect()
    }
}

/// Path (open) or cycle (periodic) of `l` sites with alternating labels.
pub fn build_chain(l: usize, boundary: Boundary) -> Result<LatticeSpec> {
    if l < 1 {
        return Err(Error::InvalidParameter("chain needs ≥ 1 site".into()));
    }
    if boundary == Boundary::Periodic && l > 1 && l % 2 != 0 {
        return Err(Error::BipartitionImpossible((1..=l).collect()));
    }
    let mut bonds: Vec<(usize, usize)> = (1..l).map(|j| (j, j + 1)).collect();
    if boundary == Boundary::Periodic && l > 1 {
        bonds.push((l, 1));
    }
    let labels: Vec<u8> = (0..l).map(|j| (j % 2) as u8 + 1).collect();
    let tag = format!(
        "chain-{l}-{}",
        match boundary {
            Boundary::Open => "open",
            Boundary::Periodic => "periodic",
        }
    );
    LatticeSpec::new(l, bonds, Some(labels), tag)
}

/// Triangular lattice: a rows×cols grid with horizontal, vertical, and
/// one anti-diagonal bond per plaquette, open boundaries, row-major
/// labels, no sublattice labels (the 3-cycles make it non-bipartite).
pub fn build_triangular(rows: usize, cols: usize) -> Result<LatticeSpec> {
    if rows < 2 || cols < 2 {
        return Err(Error::InvalidParameter("rows, cols must be ≥ 2".into()));
    }
    let site = |r: usize, c: usize| r * cols + c + 1;
    let mut bonds = Vec::new();
    for r in 0..rows {
        for c in 0..cols {
            if c + 1 < cols {
                bonds.push((site(r, c), site(r, c + 1)));
            }
            if r + 1 < rows {
                bonds.push((site(r, c), site(r + 1, c)));
            }
            if r + 1 < rows && c + 1 < cols {
                bonds.push((site(r, c + 1), site(r + 1, c)));
            }
        }
    }
    LatticeSpec::new(rows * cols, bonds, None, format!("tri-{rows}x{cols}"))
}

/// Coupling-generation mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind")]
pub enum CouplingMode {
    /// Real symmetric `T`; `Q` from the sublattice sign rule.
    Bipartite,
    /// `T = iK` with real skew-symmetric `K`; `Q = K^q_power`, odd power.
    NonBipartite { q_power: usize },
}

/// Closed sampling intervals for the random coefficient families.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplingRanges {
    /// Bond amplitudes (entries of `T` or `K`).
    pub t: (f64, f64),
    /// On-site coefficients `A_x`.
    pub a: (f64, f64),
    /// Parent-Hamiltonian weights `B_x`; drawn only when present.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<(f64, f64)>,
}

impl SamplingRanges {
    /// The ranges used throughout the reference figures: bonds from
    /// [0.5, 1.5], on-site coefficients from [−0.5, 0.5].
    pub fn standard() -> Self {
        Self {
            t: (0.5, 1.5),
            a: (-0.5, 0.5),
            b: None,
        }
    }

    pub fn with_b(mut self, range: (f64, f64)) -> Self {
        self.b = Some(range);
        self
    }
}

/// JSON form of a dense matrix: nested row-major arrays.
mod serde_matrix {
    use ndarray::Array2;
    use serde::de::Error as _;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(m: &Array2<f64>, s: S) -> Result<S::Ok, S::Error> {
        let rows: Vec<Vec<f64>> = m.rows().into_iter().map(|r| r.to_vec()).collect();
        serde::Serialize::serialize(&rows, s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Array2<f64>, D::Error> {
        let rows: Vec<Vec<f64>> = Deserialize::deserialize(d)?;
        let nrows = rows.len();
        let ncols = rows.first().map(Vec::len).unwrap_or(0);
        if rows.iter().any(|r| r.len() != ncols) {
            return Err(D::Error::custom("ragged matrix rows"));
        }
        Array2::from_shape_vec((nrows, ncols), rows.into_iter().flatten().collect())
            .map_err(D::Error::custom)
    }
}

/// One sampled model instance: matrices and coefficient vectors tied to a
/// lattice, plus the seed record that reproduces them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CouplingSet {
    pub mode: CouplingMode,
    /// Real symmetric hopping matrix in bipartite mode. In non-bipartite
    /// mode this field holds `K` and the physical hopping is `T = iK`.
    #[serde(with = "serde_matrix")]
    pub hop: Array2<f64>,
    /// Real skew-symmetric pair matrix `Q`.
    #[serde(with = "serde_matrix")]
    pub q: Array2<f64>,
    /// On-site coefficients `A_x` (index = site label − 1).
    pub a: Vec<f64>,
    /// Positive parent-Hamiltonian weights `B_x`, when sampled.
    pub b: Option<Vec<f64>>,
    pub seed: u64,
    pub ranges: SamplingRanges,
    /// PRNG identity and stream-splitting rule used for the draws.
    pub rng: String,
}

impl CouplingSet {
    pub fn n_sites(&self) -> usize {
        self.a.len()
    }

    /// Complex hopping amplitude `t_{xy}` (1-based labels).
    pub fn t_entry(&self, x: usize, y: usize) -> Complex64 {
        match self.mode {
            CouplingMode::Bipartite => Complex64::new(self.hop[[x - 1, y - 1]], 0.0),
            CouplingMode::NonBipartite { .. } => Complex64::new(0.0, self.hop[[x - 1, y - 1]]),
        }
    }

    /// `q_{xy}` (1-based labels).
    pub fn q_entry(&self, x: usize, y: usize) -> f64 {
        self.q[[x - 1, y - 1]]
    }

    /// True when every Hamiltonian matrix element is real (bipartite mode).
    pub fn is_real(&self) -> bool {
        matches!(self.mode, CouplingMode::Bipartite)
    }
}

/// Odd matrix power of a square matrix.
fn matrix_power(m: &Array2<f64>, n: usize) -> Array2<f64> {
    let mut acc = m.clone();
    for _ in 1..n {
        acc = acc.dot(m);
    }
    acc
}

/// Draw a coupling set for `spec`. Identical `(seed, spec, ranges, mode)`
/// reproduce identical matrices bit for bit.
pub fn sample_couplings(
    spec: &LatticeSpec,
    ranges: SamplingRanges,
    seed: u64,
    mode: CouplingMode,
) -> Result<CouplingSet> {
    let n = spec.n_sites;
    let labels = match mode {
        CouplingMode::Bipartite => Some(
            spec.labels
                .clone()
                .ok_or_else(|| Error::InvalidParameter("bipartite mode needs labels".into()))?,
        ),
        CouplingMode::NonBipartite { q_power } => {
            if q_power % 2 == 0 || q_power == 0 {
                return Err(Error::InvalidParameter(format!(
                    "q_power must be a positive odd integer, got {q_power}"
                )));
            }
            None
        }
    };

    let interval = |(lo, hi): (f64, f64)| -> Result<Uniform<f64>> {
        if lo > hi {
            return Err(Error::InvalidParameter(format!(
                "empty sampling interval [{lo}, {hi}]"
            )));
        }
        Ok(Uniform::new_inclusive(lo, hi))
    };

    // Stream 0: one draw per bond in sorted bond order.
    let mut rng_t = ChaCha12Rng::seed_from_u64(seed);
    rng_t.set_stream(0);
    let dist_t = interval(ranges.t)?;
    let mut hop = Array2::<f64>::zeros((n, n));
    for &(x, y) in &spec.bonds {
        let v = dist_t.sample(&mut rng_t);
        match mode {
            CouplingMode::Bipartite => {
                hop[[x - 1, y - 1]] = v;
                hop[[y - 1, x - 1]] = v;
            }
            CouplingMode::NonBipartite { .. } => {
                // K is skew-symmetric; orient lower-label → higher-label positive.
                hop[[x - 1, y - 1]] = v;
                hop[[y - 1, x - 1]] = -v;
            }
        }
    }

    // Stream 1: one draw per site for A.
    let mut rng_a = ChaCha12Rng::seed_from_u64(seed);
    rng_a.set_stream(1);
    let dist_a = interval(ranges.a)?;
    let a: Vec<f64> = (0..n).map(|_| dist_a.sample(&mut rng_a)).collect();

    // Stream 2: one draw per site for B, when requested.
    let b = match ranges.b {
        Some(rb) => {
            if rb.0 <= 0.0 {
                return Err(Error::InvalidParameter(
                    "parent weights B must be drawn from a positive range".into(),
                ));
            }
            let mut rng_b = ChaCha12Rng::seed_from_u64(seed);
            rng_b.set_stream(2);
            let dist_b = interval(rb)?;
            Some((0..n).map(|_| dist_b.sample(&mut rng_b)).collect())
        }
        None => None,
    };

    let q = match mode {
        CouplingMode::Bipartite => {
            let labels = labels.as_ref().unwrap();
            let mut q = Array2::<f64>::zeros((n, n));
            for &(x, y) in &spec.bonds {
                let t = hop[[x - 1, y - 1]];
                let (one, two) = if labels[x - 1] == SUBLATTICE_ONE {
                    (x, y)
                } else {
                    (y, x)
                };
                q[[one - 1, two - 1]] = t;
                q[[two - 1, one - 1]] = -t;
            }
            q
        }
        CouplingMode::NonBipartite { q_power } => matrix_power(&hop, q_power),
    };

    Ok(CouplingSet {
        mode,
        hop,
        q,
        a,
        b,
        seed,
        ranges,
        rng: RNG_DESCRIPTOR.to_string(),
    })
}

/// Hypothesis report for the parent-Hamiltonian uniqueness theorem.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HypothesisReport {
    /// |Λ⁽¹⁾| = |Λ⁽²⁾|.
    pub equal_sublattices: bool,
    /// `Q` regular: smallest singular value > 1e−10 × largest.
    pub regular: bool,
    /// Graph of nonzero `Q` entries is connected.
    pub connected: bool,
}

impl HypothesisReport {
    pub fn all_hold(&self) -> bool {
        self.equal_sublattices && self.regular && self.connected
    }
}

/// Check the theorem hypotheses for a pair matrix `Q` and sublattice labels.
pub fn check_theorem_hypotheses(q: &Array2<f64>, labels: &[u8]) -> HypothesisReport {
    let n = labels.len();
    let n_one = labels.iter().filter(|&&l| l == SUBLATTICE_ONE).count();
    let equal_sublattices = n_one * 2 == n;

    let (_, sv, _) = crate::linalg::svd_real(q).expect("SVD of a finite real matrix cannot fail");
    let smax = sv.iter().cloned().fold(0.0f64, f64::max);
    let smin = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    let regular = n > 0 && smax > 0.0 && smin > 1e-10 * smax;

    // Connectivity of the nonzero-entry graph.
    let mut adj = vec![Vec::new(); n];
    for x in 0..n {
        for y in 0..n {
            if x != y && q[[x, y]] != 0.0 {
                adj[x].push(y);
            }
        }
    }
    let mut seen = vec![false; n];
    let mut queue = VecDeque::from([0usize]);
    if n > 0 {
        seen[0] = true;
    }
    while let Some(u) = queue.pop_front() {
        for &v in &adj[u] {
            if !seen[v] {
                seen[v] = true;
                queue.push_back(v);
            }
        }
    }
    let connected = seen.iter().all(|&s| s);

    HypothesisReport {
        equal_sublattices,
        regular,
        connected,
    }
}

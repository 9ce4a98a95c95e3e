//! Shared test oracles, independent of the library's implementation paths.
//!
//! The dense-algebra oracle realizes fermion operators as explicit
//! 2^n × 2^n matrices built from Kronecker products of Pauli-style
//! 2×2 blocks with a sign string on the lower-labeled sites. Everything
//! downstream (Hamiltonians, pair operators, anticommutators) is then
//! plain matrix arithmetic — no occupation bit tricks, no popcount signs.

#![allow(dead_code)]

use ndarray::{Array1, Array2};
use num_complex::Complex64;

use dahop::fockspace::{FockBasis, StateVector};
use dahop::lattice::CouplingSet;

pub type C64 = Complex64;

pub fn kron(a: &Array2<C64>, b: &Array2<C64>) -> Array2<C64> {
    let (ar, ac) = (a.nrows(), a.ncols());
    let (br, bc) = (b.nrows(), b.ncols());
    let mut out = Array2::zeros((ar * br, ac * bc));
    for i in 0..ar {
        for j in 0..ac {
            let av = a[[i, j]];
            if av == C64::default() {
                continue;
            }
            for k in 0..br {
                for l in 0..bc {
                    out[[i * br + k, j * bc + l]] = av * b[[k, l]];
                }
            }
        }
    }
    out
}

fn identity2() -> Array2<C64> {
    Array2::eye(2)
}

fn lower2() -> Array2<C64> {
    // |0⟩⟨1|: annihilates the occupied state.
    let mut a = Array2::zeros((2, 2));
    a[[0, 1]] = C64::new(1.0, 0.0);
    a
}

fn zsign2() -> Array2<C64> {
    // +1 on empty, −1 on occupied.
    let mut z = Array2::eye(2);
    z[[1, 1]] = C64::new(-1.0, 0.0);
    z
}

/// Annihilation operator at 1-based `site` as a dense 2^n matrix, with the
/// full-space index `Σ_x n_x 2^(x−1)` (site 1 = least significant bit).
/// The sign string covers the sites below `site`.
pub fn c_full(n_sites: usize, site: usize) -> Array2<C64> {
    let mut acc = Array2::eye(1);
    for s in (1..=n_sites).rev() {
        let factor = if s == site {
            lower2()
        } else if s < site {
            zsign2()
        } else {
            identity2()
        };
        acc = kron(&acc, &factor);
    }
    acc
}

/// Creation operator at 1-based `site`.
pub fn cdag_full(n_sites: usize, site: usize) -> Array2<C64> {
    adjoint(&c_full(n_sites, site))
}

pub fn adjoint(m: &Array2<C64>) -> Array2<C64> {
    m.map(|v| v.conj()).reversed_axes().to_owned()
}

/// Vacuum vector in the full space.
pub fn vac_full(n_sites: usize) -> Array1<C64> {
    let mut v = Array1::zeros(1 << n_sites);
    v[0] = C64::new(1.0, 0.0);
    v
}

/// Filled-state vector `c†_1 c†_2 ⋯ c†_n |vac⟩` computed operator by
/// operator (rightmost acts first).
pub fn filled_full(n_sites: usize) -> Array1<C64> {
    let mut v = vac_full(n_sites);
    for site in (1..=n_sites).rev() {
        v = cdag_full(n_sites, site).dot(&v);
    }
    v
}

/// Full-space hopping Hamiltonian `Σ t_{xy} c†_x c_y` by matrix algebra.
pub fn hop_full(couplings: &CouplingSet) -> Array2<C64> {
    let n = couplings.n_sites();
    let dim = 1 << n;
    let mut h = Array2::zeros((dim, dim));
    for x in 1..=n {
        for y in 1..=n {
            let t = couplings.t_entry(x, y);
            if t == C64::default() {
                continue;
            }
            h = h + cdag_full(n, x).dot(&c_full(n, y)).map(|v| v * t);
        }
    }
    h
}

/// Full-space correlated term
/// `Σ_x A_x (Σ_y q_{xy} c†_y) c_x c†_x (Σ_y' q_{xy'} c_y')`.
pub fn cor_full(couplings: &CouplingSet, coeff: &[f64]) -> Array2<C64> {
    let n = couplings.n_sites();
    let dim = 1 << n;
    let mut h = Array2::zeros((dim, dim));
    for x in 1..=n {
        if coeff[x - 1] == 0.0 {
            continue;
        }
        let mut qx = Array2::<C64>::zeros((dim, dim));
        for y in 1..=n {
            let q = couplings.q_entry(x, y);
            if q != 0.0 {
                qx = qx + c_full(n, y).map(|v| v * q);
            }
        }
        let middle = c_full(n, x).dot(&cdag_full(n, x));
        let term = adjoint(&qx).dot(&middle).dot(&qx);
        h = h + term.map(|v| v * coeff[x - 1]);
    }
    h
}

/// Full-space pair operator `Q = Σ q_{xy} c_x c_y`.
pub fn q_full(couplings: &CouplingSet) -> Array2<C64> {
    let n = couplings.n_sites();
    let dim = 1 << n;
    let mut q = Array2::zeros((dim, dim));
    for x in 1..=n {
        for y in 1..=n {
            let qv = couplings.q_entry(x, y);
            if qv != 0.0 {
                q = q + c_full(n, x).dot(&c_full(n, y)).map(|v| v * qv);
            }
        }
    }
    q
}

/// Restrict a full-space operator to sector blocks: rows from `codomain`,
/// columns from `domain` (configuration encodings coincide with full-space
/// indices).
pub fn sector_block(
    full: &Array2<C64>,
    codomain: &FockBasis,
    domain: &FockBasis,
) -> Array2<C64> {
    let mut block = Array2::zeros((codomain.len(), domain.len()));
    for (j, &cj) in domain.configs().iter().enumerate() {
        for (i, &ci) in codomain.configs().iter().enumerate() {
            block[[i, j]] = full[[ci as usize, cj as usize]];
        }
    }
    block
}

/// Embed a sector state into the full space.
pub fn embed_full(state: &StateVector) -> Array1<C64> {
    let mut v = Array1::zeros(1 << state.basis.n_sites());
    for (&c, &a) in state.basis.configs().iter().zip(&state.amplitudes) {
        v[c as usize] = a;
    }
    v
}

/// Max entrywise difference between two complex matrices.
pub fn max_diff(a: &Array2<C64>, b: &Array2<C64>) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

/// Composite Simpson quadrature on [a, b].
pub fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, intervals: usize) -> f64 {
    let n = intervals + intervals % 2; // even
    let h = (b - a) / n as f64;
    let mut acc = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(a + i as f64 * h);
    }
    acc * h / 3.0
}

/// Deterministic pseudo-random state on a sector basis (SplitMix64).
pub fn pseudo_random_state(
    basis: std::sync::Arc<FockBasis>,
    seed: u64,
) -> StateVector {
    let mut s = seed.wrapping_mul(0x9e3779b97f4a7c15).wrapping_add(1);
    let mut next = move || {
        s = s.wrapping_add(0x9e3779b97f4a7c15);
        let mut z = s;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
        z ^= z >> 31;
        (z >> 11) as f64 / (1u64 << 53) as f64 - 0.5
    };
    let mut state = StateVector::zero(basis);
    for a in &mut state.amplitudes {
        *a = C64::new(next(), next());
    }
    state.normalize();
    state
}

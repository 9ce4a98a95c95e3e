//! Fixed-particle-number fermionic occupation bases and sign-correct
//! operator monomials.
//!
//! Conventions used throughout the crate:
//!
//! * sites carry 1-based labels; bit `x` of a configuration word encodes
//!   site `x + 1` (bit 0 = site 1);
//! * a basis configuration with occupied sites `x₁ < x₂ < … < x_N` stands
//!   for the state `c†_{x₁} c†_{x₂} ⋯ c†_{x_N} |vac⟩`, creation operators
//!   in ascending label order left-to-right, amplitude `+1`;
//! * acting with `c_x` or `c†_x` therefore picks up the sign
//!   `(−1)^(number of occupied sites with label < x)`.
//!
//! All scar-tower and product-state signs downstream are fixed by these
//! three rules.

use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Largest number of sites representable in a `u64` configuration word.
pub const MAX_SITES: usize = 60;

/// Refuse to enumerate sectors beyond this dimension (dense amplitude
/// storage; one complex vector of this length is ~1.6 GiB).
pub const MAX_SECTOR_DIM: u64 = 100_000_000;

/// Binomial coefficient in `u64`, saturating-free for the small arguments
/// used here (n ≤ 60).
pub fn binomial(n: usize, k: usize) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc as u64
}

/// Dimension of the fixed-`N` sector on `n_sites` sites.
pub fn sector_dimension(n_sites: usize, n_particles: usize) -> u64 {
    binomial(n_sites, n_particles)
}

/// Ordered basis of all `n_particles`-fermion occupation configurations on
/// `n_sites` sites, ascending in integer encoding.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FockBasis {
    n_sites: usize,
    n_particles: usize,
    configs: Vec<u64>,
}

impl FockBasis {
    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn n_particles(&self) -> usize {
        self.n_particles
    }

    pub fn len(&self) -> usize {
        self.configs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.configs.is_empty()
    }

    pub fn configs(&self) -> &[u64] {
        &self.configs
    }

    pub fn config(&self, index: usize) -> u64 {
        self.configs[index]
    }

    /// Position of `config` in the basis. Configurations are stored sorted,
    /// so this is a binary search.
    pub fn index_of(&self, config: u64) -> Option<usize> {
        self.configs.binary_search(&config).ok()
    }

    /// Estimated bytes for one dense complex amplitude vector over this basis.
    pub fn amplitude_bytes(&self) -> u64 {
        self.configs.len() as u64 * std::mem::size_of::<Complex64>() as u64
    }
}

/// Enumerate the complete fixed-`N` sector basis in ascending integer order.
pub fn enumerate_sector(n_sites: usize, n_particles: usize) -> Result<Arc<FockBasis>> {
    if n_sites > MAX_SITES {
        return Err(Error::InvalidParameter(format!(
            "n_sites {n_sites} exceeds the {MAX_SITES}-site configuration-word limit"
        )));
    }
    if n_particles > n_sites {
        return Err(Error::ParticleNumberOutOfRange {
            n: n_particles,
            sites: n_sites,
        });
    }
    let dim = sector_dimension(n_sites, n_particles);
    if dim > MAX_SECTOR_DIM {
        return Err(Error::InvalidParameter(format!(
            "sector dimension {dim} exceeds dense-storage guard {MAX_SECTOR_DIM}"
        )));
    }
    let mut configs = Vec::with_capacity(dim as usize);
    if n_particles == 0 {
        configs.push(0);
    } else {
        // Gosper's hack: next integer with the same popcount.
        let mut c: u64 = (1 << n_particles) - 1;
        let limit: u64 = if n_sites == 64 { u64::MAX } else { 1 << n_sites };
        while c < limit {
            configs.push(c);
            let lowest = c & c.wrapping_neg();
            let ripple = c + lowest;
            let ones = ((c ^ ripple) >> 2) / lowest;
            c = ripple | ones;
        }
    }
    debug_assert_eq!(configs.len() as u64, dim);
    Ok(Arc::new(FockBasis {
        n_sites,
        n_particles,
        configs,
    }))
}

/// Complex amplitudes over one sector basis.
#[derive(Debug, Clone)]
pub struct StateVector {
    pub basis: Arc<FockBasis>,
    pub amplitudes: Vec<Complex64>,
}

impl StateVector {
    pub fn zero(basis: Arc<FockBasis>) -> Self {
        let amplitudes = vec![Complex64::default(); basis.len()];
        Self { basis, amplitudes }
    }

    /// Unit basis vector for one configuration.
    pub fn basis_state(basis: Arc<FockBasis>, config: u64) -> Result<Self> {
        let idx = basis.index_of(config).ok_or_else(|| {
            Error::InvalidParameter(format!("config {config:#b} not in sector basis"))
        })?;
        let mut state = Self::zero(basis);
        state.amplitudes[idx] = Complex64::new(1.0, 0.0);
        Ok(state)
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes
            .iter()
            .map(|a| a.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    pub fn normalize(&mut self) -> f64 {
        let n = self.norm();
        if n > 0.0 {
            for a in &mut self.amplitudes {
                *a /= n;
            }
        }
        n
    }

    pub fn normalized(mut self) -> Self {
        self.normalize();
        self
    }

    /// ⟨self|other⟩ with the conjugate on `self`.
    pub fn inner(&self, other: &Self) -> Complex64 {
        debug_assert_eq!(self.basis.len(), other.basis.len());
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    pub fn scaled(mut self, factor: Complex64) -> Self {
        for a in &mut self.amplitudes {
            *a *= factor;
        }
        self
    }

    pub fn add_assign(&mut self, other: &Self) {
        debug_assert_eq!(self.basis.len(), other.basis.len());
        for (a, b) in self.amplitudes.iter_mut().zip(&other.amplitudes) {
            *a += b;
        }
    }

    pub fn sub_assign(&mut self, other: &Self) {
        debug_assert_eq!(self.basis.len(), other.basis.len());
        for (a, b) in self.amplitudes.iter_mut().zip(&other.amplitudes) {
            *a -= b;
        }
    }

    /// Require ‖ψ‖ = 1 within `tol`.
    pub fn check_normalized(&self, tol: f64) -> Result<()> {
        let n = self.norm();
        if (n - 1.0).abs() > tol {
            return Err(Error::NotNormalized(n));
        }
        Ok(())
    }
}

/// The vacuum: the single zero-particle configuration.
pub fn vacuum_state(n_sites: usize) -> Result<StateVector> {
    let basis = enumerate_sector(n_sites, 0)?;
    StateVector::basis_state(basis, 0)
}

/// The completely filled state `∏_x c†_x |vac⟩` (ascending label order),
/// amplitude +1 by the crate convention.
pub fn filled_state(n_sites: usize) -> Result<StateVector> {
    let basis = enumerate_sector(n_sites, n_sites)?;
    let config = if n_sites == 0 { 0 } else { (1u64 << n_sites) - 1 };
    StateVector::basis_state(basis, config)
}

/// One creation or annihilation operator at a 1-based site label.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FermiOp {
    Create(usize),
    Annihilate(usize),
}

impl FermiOp {
    fn site(&self) -> usize {
        match *self {
            FermiOp::Create(s) | FermiOp::Annihilate(s) => s,
        }
    }

    fn particle_delta(&self) -> i64 {
        match self {
            FermiOp::Create(_) => 1,
            FermiOp::Annihilate(_) => -1,
        }
    }
}

/// Parity of the number of occupied sites strictly below `bit`: the
/// fermionic sign exponent for acting at that bit.
#[inline]
pub fn sign_at(config: u64, bit: usize) -> f64 {
    let below = config & ((1u64 << bit) - 1);
    if below.count_ones() % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Apply `c†` at `bit` to a single configuration: `None` if occupied,
/// otherwise the new configuration and the sign.
#[inline]
pub fn create_bit(config: u64, bit: usize) -> Option<(u64, f64)> {
    if config & (1u64 << bit) != 0 {
        None
    } else {
        Some((config | (1u64 << bit), sign_at(config, bit)))
    }
}

/// Apply `c` at `bit` to a single configuration: `None` if empty,
/// otherwise the new configuration and the sign.
#[inline]
pub fn annihilate_bit(config: u64, bit: usize) -> Option<(u64, f64)> {
    if config & (1u64 << bit) == 0 {
        None
    } else {
        Some((config & !(1u64 << bit), sign_at(config, bit)))
    }
}

/// Apply a product of creation/annihilation operators to a state. The
/// operator list is written left-to-right like the formula, so the *last*
/// element acts first. The result lives in the sector implied by the net
/// particle-number change; a zero vector is a valid outcome.
pub fn apply_monomial(ops: &[FermiOp], state: &StateVector) -> Result<StateVector> {
    let n_sites = state.basis.n_sites();
    for op in ops {
        let s = op.site();
        if s == 0 || s > n_sites {
            return Err(Error::InvalidParameter(format!(
                "site label {s} outside 1..={n_sites}"
            )));
        }
    }
    let delta: i64 = ops.iter().map(FermiOp::particle_delta).sum();
    let target_n = state.basis.n_particles() as i64 + delta;
    if target_n < 0 || target_n > n_sites as i64 {
        // Every monomial path necessarily annihilates the state.
        let basis = enumerate_sector(n_sites, 0)?;
        return Ok(StateVector::zero(basis));
    }
    let target = enumerate_sector(n_sites, target_n as usize)?;
    let mut out = StateVector::zero(Arc::clone(&target));
    for (&config, &amp) in state.basis.configs().iter().zip(&state.amplitudes) {
        if amp == Complex64::default() {
            continue;
        }
        let mut c = config;
        let mut sign = 1.0;
        let mut alive = true;
        for op in ops.iter().rev() {
            let bit = op.site() - 1;
            let step = match op {
                FermiOp::Create(_) => create_bit(c, bit),
                FermiOp::Annihilate(_) => annihilate_bit(c, bit),
            };
            match step {
                Some((next, s)) => {
                    c = next;
                    sign *= s;
                }
                None => {
                    alive = false;
                    break;
                }
            }
        }
        if alive {
            let idx = target
                .index_of(c)
                .expect("monomial landed outside its sector");
            out.amplitudes[idx] += amp * sign;
        }
    }
    Ok(out)
}

/// Render a configuration as a bitstring with site 1 leftmost.
pub fn config_bitstring(config: u64, n_sites: usize) -> String {
    (0..n_sites)
        .map(|b| if config & (1u64 << b) != 0 { '1' } else { '0' })
        .collect()
}

/// Parse the bitstring format produced by [`config_bitstring`].
pub fn parse_bitstring(s: &str) -> Result<u64> {
    let mut config = 0u64;
    for (i, ch) in s.chars().enumerate() {
        match ch {
            '1' => config |= 1 << i,
            '0' => {}
            _ => {
                return Err(Error::InvalidParameter(format!(
                    "bad bitstring character {ch:?}"
                )))
            }
        }
    }
    Ok(config)
}

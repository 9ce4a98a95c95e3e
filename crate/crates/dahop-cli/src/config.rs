//! Run configuration: a single versioned JSON document describing the
//! lattice, the coupling draw, and the pipeline parameters.

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use dahop::lattice::{
    build_chain, build_rectangular, build_triangular, sample_couplings, Boundary, CouplingMode,
    CouplingSet, LatticeSpec, SamplingRanges,
};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, tag = "type", rename_all = "lowercase")]
pub enum LatticeConfig {
    Rectangular {
        rows: usize,
        cols: usize,
        boundary: Boundary,
    },
    Chain {
        length: usize,
        boundary: Boundary,
    },
    Triangular {
        rows: usize,
        cols: usize,
    },
}

impl LatticeConfig {
    pub fn build(&self) -> Result<LatticeSpec> {
        let lat = match *self {
            LatticeConfig::Rectangular { rows, cols, boundary } => {
                build_rectangular(rows, cols, boundary)
            }
            LatticeConfig::Chain { length, boundary } => build_chain(length, boundary),
            LatticeConfig::Triangular { rows, cols } => build_triangular(rows, cols),
        };
        lat.context("building the lattice from the config")
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "lowercase")]
pub enum Spacing {
    Log,
    Linear,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimesConfig {
    pub start: f64,
    pub stop: f64,
    pub points: usize,
    pub spacing: Spacing,
}

impl Default for TimesConfig {
    fn default() -> Self {
        Self {
            start: 0.1,
            stop: 100.0,
            points: 200,
            spacing: Spacing::Log,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    pub lattice: LatticeConfig,
    pub mode: CouplingMode,
    /// Closed interval for the bond amplitudes (entries of T or K).
    pub t_range: (f64, f64),
    /// Closed interval for the on-site coefficients A_x.
    pub a_range: (f64, f64),
    /// Positive interval for parent weights B_x; required by parent-census.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b_range: Option<(f64, f64)>,
    pub seed: u64,
    /// Particle number for sector-resolved pipelines.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_particles: Option<usize>,
    /// Pair power k for the uniform-pair initial state; defaults to
    /// (|Λ| − N)/2.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pair_power: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub times: Option<TimesConfig>,
    /// Histogram bins for level statistics.
    #[serde(default = "default_bins")]
    pub bins: usize,
    /// Histogram range for normalized spacings.
    #[serde(default = "default_s_max")]
    pub s_max: f64,
}

fn default_bins() -> usize {
    dahop::spectra::DEFAULT_BINS
}

fn default_s_max() -> f64 {
    dahop::spectra::DEFAULT_S_MAX
}

impl RunConfig {
    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let cfg: RunConfig = serde_json::from_str(&text)
            .with_context(|| format!("config {} does not match the schema", path.display()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            bail!(
                "schema_version {} unsupported (this build speaks {})",
                self.schema_version,
                SCHEMA_VERSION
            );
        }
        if let CouplingMode::NonBipartite { q_power } = self.mode {
            if q_power == 0 || q_power % 2 == 0 {
                bail!("mode.q_power must be a positive odd integer, got {q_power}");
            }
        }
        if self.t_range.0 > self.t_range.1 || self.a_range.0 > self.a_range.1 {
            bail!("sampling ranges must satisfy lo ≤ hi");
        }
        if let Some((lo, hi)) = self.b_range {
            if lo <= 0.0 || lo > hi {
                bail!("b_range must be a positive interval");
            }
        }
        if let Some(t) = &self.times {
            if t.points < 2 {
                bail!("times.points must be ≥ 2");
            }
        }
        if self.bins == 0 || self.s_max <= 0.0 {
            bail!("bins must be ≥ 1 and s_max positive");
        }
        Ok(())
    }

    pub fn ranges(&self) -> SamplingRanges {
        SamplingRanges {
            t: self.t_range,
            a: self.a_range,
            b: self.b_range,
        }
    }

    /// Draw the couplings for one seed.
    pub fn couplings(&self, lattice: &LatticeSpec, seed: u64) -> Result<CouplingSet> {
        sample_couplings(lattice, self.ranges(), seed, self.mode)
            .context("sampling couplings from the config ranges")
    }

    /// The sector this config aims at; defaults to half filling.
    pub fn sector(&self, lattice: &LatticeSpec) -> usize {
        self.n_particles.unwrap_or(lattice.n_sites / 2)
    }

    pub fn time_grid(&self) -> Result<dahop::dynamics::TimeGrid> {
        let t = self.times.unwrap_or_default();
        let grid = match t.spacing {
            Spacing::Log => dahop::dynamics::TimeGrid::log_spaced(t.start, t.stop, t.points),
            Spacing::Linear => dahop::dynamics::TimeGrid::linear(t.start, t.stop, t.points),
        };
        grid.context("building the time grid")
    }
}

//! The figure-level pipelines behind each CLI subcommand. Every pipeline
//! writes CSV tables plus a `.meta.json` sidecar carrying the echoed
//! config, seeds, RNG record, build id, and stage timings.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use dahop::dynamics::{evolve, product_state, uniform_pair_state};
use dahop::entanglement::{entropy_of_state, Bipartition};
use dahop::fockspace::{enumerate_sector, StateVector};
use dahop::io as dio;
use dahop::lattice::RNG_DESCRIPTOR;
use dahop::operators::{
    bond_density_expectation, build_hamiltonian, particle_hole_transform,
};
use dahop::parentcheck::{ground_space_match, zero_mode_census_with_vectors};
use dahop::scars::{build_scar_tower, pairing_decomposition, verify_pairing, verify_rsga1, verify_scar};
use dahop::spectra::{diagonalize_with_cap, level_statistics_binned, SpectrumResult, Window};

use crate::config::RunConfig;

pub struct RunContext {
    pub config: RunConfig,
    pub config_echo: serde_json::Value,
    pub out_dir: PathBuf,
    pub seeds: Vec<u64>,
    pub dense_cap: usize,
}

impl RunContext {
    /// Seeds for a sweep: `seed, seed+1, …` — documented, deterministic.
    pub fn new(config: RunConfig, out_dir: PathBuf, n_seeds: usize, dense_cap: usize) -> Result<Self> {
        std::fs::create_dir_all(&out_dir)
            .with_context(|| format!("creating output directory {}", out_dir.display()))?;
        let config_echo = serde_json::to_value(&config)?;
        let seeds = (0..n_seeds.max(1) as u64).map(|i| config.seed + i).collect();
        Ok(Self {
            config,
            config_echo,
            out_dir,
            seeds,
            dense_cap,
        })
    }

    fn create(&self, name: &str) -> Result<BufWriter<File>> {
        let path = self.out_dir.join(name);
        Ok(BufWriter::new(File::create(&path).with_context(|| {
            format!("creating {}", path.display())
        })?))
    }

    fn sidecar(
        &self,
        stem: &str,
        timings: BTreeMap<String, f64>,
        extra: serde_json::Value,
    ) -> Result<()> {
        #[derive(Serialize)]
        struct Meta<'a> {
            tool: &'a str,
            version: &'a str,
            build: &'a str,
            rng: &'a str,
            seeds: &'a [u64],
            config: &'a serde_json::Value,
            timings_secs: BTreeMap<String, f64>,
            extra: serde_json::Value,
        }
        let meta = Meta {
            tool: "dahop",
            version: env!("CARGO_PKG_VERSION"),
            build: env!("DAHOP_GIT_DESCRIBE"),
            rng: RNG_DESCRIPTOR,
            seeds: &self.seeds,
            config: &self.config_echo,
            timings_secs: timings,
            extra,
        };
        let mut w = self.create(&format!("{stem}.meta.json"))?;
        serde_json::to_writer_pretty(&mut w, &meta)?;
        writeln!(w)?;
        Ok(())
    }
}

fn spectrum_for(
    ctx: &RunContext,
    seed: u64,
    want_vectors: bool,
) -> Result<(dahop::lattice::LatticeSpec, dahop::lattice::CouplingSet, SpectrumResult)> {
    let lattice = ctx.config.lattice.build()?;
    let couplings = ctx.config.couplings(&lattice, seed)?;
    let basis = enumerate_sector(lattice.n_sites, ctx.config.sector(&lattice))?;
    let h = build_hamiltonian(&couplings, &basis)?;
    let spec = diagonalize_with_cap(&h, want_vectors, ctx.dense_cap)?;
    Ok((lattice, couplings, spec))
}

/// Level statistics over a seed sweep: per-seed mean r, pooled histogram,
/// and the full spacing table for the first seed.
pub fn levelstats(ctx: &RunContext) -> Result<()> {
    let t0 = Instant::now();
    let results: Vec<(u64, Vec<f64>)> = ctx
        .seeds
        .par_iter()
        .map(|&seed| -> Result<(u64, Vec<f64>)> {
            let (_, _, spec) = spectrum_for(ctx, seed, false)?;
            Ok((seed, spec.eigenvalues))
        })
        .collect::<Result<_>>()?;
    let diag_secs = t0.elapsed().as_secs_f64();

    let bins = ctx.config.bins;
    let s_max = ctx.config.s_max;
    let mut per_seed = Vec::new();
    let mut pooled_counts = vec![0usize; bins];
    let mut pooled_total = 0usize;
    let mut edges: Vec<f64> = Vec::new();
    let mut mean_rs = Vec::new();
    for (seed, eigs) in &results {
        let stats = level_statistics_binned(eigs, Window::MiddleHalf, bins, s_max)?;
        per_seed.push((*seed, stats.mean_r, stats.window.1 - stats.window.0, stats.zero_spacings));
        mean_rs.push(stats.mean_r);
        pooled_total += stats.spacings.len();
        for (b, &c) in stats.histogram.counts.iter().enumerate() {
            pooled_counts[b] += c;
        }
        edges = stats.histogram.edges.clone();
    }
    dio::write_seed_summary(&per_seed, ctx.create("per_seed.csv")?)?;

    let mut w = ctx.create("histogram.csv")?;
    writeln!(w, "s_mid,count,density,goe,gue,poisson")?;
    let width = edges[1] - edges[0];
    for (b, &count) in pooled_counts.iter().enumerate() {
        let mid = 0.5 * (edges[b] + edges[b + 1]);
        let density = count as f64 / (pooled_total as f64 * width);
        use dahop::spectra::{reference_distribution, ReferenceKind};
        writeln!(
            w,
            "{},{},{},{},{},{}",
            mid,
            count,
            density,
            reference_distribution(ReferenceKind::Goe, mid),
            reference_distribution(ReferenceKind::Gue, mid),
            reference_distribution(ReferenceKind::Poisson, mid)
        )?;
    }
    drop(w);

    let (first_seed, first_eigs) = &results[0];
    let stats = level_statistics_binned(first_eigs, Window::MiddleHalf, bins, s_max)?;
    dio::write_level_table(first_eigs, &stats, ctx.create("levels_first_seed.csv")?)?;

    let pooled_mean = mean_rs.iter().sum::<f64>() / mean_rs.len() as f64;
    let var = mean_rs
        .iter()
        .map(|r| (r - pooled_mean).powi(2))
        .sum::<f64>()
        / (mean_rs.len().max(2) - 1) as f64;
    let stderr = (var / mean_rs.len() as f64).sqrt();
    let mut timings = BTreeMap::new();
    timings.insert("diagonalization".into(), diag_secs);
    ctx.sidecar(
        "levelstats",
        timings,
        json!({
            "pooled_mean_r": pooled_mean,
            "pooled_stderr": stderr,
            "first_seed": first_seed,
        }),
    )?;
    Ok(())
}

fn scatter_rows(
    ctx: &RunContext,
    want_entropy: bool,
) -> Result<(Vec<(f64, f64, f64)>, BTreeMap<String, f64>)> {
    let t0 = Instant::now();
    let (lattice, couplings, spec) = spectrum_for(ctx, ctx.seeds[0], true)?;
    let diag_secs = t0.elapsed().as_secs_f64();
    let n_particles = ctx.config.sector(&lattice);
    let basis = enumerate_sector(lattice.n_sites, n_particles)?;
    let vectors = spec.eigenvectors.as_ref().expect("vectors requested");

    let tower = build_scar_tower(&couplings, lattice.n_sites)?;
    let scar_overlaps: Vec<f64> = match tower.state_for_sector(n_particles) {
        Some(scar) => dio::overlaps_with_eigenvectors(vectors, scar),
        None => vec![0.0; spec.dim()],
    };

    let part = Bipartition::half(lattice.n_sites)?;
    let t1 = Instant::now();
    let rows: Vec<(f64, f64, f64)> = (0..spec.dim())
        .into_par_iter()
        .map(|j| -> Result<(f64, f64, f64)> {
            let state = StateVector {
                basis: basis.clone(),
                amplitudes: vectors.column(j),
            };
            let value = if want_entropy {
                entropy_of_state(&state, &part)?
            } else {
                bond_density_expectation(&state, &lattice.bonds)?
            };
            Ok((spec.eigenvalues[j], value, scar_overlaps[j]))
        })
        .collect::<Result<_>>()?;
    let mut timings = BTreeMap::new();
    timings.insert("diagonalization".into(), diag_secs);
    timings.insert(
        if want_entropy { "entropies" } else { "correlators" }.into(),
        t1.elapsed().as_secs_f64(),
    );
    Ok((rows, timings))
}

/// Entanglement-entropy scatter across all eigenstates of one sector.
pub fn ee_scatter(ctx: &RunContext) -> Result<()> {
    let (rows, timings) = scatter_rows(ctx, true)?;
    dio::write_entropy_scatter(&rows, ctx.create("ee_scatter.csv")?)?;
    let min_row = rows
        .iter()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("nonempty spectrum");
    ctx.sidecar(
        "ee_scatter",
        timings,
        json!({"min_entropy": min_row.1, "min_entropy_energy": min_row.0}),
    )?;
    Ok(())
}

/// Bond-averaged density-density correlator scatter.
pub fn corr_scatter(ctx: &RunContext) -> Result<()> {
    let (rows, timings) = scatter_rows(ctx, false)?;
    dio::write_correlator_scatter(&rows, ctx.create("corr_scatter.csv")?)?;
    ctx.sidecar("corr_scatter", timings, json!({}))?;
    Ok(())
}

/// Quench traces from the product and uniform-pair initial states.
pub fn quench(ctx: &RunContext) -> Result<()> {
    let t0 = Instant::now();
    let (lattice, couplings, spec) = spectrum_for(ctx, ctx.seeds[0], true)?;
    let diag_secs = t0.elapsed().as_secs_f64();
    let n_particles = ctx.config.sector(&lattice);
    let grid = ctx.config.time_grid()?;
    let part = Bipartition::half(lattice.n_sites)?;

    let prod = product_state(&lattice, n_particles)?;
    let trace_p = evolve(&spec, &prod, &grid, &part, "product")?;
    dio::write_quench(&trace_p, ctx.create("quench_product.csv")?)?;

    let holes = lattice.n_sites - n_particles;
    let k = match ctx.config.pair_power {
        Some(k) => k,
        None if holes % 2 == 0 => holes / 2,
        None => bail!(
            "sector N={n_particles} is not reachable by hole pairs; set pair_power explicitly"
        ),
    };
    let uni = uniform_pair_state(&lattice, k)?;
    if uni.basis.n_particles() != n_particles {
        bail!(
            "uniform-pair state with k={k} lives in N={}, config wants N={n_particles}",
            uni.basis.n_particles()
        );
    }
    let trace_u = evolve(&spec, &uni, &grid, &part, "uniform_pair")?;
    dio::write_quench(&trace_u, ctx.create("quench_uniform.csv")?)?;

    let tower = build_scar_tower(&couplings, lattice.n_sites)?;
    let scar_overlap_sq = tower
        .state_for_sector(n_particles)
        .map(|s| s.inner(&uni).norm_sqr())
        .unwrap_or(0.0);

    let mut timings = BTreeMap::new();
    timings.insert("diagonalization".into(), diag_secs);
    timings.insert("evolution".into(), t0.elapsed().as_secs_f64() - diag_secs);
    ctx.sidecar(
        "quench",
        timings,
        json!({
            "n_particles": n_particles,
            "pair_power": k,
            "baseline": trace_p.baseline,
            "uniform_scar_overlap_sq": scar_overlap_sq,
        }),
    )?;
    Ok(())
}

/// Tower, RSGA-1, and pairing-mode verification; exits nonzero when any
/// residual crosses 1e−10.
pub fn scar_verify(ctx: &RunContext) -> Result<()> {
    const TOL: f64 = 1e-10;
    let t0 = Instant::now();
    let lattice = ctx.config.lattice.build()?;
    let couplings = ctx.config.couplings(&lattice, ctx.seeds[0])?;
    let n = lattice.n_sites;

    let tower = build_scar_tower(&couplings, n)?;
    let mut rows = Vec::new();
    let mut worst: f64 = 0.0;
    for (k, state) in tower.states.iter().enumerate() {
        let h = build_hamiltonian(&couplings, &state.basis)?;
        let resid = verify_scar(&h, state)?;
        worst = worst.max(resid);
        rows.push((k, state.basis.n_particles(), tower.raw_norms[k], resid));
        let mut w = ctx.create(&format!("tower_state_k{k}.csv"))?;
        dio::write_state_csv(state, &mut w)?;
    }
    dio::write_tower_residuals(&rows, ctx.create("tower_residuals.csv")?)?;

    let rsga = (n <= 10).then(|| verify_rsga1(&couplings, n)).transpose()?;
    if let Some(r) = &rsga {
        worst = worst.max(r.cond_i).max(r.cond_ii).max(r.cond_iii);
    }

    let pairing = match &lattice.labels {
        Some(labels) => {
            let decomp = pairing_decomposition(&couplings, labels)?;
            let test_n = (n / 2).max(2);
            let basis = enumerate_sector(n, test_n)?;
            let report = verify_pairing(&decomp, &couplings, &basis)?;
            worst = worst.max(report.max_residual());
            Some((decomp.epsilons.clone(), decomp.rank, report))
        }
        None => None,
    };

    let mut timings = BTreeMap::new();
    timings.insert("total".into(), t0.elapsed().as_secs_f64());
    ctx.sidecar(
        "scar_verify",
        timings,
        json!({
            "k_max": tower.k_max,
            "worst_residual": worst,
            "tolerance": TOL,
            "rsga1": rsga,
            "pairing": pairing.map(|(eps, rank, rep)| json!({
                "epsilons": eps,
                "rank": rank,
                "report": rep,
            })),
        }),
    )?;
    if worst >= TOL {
        bail!("scar verification failed: worst residual {worst} ≥ {TOL}");
    }
    Ok(())
}

/// Zero-mode census of the parent Hamiltonian over a seed sweep.
pub fn parent_census(ctx: &RunContext) -> Result<()> {
    if ctx.config.b_range.is_none() {
        bail!("parent-census needs b_range in the config (positive interval)");
    }
    let t0 = Instant::now();
    let lattice = ctx.config.lattice.build()?;
    let runs: Vec<serde_json::Value> = ctx
        .seeds
        .par_iter()
        .map(|&seed| -> Result<serde_json::Value> {
            let couplings = ctx.config.couplings(&lattice, seed)?;
            let census = zero_mode_census_with_vectors(&couplings, &lattice)?;
            let tower = build_scar_tower(&couplings, lattice.n_sites)?;
            let matched = ground_space_match(&census, &tower)?;
            Ok(json!({
                "seed": seed,
                "report": census.report,
                "ground_space_match": matched,
            }))
        })
        .collect::<Result<_>>()?;

    let mut w = ctx.create("census.json")?;
    serde_json::to_writer_pretty(&mut w, &runs)?;
    writeln!(w)?;
    drop(w);

    let mut timings = BTreeMap::new();
    timings.insert("total".into(), t0.elapsed().as_secs_f64());
    ctx.sidecar("parent_census", timings, json!({"runs": runs.len()}))?;
    Ok(())
}

/// Particle-hole consistency: sector-mirrored spectra and the transformed
/// tower's residuals.
pub fn ph_check(ctx: &RunContext) -> Result<()> {
    const TOL: f64 = 1e-10;
    let t0 = Instant::now();
    let lattice = ctx.config.lattice.build()?;
    let couplings = ctx.config.couplings(&lattice, ctx.seeds[0])?;
    let n = lattice.n_sites;
    let hole = particle_hole_transform(&couplings);

    let mut rows = Vec::new();
    let mut max_dev: f64 = 0.0;
    for n_particles in 0..=n {
        let basis = enumerate_sector(n, n_particles)?;
        let mirror = enumerate_sector(n, n - n_particles)?;
        let h = build_hamiltonian(&couplings, &basis)?;
        let ht = hole.build_hamiltonian(&mirror)?;
        let ew = diagonalize_with_cap(&h, false, ctx.dense_cap)?.eigenvalues;
        let ewt = diagonalize_with_cap(&ht, false, ctx.dense_cap)?.eigenvalues;
        let scale = ew.iter().map(|e| e.abs()).fold(1.0f64, f64::max);
        for (i, (a, b)) in ew.iter().zip(&ewt).enumerate() {
            max_dev = max_dev.max((a - b).abs() / scale);
            rows.push((n_particles, i, *a, *b));
        }
    }
    dio::write_spectrum_pairs(&rows, ctx.create("spectrum_pairs.csv")?)?;

    // Transformed tower |Ψ̃_k⟩ = Q̃^k|vac⟩ must be zero modes of H̃. The
    // residual scale is the half-filling ‖H̃‖ (trivial sectors have no
    // usable local norm).
    let scale = hole
        .build_hamiltonian(&enumerate_sector(n, n / 2)?)?
        .spectral_norm_est(20)
        .max(f64::MIN_POSITIVE);
    let mut state = dahop::fockspace::vacuum_state(n)?;
    let mut tower_resid: f64 = 0.0;
    for _k in 0..=(n / 2) {
        let ht = hole.build_hamiltonian(&state.basis)?;
        tower_resid = tower_resid.max(ht.apply(&state)?.norm() / scale);
        if state.basis.n_particles() + 2 > n {
            break;
        }
        let q_up = hole.build_q_creation(&state.basis)?;
        state = q_up.apply(&state)?;
        if state.normalize() < 1e-12 {
            break;
        }
    }

    let mut timings = BTreeMap::new();
    timings.insert("total".into(), t0.elapsed().as_secs_f64());
    ctx.sidecar(
        "ph_check",
        timings,
        json!({
            "max_spectrum_deviation": max_dev,
            "transformed_tower_residual": tower_resid,
            "tolerance": TOL,
        }),
    )?;
    if max_dev >= TOL || tower_resid >= TOL {
        bail!("particle-hole check failed: spectra deviate by {max_dev}, tower residual {tower_resid}");
    }
    Ok(())
}

//! Text export formats: CSV tables for spectra, scatter plots, and quench
//! traces; JSON for states, lattices, couplings, and reports.
//!
//! All writers are deterministic: identical inputs produce byte-identical
//! output. Floats are written with Rust's shortest round-trip formatting.

use std::io::Write;

use num_complex::Complex64;
use serde::Serialize;

use crate::dynamics::QuenchTrace;
use crate::error::Result;
use crate::fockspace::config_bitstring;
use crate::fockspace::StateVector;
use crate::spectra::LevelStats;

/// StateVector CSV: `config,re,im`, one row per basis configuration,
/// bitstring with site 1 leftmost.
pub fn write_state_csv<W: Write>(state: &StateVector, mut w: W) -> Result<()> {
    writeln!(w, "config,re,im")?;
    let n = state.basis.n_sites();
    for (&config, amp) in state.basis.configs().iter().zip(&state.amplitudes) {
        writeln!(w, "{},{},{}", config_bitstring(config, n), amp.re, amp.im)?;
    }
    Ok(())
}

/// StateVector JSON: an array of `{config, re, im}` records.
pub fn state_to_json(state: &StateVector) -> Result<String> {
    #[derive(Serialize)]
    struct Row<'a> {
        config: &'a str,
        re: f64,
        im: f64,
    }
    let n = state.basis.n_sites();
    let strings: Vec<String> = state
        .basis
        .configs()
        .iter()
        .map(|&c| config_bitstring(c, n))
        .collect();
    let rows: Vec<Row> = strings
        .iter()
        .zip(&state.amplitudes)
        .map(|(s, a)| Row {
            config: s,
            re: a.re,
            im: a.im,
        })
        .collect();
    Ok(serde_json::to_string_pretty(&rows)?)
}

/// Level-spacing table: `index,energy,spacing,r`, spacings normalized by
/// the window mean; `spacing` and `r` are empty at positions where they
/// are undefined (the last one or two window levels).
pub fn write_level_table<W: Write>(
    eigenvalues: &[f64],
    stats: &LevelStats,
    mut w: W,
) -> Result<()> {
    writeln!(w, "index,energy,spacing,r")?;
    let (lo, hi) = stats.window;
    for (offset, idx) in (lo..hi).enumerate() {
        let s = stats
            .spacings
            .get(offset)
            .map(|v| v.to_string())
            .unwrap_or_default();
        let r = stats
            .r_values
            .get(offset)
            .map(|v| v.to_string())
            .unwrap_or_default();
        writeln!(w, "{},{},{},{}", idx, eigenvalues[idx], s, r)?;
    }
    Ok(())
}

/// Spacing histogram: `s_mid,count,density`, density normalized so the
/// histogram integrates to the kept sample fraction.
pub fn write_histogram<W: Write>(stats: &LevelStats, mut w: W) -> Result<()> {
    writeln!(w, "s_mid,count,density")?;
    let total = stats.spacings.len();
    for ((mid, density), &count) in stats
        .histogram
        .density(total)
        .iter()
        .zip(&stats.histogram.counts)
    {
        writeln!(w, "{},{},{}", mid, count, density)?;
    }
    Ok(())
}

/// Entanglement scatter table: `energy,entropy,scar_overlap` per eigenstate.
pub fn write_entropy_scatter<W: Write>(rows: &[(f64, f64, f64)], mut w: W) -> Result<()> {
    writeln!(w, "energy,entropy,scar_overlap")?;
    for &(e, s, v) in rows {
        writeln!(w, "{},{},{}", e, s, v)?;
    }
    Ok(())
}

/// Correlator scatter table: `energy,correlator,scar_overlap` per eigenstate.
pub fn write_correlator_scatter<W: Write>(rows: &[(f64, f64, f64)], mut w: W) -> Result<()> {
    writeln!(w, "energy,correlator,scar_overlap")?;
    for &(e, o, v) in rows {
        writeln!(w, "{},{},{}", e, o, v)?;
    }
    Ok(())
}

/// Scar-tower residual table: `k,n_particles,raw_norm,residual`.
pub fn write_tower_residuals<W: Write>(
    rows: &[(usize, usize, f64, f64)],
    mut w: W,
) -> Result<()> {
    writeln!(w, "k,n_particles,raw_norm,residual")?;
    for &(k, n, raw, r) in rows {
        writeln!(w, "{},{},{},{}", k, n, raw, r)?;
    }
    Ok(())
}

/// Quench trace CSV: `t,fidelity,entropy,baseline`.
pub fn write_quench<W: Write>(trace: &QuenchTrace, mut w: W) -> Result<()> {
    writeln!(w, "t,fidelity,entropy,baseline")?;
    for i in 0..trace.times.len() {
        writeln!(
            w,
            "{},{},{},{}",
            trace.times[i], trace.fidelity[i], trace.entropy[i], trace.baseline
        )?;
    }
    Ok(())
}

/// Per-seed summary: `seed,mean_r,levels_in_window,zero_spacings`.
pub fn write_seed_summary<W: Write>(
    rows: &[(u64, f64, usize, usize)],
    mut w: W,
) -> Result<()> {
    writeln!(w, "seed,mean_r,levels_in_window,zero_spacings")?;
    for &(seed, mean_r, levels, zeros) in rows {
        writeln!(w, "{},{},{},{}", seed, mean_r, levels, zeros)?;
    }
    Ok(())
}

/// Paired-spectrum table for the particle-hole check:
/// `n_particles,index,energy,energy_transformed`.
pub fn write_spectrum_pairs<W: Write>(
    rows: &[(usize, usize, f64, f64)],
    mut w: W,
) -> Result<()> {
    writeln!(w, "n_particles,index,energy,energy_transformed")?;
    for &(n, i, e, et) in rows {
        writeln!(w, "{},{},{},{}", n, i, e, et)?;
    }
    Ok(())
}

/// Overlap of a state with each eigenvector column: |⟨φ_j|ψ⟩|².
pub fn overlaps_with_eigenvectors(
    vectors: &crate::spectra::EigenVectors,
    state: &StateVector,
) -> Vec<f64> {
    vectors
        .project(&state.amplitudes)
        .iter()
        .map(Complex64::norm_sqr)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fockspace::enumerate_sector;

    #[test]
    fn state_csv_layout() {
        let basis = enumerate_sector(3, 1).unwrap();
        let state = StateVector::basis_state(basis, 0b010).unwrap();
        let mut buf = Vec::new();
        write_state_csv(&state, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "config,re,im");
        assert_eq!(lines[1], "100,0,0");
        assert_eq!(lines[2], "010,1,0");
        assert_eq!(lines[3], "001,0,0");
    }

    #[test]
    fn deterministic_json() {
        let basis = enumerate_sector(2, 1).unwrap();
        let state = StateVector::basis_state(basis, 0b01).unwrap();
        let a = state_to_json(&state).unwrap();
        let b = state_to_json(&state).unwrap();
        assert_eq!(a, b);
    }
}

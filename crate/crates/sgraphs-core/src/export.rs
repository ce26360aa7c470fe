//! CSV and manifest writers. All numeric output uses Rust's shortest
//! round-trip float formatting, so reruns with the same seed produce byte
//! identical files.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use crate::curve::ObservableCurve;
use crate::scattering::{PhaseMap, TransmissionMap};
use crate::secular::Spectrum;

pub fn write_spectrum_csv(path: &Path, spectrum: &Spectrum) -> io::Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "index,k,multiplicity")?;
    for (i, (k, m)) in spectrum.values.iter().zip(&spectrum.multiplicities).enumerate() {
        writeln!(w, "{i},{k},{m}")?;
    }
    Ok(())
}

/// Sidecar with solver settings and health checks, one `key = value` per line.
pub fn write_solver_sidecar(path: &Path, spectrum: &Spectrum) -> io::Result<()> {
    let d = &spectrum.diagnostics;
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "method = {}", d.method)?;
    writeln!(w, "grid_step = {}", d.grid_step)?;
    writeln!(w, "refine_tol = {}", d.refine_tol)?;
    writeln!(w, "pole_guard = {}", d.pole_guard)?;
    writeln!(w, "k_min = {}", spectrum.k_range.0)?;
    writeln!(w, "k_max = {}", spectrum.k_range.1)?;
    writeln!(w, "distinct_entries = {}", spectrum.values.len())?;
    writeln!(w, "level_count = {}", spectrum.level_count())?;
    writeln!(w, "weyl_expected = {}", d.weyl_expected)?;
    writeln!(w, "weyl_warning = {}", d.weyl_warning)?;
    let max_split = spectrum.doublet_splits.iter().cloned().fold(0.0, f64::max);
    writeln!(w, "max_merged_split = {max_split}")?;
    Ok(())
}

pub fn write_curve_csv(path: &Path, curve: &ObservableCurve, abscissa_name: &str) -> io::Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "{abscissa_name},value,count,sigma")?;
    for i in 0..curve.len() {
        writeln!(
            w,
            "{},{},{},{}",
            curve.abscissa[i], curve.value[i], curve.counts[i], curve.sigma[i]
        )?;
    }
    Ok(())
}

pub fn write_theory_curve_csv(
    path: &Path,
    s: &[f64],
    pdf: &[f64],
    cdf: &[f64],
) -> io::Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "s,pdf,cdf")?;
    for i in 0..s.len() {
        writeln!(w, "{},{},{}", s[i], pdf[i], cdf[i])?;
    }
    Ok(())
}

/// Long-format eigenvalue dump: one row per (realization, level).
pub fn write_eigenvalue_dump(path: &Path, realizations: &[Vec<f64>]) -> io::Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "realization,index,value")?;
    for (r, values) in realizations.iter().enumerate() {
        for (i, v) in values.iter().enumerate() {
            writeln!(w, "{r},{i},{v}")?;
        }
    }
    Ok(())
}

pub fn write_transmission_long_csv(path: &Path, map: &TransmissionMap) -> io::Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "delta_l,k,value")?;
    for (r, dl) in map.delta_l.iter().enumerate() {
        for (c, k) in map.k.iter().enumerate() {
            writeln!(w, "{dl},{k},{}", map.at(r, c))?;
        }
    }
    Ok(())
}

pub fn write_phase_map_long_csv(path: &Path, map: &PhaseMap) -> io::Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "delta_phi,k,value")?;
    for (r, phi) in map.delta_phi.iter().enumerate() {
        for (c, k) in map.k.iter().enumerate() {
            let v = map.at(r, c);
            if v.is_nan() {
                writeln!(w, "{phi},{k},nan")?;
            } else {
                writeln!(w, "{phi},{k},{v}")?;
            }
        }
    }
    Ok(())
}

/// Gridded text layout for plotting: a header line with the column grid,
/// then one row per line starting with its row coordinate.
pub fn write_map_grid_txt(
    path: &Path,
    row_name: &str,
    rows: &[f64],
    col_name: &str,
    cols: &[f64],
    values: &dyn Fn(usize, usize) -> f64,
) -> io::Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write!(w, "# {row_name} rows = {}, {col_name} cols =", rows.len())?;
    for c in cols {
        write!(w, " {c}")?;
    }
    writeln!(w)?;
    for (r, rv) in rows.iter().enumerate() {
        write!(w, "{rv}")?;
        for c in 0..cols.len() {
            let v = values(r, c);
            if v.is_nan() {
                write!(w, " nan")?;
            } else {
                write!(w, " {v}")?;
            }
        }
        writeln!(w)?;
    }
    Ok(())
}

/// FNV-1a 64-bit hash; used to fingerprint config files in manifests.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

/// Provenance manifest written next to every experiment's artifacts.
pub struct Manifest {
    entries: Vec<(String, String)>,
}

impl Manifest {
    pub fn new(tool: &str) -> Manifest {
        Manifest {
            entries: vec![("tool".to_string(), tool.to_string())],
        }
    }

    pub fn entry(mut self, key: &str, value: impl std::fmt::Display) -> Manifest {
        self.entries.push((key.to_string(), value.to_string()));
        self
    }

    pub fn write(&self, path: &Path) -> io::Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        for (k, v) in &self.entries {
            writeln!(w, "{k} = {v}")?;
        }
        Ok(())
    }
}

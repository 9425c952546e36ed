//! Diagnostics CSV and binary field-dump serialization.
//!
//! CSV layout: version comment, column-name row, one comment line
//! documenting each column, then data rows with 17 significant digits.
//! Values are written in a fixed order from a fully materialized series,
//! so a single-threaded rerun of the same build reproduces the file byte
//! for byte.
//!
//! Field dumps are raw little-endian containers: magic `QNVP`, format
//! version, rank, dims, then the row-major payload. One file per field per
//! dump step.

use std::fs::{self, File};
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use qnvp_core::evolve::TimeSeries;
use qnvp_core::{Error, Result};

pub const DUMP_MAGIC: [u8; 4] = *b"QNVP";
pub const DUMP_VERSION: u32 = 1;

fn io_err(what: &str, path: &Path, e: std::io::Error) -> Error {
    Error::usage(format!("{what} {}: {e}", path.display()))
}

/// Standard documentation strings for the channels the drivers record.
pub fn channel_description(name: &str) -> &'static str {
    match name {
        "t" => "sample time",
        "H" => "energy functional of the active model",
        "mass" => "total mass (density integral)",
        "div_norm" => "L2 norm of the momentum divergence",
        "ntilde_k10_amp" => "signed in-phase (1,0)-mode coefficient of the density remainder",
        "phi_k10_amp" => "signed in-phase (1,0)-mode coefficient of the compressible potential",
        "min_rho" => "minimum of the distribution over phase space",
        "pi_diff" => "relative L2 momentum difference between the paired runs",
        "rho_diff" => "relative L2 distribution difference between the paired runs",
        "n_diff" => "relative L2 deviation of the kinetic density from the quasineutral value",
        "fast_mode" => "signed in-phase coefficient of the dominant excited fast mode",
        _ => "model-specific diagnostic",
    }
}

/// Write a time series in the diagnostics CSV layout.
pub fn write_series_csv(path: &Path, series: &TimeSeries) -> Result<()> {
    let file = File::create(path).map_err(|e| io_err("create", path, e))?;
    let mut w = BufWriter::new(file);
    let mut emit = |line: String| -> Result<()> {
        writeln!(w, "{line}").map_err(|e| io_err("write", path, e))
    };
    emit(format!("# qnvp-lab v{}", env!("CARGO_PKG_VERSION")))?;
    let names = series.names();
    emit(format!(
        "t,{}",
        names.iter().map(String::as_str).collect::<Vec<_>>().join(",")
    ))?;
    emit(format!("# t: {}", channel_description("t")))?;
    for name in names {
        emit(format!("# {name}: {}", channel_description(name)))?;
    }
    let columns: Vec<&[f64]> = names
        .iter()
        .map(|n| series.channel(n).expect("name from series"))
        .collect();
    for (i, t) in series.times().iter().enumerate() {
        let mut row = format!("{t:.16e}");
        for col in &columns {
            row.push_str(&format!(",{:.16e}", col[i]));
        }
        emit(row)?;
    }
    w.flush().map_err(|e| io_err("flush", path, e))
}

/// One decoded field dump.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldDump {
    pub dims: Vec<u32>,
    pub data: Vec<f64>,
}

/// File name for a field at a dump step: `<field>_<stepindex>.qnvpf`.
pub fn dump_path(dir: &Path, field: &str, step: usize) -> PathBuf {
    dir.join(format!("{field}_{step:06}.qnvpf"))
}

pub fn write_dump(path: &Path, dims: &[u32], data: &[f64]) -> Result<()> {
    let expected: usize = dims.iter().map(|d| *d as usize).product();
    if expected != data.len() {
        return Err(Error::usage(format!(
            "field dump {}: dims {:?} declare {expected} values, payload has {}",
            path.display(),
            dims,
            data.len()
        )));
    }
    let file = File::create(path).map_err(|e| io_err("create", path, e))?;
    let mut w = BufWriter::new(file);
    let mut put = |bytes: &[u8]| -> Result<()> {
        w.write_all(bytes).map_err(|e| io_err("write", path, e))
    };
    put(&DUMP_MAGIC)?;
    put(&DUMP_VERSION.to_le_bytes())?;
    put(&(dims.len() as u32).to_le_bytes())?;
    for d in dims {
        put(&d.to_le_bytes())?;
    }
    for v in data {
        put(&v.to_le_bytes())?;
    }
    w.flush().map_err(|e| io_err("flush", path, e))
}

pub fn read_dump(path: &Path) -> Result<FieldDump> {
    let mut bytes = Vec::new();
    File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|e| io_err("read", path, e))?;
    let bad = |what: &str| {
        Error::usage(format!("field dump {}: {what}", path.display()))
    };
    let mut off = 0usize;
    let mut take = |n: usize| -> Result<&[u8]> {
        let end = off.checked_add(n).filter(|e| *e <= bytes.len());
        let end = end.ok_or_else(|| bad("truncated header"))?;
        let s = &bytes[off..end];
        off = end;
        Ok(s)
    };
    if take(4)? != DUMP_MAGIC {
        return Err(bad("bad magic"));
    }
    let u32_at = |s: &[u8]| u32::from_le_bytes(s.try_into().expect("4 bytes"));
    let version = u32_at(take(4)?);
    if version != DUMP_VERSION {
        return Err(bad(&format!("unsupported format version {version}")));
    }
    let rank = u32_at(take(4)?) as usize;
    if rank == 0 || rank > 8 {
        return Err(bad(&format!("implausible rank {rank}")));
    }
    let mut dims = Vec::with_capacity(rank);
    for _ in 0..rank {
        dims.push(u32_at(take(4)?));
    }
    let expected: usize = dims.iter().map(|d| *d as usize).product();
    let payload = &bytes[off..];
    if payload.len() != expected * 8 {
        return Err(bad(&format!(
            "dims {dims:?} declare {} payload bytes, found {}",
            expected * 8,
            payload.len()
        )));
    }
    let data = payload
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    Ok(FieldDump { dims, data })
}

/// Create the output directory if needed.
pub fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| io_err("create directory", dir, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_layout_and_determinism() {
        let dir = std::env::temp_dir().join("qnvp_csv_test");
        fs::create_dir_all(&dir).unwrap();
        let mut series = TimeSeries::new(&["H", "mass"]);
        series.push(0.0, &[1.5, 2.0]).unwrap();
        series.push(0.25, &[1.5 + 1e-15, 2.0]).unwrap();
        let path = dir.join("diag.csv");
        write_series_csv(&path, &series).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], format!("# qnvp-lab v{}", env!("CARGO_PKG_VERSION")));
        assert_eq!(lines[1], "t,H,mass");
        assert!(lines[2].starts_with("# t:"));
        assert!(lines[3].starts_with("# H:"));
        assert!(lines[4].starts_with("# mass:"));
        assert!(lines[5].starts_with("0.0000000000000000e0,1.5000000000000000e0,"));
        // 17 significant digits round-trip the 1e-15 perturbation exactly
        let h_entry: f64 = lines[6].split(',').nth(1).unwrap().parse().unwrap();
        assert_eq!(h_entry, 1.5 + 1e-15);
        assert!(!lines[6].contains("1.5000000000000000e0"));
        let again = dir.join("diag2.csv");
        write_series_csv(&again, &series).unwrap();
        assert_eq!(fs::read(&path).unwrap(), fs::read(&again).unwrap());
    }

    #[test]
    fn dump_roundtrip_and_validation() {
        let dir = std::env::temp_dir().join("qnvp_dump_test");
        fs::create_dir_all(&dir).unwrap();
        let path = dump_path(&dir, "pi_x", 300);
        assert!(path.ends_with("pi_x_000300.qnvpf"));
        let data: Vec<f64> = (0..12).map(|i| i as f64 * 0.5 - 3.0).collect();
        write_dump(&path, &[3, 4], &data).unwrap();
        let back = read_dump(&path).unwrap();
        assert_eq!(back.dims, vec![3, 4]);
        assert_eq!(back.data, data);
        // payload shorter than the header claims
        let mut bytes = fs::read(&path).unwrap();
        bytes.truncate(bytes.len() - 8);
        let bad = dir.join("trunc.qnvpf");
        fs::write(&bad, &bytes).unwrap();
        assert!(read_dump(&bad).is_err());
        // wrong magic
        let mut bytes = fs::read(&path).unwrap();
        bytes[0] = b'X';
        fs::write(&bad, &bytes).unwrap();
        assert!(read_dump(&bad).is_err());
        // dims/payload mismatch rejected on write
        assert!(write_dump(&bad, &[5, 4], &data).is_err());
    }
}

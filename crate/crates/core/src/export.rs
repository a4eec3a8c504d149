//! File output: CSV traces, JSON summaries and a compact binary record.
//!
//! Every CSV starts with a `# config_hash=<sha256>` line and every JSON
//! document carries a `config_hash` field. Numbers are written with Rust's
//! shortest round-trip formatting, which is locale independent.

use std::fmt::Write as _;
use std::fs::File;
use std::io::{self, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use num_complex::Complex;
use serde::Serialize;
use serde_json::json;

use crate::analysis::VisibilityPoint;
use crate::model::{FringeDataset, ScenarioConfig, SimulationRecord};
use crate::scalar::Real;

const MAGIC: &[u8; 8] = b"LGEMREC1";

#[derive(Debug, thiserror::Error)]
pub enum ExportError {
    #[error("cannot write {path}: {source}")]
    Io { path: String, source: io::Error },
    #[error("malformed binary record: {0}")]
    Format(String),
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> ExportError + '_ {
    move |source| ExportError::Io {
        path: path.display().to_string(),
        source,
    }
}

fn write_text(path: &Path, text: &str) -> Result<(), ExportError> {
    std::fs::write(path, text).map_err(io_err(path))
}

fn header(hash: &str, columns: &str) -> String {
    format!("# config_hash={hash}\n{columns}\n")
}

/// `t,channel,re_E,im_E` for every sample of every optical channel.
pub fn boundary_csv<T: Real>(record: &SimulationRecord<T>) -> String {
    let mut out = header(&record.config.config_hash(), "t,channel,re_E,im_E");
    for (i, t) in record.times.iter().enumerate() {
        for (j, ch) in record.boundary_out.iter().enumerate() {
            let v = ch[i];
            let _ = writeln!(out, "{t},{j},{},{}", v.re, v.im);
        }
    }
    out
}

/// `t,z,re_E0,im_E0,…,re_sigma,im_sigma` for every stored snapshot.
pub fn snapshots_csv<T: Real>(record: &SimulationRecord<T>) -> String {
    let n_opt = record
        .snapshots
        .first()
        .map(|(f, _)| f.channels.len())
        .unwrap_or(0);
    let mut cols = String::from("t,z");
    for j in 0..n_opt {
        let _ = write!(cols, ",re_E{j},im_E{j}");
    }
    cols.push_str(",re_sigma,im_sigma");
    let mut out = header(&record.config.config_hash(), &cols);
    let z = record.config.grid.z_centers(record.config.ensemble.length);
    for (f, c) in &record.snapshots {
        for (i, zi) in z.iter().enumerate() {
            let _ = write!(out, "{},{zi}", f.t);
            for ch in &f.channels {
                let _ = write!(out, ",{},{}", ch[i].re, ch[i].im);
            }
            let _ = writeln!(out, ",{},{}", c.sigma[i].re, c.sigma[i].im);
        }
    }
    out
}

/// `t,k,abs_psi` for every stored k-spectrum.
pub fn kspectra_csv<T: Real>(record: &SimulationRecord<T>) -> String {
    let mut out = header(&record.config.config_hash(), "t,k,abs_psi");
    for s in &record.k_spectra {
        for (k, m) in record.k_grid.iter().zip(&s.magnitude) {
            let _ = writeln!(out, "{},{k},{m}", s.t);
        }
    }
    out
}

/// Window energies and run totals.
pub fn window_energies_json<T: Real>(record: &SimulationRecord<T>) -> String {
    let doc = json!({
        "config_hash": record.config.config_hash(),
        "window_energies": record.window_energies,
        "energy_in": record.energy_in,
        "energy_out": record.energy_out,
        "final_stored_energy": record.final_stored_energy(),
        "units": record.config.units,
    });
    pretty(&doc)
}

fn pretty<S: Serialize>(v: &S) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json value serializes");
    s.push('\n');
    s
}

/// `phase,energy` samples of one fringe.
pub fn fringe_csv<T: Real>(dataset: &FringeDataset<T>, config_hash: &str) -> String {
    let mut out = header(config_hash, "phase,energy");
    for (p, e) in &dataset.samples {
        let _ = writeln!(out, "{p},{e}");
    }
    out
}

/// Fit parameters of one fringe.
pub fn fringe_sidecar_json<T: Real>(dataset: &FringeDataset<T>, config_hash: &str) -> String {
    pretty(&json!({
        "config_hash": config_hash,
        "port": dataset.port,
        "offset": dataset.fit.offset,
        "amplitude": dataset.fit.amplitude,
        "phase": dataset.fit.phase,
        "visibility": dataset.visibility,
    }))
}

/// `<x_name>,visibility_E1,visibility_E2` rows of a sweep curve.
pub fn curve_csv<T: Real>(points: &[VisibilityPoint<T>], x_name: &str, config_hash: &str) -> String {
    let mut out = header(config_hash, &format!("{x_name},visibility_E1,visibility_E2"));
    for p in points {
        let _ = writeln!(out, "{},{},{}", p.x, p.e1, p.e2);
    }
    out
}

/// Writes the full set of record files into `dir` and returns their paths.
///
/// Snapshot and k-spectrum files are only written when the record holds any.
pub fn write_record_files<T: Real>(
    record: &SimulationRecord<T>,
    dir: &Path,
) -> Result<Vec<PathBuf>, ExportError> {
    std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut written = Vec::new();
    let mut emit = |name: &str, text: String| -> Result<(), ExportError> {
        let path = dir.join(name);
        write_text(&path, &text)?;
        written.push(path);
        Ok(())
    };
    emit("config.json", record.config.to_json() + "\n")?;
    emit("boundary.csv", boundary_csv(record))?;
    if !record.snapshots.is_empty() {
        emit("snapshots.csv", snapshots_csv(record))?;
    }
    if !record.k_spectra.is_empty() {
        emit("kspectra.csv", kspectra_csv(record))?;
    }
    emit("window_energies.json", window_energies_json(record))?;
    let bin = dir.join("record.bin");
    let file = File::create(&bin).map_err(io_err(&bin))?;
    let mut w = BufWriter::new(file);
    write_binary(record, &mut w).map_err(io_err(&bin))?;
    w.flush().map_err(io_err(&bin))?;
    written.push(bin);
    Ok(written)
}

/// Writes `text` to `path`, creating parent directories.
pub fn write_file(path: &Path, text: &str) -> Result<(), ExportError> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(io_err(parent))?;
    }
    write_text(path, text)
}

/// Time traces of a record: the config, sample times, boundary output and
/// stored energy.
#[derive(Clone, Debug, PartialEq)]
pub struct BinaryRecord {
    pub config: ScenarioConfig<f64>,
    pub times: Vec<f64>,
    pub boundary_out: Vec<Vec<Complex<f64>>>,
    pub stored_energy: Vec<f64>,
}

/// Little-endian layout: magic, config JSON (u64 length + bytes), sample
/// count, channel count, times, boundary values (re, im) channel by channel,
/// stored energy. All reals are `f64`.
pub fn write_binary<T: Real, W: Write>(record: &SimulationRecord<T>, w: &mut W) -> io::Result<()> {
    w.write_all(MAGIC)?;
    let cfg = serde_json::to_vec(&record.config).expect("scenario serializes");
    w.write_u64::<LittleEndian>(cfg.len() as u64)?;
    w.write_all(&cfg)?;
    w.write_u64::<LittleEndian>(record.times.len() as u64)?;
    w.write_u64::<LittleEndian>(record.boundary_out.len() as u64)?;
    for t in &record.times {
        w.write_f64::<LittleEndian>(t.as_f64())?;
    }
    for ch in &record.boundary_out {
        for v in ch {
            w.write_f64::<LittleEndian>(v.re.as_f64())?;
            w.write_f64::<LittleEndian>(v.im.as_f64())?;
        }
    }
    for s in &record.stored_energy {
        w.write_f64::<LittleEndian>(s.as_f64())?;
    }
    Ok(())
}

pub fn read_binary<R: Read>(r: &mut R) -> Result<BinaryRecord, ExportError> {
    let fmt = |e: io::Error| ExportError::Format(e.to_string());
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic).map_err(fmt)?;
    if &magic != MAGIC {
        return Err(ExportError::Format("bad magic".into()));
    }
    let len = r.read_u64::<LittleEndian>().map_err(fmt)? as usize;
    let mut cfg = vec![0u8; len];
    r.read_exact(&mut cfg).map_err(fmt)?;
    let config = serde_json::from_slice(&cfg).map_err(|e| ExportError::Format(e.to_string()))?;
    let n = r.read_u64::<LittleEndian>().map_err(fmt)? as usize;
    let channels = r.read_u64::<LittleEndian>().map_err(fmt)? as usize;
    let mut read_vec = |count: usize| -> Result<Vec<f64>, ExportError> {
        (0..count)
            .map(|_| r.read_f64::<LittleEndian>().map_err(fmt))
            .collect()
    };
    let times = read_vec(n)?;
    let mut boundary_out = Vec::with_capacity(channels);
    for _ in 0..channels {
        let flat = read_vec(2 * n)?;
        boundary_out.push(flat.chunks(2).map(|c| Complex::new(c[0], c[1])).collect());
    }
    let stored_energy = read_vec(n)?;
    Ok(BinaryRecord {
        config,
        times,
        boundary_out,
        stored_energy,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{build_frequency_domain, run_scenario, FrequencyDomainParams};
    use crate::solver::SolverSettings;

    fn small_record() -> SimulationRecord<f64> {
        let mut p = FrequencyDomainParams::<f64>::default();
        p.medium.nz = 32;
        p.medium.dt = 0.02;
        let cfg = build_frequency_domain(&p).unwrap();
        let settings = SolverSettings::with_history(200);
        run_scenario(&cfg, &settings).unwrap()
    }

    #[test]
    fn csv_headers_carry_hash() {
        let rec = small_record();
        let hash = rec.config.config_hash();
        for text in [boundary_csv(&rec), snapshots_csv(&rec), kspectra_csv(&rec)] {
            assert!(text.starts_with(&format!("# config_hash={hash}\n")));
        }
        let b = boundary_csv(&rec);
        assert_eq!(b.lines().nth(1), Some("t,channel,re_E,im_E"));
        assert_eq!(b.lines().count(), 2 + rec.times.len() * 2);
        let s = snapshots_csv(&rec);
        assert_eq!(
            s.lines().nth(1),
            Some("t,z,re_E0,im_E0,re_E1,im_E1,re_sigma,im_sigma")
        );
        let j: serde_json::Value = serde_json::from_str(&window_energies_json(&rec)).unwrap();
        assert_eq!(j["config_hash"], hash);
        assert!(j["window_energies"]["E2"].is_number());
    }

    #[test]
    fn binary_round_trip() {
        let rec = small_record();
        let mut buf = Vec::new();
        write_binary(&rec, &mut buf).unwrap();
        let back = read_binary(&mut buf.as_slice()).unwrap();
        assert_eq!(back.config, rec.config);
        assert_eq!(back.times, rec.times);
        assert_eq!(back.boundary_out, rec.boundary_out);
        assert_eq!(back.stored_energy, rec.stored_energy);
        buf[0] = b'X';
        assert!(matches!(
            read_binary(&mut buf.as_slice()),
            Err(ExportError::Format(_))
        ));
        assert!(read_binary(&mut &buf[..20]).is_err());
    }

    #[test]
    fn record_files_written() {
        let rec = small_record();
        let dir = tempfile::tempdir().unwrap();
        let files = write_record_files(&rec, dir.path()).unwrap();
        let names: Vec<_> = files
            .iter()
            .map(|p| p.file_name().unwrap().to_str().unwrap().to_string())
            .collect();
        for want in [
            "config.json",
            "boundary.csv",
            "snapshots.csv",
            "kspectra.csv",
            "window_energies.json",
            "record.bin",
        ] {
            assert!(names.iter().any(|n| n == want), "{want}");
        }
    }
}

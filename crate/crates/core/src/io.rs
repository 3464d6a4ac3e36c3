//! File formats: profile JSON, trace CSV with a JSON sidecar, reconstruction
//! reports, staircase CSV and bound-check sweep CSV.
//!
//! Numbers in CSV files are written with 17 significant digits so every
//! `f64` survives a round trip unchanged.

use std::fs;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forward::{SourcePulse, TimeTrace};
use crate::inversion::{EstimateFlag, LayerEstimate, ReconstructionReport};
use crate::medium::{light_speed, wavenumber, ComplexFrequency, MediumProfile, ProfileSpec};
use crate::verify::BoundCheckReport;

/// Lossless decimal form of an `f64`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn parse_profile(text: &str) -> Result<MediumProfile> {
    let spec: ProfileSpec = serde_json::from_str(text)?;
    MediumProfile::from_spec(&spec)
}

pub fn read_profile(path: &Path) -> Result<MediumProfile> {
    parse_profile(&fs::read_to_string(path)?)
}

pub fn write_profile(path: &Path, profile: &MediumProfile) -> Result<()> {
    fs::write(path, serde_json::to_string_pretty(&profile.to_spec())? + "\n")?;
    Ok(())
}

/// Sidecar metadata of a trace file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceMeta {
    pub dt: f64,
    pub t0: f64,
    pub depth_m: f64,
    pub n_samples: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pulse: Option<SourcePulse>,
}

/// `traceE.csv` → `traceE.json`.
pub fn sidecar_path(csv: &Path) -> PathBuf {
    csv.with_extension("json")
}

/// Write `t,E,E_z` rows and the sidecar next to them.
pub fn write_trace(path: &Path, trace: &TimeTrace, pulse: Option<&SourcePulse>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["t", "E", "E_z"])?;
    for i in 0..trace.len() {
        w.write_record([fmt_f64(trace.time(i)), fmt_f64(trace.e[i]), fmt_f64(trace.e_z[i])])?;
    }
    w.flush()?;
    let meta = TraceMeta {
        dt: trace.dt,
        t0: trace.t0,
        depth_m: trace.depth,
        n_samples: trace.len(),
        pulse: pulse.copied(),
    };
    fs::write(sidecar_path(path), serde_json::to_string_pretty(&meta)? + "\n")?;
    Ok(())
}

/// Read a trace written by [`write_trace`]. The time column must agree with
/// the sidecar grid.
pub fn read_trace(path: &Path) -> Result<(TimeTrace, TraceMeta)> {
    let meta: TraceMeta = serde_json::from_str(&fs::read_to_string(sidecar_path(path))?)?;
    if !(meta.dt > 0.0 && meta.dt.is_finite()) {
        return Err(Error::Format(format!("sidecar dt must be positive, got {}", meta.dt)));
    }
    let mut r = csv::Reader::from_path(path)?;
    let header = r.headers()?.clone();
    if header.iter().collect::<Vec<_>>() != ["t", "E", "E_z"] {
        return Err(Error::Format(format!("unexpected trace header {header:?}")));
    }
    let mut e = Vec::with_capacity(meta.n_samples);
    let mut e_z = Vec::with_capacity(meta.n_samples);
    for (i, row) in r.records().enumerate() {
        let row = row?;
        let field = |j: usize| -> Result<f64> {
            row.get(j)
                .ok_or_else(|| Error::Format(format!("row {} has {} fields", i + 2, row.len())))?
                .trim()
                .parse::<f64>()
                .map_err(|err| Error::Format(format!("row {}: {err}", i + 2)))
        };
        let t = field(0)?;
        let expect = meta.t0 + i as f64 * meta.dt;
        if (t - expect).abs() > 1e-6 * meta.dt {
            return Err(Error::Format(format!("row {}: time {t} is off the sidecar grid ({expect})", i + 2)));
        }
        e.push(field(1)?);
        e_z.push(field(2)?);
    }
    if e.len() != meta.n_samples {
        return Err(Error::Format(format!(
            "trace has {} samples, sidecar says {}",
            e.len(),
            meta.n_samples
        )));
    }
    Ok((
        TimeTrace {
            dt: meta.dt,
            t0: meta.t0,
            e,
            e_z,
            depth: meta.depth_m,
        },
        meta,
    ))
}

/// One entry of the report JSON array.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRecord {
    pub layer: usize,
    pub eps_hat: f64,
    #[serde(rename = "sigma_hat_S_per_m")]
    pub sigma_hat: f64,
    pub speed_m_per_s: f64,
    pub thickness_m: Option<f64>,
    pub omega1_rad_s: f64,
    pub omega2_rad_s: f64,
    pub kappa_bound: f64,
    pub flags: Vec<EstimateFlag>,
}

impl From<&LayerEstimate> for ReportRecord {
    fn from(e: &LayerEstimate) -> Self {
        Self {
            layer: e.layer,
            eps_hat: e.eps_hat,
            sigma_hat: e.sigma_hat,
            speed_m_per_s: e.speed_hat,
            thickness_m: e.thickness_hat,
            omega1_rad_s: e.omega_used.omega1,
            omega2_rad_s: e.omega_used.omega2,
            kappa_bound: e.kappa_bound_used,
            flags: e.flags.clone(),
        }
    }
}

/// Rebuild estimates from report records; layer tops are the cumulative
/// thicknesses and `q_top` is recomputed from `(ε̂, σ̂)`.
pub fn estimates_from_records(records: &[ReportRecord], mu: f64) -> Result<Vec<LayerEstimate>> {
    let mut z = 0.0;
    records
        .iter()
        .map(|r| {
            let omega = ComplexFrequency::new(r.omega1_rad_s, r.omega2_rad_s)?;
            let q_top = if r.eps_hat > 0.0 {
                Complex64::i() * wavenumber(r.eps_hat, r.sigma_hat.max(0.0), mu, omega)?
            } else {
                Complex64::new(f64::NAN, f64::NAN)
            };
            let est = LayerEstimate {
                layer: r.layer,
                z_top: z,
                eps_hat: r.eps_hat,
                sigma_hat: r.sigma_hat,
                speed_hat: if r.speed_m_per_s.is_finite() {
                    r.speed_m_per_s
                } else {
                    light_speed() / (mu * r.eps_hat).sqrt()
                },
                thickness_hat: r.thickness_m,
                omega_used: omega,
                q_top,
                kappa_bound_used: r.kappa_bound,
                flags: r.flags.clone(),
            };
            z += r.thickness_m.unwrap_or(0.0);
            Ok(est)
        })
        .collect()
}

pub fn report_json(report: &ReconstructionReport) -> Result<String> {
    let records: Vec<ReportRecord> = report.estimates.iter().map(ReportRecord::from).collect();
    Ok(serde_json::to_string_pretty(&records)? + "\n")
}

pub fn write_report(path: &Path, report: &ReconstructionReport) -> Result<()> {
    fs::write(path, report_json(report)?)?;
    Ok(())
}

pub fn read_report(path: &Path) -> Result<Vec<ReportRecord>> {
    Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
}

/// `z_m,eps_hat,sigma_hat`, one row per estimated layer at its top.
pub fn write_staircase(path: &Path, report: &ReconstructionReport) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["z_m", "eps_hat", "sigma_hat"])?;
    for e in &report.estimates {
        w.write_record([fmt_f64(e.z_top), fmt_f64(e.eps_hat), fmt_f64(e.sigma_hat)])?;
    }
    w.flush()?;
    Ok(())
}

/// One row of a bound-check sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundRow {
    pub case: usize,
    pub omega1: f64,
    pub omega2_ratio: f64,
    pub delta: f64,
    pub layer: usize,
    pub w_top_abs: f64,
    pub beta: f64,
    pub kappa_actual: f64,
    pub kappa_bound: f64,
    pub applicable: bool,
    pub passed: bool,
}

impl BoundRow {
    pub fn from_report(case: usize, report: &BoundCheckReport) -> Vec<Self> {
        let ratio = report.omega.omega2 / report.omega.omega1;
        report
            .per_layer
            .iter()
            .map(|l| Self {
                case,
                omega1: report.omega.omega1,
                omega2_ratio: ratio,
                delta: report.delta,
                layer: l.layer,
                w_top_abs: l.w_top_abs,
                beta: l.w_max,
                kappa_actual: l.kappa_actual,
                kappa_bound: l.kappa_bound,
                applicable: report.applicable(),
                passed: l.passed,
            })
            .collect()
    }
}

pub fn write_bound_rows(path: &Path, rows: &[BoundRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([
        "case",
        "omega1",
        "omega2_ratio",
        "delta",
        "layer",
        "w_top_abs",
        "beta",
        "kappa_actual",
        "kappa_bound",
        "applicable",
        "passed",
    ])?;
    for r in rows {
        w.write_record([
            r.case.to_string(),
            fmt_f64(r.omega1),
            fmt_f64(r.omega2_ratio),
            fmt_f64(r.delta),
            r.layer.to_string(),
            fmt_f64(r.w_top_abs),
            fmt_f64(r.beta),
            fmt_f64(r.kappa_actual),
            fmt_f64(r.kappa_bound),
            r.applicable.to_string(),
            r.passed.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::medium::LayerSpec;

    #[test]
    fn fmt_is_lossless() {
        for x in [0.1, 1.0 / 3.0, -2.345_678_901_234_567e-300, 6.02e23, f64::MIN_POSITIVE] {
            assert_eq!(fmt_f64(x).parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn profile_json_round_trip() {
        let p = MediumProfile::new(1.0, 9.0, &[LayerSpec::linear(2.0, 4.0, 0.05, 1e-4, 0.0), LayerSpec::constant(3.0, 6.0, 0.0)]).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.json");
        write_profile(&path, &p).unwrap();
        assert_eq!(read_profile(&path).unwrap(), p);
    }

    #[test]
    fn profile_keys_and_defaults() {
        let text = r#"{"mu": 1, "eps_substrate": 5,
            "layers": [{"thickness_m": 2.5, "eps_top": 4, "sigma_top_S_per_m": 1e-3}]}"#;
        let p = parse_profile(text).unwrap();
        assert_eq!(p.layers()[0].eps_slope, 0.0);
        assert_eq!(p.layers()[0].sigma_top, 1e-3);
        let err = parse_profile("{\"mu\": 1,\n \"layers\": [").unwrap_err().to_string();
        assert!(err.contains("line 2"), "{err}");
    }

    #[test]
    fn trace_round_trip() {
        let tr = TimeTrace {
            dt: 3e-10,
            t0: -1.7e-9,
            e: (0..64).map(|i| (i as f64 * 0.3).sin() / 7.0).collect(),
            e_z: (0..64).map(|i| (i as f64 * 0.1).cos() * 1e-3).collect(),
            depth: 12.5,
        };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("traceE.csv");
        let pulse = SourcePulse::ricker(2e8, -0.5).unwrap();
        write_trace(&path, &tr, Some(&pulse)).unwrap();
        let (back, meta) = read_trace(&path).unwrap();
        assert_eq!(back, tr);
        assert_eq!(meta.pulse, Some(pulse));
        let text = fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("t,E,E_z\n"));
    }
}

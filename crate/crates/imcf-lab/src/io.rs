//! Deterministic persistence: trajectory CSV with exact float
//! round-trip, JSON verification reports carrying the run manifest and
//! tolerance set, and an SVG rendering of profile curves.
//!
//! Floats are written with 17 significant digits (`{:.16e}`), which
//! round-trips every finite f64 bit-exactly. Stored derived columns are
//! validated against the state columns on read, so a corrupted or
//! hand-edited file is rejected instead of silently poisoning a
//! verification run. Manifest parameter maps are ordered (BTreeMap), so
//! identical runs serialize to identical bytes.

use crate::geometry::{
    geometric_sample_with_kappa1, soliton_residual, ExpanderParams, ProfileState,
};
use crate::shooting::{Direction, IntegratorConfig, Sample, Trajectory, TerminationCause};
use crate::ResidualReport;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::{Read, Write};
use std::path::PathBuf;
use thiserror::Error;

pub const CSV_HEADER: &str = "s,r,z,theta,H,kappa1,kappa2,A2,psi,g,res_soliton";
/// Relative slack when validating stored derived columns against values
/// recomputed from the state columns.
const CONSISTENCY_REL_TOL: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("i/o failure: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv failure: {0}")]
    Csv(#[from] csv::Error),
    #[error("json failure: {0}")]
    Json(#[from] serde_json::Error),
    #[error("bad column header: got {got:?}, want {CSV_HEADER:?}")]
    BadHeader { got: String },
    #[error("row {row}: expected 11 fields, got {got}")]
    BadFieldCount { row: usize, got: usize },
    #[error("row {row}, field {field}: cannot parse {text:?} as a float")]
    BadFloat { row: usize, field: &'static str, text: String },
    #[error(
        "row {row}: stored {field} = {stored:.17e} disagrees with the state \
         columns (recomputed {computed:.17e})"
    )]
    InconsistentRow { row: usize, field: &'static str, stored: f64, computed: f64 },
    #[error("file contains no samples")]
    Empty,
}

/// Everything needed to reproduce a run: the subcommand, its full
/// parameter set (ordered), the tool version, the RNG seed, and a
/// timestamp. The timestamp is injectable (flag or `IMCF_LAB_TIMESTAMP`)
/// so that identical runs can produce byte-identical artifacts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub tool_version: String,
    pub seed: u64,
    pub timestamp: String,
    pub parameters: BTreeMap<String, String>,
}

impl RunManifest {
    pub fn new(command: &str, seed: u64) -> Self {
        let timestamp = std::env::var("IMCF_LAB_TIMESTAMP").unwrap_or_else(|_| {
            std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map(|d| d.as_secs().to_string())
                .unwrap_or_else(|_| "0".into())
        });
        RunManifest {
            command: command.into(),
            tool_version: env!("CARGO_PKG_VERSION").into(),
            seed,
            timestamp,
            parameters: BTreeMap::new(),
        }
    }

    pub fn with_timestamp(mut self, timestamp: &str) -> Self {
        self.timestamp = timestamp.into();
        self
    }

    pub fn with_param(mut self, key: &str, value: impl ToString) -> Self {
        self.parameters.insert(key.into(), value.to_string());
        self
    }
}

/// A verification run's JSON artifact: manifest, the tolerances the
/// verdict was judged against, the measured residuals, and the verdict.
#[derive(Debug, Serialize)]
pub struct VerificationReport {
    pub manifest: RunManifest,
    pub tolerances: BTreeMap<String, f64>,
    pub residuals: Vec<ResidualReport>,
    pub passed: bool,
}

pub fn write_json_report<W: Write>(mut w: W, report: &VerificationReport) -> Result<(), IoError> {
    serde_json::to_writer_pretty(&mut w, report)?;
    writeln!(w)?;
    Ok(())
}

/// Output directory: `$IMCF_LAB_OUT` if set, else the working directory.
pub fn out_dir() -> PathBuf {
    std::env::var_os("IMCF_LAB_OUT").map(PathBuf::from).unwrap_or_else(|| PathBuf::from("."))
}

/// One CSV row per accepted step; all floats at 17 significant digits.
pub fn write_trajectory_csv<W: Write>(mut w: W, traj: &Trajectory) -> Result<(), IoError> {
    writeln!(w, "{CSV_HEADER}")?;
    for smp in &traj.samples {
        let st = &smp.state;
        let ge = &smp.geom;
        let res = soliton_residual(ge, &traj.params).unwrap_or(f64::NAN);
        writeln!(
            w,
            "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
            st.s, st.r, st.z, st.theta, ge.h, ge.kappa1, ge.kappa2, ge.a2, ge.psi, ge.g, res,
        )?;
    }
    Ok(())
}

fn parse_field(row: usize, field: &'static str, text: &str) -> Result<f64, IoError> {
    text.trim()
        .parse()
        .map_err(|_| IoError::BadFloat { row, field, text: text.into() })
}

fn check_consistent(
    row: usize,
    field: &'static str,
    stored: f64,
    computed: f64,
) -> Result<(), IoError> {
    if (stored - computed).abs() > CONSISTENCY_REL_TOL * computed.abs().max(1.0) {
        return Err(IoError::InconsistentRow { row, field, stored, computed });
    }
    Ok(())
}

/// Restore a trajectory from CSV. The ambient parameters are not part of
/// the row data and must be supplied; the integration direction is
/// inferred from the arclength ordering, and the termination cause
/// defaults to the arclength-budget case. Derived columns (H, κ₂, |A|²,
/// ψ, g) are validated against the state columns.
pub fn read_trajectory_csv<R: Read>(
    r: R,
    params: &ExpanderParams,
    config: &IntegratorConfig,
) -> Result<Trajectory, IoError> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(r);
    {
        let got = reader.headers()?.iter().collect::<Vec<_>>().join(",");
        if got != CSV_HEADER {
            return Err(IoError::BadHeader { got });
        }
    }
    let mut samples = Vec::new();
    for (idx, record) in reader.records().enumerate() {
        let record = record?;
        let row = idx + 2; // 1-based, after the header line
        if record.len() != 11 {
            return Err(IoError::BadFieldCount { row, got: record.len() });
        }
        let names = [
            "s", "r", "z", "theta", "H", "kappa1", "kappa2", "A2", "psi", "g", "res_soliton",
        ];
        let mut vals = [0.0f64; 11];
        for (k, name) in names.iter().enumerate() {
            vals[k] = parse_field(row, name, &record[k])?;
        }
        let state = ProfileState::new(vals[0], vals[1], vals[2], vals[3]);
        let geom = geometric_sample_with_kappa1(&state, params.n, vals[5]);
        check_consistent(row, "H", vals[4], geom.h)?;
        check_consistent(row, "kappa2", vals[6], geom.kappa2)?;
        check_consistent(row, "A2", vals[7], geom.a2)?;
        check_consistent(row, "psi", vals[8], geom.psi)?;
        check_consistent(row, "g", vals[9], geom.g)?;
        samples.push(Sample { state, geom });
    }
    if samples.is_empty() {
        return Err(IoError::Empty);
    }
    let direction = if samples.last().unwrap().state.s >= samples[0].state.s {
        Direction::Forward
    } else {
        Direction::Backward
    };
    Ok(Trajectory::from_samples(
        *params,
        config.clone(),
        direction,
        samples,
        TerminationCause::ReachedSMax,
    ))
}

/// Render the profile curve and its mirror image across the rotation
/// axis. The axis is dashed, asymptotic radii are dotted horizontals,
/// and the view box is auto-scaled with a 5% margin. Deterministic
/// output: same trajectory, same bytes.
pub fn render_profile_svg(traj: &Trajectory, asymptote_radii: &[f64]) -> String {
    let zs: Vec<f64> = traj.samples.iter().map(|p| p.state.z).collect();
    let rs: Vec<f64> = traj.samples.iter().map(|p| p.state.r).collect();
    let mut z_lo = zs.iter().cloned().fold(f64::INFINITY, f64::min);
    let mut z_hi = zs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut r_hi = rs.iter().cloned().fold(0.0f64, f64::max);
    for &rho in asymptote_radii {
        r_hi = r_hi.max(rho.abs());
    }
    if !(z_hi - z_lo).is_finite() || z_hi - z_lo <= 0.0 {
        z_lo -= 0.5;
        z_hi += 0.5;
    }
    let margin = 0.05 * (z_hi - z_lo).max(2.0 * r_hi);
    let (x0, y0) = (z_lo - margin, -r_hi - margin);
    let (w, h) = (z_hi - z_lo + 2.0 * margin, 2.0 * (r_hi + margin));
    let sw = 0.004 * w.max(h);
    let mut svg = String::new();
    let _ = write!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"{x0:.6} {y0:.6} {w:.6} {h:.6}\">\n"
    );
    // rotation axis (r = 0), dashed
    let _ = write!(
        svg,
        "  <line x1=\"{:.6}\" y1=\"0\" x2=\"{:.6}\" y2=\"0\" stroke=\"#555555\" \
         stroke-width=\"{:.6}\" stroke-dasharray=\"{:.6} {:.6}\"/>\n",
        x0,
        x0 + w,
        0.5 * sw,
        4.0 * sw,
        2.0 * sw,
    );
    // asymptotic radii, dotted, mirrored
    for &rho in asymptote_radii {
        for sign in [-1.0, 1.0] {
            let y = sign * rho.abs();
            let _ = write!(
                svg,
                "  <line x1=\"{:.6}\" y1=\"{y:.6}\" x2=\"{:.6}\" y2=\"{y:.6}\" \
                 stroke=\"#b22222\" stroke-width=\"{:.6}\" stroke-dasharray=\"{:.6} {:.6}\"/>\n",
                x0,
                x0 + w,
                0.5 * sw,
                0.8 * sw,
                1.6 * sw,
            );
        }
    }
    // profile and its mirror (SVG y points down; the mirror pair makes
    // the orientation irrelevant)
    for sign in [-1.0, 1.0] {
        let pts: Vec<String> = zs
            .iter()
            .zip(&rs)
            .map(|(&z, &r)| format!("{:.6},{:.6}", z, sign * r))
            .collect();
        let _ = write!(
            svg,
            "  <polyline fill=\"none\" stroke=\"#1f5fbf\" stroke-width=\"{:.6}\" points=\"{}\"/>\n",
            sw,
            pts.join(" "),
        );
    }
    svg.push_str("</svg>\n");
    svg
}

//! CSV tables and run manifests.
//!
//! Numbers are printed with 12 significant digits, in plain decimal when the
//! exponent is moderate and in scientific notation otherwise. Rows follow the
//! grid or sample order, so identical runs give identical bytes.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;
use std::time::Duration;

use crate::config::{serialize, RunConfig};
use crate::evolution::TrajectoryRecord;
use crate::experiments::SweepResult;

const SIG_DIGITS: i32 = 12;

/// `x` with 12 significant digits, trailing zeros removed.
pub fn format_number(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{:.*e}", (SIG_DIGITS - 1) as usize, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..SIG_DIGITS).contains(&exp) {
        let decimals = (SIG_DIGITS - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{x:.decimals$}")).to_string()
    } else {
        format!("{}e{exp}", trim_zeros(mantissa))
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Columns: time, sink, photon_i…, exciton_i…, trace, min_eig_flag.
pub fn trajectory_csv(record: &TrajectoryRecord) -> String {
    let mut out = String::from("time");
    for name in &record.names {
        out.push(',');
        out.push_str(name);
    }
    out.push_str(",min_eig_flag\n");
    for (row, &t) in record.times.iter().enumerate() {
        out.push_str(&format_number(t));
        for column in &record.values {
            out.push(',');
            out.push_str(&format_number(column[row]));
        }
        let _ = writeln!(out, ",{}", u8::from(record.min_eig_flags[row]));
    }
    out
}

/// Columns: axis1, [axis2], value, capped. Capped cells hold the cap.
pub fn sweep_csv(result: &SweepResult) -> String {
    let spec = &result.spec;
    let mut out = String::from(spec.axis1.param.keyword());
    if let Some(axis2) = &spec.axis2 {
        out.push(',');
        out.push_str(axis2.param.keyword());
    }
    out.push_str(",value,capped\n");
    for (i, j) in spec.cells() {
        out.push_str(&format_number(spec.axis1.values[i]));
        if let Some(axis2) = &spec.axis2 {
            out.push(',');
            out.push_str(&format_number(axis2.values[j]));
        }
        let _ = writeln!(out, ",{},{}", format_number(result.grid[i][j]), u8::from(result.cap_mask[i][j]));
    }
    out
}

pub fn write_trajectory_csv(record: &TrajectoryRecord, path: &Path) -> io::Result<()> {
    fs::write(path, trajectory_csv(record))
}

pub fn write_sweep_csv(result: &SweepResult, path: &Path) -> io::Result<()> {
    fs::write(path, sweep_csv(result))
}

/// Resolved configuration plus run metadata. The metadata lines are
/// comments, so a manifest parses back to the configuration it ran.
#[derive(Debug, Clone)]
pub struct RunManifest {
    pub command: String,
    pub config: RunConfig,
    pub version: String,
    pub wall_clock: Duration,
    pub max_trace_drift: f64,
    pub min_eigenvalue: f64,
    pub warnings: Vec<String>,
}

impl RunManifest {
    pub fn render(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# command: {}", self.command);
        let _ = writeln!(out, "# version: {}", self.version);
        let _ = writeln!(out, "# wall_clock_seconds: {:.3}", self.wall_clock.as_secs_f64());
        let _ = writeln!(out, "# max_trace_drift: {}", format_number(self.max_trace_drift));
        let _ = writeln!(out, "# min_eigenvalue: {}", format_number(self.min_eigenvalue));
        for w in &self.warnings {
            let _ = writeln!(out, "# warning: {}", w.replace('\n', " "));
        }
        out.push_str(&serialize(&self.config));
        out
    }

    pub fn write(&self, path: &Path) -> io::Result<()> {
        fs::write(path, self.render())
    }
}

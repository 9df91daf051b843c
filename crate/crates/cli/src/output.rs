use std::fs::File;
use std::io::{self, Write};
use std::path::Path;

use anyhow::{Context, Result};
use clap::ValueEnum;
use serde::Serialize;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Csv,
    Json,
}

/// One analysis or solver run. Fields that do not apply are left empty.
#[derive(Debug, Clone, Default, Serialize)]
pub struct RunRecord {
    pub schema_version: u32,
    pub command: String,
    pub smoother: Option<String>,
    pub dim: Option<usize>,
    pub example: Option<usize>,
    #[serde(rename = "N")]
    pub n: Option<usize>,
    pub h: Option<f64>,
    pub omega: Option<f64>,
    pub omega_label: Option<String>,
    pub cycle: Option<String>,
    pub nu1: Option<usize>,
    pub nu2: Option<usize>,
    pub seed: Option<u64>,
    pub mu: Option<f64>,
    pub mu_opt: Option<f64>,
    pub mu_opt_label: Option<String>,
    pub omega_opt: Option<f64>,
    pub lambda0: Option<f64>,
    pub lambda1: Option<f64>,
    pub rho_h: Option<f64>,
    pub rho_hat: Option<f64>,
    pub iterations: Option<usize>,
    pub converged: Option<bool>,
    pub error_inf: Option<f64>,
    pub wall_time_s: Option<f64>,
}

impl RunRecord {
    pub fn new(command: String) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            command,
            ..Self::default()
        }
    }
}

/// `x` with six significant digits.
pub fn sig6(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let digits = 5 - x.abs().log10().floor() as i32;
    if (0..=17).contains(&digits) {
        format!("{x:.*}", digits as usize)
    } else {
        format!("{x:.5e}")
    }
}

fn sink(out: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match out {
        Some(path) => Box::new(
            File::create(path).with_context(|| format!("cannot create {}", path.display()))?,
        ),
        None => Box::new(io::stdout().lock()),
    })
}

/// Writes rows as CSV or a JSON array; `text` uses the supplied renderer.
pub fn emit<T: Serialize>(
    rows: &[T],
    format: Format,
    out: Option<&Path>,
    text: impl Fn(&T) -> String,
) -> Result<()> {
    let mut w = sink(out)?;
    match format {
        Format::Json => {
            if rows.len() == 1 {
                serde_json::to_writer_pretty(&mut w, &rows[0])?;
            } else {
                serde_json::to_writer_pretty(&mut w, rows)?;
            }
            writeln!(w)?;
        }
        Format::Csv => {
            let mut csv = csv::Writer::from_writer(w);
            for row in rows {
                csv.serialize(row)?;
            }
            csv.flush()?;
        }
        Format::Text => {
            for row in rows {
                writeln!(w, "{}", text(row))?;
            }
        }
    }
    Ok(())
}

/// `key: value` lines for the populated fields of a record.
pub fn record_text(r: &RunRecord) -> String {
    let mut lines = Vec::new();
    let mut push = |k: &str, v: Option<String>| {
        if let Some(v) = v {
            lines.push(format!("{k:<12} {v}"));
        }
    };
    let labelled = |x: Option<f64>, label: &Option<String>| {
        x.map(|x| match label {
            Some(l) => format!("{}  ({l})", sig6(x)),
            None => sig6(x),
        })
    };
    push("command", Some(r.command.clone()));
    push("smoother", r.smoother.clone());
    push("dim", r.dim.map(|d| d.to_string()));
    push("example", r.example.map(|e| e.to_string()));
    push("N", r.n.map(|n| n.to_string()));
    push("h", r.h.map(sig6));
    push("omega", labelled(r.omega, &r.omega_label));
    push("cycle", r.cycle.clone());
    push("nu1", r.nu1.map(|n| n.to_string()));
    push("nu2", r.nu2.map(|n| n.to_string()));
    push("seed", r.seed.map(|s| s.to_string()));
    push("lambda0", r.lambda0.map(sig6));
    push("lambda1", r.lambda1.map(sig6));
    push("omega_opt", r.omega_opt.map(sig6));
    push("mu_opt", labelled(r.mu_opt, &r.mu_opt_label));
    push("mu", r.mu.map(sig6));
    push("rho_h", r.rho_h.map(sig6));
    push("rho_hat", r.rho_hat.map(sig6));
    push("iterations", r.iterations.map(|k| k.to_string()));
    push("converged", r.converged.map(|c| c.to_string()));
    push("error_inf", r.error_inf.map(|e| format!("{e:.6e}")));
    push("wall_time_s", r.wall_time_s.map(|t| format!("{t:.3}")));
    lines.join("\n")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn six_significant_digits() {
        assert_eq!(sig6(0.157588760510453), "0.157589");
        assert_eq!(sig6(0.8), "0.800000");
        assert_eq!(sig6(12.25), "12.2500");
        assert_eq!(sig6(0.0), "0");
    }
}

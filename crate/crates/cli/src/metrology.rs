//! The `metrology` subcommand: sweep a family of probe states over a size
//! range and tabulate, per row, the projection success onto the matching
//! path-entangled target, the smallest phase shift reaching an orthogonal
//! state, and the resulting phase uncertainty — plus the fitted power-law
//! exponent of uncertainty versus photon number.
//!
//! For the pair-source sweep the row index n counts pairs (2n photons), and
//! the orthogonal-phase constant phi * M / pi is reported under both the
//! total-photon (M = 2n) and per-pair (M = n) conventions.

use std::fs;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, ValueEnum};
use noonsim::{scaling_exponent, PhasePlan, Sign, StateVector};
use serde::Serialize;
use serde_json::json;

use crate::manifest::{write_json, RunManifest, SCHEMA_VERSION};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SourceKind {
    /// Path-entangled |N,0> + |0,N> probes (phase shift of pi/N)
    Noon,
    /// Two-mode squeezed n-pair probes (2n photons per row)
    Pdc,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Csv,
    Json,
}

#[derive(Debug, Args)]
pub struct MetrologyArgs {
    /// Probe family to sweep
    #[arg(long, value_enum)]
    pub state: SourceKind,

    /// Smallest row index (photon number for noon, pair count for pdc)
    #[arg(long, default_value_t = 2)]
    pub n_min: usize,

    /// Largest row index, inclusive
    #[arg(long, default_value_t = 32)]
    pub n_max: usize,

    /// Table format: csv (plus a summary JSON) or a single JSON file
    #[arg(long, value_enum, default_value_t = OutputFormat::Csv)]
    pub format: OutputFormat,

    /// Directory for the table, summary, and manifest
    #[arg(long, default_value = ".")]
    pub output_dir: PathBuf,
}

#[derive(Debug, Serialize)]
struct Row {
    n: usize,
    n_photons: usize,
    p_success: f64,
    phi_orth_rad: f64,
    dphi: f64,
    /// phi_orth * n_photons / pi.
    phi_const_photons: f64,
    /// phi_orth * n / pi; only distinct from the above for the pair source.
    #[serde(skip_serializing_if = "Option::is_none")]
    phi_const_pairs: Option<f64>,
}

#[derive(Debug, Serialize)]
struct MetrologyReport {
    schema_version: &'static str,
    state: &'static str,
    n_min: usize,
    n_max: usize,
    scaling_exponent: f64,
    rows: Vec<Row>,
}

pub fn run(args: &MetrologyArgs) -> Result<()> {
    if args.n_min < 1 {
        bail!("--n-min must be at least 1, got {}", args.n_min);
    }
    if args.n_max < args.n_min {
        bail!("empty range: --n-max {} is below --n-min {}", args.n_max, args.n_min);
    }

    let mut rows = Vec::with_capacity(args.n_max - args.n_min + 1);
    for n in args.n_min..=args.n_max {
        let probe = match args.state {
            SourceKind::Noon => StateVector::noon(n, Sign::Minus)?,
            SourceKind::Pdc => StateVector::pdc_n(n)?,
        };
        let plan = PhasePlan::for_probe(&probe)
            .with_context(|| format!("row n = {n}"))?;
        let pi = std::f64::consts::PI;
        rows.push(Row {
            n,
            n_photons: plan.n_photons,
            p_success: plan.p_success,
            phi_orth_rad: plan.phi_orth,
            dphi: plan.dphi,
            phi_const_photons: plan.phi_orth * plan.n_photons as f64 / pi,
            phi_const_pairs: match args.state {
                SourceKind::Pdc => Some(plan.phi_orth * n as f64 / pi),
                SourceKind::Noon => None,
            },
        });
    }

    let points: Vec<(f64, f64)> =
        rows.iter().map(|r| (r.n_photons as f64, r.dphi)).collect();
    let exponent = scaling_exponent(&points)?;

    let state_name = match args.state {
        SourceKind::Noon => "noon",
        SourceKind::Pdc => "pdc",
    };
    let report = MetrologyReport {
        schema_version: SCHEMA_VERSION,
        state: state_name,
        n_min: args.n_min,
        n_max: args.n_max,
        scaling_exponent: exponent,
        rows,
    };

    fs::create_dir_all(&args.output_dir)
        .with_context(|| format!("creating {}", args.output_dir.display()))?;
    let table_path = match args.format {
        OutputFormat::Csv => {
            let path = args.output_dir.join("metrology.csv");
            fs::write(&path, render_csv(&report))
                .with_context(|| format!("writing {}", path.display()))?;
            let summary = json!({
                "schema_version": SCHEMA_VERSION,
                "state": report.state,
                "n_min": report.n_min,
                "n_max": report.n_max,
                "scaling_exponent": report.scaling_exponent,
            });
            write_json(&args.output_dir.join("metrology.summary.json"), &summary)?;
            path
        }
        OutputFormat::Json => {
            let path = args.output_dir.join("metrology.json");
            write_json(&path, &report)?;
            path
        }
    };
    RunManifest::new(
        "metrology",
        None,
        json!({
            "state": state_name,
            "n_min": args.n_min,
            "n_max": args.n_max,
            "format": match args.format { OutputFormat::Csv => "csv", OutputFormat::Json => "json" },
        }),
    )
    .write(&args.output_dir, "metrology")?;

    println!(
        "{} rows ({} sweep), uncertainty scaling exponent {:.4}",
        report.rows.len(),
        state_name,
        exponent
    );
    println!("wrote {}", table_path.display());
    Ok(())
}

fn render_csv(report: &MetrologyReport) -> String {
    let pairs_column = report.rows.iter().any(|r| r.phi_const_pairs.is_some());
    let mut out = String::from("n,n_photons,p_success,phi_orth_rad,dphi,phi_const_photons");
    if pairs_column {
        out.push_str(",phi_const_pairs");
    }
    out.push('\n');
    for r in &report.rows {
        out.push_str(&format!(
            "{},{},{},{},{},{}",
            r.n, r.n_photons, r.p_success, r.phi_orth_rad, r.dphi, r.phi_const_photons
        ));
        if let Some(c) = r.phi_const_pairs {
            out.push_str(&format!(",{c}"));
        }
        out.push('\n');
    }
    out
}

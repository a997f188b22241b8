//! The `synth` subcommand: compile a target two-mode state into a list of
//! detector forms whose joint click projects onto it. The input is a small
//! JSON spec (photon number plus complex amplitudes); the output records the
//! forms, the proportionality constant, and how close the result is to a
//! lossless network.

use std::fs;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::Args;
use noonsim::{synthesize_network, StateVector, C64};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::manifest::{self, write_json, RunManifest, SCHEMA_VERSION};

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Target state spec (JSON: {"n": N, "amps": [[re, im], ...]} with
    /// N + 1 amplitudes ordered from all-H to all-V)
    pub spec: PathBuf,

    /// Directory for network.json and its manifest
    #[arg(long, default_value = ".")]
    pub output_dir: PathBuf,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct StateSpec {
    n: usize,
    amps: Vec<[f64; 2]>,
}

#[derive(Debug, Serialize)]
struct FormOut {
    alpha: [f64; 2],
    beta: [f64; 2],
}

#[derive(Debug, Serialize)]
struct NetworkReport {
    schema_version: &'static str,
    n_photons: usize,
    forms: Vec<FormOut>,
    /// vacuum_overlap(forms, s) = kappa * <target|s> for every same-N state.
    kappa: [f64; 2],
    isometric: bool,
    column_norm_h: f64,
    column_norm_v: f64,
    column_cross_norm: f64,
    degenerate_roots: bool,
    max_relative_residual: f64,
}

pub fn run(args: &SynthArgs) -> Result<()> {
    let spec = load_spec(&args.spec)?;
    if spec.amps.len() != spec.n + 1 {
        bail!(
            "state spec: a {}-photon state needs {} amplitudes, got {}",
            spec.n,
            spec.n + 1,
            spec.amps.len()
        );
    }
    let amps: Vec<C64> = spec.amps.iter().map(|&[re, im]| C64::new(re, im)).collect();
    let target = StateVector::new(amps)?;
    let syn = synthesize_network(&target)?;

    let report = NetworkReport {
        schema_version: SCHEMA_VERSION,
        n_photons: target.n_total(),
        forms: syn
            .network
            .forms()
            .iter()
            .map(|f| FormOut {
                alpha: [f.alpha().re, f.alpha().im],
                beta: [f.beta().re, f.beta().im],
            })
            .collect(),
        kappa: [syn.kappa.re, syn.kappa.im],
        isometric: syn.isometry.holds,
        column_norm_h: syn.isometry.col_h,
        column_norm_v: syn.isometry.col_v,
        column_cross_norm: syn.isometry.cross.norm(),
        degenerate_roots: syn.degenerate_roots,
        max_relative_residual: syn.max_relative_residual,
    };

    fs::create_dir_all(&args.output_dir)
        .with_context(|| format!("creating {}", args.output_dir.display()))?;
    write_json(&args.output_dir.join("network.json"), &report)?;
    RunManifest::new(
        "synth",
        None,
        json!({
            "spec": args.spec.display().to_string(),
            "n": spec.n,
            "amps": spec.amps,
        }),
    )
    .write(&args.output_dir, "network")?;

    println!(
        "synthesized {} detector forms (isometric: {}, max relative residual {:.2e})",
        report.forms.len(),
        report.isometric,
        report.max_relative_residual
    );
    println!("wrote {}", args.output_dir.join("network.json").display());
    Ok(())
}

fn load_spec(path: &PathBuf) -> Result<StateSpec> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut value: serde_json::Value = serde_json::from_str(&text)
        .with_context(|| format!("{}: not valid JSON", path.display()))?;
    manifest::take_schema_version(&mut value).with_context(|| format!("{}", path.display()))?;
    let spec: StateSpec = serde_path_to_error::deserialize(value).map_err(|e| {
        anyhow::anyhow!(
            "{}: state spec violation at `{}`: {}",
            path.display(),
            e.path(),
            e.inner()
        )
    })?;
    Ok(spec)
}

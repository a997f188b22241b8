//! The counts CSV format: one header row, then one row per phase point. The
//! column order matches the pair enumeration used throughout the toolkit
//! (AB, CD, AC, BD, AD, CB), and floats are written in shortest
//! round-trip form so re-reading reproduces the dataset exactly.

use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use noonsim::{CountDataset, CountRecord};

pub const COUNTS_HEADER: &str =
    "phase_rad,duration_s,n_AB,n_CD,n_AC,n_BD,n_AD,n_CB,n_4fold,s_A,s_B,s_C,s_D";

pub fn write_counts(path: &Path, ds: &CountDataset) -> Result<()> {
    let mut out = String::from(COUNTS_HEADER);
    out.push('\n');
    for r in ds.records() {
        let row = format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
            r.phase_rad,
            r.duration_s,
            r.n_ab,
            r.n_cd,
            r.n_ac,
            r.n_bd,
            r.n_ad,
            r.n_cb,
            r.n_4fold,
            r.s_a,
            r.s_b,
            r.s_c,
            r.s_d
        );
        out.push_str(&row);
    }
    fs::write(path, out).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

pub fn read_counts(path: &Path) -> Result<CountDataset> {
    let text =
        fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header.trim_end_matches('\r') == COUNTS_HEADER => {}
        Some((_, header)) => bail!(
            "line 1: unrecognized header `{}` (expected `{}`)",
            header.trim_end_matches('\r'),
            COUNTS_HEADER
        ),
        None => bail!("{}: empty file", path.display()),
    }

    let mut records = Vec::new();
    for (idx, line) in lines {
        let line = line.trim_end_matches('\r');
        if line.is_empty() {
            continue;
        }
        records.push(parse_row(line).with_context(|| format!("line {}", idx + 1))?);
    }
    let ds = CountDataset::new(records)?;
    Ok(ds)
}

const COLUMNS: [&str; 13] = [
    "phase_rad", "duration_s", "n_AB", "n_CD", "n_AC", "n_BD", "n_AD", "n_CB", "n_4fold", "s_A",
    "s_B", "s_C", "s_D",
];

fn parse_row(line: &str) -> Result<CountRecord> {
    let fields: Vec<&str> = line.split(',').collect();
    if fields.len() != COLUMNS.len() {
        bail!("expected {} comma-separated fields, found {}", COLUMNS.len(), fields.len());
    }
    fn float(fields: &[&str], col: usize) -> Result<f64> {
        fields[col]
            .trim()
            .parse::<f64>()
            .with_context(|| format!("column {}: `{}` is not a number", COLUMNS[col], fields[col]))
    }
    fn count(fields: &[&str], col: usize) -> Result<u64> {
        fields[col].trim().parse::<u64>().with_context(|| {
            format!("column {}: `{}` is not a count", COLUMNS[col], fields[col])
        })
    }
    Ok(CountRecord {
        phase_rad: float(&fields, 0)?,
        duration_s: float(&fields, 1)?,
        n_ab: count(&fields, 2)?,
        n_cd: count(&fields, 3)?,
        n_ac: count(&fields, 4)?,
        n_bd: count(&fields, 5)?,
        n_ad: count(&fields, 6)?,
        n_cb: count(&fields, 7)?,
        n_4fold: count(&fields, 8)?,
        s_a: count(&fields, 9)?,
        s_b: count(&fields, 10)?,
        s_c: count(&fields, 11)?,
        s_d: count(&fields, 12)?,
    })
}

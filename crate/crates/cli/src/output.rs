//! CSV and JSON writers for experiment outputs, plus a reader for
//! `results.csv`.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use anyhow::{bail, Context};
use serde::Serialize;

use crate::runner::ResultRow;

pub const RESULTS_HEADER: &str = "algorithm,m,n,s,snr_db,alpha,rerror,iterations,time_ms,success,seed";

pub fn format_f64(v: f64) -> String {
    if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{v:e}")
    }
}

pub fn format_results(rows: &[&ResultRow]) -> String {
    let mut out = String::from(RESULTS_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{:.3},{},{}",
            r.algorithm,
            r.m,
            r.n,
            r.s,
            format_f64(r.snr_db),
            format_f64(r.alpha),
            format_f64(r.rerror),
            r.iterations,
            r.time_ms,
            r.success,
            r.seed
        );
    }
    out
}

pub fn parse_results(text: &str) -> anyhow::Result<Vec<ResultRow>> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h == RESULTS_HEADER => {}
        Some(h) => bail!("unexpected results header '{h}'"),
        None => bail!("empty results file"),
    }
    lines
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, line)| {
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 11 {
                bail!("line {}: expected 11 fields, found {}", i + 2, f.len());
            }
            let ctx = || format!("line {}", i + 2);
            Ok(ResultRow {
                algorithm: f[0].to_string(),
                m: f[1].parse().with_context(ctx)?,
                n: f[2].parse().with_context(ctx)?,
                s: f[3].parse().with_context(ctx)?,
                snr_db: f[4].parse().with_context(ctx)?,
                alpha: f[5].parse().with_context(ctx)?,
                rerror: f[6].parse().with_context(ctx)?,
                iterations: f[7].parse().with_context(ctx)?,
                time_ms: f[8].parse().with_context(ctx)?,
                success: f[9].parse().with_context(ctx)?,
                seed: f[10].parse().with_context(ctx)?,
            })
        })
        .collect()
}

pub fn read_results(path: &Path) -> anyhow::Result<Vec<ResultRow>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_results(&text).with_context(|| format!("parsing {}", path.display()))
}

/// Writes a CSV table from a header and pre-formatted rows.
pub fn write_table(path: &Path, header: &str, rows: &[Vec<String>]) -> anyhow::Result<()> {
    let mut out = String::from(header);
    out.push('\n');
    for r in rows {
        out.push_str(&r.join(","));
        out.push('\n');
    }
    write_text(path, &out)
}

pub fn write_text(path: &Path, text: &str) -> anyhow::Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
    }
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

pub fn write_json(path: &Path, value: &impl Serialize) -> anyhow::Result<()> {
    let text = serde_json::to_string_pretty(value).context("serializing JSON")?;
    write_text(path, &(text + "\n"))
}

/// Parses a simple CSV table with a header into string fields.
pub fn read_table(path: &Path) -> anyhow::Result<(Vec<String>, Vec<Vec<String>>)> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header: Vec<String> = lines
        .next()
        .with_context(|| format!("{} is empty", path.display()))?
        .split(',')
        .map(str::to_string)
        .collect();
    let rows: Vec<Vec<String>> = lines.map(|l| l.split(',').map(str::to_string).collect()).collect();
    if let Some(bad) = rows.iter().position(|r| r.len() != header.len()) {
        bail!("{}: row {} has {} fields, header has {}", path.display(), bad + 2, rows[bad].len(), header.len());
    }
    Ok((header, rows))
}

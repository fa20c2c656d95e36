//! Trajectory writers: CSV for interchange, JSONL when the sorted-money
//! snapshots are wanted, and a TOML sidecar embedding the full suite so any
//! output file replays with `moneta run <stem>.meta.toml`.
//!
//! All numeric fields print the shortest round-trip float representation,
//! so identical trajectories serialize to identical bytes.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use moneta_core::engine::{StepRecord, Trajectory};
use moneta_core::scalar::SimScalar;

use crate::suite::ScenarioSuite;
use crate::CliError;

pub const CSV_HEADER: &str =
    "t,pair_i,pair_j,edge_present,mu,outcome,delta,z,z_drop_residual,max_gap";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Jsonl,
}

impl OutputFormat {
    pub fn extension(self) -> &'static str {
        match self {
            OutputFormat::Csv => "csv",
            OutputFormat::Jsonl => "jsonl",
        }
    }
}

impl std::str::FromStr for OutputFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "jsonl" => Ok(OutputFormat::Jsonl),
            other => Err(format!("unknown format {other:?}, expected csv or jsonl")),
        }
    }
}

fn fmt_row<S: SimScalar>(rec: &StepRecord<S>) -> String {
    format!(
        "{},{},{},{},{},{},{},{},{},{}",
        rec.t,
        rec.pair.0,
        rec.pair.1,
        rec.edge_present,
        rec.mu.approx_f64(),
        rec.outcome.reason.as_str(),
        rec.outcome.delta.approx_f64(),
        rec.z.approx_f64(),
        rec.z_drop_residual.approx_f64(),
        rec.max_gap.approx_f64(),
    )
}

/// The whole trajectory as one CSV document.
pub fn csv_string<S: SimScalar>(traj: &Trajectory<S>) -> String {
    let mut out = String::with_capacity(64 * (traj.records.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for rec in &traj.records {
        out.push_str(&fmt_row(rec));
        out.push('\n');
    }
    out
}

#[derive(Serialize)]
struct JsonRecord<'a> {
    t: u64,
    pair_i: usize,
    pair_j: usize,
    edge_present: bool,
    mu: f64,
    outcome: &'a str,
    delta: f64,
    z: f64,
    z_drop_residual: f64,
    max_gap: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    sorted_money: Option<Vec<f64>>,
}

/// The whole trajectory as JSON Lines: CSV keys plus `sorted_money` on
/// recorded steps.
pub fn jsonl_string<S: SimScalar>(traj: &Trajectory<S>) -> String {
    let mut out = String::with_capacity(96 * traj.records.len());
    for rec in &traj.records {
        let json = JsonRecord {
            t: rec.t,
            pair_i: rec.pair.0,
            pair_j: rec.pair.1,
            edge_present: rec.edge_present,
            mu: rec.mu.approx_f64(),
            outcome: rec.outcome.reason.as_str(),
            delta: rec.outcome.delta.approx_f64(),
            z: rec.z.approx_f64(),
            z_drop_residual: rec.z_drop_residual.approx_f64(),
            max_gap: rec.max_gap.approx_f64(),
            sorted_money: rec
                .sorted_money
                .as_ref()
                .map(|s| s.sorted_money.iter().map(|m| m.approx_f64()).collect()),
        };
        out.push_str(&serde_json::to_string(&json).expect("record serialization cannot fail"));
        out.push('\n');
    }
    out
}

/// Replay sidecar: the full suite document narrowed to this trajectory's
/// seed.
pub fn meta_string<S: SimScalar>(suite: &ScenarioSuite, traj: &Trajectory<S>) -> String {
    let mut replay = suite.clone();
    replay.config = traj.config.clone();
    replay.seeds = vec![traj.config.seed];
    replay.to_toml()
}

/// Writes `<stem>.<ext>` and the `<stem>.meta.toml` sidecar; returns the
/// paths written.
pub fn write_trajectory<S: SimScalar>(
    traj: &Trajectory<S>,
    suite: &ScenarioSuite,
    format: OutputFormat,
    out_dir: &Path,
    stem: &str,
) -> Result<Vec<PathBuf>, CliError> {
    fs::create_dir_all(out_dir)?;
    let data_path = out_dir.join(format!("{stem}.{}", format.extension()));
    let body = match format {
        OutputFormat::Csv => csv_string(traj),
        OutputFormat::Jsonl => jsonl_string(traj),
    };
    let mut file = fs::File::create(&data_path)?;
    file.write_all(body.as_bytes())?;

    let meta_path = out_dir.join(format!("{stem}.meta.toml"));
    fs::write(&meta_path, meta_string(suite, traj))?;
    Ok(vec![data_path, meta_path])
}

/// One row of a trajectory file, as read back for summaries.
#[derive(Debug, Clone, PartialEq)]
pub struct ReadRecord {
    pub t: u64,
    pub mu: f64,
    pub outcome: String,
    pub z: f64,
    pub max_gap: f64,
    pub sorted_money: Option<Vec<f64>>,
}

/// Reads either output format back into records.
pub fn read_records(path: &Path) -> Result<Vec<ReadRecord>, CliError> {
    let text = fs::read_to_string(path)?;
    match path.extension().and_then(|e| e.to_str()) {
        Some("csv") => parse_csv(&text, path),
        Some("jsonl") => parse_jsonl(&text, path),
        _ => Err(CliError::Config(format!(
            "{}: unknown trajectory extension (expected .csv or .jsonl)",
            path.display()
        ))),
    }
}

fn parse_csv(text: &str, path: &Path) -> Result<Vec<ReadRecord>, CliError> {
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| CliError::Config(format!("{}: empty trajectory file", path.display())))?;
    if header != CSV_HEADER {
        return Err(CliError::Config(format!(
            "{}: unexpected CSV header {header:?}",
            path.display()
        )));
    }
    let mut records = Vec::new();
    for (k, line) in lines.enumerate() {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 10 {
            return Err(CliError::Config(format!(
                "{}: row {} has {} fields, expected 10",
                path.display(),
                k + 2,
                fields.len()
            )));
        }
        let bad =
            |what: &str| CliError::Config(format!("{}: row {}: bad {what}", path.display(), k + 2));
        records.push(ReadRecord {
            t: fields[0].parse().map_err(|_| bad("t"))?,
            mu: fields[4].parse().map_err(|_| bad("mu"))?,
            outcome: fields[5].to_string(),
            z: fields[7].parse().map_err(|_| bad("z"))?,
            max_gap: fields[9].parse().map_err(|_| bad("max_gap"))?,
            sorted_money: None,
        });
    }
    Ok(records)
}

fn parse_jsonl(text: &str, path: &Path) -> Result<Vec<ReadRecord>, CliError> {
    let mut records = Vec::new();
    for (k, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let value: serde_json::Value = serde_json::from_str(line)
            .map_err(|e| CliError::Config(format!("{}: line {}: {e}", path.display(), k + 1)))?;
        let field = |name: &str| {
            value.get(name).and_then(|v| v.as_f64()).ok_or_else(|| {
                CliError::Config(format!(
                    "{}: line {}: missing {name}",
                    path.display(),
                    k + 1
                ))
            })
        };
        records.push(ReadRecord {
            t: field("t")? as u64,
            mu: field("mu")?,
            outcome: value
                .get("outcome")
                .and_then(|v| v.as_str())
                .unwrap_or_default()
                .to_string(),
            z: field("z")?,
            max_gap: field("max_gap")?,
            sorted_money: value
                .get("sorted_money")
                .and_then(|v| v.as_array())
                .map(|a| a.iter().filter_map(|x| x.as_f64()).collect()),
        });
    }
    Ok(records)
}

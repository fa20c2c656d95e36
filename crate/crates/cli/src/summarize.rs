//! Post-hoc summaries over written trajectory files: per-trajectory outcome
//! rows, grouped medians/extremes, and a long-format curves file with the
//! potential and spread over time for plotting.

use std::fs;
use std::path::{Path, PathBuf};

use crate::suite::{parse_and_validate, ScenarioSuite};
use crate::writer::{read_records, ReadRecord};
use crate::CliError;

#[derive(Debug, Clone)]
pub struct SummaryRow {
    pub file: String,
    pub suite: String,
    pub seed: Option<u64>,
    pub steps: usize,
    pub total_applied: usize,
    pub final_z: f64,
    pub final_max_gap: f64,
    pub consensus_time: Option<u64>,
    /// Count of rank-change events between consecutive snapshots; only
    /// available from JSONL inputs which carry sorted money.
    pub rank_change_events: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct Summary {
    pub rows: Vec<SummaryRow>,
    /// (file, t, z, max_gap) long-format samples for plotting.
    pub curves: Vec<(String, u64, f64, f64)>,
}

/// Sidecar lookup: `foo.csv` -> `foo.meta.toml`.
fn sidecar_for(path: &Path) -> Option<ScenarioSuite> {
    let stem = path.file_stem()?.to_str()?;
    let meta = path.with_file_name(format!("{stem}.meta.toml"));
    let text = fs::read_to_string(meta).ok()?;
    parse_and_validate(&text).ok()
}

fn rank_events_from_records(records: &[ReadRecord], tolerance: f64) -> Option<usize> {
    let snapshots: Vec<&Vec<f64>> = records
        .iter()
        .filter_map(|r| r.sorted_money.as_ref())
        .collect();
    if snapshots.is_empty() {
        return None;
    }
    let mut events = 0;
    for pair in snapshots.windows(2) {
        if pair[0]
            .iter()
            .zip(pair[1])
            .any(|(a, b)| (a - b).abs() > tolerance)
        {
            events += 1;
        }
    }
    Some(events)
}

/// Builds the summary for a set of trajectory files.
pub fn summarize(paths: &[PathBuf]) -> Result<Summary, CliError> {
    if paths.is_empty() {
        return Err(CliError::Config(
            "summarize needs at least one trajectory file".into(),
        ));
    }
    let mut rows = Vec::new();
    let mut curves = Vec::new();
    for path in paths {
        let records = read_records(path)?;
        if records.is_empty() {
            return Err(CliError::Config(format!("{}: no records", path.display())));
        }
        let meta = sidecar_for(path);
        let eps = meta.as_ref().map(|s| s.consensus_epsilon()).unwrap_or(1e-6);
        let rank_tol = meta
            .as_ref()
            .map(|s| s.acceptance.rank_tolerance)
            .unwrap_or(1e-12);
        let file = path
            .file_name()
            .and_then(|f| f.to_str())
            .unwrap_or_default()
            .to_string();
        let last = records.last().expect("nonempty");
        rows.push(SummaryRow {
            file: file.clone(),
            suite: meta
                .as_ref()
                .map(|s| s.name.as_str().to_string())
                .unwrap_or_else(|| "unknown".into()),
            seed: meta.as_ref().map(|s| s.config.seed),
            steps: records.len(),
            total_applied: records.iter().filter(|r| r.outcome == "applied").count(),
            final_z: last.z,
            final_max_gap: last.max_gap,
            consensus_time: records.iter().find(|r| r.max_gap <= eps).map(|r| r.t),
            rank_change_events: rank_events_from_records(&records, rank_tol),
        });
        for rec in &records {
            curves.push((file.clone(), rec.t, rec.z, rec.max_gap));
        }
    }
    Ok(Summary { rows, curves })
}

fn median(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
    }
}

fn stats_line(name: &str, values: &[f64]) -> String {
    if values.is_empty() {
        return format!("  {name}: (none)\n");
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite stats"));
    format!(
        "  {name}: median {}, min {}, max {} (n = {})\n",
        median(&sorted),
        sorted[0],
        sorted[sorted.len() - 1],
        sorted.len()
    )
}

impl Summary {
    /// Per-suite medians/extremes of the headline outcomes.
    pub fn render_table(&self) -> String {
        let mut suites: Vec<String> = self.rows.iter().map(|r| r.suite.clone()).collect();
        suites.sort();
        suites.dedup();
        let mut out = String::new();
        out.push_str(&format!("{} trajectories\n", self.rows.len()));
        for suite in suites {
            let group: Vec<&SummaryRow> = self.rows.iter().filter(|r| r.suite == suite).collect();
            out.push_str(&format!("suite {suite} ({} trajectories)\n", group.len()));
            let consensus: Vec<f64> = group
                .iter()
                .filter_map(|r| r.consensus_time.map(|t| t as f64))
                .collect();
            out.push_str(&stats_line("consensus_time", &consensus));
            let unreached = group.iter().filter(|r| r.consensus_time.is_none()).count();
            if unreached > 0 {
                out.push_str(&format!("  consensus never reached: {unreached}\n"));
            }
            let applied: Vec<f64> = group.iter().map(|r| r.total_applied as f64).collect();
            out.push_str(&stats_line("total_applied", &applied));
            let gaps: Vec<f64> = group.iter().map(|r| r.final_max_gap).collect();
            out.push_str(&stats_line("final_max_gap", &gaps));
            let events: Vec<f64> = group
                .iter()
                .filter_map(|r| r.rank_change_events.map(|e| e as f64))
                .collect();
            out.push_str(&stats_line("rank_change_events", &events));
        }
        out
    }

    /// Per-trajectory rows as CSV.
    pub fn summary_csv(&self) -> String {
        let mut out = String::from(
            "file,suite,seed,steps,total_applied,final_z,final_max_gap,consensus_time,rank_change_events\n",
        );
        for row in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{}\n",
                row.file,
                row.suite,
                row.seed.map(|s| s.to_string()).unwrap_or_default(),
                row.steps,
                row.total_applied,
                row.final_z,
                row.final_max_gap,
                row.consensus_time
                    .map(|t| t.to_string())
                    .unwrap_or_default(),
                row.rank_change_events
                    .map(|e| e.to_string())
                    .unwrap_or_default(),
            ));
        }
        out
    }

    /// Long-format curves of z(t) and max_gap(t), one row per recorded step.
    pub fn curves_csv(&self) -> String {
        let mut out = String::from("file,t,z,max_gap\n");
        for (file, t, z, gap) in &self.curves {
            out.push_str(&format!("{file},{t},{z},{gap}\n"));
        }
        out
    }

    pub fn write_files(&self, out_dir: &Path) -> Result<Vec<PathBuf>, CliError> {
        fs::create_dir_all(out_dir)?;
        let summary_path = out_dir.join("summary.csv");
        fs::write(&summary_path, self.summary_csv())?;
        let curves_path = out_dir.join("curves.csv");
        fs::write(&curves_path, self.curves_csv())?;
        Ok(vec![summary_path, curves_path])
    }
}

//! Export logged trajectories as standalone line-delimited JSON files.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::eval::TrajRecord;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExportHeader {
    pub kind: String,
    pub trial: usize,
    pub records: usize,
}

/// Extract one trial from `<run_dir>/trajectories.jsonl` into
/// `<run_dir>/export_trial_<n>.jsonl`: a header record followed by one
/// record per simulated step.
pub fn export_trial(run_dir: &Path, trial: usize) -> Result<PathBuf> {
    let src = run_dir.join("trajectories.jsonl");
    if !src.exists() {
        return Err(Error::NotFound(format!("no trajectory log at {}", src.display())));
    }
    let reader = BufReader::new(File::open(&src)?);
    let mut records: Vec<TrajRecord> = Vec::new();
    for line in reader.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: TrajRecord = serde_json::from_str(&line)?;
        if rec.trial == trial {
            records.push(rec);
        }
    }

    let out_path = run_dir.join(format!("export_trial_{trial}.jsonl"));
    let mut w = BufWriter::new(File::create(&out_path)?);
    let header = ExportHeader { kind: "header".into(), trial, records: records.len() };
    writeln!(w, "{}", serde_json::to_string(&header)?)?;
    for rec in &records {
        writeln!(w, "{}", serde_json::to_string(rec)?)?;
    }
    w.flush()?;
    Ok(out_path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::ScenarioConfig;
    use crate::exp::eval::{evaluate, replay_ogd, EvalOptions};
    use crate::nn::AdamConfig;
    use crate::policy::{Method, PolicyPair};

    #[test]
    fn missing_run_is_not_found() {
        let dir = tempfile::tempdir().unwrap();
        assert!(export_trial(dir.path(), 0).is_err());
    }

    #[test]
    fn export_replay_oracle() {
        let scenario = ScenarioConfig::one_goal_small();
        let pair = PolicyPair::new(Method::Colf, 1, AdamConfig::default(), 2).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let opts = EvalOptions {
            trials: 2,
            seeds: vec![1],
            trajectory_dir: Some(dir.path().to_path_buf()),
            ..EvalOptions::default()
        };
        evaluate(&pair, &scenario, &opts).unwrap();

        let out = export_trial(dir.path(), 1).unwrap();
        let text = std::fs::read_to_string(out).unwrap();
        let mut lines = text.lines();
        let header: ExportHeader = serde_json::from_str(lines.next().unwrap()).unwrap();
        assert_eq!(header.kind, "header");
        assert_eq!(header.trial, 1);
        let mut count = 0;
        for line in lines {
            let rec: TrajRecord = serde_json::from_str(line).unwrap();
            assert_eq!(rec.trial, 1);
            // Replaying the logged poses through the metrics function
            // reproduces the logged OGD.
            assert!((replay_ogd(&rec, &scenario) - rec.ogd).abs() < 1e-9);
            count += 1;
        }
        assert_eq!(count, header.records);
        // Horizon-terminated trials log one record per simulated step.
        assert_eq!(count, scenario.horizon);
    }

    #[test]
    fn empty_trial_still_writes_header() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("trajectories.jsonl"), "").unwrap();
        let out = export_trial(dir.path(), 7).unwrap();
        let text = std::fs::read_to_string(out).unwrap();
        let header: ExportHeader = serde_json::from_str(text.lines().next().unwrap()).unwrap();
        assert_eq!(header.records, 0);
        assert_eq!(text.lines().count(), 1);
    }
}

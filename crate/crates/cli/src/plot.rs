use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use compol_train::{mean_std, RunRecord};

use crate::app::{RunInfo, RECORD_FILE, RUN_FILE};
use crate::error::{CliError, Result};

pub struct Run {
    pub info: RunInfo,
    pub record: RunRecord,
}

pub fn load_run(dir: &Path) -> Result<Run> {
    let read = |name: &str| {
        let path = dir.join(name);
        fs::read_to_string(&path).map_err(|e| CliError::io(&path, e))
    };
    let info: RunInfo = serde_json::from_str(&read(RUN_FILE)?)
        .map_err(|e| CliError::Usage(format!("{}: {e}", dir.join(RUN_FILE).display())))?;
    let record = RunRecord::from_jsonl(&read(RECORD_FILE)?)?;
    Ok(Run { info, record })
}

/// One row per epoch.
pub fn curves_csv(run: &Run) -> String {
    let mut out = String::from("epoch,lr,train_loss");
    for c in &run.info.channels {
        out.push_str(&format!(",test_error_{c}"));
    }
    out.push_str(",test_aggregate,wall_ms,config_hash\n");
    for e in &run.record.epochs {
        out.push_str(&format!("{},{},{}", e.epoch, e.lr, e.train_loss));
        for v in &e.test_error {
            out.push_str(&format!(",{v}"));
        }
        out.push_str(&format!(
            ",{},{},{}\n",
            e.test_aggregate, e.wall_ms, run.info.config_hash
        ));
    }
    out
}

/// Best and final test error per `(model, n_train)`, sorted by key.
pub fn summary_csv(runs: &[Run]) -> String {
    let mut groups: BTreeMap<(String, usize), Vec<&Run>> = BTreeMap::new();
    for r in runs {
        groups
            .entry((r.info.model.clone(), r.info.n_train))
            .or_default()
            .push(r);
    }
    let mut out = String::from(
        "model,n_train,runs,best_test_mean,best_test_std,final_test_mean,config_hashes\n",
    );
    for ((model, n_train), group) in groups {
        let best: Vec<f64> = group
            .iter()
            .filter_map(|r| r.record.best().map(|e| e.test_aggregate))
            .collect();
        let last: Vec<f64> = group
            .iter()
            .filter_map(|r| r.record.epochs.last().map(|e| e.test_aggregate))
            .collect();
        let (bm, bs) = mean_std(&best);
        let mut hashes: Vec<&str> = group.iter().map(|r| r.info.config_hash.as_str()).collect();
        hashes.sort_unstable();
        out.push_str(&format!(
            "{model},{n_train},{},{bm},{bs},{},{}\n",
            group.len(),
            mean_std(&last).0,
            hashes.join(";")
        ));
    }
    out
}

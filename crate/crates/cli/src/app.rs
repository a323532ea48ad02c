use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use compol_core::checkpoint::write_atomic;
use compol_core::{load_checkpoint, save_checkpoint};
use compol_datagen::dataset::write_dataset;
use compol_datagen::{
    generate_dataset, load_dataset, DatasetManifest, FieldDataset, SystemId, SystemSpec,
};
use compol_train::{error_fields, evaluate, train, Normalizer, TrainConfig};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::{model_label, ExperimentConfig, ModelChoice};
use crate::error::{CliError, Result};
use crate::gradcheck::{self, Module, TOLERANCE};
use crate::plot;

pub const CHECKPOINT_FILE: &str = "checkpoint.cmpl";
pub const RECORD_FILE: &str = "record.jsonl";
pub const CONFIG_FILE: &str = "config.json";
pub const RUN_FILE: &str = "run.json";

#[derive(Debug, Parser)]
#[command(
    name = "compol",
    version,
    about = "Coupled multi-process neural operator experiments"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve a reaction-diffusion system from random initial fields and store input/output pairs.
    GenData(GenDataArgs),
    /// Train a model described by an experiment config.
    Train(TrainArgs),
    /// Score a checkpoint on a dataset.
    Eval(EvalArgs),
    /// Compare analytic gradients against central finite differences.
    Gradcheck(GradcheckArgs),
    /// Write training curves or a multi-run summary as CSV.
    ExportPlot(ExportArgs),
}

#[derive(Debug, Args)]
pub struct GenDataArgs {
    #[arg(long, value_parser = parse_system)]
    pub system: SystemId,
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub resolution: usize,
    #[arg(long)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    /// Override a system field, e.g. `horizon=5` or `physics.eps1=0.02`.
    #[arg(long = "param", value_name = "KEY=VAL")]
    pub params: Vec<String>,
}

fn parse_system(s: &str) -> std::result::Result<SystemId, String> {
    s.parse()
        .map_err(|e: compol_datagen::DatagenError| e.to_string())
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Defaults to `paths.data` of the config.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Defaults to `paths.out` of the config.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub model: Option<ModelChoice>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Split {
    All,
    Train,
    Test,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    /// `train` and `test` select the run's splits and need the dataset it was trained on.
    #[arg(long, value_enum, default_value = "all")]
    pub split: Split,
    #[arg(long, value_name = "DIR")]
    pub dump_error_fields: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModuleArg {
    All,
    Tensor,
    Layers,
    Aggregation,
    Model,
}

#[derive(Debug, Args)]
pub struct GradcheckArgs {
    #[arg(long, value_enum, default_value = "all")]
    pub module: ModuleArg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
}

#[derive(Debug, Args)]
pub struct ExportArgs {
    /// One run gives its per-epoch curves; several give a summary per (model, n_train).
    #[arg(long = "run", required = true)]
    pub runs: Vec<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
    /// Write to a file instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Metadata written next to every checkpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunInfo {
    pub config_hash: String,
    pub data_hash: String,
    pub system: SystemSpec,
    pub model: String,
    pub channels: Vec<String>,
    pub n_train: usize,
    pub n_test: usize,
    pub best_epoch: usize,
    pub normalizer: Normalizer,
    pub train: TrainConfig,
}

pub fn run(cli: Cli, out: &mut dyn Write) -> Result<()> {
    match cli.command {
        Command::GenData(a) => gen_data(&a, out),
        Command::Train(a) => train_cmd(&a, out),
        Command::Eval(a) => eval_cmd(&a, out),
        Command::Gradcheck(a) => gradcheck_cmd(&a, out),
        Command::ExportPlot(a) => export_cmd(&a, out),
    }
}

fn io<T>(path: &Path, r: std::io::Result<T>) -> Result<T> {
    r.map_err(|e| CliError::io(path, e))
}

fn print(out: &mut dyn Write, text: std::fmt::Arguments<'_>) -> Result<()> {
    out.write_fmt(text)
        .map_err(|e| CliError::io(Path::new("<stdout>"), e))
}

fn set_param(spec: &SystemSpec, assignment: &str) -> Result<SystemSpec> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| CliError::Usage(format!("--param `{assignment}` is not KEY=VAL")))?;
    let mut value = serde_json::to_value(spec)?;
    let mut slot = &mut value;
    for part in key.split('.') {
        slot = slot
            .get_mut(part)
            .ok_or_else(|| CliError::Usage(format!("unknown system parameter `{key}`")))?;
    }
    *slot = serde_json::from_str(raw).unwrap_or_else(|_| serde_json::Value::String(raw.into()));
    serde_json::from_value(value).map_err(|e| CliError::Usage(format!("--param {assignment}: {e}")))
}

fn print_stats(out: &mut dyn Write, m: &DatasetManifest) -> Result<()> {
    print(
        out,
        format_args!(
            "system {}, {} samples, grid {:?}, seed {}\nconfig hash {}\n",
            m.system, m.samples, m.grid, m.seed, m.config_hash
        ),
    )?;
    print(
        out,
        format_args!(
            "{:<8} {:>14} {:>14} {:>14} {:>14}\n",
            "channel", "input_mean", "input_std", "output_mean", "output_std"
        ),
    )?;
    for s in &m.stats {
        print(
            out,
            format_args!(
                "{:<8} {:>14.6e} {:>14.6e} {:>14.6e} {:>14.6e}\n",
                s.name, s.input_mean, s.input_std, s.output_mean, s.output_std
            ),
        )?;
    }
    Ok(())
}

pub fn gen_data(a: &GenDataArgs, out: &mut dyn Write) -> Result<()> {
    let mut spec = SystemSpec::default_for(a.system);
    spec.resolution = a.resolution;
    for p in &a.params {
        spec = set_param(&spec, p)?;
    }
    spec.validate()
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let manifest = generate_dataset(&spec, a.n, a.seed, &a.out)?;
    print(
        out,
        format_args!(
            "{}\n",
            a.out.join(compol_datagen::dataset::MANIFEST_FILE).display()
        ),
    )?;
    print_stats(out, &manifest)
}

fn model_config(cfg: &mut ExperimentConfig, choice: Option<ModelChoice>) {
    if let Some(choice) = choice {
        choice.apply(&mut cfg.model);
    }
}

fn check_dataset(cfg: &ExperimentConfig, ds: &FieldDataset) -> Result<()> {
    if ds.spec != cfg.system {
        return Err(CliError::Usage(
            "dataset was generated with a different system spec than the config".into(),
        ));
    }
    if ds.processes() != cfg.model.processes() {
        return Err(CliError::Usage(format!(
            "dataset has {} channels, model expects {}",
            ds.processes(),
            cfg.model.processes()
        )));
    }
    let need = cfg.data.n_train + cfg.data.n_test;
    if ds.samples() < need {
        return Err(CliError::Usage(format!(
            "dataset has {} samples, config needs {need}",
            ds.samples()
        )));
    }
    Ok(())
}

fn splits(
    ds: &FieldDataset,
    n_train: usize,
    n_test: usize,
) -> Result<(FieldDataset, FieldDataset)> {
    let train: Vec<usize> = (0..n_train).collect();
    let test: Vec<usize> = (n_train..n_train + n_test).collect();
    Ok((ds.select(&train)?, ds.select(&test)?))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_vec_pretty(value)?;
    text.push(b'\n');
    Ok(write_atomic(path, &text)?)
}

pub fn train_cmd(a: &TrainArgs, out: &mut dyn Write) -> Result<()> {
    let mut cfg = ExperimentConfig::load(&a.config)?;
    model_config(&mut cfg, a.model);
    cfg.validate()?;
    let data_dir = a
        .data
        .clone()
        .or_else(|| cfg.paths.data.clone())
        .ok_or_else(|| CliError::Usage("no --data given and config has no paths.data".into()))?;
    let run_dir = a
        .out
        .clone()
        .or_else(|| cfg.paths.out.clone())
        .ok_or_else(|| CliError::Usage("no --out given and config has no paths.out".into()))?;
    let (manifest, ds) = load_dataset(&data_dir)?;
    check_dataset(&cfg, &ds)?;
    let hash = cfg.hash()?;
    let (train_set, test_set) = splits(&ds, cfg.data.n_train, cfg.data.n_test)?;
    let outcome = train::<f32>(&cfg.model, &cfg.train, &train_set, &test_set)?;
    let mut record = outcome.record;
    record.config_hash = hash.clone();
    let info = RunInfo {
        config_hash: hash.clone(),
        data_hash: manifest.config_hash.clone(),
        system: cfg.system.clone(),
        model: model_label(&cfg.model).to_string(),
        channels: manifest.channels.clone(),
        n_train: cfg.data.n_train,
        n_test: cfg.data.n_test,
        best_epoch: outcome.best_epoch,
        normalizer: outcome.normalizer,
        train: cfg.train.clone(),
    };
    io(&run_dir, fs::create_dir_all(&run_dir))?;
    save_checkpoint(
        &run_dir.join(CHECKPOINT_FILE),
        &outcome.best,
        &serde_json::to_value(&info)?,
    )?;
    write_atomic(&run_dir.join(RECORD_FILE), record.to_jsonl()?.as_bytes())?;
    write_json(&run_dir.join(CONFIG_FILE), &cfg)?;
    write_json(&run_dir.join(RUN_FILE), &info)?;
    print(out, format_args!("{}\n", run_dir.display()))?;
    print(
        out,
        format_args!(
            "model {}, {} epochs, best epoch {}, config hash {hash}\n",
            info.model,
            record.epochs.len(),
            info.best_epoch
        ),
    )?;
    if let Some(best) = record.best() {
        print(
            out,
            format_args!("best test relative L2 {:.6e}\n", best.test_aggregate),
        )?;
    }
    Ok(())
}

fn system_hash(spec: &SystemSpec) -> Result<String> {
    Ok(hex::encode(Sha256::digest(serde_json::to_vec(spec)?)))
}

pub fn eval_cmd(a: &EvalArgs, out: &mut dyn Write) -> Result<()> {
    if !a.checkpoint.is_file() {
        return Err(CliError::Usage(format!(
            "checkpoint {} does not exist",
            a.checkpoint.display()
        )));
    }
    let ckpt = load_checkpoint::<f32>(&a.checkpoint)?;
    let info: RunInfo = serde_json::from_value(ckpt.metadata.clone())
        .map_err(|e| CliError::Usage(format!("checkpoint carries no run metadata: {e}")))?;
    let (manifest, ds) = load_dataset(&a.data)?;
    if ds.spec != info.system {
        return Err(CliError::Usage(format!(
            "checkpoint (config hash {}, system hash {}) does not match dataset (config hash {}, system hash {})",
            info.config_hash,
            system_hash(&info.system)?,
            manifest.config_hash,
            system_hash(&ds.spec)?
        )));
    }
    let ds = match a.split {
        Split::All => ds,
        split => {
            if manifest.config_hash != info.data_hash {
                return Err(CliError::Usage(format!(
                    "--split needs the training dataset (config hash {}), got config hash {}",
                    info.data_hash, manifest.config_hash
                )));
            }
            let (train_set, test_set) = splits(&ds, info.n_train, info.n_test)?;
            if split == Split::Train {
                train_set
            } else {
                test_set
            }
        }
    };
    let eval = evaluate(&ckpt.model, &info.normalizer, &ds)?;
    print(
        out,
        format_args!(
            "checkpoint config hash {}\ndataset config hash    {}\nsamples {}\n",
            info.config_hash,
            manifest.config_hash,
            ds.samples()
        ),
    )?;
    print(
        out,
        format_args!("{:<10} {:<8} {:>14}\n", "process", "channel", "rel_l2"),
    )?;
    for (m, err) in eval.per_process.iter().enumerate() {
        let name = info.channels.get(m).map(String::as_str).unwrap_or("?");
        print(out, format_args!("{:<10} {:<8} {:>14.6e}\n", m, name, err))?;
    }
    print(
        out,
        format_args!("{:<10} {:<8} {:>14.6e}\n", "aggregate", "-", eval.aggregate),
    )?;
    if eval.zero_norm {
        print(
            out,
            format_args!("note: some targets have zero norm and were scored by absolute error\n"),
        )?;
    }
    if let Some(dir) = &a.dump_error_fields {
        let fields = error_fields(&ckpt.model, &info.normalizer, &ds)?;
        write_dataset(dir, &fields)?;
        write_json(
            &dir.join("source.json"),
            &serde_json::json!({
                "checkpoint_config_hash": info.config_hash,
                "dataset_config_hash": manifest.config_hash,
                "split": format!("{:?}", a.split).to_lowercase(),
                "contents": "inputs are the dataset inputs; outputs are |prediction - truth|",
            }),
        )?;
        print(
            out,
            format_args!("error fields written to {}\n", dir.display()),
        )?;
    }
    Ok(())
}

pub fn gradcheck_cmd(a: &GradcheckArgs, out: &mut dyn Write) -> Result<()> {
    let modules: Vec<Module> = match a.module {
        ModuleArg::All => Module::ALL.to_vec(),
        ModuleArg::Tensor => vec![Module::Tensor],
        ModuleArg::Layers => vec![Module::Layers],
        ModuleArg::Aggregation => vec![Module::Aggregation],
        ModuleArg::Model => vec![Module::Model],
    };
    let results = gradcheck::run(&modules)?;
    print(
        out,
        format_args!(
            "{:<12} {:<24} {:>12} {:>10}  {:<28} {}\n",
            "module", "op", "max_rel_err", "scalars", "worst", "status"
        ),
    )?;
    let mut failed = Vec::new();
    for r in &results {
        let status = if r.passed() { "ok" } else { "FAIL" };
        if !r.passed() {
            failed.push(r.op.clone());
        }
        print(
            out,
            format_args!(
                "{:<12} {:<24} {:>12.3e} {:>10}  {:<28} {}\n",
                r.module.name(),
                r.op,
                r.report.max_rel_error,
                r.report.components,
                r.location(),
                status
            ),
        )?;
    }
    let worst = results
        .iter()
        .map(|r| r.report.max_rel_error)
        .fold(0.0, f64::max);
    print(
        out,
        format_args!(
            "{} checks, worst relative error {worst:.3e}, tolerance {TOLERANCE:e}\n",
            results.len()
        ),
    )?;
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Failed(format!(
            "gradient check failed for {}",
            failed.join(", ")
        )))
    }
}

pub fn export_cmd(a: &ExportArgs, out: &mut dyn Write) -> Result<()> {
    let Format::Csv = a.format;
    let runs = a
        .runs
        .iter()
        .map(|d| plot::load_run(d))
        .collect::<Result<Vec<_>>>()?;
    let table = if runs.len() == 1 {
        plot::curves_csv(&runs[0])
    } else {
        plot::summary_csv(&runs)
    };
    match &a.out {
        Some(path) => write_atomic(path, table.as_bytes())?,
        None => print(out, format_args!("{table}"))?,
    }
    Ok(())
}

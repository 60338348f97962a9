use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use commsense::config::{Experiment, ExperimentConfig};
use commsense::evaluation::{
    run_bound, run_error_vs_p, run_manifest, run_generate, run_perturbation, run_roc_vs_snr, run_timing_vs_p, write_auc_table,
    write_bounds, write_records, write_roc_points, write_timings,
};
use commsense::subspace::pca_fit;

/// Simulate CSI under scatterer-absent/present hypotheses and benchmark
/// detectors.
#[derive(Debug, Parser)]
#[command(name = "commsense", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write one labelled dataset and its scree plot data.
    Gen(Common),
    /// Error rate vs. PCA dimension P, with Bhattacharyya bounds.
    SweepP(Common),
    /// ROC curves and AUC vs. SNR at fixed P.
    SweepSnr(Common),
    /// Error vs. relative error in the estimated means and variances.
    Perturb(Common),
    /// Inference time vs. P.
    Bench(Common),
    /// Bhattacharyya distance and error bound, full space and per P.
    Bound(Common),
}

#[derive(Debug, Args)]
struct Common {
    /// TOML configuration file; missing keys take their defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Base seed (overrides the config file).
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (overrides `output_path`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override one config key, e.g. `--set n_dim=1024`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

impl Command {
    fn parts(&self) -> (&'static str, Experiment, &Common) {
        match self {
            Command::Gen(c) => ("gen", Experiment::Generate, c),
            Command::SweepP(c) => ("sweep-p", Experiment::ErrorVsP, c),
            Command::SweepSnr(c) => ("sweep-snr", Experiment::RocVsSnr, c),
            Command::Perturb(c) => ("perturb", Experiment::Perturbation, c),
            Command::Bench(c) => ("bench", Experiment::Timing, c),
            Command::Bound(c) => ("bound", Experiment::Bound, c),
        }
    }
}

fn load_config(common: &Common) -> Result<ExperimentConfig> {
    let mut overrides = Vec::new();
    for item in &common.overrides {
        let Some((k, v)) = item.split_once('=') else {
            bail!("--set expects KEY=VALUE, got `{item}`");
        };
        overrides.push((k.trim().to_string(), v.to_string()));
    }
    if let Some(seed) = common.seed {
        overrides.push(("seed".into(), seed.to_string()));
    }
    if let Some(out) = &common.out {
        overrides.push(("output_path".into(), format!("{:?}", out.to_string_lossy())));
    }
    Ok(ExperimentConfig::load(common.config.as_deref(), &overrides)?)
}

/// Named in-memory artifacts, committed together or not at all.
struct Artifacts(Vec<(&'static str, Vec<u8>)>);

impl Artifacts {
    fn add(&mut self, name: &'static str, write: impl FnOnce(&mut Vec<u8>) -> commsense::Result<()>) -> Result<()> {
        let mut buf = Vec::new();
        write(&mut buf).with_context(|| format!("rendering {name}"))?;
        self.0.push((name, buf));
        Ok(())
    }

    /// Writes each file under a temporary name, then renames them into
    /// place. On failure every file written so far is removed.
    fn commit(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(dir).with_context(|| format!("creating output directory {}", dir.display()))?;
        let mut written: Vec<PathBuf> = Vec::new();
        let result = (|| -> Result<Vec<PathBuf>> {
            let mut staged = Vec::new();
            for (name, bytes) in &self.0 {
                let tmp = dir.join(format!(".{name}.partial"));
                written.push(tmp.clone());
                fs::write(&tmp, bytes).with_context(|| format!("writing {}", tmp.display()))?;
                staged.push((tmp, dir.join(name)));
            }
            let mut finals = Vec::new();
            for (tmp, dest) in staged {
                fs::rename(&tmp, &dest).with_context(|| format!("writing {}", dest.display()))?;
                written.push(dest.clone());
                finals.push(dest);
            }
            Ok(finals)
        })();
        if result.is_err() {
            for path in &written {
                let _ = fs::remove_file(path);
            }
        }
        result
    }
}

fn run(command: &Command) -> Result<Vec<PathBuf>> {
    let (name, experiment, common) = command.parts();
    let cfg = load_config(common)?;
    cfg.validate_for(experiment)?;
    let mut art = Artifacts(Vec::new());
    match command {
        Command::Gen(_) => {
            let data = run_generate(&cfg)?;
            let basis = pca_fit(&data, 1)?;
            art.add("dataset.csv", |w| data.write_csv(w))?;
            art.add("scree.csv", |w| basis.write_scree(w))?;
        }
        Command::SweepP(_) => {
            let out = run_error_vs_p(&cfg)?;
            art.add("error_vs_p.csv", |w| write_records(&out.records, w))?;
            art.add("bounds.csv", |w| write_bounds(&out.bounds, w))?;
        }
        Command::SweepSnr(_) => {
            let out = run_roc_vs_snr(&cfg)?;
            art.add("roc_vs_snr.csv", |w| write_records(&out.records, w))?;
            art.add("roc_points.csv", |w| write_roc_points(&out.curves, w))?;
            art.add("auc_table.csv", |w| write_auc_table(&out.records, w))?;
        }
        Command::Perturb(_) => {
            let records = run_perturbation(&cfg)?;
            art.add("perturbation.csv", |w| write_records(&records, w))?;
        }
        Command::Bench(_) => {
            let out = run_timing_vs_p(&cfg)?;
            art.add("timing_vs_p.csv", |w| write_records(&out.records, w))?;
            art.add("timings.csv", |w| write_timings(&out.timings, w))?;
        }
        Command::Bound(_) => {
            let rows = run_bound(&cfg)?;
            art.add("bound.csv", |w| write_bounds(&rows, w))?;
        }
    }
    let files: Vec<&str> = art.0.iter().map(|(n, _)| *n).collect();
    let manifest = serde_json::to_vec_pretty(&run_manifest(name, &cfg, &files))?;
    art.0.push(("manifest.json", manifest));
    art.commit(&cfg.output_path)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli.command) {
        Ok(paths) => {
            for p in paths {
                println!("{}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

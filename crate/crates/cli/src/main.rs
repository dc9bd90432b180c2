//! `osa`: synthesize a cohort, preprocess it into event windows, extract
//! HRV/EDR features, cross-validate the classifiers, and render reports.
//!
//! Exit status: 0 success, 1 usage or configuration error, 2 data error,
//! 3 numeric failure.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use osa_core::dsp::{read_window_store, write_window_store, EventWindow};
use osa_core::harness::{
    compute_features, preprocess_records, read_report, render_report, run_experiment, synthesize_windows, write_report,
    ExperimentConfig, HarnessError, ModelChoice, Preprocessed, EXIT_OK, EXIT_USAGE,
};
use osa_core::hrv::{read_feature_csv, write_feature_csv, FeatureRow};
use osa_core::signal_io::{generate_synthetic_ecg, load_subject, read_cohort_manifest, write_cohort, Label};

#[derive(Parser)]
#[command(name = "osa", version, about = "Apnea-severity classification from single-lead ECG")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic cohort (EDF + annotation XML per subject, manifest.jsonl).
    Synth {
        #[arg(long)]
        subjects_normal: usize,
        #[arg(long)]
        subjects_severe: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Overrides the cohort profile (synth_*, normal_*, severe_* keys).
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Filter a cohort and cut z-scored event windows into a window store.
    Preprocess {
        /// Cohort directory holding manifest.jsonl.
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Extract the nine HRV/EDR features of every window to CSV.
    Features {
        #[arg(long)]
        windows: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Run k-fold cross-validation and write a run directory.
    Crossval {
        #[arg(long, value_parser = clap::value_parser!(ModelChoice))]
        model: ModelChoice,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Sets every seed (selection, folds, SVM, network, cohort).
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
        /// Window store; without it the configured synthetic cohort is generated.
        #[arg(long)]
        windows: Option<PathBuf>,
        /// Precomputed feature CSV for the SVM.
        #[arg(long)]
        features: Option<PathBuf>,
    },
    /// Re-render the report files of a finished run and print the table.
    Report {
        #[arg(long)]
        run: PathBuf,
    },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> HarnessError + '_ {
    move |source| HarnessError::Io { path: path.display().to_string(), source }
}

fn load_config(path: Option<&Path>) -> Result<ExperimentConfig, HarnessError> {
    match path {
        None => Ok(ExperimentConfig::default()),
        Some(p) => Ok(ExperimentConfig::parse(&fs::read_to_string(p).map_err(io_err(p))?)?),
    }
}

fn synth(n_normal: usize, n_severe: usize, seed: u64, out: &Path, cfg: &ExperimentConfig) -> Result<(), HarnessError> {
    if n_normal == 0 || n_severe == 0 {
        return Err(HarnessError::Usage("both classes need at least one subject".into()));
    }
    let configs = cfg.cohort.subject_configs(n_normal, n_severe, seed);
    let mut records = Vec::with_capacity(configs.len());
    for c in &configs {
        let r = generate_synthetic_ecg(c)?;
        if r.label == Label::Excluded {
            return Err(HarnessError::Usage(format!("profile AHI range excludes subject {}", r.subject_id)));
        }
        records.push(r);
    }
    let seeds: Vec<u64> = configs.iter().map(|c| c.seed).collect();
    let entries = write_cohort(out, &records, &seeds)?;
    let events: usize = records.iter().map(|r| r.events.len()).sum();
    println!("wrote {} subjects ({events} events) to {}", entries.len(), out.display());
    Ok(())
}

fn preprocess(input: &Path, out: &Path, cfg: &ExperimentConfig) -> Result<(), HarnessError> {
    let entries = read_cohort_manifest(input)?;
    let mut records = Vec::new();
    for e in &entries {
        if e.label == Label::Excluded {
            log::info!("skipping excluded subject {}", e.subject_id);
            continue;
        }
        records.push(load_subject(input, e)?);
    }
    let Preprocessed { windows, skipped } = preprocess_records(&records, cfg)?;
    write_window_store(out, &windows)?;
    let path = out.join("skipped.csv");
    let csv_err = |e: csv::Error| HarnessError::Data(format!("{}: {e}", path.display()));
    let mut w = csv::Writer::from_path(&path).map_err(csv_err)?;
    w.write_record(["subject_id", "event", "start", "duration", "reason"]).map_err(csv_err)?;
    for (subject, ev, why) in &skipped {
        w.write_record([subject, &ev.name, &ev.start.to_string(), &ev.duration.to_string(), &format!("{why:?}")])
            .map_err(csv_err)?;
    }
    w.flush().map_err(io_err(&path))?;
    println!("{} windows from {} subjects, {} events skipped", windows.len(), records.len(), skipped.len());
    Ok(())
}

fn feature_rows(windows: &[EventWindow], cfg: &ExperimentConfig) -> Vec<FeatureRow> {
    let mut rows = Vec::new();
    for (w, r) in windows.iter().zip(compute_features(windows, cfg)) {
        match r {
            Ok(features) => rows.push(FeatureRow {
                subject_id: w.subject_id.clone(),
                window_id: w.window_id(),
                label: w.label,
                features,
            }),
            Err(why) => log::warn!("no features for {}: {why}", w.window_id()),
        }
    }
    rows
}

fn features(windows_dir: &Path, out: &Path, cfg: &ExperimentConfig) -> Result<(), HarnessError> {
    let windows = read_window_store(windows_dir)?;
    let rows = feature_rows(&windows, cfg);
    let file = fs::File::create(out).map_err(io_err(out))?;
    write_feature_csv(file, &rows)?;
    println!("{} of {} windows have features", rows.len(), windows.len());
    Ok(())
}

fn crossval(
    cfg: &ExperimentConfig,
    out: &Path,
    windows_dir: Option<&Path>,
    features_csv: Option<&Path>,
) -> Result<(), HarnessError> {
    let windows = match windows_dir {
        Some(dir) => read_window_store(dir)?,
        None => {
            log::info!("synthesizing {}+{} subjects", cfg.subjects_normal, cfg.subjects_severe);
            synthesize_windows(cfg)?.windows
        }
    };
    let precomputed = match features_csv {
        Some(p) => Some(read_feature_csv(fs::File::open(p).map_err(io_err(p))?)?),
        None => None,
    };
    let table = run_experiment(&windows, precomputed.as_deref(), cfg, out)?;
    print!("{}", render_report(&table)?.text);
    Ok(())
}

fn report(run: &Path) -> Result<(), HarnessError> {
    let table = read_report(run)?;
    write_report(&table, run)?;
    print!("{}", render_report(&table)?.text);
    Ok(())
}

fn run(cli: Cli) -> Result<(), HarnessError> {
    match cli.command {
        Command::Synth { subjects_normal, subjects_severe, seed, out, config } => {
            synth(subjects_normal, subjects_severe, seed, &out, &load_config(config.as_deref())?)
        }
        Command::Preprocess { input, out, config } => preprocess(&input, &out, &load_config(config.as_deref())?),
        Command::Features { windows, out, config } => features(&windows, &out, &load_config(config.as_deref())?),
        Command::Crossval { model, config, seed, out, windows, features } => {
            let mut cfg = load_config(config.as_deref())?;
            cfg.models = model;
            if let Some(s) = seed {
                cfg.set_seed(s);
            }
            crossval(&cfg, &out, windows.as_deref(), features.as_deref())
        }
        Command::Report { run: dir } => report(&dir),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            return ExitCode::from(code as u8);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

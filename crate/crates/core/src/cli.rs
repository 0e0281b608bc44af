//! Command-line front end: `train`, `evaluate`, `ledger` and
//! `partition-report`.
//!
//! Exit codes: 0 success, 2 usage or configuration error, 3 divergence,
//! 1 anything else.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::channel::Fading;
use crate::checkpoint::Checkpoint;
use crate::config::{RunConfig, Strategy};
use crate::error::{Error, Result};
use crate::fl::{self, ledger_summary, simulate_ledger};
use crate::model::Model;
use crate::params::GroupLayout;

#[derive(Debug, Parser)]
#[command(name = "semfed", version, about = "Federated training of a semantic-communication autoencoder")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run federated (or centralized) training and write report.csv plus checkpoints.
    Train(TrainArgs),
    /// Evaluate a checkpoint over a list of SNR values.
    Evaluate(EvaluateArgs),
    /// Print the traffic of the update schedule against full updates.
    Ledger(LedgerArgs),
    /// Per-client class histogram of the data split, as CSV.
    PartitionReport(PartitionArgs),
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub strategy: Option<Strategy>,
    /// Send channel groups only every `interval` rounds.
    #[arg(long, conflicts_with = "full")]
    pub partial: bool,
    /// Send the whole model every round.
    #[arg(long)]
    pub full: bool,
    #[arg(long)]
    pub interval: Option<u32>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub snr_train: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value = "out")]
    pub out_dir: PathBuf,
    /// Worker threads; defaults to all cores.
    #[arg(long)]
    pub threads: Option<usize>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// Comma-separated SNR values in dB.
    #[arg(long, value_delimiter = ',', required = true, allow_hyphen_values = true)]
    pub snr_eval_list: Vec<f64>,
    /// `none` (AWGN only) or `rayleigh`.
    #[arg(long)]
    pub fading: Fading,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct LedgerArgs {
    /// Use the published module sizes instead of a model config.
    #[arg(long, conflicts_with = "config")]
    pub paper_sizes: bool,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, default_value_t = 5)]
    pub interval: u32,
    #[arg(long, default_value_t = 100)]
    pub rounds: u32,
    #[arg(long, default_value_t = 10)]
    pub clients: usize,
}

#[derive(Debug, Args)]
pub struct PartitionArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
}

/// Parses `args` (including the program name) and runs the command,
/// writing results to `out` and diagnostics to stderr.
pub fn run_cli<I, T>(args: I, out: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            if code == 0 {
                let _ = write!(out, "{e}");
            } else {
                eprint!("{e}");
            }
            return code;
        }
    };
    match run(cli, out) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config(_) | Error::ConfigLine { .. } | Error::ModelSpec(_) => 2,
        Error::Diverged { .. } => 3,
        _ => 1,
    }
}

pub fn run(cli: Cli, out: &mut dyn Write) -> Result<()> {
    match cli.command {
        Command::Train(a) => train(a, out),
        Command::Evaluate(a) => evaluate(a, out),
        Command::Ledger(a) => ledger(a, out),
        Command::PartitionReport(a) => partition_report(a, out),
    }
}

fn write_report_csv(path: &Path, report: &crate::report::TrainingReport) -> Result<()> {
    let file = fs::File::create(path)?;
    report.write_csv(file, true)
}

fn train(a: TrainArgs, out: &mut dyn Write) -> Result<()> {
    let mut cfg = RunConfig::from_file(&a.config)?;
    if let Some(s) = a.strategy {
        cfg.strategy = s;
    }
    if a.partial {
        cfg.partial_update = true;
    }
    if a.full {
        cfg.partial_update = false;
    }
    if let Some(p) = a.interval {
        cfg.update_interval = p;
    }
    if let Some(alpha) = a.alpha {
        cfg.alpha = alpha;
    }
    if let Some(snr) = a.snr_train {
        cfg.channel.snr_db = snr;
    }
    if let Some(seed) = a.seed {
        cfg.seed = seed;
    }
    cfg.validate()?;
    fs::create_dir_all(&a.out_dir)?;
    let report_path = a.out_dir.join("report.csv");

    let job = || -> Result<fl::TrainingOutcome> {
        let data = fl::prepare_data(&cfg)?;
        fl::run_training(&cfg, &data)
    };
    let result = match a.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Config(format!("cannot start {n} threads: {e}")))?
            .install(job),
        None => job(),
    };
    let outcome = match result {
        Ok(o) => o,
        Err(e) => {
            if let Error::Diverged { partial_report, .. } = &e {
                write_report_csv(&report_path, partial_report)?;
            }
            return Err(e);
        }
    };
    write_report_csv(&report_path, &outcome.report)?;
    for ck in &outcome.checkpoints {
        ck.save(&a.out_dir.join(format!("round-{:04}.ckpt", ck.round)))?;
    }
    Checkpoint {
        round: cfg.global_rounds,
        params: outcome.global.clone(),
    }
    .save(&a.out_dir.join("final.ckpt"))?;

    writeln!(out, "strategy       {}", cfg.strategy_label())?;
    writeln!(out, "rounds         {}", cfg.global_rounds)?;
    if let Some(e) = outcome.final_eval {
        writeln!(out, "final psnr     {:.3} dB", e.psnr_db)?;
        match e.msssim {
            Some(m) => writeln!(out, "final ms-ssim  {m:.4} ({} scales)", e.msssim_scales)?,
            None => writeln!(out, "final ms-ssim  n/a (image smaller than one window)")?,
        }
    }
    writeln!(out, "bytes down/up  {} / {}", outcome.ledger.total_down(), outcome.ledger.total_up())?;
    writeln!(out, "report         {}", report_path.display())?;
    Ok(())
}

fn evaluate(a: EvaluateArgs, out: &mut dyn Write) -> Result<()> {
    let mut cfg = RunConfig::from_file(&a.config)?;
    if let Some(seed) = a.seed {
        cfg.seed = seed;
    }
    let model = Model::with_bytes_per_element(cfg.model.clone(), cfg.bytes_per_element)?;
    let params = Checkpoint::load(&a.checkpoint)?.params_for(model.layout())?;
    let data = fl::prepare_data(&cfg)?;
    let rows = fl::snr_sweep(&model, &params, &data.eval, &a.snr_eval_list, a.fading, cfg.seed)?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["snr_db", "fading", "psnr_db", "msssim", "msssim_scales", "deep_fades"])?;
    for (snr, s) in rows {
        w.write_record([
            snr.to_string(),
            a.fading.to_string(),
            s.psnr_db.to_string(),
            s.msssim.map_or(String::new(), |m| m.to_string()),
            s.msssim_scales.to_string(),
            s.deep_fades.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn ledger(a: LedgerArgs, out: &mut dyn Write) -> Result<()> {
    if a.interval == 0 || a.rounds == 0 || a.clients == 0 {
        return Err(Error::Config("interval, rounds and clients must be positive".into()));
    }
    let layout = if a.paper_sizes {
        GroupLayout::paper_sizes()
    } else {
        let cfg = match &a.config {
            Some(p) => RunConfig::from_file(p)?,
            None => RunConfig::default(),
        };
        let model = Model::with_bytes_per_element(cfg.model, cfg.bytes_per_element)?;
        (**model.layout()).clone()
    };
    for g in layout.groups() {
        writeln!(out, "{:<13} {:>14} bytes", g.group.to_string(), g.bytes())?;
    }
    let ledger = simulate_ledger(&layout, a.rounds, a.interval, true, a.clients);
    writeln!(out, "interval P    {}", a.interval)?;
    writeln!(out, "{}", ledger_summary(&ledger, &layout, a.clients))?;
    Ok(())
}

fn partition_report(a: PartitionArgs, out: &mut dyn Write) -> Result<()> {
    let mut cfg = RunConfig::from_file(&a.config)?;
    if let Some(alpha) = a.alpha {
        cfg.alpha = alpha;
    }
    if let Some(seed) = a.seed {
        cfg.seed = seed;
    }
    cfg.validate()?;
    let data = fl::prepare_data(&cfg)?;
    let classes = data.train.class_count;
    let hist = data.partition.class_histogram(&data.train.labels, classes);
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["client".to_string()];
    header.extend((0..classes).map(|c| format!("class_{c}")));
    header.push("total".into());
    w.write_record(&header)?;
    for (k, row) in hist.iter().enumerate() {
        let mut rec = vec![k.to_string()];
        rec.extend(row.iter().map(usize::to_string));
        rec.push(row.iter().sum::<usize>().to_string());
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

//! The federated training loop.

use rayon::prelude::*;

use crate::channel::ChannelConfig;
use crate::checkpoint::Checkpoint;
use crate::config::{DataSource, RunConfig, Strategy};
use crate::data::{dirichlet_partition, load_dataset, synthetic_dataset, Dataset, DatasetFormat, Partition};
use crate::error::{Error, Result};
use crate::model::Model;
use crate::params::ParamVector;
use crate::report::{ReportRow, TrainingReport};
use crate::rng::{self, Stream};

use super::aggregate::{aggregate, fedavg_weights, fedlol_weights, uniform_weights, RoundPayload};
use super::client::{evaluate, local_train, train_from, Budget, ClientState, EvalSummary, LocalSettings};
use super::ledger::CommLedger;
use super::schedule::{broadcast_groups, upload_groups};

/// Training pool, held-out evaluation set and the client split of the pool.
#[derive(Debug, Clone)]
pub struct FederatedData {
    pub train: Dataset,
    pub eval: Dataset,
    pub partition: Partition,
}

/// Builds the datasets named by `cfg` and partitions the training pool.
pub fn prepare_data(cfg: &RunConfig) -> Result<FederatedData> {
    let shape = cfg.model.image_shape;
    let (train, eval) = match &cfg.data {
        DataSource::Synthetic { classes, per_class } => {
            let train = synthetic_dataset(shape, *classes, *per_class, cfg.seed)?;
            let eval_per_class = cfg.eval_samples.div_ceil(*classes).max(1);
            let eval_seed = rng::derive_seed(cfg.seed, Stream::EvalSynthetic, &[]);
            let pool = synthetic_dataset(shape, *classes, eval_per_class, eval_seed)?;
            let n = cfg.eval_samples.clamp(1, pool.len());
            let picks: Vec<usize> = (0..n).map(|i| i * pool.len() / n).collect();
            (train, pool.subset(&picks))
        }
        DataSource::Packed(path) => load_dataset(path, DatasetFormat::Packed)?.split_holdout(cfg.eval_samples, cfg.seed)?,
        DataSource::RawDir(path) => load_dataset(path, DatasetFormat::RawDir)?.split_holdout(cfg.eval_samples, cfg.seed)?,
    };
    if let Some(actual) = train.shape() {
        if actual != shape {
            return Err(Error::Shape { expected: shape, actual });
        }
    }
    let partition = partition_for(cfg, &train)?;
    Ok(FederatedData { train, eval, partition })
}

pub fn partition_for(cfg: &RunConfig, train: &Dataset) -> Result<Partition> {
    let mut rng = rng::stream(cfg.seed, Stream::Partition, &[]);
    dirichlet_partition(&train.labels, train.class_count, cfg.num_clients, cfg.alpha, &mut rng)
}

#[derive(Debug, Clone)]
pub struct TrainingOutcome {
    pub report: TrainingReport,
    pub ledger: CommLedger,
    pub global: ParamVector,
    /// Global model every `checkpoint_interval` rounds.
    pub checkpoints: Vec<Checkpoint>,
    pub final_eval: Option<EvalSummary>,
}

fn settings(cfg: &RunConfig) -> LocalSettings {
    LocalSettings {
        local_epochs: cfg.local_epochs,
        batch_size: cfg.batch_size,
        lr: cfg.lr,
        prox_mu: (cfg.strategy == Strategy::FedProx).then_some(cfg.fedprox_mu),
        channel: cfg.channel,
        seed: cfg.seed,
    }
}

fn with_report(err: Error, report: &TrainingReport) -> Error {
    match err {
        Error::Diverged { round, client, loss, .. } => Error::Diverged {
            round,
            client,
            loss,
            partial_report: Box::new(report.clone()),
        },
        other => other,
    }
}

/// Runs `cfg.global_rounds` rounds and returns the per-round report.
///
/// Clients train in parallel on the current rayon pool. Every random draw is
/// keyed by `(seed, client, round, ...)` and uploads are combined in client
/// order, so the result does not depend on the number of threads.
pub fn run_training(cfg: &RunConfig, data: &FederatedData) -> Result<TrainingOutcome> {
    cfg.validate()?;
    if data.partition.num_clients() != cfg.num_clients {
        return Err(Error::Config(format!(
            "partition has {} clients, config asks for {}",
            data.partition.num_clients(),
            cfg.num_clients
        )));
    }
    let model = Model::with_bytes_per_element(cfg.model.clone(), cfg.bytes_per_element)?;
    let mut global = model.init_params(cfg.seed);
    let local = settings(cfg);
    let label = cfg.strategy_label();
    let mut report = TrainingReport::new();
    let mut ledger = CommLedger::new();
    let mut checkpoints = Vec::new();
    let mut final_eval = None;

    let mut clients: Vec<ClientState> = data
        .partition
        .assignment
        .iter()
        .enumerate()
        .map(|(id, indices)| ClientState {
            id,
            indices: indices.clone(),
            params: global.clone(),
            last_loss: None,
        })
        .collect();
    let pooled: Vec<usize> = (0..data.train.len()).collect();
    let steps_per_round: u64 = clients
        .iter()
        .map(|c| c.indices.len().div_ceil(cfg.batch_size) as u64)
        .sum::<u64>()
        * u64::from(cfg.local_epochs);

    for t in 1..=cfg.global_rounds {
        let (train_loss, down, up) = if cfg.strategy == Strategy::Centralized {
            let update = train_from(
                &model,
                global,
                &pooled,
                &data.train,
                &local,
                cfg.num_clients as u64,
                t,
                Budget::Steps(steps_per_round),
            )
            .map_err(|e| with_report(e, &report))?;
            global = update.params;
            (update.loss, 0, 0)
        } else {
            let sent = RoundPayload::new(global.clone(), broadcast_groups(t, cfg.update_interval, cfg.partial_update), None);
            let up_groups = upload_groups(t, cfg.update_interval, cfg.partial_update);
            let results: Vec<Result<_>> = clients
                .par_iter()
                .map(|c| local_train(&model, c, &sent, &data.train, &local, t))
                .collect();
            let mut uploads = Vec::with_capacity(clients.len());
            for (client, res) in clients.iter_mut().zip(results) {
                let update = res.map_err(|e| with_report(e, &report))?;
                client.last_loss = Some(update.loss);
                uploads.push(RoundPayload::new(update.params.clone(), up_groups, Some(update.loss)));
                client.params = update.params;
            }
            let losses: Vec<f64> = uploads.iter().filter_map(|u| u.loss).collect();
            let weights = match cfg.strategy {
                Strategy::FedLol => match fedlol_weights(&losses) {
                    Ok(w) => w,
                    Err(Error::DegenerateLoss(l)) => {
                        log::warn!("round {t}: local loss {l} makes loss weighting undefined, using uniform weights");
                        uniform_weights(losses.len())
                    }
                    Err(e) => return Err(e),
                },
                _ => fedavg_weights(&data.partition.sizes())?,
            };
            global = aggregate(&uploads, &weights, &global)?;
            let down = sent.bytes * clients.len() as u64;
            let up = uploads.iter().map(|u| u.bytes).sum();
            (losses.iter().sum::<f64>() / losses.len() as f64, down, up)
        };
        ledger.record(t, down, up);

        let eval = if t % cfg.eval_interval == 0 || t == cfg.global_rounds {
            let s = evaluate(&model, &global, &data.eval, &cfg.channel, cfg.seed, &[u64::from(t)])?;
            final_eval = Some(s);
            Some(s)
        } else {
            None
        };
        log::info!(
            "round {t}/{}: train loss {train_loss:.6}{}",
            cfg.global_rounds,
            eval.map_or(String::new(), |e| format!(", eval psnr {:.3} dB", e.psnr_db))
        );
        report.push(ReportRow {
            round: t,
            strategy: label.clone(),
            snr_db: cfg.channel.snr_db,
            train_loss,
            eval_psnr_db: eval.map(|e| e.psnr_db),
            eval_msssim: eval.and_then(|e| e.msssim),
            bytes_down: down,
            bytes_up: up,
        })?;
        if cfg.checkpoint_interval > 0 && t % cfg.checkpoint_interval == 0 {
            checkpoints.push(Checkpoint {
                round: t,
                params: global.clone(),
            });
        }
    }

    Ok(TrainingOutcome {
        report,
        ledger,
        global,
        checkpoints,
        final_eval,
    })
}

/// Evaluates `params` once per SNR value in `snrs_db`.
pub fn snr_sweep(
    model: &Model,
    params: &ParamVector,
    eval: &Dataset,
    snrs_db: &[f64],
    fading: crate::channel::Fading,
    seed: u64,
) -> Result<Vec<(f64, EvalSummary)>> {
    snrs_db
        .iter()
        .enumerate()
        .map(|(i, &snr)| {
            let channel = ChannelConfig::new(snr, fading)?;
            Ok((snr, evaluate(model, params, eval, &channel, seed, &[u64::MAX, i as u64])?))
        })
        .collect()
}

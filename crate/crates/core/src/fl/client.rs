//! Client-side training and global-model evaluation.

use rayon::prelude::*;

use crate::channel::{ChannelConfig, ChannelRealization};
use crate::data::{batch_iter, Dataset};
use crate::error::{Error, Result};
use crate::metrics;
use crate::model::{mse_gradient, mse_loss, Model};
use crate::params::ParamVector;
use crate::rng::{self, Stream};

use super::aggregate::RoundPayload;

#[derive(Debug, Clone, PartialEq)]
pub struct LocalSettings {
    pub local_epochs: u32,
    pub batch_size: usize,
    pub lr: f64,
    /// Proximal coefficient; `None` trains with plain SGD.
    pub prox_mu: Option<f64>,
    pub channel: ChannelConfig,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClientState {
    pub id: usize,
    pub indices: Vec<usize>,
    pub params: ParamVector,
    pub last_loss: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LocalUpdate {
    pub params: ParamVector,
    /// Mean per-sample training loss over the final local epoch.
    pub loss: f64,
    pub deep_fades: usize,
}

/// One FedProx step: `p − lr·(∇L + μ·(p − p_global))`.
pub fn fedprox_local_step(
    params: &ParamVector,
    grad: &ParamVector,
    global: &ParamVector,
    mu: f64,
    lr: f64,
) -> Result<ParamVector> {
    if !params.same_layout(grad) || !params.same_layout(global) {
        return Err(Error::LayoutMismatch);
    }
    if mu == 0.0 {
        return params.sgd_step(grad, lr);
    }
    let values = params
        .values()
        .iter()
        .zip(grad.values())
        .zip(global.values())
        .map(|((p, g), w)| p - lr * (g + mu * (p - w)))
        .collect();
    ParamVector::new(values, params.layout().clone())
}

/// How long a local training call runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Budget {
    Epochs(u32),
    Steps(u64),
}

struct BatchResult {
    grad: Vec<f64>,
    loss_sum: f64,
    deep_fades: usize,
}

fn batch_gradient(
    model: &Model,
    params: &ParamVector,
    batch: &[usize],
    data: &Dataset,
    settings: &LocalSettings,
    rng: &mut rng::Rng,
) -> Result<BatchResult> {
    let mut grad = vec![0.0; model.param_count()];
    let mut loss_sum = 0.0;
    let mut deep_fades = 0;
    let symbols = model.spec().symbol_dim / 2;
    let scale = 1.0 / batch.len() as f64;
    for &i in batch {
        let image = &data.images[i];
        let realization = ChannelRealization::sample(symbols, &settings.channel, rng);
        let (hat, trace) = model.forward(params, image, settings.channel.snr_db, &realization)?;
        loss_sum += mse_loss(image, &hat)?;
        deep_fades += trace.deep_fades;
        let mut d = mse_gradient(image, &hat);
        d.iter_mut().for_each(|v| *v *= scale);
        model.accumulate_gradient(params, &trace, &d, &mut grad)?;
    }
    Ok(BatchResult {
        grad,
        loss_sum,
        deep_fades,
    })
}

fn diverged(round: u32, client: usize, loss: f64) -> Error {
    Error::Diverged {
        round,
        client,
        loss,
        partial_report: Box::default(),
    }
}

/// Mini-batch SGD (or FedProx) from `start`. Batch order and channel draws
/// come from streams keyed by `(stream_id, round, epoch[, batch])`.
pub(crate) fn train_from(
    model: &Model,
    start: ParamVector,
    indices: &[usize],
    data: &Dataset,
    settings: &LocalSettings,
    stream_id: u64,
    round: u32,
    budget: Budget,
) -> Result<LocalUpdate> {
    let anchor = start.clone();
    let mut params = start;
    let mut steps = 0u64;
    let mut deep_fades = 0;
    let mut epoch_loss = (0.0, 0usize);
    let id = stream_id;
    let t = u64::from(round);
    for epoch in 0u64.. {
        match budget {
            Budget::Epochs(r) if epoch >= u64::from(r) => break,
            Budget::Steps(n) if steps >= n => break,
            _ => {}
        }
        epoch_loss = (0.0, 0);
        let mut order = rng::stream(settings.seed, Stream::Batches, &[id, t, epoch]);
        for (b, batch) in batch_iter(indices, settings.batch_size, &mut order)
            .iter()
            .enumerate()
        {
            if matches!(budget, Budget::Steps(n) if steps >= n) {
                break;
            }
            let mut noise = rng::stream(settings.seed, Stream::TrainChannel, &[id, t, epoch, b as u64]);
            let res = batch_gradient(model, &params, batch, data, settings, &mut noise)?;
            if !res.loss_sum.is_finite() {
                return Err(diverged(round, stream_id as usize, res.loss_sum));
            }
            epoch_loss.0 += res.loss_sum;
            epoch_loss.1 += batch.len();
            deep_fades += res.deep_fades;
            let grad = ParamVector::new(res.grad, params.layout().clone())
                .map_err(|_| diverged(round, stream_id as usize, f64::NAN))?;
            params = match settings.prox_mu {
                Some(mu) => fedprox_local_step(&params, &grad, &anchor, mu, settings.lr),
                None => params.sgd_step(&grad, settings.lr),
            }
            .map_err(|e| match e {
                Error::NonFinite(_) => diverged(round, stream_id as usize, f64::NAN),
                other => other,
            })?;
            steps += 1;
        }
    }
    let loss = if epoch_loss.1 > 0 {
        epoch_loss.0 / epoch_loss.1 as f64
    } else {
        0.0
    };
    Ok(LocalUpdate {
        params,
        loss,
        deep_fades,
    })
}

/// Synchronises the client with the received payload, then runs the
/// configured number of local epochs.
pub fn local_train(
    model: &Model,
    client: &ClientState,
    received: &RoundPayload,
    data: &Dataset,
    settings: &LocalSettings,
    round: u32,
) -> Result<LocalUpdate> {
    let synced = client.params.overwrite_groups(&received.params, received.groups)?;
    train_from(
        model,
        synced,
        &client.indices,
        data,
        settings,
        client.id as u64,
        round,
        Budget::Epochs(settings.local_epochs),
    )
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalSummary {
    pub loss: f64,
    /// Mean per-image PSNR, exact matches counted at the report cap.
    pub psnr_db: f64,
    /// `None` when images are smaller than one SSIM window.
    pub msssim: Option<f64>,
    pub msssim_scales: usize,
    pub deep_fades: usize,
}

/// Runs every evaluation image through the full pipeline. Channel draws for
/// image `i` come from the stream keyed by `key ++ [i]`; per-image results
/// are reduced in index order.
pub fn evaluate(
    model: &Model,
    params: &ParamVector,
    eval: &Dataset,
    channel: &ChannelConfig,
    seed: u64,
    key: &[u64],
) -> Result<EvalSummary> {
    if eval.is_empty() {
        return Err(Error::Config("evaluation set is empty".into()));
    }
    let symbols = model.spec().symbol_dim / 2;
    let per_image: Vec<(f64, f64, Option<(f64, usize)>, usize)> = eval
        .images
        .par_iter()
        .enumerate()
        .map(|(i, image)| {
            let mut coords = key.to_vec();
            coords.push(i as u64);
            let mut r = rng::stream(seed, Stream::EvalChannel, &coords);
            let realization = ChannelRealization::sample(symbols, channel, &mut r);
            let (hat, trace) = model.forward(params, image, channel.snr_db, &realization)?;
            let loss = mse_loss(image, &hat)?;
            let psnr = metrics::psnr_capped(image, &hat, 1.0)?;
            let ms = metrics::ms_ssim(image, &hat).ok().map(|m| (m.value, m.scales));
            Ok((loss, psnr, ms, trace.deep_fades))
        })
        .collect::<Result<_>>()?;
    let n = per_image.len() as f64;
    let loss = per_image.iter().map(|r| r.0).sum::<f64>() / n;
    let psnr_db = per_image.iter().map(|r| r.1).sum::<f64>() / n;
    let msssim = per_image
        .iter()
        .map(|r| r.2.map(|m| m.0))
        .sum::<Option<f64>>()
        .map(|s| s / n);
    let msssim_scales = per_image.first().and_then(|r| r.2).map_or(0, |m| m.1);
    let deep_fades = per_image.iter().map(|r| r.3).sum();
    Ok(EvalSummary {
        loss,
        psnr_db,
        msssim,
        msssim_scales,
        deep_fades,
    })
}

use crate::error::{Error, Result};
use crate::params::{GroupSet, ParamVector};

/// Parameters sent in one direction in one round.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundPayload {
    /// Full vector; only `groups` count as transmitted.
    pub params: ParamVector,
    pub groups: GroupSet,
    /// Local loss reported with an upload; `None` for broadcasts.
    pub loss: Option<f64>,
    pub bytes: u64,
}

impl RoundPayload {
    pub fn new(params: ParamVector, groups: GroupSet, loss: Option<f64>) -> Self {
        let bytes = params.layout().byte_size(groups);
        RoundPayload {
            params,
            groups,
            loss,
            bytes,
        }
    }
}

/// Loss-based weights: `ω_k = (ΣL − L_k) / ((K − 1) ΣL)`.
///
/// Lower local loss gives a larger share. Weights sum to one and each lies in
/// `[0, 1/(K−1)]`. A single client gets weight one.
pub fn fedlol_weights(losses: &[f64]) -> Result<Vec<f64>> {
    match losses.len() {
        0 => return Err(Error::LengthMismatch { expected: 1, actual: 0 }),
        1 => return Ok(vec![1.0]),
        _ => {}
    }
    if let Some(&bad) = losses.iter().find(|l| !(**l > 0.0 && l.is_finite())) {
        return Err(Error::DegenerateLoss(bad));
    }
    let total: f64 = losses.iter().sum();
    let norm = (losses.len() - 1) as f64 * total;
    Ok(losses.iter().map(|l| (total - l) / norm).collect())
}

/// Sample-share weights `d_k / D`.
pub fn fedavg_weights(sample_counts: &[usize]) -> Result<Vec<f64>> {
    let total: usize = sample_counts.iter().sum();
    if total == 0 {
        return Err(Error::Protocol("fedavg weights need at least one sample".into()));
    }
    Ok(sample_counts
        .iter()
        .map(|&d| d as f64 / total as f64)
        .collect())
}

pub fn uniform_weights(k: usize) -> Vec<f64> {
    vec![1.0 / k as f64; k]
}

/// Combines uploads into the next global model.
///
/// Groups in the shared upload set become the weighted combination of the
/// uploads; all other groups keep their value from `prev_global`. The
/// combination is evaluated as `u_0 + Σ ω_k (u_k − u_0)`, which equals
/// `Σ ω_k u_k` for weights summing to one and returns `u_0` bit-exactly when
/// every upload carries the same values.
pub fn aggregate(
    uploads: &[RoundPayload],
    weights: &[f64],
    prev_global: &ParamVector,
) -> Result<ParamVector> {
    let first = uploads
        .first()
        .ok_or_else(|| Error::Protocol("no uploads to aggregate".into()))?;
    if weights.len() != uploads.len() {
        return Err(Error::LengthMismatch {
            expected: uploads.len(),
            actual: weights.len(),
        });
    }
    if uploads.iter().any(|u| u.groups != first.groups) {
        return Err(Error::Protocol(
            "uploads in one round carry different group sets".into(),
        ));
    }
    let sum: f64 = weights.iter().sum();
    if !((sum - 1.0).abs() <= 1e-9) {
        return Err(Error::Protocol(format!("aggregation weights sum to {sum}")));
    }
    for u in uploads {
        if !u.params.same_layout(prev_global) {
            return Err(Error::LayoutMismatch);
        }
    }

    let layout = prev_global.layout().clone();
    let mut out = prev_global.values().to_vec();
    for g in first.groups.iter() {
        let range = layout.group(g).range();
        let anchor = &first.params.values()[range.clone()];
        let dst = &mut out[range.clone()];
        dst.copy_from_slice(anchor);
        for (u, &w) in uploads.iter().zip(weights).skip(1) {
            for ((d, x), a) in dst.iter_mut().zip(&u.params.values()[range.clone()]).zip(anchor) {
                *d += w * (x - a);
            }
        }
    }
    ParamVector::new(out, layout)
}

#![allow(dead_code)]

pub mod msssim_reference;

use rand::Rng as _;
use semfed::channel::{ChannelConfig, ChannelRealization, Fading};
use semfed::model::{mse_loss, Model, ModelSpec};
use semfed::rng::{self, Stream};
use semfed::{Group, Image, ParamVector};

/// Random image and a partially correlated copy, so SSIM values spread
/// over the whole range.
pub fn random_pair(shape: (usize, usize, usize), seed: u64) -> (Image, Image) {
    let mut r = rng::stream(seed, Stream::Synthetic, &[1234]);
    let n = shape.0 * shape.1 * shape.2;
    let a: Vec<f64> = (0..n).map(|_| r.random::<f64>()).collect();
    let mix = r.random_range(0.0..1.0);
    let b: Vec<f64> = a
        .iter()
        .map(|&v| (mix * v + (1.0 - mix) * r.random::<f64>()).clamp(0.0, 1.0))
        .collect();
    (Image::new(shape, a).unwrap(), Image::new(shape, b).unwrap())
}

pub fn test_image(spec: &ModelSpec, seed: u64) -> Image {
    let mut r = rng::stream(seed, Stream::Synthetic, &[99]);
    let (c, h, w) = spec.image_shape;
    Image::new(spec.image_shape, (0..c * h * w).map(|_| r.random_range(0.1..0.9)).collect()).unwrap()
}

fn loss_at(model: &Model, values: &[f64], image: &Image, snr: f64, real: &ChannelRealization) -> f64 {
    let p = ParamVector::new(values.to_vec(), model.layout().clone()).unwrap();
    let (hat, _) = model.forward(&p, image, snr, real).unwrap();
    mse_loss(image, &hat).unwrap()
}

pub struct GradientCheck {
    /// Worst `|analytic − central FD| / max(|FD|, 1e-8)` per group.
    pub worst: [f64; 4],
    /// Euclidean norm of the analytic gradient per group.
    pub norm: [f64; 4],
}

impl GradientCheck {
    /// Every group receives gradient, so the comparison is not 0 vs 0.
    pub fn live(&self) -> bool {
        self.norm.iter().all(|&n| n > 1e-8)
    }
}

/// Compares every coordinate against central differences, with one fixed
/// channel realization at 5 dB.
pub fn gradient_check(spec: ModelSpec, fading: Fading, seed: u64) -> GradientCheck {
    let model = Model::new(spec.clone()).unwrap();
    let params = model.init_params(seed);
    let image = test_image(&spec, seed);
    let channel = ChannelConfig::new(5.0, fading).unwrap();
    let real = ChannelRealization::sample(spec.symbol_dim / 2, &channel, &mut rng::stream(seed, Stream::TrainChannel, &[7]));
    let (hat, trace) = model.forward(&params, &image, channel.snr_db, &real).unwrap();
    let grad = model.backward(&params, &trace, &image, &hat).unwrap();

    let step = 1e-5;
    let mut worst = [0.0f64; 4];
    let mut values = params.values().to_vec();
    for g in Group::ALL {
        for i in model.layout().group(g).range() {
            let orig = values[i];
            values[i] = orig + step;
            let up = loss_at(&model, &values, &image, channel.snr_db, &real);
            values[i] = orig - step;
            let down = loss_at(&model, &values, &image, channel.snr_db, &real);
            values[i] = orig;
            let fd = (up - down) / (2.0 * step);
            let rel = (grad.values()[i] - fd).abs() / fd.abs().max(1e-8);
            worst[g.index()] = worst[g.index()].max(rel);
        }
    }
    let norm = Group::ALL.map(|g| grad.group_values(g).iter().map(|v| v * v).sum::<f64>().sqrt());
    GradientCheck { worst, norm }
}

/// Checks on the first `count` seeds whose initialisation leaves no group
/// behind a dead ReLU layer.
pub fn live_gradient_checks(spec: ModelSpec, fading: Fading, count: usize) -> Vec<(u64, GradientCheck)> {
    let found: Vec<_> = (0..200)
        .map(|seed| (seed, gradient_check(spec.clone(), fading, seed)))
        .filter(|(_, c)| c.live())
        .take(count)
        .collect();
    assert_eq!(found.len(), count, "too few live initialisations for {fading}");
    found
}

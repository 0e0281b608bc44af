//! Compares reverse-mode gradients with central differences on the micro
//! model, one fixed channel draw per check.
//!
//! ```text
//! cargo run --example gradient_check
//! ```

use semfed::channel::{ChannelConfig, ChannelRealization, Fading};
use semfed::model::{mse_loss, Model, ModelSpec};
use semfed::rng::{self, Stream};
use semfed::{Group, Image, ParamVector};

fn main() {
    let spec = ModelSpec::micro();
    let model = Model::new(spec.clone()).unwrap();
    println!("micro model: {} parameters", model.param_count());
    for (g, n) in model.group_lengths() {
        println!("  {g:<13} {n}");
    }

    let image = Image::new(spec.image_shape, vec![0.2, 0.7, 0.4, 0.9]).unwrap();
    // some seeds leave a channel layer with every ReLU off, which makes the
    // upstream gradient exactly zero; seed 1 keeps all groups live
    let params = model.init_params(1);
    let channel = ChannelConfig::new(5.0, Fading::Rayleigh).unwrap();
    let real = ChannelRealization::sample(spec.symbol_dim / 2, &channel, &mut rng::stream(0, Stream::TrainChannel, &[]));
    let (hat, trace) = model.forward(&params, &image, channel.snr_db, &real).unwrap();
    let grad = model.backward(&params, &trace, &image, &hat).unwrap();

    let loss = |values: &[f64]| {
        let p = ParamVector::new(values.to_vec(), model.layout().clone()).unwrap();
        let (hat, _) = model.forward(&p, &image, channel.snr_db, &real).unwrap();
        mse_loss(&image, &hat).unwrap()
    };
    let h = 1e-5;
    let mut values = params.values().to_vec();
    println!("\n{:<13} {:>12} {:>14}", "group", "|grad|", "max rel error");
    for g in Group::ALL {
        let mut worst = 0.0f64;
        for i in model.layout().group(g).range() {
            let v = values[i];
            values[i] = v + h;
            let up = loss(&values);
            values[i] = v - h;
            let down = loss(&values);
            values[i] = v;
            let fd = (up - down) / (2.0 * h);
            worst = worst.max((grad.values()[i] - fd).abs() / fd.abs().max(1e-8));
        }
        let norm = grad.group_values(g).iter().map(|v| v * v).sum::<f64>().sqrt();
        println!("{:<13} {norm:>12.3e} {worst:>14.3e}", g.to_string());
    }
}

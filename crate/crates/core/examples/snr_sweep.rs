//! Trains at one SNR, then evaluates the global model across SNR values
//! with and without Rayleigh fading.
//!
//! ```text
//! cargo run --release --example snr_sweep [rounds]
//! ```

use semfed::channel::Fading;
use semfed::config::{DataSource, RunConfig};
use semfed::fl::{self, snr_sweep};
use semfed::{Model, ModelSpec};

fn main() {
    let rounds = std::env::args().nth(1).map_or(15, |s| s.parse().expect("rounds"));
    let cfg = RunConfig {
        global_rounds: rounds,
        lr: 2.0,
        model: ModelSpec::tiny(),
        data: DataSource::Synthetic { classes: 10, per_class: 60 },
        eval_samples: 50,
        eval_interval: rounds,
        ..RunConfig::default()
    };
    let data = fl::prepare_data(&cfg).unwrap();
    let out = fl::run_training(&cfg, &data).unwrap();
    let model = Model::new(cfg.model.clone()).unwrap();
    let snrs = [-5.0, 0.0, 5.0, 10.0, 15.0, 20.0];
    println!("trained {} rounds at {} dB ({})", rounds, cfg.channel.snr_db, cfg.channel.fading);
    println!("{:>6}  {:>9}  {:>9}  {:>10}", "snr", "fading", "psnr dB", "deep fades");
    for fading in [Fading::None, Fading::Rayleigh] {
        for (snr, s) in snr_sweep(&model, &out.global, &data.eval, &snrs, fading, cfg.seed).unwrap() {
            println!("{snr:>6.1}  {fading:>9}  {:>9.3}  {:>10}", s.psnr_db, s.deep_fades);
        }
    }
}

//! FedLol, FedAvg, FedProx and centralized training on the same split.
//!
//! ```text
//! cargo run --release --example strategy_comparison [rounds] [seed]
//! ```

use semfed::config::{DataSource, RunConfig, Strategy};
use semfed::fl;
use semfed::ModelSpec;

fn main() {
    let mut args = std::env::args().skip(1);
    let rounds = args.next().map_or(20, |s| s.parse().expect("rounds"));
    let seed = args.next().map_or(0, |s| s.parse().expect("seed"));
    let base = RunConfig {
        global_rounds: rounds,
        seed,
        lr: 2.0,
        model: ModelSpec::tiny(),
        data: DataSource::Synthetic { classes: 10, per_class: 60 },
        eval_samples: 50,
        eval_interval: rounds,
        ..RunConfig::default()
    };
    let data = fl::prepare_data(&base).unwrap();
    println!("{:<18} {:>9} {:>9} {:>11}", "strategy", "psnr dB", "ms-ssim", "traffic MB");
    for strategy in [Strategy::FedLol, Strategy::FedAvg, Strategy::FedProx, Strategy::Centralized] {
        let cfg = RunConfig { strategy, ..base.clone() };
        let out = fl::run_training(&cfg, &data).unwrap();
        let eval = out.final_eval.unwrap();
        println!(
            "{:<18} {:>9.3} {:>9} {:>11.2}",
            cfg.strategy_label(),
            eval.psnr_db,
            eval.msssim.map_or("n/a".into(), |m| format!("{m:.4}")),
            (out.ledger.total_down() + out.ledger.total_up()) as f64 / 1e6
        );
    }
}

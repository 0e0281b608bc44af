//! Trains the tiny model twice, with and without partial updates, and
//! compares reconstruction quality against traffic.
//!
//! ```text
//! cargo run --release --example partial_vs_full [rounds]
//! ```

use semfed::config::{DataSource, RunConfig};
use semfed::fl;
use semfed::ModelSpec;

fn main() {
    let rounds = std::env::args().nth(1).map_or(20, |s| s.parse().expect("rounds"));
    let base = RunConfig {
        global_rounds: rounds,
        lr: 2.0,
        model: ModelSpec::tiny(),
        data: DataSource::Synthetic { classes: 10, per_class: 60 },
        eval_samples: 50,
        eval_interval: 5,
        ..RunConfig::default()
    };
    let data = fl::prepare_data(&base).unwrap();
    println!("{} clients, sizes {:?}", base.num_clients, data.partition.sizes());

    for partial in [true, false] {
        let cfg = RunConfig { partial_update: partial, ..base.clone() };
        let out = fl::run_training(&cfg, &data).unwrap();
        println!("\n{}", cfg.strategy_label());
        for row in out.report.rows().iter().filter(|r| r.eval_psnr_db.is_some()) {
            println!(
                "  round {:>3}  loss {:.5}  psnr {:>6.2} dB  down {:>9} B  up {:>9} B",
                row.round,
                row.train_loss,
                row.eval_psnr_db.unwrap(),
                row.bytes_down,
                row.bytes_up
            );
        }
        let total = out.ledger.total_down() + out.ledger.total_up();
        println!("  total traffic {:.2} MB", total as f64 / 1e6);
    }
}

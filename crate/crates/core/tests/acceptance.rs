//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each and
//! exits non-zero if any fails. Criteria 5 and 6 train 12 desk-scale models
//! and take several minutes on one core.

mod common;

use std::time::Instant;

use rand::Rng as _;

use common::{live_gradient_checks, msssim_reference, random_pair};
use semfed::channel::{from_complex, to_complex, transmit, zf_equalize, ChannelConfig, Fading};
use semfed::config::{DataSource, RunConfig, Strategy};
use semfed::data::dirichlet_partition;
use semfed::fl::{self, fedlol_weights, ledger_summary, simulate_ledger};
use semfed::metrics::{ms_ssim, psnr};
use semfed::rng::{self, Stream};
use semfed::{Group, GroupLayout, Image, ModelSpec};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn ledger_reproduction() -> Outcome {
    let layout = GroupLayout::paper_sizes();
    let s = ledger_summary(&simulate_ledger(&layout, 100, 5, true, 10), &layout, 10);
    let pct = 100.0 * s.reduction;
    outcome((pct - 25.28).abs() <= 0.05, format!("reduction {pct:.4}% (target 25.28 ± 0.05)"))
}

fn fedlol_properties() -> Outcome {
    let mut r = rng::stream(2024, Stream::Synthetic, &[2]);
    let mut failures = 0;
    let mut worst_sum = 0.0f64;
    for _ in 0..10_000 {
        let k = r.random_range(2..=32usize);
        let losses: Vec<f64> = (0..k).map(|_| 10f64.powf(r.random_range(-3.0..3.0))).collect();
        let c = 10f64.powf(r.random_range(-4.0..4.0));
        let w = fedlol_weights(&losses).unwrap();
        let sum_err = (w.iter().sum::<f64>() - 1.0).abs();
        worst_sum = worst_sum.max(sum_err);
        let cap = 1.0 / (k - 1) as f64;
        let in_range = w.iter().all(|&x| x >= 0.0 && x <= cap + 1e-15);
        let anti = (0..k).all(|i| (0..k).all(|j| losses[i] >= losses[j] || w[i] > w[j]));
        let scaled: Vec<f64> = losses.iter().map(|l| l * c).collect();
        let invariant = fedlol_weights(&scaled).unwrap().iter().zip(&w).all(|(a, b)| (a - b).abs() <= 1e-9);
        if sum_err > 1e-9 || !in_range || !anti || !invariant {
            failures += 1;
        }
    }
    outcome(failures == 0, format!("10000 vectors, {failures} violations, max |Σω−1| {worst_sum:.1e}"))
}

fn gradient_oracle() -> Outcome {
    let mut worst = 0.0f64;
    let mut seeds = Vec::new();
    for fading in [Fading::None, Fading::Rayleigh] {
        for (seed, check) in live_gradient_checks(ModelSpec::micro(), fading, 3) {
            seeds.push(seed);
            for g in Group::ALL {
                worst = worst.max(check.worst[g.index()]);
            }
        }
    }
    outcome(
        worst < 1e-4,
        format!("max relative error {worst:.2e} over all 4 groups, AWGN and Rayleigh, seeds {seeds:?}"),
    )
}

fn channel_algebra() -> Outcome {
    let mut r = rng::stream(7, Stream::Synthetic, &[4]);
    let symbols: Vec<f64> = (0..2000).map(|_| r.random_range(-2.0..2.0)).collect();
    let x = to_complex(&symbols).unwrap();
    let mut worst = 0.0f64;
    for fading in [Fading::None, Fading::Rayleigh] {
        let tx = transmit(&x, &ChannelConfig::noiseless(fading), &mut r);
        let eq = zf_equalize(&tx.received, &tx.realization.gains).unwrap();
        let back = from_complex(&eq.symbols);
        for (a, b) in back.iter().zip(&symbols) {
            worst = worst.max((a - b).abs() / b.abs().max(1e-12));
        }
    }
    let zeros = to_complex(&vec![0.0; 200_000]).unwrap();
    let tx = transmit(&zeros, &ChannelConfig::new(0.0, Fading::None).unwrap(), &mut r);
    let power = tx.received.iter().map(|y| y.norm_sqr()).sum::<f64>() / tx.received.len() as f64;
    outcome(
        worst < 1e-9 && (power - 1.0).abs() < 0.02,
        format!("noiseless ZF rel err {worst:.1e}; noise power at 0 dB {power:.4} over 1e5 symbols"),
    )
}

fn desk_config(strategy: Strategy, partial: bool, seed: u64) -> RunConfig {
    RunConfig {
        num_clients: 10,
        global_rounds: 50,
        local_epochs: 3,
        update_interval: 5,
        lr: 2.0,
        batch_size: 16,
        strategy,
        partial_update: partial,
        seed,
        alpha: 0.5,
        model: ModelSpec::tiny(),
        data: DataSource::Synthetic { classes: 10, per_class: 200 },
        eval_samples: 100,
        eval_interval: 50,
        ..RunConfig::default()
    }
}

const SEEDS: [u64; 3] = [0, 1, 2];

/// Final PSNR per seed for (fedavg partial, fedavg full, fedlol partial, centralized).
fn desk_runs() -> [[f64; 3]; 4] {
    let variants = [
        (Strategy::FedAvg, true),
        (Strategy::FedAvg, false),
        (Strategy::FedLol, true),
        (Strategy::Centralized, true),
    ];
    let mut out = [[0.0; 3]; 4];
    for (s, &seed) in SEEDS.iter().enumerate() {
        let data = fl::prepare_data(&desk_config(Strategy::FedAvg, true, seed)).unwrap();
        for (v, &(strategy, partial)) in variants.iter().enumerate() {
            let cfg = desk_config(strategy, partial, seed);
            let run = fl::run_training(&cfg, &data).unwrap();
            out[v][s] = run.final_eval.unwrap().psnr_db;
            println!("      seed {seed} {:<16} final psnr {:.3} dB", cfg.strategy_label(), out[v][s]);
        }
    }
    out
}

fn mean(v: &[f64; 3]) -> f64 {
    v.iter().sum::<f64>() / 3.0
}

fn determinism() -> Outcome {
    let cfg = RunConfig {
        global_rounds: 4,
        local_epochs: 1,
        model: ModelSpec::tiny(),
        lr: 2.0,
        data: DataSource::Synthetic { classes: 10, per_class: 20 },
        eval_samples: 20,
        channel: ChannelConfig::new(5.0, Fading::Rayleigh).unwrap(),
        ..RunConfig::default()
    };
    let data = fl::prepare_data(&cfg).unwrap();
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| fl::run_training(&cfg, &data).unwrap().report.to_csv_string())
    };
    let a = run(1);
    let b = run(1);
    let c = run(4);
    outcome(a == b && a == c, format!("{} CSV bytes; repeat equal {}, 1 vs 4 threads equal {}", a.len(), a == b, a == c))
}

fn metric_oracles() -> Outcome {
    let zeros = Image::zeros((3, 8, 8));
    let p0 = psnr(&zeros, &Image::filled((3, 8, 8), 1.0), 1.0).unwrap();
    let p20 = psnr(&zeros, &Image::filled((3, 8, 8), 0.1), 1.0).unwrap();
    let psnr_ok = p0.abs() <= 1e-9 && (p20 - 20.0).abs() <= 1e-9;
    let shapes = [(1, 11, 11), (3, 16, 16), (1, 23, 30), (3, 32, 32), (1, 45, 50), (1, 88, 90), (1, 176, 180)];
    let mut worst = 0.0f64;
    for seed in 100..120u64 {
        let (a, b) = random_pair(shapes[seed as usize % shapes.len()], seed);
        let ours = ms_ssim(&a, &b).unwrap().value;
        let theirs = msssim_reference::ms_ssim(&msssim_reference::planes(&a), &msssim_reference::planes(&b));
        worst = worst.max((ours - theirs).abs());
    }
    outcome(
        psnr_ok && worst < 1e-4,
        format!("psnr {p0:.3e} dB / {p20:.12} dB; ms-ssim max |Δ| vs reference {worst:.2e} on 20 pairs"),
    )
}

fn partition_properties() -> Outcome {
    let labels: Vec<u16> = (0..10u16).flat_map(|c| std::iter::repeat_n(c, 200)).collect();
    let alphas = [100.0, 10.0, 1.0, 0.5, 0.1];
    let mut conserved = true;
    let mut het = Vec::new();
    for &alpha in &alphas {
        let mut total = 0.0;
        for seed in 0..10 {
            let p = dirichlet_partition(&labels, 10, 10, alpha, &mut rng::stream(seed, Stream::Partition, &[])).unwrap();
            let hist = p.class_histogram(&labels, 10);
            conserved &= (0..10).all(|c| hist.iter().map(|row| row[c]).sum::<usize>() == 200);
            let mut all: Vec<usize> = p.assignment.concat();
            all.sort_unstable();
            conserved &= all == (0..labels.len()).collect::<Vec<_>>();
            total += p.heterogeneity(&labels, 10);
        }
        het.push(total / 10.0);
    }
    let increasing = het.windows(2).all(|w| w[1] > w[0]);
    let shown: Vec<String> = alphas.iter().zip(&het).map(|(a, h)| format!("α={a}:{h:.3}")).collect();
    outcome(conserved && increasing, format!("conserved {conserved}; mean TV {}", shown.join(" ")))
}

fn main() {
    // `cargo test` forwards harness flags; honour name filters and `--skip`
    // so that filtered runs of the workspace do not pay for training.
    let args: Vec<String> = std::env::args().skip(1).collect();
    let skipped = args.windows(2).any(|w| w[0] == "--skip" && "acceptance".contains(w[1].as_str()));
    let filtered_out = args
        .iter()
        .enumerate()
        .any(|(i, a)| !a.starts_with('-') && (i == 0 || args[i - 1] != "--skip") && !"acceptance".contains(a.as_str()));
    if skipped || filtered_out {
        return;
    }
    let started = Instant::now();
    let mut results: Vec<(u32, &str, Outcome)> = vec![
        (1, "ledger reproduction", ledger_reproduction()),
        (2, "fedlol weight properties", fedlol_properties()),
        (3, "gradient oracle", gradient_oracle()),
        (4, "channel algebra", channel_algebra()),
    ];

    println!("    training desk-scale runs for criteria 5 and 6 (seeds {SEEDS:?})");
    let psnr = desk_runs();
    let (fa_partial, fa_full, lol, central) = (mean(&psnr[0]), mean(&psnr[1]), mean(&psnr[2]), mean(&psnr[3]));
    let gap = fa_partial - fa_full;
    results.push((
        5,
        "partial ≈ full update",
        outcome(gap.abs() <= 0.5, format!("fedavg partial {fa_partial:.3} dB, full {fa_full:.3} dB, gap {gap:+.3} dB (limit 0.5)")),
    ));
    results.push((
        6,
        "strategy ordering",
        outcome(
            central >= lol && lol >= fa_partial - 0.1,
            format!("centralized {central:.3} ≥ fedlol {lol:.3} ≥ fedavg {fa_partial:.3} − 0.1 dB"),
        ),
    ));
    results.push((7, "determinism", determinism()));
    results.push((8, "metric oracles", metric_oracles()));
    results.push((9, "partition properties", partition_properties()));

    results.sort_by_key(|r| r.0);
    let mut failed = 0;
    for (id, name, o) in &results {
        println!("{} criterion {id} {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        failed += usize::from(!o.pass);
    }
    println!("acceptance: {} passed, {failed} failed in {:.1?}", results.len() - failed, started.elapsed());
    if failed > 0 {
        std::process::exit(1);
    }
}

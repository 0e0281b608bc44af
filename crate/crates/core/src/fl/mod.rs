//! Federated training: update schedule, aggregation, client training and
//! traffic accounting.

mod aggregate;
mod client;
mod ledger;
mod schedule;
mod training;

pub use aggregate::{aggregate, fedavg_weights, fedlol_weights, uniform_weights, RoundPayload};
pub use client::{evaluate, fedprox_local_step, local_train, ClientState, EvalSummary, LocalSettings, LocalUpdate};
pub use ledger::{ledger_summary, simulate_ledger, CommLedger, LedgerSummary, RoundTraffic};
pub use schedule::{broadcast_groups, upload_groups};
pub use training::{partition_for, prepare_data, run_training, snr_sweep, FederatedData, TrainingOutcome};

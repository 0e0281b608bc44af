//! Deterministic simulator for federated training of a semantic-communication
//! image autoencoder over a noisy wireless channel.
//!
//! The model splits into four parameter groups (semantic encoder, channel
//! encoder, channel decoder, semantic decoder). Clients train locally on
//! non-IID shards, the server aggregates with loss-based (FedLol), sample-based
//! (FedAvg) or proximal (FedProx) weighting, and channel groups can be
//! exchanged less often than semantic groups to save traffic.
//!
//! ```
//! use semfed::fl::{ledger_summary, simulate_ledger};
//! use semfed::params::GroupLayout;
//!
//! let layout = GroupLayout::paper_sizes();
//! let s = ledger_summary(&simulate_ledger(&layout, 100, 5, true, 10), &layout, 10);
//! assert!((100.0 * s.reduction - 25.28).abs() < 0.01);
//! ```

pub mod channel;
pub mod checkpoint;
pub mod cli;
pub mod config;
pub mod data;
pub mod error;
pub mod fl;
pub mod metrics;
pub mod model;
pub mod params;
pub mod report;
pub mod rng;
pub mod tensor;

pub use config::{RunConfig, Strategy};
pub use error::{Error, Result};
pub use model::{Model, ModelSpec};
pub use params::{Group, GroupLayout, GroupSet, ParamVector};
pub use tensor::Image;

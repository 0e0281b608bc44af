//! Byte-exact accounting of model traffic.

use std::fmt;

use crate::params::{GroupLayout, GroupSet};

use super::schedule::{broadcast_groups, upload_groups};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RoundTraffic {
    pub round: u32,
    pub down: u64,
    pub up: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CommLedger {
    rounds: Vec<RoundTraffic>,
    total_down: u64,
    total_up: u64,
}

impl CommLedger {
    pub fn new() -> Self {
        Self::default()
    }

    /// Records one round. Called once per round at the aggregation barrier.
    pub fn record(&mut self, round: u32, down: u64, up: u64) {
        self.rounds.push(RoundTraffic { round, down, up });
        self.total_down += down;
        self.total_up += up;
    }

    pub fn rounds(&self) -> &[RoundTraffic] {
        &self.rounds
    }

    pub fn total_down(&self) -> u64 {
        self.total_down
    }

    pub fn total_up(&self) -> u64 {
        self.total_up
    }
}

/// Traffic of `rounds` rounds of the update schedule alone, with every
/// client receiving and sending one payload per round.
pub fn simulate_ledger(
    layout: &GroupLayout,
    rounds: u32,
    interval: u32,
    partial_update: bool,
    num_clients: usize,
) -> CommLedger {
    let k = num_clients as u64;
    let mut ledger = CommLedger::new();
    for t in 1..=rounds {
        let down = layout.byte_size(broadcast_groups(t, interval, partial_update));
        let up = layout.byte_size(upload_groups(t, interval, partial_update));
        ledger.record(t, k * down, k * up);
    }
    ledger
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LedgerSummary {
    pub rounds: usize,
    pub total_down: u64,
    pub total_up: u64,
    /// Mean bytes per round, per client, per direction.
    pub mean_per_client: f64,
    /// Same quantity when every transfer carries the whole model.
    pub full_per_client: f64,
    /// `1 − mean / full`.
    pub reduction: f64,
}

pub fn ledger_summary(ledger: &CommLedger, layout: &GroupLayout, num_clients: usize) -> LedgerSummary {
    let rounds = ledger.rounds().len();
    let transfers = (2 * rounds * num_clients) as f64;
    let mean = if transfers > 0.0 {
        (ledger.total_down() + ledger.total_up()) as f64 / transfers
    } else {
        0.0
    };
    let full = layout.byte_size(GroupSet::ALL) as f64;
    LedgerSummary {
        rounds,
        total_down: ledger.total_down(),
        total_up: ledger.total_up(),
        mean_per_client: mean,
        full_per_client: full,
        reduction: if full > 0.0 && rounds > 0 { 1.0 - mean / full } else { 0.0 },
    }
}

impl fmt::Display for LedgerSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        const MB: f64 = 1e6;
        writeln!(f, "rounds                        {}", self.rounds)?;
        writeln!(f, "full update   MB/round/client {:.3}", self.full_per_client / MB)?;
        writeln!(f, "this schedule MB/round/client {:.3}", self.mean_per_client / MB)?;
        writeln!(f, "total downlink MB             {:.2}", self.total_down as f64 / MB)?;
        writeln!(f, "total uplink MB               {:.2}", self.total_up as f64 / MB)?;
        write!(f, "reduction                     {:.2}%", 100.0 * self.reduction)
    }
}

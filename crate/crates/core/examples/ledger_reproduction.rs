//! Traffic of the partial-update schedule for the published module sizes.
//!
//! ```text
//! cargo run --example ledger_reproduction
//! ```

use semfed::fl::{ledger_summary, simulate_ledger};
use semfed::GroupLayout;

fn main() {
    let layout = GroupLayout::paper_sizes();
    for g in layout.groups() {
        println!("{:<13} {:>8.2} MB", g.group.to_string(), g.bytes() as f64 / 1e6);
    }
    println!();
    println!("{:>4}  {:>12}  {:>9}", "P", "MB/round", "saving");
    for p in [1, 2, 3, 4, 5, 8, 10, 20, 50, 100] {
        let s = ledger_summary(&simulate_ledger(&layout, 100, p, true, 10), &layout, 10);
        println!("{p:>4}  {:>12.3}  {:>8.2}%", s.mean_per_client / 1e6, 100.0 * s.reduction);
    }
    println!();
    let s = ledger_summary(&simulate_ledger(&layout, 100, 5, true, 10), &layout, 10);
    println!("{s}");
}

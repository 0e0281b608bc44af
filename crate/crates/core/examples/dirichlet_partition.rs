//! Non-IID client splits for several concentrations.
//!
//! ```text
//! cargo run --example dirichlet_partition
//! ```

use semfed::data::dirichlet_partition;
use semfed::rng::{self, Stream};

fn main() {
    let classes = 10;
    let labels: Vec<u16> = (0..classes as u16).flat_map(|c| std::iter::repeat_n(c, 200)).collect();
    for alpha in [100.0, 1.0, 0.5, 0.1] {
        let mut r = rng::stream(0, Stream::Partition, &[]);
        let part = dirichlet_partition(&labels, classes, 10, alpha, &mut r).unwrap();
        println!("alpha {alpha}  heterogeneity {:.3}", part.heterogeneity(&labels, classes));
        println!("  client  per-class counts                              total");
        for (k, row) in part.class_histogram(&labels, classes).iter().enumerate() {
            let cells: Vec<String> = row.iter().map(|n| format!("{n:>4}")).collect();
            println!("  {k:>6} {}  {:>5}", cells.join(""), row.iter().sum::<usize>());
        }
        println!();
    }
}

//! Loss-based aggregation weights next to sample-share weights.
//!
//! ```text
//! cargo run --example fedlol_weights
//! ```

use semfed::fl::{fedavg_weights, fedlol_weights};

fn show(name: &str, w: &[f64]) {
    let cells: Vec<String> = w.iter().map(|v| format!("{v:.4}")).collect();
    println!("{name:<8} [{}]", cells.join(", "));
}

fn main() {
    let losses = [0.012, 0.020, 0.031, 0.008, 0.055];
    let samples = [310, 120, 45, 260, 90];
    println!("losses   {losses:?}");
    println!("samples  {samples:?}");
    show("fedlol", &fedlol_weights(&losses).unwrap());
    show("fedavg", &fedavg_weights(&samples).unwrap());

    // rescaling every loss leaves the weights alone
    let scaled: Vec<f64> = losses.iter().map(|l| l * 1000.0).collect();
    show("×1000", &fedlol_weights(&scaled).unwrap());

    // equal losses give uniform weights; one outlier is pushed towards zero
    show("equal", &fedlol_weights(&[0.3; 4]).unwrap());
    show("outlier", &fedlol_weights(&[0.01, 0.01, 0.01, 10.0]).unwrap());
    println!("bound    1/(K-1) = {:.4} for K = 4", 1.0 / 3.0);

    match fedlol_weights(&[0.1, 0.0]) {
        Ok(_) => unreachable!(),
        Err(e) => println!("zero loss: {e}"),
    }
}

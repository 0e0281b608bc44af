//! PSNR and MS-SSIM of a synthetic image under increasing noise.
//!
//! ```text
//! cargo run --example image_metrics
//! ```

use rand::Rng as _;
use rand_distr::StandardNormal;

use semfed::data::synthetic_dataset;
use semfed::metrics::{ms_ssim, psnr_capped};
use semfed::rng::{self, Stream};
use semfed::Image;

fn main() {
    let data = synthetic_dataset((3, 64, 64), 1, 1, 0).unwrap();
    let clean = &data.images[0];
    let mut r = rng::stream(0, Stream::EvalChannel, &[]);
    println!("{:>7}  {:>9}  {:>8}  {:>6}", "sigma", "psnr dB", "ms-ssim", "scales");
    for sigma in [0.0, 0.01, 0.03, 0.1, 0.3] {
        let noisy: Vec<f64> = clean
            .data()
            .iter()
            .map(|v| (v + sigma * r.sample::<f64, _>(StandardNormal)).clamp(0.0, 1.0))
            .collect();
        let noisy = Image::new(clean.shape(), noisy).unwrap();
        let m = ms_ssim(clean, &noisy).unwrap();
        println!(
            "{sigma:>7.2}  {:>9.3}  {:>8.4}  {:>6}",
            psnr_capped(clean, &noisy, 1.0).unwrap(),
            m.value,
            m.scales
        );
    }
    let inverted = Image::new(clean.shape(), clean.data().iter().map(|v| 1.0 - v).collect()).unwrap();
    println!("\ninverted image: ms-ssim {:.4}", ms_ssim(clean, &inverted).unwrap().value);
    println!("64x64 fits {} of 5 scales; weights are renormalised", ms_ssim(clean, clean).unwrap().scales);
}

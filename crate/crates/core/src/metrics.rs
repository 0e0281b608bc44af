//! Reconstruction quality metrics.

use crate::error::{Error, Result};
use crate::tensor::Image;

/// Value written to reports when two images match exactly.
pub const PSNR_CAP_DB: f64 = 99.0;

/// Multi-scale weights for five dyadic scales.
pub const MS_SSIM_WEIGHTS: [f64; 5] = [0.0448, 0.2856, 0.3001, 0.2363, 0.1333];
pub const SSIM_WINDOW: usize = 11;
pub const SSIM_SIGMA: f64 = 1.5;
const K1: f64 = 0.01;
const K2: f64 = 0.03;

/// Peak signal-to-noise ratio in dB; `+∞` when the images are identical.
pub fn psnr(image: &Image, image_hat: &Image, max_val: f64) -> Result<f64> {
    image_hat.check_shape(image.shape())?;
    if !(max_val > 0.0) {
        return Err(Error::Metric(format!("max_val must be positive, got {max_val}")));
    }
    let mse = crate::model::mse_loss(image, image_hat)?;
    if mse == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (max_val * max_val / mse).log10())
}

/// PSNR with exact matches reported as [`PSNR_CAP_DB`].
pub fn psnr_capped(image: &Image, image_hat: &Image, max_val: f64) -> Result<f64> {
    psnr(image, image_hat, max_val).map(|db| db.min(PSNR_CAP_DB))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MsSsim {
    pub value: f64,
    /// Scales actually used.
    pub scales: usize,
}

impl MsSsim {
    /// Fewer than five scales fit the image, so weights were renormalised.
    pub fn reduced(&self) -> bool {
        self.scales < MS_SSIM_WEIGHTS.len()
    }
}

/// Largest usable scale count for a `height × width` plane.
pub fn ms_ssim_scales(height: usize, width: usize) -> usize {
    let side = height.min(width);
    (1..=MS_SSIM_WEIGHTS.len())
        .take_while(|&s| side >= SSIM_WINDOW << (s - 1))
        .last()
        .unwrap_or(0)
}

pub(crate) fn gaussian_window() -> [f64; SSIM_WINDOW] {
    let mut k = [0.0; SSIM_WINDOW];
    let c = (SSIM_WINDOW / 2) as f64;
    for (i, v) in k.iter_mut().enumerate() {
        let d = i as f64 - c;
        *v = (-d * d / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp();
    }
    let sum: f64 = k.iter().sum();
    k.iter_mut().for_each(|v| *v /= sum);
    k
}

/// Valid-mode separable filtering of a `h × w` plane.
fn filter(plane: &[f64], h: usize, w: usize, k: &[f64; SSIM_WINDOW]) -> Vec<f64> {
    let n = SSIM_WINDOW;
    let (oh, ow) = (h - n + 1, w - n + 1);
    let mut rows = vec![0.0; h * ow];
    for y in 0..h {
        for x in 0..ow {
            rows[y * ow + x] = (0..n).map(|i| k[i] * plane[y * w + x + i]).sum();
        }
    }
    let mut out = vec![0.0; oh * ow];
    for y in 0..oh {
        for x in 0..ow {
            out[y * ow + x] = (0..n).map(|i| k[i] * rows[(y + i) * ow + x]).sum();
        }
    }
    out
}

/// Mean SSIM and mean contrast-structure term of one plane.
fn ssim_cs(a: &[f64], b: &[f64], h: usize, w: usize, k: &[f64; SSIM_WINDOW]) -> (f64, f64) {
    let c1 = (K1 * 1.0) * (K1 * 1.0);
    let c2 = (K2 * 1.0) * (K2 * 1.0);
    let aa: Vec<f64> = a.iter().map(|v| v * v).collect();
    let bb: Vec<f64> = b.iter().map(|v| v * v).collect();
    let ab: Vec<f64> = a.iter().zip(b).map(|(x, y)| x * y).collect();
    let mu_a = filter(a, h, w, k);
    let mu_b = filter(b, h, w, k);
    let e_aa = filter(&aa, h, w, k);
    let e_bb = filter(&bb, h, w, k);
    let e_ab = filter(&ab, h, w, k);
    let n = mu_a.len() as f64;
    let (mut ssim, mut cs) = (0.0, 0.0);
    for i in 0..mu_a.len() {
        let (ma, mb) = (mu_a[i], mu_b[i]);
        let var_a = e_aa[i] - ma * ma;
        let var_b = e_bb[i] - mb * mb;
        let cov = e_ab[i] - ma * mb;
        let cs_i = (2.0 * cov + c2) / (var_a + var_b + c2);
        let l_i = (2.0 * ma * mb + c1) / (ma * ma + mb * mb + c1);
        ssim += l_i * cs_i;
        cs += cs_i;
    }
    (ssim / n, cs / n)
}

/// 2×2 average pooling; a trailing odd row or column is dropped.
fn downsample(plane: &[f64], h: usize, w: usize) -> (Vec<f64>, usize, usize) {
    let (oh, ow) = (h / 2, w / 2);
    let mut out = vec![0.0; oh * ow];
    for y in 0..oh {
        for x in 0..ow {
            let i = 2 * y * w + 2 * x;
            out[y * ow + x] = 0.25 * (plane[i] + plane[i + 1] + plane[i + w] + plane[i + w + 1]);
        }
    }
    (out, oh, ow)
}

/// Multi-scale SSIM for images with unit dynamic range, averaged over
/// channels. Images too small for five scales use as many scales as fit,
/// with the leading weights renormalised to sum to one.
pub fn ms_ssim(image: &Image, image_hat: &Image) -> Result<MsSsim> {
    image_hat.check_shape(image.shape())?;
    let (c, h, w) = image.shape();
    let scales = ms_ssim_scales(h, w);
    if scales == 0 {
        return Err(Error::Metric(format!(
            "{h}×{w} image is smaller than the {SSIM_WINDOW}×{SSIM_WINDOW} window"
        )));
    }
    let weight_sum: f64 = MS_SSIM_WEIGHTS[..scales].iter().sum();
    let weights: Vec<f64> = MS_SSIM_WEIGHTS[..scales].iter().map(|v| v / weight_sum).collect();
    let k = gaussian_window();

    let mut total = 0.0;
    for ch in 0..c {
        let mut a = image.plane(ch).to_vec();
        let mut b = image_hat.plane(ch).to_vec();
        let (mut ph, mut pw) = (h, w);
        let mut value = 1.0;
        for (level, &wt) in weights.iter().enumerate() {
            let (ssim, cs) = ssim_cs(&a, &b, ph, pw, &k);
            let term = if level + 1 == scales { ssim } else { cs };
            value *= term.max(0.0).powf(wt);
            if level + 1 < scales {
                let (na, nh, nw) = downsample(&a, ph, pw);
                b = downsample(&b, ph, pw).0;
                a = na;
                (ph, pw) = (nh, nw);
            }
        }
        total += value;
    }
    Ok(MsSsim {
        value: total / c as f64,
        scales,
    })
}

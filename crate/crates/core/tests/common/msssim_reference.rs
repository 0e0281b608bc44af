//! Straightforward MS-SSIM: full 11×11 Gaussian window, local statistics
//! from centred second moments, no separable filtering.

use semfed::Image;

const WEIGHTS: [f64; 5] = [0.0448, 0.2856, 0.3001, 0.2363, 0.1333];

fn window() -> Vec<Vec<f64>> {
    let mut w = vec![vec![0.0; 11]; 11];
    let mut sum = 0.0;
    for (y, row) in w.iter_mut().enumerate() {
        for (x, v) in row.iter_mut().enumerate() {
            let (dy, dx) = (y as f64 - 5.0, x as f64 - 5.0);
            *v = (-(dx * dx + dy * dy) / (2.0 * 1.5 * 1.5)).exp();
            sum += *v;
        }
    }
    for row in &mut w {
        for v in row {
            *v /= sum;
        }
    }
    w
}

fn stats(a: &[Vec<f64>], b: &[Vec<f64>]) -> (f64, f64) {
    let win = window();
    let (h, w) = (a.len(), a[0].len());
    let (c1, c2) = (0.01f64.powi(2), 0.03f64.powi(2));
    let mut ssim = 0.0;
    let mut cs = 0.0;
    let mut count = 0.0;
    for y in 0..=h - 11 {
        for x in 0..=w - 11 {
            let (mut ma, mut mb) = (0.0, 0.0);
            for i in 0..11 {
                for j in 0..11 {
                    ma += win[i][j] * a[y + i][x + j];
                    mb += win[i][j] * b[y + i][x + j];
                }
            }
            let (mut va, mut vb, mut cov) = (0.0, 0.0, 0.0);
            for i in 0..11 {
                for j in 0..11 {
                    let da = a[y + i][x + j] - ma;
                    let db = b[y + i][x + j] - mb;
                    va += win[i][j] * da * da;
                    vb += win[i][j] * db * db;
                    cov += win[i][j] * da * db;
                }
            }
            let c = (2.0 * cov + c2) / (va + vb + c2);
            let l = (2.0 * ma * mb + c1) / (ma * ma + mb * mb + c1);
            ssim += l * c;
            cs += c;
            count += 1.0;
        }
    }
    (ssim / count, cs / count)
}

fn half(p: &[Vec<f64>]) -> Vec<Vec<f64>> {
    (0..p.len() / 2)
        .map(|y| {
            (0..p[0].len() / 2)
                .map(|x| (p[2 * y][2 * x] + p[2 * y][2 * x + 1] + p[2 * y + 1][2 * x] + p[2 * y + 1][2 * x + 1]) / 4.0)
                .collect()
        })
        .collect()
}

pub fn ms_ssim(a: &[Vec<Vec<f64>>], b: &[Vec<Vec<f64>>]) -> f64 {
    let side = a[0].len().min(a[0][0].len());
    let mut scales = 0;
    while scales < 5 && side >= 11 << scales {
        scales += 1;
    }
    let norm: f64 = WEIGHTS[..scales].iter().sum();
    let mut total = 0.0;
    for (pa, pb) in a.iter().zip(b) {
        let (mut pa, mut pb) = (pa.clone(), pb.clone());
        let mut v = 1.0;
        for s in 0..scales {
            let (ssim, cs) = stats(&pa, &pb);
            let term = if s + 1 == scales { ssim } else { cs };
            v *= term.max(0.0).powf(WEIGHTS[s] / norm);
            pa = half(&pa);
            pb = half(&pb);
        }
        total += v;
    }
    total / a.len() as f64
}

pub fn planes(img: &Image) -> Vec<Vec<Vec<f64>>> {
    let (c, h, w) = img.shape();
    (0..c)
        .map(|ch| (0..h).map(|y| img.plane(ch)[y * w..(y + 1) * w].to_vec()).collect())
        .collect()
}

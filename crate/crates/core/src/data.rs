//! Datasets, non-IID client partitioning and mini-batch iteration.

use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};

use crate::error::{Error, Result};
use crate::rng::{self, Stream};
use crate::tensor::{Image, Shape};

pub const PACKED_MAGIC: &[u8; 4] = b"FSEM";

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub images: Vec<Image>,
    pub labels: Vec<u16>,
    pub class_count: usize,
}

impl Dataset {
    pub fn new(images: Vec<Image>, labels: Vec<u16>, class_count: usize) -> Result<Self> {
        if images.len() != labels.len() {
            return Err(Error::LengthMismatch {
                expected: images.len(),
                actual: labels.len(),
            });
        }
        if let Some(first) = images.first() {
            for (i, img) in images.iter().enumerate() {
                if img.shape() != first.shape() {
                    return Err(Error::Ingestion {
                        record: format!("record {i}"),
                        reason: format!("shape {:?} differs from {:?}", img.shape(), first.shape()),
                    });
                }
            }
        }
        if let Some(&bad) = labels.iter().find(|&&l| usize::from(l) >= class_count) {
            return Err(Error::Ingestion {
                record: "labels".into(),
                reason: format!("label {bad} not below class count {class_count}"),
            });
        }
        Ok(Dataset {
            images,
            labels,
            class_count,
        })
    }

    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    pub fn shape(&self) -> Option<Shape> {
        self.images.first().map(Image::shape)
    }

    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            images: indices.iter().map(|&i| self.images[i].clone()).collect(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            class_count: self.class_count,
        }
    }

    /// Splits off `eval_count` samples chosen by a seeded shuffle. Both halves
    /// keep the original relative order.
    pub fn split_holdout(&self, eval_count: usize, seed: u64) -> Result<(Dataset, Dataset)> {
        if eval_count >= self.len() {
            return Err(Error::Config(format!(
                "holdout of {eval_count} leaves no training data out of {}",
                self.len()
            )));
        }
        let mut order: Vec<usize> = (0..self.len()).collect();
        order.shuffle(&mut rng::stream(seed, Stream::Holdout, &[]));
        let mut eval: Vec<usize> = order[..eval_count].to_vec();
        let mut train: Vec<usize> = order[eval_count..].to_vec();
        eval.sort_unstable();
        train.sort_unstable();
        Ok((self.subset(&train), self.subset(&eval)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DatasetFormat {
    /// Class-named subdirectories of 8-bit image files.
    RawDir,
    /// `FSEM` header, u8 CHW pixel records, then u16 labels.
    Packed,
}

impl FromStr for DatasetFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "raw-dir" => Ok(DatasetFormat::RawDir),
            "packed" | "packed-binary" => Ok(DatasetFormat::Packed),
            other => Err(Error::Config(format!("unknown dataset format `{other}`"))),
        }
    }
}

pub fn load_dataset(path: &Path, format: DatasetFormat) -> Result<Dataset> {
    match format {
        DatasetFormat::RawDir => load_raw_dir(path),
        DatasetFormat::Packed => load_packed(path),
    }
}

fn ingestion(path: &Path, reason: impl ToString) -> Error {
    Error::Ingestion {
        record: path.display().to_string(),
        reason: reason.to_string(),
    }
}

fn sorted_entries(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut entries = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| ingestion(dir, e))? {
        let path = entry.map_err(|e| ingestion(dir, e))?.path();
        let hidden = path
            .file_name()
            .and_then(|n| n.to_str())
            .is_some_and(|n| n.starts_with('.'));
        if !hidden {
            entries.push(path);
        }
    }
    entries.sort();
    Ok(entries)
}

fn decode_image(path: &Path) -> Result<Image> {
    let img = image::open(path).map_err(|e| ingestion(path, e))?;
    let (w, h) = (img.width() as usize, img.height() as usize);
    if img.color().channel_count() <= 2 {
        let gray = img.to_luma8();
        Image::from_u8((1, h, w), gray.as_raw())
    } else {
        let rgb = img.to_rgb8();
        let mut chw = vec![0u8; 3 * h * w];
        for (i, px) in rgb.pixels().enumerate() {
            for c in 0..3 {
                chw[c * h * w + i] = px.0[c];
            }
        }
        Image::from_u8((3, h, w), &chw)
    }
}

fn load_raw_dir(root: &Path) -> Result<Dataset> {
    let class_dirs: Vec<PathBuf> = sorted_entries(root)?
        .into_iter()
        .filter(|p| p.is_dir())
        .collect();
    if class_dirs.is_empty() {
        return Err(ingestion(root, "no class subdirectories"));
    }
    if class_dirs.len() > usize::from(u16::MAX) {
        return Err(ingestion(root, "too many classes"));
    }
    let mut images = Vec::new();
    let mut labels = Vec::new();
    let mut shape: Option<Shape> = None;
    for (label, dir) in class_dirs.iter().enumerate() {
        for file in sorted_entries(dir)?.into_iter().filter(|p| p.is_file()) {
            let img = decode_image(&file)?;
            match shape {
                None => shape = Some(img.shape()),
                Some(s) if s != img.shape() => {
                    return Err(ingestion(
                        &file,
                        format!("shape {:?} differs from {:?}", img.shape(), s),
                    ))
                }
                Some(_) => {}
            }
            images.push(img);
            labels.push(label as u16);
        }
    }
    if images.is_empty() {
        return Err(ingestion(root, "no image files"));
    }
    Dataset::new(images, labels, class_dirs.len())
}

fn read_u32(buf: &[u8], at: usize) -> u32 {
    u32::from_le_bytes(buf[at..at + 4].try_into().expect("4 bytes"))
}

fn load_packed(path: &Path) -> Result<Dataset> {
    let mut bytes = Vec::new();
    fs::File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|e| ingestion(path, e))?;
    if bytes.len() < 20 || &bytes[..4] != PACKED_MAGIC {
        return Err(ingestion(path, "missing FSEM header"));
    }
    let count = read_u32(&bytes, 4) as usize;
    let shape = (
        read_u32(&bytes, 8) as usize,
        read_u32(&bytes, 12) as usize,
        read_u32(&bytes, 16) as usize,
    );
    let record = shape.0 * shape.1 * shape.2;
    if count == 0 || record == 0 {
        return Err(ingestion(path, "empty dataset"));
    }
    let pixels_end = 20 + count * record;
    let expected = pixels_end + 2 * count;
    if bytes.len() != expected {
        let short = (bytes.len().saturating_sub(20)) / record.max(1);
        return Err(Error::Ingestion {
            record: format!("{} record {}", path.display(), short.min(count)),
            reason: format!("file has {} bytes, header implies {expected}", bytes.len()),
        });
    }
    let images = bytes[20..pixels_end]
        .chunks_exact(record)
        .map(|px| Image::from_u8(shape, px))
        .collect::<Result<Vec<_>>>()?;
    let labels: Vec<u16> = bytes[pixels_end..]
        .chunks_exact(2)
        .map(|b| u16::from_le_bytes([b[0], b[1]]))
        .collect();
    let class_count = labels.iter().copied().max().map_or(0, usize::from) + 1;
    Dataset::new(images, labels, class_count)
}

/// Writes `dataset` in the packed format, quantising pixels to 8 bits.
pub fn write_packed(path: &Path, dataset: &Dataset) -> Result<()> {
    let shape = dataset
        .shape()
        .ok_or_else(|| Error::Config("cannot pack an empty dataset".into()))?;
    let mut out = Vec::with_capacity(20 + dataset.len() * (shape.0 * shape.1 * shape.2 + 2));
    out.extend_from_slice(PACKED_MAGIC);
    for v in [dataset.len(), shape.0, shape.1, shape.2] {
        out.extend_from_slice(&(v as u32).to_le_bytes());
    }
    for img in &dataset.images {
        out.extend(img.data().iter().map(|v| (v.clamp(0.0, 1.0) * 255.0).round() as u8));
    }
    for l in &dataset.labels {
        out.extend_from_slice(&l.to_le_bytes());
    }
    fs::File::create(path)?.write_all(&out)?;
    Ok(())
}

/// Procedural stand-in for a small natural-image corpus: every class is an
/// oriented colour grating with its own base colour, frequency and angle;
/// samples vary in phase, contrast and pixel noise.
///
/// Class appearance does not depend on `seed`, so train and evaluation sets
/// drawn with different seeds share their classes.
pub fn synthetic_dataset(
    shape: Shape,
    class_count: usize,
    per_class: usize,
    seed: u64,
) -> Result<Dataset> {
    let (c, h, w) = shape;
    let mut images = Vec::with_capacity(class_count * per_class);
    let mut labels = Vec::with_capacity(class_count * per_class);
    for class in 0..class_count {
        let mut look = rng::stream(0xC1A55, Stream::Synthetic, &[class as u64]);
        let base: Vec<f64> = (0..c).map(|_| look.random_range(0.2..0.8)).collect();
        let amp: Vec<f64> = (0..c).map(|_| look.random_range(0.05..0.25)).collect();
        let freq = look.random_range(0.5..3.0);
        let angle = look.random_range(0.0..std::f64::consts::PI);
        let (fx, fy) = (freq * angle.cos(), freq * angle.sin());

        let mut rng = rng::stream(seed, Stream::Synthetic, &[class as u64]);
        for _ in 0..per_class {
            let phase = rng.random_range(0.0..std::f64::consts::TAU);
            let contrast = rng.random_range(0.7..1.3);
            let jitter: Vec<f64> = (0..c).map(|_| rng.random_range(-0.05..0.05)).collect();
            let mut data = Vec::with_capacity(c * h * w);
            for ch in 0..c {
                for y in 0..h {
                    for x in 0..w {
                        let t = std::f64::consts::TAU * (fx * x as f64 / w as f64 + fy * y as f64 / h as f64)
                            + phase;
                        let noise: f64 = rng.sample(StandardNormal);
                        let v = base[ch] + jitter[ch] + contrast * amp[ch] * t.sin() + 0.02 * noise;
                        data.push(v.clamp(0.0, 1.0));
                    }
                }
            }
            images.push(Image::new(shape, data)?);
            labels.push(class as u16);
        }
    }
    Dataset::new(images, labels, class_count)
}

/// Client id → sorted sample indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    pub assignment: Vec<Vec<usize>>,
}

impl Partition {
    pub fn num_clients(&self) -> usize {
        self.assignment.len()
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.assignment.iter().map(Vec::len).collect()
    }

    /// `[client][class]` sample counts.
    pub fn class_histogram(&self, labels: &[u16], class_count: usize) -> Vec<Vec<usize>> {
        self.assignment
            .iter()
            .map(|idx| {
                let mut row = vec![0; class_count];
                for &i in idx {
                    row[usize::from(labels[i])] += 1;
                }
                row
            })
            .collect()
    }

    /// Mean total-variation distance between each client's label
    /// distribution and the pooled distribution over assigned samples.
    pub fn heterogeneity(&self, labels: &[u16], class_count: usize) -> f64 {
        let hist = self.class_histogram(labels, class_count);
        let mut global = vec![0.0; class_count];
        let mut total = 0.0;
        for row in &hist {
            for (g, &n) in global.iter_mut().zip(row) {
                *g += n as f64;
                total += n as f64;
            }
        }
        let tv: f64 = hist
            .iter()
            .map(|row| {
                let n: usize = row.iter().sum();
                0.5 * row
                    .iter()
                    .zip(&global)
                    .map(|(&k, g)| (k as f64 / n as f64 - g / total).abs())
                    .sum::<f64>()
            })
            .sum();
        tv / hist.len() as f64
    }
}

fn dirichlet_sample<R: Rng + ?Sized>(k: usize, alpha: f64, rng: &mut R) -> Vec<f64> {
    let gamma = Gamma::new(alpha, 1.0).expect("alpha validated positive");
    let draws: Vec<f64> = (0..k).map(|_| gamma.sample(rng)).collect();
    let sum: f64 = draws.iter().sum();
    if sum > 0.0 && sum.is_finite() {
        draws.into_iter().map(|g| g / sum).collect()
    } else {
        // every gamma draw underflowed: all mass to one client
        let mut p = vec![0.0; k];
        p[rng.random_range(0..k)] = 1.0;
        p
    }
}

/// Splits `n` items by `proportions` with largest-remainder rounding.
/// Ties in the fractional part go to the lower client id.
pub fn largest_remainder(n: usize, proportions: &[f64]) -> Vec<usize> {
    let exact: Vec<f64> = proportions.iter().map(|p| p * n as f64).collect();
    let mut counts: Vec<usize> = exact.iter().map(|e| e.floor() as usize).collect();
    let assigned: usize = counts.iter().sum();
    let mut order: Vec<usize> = (0..proportions.len()).collect();
    order.sort_by(|&a, &b| {
        let fa = exact[a] - exact[a].floor();
        let fb = exact[b] - exact[b].floor();
        fb.total_cmp(&fa).then(a.cmp(&b))
    });
    for &i in order.iter().take(n.saturating_sub(assigned)) {
        counts[i] += 1;
    }
    counts
}

/// Non-IID split: per class, client shares are drawn from
/// `Dirichlet(alpha · 1_K)` and the shuffled class samples are dealt out in
/// those proportions. Empty clients then take one sample from the largest
/// client until none is empty.
pub fn dirichlet_partition<R: Rng + ?Sized>(
    labels: &[u16],
    class_count: usize,
    num_clients: usize,
    alpha: f64,
    rng: &mut R,
) -> Result<Partition> {
    if num_clients < 2 {
        return Err(Error::Config("partitioning needs at least two clients".into()));
    }
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::Config(format!("dirichlet alpha must be positive, got {alpha}")));
    }
    if num_clients > labels.len() {
        return Err(Error::Config(format!(
            "{num_clients} clients but only {} samples",
            labels.len()
        )));
    }
    let mut assignment = vec![Vec::new(); num_clients];
    for class in 0..class_count {
        let mut members: Vec<usize> = labels
            .iter()
            .enumerate()
            .filter(|(_, &l)| usize::from(l) == class)
            .map(|(i, _)| i)
            .collect();
        members.shuffle(rng);
        let p = dirichlet_sample(num_clients, alpha, rng);
        let counts = largest_remainder(members.len(), &p);
        let mut start = 0;
        for (client, &n) in counts.iter().enumerate() {
            assignment[client].extend_from_slice(&members[start..start + n]);
            start += n;
        }
    }
    for list in &mut assignment {
        list.sort_unstable();
    }
    while let Some(empty) = assignment.iter().position(Vec::is_empty) {
        let donor = (0..num_clients)
            .max_by(|&a, &b| assignment[a].len().cmp(&assignment[b].len()).then(b.cmp(&a)))
            .expect("at least two clients");
        let moved = assignment[donor].pop().expect("donor holds samples");
        assignment[empty].push(moved);
    }
    Ok(Partition { assignment })
}

/// One epoch of mini-batches: a seeded permutation of `indices` cut into
/// chunks of `batch_size`; the last batch may be short.
pub fn batch_iter<R: Rng + ?Sized>(indices: &[usize], batch_size: usize, rng: &mut R) -> Vec<Vec<usize>> {
    let mut order = indices.to_vec();
    order.shuffle(rng);
    order.chunks(batch_size.max(1)).map(<[usize]>::to_vec).collect()
}

//! Compact differentiable semantic-communication autoencoder.
//!
//! The network is split into the four parameter groups of the transmission
//! pipeline:
//!
//! ```text
//! image ─► semantic_enc ─► channel_enc ─► [channel + ZF] ─► channel_dec ─► semantic_dec ─► image_hat
//! ```
//!
//! * The semantic encoder embeds every square patch with a shared dense
//!   layer and mixes all patch embeddings into one feature vector. The
//!   decoder mirrors it and clamps its output to `[0, 1]`.
//! * Each half of the channel codec is a stack of dense layers with one
//!   skip connection (first hidden activation added to the input of the last
//!   layer) and an SNR embedding concatenated in the middle of the stack.
//!   The encoder normalises its output to unit power per complex symbol.
//!
//! Gradients are computed in reverse mode from the cached activations in a
//! [`ForwardTrace`]. The channel realization (fading gains and noise) is an
//! explicit input so a forward pass is a deterministic function of its
//! arguments.

mod dense;

use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng;

use crate::channel::{from_complex, to_complex, zf_equalize, ChannelRealization};
use crate::error::{Error, Result};
use crate::params::{Group, GroupLayout, ParamVector, DEFAULT_BYTES_PER_ELEMENT};
use crate::rng::{self, Stream};
use crate::tensor::{Image, PatchGrid, Shape};

use dense::{relu_in_place, relu_mask, Dense};

/// Architecture hyper-parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ModelSpec {
    pub image_shape: Shape,
    /// Side length of the square patches seen by the semantic codec.
    pub patch: usize,
    pub semantic_hidden: usize,
    pub feature_dim: usize,
    /// Real channel symbols per image; pairs form complex symbols.
    pub symbol_dim: usize,
    pub channel_width: usize,
    pub channel_layers: usize,
    pub snr_width: usize,
    pub bias: bool,
}

impl Default for ModelSpec {
    fn default() -> Self {
        ModelSpec::standard()
    }
}

impl ModelSpec {
    /// 32×32 RGB at a 1/16 compression ratio.
    pub fn standard() -> Self {
        ModelSpec {
            image_shape: (3, 32, 32),
            patch: 4,
            semantic_hidden: 16,
            feature_dim: 256,
            symbol_dim: 192,
            channel_width: 128,
            channel_layers: 7,
            snr_width: 16,
            bias: true,
        }
    }

    /// 16×16 RGB at a 1/16 compression ratio, small enough for multi-seed
    /// federated runs on one core.
    pub fn tiny() -> Self {
        ModelSpec {
            image_shape: (3, 16, 16),
            patch: 4,
            semantic_hidden: 16,
            feature_dim: 96,
            symbol_dim: 48,
            channel_width: 48,
            channel_layers: 7,
            snr_width: 8,
            bias: true,
        }
    }

    /// 140-parameter model on 1×2×2 images for gradient checks.
    pub fn micro() -> Self {
        ModelSpec {
            image_shape: (1, 2, 2),
            patch: 2,
            semantic_hidden: 3,
            feature_dim: 2,
            symbol_dim: 2,
            channel_width: 2,
            channel_layers: 7,
            snr_width: 1,
            bias: true,
        }
    }

    pub fn image_len(&self) -> usize {
        let (c, h, w) = self.image_shape;
        c * h * w
    }

    pub fn compression_ratio(&self) -> f64 {
        self.symbol_dim as f64 / self.image_len() as f64
    }

    pub fn patch_grid(&self) -> PatchGrid {
        PatchGrid {
            shape: self.image_shape,
            size: self.patch,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let (c, h, w) = self.image_shape;
        let fail = |m: &str| Err(Error::ModelSpec(m.to_string()));
        if c == 0 || h == 0 || w == 0 {
            return fail("image dimensions must be positive");
        }
        if self.patch == 0 || h % self.patch != 0 || w % self.patch != 0 {
            return fail("patch size must divide image height and width");
        }
        if self.symbol_dim == 0 || self.symbol_dim % 2 != 0 {
            return fail("symbol_dim must be even and positive");
        }
        if self.channel_layers < 3 {
            return fail("channel codec needs at least three layers");
        }
        if self.semantic_hidden == 0
            || self.feature_dim == 0
            || self.channel_width == 0
            || self.snr_width == 0
        {
            return fail("layer widths must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
struct SemanticEncoder {
    embed: Dense,
    mix: Dense,
}

#[derive(Debug, Clone)]
struct SemanticDecoder {
    expand: Dense,
    out: Dense,
}

#[derive(Debug, Clone)]
struct ChannelCoder {
    layers: Vec<Dense>,
    snr: Dense,
    inject_at: usize,
}

impl ChannelCoder {
    fn alloc(cursor: &mut usize, spec: &ModelSpec, input: usize, output: usize) -> Self {
        let n = spec.channel_layers;
        let w = spec.channel_width;
        let inject_at = n / 2;
        let snr = Dense::alloc(cursor, 1, spec.snr_width, spec.bias);
        let layers = (0..n)
            .map(|i| {
                let fan_in = match i {
                    0 => input,
                    i if i == inject_at => w + spec.snr_width,
                    _ => w,
                };
                let fan_out = if i == n - 1 { output } else { w };
                Dense::alloc(cursor, fan_in, fan_out, spec.bias)
            })
            .collect();
        ChannelCoder {
            layers,
            snr,
            inject_at,
        }
    }

    fn dense_layers(&self) -> impl Iterator<Item = &Dense> {
        std::iter::once(&self.snr).chain(&self.layers)
    }

    fn forward(&self, p: &[f64], input: &[f64], snr_db: f64) -> CoderTrace {
        let n = self.layers.len();
        let snr_in = snr_db / 10.0;
        let mut snr_act = vec![0.0; self.snr.output];
        self.snr.forward(p, &[snr_in], &mut snr_act);
        relu_in_place(&mut snr_act);

        let mut acts: Vec<Vec<f64>> = Vec::with_capacity(n - 1);
        for (i, layer) in self.layers[..n - 1].iter().enumerate() {
            let mut h = vec![0.0; layer.output];
            if i == 0 {
                layer.forward(p, input, &mut h);
            } else if i == self.inject_at {
                let mut joined = acts[i - 1].clone();
                joined.extend_from_slice(&snr_act);
                layer.forward(p, &joined, &mut h);
            } else {
                layer.forward(p, &acts[i - 1], &mut h);
            }
            relu_in_place(&mut h);
            acts.push(h);
        }
        let skip: Vec<f64> = acts[n - 2].iter().zip(&acts[0]).map(|(a, b)| a + b).collect();
        let last = &self.layers[n - 1];
        let mut output = vec![0.0; last.output];
        last.forward(p, &skip, &mut output);
        CoderTrace {
            input: input.to_vec(),
            snr_in,
            snr_act,
            acts,
            skip,
            output,
        }
    }

    /// Returns the gradient with respect to the coder input.
    fn backward(&self, p: &[f64], t: &CoderTrace, d_out: &[f64], grad: &mut [f64]) -> Vec<f64> {
        let n = self.layers.len();
        let mut d_acts: Vec<Vec<f64>> = t.acts.iter().map(|a| vec![0.0; a.len()]).collect();

        let mut d_skip = vec![0.0; t.skip.len()];
        self.layers[n - 1].backward(p, &t.skip, d_out, grad, Some(&mut d_skip));
        for (d, s) in d_acts[n - 2].iter_mut().zip(&d_skip) {
            *d += s;
        }
        for (d, s) in d_acts[0].iter_mut().zip(&d_skip) {
            *d += s;
        }

        let mut d_snr_act = vec![0.0; t.snr_act.len()];
        for i in (1..n - 1).rev() {
            let mut d_pre = std::mem::take(&mut d_acts[i]);
            relu_mask(&t.acts[i], &mut d_pre);
            let layer = &self.layers[i];
            if i == self.inject_at {
                let mut joined = t.acts[i - 1].clone();
                joined.extend_from_slice(&t.snr_act);
                let mut d_joined = vec![0.0; joined.len()];
                layer.backward(p, &joined, &d_pre, grad, Some(&mut d_joined));
                let w = t.acts[i - 1].len();
                for (d, s) in d_acts[i - 1].iter_mut().zip(&d_joined[..w]) {
                    *d += s;
                }
                for (d, s) in d_snr_act.iter_mut().zip(&d_joined[w..]) {
                    *d += s;
                }
            } else {
                layer.backward(p, &t.acts[i - 1], &d_pre, grad, Some(&mut d_acts[i - 1]));
            }
        }

        relu_mask(&t.snr_act, &mut d_snr_act);
        self.snr.backward(p, &[t.snr_in], &d_snr_act, grad, None);

        let mut d_pre0 = std::mem::take(&mut d_acts[0]);
        relu_mask(&t.acts[0], &mut d_pre0);
        let mut d_input = vec![0.0; t.input.len()];
        self.layers[0].backward(p, &t.input, &d_pre0, grad, Some(&mut d_input));
        d_input
    }
}

/// Cached activations of one channel coder pass.
#[derive(Debug, Clone, PartialEq)]
pub struct CoderTrace {
    input: Vec<f64>,
    snr_in: f64,
    snr_act: Vec<f64>,
    acts: Vec<Vec<f64>>,
    skip: Vec<f64>,
    output: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SemanticTrace {
    patches: Vec<f64>,
    hidden: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelEncodeTrace {
    coder: CoderTrace,
    energy: f64,
    scale: f64,
    /// Encoder produced an all-zero vector that could not be normalised.
    pub zero_energy: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecoderTrace {
    features: Vec<f64>,
    expanded: Vec<f64>,
    raw: Vec<f64>,
}

/// Everything cached by [`Model::forward`] for one image.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardTrace {
    spec: ModelSpec,
    semantic: SemanticTrace,
    channel_enc: ChannelEncodeTrace,
    pass_gain: Vec<Complex64>,
    channel_dec: CoderTrace,
    decoder: DecoderTrace,
    pub deep_fades: usize,
}

impl ForwardTrace {
    pub fn zero_energy(&self) -> bool {
        self.channel_enc.zero_energy
    }
}

/// The autoencoder: layer placement inside a [`ParamVector`] plus the
/// forward and reverse passes.
#[derive(Debug, Clone)]
pub struct Model {
    spec: ModelSpec,
    grid: PatchGrid,
    layout: Arc<GroupLayout>,
    sem_enc: SemanticEncoder,
    ch_enc: ChannelCoder,
    ch_dec: ChannelCoder,
    sem_dec: SemanticDecoder,
}

impl Model {
    pub fn new(spec: ModelSpec) -> Result<Self> {
        Self::with_bytes_per_element(spec, DEFAULT_BYTES_PER_ELEMENT)
    }

    pub fn with_bytes_per_element(spec: ModelSpec, bytes_per_element: u32) -> Result<Self> {
        spec.validate()?;
        let grid = spec.patch_grid();
        let patches = grid.count();
        let hidden_all = patches * spec.semantic_hidden;
        let mut cursor = 0;
        let mut lengths = [0; 4];

        let start = cursor;
        let sem_enc = SemanticEncoder {
            embed: Dense::alloc(&mut cursor, grid.patch_len(), spec.semantic_hidden, spec.bias),
            mix: Dense::alloc(&mut cursor, hidden_all, spec.feature_dim, spec.bias),
        };
        lengths[0] = cursor - start;

        let start = cursor;
        let ch_enc = ChannelCoder::alloc(&mut cursor, &spec, spec.feature_dim, spec.symbol_dim);
        lengths[1] = cursor - start;

        let start = cursor;
        let ch_dec = ChannelCoder::alloc(&mut cursor, &spec, spec.symbol_dim, spec.feature_dim);
        lengths[2] = cursor - start;

        let start = cursor;
        let sem_dec = SemanticDecoder {
            expand: Dense::alloc(&mut cursor, spec.feature_dim, hidden_all, spec.bias),
            out: Dense::alloc(&mut cursor, spec.semantic_hidden, grid.patch_len(), spec.bias),
        };
        lengths[3] = cursor - start;

        Ok(Model {
            spec,
            grid,
            layout: Arc::new(GroupLayout::from_lengths(lengths, bytes_per_element)),
            sem_enc,
            ch_enc,
            ch_dec,
            sem_dec,
        })
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub fn layout(&self) -> &Arc<GroupLayout> {
        &self.layout
    }

    pub fn param_count(&self) -> usize {
        self.layout.total_len()
    }

    fn dense_layers(&self) -> Vec<&Dense> {
        let mut all = vec![&self.sem_enc.embed, &self.sem_enc.mix];
        all.extend(self.ch_enc.dense_layers());
        all.extend(self.ch_dec.dense_layers());
        all.extend([&self.sem_dec.expand, &self.sem_dec.out]);
        all
    }

    /// Uniform `[-s, s]` initialisation with `s = 1/sqrt(fan_in)` for every
    /// weight and bias, except the output bias, which starts at mid-grey so
    /// the decoder begins inside the clamp's linear range.
    pub fn init_params(&self, seed: u64) -> ParamVector {
        let mut rng = rng::stream(seed, Stream::Init, &[]);
        self.init_params_with(&mut rng)
    }

    pub fn init_params_with<R: Rng + ?Sized>(&self, rng: &mut R) -> ParamVector {
        let mut values = vec![0.0; self.param_count()];
        for layer in self.dense_layers() {
            let s = 1.0 / (layer.fan_in() as f64).sqrt();
            let end = layer.weight + layer.param_count();
            for v in &mut values[layer.weight..end] {
                *v = rng.random_range(-s..=s);
            }
        }
        if let Some(b) = self.sem_dec.out.bias {
            values[b..b + self.sem_dec.out.output].fill(0.5);
        }
        ParamVector::new(values, self.layout.clone()).expect("initialised values are finite")
    }

    fn check_params(&self, params: &ParamVector) -> Result<()> {
        if **params.layout() == *self.layout {
            Ok(())
        } else {
            Err(Error::LayoutMismatch)
        }
    }

    fn check_len(expected: usize, actual: usize) -> Result<()> {
        if expected == actual {
            Ok(())
        } else {
            Err(Error::LengthMismatch { expected, actual })
        }
    }

    pub fn semantic_encode(
        &self,
        params: &ParamVector,
        image: &Image,
    ) -> Result<(Vec<f64>, SemanticTrace)> {
        self.check_params(params)?;
        image.check_shape(self.spec.image_shape)?;
        let p = params.values();
        let n = self.grid.patch_len();
        let h = self.spec.semantic_hidden;
        let mut patches = vec![0.0; self.grid.count() * n];
        self.grid.extract(image.data(), &mut patches);
        let mut hidden = vec![0.0; self.grid.count() * h];
        for (patch, hid) in patches.chunks_exact(n).zip(hidden.chunks_exact_mut(h)) {
            self.sem_enc.embed.forward(p, patch, hid);
        }
        relu_in_place(&mut hidden);
        let mut features = vec![0.0; self.spec.feature_dim];
        self.sem_enc.mix.forward(p, &hidden, &mut features);
        Ok((features, SemanticTrace { patches, hidden }))
    }

    /// Channel encoder followed by power normalisation to unit mean energy
    /// per complex symbol.
    pub fn channel_encode(
        &self,
        params: &ParamVector,
        features: &[f64],
        snr_db: f64,
    ) -> Result<(Vec<f64>, ChannelEncodeTrace)> {
        self.check_params(params)?;
        Self::check_len(self.spec.feature_dim, features.len())?;
        if !snr_db.is_finite() {
            return Err(Error::NonFinite("snr_db"));
        }
        let coder = self.ch_enc.forward(params.values(), features, snr_db);
        let energy: f64 = coder.output.iter().map(|z| z * z).sum();
        let complex_count = (self.spec.symbol_dim / 2) as f64;
        let (symbols, scale, zero_energy) = if energy > 0.0 {
            let scale = (complex_count / energy).sqrt();
            (coder.output.iter().map(|z| z * scale).collect(), scale, false)
        } else {
            (vec![0.0; self.spec.symbol_dim], 0.0, true)
        };
        Ok((
            symbols,
            ChannelEncodeTrace {
                coder,
                energy,
                scale,
                zero_energy,
            },
        ))
    }

    pub fn channel_decode(
        &self,
        params: &ParamVector,
        symbols_hat: &[f64],
        snr_db: f64,
    ) -> Result<(Vec<f64>, CoderTrace)> {
        self.check_params(params)?;
        Self::check_len(self.spec.symbol_dim, symbols_hat.len())?;
        if !snr_db.is_finite() {
            return Err(Error::NonFinite("snr_db"));
        }
        let trace = self.ch_dec.forward(params.values(), symbols_hat, snr_db);
        Ok((trace.output.clone(), trace))
    }

    pub fn semantic_decode(
        &self,
        params: &ParamVector,
        features_hat: &[f64],
    ) -> Result<(Image, DecoderTrace)> {
        self.check_params(params)?;
        Self::check_len(self.spec.feature_dim, features_hat.len())?;
        let p = params.values();
        let h = self.spec.semantic_hidden;
        let n = self.grid.patch_len();
        let mut expanded = vec![0.0; self.grid.count() * h];
        self.sem_dec.expand.forward(p, features_hat, &mut expanded);
        relu_in_place(&mut expanded);
        let mut raw = vec![0.0; self.grid.count() * n];
        for (hid, out) in expanded.chunks_exact(h).zip(raw.chunks_exact_mut(n)) {
            self.sem_dec.out.forward(p, hid, out);
        }
        let mut image = Image::zeros(self.spec.image_shape);
        let data = image.data_mut();
        for (i, &v) in raw.iter().enumerate() {
            data[self.grid.pixel_index(i / n, i % n)] = v.clamp(0.0, 1.0);
        }
        Ok((
            image,
            DecoderTrace {
                features: features_hat.to_vec(),
                expanded,
                raw,
            },
        ))
    }

    /// Full transmission: encode, pass through `realization`, equalise,
    /// decode.
    pub fn forward(
        &self,
        params: &ParamVector,
        image: &Image,
        snr_db: f64,
        realization: &ChannelRealization,
    ) -> Result<(Image, ForwardTrace)> {
        let (features, semantic) = self.semantic_encode(params, image)?;
        let (symbols, channel_enc) = self.channel_encode(params, &features, snr_db)?;
        let x = to_complex(&symbols)?;
        let received = realization.apply(&x)?;
        let eq = zf_equalize(&received, &realization.gains)?;
        let (features_hat, channel_dec) =
            self.channel_decode(params, &from_complex(&eq.symbols), snr_db)?;
        let (image_hat, decoder) = self.semantic_decode(params, &features_hat)?;
        Ok((
            image_hat,
            ForwardTrace {
                spec: self.spec,
                semantic,
                channel_enc,
                pass_gain: eq.pass_gain,
                channel_dec,
                decoder,
                deep_fades: eq.deep_fades,
            },
        ))
    }

    /// Gradient of `mse_loss(image, image_hat)` with respect to every
    /// parameter.
    pub fn backward(
        &self,
        params: &ParamVector,
        trace: &ForwardTrace,
        image: &Image,
        image_hat: &Image,
    ) -> Result<ParamVector> {
        image.check_shape(self.spec.image_shape)?;
        image_hat.check_shape(self.spec.image_shape)?;
        let mut grad = vec![0.0; self.param_count()];
        let d_image = mse_gradient(image, image_hat);
        self.accumulate_gradient(params, trace, &d_image, &mut grad)?;
        ParamVector::new(grad, self.layout.clone())
    }

    /// Back-propagates an upstream gradient on the reconstructed image and
    /// adds the parameter gradient into `grad`.
    pub fn accumulate_gradient(
        &self,
        params: &ParamVector,
        trace: &ForwardTrace,
        d_image: &[f64],
        grad: &mut [f64],
    ) -> Result<()> {
        self.check_params(params)?;
        if trace.spec != self.spec {
            return Err(Error::Trace("trace was produced by a different model"));
        }
        if trace.decoder.raw.len() != self.spec.image_len()
            || trace.pass_gain.len() * 2 != self.spec.symbol_dim
        {
            return Err(Error::Trace("incomplete forward trace"));
        }
        Self::check_len(self.spec.image_len(), d_image.len())?;
        Self::check_len(self.param_count(), grad.len())?;
        let p = params.values();

        // semantic decoder
        let dec = &trace.decoder;
        let n = self.grid.patch_len();
        let h = self.spec.semantic_hidden;
        let mut d_raw = vec![0.0; dec.raw.len()];
        for (i, (d, &v)) in d_raw.iter_mut().zip(&dec.raw).enumerate() {
            if (0.0..=1.0).contains(&v) {
                *d = d_image[self.grid.pixel_index(i / n, i % n)];
            }
        }
        let mut d_expanded = vec![0.0; dec.expanded.len()];
        for ((hid, d_out), d_hid) in dec
            .expanded
            .chunks_exact(h)
            .zip(d_raw.chunks_exact(n))
            .zip(d_expanded.chunks_exact_mut(h))
        {
            self.sem_dec.out.backward(p, hid, d_out, grad, Some(d_hid));
        }
        relu_mask(&dec.expanded, &mut d_expanded);
        let mut d_features_hat = vec![0.0; self.spec.feature_dim];
        self.sem_dec
            .expand
            .backward(p, &dec.features, &d_expanded, grad, Some(&mut d_features_hat));

        // channel decoder, then the equaliser: x̂ = g·x + n/h_used
        let d_symbols_hat = self
            .ch_dec
            .backward(p, &trace.channel_dec, &d_features_hat, grad);
        let mut d_symbols = vec![0.0; d_symbols_hat.len()];
        for (k, g) in trace.pass_gain.iter().enumerate() {
            let d = Complex64::new(d_symbols_hat[2 * k], d_symbols_hat[2 * k + 1]);
            let back = g.conj() * d;
            d_symbols[2 * k] = back.re;
            d_symbols[2 * k + 1] = back.im;
        }

        // power normalisation: x = z · sqrt(M / Σz²)
        let enc = &trace.channel_enc;
        let mut d_z = vec![0.0; d_symbols.len()];
        if !enc.zero_energy {
            let z = &enc.coder.output;
            let dot: f64 = d_symbols.iter().zip(z).map(|(g, z)| g * z).sum();
            for ((dz, g), z) in d_z.iter_mut().zip(&d_symbols).zip(z) {
                *dz = enc.scale * (g - z * dot / enc.energy);
            }
        }
        let d_features = self.ch_enc.backward(p, &enc.coder, &d_z, grad);

        // semantic encoder
        let sem = &trace.semantic;
        let mut d_hidden = vec![0.0; sem.hidden.len()];
        self.sem_enc
            .mix
            .backward(p, &sem.hidden, &d_features, grad, Some(&mut d_hidden));
        relu_mask(&sem.hidden, &mut d_hidden);
        for (patch, d_hid) in sem.patches.chunks_exact(n).zip(d_hidden.chunks_exact(h)) {
            self.sem_enc.embed.backward(p, patch, d_hid, grad, None);
        }
        Ok(())
    }

    /// Element count of each group, for reporting.
    pub fn group_lengths(&self) -> [(Group, usize); 4] {
        Group::ALL.map(|g| (g, self.layout.group(g).length))
    }
}

/// Mean of squared elementwise differences.
pub fn mse_loss(image: &Image, image_hat: &Image) -> Result<f64> {
    image_hat.check_shape(image.shape())?;
    let n = image.len() as f64;
    Ok(image
        .data()
        .iter()
        .zip(image_hat.data())
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        / n)
}

/// `∂ mse / ∂ image_hat`.
pub fn mse_gradient(image: &Image, image_hat: &Image) -> Vec<f64> {
    let scale = 2.0 / image.len() as f64;
    image
        .data()
        .iter()
        .zip(image_hat.data())
        .map(|(a, b)| scale * (b - a))
        .collect()
}

/// `params - lr * gradient`.
pub fn sgd_step(params: &ParamVector, gradient: &ParamVector, lr: f64) -> Result<ParamVector> {
    params.sgd_step(gradient, lr)
}

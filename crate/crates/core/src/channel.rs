//! Physical channel between the channel encoder and decoder.
//!
//! Symbols are complex: consecutive real outputs of the channel encoder pair
//! up as `(re, im)`. The channel multiplies each symbol by a fading gain and
//! adds circularly-symmetric Gaussian noise; the receiver knows the gain and
//! divides it back out (zero forcing), leaving `x + n / h`.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Gains with magnitude at or below this are treated as deep fades.
pub const DEEP_FADE_FLOOR: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Fading {
    #[default]
    None,
    Rayleigh,
}

impl FromStr for Fading {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" | "awgn" => Ok(Fading::None),
            "rayleigh" => Ok(Fading::Rayleigh),
            other => Err(Error::Config(format!(
                "unknown fading mode `{other}` (expected none|rayleigh)"
            ))),
        }
    }
}

impl fmt::Display for Fading {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(match self {
            Fading::None => "none",
            Fading::Rayleigh => "rayleigh",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelConfig {
    pub snr_db: f64,
    pub fading: Fading,
}

impl ChannelConfig {
    pub fn new(snr_db: f64, fading: Fading) -> Result<Self> {
        if snr_db.is_nan() || snr_db == f64::NEG_INFINITY {
            return Err(Error::NonFinite("snr_db"));
        }
        Ok(ChannelConfig { snr_db, fading })
    }

    /// The `snr_db → +∞` limit: no additive noise.
    pub fn noiseless(fading: Fading) -> Self {
        ChannelConfig {
            snr_db: f64::INFINITY,
            fading,
        }
    }

    /// Noise variance per complex symbol for unit signal power.
    pub fn noise_variance(&self) -> f64 {
        10f64.powf(-self.snr_db / 10.0)
    }
}

pub fn to_complex(symbols: &[f64]) -> Result<Vec<Complex64>> {
    if symbols.len() % 2 != 0 {
        return Err(Error::OddLength(symbols.len()));
    }
    Ok(symbols
        .chunks_exact(2)
        .map(|p| Complex64::new(p[0], p[1]))
        .collect())
}

pub fn from_complex(symbols: &[Complex64]) -> Vec<f64> {
    symbols.iter().flat_map(|z| [z.re, z.im]).collect()
}

/// One draw of fading gains and noise for a block of symbols.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    pub gains: Vec<Complex64>,
    pub noise: Vec<Complex64>,
}

impl ChannelRealization {
    pub fn sample<R: Rng + ?Sized>(symbols: usize, cfg: &ChannelConfig, rng: &mut R) -> Self {
        let mut gains = Vec::with_capacity(symbols);
        let mut noise = Vec::with_capacity(symbols);
        let sigma = (cfg.noise_variance() / 2.0).sqrt();
        for _ in 0..symbols {
            let h = match cfg.fading {
                Fading::None => Complex64::new(1.0, 0.0),
                Fading::Rayleigh => {
                    let re: f64 = rng.sample(StandardNormal);
                    let im: f64 = rng.sample(StandardNormal);
                    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
                }
            };
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            gains.push(h);
            noise.push(Complex64::new(re * sigma, im * sigma));
        }
        ChannelRealization { gains, noise }
    }

    pub fn len(&self) -> usize {
        self.gains.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gains.is_empty()
    }

    /// `y = h·x + n` per symbol.
    pub fn apply(&self, x: &[Complex64]) -> Result<Vec<Complex64>> {
        if x.len() != self.gains.len() {
            return Err(Error::LengthMismatch {
                expected: self.gains.len(),
                actual: x.len(),
            });
        }
        Ok(x.iter()
            .zip(&self.gains)
            .zip(&self.noise)
            .map(|((x, h), n)| h * x + n)
            .collect())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Transmission {
    pub received: Vec<Complex64>,
    pub realization: ChannelRealization,
}

/// Sends `x` through the configured channel.
pub fn transmit<R: Rng + ?Sized>(
    x: &[Complex64],
    cfg: &ChannelConfig,
    rng: &mut R,
) -> Transmission {
    let realization = ChannelRealization::sample(x.len(), cfg, rng);
    let received = realization.apply(x).expect("realization sized to input");
    Transmission {
        received,
        realization,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Equalized {
    pub symbols: Vec<Complex64>,
    /// `h / h_used` per symbol; 1 unless the gain was floored.
    pub pass_gain: Vec<Complex64>,
    pub deep_fades: usize,
}

fn floored_gain(h: Complex64) -> (Complex64, bool) {
    let mag = h.norm();
    if mag > DEEP_FADE_FLOOR {
        (h, false)
    } else if mag == 0.0 {
        (Complex64::new(DEEP_FADE_FLOOR, 0.0), true)
    } else {
        (h * (DEEP_FADE_FLOOR / mag), true)
    }
}

/// Zero-forcing: `x̂ = y / h` with perfect channel knowledge.
///
/// Gains inside the deep-fade floor are replaced by `h_min · h/|h|` and
/// counted.
pub fn zf_equalize(received: &[Complex64], gains: &[Complex64]) -> Result<Equalized> {
    if received.len() != gains.len() {
        return Err(Error::LengthMismatch {
            expected: gains.len(),
            actual: received.len(),
        });
    }
    let mut symbols = Vec::with_capacity(received.len());
    let mut pass_gain = Vec::with_capacity(received.len());
    let mut deep_fades = 0;
    for (y, &h) in received.iter().zip(gains) {
        let (used, floored) = floored_gain(h);
        deep_fades += usize::from(floored);
        symbols.push(y / used);
        pass_gain.push(if floored {
            h / used
        } else {
            Complex64::new(1.0, 0.0)
        });
    }
    Ok(Equalized {
        symbols,
        pass_gain,
        deep_fades,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, Stream};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn complex_packing() {
        assert_eq!(
            to_complex(&[1.0, 2.0, 3.0, 4.0]).unwrap(),
            vec![c(1.0, 2.0), c(3.0, 4.0)]
        );
        assert!(to_complex(&[]).unwrap().is_empty());
        assert!(matches!(to_complex(&[1.0, 2.0, 3.0]), Err(Error::OddLength(3))));
        let x = [0.5, -1.0, 2.0, 7.0];
        assert_eq!(from_complex(&to_complex(&x).unwrap()), x);
    }

    #[test]
    fn zf_examples() {
        let x = vec![c(0.3, -0.7), c(1.0, 2.0)];
        let eq = zf_equalize(&x, &[c(1.0, 0.0); 2]).unwrap();
        assert_eq!(eq.symbols, x);

        let y: Vec<_> = x.iter().map(|v| v * 2.0).collect();
        assert_eq!(zf_equalize(&y, &[c(2.0, 0.0); 2]).unwrap().symbols, x);

        let i = c(0.0, 1.0);
        let y: Vec<_> = x.iter().map(|v| v * i).collect();
        let eq = zf_equalize(&y, &[i; 2]).unwrap();
        for (a, b) in eq.symbols.iter().zip(&x) {
            assert!((a - b).norm() < 1e-15);
        }
        assert_eq!(eq.deep_fades, 0);
    }

    #[test]
    fn deep_fades_are_floored_and_counted() {
        let h = [c(1e-5, 0.0), c(0.0, 0.0), c(0.5, 0.5)];
        let y = [c(1.0, 0.0); 3];
        let eq = zf_equalize(&y, &h).unwrap();
        assert_eq!(eq.deep_fades, 2);
        assert!((eq.symbols[0] - c(1e3, 0.0)).norm() < 1e-9);
        assert!(eq.symbols.iter().all(|s| s.re.is_finite() && s.im.is_finite()));
        assert!((eq.pass_gain[0] - c(1e-2, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn noiseless_awgn_is_identity() {
        let x = vec![c(0.1, 0.2), c(-1.0, 0.5)];
        let mut rng = stream(3, Stream::TrainChannel, &[]);
        let t = transmit(&x, &ChannelConfig::noiseless(Fading::None), &mut rng);
        assert_eq!(t.received, x);
    }

    #[test]
    fn seeds_control_realizations() {
        let cfg = ChannelConfig::new(5.0, Fading::Rayleigh).unwrap();
        let a = ChannelRealization::sample(16, &cfg, &mut stream(1, Stream::TrainChannel, &[]));
        let b = ChannelRealization::sample(16, &cfg, &mut stream(1, Stream::TrainChannel, &[]));
        let d = ChannelRealization::sample(16, &cfg, &mut stream(2, Stream::TrainChannel, &[]));
        assert_eq!(a, b);
        assert_ne!(a, d);
    }

    #[test]
    fn config_rejects_nan() {
        assert!(ChannelConfig::new(f64::NAN, Fading::None).is_err());
        assert!("rician".parse::<Fading>().is_err());
        assert_eq!("rayleigh".parse::<Fading>().unwrap(), Fading::Rayleigh);
    }
}

//! Forward degradation: `g = k * f + noise`.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::error::{DeconvError, Result};
use crate::image::Image;
use crate::kernels::Kernel;
use crate::spectral::convolve_fft;

/// Additive white Gaussian noise, in `[0, 1]` intensity units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    sigma: f64,
    seed: u64,
}

impl NoiseSpec {
    pub fn new(sigma: f64, seed: u64) -> Result<Self> {
        if !(sigma >= 0.0 && sigma.is_finite()) {
            return Err(DeconvError::InvalidParameter(format!(
                "noise sigma must be >= 0, got {sigma}"
            )));
        }
        Ok(Self { sigma, seed })
    }

    /// Noise specified as a variance on the 0-255 scale, e.g. `0.5` gives
    /// `sigma = sqrt(0.5) / 255`.
    pub fn from_variance_8bit(variance: f64, seed: u64) -> Result<Self> {
        if variance.is_nan() || variance < 0.0 {
            return Err(DeconvError::InvalidParameter(format!(
                "noise variance must be >= 0, got {variance}"
            )));
        }
        Self::new(variance.sqrt() / 255.0, seed)
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }
}

/// Blurs with periodic boundaries. Values are not clamped.
pub fn apply_blur(img: &Image, k: &Kernel) -> Result<Image> {
    convolve_fft(img, k)
}

// Each pixel owns four consecutive 32-bit words of the ChaCha8 stream, so a
// sample is a pure function of (seed, pixel index).
const WORDS_PER_SAMPLE: u128 = 4;

fn box_muller(a: u64, b: u64) -> f64 {
    const SCALE: f64 = 1.0 / (1u64 << 53) as f64;
    let u1 = 1.0 - (a >> 11) as f64 * SCALE; // (0, 1]
    let u2 = (b >> 11) as f64 * SCALE;
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// The standard-normal draw assigned to pixel `index` under `seed`.
pub fn standard_normal_at(seed: u64, index: usize) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_word_pos(index as u128 * WORDS_PER_SAMPLE);
    let a = rng.next_u64();
    let b = rng.next_u64();
    box_muller(a, b)
}

pub fn add_gaussian_noise(img: &Image, spec: NoiseSpec) -> Image {
    if spec.sigma == 0.0 {
        return img.clone();
    }
    // sequential reads walk the same word positions as standard_normal_at
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    img.map(|v| {
        let a = rng.next_u64();
        let b = rng.next_u64();
        v + spec.sigma * box_muller(a, b)
    })
}

/// Blur followed by optional additive noise.
pub fn degrade(img: &Image, k: &Kernel, noise: Option<NoiseSpec>) -> Result<Image> {
    let blurred = apply_blur(img, k)?;
    Ok(match noise {
        Some(spec) => add_gaussian_noise(&blurred, spec),
        None => blurred,
    })
}

//! Error measures used to rank restorations.

use crate::error::{DeconvError, Result};
use crate::image::Image;
use crate::kernels::Kernel;

/// One line of an experiment report.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricRow {
    pub method: String,
    pub regime: String,
    pub rmse: f64,
    /// Peak-referenced (peak 1.0); `+inf` for a perfect restoration.
    pub psnr: f64,
    /// `10 log10(var(reference) / mse)`; `+inf` for a perfect restoration.
    pub snr: f64,
}

impl MetricRow {
    pub fn measure(
        method: impl Into<String>,
        regime: impl Into<String>,
        reference: &Image,
        test: &Image,
    ) -> Result<Self> {
        let mse = mse(reference, test)?;
        Ok(Self {
            method: method.into(),
            regime: regime.into(),
            rmse: mse.sqrt(),
            psnr: psnr_from_rmse(mse.sqrt()),
            snr: snr_from_mse(reference.variance(), mse),
        })
    }
}

pub fn mse(a: &Image, b: &Image) -> Result<f64> {
    a.ensure_same_shape(b)?;
    let sum: f64 = a
        .data()
        .iter()
        .zip(b.data())
        .map(|(x, y)| (x - y) * (x - y))
        .sum();
    Ok(sum / a.len() as f64)
}

pub fn rmse(a: &Image, b: &Image) -> Result<f64> {
    Ok(mse(a, b)?.sqrt())
}

pub fn psnr_from_rmse(rmse: f64) -> f64 {
    if rmse == 0.0 {
        f64::INFINITY
    } else {
        -20.0 * rmse.log10()
    }
}

/// PSNR in dB with peak 1.0.
pub fn psnr(reference: &Image, test: &Image) -> Result<f64> {
    Ok(psnr_from_rmse(rmse(reference, test)?))
}

fn snr_from_mse(signal_variance: f64, mse: f64) -> f64 {
    if mse == 0.0 {
        f64::INFINITY
    } else {
        10.0 * (signal_variance / mse).log10()
    }
}

pub fn snr(reference: &Image, test: &Image) -> Result<f64> {
    Ok(snr_from_mse(reference.variance(), mse(reference, test)?))
}

/// Pearson correlation of two kernels' weights. The smaller kernel is
/// zero-padded about its center to the larger one's size first.
pub fn kernel_correlation(a: &Kernel, b: &Kernel) -> Result<f64> {
    let width = a.width().max(b.width());
    let height = a.height().max(b.height());
    let a = a.padded_to(width, height)?;
    let b = b.padded_to(width, height)?;
    pearson(a.weights(), b.weights())
}

/// Pearson correlation of two equally long sequences.
pub fn pearson(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() || a.is_empty() {
        return Err(DeconvError::UndefinedCorrelation(format!(
            "length mismatch {} vs {}",
            a.len(),
            b.len()
        )));
    }
    let n = a.len() as f64;
    let mean_a = a.iter().sum::<f64>() / n;
    let mean_b = b.iter().sum::<f64>() / n;
    let (mut cov, mut var_a, mut var_b) = (0.0, 0.0, 0.0);
    let (mut energy_a, mut energy_b) = (0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        energy_a += x * x;
        energy_b += y * y;
        let (dx, dy) = (x - mean_a, y - mean_b);
        cov += dx * dy;
        var_a += dx * dx;
        var_b += dy * dy;
    }
    // a constant sequence leaves only rounding noise in its variance
    let flat = |var: f64, energy: f64| var <= 1e-24 * energy;
    if flat(var_a, energy_a) || flat(var_b, energy_b) {
        return Err(DeconvError::UndefinedCorrelation(
            "zero-variance input".into(),
        ));
    }
    Ok((cov / (var_a * var_b).sqrt()).clamp(-1.0, 1.0))
}

//! Blur synthesis and deconvolution for grayscale images.
//!
//! Images are `f64` planes in `[0, 1]`. All convolutions are circular: the
//! image is treated as one period of a periodic signal and products are
//! taken in the Fourier domain.
//!
//! A typical round trip builds a PSF with [`gaussian_kernel`], degrades an
//! image with [`degrade`], restores it with [`lucy_richardson`] and scores the
//! result with [`rmse`].

pub mod degrade;
pub mod error;
pub mod experiment;
pub mod fixtures;
pub mod image;
pub mod kernels;
pub mod metrics;
pub mod restore;
pub mod spectral;

pub use degrade::{add_gaussian_noise, apply_blur, degrade, NoiseSpec};
pub use error::{DeconvError, Result};
pub use experiment::{
    preset, run_experiment, BlurSpec, ExperimentConfig, ExperimentReport, MethodSpec, Regime,
};
pub use image::{load_image, save_image, Image};
pub use kernels::{average_kernel, gaussian_kernel, motion_kernel, Kernel};
pub use metrics::{kernel_correlation, psnr, rmse, snr, MetricRow};
pub use restore::{
    blind_deconv, lucy_richardson, regularized, wiener, BlindParams, LucyParams, RegularizedParams,
    WienerParams,
};
pub use spectral::{convolve_direct, convolve_fft, psf2otf, Convolver, Otf};

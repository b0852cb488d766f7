//! 2-D DFT, PSF to OTF conversion and circular convolution.
//!
//! All convolutions here use periodic boundaries, which makes blurring
//! exactly diagonal in the DFT basis. Transforms are unnormalized forward and
//! `1/N`-normalized inverse.

use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{DeconvError, Result};
use crate::image::Image;
use crate::kernels::Kernel;

/// Largest imaginary residue tolerated when returning to the real domain,
/// relative to `max(1, peak |real|)`.
pub const IMAG_TOLERANCE: f64 = 1e-8;

/// Planned row and column transforms for one image size.
pub struct Fft2d {
    width: usize,
    height: usize,
    rows_fwd: Arc<dyn Fft<f64>>,
    rows_inv: Arc<dyn Fft<f64>>,
    cols_fwd: Arc<dyn Fft<f64>>,
    cols_inv: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Fft2d {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Fft2d")
            .field("width", &self.width)
            .field("height", &self.height)
            .finish()
    }
}

impl Fft2d {
    pub fn new(width: usize, height: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            width,
            height,
            rows_fwd: planner.plan_fft_forward(width),
            rows_inv: planner.plan_fft_inverse(width),
            cols_fwd: planner.plan_fft_forward(height),
            cols_inv: planner.plan_fft_inverse(height),
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn forward(&self, buf: &mut [Complex64]) {
        self.process(buf, &self.rows_fwd, &self.cols_fwd);
    }

    /// Inverse transform including the `1 / (width * height)` factor.
    pub fn inverse(&self, buf: &mut [Complex64]) {
        self.process(buf, &self.rows_inv, &self.cols_inv);
        let scale = 1.0 / (self.width * self.height) as f64;
        for v in buf.iter_mut() {
            *v *= scale;
        }
    }

    fn process(&self, buf: &mut [Complex64], rows: &Arc<dyn Fft<f64>>, cols: &Arc<dyn Fft<f64>>) {
        assert_eq!(
            buf.len(),
            self.width * self.height,
            "buffer/plan size mismatch"
        );
        let scratch_len = rows
            .get_inplace_scratch_len()
            .max(cols.get_inplace_scratch_len());
        let mut scratch = vec![Complex64::default(); scratch_len];
        for row in buf.chunks_exact_mut(self.width) {
            rows.process_with_scratch(row, &mut scratch[..rows.get_inplace_scratch_len()]);
        }
        let mut column = vec![Complex64::default(); self.height];
        for x in 0..self.width {
            for (y, c) in column.iter_mut().enumerate() {
                *c = buf[y * self.width + x];
            }
            cols.process_with_scratch(&mut column, &mut scratch[..cols.get_inplace_scratch_len()]);
            for (y, c) in column.iter().enumerate() {
                buf[y * self.width + x] = *c;
            }
        }
    }

    pub fn forward_image(&self, img: &Image) -> Vec<Complex64> {
        assert_eq!((img.width(), img.height()), (self.width, self.height));
        let mut buf: Vec<Complex64> = img.data().iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.forward(&mut buf);
        buf
    }

    /// Inverse-transforms a spectrum that should be Hermitian and returns its
    /// real part, failing if the imaginary residue is not negligible.
    pub fn inverse_to_image(&self, mut spectrum: Vec<Complex64>) -> Result<Image> {
        self.inverse(&mut spectrum);
        let peak = spectrum.iter().fold(1.0f64, |m, c| m.max(c.re.abs()));
        let residue = spectrum.iter().fold(0.0f64, |m, c| m.max(c.im.abs()));
        if residue >= IMAG_TOLERANCE * peak || !residue.is_finite() {
            return Err(DeconvError::ImaginaryResidue(residue));
        }
        let data: Vec<f64> = spectrum.into_iter().map(|c| c.re).collect();
        Image::new(self.width, self.height, data)
    }
}

/// Optical transfer function of a kernel at a given image size.
#[derive(Debug, Clone, PartialEq)]
pub struct Otf {
    width: usize,
    height: usize,
    values: Vec<Complex64>,
}

impl Otf {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn get(&self, u: usize, v: usize) -> Complex64 {
        self.values[v * self.width + u]
    }

    /// Smallest `|H(u, v)|` and where it occurs.
    pub fn min_magnitude(&self) -> (f64, usize, usize) {
        let (i, m) = self.values.iter().map(|c| c.norm()).enumerate().fold(
            (0, f64::INFINITY),
            |best, (i, m)| if m < best.1 { (i, m) } else { best },
        );
        (m, i % self.width, i / self.width)
    }
}

fn check_fits(kw: usize, kh: usize, width: usize, height: usize) -> Result<()> {
    if kw > width || kh > height {
        return Err(DeconvError::KernelTooLarge {
            kernel_width: kw,
            kernel_height: kh,
            width,
            height,
        });
    }
    Ok(())
}

/// Zero-pads an arbitrary (possibly signed) odd-sized stencil to the plan's
/// size with its center moved to index `(0, 0)`, then transforms it. Taps
/// that fall outside a too-small grid wrap around.
pub(crate) fn stencil_otf(fft: &Fft2d, weights: &[f64], kw: usize, kh: usize) -> Otf {
    let (width, height) = (fft.width(), fft.height());
    let (cx, cy) = (kw / 2, kh / 2);
    let mut buf = vec![Complex64::default(); width * height];
    for ky in 0..kh {
        for kx in 0..kw {
            let x = (kx % width + width - cx % width) % width;
            let y = (ky % height + height - cy % height) % height;
            buf[y * width + x] += Complex64::new(weights[ky * kw + kx], 0.0);
        }
    }
    fft.forward(&mut buf);
    Otf {
        width,
        height,
        values: buf,
    }
}

pub(crate) fn psf2otf_with(fft: &Fft2d, k: &Kernel) -> Result<Otf> {
    check_fits(k.width(), k.height(), fft.width(), fft.height())?;
    Ok(stencil_otf(fft, k.weights(), k.width(), k.height()))
}

/// Transfer function of `k` on a `width x height` periodic grid.
pub fn psf2otf(k: &Kernel, width: usize, height: usize) -> Result<Otf> {
    check_fits(k.width(), k.height(), width, height)?;
    psf2otf_with(&Fft2d::new(width, height), k)
}

/// A kernel bound to an image size, reusable across many applications.
#[derive(Debug)]
pub struct Convolver {
    fft: Fft2d,
    otf: Otf,
}

impl Convolver {
    pub fn new(k: &Kernel, width: usize, height: usize) -> Result<Self> {
        check_fits(k.width(), k.height(), width, height)?;
        let fft = Fft2d::new(width, height);
        let otf = psf2otf_with(&fft, k)?;
        Ok(Self { fft, otf })
    }

    pub fn fft(&self) -> &Fft2d {
        &self.fft
    }

    pub fn otf(&self) -> &Otf {
        &self.otf
    }

    fn check_image(&self, img: &Image) -> Result<()> {
        if img.width() != self.fft.width() || img.height() != self.fft.height() {
            return Err(DeconvError::SizeMismatch {
                left_width: img.width(),
                left_height: img.height(),
                right_width: self.fft.width(),
                right_height: self.fft.height(),
            });
        }
        Ok(())
    }

    /// `img * k` with periodic boundaries.
    pub fn convolve(&self, img: &Image) -> Result<Image> {
        self.check_image(img)?;
        let mut spec = self.fft.forward_image(img);
        for (s, h) in spec.iter_mut().zip(&self.otf.values) {
            *s *= h;
        }
        self.fft.inverse_to_image(spec)
    }

    /// Adjoint of [`Convolver::convolve`]: correlation with `k`, i.e.
    /// convolution with the 180-degree rotated kernel.
    pub fn correlate(&self, img: &Image) -> Result<Image> {
        self.check_image(img)?;
        let mut spec = self.fft.forward_image(img);
        for (s, h) in spec.iter_mut().zip(&self.otf.values) {
            *s *= h.conj();
        }
        self.fft.inverse_to_image(spec)
    }
}

/// Circular convolution through the DFT.
pub fn convolve_fft(img: &Image, k: &Kernel) -> Result<Image> {
    Convolver::new(k, img.width(), img.height())?.convolve(img)
}

/// Circular convolution by explicit summation with modular indexing.
///
/// `O(N^2 K^2)`; this is the reference the FFT path is checked against.
pub fn convolve_direct(img: &Image, k: &Kernel) -> Result<Image> {
    let (width, height) = (img.width(), img.height());
    check_fits(k.width(), k.height(), width, height)?;
    let (cx, cy) = k.center();
    let mut out = Vec::with_capacity(width * height);
    for y in 0..height {
        for x in 0..width {
            let mut acc = 0.0;
            for ky in 0..k.height() {
                // out(y) = sum_s k(s) img(y - s), offset s = ky - cy
                let sy = (y + height + cy - ky) % height;
                for kx in 0..k.width() {
                    let sx = (x + width + cx - kx) % width;
                    acc += k.get(kx, ky) * img.get(sx, sy);
                }
            }
            out.push(acc);
        }
    }
    Image::new(width, height, out)
}

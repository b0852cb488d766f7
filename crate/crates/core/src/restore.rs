//! Deconvolution: Wiener, Laplacian-regularized least squares,
//! Richardson-Lucy and alternating blind Richardson-Lucy.
//!
//! The two linear filters act pointwise in the DFT basis; the iterative
//! methods reuse one FFT plan for every convolution they perform.

use rustfft::num_complex::Complex64;

use crate::error::{DeconvError, Result};
use crate::image::Image;
use crate::kernels::Kernel;
use crate::spectral::{psf2otf_with, stencil_otf, Convolver, Fft2d, Otf};

/// `|H|` below which an unregularized inverse is refused.
pub const VANISHING_OTF: f64 = 1e-12;

/// Default guard added to Richardson-Lucy denominators.
pub const DEFAULT_EPSILON: f64 = 1e-12;

/// Five-point discrete Laplacian used as the smoothness penalty.
pub const LAPLACIAN: [f64; 9] = [0.0, -1.0, 0.0, -1.0, 4.0, -1.0, 0.0, -1.0, 0.0];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WienerParams {
    /// Noise-to-signal power ratio; `0` gives the plain inverse filter.
    pub nsr: f64,
}

impl WienerParams {
    pub fn new(nsr: f64) -> Result<Self> {
        let p = Self { nsr };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.nsr >= 0.0 && self.nsr.is_finite()) {
            return Err(DeconvError::InvalidParameter(format!(
                "wiener nsr must be >= 0, got {}",
                self.nsr
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegularizedParams {
    pub lambda: f64,
}

impl RegularizedParams {
    pub fn new(lambda: f64) -> Result<Self> {
        let p = Self { lambda };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(DeconvError::InvalidParameter(format!(
                "regularization lambda must be >= 0, got {}",
                self.lambda
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LucyParams {
    pub iterations: usize,
    /// Added to the reblurred estimate before dividing.
    pub epsilon: f64,
}

impl LucyParams {
    pub fn new(iterations: usize) -> Result<Self> {
        let p = Self {
            iterations,
            epsilon: DEFAULT_EPSILON,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(DeconvError::InvalidParameter(
                "lucy-richardson needs at least one iteration".into(),
            ));
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(DeconvError::InvalidParameter(format!(
                "epsilon must be > 0, got {}",
                self.epsilon
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlindParams {
    /// Side of the square PSF support being estimated (odd).
    pub psf_size: usize,
    pub iterations: usize,
    /// Correction ratios within this distance of 1 are suppressed in the
    /// image update. Useful values sit roughly in `[0.10, 0.25]`.
    pub weight_threshold: f64,
    pub epsilon: f64,
}

impl BlindParams {
    pub fn new(psf_size: usize, iterations: usize, weight_threshold: f64) -> Result<Self> {
        let p = Self {
            psf_size,
            iterations,
            weight_threshold,
            epsilon: DEFAULT_EPSILON,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.psf_size == 0 || self.psf_size.is_multiple_of(2) {
            return Err(DeconvError::InvalidParameter(format!(
                "psf_size must be odd and positive, got {}",
                self.psf_size
            )));
        }
        if self.iterations == 0 {
            return Err(DeconvError::InvalidParameter(
                "blind deconvolution needs at least one iteration".into(),
            ));
        }
        if !(0.0..1.0).contains(&self.weight_threshold) {
            return Err(DeconvError::InvalidParameter(format!(
                "weight_threshold must be in [0, 1), got {}",
                self.weight_threshold
            )));
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(DeconvError::InvalidParameter(format!(
                "epsilon must be > 0, got {}",
                self.epsilon
            )));
        }
        Ok(())
    }
}

fn ensure_invertible(otf: &Otf) -> Result<()> {
    let (magnitude, u, v) = otf.min_magnitude();
    if magnitude < VANISHING_OTF {
        return Err(DeconvError::IllPosed { u, v, magnitude });
    }
    Ok(())
}

/// Frequency-domain Wiener filter `conj(H) G / (|H|^2 + nsr)`.
pub fn wiener(g: &Image, k: &Kernel, p: WienerParams) -> Result<Image> {
    p.validate()?;
    let conv = Convolver::new(k, g.width(), g.height())?;
    if p.nsr == 0.0 {
        ensure_invertible(conv.otf())?;
    }
    let mut spec = conv.fft().forward_image(g);
    for (s, h) in spec.iter_mut().zip(conv.otf().values()) {
        *s = h.conj() * *s / (h.norm_sqr() + p.nsr);
    }
    conv.fft().inverse_to_image(spec)
}

/// Tikhonov-regularized inverse `conj(H) G / (|H|^2 + lambda |L|^2)` with
/// `L` the transfer function of [`LAPLACIAN`].
pub fn regularized(g: &Image, k: &Kernel, p: RegularizedParams) -> Result<Image> {
    p.validate()?;
    let conv = Convolver::new(k, g.width(), g.height())?;
    let fft = conv.fft();
    let penalty: Vec<f64> = if p.lambda == 0.0 {
        ensure_invertible(conv.otf())?;
        vec![0.0; g.len()]
    } else {
        stencil_otf(fft, &LAPLACIAN, 3, 3)
            .values()
            .iter()
            .map(|l| p.lambda * l.norm_sqr())
            .collect()
    };
    let mut spec = fft.forward_image(g);
    for (i, (s, h)) in spec.iter_mut().zip(conv.otf().values()).enumerate() {
        let denom = h.norm_sqr() + penalty[i];
        if denom < VANISHING_OTF * VANISHING_OTF {
            return Err(DeconvError::IllPosed {
                u: i % g.width(),
                v: i / g.width(),
                magnitude: denom.sqrt(),
            });
        }
        *s = h.conj() * *s / denom;
    }
    fft.inverse_to_image(spec)
}

/// Clamps negatives to zero and rejects images with no positive sample.
fn nonnegative_observation(g: &Image) -> Result<Image> {
    let clamped = g.map(|v| v.max(0.0));
    if clamped.max() <= 0.0 {
        return Err(DeconvError::DegenerateInput(
            "observed image has no positive samples".into(),
        ));
    }
    Ok(clamped)
}

fn ratio(observed: &Image, reblurred: &Image, epsilon: f64) -> Image {
    Image::from_parts(
        observed.width(),
        observed.height(),
        observed
            .data()
            .iter()
            .zip(reblurred.data())
            .map(|(&g, &c)| (g / (c + epsilon)).max(0.0))
            .collect(),
    )
}

/// `u * correction`, clamped at zero against FFT round-off.
fn multiplicative_update(u: &Image, correction: &Image) -> Image {
    Image::from_parts(
        u.width(),
        u.height(),
        u.data()
            .iter()
            .zip(correction.data())
            .map(|(&a, &b)| (a * b).max(0.0))
            .collect(),
    )
}

/// Richardson-Lucy deconvolution started from `u0 = g`.
pub fn lucy_richardson(g: &Image, k: &Kernel, p: LucyParams) -> Result<Image> {
    lucy_richardson_observed(g, k, p, |_, _| {})
}

/// As [`lucy_richardson`], calling `observer(t, u_t)` after each iteration
/// `t = 1..=iterations`.
pub fn lucy_richardson_observed(
    g: &Image,
    k: &Kernel,
    p: LucyParams,
    mut observer: impl FnMut(usize, &Image),
) -> Result<Image> {
    p.validate()?;
    let g = nonnegative_observation(g)?;
    let conv = Convolver::new(k, g.width(), g.height())?;
    let mut u = g.clone();
    for t in 1..=p.iterations {
        let reblurred = conv.convolve(&u)?;
        let r = ratio(&g, &reblurred, p.epsilon);
        u = multiplicative_update(&u, &conv.correlate(&r)?);
        observer(t, &u);
    }
    Ok(u)
}

/// Suppresses a correction ratio that is within `threshold` of 1.
pub fn damp_ratio(ratio: f64, threshold: f64) -> f64 {
    if (ratio - 1.0).abs() < threshold {
        1.0
    } else {
        ratio
    }
}

/// One alternating image/kernel update of blind Richardson-Lucy.
struct BlindStep<'a> {
    fft: &'a Fft2d,
    g: &'a Image,
    params: BlindParams,
}

impl BlindStep<'_> {
    fn convolve_spectra(&self, a: &[Complex64], b: &[Complex64], conj_b: bool) -> Result<Image> {
        let product = a
            .iter()
            .zip(b)
            .map(|(x, y)| if conj_b { x * y.conj() } else { x * y })
            .collect();
        self.fft.inverse_to_image(product)
    }

    fn image_update(&self, u: &Image, otf: &Otf) -> Result<Image> {
        let reblurred = self.convolve_spectra(&self.fft.forward_image(u), otf.values(), false)?;
        let threshold = self.params.weight_threshold;
        let damped =
            ratio(self.g, &reblurred, self.params.epsilon).map(|r| damp_ratio(r, threshold));
        let correction =
            self.convolve_spectra(&self.fft.forward_image(&damped), otf.values(), true)?;
        Ok(multiplicative_update(u, &correction))
    }

    fn kernel_update(&self, u: &Image, k: &Kernel, otf: &Otf) -> Result<Kernel> {
        let u_spec = self.fft.forward_image(u);
        let reblurred = self.convolve_spectra(&u_spec, otf.values(), false)?;
        let r = ratio(self.g, &reblurred, self.params.epsilon);
        // cc(s) = sum_x r(x) u(x - s): the adjoint of k -> u * k
        let cc = self.convolve_spectra(&self.fft.forward_image(&r), &u_spec, true)?;
        let mass = u.sum();
        if mass <= 0.0 {
            return Err(DeconvError::DegenerateInput(
                "image estimate vanished".into(),
            ));
        }
        let (w, h) = (self.g.width(), self.g.height());
        let half = self.params.psf_size / 2;
        let mut weights = Vec::with_capacity(k.weights().len());
        for ky in 0..self.params.psf_size {
            let sy = (ky + h - half) % h;
            for kx in 0..self.params.psf_size {
                let sx = (kx + w - half) % w;
                weights.push((k.get(kx, ky) * cc.get(sx, sy) / mass).max(0.0));
            }
        }
        Kernel::from_weights(self.params.psf_size, self.params.psf_size, weights)
            .map_err(|_| DeconvError::DegenerateInput("kernel estimate lost all mass".into()))
    }
}

/// Joint image/PSF estimation from a flat `psf_size^2` kernel and `u0 = g`.
pub fn blind_deconv(g: &Image, p: BlindParams) -> Result<(Image, Kernel)> {
    blind_deconv_observed(g, p, |_, _, _| {})
}

/// As [`blind_deconv`], calling `observer(t, u_t, k_t)` after each
/// alternation.
pub fn blind_deconv_observed(
    g: &Image,
    p: BlindParams,
    mut observer: impl FnMut(usize, &Image, &Kernel),
) -> Result<(Image, Kernel)> {
    p.validate()?;
    if p.psf_size > g.width() || p.psf_size > g.height() {
        return Err(DeconvError::KernelTooLarge {
            kernel_width: p.psf_size,
            kernel_height: p.psf_size,
            width: g.width(),
            height: g.height(),
        });
    }
    let g = nonnegative_observation(g)?;
    let fft = Fft2d::new(g.width(), g.height());
    let step = BlindStep {
        fft: &fft,
        g: &g,
        params: p,
    };
    let mut u = g.clone();
    let mut k = Kernel::uniform(p.psf_size)?;
    for t in 1..=p.iterations {
        let otf = psf2otf_with(&fft, &k)?;
        u = step.image_update(&u, &otf)?;
        k = step.kernel_update(&u, &k, &otf)?;
        observer(t, &u, &k);
    }
    Ok((u, k))
}

/// One damped image update from `(u, k)`, exposed so the effect of the
/// threshold can be inspected in isolation.
pub fn damped_lucy_step(
    g: &Image,
    u: &Image,
    k: &Kernel,
    weight_threshold: f64,
    epsilon: f64,
) -> Result<Image> {
    g.ensure_same_shape(u)?;
    let fft = Fft2d::new(g.width(), g.height());
    if k.width() > g.width() || k.height() > g.height() {
        return Err(DeconvError::KernelTooLarge {
            kernel_width: k.width(),
            kernel_height: k.height(),
            width: g.width(),
            height: g.height(),
        });
    }
    let step = BlindStep {
        fft: &fft,
        g,
        params: BlindParams {
            psf_size: k.width(),
            iterations: 1,
            weight_threshold,
            epsilon,
        },
    };
    step.image_update(u, &psf2otf_with(&fft, k)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::gaussian_kernel;
    use crate::metrics::rmse;
    use crate::spectral::convolve_fft;

    fn texture(w: usize, h: usize) -> Image {
        Image::from_fn(w, h, |x, y| {
            let (x, y) = (x as f64, y as f64);
            0.5 + 0.25 * (0.7 * x).sin() * (0.45 * y + 0.3).cos() + 0.1 * ((x * y) * 0.05).sin()
        })
        .unwrap()
    }

    #[test]
    fn parameter_validation() {
        assert!(WienerParams::new(-1.0).is_err());
        assert!(RegularizedParams::new(f64::NAN).is_err());
        assert!(LucyParams::new(0).is_err());
        assert!(BlindParams::new(4, 10, 0.2).is_err());
        assert!(BlindParams::new(5, 0, 0.2).is_err());
        assert!(BlindParams::new(5, 10, 1.0).is_err());
        assert!(BlindParams::new(5, 10, -0.1).is_err());
    }

    #[test]
    fn wiener_inverts_exact_blur() {
        let f = texture(32, 24);
        let k = gaussian_kernel(5, 0.6).unwrap();
        let g = convolve_fft(&f, &k).unwrap();
        let restored = wiener(&g, &k, WienerParams { nsr: 0.0 }).unwrap();
        assert!(rmse(&restored, &f).unwrap() < 1e-6);
    }

    #[test]
    fn delta_kernel_is_identity_for_linear_filters() {
        let g = texture(16, 16);
        let w = wiener(&g, &Kernel::delta(), WienerParams { nsr: 0.0 }).unwrap();
        let r = regularized(&g, &Kernel::delta(), RegularizedParams { lambda: 0.0 }).unwrap();
        for img in [w, r] {
            for (a, b) in img.data().iter().zip(g.data()) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn unregularized_lambda_matches_inverse_wiener() {
        let g = texture(20, 20);
        let k = gaussian_kernel(3, 0.8).unwrap();
        let w = wiener(&g, &k, WienerParams { nsr: 0.0 }).unwrap();
        let r = regularized(&g, &k, RegularizedParams { lambda: 0.0 }).unwrap();
        for (a, b) in w.data().iter().zip(r.data()) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn vanishing_transfer_function_is_ill_posed() {
        // a 2-tap box on an even-width grid has a zero at Nyquist
        let k = Kernel::from_weights(3, 1, vec![0.5, 0.5, 0.0]).unwrap();
        let g = texture(8, 4);
        assert!(matches!(
            wiener(&g, &k, WienerParams { nsr: 0.0 }),
            Err(DeconvError::IllPosed { .. })
        ));
        assert!(matches!(
            regularized(&g, &k, RegularizedParams { lambda: 0.0 }),
            Err(DeconvError::IllPosed { .. })
        ));
        assert!(wiener(&g, &k, WienerParams { nsr: 1e-3 }).is_ok());
        assert!(regularized(&g, &k, RegularizedParams { lambda: 1e-3 }).is_ok());
    }

    #[test]
    fn lucy_delta_kernel_keeps_input() {
        let g = texture(12, 10);
        let mut max_dev: f64 = 0.0;
        lucy_richardson_observed(&g, &Kernel::delta(), LucyParams::new(5).unwrap(), |_, u| {
            max_dev = max_dev.max(rmse(u, &g).unwrap());
        })
        .unwrap();
        // each step can shift a pixel by at most epsilon
        assert!(max_dev < 1e-10, "{max_dev}");
    }

    #[test]
    fn lucy_constant_is_fixed_point() {
        let g = Image::filled(16, 16, 0.4).unwrap();
        let u = lucy_richardson(
            &g,
            &gaussian_kernel(5, 1.0).unwrap(),
            LucyParams::new(8).unwrap(),
        )
        .unwrap();
        for v in u.data() {
            assert!((v - 0.4).abs() < 1e-10);
        }
    }

    #[test]
    fn lucy_rejects_black_input() {
        let g = Image::new(3, 3, vec![0.0, -0.1, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, -1.0]).unwrap();
        assert!(matches!(
            lucy_richardson(&g, &Kernel::delta(), LucyParams::new(1).unwrap()),
            Err(DeconvError::DegenerateInput(_))
        ));
        assert!(matches!(
            blind_deconv(&g, BlindParams::new(1, 1, 0.0).unwrap()),
            Err(DeconvError::DegenerateInput(_))
        ));
    }

    #[test]
    fn blind_rejects_oversized_support() {
        let g = texture(8, 8);
        assert!(matches!(
            blind_deconv(&g, BlindParams::new(9, 1, 0.0).unwrap()),
            Err(DeconvError::KernelTooLarge { .. })
        ));
    }

    #[test]
    fn near_total_damping_freezes_image() {
        // low-contrast input keeps every correction ratio inside (0.01, 1.99)
        let g = texture(32, 32).map(|v| 0.4 + 0.2 * v);
        let (u, k) = blind_deconv(&g, BlindParams::new(5, 10, 0.99).unwrap()).unwrap();
        assert!(rmse(&u, &g).unwrap() < 1e-6);
        assert_eq!((k.width(), k.height()), (5, 5));
    }

    #[test]
    fn damping_rule() {
        assert_eq!(damp_ratio(1.1, 0.2), 1.0);
        assert_eq!(damp_ratio(0.85, 0.2), 1.0);
        assert_eq!(damp_ratio(1.3, 0.2), 1.3);
        assert_eq!(damp_ratio(1.0001, 0.0), 1.0001);
    }
}

//! Point spread functions: Gaussian, circular average and linear motion.
//!
//! Every constructor returns a [`Kernel`] with odd dimensions, non-negative
//! weights and unit mass, so the kernel center is always `(kw / 2, kh / 2)`.

use std::fmt::Write as _;

use crate::error::{DeconvError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Kernel {
    width: usize,
    height: usize,
    weights: Vec<f64>,
}

impl Kernel {
    /// Normalizes `weights` to unit sum after checking the shape and sign
    /// constraints.
    pub fn from_weights(width: usize, height: usize, weights: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 || width.is_multiple_of(2) || height.is_multiple_of(2) {
            return Err(DeconvError::InvalidKernel(format!(
                "dimensions must be odd and positive, got {width}x{height}"
            )));
        }
        if weights.len() != width * height {
            return Err(DeconvError::LengthMismatch {
                width,
                height,
                len: weights.len(),
            });
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(DeconvError::InvalidKernel(
                "weights must be finite and non-negative".into(),
            ));
        }
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(DeconvError::InvalidKernel("weights sum to zero".into()));
        }
        // already-normalized input (e.g. parsed kernel text) is kept bit-exact
        let weights = if (total - 1.0).abs() <= 1e-12 {
            weights
        } else {
            weights.into_iter().map(|w| w / total).collect()
        };
        Ok(Self {
            width,
            height,
            weights,
        })
    }

    /// The 1x1 identity kernel.
    pub fn delta() -> Self {
        Self {
            width: 1,
            height: 1,
            weights: vec![1.0],
        }
    }

    /// A flat `size x size` kernel.
    pub fn uniform(size: usize) -> Result<Self> {
        Self::from_weights(size, size, vec![1.0; size * size])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.weights[y * self.width + x]
    }

    pub fn center(&self) -> (usize, usize) {
        (self.width / 2, self.height / 2)
    }

    pub fn center_weight(&self) -> f64 {
        let (cx, cy) = self.center();
        self.get(cx, cy)
    }

    /// Rotates the kernel by 180 degrees (the adjoint of convolution).
    pub fn flipped(&self) -> Kernel {
        let mut weights = self.weights.clone();
        weights.reverse();
        Kernel {
            width: self.width,
            height: self.height,
            weights,
        }
    }

    pub fn transposed(&self) -> Kernel {
        let mut weights = Vec::with_capacity(self.weights.len());
        for x in 0..self.width {
            for y in 0..self.height {
                weights.push(self.get(x, y));
            }
        }
        Kernel {
            width: self.height,
            height: self.width,
            weights,
        }
    }

    /// Embeds the kernel at the center of a larger odd-sized frame.
    pub fn padded_to(&self, width: usize, height: usize) -> Result<Kernel> {
        if width < self.width
            || height < self.height
            || width.is_multiple_of(2)
            || height.is_multiple_of(2)
        {
            return Err(DeconvError::InvalidKernel(format!(
                "cannot pad {}x{} kernel to {width}x{height}",
                self.width, self.height
            )));
        }
        let ox = (width - self.width) / 2;
        let oy = (height - self.height) / 2;
        let mut weights = vec![0.0; width * height];
        for y in 0..self.height {
            let src = &self.weights[y * self.width..(y + 1) * self.width];
            weights[(y + oy) * width + ox..(y + oy) * width + ox + self.width].copy_from_slice(src);
        }
        Ok(Kernel {
            width,
            height,
            weights,
        })
    }

    /// Serializes as `K <kw> <kh>` followed by one line of weights per row.
    pub fn to_text(&self) -> String {
        let mut out = format!("K {} {}\n", self.width, self.height);
        for row in self.weights.chunks_exact(self.width) {
            let line: Vec<String> = row.iter().map(|w| w.to_string()).collect();
            let _ = writeln!(out, "{}", line.join(" "));
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Kernel> {
        let malformed = |detail: String| DeconvError::Malformed {
            what: "kernel text",
            detail,
        };
        let mut tokens = text.split_ascii_whitespace();
        if tokens.next() != Some("K") {
            return Err(malformed("missing 'K' tag".into()));
        }
        let mut dim = || -> Result<usize> {
            tokens
                .next()
                .and_then(|t| t.parse().ok())
                .ok_or_else(|| malformed("bad dimensions".into()))
        };
        let (width, height) = (dim()?, dim()?);
        let weights = tokens
            .map(|t| {
                t.parse::<f64>()
                    .map_err(|e| malformed(format!("{t:?}: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Kernel::from_weights(width, height, weights)
    }
}

/// Sampled isotropic Gaussian with standard deviation `alfa`, truncated to
/// `hsize x hsize`.
pub fn gaussian_kernel(hsize: usize, alfa: f64) -> Result<Kernel> {
    if hsize == 0 || hsize.is_multiple_of(2) {
        return Err(DeconvError::InvalidParameter(format!(
            "gaussian size must be odd and positive, got {hsize}"
        )));
    }
    if !(alfa > 0.0 && alfa.is_finite()) {
        return Err(DeconvError::InvalidParameter(format!(
            "gaussian alfa must be positive, got {alfa}"
        )));
    }
    let c = (hsize / 2) as f64;
    let denom = 2.0 * alfa * alfa;
    let mut weights = Vec::with_capacity(hsize * hsize);
    for i in 0..hsize {
        for j in 0..hsize {
            let (di, dj) = (i as f64 - c, j as f64 - c);
            weights.push((-(di * di + dj * dj) / denom).exp());
        }
    }
    Kernel::from_weights(hsize, hsize, weights)
}

/// Radius of the circular averaging disk for horizontal/vertical blur sizes.
pub fn average_radius(h: f64, v: f64) -> f64 {
    h.hypot(v)
}

/// Uniform disk of radius `sqrt(h^2 + v^2)` on a `2*ceil(R)+1` square grid.
pub fn average_kernel(h: f64, v: f64) -> Result<Kernel> {
    if !(h >= 0.0 && v >= 0.0 && h.is_finite() && v.is_finite()) || (h == 0.0 && v == 0.0) {
        return Err(DeconvError::InvalidParameter(format!(
            "average blur needs h, v >= 0 and not both zero, got ({h}, {v})"
        )));
    }
    let radius = average_radius(h, v);
    // compare squared distances against h^2 + v^2 directly so that integer
    // radii such as the 3-4-5 triple are not subject to sqrt rounding
    let r2 = h * h + v * v;
    let half = radius.ceil() as usize;
    let side = 2 * half + 1;
    let mut weights = Vec::with_capacity(side * side);
    for y in 0..side {
        for x in 0..side {
            let dx = x as f64 - half as f64;
            let dy = y as f64 - half as f64;
            weights.push(if dx * dx + dy * dy <= r2 { 1.0 } else { 0.0 });
        }
    }
    Kernel::from_weights(side, side, weights)
}

/// Line segment of `length` pixels through the center at `angle` degrees
/// (counter-clockwise from the +x axis, image y pointing down).
///
/// The segment is sampled at `ceil(length)` evenly spaced points between its
/// endpoints, each carrying equal mass and splatted bilinearly onto the four
/// surrounding pixels. The result is cropped to the smallest centered odd
/// box holding all non-zero weights.
pub fn motion_kernel(length: f64, angle: f64) -> Result<Kernel> {
    if !(length >= 1.0 && length.is_finite()) {
        return Err(DeconvError::InvalidParameter(format!(
            "motion length must be >= 1, got {length}"
        )));
    }
    if !(0.0..360.0).contains(&angle) {
        return Err(DeconvError::InvalidParameter(format!(
            "motion angle must be in [0, 360), got {angle}"
        )));
    }
    // a segment has no orientation: fold onto [0, 180)
    let folded = if angle >= 180.0 { angle - 180.0 } else { angle };
    let (cos, sin) = cos_sin_degrees(folded);

    let samples = length.ceil() as usize;
    let half_span = (length - 1.0) / 2.0;
    let step = if samples > 1 {
        (length - 1.0) / (samples - 1) as f64
    } else {
        0.0
    };

    let pad = half_span.ceil() as usize + 1;
    let side = 2 * pad + 1;
    let mut grid = vec![0.0; side * side];
    let mass = 1.0 / samples as f64;
    for s in 0..samples {
        let t = -half_span + s as f64 * step;
        let px = t * cos + pad as f64;
        let py = -t * sin + pad as f64;
        let (x0, y0) = (px.floor(), py.floor());
        let (fx, fy) = (px - x0, py - y0);
        let (x0, y0) = (x0 as usize, y0 as usize);
        for (dx, dy, w) in [
            (0, 0, (1.0 - fx) * (1.0 - fy)),
            (1, 0, fx * (1.0 - fy)),
            (0, 1, (1.0 - fx) * fy),
            (1, 1, fx * fy),
        ] {
            if w > 0.0 {
                grid[(y0 + dy) * side + x0 + dx] += mass * w;
            }
        }
    }

    let (mut reach_x, mut reach_y) = (0, 0);
    for y in 0..side {
        for x in 0..side {
            if grid[y * side + x] > 0.0 {
                reach_x = reach_x.max(x.abs_diff(pad));
                reach_y = reach_y.max(y.abs_diff(pad));
            }
        }
    }
    let (kw, kh) = (2 * reach_x + 1, 2 * reach_y + 1);
    let mut weights = Vec::with_capacity(kw * kh);
    for y in pad - reach_y..=pad + reach_y {
        weights.extend_from_slice(&grid[y * side + pad - reach_x..=y * side + pad + reach_x]);
    }
    Kernel::from_weights(kw, kh, weights)
}

/// The axis-aligned angles come out exact so that 0/90 degree segments do
/// not leak `1e-17` weights into neighboring rows.
fn cos_sin_degrees(deg: f64) -> (f64, f64) {
    if deg == 0.0 {
        (1.0, 0.0)
    } else if deg == 90.0 {
        (0.0, 1.0)
    } else {
        let r = deg.to_radians();
        (r.cos(), r.sin())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_kernel_invariants(k: &Kernel) {
        assert!(k.width() % 2 == 1 && k.height() % 2 == 1);
        assert!(k.weights().iter().all(|&w| w >= 0.0));
        let sum: f64 = k.weights().iter().sum();
        assert!((sum - 1.0).abs() < 1e-12, "sum {sum}");
    }

    #[test]
    fn gaussian_size_one_is_delta() {
        assert_eq!(gaussian_kernel(1, 0.7).unwrap(), Kernel::delta());
    }

    #[test]
    fn narrow_gaussian_is_nearly_delta() {
        let k = gaussian_kernel(19, 0.3).unwrap();
        assert_kernel_invariants(&k);
        // by hand: neighbours carry exp(-1/0.18) relative to the center
        let e1 = (-1.0f64 / 0.18).exp();
        assert!(k.center_weight() > 0.98 && k.center_weight() < 1.0);
        let (cx, cy) = k.center();
        assert!((k.get(cx + 1, cy) / k.center_weight() - e1).abs() < 1e-12);
        let max_off_center = k
            .weights()
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != cy * 19 + cx)
            .map(|(_, &w)| w)
            .fold(0.0, f64::max);
        assert!((max_off_center - e1 * k.center_weight()).abs() < 1e-15);
        // all cells beyond the 4-neighbourhood fall below 1e-4
        for y in 0..19usize {
            for x in 0..19usize {
                if x.abs_diff(cx) + y.abs_diff(cy) > 1 {
                    assert!(k.get(x, y) < 1e-4);
                }
            }
        }
    }

    #[test]
    fn wide_gaussian_is_flat() {
        let k = gaussian_kernel(3, 1e6).unwrap();
        for &w in k.weights() {
            assert!((w - 1.0 / 9.0).abs() < 1e-9);
        }
    }

    #[test]
    fn gaussian_rejects_bad_parameters() {
        assert!(gaussian_kernel(4, 1.0).is_err());
        assert!(gaussian_kernel(0, 1.0).is_err());
        assert!(gaussian_kernel(3, 0.0).is_err());
        assert!(gaussian_kernel(3, -1.0).is_err());
    }

    #[test]
    fn average_three_four_five() {
        assert_eq!(average_radius(3.0, 4.0), 5.0);
        let k = average_kernel(3.0, 4.0).unwrap();
        assert_eq!((k.width(), k.height()), (11, 11));
        assert_kernel_invariants(&k);
        // (3,4) offset lies exactly on the rim and is included
        assert!(k.get(5 + 3, 5 + 4) > 0.0);
        assert_eq!(k.get(0, 0), 0.0);
    }

    #[test]
    fn average_unit_radius_is_plus_shape() {
        let k = average_kernel(1.0, 0.0).unwrap();
        assert_eq!((k.width(), k.height()), (3, 3));
        let expected = [0.0, 0.2, 0.0, 0.2, 0.2, 0.2, 0.0, 0.2, 0.0];
        for (w, e) in k.weights().iter().zip(expected) {
            assert!((w - e).abs() < 1e-15);
        }
    }

    #[test]
    fn average_rejects_zero_radius() {
        assert!(average_kernel(0.0, 0.0).is_err());
        assert!(average_kernel(-1.0, 2.0).is_err());
    }

    #[test]
    fn motion_degenerate_and_axis_aligned() {
        assert_eq!(motion_kernel(1.0, 37.0).unwrap(), Kernel::delta());
        let k = motion_kernel(5.0, 0.0).unwrap();
        assert_eq!((k.width(), k.height()), (5, 1));
        for &w in k.weights() {
            assert!((w - 0.2).abs() < 1e-15);
        }
        assert_eq!(motion_kernel(5.0, 90.0).unwrap(), k.transposed());
    }

    #[test]
    fn motion_has_no_orientation() {
        for angle in [0.0, 12.5, 45.0, 90.0, 133.0, 179.0] {
            let a = motion_kernel(7.3, angle).unwrap();
            let b = motion_kernel(7.3, angle + 180.0).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn motion_rejects_bad_parameters() {
        assert!(motion_kernel(0.5, 0.0).is_err());
        assert!(motion_kernel(3.0, 360.0).is_err());
        assert!(motion_kernel(3.0, -1.0).is_err());
    }

    #[test]
    fn from_weights_validation() {
        assert!(Kernel::from_weights(2, 1, vec![0.5, 0.5]).is_err());
        assert!(Kernel::from_weights(1, 1, vec![-1.0]).is_err());
        assert!(Kernel::from_weights(3, 1, vec![0.0; 3]).is_err());
        let k = Kernel::from_weights(3, 1, vec![1.0, 2.0, 1.0]).unwrap();
        assert_eq!(k.weights(), &[0.25, 0.5, 0.25]);
    }

    #[test]
    fn padding_keeps_center() {
        let k = gaussian_kernel(3, 1.0).unwrap();
        let p = k.padded_to(7, 5).unwrap();
        assert_eq!(p.center_weight(), k.center_weight());
        assert_eq!(p.get(2, 1), k.get(0, 0));
        assert!(k.padded_to(2, 3).is_err());
    }

    #[test]
    fn text_format() {
        let k = Kernel::from_weights(3, 1, vec![1.0, 2.0, 1.0]).unwrap();
        assert_eq!(k.to_text(), "K 3 1\n0.25 0.5 0.25\n");
        let g = gaussian_kernel(5, 1.3).unwrap();
        assert_eq!(Kernel::from_text(&g.to_text()).unwrap(), g);
        assert!(Kernel::from_text("X 1 1\n1").is_err());
        assert!(Kernel::from_text("K 3 1\n1 2").is_err());
    }
}

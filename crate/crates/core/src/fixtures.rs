//! Synthetic test images shipped with the repository.

use crate::image::Image;

pub const FIXTURE_SIZE: usize = 128;
pub const CHECKER_SQUARE: usize = 16;

/// Black/white board of `square`-pixel cells, white in the top-left cell.
pub fn checkerboard(size: usize, square: usize) -> Image {
    Image::from_fn(size, size, |x, y| {
        if (x / square + y / square).is_multiple_of(2) {
            1.0
        } else {
            0.0
        }
    })
    .expect("positive fixture size")
}

/// Cone falling linearly from 1 at the image center to 0 at the corners.
pub fn radial_gradient(size: usize) -> Image {
    let c = (size as f64 - 1.0) / 2.0;
    let r_max = (2.0 * c * c).sqrt().max(f64::MIN_POSITIVE);
    Image::from_fn(size, size, |x, y| {
        let r = (x as f64 - c).hypot(y as f64 - c);
        1.0 - r / r_max
    })
    .expect("positive fixture size")
}

/// The two shipped fixtures by file stem.
pub fn shipped() -> [(&'static str, Image); 2] {
    [
        ("checkerboard", checkerboard(FIXTURE_SIZE, CHECKER_SQUARE)),
        ("radial", radial_gradient(FIXTURE_SIZE)),
    ]
}

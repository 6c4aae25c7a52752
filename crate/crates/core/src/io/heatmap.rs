//! Grayscale PGM (P5) images of the order parameter
//!
//! theta in [-1, 1] maps linearly onto [0, 255] as floor((theta + 1) * 127.5 + 0.5),
//! so theta = 0 gives 128. Image row r holds the grid row x2 = 2 pi r / N.

use std::fs;
use std::path::Path;

use crate::spectral::ScalarField;

pub fn pixel(theta: f64) -> u8 {
    ((theta + 1.0) * 127.5 + 0.5).floor().clamp(0.0, 255.0) as u8
}

pub fn encode_pgm(theta: &ScalarField) -> Vec<u8> {
    let n = theta.grid().n();
    let mut out = format!("P5\n{n} {n}\n255\n").into_bytes();
    out.extend(theta.to_values().into_iter().map(pixel));
    out
}

pub fn write_heatmap(path: &Path, theta: &ScalarField) -> std::io::Result<()> {
    fs::write(path, encode_pgm(theta))
        .map_err(|e| std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::Grid;

    #[test]
    fn gray_levels() {
        assert_eq!(pixel(0.0), 128);
        assert_eq!(pixel(1.0), 255);
        assert_eq!(pixel(-1.0), 0);
        assert_eq!(pixel(1.5), 255);
        assert_eq!(pixel(-3.0), 0);
    }

    #[test]
    fn zero_field_is_uniform_gray() {
        let g = Grid::new(8).unwrap();
        let img = encode_pgm(&ScalarField::zeros(&g));
        let header = b"P5\n8 8\n255\n";
        assert_eq!(&img[..header.len()], header);
        assert!(img[header.len()..].iter().all(|&p| p == 128));
        assert_eq!(img.len(), header.len() + 64);
    }

    #[test]
    fn row_zero_is_x2_zero() {
        let g = Grid::new(8).unwrap();
        let f = ScalarField::from_modes(&g, &[(0, 1, 0.5, 0.0)]).unwrap();
        let img = encode_pgm(&f);
        let body = &img[img.len() - 64..];
        assert!(body[..8].iter().all(|&p| p == pixel(0.5)));
        assert!(body[32..40].iter().all(|&p| p == pixel(-0.5)));
    }
}

use crate::error::{Error, Result};

/// `(channels, height, width)`.
pub type Shape = (usize, usize, usize);

/// Channel-major (CHW) image with values nominally in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    shape: Shape,
    data: Vec<f64>,
}

impl Image {
    pub fn new(shape: Shape, data: Vec<f64>) -> Result<Self> {
        let expected = shape.0 * shape.1 * shape.2;
        if data.len() != expected {
            return Err(Error::LengthMismatch {
                expected,
                actual: data.len(),
            });
        }
        Ok(Image { shape, data })
    }

    pub fn zeros(shape: Shape) -> Self {
        Image {
            shape,
            data: vec![0.0; shape.0 * shape.1 * shape.2],
        }
    }

    pub fn filled(shape: Shape, value: f64) -> Self {
        Image {
            shape,
            data: vec![value; shape.0 * shape.1 * shape.2],
        }
    }

    pub fn from_u8(shape: Shape, pixels: &[u8]) -> Result<Self> {
        Image::new(shape, pixels.iter().map(|&p| f64::from(p) / 255.0).collect())
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// Plane of channel `c` as a row-major `height × width` slice.
    pub fn plane(&self, c: usize) -> &[f64] {
        let n = self.shape.1 * self.shape.2;
        &self.data[c * n..(c + 1) * n]
    }

    pub fn check_shape(&self, expected: Shape) -> Result<()> {
        if self.shape == expected {
            Ok(())
        } else {
            Err(Error::Shape {
                expected,
                actual: self.shape,
            })
        }
    }
}

/// Maps between an image and its grid of square patches.
///
/// Patch `p` covers rows `py*size..` and columns `px*size..` with
/// `p = py * patches_x + px`; inside a patch the order is channel, row, column.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PatchGrid {
    pub shape: Shape,
    pub size: usize,
}

impl PatchGrid {
    pub fn patches_x(&self) -> usize {
        self.shape.2 / self.size
    }

    pub fn count(&self) -> usize {
        (self.shape.1 / self.size) * self.patches_x()
    }

    pub fn patch_len(&self) -> usize {
        self.shape.0 * self.size * self.size
    }

    /// Image index of element `k` of patch `p`.
    #[inline]
    pub fn pixel_index(&self, p: usize, k: usize) -> usize {
        let (_, h, w) = self.shape;
        let s = self.size;
        let (py, px) = (p / self.patches_x(), p % self.patches_x());
        let c = k / (s * s);
        let dy = (k / s) % s;
        let dx = k % s;
        c * h * w + (py * s + dy) * w + px * s + dx
    }

    pub fn extract(&self, image: &[f64], out: &mut [f64]) {
        let n = self.patch_len();
        for p in 0..self.count() {
            for k in 0..n {
                out[p * n + k] = image[self.pixel_index(p, k)];
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn patch_grid_is_a_permutation() {
        let grid = PatchGrid {
            shape: (3, 4, 6),
            size: 2,
        };
        assert_eq!(grid.count(), 6);
        let mut seen = vec![false; 72];
        for p in 0..grid.count() {
            for k in 0..grid.patch_len() {
                let i = grid.pixel_index(p, k);
                assert!(!seen[i]);
                seen[i] = true;
            }
        }
        assert!(seen.into_iter().all(|s| s));
    }

    #[test]
    fn u8_normalisation() {
        let img = Image::from_u8((1, 1, 2), &[255, 0]).unwrap();
        assert_eq!(img.data(), &[1.0, 0.0]);
    }
}

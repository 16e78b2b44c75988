//! Hyperspectral cube data model.
//!
//! A cube holds `n1 x n2 x n3` samples (rows, columns, spectral bands) as one
//! flat `f64` vector. The flat layout is column-major within each band and
//! bands are stacked in order, so band `k` occupies the contiguous range
//! `[k*n1*n2, (k+1)*n1*n2)`. Entry `(i, j, k)` lives at
//! `k*n1*n2 + j*n1 + i`. Every operator in this crate assumes this layout.

use crate::error::{Error, Result};

/// Dimensions of a hyperspectral cube.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CubeDims {
    /// Number of rows.
    pub n1: usize,
    /// Number of columns.
    pub n2: usize,
    /// Number of spectral bands.
    pub n3: usize,
}

impl CubeDims {
    pub fn new(n1: usize, n2: usize, n3: usize) -> Result<Self> {
        if n1 == 0 || n2 == 0 || n3 == 0 {
            return Err(Error::InvalidArgument(format!(
                "cube dimensions must be positive, got {n1}x{n2}x{n3}"
            )));
        }
        Ok(Self { n1, n2, n3 })
    }

    /// Total number of entries `n1*n2*n3`.
    pub fn len(&self) -> usize {
        self.n1 * self.n2 * self.n3
    }

    pub fn is_empty(&self) -> bool {
        false // dimensions are validated positive
    }

    /// Pixels per band, `n1*n2`.
    pub fn pixels(&self) -> usize {
        self.n1 * self.n2
    }

    /// Flat index of entry `(i, j, k)`: `k*n1*n2 + j*n1 + i`.
    ///
    /// Panics if any coordinate is out of range.
    pub fn flat_index(&self, i: usize, j: usize, k: usize) -> usize {
        assert!(
            i < self.n1 && j < self.n2 && k < self.n3,
            "index ({i},{j},{k}) out of range for {}x{}x{} cube",
            self.n1,
            self.n2,
            self.n3
        );
        k * self.n1 * self.n2 + j * self.n1 + i
    }

    /// Inverse of [`flat_index`](Self::flat_index).
    pub fn unflatten(&self, idx: usize) -> (usize, usize, usize) {
        assert!(idx < self.len(), "flat index {idx} out of range");
        let per_band = self.pixels();
        let k = idx / per_band;
        let r = idx % per_band;
        (r % self.n1, r / self.n1, k)
    }

    /// Flat pixel index within one band: `j*n1 + i`.
    pub fn pixel_index(&self, i: usize, j: usize) -> usize {
        assert!(i < self.n1 && j < self.n2, "pixel ({i},{j}) out of range");
        j * self.n1 + i
    }
}

/// An `n1 x n2 x n3` hyperspectral cube with finite entries.
#[derive(Clone, Debug, PartialEq)]
pub struct HsiCube {
    dims: CubeDims,
    data: Vec<f64>,
}

impl HsiCube {
    /// Wraps a flat vector as a cube, validating length and finiteness.
    pub fn new(n1: usize, n2: usize, n3: usize, data: Vec<f64>) -> Result<Self> {
        let dims = CubeDims::new(n1, n2, n3)?;
        if data.len() != dims.len() {
            return Err(Error::DimMismatch {
                what: "cube data",
                expected: dims.len(),
                actual: data.len(),
            });
        }
        if let Some(index) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(Self { dims, data })
    }

    /// A cube with every entry equal to `value`.
    pub fn constant(n1: usize, n2: usize, n3: usize, value: f64) -> Result<Self> {
        let dims = CubeDims::new(n1, n2, n3)?;
        if !value.is_finite() {
            return Err(Error::NonFinite { index: 0 });
        }
        Ok(Self {
            dims,
            data: vec![value; dims.len()],
        })
    }

    /// Builds a cube by evaluating `f(i, j, k)` at every entry.
    pub fn from_fn(
        n1: usize,
        n2: usize,
        n3: usize,
        mut f: impl FnMut(usize, usize, usize) -> f64,
    ) -> Result<Self> {
        let dims = CubeDims::new(n1, n2, n3)?;
        let mut data = vec![0.0; dims.len()];
        for k in 0..n3 {
            for j in 0..n2 {
                for i in 0..n1 {
                    data[dims.flat_index(i, j, k)] = f(i, j, k);
                }
            }
        }
        Self::new(n1, n2, n3, data)
    }

    pub fn dims(&self) -> CubeDims {
        self.dims
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.data[self.dims.flat_index(i, j, k)]
    }

    /// The contiguous slice holding band `k`.
    pub fn band(&self, k: usize) -> &[f64] {
        assert!(k < self.dims.n3, "band {k} out of range");
        let p = self.dims.pixels();
        &self.data[k * p..(k + 1) * p]
    }
}

/// A grayscale image on the `n1 x n2` pixel grid, flat in column-major order.
#[derive(Clone, Debug, PartialEq)]
pub struct GuideImage {
    n1: usize,
    n2: usize,
    data: Vec<f64>,
}

impl GuideImage {
    pub fn new(n1: usize, n2: usize, data: Vec<f64>) -> Result<Self> {
        if n1 == 0 || n2 == 0 {
            return Err(Error::InvalidArgument(format!(
                "guide dimensions must be positive, got {n1}x{n2}"
            )));
        }
        if data.len() != n1 * n2 {
            return Err(Error::DimMismatch {
                what: "guide data",
                expected: n1 * n2,
                actual: data.len(),
            });
        }
        if let Some(index) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(Self { n1, n2, data })
    }

    pub fn n1(&self) -> usize {
        self.n1
    }

    pub fn n2(&self) -> usize {
        self.n2
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        assert!(i < self.n1 && j < self.n2, "pixel ({i},{j}) out of range");
        self.data[j * self.n1 + i]
    }
}

/// Averages a cube over the spectral axis: `guide[i,j] = mean_k cube[i,j,k]`.
///
/// This attenuates per-band noise while keeping the spatial structure, which
/// makes the result a usable guide for graph construction even when the input
/// is a noisy observation.
pub fn band_mean(cube: &HsiCube) -> GuideImage {
    let dims = cube.dims();
    let p = dims.pixels();
    let mut acc = vec![0.0; p];
    for k in 0..dims.n3 {
        let band = cube.band(k);
        for (a, &v) in acc.iter_mut().zip(band) {
            *a += v;
        }
    }
    let inv = 1.0 / dims.n3 as f64;
    for a in &mut acc {
        *a *= inv;
    }
    GuideImage::new(dims.n1, dims.n2, acc).expect("band mean of a valid cube is valid")
}

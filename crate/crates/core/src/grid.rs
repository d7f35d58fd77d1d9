//! Dense 2D grids with x-fastest storage.
//!
//! Every per-pixel quantity in the slice-wise pipeline (masks, priors,
//! likelihoods, distance maps) is a [`Grid2`] of some element type.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid2<T> {
    nx: usize,
    ny: usize,
    data: Vec<T>,
}

/// Binary per-pixel labeling; `true` is the foreground class.
pub type LabelMask = Grid2<bool>;

/// Real-valued per-pixel field (probabilities, costs, distances).
pub type ScalarField = Grid2<f64>;

/// Per-pixel prior probability in `[0, 1]`.
pub type ProbabilityMap = Grid2<f64>;

/// Signed Euclidean distance to a mask boundary, negative inside.
pub type DistanceMap = Grid2<f64>;

/// Per-pixel negative log-likelihood.
pub type LikelihoodField = Grid2<f64>;

impl<T: Clone> Grid2<T> {
    pub fn filled(nx: usize, ny: usize, value: T) -> Self {
        Self {
            nx,
            ny,
            data: vec![value; nx * ny],
        }
    }
}

impl<T> Grid2<T> {
    pub fn from_vec(nx: usize, ny: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != nx * ny {
            return Err(Error::DimensionMismatch(format!(
                "grid {nx}x{ny} needs {} values, got {}",
                nx * ny,
                data.len()
            )));
        }
        Ok(Self { nx, ny, data })
    }

    pub fn from_fn(nx: usize, ny: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(nx * ny);
        for y in 0..ny {
            for x in 0..nx {
                data.push(f(x, y));
            }
        }
        Self { nx, ny, data }
    }

    #[inline]
    pub fn nx(&self) -> usize {
        self.nx
    }

    #[inline]
    pub fn ny(&self) -> usize {
        self.ny
    }

    #[inline]
    pub fn dims(&self) -> (usize, usize) {
        (self.nx, self.ny)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.data.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn index(&self, x: usize, y: usize) -> usize {
        y * self.nx + x
    }

    #[inline]
    pub fn coords(&self, i: usize) -> (usize, usize) {
        (i % self.nx, i / self.nx)
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> &T {
        &self.data[y * self.nx + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, value: T) {
        let i = y * self.nx + x;
        self.data[i] = value;
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    pub fn same_dims<U>(&self, other: &Grid2<U>) -> bool {
        self.nx == other.nx && self.ny == other.ny
    }

    pub fn check_dims<U>(&self, other: &Grid2<U>, what: &str) -> Result<()> {
        if self.same_dims(other) {
            Ok(())
        } else {
            Err(Error::DimensionMismatch(format!(
                "{what}: {}x{} vs {}x{}",
                self.nx, self.ny, other.nx, other.ny
            )))
        }
    }

    pub fn map<U>(&self, f: impl FnMut(&T) -> U) -> Grid2<U> {
        Grid2 {
            nx: self.nx,
            ny: self.ny,
            data: self.data.iter().map(f).collect(),
        }
    }

    pub fn zip_map<U, V>(&self, other: &Grid2<U>, mut f: impl FnMut(&T, &U) -> V) -> Grid2<V> {
        assert!(self.same_dims(other), "zip_map on grids of different size");
        Grid2 {
            nx: self.nx,
            ny: self.ny,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| f(a, b))
                .collect(),
        }
    }

    /// In-bounds 4-neighbours (west, east, north, south) of pixel index `i`.
    pub fn neighbors4(&self, i: usize) -> impl Iterator<Item = usize> {
        let (x, y) = self.coords(i);
        let nx = self.nx;
        let ny = self.ny;
        [
            (x > 0).then(|| i - 1),
            (x + 1 < nx).then(|| i + 1),
            (y > 0).then(|| i - nx),
            (y + 1 < ny).then(|| i + nx),
        ]
        .into_iter()
        .flatten()
    }
}

impl LabelMask {
    pub fn empty(nx: usize, ny: usize) -> Self {
        Self::filled(nx, ny, false)
    }

    pub fn count(&self) -> usize {
        self.data.iter().filter(|&&b| b).count()
    }

    pub fn any(&self) -> bool {
        self.data.iter().any(|&b| b)
    }

    pub fn and(&self, other: &LabelMask) -> LabelMask {
        self.zip_map(other, |&a, &b| a && b)
    }

    pub fn or(&self, other: &LabelMask) -> LabelMask {
        self.zip_map(other, |&a, &b| a || b)
    }

    pub fn and_not(&self, other: &LabelMask) -> LabelMask {
        self.zip_map(other, |&a, &b| a && !b)
    }

    pub fn not(&self) -> LabelMask {
        self.map(|&b| !b)
    }

    pub fn is_subset_of(&self, other: &LabelMask) -> bool {
        self.data.iter().zip(&other.data).all(|(&a, &b)| !a || b)
    }

    /// Centroid of the foreground pixel centres, `None` when empty.
    pub fn centroid(&self) -> Option<(f64, f64)> {
        let (mut sx, mut sy, mut n) = (0.0, 0.0, 0usize);
        for (i, _) in self.data.iter().enumerate().filter(|(_, &b)| b) {
            let (x, y) = self.coords(i);
            sx += x as f64;
            sy += y as f64;
            n += 1;
        }
        (n > 0).then(|| (sx / n as f64, sy / n as f64))
    }

    /// Inclusive bounding box `(x0, y0, x1, y1)` of the foreground.
    pub fn bounding_box(&self) -> Option<(usize, usize, usize, usize)> {
        let mut bbox: Option<(usize, usize, usize, usize)> = None;
        for (i, _) in self.data.iter().enumerate().filter(|(_, &b)| b) {
            let (x, y) = self.coords(i);
            bbox = Some(match bbox {
                None => (x, y, x, y),
                Some((x0, y0, x1, y1)) => (x0.min(x), y0.min(y), x1.max(x), y1.max(y)),
            });
        }
        bbox
    }

    /// Foreground pixel coordinates in scan order.
    pub fn foreground(&self) -> Vec<(usize, usize)> {
        self.data
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(|(i, _)| self.coords(i))
            .collect()
    }

    pub fn threshold(field: &ScalarField, above: f64) -> LabelMask {
        field.map(|&v| v > above)
    }
}

//! Fixed 2-D grid geometry shared by all map layers.
//!
//! Indexing is row-major from the origin corner: cell (0, 0) is the cell
//! whose lower-left corner sits at `origin`, rows advance along +y and
//! columns along +x. Cell centers are offset by half a resolution.

use serde::{Deserialize, Serialize};

use crate::error::{IppError, Result};

/// A rectangular grid of square cells in the world plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridGeometry {
    /// Lower-left corner of the grid (m).
    pub origin: [f64; 2],
    /// Width along x, height along y (m).
    pub extent: [f64; 2],
    /// Cell edge length (m).
    pub resolution: f64,
    pub rows: usize,
    pub cols: usize,
}

impl GridGeometry {
    pub fn new(origin: [f64; 2], extent: [f64; 2], resolution: f64) -> Result<Self> {
        if resolution <= 0.0 {
            return Err(IppError::InvalidArgument(format!(
                "resolution must be positive, got {resolution}"
            )));
        }
        if extent[0] <= 0.0 || extent[1] <= 0.0 {
            return Err(IppError::InvalidArgument(format!(
                "extent must be positive, got {extent:?}"
            )));
        }
        let cols = (extent[0] / resolution).round().max(1.0) as usize;
        let rows = (extent[1] / resolution).round().max(1.0) as usize;
        Ok(Self {
            origin,
            extent,
            resolution,
            rows,
            cols,
        })
    }

    pub fn cell_count(&self) -> usize {
        self.rows * self.cols
    }

    /// Flat row-major index of (row, col).
    pub fn index(&self, row: usize, col: usize) -> usize {
        debug_assert!(row < self.rows && col < self.cols);
        row * self.cols + col
    }

    pub fn row_col(&self, index: usize) -> (usize, usize) {
        (index / self.cols, index % self.cols)
    }

    /// Metric center of a cell.
    pub fn cell_center(&self, row: usize, col: usize) -> [f64; 2] {
        [
            self.origin[0] + (col as f64 + 0.5) * self.resolution,
            self.origin[1] + (row as f64 + 0.5) * self.resolution,
        ]
    }

    /// Cell containing a metric point, or None outside the grid.
    pub fn cell_at(&self, x: f64, y: f64) -> Option<(usize, usize)> {
        let cx = (x - self.origin[0]) / self.resolution;
        let cy = (y - self.origin[1]) / self.resolution;
        if cx < 0.0 || cy < 0.0 {
            return None;
        }
        let col = cx.floor() as usize;
        let row = cy.floor() as usize;
        if row < self.rows && col < self.cols {
            Some((row, col))
        } else {
            None
        }
    }

    /// Indices of all cells whose centers fall in the axis-aligned
    /// rectangle [x0, x1] x [y0, y1], clipped to the grid.
    pub fn cells_in_rect(&self, x0: f64, x1: f64, y0: f64, y1: f64) -> Vec<usize> {
        let mut out = Vec::new();
        let (c0, c1) = self.col_span(x0, x1);
        let (r0, r1) = self.row_span(y0, y1);
        for row in r0..r1 {
            for col in c0..c1 {
                out.push(self.index(row, col));
            }
        }
        out
    }

    /// Half-open column range whose centers lie in [x0, x1].
    pub fn col_span(&self, x0: f64, x1: f64) -> (usize, usize) {
        span(x0, x1, self.origin[0], self.resolution, self.cols)
    }

    /// Half-open row range whose centers lie in [y0, y1].
    pub fn row_span(&self, y0: f64, y1: f64) -> (usize, usize) {
        span(y0, y1, self.origin[1], self.resolution, self.rows)
    }

    pub fn center(&self) -> [f64; 2] {
        [
            self.origin[0] + 0.5 * self.extent[0],
            self.origin[1] + 0.5 * self.extent[1],
        ]
    }
}

/// Axis-aligned 3-D flight volume.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Workspace {
    pub min: [f64; 3],
    pub max: [f64; 3],
}

impl Workspace {
    pub fn new(min: [f64; 3], max: [f64; 3]) -> Result<Self> {
        if min.iter().zip(&max).any(|(a, b)| a >= b) {
            return Err(IppError::InvalidArgument(format!(
                "workspace min {min:?} must be strictly below max {max:?}"
            )));
        }
        Ok(Self { min, max })
    }

    /// Volume over the grid footprint with the given altitude band.
    pub fn over_grid(geometry: &GridGeometry, z_min: f64, z_max: f64) -> Result<Self> {
        Self::new(
            [geometry.origin[0], geometry.origin[1], z_min],
            [
                geometry.origin[0] + geometry.extent[0],
                geometry.origin[1] + geometry.extent[1],
                z_max,
            ],
        )
    }

    pub fn contains(&self, p: [f64; 3]) -> bool {
        p.iter()
            .zip(self.min.iter().zip(&self.max))
            .all(|(&v, (&lo, &hi))| v >= lo && v <= hi)
    }

    pub fn clamp(&self, p: [f64; 3]) -> [f64; 3] {
        [
            p[0].clamp(self.min[0], self.max[0]),
            p[1].clamp(self.min[1], self.max[1]),
            p[2].clamp(self.min[2], self.max[2]),
        ]
    }

    pub fn center(&self) -> [f64; 3] {
        [
            0.5 * (self.min[0] + self.max[0]),
            0.5 * (self.min[1] + self.max[1]),
            0.5 * (self.min[2] + self.max[2]),
        ]
    }
}

fn span(lo: f64, hi: f64, origin: f64, res: f64, n: usize) -> (usize, usize) {
    // first center >= lo and last center <= hi, as index range [a, b)
    let a = ((lo - origin) / res - 0.5).ceil().max(0.0) as usize;
    let b = (((hi - origin) / res - 0.5).floor() + 1.0).max(0.0) as usize;
    (a.min(n), b.min(n))
}

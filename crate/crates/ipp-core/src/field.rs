//! Synthetic ground-truth terrains: smooth Gaussian random fields, "Split"
//! maps with a spatially separated region of interest, and binary blob maps.
//!
//! The random-field generator sums randomly placed isotropic Gaussian bumps
//! and rescales the result so the observed min/max hit the requested value
//! range exactly. Regeneration with the same seed is bit-identical.

use rand::RngExt;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{IppError, Result};
use crate::grid::GridGeometry;

/// Dense scalar (or binary) raster the simulator measures against.
#[derive(Debug, Clone)]
pub struct GroundTruthField {
    pub geometry: GridGeometry,
    /// Row-major cell values; % in [0, 100] for continuous targets, {0, 1}
    /// for discrete targets.
    pub values: Vec<f64>,
    pub seed: u64,
}

impl GroundTruthField {
    pub fn value(&self, cell: usize) -> f64 {
        self.values[cell]
    }

    /// Mean value over a cell subset.
    pub fn block_mean(&self, cells: &[usize]) -> f64 {
        cells.iter().map(|&i| self.values[i]).sum::<f64>() / cells.len() as f64
    }

    /// One CSV row per grid row, bottom row first.
    pub fn to_csv<W: std::io::Write>(&self, mut w: W) -> Result<()> {
        for row in 0..self.geometry.rows {
            let line: Vec<String> = (0..self.geometry.cols)
                .map(|col| format!("{}", self.values[self.geometry.index(row, col)]))
                .collect();
            writeln!(w, "{}", line.join(","))?;
        }
        Ok(())
    }

    pub fn from_csv<R: std::io::Read>(geometry: GridGeometry, r: R) -> Result<Self> {
        let mut values = vec![0.0; geometry.cell_count()];
        let content = std::io::read_to_string(r)?;
        let mut row = 0;
        for line in content.lines().filter(|l| !l.trim().is_empty()) {
            if row >= geometry.rows {
                return Err(IppError::InvalidArgument("too many CSV rows".into()));
            }
            for (col, tok) in line.split(',').enumerate() {
                if col >= geometry.cols {
                    return Err(IppError::InvalidArgument("too many CSV columns".into()));
                }
                values[geometry.index(row, col)] = tok.trim().parse().map_err(|e| {
                    IppError::InvalidArgument(format!("bad CSV value {tok:?}: {e}"))
                })?;
            }
            row += 1;
        }
        if row != geometry.rows {
            return Err(IppError::InvalidArgument(format!(
                "expected {} CSV rows, got {row}",
                geometry.rows
            )));
        }
        Ok(Self {
            geometry,
            values,
            seed: 0,
        })
    }
}

/// Raw bump-sum field before any rescaling.
fn bump_field(geometry: GridGeometry, radius_range: [f64; 2], rng: &mut ChaCha8Rng) -> Vec<f64> {
    let n = geometry.cell_count();
    // K = cell_count / 50, jittered by +-50%
    let base = (n as f64 / 50.0).max(1.0);
    let k = (base * rng.random_range(0.5..1.5)).round().max(1.0) as usize;
    let mut values = vec![0.0; n];
    for _ in 0..k {
        let cx = rng.random_range(geometry.origin[0]..geometry.origin[0] + geometry.extent[0]);
        let cy = rng.random_range(geometry.origin[1]..geometry.origin[1] + geometry.extent[1]);
        let radius = rng.random_range(radius_range[0]..=radius_range[1]);
        let amp: f64 = rng.random_range(-1.0..1.0);
        let inv_two_r2 = 1.0 / (2.0 * radius * radius);
        for row in 0..geometry.rows {
            for col in 0..geometry.cols {
                let [x, y] = geometry.cell_center(row, col);
                let d2 = (x - cx).powi(2) + (y - cy).powi(2);
                values[geometry.index(row, col)] += amp * (-d2 * inv_two_r2).exp();
            }
        }
    }
    values
}

/// Linearly rescale `values` so min/max equal the range bounds exactly.
/// A flat input (or degenerate range) maps to the range midpoint.
fn rescale(values: &mut [f64], lo: f64, hi: f64) {
    let vmin = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let vmax = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if vmax - vmin <= f64::EPSILON || hi - lo <= 0.0 {
        let mid = 0.5 * (lo + hi);
        values.iter_mut().for_each(|v| *v = mid);
        return;
    }
    let scale = (hi - lo) / (vmax - vmin);
    values.iter_mut().for_each(|v| *v = lo + (*v - vmin) * scale);
}

/// Continuous Gaussian random field with cluster radii in `radius_range`
/// (m) and values spanning `value_range` (%) exactly.
pub fn generate_gaussian_field(
    geometry: GridGeometry,
    radius_range: [f64; 2],
    value_range: [f64; 2],
    seed: u64,
) -> Result<GroundTruthField> {
    if radius_range[0] <= 0.0 || radius_range[1] < radius_range[0] {
        return Err(IppError::InvalidArgument(format!(
            "cluster radius range must be positive and ordered, got {radius_range:?}"
        )));
    }
    if value_range[0] < 0.0 || value_range[1] > 100.0 || value_range[1] < value_range[0] {
        return Err(IppError::InvalidArgument(format!(
            "value range must lie within [0, 100], got {value_range:?}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut values = bump_field(geometry, radius_range, &mut rng);
    rescale(&mut values, value_range[0], value_range[1]);
    Ok(GroundTruthField {
        geometry,
        values,
        seed,
    })
}

/// "Split" map: one spatial half strictly below `threshold`, the other at
/// or above it. The split is along the column axis; with an odd column
/// count, the extra column goes to the interesting (right) half.
pub fn generate_split_field(
    geometry: GridGeometry,
    threshold: f64,
    seed: u64,
) -> Result<GroundTruthField> {
    if !(0.0..=100.0).contains(&threshold) {
        return Err(IppError::InvalidArgument(format!(
            "threshold must be in [0, 100], got {threshold}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let raw = bump_field(geometry, [1.0, 3.0], &mut rng);
    let split_col = geometry.cols / 2;

    // Rescale each half independently into its side of the threshold.
    let mut left = Vec::new();
    let mut right = Vec::new();
    for row in 0..geometry.rows {
        for col in 0..geometry.cols {
            let v = raw[geometry.index(row, col)];
            if col < split_col {
                left.push(v);
            } else {
                right.push(v);
            }
        }
    }
    rescale(&mut left, 0.0, 0.999 * threshold);
    rescale(&mut right, threshold, 100.0);

    let mut values = vec![0.0; geometry.cell_count()];
    let (mut li, mut ri) = (0, 0);
    for row in 0..geometry.rows {
        for col in 0..geometry.cols {
            let idx = geometry.index(row, col);
            if col < split_col {
                values[idx] = left[li];
                li += 1;
            } else {
                values[idx] = right[ri];
                ri += 1;
            }
        }
    }
    Ok(GroundTruthField {
        geometry,
        values,
        seed,
    })
}

/// Blob-shaped binary raster: the top `occupancy_fraction` of a smooth bump
/// field is marked occupied, so the occupied share matches the target up to
/// grid granularity.
pub fn generate_binary_field(
    geometry: GridGeometry,
    occupancy_fraction: f64,
    seed: u64,
) -> Result<GroundTruthField> {
    if !(0.0..=1.0).contains(&occupancy_fraction) {
        return Err(IppError::InvalidArgument(format!(
            "occupancy fraction must be in [0, 1], got {occupancy_fraction}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let raw = bump_field(geometry, [1.0, 3.0], &mut rng);
    let n = geometry.cell_count();
    let target = (occupancy_fraction * n as f64).round() as usize;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| raw[b].total_cmp(&raw[a]).then(a.cmp(&b)));
    let mut values = vec![0.0; n];
    for &i in order.iter().take(target) {
        values[i] = 1.0;
    }
    Ok(GroundTruthField {
        geometry,
        values,
        seed,
    })
}

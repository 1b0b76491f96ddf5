//! Camera geometry and the altitude-dependent probabilistic sensor models.
//!
//! Two models are provided: a binary classifier whose true/false-positive
//! curves degrade towards 0.5 with altitude, and a Gaussian model for
//! continuous targets whose noise variance grows with altitude and whose
//! measurement resolution drops in discrete altitude bands.

use rand::{Rng, RngExt};
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{IppError, Result};
use crate::field::GroundTruthField;
use crate::grid::GridGeometry;

/// Nadir-pointing camera with a rectangular field of view.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct CameraConfig {
    /// Full field of view along x (degrees).
    pub fov_x_deg: f64,
    /// Full field of view along y (degrees).
    pub fov_y_deg: f64,
    /// Measurement frequency (Hz).
    pub frequency_hz: f64,
}

impl CameraConfig {
    pub fn new(fov_x_deg: f64, fov_y_deg: f64, frequency_hz: f64) -> Result<Self> {
        if !(0.0..180.0).contains(&fov_x_deg)
            || !(0.0..180.0).contains(&fov_y_deg)
            || fov_x_deg == 0.0
            || fov_y_deg == 0.0
        {
            return Err(IppError::InvalidArgument(format!(
                "field of view must lie in (0, 180) degrees, got ({fov_x_deg}, {fov_y_deg})"
            )));
        }
        if frequency_hz <= 0.0 {
            return Err(IppError::InvalidArgument(format!(
                "measurement frequency must be positive, got {frequency_hz}"
            )));
        }
        Ok(Self {
            fov_x_deg,
            fov_y_deg,
            frequency_hz,
        })
    }

    /// Square 60 degree FoV at 0.15 Hz.
    pub fn survey_default() -> Self {
        Self {
            fov_x_deg: 60.0,
            fov_y_deg: 60.0,
            frequency_hz: 0.15,
        }
    }

    /// Ground half-widths (x, y) of the footprint at altitude h.
    pub fn half_widths(&self, h: f64) -> (f64, f64) {
        (
            h * (self.fov_x_deg.to_radians() / 2.0).tan(),
            h * (self.fov_y_deg.to_radians() / 2.0).tan(),
        )
    }
}

/// Altitude-dependent binary classifier given by tabulated true-positive
/// and false-positive curves, linearly interpolated between knots.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BinaryClassifierModel {
    /// (altitude m, P(z=1 | cell=1)) knots, ascending altitude.
    pub tp_knots: Vec<(f64, f64)>,
    /// (altitude m, P(z=1 | cell=0)) knots, ascending altitude.
    pub fp_knots: Vec<(f64, f64)>,
}

impl BinaryClassifierModel {
    pub fn new(tp_knots: Vec<(f64, f64)>, fp_knots: Vec<(f64, f64)>) -> Result<Self> {
        for knots in [&tp_knots, &fp_knots] {
            if knots.len() < 2 {
                return Err(IppError::InvalidArgument(
                    "classifier curves need at least two knots".into(),
                ));
            }
            if !knots.windows(2).all(|w| w[0].0 < w[1].0) {
                return Err(IppError::InvalidArgument(
                    "classifier knots must have ascending altitudes".into(),
                ));
            }
            if knots.iter().any(|&(_, p)| !(0.0..=1.0).contains(&p)) {
                return Err(IppError::InvalidArgument(
                    "classifier probabilities must lie in [0, 1]".into(),
                ));
            }
        }
        Ok(Self { tp_knots, fp_knots })
    }

    /// Curves dropping linearly from (0.95, 0.05) at h_min to 0.5 at h_max.
    pub fn default_curves(h_min: f64, h_max: f64) -> Self {
        Self {
            tp_knots: vec![(h_min, 0.95), (h_max, 0.5)],
            fp_knots: vec![(h_min, 0.05), (h_max, 0.5)],
        }
    }

    /// Altitude interval covered by both curves.
    pub fn altitude_validity(&self) -> (f64, f64) {
        let lo = self.tp_knots[0].0.max(self.fp_knots[0].0);
        let hi = self
            .tp_knots
            .last()
            .unwrap()
            .0
            .min(self.fp_knots.last().unwrap().0);
        (lo, hi)
    }

    fn check_altitude(&self, h: f64) -> Result<()> {
        let (lo, hi) = self.altitude_validity();
        if h < lo || h > hi {
            return Err(IppError::OutOfRange(format!(
                "altitude {h} outside classifier validity [{lo}, {hi}]"
            )));
        }
        Ok(())
    }

    pub fn tp(&self, h: f64) -> Result<f64> {
        self.check_altitude(h)?;
        Ok(interp(&self.tp_knots, h))
    }

    pub fn fp(&self, h: f64) -> Result<f64> {
        self.check_altitude(h)?;
        Ok(interp(&self.fp_knots, h))
    }
}

fn interp(knots: &[(f64, f64)], h: f64) -> f64 {
    if h <= knots[0].0 {
        return knots[0].1;
    }
    for w in knots.windows(2) {
        let ((h0, p0), (h1, p1)) = (w[0], w[1]);
        if h <= h1 {
            return p0 + (p1 - p0) * (h - h0) / (h1 - h0);
        }
    }
    knots.last().unwrap().1
}

/// P(z | cell, h) from the classifier curves.
pub fn classifier_likelihood(
    h: f64,
    cell_state: u8,
    observed_label: u8,
    model: &BinaryClassifierModel,
) -> Result<f64> {
    let p_one = match cell_state {
        1 => model.tp(h)?,
        0 => model.fp(h)?,
        s => {
            return Err(IppError::InvalidArgument(format!(
                "cell state must be 0 or 1, got {s}"
            )))
        }
    };
    Ok(match observed_label {
        1 => p_one,
        0 => 1.0 - p_one,
        z => {
            return Err(IppError::InvalidArgument(format!(
                "observed label must be 0 or 1, got {z}"
            )))
        }
    })
}

/// Gaussian noise-plus-resolution model for continuous targets.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ContinuousSensorModel {
    /// Noise asymptote (variance units).
    pub a: f64,
    /// Noise growth rate (1/m).
    pub b: f64,
    /// Ascending altitude thresholds splitting the resolution bands.
    pub scale_thresholds: Vec<f64>,
    /// Scale factor per band; one more entry than thresholds, first is 1.
    pub scales: Vec<f64>,
}

impl ContinuousSensorModel {
    pub fn new(a: f64, b: f64, scale_thresholds: Vec<f64>, scales: Vec<f64>) -> Result<Self> {
        if a <= 0.0 || b <= 0.0 {
            return Err(IppError::InvalidArgument(format!(
                "noise coefficients must be positive, got a={a}, b={b}"
            )));
        }
        if scales.len() != scale_thresholds.len() + 1 {
            return Err(IppError::InvalidArgument(
                "need exactly one more scale than thresholds".into(),
            ));
        }
        if scales.first() != Some(&1.0) {
            return Err(IppError::InvalidArgument(
                "lowest resolution band must have scale 1".into(),
            ));
        }
        if !scale_thresholds.windows(2).all(|w| w[0] < w[1]) {
            return Err(IppError::InvalidArgument(
                "scale thresholds must be ascending".into(),
            ));
        }
        for &s in &scales {
            if !(0.0..=1.0).contains(&s) || s == 0.0 {
                return Err(IppError::InvalidArgument(format!(
                    "scale factors must lie in (0, 1], got {s}"
                )));
            }
            let inv = 1.0 / s;
            if (inv - inv.round()).abs() > 1e-9 {
                return Err(IppError::InvalidArgument(format!(
                    "1/scale must be an integer, got scale {s}"
                )));
            }
        }
        Ok(Self {
            a,
            b,
            scale_thresholds,
            scales,
        })
    }

    /// a = 0.2, b = 0.05, resolution halves above 10 m.
    pub fn survey_default() -> Self {
        Self {
            a: 0.2,
            b: 0.05,
            scale_thresholds: vec![10.0],
            scales: vec![1.0, 0.5],
        }
    }
}

/// Altitude-dependent noise variance a(1 - e^(-bh)).
pub fn noise_variance(h: f64, model: &ContinuousSensorModel) -> Result<f64> {
    if h < 0.0 {
        return Err(IppError::InvalidArgument(format!(
            "altitude must be non-negative, got {h}"
        )));
    }
    Ok(model.a * (1.0 - (-model.b * h).exp()))
}

/// Scale factor of the band containing h; a threshold altitude belongs to
/// the band above it.
pub fn resolution_scale(h: f64, model: &ContinuousSensorModel) -> f64 {
    let mut band = 0;
    for &t in &model.scale_thresholds {
        if h >= t {
            band += 1;
        } else {
            break;
        }
    }
    model.scales[band]
}

/// Footprint cell index ranges: half-open (rows, cols) spans.
pub fn footprint_spans(
    pose: [f64; 3],
    camera: &CameraConfig,
    geometry: &GridGeometry,
) -> Result<((usize, usize), (usize, usize))> {
    if pose[2] <= 0.0 {
        return Err(IppError::InvalidArgument(format!(
            "camera altitude must be positive, got {}",
            pose[2]
        )));
    }
    let (hx, hy) = camera.half_widths(pose[2]);
    Ok((
        geometry.row_span(pose[1] - hy, pose[1] + hy),
        geometry.col_span(pose[0] - hx, pose[0] + hx),
    ))
}

/// All cells whose centers lie in the ground-projected camera rectangle.
pub fn footprint(
    pose: [f64; 3],
    camera: &CameraConfig,
    geometry: &GridGeometry,
) -> Result<Vec<usize>> {
    let ((r0, r1), (c0, c1)) = footprint_spans(pose, camera, geometry)?;
    let mut cells = Vec::with_capacity((r1 - r0) * (c1 - c0));
    for row in r0..r1 {
        for col in c0..c1 {
            cells.push(geometry.index(row, col));
        }
    }
    Ok(cells)
}

/// One Gaussian measurement block: an observed value tied to the map cells
/// it averages over.
#[derive(Debug, Clone)]
pub struct MeasurementBlock {
    pub value: f64,
    pub cells: Vec<usize>,
    pub variance: f64,
}

/// A set of independent Gaussian measurement blocks from one camera pose.
#[derive(Debug, Clone)]
pub struct MeasurementPatch {
    pub blocks: Vec<MeasurementBlock>,
    pub altitude: f64,
    pub scale: f64,
}

/// Block layout of a footprint at the model's resolution scale for the
/// given altitude. Partial blocks at the footprint edges are dropped.
pub fn footprint_blocks(
    pose: [f64; 3],
    camera: &CameraConfig,
    model: &ContinuousSensorModel,
    geometry: &GridGeometry,
) -> Result<(Vec<Vec<usize>>, f64)> {
    let ((r0, r1), (c0, c1)) = footprint_spans(pose, camera, geometry)?;
    let scale = resolution_scale(pose[2], model);
    let k = (1.0 / scale).round() as usize;
    let mut blocks = Vec::new();
    let mut row = r0;
    while row + k <= r1 {
        let mut col = c0;
        while col + k <= c1 {
            let mut cells = Vec::with_capacity(k * k);
            for r in row..row + k {
                for c in col..col + k {
                    cells.push(geometry.index(r, c));
                }
            }
            blocks.push(cells);
            col += k;
        }
        row += k;
    }
    Ok((blocks, scale))
}

/// Simulate one camera measurement of the truth field: one Gaussian sample
/// per block, centered on the block mean of the truth.
pub fn simulate_continuous_measurement<R: Rng>(
    pose: [f64; 3],
    camera: &CameraConfig,
    model: &ContinuousSensorModel,
    truth: &GroundTruthField,
    rng: &mut R,
) -> Result<MeasurementPatch> {
    let (blocks, scale) = footprint_blocks(pose, camera, model, &truth.geometry)?;
    let variance = noise_variance(pose[2], model)?;
    let normal = Normal::new(0.0, variance.sqrt())
        .map_err(|e| IppError::Numerical(format!("noise distribution: {e}")))?;
    let blocks = blocks
        .into_iter()
        .map(|cells| {
            let mean = truth.block_mean(&cells);
            MeasurementBlock {
                value: mean + normal.sample(rng),
                cells,
                variance,
            }
        })
        .collect();
    Ok(MeasurementPatch {
        blocks,
        altitude: pose[2],
        scale,
    })
}

/// A set of sampled classification labels from one camera pose.
#[derive(Debug, Clone)]
pub struct DiscretePatch {
    /// (cell index, observed label) pairs.
    pub labels: Vec<(usize, u8)>,
    pub altitude: f64,
}

/// Simulate one classifier measurement: per footprint cell, label 1 with
/// probability tp(h) for occupied truth and fp(h) for free truth.
pub fn simulate_discrete_measurement<R: Rng>(
    pose: [f64; 3],
    camera: &CameraConfig,
    model: &BinaryClassifierModel,
    truth: &GroundTruthField,
    rng: &mut R,
) -> Result<DiscretePatch> {
    let cells = footprint(pose, camera, &truth.geometry)?;
    let h = pose[2];
    let (tp, fp) = (model.tp(h)?, model.fp(h)?);
    let labels = cells
        .into_iter()
        .map(|i| {
            let p_one = if truth.values[i] >= 0.5 { tp } else { fp };
            let z = u8::from(rng.random::<f64>() < p_one);
            (i, z)
        })
        .collect();
    Ok(DiscretePatch { labels, altitude: h })
}

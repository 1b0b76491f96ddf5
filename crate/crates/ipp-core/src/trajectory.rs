//! Polynomial trajectories through control waypoints.
//!
//! Segments are clamped interpolants with zero velocity and acceleration at
//! every joint, giving piecewise-C2 motion, with segment durations from a
//! trapezoidal velocity profile on the straight-line distance. The
//! polynomial order is configurable; interpolation uses the quintic basis
//! and higher coefficients stay zero.

use crate::error::{IppError, Result};

/// Minimum segment duration for coincident waypoints (s).
pub const MIN_SEGMENT_DURATION: f64 = 0.01;

/// One polynomial segment in normalized time tau in [0, 1].
#[derive(Debug, Clone)]
pub struct PolySegment {
    /// Per-axis coefficients, ascending powers of tau.
    pub coeffs: [Vec<f64>; 3],
    /// Segment duration (s).
    pub duration: f64,
}

impl PolySegment {
    fn position(&self, tau: f64) -> [f64; 3] {
        let mut p = [0.0; 3];
        for axis in 0..3 {
            let mut v = 0.0;
            for c in self.coeffs[axis].iter().rev() {
                v = v * tau + *c;
            }
            p[axis] = v;
        }
        p
    }

    fn velocity(&self, tau: f64) -> [f64; 3] {
        let mut v = [0.0; 3];
        for axis in 0..3 {
            let mut d = 0.0;
            for (k, c) in self.coeffs[axis].iter().enumerate().skip(1).rev() {
                d = d * tau + k as f64 * *c;
            }
            v[axis] = d / self.duration;
        }
        v
    }
}

/// Polynomial trajectory through N control waypoints.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub waypoints: Vec<[f64; 3]>,
    pub segments: Vec<PolySegment>,
    pub v_max: f64,
    pub a_max: f64,
}

impl Trajectory {
    /// Total travel time (s).
    pub fn duration(&self) -> f64 {
        self.segments.iter().map(|s| s.duration).sum()
    }

    /// Position at time t, clamped to the trajectory's time span.
    pub fn sample(&self, t: f64) -> [f64; 3] {
        let (seg, tau) = self.locate(t);
        self.segments[seg].position(tau)
    }

    /// Velocity at time t (m/s).
    pub fn sample_velocity(&self, t: f64) -> [f64; 3] {
        let (seg, tau) = self.locate(t);
        self.segments[seg].velocity(tau)
    }

    fn locate(&self, t: f64) -> (usize, f64) {
        let mut remaining = t.max(0.0);
        for (i, seg) in self.segments.iter().enumerate() {
            if remaining <= seg.duration || i == self.segments.len() - 1 {
                return (i, (remaining / seg.duration).clamp(0.0, 1.0));
            }
            remaining -= seg.duration;
        }
        (0, 0.0)
    }

    pub fn end_position(&self) -> [f64; 3] {
        *self.waypoints.last().unwrap()
    }

    /// Dump (t, x, y, z) samples to CSV at the given time step.
    pub fn to_csv<W: std::io::Write>(&self, step: f64, mut w: W) -> Result<()> {
        let mut t = 0.0;
        let end = self.duration();
        while t <= end + 1e-9 {
            let p = self.sample(t.min(end));
            writeln!(w, "{},{},{},{}", t.min(end), p[0], p[1], p[2])?;
            t += step;
        }
        Ok(())
    }
}

fn distance(a: [f64; 3], b: [f64; 3]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

/// Trapezoidal (or triangular) velocity-profile travel time over a
/// straight-line distance.
pub fn trapezoidal_time(d: f64, v_max: f64, a_max: f64) -> f64 {
    if d <= 0.0 {
        return MIN_SEGMENT_DURATION;
    }
    if d >= v_max * v_max / a_max {
        d / v_max + v_max / a_max
    } else {
        2.0 * (d / a_max).sqrt()
    }
}

/// Straight-line constant-velocity travel time at v_max; used by the
/// greedy-phase rate denominator.
pub fn constant_velocity_time(a: [f64; 3], b: [f64; 3], v_max: f64) -> f64 {
    distance(a, b) / v_max
}

// quintic smoothstep: zero velocity/acceleration at both ends; its peak
// normalized rate is 15/8, so the duration floor below caps the sampled
// speed at 1.05 * v_max
const QUINTIC_PEAK_RATE: f64 = 15.0 / 8.0;

fn segment_duration(d: f64, v_max: f64, a_max: f64) -> f64 {
    let speed_floor = QUINTIC_PEAK_RATE * d / (1.05 * v_max);
    trapezoidal_time(d, v_max, a_max)
        .max(speed_floor)
        .max(MIN_SEGMENT_DURATION)
}

/// Plan a polynomial trajectory through the waypoints.
pub fn plan_polynomial(
    waypoints: &[[f64; 3]],
    order: usize,
    v_max: f64,
    a_max: f64,
) -> Result<Trajectory> {
    if waypoints.len() < 2 {
        return Err(IppError::InvalidArgument(format!(
            "need at least two waypoints, got {}",
            waypoints.len()
        )));
    }
    if order < 3 {
        return Err(IppError::InvalidArgument(format!(
            "polynomial order must be at least 3, got {order}"
        )));
    }
    if v_max <= 0.0 || a_max <= 0.0 {
        return Err(IppError::InvalidArgument(format!(
            "reference limits must be positive, got v_max={v_max}, a_max={a_max}"
        )));
    }
    let segments = waypoints
        .windows(2)
        .map(|w| {
            let (p0, p1) = (w[0], w[1]);
            let d = distance(p0, p1);
            let duration = segment_duration(d, v_max, a_max);
            let coeffs = std::array::from_fn(|axis| {
                let delta = p1[axis] - p0[axis];
                let mut c = vec![0.0; order + 1];
                c[0] = p0[axis];
                c[3] = 10.0 * delta;
                c[4] = -15.0 * delta;
                c[5] = 6.0 * delta;
                c
            });
            PolySegment { coeffs, duration }
        })
        .collect();
    Ok(Trajectory {
        waypoints: waypoints.to_vec(),
        segments,
        v_max,
        a_max,
    })
}

/// Measurement poses at t = 0, 1/f, 2/f, ... up to the trajectory end,
/// truncated to max_count. Returns (time, position) pairs.
pub fn measurement_poses(
    traj: &Trajectory,
    frequency_hz: f64,
    max_count: usize,
) -> Result<Vec<(f64, [f64; 3])>> {
    if frequency_hz <= 0.0 {
        return Err(IppError::InvalidArgument(format!(
            "measurement frequency must be positive, got {frequency_hz}"
        )));
    }
    let period = 1.0 / frequency_hz;
    let end = traj.duration();
    let mut poses = Vec::new();
    let mut k = 0usize;
    while poses.len() < max_count {
        let t = k as f64 * period;
        if t > end + 1e-9 {
            break;
        }
        poses.push((t.min(end), traj.sample(t)));
        k += 1;
    }
    Ok(poses)
}

/// Total travel time of the trajectory (s).
pub fn cost(traj: &Trajectory) -> f64 {
    traj.duration()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn triangular_profile_duration() {
        let traj = plan_polynomial(&[[0.0, 0.0, 5.0], [10.0, 0.0, 5.0]], 12, 5.0, 2.0).unwrap();
        assert_relative_eq!(cost(&traj), 2.0 * (10.0f64 / 2.0).sqrt(), epsilon = 1e-9);
    }

    #[test]
    fn coincident_waypoints_get_minimum_duration() {
        let traj = plan_polynomial(&[[1.0, 2.0, 3.0], [1.0, 2.0, 3.0]], 12, 5.0, 2.0).unwrap();
        assert_relative_eq!(cost(&traj), MIN_SEGMENT_DURATION);
        let p = traj.sample(0.005);
        assert_relative_eq!(p[0], 1.0, epsilon = 1e-9);
    }

    #[test]
    fn knot_times_reproduce_waypoints() {
        let wps = [
            [7.5, 7.5, 8.66],
            [20.0, 10.0, 15.0],
            [5.0, 25.0, 5.0],
            [28.0, 28.0, 20.0],
        ];
        let traj = plan_polynomial(&wps, 12, 5.0, 2.0).unwrap();
        let mut t = 0.0;
        for (i, seg) in traj.segments.iter().enumerate() {
            let p = traj.sample(t);
            for axis in 0..3 {
                assert_relative_eq!(p[axis], wps[i][axis], epsilon = 1e-6);
            }
            t += seg.duration;
        }
        let p = traj.sample(t);
        for axis in 0..3 {
            assert_relative_eq!(p[axis], wps[3][axis], epsilon = 1e-6);
        }
    }

    #[test]
    fn straight_line_stays_on_line() {
        let wps = [[0.0, 0.0, 5.0], [10.0, 10.0, 5.0], [20.0, 20.0, 5.0]];
        let traj = plan_polynomial(&wps, 12, 5.0, 2.0).unwrap();
        let end = traj.duration();
        let mut t = 0.0;
        while t <= end {
            let p = traj.sample(t);
            // distance to the line x = y at z = 5
            let dev = ((p[0] - p[1]) / 2f64.sqrt()).abs();
            assert!(dev < 0.5, "deviation {dev} at t={t}");
            assert_relative_eq!(p[2], 5.0, epsilon = 1e-9);
            t += 0.05;
        }
    }

    #[test]
    fn sampled_speed_bounded() {
        let wps = [
            [0.0, 0.0, 1.0],
            [30.0, 30.0, 26.0],
            [0.0, 30.0, 1.0],
            [30.0, 0.0, 26.0],
        ];
        let traj = plan_polynomial(&wps, 12, 5.0, 2.0).unwrap();
        let end = traj.duration();
        let mut t = 0.0;
        while t <= end {
            let v = traj.sample_velocity(t);
            let speed = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
            assert!(speed <= 1.1 * 5.0 + 1e-9, "speed {speed} at t={t}");
            t += 0.02;
        }
    }

    #[test]
    fn measurement_pose_spacing() {
        // duration 33.33 s at 0.15 Hz: poses at 0, 6.67, ..., 33.33
        let d = 5.0 / 0.15 * 5.0; // distance giving exactly 33.33 s at v = 5
        let traj = plan_polynomial(&[[0.0, 0.0, 5.0], [d, 0.0, 5.0]], 12, 5.0, 1e9).unwrap();
        // speed floor dominates here; rebuild duration for the test via a
        // synthetic two-point trajectory with explicit timing
        let mut traj = traj;
        traj.segments[0].duration = 5.0 / 0.15;
        let poses = measurement_poses(&traj, 0.15, 10).unwrap();
        assert_eq!(poses.len(), 6);
        assert_relative_eq!(poses[5].0, 5.0 / 0.15, epsilon = 1e-9);
        assert_eq!(poses[0].1, [0.0, 0.0, 5.0]);
    }

    #[test]
    fn short_trajectory_single_pose() {
        let traj = plan_polynomial(&[[0.0, 0.0, 5.0], [1.0, 0.0, 5.0]], 12, 5.0, 2.0).unwrap();
        assert!(traj.duration() < 1.0 / 0.15);
        let poses = measurement_poses(&traj, 0.15, 10).unwrap();
        assert_eq!(poses.len(), 1);
        assert_eq!(poses[0].0, 0.0);
        assert_eq!(measurement_poses(&traj, 0.15, 1).unwrap().len(), 1);
    }

    #[test]
    fn cost_additive_and_translation_invariant() {
        let a = [0.0, 0.0, 5.0];
        let b = [10.0, 0.0, 5.0];
        let c = [10.0, 10.0, 5.0];
        let ab = plan_polynomial(&[a, b], 12, 5.0, 2.0).unwrap();
        let bc = plan_polynomial(&[b, c], 12, 5.0, 2.0).unwrap();
        let abc = plan_polynomial(&[a, b, c], 12, 5.0, 2.0).unwrap();
        assert_relative_eq!(cost(&abc), cost(&ab) + cost(&bc), epsilon = 1e-9);

        let shift = |p: [f64; 3]| [p[0] + 100.0, p[1] - 7.0, p[2] + 3.0];
        let shifted = plan_polynomial(&[shift(a), shift(b), shift(c)], 12, 5.0, 2.0).unwrap();
        assert_relative_eq!(cost(&shifted), cost(&abc), epsilon = 1e-9);
    }

    #[test]
    fn longer_path_costs_more() {
        let short = plan_polynomial(&[[0.0, 0.0, 5.0], [8.0, 0.0, 5.0]], 12, 5.0, 2.0).unwrap();
        let long = plan_polynomial(&[[0.0, 0.0, 5.0], [20.0, 0.0, 5.0]], 12, 5.0, 2.0).unwrap();
        assert!(cost(&long) > cost(&short));
    }

    #[test]
    fn invalid_arguments_rejected() {
        assert!(plan_polynomial(&[[0.0; 3]], 12, 5.0, 2.0).is_err());
        assert!(plan_polynomial(&[[0.0; 3], [1.0; 3]], 2, 5.0, 2.0).is_err());
        assert!(plan_polynomial(&[[0.0; 3], [1.0; 3]], 12, 0.0, 2.0).is_err());
        let traj = plan_polynomial(&[[0.0; 3], [1.0; 3]], 12, 5.0, 2.0).unwrap();
        assert!(measurement_poses(&traj, 0.0, 10).is_err());
    }
}

//! Baseline trajectories: boustrophedon lawnmower coverage, an ascending
//! conical spiral, and uniform random waypoint hopping.

use rand::RngExt;
use rand_chacha::ChaCha8Rng;

use crate::error::{IppError, Result};
use crate::grid::Workspace;
use crate::sensor::CameraConfig;
use crate::trajectory::{plan_polynomial, Trajectory, MIN_SEGMENT_DURATION};

fn distance(a: [f64; 3], b: [f64; 3]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

/// Polynomial trajectory retimed to constant commanded speed. A
/// zero-length path becomes a hover of `hover_duration`.
fn constant_speed_trajectory(
    waypoints: &[[f64; 3]],
    speed: f64,
    hover_duration: f64,
    v_max: f64,
    a_max: f64,
    order: usize,
) -> Result<Trajectory> {
    let mut traj = plan_polynomial(waypoints, order, v_max, a_max)?;
    let length: f64 = waypoints.windows(2).map(|w| distance(w[0], w[1])).sum();
    if length <= 0.0 || speed <= 0.0 {
        for seg in &mut traj.segments {
            seg.duration = (hover_duration / traj.waypoints.len() as f64).max(MIN_SEGMENT_DURATION);
        }
        return Ok(traj);
    }
    for (seg, pair) in traj.segments.iter_mut().zip(waypoints.windows(2)) {
        seg.duration = (distance(pair[0], pair[1]) / speed).max(MIN_SEGMENT_DURATION);
    }
    Ok(traj)
}

/// Boustrophedon sweep at fixed altitude with pass spacing equal to the
/// camera footprint width, retimed so the sweep consumes the whole budget.
/// Returns the trajectory and the commanded speed (m/s).
pub fn lawnmower(
    workspace: &Workspace,
    camera: &CameraConfig,
    budget: f64,
    altitude: f64,
    order: usize,
) -> Result<(Trajectory, f64)> {
    if budget <= 0.0 {
        return Err(IppError::InvalidArgument(format!(
            "budget must be positive, got {budget}"
        )));
    }
    if altitude < workspace.min[2] || altitude > workspace.max[2] {
        return Err(IppError::OutOfRange(format!(
            "altitude {altitude} outside workspace z band"
        )));
    }
    let (hw, _) = camera.half_widths(altitude);
    let spacing = 2.0 * hw;
    let ex = workspace.max[0] - workspace.min[0];
    let ey = workspace.max[1] - workspace.min[1];

    // passes run along x; endpoints inset by half a footprint so the swept
    // sensor area matches the workspace, degrading to a hover when one
    // footprint already covers everything
    let x0 = (workspace.min[0] + hw).min(workspace.min[0] + 0.5 * ex);
    let x1 = (workspace.max[0] - hw).max(workspace.min[0] + 0.5 * ex);
    // tolerate sub-0.1% coverage shortfall so a near-exact fit (e.g. a
    // 9.9997 m footprint over 30 m) does not spawn an extra pass
    let passes = ((ey / spacing) * (1.0 - 1e-3)).ceil().max(1.0) as usize;
    let mut waypoints = Vec::with_capacity(2 * passes);
    for k in 0..passes {
        let y = if passes == 1 {
            workspace.min[1] + 0.5 * ey
        } else {
            // even spread keeping half-spacing margins
            let lo = workspace.min[1] + 0.5 * spacing;
            let hi = workspace.max[1] - 0.5 * spacing;
            lo + (hi - lo) * k as f64 / (passes - 1) as f64
        };
        if k % 2 == 0 {
            waypoints.push([x0, y, altitude]);
            waypoints.push([x1, y, altitude]);
        } else {
            waypoints.push([x1, y, altitude]);
            waypoints.push([x0, y, altitude]);
        }
    }
    let length: f64 = waypoints.windows(2).map(|w| distance(w[0], w[1])).sum();
    let speed = length / budget;
    let traj = constant_speed_trajectory(&waypoints, speed, budget, speed.max(1e-6), 1.0, order)?;
    Ok((traj, speed))
}

/// Conical helix centered on the workspace: a coarse-to-fine sweep that
/// starts on the outer ring at z_range[1] (widest footprint first) and
/// descends to z_range[0] while the radius tapers linearly to zero. The
/// turn count is chosen so the path takes the whole budget at v_max.
pub fn spiral(
    workspace: &Workspace,
    budget: f64,
    z_range: [f64; 2],
    v_max: f64,
    a_max: f64,
    order: usize,
) -> Result<Trajectory> {
    if budget <= 0.0 || v_max <= 0.0 {
        return Err(IppError::InvalidArgument(format!(
            "budget and v_max must be positive, got {budget}, {v_max}"
        )));
    }
    if z_range[0] < workspace.min[2] || z_range[1] > workspace.max[2] || z_range[0] >= z_range[1] {
        return Err(IppError::OutOfRange(format!(
            "z range {z_range:?} outside workspace band"
        )));
    }
    let center = workspace.center();
    let r0 = 0.5
        * (workspace.max[0] - workspace.min[0]).min(workspace.max[1] - workspace.min[1]);
    let target_length = budget * v_max;

    let polyline = |theta_max: f64| -> Vec<[f64; 3]> {
        // 36 samples per turn keeps the chordal length within ~0.1% of arc
        let n = ((theta_max / (std::f64::consts::TAU / 36.0)).ceil() as usize).max(2);
        (0..=n)
            .map(|i| {
                let s = i as f64 / n as f64;
                let theta = s * theta_max;
                let r = r0 * (1.0 - s);
                [
                    center[0] + r * theta.cos(),
                    center[1] + r * theta.sin(),
                    z_range[1] - s * (z_range[1] - z_range[0]),
                ]
            })
            .collect()
    };
    let length_of = |pts: &[[f64; 3]]| -> f64 {
        pts.windows(2).map(|w| distance(w[0], w[1])).sum()
    };

    // bisect the total turn angle until the chordal length matches B * v_max
    let mut lo = 0.1;
    let mut hi = 4.0 * std::f64::consts::TAU;
    while length_of(&polyline(hi)) < target_length {
        hi *= 2.0;
        if hi > 1e4 {
            return Err(IppError::Numerical("spiral length search diverged".into()));
        }
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if length_of(&polyline(mid)) < target_length {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let waypoints = polyline(0.5 * (lo + hi));
    constant_speed_trajectory(&waypoints, v_max, budget, v_max, a_max, order)
}

/// Uniform random in-bounds destination.
pub fn random_destination(workspace: &Workspace, rng: &mut ChaCha8Rng) -> [f64; 3] {
    [
        rng.random_range(workspace.min[0]..=workspace.max[0]),
        rng.random_range(workspace.min[1]..=workspace.max[1]),
        rng.random_range(workspace.min[2]..=workspace.max[2]),
    ]
}

/// Two-waypoint polynomial hop from the current pose to a random
/// destination.
pub fn random_planner(
    current: [f64; 3],
    workspace: &Workspace,
    v_max: f64,
    a_max: f64,
    order: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Trajectory> {
    let dest = random_destination(workspace, rng);
    plan_polynomial(&[current, dest], order, v_max, a_max)
}

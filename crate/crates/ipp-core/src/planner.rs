//! Informative planning: greedy next-best-view search over a coarse 3-D
//! lattice, evolutionary refinement of the selected waypoints, and the
//! fixed-horizon replan/execute mission loop.

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cmaes::{self, CmaConfig};
use crate::error::{IppError, Result};
use crate::field::GroundTruthField;
use crate::gp::{
    self, interesting_cells_continuous, predicted_rows, trace_uncertainty, GpFieldMap,
    SequentialGainEvaluator,
};
use crate::grid::Workspace;
use crate::metrics::{self, MetricsRecord};
use crate::occupancy::{
    entropy, interesting_cells_discrete, predict_discrete_update, update_discrete, OccupancyMap,
};
use crate::sensor::{
    simulate_continuous_measurement, simulate_discrete_measurement, BinaryClassifierModel,
    CameraConfig, ContinuousSensorModel,
};
use crate::trajectory::{
    constant_velocity_time, cost, measurement_poses, plan_polynomial, Trajectory,
};

pub const TARGET_LAYER: &str = "target";

/// Multiresolution view lattice: fixed-altitude layers whose lateral grids
/// are spaced so adjacent camera footprints abut.
#[derive(Debug, Clone)]
pub struct Lattice {
    /// All candidate view positions, bottom layer first, row-major within
    /// a layer. Index order is the greedy tie-break order.
    pub points: Vec<[f64; 3]>,
    /// (altitude, lateral spacing) per layer, ascending altitude.
    pub layers: Vec<(f64, f64)>,
}

/// Per-layer lateral grid side lengths, densest first.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LatticePreset {
    /// 5x5 + 2x2 + 1 = 30 points.
    Thirty,
    /// 3x3 + 2x2 + 1 = 14 points.
    Fourteen,
    Custom(Vec<usize>),
}

impl LatticePreset {
    fn grids(&self) -> Vec<usize> {
        match self {
            LatticePreset::Thirty => vec![5, 2, 1],
            LatticePreset::Fourteen => vec![3, 2, 1],
            LatticePreset::Custom(v) => v.clone(),
        }
    }
}

/// Build the lattice over the workspace. Layer altitude is where one
/// footprint matches the layer spacing, clipped to the workspace band.
pub fn build_lattice(
    workspace: &Workspace,
    preset: &LatticePreset,
    camera: &CameraConfig,
) -> Result<Lattice> {
    if workspace.min[2] <= 0.0 {
        return Err(IppError::InvalidArgument(
            "workspace minimum altitude must be positive".into(),
        ));
    }
    let grids = preset.grids();
    if grids.is_empty() || grids.contains(&0) {
        return Err(IppError::InvalidArgument(
            "lattice preset needs at least one non-empty layer".into(),
        ));
    }
    let ex = workspace.max[0] - workspace.min[0];
    let ey = workspace.max[1] - workspace.min[1];
    let tan_x = (camera.fov_x_deg.to_radians() / 2.0).tan();
    let tan_y = (camera.fov_y_deg.to_radians() / 2.0).tan();

    let mut order: Vec<usize> = grids.clone();
    order.sort_unstable_by(|a, b| b.cmp(a));
    let mut points = Vec::new();
    let mut layers = Vec::new();
    for k in order {
        let (sx, sy) = (ex / k as f64, ey / k as f64);
        // the larger of the two abutment altitudes keeps both axes covered
        let h = (sx / (2.0 * tan_x))
            .max(sy / (2.0 * tan_y))
            .clamp(workspace.min[2], workspace.max[2]);
        layers.push((h, sx.max(sy)));
        for row in 0..k {
            for col in 0..k {
                points.push([
                    workspace.min[0] + (col as f64 + 0.5) * sx,
                    workspace.min[1] + (row as f64 + 0.5) * sy,
                    h,
                ]);
            }
        }
    }
    Ok(Lattice { points, layers })
}

/// Map being built during a mission.
#[derive(Debug, Clone)]
pub enum MapState {
    Continuous(GpFieldMap),
    Discrete(OccupancyMap),
}

impl MapState {
    /// Tr(P) for continuous maps, entropy in bits for discrete maps,
    /// optionally restricted to a cell subset.
    pub fn uncertainty(&self, subset: Option<&[usize]>) -> Result<f64> {
        match self {
            MapState::Continuous(m) => Ok(trace_uncertainty(m, subset)),
            MapState::Discrete(m) => entropy(m, TARGET_LAYER, subset),
        }
    }
}

#[derive(Debug, Clone)]
pub enum SensorModel {
    Continuous(ContinuousSensorModel),
    Discrete(BinaryClassifierModel),
}

/// Region-of-interest rule restricting the utility computation.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub enum AdaptiveRule {
    /// Keep cells with mu_i + beta * sigma_i >= mu_th.
    Continuous { mu_th: f64, beta: f64 },
    /// Keep cells with p > p_th.
    Discrete { p_th: f64 },
}

#[derive(Debug, Clone)]
pub struct PlannerConfig {
    /// Control waypoints per plan, including the fixed start.
    pub num_waypoints: usize,
    /// Mission budget (s).
    pub budget: f64,
    pub adaptive: Option<AdaptiveRule>,
    pub workspace: Workspace,
    pub camera: CameraConfig,
    pub sensor: SensorModel,
    pub v_max: f64,
    pub a_max: f64,
    pub poly_order: usize,
    /// Cap on measurements along one trajectory.
    pub max_measurements: usize,
    pub cma_iterations: usize,
    pub cma_population: Option<usize>,
    /// Initial step sizes per axis (m).
    pub cma_steps: [f64; 3],
}

impl PlannerConfig {
    fn validate(&self) -> Result<()> {
        if self.num_waypoints < 2 {
            return Err(IppError::InvalidArgument(format!(
                "need at least 2 waypoints per plan, got {}",
                self.num_waypoints
            )));
        }
        if self.budget <= 0.0 {
            return Err(IppError::InvalidArgument(format!(
                "budget must be positive, got {}",
                self.budget
            )));
        }
        Ok(())
    }

    fn check_map(&self, map: &MapState) -> Result<()> {
        match (map, &self.sensor) {
            (MapState::Continuous(_), SensorModel::Continuous(_)) => Ok(()),
            (MapState::Discrete(_), SensorModel::Discrete(_)) => Ok(()),
            _ => Err(IppError::InvalidArgument(
                "map kind does not match sensor model kind".into(),
            )),
        }
    }
}

/// Cells the adaptive rule currently marks interesting; None = all cells.
pub fn interesting_subset(
    map: &MapState,
    adaptive: Option<&AdaptiveRule>,
) -> Result<Option<Vec<usize>>> {
    match (map, adaptive) {
        (_, None) => Ok(None),
        (MapState::Continuous(m), Some(AdaptiveRule::Continuous { mu_th, beta })) => {
            Ok(Some(interesting_cells_continuous(m, *mu_th, *beta)?))
        }
        (MapState::Discrete(m), Some(AdaptiveRule::Discrete { p_th })) => {
            Ok(Some(interesting_cells_discrete(m, TARGET_LAYER, *p_th)?))
        }
        _ => Err(IppError::InvalidArgument(
            "adaptive rule does not match map kind".into(),
        )),
    }
}

/// Cumulative information gain from fusing the trajectory's measurement
/// poses in sequence: Tr(P) reduction (continuous) or entropy reduction in
/// bits (discrete), over the subset when given.
pub fn trajectory_utility(
    map: &MapState,
    traj: &Trajectory,
    config: &PlannerConfig,
) -> Result<f64> {
    config.check_map(map)?;
    let subset = interesting_subset(map, config.adaptive.as_ref())?;
    let poses = measurement_poses(traj, config.camera.frequency_hz, config.max_measurements)?;
    match (map, &config.sensor) {
        (MapState::Continuous(m), SensorModel::Continuous(model)) => {
            if let Some(s) = &subset {
                if s.is_empty() {
                    return Ok(0.0);
                }
            }
            let mut eval = SequentialGainEvaluator::new(m, subset.as_deref());
            let mut total = 0.0;
            for (_, pose) in &poses {
                let rows = predicted_rows(m, *pose, &config.camera, model)?;
                total += eval.add_rows(&rows)?;
            }
            Ok(total)
        }
        (MapState::Discrete(m), SensorModel::Discrete(model)) => {
            let mut work = m.clone();
            let mut total = 0.0;
            for (_, pose) in &poses {
                let before = entropy(&work, TARGET_LAYER, subset.as_deref())?;
                work = predict_discrete_update(&work, TARGET_LAYER, *pose, &config.camera, model)?;
                total += before - entropy(&work, TARGET_LAYER, subset.as_deref())?;
            }
            Ok(total)
        }
        _ => unreachable!("check_map verified the pairing"),
    }
}

/// Greedy travel-time denominator: straight-line time at v_max with a 1 s
/// floor so coincident points cannot blow up the rate.
pub fn travel_time(a: [f64; 3], b: [f64; 3], v_max: f64) -> f64 {
    constant_velocity_time(a, b, v_max).max(1.0)
}

/// Greedy next-best-view sequence: starting from `start`, repeatedly picks
/// the lattice point maximizing predicted gain per travel second, folding
/// each predicted measurement into the working map state. Ties break on
/// the lowest lattice index. If every candidate has zero gain, remaining
/// waypoints fall back to the nearest unvisited lattice points.
pub fn greedy_lattice_search(
    map: &MapState,
    start: [f64; 3],
    lattice: &Lattice,
    config: &PlannerConfig,
) -> Result<Vec<[f64; 3]>> {
    config.validate()?;
    config.check_map(map)?;
    if lattice.points.is_empty() {
        return Err(IppError::InvalidArgument("empty lattice".into()));
    }
    let subset = interesting_subset(map, config.adaptive.as_ref())?;
    let empty_subset = subset.as_ref().is_some_and(|s| s.is_empty());
    let mut waypoints = vec![start];
    let mut visited = vec![false; lattice.points.len()];

    match (map, &config.sensor) {
        (MapState::Continuous(m), SensorModel::Continuous(model)) => {
            let mut eval = SequentialGainEvaluator::new(m, subset.as_deref());
            let rows_for: Vec<_> = lattice
                .points
                .iter()
                .map(|&p| predicted_rows(m, p, &config.camera, model))
                .collect::<Result<_>>()?;
            while waypoints.len() < config.num_waypoints {
                let prev = *waypoints.last().unwrap();
                let mut best: Option<(usize, f64)> = None;
                if !empty_subset {
                    for (i, rows) in rows_for.iter().enumerate() {
                        // staying put would always win the rate contest via
                        // the travel-time floor; require actual motion
                        if dist(prev, lattice.points[i]) < 1e-9 {
                            continue;
                        }
                        let gain = eval.peek_rows(rows)?;
                        if gain <= 0.0 {
                            continue;
                        }
                        let rate = gain / travel_time(prev, lattice.points[i], config.v_max);
                        if best.is_none_or(|(_, b)| rate > b) {
                            best = Some((i, rate));
                        }
                    }
                }
                let idx = match best {
                    Some((i, _)) => i,
                    None => nearest_unvisited(prev, lattice, &visited)?,
                };
                eval.add_rows(&rows_for[idx])?;
                visited[idx] = true;
                waypoints.push(lattice.points[idx]);
            }
        }
        (MapState::Discrete(m), SensorModel::Discrete(model)) => {
            let mut work = m.clone();
            while waypoints.len() < config.num_waypoints {
                let prev = *waypoints.last().unwrap();
                let base = entropy(&work, TARGET_LAYER, subset.as_deref())?;
                let mut best: Option<(usize, f64, OccupancyMap)> = None;
                if !empty_subset {
                    for (i, &p) in lattice.points.iter().enumerate() {
                        if dist(prev, p) < 1e-9 {
                            continue;
                        }
                        let updated =
                            predict_discrete_update(&work, TARGET_LAYER, p, &config.camera, model)?;
                        let gain = base - entropy(&updated, TARGET_LAYER, subset.as_deref())?;
                        if gain <= 0.0 {
                            continue;
                        }
                        let rate = gain / travel_time(prev, p, config.v_max);
                        if best.as_ref().is_none_or(|&(_, b, _)| rate > b) {
                            best = Some((i, rate, updated));
                        }
                    }
                }
                let idx = match best {
                    Some((i, _, updated)) => {
                        work = updated;
                        i
                    }
                    None => {
                        let i = nearest_unvisited(prev, lattice, &visited)?;
                        work = predict_discrete_update(
                            &work,
                            TARGET_LAYER,
                            lattice.points[i],
                            &config.camera,
                            model,
                        )?;
                        i
                    }
                };
                visited[idx] = true;
                waypoints.push(lattice.points[idx]);
            }
        }
        _ => unreachable!("check_map verified the pairing"),
    }
    Ok(waypoints)
}

fn nearest_unvisited(from: [f64; 3], lattice: &Lattice, visited: &[bool]) -> Result<usize> {
    let pick = |iter: &mut dyn Iterator<Item = usize>| {
        iter.min_by(|&a, &b| {
            dist(from, lattice.points[a])
                .total_cmp(&dist(from, lattice.points[b]))
                .then(a.cmp(&b))
        })
    };
    // prefer unvisited points that actually move the platform
    let moving =
        (0..lattice.points.len()).filter(|&i| !visited[i] && dist(from, lattice.points[i]) >= 1e-9);
    let unvisited = (0..lattice.points.len()).filter(|&i| !visited[i]);
    pick(&mut moving.into_iter())
        .or_else(|| pick(&mut unvisited.into_iter()))
        .or_else(|| pick(&mut (0..lattice.points.len()).into_iter()))
        .ok_or_else(|| IppError::InvalidArgument("empty lattice".into()))
}

fn dist(a: [f64; 3], b: [f64; 3]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

/// The planner's scalar objective: information gain per travel second of
/// the whole polynomial trajectory.
pub fn trajectory_objective(
    map: &MapState,
    waypoints: &[[f64; 3]],
    config: &PlannerConfig,
) -> Result<f64> {
    let traj = plan_polynomial(waypoints, config.poly_order, config.v_max, config.a_max)?;
    Ok(trajectory_utility(map, &traj, config)? / cost(&traj))
}

/// One planning round: greedy lattice seed, then CMA-ES over the
/// 3(N-1) free waypoint coordinates (the start stays fixed), returning
/// whichever of the two trajectories scores better.
pub fn replan(
    map: &MapState,
    start: [f64; 3],
    lattice: &Lattice,
    config: &PlannerConfig,
    seed: u64,
) -> Result<Trajectory> {
    let grid_wps = greedy_lattice_search(map, start, lattice, config)?;
    let seed_traj = plan_polynomial(&grid_wps, config.poly_order, config.v_max, config.a_max)?;
    if config.cma_iterations == 0 {
        return Ok(seed_traj);
    }

    let free = &grid_wps[1..];
    let x0: Vec<f64> = free.iter().flatten().copied().collect();
    let mut bounds = Vec::with_capacity(x0.len());
    let mut steps = Vec::with_capacity(x0.len());
    for _ in 0..free.len() {
        for axis in 0..3 {
            bounds.push([config.workspace.min[axis], config.workspace.max[axis]]);
            steps.push(config.cma_steps[axis]);
        }
    }
    let cma = CmaConfig {
        population_size: config.cma_population,
        initial_step_sizes: steps,
        max_iterations: config.cma_iterations,
        bounds,
        seed,
    };
    let objective = |x: &[f64]| {
        let mut wps = vec![start];
        wps.extend(x.chunks(3).map(|c| [c[0], c[1], c[2]]));
        trajectory_objective(map, &wps, config).unwrap_or(f64::NEG_INFINITY)
    };
    let result = cmaes::maximize(objective, &x0, &cma);
    match result {
        Ok(r) => {
            let mut wps = vec![start];
            wps.extend(r.best.chunks(3).map(|c| [c[0], c[1], c[2]]));
            let optimized =
                plan_polynomial(&wps, config.poly_order, config.v_max, config.a_max)?;
            // best-of-two: CMA already seeds from the greedy solution, so
            // this guards only against numerical ties going the wrong way
            let seed_score = trajectory_objective(map, &grid_wps, config)?;
            if r.best_score >= seed_score {
                Ok(optimized)
            } else {
                Ok(seed_traj)
            }
        }
        Err(_) => Ok(seed_traj),
    }
}

/// Everything a mission needs besides the planner itself.
pub struct MissionContext<'a> {
    pub truth: &'a GroundTruthField,
    pub config: &'a PlannerConfig,
    pub trial: u64,
    pub planner_name: &'a str,
    /// Fixed cell subset for the logged delta_sigma2 column (continuous
    /// adaptive evaluations); None suppresses the column.
    pub eval_interesting: Option<&'a [usize]>,
}

fn record(
    map: &MapState,
    t: f64,
    ctx: &MissionContext,
) -> Result<MetricsRecord> {
    let truth = &ctx.truth.values;
    let (uncertainty, rmse, wrmse, mll, wmll, delta) = match map {
        MapState::Continuous(m) => {
            let mean: Vec<f64> = m.mean.iter().copied().collect();
            let var: Vec<f64> = m.cov.diagonal().iter().map(|&v| v.max(1e-12)).collect();
            (
                trace_uncertainty(m, None),
                metrics::rmse(&mean, truth)?,
                metrics::wrmse(&mean, truth)?,
                Some(metrics::mll(&mean, &var, truth)?),
                Some(metrics::wmll(&mean, &var, truth)?),
                ctx.eval_interesting
                    .and_then(|s| metrics::delta_sigma2(&var, s)),
            )
        }
        MapState::Discrete(m) => {
            let p = m.probabilities(TARGET_LAYER)?;
            (
                entropy(m, TARGET_LAYER, None)?,
                metrics::rmse(&p, truth)?,
                metrics::wrmse(&p, truth)?,
                None,
                None,
                None,
            )
        }
    };
    Ok(MetricsRecord {
        t,
        uncertainty,
        rmse,
        wrmse,
        mll,
        wmll,
        delta_sigma2: delta,
        trial: ctx.trial,
        planner: ctx.planner_name.to_string(),
    })
}

/// Fixed-horizon mission loop: alternate planning and execution until the
/// budget is spent, fusing simulated measurements and logging one metrics
/// record per measurement. Execution truncates after the last measurement
/// that still fits the budget.
pub fn run_mission<F>(
    map: &mut MapState,
    start: [f64; 3],
    ctx: &MissionContext,
    rng: &mut ChaCha8Rng,
    mut plan: F,
) -> Result<Vec<MetricsRecord>>
where
    F: FnMut(&MapState, [f64; 3], f64, &mut ChaCha8Rng) -> Result<Trajectory>,
{
    let config = ctx.config;
    config.validate()?;
    config.check_map(map)?;
    let mut records = Vec::new();
    let mut elapsed = 0.0;
    let mut pose = start;
    while elapsed < config.budget {
        let traj = plan(map, pose, elapsed, rng)?;
        let poses =
            measurement_poses(&traj, config.camera.frequency_hz, config.max_measurements)?;
        for (t_local, p) in &poses {
            let t = elapsed + t_local;
            if t > config.budget + 1e-9 {
                // budget expires mid-flight; the mission ends here
                return Ok(records);
            }
            match (&mut *map, &config.sensor) {
                (MapState::Continuous(m), SensorModel::Continuous(model)) => {
                    let patch =
                        simulate_continuous_measurement(*p, &config.camera, model, ctx.truth, rng)?;
                    gp::fuse(m, &patch)?;
                }
                (MapState::Discrete(m), SensorModel::Discrete(model)) => {
                    let patch =
                        simulate_discrete_measurement(*p, &config.camera, model, ctx.truth, rng)?;
                    update_discrete(m, TARGET_LAYER, &patch, model)?;
                }
                _ => unreachable!("check_map verified the pairing"),
            }
            records.push(record(map, t, ctx)?);
        }
        elapsed += cost(&traj).max(0.01);
        pose = traj.end_position();
    }
    Ok(records)
}

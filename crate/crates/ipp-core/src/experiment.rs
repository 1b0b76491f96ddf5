//! Multi-trial experiment runner: TOML config, per-trial metric CSVs, a
//! time-binned aggregate with confidence bounds, and a reproducibility
//! manifest.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::benchmarks;
use crate::error::{IppError, Result};
use crate::field::{
    generate_binary_field, generate_gaussian_field, generate_split_field, GroundTruthField,
};
use crate::gp::{build_prior, GpFieldMap, MaternKernel};
use crate::grid::{GridGeometry, Workspace};
use crate::metrics::MetricsRecord;
use crate::occupancy::OccupancyMap;
use crate::planner::{
    build_lattice, replan, run_mission, AdaptiveRule, LatticePreset, MapState, MissionContext,
    PlannerConfig, SensorModel,
};
use crate::sensor::{BinaryClassifierModel, CameraConfig, ContinuousSensorModel};

fn default_trials() -> usize {
    30
}
fn default_seed() -> u64 {
    0
}
fn default_prior_mean() -> f64 {
    50.0
}
fn default_budget() -> f64 {
    200.0
}
fn default_start() -> [f64; 3] {
    [7.5, 7.5, 8.66]
}
fn default_v_max() -> f64 {
    5.0
}
fn default_a_max() -> f64 {
    2.0
}
fn default_poly_order() -> usize {
    12
}
fn default_max_measurements() -> usize {
    10
}
fn default_num_waypoints() -> usize {
    5
}
fn default_cma_iterations() -> usize {
    45
}
fn default_cma_steps() -> [f64; 3] {
    [3.0, 3.0, 4.0]
}
fn default_time_bin() -> f64 {
    1.0
}
fn default_z_band() -> [f64; 2] {
    [1.0, 26.0]
}
fn default_lawnmower_altitude() -> f64 {
    8.66
}
fn default_radius_range() -> [f64; 2] {
    [1.0, 3.0]
}
fn default_value_range() -> [f64; 2] {
    [0.0, 100.0]
}
fn default_resolution() -> f64 {
    0.75
}
fn default_extent() -> [f64; 2] {
    [30.0, 30.0]
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// Any of: cmaes, lattice, random, lawnmower, spiral.
    pub planners: Vec<String>,
    #[serde(default)]
    pub map: MapConfig,
    #[serde(default)]
    pub field: FieldConfig,
    #[serde(default)]
    pub mission: MissionConfig,
    #[serde(default)]
    pub planner: PlannerSection,
    #[serde(default)]
    pub adaptive: Option<AdaptiveSection>,
    #[serde(default)]
    pub benchmarks: BenchmarkSection,
    #[serde(default = "default_time_bin")]
    pub time_bin: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapConfig {
    /// "continuous" (GP field map) or "discrete" (occupancy grid).
    #[serde(default)]
    pub kind: MapKind,
    #[serde(default)]
    pub origin: [f64; 2],
    #[serde(default = "default_extent")]
    pub extent: [f64; 2],
    #[serde(default = "default_resolution")]
    pub resolution: f64,
    #[serde(default = "default_prior_mean")]
    pub prior_mean: f64,
    #[serde(default = "MaternKernel::survey_default")]
    pub kernel: MaternKernel,
}

impl Default for MapConfig {
    fn default() -> Self {
        toml::from_str("").unwrap()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MapKind {
    #[default]
    Continuous,
    Discrete,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldConfig {
    /// "gaussian", "split" or "binary".
    #[serde(default)]
    pub kind: FieldKind,
    #[serde(default = "default_radius_range")]
    pub radius_range: [f64; 2],
    #[serde(default = "default_value_range")]
    pub value_range: [f64; 2],
    /// Split-field threshold (%).
    #[serde(default = "default_prior_mean")]
    pub threshold: f64,
    /// Binary-field occupied share.
    #[serde(default)]
    pub occupancy_fraction: f64,
}

impl Default for FieldConfig {
    fn default() -> Self {
        toml::from_str("").unwrap()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FieldKind {
    #[default]
    Gaussian,
    Split,
    Binary,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MissionConfig {
    #[serde(default = "default_budget")]
    pub budget: f64,
    #[serde(default = "default_start")]
    pub start: [f64; 3],
    #[serde(default = "default_z_band")]
    pub z_band: [f64; 2],
    #[serde(default = "default_v_max")]
    pub v_max: f64,
    #[serde(default = "default_a_max")]
    pub a_max: f64,
    #[serde(default = "default_poly_order")]
    pub poly_order: usize,
    #[serde(default = "default_max_measurements")]
    pub max_measurements: usize,
    #[serde(default = "default_num_waypoints")]
    pub num_waypoints: usize,
}

impl Default for MissionConfig {
    fn default() -> Self {
        toml::from_str("").unwrap()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlannerSection {
    #[serde(default = "default_lattice_preset")]
    pub lattice_preset: LatticePreset,
    #[serde(default = "default_cma_iterations")]
    pub cma_iterations: usize,
    #[serde(default)]
    pub cma_population: Option<usize>,
    #[serde(default = "default_cma_steps")]
    pub cma_steps: [f64; 3],
}

fn default_lattice_preset() -> LatticePreset {
    LatticePreset::Thirty
}

impl Default for PlannerSection {
    fn default() -> Self {
        toml::from_str("").unwrap()
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdaptiveSection {
    /// Continuous rule: mu_th (%) and beta.
    pub mu_th: Option<f64>,
    pub beta: Option<f64>,
    /// Discrete rule: probability threshold.
    pub p_th: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchmarkSection {
    #[serde(default = "default_lawnmower_altitude")]
    pub lawnmower_altitude: f64,
    #[serde(default = "default_z_band")]
    pub spiral_z: [f64; 2],
}

impl Default for BenchmarkSection {
    fn default() -> Self {
        toml::from_str("").unwrap()
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let config: ExperimentConfig =
            toml::from_str(text).map_err(|e| IppError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(IppError::Config("trials must be at least 1".into()));
        }
        if self.planners.is_empty() {
            return Err(IppError::Config("no planners declared".into()));
        }
        for p in &self.planners {
            if !matches!(
                p.as_str(),
                "cmaes" | "lattice" | "random" | "lawnmower" | "spiral"
            ) {
                return Err(IppError::Config(format!("unknown planner {p:?}")));
            }
        }
        if self.time_bin <= 0.0 {
            return Err(IppError::Config("time_bin must be positive".into()));
        }
        if let Some(a) = &self.adaptive {
            let continuous = a.mu_th.is_some() && a.beta.is_some();
            let discrete = a.p_th.is_some();
            if continuous == discrete {
                return Err(IppError::Config(
                    "adaptive section needs either mu_th+beta or p_th".into(),
                ));
            }
        }
        Ok(())
    }

    pub fn geometry(&self) -> Result<GridGeometry> {
        GridGeometry::new(self.map.origin, self.map.extent, self.map.resolution)
    }

    pub fn workspace(&self) -> Result<Workspace> {
        let g = self.geometry()?;
        Workspace::over_grid(&g, self.mission.z_band[0], self.mission.z_band[1])
    }

    fn adaptive_rule(&self) -> Option<AdaptiveRule> {
        self.adaptive.as_ref().map(|a| match (a.mu_th, a.beta) {
            (Some(mu_th), Some(beta)) => AdaptiveRule::Continuous { mu_th, beta },
            _ => AdaptiveRule::Discrete {
                p_th: a.p_th.unwrap(),
            },
        })
    }

    fn sensor(&self) -> SensorModel {
        match self.map.kind {
            MapKind::Continuous => SensorModel::Continuous(ContinuousSensorModel::survey_default()),
            MapKind::Discrete => SensorModel::Discrete(BinaryClassifierModel::default_curves(
                self.mission.z_band[0],
                self.mission.z_band[1],
            )),
        }
    }

    pub fn planner_config(&self) -> Result<PlannerConfig> {
        Ok(PlannerConfig {
            num_waypoints: self.mission.num_waypoints,
            budget: self.mission.budget,
            adaptive: self.adaptive_rule(),
            workspace: self.workspace()?,
            camera: CameraConfig::survey_default(),
            sensor: self.sensor(),
            v_max: self.mission.v_max,
            a_max: self.mission.a_max,
            poly_order: self.mission.poly_order,
            max_measurements: self.mission.max_measurements,
            cma_iterations: self.planner.cma_iterations,
            cma_population: self.planner.cma_population,
            cma_steps: self.planner.cma_steps,
        })
    }

    pub fn truth_for_trial(&self, trial: usize) -> Result<GroundTruthField> {
        let g = self.geometry()?;
        let seed = self.seed.wrapping_add(trial as u64);
        match self.field.kind {
            FieldKind::Gaussian => {
                generate_gaussian_field(g, self.field.radius_range, self.field.value_range, seed)
            }
            FieldKind::Split => generate_split_field(g, self.field.threshold, seed),
            FieldKind::Binary => generate_binary_field(g, self.field.occupancy_fraction, seed),
        }
    }
}

/// Shareable prior: identical for every trial of an experiment, so it is
/// built once and cloned.
fn fresh_map(config: &ExperimentConfig, prior: Option<&GpFieldMap>) -> Result<MapState> {
    match config.map.kind {
        MapKind::Continuous => Ok(MapState::Continuous(match prior {
            Some(p) => p.clone(),
            None => build_prior(config.geometry()?, &config.map.kernel, config.map.prior_mean)?,
        })),
        MapKind::Discrete => Ok(MapState::Discrete(OccupancyMap::single_layer(
            config.geometry()?,
        ))),
    }
}

fn trial_rng(config: &ExperimentConfig, planner_index: usize, trial: usize) -> ChaCha8Rng {
    // independent, reproducible stream per (planner, trial)
    let mut h = Sha256::new();
    h.update(config.seed.to_le_bytes());
    h.update((planner_index as u64).to_le_bytes());
    h.update((trial as u64).to_le_bytes());
    let digest = h.finalize();
    ChaCha8Rng::seed_from_u64(u64::from_le_bytes(digest[..8].try_into().unwrap()))
}

/// Run one (planner, trial) mission and return its metric records.
pub fn run_trial(
    config: &ExperimentConfig,
    planner: &str,
    planner_index: usize,
    trial: usize,
    prior: Option<&GpFieldMap>,
) -> Result<Vec<MetricsRecord>> {
    let truth = config.truth_for_trial(trial)?;
    let mut pconfig = config.planner_config()?;
    if planner != "cmaes" {
        pconfig.cma_iterations = 0;
    }
    let workspace = pconfig.workspace;
    let camera = pconfig.camera;
    let mut map = fresh_map(config, prior)?;

    // the logged delta_sigma2 compares variance inside vs outside the
    // ground-truth region of interest, so planners are scored against the
    // same fixed partition
    let eval_interesting: Option<Vec<usize>> = config.adaptive.as_ref().map(|a| {
        let th = a.mu_th.unwrap_or(0.5);
        truth
            .values
            .iter()
            .enumerate()
            .filter(|&(_, &v)| v >= th)
            .map(|(i, _)| i)
            .collect()
    });

    let ctx = MissionContext {
        truth: &truth,
        config: &pconfig,
        trial: trial as u64,
        planner_name: planner,
        eval_interesting: eval_interesting.as_deref(),
    };
    let mut rng = trial_rng(config, planner_index, trial);
    let start = config.mission.start;
    let budget = config.mission.budget;

    match planner {
        "cmaes" | "lattice" => {
            let lattice = build_lattice(&workspace, &config.planner.lattice_preset, &camera)?;
            let mut round = 0u64;
            run_mission(&mut map, start, &ctx, &mut rng, |m, pose, _, _| {
                round += 1;
                let seed = config
                    .seed
                    .wrapping_add(trial as u64)
                    .wrapping_mul(1000)
                    .wrapping_add(round);
                replan(m, pose, &lattice, &pconfig, seed)
            })
        }
        "random" => run_mission(&mut map, start, &ctx, &mut rng, |_, pose, _, rng| {
            benchmarks::random_planner(
                pose,
                &workspace,
                pconfig.v_max,
                pconfig.a_max,
                pconfig.poly_order,
                rng,
            )
        }),
        "lawnmower" => {
            let (traj, _) = benchmarks::lawnmower(
                &workspace,
                &camera,
                budget,
                config.benchmarks.lawnmower_altitude,
                pconfig.poly_order,
            )?;
            run_mission(&mut map, traj.sample(0.0), &ctx, &mut rng, move |_, _, _, _| {
                Ok(traj.clone())
            })
        }
        "spiral" => {
            let traj = benchmarks::spiral(
                &workspace,
                budget,
                config.benchmarks.spiral_z,
                pconfig.v_max,
                pconfig.a_max,
                pconfig.poly_order,
            )?;
            run_mission(&mut map, traj.sample(0.0), &ctx, &mut rng, move |_, _, _, _| {
                Ok(traj.clone())
            })
        }
        other => Err(IppError::Config(format!("unknown planner {other:?}"))),
    }
}

const CSV_HEADER: &str = "t,uncertainty,rmse,wrmse,mll,wmll,delta_sigma2,trial,planner";

fn write_records<W: Write>(records: &[MetricsRecord], mut w: W) -> Result<()> {
    writeln!(w, "{CSV_HEADER}")?;
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for r in records {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{}",
            r.t,
            r.uncertainty,
            r.rmse,
            r.wrmse,
            opt(r.mll),
            opt(r.wmll),
            opt(r.delta_sigma2),
            r.trial,
            r.planner
        )?;
    }
    Ok(())
}

/// Per-planner aggregate over trials: forward-filled metric values in
/// fixed time bins, with mean and normal-approximation 95% bounds.
pub struct AggregateRow {
    pub planner: String,
    pub t: f64,
    pub mean_uncertainty: f64,
    pub ci_uncertainty: f64,
    pub mean_rmse: f64,
    pub ci_rmse: f64,
    pub trials: usize,
}

fn mean_ci(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, 1.96 * (var / n).sqrt())
}

pub fn aggregate(
    per_trial: &BTreeMap<(String, usize), Vec<MetricsRecord>>,
    budget: f64,
    time_bin: f64,
) -> Vec<AggregateRow> {
    let mut planners: Vec<String> = per_trial.keys().map(|(p, _)| p.clone()).collect();
    planners.dedup();
    let bins = (budget / time_bin).ceil() as usize;
    let mut rows = Vec::new();
    for planner in planners {
        let trials: Vec<&Vec<MetricsRecord>> = per_trial
            .iter()
            .filter(|((p, _), _)| *p == planner)
            .map(|(_, v)| v)
            .collect();
        for b in 0..=bins {
            let t = b as f64 * time_bin;
            let mut unc = Vec::new();
            let mut rmse = Vec::new();
            for records in &trials {
                // forward fill: last record at or before the bin time
                if let Some(r) = records.iter().rev().find(|r| r.t <= t + 1e-9) {
                    unc.push(r.uncertainty);
                    rmse.push(r.rmse);
                }
            }
            if unc.is_empty() {
                continue;
            }
            let (mu, cu) = mean_ci(&unc);
            let (mr, cr) = mean_ci(&rmse);
            rows.push(AggregateRow {
                planner: planner.clone(),
                t,
                mean_uncertainty: mu,
                ci_uncertainty: cu,
                mean_rmse: mr,
                ci_rmse: cr,
                trials: unc.len(),
            });
        }
    }
    rows
}

#[derive(Debug, Serialize)]
struct Manifest {
    name: String,
    config_sha256: String,
    base_seed: u64,
    trials: usize,
    planners: Vec<String>,
    trial_seeds: Vec<u64>,
    records_per_run: BTreeMap<String, usize>,
    failed_runs: Vec<String>,
}

/// Run every (planner, trial) pair sequentially and write one CSV per run,
/// an aggregate CSV, and a manifest. Returns the in-memory records.
pub fn run_experiment(
    config_text: &str,
    out_dir: &Path,
) -> Result<BTreeMap<(String, usize), Vec<MetricsRecord>>> {
    let config = ExperimentConfig::from_toml(config_text)?;
    std::fs::create_dir_all(out_dir)?;

    let prior = match config.map.kind {
        MapKind::Continuous => Some(build_prior(
            config.geometry()?,
            &config.map.kernel,
            config.map.prior_mean,
        )?),
        MapKind::Discrete => None,
    };

    let mut results = BTreeMap::new();
    let mut records_per_run = BTreeMap::new();
    let mut failed = Vec::new();
    for (pi, planner) in config.planners.iter().enumerate() {
        for trial in 0..config.trials {
            let run_id = format!("{planner}_trial{trial:03}");
            match run_trial(&config, planner, pi, trial, prior.as_ref()) {
                Ok(records) => {
                    let file = std::fs::File::create(out_dir.join(format!("{run_id}.csv")))?;
                    write_records(&records, std::io::BufWriter::new(file))?;
                    records_per_run.insert(run_id, records.len());
                    results.insert((planner.clone(), trial), records);
                }
                Err(e) => {
                    failed.push(format!("{run_id}: {e}"));
                }
            }
        }
    }

    let rows = aggregate(&results, config.mission.budget, config.time_bin);
    let mut agg = std::io::BufWriter::new(std::fs::File::create(out_dir.join("aggregate.csv"))?);
    writeln!(
        agg,
        "planner,t,mean_uncertainty,ci95_uncertainty,mean_rmse,ci95_rmse,trials"
    )?;
    for r in rows {
        writeln!(
            agg,
            "{},{},{},{},{},{},{}",
            r.planner, r.t, r.mean_uncertainty, r.ci_uncertainty, r.mean_rmse, r.ci_rmse, r.trials
        )?;
    }
    drop(agg);

    let manifest = Manifest {
        name: config.name.clone(),
        config_sha256: Sha256::digest(config_text.as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect(),
        base_seed: config.seed,
        trials: config.trials,
        planners: config.planners.clone(),
        trial_seeds: (0..config.trials)
            .map(|t| config.seed.wrapping_add(t as u64))
            .collect(),
        records_per_run,
        failed_runs: failed,
    };
    let json = serde_json::to_string_pretty(&manifest)
        .map_err(|e| IppError::Config(e.to_string()))?;
    std::fs::write(out_dir.join("manifest.json"), json)?;
    Ok(results)
}

/// A commented template config, used by the CLI's init command.
pub const EXAMPLE_CONFIG: &str = r#"name = "gaussian-continuous"
trials = 5
seed = 7
planners = ["cmaes", "lattice", "random", "lawnmower", "spiral"]

[map]
kind = "continuous"
origin = [0.0, 0.0]
extent = [30.0, 30.0]
resolution = 0.75
prior_mean = 50.0
kernel = { sigma_f2 = 1.82, length_scale = 3.67, sigma_n2 = 1.42 }

[field]
kind = "gaussian"
radius_range = [1.0, 3.0]
value_range = [0.0, 100.0]

[mission]
budget = 200.0
start = [7.5, 7.5, 8.66]
z_band = [1.0, 26.0]
v_max = 5.0
a_max = 2.0
num_waypoints = 5

[planner]
lattice_preset = "thirty"
cma_iterations = 45
cma_steps = [3.0, 3.0, 4.0]

[benchmarks]
lawnmower_altitude = 8.66
spiral_z = [1.0, 26.0]
"#;

#[cfg(test)]
mod tests {
    use super::*;

    fn small_config(extra: &str) -> String {
        format!(
            r#"name = "test"
trials = 2
seed = 11
planners = ["lattice"]

[map]
extent = [10.0, 10.0]
resolution = 1.0

[mission]
budget = 30.0
start = [5.0, 5.0, 8.0]
z_band = [1.0, 26.0]

[planner]
lattice_preset = "fourteen"
cma_iterations = 0
{extra}"#
        )
    }

    #[test]
    fn example_config_parses() {
        let c = ExperimentConfig::from_toml(EXAMPLE_CONFIG).unwrap();
        assert_eq!(c.planners.len(), 5);
        assert_eq!(c.mission.budget, 200.0);
        assert_eq!(c.map.kernel.length_scale, 3.67);
    }

    #[test]
    fn bad_configs_name_the_problem() {
        let err = ExperimentConfig::from_toml("name = \"x\"\nplanners = [\"warp\"]\ntrials = 1")
            .unwrap_err();
        assert!(err.to_string().contains("warp"), "{err}");
        let err = ExperimentConfig::from_toml("name = 3").unwrap_err();
        assert!(matches!(err, IppError::Config(_)));
        // unknown keys rejected so typos cannot silently disable options
        let bad = small_config("\n[mission2]\nbudget = 1.0");
        assert!(ExperimentConfig::from_toml(&bad).is_err());
    }

    #[test]
    fn experiment_outputs_and_determinism() {
        let dir = tempfile::tempdir().unwrap();
        let config = small_config("");
        let a = run_experiment(&config, &dir.path().join("a")).unwrap();
        let b = run_experiment(&config, &dir.path().join("b")).unwrap();
        assert_eq!(a.len(), 2);
        for key in a.keys() {
            assert_eq!(a[key].len(), b[key].len());
        }
        for name in ["lattice_trial000.csv", "lattice_trial001.csv", "aggregate.csv"] {
            let fa = std::fs::read(dir.path().join("a").join(name)).unwrap();
            let fb = std::fs::read(dir.path().join("b").join(name)).unwrap();
            assert_eq!(fa, fb, "{name} not byte-identical");
            assert!(!fa.is_empty());
        }
        assert!(dir.path().join("a/manifest.json").exists());

        // trace column is monotone non-increasing within a trial
        for records in a.values() {
            for w in records.windows(2) {
                assert!(w[1].uncertainty <= w[0].uncertainty + 1e-9);
            }
        }
    }

    #[test]
    fn aggregate_means_match_trials() {
        let mk = |trial: usize, values: &[(f64, f64)]| {
            values
                .iter()
                .map(|&(t, u)| MetricsRecord {
                    t,
                    uncertainty: u,
                    rmse: u / 2.0,
                    wrmse: u / 2.0,
                    mll: None,
                    wmll: None,
                    delta_sigma2: None,
                    trial: trial as u64,
                    planner: "x".into(),
                })
                .collect::<Vec<_>>()
        };
        let mut per_trial = BTreeMap::new();
        per_trial.insert(("x".to_string(), 0), mk(0, &[(0.0, 10.0), (5.0, 6.0)]));
        per_trial.insert(("x".to_string(), 1), mk(1, &[(0.0, 8.0), (4.0, 2.0)]));
        let rows = aggregate(&per_trial, 6.0, 1.0);
        // bin t=0: both trials at their first record
        let r0 = rows.iter().find(|r| r.t == 0.0).unwrap();
        assert_eq!(r0.mean_uncertainty, 9.0);
        assert_eq!(r0.trials, 2);
        // bin t=4: trial 0 still at 10, trial 1 advanced to 2
        let r4 = rows.iter().find(|r| r.t == 4.0).unwrap();
        assert_eq!(r4.mean_uncertainty, 6.0);
        // bin t=5: forward fill complete: (6 + 2) / 2
        let r5 = rows.iter().find(|r| r.t == 5.0).unwrap();
        assert_eq!(r5.mean_uncertainty, 4.0);
    }

    #[test]
    fn discrete_experiment_runs() {
        let dir = tempfile::tempdir().unwrap();
        let config = r#"name = "discrete"
trials = 1
seed = 3
planners = ["lattice"]

[map]
kind = "discrete"
extent = [10.0, 10.0]
resolution = 1.0

[field]
kind = "binary"
occupancy_fraction = 0.3

[mission]
budget = 30.0
start = [5.0, 5.0, 8.0]

[planner]
lattice_preset = "fourteen"
cma_iterations = 0
"#;
        let out = run_experiment(config, dir.path()).unwrap();
        let records = &out[&("lattice".to_string(), 0)];
        assert!(!records.is_empty());
        // fresh 100-cell map starts at 100 bits and entropy must fall
        assert!(records.last().unwrap().uncertainty < 100.0);
        assert!(records.iter().all(|r| r.mll.is_none()));
    }
}

//! Multi-layer occupancy grid with additive log-odds updates and
//! Shannon-entropy queries. Entropy is reported in bits.

use crate::error::{IppError, Result};
use crate::grid::GridGeometry;
use crate::sensor::{BinaryClassifierModel, CameraConfig, DiscretePatch};

/// Per-cell log-odds occupancy layers over a shared grid.
#[derive(Debug, Clone)]
pub struct OccupancyMap {
    pub geometry: GridGeometry,
    layers: Vec<(String, Vec<f64>)>,
    pub prior_log_odds: f64,
    /// Optional symmetric clamp on |log-odds|; off by default.
    pub clamp: Option<f64>,
}

impl OccupancyMap {
    /// Fresh map with every cell at the prior. A prior probability of 0.5
    /// corresponds to log-odds 0.
    pub fn new(geometry: GridGeometry, layer_names: &[&str], prior_log_odds: f64) -> Self {
        let layers = layer_names
            .iter()
            .map(|&n| (n.to_string(), vec![prior_log_odds; geometry.cell_count()]))
            .collect();
        Self {
            geometry,
            layers,
            prior_log_odds,
            clamp: None,
        }
    }

    pub fn single_layer(geometry: GridGeometry) -> Self {
        Self::new(geometry, &["target"], 0.0)
    }

    pub fn layer_names(&self) -> Vec<&str> {
        self.layers.iter().map(|(n, _)| n.as_str()).collect()
    }

    fn layer_index(&self, layer: &str) -> Result<usize> {
        self.layers
            .iter()
            .position(|(n, _)| n == layer)
            .ok_or_else(|| IppError::InvalidArgument(format!("unknown layer {layer:?}")))
    }

    pub fn log_odds(&self, layer: &str) -> Result<&[f64]> {
        Ok(&self.layers[self.layer_index(layer)?].1)
    }

    /// Occupancy probability of one cell: 1 / (1 + e^(-L)).
    pub fn probability(&self, layer: &str, cell: usize) -> Result<f64> {
        let l = self.layers[self.layer_index(layer)?].1[cell];
        Ok(prob_from_log_odds(l))
    }

    pub fn probabilities(&self, layer: &str) -> Result<Vec<f64>> {
        Ok(self.log_odds(layer)?.iter().map(|&l| prob_from_log_odds(l)).collect())
    }

    /// One CSV row of probabilities per grid row.
    pub fn to_csv<W: std::io::Write>(&self, layer: &str, mut w: W) -> Result<()> {
        let p = self.probabilities(layer)?;
        for row in 0..self.geometry.rows {
            let line: Vec<String> = (0..self.geometry.cols)
                .map(|col| format!("{}", p[self.geometry.index(row, col)]))
                .collect();
            writeln!(w, "{}", line.join(","))?;
        }
        Ok(())
    }
}

pub fn prob_from_log_odds(l: f64) -> f64 {
    1.0 / (1.0 + (-l).exp())
}

/// Add the inverse-sensor log-likelihood ratio to every observed cell.
pub fn update_discrete(
    map: &mut OccupancyMap,
    layer: &str,
    patch: &DiscretePatch,
    model: &BinaryClassifierModel,
) -> Result<()> {
    let h = patch.altitude;
    let (tp, fp) = (model.tp(h)?, model.fp(h)?);
    let idx = map.layer_index(layer)?;
    let clamp = map.clamp;
    let cell_count = map.geometry.cell_count();
    let values = &mut map.layers[idx].1;
    for &(cell, z) in &patch.labels {
        if cell >= cell_count {
            return Err(IppError::InvalidArgument(format!(
                "cell {cell} outside geometry"
            )));
        }
        // L += ln P(z | c=1, h) / P(z | c=0, h)
        let ratio = match z {
            1 => (tp / fp).ln(),
            0 => ((1.0 - tp) / (1.0 - fp)).ln(),
            _ => {
                return Err(IppError::InvalidArgument(format!(
                    "observed label must be 0 or 1, got {z}"
                )))
            }
        };
        values[cell] += ratio;
        if let Some(c) = clamp {
            values[cell] = values[cell].clamp(-c, c);
        }
    }
    Ok(())
}

fn binary_entropy_bits(p: f64) -> f64 {
    if p <= 0.0 || p >= 1.0 {
        return 0.0;
    }
    -(p * p.log2() + (1.0 - p) * (1.0 - p).log2())
}

/// Shannon entropy in bits summed over a cell subset (None = all cells).
pub fn entropy(map: &OccupancyMap, layer: &str, subset: Option<&[usize]>) -> Result<f64> {
    let lo = map.log_odds(layer)?;
    let sum = match subset {
        Some(cells) => cells
            .iter()
            .map(|&i| binary_entropy_bits(prob_from_log_odds(lo[i])))
            .sum(),
        None => lo
            .iter()
            .map(|&l| binary_entropy_bits(prob_from_log_odds(l)))
            .sum(),
    };
    Ok(sum)
}

/// Cells with occupancy probability strictly above p_th.
pub fn interesting_cells_discrete(
    map: &OccupancyMap,
    layer: &str,
    p_th: f64,
) -> Result<Vec<usize>> {
    if !(0.0..=1.0).contains(&p_th) {
        return Err(IppError::InvalidArgument(format!(
            "p_th must lie in [0, 1], got {p_th}"
        )));
    }
    Ok(map
        .log_odds(layer)?
        .iter()
        .enumerate()
        .filter(|&(_, &l)| prob_from_log_odds(l) > p_th)
        .map(|(i, _)| i)
        .collect())
}

/// Deterministic update assuming each footprint cell re-observes its most
/// likely state (occupied iff p >= 0.5).
pub fn predict_discrete_update(
    map: &OccupancyMap,
    layer: &str,
    pose: [f64; 3],
    camera: &CameraConfig,
    model: &BinaryClassifierModel,
) -> Result<OccupancyMap> {
    let cells = crate::sensor::footprint(pose, camera, &map.geometry)?;
    let lo = map.log_odds(layer)?;
    let labels = cells
        .into_iter()
        .map(|i| (i, u8::from(prob_from_log_odds(lo[i]) >= 0.5)))
        .collect();
    let patch = DiscretePatch {
        labels,
        altitude: pose[2],
    };
    let mut out = map.clone();
    update_discrete(&mut out, layer, &patch, model)?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn geom() -> GridGeometry {
        GridGeometry::new([0.0, 0.0], [30.0, 30.0], 0.75).unwrap()
    }

    fn model_at(tp: f64, fp: f64) -> BinaryClassifierModel {
        BinaryClassifierModel::new(vec![(1.0, tp), (26.0, tp)], vec![(1.0, fp), (26.0, fp)])
            .unwrap()
    }

    fn patch(cells: &[(usize, u8)], h: f64) -> DiscretePatch {
        DiscretePatch {
            labels: cells.to_vec(),
            altitude: h,
        }
    }

    #[test]
    fn positive_update_from_uniform_prior() {
        let mut map = OccupancyMap::single_layer(geom());
        let m = model_at(0.8, 0.2);
        update_discrete(&mut map, "target", &patch(&[(0, 1)], 5.0), &m).unwrap();
        assert_relative_eq!(map.log_odds("target").unwrap()[0], 4.0f64.ln(), epsilon = 1e-12);
        assert_relative_eq!(map.probability("target", 0).unwrap(), 0.8, epsilon = 1e-12);
    }

    #[test]
    fn symmetric_observations_cancel() {
        let mut map = OccupancyMap::single_layer(geom());
        let m = model_at(0.8, 0.2);
        update_discrete(&mut map, "target", &patch(&[(7, 1)], 5.0), &m).unwrap();
        update_discrete(&mut map, "target", &patch(&[(7, 0)], 5.0), &m).unwrap();
        assert_relative_eq!(map.log_odds("target").unwrap()[7], 0.0, epsilon = 1e-12);
    }

    #[test]
    fn uninformative_observation_is_noop() {
        let mut map = OccupancyMap::single_layer(geom());
        let m = model_at(0.5, 0.5);
        update_discrete(&mut map, "target", &patch(&[(3, 1)], 5.0), &m).unwrap();
        assert_eq!(map.log_odds("target").unwrap()[3], 0.0);
    }

    #[test]
    fn unknown_layer_rejected() {
        let mut map = OccupancyMap::single_layer(geom());
        let m = model_at(0.8, 0.2);
        assert!(update_discrete(&mut map, "weeds", &patch(&[(0, 1)], 5.0), &m).is_err());
    }

    #[test]
    fn update_order_independent() {
        let m = model_at(0.7, 0.3);
        let a = patch(&[(0, 1), (1, 0)], 5.0);
        let b = patch(&[(0, 0), (2, 1)], 10.0);
        let mut ab = OccupancyMap::single_layer(geom());
        update_discrete(&mut ab, "target", &a, &m).unwrap();
        update_discrete(&mut ab, "target", &b, &m).unwrap();
        let mut ba = OccupancyMap::single_layer(geom());
        update_discrete(&mut ba, "target", &b, &m).unwrap();
        update_discrete(&mut ba, "target", &a, &m).unwrap();
        for (x, y) in ab
            .log_odds("target")
            .unwrap()
            .iter()
            .zip(ba.log_odds("target").unwrap())
        {
            assert_relative_eq!(x, y, epsilon = 1e-12);
        }
    }

    #[test]
    fn fresh_map_entropy_is_cell_count_bits() {
        let map = OccupancyMap::single_layer(geom());
        assert_relative_eq!(entropy(&map, "target", None).unwrap(), 1600.0, epsilon = 1e-9);
    }

    #[test]
    fn single_cell_entropy_values() {
        let mut map = OccupancyMap::single_layer(geom());
        // p = 0.25  =>  L = ln(1/3)
        let l = (0.25f64 / 0.75).ln();
        let m = model_at(0.25, 0.75);
        update_discrete(&mut map, "target", &patch(&[(0, 1)], 5.0), &m).unwrap();
        assert_relative_eq!(map.log_odds("target").unwrap()[0], l, epsilon = 1e-12);
        assert_relative_eq!(
            entropy(&map, "target", Some(&[0])).unwrap(),
            0.8112781244591328,
            epsilon = 1e-9
        );
        // near-certain cell has entropy near 0
        let mut sure = OccupancyMap::single_layer(geom());
        let strong = model_at(1.0 - 1e-12, 1e-12);
        update_discrete(&mut sure, "target", &patch(&[(0, 1)], 5.0), &strong).unwrap();
        assert!(entropy(&sure, "target", Some(&[0])).unwrap() < 1e-6);
    }

    #[test]
    fn interesting_cells_thresholds() {
        let map = OccupancyMap::single_layer(geom());
        // fresh map: p = 0.5 > 0.4 everywhere
        assert_eq!(
            interesting_cells_discrete(&map, "target", 0.4).unwrap().len(),
            1600
        );
        assert!(interesting_cells_discrete(&map, "target", 1.0)
            .unwrap()
            .is_empty());
        // strong negative evidence excludes a cell
        let mut map = map;
        let m = model_at(0.9, 0.1);
        for _ in 0..3 {
            update_discrete(&mut map, "target", &patch(&[(5, 0)], 5.0), &m).unwrap();
        }
        let cells = interesting_cells_discrete(&map, "target", 0.4).unwrap();
        assert!(!cells.contains(&5));
        assert_eq!(cells.len(), 1599);
    }

    #[test]
    fn predicted_update_reinforces_likely_state() {
        let g = geom();
        let cam = CameraConfig::survey_default();
        let m = BinaryClassifierModel::default_curves(1.0, 26.0);
        let map = OccupancyMap::single_layer(g);
        // fresh map: p = 0.5 counts as occupied, z = 1 everywhere in footprint
        let pred = predict_discrete_update(&map, "target", [15.0, 15.0, 5.0], &cam, &m).unwrap();
        let cells = crate::sensor::footprint([15.0, 15.0, 5.0], &cam, &g).unwrap();
        let tp = m.tp(5.0).unwrap();
        let fp = m.fp(5.0).unwrap();
        for &c in &cells {
            assert_relative_eq!(
                pred.log_odds("target").unwrap()[c],
                (tp / fp).ln(),
                epsilon = 1e-12
            );
        }
        // prediction twice in a row gives the same result (deterministic)
        let pred2 = predict_discrete_update(&map, "target", [15.0, 15.0, 5.0], &cam, &m).unwrap();
        assert_eq!(
            pred.log_odds("target").unwrap(),
            pred2.log_odds("target").unwrap()
        );
        // footprint outside the map leaves it unchanged
        let out = predict_discrete_update(&map, "target", [500.0, 500.0, 5.0], &cam, &m).unwrap();
        assert_eq!(out.log_odds("target").unwrap(), map.log_odds("target").unwrap());
    }

    #[test]
    fn high_probability_cell_pushed_higher_at_low_altitude() {
        let g = geom();
        let cam = CameraConfig::survey_default();
        let m = BinaryClassifierModel::default_curves(1.0, 26.0);
        let mut map = OccupancyMap::single_layer(g);
        let strong = model_at(0.9, 0.1);
        update_discrete(&mut map, "target", &patch(&[(g.index(20, 20), 1)], 5.0), &strong)
            .unwrap();
        let before = map.probability("target", g.index(20, 20)).unwrap();
        assert!(before > 0.8);
        let [x, y] = g.cell_center(20, 20);
        let pred = predict_discrete_update(&map, "target", [x, y, 2.0], &cam, &m).unwrap();
        assert!(pred.probability("target", g.index(20, 20)).unwrap() > before);
    }
}

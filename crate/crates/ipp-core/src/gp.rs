//! Gaussian-process prior construction over the grid and sequential
//! Kalman-filter fusion of multiresolution Gaussian measurement patches.
//!
//! The covariance is stored densely; target grids are ~1600 cells, so P is
//! at most ~20 MB. Measurement models H are kept sparse (each block row has
//! (1/s_f)^2 equal entries summing to 1) and all heavy operations are
//! arranged as matrix products.

use nalgebra::{Cholesky, DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{IppError, Result};
use crate::grid::GridGeometry;
use crate::sensor::{
    footprint_blocks, noise_variance, CameraConfig, ContinuousSensorModel, MeasurementPatch,
};

/// Isotropic Matern 3/2 kernel hyperparameters.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct MaternKernel {
    /// Signal variance.
    pub sigma_f2: f64,
    /// Length scale (m).
    pub length_scale: f64,
    /// Noise variance hyperparameter.
    pub sigma_n2: f64,
}

impl MaternKernel {
    pub fn new(sigma_f2: f64, length_scale: f64, sigma_n2: f64) -> Result<Self> {
        if sigma_f2 <= 0.0 || length_scale <= 0.0 || sigma_n2 <= 0.0 {
            return Err(IppError::InvalidArgument(format!(
                "kernel hyperparameters must be positive, got ({sigma_f2}, {length_scale}, {sigma_n2})"
            )));
        }
        Ok(Self {
            sigma_f2,
            length_scale,
            sigma_n2,
        })
    }

    /// Trained values {sigma_n2, sigma_f2, l} = {1.42, 1.82, 3.67}.
    pub fn survey_default() -> Self {
        Self {
            sigma_f2: 1.82,
            length_scale: 3.67,
            sigma_n2: 1.42,
        }
    }
}

/// Matern 3/2 covariance at distance d.
pub fn matern32(d: f64, kernel: &MaternKernel) -> Result<f64> {
    if d < 0.0 {
        return Err(IppError::InvalidArgument(format!(
            "distance must be non-negative, got {d}"
        )));
    }
    let s = 3f64.sqrt() * d / kernel.length_scale;
    Ok(kernel.sigma_f2 * (1.0 + s) * (-s).exp())
}

/// GP field map: mean vector and full covariance over the grid cells.
#[derive(Debug, Clone)]
pub struct GpFieldMap {
    pub geometry: GridGeometry,
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
}

fn kernel_matrix(geometry: &GridGeometry, kernel: &MaternKernel) -> DMatrix<f64> {
    let n = geometry.cell_count();
    let centers: Vec<[f64; 2]> = (0..n)
        .map(|i| {
            let (r, c) = geometry.row_col(i);
            geometry.cell_center(r, c)
        })
        .collect();
    DMatrix::from_fn(n, n, |i, j| {
        let d = ((centers[i][0] - centers[j][0]).powi(2)
            + (centers[i][1] - centers[j][1]).powi(2))
        .sqrt();
        matern32(d, kernel).unwrap()
    })
}

fn cholesky_with_jitter(mut m: DMatrix<f64>) -> Result<Cholesky<f64, nalgebra::Dyn>> {
    let scale = m.diagonal().mean().abs().max(1.0);
    let mut jitter = 0.0;
    loop {
        match Cholesky::new(m.clone()) {
            Some(c) => return Ok(c),
            None => {
                jitter = if jitter == 0.0 { 1e-10 } else { jitter * 100.0 };
                if jitter > 1e-6 {
                    return Err(IppError::Numerical(
                        "Cholesky failed even with jitter 1e-6".into(),
                    ));
                }
                for i in 0..m.nrows() {
                    m[(i, i)] += jitter * scale;
                }
            }
        }
    }
}

fn symmetrize(p: &mut DMatrix<f64>) {
    let n = p.nrows();
    for i in 0..n {
        for j in 0..i {
            let v = 0.5 * (p[(i, j)] + p[(j, i)]);
            p[(i, j)] = v;
            p[(j, i)] = v;
        }
    }
}

/// Build the prior map: uniform mean and the self-prediction posterior
/// covariance P = K - K (K + sigma_n^2 I)^-1 K = sigma_n^2 (K + sigma_n^2 I)^-1 K.
pub fn build_prior(
    geometry: GridGeometry,
    kernel: &MaternKernel,
    prior_mean: f64,
) -> Result<GpFieldMap> {
    let n = geometry.cell_count();
    let k = kernel_matrix(&geometry, kernel);
    let mut reg = k.clone();
    for i in 0..n {
        reg[(i, i)] += kernel.sigma_n2;
    }
    let chol = cholesky_with_jitter(reg).map_err(|_| {
        IppError::Numerical(format!(
            "prior solve failed for kernel {kernel:?} on {n} cells"
        ))
    })?;
    let mut p = chol.solve(&k);
    p *= kernel.sigma_n2;
    symmetrize(&mut p);
    Ok(GpFieldMap {
        geometry,
        mean: DVector::from_element(n, prior_mean),
        cov: p,
    })
}

/// Sparse measurement-model rows: per block, its member cells, the shared
/// weight (rows sum to 1), the measured value and its noise variance.
#[derive(Debug, Clone)]
pub struct BlockRows {
    pub cells: Vec<Vec<usize>>,
    pub values: Vec<f64>,
    pub variances: Vec<f64>,
}

impl BlockRows {
    pub fn from_patch(patch: &MeasurementPatch) -> Self {
        Self {
            cells: patch.blocks.iter().map(|b| b.cells.clone()).collect(),
            values: patch.blocks.iter().map(|b| b.value).collect(),
            variances: patch.blocks.iter().map(|b| b.variance).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    fn weight(&self, row: usize) -> f64 {
        1.0 / self.cells[row].len() as f64
    }

    /// A = M H^T for a dense symmetric M (columns of M accumulated per row).
    fn right_apply(&self, m: &DMatrix<f64>) -> DMatrix<f64> {
        let n = m.nrows();
        let mut a = DMatrix::zeros(n, self.len());
        for (i, cells) in self.cells.iter().enumerate() {
            let w = self.weight(i);
            let mut col = a.column_mut(i);
            for &j in cells {
                col.axpy(w, &m.column(j), 1.0);
            }
        }
        a
    }

    /// H x for a dense vector.
    fn apply_vec(&self, x: &DVector<f64>) -> DVector<f64> {
        DVector::from_fn(self.len(), |i, _| {
            self.weight(i) * self.cells[i].iter().map(|&j| x[j]).sum::<f64>()
        })
    }

    /// S = H A + R where A = P H^T.
    fn innovation_cov(&self, a: &DMatrix<f64>) -> DMatrix<f64> {
        let m = self.len();
        let mut s = DMatrix::zeros(m, m);
        for (i, cells) in self.cells.iter().enumerate() {
            let w = self.weight(i);
            for k in 0..m {
                s[(i, k)] = w * cells.iter().map(|&j| a[(j, k)]).sum::<f64>();
            }
        }
        for i in 0..m {
            s[(i, i)] += self.variances[i];
        }
        s
    }

    fn check_bounds(&self, n: usize) -> Result<()> {
        for cells in &self.cells {
            if cells.is_empty() {
                return Err(IppError::InvalidArgument("empty measurement block".into()));
            }
            if cells.iter().any(|&c| c >= n) {
                return Err(IppError::InvalidArgument(
                    "measurement block cell outside geometry".into(),
                ));
            }
        }
        if self.variances.iter().any(|&v| v <= 0.0) {
            return Err(IppError::InvalidArgument(
                "measurement variances must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Invert a lower-triangular matrix by forward substitution.
fn invert_lower_triangular(l: &DMatrix<f64>) -> DMatrix<f64> {
    let m = l.nrows();
    let mut inv = DMatrix::zeros(m, m);
    for j in 0..m {
        inv[(j, j)] = 1.0 / l[(j, j)];
        for i in j + 1..m {
            let mut s = 0.0;
            for k in j..i {
                s += l[(i, k)] * inv[(k, j)];
            }
            inv[(i, j)] = -s / l[(i, i)];
        }
    }
    inv
}

struct KalmanFactors {
    /// A = P H^T (n x m).
    a: DMatrix<f64>,
    /// Inverse of the lower Cholesky factor of S (m x m).
    l_inv: DMatrix<f64>,
}

fn kalman_factors(p: &DMatrix<f64>, rows: &BlockRows) -> Result<KalmanFactors> {
    let a = rows.right_apply(p);
    let s = rows.innovation_cov(&a);
    let chol = Cholesky::new(s).ok_or_else(|| {
        IppError::Numerical("innovation covariance not positive definite".into())
    })?;
    Ok(KalmanFactors {
        a,
        l_inv: invert_lower_triangular(chol.l_dirty()),
    })
}

/// Fuse a measurement patch into the map (Kalman update, full rank-m
/// covariance downdate, posterior re-symmetrized).
pub fn fuse(map: &mut GpFieldMap, patch: &MeasurementPatch) -> Result<()> {
    fuse_rows(map, &BlockRows::from_patch(patch))
}

pub fn fuse_rows(map: &mut GpFieldMap, rows: &BlockRows) -> Result<()> {
    if rows.is_empty() {
        return Ok(());
    }
    rows.check_bounds(map.geometry.cell_count())?;
    let f = kalman_factors(&map.cov, rows)?;
    // W = A L^-T so that K S^-1-weighted updates become products with W
    let w = &f.a * f.l_inv.transpose();
    let z = DVector::from_vec(rows.values.clone());
    let innovation = z - rows.apply_vec(&map.mean);
    // mu += W (L^-1 v)
    let whitened = &f.l_inv * innovation;
    map.mean.gemv(1.0, &w, &whitened, 1.0);
    // P -= W W^T
    let wt = w.transpose();
    map.cov.gemm(-1.0, &w, &wt, 1.0);
    symmetrize(&mut map.cov);
    Ok(())
}

/// Covariance-only update for a hypothetical measurement at this pose: the
/// innovation is assumed zero, so the mean is unchanged and P shrinks.
pub fn predict_continuous_update(
    map: &GpFieldMap,
    pose: [f64; 3],
    camera: &CameraConfig,
    model: &ContinuousSensorModel,
) -> Result<GpFieldMap> {
    let rows = predicted_rows(map, pose, camera, model)?;
    let mut out = map.clone();
    apply_covariance_update(&mut out, &rows)?;
    Ok(out)
}

/// Measurement-model rows a sensor at `pose` would produce, with predicted
/// values z = H mu (zero innovation).
pub fn predicted_rows(
    map: &GpFieldMap,
    pose: [f64; 3],
    camera: &CameraConfig,
    model: &ContinuousSensorModel,
) -> Result<BlockRows> {
    let (blocks, _) = footprint_blocks(pose, camera, model, &map.geometry)?;
    let variance = noise_variance(pose[2], model)?.max(1e-12);
    let values = blocks
        .iter()
        .map(|cells| cells.iter().map(|&j| map.mean[j]).sum::<f64>() / cells.len() as f64)
        .collect();
    let m = blocks.len();
    Ok(BlockRows {
        cells: blocks,
        values,
        variances: vec![variance; m],
    })
}

/// Apply only the covariance half of the Kalman update.
pub fn apply_covariance_update(map: &mut GpFieldMap, rows: &BlockRows) -> Result<()> {
    if rows.is_empty() {
        return Ok(());
    }
    rows.check_bounds(map.geometry.cell_count())?;
    let f = kalman_factors(&map.cov, rows)?;
    let w = &f.a * f.l_inv.transpose();
    let wt = w.transpose();
    map.cov.gemm(-1.0, &w, &wt, 1.0);
    symmetrize(&mut map.cov);
    Ok(())
}

/// Sum of covariance diagonal entries over a cell subset (None = all).
pub fn trace_uncertainty(map: &GpFieldMap, subset: Option<&[usize]>) -> f64 {
    match subset {
        Some(cells) => cells.iter().map(|&i| map.cov[(i, i)]).sum(),
        None => map.cov.diagonal().sum(),
    }
}

/// Cells satisfying mu_i + beta * sigma_i >= mu_th.
pub fn interesting_cells_continuous(
    map: &GpFieldMap,
    mu_th: f64,
    beta: f64,
) -> Result<Vec<usize>> {
    if beta < 0.0 {
        return Err(IppError::InvalidArgument(format!(
            "beta must be non-negative, got {beta}"
        )));
    }
    Ok((0..map.geometry.cell_count())
        .filter(|&i| map.mean[i] + beta * map.cov[(i, i)].max(0.0).sqrt() >= mu_th)
        .collect())
}

/// Incremental evaluator for the covariance-trace reduction of a sequence
/// of hypothetical measurement poses, without materializing the updated
/// covariance. Equivalent to applying `apply_covariance_update` per pose
/// and differencing traces, but tracks the posterior as a low-rank
/// downdate P_t = P - U U^T.
pub struct SequentialGainEvaluator<'a> {
    p: &'a DMatrix<f64>,
    /// Accumulated downdate factors, n x r.
    u: DMatrix<f64>,
    /// Optional subset restriction for the reported gains.
    subset: Option<&'a [usize]>,
}

impl<'a> SequentialGainEvaluator<'a> {
    pub fn new(map: &'a GpFieldMap, subset: Option<&'a [usize]>) -> Self {
        Self {
            p: &map.cov,
            u: DMatrix::zeros(map.cov.nrows(), 0),
            subset,
        }
    }

    fn factor(&self, rows: &BlockRows) -> Result<(DMatrix<f64>, f64)> {
        rows.check_bounds(self.p.nrows())?;
        let m = rows.len();
        let r = self.u.ncols();
        // A = P_t H^T = P H^T - U (H U)^T
        let mut a = rows.right_apply(self.p);
        if r > 0 {
            let hu = DMatrix::from_fn(m, r, |i, k| {
                rows.weight(i) * rows.cells[i].iter().map(|&j| self.u[(j, k)]).sum::<f64>()
            });
            let hut = hu.transpose();
            a.gemm(-1.0, &self.u, &hut, 1.0);
        }
        // S = H A + R; note H here acts on the already-downdated A
        let s = rows.innovation_cov(&a);
        let chol = Cholesky::new(s).ok_or_else(|| {
            IppError::Numerical("innovation covariance not positive definite".into())
        })?;
        let l_inv = invert_lower_triangular(chol.l_dirty());
        let w = &a * l_inv.transpose();
        let gain = match self.subset {
            Some(cells) => cells.iter().map(|&i| w.row(i).norm_squared()).sum(),
            None => w.norm_squared(),
        };
        Ok((w, gain))
    }

    /// Trace reduction this pose would add, without committing it.
    pub fn peek_rows(&self, rows: &BlockRows) -> Result<f64> {
        if rows.is_empty() {
            return Ok(0.0);
        }
        Ok(self.factor(rows)?.1)
    }

    /// Add one pose's measurement rows; returns the trace reduction over
    /// the tracked subset caused by this pose given all previous ones.
    pub fn add_rows(&mut self, rows: &BlockRows) -> Result<f64> {
        if rows.is_empty() {
            return Ok(0.0);
        }
        let (w, gain) = self.factor(rows)?;
        // grow U by the new factor block
        let r = self.u.ncols();
        let m = rows.len();
        let mut grown = DMatrix::zeros(self.u.nrows(), r + m);
        grown.columns_mut(0, r).copy_from(&self.u);
        grown.columns_mut(r, m).copy_from(&w);
        self.u = grown;
        Ok(gain)
    }
}

/// Export the mean and covariance diagonal, one CSV row per grid row.
pub fn map_to_csv<W: std::io::Write>(map: &GpFieldMap, mut w: W) -> Result<()> {
    for row in 0..map.geometry.rows {
        let line: Vec<String> = (0..map.geometry.cols)
            .map(|col| {
                let i = map.geometry.index(row, col);
                format!("{};{}", map.mean[i], map.cov[(i, i)])
            })
            .collect();
        writeln!(w, "{}", line.join(","))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn small_geom(cells: usize) -> GridGeometry {
        let side = (cells as f64).sqrt() as usize;
        GridGeometry::new([0.0, 0.0], [side as f64, side as f64], 1.0).unwrap()
    }

    fn kernel() -> MaternKernel {
        MaternKernel::survey_default()
    }

    /// Dense-matrix oracle for the posterior covariance of Eq-3-style
    /// self-prediction, computed with explicit inversion.
    fn prior_oracle(geometry: &GridGeometry, k: &MaternKernel) -> DMatrix<f64> {
        let km = kernel_matrix(geometry, k);
        let n = km.nrows();
        let reg = &km + DMatrix::identity(n, n) * k.sigma_n2;
        let inv = reg.try_inverse().unwrap();
        &km - &km * inv * km.transpose()
    }

    #[test]
    fn matern_closed_form_values() {
        let k = kernel();
        assert_relative_eq!(matern32(0.0, &k).unwrap(), 1.82, epsilon = 1e-12);
        let unit = MaternKernel::new(1.0, 2.0, 1.0).unwrap();
        // d = l: (1 + sqrt(3)) e^(-sqrt(3))
        let expected = (1.0 + 3f64.sqrt()) * (-3f64.sqrt()).exp();
        assert_relative_eq!(matern32(2.0, &unit).unwrap(), expected, epsilon = 1e-12);
        assert!(matern32(1e6, &k).unwrap() < 1e-10);
        assert!(matern32(-0.1, &k).is_err());
    }

    #[test]
    fn matern_monotone_decreasing() {
        let k = kernel();
        let mut prev = f64::INFINITY;
        for i in 0..50 {
            let v = matern32(i as f64 * 0.3, &k).unwrap();
            assert!(v < prev);
            prev = v;
        }
    }

    #[test]
    fn prior_matches_dense_oracle_on_2x2() {
        let g = small_geom(4);
        let k = kernel();
        let map = build_prior(g, &k, 50.0).unwrap();
        let oracle = prior_oracle(&g, &k);
        for i in 0..4 {
            assert_relative_eq!(map.mean[i], 50.0);
            for j in 0..4 {
                assert_relative_eq!(map.cov[(i, j)], oracle[(i, j)], epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn prior_corner_symmetry() {
        let g = small_geom(16);
        let map = build_prior(g, &kernel(), 50.0).unwrap();
        let n = g.cell_count();
        assert_relative_eq!(map.cov[(0, 0)], map.cov[(n - 1, n - 1)], epsilon = 1e-9);
    }

    #[test]
    fn prior_approaches_kernel_for_large_noise() {
        let g = small_geom(4);
        let k = MaternKernel::new(1.82, 3.67, 1e9).unwrap();
        let map = build_prior(g, &k, 0.0).unwrap();
        let km = kernel_matrix(&g, &k);
        for i in 0..4 {
            for j in 0..4 {
                assert_relative_eq!(map.cov[(i, j)], km[(i, j)], epsilon = 1e-6);
            }
        }
    }

    fn single_cell_rows(cell: usize, value: f64, variance: f64) -> BlockRows {
        BlockRows {
            cells: vec![vec![cell]],
            values: vec![value],
            variances: vec![variance],
        }
    }

    #[test]
    fn uninformative_measurement_leaves_map_unchanged() {
        let g = small_geom(9);
        let mut map = build_prior(g, &kernel(), 50.0).unwrap();
        let before = map.clone();
        fuse_rows(&mut map, &single_cell_rows(4, 80.0, 1e12)).unwrap();
        for i in 0..9 {
            assert_relative_eq!(map.mean[i], before.mean[i], epsilon = 1e-6);
            assert_relative_eq!(
                map.cov[(i, i)],
                before.cov[(i, i)],
                max_relative = 1e-6
            );
        }
    }

    #[test]
    fn scalar_kalman_algebra() {
        // isolated scalar prior p = 1, noise r = 1 -> posterior variance 0.5
        let g = GridGeometry::new([0.0, 0.0], [1.0, 1.0], 1.0).unwrap();
        let mut map = GpFieldMap {
            geometry: g,
            mean: DVector::from_element(1, 0.0),
            cov: DMatrix::from_element(1, 1, 1.0),
        };
        fuse_rows(&mut map, &single_cell_rows(0, 2.0, 1.0)).unwrap();
        assert_relative_eq!(map.cov[(0, 0)], 0.5, epsilon = 1e-12);
        assert_relative_eq!(map.mean[0], 1.0, epsilon = 1e-12); // halfway to z
    }

    /// Batch joint-Gaussian conditioning oracle with explicit inversion.
    fn batch_oracle(map: &GpFieldMap, rows: &BlockRows) -> (DVector<f64>, DMatrix<f64>) {
        let n = map.cov.nrows();
        let m = rows.len();
        let mut h = DMatrix::zeros(m, n);
        for (i, cells) in rows.cells.iter().enumerate() {
            for &j in cells {
                h[(i, j)] = 1.0 / cells.len() as f64;
            }
        }
        let r = DMatrix::from_diagonal(&DVector::from_vec(rows.variances.clone()));
        let s = &h * &map.cov * h.transpose() + r;
        let k = &map.cov * h.transpose() * s.try_inverse().unwrap();
        let z = DVector::from_vec(rows.values.clone());
        let mu = &map.mean + &k * (z - &h * &map.mean);
        let p = &map.cov - &k * &h * &map.cov;
        (mu, p)
    }

    #[test]
    fn sequential_fuse_equals_batch_conditioning() {
        let g = small_geom(16);
        let mut map = build_prior(g, &kernel(), 50.0).unwrap();
        let prior = map.clone();
        // two mixed-resolution patches
        let rows1 = BlockRows {
            cells: vec![vec![0], vec![5]],
            values: vec![60.0, 40.0],
            variances: vec![0.1, 0.2],
        };
        let rows2 = BlockRows {
            cells: vec![vec![0, 1, 4, 5], vec![10, 11, 14, 15]],
            values: vec![55.0, 45.0],
            variances: vec![0.3, 0.3],
        };
        fuse_rows(&mut map, &rows1).unwrap();
        fuse_rows(&mut map, &rows2).unwrap();

        // batch: both stacked at once against the prior
        let stacked = BlockRows {
            cells: [rows1.cells.clone(), rows2.cells.clone()].concat(),
            values: [rows1.values.clone(), rows2.values.clone()].concat(),
            variances: [rows1.variances.clone(), rows2.variances.clone()].concat(),
        };
        let (mu, p) = batch_oracle(&prior, &stacked);
        for i in 0..16 {
            assert_relative_eq!(map.mean[i], mu[i], max_relative = 1e-6);
            for j in 0..16 {
                assert_relative_eq!(map.cov[(i, j)], p[(i, j)], epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn trace_monotone_and_additive() {
        let g = small_geom(16);
        let mut map = build_prior(g, &kernel(), 50.0).unwrap();
        let t0 = trace_uncertainty(&map, None);
        let sub_a: Vec<usize> = (0..8).collect();
        let sub_b: Vec<usize> = (8..16).collect();
        assert_relative_eq!(
            trace_uncertainty(&map, Some(&sub_a)) + trace_uncertainty(&map, Some(&sub_b)),
            t0,
            epsilon = 1e-12
        );
        fuse_rows(&mut map, &single_cell_rows(3, 70.0, 0.5)).unwrap();
        assert!(trace_uncertainty(&map, None) < t0);
    }

    #[test]
    fn interesting_cells_rules() {
        let g = small_geom(9);
        let map = build_prior(g, &kernel(), 50.0).unwrap();
        // fresh map mu = 50 >= 40 with beta = 0
        assert_eq!(
            interesting_cells_continuous(&map, 40.0, 0.0).unwrap().len(),
            9
        );
        // mu_th above anything attainable
        assert!(interesting_cells_continuous(&map, 1e6, 3.0)
            .unwrap()
            .is_empty());
        // mu = 30, sigma = 4, beta = 3: 30 + 12 >= 40
        let mut low = map.clone();
        low.mean.fill(30.0);
        low.cov.fill(0.0);
        for i in 0..9 {
            low.cov[(i, i)] = 16.0;
        }
        assert_eq!(
            interesting_cells_continuous(&low, 40.0, 3.0).unwrap().len(),
            9
        );
        assert!(interesting_cells_continuous(&low, 40.0, -1.0).is_err());
    }

    #[test]
    fn prediction_consistent_with_zero_innovation_fuse() {
        let g = small_geom(16);
        let map = build_prior(g, &kernel(), 50.0).unwrap();
        let cam = CameraConfig::survey_default();
        let model = ContinuousSensorModel::survey_default();
        let pose = [2.0, 2.0, 6.0];
        let pred = predict_continuous_update(&map, pose, &cam, &model).unwrap();
        // mean unchanged, trace reduced
        assert_eq!(pred.mean, map.mean);
        assert!(trace_uncertainty(&pred, None) <= trace_uncertainty(&map, None));
        // real fuse with z = H mu gives the identical posterior
        let rows = predicted_rows(&map, pose, &cam, &model).unwrap();
        let mut fused = map.clone();
        fuse_rows(&mut fused, &rows).unwrap();
        for i in 0..16 {
            assert_relative_eq!(fused.mean[i], pred.mean[i], epsilon = 1e-9);
            for j in 0..16 {
                assert_relative_eq!(fused.cov[(i, j)], pred.cov[(i, j)], epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn sequential_evaluator_matches_explicit_updates() {
        let g = small_geom(16);
        let map = build_prior(g, &kernel(), 50.0).unwrap();
        let rows_list = vec![
            BlockRows {
                cells: vec![vec![0, 1, 4, 5], vec![2, 3, 6, 7]],
                values: vec![0.0, 0.0],
                variances: vec![0.2, 0.2],
            },
            single_cell_rows(5, 0.0, 0.1),
            BlockRows {
                cells: vec![vec![8], vec![9], vec![12]],
                values: vec![0.0; 3],
                variances: vec![0.15; 3],
            },
        ];
        let subset: Vec<usize> = (0..8).collect();
        for sub in [None, Some(subset.as_slice())] {
            let mut eval = SequentialGainEvaluator::new(&map, sub);
            let mut explicit = map.clone();
            for rows in &rows_list {
                let before = trace_uncertainty(&explicit, sub);
                let gain = eval.add_rows(rows).unwrap();
                apply_covariance_update(&mut explicit, rows).unwrap();
                let after = trace_uncertainty(&explicit, sub);
                assert_relative_eq!(gain, before - after, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn psd_preserved_over_many_fusions() {
        let g = small_geom(16);
        let mut map = build_prior(g, &kernel(), 50.0).unwrap();
        let mut rng_state = 12345u64;
        let mut next = || {
            rng_state = rng_state.wrapping_mul(6364136223846793005).wrapping_add(1);
            (rng_state >> 33) as usize
        };
        for _ in 0..100 {
            let cell = next() % 16;
            fuse_rows(
                &mut map,
                &single_cell_rows(cell, (next() % 100) as f64, 0.05 + (next() % 10) as f64 * 0.1),
            )
            .unwrap();
        }
        let eig = map.cov.clone().symmetric_eigenvalues();
        let max = eig.iter().cloned().fold(f64::MIN, f64::max);
        let min = eig.iter().cloned().fold(f64::MAX, f64::min);
        assert!(min >= -1e-8 * max.max(1.0), "min eigenvalue {min}");
    }
}

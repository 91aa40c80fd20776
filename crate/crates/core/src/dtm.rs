//! Empirical L^p distance-to-measure, pointwise and on regular grids.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{diameter, BoundingBox, KnnIndex, Neighbor, PointCloud};

/// Resolution `m` and exponent `p` of the empirical DTM.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DtmParams {
    m: f64,
    p: f64,
}

impl DtmParams {
    pub fn new(m: f64, p: f64) -> Result<Self> {
        if !(m > 0.0 && m < 1.0) {
            return Err(Error::param(format!("DTM resolution m = {m} must lie in (0, 1)")));
        }
        if !(p >= 1.0) || !p.is_finite() {
            return Err(Error::param(format!("DTM exponent p = {p} must be a finite real >= 1")));
        }
        Ok(Self { m, p })
    }

    pub fn m(&self) -> f64 {
        self.m
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    /// Neighbour count `k = ceil(m n)` for a cloud of `n` points.
    pub fn k(&self, n: usize) -> Result<usize> {
        if n == 0 {
            return Err(Error::NoPoints);
        }
        let k = ceil_product(self.m, n);
        if k == 0 || k > n {
            return Err(Error::param(format!("k = {k} must lie in 1..={n}")));
        }
        Ok(k)
    }
}

/// `ceil(m * n)`, snapping products that land within rounding error of an
/// integer (0.7 * 10 evaluates to 7.000000000000001 in binary).
pub fn ceil_product(m: f64, n: usize) -> usize {
    let x = m * n as f64;
    let r = x.round();
    if (x - r).abs() <= 1e-9 * x.abs().max(1.0) {
        r as usize
    } else {
        x.ceil() as usize
    }
}

/// DTM value from a sorted neighbour list.
fn dtm_from_neighbors(neighbors: &[Neighbor], p: f64) -> f64 {
    let k = neighbors.len() as f64;
    if p == 1.0 {
        neighbors.iter().map(|nb| nb.distance).sum::<f64>() / k
    } else if p == 2.0 {
        (neighbors.iter().map(|nb| nb.distance * nb.distance).sum::<f64>() / k).sqrt()
    } else {
        (neighbors.iter().map(|nb| nb.distance.powf(p)).sum::<f64>() / k).powf(1.0 / p)
    }
}

/// Empirical DTM of `cloud` evaluated at `x`.
pub fn empirical_dtm(cloud: &PointCloud, x: &[f64], params: &DtmParams) -> Result<f64> {
    let k = params.k(cloud.len())?;
    let nn = KnnIndex::new(cloud).query(x, k)?;
    Ok(dtm_from_neighbors(&nn, params.p()))
}

/// Regular lattice: `counts[a]` points along axis `a`, starting at
/// `lower[a]` with step `spacing[a]`. Axis 0 varies fastest in flat indices.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    lower: Vec<f64>,
    spacing: Vec<f64>,
    counts: Vec<usize>,
}

impl GridSpec {
    pub fn new(lower: Vec<f64>, spacing: Vec<f64>, counts: Vec<usize>) -> Result<Self> {
        let d = lower.len();
        if d == 0 || spacing.len() != d || counts.len() != d {
            return Err(Error::param(
                "grid lower/spacing/counts must share a positive dimension",
            ));
        }
        if counts.iter().any(|&g| g < 2) {
            return Err(Error::param("grid needs at least 2 points per axis"));
        }
        if spacing.iter().any(|&h| !(h > 0.0) || !h.is_finite()) {
            return Err(Error::param("grid spacing must be positive on every axis"));
        }
        if lower.iter().any(|l| !l.is_finite()) {
            return Err(Error::param("grid origin must be finite"));
        }
        Ok(Self { lower, spacing, counts })
    }

    /// `points_per_axis` lattice points spanning the padded box.
    pub fn from_box(bbox: &BoundingBox, points_per_axis: usize) -> Result<Self> {
        if points_per_axis < 2 {
            return Err(Error::param("grid needs at least 2 points per axis"));
        }
        let lower = bbox.lower();
        let upper = bbox.upper();
        let spacing = lower
            .iter()
            .zip(&upper)
            .map(|(l, u)| (u - l) / (points_per_axis - 1) as f64)
            .collect();
        Self::new(lower, spacing, vec![points_per_axis; bbox.dim()])
    }

    /// The default lattice for a cloud: its bounding box padded by a tenth of
    /// the diameter on each side, 64 points per axis in 2-D and 32 in 3-D.
    pub fn default_for(cloud: &PointCloud) -> Result<Self> {
        let g = default_resolution(cloud.dim());
        Self::padded_for(cloud, g)
    }

    pub fn padded_for(cloud: &PointCloud, points_per_axis: usize) -> Result<Self> {
        let diam = diameter(cloud)?;
        let pad = if diam > 0.0 { 0.1 * diam } else { 1.0 };
        Self::from_box(&cloud.bounding_box(pad)?, points_per_axis)
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn spacing(&self) -> &[f64] {
        &self.spacing
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> Vec<f64> {
        (0..self.dim())
            .map(|a| self.coordinate(a, self.counts[a] - 1))
            .collect()
    }

    pub fn len(&self) -> usize {
        self.counts.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn coordinate(&self, axis: usize, i: usize) -> f64 {
        self.lower[axis] + i as f64 * self.spacing[axis]
    }

    /// Multi-index of a flat lattice index.
    pub fn unflatten(&self, mut flat: usize) -> Vec<usize> {
        let mut idx = Vec::with_capacity(self.dim());
        for &g in &self.counts {
            idx.push(flat % g);
            flat /= g;
        }
        idx
    }

    pub fn flatten(&self, idx: &[usize]) -> usize {
        let mut flat = 0;
        for a in (0..self.dim()).rev() {
            flat = flat * self.counts[a] + idx[a];
        }
        flat
    }

    pub fn point(&self, flat: usize) -> Vec<f64> {
        let mut p = vec![0.0; self.dim()];
        self.write_point(flat, &mut p);
        p
    }

    fn write_point(&self, mut flat: usize, out: &mut [f64]) {
        for (a, g) in self.counts.iter().enumerate() {
            out[a] = self.coordinate(a, flat % g);
            flat /= g;
        }
    }

    /// Largest lattice edge length along any axis.
    pub fn max_spacing(&self) -> f64 {
        self.spacing.iter().cloned().fold(0.0, f64::max)
    }

    /// Half the diagonal of one lattice cell: every point of the box lies at
    /// most this far from a lattice point.
    pub fn covering_radius(&self) -> f64 {
        0.5 * self.spacing.iter().map(|h| h * h).sum::<f64>().sqrt()
    }

    pub fn covers(&self, cloud: &PointCloud) -> bool {
        let upper = self.upper();
        cloud.dim() == self.dim()
            && cloud
                .points()
                .all(|p| p.iter().enumerate().all(|(a, x)| self.lower[a] <= *x && *x <= upper[a]))
    }
}

pub fn default_resolution(dim: usize) -> usize {
    match dim {
        1 => 256,
        2 => 64,
        3 => 32,
        _ => 8,
    }
}

/// A function sampled at every lattice point of a [`GridSpec`].
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: GridSpec,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(grid: GridSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::param(format!(
                "field has {} values for a grid of {} points",
                values.len(),
                grid.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::param("field values must be finite"));
        }
        Ok(Self { grid, values })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn max(&self) -> f64 {
        self.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    /// Sup-norm of the difference of two fields on the same lattice.
    pub fn sup_distance(&self, other: &ScalarField) -> Result<f64> {
        if self.grid != other.grid {
            return Err(Error::param("fields live on different grids"));
        }
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    }
}

/// Evaluates the empirical DTM at every lattice point.
pub fn dtm_field(cloud: &PointCloud, grid: &GridSpec, params: &DtmParams) -> Result<ScalarField> {
    if cloud.dim() != grid.dim() {
        return Err(Error::param("grid and cloud dimensions differ"));
    }
    if !grid.covers(cloud) {
        return Err(Error::param(
            "grid does not cover the point cloud; sublevel features would be truncated",
        ));
    }
    let k = params.k(cloud.len())?;
    let index = KnnIndex::new(cloud);
    let p = params.p();
    const CHUNK: usize = 256;
    let mut values = vec![0.0; grid.len()];
    values
        .par_chunks_mut(CHUNK)
        .enumerate()
        .try_for_each(|(c, chunk)| -> Result<()> {
            let mut point = vec![0.0; grid.dim()];
            let mut buf = Vec::new();
            for (j, v) in chunk.iter_mut().enumerate() {
                grid.write_point(c * CHUNK + j, &mut point);
                index.query_into(&point, k, &mut buf)?;
                *v = dtm_from_neighbors(&buf, p);
            }
            Ok(())
        })?;
    ScalarField::new(grid.clone(), values)
}

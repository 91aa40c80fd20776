//! Point clouds and metric queries.

use std::cmp::Ordering;

use crate::error::{Error, Result};

/// Clouds at or below this size are queried by exhaustive scan.
pub const SCAN_LIMIT: usize = 2_000;

/// Euclidean distance. Every distance in the crate goes through here so that
/// different search backends produce bit-identical values.
#[inline]
pub fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// A finite multiset of points in R^d, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    dim: usize,
    coords: Vec<f64>,
}

impl PointCloud {
    pub fn new(dim: usize, coords: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::param("point dimension must be at least 1"));
        }
        if !coords.len().is_multiple_of(dim) {
            return Err(Error::param(format!(
                "{} coordinates do not divide into points of dimension {dim}",
                coords.len()
            )));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::param("point coordinates must be finite"));
        }
        Ok(Self { dim, coords })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let first = rows.first().ok_or(Error::NoPoints)?;
        let dim = first.as_ref().len();
        let mut coords = Vec::with_capacity(rows.len() * dim);
        for (i, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            if row.len() != dim {
                return Err(Error::param(format!(
                    "point {i} has dimension {}, expected {dim}",
                    row.len()
                )));
            }
            coords.extend_from_slice(row);
        }
        Self::new(dim, coords)
    }

    /// An empty cloud of the given dimension.
    pub fn empty(dim: usize) -> Self {
        Self {
            dim: dim.max(1),
            coords: Vec::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.coords.chunks_exact(self.dim)
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn push(&mut self, p: &[f64]) -> Result<()> {
        self.check_dim(p)?;
        self.coords.extend_from_slice(p);
        Ok(())
    }

    /// Overwrites point `i` in place.
    pub fn set_point(&mut self, i: usize, p: &[f64]) -> Result<()> {
        self.check_dim(p)?;
        if i >= self.len() {
            return Err(Error::param(format!("point index {i} out of range")));
        }
        self.coords[i * self.dim..(i + 1) * self.dim].copy_from_slice(p);
        Ok(())
    }

    /// Union of two clouds as multisets (concatenation).
    pub fn union(&self, other: &PointCloud) -> Result<PointCloud> {
        if self.dim != other.dim {
            return Err(Error::param("dimension mismatch"));
        }
        let mut coords = self.coords.clone();
        coords.extend_from_slice(&other.coords);
        PointCloud::new(self.dim, coords)
    }

    fn check_dim(&self, p: &[f64]) -> Result<()> {
        if p.len() != self.dim {
            return Err(Error::param(format!(
                "point has dimension {}, cloud has {}",
                p.len(),
                self.dim
            )));
        }
        if p.iter().any(|c| !c.is_finite()) {
            return Err(Error::param("point coordinates must be finite"));
        }
        Ok(())
    }

    pub fn bounding_box(&self, padding: f64) -> Result<BoundingBox> {
        if self.is_empty() {
            return Err(Error::NoPoints);
        }
        let mut lower = self.point(0).to_vec();
        let mut upper = lower.clone();
        for p in self.points() {
            for a in 0..self.dim {
                lower[a] = lower[a].min(p[a]);
                upper[a] = upper[a].max(p[a]);
            }
        }
        BoundingBox::new(lower, upper, padding)
    }

    /// Number of positions at which the two ordered tuples differ.
    pub fn hamming(&self, other: &PointCloud) -> Option<usize> {
        if self.dim != other.dim || self.len() != other.len() {
            return None;
        }
        Some(self.points().zip(other.points()).filter(|(a, b)| a != b).count())
    }
}

/// Axis-aligned box around a cloud, grown by `padding` on every side.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundingBox {
    lower: Vec<f64>,
    upper: Vec<f64>,
    padding: f64,
}

impl BoundingBox {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>, padding: f64) -> Result<Self> {
        if lower.len() != upper.len() || lower.is_empty() {
            return Err(Error::param("box corners must have equal, positive dimension"));
        }
        if lower.iter().zip(&upper).any(|(l, u)| !(l <= u)) {
            return Err(Error::param("box lower corner must not exceed upper corner"));
        }
        if !(padding >= 0.0) || !padding.is_finite() {
            return Err(Error::param("box padding must be a nonnegative finite number"));
        }
        Ok(Self { lower, upper, padding })
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn padding(&self) -> f64 {
        self.padding
    }

    /// Padded lower corner.
    pub fn lower(&self) -> Vec<f64> {
        self.lower.iter().map(|l| l - self.padding).collect()
    }

    /// Padded upper corner.
    pub fn upper(&self) -> Vec<f64> {
        self.upper.iter().map(|u| u + self.padding).collect()
    }

    pub fn with_padding(&self, padding: f64) -> Result<Self> {
        Self::new(self.lower.clone(), self.upper.clone(), padding)
    }

    /// Length of the padded box's main diagonal.
    pub fn diagonal(&self) -> f64 {
        euclidean(&self.lower(), &self.upper())
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        p.len() == self.dim()
            && p.iter()
                .zip(self.lower().iter().zip(self.upper()))
                .all(|(x, (l, u))| *l <= *x && *x <= u)
    }
}

/// One k-nearest-neighbour result.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Neighbor {
    pub index: usize,
    pub distance: f64,
}

#[inline]
fn by_distance_then_index(a: &Neighbor, b: &Neighbor) -> Ordering {
    a.distance.total_cmp(&b.distance).then(a.index.cmp(&b.index))
}

/// Selects the k smallest neighbours of `buf` and sorts them.
fn take_k_smallest(buf: &mut Vec<Neighbor>, k: usize) {
    if k < buf.len() {
        buf.select_nth_unstable_by(k - 1, by_distance_then_index);
        buf.truncate(k);
    }
    buf.sort_unstable_by(by_distance_then_index);
}

/// k nearest neighbours of `query`, ascending by distance, ties broken by
/// lower index.
pub fn knn(cloud: &PointCloud, query: &[f64], k: usize) -> Result<Vec<Neighbor>> {
    KnnIndex::new(cloud).query(query, k)
}

/// Search structure over a borrowed cloud. Small clouds are scanned; larger
/// clouds go through a uniform bucket grid. Both paths return identical
/// results.
pub struct KnnIndex<'a> {
    cloud: &'a PointCloud,
    buckets: Option<BucketGrid>,
}

impl<'a> KnnIndex<'a> {
    pub fn new(cloud: &'a PointCloud) -> Self {
        if cloud.len() > SCAN_LIMIT {
            Self::bucketed(cloud)
        } else {
            Self::scan(cloud)
        }
    }

    pub fn scan(cloud: &'a PointCloud) -> Self {
        Self { cloud, buckets: None }
    }

    pub fn bucketed(cloud: &'a PointCloud) -> Self {
        Self {
            cloud,
            buckets: BucketGrid::build(cloud),
        }
    }

    pub fn cloud(&self) -> &PointCloud {
        self.cloud
    }

    pub fn query(&self, query: &[f64], k: usize) -> Result<Vec<Neighbor>> {
        let mut buf = Vec::new();
        self.query_into(query, k, &mut buf)?;
        Ok(buf)
    }

    /// Like [`KnnIndex::query`] but reuses `buf` for the result.
    pub fn query_into(&self, query: &[f64], k: usize, buf: &mut Vec<Neighbor>) -> Result<()> {
        let n = self.cloud.len();
        if k == 0 || k > n {
            return Err(Error::param(format!("k = {k} must lie in 1..={n}")));
        }
        if query.len() != self.cloud.dim() {
            return Err(Error::param("query dimension does not match the cloud"));
        }
        buf.clear();
        match &self.buckets {
            None => {
                buf.extend(self.cloud.points().enumerate().map(|(index, p)| Neighbor {
                    index,
                    distance: euclidean(p, query),
                }));
            }
            Some(grid) => grid.collect_candidates(self.cloud, query, k, buf),
        }
        take_k_smallest(buf, k);
        Ok(())
    }
}

/// Points bucketed into a regular grid over their bounding box, in CSR form.
struct BucketGrid {
    lower: Vec<f64>,
    size: Vec<f64>,
    cells: Vec<usize>,
    starts: Vec<usize>,
    members: Vec<usize>,
}

impl BucketGrid {
    const TARGET_PER_CELL: f64 = 8.0;

    fn build(cloud: &PointCloud) -> Option<Self> {
        let dim = cloud.dim();
        let bbox = cloud.bounding_box(0.0).ok()?;
        let (lower, upper) = (bbox.lower(), bbox.upper());
        let per_axis = ((cloud.len() as f64 / Self::TARGET_PER_CELL).powf(1.0 / dim as f64))
            .floor()
            .max(1.0) as usize;
        let mut cells = vec![per_axis; dim];
        let mut size = vec![0.0; dim];
        for a in 0..dim {
            let extent = upper[a] - lower[a];
            if extent > 0.0 {
                size[a] = extent / per_axis as f64;
            } else {
                cells[a] = 1;
            }
        }
        let total: usize = cells.iter().product();
        let mut grid = Self {
            lower,
            size,
            cells,
            starts: vec![0; total + 1],
            members: Vec::with_capacity(cloud.len()),
        };
        let ids: Vec<usize> = cloud.points().map(|p| grid.cell_of(p)).collect();
        for &c in &ids {
            grid.starts[c + 1] += 1;
        }
        for c in 0..total {
            grid.starts[c + 1] += grid.starts[c];
        }
        let mut fill = grid.starts.clone();
        grid.members = vec![0; cloud.len()];
        for (i, &c) in ids.iter().enumerate() {
            grid.members[fill[c]] = i;
            fill[c] += 1;
        }
        Some(grid)
    }

    fn axis_cell(&self, a: usize, x: f64) -> usize {
        if self.size[a] == 0.0 {
            return 0;
        }
        let c = ((x - self.lower[a]) / self.size[a]).floor();
        if c < 0.0 {
            0
        } else {
            (c as usize).min(self.cells[a] - 1)
        }
    }

    fn cell_of(&self, p: &[f64]) -> usize {
        let mut id = 0;
        for a in (0..p.len()).rev() {
            id = id * self.cells[a] + self.axis_cell(a, p[a]);
        }
        id
    }

    /// Gathers candidates ring by ring until the k-th candidate is strictly
    /// closer than every unvisited cell.
    fn collect_candidates(&self, cloud: &PointCloud, q: &[f64], k: usize, buf: &mut Vec<Neighbor>) {
        let dim = q.len();
        let center: Vec<usize> = (0..dim).map(|a| self.axis_cell(a, q[a])).collect();
        let max_ring = (0..dim).map(|a| self.cells[a]).max().unwrap_or(1);
        let mut scratch: Vec<f64> = Vec::new();
        let mut idx = vec![0usize; dim];
        for ring in 0..=max_ring {
            let lo: Vec<usize> = center.iter().map(|&c| c.saturating_sub(ring)).collect();
            let hi: Vec<usize> = (0..dim).map(|a| (center[a] + ring).min(self.cells[a] - 1)).collect();
            idx.copy_from_slice(&lo);
            'cells: loop {
                let on_shell = (0..dim).any(|a| idx[a].abs_diff(center[a]) == ring);
                if on_shell {
                    let mut id = 0;
                    for a in (0..dim).rev() {
                        id = id * self.cells[a] + idx[a];
                    }
                    for &i in &self.members[self.starts[id]..self.starts[id + 1]] {
                        buf.push(Neighbor {
                            index: i,
                            distance: euclidean(cloud.point(i), q),
                        });
                    }
                }
                for a in 0..dim {
                    if idx[a] < hi[a] {
                        idx[a] += 1;
                        continue 'cells;
                    }
                    idx[a] = lo[a];
                }
                break;
            }

            let covers_all = (0..dim).all(|a| lo[a] == 0 && hi[a] == self.cells[a] - 1);
            if covers_all {
                return;
            }
            if buf.len() < k {
                continue;
            }
            let mut bound = f64::INFINITY;
            for a in 0..dim {
                if lo[a] > 0 {
                    bound = bound.min(q[a] - (self.lower[a] + lo[a] as f64 * self.size[a]));
                }
                if hi[a] < self.cells[a] - 1 {
                    bound = bound.min(self.lower[a] + (hi[a] + 1) as f64 * self.size[a] - q[a]);
                }
            }
            // Bucket assignment rounds; keep a margin so no boundary point is missed.
            let bound = bound - 1e-9 * (1.0 + bound.abs());
            scratch.clear();
            scratch.extend(buf.iter().map(|nb| nb.distance));
            let (_, kth, _) = scratch.select_nth_unstable_by(k - 1, f64::total_cmp);
            if *kth < bound {
                return;
            }
        }
    }
}

/// Maximum pairwise distance; 0 for a single point.
pub fn diameter(cloud: &PointCloud) -> Result<f64> {
    if cloud.is_empty() {
        return Err(Error::NoPoints);
    }
    let n = cloud.len();
    let mut best = 0.0f64;
    for i in 0..n {
        let p = cloud.point(i);
        for j in (i + 1)..n {
            best = best.max(euclidean(p, cloud.point(j)));
        }
    }
    Ok(best)
}

/// Hausdorff distance between the supports of two clouds.
pub fn hausdorff(a: &PointCloud, b: &PointCloud) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::NoPoints);
    }
    if a.dim() != b.dim() {
        return Err(Error::param("dimension mismatch"));
    }
    Ok(directed_hausdorff(a, b).max(directed_hausdorff(b, a)))
}

fn directed_hausdorff(from: &PointCloud, to: &PointCloud) -> f64 {
    from.points()
        .map(|p| to.points().map(|q| euclidean(p, q)).fold(f64::INFINITY, f64::min))
        .fold(0.0, f64::max)
}

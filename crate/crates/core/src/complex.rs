//! Filtration builders: Vietoris–Rips, small Čech complexes and cubical
//! lower-star filtrations of sampled fields.

use std::collections::{BTreeSet, HashMap};

use crate::dtm::ScalarField;
use crate::error::{Error, Result};
use crate::geometry::{euclidean, PointCloud};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FiltrationKind {
    Rips,
    Cech,
    Cubical,
}

/// How a pairwise distance maps to a Rips filtration value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ScaleConvention {
    /// Balls of radius r pairwise intersect: edge value is half the distance.
    #[default]
    Radius,
    /// Edge value is the full distance.
    Diameter,
}

impl ScaleConvention {
    #[inline]
    pub fn edge_value(self, distance: f64) -> f64 {
        match self {
            ScaleConvention::Radius => distance / 2.0,
            ScaleConvention::Diameter => distance,
        }
    }
}

/// One cell of a filtration. `boundary` holds positions of the faces within
/// the owning [`Filtration`], ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub id: usize,
    pub dim: usize,
    pub value: f64,
    pub boundary: Vec<usize>,
}

/// Cell before sorting; `boundary` refers to indices in the builder's list,
/// which also serve as the tie-breaking id.
#[derive(Debug, Clone)]
pub struct RawCell {
    pub dim: usize,
    pub value: f64,
    pub boundary: Vec<usize>,
}

/// Cells ordered by (value, dimension, id) with a monotone filtration value.
#[derive(Debug, Clone, PartialEq)]
pub struct Filtration {
    kind: FiltrationKind,
    cells: Vec<Cell>,
}

impl Filtration {
    /// Sorts raw cells by (value, dim, id) and remaps boundaries to positions.
    pub fn from_raw(kind: FiltrationKind, raw: Vec<RawCell>) -> Result<Self> {
        if raw.iter().any(|c| c.value.is_nan()) {
            return Err(Error::InvariantViolation("NaN filtration value".into()));
        }
        let mut order: Vec<usize> = (0..raw.len()).collect();
        order.sort_unstable_by(|&a, &b| {
            raw[a]
                .value
                .total_cmp(&raw[b].value)
                .then(raw[a].dim.cmp(&raw[b].dim))
                .then(a.cmp(&b))
        });
        let mut position = vec![0usize; raw.len()];
        for (pos, &id) in order.iter().enumerate() {
            position[id] = pos;
        }
        let mut raw: Vec<Option<RawCell>> = raw.into_iter().map(Some).collect();
        let mut cells = Vec::with_capacity(order.len());
        for &id in &order {
            let c = raw[id].take().expect("each raw cell is placed once");
            let mut boundary: Vec<usize> = c
                .boundary
                .iter()
                .map(|&b| position.get(b).copied())
                .collect::<Option<_>>()
                .ok_or_else(|| Error::InvariantViolation(format!("cell {id} has a dangling face")))?;
            boundary.sort_unstable();
            cells.push(Cell {
                id,
                dim: c.dim,
                value: c.value,
                boundary,
            });
        }
        let f = Self { kind, cells };
        f.validate()?;
        Ok(f)
    }

    /// Builds from cells already in filtration order; used for hand-made
    /// complexes and for exercising the validator.
    pub fn from_sorted(kind: FiltrationKind, cells: Vec<Cell>) -> Result<Self> {
        let f = Self { kind, cells };
        f.validate()?;
        Ok(f)
    }

    /// Checks that every face precedes its coface, carries a value no larger,
    /// and has dimension one less.
    pub fn validate(&self) -> Result<()> {
        for (pos, c) in self.cells.iter().enumerate() {
            if c.dim == 0 && !c.boundary.is_empty() {
                return Err(Error::InvariantViolation(format!("vertex at {pos} has faces")));
            }
            for &b in &c.boundary {
                let face = self
                    .cells
                    .get(b)
                    .ok_or_else(|| Error::InvariantViolation(format!("cell at {pos} references missing face {b}")))?;
                if b >= pos {
                    return Err(Error::InvariantViolation(format!(
                        "face {b} does not precede cell {pos}"
                    )));
                }
                if face.dim + 1 != c.dim {
                    return Err(Error::InvariantViolation(format!(
                        "face {b} of cell {pos} has the wrong dimension"
                    )));
                }
                if face.value > c.value {
                    return Err(Error::InvariantViolation(format!(
                        "cell {pos} enters at {} before its face {b} at {}",
                        c.value, face.value
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn kind(&self) -> FiltrationKind {
        self.kind
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn max_dim(&self) -> usize {
        self.cells.iter().map(|c| c.dim).max().unwrap_or(0)
    }

    /// Largest filtration value present.
    pub fn max_value(&self) -> f64 {
        self.cells.last().map(|c| c.value).unwrap_or(0.0)
    }
}

/// Vietoris–Rips filtration up to `max_dim` (at most 2), radius convention.
pub fn rips_filtration(cloud: &PointCloud, max_scale: f64, max_dim: usize) -> Result<Filtration> {
    rips_filtration_with(cloud, max_scale, max_dim, ScaleConvention::Radius)
}

pub fn rips_filtration_with(
    cloud: &PointCloud,
    max_scale: f64,
    max_dim: usize,
    convention: ScaleConvention,
) -> Result<Filtration> {
    if max_dim > 2 {
        return Err(Error::UnsupportedDimension(max_dim));
    }
    if cloud.is_empty() {
        return Err(Error::NoPoints);
    }
    if !(max_scale > 0.0) {
        return Err(Error::param("max_scale must be positive"));
    }
    let n = cloud.len();
    let mut raw: Vec<RawCell> = (0..n)
        .map(|_| RawCell {
            dim: 0,
            value: 0.0,
            boundary: Vec::new(),
        })
        .collect();
    if max_dim == 0 {
        return Filtration::from_raw(FiltrationKind::Rips, raw);
    }
    let mut edge_index: HashMap<(usize, usize), usize> = HashMap::new();
    for i in 0..n {
        for j in (i + 1)..n {
            let v = convention.edge_value(euclidean(cloud.point(i), cloud.point(j)));
            if v <= max_scale {
                if max_dim >= 2 {
                    edge_index.insert((i, j), raw.len());
                }
                raw.push(RawCell {
                    dim: 1,
                    value: v,
                    boundary: vec![i, j],
                });
            }
        }
    }
    if max_dim >= 2 {
        for i in 0..n {
            for j in (i + 1)..n {
                let Some(&ij) = edge_index.get(&(i, j)) else {
                    continue;
                };
                for k in (j + 1)..n {
                    let (Some(&ik), Some(&jk)) = (edge_index.get(&(i, k)), edge_index.get(&(j, k))) else {
                        continue;
                    };
                    let v = raw[ij].value.max(raw[ik].value).max(raw[jk].value);
                    raw.push(RawCell {
                        dim: 2,
                        value: v,
                        boundary: vec![ij, ik, jk],
                    });
                }
            }
        }
    }
    Filtration::from_raw(FiltrationKind::Rips, raw)
}

/// Largest cloud accepted by the combinatorial Čech enumeration.
pub const CECH_MAX_POINTS: usize = 32;

/// Radius of the smallest closed ball containing one to three points.
pub fn miniball_radius(points: &[&[f64]]) -> f64 {
    match points.len() {
        0 | 1 => 0.0,
        2 => euclidean(points[0], points[1]) / 2.0,
        3 => {
            let a = euclidean(points[1], points[2]);
            let b = euclidean(points[0], points[2]);
            let c = euclidean(points[0], points[1]);
            let longest = a.max(b).max(c);
            let (a2, b2, c2) = (a * a, b * b, c * c);
            let obtuse_or_right = a2 >= b2 + c2 || b2 >= a2 + c2 || c2 >= a2 + b2;
            if obtuse_or_right {
                return longest / 2.0;
            }
            // Heron via the stable product form.
            let s = (a + b + c) * (-a + b + c) * (a - b + c) * (a + b - c);
            if s <= 0.0 {
                return longest / 2.0;
            }
            let circumradius = a * b * c / s.sqrt();
            circumradius.max(longest / 2.0)
        }
        _ => panic!("miniball_radius supports at most three points"),
    }
}

fn check_small(cloud: &PointCloud, max_dim: usize) -> Result<()> {
    if max_dim > 2 {
        return Err(Error::UnsupportedDimension(max_dim));
    }
    if cloud.len() > CECH_MAX_POINTS {
        return Err(Error::Size {
            what: "cloud for Čech enumeration",
            got: cloud.len(),
            limit: CECH_MAX_POINTS,
        });
    }
    Ok(())
}

fn enumerate_simplices(
    cloud: &PointCloud,
    max_dim: usize,
    mut keep: impl FnMut(&[usize]) -> bool,
) -> BTreeSet<Vec<usize>> {
    let n = cloud.len();
    let mut out = BTreeSet::new();
    for i in 0..n {
        out.insert(vec![i]);
        if max_dim == 0 {
            continue;
        }
        for j in (i + 1)..n {
            if keep(&[i, j]) {
                out.insert(vec![i, j]);
            }
            if max_dim < 2 {
                continue;
            }
            for k in (j + 1)..n {
                if keep(&[i, j, k]) {
                    out.insert(vec![i, j, k]);
                }
            }
        }
    }
    out
}

/// Simplices of the Čech complex at radius `r` (closed balls).
pub fn cech_complex(cloud: &PointCloud, r: f64, max_dim: usize) -> Result<BTreeSet<Vec<usize>>> {
    check_small(cloud, max_dim)?;
    Ok(enumerate_simplices(cloud, max_dim, |s| {
        let pts: Vec<&[f64]> = s.iter().map(|&i| cloud.point(i)).collect();
        miniball_radius(&pts) <= r
    }))
}

/// Simplices of the Vietoris–Rips complex at radius `r` (radius convention).
pub fn rips_complex(cloud: &PointCloud, r: f64, max_dim: usize) -> Result<BTreeSet<Vec<usize>>> {
    check_small(cloud, max_dim)?;
    Ok(enumerate_simplices(cloud, max_dim, |s| {
        s.iter().enumerate().all(|(a, &i)| {
            s[a + 1..]
                .iter()
                .all(|&j| euclidean(cloud.point(i), cloud.point(j)) / 2.0 <= r)
        })
    }))
}

/// Cubical lower-star filtration of a sampled field, all cell dimensions.
pub fn lower_star_filtration(field: &ScalarField) -> Result<Filtration> {
    lower_star_filtration_to_dim(field, field.grid().dim())
}

/// Cubical lower-star filtration keeping cells of dimension ≤ `max_dim`.
///
/// Cells are addressed in doubled coordinates: along each axis an even
/// coordinate is a lattice vertex and an odd one spans an edge. A cell's value
/// is the maximum over its corner vertices.
pub fn lower_star_filtration_to_dim(field: &ScalarField, max_dim: usize) -> Result<Filtration> {
    let grid = field.grid();
    let d = grid.dim();
    let ext: Vec<usize> = grid.counts().iter().map(|g| 2 * g - 1).collect();
    let total: usize = ext.iter().product();
    let mut strides = vec![1usize; d];
    for a in 1..d {
        strides[a] = strides[a - 1] * ext[a - 1];
    }

    let mut value = vec![f64::NAN; total];
    let mut coord = vec![0usize; d];
    for (flat, v) in field.values().iter().enumerate() {
        let idx = grid.unflatten(flat);
        let doubled: usize = idx.iter().zip(&strides).map(|(i, s)| 2 * i * s).sum();
        value[doubled] = *v;
    }
    // Axis sweeps: after sweeping axis a, every cell whose odd coordinates lie
    // in axes ≤ a has its value.
    for a in 0..d {
        for flat in 0..total {
            decode(flat, &ext, &mut coord);
            if coord[a] % 2 == 1 && coord[a + 1..].iter().all(|c| c % 2 == 0) {
                value[flat] = value[flat - strides[a]].max(value[flat + strides[a]]);
            }
        }
    }

    let mut raw_of = vec![usize::MAX; total];
    let mut raw = Vec::new();
    for flat in 0..total {
        decode(flat, &ext, &mut coord);
        let dim = coord.iter().filter(|c| *c % 2 == 1).count();
        if dim > max_dim {
            continue;
        }
        raw_of[flat] = raw.len();
        raw.push(RawCell {
            dim,
            value: value[flat],
            boundary: vec![usize::MAX; 2 * dim],
        });
    }
    // Faces on the upper side have larger flat indices, so boundaries are
    // filled once every kept cell is numbered.
    for (flat, &r) in raw_of.iter().enumerate() {
        if r == usize::MAX {
            continue;
        }
        decode(flat, &ext, &mut coord);
        let mut k = 0;
        for a in 0..d {
            if coord[a] % 2 == 1 {
                raw[r].boundary[k] = raw_of[flat - strides[a]];
                raw[r].boundary[k + 1] = raw_of[flat + strides[a]];
                k += 2;
            }
        }
    }
    Filtration::from_raw(FiltrationKind::Cubical, raw)
}

fn decode(mut flat: usize, ext: &[usize], out: &mut [usize]) {
    for (a, e) in ext.iter().enumerate() {
        out[a] = flat % e;
        flat /= e;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dtm::GridSpec;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn cells_of_dim(f: &Filtration, dim: usize) -> Vec<f64> {
        f.cells().iter().filter(|c| c.dim == dim).map(|c| c.value).collect()
    }

    #[test]
    fn rips_single_edge() {
        let c = PointCloud::from_rows(&[[0.0], [1.0]]).unwrap();
        let f = rips_filtration(&c, 10.0, 1).unwrap();
        assert_eq!(cells_of_dim(&f, 1), vec![0.5]);
        let f = rips_filtration_with(&c, 10.0, 1, ScaleConvention::Diameter).unwrap();
        assert_eq!(cells_of_dim(&f, 1), vec![1.0]);
    }

    #[test]
    fn rips_equilateral_triangle() {
        let s = 2.0;
        let c = PointCloud::from_rows(&[[0.0, 0.0], [s, 0.0], [s / 2.0, s * 3f64.sqrt() / 2.0]]).unwrap();
        let f = rips_filtration(&c, 10.0, 2).unwrap();
        let edges = cells_of_dim(&f, 1);
        assert_eq!(edges.len(), 3);
        for e in &edges {
            assert!((e - s / 2.0).abs() < 1e-12);
        }
        let tri = cells_of_dim(&f, 2);
        assert_eq!(tri.len(), 1);
        assert_eq!(tri[0], edges.iter().cloned().fold(0.0, f64::max));
    }

    #[test]
    fn rips_omits_cells_beyond_scale() {
        let c = PointCloud::from_rows(&[[0.0], [1.0], [5.0]]).unwrap();
        let f = rips_filtration(&c, 1.0, 2).unwrap();
        assert_eq!(cells_of_dim(&f, 1), vec![0.5]);
        assert!(cells_of_dim(&f, 2).is_empty());
        assert_eq!(rips_filtration(&c, 1.0, 3), Err(Error::UnsupportedDimension(3)));
    }

    #[test]
    fn filtration_is_sorted_and_monotone() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let rows: Vec<[f64; 2]> = (0..15).map(|_| [rng.random(), rng.random()]).collect();
        let f = rips_filtration(&PointCloud::from_rows(&rows).unwrap(), 0.6, 2).unwrap();
        f.validate().unwrap();
        for w in f.cells().windows(2) {
            let key = |c: &Cell| (c.value, c.dim);
            assert!(key(&w[0]) <= key(&w[1]));
        }
    }

    #[test]
    fn validator_rejects_non_monotone() {
        let cells = vec![
            Cell {
                id: 0,
                dim: 0,
                value: 1.0,
                boundary: vec![],
            },
            Cell {
                id: 1,
                dim: 0,
                value: 0.0,
                boundary: vec![],
            },
            Cell {
                id: 2,
                dim: 1,
                value: 0.5,
                boundary: vec![0, 1],
            },
        ];
        assert!(matches!(
            Filtration::from_sorted(FiltrationKind::Rips, cells),
            Err(Error::InvariantViolation(_))
        ));
    }

    #[test]
    fn cech_tangent_pair_included() {
        let c = PointCloud::from_rows(&[[0.0, 0.0], [2.0, 0.0]]).unwrap();
        assert!(cech_complex(&c, 1.0, 1).unwrap().contains(&vec![0, 1]));
        assert!(!cech_complex(&c, 0.999, 1).unwrap().contains(&vec![0, 1]));
    }

    /// Smallest enclosing disc of three planar points by brute force over
    /// candidate centres on a fine lattice refined around the optimum.
    fn brute_miniball(p: &[[f64; 2]; 3]) -> f64 {
        let cost = |x: f64, y: f64| {
            p.iter()
                .map(|q| ((q[0] - x).powi(2) + (q[1] - y).powi(2)).sqrt())
                .fold(0.0, f64::max)
        };
        let (mut cx, mut cy, mut h) = (0.0, 0.0, 2.0);
        for _ in 0..60 {
            let mut best = (cost(cx, cy), cx, cy);
            for i in -10..=10 {
                for j in -10..=10 {
                    let (x, y) = (cx + i as f64 * h / 10.0, cy + j as f64 * h / 10.0);
                    let v = cost(x, y);
                    if v < best.0 {
                        best = (v, x, y);
                    }
                }
            }
            cx = best.1;
            cy = best.2;
            h *= 0.5;
        }
        cost(cx, cy)
    }

    #[test]
    fn miniball_obtuse_and_acute() {
        let obtuse = [[0.0, 0.0], [4.0, 0.0], [2.0, 0.5]];
        let acute = [[0.0, 0.0], [2.0, 0.0], [1.0, 1.5]];
        for tri in [obtuse, acute] {
            let pts: Vec<&[f64]> = tri.iter().map(|p| p.as_slice()).collect();
            assert!((miniball_radius(&pts) - brute_miniball(&tri)).abs() < 1e-6);
        }
        // obtuse: Čech and Rips agree at half the longest side
        let c = PointCloud::from_rows(&obtuse).unwrap();
        assert_eq!(cech_complex(&c, 2.0, 2).unwrap(), rips_complex(&c, 2.0, 2).unwrap());
        // acute: the triangle is in Rips at half the longest side but not in Čech
        let c = PointCloud::from_rows(&acute).unwrap();
        let half_longest = 1.0;
        assert!(rips_complex(&c, half_longest, 2).unwrap().contains(&vec![0, 1, 2]));
        assert!(!cech_complex(&c, half_longest, 2).unwrap().contains(&vec![0, 1, 2]));
        let circ = brute_miniball(&acute);
        assert!(circ > half_longest);
        assert!(cech_complex(&c, circ + 1e-9, 2).unwrap().contains(&vec![0, 1, 2]));
    }

    #[test]
    fn cech_size_limit() {
        let c = PointCloud::new(1, (0..33).map(|i| i as f64).collect()).unwrap();
        assert!(matches!(cech_complex(&c, 1.0, 1), Err(Error::Size { .. })));
    }

    #[test]
    fn cubical_complex_counts_and_values() {
        let grid = GridSpec::new(vec![0.0, 0.0], vec![1.0, 1.0], vec![3, 2]).unwrap();
        let field = ScalarField::new(grid, vec![0.0, 1.0, 2.0, 3.0, 4.0, 5.0]).unwrap();
        let f = lower_star_filtration(&field).unwrap();
        assert_eq!(cells_of_dim(&f, 0).len(), 6);
        assert_eq!(cells_of_dim(&f, 1).len(), 7);
        assert_eq!(cells_of_dim(&f, 2).len(), 2);
        assert_eq!(cells_of_dim(&f, 2), vec![4.0, 5.0]);
        for c in f.cells() {
            if c.dim == 2 {
                assert_eq!(c.boundary.len(), 4);
            }
        }
        let f1 = lower_star_filtration_to_dim(&field, 1).unwrap();
        assert_eq!(f1.max_dim(), 1);
    }

    #[test]
    fn cubical_constant_field() {
        let grid = GridSpec::new(vec![0.0; 3], vec![1.0; 3], vec![3, 3, 3]).unwrap();
        let field = ScalarField::new(grid, vec![2.5; 27]).unwrap();
        let f = lower_star_filtration(&field).unwrap();
        assert_eq!(f.len(), 125);
        assert!(f.cells().iter().all(|c| c.value == 2.5));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(50))]
            #[test]
            fn cech_rips_nesting(pts in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 1..=10),
                                 r in 0.0f64..1.2) {
                let rows: Vec<[f64; 2]> = pts.iter().map(|(x, y)| [*x, *y]).collect();
                let c = PointCloud::from_rows(&rows).unwrap();
                let cech = cech_complex(&c, r, 2).unwrap();
                let vr = rips_complex(&c, r, 2).unwrap();
                let cech_wide = cech_complex(&c, 2f64.sqrt() * r, 2).unwrap();
                prop_assert!(cech.is_subset(&vr));
                prop_assert!(vr.is_subset(&cech_wide));
            }
        }
    }
}

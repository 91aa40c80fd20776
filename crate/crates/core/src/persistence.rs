//! Persistence pairing over Z/2: column reduction with clearing, plus an
//! elder-rule union-find path for dimension 0.

use crate::complex::Filtration;
use crate::error::{Error, Result};

/// A birth–death pair; `death` is `f64::INFINITY` for essential classes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PersistencePair {
    pub birth: f64,
    pub death: f64,
}

impl PersistencePair {
    pub fn new(birth: f64, death: f64) -> Self {
        Self { birth, death }
    }

    pub fn is_essential(&self) -> bool {
        self.death == f64::INFINITY
    }

    pub fn persistence(&self) -> f64 {
        self.death - self.birth
    }
}

/// Multiset of pairs in one homological dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct Diagram {
    dim: usize,
    pairs: Vec<PersistencePair>,
}

impl Diagram {
    pub fn new(dim: usize, mut pairs: Vec<PersistencePair>) -> Result<Self> {
        for p in &pairs {
            if p.birth.is_nan() || p.death.is_nan() || !p.birth.is_finite() {
                return Err(Error::param("diagram values must be numbers with finite births"));
            }
            if p.birth > p.death {
                return Err(Error::param(format!(
                    "pair ({}, {}) has birth after death",
                    p.birth, p.death
                )));
            }
        }
        pairs.sort_by(|a, b| a.birth.total_cmp(&b.birth).then(a.death.total_cmp(&b.death)));
        Ok(Self { dim, pairs })
    }

    pub fn from_pairs(dim: usize, pairs: &[(f64, f64)]) -> Result<Self> {
        Self::new(dim, pairs.iter().map(|&(b, d)| PersistencePair::new(b, d)).collect())
    }

    pub fn empty(dim: usize) -> Self {
        Self { dim, pairs: Vec::new() }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn pairs(&self) -> &[PersistencePair] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn essential_count(&self) -> usize {
        self.pairs.iter().filter(|p| p.is_essential()).count()
    }

    /// Copy with one essential class removed (the earliest-born one).
    pub fn without_one_essential(&self) -> Diagram {
        let mut pairs = self.pairs.clone();
        if let Some(i) = pairs.iter().position(|p| p.is_essential()) {
            pairs.remove(i);
        }
        Diagram { dim: self.dim, pairs }
    }

    /// Largest finite value appearing in the diagram.
    pub fn max_finite(&self) -> f64 {
        self.pairs
            .iter()
            .flat_map(|p| [p.birth, p.death])
            .filter(|v| v.is_finite())
            .fold(0.0, f64::max)
    }
}

/// Diagrams for dimensions 0..=ell.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagramTuple {
    diagrams: Vec<Diagram>,
}

impl DiagramTuple {
    pub fn new(diagrams: Vec<Diagram>) -> Result<Self> {
        if diagrams.is_empty() {
            return Err(Error::param("a diagram tuple needs at least dimension 0"));
        }
        for (q, d) in diagrams.iter().enumerate() {
            if d.dim != q {
                return Err(Error::param(format!("diagram at position {q} has dimension {}", d.dim)));
            }
        }
        Ok(Self { diagrams })
    }

    pub fn ell(&self) -> usize {
        self.diagrams.len() - 1
    }

    pub fn diagrams(&self) -> &[Diagram] {
        &self.diagrams
    }

    pub fn get(&self, q: usize) -> Option<&Diagram> {
        self.diagrams.get(q)
    }

    pub fn into_diagrams(self) -> Vec<Diagram> {
        self.diagrams
    }
}

/// Symmetric difference of two ascending index lists into `out`.
fn add_columns(a: &[usize], b: &[usize], out: &mut Vec<usize>) {
    out.clear();
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => {
                out.push(a[i]);
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                out.push(b[j]);
                j += 1;
            }
            std::cmp::Ordering::Equal => {
                i += 1;
                j += 1;
            }
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
}

/// Raw pairing by cell position: `death_of[i]` is the position of the cell
/// that kills the class born at `i`.
struct Pairing {
    death_of: Vec<Option<usize>>,
    negative: Vec<bool>,
}

/// Column reduction with clearing over cells of dimension ≤ `top`.
fn reduce(filtration: &Filtration, top: usize) -> Pairing {
    let cells = filtration.cells();
    let n = cells.len();
    let mut death_of = vec![None; n];
    let mut negative = vec![false; n];
    let mut cleared = vec![false; n];
    let mut pivot_owner: Vec<Option<usize>> = vec![None; n];
    let mut reduced: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut scratch = Vec::new();
    for q in (1..=top).rev() {
        for j in 0..n {
            if cells[j].dim != q || cleared[j] {
                continue;
            }
            let mut col = cells[j].boundary.clone();
            while let Some(&low) = col.last() {
                match pivot_owner[low] {
                    Some(owner) => {
                        add_columns(&col, &reduced[owner], &mut scratch);
                        std::mem::swap(&mut col, &mut scratch);
                    }
                    None => break,
                }
            }
            if let Some(&low) = col.last() {
                pivot_owner[low] = Some(j);
                death_of[low] = Some(j);
                negative[j] = true;
                cleared[low] = true;
                reduced[j] = col;
            }
        }
    }
    Pairing { death_of, negative }
}

/// Persistence diagrams for dimensions 0..=ell. Zero-persistence pairs are
/// omitted; classes never killed get an infinite death.
pub fn compute_persistence(filtration: &Filtration, ell: usize) -> Result<DiagramTuple> {
    filtration.validate()?;
    let pairing = reduce(filtration, ell + 1);
    collect_diagrams(filtration, ell, &pairing.death_of, &pairing.negative)
}

fn collect_diagrams(
    filtration: &Filtration,
    ell: usize,
    death_of: &[Option<usize>],
    negative: &[bool],
) -> Result<DiagramTuple> {
    let cells = filtration.cells();
    let mut pairs: Vec<Vec<PersistencePair>> = vec![Vec::new(); ell + 1];
    for (i, c) in cells.iter().enumerate() {
        if c.dim > ell || negative[i] {
            continue;
        }
        let death = death_of[i].map_or(f64::INFINITY, |j| cells[j].value);
        if death > c.value {
            pairs[c.dim].push(PersistencePair::new(c.value, death));
        }
    }
    DiagramTuple::new(
        pairs
            .into_iter()
            .enumerate()
            .map(|(q, p)| Diagram::new(q, p))
            .collect::<Result<_>>()?,
    )
}

/// Disjoint sets where the root of every set is its oldest element.
struct ElderForest {
    parent: Vec<usize>,
}

impl ElderForest {
    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }
}

/// Dimension-0 diagram by the elder rule: when an edge joins two components
/// the one born later dies.
pub fn h0_union_find(filtration: &Filtration) -> Result<Diagram> {
    filtration.validate()?;
    let cells = filtration.cells();
    // Positions double as element ids; a smaller position means older.
    let mut forest = ElderForest {
        parent: (0..cells.len()).collect(),
    };
    let mut pairs = Vec::new();
    for c in cells {
        if c.dim != 1 {
            continue;
        }
        let ru = forest.find(c.boundary[0]);
        let rv = forest.find(c.boundary[1]);
        if ru == rv {
            continue;
        }
        let (elder, younger) = if ru < rv { (ru, rv) } else { (rv, ru) };
        forest.parent[younger] = elder;
        let birth = cells[younger].value;
        if c.value > birth {
            pairs.push(PersistencePair::new(birth, c.value));
        }
    }
    for (i, c) in cells.iter().enumerate() {
        if c.dim == 0 && forest.find(i) == i {
            pairs.push(PersistencePair::new(c.value, f64::INFINITY));
        }
    }
    Diagram::new(0, pairs)
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::complex::{lower_star_filtration, rips_filtration, Cell, FiltrationKind};
    use crate::dtm::{GridSpec, ScalarField};
    use crate::geometry::PointCloud;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Textbook left-to-right reduction without clearing; the oracle for the
    /// optimized path.
    pub(crate) fn textbook_persistence(f: &Filtration, ell: usize) -> DiagramTuple {
        let cells = f.cells();
        let n = cells.len();
        let mut cols: Vec<Vec<usize>> = cells.iter().map(|c| c.boundary.clone()).collect();
        let mut low_owner: Vec<Option<usize>> = vec![None; n];
        let mut death_of = vec![None; n];
        let mut negative = vec![false; n];
        let mut scratch = Vec::new();
        for j in 0..n {
            if cells[j].dim > ell + 1 {
                continue;
            }
            while let Some(&low) = cols[j].last() {
                if let Some(k) = low_owner[low] {
                    add_columns(&cols[j], &cols[k], &mut scratch);
                    std::mem::swap(&mut cols[j], &mut scratch);
                } else {
                    break;
                }
            }
            if let Some(&low) = cols[j].last() {
                low_owner[low] = Some(j);
                death_of[low] = Some(j);
                negative[j] = true;
            }
        }
        collect_diagrams(f, ell, &death_of, &negative).unwrap()
    }

    fn sorted(d: &Diagram) -> Vec<(f64, f64)> {
        d.pairs().iter().map(|p| (p.birth, p.death)).collect()
    }

    #[test]
    fn two_mass_rips_h0() {
        let diam = 2.0;
        let mut rows = vec![[0.0, 0.0]; 5];
        rows.extend(vec![[diam, 0.0]; 5]);
        let d = PointCloud::from_rows(&rows).unwrap();
        let f = rips_filtration(&d, 10.0, 1).unwrap();
        let dg = compute_persistence(&f, 0).unwrap();
        assert_eq!(sorted(&dg.diagrams()[0]), vec![(0.0, diam / 2.0), (0.0, f64::INFINITY)]);

        let mut dp = d.clone();
        dp.set_point(4, &[diam / 2.0, 0.0]).unwrap();
        let f = rips_filtration(&dp, 10.0, 1).unwrap();
        let dg = compute_persistence(&f, 0).unwrap();
        assert_eq!(
            sorted(&dg.diagrams()[0]),
            vec![(0.0, diam / 4.0), (0.0, diam / 4.0), (0.0, f64::INFINITY)]
        );
    }

    #[test]
    fn path_lower_star() {
        let grid = GridSpec::new(vec![0.0], vec![1.0], vec![5]).unwrap();
        let field = ScalarField::new(grid, vec![3.0, 1.0, 2.0, 0.0, 4.0]).unwrap();
        let f = lower_star_filtration(&field).unwrap();
        let dg = compute_persistence(&f, 0).unwrap();
        assert_eq!(sorted(&dg.diagrams()[0]), vec![(0.0, f64::INFINITY), (1.0, 2.0)]);
        assert_eq!(h0_union_find(&f).unwrap(), dg.diagrams()[0]);
    }

    #[test]
    fn constant_field_single_class() {
        let grid = GridSpec::new(vec![0.0, 0.0], vec![1.0, 1.0], vec![4, 4]).unwrap();
        let field = ScalarField::new(grid, vec![1.5; 16]).unwrap();
        let f = lower_star_filtration(&field).unwrap();
        let dg = compute_persistence(&f, 1).unwrap();
        assert_eq!(sorted(&dg.diagrams()[0]), vec![(1.5, f64::INFINITY)]);
        assert!(dg.diagrams()[1].is_empty());
    }

    #[test]
    fn ring_field_has_one_loop() {
        // a 5x5 grid that is low on its border ring and high in the centre
        let grid = GridSpec::new(vec![0.0, 0.0], vec![1.0, 1.0], vec![5, 5]).unwrap();
        let mut values = vec![0.0; 25];
        for (i, v) in values.iter_mut().enumerate() {
            let (x, y) = (i % 5, i / 5);
            let ring = x.min(y).min(4 - x).min(4 - y);
            *v = ring as f64;
        }
        let field = ScalarField::new(grid, values).unwrap();
        let dg = compute_persistence(&lower_star_filtration(&field).unwrap(), 1).unwrap();
        assert_eq!(sorted(&dg.diagrams()[1]), vec![(0.0, 2.0)]);
    }

    #[test]
    fn single_vertex_and_triangle() {
        let one = PointCloud::from_rows(&[[0.3, 0.1]]).unwrap();
        let f = rips_filtration(&one, 1.0, 1).unwrap();
        assert_eq!(sorted(&h0_union_find(&f).unwrap()), vec![(0.0, f64::INFINITY)]);

        let s = 1.0;
        let tri = PointCloud::from_rows(&[[0.0, 0.0], [s, 0.0], [s / 2.0, s * 3f64.sqrt() / 2.0]]).unwrap();
        let f = rips_filtration(&tri, 10.0, 2).unwrap();
        let h0 = h0_union_find(&f).unwrap();
        assert_eq!(h0.len(), 3);
        assert_eq!(h0.essential_count(), 1);
        for p in h0.pairs().iter().filter(|p| !p.is_essential()) {
            assert!((p.death - s / 2.0).abs() < 1e-12);
        }
        assert_eq!(compute_persistence(&f, 1).unwrap().diagrams()[0], h0);
    }

    #[test]
    fn rejects_non_monotone_filtration() {
        let cells = vec![
            Cell {
                id: 0,
                dim: 0,
                value: 0.0,
                boundary: vec![],
            },
            Cell {
                id: 1,
                dim: 0,
                value: 2.0,
                boundary: vec![],
            },
            Cell {
                id: 2,
                dim: 1,
                value: 1.0,
                boundary: vec![0, 1],
            },
        ];
        let bad = Filtration::from_sorted(FiltrationKind::Rips, cells);
        assert!(bad.is_err());
    }

    fn random_cloud(rng: &mut ChaCha8Rng, n: usize) -> PointCloud {
        let rows: Vec<[f64; 2]> = (0..n).map(|_| [rng.random(), rng.random()]).collect();
        PointCloud::from_rows(&rows).unwrap()
    }

    #[test]
    fn union_find_matches_reduction_on_random_rips() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..30 {
            let n = rng.random_range(1..=40);
            let c = random_cloud(&mut rng, n);
            let scale = rng.random_range(0.05..0.8);
            let f = rips_filtration(&c, scale, 1).unwrap();
            assert_eq!(
                h0_union_find(&f).unwrap(),
                compute_persistence(&f, 0).unwrap().diagrams()[0]
            );
        }
    }

    #[test]
    fn clearing_matches_textbook_reduction() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..20 {
            let n = rng.random_range(3..=11);
            let c = random_cloud(&mut rng, n);
            let f = rips_filtration(&c, 0.5, 2).unwrap();
            assert!(f.len() <= 500);
            assert_eq!(compute_persistence(&f, 1).unwrap(), textbook_persistence(&f, 1));
        }
        for _ in 0..10 {
            let grid = GridSpec::new(vec![0.0, 0.0], vec![1.0, 1.0], vec![9, 9]).unwrap();
            let values = (0..81).map(|_| rng.random_range(0.0..1.0)).collect();
            let f = lower_star_filtration(&ScalarField::new(grid, values).unwrap()).unwrap();
            assert_eq!(compute_persistence(&f, 1).unwrap(), textbook_persistence(&f, 1));
        }
    }

    /// Betti numbers at the end of the filtration from ranks of the boundary
    /// matrices (Gaussian elimination over Z/2) must equal the count of
    /// essential classes, and pair counts must balance the cell counts.
    #[test]
    fn euler_bookkeeping() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..15 {
            let n = rng.random_range(3..=10);
            let c = random_cloud(&mut rng, n);
            let f = rips_filtration(&c, 0.45, 2).unwrap();
            let cells = f.cells();
            let count = |q: usize| cells.iter().filter(|c| c.dim == q).count();
            let rank = |q: usize| -> usize {
                // rank of the boundary map from dim q to dim q-1
                let mut rows: Vec<Vec<usize>> = cells
                    .iter()
                    .filter(|c| c.dim == q)
                    .map(|c| c.boundary.clone())
                    .collect();
                let mut r = 0;
                let mut pivots: std::collections::HashMap<usize, Vec<usize>> = Default::default();
                for row in rows.iter_mut() {
                    let mut v = row.clone();
                    while let Some(&l) = v.last() {
                        match pivots.get(&l) {
                            Some(p) => {
                                let mut out = Vec::new();
                                add_columns(&v, p, &mut out);
                                v = out;
                            }
                            None => break,
                        }
                    }
                    if let Some(&l) = v.last() {
                        pivots.insert(l, v);
                        r += 1;
                    }
                }
                r
            };
            let dg = compute_persistence(&f, 1).unwrap();
            let b0 = count(0) - rank(1);
            let b1 = count(1) - rank(1) - rank(2);
            assert_eq!(dg.diagrams()[0].essential_count(), b0);
            assert_eq!(dg.diagrams()[1].essential_count(), b1);
            // zero-persistence pairs are dropped from diagrams but still pair cells
            assert_eq!(finite_pair_count(&f, 0), rank(1));
            assert_eq!(finite_pair_count(&f, 1), rank(2));
        }
    }

    /// Number of finite pairs (including zero-persistence ones) in dim q.
    fn finite_pair_count(f: &Filtration, q: usize) -> usize {
        let p = reduce(f, 2);
        f.cells()
            .iter()
            .enumerate()
            .filter(|(i, c)| c.dim == q && p.death_of[*i].is_some())
            .count()
    }

    mod props {
        use super::*;
        use crate::geometry::hausdorff;
        use crate::metric::{bottleneck, BottleneckConfig};
        use proptest::prelude::*;
        use rand::Rng;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(40))]
            #[test]
            fn rips_h0_is_stable_under_hausdorff(pts in prop::collection::vec((0.0f64..1.0, 0.0f64..1.0), 2..15),
                                                  noise in prop::collection::vec((-0.05f64..0.05, -0.05f64..0.05), 15)) {
                let a: Vec<[f64; 2]> = pts.iter().map(|(x, y)| [*x, *y]).collect();
                let b: Vec<[f64; 2]> = a.iter().zip(&noise).map(|(p, e)| [p[0] + e.0, p[1] + e.1]).collect();
                let (ca, cb) = (PointCloud::from_rows(&a).unwrap(), PointCloud::from_rows(&b).unwrap());
                let fa = rips_filtration(&ca, 10.0, 2).unwrap();
                let fb = rips_filtration(&cb, 10.0, 2).unwrap();
                let da = compute_persistence(&fa, 1).unwrap();
                let db = compute_persistence(&fb, 1).unwrap();
                let dh = hausdorff(&ca, &cb).unwrap();
                let cfg = BottleneckConfig::default();
                for q in 0..=1 {
                    let (p, r) = cfg.prepare(&da.diagrams()[q], &db.diagrams()[q]);
                    let d = bottleneck(&p, &r, cfg.cap).distance;
                    prop_assert!(d <= dh + 1e-9, "dim {} d_B {} > d_H {}", q, d, dh);
                }
            }

            #[test]
            fn rips_relabeling_invariant(pts in prop::collection::vec((0.0f64..1.0, 0.0f64..1.0), 2..10), seed in 0u64..1000) {
                let a: Vec<[f64; 2]> = pts.iter().map(|(x, y)| [*x, *y]).collect();
                let mut b = a.clone();
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                for i in (1..b.len()).rev() {
                    b.swap(i, rng.random_range(0..=i));
                }
                let fa = rips_filtration(&PointCloud::from_rows(&a).unwrap(), 10.0, 2).unwrap();
                let fb = rips_filtration(&PointCloud::from_rows(&b).unwrap(), 10.0, 2).unwrap();
                prop_assert_eq!(compute_persistence(&fa, 1).unwrap(), compute_persistence(&fb, 1).unwrap());
            }
        }
    }
}

//! Adversarial adjacent datasets and empirical base-sensitivity probes.
//!
//! The two-mass family puts half the points at `a = (0, 0)` and the rest at
//! `b = (diam, 0)`; its neighbours move points of `a` to the midpoint `c`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::dtm::{ceil_product, GridSpec};
use crate::error::{Error, Result};
use crate::geometry::{euclidean, BoundingBox, PointCloud};
use crate::metric::{tuple_bottleneck_per_dim, BottleneckConfig};
use crate::pipeline::Pipeline;

/// Two datasets of equal size differing in `hamming` positions.
#[derive(Debug, Clone, PartialEq)]
pub struct AdjacentPair {
    pub d: PointCloud,
    pub d_prime: PointCloud,
    pub hamming: usize,
}

impl AdjacentPair {
    fn new(d: PointCloud, d_prime: PointCloud) -> Result<Self> {
        let hamming = d
            .hamming(&d_prime)
            .ok_or_else(|| Error::InvariantViolation("adjacent clouds differ in shape".into()))?;
        Ok(Self { d, d_prime, hamming })
    }
}

/// Sizes of the two masses: `(n - 1) / 2` at `a` and the rest at `b` for odd `n`.
pub fn two_mass_split(n: usize) -> (usize, usize) {
    (n / 2, n - n / 2)
}

fn two_mass_cloud(n: usize, diam_e: f64, moved: usize) -> Result<PointCloud> {
    let (n_a, _) = two_mass_split(n);
    let mut coords = Vec::with_capacity(2 * n);
    for i in 0..n {
        let x = if i < n_a - moved {
            0.0
        } else if i < n_a {
            diam_e / 2.0
        } else {
            diam_e
        };
        coords.extend_from_slice(&[x, 0.0]);
    }
    PointCloud::new(2, coords)
}

fn check_two_mass(n: usize, diam_e: f64) -> Result<()> {
    if n < 2 {
        return Err(Error::param(format!("two-mass constructions need n >= 2, got {n}")));
    }
    if !(diam_e > 0.0) || !diam_e.is_finite() {
        return Err(Error::param(format!("diam E = {diam_e} must be positive")));
    }
    Ok(())
}

/// Masses at `a` and `b` at distance `diam_e`; the neighbour moves the last
/// copy of `a` to the midpoint.
pub fn make_two_mass_pair(n: usize, diam_e: f64) -> Result<AdjacentPair> {
    check_two_mass(n, diam_e)?;
    AdjacentPair::new(two_mass_cloud(n, diam_e, 0)?, two_mass_cloud(n, diam_e, 1)?)
}

/// The two-mass pair under the hypothesis `m < 1/2` that makes its L1-DTM
/// diagrams differ by exactly `diam_e / (2 ceil(m n))`.
pub fn make_minority_pair(n: usize, m: f64, diam_e: f64) -> Result<AdjacentPair> {
    if !(m > 0.0 && m < 0.5) {
        return Err(Error::Precondition(format!(
            "the exact DTM lower bound needs 0 < m < 1/2, got m = {m}"
        )));
    }
    make_two_mass_pair(n, diam_e)
}

/// `diam_e / (2 ceil(m n))`.
pub fn minority_pair_distance(n: usize, m: f64, diam_e: f64) -> f64 {
    diam_e / (2.0 * ceil_product(m, n) as f64)
}

/// Moves the last `k_hamming` copies of `a` to the midpoint.
pub fn make_group_pair(n: usize, k_hamming: usize, m: f64, diam_e: f64) -> Result<AdjacentPair> {
    check_two_mass(n, diam_e)?;
    if !(m > 0.0 && m <= 0.5) {
        return Err(Error::Precondition(format!(
            "group construction needs 0 < m <= 1/2, got m = {m}"
        )));
    }
    let (n_a, _) = two_mass_split(n);
    if k_hamming == 0 || k_hamming > n_a {
        return Err(Error::param(format!(
            "number of moved points must lie in 1..={n_a}, got {k_hamming}"
        )));
    }
    AdjacentPair::new(two_mass_cloud(n, diam_e, 0)?, two_mass_cloud(n, diam_e, k_hamming)?)
}

/// Lattice on the segment construction: spacing `diam_e / 32` with four
/// cells of margin, so `a`, `b` and the midpoint are lattice points.
pub fn segment_grid(diam_e: f64) -> Result<GridSpec> {
    let h = diam_e / 32.0;
    GridSpec::new(vec![-4.0 * h, -4.0 * h], vec![h, h], vec![41, 9])
}

/// The merge edge of largest radius in the Rips H0 filtration and the radius
/// of the runner-up merge; `None` when every class is essential.
fn last_merge(cloud: &PointCloud) -> Option<((usize, usize), f64, Option<f64>)> {
    let n = cloud.len();
    let mut edges: Vec<(f64, usize, usize)> = Vec::with_capacity(n * (n.saturating_sub(1)) / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            edges.push((euclidean(cloud.point(i), cloud.point(j)) / 2.0, i, j));
        }
    }
    edges.sort_by(|x, y| x.0.total_cmp(&y.0).then((x.1, x.2).cmp(&(y.1, y.2))));
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    let mut merges: Vec<(f64, usize, usize)> = Vec::new();
    for (r, i, j) in edges {
        let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
        if ri != rj {
            parent[ri.max(rj)] = ri.min(rj);
            if r > 0.0 {
                merges.push((r, i, j));
            }
        }
    }
    let &(r, i, j) = merges.last()?;
    let second = merges.iter().rev().map(|m| m.0).find(|&x| x < r);
    Some(((i, j), r, second))
}

/// Gap between the largest and second-largest distinct finite Rips H0
/// deaths (the largest itself when there is only one) and the largest death.
pub fn death_gap(cloud: &PointCloud) -> Option<(f64, f64)> {
    let (_, d_m, second) = last_merge(cloud)?;
    Some((second.map_or(d_m, |s| d_m - s), d_m))
}

/// Adds the midpoint of the pair realising the last Rips merge. To keep the
/// size fixed, the highest-indexed repeated point is overwritten, which
/// leaves the underlying set unchanged apart from the new point.
pub fn make_last_merge_perturbation(cloud: &PointCloud) -> Result<AdjacentPair> {
    let ((i, j), _, _) =
        last_merge(cloud).ok_or_else(|| Error::NotApplicable("the Rips H0 diagram has no finite death".into()))?;
    let victim = (0..cloud.len())
        .rev()
        .find(|&v| (0..v).any(|u| cloud.point(u) == cloud.point(v)))
        .ok_or_else(|| {
            Error::NotApplicable("no repeated point can make room for the midpoint without changing the set".into())
        })?;
    let mid: Vec<f64> = cloud
        .point(i)
        .iter()
        .zip(cloud.point(j))
        .map(|(x, y)| 0.5 * (x + y))
        .collect();
    let mut d_prime = cloud.clone();
    d_prime.set_point(victim, &mid)?;
    AdjacentPair::new(cloud.clone(), d_prime)
}

/// Outcome of a random-replacement sensitivity probe.
#[derive(Debug, Clone, PartialEq)]
pub struct SensitivityReport {
    /// Largest tuple distance (sum over dimensions) seen.
    pub max_db: f64,
    /// Largest distance per dimension, each maximised separately.
    pub max_per_dim: Vec<f64>,
    /// The pair attaining `max_db`.
    pub argmax: AdjacentPair,
    pub trials: usize,
}

/// Replaces one uniformly chosen point by a uniform draw from `region`,
/// `trials` times, and records the largest diagram distance. Trial `t` uses
/// stream `t` of a generator seeded with `seed`.
pub fn empirical_base_sensitivity(
    base: &PointCloud,
    trials: usize,
    pipeline: &Pipeline,
    region: &BoundingBox,
    ell: usize,
    seed: u64,
) -> Result<SensitivityReport> {
    if trials == 0 {
        return Err(Error::param("at least one trial is needed"));
    }
    if base.is_empty() {
        return Err(Error::NoPoints);
    }
    if region.dim() != base.dim() {
        return Err(Error::param("region and cloud dimensions differ"));
    }
    let reference = pipeline.run(base, ell)?;
    let cfg = BottleneckConfig::default();
    let (lo, hi) = (region.lower(), region.upper());
    let results: Vec<(Vec<f64>, PointCloud)> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(t as u64);
            let i = rng.random_range(0..base.len());
            let p: Vec<f64> = lo
                .iter()
                .zip(&hi)
                .map(|(l, h)| l + (h - l) * rng.random::<f64>())
                .collect();
            let mut d_prime = base.clone();
            d_prime.set_point(i, &p)?;
            let out = pipeline.run(&d_prime, ell)?;
            let dists = tuple_bottleneck_per_dim(&reference.diagrams, &out.diagrams, &cfg)?;
            Ok((dists, d_prime))
        })
        .collect::<Result<_>>()?;
    let mut max_per_dim = vec![0.0f64; ell + 1];
    let mut best: Option<(f64, usize)> = None;
    for (t, (dists, _)) in results.iter().enumerate() {
        for (m, d) in max_per_dim.iter_mut().zip(dists) {
            *m = m.max(*d);
        }
        let total: f64 = dists.iter().sum();
        // ties go to the lowest trial index, independent of scheduling
        if best.is_none_or(|(b, _)| total > b) {
            best = Some((total, t));
        }
    }
    let (max_db, t) = best.expect("at least one trial");
    let d_prime = results.into_iter().nth(t).expect("trial exists").1;
    Ok(SensitivityReport {
        max_db,
        max_per_dim,
        argmax: AdjacentPair::new(base.clone(), d_prime)?,
        trials,
    })
}

/// `diam_e / (m^{1/p} n^{1/p})`, the per-dimension bound for DTM pipelines.
pub fn dtm_sensitivity_bound(diam_e: f64, m: f64, p: f64, n: usize) -> f64 {
    diam_e / (m * n as f64).powf(1.0 / p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dtm::{dtm_field, empirical_dtm, DtmParams};
    use crate::metric::BottleneckConfig;
    use crate::pipeline::{field_diagrams, rips_diagrams};

    fn pairs(t: &crate::persistence::DiagramTuple, q: usize) -> Vec<(f64, f64)> {
        t.diagrams()[q].pairs().iter().map(|p| (p.birth, p.death)).collect()
    }

    #[test]
    fn two_mass_layout() {
        let pair = make_two_mass_pair(7, 2.0).unwrap();
        assert_eq!(pair.hamming, 1);
        let xs: Vec<f64> = pair.d.points().map(|p| p[0]).collect();
        assert_eq!(xs, vec![0.0, 0.0, 0.0, 2.0, 2.0, 2.0, 2.0]);
        let ys: Vec<f64> = pair.d_prime.points().map(|p| p[0]).collect();
        assert_eq!(ys, vec![0.0, 0.0, 1.0, 2.0, 2.0, 2.0, 2.0]);
        assert!(make_two_mass_pair(1, 1.0).is_err());
    }

    #[test]
    fn two_mass_rips_diagrams() {
        for n in [2, 3, 10, 51] {
            let pair = make_two_mass_pair(n, 1.0).unwrap();
            let a = rips_diagrams(&pair.d, 2.0, 0).unwrap();
            let b = rips_diagrams(&pair.d_prime, 2.0, 0).unwrap();
            assert_eq!(pairs(&a, 0), vec![(0.0, 0.5), (0.0, f64::INFINITY)]);
            if n >= 4 {
                assert_eq!(pairs(&b, 0), vec![(0.0, 0.25), (0.0, 0.25), (0.0, f64::INFINITY)]);
            }
            let cfg = BottleneckConfig::default();
            assert!(cfg.distance(&a.diagrams()[0], &b.diagrams()[0]) >= 0.25);
        }
    }

    #[test]
    fn minority_pair_precondition() {
        assert!(matches!(make_minority_pair(100, 0.5, 1.0), Err(Error::Precondition(_))));
        assert!(make_minority_pair(100, 0.2, 1.0).is_ok());
        assert_eq!(minority_pair_distance(100, 0.2, 1.0), 0.025);
    }

    #[test]
    fn minority_pair_midpoint_gap() {
        for (n, m) in [(100, 0.2), (1000, 0.1), (11, 0.3)] {
            let pair = make_minority_pair(n, m, 1.0).unwrap();
            let params = DtmParams::new(m, 1.0).unwrap();
            let c = [0.5, 0.0];
            let gap = empirical_dtm(&pair.d, &c, &params).unwrap() - empirical_dtm(&pair.d_prime, &c, &params).unwrap();
            assert!((gap - minority_pair_distance(n, m, 1.0)).abs() < 1e-12, "n {n} m {m}");
        }
    }

    #[test]
    fn group_pair_distance() {
        // n = 200, m = 0.1: k = 20; K = 1..=10 satisfies K <= k/2 and K <= n/2 - k
        let params = DtmParams::new(0.1, 1.0).unwrap();
        let grid = segment_grid(1.0).unwrap();
        for k_h in [1, 4, 10] {
            let pair = make_group_pair(200, k_h, 0.1, 1.0).unwrap();
            assert_eq!(pair.hamming, k_h);
            let a = field_diagrams(&dtm_field(&pair.d, &grid, &params).unwrap(), 0).unwrap();
            let b = field_diagrams(&dtm_field(&pair.d_prime, &grid, &params).unwrap(), 0).unwrap();
            let d = BottleneckConfig::default().distance(&a.diagrams()[0], &b.diagrams()[0]);
            let expected = k_h as f64 / 20.0 * 0.5;
            assert!((d - expected).abs() < 1e-12, "K {k_h}: {d} vs {expected}");
            // lower bound C K / n with C = diam / (2 m)
            assert!(d >= 1.0 / 0.2 * k_h as f64 / 200.0 - 1e-12);
        }
        assert_eq!(
            make_group_pair(100, 1, 0.2, 1.0).unwrap(),
            make_minority_pair(100, 0.2, 1.0).unwrap()
        );
        assert!(make_group_pair(10, 6, 0.2, 1.0).is_err());
    }

    #[test]
    fn last_merge_on_two_mass_matches_construction() {
        let base = make_two_mass_pair(10, 1.0).unwrap();
        let pair = make_last_merge_perturbation(&base.d).unwrap();
        assert_eq!(pair.hamming, 1);
        // the repeated point with the highest index is a copy of b here
        let mut got: Vec<f64> = pair.d_prime.points().map(|p| p[0]).collect();
        let mut want: Vec<f64> = base.d_prime.points().map(|p| p[0]).collect();
        got.sort_by(f64::total_cmp);
        want.sort_by(f64::total_cmp);
        let mid = got.iter().filter(|x| **x == 0.5).count();
        assert_eq!(mid, 1);
        assert_eq!(want.iter().filter(|x| **x == 0.5).count(), 1);
    }

    #[test]
    fn last_merge_not_applicable() {
        let single = PointCloud::from_rows(&[[0.0, 0.0], [0.0, 0.0]]).unwrap();
        assert!(matches!(
            make_last_merge_perturbation(&single),
            Err(Error::NotApplicable(_))
        ));
        let distinct = PointCloud::from_rows(&[[0.0, 0.0], [1.0, 0.0]]).unwrap();
        assert!(matches!(
            make_last_merge_perturbation(&distinct),
            Err(Error::NotApplicable(_))
        ));
    }

    #[test]
    fn last_merge_bound_on_random_clustered_clouds() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let cfg = BottleneckConfig::default();
        for _ in 0..40 {
            // tight clusters of repeated sites
            let clusters = rng.random_range(2..5);
            let centers: Vec<[f64; 2]> = (0..clusters)
                .map(|_| [rng.random_range(0.0..10.0), rng.random_range(0.0..10.0)])
                .collect();
            let sites: Vec<[f64; 2]> = (0..rng.random_range(4..20))
                .map(|_| {
                    let c = centers[rng.random_range(0..clusters)];
                    [c[0] + rng.random_range(-0.3..0.3), c[1] + rng.random_range(-0.3..0.3)]
                })
                .collect();
            let n = rng.random_range(sites.len() + 1..=60);
            let rows: Vec<[f64; 2]> = (0..n)
                .map(|i| {
                    if i < sites.len() {
                        sites[i]
                    } else {
                        sites[rng.random_range(0..sites.len())]
                    }
                })
                .collect();
            let cloud = PointCloud::from_rows(&rows).unwrap();
            let Some((delta, d_m)) = death_gap(&cloud) else {
                continue;
            };
            let pair = make_last_merge_perturbation(&cloud).unwrap();
            let a = rips_diagrams(&pair.d, 100.0, 0).unwrap();
            let b = rips_diagrams(&pair.d_prime, 100.0, 0).unwrap();
            let d = cfg.distance(&a.diagrams()[0], &b.diagrams()[0]);
            assert!(d >= delta.min(d_m / 2.0) - 1e-12, "d_B {d} delta {delta} d_m {d_m}");
        }
    }

    #[test]
    fn probe_is_deterministic_and_bounded() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        let rows: Vec<[f64; 2]> = (0..60).map(|_| [rng.random(), rng.random()]).collect();
        let cloud = PointCloud::from_rows(&rows).unwrap();
        let region = cloud.bounding_box(0.1).unwrap();
        let params = DtmParams::new(0.2, 1.0).unwrap();
        let pipe = Pipeline::Dtm {
            params,
            grid: Some(GridSpec::from_box(&region, 24).unwrap()),
        };
        let a = empirical_base_sensitivity(&cloud, 16, &pipe, &region, 1, 5).unwrap();
        let b = empirical_base_sensitivity(&cloud, 16, &pipe, &region, 1, 5).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.argmax.hamming, 1);
        let bound = dtm_sensitivity_bound(region.diagonal(), 0.2, 1.0, 60);
        for d in &a.max_per_dim {
            assert!(*d <= bound + 1e-9);
        }
    }
}

//! Distances between diagrams and between point clouds.

mod assignment;
mod bottleneck;
mod matching;

pub use assignment::{min_cost_assignment, wasserstein_p_empirical};
pub use bottleneck::{bottleneck, bottleneck_bruteforce, Endpoint, MatchResult, BRUTEFORCE_LIMIT};
pub use matching::HopcroftKarp;

use crate::error::{Error, Result};
use crate::persistence::{Diagram, DiagramTuple};

/// How essential classes are treated before matching.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BottleneckConfig {
    /// Essential deaths are replaced by this value when finite.
    pub cap: f64,
    /// When false, one dimension-0 essential class is removed from each side
    /// that has one (every nonempty filtration carries exactly one).
    pub keep_essential: bool,
}

impl Default for BottleneckConfig {
    fn default() -> Self {
        Self {
            cap: f64::INFINITY,
            keep_essential: false,
        }
    }
}

impl BottleneckConfig {
    pub fn with_cap(cap: f64) -> Self {
        Self { cap, ..Self::default() }
    }

    /// Applies the essential-class policy to a pair of same-dimension diagrams.
    pub fn prepare(&self, p: &Diagram, q: &Diagram) -> (Diagram, Diagram) {
        if self.keep_essential || p.dim() != 0 {
            return (p.clone(), q.clone());
        }
        (p.without_one_essential(), q.without_one_essential())
    }

    pub fn distance(&self, p: &Diagram, q: &Diagram) -> f64 {
        let (a, b) = self.prepare(p, q);
        bottleneck(&a, &b, self.cap).distance
    }
}

/// Per-dimension bottleneck distances between two tuples.
pub fn tuple_bottleneck_per_dim(a: &DiagramTuple, b: &DiagramTuple, cfg: &BottleneckConfig) -> Result<Vec<f64>> {
    if a.ell() != b.ell() {
        return Err(Error::param(format!(
            "diagram tuples have different top dimensions {} and {}",
            a.ell(),
            b.ell()
        )));
    }
    Ok(a.diagrams()
        .iter()
        .zip(b.diagrams())
        .map(|(p, q)| cfg.distance(p, q))
        .collect())
}

/// Tuple distance: the sum of per-dimension bottleneck distances.
pub fn tuple_bottleneck(a: &DiagramTuple, b: &DiagramTuple, cfg: &BottleneckConfig) -> Result<f64> {
    Ok(tuple_bottleneck_per_dim(a, b, cfg)?.iter().sum())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_policy_drops_one_dim0_essential() {
        let a = Diagram::from_pairs(0, &[(0.0, f64::INFINITY), (0.0, 1.0)]).unwrap();
        let b = Diagram::from_pairs(0, &[(0.0, f64::INFINITY)]).unwrap();
        let cfg = BottleneckConfig::default();
        assert_eq!(cfg.distance(&a, &b), 0.5);
        let keep = BottleneckConfig {
            keep_essential: true,
            ..cfg
        };
        assert_eq!(keep.distance(&a, &b), 0.5);
        let lone = Diagram::from_pairs(0, &[(0.0, 1.0)]).unwrap();
        assert_eq!(keep.distance(&a, &lone), f64::INFINITY);
        assert_eq!(cfg.distance(&a, &lone), 0.0);
    }

    #[test]
    fn tuple_distance_sums_dimensions() {
        let t1 = DiagramTuple::new(vec![
            Diagram::from_pairs(0, &[(0.0, 2.0)]).unwrap(),
            Diagram::from_pairs(1, &[(1.0, 2.0)]).unwrap(),
        ])
        .unwrap();
        let t2 = DiagramTuple::new(vec![Diagram::empty(0), Diagram::empty(1)]).unwrap();
        let cfg = BottleneckConfig::default();
        assert_eq!(tuple_bottleneck_per_dim(&t1, &t2, &cfg).unwrap(), vec![1.0, 0.5]);
        assert_eq!(tuple_bottleneck(&t1, &t2, &cfg).unwrap(), 1.5);
        let t3 = DiagramTuple::new(vec![Diagram::empty(0)]).unwrap();
        assert!(tuple_bottleneck(&t1, &t3, &cfg).is_err());
    }
}

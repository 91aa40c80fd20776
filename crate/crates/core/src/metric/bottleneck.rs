//! Exact bottleneck distance between persistence diagrams.
//!
//! Each diagram is augmented with the diagonal projections of the other's
//! points. The distance is the smallest candidate cost at which the threshold
//! graph admits a perfect matching; candidates are every point-to-point
//! ℓ∞ cost and every diagonal gap `(death - birth) / 2`.

use crate::error::{Error, Result};
use crate::persistence::Diagram;

use super::matching::HopcroftKarp;

/// One side of a matched pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Endpoint {
    /// Index into the diagram's pairs.
    Point(usize),
    Diagonal,
}

/// Bottleneck distance together with a matching that attains it. Pairs are
/// `(left, right)` with left in the first diagram.
#[derive(Debug, Clone, PartialEq)]
pub struct MatchResult {
    pub distance: f64,
    pub matching: Vec<(Endpoint, Endpoint)>,
}

#[derive(Debug, Clone, Copy)]
struct Pt {
    birth: f64,
    death: f64,
    index: usize,
}

#[inline]
fn linf(a: &Pt, b: &Pt) -> f64 {
    (a.birth - b.birth).abs().max((a.death - b.death).abs())
}

#[inline]
fn gap(a: &Pt) -> f64 {
    (a.death - a.birth) / 2.0
}

/// Splits a diagram into finite points (essential ones capped when `cap` is
/// finite) and births of uncapped essential classes.
fn split(diagram: &Diagram, cap: f64) -> (Vec<Pt>, Vec<(f64, usize)>) {
    let mut finite = Vec::with_capacity(diagram.len());
    let mut essential = Vec::new();
    for (index, p) in diagram.pairs().iter().enumerate() {
        if p.is_essential() {
            if cap.is_finite() {
                finite.push(Pt {
                    birth: p.birth,
                    death: cap.max(p.birth),
                    index,
                });
            } else {
                essential.push((p.birth, index));
            }
        } else {
            finite.push(Pt {
                birth: p.birth,
                death: p.death,
                index,
            });
        }
    }
    (finite, essential)
}

/// Matches uncapped essential classes by sorted birth. Returns `None` when
/// the counts differ.
fn match_essential(
    a: &mut [(f64, usize)],
    b: &mut [(f64, usize)],
    matching: &mut Vec<(Endpoint, Endpoint)>,
) -> Option<f64> {
    if a.len() != b.len() {
        return None;
    }
    a.sort_by(|x, y| x.0.total_cmp(&y.0));
    b.sort_by(|x, y| x.0.total_cmp(&y.0));
    let mut worst = 0.0f64;
    for (x, y) in a.iter().zip(b.iter()) {
        worst = worst.max((x.0 - y.0).abs());
        matching.push((Endpoint::Point(x.1), Endpoint::Point(y.1)));
    }
    Some(worst)
}

/// Threshold graph of the augmented problem. Left vertices: `p` points then
/// one diagonal copy per `q` point. Right vertices: `q` points then one
/// diagonal copy per `p` point.
fn threshold_graph(p: &[Pt], q: &[Pt], t: f64) -> Vec<Vec<usize>> {
    let (n, m) = (p.len(), q.len());
    let mut adj = Vec::with_capacity(n + m);
    for (i, a) in p.iter().enumerate() {
        let mut row: Vec<usize> = q
            .iter()
            .enumerate()
            .filter(|(_, b)| linf(a, b) <= t)
            .map(|(j, _)| j)
            .collect();
        if gap(a) <= t {
            row.push(m + i);
        }
        adj.push(row);
    }
    for (j, b) in q.iter().enumerate() {
        let mut row = Vec::with_capacity(n + 1);
        if gap(b) <= t {
            row.push(j);
        }
        row.extend(m..m + n);
        adj.push(row);
    }
    adj
}

fn perfect_matching(p: &[Pt], q: &[Pt], t: f64) -> Option<Vec<(Endpoint, Endpoint)>> {
    let (n, m) = (p.len(), q.len());
    let adj = threshold_graph(p, q, t);
    let mut hk = HopcroftKarp::new(&adj, n + m);
    if hk.run() < n + m {
        return None;
    }
    let mut out = Vec::with_capacity(n + m);
    for (i, a) in p.iter().enumerate() {
        let v = hk.left_mate(i).expect("perfect matching covers every vertex");
        if v < m {
            out.push((Endpoint::Point(a.index), Endpoint::Point(q[v].index)));
        } else {
            out.push((Endpoint::Point(a.index), Endpoint::Diagonal));
        }
    }
    for (j, b) in q.iter().enumerate() {
        if hk.left_mate(n + j) == Some(j) {
            out.push((Endpoint::Diagonal, Endpoint::Point(b.index)));
        }
    }
    Some(out)
}

/// Exact bottleneck distance. Essential classes are capped at `cap` when it
/// is finite; with an infinite cap they are matched among themselves and a
/// count mismatch yields an infinite distance.
pub fn bottleneck(p: &Diagram, q: &Diagram, cap: f64) -> MatchResult {
    let (p_fin, mut p_ess) = split(p, cap);
    let (q_fin, mut q_ess) = split(q, cap);
    let mut matching = Vec::new();
    let Some(essential_cost) = match_essential(&mut p_ess, &mut q_ess, &mut matching) else {
        return MatchResult {
            distance: f64::INFINITY,
            matching,
        };
    };

    // Points on the diagonal can always go to the diagonal at zero cost and
    // that choice is never worse, so they skip the search.
    let (p_diag, p_live): (Vec<Pt>, Vec<Pt>) = p_fin.into_iter().partition(|a| a.death == a.birth);
    let (q_diag, q_live): (Vec<Pt>, Vec<Pt>) = q_fin.into_iter().partition(|a| a.death == a.birth);
    matching.extend(p_diag.iter().map(|a| (Endpoint::Point(a.index), Endpoint::Diagonal)));
    matching.extend(q_diag.iter().map(|b| (Endpoint::Diagonal, Endpoint::Point(b.index))));

    let mut candidates = Vec::with_capacity(p_live.len() * q_live.len() + p_live.len() + q_live.len() + 1);
    candidates.push(0.0);
    for a in &p_live {
        candidates.push(gap(a));
        candidates.extend(q_live.iter().map(|b| linf(a, b)));
    }
    candidates.extend(q_live.iter().map(gap));
    candidates.sort_unstable_by(f64::total_cmp);
    candidates.dedup();

    // The largest candidate is always feasible: everything to the diagonal
    // costs at most the largest gap.
    let (mut lo, mut hi) = (0usize, candidates.len() - 1);
    let mut best = perfect_matching(&p_live, &q_live, candidates[hi]).expect("largest candidate is feasible");
    while lo < hi {
        let mid = (lo + hi) / 2;
        match perfect_matching(&p_live, &q_live, candidates[mid]) {
            Some(m) => {
                hi = mid;
                best = m;
            }
            None => lo = mid + 1,
        }
    }
    matching.extend(best);
    MatchResult {
        distance: candidates[hi].max(essential_cost),
        matching,
    }
}

/// Largest diagram size accepted by [`bottleneck_bruteforce`].
pub const BRUTEFORCE_LIMIT: usize = 7;

/// Exhaustive minimum over all bijections of the diagonal-augmented
/// diagrams. A bijection is determined by which points of `p` go to which
/// points of `q`; everything else goes to the diagonal, and diagonal-to-
/// diagonal pairs cost nothing.
pub fn bottleneck_bruteforce(p: &Diagram, q: &Diagram, cap: f64) -> Result<f64> {
    for d in [p, q] {
        if d.len() > BRUTEFORCE_LIMIT {
            return Err(Error::Size {
                what: "diagram for brute-force bottleneck",
                got: d.len(),
                limit: BRUTEFORCE_LIMIT,
            });
        }
    }
    let (pf, mut pe) = split(p, cap);
    let (qf, mut qe) = split(q, cap);
    let Some(ess) = match_essential(&mut pe, &mut qe, &mut Vec::new()) else {
        return Ok(f64::INFINITY);
    };

    fn search(i: usize, p: &[Pt], q: &[Pt], used: &mut [bool], worst: f64, best: &mut f64) {
        if worst >= *best {
            return;
        }
        if i == p.len() {
            let rest = q
                .iter()
                .zip(used.iter())
                .filter(|(_, u)| !**u)
                .map(|(b, _)| gap(b))
                .fold(worst, f64::max);
            if rest < *best {
                *best = rest;
            }
            return;
        }
        search(i + 1, p, q, used, worst.max(gap(&p[i])), best);
        for j in 0..q.len() {
            if !used[j] {
                used[j] = true;
                search(i + 1, p, q, used, worst.max(linf(&p[i], &q[j])), best);
                used[j] = false;
            }
        }
    }

    let mut best = f64::INFINITY;
    search(0, &pf, &qf, &mut vec![false; qf.len()], 0.0, &mut best);
    Ok(best.max(ess))
}

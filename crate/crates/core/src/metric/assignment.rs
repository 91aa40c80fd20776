//! Minimum-cost perfect assignment (Hungarian method with potentials) and
//! the p-Wasserstein distance between equal-size empirical measures.

use crate::error::{Error, Result};
use crate::geometry::{euclidean, PointCloud};

/// Solves the square assignment problem. Returns `col_of_row` and the cost.
pub fn min_cost_assignment(cost: &[Vec<f64>]) -> Result<(Vec<usize>, f64)> {
    let n = cost.len();
    if cost.iter().any(|row| row.len() != n) {
        return Err(Error::param("assignment cost matrix must be square"));
    }
    if n == 0 {
        return Ok((Vec::new(), 0.0));
    }
    // 1-based potentials formulation; column 0 is a virtual sink.
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut row_of_col = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        row_of_col[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = row_of_col[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[row_of_col[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if row_of_col[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            row_of_col[j0] = row_of_col[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut col_of_row = vec![0usize; n];
    for j in 1..=n {
        col_of_row[row_of_col[j] - 1] = j - 1;
    }
    let total = col_of_row.iter().enumerate().map(|(i, &j)| cost[i][j]).sum();
    Ok((col_of_row, total))
}

/// W_p between the uniform empirical measures on two clouds of equal size.
pub fn wasserstein_p_empirical(a: &PointCloud, b: &PointCloud, p: f64) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::param(format!(
            "empirical Wasserstein needs equal cardinalities, got {} and {}",
            a.len(),
            b.len()
        )));
    }
    if a.dim() != b.dim() {
        return Err(Error::param("dimension mismatch"));
    }
    if !(p >= 1.0) || !p.is_finite() {
        return Err(Error::param("Wasserstein exponent must be a finite real >= 1"));
    }
    if a.is_empty() {
        return Err(Error::NoPoints);
    }
    let cost: Vec<Vec<f64>> = a
        .points()
        .map(|x| b.points().map(|y| euclidean(x, y).powf(p)).collect())
        .collect();
    let (_, total) = min_cost_assignment(&cost)?;
    Ok((total.max(0.0) / a.len() as f64).powf(1.0 / p))
}

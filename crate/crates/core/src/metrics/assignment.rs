use ndarray::ArrayView2;

use crate::error::{Error, Result};

/// Optimal assignment for a square cost matrix (row-major `n x n`) using the
/// shortest augmenting path form of the Hungarian method, `O(n^3)`.
/// Returns `(total cost, column assigned to each row)`.
pub fn min_cost_assignment(cost: &[f64], n: usize) -> (f64, Vec<usize>) {
    assert_eq!(cost.len(), n * n);
    if n == 0 {
        return (0.0, Vec::new());
    }
    // 1-based potentials; column 0 is a virtual source.
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut row_of = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    let mut min_v = vec![0.0; n + 1];
    let mut used = vec![false; n + 1];
    for i in 1..=n {
        row_of[0] = i;
        let mut j0 = 0;
        min_v.fill(f64::INFINITY);
        used.fill(false);
        loop {
            used[j0] = true;
            let i0 = row_of[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            let row = &cost[(i0 - 1) * n..i0 * n];
            for j in 1..=n {
                if !used[j] {
                    let cur = row[j - 1] - u[i0] - v[j];
                    if cur < min_v[j] {
                        min_v[j] = cur;
                        way[j] = j0;
                    }
                    if min_v[j] < delta {
                        delta = min_v[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[row_of[j]] += delta;
                    v[j] -= delta;
                } else {
                    min_v[j] -= delta;
                }
            }
            j0 = j1;
            if row_of[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            row_of[j0] = row_of[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut col_of_row = vec![0usize; n];
    for j in 1..=n {
        col_of_row[row_of[j] - 1] = j - 1;
    }
    let total = col_of_row.iter().enumerate().map(|(i, &j)| cost[i * n + j]).sum();
    (total, col_of_row)
}

/// Exact EMD between two equal-size point clouds with the Euclidean ground
/// metric: optimal assignment cost divided by `N`.
pub fn emd_assignment(a: ArrayView2<'_, f64>, b: ArrayView2<'_, f64>) -> Result<f64> {
    let (n, d) = a.dim();
    if b.nrows() != n {
        return Err(Error::DimensionMismatch {
            context: "emd_assignment sample sizes (subsample to equal size first)",
            expected: n,
            found: b.nrows(),
        });
    }
    if b.ncols() != d {
        return Err(Error::DimensionMismatch {
            context: "emd_assignment dimensions",
            expected: d,
            found: b.ncols(),
        });
    }
    if n == 0 {
        return Err(Error::InvalidArgument("emd_assignment needs at least one point".into()));
    }
    let mut cost = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            cost[i * n + j] = a
                .row(i)
                .iter()
                .zip(b.row(j).iter())
                .map(|(x, y)| (x - y) * (x - y))
                .sum::<f64>()
                .sqrt();
        }
    }
    let (total, _) = min_cost_assignment(&cost, n);
    Ok(total / n as f64)
}

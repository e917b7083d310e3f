#![allow(dead_code)]
//! Independent oracles shared by the integration tests and the acceptance run.

use nalgebra::{DMatrix, DVector};
use sbridge_core::gp::{Kernel, KernelFamily};
use sbridge_core::{DriftField, RegressionDataset};

/// Transportation problem between uniform empirical measures, solved as an
/// integer min-cost flow: every point of `a` supplies `m` units, every point
/// of `b` demands `n`, total flow `n m`. Successive shortest paths with
/// Bellman-Ford on the residual graph.
pub fn transport_oracle(a: &[f64], b: &[f64]) -> f64 {
    let (n, m) = (a.len(), b.len());
    let source = n + m;
    let sink = source + 1;
    let nodes = sink + 1;
    // (to, capacity, cost, reverse edge index)
    let mut graph: Vec<Vec<(usize, i64, f64, usize)>> = vec![Vec::new(); nodes];
    let add = |g: &mut Vec<Vec<(usize, i64, f64, usize)>>, u: usize, v: usize, cap: i64, cost: f64| {
        let (ru, rv) = (g[v].len(), g[u].len());
        g[u].push((v, cap, cost, ru));
        g[v].push((u, 0, -cost, rv));
    };
    for i in 0..n {
        add(&mut graph, source, i, m as i64, 0.0);
        for j in 0..m {
            add(&mut graph, i, n + j, i64::MAX / 4, (a[i] - b[j]).abs());
        }
    }
    for j in 0..m {
        add(&mut graph, n + j, sink, n as i64, 0.0);
    }
    let mut remaining = (n * m) as i64;
    let mut total = 0.0;
    while remaining > 0 {
        let mut dist = vec![f64::INFINITY; nodes];
        let mut prev: Vec<Option<(usize, usize)>> = vec![None; nodes];
        dist[source] = 0.0;
        for _ in 0..nodes {
            let mut changed = false;
            for u in 0..nodes {
                if dist[u].is_infinite() {
                    continue;
                }
                for (k, &(v, cap, cost, _)) in graph[u].iter().enumerate() {
                    if cap > 0 && dist[u] + cost < dist[v] - 1e-12 {
                        dist[v] = dist[u] + cost;
                        prev[v] = Some((u, k));
                        changed = true;
                    }
                }
            }
            if !changed {
                break;
            }
        }
        let mut push = remaining;
        let mut v = sink;
        while let Some((u, k)) = prev[v] {
            push = push.min(graph[u][k].1);
            v = u;
        }
        let mut v = sink;
        while let Some((u, k)) = prev[v] {
            graph[u][k].1 -= push;
            let (to, rev) = (graph[u][k].0, graph[u][k].3);
            graph[to][rev].1 += push;
            v = u;
        }
        total += push as f64 * dist[sink];
        remaining -= push;
    }
    total / (n * m) as f64
}

pub fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for slot in 0..n {
            let mut q = p.clone();
            q.insert(slot, n - 1);
            out.push(q);
        }
    }
    out
}

pub fn kernel_value(k: &Kernel, a: &[f64], b: &[f64]) -> f64 {
    let dist: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
    match k.family {
        KernelFamily::Exponential => k.signal_variance * (-dist / k.lengthscale).exp(),
        KernelFamily::ExponentiatedQuadratic => {
            k.signal_variance * (-dist * dist / (2.0 * k.lengthscale * k.lengthscale)).exp()
        }
    }
}

/// Dense LU solve of the ridge system, independent of the crate's Cholesky.
pub fn dense_prediction(
    data: &RegressionDataset,
    kernel: &Kernel,
    mean: &dyn DriftField,
    shift: f64,
    x: &[f64],
    t: f64,
) -> Vec<f64> {
    let m = data.inputs.nrows();
    let d = data.targets.ncols();
    let rows: Vec<Vec<f64>> = data.inputs.rows().into_iter().map(|r| r.to_vec()).collect();
    let gram = DMatrix::from_fn(m, m, |i, j| {
        kernel_value(kernel, &rows[i], &rows[j]) + if i == j { shift } else { 0.0 }
    });
    let lu = gram.lu();
    let mut z = x.to_vec();
    z.push(t);
    let kstar = DVector::from_fn(m, |i, _| kernel_value(kernel, &rows[i], &z));
    let mut out = mean.eval(x, t);
    for c in 0..d {
        let r = DVector::from_fn(m, |i, _| data.targets[[i, c]] - mean.eval(&rows[i][..d], rows[i][d])[c]);
        let w = lu.solve(&r).expect("nonsingular");
        out[c] += kstar.dot(&w);
    }
    out
}

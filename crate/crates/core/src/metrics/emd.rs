/// 1-Wasserstein distance between two empirical measures on the line,
/// computed as the integral of the absolute difference of the quantile
/// functions.
pub fn emd_1d(a: &[f64], b: &[f64]) -> f64 {
    assert!(!a.is_empty() && !b.is_empty(), "emd_1d needs non-empty samples");
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);

    if a.len() == b.len() {
        return a.iter().zip(&b).map(|(x, y)| (x - y).abs()).sum::<f64>() / a.len() as f64;
    }

    // Walk the merged breakpoints {i/N} ∪ {j/M} in integer units of 1/(N M).
    let (n, m) = (a.len() as u64, b.len() as u64);
    let total = n * m;
    let (mut i, mut j) = (0usize, 0usize);
    let (mut pos, mut next_a, mut next_b) = (0u64, m, n);
    let mut acc = 0.0;
    while pos < total {
        let next = next_a.min(next_b);
        acc += (next - pos) as f64 * (a[i] - b[j]).abs();
        pos = next;
        if next_a == next {
            i += 1;
            next_a += m;
        }
        if next_b == next {
            j += 1;
            next_b += n;
        }
    }
    acc / total as f64
}

/// Euclidean projection onto the probability simplex.
///
/// Sort-based threshold rule: with `u` sorted in decreasing order, find the largest
/// `rho` with `u_rho > (sum_{r <= rho} u_r - 1) / rho` and shift every coordinate by
/// that threshold, clipping at zero. `O(N log N)`; the sort is stable so ties are
/// handled deterministically.
pub fn simplex_project(v: &[f64]) -> Vec<f64> {
    if v.is_empty() {
        return Vec::new();
    }
    let mut u = v.to_vec();
    u.sort_by(|x, y| y.total_cmp(x));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (j, &uj) in u.iter().enumerate() {
        cumsum += uj;
        let t = (cumsum - 1.0) / (j + 1) as f64;
        if uj - t > 0.0 {
            theta = t;
        }
    }
    v.iter().map(|x| (x - theta).max(0.0)).collect()
}

//! Central-difference gradient checking used by the test suites.
//!
//! The checker knows nothing about graphs: callers provide a closure that
//! maps a flat parameter vector to a scalar loss, so it serves as an oracle
//! fully independent of the backward pass it is checking.

/// Central-difference gradient of `f` at `x`: (f(x+εe_i) − f(x−εe_i)) / 2ε.
pub fn central_diff<F>(mut f: F, x: &[f64], eps: f64) -> Vec<f64>
where
    F: FnMut(&[f64]) -> f64,
{
    let mut probe = x.to_vec();
    let mut grad = Vec::with_capacity(x.len());
    for i in 0..x.len() {
        probe[i] = x[i] + eps;
        let hi = f(&probe);
        probe[i] = x[i] - eps;
        let lo = f(&probe);
        probe[i] = x[i];
        grad.push((hi - lo) / (2.0 * eps));
    }
    grad
}

/// max_i |a_i − b_i| / max(1, |a_i|, |b_i|): relative where values are large,
/// absolute near zero.
pub fn max_rel_err(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len(), "gradient length mismatch: {} vs {}", a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs() / 1.0_f64.max(x.abs()).max(y.abs()))
        .fold(0.0, f64::max)
}

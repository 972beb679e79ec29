//! Central finite differences, used as the reference for every analytic
//! gradient in the workspace.

/// Central-difference gradient of `f` at `x` with step `h`.
pub fn central_diff(mut f: impl FnMut(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|i| {
            let orig = probe[i];
            probe[i] = orig + h;
            let up = f(&probe);
            probe[i] = orig - h;
            let down = f(&probe);
            probe[i] = orig;
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// Largest per-component relative error between `analytic` and `numeric`.
///
/// Each component is normalized by `max(|a|, |n|, floor)` with
/// `floor = 1e-6 * max_j |n_j|` so that components many orders of magnitude
/// below the gradient's scale are judged against that scale rather than
/// against their own rounding noise.
pub fn max_rel_error(analytic: &[f64], numeric: &[f64]) -> f64 {
    assert_eq!(analytic.len(), numeric.len());
    let scale = numeric.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let floor = (1e-6 * scale).max(1e-12);
    analytic
        .iter()
        .zip(numeric)
        .map(|(a, n)| (a - n).abs() / a.abs().max(n.abs()).max(floor))
        .fold(0.0, f64::max)
}

/// Fourth-order central-difference gradient check.
///
/// The numeric derivative is `(-f(x+2e) + 8f(x+e) - 8f(x-e) + f(x-2e)) / 12e`.
/// Returns the largest `|analytic - numeric| / max(|analytic|, |numeric|, 1e-8)`
/// over all coordinates of `params`.
pub fn finite_difference_check<F>(mut loss: F, params: &[f64], analytic: &[f64], eps: f64) -> f64
where
    F: FnMut(&[f64]) -> f64,
{
    assert_eq!(params.len(), analytic.len(), "gradient length");
    let mut probe = params.to_vec();
    let mut worst: f64 = 0.0;
    for i in 0..params.len() {
        let orig = probe[i];
        let mut at = |d: f64| {
            probe[i] = orig + d;
            loss(&probe)
        };
        let (far, near) = (at(-2.0 * eps) - at(2.0 * eps), at(eps) - at(-eps));
        let numeric = (far + 8.0 * near) / (12.0 * eps);
        probe[i] = orig;
        let a = analytic[i];
        let denom = a.abs().max(numeric.abs()).max(1e-8);
        worst = worst.max((a - numeric).abs() / denom);
    }
    worst
}

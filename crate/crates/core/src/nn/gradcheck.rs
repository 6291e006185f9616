/// Denominator floor of [`relative_error`]. Below it the comparison is absolute,
/// scaled by the floor, since central differences carry ~1e-11 of rounding noise.
pub const GRADCHECK_FLOOR: f64 = 1e-6;

/// `|a - b| / max(|a|, |b|, GRADCHECK_FLOOR)`.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    let scale = analytic.abs().max(numeric.abs()).max(GRADCHECK_FLOOR);
    (analytic - numeric).abs() / scale
}

/// Compare `analytic` against central differences `(f(p + eps) - f(p - eps)) / 2eps`
/// taken one coordinate at a time; returns the worst relative error.
///
/// Panics if `params` and `analytic` differ in length.
pub fn gradient_check<F>(mut f: F, params: &[f64], analytic: &[f64], eps: f64) -> f64
where
    F: FnMut(&[f64]) -> f64,
{
    assert_eq!(params.len(), analytic.len(), "gradient length");
    let mut p = params.to_vec();
    let mut worst = 0.0f64;
    for i in 0..p.len() {
        let orig = p[i];
        p[i] = orig + eps;
        let plus = f(&p);
        p[i] = orig - eps;
        let minus = f(&p);
        p[i] = orig;
        let numeric = (plus - minus) / (2.0 * eps);
        worst = worst.max(relative_error(analytic[i], numeric));
    }
    worst
}

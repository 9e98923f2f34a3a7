//! Variation operators on bounded real genes.

use rand::Rng;

/// Inverse CDF of the polynomial density `0.5 (η + 1)(1 − |δ|)^η` on
/// `[−1, 1]`, evaluated at `u ∈ [0, 1)`.
pub fn polynomial_delta(u: f64, eta_m: f64) -> f64 {
    let e = 1.0 / (eta_m + 1.0);
    if u < 0.5 {
        (2.0 * u).powf(e) - 1.0
    } else {
        1.0 - (2.0 * (1.0 - u)).powf(e)
    }
}

/// Perturbs `x` by `δ · (hi − lo)` with `δ` drawn from the polynomial
/// density, then clamps to `[lo, hi]`.
pub fn polynomial_mutation<R: Rng + ?Sized>(x: f64, lo: f64, hi: f64, eta_m: f64, rng: &mut R) -> f64 {
    let u: f64 = rng.random();
    (x + polynomial_delta(u, eta_m) * (hi - lo)).clamp(lo, hi)
}

/// Spread factor for simulated binary crossover.
fn sbx_beta(u: f64, eta_c: f64) -> f64 {
    let e = 1.0 / (eta_c + 1.0);
    if u <= 0.5 {
        (2.0 * u).powf(e)
    } else {
        (1.0 / (2.0 * (1.0 - u))).powf(e)
    }
}

/// Simulated binary crossover. With probability `p_c` the pair is
/// recombined; each gene then takes part with probability 1/2, and the two
/// children of a recombined gene are assigned to the offspring in random
/// order. Children are clamped to `bounds`.
pub fn sbx_crossover<R: Rng + ?Sized>(
    a: &[f64],
    b: &[f64],
    bounds: &[(f64, f64)],
    eta_c: f64,
    p_c: f64,
    rng: &mut R,
) -> (Vec<f64>, Vec<f64>) {
    debug_assert_eq!(a.len(), b.len());
    debug_assert_eq!(a.len(), bounds.len());
    let mut c1 = a.to_vec();
    let mut c2 = b.to_vec();
    if rng.random::<f64>() >= p_c {
        return (c1, c2);
    }
    for i in 0..a.len() {
        if rng.random::<f64>() > 0.5 || (a[i] - b[i]).abs() <= 1e-14 {
            continue;
        }
        let (y1, y2) = if a[i] < b[i] { (a[i], b[i]) } else { (b[i], a[i]) };
        let beta = sbx_beta(rng.random(), eta_c);
        let (lo, hi) = bounds[i];
        let lower = (0.5 * ((y1 + y2) - beta * (y2 - y1))).clamp(lo, hi);
        let upper = (0.5 * ((y1 + y2) + beta * (y2 - y1))).clamp(lo, hi);
        if rng.random::<f64>() <= 0.5 {
            c1[i] = upper;
            c2[i] = lower;
        } else {
            c1[i] = lower;
            c2[i] = upper;
        }
    }
    (c1, c2)
}

//! Small numerical toolbox: adaptive quadrature, Gaussian tail helpers,
//! compensated summation and a golden-section line search.
//!
//! Nothing here knows about molecules; the routines are generic and are unit
//! tested against frozen high-precision reference values.

use crate::{Error, Result};

/// Maximum recursion depth for one adaptive Simpson panel. 2^60 subdivisions
/// of a panel is unreachable for smooth integrands; hitting the cap therefore
/// signals a genuinely hostile integrand and surfaces as an error instead of
/// a silently wrong value.
const MAX_DEPTH: u32 = 60;

/// Adaptive Simpson integration of `f` over `[a, b]` to absolute tolerance
/// `abs_tol`.
///
/// The classic Lyness termination test `|S_fine - S_coarse| <= 15 tol` is
/// used together with Richardson extrapolation, which in practice delivers a
/// few orders of magnitude more accuracy than requested. The integrand must
/// be finite on the closed interval.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, abs_tol: f64) -> Result<f64> {
    if !(a.is_finite() && b.is_finite()) || b < a {
        return Err(Error::invalid(format!("bad integration interval [{a}, {b}]")));
    }
    if abs_tol <= 0.0 {
        return Err(Error::invalid("integration tolerance must be positive"));
    }
    if a == b {
        return Ok(0.0);
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    if !(fa.is_finite() && fb.is_finite() && fm.is_finite()) {
        return Err(Error::domain("integrand not finite on interval"));
    }
    let whole = simpson(a, b, fa, fm, fb);
    simpson_rec(&f, a, b, fa, fm, fb, whole, abs_tol, MAX_DEPTH)
}

/// Integrate over consecutive panels `[pts[0], pts[1]], [pts[1], pts[2]], ..`
/// splitting the tolerance budget evenly. Used when the caller knows the
/// integrand's scale structure (for example a sharp peak followed by a long
/// tail) and wants to keep the adaptive rule from overlooking narrow
/// features inside a huge interval.
pub fn integrate_panels<F: Fn(f64) -> f64>(f: F, pts: &[f64], abs_tol: f64) -> Result<f64> {
    if pts.len() < 2 {
        return Err(Error::invalid("need at least two panel boundaries"));
    }
    let per_panel = abs_tol / (pts.len() - 1) as f64;
    let mut total = KahanSum::new();
    for w in pts.windows(2) {
        total.add(integrate(&f, w[0], w[1], per_panel)?);
    }
    Ok(total.value())
}

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn simpson_rec<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> Result<f64> {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    if !(flm.is_finite() && frm.is_finite()) {
        return Err(Error::domain("integrand not finite on interval"));
    }
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let delta = left + right - whole;
    if delta.abs() <= 15.0 * tol {
        return Ok(left + right + delta / 15.0);
    }
    if depth == 0 {
        return Err(Error::Numerical(format!(
            "adaptive quadrature hit the subdivision cap on [{a}, {b}]"
        )));
    }
    let half = 0.5 * tol;
    Ok(simpson_rec(f, a, m, fa, flm, fm, left, half, depth - 1)?
        + simpson_rec(f, m, b, fm, frm, fb, right, half, depth - 1)?)
}

/// Gaussian tail probability Q(x) = P(Z > x) for standard normal Z.
pub fn q_function(x: f64) -> f64 {
    0.5 * libm::erfc(x / std::f64::consts::SQRT_2)
}

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

/// Density of a normal with the given mean and variance.
pub fn normal_pdf(x: f64, mean: f64, var: f64) -> f64 {
    let z = x - mean;
    (-z * z / (2.0 * var)).exp() / (2.0 * std::f64::consts::PI * var).sqrt()
}

/// Kahan-Babuska compensated accumulator. Used wherever many small
/// probabilities are summed (channel coefficient totals, error-rate
/// averages) so cancellation does not eat the tolerance budget.
#[derive(Debug, Clone, Copy, Default)]
pub struct KahanSum {
    sum: f64,
    comp: f64,
}

impl KahanSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Golden-section minimization of a unimodal function on `[lo, hi]` to the
/// requested absolute tolerance on the argument. Returns `(x_min, f(x_min))`.
pub fn golden_section_min<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, x_tol: f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let (mut lo, mut hi) = (lo, hi);
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while hi - lo > x_tol {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2);
        }
    }
    let xm = 0.5 * (lo + hi);
    (xm, f(xm))
}

/// SplitMix64 step, the standard 64-bit mixer. The simulator feeds tuples of
/// identifiers through it to derive independent stream ids from one master
/// seed.
pub fn splitmix64(state: u64) -> u64 {
    let mut z = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn integrates_polynomials_exactly() {
        let v = integrate(|x| x * x, 0.0, 3.0, 1e-12).unwrap();
        assert_abs_diff_eq!(v, 9.0, epsilon = 1e-12);
        let v = integrate(|x| 2.0 * x + 1.0, -1.0, 4.0, 1e-12).unwrap();
        assert_abs_diff_eq!(v, 20.0, epsilon = 1e-12);
    }

    #[test]
    fn integrates_gaussian_density_to_one() {
        let v = integrate(|x| normal_pdf(x, 0.0, 1.0), -12.0, 12.0, 1e-10).unwrap();
        assert_abs_diff_eq!(v, 1.0, epsilon = 1e-10);
    }

    #[test]
    fn panel_integration_finds_narrow_peak_in_wide_interval() {
        // A plain adaptive pass over [0, 1e4] would sample right past this
        // peak at x ~ 0.05; the panel boundaries force resolution. Ten
        // standard deviations separate the peak from zero, so the mass in
        // [0, 1e4] is 1 up to ~1e-23.
        let f = |x: f64| normal_pdf(x, 0.05, 2.5e-5);
        let mut pts = vec![0.0];
        let mut t = 0.01;
        while t < 1e4 {
            pts.push(t);
            t *= 2.0;
        }
        pts.push(1e4);
        let v = integrate_panels(f, &pts, 1e-9).unwrap();
        assert_abs_diff_eq!(v, 1.0, epsilon = 1e-8);
    }

    #[test]
    fn empty_interval_is_zero() {
        assert_eq!(integrate(|x| x, 2.0, 2.0, 1e-9).unwrap(), 0.0);
    }

    #[test]
    fn rejects_bad_intervals_and_tolerances() {
        assert!(integrate(|x| x, 1.0, 0.0, 1e-9).is_err());
        assert!(integrate(|x| x, 0.0, 1.0, 0.0).is_err());
        assert!(integrate(|x| x, 0.0, f64::INFINITY, 1e-9).is_err());
    }

    #[test]
    fn q_function_matches_reference_values() {
        // Frozen from a 30-digit erfc evaluation.
        assert_abs_diff_eq!(q_function(0.0), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(q_function(1.96), 0.024997895148220435, epsilon = 1e-14);
        assert_abs_diff_eq!(q_function(0.5), 0.3085375387259869, epsilon = 1e-14);
        assert_abs_diff_eq!(q_function(3.0), 0.0013498980316300945, epsilon = 1e-15);
        assert_abs_diff_eq!(q_function(-1.0), 0.8413447460685429, epsilon = 1e-14);
        assert_abs_diff_eq!(normal_cdf(1.0) + q_function(1.0), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn q_function_matches_independent_quadrature() {
        // Independent route: numerically integrate the standard normal
        // density over [x, x + 40].
        for &x in &[-2.0, -0.5, 0.0, 0.7, 1.5, 3.2] {
            let byquad = integrate(|t| normal_pdf(t, 0.0, 1.0), x, x + 40.0, 1e-12).unwrap();
            assert_abs_diff_eq!(q_function(x), byquad, epsilon = 1e-10);
        }
    }

    #[test]
    fn kahan_sum_beats_naive_on_small_terms() {
        let mut k = KahanSum::new();
        k.add(1.0);
        for _ in 0..10_000_000 {
            k.add(1e-16);
        }
        assert_abs_diff_eq!(k.value(), 1.0 + 1e-9, epsilon = 1e-12);
    }

    #[test]
    fn golden_section_finds_quadratic_minimum() {
        // Localization by value comparison bottoms out near sqrt(eps), so
        // the assertion is looser than the bracket tolerance.
        let (x, fx) = golden_section_min(|x| (x - 1.3).powi(2) + 2.0, -4.0, 5.0, 1e-9);
        assert_abs_diff_eq!(x, 1.3, epsilon = 1e-6);
        assert_abs_diff_eq!(fx, 2.0, epsilon = 1e-12);
    }

    #[test]
    fn splitmix_is_deterministic_and_spreads() {
        assert_eq!(splitmix64(0), splitmix64(0));
        assert_ne!(splitmix64(1), splitmix64(2));
    }
}

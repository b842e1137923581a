//! Exponential integrals.

use super::AnalysisError;

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
/// Below this magnitude the power series is used; above it the continued
/// fraction.
const SERIES_LIMIT: f64 = 1.0;
const MAX_TERMS: usize = 10_000;

/// `Ei(x)` for `x < 0`, equal to `-E_1(-x)`.
pub fn exp_integral_ei(x: f64) -> Result<f64, AnalysisError> {
    if !(x < 0.0) || !x.is_finite() {
        return Err(AnalysisError::Domain(format!("Ei needs a finite negative argument, got {x}")));
    }
    let y = -x;
    if y <= SERIES_LIMIT {
        // Ei(x) = gamma + ln|x| + sum x^k / (k k!)
        let mut term = 1.0;
        let mut sum = 0.0;
        for k in 1..MAX_TERMS {
            term *= x / k as f64;
            let add = term / k as f64;
            sum += add;
            if add.abs() <= f64::EPSILON * sum.abs() {
                break;
            }
        }
        Ok(EULER_GAMMA + y.ln() + sum)
    } else {
        Ok(-(-y).exp() * scaled_en_fraction(y, 1))
    }
}

/// `e^x E_n(x)` for `x > 1` by the modified Lentz method.
fn scaled_en_fraction(x: f64, n: u32) -> f64 {
    let tiny = 1e-300;
    let nf = n as f64;
    let mut b = x + nf;
    let mut c = 1.0 / tiny;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..MAX_TERMS {
        let a = -(i as f64) * (nf - 1.0 + i as f64);
        b += 2.0;
        d = 1.0 / (a * d + b);
        c = b + a / c;
        let del = c * d;
        h *= del;
        if (del - 1.0).abs() <= f64::EPSILON {
            break;
        }
    }
    h
}

fn check_psi_args(lambda: f64, m: u32) -> Result<(), AnalysisError> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(AnalysisError::Domain(format!("psi needs lambda > 0, got {lambda}")));
    }
    if m < 2 {
        return Err(AnalysisError::Domain(format!("psi needs m >= 2, got {m}")));
    }
    Ok(())
}

/// Closed form
/// `psi(lambda, m) = (-1)^m lambda^(m-1) Ei(-lambda) / (m-1)!
///   + e^-lambda sum_{l=0}^{m-2} (-1)^l lambda^l / ((m-1)(m-2)...(m-1-l))`.
pub fn psi(lambda: f64, m: u32) -> Result<f64, AnalysisError> {
    check_psi_args(lambda, m)?;
    let ei = exp_integral_ei(-lambda)?;
    let mut fact = 1.0;
    for q in 1..m {
        fact *= q as f64;
    }
    let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
    let lead = sign * lambda.powi(m as i32 - 1) * ei / fact;
    let mut sum = 0.0;
    let mut denom = 1.0;
    let mut power = 1.0;
    for l in 0..=(m - 2) {
        denom *= (m - 1 - l) as f64;
        let s = if l % 2 == 0 { 1.0 } else { -1.0 };
        sum += s * power / denom;
        power *= lambda;
    }
    Ok(lead + (-lambda).exp() * sum)
}

/// `e^lambda psi(lambda, m)`, evaluated without forming the large
/// exponential so that it stays accurate for large `lambda`.
pub fn psi_scaled(lambda: f64, m: u32) -> Result<f64, AnalysisError> {
    check_psi_args(lambda, m)?;
    if lambda <= SERIES_LIMIT {
        Ok(lambda.exp() * psi(lambda, m)?)
    } else {
        Ok(scaled_en_fraction(lambda, m))
    }
}

#[cfg(test)]
pub(crate) mod oracle {
    /// Adaptive Simpson quadrature on `[a, b]`.
    pub fn integrate(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
        fn rec(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
            let m = 0.5 * (a + b);
            let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
            let (flm, frm) = (f(lm), f(rm));
            let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
            let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
            let delta = left + right - whole;
            if depth == 0 || delta.abs() <= 15.0 * tol {
                return left + right + delta / 15.0;
            }
            rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
                + rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
        }
        let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
        let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
        rec(f, a, b, fa, fm, fb, whole, tol, 50)
    }

    /// `e^-lambda int_0^inf e^{-lambda z} (1+z)^-m dz`, with `z = t / (1 - t)`.
    pub fn psi(lambda: f64, m: u32) -> f64 {
        let f = |t: f64| {
            if t >= 1.0 {
                return 0.0;
            }
            (-lambda * t / (1.0 - t)).exp() * (1.0 - t).powi(m as i32 - 2)
        };
        (-lambda).exp() * integrate(&f, 0.0, 1.0, 1e-15)
    }

    /// `Ei(-y) = -int_1^inf e^{-y t} / t dt`, with `t = 1 / s`.
    pub fn ei_neg(y: f64) -> f64 {
        let f = |s: f64| if s <= 0.0 { 0.0 } else { (-y / s).exp() / s };
        -integrate(&f, 0.0, 1.0, 1e-16)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ei_reference_values() {
        assert!((exp_integral_ei(-1.0).unwrap() + 0.219_383_934_395_520_3).abs() < 1e-14);
        assert!((exp_integral_ei(-0.1).unwrap() + 1.822_923_958_419_39).abs() < 1e-13);
        let far = exp_integral_ei(-50.0).unwrap();
        assert!(far < 0.0 && far > -1e-23);
        assert!(exp_integral_ei(0.0).is_err());
        assert!(exp_integral_ei(2.0).is_err());
    }

    #[test]
    fn ei_matches_quadrature_across_switchover() {
        for &y in &[0.01, 0.3, 0.9, 0.999, 1.0, 1.001, 1.5, 3.0, 5.0, 7.5, 20.0] {
            let got = exp_integral_ei(-y).unwrap();
            let want = oracle::ei_neg(y);
            assert!((got - want).abs() <= 1e-12 * want.abs().max(1e-3), "y={y}: {got} vs {want}");
        }
    }

    #[test]
    fn psi_reference_values() {
        assert!((psi(1.0, 2).unwrap() - 0.148_495_506_775_922).abs() < 1e-12);
        assert!((psi(1e-9, 2).unwrap() - 1.0).abs() < 1e-6);
        let p = psi(2.0, 5).unwrap();
        assert!((p - oracle::psi(2.0, 5)).abs() < 1e-10);
        assert!(psi(0.0, 2).is_err());
        assert!(psi(1.0, 1).is_err());
    }

    #[test]
    fn scaled_psi_agrees_with_closed_form() {
        for &l in &[0.05, 0.7, 1.0, 1.3, 4.0, 12.0] {
            for m in 2..10 {
                let a = psi_scaled(l, m).unwrap();
                let b = l.exp() * psi(l, m).unwrap();
                assert!((a - b).abs() <= 1e-9 * b, "lambda={l} m={m}: {a} vs {b}");
            }
        }
        // large arguments stay finite where the closed form underflows
        let s = psi_scaled(800.0, 6).unwrap();
        assert!((s * 806.0 - 1.0).abs() < 1e-4);
    }
}

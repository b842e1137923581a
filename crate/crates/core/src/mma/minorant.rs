//! Surrogate functions used to convexify the subproblem.

use num_complex::Complex64;

use crate::conic::{AffineExpr, ComplexAffine};

/// First-order expansion of `||theta||^2` around `theta_t`:
/// `||theta_t||^2 + 2 theta_t^T (theta - theta_t)`.
pub fn minorant_quadratic(theta: [f64; 2], theta_t: [f64; 2]) -> f64 {
    let [a, b] = theta_t;
    a * a + b * b + 2.0 * (a * (theta[0] - a) + b * (theta[1] - b))
}

/// Gradient of [`minorant_quadratic`] in `theta` (constant).
pub fn minorant_quadratic_gradient(theta_t: [f64; 2]) -> [f64; 2] {
    [2.0 * theta_t[0], 2.0 * theta_t[1]]
}

/// The minorant applied to a complex affine form, as an affine expression:
/// `2 Re(conj(theta_t) form) - |theta_t|^2`.
pub fn minorant_expr(form: &ComplexAffine, theta_t: Complex64) -> AffineExpr {
    let mut e = form.re.clone() * (2.0 * theta_t.re);
    e.add_scaled(&form.im, 2.0 * theta_t.im);
    e.add_constant(-theta_t.norm_sqr());
    e
}

/// Convex over-estimate of the product `a b`:
/// `0.25 (a + b)^2 - 0.25 [(a_t - b_t)^2 + 2 (a_t - b_t)(a - a_t - b + b_t)]`.
pub fn bilinear_convex_upper(a: f64, b: f64, a_t: f64, b_t: f64) -> f64 {
    let d = a_t - b_t;
    0.25 * (a + b) * (a + b) - 0.25 * (d * d + 2.0 * d * (a - a_t - b + b_t))
}

/// Gradient of [`bilinear_convex_upper`] in `(a, b)`.
pub fn bilinear_convex_upper_gradient(a: f64, b: f64, a_t: f64, b_t: f64) -> [f64; 2] {
    let d = a_t - b_t;
    [0.5 * (a + b) - 0.5 * d, 0.5 * (a + b) + 0.5 * d]
}

/// Affine part of the convexified bilinear constraint
/// `a b - a <= q`, for `a, b` given as expressions:
/// returns `q + a + 0.5 d (a - b) - 0.25 d^2` with `d = a_t - b_t`, so that the
/// constraint becomes `(0.5 (a + b))^2 <= returned`.
pub(crate) fn bilinear_rhs(
    q: AffineExpr,
    a: &AffineExpr,
    b: &AffineExpr,
    linear_in: &AffineExpr,
    a_t: f64,
    b_t: f64,
) -> AffineExpr {
    let d = a_t - b_t;
    let mut e = q;
    e.add_scaled(linear_in, 1.0);
    e.add_scaled(a, 0.5 * d);
    e.add_scaled(b, -0.5 * d);
    e.add_constant(-0.25 * d * d);
    e
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_examples() {
        assert_eq!(minorant_quadratic([1.0, 0.0], [1.0, 0.0]), 1.0);
        assert_eq!(minorant_quadratic([2.0, 0.0], [1.0, 1.0]), 2.0);
    }

    #[test]
    fn bilinear_examples() {
        assert_eq!(bilinear_convex_upper(1.0, 1.0, 1.0, 1.0), 1.0);
        assert_eq!(bilinear_convex_upper(2.0, 1.0, 1.0, 1.0), 2.25);
    }

    #[test]
    fn expr_matches_scalar_form() {
        use crate::conic::ProgramBuilder;
        let mut b = ProgramBuilder::new();
        let x = b.add_var();
        let y = b.add_var();
        let form = ComplexAffine::new(AffineExpr::var(x), AffineExpr::var(y));
        let t = Complex64::new(0.3, -1.2);
        let e = minorant_expr(&form, t);
        let pt = [0.7, 0.4];
        let direct = minorant_quadratic(pt, [t.re, t.im]);
        assert!((e.eval(&pt) - direct).abs() < 1e-14);
    }
}

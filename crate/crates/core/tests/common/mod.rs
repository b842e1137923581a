//! Shared oracles for the integration tests.
#![allow(dead_code)]

use clarabel::algebra::CscMatrix;
use clarabel::solver::{DefaultSettingsBuilder, DefaultSolver, IPSolver, SolverStatus, SupportedConeT};
use noma_mma::conic::{ConeKind, ConicProgram, Sense};

/// Adaptive Simpson quadrature on `[a, b]`.
pub fn integrate(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    #[allow(clippy::too_many_arguments)]
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
        rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) + rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    rec(f, a, b, fa, fm, fb, whole, tol, 50)
}

/// `e^-lambda int_0^inf e^{-lambda z} (1+z)^-m dz` via `z = t / (1 - t)`.
pub fn psi_quadrature(lambda: f64, m: u32) -> f64 {
    let f = |t: f64| {
        if t >= 1.0 {
            return 0.0;
        }
        (-lambda * t / (1.0 - t)).exp() * (1.0 - t).powi(m as i32 - 2)
    };
    (-lambda).exp() * integrate(&f, 0.0, 1.0, 1e-15)
}

/// `Ei(-y) = -int_1^inf e^{-y t} / t dt` via `t = 1 / s`.
pub fn ei_quadrature(y: f64) -> f64 {
    let f = |s: f64| if s <= 0.0 { 0.0 } else { (-y / s).exp() / s };
    -integrate(&f, 0.0, 1.0, 1e-16)
}

/// Central finite difference of `f` along coordinate `i`.
pub fn central_diff(f: &dyn Fn(&[f64]) -> f64, x: &[f64], i: usize, h: f64) -> f64 {
    let mut p = x.to_vec();
    let mut m = x.to_vec();
    p[i] += h;
    m[i] -= h;
    (f(&p) - f(&m)) / (2.0 * h)
}

/// Solves `program` with clarabel; returns the optimal objective in the
/// program's own sense, or `None` if clarabel does not report a solution.
pub fn clarabel_objective(program: &ConicProgram) -> Option<f64> {
    let n = program.num_vars();
    let sign = match program.sense() {
        Sense::Minimize => 1.0,
        Sense::Maximize => -1.0,
    };
    let mut q = vec![0.0; n];
    for (j, c) in program.objective().coefficients() {
        q[j] += sign * c;
    }
    let mut rows: Vec<Vec<(usize, f64)>> = Vec::new();
    let mut b = Vec::new();
    let mut cones = Vec::new();
    for block in program.blocks() {
        for r in &block.rows {
            rows.push(r.coefficients().into_iter().map(|(j, c)| (j, -c)).collect());
            b.push(r.constant_term());
        }
        cones.push(match block.kind {
            ConeKind::Zero => SupportedConeT::ZeroConeT(block.dim()),
            ConeKind::NonNegative => SupportedConeT::NonnegativeConeT(block.dim()),
            ConeKind::SecondOrder => SupportedConeT::SecondOrderConeT(block.dim()),
        });
    }
    let m = rows.len();
    let mut dense = vec![vec![0.0; n]; m];
    for (i, r) in rows.iter().enumerate() {
        for &(j, c) in r {
            dense[i][j] += c;
        }
    }
    let a = CscMatrix::from(&dense);
    let p = CscMatrix::zeros((n, n));
    let settings = DefaultSettingsBuilder::default()
        .verbose(false)
        .tol_gap_abs(1e-10)
        .tol_gap_rel(1e-10)
        .tol_feas(1e-10)
        .build()
        .unwrap();
    let mut solver = DefaultSolver::new(&p, &q, &a, &b, &cones, settings).ok()?;
    solver.solve();
    match solver.solution.status {
        SolverStatus::Solved | SolverStatus::AlmostSolved => {
            Some(sign * solver.solution.obj_val + program.objective().constant_term())
        }
        _ => None,
    }
}

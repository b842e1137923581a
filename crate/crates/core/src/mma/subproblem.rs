//! Assembly of the convex subproblem solved at each iteration.
//!
//! Channels and precoders are normalized so that the noise power is one and
//! the power budget is one: with `h' = h sqrt(P) / sigma` and
//! `w' = w / sqrt(P)`, `|h^H w|^2 / sigma^2 = |h'^H w'|^2`. The interference
//! bounds are carried in units of `sigma^2`.

use std::collections::BTreeMap;

use num_complex::Complex64;

use super::minorant::{bilinear_rhs, minorant_expr};
use super::{MmaError, MmaState, Variant};
use crate::conic::{AffineExpr, ComplexAffine, ConicProgram, ProgramBuilder, VarId};
use crate::model::{ChannelSet, PrecoderSet, SystemParams};

/// Group labels attached to the constraint blocks.
pub mod groups {
    pub const INTERFERENCE: &str = "interference";
    pub const DIRECT_SINR: &str = "direct_sinr";
    pub const CROSS_INTERFERENCE: &str = "cross_interference";
    pub const CROSS_SINR: &str = "cross_sinr";
    pub const LAST_USER: &str = "last_user";
    pub const ORDERING: &str = "ordering";
    pub const POWER: &str = "power";
    pub const RATE_NONNEG: &str = "rate_nonneg";
    pub const GEOMEAN: &str = "geomean";
}

/// Variable handles of one subproblem.
#[derive(Debug, Clone)]
pub struct VarLayout {
    w_re: Vec<Vec<VarId>>,
    w_im: Vec<Vec<VarId>>,
    pub(crate) r: Vec<VarId>,
    pub(crate) wbar: Vec<VarId>,
    pub(crate) v: BTreeMap<(usize, usize), VarId>,
    pub(crate) t: VarId,
    power: f64,
    noise: f64,
}

/// Values read back from a subproblem solution, in model units.
#[derive(Debug, Clone, PartialEq)]
pub struct SubproblemPoint {
    pub precoders: PrecoderSet,
    pub r: Vec<f64>,
    pub wbar: Vec<f64>,
    pub v: BTreeMap<(usize, usize), f64>,
    pub t: f64,
}

impl VarLayout {
    pub fn extract(&self, x: &[f64]) -> SubproblemPoint {
        let scale = self.power.sqrt();
        let w = self
            .w_re
            .iter()
            .zip(&self.w_im)
            .map(|(re, im)| {
                re.iter()
                    .zip(im)
                    .map(|(a, b)| Complex64::new(x[a.index()], x[b.index()]) * scale)
                    .collect()
            })
            .collect();
        SubproblemPoint {
            precoders: PrecoderSet::new(w).expect("uniform shapes"),
            r: self.r.iter().map(|v| x[v.index()]).collect(),
            wbar: self.wbar.iter().map(|v| x[v.index()] * self.noise).collect(),
            v: self
                .v
                .iter()
                .map(|(&key, var)| (key, x[var.index()] * self.noise))
                .collect(),
            t: x[self.t.index()],
        }
    }

    /// Inverse of [`extract`](Self::extract) for the variables it covers.
    /// Geomean auxiliaries are left at zero.
    pub fn embed(&self, state: &MmaState, num_vars: usize) -> Vec<f64> {
        let mut x = vec![0.0; num_vars];
        let scale = 1.0 / self.power.sqrt();
        for (m, w) in state.precoders.precoders().iter().enumerate() {
            for (a, c) in w.iter().enumerate() {
                x[self.w_re[m][a].index()] = c.re * scale;
                x[self.w_im[m][a].index()] = c.im * scale;
            }
        }
        for (v, r) in self.r.iter().zip(&state.r) {
            x[v.index()] = *r;
        }
        for (v, b) in self.wbar.iter().zip(&state.wbar) {
            x[v.index()] = b / self.noise;
        }
        for (key, var) in &self.v {
            x[var.index()] = state.v[key] / self.noise;
        }
        x[self.t.index()] = state.geomean();
        x
    }
}

#[derive(Debug, Clone)]
pub struct Subproblem {
    pub program: ConicProgram,
    pub layout: VarLayout,
}

/// Balancing scale for a bound whose value at the linearization point is
/// `at_point`.
fn balance(at_point: f64) -> f64 {
    at_point.max(1e-8).sqrt()
}

/// `h'^H w'_m` as a complex affine form in the precoder variables.
fn form(h: &[Complex64], re: &[VarId], im: &[VarId]) -> ComplexAffine {
    let mut fr = AffineExpr::zero();
    let mut fi = AffineExpr::zero();
    for ((c, &xr), &xi) in h.iter().zip(re).zip(im) {
        fr.add_term(xr, c.re).add_term(xi, c.im);
        fi.add_term(xi, c.re).add_term(xr, -c.im);
    }
    ComplexAffine::new(fr, fi)
}

/// Adds `a b - linear <= q` convexified at `(a_t, b_t)`. The surrogate is
/// applied to the pair `(s a, b / s)` with `s a_t = b_t / s`, which leaves
/// the product unchanged and keeps the linearization error relative.
fn add_bilinear_bound(
    b: &mut ProgramBuilder,
    q: AffineExpr,
    a: &AffineExpr,
    bv: &AffineExpr,
    linear: &AffineExpr,
    a_t: f64,
    b_t: f64,
) -> Result<(), MmaError> {
    let s = pair_scale(a_t, b_t);
    let (sa, sb) = (a.clone() * s, bv.clone() * (1.0 / s));
    let (sa_t, sb_t) = (a_t * s, b_t / s);
    let rhs = bilinear_rhs(q, &sa, &sb, linear, sa_t, sb_t);
    let sum = (sa + sb) * 0.5;
    let alpha = balance(0.25 * (sa_t + sb_t).powi(2));
    b.add_quadratic_upper_bound_balanced(&[ComplexAffine::real(sum)], 0.0, rhs, alpha)?;
    Ok(())
}

/// Scale `s` equalizing `s a_t` and `b_t / s`.
pub(crate) fn pair_scale(a_t: f64, b_t: f64) -> f64 {
    let floor = 1e-8;
    let s = (b_t.max(floor) / a_t.max(floor)).sqrt();
    if s.is_finite() && s > 0.0 {
        s
    } else {
        1.0
    }
}

/// Builds the convex subproblem linearized at `state`.
pub fn build_subproblem(
    state: &MmaState,
    channels: &ChannelSet,
    params: &SystemParams,
    variant: Variant,
) -> Result<Subproblem, MmaError> {
    params.validate()?;
    state.check(channels)?;
    if channels.users() != params.users || channels.antennas() != params.antennas {
        return Err(MmaError::Inconsistent("channels do not match parameters".into()));
    }
    let n = params.users;
    let nt = params.antennas;
    let sigma = params.sigma;
    let hscale = params.power.sqrt() / sigma;
    let h: Vec<Vec<Complex64>> = channels
        .channels()
        .iter()
        .map(|v| v.iter().map(|c| c * hscale).collect())
        .collect();
    // linearization points in normalized units
    let th = |c: Complex64| c / sigma;

    let mut b = ProgramBuilder::new();
    let w_re: Vec<Vec<VarId>> = (0..n).map(|_| b.add_vars(nt)).collect();
    let w_im: Vec<Vec<VarId>> = (0..n).map(|_| b.add_vars(nt)).collect();
    let r = b.add_vars(n);
    let wbar = b.add_vars(n - 1);
    let mut v = BTreeMap::new();
    if variant == Variant::Cnoma {
        for k in 0..n - 1 {
            for j in k + 1..n {
                v.insert((k, j), b.add_var());
            }
        }
    }
    let t = b.add_var();
    let f = |u: usize, m: usize| form(&h[u], &w_re[m], &w_im[m]);

    for k in 0..n - 1 {
        let wb = AffineExpr::var(wbar[k]);
        let rk = AffineExpr::var(r[k]);
        b.set_group(groups::INTERFERENCE);
        let forms: Vec<ComplexAffine> = (k + 1..n).map(|m| f(k, m)).collect();
        let wb_t = state.wbar[k] / (sigma * sigma);
        b.add_quadratic_upper_bound_balanced(&forms, 1.0, wb.clone(), balance(wb_t))?;

        b.set_group(groups::DIRECT_SINR);
        let g = minorant_expr(&f(k, k), th(state.theta_kk[k]));
        add_bilinear_bound(&mut b, g, &wb, &rk, &wb, wb_t, state.r[k])?;
    }

    if variant == Variant::Cnoma {
        for k in 0..n - 1 {
            for j in k + 1..n {
                let vkj = AffineExpr::var(v[&(k, j)]);
                let rk = AffineExpr::var(r[k]);
                b.set_group(groups::CROSS_INTERFERENCE);
                let forms: Vec<ComplexAffine> = (k + 1..n).map(|m| f(j, m)).collect();
                let v_t = state.v[&(k, j)] / (sigma * sigma);
                b.add_quadratic_upper_bound_balanced(&forms, 1.0, vkj.clone(), balance(v_t))?;

                b.set_group(groups::CROSS_SINR);
                let g = minorant_expr(&f(j, k), th(state.theta_jk[&(k, j)]));
                add_bilinear_bound(&mut b, g, &rk, &vkj, &vkj, state.r[k], v_t)?;
            }
        }
    }

    b.set_group(groups::LAST_USER);
    let g = minorant_expr(&f(n - 1, n - 1), th(state.theta_nn));
    b.add_nonneg(g - AffineExpr::var(r[n - 1]) + AffineExpr::constant(1.0))?;

    b.set_group(groups::ORDERING);
    for k in 0..n {
        for pos in 1..n {
            let upper = f(k, pos);
            for m in 0..pos {
                let phi_t = th(state.phi[&(k, m)]);
                let g = minorant_expr(&f(k, m), phi_t);
                b.add_quadratic_upper_bound_balanced(
                    std::slice::from_ref(&upper),
                    0.0,
                    g,
                    balance(phi_t.norm_sqr()),
                )?;
            }
        }
    }

    b.set_group(groups::POWER);
    let tail: Vec<AffineExpr> = w_re
        .iter()
        .chain(&w_im)
        .flatten()
        .map(|&x| AffineExpr::var(x))
        .collect();
    b.add_soc(AffineExpr::constant(1.0), tail)?;

    b.set_group(groups::RATE_NONNEG);
    for &rk in &r {
        b.add_nonneg(AffineExpr::var(rk))?;
    }

    b.set_group(groups::GEOMEAN);
    b.add_geometric_mean_epigraph(&r, t)?;
    b.maximize(AffineExpr::var(t));

    Ok(Subproblem {
        program: b.build(),
        layout: VarLayout {
            w_re,
            w_im,
            r,
            wbar,
            v,
            t,
            power: params.power,
            noise: sigma * sigma,
        },
    })
}

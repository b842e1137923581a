//! Per-cone primitives used by the interior-point iteration: Nesterov-Todd
//! scaling, Jordan products and step-to-boundary computations.

use super::program::ConeKind;

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct ConeSlot {
    pub kind: ConeKind,
    pub offset: usize,
    pub dim: usize,
}

impl ConeSlot {
    pub fn range(&self) -> std::ops::Range<usize> {
        self.offset..self.offset + self.dim
    }

    pub fn degree(&self) -> usize {
        match self.kind {
            ConeKind::Zero => 0,
            ConeKind::NonNegative => self.dim,
            ConeKind::SecondOrder => 1,
        }
    }
}

/// Positive when `u` is strictly interior.
pub(crate) fn margin(kind: ConeKind, u: &[f64]) -> f64 {
    match kind {
        ConeKind::Zero => f64::INFINITY,
        ConeKind::NonNegative => u.iter().copied().fold(f64::INFINITY, f64::min),
        ConeKind::SecondOrder => u[0] - norm(&u[1..]),
    }
}

pub(crate) fn add_identity(kind: ConeKind, u: &mut [f64], alpha: f64) {
    match kind {
        ConeKind::Zero => {}
        ConeKind::NonNegative => u.iter_mut().for_each(|v| *v += alpha),
        ConeKind::SecondOrder => u[0] += alpha,
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Nesterov-Todd scaling of one cone: `W z = W^{-1} s = lambda`.
#[derive(Debug, Clone)]
pub(crate) enum Scaling {
    Zero,
    NonNeg { w: Vec<f64> },
    /// `W = eta * [[wb0, wb1^T], [wb1, I + wb1 wb1^T / (1 + wb0)]]`.
    Soc { eta: f64, wbar: Vec<f64> },
}

impl Scaling {
    pub fn identity(kind: ConeKind, dim: usize) -> Self {
        match kind {
            ConeKind::Zero => Scaling::Zero,
            ConeKind::NonNegative => Scaling::NonNeg { w: vec![1.0; dim] },
            ConeKind::SecondOrder => {
                let mut wbar = vec![0.0; dim];
                wbar[0] = 1.0;
                Scaling::Soc { eta: 1.0, wbar }
            }
        }
    }

    /// Returns `None` if `s` or `z` has left the cone interior.
    pub fn nesterov_todd(kind: ConeKind, s: &[f64], z: &[f64]) -> Option<Self> {
        match kind {
            ConeKind::Zero => Some(Scaling::Zero),
            ConeKind::NonNegative => {
                let mut w = Vec::with_capacity(s.len());
                for (&si, &zi) in s.iter().zip(z) {
                    if !(si > 0.0 && zi > 0.0) {
                        return None;
                    }
                    w.push((si / zi).sqrt());
                }
                Some(Scaling::NonNeg { w })
            }
            ConeKind::SecondOrder => {
                let s_res = soc_residual(s);
                let z_res = soc_residual(z);
                if !(s_res > 0.0 && z_res > 0.0 && s[0] > 0.0 && z[0] > 0.0) {
                    return None;
                }
                let s_scale = s_res.sqrt();
                let z_scale = z_res.sqrt();
                let p = s.len();
                let mut sdotz = 0.0;
                for i in 0..p {
                    sdotz += s[i] * z[i];
                }
                sdotz /= s_scale * z_scale;
                let gamma = ((1.0 + sdotz) * 0.5).sqrt();
                if !(gamma > 0.0) || !gamma.is_finite() {
                    return None;
                }
                let mut wbar = vec![0.0; p];
                wbar[0] = (s[0] / s_scale + z[0] / z_scale) / (2.0 * gamma);
                for i in 1..p {
                    wbar[i] = (s[i] / s_scale - z[i] / z_scale) / (2.0 * gamma);
                }
                // renormalize so that wb0^2 - ||wb1||^2 = 1 holds to rounding
                let tail = norm(&wbar[1..]);
                wbar[0] = (1.0 + tail * tail).sqrt();
                let eta = (s_scale / z_scale).sqrt();
                Some(Scaling::Soc { eta, wbar })
            }
        }
    }

    /// `out = W v`.
    pub fn apply(&self, v: &[f64], out: &mut [f64]) {
        match self {
            Scaling::Zero => out.iter_mut().for_each(|o| *o = 0.0),
            Scaling::NonNeg { w } => {
                for i in 0..v.len() {
                    out[i] = w[i] * v[i];
                }
            }
            Scaling::Soc { eta, wbar } => soc_apply(*eta, wbar, v, out, false),
        }
    }

    /// `out = W^{-1} v`. For the zero cone this is the zero map, which is
    /// what the reduced KKT system needs (`H^{-1}` restricted to cones with
    /// a barrier).
    pub fn apply_inv(&self, v: &[f64], out: &mut [f64]) {
        match self {
            Scaling::Zero => out.iter_mut().for_each(|o| *o = 0.0),
            Scaling::NonNeg { w } => {
                for i in 0..v.len() {
                    out[i] = v[i] / w[i];
                }
            }
            Scaling::Soc { eta, wbar } => soc_apply(1.0 / *eta, wbar, v, out, true),
        }
    }
}

fn soc_residual(u: &[f64]) -> f64 {
    let t = norm(&u[1..]);
    (u[0] - t) * (u[0] + t)
}

fn soc_apply(scale: f64, wbar: &[f64], v: &[f64], out: &mut [f64], inverse: bool) {
    let w0 = wbar[0];
    let w1 = &wbar[1..];
    let v0 = v[0];
    let v1 = &v[1..];
    let w1v1 = dot(w1, v1);
    let sign = if inverse { -1.0 } else { 1.0 };
    out[0] = scale * (w0 * v0 + sign * w1v1);
    let coef = sign * v0 + w1v1 / (1.0 + w0);
    for i in 1..v.len() {
        out[i] = scale * (v[i] + coef * w1[i - 1]);
    }
}

/// Jordan product `out = u o v`.
pub(crate) fn circ(kind: ConeKind, u: &[f64], v: &[f64], out: &mut [f64]) {
    match kind {
        ConeKind::Zero => out.iter_mut().for_each(|o| *o = 0.0),
        ConeKind::NonNegative => {
            for i in 0..u.len() {
                out[i] = u[i] * v[i];
            }
        }
        ConeKind::SecondOrder => {
            out[0] = dot(u, v);
            for i in 1..u.len() {
                out[i] = u[0] * v[i] + v[0] * u[i];
            }
        }
    }
}

/// Solves `lambda o y = d` for `y`.
pub(crate) fn circ_div(kind: ConeKind, lambda: &[f64], d: &[f64], out: &mut [f64]) {
    match kind {
        ConeKind::Zero => out.iter_mut().for_each(|o| *o = 0.0),
        ConeKind::NonNegative => {
            for i in 0..d.len() {
                out[i] = d[i] / lambda[i];
            }
        }
        ConeKind::SecondOrder => {
            let l0 = lambda[0];
            let l1 = &lambda[1..];
            let det = soc_residual(lambda);
            let y0 = (l0 * d[0] - dot(l1, &d[1..])) / det;
            out[0] = y0;
            for i in 1..d.len() {
                out[i] = (d[i] - y0 * lambda[i]) / l0;
            }
        }
    }
}

/// Largest `alpha` (capped at `cap`) with `u + alpha du` in the cone.
pub(crate) fn max_step(kind: ConeKind, u: &[f64], du: &[f64], cap: f64) -> f64 {
    match kind {
        ConeKind::Zero => cap,
        ConeKind::NonNegative => {
            let mut a = cap;
            for (&x, &dx) in u.iter().zip(du) {
                if dx < 0.0 {
                    a = a.min(-x / dx);
                }
            }
            a
        }
        ConeKind::SecondOrder => soc_max_step(u, du, cap),
    }
}

fn soc_max_step(u: &[f64], du: &[f64], cap: f64) -> f64 {
    // f(a) = (u0 + a du0)^2 - ||u1 + a du1||^2 = qa a^2 + qb a + qc
    let qa = du[0] * du[0] - dot(&du[1..], &du[1..]);
    let qb = 2.0 * (u[0] * du[0] - dot(&u[1..], &du[1..]));
    let qc = soc_residual(u).max(0.0);
    let mut alpha = cap;
    if du[0] < 0.0 {
        alpha = alpha.min(-u[0] / du[0]);
    }
    let root = if qa.abs() <= f64::EPSILON * (qb.abs() + qc.abs()).max(1e-300) {
        if qb < 0.0 {
            Some(-qc / qb)
        } else {
            None
        }
    } else {
        let disc = qb * qb - 4.0 * qa * qc;
        if disc < 0.0 {
            None
        } else {
            let sq = disc.sqrt();
            let q = -0.5 * (qb + qb.signum() * sq);
            let (r1, r2) = if q == 0.0 {
                (0.0, 0.0)
            } else {
                (q / qa, qc / q)
            };
            [r1, r2]
                .into_iter()
                .filter(|&r| r > 0.0)
                .fold(None, |m: Option<f64>, r| Some(m.map_or(r, |x| x.min(r))))
        }
    };
    if let Some(r) = root {
        alpha = alpha.min(r);
    }
    alpha.max(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nt_scaling_maps_s_and_z_to_same_point() {
        let s = [3.0, 1.0, -0.5, 0.2];
        let z = [2.0, -0.3, 0.4, 1.1];
        let w = Scaling::nesterov_todd(ConeKind::SecondOrder, &s, &z).unwrap();
        let mut wz = [0.0; 4];
        let mut winv_s = [0.0; 4];
        w.apply(&z, &mut wz);
        w.apply_inv(&s, &mut winv_s);
        for i in 0..4 {
            assert!((wz[i] - winv_s[i]).abs() < 1e-12, "{wz:?} vs {winv_s:?}");
        }
        let mut back = [0.0; 4];
        w.apply_inv(&wz, &mut back);
        for i in 0..4 {
            assert!((back[i] - z[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn circ_div_inverts_circ() {
        let l = [2.0, 0.5, -0.3];
        let y = [0.7, -1.2, 0.4];
        let mut d = [0.0; 3];
        circ(ConeKind::SecondOrder, &l, &y, &mut d);
        let mut back = [0.0; 3];
        circ_div(ConeKind::SecondOrder, &l, &d, &mut back);
        for i in 0..3 {
            assert!((back[i] - y[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn soc_step_hits_boundary() {
        let u = [1.0, 0.0];
        let du = [0.0, 1.0];
        let a = max_step(ConeKind::SecondOrder, &u, &du, 10.0);
        assert!((a - 1.0).abs() < 1e-12);
        let inside = max_step(ConeKind::SecondOrder, &u, &[1.0, 0.5], 10.0);
        assert_eq!(inside, 10.0);
        let through_apex = max_step(ConeKind::SecondOrder, &[1.0, 0.0, 0.0], &[-1.0, 0.0, 0.0], 10.0);
        assert!((through_apex - 1.0).abs() < 1e-12);
    }
}

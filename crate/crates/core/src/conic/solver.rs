//! Primal-dual interior-point solver on the homogeneous self-dual embedding.
//!
//! The program is lowered to the standard form
//!
//! ```text
//!   minimize  c^T x   subject to  A x + s = b,  s in K
//! ```
//!
//! and the embedding
//!
//! ```text
//!   A^T z + c tau = 0,  A x + s - b tau = 0,  c^T x + b^T z + kappa = 0
//! ```
//!
//! is followed with Nesterov-Todd scaled Newton steps (Mehrotra
//! predictor-corrector). Each Newton system is reduced to the normal
//! equations `A^T H^{-1} A`, augmented with the equality rows, and factored
//! densely.

use super::cones::{self, ConeSlot, Scaling};
use super::linalg::{Ldl, SymMatrix};
use super::program::{ConeKind, ConicProgram, Sense};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverSettings {
    /// Relative primal and dual residual tolerance.
    pub eps_feas: f64,
    /// Relative duality gap tolerance.
    pub eps_gap: f64,
    /// Tolerance on infeasibility certificates.
    pub eps_infeas: f64,
    pub max_iterations: usize,
    /// Ruiz equilibration of the constraint matrix before solving.
    pub equilibrate: bool,
    pub step_fraction: f64,
    /// Maximum iterative refinement passes per linear solve.
    pub refinement_steps: usize,
    /// Static regularization of the KKT system.
    pub regularization: f64,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            eps_feas: 1e-8,
            eps_gap: 1e-8,
            eps_infeas: 1e-8,
            max_iterations: 200,
            equilibrate: true,
            step_fraction: 0.99,
            refinement_steps: 10,
            regularization: 1e-8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    PrimalInfeasible,
    DualInfeasible,
    MaxIterations,
    NumericalFailure,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Residuals {
    /// `||A x + s - b||_inf / max(1, ||b|| + ||x|| + ||s||)`.
    pub primal: f64,
    /// `||A^T z + c||_inf / max(1, ||c|| + ||z||)`.
    pub dual: f64,
    /// `|p - d| / max(1, min(|p|, |d|))`.
    pub gap: f64,
    pub gap_abs: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub status: SolveStatus,
    /// Primal values, indexed like the program's variables.
    pub x: Vec<f64>,
    /// Cone slacks, one entry per program row in block order.
    pub s: Vec<f64>,
    /// Dual multipliers, same layout as `s`.
    pub z: Vec<f64>,
    /// Objective at `x`, in the program's own sense and including its constant.
    pub objective_value: f64,
    /// Dual bound, same convention.
    pub dual_objective: f64,
    pub residuals: Residuals,
    pub iterations: usize,
}

impl Solution {
    pub fn is_optimal(&self) -> bool {
        self.status == SolveStatus::Optimal
    }
}

/// Dense standard-form data.
struct StandardForm {
    n: usize,
    m: usize,
    a: Vec<f64>,
    b: Vec<f64>,
    c: Vec<f64>,
    slots: Vec<ConeSlot>,
}

impl StandardForm {
    fn from_program(p: &ConicProgram) -> Self {
        let n = p.num_vars();
        let m = p.num_rows();
        let mut a = vec![0.0; m * n];
        let mut b = vec![0.0; m];
        let mut slots = Vec::with_capacity(p.blocks().len());
        let mut row = 0;
        for blk in p.blocks() {
            slots.push(ConeSlot {
                kind: blk.kind,
                offset: row,
                dim: blk.dim(),
            });
            for r in &blk.rows {
                // s = constant + coef . x  =>  A = -coef, b = constant
                for (j, v) in r.coefficients() {
                    a[row * n + j] = -v;
                }
                b[row] = r.constant_term();
                row += 1;
            }
        }
        let sign = match p.sense() {
            Sense::Minimize => 1.0,
            Sense::Maximize => -1.0,
        };
        let mut c = vec![0.0; n];
        for (j, v) in p.objective().coefficients() {
            c[j] = sign * v;
        }
        Self {
            n,
            m,
            a,
            b,
            c,
            slots,
        }
    }

    fn mul(&self, x: &[f64], out: &mut [f64]) {
        for i in 0..self.m {
            let row = &self.a[i * self.n..(i + 1) * self.n];
            out[i] = cones::dot(row, x);
        }
    }

    fn mul_t(&self, z: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
        for i in 0..self.m {
            let zi = z[i];
            if zi == 0.0 {
                continue;
            }
            let row = &self.a[i * self.n..(i + 1) * self.n];
            for (o, a) in out.iter_mut().zip(row) {
                *o += a * zi;
            }
        }
    }

    /// Ruiz equilibration; returns row and column scalings `(d, e)` such that
    /// the stored data becomes `D A E`, `D b`, `E c`. Rows of one
    /// second-order cone share a single factor.
    fn equilibrate(&mut self, passes: usize) -> (Vec<f64>, Vec<f64>) {
        let (n, m) = (self.n, self.m);
        let mut d = vec![1.0; m];
        let mut e = vec![1.0; n];
        let clamp = |v: f64| if v < 1e-4 { 1.0 } else { v.min(1e4) };
        for _ in 0..passes {
            let mut col = vec![0.0f64; n];
            let mut rown = vec![0.0f64; m];
            for i in 0..m {
                for j in 0..n {
                    let v = self.a[i * n + j].abs();
                    col[j] = col[j].max(v);
                    rown[i] = rown[i].max(v);
                }
            }
            let mut dr = vec![1.0; m];
            for slot in &self.slots {
                match slot.kind {
                    ConeKind::SecondOrder => {
                        let mx = slot.range().map(|i| rown[i]).fold(0.0, f64::max);
                        let f = 1.0 / clamp(mx).sqrt();
                        for i in slot.range() {
                            dr[i] = f;
                        }
                    }
                    _ => {
                        for i in slot.range() {
                            dr[i] = 1.0 / clamp(rown[i]).sqrt();
                        }
                    }
                }
            }
            let ec: Vec<f64> = col.iter().map(|&v| 1.0 / clamp(v).sqrt()).collect();
            for i in 0..m {
                for j in 0..n {
                    self.a[i * n + j] *= dr[i] * ec[j];
                }
                d[i] *= dr[i];
            }
            for j in 0..n {
                e[j] *= ec[j];
            }
        }
        for i in 0..m {
            self.b[i] *= d[i];
        }
        for j in 0..n {
            self.c[j] *= e[j];
        }
        (d, e)
    }
}

/// Factored regularized KKT system for one set of scalings.
struct KktSystem {
    ldl: Ldl,
    eq_rows: Vec<usize>,
}

struct Workspace<'a> {
    sf: &'a StandardForm,
    scalings: Vec<Scaling>,
    settings: &'a SolverSettings,
}

impl<'a> Workspace<'a> {
    fn apply_w(&self, v: &[f64], out: &mut [f64]) {
        for (slot, w) in self.sf.slots.iter().zip(&self.scalings) {
            let r = slot.range();
            w.apply(&v[r.clone()], &mut out[r]);
        }
    }

    fn apply_winv(&self, v: &[f64], out: &mut [f64]) {
        for (slot, w) in self.sf.slots.iter().zip(&self.scalings) {
            let r = slot.range();
            w.apply_inv(&v[r.clone()], &mut out[r]);
        }
    }

    /// `out = H v` with `H = W W` (zero on equality rows).
    fn apply_h(&self, v: &[f64], out: &mut [f64]) {
        let mut tmp = vec![0.0; v.len()];
        self.apply_w(v, &mut tmp);
        self.apply_w(&tmp, out);
    }

    /// `v <- H^{-1} v` on barrier rows, zero on equality rows.
    fn apply_h_inv(&self, v: &mut [f64]) {
        let mut q = vec![0.0; v.len()];
        self.apply_winv(v, &mut q);
        self.apply_winv(&q, v);
    }

    /// Factors `[[G^T G + delta I, A_eq^T], [A_eq, -delta I]]` with
    /// `G = W^{-1} A` over the barrier rows.
    fn factor(&self, delta: f64) -> Option<KktSystem> {
        let (n, m) = (self.sf.n, self.sf.m);
        let eq_rows: Vec<usize> = self
            .sf
            .slots
            .iter()
            .filter(|s| s.kind == ConeKind::Zero)
            .flat_map(|s| s.range())
            .collect();
        let ne = eq_rows.len();
        let mut kkt = SymMatrix::zeros(n + ne);
        let mut g = vec![0.0; m * n];
        let mut col = Vec::new();
        let mut scaled = Vec::new();
        for (slot, w) in self.sf.slots.iter().zip(&self.scalings) {
            if slot.kind == ConeKind::Zero {
                continue;
            }
            col.resize(slot.dim, 0.0);
            scaled.resize(slot.dim, 0.0);
            for j in 0..n {
                let mut any = false;
                for (k, i) in slot.range().enumerate() {
                    col[k] = self.sf.a[i * n + j];
                    any |= col[k] != 0.0;
                }
                if !any {
                    continue;
                }
                w.apply_inv(&col, &mut scaled);
                for (k, i) in slot.range().enumerate() {
                    g[i * n + j] = scaled[k];
                }
            }
        }
        let mut nz = Vec::with_capacity(n);
        for i in 0..m {
            let row = &g[i * n..(i + 1) * n];
            nz.clear();
            nz.extend((0..n).filter(|&j| row[j] != 0.0));
            for (p, &j) in nz.iter().enumerate() {
                let gj = row[j];
                for &k in &nz[..=p] {
                    *kkt.at_mut(j, k) += gj * row[k];
                }
            }
        }
        for j in 0..n {
            *kkt.at_mut(j, j) += delta;
        }
        for (q, &i) in eq_rows.iter().enumerate() {
            for j in 0..n {
                *kkt.at_mut(n + q, j) = self.sf.a[i * n + j];
            }
            *kkt.at_mut(n + q, n + q) = -delta;
        }
        let dim = n + ne;
        for i in 0..dim {
            for j in 0..i {
                let v = kkt.at(i, j);
                *kkt.at_mut(j, i) = v;
            }
        }
        let mut signs = vec![1.0; dim];
        signs[n..].iter_mut().for_each(|s| *s = -1.0);
        let ldl = Ldl::factor(&kkt, &signs, 1e-300)?;
        Some(KktSystem { ldl, eq_rows })
    }

    /// Solves `[[0, A^T], [A, -H]] [dx; dz] = [r1; r2]` by iterative
    /// refinement on the regularized factorization.
    fn solve_kkt(&self, kkt: &KktSystem, r1: &[f64], r2: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let (n, m) = (self.sf.n, self.sf.m);
        let (mut dx, mut dz) = self.solve_once(kkt, r1, r2);
        let mut e1 = vec![0.0; n];
        let mut e2 = vec![0.0; m];
        let mut hdz = vec![0.0; m];
        let rhs_norm = inf_norm(r1).max(inf_norm(r2));
        let mut prev = f64::INFINITY;
        for _ in 0..=self.settings.refinement_steps {
            self.sf.mul_t(&dz, &mut e1);
            for j in 0..n {
                e1[j] = r1[j] - e1[j];
            }
            self.apply_h(&dz, &mut hdz);
            self.sf.mul(&dx, &mut e2);
            for i in 0..m {
                e2[i] = r2[i] - (e2[i] - hdz[i]);
            }
            let err = inf_norm(&e1).max(inf_norm(&e2));
            if err <= 1e-14 * (1.0 + rhs_norm) || err > 0.5 * prev {
                break;
            }
            prev = err;
            let (cx, cz) = self.solve_once(kkt, &e1, &e2);
            for j in 0..n {
                dx[j] += cx[j];
            }
            for i in 0..m {
                dz[i] += cz[i];
            }
        }
        (dx, dz)
    }

    fn solve_once(&self, kkt: &KktSystem, r1: &[f64], r2: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let (n, m) = (self.sf.n, self.sf.m);
        let ne = kkt.eq_rows.len();
        let mut t = r2.to_vec();
        self.apply_h_inv(&mut t);
        let mut rhs = vec![0.0; n + ne];
        self.sf.mul_t(&t, &mut rhs[..n]);
        for j in 0..n {
            rhs[j] += r1[j];
        }
        for (q, &i) in kkt.eq_rows.iter().enumerate() {
            rhs[n + q] = r2[i];
        }
        kkt.ldl.solve_in_place(&mut rhs);
        let dx = rhs[..n].to_vec();
        let mut dz = vec![0.0; m];
        self.sf.mul(&dx, &mut dz);
        for i in 0..m {
            dz[i] -= r2[i];
        }
        self.apply_h_inv(&mut dz);
        for (q, &i) in kkt.eq_rows.iter().enumerate() {
            dz[i] = rhs[n + q];
        }
        (dx, dz)
    }

    fn factor_robust(&self) -> Option<KktSystem> {
        let mut delta = self.settings.regularization;
        for _ in 0..4 {
            if let Some(k) = self.factor(delta) {
                return Some(k);
            }
            delta *= 100.0;
        }
        None
    }
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Solves `program` and reports the outcome.
pub fn solve(program: &ConicProgram, settings: &SolverSettings) -> Solution {
    let raw = StandardForm::from_program(program);
    let mut sf = StandardForm::from_program(program);
    let (dscale, escale) = if settings.equilibrate && sf.m > 0 && sf.n > 0 {
        sf.equilibrate(15)
    } else {
        (vec![1.0; sf.m], vec![1.0; sf.n])
    };
    let (n, m) = (sf.n, sf.m);
    let obj_sign = match program.sense() {
        Sense::Minimize => 1.0,
        Sense::Maximize => -1.0,
    };
    let obj_const = program.objective().constant_term();
    let degree: usize = sf.slots.iter().map(ConeSlot::degree).sum();

    let mut ws = Workspace {
        sf: &sf,
        scalings: sf
            .slots
            .iter()
            .map(|s| Scaling::identity(s.kind, s.dim))
            .collect(),
        settings,
    };

    let finish = |status: SolveStatus,
                  x: &[f64],
                  s: &[f64],
                  z: &[f64],
                  tau: f64,
                  residuals: Residuals,
                  iterations: usize| {
        let scale = if status == SolveStatus::Optimal
            || status == SolveStatus::MaxIterations
            || status == SolveStatus::NumericalFailure
        {
            1.0 / tau
        } else {
            1.0
        };
        let xu: Vec<f64> = (0..n).map(|j| escale[j] * x[j] * scale).collect();
        let su: Vec<f64> = (0..m).map(|i| s[i] / dscale[i] * scale).collect();
        let zu: Vec<f64> = (0..m).map(|i| dscale[i] * z[i] * scale).collect();
        let pobj = cones::dot(&raw.c, &xu);
        let dobj = -cones::dot(&raw.b, &zu);
        Solution {
            status,
            objective_value: obj_sign * pobj + obj_const,
            dual_objective: obj_sign * dobj + obj_const,
            x: xu,
            s: su,
            z: zu,
            residuals,
            iterations,
        }
    };

    if m == 0 {
        // unconstrained linear objective
        let bounded = sf.c.iter().all(|&v| v == 0.0);
        let status = if bounded {
            SolveStatus::Optimal
        } else {
            SolveStatus::DualInfeasible
        };
        let x = if bounded {
            vec![0.0; n]
        } else {
            sf.c.iter().map(|&v| -v).collect()
        };
        return finish(status, &x, &[], &[], 1.0, Residuals::default(), 0);
    }

    // ---- initial point ----
    let kkt0 = match ws.factor_robust() {
        Some(k) => k,
        None => {
            return finish(
                SolveStatus::NumericalFailure,
                &vec![0.0; n],
                &vec![0.0; m],
                &vec![0.0; m],
                1.0,
                Residuals::default(),
                0,
            )
        }
    };
    let (mut x, zp) = ws.solve_kkt(&kkt0, &vec![0.0; n], &sf.b);
    let mut s: Vec<f64> = zp.iter().map(|v| -v).collect();
    let neg_c: Vec<f64> = sf.c.iter().map(|v| -v).collect();
    let (_, mut z) = ws.solve_kkt(&kkt0, &neg_c, &vec![0.0; m]);
    for slot in &sf.slots {
        if slot.kind == ConeKind::Zero {
            for i in slot.range() {
                s[i] = 0.0;
            }
        }
    }
    for v in [&mut s, &mut z] {
        let worst = sf
            .slots
            .iter()
            .map(|sl| -cones::margin(sl.kind, &v[sl.range()]))
            .fold(f64::NEG_INFINITY, f64::max);
        if worst >= -1e-8 {
            for sl in &sf.slots {
                cones::add_identity(sl.kind, &mut v[sl.range()], 1.0 + worst.max(0.0));
            }
        }
    }
    let mut tau = 1.0;
    let mut kappa = 1.0;

    let norm_b = inf_norm(&raw.b);
    let norm_c = inf_norm(&raw.c);

    let mut rx = vec![0.0; n];
    let mut rz = vec![0.0; m];
    let mut lambda = vec![0.0; m];
    let mut residuals = Residuals::default();

    for iter in 0..=settings.max_iterations {
        // ---- residuals of the embedding (scaled data) ----
        sf.mul_t(&z, &mut rx);
        for j in 0..n {
            rx[j] += sf.c[j] * tau;
        }
        sf.mul(&x, &mut rz);
        for i in 0..m {
            rz[i] += s[i] - sf.b[i] * tau;
        }
        let cx = cones::dot(&sf.c, &x);
        let bz = cones::dot(&sf.b, &z);
        let rtau = cx + bz + kappa;

        // ---- termination, measured on unscaled data ----
        let xu: Vec<f64> = (0..n).map(|j| escale[j] * x[j] / tau).collect();
        let su: Vec<f64> = (0..m).map(|i| s[i] / dscale[i] / tau).collect();
        let zu: Vec<f64> = (0..m).map(|i| dscale[i] * z[i] / tau).collect();
        let pres = (0..m)
            .map(|i| (rz[i] / dscale[i] / tau).abs())
            .fold(0.0, f64::max);
        let dres = (0..n)
            .map(|j| (rx[j] / escale[j] / tau).abs())
            .fold(0.0, f64::max);
        let pobj = cx / tau;
        let dobj = -bz / tau;
        let gap_abs = (pobj - dobj).abs();
        residuals = Residuals {
            primal: pres / (norm_b + inf_norm(&xu) + inf_norm(&su)).max(1.0),
            dual: dres / (norm_c + inf_norm(&zu)).max(1.0),
            gap: gap_abs / pobj.abs().min(dobj.abs()).max(1.0),
            gap_abs,
        };
        if !(residuals.primal.is_finite() && residuals.dual.is_finite() && gap_abs.is_finite()) {
            return finish(SolveStatus::NumericalFailure, &x, &s, &z, tau, residuals, iter);
        }
        if residuals.primal <= settings.eps_feas
            && residuals.dual <= settings.eps_feas
            && residuals.gap <= settings.eps_gap
        {
            return finish(SolveStatus::Optimal, &x, &s, &z, tau, residuals, iter);
        }
        // certificates
        if bz < 0.0 {
            let mut atz = vec![0.0; n];
            sf.mul_t(&z, &mut atz);
            let atz_u = (0..n).map(|j| (atz[j] / escale[j]).abs()).fold(0.0, f64::max);
            if atz_u <= settings.eps_infeas * (-bz) {
                let scale = -1.0 / bz;
                let zc: Vec<f64> = z.iter().map(|v| v * scale).collect();
                let sc = vec![0.0; m];
                return finish(SolveStatus::PrimalInfeasible, &x, &sc, &zc, tau, residuals, iter);
            }
        }
        if cx < 0.0 {
            let mut axs = vec![0.0; m];
            sf.mul(&x, &mut axs);
            let r = (0..m)
                .map(|i| ((axs[i] + s[i]) / dscale[i]).abs())
                .fold(0.0, f64::max);
            if r <= settings.eps_infeas * (-cx) {
                let scale = -1.0 / cx;
                let xc: Vec<f64> = x.iter().map(|v| v * scale).collect();
                let sc: Vec<f64> = s.iter().map(|v| v * scale).collect();
                return finish(SolveStatus::DualInfeasible, &xc, &sc, &vec![0.0; m], tau, residuals, iter);
            }
        }
        if iter == settings.max_iterations {
            break;
        }

        // ---- scaling ----
        let mu = (cones::dot(&s, &z) + tau * kappa) / (degree as f64 + 1.0);
        let mut ok = true;
        for (k, slot) in sf.slots.iter().enumerate() {
            let r = slot.range();
            match Scaling::nesterov_todd(slot.kind, &s[r.clone()], &z[r.clone()]) {
                Some(sc) => ws.scalings[k] = sc,
                None => {
                    ok = false;
                    break;
                }
            }
        }
        if !ok {
            return finish(SolveStatus::NumericalFailure, &x, &s, &z, tau, residuals, iter);
        }
        ws.apply_w(&z, &mut lambda);
        let kkt = match ws.factor_robust() {
            Some(k) => k,
            None => return finish(SolveStatus::NumericalFailure, &x, &s, &z, tau, residuals, iter),
        };
        let (x1, z1) = ws.solve_kkt(&kkt, &neg_c, &sf.b);
        let mut wz1 = vec![0.0; m];
        ws.apply_w(&z1, &mut wz1);
        let denom = -(cones::dot(&wz1, &wz1) + kappa / tau);

        let direction = |ds_target: &[f64], dkappa: f64, eta: f64| {
            // y = lambda \ ds_target
            let mut y = vec![0.0; m];
            for slot in &sf.slots {
                let r = slot.range();
                cones::circ_div(slot.kind, &lambda[r.clone()], &ds_target[r.clone()], &mut y[r]);
            }
            let mut wy = vec![0.0; m];
            ws.apply_w(&y, &mut wy);
            let r1: Vec<f64> = rx.iter().map(|v| -eta * v).collect();
            let r2: Vec<f64> = (0..m).map(|i| -eta * rz[i] - wy[i]).collect();
            let rhs_tau = -eta * rtau - dkappa / tau;
            let (x2, z2) = ws.solve_kkt(&kkt, &r1, &r2);
            let dtau = (rhs_tau - cones::dot(&sf.c, &x2) - cones::dot(&sf.b, &z2)) / denom;
            let dx: Vec<f64> = (0..n).map(|j| x2[j] + dtau * x1[j]).collect();
            let dz: Vec<f64> = (0..m).map(|i| z2[i] + dtau * z1[i]).collect();
            let mut wdz = vec![0.0; m];
            let mut wwdz = vec![0.0; m];
            ws.apply_w(&dz, &mut wdz);
            ws.apply_w(&wdz, &mut wwdz);
            let ds: Vec<f64> = (0..m).map(|i| wy[i] - wwdz[i]).collect();
            let dkap = (dkappa - kappa * dtau) / tau;
            (dx, dz, ds, dtau, dkap)
        };

        let step_len = |ds: &[f64], dz: &[f64], dtau: f64, dkap: f64| {
            let mut a: f64 = 1e300;
            for slot in &sf.slots {
                let r = slot.range();
                a = cones::max_step(slot.kind, &s[r.clone()], &ds[r.clone()], a);
                a = cones::max_step(slot.kind, &z[r.clone()], &dz[r], a);
            }
            if dtau < 0.0 {
                a = a.min(-tau / dtau);
            }
            if dkap < 0.0 {
                a = a.min(-kappa / dkap);
            }
            a
        };

        // predictor
        let mut ds_aff = vec![0.0; m];
        for slot in &sf.slots {
            let r = slot.range();
            cones::circ(slot.kind, &lambda[r.clone()], &lambda[r.clone()], &mut ds_aff[r]);
        }
        ds_aff.iter_mut().for_each(|v| *v = -*v);
        let (_, dz_a, ds_a, dtau_a, dkap_a) = direction(&ds_aff, -tau * kappa, 1.0);
        let alpha_aff = step_len(&ds_a, &dz_a, dtau_a, dkap_a).min(1.0);
        let sigma = (1.0 - alpha_aff).powi(3).clamp(0.0, 1.0);

        // corrector
        let mut a_vec = vec![0.0; m];
        let mut b_vec = vec![0.0; m];
        ws.apply_winv(&ds_a, &mut a_vec);
        ws.apply_w(&dz_a, &mut b_vec);
        let mut target = vec![0.0; m];
        let mut corr = vec![0.0; m];
        for slot in &sf.slots {
            let r = slot.range();
            cones::circ(slot.kind, &lambda[r.clone()], &lambda[r.clone()], &mut target[r.clone()]);
            cones::circ(slot.kind, &a_vec[r.clone()], &b_vec[r.clone()], &mut corr[r.clone()]);
        }
        for i in 0..m {
            target[i] = -target[i] - corr[i];
        }
        for slot in &sf.slots {
            cones::add_identity(slot.kind, &mut target[slot.range()], sigma * mu);
        }
        let dkappa = -tau * kappa + sigma * mu - dtau_a * dkap_a;
        let (dx, dz, ds, dtau, dkap) = direction(&target, dkappa, 1.0 - sigma);
        let alpha = (settings.step_fraction * step_len(&ds, &dz, dtau, dkap)).min(1.0);
        if !(alpha > 1e-12) || !alpha.is_finite() {
            return finish(SolveStatus::NumericalFailure, &x, &s, &z, tau, residuals, iter);
        }
        for j in 0..n {
            x[j] += alpha * dx[j];
        }
        for i in 0..m {
            s[i] += alpha * ds[i];
            z[i] += alpha * dz[i];
        }
        for slot in &sf.slots {
            if slot.kind == ConeKind::Zero {
                for i in slot.range() {
                    s[i] = 0.0;
                }
            }
        }
        tau += alpha * dtau;
        kappa += alpha * dkap;
        if !(tau > 0.0 && kappa > 0.0) {
            return finish(SolveStatus::NumericalFailure, &x, &s, &z, tau.abs().max(1e-300), residuals, iter);
        }
        // rescale the embedding when tau drifts far from one
        if tau > 1e8 || tau < 1e-8 {
            let r = 1.0 / tau;
            x.iter_mut().for_each(|v| *v *= r);
            s.iter_mut().for_each(|v| *v *= r);
            z.iter_mut().for_each(|v| *v *= r);
            kappa *= r;
            tau = 1.0;
        }
    }
    finish(
        SolveStatus::MaxIterations,
        &x,
        &s,
        &z,
        tau,
        residuals,
        settings.max_iterations,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conic::{AffineExpr, ProgramBuilder};

    fn opts() -> SolverSettings {
        SolverSettings::default()
    }

    #[test]
    fn fixed_norm_cone() {
        let mut b = ProgramBuilder::new();
        let x = b.add_var();
        b.minimize(AffineExpr::var(x));
        b.add_soc(
            AffineExpr::var(x),
            vec![AffineExpr::constant(3.0), AffineExpr::constant(4.0)],
        )
        .unwrap();
        let sol = solve(&b.build(), &opts());
        assert_eq!(sol.status, SolveStatus::Optimal);
        assert!((sol.x[0] - 5.0).abs() < 1e-7, "{sol:?}");
    }

    #[test]
    fn lp_corner() {
        let mut b = ProgramBuilder::new();
        let x = b.add_var();
        b.maximize(AffineExpr::var(x));
        b.add_nonneg(AffineExpr::constant(1.0) - AffineExpr::var(x)).unwrap();
        let sol = solve(&b.build(), &opts());
        assert_eq!(sol.status, SolveStatus::Optimal);
        assert!((sol.objective_value - 1.0).abs() < 1e-7);
    }

    fn geomean_box(n: usize) -> f64 {
        let mut b = ProgramBuilder::new();
        let r = b.add_vars(n);
        let t = b.add_var();
        for (k, &rk) in r.iter().enumerate() {
            b.add_nonneg(AffineExpr::constant((k + 1) as f64) - AffineExpr::var(rk))
                .unwrap();
        }
        b.add_geometric_mean_epigraph(&r, t).unwrap();
        b.maximize(AffineExpr::var(t));
        let sol = solve(&b.build(), &opts());
        assert_eq!(sol.status, SolveStatus::Optimal);
        sol.objective_value
    }

    #[test]
    fn geomean_over_box() {
        let t4 = geomean_box(4);
        assert!((t4 - 24f64.powf(0.25)).abs() < 1e-6 * t4, "{t4}");
        let t5 = geomean_box(5);
        assert!((t5 - 120f64.powf(0.2)).abs() < 1e-6 * t5, "{t5}");
        assert!((geomean_box(1) - 1.0).abs() < 1e-7);
    }

    #[test]
    fn equality_rows() {
        // minimize x + y s.t. x + 2y = 4, x, y >= 0  ->  y = 2, x = 0
        let mut b = ProgramBuilder::new();
        let x = b.add_var();
        let y = b.add_var();
        b.minimize(AffineExpr::var(x) + AffineExpr::var(y));
        b.add_equality(AffineExpr::var(x) + AffineExpr::term(y, 2.0) - AffineExpr::constant(4.0))
            .unwrap();
        b.add_nonneg(AffineExpr::var(x)).unwrap();
        b.add_nonneg(AffineExpr::var(y)).unwrap();
        let sol = solve(&b.build(), &opts());
        assert_eq!(sol.status, SolveStatus::Optimal);
        assert!((sol.objective_value - 2.0).abs() < 1e-7);
    }

    #[test]
    fn detects_primal_infeasibility() {
        let mut b = ProgramBuilder::new();
        let x = b.add_var();
        b.minimize(AffineExpr::var(x));
        b.add_nonneg(AffineExpr::var(x) - AffineExpr::constant(2.0)).unwrap();
        b.add_nonneg(AffineExpr::constant(1.0) - AffineExpr::var(x)).unwrap();
        let sol = solve(&b.build(), &opts());
        assert_eq!(sol.status, SolveStatus::PrimalInfeasible);
    }

    #[test]
    fn detects_unboundedness() {
        let mut b = ProgramBuilder::new();
        let x = b.add_var();
        let y = b.add_var();
        b.maximize(AffineExpr::var(x));
        b.add_soc(AffineExpr::var(x) + AffineExpr::var(y), vec![AffineExpr::var(y)])
            .unwrap();
        let sol = solve(&b.build(), &opts());
        assert_eq!(sol.status, SolveStatus::DualInfeasible);
    }

    #[test]
    fn deterministic() {
        let mut b = ProgramBuilder::new();
        let r = b.add_vars(3);
        let t = b.add_var();
        for (k, &rk) in r.iter().enumerate() {
            b.add_nonneg(AffineExpr::constant(1.5 + k as f64) - AffineExpr::var(rk))
                .unwrap();
        }
        b.add_geometric_mean_epigraph(&r, t).unwrap();
        b.maximize(AffineExpr::var(t));
        let p = b.build();
        assert_eq!(solve(&p, &opts()), solve(&p, &opts()));
    }
}

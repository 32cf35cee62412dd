//! Homogeneous self-dual interior-point method for
//! `min cᵀx  s.t.  G x + s = h,  s ∈ K`, where `K` is a product of one
//! nonnegative orthant and second-order cones.
//!
//! Each iteration applies Nesterov-Todd scaling `W`, forms the normal matrix
//! `Gᵀ W⁻² G` densely, and takes a Mehrotra predictor-corrector step. Per cone
//! the scaling is `W = η (2 v vᵀ − J)` with `vᵀJv = 1`, so
//! `W⁻² = η⁻² (4‖v‖² u uᵀ − 2 u vᵀ − 2 v uᵀ + I)` with `u = J v`. The
//! `Gᵀ G` part of every cone block is constant and precomputed; only a rank-two
//! correction changes between iterations.

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)] // redundant when num-traits is built with std
use num_traits::Float;

use super::linalg::{cholesky_in_place, cholesky_solve, dot, norm};
use super::{ConicProgram, ConicSolution, SolveStatus, SolverSettings};

/// Solves with default settings (tolerances 1e-8, at most 200 iterations).
pub fn solve(program: &ConicProgram) -> ConicSolution {
    solve_with(program, &SolverSettings::default())
}

/// Malformed programs (non-finite data, no constraints) come back as
/// `NumericalFailure` without iterating.
pub fn solve_with(program: &ConicProgram, settings: &SolverSettings) -> ConicSolution {
    let problem = Standard::from_program(program);
    if program.validate().is_err() {
        return problem.failure(program.num_vars(), 0);
    }
    problem.run(settings)
}

enum Origin {
    Linear(usize),
    Cone(usize),
}

struct ConeBlock {
    start: usize,
    len: usize,
    /// Sorted global columns touched by the block's rows.
    support: Vec<usize>,
    /// Block rows of `G` with columns indexed into `support`.
    rows: Vec<Vec<(usize, f64)>>,
    /// `G_bᵀ G_b` on the support, row-major `|S| × |S|`.
    gram: Vec<f64>,
}

struct Standard {
    n: usize,
    m: usize,
    c: Vec<f64>,
    h: Vec<f64>,
    /// Rows of `G` as sparse (column, value) lists with increasing columns.
    g_rows: Vec<Vec<(usize, f64)>>,
    num_linear: usize,
    cones: Vec<ConeBlock>,
    origins: Vec<Origin>,
}

/// Nesterov-Todd scaling for the current iterate.
struct Scaling {
    /// Orthant part: `W = diag(sqrt(s / z))`.
    lin: Vec<f64>,
    /// Cone part: `(η, v)` per block.
    cones: Vec<(f64, Vec<f64>)>,
    /// Scaled point `λ = W z = W⁻¹ s`.
    lambda: Vec<f64>,
}

struct Direction {
    x: Vec<f64>,
    s: Vec<f64>,
    z: Vec<f64>,
    tau: f64,
    kappa: f64,
}

fn sparse(row: &[f64], sign: f64) -> Vec<(usize, f64)> {
    row.iter().enumerate().filter(|(_, v)| **v != 0.0).map(|(j, v)| (j, sign * v)).collect()
}

impl Standard {
    fn from_program(p: &ConicProgram) -> Self {
        let n = p.num_vars();
        let mut g_rows = Vec::new();
        let mut h = Vec::new();
        let mut origins = Vec::with_capacity(p.constraints().len());
        // orthant rows first: linear constraints, then bounds
        for (i, con) in p.constraints().iter().enumerate() {
            if con.is_linear() {
                origins.push(Origin::Linear(g_rows.len()));
                g_rows.push(sparse(&con.c, -1.0));
                h.push(con.d);
            } else {
                // patched below once the block index is known
                origins.push(Origin::Cone(i));
            }
        }
        for (j, (&lo, &hi)) in p.lower_bounds().iter().zip(p.upper_bounds()).enumerate() {
            if lo.is_finite() {
                g_rows.push(vec![(j, -1.0)]);
                h.push(-lo);
            }
            if hi.is_finite() {
                g_rows.push(vec![(j, 1.0)]);
                h.push(hi);
            }
        }
        let num_linear = g_rows.len();
        let mut cones = Vec::new();
        for (i, con) in p.constraints().iter().enumerate() {
            if con.is_linear() {
                continue;
            }
            let start = g_rows.len();
            g_rows.push(sparse(&con.c, -1.0));
            h.push(con.d);
            for r in 0..con.a.rows() {
                g_rows.push(sparse(con.a.row(r), -1.0));
                h.push(con.b[r]);
            }
            let len = g_rows.len() - start;
            let mut support: Vec<usize> = g_rows[start..].iter().flatten().map(|&(j, _)| j).collect();
            support.sort_unstable();
            support.dedup();
            let mut local_of = vec![usize::MAX; n];
            for (k, &j) in support.iter().enumerate() {
                local_of[j] = k;
            }
            let rows: Vec<Vec<(usize, f64)>> = g_rows[start..]
                .iter()
                .map(|row| row.iter().map(|&(j, v)| (local_of[j], v)).collect())
                .collect();
            let ns = support.len();
            let mut gram = vec![0.0; ns * ns];
            for row in &rows {
                for (a, &(p_idx, pv)) in row.iter().enumerate() {
                    for &(q_idx, qv) in &row[..=a] {
                        gram[p_idx * ns + q_idx] += pv * qv;
                    }
                }
            }
            origins[i] = Origin::Cone(cones.len());
            cones.push(ConeBlock { start, len, support, rows, gram });
        }
        Standard { n, m: g_rows.len(), c: p.objective().to_vec(), h, g_rows, num_linear, cones, origins }
    }

    fn degree(&self) -> usize {
        self.num_linear + self.cones.len()
    }

    fn g_mul(&self, x: &[f64]) -> Vec<f64> {
        self.g_rows.iter().map(|row| row.iter().map(|&(j, v)| v * x[j]).sum()).collect()
    }

    fn gt_mul(&self, z: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        for (row, &zi) in self.g_rows.iter().zip(z) {
            if zi != 0.0 {
                for &(j, v) in row {
                    out[j] += v * zi;
                }
            }
        }
        out
    }

    fn identity_scaling(&self) -> Scaling {
        let cones = self
            .cones
            .iter()
            .map(|b| {
                let mut v = vec![0.0; b.len];
                v[0] = 1.0;
                (1.0, v)
            })
            .collect();
        Scaling { lin: vec![1.0; self.num_linear], cones, lambda: vec![0.0; self.m] }
    }

    fn nt_scaling(&self, s: &[f64], z: &[f64]) -> Option<Scaling> {
        let mut lin = Vec::with_capacity(self.num_linear);
        let mut lambda = vec![0.0; self.m];
        for i in 0..self.num_linear {
            if !(s[i] > 0.0 && z[i] > 0.0) {
                return None;
            }
            lin.push((s[i] / z[i]).sqrt());
            lambda[i] = (s[i] * z[i]).sqrt();
        }
        let mut cones = Vec::with_capacity(self.cones.len());
        for b in &self.cones {
            let sb = &s[b.start..b.start + b.len];
            let zb = &z[b.start..b.start + b.len];
            let a = soc_jnorm(sb)?;
            let bz = soc_jnorm(zb)?;
            let sbar: Vec<f64> = sb.iter().map(|v| v / a).collect();
            let zbar: Vec<f64> = zb.iter().map(|v| v / bz).collect();
            let gamma = ((1.0 + dot(&sbar, &zbar)) / 2.0).sqrt();
            let mut wbar: Vec<f64> = sbar.iter().zip(&zbar).map(|(s, z)| (s - z) / (2.0 * gamma)).collect();
            wbar[0] = (sbar[0] + zbar[0]) / (2.0 * gamma);
            let denom = (2.0 * (wbar[0] + 1.0)).sqrt();
            let mut v = wbar;
            v[0] += 1.0;
            for x in v.iter_mut() {
                *x /= denom;
            }
            let eta = (a / bz).sqrt();
            if !eta.is_finite() || v.iter().any(|x| !x.is_finite()) {
                return None;
            }
            cones.push((eta, v));
        }
        let mut scaling = Scaling { lin, cones, lambda };
        let lam = self.apply_w(&scaling, z);
        for b in &self.cones {
            // guard against roundoff pushing λ out of the cone
            if soc_jnorm(&lam[b.start..b.start + b.len]).is_none() {
                return None;
            }
        }
        scaling.lambda[self.num_linear..].copy_from_slice(&lam[self.num_linear..]);
        Some(scaling)
    }

    fn apply_w(&self, w: &Scaling, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.m];
        for i in 0..self.num_linear {
            out[i] = w.lin[i] * x[i];
        }
        for (b, (eta, v)) in self.cones.iter().zip(&w.cones) {
            let xb = &x[b.start..b.start + b.len];
            let o = &mut out[b.start..b.start + b.len];
            // η (2 v (vᵀx) − J x)
            let vx = 2.0 * dot(v, xb);
            o[0] = eta * (vx * v[0] - xb[0]);
            for k in 1..b.len {
                o[k] = eta * (vx * v[k] + xb[k]);
            }
        }
        out
    }

    fn apply_winv(&self, w: &Scaling, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.m];
        for i in 0..self.num_linear {
            out[i] = x[i] / w.lin[i];
        }
        for (b, (eta, v)) in self.cones.iter().zip(&w.cones) {
            let xb = &x[b.start..b.start + b.len];
            let o = &mut out[b.start..b.start + b.len];
            // η⁻¹ (2 J v (vᵀ J x) − J x)
            let vjx = 2.0 * (v[0] * xb[0] - dot(&v[1..], &xb[1..]));
            o[0] = (vjx * v[0] - xb[0]) / eta;
            for k in 1..b.len {
                o[k] = (-vjx * v[k] + xb[k]) / eta;
            }
        }
        out
    }

    fn normal_matrix(&self, w: &Scaling, hmat: &mut [f64]) {
        let n = self.n;
        hmat.iter_mut().for_each(|v| *v = 0.0);
        for (i, row) in self.g_rows[..self.num_linear].iter().enumerate() {
            let weight = 1.0 / (w.lin[i] * w.lin[i]);
            for (a, &(p, pv)) in row.iter().enumerate() {
                for &(q, qv) in &row[..=a] {
                    hmat[p * n + q] += weight * pv * qv;
                }
            }
        }
        for (b, (eta, v)) in self.cones.iter().zip(&w.cones) {
            let ns = b.support.len();
            let mut au = vec![0.0; ns];
            let mut av = vec![0.0; ns];
            for (r, row) in b.rows.iter().enumerate() {
                let ur = if r == 0 { v[0] } else { -v[r] };
                for &(k, val) in row {
                    au[k] += val * ur;
                    av[k] += val * v[r];
                }
            }
            let scale = 1.0 / (eta * eta);
            let vv4 = 4.0 * dot(v, v);
            for p in 0..ns {
                let hp = &mut hmat[b.support[p] * n..b.support[p] * n + n];
                let g = &b.gram[p * ns..p * ns + ns];
                let (aup, avp) = (au[p], av[p]);
                for q in 0..=p {
                    hp[b.support[q]] +=
                        scale * (g[q] + vv4 * aup * au[q] - 2.0 * (aup * av[q] + avp * au[q]));
                }
            }
        }
    }

    fn factor(&self, w: &Scaling, hmat: &mut [f64], chol: &mut [f64]) -> bool {
        let n = self.n;
        self.normal_matrix(w, hmat);
        let max_diag = (0..n).fold(0.0f64, |m, i| m.max(hmat[i * n + i]));
        let mut delta = 1e-13 * (1.0 + max_diag);
        for _ in 0..6 {
            chol.copy_from_slice(hmat);
            for i in 0..n {
                chol[i * n + i] += delta;
            }
            if cholesky_in_place(chol, n).is_ok() {
                return true;
            }
            delta *= 1e3;
        }
        false
    }

    /// Solves `[0 Gᵀ; G −W²] [x; z] = [r1; r2]` with iterative refinement.
    fn solve_kkt(&self, w: &Scaling, chol: &[f64], r1: &[f64], r2: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let base = norm(r1).max(norm(r2)).max(1e-300);
        let (mut x, mut z) = self.solve_kkt_once(w, chol, r1, r2);
        for _ in 0..3 {
            let gtz = self.gt_mul(&z);
            let e1: Vec<f64> = r1.iter().zip(&gtz).map(|(r, g)| r - g).collect();
            let gx = self.g_mul(&x);
            let w2z = self.apply_w(w, &self.apply_w(w, &z));
            let e2: Vec<f64> = (0..self.m).map(|i| r2[i] - (gx[i] - w2z[i])).collect();
            let err = norm(&e1).max(norm(&e2));
            if err <= 1e-14 * base {
                break;
            }
            let (dx, dz) = self.solve_kkt_once(w, chol, &e1, &e2);
            x.iter_mut().zip(&dx).for_each(|(a, b)| *a += b);
            z.iter_mut().zip(&dz).for_each(|(a, b)| *a += b);
        }
        (x, z)
    }

    fn solve_kkt_once(&self, w: &Scaling, chol: &[f64], r1: &[f64], r2: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let winv2_r2 = self.apply_winv(w, &self.apply_winv(w, r2));
        let mut x = self.gt_mul(&winv2_r2);
        x.iter_mut().zip(r1).for_each(|(a, b)| *a += b);
        cholesky_solve(chol, self.n, &mut x);
        let gx = self.g_mul(&x);
        let diff: Vec<f64> = gx.iter().zip(r2).map(|(a, b)| a - b).collect();
        let z = self.apply_winv(w, &self.apply_winv(w, &diff));
        (x, z)
    }

    /// `u ∘ v` blockwise.
    fn jordan(&self, u: &[f64], v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.m];
        for i in 0..self.num_linear {
            out[i] = u[i] * v[i];
        }
        for b in &self.cones {
            let (ub, vb) = (&u[b.start..b.start + b.len], &v[b.start..b.start + b.len]);
            out[b.start] = dot(ub, vb);
            for k in 1..b.len {
                out[b.start + k] = ub[0] * vb[k] + vb[0] * ub[k];
            }
        }
        out
    }

    /// Solves `λ ∘ x = r` blockwise.
    fn jordan_div(&self, lambda: &[f64], r: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.m];
        for i in 0..self.num_linear {
            out[i] = r[i] / lambda[i];
        }
        for b in &self.cones {
            let (l, rb) = (&lambda[b.start..b.start + b.len], &r[b.start..b.start + b.len]);
            let l1 = norm(&l[1..]);
            let det = (l[0] - l1) * (l[0] + l1);
            let x0 = (l[0] * rb[0] - dot(&l[1..], &rb[1..])) / det;
            out[b.start] = x0;
            for k in 1..b.len {
                out[b.start + k] = (rb[k] - x0 * l[k]) / l[0];
            }
        }
        out
    }

    fn unit(&self) -> Vec<f64> {
        let mut e = vec![0.0; self.m];
        e[..self.num_linear].iter_mut().for_each(|v| *v = 1.0);
        for b in &self.cones {
            e[b.start] = 1.0;
        }
        e
    }

    /// Largest `α` keeping `u + α d` in the cone, for `u` in its interior.
    fn max_step(&self, u: &[f64], d: &[f64]) -> f64 {
        let mut alpha = f64::INFINITY;
        for i in 0..self.num_linear {
            if d[i] < 0.0 {
                alpha = alpha.min(-u[i] / d[i]);
            }
        }
        for b in &self.cones {
            let (ub, db) = (&u[b.start..b.start + b.len], &d[b.start..b.start + b.len]);
            alpha = alpha.min(soc_step(ub, db));
        }
        alpha
    }

    /// Shift into the interior: `x + (1 + t) e` when `x` is not safely inside.
    fn shift_into_cone(&self, x: &mut [f64]) {
        let mut t = f64::NEG_INFINITY;
        for &xi in &x[..self.num_linear] {
            t = t.max(-xi);
        }
        for b in &self.cones {
            let xb = &x[b.start..b.start + b.len];
            t = t.max(norm(&xb[1..]) - xb[0]);
        }
        let scale = norm(x).max(1.0);
        if t >= -1e-8 * scale {
            let e = self.unit();
            x.iter_mut().zip(&e).for_each(|(v, ei)| *v += (1.0 + t) * ei);
        }
    }

    fn run(&self, settings: &SolverSettings) -> ConicSolution {
        let (n, m) = (self.n, self.m);
        let degree = self.degree() as f64;
        let mut hmat = vec![0.0; n * n];
        let mut chol = vec![0.0; n * n];
        let norm_c = norm(&self.c).max(1.0);
        let norm_h = norm(&self.h).max(1.0);

        // Initial point: least-squares primal and dual, shifted into the cone.
        let ident = self.identity_scaling();
        if !self.factor(&ident, &mut hmat, &mut chol) {
            return self.failure(n, 0);
        }
        let (mut x, zp) = self.solve_kkt(&ident, &chol, &vec![0.0; n], &self.h);
        let mut s: Vec<f64> = zp.iter().map(|v| -v).collect();
        let neg_c: Vec<f64> = self.c.iter().map(|v| -v).collect();
        let (_, mut z) = self.solve_kkt(&ident, &chol, &neg_c, &vec![0.0; m]);
        self.shift_into_cone(&mut s);
        self.shift_into_cone(&mut z);
        let (mut tau, mut kappa) = (1.0f64, 1.0f64);

        let mut best: Option<(f64, ConicSolution)> = None;
        for iter in 0..settings.max_iter {
            let gtz = self.gt_mul(&z);
            let gx = self.g_mul(&x);
            let rx: Vec<f64> = (0..n).map(|j| gtz[j] + self.c[j] * tau).collect();
            let rz: Vec<f64> = (0..m).map(|i| gx[i] + s[i] - self.h[i] * tau).collect();
            let cx = dot(&self.c, &x);
            let hz = dot(&self.h, &z);
            let rt = kappa + cx + hz;

            let pcost = cx / tau;
            let dcost = -hz / tau;
            let pres = norm(&rz) / tau / norm_h;
            let dres = norm(&rx) / tau / norm_c;
            let gap_abs = dot(&s, &z) / (tau * tau);
            let relgap = gap_abs / pcost.abs().min(dcost.abs()).max(1.0);

            let current = |status: SolveStatus| -> ConicSolution {
                ConicSolution {
                    status,
                    x: x.iter().map(|v| v / tau).collect(),
                    objective_value: pcost,
                    dual_objective: dcost,
                    primal_residual: pres,
                    dual_residual: dres,
                    gap: relgap,
                    iterations: iter,
                    constraint_duals: self.duals(&z, 1.0 / tau),
                }
            };
            if pres <= settings.feasibility_tol && dres <= settings.feasibility_tol && relgap <= settings.gap_tol {
                return current(SolveStatus::Optimal);
            }
            if hz < 0.0 && tau < kappa {
                let pinf = norm(&gtz) / (-hz);
                if pinf <= settings.feasibility_tol {
                    let mut sol = current(SolveStatus::Infeasible);
                    sol.constraint_duals = self.duals(&z, 1.0 / (-hz));
                    sol.x = vec![0.0; n];
                    return sol;
                }
            }
            if cx < 0.0 && tau < kappa {
                let gxs: Vec<f64> = (0..m).map(|i| gx[i] + s[i]).collect();
                let dinf = norm(&gxs) / (-cx);
                if dinf <= settings.feasibility_tol {
                    let mut sol = current(SolveStatus::Unbounded);
                    sol.x = x.iter().map(|v| v / (-cx)).collect();
                    return sol;
                }
            }
            let merit = pres.max(dres).max(relgap);
            if best.as_ref().is_none_or(|(b, _)| merit < *b) && merit.is_finite() {
                best = Some((merit, current(SolveStatus::NumericalFailure)));
            }

            let Some(w) = self.nt_scaling(&s, &z) else { break };
            if !self.factor(&w, &mut hmat, &mut chol) {
                break;
            }
            let mu = (dot(&s, &z) + tau * kappa) / (degree + 1.0);
            let (x1, z1) = self.solve_kkt(&w, &chol, &neg_c, &self.h);
            let denom_base = dot(&self.c, &x1) + dot(&self.h, &z1);
            let lam = &w.lambda;
            let lam_sq = self.jordan(lam, lam);
            let e = self.unit();

            let direction = |sigma: f64, rc: &[f64], rk: f64| -> Direction {
                let scaled = self.jordan_div(lam, rc);
                let w_scaled = self.apply_w(&w, &scaled);
                let bx: Vec<f64> = rx.iter().map(|v| -(1.0 - sigma) * v).collect();
                let bz: Vec<f64> = (0..m).map(|i| -(1.0 - sigma) * rz[i] - w_scaled[i]).collect();
                let bt = -(1.0 - sigma) * rt - rk / tau;
                let (x2, z2) = self.solve_kkt(&w, &chol, &bx, &bz);
                let dtau = (bt - dot(&self.c, &x2) - dot(&self.h, &z2)) / (denom_base - kappa / tau);
                let dx: Vec<f64> = (0..n).map(|j| x2[j] + dtau * x1[j]).collect();
                let dz: Vec<f64> = (0..m).map(|i| z2[i] + dtau * z1[i]).collect();
                let w2dz = self.apply_w(&w, &self.apply_w(&w, &dz));
                let ds: Vec<f64> = (0..m).map(|i| w_scaled[i] - w2dz[i]).collect();
                let dkappa = (rk - kappa * dtau) / tau;
                Direction { x: dx, s: ds, z: dz, tau: dtau, kappa: dkappa }
            };
            let step = |d: &Direction| -> f64 {
                let ds_scaled = self.apply_winv(&w, &d.s);
                let dz_scaled = self.apply_w(&w, &d.z);
                let mut alpha = self.max_step(lam, &ds_scaled).min(self.max_step(lam, &dz_scaled));
                if d.tau < 0.0 {
                    alpha = alpha.min(-tau / d.tau);
                }
                if d.kappa < 0.0 {
                    alpha = alpha.min(-kappa / d.kappa);
                }
                alpha
            };

            // predictor
            let rc_aff: Vec<f64> = lam_sq.iter().map(|v| -v).collect();
            let aff = direction(0.0, &rc_aff, -kappa * tau);
            let alpha_aff = step(&aff).min(1.0);
            let sigma = (1.0 - alpha_aff).powi(3).clamp(0.0, 1.0);

            // corrector
            let ds_aff = self.apply_winv(&w, &aff.s);
            let dz_aff = self.apply_w(&w, &aff.z);
            let cross = self.jordan(&ds_aff, &dz_aff);
            let rc: Vec<f64> = (0..m).map(|i| -lam_sq[i] - cross[i] + sigma * mu * e[i]).collect();
            let rk = -kappa * tau - aff.kappa * aff.tau + sigma * mu;
            let dir = direction(sigma, &rc, rk);
            let alpha = (0.99 * step(&dir)).min(1.0);
            if !(alpha > 1e-12) || !alpha.is_finite() {
                break;
            }
            x.iter_mut().zip(&dir.x).for_each(|(a, b)| *a += alpha * b);
            s.iter_mut().zip(&dir.s).for_each(|(a, b)| *a += alpha * b);
            z.iter_mut().zip(&dir.z).for_each(|(a, b)| *a += alpha * b);
            tau += alpha * dir.tau;
            kappa += alpha * dir.kappa;
            if !(tau > 0.0 && kappa > 0.0) {
                break;
            }
            if iter + 1 == settings.max_iter {
                if let Some((_, mut sol)) = best.take() {
                    sol.status = SolveStatus::MaxIter;
                    return sol;
                }
            }
        }
        match best {
            Some((_, sol)) => sol,
            None => self.failure(n, 0),
        }
    }

    fn duals(&self, z: &[f64], scale: f64) -> Vec<Vec<f64>> {
        self.origins
            .iter()
            .map(|o| match *o {
                Origin::Linear(r) => vec![z[r] * scale],
                Origin::Cone(b) => {
                    let blk = &self.cones[b];
                    z[blk.start..blk.start + blk.len].iter().map(|v| v * scale).collect()
                }
            })
            .collect()
    }

    fn failure(&self, n: usize, iterations: usize) -> ConicSolution {
        ConicSolution {
            status: SolveStatus::NumericalFailure,
            x: vec![0.0; n],
            objective_value: f64::NAN,
            dual_objective: f64::NAN,
            primal_residual: f64::INFINITY,
            dual_residual: f64::INFINITY,
            gap: f64::INFINITY,
            iterations,
            constraint_duals: self.origins.iter().map(|_| Vec::new()).collect(),
        }
    }
}

/// `sqrt(u₀² − ‖u₁‖²)` for points strictly inside the cone.
fn soc_jnorm(u: &[f64]) -> Option<f64> {
    let u1 = norm(&u[1..]);
    let d = (u[0] - u1) * (u[0] + u1);
    (u[0] > 0.0 && d > 0.0 && d.is_finite()).then(|| d.sqrt())
}

/// Smallest positive root of `(u₀ + α d₀)² − ‖u₁ + α d₁‖² = 0`.
fn soc_step(u: &[f64], d: &[f64]) -> f64 {
    let u1 = norm(&u[1..]);
    let d1 = norm(&d[1..]);
    let a = (d[0] - d1) * (d[0] + d1);
    let b = 2.0 * (u[0] * d[0] - dot(&u[1..], &d[1..]));
    let c = (u[0] - u1) * (u[0] + u1);
    let mut alpha = f64::INFINITY;
    if d[0] < 0.0 {
        alpha = -u[0] / d[0];
    }
    let scale = d[0].abs().max(d1) * (u[0].abs().max(u1));
    if a.abs() <= 1e-15 * scale.max(f64::MIN_POSITIVE) {
        if b < 0.0 {
            alpha = alpha.min(-c / b);
        }
        return alpha;
    }
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return alpha;
    }
    let q = -0.5 * (b + b.signum() * disc.sqrt());
    for root in [q / a, if q != 0.0 { c / q } else { f64::INFINITY }] {
        if root > 0.0 {
            alpha = alpha.min(root);
        }
    }
    alpha
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conic::{DenseMatrix, SocConstraint};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_cone_point(len: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
        let mut u: Vec<f64> = (0..len).map(|_| rng.gen_range(-1.0..1.0)).collect();
        u[0] = norm(&u[1..]) + rng.gen_range(0.01..2.0);
        u
    }

    fn single_cone(len: usize) -> Standard {
        let mut p = ConicProgram::new(len);
        let a = DenseMatrix::identity(len);
        let mut con = SocConstraint::new(a, vec![0.0; len], vec![0.0; len], 1.0).unwrap();
        con.a = DenseMatrix::from_row_major(len - 1, len, {
            let mut d = vec![0.0; (len - 1) * len];
            for r in 0..len - 1 {
                d[r * len + r + 1] = 1.0;
            }
            d
        })
        .unwrap();
        con.b = vec![0.0; len - 1];
        con.c = {
            let mut c = vec![0.0; len];
            c[0] = 1.0;
            c
        };
        con.d = 0.0;
        p.add_constraint(con).unwrap();
        Standard::from_program(&p)
    }

    #[test]
    fn nt_scaling_maps_z_and_s_to_the_same_point() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for len in [2, 3, 7] {
            let problem = single_cone(len);
            for _ in 0..20 {
                let s = random_cone_point(len, &mut rng);
                let z = random_cone_point(len, &mut rng);
                let w = problem.nt_scaling(&s, &z).unwrap();
                let wz = problem.apply_w(&w, &z);
                let winv_s = problem.apply_winv(&w, &s);
                for k in 0..len {
                    assert!((wz[k] - winv_s[k]).abs() < 1e-10 * (1.0 + wz[k].abs()));
                }
                let back = problem.apply_w(&w, &problem.apply_winv(&w, &s));
                for k in 0..len {
                    assert!((back[k] - s[k]).abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn jordan_division_inverts_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let problem = single_cone(5);
        let lam = random_cone_point(5, &mut rng);
        let x: Vec<f64> = (0..5).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let r = problem.jordan(&lam, &x);
        let back = problem.jordan_div(&lam, &r);
        for k in 0..5 {
            assert!((back[k] - x[k]).abs() < 1e-12);
        }
    }

    #[test]
    fn step_reaches_cone_boundary() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let u = random_cone_point(4, &mut rng);
            let d: Vec<f64> = (0..4).map(|_| rng.gen_range(-3.0..3.0)).collect();
            let a = soc_step(&u, &d);
            if a.is_finite() {
                let p: Vec<f64> = u.iter().zip(&d).map(|(u, d)| u + a * d).collect();
                assert!((p[0] - norm(&p[1..])).abs() < 1e-9 * (1.0 + p[0].abs()));
                let inside: Vec<f64> = u.iter().zip(&d).map(|(u, d)| u + 0.999 * a * d).collect();
                assert!(inside[0] > norm(&inside[1..]));
            } else {
                let p: Vec<f64> = u.iter().zip(&d).map(|(u, d)| u + 1e6 * d).collect();
                assert!(p[0] >= norm(&p[1..]) - 1e-6 * p[0].abs());
            }
        }
    }
}

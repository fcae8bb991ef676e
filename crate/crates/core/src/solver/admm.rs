//! Operator-splitting solver.
//!
//! Variables live in scaled coordinates where an off-diagonal entry `w_ij`
//! is stored as `√2·w_ij`, so the Euclidean norm of the matrix part equals
//! the Frobenius norm of `W`. Constraints are written as `A x ∈ C` with
//!
//! * one identity block on the matrix entries whose set is the PSD cone,
//! * one row per finite box bound pair and per linear constraint, each with
//!   an interval set `[l, u]`.
//!
//! The iteration is the relaxed ADMM of OSQP with the PSD block projected by
//! eigenvalue clipping; the penalty adapts to balance the two residuals.

use log::debug;

use super::ldl::{Ldl, SymTriplets};
use super::{constraint_scale, ConicProblem, ConicSolution, Sense, SolverSettings, Status, VarRef};
use crate::error::Result;
use crate::linalg::{Matrix, PsdProjector};

const RHO_MIN: f64 = 1e-6;
const RHO_MAX: f64 = 1e6;
const EQ_RHO_SCALE: f64 = 1e3;
const ADAPT_INTERVAL: usize = 50;
const ADAPT_TRIGGER: f64 = 5.0;
const REORTHO_INTERVAL: usize = 100;
const TINY: f64 = 1e-300;

struct Row {
    cols: Vec<usize>,
    coefs: Vec<f64>,
    lo: f64,
    hi: f64,
    /// Original 2-norm of the row; rows are stored with unit norm.
    norm: f64,
}

impl Row {
    fn dot(&self, x: &[f64]) -> f64 {
        self.cols.iter().zip(&self.coefs).map(|(&c, a)| a * x[c]).sum()
    }

    /// Rescales the row to unit 2-norm, remembering the factor.
    fn normalized(mut self) -> Self {
        let norm = self.coefs.iter().map(|c| c * c).sum::<f64>().sqrt();
        self.coefs.iter_mut().for_each(|c| *c /= norm);
        self.lo /= norm;
        self.hi /= norm;
        self.norm = norm;
        self
    }

    fn is_eq(&self) -> bool {
        self.lo == self.hi
    }
}

struct Layout {
    n: usize,
    entries: usize,
    vars: usize,
    /// Scale of each variable in solver coordinates (√2 off-diagonal, 1 otherwise).
    scale: Vec<f64>,
    /// (i, j) for each entry index.
    pos: Vec<(usize, usize)>,
}

impl Layout {
    fn new(p: &ConicProblem) -> Self {
        let n = p.n();
        let entries = p.entry_count();
        let vars = p.var_count();
        let mut scale = vec![1.0; vars];
        let mut pos = Vec::with_capacity(entries);
        for i in 0..n {
            for j in i..n {
                if i != j {
                    scale[pos.len()] = std::f64::consts::SQRT_2;
                }
                pos.push((i, j));
            }
        }
        Self {
            n,
            entries,
            vars,
            scale,
            pos,
        }
    }

    fn to_matrix(&self, x: &[f64]) -> Matrix {
        let mut m = Matrix::zeros(self.n);
        for (k, &(i, j)) in self.pos.iter().enumerate() {
            let v = x[k] / self.scale[k];
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
        m
    }

    fn from_matrix(&self, m: &Matrix, out: &mut [f64]) {
        for (k, &(i, j)) in self.pos.iter().enumerate() {
            out[k] = m[(i, j)] * self.scale[k];
        }
    }
}

fn build_rows(p: &ConicProblem, layout: &Layout) -> Vec<Row> {
    let mut rows = Vec::new();
    for idx in 0..layout.vars {
        let (lo, hi) = p.bounds_by_index(idx);
        if lo.is_finite() || hi.is_finite() {
            rows.push(Row {
                cols: vec![idx],
                coefs: vec![1.0 / layout.scale[idx]],
                lo,
                hi,
                norm: 1.0,
            }.normalized());
        }
    }
    for con in p.constraints() {
        let mut merged: Vec<(usize, f64)> = Vec::with_capacity(con.terms.len());
        for &(v, c) in &con.terms {
            let idx = p.index(v);
            match merged.iter_mut().find(|(i, _)| *i == idx) {
                Some(t) => t.1 += c,
                None => merged.push((idx, c)),
            }
        }
        merged.sort_by_key(|t| t.0);
        let (lo, hi) = match con.sense {
            Sense::Le => (f64::NEG_INFINITY, con.rhs),
            Sense::Ge => (con.rhs, f64::INFINITY),
            Sense::Eq => (con.rhs, con.rhs),
        };
        rows.push(Row {
            cols: merged.iter().map(|t| t.0).collect(),
            coefs: merged.iter().map(|t| t.1 / layout.scale[t.0]).collect(),
            lo,
            hi,
            norm: 1.0,
        }.normalized());
    }
    rows
}

fn factor(layout: &Layout, rows: &[Row], rho: f64, sigma: f64) -> Result<Ldl> {
    let mut k = SymTriplets::new(layout.vars);
    for i in 0..layout.vars {
        k.add(i, i, sigma + if i < layout.entries { rho } else { 0.0 });
    }
    for row in rows {
        let r = row_rho(row, rho);
        for (a, (&ci, &vi)) in row.cols.iter().zip(&row.coefs).enumerate() {
            for (&cj, &vj) in row.cols[a..].iter().zip(&row.coefs[a..]) {
                k.add(ci, cj, r * vi * vj);
            }
        }
    }
    Ldl::factor(&k)
}

fn row_rho(row: &Row, rho: f64) -> f64 {
    if row.is_eq() {
        EQ_RHO_SCALE * rho
    } else {
        rho
    }
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Solves `p` (maximization) by operator splitting.
///
/// Never reports `Infeasible`: an infeasible problem runs to the iteration
/// limit. Use [`super::feasibility_margin`] to decide feasibility.
pub fn solve(p: &ConicProblem, s: &SolverSettings) -> Result<ConicSolution> {
    p.validate()?;
    s.validate()?;
    let layout = Layout::new(p);
    let rows = build_rows(p, &layout);
    let nv = layout.vars;
    let ne = layout.entries;
    let nr = rows.len();

    // Minimization form: q = -c in solver coordinates.
    let mut q = vec![0.0; nv];
    for &(v, c) in p.objective() {
        let idx = p.index(v);
        q[idx] -= c / layout.scale[idx];
    }
    let q_norm = inf_norm(&q);
    let feas_scale = constraint_scale(p);

    let mut rho = s.rho;
    let mut ldl = factor(&layout, &rows, rho, s.sigma)?;
    let mut projector = PsdProjector::new(layout.n);

    let mut x = vec![0.0; nv];
    let mut z_psd = vec![0.0; ne];
    let mut y_psd = vec![0.0; ne];
    let mut z_lin = vec![0.0; nr];
    let mut y_lin = vec![0.0; nr];

    let mut rhs = vec![0.0; nv];
    let mut scratch = Vec::with_capacity(nv);
    let mut zt_lin = vec![0.0; nr];
    let mut w_feas = vec![0.0; nv];
    let mut aty = vec![0.0; nv];

    let mut v_psd = vec![0.0; ne];
    let mut primal = f64::INFINITY;
    let mut dual = f64::INFINITY;
    // Sum of log(relative primal / relative dual) since the last ρ update.
    let mut log_ratio_sum = 0.0;
    let mut status = Status::IterationLimit;
    let mut iterations = s.max_iter;

    for iter in 1..=s.max_iter {
        // x-update: (σI + AᵀRA) x̃ = σx - q + Aᵀ(Rz - y)
        for i in 0..nv {
            rhs[i] = s.sigma * x[i] - q[i];
        }
        for i in 0..ne {
            rhs[i] += rho * z_psd[i] - y_psd[i];
        }
        for (r, row) in rows.iter().enumerate() {
            let t = row_rho(row, rho) * z_lin[r] - y_lin[r];
            for (&c, &a) in row.cols.iter().zip(&row.coefs) {
                rhs[c] += a * t;
            }
        }
        ldl.solve(&mut rhs, &mut scratch);
        let xt = &rhs;

        for (r, row) in rows.iter().enumerate() {
            zt_lin[r] = row.dot(xt);
        }
        let a = s.alpha;
        for i in 0..nv {
            x[i] = a * xt[i] + (1.0 - a) * x[i];
        }

        // z-update and dual ascent, PSD block.
        for i in 0..ne {
            let zh = a * xt[i] + (1.0 - a) * z_psd[i];
            v_psd[i] = zh + y_psd[i] / rho;
            // Keep ẑ for the dual step.
            y_psd[i] += rho * zh;
        }
        let (proj, _) = projector.project(&layout.to_matrix(&v_psd));
        layout.from_matrix(&proj, &mut z_psd);
        for i in 0..ne {
            y_psd[i] -= rho * z_psd[i];
        }
        if iter % REORTHO_INTERVAL == 0 {
            projector.reorthonormalize();
        }

        // z-update and dual ascent, interval rows.
        for (r, row) in rows.iter().enumerate() {
            let rr = row_rho(row, rho);
            let zh = a * zt_lin[r] + (1.0 - a) * z_lin[r];
            let znew = (zh + y_lin[r] / rr).clamp(row.lo, row.hi);
            y_lin[r] += rr * (zh - znew);
            z_lin[r] = znew;
        }

        // Residuals. Feasibility is measured on the candidate output: the PSD
        // block z together with the scalar part of x. The ρ balance uses the
        // splitting residuals ‖Ax − z‖ and ‖q + Aᵀy‖ in 2-norm.
        w_feas[..ne].copy_from_slice(&z_psd);
        w_feas[ne..].copy_from_slice(&x[ne..]);
        let mut consensus: f64 = 0.0;
        let mut split_sq = 0.0;
        let mut split_scale_sq = 0.0;
        for i in 0..ne {
            let d = x[i] - z_psd[i];
            consensus = consensus.max(d.abs() / layout.scale[i]);
            split_sq += d * d;
            split_scale_sq += (x[i] * x[i]).max(z_psd[i] * z_psd[i]);
        }
        let mut row_viol: f64 = 0.0;
        for (r, row) in rows.iter().enumerate() {
            let v = row.dot(&w_feas);
            row_viol = row_viol.max((row.lo - v) * row.norm).max((v - row.hi) * row.norm);
            let ax = row.dot(&x);
            split_sq += (ax - z_lin[r]).powi(2);
            split_scale_sq += (ax * ax).max(z_lin[r] * z_lin[r]);
        }
        primal = consensus.max(row_viol);

        aty.iter_mut().for_each(|v| *v = 0.0);
        aty[..ne].copy_from_slice(&y_psd);
        for (r, row) in rows.iter().enumerate() {
            for (&c, &a) in row.cols.iter().zip(&row.coefs) {
                aty[c] += a * y_lin[r];
            }
        }
        let aty_norm = inf_norm(&aty);
        dual = 0.0;
        let mut dual_sq = 0.0;
        let mut dual_scale_sq = 0.0;
        for (u, v) in aty.iter().zip(&q) {
            dual = dual.max((u + v).abs());
            dual_sq += (u + v) * (u + v);
            dual_scale_sq += (u * u).max(v * v);
        }

        if s.verbose {
            eprintln!("{iter},{primal:.6e},{dual:.6e},{rho:.3e}");
        }

        let eps_p = s.eps_abs + s.eps_rel * feas_scale.max(inf_norm(&x[ne..]));
        let eps_d = s.eps_abs + s.eps_rel * aty_norm.max(q_norm);
        if primal <= eps_p && dual <= eps_d {
            status = Status::Optimal;
            iterations = iter;
            break;
        }

        let p_rel = (split_sq / split_scale_sq.max(TINY)).sqrt();
        let d_rel = (dual_sq / dual_scale_sq.max(TINY)).sqrt();
        log_ratio_sum += (p_rel.max(TINY) / d_rel.max(TINY)).ln();
        if s.adaptive_rho && iter % ADAPT_INTERVAL == 0 {
            // Geometric mean over the window: single-iteration ratios swing
            // by orders of magnitude.
            let ratio = (0.5 * log_ratio_sum / ADAPT_INTERVAL as f64).exp();
            log_ratio_sum = 0.0;
            let new_rho = (rho * ratio).clamp(RHO_MIN, RHO_MAX);
            if new_rho > ADAPT_TRIGGER * rho || new_rho < rho / ADAPT_TRIGGER {
                debug!("iteration {iter}: rho {rho:.3e} -> {new_rho:.3e}");
                rho = new_rho;
                ldl = factor(&layout, &rows, rho, s.sigma)?;
            }
        }
    }

    let w = layout.to_matrix(&z_psd);
    let scalars: Vec<f64> = x[ne..].to_vec();
    let value = |v: VarRef| match v {
        VarRef::Entry(i, j) => w[(i, j)],
        VarRef::Scalar(k) => scalars[k],
    };
    let objective = p.objective().iter().map(|&(v, c)| c * value(v)).sum();
    Ok(ConicSolution {
        status,
        w,
        scalars,
        objective,
        primal_residual: primal,
        dual_residual: dual,
        iterations,
    })
}

//! Linear-objective problems over one PSD matrix block plus scalar variables,
//! linear (in)equalities and box bounds.
//!
//! Matrix variables are the upper-triangle entries of a symmetric `n × n`
//! matrix `W`; `VarRef::entry(i, j)` and `VarRef::entry(j, i)` name the same
//! variable. The objective is always maximized.

mod admm;
pub mod ldl;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{sym_eig, Matrix};

pub use admm::solve;

/// A decision variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum VarRef {
    /// Entry `(i, j)` of `W`, stored with `i <= j`.
    Entry(usize, usize),
    /// Auxiliary scalar `k`.
    Scalar(usize),
}

impl VarRef {
    pub fn entry(i: usize, j: usize) -> Self {
        if i <= j {
            VarRef::Entry(i, j)
        } else {
            VarRef::Entry(j, i)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sense {
    Le,
    Eq,
    Ge,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearConstraint {
    pub terms: Vec<(VarRef, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

impl LinearConstraint {
    pub fn new(terms: Vec<(VarRef, f64)>, sense: Sense, rhs: f64) -> Self {
        let terms = terms
            .into_iter()
            .map(|(v, c)| match v {
                VarRef::Entry(i, j) => (VarRef::entry(i, j), c),
                s => (s, c),
            })
            .collect();
        Self { terms, sense, rhs }
    }

    /// Signed amount by which `lhs` breaks the constraint (0 when satisfied).
    pub fn violation(&self, lhs: f64) -> f64 {
        match self.sense {
            Sense::Le => (lhs - self.rhs).max(0.0),
            Sense::Ge => (self.rhs - lhs).max(0.0),
            Sense::Eq => (lhs - self.rhs).abs(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConicProblem {
    n: usize,
    scalar_count: usize,
    objective: Vec<(VarRef, f64)>,
    constraints: Vec<LinearConstraint>,
    bounds: Vec<(f64, f64)>,
}

impl ConicProblem {
    /// An unconstrained problem (free variables, zero objective) with an
    /// `n × n` PSD block and `scalar_count` scalars.
    pub fn new(n: usize, scalar_count: usize) -> Self {
        let vars = n * (n + 1) / 2 + scalar_count;
        Self {
            n,
            scalar_count,
            objective: Vec::new(),
            constraints: Vec::new(),
            bounds: vec![(f64::NEG_INFINITY, f64::INFINITY); vars],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn scalar_count(&self) -> usize {
        self.scalar_count
    }

    pub fn entry_count(&self) -> usize {
        self.n * (self.n + 1) / 2
    }

    pub fn var_count(&self) -> usize {
        self.entry_count() + self.scalar_count
    }

    /// Flat index of a variable: upper-triangle entries row by row, then scalars.
    pub fn index(&self, v: VarRef) -> usize {
        match v {
            VarRef::Entry(i, j) => {
                let (i, j) = if i <= j { (i, j) } else { (j, i) };
                i * self.n - i * i.saturating_sub(1) / 2 + (j - i)
            }
            VarRef::Scalar(k) => self.entry_count() + k,
        }
    }

    pub fn var_at(&self, idx: usize) -> VarRef {
        let entries = self.entry_count();
        if idx >= entries {
            return VarRef::Scalar(idx - entries);
        }
        let mut start = 0;
        for i in 0..self.n {
            let len = self.n - i;
            if idx < start + len {
                return VarRef::Entry(i, i + idx - start);
            }
            start += len;
        }
        unreachable!()
    }

    pub fn objective(&self) -> &[(VarRef, f64)] {
        &self.objective
    }

    pub fn constraints(&self) -> &[LinearConstraint] {
        &self.constraints
    }

    pub fn bounds(&self, v: VarRef) -> (f64, f64) {
        self.bounds[self.index(v)]
    }

    pub fn bounds_by_index(&self, idx: usize) -> (f64, f64) {
        self.bounds[idx]
    }

    /// Adds `c` to the objective coefficient of `v` (maximized).
    pub fn add_objective(&mut self, v: VarRef, c: f64) {
        let v = normalize(v);
        if let Some(term) = self.objective.iter_mut().find(|(w, _)| *w == v) {
            term.1 += c;
        } else {
            self.objective.push((v, c));
        }
    }

    pub fn set_bounds(&mut self, v: VarRef, lo: f64, hi: f64) {
        let idx = self.index(v);
        self.bounds[idx] = (lo, hi);
    }

    pub fn add_constraint(&mut self, c: LinearConstraint) {
        self.constraints.push(c);
    }

    pub fn validate(&self) -> Result<()> {
        let check = |v: &VarRef| -> Result<()> {
            let ok = match *v {
                VarRef::Entry(i, j) => i < self.n && j < self.n,
                VarRef::Scalar(k) => k < self.scalar_count,
            };
            if ok {
                Ok(())
            } else {
                Err(Error::InvalidProblem(format!("{v:?} out of range")))
            }
        };
        for (v, c) in &self.objective {
            check(v)?;
            if !c.is_finite() {
                return Err(Error::InvalidProblem("non-finite objective coefficient".into()));
            }
        }
        for con in &self.constraints {
            if con.terms.is_empty() {
                return Err(Error::InvalidProblem("constraint without terms".into()));
            }
            if !con.rhs.is_finite() {
                return Err(Error::InvalidProblem("non-finite right-hand side".into()));
            }
            for (v, c) in &con.terms {
                check(v)?;
                if !c.is_finite() {
                    return Err(Error::InvalidProblem("non-finite coefficient".into()));
                }
            }
        }
        for (idx, &(lo, hi)) in self.bounds.iter().enumerate() {
            if lo.is_nan() || hi.is_nan() || lo > hi {
                return Err(Error::InvalidProblem(format!(
                    "box bounds [{lo}, {hi}] of {:?} are empty",
                    self.var_at(idx)
                )));
            }
        }
        Ok(())
    }

    /// The phase-1 problem: maximize a common slack `s` by which every
    /// inequality (box sides included) holds with room to spare. Equalities,
    /// boxes of zero width and the PSD constraint stay exact. The slack is
    /// the last scalar.
    pub fn phase_one(&self) -> ConicProblem {
        let s = VarRef::Scalar(self.scalar_count);
        let mut p = ConicProblem::new(self.n, self.scalar_count + 1);
        p.add_objective(s, 1.0);
        let mut cap: f64 = 1.0;
        for idx in 0..self.var_count() {
            let v = self.var_at(idx);
            let (lo, hi) = self.bounds[idx];
            if lo == hi {
                cap = cap.max(lo.abs());
                p.add_constraint(LinearConstraint::new(vec![(v, 1.0)], Sense::Eq, lo));
                continue;
            }
            if lo.is_finite() {
                cap = cap.max(lo.abs());
                p.add_constraint(LinearConstraint::new(vec![(v, 1.0), (s, -1.0)], Sense::Ge, lo));
            }
            if hi.is_finite() {
                cap = cap.max(hi.abs());
                p.add_constraint(LinearConstraint::new(vec![(v, 1.0), (s, 1.0)], Sense::Le, hi));
            }
        }
        for con in &self.constraints {
            cap = cap.max(con.rhs.abs());
            let mut terms = con.terms.clone();
            match con.sense {
                Sense::Le => terms.push((s, 1.0)),
                Sense::Ge => terms.push((s, -1.0)),
                Sense::Eq => {}
            }
            p.add_constraint(LinearConstraint::new(terms, con.sense, con.rhs));
        }
        p.set_bounds(s, -cap, cap);
        p
    }
}

fn normalize(v: VarRef) -> VarRef {
    match v {
        VarRef::Entry(i, j) => VarRef::entry(i, j),
        s => s,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverSettings {
    pub eps_abs: f64,
    pub eps_rel: f64,
    pub max_iter: usize,
    /// Initial penalty; adapted during the run when `adaptive_rho` is set.
    pub rho: f64,
    pub adaptive_rho: bool,
    /// Over-relaxation, in (0, 2).
    pub alpha: f64,
    /// Phase-1 margins below `-infeasibility_margin` mean infeasible.
    pub infeasibility_margin: f64,
    /// Proximal regularization of the linear system.
    pub sigma: f64,
    /// Stream `iteration,primal,dual,rho` CSV lines to stderr.
    pub verbose: bool,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            eps_abs: 1e-7,
            eps_rel: 1e-6,
            max_iter: 200_000,
            rho: 1.0,
            adaptive_rho: true,
            alpha: 1.6,
            infeasibility_margin: 1e-6,
            sigma: 1e-6,
            verbose: false,
        }
    }
}

impl SolverSettings {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("eps_abs", self.eps_abs),
            ("eps_rel", self.eps_rel),
            ("rho", self.rho),
            ("infeasibility_margin", self.infeasibility_margin),
            ("sigma", self.sigma),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if self.max_iter == 0 {
            return Err(Error::Config("max_iter must be positive".into()));
        }
        if !(self.alpha > 0.0 && self.alpha < 2.0) {
            return Err(Error::Config(format!("alpha must lie in (0, 2), got {}", self.alpha)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Optimal,
    Infeasible,
    IterationLimit,
}

impl std::fmt::Display for Status {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Status::Optimal => "optimal",
            Status::Infeasible => "infeasible",
            Status::IterationLimit => "iteration_limit",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone)]
pub struct ConicSolution {
    pub status: Status,
    pub w: Matrix,
    pub scalars: Vec<f64>,
    pub objective: f64,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub iterations: usize,
}

impl ConicSolution {
    pub fn value(&self, v: VarRef) -> f64 {
        match v {
            VarRef::Entry(i, j) => self.w[(i, j)],
            VarRef::Scalar(k) => self.scalars[k],
        }
    }

    /// Largest violation over box bounds and linear constraints of `p`.
    pub fn max_violation(&self, p: &ConicProblem) -> f64 {
        let mut worst: f64 = 0.0;
        for idx in 0..p.var_count() {
            let v = p.var_at(idx);
            let (lo, hi) = p.bounds_by_index(idx);
            let x = self.value(v);
            worst = worst.max(lo - x).max(x - hi);
        }
        for con in p.constraints() {
            let lhs: f64 = con.terms.iter().map(|&(v, c)| c * self.value(v)).sum();
            worst = worst.max(con.violation(lhs));
        }
        worst
    }

    pub fn min_eigenvalue(&self) -> f64 {
        sym_eig(&self.w)
            .map(|e| e.values.last().copied().unwrap_or(0.0))
            .unwrap_or(f64::NEG_INFINITY)
    }
}

/// Scale used for the feasibility tolerance `eps_abs + eps_rel * scale`.
pub fn constraint_scale(p: &ConicProblem) -> f64 {
    let mut scale: f64 = 0.0;
    for idx in 0..p.var_count() {
        let (lo, hi) = p.bounds_by_index(idx);
        for b in [lo, hi] {
            if b.is_finite() {
                scale = scale.max(b.abs());
            }
        }
    }
    for c in p.constraints() {
        scale = scale.max(c.rhs.abs());
    }
    scale
}

/// Optimal value of the phase-1 problem. Positive means strictly feasible;
/// below `-settings.infeasibility_margin` means infeasible.
pub fn feasibility_margin(p: &ConicProblem, settings: &SolverSettings) -> Result<f64> {
    let phase = p.phase_one();
    let sol = solve(&phase, settings)?;
    match sol.status {
        Status::Optimal => Ok(sol.scalars[p.scalar_count()]),
        _ => Err(Error::IterationLimit {
            iterations: sol.iterations,
            primal_residual: sol.primal_residual,
            dual_residual: sol.dual_residual,
        }),
    }
}

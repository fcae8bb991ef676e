//! Building and solving the quantification program.

use log::info;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::model::{delta_of, validate, BoundsMode, ClassificationMatrix, PairClass, QqrConfig, Restriction};
use crate::solver::{
    feasibility_margin, solve, ConicProblem, LinearConstraint, Sense, SolverSettings, Status, VarRef,
};

/// Each unordered pair enters the objective once per ordered pair.
const PAIR_WEIGHT: f64 = 2.0;
/// Weight of the `b - a` term in unknown-bounds mode.
const INTERVAL_WEIGHT: f64 = 1.0;
/// Boundary-contact tolerance relative to `R`.
const BOUND_TOL_REL: f64 = 1e-3;

pub const VAR_A: VarRef = VarRef::Scalar(0);
pub const VAR_B: VarRef = VarRef::Scalar(1);

/// Builds the program after validating data and configuration.
pub fn build_problem(data: &ClassificationMatrix, config: &QqrConfig) -> Result<ConicProblem> {
    validate(data).map_err(Error::Validation)?;
    config.validate()?;
    Ok(build_unchecked(data, config))
}

/// Builds the program without checking `R >= b`. Empty boxes survive into the
/// problem so that the phase-1 margin can measure how infeasible it is.
fn build_unchecked(data: &ClassificationMatrix, config: &QqrConfig) -> ConicProblem {
    let n = data.n();
    let r = config.r;
    let scalars = match config.bounds {
        BoundsMode::Known { .. } => 0,
        BoundsMode::Unknown { .. } => 2,
    };
    let mut p = ConicProblem::new(n, scalars);
    for i in 0..n {
        p.set_bounds(VarRef::entry(i, i), 0.0, r);
    }
    for (i, j, class) in data.pairs() {
        let v = VarRef::entry(i, j);
        let d = delta_of(class);
        if d != 0 {
            p.add_objective(v, PAIR_WEIGHT * f64::from(d));
        }
        match config.bounds {
            BoundsMode::Known { a, b } => {
                let (lo, hi) = match class {
                    PairClass::Below => (0.0, a.min(r)),
                    PairClass::Within => (a, b.min(r)),
                    PairClass::Above => (b, r),
                    PairClass::Free => (0.0, r),
                };
                p.set_bounds(v, lo, hi);
            }
            BoundsMode::Unknown { .. } => {
                p.set_bounds(v, 0.0, r);
                let below_a = || LinearConstraint::new(vec![(v, 1.0), (VAR_A, -1.0)], Sense::Le, 0.0);
                let above_a = || LinearConstraint::new(vec![(v, 1.0), (VAR_A, -1.0)], Sense::Ge, 0.0);
                let below_b = || LinearConstraint::new(vec![(v, 1.0), (VAR_B, -1.0)], Sense::Le, 0.0);
                let above_b = || LinearConstraint::new(vec![(v, 1.0), (VAR_B, -1.0)], Sense::Ge, 0.0);
                match class {
                    PairClass::Below => p.add_constraint(below_a()),
                    PairClass::Above => p.add_constraint(above_b()),
                    PairClass::Within => {
                        p.add_constraint(above_a());
                        p.add_constraint(below_b());
                    }
                    PairClass::Free => {}
                }
            }
        }
    }
    p.add_constraint(LinearConstraint::new(
        (0..n).map(|i| (VarRef::entry(i, i), 1.0)).collect(),
        Sense::Le,
        n as f64 * r,
    ));
    if let BoundsMode::Unknown { restriction } = config.bounds {
        p.add_objective(VAR_B, INTERVAL_WEIGHT);
        p.add_objective(VAR_A, -INTERVAL_WEIGHT);
        p.set_bounds(VAR_A, 0.0, r);
        p.set_bounds(VAR_B, 0.0, r);
        p.add_constraint(LinearConstraint::new(
            vec![(VAR_A, 1.0), (VAR_B, -1.0)],
            Sense::Le,
            0.0,
        ));
        if restriction == Restriction::SumEqualsR {
            p.add_constraint(LinearConstraint::new(
                vec![(VAR_A, 1.0), (VAR_B, 1.0)],
                Sense::Eq,
                r,
            ));
        }
    }
    p
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundaryReport {
    pub tol: f64,
    /// Off-diagonal pairs within `tol` of `a_star`.
    pub at_a: usize,
    /// Off-diagonal pairs within `tol` of `b_star`.
    pub at_b: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Residuals {
    pub primal: f64,
    pub dual: f64,
    pub iterations: usize,
    /// Phase-1 feasibility margin measured before solving.
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QqrResult {
    pub labels: Vec<String>,
    #[serde(rename = "W")]
    pub w: Matrix,
    pub a_star: f64,
    pub b_star: f64,
    #[serde(rename = "R")]
    pub r: f64,
    pub objective: f64,
    pub status: Status,
    pub boundary_report: BoundaryReport,
    pub residuals: Residuals,
}

impl QqrResult {
    pub fn n(&self) -> usize {
        self.labels.len()
    }
}

/// `Σ_{i≠j} δ_ij w_ij` plus `b - a` in unknown-bounds mode.
pub fn objective_value(data: &ClassificationMatrix, w: &Matrix, interval: Option<(f64, f64)>) -> f64 {
    let pairs: f64 = data
        .pairs()
        .map(|(i, j, c)| PAIR_WEIGHT * f64::from(delta_of(c)) * w[(i, j)])
        .sum();
    pairs + interval.map_or(0.0, |(a, b)| INTERVAL_WEIGHT * (b - a))
}

fn boundary_report(w: &Matrix, a: f64, b: f64, tol: f64) -> BoundaryReport {
    let n = w.n();
    let mut report = BoundaryReport { tol, at_a: 0, at_b: 0 };
    for i in 0..n {
        for j in i + 1..n {
            let v = w[(i, j)];
            if (v - a).abs() <= tol {
                report.at_a += 1;
            }
            if (v - b).abs() <= tol {
                report.at_b += 1;
            }
        }
    }
    report
}

/// Validates, checks feasibility with the phase-1 margin, then solves.
///
/// An iteration-limited run still returns its best iterate, with
/// `status = IterationLimit`.
pub fn quantify(data: &ClassificationMatrix, config: &QqrConfig) -> Result<QqrResult> {
    validate(data).map_err(Error::Validation)?;
    config.validate_shape()?;
    let p = build_unchecked(data, config);
    let settings = &config.settings;
    let margin = feasibility_margin(&p, settings)?;
    info!("phase-1 margin {margin:.3e}");
    if margin < -settings.infeasibility_margin {
        return Err(Error::Infeasible { margin });
    }
    let sol = solve(&p, settings)?;
    info!(
        "{} after {} iterations (primal {:.3e}, dual {:.3e})",
        sol.status, sol.iterations, sol.primal_residual, sol.dual_residual
    );
    let (a_star, b_star, interval) = match config.bounds {
        BoundsMode::Known { a, b } => (a, b, None),
        BoundsMode::Unknown { .. } => {
            let (a, b) = (sol.value(VAR_A), sol.value(VAR_B));
            (a, b, Some((a, b)))
        }
    };
    let tol = BOUND_TOL_REL * config.r;
    Ok(QqrResult {
        labels: data.labels().to_vec(),
        objective: objective_value(data, &sol.w, interval),
        boundary_report: boundary_report(&sol.w, a_star, b_star, tol),
        w: sol.w,
        a_star,
        b_star,
        r: config.r,
        status: sol.status,
        residuals: Residuals {
            primal: sol.primal_residual,
            dual: sol.dual_residual,
            iterations: sol.iterations,
            margin,
        },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RScan {
    /// Smallest feasible `R` found, within the requested tolerance.
    pub border: f64,
    /// Operating point just above the border.
    pub recommended: f64,
    pub margin_lo: f64,
    pub margin_hi: f64,
    pub steps: usize,
}

/// Relative offset of the recommended operating point above the border.
pub const RECOMMENDED_OFFSET: f64 = 1e-3;

/// Bisection on `R` for the feasibility border of known bounds `[a, b]`.
pub fn scan_min_r(
    data: &ClassificationMatrix,
    a: f64,
    b: f64,
    bracket: (f64, f64),
    tol_r: f64,
    settings: &SolverSettings,
) -> Result<RScan> {
    let (mut lo, mut hi) = bracket;
    if !(lo > 0.0 && lo < hi && tol_r > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "need 0 < R_lo < R_hi and tol > 0, got [{lo}, {hi}], tol {tol_r}"
        )));
    }
    validate(data).map_err(Error::Validation)?;
    let margin_at = |r: f64| -> Result<f64> {
        let config = QqrConfig::known(a, b, r).with_settings(settings.clone());
        config.validate_shape()?;
        feasibility_margin(&build_unchecked(data, &config), settings)
    };
    let margin_lo = margin_at(lo)?;
    let margin_hi = margin_at(hi)?;
    if margin_lo >= 0.0 || margin_hi < 0.0 {
        return Err(Error::Bracket {
            lo,
            hi,
            margin_lo,
            margin_hi,
        });
    }
    let mut steps = 0;
    while hi - lo > tol_r {
        let mid = 0.5 * (lo + hi);
        let m = margin_at(mid)?;
        info!("R = {mid:.6}: margin {m:.3e}");
        if m >= 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
        steps += 1;
    }
    Ok(RScan {
        border: hi,
        recommended: hi * (1.0 + RECOMMENDED_OFFSET),
        margin_lo,
        margin_hi,
        steps,
    })
}

/// `W / R`, read as correlations between objects.
pub fn correlations(result: &QqrResult) -> Matrix {
    result.w.scaled(1.0 / result.r)
}

/// The scaled solution `(γW, γa*, γb*)` at range `γR`.
pub fn scale_solution(result: &QqrResult, gamma: f64) -> Result<QqrResult> {
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::InvalidArgument(format!("scale must be positive, got {gamma}")));
    }
    let mut out = result.clone();
    out.w = result.w.scaled(gamma);
    out.a_star *= gamma;
    out.b_star *= gamma;
    out.r *= gamma;
    out.objective *= gamma;
    out.boundary_report.tol *= gamma;
    out.residuals.primal *= gamma;
    out.residuals.margin *= gamma;
    Ok(out)
}

/// Checks a result against the constraints it should satisfy and returns a
/// description of every violation larger than `tol`.
pub fn invariant_violations(data: &ClassificationMatrix, result: &QqrResult, tol: f64, tol_psd: f64) -> Vec<String> {
    let mut out = Vec::new();
    let w = &result.w;
    let n = data.n();
    let (a, b, r) = (result.a_star, result.b_star, result.r);
    for i in 0..n {
        for j in i..n {
            let v = w[(i, j)];
            if v < -tol || v > r + tol {
                out.push(format!("w({i},{j}) = {v} outside [0, {r}]"));
            }
            let Some(class) = data.class_of(i, j) else { continue };
            let bad = match class {
                PairClass::Below => v > a + tol,
                PairClass::Above => v < b - tol,
                PairClass::Within => v < a - tol || v > b + tol,
                PairClass::Free => false,
            };
            if bad {
                out.push(format!("{class} pair ({i},{j}) = {v} violates [{a}, {b}]"));
            }
        }
    }
    if w.trace() > n as f64 * r + tol * n as f64 {
        out.push(format!("trace {} exceeds nR = {}", w.trace(), n as f64 * r));
    }
    match crate::linalg::sym_eig(w) {
        Ok(e) => {
            let min = e.values.last().copied().unwrap_or(0.0);
            if min < -tol_psd {
                out.push(format!("minimum eigenvalue {min:.3e}"));
            }
        }
        Err(e) => out.push(e.to_string()),
    }
    out
}

//! Spectral decomposition of a recovered interaction matrix: eigen-spectrum,
//! ANOVA table with simulated pseudo degrees of freedom, and PCA coordinates.

use std::fmt::Write as _;

use log::warn;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{sym_eig, Matrix};

/// Negative eigenvalues down to this are solver noise and clipped silently.
pub const NEGATIVE_CLIP_TOL: f64 = 1e-7;
/// Cumulative squared-eigenvalue share that picks the default number of terms.
pub const DEFAULT_SHARE: f64 = 0.9;
pub const MIN_REPLICATES: usize = 1000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    /// Descending.
    pub values: Vec<f64>,
    /// Column `j` belongs to `values[j]`.
    pub vectors: Matrix,
}

pub fn spectrum(w: &Matrix) -> Result<Spectrum> {
    let e = sym_eig(w)?;
    Ok(Spectrum {
        values: e.values,
        vectors: e.vectors,
    })
}

impl Spectrum {
    pub fn n(&self) -> usize {
        self.values.len()
    }

    pub fn vector(&self, j: usize) -> Vec<f64> {
        self.vectors.column(j)
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }

    pub fn sum_sq(&self) -> f64 {
        self.values.iter().map(|l| l * l).sum()
    }

    /// `Σ_{i<k} λ_i / Σ λ_i`.
    pub fn trace_share(&self, k: usize) -> f64 {
        self.values[..k].iter().sum::<f64>() / self.sum()
    }

    /// `Σ_{i<k} λ_i² / Σ λ_i²`.
    pub fn squared_share(&self, k: usize) -> f64 {
        self.values[..k].iter().map(|l| l * l).sum::<f64>() / self.sum_sq()
    }

    /// Smallest `k` whose cumulative squared share reaches 90%.
    pub fn default_k(&self) -> usize {
        (1..=self.n())
            .find(|&k| self.squared_share(k) >= DEFAULT_SHARE)
            .unwrap_or(self.n())
    }

    pub fn to_text(&self) -> String {
        let total = self.sum();
        let total_sq = self.sum_sq();
        let mut out = format!("{:>4}  {:>12}  {:>9}  {:>9}\n", "i", "eigenvalue", "share", "sq share");
        let (mut cum, mut cum_sq) = (0.0, 0.0);
        for (i, &l) in self.values.iter().enumerate() {
            cum += l;
            cum_sq += l * l;
            let _ = writeln!(
                out,
                "{:>4}  {:>12.4}  {:>8.2}%  {:>8.2}%",
                i + 1,
                l,
                100.0 * cum / total,
                100.0 * cum_sq / total_sq
            );
        }
        out
    }
}

/// Simulated expectations of the ordered squared singular values of an
/// `n × n` matrix of independent standard normals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PseudoDfTable {
    pub n: usize,
    /// `M_1 ≥ M_2 ≥ …`, one per simulated term.
    pub terms: Vec<f64>,
    pub std_errors: Vec<f64>,
    pub replicates: usize,
    pub seed: u64,
}

impl PseudoDfTable {
    /// A table with given values, e.g. a published one.
    pub fn fixed(n: usize, terms: Vec<f64>) -> Self {
        let std_errors = vec![0.0; terms.len()];
        Self {
            n,
            terms,
            std_errors,
            replicates: 0,
            seed: 0,
        }
    }
}

/// Monte-Carlo pseudo degrees of freedom for the first `k` terms.
///
/// Replicate `r` draws from a ChaCha8 stream keyed by `(seed, r)`, so the
/// table does not depend on how replicates are scheduled across threads.
pub fn mc_pseudo_df(n: usize, k: usize, replicates: usize, seed: u64) -> Result<PseudoDfTable> {
    if n == 0 || k == 0 || k > n {
        return Err(Error::InvalidArgument(format!("need 1 <= k <= n, got n={n}, k={k}")));
    }
    if replicates < MIN_REPLICATES {
        return Err(Error::InvalidArgument(format!(
            "need at least {MIN_REPLICATES} replicates, got {replicates}"
        )));
    }
    let draws: Vec<Vec<f64>> = (0..replicates)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(r as u64);
            let g = Matrix::from_fn(n, |_, _| StandardNormal.sample(&mut rng));
            let gram = g.t_matmul(&g);
            let mut values = sym_eig(&gram).expect("Gram matrix is symmetric").values;
            values.truncate(k);
            values
        })
        .collect();
    let reps = replicates as f64;
    let mut terms = vec![0.0; k];
    for d in &draws {
        for (t, v) in terms.iter_mut().zip(d) {
            *t += v;
        }
    }
    terms.iter_mut().for_each(|t| *t /= reps);
    let mut std_errors = vec![0.0; k];
    for d in &draws {
        for ((s, v), m) in std_errors.iter_mut().zip(d).zip(&terms) {
            *s += (v - m) * (v - m);
        }
    }
    std_errors
        .iter_mut()
        .for_each(|s| *s = (*s / (reps - 1.0)).sqrt() / reps.sqrt());
    Ok(PseudoDfTable {
        n,
        terms,
        std_errors,
        replicates,
        seed,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnovaRow {
    pub source: String,
    pub df: f64,
    pub ss: f64,
    /// Absent on the total row.
    pub ms: Option<f64>,
    /// `SS / total SS`.
    pub share: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnovaTable {
    pub n: usize,
    pub k: usize,
    pub terms: Vec<AnovaRow>,
    pub error: AnovaRow,
    pub total: AnovaRow,
    /// `λ_i / Σ λ` for each term, the other notion of variation explained.
    pub trace_shares: Vec<f64>,
    pub warnings: Vec<String>,
}

/// Partitions `Σ w_ij²` into the first `k` squared eigenvalues and a pooled
/// error row, each divided by its pseudo degrees of freedom.
pub fn anova(w: &Matrix, k: usize, df: &PseudoDfTable) -> Result<AnovaTable> {
    let n = w.n();
    if df.n != n || df.terms.len() < k {
        return Err(Error::DfMismatch {
            table: df.n,
            matrix: n,
        });
    }
    if k == 0 || k > n {
        return Err(Error::InvalidArgument(format!("need 1 <= k <= n, got k={k}")));
    }
    let spec = spectrum(w)?;
    let mut warnings = Vec::new();
    let clipped: Vec<f64> = spec
        .values
        .iter()
        .map(|&l| {
            if l < -NEGATIVE_CLIP_TOL {
                let msg = format!("eigenvalue {l:.3e} is below -{NEGATIVE_CLIP_TOL:e}; clipped to 0");
                warn!("{msg}");
                warnings.push(msg);
            }
            l.max(0.0)
        })
        .collect();
    let total_ss = w.frobenius_sq();
    let total_df = (n * n) as f64;
    let terms: Vec<AnovaRow> = (0..k)
        .map(|i| {
            let ss = clipped[i] * clipped[i];
            AnovaRow {
                source: format!("term {}", i + 1),
                df: df.terms[i],
                ss,
                ms: Some(ss / df.terms[i]),
                share: ss / total_ss,
            }
        })
        .collect();
    let error_df = total_df - terms.iter().map(|r| r.df).sum::<f64>();
    let error_ss = total_ss - terms.iter().map(|r| r.ss).sum::<f64>();
    let trace: f64 = clipped.iter().sum();
    Ok(AnovaTable {
        n,
        k,
        trace_shares: clipped[..k].iter().map(|l| l / trace).collect(),
        terms,
        error: AnovaRow {
            source: "error".into(),
            df: error_df,
            ss: error_ss,
            ms: Some(error_ss / error_df),
            share: error_ss / total_ss,
        },
        total: AnovaRow {
            source: "total".into(),
            df: total_df,
            ss: total_ss,
            ms: None,
            share: 1.0,
        },
        warnings,
    })
}

impl AnovaTable {
    pub fn to_text(&self) -> String {
        let mut out = format!(
            "{:<10}  {:>10}  {:>12}  {:>12}  {:>8}\n",
            "Source", "DF", "SS", "MS", "share"
        );
        for row in self.terms.iter().chain([&self.error, &self.total]) {
            let ms = row.ms.map_or(String::new(), |m| format!("{m:.4}"));
            let _ = writeln!(
                out,
                "{:<10}  {:>10.2}  {:>12.4}  {:>12}  {:>7.2}%",
                row.source,
                row.df,
                row.ss,
                ms,
                100.0 * row.share
            );
        }
        for w in &self.warnings {
            let _ = writeln!(out, "warning: {w}");
        }
        out
    }
}

/// Row `i` holds object `i`'s coordinates `u_ij·√λ_j` on the first `k` components.
pub fn pca_coords(spec: &Spectrum, k: usize) -> Vec<Vec<f64>> {
    let k = k.min(spec.n());
    let roots: Vec<f64> = spec.values[..k].iter().map(|l| l.max(0.0).sqrt()).collect();
    (0..spec.n())
        .map(|i| (0..k).map(|j| spec.vectors[(i, j)] * roots[j]).collect())
        .collect()
}

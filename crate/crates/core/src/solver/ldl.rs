//! Up-looking sparse LDLᵀ factorization of a symmetric positive definite
//! matrix, with a fill-reducing order that eliminates low-degree variables
//! first and pushes dense couplers (scalar variables, long rows) last.

use crate::error::{Error, Result};

const NONE: usize = usize::MAX;

/// Symmetric matrix assembled from upper-triangle triplets; duplicates add.
#[derive(Debug, Clone, Default)]
pub struct SymTriplets {
    n: usize,
    entries: Vec<(usize, usize, f64)>,
}

impl SymTriplets {
    pub fn new(n: usize) -> Self {
        Self {
            n,
            entries: Vec::new(),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Adds `v` at (i, j) and, implicitly, (j, i).
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let (r, c) = if i <= j { (i, j) } else { (j, i) };
        self.entries.push((r, c, v));
    }
}

#[derive(Debug, Clone)]
pub struct Ldl {
    n: usize,
    /// `perm[k]` is the original index eliminated at step `k`.
    perm: Vec<usize>,
    lp: Vec<usize>,
    li: Vec<usize>,
    lx: Vec<f64>,
    dinv: Vec<f64>,
}

fn degree_order(n: usize, entries: &[(usize, usize, f64)]) -> Vec<usize> {
    let mut degree = vec![0usize; n];
    for &(i, j, _) in entries {
        if i != j {
            degree[i] += 1;
            degree[j] += 1;
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&i| (degree[i], i));
    order
}

impl Ldl {
    pub fn factor(a: &SymTriplets) -> Result<Self> {
        let n = a.n;
        let perm = degree_order(n, &a.entries);
        let mut iperm = vec![0usize; n];
        for (k, &p) in perm.iter().enumerate() {
            iperm[p] = k;
        }

        // Permuted upper triangle in compressed columns, duplicates summed.
        let mut permuted: Vec<(usize, usize, f64)> = a
            .entries
            .iter()
            .map(|&(i, j, v)| {
                let (pi, pj) = (iperm[i], iperm[j]);
                if pi <= pj {
                    (pi, pj, v)
                } else {
                    (pj, pi, v)
                }
            })
            .collect();
        permuted.sort_by(|x, y| (x.1, x.0).cmp(&(y.1, y.0)));
        let mut ap = vec![0usize; n + 1];
        let mut ai: Vec<usize> = Vec::with_capacity(permuted.len());
        let mut ax: Vec<f64> = Vec::with_capacity(permuted.len());
        let mut last: Option<(usize, usize)> = None;
        for &(r, c, v) in &permuted {
            if last == Some((r, c)) {
                *ax.last_mut().unwrap() += v;
            } else {
                ai.push(r);
                ax.push(v);
                ap[c + 1] = ai.len();
                last = Some((r, c));
            }
        }
        for c in 0..n {
            if ap[c + 1] < ap[c] {
                ap[c + 1] = ap[c];
            }
        }

        // Elimination tree and column counts.
        let mut etree = vec![NONE; n];
        let mut lnz = vec![0usize; n];
        let mut work = vec![NONE; n];
        for j in 0..n {
            work[j] = j;
            for &row in &ai[ap[j]..ap[j + 1]] {
                let mut i = row;
                if i >= j {
                    continue;
                }
                while work[i] != j {
                    if etree[i] == NONE {
                        etree[i] = j;
                    }
                    lnz[i] += 1;
                    work[i] = j;
                    i = etree[i];
                }
            }
        }
        let mut lp = vec![0usize; n + 1];
        for i in 0..n {
            lp[i + 1] = lp[i] + lnz[i];
        }
        let nnz = lp[n];
        let mut li = vec![0usize; nnz];
        let mut lx = vec![0.0; nnz];
        let mut dinv = vec![0.0; n];

        let mut next = lp[..n].to_vec();
        let mut y = vec![0.0; n];
        let mut used = vec![false; n];
        let mut pattern: Vec<usize> = Vec::with_capacity(n);
        let mut stack: Vec<usize> = Vec::with_capacity(n);
        for k in 0..n {
            pattern.clear();
            let mut d = 0.0;
            for idx in ap[k]..ap[k + 1] {
                let i = ai[idx];
                if i == k {
                    d += ax[idx];
                    continue;
                }
                y[i] += ax[idx];
                if used[i] {
                    continue;
                }
                stack.clear();
                let mut node = i;
                while node != NONE && node < k && !used[node] {
                    used[node] = true;
                    stack.push(node);
                    node = etree[node];
                }
                while let Some(s) = stack.pop() {
                    pattern.push(s);
                }
            }
            for &c in pattern.iter().rev() {
                let yc = y[c];
                for t in lp[c]..next[c] {
                    y[li[t]] -= lx[t] * yc;
                }
                let l = yc * dinv[c];
                li[next[c]] = k;
                lx[next[c]] = l;
                d -= yc * l;
                next[c] += 1;
                y[c] = 0.0;
                used[c] = false;
            }
            if !(d > 0.0) || !d.is_finite() {
                return Err(Error::InvalidProblem(format!(
                    "linear system is not positive definite (pivot {d:.3e})"
                )));
            }
            dinv[k] = 1.0 / d;
        }
        Ok(Self {
            n,
            perm,
            lp,
            li,
            lx,
            dinv,
        })
    }

    /// Solves `A x = b` in place.
    pub fn solve(&self, b: &mut [f64], scratch: &mut Vec<f64>) {
        let n = self.n;
        scratch.clear();
        scratch.extend(self.perm.iter().map(|&p| b[p]));
        let x = scratch.as_mut_slice();
        for i in 0..n {
            let xi = x[i];
            if xi != 0.0 {
                for t in self.lp[i]..self.lp[i + 1] {
                    x[self.li[t]] -= self.lx[t] * xi;
                }
            }
        }
        for (xi, d) in x.iter_mut().zip(&self.dinv) {
            *xi *= d;
        }
        for i in (0..n).rev() {
            let mut acc = x[i];
            for t in self.lp[i]..self.lp[i + 1] {
                acc -= self.lx[t] * x[self.li[t]];
            }
            x[i] = acc;
        }
        for (k, &p) in self.perm.iter().enumerate() {
            b[p] = x[k];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dense_mul(n: usize, t: &[(usize, usize, f64)], x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; n];
        for &(i, j, v) in t {
            out[i] += v * x[j];
            if i != j {
                out[j] += v * x[i];
            }
        }
        out
    }

    #[test]
    fn solves_arrow_system() {
        // Diagonal block plus two dense coupling variables at the front so the
        // ordering has to move them last.
        let n = 40;
        let mut a = SymTriplets::new(n);
        for i in 0..n {
            a.add(i, i, 3.0 + (i % 7) as f64);
        }
        for i in 2..n {
            a.add(0, i, 0.1);
            a.add(1, i, -0.05 * ((i % 3) as f64));
        }
        a.add(0, 0, 50.0);
        a.add(1, 1, 50.0);
        a.add(5, 9, 0.7);
        let ldl = Ldl::factor(&a).unwrap();
        let x_true: Vec<f64> = (0..n).map(|i| (i as f64 * 0.3).sin()).collect();
        let mut b = dense_mul(n, &a.entries, &x_true);
        let mut scratch = Vec::new();
        ldl.solve(&mut b, &mut scratch);
        for (u, v) in b.iter().zip(&x_true) {
            assert!((u - v).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_indefinite() {
        let mut a = SymTriplets::new(2);
        a.add(0, 0, 1.0);
        a.add(1, 1, 1.0);
        a.add(0, 1, 2.0);
        assert!(Ldl::factor(&a).is_err());
    }
}

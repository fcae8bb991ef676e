//! Dense symmetric linear algebra: a row-major square matrix, a cyclic Jacobi
//! eigensolver and the Frobenius projection onto the PSD cone.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative asymmetry accepted by [`sym_eig`].
pub const SYMMETRY_TOL: f64 = 1e-12;

const MAX_SWEEPS: usize = 100;
const EIG_REL_TOL: f64 = 1e-15;
/// Looser target for the warm-started projections inside the solver.
const PROJECTION_REL_TOL: f64 = 1e-13;

/// Square matrix stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    n: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_diag(d: &[f64]) -> Self {
        let mut m = Self::zeros(d.len());
        for (i, &x) in d.iter().enumerate() {
            m[(i, i)] = x;
        }
        m
    }

    /// Builds a matrix from rows; every row must have `rows.len()` entries.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let mut data = Vec::with_capacity(n * n);
        for r in rows {
            if r.len() != n {
                return Err(Error::Dimension {
                    expected: n,
                    got: r.len(),
                });
            }
            data.extend_from_slice(r);
        }
        Ok(Self { n, data })
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                data.push(f(i, j));
            }
        }
        Self { n, data }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.n).map(|i| self[(i, j)]).collect()
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.n).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self[(i, i)]).sum()
    }

    pub fn frobenius_sq(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum()
    }

    pub fn frobenius(&self) -> f64 {
        self.frobenius_sq().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn max_asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.n {
            for j in i + 1..self.n {
                worst = worst.max((self[(i, j)] - self[(j, i)]).abs());
            }
        }
        worst
    }

    pub fn is_symmetric(&self, rel_tol: f64) -> bool {
        self.max_asymmetry() <= rel_tol * self.max_abs()
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.n, |i, j| self[(j, i)])
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            n: self.n,
            data: self.data.iter().map(|x| x * s).collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!(self.n, other.n);
        Self {
            n: self.n,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.n, other.n);
        let n = self.n;
        let mut out = Self::zeros(n);
        for i in 0..n {
            let orow = &mut out.data[i * n..(i + 1) * n];
            for k in 0..n {
                let a = self.data[i * n + k];
                if a == 0.0 {
                    continue;
                }
                let brow = &other.data[k * n..(k + 1) * n];
                for (o, b) in orow.iter_mut().zip(brow) {
                    *o += a * b;
                }
            }
        }
        out
    }

    /// `selfᵀ · other`.
    pub fn t_matmul(&self, other: &Self) -> Self {
        assert_eq!(self.n, other.n);
        let n = self.n;
        let mut out = Self::zeros(n);
        for k in 0..n {
            let arow = &self.data[k * n..(k + 1) * n];
            let brow = &other.data[k * n..(k + 1) * n];
            for (i, &a) in arow.iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                let orow = &mut out.data[i * n..(i + 1) * n];
                for (o, b) in orow.iter_mut().zip(brow) {
                    *o += a * b;
                }
            }
        }
        out
    }

    /// Averages the matrix with its transpose in place.
    pub fn symmetrize(&mut self) {
        for i in 0..self.n {
            for j in i + 1..self.n {
                let m = 0.5 * (self[(i, j)] + self[(j, i)]);
                self[(i, j)] = m;
                self[(j, i)] = m;
            }
        }
    }
}

impl std::ops::Index<(usize, usize)> for Matrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.n + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.n + j]
    }
}

impl Serialize for Matrix {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_rows().serialize(s)
    }
}

impl<'de> Deserialize<'de> for Matrix {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let rows = Vec::<Vec<f64>>::deserialize(d)?;
        Matrix::from_rows(&rows).map_err(serde::de::Error::custom)
    }
}

/// Eigen-decomposition of a symmetric matrix.
#[derive(Debug, Clone)]
pub struct SymEig {
    /// Eigenvalues, descending.
    pub values: Vec<f64>,
    /// Column `j` is the unit eigenvector for `values[j]`.
    pub vectors: Matrix,
}

impl SymEig {
    pub fn vector(&self, j: usize) -> Vec<f64> {
        self.vectors.column(j)
    }

    /// `V diag(f(λ)) Vᵀ`.
    pub fn reconstruct_with(&self, f: impl Fn(f64) -> f64) -> Matrix {
        let n = self.values.len();
        let v = &self.vectors;
        let mut out = Matrix::zeros(n);
        for (k, &lam) in self.values.iter().enumerate() {
            let w = f(lam);
            if w == 0.0 {
                continue;
            }
            for i in 0..n {
                let vik = w * v[(i, k)];
                if vik == 0.0 {
                    continue;
                }
                for j in 0..n {
                    out.data[i * n + j] += vik * v[(j, k)];
                }
            }
        }
        out.symmetrize();
        out
    }
}

/// Cyclic Jacobi sweeps on `a` (symmetric, row-major, overwritten towards
/// diagonal form). Each rotation is also applied to the rows of `vt`, so that
/// if `a = Vt₀ M Vt₀ᵀ` on entry then `a = Vt M Vtᵀ` on exit. Returns the
/// number of sweeps.
///
/// Stops once the off-diagonal Frobenius norm is at most `rel_tol·‖a‖_F`.
/// Entries below `rel_tol·‖a‖_F / n` are left in place: all of them together
/// stay under the target.
fn jacobi_in_place(a: &mut Matrix, vt: &mut Matrix, rel_tol: f64) -> usize {
    let n = a.n;
    let scale = a.frobenius();
    if n < 2 || scale == 0.0 {
        return 0;
    }
    let target = rel_tol * scale;
    let negligible = target / n as f64;
    let ad = &mut a.data;
    let vd = &mut vt.data;
    for sweep in 0..MAX_SWEEPS {
        let mut off = 0.0;
        for p in 0..n {
            for q in p + 1..n {
                off += ad[p * n + q] * ad[p * n + q];
            }
        }
        if off.sqrt() <= target {
            return sweep;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = ad[p * n + q];
                if apq.abs() <= negligible {
                    continue;
                }
                let app = ad[p * n + p];
                let aqq = ad[q * n + q];
                let g = 100.0 * apq.abs();
                if sweep > 3 && app.abs() + g == app.abs() && aqq.abs() + g == aqq.abs() {
                    ad[p * n + q] = 0.0;
                    ad[q * n + p] = 0.0;
                    continue;
                }
                let h = aqq - app;
                let t = if h.abs() + g == h.abs() {
                    apq / h
                } else {
                    let theta = 0.5 * h / apq;
                    let t = 1.0 / (theta.abs() + (theta * theta + 1.0).sqrt());
                    if theta < 0.0 {
                        -t
                    } else {
                        t
                    }
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                // Rows p and q are contiguous; update them, then mirror into
                // the columns.
                let (head, tail) = ad.split_at_mut(q * n);
                let row_p = &mut head[p * n..(p + 1) * n];
                let row_q = &mut tail[..n];
                for (xp, xq) in row_p.iter_mut().zip(row_q.iter_mut()) {
                    let (u, v) = (*xp, *xq);
                    *xp = c * u - s * v;
                    *xq = s * u + c * v;
                }
                row_p[p] = app - t * apq;
                row_q[q] = aqq + t * apq;
                row_p[q] = 0.0;
                row_q[p] = 0.0;
                for k in 0..n {
                    if k != p && k != q {
                        ad[k * n + p] = ad[p * n + k];
                        ad[k * n + q] = ad[q * n + k];
                    }
                }
                let (head, tail) = vd.split_at_mut(q * n);
                for (xp, xq) in head[p * n..(p + 1) * n].iter_mut().zip(tail[..n].iter_mut()) {
                    let (u, v) = (*xp, *xq);
                    *xp = c * u - s * v;
                    *xq = s * u + c * v;
                }
            }
        }
    }
    MAX_SWEEPS
}

fn sorted_descending(diag: Vec<f64>, vt: Matrix) -> SymEig {
    let n = diag.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| diag[j].total_cmp(&diag[i]).then(i.cmp(&j)));
    let values = order.iter().map(|&i| diag[i]).collect();
    let vectors = Matrix::from_fn(n, |r, c| vt[(order[c], r)]);
    SymEig { values, vectors }
}

/// Flips each eigenvector so that its first non-negligible coordinate is positive.
fn fix_signs(eig: &mut SymEig) {
    let n = eig.values.len();
    for j in 0..n {
        let first = (0..n)
            .map(|i| eig.vectors[(i, j)])
            .find(|x| x.abs() > 1e-12);
        if matches!(first, Some(x) if x < 0.0) {
            for i in 0..n {
                eig.vectors[(i, j)] = -eig.vectors[(i, j)];
            }
        }
    }
}

/// Eigenvalues (descending) and orthonormal eigenvectors of a symmetric matrix.
///
/// Each eigenvector's first non-negligible coordinate is positive so output
/// is deterministic.
pub fn sym_eig(m: &Matrix) -> Result<SymEig> {
    let asym = m.max_asymmetry();
    if asym > SYMMETRY_TOL * m.max_abs() {
        return Err(Error::NotSymmetric(asym));
    }
    let mut a = m.clone();
    a.symmetrize();
    let mut vt = Matrix::identity(m.n);
    jacobi_in_place(&mut a, &mut vt, EIG_REL_TOL);
    let diag = (0..m.n).map(|i| a[(i, i)]).collect();
    let mut eig = sorted_descending(diag, vt);
    fix_signs(&mut eig);
    Ok(eig)
}

/// Nearest PSD matrix in Frobenius norm (negative eigenvalues clipped to zero).
pub fn psd_project(m: &Matrix) -> Result<Matrix> {
    Ok(sym_eig(m)?.reconstruct_with(|l| l.max(0.0)))
}

/// PSD projection that reuses the previous eigenbasis as a starting rotation.
///
/// Successive operator-splitting iterates are close to each other, so the
/// rotated matrix is nearly diagonal and Jacobi finishes in one or two sweeps.
#[derive(Debug, Clone)]
pub struct PsdProjector {
    /// Row `k` is the current `k`-th eigenvector estimate.
    basis_t: Matrix,
    work: Matrix,
}

impl PsdProjector {
    pub fn new(n: usize) -> Self {
        Self {
            basis_t: Matrix::identity(n),
            work: Matrix::zeros(n),
        }
    }

    /// Projects `m` (assumed symmetric) and returns the projection together
    /// with its smallest eigenvalue before clipping.
    pub fn project(&mut self, m: &Matrix) -> (Matrix, f64) {
        let n = m.n;
        let vt = &self.basis_t.data;
        // work = Vt M, rotated = work Vtᵀ; both loops run along rows.
        let work = &mut self.work.data;
        work.iter_mut().for_each(|x| *x = 0.0);
        for i in 0..n {
            let out = &mut work[i * n..(i + 1) * n];
            for k in 0..n {
                let v = vt[i * n + k];
                if v != 0.0 {
                    for (o, x) in out.iter_mut().zip(&m.data[k * n..(k + 1) * n]) {
                        *o += v * x;
                    }
                }
            }
        }
        let mut rotated = Matrix::zeros(n);
        for i in 0..n {
            let wi = &work[i * n..(i + 1) * n];
            for j in i..n {
                let x: f64 = wi.iter().zip(&vt[j * n..(j + 1) * n]).map(|(a, b)| a * b).sum();
                rotated.data[i * n + j] = x;
                rotated.data[j * n + i] = x;
            }
        }
        jacobi_in_place(&mut rotated, &mut self.basis_t, PROJECTION_REL_TOL);
        let values: Vec<f64> = (0..n).map(|i| rotated.data[i * n + i]).collect();
        let lambda_min = values.iter().copied().fold(f64::INFINITY, f64::min);

        // Sum over whichever side of the spectrum has fewer terms.
        let positive = values.iter().filter(|&&l| l > 0.0).count();
        let (mut out, sign) = if positive <= n - positive {
            (Matrix::zeros(n), 1.0)
        } else {
            (m.clone(), -1.0)
        };
        let vt = &self.basis_t.data;
        for (k, &l) in values.iter().enumerate() {
            if (sign > 0.0) != (l > 0.0) {
                continue;
            }
            let vk = &vt[k * n..(k + 1) * n];
            for i in 0..n {
                let f = sign * l * vk[i];
                if f == 0.0 {
                    continue;
                }
                for (o, v) in out.data[i * n + i..(i + 1) * n].iter_mut().zip(&vk[i..]) {
                    *o += f * v;
                }
            }
        }
        for i in 0..n {
            for j in 0..i {
                out.data[i * n + j] = out.data[j * n + i];
            }
        }
        (out, lambda_min)
    }

    /// Re-orthonormalizes the stored basis (modified Gram-Schmidt) to stop
    /// rounding drift over many warm-started projections.
    pub fn reorthonormalize(&mut self) {
        let n = self.basis_t.n;
        let b = &mut self.basis_t.data;
        for j in 0..n {
            let (done, rest) = b.split_at_mut(j * n);
            let row = &mut rest[..n];
            for k in 0..j {
                let other = &done[k * n..(k + 1) * n];
                let dot: f64 = row.iter().zip(other).map(|(a, b)| a * b).sum();
                for (x, o) in row.iter_mut().zip(other) {
                    *x -= dot * o;
                }
            }
            let norm = row.iter().map(|x| x * x).sum::<f64>().sqrt();
            row.iter_mut().for_each(|x| *x /= norm);
        }
    }
}

//! Linear-algebra kernels behind the alignment methods: cosine similarity,
//! a one-sided Jacobi SVD, the closed-form orthogonal Procrustes solution and
//! the orthogonal retraction applied between gradient steps.

use alloc::vec::Vec;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::matrix::{dot, norm, Matrix};
use crate::{Error, Result};

/// Cosine similarity, clamped to `[-1, 1]`.
pub fn cosine(u: &[f64], v: &[f64]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::DimensionMismatch {
            expected: u.len(),
            found: v.len(),
        });
    }
    let (nu, nv) = (norm(u), norm(v));
    if nu == 0.0 || nv == 0.0 {
        return Err(Error::ZeroVector);
    }
    Ok((dot(u, v) / (nu * nv)).clamp(-1.0, 1.0))
}

/// A square linear map `W` taking source-space vectors into the target space.
///
/// Embedding matrices store words as rows, so mapping a whole set is
/// `X * W^T`.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MappingMatrix {
    w: Matrix,
}

impl MappingMatrix {
    pub fn identity(dim: usize) -> Self {
        MappingMatrix {
            w: Matrix::identity(dim),
        }
    }

    pub fn from_matrix(w: Matrix) -> Result<Self> {
        if w.rows() != w.cols() {
            return Err(Error::DimensionMismatch {
                expected: w.rows(),
                found: w.cols(),
            });
        }
        if !w.is_finite() {
            return Err(Error::NonFinite {
                context: "mapping matrix",
            });
        }
        Ok(MappingMatrix { w })
    }

    /// Draws a Haar-distributed random rotation or reflection.
    pub fn random_orthogonal<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Self {
        loop {
            let data = (0..dim * dim).map(|_| rng.sample(StandardNormal)).collect();
            let mut m = Matrix::from_vec(dim, dim, data);
            if orthonormalize_rows(&mut m) {
                return MappingMatrix { w: m };
            }
        }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.w.rows()
    }

    #[inline]
    pub fn matrix(&self) -> &Matrix {
        &self.w
    }

    pub(crate) fn matrix_mut(&mut self) -> &mut Matrix {
        &mut self.w
    }

    pub fn into_matrix(self) -> Matrix {
        self.w
    }

    /// Maps every row of `x`: returns `x * W^T`.
    pub fn apply_rows(&self, x: &Matrix) -> Matrix {
        x.matmul_t(&self.w)
    }

    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        self.w.iter_rows().map(|r| dot(r, v)).collect()
    }

    pub fn transpose(&self) -> MappingMatrix {
        MappingMatrix { w: self.w.transpose() }
    }

    /// `||W W^T - I||_F`
    pub fn orthogonality_error(&self) -> f64 {
        let mut g = self.w.matmul_t(&self.w);
        for i in 0..g.rows() {
            g[(i, i)] -= 1.0;
        }
        g.frobenius_norm()
    }

    pub fn is_orthogonal(&self, tol: f64) -> bool {
        self.orthogonality_error() <= tol
    }
}

/// Gram-Schmidt with one re-orthogonalization pass. Returns `false` when the
/// rows are numerically dependent.
fn orthonormalize_rows(m: &mut Matrix) -> bool {
    let cols = m.cols();
    for i in 0..m.rows() {
        for _ in 0..2 {
            for j in 0..i {
                let (head, tail) = m.as_mut_slice().split_at_mut(i * cols);
                let prev = &head[j * cols..(j + 1) * cols];
                let cur = &mut tail[..cols];
                let p = dot(prev, cur);
                cur.iter_mut().zip(prev).for_each(|(c, q)| *c -= p * q);
            }
        }
        let row = m.row_mut(i);
        let n = norm(row);
        if n < 1e-10 {
            return false;
        }
        row.iter_mut().for_each(|v| *v /= n);
    }
    true
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RetractionConfig {
    beta: f64,
}

impl RetractionConfig {
    pub fn new(beta: f64) -> Result<Self> {
        if !(beta > 0.0 && beta < 1.0) {
            return Err(Error::InvalidConfig {
                field: "beta",
                reason: "must lie strictly between 0 and 1",
            });
        }
        Ok(RetractionConfig { beta })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }
}

impl Default for RetractionConfig {
    fn default() -> Self {
        RetractionConfig { beta: 0.001 }
    }
}

/// `W <- (1 + beta) W - beta (W W^T) W`
pub fn orthogonal_retraction(w: &MappingMatrix, config: RetractionConfig) -> MappingMatrix {
    let beta = config.beta;
    let gram = w.w.matmul_t(&w.w);
    let pulled = gram.matmul(&w.w);
    let mut out = w.w.clone();
    out.scale(1.0 + beta);
    out.add_scaled(-beta, &pulled);
    MappingMatrix { w: out }
}

/// Applies [`orthogonal_retraction`] until `||W W^T - I||_F <= tol` or
/// `max_iterations` passes have run. Returns the result and the number of
/// passes applied.
pub fn retraction_sweep(
    w: &MappingMatrix,
    config: RetractionConfig,
    tol: f64,
    max_iterations: usize,
) -> (MappingMatrix, usize) {
    let mut cur = w.clone();
    for i in 0..max_iterations {
        if cur.orthogonality_error() <= tol {
            return (cur, i);
        }
        cur = orthogonal_retraction(&cur, config);
    }
    (cur, max_iterations)
}

/// Thin singular value decomposition `m = U diag(sigma) V^T`.
///
/// Singular values are non-negative and descending. Each column of `U` has its
/// largest-magnitude entry positive (the matching column of `V` is flipped with
/// it), which makes the factorization deterministic.
#[derive(Clone, Debug)]
pub struct Svd {
    pub u: Matrix,
    pub singular_values: Vec<f64>,
    pub vt: Matrix,
}

impl Svd {
    pub fn reconstruct(&self) -> Matrix {
        let mut us = self.u.clone();
        let r = self.singular_values.len();
        for i in 0..us.rows() {
            let row = us.row_mut(i);
            for (v, s) in row[..r].iter_mut().zip(&self.singular_values) {
                *v *= s;
            }
        }
        us.matmul(&self.vt)
    }
}

const JACOBI_EPS: f64 = 1e-15;
const JACOBI_MAX_SWEEPS: usize = 80;

/// One-sided (Hestenes) Jacobi SVD.
///
/// When a singular value is zero the corresponding columns of `U` are completed
/// to an orthonormal basis, so square inputs always yield orthogonal factors.
pub fn svd(m: &Matrix) -> Result<Svd> {
    if !m.is_finite() {
        return Err(Error::NonFinite { context: "svd input" });
    }
    if m.rows() < m.cols() {
        let t = svd_tall(&m.transpose());
        return Ok(Svd {
            u: t.vt.transpose(),
            singular_values: t.singular_values,
            vt: t.u.transpose(),
        });
    }
    Ok(svd_tall(m))
}

fn svd_tall(m: &Matrix) -> Svd {
    let (rows, n) = m.shape();
    // columns of `m` and of V, each stored as a contiguous row
    let mut cols = m.transpose();
    let mut v = Matrix::identity(n);

    for _ in 0..JACOBI_MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let (a, b, d) = {
                    let cp = cols.row(p);
                    let cq = cols.row(q);
                    (dot(cp, cp), dot(cq, cq), dot(cp, cq))
                };
                if d == 0.0 || libm::fabs(d) <= JACOBI_EPS * libm::sqrt(a * b) {
                    continue;
                }
                rotated = true;
                let zeta = (b - a) / (2.0 * d);
                let t = if zeta >= 0.0 {
                    1.0 / (zeta + libm::sqrt(1.0 + zeta * zeta))
                } else {
                    -1.0 / (-zeta + libm::sqrt(1.0 + zeta * zeta))
                };
                let c = 1.0 / libm::sqrt(1.0 + t * t);
                let s = c * t;
                rotate_rows(&mut cols, p, q, c, s);
                rotate_rows(&mut v, p, q, c, s);
            }
        }
        if !rotated {
            break;
        }
    }

    let mut sigma: Vec<f64> = cols.iter_rows().map(norm).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| sigma[j].total_cmp(&sigma[i]).then(i.cmp(&j)));
    sigma = order.iter().map(|&i| sigma[i]).collect();
    let mut u_cols = cols.select_rows(&order);
    let mut v_cols = v.select_rows(&order);

    let tol = sigma.first().copied().unwrap_or(0.0) * (rows.max(n) as f64) * f64::EPSILON;
    let mut rank = 0;
    for (i, s) in sigma.iter_mut().enumerate() {
        if *s > tol && *s > 0.0 {
            let s = *s;
            u_cols.row_mut(i).iter_mut().for_each(|x| *x /= s);
            rank += 1;
        } else {
            *s = 0.0;
        }
    }
    complete_basis(&mut u_cols, rank);

    for i in 0..n {
        let row = u_cols.row(i);
        let mut best = 0;
        for (j, x) in row.iter().enumerate() {
            if libm::fabs(*x) > libm::fabs(row[best]) {
                best = j;
            }
        }
        if row[best] < 0.0 {
            u_cols.row_mut(i).iter_mut().for_each(|x| *x = -*x);
            v_cols.row_mut(i).iter_mut().for_each(|x| *x = -*x);
        }
    }

    Svd {
        u: u_cols.transpose(),
        singular_values: sigma,
        vt: v_cols,
    }
}

fn rotate_rows(m: &mut Matrix, p: usize, q: usize, c: f64, s: f64) {
    let cols = m.cols();
    let (head, tail) = m.as_mut_slice().split_at_mut(q * cols);
    let rp = &mut head[p * cols..(p + 1) * cols];
    let rq = &mut tail[..cols];
    for (x, y) in rp.iter_mut().zip(rq.iter_mut()) {
        let (xp, xq) = (*x, *y);
        *x = c * xp - s * xq;
        *y = s * xp + c * xq;
    }
}

/// Replaces rows `rank..` of `basis` with unit vectors orthogonal to all
/// earlier rows, drawn from the standard basis.
fn complete_basis(basis: &mut Matrix, rank: usize) {
    let (n, dim) = basis.shape();
    let mut filled = rank;
    let mut candidate = 0;
    while filled < n && candidate < dim {
        let mut e = alloc::vec![0.0; dim];
        e[candidate] = 1.0;
        candidate += 1;
        for _ in 0..2 {
            for j in 0..filled {
                let prev = basis.row(j);
                let p = dot(prev, &e);
                e.iter_mut().zip(prev).for_each(|(x, q)| *x -= p * q);
            }
        }
        let ne = norm(&e);
        if ne > 1e-6 {
            basis
                .row_mut(filled)
                .iter_mut()
                .zip(&e)
                .for_each(|(dst, x)| *dst = x / ne);
            filled += 1;
        }
    }
}

/// Orthogonal Procrustes: the orthogonal `W` minimizing `||X W^T - Y||_F`,
/// with anchor pairs stored as matching rows of `x_anchors` and `y_anchors`.
///
/// With words as rows the cross-covariance is `M = Y^T X`; for
/// `M = U S V^T` the minimizer is `W = U V^T`.
pub fn procrustes_solve(x_anchors: &Matrix, y_anchors: &Matrix) -> Result<MappingMatrix> {
    if x_anchors.rows() == 0 {
        return Err(Error::TooFewPairs { found: 0, required: 1 });
    }
    if x_anchors.rows() != y_anchors.rows() {
        return Err(Error::DimensionMismatch {
            expected: x_anchors.rows(),
            found: y_anchors.rows(),
        });
    }
    if x_anchors.cols() != y_anchors.cols() {
        return Err(Error::DimensionMismatch {
            expected: x_anchors.cols(),
            found: y_anchors.cols(),
        });
    }
    let cross = y_anchors.t_matmul(x_anchors);
    if !cross.is_finite() {
        return Err(Error::NonFinite {
            context: "procrustes anchors",
        });
    }
    if cross.frobenius_norm() == 0.0 {
        return Err(Error::DegenerateAnchors);
    }
    let f = svd(&cross)?;
    Ok(MappingMatrix { w: f.u.matmul(&f.vt) })
}

//! Small dense complex linear algebra used by the subspace estimator.
//!
//! Only what ESPRIT needs: a one-sided Jacobi SVD, a subspace iteration for
//! the leading left singular vectors of large Hankel matrices (matrix-vector
//! products through the FFT), a pseudo-inverse solve, and eigenvalues of a
//! small non-Hermitian matrix by shifted QR on the Hessenberg form.

use std::sync::Arc as Shared;

use num_complex::Complex;
use num_traits::{One, Zero};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rustfft::{Fft, FftPlanner};

use crate::scalar::Real;

/// Column-major complex matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct CMat<T> {
    rows: usize,
    cols: usize,
    data: Vec<Complex<T>>,
}

impl<T: Real> CMat<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![Complex::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Complex::one();
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex<T>) -> Self {
        let mut m = Self::zeros(rows, cols);
        for c in 0..cols {
            for r in 0..rows {
                m[(r, c)] = f(r, c);
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn col(&self, c: usize) -> &[Complex<T>] {
        &self.data[c * self.rows..(c + 1) * self.rows]
    }

    pub fn col_mut(&mut self, c: usize) -> &mut [Complex<T>] {
        &mut self.data[c * self.rows..(c + 1) * self.rows]
    }

    /// Mutable views of two distinct columns.
    fn col_pair_mut(&mut self, p: usize, q: usize) -> (&mut [Complex<T>], &mut [Complex<T>]) {
        assert!(p < q);
        let (head, tail) = self.data.split_at_mut(q * self.rows);
        (&mut head[p * self.rows..(p + 1) * self.rows], &mut tail[..self.rows])
    }

    /// Rows `range` of every column.
    pub fn row_block(&self, start: usize, len: usize) -> Self {
        Self::from_fn(len, self.cols, |r, c| self[(start + r, c)])
    }

    pub fn columns(&self, cols: usize) -> Self {
        Self { rows: self.rows, cols, data: self.data[..cols * self.rows].to_vec() }
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| self[(c, r)].conj())
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "dimension mismatch");
        let mut out = Self::zeros(self.rows, other.cols);
        for c in 0..other.cols {
            for k in 0..self.cols {
                let b = other[(k, c)];
                if b.is_zero() {
                    continue;
                }
                let a = self.col(k);
                for (o, &x) in out.col_mut(c).iter_mut().zip(a) {
                    *o = *o + x * b;
                }
            }
        }
        out
    }

    pub fn frobenius_norm(&self) -> T {
        self.data.iter().fold(T::zero(), |acc, z| acc + z.norm_sqr()).sqrt()
    }
}

impl<T> std::ops::Index<(usize, usize)> for CMat<T> {
    type Output = Complex<T>;
    fn index(&self, (r, c): (usize, usize)) -> &Complex<T> {
        &self.data[c * self.rows + r]
    }
}

impl<T> std::ops::IndexMut<(usize, usize)> for CMat<T> {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut Complex<T> {
        &mut self.data[c * self.rows + r]
    }
}

fn dot<T: Real>(a: &[Complex<T>], b: &[Complex<T>]) -> Complex<T> {
    a.iter().zip(b).fold(Complex::zero(), |acc, (x, y)| acc + x.conj() * y)
}

fn norm<T: Real>(a: &[Complex<T>]) -> T {
    a.iter().fold(T::zero(), |acc, z| acc + z.norm_sqr()).sqrt()
}

/// Thin singular value decomposition `A = U diag(s) V^H`, singular values
/// sorted descending.
#[derive(Clone, Debug)]
pub struct Svd<T> {
    pub u: CMat<T>,
    pub s: Vec<T>,
    pub v: CMat<T>,
}

/// One-sided (Hestenes) Jacobi SVD.
///
/// Each returned left singular vector is phase-normalized so that its first
/// non-negligible component is real and positive; the matching right vector
/// gets the same phase.
pub fn jacobi_svd<T: Real>(a: &CMat<T>) -> Svd<T> {
    let (m, n) = (a.rows, a.cols);
    let mut w = a.clone();
    let mut v = CMat::identity(n);
    let eps = T::epsilon();
    let tol = eps * T::from_usize_lossy(m.max(1));
    for _sweep in 0..60 {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let alpha = norm(w.col(p)).powi(2);
                let beta = norm(w.col(q)).powi(2);
                let gamma = dot(w.col(p), w.col(q));
                let g = gamma.norm();
                if g == T::zero() || g <= tol * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (T::lit(2.0) * g);
                let t = zeta.signum() / (zeta.abs() + (T::one() + zeta * zeta).sqrt());
                let c = T::one() / (T::one() + t * t).sqrt();
                let s = c * t;
                // Rotate (a_p, e^{-i phi} a_q) by the real Jacobi rotation.
                let phase = (gamma / g).conj();
                rotate_cols(&mut w, p, q, c, s, phase);
                rotate_cols(&mut v, p, q, c, s, phase);
            }
        }
        if !rotated {
            break;
        }
    }
    let mut order: Vec<(usize, T)> = (0..n).map(|j| (j, norm(w.col(j)))).collect();
    order.sort_by(|x, y| y.1.partial_cmp(&x.1).expect("finite singular values"));
    let smax = order.first().map_or(T::zero(), |x| x.1);
    let mut u = CMat::zeros(m, n);
    let mut vs = CMat::zeros(n, n);
    let mut s = Vec::with_capacity(n);
    for (dst, &(src, sigma)) in order.iter().enumerate() {
        s.push(sigma);
        let mut vc: Vec<Complex<T>> = v.col(src).to_vec();
        if sigma > T::zero() {
            let mut uc: Vec<Complex<T>> = w.col(src).iter().map(|z| z / sigma).collect();
            let cut = T::lit(1e-8) * norm(&uc).max(T::min_positive_value());
            if let Some(lead) = uc.iter().find(|z| z.norm() > cut).copied() {
                let fix = (lead / lead.norm()).conj();
                uc.iter_mut().for_each(|z| *z = *z * fix);
                vc.iter_mut().for_each(|z| *z = *z * fix);
            }
            u.col_mut(dst).copy_from_slice(&uc);
        } else if smax == T::zero() && dst < m {
            u[(dst, dst)] = Complex::one();
        }
        vs.col_mut(dst).copy_from_slice(&vc);
    }
    Svd { u, s, v: vs }
}

fn rotate_cols<T: Real>(m: &mut CMat<T>, p: usize, q: usize, c: T, s: T, phase: Complex<T>) {
    let (cp, cq) = m.col_pair_mut(p, q);
    for (x, y) in cp.iter_mut().zip(cq.iter_mut()) {
        let yq = *y * phase;
        let nx = *x * c - yq * s;
        let ny = *x * s + yq * c;
        *x = nx;
        *y = ny;
    }
}

/// Square Hankel matrix `H[r][c] = y[r + c]` of order `(y.len() + 1) / 2`,
/// applied through FFT-based correlation.
pub struct Hankel<T: Real> {
    order: usize,
    y: Vec<Complex<T>>,
    len: usize,
    y_hat: Vec<Complex<T>>,
    fwd: Shared<dyn Fft<T>>,
    inv: Shared<dyn Fft<T>>,
}

impl<T: Real> Hankel<T> {
    pub fn new(y: &[Complex<T>]) -> Self {
        assert!(y.len() % 2 == 1, "Hankel generator must have odd length");
        let order = (y.len() + 1) / 2;
        let len = (3 * order).next_power_of_two();
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(len);
        let inv = planner.plan_fft_inverse(len);
        let mut y_hat = vec![Complex::zero(); len];
        y_hat[..y.len()].copy_from_slice(y);
        fwd.process(&mut y_hat);
        Self { order, y: y.to_vec(), len, y_hat, fwd, inv }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn dense(&self) -> CMat<T> {
        CMat::from_fn(self.order, self.order, |r, c| self.y[r + c])
    }

    /// `H x`.
    pub fn apply(&self, x: &[Complex<T>]) -> Vec<Complex<T>> {
        let n = self.order;
        let mut buf = vec![Complex::zero(); self.len];
        for (c, &v) in x.iter().enumerate() {
            buf[n - 1 - c] = v;
        }
        self.fwd.process(&mut buf);
        for (b, &h) in buf.iter_mut().zip(&self.y_hat) {
            *b = *b * h;
        }
        self.inv.process(&mut buf);
        let scale = T::one() / T::from_usize_lossy(self.len);
        buf[n - 1..2 * n - 1].iter().map(|z| z * scale).collect()
    }

    /// `H^H x`; the matrix is complex symmetric, so `H^H x = conj(H conj(x))`.
    pub fn apply_adjoint(&self, x: &[Complex<T>]) -> Vec<Complex<T>> {
        let xc: Vec<Complex<T>> = x.iter().map(|z| z.conj()).collect();
        self.apply(&xc).into_iter().map(|z| z.conj()).collect()
    }
}

/// Orders up to this use the dense Jacobi SVD directly.
const DENSE_SVD_MAX_ORDER: usize = 128;
const OVERSAMPLE: usize = 8;

/// Leading `rank` left singular vectors (and all computed singular values)
/// of the Hankel matrix generated by `y`.
pub fn hankel_leading_subspace<T: Real>(y: &[Complex<T>], rank: usize) -> (CMat<T>, Vec<T>) {
    let hankel = Hankel::new(y);
    let n = hankel.order();
    assert!(rank >= 1 && rank <= n, "requested rank out of range");
    if n <= DENSE_SVD_MAX_ORDER {
        let svd = jacobi_svd(&hankel.dense());
        return (svd.u.columns(rank), svd.s);
    }
    let block = (rank + OVERSAMPLE).min(n);
    // Deterministic Gaussian start block.
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_4a4e);
    let mut q = CMat::from_fn(n, block, |_, _| {
        let re: f64 = StandardNormal.sample(&mut rng);
        let im: f64 = StandardNormal.sample(&mut rng);
        Complex::new(T::lit(re), T::lit(im))
    });
    q = apply_block(&hankel, &q, false);
    orthonormalize(&mut q);
    let mut prev: Vec<T> = Vec::new();
    for _ in 0..300 {
        let mut z = apply_block(&hankel, &q, true);
        orthonormalize(&mut z);
        let mut next = apply_block(&hankel, &z, false);
        let ritz: Vec<T> = (0..block).map(|j| norm(next.col(j))).collect();
        orthonormalize(&mut next);
        q = next;
        let converged = !prev.is_empty()
            && ritz
                .iter()
                .zip(&prev)
                .take(rank)
                .all(|(a, b)| (*a - *b).abs() <= T::lit(1e3) * T::epsilon() * ritz[0]);
        prev = ritz;
        if converged {
            break;
        }
    }
    // Rayleigh-Ritz: H ≈ Q (Q^H H) and (Q^H H)^H = H^H Q = W Σ X^H.
    let bh = apply_block(&hankel, &q, true);
    let svd = jacobi_svd(&bh);
    let u = q.matmul(&svd.v);
    let mut u = u.columns(rank);
    for j in 0..rank {
        let col = u.col_mut(j);
        let cut = T::lit(1e-8);
        if let Some(lead) = col.iter().find(|z| z.norm() > cut).copied() {
            let fix = (lead / lead.norm()).conj();
            col.iter_mut().for_each(|z| *z = *z * fix);
        }
    }
    (u, svd.s)
}

fn apply_block<T: Real>(h: &Hankel<T>, x: &CMat<T>, adjoint: bool) -> CMat<T> {
    let mut out = CMat::zeros(h.order(), x.cols());
    for j in 0..x.cols() {
        let y = if adjoint { h.apply_adjoint(x.col(j)) } else { h.apply(x.col(j)) };
        out.col_mut(j).copy_from_slice(&y);
    }
    out
}

/// Modified Gram-Schmidt applied twice; columns that vanish are left zero.
fn orthonormalize<T: Real>(m: &mut CMat<T>) {
    for _ in 0..2 {
        for j in 0..m.cols() {
            for i in 0..j {
                let (qi, qj) = m.col_pair_mut(i, j);
                let r = dot(qi, qj);
                for (a, b) in qj.iter_mut().zip(qi.iter()) {
                    *a = *a - *b * r;
                }
            }
            let col = m.col_mut(j);
            let nrm = norm(col);
            if nrm > T::zero() {
                col.iter_mut().for_each(|z| *z = *z / nrm);
            }
        }
    }
}

/// `pinv(a) b` through the SVD of `a`, discarding singular values below
/// `T::RANK_CUTOFF` times the largest.
pub fn pinv_solve<T: Real>(a: &CMat<T>, b: &CMat<T>) -> CMat<T> {
    let svd = jacobi_svd(a);
    let smax = svd.s.first().copied().unwrap_or(T::zero());
    let cutoff = T::lit(T::RANK_CUTOFF) * smax;
    let uh_b = svd.u.adjoint().matmul(b);
    let mut scaled = CMat::zeros(a.cols(), b.cols());
    for (i, &sigma) in svd.s.iter().enumerate() {
        if sigma > cutoff && sigma > T::zero() {
            for c in 0..b.cols() {
                scaled[(i, c)] = uh_b[(i, c)] / sigma;
            }
        }
    }
    svd.v.matmul(&scaled)
}

/// Rotation `[[c, s], [-conj(s), c]]` with real `c` mapping `(x, y)` to `(r, 0)`.
fn givens<T: Real>(x: Complex<T>, y: Complex<T>) -> (T, Complex<T>) {
    let ax = x.norm();
    let r = (x.norm_sqr() + y.norm_sqr()).sqrt();
    if r == T::zero() {
        (T::one(), Complex::zero())
    } else if ax == T::zero() {
        (T::zero(), Complex::one())
    } else {
        (ax / r, (x / ax) * y.conj() / r)
    }
}

fn rotate_rows<T: Real>(a: &mut CMat<T>, i: usize, j: usize, c: T, s: Complex<T>, cols: std::ops::Range<usize>) {
    for k in cols {
        let (x, y) = (a[(i, k)], a[(j, k)]);
        a[(i, k)] = x * c + s * y;
        a[(j, k)] = -s.conj() * x + y * c;
    }
}

fn rotate_cols_adj<T: Real>(a: &mut CMat<T>, i: usize, j: usize, c: T, s: Complex<T>, rows: std::ops::Range<usize>) {
    for k in rows {
        let (x, y) = (a[(k, i)], a[(k, j)]);
        a[(k, i)] = x * c + s.conj() * y;
        a[(k, j)] = -s * x + y * c;
    }
}

/// Eigenvalues of a square complex matrix, in no particular order.
pub fn eigenvalues<T: Real>(a: &CMat<T>) -> Vec<Complex<T>> {
    let n = a.rows();
    assert_eq!(n, a.cols(), "eigenvalues need a square matrix");
    let mut h = a.clone();
    // Reduce to upper Hessenberg form by Givens similarities.
    for k in 0..n.saturating_sub(2) {
        for i in (k + 2..n).rev() {
            let (c, s) = givens(h[(i - 1, k)], h[(i, k)]);
            rotate_rows(&mut h, i - 1, i, c, s, 0..n);
            rotate_cols_adj(&mut h, i - 1, i, c, s, 0..n);
            h[(i, k)] = Complex::zero();
        }
    }
    let eps = T::epsilon();
    let mut out = vec![Complex::zero(); n];
    if n == 0 {
        return out;
    }
    let mut hi = n - 1;
    let mut iter = 0usize;
    loop {
        if hi == 0 {
            out[0] = h[(0, 0)];
            break;
        }
        // Locate the start of the active unreduced block.
        let mut lo = hi;
        while lo > 0 {
            let scale = h[(lo - 1, lo - 1)].norm() + h[(lo, lo)].norm();
            let scale = if scale == T::zero() { T::one() } else { scale };
            if h[(lo, lo - 1)].norm() <= eps * scale {
                h[(lo, lo - 1)] = Complex::zero();
                break;
            }
            lo -= 1;
        }
        if lo == hi {
            out[hi] = h[(hi, hi)];
            hi -= 1;
            iter = 0;
            continue;
        }
        iter += 1;
        assert!(iter < 1000, "QR iteration failed to converge");
        let shift = if iter % 11 == 0 {
            // Exceptional shift to break cycles.
            h[(hi, hi)] + Complex::new(h[(hi, hi - 1)].norm() * T::lit(0.75), T::zero())
        } else {
            wilkinson_shift(h[(hi - 1, hi - 1)], h[(hi - 1, hi)], h[(hi, hi - 1)], h[(hi, hi)])
        };
        for k in lo..=hi {
            h[(k, k)] = h[(k, k)] - shift;
        }
        let mut rots = Vec::with_capacity(hi - lo);
        for k in lo..hi {
            let (c, s) = givens(h[(k, k)], h[(k + 1, k)]);
            rotate_rows(&mut h, k, k + 1, c, s, k..hi + 1);
            h[(k + 1, k)] = Complex::zero();
            rots.push((k, c, s));
        }
        for (k, c, s) in rots {
            rotate_cols_adj(&mut h, k, k + 1, c, s, lo..(k + 2).min(hi) + 1);
        }
        for k in lo..=hi {
            h[(k, k)] = h[(k, k)] + shift;
        }
    }
    out
}

/// Eigenvalue of `[[a, b], [c, d]]` closest to `d`.
fn wilkinson_shift<T: Real>(a: Complex<T>, b: Complex<T>, c: Complex<T>, d: Complex<T>) -> Complex<T> {
    let two = T::lit(2.0);
    let half_tr = (a + d) / two;
    let det = a * d - b * c;
    let disc = (half_tr * half_tr - det).sqrt();
    let (l1, l2) = (half_tr + disc, half_tr - disc);
    if (l1 - d).norm() <= (l2 - d).norm() {
        l1
    } else {
        l2
    }
}

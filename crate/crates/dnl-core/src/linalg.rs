//! Minimal dense real linear algebra for vectors in R^n and square
//! matrices in R^{n×n}, including the spectral norm used throughout the
//! regularizers and envelope bounds.
//!
//! Everything is 64-bit, row-major and immutable after construction; the
//! dimensions stay small (n ≤ 32), so no attempt is made at BLAS-level
//! performance.

use crate::error::{Error, Result};

/// Relative tolerance for power-iteration convergence (iterate step or
/// eigen-residual).
const POWER_ITERATION_TOL: f64 = 1e-12;
/// Iteration cap for the plain power method (deflation path).
const POWER_ITERATION_MAX: usize = 10_000;
/// Plain iterations before switching to squaring acceleration.
const PLAIN_ITERATION_BUDGET: usize = 64;
/// Squarings of the Gram matrix; 2^40 effective iterations in the worst
/// case, far beyond any gap the tolerance can resolve.
const SQUARING_BUDGET: usize = 40;

/// A fixed-length real vector.
#[derive(Clone, Debug, PartialEq)]
pub struct Vector {
    data: Vec<f64>,
}

impl Vector {
    pub fn new(data: Vec<f64>) -> Self {
        assert!(!data.is_empty(), "vector length must be >= 1");
        Vector { data }
    }

    pub fn zeros(n: usize) -> Self {
        Vector::new(vec![0.0; n])
    }

    /// Standard basis vector e_i (zero-based index).
    pub fn basis(n: usize, i: usize) -> Self {
        let mut v = vec![0.0; n];
        v[i] = 1.0;
        Vector::new(v)
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn get(&self, i: usize) -> f64 {
        self.data[i]
    }

    pub fn set(&mut self, i: usize, value: f64) {
        self.data[i] = value;
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    pub fn dot(&self, other: &Vector) -> f64 {
        debug_assert_eq!(self.len(), other.len());
        self.data
            .iter()
            .zip(other.data.iter())
            .map(|(a, b)| a * b)
            .sum()
    }

    /// Euclidean norm |v|.
    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn inf_norm(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn add(&self, other: &Vector) -> Vector {
        debug_assert_eq!(self.len(), other.len());
        Vector::new(
            self.data
                .iter()
                .zip(other.data.iter())
                .map(|(a, b)| a + b)
                .collect(),
        )
    }

    pub fn sub(&self, other: &Vector) -> Vector {
        debug_assert_eq!(self.len(), other.len());
        Vector::new(
            self.data
                .iter()
                .zip(other.data.iter())
                .map(|(a, b)| a - b)
                .collect(),
        )
    }

    pub fn scale(&self, alpha: f64) -> Vector {
        Vector::new(self.data.iter().map(|x| alpha * x).collect())
    }

    pub fn add_assign(&mut self, other: &Vector) {
        debug_assert_eq!(self.len(), other.len());
        for (a, b) in self.data.iter_mut().zip(other.data.iter()) {
            *a += b;
        }
    }

    /// self += alpha * other
    pub fn add_scaled(&mut self, alpha: f64, other: &Vector) {
        debug_assert_eq!(self.len(), other.len());
        for (a, b) in self.data.iter_mut().zip(other.data.iter()) {
            *a += alpha * b;
        }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Vector {
        Vector::new(self.data.iter().map(|&x| f(x)).collect())
    }
}

/// A dense square matrix, stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix {
    n: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn new(n: usize, data: Vec<f64>) -> Self {
        assert!(n >= 1, "matrix dimension must be >= 1");
        assert_eq!(data.len(), n * n, "matrix data must have n*n entries");
        Matrix { n, data }
    }

    pub fn zeros(n: usize) -> Self {
        Matrix::new(n, vec![0.0; n * n])
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    pub fn diagonal(entries: &[f64]) -> Self {
        let mut m = Matrix::zeros(entries.len());
        for (i, &d) in entries.iter().enumerate() {
            m.set(i, i, d);
        }
        m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        self.data[i * self.n + j] = value;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    pub fn matvec(&self, v: &Vector) -> Vector {
        debug_assert_eq!(self.n, v.len());
        let mut out = vec![0.0; self.n];
        for i in 0..self.n {
            let row = &self.data[i * self.n..(i + 1) * self.n];
            out[i] = row
                .iter()
                .zip(v.as_slice().iter())
                .map(|(a, b)| a * b)
                .sum();
        }
        Vector::new(out)
    }

    /// Aᵀ v without forming the transpose.
    pub fn matvec_transpose(&self, v: &Vector) -> Vector {
        debug_assert_eq!(self.n, v.len());
        let mut out = vec![0.0; self.n];
        for i in 0..self.n {
            let vi = v.get(i);
            let row = &self.data[i * self.n..(i + 1) * self.n];
            for (o, a) in out.iter_mut().zip(row.iter()) {
                *o += a * vi;
            }
        }
        Vector::new(out)
    }

    pub fn add(&self, other: &Matrix) -> Matrix {
        debug_assert_eq!(self.n, other.n);
        Matrix::new(
            self.n,
            self.data
                .iter()
                .zip(other.data.iter())
                .map(|(a, b)| a + b)
                .collect(),
        )
    }

    pub fn sub(&self, other: &Matrix) -> Matrix {
        debug_assert_eq!(self.n, other.n);
        Matrix::new(
            self.n,
            self.data
                .iter()
                .zip(other.data.iter())
                .map(|(a, b)| a - b)
                .collect(),
        )
    }

    pub fn scale(&self, alpha: f64) -> Matrix {
        Matrix::new(self.n, self.data.iter().map(|x| alpha * x).collect())
    }

    pub fn add_assign(&mut self, other: &Matrix) {
        debug_assert_eq!(self.n, other.n);
        for (a, b) in self.data.iter_mut().zip(other.data.iter()) {
            *a += b;
        }
    }

    /// self += alpha * other
    pub fn add_scaled(&mut self, alpha: f64, other: &Matrix) {
        debug_assert_eq!(self.n, other.n);
        for (a, b) in self.data.iter_mut().zip(other.data.iter()) {
            *a += alpha * b;
        }
    }

    /// self += alpha * u vᵀ
    pub fn add_scaled_outer(&mut self, alpha: f64, u: &Vector, v: &Vector) {
        debug_assert_eq!(self.n, u.len());
        debug_assert_eq!(self.n, v.len());
        for i in 0..self.n {
            let ui = alpha * u.get(i);
            let row = &mut self.data[i * self.n..(i + 1) * self.n];
            for (r, vj) in row.iter_mut().zip(v.as_slice().iter()) {
                *r += ui * vj;
            }
        }
    }

    pub fn matmul(&self, other: &Matrix) -> Matrix {
        debug_assert_eq!(self.n, other.n);
        let n = self.n;
        let mut out = Matrix::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let aik = self.get(i, k);
                if aik == 0.0 {
                    continue;
                }
                for j in 0..n {
                    out.data[i * n + j] += aik * other.get(k, j);
                }
            }
        }
        out
    }

    /// Gram matrix AᵀA.
    pub fn gram(&self) -> Matrix {
        let n = self.n;
        let mut g = Matrix::zeros(n);
        for i in 0..n {
            for j in i..n {
                let mut s = 0.0;
                for k in 0..n {
                    s += self.get(k, i) * self.get(k, j);
                }
                g.set(i, j, s);
                g.set(j, i, s);
            }
        }
        g
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }
}

/// Largest singular value of `m`, by power iteration on mᵀm.
///
/// The start vector is the normalized all-ones vector; if that lies in the
/// null space of mᵀm the standard basis vectors are tried in order. The
/// iteration stops when successive Rayleigh-quotient estimates agree to a
/// relative 1e-12, or after 10 000 iterations.
pub fn spectral_norm(m: &Matrix) -> Result<f64> {
    if !m.is_finite() {
        return Err(Error::InvalidInput(
            "spectral_norm: non-finite matrix entries".into(),
        ));
    }
    Ok(spectral_norm_unchecked(m))
}

pub(crate) fn spectral_norm_unchecked(m: &Matrix) -> f64 {
    spectral_norm_with_vectors(m).0
}

/// Spectral norm together with the leading singular pair (σ, u, v), where
/// m v = σ u. For σ = 0 the returned vectors are zero.
///
/// The pair is what the regularizer gradients need: ∂‖m‖₂/∂m = u vᵀ away
/// from repeated leading singular values.
///
/// Power iteration on b = mᵀm, in two phases: a short plain loop that
/// handles healthy eigenvalue gaps, then repeated squaring of b (the same
/// iteration sampled at exponentially spaced indices) for matrices whose
/// leading gap is small. Convergence is a stabilized iterate or a
/// vanishing eigen-residual at relative 1e-12.
pub(crate) fn spectral_norm_with_vectors(m: &Matrix) -> (f64, Vector, Vector) {
    let n = m.n();
    let b = m.gram();
    let scale = b.max_abs();
    if scale == 0.0 {
        return (0.0, Vector::zeros(n), Vector::zeros(n));
    }
    let null_tol = scale * 1e-300_f64.max(f64::MIN_POSITIVE);

    // Deterministic start: all-ones normalized, falling back to basis
    // vectors when the candidate sits in the null space of b.
    let mut start = None;
    let ones = Vector::new(vec![1.0 / (n as f64).sqrt(); n]);
    let mut candidates = vec![ones.clone()];
    for i in 0..n {
        candidates.push(Vector::basis(n, i));
    }
    for cand in &candidates {
        if b.matvec(cand).norm() > null_tol {
            start = Some(cand.clone());
            break;
        }
    }
    let Some(mut v) = start else {
        return (0.0, Vector::zeros(n), Vector::zeros(n));
    };
    v = v.scale(1.0 / v.norm());

    // The leading eigenvalue dominates every diagonal entry; a converged
    // Rayleigh quotient below that is a sub-dominant eigenvector (possible
    // for structured matrices whose dominant eigenspace is orthogonal to
    // the start), which phase 2 resolves with the full candidate set.
    let diag_floor = (0..n).map(|i| b.get(i, i)).fold(0.0_f64, f64::max);
    let converged = |lambda: f64, step: f64, residual: f64| {
        (step <= POWER_ITERATION_TOL || residual <= POWER_ITERATION_TOL * lambda)
            && lambda >= diag_floor * (1.0 - 1e-12)
    };

    let mut done = false;
    for _ in 0..PLAIN_ITERATION_BUDGET {
        let bv = b.matvec(&v);
        let bv_norm = bv.norm();
        if bv_norm <= null_tol {
            return (0.0, Vector::zeros(n), Vector::zeros(n));
        }
        let rayleigh = v.dot(&bv);
        let mut residual = bv.clone();
        residual.add_scaled(-rayleigh, &v);
        let v_next = bv.scale(1.0 / bv_norm);
        let step = v_next.sub(&v).norm();
        v = v_next;
        if converged(rayleigh, step, residual.norm()) {
            done = true;
            break;
        }
    }

    if !done {
        // Squaring phase: p ← (b/‖b‖)^(2^k). Every candidate start is
        // pushed through p and the best Rayleigh quotient wins, so an
        // unlucky start cannot select a sub-dominant eigenpair.
        let mut p = b.scale(1.0 / scale);
        for _ in 0..SQUARING_BUDGET {
            p = p.matmul(&p);
            let p_scale = p.max_abs();
            if p_scale <= f64::MIN_POSITIVE {
                break;
            }
            p = p.scale(1.0 / p_scale);

            let mut best: Option<(f64, Vector)> = None;
            for cand in &candidates {
                let pv = p.matvec(cand);
                let pv_norm = pv.norm();
                if pv_norm <= f64::MIN_POSITIVE {
                    continue;
                }
                let w = pv.scale(1.0 / pv_norm);
                let rayleigh = w.dot(&b.matvec(&w));
                if best.as_ref().map(|(r, _)| rayleigh > *r).unwrap_or(true) {
                    best = Some((rayleigh, w));
                }
            }
            let Some((rayleigh, w)) = best else { break };
            let bw = b.matvec(&w);
            let mut residual = bw.clone();
            residual.add_scaled(-rayleigh, &w);
            v = w;
            if rayleigh >= diag_floor * (1.0 - 1e-12)
                && residual.norm() <= POWER_ITERATION_TOL * rayleigh
            {
                break;
            }
        }
    }

    let lambda = v.dot(&b.matvec(&v));
    let sigma = lambda.max(0.0).sqrt();
    if sigma == 0.0 {
        return (0.0, Vector::zeros(n), Vector::zeros(n));
    }
    let u = m.matvec(&v).scale(1.0 / sigma);
    (sigma, u, v)
}

/// Second-largest singular value, by deflated power iteration. Used only to
/// detect (near-)repeated leading singular values for the gradient fallback.
pub(crate) fn second_singular_value(m: &Matrix) -> f64 {
    let (sigma1, _, v1) = spectral_norm_with_vectors(m);
    if sigma1 == 0.0 {
        return 0.0;
    }
    let n = m.n();
    if n < 2 {
        return 0.0;
    }
    let b = m.gram();
    // Deflate: b' = b - sigma1² v1 v1ᵀ, then power-iterate b'.
    let mut bd = b.clone();
    bd.add_scaled_outer(-sigma1 * sigma1, &v1, &v1);
    let scale = bd.max_abs();
    if scale == 0.0 {
        return 0.0;
    }
    // Start from the candidate with the largest component orthogonal to
    // v1; some basis vector always keeps at least 1/√n of its norm.
    let mut v = Vector::zeros(n);
    let mut best_norm = 0.0;
    let ones = Vector::new(vec![1.0 / (n as f64).sqrt(); n]);
    for cand in std::iter::once(ones).chain((0..n).map(|i| Vector::basis(n, i))) {
        let mut w = cand;
        w.add_scaled(-w.dot(&v1), &v1);
        let w_norm = w.norm();
        if w_norm > best_norm {
            best_norm = w_norm;
            v = w;
        }
    }
    if best_norm == 0.0 {
        return 0.0;
    }
    v = v.scale(1.0 / best_norm);
    for _ in 0..POWER_ITERATION_MAX {
        let mut bv = bd.matvec(&v);
        bv.add_scaled(-bv.dot(&v1), &v1);
        let bv_norm = bv.norm();
        if bv_norm <= scale * f64::MIN_POSITIVE {
            return 0.0;
        }
        let rayleigh = v.dot(&bv);
        let mut residual = bv.clone();
        residual.add_scaled(-rayleigh, &v);
        let v_next = bv.scale(1.0 / bv_norm);
        let step = v_next.sub(&v).norm();
        v = v_next;
        if step <= POWER_ITERATION_TOL || residual.norm() <= POWER_ITERATION_TOL * rayleigh.abs() {
            break;
        }
    }
    v.dot(&bd.matvec(&v)).max(0.0).sqrt()
}

/// The affine map Σ_k (M^k x^k + v^k) over a sequence of matrix-vector
/// pairs applied to matching inputs.
pub fn affine_map(pairs: &[(Matrix, Vector)], inputs: &[Vector]) -> Result<Vector> {
    if pairs.is_empty() || pairs.len() != inputs.len() {
        return Err(Error::DimensionMismatch(format!(
            "affine_map: {} pairs vs {} inputs",
            pairs.len(),
            inputs.len()
        )));
    }
    let n = inputs[0].len();
    for ((m, v), x) in pairs.iter().zip(inputs.iter()) {
        if m.n() != n || v.len() != n || x.len() != n {
            return Err(Error::DimensionMismatch(
                "affine_map: inconsistent dimensions".into(),
            ));
        }
    }
    let mut out = Vector::zeros(n);
    for ((m, v), x) in pairs.iter().zip(inputs.iter()) {
        out.add_assign(&m.matvec(x));
        out.add_assign(v);
    }
    Ok(out)
}

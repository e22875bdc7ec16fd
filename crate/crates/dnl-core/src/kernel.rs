//! The parametrized non-local transformation A_κ with its three concrete
//! kernel instances, plus the closed-form growth and Lipschitz envelopes
//! that certify the local growth/Lipschitz conditions for each variant.
//!
//! A_κ(Ξ; z)[i] = (1/Normalize[i]) Σ_j κ((Ξ₁z)[i], (Ξ₂z)[j]) · (Ξ₃z)[j]
//! with Normalize[i] = Σ_j κ((Ξ₁z)[i], (Ξ₂z)[j]).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{spectral_norm_unchecked, Matrix, Vector};

/// The transform parameter triple Ξ = (Ξ₁, Ξ₂, Ξ₃).
#[derive(Clone, Debug, PartialEq)]
pub struct TransformParams {
    pub xi1: Matrix,
    pub xi2: Matrix,
    pub xi3: Matrix,
}

impl TransformParams {
    pub fn new(xi1: Matrix, xi2: Matrix, xi3: Matrix) -> Self {
        assert_eq!(xi1.n(), xi2.n());
        assert_eq!(xi1.n(), xi3.n());
        TransformParams { xi1, xi2, xi3 }
    }

    pub fn n(&self) -> usize {
        self.xi1.n()
    }

    pub fn is_finite(&self) -> bool {
        self.xi1.is_finite() && self.xi2.is_finite() && self.xi3.is_finite()
    }

    /// max over the three blocks of their spectral norms.
    pub fn max_block_norm(&self) -> f64 {
        spectral_norm_unchecked(&self.xi1)
            .max(spectral_norm_unchecked(&self.xi2))
            .max(spectral_norm_unchecked(&self.xi3))
    }
}

/// The kernel variant selecting the concrete non-local transformation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KernelFamily {
    /// κ = δ_ij: a plain linear map z ↦ Ξ₃z (the DenseNet case).
    Kronecker,
    /// κ = exp((Ξ₁z)[i]·(Ξ₂z)[j]/√n): self-attention.
    ScaledDotSoftmax,
    /// κ = exp(z[i]·z[j]), independent of Ξ₁, Ξ₂: the Gaussian non-local
    /// operator.
    GaussianSoftmax,
}

impl KernelFamily {
    pub const ALL: [KernelFamily; 3] = [
        KernelFamily::Kronecker,
        KernelFamily::ScaledDotSoftmax,
        KernelFamily::GaussianSoftmax,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            KernelFamily::Kronecker => "kronecker",
            KernelFamily::ScaledDotSoftmax => "scaled-dot-softmax",
            KernelFamily::GaussianSoftmax => "gaussian-softmax",
        }
    }
}

fn check_apply_inputs(params: &TransformParams, z: &Vector) -> Result<()> {
    if params.n() != z.len() {
        return Err(Error::DimensionMismatch(format!(
            "apply_transform: params are {}x{} but z has length {}",
            params.n(),
            params.n(),
            z.len()
        )));
    }
    if !params.is_finite() || !z.is_finite() {
        return Err(Error::InvalidInput(
            "apply_transform: non-finite input".into(),
        ));
    }
    Ok(())
}

/// Evaluate A_κ(Ξ; z) for the selected kernel variant.
///
/// Softmax rows subtract their maximum logit before exponentiating; this
/// leaves the normalized sum unchanged and keeps the normalizer in [1, n]
/// for finite logits.
pub fn apply_transform(
    kernel: KernelFamily,
    params: &TransformParams,
    z: &Vector,
) -> Result<Vector> {
    check_apply_inputs(params, z)?;
    match kernel {
        KernelFamily::Kronecker => Ok(params.xi3.matvec(z)),
        KernelFamily::ScaledDotSoftmax => {
            let u = params.xi1.matvec(z);
            let v = params.xi2.matvec(z);
            let y = params.xi3.matvec(z);
            let inv_sqrt_n = 1.0 / (z.len() as f64).sqrt();
            softmax_aggregate(z.len(), |i, j| u.get(i) * v.get(j) * inv_sqrt_n, &y)
        }
        KernelFamily::GaussianSoftmax => {
            let y = params.xi3.matvec(z);
            softmax_aggregate(z.len(), |i, j| z.get(i) * z.get(j), &y)
        }
    }
}

/// out[i] = Σ_j softmax_j(logit(i, ·)) y[j]
fn softmax_aggregate(n: usize, logit: impl Fn(usize, usize) -> f64, y: &Vector) -> Result<Vector> {
    let mut out = Vector::zeros(n);
    let mut row = vec![0.0; n];
    for i in 0..n {
        let mut max_logit = f64::NEG_INFINITY;
        for (j, r) in row.iter_mut().enumerate() {
            *r = logit(i, j);
            max_logit = max_logit.max(*r);
        }
        let mut normalizer = 0.0;
        let mut acc = 0.0;
        for (j, r) in row.iter().enumerate() {
            let w = (r - max_logit).exp();
            normalizer += w;
            acc += w * y.get(j);
        }
        if !normalizer.is_finite() || normalizer <= f64::EPSILON {
            return Err(Error::DegenerateNormalizer { position: i });
        }
        out.set(i, acc / normalizer);
    }
    Ok(out)
}

/// The growth envelope G_A(Ξ) certifying |A_κ(Ξ, z)| ≤ G_A(Ξ)·|z|.
pub fn growth_bound(kernel: KernelFamily, params: &TransformParams) -> Result<f64> {
    if !params.is_finite() {
        return Err(Error::InvalidInput("growth_bound: non-finite params".into()));
    }
    let xi3_norm = spectral_norm_unchecked(&params.xi3);
    Ok(match kernel {
        KernelFamily::Kronecker => xi3_norm,
        KernelFamily::ScaledDotSoftmax | KernelFamily::GaussianSoftmax => {
            (params.n() as f64).sqrt() * xi3_norm
        }
    })
}

/// The Lipschitz envelope 𝓛_A(Ξ, z, z′) certifying
/// |A_κ(Ξ, z) − A_κ(Ξ′, z′)| ≤ 𝓛_A(Ξ, z, z′)·(Σᵢ‖Ξᵢ − Ξ′ᵢ‖ + |z − z′|).
pub fn lipschitz_bound(
    kernel: KernelFamily,
    params: &TransformParams,
    z: &Vector,
    z_prime: &Vector,
) -> Result<f64> {
    if !params.is_finite() || !z.is_finite() || !z_prime.is_finite() {
        return Err(Error::InvalidInput(
            "lipschitz_bound: non-finite input".into(),
        ));
    }
    let sqrt_n = (params.n() as f64).sqrt();
    let zn = z.norm();
    let zpn = z_prime.norm();
    Ok(match kernel {
        KernelFamily::Kronecker => spectral_norm_unchecked(&params.xi3) + zpn,
        KernelFamily::ScaledDotSoftmax => {
            let xi = params.max_block_norm();
            let candidates = [
                xi.powi(2) * zn.powi(3),
                xi.powi(3) * (zn.powi(2) + zn * zpn) + xi,
                xi.powi(2) * zn.powi(2) * zpn,
                zpn,
            ];
            sqrt_n * candidates.iter().fold(0.0_f64, |m, &c| m.max(c))
        }
        KernelFamily::GaussianSoftmax => {
            let xi = params.max_block_norm();
            let first = xi * zn * (zn + zpn) + sqrt_n * xi;
            let second = sqrt_n * zpn;
            first.max(second)
        }
    })
}

/// Forward record sufficient to backpropagate through one A_κ evaluation.
#[derive(Clone, Debug)]
pub(crate) enum TransformTape {
    Kronecker {
        z: Vector,
    },
    ScaledDot {
        z: Vector,
        u: Vector,
        v: Vector,
        y: Vector,
        softmax: Matrix,
    },
    Gaussian {
        z: Vector,
        y: Vector,
        softmax: Matrix,
    },
}

/// Cotangents of one A_κ evaluation with respect to its parameter triple
/// and its vector input.
#[derive(Clone, Debug)]
pub(crate) struct TransformGrad {
    pub xi1: Matrix,
    pub xi2: Matrix,
    pub xi3: Matrix,
    pub z: Vector,
}

/// Like `apply_transform`, but additionally records the softmax weights
/// needed by the reverse pass. The value path mirrors `apply_transform`
/// operation for operation, so both produce bit-identical outputs.
pub(crate) fn apply_transform_taped(
    kernel: KernelFamily,
    params: &TransformParams,
    z: &Vector,
) -> Result<(Vector, TransformTape)> {
    check_apply_inputs(params, z)?;
    match kernel {
        KernelFamily::Kronecker => Ok((
            params.xi3.matvec(z),
            TransformTape::Kronecker { z: z.clone() },
        )),
        KernelFamily::ScaledDotSoftmax => {
            let u = params.xi1.matvec(z);
            let v = params.xi2.matvec(z);
            let y = params.xi3.matvec(z);
            let inv_sqrt_n = 1.0 / (z.len() as f64).sqrt();
            let (out, softmax) =
                softmax_aggregate_taped(z.len(), |i, j| u.get(i) * v.get(j) * inv_sqrt_n, &y)?;
            Ok((
                out,
                TransformTape::ScaledDot {
                    z: z.clone(),
                    u,
                    v,
                    y,
                    softmax,
                },
            ))
        }
        KernelFamily::GaussianSoftmax => {
            let y = params.xi3.matvec(z);
            let (out, softmax) =
                softmax_aggregate_taped(z.len(), |i, j| z.get(i) * z.get(j), &y)?;
            Ok((
                out,
                TransformTape::Gaussian {
                    z: z.clone(),
                    y,
                    softmax,
                },
            ))
        }
    }
}

fn softmax_aggregate_taped(
    n: usize,
    logit: impl Fn(usize, usize) -> f64,
    y: &Vector,
) -> Result<(Vector, Matrix)> {
    let mut out = Vector::zeros(n);
    let mut softmax = Matrix::zeros(n);
    let mut row = vec![0.0; n];
    for i in 0..n {
        let mut max_logit = f64::NEG_INFINITY;
        for (j, r) in row.iter_mut().enumerate() {
            *r = logit(i, j);
            max_logit = max_logit.max(*r);
        }
        let mut normalizer = 0.0;
        let mut acc = 0.0;
        for (j, r) in row.iter().enumerate() {
            let w = (r - max_logit).exp();
            normalizer += w;
            acc += w * y.get(j);
        }
        if !normalizer.is_finite() || normalizer <= f64::EPSILON {
            return Err(Error::DegenerateNormalizer { position: i });
        }
        out.set(i, acc / normalizer);
        for (j, r) in row.iter().enumerate() {
            softmax.set(i, j, (r - max_logit).exp() / normalizer);
        }
    }
    Ok((out, softmax))
}

/// Row-wise softmax VJP: given S and the cotangent S̄, returns the logit
/// cotangent ē with ē_ij = S_ij (S̄_ij − Σ_{j'} S̄_ij' S_ij').
fn softmax_rows_vjp(softmax: &Matrix, sbar: &Matrix) -> Matrix {
    let n = softmax.n();
    let mut ebar = Matrix::zeros(n);
    for i in 0..n {
        let mut row_dot = 0.0;
        for j in 0..n {
            row_dot += sbar.get(i, j) * softmax.get(i, j);
        }
        for j in 0..n {
            ebar.set(i, j, softmax.get(i, j) * (sbar.get(i, j) - row_dot));
        }
    }
    ebar
}

/// Reverse-mode step through one A_κ evaluation: maps the output cotangent
/// to cotangents of (Ξ₁, Ξ₂, Ξ₃, z).
pub(crate) fn transform_vjp(
    params: &TransformParams,
    tape: &TransformTape,
    cotangent: &Vector,
) -> TransformGrad {
    let n = params.n();
    match tape {
        TransformTape::Kronecker { z } => {
            let mut xi3 = Matrix::zeros(n);
            xi3.add_scaled_outer(1.0, cotangent, z);
            TransformGrad {
                xi1: Matrix::zeros(n),
                xi2: Matrix::zeros(n),
                xi3,
                z: params.xi3.matvec_transpose(cotangent),
            }
        }
        TransformTape::ScaledDot { z, u, v, y, softmax } => {
            let ybar = softmax.matvec_transpose(cotangent);
            let mut sbar = Matrix::zeros(n);
            sbar.add_scaled_outer(1.0, cotangent, y);
            let ebar = softmax_rows_vjp(softmax, &sbar);
            let inv_sqrt_n = 1.0 / (n as f64).sqrt();
            let ubar = ebar.matvec(v).scale(inv_sqrt_n);
            let vbar = ebar.matvec_transpose(u).scale(inv_sqrt_n);
            let mut xi1 = Matrix::zeros(n);
            xi1.add_scaled_outer(1.0, &ubar, z);
            let mut xi2 = Matrix::zeros(n);
            xi2.add_scaled_outer(1.0, &vbar, z);
            let mut xi3 = Matrix::zeros(n);
            xi3.add_scaled_outer(1.0, &ybar, z);
            let mut zbar = params.xi1.matvec_transpose(&ubar);
            zbar.add_assign(&params.xi2.matvec_transpose(&vbar));
            zbar.add_assign(&params.xi3.matvec_transpose(&ybar));
            TransformGrad { xi1, xi2, xi3, z: zbar }
        }
        TransformTape::Gaussian { z, y, softmax } => {
            let ybar = softmax.matvec_transpose(cotangent);
            let mut sbar = Matrix::zeros(n);
            sbar.add_scaled_outer(1.0, cotangent, y);
            let ebar = softmax_rows_vjp(softmax, &sbar);
            let mut xi3 = Matrix::zeros(n);
            xi3.add_scaled_outer(1.0, &ybar, z);
            // e_ij = z_i z_j: z̄ = ē z + ēᵀ z plus the value-map path.
            let mut zbar = params.xi3.matvec_transpose(&ybar);
            zbar.add_assign(&ebar.matvec(z));
            zbar.add_assign(&ebar.matvec_transpose(z));
            TransformGrad {
                xi1: Matrix::zeros(n),
                xi2: Matrix::zeros(n),
                xi3,
                z: zbar,
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn identity_params(n: usize) -> TransformParams {
        TransformParams::new(Matrix::identity(n), Matrix::identity(n), Matrix::identity(n))
    }

    #[test]
    fn kronecker_is_value_map() {
        let z = Vector::new(vec![1.0, -2.0, 0.5]);
        let out = apply_transform(KernelFamily::Kronecker, &identity_params(3), &z).unwrap();
        assert_eq!(out, z);
    }

    #[test]
    fn single_position_softmax_is_identity_weight() {
        // n = 1: the softmax of a single logit is 1, so A = Ξ₃ z.
        let p = TransformParams::new(
            Matrix::new(1, vec![3.7]),
            Matrix::new(1, vec![-1.2]),
            Matrix::new(1, vec![2.5]),
        );
        let z = Vector::new(vec![0.8]);
        let out = apply_transform(KernelFamily::ScaledDotSoftmax, &p, &z).unwrap();
        assert!((out.get(0) - 2.5 * 0.8).abs() < 1e-15);
    }

    #[test]
    fn softmax_shift_invariance() {
        // Adding a constant to every logit of a row leaves the normalized
        // sum unchanged; the gaussian kernel realizes the shift by scaling
        // exp(z_i z_j) rows, so compare against a manual double loop with a
        // shifted exponent.
        let n = 4;
        let p = TransformParams::new(
            Matrix::identity(n),
            Matrix::identity(n),
            Matrix::new(n, (0..16).map(|k| 0.1 * k as f64 - 0.7).collect()),
        );
        let z = Vector::new(vec![0.3, -0.8, 1.1, 0.2]);
        let out = apply_transform(KernelFamily::GaussianSoftmax, &p, &z).unwrap();
        let y = p.xi3.matvec(&z);
        let shift = 3.21;
        for i in 0..n {
            let mut normalizer = 0.0;
            let mut acc = 0.0;
            for j in 0..n {
                let w = (z.get(i) * z.get(j) + shift).exp();
                normalizer += w;
                acc += w * y.get(j);
            }
            assert!((out.get(i) - acc / normalizer).abs() < 1e-12);
        }
    }

    #[test]
    fn degenerate_normalizer_from_overflow() {
        let p = identity_params(2);
        let z = Vector::new(vec![1e200, -1e200]);
        let err = apply_transform(KernelFamily::GaussianSoftmax, &p, &z).unwrap_err();
        assert!(matches!(err, Error::DegenerateNormalizer { .. }));
    }

    #[test]
    fn growth_bound_values() {
        let p = TransformParams::new(
            Matrix::zeros(3),
            Matrix::zeros(3),
            Matrix::identity(3).scale(2.0),
        );
        assert!((growth_bound(KernelFamily::Kronecker, &p).unwrap() - 2.0).abs() < 1e-12);

        let p4 = TransformParams::new(Matrix::zeros(4), Matrix::zeros(4), Matrix::identity(4));
        assert!((growth_bound(KernelFamily::ScaledDotSoftmax, &p4).unwrap() - 2.0).abs() < 1e-12);

        let z3 = TransformParams::new(Matrix::zeros(3), Matrix::zeros(3), Matrix::zeros(3));
        assert_eq!(growth_bound(KernelFamily::GaussianSoftmax, &z3).unwrap(), 0.0);
    }

    #[test]
    fn lipschitz_bound_values() {
        let p = identity_params(3);
        let z = Vector::new(vec![0.4, 0.1, -0.2]);
        let lb =
            lipschitz_bound(KernelFamily::Kronecker, &p, &z, &Vector::zeros(3)).unwrap();
        assert!((lb - 1.0).abs() < 1e-12);

        // Gaussian with Ξ = 0 and |z'| = 2 in n = 4: max{0, √n·|z'|} = 4.
        let zero4 = TransformParams::new(Matrix::zeros(4), Matrix::zeros(4), Matrix::zeros(4));
        let z4 = Vector::new(vec![0.5, -1.0, 0.25, 0.1]);
        let zp = Vector::new(vec![2.0, 0.0, 0.0, 0.0]);
        let lb = lipschitz_bound(KernelFamily::GaussianSoftmax, &zero4, &z4, &zp).unwrap();
        assert!((lb - 4.0).abs() < 1e-12);

        // Scaled-dot with everything zero: every max-term vanishes.
        let lb = lipschitz_bound(
            KernelFamily::ScaledDotSoftmax,
            &zero4,
            &z4,
            &Vector::zeros(4),
        )
        .unwrap();
        assert_eq!(lb, 0.0);
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let p = identity_params(3);
        let z = Vector::new(vec![1.0, 2.0]);
        assert!(apply_transform(KernelFamily::Kronecker, &p, &z).is_err());
    }

    #[test]
    fn taped_value_matches_plain_bitwise() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(31);
        for kernel in KernelFamily::ALL {
            for _ in 0..20 {
                let n = 3;
                let mk = |rng: &mut rand_chacha::ChaCha8Rng| {
                    Matrix::new(n, (0..n * n).map(|_| rng.gen_range(-1.0..1.0)).collect())
                };
                let p = TransformParams::new(mk(&mut rng), mk(&mut rng), mk(&mut rng));
                let z = Vector::new((0..n).map(|_| rng.gen_range(-1.0..1.0)).collect());
                let plain = apply_transform(kernel, &p, &z).unwrap();
                let (taped, _) = apply_transform_taped(kernel, &p, &z).unwrap();
                assert_eq!(plain, taped);
            }
        }
    }

    #[test]
    fn vjp_matches_finite_differences() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(77);
        let n = 3;
        let h = 1e-6;
        for kernel in KernelFamily::ALL {
            let mk = |rng: &mut rand_chacha::ChaCha8Rng| {
                Matrix::new(n, (0..n * n).map(|_| rng.gen_range(-0.8..0.8)).collect())
            };
            let p = TransformParams::new(mk(&mut rng), mk(&mut rng), mk(&mut rng));
            let z = Vector::new((0..n).map(|_| rng.gen_range(-0.8..0.8)).collect());
            let cot = Vector::new((0..n).map(|_| rng.gen_range(-1.0..1.0)).collect());
            let (_, tape) = apply_transform_taped(kernel, &p, &z).unwrap();
            let grad = transform_vjp(&p, &tape, &cot);

            // scalar objective f = cot · A_κ(Ξ; z)
            let eval = |p: &TransformParams, z: &Vector| -> f64 {
                cot.dot(&apply_transform(kernel, p, z).unwrap())
            };
            // z direction
            for i in 0..n {
                let mut zp = z.clone();
                zp.set(i, z.get(i) + h);
                let mut zm = z.clone();
                zm.set(i, z.get(i) - h);
                let fd = (eval(&p, &zp) - eval(&p, &zm)) / (2.0 * h);
                assert!(
                    (fd - grad.z.get(i)).abs() < 1e-7,
                    "{}: z[{i}] fd {fd} vs {}",
                    kernel.name(),
                    grad.z.get(i)
                );
            }
            // a few matrix entries of each block
            for (block, gblock) in [(&p.xi1, &grad.xi1), (&p.xi2, &grad.xi2), (&p.xi3, &grad.xi3)] {
                for (i, j) in [(0, 0), (1, 2), (2, 1)] {
                    let mut pp = p.clone();
                    let mut pm = p.clone();
                    let target_p = if std::ptr::eq(block, &p.xi1) {
                        (&mut pp.xi1, &mut pm.xi1)
                    } else if std::ptr::eq(block, &p.xi2) {
                        (&mut pp.xi2, &mut pm.xi2)
                    } else {
                        (&mut pp.xi3, &mut pm.xi3)
                    };
                    target_p.0.set(i, j, block.get(i, j) + h);
                    target_p.1.set(i, j, block.get(i, j) - h);
                    let fd = (eval(&pp, &z) - eval(&pm, &z)) / (2.0 * h);
                    assert!(
                        (fd - gblock.get(i, j)).abs() < 1e-7,
                        "{}: block entry ({i},{j}) fd {fd} vs {}",
                        kernel.name(),
                        gblock.get(i, j)
                    );
                }
            }
        }
    }
}

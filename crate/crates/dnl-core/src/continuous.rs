//! The continuous-time system: a nonlinear Volterra-type integral equation
//!
//! x(t) = V(t) φ(U(t) A_κ(T(t); d) + a(t)
//!               + ∫₀ᵗ [W(t,s) A_κ(T(t); x(s)) + c(t,s)] ds) + b(t)
//!
//! on [0,1], solved by causal marching on a uniform grid. Because x(t)
//! appears explicitly outside the integral and the integral only covers
//! [0,t], marching is exact structure-exploitation; no general-purpose
//! solver is needed.
//!
//! Two quadrature schemes are provided. The left-rectangle rule takes the
//! state at the left node of each subinterval and the kernel surface at the
//! right node, which makes it coincide with the discrete network layer by
//! layer on piecewise-constant-extended parameters. The trapezoid rule is
//! the second-order reference scheme; its endpoint involves x(t_j) itself
//! and is resolved by a per-step fixed point iteration.

use std::sync::Arc;

use crate::discrete::SystemConfig;
use crate::error::{Error, Result};
use crate::kernel::{apply_transform, growth_bound, TransformParams};
use crate::linalg::{spectral_norm_unchecked, Matrix, Vector};
use crate::numfmt::sig17;

/// Grid resolution used to approximate sup norms in the a-priori bound.
const SUP_NORM_GRID: usize = 4096;
/// Per-axis resolution for surface sup norms (about 4096 grid points).
const SUP_NORM_SURFACE_GRID: usize = 64;

const FIXED_POINT_TOL: f64 = 1e-12;
const FIXED_POINT_MAX_ITERS: usize = 50;

/// A matrix-valued parameter curve on [0,1] with an analytic derivative.
pub trait MatrixCurve: Send + Sync {
    fn value(&self, t: f64) -> Matrix;
    fn deriv(&self, t: f64) -> Matrix;
}

/// A vector-valued parameter curve on [0,1] with an analytic derivative.
pub trait VectorCurve: Send + Sync {
    fn value(&self, t: f64) -> Vector;
    fn deriv(&self, t: f64) -> Vector;
}

/// A matrix-valued surface on [0,1]², symmetric in (t,s), with analytic
/// partial derivatives.
pub trait MatrixSurface: Send + Sync {
    fn value(&self, t: f64, s: f64) -> Matrix;
    fn deriv_t(&self, t: f64, s: f64) -> Matrix;
    fn deriv_s(&self, t: f64, s: f64) -> Matrix;
}

/// A vector-valued surface on [0,1]², symmetric in (t,s).
pub trait VectorSurface: Send + Sync {
    fn value(&self, t: f64, s: f64) -> Vector;
    fn deriv_t(&self, t: f64, s: f64) -> Vector;
    fn deriv_s(&self, t: f64, s: f64) -> Vector;
}

pub struct ConstantMatrixCurve(pub Matrix);

impl MatrixCurve for ConstantMatrixCurve {
    fn value(&self, _t: f64) -> Matrix {
        self.0.clone()
    }
    fn deriv(&self, _t: f64) -> Matrix {
        Matrix::zeros(self.0.n())
    }
}

pub struct ConstantVectorCurve(pub Vector);

impl VectorCurve for ConstantVectorCurve {
    fn value(&self, _t: f64) -> Vector {
        self.0.clone()
    }
    fn deriv(&self, _t: f64) -> Vector {
        Vector::zeros(self.0.len())
    }
}

pub struct ConstantMatrixSurface(pub Matrix);

impl MatrixSurface for ConstantMatrixSurface {
    fn value(&self, _t: f64, _s: f64) -> Matrix {
        self.0.clone()
    }
    fn deriv_t(&self, _t: f64, _s: f64) -> Matrix {
        Matrix::zeros(self.0.n())
    }
    fn deriv_s(&self, _t: f64, _s: f64) -> Matrix {
        Matrix::zeros(self.0.n())
    }
}

pub struct ConstantVectorSurface(pub Vector);

impl VectorSurface for ConstantVectorSurface {
    fn value(&self, _t: f64, _s: f64) -> Vector {
        self.0.clone()
    }
    fn deriv_t(&self, _t: f64, _s: f64) -> Vector {
        Vector::zeros(self.0.len())
    }
    fn deriv_s(&self, _t: f64, _s: f64) -> Vector {
        Vector::zeros(self.0.len())
    }
}

/// The continuous parameter pack Θ = (T, U, a, V, b, W, c).
#[derive(Clone)]
pub struct ContinuousParams {
    pub n: usize,
    pub t1: Arc<dyn MatrixCurve>,
    pub t2: Arc<dyn MatrixCurve>,
    pub t3: Arc<dyn MatrixCurve>,
    pub u: Arc<dyn MatrixCurve>,
    pub a: Arc<dyn VectorCurve>,
    pub v: Arc<dyn MatrixCurve>,
    pub b: Arc<dyn VectorCurve>,
    pub w: Arc<dyn MatrixSurface>,
    pub c: Arc<dyn VectorSurface>,
}

impl ContinuousParams {
    /// Constant-in-time parameters; W and c constants are trivially
    /// symmetric.
    pub fn constant(
        t: [Matrix; 3],
        u: Matrix,
        a: Vector,
        v: Matrix,
        b: Vector,
        w: Matrix,
        c: Vector,
    ) -> Self {
        let n = u.n();
        let [t1, t2, t3] = t;
        ContinuousParams {
            n,
            t1: Arc::new(ConstantMatrixCurve(t1)),
            t2: Arc::new(ConstantMatrixCurve(t2)),
            t3: Arc::new(ConstantMatrixCurve(t3)),
            u: Arc::new(ConstantMatrixCurve(u)),
            a: Arc::new(ConstantVectorCurve(a)),
            v: Arc::new(ConstantMatrixCurve(v)),
            b: Arc::new(ConstantVectorCurve(b)),
            w: Arc::new(ConstantMatrixSurface(w)),
            c: Arc::new(ConstantVectorSurface(c)),
        }
    }

    pub fn transform_at(&self, t: f64) -> TransformParams {
        TransformParams::new(self.t1.value(t), self.t2.value(t), self.t3.value(t))
    }
}

/// Quadrature rule used by the marching solver.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scheme {
    LeftRectangle,
    Trapezoid,
}

impl Scheme {
    pub fn name(&self) -> &'static str {
        match self {
            Scheme::LeftRectangle => "left-rectangle",
            Scheme::Trapezoid => "trapezoid",
        }
    }
}

/// Solution values on a uniform grid.
#[derive(Clone, Debug)]
pub struct GridSolution {
    pub times: Vec<f64>,
    pub states: Vec<Vector>,
    pub scheme: Scheme,
}

impl GridSolution {
    pub fn steps(&self) -> usize {
        self.times.len() - 1
    }

    pub fn max_norm(&self) -> f64 {
        self.states.iter().fold(0.0, |m, x| m.max(x.norm()))
    }

    /// Value at an arbitrary time by linear interpolation between nodes.
    pub fn interpolate(&self, t: f64) -> Vector {
        let steps = self.steps();
        let pos = (t.clamp(0.0, 1.0) * steps as f64).floor() as usize;
        let k = pos.min(steps - 1);
        let tau = 1.0 / steps as f64;
        let theta = (t - self.times[k]) / tau;
        let mut out = self.states[k].scale(1.0 - theta);
        out.add_scaled(theta, &self.states[k + 1]);
        out
    }

    /// CSV export with columns t, x_1..x_n.
    pub fn to_csv_string(&self) -> String {
        let n = self.states[0].len();
        let mut out = String::from("t");
        for i in 1..=n {
            out.push_str(&format!(",x_{i}"));
        }
        out.push_str("\r\n");
        for (t, x) in self.times.iter().zip(self.states.iter()) {
            out.push_str(&sig17(*t));
            for i in 0..n {
                out.push(',');
                out.push_str(&sig17(x.get(i)));
            }
            out.push_str("\r\n");
        }
        out
    }
}

fn output_step(
    sys: &SystemConfig,
    v_t: &Matrix,
    b_t: &Vector,
    pre: &Vector,
) -> Vector {
    let h = sys.activation.apply(pre);
    let mut x = v_t.matvec(&h);
    x.add_assign(b_t);
    x
}

/// March the integral equation on a uniform grid with `steps` intervals.
pub fn solve(
    sys: &SystemConfig,
    params: &ContinuousParams,
    d: &Vector,
    steps: usize,
    scheme: Scheme,
) -> Result<GridSolution> {
    if steps < 1 {
        return Err(Error::InvalidInput("solve: steps must be >= 1".into()));
    }
    if params.n != sys.n || d.len() != sys.n {
        return Err(Error::DimensionMismatch(format!(
            "solve: n = {} but params n = {} and input length {}",
            sys.n,
            params.n,
            d.len()
        )));
    }
    let tau = 1.0 / steps as f64;
    let times: Vec<f64> = (0..=steps).map(|j| j as f64 / steps as f64).collect();
    let mut states: Vec<Vector> = Vec::with_capacity(steps + 1);

    for j in 0..=steps {
        let t = times[j];
        let transform = params.transform_at(t);
        let a_d = apply_transform(sys.kernel, &transform, d)?;
        let v_t = params.v.value(t);
        let b_t = params.b.value(t);
        let mut pre = params.u.value(t).matvec(&a_d);
        pre.add_assign(&params.a.value(t));

        let x = if j == 0 {
            output_step(sys, &v_t, &b_t, &pre)
        } else {
            match scheme {
                Scheme::LeftRectangle => {
                    // Mirrors the discrete layer update: state at the left
                    // node, kernel surface at the right node of each
                    // subinterval (exact for piecewise-constant surfaces).
                    let mut acc = Vector::zeros(sys.n);
                    for (k, state) in states.iter().enumerate().take(j) {
                        let a_x = apply_transform(sys.kernel, &transform, state)?;
                        acc.add_assign(&params.w.value(t, times[k + 1]).matvec(&a_x));
                        acc.add_assign(&params.c.value(t, times[k + 1]));
                    }
                    pre.add_scaled(tau, &acc);
                    output_step(sys, &v_t, &b_t, &pre)
                }
                Scheme::Trapezoid => {
                    let transformed: Vec<Vector> = states
                        .iter()
                        .take(j)
                        .map(|state| apply_transform(sys.kernel, &transform, state))
                        .collect::<Result<_>>()?;
                    // Fixed part: composite trapezoid over nodes 0..j-1.
                    let mut acc = Vector::zeros(sys.n);
                    for (k, a_x) in transformed.iter().enumerate() {
                        let weight = if k == 0 { 0.5 } else { 1.0 };
                        let mut term = params.w.value(t, times[k]).matvec(a_x);
                        term.add_assign(&params.c.value(t, times[k]));
                        acc.add_scaled(weight, &term);
                    }
                    // Endpoint term involves x(t_j); iterate to a fixed
                    // point starting from the left-rectangle predictor.
                    let w_end = params.w.value(t, t);
                    let c_end = params.c.value(t, t);
                    let predictor = {
                        let mut acc_lr = Vector::zeros(sys.n);
                        for (k, a_x) in transformed.iter().enumerate() {
                            acc_lr.add_assign(&params.w.value(t, times[k + 1]).matvec(a_x));
                            acc_lr.add_assign(&params.c.value(t, times[k + 1]));
                        }
                        let mut pre_lr = pre.clone();
                        pre_lr.add_scaled(tau, &acc_lr);
                        output_step(sys, &v_t, &b_t, &pre_lr)
                    };
                    let mut x_iter = predictor;
                    let mut converged = false;
                    for _ in 0..FIXED_POINT_MAX_ITERS {
                        let a_end = apply_transform(sys.kernel, &transform, &x_iter)?;
                        let mut end_term = w_end.matvec(&a_end);
                        end_term.add_assign(&c_end);
                        let mut pre_j = pre.clone();
                        pre_j.add_scaled(tau, &acc);
                        pre_j.add_scaled(0.5 * tau, &end_term);
                        let x_next = output_step(sys, &v_t, &b_t, &pre_j);
                        let delta = x_next.sub(&x_iter).inf_norm();
                        x_iter = x_next;
                        if delta < FIXED_POINT_TOL {
                            converged = true;
                            break;
                        }
                    }
                    if !converged {
                        return Err(Error::SolverStall { t });
                    }
                    x_iter
                }
            }
        };
        if !x.is_finite() {
            return Err(Error::Overflow { layer: j });
        }
        states.push(x);
    }
    Ok(GridSolution {
        times,
        states,
        scheme,
    })
}

/// Defect of the integral equation: max over grid points of
/// |x(t_j) − RHS(t_j)|, where the right-hand side is re-evaluated with
/// composite trapezoid quadrature on a grid refined by `fine_factor` and
/// the state linearly interpolated between solution nodes.
pub fn residual(
    sys: &SystemConfig,
    params: &ContinuousParams,
    d: &Vector,
    sol: &GridSolution,
    fine_factor: usize,
) -> Result<f64> {
    if fine_factor < 1 {
        return Err(Error::InvalidInput("residual: fine_factor must be >= 1".into()));
    }
    let steps = sol.steps();
    let tau = 1.0 / steps as f64;
    let fine_h = tau / fine_factor as f64;
    let mut max_defect: f64 = 0.0;

    for j in 0..=steps {
        let t = sol.times[j];
        let transform = params.transform_at(t);
        let a_d = apply_transform(sys.kernel, &transform, d)?;
        let mut pre = params.u.value(t).matvec(&a_d);
        pre.add_assign(&params.a.value(t));
        if j > 0 {
            let fine_nodes = j * fine_factor;
            let mut acc = Vector::zeros(sys.n);
            for i in 0..=fine_nodes {
                let s = (i as f64 * fine_h).min(t);
                let xs = sol.interpolate(s);
                let a_x = apply_transform(sys.kernel, &transform, &xs)?;
                let mut term = params.w.value(t, s).matvec(&a_x);
                term.add_assign(&params.c.value(t, s));
                let weight = if i == 0 || i == fine_nodes { 0.5 } else { 1.0 };
                acc.add_scaled(weight, &term);
            }
            pre.add_scaled(fine_h, &acc);
        }
        let rhs = output_step(sys, &params.v.value(t), &params.b.value(t), &pre);
        max_defect = max_defect.max(sol.states[j].sub(&rhs).norm());
    }
    Ok(max_defect)
}

/// The a-priori bound on |x(t)|:
///
/// [L_φ ‖V‖_C (M̂ ‖U‖_C |d| + ‖a‖_C + ‖c‖_∞) + ‖b‖_C] · exp(L_φ M̂ ‖V‖_C ‖W‖_∞)
///
/// with M̂ = sup_t G_A(T(t)). Sup norms are approximated by maxima over a
/// fixed grid (4097 samples for curves, 65×65 for surfaces).
pub fn cont_bound(sys: &SystemConfig, params: &ContinuousParams, d: &Vector) -> Result<f64> {
    let lphi = sys.activation.lipschitz();
    let mut m_hat: f64 = 0.0;
    let mut u_norm: f64 = 0.0;
    let mut v_norm: f64 = 0.0;
    let mut a_norm: f64 = 0.0;
    let mut b_norm: f64 = 0.0;
    for i in 0..=SUP_NORM_GRID {
        let t = i as f64 / SUP_NORM_GRID as f64;
        m_hat = m_hat.max(growth_bound(sys.kernel, &params.transform_at(t))?);
        u_norm = u_norm.max(spectral_norm_unchecked(&params.u.value(t)));
        v_norm = v_norm.max(spectral_norm_unchecked(&params.v.value(t)));
        a_norm = a_norm.max(params.a.value(t).norm());
        b_norm = b_norm.max(params.b.value(t).norm());
    }
    let mut w_norm: f64 = 0.0;
    let mut c_norm: f64 = 0.0;
    for i in 0..=SUP_NORM_SURFACE_GRID {
        let t = i as f64 / SUP_NORM_SURFACE_GRID as f64;
        for k in 0..=SUP_NORM_SURFACE_GRID {
            let s = k as f64 / SUP_NORM_SURFACE_GRID as f64;
            w_norm = w_norm.max(spectral_norm_unchecked(&params.w.value(t, s)));
            c_norm = c_norm.max(params.c.value(t, s).norm());
        }
    }
    let base = lphi * v_norm * (m_hat * u_norm * d.norm() + a_norm + c_norm) + b_norm;
    Ok(base * (lphi * m_hat * v_norm * w_norm).exp())
}

fn trapezoid_weight(i: usize, n: usize) -> f64 {
    if i == 0 || i == n {
        0.5
    } else {
        1.0
    }
}

/// The continuous regularizer
///
/// R(Θ) = Σ_j ‖T_j‖²_{H¹} + ‖U‖²_{H¹} + ‖a‖²_{H¹} + ‖V‖²_{H¹} + ‖b‖²_{H¹}
///        + ‖W‖³_{W^{1,3}} + ‖c‖³_{W^{1,3}}
///
/// with ‖f‖²_{H¹} = ∫(‖f‖² + ‖𝒟_t f‖²) and
/// ‖g‖³_{W^{1,3}} = ∫∫(‖g‖³ + ‖𝒟_t g‖³ + ‖𝒟_s g‖³), spectral norms for
/// matrix values and euclidean for vectors, computed by composite
/// (tensor-)trapezoid quadrature with `n_quad` intervals per axis using the
/// analytic derivative evaluators.
pub fn reg_continuous(params: &ContinuousParams, n_quad: usize) -> f64 {
    assert!(n_quad >= 1);
    let h = 1.0 / n_quad as f64;

    let matrix_h1 = |curve: &Arc<dyn MatrixCurve>| -> f64 {
        let mut total = 0.0;
        for i in 0..=n_quad {
            let t = i as f64 / n_quad as f64;
            let w = trapezoid_weight(i, n_quad);
            total += w
                * (spectral_norm_unchecked(&curve.value(t)).powi(2)
                    + spectral_norm_unchecked(&curve.deriv(t)).powi(2));
        }
        total * h
    };
    let vector_h1 = |curve: &Arc<dyn VectorCurve>| -> f64 {
        let mut total = 0.0;
        for i in 0..=n_quad {
            let t = i as f64 / n_quad as f64;
            let w = trapezoid_weight(i, n_quad);
            total += w * (curve.value(t).norm().powi(2) + curve.deriv(t).norm().powi(2));
        }
        total * h
    };

    let mut total = matrix_h1(&params.t1)
        + matrix_h1(&params.t2)
        + matrix_h1(&params.t3)
        + matrix_h1(&params.u)
        + vector_h1(&params.a)
        + matrix_h1(&params.v)
        + vector_h1(&params.b);

    let mut w_total = 0.0;
    let mut c_total = 0.0;
    for i in 0..=n_quad {
        let t = i as f64 / n_quad as f64;
        let wi = trapezoid_weight(i, n_quad);
        for k in 0..=n_quad {
            let s = k as f64 / n_quad as f64;
            let wk = wi * trapezoid_weight(k, n_quad);
            w_total += wk
                * (spectral_norm_unchecked(&params.w.value(t, s)).powi(3)
                    + spectral_norm_unchecked(&params.w.deriv_t(t, s)).powi(3)
                    + spectral_norm_unchecked(&params.w.deriv_s(t, s)).powi(3));
            c_total += wk
                * (params.c.value(t, s).norm().powi(3)
                    + params.c.deriv_t(t, s).norm().powi(3)
                    + params.c.deriv_s(t, s).norm().powi(3));
        }
    }
    total += (w_total + c_total) * h * h;
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discrete::Activation;
    use crate::kernel::KernelFamily;

    fn sys(n: usize) -> SystemConfig {
        SystemConfig {
            kernel: KernelFamily::Kronecker,
            activation: Activation::Tanh,
            n,
        }
    }

    fn zero_params(n: usize) -> ContinuousParams {
        ContinuousParams::constant(
            [Matrix::zeros(n), Matrix::zeros(n), Matrix::zeros(n)],
            Matrix::zeros(n),
            Vector::zeros(n),
            Matrix::zeros(n),
            Vector::zeros(n),
            Matrix::zeros(n),
            Vector::zeros(n),
        )
    }

    #[test]
    fn zero_output_map_gives_zero_solution() {
        let sys = sys(2);
        let mut p = zero_params(2);
        p.u = Arc::new(ConstantMatrixCurve(Matrix::identity(2)));
        p.a = Arc::new(ConstantVectorCurve(Vector::new(vec![0.5, -0.5])));
        let sol = solve(&sys, &p, &Vector::new(vec![1.0, 2.0]), 16, Scheme::Trapezoid).unwrap();
        assert_eq!(sol.max_norm(), 0.0);
    }

    #[test]
    fn memoryless_case_is_exact() {
        // W ≡ 0, c ≡ 0: x(t) = V(t) φ(U(t) A(T(t); d) + a(t)) + b(t) with
        // no quadrature at all, so the residual vanishes at any N.
        let sys = sys(2);
        let p = ContinuousParams::constant(
            [Matrix::identity(2), Matrix::identity(2), Matrix::identity(2)],
            Matrix::identity(2).scale(0.5),
            Vector::new(vec![0.25, -0.1]),
            Matrix::identity(2).scale(1.5),
            Vector::new(vec![0.0, 0.3]),
            Matrix::zeros(2),
            Vector::zeros(2),
        );
        let d = Vector::new(vec![0.4, 0.9]);
        for steps in [1, 7, 32] {
            let sol = solve(&sys, &p, &d, steps, Scheme::Trapezoid).unwrap();
            let res = residual(&sys, &p, &d, &sol, 4).unwrap();
            assert!(res < 1e-12, "residual {res} at N={steps}");
            let expected = {
                let pre = p.u.value(0.0).matvec(&d).add(&p.a.value(0.0));
                let mut x = p.v.value(0.0).matvec(&sys.activation.apply(&pre));
                x.add_assign(&p.b.value(0.0));
                x
            };
            for x in &sol.states {
                assert!(x.sub(&expected).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn non_contractive_step_reports_stall() {
        // At N = 1 the endpoint term carries weight τ/2 = 1/2; a huge W
        // makes the per-step map expansive, so the fixed point cannot
        // contract and the solver must report the stall time.
        let sys = SystemConfig {
            kernel: KernelFamily::Kronecker,
            activation: Activation::Identity,
            n: 2,
        };
        let p = ContinuousParams::constant(
            [Matrix::identity(2), Matrix::identity(2), Matrix::identity(2)],
            Matrix::identity(2),
            Vector::zeros(2),
            Matrix::identity(2),
            Vector::zeros(2),
            Matrix::identity(2).scale(50.0),
            Vector::zeros(2),
        );
        let err = solve(&sys, &p, &Vector::new(vec![1.0, 0.0]), 1, Scheme::Trapezoid).unwrap_err();
        match err {
            crate::error::Error::SolverStall { t } => assert_eq!(t, 1.0),
            other => panic!("expected stall, got {other:?}"),
        }
    }

    #[test]
    fn cont_bound_zero_params() {
        let sys = sys(3);
        let p = zero_params(3);
        assert_eq!(cont_bound(&sys, &p, &Vector::zeros(3)).unwrap(), 0.0);
        let sol = solve(&sys, &p, &Vector::zeros(3), 8, Scheme::LeftRectangle).unwrap();
        assert_eq!(sol.max_norm(), 0.0);
    }

    #[test]
    fn cont_bound_constant_norms_one() {
        // All block norms 1, d = 0, L_φ = 1: (0 + 1 + 1 + 1)·e = 3e.
        let n = 2;
        let p = ContinuousParams::constant(
            [Matrix::identity(n), Matrix::identity(n), Matrix::identity(n)],
            Matrix::identity(n),
            Vector::basis(n, 0),
            Matrix::identity(n),
            Vector::basis(n, 1),
            Matrix::identity(n),
            Vector::basis(n, 0),
        );
        let bound = cont_bound(&sys(n), &p, &Vector::zeros(n)).unwrap();
        let expected = 3.0 * std::f64::consts::E;
        assert!((bound - expected).abs() < 1e-10, "bound = {bound}");
    }

    #[test]
    fn reg_continuous_zero() {
        assert_eq!(reg_continuous(&zero_params(2), 64), 0.0);
    }

    #[test]
    fn reg_continuous_constant_surface() {
        // W constant with ‖W‖ = 1 (n = 1), everything else zero: the
        // derivatives vanish and ∫∫‖W‖³ = 1.
        let mut p = zero_params(1);
        p.w = Arc::new(ConstantMatrixSurface(Matrix::new(1, vec![1.0])));
        let r = reg_continuous(&p, 128);
        assert!((r - 1.0).abs() < 1e-12);
    }

    #[test]
    fn csv_export_shape() {
        let sys = sys(2);
        let p = zero_params(2);
        let sol = solve(&sys, &p, &Vector::zeros(2), 4, Scheme::LeftRectangle).unwrap();
        let csv = sol.to_csv_string();
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), "t,x_1,x_2");
        assert_eq!(csv.lines().count(), 6);
    }
}

//! The discrete↔continuous bridge: piecewise constant/linear extension of
//! node sequences, piecewise constant/bilinear extension of flipped grids,
//! node sampling and cell means, the windowed-mean recovery construction,
//! and grid-approximated sup distance between parameter packs.

use std::sync::Arc;

use crate::continuous::{ContinuousParams, MatrixCurve, MatrixSurface, VectorCurve, VectorSurface};
use crate::discrete::{DiscreteParams, FlippedGrid, Triangular};
use crate::linalg::{spectral_norm_unchecked, Matrix, Vector};

/// Extension flavour; `Linear` means piecewise linear for curves and
/// piecewise bilinear for surfaces.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExtensionMode {
    Constant,
    Linear,
}

/// Snap near-integer grid coordinates so node evaluations are exact and
/// cell membership is stable against floating-point noise in t·L. The
/// tolerance is a few hundred ulps, far below any quadrature spacing.
fn snap(u: f64) -> f64 {
    let rounded = u.round();
    if (u - rounded).abs() < 1e-12 * rounded.abs().max(1.0) {
        rounded
    } else {
        u
    }
}

/// Node index for left-open cells ((l-1)τ, lτ], with node 0 at t = 0.
fn left_open_node(t: f64, layers: usize) -> usize {
    let u = snap(t * layers as f64);
    if u <= 0.0 {
        return 0;
    }
    (u.ceil() as usize).clamp(1, layers)
}

/// Cell index l in 1..=L together with the local coordinate θ ∈ [0, 1];
/// at interior knots the cell to the left is chosen (left-limit
/// convention for the derivative evaluators).
fn linear_cell(t: f64, layers: usize) -> (usize, f64) {
    let u = snap((t * layers as f64).clamp(0.0, layers as f64));
    let l = (u.ceil() as usize).clamp(1, layers);
    (l, u - (l - 1) as f64)
}

/// Piecewise constant/linear extension of L+1 node blocks (matrix case).
pub struct PiecewiseMatrixCurve {
    pub kind: ExtensionMode,
    nodes: Vec<Matrix>,
}

impl PiecewiseMatrixCurve {
    pub fn new(kind: ExtensionMode, nodes: Vec<Matrix>) -> Self {
        assert!(nodes.len() >= 2);
        PiecewiseMatrixCurve { kind, nodes }
    }

    fn layers(&self) -> usize {
        self.nodes.len() - 1
    }
}

impl MatrixCurve for PiecewiseMatrixCurve {
    fn value(&self, t: f64) -> Matrix {
        match self.kind {
            ExtensionMode::Constant => self.nodes[left_open_node(t, self.layers())].clone(),
            ExtensionMode::Linear => {
                let (l, theta) = linear_cell(t, self.layers());
                if theta == 0.0 {
                    return self.nodes[l - 1].clone();
                }
                if theta == 1.0 {
                    return self.nodes[l].clone();
                }
                let mut out = self.nodes[l - 1].scale(1.0 - theta);
                out.add_scaled(theta, &self.nodes[l]);
                out
            }
        }
    }

    fn deriv(&self, t: f64) -> Matrix {
        match self.kind {
            ExtensionMode::Constant => Matrix::zeros(self.nodes[0].n()),
            ExtensionMode::Linear => {
                let (l, _) = linear_cell(t, self.layers());
                self.nodes[l]
                    .sub(&self.nodes[l - 1])
                    .scale(self.layers() as f64)
            }
        }
    }
}

pub struct PiecewiseVectorCurve {
    pub kind: ExtensionMode,
    nodes: Vec<Vector>,
}

impl PiecewiseVectorCurve {
    pub fn new(kind: ExtensionMode, nodes: Vec<Vector>) -> Self {
        assert!(nodes.len() >= 2);
        PiecewiseVectorCurve { kind, nodes }
    }

    fn layers(&self) -> usize {
        self.nodes.len() - 1
    }
}

impl VectorCurve for PiecewiseVectorCurve {
    fn value(&self, t: f64) -> Vector {
        match self.kind {
            ExtensionMode::Constant => self.nodes[left_open_node(t, self.layers())].clone(),
            ExtensionMode::Linear => {
                let (l, theta) = linear_cell(t, self.layers());
                if theta == 0.0 {
                    return self.nodes[l - 1].clone();
                }
                if theta == 1.0 {
                    return self.nodes[l].clone();
                }
                let mut out = self.nodes[l - 1].scale(1.0 - theta);
                out.add_scaled(theta, &self.nodes[l]);
                out
            }
        }
    }

    fn deriv(&self, t: f64) -> Vector {
        match self.kind {
            ExtensionMode::Constant => Vector::zeros(self.nodes[0].len()),
            ExtensionMode::Linear => {
                let (l, _) = linear_cell(t, self.layers());
                self.nodes[l]
                    .sub(&self.nodes[l - 1])
                    .scale(self.layers() as f64)
            }
        }
    }
}

/// Piecewise constant/bilinear extension of a flipped (L+1)² grid
/// (matrix case). Symmetric grids yield symmetric surfaces.
pub struct PiecewiseMatrixSurface {
    pub kind: ExtensionMode,
    grid: FlippedGrid<Matrix>,
}

impl PiecewiseMatrixSurface {
    pub fn new(kind: ExtensionMode, grid: FlippedGrid<Matrix>) -> Self {
        PiecewiseMatrixSurface { kind, grid }
    }
}

impl MatrixSurface for PiecewiseMatrixSurface {
    fn value(&self, t: f64, s: f64) -> Matrix {
        let layers = self.grid.layers();
        match self.kind {
            ExtensionMode::Constant => self
                .grid
                .get(left_open_node(t, layers), left_open_node(s, layers))
                .clone(),
            ExtensionMode::Linear => {
                let (l, th) = linear_cell(t, layers);
                let (k, sh) = linear_cell(s, layers);
                let mut out = self.grid.get(l - 1, k - 1).scale((1.0 - sh) * (1.0 - th));
                out.add_scaled((1.0 - sh) * th, self.grid.get(l, k - 1));
                out.add_scaled(sh * (1.0 - th), self.grid.get(l - 1, k));
                out.add_scaled(sh * th, self.grid.get(l, k));
                out
            }
        }
    }

    fn deriv_t(&self, t: f64, s: f64) -> Matrix {
        let layers = self.grid.layers();
        match self.kind {
            ExtensionMode::Constant => Matrix::zeros(self.grid.get(0, 0).n()),
            ExtensionMode::Linear => {
                let (l, _) = linear_cell(t, layers);
                let (k, sh) = linear_cell(s, layers);
                let mut out = self.grid.get(l, k - 1).sub(self.grid.get(l - 1, k - 1));
                out = out.scale(1.0 - sh);
                out.add_scaled(sh, &self.grid.get(l, k).sub(self.grid.get(l - 1, k)));
                out.scale(layers as f64)
            }
        }
    }

    fn deriv_s(&self, t: f64, s: f64) -> Matrix {
        let layers = self.grid.layers();
        match self.kind {
            ExtensionMode::Constant => Matrix::zeros(self.grid.get(0, 0).n()),
            ExtensionMode::Linear => {
                let (l, th) = linear_cell(t, layers);
                let (k, _) = linear_cell(s, layers);
                let mut out = self.grid.get(l - 1, k).sub(self.grid.get(l - 1, k - 1));
                out = out.scale(1.0 - th);
                out.add_scaled(th, &self.grid.get(l, k).sub(self.grid.get(l, k - 1)));
                out.scale(layers as f64)
            }
        }
    }
}

pub struct PiecewiseVectorSurface {
    pub kind: ExtensionMode,
    grid: FlippedGrid<Vector>,
}

impl PiecewiseVectorSurface {
    pub fn new(kind: ExtensionMode, grid: FlippedGrid<Vector>) -> Self {
        PiecewiseVectorSurface { kind, grid }
    }
}

impl VectorSurface for PiecewiseVectorSurface {
    fn value(&self, t: f64, s: f64) -> Vector {
        let layers = self.grid.layers();
        match self.kind {
            ExtensionMode::Constant => self
                .grid
                .get(left_open_node(t, layers), left_open_node(s, layers))
                .clone(),
            ExtensionMode::Linear => {
                let (l, th) = linear_cell(t, layers);
                let (k, sh) = linear_cell(s, layers);
                let mut out = self.grid.get(l - 1, k - 1).scale((1.0 - sh) * (1.0 - th));
                out.add_scaled((1.0 - sh) * th, self.grid.get(l, k - 1));
                out.add_scaled(sh * (1.0 - th), self.grid.get(l - 1, k));
                out.add_scaled(sh * th, self.grid.get(l, k));
                out
            }
        }
    }

    fn deriv_t(&self, t: f64, s: f64) -> Vector {
        let layers = self.grid.layers();
        match self.kind {
            ExtensionMode::Constant => Vector::zeros(self.grid.get(0, 0).len()),
            ExtensionMode::Linear => {
                let (l, _) = linear_cell(t, layers);
                let (k, sh) = linear_cell(s, layers);
                let mut out = self.grid.get(l, k - 1).sub(self.grid.get(l - 1, k - 1));
                out = out.scale(1.0 - sh);
                out.add_scaled(sh, &self.grid.get(l, k).sub(self.grid.get(l - 1, k)));
                out.scale(layers as f64)
            }
        }
    }

    fn deriv_s(&self, t: f64, s: f64) -> Vector {
        let layers = self.grid.layers();
        match self.kind {
            ExtensionMode::Constant => Vector::zeros(self.grid.get(0, 0).len()),
            ExtensionMode::Linear => {
                let (l, th) = linear_cell(t, layers);
                let (k, _) = linear_cell(s, layers);
                let mut out = self.grid.get(l - 1, k).sub(self.grid.get(l - 1, k - 1));
                out = out.scale(1.0 - th);
                out.add_scaled(th, &self.grid.get(l, k).sub(self.grid.get(l, k - 1)));
                out.scale(layers as f64)
            }
        }
    }
}

/// Extend a discrete parameter pack into a continuous one: one-index
/// families become piecewise constant/linear curves; the dense families
/// are flipped first and then extended constant/bilinearly.
pub fn extend_params(params: &DiscreteParams, mode: ExtensionMode) -> ContinuousParams {
    ContinuousParams {
        n: params.n,
        t1: Arc::new(PiecewiseMatrixCurve::new(mode, params.t1.clone())),
        t2: Arc::new(PiecewiseMatrixCurve::new(mode, params.t2.clone())),
        t3: Arc::new(PiecewiseMatrixCurve::new(mode, params.t3.clone())),
        u: Arc::new(PiecewiseMatrixCurve::new(mode, params.u.clone())),
        a: Arc::new(PiecewiseVectorCurve::new(mode, params.a.clone())),
        v: Arc::new(PiecewiseMatrixCurve::new(mode, params.v.clone())),
        b: Arc::new(PiecewiseVectorCurve::new(mode, params.b.clone())),
        w: Arc::new(PiecewiseMatrixSurface::new(mode, params.w.flip())),
        c: Arc::new(PiecewiseVectorSurface::new(mode, params.c.flip())),
    }
}

// 4-point Gauss–Legendre nodes/weights on [-1, 1]; exact for the
// polynomial content of the smooth generators and far beyond bilinear.
const GL_NODES: [f64; 4] = [
    -0.861_136_311_594_052_6,
    -0.339_981_043_584_856_26,
    0.339_981_043_584_856_26,
    0.861_136_311_594_052_6,
];
const GL_WEIGHTS: [f64; 4] = [
    0.347_854_845_137_453_85,
    0.652_145_154_862_546_1,
    0.652_145_154_862_546_1,
    0.347_854_845_137_453_85,
];

fn matrix_curve_mean(curve: &dyn MatrixCurve, lo: f64, hi: f64, n: usize) -> Matrix {
    let mid = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    let mut acc = Matrix::zeros(n);
    for (node, weight) in GL_NODES.iter().zip(GL_WEIGHTS.iter()) {
        acc.add_scaled(0.5 * weight, &curve.value(mid + half * node));
    }
    acc
}

fn vector_curve_mean(curve: &dyn VectorCurve, lo: f64, hi: f64, n: usize) -> Vector {
    let mid = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    let mut acc = Vector::zeros(n);
    for (node, weight) in GL_NODES.iter().zip(GL_WEIGHTS.iter()) {
        acc.add_scaled(0.5 * weight, &curve.value(mid + half * node));
    }
    acc
}

fn matrix_cell_mean(surface: &dyn MatrixSurface, cell_t: usize, cell_s: usize, layers: usize, n: usize) -> Matrix {
    let tau = 1.0 / layers as f64;
    let (t_mid, s_mid) = (
        (cell_t as f64 - 0.5) * tau,
        (cell_s as f64 - 0.5) * tau,
    );
    let half = 0.5 * tau;
    let mut acc = Matrix::zeros(n);
    for (tn, tw) in GL_NODES.iter().zip(GL_WEIGHTS.iter()) {
        for (sn, sw) in GL_NODES.iter().zip(GL_WEIGHTS.iter()) {
            acc.add_scaled(
                0.25 * tw * sw,
                &surface.value(t_mid + half * tn, s_mid + half * sn),
            );
        }
    }
    acc
}

fn vector_cell_mean(surface: &dyn VectorSurface, cell_t: usize, cell_s: usize, layers: usize, n: usize) -> Vector {
    let tau = 1.0 / layers as f64;
    let (t_mid, s_mid) = (
        (cell_t as f64 - 0.5) * tau,
        (cell_s as f64 - 0.5) * tau,
    );
    let half = 0.5 * tau;
    let mut acc = Vector::zeros(n);
    for (tn, tw) in GL_NODES.iter().zip(GL_WEIGHTS.iter()) {
        for (sn, sw) in GL_NODES.iter().zip(GL_WEIGHTS.iter()) {
            acc.add_scaled(
                0.25 * tw * sw,
                &surface.value(t_mid + half * tn, s_mid + half * sn),
            );
        }
    }
    acc
}

fn dense_cell_means(params: &ContinuousParams, layers: usize) -> (Triangular<Matrix>, Triangular<Vector>) {
    let w = Triangular::build(layers, |l, k| {
        matrix_cell_mean(params.w.as_ref(), l, k, layers, params.n)
    });
    let c = Triangular::build(layers, |l, k| {
        vector_cell_mean(params.c.as_ref(), l, k, layers, params.n)
    });
    (w, c)
}

/// Pointwise node sampling: one-index families at t = l/L, dense families
/// as cell means over the τ×τ grid cells.
pub fn sample_params(params: &ContinuousParams, layers: usize) -> DiscreteParams {
    assert!(layers >= 1);
    let n = params.n;
    let node = |l: usize| l as f64 / layers as f64;
    let (w, c) = dense_cell_means(params, layers);
    DiscreteParams {
        n,
        layers,
        t1: (0..=layers).map(|l| params.t1.value(node(l))).collect(),
        t2: (0..=layers).map(|l| params.t2.value(node(l))).collect(),
        t3: (0..=layers).map(|l| params.t3.value(node(l))).collect(),
        u: (0..=layers).map(|l| params.u.value(node(l))).collect(),
        a: (0..=layers).map(|l| params.a.value(node(l))).collect(),
        v: (0..=layers).map(|l| params.v.value(node(l))).collect(),
        b: (0..=layers).map(|l| params.b.value(node(l))).collect(),
        w,
        c,
    }
}

/// Windowed-mean recovery: half-cell means at both ends, two-cell means at
/// interior nodes, and the same cell means as `sample_params` for the
/// dense families.
pub fn recovery_sequence(params: &ContinuousParams, layers: usize) -> DiscreteParams {
    assert!(layers >= 1);
    let n = params.n;
    let tau = 1.0 / layers as f64;
    let matrix_nodes = |curve: &dyn MatrixCurve| -> Vec<Matrix> {
        (0..=layers)
            .map(|l| {
                if l == 0 {
                    matrix_curve_mean(curve, 0.0, tau, n)
                } else if l == layers {
                    matrix_curve_mean(curve, 1.0 - tau, 1.0, n)
                } else {
                    // Composite over the two unit cells so piecewise inputs
                    // are integrated exactly as well.
                    let left = matrix_curve_mean(curve, (l as f64 - 1.0) * tau, l as f64 * tau, n);
                    let mut mean = left;
                    mean.add_assign(&matrix_curve_mean(
                        curve,
                        l as f64 * tau,
                        (l as f64 + 1.0) * tau,
                        n,
                    ));
                    mean.scale(0.5)
                }
            })
            .collect()
    };
    let vector_nodes = |curve: &dyn VectorCurve| -> Vec<Vector> {
        (0..=layers)
            .map(|l| {
                if l == 0 {
                    vector_curve_mean(curve, 0.0, tau, n)
                } else if l == layers {
                    vector_curve_mean(curve, 1.0 - tau, 1.0, n)
                } else {
                    let mut mean = vector_curve_mean(curve, (l as f64 - 1.0) * tau, l as f64 * tau, n);
                    mean.add_assign(&vector_curve_mean(
                        curve,
                        l as f64 * tau,
                        (l as f64 + 1.0) * tau,
                        n,
                    ));
                    mean.scale(0.5)
                }
            })
            .collect()
    };
    let (w, c) = dense_cell_means(params, layers);
    DiscreteParams {
        n,
        layers,
        t1: matrix_nodes(params.t1.as_ref()),
        t2: matrix_nodes(params.t2.as_ref()),
        t3: matrix_nodes(params.t3.as_ref()),
        u: matrix_nodes(params.u.as_ref()),
        a: vector_nodes(params.a.as_ref()),
        v: matrix_nodes(params.v.as_ref()),
        b: vector_nodes(params.b.as_ref()),
        w,
        c,
    }
}

/// Grid approximation of the parameter-space norm of p − q: the max over
/// all blocks of their sup-norm differences, curves sampled at grid+1
/// points and surfaces on the corresponding tensor grid.
pub fn sup_distance(p: &ContinuousParams, q: &ContinuousParams, grid: usize) -> f64 {
    assert!(grid >= 1);
    let mut dist: f64 = 0.0;
    for i in 0..=grid {
        let t = i as f64 / grid as f64;
        for (pc, qc) in [
            (&p.t1, &q.t1),
            (&p.t2, &q.t2),
            (&p.t3, &q.t3),
            (&p.u, &q.u),
            (&p.v, &q.v),
        ] {
            dist = dist.max(spectral_norm_unchecked(&pc.value(t).sub(&qc.value(t))));
        }
        dist = dist.max(p.a.value(t).sub(&q.a.value(t)).norm());
        dist = dist.max(p.b.value(t).sub(&q.b.value(t)).norm());
    }
    // Surfaces on a coarser tensor grid with the same spacing cap.
    let sgrid = grid.min(256);
    for i in 0..=sgrid {
        let t = i as f64 / sgrid as f64;
        for k in 0..=sgrid {
            let s = k as f64 / sgrid as f64;
            dist = dist.max(spectral_norm_unchecked(
                &p.w.value(t, s).sub(&q.w.value(t, s)),
            ));
            dist = dist.max(p.c.value(t, s).sub(&q.c.value(t, s)).norm());
        }
    }
    dist
}

//! The L-layer discrete dense non-local forward pass, the learnable
//! parameter pack with its norm, the flip operator, the discrete
//! Sobolev-like regularizers and the a-priori state bound.
//!
//! The recurrence is
//!
//! x⁰ = V⁰ φ(U⁰ A_κ(T⁰; d) + a⁰) + b⁰
//! x^l = V^l φ(U^l A_κ(T^l; d) + a^l
//!             + τ Σ_{k=0}^{l-1} [W^{l,k+1} A_κ(T^l; x^k) + c^{l,k+1}]) + b^l
//!
//! with τ = 1/L. The step size is always derived from the layer count and
//! never stored independently.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{apply_transform, growth_bound, KernelFamily, TransformParams};
use crate::linalg::{spectral_norm_unchecked, Matrix, Vector};

/// Pointwise activation. All three choices are increasing, vanish at 0 and
/// are 1-Lipschitz.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Activation {
    Relu,
    Tanh,
    Identity,
}

impl Activation {
    pub const ALL: [Activation; 3] = [Activation::Relu, Activation::Tanh, Activation::Identity];

    pub fn apply_scalar(&self, x: f64) -> f64 {
        match self {
            Activation::Relu => x.max(0.0),
            Activation::Tanh => x.tanh(),
            Activation::Identity => x,
        }
    }

    /// Derivative; the relu subgradient at 0 is taken as 0.
    pub fn deriv_scalar(&self, x: f64) -> f64 {
        match self {
            Activation::Relu => {
                if x > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => {
                let t = x.tanh();
                1.0 - t * t
            }
            Activation::Identity => 1.0,
        }
    }

    pub fn apply(&self, v: &Vector) -> Vector {
        v.map(|x| self.apply_scalar(x))
    }

    pub fn lipschitz(&self) -> f64 {
        1.0
    }

    pub fn name(&self) -> &'static str {
        match self {
            Activation::Relu => "relu",
            Activation::Tanh => "tanh",
            Activation::Identity => "identity",
        }
    }
}

/// Kernel and activation choice shared by the discrete network and the
/// continuous system.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SystemConfig {
    pub kernel: KernelFamily,
    pub activation: Activation,
    pub n: usize,
}

/// Full discrete network configuration.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NetConfig {
    pub kernel: KernelFamily,
    pub activation: Activation,
    pub n: usize,
    pub layers: usize,
}

impl NetConfig {
    pub fn new(kernel: KernelFamily, activation: Activation, n: usize, layers: usize) -> Self {
        NetConfig {
            kernel,
            activation,
            n,
            layers,
        }
    }

    pub fn system(&self) -> SystemConfig {
        SystemConfig {
            kernel: self.kernel,
            activation: self.activation,
            n: self.n,
        }
    }

    pub fn tau(&self) -> f64 {
        1.0 / self.layers as f64
    }
}

/// Lower-triangular family {Ξ^{l,k} : 1 ≤ k ≤ l ≤ L}; row l holds l
/// entries.
#[derive(Clone, Debug, PartialEq)]
pub struct Triangular<T> {
    rows: Vec<Vec<T>>,
}

impl<T> Triangular<T> {
    pub fn from_rows(rows: Vec<Vec<T>>) -> Self {
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), i + 1, "triangular row {} must have {} entries", i + 1, i + 1);
        }
        Triangular { rows }
    }

    pub fn build(layers: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let rows = (1..=layers)
            .map(|l| (1..=l).map(|k| f(l, k)).collect())
            .collect();
        Triangular { rows }
    }

    /// Number of layers L.
    pub fn layers(&self) -> usize {
        self.rows.len()
    }

    pub fn entry_count(&self) -> usize {
        self.rows.len() * (self.rows.len() + 1) / 2
    }

    /// Access Ξ^{l,k} for 1 ≤ k ≤ l ≤ L.
    pub fn get(&self, l: usize, k: usize) -> &T {
        debug_assert!(1 <= k && k <= l && l <= self.layers());
        &self.rows[l - 1][k - 1]
    }

    pub fn get_mut(&mut self, l: usize, k: usize) -> &mut T {
        debug_assert!(1 <= k && k <= l && l <= self.layers());
        &mut self.rows[l - 1][k - 1]
    }

    pub fn iter(&self) -> impl Iterator<Item = ((usize, usize), &T)> {
        self.rows
            .iter()
            .enumerate()
            .flat_map(|(li, row)| row.iter().enumerate().map(move |(ki, t)| ((li + 1, ki + 1), t)))
    }

    pub fn rows(&self) -> &[Vec<T>] {
        &self.rows
    }
}

impl<T: Clone> Triangular<T> {
    /// The flip operator: reflect the lower triangle into a full symmetric
    /// (L+1)×(L+1) grid, padding row/column 0 with copies of the first
    /// column:
    ///
    ///   grid[l][k] = grid[k][l] = Ξ^{l,k}   for 1 ≤ k ≤ l ≤ L,
    ///   grid[0][0] = Ξ^{1,1},  grid[l][0] = Ξ^{l,1},  grid[0][k] = Ξ^{k,1}.
    pub fn flip(&self) -> FlippedGrid<T> {
        let l_max = self.layers();
        let size = l_max + 1;
        let mut data: Vec<T> = Vec::with_capacity(size * size);
        for i in 0..size {
            for j in 0..size {
                let (l, k) = match (i, j) {
                    (0, 0) => (1, 1),
                    (i, 0) => (i, 1),
                    (0, j) => (j, 1),
                    (i, j) => (i.max(j), i.min(j)),
                };
                data.push(self.get(l, k).clone());
            }
        }
        FlippedGrid { size, data }
    }
}

/// Symmetric (L+1)×(L+1) grid produced by the flip operator.
#[derive(Clone, Debug, PartialEq)]
pub struct FlippedGrid<T> {
    size: usize,
    data: Vec<T>,
}

impl<T> FlippedGrid<T> {
    /// Grid side length L+1.
    pub fn size(&self) -> usize {
        self.size
    }

    /// Layers L.
    pub fn layers(&self) -> usize {
        self.size - 1
    }

    pub fn get(&self, i: usize, j: usize) -> &T {
        debug_assert!(i < self.size && j < self.size);
        &self.data[i * self.size + j]
    }

    /// Source triangle index (l, k) whose value was copied to grid cell
    /// (i, j); the adjoint of the flip copy pattern.
    pub fn source_index(i: usize, j: usize) -> (usize, usize) {
        match (i, j) {
            (0, 0) => (1, 1),
            (i, 0) => (i, 1),
            (0, j) => (j, 1),
            (i, j) => (i.max(j), i.min(j)),
        }
    }
}

/// The full learnable parameter pack Θ_L.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteParams {
    pub n: usize,
    pub layers: usize,
    pub t1: Vec<Matrix>,
    pub t2: Vec<Matrix>,
    pub t3: Vec<Matrix>,
    pub u: Vec<Matrix>,
    pub a: Vec<Vector>,
    pub v: Vec<Matrix>,
    pub b: Vec<Vector>,
    pub w: Triangular<Matrix>,
    pub c: Triangular<Vector>,
}

impl DiscreteParams {
    pub fn zeros(n: usize, layers: usize) -> Self {
        assert!(layers >= 1);
        DiscreteParams {
            n,
            layers,
            t1: vec![Matrix::zeros(n); layers + 1],
            t2: vec![Matrix::zeros(n); layers + 1],
            t3: vec![Matrix::zeros(n); layers + 1],
            u: vec![Matrix::zeros(n); layers + 1],
            a: vec![Vector::zeros(n); layers + 1],
            v: vec![Matrix::zeros(n); layers + 1],
            b: vec![Vector::zeros(n); layers + 1],
            w: Triangular::build(layers, |_, _| Matrix::zeros(n)),
            c: Triangular::build(layers, |_, _| Vector::zeros(n)),
        }
    }

    /// Every scalar drawn uniformly from (-scale, scale).
    pub fn random_uniform(n: usize, layers: usize, scale: f64, rng: &mut impl Rng) -> Self {
        let mut p = DiscreteParams::zeros(n, layers);
        if scale <= 0.0 {
            return p;
        }
        let count = p.scalar_count();
        let mut flat = Vec::with_capacity(count);
        for _ in 0..count {
            flat.push(rng.gen_range(-scale..scale));
        }
        p.set_from_flat(&flat);
        p
    }

    pub fn tau(&self) -> f64 {
        1.0 / self.layers as f64
    }

    /// The transform triple T^l.
    pub fn transform(&self, l: usize) -> TransformParams {
        TransformParams::new(self.t1[l].clone(), self.t2[l].clone(), self.t3[l].clone())
    }

    pub fn validate_against(&self, cfg: &NetConfig) -> Result<()> {
        if cfg.n != self.n || cfg.layers != self.layers {
            return Err(Error::DimensionMismatch(format!(
                "config is (n={}, L={}) but params are (n={}, L={})",
                cfg.n, cfg.layers, self.n, self.layers
            )));
        }
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        let curves = self.t1.iter().chain(&self.t2).chain(&self.t3).chain(&self.u).chain(&self.v);
        curves.clone().all(|m| m.is_finite())
            && self.a.iter().chain(&self.b).all(|v| v.is_finite())
            && self.w.iter().all(|(_, m)| m.is_finite())
            && self.c.iter().all(|(_, v)| v.is_finite())
    }

    /// Total number of scalar parameters.
    pub fn scalar_count(&self) -> usize {
        let n2 = self.n * self.n;
        let per_layer = (self.layers + 1) * n2;
        let tri = self.layers * (self.layers + 1) / 2;
        5 * per_layer + 2 * (self.layers + 1) * self.n + tri * n2 + tri * self.n
    }

    /// Flatten in a fixed documented order: t1, t2, t3, u, a, v, b (each
    /// layer 0..L, matrices row-major), then w rows (l = 1..L, k = 1..l),
    /// then c rows.
    pub fn to_flat(&self) -> Vec<f64> {
        let mut flat = Vec::with_capacity(self.scalar_count());
        for seq in [&self.t1, &self.t2, &self.t3, &self.u] {
            for m in seq {
                flat.extend_from_slice(m.as_slice());
            }
        }
        for v in &self.a {
            flat.extend_from_slice(v.as_slice());
        }
        for m in &self.v {
            flat.extend_from_slice(m.as_slice());
        }
        for v in &self.b {
            flat.extend_from_slice(v.as_slice());
        }
        for row in self.w.rows() {
            for m in row {
                flat.extend_from_slice(m.as_slice());
            }
        }
        for row in self.c.rows() {
            for v in row {
                flat.extend_from_slice(v.as_slice());
            }
        }
        debug_assert_eq!(flat.len(), self.scalar_count());
        flat
    }

    /// Inverse of `to_flat` for a pack of matching shape.
    pub fn set_from_flat(&mut self, flat: &[f64]) {
        assert_eq!(flat.len(), self.scalar_count());
        let mut pos = 0;
        let mut take = |dst: &mut [f64]| {
            dst.copy_from_slice(&flat[pos..pos + dst.len()]);
            pos += dst.len();
        };
        for seq in [&mut self.t1, &mut self.t2, &mut self.t3, &mut self.u] {
            for m in seq.iter_mut() {
                take(m.as_mut_slice());
            }
        }
        for v in self.a.iter_mut() {
            take(v.as_mut_slice());
        }
        for m in self.v.iter_mut() {
            take(m.as_mut_slice());
        }
        for v in self.b.iter_mut() {
            take(v.as_mut_slice());
        }
        for l in 1..=self.layers {
            for k in 1..=l {
                take(self.w.get_mut(l, k).as_mut_slice());
            }
        }
        for l in 1..=self.layers {
            for k in 1..=l {
                take(self.c.get_mut(l, k).as_mut_slice());
            }
        }
        debug_assert_eq!(pos, flat.len());
    }
}

/// Discrete trajectory x⁰..x^L.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteTrajectory {
    pub states: Vec<Vector>,
}

impl DiscreteTrajectory {
    pub fn final_state(&self) -> &Vector {
        self.states.last().expect("trajectory is never empty")
    }

    pub fn max_norm(&self) -> f64 {
        self.states.iter().fold(0.0, |m, x| m.max(x.norm()))
    }
}

/// Run the forward recurrence for input d.
pub fn forward(cfg: &NetConfig, params: &DiscreteParams, d: &Vector) -> Result<DiscreteTrajectory> {
    params.validate_against(cfg)?;
    if d.len() != cfg.n {
        return Err(Error::DimensionMismatch(format!(
            "input has length {} but n = {}",
            d.len(),
            cfg.n
        )));
    }
    let layers = cfg.layers;
    let tau = cfg.tau();
    let mut states: Vec<Vector> = Vec::with_capacity(layers + 1);
    for l in 0..=layers {
        let transform = params.transform(l);
        let a_d = apply_transform(cfg.kernel, &transform, d)?;
        let mut pre = params.u[l].matvec(&a_d);
        pre.add_assign(&params.a[l]);
        if l >= 1 {
            let mut acc = Vector::zeros(cfg.n);
            for (k, state) in states.iter().enumerate().take(l) {
                let a_x = apply_transform(cfg.kernel, &transform, state)?;
                acc.add_assign(&params.w.get(l, k + 1).matvec(&a_x));
                acc.add_assign(params.c.get(l, k + 1));
            }
            pre.add_scaled(tau, &acc);
        }
        let h = cfg.activation.apply(&pre);
        let mut x = params.v[l].matvec(&h);
        x.add_assign(&params.b[l]);
        if !x.is_finite() {
            return Err(Error::Overflow { layer: l });
        }
        states.push(x);
    }
    Ok(DiscreteTrajectory { states })
}

/// ‖Θ_L‖: the max over the seven component norms (spectral for matrix
/// blocks, euclidean for vector blocks, max over all layer and triangle
/// indices).
pub fn param_norm(params: &DiscreteParams) -> f64 {
    let mut norm: f64 = 0.0;
    for seq in [&params.t1, &params.t2, &params.t3, &params.u, &params.v] {
        for m in seq.iter() {
            norm = norm.max(spectral_norm_unchecked(m));
        }
    }
    for v in params.a.iter().chain(params.b.iter()) {
        norm = norm.max(v.norm());
    }
    for (_, m) in params.w.iter() {
        norm = norm.max(spectral_norm_unchecked(m));
    }
    for (_, v) in params.c.iter() {
        norm = norm.max(v.norm());
    }
    norm
}

/// R^(1): squared spectral norms, τ-weighted values plus τ⁻¹-weighted
/// forward differences.
pub fn reg1(seq: &[Matrix], tau: f64) -> f64 {
    let mut value = 0.0;
    let mut diff = 0.0;
    for l in 1..seq.len() {
        value += spectral_norm_unchecked(&seq[l]).powi(2);
        diff += spectral_norm_unchecked(&seq[l].sub(&seq[l - 1])).powi(2);
    }
    tau * value + diff / tau
}

/// R^(2): the vector analogue of R^(1) with euclidean norms.
pub fn reg2(seq: &[Vector], tau: f64) -> f64 {
    let mut value = 0.0;
    let mut diff = 0.0;
    for l in 1..seq.len() {
        value += seq[l].norm().powi(2);
        diff += seq[l].sub(&seq[l - 1]).norm().powi(2);
    }
    tau * value + diff / tau
}

/// R^(3): cubed spectral norms on the flipped grid, τ²-weighted values
/// plus τ⁻¹-weighted differences in both grid directions.
pub fn reg3(grid: &FlippedGrid<Matrix>, tau: f64) -> f64 {
    let l_max = grid.layers();
    let mut value = 0.0;
    let mut diff = 0.0;
    for l in 1..=l_max {
        for k in 1..=l_max {
            value += spectral_norm_unchecked(grid.get(l, k)).powi(3);
            diff += spectral_norm_unchecked(&grid.get(l, k).sub(grid.get(l - 1, k))).powi(3);
            diff += spectral_norm_unchecked(&grid.get(l, k).sub(grid.get(l, k - 1))).powi(3);
        }
    }
    tau * tau * value + diff / tau
}

/// R^(4): the vector analogue of R^(3).
pub fn reg4(grid: &FlippedGrid<Vector>, tau: f64) -> f64 {
    let l_max = grid.layers();
    let mut value = 0.0;
    let mut diff = 0.0;
    for l in 1..=l_max {
        for k in 1..=l_max {
            value += grid.get(l, k).norm().powi(3);
            diff += grid.get(l, k).sub(grid.get(l - 1, k)).norm().powi(3);
            diff += grid.get(l, k).sub(grid.get(l, k - 1)).norm().powi(3);
        }
    }
    tau * tau * value + diff / tau
}

/// The full discrete regularizer R_L(Θ_L).
pub fn reg_discrete(params: &DiscreteParams) -> f64 {
    let tau = params.tau();
    reg1(&params.t1, tau)
        + reg1(&params.t2, tau)
        + reg1(&params.t3, tau)
        + reg1(&params.u, tau)
        + reg2(&params.a, tau)
        + reg1(&params.v, tau)
        + reg2(&params.b, tau)
        + reg3(&params.w.flip(), tau)
        + reg4(&params.c.flip(), tau)
}

/// The a-priori bound dominating every |x^l|:
///
/// L_φ‖Θ‖²M̄ [L_φ‖Θ‖²(M̄|d|+2)+‖Θ‖] exp(L_φ‖Θ‖²M̄) + L_φ‖Θ‖²(M̄|d|+2)+‖Θ‖
///
/// with M̄ = max_l G_A(T^l).
pub fn state_bound(cfg: &NetConfig, params: &DiscreteParams, d: &Vector) -> Result<f64> {
    params.validate_against(cfg)?;
    let lphi = cfg.activation.lipschitz();
    let theta = param_norm(params);
    let mut m_bar: f64 = 0.0;
    for l in 0..=cfg.layers {
        m_bar = m_bar.max(growth_bound(cfg.kernel, &params.transform(l))?);
    }
    let base = lphi * theta * theta * (m_bar * d.norm() + 2.0) + theta;
    Ok(lphi * theta * theta * m_bar * base * (lphi * theta * theta * m_bar).exp() + base)
}

/// The full objective of the discrete learning problem: mean data loss
/// over the dataset plus R_L. The loss function is supplied by the caller
/// (the training module in practice).
pub fn objective(
    cfg: &NetConfig,
    params: &DiscreteParams,
    data: &[(Vector, Vector)],
    loss: impl Fn(&Vector, &Vector) -> f64,
) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::InvalidInput("objective: empty dataset".into()));
    }
    let mut total = 0.0;
    for (d, g) in data {
        let traj = forward(cfg, params, d)?;
        total += loss(traj.final_state(), g);
    }
    Ok(total / data.len() as f64 + reg_discrete(params))
}

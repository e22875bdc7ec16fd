//! Experiment configuration: one JSON document with a section per
//! subcommand. Every field has a default, so an empty document `{}` (or no
//! --config at all) selects the standard protocol; unknown keys anywhere
//! are rejected.

use serde::{Deserialize, Serialize};

use dnl_core::discrete::Activation;
use dnl_core::kernel::KernelFamily;
use dnl_core::train::LossKind;

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Config {
    pub kernel_check: KernelCheckConfig,
    pub forward_converge: ForwardConvergeConfig,
    pub regularizer_converge: RegularizerConvergeConfig,
    pub solver_residual: SolverResidualConfig,
    pub train_gamma: TrainGammaConfig,
    pub gradcheck: GradcheckConfig,
}

impl Config {
    pub fn from_json(json: &str) -> Result<Self, String> {
        serde_json::from_str(json).map_err(|e| e.to_string())
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct KernelCheckConfig {
    pub samples: usize,
    pub dims: Vec<usize>,
    /// Debug switch: halves the growth envelope to force a failure with a
    /// witness dump.
    pub debug_halve_growth: bool,
}

impl Default for KernelCheckConfig {
    fn default() -> Self {
        KernelCheckConfig {
            samples: 1000,
            dims: vec![2, 3, 4, 8],
            debug_halve_growth: false,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ForwardConvergeConfig {
    pub l_list: Vec<usize>,
    pub oracle_resolution: usize,
    pub oracle_fine_factor: usize,
    pub max_oracle_residual: f64,
    pub kernel: KernelFamily,
    pub activation: Activation,
    pub n: usize,
    pub generator_scale: f64,
    pub min_slope: f64,
    pub require_monotone: bool,
}

impl Default for ForwardConvergeConfig {
    fn default() -> Self {
        ForwardConvergeConfig {
            l_list: vec![8, 16, 32, 64, 128],
            oracle_resolution: 4096,
            oracle_fine_factor: 4,
            max_oracle_residual: 1e-6,
            kernel: KernelFamily::Kronecker,
            activation: Activation::Tanh,
            n: 2,
            generator_scale: 0.8,
            min_slope: 0.33,
            require_monotone: true,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RegularizerConvergeConfig {
    pub l_list: Vec<usize>,
    pub n: usize,
    pub generator_scale: f64,
    pub n_quad: usize,
    /// Relative drift allowed between quadrature at n_quad/2 and n_quad.
    pub max_quadrature_drift: f64,
    /// |R_L/R − 1| allowed at the finest L.
    pub max_final_gap: f64,
    /// Gaps must trend monotonically toward 0 beyond this L (with slack).
    pub monotone_from: usize,
    pub monotone_slack: f64,
}

impl Default for RegularizerConvergeConfig {
    fn default() -> Self {
        RegularizerConvergeConfig {
            l_list: vec![16, 32, 64, 128, 256],
            n: 2,
            generator_scale: 0.8,
            n_quad: 1024,
            max_quadrature_drift: 1e-3,
            max_final_gap: 0.05,
            monotone_from: 32,
            monotone_slack: 0.05,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverResidualConfig {
    pub n_list: Vec<usize>,
    pub fine_factor: usize,
    pub kernel: KernelFamily,
    pub activation: Activation,
    pub n: usize,
    pub generator_scale: f64,
}

impl Default for SolverResidualConfig {
    fn default() -> Self {
        SolverResidualConfig {
            n_list: vec![32, 64, 128, 256, 512],
            fine_factor: 8,
            kernel: KernelFamily::Kronecker,
            activation: Activation::Tanh,
            n: 2,
            generator_scale: 0.8,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainGammaConfig {
    pub l_list: Vec<usize>,
    pub n: usize,
    pub samples: usize,
    pub teacher_layers: usize,
    pub teacher_scale: f64,
    pub kernel: KernelFamily,
    pub activation: Activation,
    pub loss: LossKind,
    pub loss_scale: f64,
    pub learning_rate: f64,
    pub momentum: f64,
    pub epochs: usize,
    /// Per-scalar uniform(−s, s) initialization scale.
    pub init_scale: f64,
    pub enforce_trend: bool,
    /// Allowed relative increase between consecutive final objectives.
    pub trend_slack: f64,
}

impl Default for TrainGammaConfig {
    fn default() -> Self {
        TrainGammaConfig {
            l_list: vec![4, 8, 16, 32],
            n: 2,
            samples: 16,
            teacher_layers: 64,
            teacher_scale: 0.6,
            kernel: KernelFamily::Kronecker,
            activation: Activation::Tanh,
            loss: LossKind::Mse,
            loss_scale: 1.0,
            // The difference penalties stiffen with depth; 0.004 is stable
            // up to L = 32 where 0.01 diverges.
            learning_rate: 0.004,
            momentum: 0.9,
            epochs: 2000,
            init_scale: 0.1,
            enforce_trend: true,
            trend_slack: 0.01,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GradcheckConfig {
    pub instances: usize,
    pub n: usize,
    pub layers: usize,
    pub samples: usize,
    pub step: f64,
    pub max_rel_error: f64,
    pub param_scale: f64,
}

impl Default for GradcheckConfig {
    fn default() -> Self {
        GradcheckConfig {
            instances: 20,
            n: 3,
            layers: 4,
            samples: 3,
            step: 1e-5,
            max_rel_error: 1e-5,
            param_scale: 0.4,
        }
    }
}

//! Envelope property suites for the non-local transformation: growth and
//! Lipschitz inequalities over seeded random instances, with offending
//! instances dumped as JSON witnesses.

use serde::Serialize;

use dnl_core::kernel::{apply_transform, growth_bound, lipschitz_bound, KernelFamily};
use dnl_core::linalg::spectral_norm;

use super::{random_transform, random_vector, seeded_rng};
use crate::csvio::{self, int_cell, sig17};
use crate::manifest::RunManifest;
use crate::{CliError, CliResult, RunContext};

const ENVELOPE_SLACK: f64 = 1e-9;

#[derive(Serialize)]
struct Witness {
    variant: String,
    check: String,
    trial: usize,
    n: usize,
    lhs: f64,
    bound: f64,
    xi1: Vec<f64>,
    xi2: Vec<f64>,
    xi3: Vec<f64>,
    z: Vec<f64>,
    z_prime: Option<Vec<f64>>,
}

pub struct KernelCheckSummary {
    pub samples_per_variant: usize,
    pub growth_violations: usize,
    pub lipschitz_violations: usize,
}

pub fn run(ctx: &RunContext) -> CliResult<KernelCheckSummary> {
    let cfg = ctx.config.kernel_check.clone();
    if cfg.samples == 0 {
        return Err(CliError::Usage(
            "kernel-check: sample count must be positive".into(),
        ));
    }
    if cfg.dims.is_empty() || cfg.dims.iter().any(|&n| n == 0) {
        return Err(CliError::Usage(
            "kernel-check: dims must be a nonempty list of positive sizes".into(),
        ));
    }

    let mut rows = Vec::new();
    let mut witnesses: Vec<Witness> = Vec::new();
    let mut growth_violations = 0usize;
    let mut lipschitz_violations = 0usize;

    for kernel in KernelFamily::ALL {
        let mut rng = seeded_rng(ctx.subseed(&format!("kernel-check:{}", kernel.name())));
        let mut variant_growth = 0usize;
        let mut variant_lipschitz = 0usize;
        let mut max_growth_margin = f64::NEG_INFINITY;
        let mut max_lipschitz_margin = f64::NEG_INFINITY;

        for trial in 0..cfg.samples {
            let n = cfg.dims[trial % cfg.dims.len()];
            let params = random_transform(n, &mut rng, 1.0);
            let z = random_vector(n, &mut rng, 1.0);
            let lhs = apply_transform(kernel, &params, &z)?.norm();
            let mut g = growth_bound(kernel, &params)?;
            if cfg.debug_halve_growth {
                g *= 0.5;
            }
            let bound = g * z.norm() + ENVELOPE_SLACK;
            max_growth_margin = max_growth_margin.max(lhs - bound);
            if lhs > bound {
                variant_growth += 1;
                if witnesses.len() < 32 {
                    witnesses.push(Witness {
                        variant: kernel.name().into(),
                        check: "growth".into(),
                        trial,
                        n,
                        lhs,
                        bound,
                        xi1: params.xi1.as_slice().to_vec(),
                        xi2: params.xi2.as_slice().to_vec(),
                        xi3: params.xi3.as_slice().to_vec(),
                        z: z.as_slice().to_vec(),
                        z_prime: None,
                    });
                }
            }
        }

        for trial in 0..cfg.samples {
            let n = cfg.dims[trial % cfg.dims.len()];
            let params = random_transform(n, &mut rng, 1.0);
            let params_prime = random_transform(n, &mut rng, 1.0);
            let z = random_vector(n, &mut rng, 1.0);
            let z_prime = random_vector(n, &mut rng, 1.0);
            let lhs = apply_transform(kernel, &params, &z)?
                .sub(&apply_transform(kernel, &params_prime, &z_prime)?)
                .norm();
            let param_dist = spectral_norm(&params.xi1.sub(&params_prime.xi1))?
                + spectral_norm(&params.xi2.sub(&params_prime.xi2))?
                + spectral_norm(&params.xi3.sub(&params_prime.xi3))?;
            let bound = lipschitz_bound(kernel, &params, &z, &z_prime)?
                * (param_dist + z.sub(&z_prime).norm())
                + ENVELOPE_SLACK;
            max_lipschitz_margin = max_lipschitz_margin.max(lhs - bound);
            if lhs > bound {
                variant_lipschitz += 1;
                if witnesses.len() < 32 {
                    witnesses.push(Witness {
                        variant: kernel.name().into(),
                        check: "lipschitz".into(),
                        trial,
                        n,
                        lhs,
                        bound,
                        xi1: params.xi1.as_slice().to_vec(),
                        xi2: params.xi2.as_slice().to_vec(),
                        xi3: params.xi3.as_slice().to_vec(),
                        z: z.as_slice().to_vec(),
                        z_prime: Some(z_prime.as_slice().to_vec()),
                    });
                }
            }
        }

        println!(
            "kernel-check: {:<20} growth {}/{} lipschitz {}/{}",
            kernel.name(),
            variant_growth,
            cfg.samples,
            variant_lipschitz,
            cfg.samples
        );
        growth_violations += variant_growth;
        lipschitz_violations += variant_lipschitz;
        rows.push(vec![
            kernel.name().to_string(),
            int_cell(cfg.samples),
            int_cell(variant_growth),
            int_cell(variant_lipschitz),
            sig17(max_growth_margin),
            sig17(max_lipschitz_margin),
        ]);
    }

    let csv = csvio::table(
        &[
            "variant",
            "samples",
            "growth_violations",
            "lipschitz_violations",
            "max_growth_margin",
            "max_lipschitz_margin",
        ],
        &rows,
    );
    csvio::write_file(&ctx.out_dir.join("kernel_check.csv"), &csv)?;
    let mut outputs = vec!["kernel_check.csv".to_string()];
    if !witnesses.is_empty() {
        let json = serde_json::to_string_pretty(&witnesses)
            .map_err(|e| CliError::Usage(e.to_string()))?;
        csvio::write_file(&ctx.out_dir.join("witnesses.json"), &json)?;
        outputs.push("witnesses.json".to_string());
    }
    RunManifest::new(ctx, "kernel-check", &cfg, outputs).write(&ctx.out_dir)?;

    let total = growth_violations + lipschitz_violations;
    if total > 0 {
        return Err(CliError::CheckFailed(format!(
            "kernel-check: {total} envelope violations (witnesses.json written)"
        )));
    }
    Ok(KernelCheckSummary {
        samples_per_variant: cfg.samples,
        growth_violations,
        lipschitz_violations,
    })
}

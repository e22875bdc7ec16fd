//! Reverse-mode gradient against the central finite-difference oracle over
//! seeded instances spanning kernels, activations and losses.

use dnl_core::discrete::{Activation, DiscreteParams, NetConfig};
use dnl_core::kernel::KernelFamily;
use dnl_core::linalg::Vector;
use dnl_core::train::{grad_fd, grad_reverse, Dataset, LossKind, LossSpec, Provenance};

use super::{random_vector, seeded_rng};
use crate::csvio::{self, int_cell, sig17};
use crate::manifest::RunManifest;
use crate::{CliError, CliResult, RunContext};

pub struct GradcheckSummary {
    pub worst_rel_error: f64,
    pub instances: usize,
}

/// Per-slot relative error with a floor at one thousandth of the
/// gradient's largest component, so near-zero slots are judged on a
/// scaled-absolute basis.
pub fn max_relative_error(reverse: &[f64], fd: &[f64]) -> f64 {
    let scale = fd.iter().fold(0.0_f64, |m, g| m.max(g.abs()));
    reverse
        .iter()
        .zip(fd.iter())
        .map(|(r, f)| {
            let denom = r.abs().max(f.abs()).max(1e-3 * scale).max(1e-12);
            (r - f).abs() / denom
        })
        .fold(0.0, f64::max)
}

pub fn run(ctx: &RunContext) -> CliResult<GradcheckSummary> {
    let cfg = ctx.config.gradcheck.clone();
    if cfg.instances == 0 || cfg.samples == 0 {
        return Err(CliError::Usage(
            "gradcheck: instances and samples must be positive".into(),
        ));
    }
    let mut rows = Vec::new();
    let mut worst: f64 = 0.0;
    for index in 0..cfg.instances {
        let kernel = KernelFamily::ALL[index % 3];
        let activation = match index % 5 {
            4 => Activation::Relu,
            1 | 3 => Activation::Identity,
            _ => Activation::Tanh,
        };
        let loss = LossSpec {
            kind: if index % 2 == 0 {
                LossKind::Mse
            } else {
                LossKind::CrossEntropy
            },
            scale: 1.0,
        };
        let net = NetConfig::new(kernel, activation, cfg.n, cfg.layers);
        let params = DiscreteParams::random_uniform(
            cfg.n,
            cfg.layers,
            cfg.param_scale,
            &mut seeded_rng(ctx.subseed(&format!("gradcheck:params:{index}"))),
        );
        let mut data_rng = seeded_rng(ctx.subseed(&format!("gradcheck:data:{index}")));
        let inputs: Vec<Vector> = (0..cfg.samples)
            .map(|_| random_vector(cfg.n, &mut data_rng, 1.0))
            .collect();
        let targets: Vec<Vector> = (0..cfg.samples)
            .map(|i| match loss.kind {
                LossKind::Mse => random_vector(cfg.n, &mut data_rng, 1.0),
                LossKind::CrossEntropy => Vector::basis(cfg.n, i % cfg.n),
            })
            .collect();
        let dataset = Dataset {
            inputs,
            targets,
            provenance: Provenance {
                seed: ctx.seed,
                description: format!("gradcheck instance {index}"),
            },
        };
        let (_, reverse) = grad_reverse(&net, &params, &dataset, &loss)?;
        let fd = grad_fd(&net, &params, &dataset, &loss, cfg.step)?;
        let err = max_relative_error(&reverse.to_flat(), &fd.to_flat());
        println!(
            "gradcheck: instance {index:<3} {:<20} {:<9} {:<13} max rel error {err:.3e}",
            kernel.name(),
            activation.name(),
            loss.name()
        );
        worst = worst.max(err);
        rows.push(vec![
            int_cell(index),
            kernel.name().to_string(),
            activation.name().to_string(),
            loss.name().to_string(),
            sig17(err),
        ]);
    }
    csvio::write_file(
        &ctx.out_dir.join("gradcheck.csv"),
        &csvio::table(
            &["instance", "kernel", "activation", "loss", "max_rel_error"],
            &rows,
        ),
    )?;
    RunManifest::new(ctx, "gradcheck", &cfg, vec!["gradcheck.csv".to_string()])
        .write(&ctx.out_dir)?;
    println!("gradcheck: worst relative error {worst:.3e}");

    if worst >= cfg.max_rel_error {
        return Err(CliError::CheckFailed(format!(
            "gradcheck: worst relative error {worst:e} at gate {:e}",
            cfg.max_rel_error
        )));
    }
    Ok(GradcheckSummary {
        worst_rel_error: worst,
        instances: cfg.instances,
    })
}

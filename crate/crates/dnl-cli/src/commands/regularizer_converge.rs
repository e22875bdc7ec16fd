//! Regularizer convergence: the discrete regularizer of the windowed-mean
//! recovery against the continuous Sobolev regularizer of the source pack.

use dnl_core::bridge::recovery_sequence;
use dnl_core::continuous::reg_continuous;
use dnl_core::discrete::reg_discrete;
use dnl_core::generator::{smooth_params, GeneratorConfig};

use crate::csvio::{self, int_cell, sig17};
use crate::manifest::RunManifest;
use crate::svg;
use crate::{CliError, CliResult, RunContext};

pub struct RegularizerConvergeSummary {
    pub r_continuous: f64,
    pub quadrature_drift: f64,
    /// (L, R_L, |R_L/R − 1|)
    pub gaps: Vec<(usize, f64, f64)>,
}

pub fn run(ctx: &RunContext) -> CliResult<RegularizerConvergeSummary> {
    let cfg = ctx.config.regularizer_converge.clone();
    if cfg.l_list.is_empty() || cfg.l_list.iter().any(|&l| l == 0) {
        return Err(CliError::Usage(
            "regularizer-converge: need positive depths".into(),
        ));
    }
    if cfg.n_quad < 2 {
        return Err(CliError::Usage(
            "regularizer-converge: n_quad must be at least 2".into(),
        ));
    }
    let theta = smooth_params(&GeneratorConfig {
        n: cfg.n,
        seed: ctx.subseed("regularizer-converge:generator"),
        scale: cfg.generator_scale,
    });
    let r_fine = reg_continuous(&theta, cfg.n_quad);
    let r_half = reg_continuous(&theta, cfg.n_quad / 2);
    let quadrature_drift = (r_half / r_fine - 1.0).abs();
    println!(
        "regularizer-converge: R(Θ) = {r_fine:.9e} (quadrature drift {quadrature_drift:.3e})"
    );

    let mut gaps = Vec::new();
    let mut rows = Vec::new();
    for &layers in &cfg.l_list {
        let r_l = reg_discrete(&recovery_sequence(&theta, layers));
        let ratio = r_l / r_fine;
        let gap = (ratio - 1.0).abs();
        println!("regularizer-converge: L={layers:<4} R_L = {r_l:.9e} ratio {ratio:.6}");
        rows.push(vec![
            int_cell(layers),
            sig17(1.0 / layers as f64),
            sig17(r_l),
            sig17(r_fine),
            sig17(ratio),
            sig17(gap),
        ]);
        gaps.push((layers, r_l, gap));
    }
    csvio::write_file(
        &ctx.out_dir.join("regularizer_converge.csv"),
        &csvio::table(
            &["l", "tau", "r_discrete", "r_continuous", "ratio", "gap"],
            &rows,
        ),
    )?;
    let mut outputs = vec!["regularizer_converge.csv".to_string()];
    if ctx.plot {
        let chart = svg::single_series_chart(
            "Regularizer convergence",
            "L",
            "|R_L/R - 1|",
            true,
            true,
            "gap",
            gaps.iter().map(|(l, _, g)| (*l as f64, *g)).collect(),
        );
        csvio::write_file(&ctx.out_dir.join("regularizer_converge.svg"), &chart)?;
        outputs.push("regularizer_converge.svg".to_string());
    }
    RunManifest::new(ctx, "regularizer-converge", &cfg, outputs).write(&ctx.out_dir)?;

    if quadrature_drift > cfg.max_quadrature_drift {
        return Err(CliError::CheckFailed(format!(
            "regularizer-converge: reference quadrature drift {quadrature_drift:e} above {:e}",
            cfg.max_quadrature_drift
        )));
    }
    let mut last_gap = f64::INFINITY;
    for (layers, _, gap) in &gaps {
        if *layers >= cfg.monotone_from {
            if *gap > last_gap * (1.0 + cfg.monotone_slack) {
                return Err(CliError::CheckFailed(format!(
                    "regularizer-converge: gap grew to {gap} at L={layers}"
                )));
            }
            last_gap = last_gap.min(*gap);
        }
    }
    let (final_l, _, final_gap) = gaps.last().expect("nonempty depth list");
    if *final_gap >= cfg.max_final_gap {
        return Err(CliError::CheckFailed(format!(
            "regularizer-converge: |R_L/R - 1| = {final_gap} at L={final_l}, gate {}",
            cfg.max_final_gap
        )));
    }
    Ok(RegularizerConvergeSummary {
        r_continuous: r_fine,
        quadrature_drift,
        gaps,
    })
}

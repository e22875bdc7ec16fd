//! Forward-state convergence: node-sample the smooth parameter pack at
//! each depth, run the discrete network, and measure the sup deviation
//! from a fine trapezoid solution of the integral equation; then fit the
//! log-log convergence rate.

use dnl_core::bridge::sample_params;
use dnl_core::continuous::{residual, solve, GridSolution, Scheme};
use dnl_core::discrete::{forward, NetConfig, SystemConfig};
use dnl_core::generator::{smooth_params, GeneratorConfig};
use dnl_core::linalg::Vector;

use super::{random_vector, seeded_rng};
use crate::csvio::{self, int_cell, sig17};
use crate::manifest::RunManifest;
use crate::ratefit::RateFit;
use crate::svg;
use crate::{CliError, CliResult, RunContext};

pub struct ForwardConvergeSummary {
    pub errors: Vec<(usize, f64)>,
    pub fit: RateFit,
    pub oracle_residual: f64,
}

/// Sup over [t_lo, t_hi] of |x − oracle(t)|: the oracle is piecewise
/// linear, so the max is attained at an oracle node or a window endpoint.
fn window_error(x: &Vector, oracle: &GridSolution, t_lo: f64, t_hi: f64) -> f64 {
    let steps = oracle.steps();
    let mut err = x.sub(&oracle.interpolate(t_lo)).norm();
    err = err.max(x.sub(&oracle.interpolate(t_hi)).norm());
    let j_lo = (t_lo * steps as f64).ceil() as usize;
    let j_hi = ((t_hi * steps as f64).floor() as usize).min(steps);
    for j in j_lo..=j_hi {
        err = err.max(x.sub(&oracle.states[j]).norm());
    }
    err
}

pub fn run(ctx: &RunContext) -> CliResult<ForwardConvergeSummary> {
    let cfg = ctx.config.forward_converge.clone();
    if cfg.l_list.len() < 3 || cfg.l_list.iter().any(|&l| l == 0) {
        return Err(CliError::Usage(
            "forward-converge: need at least three positive depths".into(),
        ));
    }
    let sys = SystemConfig {
        kernel: cfg.kernel,
        activation: cfg.activation,
        n: cfg.n,
    };
    let theta = smooth_params(&GeneratorConfig {
        n: cfg.n,
        seed: ctx.subseed("forward-converge:generator"),
        scale: cfg.generator_scale,
    });
    let d = random_vector(
        cfg.n,
        &mut seeded_rng(ctx.subseed("forward-converge:input")),
        1.0,
    );

    let oracle = solve(&sys, &theta, &d, cfg.oracle_resolution, Scheme::Trapezoid)?;
    let oracle_residual = residual(&sys, &theta, &d, &oracle, cfg.oracle_fine_factor)?;
    println!(
        "forward-converge: oracle N={} residual {:.3e}",
        cfg.oracle_resolution, oracle_residual
    );
    if oracle_residual > cfg.max_oracle_residual {
        return Err(CliError::Numerical(format!(
            "forward-converge: oracle residual {oracle_residual:e} exceeds {:e}; oracle untrusted",
            cfg.max_oracle_residual
        )));
    }

    let mut errors: Vec<(usize, f64)> = Vec::new();
    for &layers in &cfg.l_list {
        let discrete = sample_params(&theta, layers);
        let net = NetConfig::new(cfg.kernel, cfg.activation, cfg.n, layers);
        let traj = forward(&net, &discrete, &d)?;
        let tau = 1.0 / layers as f64;
        let mut err: f64 = 0.0;
        for l in 1..=layers {
            let window = window_error(
                &traj.states[l],
                &oracle,
                (l - 1) as f64 * tau,
                l as f64 * tau,
            );
            err = err.max(window);
        }
        println!("forward-converge: L={layers:<4} sup error {err:.6e}");
        errors.push((layers, err));
    }

    let taus: Vec<f64> = errors.iter().map(|(l, _)| 1.0 / *l as f64).collect();
    let errs: Vec<f64> = errors.iter().map(|(_, e)| *e).collect();
    let fit = RateFit::fit(&taus, &errs).ok_or_else(|| {
        CliError::Numerical("forward-converge: degenerate rate fit".into())
    })?;
    println!(
        "forward-converge: fitted slope {:.4} (R² {:.5}{})",
        fit.slope,
        fit.r_squared,
        if fit.dropped_coarsest {
            ", coarsest point dropped"
        } else {
            ""
        }
    );

    let rows: Vec<Vec<String>> = errors
        .iter()
        .map(|(l, e)| vec![int_cell(*l), sig17(1.0 / *l as f64), sig17(*e)])
        .collect();
    csvio::write_file(
        &ctx.out_dir.join("forward_converge.csv"),
        &csvio::table(&["l", "tau", "sup_error"], &rows),
    )?;
    csvio::write_file(
        &ctx.out_dir.join("rate_fit.csv"),
        &csvio::table(
            &["slope", "intercept", "r_squared", "dropped_coarsest"],
            &[vec![
                sig17(fit.slope),
                sig17(fit.intercept),
                sig17(fit.r_squared),
                int_cell(fit.dropped_coarsest as usize),
            ]],
        ),
    )?;
    let mut outputs = vec!["forward_converge.csv".to_string(), "rate_fit.csv".to_string()];
    if ctx.plot {
        let chart = svg::single_series_chart(
            "Forward convergence",
            "tau",
            "sup error",
            true,
            true,
            "sup error",
            errors.iter().map(|(l, e)| (1.0 / *l as f64, *e)).collect(),
        );
        csvio::write_file(&ctx.out_dir.join("forward_converge.svg"), &chart)?;
        outputs.push("forward_converge.svg".to_string());
    }
    RunManifest::new(ctx, "forward-converge", &cfg, outputs).write(&ctx.out_dir)?;

    if cfg.require_monotone {
        for pair in errors.windows(2) {
            if pair[1].1 >= pair[0].1 {
                return Err(CliError::CheckFailed(format!(
                    "forward-converge: error not strictly decreasing between L={} and L={}",
                    pair[0].0, pair[1].0
                )));
            }
        }
    }
    if fit.slope < cfg.min_slope {
        return Err(CliError::CheckFailed(format!(
            "forward-converge: slope {:.4} below floor {}",
            fit.slope, cfg.min_slope
        )));
    }
    Ok(ForwardConvergeSummary {
        errors,
        fit,
        oracle_residual,
    })
}

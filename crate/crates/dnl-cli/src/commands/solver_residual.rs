//! Integral-equation defect of the marching solver for both quadrature
//! schemes across grid resolutions, with empirical convergence orders.

use dnl_core::continuous::{residual, solve, Scheme};
use dnl_core::discrete::SystemConfig;
use dnl_core::generator::{smooth_params, GeneratorConfig};

use super::{random_vector, seeded_rng};
use crate::csvio::{self, int_cell, sig17};
use crate::manifest::RunManifest;
use crate::svg;
use crate::{CliError, CliResult, RunContext};

pub struct SolverResidualSummary {
    /// (scheme name, N, residual) in emission order.
    pub rows: Vec<(&'static str, usize, f64)>,
    /// Mean empirical order per scheme.
    pub orders: Vec<(&'static str, f64)>,
}

pub fn run(ctx: &RunContext) -> CliResult<SolverResidualSummary> {
    let cfg = ctx.config.solver_residual.clone();
    if cfg.n_list.len() < 2 || cfg.n_list.iter().any(|&n| n == 0) {
        return Err(CliError::Usage(
            "solver-residual: need at least two positive resolutions".into(),
        ));
    }
    let sys = SystemConfig {
        kernel: cfg.kernel,
        activation: cfg.activation,
        n: cfg.n,
    };
    let theta = smooth_params(&GeneratorConfig {
        n: cfg.n,
        seed: ctx.subseed("solver-residual:generator"),
        scale: cfg.generator_scale,
    });
    let d = random_vector(
        cfg.n,
        &mut seeded_rng(ctx.subseed("solver-residual:input")),
        1.0,
    );

    let mut csv_rows = Vec::new();
    let mut rows = Vec::new();
    let mut orders = Vec::new();
    let mut chart_series = Vec::new();
    for scheme in [Scheme::LeftRectangle, Scheme::Trapezoid] {
        let mut residuals = Vec::new();
        let mut prev: Option<(usize, f64)> = None;
        for &steps in &cfg.n_list {
            let sol = solve(&sys, &theta, &d, steps, scheme)?;
            let res = residual(&sys, &theta, &d, &sol, cfg.fine_factor)?;
            let order = prev.map(|(n0, r0)| (r0 / res).ln() / (steps as f64 / n0 as f64).ln());
            println!(
                "solver-residual: {:<15} N={steps:<5} residual {res:.6e}{}",
                scheme.name(),
                order.map(|o| format!(" order {o:.3}")).unwrap_or_default()
            );
            csv_rows.push(vec![
                scheme.name().to_string(),
                int_cell(steps),
                sig17(res),
                sig17(order.unwrap_or(f64::NAN)),
            ]);
            rows.push((scheme.name(), steps, res));
            residuals.push((steps as f64, res));
            prev = Some((steps, res));
        }
        let pairwise: Vec<f64> = residuals
            .windows(2)
            .map(|w| (w[0].1 / w[1].1).ln() / (w[1].0 / w[0].0).ln())
            .collect();
        let mean_order = pairwise.iter().sum::<f64>() / pairwise.len() as f64;
        println!("solver-residual: {:<15} mean order {mean_order:.3}", scheme.name());
        orders.push((scheme.name(), mean_order));
        chart_series.push(svg::Series {
            name: scheme.name().to_string(),
            points: residuals,
        });
    }

    csvio::write_file(
        &ctx.out_dir.join("solver_residual.csv"),
        &csvio::table(&["scheme", "n", "residual", "order_vs_prev"], &csv_rows),
    )?;
    let mut outputs = vec!["solver_residual.csv".to_string()];

    // Export the finest trapezoid solution grid alongside the defects.
    let finest = *cfg.n_list.iter().max().expect("nonempty resolution list");
    let sol = solve(&sys, &theta, &d, finest, Scheme::Trapezoid)?;
    let solution_file = format!("solution_n{finest}.csv");
    csvio::write_file(&ctx.out_dir.join(&solution_file), &sol.to_csv_string())?;
    outputs.push(solution_file);
    if ctx.plot {
        let chart = svg::line_chart(&svg::Chart {
            title: "Solver residual vs grid resolution".into(),
            x_label: "N".into(),
            y_label: "residual".into(),
            log_x: true,
            log_y: true,
            series: chart_series,
        });
        csvio::write_file(&ctx.out_dir.join("solver_residual.svg"), &chart)?;
        outputs.push("solver_residual.svg".to_string());
    }
    RunManifest::new(ctx, "solver-residual", &cfg, outputs).write(&ctx.out_dir)?;

    Ok(SolverResidualSummary { rows, orders })
}

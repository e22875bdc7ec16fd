//! Depth sweep of the discrete learning problem on a shared teacher
//! dataset: train at each L from a shared-seed initialization and report
//! the final objectives, whose trend toward the deep limit is the
//! experiment's subject.

use dnl_core::discrete::{DiscreteParams, NetConfig, SystemConfig};
use dnl_core::train::{teacher_student_dataset, train, LossSpec, TrainConfig};

use super::seeded_rng;
use crate::csvio::{self, int_cell, sig17};
use crate::manifest::RunManifest;
use crate::svg;
use crate::{CliError, CliResult, RunContext};

pub struct TrainGammaSummary {
    /// (L, final data loss, final reg, final objective)
    pub finals: Vec<(usize, f64, f64, f64)>,
}

pub fn run(ctx: &RunContext) -> CliResult<TrainGammaSummary> {
    let cfg = ctx.config.train_gamma.clone();
    if cfg.l_list.is_empty() || cfg.l_list.iter().any(|&l| l == 0) {
        return Err(CliError::Usage("train-gamma: need positive depths".into()));
    }
    if cfg.samples == 0 || cfg.epochs == 0 {
        return Err(CliError::Usage(
            "train-gamma: samples and epochs must be positive".into(),
        ));
    }
    let sys = SystemConfig {
        kernel: cfg.kernel,
        activation: cfg.activation,
        n: cfg.n,
    };
    let (dataset, _) = teacher_student_dataset(
        &sys,
        ctx.subseed("train-gamma:teacher"),
        cfg.teacher_scale,
        cfg.teacher_layers,
        cfg.samples,
        ctx.subseed("train-gamma:data"),
    )?;
    println!("train-gamma: {}", dataset.provenance.description);
    let loss = LossSpec {
        kind: cfg.loss,
        scale: cfg.loss_scale,
    };
    let init_seed = ctx.subseed("train-gamma:init");
    let tc = TrainConfig {
        learning_rate: cfg.learning_rate,
        momentum: cfg.momentum,
        epochs: cfg.epochs,
        seed: init_seed,
    };

    let mut finals = Vec::new();
    let mut outputs = Vec::new();
    let mut trace_series = Vec::new();
    for &layers in &cfg.l_list {
        let net = NetConfig::new(cfg.kernel, cfg.activation, cfg.n, layers);
        let init = DiscreteParams::random_uniform(
            cfg.n,
            layers,
            cfg.init_scale,
            &mut seeded_rng(init_seed),
        );
        let (trained, trace) = train(&net, &init, &dataset, &loss, &tc).map_err(|e| match e {
            dnl_core::Error::TrainingDiverged { epoch, objective } => CliError::Numerical(format!(
                "train-gamma: L={layers} diverged at epoch {epoch} (objective {objective:e})"
            )),
            other => CliError::from(other),
        })?;
        let trace_rows: Vec<Vec<String>> = trace
            .iter()
            .map(|row| {
                vec![
                    int_cell(row.epoch),
                    sig17(row.data_loss),
                    sig17(row.reg),
                    sig17(row.total),
                ]
            })
            .collect();
        let trace_file = format!("trace_l{layers}.csv");
        csvio::write_file(
            &ctx.out_dir.join(&trace_file),
            &csvio::table(&["epoch", "data_loss", "reg", "total"], &trace_rows),
        )?;
        outputs.push(trace_file);
        let params_file = format!("params_l{layers}.json");
        csvio::write_file(
            &ctx.out_dir.join(&params_file),
            &trained
                .to_json_string()
                .map_err(|e| CliError::Numerical(e.to_string()))?,
        )?;
        outputs.push(params_file);
        let last = trace.last().expect("trace has a final row");
        println!(
            "train-gamma: L={layers:<4} final objective {:.9e} (data {:.3e}, reg {:.6e})",
            last.total, last.data_loss, last.reg
        );
        finals.push((layers, last.data_loss, last.reg, last.total));
        trace_series.push(svg::Series {
            name: format!("L={layers}"),
            points: trace
                .iter()
                .map(|r| (r.epoch as f64, r.total))
                .collect(),
        });
    }

    let mut rows = Vec::new();
    let mut prev: Option<f64> = None;
    for (layers, data_loss, reg, total) in &finals {
        let drop = prev.map(|p| p - total).unwrap_or(f64::NAN);
        rows.push(vec![
            int_cell(*layers),
            sig17(1.0 / *layers as f64),
            sig17(*data_loss),
            sig17(*reg),
            sig17(*total),
            sig17(drop),
        ]);
        prev = Some(*total);
    }
    csvio::write_file(
        &ctx.out_dir.join("train_gamma.csv"),
        &csvio::table(
            &["l", "tau", "final_data_loss", "final_reg", "final_objective", "drop_from_prev"],
            &rows,
        ),
    )?;
    outputs.push("train_gamma.csv".to_string());
    if ctx.plot {
        let finals_chart = svg::single_series_chart(
            "Final objective vs depth",
            "L",
            "objective",
            true,
            false,
            "final objective",
            finals.iter().map(|(l, _, _, t)| (*l as f64, *t)).collect(),
        );
        csvio::write_file(&ctx.out_dir.join("train_gamma.svg"), &finals_chart)?;
        outputs.push("train_gamma.svg".to_string());
        let traces_chart = svg::line_chart(&svg::Chart {
            title: "Training objective vs epoch".into(),
            x_label: "epoch".into(),
            y_label: "objective".into(),
            log_x: false,
            log_y: true,
            series: trace_series,
        });
        csvio::write_file(&ctx.out_dir.join("train_gamma_traces.svg"), &traces_chart)?;
        outputs.push("train_gamma_traces.svg".to_string());
    }
    RunManifest::new(ctx, "train-gamma", &cfg, outputs).write(&ctx.out_dir)?;

    if cfg.enforce_trend {
        for pair in finals.windows(2) {
            let (l0, _, _, t0) = pair[0];
            let (l1, _, _, t1) = pair[1];
            if t1 > t0 * (1.0 + cfg.trend_slack) {
                return Err(CliError::CheckFailed(format!(
                    "train-gamma: objective rose from {t0:.6e} (L={l0}) to {t1:.6e} (L={l1})"
                )));
            }
        }
        if finals.len() >= 4 {
            let first_drop = (finals[0].3 - finals[1].3).abs();
            let last_drop = (finals[finals.len() - 2].3 - finals[finals.len() - 1].3).abs();
            if last_drop >= first_drop {
                return Err(CliError::CheckFailed(format!(
                    "train-gamma: improvements not diminishing (first {first_drop:.3e}, last {last_drop:.3e})"
                )));
            }
        }
    }
    Ok(TrainGammaSummary { finals })
}

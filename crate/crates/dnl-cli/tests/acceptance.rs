//! Acceptance suite: one test per criterion, each printing a PASS/FAIL
//! line with its runtime against the stated budget (run with
//! `-- --nocapture` to see the lines for passing criteria).

use std::time::{Duration, Instant};

use dnl_cli::commands;
use dnl_cli::config::Config;
use dnl_cli::RunContext;
use dnl_core::bridge::{extend_params, ExtensionMode};
use dnl_core::continuous::{cont_bound, solve, Scheme};
use dnl_core::discrete::{
    forward, state_bound, Activation, DiscreteParams, NetConfig, Triangular,
};
use dnl_core::generator::{smooth_params, GeneratorConfig};
use dnl_core::kernel::KernelFamily;
use dnl_core::linalg::{Matrix, Vector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SEED: u64 = 42;

fn criterion(name: &str, budget: Duration, body: impl FnOnce() -> Result<String, String>) {
    let start = Instant::now();
    let outcome = body();
    let elapsed = start.elapsed();
    match outcome {
        Ok(detail) => {
            let on_time = elapsed <= budget;
            println!(
                "ACCEPTANCE {name}: {} ({detail}; {elapsed:.2?} of {budget:?} budget)",
                if on_time { "PASS" } else { "FAIL" }
            );
            assert!(on_time, "{name}: runtime {elapsed:?} exceeds budget {budget:?}");
        }
        Err(message) => {
            println!("ACCEPTANCE {name}: FAIL ({message}; {elapsed:.2?})");
            panic!("{name}: {message}");
        }
    }
}

fn default_ctx(dir: &tempfile::TempDir, plot: bool) -> RunContext {
    RunContext::new(Config::default(), dir.path(), SEED, plot)
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn random_vector(n: usize, r: &mut ChaCha8Rng) -> Vector {
    Vector::new((0..n).map(|_| r.gen_range(-1.0..1.0)).collect())
}

#[test]
fn c1_envelope_suite() {
    criterion("C1 envelope suite", Duration::from_secs(10), || {
        let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
        let summary =
            commands::kernel_check::run(&default_ctx(&dir, false)).map_err(|e| e.to_string())?;
        if summary.growth_violations + summary.lipschitz_violations != 0 {
            return Err("envelope violations".into());
        }
        Ok(format!(
            "{} samples per variant, 0 violations",
            summary.samples_per_variant
        ))
    });
}

#[test]
fn c2_keystone_consistency() {
    criterion("C2 keystone consistency", Duration::from_secs(5), || {
        let mut max_dev: f64 = 0.0;
        for (i, layers) in [4usize, 8, 16].iter().enumerate() {
            for combo in 0..9 {
                let kernel = KernelFamily::ALL[combo % 3];
                let activation = Activation::ALL[combo / 3];
                let cfg = NetConfig::new(kernel, activation, 2, *layers);
                let params = DiscreteParams::random_uniform(
                    2,
                    *layers,
                    0.4,
                    &mut rng(SEED + (i * 9 + combo) as u64),
                );
                let d = random_vector(2, &mut rng(SEED + 100 + combo as u64));
                let traj = forward(&cfg, &params, &d).map_err(|e| e.to_string())?;
                let extended = extend_params(&params, ExtensionMode::Constant);
                let sol = solve(&cfg.system(), &extended, &d, *layers, Scheme::LeftRectangle)
                    .map_err(|e| e.to_string())?;
                for (x, y) in traj.states.iter().zip(sol.states.iter()) {
                    max_dev = max_dev.max(x.sub(y).inf_norm());
                }
            }
        }
        if max_dev > 1e-12 {
            return Err(format!("max deviation {max_dev:e} exceeds 1e-12"));
        }
        Ok(format!(
            "27 kernel/activation/depth combinations, max deviation {max_dev:e}"
        ))
    });
}

#[test]
fn c3_forward_convergence_rate() {
    criterion("C3 forward convergence rate", Duration::from_secs(60), || {
        let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
        let summary =
            commands::forward_converge::run(&default_ctx(&dir, false)).map_err(|e| e.to_string())?;
        if summary.oracle_residual >= 1e-6 {
            return Err(format!("oracle residual {:e}", summary.oracle_residual));
        }
        for pair in summary.errors.windows(2) {
            if pair[1].1 >= pair[0].1 {
                return Err("errors not strictly decreasing".into());
            }
        }
        if summary.fit.slope < 0.33 {
            return Err(format!("slope {} below 0.33", summary.fit.slope));
        }
        Ok(format!(
            "slope {:.3} (R² {:.4}), errors strictly decreasing over L ∈ {{8..128}}",
            summary.fit.slope, summary.fit.r_squared
        ))
    });
}

#[test]
fn c4_state_bounds() {
    criterion("C4 a-priori state bounds", Duration::from_secs(30), || {
        // 200 discrete instances, n ≤ 4, L ≤ 16.
        let mut r = rng(SEED + 1000);
        for trial in 0..200 {
            let n = 2 + trial % 3;
            let layers = [2, 4, 8, 16][trial % 4];
            let kernel = KernelFamily::ALL[trial % 3];
            let activation = Activation::ALL[(trial / 3) % 3];
            let cfg = NetConfig::new(kernel, activation, n, layers);
            let params =
                DiscreteParams::random_uniform(n, layers, 0.7, &mut rng(SEED + 2000 + trial as u64));
            let d = random_vector(n, &mut r);
            let bound = state_bound(&cfg, &params, &d).map_err(|e| e.to_string())?;
            let traj = forward(&cfg, &params, &d).map_err(|e| e.to_string())?;
            if traj.max_norm() > bound {
                return Err(format!(
                    "discrete instance {trial}: state {} above bound {bound}",
                    traj.max_norm()
                ));
            }
        }
        // 100 continuous instances.
        for trial in 0..100 {
            let n = 2 + trial % 2;
            let kernel = KernelFamily::ALL[trial % 3];
            let activation = Activation::ALL[(trial / 3) % 3];
            let sys = dnl_core::discrete::SystemConfig {
                kernel,
                activation,
                n,
            };
            let params = smooth_params(&GeneratorConfig {
                n,
                seed: SEED + 3000 + trial as u64,
                scale: 0.7,
            });
            let d = random_vector(n, &mut r);
            let bound = cont_bound(&sys, &params, &d).map_err(|e| e.to_string())?;
            let sol = solve(&sys, &params, &d, 96, Scheme::Trapezoid).map_err(|e| e.to_string())?;
            if sol.max_norm() > bound {
                return Err(format!(
                    "continuous instance {trial}: state {} above bound {bound}",
                    sol.max_norm()
                ));
            }
        }
        Ok("200 discrete + 100 continuous instances, 0 violations".into())
    });
}

#[test]
fn c5_regularizer_convergence() {
    criterion("C5 regularizer convergence", Duration::from_secs(60), || {
        let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
        let summary = commands::regularizer_converge::run(&default_ctx(&dir, false))
            .map_err(|e| e.to_string())?;
        if summary.quadrature_drift >= 1e-3 {
            return Err(format!("quadrature drift {:e}", summary.quadrature_drift));
        }
        let (final_l, _, final_gap) = summary.gaps.last().copied().ok_or("empty sweep")?;
        if final_l != 256 || final_gap >= 0.05 {
            return Err(format!("|R_L/R − 1| = {final_gap} at L = {final_l}"));
        }
        Ok(format!(
            "|R_256/R − 1| = {final_gap:.4}, reference stable to {:.1e}",
            summary.quadrature_drift
        ))
    });
}

#[test]
fn c6_gradient_correctness() {
    criterion("C6 gradient correctness", Duration::from_secs(60), || {
        let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
        let summary =
            commands::gradcheck::run(&default_ctx(&dir, false)).map_err(|e| e.to_string())?;
        if summary.worst_rel_error >= 1e-5 {
            return Err(format!("worst relative error {:e}", summary.worst_rel_error));
        }
        Ok(format!(
            "{} instances, worst relative error {:.2e}",
            summary.instances, summary.worst_rel_error
        ))
    });
}

#[test]
fn c7_gamma_trend() {
    criterion("C7 depth-sweep training trend", Duration::from_secs(300), || {
        let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
        let summary =
            commands::train_gamma::run(&default_ctx(&dir, false)).map_err(|e| e.to_string())?;
        let finals = &summary.finals;
        if finals.len() != 4 {
            return Err("expected the default L ∈ {4,8,16,32} sweep".into());
        }
        for pair in finals.windows(2) {
            if pair[1].3 > pair[0].3 * 1.01 {
                return Err(format!(
                    "objective rose beyond 1% slack: {} (L={}) to {} (L={})",
                    pair[0].3, pair[0].0, pair[1].3, pair[1].0
                ));
            }
        }
        let first_drop = (finals[0].3 - finals[1].3).abs();
        let last_drop = (finals[2].3 - finals[3].3).abs();
        if last_drop >= first_drop {
            return Err(format!(
                "improvements not diminishing: |Δ(32,16)| = {last_drop:e} vs |Δ(8,4)| = {first_drop:e}"
            ));
        }
        Ok(format!(
            "objectives {:?} non-increasing, |Δ(32,16)| = {last_drop:.2e} < |Δ(8,4)| = {first_drop:.2e}",
            finals.iter().map(|f| f.3).collect::<Vec<_>>()
        ))
    });
}

fn read_csvs(dir: &std::path::Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .unwrap()
        .filter_map(|entry| {
            let entry = entry.unwrap();
            let name = entry.file_name().to_string_lossy().to_string();
            if name.ends_with(".csv") || name.ends_with(".svg") {
                Some((name, std::fs::read(entry.path()).unwrap()))
            } else {
                None
            }
        })
        .collect();
    files.sort();
    files
}

#[test]
fn c8_determinism() {
    criterion("C8 rerun determinism", Duration::from_secs(120), || {
        // Reduced workloads: determinism is about bytes, not scale.
        let config = Config::from_json(
            r#"{
                "solver_residual": {"n_list": [16, 32, 64], "fine_factor": 4},
                "forward_converge": {"l_list": [8, 16, 32], "oracle_resolution": 512},
                "train_gamma": {"l_list": [4, 8], "epochs": 40, "enforce_trend": false}
            }"#,
        )
        .map_err(|e| e)?;
        let mut compared = 0usize;
        type Runner = fn(&RunContext) -> Result<(), String>;
        let runners: [(&str, Runner); 3] = [
            ("solver-residual", |ctx| {
                commands::solver_residual::run(ctx).map(|_| ()).map_err(|e| e.to_string())
            }),
            ("forward-converge", |ctx| {
                commands::forward_converge::run(ctx).map(|_| ()).map_err(|e| e.to_string())
            }),
            ("train-gamma", |ctx| {
                commands::train_gamma::run(ctx).map(|_| ()).map_err(|e| e.to_string())
            }),
        ];
        for (name, runner) in runners {
            let dir_a = tempfile::tempdir().map_err(|e| e.to_string())?;
            let dir_b = tempfile::tempdir().map_err(|e| e.to_string())?;
            runner(&RunContext::new(config.clone(), dir_a.path(), SEED, true))?;
            runner(&RunContext::new(config.clone(), dir_b.path(), SEED, true))?;
            let files_a = read_csvs(dir_a.path());
            let files_b = read_csvs(dir_b.path());
            if files_a.is_empty() || files_a.len() != files_b.len() {
                return Err(format!("{name}: output sets differ"));
            }
            for ((name_a, bytes_a), (name_b, bytes_b)) in files_a.iter().zip(files_b.iter()) {
                if name_a != name_b || bytes_a != bytes_b {
                    return Err(format!("{name}: {name_a} differs between reruns"));
                }
                compared += 1;
            }
        }
        Ok(format!("{compared} CSV/SVG files byte-identical across reruns"))
    });
}

#[test]
fn c9_structural_invariants() {
    criterion("C9 structural invariants", Duration::from_secs(5), || {
        // Flip: exhaustive case-split check on small L with distinct
        // scalar entries.
        for layers in 1..=6usize {
            let tri = Triangular::build(layers, |l, k| {
                Matrix::new(1, vec![(10 * l + k) as f64])
            });
            let grid = tri.flip();
            for i in 0..=layers {
                for j in 0..=layers {
                    let (l, k) = match (i, j) {
                        (0, 0) => (1, 1),
                        (i, 0) => (i, 1),
                        (0, j) => (j, 1),
                        (i, j) => (i.max(j), i.min(j)),
                    };
                    if grid.get(i, j) != tri.get(l, k) {
                        return Err(format!("flip mismatch at ({i},{j}) for L={layers}"));
                    }
                    if grid.get(i, j) != grid.get(j, i) {
                        return Err(format!("flip asymmetry at ({i},{j}) for L={layers}"));
                    }
                }
            }
        }
        // Linear extension interpolates its nodes exactly; constant
        // extension honors the left-open endpoint convention.
        let mut r = rng(SEED + 5000);
        let layers = 9;
        let params = DiscreteParams::random_uniform(3, layers, 1.0, &mut r);
        let linear = extend_params(&params, ExtensionMode::Linear);
        for l in 0..=layers {
            let t = l as f64 / layers as f64;
            if linear.u.value(t) != params.u[l] || linear.a.value(t) != params.a[l] {
                return Err(format!("linear extension misses node {l}"));
            }
        }
        let constant = extend_params(&params, ExtensionMode::Constant);
        if constant.u.value(0.0) != params.u[0] || constant.u.value(1e-11) != params.u[1] {
            return Err("constant extension endpoint convention broken".into());
        }
        // Bilinear symmetry on random probes.
        for probe in 0..100 {
            let t = (probe as f64 * 0.37) % 1.0;
            let s = (probe as f64 * 0.61 + 0.13) % 1.0;
            let asym = linear.w.value(t, s).sub(&linear.w.value(s, t)).max_abs();
            if asym > 1e-14 {
                return Err(format!("bilinear asymmetry {asym:e} at ({t}, {s})"));
            }
        }
        // JSON round-trip is bit-exact.
        for seed in 0..5 {
            let p = DiscreteParams::random_uniform(2, 5, 0.9, &mut rng(SEED + 6000 + seed));
            let back = DiscreteParams::from_json_str(&p.to_json_string().map_err(|e| e.to_string())?)
                .map_err(|e| e.to_string())?;
            if back.to_flat() != p.to_flat() {
                return Err("JSON round trip not exact".into());
            }
        }
        Ok("flip (exhaustive L ≤ 6), node interpolation, bilinear symmetry, JSON round-trip".into())
    });
}

//! Convergence behaviour of the bridge constructions on smooth seeded
//! parameter packs: extended recoveries approach the continuous pack, node
//! sampling converges at first order, and the recovered discrete
//! regularizer approaches the continuous one.

mod common;

use dnl_core::bridge::{extend_params, recovery_sequence, sample_params, sup_distance, ExtensionMode};
use dnl_core::continuous::reg_continuous;
use dnl_core::discrete::reg_discrete;
use dnl_core::generator::{smooth_params, GeneratorConfig};

#[test]
fn extended_recovery_converges_to_the_source_pack() {
    let theta = smooth_params(&GeneratorConfig {
        n: 2,
        seed: 71,
        scale: 0.8,
    });
    let mut previous = f64::INFINITY;
    let mut last = f64::INFINITY;
    for layers in [8, 16, 32, 64] {
        let recovered = recovery_sequence(&theta, layers);
        let dist = sup_distance(&extend_params(&recovered, ExtensionMode::Linear), &theta, 256);
        // Monotone non-increasing within 5% slack, and vanishing.
        assert!(
            dist <= previous * 1.05,
            "L={layers}: distance {dist} vs previous {previous}"
        );
        previous = previous.min(dist);
        last = dist;
    }
    assert!(last < 0.05, "distance at L=64 still {last}");
}

#[test]
fn sampled_extension_distance_roughly_halves() {
    let theta = smooth_params(&GeneratorConfig {
        n: 2,
        seed: 72,
        scale: 0.8,
    });
    let mut previous: Option<f64> = None;
    for layers in [8, 16, 32, 64] {
        let extended = extend_params(&sample_params(&theta, layers), ExtensionMode::Constant);
        let dist = sup_distance(&extended, &theta, 512);
        if let Some(prev) = previous {
            let ratio = dist / prev;
            assert!(
                (0.3..0.8).contains(&ratio),
                "L={layers}: ratio {ratio} (dist {dist}, prev {prev})"
            );
        }
        previous = Some(dist);
    }
}

#[test]
fn constant_pack_recovery_regularizer_closed_form() {
    // Recovery of a constant pack is constant at every depth, so R_L
    // collapses to its value terms: 3‖T‖² + ‖U‖² + |a|² + ‖V‖² + |b|²
    // + ‖W‖³ + |c|³ for every L.
    use dnl_core::continuous::ContinuousParams;
    use dnl_core::linalg::{Matrix, Vector};
    let p = ContinuousParams::constant(
        [
            Matrix::identity(2).scale(0.5),
            Matrix::identity(2).scale(0.5),
            Matrix::identity(2).scale(0.5),
        ],
        Matrix::identity(2).scale(2.0),
        Vector::new(vec![0.6, 0.8]),
        Matrix::identity(2).scale(3.0),
        Vector::new(vec![0.0, 0.5]),
        Matrix::identity(2).scale(0.5),
        Vector::new(vec![2.0, 0.0]),
    );
    let expected = 3.0 * 0.25 + 4.0 + 1.0 + 9.0 + 0.25 + 0.125 + 8.0;
    for layers in [1, 3, 8, 17] {
        let r_l = reg_discrete(&recovery_sequence(&p, layers));
        assert!(
            (r_l - expected).abs() < 1e-10,
            "L={layers}: R_L = {r_l} vs closed form {expected}"
        );
    }
}

#[test]
fn recovered_regularizer_approaches_continuous_value() {
    let theta = smooth_params(&GeneratorConfig {
        n: 2,
        seed: 73,
        scale: 0.8,
    });
    let r_continuous = reg_continuous(&theta, 1024);
    let mut last_gap = f64::INFINITY;
    for layers in [16, 32, 64, 128] {
        let r_l = reg_discrete(&recovery_sequence(&theta, layers));
        let gap = (r_l / r_continuous - 1.0).abs();
        assert!(
            gap <= last_gap * 1.05,
            "L={layers}: |ratio-1| grew to {gap} from {last_gap}"
        );
        last_gap = last_gap.min(gap);
    }
    assert!(
        last_gap < 0.1,
        "at L=128 the regularizer gap is still {last_gap}"
    );
}

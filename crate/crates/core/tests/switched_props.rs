use bswitch_core::switched::{compare, presets, simulate, LinearSubsystem, Mode, SwitchedSystem, SwitchingRule};
use proptest::prelude::*;

fn diagonal_pair(delta: f64) -> SwitchedSystem {
    let a1 = LinearSubsystem::from_rows(&[&[-1.0, 0.0], &[0.0, -2.0]]).unwrap();
    let a2 = LinearSubsystem::from_rows(&[&[-3.0, 0.0], &[0.0, -1.0]]).unwrap();
    SwitchedSystem::new(vec![a1, a2], SwitchingRule::StateSign { delta, degree: 100, composed: false }).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn blended_weights_are_convex_at_every_step(
        preset in prop::sample::select(presets::NAMES.to_vec()),
        x0 in prop::collection::vec(-2.0..2.0_f64, 2),
    ) {
        let sys = presets::preset(preset).unwrap();
        let traj = simulate(&sys, &x0, 1.0, 1e-3, Mode::Blended).unwrap();
        for w in &traj.weights {
            prop_assert!(w.iter().all(|v| (0.0..=1.0).contains(v)));
            prop_assert!((w.iter().sum::<f64>() - 1.0).abs() <= 1e-9);
        }
    }

    #[test]
    fn time_pulse_weights_are_convex(t0 in 0.05..0.45_f64, len in 0.05..0.5_f64, degree in 5u32..120) {
        let t1 = (t0 + len).min(1.0);
        let a = LinearSubsystem::from_rows(&[&[-1.0, 1.0], &[-1.0, -3.0]]).unwrap();
        let b = LinearSubsystem::from_rows(&[&[0.01, 3.0], &[-1.0, -4.0]]).unwrap();
        let windows = vec![vec![(0.0, t0), (t1, 1.0)], vec![(t0, t1)]];
        let sys = SwitchedSystem::new(vec![a, b], SwitchingRule::TimePulse { windows, degree }).unwrap();
        let traj = simulate(&sys, &[1.0, 1.0], 1.0, 1e-2, Mode::Blended).unwrap();
        for w in &traj.weights {
            prop_assert!(w.iter().all(|v| (0.0..=1.0).contains(v)));
            prop_assert!((w.iter().sum::<f64>() - 1.0).abs() <= 1e-9);
        }
    }

    #[test]
    fn identical_subsystems_make_blending_invisible(x0 in prop::collection::vec(-2.0..2.0_f64, 2)) {
        let sys = presets::preset("basic").unwrap();
        let cmp = compare(&sys, &x0, 5.0, 1e-3).unwrap();
        prop_assert_eq!(cmp.standard.times.len(), cmp.blended.times.len());
        let steps = cmp.standard.times.len() as f64;
        prop_assert!(cmp.sup_norm_gap <= 1e-9 * steps, "gap {}", cmp.sup_norm_gap);
    }

    #[test]
    fn sharp_blend_saturates_without_switching(x0 in prop::collection::vec(0.5..2.0_f64, 2)) {
        // Both modes keep the states positive, so the crisp rule never switches.
        let sys = diagonal_pair(1e3);
        let cmp = compare(&sys, &x0, 2.0, 1e-3).unwrap();
        prop_assert!(cmp.standard.weights.iter().all(|w| w == &[1.0, 0.0]));
        prop_assert!(cmp.sup_norm_gap <= 1e-3, "gap {}", cmp.sup_norm_gap);
    }

    #[test]
    fn standard_mode_is_positively_homogeneous(
        x0 in prop::collection::vec(-2.0..2.0_f64, 2),
        c in 0.1..10.0_f64,
    ) {
        let sys = presets::preset("example1").unwrap();
        let base = simulate(&sys, &x0, 2.0, 1e-2, Mode::Standard).unwrap();
        let scaled_x0: Vec<f64> = x0.iter().map(|v| c * v).collect();
        let scaled = simulate(&sys, &scaled_x0, 2.0, 1e-2, Mode::Standard).unwrap();
        let scale = x0.iter().fold(0.0_f64, |m, v| m.max(v.abs())) * c + 1e-300;
        for (a, b) in base.states.iter().zip(&scaled.states) {
            for (p, q) in a.iter().zip(b) {
                prop_assert!((c * p - q).abs() <= 1e-9 * scale);
            }
        }
    }
}

#[test]
fn simulation_is_bitwise_repeatable() {
    let sys = presets::preset("example1").unwrap();
    let a = compare(&sys, &[1.0, -0.5], 3.0, 1e-3).unwrap();
    let b = compare(&sys, &[1.0, -0.5], 3.0, 1e-3).unwrap();
    assert_eq!(a, b);
}

/// With the two subsystems listed the other way round, the unstable example
/// blows up in both modes.
#[test]
fn swapped_example2_diverges_in_both_modes() {
    let mats = presets::matrices("example2").unwrap();
    let subs = mats.iter().rev().map(|m| LinearSubsystem::from_rows(&[&m[0], &m[1]]).unwrap()).collect();
    let rule = SwitchingRule::StateSign { delta: presets::DELTA, degree: presets::DEGREE, composed: false };
    let sys = SwitchedSystem::new(subs, rule).unwrap();
    for mode in [Mode::Standard, Mode::Blended] {
        let traj = simulate(&sys, &[1.0, 1.0], 10.0, 1e-4, mode).unwrap();
        assert!(traj.status.diverged(), "{mode} stayed bounded");
        assert!(traj.final_time() < 10.0);
    }
}

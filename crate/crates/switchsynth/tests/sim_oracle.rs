//! Simulation checks against an independent RK4 integrator, plus the
//! containment classifier on hand-built trajectories.

mod common;

use common::rk4;
use nalgebra::{dvector, DVector};
use switchsynth::indirect::SwitchingPattern;
use switchsynth::model::{
    build_boost_1cell, build_boost_3cell, Boost1CellParams, Boost3CellParams, StateBox,
    SwitchedSystem, ALL_SIGMAS,
};
use switchsynth::sim::{check_containment, simulate_pattern, write_csv};

fn cases() -> Vec<(SwitchedSystem, DVector<f64>, SwitchingPattern)> {
    vec![
        (
            build_boost_1cell(&Boost1CellParams::default(), 0.5).unwrap(),
            dvector![3.0, 1.79],
            SwitchingPattern::new(vec![1, 2, 1, 2, 1, 2, 1, 2, 1, 2, 2]),
        ),
        (
            build_boost_3cell(&Boost3CellParams::default(), 1.0 / 60000.0, &ALL_SIGMAS).unwrap(),
            dvector![5.0, 5.0, 5.0, 16.0],
            SwitchingPattern::new(vec![1, 8, 4, 2, 6]),
        ),
    ]
}

#[test]
fn pattern_simulation_matches_rk4() {
    for (sys, x0, pat) in cases() {
        let steps = 200;
        let traj = simulate_pattern(&sys, &x0, &pat, steps, 4).unwrap();
        let mut oracle = x0.clone();
        let sampled: Vec<_> = traj.sampled_states().collect();
        assert_eq!(sampled.len(), steps + 1);
        for (k, pt) in sampled.iter().enumerate().skip(1) {
            let mode = &sys.modes[pat.modes[(k - 1) % pat.len()] - 1];
            oracle = rk4(&mode.a, &mode.b, &oracle, sys.tau, 2000);
            assert!(
                (&pt.state - &oracle).amax() <= 1e-6,
                "step {k} drifted from the RK4 oracle"
            );
        }
    }
}

#[test]
fn substep_states_lie_on_the_same_flow() {
    // refining substeps must not change the states at sampling instants
    let (sys, x0, pat) = cases().remove(0);
    let coarse = simulate_pattern(&sys, &x0, &pat, 50, 1).unwrap();
    let fine = simulate_pattern(&sys, &x0, &pat, 50, 32).unwrap();
    for (a, b) in coarse.sampled_states().zip(fine.sampled_states()) {
        assert!((&a.state - &b.state).amax() <= 1e-12);
        assert!((a.time - b.time).abs() <= 1e-12);
    }
}

#[test]
fn containment_classifier_separates_sample_and_intersample() {
    let (sys, _, pat) = cases().remove(0);
    let v = StateBox::new(dvector![3.0, 1.5], dvector![3.4, 1.8]).unwrap();
    let x0 = dvector![3.0, 1.79];
    let traj = simulate_pattern(&sys, &x0, &pat, 200, 8).unwrap();

    let plain = check_containment(&traj, &v, 0.0);
    assert!(
        !plain.violations_at_samples.is_empty(),
        "open-loop pattern from the corner must leave V at some sample"
    );
    let inflated = check_containment(&traj, &v, 3.0);
    assert!(inflated.is_clean());
    assert!(inflated.max_excursion <= 3.0);
}

#[test]
fn csv_layout_is_stable() {
    let (sys, x0, pat) = cases().remove(0);
    let traj = simulate_pattern(&sys, &x0, &pat, 3, 2).unwrap();
    let mut buf = Vec::new();
    write_csv(&traj, &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t,mode,x1,x2"));
    assert_eq!(lines.count(), 3 * 2 + 1);
    let second = text.lines().nth(1).unwrap();
    assert!(second.starts_with("0,1,3,"), "got {second}");
}

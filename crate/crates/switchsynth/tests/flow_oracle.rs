//! Numerical validation of the flow machinery against independent oracles.

mod common;

use common::{max_abs_diff, rk4, taylor_expm, Rng};
use nalgebra::{DMatrix, DVector};
use switchsynth::flow::matrix_exponential;
use switchsynth::model::{
    build_boost_1cell, build_boost_3cell, Boost1CellParams, Boost3CellParams, SwitchedSystem,
    ALL_SIGMAS,
};

fn case_study_systems() -> Vec<SwitchedSystem> {
    vec![
        build_boost_1cell(&Boost1CellParams::default(), 0.5).unwrap(),
        build_boost_3cell(&Boost3CellParams::default(), 1.0 / 60000.0, &ALL_SIGMAS).unwrap(),
    ]
}

fn random_matrix(rng: &mut Rng, n: usize, scale: f64) -> DMatrix<f64> {
    DMatrix::from_fn(n, n, |_, _| rng.uniform(-scale, scale))
}

#[test]
fn expm_matches_taylor_oracle_on_case_studies() {
    for sys in case_study_systems() {
        for m in &sys.modes {
            let ours = matrix_exponential(&m.a, sys.tau).unwrap();
            let oracle = taylor_expm(&m.a, sys.tau);
            assert!(
                max_abs_diff(&ours, &oracle) <= 1e-10,
                "mode {} of a case-study system drifted from the Taylor oracle",
                m.id
            );
        }
    }
}

#[test]
fn expm_matches_taylor_oracle_on_random_matrices() {
    let mut rng = Rng::new(0xfeed);
    for n in [2usize, 3, 4] {
        for _ in 0..25 {
            let a = random_matrix(&mut rng, n, 3.0);
            let t = rng.uniform(0.01, 2.0);
            let ours = matrix_exponential(&a, t).unwrap();
            let oracle = taylor_expm(&a, t);
            // relative to the magnitude of the result, which can be large
            let scale = oracle.iter().map(|x| x.abs()).fold(1.0, f64::max);
            assert!(max_abs_diff(&ours, &oracle) <= 1e-10 * scale);
        }
    }
}

#[test]
fn flow_maps_match_rk4() {
    let starts: [DVector<f64>; 2] = [
        DVector::from_vec(vec![3.0, 1.79]),
        DVector::from_vec(vec![5.0, 5.0, 5.0, 16.0]),
    ];
    for (sys, x0) in case_study_systems().iter().zip(&starts) {
        let flows = sys.flow_maps().unwrap();
        for (m, f) in sys.modes.iter().zip(&flows) {
            let exact = f.post_point(x0);
            let numeric = rk4(&m.a, &m.b, x0, sys.tau, 1_000_000);
            assert!(
                (exact - numeric).amax() <= 1e-9,
                "mode {} disagrees with RK4",
                m.id
            );
        }
    }
}

#[test]
fn pre_post_round_trip() {
    let mut rng = Rng::new(0xabc1);
    for sys in case_study_systems() {
        let flows = sys.flow_maps().unwrap();
        let n = sys.dim;
        for _ in 0..1000 {
            let x = DVector::from_fn(n, |_, _| rng.uniform(-10.0, 10.0));
            for f in &flows {
                let back = f.pre_point(&f.post_point(&x));
                assert!((&x - back).amax() <= 1e-9);
                let forth = f.post_point(&f.pre_point(&x));
                assert!((&x - forth).amax() <= 1e-9);
            }
        }
    }
}

#[test]
fn semigroup_property() {
    let mut rng = Rng::new(0x5e5e);
    let check = |a: &DMatrix<f64>, t1: f64, t2: f64| {
        let whole = matrix_exponential(a, t1 + t2).unwrap();
        let split = matrix_exponential(a, t1).unwrap() * matrix_exponential(a, t2).unwrap();
        let scale = whole.iter().map(|x| x.abs()).fold(1.0, f64::max);
        assert!(max_abs_diff(&whole, &split) <= 1e-10 * scale);
    };
    for sys in case_study_systems() {
        for m in &sys.modes {
            check(&m.a, sys.tau * 0.3, sys.tau * 0.7);
            check(&m.a, sys.tau, sys.tau);
        }
    }
    for _ in 0..20 {
        let a = random_matrix(&mut rng, 3, 2.0);
        check(&a, rng.uniform(0.05, 1.0), rng.uniform(0.05, 1.0));
    }
}

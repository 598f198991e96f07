//! Direct-method pipeline checks: soundness of the interval Pre-image,
//! structural properties of the fixpoint on randomized systems, and the
//! uncontrollable zones of the single-cell converter at two resolutions.

mod common;

use common::{random_stable_flows, Rng};
use nalgebra::{dvector, DVector};
use switchsynth::direct::{
    algorithm1, cells_bounding_box, connected_components, griddy_from_box, pre_over,
    verify_invariance, GriddySet, GridSpec,
};
use switchsynth::model::{build_boost_1cell, Boost1CellParams, StateBox};

fn random_box(rng: &mut Rng, n: usize) -> StateBox {
    let lo = DVector::from_fn(n, |_, _| rng.uniform(-2.0, 0.0));
    let hi = DVector::from_fn(n, |_, _| rng.uniform(0.5, 2.5));
    StateBox::new(lo, hi).unwrap()
}

fn random_subset(rng: &mut Rng, spec: &GridSpec) -> GriddySet {
    let mut s = GriddySet::empty(spec);
    let picks = 1 + rng.index(spec.cell_count());
    for _ in 0..picks {
        s.insert(rng.index(spec.cell_count()));
    }
    s
}

#[test]
fn pre_over_never_misses_a_preimage_point() {
    // if the true one-step image of x lands in S, the over-approximate
    // Pre must cover x — checked on 1000 random (point, set, mode) triples
    let mut rng = Rng::new(0xd17ec7);
    let mut checked = 0usize;
    while checked < 1000 {
        let n = 2 + rng.index(2);
        let v = random_box(&mut rng, n);
        let spec = GridSpec::uniform(&v, 6);
        let m = 1 + rng.index(3);
        let flows = random_stable_flows(&mut rng, n, m, 0.3);
        let s = random_subset(&mut rng, &spec);
        let pres: Vec<GriddySet> = flows.iter().map(|f| pre_over(f, &s)).collect();
        for _ in 0..20 {
            let x = DVector::from_fn(n, |d, _| rng.uniform(v.lower[d], v.upper[d]));
            for (f, pre) in flows.iter().zip(&pres) {
                if s.contains_point(&f.post_point(&x)) {
                    assert!(
                        pre.contains_point(&x),
                        "pre_over missed a concrete pre-image point"
                    );
                }
                checked += 1;
            }
        }
    }
}

#[test]
fn fixpoint_is_monotone_and_terminates_on_random_systems() {
    let mut rng = Rng::new(0xa160);
    for _ in 0..20 {
        let v = random_box(&mut rng, 2);
        let spec = GridSpec::uniform(&v, 10);
        let m = 1 + rng.index(3);
        let flows = random_stable_flows(&mut rng, 2, m, 0.5);
        let cs = algorithm1(&flows, &spec).unwrap();
        assert!(cs.converged);
        assert!(cs.iterations <= spec.cell_count() + 1);
        for w in cs.history.windows(2) {
            assert!(w[1].uncontrol >= w[0].uncontrol, "Uncontrol must grow");
            for (a, b) in w[0].control.iter().zip(&w[1].control) {
                assert!(b <= a, "Control_i must shrink");
            }
        }
        // V' is exactly the union of the per-mode sets
        let mut union = cs.control[0].clone();
        for c in &cs.control[1..] {
            union = union.union(c).unwrap();
        }
        assert!(union.equals(&cs.v_prime).unwrap());
        assert_eq!(
            cs.uncontrollable().count() + cs.v_prime.count(),
            spec.cell_count()
        );
    }
}

fn boost1_zones(delta: &[f64]) -> Vec<(DVector<f64>, DVector<f64>)> {
    let sys = build_boost_1cell(&Boost1CellParams::default(), 0.5).unwrap();
    let region = StateBox::new(dvector![3.0, 1.5], dvector![3.4, 1.8]).unwrap();
    let flows = sys.flow_maps().unwrap();
    let spec = GridSpec::snap(&region, delta).unwrap();
    let cs = algorithm1(&flows, &spec).unwrap();
    assert!(cs.converged);
    connected_components(&cs.uncontrollable())
        .iter()
        .map(|comp| cells_bounding_box(&spec, comp).unwrap())
        .collect()
}

#[test]
fn boost1_zones_at_edge_over_200() {
    let delta = [0.4 / 200.0, 0.3 / 200.0];
    let zones = boost1_zones(&delta);
    assert_eq!(zones.len(), 2, "expected exactly two uncontrollable zones");

    // lower-left zone: pinned to the grid; the cell-level Pre extends it
    // one mode-2 step past the continuous zone because the escape margin
    // at the exit band (~3.1e-4 in v_c) is smaller than a cell
    let (lo, hi) = &zones[0];
    assert!((lo - dvector![3.0, 1.5]).amax() < 1e-9);
    assert!((hi - dvector![3.228, 1.518]).amax() < 1e-9);

    // upper-right zone matches the continuous vertices within 2 cells
    let (lo, hi) = &zones[1];
    assert!((lo - dvector![3.2611, 1.788]).amax() <= 2.0 * delta[0]);
    assert!((hi - dvector![3.4, 1.8]).amax() < 1e-9);
}

#[test]
fn boost1_zones_refine_to_continuous_vertices() {
    // a v_c resolution finer than the escape margin recovers the
    // continuous zones; tolerances are two cells of the coarser grid
    let delta = [0.4 / 200.0, 0.3 / 1000.0];
    let zones = boost1_zones(&delta);
    assert_eq!(zones.len(), 2);

    let (lo, hi) = &zones[0];
    assert!((lo - dvector![3.0, 1.5]).amax() < 1e-9);
    assert!((hi[0] - 3.1110f64).abs() <= 0.004);
    assert!((hi[1] - 1.5107f64).abs() <= 0.003);

    let (lo, hi) = &zones[1];
    assert!((lo[0] - 3.2611f64).abs() <= 0.004);
    assert!((lo[1] - 1.788f64).abs() <= 0.003);
    assert!((hi - dvector![3.4, 1.8]).amax() < 1e-9);
}

#[test]
fn corrupting_the_subspace_is_detected() {
    let sys = build_boost_1cell(&Boost1CellParams::default(), 0.5).unwrap();
    let region = StateBox::new(dvector![3.0, 1.5], dvector![3.4, 1.8]).unwrap();
    let flows = sys.flow_maps().unwrap();
    let spec = GridSpec::snap(&region, &[0.4 / 200.0, 0.3 / 200.0]).unwrap();
    let mut cs = algorithm1(&flows, &spec).unwrap();
    assert!(verify_invariance(&flows, &cs, 3).is_clean());

    // claim an uncontrollable corner cell for mode 1
    let corner = cs
        .uncontrollable()
        .iter_indices()
        .next()
        .expect("boost1 has uncontrollable zones");
    cs.control[0].insert(corner);
    cs.v_prime.insert(corner);
    let rep = verify_invariance(&flows, &cs, 3);
    assert!(!rep.is_clean(), "corrupted artifact must fail verification");
}

#[test]
fn griddy_algebra_round_trips_through_boxes() {
    let mut rng = Rng::new(0x9b0);
    let v = StateBox::new(dvector![0.0, 0.0], dvector![1.0, 1.0]).unwrap();
    let spec = GridSpec::uniform(&v, 8);
    for _ in 0..50 {
        let a = random_subset(&mut rng, &spec);
        let b = random_subset(&mut rng, &spec);
        let u = a.union(&b).unwrap();
        let d = u.difference(&b).unwrap();
        // difference removes exactly b, and what is left came from a
        for idx in d.iter_indices() {
            assert!(a.contains(idx) && !b.contains(idx));
        }
        assert!(u.difference(&a).unwrap().difference(&b).unwrap().is_empty());
    }
    // a box aligned to the grid comes back exactly
    let inner = StateBox::new(dvector![0.25, 0.25], dvector![0.75, 0.875]).unwrap();
    let g = griddy_from_box(&inner, &spec).unwrap();
    assert_eq!(g.count(), 4 * 5);
}

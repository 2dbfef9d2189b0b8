mod common;

use common::{angles_between_normals, fixtures, sample};
use geoknot::euclid::EDGE_SLOTS;
use geoknot::lift::{corner_position, meridian_winding, validate_lift, DEFAULT_LIFT_TOLERANCE};
use geoknot::scalar::reduce_angle;
use geoknot::{
    build_unknot_join, build_unknot_loop, deficit_angles, sample_general_position, validate_knot_conditions, Error,
    KnotMarking, LiftedComplex, Placement, Representation, SamplingConfig, Word,
};

/// Deficits from unsigned angles between face normals, signed by orientation.
fn oracle_deficits(lc: &LiftedComplex<f64>, real: &geoknot::Realization<f64>) -> Vec<f64> {
    let mut w = vec![0.0; lc.pt.n_edges()];
    for t in 0..lc.pt.n_tetrahedra() {
        let p: [_; 4] = std::array::from_fn(|k| corner_position(lc, real, t, k));
        let v6 = (p[1] - p[0]).cross(&(p[2] - p[0])).dot(&(p[3] - p[0]));
        let th = angles_between_normals(&p);
        for s in 0..6 {
            w[lc.pt.edge_of(t, s)] -= v6.signum() * th[s];
        }
    }
    w
}

#[test]
fn deficits_vanish_off_the_knot_and_equal_phi_on_it() {
    for (name, lc) in fixtures() {
        for seed in 1..4 {
            let real = sample(&lc, seed);
            let d = deficit_angles(&lc, &real).unwrap();
            let oracle = oracle_deficits(&lc, &real);
            let phi = lc.rep.phi();
            for e in 0..lc.pt.n_edges() {
                assert!(d.deviation[e].abs() < 1e-9, "{name} edge {e}: {}", d.deviation[e]);
                assert!((d.raw[e] - oracle[e]).abs() < 1e-9, "{name} edge {e}");
                if lc.km.is_knot_edge(e) {
                    assert!(reduce_angle(oracle[e].abs() - phi).abs() < 1e-9 || reduce_angle(oracle[e].abs() + phi).abs() < 1e-9);
                } else {
                    assert!(reduce_angle(oracle[e]).abs() < 1e-9, "{name} edge {e}: {}", oracle[e]);
                }
            }
            assert!(d.worst().unwrap().1 < 1e-9);
        }
    }
}

#[test]
fn handedness_is_a_property_of_the_complex() {
    let lc = build_unknot_join(3, 4, 1.3).unwrap();
    let h: Vec<i8> = (1..6).map(|s| deficit_angles(&lc, &sample(&lc, s)).unwrap().handedness).collect();
    assert!(h.iter().all(|&x| x == h[0]), "{h:?}");
}

#[test]
fn sampled_realizations_are_consistent_lifts() {
    for (name, lc) in fixtures() {
        let real = sample(&lc, 9);
        let r = validate_lift(&lc, &real, DEFAULT_LIFT_TOLERANCE).unwrap();
        assert!(r.max_face_discrepancy < 1e-12 && r.max_edge_discrepancy < 1e-12, "{name}: {r:?}");
    }
}

#[test]
fn corrupted_label_breaks_the_lift() {
    let lc = build_unknot_join(3, 3, 1.0).unwrap();
    let real = sample(&lc, 1);
    let mut lift = lc.lift.clone();
    // corner 2 of tetrahedron 0 is an off-knot vertex
    lift.set_label(0, 2, Word::generator(0));
    let bad = LiftedComplex::new(lc.pt.clone(), lc.km.clone(), lc.rep.clone(), lift).unwrap();
    match validate_lift(&bad, &real, DEFAULT_LIFT_TOLERANCE) {
        Err(Error::InconsistentLift { discrepancy, .. }) => assert!(discrepancy > 1e-3),
        other => panic!("expected InconsistentLift, got {other:?}"),
    }
}

#[test]
fn gauge_change_keeps_the_lift_valid() {
    let lc = build_unknot_join(4, 3, 0.8).unwrap();
    let real = sample(&lc, 3);
    let mut lift = lc.lift.clone();
    lift.left_multiply_tet(7, &Word::power(0, -3));
    let moved = LiftedComplex::new(lc.pt.clone(), lc.km.clone(), lc.rep.clone(), lift).unwrap();
    validate_lift(&moved, &real, DEFAULT_LIFT_TOLERANCE).unwrap();
    let (a, b) = (deficit_angles(&lc, &real).unwrap(), deficit_angles(&moved, &real).unwrap());
    for e in 0..lc.pt.n_edges() {
        assert!((a.raw[e] - b.raw[e]).abs() < 1e-12);
    }
}

#[test]
fn knot_vertices_are_fixed_by_their_deck_rotations() {
    let lc = build_unknot_join(3, 3, 2.0).unwrap();
    let real = sample(&lc, 2);
    for t in 0..lc.pt.n_tetrahedra() {
        for k in 0..2 {
            let v = lc.pt.corners(t)[k];
            let p = corner_position(&lc, &real, t, k);
            assert!((p - real.placements[v].base()).norm() < 1e-15);
            assert!(matches!(real.placements[v], Placement::OnKnot { .. }));
        }
    }
}

#[test]
fn loop_edge_winds_once() {
    let lc = build_unknot_loop(4, 1.0).unwrap();
    let loops: Vec<usize> = (0..lc.pt.n_edges()).filter(|&e| lc.pt.edge(e).is_loop()).collect();
    assert_eq!(loops.len(), 1);
    let h = meridian_winding(&lc.pt, &lc.lift, loops[0]).unwrap();
    assert_eq!(h.winding.abs(), 1);
    assert!(validate_knot_conditions(&lc.pt, &lc.km, &lc.lift).all_passed());
    let k = lc.km.edges()[0].edge;
    assert!(matches!(meridian_winding(&lc.pt, &lc.lift, k), Err(Error::NotALoop { .. })));
}

#[test]
fn unwound_loop_fails_condition_c() {
    let lc = build_unknot_loop(3, 1.0).unwrap();
    let lift = geoknot::LiftAssignment::trivial(lc.pt.n_tetrahedra());
    let report = validate_knot_conditions(&lc.pt, &lc.km, &lift);
    assert!(report.on_edges.passed && report.two_knot_corners.passed);
    assert!(!report.loops_wind_once.passed);
    assert!(report.loops_wind_once.failures[0].contains("winds 0 times"));
}

#[test]
fn three_knot_corners_fail_condition_b() {
    // K0 → K1 → P0 → K0 in the join uses tetrahedron [K0, K1, P0, P1] three times
    let lc = build_unknot_join(3, 3, 1.0).unwrap();
    let km = KnotMarking::from_representatives(&lc.pt, &[(0, [0, 1]), (3, [0, 2]), (0, [2, 0])]).unwrap();
    let report = validate_knot_conditions(&lc.pt, &km, &lc.lift);
    assert!(report.on_edges.passed);
    assert!(!report.two_knot_corners.passed);
    assert!(report.two_knot_corners.failures.iter().any(|f| f.contains("tetrahedron 0")));
}

#[test]
fn knot_must_be_a_simple_cycle() {
    let lc = build_unknot_join(3, 3, 1.0).unwrap();
    let open = KnotMarking::from_representatives(&lc.pt, &[(0, [0, 1])]);
    assert!(matches!(open, Err(Error::KnotNotACycle { .. })));
    assert!(matches!(KnotMarking::from_representatives(&lc.pt, &[]), Err(Error::KnotNotACycle { .. })));
    let twice = KnotMarking::from_representatives(&lc.pt, &[(0, [0, 1]), (0, [1, 0])]);
    assert!(matches!(twice, Err(Error::KnotNotACycle { .. })));
    let lp = build_unknot_loop(3, 1.0).unwrap();
    match KnotMarking::from_representatives(&lp.pt, &[(0, [2, 3])]) {
        Err(Error::KnotNotACycle { reason }) => assert!(reason.contains("loop")),
        other => panic!("{other:?}"),
    }
}

#[test]
fn words_parse_and_format() {
    let rep = Representation::explicit(vec![
        geoknot::lift::Generator { name: "a".into(), axis: nalgebra::Vector3::z(), angle: 0.7 },
        geoknot::lift::Generator { name: "b".into(), axis: nalgebra::Vector3::x(), angle: 0.7 },
    ])
    .unwrap();
    let w = rep.parse_word("a^2 b^-1 a").unwrap();
    assert_eq!(rep.format_word(&w), "a^2 b^-1 a");
    assert_eq!(rep.parse_word(&rep.format_word(&w)).unwrap(), w);
    assert_eq!(w.exponent_sum(), 2);
    let r = rep.rotation(&w) * rep.rotation(&w.inverse());
    assert!((r.matrix() - nalgebra::Matrix3::identity()).abs().max() < 1e-14);
    assert!(matches!(rep.parse_word("a c"), Err(Error::UnknownGenerator(g)) if g == "c"));
    assert!(matches!(rep.parse_word("a^two"), Err(Error::WordParse { .. })));
    assert!(matches!(rep.parse_word("^3"), Err(Error::WordParse { .. })));
}

#[test]
fn trivial_representations_are_rejected() {
    for phi in [0.0, 2.0 * std::f64::consts::PI, -2.0 * std::f64::consts::PI] {
        assert!(matches!(build_unknot_join(3, 3, phi), Err(Error::TrivialRepresentation)), "phi = {phi}");
    }
}

#[test]
fn sampling_is_seeded() {
    let lc = build_unknot_join(3, 3, 1.0).unwrap();
    let cfg = SamplingConfig::default();
    let a = sample_general_position(&lc, 42, &cfg).unwrap();
    let b = sample_general_position(&lc, 42, &cfg).unwrap();
    let c = sample_general_position(&lc, 43, &cfg).unwrap();
    assert_eq!(a, b);
    assert_ne!(a, c);
    assert_eq!(a.seed, Some(42));
    for p in &a.placements {
        match *p {
            Placement::OffKnot(x) => assert!(x.iter().all(|c| (-1.0..=1.0).contains(c))),
            Placement::OnKnot { z, .. } => assert!((-1.0..=1.0).contains(&z)),
        }
    }
    let geo: geoknot::TetGeometry<f64> = geoknot::lift::tet_geometry(&lc, &a, 0);
    let me = EDGE_SLOTS.iter().map(|&(i, j)| (geo.corners[i] - geo.corners[j]).norm()).fold(0.0, f64::max);
    assert!(geo.volume().abs() * 6.0 >= 1e-4 * me.powi(3));
}

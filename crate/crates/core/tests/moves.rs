mod common;

use common::sample;
use geoknot::euclid::edge_slot;
use geoknot::moves::{find_bdaa, random_move_sequence, replay_moves, MoveLog, MoveOutcome};
use geoknot::pseudotriangulation::find_isomorphism;
use geoknot::{
    apply_move, build_unknot_join, build_unknot_loop, compute_invariant, Error, InvariantOptions, MoveDescriptor,
    Placement, State,
};

/// Per-move invariance is checked against the realization-spread budget.
const MOVE_TOL: f64 = 1e-6;

fn state(lc: geoknot::LiftedComplex<f64>, seed: u64) -> State<f64> {
    let realization = sample(&lc, seed);
    State { complex: lc, realization }
}

fn invariant(s: &State<f64>) -> f64 {
    compute_invariant(&s.complex, &s.realization, &InvariantOptions::default()).unwrap().value
}

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

fn assert_restored(original: &State<f64>, back: &State<f64>, what: &str) {
    assert_eq!(back.complex.pt.counts(), original.complex.pt.counts(), "{what}");
    assert!(find_isomorphism(&original.complex.pt, &back.complex.pt).is_some(), "{what}: not isomorphic");
    assert_eq!(back.complex.km.n_knot_vertices(), original.complex.km.n_knot_vertices());
    assert!(rel(invariant(back), invariant(original)) < MOVE_TOL, "{what}");
}

#[test]
fn two_three_and_back() {
    let s = state(build_unknot_join(3, 3, 1.2).unwrap(), 4);
    let i0 = invariant(&s);
    let mut applied = 0;
    for tet in 0..s.complex.pt.n_tetrahedra() {
        for face in 0..4 {
            let Ok(up) = apply_move(&s, &MoveDescriptor::TwoThree { tet, face }) else { continue };
            applied += 1;
            let [v, e, f, t] = s.complex.pt.counts();
            assert_eq!(up.complex.pt.counts(), [v, e + 1, f + 2, t + 1]);
            assert!(rel(invariant(&up), i0) < MOVE_TOL, "2→3 at ({tet}, {face})");
            let pt = &up.complex.pt;
            let edge = pt.edge_of(pt.n_tetrahedra() - 1, edge_slot(2, 3));
            assert_eq!(pt.edge(edge).degree(), 3);
            let back = apply_move(&up, &MoveDescriptor::ThreeTwo { edge }).unwrap();
            assert_restored(&s, &back, &format!("2→3→2 at ({tet}, {face})"));
        }
    }
    assert!(applied >= 9, "only {applied} applicable 2→3 moves");
}

#[test]
fn one_four_and_back() {
    let s = state(build_unknot_join(3, 4, 2.1).unwrap(), 5);
    let i0 = invariant(&s);
    for tet in 0..s.complex.pt.n_tetrahedra() {
        for weights in [None, Some([0.1, 0.2, 0.3, 0.4])] {
            let up = apply_move(&s, &MoveDescriptor::OneFour { tet, weights }).unwrap();
            let [v, e, f, t] = s.complex.pt.counts();
            assert_eq!(up.complex.pt.counts(), [v + 1, e + 4, f + 6, t + 3]);
            assert!(rel(invariant(&up), i0) < MOVE_TOL);
            let vertex = up.complex.pt.n_vertices() - 1;
            assert!(matches!(up.realization.placements[vertex], Placement::OffKnot(_)));
            let back = apply_move(&up, &MoveDescriptor::FourOne { vertex }).unwrap();
            assert_restored(&s, &back, &format!("1→4→1 in {tet}"));
        }
    }
}

#[test]
fn knot_one_two_and_back() {
    for phi in [0.6, 2.0, 2.9] {
        let s = state(build_unknot_loop(3, phi).unwrap(), 2);
        let i0 = invariant(&s);
        let bdaa = find_bdaa(&s.complex);
        assert_eq!(bdaa.len(), 3);
        for tet in bdaa {
            let up = apply_move(&s, &MoveDescriptor::KnotOneTwo { tet, z: None }).unwrap();
            let [v, e, f, t] = s.complex.pt.counts();
            assert_eq!(up.complex.pt.counts(), [v + 1, e + 2, f + 2, t + 1]);
            assert_eq!(up.complex.km.n_knot_vertices(), 4);
            assert!(rel(invariant(&up), i0) < MOVE_TOL, "phi {phi} tet {tet}");
            let vertex = up.complex.pt.n_vertices() - 1;
            assert!(up.complex.km.is_knot_vertex(vertex));
            let back = apply_move(&up, &MoveDescriptor::KnotTwoOne { vertex }).unwrap();
            assert_restored(&s, &back, &format!("knot 1→2→1 in {tet}"));
        }
    }
}

#[test]
fn guarded_moves_report_the_knot() {
    let s = state(build_unknot_join(3, 3, 1.0).unwrap(), 1);
    let km = &s.complex.km;
    let knot_edge = km.edges()[0].edge;
    assert_eq!(s.complex.pt.edge(knot_edge).degree(), 3);
    assert!(matches!(apply_move(&s, &MoveDescriptor::ThreeTwo { edge: knot_edge }), Err(Error::WouldTouchKnot(_))));
    assert!(matches!(apply_move(&s, &MoveDescriptor::FourOne { vertex: km.edges()[0].from }), Err(Error::WouldTouchKnot(_))));
    // face 0 of [K0, K1, P0, P1] is glued to [K1, K2, P0, P1]: the new edge would be K0 K2
    assert!(matches!(apply_move(&s, &MoveDescriptor::TwoThree { tet: 0, face: 0 }), Err(Error::WouldTouchKnot(_))));
}

#[test]
fn inapplicable_moves_are_reported() {
    let na = |r: Result<State<f64>, Error>| matches!(r, Err(Error::MoveNotApplicable(_)));
    let join = state(build_unknot_join(3, 3, 1.0).unwrap(), 1);
    let lp = state(build_unknot_loop(3, 2.0).unwrap(), 1);
    assert!(na(apply_move(&lp, &MoveDescriptor::TwoThree { tet: 0, face: 2 })));
    assert!(na(apply_move(&join, &MoveDescriptor::TwoThree { tet: 99, face: 0 })));
    assert!(na(apply_move(&join, &MoveDescriptor::KnotOneTwo { tet: 0, z: None })));
    assert!(find_bdaa(&join.complex).is_empty());
    // P0 has six corner occurrences
    assert!(na(apply_move(&join, &MoveDescriptor::FourOne { vertex: 3 })));
    let off_knot_edge = (0..join.complex.pt.n_edges()).find(|&e| join.complex.pt.edge(e).degree() != 3).unwrap();
    assert!(na(apply_move(&join, &MoveDescriptor::ThreeTwo { edge: off_knot_edge })));
    assert!(na(apply_move(&join, &MoveDescriptor::KnotTwoOne { vertex: 0 })));
}

#[test]
fn knot_split_at_an_endpoint_is_degenerate() {
    let s = state(build_unknot_loop(3, 2.0).unwrap(), 3);
    let tet = find_bdaa(&s.complex)[0];
    let b = s.complex.pt.corners(tet)[0];
    let Placement::OnKnot { z, .. } = s.realization.placements[b] else { panic!("corner 0 is on the knot") };
    let r = apply_move(&s, &MoveDescriptor::KnotOneTwo { tet, z: Some(z) });
    assert!(matches!(r, Err(Error::DegenerateTetrahedron { .. })), "{r:?}");
}

#[test]
fn random_sequences_preserve_the_invariant() {
    for (lc, seed) in [(build_unknot_loop(3, 2.0).unwrap(), 11), (build_unknot_join(3, 3, 1.4).unwrap(), 12)] {
        let s = state(lc, seed);
        let (end, log) = random_move_sequence(&s, 20, 4, seed);
        let bulk = log.applied().filter(|d| !d.is_knot_move()).count();
        assert_eq!(bulk, 20);
        let i0 = invariant(&s);
        let mut cur = s.clone();
        for d in log.applied() {
            let next = apply_move(&cur, d).unwrap();
            assert!(rel(invariant(&next), invariant(&cur)) < MOVE_TOL, "{}", d.name());
            cur = next;
        }
        assert!(rel(invariant(&end), i0) < MOVE_TOL);
        assert!(end.complex.pt.n_tetrahedra() > s.complex.pt.n_tetrahedra());
    }
}

#[test]
fn logs_replay_exactly() {
    let s = state(build_unknot_loop(4, 1.7).unwrap(), 6);
    let (end, log) = random_move_sequence(&s, 12, 3, 99);
    let text = serde_json::to_string(&log).unwrap();
    let parsed: MoveLog = serde_json::from_str(&text).unwrap();
    assert_eq!(parsed, log);
    let again = replay_moves(&s, &parsed).unwrap();
    assert_eq!(again.complex.pt.all_corners(), end.complex.pt.all_corners());
    assert_eq!(again.complex.pt.raw_gluings(), end.complex.pt.raw_gluings());
    assert_eq!(again.realization, end.realization);
    assert_eq!(invariant(&again), invariant(&end));
    assert!(log.entries.iter().all(|e| e.descriptor.is_some() || matches!(e.outcome, MoveOutcome::Skipped { .. })));
}

#[test]
fn descriptors_serialize_by_kind() {
    let d = MoveDescriptor::KnotOneTwo { tet: 2, z: Some(0.25) };
    let v: serde_json::Value = serde_json::to_value(&d).unwrap();
    assert_eq!(v["kind"], "knot-one-two");
    assert_eq!(serde_json::from_value::<MoveDescriptor>(v).unwrap(), d);
    let v = serde_json::to_value(MoveDescriptor::OneFour { tet: 0, weights: None }).unwrap();
    assert!(v.get("weights").is_none());
    assert_eq!(MoveDescriptor::ThreeTwo { edge: 1 }.name(), "3-2");
}

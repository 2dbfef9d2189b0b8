mod common;

use common::sample;
use geoknot::lift::tet_geometry;
use geoknot::moves::{find_bdaa, local_ratio_check};
use geoknot::{
    apply_move, build_bdaa_local, build_unknot_loop, compute_invariant, BdaaLocal, Error, InvariantOptions,
    MoveDescriptor, State,
};
use nalgebra::Vector3;

#[test]
fn ratio_matches_closed_form_on_random_configurations() {
    let mut worst = 0.0f64;
    for phi in [0.3, std::f64::consts::FRAC_PI_2, 2.5] {
        for seed in 0..100 {
            let local = build_bdaa_local(phi, seed).unwrap();
            let r = local_ratio_check(&local).unwrap();
            assert!(r.relative_error < 1e-8, "phi {phi} seed {seed}: {:e}", r.relative_error);
            assert_eq!(r.ratio, -r.raw_ratio);
            assert!((r.raw_ratio - r.tau_after / r.tau_before).abs() <= 1e-15 * r.raw_ratio.abs());
            worst = worst.max(r.relative_error);
        }
    }
    assert!(worst < 1e-8);
}

#[test]
fn closed_form_from_explicit_points() {
    let local = BdaaLocal::new(Vector3::new(0.7, -0.2, 0.4), -0.8, 0.1, 0.9, 1.9).unwrap();
    let r = local_ratio_check(&local).unwrap();
    // independent evaluation of 6V_CAAB · 6V_DAAC / (2(1 − cos φ) l_AC² 6V_DAAB)
    let a = local.a;
    let a2 = nalgebra::Rotation3::from_axis_angle(&Vector3::z_axis(), 1.9) * a;
    let z = |h: f64| Vector3::new(0.0, 0.0, h);
    let v6 = |p: Vector3<f64>, q: Vector3<f64>, r: Vector3<f64>, s: Vector3<f64>| (q - p).cross(&(r - p)).dot(&(s - p));
    let (b, c, d) = (z(local.b), z(local.c), z(local.d));
    let expected = v6(c, a, a2, b) * v6(d, a, a2, c) / (2.0 * (1.0 - 1.9f64.cos()) * (a - c).norm_squared() * v6(d, a, a2, b));
    assert!(((r.closed_form - expected) / expected).abs() < 1e-12);
    assert!(((r.ratio - expected) / expected).abs() < 1e-8);
}

#[test]
fn invalid_configurations_are_rejected() {
    assert!(matches!(BdaaLocal::new(Vector3::new(0.5, 0.5, 0.0), 0.2, 0.2, 0.9, 1.0), Err(Error::InvalidArgument(_))));
    assert!(matches!(BdaaLocal::new(Vector3::new(0.0, 0.0, 0.3), 0.2, 0.5, 0.9, 1.0), Err(Error::InvalidArgument(_))));
    assert!(matches!(build_bdaa_local(0.0, 1), Err(Error::TrivialRepresentation)));
}

#[test]
fn global_factors_change_by_the_new_simplices() {
    for phi in [0.8, 2.0, 2.7] {
        let lc = build_unknot_loop(3, phi).unwrap();
        let before = State { realization: sample(&lc, 4), complex: lc };
        let tet = find_bdaa(&before.complex)[1];
        let after = apply_move(&before, &MoveDescriptor::KnotOneTwo { tet, z: None }).unwrap();
        let opts = InvariantOptions::default();
        let i0 = compute_invariant(&before.complex, &before.realization, &opts).unwrap();
        let i1 = compute_invariant(&after.complex, &after.realization, &opts).unwrap();

        let old = tet_geometry(&before.complex, &before.realization, tet);
        let n = after.complex.pt.n_tetrahedra();
        let (n1, n2) = (tet_geometry(&after.complex, &after.realization, n - 2), tet_geometry(&after.complex, &after.realization, n - 1));
        // N1 = [B, C, A, A′]
        let l_ca = (n1.corners[1] - n1.corners[2]).norm();
        let volumes = 36.0 * n1.volume() * n2.volume() / (6.0 * old.volume());

        let rel = |a: f64, b: f64| ((a - b) / b).abs();
        assert!(rel(i1.length_product / i0.length_product, l_ca * l_ca) < 1e-6);
        assert!(rel(i1.volume_product / i0.volume_product, volumes) < 1e-6);
        let expected = -1.0 / (2.0 * (1.0 - phi.cos())) / (l_ca * l_ca) * volumes;
        assert!(rel(i1.torsion.value / i0.torsion.value, expected) < 1e-6, "phi {phi}");
        assert!(rel(i1.value, i0.value) < 1e-6);
    }
}

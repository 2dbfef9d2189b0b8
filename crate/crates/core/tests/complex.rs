mod common;

use common::{a1_fd, a2_fd, fixtures, rel_err, sample};
use geoknot::complex::{dump_matrices, singular_values};
use geoknot::lift::{Generator, LiftedComplex};
use geoknot::{assemble, build_unknot_join, check_acyclic, sample_general_position, AcyclicTolerances, Error, Representation, SamplingConfig};
use nalgebra::Vector3;

#[test]
fn complexes_are_acyclic_on_all_fixtures() {
    for (name, lc) in fixtures() {
        for seed in 1..4 {
            let real = sample(&lc, seed);
            let m = assemble(&lc, &real).unwrap();
            let r = check_acyclic(&m, &AcyclicTolerances::default()).unwrap_or_else(|e| panic!("{name} seed {seed}: {e}"));
            assert!(r.asymmetry < 1e-9 && r.residual_a1a2 < 1e-9 && r.residual_a2a3 < 1e-9, "{name}: {r:?}");
            assert_eq!(r.ranks, m.expected_ranks());
            assert_eq!(m.n_a(), 2);
        }
    }
}

#[test]
fn length_jacobian_matches_finite_differences() {
    for (name, lc) in fixtures() {
        let real = sample(&lc, 7);
        let m = assemble(&lc, &real).unwrap();
        let err = rel_err(&m.a2, &a2_fd(&lc, &real));
        assert!(err < 1e-6, "{name}: {err:e}");
    }
}

#[test]
fn deficit_jacobian_matches_finite_differences() {
    for (name, lc) in fixtures() {
        let real = sample(&lc, 8);
        let m = assemble(&lc, &real).unwrap();
        let err = rel_err(&m.a1, &a1_fd(&lc, &m));
        assert!(err < 1e-6, "{name}: {err:e}");
    }
}

#[test]
fn symmetry_columns_span_the_kernel_of_a2() {
    let lc = build_unknot_join(3, 4, 1.1).unwrap();
    let real = sample(&lc, 2);
    let m = assemble(&lc, &real).unwrap();
    let prod = &m.a2 * &m.a3;
    assert!(prod.abs().max() < 1e-12 * m.a2.abs().max() * m.a3.abs().max());
    let s = singular_values(&m.a2);
    let zero = s.iter().filter(|&&x| x < 1e-8 * s[0]).count();
    assert_eq!(s.len() - zero, m.n_x() - 2);
}

#[test]
fn nonabelian_representation_has_no_symmetry_columns() {
    // a second generator about x makes the representation nonabelian
    let base = build_unknot_join(3, 3, 1.0).unwrap();
    let rep = Representation::explicit(vec![
        Generator { name: "m".into(), axis: Vector3::z(), angle: 1.0 },
        Generator { name: "n".into(), axis: Vector3::x(), angle: 1.0 },
    ])
    .unwrap();
    assert!(!rep.is_scalar());
    let axes = (0..base.pt.n_vertices()).map(|v| base.km.is_knot_vertex(v).then(Vector3::z)).collect();
    let lc = LiftedComplex::with_axes(base.pt.clone(), base.km.clone(), rep, base.lift.clone(), axes).unwrap();
    let real = sample_general_position(&lc, 1, &SamplingConfig::default()).unwrap();
    let m = assemble(&lc, &real).unwrap();
    assert_eq!(m.n_a(), 0);
    // the unknot still has the axial symmetries, so with 𝔞 = {0} the complex is not acyclic
    assert!(matches!(check_acyclic(&m, &AcyclicTolerances::default()), Err(Error::NotAcyclic { .. })));
}

#[test]
fn dump_lists_every_block() {
    let lc = build_unknot_join(3, 3, 1.0).unwrap();
    let m = assemble(&lc, &sample(&lc, 1)).unwrap();
    let text = dump_matrices(&m);
    for h in ["# A3 12x2", "# A2 15x12", "# A1 15x15"] {
        assert!(text.contains(h), "missing {h}");
    }
    assert!(text.contains("v0.z'") && text.contains("v3.x") && text.contains("e0"));
}

#[test]
fn single_precision_pipeline_is_close() {
    let lc = build_unknot_join(3, 3, std::f32::consts::PI).unwrap();
    let real = sample_general_position(&lc, 1, &SamplingConfig { min_volume_ratio: 1e-2, ..Default::default() }).unwrap();
    let m = assemble(&lc, &real).unwrap();
    let tol = AcyclicTolerances { residual: 1e-5, rank: 1e-4 };
    let r = check_acyclic(&m, &tol).unwrap();
    assert_eq!(r.ranks, m.expected_ranks());
}

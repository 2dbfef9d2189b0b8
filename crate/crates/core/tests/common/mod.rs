//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use geoknot::euclid::EDGE_SLOTS;
use geoknot::lift::corner_position;
use geoknot::{
    build_unknot_join, build_unknot_loop, sample_general_position, ComplexMatrices, LiftedComplex, Realization,
    SamplingConfig,
};
use nalgebra::{DMatrix, Matrix3, Vector3};
use rand::Rng;

pub fn fixtures() -> Vec<(String, LiftedComplex<f64>)> {
    let mut out = Vec::new();
    for phi in [1.0, 2.0 * std::f64::consts::FRAC_PI_3, std::f64::consts::PI] {
        out.push((format!("join(3,3) phi={phi:.4}"), build_unknot_join(3, 3, phi).unwrap()));
    }
    out.push(("join(4,3) phi=1.3".into(), build_unknot_join(4, 3, 1.3).unwrap()));
    out.push(("join(3,5) phi=2.2".into(), build_unknot_join(3, 5, 2.2).unwrap()));
    out.push(("loop(3) phi=2.0".into(), build_unknot_loop(3, 2.0).unwrap()));
    out.push(("loop(4) phi=0.9".into(), build_unknot_loop(4, 0.9).unwrap()));
    out
}

pub fn sample(lc: &LiftedComplex<f64>, seed: u64) -> Realization<f64> {
    sample_general_position(lc, seed, &SamplingConfig::default()).unwrap()
}

/// A tetrahedron with corner 0 at the origin and the given edge lengths (slot order),
/// positively oriented, through the Cholesky factor of its Gram matrix.
pub fn points_from_lengths(l: &[f64; 6]) -> [Vector3<f64>; 4] {
    // slots: 0:(0,1) 1:(0,2) 2:(0,3) 3:(1,2) 4:(1,3) 5:(2,3)
    let d0 = [l[0], l[1], l[2]];
    let dij = |i: usize, j: usize| match (i.min(j), i.max(j)) {
        (0, 1) => l[3],
        (0, 2) => l[4],
        (1, 2) => l[5],
        _ => 0.0,
    };
    let g = Matrix3::from_fn(|i, j| if i == j { d0[i] * d0[i] } else { (d0[i] * d0[i] + d0[j] * d0[j] - dij(i, j).powi(2)) / 2.0 });
    let lower = g.cholesky().expect("lengths of a nondegenerate tetrahedron").l();
    let row = |i: usize| Vector3::new(lower[(i, 0)], lower[(i, 1)], lower[(i, 2)]);
    [Vector3::zeros(), row(0), row(1), row(2)]
}

/// Dihedral angles as the angle between the normals of the two faces through each edge.
pub fn angles_between_normals(p: &[Vector3<f64>; 4]) -> [f64; 6] {
    EDGE_SLOTS.map(|(a, b)| {
        let o: Vec<usize> = (0..4).filter(|&k| k != a && k != b).collect();
        let e = p[b] - p[a];
        let n1 = e.cross(&(p[o[0]] - p[a])).normalize();
        let n2 = e.cross(&(p[o[1]] - p[a])).normalize();
        n1.dot(&n2).clamp(-1.0, 1.0).acos()
    })
}

pub fn angles_of_lengths(l: &[f64; 6]) -> [f64; 6] {
    angles_between_normals(&points_from_lengths(l))
}

/// Central differences of the dihedral angles in the edge lengths, `[row a][col b]`.
pub fn dtheta_fd(l: &[f64; 6]) -> [[f64; 6]; 6] {
    let scale = l.iter().fold(0.0_f64, |m, x| m.max(*x));
    let h = 1e-6 * scale;
    let mut out = [[0.0; 6]; 6];
    for b in 0..6 {
        let (mut lp, mut lm) = (*l, *l);
        lp[b] += h;
        lm[b] -= h;
        let (tp, tm) = (angles_of_lengths(&lp), angles_of_lengths(&lm));
        for a in 0..6 {
            out[a][b] = (tp[a] - tm[a]) / (2.0 * h);
        }
    }
    out
}

/// `∂ω/∂l` by differencing the deficits in the edge-class lengths, each tetrahedron being
/// rebuilt from its six lengths.
pub fn a1_fd(lc: &LiftedComplex<f64>, m: &ComplexMatrices<f64>) -> DMatrix<f64> {
    let pt = &lc.pt;
    let n1 = pt.n_edges();
    let deficits = |lengths: &[f64]| {
        let mut w = vec![0.0; n1];
        for t in 0..pt.n_tetrahedra() {
            let edges = pt.tet_edges(t);
            let l: [f64; 6] = edges.map(|e| lengths[e]);
            let th = angles_of_lengths(&l);
            let s = m.volumes6[t].signum();
            for k in 0..6 {
                w[edges[k]] -= s * th[k];
            }
        }
        w
    };
    let scale = m.lengths.iter().fold(0.0_f64, |a, b| a.max(*b));
    let h = 1e-6 * scale;
    let mut out = DMatrix::zeros(n1, n1);
    for b in 0..n1 {
        let (mut lp, mut lm) = (m.lengths.clone(), m.lengths.clone());
        lp[b] += h;
        lm[b] -= h;
        let (wp, wm) = (deficits(&lp), deficits(&lm));
        for a in 0..n1 {
            out[(a, b)] = (wp[a] - wm[a]) / (2.0 * h);
        }
    }
    out
}

/// Edge-class lengths from the developed corner positions.
pub fn edge_lengths(lc: &LiftedComplex<f64>, real: &Realization<f64>) -> Vec<f64> {
    lc.pt
        .edges()
        .iter()
        .map(|c| {
            let m = c.members[0];
            let (a, b) = EDGE_SLOTS[m.slot];
            (corner_position(lc, real, m.tet, a) - corner_position(lc, real, m.tet, b)).norm()
        })
        .collect()
}

/// `∂l/∂x` by central differences in the realization coordinates.
pub fn a2_fd(lc: &LiftedComplex<f64>, real: &Realization<f64>) -> DMatrix<f64> {
    let x = real.coordinates();
    let h = 1e-6;
    let n1 = lc.pt.n_edges();
    let mut out = DMatrix::zeros(n1, x.len());
    for i in 0..x.len() {
        let (mut xp, mut xm) = (x.clone(), x.clone());
        xp[i] += h;
        xm[i] -= h;
        let (lp, lm) = (edge_lengths(lc, &real.with_coordinates(&xp)), edge_lengths(lc, &real.with_coordinates(&xm)));
        for e in 0..n1 {
            out[(e, i)] = (lp[e] - lm[e]) / (2.0 * h);
        }
    }
    out
}

/// `max |a − b| / max |b|`.
pub fn rel_err(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    let scale = b.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    let diff = (a - b).iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    diff / scale
}

/// Random tetrahedron in the unit box with `|6V| ≥ 1e-2 · (max edge)³`.
pub fn random_tet<R: Rng>(rng: &mut R) -> [Vector3<f64>; 4] {
    loop {
        let p: [Vector3<f64>; 4] =
            std::array::from_fn(|_| Vector3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
        let v6 = (p[1] - p[0]).cross(&(p[2] - p[0])).dot(&(p[3] - p[0]));
        let m = EDGE_SLOTS.iter().map(|&(a, b)| (p[a] - p[b]).norm()).fold(0.0, f64::max);
        if v6.abs() >= 1e-2 * m * m * m {
            return p;
        }
    }
}

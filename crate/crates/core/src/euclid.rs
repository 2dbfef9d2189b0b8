//! Euclidean tetrahedron geometry: oriented volumes, signed dihedral angles and the
//! analytic derivatives that fill the length and deficit Jacobians.
//!
//! Edge slots of a tetrahedron are numbered in the fixed order of [`EDGE_SLOTS`]. The
//! dihedral angle at edge slot `e = (a, b)` lies between the two faces that contain both
//! corners `a` and `b`, i.e. the faces opposite the two remaining corners.

use nalgebra::{Matrix3, Matrix4, Matrix6, Rotation3, Unit, Vector3};

use crate::error::{Error, Result};
use crate::scalar::Real;

pub type Point3<T> = Vector3<T>;
pub type Rotation<T> = Rotation3<T>;

/// Corner pairs of the six edges, in slot order.
pub const EDGE_SLOTS: [(usize, usize); 6] = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];

/// Slot index of the edge joining corners `a != b`.
pub fn edge_slot(a: usize, b: usize) -> usize {
    let (a, b) = if a < b { (a, b) } else { (b, a) };
    EDGE_SLOTS
        .iter()
        .position(|&e| e == (a, b))
        .expect("distinct corners 0..4")
}

/// The two corners not on edge slot `e`, smaller first.
pub fn opposite_corners(e: usize) -> (usize, usize) {
    let (a, b) = EDGE_SLOTS[e];
    let mut rest = (0..4).filter(|&k| k != a && k != b);
    (rest.next().unwrap(), rest.next().unwrap())
}

/// Rotation through `angle` about `axis` (right-handed).
pub fn rotation_about<T: Real>(axis: &Vector3<T>, angle: T) -> Rotation3<T> {
    Rotation3::from_axis_angle(&Unit::new_normalize(*axis), angle)
}

/// `(1/6) det[B − A, C − A, D − A]`.
pub fn oriented_volume<T: Real>(a: &Point3<T>, b: &Point3<T>, c: &Point3<T>, d: &Point3<T>) -> T {
    (b - a).cross(&(c - a)).dot(&(d - a)) / T::lit(6.0)
}

/// Default degeneracy threshold on `|6V|`: `1e-10 · (max edge length)³`.
pub fn default_volume_threshold<T: Real>(max_edge: T) -> T {
    T::lit(1e-10) * max_edge * max_edge * max_edge
}

/// A tetrahedron placed in ℝ³ with an ordered corner list.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TetGeometry<T: Real> {
    pub corners: [Point3<T>; 4],
}

impl<T: Real> TetGeometry<T> {
    pub fn new(corners: [Point3<T>; 4]) -> Self {
        Self { corners }
    }

    pub fn volume(&self) -> T {
        let [a, b, c, d] = &self.corners;
        oriented_volume(a, b, c, d)
    }

    pub fn edge_lengths(&self) -> [T; 6] {
        EDGE_SLOTS.map(|(a, b)| (self.corners[a] - self.corners[b]).norm())
    }

    pub fn max_edge(&self) -> T {
        self.edge_lengths().iter().fold(T::zero(), |m, &l| m.max(l))
    }

    /// Area of the face opposite each corner.
    pub fn face_areas(&self) -> [T; 4] {
        let c = &self.corners;
        [0, 1, 2, 3].map(|k| {
            let f: Vec<usize> = (0..4).filter(|&i| i != k).collect();
            (c[f[1]] - c[f[0]]).cross(&(c[f[2]] - c[f[0]])).norm() / T::lit(2.0)
        })
    }

    /// Interior dihedral angles in (0, π), one per edge slot, from face normals.
    pub fn dihedral_angles(&self) -> [T; 6] {
        let c = &self.corners;
        let mut out = [T::zero(); 6];
        for (e, &(a, b)) in EDGE_SLOTS.iter().enumerate() {
            let (p, q) = opposite_corners(e);
            let axis = (c[b] - c[a]).normalize();
            let u = c[p] - c[a];
            let w = c[q] - c[a];
            let u = u - axis * u.dot(&axis);
            let w = w - axis * w.dot(&axis);
            out[e] = u.cross(&w).norm().atan2(u.dot(&w));
        }
        out
    }

    /// `6V`, or `DegenerateTetrahedron` when `|6V|` is below `threshold` (default scale-aware).
    pub fn checked_volume6(&self, threshold: Option<T>) -> Result<T> {
        let v6 = self.volume() * T::lit(6.0);
        let threshold = threshold.unwrap_or_else(|| default_volume_threshold(self.max_edge()));
        if v6.abs() < threshold || v6.abs() == T::zero() {
            return Err(Error::DegenerateTetrahedron {
                tet: None,
                volume6: v6.to_f64_lossy(),
                threshold: threshold.to_f64_lossy(),
            });
        }
        Ok(v6)
    }
}

/// Unsigned dihedral angles multiplied by the sign of the oriented volume.
pub fn signed_dihedral_angles<T: Real>(t: &TetGeometry<T>, threshold: Option<T>) -> Result<[T; 6]> {
    let v6 = t.checked_volume6(threshold)?;
    let s = v6.signum();
    Ok(t.dihedral_angles().map(|th| th * s))
}

/// Dual-basis Gram data of a tetrahedron given by squared edge lengths.
///
/// `h[(i, j)]` is the inner product of the (unnormalised) inward normals of the faces
/// opposite corners `i` and `j`.
struct DualGram<T: Real> {
    h: Matrix4<T>,
}

fn basis_map<T: Real>() -> nalgebra::Matrix3x4<T> {
    let o = T::one();
    let z = T::zero();
    nalgebra::Matrix3x4::new(-o, o, z, z, -o, z, o, z, -o, z, z, o)
}

fn gram_from_squares<T: Real>(s: &[T; 6]) -> Matrix3<T> {
    let half = T::lit(0.5);
    let mut g = Matrix3::zeros();
    for i in 1..4 {
        for j in 1..4 {
            g[(i - 1, j - 1)] = if i == j {
                s[edge_slot(0, i)]
            } else {
                (s[edge_slot(0, i)] + s[edge_slot(0, j)] - s[edge_slot(i, j)]) * half
            };
        }
    }
    g
}

impl<T: Real> DualGram<T> {
    fn new(lengths: &[T; 6]) -> Option<Self> {
        let s = lengths.map(|l| l * l);
        let g_inv = gram_from_squares(&s).try_inverse()?;
        let b = basis_map::<T>();
        let h = b.transpose() * g_inv * b;
        Some(Self { h })
    }

    fn cos_angle(&self, e: usize) -> T {
        let (c, d) = opposite_corners(e);
        -self.h[(c, d)] / (self.h[(c, c)] * self.h[(d, d)]).sqrt()
    }
}

/// Unsigned dihedral angles recovered from the six edge lengths alone.
pub fn dihedral_angles_from_lengths<T: Real>(lengths: &[T; 6]) -> Option<[T; 6]> {
    let dg = DualGram::new(lengths)?;
    let mut out = [T::zero(); 6];
    for (e, o) in out.iter_mut().enumerate() {
        *o = dg.cos_angle(e).max(-T::one()).min(T::one()).acos();
    }
    Some(out)
}

/// `∂θ_a/∂l_b` for the unsigned dihedral angles, with the tetrahedron determined by its six
/// edge lengths. Row `a`, column `b`, both in edge-slot order.
///
/// With `h_ij = ∇λ_i·∇λ_j` for the barycentric coordinates `λ`, the metric on displacements is
/// `−½ l²`, so `∂h_ij/∂(l²_pq) = ½ (h_ip h_jq + h_iq h_jp)`. The gradients come from the corner
/// positions, which keeps thin tetrahedra accurate.
pub fn dtheta_dlength<T: Real>(t: &TetGeometry<T>, threshold: Option<T>) -> Result<Matrix6<T>> {
    t.checked_volume6(threshold)?;
    let lengths = t.edge_lengths();
    let grads = barycentric_gradients(&t.corners);
    let h = Matrix4::from_fn(|i, j| grads[i].dot(&grads[j]));
    let (half, two) = (T::lit(0.5), T::lit(2.0));
    let dh = |i: usize, j: usize, p: usize, q: usize| half * (h[(i, p)] * h[(j, q)] + h[(i, q)] * h[(j, p)]);
    let mut out = Matrix6::zeros();
    for row in 0..6 {
        let (c, d) = opposite_corners(row);
        let root = (h[(c, c)] * h[(d, d)]).sqrt();
        let sin = grads[c].cross(&grads[d]).norm() / root;
        for (col, &(p, q)) in EDGE_SLOTS.iter().enumerate() {
            let dcos = -dh(c, d, p, q) / root
                + h[(c, d)] * (dh(c, c, p, q) * h[(d, d)] + h[(c, c)] * dh(d, d, p, q)) / (two * root * root * root);
            // d(l²) = 2 l dl
            out[(row, col)] = -dcos / sin * two * lengths[col];
        }
    }
    Ok(out)
}

/// `∇λ_i` for the barycentric coordinates of the four corners.
fn barycentric_gradients<T: Real>(c: &[Point3<T>; 4]) -> [Vector3<T>; 4] {
    std::array::from_fn(|i| {
        let o: Vec<usize> = (0..4).filter(|&k| k != i).collect();
        let n = (c[o[1]] - c[o[0]]).cross(&(c[o[2]] - c[o[0]]));
        n / n.dot(&(c[i] - c[o[0]]))
    })
}

/// Gradient of `|P − Q|` with respect to the coordinates of `P` and of `Q`.
pub fn dlength_dpoints<T: Real>(p: &Point3<T>, q: &Point3<T>) -> Result<(Vector3<T>, Vector3<T>)> {
    let d = p - q;
    let l = d.norm();
    if l == T::zero() {
        return Err(Error::CoincidentPoints);
    }
    let u = d / l;
    Ok((u, -u))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn p(x: f64, y: f64, z: f64) -> Point3<f64> {
        Point3::new(x, y, z)
    }

    fn regular() -> TetGeometry<f64> {
        TetGeometry::new([p(1., 1., 1.), p(-1., 1., -1.), p(1., -1., -1.), p(-1., -1., 1.)])
    }

    fn corner() -> TetGeometry<f64> {
        TetGeometry::new([p(0., 0., 0.), p(1., 0., 0.), p(0., 1., 0.), p(0., 0., 1.)])
    }

    #[test]
    fn oriented_volume_examples() {
        let o = p(0., 0., 0.);
        let (x, y, z) = (p(1., 0., 0.), p(0., 1., 0.), p(0., 0., 1.));
        assert!((oriented_volume(&o, &x, &y, &z) - 1.0 / 6.0).abs() < 1e-15);
        assert!((oriented_volume(&o, &y, &x, &z) + 1.0 / 6.0).abs() < 1e-15);
        assert_eq!(oriented_volume(&o, &x, &y, &p(1., 1., 0.)), 0.0);
    }

    #[test]
    fn regular_tetrahedron_angles() {
        let t = regular();
        assert!(t.volume() > 0.0);
        let expected = (1.0_f64 / 3.0).acos();
        assert!((expected - 1.230_959_417).abs() < 1e-9);
        for a in signed_dihedral_angles(&t, None).unwrap() {
            assert!((a - expected).abs() < 1e-12);
        }
        let mut mirror = t;
        for c in mirror.corners.iter_mut() {
            c.x = -c.x;
        }
        for a in signed_dihedral_angles(&mirror, None).unwrap() {
            assert!((a + expected).abs() < 1e-12);
        }
    }

    #[test]
    fn right_corner_angle() {
        let a = signed_dihedral_angles(&corner(), None).unwrap();
        assert!((a[edge_slot(0, 1)] - FRAC_PI_2).abs() < 1e-14);
    }

    #[test]
    fn degenerate_is_rejected() {
        let t = TetGeometry::new([p(0., 0., 0.), p(1., 0., 0.), p(0., 1., 0.), p(1., 1., 0.)]);
        assert!(matches!(
            signed_dihedral_angles(&t, None),
            Err(Error::DegenerateTetrahedron { .. })
        ));
        assert!(dtheta_dlength(&t, None).is_err());
    }

    #[test]
    fn angles_from_lengths_match_normals() {
        let t = TetGeometry::new([p(0.1, 0.2, -0.3), p(1.1, 0.0, 0.2), p(0.3, 0.9, 0.1), p(0.2, 0.4, 1.3)]);
        let a = t.dihedral_angles();
        let b = dihedral_angles_from_lengths(&t.edge_lengths()).unwrap();
        for k in 0..6 {
            assert!((a[k] - b[k]).abs() < 1e-12);
        }
    }

    #[test]
    fn schlafli_on_regular() {
        let t = regular();
        let m = dtheta_dlength(&t, None).unwrap();
        let l = t.edge_lengths();
        for b in 0..6 {
            let s: f64 = (0..6).map(|a| l[a] * m[(a, b)]).sum();
            assert!(s.abs() < 1e-10, "column {b}: {s}");
        }
        // symmetric Hessian of Σ l θ
        assert!((m - m.transpose()).abs().max() < 1e-12);
    }

    #[test]
    fn relabeling_conjugates_the_jacobian() {
        let t = TetGeometry::new([p(0.1, 0.2, -0.3), p(1.1, 0.0, 0.2), p(0.3, 0.9, 0.1), p(0.2, 0.4, 1.3)]);
        let perm = [2usize, 0, 3, 1];
        let u = TetGeometry::new(perm.map(|k| t.corners[k]));
        let m = dtheta_dlength(&t, None).unwrap();
        let n = dtheta_dlength(&u, None).unwrap();
        let slot_map: Vec<usize> = EDGE_SLOTS.iter().map(|&(a, b)| edge_slot(perm[a], perm[b])).collect();
        for i in 0..6 {
            for j in 0..6 {
                assert!((n[(i, j)] - m[(slot_map[i], slot_map[j])]).abs() < 1e-11);
            }
        }
    }

    #[test]
    fn length_gradient_examples() {
        let (g, h) = dlength_dpoints(&p(1., 0., 0.), &p(0., 0., 0.)).unwrap();
        assert_eq!((g, h), (p(1., 0., 0.), p(-1., 0., 0.)));
        let (g, h) = dlength_dpoints(&p(0., 3., 4.), &p(0., 0., 0.)).unwrap();
        assert!((g - p(0., 0.6, 0.8)).norm() < 1e-15 && (h + g).norm() == 0.0);
        assert!(matches!(dlength_dpoints(&g, &g), Err(Error::CoincidentPoints)));
    }

    #[test]
    fn rotations_preserve_geometry() {
        let t = TetGeometry::new([p(0.1, 0.2, -0.3), p(1.1, 0.0, 0.2), p(0.3, 0.9, 0.1), p(0.2, 0.4, 1.3)]);
        let r = rotation_about(&p(0.3, -1.0, 0.5), 0.7 * PI);
        let u = TetGeometry::new(t.corners.map(|c| r * c));
        assert!((r.matrix().transpose() * r.matrix() - nalgebra::Matrix3::identity()).abs().max() < 1e-14);
        assert!((r.matrix().determinant() - 1.0).abs() < 1e-14);
        assert!((t.volume() - u.volume()).abs() < 1e-12 * t.volume().abs());
        for (a, b) in t.dihedral_angles().iter().zip(u.dihedral_angles()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn single_precision_kernel_runs() {
        let t = TetGeometry::new([
            Point3::new(0.0f32, 0.0, 0.0),
            Point3::new(1.0, 0.0, 0.0),
            Point3::new(0.0, 1.0, 0.0),
            Point3::new(0.0, 0.0, 1.0),
        ]);
        assert!((t.volume() - 1.0 / 6.0).abs() < 1e-7);
        let m = dtheta_dlength(&t, None).unwrap();
        let l = t.edge_lengths();
        for b in 0..6 {
            let s: f32 = (0..6).map(|a| l[a] * m[(a, b)]).sum();
            assert!(s.abs() < 1e-4);
        }
    }
}

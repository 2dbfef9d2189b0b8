//! Fixture constructors.

use nalgebra::Vector3;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::euclid::Point3;
use crate::lift::{uniform, LiftAssignment, LiftedComplex, Representation, Word};
use crate::pseudotriangulation::{KnotMarking, Pseudotriangulation, RawGluing};
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FixtureKind {
    /// Join of an `n`-cycle (the knot) and an `m`-cycle.
    UnknotJoin { n: usize, m: usize },
    /// Join of an `n`-cycle with a single loop edge winding once around it. Every
    /// tetrahedron has the corner pattern `B D A A`.
    UnknotLoop { n: usize },
}

/// Combinatorics of the join of an `n`-cycle `K` and an `m`-cycle `P`, `m ≥ 1`.
///
/// Tetrahedron `i·m + j` is `[K_i, K_{i+1}, P_j, P_{j+1}]`, and the corner `P_{j+1}` of the
/// closing column `j = m − 1` carries the meridian label.
fn join_complex<T: Real>(n: usize, m: usize, phi: T) -> Result<LiftedComplex<T>> {
    let id = |i: usize, j: usize| (i % n) * m + (j % m);
    let mut corners = Vec::with_capacity(n * m);
    let mut labels = Vec::with_capacity(n * m);
    for i in 0..n {
        for j in 0..m {
            corners.push([i, (i + 1) % n, n + j, n + (j + 1) % m]);
            let mut l: [Word; 4] = Default::default();
            if j == m - 1 {
                l[3] = Word::generator(0);
            }
            labels.push(l);
        }
    }
    let mut gluings = Vec::new();
    for i in 0..n {
        for j in 0..m {
            gluings.push(RawGluing { tet: id(i, j), face: 2, partner: id(i, j + 1), partner_face: 3, corners: [0, 1, 2] });
            gluings.push(RawGluing { tet: id(i, j), face: 0, partner: id(i + 1, j), partner_face: 1, corners: [0, 2, 3] });
        }
    }
    let pt = Pseudotriangulation::from_gluing_data(corners, &gluings)?;
    let reps: Vec<_> = (0..n).map(|i| (id(i, 0), [0, 1])).collect();
    let km = KnotMarking::from_representatives(&pt, &reps)?;
    let rep = Representation::scalar(phi)?;
    LiftedComplex::new(pt, km, rep, LiftAssignment::new(labels))
}

/// S³ as the join of an `n`-cycle (the unknot, lifting to the z-axis) and an `m`-cycle
/// linked once with it, with the scalar representation of angle `phi` about z.
pub fn build_unknot_join<T: Real>(n: usize, m: usize, phi: T) -> Result<LiftedComplex<T>> {
    if n < 3 || m < 3 {
        return Err(Error::InvalidArgument(format!("join needs n, m ≥ 3 (got {n}, {m})")));
    }
    join_complex(n, m, phi)
}

/// The unknot as the join of an `n`-cycle with a one-vertex loop; each of the `n`
/// tetrahedra is `B D A A` with `BD` on the knot and `AA` winding once around it.
pub fn build_unknot_loop<T: Real>(n: usize, phi: T) -> Result<LiftedComplex<T>> {
    if n < 3 {
        return Err(Error::InvalidArgument(format!("loop fixture needs n ≥ 3 (got {n})")));
    }
    join_complex(n, 1, phi)
}

pub fn build_fixture<T: Real>(kind: FixtureKind, phi: T) -> Result<LiftedComplex<T>> {
    match kind {
        FixtureKind::UnknotJoin { n, m } => build_unknot_join(n, m, phi),
        FixtureKind::UnknotLoop { n } => build_unknot_loop(n, phi),
    }
}

/// Coordinates for the local configuration of the knot move: `A⁽¹⁾` off the axis and
/// `B`, `C`, `D` on the z-axis, given by their heights.
#[derive(Clone, Debug, PartialEq)]
pub struct BdaaLocal<T: Real> {
    pub a: Point3<T>,
    pub b: T,
    pub c: T,
    pub d: T,
    pub rep: Representation<T>,
}

impl<T: Real> BdaaLocal<T> {
    pub fn new(a: Point3<T>, b: T, c: T, d: T, phi: T) -> Result<Self> {
        let gap = T::lit(1e-9);
        if (b - d).abs() < gap || (b - c).abs() < gap || (c - d).abs() < gap {
            return Err(Error::InvalidArgument("B, C, D must be distinct points of the axis".into()));
        }
        if (a.x * a.x + a.y * a.y).sqrt() < gap {
            return Err(Error::InvalidArgument("A must lie off the axis".into()));
        }
        Ok(Self { a, b, c, d, rep: Representation::scalar(phi)? })
    }
}

/// Seeded random local configuration, `C` strictly between `B` and `D`.
pub fn build_bdaa_local<T: Real>(phi: T, seed: u64) -> Result<BdaaLocal<T>> {
    let rep = Representation::scalar(phi)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let unit = [-T::one(), T::one()];
    loop {
        let a = Vector3::new(uniform(&mut rng, unit), uniform(&mut rng, unit), uniform(&mut rng, unit));
        let b = uniform(&mut rng, unit);
        let d = uniform(&mut rng, unit);
        let s = uniform(&mut rng, [T::lit(0.1), T::lit(0.9)]);
        let radius = (a.x * a.x + a.y * a.y).sqrt();
        if radius < T::lit(0.1) || (b - d).abs() < T::lit(0.1) {
            continue;
        }
        return Ok(BdaaLocal { a, b, c: b + (d - b) * s, d, rep });
    }
}

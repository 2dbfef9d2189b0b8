//! The representation of the knot group, per-corner deck labels and Euclidean realizations
//! in the branched cover.
//!
//! Every corner of every tetrahedron carries a word in the meridian generators. The lifted
//! position of a corner is `f(word) · base`, where `base` is the vertex's base point (an
//! arbitrary point for off-knot vertices, `z′ · axis` for knot vertices).

use nalgebra::{DVector, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::euclid::{rotation_about, signed_dihedral_angles, Point3, Rotation, TetGeometry, EDGE_SLOTS};
use crate::pseudotriangulation::{EdgeId, KnotMarking, Pseudotriangulation, TetId, VertexId};
use crate::scalar::{precision_floor, reduce_angle, Real};

/// A reduced word in the generators, stored as `(generator index, nonzero exponent)` runs.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Word(Vec<(usize, i64)>);

impl Word {
    pub fn identity() -> Self {
        Word(Vec::new())
    }

    pub fn generator(g: usize) -> Self {
        Word(vec![(g, 1)])
    }

    pub fn power(g: usize, k: i64) -> Self {
        Word::from_letters([(g, k)])
    }

    pub fn from_letters(letters: impl IntoIterator<Item = (usize, i64)>) -> Self {
        let mut out: Vec<(usize, i64)> = Vec::new();
        for (g, k) in letters {
            if k == 0 {
                continue;
            }
            match out.last_mut() {
                Some((h, e)) if *h == g => {
                    *e += k;
                    if *e == 0 {
                        out.pop();
                    }
                }
                _ => out.push((g, k)),
            }
        }
        Word(out)
    }

    pub fn letters(&self) -> &[(usize, i64)] {
        &self.0
    }

    pub fn is_identity(&self) -> bool {
        self.0.is_empty()
    }

    /// `self · other`.
    pub fn mul(&self, other: &Word) -> Word {
        Word::from_letters(self.0.iter().chain(other.0.iter()).copied())
    }

    pub fn inverse(&self) -> Word {
        Word(self.0.iter().rev().map(|&(g, k)| (g, -k)).collect())
    }

    /// Image in the abelianization: all meridians of a knot are conjugate, so this is the
    /// winding number around the knot.
    pub fn exponent_sum(&self) -> i64 {
        self.0.iter().map(|&(_, k)| k).sum()
    }

    /// Parses whitespace-separated tokens `name` or `name^k`; the empty string is the identity.
    pub fn parse(s: &str, names: &[String]) -> Result<Word> {
        let err = |reason: String| Error::WordParse { word: s.to_string(), reason };
        let mut letters = Vec::new();
        for tok in s.split_whitespace() {
            let (name, exp) = match tok.split_once('^') {
                Some((n, e)) => (n, e.parse::<i64>().map_err(|e| err(format!("bad exponent in `{tok}`: {e}")))?),
                None => (tok, 1),
            };
            if name.is_empty() {
                return Err(err(format!("missing generator in `{tok}`")));
            }
            let g = names.iter().position(|n| n == name).ok_or_else(|| Error::UnknownGenerator(name.to_string()))?;
            letters.push((g, exp));
        }
        Ok(Word::from_letters(letters))
    }

    pub fn format(&self, names: &[String]) -> String {
        self.0
            .iter()
            .map(|&(g, k)| if k == 1 { names[g].clone() } else { format!("{}^{}", names[g], k) })
            .collect::<Vec<_>>()
            .join(" ")
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Generator<T: Real> {
    pub name: String,
    pub axis: Vector3<T>,
    pub angle: T,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RepresentationKind {
    /// All generators rotate about one axis; the representation factors through ℤ.
    Scalar,
    Nonabelian,
}

/// A representation of the knot group into SO(3) given on meridian generators, each a
/// rotation through the common angle φ about an axis through the origin.
#[derive(Clone, Debug, PartialEq)]
pub struct Representation<T: Real> {
    generators: Vec<Generator<T>>,
    names: Vec<String>,
    phi: T,
    kind: RepresentationKind,
    /// Written as `{kind: scalar, phi}`: a single generator `m` about `+z`.
    scalar_form: bool,
}

impl<T: Real> Representation<T> {
    /// Single meridian `m` rotating through `phi` about the z-axis.
    pub fn scalar(phi: T) -> Result<Self> {
        let mut rep = Self::explicit(vec![Generator { name: "m".into(), axis: Vector3::z(), angle: phi }])?;
        rep.scalar_form = true;
        Ok(rep)
    }

    pub fn explicit(generators: Vec<Generator<T>>) -> Result<Self> {
        let first = generators.first().ok_or_else(|| Error::InvalidRepresentation("no generators".into()))?;
        let phi = first.angle;
        if !phi.is_finite() {
            return Err(Error::InvalidRepresentation("rotation angle is not finite".into()));
        }
        if reduce_angle(phi).abs() < T::lit(1e-12) {
            return Err(Error::TrivialRepresentation);
        }
        let mut gens = Vec::with_capacity(generators.len());
        let mut names: Vec<String> = Vec::new();
        for g in generators {
            let n = g.axis.norm();
            if !(n > T::zero()) || !n.is_finite() {
                return Err(Error::InvalidRepresentation(format!("generator `{}` has a zero axis", g.name)));
            }
            if reduce_angle(g.angle - phi).abs() > T::lit(1e-12) {
                return Err(Error::InvalidRepresentation(format!(
                    "generator `{}` rotates through a different angle",
                    g.name
                )));
            }
            if g.name.is_empty() || g.name.contains(char::is_whitespace) || g.name.contains('^') {
                return Err(Error::InvalidRepresentation(format!("invalid generator name `{}`", g.name)));
            }
            if names.contains(&g.name) {
                return Err(Error::InvalidRepresentation(format!("duplicate generator `{}`", g.name)));
            }
            names.push(g.name.clone());
            gens.push(Generator { name: g.name, axis: g.axis / n, angle: g.angle });
        }
        let a0 = gens[0].axis;
        let parallel = gens.iter().all(|g| g.axis.cross(&a0).norm() < T::lit(1e-12));
        let kind = if parallel { RepresentationKind::Scalar } else { RepresentationKind::Nonabelian };
        Ok(Self { generators: gens, names, phi, kind, scalar_form: false })
    }

    pub fn phi(&self) -> T {
        self.phi
    }

    pub fn kind(&self) -> RepresentationKind {
        self.kind
    }

    pub fn is_scalar(&self) -> bool {
        self.kind == RepresentationKind::Scalar
    }

    pub fn is_scalar_form(&self) -> bool {
        self.scalar_form
    }

    pub fn generators(&self) -> &[Generator<T>] {
        &self.generators
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    /// Common axis of a scalar representation.
    pub fn scalar_axis(&self) -> Option<Vector3<T>> {
        self.is_scalar().then(|| self.generators[0].axis)
    }

    pub fn rotation(&self, w: &Word) -> Rotation<T> {
        let mut r = Rotation::identity();
        for &(g, k) in w.letters() {
            let gen = &self.generators[g];
            r *= rotation_about(&gen.axis, gen.angle * T::lit(k as f64));
        }
        r
    }

    pub fn parse_word(&self, s: &str) -> Result<Word> {
        Word::parse(s, &self.names)
    }

    pub fn format_word(&self, w: &Word) -> String {
        w.format(&self.names)
    }
}

/// Deck labels, one word per (tetrahedron, corner).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LiftAssignment {
    labels: Vec<[Word; 4]>,
}

impl LiftAssignment {
    pub fn new(labels: Vec<[Word; 4]>) -> Self {
        Self { labels }
    }

    pub fn trivial(n_tets: usize) -> Self {
        Self { labels: vec![Default::default(); n_tets] }
    }

    pub fn label(&self, tet: TetId, corner: usize) -> &Word {
        &self.labels[tet][corner]
    }

    pub fn labels(&self, tet: TetId) -> &[Word; 4] {
        &self.labels[tet]
    }

    pub fn set_label(&mut self, tet: TetId, corner: usize, w: Word) {
        self.labels[tet][corner] = w;
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Left-multiplies every label of one tetrahedron by `w` (an isometry of that tetrahedron).
    pub fn left_multiply_tet(&mut self, tet: TetId, w: &Word) {
        for l in self.labels[tet].iter_mut() {
            *l = w.mul(l);
        }
    }
}

/// Everything but the coordinates: combinatorics, knot, representation and deck labels.
#[derive(Clone, Debug)]
pub struct LiftedComplex<T: Real> {
    pub pt: Pseudotriangulation,
    pub km: KnotMarking,
    pub rep: Representation<T>,
    pub lift: LiftAssignment,
    /// Optional per-vertex axis for knot vertices (required for nonabelian representations).
    pub knot_axes: Vec<Option<Vector3<T>>>,
}

impl<T: Real> LiftedComplex<T> {
    pub fn new(pt: Pseudotriangulation, km: KnotMarking, rep: Representation<T>, lift: LiftAssignment) -> Result<Self> {
        let n0 = pt.n_vertices();
        Self::with_axes(pt, km, rep, lift, vec![None; n0])
    }

    pub fn with_axes(
        pt: Pseudotriangulation,
        km: KnotMarking,
        rep: Representation<T>,
        lift: LiftAssignment,
        knot_axes: Vec<Option<Vector3<T>>>,
    ) -> Result<Self> {
        if lift.len() != pt.n_tetrahedra() {
            return Err(Error::Malformed(format!(
                "{} label rows for {} tetrahedra",
                lift.len(),
                pt.n_tetrahedra()
            )));
        }
        let ng = rep.generators().len();
        for t in 0..lift.len() {
            for w in lift.labels(t) {
                if let Some(&(g, _)) = w.letters().iter().find(|&&(g, _)| g >= ng) {
                    return Err(Error::UnknownGenerator(format!("#{g}")));
                }
            }
        }
        if knot_axes.len() != pt.n_vertices() {
            return Err(Error::Malformed("axis list length differs from vertex count".into()));
        }
        let mut knot_axes = knot_axes;
        for v in 0..pt.n_vertices() {
            if !km.is_knot_vertex(v) {
                continue;
            }
            match knot_axes[v] {
                Some(a) => {
                    let n = a.norm();
                    if !(n > T::zero()) {
                        return Err(Error::InvalidRepresentation(format!("knot vertex {v} has a zero axis")));
                    }
                    knot_axes[v] = Some(a / n);
                }
                None if rep.is_scalar() => {}
                None => {
                    return Err(Error::InvalidRepresentation(format!(
                        "knot vertex {v} needs an explicit axis for a nonabelian representation"
                    )))
                }
            }
        }
        Ok(Self { pt, km, rep, lift, knot_axes })
    }

    pub fn knot_axis(&self, v: VertexId) -> Vector3<T> {
        self.knot_axes
            .get(v)
            .copied()
            .flatten()
            .or_else(|| self.rep.scalar_axis())
            .unwrap_or_else(Vector3::z)
    }

    pub fn label_rotation(&self, tet: TetId, corner: usize) -> Rotation<T> {
        self.rep.rotation(self.lift.label(tet, corner))
    }
}

/// Base data of one vertex.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Placement<T: Real> {
    OffKnot(Point3<T>),
    OnKnot { axis: Vector3<T>, z: T },
}

impl<T: Real> Placement<T> {
    pub fn base(&self) -> Point3<T> {
        match *self {
            Placement::OffKnot(p) => p,
            Placement::OnKnot { axis, z } => axis * z,
        }
    }

    pub fn n_coordinates(&self) -> usize {
        match self {
            Placement::OffKnot(_) => 3,
            Placement::OnKnot { .. } => 1,
        }
    }
}

/// Coordinates of one realization, in vertex order: 3 per off-knot vertex, 1 (`z′`) per
/// knot vertex.
#[derive(Clone, Debug, PartialEq)]
pub struct Realization<T: Real> {
    pub placements: Vec<Placement<T>>,
    pub seed: Option<u64>,
}

/// What one coordinate column stands for.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Coordinate {
    Cartesian { vertex: VertexId, component: usize },
    AxisZ { vertex: VertexId },
}

impl<T: Real> Realization<T> {
    pub fn n_coordinates(&self) -> usize {
        self.placements.iter().map(|p| p.n_coordinates()).sum()
    }

    /// First coordinate column of every vertex.
    pub fn offsets(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.placements.len());
        let mut k = 0;
        for p in &self.placements {
            out.push(k);
            k += p.n_coordinates();
        }
        out
    }

    pub fn coordinate_labels(&self) -> Vec<Coordinate> {
        let mut out = Vec::new();
        for (v, p) in self.placements.iter().enumerate() {
            match p {
                Placement::OffKnot(_) => {
                    out.extend((0..3).map(|component| Coordinate::Cartesian { vertex: v, component }))
                }
                Placement::OnKnot { .. } => out.push(Coordinate::AxisZ { vertex: v }),
            }
        }
        out
    }

    pub fn coordinates(&self) -> DVector<T> {
        let mut out = Vec::with_capacity(self.n_coordinates());
        for p in &self.placements {
            match p {
                Placement::OffKnot(x) => out.extend(x.iter().copied()),
                Placement::OnKnot { z, .. } => out.push(*z),
            }
        }
        DVector::from_vec(out)
    }

    pub fn with_coordinates(&self, x: &DVector<T>) -> Self {
        let mut k = 0;
        let placements = self
            .placements
            .iter()
            .map(|p| match *p {
                Placement::OffKnot(_) => {
                    k += 3;
                    Placement::OffKnot(Vector3::new(x[k - 3], x[k - 2], x[k - 1]))
                }
                Placement::OnKnot { axis, .. } => {
                    k += 1;
                    Placement::OnKnot { axis, z: x[k - 1] }
                }
            })
            .collect();
        Self { placements, seed: self.seed }
    }

    /// Multiplies every coordinate by `lambda`.
    pub fn scaled(&self, lambda: T) -> Self {
        self.with_coordinates(&(self.coordinates() * lambda))
    }
}

/// `f(label) · base` for one corner.
pub fn corner_position<T: Real>(lc: &LiftedComplex<T>, real: &Realization<T>, tet: TetId, corner: usize) -> Point3<T> {
    let v = lc.pt.corners(tet)[corner];
    lc.label_rotation(tet, corner) * real.placements[v].base()
}

pub fn tet_geometry<T: Real>(lc: &LiftedComplex<T>, real: &Realization<T>, tet: TetId) -> TetGeometry<T> {
    TetGeometry::new([0, 1, 2, 3].map(|k| corner_position(lc, real, tet, k)))
}

/// The deck transformation carrying tetrahedron `tet`'s frame to its neighbour's across
/// `face`: `f(L_{t′}(σk)) · f(L_t(k))⁻¹`, read at an off-knot corner of the face.
pub fn face_transition<T: Real>(lc: &LiftedComplex<T>, tet: TetId, face: usize) -> Word {
    let g = lc.pt.gluing(tet, face);
    let corners = lc.pt.corners(tet);
    let k = (0..4)
        .filter(|&k| k != face)
        .find(|&k| !lc.km.is_knot_vertex(corners[k]))
        .unwrap_or((face + 1) % 4);
    lc.lift.label(g.tet, g.perm.apply(k)).mul(&lc.lift.label(tet, k).inverse())
}

#[derive(Clone, Debug, PartialEq)]
pub struct LiftReport {
    /// Largest relative length mismatch between glued faces.
    pub max_face_discrepancy: f64,
    pub worst_face: Option<(TetId, usize)>,
    /// Largest relative spread of lengths within one edge class.
    pub max_edge_discrepancy: f64,
    pub worst_edge: Option<EdgeId>,
}

pub const DEFAULT_LIFT_TOLERANCE: f64 = 1e-9;

/// Checks that glued faces are congruent and every edge class has a single length.
pub fn validate_lift<T: Real>(lc: &LiftedComplex<T>, real: &Realization<T>, tol: f64) -> Result<LiftReport> {
    let pt = &lc.pt;
    let pos: Vec<[Point3<T>; 4]> = (0..pt.n_tetrahedra()).map(|t| tet_geometry(lc, real, t).corners).collect();
    let mut report = LiftReport { max_face_discrepancy: 0.0, worst_face: None, max_edge_discrepancy: 0.0, worst_edge: None };
    for (t, f) in pt.triangles() {
        let g = pt.gluing(t, f);
        let ks: Vec<usize> = (0..4).filter(|&k| k != f).collect();
        let mut worst = 0.0f64;
        for i in 0..3 {
            for j in i + 1..3 {
                let (a, b) = (ks[i], ks[j]);
                let l1 = (pos[t][a] - pos[t][b]).norm().to_f64_lossy();
                let l2 = (pos[g.tet][g.perm.apply(a)] - pos[g.tet][g.perm.apply(b)]).norm().to_f64_lossy();
                let d = (l1 - l2).abs() / l1.abs().max(l2.abs()).max(f64::MIN_POSITIVE);
                worst = worst.max(d);
            }
        }
        if worst > report.max_face_discrepancy || worst.is_nan() {
            report.max_face_discrepancy = worst;
            report.worst_face = Some((t, f));
        }
        if !(worst <= tol) {
            return Err(Error::InconsistentLift { tet: t, face: f, discrepancy: worst });
        }
    }
    for (id, class) in pt.edges().iter().enumerate() {
        let ls: Vec<f64> = class
            .members
            .iter()
            .map(|m| {
                let (a, b) = EDGE_SLOTS[m.slot];
                (pos[m.tet][a] - pos[m.tet][b]).norm().to_f64_lossy()
            })
            .collect();
        let hi = ls.iter().cloned().fold(f64::MIN, f64::max);
        let lo = ls.iter().cloned().fold(f64::MAX, f64::min);
        let d = (hi - lo) / hi.max(f64::MIN_POSITIVE);
        if d > report.max_edge_discrepancy {
            report.max_edge_discrepancy = d;
            report.worst_edge = Some(id);
        }
        if !(d <= tol) {
            let m = class.members[0];
            let (a, b) = EDGE_SLOTS[m.slot];
            let face = (0..4).find(|&k| k != a && k != b).unwrap_or(0);
            return Err(Error::InconsistentLift { tet: m.tet, face, discrepancy: d });
        }
    }
    Ok(report)
}

/// Deck holonomy of a loop edge, traversed along its class orientation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Holonomy {
    pub word: Word,
    pub winding: i64,
}

pub fn meridian_winding(pt: &Pseudotriangulation, lift: &LiftAssignment, edge: EdgeId) -> Result<Holonomy> {
    let class = pt.edges().get(edge).ok_or_else(|| Error::InvalidArgument(format!("no edge {edge}")))?;
    if !class.is_loop() {
        return Err(Error::NotALoop { edge });
    }
    let m = class.members[0];
    let (a, b) = EDGE_SLOTS[m.slot];
    let word = lift.label(m.tet, b).mul(&lift.label(m.tet, a).inverse());
    let winding = word.exponent_sum();
    Ok(Holonomy { word, winding })
}

#[derive(Clone, Debug, PartialEq)]
pub struct SamplingConfig<T: Real> {
    /// Each base coordinate of an off-knot vertex is drawn from `[lo, hi]`.
    pub coordinate_range: [T; 2],
    /// Knot-vertex `z′` range.
    pub axis_range: [T; 2],
    pub max_attempts: usize,
    /// Accept only if every `|6V| ≥ min_volume_ratio · (max edge)³`.
    pub min_volume_ratio: T,
}

impl<T: Real> Default for SamplingConfig<T> {
    fn default() -> Self {
        Self {
            coordinate_range: [-T::one(), T::one()],
            axis_range: [-T::one(), T::one()],
            max_attempts: 1000,
            min_volume_ratio: T::lit(1e-4),
        }
    }
}

pub(crate) fn uniform<T: Real, R: Rng>(rng: &mut R, [lo, hi]: [T; 2]) -> T {
    lo + (hi - lo) * T::lit(rng.gen::<f64>())
}

/// Rejection-sampled general-position realization.
pub fn sample_general_position<T: Real>(lc: &LiftedComplex<T>, seed: u64, config: &SamplingConfig<T>) -> Result<Realization<T>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..config.max_attempts {
        let placements = (0..lc.pt.n_vertices())
            .map(|v| {
                if lc.km.is_knot_vertex(v) {
                    Placement::OnKnot { axis: lc.knot_axis(v), z: uniform(&mut rng, config.axis_range) }
                } else {
                    let r = config.coordinate_range;
                    Placement::OffKnot(Vector3::new(uniform(&mut rng, r), uniform(&mut rng, r), uniform(&mut rng, r)))
                }
            })
            .collect();
        let real = Realization { placements, seed: Some(seed) };
        if is_general_position(lc, &real, config.min_volume_ratio) {
            validate_lift(lc, &real, precision_floor::<T>(DEFAULT_LIFT_TOLERANCE))?;
            let d = deficit_angles(lc, &real)?;
            if let Some((edge, dev)) = d.worst() {
                if dev > precision_floor::<T>(1e-9) {
                    return Err(Error::DeficitMismatch { edge, deviation: dev });
                }
            }
            return Ok(real);
        }
    }
    Err(Error::SamplingExhausted { attempts: config.max_attempts })
}

/// Every tetrahedron has `|6V| ≥ ratio · (max edge)³`.
pub fn is_general_position<T: Real>(lc: &LiftedComplex<T>, real: &Realization<T>, ratio: T) -> bool {
    (0..lc.pt.n_tetrahedra()).all(|t| {
        let g = tet_geometry(lc, real, t);
        let m = g.max_edge();
        let v6 = g.volume().abs() * T::lit(6.0);
        m > T::zero() && v6 >= ratio * m * m * m && v6 > T::zero()
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct DeficitReport<T: Real> {
    /// `ω_b = −Σ sign(V) θ`, unreduced.
    pub raw: Vec<T>,
    /// 0 for off-knot edges, `∓φ` for knot edges.
    pub expected: Vec<T>,
    /// `raw − expected` reduced to (−π, π].
    pub deviation: Vec<T>,
    /// `+1` if the deck rotation turns right-handedly about the knot direction.
    pub handedness: i8,
}

impl<T: Real> DeficitReport<T> {
    pub fn worst(&self) -> Option<(EdgeId, f64)> {
        self.deviation
            .iter()
            .enumerate()
            .map(|(i, d)| (i, d.abs().to_f64_lossy()))
            .max_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(std::cmp::Ordering::Greater))
    }
}

/// Deficit angle of every edge class and its deviation from the flat-cover value.
///
/// Around a knot edge traversed `P → Q` the deficit is `−ε s φ`, with `s` the sign of
/// `(Q − P)·axis` and `ε = ±1` a handedness fixed once for the whole complex (the sign
/// relating the deck rotation to the knot orientation).
pub fn deficit_angles<T: Real>(lc: &LiftedComplex<T>, real: &Realization<T>) -> Result<DeficitReport<T>> {
    let pt = &lc.pt;
    let mut raw = vec![T::zero(); pt.n_edges()];
    for t in 0..pt.n_tetrahedra() {
        let g = tet_geometry(lc, real, t);
        let th = signed_dihedral_angles(&g, None).map_err(|e| match e {
            Error::DegenerateTetrahedron { volume6, threshold, .. } => Error::DegenerateTetrahedron { tet: Some(t), volume6, threshold },
            e => e,
        })?;
        for (slot, &a) in th.iter().enumerate() {
            raw[pt.edge_of(t, slot)] -= a;
        }
    }
    let phi = lc.rep.phi();
    let mut direction = vec![0i8; pt.n_edges()];
    for k in lc.km.edges() {
        let p = real.placements[k.from].base();
        let q = real.placements[k.to].base();
        let axis = lc.knot_axis(k.from);
        direction[k.edge] = if (q - p).dot(&axis) >= T::zero() { 1 } else { -1 };
    }
    let mut handedness = 1i8;
    if let Some(k) = lc.km.edges().first() {
        let s = T::lit(direction[k.edge] as f64);
        let plus = reduce_angle(raw[k.edge] + s * phi).abs();
        let minus = reduce_angle(raw[k.edge] - s * phi).abs();
        handedness = if plus <= minus { 1 } else { -1 };
    }
    let eps = T::lit(handedness as f64);
    let expected: Vec<T> = (0..pt.n_edges())
        .map(|e| if direction[e] == 0 { T::zero() } else { -eps * T::lit(direction[e] as f64) * phi })
        .collect();
    let deviation = raw.iter().zip(&expected).map(|(&r, &x)| reduce_angle(r - x)).collect();
    Ok(DeficitReport { raw, expected, deviation, handedness })
}

//! Local moves on pseudotriangulations carrying a lift and a realization, and the local
//! torsion relation of the knot move.
//!
//! Bulk moves (2→3, 3→2, 1→4, 4→1) are performed as a retriangulation of a cluster of
//! tetrahedra: the cluster is developed into one deck frame, its corners are grouped into
//! points, new tetrahedra are listed as point quadruples and their faces are matched with
//! the old boundary by point triples. The knot moves split or merge a tetrahedron
//! `B D A A` whose two faces through the knot edge `BD` are glued to each other.

use std::collections::HashMap;

use nalgebra::{DMatrix, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::euclid::{dtheta_dlength, edge_slot, Point3, TetGeometry, EDGE_SLOTS};
use crate::lift::{
    corner_position, face_transition, meridian_winding, tet_geometry, validate_lift, LiftAssignment, LiftedComplex,
    Placement, Realization, Word, DEFAULT_LIFT_TOLERANCE,
};
use crate::builders::BdaaLocal;
use crate::pseudotriangulation::{
    validate_knot_conditions, EdgeId, Gluing, KnotMarking, Perm4, Pseudotriangulation, TetId, VertexId,
};
use crate::scalar::Real;
use crate::torsion::{torsion_of_acyclic_complex, PivotRule};

/// New tetrahedra must satisfy `|6V| ≥ MOVE_MIN_VOLUME_RATIO · (max edge)³`.
pub const MOVE_MIN_VOLUME_RATIO: f64 = 1e-6;

/// A pseudotriangulation with its lift and one realization.
#[derive(Clone, Debug)]
pub struct State<T: Real> {
    pub complex: LiftedComplex<T>,
    pub realization: Realization<T>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum MoveDescriptor {
    /// Replace the two tetrahedra sharing face `face` of `tet` by three around a new edge.
    TwoThree { tet: TetId, face: usize },
    /// Replace the three tetrahedra around a degree-3 edge by two.
    ThreeTwo { edge: EdgeId },
    /// Insert a vertex at barycentric `weights` in `tet` (default: centroid).
    OneFour {
        tet: TetId,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        weights: Option<[f64; 4]>,
    },
    /// Remove a vertex of valence 4.
    FourOne { vertex: VertexId },
    /// Split the knot edge of the `B D A A` tetrahedron `tet` at axis coordinate `z`
    /// (default: midpoint).
    KnotOneTwo {
        tet: TetId,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        z: Option<f64>,
    },
    /// Merge the two knot edges at knot vertex `vertex`.
    KnotTwoOne { vertex: VertexId },
}

impl MoveDescriptor {
    pub fn is_knot_move(&self) -> bool {
        matches!(self, MoveDescriptor::KnotOneTwo { .. } | MoveDescriptor::KnotTwoOne { .. })
    }

    pub fn name(&self) -> &'static str {
        match self {
            MoveDescriptor::TwoThree { .. } => "2-3",
            MoveDescriptor::ThreeTwo { .. } => "3-2",
            MoveDescriptor::OneFour { .. } => "1-4",
            MoveDescriptor::FourOne { .. } => "4-1",
            MoveDescriptor::KnotOneTwo { .. } => "knot 1-2",
            MoveDescriptor::KnotTwoOne { .. } => "knot 2-1",
        }
    }
}

pub fn apply_move<T: Real>(state: &State<T>, d: &MoveDescriptor) -> Result<State<T>> {
    if d.is_knot_move() {
        apply_knot_move(state, d)
    } else {
        apply_bulk_move(state, d)
    }
}

/// The slot order `[first, second, r0, r1]` or `[first, second, r1, r0]`, whichever is an
/// even permutation.
fn even_arrangement(first: usize, second: usize) -> [usize; 4] {
    let rest: Vec<usize> = (0..4).filter(|&k| k != first && k != second).collect();
    let cand = [first, second, rest[0], rest[1]];
    if Perm4(cand.map(|k| k as u8)).is_odd() {
        [first, second, rest[1], rest[0]]
    } else {
        cand
    }
}

fn even_arrangement_from(first: usize) -> [usize; 4] {
    let second = (0..4).find(|&k| k != first).expect("four corners");
    even_arrangement(first, second)
}

fn not_applicable(msg: impl Into<String>) -> Error {
    Error::MoveNotApplicable(msg.into())
}

struct ClusterPoint<T: Real> {
    vertex: VertexId,
    label: Word,
    /// Base placement for a vertex created by the move.
    placement: Option<Placement<T>>,
}

/// Removed tetrahedra developed into the frame of the first one.
struct Cluster<'a, T: Real> {
    state: &'a State<T>,
    removed: Vec<TetId>,
    index_of: HashMap<TetId, usize>,
    dissolved: Vec<[bool; 4]>,
    point_of: Vec<[usize; 4]>,
    points: Vec<ClusterPoint<T>>,
}

impl<'a, T: Real> Cluster<'a, T> {
    /// `faces` lists dissolved face sides; their partners are added automatically.
    fn develop(state: &'a State<T>, removed: Vec<TetId>, faces: &[(TetId, usize)]) -> Result<Self> {
        let lc = &state.complex;
        let pt = &lc.pt;
        let index_of: HashMap<TetId, usize> = removed.iter().enumerate().map(|(i, &t)| (t, i)).collect();
        let n = removed.len();
        let mut dissolved = vec![[false; 4]; n];
        for &(t, f) in faces {
            let g = pt.gluing(t, f);
            let (&i, &j) = match (index_of.get(&t), index_of.get(&g.tet)) {
                (Some(i), Some(j)) => (i, j),
                _ => return Err(not_applicable("dissolved face leaves the cluster")),
            };
            dissolved[i][f] = true;
            dissolved[j][g.perm.apply(f)] = true;
        }

        let mut frames: Vec<Option<Word>> = vec![None; n];
        frames[0] = Some(Word::identity());
        let mut queue = vec![0usize];
        while let Some(i) = queue.pop() {
            let t = removed[i];
            for f in 0..4 {
                if !dissolved[i][f] {
                    continue;
                }
                let g = pt.gluing(t, f);
                let j = index_of[&g.tet];
                if frames[j].is_none() {
                    let w = face_transition(lc, t, f);
                    frames[j] = Some(frames[i].as_ref().expect("visited").mul(&w.inverse()));
                    queue.push(j);
                }
            }
        }
        if frames.iter().any(|f| f.is_none()) {
            return Err(not_applicable("cluster is not connected through its interior faces"));
        }

        let mut parent: Vec<usize> = (0..4 * n).collect();
        fn find(p: &mut [usize], x: usize) -> usize {
            let mut r = x;
            while p[r] != r {
                r = p[r];
            }
            let mut y = x;
            while p[y] != r {
                let nx = p[y];
                p[y] = r;
                y = nx;
            }
            r
        }
        for i in 0..n {
            let t = removed[i];
            for f in 0..4 {
                if !dissolved[i][f] {
                    continue;
                }
                let g = pt.gluing(t, f);
                let j = index_of[&g.tet];
                for k in (0..4).filter(|&k| k != f) {
                    let (a, b) = (find(&mut parent, 4 * i + k), find(&mut parent, 4 * j + g.perm.apply(k)));
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
        let mut root_point: HashMap<usize, usize> = HashMap::new();
        let mut points: Vec<ClusterPoint<T>> = Vec::new();
        let mut positions: Vec<Point3<T>> = Vec::new();
        let mut point_of = vec![[0usize; 4]; n];
        for i in 0..n {
            let t = removed[i];
            let frame = frames[i].clone().expect("developed");
            for k in 0..4 {
                let root = find(&mut parent, 4 * i + k);
                let label = frame.mul(lc.lift.label(t, k));
                let v = pt.corners(t)[k];
                let pos = lc.rep.rotation(&label) * state.realization.placements[v].base();
                let id = *root_point.entry(root).or_insert_with(|| {
                    points.push(ClusterPoint { vertex: v, label: label.clone(), placement: None });
                    positions.push(pos);
                    points.len() - 1
                });
                let scale = T::one() + pos.norm();
                if (positions[id] - pos).norm() > T::lit(1e-9) * scale {
                    return Err(not_applicable("cluster does not develop into a single frame"));
                }
                point_of[i][k] = id;
            }
        }
        Ok(Self { state, removed, index_of, dissolved, point_of, points })
    }

    fn point(&self, t: TetId, k: usize) -> usize {
        self.point_of[self.index_of[&t]][k]
    }

    fn add_point(&mut self, vertex: VertexId, label: Word, placement: Placement<T>) -> usize {
        self.points.push(ClusterPoint { vertex, label, placement: Some(placement) });
        self.points.len() - 1
    }

    /// Replaces the cluster by `new_tets` (point quadruples, positively ordered) and
    /// rebuilds everything. `removed_vertex` disappears with the move; a point with a
    /// placement is a new vertex.
    fn rebuild(&self, new_tets: &[[usize; 4]], removed_vertex: Option<VertexId>) -> Result<State<T>> {
        let lc = &self.state.complex;
        let pt = &lc.pt;
        let n_old = pt.n_tetrahedra();
        let in_cluster = |t: TetId| self.index_of.contains_key(&t);
        let mut new_index = vec![usize::MAX; n_old];
        let mut kept = Vec::new();
        for t in 0..n_old {
            if !in_cluster(t) {
                new_index[t] = kept.len();
                kept.push(t);
            }
        }
        let base = kept.len();
        let total = base + new_tets.len();

        // vertex ids
        let mut n_vertices = pt.n_vertices();
        let mut new_vertex_of_point: HashMap<usize, VertexId> = HashMap::new();
        let mut placements = self.state.realization.placements.clone();
        let mut axes = lc.knot_axes.clone();
        for (p, cp) in self.points.iter().enumerate() {
            if let Some(pl) = cp.placement {
                new_vertex_of_point.insert(p, n_vertices);
                n_vertices += 1;
                placements.push(pl);
                axes.push(None);
            }
        }
        let vertex_of_point = |p: usize| new_vertex_of_point.get(&p).copied().unwrap_or(self.points[p].vertex);
        let renumber = |v: VertexId| match removed_vertex {
            Some(r) if v > r => v - 1,
            _ => v,
        };
        if let Some(r) = removed_vertex {
            placements.remove(r);
            axes.remove(r);
        }

        let mut corners: Vec<[VertexId; 4]> = kept.iter().map(|&t| pt.corners(t).map(renumber)).collect();
        let mut labels: Vec<[Word; 4]> = kept.iter().map(|&t| lc.lift.labels(t).clone()).collect();
        for nt in new_tets {
            for &p in nt {
                if removed_vertex == Some(vertex_of_point(p)) {
                    return Err(not_applicable("new tetrahedron uses the removed vertex"));
                }
            }
            corners.push(nt.map(|p| renumber(vertex_of_point(p))));
            labels.push(nt.map(|p| self.points[p].label.clone()));
        }

        // faces of the new tetrahedra by point triple
        let triple = |a: usize, b: usize, c: usize| {
            let mut s = [a, b, c];
            s.sort_unstable();
            s
        };
        let mut new_faces: HashMap<[usize; 3], Vec<(usize, usize)>> = HashMap::new();
        for (i, nt) in new_tets.iter().enumerate() {
            for c in 0..4 {
                let f: Vec<usize> = (0..4).filter(|&k| k != c).map(|k| nt[k]).collect();
                new_faces.entry(triple(f[0], f[1], f[2])).or_default().push((i, c));
            }
        }

        let mut table: Vec<[Option<Gluing>; 4]> = vec![[None; 4]; total];
        for (ni, &t) in kept.iter().enumerate() {
            for f in 0..4 {
                let g = pt.gluing(t, f);
                if !in_cluster(g.tet) {
                    table[ni][f] = Some(Gluing { tet: new_index[g.tet], perm: g.perm });
                }
            }
        }

        // boundary faces of the cluster ↦ new faces
        let mut boundary_to_new: HashMap<(TetId, usize), (usize, usize)> = HashMap::new();
        let mut used: HashMap<(usize, usize), bool> = HashMap::new();
        for (i, &t) in self.removed.iter().enumerate() {
            for f in 0..4 {
                if self.dissolved[i][f] {
                    continue;
                }
                let p: Vec<usize> = (0..4).filter(|&k| k != f).map(|k| self.point_of[i][k]).collect();
                let key = triple(p[0], p[1], p[2]);
                let cands = new_faces.get(&key).ok_or_else(|| not_applicable("boundary face not reproduced"))?;
                if cands.len() != 1 {
                    return Err(not_applicable("boundary face matched ambiguously"));
                }
                if used.insert(cands[0], true).is_some() {
                    return Err(not_applicable("two boundary faces share their points"));
                }
                boundary_to_new.insert((t, f), cands[0]);
            }
        }

        let corner_with_point = |nt: &[usize; 4], p: usize| nt.iter().position(|&q| q == p);
        for (&(t, f), &(ni, c)) in &boundary_to_new {
            let g = pt.gluing(t, f);
            let nt = &new_tets[ni];
            let mut img = [0u8; 4];
            let partner_tet;
            if !in_cluster(g.tet) {
                for i in (0..4).filter(|&i| i != c) {
                    let k = (0..4).find(|&k| k != f && self.point(t, k) == nt[i]).ok_or_else(|| not_applicable("corner lost"))?;
                    img[i] = g.perm.apply(k) as u8;
                }
                img[c] = g.perm.apply(f) as u8;
                partner_tet = new_index[g.tet];
            } else {
                let (nj, c2) = *boundary_to_new
                    .get(&(g.tet, g.perm.apply(f)))
                    .ok_or_else(|| not_applicable("self-glued boundary face"))?;
                let nt2 = &new_tets[nj];
                for i in (0..4).filter(|&i| i != c) {
                    let k = (0..4).find(|&k| k != f && self.point(t, k) == nt[i]).ok_or_else(|| not_applicable("corner lost"))?;
                    let q = self.point(g.tet, g.perm.apply(k));
                    img[i] = corner_with_point(nt2, q).ok_or_else(|| not_applicable("corner lost"))? as u8;
                }
                img[c] = c2 as u8;
                partner_tet = base + nj;
            }
            let perm = Perm4::new(img).ok_or_else(|| not_applicable("face correspondence is not a bijection"))?;
            table[base + ni][c] = Some(Gluing { tet: partner_tet, perm });
            if !in_cluster(g.tet) {
                table[partner_tet][g.perm.apply(f)] = Some(Gluing { tet: base + ni, perm: perm.inverse() });
            }
        }
        for faces in new_faces.values() {
            let free: Vec<(usize, usize)> = faces.iter().copied().filter(|x| !used.contains_key(x)).collect();
            if free.is_empty() {
                continue;
            }
            if free.len() != 2 {
                return Err(not_applicable("interior faces of the new cluster do not pair up"));
            }
            let ((i, c), (j, d)) = (free[0], free[1]);
            let mut img = [0u8; 4];
            for k in (0..4).filter(|&k| k != c) {
                img[k] = corner_with_point(&new_tets[j], new_tets[i][k]).ok_or_else(|| not_applicable("corner lost"))? as u8;
            }
            img[c] = d as u8;
            let perm = Perm4::new(img).ok_or_else(|| not_applicable("face correspondence is not a bijection"))?;
            table[base + i][c] = Some(Gluing { tet: base + j, perm });
            table[base + j][d] = Some(Gluing { tet: base + i, perm: perm.inverse() });
        }

        // knot representatives
        let mut reps = Vec::new();
        for &(t, [a, b]) in lc.km.representatives() {
            if !in_cluster(t) {
                reps.push((new_index[t], [a, b]));
                continue;
            }
            let (pa, pb) = (self.point(t, a), self.point(t, b));
            let found = new_tets.iter().enumerate().find_map(|(i, nt)| {
                Some((base + i, [corner_with_point(nt, pa)?, corner_with_point(nt, pb)?]))
            });
            reps.push(found.ok_or_else(|| Error::WouldTouchKnot("knot edge removed".into()))?);
        }

        let new_ids: Vec<usize> = (base..total).collect();
        finish(lc, corners, labels, table, &reps, placements, axes, &new_ids, self.state.realization.seed, None)
    }
}

fn check_quality<T: Real>(lc: &LiftedComplex<T>, real: &Realization<T>, tets: &[TetId], knot: Option<T>) -> Result<()> {
    for &t in tets {
        let g = tet_geometry(lc, real, t);
        let m = g.max_edge();
        let v6 = g.volume().abs() * T::lit(6.0);
        let threshold = T::lit(MOVE_MIN_VOLUME_RATIO) * m * m * m;
        if !(v6 >= threshold) || v6 == T::zero() {
            return Err(match knot {
                Some(_) => Error::DegenerateTetrahedron { tet: Some(t), volume6: v6.to_f64_lossy(), threshold: threshold.to_f64_lossy() },
                None => not_applicable(format!("new tetrahedron {t} is degenerate (|6V| = {:e})", v6.to_f64_lossy())),
            });
        }
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn finish<T: Real>(
    old: &LiftedComplex<T>,
    corners: Vec<[VertexId; 4]>,
    labels: Vec<[Word; 4]>,
    table: Vec<[Option<Gluing>; 4]>,
    reps: &[(TetId, [usize; 2])],
    placements: Vec<Placement<T>>,
    axes: Vec<Option<Vector3<T>>>,
    new_tets: &[TetId],
    seed: Option<u64>,
    knot_z: Option<T>,
) -> Result<State<T>> {
    let pt = Pseudotriangulation::from_table(corners, table)?;
    let km = KnotMarking::from_representatives(&pt, reps)?;
    let complex = LiftedComplex::with_axes(pt, km, old.rep.clone(), LiftAssignment::new(labels), axes)?;
    let realization = Realization { placements, seed };
    check_quality(&complex, &realization, new_tets, knot_z)?;
    let report = validate_knot_conditions(&complex.pt, &complex.km, &complex.lift);
    if !report.two_knot_corners.passed {
        return Err(not_applicable(format!("knot condition (b) fails: {}", report.two_knot_corners.failures.join("; "))));
    }
    if !report.loops_wind_once.passed {
        return Err(not_applicable(format!("knot condition (c) fails: {}", report.loops_wind_once.failures.join("; "))));
    }
    validate_lift(&complex, &realization, DEFAULT_LIFT_TOLERANCE)?;
    Ok(State { complex, realization })
}

pub fn apply_bulk_move<T: Real>(state: &State<T>, d: &MoveDescriptor) -> Result<State<T>> {
    let lc = &state.complex;
    let pt = &lc.pt;
    let km = &lc.km;
    match *d {
        MoveDescriptor::TwoThree { tet, face } => {
            if tet >= pt.n_tetrahedra() || face > 3 {
                return Err(not_applicable("no such face"));
            }
            let g = pt.gluing(tet, face);
            if g.tet == tet {
                return Err(not_applicable("face is glued to its own tetrahedron"));
            }
            let p_v = pt.corners(tet)[face];
            let q_v = pt.corners(g.tet)[g.perm.apply(face)];
            if km.is_knot_vertex(p_v) && km.is_knot_vertex(q_v) {
                return Err(Error::WouldTouchKnot("new edge would join two knot vertices".into()));
            }
            let cl = Cluster::develop(state, vec![tet, g.tet], &[(tet, face)])?;
            // [p, x, y, c] even, so [y, x, c, p] is even too
            let [_, sx, sy, sc] = even_arrangement_from(face);
            let (a, b, c, p) = (cl.point(tet, sy), cl.point(tet, sx), cl.point(tet, sc), cl.point(tet, face));
            let q = cl.point(g.tet, g.perm.apply(face));
            cl.rebuild(&[[a, b, q, p], [b, c, q, p], [c, a, q, p]], None)
        }
        MoveDescriptor::ThreeTwo { edge } => {
            let class = pt.edges().get(edge).ok_or_else(|| not_applicable("no such edge"))?;
            if km.is_knot_edge(edge) {
                return Err(Error::WouldTouchKnot("edge lies on the knot".into()));
            }
            if class.degree() != 3 {
                return Err(not_applicable(format!("edge has degree {}", class.degree())));
            }
            let mut tets: Vec<TetId> = class.members.iter().map(|m| m.tet).collect();
            tets.sort_unstable();
            tets.dedup();
            if tets.len() != 3 {
                return Err(not_applicable("edge meets a tetrahedron twice"));
            }
            let mut faces = Vec::new();
            for m in &class.members {
                let (c1, c2) = crate::euclid::opposite_corners(m.slot);
                faces.push((m.tet, c1));
                faces.push((m.tet, c2));
            }
            let m0 = class.members[0];
            let mut order = vec![m0.tet];
            order.extend(tets.iter().copied().filter(|&t| t != m0.tet));
            let cl = Cluster::develop(state, order, &faces)?;
            if cl.points.len() != 5 {
                return Err(not_applicable("link of the edge is not a triangle"));
            }
            let (i, j) = EDGE_SLOTS[m0.slot];
            let [sx, sy, sz, sw] = even_arrangement(i, j);
            let (q, p, a, b) = (cl.point(m0.tet, sx), cl.point(m0.tet, sy), cl.point(m0.tet, sz), cl.point(m0.tet, sw));
            let c = (0..5).find(|x| ![q, p, a, b].contains(x)).expect("five points");
            cl.rebuild(&[[a, b, c, p], [a, c, b, q]], None)
        }
        MoveDescriptor::OneFour { tet, weights } => {
            if tet >= pt.n_tetrahedra() {
                return Err(not_applicable("no such tetrahedron"));
            }
            let w = weights.unwrap_or([0.25; 4]);
            let sum: f64 = w.iter().sum();
            if w.iter().any(|x| !(x.is_finite())) || sum.abs() < 1e-12 {
                return Err(Error::InvalidArgument("barycentric weights must be finite with nonzero sum".into()));
            }
            let mut cl = Cluster::develop(state, vec![tet], &[])?;
            let mut x = Vector3::zeros();
            for k in 0..4 {
                x += corner_position(lc, &state.realization, tet, k) * T::lit(w[k] / sum);
            }
            let v_new = pt.n_vertices();
            let np = cl.add_point(v_new, Word::identity(), Placement::OffKnot(x));
            let pts = [0, 1, 2, 3].map(|k| cl.point(tet, k));
            let new: Vec<[usize; 4]> = (0..4)
                .map(|k| {
                    let mut q = pts;
                    q[k] = np;
                    q
                })
                .collect();
            cl.rebuild(&new, None)
        }
        MoveDescriptor::FourOne { vertex } => {
            if vertex >= pt.n_vertices() {
                return Err(not_applicable("no such vertex"));
            }
            if km.is_knot_vertex(vertex) {
                return Err(Error::WouldTouchKnot("vertex lies on the knot".into()));
            }
            let occ = pt.vertex_corners(vertex);
            let mut tets: Vec<TetId> = occ.iter().map(|&(t, _)| t).collect();
            tets.dedup();
            if occ.len() != 4 || tets.len() != 4 {
                return Err(not_applicable(format!("vertex has {} corner occurrences", occ.len())));
            }
            let mut faces = Vec::new();
            for &(t, k) in &occ {
                faces.extend((0..4).filter(|&f| f != k).map(|f| (t, f)));
            }
            let cl = Cluster::develop(state, tets, &faces)?;
            if cl.points.len() != 5 {
                return Err(not_applicable("link of the vertex is not a tetrahedron boundary"));
            }
            let (t0, k0) = occ[0];
            let [sv, sa, sb, sc] = even_arrangement_from(k0);
            let v = cl.point(t0, sv);
            if occ.iter().any(|&(t, k)| cl.point(t, k) != v) {
                return Err(not_applicable("vertex is not a single point of the cluster"));
            }
            let (a, b, c) = (cl.point(t0, sa), cl.point(t0, sb), cl.point(t0, sc));
            let dpt = (0..5).find(|x| ![v, a, b, c].contains(x)).expect("five points");
            cl.rebuild(&[[dpt, a, b, c]], Some(vertex))
        }
        _ => Err(not_applicable("not a bulk move")),
    }
}

/// Slots of a `B D A A` tetrahedron in positive order `[B, D, A, A′]`, with the checks of
/// the knot move.
fn bdaa_slots<T: Real>(lc: &LiftedComplex<T>, tet: TetId) -> Result<[usize; 4]> {
    let pt = &lc.pt;
    let km = &lc.km;
    if tet >= pt.n_tetrahedra() {
        return Err(not_applicable("no such tetrahedron"));
    }
    let c = pt.corners(tet);
    let knot: Vec<usize> = (0..4).filter(|&k| km.is_knot_vertex(c[k])).collect();
    if knot.len() != 2 {
        return Err(not_applicable("tetrahedron does not have exactly two knot corners"));
    }
    if !km.is_knot_edge(pt.edge_of(tet, edge_slot(knot[0], knot[1]))) {
        return Err(not_applicable("knot corners are not joined by a knot edge"));
    }
    let [sb, sd, sa, sa2] = even_arrangement(knot[0], knot[1]);
    if c[sa] != c[sa2] {
        return Err(not_applicable("the two off-knot corners are different vertices"));
    }
    let g = pt.gluing(tet, sa);
    if g.tet != tet || g.perm.apply(sa) != sa2 {
        return Err(not_applicable("faces through the knot edge are not glued to each other"));
    }
    let loop_edge = pt.edge_of(tet, edge_slot(sa, sa2));
    let h = meridian_winding(pt, &lc.lift, loop_edge)?;
    if h.winding.abs() != 1 {
        return Err(not_applicable(format!("edge AA winds {} times around the knot", h.winding)));
    }
    Ok([sb, sd, sa, sa2])
}

/// Tetrahedra where the knot 1→2 move applies.
pub fn find_bdaa<T: Real>(lc: &LiftedComplex<T>) -> Vec<TetId> {
    (0..lc.pt.n_tetrahedra()).filter(|&t| bdaa_slots(lc, t).is_ok()).collect()
}

/// Replaces the old gluing of `(t, f)` by one from new face `(nt, c)`, where
/// `img(i)` names the old corner of `t` sitting at new corner `i`.
fn glue_from_old(
    pt: &Pseudotriangulation,
    table: &mut [[Option<Gluing>; 4]],
    index: &[usize],
    t: TetId,
    f: usize,
    nt: usize,
    c: usize,
    old_corner: impl Fn(usize) -> usize,
) {
    let g = pt.gluing(t, f);
    let mut img = [0u8; 4];
    for i in (0..4).filter(|&i| i != c) {
        img[i] = g.perm.apply(old_corner(i)) as u8;
    }
    img[c] = g.perm.apply(f) as u8;
    let perm = Perm4(img);
    let partner = index[g.tet];
    table[nt][c] = Some(Gluing { tet: partner, perm });
    table[partner][g.perm.apply(f)] = Some(Gluing { tet: nt, perm: perm.inverse() });
}

pub fn apply_knot_move<T: Real>(state: &State<T>, d: &MoveDescriptor) -> Result<State<T>> {
    let lc = &state.complex;
    let pt = &lc.pt;
    let km = &lc.km;
    match *d {
        MoveDescriptor::KnotOneTwo { tet, z } => {
            let [sb, sd, sa, sa2] = bdaa_slots(lc, tet)?;
            let c = pt.corners(tet);
            let (vb, vd) = (c[sb], c[sd]);
            let (zb, zd) = match (state.realization.placements[vb], state.realization.placements[vd]) {
                (Placement::OnKnot { z: zb, .. }, Placement::OnKnot { z: zd, .. }) => (zb, zd),
                _ => return Err(not_applicable("knot vertices are not placed on the axis")),
            };
            let zc = z.map(T::lit).unwrap_or((zb + zd) * T::lit(0.5));
            let axis = lc.knot_axis(vb);
            let vc = pt.n_vertices();

            let n_old = pt.n_tetrahedra();
            let index: Vec<usize> = (0..n_old).map(|t| if t < tet { t } else if t > tet { t - 1 } else { usize::MAX }).collect();
            let base = n_old - 1;
            let (n1, n2) = (base, base + 1);
            let mut corners: Vec<[VertexId; 4]> = (0..n_old).filter(|&t| t != tet).map(|t| pt.corners(t)).collect();
            let mut labels: Vec<[Word; 4]> = (0..n_old).filter(|&t| t != tet).map(|t| lc.lift.labels(t).clone()).collect();
            let l = lc.lift.labels(tet);
            corners.push([vb, vc, c[sa], c[sa2]]);
            corners.push([vc, vd, c[sa], c[sa2]]);
            labels.push([l[sb].clone(), l[sb].clone(), l[sa].clone(), l[sa2].clone()]);
            labels.push([l[sb].clone(), l[sd].clone(), l[sa].clone(), l[sa2].clone()]);

            let mut table: Vec<[Option<Gluing>; 4]> = vec![[None; 4]; n_old + 1];
            for t in (0..n_old).filter(|&t| t != tet) {
                for f in 0..4 {
                    let g = pt.gluing(t, f);
                    if g.tet != tet {
                        table[index[t]][f] = Some(Gluing { tet: index[g.tet], perm: g.perm });
                    }
                }
            }
            let mut index_ext = index.clone();
            index_ext[tet] = usize::MAX;
            // old face opposite D (B, A, A′) becomes N1's face opposite C
            glue_from_old(pt, &mut table, &index_ext, tet, sd, n1, 1, |i| [sb, usize::MAX, sa, sa2][i]);
            // old face opposite B (D, A, A′) becomes N2's face opposite C
            glue_from_old(pt, &mut table, &index_ext, tet, sb, n2, 0, |i| [usize::MAX, sd, sa, sa2][i]);
            let swap_aa = Perm4([0, 1, 3, 2]);
            for nt in [n1, n2] {
                table[nt][2] = Some(Gluing { tet: nt, perm: swap_aa });
                table[nt][3] = Some(Gluing { tet: nt, perm: swap_aa });
            }
            table[n1][0] = Some(Gluing { tet: n2, perm: Perm4([1, 0, 2, 3]) });
            table[n2][1] = Some(Gluing { tet: n1, perm: Perm4([1, 0, 2, 3]) });

            let mut reps = Vec::new();
            for (k, &(t, [a, b])) in km.representatives().iter().enumerate() {
                let e = km.edges()[k];
                if t == tet || e.edge == pt.edge_of(tet, edge_slot(sb, sd)) {
                    if e.from == vb {
                        reps.push((n1, [0, 1]));
                        reps.push((n2, [0, 1]));
                    } else {
                        reps.push((n2, [1, 0]));
                        reps.push((n1, [1, 0]));
                    }
                } else {
                    reps.push((index[t], [a, b]));
                }
            }
            let mut placements = state.realization.placements.clone();
            placements.push(Placement::OnKnot { axis, z: zc });
            let mut axes = lc.knot_axes.clone();
            axes.push(lc.knot_axes[vb]);
            finish(lc, corners, labels, table, &reps, placements, axes, &[n1, n2], state.realization.seed, Some(zc))
        }
        MoveDescriptor::KnotTwoOne { vertex } => {
            if vertex >= pt.n_vertices() || !km.is_knot_vertex(vertex) {
                return Err(not_applicable("vertex is not on the knot"));
            }
            let occ = pt.vertex_corners(vertex);
            if occ.len() != 2 || occ[0].0 == occ[1].0 {
                return Err(not_applicable("knot vertex does not lie in exactly two tetrahedra"));
            }
            let ki = km.edges().iter().position(|e| e.to == vertex).expect("knot vertex has an incoming edge");
            let n_knot = km.edges().len();
            let (e_in, e_out) = (km.edges()[ki], km.edges()[(ki + 1) % n_knot]);
            if n_knot < 4 {
                return Err(not_applicable("knot would have fewer than three edges"));
            }
            // t1 holds the edge B C, where B is the neighbour with a corner in it
            let mut roles = None;
            for (i, &(t, sc)) in occ.iter().enumerate() {
                let c = pt.corners(t);
                let others: Vec<usize> = (0..4).filter(|&k| k != sc && km.is_knot_vertex(c[k])).collect();
                if others.len() == 1 {
                    let sbk = others[0];
                    let [x, y, sa, sa2] = even_arrangement(sbk, sc);
                    debug_assert_eq!((x, y), (sbk, sc));
                    roles = Some((i, t, sbk, sc, sa, sa2));
                    break;
                }
            }
            let (i1, t1, sb, sc, sa, sa2) = roles.ok_or_else(|| not_applicable("no B C A A tetrahedron at the vertex"))?;
            let (t2, sc2) = occ[1 - i1];
            let c1 = pt.corners(t1);
            if c1[sa] != c1[sa2] {
                return Err(not_applicable("off-knot corners are different vertices"));
            }
            let g12 = pt.gluing(t1, sb);
            if g12.tet != t2 || g12.perm.apply(sc) != sc2 {
                return Err(not_applicable("the two tetrahedra do not share the face C A A"));
            }
            let sd = g12.perm.apply(sb);
            let (ta, ta2) = (g12.perm.apply(sa), g12.perm.apply(sa2));
            for (t, x, y) in [(t1, sa, sa2), (t2, ta, ta2)] {
                let g = pt.gluing(t, x);
                if g.tet != t || g.perm.apply(x) != y {
                    return Err(not_applicable("faces through the knot edge are not glued to each other"));
                }
            }
            let c2 = pt.corners(t2);
            let (vb, vd) = (c1[sb], c2[sd]);
            if !((e_in.from == vb && e_out.to == vd) || (e_in.from == vd && e_out.to == vb)) {
                return Err(not_applicable("tetrahedra do not contain both knot edges at the vertex"));
            }
            // D's label in t1's frame
            let w = face_transition(lc, t1, sb);
            let ld = w.inverse().mul(lc.lift.label(t2, sd));
            let l1 = lc.lift.labels(t1);

            let n_old = pt.n_tetrahedra();
            let index: Vec<usize> = {
                let mut k = 0;
                (0..n_old)
                    .map(|t| {
                        if t == t1 || t == t2 {
                            usize::MAX
                        } else {
                            k += 1;
                            k - 1
                        }
                    })
                    .collect()
            };
            let nm = n_old - 2;
            let renumber = |v: VertexId| if v > vertex { v - 1 } else { v };
            let mut corners: Vec<[VertexId; 4]> = Vec::with_capacity(nm + 1);
            let mut labels: Vec<[Word; 4]> = Vec::with_capacity(nm + 1);
            for t in (0..n_old).filter(|&t| t != t1 && t != t2) {
                corners.push(pt.corners(t).map(renumber));
                labels.push(lc.lift.labels(t).clone());
            }
            corners.push([vb, vd, c1[sa], c1[sa2]].map(renumber));
            labels.push([l1[sb].clone(), ld, l1[sa].clone(), l1[sa2].clone()]);

            let mut table: Vec<[Option<Gluing>; 4]> = vec![[None; 4]; nm + 1];
            for t in (0..n_old).filter(|&t| t != t1 && t != t2) {
                for f in 0..4 {
                    let g = pt.gluing(t, f);
                    if g.tet != t1 && g.tet != t2 {
                        table[index[t]][f] = Some(Gluing { tet: index[g.tet], perm: g.perm });
                    }
                }
            }
            let g1 = pt.gluing(t1, sc);
            let g2 = pt.gluing(t2, sc2);
            if [g1.tet, g2.tet].iter().any(|&t| t == t1 || t == t2) {
                return Err(not_applicable("outer faces are glued inside the pair"));
            }
            glue_from_old(pt, &mut table, &index, t1, sc, nm, 1, |i| [sb, usize::MAX, sa, sa2][i]);
            glue_from_old(pt, &mut table, &index, t2, sc2, nm, 0, |i| [usize::MAX, sd, ta, ta2][i]);
            let swap_aa = Perm4([0, 1, 3, 2]);
            table[nm][2] = Some(Gluing { tet: nm, perm: swap_aa });
            table[nm][3] = Some(Gluing { tet: nm, perm: swap_aa });

            let mut reps = Vec::new();
            for k in 0..n_knot {
                let e = km.edges()[k];
                let (t, pair) = km.representatives()[k];
                if k == ki {
                    reps.push((nm, if e.from == vb { [0, 1] } else { [1, 0] }));
                } else if k == (ki + 1) % n_knot {
                    continue;
                } else if t == t1 || t == t2 {
                    return Err(not_applicable("unrelated knot edge represented in the merged tetrahedra"));
                } else {
                    reps.push((index[t], pair));
                }
            }
            let mut placements = state.realization.placements.clone();
            placements.remove(vertex);
            let mut axes = lc.knot_axes.clone();
            axes.remove(vertex);
            finish(lc, corners, labels, table, &reps, placements, axes, &[nm], state.realization.seed, Some(T::zero()))
        }
        _ => Err(not_applicable("not a knot move")),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "kebab-case")]
pub enum MoveOutcome {
    Applied,
    Skipped { reason: String },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MoveLogEntry {
    #[serde(rename = "move")]
    pub descriptor: Option<MoveDescriptor>,
    #[serde(flatten)]
    pub outcome: MoveOutcome,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MoveLog {
    pub seed: u64,
    pub entries: Vec<MoveLogEntry>,
}

impl MoveLog {
    pub fn applied(&self) -> impl Iterator<Item = &MoveDescriptor> {
        self.entries
            .iter()
            .filter(|e| e.outcome == MoveOutcome::Applied)
            .filter_map(|e| e.descriptor.as_ref())
    }
}

fn random_bulk_descriptor<T: Real, R: Rng>(state: &State<T>, rng: &mut R) -> Option<MoveDescriptor> {
    let pt = &state.complex.pt;
    let km = &state.complex.km;
    let roll: f64 = rng.gen();
    if roll < 0.35 {
        Some(MoveDescriptor::TwoThree { tet: rng.gen_range(0..pt.n_tetrahedra()), face: rng.gen_range(0..4) })
    } else if roll < 0.6 {
        let cands: Vec<EdgeId> = (0..pt.n_edges()).filter(|&e| pt.edge(e).degree() == 3 && !km.is_knot_edge(e)).collect();
        (!cands.is_empty()).then(|| MoveDescriptor::ThreeTwo { edge: cands[rng.gen_range(0..cands.len())] })
    } else if roll < 0.8 {
        let u: [f64; 4] = [rng.gen(), rng.gen(), rng.gen(), rng.gen()];
        let s: f64 = u.iter().sum();
        Some(MoveDescriptor::OneFour { tet: rng.gen_range(0..pt.n_tetrahedra()), weights: Some(u.map(|x| 0.1 + 0.6 * x / s)) })
    } else {
        let cands: Vec<VertexId> = (0..pt.n_vertices())
            .filter(|&v| !km.is_knot_vertex(v) && pt.vertex_corners(v).len() == 4)
            .collect();
        (!cands.is_empty()).then(|| MoveDescriptor::FourOne { vertex: cands[rng.gen_range(0..cands.len())] })
    }
}

fn random_knot_descriptor<T: Real, R: Rng>(state: &State<T>, rng: &mut R, created: &[VertexId]) -> Option<MoveDescriptor> {
    let lc = &state.complex;
    if let Some(&v) = created.last() {
        if rng.gen_bool(0.5) {
            return Some(MoveDescriptor::KnotTwoOne { vertex: v });
        }
    }
    let cands = find_bdaa(lc);
    if cands.is_empty() {
        return None;
    }
    let tet = cands[rng.gen_range(0..cands.len())];
    let s = bdaa_slots(lc, tet).ok()?;
    let c = lc.pt.corners(tet);
    let z = |v: VertexId| match state.realization.placements[v] {
        Placement::OnKnot { z, .. } => z.to_f64_lossy(),
        Placement::OffKnot(_) => 0.0,
    };
    let (zb, zd) = (z(c[s[0]]), z(c[s[1]]));
    let t = rng.gen_range(0.2..0.8);
    Some(MoveDescriptor::KnotOneTwo { tet, z: Some(zb + (zd - zb) * t) })
}

/// Applies `n_bulk` random applicable bulk moves and then up to `n_knot` knot moves,
/// logging every draw. Inapplicable draws are logged as skips.
pub fn random_move_sequence<T: Real>(state: &State<T>, n_bulk: usize, n_knot: usize, seed: u64) -> (State<T>, MoveLog) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut log = MoveLog { seed, entries: Vec::new() };
    let mut cur = state.clone();
    let mut applied = 0;
    let mut attempts = 0;
    while applied < n_bulk && attempts < 50 * n_bulk.max(1) {
        attempts += 1;
        let Some(d) = random_bulk_descriptor(&cur, &mut rng) else {
            continue;
        };
        match apply_bulk_move(&cur, &d) {
            Ok(s) => {
                cur = s;
                applied += 1;
                log.entries.push(MoveLogEntry { descriptor: Some(d), outcome: MoveOutcome::Applied });
            }
            Err(e) => log.entries.push(MoveLogEntry { descriptor: Some(d), outcome: MoveOutcome::Skipped { reason: e.to_string() } }),
        }
    }
    let mut created: Vec<VertexId> = Vec::new();
    for _ in 0..n_knot {
        let Some(d) = random_knot_descriptor(&cur, &mut rng, &created) else {
            log.entries.push(MoveLogEntry {
                descriptor: None,
                outcome: MoveOutcome::Skipped { reason: "no tetrahedron with the B D A A pattern".into() },
            });
            continue;
        };
        match apply_knot_move(&cur, &d) {
            Ok(s) => {
                match d {
                    MoveDescriptor::KnotOneTwo { .. } => created.push(cur.complex.pt.n_vertices()),
                    MoveDescriptor::KnotTwoOne { .. } => {
                        created.pop();
                    }
                    _ => {}
                }
                cur = s;
                log.entries.push(MoveLogEntry { descriptor: Some(d), outcome: MoveOutcome::Applied });
            }
            Err(e) => log.entries.push(MoveLogEntry { descriptor: Some(d), outcome: MoveOutcome::Skipped { reason: e.to_string() } }),
        }
    }
    (cur, log)
}

/// Re-applies the applied moves of a log.
pub fn replay_moves<T: Real>(state: &State<T>, log: &MoveLog) -> Result<State<T>> {
    let mut cur = state.clone();
    for d in log.applied() {
        cur = apply_move(&cur, d)?;
    }
    Ok(cur)
}

#[derive(Clone, Debug, PartialEq)]
pub struct LocalRatioReport<T: Real> {
    /// Torsion of the one-edge complex around `BD`.
    pub tau_before: T,
    /// Torsion of the complex around `BC`, `CD`, `AC` with `dz_C`.
    pub tau_after: T,
    /// `tau_after / tau_before`.
    pub raw_ratio: T,
    /// Ratio of the sign-normalized torsions (one extra off-knot edge: factor −1).
    pub ratio: T,
    /// `6V_CAAB · 6V_DAAC / (2(1 − cos φ) l_AC² 6V_DAAB)`.
    pub closed_form: T,
    pub relative_error: T,
}

fn with_tet(t: usize) -> impl Fn(Error) -> Error {
    move |e| match e {
        Error::DegenerateTetrahedron { volume6, threshold, .. } => Error::DegenerateTetrahedron { tet: Some(t), volume6, threshold },
        e => e,
    }
}

/// Compares the torsion ratio of the local complexes before and after the knot 1→2 move with
/// its closed form.
pub fn local_ratio_check<T: Real>(local: &BdaaLocal<T>) -> Result<LocalRatioReport<T>> {
    let phi = local.rep.phi();
    let one_minus_cos = T::one() - phi.cos();
    if one_minus_cos < T::lit(1e-12) {
        return Err(Error::InvalidArgument("rotation angle too close to 0 mod 2π".into()));
    }
    let axis = local.rep.scalar_axis().unwrap_or_else(Vector3::z);
    let on_axis = |z: T| axis * z;
    let (b, c, d) = (on_axis(local.b), on_axis(local.c), on_axis(local.d));
    let a1 = local.a;
    let a2 = local.rep.rotation(&Word::generator(0)) * a1;
    let vol6 = |p: &Point3<T>, q: &Point3<T>, r: &Point3<T>, s: &Point3<T>| TetGeometry::new([*p, *q, *r, *s]).volume() * T::lit(6.0);

    // before: tetrahedron [B, D, A1, A2], only l_BD varies
    let t0 = TetGeometry::new([b, d, a1, a2]);
    let s0 = t0.checked_volume6(None).map_err(with_tet(0))?.signum();
    let j0 = dtheta_dlength(&t0, None).map_err(with_tet(0))?;
    let bd = edge_slot(0, 1);
    let dw = DMatrix::from_element(1, 1, -s0 * j0[(bd, bd)]);
    let tau_before = torsion_of_acyclic_complex(&[DMatrix::zeros(1, 0), dw, DMatrix::zeros(0, 1)], 1, PivotRule::LargestPivot)?.value;

    // after: [B, C, A1, A2] and [C, D, A1, A2]; edge classes BC, CD, AC
    let tets = [TetGeometry::new([b, c, a1, a2]), TetGeometry::new([c, d, a1, a2])];
    let class_of = |tet: usize, slot: usize| -> Option<usize> {
        let (i, j) = EDGE_SLOTS[slot];
        match (tet, i, j) {
            (0, 0, 1) => Some(0),
            (1, 0, 1) => Some(1),
            (0, 1, 2) | (0, 1, 3) | (1, 0, 2) | (1, 0, 3) => Some(2),
            _ => None,
        }
    };
    let mut jac = DMatrix::zeros(3, 3);
    for (k, t) in tets.iter().enumerate() {
        let s = t.checked_volume6(None).map_err(with_tet(k + 1))?.signum();
        let m = dtheta_dlength(t, None).map_err(with_tet(k + 1))?;
        for p in 0..6 {
            for q in 0..6 {
                if let (Some(x), Some(y)) = (class_of(k, p), class_of(k, q)) {
                    jac[(x, y)] -= s * m[(p, q)];
                }
            }
        }
    }
    let l_ac = (c - a1).norm();
    let g = DMatrix::from_column_slice(
        3,
        1,
        &[(local.c - local.b).signum(), (local.c - local.d).signum(), (c - a1).dot(&axis) / l_ac],
    );
    let tau_after = torsion_of_acyclic_complex(&[g.clone(), jac, g.transpose()], 1, PivotRule::LargestPivot)?.value;

    let raw_ratio = tau_after / tau_before;
    let ratio = -raw_ratio;
    let closed_form = vol6(&c, &a1, &a2, &b) * vol6(&d, &a1, &a2, &c) / (T::lit(2.0) * one_minus_cos * l_ac * l_ac * vol6(&d, &a1, &a2, &b));
    let relative_error = ((ratio - closed_form) / closed_form).abs();
    Ok(LocalRatioReport { tau_before, tau_after, raw_ratio, ratio, closed_form, relative_error })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn arrangements_are_even() {
        for a in 0..4 {
            for b in (0..4).filter(|&b| b != a) {
                let arr = even_arrangement(a, b);
                assert_eq!((arr[0], arr[1]), (a, b));
                assert!(!Perm4(arr.map(|k| k as u8)).is_odd());
            }
            let arr = even_arrangement_from(a);
            assert_eq!(arr[0], a);
        }
    }
}

//! Combinatorial model of a closed oriented pseudotriangulation with a marked knot.
//!
//! Tetrahedra are stored as ordered corner 4-tuples; the order fixes the orientation up to
//! even permutations. Faces are numbered by the corner they omit. A gluing of face `f` of
//! tetrahedron `t` is a permutation of the corner slots `{0,1,2,3}` sending `f` to the partner
//! face and the other three corners to the partner's corners; the complex is consistently
//! oriented iff every gluing permutation is odd.
//!
//! Edges and vertices are *derived*: they are the classes of corner slots and edge slots
//! under the gluings, so a single tetrahedron may contain the same edge or vertex more than
//! once.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::euclid::{edge_slot, EDGE_SLOTS};
use crate::lift::{meridian_winding, LiftAssignment};

pub type TetId = usize;
pub type VertexId = usize;
pub type EdgeId = usize;

/// A permutation of the four corner slots, stored as its image table.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Perm4(pub [u8; 4]);

impl Perm4 {
    pub const IDENTITY: Perm4 = Perm4([0, 1, 2, 3]);

    pub fn new(images: [u8; 4]) -> Option<Self> {
        let mut seen = [false; 4];
        for &i in &images {
            if i > 3 || seen[i as usize] {
                return None;
            }
            seen[i as usize] = true;
        }
        Some(Perm4(images))
    }

    /// Permutation sending `face → partner_face` and the face corners, in increasing slot
    /// order, to `corners`.
    pub fn from_face_map(face: usize, partner_face: usize, corners: [usize; 3]) -> Option<Self> {
        if face > 3 || partner_face > 3 {
            return None;
        }
        let mut img = [0u8; 4];
        img[face] = partner_face as u8;
        let mut it = corners.iter();
        for (k, slot) in img.iter_mut().enumerate() {
            if k != face {
                *slot = *it.next()? as u8;
            }
        }
        Perm4::new(img)
    }

    #[inline]
    pub fn apply(&self, i: usize) -> usize {
        self.0[i] as usize
    }

    pub fn inverse(&self) -> Self {
        let mut inv = [0u8; 4];
        for (i, &j) in self.0.iter().enumerate() {
            inv[j as usize] = i as u8;
        }
        Perm4(inv)
    }

    /// `self ∘ other`: apply `other` first.
    pub fn compose(&self, other: &Perm4) -> Self {
        Perm4(other.0.map(|j| self.0[j as usize]))
    }

    pub fn is_odd(&self) -> bool {
        let mut inversions = 0;
        for i in 0..4 {
            for j in i + 1..4 {
                if self.0[i] > self.0[j] {
                    inversions += 1;
                }
            }
        }
        inversions % 2 == 1
    }

    /// Images of the three corners of face `face`, in increasing slot order.
    pub fn face_corners(&self, face: usize) -> [usize; 3] {
        let mut out = [0; 3];
        let mut n = 0;
        for k in 0..4 {
            if k != face {
                out[n] = self.apply(k);
                n += 1;
            }
        }
        out
    }
}

/// Partner of one face: face `perm(f)` of tetrahedron `tet`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Gluing {
    pub tet: TetId,
    pub perm: Perm4,
}

/// One gluing record as it appears in input files; each face appears in exactly one record.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawGluing {
    pub tet: TetId,
    pub face: usize,
    pub partner: TetId,
    pub partner_face: usize,
    /// Partner corner slots receiving the face corners (in increasing slot order).
    pub corners: [usize; 3],
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EdgeMember {
    pub tet: TetId,
    pub slot: usize,
    /// The member's lower corner sits at the class's second end.
    pub reversed: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EdgeClass {
    pub members: Vec<EdgeMember>,
    /// Vertices at the two ends, oriented like the first member.
    pub ends: [VertexId; 2],
}

impl EdgeClass {
    pub fn is_loop(&self) -> bool {
        self.ends[0] == self.ends[1]
    }

    pub fn degree(&self) -> usize {
        self.members.len()
    }
}

/// A closed, consistently oriented pseudotriangulation with derived edge and vertex classes.
#[derive(Clone, Debug)]
pub struct Pseudotriangulation {
    corners: Vec<[VertexId; 4]>,
    gluings: Vec<[Gluing; 4]>,
    n_vertices: usize,
    edges: Vec<EdgeClass>,
    edge_of: Vec<[EdgeId; 6]>,
}

struct UnionFind {
    parent: Vec<usize>,
    parity: Vec<bool>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        Self { parent: (0..n).collect(), parity: vec![false; n] }
    }

    fn find(&mut self, x: usize) -> (usize, bool) {
        let p = self.parent[x];
        if p == x {
            return (x, false);
        }
        let (root, par) = self.find(p);
        self.parent[x] = root;
        self.parity[x] ^= par;
        (root, self.parity[x])
    }

    /// Merges with `x ≡ y ⊕ flip`; returns false on a parity contradiction.
    fn union(&mut self, x: usize, y: usize, flip: bool) -> bool {
        let (rx, px) = self.find(x);
        let (ry, py) = self.find(y);
        if rx == ry {
            return px ^ py == flip;
        }
        let (lo, hi) = if rx < ry { (rx, ry) } else { (ry, rx) };
        self.parent[hi] = lo;
        self.parity[hi] = px ^ py ^ flip;
        true
    }
}

impl Pseudotriangulation {
    /// Builds from raw corner vertex labels and one record per glued face pair.
    pub fn from_gluing_data(corners: Vec<[VertexId; 4]>, records: &[RawGluing]) -> Result<Self> {
        let n = corners.len();
        let mut table: Vec<[Option<Gluing>; 4]> = vec![[None; 4]; n];
        for r in records {
            let bad = |reason: &str| Error::InvalidGluing { tet: r.tet, face: r.face, reason: reason.into() };
            if r.tet >= n || r.partner >= n {
                return Err(bad("tetrahedron index out of range"));
            }
            let perm = Perm4::from_face_map(r.face, r.partner_face, r.corners)
                .ok_or_else(|| bad("corner map is not a bijection onto the partner face"))?;
            if r.tet == r.partner && r.face == r.partner_face {
                return Err(Error::NonInvolutiveGluing { tet: r.tet, face: r.face });
            }
            for (t, f, g) in [
                (r.tet, r.face, Gluing { tet: r.partner, perm }),
                (r.partner, r.partner_face, Gluing { tet: r.tet, perm: perm.inverse() }),
            ] {
                if table[t][f].is_some() {
                    return Err(Error::NonInvolutiveGluing { tet: t, face: f });
                }
                table[t][f] = Some(g);
            }
        }
        Self::from_table(corners, table)
    }

    /// Builds from a full face-pairing table (both directions present).
    pub fn from_table(corners: Vec<[VertexId; 4]>, table: Vec<[Option<Gluing>; 4]>) -> Result<Self> {
        let n = corners.len();
        if n == 0 {
            return Err(Error::Malformed("no tetrahedra".into()));
        }
        if table.len() != n {
            return Err(Error::Malformed("gluing table length differs from tetrahedron count".into()));
        }
        let mut gluings = Vec::with_capacity(n);
        for (t, row) in table.iter().enumerate() {
            let mut out = [Gluing { tet: 0, perm: Perm4::IDENTITY }; 4];
            for f in 0..4 {
                let g = row[f].ok_or(Error::UngluedFace { tet: t, face: f })?;
                if g.tet >= n {
                    return Err(Error::InvalidGluing { tet: t, face: f, reason: "partner out of range".into() });
                }
                let back = table[g.tet][g.perm.apply(f)].ok_or(Error::UngluedFace { tet: g.tet, face: g.perm.apply(f) })?;
                if back.tet != t || back.perm != g.perm.inverse() || (g.tet == t && g.perm.apply(f) == f) {
                    return Err(Error::NonInvolutiveGluing { tet: t, face: f });
                }
                if !g.perm.is_odd() {
                    return Err(Error::OrientationInconsistent { tet: t, face: f });
                }
                out[f] = g;
            }
            gluings.push(out);
        }

        // vertex classes
        let mut vuf = UnionFind::new(4 * n);
        for (t, row) in gluings.iter().enumerate() {
            for (f, g) in row.iter().enumerate() {
                for k in (0..4).filter(|&k| k != f) {
                    vuf.union(4 * t + k, 4 * g.tet + g.perm.apply(k), false);
                }
            }
        }
        let mut class_vertex: std::collections::HashMap<usize, (VertexId, usize)> = Default::default();
        for t in 0..n {
            for k in 0..4 {
                let root = vuf.find(4 * t + k).0;
                let v = corners[t][k];
                match class_vertex.get(&root) {
                    Some(&(expected, _)) if expected != v => {
                        return Err(Error::VertexMismatch { tet: t, corner: k, expected, found: v });
                    }
                    Some(_) => {}
                    None => {
                        class_vertex.insert(root, (v, 4 * t + k));
                    }
                }
            }
        }
        let n_vertices = class_vertex.len();
        let mut used = vec![false; n_vertices];
        for &(v, _) in class_vertex.values() {
            if v >= n_vertices || used[v] {
                return Err(Error::Malformed(format!(
                    "vertex labels must be 0..{n_vertices} with one label per vertex class (label {v})"
                )));
            }
            used[v] = true;
        }

        // edge classes, with orientation parity
        let mut euf = UnionFind::new(6 * n);
        for (t, row) in gluings.iter().enumerate() {
            for (f, g) in row.iter().enumerate() {
                for (e, &(a, b)) in EDGE_SLOTS.iter().enumerate() {
                    if a == f || b == f {
                        continue;
                    }
                    let (pa, pb) = (g.perm.apply(a), g.perm.apply(b));
                    if !euf.union(6 * t + e, 6 * g.tet + edge_slot(pa, pb), pa > pb) {
                        return Err(Error::EdgeSelfReversed { tet: t, edge: e });
                    }
                }
            }
        }
        let mut root_to_edge: std::collections::HashMap<usize, EdgeId> = Default::default();
        let mut edges: Vec<EdgeClass> = Vec::new();
        let mut edge_of = vec![[0usize; 6]; n];
        for t in 0..n {
            for e in 0..6 {
                let (root, parity) = euf.find(6 * t + e);
                let root_parity = euf.find(root).1;
                let id = *root_to_edge.entry(root).or_insert_with(|| {
                    edges.push(EdgeClass { members: Vec::new(), ends: [0, 0] });
                    edges.len() - 1
                });
                let class = &mut edges[id];
                let member_parity = parity ^ root_parity;
                if class.members.is_empty() {
                    let (a, b) = EDGE_SLOTS[e];
                    class.ends = [corners[t][a], corners[t][b]];
                }
                class.members.push(EdgeMember { tet: t, slot: e, reversed: member_parity });
                edge_of[t][e] = id;
            }
        }
        // normalise so the first member is never reversed
        for class in edges.iter_mut() {
            if class.members[0].reversed {
                for m in class.members.iter_mut() {
                    m.reversed = !m.reversed;
                }
            }
        }

        let pt = Self { corners, gluings, n_vertices, edges, edge_of };
        let chi = pt.euler_characteristic();
        if chi != 0 {
            return Err(Error::EulerCharacteristic { chi });
        }
        Ok(pt)
    }

    pub fn n_vertices(&self) -> usize {
        self.n_vertices
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    /// Each face is glued to exactly one other, so triangles are face pairs.
    pub fn n_triangles(&self) -> usize {
        2 * self.corners.len()
    }

    pub fn n_tetrahedra(&self) -> usize {
        self.corners.len()
    }

    /// `[N₀, N₁, N₂, N₃]`.
    pub fn counts(&self) -> [usize; 4] {
        [self.n_vertices(), self.n_edges(), self.n_triangles(), self.n_tetrahedra()]
    }

    pub fn euler_characteristic(&self) -> i64 {
        let [a, b, c, d] = self.counts().map(|x| x as i64);
        a - b + c - d
    }

    pub fn corners(&self, tet: TetId) -> [VertexId; 4] {
        self.corners[tet]
    }

    pub fn all_corners(&self) -> &[[VertexId; 4]] {
        &self.corners
    }

    pub fn gluing(&self, tet: TetId, face: usize) -> Gluing {
        self.gluings[tet][face]
    }

    pub fn edges(&self) -> &[EdgeClass] {
        &self.edges
    }

    pub fn edge(&self, id: EdgeId) -> &EdgeClass {
        &self.edges[id]
    }

    pub fn edge_of(&self, tet: TetId, slot: usize) -> EdgeId {
        self.edge_of[tet][slot]
    }

    pub fn tet_edges(&self, tet: TetId) -> [EdgeId; 6] {
        self.edge_of[tet]
    }

    /// Representative face (tetrahedron, face) for every triangle class.
    pub fn triangles(&self) -> Vec<(TetId, usize)> {
        let mut out = Vec::new();
        for (t, row) in self.gluings.iter().enumerate() {
            for (f, g) in row.iter().enumerate() {
                if (t, f) <= (g.tet, g.perm.apply(f)) {
                    out.push((t, f));
                }
            }
        }
        out
    }

    /// Corner occurrences `(tet, corner)` of a vertex.
    pub fn vertex_corners(&self, v: VertexId) -> Vec<(TetId, usize)> {
        let mut out = Vec::new();
        for (t, c) in self.corners.iter().enumerate() {
            for (k, &w) in c.iter().enumerate() {
                if w == v {
                    out.push((t, k));
                }
            }
        }
        out
    }

    /// Emits one record per glued face pair (lower `(tet, face)` first).
    pub fn raw_gluings(&self) -> Vec<RawGluing> {
        let mut out = Vec::new();
        for (t, row) in self.gluings.iter().enumerate() {
            for (f, g) in row.iter().enumerate() {
                let pf = g.perm.apply(f);
                if (t, f) < (g.tet, pf) {
                    out.push(RawGluing { tet: t, face: f, partner: g.tet, partner_face: pf, corners: g.perm.face_corners(f) });
                }
            }
        }
        out
    }

    /// Raw gluing table (both directions), as accepted by [`Self::from_table`].
    pub fn gluing_table(&self) -> Vec<[Option<Gluing>; 4]> {
        self.gluings.iter().map(|row| row.map(Some)).collect()
    }
}

/// A combinatorial isomorphism `a → b`: for each tetrahedron of `a` its image and the corner
/// map. Vertex labels are matched up to a bijection.
pub fn find_isomorphism(a: &Pseudotriangulation, b: &Pseudotriangulation) -> Option<Vec<Gluing>> {
    let n = a.n_tetrahedra();
    if a.counts() != b.counts() {
        return None;
    }
    if n == 0 {
        return Some(Vec::new());
    }
    let mut perms = Vec::with_capacity(24);
    for x in 0..4u8 {
        for y in (0..4u8).filter(|&y| y != x) {
            for z in (0..4u8).filter(|&z| z != x && z != y) {
                perms.push(Perm4([x, y, z, 6 - x - y - z]));
            }
        }
    }
    for t0 in 0..n {
        for &p0 in &perms {
            if let Some(map) = extend_isomorphism(a, b, t0, p0) {
                return Some(map);
            }
        }
    }
    None
}

fn extend_isomorphism(a: &Pseudotriangulation, b: &Pseudotriangulation, t0: TetId, p0: Perm4) -> Option<Vec<Gluing>> {
    let n = a.n_tetrahedra();
    let mut map: Vec<Option<Gluing>> = vec![None; n];
    let mut used = vec![false; n];
    map[0] = Some(Gluing { tet: t0, perm: p0 });
    used[t0] = true;
    let mut stack = vec![0];
    while let Some(t) = stack.pop() {
        let m = map[t]?;
        for f in 0..4 {
            let ga = a.gluing(t, f);
            let gb = b.gluing(m.tet, m.perm.apply(f));
            // corner σ(k) of the neighbour goes to σ′(π(k))
            let implied = gb.perm.compose(&m.perm).compose(&ga.perm.inverse());
            match map[ga.tet] {
                Some(g) if g.tet != gb.tet || g.perm != implied => return None,
                Some(_) => {}
                None => {
                    if used[gb.tet] {
                        return None;
                    }
                    used[gb.tet] = true;
                    map[ga.tet] = Some(Gluing { tet: gb.tet, perm: implied });
                    stack.push(ga.tet);
                }
            }
        }
    }
    let map: Vec<Gluing> = map.into_iter().collect::<Option<_>>()?;
    let mut vmap: Vec<Option<VertexId>> = vec![None; a.n_vertices()];
    let mut vused = vec![false; b.n_vertices()];
    for (t, g) in map.iter().enumerate() {
        for k in 0..4 {
            let (va, vb) = (a.corners(t)[k], b.corners(g.tet)[g.perm.apply(k)]);
            match vmap[va] {
                Some(w) if w != vb => return None,
                Some(_) => {}
                None => {
                    if vused[vb] {
                        return None;
                    }
                    vused[vb] = true;
                    vmap[va] = Some(vb);
                }
            }
        }
    }
    Some(map)
}

/// An oriented edge of the knot, traversed `from → to`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct KnotEdge {
    pub edge: EdgeId,
    pub from: VertexId,
    pub to: VertexId,
}

/// The knot as an oriented cycle of edge classes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KnotMarking {
    edges: Vec<KnotEdge>,
    on_knot: Vec<bool>,
    representatives: Vec<(TetId, [usize; 2])>,
}

impl KnotMarking {
    /// Each representative is an ordered corner pair of one tetrahedron; the order gives the
    /// direction of traversal.
    pub fn from_representatives(pt: &Pseudotriangulation, reps: &[(TetId, [usize; 2])]) -> Result<Self> {
        let bad = |reason: String| Error::KnotNotACycle { reason };
        if reps.is_empty() {
            return Err(bad("no knot edges".into()));
        }
        let mut edges = Vec::with_capacity(reps.len());
        for &(t, [a, b]) in reps {
            if t >= pt.n_tetrahedra() || a > 3 || b > 3 || a == b {
                return Err(bad(format!("invalid representative ({t}, [{a}, {b}])")));
            }
            let c = pt.corners(t);
            edges.push(KnotEdge { edge: pt.edge_of(t, edge_slot(a, b)), from: c[a], to: c[b] });
        }
        let mut seen_edges = BTreeSet::new();
        let mut seen_vertices = BTreeSet::new();
        for (i, e) in edges.iter().enumerate() {
            if e.from == e.to {
                return Err(bad(format!("knot edge {} is a loop", e.edge)));
            }
            if !seen_edges.insert(e.edge) {
                return Err(bad(format!("edge {} listed twice", e.edge)));
            }
            if !seen_vertices.insert(e.from) {
                return Err(bad(format!("vertex {} visited twice", e.from)));
            }
            let next = &edges[(i + 1) % edges.len()];
            if e.to != next.from {
                return Err(bad(format!("edge {} ends at vertex {} but the next edge starts at {}", e.edge, e.to, next.from)));
            }
        }
        let mut on_knot = vec![false; pt.n_vertices()];
        for e in &edges {
            on_knot[e.from] = true;
        }
        Ok(Self { edges, on_knot, representatives: reps.to_vec() })
    }

    pub fn edges(&self) -> &[KnotEdge] {
        &self.edges
    }

    pub fn representatives(&self) -> &[(TetId, [usize; 2])] {
        &self.representatives
    }

    pub fn is_knot_edge(&self, e: EdgeId) -> bool {
        self.edges.iter().any(|k| k.edge == e)
    }

    pub fn knot_edge(&self, e: EdgeId) -> Option<&KnotEdge> {
        self.edges.iter().find(|k| k.edge == e)
    }

    pub fn is_knot_vertex(&self, v: VertexId) -> bool {
        self.on_knot.get(v).copied().unwrap_or(false)
    }

    pub fn knot_vertex_mask(&self) -> &[bool] {
        &self.on_knot
    }

    /// `N₀^knot`.
    pub fn n_knot_vertices(&self) -> usize {
        self.edges.len()
    }

    pub fn knot_corner_count(&self, pt: &Pseudotriangulation, tet: TetId) -> usize {
        pt.corners(tet).iter().filter(|&&v| self.is_knot_vertex(v)).count()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConditionCheck {
    pub passed: bool,
    pub failures: Vec<String>,
}

impl ConditionCheck {
    fn from_failures(failures: Vec<String>) -> Self {
        Self { passed: failures.is_empty(), failures }
    }
}

/// Pass/fail per knot condition: (a) knot on edges, (b) at most two knot corners per
/// tetrahedron, (c) every loop edge winds exactly once around the knot.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KnotConditionReport {
    pub on_edges: ConditionCheck,
    pub two_knot_corners: ConditionCheck,
    pub loops_wind_once: ConditionCheck,
}

impl KnotConditionReport {
    pub fn all_passed(&self) -> bool {
        self.on_edges.passed && self.two_knot_corners.passed && self.loops_wind_once.passed
    }
}

pub fn validate_knot_conditions(pt: &Pseudotriangulation, km: &KnotMarking, lift: &LiftAssignment) -> KnotConditionReport {
    let mut a = Vec::new();
    if km.edges().is_empty() {
        a.push("knot has no edges".to_string());
    }
    for k in km.edges() {
        if k.edge >= pt.n_edges() {
            a.push(format!("knot edge {} is not an edge of the complex", k.edge));
        }
    }
    let mut b = Vec::new();
    for t in 0..pt.n_tetrahedra() {
        let n = km.knot_corner_count(pt, t);
        if n > 2 {
            b.push(format!("tetrahedron {t} has {n} corners on the knot"));
        }
    }
    let mut c = Vec::new();
    for (id, class) in pt.edges().iter().enumerate() {
        if !class.is_loop() {
            continue;
        }
        match meridian_winding(pt, lift, id) {
            Ok(h) if h.winding.abs() == 1 => {}
            Ok(h) => c.push(format!("loop edge {id} winds {} times", h.winding)),
            Err(e) => c.push(format!("loop edge {id}: {e}")),
        }
    }
    KnotConditionReport {
        on_edges: ConditionCheck::from_failures(a),
        two_knot_corners: ConditionCheck::from_failures(b),
        loops_wind_once: ConditionCheck::from_failures(c),
    }
}

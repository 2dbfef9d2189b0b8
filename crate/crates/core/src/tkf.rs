//! The `tkf-1` file format: a JSON document holding the pseudotriangulation, the deck labels,
//! the representation, the knot and optionally one realization.
//!
//! ```json
//! {
//!   "format": "tkf-1",
//!   "representation": { "kind": "scalar", "phi": 3.14159265358979 },
//!   "vertices": [ { "id": 0, "on_knot": true }, { "id": 3, "on_knot": false } ],
//!   "tetrahedra": [ { "id": 0, "corners": [ { "vertex": 0, "deck": "" }, { "vertex": 3, "deck": "m" } ] } ],
//!   "gluings": [ { "tet": 0, "face": 2, "partner": 1, "partner_face": 3, "corners": [0, 1, 2] } ],
//!   "knot_edges": [ { "tet": 0, "corner_pair": [0, 1] } ]
//! }
//! ```
//!
//! Explicit representations list generators by name,
//! `{"kind": "explicit", "generators": {"a": {"axis": [0, 0, 1], "angle": 1.0}}}`; generator
//! order is the order of the names.

use std::collections::BTreeMap;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lift::{Generator, LiftAssignment, LiftedComplex, Placement, Realization, Representation, Word};
use crate::pseudotriangulation::{KnotMarking, Pseudotriangulation, RawGluing};
use crate::scalar::Real;

pub const FORMAT_TAG: &str = "tkf-1";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AxisAngle {
    pub axis: [f64; 3],
    pub angle: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum RepresentationSpec {
    Scalar { phi: f64 },
    Explicit { generators: BTreeMap<String, AxisAngle> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VertexRecord {
    pub id: usize,
    pub on_knot: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub axis: Option<[f64; 3]>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CornerRecord {
    pub vertex: usize,
    #[serde(default)]
    pub deck: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TetRecord {
    pub id: usize,
    pub corners: [CornerRecord; 4],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KnotEdgeRecord {
    pub tet: usize,
    pub corner_pair: [usize; 2],
}

/// Base position of one vertex: a point, or the axis coordinate of a knot vertex.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PlacementRecord {
    Point { point: [f64; 3] },
    Axis { z: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RealizationRecord {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// One entry per vertex, in id order.
    pub placements: Vec<PlacementRecord>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TkfDocument {
    pub format: String,
    pub representation: RepresentationSpec,
    pub vertices: Vec<VertexRecord>,
    pub tetrahedra: Vec<TetRecord>,
    pub gluings: Vec<RawGluing>,
    pub knot_edges: Vec<KnotEdgeRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub realization: Option<RealizationRecord>,
}

fn format_err(field: impl Into<String>, reason: impl Into<String>) -> Error {
    Error::Format { field: field.into(), reason: reason.into() }
}

fn vec3<T: Real>(a: [f64; 3]) -> Vector3<T> {
    Vector3::new(T::lit(a[0]), T::lit(a[1]), T::lit(a[2]))
}

fn arr3<T: Real>(v: &Vector3<T>) -> [f64; 3] {
    [v.x.to_f64_lossy(), v.y.to_f64_lossy(), v.z.to_f64_lossy()]
}

pub fn to_document<T: Real>(lc: &LiftedComplex<T>, real: Option<&Realization<T>>) -> TkfDocument {
    let rep = &lc.rep;
    let representation = if rep.is_scalar_form() {
        RepresentationSpec::Scalar { phi: rep.phi().to_f64_lossy() }
    } else {
        RepresentationSpec::Explicit {
            generators: rep
                .generators()
                .iter()
                .map(|g| (g.name.clone(), AxisAngle { axis: arr3(&g.axis), angle: g.angle.to_f64_lossy() }))
                .collect(),
        }
    };
    let vertices = (0..lc.pt.n_vertices())
        .map(|v| VertexRecord { id: v, on_knot: lc.km.is_knot_vertex(v), axis: lc.knot_axes[v].as_ref().map(arr3) })
        .collect();
    let tetrahedra = (0..lc.pt.n_tetrahedra())
        .map(|t| {
            let c = lc.pt.corners(t);
            TetRecord {
                id: t,
                corners: [0, 1, 2, 3].map(|k| CornerRecord { vertex: c[k], deck: rep.format_word(lc.lift.label(t, k)) }),
            }
        })
        .collect();
    let knot_edges = lc
        .km
        .representatives()
        .iter()
        .map(|&(tet, corner_pair)| KnotEdgeRecord { tet, corner_pair })
        .collect();
    let realization = real.map(|r| RealizationRecord {
        seed: r.seed,
        placements: r
            .placements
            .iter()
            .map(|p| match p {
                Placement::OffKnot(x) => PlacementRecord::Point { point: arr3(x) },
                Placement::OnKnot { z, .. } => PlacementRecord::Axis { z: z.to_f64_lossy() },
            })
            .collect(),
    });
    TkfDocument {
        format: FORMAT_TAG.into(),
        representation,
        vertices,
        tetrahedra,
        gluings: lc.pt.raw_gluings(),
        knot_edges,
        realization,
    }
}

pub fn from_document<T: Real>(doc: &TkfDocument) -> Result<(LiftedComplex<T>, Option<Realization<T>>)> {
    if doc.format != FORMAT_TAG {
        return Err(format_err("format", format!("expected `{FORMAT_TAG}`, found `{}`", doc.format)));
    }
    let rep = match &doc.representation {
        RepresentationSpec::Scalar { phi } => Representation::scalar(T::lit(*phi))?,
        RepresentationSpec::Explicit { generators } => Representation::explicit(
            generators
                .iter()
                .map(|(name, g)| Generator { name: name.clone(), axis: vec3(g.axis), angle: T::lit(g.angle) })
                .collect(),
        )?,
    };
    let n0 = doc.vertices.len();
    for (i, v) in doc.vertices.iter().enumerate() {
        if v.id != i {
            return Err(format_err(format!("vertices[{i}].id"), format!("expected {i}, found {}", v.id)));
        }
    }
    let mut corners = Vec::with_capacity(doc.tetrahedra.len());
    let mut labels = Vec::with_capacity(doc.tetrahedra.len());
    for (i, t) in doc.tetrahedra.iter().enumerate() {
        if t.id != i {
            return Err(format_err(format!("tetrahedra[{i}].id"), format!("expected {i}, found {}", t.id)));
        }
        let mut c = [0usize; 4];
        let mut l: [Word; 4] = Default::default();
        for k in 0..4 {
            let cr = &t.corners[k];
            if cr.vertex >= n0 {
                return Err(format_err(format!("tetrahedra[{i}].corners[{k}].vertex"), format!("no vertex {}", cr.vertex)));
            }
            c[k] = cr.vertex;
            l[k] = rep.parse_word(&cr.deck).map_err(|e| format_err(format!("tetrahedra[{i}].corners[{k}].deck"), e.to_string()))?;
        }
        corners.push(c);
        labels.push(l);
    }
    let pt = Pseudotriangulation::from_gluing_data(corners, &doc.gluings)?;
    if pt.n_vertices() != n0 {
        return Err(format_err("vertices", format!("{n0} listed, {} used by the gluing", pt.n_vertices())));
    }
    let reps: Vec<_> = doc.knot_edges.iter().map(|k| (k.tet, k.corner_pair)).collect();
    let km = KnotMarking::from_representatives(&pt, &reps)?;
    for v in &doc.vertices {
        if v.on_knot != km.is_knot_vertex(v.id) {
            return Err(format_err(
                format!("vertices[{}].on_knot", v.id),
                format!("flag is {} but the knot edges say {}", v.on_knot, km.is_knot_vertex(v.id)),
            ));
        }
        if v.axis.is_some() && !v.on_knot {
            return Err(format_err(format!("vertices[{}].axis", v.id), "axis given for an off-knot vertex"));
        }
    }
    let axes = doc.vertices.iter().map(|v| v.axis.map(vec3)).collect();
    let lc = LiftedComplex::with_axes(pt, km, rep, LiftAssignment::new(labels), axes)?;

    let real = match &doc.realization {
        None => None,
        Some(r) => {
            if r.placements.len() != n0 {
                return Err(format_err("realization.placements", format!("{} entries for {n0} vertices", r.placements.len())));
            }
            let mut placements = Vec::with_capacity(n0);
            for (v, p) in r.placements.iter().enumerate() {
                let pl = match (p, lc.km.is_knot_vertex(v)) {
                    (PlacementRecord::Point { point }, false) => Placement::OffKnot(vec3(*point)),
                    (PlacementRecord::Axis { z }, true) => Placement::OnKnot { axis: lc.knot_axis(v), z: T::lit(*z) },
                    (_, on) => {
                        return Err(format_err(
                            format!("realization.placements[{v}]"),
                            if on { "knot vertex needs `z`" } else { "off-knot vertex needs `point`" },
                        ))
                    }
                };
                placements.push(pl);
            }
            Some(Realization { placements, seed: r.seed })
        }
    };
    Ok((lc, real))
}

pub fn parse_tkf<T: Real>(text: &str) -> Result<(LiftedComplex<T>, Option<Realization<T>>)> {
    let doc: TkfDocument = serde_json::from_str(text)?;
    from_document(&doc)
}

pub fn write_tkf<T: Real>(lc: &LiftedComplex<T>, real: Option<&Realization<T>>) -> String {
    let mut s = serde_json::to_string_pretty(&to_document(lc, real)).expect("document serializes");
    s.push('\n');
    s
}

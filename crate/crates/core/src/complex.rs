//! The acyclic complex of geometric differentials
//!
//! ```text
//! 0 → 𝔞 --A3--> dx --A2--> dl --A1--> dω --A2ᵀ--> dx* --A3ᵀ--> 𝔞* → 0
//! ```
//!
//! `A3` spans the global symmetries (translation along and rotation about the common axis
//! of a scalar representation), `A2 = ∂l/∂x` and `A1 = ∂ω/∂l`.

use nalgebra::{DMatrix, Vector3};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::euclid::{dlength_dpoints, dtheta_dlength, EDGE_SLOTS};
use crate::lift::{tet_geometry, Coordinate, LiftedComplex, Placement, Realization};
use crate::pseudotriangulation::EdgeId;
use crate::scalar::Real;

#[derive(Clone, Debug)]
pub struct ComplexMatrices<T: Real> {
    /// `n_x × n_a`.
    pub a3: DMatrix<T>,
    /// `N₁ × n_x`.
    pub a2: DMatrix<T>,
    /// `N₁ × N₁`.
    pub a1: DMatrix<T>,
    /// Meaning of each coordinate row of `A2ᵀ` / column of `A2`.
    pub coordinates: Vec<Coordinate>,
    /// Edge classes indexing the rows of `A2`, in id order.
    pub edges: Vec<EdgeId>,
    pub knot_edge: Vec<bool>,
    pub lengths: Vec<T>,
    /// Signed `6V` per tetrahedron.
    pub volumes6: Vec<T>,
}

impl<T: Real> ComplexMatrices<T> {
    pub fn n_a(&self) -> usize {
        self.a3.ncols()
    }

    pub fn n_x(&self) -> usize {
        self.a2.ncols()
    }

    pub fn n_edges(&self) -> usize {
        self.a2.nrows()
    }

    /// Expected ranks `(n_a, n_x − n_a, N₁ − n_x + n_a)` of `(A3, A2, A1)`.
    pub fn expected_ranks(&self) -> [usize; 3] {
        let (na, nx, n1) = (self.n_a(), self.n_x(), self.n_edges());
        [na, nx.saturating_sub(na), (n1 + na).saturating_sub(nx)]
    }

    /// Maps of the full six-term complex, starting at `𝔞` in degree 0.
    pub fn full_complex(&self) -> Vec<DMatrix<T>> {
        vec![self.a3.clone(), self.a2.clone(), self.a1.clone(), self.a2.transpose(), self.a3.transpose()]
    }

    pub fn n_off_knot_edges(&self) -> usize {
        self.knot_edge.iter().filter(|k| !**k).count()
    }
}

struct TetContribution<T: Real> {
    edges: [EdgeId; 6],
    block: nalgebra::Matrix6<T>,
    volume6: T,
}

/// Builds `A3`, `A2`, `A1` at a realization. `A3` is empty unless the representation is
/// scalar.
pub fn assemble<T: Real>(lc: &LiftedComplex<T>, real: &Realization<T>) -> Result<ComplexMatrices<T>> {
    let pt = &lc.pt;
    let n1 = pt.n_edges();
    let offsets = real.offsets();
    let nx = real.n_coordinates();

    let mut a2 = DMatrix::zeros(n1, nx);
    let mut lengths = vec![T::zero(); n1];
    for (id, class) in pt.edges().iter().enumerate() {
        let m = class.members[0];
        let (a, b) = EDGE_SLOTS[m.slot];
        let corners = pt.corners(m.tet);
        let ra = lc.label_rotation(m.tet, a);
        let rb = lc.label_rotation(m.tet, b);
        let p = ra * real.placements[corners[a]].base();
        let q = rb * real.placements[corners[b]].base();
        lengths[id] = (p - q).norm();
        let (gp, gq) = dlength_dpoints(&p, &q)?;
        for (v, rot, g) in [(corners[a], ra, gp), (corners[b], rb, gq)] {
            // dP = R dX, so ∂l/∂X = Rᵀ ∂l/∂P
            let pulled: Vector3<T> = rot.matrix().transpose() * g;
            match real.placements[v] {
                Placement::OffKnot(_) => {
                    for c in 0..3 {
                        a2[(id, offsets[v] + c)] += pulled[c];
                    }
                }
                Placement::OnKnot { axis, .. } => a2[(id, offsets[v])] += pulled.dot(&axis),
            }
        }
    }

    let contributions: Vec<Result<TetContribution<T>>> = (0..pt.n_tetrahedra())
        .into_par_iter()
        .map(|t| {
            let g = tet_geometry(lc, real, t);
            let with_tet = |e: Error| match e {
                Error::DegenerateTetrahedron { volume6, threshold, .. } => Error::DegenerateTetrahedron { tet: Some(t), volume6, threshold },
                e => e,
            };
            let volume6 = g.checked_volume6(None).map_err(with_tet)?;
            let block = dtheta_dlength(&g, None).map_err(with_tet)?;
            Ok(TetContribution { edges: pt.tet_edges(t), block, volume6 })
        })
        .collect();
    let mut a1 = DMatrix::zeros(n1, n1);
    let mut volumes6 = Vec::with_capacity(pt.n_tetrahedra());
    for c in contributions {
        let c = c?;
        let s = c.volume6.signum();
        for p in 0..6 {
            for q in 0..6 {
                a1[(c.edges[p], c.edges[q])] -= s * c.block[(p, q)];
            }
        }
        volumes6.push(c.volume6);
    }

    let a3 = match lc.rep.scalar_axis() {
        Some(u) => {
            let mut a3 = DMatrix::zeros(nx, 2);
            for (v, pl) in real.placements.iter().enumerate() {
                match *pl {
                    Placement::OffKnot(x) => {
                        let w = u.cross(&x);
                        for c in 0..3 {
                            a3[(offsets[v] + c, 0)] = u[c];
                            a3[(offsets[v] + c, 1)] = w[c];
                        }
                    }
                    Placement::OnKnot { axis, .. } => a3[(offsets[v], 0)] = axis.dot(&u),
                }
            }
            a3
        }
        None => DMatrix::zeros(nx, 0),
    };

    let knot_edge = (0..n1).map(|e| lc.km.is_knot_edge(e)).collect();
    Ok(ComplexMatrices {
        a3,
        a2,
        a1,
        coordinates: real.coordinate_labels(),
        edges: (0..n1).collect(),
        knot_edge,
        lengths,
        volumes6,
    })
}

/// Infinity norm (largest absolute row sum).
pub fn norm_inf<T: Real>(m: &DMatrix<T>) -> T {
    m.row_iter()
        .map(|r| r.iter().fold(T::zero(), |s, x| s + x.abs()))
        .fold(T::zero(), |a, b| a.max(b))
}

fn relative_product<T: Real>(a: &DMatrix<T>, b: &DMatrix<T>) -> f64 {
    if a.is_empty() || b.is_empty() {
        return 0.0;
    }
    let scale = norm_inf(a) * norm_inf(b);
    if scale == T::zero() {
        return 0.0;
    }
    (norm_inf(&(a * b)) / scale).to_f64_lossy()
}

/// Singular values, largest first.
pub fn singular_values<T: Real>(m: &DMatrix<T>) -> Vec<T> {
    if m.is_empty() {
        return Vec::new();
    }
    let mut s: Vec<T> = m.clone().svd(false, false).singular_values.iter().copied().collect();
    s.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
    s
}

/// Numerical rank with threshold `rel · σ_max`.
pub fn numerical_rank<T: Real>(s: &[T], rel: T) -> usize {
    match s.first() {
        Some(&top) if top > T::zero() => s.iter().filter(|&&x| x > rel * top).count(),
        _ => 0,
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AcyclicTolerances {
    /// Bound on the relative residuals of `A1·A2`, `A2·A3` and the asymmetry of `A1`.
    pub residual: f64,
    /// Singular values below `rank · σ_max` count as zero.
    pub rank: f64,
}

impl Default for AcyclicTolerances {
    fn default() -> Self {
        Self { residual: 1e-9, rank: 1e-8 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AcyclicityReport {
    /// `‖A1·A2‖∞ / (‖A1‖∞‖A2‖∞)`.
    pub residual_a1a2: f64,
    pub residual_a2a3: f64,
    /// `‖A1 − A1ᵀ‖∞ / ‖A1‖∞`.
    pub asymmetry: f64,
    /// Ranks of `(A3, A2, A1)`.
    pub ranks: [usize; 3],
    pub expected_ranks: [usize; 3],
    /// Last kept and first dropped singular value (relative to the largest) per matrix.
    pub gaps: [(f64, f64); 3],
}

pub fn check_acyclic<T: Real>(m: &ComplexMatrices<T>, tol: &AcyclicTolerances) -> Result<AcyclicityReport> {
    let residual_a1a2 = relative_product(&m.a1, &m.a2);
    let residual_a2a3 = relative_product(&m.a2, &m.a3);
    let n1 = norm_inf(&m.a1);
    let asymmetry = if n1 > T::zero() { (norm_inf(&(&m.a1 - m.a1.transpose())) / n1).to_f64_lossy() } else { 0.0 };

    let expected_ranks = m.expected_ranks();
    let mut ranks = [0; 3];
    let mut gaps = [(0.0, 0.0); 3];
    for (k, mat) in [&m.a3, &m.a2, &m.a1].into_iter().enumerate() {
        let s = singular_values(mat);
        let r = numerical_rank(&s, T::lit(tol.rank));
        ranks[k] = r;
        let top = s.first().map(|x| x.to_f64_lossy()).unwrap_or(0.0);
        let rel = |i: usize| s.get(i).map(|x| x.to_f64_lossy() / top).unwrap_or(0.0);
        gaps[k] = (if r > 0 { rel(r - 1) } else { 0.0 }, rel(r));
    }
    let report = AcyclicityReport { residual_a1a2, residual_a2a3, asymmetry, ranks, expected_ranks, gaps };

    for (which, r) in [("A1·A2", residual_a1a2), ("A2·A3", residual_a2a3), ("A1 − A1ᵀ", asymmetry)] {
        if !(r < tol.residual) {
            return Err(Error::NotAComplex { which: which.into(), residual: r });
        }
    }
    for (k, name) in ["A3", "A2", "A1"].iter().enumerate() {
        if ranks[k] != expected_ranks[k] {
            return Err(Error::NotAcyclic { which: (*name).into(), expected: expected_ranks[k], found: ranks[k] });
        }
    }
    Ok(report)
}

/// Dense labeled text dump, one matrix per block, row-major.
pub fn dump_matrices<T: Real>(m: &ComplexMatrices<T>) -> String {
    use std::fmt::Write;
    let mut out = String::new();
    let coord = |c: &Coordinate| match *c {
        Coordinate::Cartesian { vertex, component } => format!("v{vertex}.{}", ["x", "y", "z"][component]),
        Coordinate::AxisZ { vertex } => format!("v{vertex}.z'"),
    };
    let edge = |e: usize| format!("e{e}{}", if m.knot_edge[e] { "*" } else { "" });
    let mut block = |name: &str, mat: &DMatrix<T>, rows: Vec<String>, cols: Vec<String>| {
        let _ = writeln!(out, "# {name} {}x{}", mat.nrows(), mat.ncols());
        let _ = writeln!(out, "{:>8} {}", "", cols.iter().map(|c| format!("{c:>22}")).collect::<String>());
        for (i, r) in rows.iter().enumerate() {
            let vals: String = (0..mat.ncols()).map(|j| format!("{:>22.15e}", mat[(i, j)].to_f64_lossy())).collect();
            let _ = writeln!(out, "{r:>8} {vals}");
        }
    };
    let coords: Vec<String> = m.coordinates.iter().map(coord).collect();
    let edges: Vec<String> = (0..m.n_edges()).map(edge).collect();
    block("A3", &m.a3, coords.clone(), ["dz", "dphi"][..m.n_a()].iter().map(|s| s.to_string()).collect());
    block("A2", &m.a2, edges.clone(), coords);
    block("A1", &m.a1, edges.clone(), edges);
    out
}

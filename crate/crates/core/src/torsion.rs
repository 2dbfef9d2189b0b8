//! Torsion of based acyclic complexes by chained minors.

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::complex::{singular_values, ComplexMatrices};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// How the greedy elimination picks a pivot row.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PivotRule {
    /// Largest remaining pivot in the column.
    LargestPivot,
    /// A random admissible pivot (at least 1e-2 of the largest) per column.
    Shuffled(u64),
}

/// Pivots smaller than this fraction of the matrix scale count as zero.
const PIVOT_TOLERANCE: f64 = 1e-10;

/// Picks `ncols` rows of `b` forming a nonsingular square minor by Gaussian elimination.
/// Returns the rows sorted, or `None` if `b` is column-rank deficient at tolerance.
pub fn select_rows<T: Real>(b: &DMatrix<T>, rule: PivotRule, rng: &mut ChaCha8Rng) -> Option<Vec<usize>> {
    let (n, k) = b.shape();
    if k == 0 {
        return Some(Vec::new());
    }
    if k > n {
        return None;
    }
    let scale = b.iter().fold(T::zero(), |s, x| s.max(x.abs()));
    if scale == T::zero() {
        return None;
    }
    let mut m = b.clone();
    let mut remaining: Vec<usize> = (0..n).collect();
    let mut chosen = Vec::with_capacity(k);
    for col in 0..k {
        let best = remaining.iter().fold(T::zero(), |s, &r| s.max(m[(r, col)].abs()));
        if best <= T::lit(PIVOT_TOLERANCE) * scale {
            return None;
        }
        let pos = match rule {
            PivotRule::LargestPivot => remaining.iter().position(|&r| m[(r, col)].abs() == best)?,
            PivotRule::Shuffled(_) => {
                let ok: Vec<usize> =
                    (0..remaining.len()).filter(|&i| m[(remaining[i], col)].abs() >= T::lit(1e-2) * best).collect();
                *ok.choose(rng)?
            }
        };
        let r = remaining.swap_remove(pos);
        let pivot = m[(r, col)];
        for &r2 in &remaining {
            let f = m[(r2, col)] / pivot;
            if f != T::zero() {
                for c in col..k {
                    let v = m[(r, c)];
                    m[(r2, c)] -= f * v;
                }
            }
        }
        chosen.push(r);
    }
    chosen.sort_unstable();
    Some(chosen)
}

/// Sign of the permutation listing `first` then `second` (a shuffle of `0..n`).
pub fn shuffle_sign(first: &[usize], second: &[usize]) -> i8 {
    let seq: Vec<usize> = first.iter().chain(second).copied().collect();
    let mut inversions = 0usize;
    for i in 0..seq.len() {
        for j in i + 1..seq.len() {
            if seq[i] > seq[j] {
                inversions += 1;
            }
        }
    }
    if inversions % 2 == 0 {
        1
    } else {
        -1
    }
}

pub fn submatrix<T: Real>(m: &DMatrix<T>, rows: &[usize], cols: &[usize]) -> DMatrix<T> {
    DMatrix::from_fn(rows.len(), cols.len(), |i, j| m[(rows[i], cols[j])])
}

/// Determinant, with the empty minor equal to one.
pub fn det<T: Real>(m: &DMatrix<T>) -> T {
    if m.nrows() == 0 {
        T::one()
    } else {
        m.clone().determinant()
    }
}

fn complement(n: usize, set: &[usize]) -> Vec<usize> {
    (0..n).filter(|i| !set.contains(i)).collect()
}

/// One stage of the minor chain.
#[derive(Clone, Debug, PartialEq)]
pub struct ChainStage<T: Real> {
    /// Rows of the incoming map chosen in this space.
    pub rows: Vec<usize>,
    /// Basis vectors left for the outgoing map.
    pub complement: Vec<usize>,
    pub minor: T,
    /// `±1` from reordering the basis as chosen rows then complement.
    pub sign: i8,
    pub exponent: i32,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GenericTorsion<T: Real> {
    pub value: T,
    pub stages: Vec<ChainStage<T>>,
}

/// Torsion of `C_0 → C_1 → … → C_k` given by `maps[i]: C_i → C_{i+1}`, with `C_0` in
/// degree `start_degree`. Stage `i` chooses rows `I_i` of `maps[i−1]` restricted to the
/// previous complement `J_{i−1}`, and contributes `(±det)^{(−1)^{deg C_i}}`, the sign being
/// that of the shuffle `I_i ⧺ J_i`.
pub fn torsion_of_acyclic_complex<T: Real>(maps: &[DMatrix<T>], start_degree: i32, rule: PivotRule) -> Result<GenericTorsion<T>> {
    for (i, w) in maps.windows(2).enumerate() {
        if w[0].nrows() != w[1].ncols() {
            return Err(Error::InvalidArgument(format!("maps {i} and {} do not compose", i + 1)));
        }
    }
    let seed = match rule {
        PivotRule::Shuffled(s) => s,
        PivotRule::LargestPivot => 0,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let Some(first) = maps.first() else {
        return Ok(GenericTorsion { value: T::one(), stages: Vec::new() });
    };
    let mut complement_prev: Vec<usize> = (0..first.ncols()).collect();
    let mut value = T::one();
    let mut stages = Vec::with_capacity(maps.len());
    for (i, f) in maps.iter().enumerate() {
        let b = submatrix(f, &(0..f.nrows()).collect::<Vec<_>>(), &complement_prev);
        let rows = select_rows(&b, rule, &mut rng).ok_or(Error::SingularMinorChain { stage: i + 1 })?;
        let comp = complement(f.nrows(), &rows);
        let minor = det(&submatrix(&b, &rows, &(0..b.ncols()).collect::<Vec<_>>()));
        let sign = shuffle_sign(&rows, &comp);
        let degree = start_degree + i as i32 + 1;
        let exponent = if degree.rem_euclid(2) == 0 { 1 } else { -1 };
        let factor = minor * T::lit(sign as f64);
        value = if exponent == 1 { value * factor } else { value / factor };
        stages.push(ChainStage { rows, complement: comp.clone(), minor, sign, exponent });
        complement_prev = comp;
    }
    if !complement_prev.is_empty() {
        let dims = maps.last().map(|m| m.nrows()).unwrap_or(0);
        return Err(Error::NotAcyclic {
            which: "last space".into(),
            expected: dims,
            found: dims - complement_prev.len(),
        });
    }
    Ok(GenericTorsion { value, stages })
}

#[derive(Clone, Debug, PartialEq)]
pub struct TorsionResult<T: Real> {
    /// `(det A2[R,C])² / (det A1[R̄,R̄] · (det A3[I₀])²)`.
    pub raw: T,
    /// `(−1)^{N₁′}`, `N₁′` the number of off-knot edges.
    pub normalization: i8,
    /// `normalization · raw`, the value entering the invariant.
    pub value: T,
    pub a2_rows: Vec<usize>,
    pub a2_cols: Vec<usize>,
    /// `R̄`, rows and columns of the `A1` minor.
    pub a1_set: Vec<usize>,
    /// `I₀`, rows of the `A3` minor.
    pub a3_rows: Vec<usize>,
    pub det_a2: T,
    pub det_a1: T,
    pub det_a3: T,
    /// Smallest singular values of the three chosen submatrices `(A3, A2, A1)`.
    pub min_singular: [f64; 3],
}

fn min_sv<T: Real>(m: &DMatrix<T>) -> f64 {
    singular_values(m).last().map(|x| x.to_f64_lossy()).unwrap_or(1.0)
}

/// Torsion by the three-minor formula with a symmetric `A1` minor on the complement of the
/// chosen `A2` rows.
pub fn torsion_eq3<T: Real>(m: &ComplexMatrices<T>, rule: PivotRule) -> Result<TorsionResult<T>> {
    let seed = match rule {
        PivotRule::Shuffled(s) => s,
        PivotRule::LargestPivot => 0,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (nx, n1) = (m.n_x(), m.n_edges());
    let a3_rows = select_rows(&m.a3, rule, &mut rng).ok_or(Error::SingularMinorChain { stage: 1 })?;
    let a2_cols = complement(nx, &a3_rows);
    let b = submatrix(&m.a2, &(0..n1).collect::<Vec<_>>(), &a2_cols);
    let a2_rows = select_rows(&b, rule, &mut rng).ok_or(Error::SingularMinorChain { stage: 2 })?;
    let a1_set = complement(n1, &a2_rows);

    let all_a3_cols: Vec<usize> = (0..m.n_a()).collect();
    let s3 = submatrix(&m.a3, &a3_rows, &all_a3_cols);
    let s2 = submatrix(&m.a2, &a2_rows, &a2_cols);
    let s1 = submatrix(&m.a1, &a1_set, &a1_set);
    let (det_a3, det_a2, det_a1) = (det(&s3), det(&s2), det(&s1));
    if det_a1 == T::zero() || det_a3 == T::zero() {
        return Err(Error::SingularMinorChain { stage: 3 });
    }
    let raw = det_a2 * det_a2 / (det_a1 * det_a3 * det_a3);
    let normalization: i8 = if m.n_off_knot_edges() % 2 == 0 { 1 } else { -1 };
    let value = raw * T::lit(normalization as f64);
    let min_singular = [min_sv(&s3), min_sv(&s2), min_sv(&s1)];
    Ok(TorsionResult { raw, normalization, value, a2_rows, a2_cols, a1_set, a3_rows, det_a2, det_a1, det_a3, min_singular })
}

/// A few distinct admissible chains for robustness checks: largest-pivot plus `n − 1`
/// shuffled ones derived from `seed`.
pub fn pivot_rules(n: usize, seed: u64) -> Vec<PivotRule> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = vec![PivotRule::LargestPivot];
    out.extend((1..n).map(|_| PivotRule::Shuffled(rng.gen())));
    out
}

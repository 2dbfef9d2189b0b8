//! The knot invariant `I(K) = τ · Π′ l² / Π 6V · (−2(1 − cos φ))^{N₀^knot}`.

use rayon::prelude::*;

use crate::complex::{assemble, check_acyclic, AcyclicTolerances, AcyclicityReport};
use crate::error::{Error, Result};
use crate::lift::{sample_general_position, LiftedComplex, Realization, SamplingConfig};
use crate::scalar::Real;
use crate::torsion::{torsion_eq3, PivotRule, TorsionResult};

#[derive(Clone, Debug, PartialEq)]
pub struct InvariantResult<T: Real> {
    /// Invariant computed with the sign-normalized torsion.
    pub value: T,
    /// Same product with the bare three-minor torsion.
    pub raw_value: T,
    pub torsion: TorsionResult<T>,
    /// `Π′ l²` over off-knot edges.
    pub length_product: T,
    /// `Π 6V` over all tetrahedra, signed.
    pub volume_product: T,
    /// `(−2(1 − cos φ))^{N₀^knot}`.
    pub power_factor: T,
    pub phi: T,
    pub n_knot_vertices: usize,
    pub acyclicity: AcyclicityReport,
    pub seed: Option<u64>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InvariantOptions {
    pub pivot: PivotRule,
    pub acyclic: AcyclicTolerances,
}

impl Default for InvariantOptions {
    fn default() -> Self {
        Self { pivot: PivotRule::LargestPivot, acyclic: AcyclicTolerances::default() }
    }
}

pub fn power_factor<T: Real>(phi: T, n_knot_vertices: usize) -> T {
    let base = -T::lit(2.0) * (T::one() - phi.cos());
    (0..n_knot_vertices).fold(T::one(), |acc, _| acc * base)
}

pub fn compute_invariant<T: Real>(lc: &LiftedComplex<T>, real: &Realization<T>, opts: &InvariantOptions) -> Result<InvariantResult<T>> {
    let m = assemble(lc, real)?;
    let acyclicity = check_acyclic(&m, &opts.acyclic)?;
    let torsion = torsion_eq3(&m, opts.pivot)?;
    let length_product = m
        .lengths
        .iter()
        .zip(&m.knot_edge)
        .filter(|(_, k)| !**k)
        .fold(T::one(), |acc, (l, _)| acc * *l * *l);
    let volume_product = m.volumes6.iter().fold(T::one(), |acc, v| acc * *v);
    let phi = lc.rep.phi();
    let n_knot_vertices = lc.km.n_knot_vertices();
    let power = power_factor(phi, n_knot_vertices);
    let rest = length_product / volume_product * power;
    Ok(InvariantResult {
        value: torsion.value * rest,
        raw_value: torsion.raw * rest,
        torsion,
        length_product,
        volume_product,
        power_factor: power,
        phi,
        n_knot_vertices,
        acyclicity,
        seed: real.seed,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct MultiSampleResult<T: Real> {
    pub mean: T,
    pub samples: Vec<InvariantResult<T>>,
    /// `max |I_k − mean| / |mean|`.
    pub max_relative_deviation: f64,
    pub seeds: Vec<u64>,
}

pub const DEFAULT_SPREAD_TOLERANCE: f64 = 1e-6;

/// Evaluates the invariant at `n_samples` realizations seeded `base_seed, base_seed + 1, …`
/// in parallel.
pub fn invariant_multi_sample<T: Real>(
    lc: &LiftedComplex<T>,
    n_samples: usize,
    base_seed: u64,
    sampling: &SamplingConfig<T>,
    opts: &InvariantOptions,
    tolerance: f64,
) -> Result<MultiSampleResult<T>> {
    if n_samples < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 samples, got {n_samples}")));
    }
    let seeds: Vec<u64> = (0..n_samples as u64).map(|k| base_seed.wrapping_add(k)).collect();
    let samples = seeds
        .par_iter()
        .map(|&s| {
            let real = sample_general_position(lc, s, sampling)?;
            compute_invariant(lc, &real, opts)
        })
        .collect::<Result<Vec<_>>>()?;
    let mean = samples.iter().fold(T::zero(), |a, r| a + r.value) / T::from_usize_lossy(samples.len());
    let denom = mean.abs().to_f64_lossy();
    let max_relative_deviation = samples
        .iter()
        .map(|r| (r.value - mean).abs().to_f64_lossy() / denom)
        .fold(0.0, f64::max);
    if !(max_relative_deviation <= tolerance) {
        return Err(Error::InvariantUnstable { max_relative_deviation, tolerance });
    }
    Ok(MultiSampleResult { mean, samples, max_relative_deviation, seeds })
}

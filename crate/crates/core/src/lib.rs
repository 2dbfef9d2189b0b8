//! A Euclidean invariant of knots in 3-manifolds computed from a pseudotriangulation.
//!
//! The pipeline: a [`Pseudotriangulation`] with a marked knot and deck labels on the corners
//! ([`LiftedComplex`]) is realized in ℝ³ ([`Realization`]); at a realization the matrices of
//! the acyclic complex of differentials are assembled ([`complex`]), their torsion is taken
//! ([`torsion`]) and combined with edge lengths and volumes into
//!
//! ```text
//! I(K) = τ · Π′ l² / Π 6V · (−2(1 − cos φ))^{N₀^knot}
//! ```
//!
//! ([`invariant`]). [`moves`] changes the pseudotriangulation by Pachner and knot moves, and
//! [`tkf`] reads and writes the file format.
//!
//! ```
//! use geoknot::{build_unknot_join, invariant_multi_sample, InvariantOptions, SamplingConfig};
//!
//! let phi = std::f64::consts::PI;
//! let lc = build_unknot_join(3, 3, phi).unwrap();
//! let r = invariant_multi_sample(&lc, 4, 1, &SamplingConfig::default(), &InvariantOptions::default(), 1e-6).unwrap();
//! assert!((r.mean + 16.0).abs() < 1e-6);
//! ```

pub mod builders;
pub mod complex;
pub mod error;
pub mod euclid;
pub mod invariant;
pub mod lift;
pub mod moves;
pub mod pseudotriangulation;
pub mod scalar;
pub mod tkf;
pub mod torsion;

pub use builders::{build_bdaa_local, build_fixture, build_unknot_join, build_unknot_loop, BdaaLocal, FixtureKind};
pub use complex::{assemble, check_acyclic, AcyclicTolerances, AcyclicityReport, ComplexMatrices};
pub use error::{Error, Result};
pub use euclid::{Point3, Rotation, TetGeometry};
pub use invariant::{compute_invariant, invariant_multi_sample, InvariantOptions, InvariantResult, MultiSampleResult};
pub use lift::{
    deficit_angles, sample_general_position, validate_lift, Generator, LiftAssignment, LiftedComplex, Placement,
    Realization, Representation, SamplingConfig, Word,
};
pub use moves::{
    apply_move, local_ratio_check, random_move_sequence, replay_moves, LocalRatioReport, MoveDescriptor, MoveLog, State,
};
pub use pseudotriangulation::{validate_knot_conditions, KnotMarking, Perm4, Pseudotriangulation, RawGluing};
pub use scalar::Real;
pub use tkf::{parse_tkf, write_tkf, TkfDocument};
pub use torsion::{torsion_eq3, torsion_of_acyclic_complex, PivotRule, TorsionResult};

pub type Point3f64 = Point3<f64>;
pub type TetGeometry64 = TetGeometry<f64>;
pub type Representation64 = Representation<f64>;
pub type LiftedComplex64 = LiftedComplex<f64>;
pub type Realization64 = Realization<f64>;
pub type ComplexMatrices64 = ComplexMatrices<f64>;
pub type TorsionResult64 = TorsionResult<f64>;
pub type InvariantResult64 = InvariantResult<f64>;
pub type State64 = State<f64>;
pub type BdaaLocal64 = BdaaLocal<f64>;

pub type LiftedComplex32 = LiftedComplex<f32>;
pub type Realization32 = Realization<f32>;
pub type TetGeometry32 = TetGeometry<f32>;

//! Scalar abstraction shared by the geometry and linear-algebra layers.

use nalgebra::RealField;
use num_traits::{FromPrimitive, ToPrimitive};

/// Floating point type the pipeline is generic over (`f32` or `f64`).
pub trait Real: RealField + Copy + FromPrimitive + ToPrimitive {
    /// Converts an `f64` literal. Every supported type represents (a rounding of) any `f64`.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    #[inline]
    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).expect("usize representable")
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Reduces an angle to the half-open interval (−π, π].
pub fn reduce_angle<T: Real>(x: T) -> T {
    let two_pi = T::two_pi();
    let mut r = x - two_pi * (x / two_pi).round();
    if r <= -T::pi() {
        r += two_pi;
    } else if r > T::pi() {
        r -= two_pi;
    }
    r
}

/// `tol`, raised to `1e3 · ε` of `T` when that is larger.
pub fn precision_floor<T: Real>(tol: f64) -> f64 {
    tol.max(1e3 * T::default_epsilon().to_f64_lossy())
}

/// `|a - b| / max(|a|, |b|, floor)`.
pub fn relative_difference<T: Real>(a: T, b: T, floor: T) -> T {
    let scale = a.abs().max(b.abs()).max(floor);
    (a - b).abs() / scale
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reduce_angle_lands_in_half_open_interval() {
        let pi = std::f64::consts::PI;
        assert!((reduce_angle(3.0 * pi) - pi).abs() < 1e-12);
        assert!((reduce_angle(-pi) - pi).abs() < 1e-12);
        assert!(reduce_angle(-2.0 * pi).abs() < 1e-12);
        assert!((reduce_angle(0.5_f64) - 0.5).abs() < 1e-15);
        assert!((reduce_angle(-0.5_f32) + 0.5).abs() < 1e-6);
    }
}

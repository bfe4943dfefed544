//! Scalar abstraction shared by the numerical modules.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Floating-point scalar the learners and metrics are written against.
pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + Sum
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + Serialize
    + DeserializeOwned
    + 'static
{
    /// Converts an `f64` literal into this scalar.
    #[inline]
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("f64 converts to every supported scalar")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("scalar converts to f64")
    }

    #[inline]
    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("count converts to scalar")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Inverse logit evaluated without overflow, kept inside the open interval (0, 1).
pub fn sigmoid<T: Scalar>(z: T) -> T {
    let p = if z >= T::zero() {
        T::one() / (T::one() + (-z).exp())
    } else {
        let e = z.exp();
        e / (T::one() + e)
    };
    let hi = T::one() - T::epsilon() / T::of(2.0);
    p.max(T::min_positive_value()).min(hi)
}

/// `ln(1 + exp(z))` without overflow.
pub fn log1p_exp<T: Scalar>(z: T) -> T {
    if z > T::zero() {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sigmoid_stays_open() {
        assert!(sigmoid(-1000.0_f64) > 0.0);
        assert!(sigmoid(1000.0_f64) < 1.0);
        assert!(sigmoid(-200.0_f32) > 0.0);
        assert_eq!(sigmoid(0.0_f64), 0.5);
    }

    #[test]
    fn log1p_exp_matches_naive_in_safe_range() {
        for z in [-5.0, -0.3, 0.0, 0.7, 4.0_f64] {
            assert!((log1p_exp(z) - (1.0 + z.exp()).ln()).abs() < 1e-14);
        }
        assert!((log1p_exp(800.0_f64) - 800.0).abs() < 1e-12);
    }
}

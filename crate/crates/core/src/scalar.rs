//! Numeric bounds shared by the scoring code.
//!
//! Counting-based quantities (n-gram penalties, FSD scores, repetition
//! rates) only need field arithmetic, so they are written against
//! [`Scalar`] and can be evaluated exactly with `num_rational::Ratio`.
//! Anything that needs a square root or a random draw (cosine matching,
//! sampling, the decoding loop) requires [`Real`].

use std::fmt::Debug;

use num_traits::{Float, FromPrimitive, Num, ToPrimitive};

/// A number type the counting-based scores can be computed in.
pub trait Scalar: Num + Copy + PartialOrd + FromPrimitive + Debug + Send + Sync + 'static {
    /// Converts an exact count.
    fn from_count(count: u64) -> Self {
        Self::from_u64(count).expect("count not representable in scalar type")
    }

    /// Converts a configuration constant such as a decay factor.
    fn from_real(value: f64) -> Self {
        Self::from_f64(value).expect("value not representable in scalar type")
    }
}

impl<T> Scalar for T where T: Num + Copy + PartialOrd + FromPrimitive + Debug + Send + Sync + 'static {}

/// Floating-point scalar: `f32` or `f64`.
pub trait Real: Scalar + Float + ToPrimitive + std::iter::Sum {}

impl<T> Real for T where T: Scalar + Float + ToPrimitive + std::iter::Sum {}

#[cfg(test)]
mod tests {
    use super::*;

    fn half<T: Scalar>() -> T {
        T::from_count(1) / T::from_count(2)
    }

    #[test]
    fn scalar_covers_floats() {
        assert_eq!(half::<f64>(), 0.5);
        assert_eq!(half::<f32>(), 0.5);
        assert_eq!(<f64 as Scalar>::from_real(0.9), 0.9);
    }
}

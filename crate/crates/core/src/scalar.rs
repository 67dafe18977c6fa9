//! Scalar abstraction shared by every numeric routine in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Floating point type the solvers are generic over.
///
/// Implemented for `f32` and `f64`. Every tolerance quoted in the docs assumes `f64`;
/// `f32` works but with correspondingly looser accuracy.
pub trait Real:
    Float + FloatConst + FromPrimitive + ToPrimitive + Debug + Display + Default + Sum + Send + Sync + 'static
{
    /// Converts an `f64` literal. Exact for `f64`, rounded for `f32`.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable in the scalar type")
    }

    /// Converts a count or index.
    #[inline]
    fn of(n: usize) -> Self {
        Self::from_usize(n).expect("usize representable in the scalar type")
    }

    /// Lossy conversion to `f64`, used for sampling tables and reporting.
    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

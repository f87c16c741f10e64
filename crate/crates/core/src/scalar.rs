//! Floating point scalar abstraction shared by every numeric routine.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};

/// Real scalar type the numeric kernels are generic over: `f32` or `f64`.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + NumAssign + Sum + Debug + Display + Send + Sync + 'static
{
    /// Converts an `f64` literal into this type.
    fn of(value: f64) -> Self {
        Self::from_f64(value).expect("f64 is representable in every Scalar type")
    }

    /// Widens to `f64`.
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().expect("Scalar always converts to f64")
    }

    /// `sgn` with the total convention `sgn(0) = +1`.
    fn sign_bit(self) -> Self {
        if self >= Self::zero() {
            Self::one()
        } else {
            -Self::one()
        }
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

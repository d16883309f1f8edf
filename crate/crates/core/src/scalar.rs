//! Scalar abstraction for the numeric core.
//!
//! All matrix and expression machinery is generic over a real floating-point
//! scalar; complex values are `num_complex::Complex<R>` built on top of it.
//! Concrete aliases for `f64` live at the crate root.

use num_complex::Complex;
use num_traits::{Float, FromPrimitive, NumAssignOps};
use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;

/// Real floating-point scalar: `f32` or `f64`.
pub trait Real:
    Float + FromPrimitive + NumAssignOps + Sum + Display + LowerExp + Debug + Send + Sync + 'static
{
    /// Lossless-enough conversion from an `f64` constant.
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("f64 constant representable in scalar type")
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Complex number over the crate scalar.
pub type C<R> = Complex<R>;

/// `x + 0i`.
pub fn cx<R: Real>(re: R) -> C<R> {
    Complex::new(re, R::zero())
}

/// Complex value from `f64` parts.
pub fn c64<R: Real>(re: f64, im: f64) -> C<R> {
    Complex::new(R::of(re), R::of(im))
}

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};

/// Floating-point type the dynamics are computed in: `f32` or `f64`.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + NumAssign + Sum + Debug + Display + Default + Send + Sync + 'static
{
    /// Tolerance on `|Σ p − 1|` accepted when constructing a simplex vector.
    fn simplex_tol() -> Self;

    /// Lossless-enough conversion from an `f64` literal.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f64 {
    #[inline]
    fn simplex_tol() -> Self {
        1e-12
    }
}

impl Scalar for f32 {
    #[inline]
    fn simplex_tol() -> Self {
        1e-5
    }
}

pub(crate) fn max_abs<T: Scalar>(xs: impl IntoIterator<Item = T>) -> T {
    xs.into_iter().fold(T::zero(), |m, x| m.max(x.abs()))
}

/// `‖a − b‖∞` over two equally long slices.
pub fn sup_distance<T: Scalar>(a: &[T], b: &[T]) -> T {
    debug_assert_eq!(a.len(), b.len());
    max_abs(a.iter().zip(b).map(|(&x, &y)| x - y))
}

//! Scalar abstraction shared by every numerical module.
//!
//! All tables, channels and estimators are generic over a real field `T`
//! (`f32` or `f64`); complex quantities are `Complex<T>`. The crate root
//! exports `f64` aliases for the common case.

use nalgebra::RealField;
use num_complex::Complex;
use num_traits::{FloatConst, FromPrimitive, ToPrimitive};

/// Real scalar usable throughout the crate.
pub trait Real:
    RealField + Copy + Default + FromPrimitive + ToPrimitive + FloatConst + 'static
{
    /// Converts an `f64` literal into `Self`.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("finite literal")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("finite scalar")
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Shorthand for the complex type over `T`.
pub type Cx<T> = Complex<T>;

#[inline]
pub(crate) fn cx<T: Real>(re: f64, im: f64) -> Cx<T> {
    Complex::new(T::lit(re), T::lit(im))
}

#[inline]
pub(crate) fn czero<T: Real>() -> Cx<T> {
    Complex::new(T::zero(), T::zero())
}

#[inline]
pub(crate) fn cone<T: Real>() -> Cx<T> {
    Complex::new(T::one(), T::zero())
}

#[inline]
pub(crate) fn creal<T: Real>(x: T) -> Cx<T> {
    Complex::new(x, T::zero())
}

/// Absolute tolerance `base`, loosened for low-precision scalars.
#[inline]
pub(crate) fn tol<T: Real>(base: f64) -> f64 {
    base.max(100.0 * T::default_epsilon().as_f64())
}

#[inline]
pub(crate) fn cabs<T: Real>(z: Cx<T>) -> T {
    z.re.hypot(z.im)
}

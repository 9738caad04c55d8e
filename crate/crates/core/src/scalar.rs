//! Scalar abstraction shared by the linear-algebra core.

use nalgebra::{Complex, RealField};
use num_traits::{FromPrimitive, ToPrimitive};

/// Real scalar the dense algebra is generic over (`f32` or `f64`).
///
/// Complex amplitudes are `Complex<R>`; all physical parameters enter as
/// `f64` and are converted once at construction time.
pub trait Real: RealField + Copy + FromPrimitive + ToPrimitive + Send + Sync + 'static {
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable in scalar type")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().expect("scalar convertible to f64")
    }

    /// Machine epsilon as `f64`; floors tolerances that are tighter than the type can resolve.
    fn precision() -> f64 {
        Self::default_epsilon().as_f64()
    }

    fn cplx(re: f64, im: f64) -> Complex<Self> {
        Complex::new(Self::lit(re), Self::lit(im))
    }
}

impl Real for f32 {}
impl Real for f64 {}

pub(crate) fn czero<R: Real>() -> Complex<R> {
    Complex::new(R::zero(), R::zero())
}

pub(crate) fn cone<R: Real>() -> Complex<R> {
    Complex::new(R::one(), R::zero())
}

pub(crate) fn creal<R: Real>(x: R) -> Complex<R> {
    Complex::new(x, R::zero())
}

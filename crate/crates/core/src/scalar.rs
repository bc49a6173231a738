//! Scalar abstraction shared by every numerical module.
//!
//! All physics code is written against [`Real`], which is satisfied by `f32`
//! and `f64`. Complex entries are `num_complex::Complex<T>`.

use nalgebra::RealField;
use num_complex::Complex;
use num_traits::{FromPrimitive, ToPrimitive};

/// Real scalar usable by the simulation kernels.
pub trait Real: RealField + Copy + FromPrimitive + ToPrimitive + Send + Sync {}

impl Real for f32 {}
impl Real for f64 {}

/// Converts an `f64` literal into `T`.
#[inline]
pub fn lit<T: Real>(x: f64) -> T {
    T::from_f64(x).expect("f64 literal representable in scalar type")
}

/// Converts a count into `T`.
#[inline]
pub fn from_usize<T: Real>(n: usize) -> T {
    T::from_usize(n).expect("count representable in scalar type")
}

/// Lossy conversion to `f64` for reporting.
#[inline]
pub fn to_f64<T: Real>(x: T) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

/// A tolerance expressed in `f64`, floored so it stays meaningful for `T`.
///
/// For `f64` every tolerance used in this crate passes through unchanged;
/// for `f32` values below a few hundred ulps are lifted.
#[inline]
pub fn tol<T: Real>(x: f64) -> T {
    let floor = T::default_epsilon() * lit::<T>(256.0);
    let v = lit::<T>(x);
    if v < floor {
        floor
    } else {
        v
    }
}

#[inline]
pub fn c<T: Real>(re: T, im: T) -> Complex<T> {
    Complex::new(re, im)
}

#[inline]
pub fn cr<T: Real>(re: T) -> Complex<T> {
    Complex::new(re, T::zero())
}

/// `e^{i x}`.
#[inline]
pub fn cis<T: Real>(x: T) -> Complex<T> {
    Complex::new(x.cos(), x.sin())
}

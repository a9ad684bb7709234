//! Scalar abstraction shared by the closed-form math.
//!
//! Window adaptation, loss and delay arithmetic, geometry and the channel
//! model are written once against [`Scalar`] and instantiated for `f32` and
//! `f64`. The simulation stack itself runs on `f64`.

use std::fmt::Debug;

use num_traits::{Float, FromPrimitive, NumCast};

/// Floating point scalar: `f32` or `f64`.
pub trait Scalar: Float + FromPrimitive + NumCast + Debug + Default + Send + Sync + 'static {
    /// Lossless-enough conversion from an `f64` literal.
    #[inline]
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("literal representable in scalar type")
    }

    /// Conversion from a count.
    #[inline]
    fn from_count(n: u64) -> Self {
        Self::from_u64(n).expect("count representable in scalar type")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

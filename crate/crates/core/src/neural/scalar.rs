use std::fmt::Debug;
use std::iter::Sum;
use std::ops::{AddAssign, MulAssign, SubAssign};

use num_traits::Float;

/// Floating point type the networks are generic over. Training runs in
/// `f32`; gradient checks run in `f64`.
pub trait Scalar: Float + AddAssign + SubAssign + MulAssign + Sum + Default + Debug + Send + Sync + 'static {
    fn of(v: f64) -> Self;
    fn as_f64(self) -> f64;
}

impl Scalar for f32 {
    fn of(v: f64) -> Self {
        v as f32
    }
    fn as_f64(self) -> f64 {
        self as f64
    }
}

impl Scalar for f64 {
    fn of(v: f64) -> Self {
        v
    }
    fn as_f64(self) -> f64 {
        self
    }
}

/// `acc[i] += a * x[i]`
#[inline]
pub(crate) fn axpy<T: Scalar>(acc: &mut [T], a: T, x: &[T]) {
    for (o, v) in acc.iter_mut().zip(x) {
        *o += a * *v;
    }
}

/// Dot product with eight independent partial sums so the loop vectorizes.
/// Summation order is fixed, so results are reproducible.
#[inline]
pub(crate) fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    let mut lanes = [T::zero(); 8];
    let ca = a.chunks_exact(8);
    let cb = b.chunks_exact(8);
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        for k in 0..8 {
            lanes[k] += x[k] * y[k];
        }
    }
    let mut tail = T::zero();
    for (x, y) in ra.iter().zip(rb) {
        tail += *x * *y;
    }
    ((lanes[0] + lanes[4]) + (lanes[1] + lanes[5])) + ((lanes[2] + lanes[6]) + (lanes[3] + lanes[7])) + tail
}

/// Logistic function, kept strictly inside (0, 1) by one machine epsilon.
pub fn sigmoid<T: Scalar>(x: T) -> T {
    let y = if x >= T::zero() {
        T::one() / (T::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (T::one() + e)
    };
    y.max(T::epsilon()).min(T::one() - T::epsilon())
}

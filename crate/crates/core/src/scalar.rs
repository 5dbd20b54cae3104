//! Scalar abstraction shared by every numerical routine in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};

/// Floating point type the solvers and checkers are generic over (`f32` or `f64`).
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + NumAssign + Sum + Debug + Display + Send + Sync + 'static
{
    /// Lossy conversion from an `f64` literal.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable in scalar type")
    }

    #[inline]
    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).expect("usize representable in scalar type")
    }

    #[inline]
    fn half() -> Self {
        Self::lit(0.5)
    }

    #[inline]
    fn two() -> Self {
        Self::lit(2.0)
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Sign with `sign(0) = 0`, as used by Kruzkov entropies.
    #[inline]
    fn sgn(self) -> Self {
        if self > Self::zero() {
            Self::one()
        } else if self < Self::zero() {
            -Self::one()
        } else {
            Self::zero()
        }
    }

    /// Machine-precision-scaled absolute tolerance for comparisons at magnitude `scale`.
    #[inline]
    fn tol_at(abs_tol: f64, scale: Self) -> Self {
        Self::lit(abs_tol) * (Self::one() + scale.abs())
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Clamp `x` into `[lo, hi]`.
#[inline]
pub fn clamp<T: Scalar>(x: T, lo: T, hi: T) -> T {
    x.max(lo).min(hi)
}

/// `n` equispaced points covering `[lo, hi]` including both endpoints.
pub fn linspace<T: Scalar>(lo: T, hi: T, n: usize) -> Vec<T> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let step = (hi - lo) / T::from_usize_lossy(n - 1);
            (0..n)
                .map(|i| {
                    if i + 1 == n {
                        hi
                    } else {
                        lo + step * T::from_usize_lossy(i)
                    }
                })
                .collect()
        }
    }
}

/// Composite Simpson rule on `[a, b]` with `n` subintervals (rounded up to even).
pub fn simpson<T: Scalar, F: Fn(T) -> T>(f: F, a: T, b: T, n: usize) -> T {
    let n = n.max(2) + n.max(2) % 2;
    if a == b {
        return T::zero();
    }
    let h = (b - a) / T::from_usize_lossy(n);
    let four = T::lit(4.0);
    let mut acc = f(a) + f(b);
    for i in 1..n {
        let x = a + h * T::from_usize_lossy(i);
        acc += if i % 2 == 1 { four * f(x) } else { T::two() * f(x) };
    }
    acc * h / T::lit(3.0)
}

/// Bisection root of a continuous `f` on `[lo, hi]` where `f(lo)` and `f(hi)` differ in sign.
/// Returns `None` when the bracket does not straddle zero.
pub fn bisect<T: Scalar, F: Fn(T) -> T>(f: F, mut lo: T, mut hi: T) -> Option<T> {
    let mut flo = f(lo);
    let fhi = f(hi);
    if flo == T::zero() {
        return Some(lo);
    }
    if fhi == T::zero() {
        return Some(hi);
    }
    if flo.sgn() == fhi.sgn() {
        return None;
    }
    for _ in 0..200 {
        let mid = (lo + hi) * T::half();
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = f(mid);
        if fm == T::zero() {
            return Some(mid);
        }
        if fm.sgn() == flo.sgn() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    Some((lo + hi) * T::half())
}

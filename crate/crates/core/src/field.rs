//! Minimal algebra shared by plain complex values and Taylor jets, so the
//! map evaluator and the small dense solvers are written once.

use crate::error::{Error, Result};
use crate::scalar::{lit, Cx, Real};

/// Relative threshold under which a divisor is treated as zero.
pub const DIV_THRESHOLD: f64 = 1e-13;

pub trait Field<T: Real>: Clone {
    fn add(&self, other: &Self) -> Self;
    fn sub(&self, other: &Self) -> Self;
    fn mul(&self, other: &Self) -> Self;
    /// Division; fails when `|other.value()| < 1e-13 * (1 + |self.value()|)`.
    fn div(&self, other: &Self) -> Result<Self>;
    fn scale(&self, c: Cx<T>) -> Self;
    fn add_const(&self, c: Cx<T>) -> Self;
    /// A constant carrying the same shape metadata as `self`.
    fn constant_like(&self, c: Cx<T>) -> Self;
    fn value(&self) -> Cx<T>;

    fn neg(&self) -> Self {
        self.scale(Cx::new(-T::one(), T::zero()))
    }

    fn powi(&self, e: u32) -> Self {
        let mut acc = self.constant_like(Cx::new(T::one(), T::zero()));
        let mut base = self.clone();
        let mut k = e;
        while k > 0 {
            if k & 1 == 1 {
                acc = acc.mul(&base);
            }
            k >>= 1;
            if k > 0 {
                base = base.mul(&base);
            }
        }
        acc
    }
}

pub(crate) fn check_divisor<T: Real>(num: Cx<T>, den: Cx<T>) -> Result<()> {
    let m = den.norm();
    if !(m >= lit::<T>(DIV_THRESHOLD) * (T::one() + num.norm())) {
        return Err(Error::SingularDivisor {
            modulus: m.to_f64().unwrap_or(f64::NAN),
        });
    }
    Ok(())
}

impl<T: Real> Field<T> for Cx<T> {
    fn add(&self, other: &Self) -> Self {
        *self + *other
    }
    fn sub(&self, other: &Self) -> Self {
        *self - *other
    }
    fn mul(&self, other: &Self) -> Self {
        *self * *other
    }
    fn div(&self, other: &Self) -> Result<Self> {
        check_divisor(*self, *other)?;
        Ok(*self / *other)
    }
    fn scale(&self, c: Cx<T>) -> Self {
        *self * c
    }
    fn add_const(&self, c: Cx<T>) -> Self {
        *self + c
    }
    fn constant_like(&self, c: Cx<T>) -> Self {
        c
    }
    fn value(&self) -> Cx<T> {
        *self
    }
}

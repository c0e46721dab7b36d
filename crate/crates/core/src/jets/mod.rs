//! Third-order complex Taylor jets in `n` variables.
//!
//! A [`Jet3`] carries a value, the gradient, the Hessian and the third
//! derivative tensor of a holomorphic function at a point. Arithmetic and
//! elementary functions propagate all of them exactly through order 3.
//! Symmetric tensors are stored once per canonical index tuple
//! (`i ≤ j`, `i ≤ j ≤ k`).
//!
//! [`cauchy`] holds an independent differentiation route based on discrete
//! Cauchy integrals, used to validate the jet engine.

pub mod cauchy;

pub use cauchy::{cauchy_oracle, cauchy_oracle_with, CauchyConfig};

use std::ops::{Add, Mul, Neg, Sub};

use crate::error::{Error, Result};
use crate::field::{check_divisor, Field};
use crate::scalar::{czero, from_usize, to_f64, Cx, Real};

/// Number of canonical pairs `i ≤ j` in `n` variables.
#[inline]
fn pair_count(n: usize) -> usize {
    n * (n + 1) / 2
}

/// Number of canonical triples `i ≤ j ≤ k` in `n` variables.
#[inline]
fn triple_count(n: usize) -> usize {
    n * (n + 1) * (n + 2) / 6
}

#[inline]
fn sort2(i: usize, j: usize) -> (usize, usize) {
    if i <= j {
        (i, j)
    } else {
        (j, i)
    }
}

#[inline]
fn sort3(i: usize, j: usize, k: usize) -> (usize, usize, usize) {
    let (a, b) = sort2(i, j);
    if k >= b {
        (a, b, k)
    } else if k >= a {
        (a, k, b)
    } else {
        (k, a, b)
    }
}

/// Offset of the sorted pair `(i, j)`.
#[inline]
fn pair_index(n: usize, i: usize, j: usize) -> usize {
    let (i, j) = sort2(i, j);
    i * n - i * i.saturating_sub(1) / 2 + (j - i)
}

/// Offset of the sorted triple `(i, j, k)`.
#[inline]
fn triple_index(n: usize, i: usize, j: usize, k: usize) -> usize {
    let (i, j, k) = sort3(i, j, k);
    let mut off = 0;
    for a in 0..i {
        off += pair_count(n - a);
    }
    for b in i..j {
        off += n - b;
    }
    off + (k - j)
}

/// Canonical pairs in storage order.
pub(crate) fn pairs(n: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..n).flat_map(move |i| (i..n).map(move |j| (i, j)))
}

/// Canonical triples in storage order.
pub(crate) fn triples(n: usize) -> impl Iterator<Item = (usize, usize, usize)> {
    (0..n).flat_map(move |i| (i..n).flat_map(move |j| (j..n).map(move |k| (i, j, k))))
}

/// Third-order Taylor jet of a scalar holomorphic function of `n` variables.
#[derive(Debug, Clone, PartialEq)]
pub struct Jet3<T: Real> {
    n: usize,
    value: Cx<T>,
    grad: Vec<Cx<T>>,
    hess: Vec<Cx<T>>,
    third: Vec<Cx<T>>,
}

/// Binary jet operation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JetOp {
    Add,
    Sub,
    Mul,
    Div,
}

/// Elementary function applied to a jet (principal branch).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Elementary<T: Real> {
    Log,
    Exp,
    Pow(T),
}

impl<T: Real> Jet3<T> {
    /// Constant jet: all derivatives zero.
    pub fn constant(n: usize, value: Cx<T>) -> Self {
        Jet3 {
            n,
            value,
            grad: vec![czero(); n],
            hess: vec![czero(); pair_count(n)],
            third: vec![czero(); triple_count(n)],
        }
    }

    /// Coordinate jet `z_index` evaluated at `value`.
    pub fn variable(index: usize, value: Cx<T>, n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::DimensionTooSmall(n));
        }
        if index >= n {
            return Err(Error::IndexOutOfRange { index, n });
        }
        let mut j = Self::constant(n, value);
        j.grad[index] = Cx::new(T::one(), T::zero());
        Ok(j)
    }

    /// Seeds all `n` coordinate jets at the point `z`.
    pub fn seed_point(z: &[Cx<T>]) -> Result<Vec<Self>> {
        (0..z.len()).map(|i| Self::variable(i, z[i], z.len())).collect()
    }

    /// Builds a jet from full derivative data; symmetric entries are read at
    /// canonical positions only.
    pub fn from_parts(
        value: Cx<T>,
        grad: Vec<Cx<T>>,
        hess: impl Fn(usize, usize) -> Cx<T>,
        third: impl Fn(usize, usize, usize) -> Cx<T>,
    ) -> Self {
        let n = grad.len();
        Jet3 {
            n,
            value,
            grad,
            hess: pairs(n).map(|(i, j)| hess(i, j)).collect(),
            third: triples(n).map(|(i, j, k)| third(i, j, k)).collect(),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }
    pub fn value(&self) -> Cx<T> {
        self.value
    }
    pub fn grad(&self) -> &[Cx<T>] {
        &self.grad
    }
    pub fn grad_at(&self, i: usize) -> Cx<T> {
        self.grad[i]
    }
    pub fn hess(&self, i: usize, j: usize) -> Cx<T> {
        self.hess[pair_index(self.n, i, j)]
    }
    pub fn third(&self, i: usize, j: usize, k: usize) -> Cx<T> {
        self.third[triple_index(self.n, i, j, k)]
    }

    /// Partial derivative of order given by `multi_index` (total order ≤ 3).
    pub fn derivative(&self, multi_index: &[usize]) -> Result<Cx<T>> {
        if multi_index.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                found: multi_index.len(),
            });
        }
        let mut idx = Vec::new();
        for (v, &m) in multi_index.iter().enumerate() {
            idx.extend(std::iter::repeat(v).take(m));
        }
        match idx.as_slice() {
            [] => Ok(self.value),
            [i] => Ok(self.grad[*i]),
            [i, j] => Ok(self.hess(*i, *j)),
            [i, j, k] => Ok(self.third(*i, *j, *k)),
            _ => Err(Error::InvalidParameter(format!(
                "derivative order {} exceeds 3",
                idx.len()
            ))),
        }
    }

    /// Jet of `∂/∂z_i` of this function. Only orders 0..=2 of the result are
    /// meaningful; its third-order part is zero.
    pub fn partial(&self, i: usize) -> Self {
        let n = self.n;
        Jet3 {
            n,
            value: self.grad[i],
            grad: (0..n).map(|j| self.hess(i, j)).collect(),
            hess: pairs(n).map(|(j, k)| self.third(i, j, k)).collect(),
            third: vec![czero(); triple_count(n)],
        }
    }

    /// Zeroes every coefficient above `order`.
    pub fn truncate(mut self, order: usize) -> Self {
        if order < 3 {
            self.third.iter_mut().for_each(|c| *c = czero());
        }
        if order < 2 {
            self.hess.iter_mut().for_each(|c| *c = czero());
        }
        if order < 1 {
            self.grad.iter_mut().for_each(|c| *c = czero());
        }
        self
    }

    fn check_dim(&self, other: &Self) -> Result<()> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                found: other.n,
            });
        }
        Ok(())
    }

    fn zip_with(&self, other: &Self, f: impl Fn(Cx<T>, Cx<T>) -> Cx<T>) -> Self {
        let zip = |a: &[Cx<T>], b: &[Cx<T>]| a.iter().zip(b).map(|(x, y)| f(*x, *y)).collect();
        Jet3 {
            n: self.n,
            value: f(self.value, other.value),
            grad: zip(&self.grad, &other.grad),
            hess: zip(&self.hess, &other.hess),
            third: zip(&self.third, &other.third),
        }
    }

    fn map_coeffs(&self, f: impl Fn(Cx<T>) -> Cx<T>) -> Self {
        Jet3 {
            n: self.n,
            value: f(self.value),
            grad: self.grad.iter().map(|x| f(*x)).collect(),
            hess: self.hess.iter().map(|x| f(*x)).collect(),
            third: self.third.iter().map(|x| f(*x)).collect(),
        }
    }

    fn mul_unchecked(&self, b: &Self) -> Self {
        let a = self;
        let n = a.n;
        let (a0, b0) = (a.value, b.value);
        let grad = (0..n).map(|i| a.grad[i] * b0 + a0 * b.grad[i]).collect();
        let hess = pairs(n)
            .map(|(i, j)| {
                a.hess(i, j) * b0 + a.grad[i] * b.grad[j] + a.grad[j] * b.grad[i] + a0 * b.hess(i, j)
            })
            .collect();
        let third = triples(n)
            .map(|(i, j, k)| {
                a.third(i, j, k) * b0
                    + a.hess(i, j) * b.grad[k]
                    + a.hess(i, k) * b.grad[j]
                    + a.hess(j, k) * b.grad[i]
                    + a.grad[i] * b.hess(j, k)
                    + a.grad[j] * b.hess(i, k)
                    + a.grad[k] * b.hess(i, j)
                    + a0 * b.third(i, j, k)
            })
            .collect();
        Jet3 {
            n,
            value: a0 * b0,
            grad,
            hess,
            third,
        }
    }

    /// Chain rule with a univariate function whose derivatives at
    /// `self.value` are `d = [φ, φ', φ'', φ''']`.
    pub fn compose_univariate(&self, d: [Cx<T>; 4]) -> Self {
        let a = self;
        let n = a.n;
        let g = &a.grad;
        Jet3 {
            n,
            value: d[0],
            grad: g.iter().map(|gi| d[1] * gi).collect(),
            hess: pairs(n)
                .map(|(i, j)| d[2] * g[i] * g[j] + d[1] * a.hess(i, j))
                .collect(),
            third: triples(n)
                .map(|(i, j, k)| {
                    d[3] * g[i] * g[j] * g[k]
                        + d[2] * (a.hess(i, j) * g[k] + a.hess(i, k) * g[j] + a.hess(j, k) * g[i])
                        + d[1] * a.third(i, j, k)
                })
                .collect(),
        }
    }

    pub fn recip(&self) -> Result<Self> {
        let x = self.value;
        check_divisor(Cx::new(T::one(), T::zero()), x)?;
        let r = x.inv();
        let r2 = r * r;
        let two = from_usize::<T>(2);
        let six = from_usize::<T>(6);
        Ok(self.compose_univariate([r, -r2, r2 * r * two, -(r2 * r2) * six]))
    }

    /// `jet_arith`: combine two jets of the same dimension.
    pub fn arith(&self, other: &Self, op: JetOp) -> Result<Self> {
        self.check_dim(other)?;
        match op {
            JetOp::Add => Ok(self.zip_with(other, |x, y| x + y)),
            JetOp::Sub => Ok(self.zip_with(other, |x, y| x - y)),
            JetOp::Mul => Ok(self.mul_unchecked(other)),
            JetOp::Div => {
                check_divisor(self.value, other.value)?;
                Ok(self.mul_unchecked(&other.recip()?))
            }
        }
    }

    /// `jet_elementary`: log, exp or principal power of a jet.
    pub fn elementary(&self, func: Elementary<T>) -> Result<Self> {
        let x = self.value;
        let singular = |name| Error::SingularArgument {
            func: name,
            modulus: to_f64(x.norm()),
        };
        let two = from_usize::<T>(2);
        match func {
            Elementary::Log => {
                if x.norm() == T::zero() || !x.norm().is_finite() {
                    return Err(singular("log"));
                }
                let r = x.inv();
                Ok(self.compose_univariate([x.ln(), r, -(r * r), r * r * r * two]))
            }
            Elementary::Exp => {
                let e = x.exp();
                Ok(self.compose_univariate([e, e, e, e]))
            }
            Elementary::Pow(p) => {
                if x.norm() == T::zero() || !x.norm().is_finite() {
                    return Err(singular("pow"));
                }
                let v = (x.ln() * p).exp();
                let r = x.inv();
                let one = T::one();
                let d1 = v * r * p;
                let d2 = d1 * r * (p - one);
                let d3 = d2 * r * (p - two);
                Ok(self.compose_univariate([v, d1, d2, d3]))
            }
        }
    }

    pub fn scale_by(&self, c: Cx<T>) -> Self {
        self.map_coeffs(|x| x * c)
    }

    /// Largest coefficient modulus across all orders.
    pub fn max_abs(&self) -> T {
        std::iter::once(&self.value)
            .chain(&self.grad)
            .chain(&self.hess)
            .chain(&self.third)
            .fold(T::zero(), |acc, z| acc.max(z.norm()))
    }

    /// Largest coefficient-wise difference between two jets of equal dimension.
    pub fn max_abs_diff(&self, other: &Self) -> T {
        self.zip_with(other, |a, b| a - b).max_abs()
    }
}

/// `seed_variable`.
pub fn seed_variable<T: Real>(index: usize, value: Cx<T>, n: usize) -> Result<Jet3<T>> {
    Jet3::variable(index, value, n)
}

/// `jet_arith`.
pub fn jet_arith<T: Real>(a: &Jet3<T>, b: &Jet3<T>, op: JetOp) -> Result<Jet3<T>> {
    a.arith(b, op)
}

/// `jet_elementary`.
pub fn jet_elementary<T: Real>(a: &Jet3<T>, func: Elementary<T>) -> Result<Jet3<T>> {
    a.elementary(func)
}

impl<T: Real> Field<T> for Jet3<T> {
    fn add(&self, other: &Self) -> Self {
        self.zip_with(other, |x, y| x + y)
    }
    fn sub(&self, other: &Self) -> Self {
        self.zip_with(other, |x, y| x - y)
    }
    fn mul(&self, other: &Self) -> Self {
        self.mul_unchecked(other)
    }
    fn div(&self, other: &Self) -> Result<Self> {
        self.arith(other, JetOp::Div)
    }
    fn scale(&self, c: Cx<T>) -> Self {
        self.scale_by(c)
    }
    fn add_const(&self, c: Cx<T>) -> Self {
        let mut j = self.clone();
        j.value += c;
        j
    }
    fn constant_like(&self, c: Cx<T>) -> Self {
        Jet3::constant(self.n, c)
    }
    fn value(&self) -> Cx<T> {
        self.value
    }
}

// Operator sugar. These panic on dimension mismatch; use `arith` for the
// checked variant.
impl<T: Real> Add for &Jet3<T> {
    type Output = Jet3<T>;
    fn add(self, rhs: Self) -> Jet3<T> {
        assert_eq!(self.n, rhs.n, "jet dimension mismatch");
        self.zip_with(rhs, |x, y| x + y)
    }
}

impl<T: Real> Sub for &Jet3<T> {
    type Output = Jet3<T>;
    fn sub(self, rhs: Self) -> Jet3<T> {
        assert_eq!(self.n, rhs.n, "jet dimension mismatch");
        self.zip_with(rhs, |x, y| x - y)
    }
}

impl<T: Real> Mul for &Jet3<T> {
    type Output = Jet3<T>;
    fn mul(self, rhs: Self) -> Jet3<T> {
        assert_eq!(self.n, rhs.n, "jet dimension mismatch");
        self.mul_unchecked(rhs)
    }
}

impl<T: Real> Neg for &Jet3<T> {
    type Output = Jet3<T>;
    fn neg(self) -> Jet3<T> {
        self.map_coeffs(|x| -x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::cx;

    type J = Jet3<f64>;

    fn close(a: Cx<f64>, b: Cx<f64>, tol: f64) -> bool {
        (a - b).norm() <= tol
    }

    #[test]
    fn index_tables_are_dense() {
        for n in 1..=8 {
            let p: Vec<_> = pairs(n).map(|(i, j)| pair_index(n, i, j)).collect();
            assert_eq!(p, (0..pair_count(n)).collect::<Vec<_>>());
            let t: Vec<_> = triples(n).map(|(i, j, k)| triple_index(n, i, j, k)).collect();
            assert_eq!(t, (0..triple_count(n)).collect::<Vec<_>>());
            assert_eq!(pair_index(n, n - 1, 0), pair_index(n, 0, n - 1));
        }
        assert_eq!(triple_index(3, 2, 0, 1), triple_index(3, 0, 1, 2));
    }

    #[test]
    fn seed_variable_examples() {
        let j = seed_variable(0, cx::<f64>(0.3, 0.0), 2).unwrap();
        assert_eq!(j.value(), cx(0.3, 0.0));
        assert_eq!(j.grad(), &[cx(1.0, 0.0), cx(0.0, 0.0)]);
        assert_eq!(j.max_abs_diff(&j.clone().truncate(1)), 0.0);
        let j = seed_variable(1, cx::<f64>(0.1, 0.2), 2).unwrap();
        assert_eq!(j.value(), cx(0.1, 0.2));
        assert_eq!(j.grad(), &[cx(0.0, 0.0), cx(1.0, 0.0)]);
        assert_eq!(
            seed_variable::<f64>(2, czero(), 2),
            Err(Error::IndexOutOfRange { index: 2, n: 2 })
        );
        assert_eq!(
            seed_variable::<f64>(0, czero(), 1),
            Err(Error::DimensionTooSmall(1))
        );
    }

    #[test]
    fn product_of_coordinates() {
        let z1 = J::variable(0, cx(0.3, 0.0), 2).unwrap();
        let z2 = J::variable(1, cx(0.5, 0.0), 2).unwrap();
        let p = jet_arith(&z1, &z2, JetOp::Mul).unwrap();
        assert!(close(p.value(), cx(0.15, 0.0), 1e-15));
        assert!(close(p.grad_at(0), cx(0.5, 0.0), 1e-15));
        assert!(close(p.grad_at(1), cx(0.3, 0.0), 1e-15));
        assert_eq!(p.hess(0, 1), cx(1.0, 0.0));
        assert_eq!(p.hess(0, 0), czero());
        assert!(triples(2).all(|(i, j, k)| p.third(i, j, k) == czero()));
    }

    #[test]
    fn one_over_one() {
        let one = J::constant(2, cx(1.0, 0.0));
        let q = jet_arith(&one, &one, JetOp::Div).unwrap();
        assert_eq!(q, one);
    }

    #[test]
    fn cube_of_sum_has_third_derivatives_six() {
        // (z1 + z2)^3: every third partial equals 3! = 6.
        let z1 = J::variable(0, cx(0.2, 0.0), 2).unwrap();
        let z2 = J::variable(1, cx(0.1, 0.0), 2).unwrap();
        let s = &z1 + &z2;
        let c = &(&s * &s) * &s;
        for (i, j, k) in triples(2) {
            assert!(close(c.third(i, j, k), cx(6.0, 0.0), 1e-13));
        }
        // second derivatives 6(z1+z2) = 1.8
        assert!(close(c.hess(0, 1), cx(1.8, 0.0), 1e-13));
    }

    #[test]
    fn division_by_near_zero_is_an_error() {
        let one = J::constant(2, cx(1.0, 0.0));
        let tiny = J::constant(2, cx(1e-15, 0.0));
        match jet_arith(&one, &tiny, JetOp::Div) {
            Err(Error::SingularDivisor { modulus }) => assert!((modulus - 1e-15).abs() < 1e-20),
            other => panic!("unexpected {other:?}"),
        }
        let a = J::constant(3, cx(1.0, 0.0));
        assert!(matches!(
            jet_arith(&one, &a, JetOp::Add),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn elementary_examples() {
        let one = J::constant(2, cx(1.0, 0.0));
        let l = jet_elementary(&one, Elementary::Log).unwrap();
        assert_eq!(l, J::constant(2, czero()));

        let eight = J::constant(2, cx(8.0, 0.0));
        let p = jet_elementary(&eight, Elementary::Pow(-1.0 / 3.0)).unwrap();
        assert!(close(p.value(), cx(0.5, 0.0), 1e-15));

        // log(1 - 0.5 z1) at z1 = 0.4: derivative -0.5/0.8
        let z1 = J::variable(0, cx(0.4, 0.0), 2).unwrap();
        let lin = z1.scale_by(cx(-0.5, 0.0)).add_const(cx(1.0, 0.0));
        let lg = jet_elementary(&lin, Elementary::Log).unwrap();
        assert!(close(lg.grad_at(0), cx(-0.625, 0.0), 1e-15));
        // second and third derivatives: -a^2/(1-az)^2, -2a^3/(1-az)^3
        assert!(close(lg.hess(0, 0), cx(-0.25 / 0.64, 0.0), 1e-14));
        assert!(close(lg.third(0, 0, 0), cx(-0.25 / 0.512, 0.0), 1e-14));

        assert!(matches!(
            jet_elementary(&J::constant(2, czero()), Elementary::Log),
            Err(Error::SingularArgument { func: "log", .. })
        ));
    }

    #[test]
    fn derivative_by_multi_index() {
        let z1 = J::variable(0, cx(0.2, 0.1), 3).unwrap();
        let z3 = J::variable(2, cx(-0.3, 0.0), 3).unwrap();
        let f = &(&z1 * &z1) * &z3;
        assert!(close(f.derivative(&[2, 0, 1]).unwrap(), cx(2.0, 0.0), 1e-15));
        assert!(close(f.derivative(&[1, 0, 1]).unwrap(), z1.value() * 2.0, 1e-15));
        assert!(f.derivative(&[2, 2, 0]).is_err());
        assert!(f.derivative(&[1, 0]).is_err());
    }

    #[test]
    fn partial_lowers_order() {
        let z1 = J::variable(0, cx(0.2, 0.0), 2).unwrap();
        let z2 = J::variable(1, cx(0.4, 0.0), 2).unwrap();
        let f = &(&z1 * &z1) * &z2; // z1^2 z2
        let d1 = f.partial(0); // 2 z1 z2
        assert!(close(d1.value(), cx(0.16, 0.0), 1e-15));
        assert!(close(d1.grad_at(0), cx(0.8, 0.0), 1e-15));
        assert!(close(d1.grad_at(1), cx(0.4, 0.0), 1e-15));
        assert!(close(d1.hess(0, 1), cx(2.0, 0.0), 1e-15));
    }

    #[test]
    fn works_in_single_precision() {
        let z = Jet3::<f32>::variable(0, Cx::new(0.5f32, 0.0), 2).unwrap();
        let inv = z.recip().unwrap();
        assert!((inv.grad_at(0).re + 4.0).abs() < 1e-5);
    }
}

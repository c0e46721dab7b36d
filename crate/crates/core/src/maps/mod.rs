//! Locally biholomorphic maps of the polydisk as closed expression trees.
//!
//! A [`MapExpr`] is evaluated either pointwise ([`eval_map`]) or as a
//! third-order jet ([`map_jet`]); both go through the same tree walk over
//! the [`Field`] abstraction.

pub mod catalog;
pub mod format;

use crate::error::{Error, Result};
use crate::field::Field;
use crate::jets::Jet3;
use crate::linalg::{self, CMatrix};
use crate::scalar::{cone, czero, from_usize, lit, to_f64, Cx, Real};

/// Default bound on the total degree of a polynomial term.
pub const MAX_POLY_DEGREE: u32 = 6;

/// `|J_f|` below this marks a jet as (numerically) singular.
pub const JACOBIAN_FLAG_THRESHOLD: f64 = 1e-10;

/// Tolerance used when checking `f(0) = 0`, `Df(0) = I`.
pub const NORMALIZATION_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct PolyTerm<T: Real> {
    pub target: usize,
    pub exponents: Vec<u32>,
    pub coeff: Cx<T>,
}

impl<T: Real> PolyTerm<T> {
    pub fn new(target: usize, exponents: Vec<u32>, coeff: Cx<T>) -> Self {
        PolyTerm {
            target,
            exponents,
            coeff,
        }
    }

    pub fn degree(&self) -> u32 {
        self.exponents.iter().sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum MapKind<T: Real> {
    Identity,
    /// Rows are the affine forms `l_0, …, l_n`, each `[c, a_1, …, a_n]`;
    /// the map is `(l_1/l_0, …, l_n/l_0)`.
    Moebius { matrix: CMatrix<T> },
    /// Componentwise disk automorphism `(z_j − a_j)/(1 − conj(a_j) z_j)`.
    Automorphism { a: Vec<Cx<T>> },
    /// `w ↦ w / (1 + a·w)`.
    Normalizer { a: Vec<Cx<T>> },
    /// `z ↦ inner(s z)/s`.
    Dilation { s: T, inner: Box<MapExpr<T>> },
    /// `outer ∘ inner`.
    Compose {
        outer: Box<MapExpr<T>>,
        inner: Box<MapExpr<T>>,
    },
    /// Sum of monomials per component; there is no implicit identity part.
    Polynomial { terms: Vec<PolyTerm<T>> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct MapExpr<T: Real> {
    n: usize,
    kind: MapKind<T>,
}

fn check_n(n: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::DimensionTooSmall(n));
    }
    Ok(())
}

fn check_len(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch { expected, found });
    }
    Ok(())
}

impl<T: Real> MapExpr<T> {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn kind(&self) -> &MapKind<T> {
        &self.kind
    }

    pub fn identity(n: usize) -> Result<Self> {
        check_n(n)?;
        Ok(MapExpr {
            n,
            kind: MapKind::Identity,
        })
    }

    /// Möbius map from its `(n+1) × (n+1)` coefficient matrix; requires a
    /// nonzero determinant.
    pub fn moebius(matrix: CMatrix<T>) -> Result<Self> {
        let m = matrix.len();
        if m < 3 {
            return Err(Error::DimensionTooSmall(m.saturating_sub(1)));
        }
        for row in &matrix {
            check_len(m, row.len())?;
        }
        let d = linalg::det(&matrix);
        let scale = matrix
            .iter()
            .flatten()
            .fold(T::zero(), |acc, z| acc.max(z.norm()));
        if !(d.norm() > lit::<T>(1e-12) * scale.powi(m as i32)) {
            return Err(Error::InvalidMap(format!(
                "Moebius matrix is singular (|det| = {:e})",
                to_f64(d.norm())
            )));
        }
        Ok(MapExpr {
            n: m - 1,
            kind: MapKind::Moebius { matrix },
        })
    }

    /// `z ↦ z / (1 − a·z)`.
    pub fn moebius_linear_form(a: &[Cx<T>]) -> Result<Self> {
        let n = a.len();
        check_n(n)?;
        let mut matrix = vec![vec![czero(); n + 1]; n + 1];
        matrix[0][0] = cone();
        for j in 0..n {
            matrix[0][j + 1] = -a[j];
            matrix[j + 1][j + 1] = cone();
        }
        Self::moebius(matrix)
    }

    pub fn automorphism(a: Vec<Cx<T>>) -> Result<Self> {
        let n = a.len();
        check_n(n)?;
        if let Some(bad) = a.iter().find(|ai| !(ai.norm() < T::one())) {
            return Err(Error::InvalidMap(format!(
                "automorphism parameter must lie in the open polydisk, |a_i| = {}",
                to_f64(bad.norm())
            )));
        }
        Ok(MapExpr {
            n,
            kind: MapKind::Automorphism { a },
        })
    }

    pub fn normalizer(a: Vec<Cx<T>>) -> Result<Self> {
        let n = a.len();
        check_n(n)?;
        Ok(MapExpr {
            n,
            kind: MapKind::Normalizer { a },
        })
    }

    pub fn dilation(s: T, inner: MapExpr<T>) -> Result<Self> {
        if !(s > T::zero() && s <= T::one()) {
            return Err(Error::InvalidMap(format!(
                "dilation factor must lie in (0, 1], got {}",
                to_f64(s)
            )));
        }
        Ok(MapExpr {
            n: inner.n,
            kind: MapKind::Dilation {
                s,
                inner: Box::new(inner),
            },
        })
    }

    pub fn compose(outer: MapExpr<T>, inner: MapExpr<T>) -> Result<Self> {
        check_len(outer.n, inner.n)?;
        Ok(MapExpr {
            n: outer.n,
            kind: MapKind::Compose {
                outer: Box::new(outer),
                inner: Box::new(inner),
            },
        })
    }

    pub fn polynomial(n: usize, terms: Vec<PolyTerm<T>>) -> Result<Self> {
        Self::polynomial_with_degree(n, terms, MAX_POLY_DEGREE)
    }

    pub fn polynomial_with_degree(
        n: usize,
        terms: Vec<PolyTerm<T>>,
        max_degree: u32,
    ) -> Result<Self> {
        check_n(n)?;
        for t in &terms {
            if t.target >= n {
                return Err(Error::IndexOutOfRange { index: t.target, n });
            }
            check_len(n, t.exponents.len())?;
            if t.degree() > max_degree {
                return Err(Error::InvalidMap(format!(
                    "polynomial term of degree {} exceeds the bound {max_degree}",
                    t.degree()
                )));
            }
        }
        Ok(MapExpr {
            n,
            kind: MapKind::Polynomial { terms },
        })
    }

    /// `z ↦ z + Σ extra`, i.e. the identity plus the given monomials.
    pub fn perturbed_identity(n: usize, extra: Vec<PolyTerm<T>>) -> Result<Self> {
        let mut terms: Vec<PolyTerm<T>> = (0..n)
            .map(|i| {
                let mut e = vec![0; n];
                e[i] = 1;
                PolyTerm::new(i, e, cone())
            })
            .collect();
        terms.extend(extra);
        Self::polynomial(n, terms)
    }

    /// Generic evaluation over plain values or jets.
    pub fn eval_with<F: Field<T>>(&self, z: &[F]) -> Result<Vec<F>> {
        check_len(self.n, z.len())?;
        match &self.kind {
            MapKind::Identity => Ok(z.to_vec()),
            MapKind::Moebius { matrix } => {
                let forms: Vec<F> = matrix
                    .iter()
                    .map(|row| {
                        let mut acc = z[0].constant_like(row[0]);
                        for (zj, c) in z.iter().zip(&row[1..]) {
                            acc = acc.add(&zj.scale(*c));
                        }
                        acc
                    })
                    .collect();
                let den = &forms[0];
                forms[1..].iter().map(|num| safe_div(num, den)).collect()
            }
            MapKind::Automorphism { a } => z
                .iter()
                .zip(a)
                .map(|(zj, aj)| {
                    let num = zj.add_const(-*aj);
                    let den = zj.scale(-aj.conj()).add_const(cone());
                    safe_div(&num, &den)
                })
                .collect(),
            MapKind::Normalizer { a } => {
                let mut den = z[0].constant_like(cone());
                for (wj, aj) in z.iter().zip(a) {
                    den = den.add(&wj.scale(*aj));
                }
                z.iter().map(|wj| safe_div(wj, &den)).collect()
            }
            MapKind::Dilation { s, inner } => {
                let sc = Cx::new(*s, T::zero());
                let scaled: Vec<F> = z.iter().map(|x| x.scale(sc)).collect();
                let inv = Cx::new(T::one() / *s, T::zero());
                Ok(inner
                    .eval_with(&scaled)?
                    .into_iter()
                    .map(|x| x.scale(inv))
                    .collect())
            }
            MapKind::Compose { outer, inner } => outer.eval_with(&inner.eval_with(z)?),
            MapKind::Polynomial { terms } => {
                let mut out: Vec<F> = (0..self.n).map(|_| z[0].constant_like(czero())).collect();
                for t in terms {
                    let mut mono = z[0].constant_like(t.coeff);
                    for (zv, &e) in z.iter().zip(&t.exponents) {
                        if e > 0 {
                            mono = mono.mul(&zv.powi(e));
                        }
                    }
                    out[t.target] = out[t.target].add(&mono);
                }
                Ok(out)
            }
        }
    }
}

fn safe_div<T: Real, F: Field<T>>(num: &F, den: &F) -> Result<F> {
    num.div(den).map_err(|_| {
        let d = den.value();
        Error::SingularPoint {
            re: to_f64(d.re),
            im: to_f64(d.im),
        }
    })
}

/// `eval_map`: pointwise value `f(z)`.
pub fn eval_map<T: Real>(expr: &MapExpr<T>, z: &[Cx<T>]) -> Result<Vec<Cx<T>>> {
    if let Some(bad) = z.iter().find(|c| !(c.re.is_finite() && c.im.is_finite())) {
        return Err(Error::NonFinite(format!("evaluation point {bad}")));
    }
    expr.eval_with(z)
}

/// All partial derivatives through order 3 of every component at a point.
#[derive(Debug, Clone, PartialEq)]
pub struct MapJet<T: Real> {
    pub n: usize,
    pub components: Vec<Jet3<T>>,
    pub point: Vec<Cx<T>>,
    /// `|J_f(point)| < 1e-10`.
    pub singular: bool,
}

/// `map_jet`.
pub fn map_jet<T: Real>(expr: &MapExpr<T>, z: &[Cx<T>]) -> Result<MapJet<T>> {
    check_len(expr.n(), z.len())?;
    let seeds = Jet3::seed_point(z)?;
    let components = expr.eval_with(&seeds)?;
    let mut mj = MapJet {
        n: expr.n(),
        components,
        point: z.to_vec(),
        singular: false,
    };
    for c in &mj.components {
        if !c.max_abs().is_finite() {
            return Err(Error::NonFinite("map jet coefficient".into()));
        }
    }
    mj.singular = !(mj.jacobian_det().norm() >= lit::<T>(JACOBIAN_FLAG_THRESHOLD));
    Ok(mj)
}

impl<T: Real> MapJet<T> {
    pub fn value(&self) -> Vec<Cx<T>> {
        self.components.iter().map(|c| c.value()).collect()
    }

    /// `Df`, with entry `(l, i) = ∂f_l/∂z_i`.
    pub fn jacobian(&self) -> CMatrix<T> {
        self.components.iter().map(|c| c.grad().to_vec()).collect()
    }

    pub fn jacobian_det(&self) -> Cx<T> {
        linalg::det(&self.jacobian())
    }

    /// Inverse Jacobian; entry `(k, l) = ∂z_k/∂f_l`.
    pub fn inverse_jacobian(&self) -> Result<CMatrix<T>> {
        if self.singular {
            return Err(Error::SingularJacobian {
                modulus: to_f64(self.jacobian_det().norm()),
            });
        }
        linalg::inverse(&self.jacobian())
    }

    /// `∂²f_l/∂z_i∂z_j`.
    pub fn second(&self, l: usize, i: usize, j: usize) -> Cx<T> {
        self.components[l].hess(i, j)
    }

    /// `∇ log J_f`, from `∂_j log J = tr(Df⁻¹ ∂_j Df)`.
    pub fn grad_log_jacobian(&self) -> Result<Vec<Cx<T>>> {
        let inv = self.inverse_jacobian()?;
        let n = self.n;
        Ok((0..n)
            .map(|j| {
                let mut acc = czero();
                for k in 0..n {
                    for l in 0..n {
                        acc += inv[k][l] * self.second(l, k, j);
                    }
                }
                acc
            })
            .collect())
    }

    /// `∇ J_f = J_f ∇ log J_f`.
    pub fn grad_jacobian(&self) -> Result<Vec<Cx<T>>> {
        let j = self.jacobian_det();
        Ok(self
            .grad_log_jacobian()?
            .into_iter()
            .map(|g| g * j)
            .collect())
    }

    /// Jet of the Jacobian determinant `J_f`, exact through order 2 (its
    /// third-order part is not available from a third-order map jet).
    pub fn jacobian_jet(&self) -> Result<Jet3<T>> {
        let n = self.n;
        let m: Vec<Vec<Jet3<T>>> = (0..n)
            .map(|l| (0..n).map(|i| self.components[l].partial(i)).collect())
            .collect();
        Ok(linalg::det_generic(&m)?.truncate(2))
    }
}

/// Checks `f(0) = 0` and `Df(0) = I`, returning the jet at the origin.
pub fn check_normalized<T: Real>(f: &MapExpr<T>) -> Result<MapJet<T>> {
    let n = f.n();
    let zero = vec![czero(); n];
    let mj = map_jet(f, &zero)?;
    let tol = lit::<T>(NORMALIZATION_TOL);
    let v0 = crate::scalar::norm_inf(&mj.value());
    if !(v0 <= tol) {
        return Err(Error::NotNormalized(format!(
            "|f(0)|_inf = {:e}",
            to_f64(v0)
        )));
    }
    let jac = mj.jacobian();
    for (l, row) in jac.iter().enumerate() {
        for (i, d) in row.iter().enumerate() {
            let target = if l == i { cone() } else { czero() };
            if !((*d - target).norm() <= tol) {
                return Err(Error::NotNormalized(format!(
                    "Df(0)[{l}][{i}] = {d}, expected {target}"
                )));
            }
        }
    }
    Ok(mj)
}

/// `make_normalizer`: the Möbius map `T_a(w) = w/(1 + a·w)` with
/// `(n+1) a = ∇J_f(0)`, so that `T_a ∘ f` has vanishing Jacobian gradient at 0.
pub fn make_normalizer<T: Real>(f: &MapExpr<T>) -> Result<MapExpr<T>> {
    let mj = check_normalized(f)?;
    let grad = mj.grad_jacobian()?;
    let k = from_usize::<T>(f.n() + 1);
    MapExpr::normalizer(grad.into_iter().map(|g| g / k).collect())
}

/// `T_a ∘ f` for the normalizer of `f`.
pub fn normalize<T: Real>(f: &MapExpr<T>) -> Result<MapExpr<T>> {
    let t = make_normalizer(f)?;
    MapExpr::compose(t, f.clone())
}

/// Inverse of `Normalizer(a)`: `g ↦ g/(1 − a·g)`.
pub fn inverse_normalizer<T: Real>(a: &[Cx<T>]) -> Result<MapExpr<T>> {
    MapExpr::normalizer(a.iter().map(|x| -*x).collect())
}

/// `compose(g, f) = g ∘ f`.
pub fn compose<T: Real>(g: &MapExpr<T>, f: &MapExpr<T>) -> Result<MapExpr<T>> {
    MapExpr::compose(g.clone(), f.clone())
}

/// `dilate(f, s)`: `z ↦ f(s z)/s`.
pub fn dilate<T: Real>(f: &MapExpr<T>, s: T) -> Result<MapExpr<T>> {
    MapExpr::dilation(s, f.clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jets::cauchy_oracle;
    use crate::scalar::cx;

    type M = MapExpr<f64>;

    fn close_vec(a: &[Cx<f64>], b: &[Cx<f64>], tol: f64) -> bool {
        a.iter().zip(b).all(|(x, y)| (x - y).norm() <= tol)
    }

    #[test]
    fn identity_eval() {
        let id = M::identity(2).unwrap();
        let z = [cx(0.3, 0.0), cx(0.0, -0.4)];
        assert_eq!(eval_map(&id, &z).unwrap(), z.to_vec());
    }

    #[test]
    fn automorphism_moves_origin_to_minus_a() {
        let psi = M::automorphism(vec![cx(0.5, 0.0), cx(0.0, 0.0)]).unwrap();
        let v = eval_map(&psi, &[czero(), czero()]).unwrap();
        assert!(close_vec(&v, &[cx(-0.5, 0.0), czero()], 1e-15));
    }

    #[test]
    fn normalizer_example() {
        let t = M::normalizer(vec![cx(0.5, 0.0), czero()]).unwrap();
        let v = eval_map(&t, &[cx(1.0, 0.0), czero()]).unwrap();
        assert!(close_vec(&v, &[cx(1.0 / 1.5, 0.0), czero()], 1e-15));
    }

    #[test]
    fn invalid_constructions() {
        assert!(M::automorphism(vec![cx(1.0, 0.0), czero()]).is_err());
        assert!(M::identity(1).is_err());
        assert!(M::dilation(0.0, M::identity(2).unwrap()).is_err());
        assert!(M::dilation(1.5, M::identity(2).unwrap()).is_err());
        assert!(matches!(
            M::compose(M::identity(2).unwrap(), M::identity(3).unwrap()),
            Err(Error::DimensionMismatch { .. })
        ));
        let singular = vec![vec![cx(1.0, 0.0); 3]; 3];
        assert!(M::moebius(singular).is_err());
        let high = PolyTerm::new(0, vec![7, 0], cx(1.0, 0.0));
        assert!(M::polynomial(2, vec![high]).is_err());
        let bad_target = PolyTerm::new(2, vec![1, 0], cx(1.0, 0.0));
        assert!(M::polynomial(2, vec![bad_target]).is_err());
    }

    #[test]
    fn moebius_pole_reports_denominator() {
        let f = M::moebius_linear_form(&[cx(0.5, 0.0), czero()]).unwrap();
        match eval_map(&f, &[cx(2.0, 0.0), czero()]) {
            Err(Error::SingularPoint { re, im }) => {
                assert!(re.abs() < 1e-15 && im.abs() < 1e-15)
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn identity_jet() {
        let id = M::identity(3).unwrap();
        let z = [cx(0.1, 0.2), cx(-0.3, 0.0), cx(0.0, 0.5)];
        let mj = map_jet(&id, &z).unwrap();
        assert_eq!(mj.jacobian(), linalg::identity::<f64>(3));
        for c in &mj.components {
            assert_eq!(c.clone().truncate(1), *c);
        }
        assert!(!mj.singular);
    }

    #[test]
    fn dilation_of_identity_is_identity() {
        let g = dilate(&M::identity(2).unwrap(), 0.5).unwrap();
        let z = [cx(0.3, 0.1), cx(-0.2, 0.4)];
        let mj = map_jet(&g, &z).unwrap();
        assert!(close_vec(&mj.value(), &z, 1e-15));
        assert_eq!(mj.jacobian(), linalg::identity::<f64>(2));
    }

    #[test]
    fn automorphism_second_derivative_matches_oracle() {
        let psi = M::automorphism(vec![cx(0.5, 0.0), czero()]).unwrap();
        let z = [czero(), czero()];
        let mj = map_jet(&psi, &z).unwrap();
        // psi'' = 2 conj(a)(1-|a|^2)/(1 - conj(a) z)^3 = 2*0.5*0.75 at 0
        assert!((mj.second(0, 0, 0) - cx(0.75, 0.0)).norm() < 1e-14);
        let oracle = cauchy_oracle(&psi, &z, 0, &[2, 0]).unwrap();
        assert!((mj.second(0, 0, 0) - oracle).norm() < 1e-10);
        // Jacobian at the origin is diag(1 - |a_k|^2)
        let jac = mj.jacobian();
        assert!((jac[0][0] - cx(0.75, 0.0)).norm() < 1e-12);
        assert!((jac[1][1] - cx(1.0, 0.0)).norm() < 1e-12);
        assert!(jac[0][1].norm() < 1e-12 && jac[1][0].norm() < 1e-12);
    }

    #[test]
    fn normalizer_of_identity_is_trivial() {
        let t = make_normalizer(&M::identity(2).unwrap()).unwrap();
        match t.kind() {
            MapKind::Normalizer { a } => assert!(a.iter().all(|x| x.norm() == 0.0)),
            _ => panic!(),
        }
    }

    #[test]
    fn normalizer_of_linear_form_moebius() {
        let f = M::moebius_linear_form(&[cx(0.5, 0.0), czero()]).unwrap();
        let mj = map_jet(&f, &[czero(), czero()]).unwrap();
        let g = mj.grad_jacobian().unwrap();
        assert!(close_vec(&g, &[cx(1.5, 0.0), czero()], 1e-13));
        let t = make_normalizer(&f).unwrap();
        match t.kind() {
            MapKind::Normalizer { a } => assert!(close_vec(a, &[cx(0.5, 0.0), czero()], 1e-13)),
            _ => panic!(),
        }
        let g = normalize(&f).unwrap();
        let grad = map_jet(&g, &[czero(), czero()])
            .unwrap()
            .grad_jacobian()
            .unwrap();
        assert!(grad.iter().all(|c| c.norm() < 1e-9));
    }

    #[test]
    fn make_normalizer_rejects_unnormalized() {
        let psi = M::automorphism(vec![cx(0.5, 0.0), czero()]).unwrap();
        assert!(matches!(make_normalizer(&psi), Err(Error::NotNormalized(_))));
    }

    #[test]
    fn inverse_normalizer_round_trip() {
        let a = vec![cx(0.2, 0.1), cx(-0.3, 0.0)];
        let t = M::normalizer(a.clone()).unwrap();
        let back = compose(&inverse_normalizer(&a).unwrap(), &t).unwrap();
        let z = [cx(0.4, -0.2), cx(0.1, 0.3)];
        assert!(close_vec(&eval_map(&back, &z).unwrap(), &z, 1e-14));
    }

    #[test]
    fn real_automorphism_is_an_involution_pair() {
        let a = vec![cx(0.5, 0.0), czero()];
        let neg: Vec<_> = a.iter().map(|x| -x).collect();
        let round = compose(
            &M::automorphism(a).unwrap(),
            &M::automorphism(neg).unwrap(),
        )
        .unwrap();
        for k in 0..10 {
            let t = k as f64 * 0.6;
            let z = [cx(0.7 * t.cos(), 0.7 * t.sin()), cx(0.3 * t.sin(), -0.2)];
            assert!(close_vec(&eval_map(&round, &z).unwrap(), &z, 1e-10));
        }
    }

    #[test]
    fn dilation_factor_one_is_neutral() {
        let f = catalog::perturbation(2, 0.05).unwrap();
        let g = dilate(&f, 1.0).unwrap();
        for k in 0..20 {
            let t = k as f64 * 0.31;
            let z = [cx(0.6 * t.cos(), 0.5 * t.sin()), cx(0.4 * (2.0 * t).sin(), 0.1)];
            let a = eval_map(&f, &z).unwrap();
            let b = eval_map(&g, &z).unwrap();
            assert!(close_vec(&a, &b, 1e-12));
        }
    }

    #[test]
    fn jacobian_jet_matches_finite_differences() {
        let f = catalog::perturbation(2, 0.05).unwrap();
        let z = [cx(0.3, 0.1), cx(-0.2, 0.25)];
        let jj = map_jet(&f, &z).unwrap().jacobian_jet().unwrap();
        let h = 1e-5;
        let det_at = |w: &[Cx<f64>]| map_jet(&f, w).unwrap().jacobian_det();
        for i in 0..2 {
            let mut p = z;
            let mut m = z;
            p[i] += cx(h, 0.0);
            m[i] -= cx(h, 0.0);
            let fd = (det_at(&p) - det_at(&m)) / (2.0 * h);
            assert!((fd - jj.grad_at(i)).norm() < 1e-8);
        }
        assert!((jj.value() - map_jet(&f, &z).unwrap().jacobian_det()).norm() < 1e-15);
    }
}

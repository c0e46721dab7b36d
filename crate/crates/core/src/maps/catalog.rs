//! Built-in map families used by the checks, the acceptance suite and the CLI.

use rand::Rng;

use super::{MapExpr, PolyTerm};
use crate::error::Result;
use crate::scalar::{cone, cx, czero, lit, Cx, Real};

/// A named catalog map.
#[derive(Debug, Clone)]
pub struct CatalogEntry<T: Real> {
    pub name: &'static str,
    pub map: MapExpr<T>,
}

fn unit<T: Real>(n: usize, i: usize, pow: u32) -> Vec<u32> {
    let mut e = vec![0; n];
    e[i] = pow;
    e
}

/// `z + eps (z_2², z_3², …, z_1²)`: each component gets the square of the
/// next coordinate (cyclically).
pub fn perturbation<T: Real>(n: usize, eps: f64) -> Result<MapExpr<T>> {
    let extra = (0..n)
        .map(|i| PolyTerm::new(i, unit::<T>(n, (i + 1) % n, 2), cx(eps, 0.0)))
        .collect();
    MapExpr::perturbed_identity(n, extra)
}

/// Identity plus mixed cubic terms `eps·z_i z_{i+1}²` and `eps/2·z_i³` with a
/// complex phase.
pub fn cubic_perturbation<T: Real>(n: usize, eps: f64) -> Result<MapExpr<T>> {
    let mut extra = Vec::new();
    for i in 0..n {
        let mut e = vec![0; n];
        e[i] += 1;
        e[(i + 1) % n] += 2;
        extra.push(PolyTerm::new(i, e, cx(eps, 0.0)));
        extra.push(PolyTerm::new((i + 1) % n, unit::<T>(n, i, 3), cx(0.0, eps / 2.0)));
    }
    MapExpr::perturbed_identity(n, extra)
}

fn cvec<T: Real>(v: &[(f64, f64)]) -> Vec<Cx<T>> {
    v.iter().map(|&(r, i)| cx(r, i)).collect()
}

/// Fixed Möbius map with a genuinely projective denominator.
pub fn general_moebius<T: Real>(n: usize) -> Result<MapExpr<T>> {
    let mut m = vec![vec![czero::<T>(); n + 1]; n + 1];
    m[0][0] = cone();
    for j in 0..n {
        m[0][j + 1] = cx(0.15 / (j + 1) as f64, -0.1 * j as f64);
    }
    for i in 0..n {
        m[i + 1][0] = cx(0.05 * i as f64, 0.0);
        for j in 0..n {
            m[i + 1][j + 1] = if i == j {
                cx(1.0, 0.1)
            } else {
                cx(0.2, -0.05 * (i + j) as f64)
            };
        }
    }
    MapExpr::moebius(m)
}

/// The catalog in dimension `n` (2 or 3). All maps are holomorphic on a
/// neighbourhood of the closed polydisk of radius 0.9.
pub fn catalog<T: Real>(n: usize) -> Result<Vec<CatalogEntry<T>>> {
    let mut a1 = vec![(0.0, 0.0); n];
    a1[0] = (0.5, 0.0);
    let mut a2 = vec![(0.0, 0.0); n];
    a2[0] = (0.3, 0.1);
    a2[1] = (0.0, -0.2);
    let mut a3 = vec![(0.0, 0.0); n];
    a3[0] = (0.4, 0.0);
    a3[n - 1] = (0.0, 0.3);
    let mut lin = vec![(0.0, 0.0); n];
    lin[0] = (0.5, 0.0);
    let mut norm_a = vec![(0.0, 0.0); n];
    norm_a[0] = (0.2, 0.0);
    norm_a[1] = (0.0, -0.1);
    let mut small_a = vec![(0.0, 0.0); n];
    small_a[0] = (0.2, 0.0);
    small_a[n - 1] = (0.1, 0.1);

    let entries = vec![
        ("identity", MapExpr::identity(n)?),
        ("moebius_linear", MapExpr::moebius_linear_form(&cvec(&lin))?),
        ("moebius_general", general_moebius(n)?),
        ("automorphism_real", MapExpr::automorphism(cvec(&a1))?),
        ("automorphism_complex", MapExpr::automorphism(cvec(&a2))?),
        ("normalizer", MapExpr::normalizer(cvec(&norm_a))?),
        (
            "dilated_automorphism",
            MapExpr::dilation(lit(0.7), MapExpr::automorphism(cvec(&a3))?)?,
        ),
        ("perturbation", perturbation(n, 0.05)?),
        ("cubic_perturbation", cubic_perturbation(n, 0.03)?),
        (
            "automorphism_after_perturbation",
            MapExpr::compose(MapExpr::automorphism(cvec(&small_a))?, perturbation(n, 0.05)?)?,
        ),
        (
            "moebius_after_perturbation",
            MapExpr::compose(general_moebius(n)?, cubic_perturbation(n, 0.03)?)?,
        ),
    ];
    Ok(entries
        .into_iter()
        .map(|(name, map)| CatalogEntry { name, map })
        .collect())
}

fn rand_c<T: Real, R: Rng + ?Sized>(rng: &mut R, scale: f64) -> Cx<T> {
    cx(rng.gen_range(-scale..scale), rng.gen_range(-scale..scale))
}

/// Random Möbius map `(l_1/l_0, …)` whose denominator stays away from zero on
/// the unit polydisk (`Σ|coeff| ≤ 0.8` in `l_0`).
pub fn random_moebius<T: Real, R: Rng + ?Sized>(rng: &mut R, n: usize) -> Result<MapExpr<T>> {
    loop {
        let mut m = vec![vec![czero::<T>(); n + 1]; n + 1];
        m[0][0] = cone();
        for j in 0..n {
            m[0][j + 1] = rand_c(rng, 0.8 / (n as f64 * std::f64::consts::SQRT_2));
        }
        for i in 1..=n {
            for j in 0..=n {
                m[i][j] = rand_c(rng, 1.0);
            }
            m[i][i] += cx(1.5, 0.0);
        }
        if let Ok(f) = MapExpr::moebius(m) {
            return Ok(f);
        }
    }
}

/// Random point of the polydisk with `|z_i| ≤ radius`.
pub fn random_point<T: Real, R: Rng + ?Sized>(rng: &mut R, n: usize, radius: f64) -> Vec<Cx<T>> {
    (0..n)
        .map(|_| {
            let r = radius * rng.gen::<f64>().sqrt();
            let th = rng.gen_range(0.0..std::f64::consts::TAU);
            cx(r * th.cos(), r * th.sin())
        })
        .collect()
}

/// Random polydisk automorphism with `|a_i| ≤ max_abs`.
pub fn random_automorphism<T: Real, R: Rng + ?Sized>(
    rng: &mut R,
    n: usize,
    max_abs: f64,
) -> Result<MapExpr<T>> {
    MapExpr::automorphism(random_point(rng, n, max_abs))
}

/// Random tangent vector with entries in the square `[-1, 1]²`.
pub fn random_vector<T: Real, R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<Cx<T>> {
    (0..n).map(|_| rand_c(rng, 1.0)).collect()
}

//! Partial derivatives from nested discrete Cauchy integrals.
//!
//! For a function holomorphic on a closed polydisk of radii `r_i` around `z`,
//! the trapezoid rule on the circles `|w_i − z_i| = r_i` converges
//! geometrically in the node count. Only variables with a nonzero
//! differentiation order get a contour; the others are held at `z_i`.

use crate::error::{Error, Result};
use crate::maps::{eval_map, MapExpr};
use crate::scalar::{czero, from_usize, lit, to_f64, Cx, Real};

/// Quadrature settings. `radii = None` selects
/// `r_i = min(0.5 (1 − |z_i|), 0.25)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CauchyConfig<T: Real> {
    pub nodes: usize,
    pub radii: Option<Vec<T>>,
}

impl<T: Real> Default for CauchyConfig<T> {
    fn default() -> Self {
        CauchyConfig {
            nodes: 64,
            radii: None,
        }
    }
}

pub const MIN_NODES: usize = 32;

fn default_radius<T: Real>(zi: Cx<T>) -> T {
    (lit::<T>(0.5) * (T::one() - zi.norm())).min(lit(0.25))
}

fn factorial(k: usize) -> usize {
    (1..=k).product()
}

/// `cauchy_oracle` with default quadrature.
pub fn cauchy_oracle<T: Real>(
    map: &MapExpr<T>,
    z: &[Cx<T>],
    component: usize,
    multi_index: &[usize],
) -> Result<Cx<T>> {
    cauchy_oracle_with(map, z, component, multi_index, &CauchyConfig::default())
}

/// Derivative `∂^multi_index f_component (z)`.
pub fn cauchy_oracle_with<T: Real>(
    map: &MapExpr<T>,
    z: &[Cx<T>],
    component: usize,
    multi_index: &[usize],
    cfg: &CauchyConfig<T>,
) -> Result<Cx<T>> {
    let n = map.n();
    if component >= n {
        return Err(Error::IndexOutOfRange { index: component, n });
    }
    Ok(cauchy_all_components(map, z, multi_index, cfg)?[component])
}

/// Same quadrature for every component at once.
pub fn cauchy_all_components<T: Real>(
    map: &MapExpr<T>,
    z: &[Cx<T>],
    multi_index: &[usize],
    cfg: &CauchyConfig<T>,
) -> Result<Vec<Cx<T>>> {
    let n = map.n();
    if z.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: z.len() });
    }
    if multi_index.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: multi_index.len(),
        });
    }
    let order: usize = multi_index.iter().sum();
    if order > 3 {
        return Err(Error::InvalidParameter(format!(
            "derivative order {order} exceeds 3"
        )));
    }
    if cfg.nodes < MIN_NODES {
        return Err(Error::InvalidParameter(format!(
            "at least {MIN_NODES} quadrature nodes required, got {}",
            cfg.nodes
        )));
    }
    let radii: Vec<T> = match &cfg.radii {
        Some(r) if r.len() == n => r.clone(),
        Some(r) => {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: r.len(),
            })
        }
        None => z.iter().map(|zi| default_radius(*zi)).collect(),
    };
    let active: Vec<usize> = (0..n).filter(|&v| multi_index[v] > 0).collect();
    for &v in &active {
        if !(radii[v] > T::zero()) {
            return Err(Error::ContourRadius {
                radius: to_f64(radii[v]),
                reason: format!("nonpositive radius for variable {v}"),
            });
        }
    }

    let m = cfg.nodes;
    let step = T::TAU() / from_usize::<T>(m);
    let roots: Vec<Cx<T>> = (0..m)
        .map(|k| Cx::from_polar(T::one(), step * from_usize::<T>(k)))
        .collect();

    let total = m.pow(active.len() as u32);
    let mut acc = vec![czero::<T>(); n];
    let mut w = z.to_vec();
    for flat in 0..total {
        let mut rest = flat;
        let mut weight = Cx::new(T::one(), T::zero());
        for &v in &active {
            let k = rest % m;
            rest /= m;
            let offset = roots[k] * radii[v];
            w[v] = z[v] + offset;
            // (r ω^k)^{-α}
            weight = weight * offset.inv().powu(multi_index[v] as u32);
        }
        let f = eval_map(map, &w).map_err(|e| Error::ContourRadius {
            radius: to_f64(active.iter().map(|&v| radii[v]).fold(T::zero(), T::max)),
            reason: e.to_string(),
        })?;
        for (a, fi) in acc.iter_mut().zip(&f) {
            *a += *fi * weight;
        }
    }
    let norm = from_usize::<T>(
        multi_index.iter().map(|&k| factorial(k)).product::<usize>(),
    ) / from_usize::<T>(total);
    Ok(acc.into_iter().map(|a| a * norm).collect())
}

//! Order of the family: `|∇J_f(0)|` for Möbius maps and searched families,
//! the dilation contraction of the Schwarzian norm, growth bounds in `α`,
//! and empirical covering radii.
//!
//! Search values are lower bounds, formula values are upper bounds; the two
//! are never merged into one number.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bergman::{sup_norm_with, sweep_options, sweep_points, GridSpec, NormOptions};
use crate::error::{Error, Result};
use crate::linalg::min_singular_value;
use crate::maps::{check_normalized, eval_map, inverse_normalizer, map_jet, MapExpr, PolyTerm};
use crate::scalar::{cx, czero, from_usize, lit, norm2, norm_inf, to_f64, Cx, Real};

/// `(n+1)√(Σ|a_i|²)`, the value of `|∇J_f(0)|` for `f = z/(1 − a·z)`.
pub fn moebius_objective(a: &[f64]) -> f64 {
    (a.len() as f64 + 1.0) * a.iter().map(|x| x * x).sum::<f64>().sqrt()
}

#[derive(Debug, Clone, PartialEq)]
pub struct MoebiusOrder {
    pub n: usize,
    /// Closed form `n + 1`.
    pub value: f64,
    /// Best value found by projected ascent over `Σ|a_i| ≤ 1`.
    pub numeric: f64,
    /// Moduli `|a_i|` of the extremal found numerically.
    pub extremal: Vec<f64>,
}

// Euclidean projection onto {p ≥ 0, Σ p ≤ 1}.
fn project_capped_simplex(p: &mut [f64]) {
    for x in p.iter_mut() {
        *x = x.max(0.0);
    }
    if p.iter().sum::<f64>() <= 1.0 {
        return;
    }
    let mut sorted: Vec<f64> = p.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut acc = 0.0;
    let mut theta = 0.0;
    for (k, v) in sorted.iter().enumerate() {
        acc += v;
        let t = (acc - 1.0) / (k + 1) as f64;
        if v - t > 0.0 {
            theta = t;
        }
    }
    for x in p.iter_mut() {
        *x = (*x - theta).max(0.0);
    }
}

/// `moebius_order`: maximizes `(n+1)|a|` over `Σ|a_i| ≤ 1` (phases do not
/// matter). The maximum `n + 1` is attained at a single `|a_i| = 1`.
pub fn moebius_order(n: usize) -> Result<MoebiusOrder> {
    if n < 2 {
        return Err(Error::DimensionTooSmall(n));
    }
    let mut best = (f64::NEG_INFINITY, vec![0.0; n]);
    for start in 0..n {
        // tilted interior start: the barycenter is a stationary point
        let mut p: Vec<f64> = (0..n)
            .map(|i| if i == start { 2.0 } else { 1.0 + 0.1 * i as f64 } / (2.0 * n as f64))
            .collect();
        project_capped_simplex(&mut p);
        for _ in 0..10_000 {
            let nrm = p.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-300);
            let mut q: Vec<f64> = p.iter().map(|x| x + 0.5 * x / nrm).collect();
            project_capped_simplex(&mut q);
            let moved = q.iter().zip(&p).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            p = q;
            if moved < 1e-15 {
                break;
            }
        }
        let v = moebius_objective(&p);
        if v > best.0 {
            best = (v, p);
        }
    }
    Ok(MoebiusOrder {
        n,
        value: (n + 1) as f64,
        numeric: best.0,
        extremal: best.1,
    })
}

/// `grad_jacobian_at_zero`: `∇J_f(0)` for a normalized map.
pub fn grad_jacobian_at_zero<T: Real>(f: &MapExpr<T>) -> Result<Vec<Cx<T>>> {
    check_normalized(f)?.grad_jacobian()
}

/// `C(r) = (1−r²)/(1−5r²)`.
pub fn c_of_r<T: Real>(r: T) -> Result<T> {
    check_restricted_radius(r)?;
    let r2 = r * r;
    Ok((T::one() - r2) / (T::one() - lit::<T>(5.0) * r2))
}

fn check_restricted_radius<T: Real>(r: T) -> Result<()> {
    if !(r >= T::zero() && r * r < lit::<T>(0.2)) {
        return Err(Error::InvalidParameter(format!("need 0 <= r and r^2 < 1/5, got r = {r}")));
    }
    Ok(())
}

/// `s((1−s²r²)/(1−r²))²`.
pub fn dilation_factor<T: Real>(r: T, s: T) -> T {
    let k = (T::one() - s * s * r * r) / (T::one() - r * r);
    s * k * k
}

#[derive(Debug, Clone, PartialEq)]
pub struct DilationReport<T: Real> {
    pub r: T,
    pub s: T,
    pub factor: T,
    /// Sup-norm of `f` over the radius-`r` grid and its image under `z ↦ sz`.
    pub sup_f: T,
    /// Sup-norm of `g(z) = f(sz)/s` over the radius-`r` grid.
    pub sup_g: T,
    /// `sup_g/sup_f`; zero when both vanish to 1e-9.
    pub ratio: T,
    pub ratio_ok: bool,
    pub grad_f: T,
    pub grad_g: T,
    /// `| |∇J_g(0)| − s|∇J_f(0)| |`.
    pub grad_residual: T,
    pub grad_ok: bool,
    pub ok: bool,
}

/// Tolerance on the measured dilation ratio.
pub const DILATION_RATIO_TOL: f64 = 1e-7;
/// Tolerance on the `∇J` scaling identity.
pub const DILATION_GRAD_TOL: f64 = 1e-10;

/// `dilation_contraction_check`.
///
/// `f` is swept over the grid of radius `r` and over the same grid scaled by
/// `s` (plus `s` times the witness of `g`): the Schwarzian of `g` at `z` is
/// controlled by that of `f` at `sz`, so this keeps the measured ratio
/// comparable with the predicted factor.
pub fn dilation_contraction_check<T: Real>(
    f: &MapExpr<T>,
    r: T,
    s: T,
    grid: &GridSpec,
    opts: &NormOptions,
) -> Result<DilationReport<T>> {
    check_restricted_radius(r)?;
    if !(s > T::zero() && s <= T::one()) {
        return Err(Error::InvalidParameter(format!("dilation s must lie in (0, 1], got {s}")));
    }
    let spec = GridSpec {
        radius: to_f64(r),
        ..*grid
    };
    let g = crate::maps::dilate(f, s)?;
    let rg = sup_norm_with(&g, &spec, opts)?;
    let rf = sup_norm_with(f, &spec, opts)?;
    let mut scaled: Vec<Vec<Cx<T>>> = crate::bergman::grid_points::<T>(f.n(), &spec)
        .into_iter()
        .map(|z| z.into_iter().map(|c| c * s).collect())
        .collect();
    scaled.push(rg.witness_z.iter().map(|c| *c * s).collect());
    let (extra, _) = sweep_points(f, &scaled, opts);
    let mut sup_f = rf.value;
    if let Some((v, _, _)) = extra {
        sup_f = sup_f.max(v);
    }
    let sup_g = rg.value;
    let tiny = lit::<T>(1e-9);
    let ratio = if sup_f > tiny {
        sup_g / sup_f
    } else if sup_g <= tiny {
        T::zero()
    } else {
        T::infinity()
    };
    let factor = dilation_factor(r, s);
    let ratio_ok = ratio <= factor + lit(DILATION_RATIO_TOL);
    let zero = vec![czero::<T>(); f.n()];
    let grad_f = norm2(&map_jet(f, &zero)?.grad_jacobian()?);
    let grad_g = norm2(&map_jet(&g, &zero)?.grad_jacobian()?);
    let grad_residual = (grad_g - s * grad_f).abs();
    let grad_ok = grad_residual <= lit(DILATION_GRAD_TOL);
    Ok(DilationReport {
        r,
        s,
        factor,
        sup_f,
        sup_g,
        ratio,
        ratio_ok,
        grad_f,
        grad_g,
        grad_residual,
        grad_ok,
        ok: ratio_ok && grad_ok,
    })
}

/// `growth_bound`: `μ₁ (α/α₁)^{C(r)}`.
pub fn growth_bound<T: Real>(alpha: T, alpha1: T, mu1: T, r: T) -> Result<T> {
    let c = c_of_r(r)?;
    if !(alpha1 > T::zero() && alpha >= alpha1) {
        return Err(Error::InvalidParameter(format!(
            "need alpha >= alpha1 > 0, got alpha = {alpha}, alpha1 = {alpha1}"
        )));
    }
    if !(mu1 > T::zero()) {
        return Err(Error::InvalidParameter(format!("mu1 must be positive, got {mu1}")));
    }
    Ok(mu1 * (alpha / alpha1).powf(c))
}

#[derive(Debug, Clone, PartialEq)]
pub struct OrderReport<T: Real> {
    pub n: usize,
    pub alpha: T,
    pub r: T,
    /// Best `|∇J_f(0)|` found.
    pub lambda_lower: T,
    pub witness: MapExpr<T>,
    /// Measured sup-norm of the witness on radius `r`.
    pub witness_sup: T,
    /// `C(r)`, when `r² < 1/5`.
    pub c_r: Option<T>,
    /// `growth_bound` with `α₁ = α`, `μ₁ = lambda_lower`.
    pub growth_bound_at: Vec<(T, T)>,
    pub candidates: usize,
    /// Always true.
    pub lower_bound_only: bool,
}

/// Options of the `μ_r` search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrderSearch {
    pub budget: usize,
    pub seed: u64,
    /// Grid used to measure the sup-norm of candidates.
    pub radii: usize,
    pub phases: usize,
}

impl Default for OrderSearch {
    fn default() -> Self {
        OrderSearch {
            budget: 8,
            seed: 0,
            radii: 4,
            phases: 6,
        }
    }
}

fn torus_max_abs<T: Real>(h: &MapExpr<T>, k: usize, r: T, m: usize) -> Result<T> {
    let n = h.n();
    let total = m.pow(n as u32);
    let mut best = T::zero();
    for mut idx in 0..total {
        let z: Vec<Cx<T>> = (0..n)
            .map(|_| {
                let th = std::f64::consts::TAU * (idx % m) as f64 / m as f64;
                idx /= m;
                Cx::from_polar(r, lit(th))
            })
            .collect();
        best = best.max(eval_map(h, &z)?[k].norm());
    }
    Ok(best)
}

/// `mu_r_lower`: searches `f = M_a ∘ (z + εq)` with `M_a(w) = w/(1 − a·w)`
/// and `q` a random homogeneous quadratic. Post-composition with `M_a` leaves
/// the Schwarzian unchanged, so `ε` is fitted so that the measured sup-norm
/// of `z + εq` on radius `r` stays below `α`; `a = t e^{iθ} e_k` with `t` just
/// below `1/max_torus |(z+εq)_k|` keeps the map holomorphic on `|z|∞ < r`.
/// The Möbius candidate (`ε = 0`, value `(n+1)/r`) is always included.
pub fn mu_r_lower<T: Real>(n: usize, alpha: T, r: T, search: &OrderSearch) -> Result<OrderReport<T>> {
    if n < 2 {
        return Err(Error::DimensionTooSmall(n));
    }
    if !(r > T::zero() && r < T::one()) {
        return Err(Error::InvalidParameter(format!("radius must lie in (0, 1), got {r}")));
    }
    if !(alpha >= T::zero()) {
        return Err(Error::InvalidParameter(format!("alpha must be >= 0, got {alpha}")));
    }
    let shrink = lit::<T>(1.0 - 1e-9);
    let np1 = from_usize::<T>(n + 1);
    let mut a0 = vec![czero::<T>(); n];
    a0[0] = Cx::new(shrink / r, T::zero());
    let witness = MapExpr::moebius_linear_form(&a0)?;
    let mut best = (np1 * shrink / r, witness, T::zero());
    let mut candidates = 1;
    let spec = GridSpec::with_resolution(to_f64(r), search.radii, search.phases, 1);
    let opts = sweep_options();
    let mut rng = ChaCha8Rng::seed_from_u64(search.seed);
    if alpha > T::zero() {
        for _ in 0..search.budget {
            let q = random_quadratic::<T, _>(&mut rng, n);
            let Some((eps, sup)) = fit_amplitude(n, &q, alpha, &spec, &opts)? else {
                continue;
            };
            let h = MapExpr::perturbed_identity(n, scaled_terms(&q, eps))?;
            let v = map_jet(&h, &vec![czero(); n])?.grad_jacobian()?;
            for k in 0..n {
                candidates += 1;
                let m = torus_max_abs(&h, k, r, 64)?;
                let t = shrink / m;
                let phase = if v[k].norm() > T::zero() {
                    v[k] / v[k].norm()
                } else {
                    Cx::new(T::one(), T::zero())
                };
                let mut a = vec![czero::<T>(); n];
                a[k] = phase * t;
                let f = MapExpr::compose(MapExpr::moebius_linear_form(&a)?, h.clone())?;
                let val = norm2(&map_jet(&f, &vec![czero(); n])?.grad_jacobian()?);
                if val > best.0 {
                    best = (val, f, sup);
                }
            }
        }
    }
    let c_r = c_of_r(r).ok();
    let mut growth = Vec::new();
    if alpha > T::zero() {
        if let Some(_) = c_r {
            for m in [1.0, 1.5, 2.0, 4.0] {
                let al = alpha * lit(m);
                growth.push((al, growth_bound(al, alpha, best.0, r)?));
            }
        }
    }
    Ok(OrderReport {
        n,
        alpha,
        r,
        lambda_lower: best.0,
        witness: best.1,
        witness_sup: best.2,
        c_r,
        growth_bound_at: growth,
        candidates,
        lower_bound_only: true,
    })
}

fn random_quadratic<T: Real, R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<PolyTerm<T>> {
    let mut terms = Vec::new();
    for target in 0..n {
        for i in 0..n {
            for j in i..n {
                let mut e = vec![0u32; n];
                e[i] += 1;
                e[j] += 1;
                terms.push(PolyTerm::new(
                    target,
                    e,
                    cx(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
                ));
            }
        }
    }
    terms
}

fn scaled_terms<T: Real>(q: &[PolyTerm<T>], eps: T) -> Vec<PolyTerm<T>> {
    q.iter()
        .map(|t| PolyTerm::new(t.target, t.exponents.clone(), t.coeff * eps))
        .collect()
}

// Largest amplitude found with measured sup-norm ≤ α, by secant steps on the
// nearly linear map ε ↦ sup-norm; `None` if no admissible amplitude is found.
fn fit_amplitude<T: Real>(
    n: usize,
    q: &[PolyTerm<T>],
    alpha: T,
    spec: &GridSpec,
    opts: &NormOptions,
) -> Result<Option<(T, T)>> {
    let measure = |eps: T| -> Result<Option<T>> {
        let h = MapExpr::perturbed_identity(n, scaled_terms(q, eps))?;
        let r = sup_norm_with(&h, spec, opts)?;
        Ok(if r.failures.is_empty() { Some(r.value) } else { None })
    };
    let probe = lit::<T>(1e-3);
    let Some(s0) = measure(probe)? else {
        return Ok(None);
    };
    if !(s0 > T::zero()) {
        return Ok(None);
    }
    let mut eps = probe * alpha / s0;
    let mut accepted: Option<(T, T)> = None;
    for _ in 0..12 {
        match measure(eps)? {
            Some(v) if v <= alpha => {
                if accepted.map_or(true, |(e, _)| eps > e) {
                    accepted = Some((eps, v));
                }
                if v >= alpha * lit(0.999) {
                    break;
                }
                eps = eps * (alpha / v).min(lit(2.0)) * lit(0.9995);
            }
            Some(v) => eps = eps * (alpha / v) * lit(0.999),
            None => eps = eps * lit(0.5),
        }
    }
    Ok(accepted)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoveringEstimate<T: Real> {
    /// `g(0)`.
    pub center: Vec<Cx<T>>,
    /// Minimum of `|g(z) − g(0)|` over the sampled torus `|z_i| = radius`.
    pub radius_lower: T,
    /// Minimum over the sampled full boundary of the polydisk of the given
    /// radius (faces `|z_k| = radius`).
    pub topological_radius: T,
    /// Empirical stand-in for `s₀` at this truncation (the face minimum).
    pub s0_proxy: T,
    pub boundary_samples: usize,
    /// Minimum of `|f|` on the torus for `f = g/(1 − a·g)`.
    pub half_radius_min: T,
    pub half_radius_ok: bool,
    pub failures: usize,
}

/// Tolerance of the half-radius comparison.
pub const HALF_RADIUS_TOL: f64 = 1e-9;

/// `covering_estimate` for `g` with `g(0) = 0`. `a` are the normalizer
/// parameters: the un-normalized map is `f = g/(1 − a·g)`.
pub fn covering_estimate<T: Real>(
    g: &MapExpr<T>,
    radius: T,
    boundary_samples: usize,
    a: &[Cx<T>],
) -> Result<CoveringEstimate<T>> {
    let n = g.n();
    if a.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: a.len(),
        });
    }
    if !(radius > T::zero() && radius < T::one()) {
        return Err(Error::InvalidParameter(format!("radius must lie in (0, 1), got {radius}")));
    }
    let zero = vec![czero::<T>(); n];
    let center = eval_map(g, &zero)?;
    if !(norm_inf(&center) <= lit(crate::maps::NORMALIZATION_TOL)) {
        return Err(Error::NotNormalized(format!(
            "|g(0)|_inf = {:e}",
            to_f64(norm_inf(&center))
        )));
    }
    let f = crate::maps::compose(&inverse_normalizer(a)?, g)?;
    let m = ((boundary_samples as f64).powf(1.0 / n as f64).floor() as usize).max(8);
    let mut failures = 0;
    let mut torus_min = T::infinity();
    let mut f_min = T::infinity();
    let total = m.pow(n as u32);
    for mut idx in 0..total {
        let z: Vec<Cx<T>> = (0..n)
            .map(|_| {
                let th = std::f64::consts::TAU * (idx % m) as f64 / m as f64;
                idx /= m;
                Cx::from_polar(radius, lit(th))
            })
            .collect();
        match eval_map(g, &z) {
            Ok(w) => {
                let d: Vec<Cx<T>> = w.iter().zip(&center).map(|(x, c)| *x - *c).collect();
                torus_min = torus_min.min(norm2(&d));
            }
            Err(_) => failures += 1,
        }
        match eval_map(&f, &z) {
            Ok(w) => f_min = f_min.min(norm2(&w)),
            Err(_) => failures += 1,
        }
    }
    // faces: z_k on the circle, the rest on a polar grid of the disk
    let radial = (m / 4).max(2);
    let mut disk: Vec<Cx<T>> = vec![czero()];
    for ri in 1..=radial {
        let rho = to_f64(radius) * ri as f64 / radial as f64;
        for p in 0..m {
            let th = std::f64::consts::TAU * p as f64 / m as f64;
            disk.push(cx(rho * th.cos(), rho * th.sin()));
        }
    }
    let mut face_min = T::infinity();
    for k in 0..n {
        let others = disk.len().pow((n - 1) as u32);
        for p in 0..m {
            let th = std::f64::consts::TAU * p as f64 / m as f64;
            for mut idx in 0..others {
                let mut z = Vec::with_capacity(n);
                for i in 0..n {
                    if i == k {
                        z.push(Cx::from_polar(radius, lit(th)));
                    } else {
                        z.push(disk[idx % disk.len()]);
                        idx /= disk.len();
                    }
                }
                match eval_map(g, &z) {
                    Ok(w) => {
                        let d: Vec<Cx<T>> = w.iter().zip(&center).map(|(x, c)| *x - *c).collect();
                        face_min = face_min.min(norm2(&d));
                    }
                    Err(_) => failures += 1,
                }
            }
        }
    }
    let half_radius_ok = f_min >= torus_min * lit(0.5) - lit(HALF_RADIUS_TOL);
    Ok(CoveringEstimate {
        center,
        radius_lower: torus_min,
        topological_radius: face_min,
        s0_proxy: face_min,
        boundary_samples: total,
        half_radius_min: f_min,
        half_radius_ok,
        failures,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct LocalCovering<T: Real> {
    /// Smallest singular value of `Df(z)`.
    pub eta: T,
    /// `α + 2√2|z|∞`.
    pub beta: T,
    pub s0: T,
    /// `½(1 − |z|∞) η s₀(n, β)`.
    pub radius: T,
}

/// `local_covering_bound` relative to a caller-supplied `s₀(n, β)`.
pub fn local_covering_bound<T: Real, S: Fn(usize, T) -> T>(
    f: &MapExpr<T>,
    z: &[Cx<T>],
    alpha: T,
    s0_proxy: S,
) -> Result<LocalCovering<T>> {
    let mj = map_jet(f, z)?;
    mj.inverse_jacobian()?;
    let zn = norm_inf(z);
    if !(zn < T::one()) {
        return Err(Error::OutsidePolydisk { norm: to_f64(zn) });
    }
    let eta = min_singular_value(&mj.jacobian());
    let beta = alpha + lit::<T>(2.0 * std::f64::consts::SQRT_2) * zn;
    let s0 = s0_proxy(f.n(), beta);
    Ok(LocalCovering {
        eta,
        beta,
        s0,
        radius: lit::<T>(0.5) * (T::one() - zn) * eta * s0,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradJacobianCheck<T: Real> {
    /// `|∇J_f(z)|∞`.
    pub lhs: T,
    /// `(λ_β + 2|z|∞)/(1−|z|∞²) |J_f(z)|`.
    pub rhs: T,
    pub margin: T,
    pub ok: bool,
}

/// `grad_jacobian_bound_check` with a caller-supplied `λ_β`.
pub fn grad_jacobian_bound_check<T: Real>(f: &MapExpr<T>, z: &[Cx<T>], lambda_beta: T) -> Result<GradJacobianCheck<T>> {
    let mj = map_jet(f, z)?;
    mj.inverse_jacobian()?;
    let zn = norm_inf(z);
    if !(zn < T::one()) {
        return Err(Error::OutsidePolydisk { norm: to_f64(zn) });
    }
    let lhs = norm_inf(&mj.grad_jacobian()?);
    let rhs = (lambda_beta + lit::<T>(2.0) * zn) / (T::one() - zn * zn) * mj.jacobian_det().norm();
    let margin = rhs - lhs;
    Ok(GradJacobianCheck {
        lhs,
        rhs,
        margin,
        ok: margin >= -lit::<T>(1e-12) * rhs.max(T::one()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maps::catalog;

    type M = MapExpr<f64>;

    #[test]
    fn moebius_order_examples() {
        for n in 2..=6 {
            let r = moebius_order(n).unwrap();
            assert_eq!(r.value, (n + 1) as f64);
            assert!((r.numeric - r.value).abs() < 1e-6, "{n}: {}", r.numeric);
            assert!(r.extremal.iter().filter(|p| **p > 1e-9).count() == 1);
        }
        assert!((moebius_objective(&[0.5, 0.5]) - 3.0 * 0.5f64.sqrt()).abs() < 1e-15);
        assert!(moebius_order(1).is_err());
    }

    #[test]
    fn grad_jacobian_examples() {
        assert!(grad_jacobian_at_zero(&M::identity(3).unwrap()).unwrap().iter().all(|c| c.norm() == 0.0));
        let a = [cx(0.2, -0.1), cx(0.3, 0.05)];
        let g = grad_jacobian_at_zero(&M::moebius_linear_form(&a).unwrap()).unwrap();
        for (gi, ai) in g.iter().zip(&a) {
            assert!((gi - ai * 3.0).norm() < 1e-14);
        }
        let p = catalog::perturbation::<f64>(2, 0.05).unwrap();
        assert!(norm2(&grad_jacobian_at_zero(&p).unwrap()) < 1e-15);
        let psi = M::automorphism(vec![cx(0.5, 0.0), czero()]).unwrap();
        assert!(matches!(grad_jacobian_at_zero(&psi), Err(Error::NotNormalized(_))));
    }

    #[test]
    fn dilation_factor_examples() {
        let f: f64 = dilation_factor(0.4, 0.9);
        assert!((f - 0.9 * (0.8704f64 / 0.84).powi(2)).abs() < 1e-15);
        assert!((f - 0.966321).abs() < 1e-6);
        assert_eq!(dilation_factor(0.4, 1.0), 1.0);
    }

    #[test]
    fn dilation_check_examples() {
        let grid = GridSpec::with_resolution(0.0, 4, 6, 1);
        let f = catalog::perturbation::<f64>(2, 0.05).unwrap();
        let r = dilation_contraction_check(&f, 0.4, 0.9, &grid, &sweep_options()).unwrap();
        assert!(r.ok, "{r:?}");
        assert!(r.ratio <= r.factor + 1e-7);
        let same = dilation_contraction_check(&f, 0.4, 1.0, &grid, &sweep_options()).unwrap();
        assert!((same.ratio - 1.0).abs() < 1e-12);
        assert!(dilation_contraction_check(&f, 0.45, 0.9, &grid, &sweep_options()).is_err());
        let psi = M::automorphism(vec![cx(0.3, 0.1), cx(-0.2, 0.0)]).unwrap();
        let r = dilation_contraction_check(&psi, 0.3, 0.5, &grid, &sweep_options()).unwrap();
        assert!(r.ok, "{r:?}");
    }

    #[test]
    fn growth_bound_examples() {
        let c: f64 = c_of_r(0.4).unwrap();
        assert!((c - 4.2).abs() < 1e-14);
        assert!((c_of_r(1e-8f64).unwrap() - 1.0).abs() < 1e-12);
        let b = growth_bound(0.3f64, 0.1, 2.0, 1e-8).unwrap();
        assert!((b - 6.0).abs() < 1e-6);
        assert_eq!(growth_bound(0.1, 0.1, 2.5, 0.4).unwrap(), 2.5);
        assert!(growth_bound(0.05, 0.1, 2.5, 0.4).is_err());
        assert!(growth_bound(0.2, 0.1, 2.5, 0.45).is_err());
        let mut prev = 0.0;
        for k in 0..20 {
            let v = growth_bound(0.1 + 0.05 * k as f64, 0.1, 2.5, 0.3).unwrap();
            assert!(v >= prev);
            prev = v;
        }
    }

    #[test]
    fn mu_r_lower_examples() {
        let search = OrderSearch {
            budget: 2,
            ..OrderSearch::default()
        };
        let r0 = mu_r_lower(2, 0.0f64, 0.5, &search).unwrap();
        assert!((r0.lambda_lower - 6.0).abs() < 1e-6 && r0.lambda_lower <= 6.0);
        assert!(r0.lower_bound_only);
        let none = mu_r_lower(
            2,
            0.1,
            0.5,
            &OrderSearch {
                budget: 0,
                ..search
            },
        )
        .unwrap();
        assert_eq!(none.lambda_lower, r0.lambda_lower);
        let r1 = mu_r_lower(2, 0.1, 0.4, &search).unwrap();
        let r0b = mu_r_lower(2, 0.0, 0.4, &search).unwrap();
        assert!(r1.lambda_lower >= r0b.lambda_lower);
        assert!(r1.witness_sup <= 0.1);
        assert_eq!(r1.growth_bound_at.len(), 4);
        assert_eq!(r1.growth_bound_at[0].1, r1.lambda_lower);
    }

    #[test]
    fn covering_identity() {
        let id = M::identity(2).unwrap();
        let c = covering_estimate(&id, 0.9, 1024, &[czero(), czero()]).unwrap();
        assert!((c.radius_lower - 0.9 * 2f64.sqrt()).abs() < 1e-12);
        assert!((c.topological_radius - 0.9).abs() < 1e-12);
        assert!(c.half_radius_ok);
        let psi = M::automorphism(vec![cx(0.5, 0.0), czero()]).unwrap();
        assert!(matches!(
            covering_estimate(&psi, 0.9, 64, &[czero(), czero()]),
            Err(Error::NotNormalized(_))
        ));
    }

    #[test]
    fn covering_moebius_closed_form() {
        // |z/l| on the torus, l = 1 − a·z: minimum ≥ 0.9√2/(1 + Σ|a_i|·0.9)
        let a = [cx(0.1, 0.0), cx(0.05, 0.05)];
        let f = M::moebius_linear_form(&a).unwrap();
        let c = covering_estimate(&f, 0.9, 4096, &[czero(), czero()]).unwrap();
        let sum: f64 = a.iter().map(|x| x.norm()).sum();
        assert!(c.radius_lower >= 0.9 * 2f64.sqrt() / (1.0 + sum * 0.9) - 1e-12);
        assert!(c.radius_lower <= 0.9 * 2f64.sqrt() / (1.0 - sum * 0.9));
        assert!(c.topological_radius <= c.radius_lower);
    }

    #[test]
    fn local_bounds() {
        let id = M::identity(2).unwrap();
        let z0 = [czero(), czero()];
        let lc = local_covering_bound(&id, &z0, 0.1, |_, b| 1.0 / (1.0 + b)).unwrap();
        assert!((lc.eta - 1.0).abs() < 1e-14);
        assert_eq!(lc.beta, 0.1);
        assert!((lc.radius - 0.5 / 1.1).abs() < 1e-14);
        let chk = grad_jacobian_bound_check(&id, &[cx(0.3, 0.2), cx(0.0, -0.5)], 3.0).unwrap();
        assert_eq!(chk.lhs, 0.0);
        assert!(chk.ok);

        // J = l^{-3}, ∇J = 0.9 e₁ l^{-4} with l = 0.85
        let f = M::moebius_linear_form(&[cx(0.3, 0.0), czero()]).unwrap();
        let z = [cx(0.5, 0.0), czero()];
        let lambda = growth_bound(2f64.sqrt(), 2f64.sqrt(), moebius_order(2).unwrap().value, 0.0).unwrap();
        let chk = grad_jacobian_bound_check(&f, &z, lambda).unwrap();
        assert!((chk.lhs - 0.9 / 0.85f64.powi(4)).abs() < 1e-12);
        assert!((chk.rhs - (3.0 + 1.0) / 0.75 / 0.85f64.powi(3)).abs() < 1e-12);
        assert!(chk.ok);
    }
}

//! Bergman metric of the polydisk, pointwise operator norm of the Schwarzian
//! and sup-norm sweeps over truncated polydisks.
//!
//! The metric is diagonal with `g_ii = 2/(1−|z_i|²)²`. The operator norm
//! `‖S_f(z)‖ = sup_{‖v‖=1} ‖S_f(z)(v)‖` is maximized by projected gradient
//! ascent on the Bergman unit sphere, from a fixed set of directions plus
//! seeded random ones. Every sweep value is a lower bound.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::maps::MapExpr;
use crate::scalar::{cx, czero, from_usize, lit, norm_inf, to_f64, Cx, Real};
use crate::schwarzian::{schwarzian_tensor, SchwarzianTensor};

/// Number of fixed start directions used by [`operator_norm`].
pub const DETERMINISTIC_STARTS: usize = 8;

/// Diagonal metric coefficients `2/(1−|z_i|²)²`.
pub fn metric_weights<T: Real>(z: &[Cx<T>]) -> Result<Vec<T>> {
    let nrm = norm_inf(z);
    if !(nrm < T::one()) {
        return Err(Error::OutsidePolydisk { norm: to_f64(nrm) });
    }
    let two = lit::<T>(2.0);
    Ok(z.iter()
        .map(|zi| {
            let d = T::one() - zi.norm_sqr();
            two / (d * d)
        })
        .collect())
}

/// Bergman length of the tangent vector `v` at `z`.
pub fn bergman_norm<T: Real>(z: &[Cx<T>], v: &[Cx<T>]) -> Result<T> {
    if z.len() != v.len() {
        return Err(Error::DimensionMismatch {
            expected: z.len(),
            found: v.len(),
        });
    }
    let g = metric_weights(z)?;
    Ok(g.iter()
        .zip(v)
        .fold(T::zero(), |acc, (gi, vi)| acc + *gi * vi.norm_sqr())
        .sqrt())
}

#[derive(Debug, Clone, PartialEq)]
pub struct NormResult<T: Real> {
    pub value: T,
    /// Maximizer, Bergman length 1 at the evaluation point.
    pub argmax_v: Vec<Cx<T>>,
    pub converged: bool,
    pub restarts_used: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormOptions {
    /// Random starts on top of the fixed ones.
    pub budget: usize,
    /// Relative change of the objective that stops an ascent.
    pub tol: f64,
    pub seed: u64,
    pub max_iter: usize,
}

impl Default for NormOptions {
    fn default() -> Self {
        NormOptions {
            budget: 8,
            tol: 1e-10,
            seed: 0,
            max_iter: 2000,
        }
    }
}

/// `operator_norm` with the default seed.
pub fn operator_norm<T: Real>(f: &MapExpr<T>, z: &[Cx<T>], budget: usize, tol: f64) -> Result<NormResult<T>> {
    operator_norm_with(
        f,
        z,
        &NormOptions {
            budget,
            tol,
            ..NormOptions::default()
        },
    )
}

pub fn operator_norm_with<T: Real>(f: &MapExpr<T>, z: &[Cx<T>], opts: &NormOptions) -> Result<NormResult<T>> {
    metric_weights(z)?;
    let t = schwarzian_tensor(f, z)?;
    tensor_operator_norm(&t, opts)
}

/// Operator norm of an already computed tensor, with the metric taken at
/// `t.point`.
pub fn tensor_operator_norm<T: Real>(t: &SchwarzianTensor<T>, opts: &NormOptions) -> Result<NormResult<T>> {
    let n = t.n;
    let g = metric_weights(&t.point)?;
    let sq: Vec<T> = g.iter().map(|gi| gi.sqrt()).collect();
    // T^k_ij = √g_k S^k_ij / (√g_i √g_j): the problem on the Euclidean sphere
    let tk: Vec<Vec<Vec<Cx<T>>>> = (0..n)
        .map(|k| {
            (0..n)
                .map(|i| (0..n).map(|j| t.s[k][i][j] * (sq[k] / (sq[i] * sq[j]))).collect())
                .collect()
        })
        .collect();
    let starts = start_directions::<T>(n, opts.budget, opts.seed);
    let restarts_used = starts.len();
    let runs: Vec<Ascent<T>> = starts
        .into_iter()
        .map(|x| ascend(&tk, x, lit(opts.tol), opts.max_iter))
        .collect();
    let mut best = &runs[0];
    for r in &runs[1..] {
        if r.h > best.h {
            best = r;
        }
    }
    let argmax_v = best.x.iter().zip(&sq).map(|(xi, s)| *xi / *s).collect();
    Ok(NormResult {
        value: best.h.sqrt(),
        argmax_v,
        converged: best.converged,
        restarts_used,
    })
}

/// `‖S(v)‖` at `t.point` for an arbitrary tangent vector.
pub fn objective<T: Real>(t: &SchwarzianTensor<T>, v: &[Cx<T>]) -> Result<T> {
    bergman_norm(&t.point, &t.apply(v)?)
}

fn start_directions<T: Real>(n: usize, budget: usize, seed: u64) -> Vec<Vec<Cx<T>>> {
    let mut out: Vec<Vec<Cx<T>>> = Vec::new();
    for i in 0..n {
        let mut e = vec![czero(); n];
        e[i] = cx(1.0, 0.0);
        out.push(e);
    }
    out.push(vec![cx(1.0, 0.0); n]);
    'pairs: for i in 0..n {
        for j in (i + 1)..n {
            for c in [cx(1.0, 0.0), cx(-1.0, 0.0), cx(0.0, 1.0), cx(0.0, -1.0)] {
                if out.len() >= DETERMINISTIC_STARTS {
                    break 'pairs;
                }
                let mut e = vec![czero(); n];
                e[i] = cx(1.0, 0.0);
                e[j] = c;
                out.push(e);
            }
        }
    }
    out.truncate(DETERMINISTIC_STARTS);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..budget {
        out.push(
            (0..n)
                .map(|_| cx(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                .collect(),
        );
    }
    out.into_iter().map(normalized).collect()
}

fn normalized<T: Real>(mut x: Vec<Cx<T>>) -> Vec<Cx<T>> {
    let nrm = x.iter().fold(T::zero(), |a, c| a + c.norm_sqr()).sqrt();
    if nrm > T::zero() {
        for c in &mut x {
            *c = *c / nrm;
        }
    }
    x
}

struct Ascent<T: Real> {
    x: Vec<Cx<T>>,
    h: T,
    converged: bool,
}

// H(x) = Σ_k |Q_k|², Q_k = xᵗ T^k x, and ∂H/∂x̄_i = Σ_k Q_k conj(2 (T^k x)_i).
fn apply_all<T: Real>(tk: &[Vec<Vec<Cx<T>>>], x: &[Cx<T>], out: &mut [Vec<Cx<T>>]) {
    for (m, o) in tk.iter().zip(out.iter_mut()) {
        for (row, oi) in m.iter().zip(o.iter_mut()) {
            *oi = row.iter().zip(x).fold(czero(), |a, (mij, xj)| a + *mij * *xj);
        }
    }
}

fn dot<T: Real>(a: &[Cx<T>], b: &[Cx<T>]) -> Cx<T> {
    a.iter().zip(b).fold(czero(), |acc, (x, y)| acc + *x * *y)
}

fn objective_value<T: Real>(tk: &[Vec<Vec<Cx<T>>>], x: &[Cx<T>], buf: &mut [Vec<Cx<T>>]) -> T {
    apply_all(tk, x, buf);
    buf.iter().fold(T::zero(), |a, y| a + dot(x, y).norm_sqr())
}

// On the great circle x cos θ + d sin θ, with A_k = xᵗTx, B_k = xᵗTd,
// C_k = dᵗTd, each Q_k = P_k + R_k cos φ + B_k sin φ (φ = 2θ), so H is a
// trigonometric polynomial of degree 2 in φ. Returns its coefficients
// (h0, h1c, h1s, h2c, h2s).
fn circle_coefficients<T: Real>(abc: &[(Cx<T>, Cx<T>, Cx<T>)]) -> [T; 5] {
    let half = lit::<T>(0.5);
    let two = lit::<T>(2.0);
    let mut h = [T::zero(); 5];
    for (a, b, c) in abc {
        let p = (*a + *c) * half;
        let r = (*a - *c) * half;
        let (pp, rr, bb) = (p.norm_sqr(), r.norm_sqr(), b.norm_sqr());
        h[0] += pp + (rr + bb) * half;
        h[1] += two * (p * r.conj()).re;
        h[2] += two * (p * b.conj()).re;
        h[3] += (rr - bb) * half;
        h[4] += (r * b.conj()).re;
    }
    h
}

fn circle_eval<T: Real>(h: &[T; 5], s: T, c: T) -> T {
    let two = lit::<T>(2.0);
    h[0] + h[1] * c + h[2] * s + h[3] * (c * c - s * s) + h[4] * (two * s * c)
}

// First and second derivative in φ.
fn circle_derivs<T: Real>(h: &[T; 5], phi: T) -> (T, T) {
    let (s, c) = phi.sin_cos();
    let two = lit::<T>(2.0);
    let four = lit::<T>(4.0);
    let (s2, c2) = (two * s * c, c * c - s * s);
    (
        -h[1] * s + h[2] * c - two * h[3] * s2 + two * h[4] * c2,
        -h[1] * c - h[2] * s - four * h[3] * c2 - four * h[4] * s2,
    )
}

// Maximizes over θ ∈ [0, π/2] (φ ∈ [0, π]): coarse scan by rotation, then a
// safeguarded Newton iteration on H'(φ) inside the best bracket.
fn circle_argmax<T: Real>(abc: &[(Cx<T>, Cx<T>, Cx<T>)]) -> (T, T) {
    const SCAN: usize = 16;
    let h = circle_coefficients(abc);
    let pi = T::PI();
    let step = pi / from_usize::<T>(SCAN);
    let (ds, dc) = step.sin_cos();
    let (mut s, mut c) = (T::zero(), T::one());
    let mut best_k = 0;
    let mut best = circle_eval(&h, s, c);
    for k in 1..=SCAN {
        let ns = s * dc + c * ds;
        c = c * dc - s * ds;
        s = ns;
        let v = circle_eval(&h, s, c);
        if v > best {
            best = v;
            best_k = k;
        }
    }
    let mut lo = step * from_usize::<T>(best_k.saturating_sub(1));
    let mut hi = (step * from_usize::<T>(best_k + 1)).min(pi);
    let mut phi = step * from_usize::<T>(best_k);
    for _ in 0..30 {
        let (d1, d2) = circle_derivs(&h, phi);
        if d1 > T::zero() {
            lo = phi;
        } else {
            hi = phi;
        }
        let mut next = if d2 < T::zero() { phi - d1 / d2 } else { T::nan() };
        if !(next > lo && next < hi) {
            next = (lo + hi) * lit(0.5);
        }
        let moved = (next - phi).abs();
        phi = next;
        if moved <= lit::<T>(1e-13) || hi - lo <= T::epsilon() * lit(4.0) {
            break;
        }
    }
    let (ps, pc) = phi.sin_cos();
    let v = circle_eval(&h, ps, pc);
    let half = lit::<T>(0.5);
    if v > best {
        (phi * half, v)
    } else {
        (step * from_usize::<T>(best_k) * half, best)
    }
}

fn ascend<T: Real>(tk: &[Vec<Vec<Cx<T>>>], mut x: Vec<Cx<T>>, tol: T, max_iter: usize) -> Ascent<T> {
    let n = x.len();
    let mut tx = vec![vec![czero::<T>(); n]; tk.len()];
    let mut td = tx.clone();
    let mut h = objective_value(tk, &x, &mut tx);
    let tiny = T::min_positive_value();
    let two = lit::<T>(2.0);
    let mut d = vec![czero::<T>(); n];
    let mut abc = vec![(czero::<T>(), czero::<T>(), czero::<T>()); tk.len()];
    for _ in 0..max_iter {
        // gradient at x (tx holds T^k x)
        for di in d.iter_mut() {
            *di = czero();
        }
        for y in &tx {
            let q = dot(&x, y);
            for (di, yi) in d.iter_mut().zip(y) {
                *di += q * yi.conj() * two;
            }
        }
        // tangent projection: remove Re<x, d> x
        let radial = x.iter().zip(&d).fold(T::zero(), |a, (xi, di)| a + (xi.conj() * *di).re);
        for (di, xi) in d.iter_mut().zip(&x) {
            *di -= *xi * radial;
        }
        let dn = d.iter().fold(T::zero(), |a, c| a + c.norm_sqr()).sqrt();
        if dn == T::zero() || dn * dn <= lit::<T>(1e-30) * h.max(tiny) {
            return Ascent { x, h, converged: true };
        }
        for di in d.iter_mut() {
            *di = *di / dn;
        }
        apply_all(tk, &d, &mut td);
        for (k, slot) in abc.iter_mut().enumerate() {
            *slot = (dot(&x, &tx[k]), dot(&x, &td[k]), dot(&d, &td[k]));
        }
        let (theta, _) = circle_argmax(&abc);
        let (s, c) = theta.sin_cos();
        let cand = normalized(x.iter().zip(&d).map(|(xi, di)| *xi * c + *di * s).collect());
        let mut tc = vec![vec![czero::<T>(); n]; tk.len()];
        let hc = objective_value(tk, &cand, &mut tc);
        if !(hc > h) {
            return Ascent { x, h, converged: true };
        }
        let rel = (hc - h) / hc.max(tiny);
        x = cand;
        h = hc;
        tx = tc;
        if rel < tol {
            return Ascent { x, h, converged: true };
        }
    }
    Ascent {
        x,
        h,
        converged: false,
    }
}

/// Polar-product grid resolution and refinement depth.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub radius: f64,
    /// Radii per axis, including the center.
    pub radii: usize,
    /// Phases per nonzero radius.
    pub phases: usize,
    pub refine: usize,
}

impl GridSpec {
    /// Default resolution for dimension `n`.
    pub fn default_for(n: usize, radius: f64) -> Self {
        let (radii, phases) = match n {
            0..=2 => (12, 16),
            3 => (5, 6),
            _ => (3, 4),
        };
        GridSpec {
            radius,
            radii,
            phases,
            refine: 2,
        }
    }

    pub fn with_resolution(radius: f64, radii: usize, phases: usize, refine: usize) -> Self {
        GridSpec {
            radius,
            radii,
            phases,
            refine,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.radius >= 0.0 && self.radius < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "grid radius must lie in [0, 1), got {}",
                self.radius
            )));
        }
        if self.radii < 2 || self.phases < 1 {
            return Err(Error::InvalidParameter(
                "grid needs at least 2 radii and 1 phase".into(),
            ));
        }
        Ok(())
    }

    /// Radii `R·sin(π/2 · m/(M−1))`, clustered toward the rim.
    pub fn radius_nodes(&self) -> Vec<f64> {
        let m = self.radii;
        (0..m)
            .map(|k| self.radius * (std::f64::consts::FRAC_PI_2 * k as f64 / (m - 1) as f64).sin())
            .collect()
    }

    fn radial_step(&self) -> f64 {
        if self.radii < 2 {
            return self.radius;
        }
        self.radius / (self.radii - 1) as f64
    }

    fn phase_step(&self) -> f64 {
        std::f64::consts::TAU / self.phases as f64
    }

    /// One-axis node list as (ρ, θ).
    pub fn axis_nodes(&self) -> Vec<(f64, f64)> {
        let mut out = vec![(0.0, 0.0)];
        for rho in self.radius_nodes().into_iter().skip(1) {
            for p in 0..self.phases {
                out.push((rho, self.phase_step() * p as f64));
            }
        }
        out
    }
}

/// All grid points of the product grid in dimension `n`.
pub fn grid_points<T: Real>(n: usize, spec: &GridSpec) -> Vec<Vec<Cx<T>>> {
    let axis = spec.axis_nodes();
    let total = axis.len().pow(n as u32);
    (0..total)
        .map(|mut idx| {
            let mut z = Vec::with_capacity(n);
            for _ in 0..n {
                let (rho, th) = axis[idx % axis.len()];
                idx /= axis.len();
                z.push(cx(rho * th.cos(), rho * th.sin()));
            }
            z
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridFailure<T: Real> {
    pub z: Vec<Cx<T>>,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SupNormResult<T: Real> {
    pub value: T,
    pub witness_z: Vec<Cx<T>>,
    /// Maximizing tangent vector at the witness.
    pub argmax_v: Vec<Cx<T>>,
    pub grid_spec: GridSpec,
    /// Always true: sweeps never certify a supremum.
    pub lower_bound_only: bool,
    pub points_evaluated: usize,
    pub failures: Vec<GridFailure<T>>,
}

/// `sup_norm` with the default tensor norm options and the given grid.
pub fn sup_norm<T: Real>(f: &MapExpr<T>, radius: f64, grid: usize, refine: usize) -> Result<SupNormResult<T>> {
    let base = GridSpec::default_for(f.n(), radius);
    let spec = GridSpec {
        radii: grid,
        phases: base.phases * grid / base.radii.max(1),
        refine,
        ..base
    };
    let spec = GridSpec {
        phases: spec.phases.max(1),
        ..spec
    };
    sup_norm_with(f, &spec, &sweep_options())
}

/// Norm options used at each grid point: fixed starts only.
pub fn sweep_options() -> NormOptions {
    NormOptions {
        budget: 0,
        ..NormOptions::default()
    }
}

struct Best<T: Real> {
    value: T,
    z: Vec<Cx<T>>,
    v: Vec<Cx<T>>,
}

fn lex_less<T: Real>(a: &[Cx<T>], b: &[Cx<T>]) -> bool {
    for (x, y) in a.iter().zip(b) {
        if x.re != y.re {
            return x.re < y.re;
        }
        if x.im != y.im {
            return x.im < y.im;
        }
    }
    false
}

fn absorb<T: Real>(best: &mut Option<Best<T>>, z: &[Cx<T>], r: &NormResult<T>) {
    let better = match best {
        None => true,
        Some(b) => r.value > b.value || (r.value == b.value && lex_less(z, &b.z)),
    };
    if better {
        *best = Some(Best {
            value: r.value,
            z: z.to_vec(),
            v: r.argmax_v.clone(),
        });
    }
}

/// Evaluates the operator norm at each point; returns the best point and the
/// failures. Evaluation is parallel, the reduction runs in input order.
pub fn sweep_points<T: Real>(
    f: &MapExpr<T>,
    points: &[Vec<Cx<T>>],
    opts: &NormOptions,
) -> (Option<(T, Vec<Cx<T>>, Vec<Cx<T>>)>, Vec<GridFailure<T>>) {
    let results: Vec<Result<NormResult<T>>> = points
        .par_iter()
        .map(|z| operator_norm_with(f, z, opts))
        .collect();
    let mut best = None;
    let mut failures = Vec::new();
    for (z, r) in points.iter().zip(results) {
        match r {
            Ok(r) => absorb(&mut best, z, &r),
            Err(e) => failures.push(GridFailure {
                z: z.clone(),
                message: e.to_string(),
            }),
        }
    }
    (best.map(|b| (b.value, b.z, b.v)), failures)
}

pub fn sup_norm_with<T: Real>(f: &MapExpr<T>, spec: &GridSpec, opts: &NormOptions) -> Result<SupNormResult<T>> {
    spec.validate()?;
    let n = f.n();
    let points = grid_points::<T>(n, spec);
    let mut evaluated = points.len();
    let (best, mut failures) = sweep_points(f, &points, opts);
    let mut best = match best {
        Some((value, z, v)) => Best { value, z, v },
        None => {
            return Err(Error::NonFinite(format!(
                "operator norm failed at all {} grid points",
                points.len()
            )))
        }
    };
    let mut drho = spec.radial_step() / 2.0;
    let mut dth = spec.phase_step() / 2.0;
    for _ in 0..spec.refine {
        let cands = refinement_points::<T>(&best.z, drho, dth, spec.radius);
        evaluated += cands.len();
        let (b, fl) = sweep_points(f, &cands, opts);
        failures.extend(fl);
        if let Some((value, z, v)) = b {
            let mut slot = Some(Best {
                value: best.value,
                z: best.z.clone(),
                v: best.v.clone(),
            });
            absorb(
                &mut slot,
                &z,
                &NormResult {
                    value,
                    argmax_v: v,
                    converged: true,
                    restarts_used: 0,
                },
            );
            best = slot.expect("slot is populated");
        }
        drho /= 2.0;
        dth /= 2.0;
    }
    Ok(SupNormResult {
        value: best.value,
        witness_z: best.z,
        argmax_v: best.v,
        grid_spec: *spec,
        lower_bound_only: true,
        points_evaluated: evaluated,
        failures,
    })
}

// Neighbours of z in polar coordinates: the full 3^(2n) stencil for n ≤ 2,
// coordinate moves otherwise.
fn refinement_points<T: Real>(z: &[Cx<T>], drho: f64, dth: f64, radius: f64) -> Vec<Vec<Cx<T>>> {
    let n = z.len();
    let polar: Vec<(f64, f64)> = z
        .iter()
        .map(|c| (to_f64(c.norm()), to_f64(c.im).atan2(to_f64(c.re))))
        .collect();
    let make = |offs: &[(f64, f64)]| -> Vec<Cx<T>> {
        polar
            .iter()
            .zip(offs)
            .map(|((r, t), (dr, dt))| {
                let rr = (r + dr).clamp(0.0, radius);
                let tt = t + dt;
                cx(rr * tt.cos(), rr * tt.sin())
            })
            .collect()
    };
    let mut out = Vec::new();
    if n <= 2 {
        let moves = 9usize.pow(n as u32);
        for mut idx in 0..moves {
            let mut offs = Vec::with_capacity(n);
            for _ in 0..n {
                let a = idx % 3;
                let b = (idx / 3) % 3;
                idx /= 9;
                offs.push(((a as f64 - 1.0) * drho, (b as f64 - 1.0) * dth));
            }
            if offs.iter().any(|o| *o != (0.0, 0.0)) {
                out.push(make(&offs));
            }
        }
    } else {
        for i in 0..n {
            for (dr, dt) in [(drho, 0.0), (-drho, 0.0), (0.0, dth), (0.0, -dth)] {
                let mut offs = vec![(0.0, 0.0); n];
                offs[i] = (dr, dt);
                out.push(make(&offs));
            }
        }
    }
    out
}

/// `2√2 |a|∞`, the bound on `‖S_ψ‖` for a polydisk automorphism.
pub fn automorphism_norm_bound<T: Real>(a: &[Cx<T>]) -> T {
    lit::<T>(2.0 * std::f64::consts::SQRT_2) * norm_inf(a)
}

//! Batch inequality suites: the disk derivative lemma, pointwise tensor
//! bounds, the `|A|`/`|B|` bounds of the transport system, and a handful of
//! cross-module properties. Failures are data, collected into [`SuiteReport`]s.
//!
//! Every violation keeps the inputs needed to recompute its margin with
//! [`reevaluate`].

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::bergman::{
    automorphism_norm_bound, grid_points, operator_norm_with, sup_norm_with, sweep_options, GridSpec, NormOptions,
};
use crate::comparison::{boundary_directions, riccati_solve, BoundParams};
use crate::error::{Error, Result};
use crate::linalg::spectral_norm;
use crate::maps::{catalog, MapExpr};
use crate::order::dilation_contraction_check;
use crate::scalar::{cx, czero, from_usize, lit, norm2, norm_inf, to_f64, Cx, Real};
use crate::schwarzian::{canonical_residual, chain_rule_residual, schwarzian_tensor, SchwarzianTensor};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SuiteStatus {
    Pass,
    Fail,
}

impl SuiteStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            SuiteStatus::Pass => "pass",
            SuiteStatus::Fail => "fail",
        }
    }
}

/// Which of the two disk-lemma statements is checked.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiskKind {
    /// `|g| ≤ C ⇒ |g'| ≤ C/(1−|z|²)`.
    I,
    /// `|g| ≤ C/(1−|z|²) ⇒ |g'| ≤ 4C/(1−|z|²)²`.
    II,
}

impl DiskKind {
    pub fn as_str(self) -> &'static str {
        match self {
            DiskKind::I => "i",
            DiskKind::II => "ii",
        }
    }
}

/// One-variable samples. `C` below is the constant passed to the check.
#[derive(Debug, Clone, PartialEq)]
pub enum DiskSample {
    /// `z`, bounded by 1.
    Identity,
    /// `z²`, bounded by 1.
    Square,
    /// `Π (z − a)/(1 − āz)`, bounded by 1.
    Blaschke(Vec<Cx<f64>>),
    /// `C/(1−z²)`; `|g| ≤ C/(1−|z|²)`.
    RationalSquare,
    /// `C/(2(1−z))`; `|g| ≤ C/(1−|z|²)` since `1+|z| ≤ 2`.
    Pole,
}

impl DiskSample {
    pub fn name(&self) -> String {
        match self {
            DiskSample::Identity => "z".into(),
            DiskSample::Square => "z^2".into(),
            DiskSample::Blaschke(a) => format!("blaschke{}", a.len()),
            DiskSample::RationalSquare => "C/(1-z^2)".into(),
            DiskSample::Pole => "C/(2(1-z))".into(),
        }
    }

    /// `(g(z), g'(z))`.
    pub fn eval<T: Real>(&self, z: Cx<T>, c: T) -> (Cx<T>, Cx<T>) {
        let one = Cx::new(T::one(), T::zero());
        match self {
            DiskSample::Identity => (z, one),
            DiskSample::Square => (z * z, z * lit::<T>(2.0)),
            DiskSample::Blaschke(zeros) => {
                // g'/g = Σ (1−|a|²)/((z−a)(1−āz))
                let mut g = one;
                let mut dg = czero::<T>();
                for a in zeros {
                    let a = cx::<T>(a.re, a.im);
                    let num = z - a;
                    let den = one - a.conj() * z;
                    let b = num / den;
                    let db = (one - a.conj() * a) / (den * den);
                    dg = dg * b + g * db;
                    g = g * b;
                }
                (g, dg)
            }
            DiskSample::RationalSquare => {
                let d = one - z * z;
                (one * c / d, z * c * lit::<T>(2.0) / (d * d))
            }
            DiskSample::Pole => {
                let d = one - z;
                (one * c / (d * lit::<T>(2.0)), one * c / (d * d * lit::<T>(2.0)))
            }
        }
    }
}

/// The built-in samples with the kind and constant each satisfies.
pub fn disk_samples() -> Vec<(DiskSample, f64, DiskKind)> {
    vec![
        (DiskSample::Identity, 1.0, DiskKind::I),
        (DiskSample::Square, 1.0, DiskKind::I),
        (DiskSample::Blaschke(vec![cx(0.5, 0.0), cx(0.0, -0.3)]), 1.0, DiskKind::I),
        (
            DiskSample::Blaschke(vec![cx(0.7, 0.2), cx(-0.4, 0.4), cx(0.0, 0.0)]),
            1.0,
            DiskKind::I,
        ),
        (DiskSample::Identity, 1.0, DiskKind::II),
        (DiskSample::Blaschke(vec![cx(-0.6, 0.1), cx(0.2, 0.8)]), 1.0, DiskKind::II),
        (DiskSample::RationalSquare, 1.0, DiskKind::II),
        (DiskSample::RationalSquare, 2.5, DiskKind::II),
        (DiskSample::Pole, 1.0, DiskKind::II),
    ]
}

/// Polar grid on `|z| ≤ radius` (center included).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiskGrid {
    pub radius: f64,
    pub radii: usize,
    pub phases: usize,
}

impl Default for DiskGrid {
    fn default() -> Self {
        DiskGrid {
            radius: 0.995,
            radii: 60,
            phases: 96,
        }
    }
}

impl DiskGrid {
    pub fn points<T: Real>(&self) -> Vec<Cx<T>> {
        let mut out = vec![czero()];
        for k in 1..=self.radii {
            let rho = self.radius * k as f64 / self.radii as f64;
            for p in 0..self.phases {
                let th = std::f64::consts::TAU * p as f64 / self.phases as f64;
                out.push(cx(rho * th.cos(), rho * th.sin()));
            }
        }
        out
    }
}

/// What a violation was measured on.
#[derive(Debug, Clone, PartialEq)]
pub enum Subject<T: Real> {
    Map(MapExpr<T>),
    /// `g ∘ f`.
    Pair(MapExpr<T>, MapExpr<T>),
    Disk { sample: DiskSample, c: T, kind: DiskKind },
    /// Riccati constant.
    Riccati(T),
    /// Dilation parameters `(r, s)` applied to the map.
    Dilation { map: MapExpr<T>, r: T, s: T },
}

/// A single failed case. `margin = rhs − lhs` (negative on failure).
#[derive(Debug, Clone, PartialEq)]
pub struct Violation<T: Real> {
    pub check: &'static str,
    pub input: String,
    pub subject: Subject<T>,
    pub z: Vec<Cx<T>>,
    pub v: Vec<Cx<T>>,
    pub zeta: Vec<Cx<T>>,
    pub alpha: T,
    pub lhs: T,
    pub rhs: T,
    pub margin: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteReport<T: Real> {
    pub name: String,
    pub cases: usize,
    pub skipped: usize,
    pub violations: Vec<Violation<T>>,
    /// Smallest `rhs − lhs` seen; `None` when no case ran.
    pub worst_margin: Option<T>,
    pub status: SuiteStatus,
    /// Sub-reports of an aggregate.
    pub parts: Vec<SuiteReport<T>>,
}

impl<T: Real> SuiteReport<T> {
    fn empty(name: &str) -> Self {
        SuiteReport {
            name: name.to_string(),
            cases: 0,
            skipped: 0,
            violations: Vec::new(),
            worst_margin: None,
            status: SuiteStatus::Pass,
            parts: Vec::new(),
        }
    }

    fn record(&mut self, lhs: T, rhs: T, tol: T, violation: impl FnOnce() -> Violation<T>) {
        self.cases += 1;
        let margin = rhs - lhs;
        self.worst_margin = Some(match self.worst_margin {
            Some(w) if !(margin < w) => w,
            _ => margin,
        });
        if !(margin >= -tol) {
            let mut v = violation();
            v.lhs = lhs;
            v.rhs = rhs;
            v.margin = margin;
            self.violations.push(v);
            self.status = SuiteStatus::Fail;
        }
    }

    fn absorb(&mut self, part: SuiteReport<T>) {
        self.cases += part.cases;
        self.skipped += part.skipped;
        self.violations.extend(part.violations.iter().cloned());
        if let Some(w) = part.worst_margin {
            self.worst_margin = Some(self.worst_margin.map_or(w, |m| m.min(w)));
        }
        if part.status == SuiteStatus::Fail {
            self.status = SuiteStatus::Fail;
        }
        self.parts.push(part);
    }

    pub fn passed(&self) -> bool {
        self.status == SuiteStatus::Pass
    }
}

fn violation<T: Real>(check: &'static str, input: String, subject: Subject<T>) -> Violation<T> {
    Violation {
        check,
        input,
        subject,
        z: Vec::new(),
        v: Vec::new(),
        zeta: Vec::new(),
        alpha: T::zero(),
        lhs: T::zero(),
        rhs: T::zero(),
        margin: T::zero(),
    }
}

/// Relative tolerance of the disk lemma.
pub const DISK_TOL: f64 = 1e-9;
/// Relative tolerance of the tensor and `A`/`B` bounds.
pub const BOUND_TOL: f64 = 1e-7;

fn disk_margin<T: Real>(sample: &DiskSample, c: T, kind: DiskKind, z: Cx<T>) -> (T, T) {
    let (_, dg) = sample.eval(z, c);
    let w = T::one() - z.norm_sqr();
    let rhs = match kind {
        DiskKind::I => c / w,
        DiskKind::II => lit::<T>(4.0) * c / (w * w),
    };
    (dg.norm(), rhs)
}

/// `disk_lemma_check`: verifies the hypothesis on the grid first (a failed
/// hypothesis counts as skipped), then the conclusion.
pub fn disk_lemma_check<T: Real>(sample: &DiskSample, c: T, kind: DiskKind, grid: &DiskGrid) -> SuiteReport<T> {
    let name = format!("disk_lemma_{}:{}", kind.as_str(), sample.name());
    let mut report = SuiteReport::empty(&name);
    let pts = grid.points::<T>();
    let slack = T::one() + lit::<T>(1e-12);
    let hypothesis = pts.iter().all(|z| {
        let (g, _) = sample.eval(*z, c);
        let bound = match kind {
            DiskKind::I => c,
            DiskKind::II => c / (T::one() - z.norm_sqr()),
        };
        g.norm() <= bound * slack
    });
    if !hypothesis {
        report.skipped = 1;
        return report;
    }
    let check = match kind {
        DiskKind::I => "disk_i",
        DiskKind::II => "disk_ii",
    };
    for z in pts {
        let (lhs, rhs) = disk_margin(sample, c, kind, z);
        report.record(lhs, rhs, rhs * lit(DISK_TOL), || {
            let mut v = violation(
                check,
                format!("{} C={}", sample.name(), c),
                Subject::Disk {
                    sample: sample.clone(),
                    c,
                    kind,
                },
            );
            v.z = vec![z];
            v
        });
    }
    report
}

/// Unimodular test vectors `(1, e^{iθ_2}, …)`; the quadratic forms are
/// invariant under a global phase and maximal on the torus.
pub fn torus_vectors<T: Real>(n: usize, phases: usize) -> Vec<Vec<Cx<T>>> {
    let total = phases.pow((n - 1) as u32);
    (0..total)
        .map(|mut idx| {
            let mut v = vec![cx(1.0, 0.0)];
            for _ in 1..n {
                let th = std::f64::consts::TAU * (idx % phases) as f64 / phases as f64;
                idx /= phases;
                v.push(cx(th.cos(), th.sin()));
            }
            v
        })
        .collect()
}

fn sk_margin<T: Real>(t: &SchwarzianTensor<T>, alpha: T, v: &[Cx<T>]) -> Result<(T, T)> {
    let w = T::one() - norm_inf(&t.point).powi(2);
    let lhs = t.apply(v)?.iter().fold(T::zero(), |m, c| m.max(c.norm()));
    Ok((lhs, lit::<T>(3.0) * from_usize::<T>(t.n) * alpha / w))
}

fn s0_margin<T: Real>(t: &SchwarzianTensor<T>, alpha: T, v: &[Cx<T>]) -> Result<(T, T)> {
    let w = T::one() - norm_inf(&t.point).powi(2);
    let n = from_usize::<T>(t.n);
    let rhs = (lit::<T>(5.0) * n * n * alpha + lit::<T>(2.0) * n * (n + T::one()) * alpha * alpha) / (w * w);
    Ok((t.apply_s0(v)?.norm(), rhs))
}

fn tensors_on<T: Real>(f: &MapExpr<T>, pts: &[Vec<Cx<T>>]) -> Vec<Result<SchwarzianTensor<T>>> {
    pts.par_iter().map(|z| schwarzian_tensor(f, z)).collect()
}

fn map_label<T: Real>(label: &str, z: &[Cx<T>]) -> String {
    let zs: Vec<String> = z.iter().map(|c| format!("{:.6}{:+.6}i", to_f64(c.re), to_f64(c.im))).collect();
    format!("{label} z=({})", zs.join(", "))
}

/// `tensor_bounds_check`: pointwise `|S^k(v)|` and `|S^0(v)|` bounds on the
/// grid points of `grid`, for `v` on the torus with `phases` phases per
/// coordinate. Points where the tensor cannot be formed are skipped.
pub fn tensor_bounds_check<T: Real>(
    f: &MapExpr<T>,
    label: &str,
    alpha: T,
    grid: &GridSpec,
    phases: usize,
) -> Result<SuiteReport<T>> {
    grid.validate()?;
    let mut report = SuiteReport::empty(&format!("tensor_bounds:{label}"));
    let pts = grid_points::<T>(f.n(), grid);
    let vs = torus_vectors::<T>(f.n(), phases);
    for (z, t) in pts.iter().zip(tensors_on(f, &pts)) {
        let Ok(t) = t else {
            report.skipped += 1;
            continue;
        };
        for v in &vs {
            for (check, (lhs, rhs)) in [("tensor_sk", sk_margin(&t, alpha, v)?), ("tensor_s0", s0_margin(&t, alpha, v)?)] {
                report.record(lhs, rhs, lit::<T>(BOUND_TOL) * rhs.max(T::one()), || {
                    let mut x = violation(check, map_label(label, z), Subject::Map(f.clone()));
                    x.z = z.clone();
                    x.v = v.clone();
                    x.alpha = alpha;
                    x
                });
            }
        }
    }
    Ok(report)
}

/// `A^k_j = Σ_i ζ_i S^k_ij` and `B_j = Σ_i ζ_i S^0_ij`.
pub fn ab_matrices<T: Real>(t: &SchwarzianTensor<T>, zeta: &[Cx<T>]) -> (Vec<Vec<Cx<T>>>, Vec<Cx<T>>) {
    let n = t.n;
    let a = (0..n)
        .map(|k| {
            (0..n)
                .map(|j| (0..n).fold(czero(), |acc, i| acc + zeta[i] * t.s[k][i][j]))
                .collect()
        })
        .collect();
    let b = (0..n)
        .map(|j| (0..n).fold(czero(), |acc, i| acc + zeta[i] * t.s0[i][j]))
        .collect();
    (a, b)
}

/// `3√2 − 4`: below this `n√n·α` the sharper `|B|` bound applies.
pub fn small_b_threshold() -> f64 {
    3.0 * std::f64::consts::SQRT_2 - 4.0
}

fn ab_margins<T: Real>(t: &SchwarzianTensor<T>, alpha: T, zeta: &[Cx<T>]) -> Vec<(&'static str, T, T)> {
    let p = BoundParams::new(t.n, alpha).expect("n ≥ 2 and α ≥ 0 checked by caller");
    let w = T::one() - norm_inf(&t.point).powi(2);
    let (a, b) = ab_matrices(t, zeta);
    let a_lhs = w * spectral_norm(&a);
    let b_lhs = w * w * norm2(&b);
    let mut out = vec![
        ("ab_a", a_lhs, p.tau),
        ("ab_b", b_lhs, p.c1 * alpha + p.c2 * alpha * alpha),
    ];
    if p.smallness() <= lit(small_b_threshold()) {
        out.push(("ab_b_small", b_lhs, lit::<T>(4.5) * p.smallness()));
    }
    out
}

/// Default `ζ` set: boundary directions plus the origin and one interior point.
pub fn default_zetas<T: Real>(n: usize, seed: u64) -> Vec<Vec<Cx<T>>> {
    let mut out = boundary_directions::<T>(n, n + 5, seed);
    out.push(vec![czero(); n]);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5a5a);
    out.push(crate::maps::catalog::random_point(&mut rng, n, 0.8));
    out
}

/// `AB_bounds_check` over the grid points and every `ζ` in `zetas`.
pub fn ab_bounds_check<T: Real>(
    f: &MapExpr<T>,
    label: &str,
    alpha: T,
    zetas: &[Vec<Cx<T>>],
    grid: &GridSpec,
) -> Result<SuiteReport<T>> {
    grid.validate()?;
    if f.n() < 2 {
        return Err(Error::DimensionTooSmall(f.n()));
    }
    if !(alpha >= T::zero()) {
        return Err(Error::InvalidParameter(format!("alpha must be >= 0, got {alpha}")));
    }
    for zeta in zetas {
        if zeta.len() != f.n() {
            return Err(Error::DimensionMismatch {
                expected: f.n(),
                found: zeta.len(),
            });
        }
        if !(norm_inf(zeta) <= T::one()) {
            return Err(Error::InvalidParameter("zeta must lie in the closed polydisk".into()));
        }
    }
    let mut report = SuiteReport::empty(&format!("ab_bounds:{label}"));
    let pts = grid_points::<T>(f.n(), grid);
    for (z, t) in pts.iter().zip(tensors_on(f, &pts)) {
        let Ok(t) = t else {
            report.skipped += 1;
            continue;
        };
        for zeta in zetas {
            for (check, lhs, rhs) in ab_margins(&t, alpha, zeta) {
                report.record(lhs, rhs, lit::<T>(BOUND_TOL) * rhs.max(T::one()), || {
                    let mut x = violation(check, map_label(label, z), Subject::Map(f.clone()));
                    x.z = z.clone();
                    x.zeta = zeta.clone();
                    x.alpha = alpha;
                    x
                });
            }
        }
    }
    Ok(report)
}

/// Tolerance of the Möbius, chain-rule and canonical-form properties.
pub const IDENTITY_TOL: f64 = 1e-9;
pub const CHAIN_TOL: f64 = 1e-8;

/// Recomputes the margin of a violation from its stored inputs.
pub fn reevaluate<T: Real>(v: &Violation<T>) -> Result<T> {
    let bad = || Error::InvalidParameter(format!("violation record for {} lacks its inputs", v.check));
    match (&v.subject, v.check) {
        (Subject::Disk { sample, c, kind }, _) => {
            let (lhs, rhs) = disk_margin(sample, *c, *kind, *v.z.first().ok_or_else(bad)?);
            Ok(rhs - lhs)
        }
        (Subject::Map(f), "tensor_sk" | "tensor_s0") => {
            let t = schwarzian_tensor(f, &v.z)?;
            let (lhs, rhs) = if v.check == "tensor_sk" {
                sk_margin(&t, v.alpha, &v.v)?
            } else {
                s0_margin(&t, v.alpha, &v.v)?
            };
            Ok(rhs - lhs)
        }
        (Subject::Map(f), "ab_a" | "ab_b" | "ab_b_small") => {
            let t = schwarzian_tensor(f, &v.z)?;
            ab_margins(&t, v.alpha, &v.zeta)
                .into_iter()
                .find(|(c, _, _)| *c == v.check)
                .map(|(_, lhs, rhs)| rhs - lhs)
                .ok_or_else(bad)
        }
        (Subject::Map(f), "moebius_annihilation") => {
            let t = schwarzian_tensor(f, &v.z)?;
            Ok(lit::<T>(IDENTITY_TOL) - t.max_abs())
        }
        (Subject::Map(f), "canonical_form") => {
            let t = schwarzian_tensor(f, &v.z)?;
            Ok(lit::<T>(IDENTITY_TOL) - canonical_residual(&t))
        }
        (Subject::Map(f), "automorphism_norm") => {
            let a = automorphism_parameter(f).ok_or_else(bad)?;
            let r = operator_norm_with(f, &v.z, &NormOptions::default())?;
            Ok(automorphism_norm_bound(&a) - r.value)
        }
        (Subject::Pair(g, f), "chain_rule") => Ok(lit::<T>(CHAIN_TOL) - chain_rule_residual(g, f, &v.z)?),
        (Subject::Riccati(c), "riccati_monotone") => {
            // lhs is 1 when c blows up although a larger constant did not
            let _ = riccati_solve(*c, lit(0.999))?;
            Ok(v.margin)
        }
        (Subject::Dilation { map, r, s }, "dilation_ratio" | "dilation_grad") => {
            let grid = GridSpec::with_resolution(0.0, 4, 6, 1);
            let d = dilation_contraction_check(map, *r, *s, &grid, &sweep_options())?;
            Ok(if v.check == "dilation_ratio" {
                d.factor - d.ratio
            } else {
                -d.grad_residual
            })
        }
        _ => Err(bad()),
    }
}

fn automorphism_parameter<T: Real>(f: &MapExpr<T>) -> Option<Vec<Cx<T>>> {
    match f.kind() {
        crate::maps::MapKind::Automorphism { a } => Some(a.clone()),
        _ => None,
    }
}

/// Suites understood by [`run_suite`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SuiteKind {
    DiskLemma,
    TensorBounds,
    AbBounds,
    MoebiusAnnihilation,
    ChainRule,
    AutomorphismNorm,
    RiccatiMonotone,
    DilationContraction,
}

impl SuiteKind {
    pub const ALL: [SuiteKind; 8] = [
        SuiteKind::DiskLemma,
        SuiteKind::TensorBounds,
        SuiteKind::AbBounds,
        SuiteKind::MoebiusAnnihilation,
        SuiteKind::ChainRule,
        SuiteKind::AutomorphismNorm,
        SuiteKind::RiccatiMonotone,
        SuiteKind::DilationContraction,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SuiteKind::DiskLemma => "disk_lemma",
            SuiteKind::TensorBounds => "tensor_bounds",
            SuiteKind::AbBounds => "ab_bounds",
            SuiteKind::MoebiusAnnihilation => "moebius_annihilation",
            SuiteKind::ChainRule => "chain_rule",
            SuiteKind::AutomorphismNorm => "automorphism_norm",
            SuiteKind::RiccatiMonotone => "riccati_monotone",
            SuiteKind::DilationContraction => "dilation_contraction",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        SuiteKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown suite '{s}'")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteConfig {
    pub suites: Vec<SuiteKind>,
    pub seed: u64,
    /// Multiplies every measured `α` before it enters a bound; values below 1
    /// understate `α` and are expected to fail.
    pub alpha_scale: f64,
    pub dims: Vec<usize>,
    /// Radius of the truncated polydisk for the tensor and `A`/`B` suites.
    pub radius: f64,
    pub radii: usize,
    pub phases: usize,
    /// Random cases per dimension in the property suites.
    pub random_cases: usize,
}

impl SuiteConfig {
    /// No suites: a trivially passing report.
    pub fn empty() -> Self {
        SuiteConfig {
            suites: Vec::new(),
            ..SuiteConfig::default()
        }
    }
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig {
            suites: SuiteKind::ALL.to_vec(),
            seed: 0,
            alpha_scale: 1.0,
            dims: vec![2, 3],
            radius: 0.9,
            radii: 4,
            phases: 6,
            random_cases: 10,
        }
    }
}

/// The maps the tensor and `A`/`B` suites run on in dimension `n`:
/// automorphisms (one fixed, two seeded) and two polynomial perturbations.
pub fn bound_families<T: Real>(n: usize, seed: u64) -> Result<Vec<(String, MapExpr<T>)>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut a = vec![czero::<T>(); n];
    a[0] = cx(0.3, 0.0);
    let mut out = vec![("automorphism(0.3,0)".to_string(), MapExpr::automorphism(a)?)];
    for k in 0..2 {
        out.push((
            format!("automorphism_random{k}"),
            crate::maps::catalog::random_automorphism(&mut rng, n, 0.5)?,
        ));
    }
    out.push(("perturbation(0.02)".into(), catalog::perturbation(n, 0.02)?));
    out.push(("cubic_perturbation(0.01)".into(), catalog::cubic_perturbation(n, 0.01)?));
    Ok(out)
}

fn bound_suites<T: Real>(config: &SuiteConfig, kind: SuiteKind) -> Result<SuiteReport<T>> {
    let mut report = SuiteReport::empty(kind.name());
    for &n in &config.dims {
        let grid = GridSpec::with_resolution(config.radius, config.radii, config.phases, 1);
        for (label, f) in bound_families::<T>(n, config.seed)? {
            let measured = sup_norm_with(&f, &grid, &sweep_options())?;
            let alpha = measured.value * lit(config.alpha_scale);
            let part = match kind {
                SuiteKind::TensorBounds => tensor_bounds_check(&f, &label, alpha, &grid, 8)?,
                _ => ab_bounds_check(&f, &label, alpha, &default_zetas(n, config.seed), &grid)?,
            };
            report.absorb(part);
        }
    }
    Ok(report)
}

fn property_suite<T: Real>(config: &SuiteConfig, kind: SuiteKind) -> Result<SuiteReport<T>> {
    let mut report = SuiteReport::empty(kind.name());
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let tol0 = T::zero();
    match kind {
        SuiteKind::MoebiusAnnihilation => {
            for &n in &config.dims {
                for _ in 0..config.random_cases {
                    let f = catalog::random_moebius::<T, _>(&mut rng, n)?;
                    let z = catalog::random_point::<T, _>(&mut rng, n, 0.9);
                    let t = schwarzian_tensor(&f, &z)?;
                    for (check, lhs) in [("moebius_annihilation", t.max_abs()), ("canonical_form", canonical_residual(&t))] {
                        report.record(lhs, lit(IDENTITY_TOL), tol0, || {
                            let mut v = violation(check, map_label("random moebius", &z), Subject::Map(f.clone()));
                            v.z = z.clone();
                            v
                        });
                    }
                }
            }
        }
        SuiteKind::ChainRule => {
            for &n in &config.dims {
                let cat = catalog::catalog::<T>(n)?;
                for _ in 0..config.random_cases {
                    let g = &cat[rng.gen_range(0..cat.len())];
                    let f = &cat[rng.gen_range(0..cat.len())];
                    let z = catalog::random_point::<T, _>(&mut rng, n, 0.3);
                    // composition may be singular at z; such cases are skipped
                    match chain_rule_residual(&g.map, &f.map, &z) {
                        Ok(res) => report.record(res, lit(CHAIN_TOL), tol0, || {
                            let mut v = violation(
                                "chain_rule",
                                map_label(&format!("{} after {}", g.name, f.name), &z),
                                Subject::Pair(g.map.clone(), f.map.clone()),
                            );
                            v.z = z.clone();
                            v
                        }),
                        Err(_) => report.skipped += 1,
                    }
                }
            }
        }
        SuiteKind::AutomorphismNorm => {
            let grid = GridSpec::with_resolution(config.radius, config.radii, config.phases, 1);
            for &n in &config.dims {
                for _ in 0..config.random_cases {
                    let a = catalog::random_point::<T, _>(&mut rng, n, 0.7);
                    let psi = MapExpr::automorphism(a.clone())?;
                    let s = sup_norm_with(&psi, &grid, &sweep_options())?;
                    let bound = automorphism_norm_bound(&a);
                    report.record(s.value, bound, lit(IDENTITY_TOL), || {
                        let mut v = violation("automorphism_norm", map_label("automorphism", &a), Subject::Map(psi.clone()));
                        v.z = s.witness_z.clone();
                        v
                    });
                }
            }
        }
        SuiteKind::RiccatiMonotone => {
            // once a constant blows up, every larger one must too
            let mut blown: Option<T> = None;
            for k in 0..20 {
                let c = lit::<T>(0.5 * k as f64 / 19.0);
                let out = riccati_solve(c, lit(0.999))?;
                let blows = out.blowup().is_some();
                match (blows, blown) {
                    (true, None) => blown = Some(c),
                    (false, Some(_)) => report.record(T::one(), T::zero(), tol0, || {
                        violation("riccati_monotone", format!("c={c}"), Subject::Riccati(c))
                    }),
                    _ => report.record(T::zero(), T::zero(), tol0, || unreachable!()),
                }
            }
        }
        SuiteKind::DilationContraction => {
            let grid = GridSpec::with_resolution(0.0, 4, 6, 1);
            let opts = sweep_options();
            for entry in catalog::catalog::<T>(2)?.into_iter().step_by(2) {
                for (r, s) in [(0.2, 0.5), (0.4, 0.9)] {
                    let (r, s) = (lit::<T>(r), lit::<T>(s));
                    let d = dilation_contraction_check(&entry.map, r, s, &grid, &opts)?;
                    let subject = Subject::Dilation {
                        map: entry.map.clone(),
                        r,
                        s,
                    };
                    let label = format!("{} r={r} s={s}", entry.name);
                    report.record(d.ratio, d.factor, lit(crate::order::DILATION_RATIO_TOL), || {
                        violation("dilation_ratio", label.clone(), subject.clone())
                    });
                    report.record(d.grad_residual, T::zero(), lit(crate::order::DILATION_GRAD_TOL), || {
                        violation("dilation_grad", label.clone(), subject.clone())
                    });
                }
            }
        }
        _ => unreachable!("not a property suite"),
    }
    Ok(report)
}

/// `run_suite`: runs the configured suites in order and aggregates them.
pub fn run_suite<T: Real>(config: &SuiteConfig) -> Result<SuiteReport<T>> {
    if !(config.alpha_scale >= 0.0) {
        return Err(Error::InvalidParameter("alpha_scale must be >= 0".into()));
    }
    let mut report = SuiteReport::empty("aggregate");
    for &kind in &config.suites {
        let part = match kind {
            SuiteKind::DiskLemma => {
                let mut r = SuiteReport::empty(kind.name());
                let grid = DiskGrid::default();
                for (sample, c, k) in disk_samples() {
                    r.absorb(disk_lemma_check(&sample, lit::<T>(c), k, &grid));
                }
                r
            }
            SuiteKind::TensorBounds | SuiteKind::AbBounds => bound_suites(config, kind)?,
            _ => property_suite(config, kind)?,
        };
        report.absorb(part);
    }
    Ok(report)
}

//! Comparison ODEs along rays: transport of solutions of the second-order
//! system `Hess u = Σ_k P^k ∂_k u + P^0 u`, closed-form envelopes for
//! `h'' ≤ 2a h'/(1−x²) + b h/(1−x²)²`, the Riccati equation
//! `h' = 1.6c h/(1−x²) + 4.5c/(1−x²)² + h²` and the vanishing-radius equation
//! `y'' + ε y/(1−t²)² = −δ/(1−t²)^p ((1+t)/(1−t))^γ`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::maps::{map_jet, normalize, MapExpr};
use crate::ode::{integrate, OdeOptions, Termination, Trajectory};
use crate::scalar::{cx, czero, from_usize, lit, norm2, norm_inf, to_f64, Cx, Real};
use crate::schwarzian::schwarzian_tensor;

/// Smallness threshold `1/6.1` for `n√n·α`.
pub const SMALL_ALPHA_THRESHOLD: f64 = 1.0 / 6.1;

/// `2/(6.1 + √(6.1² − 1.6²))`, beyond which the Riccati solution blows up.
pub fn riccati_sharp_threshold() -> f64 {
    2.0 / (6.1 + (6.1f64 * 6.1 - 1.6 * 1.6).sqrt())
}

/// Cap on `φ = (1−x)h` beyond which blow-up is declared.
pub const BLOWUP_CAP: f64 = 1e6;

/// Relative threshold for declaring a zero of `|u|`.
pub const ZERO_THRESHOLD: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GammaVariant {
    /// `2γ = a + √(1+b+a²) − 1`.
    #[default]
    Proof,
    /// `2γ = √(1+b+a²) − 1`.
    Statement,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundParams<T: Real> {
    pub n: usize,
    pub alpha: T,
    pub a: T,
    pub b: T,
    pub gamma: T,
    pub gamma_variant: GammaVariant,
    pub tau: T,
    pub c1: T,
    pub c2: T,
    /// Coefficient of `y` in the vanishing-radius equation.
    pub eps: T,
    /// Forcing constant of the vanishing-radius equation.
    pub delta: T,
}

impl<T: Real> BoundParams<T> {
    pub fn new(n: usize, alpha: T) -> Result<Self> {
        Self::with_variant(n, alpha, GammaVariant::Proof)
    }

    pub fn with_variant(n: usize, alpha: T, variant: GammaVariant) -> Result<Self> {
        if n < 2 {
            return Err(Error::DimensionTooSmall(n));
        }
        if !(alpha >= T::zero()) {
            return Err(Error::InvalidParameter(format!("alpha must be >= 0, got {alpha}")));
        }
        let nf = from_usize::<T>(n);
        let sn = nf.sqrt();
        let two = lit::<T>(2.0);
        let a = lit::<T>(0.8) * nf * sn * alpha;
        let b = two * (lit::<T>(3.0) + two * alpha) * sn * a;
        let c = (T::one() + b + a * a).sqrt();
        let gamma = match variant {
            GammaVariant::Proof => (a + c - T::one()) / two,
            GammaVariant::Statement => (c - T::one()) / two,
        };
        let tau = lit::<T>(1.6) * nf * sn * alpha;
        let nm1 = nf - T::one();
        let c1 = two * (two * nf).sqrt() / nm1 * (two + nm1 * nm1);
        let c2 = two * sn / nm1 * (nf + nm1 * nm1);
        let eps = lit::<T>(5.0) * nf * nf * alpha + two * nf * (nf + T::one()) * alpha * alpha;
        let delta = lit::<T>(3.0) * nf * alpha * two * (T::one() + two * gamma);
        Ok(BoundParams {
            n,
            alpha,
            a,
            b,
            gamma,
            gamma_variant: variant,
            tau,
            c1,
            c2,
            eps,
            delta,
        })
    }

    /// `n√n·α`.
    pub fn smallness(&self) -> T {
        let nf = from_usize::<T>(self.n);
        nf * nf.sqrt() * self.alpha
    }

    /// `|u| ≤ 2((1+t)/(1−t))^γ`.
    pub fn u_bound(&self, t: T) -> T {
        lit::<T>(2.0) * ((T::one() + t) / (T::one() - t)).powf(self.gamma)
    }

    /// `|∇u| ≤ 2(1+2γ)/(1−t²) ((1+t)/(1−t))^γ`.
    pub fn grad_bound(&self, t: T) -> T {
        let two = lit::<T>(2.0);
        two * (T::one() + two * self.gamma) / (T::one() - t * t) * ((T::one() + t) / (T::one() - t)).powf(self.gamma)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OdeStatus<T: Real> {
    CompletedTo { t_end: T },
    FirstZeroAt { t0: T, lo: T, hi: T },
    /// `log_lo`, `log_hi` bracket `−ln(1 − x₁)`.
    BlowupAt { x1: T, lo: T, hi: T, log_lo: T, log_hi: T },
}

#[derive(Debug, Clone, PartialEq)]
pub struct OdeOutcome<T: Real> {
    /// Name of the independent variable.
    pub abscissa: &'static str,
    pub labels: Vec<&'static str>,
    /// `(t, values)`, strictly increasing in `t`.
    pub samples: Vec<(T, Vec<T>)>,
    pub status: OdeStatus<T>,
    pub envelope_ok: bool,
    /// Smallest (relative) envelope margin; `None` when no envelope applies.
    pub worst_margin: Option<T>,
    pub warning: Option<String>,
}

impl<T: Real> OdeOutcome<T> {
    pub fn is_completed(&self) -> bool {
        matches!(self.status, OdeStatus::CompletedTo { .. })
    }

    pub fn blowup(&self) -> Option<(T, T, T)> {
        match self.status {
            OdeStatus::BlowupAt { x1, lo, hi, .. } => Some((x1, lo, hi)),
            _ => None,
        }
    }

    pub fn first_zero(&self) -> Option<(T, T, T)> {
        match self.status {
            OdeStatus::FirstZeroAt { t0, lo, hi } => Some((t0, lo, hi)),
            _ => None,
        }
    }
}

fn check_unit_interval<T: Real>(name: &str, x: T) -> Result<()> {
    if !(x >= T::zero() && x < T::one()) {
        return Err(Error::InvalidParameter(format!("{name} must lie in [0, 1), got {x}")));
    }
    Ok(())
}

fn check_nonneg<T: Real>(name: &str, x: T) -> Result<()> {
    if !(x >= T::zero()) || !x.is_finite() {
        return Err(Error::InvalidParameter(format!("{name} must be >= 0, got {x}")));
    }
    Ok(())
}

/// Coefficients `(S^k_ij, S^0_ij)` of the second-order system at a point.
pub trait CoefficientSource<T: Real>: Sync {
    fn n(&self) -> usize;
    fn coefficients(&self, z: &[Cx<T>]) -> Result<(Vec<CMatrix<T>>, CMatrix<T>)>;
}

impl<T: Real> CoefficientSource<T> for MapExpr<T> {
    fn n(&self) -> usize {
        MapExpr::n(self)
    }

    fn coefficients(&self, z: &[Cx<T>]) -> Result<(Vec<CMatrix<T>>, CMatrix<T>)> {
        let t = schwarzian_tensor(self, z)?;
        Ok((t.s, t.s0))
    }
}

/// Transported solution along `t ↦ tζ` with `u` and `∇u` unpacked.
#[derive(Debug, Clone, PartialEq)]
pub struct RayPath<T: Real> {
    pub t: Vec<T>,
    pub u: Vec<Cx<T>>,
    pub grad: Vec<Vec<Cx<T>>>,
}

impl<T: Real> OdeOutcome<T> {
    /// Unpacks a transport outcome.
    pub fn ray_path(&self) -> RayPath<T> {
        let mut p = RayPath {
            t: Vec::new(),
            u: Vec::new(),
            grad: Vec::new(),
        };
        for (t, v) in &self.samples {
            p.t.push(*t);
            p.u.push(Cx::new(v[0], v[1]));
            p.grad.push(v[2..].chunks(2).map(|c| Cx::new(c[0], c[1])).collect());
        }
        p
    }
}

const TRANSPORT_LABELS: [&str; 18] = [
    "re_u", "im_u", "re_du1", "im_du1", "re_du2", "im_du2", "re_du3", "im_du3", "re_du4", "im_du4", "re_du5",
    "im_du5", "re_du6", "im_du6", "re_du7", "im_du7", "re_du8", "im_du8",
];

/// `transport_ray`: integrates `u' = ∇u·ζ`, `φ_j' = Σ_k P^k_j φ_k + P^0_j u`
/// with `P^k_j = Σ_i ζ_i P^k_ij`, `P^0_j = Σ_i ζ_i P^0_ij`, `φ = ∇u`.
pub fn transport_ray<T: Real, S: CoefficientSource<T> + ?Sized>(
    source: &S,
    zeta: &[Cx<T>],
    u0: Cx<T>,
    grad0: &[Cx<T>],
    t_end: T,
    opts: &OdeOptions,
) -> Result<OdeOutcome<T>> {
    let n = source.n();
    if zeta.len() != n || grad0.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: if zeta.len() != n { zeta.len() } else { grad0.len() },
        });
    }
    let zn = to_f64(norm_inf(zeta));
    if (zn - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidParameter(format!("direction must have |zeta|_inf = 1, got {zn}")));
    }
    check_unit_interval("t_end", t_end)?;
    let mut y0 = vec![u0.re, u0.im];
    for g in grad0 {
        y0.push(g.re);
        y0.push(g.im);
    }
    let rhs = |t: T, y: &[T], dy: &mut [T]| -> Result<()> {
        let z: Vec<Cx<T>> = zeta.iter().map(|c| *c * t).collect();
        let (s, s0) = source.coefficients(&z)?;
        let u = Cx::new(y[0], y[1]);
        let phi: Vec<Cx<T>> = (0..n).map(|k| Cx::new(y[2 + 2 * k], y[3 + 2 * k])).collect();
        let du = phi.iter().zip(zeta).fold(czero::<T>(), |a, (p, z)| a + *p * *z);
        dy[0] = du.re;
        dy[1] = du.im;
        for j in 0..n {
            let mut acc = czero::<T>();
            for i in 0..n {
                let mut inner = s0[i][j] * u;
                for (k, pk) in phi.iter().enumerate() {
                    inner += s[k][i][j] * *pk;
                }
                acc += zeta[i] * inner;
            }
            dy[2 + 2 * j] = acc.re;
            dy[3 + 2 * j] = acc.im;
        }
        Ok(())
    };
    // A zero is either |u| below the relative threshold or a chord from the
    // last zero-free state through (numerically) the origin.
    let mut max_u = u0.norm();
    let mut prev = u0;
    let event = |_t: T, y: &[T]| {
        let u = Cx::new(y[0], y[1]);
        let m = u.norm();
        let thr = lit::<T>(ZERO_THRESHOLD) * max_u;
        if m < thr {
            return true;
        }
        if (u * prev.conj()).re <= T::zero() && segment_distance(prev, u) < thr {
            return true;
        }
        max_u = max_u.max(m);
        prev = u;
        false
    };
    let opts = OdeOptions {
        singular_at: Some(1.0),
        ..*opts
    };
    let tr = integrate(rhs, T::zero(), &y0, t_end, &opts, event)?;
    let mut labels: Vec<&'static str> = TRANSPORT_LABELS.iter().take(2 + 2 * n).copied().collect();
    while labels.len() < 2 + 2 * n {
        labels.push("du");
    }
    let (status, warning) = zero_status(&tr, t_end);
    Ok(OdeOutcome {
        abscissa: "t",
        labels,
        samples: tr.samples,
        status,
        envelope_ok: true,
        worst_margin: None,
        warning,
    })
}

// (bound − value)/bound, with 0 ≤ 0 counted as full margin.
fn rel_margin<T: Real>(bound: T, value: T) -> T {
    if bound > T::zero() {
        (bound - value) / bound
    } else if value <= T::zero() {
        T::one()
    } else {
        -T::infinity()
    }
}

fn segment_distance<T: Real>(a: Cx<T>, b: Cx<T>) -> T {
    let d = b - a;
    let len2 = d.norm_sqr();
    if len2 == T::zero() {
        return a.norm();
    }
    let s = (-(a.conj() * d).re / len2).max(T::zero()).min(T::one());
    (a + d * s).norm()
}

fn zero_status<T: Real>(tr: &Trajectory<T>, t_end: T) -> (OdeStatus<T>, Option<String>) {
    match &tr.end {
        Termination::Reached => (OdeStatus::CompletedTo { t_end }, None),
        Termination::Event { lo, hi, .. } => (
            OdeStatus::FirstZeroAt {
                t0: (*lo + *hi) * lit(0.5),
                lo: *lo,
                hi: *hi,
            },
            None,
        ),
        Termination::Underflow { t } => (
            OdeStatus::CompletedTo { t_end: *t },
            Some(format!("step size underflow at t = {}", to_f64(*t))),
        ),
    }
}

/// `linear_envelope`: `(2((1+x)/(1−x))^{(a+c−1)/2}, (a+c)/(1−x²)·h_bound)`
/// with `c = √(1+b+a²)`.
pub fn linear_envelope<T: Real>(a: T, b: T, x: T) -> Result<(T, T)> {
    check_nonneg("a", a)?;
    check_nonneg("b", b)?;
    check_unit_interval("x", x)?;
    let c = (T::one() + b + a * a).sqrt();
    let two = lit::<T>(2.0);
    let h = two * ((T::one() + x) / (T::one() - x)).powf((a + c - T::one()) / two);
    Ok((h, (a + c) / (T::one() - x * x) * h))
}

/// Relative tolerance used by the envelope comparisons.
pub const ENVELOPE_REL_TOL: f64 = 1e-6;

/// `linear_comparison_check`: solves `h'' = 2a h'/(1−x²) + b h/(1−x²)²`,
/// `h(0) = 1`, `h'(0) = 0` and compares against [`linear_envelope`] and the
/// sharper `h' ≤ (a+c) h/(1−x²)`. Margins are relative.
pub fn linear_comparison_check<T: Real>(a: T, b: T, x_end: T) -> Result<OdeOutcome<T>> {
    linear_comparison_check_with(a, b, x_end, &OdeOptions::toward_unit())
}

pub fn linear_comparison_check_with<T: Real>(a: T, b: T, x_end: T, opts: &OdeOptions) -> Result<OdeOutcome<T>> {
    check_nonneg("a", a)?;
    check_nonneg("b", b)?;
    check_unit_interval("x_end", x_end)?;
    let two = lit::<T>(2.0);
    let rhs = |x: T, y: &[T], dy: &mut [T]| -> Result<()> {
        let w = T::one() - x * x;
        dy[0] = y[1];
        dy[1] = two * a / w * y[1] + b / (w * w) * y[0];
        Ok(())
    };
    let opts = OdeOptions {
        singular_at: Some(1.0),
        ..*opts
    };
    let tr = integrate(rhs, T::zero(), &[T::one(), T::zero()], x_end, &opts, |_, _| false)?;
    let c = (T::one() + b + a * a).sqrt();
    let mut worst = T::infinity();
    for (x, y) in &tr.samples {
        let (hb, hpb) = linear_envelope(a, b, *x)?;
        let sharp = (a + c) / (T::one() - *x * *x) * y[0];
        worst = worst.min((hb - y[0]) / hb);
        worst = worst.min((hpb - y[1]) / hpb);
        worst = worst.min((sharp - y[1]) / sharp.abs().max(T::min_positive_value()));
    }
    let (status, warning) = zero_status(&tr, x_end);
    Ok(OdeOutcome {
        abscissa: "x",
        labels: vec!["h", "dh"],
        samples: tr.samples,
        status,
        envelope_ok: worst >= -lit::<T>(ENVELOPE_REL_TOL),
        worst_margin: Some(worst),
        warning,
    })
}

/// `riccati_solve` up to `x_end`.
///
/// The equation is integrated for `φ = (1−x)h` in the variable
/// `s = −ln(1−x)`, where it reads `dφ/ds = φ² − (1 − 1.6c/(1+x))φ + 4.5c/(1+x)²`.
/// Samples are `(x, [h, φ])`; the envelope is `h ≤ x/(1−x²)`, i.e.
/// `φ ≤ x/(1+x)`, with the absolute margin on `φ` reported.
pub fn riccati_solve<T: Real>(c: T, x_end: T) -> Result<OdeOutcome<T>> {
    riccati_solve_with(c, x_end, &riccati_options())
}

pub fn riccati_options() -> OdeOptions {
    OdeOptions {
        h_max: 0.25,
        ..OdeOptions::default()
    }
}

pub fn riccati_solve_with<T: Real>(c: T, x_end: T, opts: &OdeOptions) -> Result<OdeOutcome<T>> {
    check_unit_interval("x_end", x_end)?;
    let s_end = -(T::one() - x_end).ln();
    let mut out = riccati_core(c, s_end, opts)?;
    out.abscissa = "x";
    out.labels = vec!["h", "phi"];
    for (t, v) in out.samples.iter_mut() {
        let gap = (-*t).exp();
        let phi = v[0];
        *t = T::one() - gap;
        *v = vec![phi / gap, phi];
    }
    if let OdeStatus::CompletedTo { t_end } = &mut out.status {
        *t_end = x_end;
    }
    Ok(out)
}

/// Riccati solution in the log variable `s = −ln(1−x)` up to `s_end`, for
/// horizons where `1 − x` is below double precision resolution. Samples are
/// `(s, [φ])`.
pub fn riccati_solve_log_horizon<T: Real>(c: T, s_end: T) -> Result<OdeOutcome<T>> {
    riccati_core(c, s_end, &riccati_options())
}

fn riccati_rhs<T: Real>(c: T, s: T, phi: T) -> T {
    let x = -(-s).exp_m1();
    let onex = T::one() + x;
    phi * phi - (T::one() - lit::<T>(1.6) * c / onex) * phi + lit::<T>(4.5) * c / (onex * onex)
}

fn riccati_core<T: Real>(c: T, s_end: T, opts: &OdeOptions) -> Result<OdeOutcome<T>> {
    check_nonneg("c", c)?;
    if !(s_end > T::zero()) || !s_end.is_finite() {
        return Err(Error::InvalidParameter(format!("horizon must be positive, got {s_end}")));
    }
    let cap = lit::<T>(BLOWUP_CAP);
    let rhs = |s: T, y: &[T], dy: &mut [T]| -> Result<()> {
        dy[0] = riccati_rhs(c, s, y[0]);
        Ok(())
    };
    let event = |s: T, y: &[T]| y[0] > cap && riccati_rhs(c, s, y[0]) > T::zero();
    let opts = OdeOptions {
        singular_at: None,
        ..*opts
    };
    let tr = integrate(rhs, T::zero(), &[T::zero()], s_end, &opts, event)?;
    let mut worst = T::infinity();
    for (s, y) in &tr.samples {
        let x = -(-*s).exp_m1();
        worst = worst.min(x / (T::one() + x) - y[0]);
    }
    let status = match &tr.end {
        Termination::Reached => OdeStatus::CompletedTo { t_end: s_end },
        Termination::Event { lo, hi, y_lo } => {
            // past the crossing, dφ/ds ≥ φ(φ−1), so at most ln(φ/(φ−1)) remains
            let phi_c = y_lo[0].max(cap);
            let log_lo = *lo;
            let log_hi = *hi + (phi_c / (phi_c - T::one())).ln();
            blowup_status(log_lo, log_hi)
        }
        Termination::Underflow { t } => {
            let phi_c = tr.last().1[0];
            let extra = if phi_c > lit(2.0) {
                (phi_c / (phi_c - T::one())).ln()
            } else {
                lit(1e-6)
            };
            blowup_status(*t, *t + extra)
        }
    };
    Ok(OdeOutcome {
        abscissa: "s",
        labels: vec!["phi"],
        samples: tr.samples,
        status,
        envelope_ok: worst >= T::zero(),
        worst_margin: Some(worst),
        warning: None,
    })
}

fn blowup_status<T: Real>(log_lo: T, log_hi: T) -> OdeStatus<T> {
    let lo = -(-log_lo).exp_m1();
    let hi = -(-log_hi).exp_m1();
    OdeStatus::BlowupAt {
        x1: (lo + hi) * lit(0.5),
        lo,
        hi,
        log_lo,
        log_hi,
    }
}

/// Right-hand side exponent of the vanishing-radius equation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RhsPower {
    One,
    #[default]
    Two,
}

impl RhsPower {
    pub fn from_int(p: u32) -> Result<Self> {
        match p {
            1 => Ok(RhsPower::One),
            2 => Ok(RhsPower::Two),
            _ => Err(Error::InvalidParameter(format!("rhs_power must be 1 or 2, got {p}"))),
        }
    }

    pub fn as_int(self) -> u32 {
        match self {
            RhsPower::One => 1,
            RhsPower::Two => 2,
        }
    }
}

/// Upper end of the vanishing-radius integration.
pub const VANISH_T_END: f64 = 1.0 - 1e-6;

/// `vanish_radius`: first zero of `y` with `y(0) = 1`, `y'(0) = 0`.
pub fn vanish_radius<T: Real>(eps: T, delta: T, gamma: T, rhs_power: RhsPower) -> Result<OdeOutcome<T>> {
    vanish_radius_with(eps, delta, gamma, rhs_power, &OdeOptions::toward_unit())
}

pub fn vanish_radius_with<T: Real>(
    eps: T,
    delta: T,
    gamma: T,
    rhs_power: RhsPower,
    opts: &OdeOptions,
) -> Result<OdeOutcome<T>> {
    check_nonneg("eps", eps)?;
    check_nonneg("delta", delta)?;
    if !gamma.is_finite() {
        return Err(Error::InvalidParameter("gamma must be finite".into()));
    }
    let rhs = |t: T, y: &[T], dy: &mut [T]| -> Result<()> {
        let w = T::one() - t * t;
        let forcing = delta * ((T::one() + t) / (T::one() - t)).powf(gamma)
            / match rhs_power {
                RhsPower::One => w,
                RhsPower::Two => w * w,
            };
        dy[0] = y[1];
        dy[1] = -eps / (w * w) * y[0] - forcing;
        Ok(())
    };
    let opts = OdeOptions {
        singular_at: Some(1.0),
        event_tol: opts.event_tol.min(1e-10),
        ..*opts
    };
    let t_end = lit::<T>(VANISH_T_END);
    let tr = integrate(rhs, T::zero(), &[T::one(), T::zero()], t_end, &opts, |_, y| y[0] <= T::zero())?;
    let (status, warning) = zero_status(&tr, t_end);
    Ok(OdeOutcome {
        abscissa: "t",
        labels: vec!["y", "dy"],
        samples: tr.samples,
        status,
        envelope_ok: true,
        worst_margin: None,
        warning,
    })
}

/// One envelope violation along a ray.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvelopeViolation<T: Real> {
    pub zeta: Vec<Cx<T>>,
    pub t: T,
    pub check: &'static str,
    pub margin: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnvelopeReport<T: Real> {
    /// False when `n√n·α > 1/6.1`; no rays are run then.
    pub applicable: bool,
    pub params: BoundParams<T>,
    pub smallness: T,
    pub rays: usize,
    pub t_end: T,
    pub zero_found: bool,
    /// `t/(1−t²) − |∇u/u|`, relative.
    pub ratio_margin: T,
    /// `|u| − (1−t²)^{√n/2}`, relative.
    pub lower_margin: T,
    /// `(1−t²)^{−√n/2} − |u|`, relative.
    pub upper_margin: T,
    /// Margins for `|u| ≤ 2((1+t)/(1−t))^γ` and the matching `|∇u|` bound.
    pub u_bound_margin: T,
    pub grad_bound_margin: T,
    /// Two-sided `|J_g|` envelope with exponent `√n(n+1)/2`, `g` normalized.
    pub jacobian_margin: T,
    /// Largest relative gap between `|u|^{−(n+1)}` and `|J_g|`.
    pub consistency: T,
    pub worst_margin: T,
    pub violations: Vec<EnvelopeViolation<T>>,
    pub ok: bool,
}

/// Tolerance on relative envelope margins before a violation is recorded.
pub const ENVELOPE_TOL: f64 = 1e-9;

/// Ray directions with `|ζ|∞ = 1`: the `n` coordinate axes, the diagonal, then
/// seeded directions with one unimodular coordinate (cycling) and the others
/// of random modulus.
pub fn boundary_directions<T: Real>(n: usize, count: usize, seed: u64) -> Vec<Vec<Cx<T>>> {
    let mut out = Vec::with_capacity(count);
    for i in 0..n.min(count) {
        let mut z = vec![czero(); n];
        z[i] = cx(1.0, 0.0);
        out.push(z);
    }
    if out.len() < count {
        out.push(vec![cx(1.0, 0.0); n]);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut k = 0;
    while out.len() < count {
        let z = (0..n)
            .map(|i| {
                let rho = if i == k % n { 1.0 } else { rng.gen::<f64>() };
                let th = rng.gen_range(0.0..std::f64::consts::TAU);
                cx(rho * th.cos(), rho * th.sin())
            })
            .collect();
        out.push(z);
        k += 1;
    }
    out
}

/// `envelope_check_u`: transports the normalized solution of the system of
/// `source` along `rays` directions up to `t_end` and checks the small-α
/// envelopes, the general `|u|`/`|∇u|` bounds and the `|J_g|` envelope of
/// the normalized map.
pub fn envelope_check_u<T: Real>(
    source: &MapExpr<T>,
    alpha: T,
    rays: usize,
    t_end: T,
    seed: u64,
) -> Result<EnvelopeReport<T>> {
    let n = source.n();
    let params = BoundParams::new(n, alpha)?;
    check_unit_interval("t_end", t_end)?;
    let smallness = params.smallness();
    let mut report = EnvelopeReport {
        applicable: smallness <= lit(SMALL_ALPHA_THRESHOLD),
        params,
        smallness,
        rays,
        t_end,
        zero_found: false,
        ratio_margin: T::infinity(),
        lower_margin: T::infinity(),
        upper_margin: T::infinity(),
        u_bound_margin: T::infinity(),
        grad_bound_margin: T::infinity(),
        jacobian_margin: T::infinity(),
        consistency: T::zero(),
        worst_margin: T::infinity(),
        violations: Vec::new(),
        ok: true,
    };
    if !report.applicable {
        report.ok = false;
        return Ok(report);
    }
    let g = normalize(source)?;
    let dirs = boundary_directions::<T>(n, rays, seed);
    let zero = vec![czero::<T>(); n];
    let opts = OdeOptions::toward_unit();
    let paths: Vec<Result<OdeOutcome<T>>> = dirs
        .par_iter()
        .map(|zeta| transport_ray(source, zeta, Cx::new(T::one(), T::zero()), &zero, t_end, &opts))
        .collect();
    let nf = from_usize::<T>(n);
    let half_sqrt_n = nf.sqrt() / lit(2.0);
    let jac_exp = half_sqrt_n * (nf + T::one());
    let tol = lit::<T>(ENVELOPE_TOL);
    for (zeta, out) in dirs.iter().zip(paths) {
        let out = out?;
        if out.first_zero().is_some() {
            report.zero_found = true;
        }
        let path = out.ray_path();
        // every envelope is an equality at t = 0
        for ((t, u), grad) in path.t.iter().zip(&path.u).zip(&path.grad).skip(1) {
            let t = *t;
            let w = T::one() - t * t;
            let um = u.norm();
            let gm = norm2(grad);
            let mut checks: Vec<(&'static str, T)> = Vec::with_capacity(7);
            let rb = t / w;
            checks.push(("grad_ratio", rel_margin(rb, gm / um)));
            let lo = w.powf(half_sqrt_n);
            checks.push(("u_lower", (um - lo) / lo));
            let hi = w.powf(-half_sqrt_n);
            checks.push(("u_upper", (hi - um) / hi));
            let ub = report.params.u_bound(t);
            checks.push(("u_bound", (ub - um) / ub));
            let gb = report.params.grad_bound(t);
            checks.push(("grad_bound", (gb - gm) / gb));
            let z: Vec<Cx<T>> = zeta.iter().map(|c| *c * t).collect();
            let jg = map_jet(&g, &z)?.jacobian_det().norm();
            let jlo = w.powf(jac_exp);
            let jhi = w.powf(-jac_exp);
            checks.push(("jacobian", ((jg - jlo) / jlo).min((jhi - jg) / jhi)));
            let predicted = um.powf(-(nf + T::one()));
            report.consistency = report.consistency.max((predicted - jg).abs() / jg);
            for (name, m) in checks {
                let slot = match name {
                    "grad_ratio" => &mut report.ratio_margin,
                    "u_lower" => &mut report.lower_margin,
                    "u_upper" => &mut report.upper_margin,
                    "u_bound" => &mut report.u_bound_margin,
                    "grad_bound" => &mut report.grad_bound_margin,
                    _ => &mut report.jacobian_margin,
                };
                *slot = slot.min(m);
                report.worst_margin = report.worst_margin.min(m);
                if m < -tol || !m.is_finite() {
                    report.violations.push(EnvelopeViolation {
                        zeta: zeta.clone(),
                        t,
                        check: name,
                        margin: m,
                    });
                }
            }
        }
    }
    report.ok = report.violations.is_empty() && !report.zero_found;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    type M = MapExpr<f64>;

    #[test]
    fn bound_params_constants() {
        let p = BoundParams::new(2, 0.1).unwrap();
        let s2 = 2f64.sqrt();
        assert!((p.a - 0.8 * 2.0 * s2 * 0.1).abs() < 1e-15);
        assert!((p.b - 2.0 * 3.2 * s2 * p.a).abs() < 1e-14);
        assert!((p.tau - 1.6 * 2.0 * s2 * 0.1).abs() < 1e-15);
        assert!((p.c1 - 2.0 * 2.0 * 3.0).abs() < 1e-14);
        assert!((p.c2 - 2.0 * s2 * 3.0).abs() < 1e-14);
        let c = (1.0 + p.b + p.a * p.a).sqrt();
        assert!((2.0 * p.gamma - (p.a + c - 1.0)).abs() < 1e-15);
        let q = BoundParams::with_variant(2, 0.1, GammaVariant::Statement).unwrap();
        assert!((2.0 * q.gamma - (c - 1.0)).abs() < 1e-15);
        assert!((p.eps - (20.0 * 0.1 + 12.0 * 0.01)).abs() < 1e-14);
        assert!((p.delta - 0.6 * 2.0 * (1.0 + 2.0 * p.gamma)).abs() < 1e-14);
        for n in 2..8 {
            for &alpha in &[0.0, 0.01, 0.1, 0.5, 2.0] {
                let p = BoundParams::new(n, alpha).unwrap();
                assert!(p.c1 * alpha + p.c2 * alpha * alpha <= (3.0 + 2.0 * alpha) * p.tau + 1e-12);
            }
        }
        assert!(BoundParams::new(1, 0.1f64).is_err());
    }

    #[test]
    fn transport_identity_is_constant() {
        let id = M::identity(2).unwrap();
        let out = transport_ray(&id, &[cx(1.0, 0.0), czero()], cx(1.0, 0.0), &[czero(), czero()], 0.9, &OdeOptions::default())
            .unwrap();
        assert!(out.is_completed());
        for u in out.ray_path().u {
            assert_eq!(u, cx(1.0, 0.0));
        }
    }

    #[test]
    fn transport_moebius_reproduces_affine_solution() {
        let f = M::moebius_linear_form(&[cx(0.5, 0.0), czero()]).unwrap();
        let out = transport_ray(
            &f,
            &[cx(1.0, 0.0), czero()],
            cx(1.0, 0.0),
            &[cx(-0.5, 0.0), czero()],
            0.99,
            &OdeOptions::default(),
        )
        .unwrap();
        assert_eq!(out.status, OdeStatus::CompletedTo { t_end: 0.99 });
        let path = out.ray_path();
        assert_eq!(*path.t.last().unwrap(), 0.99);
        for (t, u) in path.t.iter().zip(&path.u) {
            assert!((u - cx(1.0 - 0.5 * t, 0.0)).norm() < 1e-8);
        }
    }

    #[test]
    fn transport_detects_zero() {
        // u = 1 − 2t vanishes at t = 1/2 for the trivial system
        let id = M::identity(2).unwrap();
        let out = transport_ray(&id, &[cx(1.0, 0.0), czero()], cx(1.0, 0.0), &[cx(-2.0, 0.0), czero()], 0.9, &OdeOptions::default())
            .unwrap();
        let (t0, lo, hi) = out.first_zero().unwrap();
        assert!(lo <= 0.5 + 1e-9 && hi >= 0.5 - 1e-9, "{lo} {hi}");
        assert!((t0 - 0.5).abs() < 1e-9);
        assert!(transport_ray(&id, &[cx(0.5, 0.0), czero()], cx(1.0, 0.0), &[czero(), czero()], 0.9, &OdeOptions::default())
            .is_err());
    }

    #[test]
    fn linear_envelope_examples() {
        for x in [0.0, 0.3, 0.9] {
            assert_eq!(linear_envelope(0.0, 0.0, x).unwrap().0, 2.0);
        }
        let (h, _) = linear_envelope(0.0, 3.0, 0.5).unwrap();
        assert!((h - 2.0 * 3f64.sqrt()).abs() < 1e-14);
        let (a, b) = (0.7, 1.3);
        let c = (1.0 + b + a * a as f64).sqrt();
        let (h0, hp0) = linear_envelope(a, b, 0.0).unwrap();
        assert!((hp0 - (a + c) * h0).abs() < 1e-14);
        assert!(linear_envelope(0.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn linear_comparison_examples() {
        let out = linear_comparison_check(0.0, 0.0, 0.99).unwrap();
        assert!(out.envelope_ok);
        assert!(out.samples.iter().all(|(_, v)| v[0] == 1.0));
        let out = linear_comparison_check(0.2, 1.5, 0.99).unwrap();
        assert!(out.envelope_ok);
        assert!(out.worst_margin.unwrap() > 0.0);
        // two-term Taylor: h(x) ≈ 1 + (b/2)x²
        let out = linear_comparison_check(0.0f64, 3.0, 0.1).unwrap();
        let h = out.samples.last().unwrap().1[0];
        assert!((h - 1.015).abs() < 0.002, "{h}");
    }

    #[test]
    fn riccati_examples() {
        let out = riccati_solve(0.0, 0.999).unwrap();
        assert!(out.is_completed() && out.envelope_ok);
        assert!(out.samples.iter().all(|(_, v)| v[0] == 0.0));

        let out = riccati_solve(1.0 / 6.1, 0.999).unwrap();
        assert_eq!(out.status, OdeStatus::CompletedTo { t_end: 0.999 });
        assert!(out.envelope_ok);
        assert!(out.worst_margin.unwrap() >= 0.0);
        for (x, v) in &out.samples {
            assert!(v[0] <= x / (1.0 - x * x) + 1e-12);
        }

        let out = riccati_solve(0.2f64, 0.999).unwrap();
        let (x1, lo, hi) = out.blowup().unwrap();
        assert!(x1 < 1.0 && hi - lo < 1e-6 && lo <= x1 && x1 <= hi);
        assert!((x1 - 0.998879).abs() < 1e-5, "{x1}");
    }

    #[test]
    fn riccati_blowup_near_threshold_in_log_variable() {
        // c = 0.167 blows up at s ≈ 180, far below 1 − x resolution
        let out = riccati_solve_log_horizon(0.167, 400.0).unwrap();
        match out.status {
            OdeStatus::BlowupAt { log_lo, log_hi, .. } => {
                assert!(log_lo > 100.0 && log_lo < 300.0, "{log_lo}");
                assert!(log_hi - log_lo < 1e-5);
            }
            other => panic!("{other:?}"),
        }
        let below = riccati_solve_log_horizon(0.166, 400.0).unwrap();
        assert!(below.is_completed());
    }

    #[test]
    fn vanish_examples() {
        let out = vanish_radius(0.0, 0.0, 0.0, RhsPower::Two).unwrap();
        assert!(out.is_completed());
        assert!(out.samples.iter().all(|(_, v)| v[0] == 1.0));
        let out = vanish_radius(1.0f64, 0.0, 0.0, RhsPower::Two).unwrap();
        assert!(out.is_completed());
        for (t, v) in out.samples.iter().step_by(7) {
            assert!((v[0] - (1.0 - t * t).sqrt()).abs() < 1e-7);
        }
        let out = vanish_radius(4.0, 0.0, 0.0, RhsPower::Two).unwrap();
        let (t0, lo, hi) = out.first_zero().unwrap();
        assert!(t0 < 1.0 && hi - lo <= 1e-8);
        let p1 = vanish_radius(2.0, 0.5, 0.3, RhsPower::One).unwrap().first_zero().unwrap().0;
        let p2 = vanish_radius(2.0, 0.5, 0.3, RhsPower::Two).unwrap().first_zero().unwrap().0;
        assert!(p2 <= p1);
        assert!(RhsPower::from_int(3).is_err());
    }

    #[test]
    fn envelope_check_trivial_cases() {
        let m = M::moebius_linear_form(&[cx(0.4, 0.1), cx(-0.2, 0.3)]).unwrap();
        let r = envelope_check_u(&m, 0.0, 4, 0.9, 1).unwrap();
        assert!(r.applicable && r.ok, "{r:?}");
        assert!(r.ratio_margin > 0.99);
        let id = M::identity(2).unwrap();
        let r = envelope_check_u(&id, 0.0, 3, 0.9, 1).unwrap();
        assert!(r.ok);
        let r = envelope_check_u(&id, 0.1, 3, 0.9, 1).unwrap();
        assert!(!r.applicable && !r.ok);
    }

    #[test]
    fn boundary_directions_are_unit() {
        let d = boundary_directions::<f64>(3, 10, 5);
        assert_eq!(d.len(), 10);
        for z in d {
            assert!((norm_inf(&z) - 1.0).abs() < 1e-15);
        }
    }
}

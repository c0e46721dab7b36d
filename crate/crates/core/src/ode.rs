//! Adaptive Dormand–Prince 5(4) integrator for real first-order systems, with
//! event bracketing by bisection on the size of the last step.

use crate::error::{Error, Result};
use crate::scalar::{lit, to_f64, Real};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    /// Hard floor on the step size.
    pub h_min: f64,
    pub h_max: f64,
    pub h_init: f64,
    /// When set, steps are capped at `cap_fraction·(singular_at − t)`.
    pub singular_at: Option<f64>,
    pub cap_fraction: f64,
    /// Width to which event locations are bisected.
    pub event_tol: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        OdeOptions {
            rtol: 1e-10,
            atol: 1e-12,
            h_min: 1e-12,
            h_max: 0.05,
            h_init: 1e-3,
            singular_at: None,
            cap_fraction: 0.05,
            event_tol: 1e-12,
            max_steps: 1_000_000,
        }
    }
}

impl OdeOptions {
    /// Options for a system whose coefficients blow up at `t = 1`.
    pub fn toward_unit() -> Self {
        OdeOptions {
            singular_at: Some(1.0),
            ..OdeOptions::default()
        }
    }

    pub fn with_tolerance(self, rtol: f64, atol: f64) -> Self {
        OdeOptions { rtol, atol, ..self }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Termination<T: Real> {
    Reached,
    /// The event predicate switched on inside `[lo, hi]`; `y_lo` is the state
    /// at `lo`, where the predicate is still off.
    Event { lo: T, hi: T, y_lo: Vec<T> },
    Underflow { t: T },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<T: Real> {
    /// Accepted step endpoints, strictly increasing in `t`.
    pub samples: Vec<(T, Vec<T>)>,
    pub end: Termination<T>,
}

impl<T: Real> Trajectory<T> {
    pub fn last(&self) -> &(T, Vec<T>) {
        self.samples.last().expect("trajectory has its initial sample")
    }
}

const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const B5: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// One DP step: returns the 5th order solution and the embedded error vector.
fn dp_step<T, F>(rhs: &mut F, t: T, y: &[T], h: T) -> Result<(Vec<T>, Vec<T>)>
where
    T: Real,
    F: FnMut(T, &[T], &mut [T]) -> Result<()>,
{
    let m = y.len();
    let mut k = vec![vec![T::zero(); m]; 7];
    let mut tmp = vec![T::zero(); m];
    for s in 0..7 {
        for (i, ti) in tmp.iter_mut().enumerate() {
            let mut acc = y[i];
            for (r, kr) in k.iter().enumerate().take(s) {
                acc += h * lit::<T>(A[s][r]) * kr[i];
            }
            *ti = acc;
        }
        rhs(t + h * lit::<T>(C[s]), &tmp, &mut k[s])?;
    }
    let mut y5 = vec![T::zero(); m];
    let mut err = vec![T::zero(); m];
    for i in 0..m {
        let mut a5 = T::zero();
        let mut a4 = T::zero();
        for s in 0..7 {
            a5 += lit::<T>(B5[s]) * k[s][i];
            a4 += lit::<T>(B4[s]) * k[s][i];
        }
        y5[i] = y[i] + h * a5;
        err[i] = h * (a5 - a4);
    }
    if y5.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite(format!("state at t = {}", to_f64(t + h))));
    }
    Ok((y5, err))
}

/// Integrates `y' = rhs(t, y)` from `t0` to `t_end`, stopping at the first
/// point where `event(t, y)` becomes true.
pub fn integrate<T, F, E>(
    mut rhs: F,
    t0: T,
    y0: &[T],
    t_end: T,
    opts: &OdeOptions,
    mut event: E,
) -> Result<Trajectory<T>>
where
    T: Real,
    F: FnMut(T, &[T], &mut [T]) -> Result<()>,
    E: FnMut(T, &[T]) -> bool,
{
    let mut samples = vec![(t0, y0.to_vec())];
    if event(t0, y0) {
        return Ok(Trajectory {
            samples,
            end: Termination::Event {
                lo: t0,
                hi: t0,
                y_lo: y0.to_vec(),
            },
        });
    }
    let rtol = lit::<T>(opts.rtol);
    let atol = lit::<T>(opts.atol);
    let h_min = lit::<T>(opts.h_min);
    let mut t = t0;
    let mut y = y0.to_vec();
    let mut h = lit::<T>(opts.h_init);
    let eps_t = lit::<T>(4.0) * T::epsilon() * (T::one() + t_end.abs());
    for _ in 0..opts.max_steps {
        if t_end - t <= eps_t {
            return Ok(Trajectory {
                samples,
                end: Termination::Reached,
            });
        }
        let mut cap = lit::<T>(opts.h_max);
        if let Some(s) = opts.singular_at {
            cap = cap.min(lit::<T>(opts.cap_fraction) * (lit::<T>(s) - t));
        }
        h = h.min(cap);
        let mut last_step = false;
        if h >= t_end - t {
            h = t_end - t;
            last_step = true;
        }
        if h < h_min && !last_step {
            return Ok(Trajectory {
                samples,
                end: Termination::Underflow { t },
            });
        }
        let (y_new, err) = match dp_step(&mut rhs, t, &y, h) {
            Ok(v) => v,
            Err(Error::NonFinite(_)) => {
                h = h * lit(0.25);
                continue;
            }
            Err(e) => return Err(e),
        };
        let mut acc = T::zero();
        for i in 0..y.len() {
            let sc = atol + rtol * y[i].abs().max(y_new[i].abs());
            let r = err[i] / sc;
            acc += r * r;
        }
        let en = (acc / lit::<T>(y.len().max(1) as f64)).sqrt();
        if en <= T::one() {
            let t_new = if last_step { t_end } else { t + h };
            if event(t_new, &y_new) {
                let (lo, hi, y_lo) = bracket(&mut rhs, &mut event, t, &y, h, opts)?;
                samples.push((lo, y_lo.clone()));
                return Ok(Trajectory {
                    samples,
                    end: Termination::Event { lo, hi, y_lo },
                });
            }
            t = t_new;
            y = y_new;
            samples.push((t, y.clone()));
            let fac = if en == T::zero() {
                lit(5.0)
            } else {
                (lit::<T>(0.9) * en.powf(lit(-0.2))).min(lit(5.0))
            };
            h = h * fac.max(lit(0.2));
        } else {
            let fac = (lit::<T>(0.9) * en.powf(lit(-0.2))).max(lit(0.1));
            h = h * fac;
            if h < h_min {
                return Ok(Trajectory {
                    samples,
                    end: Termination::Underflow { t },
                });
            }
        }
    }
    Err(Error::StepUnderflow { t: to_f64(t) })
}

// Bisect the step size between 0 (event off) and h (event on).
fn bracket<T, F, E>(rhs: &mut F, event: &mut E, t: T, y: &[T], h: T, opts: &OdeOptions) -> Result<(T, T, Vec<T>)>
where
    T: Real,
    F: FnMut(T, &[T], &mut [T]) -> Result<()>,
    E: FnMut(T, &[T]) -> bool,
{
    let mut lo = T::zero();
    let mut hi = h;
    let mut y_lo = y.to_vec();
    let tol = lit::<T>(opts.event_tol);
    let floor = T::epsilon() * lit(8.0) * (T::one() + t.abs());
    while hi - lo > tol.max(floor) {
        let mid = (lo + hi) * lit(0.5);
        let on = match dp_step(rhs, t, y, mid) {
            Ok((ym, _)) => {
                if event(t + mid, &ym) {
                    true
                } else {
                    y_lo = ym;
                    false
                }
            }
            Err(Error::NonFinite(_)) => true,
            Err(e) => return Err(e),
        };
        if on {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok((t + lo, t + hi, y_lo))
}

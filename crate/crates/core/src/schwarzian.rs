//! The Schwarzian tensor `S^k_ij f` and the coefficients `S^0_ij f`.
//!
//! ```text
//! S^k_ij = Σ_l ∂²f_l/∂z_i∂z_j · ∂z_k/∂f_l − (δ^k_i ∂_j + δ^k_j ∂_i) log J_f / (n+1)
//! S^0_ij = J_f^{1/(n+1)} ( ∂_i∂_j u₀ − Σ_k ∂_k u₀ · S^k_ij ),   u₀ = J_f^{-1/(n+1)}
//! ```
//!
//! The tensor vanishes exactly on Möbius maps, satisfies the trace
//! normalization `Σ_j S^j_ij = 0`, and `u₀` solves
//! `Hess u (v, v) = S_f(v)·∇u + S^0_f(v) u`.

use crate::error::{Error, Result};
use crate::jets::{Elementary, Jet3};
use crate::linalg::CMatrix;
use crate::maps::{eval_map, map_jet, MapExpr, MapJet};
use crate::scalar::{czero, from_usize, lit, Cx, Real};

#[derive(Debug, Clone, PartialEq)]
pub struct SchwarzianTensor<T: Real> {
    pub n: usize,
    pub point: Vec<Cx<T>>,
    /// `s[k][i][j] = S^k_ij f(z)`.
    pub s: Vec<CMatrix<T>>,
    /// `s0[i][j] = S^0_ij f(z)`.
    pub s0: CMatrix<T>,
    /// `Df(z)`.
    pub jacobian: CMatrix<T>,
    /// `∇ log J_f(z)`.
    pub log_j_grad: Vec<Cx<T>>,
}

impl<T: Real> SchwarzianTensor<T> {
    /// Largest `|S^k_ij|`.
    pub fn max_abs(&self) -> T {
        self.s
            .iter()
            .flatten()
            .flatten()
            .fold(T::zero(), |acc, z| acc.max(z.norm()))
    }

    /// Largest `|S^0_ij|`.
    pub fn max_abs_s0(&self) -> T {
        self.s0
            .iter()
            .flatten()
            .fold(T::zero(), |acc, z| acc.max(z.norm()))
    }

    /// Quadratic forms `(vᵗ S^1 v, …, vᵗ S^n v)`.
    pub fn apply(&self, v: &[Cx<T>]) -> Result<Vec<Cx<T>>> {
        if v.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                found: v.len(),
            });
        }
        Ok(self.s.iter().map(|sk| quadratic_form(sk, v)).collect())
    }

    /// `vᵗ S^0 v`.
    pub fn apply_s0(&self, v: &[Cx<T>]) -> Result<Cx<T>> {
        if v.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                found: v.len(),
            });
        }
        Ok(quadratic_form(&self.s0, v))
    }

    /// Largest `|S^k_ij|` over `k ∉ {i, j}`.
    pub fn off_pattern_max(&self) -> T {
        let mut m = T::zero();
        for k in 0..self.n {
            for i in 0..self.n {
                for j in 0..self.n {
                    if k != i && k != j {
                        m = m.max(self.s[k][i][j].norm());
                    }
                }
            }
        }
        m
    }
}

/// `vᵗ M v` (no conjugation).
pub fn quadratic_form<T: Real>(m: &CMatrix<T>, v: &[Cx<T>]) -> Cx<T> {
    let mut acc = czero();
    for (i, row) in m.iter().enumerate() {
        for (j, mij) in row.iter().enumerate() {
            acc += v[i] * *mij * v[j];
        }
    }
    acc
}

/// `schwarzian_tensor`.
pub fn schwarzian_tensor<T: Real>(f: &MapExpr<T>, z: &[Cx<T>]) -> Result<SchwarzianTensor<T>> {
    tensor_from_jet(&map_jet(f, z)?)
}

/// Tensor from an already computed map jet.
pub fn tensor_from_jet<T: Real>(mj: &MapJet<T>) -> Result<SchwarzianTensor<T>> {
    let n = mj.n;
    let inv = mj.inverse_jacobian()?;
    let lg = mj.grad_log_jacobian()?;
    let c = T::one() / from_usize::<T>(n + 1);
    let mut s = vec![vec![vec![czero::<T>(); n]; n]; n];
    for k in 0..n {
        for i in 0..n {
            for j in i..n {
                let mut acc = czero();
                for l in 0..n {
                    acc += mj.second(l, i, j) * inv[k][l];
                }
                if k == i {
                    acc -= lg[j] * c;
                }
                if k == j {
                    acc -= lg[i] * c;
                }
                s[k][i][j] = acc;
                s[k][j][i] = acc;
            }
        }
    }
    let u0 = mj
        .jacobian_jet()?
        .elementary(Elementary::Pow(-c))
        .map_err(|_| Error::SingularJacobian {
            modulus: crate::scalar::to_f64(mj.jacobian_det().norm()),
        })?;
    let s0 = s0_from_u0(&u0, &s)?;
    Ok(SchwarzianTensor {
        n,
        point: mj.point.clone(),
        s,
        s0,
        jacobian: mj.jacobian(),
        log_j_grad: lg,
    })
}

fn s0_from_u0<T: Real>(u0: &Jet3<T>, s: &[CMatrix<T>]) -> Result<CMatrix<T>> {
    let n = u0.n();
    let inv_u = u0.value().inv();
    let mut s0 = vec![vec![czero::<T>(); n]; n];
    for i in 0..n {
        for j in i..n {
            let mut acc = u0.hess(i, j);
            for (k, sk) in s.iter().enumerate() {
                acc -= u0.grad_at(k) * sk[i][j];
            }
            s0[i][j] = acc * inv_u;
            s0[j][i] = s0[i][j];
        }
    }
    Ok(s0)
}

/// `apply_operator`: `S_f(z)(v)`.
pub fn apply_operator<T: Real>(t: &SchwarzianTensor<T>, v: &[Cx<T>]) -> Result<Vec<Cx<T>>> {
    t.apply(v)
}

/// `canonical_residual`: `max_i |Σ_j S^j_ij|`.
pub fn canonical_residual<T: Real>(t: &SchwarzianTensor<T>) -> T {
    (0..t.n)
        .map(|i| (0..t.n).fold(czero::<T>(), |acc, j| acc + t.s[j][i][j]).norm())
        .fold(T::zero(), T::max)
}

/// `chain_rule_residual`: largest entrywise gap between `S(g∘f)(z)` and
/// `S f(z) + Σ S^r_lm g(w) ∂w_l/∂z_i ∂w_m/∂z_j ∂z_k/∂w_r`, `w = f(z)`.
pub fn chain_rule_residual<T: Real>(g: &MapExpr<T>, f: &MapExpr<T>, z: &[Cx<T>]) -> Result<T> {
    let n = f.n();
    let gf = MapExpr::compose(g.clone(), f.clone())?;
    let direct = schwarzian_tensor(&gf, z)?;
    let fj = map_jet(f, z)?;
    let tf = tensor_from_jet(&fj)?;
    let w = eval_map(f, z)?;
    let tg = schwarzian_tensor(g, &w)?;
    let df = fj.jacobian();
    let dinv = fj.inverse_jacobian()?;

    // first contract S_g with Df in both lower slots
    let mut pulled = vec![vec![vec![czero::<T>(); n]; n]; n];
    for r in 0..n {
        for i in 0..n {
            for j in 0..n {
                let mut acc = czero();
                for l in 0..n {
                    for m in 0..n {
                        acc += tg.s[r][l][m] * df[l][i] * df[m][j];
                    }
                }
                pulled[r][i][j] = acc;
            }
        }
    }
    let mut worst = T::zero();
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let mut pred = tf.s[k][i][j];
                for r in 0..n {
                    pred += pulled[r][i][j] * dinv[k][r];
                }
                worst = worst.max((pred - direct.s[k][i][j]).norm());
            }
        }
    }
    Ok(worst)
}

/// `hessian_residual`: `|Hess u₀(v,v) − S_f(v)·∇u₀ − S^0_f(v) u₀|` with
/// `u₀ = exp(−log J_f/(n+1))` built as a separate jet composition.
pub fn hessian_residual<T: Real>(f: &MapExpr<T>, z: &[Cx<T>], v: &[Cx<T>]) -> Result<T> {
    let mj = map_jet(f, z)?;
    let t = tensor_from_jet(&mj)?;
    let n = mj.n;
    let c = -T::one() / from_usize::<T>(n + 1);
    let u0 = mj
        .jacobian_jet()?
        .elementary(Elementary::Log)?
        .scale_by(Cx::new(c, T::zero()))
        .elementary(Elementary::Exp)?;
    let sv = t.apply(v)?;
    let mut hess: Cx<T> = czero();
    for i in 0..n {
        for j in 0..n {
            hess += v[i] * v[j] * u0.hess(i, j);
        }
    }
    let mut transport: Cx<T> = czero();
    for k in 0..n {
        transport += sv[k] * u0.grad_at(k);
    }
    let rhs: Cx<T> = transport + t.apply_s0(v)? * u0.value();
    Ok((hess - rhs).norm())
}

/// `S^0` through derivatives of the tensor field:
///
/// ```text
/// S^0_ii = (−Σ_k ∂_k S^k_ii + Σ_{k,j} S^k_ij S^j_ki) / (n−1)
/// S^0_ij = ∂_j S^i_ii − ∂_i S^i_ij + Σ_k S^k_ii S^i_kj − Σ_k S^k_ij S^i_ki   (i ≠ j)
/// ```
///
/// with `∂_j` taken by central differences of step `h`. Independent of the
/// `u₀`-jet route used by [`schwarzian_tensor`].
pub fn s0_from_tensor_field<T: Real>(f: &MapExpr<T>, z: &[Cx<T>], h: T) -> Result<CMatrix<T>> {
    let n = f.n();
    let t = schwarzian_tensor(f, z)?;
    let two_h = Cx::new(h + h, T::zero());
    // d[j][k][a][b] = ∂_j S^k_ab
    let mut d = Vec::with_capacity(n);
    for j in 0..n {
        let mut zp = z.to_vec();
        let mut zm = z.to_vec();
        zp[j].re += h;
        zm[j].re -= h;
        let tp = schwarzian_tensor(f, &zp)?;
        let tm = schwarzian_tensor(f, &zm)?;
        let dj: Vec<CMatrix<T>> = (0..n)
            .map(|k| {
                (0..n)
                    .map(|a| (0..n).map(|b| (tp.s[k][a][b] - tm.s[k][a][b]) / two_h).collect())
                    .collect()
            })
            .collect();
        d.push(dj);
    }
    let s = &t.s;
    let inv_nm1 = T::one() / from_usize::<T>(n - 1);
    let mut out = vec![vec![czero::<T>(); n]; n];
    for i in 0..n {
        for j in 0..n {
            out[i][j] = if i == j {
                let mut acc = czero();
                for k in 0..n {
                    acc -= d[k][k][i][i];
                    for m in 0..n {
                        acc += s[k][i][m] * s[m][k][i];
                    }
                }
                acc * inv_nm1
            } else {
                let mut acc = d[j][i][i][i] - d[i][i][i][j];
                for k in 0..n {
                    acc += s[k][i][i] * s[i][k][j] - s[k][i][j] * s[i][k][i];
                }
                acc
            };
        }
    }
    Ok(out)
}

/// Default finite-difference step for [`s0_from_tensor_field`].
pub fn default_fd_step<T: Real>() -> T {
    lit(1e-5)
}

//! Lax-pair coefficient matrices and the basic solutions Ψ, Φ, Ψ̂, φ̂
//! obtained by direct integration of the x- and t-equations.
//!
//! Solutions normalised by an exponential e^{−iωsσ₃} are integrated in the
//! right-peeled variable W̃ = W·e^{iωsσ₃}, which satisfies
//! W̃' = G W̃ − iω[σ₃, W̃] with G the potential part of the generator.  Each
//! column of W̃ is integrated on its own so a growing column cannot spoil
//! the error control of a bounded one.

use crate::config::Problem;
use crate::error::{Error, Result};
use crate::ode::dopri5;
use crate::region::SIGMA_TOL;
use crate::types::{Lambda, Mat2C, C64, I, ONE, ZERO};

/// Q = [[0, q], [λq, 0]].
#[inline]
pub fn q_matrix(qval: f64, lambda: Lambda) -> Mat2C {
    Mat2C::new(ZERO, C64::from(qval), C64::from(lambda.value() * qval), ZERO)
}

/// U = Q − ikσ₃.
#[inline]
pub fn u_matrix(qval: f64, lambda: Lambda, k: C64) -> Mat2C {
    let mut u = q_matrix(qval, lambda);
    u.a[0][0] = -I * k;
    u.a[1][1] = I * k;
    u
}

/// Potential part of V: V + 4ik³σ₃ = 2Q³ − Q_xx − 2ik(Q² + Q_x)σ₃ + 4k²Q.
#[inline]
pub fn v_potential(q: f64, qx: f64, qxx: f64, lambda: Lambda, k: C64) -> Mat2C {
    let l = lambda.value();
    let k2 = k * k;
    // (Q² + Q_x)σ₃ = [[λq², −q_x], [λq_x, −λq²]]
    let diag = -2.0 * I * k * (l * q * q);
    let off12 = 2.0 * l * q * q * q - qxx + 2.0 * I * k * qx + 4.0 * k2 * q;
    let off21 = l * (2.0 * l * q * q * q - qxx) - 2.0 * I * k * (l * qx) + 4.0 * k2 * (l * q);
    Mat2C::new(diag, off12, off21, -diag)
}

/// V = 2Q³ − Q_xx − 2ik(Q² + Q_x)σ₃ + 4k²Q − 4ik³σ₃.
#[inline]
pub fn v_matrix(q: f64, qx: f64, qxx: f64, lambda: Lambda, k: C64) -> Mat2C {
    let mut v = v_potential(q, qx, qxx, lambda, k);
    let w = 4.0 * I * k * k * k;
    v.a[0][0] -= w;
    v.a[1][1] += w;
    v
}

/// A solution matrix together with which columns are meaningful.
#[derive(Clone, Copy, Debug)]
pub struct LaxSolution {
    pub k: C64,
    pub w: Mat2C,
    pub certified: [bool; 2],
}

impl LaxSolution {
    pub fn column(&self, j: usize) -> Result<[C64; 2]> {
        if self.certified[j] {
            Ok(self.w.col(j))
        } else {
            Err(Error::NonCertifiedColumn { column: j + 1, k: self.k })
        }
    }

    pub fn matrix(&self) -> Result<Mat2C> {
        self.column(0)?;
        self.column(1)?;
        Ok(self.w)
    }
}

const NAN2: [C64; 2] = [C64::new(f64::NAN, f64::NAN), C64::new(f64::NAN, f64::NAN)];

/// Integrate one column of the peeled system
/// w' = G(s)w − ωσ₃w + ω·sⱼ·w  (sⱼ = +1 for column 0, −1 for column 1).
fn peeled_column(
    gen: &dyn Fn(f64) -> Mat2C,
    omega: C64,
    col: usize,
    from: f64,
    to: f64,
    init: [C64; 2],
    tol: f64,
) -> Result<[C64; 2]> {
    let sj = if col == 0 { 1.0 } else { -1.0 };
    let d0 = omega * (sj - 1.0);
    let d1 = omega * (sj + 1.0);
    let h0 = (0.5 / (1.0 + omega.norm())).min(0.1);
    let f = |s: f64, w: &[C64; 2]| {
        let g = gen(s);
        [
            g.a[0][0] * w[0] + g.a[0][1] * w[1] + d0 * w[0],
            g.a[1][0] * w[0] + g.a[1][1] * w[1] + d1 * w[1],
        ]
    };
    let (y, _) = dopri5(f, from, to, init, tol, h0)?;
    Ok(y)
}

fn unit(j: usize) -> [C64; 2] {
    if j == 0 {
        [ONE, ZERO]
    } else {
        [ZERO, ONE]
    }
}

/// W' = U W from `x_from` to `x_to`, plain (unpeeled) integration.
pub fn integrate_x(
    q_profile: &dyn Fn(f64) -> f64,
    lambda: Lambda,
    k: C64,
    x_from: f64,
    x_to: f64,
    w0: Mat2C,
    step_tol: f64,
) -> Result<Mat2C> {
    let f = |x: f64, y: &[C64; 4]| {
        let u = u_matrix(q_profile(x), lambda, k);
        mat_rhs(&u, y)
    };
    let y0 = [w0.a[0][0], w0.a[0][1], w0.a[1][0], w0.a[1][1]];
    let h0 = (0.5 / (1.0 + k.norm())).min(0.1);
    let (y, _) = dopri5(f, x_from, x_to, y0, step_tol, h0)?;
    Ok(Mat2C::new(y[0], y[1], y[2], y[3]))
}

/// W' = V(t) W at a fixed x, with `triplet(t) = (q, q_x, q_xx)` there.
pub fn integrate_t(
    triplet: &dyn Fn(f64) -> (f64, f64, f64),
    lambda: Lambda,
    k: C64,
    t_from: f64,
    t_to: f64,
    w0: Mat2C,
    step_tol: f64,
) -> Result<Mat2C> {
    let f = |t: f64, y: &[C64; 4]| {
        let (q, qx, qxx) = triplet(t);
        let v = v_matrix(q, qx, qxx, lambda, k);
        mat_rhs(&v, y)
    };
    let y0 = [w0.a[0][0], w0.a[0][1], w0.a[1][0], w0.a[1][1]];
    let h0 = (0.5 / (1.0 + 4.0 * k.norm().powi(3))).min(0.1);
    let (y, _) = dopri5(f, t_from, t_to, y0, step_tol, h0)?;
    Ok(Mat2C::new(y[0], y[1], y[2], y[3]))
}

#[inline(always)]
fn mat_rhs(a: &Mat2C, y: &[C64; 4]) -> [C64; 4] {
    [
        a.a[0][0] * y[0] + a.a[0][1] * y[2],
        a.a[0][0] * y[1] + a.a[0][1] * y[3],
        a.a[1][0] * y[0] + a.a[1][1] * y[2],
        a.a[1][0] * y[1] + a.a[1][1] * y[3],
    ]
}

/// Columns of Ψ (normalised at +∞ in x) that are analytic continuations:
/// Ψ⁻ for Im k ≤ 0, Ψ⁺ for Im k ≥ 0.
pub fn jost_certified(k: C64) -> [bool; 2] {
    [k.im <= 0.0, k.im >= 0.0]
}

/// Ψ(x, t, k) for the potential `q_profile` = q(·, t): W(x_max) =
/// e^{−ik x_max σ₃}e^{−4ik³tσ₃}, integrated backward in x.  Only the
/// certified columns are computed; the others are NaN and flagged.
pub fn jost_psi_with(
    q_profile: &dyn Fn(f64) -> f64,
    lambda: Lambda,
    x: f64,
    t: f64,
    k: C64,
    x_max: f64,
    step_tol: f64,
) -> Result<LaxSolution> {
    let certified = jost_certified(k);
    let gen = |s: f64| q_matrix(q_profile(s), lambda);
    let mut w = Mat2C::zero();
    let phase_t = 4.0 * I * k * k * k * t;
    for j in 0..2 {
        if !certified[j] {
            w.set_col(j, NAN2);
            continue;
        }
        let col = if x >= x_max {
            unit(j)
        } else {
            peeled_column(&gen, I * k, j, x_max, x, unit(j), step_tol)?
        };
        let sj = if j == 0 { 1.0 } else { -1.0 };
        let e = (-(I * k * x + phase_t) * sj).exp();
        w.set_col(j, [col[0] * e, col[1] * e]);
    }
    Ok(LaxSolution { k, w, certified })
}

/// Ψ(x, 0, k) for the initial function of a problem.
pub fn jost_psi_at(x: f64, t_label: f64, k: C64, p: &Problem) -> Result<LaxSolution> {
    let q = |s: f64| p.u.eval(s);
    jost_psi_with(&q, p.lambda(), x, t_label, k, p.x_max, p.step_tol())
}

/// Peeled Φ-type solution: W(x_from) given by `init`, returns W(x_to).
/// Entire in k.
pub fn phi_with(
    q_profile: &dyn Fn(f64) -> f64,
    lambda: Lambda,
    x: f64,
    k: C64,
    step_tol: f64,
) -> Result<Mat2C> {
    let gen = |s: f64| q_matrix(q_profile(s), lambda);
    let mut w = Mat2C::zero();
    for j in 0..2 {
        let col = peeled_column(&gen, I * k, j, 0.0, x, unit(j), step_tol)?;
        let sj = if j == 0 { 1.0 } else { -1.0 };
        let e = (-(I * k * x) * sj).exp();
        w.set_col(j, [col[0] * e, col[1] * e]);
    }
    Ok(w)
}

/// Φ(x, 0, k): x-equation from 0 with Φ(0, 0, k) = I.
pub fn phi_at_t0(x: f64, k: C64, p: &Problem) -> Result<Mat2C> {
    let q = |s: f64| p.u.eval(s);
    phi_with(&q, p.lambda(), x, k, p.step_tol())
}

/// Columns of Ψ̂ with the right analyticity for an infinite horizon:
/// Ψ̂⁻ where Im k³ ≤ 0, Ψ̂⁺ where Im k³ ≥ 0 (both on Σ).
pub fn hat_psi_certified(k: C64, finite_horizon: bool) -> [bool; 2] {
    if finite_horizon {
        return [true, true];
    }
    let k3 = k * k * k;
    let on_sigma = k3.im.abs() <= SIGMA_TOL * k.norm().powi(3).max(1.0);
    [on_sigma || k3.im < 0.0, on_sigma || k3.im > 0.0]
}

/// Ψ̂(t, k): t-equation at x = 0 integrated backward from `t_end` with
/// Ψ̂(t_end) = e^{−4ik³ t_end σ₃}.  Only the requested certified columns
/// are computed (`want` selects columns).
#[allow(clippy::too_many_arguments)]
pub fn hat_psi_with(
    triplet: &dyn Fn(f64) -> (f64, f64, f64),
    lambda: Lambda,
    t: f64,
    k: C64,
    t_end: f64,
    finite_horizon: bool,
    want: [bool; 2],
    step_tol: f64,
) -> Result<LaxSolution> {
    let certified = hat_psi_certified(k, finite_horizon);
    let gen = |s: f64| {
        let (q, qx, qxx) = triplet(s);
        v_potential(q, qx, qxx, lambda, k)
    };
    let omega = 4.0 * I * k * k * k;
    let mut w = Mat2C::zero();
    let mut flags = [false; 2];
    for j in 0..2 {
        if !certified[j] || !want[j] {
            w.set_col(j, NAN2);
            continue;
        }
        let col = if t >= t_end {
            unit(j)
        } else {
            peeled_column(&gen, omega, j, t_end, t, unit(j), step_tol)?
        };
        let sj = if j == 0 { 1.0 } else { -1.0 };
        let e = (-(omega * t) * sj).exp();
        w.set_col(j, [col[0] * e, col[1] * e]);
        flags[j] = true;
    }
    Ok(LaxSolution {
        k,
        w,
        certified: flags,
    })
}

/// Ψ̂(t, k) for the boundary data of a problem (both certified columns).
pub fn hat_psi(t: f64, k: C64, p: &Problem) -> Result<LaxSolution> {
    let bt = |s: f64| p.boundary(s);
    hat_psi_with(
        &bt,
        p.lambda(),
        t,
        k,
        p.t_end,
        p.horizon().is_finite(),
        [true, true],
        p.step_tol(),
    )
}

/// φ̂(t, k): t-equation at x = 0 from φ̂(0) = I.  Entire in k.
pub fn phi_hat_with(
    triplet: &dyn Fn(f64) -> (f64, f64, f64),
    lambda: Lambda,
    t: f64,
    k: C64,
    step_tol: f64,
) -> Result<Mat2C> {
    let gen = |s: f64| {
        let (q, qx, qxx) = triplet(s);
        v_potential(q, qx, qxx, lambda, k)
    };
    let omega = 4.0 * I * k * k * k;
    let mut w = Mat2C::zero();
    for j in 0..2 {
        let col = peeled_column(&gen, omega, j, 0.0, t, unit(j), step_tol)?;
        let sj = if j == 0 { 1.0 } else { -1.0 };
        let e = (-(omega * t) * sj).exp();
        w.set_col(j, [col[0] * e, col[1] * e]);
    }
    Ok(w)
}

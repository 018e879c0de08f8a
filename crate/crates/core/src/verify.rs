//! Independent correctness oracles: the exact one-soliton, finite-difference
//! PDE residuals, data round-trips and Riemann–Hilbert jump residuals.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{Problem, ProblemConfig};
use crate::error::{Error, Result};
use crate::functions::{soliton_value, FunctionSpec};
use crate::kernel::KernelField;
use crate::laxpair::{hat_psi_with, jost_psi_with, phi_hat_with, phi_with};
use crate::marchenko::{reconstruct_grid, MarchenkoOptions, SolutionGrid};
use crate::quadrature::{ComplexSpline, CubicSpline};
use crate::region::{classify_region, RegionId};
use crate::scattering::{find_eigenvalues_x, r1_minus, reflection, ScatteringData};
use crate::types::{Lambda, Mat2C, C64, I};

/// Contour offset used to realise the one-sided boundary values M±.
pub const JUMP_OFFSET: f64 = 1e-3;

/// q(x, t) = sign·2κ·sech(2κ(x − 4κ²t − x₀)), the one-soliton of the
/// focusing equation q_t + q_xxx + 6q²q_x = 0.
pub fn soliton_exact(kappa: f64, x0: f64, sign: f64) -> impl Fn(f64, f64) -> f64 + Copy + Send + Sync {
    move |x, t| soliton_value(kappa, x0, sign, x, t, 0)
}

/// PDE residual of the soliton from its analytic derivatives
/// (q_t = −4κ²q_x for a travelling wave).
pub fn soliton_pde_residual(kappa: f64, x0: f64, sign: f64, x: f64, t: f64) -> f64 {
    let q = soliton_value(kappa, x0, sign, x, t, 0);
    let qx = soliton_value(kappa, x0, sign, x, t, 1);
    let qxxx = soliton_value(kappa, x0, sign, x, t, 3);
    let qt = -4.0 * kappa * kappa * qx;
    qt + qxxx - 6.0 * Lambda::Focusing.value() * q * q * qx
}

/// The exact soliton sampled on a lattice.
pub fn soliton_grid(kappa: f64, x0: f64, sign: f64, xs: &[f64], ts: &[f64]) -> SolutionGrid {
    let f = soliton_exact(kappa, x0, sign);
    let mut g = SolutionGrid::zero(xs.to_vec(), ts.to_vec());
    for (i, &t) in ts.iter().enumerate() {
        for (j, &x) in xs.iter().enumerate() {
            g.q[i][j] = f(x, t);
        }
    }
    g
}

fn uniform_step(v: &[f64], what: &str) -> Result<f64> {
    let h = (v[v.len() - 1] - v[0]) / (v.len() - 1) as f64;
    if !(h > 0.0) || v.windows(2).any(|w| ((w[1] - w[0]) - h).abs() > 1e-9 * h.max(1.0)) {
        return Err(Error::GridTooCoarse(format!("{what} lattice is not uniform")));
    }
    Ok(h)
}

/// max over the interior lattice of |q_t + q_xxx − 6λq²q_x| with fourth-order
/// central differences in x and second-order central differences in t.
pub fn pde_residual(grid: &SolutionGrid, lambda: Lambda) -> Result<f64> {
    let (nx, nt) = (grid.x.len(), grid.t.len());
    if nx < 7 || nt < 3 {
        return Err(Error::GridTooCoarse(format!(
            "pde_residual needs ≥ 7 x-points and ≥ 3 t-points, got {nx}×{nt}"
        )));
    }
    let hx = uniform_step(&grid.x, "x")?;
    let ht = uniform_step(&grid.t, "t")?;
    let l = lambda.value();
    let q = &grid.q;
    let mut worst: f64 = 0.0;
    for i in 1..nt - 1 {
        for j in 3..nx - 3 {
            let f = |d: isize| q[i][(j as isize + d) as usize];
            let qx = (-f(2) + 8.0 * f(1) - 8.0 * f(-1) + f(-2)) / (12.0 * hx);
            let qxxx = (-f(3) + 8.0 * f(2) - 13.0 * f(1) + 13.0 * f(-1) - 8.0 * f(-2) + f(-3)) / (8.0 * hx.powi(3));
            let qt = (q[i + 1][j] - q[i - 1][j]) / (2.0 * ht);
            let qv = q[i][j];
            worst = worst.max((qt + qxxx - 6.0 * l * qv * qv * qx).abs());
        }
    }
    Ok(worst)
}

/// max over `xs` of |q(x, 0) − u(x)| for the reconstruction from `field`.
pub fn roundtrip_initial(field: &KernelField, p: &Problem, xs: &[f64], opts: &MarchenkoOptions) -> Result<f64> {
    let g = reconstruct_grid(field, xs, &[0.0], opts)?;
    Ok(xs
        .iter()
        .zip(&g.q[0])
        .map(|(&x, q)| (q - p.u.eval(x)).abs())
        .fold(0.0, f64::max))
}

/// Boundary errors (e0, e1, e2) of q(0,t), q_x(0,t), q_xx(0,t) against a
/// reference triplet.  Derivatives use one-sided stencils on x = 0, h, …, 5h
/// with h = hx/4; q_x is fourth-order, q_xx is fourth-order (six points).
pub fn roundtrip_boundary(
    field: &KernelField,
    ts: &[f64],
    hx: f64,
    opts: &MarchenkoOptions,
    reference: &dyn Fn(f64) -> (f64, f64, f64),
) -> Result<(f64, f64, f64)> {
    let h = hx / 4.0;
    let xs: Vec<f64> = (0..6).map(|j| j as f64 * h).collect();
    let g = reconstruct_grid(field, &xs, ts, opts)?;
    let mut e = (0.0f64, 0.0f64, 0.0f64);
    for (i, &t) in ts.iter().enumerate() {
        let f = &g.q[i];
        let q0 = f[0];
        let q1 = (-25.0 * f[0] + 48.0 * f[1] - 36.0 * f[2] + 16.0 * f[3] - 3.0 * f[4]) / (12.0 * h);
        let q2 = (45.0 * f[0] - 154.0 * f[1] + 214.0 * f[2] - 156.0 * f[3] + 61.0 * f[4] - 10.0 * f[5]) / (12.0 * h * h);
        let (v, v1, v2) = reference(t);
        e.0 = e.0.max((q0 - v).abs());
        e.1 = e.1.max((q1 - v1).abs());
        e.2 = e.2.max((q2 - v2).abs());
    }
    Ok(e)
}

/// Errors of re-running direct scattering on the reconstructed q(·, 0).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DataRoundtrip {
    /// max |r_new(k) − r(k)| over the checked samples.
    pub reflection: f64,
    /// Largest distance between matched x-eigenvalues (∞ on a count mismatch).
    pub eigenvalues: f64,
}

/// Reconstruct q(·, 0) on [0, x_max] with spacing `dx`, tabulate it as the
/// new initial function, and compare its reflection coefficient (every
/// `k_stride`-th sample) and x-eigenvalues with `data`.
pub fn roundtrip_data(
    data: &ScatteringData,
    field: &KernelField,
    p: &Problem,
    opts: &MarchenkoOptions,
    dx: f64,
    k_stride: usize,
) -> Result<DataRoundtrip> {
    let n = (p.x_max / dx).ceil() as usize;
    let xs: Vec<f64> = (0..=n).map(|j| j as f64 * dx).collect();
    let g = reconstruct_grid(field, &xs, &[0.0], opts)?;
    let mut cfg: ProblemConfig = p.config.clone();
    cfg.u = FunctionSpec::Table {
        table: xs.iter().copied().zip(g.q[0].iter().copied()).collect(),
    };
    cfg.grids.x_max = Some(p.x_max);
    let p2 = cfg.resolve()?;
    let samples: Vec<(f64, C64)> = data.r_samples.iter().step_by(k_stride.max(1)).copied().collect();
    let errs: Vec<f64> = samples
        .par_iter()
        .map(|&(k, r)| reflection(&p2, k).map(|r2| (r2 - r).norm()))
        .collect::<Result<_>>()?;
    let reflection_err = errs.into_iter().fold(0.0, f64::max);
    let eig = find_eigenvalues_x(&p2)?;
    let eigenvalues = if eig.len() != data.eigenvalues_x.len() {
        f64::INFINITY
    } else {
        data.eigenvalues_x
            .iter()
            .map(|k| eig.iter().map(|e| (e - k).norm()).fold(f64::INFINITY, f64::min))
            .fold(0.0, f64::max)
    };
    Ok(DataRoundtrip {
        reflection: reflection_err,
        eigenvalues,
    })
}

/// Boundary values of a sectional matrix on Σ and the jump between them.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct JumpSample {
    pub k: C64,
    pub x: f64,
    pub t: f64,
    pub m_plus: Mat2C,
    pub m_minus: Mat2C,
    pub j: Mat2C,
    pub det_j: C64,
    /// max-entry norm of M₋ − M₊J.
    pub residual: f64,
}

/// Unit normal at k ∈ Σ pointing into the "+" sectors (Ω₁, Ω₃, Ω₅, where
/// Im k³ > 0).
fn plus_normal(k: C64) -> C64 {
    let n = I * C64::from_polar(1.0, k.arg());
    let probe = k + 1e-6 * k.norm().max(1.0) * n;
    if (probe * probe * probe).im > 0.0 {
        n
    } else {
        -n
    }
}

/// One-sided boundary values of a sectional function by cubic
/// extrapolation from offsets δ, 2δ, 3δ, 4δ along ±n: (M₊(k), M₋(k)).
fn boundary_values(k: C64, delta: f64, m: &dyn Fn(C64) -> Result<Mat2C>) -> Result<(Mat2C, Mat2C)> {
    let n = plus_normal(k);
    let side = |s: f64| -> Result<Mat2C> {
        let at = |j: f64| m(k + s * j * delta * n);
        let w = |c: f64| C64::from(c);
        Ok(at(1.0)?.scale(w(4.0)) - at(2.0)?.scale(w(6.0)) + at(3.0)?.scale(w(4.0)) - at(4.0)?)
    };
    Ok((side(1.0)?, side(-1.0)?))
}

/// Test points on Σ away from the origin: `n` points cycling through the six
/// half-lines with moduli spread over [s_lo, s_hi].
pub fn sigma_test_points(n: usize, s_lo: f64, s_hi: f64) -> Vec<C64> {
    (0..n)
        .map(|i| {
            let arg = (i % 6) as f64 * PI / 3.0;
            let frac = if n > 1 { i as f64 / (n - 1) as f64 } else { 0.5 };
            // irrational stride so the moduli do not repeat with the rays
            let s = s_lo + (s_hi - s_lo) * ((frac * 0.618_033_988_7 * 7.0) % 1.0);
            C64::from_polar(s, arg)
        })
        .collect()
}

/// The solution q(·, t) whose Lax-pair solutions build M at time t.
pub struct JumpSource<'a> {
    pub q: &'a (dyn Fn(f64) -> f64 + Sync),
    /// Beyond this abscissa q(·, t) is treated as zero.
    pub x_max: f64,
}

struct SpectralSplines {
    r: (CubicSpline, CubicSpline),
    r_range: f64,
    c_right: ComplexSpline,
    c_left: ComplexSpline,
    c_range: f64,
}

impl SpectralSplines {
    fn new(data: &ScatteringData) -> Result<Self> {
        let rays = &data.c_rays;
        Ok(SpectralSplines {
            r: data.r_spline()?,
            r_range: data.r_samples.last().map(|p| p.0).unwrap_or(0.0),
            c_right: ComplexSpline::new(rays.s.clone(), &rays.right)?,
            c_left: ComplexSpline::new(rays.s.clone(), &rays.left)?,
            c_range: rays.s.last().copied().unwrap_or(0.0),
        })
    }

    fn r(&self, k: f64) -> Result<C64> {
        if k.abs() > self.r_range {
            return Err(Error::InvalidConfig(format!("k = {k} lies beyond the reflection samples")));
        }
        Ok(C64::new(self.r.0.eval(k), self.r.1.eval(k)))
    }

    /// c on the upper rays: `right` for arg π/3, `left` for arg 2π/3.
    fn c(&self, s: f64, right: bool) -> Result<C64> {
        if s > self.c_range {
            return Err(Error::InvalidConfig(format!("|k| = {s} lies beyond the ray samples")));
        }
        Ok(if right { self.c_right.eval(s) } else { self.c_left.eval(s) })
    }
}

/// Jump matrix J(k, x, t) of the x-problem on Σ.
fn x_jump(sp: &SpectralSplines, lambda: Lambda, k: C64, x: f64, t: f64) -> Result<Mat2C> {
    let l = lambda.value();
    let theta = k * (x + 4.0 * k * k * t);
    let e2 = (2.0 * I * theta).exp();
    let s = k.norm();
    let one = C64::from(1.0);
    let zero = C64::from(0.0);
    Ok(match classify_region(k) {
        RegionId::SigmaRealAxis => {
            let r = sp.r(k.re)?;
            Mat2C::new(one, l * r.conj() / e2, -r * e2, one - l * r.norm_sqr())
        }
        RegionId::SigmaRayPi3 => Mat2C::new(one, zero, sp.c(s, true)? * e2, one),
        RegionId::SigmaRay2Pi3 => Mat2C::new(one, zero, sp.c(s, false)? * e2, one),
        // conj(k) of arg 5π/3 lies on arg π/3, of arg 4π/3 on arg 2π/3.
        RegionId::SigmaRay5Pi3 => Mat2C::new(one, -l * sp.c(s, true)?.conj() / e2, zero, one),
        RegionId::SigmaRay4Pi3 => Mat2C::new(one, -l * sp.c(s, false)?.conj() / e2, zero, one),
        _ => return Err(Error::InvalidConfig(format!("k = {k} is not on Σ away from the origin"))),
    })
}

/// Sectional M(k, x, t) at a point k off Σ.
fn sectional_m(src: &JumpSource, p: &Problem, k: C64, x: f64, t: f64) -> Result<Mat2C> {
    let lambda = p.lambda();
    let tol = p.step_tol();
    let bt = |s: f64| p.boundary(s);
    let u = |s: f64| p.u.eval(s);
    let e = (I * k * (x + 4.0 * k * k * t)).exp();
    let phi_x = phi_with(src.q, lambda, x, k, tol)?;
    let psi = |col: usize| -> Result<[C64; 2]> {
        jost_psi_with(src.q, lambda, x, t, k, src.x_max, tol)?.column(col)
    };
    let psi0 = || jost_psi_with(&u, lambda, 0.0, 0.0, k, p.x_max, tol);
    let hat_psi = |col: usize| -> Result<[C64; 2]> {
        let mut want = [false; 2];
        want[col] = true;
        hat_psi_with(&bt, lambda, t, k, p.t_end, p.horizon().is_finite(), want, tol)?.column(col)
    };
    let scale = |v: [C64; 2], s: C64| [v[0] * s, v[1] * s];
    Ok(match classify_region(k) {
        RegionId::Omega1 | RegionId::Omega3 => {
            let phi = phi_x * phi_hat_with(&bt, lambda, t, k, tol)?;
            let s2p = psi0()?.column(1)?[1];
            Mat2C::from_cols(scale(phi.col(0), e / s2p), scale(psi(1)?, 1.0 / e))
        }
        RegionId::Omega2 => {
            let y = phi_x.mul_vec(hat_psi(0)?);
            let r1m = r1_minus(p, k)?;
            Mat2C::from_cols(scale(y, e / r1m), scale(psi(1)?, 1.0 / e))
        }
        RegionId::Omega5 => {
            let y = phi_x.mul_vec(hat_psi(1)?);
            let r2p = r1_minus(p, k.conj())?.conj();
            Mat2C::from_cols(scale(psi(0)?, e), scale(y, 1.0 / (e * r2p)))
        }
        RegionId::Omega4 | RegionId::Omega6 => {
            let phi = phi_x * phi_hat_with(&bt, lambda, t, k, tol)?;
            let s1m = psi0()?.column(0)?[0];
            Mat2C::from_cols(scale(psi(0)?, e), scale(phi.col(1), 1.0 / (e * s1m)))
        }
        _ => return Err(Error::InvalidConfig(format!("k = {k} lies on Σ"))),
    })
}

/// Residual of M₋ = M₊J at k ∈ Σ, with M built from the Lax-pair solutions
/// of `src` (q(·, t)) and the problem's initial and boundary data, and J
/// assembled from the spectral functions in `data`.
pub fn rh_jump_residual(
    src: &JumpSource,
    p: &Problem,
    data: &ScatteringData,
    k: C64,
    x: f64,
    t: f64,
    delta: f64,
) -> Result<JumpSample> {
    if data.has_eigenvalues() {
        return Err(Error::EigenvaluePresent);
    }
    let sp = SpectralSplines::new(data)?;
    let j = x_jump(&sp, data.lambda, k, x, t)?;
    let (m_plus, m_minus) = boundary_values(k, delta, &|kk| sectional_m(src, p, kk, x, t))?;
    Ok(JumpSample {
        k,
        x,
        t,
        m_plus,
        m_minus,
        j,
        det_j: j.det(),
        residual: (m_minus - m_plus * j).max_abs(),
    })
}

/// P(k) = Ψ̂(0, k) entries needed for Jᵗ: (p₋, p₊) = (p₂⁻/p₁⁻, p₁⁺/p₂⁺).
fn p_ratios(p: &Problem, k: C64) -> Result<(C64, C64)> {
    let bt = |s: f64| p.boundary(s);
    let sol = hat_psi_with(&bt, p.lambda(), 0.0, k, p.t_end, true, [true, true], p.step_tol())?;
    let w = sol.w;
    Ok((w.a[1][0] / w.a[0][0], w.a[0][1] / w.a[1][1]))
}

/// Jump matrix Jᵗ(k, t) of the t-problem.
pub fn t_jump(p_minus: C64, p_plus: C64, k: C64, t: f64) -> Mat2C {
    let e = (8.0 * I * k * k * k * t).exp();
    Mat2C::new(C64::from(1.0), p_minus * e, -p_plus / e, 1.0 - p_minus * p_plus)
}

/// Sectional N(k, t) at a point k off Σ.
fn sectional_n(p: &Problem, k: C64, t: f64) -> Result<Mat2C> {
    let bt = |s: f64| p.boundary(s);
    let lambda = p.lambda();
    let tol = p.step_tol();
    let e = (4.0 * I * k * k * k * t).exp();
    let phi_hat = phi_hat_with(&bt, lambda, t, k, tol)?;
    let region = classify_region(k);
    let col = if region.is_plus_sector() { 1 } else { 0 };
    let mut want = [false; 2];
    want[col] = true;
    let psi_t = hat_psi_with(&bt, lambda, t, k, p.t_end, p.horizon().is_finite(), want, tol)?.column(col)?;
    let psi_0 = hat_psi_with(&bt, lambda, 0.0, k, p.t_end, p.horizon().is_finite(), want, tol)?.column(col)?;
    let scale = |v: [C64; 2], s: C64| [v[0] * s, v[1] * s];
    if region.is_plus_sector() {
        let p2p = psi_0[1];
        Ok(Mat2C::from_cols(scale(psi_t, 1.0 / (e * p2p)), scale(phi_hat.col(0), e)))
    } else if region.is_minus_sector() {
        let p1m = psi_0[0];
        Ok(Mat2C::from_cols(scale(phi_hat.col(1), 1.0 / e), scale(psi_t, e / p1m)))
    } else {
        Err(Error::InvalidConfig(format!("k = {k} lies on Σ")))
    }
}

/// Residual of N₋ = N₊Jᵗ at k ∈ Σ for the boundary data of `p`.
pub fn t_rh_jump_residual(p: &Problem, k: C64, t: f64, delta: f64) -> Result<JumpSample> {
    let (pm, pp) = p_ratios(p, k)?;
    let j = t_jump(pm, pp, k, t);
    let (m_plus, m_minus) = boundary_values(k, delta, &|kk| sectional_n(p, kk, t))?;
    Ok(JumpSample {
        k,
        x: 0.0,
        t,
        m_plus,
        m_minus,
        j,
        det_j: j.det(),
        residual: (m_minus - m_plus * j).max_abs(),
    })
}

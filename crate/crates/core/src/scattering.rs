//! Direct scattering: the matrices S(k), P(k), R(k), the spectral functions
//! r(k), r₁⁻(k), c(k), the discrete spectrum and its norming constants.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{Horizon, Problem};
use crate::error::{Error, Result};
use crate::laxpair::{hat_psi_with, integrate_x, jost_psi_with};
use crate::ode::dopri5;
use crate::quadrature::{adaptive_gauss_kronrod, CubicSpline};
use crate::types::{Lambda, Mat2C, C64, I, ONE, ZERO};
use crate::zeros::{cauchy_derivative, find_zeros, SearchRegion};

/// S(k) = Ψ⁻¹(0, 0, k) = [[s₂⁺, −s₁⁺], [−s₂⁻, s₁⁻]].
#[derive(Clone, Copy, Debug)]
pub struct SMatrixSample {
    pub k: C64,
    pub s: Mat2C,
}

impl SMatrixSample {
    pub fn s2p(&self) -> C64 {
        self.s.a[0][0]
    }
    pub fn s1p(&self) -> C64 {
        -self.s.a[0][1]
    }
    pub fn s2m(&self) -> C64 {
        -self.s.a[1][0]
    }
    pub fn s1m(&self) -> C64 {
        self.s.a[1][1]
    }
}

/// P(k) = Ψ̂(0, k) = [[p₁⁻, p₁⁺], [p₂⁻, p₂⁺]].
#[derive(Clone, Copy, Debug)]
pub struct PMatrixSample {
    pub k: C64,
    pub p: Mat2C,
    pub certified: [bool; 2],
}

impl PMatrixSample {
    pub fn p1m(&self) -> C64 {
        self.p.a[0][0]
    }
    pub fn p1p(&self) -> C64 {
        self.p.a[0][1]
    }
    pub fn p2m(&self) -> C64 {
        self.p.a[1][0]
    }
    pub fn p2p(&self) -> C64 {
        self.p.a[1][1]
    }
}

/// R(k) = S(k)P(k) = [[r₁⁻, r₁⁺], [r₂⁻, r₂⁺]].
#[derive(Clone, Copy, Debug)]
pub struct RMatrixSample {
    pub k: C64,
    pub r: Mat2C,
}

impl RMatrixSample {
    pub fn from_parts(s: &SMatrixSample, p: &PMatrixSample) -> Self {
        RMatrixSample { k: s.k, r: s.s * p.p }
    }
    pub fn r1m(&self) -> C64 {
        self.r.a[0][0]
    }
    pub fn r1p(&self) -> C64 {
        self.r.a[0][1]
    }
    pub fn r2m(&self) -> C64 {
        self.r.a[1][0]
    }
    pub fn r2p(&self) -> C64 {
        self.r.a[1][1]
    }
}

/// (s₁⁺(k), s₂⁺(k)) from the χ-system
/// χ₁' = −2ikχ₁ + uχ₂, χ₂' = λuχ₁, (χ₁, χ₂)(x_max) = (0, 1), read at x = 0.
pub fn chi_system_with(
    u: &dyn Fn(f64) -> f64,
    lambda: Lambda,
    k: C64,
    x_max: f64,
    step_tol: f64,
) -> Result<(C64, C64)> {
    let l = lambda.value();
    let d = -2.0 * I * k;
    let f = |x: f64, y: &[C64; 2]| {
        let q = u(x);
        [d * y[0] + q * y[1], l * q * y[0]]
    };
    let h0 = (0.5 / (1.0 + k.norm())).min(0.1);
    let (y, _) = dopri5(f, x_max, 0.0, [ZERO, ONE], step_tol, h0)?;
    Ok((y[0], y[1]))
}

/// (s₁⁺(k), s₂⁺(k)) for Im k ≥ 0.
pub fn chi_system_s_column(p: &Problem, k: C64) -> Result<(C64, C64)> {
    let u = |x: f64| p.u.eval(x);
    chi_system_with(&u, p.lambda(), k, p.x_max, p.step_tol())
}

/// Full S(k) for real k, computed from a plain (unpeeled) backward
/// integration of the x-equation.
pub fn s_matrix(p: &Problem, k: f64) -> Result<SMatrixSample> {
    let kc = C64::from(k);
    let u = |x: f64| p.u.eval(x);
    let w0 = Mat2C::exp_sigma3(-I * kc * p.x_max);
    let psi = integrate_x(&u, p.lambda(), kc, p.x_max, 0.0, w0, p.step_tol())?;
    let det = psi.det();
    if det.norm() < 1e-10 {
        return Err(Error::SingularPsi { k: kc, det: det.norm() });
    }
    Ok(SMatrixSample { k: kc, s: psi.inv() })
}

/// r(k) = −s₂⁻/s₂⁺ for real k, using s₂⁻(k) = λ·conj(s₁⁺(k)).
pub fn reflection(p: &Problem, k: f64) -> Result<C64> {
    let (s1p, s2p) = chi_system_s_column(p, C64::from(k))?;
    reflection_from(p.lambda(), k, s1p, s2p, p.config.tolerances.tol_root)
}

fn reflection_from(lambda: Lambda, k: f64, s1p: C64, s2p: C64, tol_root: f64) -> Result<C64> {
    if s2p.norm() <= tol_root {
        return Err(Error::RealZeroOfS2 { k, modulus: s2p.norm() });
    }
    Ok(-lambda.value() * s1p.conj() / s2p)
}

/// P(k) from the boundary data; only certified columns are filled.
pub fn p_matrix(p: &Problem, k: C64, want: [bool; 2]) -> Result<PMatrixSample> {
    let bt = |t: f64| p.boundary(t);
    let sol = hat_psi_with(
        &bt,
        p.lambda(),
        0.0,
        k,
        p.t_end,
        p.horizon().is_finite(),
        want,
        p.step_tol(),
    )?;
    Ok(PMatrixSample {
        k,
        p: sol.w,
        certified: sol.certified,
    })
}

/// Pointwise ingredients of c(k) and r₁⁻(k) at one k ∈ ℂ̄₊.
#[derive(Clone, Copy, Debug)]
pub struct SpectralPoint {
    pub k: C64,
    pub s1p: C64,
    pub s2p: C64,
    pub p1m: C64,
    pub p2m: C64,
}

impl SpectralPoint {
    pub fn r1m(&self) -> C64 {
        self.p1m * self.s2p - self.p2m * self.s1p
    }

    pub fn c(&self) -> C64 {
        self.p2m / (self.s2p * self.r1m())
    }
}

pub fn spectral_point(p: &Problem, k: C64) -> Result<SpectralPoint> {
    let (s1p, s2p) = chi_system_s_column(p, k)?;
    let pm = p_matrix(p, k, [true, false])?;
    if !pm.certified[0] {
        return Err(Error::NonCertifiedColumn { column: 1, k });
    }
    Ok(SpectralPoint {
        k,
        s1p,
        s2p,
        p1m: pm.p1m(),
        p2m: pm.p2m(),
    })
}

/// r₁⁻(k) = p₁⁻s₂⁺ − p₂⁻s₁⁺.
pub fn r1_minus(p: &Problem, k: C64) -> Result<C64> {
    Ok(spectral_point(p, k)?.r1m())
}

/// c(k) = p₂⁻ / (s₂⁺ r₁⁻).
pub fn c_function(p: &Problem, k: C64) -> Result<C64> {
    let sp = spectral_point(p, k)?;
    let den = sp.s2p * sp.r1m();
    if den.norm() <= p.config.tolerances.tol_root {
        return Err(Error::NearPole { k });
    }
    Ok(sp.p2m / den)
}

/// Cauchy-circle radius for derivatives and residues at a zero `z` inside
/// a region whose boundary is at distance `dist`.
pub fn circle_radius(dist: f64) -> f64 {
    0.05 * dist
}

/// Number of trapezoid nodes on Cauchy circles.
pub const CIRCLE_NODES: usize = 64;

/// m¹ = [i s₁⁺(k_j) ṡ₂⁺(k_j)]⁻¹.
pub fn norming_x(p: &Problem, kj: C64, others: &[C64]) -> Result<C64> {
    let dist = others
        .iter()
        .filter(|z| (**z - kj).norm() > 0.0)
        .map(|z| (*z - kj).norm())
        .fold(kj.im, f64::min);
    let rho = circle_radius(dist);
    let f = |k: C64| chi_system_s_column(p, k).map(|s| s.1);
    let ds2 = cauchy_derivative(&f, kj, rho, CIRCLE_NODES)?;
    let (s1p, _) = chi_system_s_column(p, kj)?;
    if s1p.norm() <= p.config.tolerances.tol_root {
        return Err(Error::VanishingS1AtZero { k: kj });
    }
    Ok(ONE / (I * s1p * ds2))
}

/// Distance from a point of Ω₂ to ∂Ω₂.
pub fn dist_to_omega2_boundary(z: C64) -> f64 {
    let arg = z.arg();
    z.norm() * ((arg - PI / 3.0).abs().min((2.0 * PI / 3.0 - arg).abs())).sin()
}

/// m² at a zero z of r₁⁻ in Ω₂ by two routes: −i·Res c (Cauchy circle) and
/// p₁⁻(z)[i s₁⁺(z) ṙ₁⁻(z)]⁻¹.  Returns the residue route; errors when the
/// routes disagree by more than 1e−5 relative.
pub fn norming_bc(p: &Problem, zj: C64, others: &[C64]) -> Result<C64> {
    let dist = others
        .iter()
        .filter(|z| (**z - zj).norm() > 0.0)
        .map(|z| (*z - zj).norm())
        .fold(dist_to_omega2_boundary(zj), f64::min);
    norming_bc_radius(p, zj, circle_radius(dist))
}

pub fn norming_bc_radius(p: &Problem, zj: C64, rho: f64) -> Result<C64> {
    let n = CIRCLE_NODES;
    let pts: Vec<C64> = (0..n)
        .map(|j| zj + C64::from_polar(rho, 2.0 * PI * j as f64 / n as f64))
        .collect();
    let samples: Vec<SpectralPoint> = pts
        .par_iter()
        .map(|&k| spectral_point(p, k))
        .collect::<Result<_>>()?;
    let mut res = ZERO;
    let mut dr = ZERO;
    for (sp, k) in samples.iter().zip(&pts) {
        let d = *k - zj;
        res += sp.c() * d;
        dr += sp.r1m() / d;
    }
    res /= n as f64;
    dr /= n as f64;
    let at = spectral_point(p, zj)?;
    if at.s1p.norm() <= p.config.tolerances.tol_root {
        return Err(Error::VanishingS1AtZero { k: zj });
    }
    let m_res = -I * res;
    let m_alt = at.p1m / (I * at.s1p * dr);
    let mismatch = (m_res - m_alt).norm() / m_res.norm().max(1e-300);
    if mismatch > 1e-5 {
        return Err(Error::InconsistentResidue { z: zj, mismatch });
    }
    Ok(m_res)
}

/// c(k) sampled on the two rays of ∂Ω₂ at k = s·e^{iπ/3} (`right`) and
/// k = s·e^{2iπ/3} (`left`), s on the grid of `ray_grid`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RaySamples {
    pub s: Vec<f64>,
    pub right: Vec<C64>,
    pub left: Vec<C64>,
}

impl RaySamples {
    pub fn zero(s_max: f64, n: usize) -> Self {
        let s = ray_grid(s_max, n);
        let n = s.len();
        RaySamples {
            right: vec![ZERO; n],
            left: vec![ZERO; n],
            s,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.right.iter().chain(&self.left).all(|c| *c == ZERO)
    }
}

/// The scattering data of the compatible eigenvalue problem.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScatteringData {
    pub lambda: Lambda,
    #[serde(rename = "T")]
    pub horizon: Horizon,
    /// Upper end of the t-integration used for P (T or t_eff).
    pub t_end: f64,
    pub eigenvalues_x: Vec<C64>,
    pub eigenvalues_bc: Vec<C64>,
    pub norming_x: Vec<C64>,
    pub norming_bc: Vec<C64>,
    /// (k, r(k)) on a symmetric real grid.
    pub r_samples: Vec<(f64, C64)>,
    pub c_rays: RaySamples,
}

impl ScatteringData {
    /// Data with no discrete spectrum, r ≡ 0 and c ≡ 0.
    pub fn empty(lambda: Lambda, horizon: Horizon) -> Self {
        let k: Vec<f64> = (0..=240).map(|i| -12.0 + 0.1 * i as f64).collect();
        ScatteringData {
            lambda,
            horizon,
            t_end: 1.0,
            eigenvalues_x: vec![],
            eigenvalues_bc: vec![],
            norming_x: vec![],
            norming_bc: vec![],
            r_samples: k.into_iter().map(|k| (k, ZERO)).collect(),
            c_rays: RaySamples::zero(6.0, 61),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scattering data serializes")
    }

    pub fn has_eigenvalues(&self) -> bool {
        !self.eigenvalues_x.is_empty() || !self.eigenvalues_bc.is_empty()
    }

    pub fn k_grid(&self) -> Vec<f64> {
        self.r_samples.iter().map(|p| p.0).collect()
    }

    /// Cubic spline of r on its sample grid (real and imaginary parts).
    pub fn r_spline(&self) -> Result<(CubicSpline, CubicSpline)> {
        let k = self.k_grid();
        let re = self.r_samples.iter().map(|p| p.1.re).collect();
        let im = self.r_samples.iter().map(|p| p.1.im).collect();
        Ok((CubicSpline::new(k.clone(), re)?, CubicSpline::new(k, im)?))
    }
}

/// Symmetric real k-grid with spacing k_step on [−k_max, k_max].
pub fn real_k_grid(k_max: f64, k_step: f64) -> Vec<f64> {
    let m = (k_max / k_step).round() as i64;
    (-m..=m).map(|i| i as f64 * k_step).collect()
}

/// Spacing of the extra near-origin ray nodes.
pub const RAY_ORIGIN_STEP: f64 = 0.005;
/// Number of extra near-origin ray nodes (covering s ≤ 0.1).
pub const RAY_ORIGIN_NODES: usize = 20;

/// s-grid on [0, s_max] for the ∂Ω₂ rays: n uniform nodes plus a cluster
/// of spacing 0.005 on [0, 0.1] that resolves the Taylor data of c at k = 0.
pub fn ray_grid(s_max: f64, n: usize) -> Vec<f64> {
    let h = s_max / (n - 1) as f64;
    let mut s: Vec<f64> = (0..n).map(|i| s_max * i as f64 / (n - 1) as f64).collect();
    s.extend(
        (1..=RAY_ORIGIN_NODES)
            .map(|j| j as f64 * RAY_ORIGIN_STEP)
            .filter(|x| ((x / h).round() * h - x).abs() > 1e-3 * h && *x < s_max),
    );
    s.sort_by(f64::total_cmp);
    s
}

pub fn ray_right(s: f64) -> C64 {
    C64::from_polar(s, PI / 3.0)
}

pub fn ray_left(s: f64) -> C64 {
    C64::from_polar(s, 2.0 * PI / 3.0)
}

/// Zeros of s₂⁺ in the box [−K, K] × [h_min, K].
pub fn find_eigenvalues_x(p: &Problem) -> Result<Vec<C64>> {
    if p.lambda() == Lambda::Defocusing || p.u.is_zero() {
        return Ok(vec![]);
    }
    let kb = p.config.grids.search_box;
    let region = SearchRegion::Rect {
        x0: -kb,
        x1: kb,
        y0: 1e-3,
        y1: kb,
    };
    let f = |k: C64| chi_system_s_column(p, k).map(|s| s.1);
    find_zeros(&f, region, p.config.tolerances.tol_root)
}

/// Zeros of r₁⁻ in the sector Ω₂ ∩ {r_min ≤ |k| ≤ K}.
pub fn find_eigenvalues_bc(p: &Problem) -> Result<Vec<C64>> {
    if p.lambda() == Lambda::Defocusing || (p.u.is_zero() && p.boundary_is_zero()) {
        return Ok(vec![]);
    }
    let kb = p.config.grids.search_box;
    let region = SearchRegion::Polar {
        r0: 1e-3,
        r1: kb,
        a0: PI / 3.0,
        a1: 2.0 * PI / 3.0,
    };
    let f = |k: C64| r1_minus(p, k);
    find_zeros(&f, region, p.config.tolerances.tol_root)
}

/// Assemble the full scattering data set for a resolved problem.
pub fn assemble_scattering_data(p: &Problem) -> Result<ScatteringData> {
    let g = &p.config.grids;
    let lambda = p.lambda();
    let tol_root = p.config.tolerances.tol_root;

    let ks = real_k_grid(g.k_max, g.k_step);
    let r_samples: Vec<(f64, C64)> = if p.u.is_zero() {
        ks.iter().map(|&k| (k, ZERO)).collect()
    } else {
        ks.par_iter()
            .map(|&k| {
                let (s1p, s2p) = chi_system_s_column(p, C64::from(k))?;
                Ok((k, reflection_from(lambda, k, s1p, s2p, tol_root)?))
            })
            .collect::<Result<_>>()?
    };

    let s = ray_grid(g.ray_smax, g.ray_nodes);
    let c_rays = if p.u.is_zero() && p.boundary_is_zero() {
        RaySamples::zero(g.ray_smax, g.ray_nodes)
    } else {
        let eval = |k: C64| -> Result<C64> {
            let sp = spectral_point(p, k)?;
            let den = sp.s2p * sp.r1m();
            if den.norm() <= tol_root {
                return Err(Error::NearPole { k });
            }
            Ok(sp.p2m / den)
        };
        let right = s.par_iter().map(|&s| eval(ray_right(s))).collect::<Result<_>>()?;
        let left = s.par_iter().map(|&s| eval(ray_left(s))).collect::<Result<_>>()?;
        RaySamples { s, right, left }
    };

    let eigenvalues_x = find_eigenvalues_x(p)?;
    let norming_x = eigenvalues_x
        .iter()
        .map(|&k| norming_x(p, k, &eigenvalues_x))
        .collect::<Result<_>>()?;
    let eigenvalues_bc = find_eigenvalues_bc(p)?;
    let norming_bc = eigenvalues_bc
        .iter()
        .map(|&z| norming_bc(p, z, &eigenvalues_bc))
        .collect::<Result<_>>()?;

    Ok(ScatteringData {
        lambda,
        horizon: p.horizon(),
        t_end: p.t_end,
        eigenvalues_x,
        eigenvalues_bc,
        norming_x,
        norming_bc,
        r_samples,
        c_rays,
    })
}

/// Max over `ks` ⊂ ℂ₊ of the global-relation residual
/// |s₂⁺p₁⁺ − s₁⁺p₂⁺ − r₁⁺| / (1 + |s₂⁺p₁⁺| + |s₁⁺p₂⁺|) for finite T.
///
/// With `q_at_t_end` = q(·, T) supplied, r₁⁺ is computed independently from
/// Y(0, T, k) = Ψ(0, T, k)R(k), i.e. r₁⁺ = −Ψ₁₂(0, T, k)e^{4ik³T}; otherwise
/// it is the (1,2) entry of the product S·P.
pub fn global_relation_residual(
    p: &Problem,
    ks: &[C64],
    q_at_t_end: Option<&(dyn Fn(f64) -> f64 + Sync)>,
) -> Result<f64> {
    let Horizon::Finite(big_t) = p.horizon() else {
        return Err(Error::InvalidConfig("the global relation needs a finite T".into()));
    };
    let vals: Vec<f64> = ks
        .par_iter()
        .map(|&k| {
            let (s1p, s2p) = chi_system_s_column(p, k)?;
            let pm = p_matrix(p, k, [true, true])?;
            let lhs_a = s2p * pm.p1p();
            let lhs_b = s1p * pm.p2p();
            let r1p = match q_at_t_end {
                Some(q) => {
                    let psi = jost_psi_with(q, p.lambda(), 0.0, big_t, k, p.x_max, p.step_tol())?;
                    let col = psi.column(1)?;
                    -col[0] * (4.0 * I * k * k * k * big_t).exp()
                }
                None => {
                    let mut s = Mat2C::zero();
                    s.a[0][0] = s2p;
                    s.a[0][1] = -s1p;
                    (s * pm.p).a[0][1]
                }
            };
            Ok((lhs_a - lhs_b - r1p).norm() / (1.0 + lhs_a.norm() + lhs_b.norm()))
        })
        .collect::<Result<_>>()?;
    Ok(vals.into_iter().fold(0.0, f64::max))
}

/// s₂⁺(k) for Im k > 0 from the trace formula
/// s₂⁺(k) = B(k)^{(1−λ)/2} exp{(i/2π)∫ log(1 − λ|r(μ)|²)/(μ − k) dμ},
/// B(k) = ∏ (k − k_j)/(k − k̄_j), using the stored r samples plus an
/// O(μ⁻²) tail model of the integrand beyond the grid.
pub fn trace_formula_s2(data: &ScatteringData, k: C64, tol: f64) -> Result<C64> {
    let l = data.lambda.value();
    let ks = data.k_grid();
    let g: Vec<f64> = data
        .r_samples
        .iter()
        .map(|(_, r)| (1.0 - l * r.norm_sqr()).ln())
        .collect();
    let a = ks[0];
    let b = *ks.last().expect("nonempty grid");
    let (ga, gb) = (g[0], g[g.len() - 1]);
    let spline = CubicSpline::new(ks, g)?;
    let f = |mu: f64| C64::from(spline.eval(mu)) / (mu - k);
    // Split at the real part of k so the near-singular peak is a breakpoint.
    let mid = k.re.clamp(a, b);
    let mut integral = ZERO;
    if mid > a {
        integral += adaptive_gauss_kronrod(&f, a, mid, tol)?;
    }
    if b > mid {
        integral += adaptive_gauss_kronrod(&f, mid, b, tol)?;
    }
    // ∫_b^∞ gb (b/μ)²/(μ − k) dμ with μ = b/τ
    let tail_r = |tau: f64| C64::from(gb * b * tau) / (b - k * tau);
    integral += adaptive_gauss_kronrod(&tail_r, 0.0, 1.0, tol)?;
    // ∫_{−∞}^a ga (a/μ)²/(μ − k) dμ with μ = a/τ (a < 0)
    let tail_l = |tau: f64| C64::from(-ga * a * tau) / (a - k * tau);
    integral += adaptive_gauss_kronrod(&tail_l, 0.0, 1.0, tol)?;
    let mut value = (I / (2.0 * PI) * integral).exp();
    if data.lambda == Lambda::Focusing {
        for kj in &data.eigenvalues_x {
            value *= (k - kj) / (k - kj.conj());
        }
    }
    Ok(value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::ProblemConfig;
    use crate::functions::FunctionSpec;
    use crate::types::c;

    fn gaussian(lambda: Lambda, amp: f64) -> Problem {
        let mut cfg = ProblemConfig::new(lambda, Horizon::Finite(1.0));
        cfg.u = FunctionSpec::gaussian(amp, 1.5, 1.0);
        cfg.resolve().unwrap()
    }

    #[test]
    fn zero_data_is_trivial() {
        let p = ProblemConfig::new(Lambda::Focusing, Horizon::Finite(2.0)).resolve().unwrap();
        let (s1, s2) = chi_system_s_column(&p, c(0.3, 0.5)).unwrap();
        assert!(s1.norm() < 1e-14 && (s2 - ONE).norm() < 1e-14);
        let s = s_matrix(&p, 0.7).unwrap();
        assert!((s.s - Mat2C::identity()).max_abs() < 1e-10);
        assert_eq!(reflection(&p, 1.0).unwrap(), ZERO);
        let pm = p_matrix(&p, c(0.4, 0.3), [true, true]).unwrap();
        assert!((pm.p - Mat2C::identity()).max_abs() < 1e-10);
        assert!((r1_minus(&p, c(0.1, 0.9)).unwrap() - ONE).norm() < 1e-10);
        assert!(c_function(&p, c(0.1, 0.9)).unwrap().norm() < 1e-10);
        assert_eq!(global_relation_residual(&p, &[c(0.3, 0.4)], None).unwrap(), 0.0);
    }

    #[test]
    fn s_matrix_invariants() {
        for lambda in [Lambda::Focusing, Lambda::Defocusing] {
            let p = gaussian(lambda, 0.6);
            for &k in &[-3.0, -0.4, 0.0, 0.8, 2.5] {
                let s = s_matrix(&p, k).unwrap();
                assert!((s.s.det() - ONE).norm() < 1e-8);
                let (s1p, s2p) = chi_system_s_column(&p, C64::from(k)).unwrap();
                assert!((s1p - s.s1p()).norm() < 1e-8);
                assert!((s2p - s.s2p()).norm() < 1e-8);
                // s₁⁻ = conj s₂⁺, s₂⁻ = λ conj s₁⁺ on ℝ
                assert!((s.s1m() - s.s2p().conj()).norm() < 1e-8);
                assert!((s.s2m() - lambda.value() * s.s1p().conj()).norm() < 1e-8);
                let unit = s.s2p().norm_sqr() - lambda.value() * s.s1p().norm_sqr();
                assert!((unit - 1.0).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn reflection_symmetry_and_decay() {
        let p = gaussian(Lambda::Defocusing, 0.6);
        for &k in &[0.3, 1.1, 4.0] {
            let a = reflection(&p, k).unwrap();
            let b = reflection(&p, -k).unwrap();
            assert!((a - b.conj()).norm() < 1e-8);
            assert!(a.norm() < 1.0);
        }
        let big = reflection(&p, 10.0).unwrap().norm() * 10.0;
        let bigger = reflection(&p, 20.0).unwrap().norm() * 20.0;
        assert!(bigger < 2.0 * big + 1e-6);
        let (s1, s2) = chi_system_s_column(&p, c(0.0, 30.0)).unwrap();
        assert!(s1.norm() < 0.1 && (s2 - ONE).norm() < 0.1);
    }

    #[test]
    fn p_matrix_asymptotics() {
        let p = ProblemConfig::soliton(0.5, -3.0, Horizon::Finite(4.0)).resolve().unwrap();
        for &k in &[-1.0, 0.5, 2.0] {
            let pm = p_matrix(&p, C64::from(k), [true, true]).unwrap();
            assert!((pm.p.det() - ONE).norm() < 1e-8);
        }
        // Short horizon keeps the oscillatory t-integration at |k| = 30 cheap.
        let p = ProblemConfig::soliton(0.5, -3.0, Horizon::Finite(0.25)).resolve().unwrap();
        let pm = p_matrix(&p, c(30.0, 0.0), [true, true]).unwrap();
        assert!((pm.p - Mat2C::identity()).max_abs() < 0.1);
    }

    #[test]
    fn r1_and_c_symmetries() {
        let p = ProblemConfig::soliton(0.5, -3.0, Horizon::Finite(2.0)).resolve().unwrap();
        let k = c(0.4, 0.7);
        let a = r1_minus(&p, k).unwrap();
        let b = r1_minus(&p, -k.conj()).unwrap();
        assert!((a - b.conj()).norm() < 1e-8);
        let ca = c_function(&p, k).unwrap();
        let cb = c_function(&p, -k.conj()).unwrap();
        assert!((ca - cb.conj()).norm() < 1e-8, "{ca} {cb}");
    }

    #[test]
    fn ro1_determinant_relation() {
        // 1 − λ|ρ|² = 1/|r₁⁻|² on ℝ with ρ = r₂⁻/r₁⁻ (finite T).
        let p = ProblemConfig::soliton(0.5, -3.0, Horizon::Finite(2.0)).resolve().unwrap();
        for &k in &[-0.7, 0.2, 1.3] {
            let s = s_matrix(&p, k).unwrap();
            let pm = p_matrix(&p, C64::from(k), [true, true]).unwrap();
            let r = RMatrixSample::from_parts(&s, &pm);
            let rho = r.r2m() / r.r1m();
            let lhs = 1.0 + rho.norm_sqr();
            let rhs = 1.0 / r.r1m().norm_sqr();
            assert!((lhs - rhs).abs() < 1e-6, "{lhs} {rhs}");
        }
    }

    #[test]
    fn global_relation_both_routes() {
        let p = ProblemConfig::soliton(0.5, -3.0, Horizon::Finite(1.0)).resolve().unwrap();
        let ks = [c(0.3, 0.4), c(-0.8, 0.2), c(0.1, 1.0)];
        assert!(global_relation_residual(&p, &ks, None).unwrap() < 1e-12);
        let q = |x: f64| crate::functions::soliton_value(0.5, -3.0, 1.0, x, 1.0, 0);
        let res = global_relation_residual(&p, &ks, Some(&q)).unwrap();
        assert!(res < 1e-6, "{res}");
    }
}

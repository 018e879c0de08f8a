//! The Marchenko kernel
//!
//! H(x,t) = Σ m e^{ikx+8ik³t} (discrete part)
//!        + (1/2π)∫_{∂Ω₂} c(k) e^{ikx+8ik³t} dk + (1/2π)∫_ℝ r(k) e^{ikx+8ik³t} dk
//!
//! and its t = 0 companion H₀(x) = Σ m¹ e^{ik_jx} + (1/2π)∫_ℝ r(k)e^{ikx} dk.
//!
//! r and c are known as samples on [−k_max, k_max] and on the rays
//! s·e^{iπ/3}, s·e^{2iπ/3}, s ∈ [0, s_max].  Inside those ranges they are
//! interpolated by cubic splines; beyond, by an asymptotic series Σ aₙk⁻ⁿ
//! fitted on the outer half of the samples.  The series tails are integrated
//! in closed form through Eₙ at t = 0 and along steepest-descent paths for
//! t > 0.  Every piece is a sum of exponentials e^{ikx+8ik³t} over fixed
//! nodes, so the discrete kernel solves H_t + 8H_xxx = 0 exactly.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::quadrature::{composite_gauss_legendre, expint_en, gauss_legendre, ComplexSpline};
use crate::scattering::ScatteringData;
use crate::types::{Lambda, C64, I, ZERO};

/// Largest number of terms of the asymptotic tail series.
pub const TAIL_TERMS: usize = 8;
/// Gauss–Legendre nodes per panel in the oscillatory quadratures.
const PANEL_NODES: usize = 20;
/// Largest phase change (radians) allowed across one panel.
const PANEL_PHASE: f64 = 10.0;
/// Gauss–Legendre nodes per panel on the rays of ∂Ω₂; ray panels never
/// straddle a spline knot, so the integrand is smooth on each panel.
const RAY_PANEL_NODES: usize = 8;
/// Largest phase change (radians) across one ray panel.
const RAY_PANEL_PHASE: f64 = 2.0;
/// Fraction of the sampled range (outer part) used for the tail fits.
const TAIL_WINDOW: f64 = 0.5;
/// Relative least-squares misfit above which a tail series is rejected.
const TAIL_FIT_TOL: f64 = 1e-4;

fn omega_r() -> C64 {
    C64::from_polar(1.0, PI / 3.0)
}

fn omega_l() -> C64 {
    C64::from_polar(1.0, 2.0 * PI / 3.0)
}

/// Least-squares fit vals ≈ Σ_{n=1}^{N} aₙ k⁻ⁿ; returns (coefficients,
/// relative misfit).
pub fn fit_tail_series(ks: &[C64], vals: &[C64], nterms: usize) -> (Vec<C64>, f64) {
    let m = ks.len();
    let nterms = nterms.min(m / 2).max(1);
    let scale = ks.iter().map(|k| k.norm()).fold(0.0, f64::max);
    let a = DMatrix::from_fn(m, nterms, |i, j| (C64::from(scale) / ks[i]).powi(j as i32 + 1));
    let b = DVector::from_iterator(m, vals.iter().copied());
    let svd = a.clone().svd(true, true);
    let alpha = svd.solve(&b, 1e-13).unwrap_or_else(|_| DVector::zeros(nterms));
    let resid = (&a * &alpha - &b).norm();
    let bnorm = b.norm();
    let misfit = if bnorm > 0.0 { resid / bnorm } else { 0.0 };
    let coeffs = (0..nterms)
        .map(|j| alpha[j] * scale.powi(j as i32 + 1))
        .collect();
    (coeffs, misfit)
}

/// Tail series with the number of terms chosen by extrapolation: each
/// candidate order is fitted on the inner 70% of the samples (ordered by
/// |k|) and scored on the outer 30%; the winner is refitted on all samples.
/// Returns (coefficients, relative extrapolation error of the winner).
pub fn fit_tail_series_auto(ks: &[C64], vals: &[C64], max_terms: usize) -> (Vec<C64>, f64) {
    let split = (ks.len() * 7) / 10;
    let vnorm = vals[split..].iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
    let mut best = (1, f64::INFINITY);
    for n in 1..=max_terms {
        let (coef, _) = fit_tail_series(&ks[..split], &vals[..split], n);
        let err = ks[split..]
            .iter()
            .zip(&vals[split..])
            .map(|(k, v)| (series(&coef, *k) - v).norm_sqr())
            .sum::<f64>()
            .sqrt();
        let rel = if vnorm > 0.0 { err / vnorm } else { 0.0 };
        if rel < best.1 {
            best = (n, rel);
        }
    }
    let (mut coef, _) = fit_tail_series(ks, vals, best.0);
    // A bounded kernel has no logarithm at s = 0, which forces the 1/k
    // coefficient to be purely imaginary; project it and refit the rest.
    coef[0] = C64::new(0.0, coef[0].im);
    if best.0 > 1 {
        let lead = coef[0];
        let rest: Vec<C64> = ks.iter().zip(vals).map(|(k, v)| (v - lead / k) * k).collect();
        let (higher, _) = fit_tail_series(ks, &rest, best.0 - 1);
        coef.truncate(1);
        coef.extend(higher);
    }
    (coef, best.1)
}

#[inline]
fn series(coeffs: &[C64], k: C64) -> C64 {
    let inv = 1.0 / k;
    let mut acc = ZERO;
    for a in coeffs.iter().rev() {
        acc = (acc + a) * inv;
    }
    acc
}

#[inline]
fn phase(k: C64, x: f64, t: f64) -> C64 {
    (I * k * (x + 8.0 * k * k * t)).exp()
}

/// Decay rate in τ of e^{ikx+8ik³t} along k = k0 + τ·e^{iπ/6} (or its
/// mirror image) for t > 0.
fn path_rate(k0: C64, x: f64, t: f64) -> f64 {
    12.0 * k0.norm_sqr() * t + 0.5 * x + 1e-3
}

/// Terms (k, g) of a steepest-descent tail quadrature for
/// sign·∫ Σ aₙk⁻ⁿ e^{ikx+8ik³t} dk over k = k0 + τ·dir, τ ≥ 0, so that the
/// integral equals Σ g·e^{ikx}.  The geometric panels resolve every decay
/// rate in [rate_lo, rate_hi].
fn tail_terms(coeffs: &[C64], k0: C64, dir: C64, sign: f64, t: f64, rate_lo: f64, rate_hi: f64) -> Vec<(C64, C64)> {
    let mut b = 0.5 / rate_hi;
    let mut breaks = vec![0.0, b];
    while b * rate_lo < 45.0 {
        b *= 2.0;
        breaks.push(b);
    }
    let (tau, w) = composite_gauss_legendre(&breaks, PANEL_NODES);
    tau.iter()
        .zip(&w)
        .map(|(&s, &w)| {
            let k = k0 + dir * s;
            (k, dir * (sign * w) * series(coeffs, k) * phase(k, 0.0, t))
        })
        .collect()
}

/// Σ g·e^{ikx} at one x.
fn exp_sum(terms: &[(C64, C64)], x: f64) -> C64 {
    terms.iter().map(|(k, g)| g * (I * k * x).exp()).sum()
}

/// Σ g·e^{ik·iΔ} for i = 0 … n−1 by multiplicative recurrences; terms whose
/// exponential has decayed below e^{−50} are dropped for good.
fn exp_sum_table(terms: &mut [(C64, C64)], n: usize, ds: f64) -> Vec<C64> {
    terms.sort_by(|a, b| a.0.im.total_cmp(&b.0.im));
    let mut e: Vec<C64> = vec![C64::from(1.0); terms.len()];
    let step: Vec<C64> = terms.iter().map(|(k, _)| (I * k * ds).exp()).collect();
    let mut active = terms.len();
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let x = i as f64 * ds;
        active = terms[..active].partition_point(|(k, _)| k.im * x <= 50.0);
        let mut v = ZERO;
        for j in 0..active {
            v += terms[j].1 * e[j];
            e[j] *= step[j];
        }
        // Re-anchor periodically to stop rounding drift of the recurrence.
        if i % 256 == 255 {
            let xn = (i + 1) as f64 * ds;
            for j in 0..active {
                e[j] = (I * terms[j].0 * xn).exp();
            }
        }
        out.push(v);
    }
    out
}

/// ∫ Σ aₙ k⁻ⁿ e^{ikx} dk over k = k0 + s·d, s ∈ [0, ∞), in closed form:
/// Σ aₙ d·∫ (k0 + sd)^{−n}... handled for k0 ∥ d by
/// ∫_{|k0|}^∞ aₙ (ρd)^{−n} e^{iρdx} d dρ = aₙ d^{1−n} |k0|^{1−n} Eₙ(−i d x |k0|).
/// At x = 0 only the n ≥ 2 terms are returned; the n = 1 logarithms are
/// combined by the caller.
fn radial_tail_t0(coeffs: &[C64], d: C64, r0: f64, x: f64) -> C64 {
    let mut acc = ZERO;
    for (j, a) in coeffs.iter().enumerate() {
        let n = j + 1;
        let pre = a * d.powi(1 - n as i32) * r0.powi(1 - n as i32);
        if x == 0.0 {
            if n >= 2 {
                acc += pre / (n - 1) as f64;
            }
        } else {
            acc += pre * expint_en(n, -I * d * x * r0);
        }
    }
    acc
}

/// The real-axis part (1/2π)∫_ℝ r(k) e^{ikx+8ik³t} dk.
#[derive(Clone, Debug)]
pub struct RealAxisPart {
    spline: ComplexSpline,
    l: f64,
    right: Vec<C64>,
    left: Vec<C64>,
}

impl RealAxisPart {
    fn new(data: &ScatteringData) -> Result<Option<Self>> {
        if data.r_samples.iter().all(|p| p.1 == ZERO) {
            return Ok(None);
        }
        let ks = data.k_grid();
        let l = ks[ks.len() - 1];
        if (ks[0] + l).abs() > 1e-9 * l {
            return Err(Error::GridNotSymmetric);
        }
        let vals: Vec<C64> = data.r_samples.iter().map(|p| p.1).collect();
        let spline = ComplexSpline::new(ks.clone(), &vals)?;
        // Samples ordered by increasing |k| on each side.
        let pick = |sign: f64| -> (Vec<C64>, Vec<C64>) {
            let mut side: Vec<(C64, C64)> = data
                .r_samples
                .iter()
                .filter(|(k, _)| sign * k >= TAIL_WINDOW * l)
                .map(|(k, r)| (C64::from(*k), *r))
                .collect();
            side.sort_by(|a, b| a.0.norm().total_cmp(&b.0.norm()));
            side.into_iter().unzip()
        };
        let (kr, vr) = pick(1.0);
        let (kl, vl) = pick(-1.0);
        let scale = vals.iter().map(|v| v.norm()).fold(0.0, f64::max);
        let (right, mr) = fit_tail_series_auto(&kr, &vr, TAIL_TERMS);
        let (left, ml) = fit_tail_series_auto(&kl, &vl, TAIL_TERMS);
        let tail_size = vr.iter().chain(&vl).map(|v| v.norm()).fold(0.0, f64::max);
        if mr.max(ml) > TAIL_FIT_TOL && tail_size > 1e-8 * scale {
            return Err(Error::QuadratureNotConverged(format!(
                "reflection coefficient is not asymptotic to a 1/k series near k_max \
                 (misfit {:.2e}); increase k_max",
                mr.max(ml)
            )));
        }
        Ok(Some(RealAxisPart {
            spline,
            l,
            right,
            left,
        }))
    }

    /// Tail terms beyond ±a for t > 0, valid for x ∈ [x_lo, x_hi].
    fn tail_terms(&self, a: f64, t: f64, x_lo: f64, x_hi: f64) -> Vec<(C64, C64)> {
        let k0 = C64::from(a);
        let (lo, hi) = (path_rate(k0, x_lo, t), path_rate(k0, x_hi, t));
        let mut v = tail_terms(&self.right, k0, C64::from_polar(1.0, PI / 6.0), 1.0, t, lo, hi);
        v.extend(tail_terms(&self.left, -k0, C64::from_polar(1.0, 5.0 * PI / 6.0), -1.0, t, lo, hi));
        v
    }

    /// ∫_{|k|>a} of the series part (without the 1/2π).
    fn tails(&self, a: f64, x: f64, t: f64) -> C64 {
        if t == 0.0 {
            let one = C64::from(1.0);
            // right: ∫_a^∞ ; left: ∫_{−∞}^{−a} = ∫ over k = −ρ, ρ > a
            let mut v = radial_tail_t0(&self.right, one, a, x) + radial_tail_t0(&self.left, -one, a, x) * -1.0;
            if x == 0.0 {
                v += I * PI * 0.5 * (self.right[0] + self.left[0]);
            }
            v
        } else {
            exp_sum(&self.tail_terms(a, t, x, x), x)
        }
    }

    /// Direct evaluation by composite Gauss–Legendre quadrature.
    fn eval(&self, x: f64, t: f64) -> C64 {
        let l = self.l;
        let total_phase = 2.0 * l * x + 16.0 * l * l * l * t;
        let panels = ((total_phase / PANEL_PHASE).ceil() as usize).max((2.0 * l / 0.25) as usize);
        let breaks: Vec<f64> = (0..=panels).map(|i| -l + 2.0 * l * i as f64 / panels as f64).collect();
        let (ks, ws) = composite_gauss_legendre(&breaks, PANEL_NODES);
        let mut v = ZERO;
        for (k, w) in ks.iter().zip(&ws) {
            v += self.spline.eval(*k) * phase(C64::from(*k), x, t) * *w;
        }
        (v + self.tails(l, x, t)) / (2.0 * PI)
    }
}

/// The ∂Ω₂ part (1/2π)∫_{∂Ω₂} c(k) e^{ikx+8ik³t} dk, oriented
/// counterclockwise around Ω₂.
#[derive(Clone, Debug)]
pub struct RayPart {
    right: ComplexSpline,
    left: ComplexSpline,
    s_max: f64,
    knots: Vec<f64>,
    b_right: Vec<C64>,
    b_left: Vec<C64>,
}

impl RayPart {
    fn new(data: &ScatteringData) -> Result<Option<Self>> {
        let rays = &data.c_rays;
        if rays.is_zero() {
            return Ok(None);
        }
        let s_max = rays.s[rays.s.len() - 1];
        let right = ComplexSpline::new(rays.s.clone(), &rays.right)?;
        let left = ComplexSpline::new(rays.s.clone(), &rays.left)?;
        let fit = |vals: &[C64], w: C64| {
            let (k, v): (Vec<C64>, Vec<C64>) = rays
                .s
                .iter()
                .zip(vals)
                .filter(|(s, _)| **s >= TAIL_WINDOW * s_max)
                .map(|(s, c)| (w * *s, *c))
                .unzip();
            let tail = v.iter().map(|c| c.norm()).fold(0.0, f64::max);
            let (b, misfit) = fit_tail_series_auto(&k, &v, TAIL_TERMS);
            (b, misfit, tail)
        };
        let (b_right, m1, t1) = fit(&rays.right, omega_r());
        let (b_left, m2, t2) = fit(&rays.left, omega_l());
        let scale = rays.right.iter().chain(&rays.left).map(|c| c.norm()).fold(0.0, f64::max);
        if m1.max(m2) > TAIL_FIT_TOL && t1.max(t2) > 1e-8 * scale {
            return Err(Error::QuadratureNotConverged(format!(
                "c(k) on ∂Ω₂ is not asymptotic to a 1/k series near ray_smax \
                 (misfit {:.2e}); increase ray_smax",
                m1.max(m2)
            )));
        }
        Ok(Some(RayPart {
            right,
            left,
            s_max,
            knots: rays.s.clone(),
            b_right,
            b_left,
        }))
    }

    /// Tail terms beyond s_max for t > 0, valid for x ∈ [x_lo, x_hi].
    fn tail_terms(&self, t: f64, x_lo: f64, x_hi: f64) -> Vec<(C64, C64)> {
        let (kr, kl) = (omega_r() * self.s_max, omega_l() * self.s_max);
        let (lo, hi) = (path_rate(kr, x_lo, t), path_rate(kr, x_hi, t));
        let mut v = tail_terms(&self.b_right, kr, C64::from_polar(1.0, PI / 6.0), 1.0, t, lo, hi);
        v.extend(tail_terms(&self.b_left, kl, C64::from_polar(1.0, 5.0 * PI / 6.0), -1.0, t, lo, hi));
        v
    }

    fn tails(&self, x: f64, t: f64) -> C64 {
        let (wr, wl) = (omega_r(), omega_l());
        let s = self.s_max;
        if t == 0.0 {
            let mut v = radial_tail_t0(&self.b_right, wr, s, x) - radial_tail_t0(&self.b_left, wl, s, x);
            if x == 0.0 {
                v += I * PI / 3.0 * 0.5 * (self.b_right[0] + self.b_left[0]);
            }
            v
        } else {
            exp_sum(&self.tail_terms(t, x, x), x)
        }
    }

    /// Gauss–Legendre nodes on [0, s_max]: every knot interval is split into
    /// panels resolving e^{∓8is³t} and e^{iωsx}.
    fn nodes(&self, x_hint: f64, t: f64) -> (Vec<f64>, Vec<f64>) {
        let mut breaks = vec![self.knots[0]];
        for w in self.knots.windows(2) {
            let (a, b) = (w[0], w[1]);
            let phase = (b - a) * (x_hint.abs() + 24.0 * b * b * t.abs());
            let m = ((phase / RAY_PANEL_PHASE).ceil() as usize).max(1);
            breaks.extend((1..=m).map(|i| a + (b - a) * i as f64 / m as f64));
        }
        composite_gauss_legendre(&breaks, RAY_PANEL_NODES)
    }

    /// Terms (k, g) with g = ±c(k)·dk·e^{8ik³t} at the ray nodes, so that the
    /// finite ray integral equals Σ g·e^{ikx}.
    fn body_terms(&self, x_hint: f64, t: f64) -> Vec<(C64, C64)> {
        let (ss, ws) = self.nodes(x_hint, t);
        let (wr, wl) = (omega_r(), omega_l());
        let mut v = Vec::with_capacity(2 * ss.len());
        for (&s, &w) in ss.iter().zip(&ws) {
            let (kr, kl) = (wr * s, wl * s);
            v.push((kr, self.right.eval(s) * wr * w * phase(kr, 0.0, t)));
            v.push((kl, -self.left.eval(s) * wl * w * phase(kl, 0.0, t)));
        }
        v
    }

    fn eval(&self, x: f64, t: f64) -> C64 {
        (exp_sum(&self.body_terms(x, t), x) + self.tails(x, t)) / (2.0 * PI)
    }
}

/// Immutable kernel evaluator built from a scattering-data set.
#[derive(Clone, Debug)]
pub struct KernelField {
    pub lambda: Lambda,
    /// (k, m): discrete terms m·e^{ikx+8ik³t} of H.
    pub poles: Vec<(C64, C64)>,
    /// (k, m): discrete terms m·e^{ikx} of H₀.
    pub poles0: Vec<(C64, C64)>,
    real: Option<RealAxisPart>,
    rays: Option<RayPart>,
}

fn in_omega2(k: C64) -> bool {
    let a = k.arg();
    a > PI / 3.0 && a < 2.0 * PI / 3.0
}

impl KernelField {
    pub fn new(data: &ScatteringData) -> Result<Self> {
        let mut poles = Vec::new();
        let mut poles0 = Vec::new();
        if data.lambda == Lambda::Focusing {
            for (k, m) in data.eigenvalues_x.iter().zip(&data.norming_x) {
                poles0.push((*k, *m));
                if !in_omega2(*k) {
                    poles.push((*k, *m));
                }
            }
            for (z, m) in data.eigenvalues_bc.iter().zip(&data.norming_bc) {
                poles.push((*z, *m));
            }
        }
        Ok(KernelField {
            lambda: data.lambda,
            poles,
            poles0,
            real: RealAxisPart::new(data)?,
            rays: RayPart::new(data)?,
        })
    }

    /// A kernel with only discrete terms (used by oracles).
    pub fn from_poles(lambda: Lambda, poles: Vec<(C64, C64)>) -> Self {
        KernelField {
            lambda,
            poles0: poles.clone(),
            poles,
            real: None,
            rays: None,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.poles.is_empty() && self.real.is_none() && self.rays.is_none()
    }

    fn discrete(&self, x: f64, t: f64) -> C64 {
        self.poles.iter().map(|(k, m)| m * phase(*k, x, t)).sum()
    }

    /// Complex value of H(x, t) before the real cast, by direct quadrature.
    pub fn h_complex(&self, x: f64, t: f64) -> C64 {
        let mut v = self.discrete(x, t);
        if let Some(r) = &self.real {
            v += r.eval(x, t);
        }
        if let Some(c) = &self.rays {
            v += c.eval(x, t);
        }
        v
    }

    /// H(x, t) for x ≥ 0, t ≥ 0.
    pub fn h(&self, x: f64, t: f64) -> f64 {
        self.h_complex(x, t).re
    }

    /// Real-axis part only (diagnostics and tests).
    pub fn h_real_axis(&self, x: f64, t: f64) -> C64 {
        self.real.as_ref().map_or(ZERO, |r| r.eval(x, t))
    }

    /// ∂Ω₂ part only (diagnostics and tests).
    pub fn h_rays(&self, x: f64, t: f64) -> C64 {
        self.rays.as_ref().map_or(ZERO, |c| c.eval(x, t))
    }

    /// H₀(x) = Σ m¹e^{ik_jx} + (1/2π)∫ r e^{ikx} dk, complex before the cast.
    pub fn h0_complex(&self, x: f64) -> C64 {
        let mut v: C64 = self.poles0.iter().map(|(k, m)| m * (I * k * x).exp()).sum();
        if let Some(r) = &self.real {
            v += r.eval(x, 0.0);
        }
        v
    }

    pub fn h0(&self, x: f64) -> f64 {
        self.h0_complex(x).re
    }

    /// Slowest exponential decay rate in x among the discrete terms.
    pub fn min_decay_rate(&self) -> Option<f64> {
        self.poles.iter().map(|(k, _)| k.im).reduce(f64::min)
    }

    /// Tabulate H(·, t) on s = 0, ds, 2ds, …, ≥ s_end: the real-axis body
    /// by FFT, everything else by exponential sums over fixed nodes.
    pub fn table(&self, t: f64, s_end: f64, ds: f64) -> Result<KernelTable> {
        let n = (s_end / ds).ceil() as usize + 1;
        let s_end = (n - 1) as f64 * ds;
        let mut vals: Vec<C64> = (0..n).map(|i| self.discrete(i as f64 * ds, t)).collect();
        let mut terms: Vec<(C64, C64)> = Vec::new();
        if let Some(r) = &self.real {
            let (body, lp) = real_axis_fft(r, t, n, ds);
            for (v, b) in vals.iter_mut().zip(&body) {
                *v += b;
            }
            if t > 0.0 {
                terms.extend(r.tail_terms(lp, t, 0.0, s_end));
            } else {
                for (i, v) in vals.iter_mut().enumerate() {
                    *v += r.tails(lp, i as f64 * ds, 0.0) / (2.0 * PI);
                }
            }
        }
        if let Some(c) = &self.rays {
            terms.extend(c.body_terms(0.0, t));
            if t > 0.0 {
                terms.extend(c.tail_terms(t, 0.0, s_end));
            } else {
                for (i, v) in vals.iter_mut().enumerate() {
                    *v += c.tails(i as f64 * ds, 0.0) / (2.0 * PI);
                }
            }
        }
        if !terms.is_empty() {
            for (v, e) in vals.iter_mut().zip(exp_sum_table(&mut terms, n, ds)) {
                *v += e / (2.0 * PI);
            }
        }
        let max_imag = vals.iter().map(|v| v.im.abs()).fold(0.0, f64::max);
        Ok(KernelTable {
            t,
            ds,
            values: vals.iter().map(|v| v.re).collect(),
            max_imag,
        })
    }
}

/// (1/2π)∫_{−L'}^{L'} r(k)e^{iks+8ik³t} dk at s = 0, ds, …, (n−1)ds by a
/// zero-padded FFT of the trapezoidal rule with an Euler–Maclaurin end
/// correction; L' ≤ k_max is the largest multiple of the FFT step.
/// Returns the values and L'.
fn real_axis_fft(r: &RealAxisPart, t: f64, n: usize, ds: f64) -> (Vec<C64>, f64) {
    let l = r.l;
    let s_end = (n - 1) as f64 * ds;
    // Phase change per k-step at most π/2 over the whole s range.
    let dk_max = 0.5 * PI / (s_end + 24.0 * l * l * t + 1.0);
    let n_fft = ((2.0 * PI / (dk_max * ds)).ceil() as usize).next_power_of_two();
    let dk = 2.0 * PI / (n_fft as f64 * ds);
    let half = (l / dk).floor() as usize;
    let lp = half as f64 * dk;
    let m = 2 * half;
    let g = |k: f64| r.spline.eval(k) * phase(C64::from(k), 0.0, t);
    let dg = |k: f64| (r.spline.deriv(k) + 24.0 * I * k * k * t * r.spline.eval(k)) * phase(C64::from(k), 0.0, t);
    let mut buf: Vec<C64> = vec![ZERO; n_fft];
    for (j, b) in buf.iter_mut().enumerate().take(m + 1) {
        *b = g(-lp + j as f64 * dk);
    }
    let (g_a, g_b) = (buf[0], buf[m]);
    let mut planner = FftPlanner::<f64>::new();
    planner.plan_fft_inverse(n_fft).process(&mut buf);
    let (dg_a, dg_b) = (dg(-lp), dg(lp));
    let out = (0..n)
        .map(|i| {
            let s = i as f64 * ds;
            let ea = (-I * lp * s).exp();
            let eb = (I * lp * s).exp();
            let trap = dk * (ea * buf[i] - 0.5 * (g_a * ea + g_b * eb));
            // Euler–Maclaurin: −dk²/12 [F'(b) − F'(a)], F = g·e^{iks}
            let fb = (dg_b + I * s * g_b) * eb;
            let fa = (dg_a + I * s * g_a) * ea;
            let em = -dk * dk / 12.0 * (fb - fa);
            (trap + em) / (2.0 * PI)
        })
        .collect();
    (out, lp)
}

/// H(·, t) tabulated on a uniform grid, interpolated by 8-point Lagrange.
#[derive(Clone, Debug)]
pub struct KernelTable {
    pub t: f64,
    pub ds: f64,
    pub values: Vec<f64>,
    /// Largest |Im H| seen before the real cast.
    pub max_imag: f64,
}

impl KernelTable {
    /// Table of a kernel known only through a closure (oracles, tests).
    pub fn from_fn(f: impl Fn(f64) -> f64, t: f64, s_end: f64, ds: f64) -> Self {
        let n = (s_end / ds).ceil() as usize + 1;
        KernelTable {
            t,
            ds,
            values: (0..n).map(|i| f(i as f64 * ds)).collect(),
            max_imag: 0.0,
        }
    }

    pub fn s_end(&self) -> f64 {
        (self.values.len() - 1) as f64 * self.ds
    }

    /// 8-point Lagrange interpolation in barycentric form (one-sided near
    /// the ends); zero beyond the tabulated range.
    pub fn eval(&self, s: f64) -> f64 {
        const P: usize = 8;
        // (−1)^j C(7, j)
        const W: [f64; P] = [1.0, -7.0, 21.0, -35.0, 35.0, -21.0, 7.0, -1.0];
        let n = self.values.len();
        let u = s / self.ds;
        if u > (n - 1) as f64 {
            return 0.0;
        }
        let i = u.floor() as isize;
        let start = (i - (P as isize / 2 - 1)).clamp(0, n as isize - P as isize) as usize;
        let mut num = 0.0;
        let mut den = 0.0;
        for j in 0..P {
            let d = u - (start + j) as f64;
            if d == 0.0 {
                return self.values[start + j];
            }
            let c = W[j] / d;
            num += c * self.values[start + j];
            den += c;
        }
        num / den
    }
}

/// Gauss–Legendre nodes on [−1, 1] re-exported for oracles.
pub fn gl(n: usize) -> (Vec<f64>, Vec<f64>) {
    gauss_legendre(n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Horizon;
    use crate::quadrature::adaptive_gauss_kronrod;
    use crate::scattering::{real_k_grid, RaySamples};
    use crate::types::c;

    fn gaussian_r_data(beta: f64) -> ScatteringData {
        let mut d = ScatteringData::empty(Lambda::Defocusing, Horizon::Infinite);
        d.r_samples = real_k_grid(12.0, 0.01)
            .into_iter()
            .map(|k| (k, I * beta * k * (-k * k).exp()))
            .collect();
        d
    }

    #[test]
    fn empty_kernel_is_zero() {
        let d = ScatteringData::empty(Lambda::Focusing, Horizon::Infinite);
        let h = KernelField::new(&d).unwrap();
        assert!(h.is_zero());
        assert_eq!(h.h(0.3, 0.2), 0.0);
        assert_eq!(h.h0(1.0), 0.0);
        let tab = h.table(0.5, 10.0, 0.05).unwrap();
        assert!(tab.values.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn single_pole_h0() {
        let h = KernelField::from_poles(Lambda::Focusing, vec![(c(0.0, 0.7), c(1.3, 0.0))]);
        for &x in &[0.0, 0.5, 3.0] {
            assert!((h.h0(x) - 1.3 * (-0.7 * x).exp()).abs() < 1e-15);
            let t = 0.4;
            let want = 1.3 * (-0.7 * x + 8.0 * 0.343 * t).exp();
            assert!((h.h(x, t) - want).abs() < 1e-12 * want);
        }
    }

    #[test]
    fn gaussian_r_matches_adaptive_oracle() {
        // r(k) = iβk e^{−k²}: (1/2π)∫ r e^{ikx} dk = −β x e^{−x²/4}/(4√π)
        let beta = 0.1;
        let d = gaussian_r_data(beta);
        let h = KernelField::new(&d).unwrap();
        for &x in &[0.0, 0.3, 1.0, 2.5, 6.0] {
            let f = |k: f64| I * beta * k * (-k * k).exp() * (I * k * x).exp();
            let oracle = adaptive_gauss_kronrod(&f, -12.0, 12.0, 1e-14).unwrap().re / (2.0 * PI);
            let exact = -beta * x * (-x * x / 4.0).exp() / (4.0 * PI.sqrt());
            assert!((oracle - exact).abs() < 1e-12);
            assert!((h.h(x, 0.0) - exact).abs() < 1e-9, "x={x}");
            assert!(h.h_complex(x, 0.0).im.abs() < 1e-12);
        }
        // t > 0 against adaptive quadrature of the cubic phase
        for &(x, t) in &[(0.5, 0.1), (2.0, 0.5)] {
            let f = |k: f64| I * beta * k * (-k * k).exp() * phase(C64::from(k), x, t);
            let oracle = adaptive_gauss_kronrod(&f, -12.0, 12.0, 1e-14).unwrap().re / (2.0 * PI);
            assert!((h.h(x, t) - oracle).abs() < 1e-9, "x={x} t={t}");
        }
    }

    #[test]
    fn one_over_k_tail_closed_forms() {
        // r(k) = 2ik/(1+k²)·0.05 ~ 0.1i/k: (1/2π)∫ r e^{ikx} dk = −0.05 e^{−x} for x > 0.
        let mut d = ScatteringData::empty(Lambda::Defocusing, Horizon::Infinite);
        d.r_samples = real_k_grid(12.0, 0.01)
            .into_iter()
            .map(|k| (k, C64::new(0.0, 0.1 * k / (1.0 + k * k))))
            .collect();
        let h = KernelField::new(&d).unwrap();
        for &x in &[1e-9f64, 0.05, 0.5, 2.0] {
            let want = -0.05 * (-x).exp();
            assert!((h.h(x, 0.0) - want).abs() < 1e-8, "x={x} {} {want}", h.h(x, 0.0));
        }
        // x = 0 is the one-sided limit x → 0⁺
        assert!((h.h(0.0, 0.0) + 0.05).abs() < 1e-8);
        // t > 0 against the table and transport structure
        let tab = h.table(0.3, 20.0, 0.02).unwrap();
        for &x in &[0.0, 0.7, 3.1] {
            assert!((tab.eval(x) - h.h(x, 0.3)).abs() < 1e-8, "x={x}");
        }
    }

    #[test]
    fn ray_part_t0_residue_collapse() {
        // c(k) = a/(k − z) on ∂Ω₂ with z ∈ Ω₂: (1/2π)∮ c e^{ikx} = i·a·e^{izx}.
        let z = c(0.1, 0.8);
        let a = c(0.02, -0.03);
        let cf = |k: C64| a / (k - z) + (a / (-k.conj() - z)).conj();
        let s: Vec<f64> = (0..151).map(|i| 6.0 * i as f64 / 150.0).collect();
        let right = s.iter().map(|s| cf(omega_r() * *s)).collect();
        let left = s.iter().map(|s| cf(omega_l() * *s)).collect();
        let mut d = ScatteringData::empty(Lambda::Focusing, Horizon::Infinite);
        d.c_rays = RaySamples { s, right, left };
        let h = KernelField::new(&d).unwrap();
        // The mirrored pole −z̄ carries residue −ā.
        let z2 = -z.conj();
        let a2 = -a.conj();
        for &x in &[0.0, 0.2, 1.0, 4.0] {
            let want = I * a * (I * z * x).exp() + I * a2 * (I * z2 * x).exp();
            let got = h.h_rays(x, 0.0);
            // x = 0 carries the truncation error of the n = 1 tail coefficient.
            let tol = if x == 0.0 { 1e-6 } else { 1e-8 };
            assert!((got - want).norm() < tol, "x={x} {got} {want}");
        }
    }

    #[test]
    fn table_matches_direct() {
        let d = gaussian_r_data(0.2);
        let h = KernelField::new(&d).unwrap();
        for &t in &[0.0, 0.2, 1.0] {
            let tab = h.table(t, 30.0, 0.015).unwrap();
            for &x in &[0.0, 0.0123, 0.5, 3.3, 11.0] {
                assert!((tab.eval(x) - h.h(x, t)).abs() < 1e-10, "t={t} x={x}");
            }
        }
    }

    #[test]
    fn series_fit_recovers_coefficients() {
        let coeffs = [c(0.0, 0.3), c(-0.1, 0.0), c(0.0, 0.05)];
        let ks: Vec<C64> = (0..50).map(|i| C64::from(6.0 + 0.12 * i as f64)).collect();
        let vals: Vec<C64> = ks.iter().map(|k| series(&coeffs, *k)).collect();
        let (fit, misfit) = fit_tail_series(&ks, &vals, 6);
        assert!(misfit < 1e-12);
        for (a, b) in fit.iter().zip(&coeffs) {
            assert!((a - b).norm() < 1e-6);
        }
    }

    #[test]
    fn lagrange_table_interpolation() {
        let tab = KernelTable::from_fn(|s| (-(s - 2.0) * (s - 2.0)).exp(), 0.0, 10.0, 0.02);
        for &s in &[0.0, 0.013, 1.777, 9.99] {
            assert!((tab.eval(s) - (-(s - 2.0) * (s - 2.0)).exp()).abs() < 1e-12);
        }
        assert_eq!(tab.eval(11.0), 0.0);
    }
}

//! Zeros of analytic functions by the argument principle, with Newton
//! refinement and Cauchy-integral differentiation.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::types::{C64, ZERO};

/// An analytic sampler that may fail (e.g. an ODE step failure).
pub type Sampler<'a> = dyn Fn(C64) -> Result<C64> + Sync + 'a;

/// A closed search region, parametrised by (u, v) ∈ [0, 1]².
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SearchRegion {
    /// [x0, x1] × [y0, y1]
    Rect { x0: f64, x1: f64, y0: f64, y1: f64 },
    /// {r0 ≤ |k| ≤ r1, a0 ≤ arg k ≤ a1}
    Polar { r0: f64, r1: f64, a0: f64, a1: f64 },
}

impl SearchRegion {
    fn point(&self, u: f64, v: f64) -> C64 {
        match *self {
            SearchRegion::Rect { x0, x1, y0, y1 } => C64::new(x0 + (x1 - x0) * u, y0 + (y1 - y0) * v),
            SearchRegion::Polar { r0, r1, a0, a1 } => {
                C64::from_polar(r0 + (r1 - r0) * u, a0 + (a1 - a0) * v)
            }
        }
    }

    fn split(&self) -> [SearchRegion; 4] {
        match *self {
            SearchRegion::Rect { x0, x1, y0, y1 } => {
                let xm = 0.5 * (x0 + x1);
                let ym = 0.5 * (y0 + y1);
                [
                    SearchRegion::Rect { x0, x1: xm, y0, y1: ym },
                    SearchRegion::Rect { x0: xm, x1, y0, y1: ym },
                    SearchRegion::Rect { x0, x1: xm, y0: ym, y1 },
                    SearchRegion::Rect { x0: xm, x1, y0: ym, y1 },
                ]
            }
            SearchRegion::Polar { r0, r1, a0, a1 } => {
                let rm = 0.5 * (r0 + r1);
                let am = 0.5 * (a0 + a1);
                [
                    SearchRegion::Polar { r0, r1: rm, a0, a1: am },
                    SearchRegion::Polar { r0: rm, r1, a0, a1: am },
                    SearchRegion::Polar { r0, r1: rm, a0: am, a1 },
                    SearchRegion::Polar { r0: rm, r1, a0: am, a1 },
                ]
            }
        }
    }

    pub fn contains(&self, z: C64) -> bool {
        match *self {
            SearchRegion::Rect { x0, x1, y0, y1 } => z.re >= x0 && z.re <= x1 && z.im >= y0 && z.im <= y1,
            SearchRegion::Polar { r0, r1, a0, a1 } => {
                let (r, a) = (z.norm(), z.arg());
                r >= r0 && r <= r1 && a >= a0 && a <= a1
            }
        }
    }

    pub fn diameter(&self) -> f64 {
        (self.point(0.0, 0.0) - self.point(1.0, 1.0))
            .norm()
            .max((self.point(1.0, 0.0) - self.point(0.0, 1.0)).norm())
    }
}

/// Derivative f'(z) ≈ (1/nρ) Σ f(z + ρωⱼ) ωⱼ⁻¹ with ωⱼ = e^{2πij/n}.
pub fn cauchy_derivative(f: &Sampler, z: C64, rho: f64, n: usize) -> Result<C64> {
    let vals: Vec<C64> = (0..n)
        .into_par_iter()
        .map(|j| {
            let w = C64::from_polar(1.0, 2.0 * PI * j as f64 / n as f64);
            f(z + w * rho).map(|v| v / w)
        })
        .collect::<Result<_>>()?;
    Ok(vals.iter().sum::<C64>() / (n as f64 * rho))
}

struct Contour {
    /// Total change of arg f, divided by 2π.
    winding: f64,
    /// (1/2πi) ∮ z d log f
    first_moment: C64,
}

const EDGE_SAMPLES: usize = 24;
const MAX_ARG_STEP: f64 = 0.4;
const MAX_BISECT: usize = 24;

fn trace_contour(f: &Sampler, region: &SearchRegion, tol: f64) -> Result<Contour> {
    // CCW in parameter space: (0,0) → (1,0) → (1,1) → (0,1) → (0,0).
    let corners = [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0), (0.0, 0.0)];
    let mut params = Vec::with_capacity(4 * EDGE_SAMPLES);
    for e in 0..4 {
        let (a, b) = (corners[e], corners[e + 1]);
        for i in 0..EDGE_SAMPLES {
            let s = i as f64 / EDGE_SAMPLES as f64;
            params.push((a.0 + (b.0 - a.0) * s, a.1 + (b.1 - a.1) * s));
        }
    }
    let vals: Vec<C64> = params
        .par_iter()
        .map(|&(u, v)| f(region.point(u, v)))
        .collect::<Result<_>>()?;
    let n = params.len();
    let mut total_arg = 0.0;
    let mut moment = ZERO;
    for i in 0..n {
        let j = (i + 1) % n;
        let (d_arg, m) = refine_segment(f, region, params[i], vals[i], params[j], vals[j], tol, 0)?;
        total_arg += d_arg;
        moment += m;
    }
    Ok(Contour {
        winding: total_arg / (2.0 * PI),
        first_moment: moment / (2.0 * PI * crate::types::I),
    })
}

#[allow(clippy::too_many_arguments)]
fn refine_segment(
    f: &Sampler,
    region: &SearchRegion,
    pa: (f64, f64),
    fa: C64,
    pb: (f64, f64),
    fb: C64,
    tol: f64,
    depth: usize,
) -> Result<(f64, C64)> {
    let za = region.point(pa.0, pa.1);
    let zb = region.point(pb.0, pb.1);
    if fa.norm() <= tol {
        return Err(Error::BoundaryZero { at: za });
    }
    let ratio = fb / fa;
    let d_arg = ratio.arg();
    let d_log = C64::new(ratio.norm().ln(), d_arg);
    if (d_arg.abs() > MAX_ARG_STEP || d_log.re.abs() > 1.0) && depth < MAX_BISECT {
        let pm = (0.5 * (pa.0 + pb.0), 0.5 * (pa.1 + pb.1));
        let fm = f(region.point(pm.0, pm.1))?;
        let (a1, m1) = refine_segment(f, region, pa, fa, pm, fm, tol, depth + 1)?;
        let (a2, m2) = refine_segment(f, region, pm, fm, pb, fb, tol, depth + 1)?;
        return Ok((a1 + a2, m1 + m2));
    }
    Ok((d_arg, 0.5 * (za + zb) * d_log))
}

fn newton(f: &Sampler, mut z: C64, tol: f64, scale: f64) -> Result<Option<C64>> {
    let rho = (1e-3 * scale).max(1e-6);
    let mut last_step = f64::INFINITY;
    for _ in 0..40 {
        let fz = f(z)?;
        let d = cauchy_derivative(f, z, rho, 8)?;
        if d.norm() == 0.0 || !d.norm().is_finite() {
            return Ok(None);
        }
        let step = fz / d;
        z -= step;
        let s = step.norm();
        if s <= tol * z.norm().max(1.0) {
            return Ok(Some(z));
        }
        // Stagnation at the noise floor of the sampler.
        if s < 1e-8 * z.norm().max(1.0) && s >= 0.5 * last_step {
            return Ok(Some(z));
        }
        last_step = s;
    }
    Ok(None)
}

/// All zeros of `f` inside `region`, each refined to `tol`; the list is
/// sorted by (Re, Im).  Errors on zeros on the boundary and on suspected
/// multiple zeros.
pub fn find_zeros(f: &Sampler, region: SearchRegion, tol: f64) -> Result<Vec<C64>> {
    let min_diam = 1e-5 * region.diameter();
    let mut out = Vec::new();
    search(f, region, tol, min_diam, &mut out)?;
    out.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    // Merge duplicates found from neighbouring subregions.
    let mut merged: Vec<C64> = Vec::new();
    for z in out {
        if merged.last().is_none_or(|m| (*m - z).norm() > 1e3 * tol.max(1e-12)) {
            merged.push(z);
        }
    }
    Ok(merged)
}

fn search(f: &Sampler, region: SearchRegion, tol: f64, min_diam: f64, out: &mut Vec<C64>) -> Result<()> {
    let contour = trace_contour(f, &region, tol)?;
    let count = contour.winding.round() as i64;
    if count <= 0 {
        return Ok(());
    }
    if count == 1 {
        let guess = contour.first_moment;
        if let Some(z) = newton(f, guess, tol, region.diameter().min(1.0))? {
            if region.contains(z) {
                out.push(z);
                return Ok(());
            }
        }
    }
    if region.diameter() < min_diam {
        let at = region.point(0.5, 0.5);
        return Err(Error::MultipleZeroSuspected { at });
    }
    for sub in region.split() {
        search(f, sub, tol, min_diam, out)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::c;

    #[test]
    fn polynomial_zeros_in_rect() {
        let roots = [c(0.3, 0.5), c(-1.0, 1.2), c(2.0, -1.0)];
        let f = move |z: C64| Ok(roots.iter().map(|r| z - r).product::<C64>());
        let region = SearchRegion::Rect { x0: -2.0, x1: 2.0, y0: 0.1, y1: 2.0 };
        let zs = find_zeros(&f, region, 1e-12).unwrap();
        assert_eq!(zs.len(), 2);
        assert!((zs[0] - roots[1]).norm() < 1e-10);
        assert!((zs[1] - roots[0]).norm() < 1e-10);
    }

    #[test]
    fn zeros_in_sector() {
        let f = |z: C64| Ok((z - c(0.0, 0.5)) * (z - c(0.1, 1.5)) * (z - c(1.0, 0.1)));
        let region = SearchRegion::Polar { r0: 1e-3, r1: 4.0, a0: PI / 3.0, a1: 2.0 * PI / 3.0 };
        let zs = find_zeros(&f, region, 1e-12).unwrap();
        assert_eq!(zs.len(), 2);
        assert!((zs[0] - c(0.0, 0.5)).norm() < 1e-10);
        assert!((zs[1] - c(0.1, 1.5)).norm() < 1e-10);
    }

    #[test]
    fn no_zeros_and_entire_functions() {
        let f = |z: C64| Ok(z.exp());
        let region = SearchRegion::Rect { x0: -4.0, x1: 4.0, y0: 1e-3, y1: 4.0 };
        assert!(find_zeros(&f, region, 1e-10).unwrap().is_empty());
    }

    #[test]
    fn double_zero_detected() {
        let f = |z: C64| Ok((z - c(0.2, 0.7)) * (z - c(0.2, 0.7)));
        let region = SearchRegion::Rect { x0: -1.0, x1: 1.0, y0: 0.1, y1: 1.0 };
        assert!(matches!(
            find_zeros(&f, region, 1e-12),
            Err(Error::MultipleZeroSuspected { .. })
        ));
    }

    #[test]
    fn boundary_zero_detected() {
        let f = |z: C64| Ok(z - c(0.0, 1.0));
        let region = SearchRegion::Rect { x0: -1.0, x1: 1.0, y0: 0.0, y1: 1.0 };
        assert!(matches!(find_zeros(&f, region, 1e-10), Err(Error::BoundaryZero { .. })));
    }

    #[test]
    fn cauchy_derivative_accuracy() {
        let f = |z: C64| Ok(z.sin() * z);
        let z = c(0.4, 0.3);
        let d = cauchy_derivative(&f, z, 0.05, 64).unwrap();
        let exact = z.cos() * z + z.sin();
        assert!((d - exact).norm() < 1e-12);
    }
}

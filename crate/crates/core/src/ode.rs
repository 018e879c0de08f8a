//! Adaptive Dormand–Prince 5(4) integration of complex linear systems.

use crate::error::{Error, Result};
use crate::types::{C64, ZERO};

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

/// Statistics of one integration.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct OdeStats {
    pub accepted: usize,
    pub rejected: usize,
}

/// Hard cap on the number of attempted steps per integration.
pub const MAX_STEPS: usize = 20_000_000;

#[inline(always)]
fn axpy<const N: usize>(y: &[C64; N], h: f64, terms: &[(f64, &[C64; N])]) -> [C64; N] {
    let mut out = *y;
    for (c, k) in terms {
        let s = h * c;
        for i in 0..N {
            out[i] += k[i] * s;
        }
    }
    out
}

/// Integrate y' = f(t, y) from `t0` to `t1` (either direction) with local
/// error per component bounded by `tol·(1 + |yᵢ|)` in the RMS sense.
pub fn dopri5<const N: usize, F>(
    mut f: F,
    t0: f64,
    t1: f64,
    y0: [C64; N],
    tol: f64,
    h_init: f64,
) -> Result<([C64; N], OdeStats)>
where
    F: FnMut(f64, &[C64; N]) -> [C64; N],
{
    let mut stats = OdeStats::default();
    let span = t1 - t0;
    if span == 0.0 {
        return Ok((y0, stats));
    }
    let dir = span.signum();
    let mut h = h_init.abs().min(span.abs()).max(1e-12 * span.abs()) * dir;
    let mut t = t0;
    let mut y = y0;
    let mut k1 = f(t, &y);
    let h_min = 1e-13 * (t0.abs().max(t1.abs()).max(1.0));
    while (t1 - t) * dir > 0.0 {
        if stats.accepted + stats.rejected > MAX_STEPS {
            return Err(Error::StepFailure { at: t, step: h });
        }
        let last = (t + h - t1) * dir >= 0.0;
        if last {
            h = t1 - t;
        }
        let k2 = f(t + C2 * h, &axpy(&y, h, &[(A21, &k1)]));
        let k3 = f(t + C3 * h, &axpy(&y, h, &[(A31, &k1), (A32, &k2)]));
        let k4 = f(t + C4 * h, &axpy(&y, h, &[(A41, &k1), (A42, &k2), (A43, &k3)]));
        let k5 = f(
            t + C5 * h,
            &axpy(&y, h, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
        );
        let k6 = f(
            t + h,
            &axpy(&y, h, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]),
        );
        let y_new = axpy(&y, h, &[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)]);
        let k7 = f(t + h, &y_new);
        let mut err2 = 0.0;
        for i in 0..N {
            let e = (k1[i] * E1 + k3[i] * E3 + k4[i] * E4 + k5[i] * E5 + k6[i] * E6 + k7[i] * E7) * h;
            let sc = tol * (1.0 + y[i].norm().max(y_new[i].norm()));
            err2 += e.norm_sqr() / (sc * sc);
        }
        let err = (err2 / N as f64).sqrt();
        if !err.is_finite() {
            h *= 0.2;
            stats.rejected += 1;
            if h.abs() < h_min {
                return Err(Error::StepFailure { at: t, step: h });
            }
            continue;
        }
        if err <= 1.0 {
            t = if last { t1 } else { t + h };
            y = y_new;
            k1 = k7;
            stats.accepted += 1;
            let fac = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            h *= fac;
        } else {
            stats.rejected += 1;
            h *= (0.9 * err.powf(-0.2)).clamp(0.1, 0.9);
            if h.abs() < h_min {
                return Err(Error::StepFailure { at: t, step: h });
            }
        }
    }
    Ok((y, stats))
}

/// Zero vector helper.
pub fn zeros<const N: usize>() -> [C64; N] {
    [ZERO; N]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::c;

    #[test]
    fn exponential_growth_and_decay() {
        let lam = c(-0.5, 3.0);
        let (y, _) = dopri5(|_, y: &[C64; 1]| [lam * y[0]], 0.0, 2.0, [c(1.0, 0.0)], 1e-12, 0.1).unwrap();
        assert!((y[0] - (lam * 2.0).exp()).norm() < 1e-10);
        // backward direction
        let (y, _) = dopri5(|_, y: &[C64; 1]| [lam * y[0]], 2.0, 0.0, [c(1.0, 0.0)], 1e-12, 0.1).unwrap();
        assert!((y[0] - (-lam * 2.0).exp()).norm() < 1e-9);
    }

    #[test]
    fn harmonic_oscillator() {
        let f = |_t: f64, y: &[C64; 2]| [y[1], -y[0]];
        let (y, stats) = dopri5(f, 0.0, 10.0, [c(1.0, 0.0), c(0.0, 0.0)], 1e-11, 0.01).unwrap();
        assert!((y[0].re - 10f64.cos()).abs() < 1e-8);
        assert!(stats.accepted > 10);
    }

    #[test]
    fn zero_span() {
        let (y, s) = dopri5(|_, y: &[C64; 1]| [y[0]], 1.0, 1.0, [c(2.0, 0.0)], 1e-10, 0.1).unwrap();
        assert_eq!(y[0], c(2.0, 0.0));
        assert_eq!(s.accepted, 0);
    }
}

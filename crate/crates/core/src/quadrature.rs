//! Quadrature rules, interpolating splines and the exponential integral.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::types::{C64, ONE, ZERO};

/// Gauss–Legendre nodes and weights on [−1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    if n == 1 {
        return (vec![0.0], vec![2.0]);
    }
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for j in 2..=n {
                let p2 = ((2 * j - 1) as f64 * z * p1 - (j - 1) as f64 * p0) / j as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

/// Gauss–Legendre rule mapped onto [a, b].
pub fn gauss_legendre_on(n: usize, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = gauss_legendre(n);
    let h = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    (
        x.iter().map(|t| mid + h * t).collect(),
        w.iter().map(|v| v * h).collect(),
    )
}

/// Composite Gauss–Legendre rule over consecutive panel breakpoints.
pub fn composite_gauss_legendre(breaks: &[f64], n_per_panel: usize) -> (Vec<f64>, Vec<f64>) {
    let (x0, w0) = gauss_legendre(n_per_panel);
    let mut xs = Vec::with_capacity(n_per_panel * breaks.len());
    let mut ws = Vec::with_capacity(n_per_panel * breaks.len());
    for pair in breaks.windows(2) {
        let h = 0.5 * (pair[1] - pair[0]);
        let mid = 0.5 * (pair[1] + pair[0]);
        for (t, w) in x0.iter().zip(&w0) {
            xs.push(mid + h * t);
            ws.push(w * h);
        }
    }
    (xs, ws)
}

/// Quadrature for ∫_{∂Ω₂} f(k) dk, oriented counterclockwise around Ω₂:
/// outward from 0 along arg k = π/3, back toward 0 along arg k = 2π/3.
/// Returns `n/2` Gauss–Legendre nodes on each ray over [0, s_max]; weights
/// carry the ray direction and orientation sign.
pub fn omega2_boundary_quadrature(s_max: f64, n: usize) -> Result<Vec<(C64, C64)>> {
    if n < 4 || n % 2 != 0 {
        return Err(Error::InvalidConfig(format!(
            "boundary quadrature needs an even node count ≥ 4, got {n}"
        )));
    }
    if !(s_max > 0.0) {
        return Err(Error::InvalidConfig("s_max must be positive".into()));
    }
    let (s, w) = gauss_legendre_on(n / 2, 0.0, s_max);
    let out_dir = C64::from_polar(1.0, PI / 3.0);
    let in_dir = C64::from_polar(1.0, 2.0 * PI / 3.0);
    let mut rule = Vec::with_capacity(n);
    for (si, wi) in s.iter().zip(&w) {
        rule.push((out_dir * si, out_dir * wi));
    }
    for (si, wi) in s.iter().zip(&w).rev() {
        rule.push((in_dir * si, -in_dir * wi));
    }
    Ok(rule)
}

const GK15_X: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const GK15_WK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const GK15_WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15(f: &dyn Fn(f64) -> C64, a: f64, b: f64) -> (C64, f64) {
    let h = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let fc = f(mid);
    let mut k = fc * GK15_WK[7];
    let mut g = fc * GK15_WG[3];
    for j in 0..7 {
        let f1 = f(mid - h * GK15_X[j]);
        let f2 = f(mid + h * GK15_X[j]);
        k += (f1 + f2) * GK15_WK[j];
        if j % 2 == 1 {
            g += (f1 + f2) * GK15_WG[j / 2];
        }
    }
    (k * h, ((k - g) * h).norm())
}

/// Adaptive Gauss–Kronrod (7/15) quadrature of a complex integrand.
pub fn adaptive_gauss_kronrod(
    f: &dyn Fn(f64) -> C64,
    a: f64,
    b: f64,
    tol: f64,
) -> Result<C64> {
    fn rec(
        f: &dyn Fn(f64) -> C64,
        a: f64,
        b: f64,
        tol: f64,
        whole: (C64, f64),
        depth: usize,
    ) -> Result<C64> {
        let (val, err) = whole;
        if err <= tol.max(1e-15 * val.norm()) {
            return Ok(val);
        }
        if depth > 60 {
            return Err(Error::QuadratureNotConverged(format!(
                "adaptive rule stalled on [{a}, {b}] with error {err:e}"
            )));
        }
        let m = 0.5 * (a + b);
        let left = gk15(f, a, m);
        let right = gk15(f, m, b);
        Ok(rec(f, a, m, 0.5 * tol, left, depth + 1)? + rec(f, m, b, 0.5 * tol, right, depth + 1)?)
    }
    let whole = gk15(f, a, b);
    rec(f, a, b, tol, whole, 0)
}

/// Not-a-knot cubic spline through real samples at strictly increasing
/// abscissae; evaluation outside the sample range returns `outside`.
#[derive(Clone, Debug)]
pub struct CubicSpline {
    x: Vec<f64>,
    y: Vec<f64>,
    /// Second derivatives at the knots.
    m: Vec<f64>,
    uniform: Option<(f64, f64)>,
    outside: Option<f64>,
}

impl CubicSpline {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        let n = x.len();
        if n != y.len() || n < 2 {
            return Err(Error::InvalidConfig("spline needs ≥ 2 matching samples".into()));
        }
        if x.windows(2).any(|p| !(p[1] > p[0])) {
            return Err(Error::InvalidConfig(
                "spline abscissae must be strictly increasing".into(),
            ));
        }
        let m = if n < 4 {
            // Too few points for not-a-knot; use the natural spline.
            natural_second_derivatives(&x, &y)
        } else {
            not_a_knot_second_derivatives(&x, &y)
        };
        let h0 = x[1] - x[0];
        let span = x[n - 1] - x[0];
        let uniform = x
            .windows(2)
            .all(|p| ((p[1] - p[0]) - h0).abs() <= 1e-9 * span.abs().max(1.0))
            .then_some((x[0], h0));
        Ok(CubicSpline {
            x,
            y,
            m,
            uniform,
            outside: None,
        })
    }

    /// Return `value` outside [x₀, x_last] instead of extrapolating.
    pub fn with_outside(mut self, value: f64) -> Self {
        self.outside = Some(value);
        self
    }

    pub fn knots(&self) -> &[f64] {
        &self.x
    }

    fn interval(&self, t: f64) -> usize {
        let n = self.x.len();
        let i = match self.uniform {
            Some((x0, h)) => ((t - x0) / h).floor().max(0.0) as usize,
            None => self.x.partition_point(|&v| v <= t).saturating_sub(1),
        };
        i.min(n - 2)
    }

    pub fn eval(&self, t: f64) -> f64 {
        let n = self.x.len();
        if let Some(v) = self.outside {
            if t < self.x[0] || t > self.x[n - 1] {
                return v;
            }
        }
        let i = self.interval(t);
        let h = self.x[i + 1] - self.x[i];
        let a = (self.x[i + 1] - t) / h;
        let b = (t - self.x[i]) / h;
        a * self.y[i]
            + b * self.y[i + 1]
            + ((a * a * a - a) * self.m[i] + (b * b * b - b) * self.m[i + 1]) * h * h / 6.0
    }

    /// First derivative of the spline.
    pub fn deriv(&self, t: f64) -> f64 {
        let i = self.interval(t);
        let h = self.x[i + 1] - self.x[i];
        let a = (self.x[i + 1] - t) / h;
        let b = (t - self.x[i]) / h;
        (self.y[i + 1] - self.y[i]) / h
            + ((1.0 - 3.0 * a * a) * self.m[i] + (3.0 * b * b - 1.0) * self.m[i + 1]) * h / 6.0
    }
}

fn natural_second_derivatives(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    let mut m = vec![0.0; n];
    if n < 3 {
        return m;
    }
    let mut sub = vec![0.0; n];
    let mut diag = vec![1.0; n];
    let mut sup = vec![0.0; n];
    let mut rhs = vec![0.0; n];
    for i in 1..n - 1 {
        let h0 = x[i] - x[i - 1];
        let h1 = x[i + 1] - x[i];
        sub[i] = h0 / 6.0;
        diag[i] = (h0 + h1) / 3.0;
        sup[i] = h1 / 6.0;
        rhs[i] = (y[i + 1] - y[i]) / h1 - (y[i] - y[i - 1]) / h0;
    }
    solve_tridiagonal(&sub, &diag, &sup, &mut rhs);
    m.copy_from_slice(&rhs);
    m
}

fn not_a_knot_second_derivatives(x: &[f64], y: &[f64]) -> Vec<f64> {
    // Unknowns m_0..m_{n-1}. Interior rows are the usual continuity
    // conditions; the end rows enforce continuity of the third derivative
    // at x_1 and x_{n-2}, eliminated so the system stays tridiagonal.
    let n = x.len();
    let h: Vec<f64> = x.windows(2).map(|p| p[1] - p[0]).collect();
    let d: Vec<f64> = (0..n - 1).map(|i| (y[i + 1] - y[i]) / h[i]).collect();
    // Solve for interior m_1..m_{n-2}, with
    // m_0 = ((h0+h1) m_1 − h0 m_2)/h1 and the mirror relation at the end.
    let k = n - 2;
    let mut sub = vec![0.0; k];
    let mut diag = vec![0.0; k];
    let mut sup = vec![0.0; k];
    let mut rhs = vec![0.0; k];
    for j in 0..k {
        let i = j + 1;
        sub[j] = h[i - 1] / 6.0;
        diag[j] = (h[i - 1] + h[i]) / 3.0;
        sup[j] = h[i] / 6.0;
        rhs[j] = d[i] - d[i - 1];
    }
    // Substitute m_0 into the first row.
    let (h0, h1) = (h[0], h[1]);
    let a0 = (h0 + h1) / h1;
    let b0 = -h0 / h1;
    diag[0] += sub[0] * a0;
    if k > 1 {
        sup[0] += sub[0] * b0;
    } else {
        diag[0] += sub[0] * b0;
    }
    sub[0] = 0.0;
    // Substitute m_{n-1} into the last row.
    let (hl, hm) = (h[n - 2], h[n - 3]);
    let al = (hl + hm) / hm;
    let bl = -hl / hm;
    let last = k - 1;
    diag[last] += sup[last] * al;
    if k > 1 {
        sub[last] += sup[last] * bl;
    } else {
        diag[last] += sup[last] * bl;
    }
    sup[last] = 0.0;
    solve_tridiagonal(&sub, &diag, &sup, &mut rhs);
    let mut m = vec![0.0; n];
    m[1..n - 1].copy_from_slice(&rhs);
    m[0] = a0 * m[1] + b0 * m[2];
    m[n - 1] = al * m[n - 2] + bl * m[n - 3];
    m
}

/// Thomas algorithm; `rhs` is overwritten with the solution.
fn solve_tridiagonal(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &mut [f64]) {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut beta = diag[0];
    rhs[0] /= beta;
    for i in 1..n {
        c[i] = sup[i - 1] / beta;
        beta = diag[i] - sub[i] * c[i];
        rhs[i] = (rhs[i] - sub[i] * rhs[i - 1]) / beta;
    }
    for i in (0..n - 1).rev() {
        rhs[i] -= c[i + 1] * rhs[i + 1];
    }
}

/// Cubic spline of a complex-valued function of a real variable.
#[derive(Clone, Debug)]
pub struct ComplexSpline {
    re: CubicSpline,
    im: CubicSpline,
}

impl ComplexSpline {
    pub fn new(x: Vec<f64>, z: &[C64]) -> Result<Self> {
        let re = CubicSpline::new(x.clone(), z.iter().map(|v| v.re).collect())?;
        let im = CubicSpline::new(x, z.iter().map(|v| v.im).collect())?;
        Ok(ComplexSpline { re, im })
    }

    pub fn eval(&self, t: f64) -> C64 {
        C64::new(self.re.eval(t), self.im.eval(t))
    }

    pub fn deriv(&self, t: f64) -> C64 {
        C64::new(self.re.deriv(t), self.im.deriv(t))
    }

    pub fn knots(&self) -> &[f64] {
        self.re.knots()
    }
}

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Generalised exponential integral E_n(z) = ∫₁^∞ e^{−zt} t^{−n} dt for
/// n ≥ 1 and z ≠ 0 with |arg z| < π (continued on the principal branch).
pub fn expint_en(n: usize, z: C64) -> C64 {
    assert!(n >= 1, "E_n needs n ≥ 1");
    if z.norm() <= 1.0 {
        // Power series.
        let nm1 = (n - 1) as f64;
        let mut psi = -EULER_GAMMA;
        for m in 1..n {
            psi += 1.0 / m as f64;
        }
        let mut fact = 1.0; // k!
        let mut sum = ZERO;
        let mut pw = ONE; // (−z)^k
        let mut special = ZERO;
        for k in 0..200usize {
            if k > 0 {
                fact *= k as f64;
                pw *= -z;
            }
            if k == n - 1 {
                special = pw / fact * (psi - z.ln());
            } else {
                let term = pw / (fact * (k as f64 - nm1));
                sum -= term;
                if k > n && term.norm() < 1e-17 * sum.norm().max(1e-300) {
                    break;
                }
            }
        }
        sum + special
    } else {
        // Modified Lentz continued fraction.
        let tiny = 1e-300;
        let nf = n as f64;
        let mut b = z + nf;
        let mut c = C64::new(1.0 / tiny, 0.0);
        let mut d = ONE / b;
        let mut h = d;
        for i in 1..100_000usize {
            let a = -(i as f64) * (nf - 1.0 + i as f64);
            b += 2.0;
            d = ONE / (d * a + b);
            c = b + C64::from(a) / c;
            let del = c * d;
            h *= del;
            if (del - 1.0).norm() < 1e-16 {
                break;
            }
        }
        h * (-z).exp()
    }
}

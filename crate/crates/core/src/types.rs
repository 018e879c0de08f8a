//! Shared numeric types: complex scalars, 2×2 complex matrices and the sign λ.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub type C64 = Complex64;

pub const I: C64 = C64::new(0.0, 1.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const ZERO: C64 = C64::new(0.0, 0.0);

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

#[inline]
pub fn is_finite(z: C64) -> bool {
    z.re.is_finite() && z.im.is_finite()
}

/// Sign of the nonlinearity in `q_t + q_xxx - 6 λ q² q_x = 0`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "i32", into = "i32")]
pub enum Lambda {
    /// λ = +1 (defocusing, no discrete spectrum).
    Defocusing,
    /// λ = −1 (focusing, solitons possible).
    Focusing,
}

impl Lambda {
    #[inline]
    pub fn value(self) -> f64 {
        match self {
            Lambda::Defocusing => 1.0,
            Lambda::Focusing => -1.0,
        }
    }

    /// The factor (1 − λ)/2 that switches the discrete sums on and off.
    #[inline]
    pub fn discrete_weight(self) -> f64 {
        (1.0 - self.value()) / 2.0
    }
}

impl TryFrom<i32> for Lambda {
    type Error = String;
    fn try_from(v: i32) -> Result<Self, Self::Error> {
        match v {
            1 => Ok(Lambda::Defocusing),
            -1 => Ok(Lambda::Focusing),
            other => Err(format!("lambda must be +1 or -1, got {other}")),
        }
    }
}

impl From<Lambda> for i32 {
    fn from(l: Lambda) -> i32 {
        match l {
            Lambda::Defocusing => 1,
            Lambda::Focusing => -1,
        }
    }
}

/// 2×2 complex matrix, row-major.
#[derive(Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mat2C {
    pub a: [[C64; 2]; 2],
}

impl fmt::Debug for Mat2C {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[[{}, {}], [{}, {}]]",
            self.a[0][0], self.a[0][1], self.a[1][0], self.a[1][1]
        )
    }
}

impl Mat2C {
    #[inline]
    pub const fn new(a11: C64, a12: C64, a21: C64, a22: C64) -> Self {
        Mat2C {
            a: [[a11, a12], [a21, a22]],
        }
    }

    pub const fn identity() -> Self {
        Mat2C::new(ONE, ZERO, ZERO, ONE)
    }

    pub const fn zero() -> Self {
        Mat2C::new(ZERO, ZERO, ZERO, ZERO)
    }

    pub fn diag(d1: C64, d2: C64) -> Self {
        Mat2C::new(d1, ZERO, ZERO, d2)
    }

    pub fn sigma3() -> Self {
        Mat2C::diag(ONE, -ONE)
    }

    /// `exp(z σ₃) = diag(e^z, e^{-z})`.
    pub fn exp_sigma3(z: C64) -> Self {
        Mat2C::diag(z.exp(), (-z).exp())
    }

    /// Λ = [[0, 1], [λ, 0]].
    pub fn big_lambda(lambda: Lambda) -> Self {
        Mat2C::new(ZERO, ONE, C64::from(lambda.value()), ZERO)
    }

    pub fn from_cols(c0: [C64; 2], c1: [C64; 2]) -> Self {
        Mat2C::new(c0[0], c1[0], c0[1], c1[1])
    }

    #[inline]
    pub fn col(&self, j: usize) -> [C64; 2] {
        [self.a[0][j], self.a[1][j]]
    }

    #[inline]
    pub fn set_col(&mut self, j: usize, v: [C64; 2]) {
        self.a[0][j] = v[0];
        self.a[1][j] = v[1];
    }

    #[inline]
    pub fn det(&self) -> C64 {
        self.a[0][0] * self.a[1][1] - self.a[0][1] * self.a[1][0]
    }

    #[inline]
    pub fn trace(&self) -> C64 {
        self.a[0][0] + self.a[1][1]
    }

    pub fn inv(&self) -> Self {
        let d = self.det();
        Mat2C::new(
            self.a[1][1] / d,
            -self.a[0][1] / d,
            -self.a[1][0] / d,
            self.a[0][0] / d,
        )
    }

    pub fn conj(&self) -> Self {
        self.map(|z| z.conj())
    }

    pub fn scale(&self, s: C64) -> Self {
        self.map(|z| z * s)
    }

    pub fn map(&self, f: impl Fn(C64) -> C64) -> Self {
        Mat2C::new(f(self.a[0][0]), f(self.a[0][1]), f(self.a[1][0]), f(self.a[1][1]))
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> f64 {
        self.a
            .iter()
            .flatten()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.a.iter().flatten().all(|z| is_finite(*z))
    }

    /// `[A, B] = AB − BA`.
    pub fn commutator(&self, other: &Mat2C) -> Self {
        *self * *other - *other * *self
    }

    #[inline]
    pub fn mul_vec(&self, v: [C64; 2]) -> [C64; 2] {
        [
            self.a[0][0] * v[0] + self.a[0][1] * v[1],
            self.a[1][0] * v[0] + self.a[1][1] * v[1],
        ]
    }
}

impl Add for Mat2C {
    type Output = Mat2C;
    fn add(self, o: Mat2C) -> Mat2C {
        Mat2C::new(
            self.a[0][0] + o.a[0][0],
            self.a[0][1] + o.a[0][1],
            self.a[1][0] + o.a[1][0],
            self.a[1][1] + o.a[1][1],
        )
    }
}

impl Sub for Mat2C {
    type Output = Mat2C;
    fn sub(self, o: Mat2C) -> Mat2C {
        Mat2C::new(
            self.a[0][0] - o.a[0][0],
            self.a[0][1] - o.a[0][1],
            self.a[1][0] - o.a[1][0],
            self.a[1][1] - o.a[1][1],
        )
    }
}

impl Neg for Mat2C {
    type Output = Mat2C;
    fn neg(self) -> Mat2C {
        self.map(|z| -z)
    }
}

impl Mul for Mat2C {
    type Output = Mat2C;
    #[inline]
    fn mul(self, o: Mat2C) -> Mat2C {
        let a = &self.a;
        let b = &o.a;
        Mat2C::new(
            a[0][0] * b[0][0] + a[0][1] * b[1][0],
            a[0][0] * b[0][1] + a[0][1] * b[1][1],
            a[1][0] * b[0][0] + a[1][1] * b[1][0],
            a[1][0] * b[0][1] + a[1][1] * b[1][1],
        )
    }
}

impl Mul<C64> for Mat2C {
    type Output = Mat2C;
    fn mul(self, s: C64) -> Mat2C {
        self.scale(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverse_and_det() {
        let m = Mat2C::new(c(1.0, 2.0), c(0.5, -1.0), c(-0.3, 0.2), c(2.0, 0.1));
        let p = m * m.inv();
        assert!((p - Mat2C::identity()).max_abs() < 1e-14);
        assert!(((m * m).det() - m.det() * m.det()).norm() < 1e-12);
    }

    #[test]
    fn lambda_roundtrip() {
        let l: Lambda = serde_json::from_str("-1").unwrap();
        assert_eq!(l, Lambda::Focusing);
        assert_eq!(serde_json::to_string(&Lambda::Defocusing).unwrap(), "1");
        assert!(serde_json::from_str::<Lambda>("2").is_err());
    }

    #[test]
    fn big_lambda_squares_to_lambda() {
        for l in [Lambda::Focusing, Lambda::Defocusing] {
            let m = Mat2C::big_lambda(l);
            let sq = m * m;
            assert!((sq - Mat2C::identity().scale(C64::from(l.value()))).max_abs() < 1e-15);
        }
    }
}

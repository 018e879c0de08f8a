//! Initial and boundary functions: presets and tabulated samples.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::CubicSpline;

/// Which independent variable a soliton trace runs along.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    /// q(·, 0) as a function of x.
    X,
    /// q(0, ·) as a function of t.
    T,
}

/// The role a function plays in a problem; fixes preset defaults.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Role {
    /// u(x) = q(x, 0)
    U,
    /// v(t) = q(0, t)
    V,
    /// v₁(t) = q_x(0, t)
    V1,
    /// v₂(t) = q_xx(0, t)
    V2,
}

impl Role {
    fn default_axis(self) -> Axis {
        match self {
            Role::U => Axis::X,
            _ => Axis::T,
        }
    }

    fn default_derivative(self) -> u8 {
        match self {
            Role::U | Role::V => 0,
            Role::V1 => 1,
            Role::V2 => 2,
        }
    }
}

fn default_sign() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "preset", content = "params", rename_all = "snake_case")]
pub enum Preset {
    Zero,
    /// A·exp(−(s − center)²/width²)
    GaussianBump {
        amplitude: f64,
        center: f64,
        width: f64,
    },
    /// Trace of the one-soliton sign·2κ·sech(2κ(x − 4κ²t − x₀)).
    SolitonTrace {
        kappa: f64,
        x0: f64,
        #[serde(default = "default_sign")]
        sign: f64,
        /// Order of the x-derivative; defaults from the role.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        derivative: Option<u8>,
        /// Defaults to x for u and t for the boundary functions.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        axis: Option<Axis>,
    },
}

/// A real function of one non-negative variable.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FunctionSpec {
    Table { table: Vec<(f64, f64)> },
    Preset(Preset),
}

impl Default for FunctionSpec {
    fn default() -> Self {
        FunctionSpec::Preset(Preset::Zero)
    }
}

impl FunctionSpec {
    pub fn zero() -> Self {
        FunctionSpec::Preset(Preset::Zero)
    }

    pub fn gaussian(amplitude: f64, center: f64, width: f64) -> Self {
        FunctionSpec::Preset(Preset::GaussianBump {
            amplitude,
            center,
            width,
        })
    }

    pub fn soliton(kappa: f64, x0: f64) -> Self {
        FunctionSpec::Preset(Preset::SolitonTrace {
            kappa,
            x0,
            sign: 1.0,
            derivative: None,
            axis: None,
        })
    }

    pub fn is_zero(&self) -> bool {
        match self {
            FunctionSpec::Preset(Preset::Zero) => true,
            FunctionSpec::Preset(Preset::GaussianBump { amplitude, .. }) => *amplitude == 0.0,
            FunctionSpec::Table { table } => table.iter().all(|p| p.1 == 0.0),
            _ => false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            FunctionSpec::Table { table } => {
                if table.len() < 2 {
                    return Err(Error::InvalidConfig("a table needs at least two rows".into()));
                }
                if table.windows(2).any(|p| !(p[1].0 > p[0].0)) {
                    return Err(Error::InvalidConfig(
                        "table abscissae must be strictly increasing".into(),
                    ));
                }
                if table.iter().any(|p| !p.0.is_finite() || !p.1.is_finite()) {
                    return Err(Error::InvalidConfig("table entries must be finite".into()));
                }
            }
            FunctionSpec::Preset(Preset::GaussianBump { width, .. }) if !(*width > 0.0) => {
                return Err(Error::InvalidConfig("gaussian width must be positive".into()));
            }
            FunctionSpec::Preset(Preset::SolitonTrace { kappa, derivative, .. }) => {
                if !(*kappa > 0.0) {
                    return Err(Error::InvalidConfig("soliton kappa must be positive".into()));
                }
                if derivative.is_some_and(|d| d > 3) {
                    return Err(Error::InvalidConfig(
                        "soliton traces support derivatives up to order 3".into(),
                    ));
                }
            }
            _ => {}
        }
        Ok(())
    }

    /// Compile into an evaluator for the given role.
    pub fn profile(&self, role: Role) -> Result<Profile> {
        self.validate()?;
        Ok(match self {
            FunctionSpec::Preset(Preset::Zero) => Profile::Zero,
            FunctionSpec::Preset(Preset::GaussianBump {
                amplitude,
                center,
                width,
            }) => Profile::Gaussian {
                amplitude: *amplitude,
                center: *center,
                width: *width,
            },
            FunctionSpec::Preset(Preset::SolitonTrace {
                kappa,
                x0,
                sign,
                derivative,
                axis,
            }) => Profile::Soliton {
                kappa: *kappa,
                x0: *x0,
                sign: *sign,
                derivative: derivative.unwrap_or(role.default_derivative()),
                axis: axis.unwrap_or(role.default_axis()),
            },
            FunctionSpec::Table { table } => {
                let xs = table.iter().map(|p| p.0).collect();
                let ys = table.iter().map(|p| p.1).collect();
                let last = table.last().map(|p| p.0).unwrap_or(0.0);
                Profile::Table {
                    spline: CubicSpline::new(xs, ys)?.with_outside(0.0),
                    last,
                }
            }
        })
    }
}

/// ξ-derivatives of sech(ξ) of order 0..=3.
fn sech_derivative(xi: f64, order: u8) -> f64 {
    let s = 1.0 / xi.cosh();
    let t = xi.tanh();
    match order {
        0 => s,
        1 => -s * t,
        2 => s * (1.0 - 2.0 * s * s),
        _ => s * t * (6.0 * s * s - 1.0),
    }
}

/// ∂ₓᵈ of the one-soliton q(x,t) = sign·2κ·sech(2κ(x − 4κ²t − x₀)) of the
/// focusing equation, for d ≤ 3.
pub fn soliton_value(kappa: f64, x0: f64, sign: f64, x: f64, t: f64, derivative: u8) -> f64 {
    let a = 2.0 * kappa;
    let xi = a * (x - 4.0 * kappa * kappa * t - x0);
    sign * a * a.powi(derivative as i32) * sech_derivative(xi, derivative)
}

/// A compiled real function of one variable.
#[derive(Clone, Debug)]
pub enum Profile {
    Zero,
    Gaussian {
        amplitude: f64,
        center: f64,
        width: f64,
    },
    Soliton {
        kappa: f64,
        x0: f64,
        sign: f64,
        derivative: u8,
        axis: Axis,
    },
    Table {
        spline: CubicSpline,
        last: f64,
    },
}

impl Profile {
    #[inline]
    pub fn eval(&self, s: f64) -> f64 {
        match self {
            Profile::Zero => 0.0,
            Profile::Gaussian {
                amplitude,
                center,
                width,
            } => {
                let z = (s - center) / width;
                amplitude * (-z * z).exp()
            }
            Profile::Soliton {
                kappa,
                x0,
                sign,
                derivative,
                axis,
            } => match axis {
                Axis::X => soliton_value(*kappa, *x0, *sign, s, 0.0, *derivative),
                Axis::T => soliton_value(*kappa, *x0, *sign, 0.0, s, *derivative),
            },
            Profile::Table { spline, .. } => spline.eval(s),
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Profile::Zero)
    }

    /// Smallest s ≥ `min` beyond which |f| stays below `threshold`
    /// (scanned on a fine grid up to `cap`).
    pub fn support_end(&self, threshold: f64, min: f64, cap: f64) -> f64 {
        match self {
            Profile::Zero => min,
            Profile::Table { last, .. } => last.max(min),
            _ => {
                let h = 0.01;
                let n = (cap / h).ceil() as usize;
                let mut end = 0.0;
                for i in (0..=n).rev() {
                    let s = i as f64 * h;
                    if self.eval(s).abs() >= threshold {
                        end = s + h;
                        break;
                    }
                }
                end.max(min)
            }
        }
    }
}

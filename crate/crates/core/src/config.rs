//! Problem configuration (JSON) and its resolved, compiled form.

use std::fmt;

use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::functions::{FunctionSpec, Profile, Role};
use crate::types::Lambda;

/// Time horizon T: finite or infinite.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Horizon {
    Finite(f64),
    Infinite,
}

impl Horizon {
    pub fn is_finite(self) -> bool {
        matches!(self, Horizon::Finite(_))
    }
}

impl Serialize for Horizon {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Horizon::Finite(t) => s.serialize_f64(*t),
            Horizon::Infinite => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for Horizon {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct V;
        impl Visitor<'_> for V {
            type Value = Horizon;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a positive number or \"inf\"")
            }
            fn visit_f64<E: de::Error>(self, v: f64) -> std::result::Result<Horizon, E> {
                Ok(Horizon::Finite(v))
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<Horizon, E> {
                Ok(Horizon::Finite(v as f64))
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<Horizon, E> {
                Ok(Horizon::Finite(v as f64))
            }
            fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<Horizon, E> {
                match v {
                    "inf" | "infinity" | "Infinity" => Ok(Horizon::Infinite),
                    other => Err(E::custom(format!("unknown horizon {other:?}"))),
                }
            }
        }
        d.deserialize_any(V)
    }
}

/// Uniform lattice `n` points from `min` to `max` inclusive.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Lattice {
    pub min: f64,
    pub max: f64,
    pub n: usize,
}

impl Lattice {
    pub fn nodes(&self) -> Vec<f64> {
        if self.n == 1 {
            return vec![self.min];
        }
        (0..self.n)
            .map(|i| self.min + (self.max - self.min) * i as f64 / (self.n - 1) as f64)
            .collect()
    }
}

fn d_k_max() -> f64 {
    12.0
}
fn d_k_step() -> f64 {
    0.01
}
fn d_ray_smax() -> f64 {
    6.0
}
fn d_ray_nodes() -> usize {
    151
}
fn d_nystrom() -> usize {
    16
}
fn d_search_box() -> f64 {
    4.0
}
fn d_x_nodes() -> Lattice {
    Lattice { min: 0.0, max: 8.0, n: 33 }
}
fn d_t_nodes() -> Lattice {
    Lattice { min: 0.0, max: 1.0, n: 5 }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grids {
    /// Truncation of the half-line; derived from u when omitted.
    #[serde(default)]
    pub x_max: Option<f64>,
    /// Effective horizon for T = ∞; derived from the boundary data when omitted.
    #[serde(default)]
    pub t_eff: Option<f64>,
    /// Reflection samples on [−k_max, k_max] with spacing k_step.
    #[serde(default = "d_k_max")]
    pub k_max: f64,
    #[serde(default = "d_k_step")]
    pub k_step: f64,
    /// Samples of c(k) on each ray of ∂Ω₂ cover [0, ray_smax].
    #[serde(default = "d_ray_smax")]
    pub ray_smax: f64,
    #[serde(default = "d_ray_nodes")]
    pub ray_nodes: usize,
    /// Gauss–Legendre nodes per Nyström panel.
    #[serde(default = "d_nystrom")]
    pub nystrom_n: usize,
    /// Half-width of the eigenvalue search box.
    #[serde(default = "d_search_box")]
    pub search_box: f64,
    #[serde(default = "d_x_nodes")]
    pub x_nodes: Lattice,
    #[serde(default = "d_t_nodes")]
    pub t_nodes: Lattice,
}

impl Default for Grids {
    fn default() -> Self {
        serde_json::from_str("{}").expect("defaults")
    }
}

fn d_tol_root() -> f64 {
    1e-10
}
fn d_tol_quad() -> f64 {
    1e-10
}
fn d_tol_solve() -> f64 {
    1e-8
}
fn d_step_tol() -> f64 {
    1e-11
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    #[serde(default = "d_tol_root")]
    pub tol_root: f64,
    #[serde(default = "d_tol_quad")]
    pub tol_quad: f64,
    #[serde(default = "d_tol_solve")]
    pub tol_solve: f64,
    /// Local error tolerance of the Runge–Kutta integrator.
    #[serde(default = "d_step_tol")]
    pub step_tol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        serde_json::from_str("{}").expect("defaults")
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub lambda: Lambda,
    #[serde(rename = "T")]
    pub horizon: Horizon,
    #[serde(default)]
    pub u: FunctionSpec,
    #[serde(default)]
    pub v: FunctionSpec,
    #[serde(default)]
    pub v1: FunctionSpec,
    #[serde(default)]
    pub v2: FunctionSpec,
    #[serde(default)]
    pub grids: Grids,
    #[serde(default)]
    pub tolerances: Tolerances,
}

/// Magnitude below which data count as zero when choosing truncations.
pub const DATA_CUTOFF: f64 = 1e-12;

impl ProblemConfig {
    pub fn new(lambda: Lambda, horizon: Horizon) -> Self {
        ProblemConfig {
            lambda,
            horizon,
            u: FunctionSpec::zero(),
            v: FunctionSpec::zero(),
            v1: FunctionSpec::zero(),
            v2: FunctionSpec::zero(),
            grids: Grids::default(),
            tolerances: Tolerances::default(),
        }
    }

    /// One-soliton traces of sign·2κ·sech(2κ(x − 4κ²t − x₀)) as u, v, v₁, v₂.
    pub fn soliton(kappa: f64, x0: f64, horizon: Horizon) -> Self {
        let mut cfg = ProblemConfig::new(Lambda::Focusing, horizon);
        let s = FunctionSpec::soliton(kappa, x0);
        cfg.u = s.clone();
        cfg.v = s.clone();
        cfg.v1 = s.clone();
        cfg.v2 = s;
        cfg
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ProblemConfig =
            serde_json::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        if let Horizon::Finite(t) = self.horizon {
            if !(t > 0.0) || !t.is_finite() {
                return bad("T must be positive");
            }
        }
        for f in [&self.u, &self.v, &self.v1, &self.v2] {
            f.validate()?;
        }
        let g = &self.grids;
        if g.x_max.is_some_and(|x| !(x > 0.0)) {
            return bad("x_max must be positive");
        }
        if g.t_eff.is_some_and(|t| !(t > 0.0)) {
            return bad("t_eff must be positive");
        }
        if !(g.k_max > 0.0) || !(g.k_step > 0.0) || g.k_step > g.k_max {
            return bad("k_max and k_step must be positive with k_step ≤ k_max");
        }
        if !(g.ray_smax > 0.0) || g.ray_nodes < 8 {
            return bad("ray_smax must be positive and ray_nodes ≥ 8");
        }
        if g.nystrom_n < 8 {
            return bad("nystrom_n must be at least 8");
        }
        if !(g.search_box > 0.0) {
            return bad("search_box must be positive");
        }
        for l in [&g.x_nodes, &g.t_nodes] {
            if l.n == 0 || l.min < 0.0 || l.max < l.min {
                return bad("lattices need n ≥ 1 and 0 ≤ min ≤ max");
            }
        }
        let t = &self.tolerances;
        if [t.tol_root, t.tol_quad, t.tol_solve, t.step_tol]
            .iter()
            .any(|v| !(*v > 0.0))
        {
            return bad("all tolerances must be positive");
        }
        Ok(())
    }

    /// Compile profiles and fix truncations.
    pub fn resolve(&self) -> Result<Problem> {
        self.validate()?;
        let u = self.u.profile(Role::U)?;
        let v = self.v.profile(Role::V)?;
        let v1 = self.v1.profile(Role::V1)?;
        let v2 = self.v2.profile(Role::V2)?;
        let x_max = match self.grids.x_max {
            Some(x) => x,
            None => u.support_end(DATA_CUTOFF, 1.0, 400.0),
        };
        let t_end = match self.horizon {
            Horizon::Finite(t) => t,
            Horizon::Infinite => match self.grids.t_eff {
                Some(t) => t,
                None => [&v, &v1, &v2]
                    .iter()
                    .map(|p| p.support_end(DATA_CUTOFF, 1.0, 400.0))
                    .fold(1.0, f64::max),
            },
        };
        Ok(Problem {
            config: self.clone(),
            u,
            v,
            v1,
            v2,
            x_max,
            t_end,
        })
    }
}

/// A validated configuration with compiled profiles.
#[derive(Clone, Debug)]
pub struct Problem {
    pub config: ProblemConfig,
    pub u: Profile,
    pub v: Profile,
    pub v1: Profile,
    pub v2: Profile,
    /// Truncation of ℝ₊ for the x-equation.
    pub x_max: f64,
    /// Upper end of the t-integration: T, or t_eff when T = ∞.
    pub t_end: f64,
}

impl Problem {
    pub fn lambda(&self) -> Lambda {
        self.config.lambda
    }

    pub fn horizon(&self) -> Horizon {
        self.config.horizon
    }

    pub fn step_tol(&self) -> f64 {
        self.config.tolerances.step_tol
    }

    pub fn boundary_is_zero(&self) -> bool {
        self.v.is_zero() && self.v1.is_zero() && self.v2.is_zero()
    }

    /// Boundary triplet (v, v₁, v₂) at time t.
    #[inline]
    pub fn boundary(&self, t: f64) -> (f64, f64, f64) {
        (self.v.eval(t), self.v1.eval(t), self.v2.eval(t))
    }
}

//! Direct and inverse scattering for the modified Korteweg–de Vries
//! equation `q_t + q_xxx − 6λq²q_x = 0` on the half-line x ≥ 0.

pub mod config;
pub mod error;
pub mod functions;
pub mod io;
pub mod kernel;
pub mod laxpair;
pub mod marchenko;
pub mod ode;
pub mod quadrature;
pub mod region;
pub mod scattering;
pub mod types;
pub mod validate;
pub mod verify;
pub mod zeros;

pub use config::{Horizon, Problem, ProblemConfig};
pub use error::{Error, Result};
pub use region::{classify_region, RegionId};
pub use types::{Lambda, Mat2C, C64};

//! Sector geometry of the contour Σ = {k : Im k³ = 0} and the six open
//! sectors Ω₁…Ω₆ between its rays.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::types::C64;

/// Relative tolerance for deciding that a point lies on Σ.
pub const SIGMA_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RegionId {
    Omega1,
    Omega2,
    Omega3,
    Omega4,
    Omega5,
    Omega6,
    SigmaRealAxis,
    SigmaRayPi3,
    SigmaRay2Pi3,
    SigmaRay4Pi3,
    SigmaRay5Pi3,
    Origin,
}

impl RegionId {
    /// Sectors Ω₁, Ω₃, Ω₅ carry the "+" label of the oriented contour.
    pub fn is_plus_sector(self) -> bool {
        matches!(self, RegionId::Omega1 | RegionId::Omega3 | RegionId::Omega5)
    }

    pub fn is_minus_sector(self) -> bool {
        matches!(self, RegionId::Omega2 | RegionId::Omega4 | RegionId::Omega6)
    }

    pub fn is_on_sigma(self) -> bool {
        matches!(
            self,
            RegionId::SigmaRealAxis
                | RegionId::SigmaRayPi3
                | RegionId::SigmaRay2Pi3
                | RegionId::SigmaRay4Pi3
                | RegionId::SigmaRay5Pi3
                | RegionId::Origin
        )
    }

    /// Image under k ↦ conj(k).
    pub fn mirror_real(self) -> RegionId {
        use RegionId::*;
        match self {
            Omega1 => Omega6,
            Omega6 => Omega1,
            Omega2 => Omega5,
            Omega5 => Omega2,
            Omega3 => Omega4,
            Omega4 => Omega3,
            SigmaRayPi3 => SigmaRay5Pi3,
            SigmaRay5Pi3 => SigmaRayPi3,
            SigmaRay2Pi3 => SigmaRay4Pi3,
            SigmaRay4Pi3 => SigmaRay2Pi3,
            other => other,
        }
    }

    /// Image under k ↦ −conj(k).
    pub fn mirror_imag(self) -> RegionId {
        use RegionId::*;
        match self {
            Omega1 => Omega3,
            Omega3 => Omega1,
            Omega4 => Omega6,
            Omega6 => Omega4,
            SigmaRayPi3 => SigmaRay2Pi3,
            SigmaRay2Pi3 => SigmaRayPi3,
            SigmaRay4Pi3 => SigmaRay5Pi3,
            SigmaRay5Pi3 => SigmaRay4Pi3,
            other => other,
        }
    }
}

/// Classify a finite k into the open sector containing it or the component
/// of Σ it lies on.  A point is on Σ when |Im k³| ≤ 1e−12·max(1, |k|³).
pub fn classify_region(k: C64) -> RegionId {
    let r = k.norm();
    if r == 0.0 {
        return RegionId::Origin;
    }
    let k3 = k * k * k;
    let on_sigma = k3.im.abs() <= SIGMA_TOL * r.powi(3).max(1.0);
    // arg in [0, 2π)
    let mut arg = k.im.atan2(k.re);
    if arg < 0.0 {
        arg += 2.0 * PI;
    }
    if on_sigma {
        // Nearest of the six ray directions j·π/3.
        let j = ((arg / (PI / 3.0)).round() as i64).rem_euclid(6);
        return match j {
            0 | 3 => RegionId::SigmaRealAxis,
            1 => RegionId::SigmaRayPi3,
            2 => RegionId::SigmaRay2Pi3,
            4 => RegionId::SigmaRay4Pi3,
            _ => RegionId::SigmaRay5Pi3,
        };
    }
    // Off Σ the sign of Im k³ fixes the sector parity, which settles
    // points whose floating-point argument sits on a ray boundary.
    let upper_parity = k3.im > 0.0; // Ω1, Ω3, Ω5
    let j = ((arg / (PI / 3.0)).floor() as i64).clamp(0, 5);
    let j = if (j % 2 == 0) == upper_parity {
        j
    } else {
        // Argument rounding put us in the neighbouring sector.
        let frac = arg / (PI / 3.0) - j as f64;
        if frac < 0.5 {
            (j + 5) % 6
        } else {
            (j + 1) % 6
        }
    };
    match j {
        0 => RegionId::Omega1,
        1 => RegionId::Omega2,
        2 => RegionId::Omega3,
        3 => RegionId::Omega4,
        4 => RegionId::Omega5,
        _ => RegionId::Omega6,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::c;
    use proptest::prelude::*;

    #[test]
    fn spec_examples() {
        assert_eq!(classify_region(c(2.0, 0.1)), RegionId::Omega1);
        assert_eq!(classify_region(c(0.0, 1.0)), RegionId::Omega2);
        assert_eq!(classify_region(c(-3.0, 0.0)), RegionId::SigmaRealAxis);
        assert_eq!(classify_region(c(0.0, 0.0)), RegionId::Origin);
    }

    #[test]
    fn rays_are_detected() {
        let dir = |a: f64| C64::from_polar(2.5, a);
        assert_eq!(classify_region(dir(PI / 3.0)), RegionId::SigmaRayPi3);
        assert_eq!(classify_region(dir(2.0 * PI / 3.0)), RegionId::SigmaRay2Pi3);
        assert_eq!(classify_region(dir(4.0 * PI / 3.0)), RegionId::SigmaRay4Pi3);
        assert_eq!(classify_region(dir(5.0 * PI / 3.0)), RegionId::SigmaRay5Pi3);
        assert_eq!(classify_region(dir(PI)), RegionId::SigmaRealAxis);
    }

    #[test]
    fn all_sectors() {
        let expect = [
            RegionId::Omega1,
            RegionId::Omega2,
            RegionId::Omega3,
            RegionId::Omega4,
            RegionId::Omega5,
            RegionId::Omega6,
        ];
        for (j, want) in expect.iter().enumerate() {
            let k = C64::from_polar(1.7, (j as f64 + 0.5) * PI / 3.0);
            assert_eq!(classify_region(k), *want);
        }
    }

    proptest! {
        #[test]
        fn mirror_real_symmetry(re in -10.0f64..10.0, im in -10.0f64..10.0) {
            let k = c(re, im);
            prop_assert_eq!(classify_region(k.conj()), classify_region(k).mirror_real());
        }

        #[test]
        fn mirror_imag_symmetry(re in -10.0f64..10.0, im in -10.0f64..10.0) {
            let k = c(re, im);
            prop_assert_eq!(classify_region(-k.conj()), classify_region(k).mirror_imag());
        }
    }
}

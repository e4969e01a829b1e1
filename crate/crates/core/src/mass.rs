//! Normalized surface gravities of the model family and their inversion.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{check_mass, critical_radii, lapse_max, max_mass, Dimension, Side};

pub const DEFAULT_CLASS_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RegionClass {
    Outer,
    Inner,
    Cylindrical,
}

impl RegionClass {
    /// Horizon whose gravity identifies the mass of a region of this class.
    pub fn side(self) -> Option<Side> {
        match self {
            RegionClass::Outer => Some(Side::Plus),
            RegionClass::Inner => Some(Side::Minus),
            RegionClass::Cylindrical => None,
        }
    }
}

impl std::fmt::Display for RegionClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            RegionClass::Outer => "outer",
            RegionClass::Inner => "inner",
            RegionClass::Cylindrical => "cylindrical",
        })
    }
}

impl std::str::FromStr for RegionClass {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "outer" => Ok(RegionClass::Outer),
            "inner" => Ok(RegionClass::Inner),
            "cylindrical" => Ok(RegionClass::Cylindrical),
            other => Err(Error::UnknownName(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurfaceGravity {
    /// `|∇u| / u_max` at the horizon.
    pub k: f64,
    pub side: Side,
}

/// Normalized gravity `|−r + (n−2) m r^(1−n)| / u_max` at `r = r_±(m)`.
///
/// Evaluated pointwise for every `m ∈ (0, m_max)`; no near-extremal cut.
pub fn surface_gravity(n: Dimension, m: f64, side: Side) -> Result<SurfaceGravity> {
    check_mass(n, m)?;
    let (r_minus, r_plus) = critical_radii(n, m)?;
    let r = match side {
        Side::Minus => r_minus,
        Side::Plus => r_plus,
    };
    let nf = n.f();
    let grad = (-r + (nf - 2.0) * m * r.powf(1.0 - nf)).abs();
    Ok(SurfaceGravity {
        k: grad / lapse_max(n, m)?,
        side,
    })
}

/// Compares `k` with `√n`; `tol` is the absolute half-width of the
/// cylindrical band.
pub fn classify_region(n: Dimension, k: f64, tol: f64) -> Result<RegionClass> {
    if !(k > 0.0 && k.is_finite()) {
        return Err(Error::out_of_range("k", k, "(0, inf)"));
    }
    let s = n.f().sqrt();
    Ok(if (k - s).abs() <= tol {
        RegionClass::Cylindrical
    } else if k < s {
        RegionClass::Outer
    } else {
        RegionClass::Inner
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VirtualMass {
    pub m: f64,
    /// `k(m) − k` at the returned mass; zero for cylindrical regions.
    pub residual: f64,
}

const BISECT_LO: f64 = 1e-12;
const BISECT_ITERS: usize = 60;

/// Mass whose model has normalized gravity `k` on the horizon matching `class`.
pub fn virtual_mass(n: Dimension, k: f64, class: RegionClass) -> Result<f64> {
    Ok(virtual_mass_with_residual(n, k, class)?.m)
}

pub fn virtual_mass_with_residual(n: Dimension, k: f64, class: RegionClass) -> Result<VirtualMass> {
    let side = match class.side() {
        None => {
            return Ok(VirtualMass {
                m: max_mass(n),
                residual: 0.0,
            })
        }
        Some(side) => side,
    };
    let s = n.f().sqrt();
    let admissible = match class {
        RegionClass::Outer => k > 1.0 && k < s,
        _ => k > s && k.is_finite(),
    };
    if !admissible {
        let range = match class {
            RegionClass::Outer => format!("(1, {s}) for outer regions"),
            _ => format!("({s}, inf) for inner regions"),
        };
        return Err(Error::out_of_range("k", k, range));
    }
    if !is_monotone(n) {
        return Err(Error::NotMonotone(n.get()));
    }

    let g = |m: f64| surface_gravity(n, m, side).map(|sg| sg.k - k);
    let mut lo = BISECT_LO;
    let mut hi = max_mass(n) - BISECT_LO;
    let (g_lo, g_hi) = (g(lo)?, g(hi)?);
    if g_lo.signum() == g_hi.signum() {
        return Err(Error::out_of_range(
            "k",
            k,
            format!("between {} and {}", g_lo + k, g_hi + k),
        ));
    }
    for _ in 0..BISECT_ITERS {
        let mid = 0.5 * (lo + hi);
        if g(mid)?.signum() == g_lo.signum() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let m = 0.5 * (lo + hi);
    Ok(VirtualMass { m, residual: g(m)? })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonotonicityReport {
    pub n: Dimension,
    pub points: usize,
    pub pass: bool,
    /// Consecutive mass pairs where `k_plus` fails to increase.
    pub plus_violations: Vec<(f64, f64)>,
    /// Consecutive mass pairs where `k_minus` fails to decrease.
    pub minus_violations: Vec<(f64, f64)>,
}

pub const MIN_SCAN_POINTS: usize = 16;

/// Checks `k_plus` strictly increasing and `k_minus` strictly decreasing
/// over the (sorted) mass grid.
pub fn monotonicity_scan(n: Dimension, masses: &[f64]) -> Result<MonotonicityReport> {
    if masses.len() < MIN_SCAN_POINTS {
        return Err(Error::InsufficientGrid(format!(
            "{} masses given, at least {MIN_SCAN_POINTS} required",
            masses.len()
        )));
    }
    let mut grid = masses.to_vec();
    grid.sort_by(f64::total_cmp);
    let mut kp = Vec::with_capacity(grid.len());
    let mut km = Vec::with_capacity(grid.len());
    for &m in &grid {
        kp.push(surface_gravity(n, m, Side::Plus)?.k);
        km.push(surface_gravity(n, m, Side::Minus)?.k);
    }
    let mut plus_violations = Vec::new();
    let mut minus_violations = Vec::new();
    for i in 1..grid.len() {
        if kp[i] <= kp[i - 1] {
            plus_violations.push((grid[i - 1], grid[i]));
        }
        if km[i] >= km[i - 1] {
            minus_violations.push((grid[i - 1], grid[i]));
        }
    }
    Ok(MonotonicityReport {
        n,
        points: grid.len(),
        pass: plus_violations.is_empty() && minus_violations.is_empty(),
        plus_violations,
        minus_violations,
    })
}

/// Uniform grid of `points` masses on `[eps, 1 − eps] · m_max`.
pub fn mass_grid(n: Dimension, points: usize, eps: f64) -> Vec<f64> {
    let max = max_mass(n);
    let denom = points.saturating_sub(1).max(1) as f64;
    (0..points)
        .map(|i| max * (eps + (1.0 - 2.0 * eps) * i as f64 / denom))
        .collect()
}

static MONOTONE: [OnceLock<bool>; Dimension::MAX - Dimension::MIN + 1] =
    [const { OnceLock::new() }; Dimension::MAX - Dimension::MIN + 1];

/// Cached verdict of a 64-point scan, computed once per dimension.
pub fn is_monotone(n: Dimension) -> bool {
    *MONOTONE[n.get() - Dimension::MIN].get_or_init(|| {
        monotonicity_scan(n, &mass_grid(n, 64, 1e-3))
            .map(|r| r.pass)
            .unwrap_or(false)
    })
}

/// Model mass for a maximum set of areal radius `rho0`, `ρ0^n / (n−2)`.
pub fn mass_of_radius(n: Dimension, rho0: f64) -> f64 {
    rho0.powi(n.get() as i32) / (n.f() - 2.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dim(n: usize) -> Dimension {
        Dimension::new(n).unwrap()
    }

    #[test]
    fn gravity_examples() {
        let n = dim(3);
        let kp = surface_gravity(n, 0.1, Side::Plus).unwrap().k;
        let km = surface_gravity(n, 0.1, Side::Minus).unwrap().k;
        assert!((kp - 1.2603).abs() < 1e-3, "{kp}");
        assert!((km - 3.4923).abs() < 1e-3, "{km}");
        // independent root-bracketing values at 0.999 m_max; the gap to √3
        // closes like sqrt(m_max − m)
        let m = 0.999 * max_mass(n);
        let kp = surface_gravity(n, m, Side::Plus).unwrap().k;
        let km = surface_gravity(n, m, Side::Minus).unwrap().k;
        assert!((kp - 1.702919).abs() < 1e-5, "{kp}");
        assert!((km - 1.762595).abs() < 1e-5, "{km}");
        let m = 0.99999 * max_mass(n);
        for side in [Side::Plus, Side::Minus] {
            let k = surface_gravity(n, m, side).unwrap().k;
            assert!((k - 3f64.sqrt()).abs() < 4e-3);
        }
        let k = surface_gravity(n, 1e-6, Side::Plus).unwrap().k;
        assert!((k - 1.0).abs() < 1e-3);
    }

    #[test]
    fn classification() {
        let n = dim(3);
        assert_eq!(classify_region(n, 1.2603, DEFAULT_CLASS_TOL).unwrap(), RegionClass::Outer);
        assert_eq!(classify_region(n, 3f64.sqrt(), DEFAULT_CLASS_TOL).unwrap(), RegionClass::Cylindrical);
        assert_eq!(classify_region(n, 3.4923, DEFAULT_CLASS_TOL).unwrap(), RegionClass::Inner);
        assert!(classify_region(n, 0.0, DEFAULT_CLASS_TOL).is_err());
    }

    #[test]
    fn inversion_examples() {
        let n = dim(3);
        let m = virtual_mass(n, 1.2603, RegionClass::Outer).unwrap();
        assert!((m - 0.1).abs() < 1e-3);
        assert_eq!(virtual_mass(n, 3f64.sqrt(), RegionClass::Cylindrical).unwrap(), max_mass(n));
        assert!(virtual_mass(n, 0.5, RegionClass::Outer).is_err());
        assert!(virtual_mass(n, 2.0, RegionClass::Outer).is_err());
        assert!(virtual_mass(n, 1.5, RegionClass::Inner).is_err());
    }

    #[test]
    fn round_trip_all_dimensions() {
        for nn in 3..=8 {
            let n = dim(nn);
            for m in mass_grid(n, 9, 1e-2) {
                for (side, class) in [(Side::Plus, RegionClass::Outer), (Side::Minus, RegionClass::Inner)] {
                    let k = surface_gravity(n, m, side).unwrap().k;
                    let back = virtual_mass_with_residual(n, k, class).unwrap();
                    assert!((back.m - m).abs() <= 1e-8, "n={nn} m={m} {side:?}: {}", back.m);
                }
            }
        }
    }

    #[test]
    fn scans() {
        for nn in [3, 5] {
            let n = dim(nn);
            assert!(monotonicity_scan(n, &mass_grid(n, 64, 1e-3)).unwrap().pass);
            assert!(is_monotone(n));
        }
        assert!(matches!(
            monotonicity_scan(dim(3), &[0.1]),
            Err(Error::InsufficientGrid(_))
        ));
        let mut bad = mass_grid(dim(3), 16, 1e-2);
        bad[3] = bad[2];
        let r = monotonicity_scan(dim(3), &bad).unwrap();
        assert!(!r.pass);
        assert_eq!(r.plus_violations.len(), 1);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(64))]

            #[test]
            fn gravity_brackets_and_round_trip(n in 3usize..=8, frac in 1e-3f64..0.999) {
                let n = dim(n);
                let m = frac * max_mass(n);
                let s = n.f().sqrt();
                let kp = surface_gravity(n, m, Side::Plus).unwrap().k;
                let km = surface_gravity(n, m, Side::Minus).unwrap().k;
                prop_assert!(1.0 < kp && kp < s);
                prop_assert!(km > s);
                prop_assert_eq!(classify_region(n, kp, DEFAULT_CLASS_TOL).unwrap(), RegionClass::Outer);
                prop_assert_eq!(classify_region(n, km, DEFAULT_CLASS_TOL).unwrap(), RegionClass::Inner);
                prop_assert!((virtual_mass(n, kp, RegionClass::Outer).unwrap() - m).abs() <= 1e-8);
                prop_assert!((virtual_mass(n, km, RegionClass::Inner).unwrap() - m).abs() <= 1e-8);
            }
        }
    }
}

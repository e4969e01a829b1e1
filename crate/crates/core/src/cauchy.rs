//! Radial Cauchy evolution of warped static data from the lapse maximum set.
//!
//! In the Gauss gauge `g = dr² + ρ(r)² g_Σ` with `Ric(g_Σ) = (n−2) κ g_Σ`,
//! the static equations `Δu = −n u`, `u Ric = ∇²u + n u g` reduce to
//!
//! ```text
//! u' = v
//! v' = −n u − (n−1) (w/ρ) v
//! ρ' = w
//! w' = q0 v            (q0 = w/u, conserved)
//! ```
//!
//! together with the first integral `2ρwv = u[(n−2)(κ − w²) − nρ²]`, which
//! is monitored along the evolution. The radial `rr` equation reads
//! `ρ'' u = w v`; replacing it by `w' = q0 v` keeps the right-hand side
//! regular where `u` vanishes.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mass::{classify_region, virtual_mass, RegionClass, DEFAULT_CLASS_TOL};
use crate::model::{max_mass, BkParameters, Dimension, Side};
use crate::ode::{OdeSystem, Stepper, Stepping};
use crate::profile::{Family, ProfileSample, RadialProfile};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadialState {
    pub u: f64,
    pub v: f64,
    pub rho: f64,
    pub w: f64,
}

impl RadialState {
    fn to_array(self) -> [f64; 4] {
        [self.u, self.v, self.rho, self.w]
    }

    fn from_array(y: &[f64; 4]) -> Self {
        RadialState {
            u: y[0],
            v: y[1],
            rho: y[2],
            w: y[3],
        }
    }
}

/// `2ρwv − u[(n−2)(κ − w²) − nρ²]`; zero on exact solutions.
pub fn constraint_residual(s: &RadialState, n: Dimension, kappa: f64) -> f64 {
    let nf = n.f();
    2.0 * s.rho * s.w * s.v - s.u * ((nf - 2.0) * (kappa - s.w * s.w) - nf * s.rho * s.rho)
}

/// Umbilic Einstein data on the maximum set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CauchyData {
    pub n: Dimension,
    pub kappa: f64,
    pub rho0: f64,
    pub gauge: f64,
    /// `dρ/dr` at the maximum set, fixed by the constraint.
    pub w0: f64,
    /// Einstein constant of the induced metric, `κ / ρ0²`.
    pub lambda: f64,
}

impl CauchyData {
    /// Largest admissible areal radius, `sqrt(κ (n−2) / n)`.
    pub fn rho_bound(n: Dimension, kappa: f64) -> f64 {
        (kappa * (n.f() - 2.0) / n.f()).sqrt()
    }

    /// Same data with the normal orientation flipped (`w0 ↦ −w0`).
    pub fn reflected(&self) -> Self {
        CauchyData {
            w0: -self.w0,
            ..*self
        }
    }

    pub fn initial_state(&self) -> RadialState {
        RadialState {
            u: self.gauge,
            v: 0.0,
            rho: self.rho0,
            w: self.w0,
        }
    }

    /// Conserved ratio `w / u`.
    pub fn q0(&self) -> f64 {
        self.w0 / self.gauge
    }

    /// Mass of the model solution carrying this datum: `ρ0^n / (n−2)` when
    /// `w0 ≠ 0`, `m_max` for the Nariai datum.
    pub fn model_mass(&self) -> f64 {
        if self.w0 == 0.0 {
            max_mass(self.n)
        } else {
            self.rho0.powi(self.n.get() as i32) / (self.n.f() - 2.0)
        }
    }
}

pub fn initial_data(n: Dimension, rho0: f64, gauge: f64, kappa: f64) -> Result<CauchyData> {
    if !(kappa > 0.0 && kappa.is_finite()) {
        return Err(Error::out_of_range("kappa", kappa, "(0, inf)"));
    }
    if !(gauge > 0.0 && gauge.is_finite()) {
        return Err(Error::out_of_range("gauge", gauge, "(0, inf)"));
    }
    let bound = CauchyData::rho_bound(n, kappa);
    if !(rho0 > 0.0 && rho0 <= bound * (1.0 + 1e-14)) {
        return Err(Error::out_of_range("rho0", rho0, format!("(0, {bound}]")));
    }
    let nf = n.f();
    let w0_sq = kappa - nf * rho0 * rho0 / (nf - 2.0);
    // rounding at the Nariai bound
    let w0 = if w0_sq <= 4.0 * f64::EPSILON * kappa {
        0.0
    } else {
        w0_sq.sqrt()
    };
    Ok(CauchyData {
        n,
        kappa,
        rho0,
        gauge,
        w0,
        lambda: kappa / (rho0 * rho0),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvolveControls {
    pub stepping: Stepping,
    /// Largest `|r|` reached before giving up on a horizon.
    pub max_range: f64,
    /// Largest tolerated `|constraint residual|` at accepted steps.
    pub constraint_tol: f64,
    /// Width in `r` to which horizons are located.
    pub event_tol: f64,
}

impl Default for EvolveControls {
    fn default() -> Self {
        EvolveControls {
            stepping: Stepping::adaptive(1e-10),
            max_range: 10.0,
            constraint_tol: 1e-7,
            event_tol: 1e-12,
        }
    }
}

impl EvolveControls {
    pub fn with_tol(tol: f64) -> Self {
        EvolveControls {
            stepping: Stepping::adaptive(tol),
            ..Default::default()
        }
    }

    pub fn fixed(h: f64) -> Self {
        EvolveControls {
            stepping: Stepping::Fixed { h },
            ..Default::default()
        }
    }
}

/// A detected zero of the lapse.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HorizonData {
    pub side: Side,
    pub r_h: f64,
    pub rho_h: f64,
    /// `|du/dr| / gauge` at the horizon.
    pub k: f64,
}

#[derive(Debug, Clone)]
pub struct Evolution {
    pub profile: RadialProfile,
    pub horizon: Option<HorizonData>,
    pub constraint_max: f64,
    /// Largest `|w − q0 u|` along the evolution.
    pub ratio_drift_max: f64,
    pub steps: usize,
}

struct ReducedStatic {
    n: f64,
    q0: f64,
}

impl OdeSystem<4> for ReducedStatic {
    fn rhs(&self, _r: f64, y: &[f64; 4]) -> [f64; 4] {
        let [u, v, rho, w] = *y;
        [
            v,
            -self.n * u - (self.n - 1.0) * (w / rho) * v,
            w,
            self.q0 * v,
        ]
    }
}

/// Evolves the datum in the given direction until the lapse vanishes or
/// `max_range` is reached.
pub fn evolve(data: &CauchyData, direction: Side, controls: &EvolveControls) -> Result<Evolution> {
    let n = data.n;
    let q0 = data.q0();
    let sys = ReducedStatic { n: n.f(), q0 };
    let dir = direction.sign();
    let t_end = dir * controls.max_range;
    let mut stepper = Stepper::new(&sys, controls.stepping, 0.0, data.initial_state().to_array(), dir)?;

    let mut samples = vec![ProfileSample::from_state(0.0, data.initial_state(), 0.0)];
    let mut constraint_max = 0.0f64;
    let mut drift_max = 0.0f64;
    let mut horizon = None;

    let mut record = |r: f64, s: RadialState, samples: &mut Vec<ProfileSample>| -> Result<()> {
        if !(s.rho > 1e-8) {
            return Err(Error::Collapse { r, rho: s.rho });
        }
        let c = constraint_residual(&s, n, data.kappa);
        if !(c.abs() <= controls.constraint_tol) {
            return Err(Error::ConstraintDrift {
                r,
                residual: c,
                tol: controls.constraint_tol,
            });
        }
        constraint_max = constraint_max.max(c.abs());
        drift_max = drift_max.max((s.w - q0 * s.u).abs());
        samples.push(ProfileSample::from_state(r, s, c));
        Ok(())
    };

    while stepper.t() != t_end {
        let step = stepper.step(t_end)?;
        if step.y1[0] <= 0.0 {
            let (r_h, y) = if step.y1[0] == 0.0 {
                (step.t1, step.y1)
            } else {
                stepper.locate(&step, |y| y[0], controls.event_tol)?
            };
            let s = RadialState::from_array(&y);
            record(r_h, s, &mut samples)?;
            horizon = Some(HorizonData {
                side: direction,
                r_h,
                rho_h: s.rho,
                k: s.v.abs() / data.gauge,
            });
            break;
        }
        record(step.t1, RadialState::from_array(&step.y1), &mut samples)?;
    }

    if direction == Side::Minus {
        samples.reverse();
    }
    let steps = stepper.accepted;
    let profile = RadialProfile::new(n, data.kappa, data.gauge, Family::Evolved, None, samples)?;
    Ok(Evolution {
        profile,
        horizon,
        constraint_max,
        ratio_drift_max: drift_max,
        steps,
    })
}

/// Geometry of the maximum set read off a profile.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SigmaExtract {
    /// Mean curvature with respect to `∂/∂r`.
    pub h: f64,
    /// `|h̊|²`, identically zero for the warped ansatz.
    pub hring_sq: f64,
    /// Induced scalar curvature from Gauss–Codazzi, `n(n−1) + (n−2)/(n−1) H²`.
    pub r_sigma: f64,
    /// Induced scalar curvature from the fiber, `(n−1)(n−2) λ`.
    pub r_sigma_intrinsic: f64,
    pub lambda: f64,
}

pub fn extract_sigma_geometry(profile: &RadialProfile) -> Result<SigmaExtract> {
    let o = profile
        .origin()
        .ok_or_else(|| Error::Degenerate("profile has no r = 0 sample".into()))?;
    let nf = profile.n.f();
    let h = (nf - 1.0) * o.drhodr / o.rho;
    let lambda = profile.kappa / (o.rho * o.rho);
    Ok(SigmaExtract {
        h,
        hring_sq: 0.0,
        r_sigma: nf * (nf - 1.0) + (nf - 2.0) / (nf - 1.0) * h * h,
        r_sigma_intrinsic: (nf - 1.0) * (nf - 2.0) * lambda,
        lambda,
    })
}

/// Largest `|(u · u_max(m)/gauge)² − (1 − ρ² − 2m ρ^(2−n))|` over the
/// profile: the model lapse squared against the rescaled profile lapse.
pub fn compare_to_model(profile: &RadialProfile, m: f64) -> Result<f64> {
    let params = BkParameters::new(profile.n, m)?;
    if profile.kappa != 1.0 {
        return Err(Error::Degenerate(format!(
            "model comparison needs fiber constant 1, profile has {}",
            profile.kappa
        )));
    }
    let (lo, hi) = profile.rho_range();
    if hi - lo <= 1e-9 * hi.abs().max(1.0) {
        return Err(Error::Degenerate(format!(
            "profile areal radius is constant ({lo}); no model of mass {m} matches"
        )));
    }
    if hi < params.r_minus || lo > params.r_plus {
        return Err(Error::Degenerate(format!(
            "areal ranges disjoint: profile [{lo}, {hi}], model [{}, {}]",
            params.r_minus, params.r_plus
        )));
    }
    let scale = params.u_max / profile.gauge;
    Ok(profile
        .samples()
        .iter()
        .map(|s| {
            let u = s.u * scale;
            let f = 1.0 - s.rho * s.rho - 2.0 * m * s.rho.powf(2.0 - profile.n.f());
            (u * u - f).abs()
        })
        .fold(0.0, f64::max))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SideReport {
    pub side: Side,
    pub class: RegionClass,
    pub k: f64,
    pub mass: f64,
    pub r_h: f64,
    pub rho_h: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoundTripReport {
    pub n: Dimension,
    pub rho0: f64,
    pub expected_mass: f64,
    pub outer: SideReport,
    pub inner: SideReport,
    pub mass_gap: f64,
    pub constraint_max: f64,
    pub ratio_drift_max: f64,
    pub pass: bool,
}

/// Tolerance on recovered virtual masses in [`round_trip`].
pub const ROUND_TRIP_MASS_TOL: f64 = 1e-6;

/// Evolves the datum with `κ = 1` both ways, classifies each side from its
/// surface gravity and inverts both gravities to virtual masses.
pub fn round_trip(n: Dimension, rho0: f64, controls: &EvolveControls) -> Result<RoundTripReport> {
    let data = initial_data(n, rho0, 1.0, 1.0)?;
    let plus = evolve(&data, Side::Plus, controls)?;
    let minus = evolve(&data, Side::Minus, controls)?;
    let side_report = |e: &Evolution, side: Side| -> Result<SideReport> {
        let h = e.horizon.ok_or(Error::NoHorizon {
            max_range: controls.max_range,
        })?;
        let class = classify_region(n, h.k, DEFAULT_CLASS_TOL)?;
        let mass = virtual_mass(n, h.k, class)?;
        Ok(SideReport {
            side,
            class,
            k: h.k,
            mass,
            r_h: h.r_h,
            rho_h: h.rho_h,
        })
    };
    let outer = side_report(&plus, Side::Plus)?;
    let inner = side_report(&minus, Side::Minus)?;
    let expected_mass = data.model_mass();
    let classes_ok = if data.w0 == 0.0 {
        outer.class == RegionClass::Cylindrical && inner.class == RegionClass::Cylindrical
    } else {
        outer.class == RegionClass::Outer && inner.class == RegionClass::Inner
    };
    let pass = classes_ok
        && (outer.mass - expected_mass).abs() <= ROUND_TRIP_MASS_TOL
        && (inner.mass - expected_mass).abs() <= ROUND_TRIP_MASS_TOL;
    Ok(RoundTripReport {
        n,
        rho0,
        expected_mass,
        outer,
        inner,
        mass_gap: (outer.mass - inner.mass).abs(),
        constraint_max: plus.constraint_max.max(minus.constraint_max),
        ratio_drift_max: plus.ratio_drift_max.max(minus.ratio_drift_max),
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{critical_radii, lapse_max, nariai_radius};

    fn dim(n: usize) -> Dimension {
        Dimension::new(n).unwrap()
    }

    #[test]
    fn residual_vanishes_on_model_closed_form() {
        // symbolic oracle: w = u_model, v = (1/2) d(u²)/dρ at ρ = 0.6
        let (n, m, rho) = (dim(3), 0.1f64, 0.6f64);
        let f = 1.0 - rho * rho - 2.0 * m / rho;
        let s = RadialState {
            u: f.sqrt(),
            v: -rho + m / (rho * rho),
            rho,
            w: f.sqrt(),
        };
        assert!(constraint_residual(&s, n, 1.0).abs() < 1e-12);
        let bumped = RadialState { w: s.w + 1e-3, ..s };
        let first_order = 2.0 * rho * s.v * 1e-3 + s.u * 2.0 * s.w * 1e-3;
        let got = constraint_residual(&bumped, n, 1.0);
        assert!((got - first_order).abs() < 1e-5, "{got} vs {first_order}");
    }

    #[test]
    fn residual_vanishes_on_nariai_state() {
        let n = dim(3);
        let s = RadialState {
            u: 0.3,
            v: -1.2,
            rho: nariai_radius(n),
            w: 0.0,
        };
        assert!(constraint_residual(&s, n, 1.0).abs() < 1e-15);
    }

    #[test]
    fn initial_data_examples() {
        let n = dim(3);
        let umax = lapse_max(n, 0.1).unwrap();
        let d = initial_data(n, 0.1f64.cbrt(), umax, 1.0).unwrap();
        assert!((d.w0 - umax).abs() < 1e-14);
        assert!((d.w0 - 0.594701).abs() < 1e-6);
        let d = initial_data(n, (1.0f64 / 3.0).sqrt(), 0.7, 1.0).unwrap();
        assert_eq!(d.w0, 0.0);
        assert!((d.lambda - 3.0).abs() < 1e-14);
        assert!(initial_data(n, 0.99, 1.0, 1.0).is_err());
        assert!(initial_data(n, 0.3, 0.0, 1.0).is_err());
        assert!(d.lambda >= 3.0 - 1e-14);
    }

    #[test]
    fn bk_datum_reaches_model_horizons() {
        let n = dim(3);
        let (lo, hi) = critical_radii(n, 0.1).unwrap();
        let d = initial_data(n, 0.1f64.cbrt(), lapse_max(n, 0.1).unwrap(), 1.0).unwrap();
        let c = EvolveControls::default();
        let plus = evolve(&d, Side::Plus, &c).unwrap();
        let h = plus.horizon.unwrap();
        assert!((h.rho_h - hi).abs() < 1e-6, "{}", h.rho_h);
        let minus = evolve(&d, Side::Minus, &c).unwrap();
        let h = minus.horizon.unwrap();
        assert!((h.rho_h - lo).abs() < 1e-6);
        assert!(h.r_h < 0.0);
        assert!(minus.profile.samples().windows(2).all(|w| w[1].r > w[0].r));
    }

    #[test]
    fn nariai_datum_is_cosine() {
        let n = dim(3);
        let d = initial_data(n, nariai_radius(n), 2.0, 1.0).unwrap();
        let e = evolve(&d, Side::Plus, &EvolveControls::default()).unwrap();
        let h = e.horizon.unwrap();
        assert!((h.r_h - std::f64::consts::PI / (2.0 * 3f64.sqrt())).abs() < 1e-9);
        assert!((h.k - 3f64.sqrt()).abs() < 1e-8);
        for s in e.profile.samples() {
            assert_eq!(s.rho, nariai_radius(n));
            assert!((s.u - 2.0 * (3f64.sqrt() * s.r).cos()).abs() < 1e-8);
        }
    }

    #[test]
    fn no_horizon_within_short_range() {
        let n = dim(3);
        let d = initial_data(n, 0.4, 1.0, 1.0).unwrap();
        let c = EvolveControls {
            max_range: 0.05,
            ..Default::default()
        };
        let e = evolve(&d, Side::Plus, &c).unwrap();
        assert!(e.horizon.is_none());
        assert_eq!(e.profile.r_range().1, 0.05);
    }

    #[test]
    fn tight_constraint_tolerance_trips() {
        let n = dim(3);
        let d = initial_data(n, 0.4, 1.0, 1.0).unwrap();
        let c = EvolveControls {
            stepping: Stepping::Fixed { h: 0.2 },
            constraint_tol: 1e-14,
            ..Default::default()
        };
        assert!(matches!(
            evolve(&d, Side::Plus, &c),
            Err(Error::ConstraintDrift { .. })
        ));
    }

    #[test]
    fn sigma_geometry_of_datum() {
        let n = dim(3);
        let d = initial_data(n, 0.1f64.cbrt(), 1.0, 1.0).unwrap();
        let e = evolve(&d, Side::Plus, &EvolveControls::default()).unwrap();
        let g = extract_sigma_geometry(&e.profile).unwrap();
        let r0 = 0.1f64.cbrt();
        assert!((g.h - 2.5625).abs() < 1e-3);
        assert!((g.r_sigma - 2.0 / (r0 * r0)).abs() < 1e-12);
        assert!((g.r_sigma - g.r_sigma_intrinsic).abs() < 1e-12);
    }

    #[test]
    fn compare_rejects_nariai() {
        let n = dim(3);
        let d = initial_data(n, nariai_radius(n), 1.0, 1.0).unwrap();
        let e = evolve(&d, Side::Plus, &EvolveControls::default()).unwrap();
        assert!(matches!(compare_to_model(&e.profile, 0.1), Err(Error::Degenerate(_))));
    }

    mod props {
        use super::*;
        use crate::model::critical_radii;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(16))]

            #[test]
            fn initial_data_invariants(n in 3usize..=8, frac in 0.05f64..=1.0, kappa in 0.2f64..3.0) {
                let n = dim(n);
                let d = initial_data(n, frac * CauchyData::rho_bound(n, kappa), 1.0, kappa).unwrap();
                let nf = n.f();
                prop_assert!(d.w0 >= 0.0);
                prop_assert!(d.lambda >= nf / (nf - 2.0) * (1.0 - 1e-12));
                prop_assert!(constraint_residual(&d.initial_state(), n, kappa).abs() <= 8.0 * f64::EPSILON * kappa);
            }

            #[test]
            fn reflection_swaps_sides(n in 3usize..=5, frac in 0.3f64..0.95) {
                let n = dim(n);
                let d = initial_data(n, frac * CauchyData::rho_bound(n, 1.0), 1.0, 1.0).unwrap();
                let c = EvolveControls::default();
                let plus = evolve(&d, Side::Plus, &c).unwrap().horizon.unwrap();
                let minus = evolve(&d.reflected(), Side::Minus, &c).unwrap().horizon.unwrap();
                prop_assert!((plus.r_h + minus.r_h).abs() <= 1e-8);
                prop_assert!((plus.rho_h - minus.rho_h).abs() <= 1e-8);
                prop_assert!((plus.k - minus.k).abs() <= 1e-8);
            }

            #[test]
            fn surface_gravity_gauge_free(frac in 0.3f64..0.95, gauge in 0.1f64..10.0) {
                let n = dim(3);
                let d1 = initial_data(n, frac * CauchyData::rho_bound(n, 1.0), 1.0, 1.0).unwrap();
                let d2 = initial_data(n, d1.rho0, gauge, 1.0).unwrap();
                let c = EvolveControls::default();
                for side in [Side::Plus, Side::Minus] {
                    let a = evolve(&d1, side, &c).unwrap().horizon.unwrap();
                    let b = evolve(&d2, side, &c).unwrap().horizon.unwrap();
                    prop_assert!(a.k > 0.0);
                    prop_assert!((a.k - b.k).abs() <= 1e-8 * a.k);
                    prop_assert!((a.r_h - b.r_h).abs() <= 1e-8);
                }
                let (lo, hi) = critical_radii(n, d1.model_mass()).unwrap();
                let plus = evolve(&d1, Side::Plus, &c).unwrap().horizon.unwrap();
                prop_assert!((plus.rho_h - hi).abs() <= 1e-6);
                prop_assert!(lo < d1.rho0);
            }
        }
    }
}

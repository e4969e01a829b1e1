//! Taylor expansions at the maximum set and remainder-order checks.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{lapse_max, radius_zero, Dimension};

/// Extrinsic and ambient data of the maximum set entering the expansions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SigmaGeometry {
    /// Mean curvature.
    pub h: f64,
    /// `|h̊|²`
    pub hring_sq: f64,
    /// `|h|² = |h̊|² + H²/(n−1)`
    pub h_sq: f64,
    /// Ambient scalar curvature.
    pub r_scalar: f64,
    /// Induced scalar curvature.
    pub r_sigma: f64,
    /// `φ(f_max)` for the source `Δf = −φ(f)`.
    pub phi0: f64,
    /// `φ'(f_max)`
    pub phidot0: f64,
}

impl SigmaGeometry {
    /// Static vacuum data: `φ(f) = n f`, `R = n(n−1)`, `Ric(ν,ν) = 0`, and
    /// Gauss–Codazzi for the induced scalar curvature.
    pub fn static_data(n: Dimension, u_max: f64, h: f64, hring_sq: f64) -> Self {
        let nf = n.f();
        SigmaGeometry {
            h,
            hring_sq,
            h_sq: hring_sq + h * h / (nf - 1.0),
            r_scalar: nf * (nf - 1.0),
            r_sigma: nf * (nf - 1.0) + (nf - 2.0) / (nf - 1.0) * h * h - hring_sq,
            phi0: nf * u_max,
            phidot0: nf,
        }
    }
}

/// `f_max − φ0/2 r² + φ0/6 H r³ − φ0/24 [|h|² + 2H² + R − R_Σ − φ̇0] r⁴`.
pub fn expand_general_f(g: &SigmaGeometry, f_max: f64, r: f64) -> f64 {
    let c2 = -g.phi0 / 2.0;
    let c3 = g.phi0 / 6.0 * g.h;
    let c4 = -g.phi0 / 24.0 * (g.h_sq + 2.0 * g.h * g.h + g.r_scalar - g.r_sigma - g.phidot0);
    f_max + r * r * (c2 + r * (c3 + r * c4))
}

/// Coefficients of `r², r³, r⁴` in `u / u_max`.
pub fn lapse_coefficients(n: Dimension, h: f64, hring_sq: f64) -> [f64; 3] {
    let nf = n.f();
    [
        -nf / 2.0,
        nf / 6.0 * h,
        -nf / 24.0 * (2.0 * hring_sq + (nf + 1.0) / (nf - 1.0) * h * h - nf),
    ]
}

/// `u_max [1 − n/2 r² + n/6 H r³ − n/24 (2|h̊|² + (n+1)/(n−1) H² − n) r⁴]`.
pub fn expand_lapse(n: Dimension, u_max: f64, h: f64, hring_sq: f64, r: f64) -> f64 {
    let [c2, c3, c4] = lapse_coefficients(n, h, hring_sq);
    u_max * (1.0 + r * r * (c2 + r * (c3 + r * c4)))
}

/// `K = u_max/r_0 − H/(n−1)`; zero exactly on model data.
pub fn umbilic_defect(n: Dimension, m: f64, h: f64) -> Result<f64> {
    Ok(lapse_max(n, m)? / radius_zero(n, m)? - h / (n.f() - 1.0))
}

/// Coefficients of `1, r, r², r³` in `Ψ(u(r))`.
pub fn psi_coefficients(n: Dimension, m: f64, h: f64, hring_sq: f64) -> Result<[f64; 4]> {
    let nf = n.f();
    let u_max = lapse_max(n, m)?;
    let r0 = radius_zero(n, m)?;
    let k = u_max / r0 - h / (nf - 1.0);
    let c3 = (hring_sq - 2.0 * nf
        + (nf - 1.0) / 3.0 * k * ((nf - 4.0) * u_max / r0 - (nf + 2.0) * h / (nf - 1.0)))
        / 12.0;
    Ok([r0, u_max, u_max * (nf - 1.0) / 6.0 * k, u_max * c3])
}

/// Third-order expansion of `Ψ(u(r))` in the signed distance `r`.
pub fn expand_psi(n: Dimension, m: f64, h: f64, hring_sq: f64, r: f64) -> Result<f64> {
    let [c0, c1, c2, c3] = psi_coefficients(n, m, h, hring_sq)?;
    Ok(c0 + r * (c1 + r * (c2 + r * c3)))
}

/// `1 + 2(n−1)/3 · K r`, plus `|h̊|² r²/2` in second-order mode when `K = 0`.
pub fn expand_ratio(n: Dimension, m: f64, h: f64, r: f64) -> Result<f64> {
    let k = umbilic_defect(n, m, h)?;
    Ok(1.0 + 2.0 * (n.f() - 1.0) / 3.0 * k * r)
}

pub fn expand_ratio_second_order(n: Dimension, m: f64, h: f64, hring_sq: f64, r: f64) -> Result<f64> {
    let k = umbilic_defect(n, m, h)?;
    let first = 2.0 * (n.f() - 1.0) / 3.0 * k;
    Ok(if first == 0.0 {
        1.0 + 0.5 * hring_sq * r * r
    } else {
        1.0 + first * r
    })
}

/// `1 − 2/3 H r`.
pub fn expand_ratio_nariai(h: f64, r: f64) -> f64 {
    1.0 - 2.0 / 3.0 * h * r
}

pub fn expand_ratio_nariai_second_order(h: f64, hring_sq: f64, r: f64) -> f64 {
    if h == 0.0 {
        1.0 + 0.5 * hring_sq * r * r
    } else {
        expand_ratio_nariai(h, r)
    }
}

/// Limit of `|∇f|² / (f_max − f)` at a maximum with `Δf(p) < 0`: `−2 Δf(p)`.
pub fn gradient_limit(laplacian_at_p: f64) -> Result<f64> {
    if !(laplacian_at_p < 0.0 && laplacian_at_p.is_finite()) {
        return Err(Error::out_of_range("laplacian", laplacian_at_p, "(-inf, 0)"));
    }
    Ok(-2.0 * laplacian_at_p)
}

/// Smallest radius accepted by [`remainder_order`].
pub const MIN_REMAINDER_R: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RemainderRow {
    pub r: f64,
    pub exact: f64,
    pub expansion: f64,
    pub error: f64,
    /// `|error| / r^(p+1)`
    pub scaled: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RemainderReport {
    pub order: u32,
    pub rows: Vec<RemainderRow>,
    /// `scaled(r/2) / scaled(r)` for consecutive rows.
    pub growth: Vec<f64>,
    pub pass: bool,
}

/// Tabulates `|exact − expansion| / r^(p+1)` on a dyadic grid.
///
/// The check passes when the scaled remainder at every radius stays below
/// twice its value at each larger radius of the grid. A remainder that
/// vanishes faster than `r^(p+1)` (odd terms absent, for instance) passes;
/// one order short grows like `1/r` and fails.
pub fn remainder_order<E, A>(exact: E, expansion: A, order: u32, grid: &[f64]) -> Result<RemainderReport>
where
    E: Fn(f64) -> Result<f64>,
    A: Fn(f64) -> Result<f64>,
{
    if grid.len() < 2 {
        return Err(Error::InsufficientGrid(format!(
            "{} radii given, at least 2 required",
            grid.len()
        )));
    }
    let mut rs = grid.to_vec();
    rs.sort_by(|a, b| b.total_cmp(a));
    for &r in &rs {
        if !(r >= MIN_REMAINDER_R && r.is_finite()) {
            return Err(Error::out_of_range("r", r, format!("[{MIN_REMAINDER_R}, inf)")));
        }
    }
    for w in rs.windows(2) {
        if ((w[1] * 2.0 - w[0]) / w[0]).abs() > 1e-9 {
            return Err(Error::InsufficientGrid(format!(
                "grid is not dyadic: {} then {}",
                w[0], w[1]
            )));
        }
    }
    let mut rows = Vec::with_capacity(rs.len());
    for &r in &rs {
        let e = exact(r)?;
        let a = expansion(r)?;
        let error = e - a;
        rows.push(RemainderRow {
            r,
            exact: e,
            expansion: a,
            error,
            scaled: error.abs() / r.powi(order as i32 + 1),
        });
    }
    let growth: Vec<f64> = rows
        .windows(2)
        .map(|w| {
            if w[0].scaled == 0.0 {
                if w[1].scaled == 0.0 {
                    1.0
                } else {
                    f64::INFINITY
                }
            } else {
                w[1].scaled / w[0].scaled
            }
        })
        .collect();
    // cumulative: no smaller radius may exceed twice any larger one
    let pass = rows.iter().enumerate().all(|(i, a)| {
        rows[i + 1..]
            .iter()
            .all(|b| b.scaled.is_finite() && b.scaled < 2.0 * a.scaled || b.scaled == 0.0)
    });
    Ok(RemainderReport {
        order,
        rows,
        growth,
        pass,
    })
}

/// The dyadic grid `{0.1, 0.05, 0.025, 0.0125}`.
pub fn default_remainder_grid() -> Vec<f64> {
    (0..4).map(|k| 0.1 / f64::from(1u32 << k)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cauchy::{evolve, initial_data, EvolveControls};
    use crate::model::{BkParameters, BkSolution, Side};
    use crate::pseudo_radial::{Branch, PseudoRadial};

    fn dim(n: usize) -> Dimension {
        Dimension::new(n).unwrap()
    }

    fn bk(n: usize, m: f64) -> BkSolution {
        BkSolution::new(BkParameters::new(dim(n), m).unwrap(), None).unwrap()
    }

    #[test]
    fn general_reduces_to_static() {
        for nn in 3..=8 {
            let n = dim(nn);
            for (u_max, h, hr) in [(0.59, 2.5625, 0.0), (1.0, 0.0, 0.0), (0.3, -1.2, 0.7), (2.0, 4.0, 3.0)] {
                let g = SigmaGeometry::static_data(n, u_max, h, hr);
                for r in [0.0, 0.03, 0.1, 0.5, -0.2] {
                    let a = expand_general_f(&g, u_max, r);
                    let b = expand_lapse(n, u_max, h, hr, r);
                    assert!((a - b).abs() < 1e-12, "n={nn} r={r}");
                }
            }
        }
        let zero = SigmaGeometry {
            h: 0.0,
            hring_sq: 0.0,
            h_sq: 0.0,
            r_scalar: 0.0,
            r_sigma: 0.0,
            phi0: 0.0,
            phidot0: 0.0,
        };
        assert_eq!(expand_general_f(&zero, 0.0, 0.7), 0.0);
    }

    #[test]
    fn lapse_coefficient_examples() {
        let n = dim(3);
        let [c2, c3, c4] = lapse_coefficients(n, 2.5625, 0.0);
        assert_eq!(c2, -1.5);
        assert!((c3 - 1.28125).abs() < 1e-12);
        assert!((c4 + 1.26659).abs() < 1e-3);
        assert_eq!(lapse_coefficients(n, 0.0, 0.0), [-1.5, 0.0, 0.375]);
        let g = SigmaGeometry::static_data(n, 0.594701, 2.5625, 0.0);
        assert!((g.r_sigma - 9.2832).abs() < 1e-4);
    }

    #[test]
    fn bk_remainders() {
        for (nn, m) in [(3, 0.1), (4, 0.05), (5, 0.03)] {
            let s = bk(nn, m);
            let p = s.params;
            let h = (nn as f64 - 1.0) * p.u_max / p.r_zero;
            let grid = default_remainder_grid();
            let rep = remainder_order(
                |r| Ok(s.sample_at(r)?.u),
                |r| Ok(expand_lapse(p.n, p.u_max, h, 0.0, r)),
                4,
                &grid,
            )
            .unwrap();
            assert!(rep.pass, "{rep:?}");
            let trunc = remainder_order(
                |r| Ok(s.sample_at(r)?.u),
                |r| Ok(p.u_max * (1.0 - p.n.f() / 2.0 * r * r)),
                4,
                &grid,
            )
            .unwrap();
            assert!(!trunc.pass);
            let rep = remainder_order(
                |r| Ok(s.sample_at(r)?.rho),
                |r| expand_psi(p.n, m, h, 0.0, r),
                3,
                &grid,
            )
            .unwrap();
            assert!(rep.pass, "{rep:?}");
        }
    }

    #[test]
    fn nariai_remainder() {
        let n = dim(3);
        let rep = remainder_order(
            |r| Ok((3f64.sqrt() * r).cos()),
            |r| Ok(expand_lapse(n, 1.0, 0.0, 0.0, r)),
            4,
            &default_remainder_grid(),
        )
        .unwrap();
        assert!(rep.pass);
    }

    #[test]
    fn psi_examples() {
        let n = dim(3);
        let p = BkParameters::new(n, 0.1).unwrap();
        let h = 2.0 * p.u_max / p.r_zero;
        assert!((expand_psi(n, 0.1, h, 0.0, 0.0).unwrap() - p.r_zero).abs() < 1e-15);
        let v = expand_psi(n, 0.1, h, 0.0, 0.05).unwrap();
        assert!((v - 0.493857).abs() < 1e-4);
        let c = psi_coefficients(n, 0.1, h, 0.0).unwrap();
        assert!(c[2].abs() < 1e-14);
        assert!((c[3] + 0.5 * p.u_max).abs() < 1e-14);
    }

    #[test]
    fn ratio_examples() {
        let n = dim(3);
        let p = BkParameters::new(n, 0.1).unwrap();
        let h = 2.0 * p.u_max / p.r_zero;
        assert!((expand_ratio(n, 0.1, h, 0.07).unwrap() - 1.0).abs() < 1e-14);
        let v = expand_ratio(n, 0.1, 2.0, 0.01).unwrap();
        assert!((v - 1.00375).abs() < 1e-5);
        assert_eq!(expand_ratio_nariai(0.0, 0.3), 1.0);
        assert_eq!(expand_ratio_nariai_second_order(0.0, 0.5, 0.2), 1.01);
        assert!(gradient_limit(0.0).is_err());
        assert_eq!(gradient_limit(-2.0).unwrap(), 4.0);
    }

    #[test]
    fn grid_validation() {
        let f = |r: f64| Ok(r);
        assert!(remainder_order(f, f, 4, &[0.1]).is_err());
        assert!(remainder_order(f, f, 4, &[0.1, 0.04]).is_err());
        assert!(remainder_order(f, f, 4, &[0.002, 0.001, 0.0005]).is_err());
        assert!(remainder_order(f, f, 4, &[0.1, 0.05]).unwrap().pass);
    }

    fn integrate_to(data: &crate::cauchy::CauchyData, r: f64) -> crate::profile::ProfileSample {
        let side = if r >= 0.0 { Side::Plus } else { Side::Minus };
        let c = EvolveControls {
            max_range: r.abs(),
            ..EvolveControls::with_tol(1e-13)
        };
        let e = evolve(data, side, &c).unwrap();
        assert!(e.horizon.is_none());
        let s = e.profile.samples();
        if r >= 0.0 { s[s.len() - 1] } else { s[0] }
    }

    // Evolved data with ρ0 away from r0(m) and gauge u_max(m) has K ≠ 0,
    // which exercises the K-dependent terms of the Ψ and ratio expansions.
    #[test]
    fn k_terms_against_evolved_data() {
        for (nn, m, rho0) in [(3, 0.1, 0.42), (3, 0.1, 0.5), (4, 0.05, 0.5)] {
            let n = dim(nn);
            let pr = PseudoRadial::new(n, m).unwrap();
            let data = initial_data(n, rho0, pr.params.u_max, 1.0).unwrap();
            let h = (n.f() - 1.0) * data.w0 / rho0;
            assert!(umbilic_defect(n, m, h).unwrap().abs() > 0.05);
            let at = |r: f64| integrate_to(&data, r);
            for sign in [1.0, -1.0] {
                let branch = if sign > 0.0 { Branch::Outer } else { Branch::Inner };
                let grid: Vec<f64> = default_remainder_grid().iter().map(|r| r * 0.5).collect();
                let rep = remainder_order(
                    |r| pr.psi(at(sign * r).u, branch),
                    |r| expand_psi(n, m, h, 0.0, sign * r),
                    3,
                    &grid,
                )
                .unwrap();
                assert!(rep.pass, "psi n={nn} rho0={rho0} sign={sign} {rep:?}");
                let rep = remainder_order(
                    |r| {
                        let s = at(sign * r);
                        pr.gradient_ratio(s.u, s.dudr.abs(), branch)
                    },
                    |r| expand_ratio(n, m, h, sign * r),
                    1,
                    &grid,
                )
                .unwrap();
                assert!(rep.pass, "ratio n={nn} rho0={rho0} sign={sign} {rep:?}");
            }
        }
    }

    #[test]
    fn k_term_coefficient_is_detected() {
        let (n, m, rho0) = (dim(3), 0.1, 0.42);
        let pr = PseudoRadial::new(n, m).unwrap();
        let data = initial_data(n, rho0, pr.params.u_max, 1.0).unwrap();
        let h = 2.0 * data.w0 / rho0;
        let (u_max, r0) = (pr.params.u_max, pr.params.r_zero);
        let k = u_max / r0 - h / 2.0;
        let [c0, c1, c2, c3] = psi_coefficients(n, m, h, 0.0).unwrap();
        // K-term of the cubic coefficient scaled by 1/3
        let kterm = u_max / 12.0 * (2.0 / 3.0) * k * (-u_max / r0 - 2.5 * h);
        let wrong = c3 - kterm + kterm / 3.0;
        let grid: Vec<f64> = default_remainder_grid().iter().map(|r| r * 0.5).collect();
        let rep = remainder_order(
            |r| pr.psi(integrate_to(&data, r).u, Branch::Outer),
            |r| Ok(c0 + r * (c1 + r * (c2 + r * wrong))),
            3,
            &grid,
        )
        .unwrap();
        assert!(!rep.pass, "{rep:?}");
    }

    #[test]
    fn nariai_ratio_expansion_against_evolved_data() {
        let n = dim(3);
        let data = initial_data(n, 0.45, 1.0, 1.0).unwrap();
        let h = (n.f() - 1.0) * data.w0 / data.rho0;
        let rep = remainder_order(
            |r| {
                let s = integrate_to(&data, r);
                crate::pseudo_radial::nariai_ratio(n, s.u, s.dudr.abs())
            },
            |r| Ok(expand_ratio_nariai(h, r)),
            1,
            &[0.05, 0.025, 0.0125, 0.00625],
        )
        .unwrap();
        assert!(rep.pass, "{rep:?}");
    }

    #[test]
    fn taylor_coefficients_by_finite_differences() {
        // u'' comes from the ODE at each sample; u''' and u'''' by
        // Richardson-extrapolated central differences of u''.
        for nn in [3, 4, 5] {
            let mf = crate::model::max_mass(dim(nn));
            for frac in [0.2, 0.5, 0.8] {
                let s = bk(nn, frac * mf);
                let p = s.params;
                let nf = nn as f64;
                let upp = |r: f64| {
                    let x = s.sample_at(r).unwrap();
                    -nf * x.u - (nf - 1.0) * x.drhodr / x.rho * x.dudr
                };
                let d3 = |h: f64| (upp(h) - upp(-h)) / (2.0 * h);
                let d4 = |h: f64| (upp(h) - 2.0 * upp(0.0) + upp(-h)) / (h * h);
                let rich = |d: &dyn Fn(f64) -> f64, h: f64| (4.0 * d(h / 2.0) - d(h)) / 3.0;
                let hcurv = (nf - 1.0) * p.u_max / p.r_zero;
                let [c2, c3, c4] = lapse_coefficients(p.n, hcurv, 0.0);
                let got2 = upp(0.0) / 2.0 / p.u_max;
                let got3 = rich(&d3, 0.02) / 6.0 / p.u_max;
                let got4 = rich(&d4, 0.02) / 24.0 / p.u_max;
                assert!(((got2 - c2) / c2).abs() < 1e-4, "n={nn} c2");
                assert!(((got3 - c3) / c3).abs() < 1e-4, "n={nn} c3 {got3} {c3}");
                assert!(((got4 - c4) / c4).abs() < 1e-4, "n={nn} c4 {got4} {c4}");
            }
        }
    }

    #[test]
    fn gradient_limit_along_bk() {
        for (nn, m) in [(3, 0.1), (4, 0.05), (5, 0.03)] {
            let s = bk(nn, m);
            let lim = gradient_limit(-(nn as f64) * s.params.u_max).unwrap();
            let q = |r: f64| {
                let x = s.sample_at(r).unwrap();
                x.dudr * x.dudr / (s.params.u_max - x.u)
            };
            let e2 = (q(1e-2) - lim).abs();
            let e3 = (q(1e-3) - lim).abs();
            assert!(e3 < e2 && e3 / lim < 1e-2, "n={nn}");
            // first order in r
            assert!((e2 / e3 - 10.0).abs() < 1.0, "n={nn} {}", e2 / e3);
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn sigma_geometry_invariants(n in 3usize..=8, u_max in 0.01f64..1.0, h in -5f64..5.0, hr in 0f64..5.0) {
                let n = Dimension::new(n).unwrap();
                let nf = n.f();
                let g = SigmaGeometry::static_data(n, u_max, h, hr);
                prop_assert!(g.h_sq >= g.h * g.h / (nf - 1.0));
                prop_assert_eq!(g.phi0, nf * u_max);
                prop_assert_eq!(g.phidot0, nf);
                prop_assert_eq!(g.r_scalar, nf * (nf - 1.0));
            }
        }
    }
}

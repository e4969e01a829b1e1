//! Closed-form Birmingham–Kottler, Nariai and de Sitter model data.
//!
//! The model lapse in areal form is `u² = 1 − ρ² − 2m ρ^(2−n)`, static
//! between the two positive roots `r_minus < r_plus`, with its maximum at
//! `r_zero = ((n−2) m)^(1/n)`. Profiles are produced in the Gauss gauge
//! `g = dr² + ρ(r)² g_Σ`, with `r` the signed distance to the maximum set.

use serde::{Deserialize, Serialize};

use crate::cauchy::{constraint_residual, RadialState};
use crate::error::{Error, Result};
use crate::numeric::{adaptive_simpson, bracketed_root};
use crate::profile::{Family, ProfileSample, RadialProfile};

/// Spatial dimension, restricted to `3..=8`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "usize", into = "usize")]
pub struct Dimension(usize);

impl Dimension {
    pub const MIN: usize = 3;
    pub const MAX: usize = 8;

    pub fn new(n: usize) -> Result<Self> {
        if (Self::MIN..=Self::MAX).contains(&n) {
            Ok(Dimension(n))
        } else {
            Err(Error::UnsupportedDimension(n))
        }
    }

    pub fn get(self) -> usize {
        self.0
    }

    pub(crate) fn f(self) -> f64 {
        self.0 as f64
    }
}

impl TryFrom<usize> for Dimension {
    type Error = Error;
    fn try_from(n: usize) -> Result<Self> {
        Dimension::new(n)
    }
}

impl From<Dimension> for usize {
    fn from(n: Dimension) -> usize {
        n.0
    }
}

impl std::fmt::Display for Dimension {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        self.0.fmt(f)
    }
}

/// Masses above `(1 − NEAR_EXTREMAL) · m_max` are refused by profile generators.
pub const NEAR_EXTREMAL: f64 = 1e-6;

/// `m_max = sqrt((n−2)^(n−2) / n^n)`.
pub fn max_mass(n: Dimension) -> f64 {
    let nf = n.f();
    let k = n.get() as i32;
    ((nf - 2.0).powi(k - 2) / nf.powi(k)).sqrt()
}

pub(crate) fn check_mass(n: Dimension, m: f64) -> Result<()> {
    let max = max_mass(n);
    if m.is_finite() && m > 0.0 && m < max {
        Ok(())
    } else {
        Err(Error::MassOutOfRange { n: n.get(), m, max })
    }
}

/// Model lapse squared `1 − ρ² − 2m ρ^(2−n)` and its `ρ`-derivative.
pub fn lapse_squared(n: Dimension, m: f64, rho: f64) -> Result<(f64, f64)> {
    if !(rho > 0.0 && rho.is_finite()) {
        return Err(Error::out_of_range("rho", rho, "(0, inf)"));
    }
    Ok(lapse_sq_pair(n, m, rho))
}

fn lapse_sq_pair(n: Dimension, m: f64, rho: f64) -> (f64, f64) {
    let nf = n.f();
    let p = rho.powf(2.0 - nf);
    let value = 1.0 - rho * rho - 2.0 * m * p;
    let slope = -2.0 * rho + 2.0 * m * (nf - 2.0) * p / rho;
    (value, slope)
}

/// `F(root + d) / d` for a root of `F(ρ) = 1 − ρ² − 2m ρ^(2−n)`, evaluated
/// without cancellation for small `d`.
fn lapse_sq_quotient(n: Dimension, m: f64, root: f64, d: f64) -> f64 {
    let a = 2.0 - n.f();
    // expm1(a ln(1 + d/root)) / d, with its d -> 0 limit a / root
    let e = if d == 0.0 {
        a / root
    } else {
        (a * (d / root).ln_1p()).exp_m1() / d
    };
    -(2.0 * root + d) - 2.0 * m * root.powf(a) * e
}

/// `((n−2) m)^(1/n)`, the areal radius of the lapse maximum.
pub fn radius_zero(n: Dimension, m: f64) -> Result<f64> {
    check_mass(n, m)?;
    Ok(((n.f() - 2.0) * m).powf(1.0 / n.f()))
}

/// Maximum of the model lapse, `sqrt(1 − n r_zero² / (n−2))`.
pub fn lapse_max(n: Dimension, m: f64) -> Result<f64> {
    let r0 = radius_zero(n, m)?;
    Ok(lapse_max_from_r0(n, r0))
}

fn lapse_max_from_r0(n: Dimension, r0: f64) -> f64 {
    let nf = n.f();
    (1.0 - nf * r0 * r0 / (nf - 2.0)).max(0.0).sqrt()
}

/// The two positive roots `(r_minus, r_plus)` of the model lapse squared.
pub fn critical_radii(n: Dimension, m: f64) -> Result<(f64, f64)> {
    let r0 = radius_zero(n, m)?;
    let f = |r: f64| lapse_sq_pair(n, m, r).0;
    if f(r0) <= 0.0 {
        return Err(Error::MassOutOfRange {
            n: n.get(),
            m,
            max: max_mass(n),
        });
    }
    let mut lo = 1e-3 * r0;
    while f(lo) >= 0.0 {
        lo *= 0.5;
    }
    let tol = 4.0 * f64::EPSILON;
    let r_minus = bracketed_root(f, lo, r0, tol * r0)?;
    let r_plus = bracketed_root(f, r0, 1.0, tol)?;
    Ok((r_minus, r_plus))
}

/// Which horizon of the model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Minus,
    Plus,
}

impl Side {
    pub fn sign(self) -> f64 {
        match self {
            Side::Minus => -1.0,
            Side::Plus => 1.0,
        }
    }
}

impl std::str::FromStr for Side {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "minus" | "inner" | "-" => Ok(Side::Minus),
            "plus" | "outer" | "+" => Ok(Side::Plus),
            other => Err(Error::UnknownName(other.to_string())),
        }
    }
}

/// Validated model parameters with cached radii and lapse maximum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BkParameters {
    pub n: Dimension,
    pub m: f64,
    pub r_minus: f64,
    pub r_plus: f64,
    pub r_zero: f64,
    pub u_max: f64,
}

impl BkParameters {
    pub fn new(n: Dimension, m: f64) -> Result<Self> {
        let r_zero = radius_zero(n, m)?;
        let (r_minus, r_plus) = critical_radii(n, m)?;
        Ok(BkParameters {
            n,
            m,
            r_minus,
            r_plus,
            r_zero,
            u_max: lapse_max_from_r0(n, r_zero),
        })
    }

    pub fn horizon(&self, side: Side) -> f64 {
        match side {
            Side::Minus => self.r_minus,
            Side::Plus => self.r_plus,
        }
    }

    /// Lapse squared, evaluated relative to the nearer horizon when close to it.
    pub fn lapse_sq(&self, rho: f64) -> f64 {
        let near = if (rho - self.r_plus).abs() < (rho - self.r_minus).abs() {
            self.r_plus
        } else {
            self.r_minus
        };
        let d = rho - near;
        if d.abs() < 0.25 * (self.r_plus - self.r_minus) {
            d * lapse_sq_quotient(self.n, self.m, near, d)
        } else {
            lapse_sq_pair(self.n, self.m, rho).0
        }
    }

    pub fn lapse_sq_slope(&self, rho: f64) -> f64 {
        lapse_sq_pair(self.n, self.m, rho).1
    }

    fn reject_near_extremal(&self) -> Result<()> {
        let max = max_mass(self.n);
        if self.m > (1.0 - NEAR_EXTREMAL) * max {
            Err(Error::NearExtremal { m: self.m, max })
        } else {
            Ok(())
        }
    }
}

/// Sampling controls for profile generators.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridControls {
    /// Samples per side between the maximum set and the horizon window.
    pub interior: usize,
    /// Samples per side inside the horizon window.
    pub window: usize,
    /// Absolute quadrature tolerance per sample interval.
    pub quad_tol: f64,
}

impl Default for GridControls {
    fn default() -> Self {
        GridControls {
            interior: 400,
            window: 200,
            quad_tol: 1e-15,
        }
    }
}

/// The model solution in the Gauss gauge, with lapse normalised so that
/// `u(0) = gauge`.
#[derive(Debug, Clone, Copy)]
pub struct BkSolution {
    pub params: BkParameters,
    pub gauge: f64,
    quad_tol: f64,
}

impl BkSolution {
    pub fn new(params: BkParameters, gauge: Option<f64>) -> Result<Self> {
        let gauge = gauge.unwrap_or(params.u_max);
        if !(gauge > 0.0 && gauge.is_finite()) {
            return Err(Error::out_of_range("gauge", gauge, "(0, inf)"));
        }
        Ok(BkSolution {
            params,
            gauge,
            quad_tol: 1e-15,
        })
    }

    fn scale(&self) -> f64 {
        self.gauge / self.params.u_max
    }

    fn window_start(&self, side: Side) -> f64 {
        let p = &self.params;
        match side {
            Side::Plus => p.r_plus - 0.25 * (p.r_plus - p.r_zero),
            Side::Minus => p.r_minus + 0.25 * (p.r_zero - p.r_minus),
        }
    }

    /// `dr/ds` inside the horizon window where `ρ = r_h ∓ s²`.
    fn window_integrand(&self, side: Side, s: f64) -> f64 {
        let p = &self.params;
        let root = p.horizon(side);
        let d = match side {
            Side::Plus => -s * s,
            Side::Minus => s * s,
        };
        let q = side.sign() * -lapse_sq_quotient(p.n, p.m, root, d);
        2.0 / q.sqrt()
    }

    fn interior_integral(&self, a: f64, b: f64) -> Result<f64> {
        adaptive_simpson(|rho| 1.0 / self.params.lapse_sq(rho).sqrt(), a, b, self.quad_tol)
    }

    fn window_integral(&self, side: Side, s_a: f64, s_b: f64) -> Result<f64> {
        adaptive_simpson(|s| self.window_integrand(side, s), s_a, s_b, self.quad_tol)
    }

    /// Signed geodesic coordinate of the areal radius `rho` on the given side.
    pub fn r_of_rho(&self, rho: f64, side: Side) -> Result<f64> {
        let p = &self.params;
        let (lo, hi) = match side {
            Side::Plus => (p.r_zero, p.r_plus),
            Side::Minus => (p.r_minus, p.r_zero),
        };
        if !(rho >= lo && rho <= hi) {
            return Err(Error::out_of_range("rho", rho, format!("[{lo}, {hi}]")));
        }
        let rw = self.window_start(side);
        let root = p.horizon(side);
        let dist = match side {
            Side::Plus => self.interior_integral(p.r_zero, rho.min(rw))?,
            Side::Minus => self.interior_integral(rho.max(rw), p.r_zero)?,
        };
        let inside = match side {
            Side::Plus => rho > rw,
            Side::Minus => rho < rw,
        };
        let extra = if inside {
            let s_w = (rw - root).abs().sqrt();
            let s = (rho - root).abs().sqrt();
            self.window_integral(side, s, s_w)?
        } else {
            0.0
        };
        Ok(side.sign() * (dist + extra))
    }

    /// Geodesic distance from the maximum set to the horizon on `side`.
    pub fn horizon_distance(&self, side: Side) -> Result<f64> {
        Ok(self.r_of_rho(self.params.horizon(side), side)?.abs())
    }

    /// Areal radius at signed geodesic coordinate `r`.
    pub fn rho_of_r(&self, r: f64) -> Result<f64> {
        let p = &self.params;
        if r == 0.0 {
            return Ok(p.r_zero);
        }
        let side = if r > 0.0 { Side::Plus } else { Side::Minus };
        let reach = self.horizon_distance(side)?;
        if r.abs() > reach {
            return Err(Error::out_of_range("r", r, format!("|r| <= {reach}")));
        }
        let (lo, hi) = match side {
            Side::Plus => (p.r_zero, p.r_plus),
            Side::Minus => (p.r_minus, p.r_zero),
        };
        bracketed_root(
            |rho| self.r_of_rho(rho, side).map_or(f64::NAN, |x| x - r),
            lo,
            hi,
            2.0 * f64::EPSILON,
        )
    }

    /// Full state at areal radius `rho` on the given side.
    pub fn sample_at_rho(&self, rho: f64, side: Side) -> Result<ProfileSample> {
        let r = self.r_of_rho(rho, side)?;
        Ok(self.sample(r, rho))
    }

    /// Full state at signed geodesic coordinate `r`.
    pub fn sample_at(&self, r: f64) -> Result<ProfileSample> {
        let rho = self.rho_of_r(r)?;
        Ok(self.sample(r, rho))
    }

    fn sample(&self, r: f64, rho: f64) -> ProfileSample {
        let p = &self.params;
        let w = p.lapse_sq(rho).max(0.0).sqrt();
        let u = self.scale() * w;
        let v = if rho == p.r_zero {
            0.0
        } else {
            0.5 * self.scale() * p.lapse_sq_slope(rho)
        };
        let state = RadialState { u, v, rho, w };
        ProfileSample::from_state(r, state, constraint_residual(&state, p.n, 1.0))
    }
}

/// Model profile on `[r(r_minus), r(r_plus)]` in the Gauss gauge.
pub fn bk_profile(
    params: &BkParameters,
    gauge: Option<f64>,
    grid: &GridControls,
) -> Result<RadialProfile> {
    params.reject_near_extremal()?;
    if grid.interior < 4 || grid.window < 4 {
        return Err(Error::InsufficientGrid(format!(
            "need at least 4 interior and 4 window samples per side, got {} and {}",
            grid.interior, grid.window
        )));
    }
    let mut sol = BkSolution::new(*params, gauge)?;
    sol.quad_tol = grid.quad_tol;

    let mut samples = Vec::with_capacity(2 * (grid.interior + grid.window) + 1);
    let plus = side_samples(&sol, Side::Plus, grid)?;
    let minus = side_samples(&sol, Side::Minus, grid)?;
    samples.extend(minus.into_iter().rev());
    samples.push(sol.sample(0.0, params.r_zero));
    samples.extend(plus);

    RadialProfile::new(
        params.n,
        1.0,
        sol.gauge,
        Family::Bk,
        Some(params.m),
        samples,
    )
}

fn side_samples(sol: &BkSolution, side: Side, grid: &GridControls) -> Result<Vec<ProfileSample>> {
    let p = &sol.params;
    let rw = sol.window_start(side);
    let root = p.horizon(side);
    let mut out = Vec::with_capacity(grid.interior + grid.window);
    let mut dist = 0.0;
    let mut prev = p.r_zero;
    for i in 1..=grid.interior {
        let rho = p.r_zero + (rw - p.r_zero) * i as f64 / grid.interior as f64;
        dist += match side {
            Side::Plus => sol.interior_integral(prev, rho)?,
            Side::Minus => sol.interior_integral(rho, prev)?,
        };
        out.push(sol.sample(side.sign() * dist, rho));
        prev = rho;
    }
    let s_w = (rw - root).abs().sqrt();
    let mut s_prev = s_w;
    for j in 1..=grid.window {
        let s = s_w * (1.0 - j as f64 / grid.window as f64);
        dist += sol.window_integral(side, s, s_prev)?;
        let rho = if j == grid.window {
            root
        } else {
            root - side.sign() * s * s
        };
        out.push(sol.sample(side.sign() * dist, rho));
        s_prev = s;
    }
    Ok(out)
}

/// Areal radius of the Nariai solution, `sqrt((n−2)/n)`.
pub fn nariai_radius(n: Dimension) -> f64 {
    ((n.f() - 2.0) / n.f()).sqrt()
}

/// Nariai profile `u = gauge · cos(√n r)`, `ρ ≡ sqrt((n−2)/n)` on
/// `|r| ≤ π / (2√n)`.
pub fn nariai_profile(n: Dimension, gauge: Option<f64>, samples: usize) -> Result<RadialProfile> {
    let gauge = gauge.unwrap_or(1.0);
    if !(gauge > 0.0 && gauge.is_finite()) {
        return Err(Error::out_of_range("gauge", gauge, "(0, inf)"));
    }
    if samples < 4 {
        return Err(Error::InsufficientGrid(format!(
            "need at least 4 samples per side, got {samples}"
        )));
    }
    let k = n.f().sqrt();
    let rho = nariai_radius(n);
    let reach = std::f64::consts::FRAC_PI_2 / k;
    let total = 2 * samples;
    let out = (0..=total)
        .map(|i| {
            let r = if i == samples {
                0.0
            } else if i == total {
                reach
            } else if i == 0 {
                -reach
            } else {
                reach * (i as f64 - samples as f64) / samples as f64
            };
            let (s, c) = (k * r).sin_cos();
            let u = if i == 0 || i == total { 0.0 } else { gauge * c };
            let state = RadialState {
                u,
                v: -gauge * k * s,
                rho,
                w: 0.0,
            };
            ProfileSample::from_state(r, state, constraint_residual(&state, n, 1.0))
        })
        .collect();
    RadialProfile::new(n, 1.0, gauge, Family::Nariai, None, out)
}

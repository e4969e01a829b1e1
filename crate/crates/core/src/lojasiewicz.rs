//! Grid estimates of Łojasiewicz exponents near maximum sets.
//!
//! Fields live on uniform rectangular grids, optionally periodic. Derivatives
//! are second-order centered in the interior, second-order one-sided at
//! non-periodic edges and wrapped on periodic ones.

use std::collections::VecDeque;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{bk_profile, BkParameters, BkSolution, Dimension, GridControls, Side};
use crate::numeric::least_squares;

pub const MIN_GRID_POINTS: usize = 32;
pub const MIN_FIT_SAMPLES: usize = 16;

/// Axis-aligned rectangle `[x0, x1] × [y0, y1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub x: (f64, f64),
    pub y: (f64, f64),
}

impl Rect {
    pub fn new(x: (f64, f64), y: (f64, f64)) -> Self {
        Rect { x, y }
    }

    pub fn square(a: f64, b: f64) -> Self {
        Rect { x: (a, b), y: (a, b) }
    }

    fn contains(&self, x: f64, y: f64) -> bool {
        let eps = 1e-12 * (self.x.1 - self.x.0).abs().max(self.y.1 - self.y.0).max(1.0);
        x >= self.x.0 - eps && x <= self.x.1 + eps && y >= self.y.0 - eps && y <= self.y.1 + eps
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField2D {
    pub domain: Rect,
    pub nx: usize,
    pub ny: usize,
    pub hx: f64,
    pub hy: f64,
    pub periodic: bool,
    /// Exact maximum when known analytically.
    pub known_max: Option<f64>,
    values: Vec<f64>,
}

impl ScalarField2D {
    /// Samples `f` on an `nx × ny` grid. Periodic grids omit the right and
    /// top edges, which coincide with the left and bottom ones.
    pub fn from_fn<F: Fn(f64, f64) -> f64>(domain: Rect, nx: usize, ny: usize, periodic: bool, f: F) -> Result<Self> {
        if nx < MIN_GRID_POINTS || ny < MIN_GRID_POINTS {
            return Err(Error::InsufficientGrid(format!(
                "{nx} x {ny} grid, at least {MIN_GRID_POINTS} points per axis required"
            )));
        }
        if !(domain.x.1 > domain.x.0 && domain.y.1 > domain.y.0) {
            return Err(Error::Degenerate(format!("empty domain {domain:?}")));
        }
        let (dx, dy) = if periodic {
            (nx as f64, ny as f64)
        } else {
            ((nx - 1) as f64, (ny - 1) as f64)
        };
        let hx = (domain.x.1 - domain.x.0) / dx;
        let hy = (domain.y.1 - domain.y.0) / dy;
        let mut values = Vec::with_capacity(nx * ny);
        for j in 0..ny {
            let y = domain.y.0 + j as f64 * hy;
            for i in 0..nx {
                let v = f(domain.x.0 + i as f64 * hx, y);
                if !v.is_finite() {
                    return Err(Error::Degenerate(format!("non-finite sample at ({i}, {j})")));
                }
                values.push(v);
            }
        }
        Ok(ScalarField2D {
            domain,
            nx,
            ny,
            hx,
            hy,
            periodic,
            known_max: None,
            values,
        })
    }

    pub fn with_known_max(mut self, max: f64) -> Self {
        self.known_max = Some(max);
        self
    }

    fn like(&self, values: Vec<f64>) -> Self {
        ScalarField2D {
            values,
            known_max: None,
            ..self.clone()
        }
    }

    pub fn x(&self, i: usize) -> f64 {
        self.domain.x.0 + i as f64 * self.hx
    }

    pub fn y(&self, j: usize) -> f64 {
        self.domain.y.0 + j as f64 * self.hy
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[j * self.nx + i]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `known_max`, or the largest grid value.
    pub fn f_max(&self) -> f64 {
        self.known_max
            .unwrap_or_else(|| self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max))
    }

    /// Offset from `(x0, y0)`, using the nearest periodic image when wrapped.
    fn offset(&self, x: f64, y: f64, x0: f64, y0: f64) -> (f64, f64) {
        let (mut dx, mut dy) = (x - x0, y - y0);
        if self.periodic {
            let lx = self.domain.x.1 - self.domain.x.0;
            let ly = self.domain.y.1 - self.domain.y.0;
            dx -= lx * (dx / lx).round();
            dy -= ly * (dy / ly).round();
        }
        (dx, dy)
    }

    fn d1(&self, i: usize, j: usize, axis: usize) -> f64 {
        let (n, h) = if axis == 0 { (self.nx, self.hx) } else { (self.ny, self.hy) };
        let k = if axis == 0 { i } else { j };
        let g = |k: usize| if axis == 0 { self.at(k, j) } else { self.at(i, k) };
        if self.periodic {
            (g((k + 1) % n) - g((k + n - 1) % n)) / (2.0 * h)
        } else if k == 0 {
            (-3.0 * g(0) + 4.0 * g(1) - g(2)) / (2.0 * h)
        } else if k == n - 1 {
            (3.0 * g(n - 1) - 4.0 * g(n - 2) + g(n - 3)) / (2.0 * h)
        } else {
            (g(k + 1) - g(k - 1)) / (2.0 * h)
        }
    }

    /// Fourth-order centered first derivative, second-order within two
    /// cells of a non-periodic edge.
    fn d1_fourth(&self, i: usize, j: usize, axis: usize) -> f64 {
        let (n, h) = if axis == 0 { (self.nx, self.hx) } else { (self.ny, self.hy) };
        let k = if axis == 0 { i } else { j };
        let g = |k: usize| if axis == 0 { self.at(k, j) } else { self.at(i, k) };
        if self.periodic {
            let (p1, p2) = ((k + 1) % n, (k + 2) % n);
            let (m1, m2) = ((k + n - 1) % n, (k + n - 2) % n);
            (-g(p2) + 8.0 * g(p1) - 8.0 * g(m1) + g(m2)) / (12.0 * h)
        } else if k < 2 || k + 2 >= n {
            self.d1(i, j, axis)
        } else {
            (-g(k + 2) + 8.0 * g(k + 1) - 8.0 * g(k - 1) + g(k - 2)) / (12.0 * h)
        }
    }

    fn d2(&self, i: usize, j: usize, axis: usize) -> f64 {
        let (n, h) = if axis == 0 { (self.nx, self.hx) } else { (self.ny, self.hy) };
        let k = if axis == 0 { i } else { j };
        let g = |k: usize| if axis == 0 { self.at(k, j) } else { self.at(i, k) };
        let h2 = h * h;
        if self.periodic {
            (g((k + 1) % n) - 2.0 * g(k) + g((k + n - 1) % n)) / h2
        } else if k == 0 {
            (2.0 * g(0) - 5.0 * g(1) + 4.0 * g(2) - g(3)) / h2
        } else if k == n - 1 {
            (2.0 * g(n - 1) - 5.0 * g(n - 2) + 4.0 * g(n - 3) - g(n - 4)) / h2
        } else {
            (g(k + 1) - 2.0 * g(k) + g(k - 1)) / h2
        }
    }

    fn map_grid(&self, f: impl Fn(usize, usize) -> f64) -> Self {
        let mut v = Vec::with_capacity(self.values.len());
        for j in 0..self.ny {
            for i in 0..self.nx {
                v.push(f(i, j));
            }
        }
        self.like(v)
    }
}

/// Finite-difference order of the first-derivative stencil.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stencil {
    Second,
    /// Used by the exponent fits: with second-order differences the
    /// truncation error `O(h² |∂³f|)` swamps `|∇f|` next to a degenerate
    /// maximum set, e.g. for `−x² y⁴` within a few cells of `y = 0`.
    #[default]
    Fourth,
}

/// `|∇f|²` on the grid of `field`, second-order stencils.
pub fn gradient_sq(field: &ScalarField2D) -> ScalarField2D {
    gradient_sq_with(field, Stencil::Second)
}

pub fn gradient_sq_with(field: &ScalarField2D, stencil: Stencil) -> ScalarField2D {
    field.map_grid(|i, j| {
        let (gx, gy) = match stencil {
            Stencil::Second => (field.d1(i, j, 0), field.d1(i, j, 1)),
            Stencil::Fourth => (field.d1_fourth(i, j, 0), field.d1_fourth(i, j, 1)),
        };
        gx * gx + gy * gy
    })
}

/// Five-point Laplacian on the grid of `field`.
pub fn laplacian(field: &ScalarField2D) -> ScalarField2D {
    field.map_grid(|i, j| field.d2(i, j, 0) + field.d2(i, j, 1))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum BuiltinField {
    /// `−x² y²` on `[−2, 2]²`
    NegX2Y2,
    /// `−x² y⁴` on `[−2, 2]²`
    NegX2Y4,
    /// `−sin² x sin² y` on the flat torus `[0, 2π)²`
    TorusSin2Sin2,
    /// Model lapse as a radial function of the plane, peaking on the circle
    /// of radius `r_zero`; the plane radius `s` sits at Gauss distance
    /// `s − r_zero` from the maximum set.
    BkLapseRadial { n: Dimension, m: f64 },
}

impl BuiltinField {
    pub fn name(&self) -> &'static str {
        match self {
            BuiltinField::NegX2Y2 => "neg_x2y2",
            BuiltinField::NegX2Y4 => "neg_x2y4",
            BuiltinField::TorusSin2Sin2 => "torus_sin2sin2",
            BuiltinField::BkLapseRadial { .. } => "bk_lapse_radial",
        }
    }

    /// Parses a field name; the radial model field defaults to `n = 3, m = 0.1`.
    pub fn parse(name: &str, n: Option<Dimension>, m: Option<f64>) -> Result<Self> {
        Ok(match name {
            "neg_x2y2" => BuiltinField::NegX2Y2,
            "neg_x2y4" => BuiltinField::NegX2Y4,
            "torus_sin2sin2" => BuiltinField::TorusSin2Sin2,
            "bk_lapse_radial" => BuiltinField::BkLapseRadial {
                n: match n {
                    Some(n) => n,
                    None => Dimension::new(3)?,
                },
                m: m.unwrap_or(0.1),
            },
            other => return Err(Error::UnknownName(other.to_string())),
        })
    }
}

/// Samples a built-in field on a `points × points` grid of its default domain.
pub fn builtin_field(field: BuiltinField, points: usize) -> Result<ScalarField2D> {
    builtin_field_on(field, points, None)
}

/// As [`builtin_field`], on `domain` when given (ignored for the torus).
pub fn builtin_field_on(field: BuiltinField, points: usize, domain: Option<Rect>) -> Result<ScalarField2D> {
    let sq = Rect::square(-2.0, 2.0);
    match field {
        BuiltinField::NegX2Y2 => Ok(ScalarField2D::from_fn(domain.unwrap_or(sq), points, points, false, |x, y| {
            -x * x * y * y
        })?
        .with_known_max(0.0)),
        BuiltinField::NegX2Y4 => Ok(ScalarField2D::from_fn(domain.unwrap_or(sq), points, points, false, |x, y| {
            -x * x * y.powi(4)
        })?
        .with_known_max(0.0)),
        BuiltinField::TorusSin2Sin2 => Ok(ScalarField2D::from_fn(
            Rect::square(0.0, 2.0 * PI),
            points,
            points,
            true,
            |x, y| -(x.sin() * y.sin()).powi(2),
        )?
        .with_known_max(0.0)),
        BuiltinField::BkLapseRadial { n, m } => {
            let params = BkParameters::new(n, m)?;
            let sol = BkSolution::new(params, None)?;
            let d_plus = sol.horizon_distance(Side::Plus)?;
            let d_minus = sol.horizon_distance(Side::Minus)?;
            let grid = GridControls {
                interior: 2000,
                window: 400,
                ..Default::default()
            };
            let prof = bk_profile(&params, None, &grid)?;
            let r0 = params.r_zero;
            let half = r0 + d_plus;
            let dom = domain.unwrap_or(Rect::square(-half, half));
            Ok(ScalarField2D::from_fn(dom, points, points, false, |x, y| {
                let r = x.hypot(y) - r0;
                if r <= -d_minus || r >= d_plus {
                    0.0
                } else {
                    prof.interpolate(r).map_or(0.0, |s| s.u.max(0.0))
                }
            })?
            .with_known_max(params.u_max))
        }
    }
}

/// Grid surrogate for the maximum set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaxSet {
    pub f_max: f64,
    pub tol: f64,
    /// Grid indices `(i, j)` of each connected component.
    pub components: Vec<Vec<(usize, usize)>>,
}

impl MaxSet {
    pub fn point_count(&self) -> usize {
        self.components.iter().map(Vec::len).sum()
    }
}

/// Points with `f ≥ f_max − tol`, grouped by 8-neighbour flood fill.
pub fn detect_max_set(field: &ScalarField2D, tol: f64) -> Result<MaxSet> {
    if !(tol > 0.0) {
        return Err(Error::out_of_range("tol", tol, "(0, inf)"));
    }
    let f_max = field.values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let (nx, ny) = (field.nx, field.ny);
    let inside: Vec<bool> = field.values.iter().map(|&v| v >= f_max - tol).collect();
    let mut seen = vec![false; nx * ny];
    let mut components = Vec::new();
    let neighbour = |i: usize, j: usize, di: isize, dj: isize| -> Option<(usize, usize)> {
        let (mut a, mut b) = (i as isize + di, j as isize + dj);
        if field.periodic {
            a = a.rem_euclid(nx as isize);
            b = b.rem_euclid(ny as isize);
        } else if a < 0 || b < 0 || a >= nx as isize || b >= ny as isize {
            return None;
        }
        Some((a as usize, b as usize))
    };
    for start in 0..nx * ny {
        if !inside[start] || seen[start] {
            continue;
        }
        seen[start] = true;
        let mut queue = VecDeque::from([(start % nx, start / nx)]);
        let mut comp = Vec::new();
        while let Some((i, j)) = queue.pop_front() {
            comp.push((i, j));
            for dj in -1..=1 {
                for di in -1..=1 {
                    if let Some((a, b)) = neighbour(i, j, di, dj) {
                        let k = b * nx + a;
                        if inside[k] && !seen[k] {
                            seen[k] = true;
                            queue.push_back((a, b));
                        }
                    }
                }
            }
        }
        components.push(comp);
    }
    Ok(MaxSet {
        f_max,
        tol,
        components,
    })
}

/// Annulus `r1 ≤ |x − center| ≤ r2`, optionally restricted to
/// `f_max − f ≤ level_cap`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub center: (f64, f64),
    pub r1: f64,
    pub r2: f64,
    pub level_cap: Option<f64>,
}

impl Window {
    pub fn annulus(center: (f64, f64), r1: f64, r2: f64) -> Self {
        Window {
            center,
            r1,
            r2,
            level_cap: None,
        }
    }

    /// Every point of the field with `f_max − f ≤ cap`.
    pub fn sublevel(cap: f64) -> Self {
        Window {
            center: (0.0, 0.0),
            r1: 0.0,
            r2: f64::INFINITY,
            level_cap: Some(cap),
        }
    }
}

/// Samples `(f_max − f, |∇f|²)` in a window, excluding points within the
/// floor `1e2 ε |f_max| + 1e−300` of the maximum and critical points.
pub fn window_samples(field: &ScalarField2D, window: &Window, stencil: Stencil) -> Vec<(f64, f64)> {
    let grad = gradient_sq_with(field, stencil);
    let f_max = field.f_max();
    let floor = 1e2 * f64::EPSILON * f_max.abs() + 1e-300;
    let mut out = Vec::new();
    for j in 0..field.ny {
        for i in 0..field.nx {
            let (dx, dy) = field.offset(field.x(i), field.y(j), window.center.0, window.center.1);
            let dist = dx.hypot(dy);
            if dist < window.r1 || dist > window.r2 {
                continue;
            }
            let d = f_max - field.at(i, j);
            if d <= floor || window.level_cap.is_some_and(|cap| d > cap) {
                continue;
            }
            let g = grad.at(i, j);
            if g > 0.0 {
                out.push((d, g));
            }
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExponentFit {
    pub theta: f64,
    pub c: f64,
    pub r2: f64,
    pub window: Window,
    pub sample_count: usize,
}

/// Least-squares fit of `ln |∇f|² = θ ln(f_max − f) + ln c` over the window.
pub fn fit_exponent(field: &ScalarField2D, window: &Window) -> Result<ExponentFit> {
    fit_exponent_with(field, window, Stencil::default())
}

pub fn fit_exponent_with(field: &ScalarField2D, window: &Window, stencil: Stencil) -> Result<ExponentFit> {
    let samples = window_samples(field, window, stencil);
    if samples.len() < MIN_FIT_SAMPLES {
        return Err(Error::InsufficientGrid(format!(
            "{} samples in window, at least {MIN_FIT_SAMPLES} required",
            samples.len()
        )));
    }
    let xs: Vec<f64> = samples.iter().map(|s| s.0.ln()).collect();
    let ys: Vec<f64> = samples.iter().map(|s| s.1.ln()).collect();
    let (theta, intercept, r2) = least_squares(&xs, &ys)
        .ok_or_else(|| Error::Degenerate("no spread in f_max − f over the window".into()))?;
    Ok(ExponentFit {
        theta,
        c: intercept.exp(),
        r2,
        window: *window,
        sample_count: samples.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InequalityKind {
    Forward,
    Reverse,
}

/// Outcome of checking `|∇f|² ≥ c (f_max − f)^θ` (forward) or
/// `|∇f|² ≤ c (f_max − f)^θ` (reverse) on a window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InequalityReport {
    pub kind: InequalityKind,
    pub theta: f64,
    pub c: f64,
    pub min_ratio: f64,
    pub max_ratio: f64,
    /// Slope of `ln ratio` against `ln(f_max − f)`; estimates `θ* − θ`.
    pub trend: f64,
    pub sample_count: usize,
    pub pass: bool,
}

/// Largest trend against the inequality tolerated as grid noise.
pub const TREND_TOL: f64 = 0.05;

fn ratio_stats(field: &ScalarField2D, window: &Window, theta: f64) -> Result<(f64, f64, f64, usize)> {
    let samples = window_samples(field, window, Stencil::default());
    if samples.len() < MIN_FIT_SAMPLES {
        return Err(Error::InsufficientGrid(format!(
            "{} samples in window, at least {MIN_FIT_SAMPLES} required",
            samples.len()
        )));
    }
    let ratios: Vec<f64> = samples.iter().map(|(d, g)| g / d.powf(theta)).collect();
    let xs: Vec<f64> = samples.iter().map(|s| s.0.ln()).collect();
    let ys: Vec<f64> = ratios.iter().map(|r| r.ln()).collect();
    let trend = least_squares(&xs, &ys)
        .ok_or_else(|| Error::Degenerate("no spread in f_max − f over the window".into()))?
        .0;
    let min = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    let max = ratios.iter().copied().fold(0.0, f64::max);
    Ok((min, max, trend, samples.len()))
}

/// Forward inequality with `c = 0.9 · min ratio`. Passes when `c > 0` and
/// the ratio does not decay towards the maximum set.
pub fn verify_forward(field: &ScalarField2D, theta: f64, window: &Window) -> Result<InequalityReport> {
    if !(theta < 2.0 && theta > 0.0) {
        return Err(Error::out_of_range("theta", theta, "(0, 2) for the forward inequality"));
    }
    let (min, max, trend, count) = ratio_stats(field, window, theta)?;
    let c = 0.9 * min;
    Ok(InequalityReport {
        kind: InequalityKind::Forward,
        theta,
        c,
        min_ratio: min,
        max_ratio: max,
        trend,
        sample_count: count,
        pass: c > 0.0 && c.is_finite() && trend <= TREND_TOL,
    })
}

/// Reverse inequality with `c = max ratio`. Passes when `c` is finite and
/// the ratio does not blow up towards the maximum set.
pub fn verify_reverse(field: &ScalarField2D, theta: f64, window: &Window) -> Result<InequalityReport> {
    if !(theta < 1.0) || !theta.is_finite() {
        return Err(Error::out_of_range("theta", theta, "(-inf, 1) for the reverse inequality"));
    }
    let (min, max, trend, count) = ratio_stats(field, window, theta)?;
    Ok(InequalityReport {
        kind: InequalityKind::Reverse,
        theta,
        c: max,
        min_ratio: min,
        max_ratio: max,
        trend,
        sample_count: count,
        pass: max.is_finite() && trend >= -TREND_TOL,
    })
}

/// Summary of the discrete elliptic identity residual on a region.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IdentityResidual {
    pub h: f64,
    pub max_abs: f64,
    pub points: usize,
}

/// Residual of
/// `Δw = cθ(1−θ)(f_max−f)^(θ−2) w + θF[Δf + (1−θ)F] + Δ|∇f|²`,
/// `w = |∇f|² − c(f_max−f)^θ`, `F = c (f_max−f)^(θ−1)`, over grid points in
/// `region`.
pub fn elliptic_identity_residual(field: &ScalarField2D, c: f64, theta: f64, region: &Rect) -> Result<IdentityResidual> {
    if !(theta > 0.0 && theta < 1.0) {
        return Err(Error::out_of_range("theta", theta, "(0, 1)"));
    }
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::out_of_range("c", c, "(0, inf)"));
    }
    let f_max = field.f_max();
    let floor = 1e2 * f64::EPSILON * f_max.abs() + 1e-300;
    let grad = gradient_sq(field);
    let lap_f = laplacian(field);
    let lap_grad = laplacian(&grad);
    let w = field.map_grid(|i, j| {
        let d = (f_max - field.at(i, j)).max(0.0);
        grad.at(i, j) - c * d.powf(theta)
    });
    let lap_w = laplacian(&w);
    let mut max_abs = 0.0f64;
    let mut points = 0;
    for j in 0..field.ny {
        for i in 0..field.nx {
            if !region.contains(field.x(i), field.y(j)) {
                continue;
            }
            let d = f_max - field.at(i, j);
            if d <= floor {
                return Err(Error::out_of_range(
                    "f_max - f",
                    d,
                    format!("above {floor:e}; region touches the maximum set"),
                ));
            }
            let big_f = c * d.powf(theta - 1.0);
            let rhs = c * theta * (1.0 - theta) * d.powf(theta - 2.0) * w.at(i, j)
                + theta * big_f * (lap_f.at(i, j) + (1.0 - theta) * big_f)
                + lap_grad.at(i, j);
            max_abs = max_abs.max((lap_w.at(i, j) - rhs).abs());
            points += 1;
        }
    }
    if points == 0 {
        return Err(Error::InsufficientGrid(format!("no grid points in {region:?}")));
    }
    Ok(IdentityResidual {
        h: field.hx.max(field.hy),
        max_abs,
        points,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefinementStudy {
    pub levels: Vec<IdentityResidual>,
    /// `log2` of successive residual ratios.
    pub orders: Vec<f64>,
}

/// Identity residual of a built-in field on successively refined grids.
pub fn identity_refinement(
    field: BuiltinField,
    grids: &[usize],
    domain: Option<Rect>,
    region: &Rect,
    c: f64,
    theta: f64,
) -> Result<RefinementStudy> {
    let mut levels = Vec::with_capacity(grids.len());
    for &p in grids {
        let f = builtin_field_on(field, p, domain)?;
        levels.push(elliptic_identity_residual(&f, c, theta, region)?);
    }
    let orders = levels
        .windows(2)
        .map(|w| (w[0].max_abs / w[1].max_abs).ln() / (w[0].h / w[1].h).ln())
        .collect();
    Ok(RefinementStudy { levels, orders })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dim(n: usize) -> Dimension {
        Dimension::new(n).unwrap()
    }

    #[test]
    fn builtin_values() {
        let f = builtin_field(BuiltinField::NegX2Y2, 65).unwrap();
        // (1, 1) is grid point (48, 48) on [−2, 2] with h = 1/16
        assert_eq!(f.at(48, 48), -1.0);
        let t = builtin_field(BuiltinField::TorusSin2Sin2, 64).unwrap();
        assert_eq!(t.f_max(), 0.0);
        assert!(t.values().iter().all(|&v| v <= 0.0));
        assert!(BuiltinField::parse("nope", None, None).is_err());
    }

    #[test]
    fn gradients() {
        let lin = ScalarField2D::from_fn(Rect::square(0.0, 1.0), 40, 40, false, |x, _| x).unwrap();
        assert!(gradient_sq(&lin).values().iter().all(|g| (g - 1.0).abs() < 1e-12));
        let f = builtin_field(BuiltinField::NegX2Y2, 65).unwrap();
        assert!((gradient_sq(&f).at(48, 48) - 8.0).abs() < 1e-12);
        let lap = laplacian(&f);
        // Δ(−x²y²) = −2(x² + y²), exact for quadratics in each variable
        assert!((lap.at(48, 32) + 2.0).abs() < 1e-12);
        assert!((lap.at(0, 0) + 16.0).abs() < 1e-10);
    }

    #[test]
    fn torus_seam_matches_interior_formula() {
        let t = builtin_field(BuiltinField::TorusSin2Sin2, 64).unwrap();
        let g = gradient_sq(&t);
        for (i, j) in [(0, 5), (63, 17), (5, 0), (63, 63)] {
            let (x, y) = (t.x(i), t.y(j));
            let (sx, cx, sy, cy) = (x.sin(), x.cos(), y.sin(), y.cos());
            let fx = -2.0 * sx * cx * sy * sy;
            let fy = -2.0 * sx * sx * sy * cy;
            assert!((g.at(i, j) - (fx * fx + fy * fy)).abs() < 5e-3, "({i},{j})");
        }
        // the wrapped stencil at the seam equals the stencil one cell in
        let shifted = ScalarField2D::from_fn(Rect::square(0.0, 2.0 * PI), 64, 64, true, |x, y| {
            let h = 2.0 * PI / 64.0;
            -((x + h).sin() * y.sin()).powi(2)
        })
        .unwrap();
        let gs = gradient_sq(&shifted);
        assert!((gs.at(63, 9) - g.at(0, 9)).abs() < 1e-12);
    }

    #[test]
    fn max_sets() {
        let f = builtin_field(BuiltinField::NegX2Y2, 65).unwrap();
        let s = detect_max_set(&f, 1e-9).unwrap();
        assert_eq!(s.components.len(), 1);
        assert_eq!(s.point_count(), 2 * 65 - 1);
        let t = builtin_field(BuiltinField::TorusSin2Sin2, 64).unwrap();
        let s = detect_max_set(&t, 1e-9).unwrap();
        assert_eq!(s.components.len(), 1);
        assert_eq!(s.point_count(), 4 * 64 - 4);
        let c = ScalarField2D::from_fn(Rect::square(0.0, 1.0), 32, 32, false, |_, _| 2.0).unwrap();
        let s = detect_max_set(&c, 1e-9).unwrap();
        assert_eq!((s.components.len(), s.point_count()), (1, 32 * 32));
        assert!(detect_max_set(&c, 0.0).is_err());
    }

    #[test]
    fn bk_radial_max_circle() {
        let (n, m) = (dim(3), 0.1);
        let p = BkParameters::new(n, m).unwrap();
        let f = builtin_field(BuiltinField::BkLapseRadial { n, m }, 256).unwrap();
        let tol = 3.0 * 3.0 * p.u_max * f.hx * f.hx;
        let s = detect_max_set(&f, tol).unwrap();
        assert_eq!(s.components.len(), 1);
        for &(i, j) in &s.components[0] {
            let rad = f.x(i).hypot(f.y(j));
            assert!((rad - p.r_zero).abs() < 3.0 * f.hx);
        }
    }

    #[test]
    fn fits_on_fine_grids() {
        let f = builtin_field(BuiltinField::NegX2Y2, 512).unwrap();
        let fit = fit_exponent(&f, &Window::annulus((1.0, 0.0), 0.01, 0.1)).unwrap();
        assert!((fit.theta - 1.0).abs() < 0.05, "{fit:?}");
        assert!((fit.c - 4.0).abs() < 0.3, "{fit:?}");

        let (n, m) = (dim(3), 0.1);
        let p = BkParameters::new(n, m).unwrap();
        let f = builtin_field(BuiltinField::BkLapseRadial { n, m }, 512).unwrap();
        let fit = fit_exponent(&f, &Window::annulus((p.r_zero, 0.0), 0.01, 0.1)).unwrap();
        assert!((fit.theta - 1.0).abs() < 0.05, "{fit:?}");
        assert!((fit.c / (6.0 * p.u_max) - 1.0).abs() < 0.05, "{fit:?}");
    }

    #[test]
    fn degenerate_maximum_needs_fourth_order() {
        let f = builtin_field(BuiltinField::NegX2Y4, 512).unwrap();
        let w = Window::annulus((1.0, 0.0), 0.01, 0.1);
        let fit = fit_exponent(&f, &w).unwrap();
        // |∇f|² ≈ 16 x (f_max − f)^(3/2)
        assert!((fit.theta - 1.5).abs() < 0.01, "{fit:?}");
        assert!((fit.c - 16.0).abs() < 0.5, "{fit:?}");
        assert!(fit.r2 > 0.99);
        let coarse = fit_exponent_with(&f, &w, Stencil::Second).unwrap();
        assert!(coarse.theta < 1.4, "{coarse:?}");
    }

    #[test]
    fn forward_and_reverse() {
        let f = builtin_field(BuiltinField::NegX2Y2, 256).unwrap();
        let w = Window::annulus((1.0, 0.0), 0.02, 0.2);
        assert!(verify_forward(&f, 2.5, &w).is_err());
        assert!(verify_reverse(&f, 1.0, &w).is_err());
        assert!(verify_forward(&f, 1.1, &w).unwrap().pass);
        assert!(verify_forward(&f, 1.0, &w).unwrap().pass);
        assert!(!verify_forward(&f, 0.8, &w).unwrap().pass);
        let r = verify_reverse(&f, 0.9, &w).unwrap();
        assert!(r.pass && r.c.is_finite());
        let t = builtin_field(BuiltinField::TorusSin2Sin2, 256).unwrap();
        let r = verify_reverse(&t, 0.9, &Window::sublevel(0.1)).unwrap();
        assert!(r.pass, "{r:?}");
    }

    #[test]
    fn identity_is_second_order() {
        let study = identity_refinement(
            BuiltinField::NegX2Y2,
            &[65, 129, 257],
            None,
            &Rect::new((0.75, 1.25), (0.5, 1.0)),
            1.0,
            0.3,
        )
        .unwrap();
        for o in &study.orders {
            assert!((o - 2.0).abs() < 0.3, "{study:?}");
        }
        let study = identity_refinement(
            BuiltinField::TorusSin2Sin2,
            &[64, 128, 256],
            None,
            &Rect::new((0.5, 1.0), (1.0, 2.0)),
            0.5,
            0.6,
        )
        .unwrap();
        for o in &study.orders {
            assert!((o - 2.0).abs() < 0.3, "{study:?}");
        }
        let f = builtin_field(BuiltinField::NegX2Y2, 65).unwrap();
        let region = Rect::new((0.75, 1.25), (0.5, 1.0));
        assert!(elliptic_identity_residual(&f, 1.0, 1.0, &region).is_err());
        assert!(elliptic_identity_residual(&f, 1.0, 0.5, &Rect::new((0.5, 1.0), (-0.5, 0.5))).is_err());
    }

    #[test]
    fn identity_on_linear_field() {
        let f = ScalarField2D::from_fn(Rect::square(0.0, 1.0), 64, 64, false, |x, y| x + 0.5 * y).unwrap();
        let r = elliptic_identity_residual(&f, 0.7, 0.4, &Rect::new((0.2, 0.6), (0.2, 0.6))).unwrap();
        let f2 = ScalarField2D::from_fn(Rect::square(0.0, 1.0), 127, 127, false, |x, y| x + 0.5 * y).unwrap();
        let r2 = elliptic_identity_residual(&f2, 0.7, 0.4, &Rect::new((0.2, 0.6), (0.2, 0.6))).unwrap();
        assert!(r.max_abs / r2.max_abs > 3.5, "{r:?} {r2:?}");
    }
}

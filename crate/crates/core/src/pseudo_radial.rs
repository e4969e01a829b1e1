//! Pseudo-radial function, model gradient and the gradient-estimate ratio.
//!
//! Writing `Ψ = r0 (1 + x)`, the identity
//! `u_max² − F(Ψ) = r0² x² Q(x)` with
//! `Q(x) = 1 + 2/(n−2) · [(1+x)^(2−n) − 1 − (2−n)x] / x²`
//! removes the cancellation at the maximum: `x sqrt(Q)` is monotone on each
//! branch and well conditioned, so `Ψ` is recovered to machine precision
//! even when `u` is close to `u_max`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{BkParameters, Dimension};
use crate::numeric::bracketed_root;

/// Distance from `0` or `u_max` inside which ratios are refused.
pub const ENDPOINT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    /// `Ψ ∈ [r_zero, r_plus]`
    Outer,
    /// `Ψ ∈ [r_minus, r_zero]`
    Inner,
}

impl std::str::FromStr for Branch {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "outer" | "plus" => Ok(Branch::Outer),
            "inner" | "minus" => Ok(Branch::Inner),
            other => Err(Error::UnknownName(other.to_string())),
        }
    }
}

/// `(1+x)^a − 1 − a x`, accurate for small `x`.
fn binomial_tail(a: f64, x: f64) -> f64 {
    if x.abs() >= 0.25 {
        return (1.0 + x).powf(a) - 1.0 - a * x;
    }
    let mut term = a * (a - 1.0) / 2.0 * x * x;
    let mut sum = term;
    let mut k = 2.0;
    while term.abs() > 1e-18 * sum.abs() && k < 400.0 {
        term *= (a - k) / (k + 1.0) * x;
        sum += term;
        k += 1.0;
    }
    sum
}

/// Pseudo-radial map for one model, with cached radii.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PseudoRadial {
    pub params: BkParameters,
    x_minus: f64,
    x_plus: f64,
}

impl PseudoRadial {
    pub fn new(n: Dimension, m: f64) -> Result<Self> {
        let params = BkParameters::new(n, m)?;
        Ok(PseudoRadial {
            x_minus: params.r_minus / params.r_zero - 1.0,
            x_plus: params.r_plus / params.r_zero - 1.0,
            params,
        })
    }

    fn q(&self, x: f64) -> f64 {
        let nf = self.params.n.f();
        if x == 0.0 {
            return nf;
        }
        1.0 + 2.0 / (nf - 2.0) * binomial_tail(2.0 - nf, x) / (x * x)
    }

    /// `Ψ(u)` on the given branch; `Ψ(u_max) = r_zero`, `Ψ(0) = r_±`.
    pub fn psi(&self, u: f64, branch: Branch) -> Result<f64> {
        let p = &self.params;
        let slack = 1e-12 * p.u_max;
        if !(u >= -slack && u <= p.u_max + slack) {
            return Err(Error::out_of_range("u", u, format!("[0, {}]", p.u_max)));
        }
        let u = u.clamp(0.0, p.u_max);
        if u == p.u_max {
            return Ok(p.r_zero);
        }
        if u == 0.0 {
            return Ok(match branch {
                Branch::Outer => p.r_plus,
                Branch::Inner => p.r_minus,
            });
        }
        let target = ((p.u_max - u) * (p.u_max + u)).sqrt() / p.r_zero;
        let phi = |x: f64| x * self.q(x).max(0.0).sqrt();
        let x = match branch {
            Branch::Outer => bracketed_root(|x| phi(x) - target, 0.0, self.x_plus, 0.0)?,
            Branch::Inner => bracketed_root(|x| phi(x) + target, self.x_minus, 0.0, 0.0)?,
        };
        Ok(p.r_zero * (1.0 + x))
    }

    /// `Ψ |1 − (n−2) m Ψ^(−n)|`, evaluated as `Ψ |expm1(−n ln(Ψ/r_zero))|`.
    pub fn model_gradient(&self, psi: f64) -> Result<f64> {
        let p = &self.params;
        let slack = 1e-12;
        if !(psi >= p.r_minus * (1.0 - slack) && psi <= p.r_plus * (1.0 + slack)) {
            return Err(Error::out_of_range(
                "psi",
                psi,
                format!("[{}, {}]", p.r_minus, p.r_plus),
            ));
        }
        let x = (psi - p.r_zero) / p.r_zero;
        Ok(psi * (-p.n.f() * x.ln_1p()).exp_m1().abs())
    }

    fn interior(&self, what: &'static str, u: f64) -> Result<()> {
        let u_max = self.params.u_max;
        if !(u >= -ENDPOINT_TOL && u <= u_max * (1.0 + 1e-12)) {
            return Err(Error::out_of_range("u", u, format!("[0, {u_max}]")));
        }
        if u <= ENDPOINT_TOL {
            return Err(Error::EndpointLimit {
                what,
                u,
                hint: "the horizon surface gravity (mass::surface_gravity)",
            });
        }
        if u >= u_max - ENDPOINT_TOL {
            return Err(Error::EndpointLimit {
                what,
                u,
                hint: "expansions::gradient_limit",
            });
        }
        Ok(())
    }

    /// `|∇u|² / (|∇u_m| ∘ Ψ)²`.
    pub fn gradient_ratio(&self, u: f64, grad_abs: f64, branch: Branch) -> Result<f64> {
        self.interior("gradient_ratio", u)?;
        let g = self.model_gradient(self.psi(u, branch)?)?;
        Ok((grad_abs / g).powi(2))
    }

    /// `W = Ψ / (|∇u_m| ∘ Ψ) · ((|∇u_m| ∘ Ψ)² − |∇u|²)`.
    pub fn w_functional(&self, u: f64, grad_sq: f64, branch: Branch) -> Result<f64> {
        self.interior("w_functional", u)?;
        let psi = self.psi(u, branch)?;
        let g = self.model_gradient(psi)?;
        Ok(psi / g * (g * g - grad_sq))
    }
}

pub fn psi(n: Dimension, m: f64, u: f64, branch: Branch) -> Result<f64> {
    PseudoRadial::new(n, m)?.psi(u, branch)
}

pub fn model_gradient(n: Dimension, m: f64, psi: f64) -> Result<f64> {
    PseudoRadial::new(n, m)?.model_gradient(psi)
}

pub fn gradient_ratio(n: Dimension, m: f64, u: f64, grad_abs: f64, branch: Branch) -> Result<f64> {
    PseudoRadial::new(n, m)?.gradient_ratio(u, grad_abs, branch)
}

pub fn w_functional(n: Dimension, m: f64, u: f64, grad_sq: f64, branch: Branch) -> Result<f64> {
    PseudoRadial::new(n, m)?.w_functional(u, grad_sq, branch)
}

/// `|∇u|² / (n (1 − u²))` for a lapse normalized to `max u = 1`.
pub fn nariai_ratio(n: Dimension, u: f64, grad_abs: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&u) {
        return Err(Error::out_of_range("u_normalized", u, "[0, 1)"));
    }
    Ok(grad_abs * grad_abs / (n.f() * (1.0 - u) * (1.0 + u)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{bk_profile, lapse_squared, nariai_profile, GridControls};

    fn dim(n: usize) -> Dimension {
        Dimension::new(n).unwrap()
    }

    fn bisect(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
        let fa = f(a);
        for _ in 0..200 {
            let mid = 0.5 * (a + b);
            if f(mid).signum() == fa.signum() {
                a = mid;
            } else {
                b = mid;
            }
        }
        0.5 * (a + b)
    }

    #[test]
    fn psi_examples_against_cubic() {
        let n = dim(3);
        let cubic = |p: f64| p * p * p - 0.75 * p + 0.2;
        let outer = psi(n, 0.1, 0.5, Branch::Outer).unwrap();
        let inner = psi(n, 0.1, 0.5, Branch::Inner).unwrap();
        assert!((outer - bisect(cubic, 0.4642, 0.8789)).abs() < 1e-13);
        assert!((inner - bisect(cubic, 0.2092, 0.4642)).abs() < 1e-13);
        assert!((outer - 0.6730).abs() < 5e-4 && (inner - 0.3041).abs() < 5e-4);
        let pr = PseudoRadial::new(n, 0.1).unwrap();
        let u_max = pr.params.u_max;
        assert_eq!(pr.psi(u_max, Branch::Inner).unwrap(), pr.params.r_zero);
        assert!((pr.params.r_zero - 0.464159).abs() < 1e-6);
        assert_eq!(pr.psi(0.0, Branch::Outer).unwrap(), pr.params.r_plus);
        assert!(pr.psi(u_max * 1.01, Branch::Outer).is_err());
        assert!(pr.psi(-0.1, Branch::Outer).is_err());
    }

    #[test]
    fn psi_residual_near_maximum() {
        let pr = PseudoRadial::new(dim(4), 0.05).unwrap();
        let u_max = pr.params.u_max;
        for k in 1..12 {
            let u = u_max - 10f64.powi(-k);
            for b in [Branch::Outer, Branch::Inner] {
                let p = pr.psi(u, b).unwrap();
                let (f, _) = lapse_squared(pr.params.n, 0.05, p).unwrap();
                assert!((f - u * u).abs() < 1e-14, "k={k}");
            }
        }
    }

    #[test]
    fn model_gradient_examples() {
        let n = dim(3);
        let pr = PseudoRadial::new(n, 0.1).unwrap();
        let g = pr.model_gradient(0.6730).unwrap();
        let alt = (-0.6730f64 + 0.1 / (0.6730f64 * 0.6730)).abs();
        assert!((g - alt).abs() < 1e-12);
        assert!((g - 0.45222).abs() < 1e-3);
        assert_eq!(pr.model_gradient(pr.params.r_zero).unwrap(), 0.0);
        let gp = pr.model_gradient(pr.params.r_plus).unwrap();
        assert!((gp - 0.74948).abs() < 1e-3);
        assert!(pr.model_gradient(0.95).is_err());
    }

    #[test]
    fn ratio_and_w_examples() {
        let n = dim(3);
        let r = gradient_ratio(n, 0.1, 0.5, 0.4, Branch::Outer).unwrap();
        let g = model_gradient(n, 0.1, psi(n, 0.1, 0.5, Branch::Outer).unwrap()).unwrap();
        assert!((r - (0.4 / g).powi(2)).abs() < 1e-15);
        assert!((r - 0.7825).abs() < 2e-3);
        assert_eq!(gradient_ratio(n, 0.1, 0.5, 0.0, Branch::Outer).unwrap(), 0.0);
        let w = w_functional(n, 0.1, 0.5, 0.0, Branch::Outer).unwrap();
        assert!((w - 0.30434).abs() < 1e-3);
        let u_max = PseudoRadial::new(n, 0.1).unwrap().params.u_max;
        for u in [0.0, 1e-10, u_max - 1e-10, u_max] {
            assert!(matches!(
                gradient_ratio(n, 0.1, u, 0.1, Branch::Outer),
                Err(Error::EndpointLimit { .. })
            ));
        }
    }

    #[test]
    fn bk_profiles_saturate() {
        for (nn, m) in [(3, 0.1), (4, 0.05), (6, 0.02)] {
            let n = dim(nn);
            let prof = bk_profile(&BkParameters::new(n, m).unwrap(), None, &GridControls::default()).unwrap();
            let pr = PseudoRadial::new(n, m).unwrap();
            let mut checked = 0;
            for s in prof.samples() {
                let branch = if s.r > 0.0 { Branch::Outer } else { Branch::Inner };
                match pr.gradient_ratio(s.u, s.dudr.abs(), branch) {
                    Ok(r) => {
                        assert!((r - 1.0).abs() < 1e-8, "n={nn} r={} ratio={r}", s.r);
                        let w = pr.w_functional(s.u, s.dudr * s.dudr, branch).unwrap();
                        assert!(w.abs() < 1e-8);
                        checked += 1;
                    }
                    Err(Error::EndpointLimit { .. }) => {}
                    Err(e) => panic!("{e}"),
                }
            }
            assert!(checked > 100);
        }
    }

    #[test]
    fn nariai_examples() {
        let n = dim(3);
        let prof = nariai_profile(n, None, 200).unwrap();
        for s in prof.samples() {
            if s.u < 1.0 {
                assert!((nariai_ratio(n, s.u, s.dudr.abs()).unwrap() - 1.0).abs() < 1e-10);
            }
        }
        assert!((nariai_ratio(n, 0.0, 3f64.sqrt()).unwrap() - 1.0).abs() < 1e-15);
        assert!((nariai_ratio(n, 0.6, 1.0).unwrap() - 1.0 / 1.92).abs() < 1e-15);
        assert!(nariai_ratio(n, 1.0, 0.0).is_err());
    }

    #[test]
    fn binomial_tail_matches_direct() {
        for a in [-1.0, -3.0, -6.0] {
            for x in [-0.2, -0.01, 0.003, 0.2] {
                let direct: f64 = (1.0f64 + x).powf(a) - 1.0 - a * x;
                assert!((binomial_tail(a, x) - direct).abs() < 1e-14);
            }
        }
    }

    mod props {
        use super::*;
        use crate::model::max_mass;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(64))]

            #[test]
            fn psi_monotone_in_u(n in 3usize..=8, frac in 1e-3f64..0.99, a in 0.01f64..0.99, b in 0.01f64..0.99) {
                prop_assume!((a - b).abs() > 1e-6);
                let n = dim(n);
                let pr = PseudoRadial::new(n, frac * max_mass(n)).unwrap();
                let u_max = pr.params.u_max;
                let (lo, hi) = (a.min(b) * u_max, a.max(b) * u_max);
                let outer = (pr.psi(lo, Branch::Outer).unwrap(), pr.psi(hi, Branch::Outer).unwrap());
                let inner = (pr.psi(lo, Branch::Inner).unwrap(), pr.psi(hi, Branch::Inner).unwrap());
                prop_assert!(outer.0 > outer.1);
                prop_assert!(inner.0 < inner.1);
                prop_assert!(inner.1 < pr.params.r_zero && outer.1 > pr.params.r_zero);
            }
        }
    }
}

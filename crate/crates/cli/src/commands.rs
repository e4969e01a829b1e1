use std::fmt::Write as _;

use kottler::cauchy::{evolve as run_evolution, initial_data, round_trip, EvolveControls};
use kottler::expansions::{expand_lapse, expand_psi, expand_ratio, gradient_limit, remainder_order};
use kottler::lojasiewicz::{
    builtin_field, fit_exponent, identity_refinement, verify_forward, verify_reverse, window_samples, BuiltinField,
    Rect, Stencil, Window, MIN_FIT_SAMPLES, MIN_GRID_POINTS,
};
use kottler::mass::{classify_region, surface_gravity, virtual_mass, virtual_mass_with_residual, RegionClass};
use kottler::model::{bk_profile, max_mass, nariai_profile, nariai_radius, BkParameters, BkSolution, GridControls};
use kottler::ode::Stepping;
use kottler::profile::{fmt_sig15, Family, RadialProfile};
use kottler::pseudo_radial::{nariai_ratio, Branch, PseudoRadial};
use kottler::{Dimension, Error, Side};
use serde_json::{json, Map, Value};

use crate::error::CliError;
use crate::report::Verdict;
use crate::{
    write_output, BranchArg, ClassArg, DirectionArg, EvolveArgs, ExpansionArgs, ExpansionTarget, FamilyArg,
    GradestArgs, LimitsArgs, LojaArgs, LojaMode, MassArgs, ModelArgs, Outcome, PsiArgs, RoundtripArgs,
};

/// Residual bound on the model's defining roots.
const ROOT_TOL: f64 = 1e-10;
const UMAX_TOL: f64 = 1e-12;
/// Agreement required when a gravity is recomputed from its virtual mass.
const GRAVITY_TOL: f64 = 1e-8;
const LIGHT_MASS: f64 = 1e-6;
const LIGHT_TOL: f64 = 1e-3;

fn class_of(c: ClassArg) -> RegionClass {
    match c {
        ClassArg::Outer => RegionClass::Outer,
        ClassArg::Inner => RegionClass::Inner,
        ClassArg::Cylindrical => RegionClass::Cylindrical,
    }
}

fn branch_of(b: BranchArg) -> Branch {
    match b {
        BranchArg::Outer => Branch::Outer,
        BranchArg::Inner => Branch::Inner,
    }
}

fn side_name(s: Side) -> &'static str {
    match s {
        Side::Plus => "plus",
        Side::Minus => "minus",
    }
}

fn profile_csv(p: &RadialProfile) -> Vec<u8> {
    let mut buf = Vec::new();
    p.write_csv(&mut buf).expect("writing to memory");
    buf
}

pub fn model(a: &ModelArgs) -> Result<Outcome, CliError> {
    let n = Dimension::new(a.n)?;
    let mut verdicts = Vec::new();
    let (profile, result) = match a.family {
        FamilyArg::Bk => {
            let m = a.m.ok_or_else(|| CliError::usage("m", "required for --family bk"))?;
            let params = BkParameters::new(n, m)?;
            let grid = GridControls {
                interior: a.interior,
                window: a.window,
                ..Default::default()
            };
            let profile = bk_profile(&params, a.gauge, &grid)?;
            verdicts.push(Verdict::at_most("root_residual_minus", params.lapse_sq(params.r_minus).abs(), ROOT_TOL));
            verdicts.push(Verdict::at_most("root_residual_plus", params.lapse_sq(params.r_plus).abs(), ROOT_TOL));
            verdicts.push(Verdict::within(
                "u_max_squared",
                params.u_max * params.u_max,
                params.lapse_sq(params.r_zero),
                UMAX_TOL,
            ));
            if let Some(o) = profile.origin() {
                verdicts.push(Verdict::within("origin_rho", o.rho, params.r_zero, UMAX_TOL));
            }
            let result = json!({
                "family": "bk",
                "n": a.n,
                "m": m,
                "m_max": max_mass(n),
                "r_minus": params.r_minus,
                "r_plus": params.r_plus,
                "r_zero": params.r_zero,
                "u_max": params.u_max,
                "gauge": profile.gauge,
                "samples": profile.len(),
            });
            (profile, result)
        }
        FamilyArg::Nariai => {
            let profile = nariai_profile(n, a.gauge, a.samples)?;
            let worst = profile
                .samples()
                .iter()
                .filter(|s| s.u < profile.gauge)
                .map(|s| (nariai_ratio(n, s.u / profile.gauge, s.dudr.abs() / profile.gauge).unwrap_or(f64::NAN) - 1.0).abs())
                .fold(0.0, f64::max);
            verdicts.push(Verdict::at_most("nariai_ratio_deviation", worst, ROOT_TOL));
            let result = json!({
                "family": "nariai",
                "n": a.n,
                "rho": nariai_radius(n),
                "gauge": profile.gauge,
                "samples": profile.len(),
            });
            (profile, result)
        }
    };
    verdicts.push(Verdict::at_most(
        "constraint_residual",
        profile.max_constraint_residual(),
        a.constraint_tol,
    ));
    if let Some(p) = &a.out {
        write_output(p, &profile_csv(&profile))?;
    }
    if let Some(p) = &a.manifest {
        let mut tol = Map::new();
        tol.insert("constraint_tol".into(), json!(a.constraint_tol));
        tol.insert("quad_tol".into(), json!(GridControls::default().quad_tol));
        let manifest = crate::report::round_floats(serde_json::to_value(profile.manifest(tol)).expect("manifest"));
        let mut text = serde_json::to_string_pretty(&manifest).expect("manifest");
        text.push('\n');
        write_output(p, text.as_bytes())?;
    }
    Ok(Outcome { result, verdicts })
}

pub fn mass(a: &MassArgs) -> Result<Outcome, CliError> {
    let n = Dimension::new(a.n)?;
    if let Some(k) = a.k {
        let class = match a.class {
            Some(c) => class_of(c),
            None => classify_region(n, k, a.class_tol)?,
        };
        let vm = virtual_mass_with_residual(n, k, class)?;
        let verdict = match class.side() {
            Some(side) => Verdict::within("gravity_of_mass", surface_gravity(n, vm.m, side)?.k, k, GRAVITY_TOL),
            None => Verdict::within("cylindrical_gravity", k, (a.n as f64).sqrt(), a.class_tol),
        };
        return Ok(Outcome {
            result: json!({"n": a.n, "k": k, "class": class.to_string(), "m": vm.m, "residual": vm.residual}),
            verdicts: vec![verdict],
        });
    }
    let m = a.m.ok_or_else(|| CliError::usage("k", "one of --k or --m is required"))?;
    let s = (a.n as f64).sqrt();
    let kp = surface_gravity(n, m, Side::Plus)?.k;
    let km = surface_gravity(n, m, Side::Minus)?.k;
    let verdicts = vec![
        Verdict::holds("k_plus_range", kp > 1.0 && kp < s, format!("k_plus = {} in (1, {})", fmt_sig15(kp), fmt_sig15(s))),
        Verdict::holds("k_minus_range", km > s, format!("k_minus = {} > {}", fmt_sig15(km), fmt_sig15(s))),
        Verdict::within("mass_from_k_plus", virtual_mass(n, kp, RegionClass::Outer)?, m, GRAVITY_TOL),
        Verdict::within("mass_from_k_minus", virtual_mass(n, km, RegionClass::Inner)?, m, GRAVITY_TOL),
    ];
    Ok(Outcome {
        result: json!({
            "n": a.n,
            "m": m,
            "k_plus": kp,
            "k_minus": km,
            "class_plus": classify_region(n, kp, a.class_tol)?.to_string(),
            "class_minus": classify_region(n, km, a.class_tol)?.to_string(),
        }),
        verdicts,
    })
}

pub fn evolve(a: &EvolveArgs) -> Result<Outcome, CliError> {
    let n = Dimension::new(a.n)?;
    let data = initial_data(n, a.rho0, a.gauge, a.kappa)?;
    let stepping = match a.step {
        Some(h) if !(h > 0.0 && h.is_finite()) => return Err(CliError::usage("step", format!("{h} is not a positive step"))),
        Some(h) => Stepping::Fixed { h },
        None => Stepping::adaptive(a.tol),
    };
    let controls = EvolveControls {
        stepping,
        max_range: a.max_range,
        constraint_tol: a.constraint_tol,
        ..Default::default()
    };
    let sides: &[Side] = match a.direction {
        DirectionArg::Plus => &[Side::Plus],
        DirectionArg::Minus => &[Side::Minus],
        DirectionArg::Both => &[Side::Minus, Side::Plus],
    };
    let mut verdicts = Vec::new();
    let mut horizons = Vec::new();
    let mut masses = Map::new();
    let mut merged = Vec::new();
    let (mut constraint_max, mut drift_max, mut steps) = (0.0f64, 0.0f64, 0usize);
    for &side in sides {
        let name = side_name(side);
        let e = match run_evolution(&data, side, &controls) {
            Ok(e) => e,
            Err(err) => {
                verdicts.push(Verdict::error(format!("evolve_{name}"), err.to_string()));
                continue;
            }
        };
        constraint_max = constraint_max.max(e.constraint_max);
        drift_max = drift_max.max(e.ratio_drift_max);
        steps += e.steps;
        let skip_origin = side == Side::Plus && !merged.is_empty();
        merged.extend(e.profile.samples().iter().filter(|s| !(skip_origin && s.r == 0.0)).copied());
        verdicts.push(Verdict::at_most(format!("constraint_{name}"), e.constraint_max, a.constraint_tol));
        verdicts.push(Verdict::at_most(format!("drift_{name}"), e.ratio_drift_max, a.constraint_tol));
        let Some(h) = e.horizon else {
            verdicts.push(Verdict::holds(
                format!("horizon_{name}"),
                false,
                format!("no lapse zero within |r| <= {}", a.max_range),
            ));
            continue;
        };
        verdicts.push(Verdict::holds(format!("horizon_{name}"), h.k > 0.0, "lapse zero located with k > 0"));
        horizons.push(json!({"side": name, "r_h": h.r_h, "rho_h": h.rho_h, "k": h.k}));
        if a.kappa == 1.0 {
            let entry = match classify_region(n, h.k, kottler::mass::DEFAULT_CLASS_TOL)
                .and_then(|c| virtual_mass(n, h.k, c).map(|m| (c, m)))
            {
                Ok((c, m)) => json!({"class": c.to_string(), "m": m}),
                Err(err) => json!({"error": err.to_string()}),
            };
            masses.insert(name.to_string(), entry);
        }
    }
    if a.kappa == 1.0 {
        masses.insert("expected".into(), json!(data.model_mass()));
    }
    if let Some(p) = &a.out {
        let profile = RadialProfile::new(n, a.kappa, a.gauge, Family::Evolved, None, merged)?;
        write_output(p, &profile_csv(&profile))?;
    }
    Ok(Outcome {
        result: json!({
            "w0": data.w0,
            "lambda": data.lambda,
            "horizons": horizons,
            "masses": masses,
            "constraint_max": constraint_max,
            "ratio_drift_max": drift_max,
            "steps": steps,
        }),
        verdicts,
    })
}

pub fn psi(a: &PsiArgs) -> Result<Outcome, CliError> {
    let n = Dimension::new(a.n)?;
    let pr = PseudoRadial::new(n, a.m)?;
    let branch = branch_of(a.branch);
    let psi = pr.psi(a.u, branch)?;
    let grad = pr.model_gradient(psi)?;
    let mut result = json!({"n": a.n, "m": a.m, "u": a.u, "branch": a.branch, "psi": psi, "model_gradient": grad});
    let mut verdicts = vec![Verdict::at_most(
        "psi_residual",
        (pr.params.lapse_sq(psi) - a.u * a.u).abs(),
        ROOT_TOL,
    )];
    if let Some(g) = a.grad {
        let ratio = pr.gradient_ratio(a.u, g, branch)?;
        let w = pr.w_functional(a.u, g * g, branch)?;
        result["gradient_ratio"] = json!(ratio);
        result["w"] = json!(w);
        verdicts.push(Verdict::holds(
            "gradient_estimate",
            ratio <= 1.0,
            format!("ratio {} <= 1", fmt_sig15(ratio)),
        ));
    }
    Ok(Outcome { result, verdicts })
}

pub fn gradest(a: &GradestArgs) -> Result<Outcome, CliError> {
    let n = Dimension::new(a.n)?;
    let file = std::fs::File::open(crate::output_path(&a.profile)).map_err(|source| CliError::Io {
        path: a.profile.clone(),
        source,
    })?;
    let profile = RadialProfile::read_csv(file, n, 1.0, Family::Evolved)?;
    let pr = a.m.map(|m| PseudoRadial::new(n, m)).transpose()?;
    // the model is compared at its own normalization u(0) = u_max(m)
    let scale = pr.map_or(1.0, |p| p.params.u_max) / profile.gauge;
    let mut table = String::from("r,u,ratio\n");
    let (mut worst_excess, mut worst_dev, mut used, mut skipped) = (0.0f64, 0.0f64, 0usize, 0usize);
    for s in profile.samples() {
        let (u, g) = (s.u * scale, s.dudr.abs() * scale);
        let ratio = match pr {
            Some(p) => {
                let branch = if s.r > 0.0 { Branch::Outer } else { Branch::Inner };
                p.gradient_ratio(u, g, branch)
            }
            None if u < 1.0 => nariai_ratio(n, u, g),
            None => Err(Error::EndpointLimit {
                what: "nariai_ratio",
                u,
                hint: "gradient_limit",
            }),
        };
        match ratio {
            Ok(q) => {
                worst_excess = worst_excess.max(q - 1.0);
                worst_dev = worst_dev.max((q - 1.0).abs());
                used += 1;
                let _ = writeln!(table, "{},{},{}", fmt_sig15(s.r), fmt_sig15(s.u), fmt_sig15(q));
            }
            Err(Error::EndpointLimit { .. }) => skipped += 1,
            Err(e) => return Err(e.into()),
        }
    }
    if used == 0 {
        return Err(CliError::usage("profile", "no interior samples to test"));
    }
    let mut verdicts = vec![Verdict::at_most("ratio_excess", worst_excess.max(0.0), a.tol)];
    if a.saturate {
        verdicts.push(Verdict::at_most("ratio_saturation", worst_dev, a.tol));
    }
    if let Some(p) = &a.out {
        write_output(p, table.as_bytes())?;
    }
    Ok(Outcome {
        result: json!({
            "samples": used,
            "endpoint_samples": skipped,
            "max_ratio_excess": worst_excess,
            "max_ratio_deviation": worst_dev,
        }),
        verdicts,
    })
}

pub fn expansion(a: &ExpansionArgs) -> Result<Outcome, CliError> {
    let n = Dimension::new(a.n)?;
    let target = match a.target {
        Some(t) => t,
        None => match a.order {
            4 => ExpansionTarget::Lapse,
            3 => ExpansionTarget::Psi,
            1 => ExpansionTarget::Ratio,
            p => return Err(CliError::usage("order", format!("no default target for order {p}; pass --target"))),
        },
    };
    let nf = a.n as f64;
    let sign = if a.inner { -1.0 } else { 1.0 };
    let report = match target {
        ExpansionTarget::Nariai => {
            let k = nf.sqrt();
            remainder_order(
                |r| Ok((k * sign * r).cos()),
                |r| Ok(expand_lapse(n, 1.0, 0.0, 0.0, sign * r)),
                a.order,
                &a.grid,
            )?
        }
        _ => {
            let sol = BkSolution::new(BkParameters::new(n, a.m)?, None)?;
            let p = sol.params;
            let h = (nf - 1.0) * p.u_max / p.r_zero;
            let pr = PseudoRadial::new(n, a.m)?;
            match target {
                ExpansionTarget::Lapse => remainder_order(
                    |r| Ok(sol.sample_at(sign * r)?.u),
                    |r| Ok(expand_lapse(n, p.u_max, h, 0.0, sign * r)),
                    a.order,
                    &a.grid,
                )?,
                ExpansionTarget::Psi => remainder_order(
                    |r| Ok(sol.sample_at(sign * r)?.rho),
                    |r| expand_psi(n, a.m, h, 0.0, sign * r),
                    a.order,
                    &a.grid,
                )?,
                _ => remainder_order(
                    |r| {
                        let s = sol.sample_at(sign * r)?;
                        let branch = if a.inner { Branch::Inner } else { Branch::Outer };
                        pr.gradient_ratio(s.u, s.dudr.abs(), branch)
                    },
                    |r| expand_ratio(n, a.m, h, sign * r),
                    a.order,
                    &a.grid,
                )?,
            }
        }
    };
    let mut table = String::from("r,exact,expansion,error,scaled\n");
    for row in &report.rows {
        let _ = writeln!(
            table,
            "{},{},{},{},{}",
            fmt_sig15(sign * row.r),
            fmt_sig15(row.exact),
            fmt_sig15(row.expansion),
            fmt_sig15(row.error),
            fmt_sig15(row.scaled)
        );
    }
    if let Some(p) = &a.out {
        write_output(p, table.as_bytes())?;
    }
    let growth = report.growth.iter().map(|g| fmt_sig15(*g)).collect::<Vec<_>>().join(", ");
    Ok(Outcome {
        result: json!({"target": target, "order": a.order, "rows": report.rows, "growth": report.growth}),
        verdicts: vec![Verdict::holds(
            format!("remainder_order_{}", a.order),
            report.pass,
            format!("scaled remainder growth per halving: {growth}"),
        )],
    })
}

pub fn limits(a: &LimitsArgs) -> Result<Outcome, CliError> {
    let n = Dimension::new(a.n)?;
    if !(a.r > 0.0) {
        return Err(CliError::usage("r", format!("{} is not positive", a.r)));
    }
    let sol = BkSolution::new(BkParameters::new(n, a.m)?, None)?;
    let u_max = sol.params.u_max;
    let target = gradient_limit(-(a.n as f64) * u_max)?;
    let quotient = |r: f64| -> Result<f64, CliError> {
        let s = sol.sample_at(r)?;
        Ok(s.dudr * s.dudr / (u_max - s.u))
    };
    let (qp, qm) = (quotient(a.r)?, quotient(-a.r)?);
    let k_light = surface_gravity(n, LIGHT_MASS, Side::Plus)?.k;
    Ok(Outcome {
        result: json!({
            "gradient_limit": target,
            "quotient_plus": qp,
            "quotient_minus": qm,
            "k_plus_light": k_light,
        }),
        verdicts: vec![
            Verdict::within("gradient_limit_plus", qp, target, a.tol * target),
            Verdict::within("gradient_limit_minus", qm, target, a.tol * target),
            Verdict::within("light_mass_gravity", k_light, 1.0, LIGHT_TOL),
        ],
    })
}

pub fn roundtrip(a: &RoundtripArgs) -> Result<Outcome, CliError> {
    let n = Dimension::new(a.n)?;
    let controls = EvolveControls::with_tol(a.tol);
    let rep = round_trip(n, a.rho0, &controls)?;
    Ok(Outcome {
        result: roundtrip_json(&rep),
        verdicts: roundtrip_verdicts(&rep, a.mass_tol, controls.constraint_tol),
    })
}

pub fn roundtrip_json(rep: &kottler::cauchy::RoundTripReport) -> Value {
    json!({
        "n": rep.n.get(),
        "rho0": rep.rho0,
        "expected_mass": rep.expected_mass,
        "m_outer": rep.outer.mass,
        "m_inner": rep.inner.mass,
        "class_outer": rep.outer.class.to_string(),
        "class_inner": rep.inner.class.to_string(),
        "k_outer": rep.outer.k,
        "k_inner": rep.inner.k,
        "rho_outer": rep.outer.rho_h,
        "rho_inner": rep.inner.rho_h,
        "mass_gap": rep.mass_gap,
        "constraint_max": rep.constraint_max,
    })
}

pub fn roundtrip_verdicts(rep: &kottler::cauchy::RoundTripReport, mass_tol: f64, constraint_tol: f64) -> Vec<Verdict> {
    let expect = if rep.expected_mass == max_mass(rep.n) {
        (RegionClass::Cylindrical, RegionClass::Cylindrical)
    } else {
        (RegionClass::Outer, RegionClass::Inner)
    };
    vec![
        Verdict::holds(
            "classes",
            (rep.outer.class, rep.inner.class) == expect,
            format!("plus side {}, minus side {}", rep.outer.class, rep.inner.class),
        ),
        Verdict::within("m_outer", rep.outer.mass, rep.expected_mass, mass_tol),
        Verdict::within("m_inner", rep.inner.mass, rep.expected_mass, mass_tol),
        Verdict::at_most("constraint_max", rep.constraint_max, constraint_tol),
    ]
}

fn pair(v: &[f64], flag: &'static str) -> Result<(f64, f64), CliError> {
    match v {
        [a, b] => Ok((*a, *b)),
        _ => Err(CliError::usage(flag, format!("expected 2 comma-separated values, got {}", v.len()))),
    }
}

fn window_from(a: &LojaArgs) -> Result<Window, CliError> {
    let center = a.center.as_deref().map_or(Ok((0.0, 0.0)), |c| pair(c, "center"))?;
    let window = a.window.as_deref().map(|w| pair(w, "window")).transpose()?;
    match (window, a.cap) {
        (Some(w), cap) => {
            if !(w.0 >= 0.0 && w.1 > w.0) {
                return Err(CliError::usage("window", format!("need 0 <= R1 < R2, got {},{}", w.0, w.1)));
            }
            Ok(Window {
                level_cap: cap,
                ..Window::annulus(center, w.0, w.1)
            })
        }
        (None, Some(cap)) if cap > 0.0 => Ok(Window::sublevel(cap)),
        (None, Some(cap)) => Err(CliError::usage("cap", format!("{cap} is not positive"))),
        (None, None) => Err(CliError::usage("window", "one of --window or --cap is required")),
    }
}

fn theta_of(a: &LojaArgs) -> Result<f64, CliError> {
    a.theta
        .ok_or_else(|| CliError::usage("theta", format!("required for --mode {:?}", a.mode).to_lowercase()))
}

fn verdict_word(ok: bool) -> &'static str {
    if ok {
        "pass"
    } else {
        "fail"
    }
}

pub fn loja(a: &LojaArgs) -> Result<Outcome, CliError> {
    if a.points < MIN_GRID_POINTS {
        return Err(CliError::usage("points", format!("{} < {MIN_GRID_POINTS}", a.points)));
    }
    let n = a.n.map(Dimension::new).transpose()?;
    let field = BuiltinField::parse(&a.field, n, a.m)?;
    if a.mode == LojaMode::Identity {
        let theta = theta_of(a)?;
        let region = match a.region.as_deref() {
            Some([x0, x1, y0, y1]) if x0 < x1 && y0 < y1 => Rect::new((*x0, *x1), (*y0, *y1)),
            Some(_) => return Err(CliError::usage("region", "expected x0,x1,y0,y1 with x0 < x1 and y0 < y1")),
            None => return Err(CliError::usage("region", "required for --mode identity")),
        };
        let study = identity_refinement(field, &a.grids, None, &region, a.c, theta)?;
        let verdicts: Vec<_> = study
            .orders
            .iter()
            .enumerate()
            .map(|(i, o)| Verdict::within(format!("identity_order_{i}"), *o, 2.0, a.order_tol))
            .collect();
        let ok = verdicts.iter().all(|v| v.status == crate::report::Status::Pass);
        return Ok(Outcome {
            result: json!({"theta": theta, "c": a.c, "levels": study.levels, "orders": study.orders, "verdict": verdict_word(ok)}),
            verdicts,
        });
    }
    let window = window_from(a)?;
    let f = builtin_field(field, a.points)?;
    if let Some(p) = &a.csv {
        let mut table = String::from("ln_gap,ln_grad_sq\n");
        for (d, g) in window_samples(&f, &window, Stencil::default()) {
            let _ = writeln!(table, "{},{}", fmt_sig15(d.ln()), fmt_sig15(g.ln()));
        }
        write_output(p, table.as_bytes())?;
    }
    let (result, verdict) = match a.mode {
        LojaMode::Fit => {
            let fit = fit_exponent(&f, &window)?;
            let v = match a.expect_theta {
                Some(t) => Verdict::within("theta", fit.theta, t, a.theta_tol),
                None => Verdict::holds(
                    "fit_samples",
                    fit.sample_count >= MIN_FIT_SAMPLES,
                    format!("{} samples", fit.sample_count),
                ),
            };
            let ok = v.status == crate::report::Status::Pass;
            (
                json!({"theta": fit.theta, "c": fit.c, "r2": fit.r2, "sample_count": fit.sample_count, "verdict": verdict_word(ok)}),
                v,
            )
        }
        LojaMode::Forward | LojaMode::Reverse => {
            let theta = theta_of(a)?;
            let rep = if a.mode == LojaMode::Forward {
                verify_forward(&f, theta, &window)?
            } else {
                verify_reverse(&f, theta, &window)?
            };
            let v = Verdict::holds(
                format!("{:?}", rep.kind).to_lowercase(),
                rep.pass,
                format!("trend {} over {} samples", fmt_sig15(rep.trend), rep.sample_count),
            );
            (
                json!({
                    "theta": theta,
                    "c": rep.c,
                    "min_ratio": rep.min_ratio,
                    "max_ratio": rep.max_ratio,
                    "trend": rep.trend,
                    "sample_count": rep.sample_count,
                    "verdict": verdict_word(rep.pass),
                }),
                v,
            )
        }
        LojaMode::Identity => unreachable!("handled above"),
    };
    Ok(Outcome {
        result,
        verdicts: vec![verdict],
    })
}

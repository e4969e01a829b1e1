use std::fmt::Write as _;

use kottler::cauchy::{round_trip, EvolveControls};
use kottler::mass::{mass_grid, monotonicity_scan, surface_gravity, virtual_mass, RegionClass};
use kottler::profile::round_sig15;
use kottler::{Dimension, Side};
use rayon::prelude::*;
use serde_json::json;

use crate::commands::roundtrip_verdicts;
use crate::error::CliError;
use crate::report::{Status, Verdict};
use crate::{write_output, Outcome, SweepArgs, SweepCase};

const MASS_ROUND_TRIP_TOL: f64 = 1e-8;

/// Parses `v1,v2,a..b:count` into a value list.
pub fn parse_values(spec: &str, flag: &'static str) -> Result<Vec<f64>, CliError> {
    let num = |s: &str| -> Result<f64, CliError> {
        s.trim()
            .parse::<f64>()
            .ok()
            .filter(|x| x.is_finite())
            .ok_or_else(|| CliError::usage(flag, format!("`{s}` is not a number")))
    };
    let mut out = Vec::new();
    for item in spec.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let Some((a, rest)) = item.split_once("..") else {
            out.push(num(item)?);
            continue;
        };
        let (b, count) = rest
            .split_once(':')
            .ok_or_else(|| CliError::usage(flag, format!("range `{item}` needs a point count, as in a..b:10")))?;
        let count: usize = count
            .trim()
            .parse()
            .map_err(|_| CliError::usage(flag, format!("bad point count in `{item}`")))?;
        let (a, b) = (num(a)?, num(b)?);
        if count == 0 || a > b {
            return Err(CliError::usage(flag, format!("empty range `{item}`")));
        }
        if count == 1 {
            out.push(a);
        } else {
            out.extend((0..count).map(|i| a + (b - a) * i as f64 / (count - 1) as f64));
        }
    }
    if out.is_empty() {
        return Err(CliError::usage(flag, "empty value list"));
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy)]
enum Case {
    Roundtrip { n: Dimension, rho0: f64 },
    Monotonicity { n: Dimension },
    Mass { n: Dimension, m: f64 },
}

impl Case {
    fn label(&self) -> String {
        match *self {
            Case::Roundtrip { n, rho0 } => format!("roundtrip[n={},rho0={}]", n.get(), round_sig15(rho0)),
            Case::Monotonicity { n } => format!("monotonicity[n={}]", n.get()),
            Case::Mass { n, m } => format!("mass[n={},m={}]", n.get(), round_sig15(m)),
        }
    }
}

fn run_case(case: &Case, a: &SweepArgs) -> Vec<Verdict> {
    let result = match *case {
        Case::Roundtrip { n, rho0 } => {
            let controls = EvolveControls::with_tol(a.tol);
            round_trip(n, rho0, &controls).map(|rep| {
                roundtrip_verdicts(&rep, a.mass_tol, controls.constraint_tol)
            })
        }
        Case::Monotonicity { n } => monotonicity_scan(n, &mass_grid(n, a.points, 1e-3)).map(|rep| {
            vec![Verdict::holds(
                "monotone",
                rep.pass,
                format!(
                    "{} points, {} k_plus and {} k_minus violations",
                    rep.points,
                    rep.plus_violations.len(),
                    rep.minus_violations.len()
                ),
            )]
        }),
        Case::Mass { n, m } => (|| {
            let mut v = Vec::new();
            for (side, class, name) in [
                (Side::Plus, RegionClass::Outer, "mass_from_k_plus"),
                (Side::Minus, RegionClass::Inner, "mass_from_k_minus"),
            ] {
                let k = surface_gravity(n, m, side)?.k;
                v.push(Verdict::within(name, virtual_mass(n, k, class)?, m, MASS_ROUND_TRIP_TOL));
            }
            Ok(v)
        })(),
    };
    result.unwrap_or_else(|e: kottler::Error| vec![Verdict::error("case", e.to_string())])
}

fn case_status(verdicts: &[Verdict]) -> Status {
    if verdicts.iter().any(|v| v.status == Status::Error) {
        Status::Error
    } else if verdicts.iter().all(|v| v.status == Status::Pass) {
        Status::Pass
    } else {
        Status::Fail
    }
}

pub fn run(a: &SweepArgs) -> Result<Outcome, CliError> {
    if a.n.is_empty() {
        return Err(CliError::usage("n", "empty dimension list"));
    }
    let dims = a.n.iter().map(|&n| Dimension::new(n)).collect::<Result<Vec<_>, _>>()?;
    let mut cases = Vec::new();
    match a.case {
        SweepCase::Roundtrip => {
            let radii = match (&a.masses, &a.rho0) {
                (_, Some(spec)) => Some(parse_values(spec, "rho0")?),
                (Some(spec), None) => {
                    let masses = parse_values(spec, "masses")?;
                    for &n in &dims {
                        for &m in &masses {
                            let rho0 = ((n.get() as f64 - 2.0) * m).powf(1.0 / n.get() as f64);
                            cases.push(Case::Roundtrip { n, rho0 });
                        }
                    }
                    None
                }
                (None, None) => return Err(CliError::usage("masses", "one of --masses or --rho0 is required")),
            };
            for rho0 in radii.into_iter().flatten() {
                cases.extend(dims.iter().map(|&n| Case::Roundtrip { n, rho0 }));
            }
        }
        SweepCase::Monotonicity => cases.extend(dims.iter().map(|&n| Case::Monotonicity { n })),
        SweepCase::Mass => {
            let spec = a
                .masses
                .as_deref()
                .ok_or_else(|| CliError::usage("masses", "required for --case mass"))?;
            let masses = parse_values(spec, "masses")?;
            for &n in &dims {
                cases.extend(masses.iter().map(|&m| Case::Mass { n, m }));
            }
        }
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(a.threads)
        .build()
        .map_err(|e| CliError::usage("threads", e.to_string()))?;
    let outcomes: Vec<Vec<Verdict>> = pool.install(|| cases.par_iter().map(|c| run_case(c, a)).collect());

    let mut verdicts = Vec::new();
    let mut table = String::from("case,status,checks\n");
    let (mut passed, mut failed, mut errors) = (0, 0, 0);
    for (case, vs) in cases.iter().zip(outcomes) {
        let label = case.label();
        let status = case_status(&vs);
        match status {
            Status::Pass => passed += 1,
            Status::Fail => failed += 1,
            Status::Error => errors += 1,
        }
        let _ = writeln!(table, "\"{label}\",{status},{}", vs.len());
        verdicts.extend(vs.into_iter().map(|v| v.prefixed(&label)));
    }
    if let Some(p) = &a.out {
        write_output(p, table.as_bytes())?;
    }
    Ok(Outcome {
        result: json!({"cases": cases.len(), "passed": passed, "failed": failed, "errors": errors}),
        verdicts,
    })
}

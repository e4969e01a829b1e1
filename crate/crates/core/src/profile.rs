//! Sampled radial solutions in the Gauss gauge and their file formats.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::cauchy::{constraint_residual, RadialState};
use crate::error::{Error, Result};
use crate::model::Dimension;

pub const CSV_HEADER: &str = "r,rho,u,dudr,drhodr,constraint_residual";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Bk,
    Nariai,
    Evolved,
}

impl std::fmt::Display for Family {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Family::Bk => "bk",
            Family::Nariai => "nariai",
            Family::Evolved => "evolved",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfileSample {
    pub r: f64,
    pub rho: f64,
    pub u: f64,
    pub dudr: f64,
    pub drhodr: f64,
    pub constraint_residual: f64,
}

impl ProfileSample {
    pub fn from_state(r: f64, s: RadialState, constraint_residual: f64) -> Self {
        ProfileSample {
            r,
            rho: s.rho,
            u: s.u,
            dudr: s.v,
            drhodr: s.w,
            constraint_residual,
        }
    }

    pub fn state(&self) -> RadialState {
        RadialState {
            u: self.u,
            v: self.dudr,
            rho: self.rho,
            w: self.drhodr,
        }
    }
}

/// JSON sidecar describing how a profile was produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileManifest {
    pub family: Family,
    pub n: usize,
    pub m: Option<f64>,
    pub kappa: f64,
    pub gauge: f64,
    pub samples: usize,
    pub tolerances: serde_json::Map<String, serde_json::Value>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RadialProfile {
    pub n: Dimension,
    pub kappa: f64,
    pub gauge: f64,
    pub family: Family,
    pub mass: Option<f64>,
    samples: Vec<ProfileSample>,
}

impl RadialProfile {
    pub fn new(
        n: Dimension,
        kappa: f64,
        gauge: f64,
        family: Family,
        mass: Option<f64>,
        samples: Vec<ProfileSample>,
    ) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::InsufficientGrid(format!(
                "a profile needs at least 2 samples, got {}",
                samples.len()
            )));
        }
        if let Some(i) = samples.windows(2).position(|w| !(w[1].r > w[0].r)) {
            return Err(Error::Degenerate(format!(
                "r not strictly increasing at sample {} (r = {})",
                i + 1,
                samples[i + 1].r
            )));
        }
        Ok(RadialProfile {
            n,
            kappa,
            gauge,
            family,
            mass,
            samples,
        })
    }

    pub fn samples(&self) -> &[ProfileSample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// The sample on the maximum set, `r = 0`.
    pub fn origin(&self) -> Option<&ProfileSample> {
        self.samples.iter().find(|s| s.r.abs() <= 1e-14)
    }

    pub fn r_range(&self) -> (f64, f64) {
        (self.samples[0].r, self.samples[self.samples.len() - 1].r)
    }

    pub fn rho_range(&self) -> (f64, f64) {
        self.samples
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), s| {
                (lo.min(s.rho), hi.max(s.rho))
            })
    }

    pub fn max_constraint_residual(&self) -> f64 {
        self.samples
            .iter()
            .map(|s| s.constraint_residual.abs())
            .fold(0.0, f64::max)
    }

    /// Conserved ratio `w / u` of the warped reduction, read at the origin.
    pub fn ratio(&self) -> f64 {
        self.origin()
            .map(|o| o.drhodr / o.u)
            .unwrap_or_else(|| {
                let s = self
                    .samples
                    .iter()
                    .max_by(|a, b| a.u.total_cmp(&b.u))
                    .expect("non-empty");
                s.drhodr / s.u
            })
    }

    fn derivative(&self, s: &RadialState, q0: f64) -> RadialState {
        let nf = self.n.f();
        RadialState {
            u: s.v,
            v: -nf * s.u - (nf - 1.0) * (s.w / s.rho) * s.v,
            rho: s.w,
            w: q0 * s.v,
        }
    }

    /// Cubic Hermite interpolation of the state at `r`, using the static
    /// equations for the derivative data.
    pub fn interpolate(&self, r: f64) -> Option<ProfileSample> {
        let (lo, hi) = self.r_range();
        if !(r >= lo && r <= hi) {
            return None;
        }
        let i = match self.samples.binary_search_by(|s| s.r.total_cmp(&r)) {
            Ok(i) => return Some(self.samples[i]),
            Err(i) => i,
        };
        let (a, b) = (&self.samples[i - 1], &self.samples[i]);
        let q0 = self.ratio();
        let (ya, yb) = (a.state(), b.state());
        let (da, db) = (self.derivative(&ya, q0), self.derivative(&yb, q0));
        let h = b.r - a.r;
        let t = (r - a.r) / h;
        let h00 = (1.0 + 2.0 * t) * (1.0 - t) * (1.0 - t);
        let h10 = t * (1.0 - t) * (1.0 - t);
        let h01 = t * t * (3.0 - 2.0 * t);
        let h11 = t * t * (t - 1.0);
        let mix = |p0: f64, m0: f64, p1: f64, m1: f64| h00 * p0 + h10 * h * m0 + h01 * p1 + h11 * h * m1;
        let state = RadialState {
            u: mix(ya.u, da.u, yb.u, db.u),
            v: mix(ya.v, da.v, yb.v, db.v),
            rho: mix(ya.rho, da.rho, yb.rho, db.rho),
            w: mix(ya.w, da.w, yb.w, db.w),
        };
        Some(ProfileSample::from_state(
            r,
            state,
            constraint_residual(&state, self.n, self.kappa),
        ))
    }

    pub fn manifest(
        &self,
        tolerances: serde_json::Map<String, serde_json::Value>,
    ) -> ProfileManifest {
        ProfileManifest {
            family: self.family,
            n: self.n.get(),
            m: self.mass,
            kappa: self.kappa,
            gauge: self.gauge,
            samples: self.samples.len(),
            tolerances,
        }
    }

    /// Writes the CSV form, 15 significant digits per value.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "{CSV_HEADER}")?;
        for s in &self.samples {
            writeln!(
                out,
                "{},{},{},{},{},{}",
                fmt_sig15(s.r),
                fmt_sig15(s.rho),
                fmt_sig15(s.u),
                fmt_sig15(s.dudr),
                fmt_sig15(s.drhodr),
                fmt_sig15(s.constraint_residual)
            )?;
        }
        Ok(())
    }

    /// Reads the CSV form. Dimension and fiber constant are not part of the
    /// file; the gauge is taken from the `r = 0` sample when present.
    pub fn read_csv<R: Read>(input: R, n: Dimension, kappa: f64, family: Family) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
        let headers = reader
            .headers()
            .map_err(|e| Error::Parse(e.to_string()))?
            .iter()
            .collect::<Vec<_>>()
            .join(",");
        if headers != CSV_HEADER {
            return Err(Error::Parse(format!(
                "expected header `{CSV_HEADER}`, found `{headers}`"
            )));
        }
        let mut samples = Vec::new();
        for (line, rec) in reader.records().enumerate() {
            let rec = rec.map_err(|e| Error::Parse(e.to_string()))?;
            let mut vals = [0.0; 6];
            if rec.len() != 6 {
                return Err(Error::Parse(format!("row {}: expected 6 fields", line + 2)));
            }
            for (v, field) in vals.iter_mut().zip(rec.iter()) {
                *v = field
                    .parse()
                    .map_err(|_| Error::Parse(format!("row {}: bad number `{field}`", line + 2)))?;
            }
            samples.push(ProfileSample {
                r: vals[0],
                rho: vals[1],
                u: vals[2],
                dudr: vals[3],
                drhodr: vals[4],
                constraint_residual: vals[5],
            });
        }
        let gauge = samples
            .iter()
            .find(|s| s.r.abs() <= 1e-14)
            .map(|s| s.u)
            .unwrap_or_else(|| samples.iter().map(|s| s.u).fold(0.0, f64::max));
        RadialProfile::new(n, kappa, gauge, family, None, samples)
    }
}

/// Formats with 15 significant digits.
pub fn fmt_sig15(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    format!("{x:.14e}")
}

/// Rounds to 15 significant digits.
pub fn round_sig15(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    fmt_sig15(x).parse().unwrap_or(x)
}

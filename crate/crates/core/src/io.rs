//! Problem files, result records and CSV output.
//!
//! Problem files are TOML:
//!
//! ```toml
//! [domain]
//! lower = "-inf"          # numbers, or the strings "inf" / "-inf"
//! upper = "inf"
//!
//! [kernel]
//! kind = "constant-band"  # constant-band | tent-band | table2d
//! params = [1.0, 1.0]
//! kappa0 = 1.0            # the four bounds are optional for the band kinds
//! kappa1 = 1.0
//! delta0 = 1.0
//! delta1 = 1.0
//!
//! [coeffs]
//! q_kind = "constant"     # constant | affine | indicator-bump | tent | table
//! q_params = [0.2]
//! a_kind = "constant"
//! a_params = [0.0]
//! ```

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::certify::{Check, PropertyReport};
use crate::eigsolve::PrincipalSolution;
use crate::error::{Error, Result};
use crate::exhaust::{ExhaustionTrace, Snapshot};
use crate::functions::{Coefficient, Kernel};
use crate::harnack::HarnackReport;
use crate::kpp::SweepRow;
use crate::problem::{Interval, KernelSpec, ProblemSpec};

/// A finite number or one of `"inf"`, `"+inf"`, `"-inf"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Bound {
    Number(f64),
    Text(String),
}

impl Bound {
    pub fn value(&self) -> Result<f64> {
        match self {
            Bound::Number(v) => Ok(*v),
            Bound::Text(s) => match s.trim() {
                "inf" | "+inf" | "infinity" => Ok(f64::INFINITY),
                "-inf" | "-infinity" => Ok(f64::NEG_INFINITY),
                other => other
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad interval end '{other}'"))),
            },
        }
    }

    pub fn from_value(v: f64) -> Self {
        if v.is_infinite() {
            Bound::Text(if v > 0.0 { "inf" } else { "-inf" }.into())
        } else {
            Bound::Number(v)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSection {
    pub lower: Bound,
    pub upper: Bound,
}

impl DomainSection {
    pub fn build(&self) -> Result<Interval> {
        Interval::new(self.lower.value()?, self.upper.value()?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelSection {
    pub kind: String,
    pub params: Vec<f64>,
    pub kappa0: Option<f64>,
    pub kappa1: Option<f64>,
    pub delta0: Option<f64>,
    pub delta1: Option<f64>,
}

impl KernelSection {
    /// Missing bounds default to the tight ones of the band kinds: `(v, v, r, r)`
    /// for `constant-band`, `(h/2, h, r/2, r)` for `tent-band`. A `table2d`
    /// kernel needs all four.
    pub fn build(&self) -> Result<KernelSpec> {
        let kernel = Kernel::from_kind(&self.kind, &self.params)?;
        let defaults = match &kernel {
            Kernel::ConstantBand { value, radius } => Some((*value, *value, *radius, *radius)),
            Kernel::TentBand { height, radius } => {
                Some((height / 2.0, *height, radius / 2.0, *radius))
            }
            _ => None,
        };
        let pick = |v: Option<f64>, d: Option<f64>, name: &str| {
            v.or(d).ok_or_else(|| {
                Error::Parse(format!(
                    "kernel kind '{}' needs an explicit {name}",
                    self.kind
                ))
            })
        };
        Ok(KernelSpec::new(
            kernel,
            pick(self.kappa0, defaults.map(|d| d.0), "kappa0")?,
            pick(self.kappa1, defaults.map(|d| d.1), "kappa1")?,
            pick(self.delta0, defaults.map(|d| d.2), "delta0")?,
            pick(self.delta1, defaults.map(|d| d.3), "delta1")?,
        ))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoeffSection {
    pub q_kind: String,
    pub q_params: Vec<f64>,
    pub a_kind: String,
    pub a_params: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub domain: DomainSection,
    pub kernel: KernelSection,
    pub coeffs: CoeffSection,
    /// Validation mesh size; the library default when absent.
    pub validation_mesh: Option<usize>,
}

impl ProblemFile {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn build(&self) -> Result<ProblemSpec> {
        let q = Coefficient::from_kind(&self.coeffs.q_kind, &self.coeffs.q_params)?;
        let a = Coefficient::from_kind(&self.coeffs.a_kind, &self.coeffs.a_params)?;
        let mut p = ProblemSpec::new(self.domain.build()?, self.kernel.build()?, q, a)?;
        if let Some(m) = self.validation_mesh {
            if m < 2 {
                return Err(Error::Parse("validation_mesh must be >= 2".into()));
            }
            p.validation_mesh = m;
        }
        Ok(p)
    }
}

/// Structured-text summary of one solve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenRecord {
    pub lambda_est: f64,
    pub lambda_lo: f64,
    pub lambda_hi: f64,
    pub iterations: usize,
    pub residual: f64,
    pub n: usize,
    pub bc_side: String,
}

impl EigenRecord {
    pub fn from_solution(s: &PrincipalSolution) -> Self {
        let e = &s.eigenpair;
        Self {
            lambda_est: e.lambda_est,
            lambda_lo: e.lambda_lo,
            lambda_hi: e.lambda_hi,
            iterations: e.iterations,
            residual: e.residual,
            n: s.grid.len(),
            bc_side: s.bc_side.name().to_string(),
        }
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Parse(e.to_string()))
    }
}

/// Serializes `rows` as CSV with a header taken from the field names.
pub fn write_csv<W: Write, T: Serialize>(w: W, rows: impl IntoIterator<Item = T>) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for r in rows {
        out.serialize(r).map_err(std::io::Error::from)?;
    }
    out.flush()?;
    Ok(())
}

fn write_csv_file<T: Serialize>(path: &Path, rows: impl IntoIterator<Item = T>) -> Result<()> {
    write_csv(fs::File::create(path)?, rows)
}

#[derive(Serialize)]
struct XPhi {
    x: f64,
    phi: f64,
}

pub fn write_eigenfunction(path: &Path, s: &PrincipalSolution) -> Result<()> {
    write_csv_file(path, s.samples().map(|(x, phi)| XPhi { x, phi }))
}

pub fn write_snapshot(path: &Path, snap: &Snapshot) -> Result<()> {
    write_csv_file(
        path,
        snap.nodes
            .iter()
            .zip(&snap.phi)
            .map(|(&x, &phi)| XPhi { x, phi }),
    )
}

#[derive(Serialize)]
struct TraceRow {
    radius: f64,
    n: usize,
    lambda_lo: f64,
    lambda_est: f64,
    lambda_hi: f64,
}

pub fn write_trace(path: &Path, t: &ExhaustionTrace) -> Result<()> {
    write_csv_file(
        path,
        (0..t.len()).map(|k| TraceRow {
            radius: t.radii[k],
            n: t.ns[k],
            lambda_lo: t.brackets[k].0,
            lambda_est: t.lambdas[k],
            lambda_hi: t.brackets[k].1,
        }),
    )
}

#[derive(Serialize)]
struct HarnackRow {
    r1: f64,
    r2: f64,
    eps: f64,
    delta: f64,
    #[serde(rename = "N")]
    n: u64,
    #[serde(rename = "log_C")]
    log_c: f64,
    empirical_ratio: f64,
    pass: bool,
}

pub fn write_harnack(path: &Path, reports: &[HarnackReport]) -> Result<()> {
    write_csv_file(
        path,
        reports.iter().map(|r| HarnackRow {
            r1: r.constants.r1,
            r2: r.constants.r2,
            eps: r.constants.eps,
            delta: r.constants.delta,
            n: r.constants.n,
            log_c: r.log_theoretical_c,
            empirical_ratio: r.empirical_ratio,
            pass: r.pass,
        }),
    )
}

#[derive(Serialize)]
struct CertifyRow {
    property_id: &'static str,
    pass: bool,
    lhs: f64,
    rhs: f64,
    tolerance: f64,
}

pub fn write_certify<W: Write>(w: W, reports: &[PropertyReport]) -> Result<()> {
    write_csv(
        w,
        reports.iter().map(|r| CertifyRow {
            property_id: r.property_id.name(),
            pass: r.pass,
            lhs: r.lhs,
            rhs: r.rhs,
            tolerance: r.tolerance,
        }),
    )
}

#[derive(Serialize)]
struct SweepCsvRow {
    c: f64,
    lambda_lin: f64,
    simulated_mass: f64,
    predicted: &'static str,
    agree: bool,
}

pub fn write_kpp_sweep(path: &Path, rows: &[SweepRow]) -> Result<()> {
    write_csv_file(
        path,
        rows.iter().map(|r| SweepCsvRow {
            c: r.c,
            lambda_lin: r.verdict.lambda_lin,
            simulated_mass: r.verdict.simulated_mass,
            predicted: r.verdict.predicted.name(),
            agree: r.verdict.agree,
        }),
    )
}

#[derive(Serialize)]
struct FieldRow {
    t: f64,
    x: f64,
    v: f64,
}

/// Long-format `(t, x, v)` dump of recorded frames.
pub fn write_kpp_field(path: &Path, nodes: &[f64], frames: &[(f64, Vec<f64>)]) -> Result<()> {
    write_csv_file(
        path,
        frames.iter().flat_map(|(t, v)| {
            nodes
                .iter()
                .zip(v)
                .map(move |(&x, &v)| FieldRow { t: *t, x, v })
        }),
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoeffEntry {
    pub kind: String,
    pub params: Vec<f64>,
}

/// One `[[check]]` table of a batch file. Which optional fields are required
/// depends on `property`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckEntry {
    pub property: String,
    pub inner: Option<[f64; 2]>,
    pub outer: Option<[f64; 2]>,
    pub a1: Option<CoeffEntry>,
    pub a2: Option<CoeffEntry>,
    pub j1: Option<KernelSection>,
    pub j2: Option<KernelSection>,
    /// `[lo, hi, count]`.
    pub gammas: Option<[f64; 3]>,
    pub radii: Option<Vec<f64>>,
    pub h: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertifyBatch {
    #[serde(default)]
    pub check: Vec<CheckEntry>,
}

impl CertifyBatch {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&fs::read_to_string(path)?)
    }

    pub fn checks(&self) -> Result<Vec<Check>> {
        self.check.iter().map(CheckEntry::build).collect()
    }
}

impl CheckEntry {
    pub fn build(&self) -> Result<Check> {
        fn need<'a, T>(v: &'a Option<T>, prop: &str, field: &str) -> Result<&'a T> {
            v.as_ref()
                .ok_or_else(|| Error::Parse(format!("check '{prop}' needs '{field}'")))
        }
        let p = self.property.as_str();
        let interval = |v: &[f64; 2]| Interval::new(v[0], v[1]);
        let coeff = |c: &CoeffEntry| Coefficient::from_kind(&c.kind, &c.params);
        Ok(match p {
            "domain_monotone" => Check::DomainMonotone {
                inner: interval(need(&self.inner, p, "inner")?)?,
                outer: interval(need(&self.outer, p, "outer")?)?,
            },
            "a_monotone" | "a_lipschitz" => Check::AMonotoneLipschitz {
                a1: coeff(need(&self.a1, p, "a1")?)?,
                a2: coeff(need(&self.a2, p, "a2")?)?,
            },
            "lower_bound" => Check::LowerBound,
            "j_monotone" => Check::JMonotone {
                j1: need(&self.j1, p, "j1")?.build()?,
                j2: need(&self.j2, p, "j2")?.build()?,
            },
            "dual_gap" => Check::DualGap,
            "exp_testfn_bound" => {
                let g = need(&self.gammas, p, "gammas")?;
                if g[2] < 2.0 || g[2].fract() != 0.0 {
                    return Err(Error::Parse("gammas count must be an integer >= 2".into()));
                }
                let h = *need(&self.h, p, "h")?;
                if !(h > 0.0) {
                    return Err(Error::Parse("h must be > 0".into()));
                }
                Check::ExpTestfnBound {
                    gammas: crate::certify::uniform_gamma_grid(g[0], g[1], g[2] as usize),
                    radii: need(&self.radii, p, "radii")?.clone(),
                    h,
                }
            }
            other => return Err(Error::Parse(format!("unknown property '{other}'"))),
        })
    }
}

//! Continuous problem data and the sampled checks of the standing assumptions.
//!
//! A [`ProblemSpec`] never stores samples. Everything is kept as analytic maps so
//! that bounded truncations of an unbounded interval can be taken later at any
//! resolution.

use std::fmt;
use std::sync::Arc;

use crate::discretize::Grid;
use crate::error::{Error, Result};
use crate::functions::{in_band, Coefficient, Kernel};

/// Open interval `(lower, upper)`; either end may be infinite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    lower: f64,
    upper: f64,
}

impl Interval {
    pub fn new(lower: f64, upper: f64) -> Result<Self> {
        if lower.is_nan() || upper.is_nan() {
            return Err(Error::InvalidInput("interval endpoint is NaN".into()));
        }
        if lower == f64::INFINITY || upper == f64::NEG_INFINITY || lower >= upper {
            return Err(Error::InvalidInput(format!(
                "interval needs lower < upper, got ({lower}, {upper})"
            )));
        }
        Ok(Self { lower, upper })
    }

    pub fn real_line() -> Self {
        Self {
            lower: f64::NEG_INFINITY,
            upper: f64::INFINITY,
        }
    }

    pub fn lower(&self) -> f64 {
        self.lower
    }

    pub fn upper(&self) -> f64 {
        self.upper
    }

    pub fn is_bounded(&self) -> bool {
        self.lower.is_finite() && self.upper.is_finite()
    }

    pub fn length(&self) -> f64 {
        self.upper - self.lower
    }

    /// `lower + upper`, the pivot of the reflection `x -> lower + upper - x`.
    pub fn reflection_pivot(&self) -> Result<f64> {
        if self.is_bounded() {
            Ok(self.lower + self.upper)
        } else {
            Err(Error::Unsupported(format!(
                "reflection needs a bounded interval, got {self}"
            )))
        }
    }

    /// Open membership.
    pub fn contains(&self, x: f64) -> bool {
        self.lower < x && x < self.upper
    }

    pub fn contains_closed(&self, x: f64) -> bool {
        self.lower <= x && x <= self.upper
    }

    /// Closure of `self` inside the closure of `other`.
    pub fn is_within(&self, other: &Interval) -> bool {
        other.lower <= self.lower && self.upper <= other.upper
    }

    pub fn intersect(&self, other: &Interval) -> Option<Interval> {
        Interval::new(self.lower.max(other.lower), self.upper.min(other.upper)).ok()
    }

    /// Distance from a closed segment `[a, b]` to the boundary of `self`
    /// (`+inf` towards an infinite end).
    pub fn distance_to_boundary(&self, a: f64, b: f64) -> f64 {
        (a - self.lower).min(self.upper - b)
    }

    /// A bounded piece of `self` for sampling: `self` when bounded, otherwise the
    /// intersection with a window of half-width `radius` around the finite end
    /// (or around 0 on the whole line).
    pub fn sampling_window(&self, radius: f64) -> Interval {
        if self.is_bounded() {
            return *self;
        }
        let (lo, hi) = match (self.lower.is_finite(), self.upper.is_finite()) {
            (true, false) => (self.lower, self.lower + 2.0 * radius),
            (false, true) => (self.upper - 2.0 * radius, self.upper),
            _ => (-radius, radius),
        };
        Interval {
            lower: lo,
            upper: hi,
        }
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.lower, self.upper)
    }
}

/// Kernel together with its declared non-degeneracy certificate
/// `kappa0 1{|x-y|<delta0} <= J(x,y) <= kappa1 1{|x-y|<delta1}`.
#[derive(Debug, Clone)]
pub struct KernelSpec {
    pub kernel: Kernel,
    pub kappa0: f64,
    pub kappa1: f64,
    pub delta0: f64,
    pub delta1: f64,
}

impl KernelSpec {
    pub fn new(kernel: Kernel, kappa0: f64, kappa1: f64, delta0: f64, delta1: f64) -> Self {
        Self {
            kernel,
            kappa0,
            kappa1,
            delta0,
            delta1,
        }
    }

    /// Constant band `value * 1{|x-y| < radius}` with the tight certificate.
    pub fn constant_band(value: f64, radius: f64) -> Self {
        Self::new(
            Kernel::ConstantBand { value, radius },
            value,
            value,
            radius,
            radius,
        )
    }

    pub fn eval(&self, x: f64, y: f64) -> f64 {
        self.kernel.eval(x, y)
    }

    pub fn reflected(&self, pivot: f64) -> Self {
        Self {
            kernel: self.kernel.reflected(pivot),
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QSign {
    Positive,
    Negative,
}

impl QSign {
    pub fn of(v: f64) -> Option<QSign> {
        if v > 0.0 {
            Some(QSign::Positive)
        } else if v < 0.0 {
            Some(QSign::Negative)
        } else {
            None
        }
    }

    pub fn flipped(self) -> QSign {
        match self {
            QSign::Positive => QSign::Negative,
            QSign::Negative => QSign::Positive,
        }
    }
}

/// Drift `q` and zeroth-order coefficient `a` with their declared bounds.
#[derive(Debug, Clone)]
pub struct CoefficientSpec {
    pub q: Coefficient,
    pub a: Coefficient,
    /// Declared `inf |q|`; zero means the drift may degenerate.
    pub q_inf_abs: f64,
    pub q_sign: QSign,
    pub q_sup: f64,
    pub a_sup: f64,
}

impl CoefficientSpec {
    /// Declares bounds from samples of `q` and `a` on `window` (midpoint mesh).
    pub fn infer(q: Coefficient, a: Coefficient, window: &Interval, mesh: usize) -> Result<Self> {
        let xs = midpoint_mesh(window, mesh.max(2));
        let mut q_inf = f64::INFINITY;
        let mut q_sup: f64 = 0.0;
        let mut a_sup: f64 = 0.0;
        let mut sign = None;
        for &x in &xs {
            let qv = q.eval(x);
            let av = a.eval(x);
            if sign.is_none() {
                sign = QSign::of(qv);
            }
            q_inf = q_inf.min(qv.abs());
            q_sup = q_sup.max(qv.abs());
            a_sup = a_sup.max(av.abs());
        }
        let q_sign = sign.ok_or_else(|| {
            Error::InvalidInput("drift q vanishes at every sample; no sign to declare".into())
        })?;
        Ok(Self {
            q,
            a,
            q_inf_abs: q_inf,
            q_sign,
            q_sup,
            a_sup,
        })
    }
}

#[derive(Debug, Clone)]
pub struct ProblemSpec {
    pub domain: Interval,
    pub kernel: KernelSpec,
    pub coeffs: CoefficientSpec,
    /// Resolution of the uniform validation mesh.
    pub validation_mesh: usize,
}

pub const DEFAULT_VALIDATION_MESH: usize = 64;

/// Odd refinement factor of the inference mesh: the midpoints of an `m`-point
/// validation mesh are among those of the `m * 63`-point inference mesh, so
/// declared bounds always cover the validation samples.
const INFERENCE_REFINEMENT: usize = 63;

impl ProblemSpec {
    /// Builds a problem and declares the coefficient bounds from samples on the
    /// sampling window.
    pub fn new(
        domain: Interval,
        kernel: KernelSpec,
        q: Coefficient,
        a: Coefficient,
    ) -> Result<Self> {
        let window = sampling_window_for(&domain, &kernel);
        let coeffs = CoefficientSpec::infer(
            q,
            a,
            &window,
            INFERENCE_REFINEMENT * DEFAULT_VALIDATION_MESH,
        )?;
        Ok(Self {
            domain,
            kernel,
            coeffs,
            validation_mesh: DEFAULT_VALIDATION_MESH,
        })
    }

    pub fn q(&self, x: f64) -> f64 {
        self.coeffs.q.eval(x)
    }

    pub fn a(&self, x: f64) -> f64 {
        self.coeffs.a.eval(x)
    }

    pub fn j(&self, x: f64, y: f64) -> f64 {
        self.kernel.eval(x, y)
    }

    /// Bounded piece of the domain used for sampled checks.
    pub fn sampling_window(&self) -> Interval {
        sampling_window_for(&self.domain, &self.kernel)
    }

    pub fn with_domain(&self, domain: Interval) -> Self {
        Self {
            domain,
            ..self.clone()
        }
    }

    /// Same problem with `a` replaced; the declared sup-norm follows.
    pub fn with_a(&self, a: Coefficient) -> Self {
        let mut out = self.clone();
        let window = self.sampling_window();
        out.coeffs.a_sup = midpoint_mesh(&window, INFERENCE_REFINEMENT * self.validation_mesh)
            .into_iter()
            .map(|x| a.eval(x).abs())
            .fold(0.0, f64::max);
        out.coeffs.a = a;
        out
    }

    /// `a + c` for a constant `c`.
    pub fn with_a_shift(&self, c: f64) -> Self {
        let mut out = self.clone();
        out.coeffs.a = self.coeffs.a.offset(c);
        out.coeffs.a_sup = self.coeffs.a_sup + c.abs();
        out
    }

    pub fn with_kernel(&self, kernel: KernelSpec) -> Self {
        Self {
            kernel,
            ..self.clone()
        }
    }
}

fn sampling_window_for(domain: &Interval, kernel: &KernelSpec) -> Interval {
    domain.sampling_window((16.0 * kernel.delta1.abs()).max(16.0))
}

/// `m` midpoints of a uniform partition of a bounded interval.
pub(crate) fn midpoint_mesh(window: &Interval, m: usize) -> Vec<f64> {
    let h = window.length() / m as f64;
    (0..m)
        .map(|k| window.lower() + (k as f64 + 0.5) * h)
        .collect()
}

/// Nodal values on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledFunction {
    pub grid: Arc<Grid>,
    pub values: Vec<f64>,
}

impl SampledFunction {
    pub fn new(grid: Arc<Grid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Shape(format!(
                "{} values for a grid of {} nodes",
                values.len(),
                grid.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!("non-finite value at node {i}")));
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn<F: Fn(f64) -> f64>(grid: Arc<Grid>, f: F) -> Result<Self> {
        let values = grid.nodes().iter().map(|&x| f(x)).collect();
        Self::new(grid, values)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Assumption {
    /// Kernel measurability/continuity; only finiteness and sign are sampled.
    A1,
    /// Non-degeneracy sandwich of the kernel.
    A2,
    /// Bounded continuous coefficients, `q != 0`.
    A3,
    /// `inf |q| > 0`.
    A4,
}

impl fmt::Display for Assumption {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Assumption::A1 => "A1",
            Assumption::A2 => "A2",
            Assumption::A3 => "A3",
            Assumption::A4 => "A4",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CheckStatus {
    Pass,
    Fail,
    Warning,
}

#[derive(Debug, Clone)]
pub struct AssumptionCheck {
    pub assumption: Assumption,
    pub label: &'static str,
    pub status: CheckStatus,
    pub detail: String,
    /// `(x, y)` for kernel checks, `(x, None)` for coefficient checks.
    pub first_violation: Option<(f64, Option<f64>)>,
}

#[derive(Debug, Clone)]
pub struct ValidationReport {
    pub mesh_size: usize,
    pub window: Interval,
    pub checks: Vec<AssumptionCheck>,
}

impl ValidationReport {
    /// No check failed (warnings allowed).
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.status != CheckStatus::Fail)
    }

    pub fn failures(&self) -> impl Iterator<Item = &AssumptionCheck> {
        self.checks.iter().filter(|c| c.status == CheckStatus::Fail)
    }

    pub fn warnings(&self) -> impl Iterator<Item = &AssumptionCheck> {
        self.checks
            .iter()
            .filter(|c| c.status == CheckStatus::Warning)
    }

    pub fn status_of(&self, a: Assumption) -> CheckStatus {
        let mut worst = CheckStatus::Pass;
        for c in self.checks.iter().filter(|c| c.assumption == a) {
            match c.status {
                CheckStatus::Fail => return CheckStatus::Fail,
                CheckStatus::Warning => worst = CheckStatus::Warning,
                CheckStatus::Pass => {}
            }
        }
        worst
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "validation on {} with mesh {}",
            self.window, self.mesh_size
        )?;
        for c in &self.checks {
            let status = match c.status {
                CheckStatus::Pass => "pass",
                CheckStatus::Fail => "FAIL",
                CheckStatus::Warning => "warn",
            };
            write!(f, "  [{status}] {} {}: {}", c.assumption, c.label, c.detail)?;
            match c.first_violation {
                Some((x, Some(y))) => write!(f, " (first at x={x}, y={y})")?,
                Some((x, None)) => write!(f, " (first at x={x})")?,
                None => {}
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

/// Sampled check of (A1)-(A4) on a uniform midpoint mesh of `mesh_size` points
/// over the problem's sampling window. Violations are reported, never raised.
pub fn validate(problem: &ProblemSpec, mesh_size: usize) -> ValidationReport {
    let mesh_size = mesh_size.max(2);
    let window = problem.sampling_window();
    let xs = midpoint_mesh(&window, mesh_size);
    let ks = &problem.kernel;
    let mut checks = Vec::new();

    let pass = |assumption, label, detail: String| AssumptionCheck {
        assumption,
        label,
        status: CheckStatus::Pass,
        detail,
        first_violation: None,
    };
    let fail = |assumption, label, detail: String, at| AssumptionCheck {
        assumption,
        label,
        status: CheckStatus::Fail,
        detail,
        first_violation: Some(at),
    };

    // A1: sampled finiteness and nonnegativity
    let bad = first_pair(&xs, |x, y| {
        let v = ks.eval(x, y);
        !v.is_finite() || v < 0.0
    });
    checks.push(match bad {
        None => pass(
            Assumption::A1,
            "kernel finite and nonnegative",
            "all samples".into(),
        ),
        Some((x, y)) => fail(
            Assumption::A1,
            "kernel finite and nonnegative",
            format!("J = {}", ks.eval(x, y)),
            (x, Some(y)),
        ),
    });

    // A2: declared constants
    let ordered = ks.kappa0 > 0.0
        && ks.kappa0 <= ks.kappa1
        && ks.delta0 > 0.0
        && ks.delta0 <= ks.delta1
        && ks.kappa1.is_finite()
        && ks.delta1.is_finite();
    checks.push(AssumptionCheck {
        assumption: Assumption::A2,
        label: "declared constants",
        status: if ordered {
            CheckStatus::Pass
        } else {
            CheckStatus::Fail
        },
        detail: format!(
            "need 0 < kappa0 <= kappa1, 0 < delta0 <= delta1; got kappa=({}, {}), delta=({}, {})",
            ks.kappa0, ks.kappa1, ks.delta0, ks.delta1
        ),
        first_violation: None,
    });

    let tol = 1e-12;
    let bad = first_pair(&xs, |x, y| {
        in_band((x - y).abs(), ks.delta0) && ks.eval(x, y) < ks.kappa0 - tol * ks.kappa0.abs()
    });
    checks.push(match bad {
        None => pass(
            Assumption::A2,
            "lower bound",
            format!("J >= {} on |x-y| < {}", ks.kappa0, ks.delta0),
        ),
        Some((x, y)) => fail(
            Assumption::A2,
            "lower bound",
            format!(
                "J({x}, {y}) = {} < kappa0 = {} with |x-y| = {}",
                ks.eval(x, y),
                ks.kappa0,
                (x - y).abs()
            ),
            (x, Some(y)),
        ),
    });

    let bad = first_pair(&xs, |x, y| {
        ks.eval(x, y) > ks.kappa1 + tol * ks.kappa1.abs()
    });
    checks.push(match bad {
        None => pass(Assumption::A2, "upper bound", format!("J <= {}", ks.kappa1)),
        Some((x, y)) => fail(
            Assumption::A2,
            "upper bound",
            format!("J({x}, {y}) = {} > kappa1 = {}", ks.eval(x, y), ks.kappa1),
            (x, Some(y)),
        ),
    });

    let bad = first_pair(&xs, |x, y| {
        !in_band((x - y).abs(), ks.delta1) && ks.eval(x, y) != 0.0
    });
    checks.push(match bad {
        None => pass(
            Assumption::A2,
            "compact horizon",
            format!("J = 0 for |x-y| >= {}", ks.delta1),
        ),
        Some((x, y)) => fail(
            Assumption::A2,
            "compact horizon",
            format!(
                "J({x}, {y}) = {} outside delta1 = {}",
                ks.eval(x, y),
                ks.delta1
            ),
            (x, Some(y)),
        ),
    });

    // A3: bounded coefficients, q != 0 with the declared sign
    let cs = &problem.coeffs;
    let slack = |bound: f64| bound * (1.0 + 1e-12) + 1e-300;
    let bad = xs.iter().copied().find(|&x| {
        let q = cs.q.eval(x);
        let a = cs.a.eval(x);
        !q.is_finite() || !a.is_finite() || q.abs() > slack(cs.q_sup) || a.abs() > slack(cs.a_sup)
    });
    checks.push(match bad {
        None => pass(
            Assumption::A3,
            "bounded coefficients",
            format!("|q| <= {}, |a| <= {}", cs.q_sup, cs.a_sup),
        ),
        Some(x) => fail(
            Assumption::A3,
            "bounded coefficients",
            format!(
                "q({x}) = {}, a({x}) = {} exceed declared ({}, {})",
                cs.q.eval(x),
                cs.a.eval(x),
                cs.q_sup,
                cs.a_sup
            ),
            (x, None),
        ),
    });
    let bad = xs
        .iter()
        .copied()
        .find(|&x| QSign::of(cs.q.eval(x)) != Some(cs.q_sign));
    checks.push(match bad {
        None => pass(
            Assumption::A3,
            "drift sign",
            format!("q has constant sign {:?}", cs.q_sign),
        ),
        Some(x) => fail(
            Assumption::A3,
            "drift sign",
            format!("q({x}) = {} against declared {:?}", cs.q.eval(x), cs.q_sign),
            (x, None),
        ),
    });

    // A4: inf |q| > 0
    if cs.q_inf_abs > 0.0 {
        let bad = xs
            .iter()
            .copied()
            .find(|&x| cs.q.eval(x).abs() < cs.q_inf_abs * (1.0 - 1e-12));
        checks.push(match bad {
            None => pass(
                Assumption::A4,
                "drift bounded away from zero",
                format!("|q| >= {}", cs.q_inf_abs),
            ),
            Some(x) => fail(
                Assumption::A4,
                "drift bounded away from zero",
                format!(
                    "|q({x})| = {} < declared {}",
                    cs.q.eval(x).abs(),
                    cs.q_inf_abs
                ),
                (x, None),
            ),
        });
    } else {
        checks.push(AssumptionCheck {
            assumption: Assumption::A4,
            label: "drift bounded away from zero",
            status: CheckStatus::Warning,
            detail: "declared inf |q| = 0; eigenvalue results are not covered".into(),
            first_violation: None,
        });
    }

    ValidationReport {
        mesh_size,
        window,
        checks,
    }
}

fn first_pair<F: Fn(f64, f64) -> bool>(xs: &[f64], bad: F) -> Option<(f64, f64)> {
    for &x in xs {
        for &y in xs {
            if bad(x, y) {
                return Some((x, y));
            }
        }
    }
    None
}

fn check_on_domain(problem: &ProblemSpec, grid: &Grid) -> Result<()> {
    if !grid.interval().is_within(&problem.domain) {
        return Err(Error::Geometry(format!(
            "grid {} is not inside the domain {}",
            grid.interval(),
            problem.domain
        )));
    }
    Ok(())
}

/// `q phi' + Q[J phi] + a phi` at every node, with `Q` the grid's trapezoid rule.
pub fn apply_operator(
    problem: &ProblemSpec,
    phi: &SampledFunction,
    phi_prime: &SampledFunction,
) -> Result<SampledFunction> {
    if phi.grid != phi_prime.grid {
        return Err(Error::Shape("phi and phi' live on different grids".into()));
    }
    let grid = &phi.grid;
    check_on_domain(problem, grid)?;
    let nodes = grid.nodes();
    let weights = grid.weights();
    let values = nodes
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let integral: f64 = nodes
                .iter()
                .zip(weights)
                .zip(&phi.values)
                .map(|((&y, &w), &p)| problem.j(x, y) * w * p)
                .sum();
            problem.q(x) * phi_prime.values[i] + integral + problem.a(x) * phi.values[i]
        })
        .collect();
    SampledFunction::new(grid.clone(), values)
}

/// `[min, max]` over nodes of `-(M[phi] + a phi) / phi` for a positive `phi`.
pub fn rayleigh_bracket(
    problem: &ProblemSpec,
    phi: &SampledFunction,
    phi_prime: &SampledFunction,
) -> Result<(f64, f64)> {
    if let Some(i) = phi.values.iter().position(|&v| v <= 0.0) {
        return Err(Error::Positivity(format!(
            "phi({}) = {} is not positive",
            phi.grid.nodes()[i],
            phi.values[i]
        )));
    }
    let image = apply_operator(problem, phi, phi_prime)?;
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for (m, p) in image.values.iter().zip(&phi.values) {
        let r = -m / p;
        lo = lo.min(r);
        hi = hi.max(r);
    }
    Ok((lo, hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretize::build_grid;

    fn unit_problem(a: f64) -> ProblemSpec {
        ProblemSpec::new(
            Interval::new(0.0, 1.0).unwrap(),
            KernelSpec::new(
                Kernel::ConstantBand {
                    value: 1.0,
                    radius: 2.0,
                },
                1.0,
                1.0,
                1.0,
                1.0,
            ),
            Coefficient::Constant(1.0),
            Coefficient::Constant(a),
        )
        .unwrap()
    }

    #[test]
    fn interval_invariants() {
        assert!(Interval::new(1.0, 1.0).is_err());
        assert!(Interval::new(2.0, 1.0).is_err());
        assert!(Interval::new(f64::INFINITY, f64::INFINITY).is_err());
        let r = Interval::real_line();
        assert!(!r.is_bounded());
        assert!(Interval::new(0.0, f64::INFINITY).is_ok());
        let w = Interval::new(0.0, f64::INFINITY)
            .unwrap()
            .sampling_window(5.0);
        assert_eq!((w.lower(), w.upper()), (0.0, 10.0));
    }

    #[test]
    fn constant_data_passes_validation() {
        let p = unit_problem(0.0);
        let report = validate(&p, 64);
        assert!(report.passed(), "{report}");
        assert_eq!(report.warnings().count(), 0);
    }

    #[test]
    fn overstated_kappa0_fails_a2_at_first_sample() {
        let mut p = unit_problem(0.0);
        p.kernel.kappa0 = 2.0;
        let report = validate(&p, 64);
        assert_eq!(report.status_of(Assumption::A2), CheckStatus::Fail);
        let lower = report
            .checks
            .iter()
            .find(|c| c.label == "lower bound")
            .unwrap();
        let x0 = 0.5 / 64.0;
        assert_eq!(lower.first_violation, Some((x0, Some(x0))));
    }

    #[test]
    fn tent_kernel_fails_lower_bound_near_band_edge() {
        let mut p = unit_problem(0.0);
        p.kernel = KernelSpec::new(
            Kernel::TentBand {
                height: 1.0,
                radius: 0.25,
            },
            0.1,
            1.0,
            0.25,
            0.25,
        );
        // J at |x-y| = 0.24 is 0.04 < 0.1
        assert!((p.j(0.0, 0.24) - 0.04).abs() < 1e-12);
        let report = validate(&p, 64);
        assert_eq!(report.status_of(Assumption::A2), CheckStatus::Fail);
        let lower = report
            .checks
            .iter()
            .find(|c| c.label == "lower bound")
            .unwrap();
        let (x, y) = lower.first_violation.map(|(x, y)| (x, y.unwrap())).unwrap();
        assert!((x - y).abs() < 0.25 && p.j(x, y) < 0.1);
    }

    #[test]
    fn vanishing_drift_bound_is_a_warning() {
        let mut p = unit_problem(0.0);
        p.coeffs.q_inf_abs = 0.0;
        let report = validate(&p, 16);
        assert!(report.passed());
        assert_eq!(report.status_of(Assumption::A4), CheckStatus::Warning);
    }

    #[test]
    fn wrong_drift_sign_fails_a3() {
        let mut p = unit_problem(0.0);
        p.coeffs.q = Coefficient::Affine {
            intercept: -0.5,
            slope: 1.0,
        };
        let report = validate(&p, 16);
        assert_eq!(report.status_of(Assumption::A3), CheckStatus::Fail);
    }

    #[test]
    fn operator_on_constants_and_linear_functions() {
        let grid = Arc::new(build_grid(Interval::new(0.0, 1.0).unwrap(), 101).unwrap());
        let p = unit_problem(0.0);
        let zero = SampledFunction::from_fn(grid.clone(), |_| 0.0).unwrap();
        let out = apply_operator(&p, &zero, &zero).unwrap();
        assert!(out.values.iter().all(|&v| v == 0.0));

        let one = SampledFunction::from_fn(grid.clone(), |_| 1.0).unwrap();
        let out = apply_operator(&p, &one, &zero).unwrap();
        assert!(out.values.iter().all(|&v| (v - 1.0).abs() < 1e-14));

        // a = -1, phi = x, phi' = 1: 1 + 1/2 - x, trapezoid exact for linear phi
        let p = unit_problem(-1.0);
        let x = SampledFunction::from_fn(grid.clone(), |x| x).unwrap();
        let ones = SampledFunction::from_fn(grid.clone(), |_| 1.0).unwrap();
        let out = apply_operator(&p, &x, &ones).unwrap();
        for (v, &xi) in out.values.iter().zip(grid.nodes()) {
            assert!((v - (1.5 - xi)).abs() < 1e-12);
        }
    }

    #[test]
    fn grid_mismatch_is_a_shape_error() {
        let g1 = Arc::new(build_grid(Interval::new(0.0, 1.0).unwrap(), 5).unwrap());
        let g2 = Arc::new(build_grid(Interval::new(0.0, 1.0).unwrap(), 6).unwrap());
        let p = unit_problem(0.0);
        let f = SampledFunction::from_fn(g1, |_| 1.0).unwrap();
        let g = SampledFunction::from_fn(g2, |_| 1.0).unwrap();
        assert!(matches!(apply_operator(&p, &f, &g), Err(Error::Shape(_))));
    }

    #[test]
    fn rayleigh_bracket_examples() {
        let grid = Arc::new(build_grid(Interval::new(0.0, 1.0).unwrap(), 201).unwrap());
        let zero = SampledFunction::from_fn(grid.clone(), |_| 0.0).unwrap();
        let one = SampledFunction::from_fn(grid.clone(), |_| 1.0).unwrap();
        let p = unit_problem(0.0);
        let (lo, hi) = rayleigh_bracket(&p, &one, &zero).unwrap();
        assert!((lo + 1.0).abs() < 1e-13 && (hi + 1.0).abs() < 1e-13);

        // phi = 1 + x: ratio -(1 + 3/2)/(1 + x)
        let phi = SampledFunction::from_fn(grid.clone(), |x| 1.0 + x).unwrap();
        let (lo, hi) = rayleigh_bracket(&p, &phi, &one).unwrap();
        assert!((lo + 2.5).abs() < 1e-12, "{lo}");
        assert!((hi + 1.25).abs() < 1e-12, "{hi}");

        assert!(matches!(
            rayleigh_bracket(&p, &zero, &zero),
            Err(Error::Positivity(_))
        ));
    }
}

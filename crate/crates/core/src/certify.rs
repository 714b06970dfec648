//! Structural checks of the principal eigenvalue at the discrete level.
//!
//! Every report compares two numbers with an explicit tolerance: the summed
//! bracket widths of the solves involved plus a discretization allowance
//! `ALLOWANCE_REL * (1 + |lambda|)`.

use std::fmt;

use crate::discretize::{assemble_with, build_grid, commensurate_n, Grid};
use crate::eigsolve::{perron, require_valid, solve_on_grid, PrincipalSolution, SolverConfig};
use crate::error::{Error, Result};
use crate::functions::Coefficient;
use crate::problem::{midpoint_mesh, Interval, KernelSpec, ProblemSpec};
use crate::quadrature::gauss_legendre;

pub const ALLOWANCE_REL: f64 = 1e-2;

/// Default allowance for an eigenvalue of size `lambda`.
pub fn allowance(lambda: f64) -> f64 {
    ALLOWANCE_REL * (1.0 + lambda.abs())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PropertyId {
    DomainMonotone,
    AMonotone,
    ALipschitz,
    LowerBound,
    JMonotone,
    DualGap,
    ExpTestfnBound,
}

impl PropertyId {
    pub fn name(self) -> &'static str {
        match self {
            PropertyId::DomainMonotone => "domain_monotone",
            PropertyId::AMonotone => "a_monotone",
            PropertyId::ALipschitz => "a_lipschitz",
            PropertyId::LowerBound => "lower_bound",
            PropertyId::JMonotone => "j_monotone",
            PropertyId::DualGap => "dual_gap",
            PropertyId::ExpTestfnBound => "exp_testfn_bound",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "domain_monotone" => PropertyId::DomainMonotone,
            "a_monotone" => PropertyId::AMonotone,
            "a_lipschitz" => PropertyId::ALipschitz,
            "lower_bound" => PropertyId::LowerBound,
            "j_monotone" => PropertyId::JMonotone,
            "dual_gap" => PropertyId::DualGap,
            "exp_testfn_bound" => PropertyId::ExpTestfnBound,
            other => return Err(Error::Parse(format!("unknown property '{other}'"))),
        })
    }
}

impl fmt::Display for PropertyId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Direction of the inequality a report checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    /// `lhs >= rhs - tolerance`
    AtLeast,
    /// `lhs <= rhs + tolerance`
    AtMost,
}

#[derive(Debug, Clone)]
pub struct PropertyReport {
    pub property_id: PropertyId,
    pub pass: bool,
    pub lhs: f64,
    pub rhs: f64,
    pub tolerance: f64,
    pub relation: Relation,
    pub context: String,
}

impl PropertyReport {
    pub fn new(
        property_id: PropertyId,
        relation: Relation,
        lhs: f64,
        rhs: f64,
        tolerance: f64,
        context: String,
    ) -> Self {
        let pass = match relation {
            Relation::AtLeast => lhs >= rhs - tolerance,
            Relation::AtMost => lhs <= rhs + tolerance,
        };
        Self {
            property_id,
            pass,
            lhs,
            rhs,
            tolerance,
            relation,
            context,
        }
    }

    /// Margin by which the inequality holds before the tolerance is used
    /// (negative when the tolerance was needed).
    pub fn slack(&self) -> f64 {
        match self.relation {
            Relation::AtLeast => self.lhs - self.rhs,
            Relation::AtMost => self.rhs - self.lhs,
        }
    }
}

impl fmt::Display for PropertyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let op = match self.relation {
            Relation::AtLeast => ">=",
            Relation::AtMost => "<=",
        };
        write!(
            f,
            "[{}] {}: {} {op} {} (tol {:.3e}) {}",
            if self.pass { "pass" } else { "FAIL" },
            self.property_id,
            self.lhs,
            self.rhs,
            self.tolerance,
            self.context
        )
    }
}

fn width(s: &PrincipalSolution) -> f64 {
    s.eigenpair.width()
}

/// Grid of `inner` whose nodes are a subset of `outer_grid`'s nodes.
fn nested_grid(outer_grid: &Grid, inner: &Interval) -> Result<Grid> {
    let h = outer_grid.spacing();
    let offset = (inner.lower() - outer_grid.interval().lower()) / h;
    if (offset - offset.round()).abs() > 1e-6 {
        return Err(Error::Geometry(format!(
            "inner interval {inner} does not start on a node of the outer grid (h = {h})"
        )));
    }
    let n = commensurate_n(inner, h)?;
    build_grid(*inner, n)
}

/// `lambda(inner) >= lambda(outer)`, with the inner grid a restriction of the
/// outer grid of `n` nodes.
pub fn check_domain_monotone(
    problem: &ProblemSpec,
    inner: Interval,
    outer: Interval,
    n: usize,
    cfg: &SolverConfig,
) -> Result<PropertyReport> {
    if !inner.is_within(&outer) || !outer.is_within(&problem.domain) {
        return Err(Error::Geometry(format!(
            "need {inner} inside {outer} inside {}",
            problem.domain
        )));
    }
    require_valid(problem)?;
    let outer_grid = build_grid(outer, n)?;
    let inner_grid = nested_grid(&outer_grid, &inner)?;
    let so = solve_on_grid(problem, &outer_grid, cfg)?;
    let si = solve_on_grid(problem, &inner_grid, cfg)?;
    let tol = width(&so) + width(&si) + allowance(so.lambda());
    Ok(PropertyReport::new(
        PropertyId::DomainMonotone,
        Relation::AtLeast,
        si.lambda(),
        so.lambda(),
        tol,
        format!(
            "lambda{inner} vs lambda{outer}, h = {}",
            outer_grid.spacing()
        ),
    ))
}

/// Lipschitz bound `|lambda(a1) - lambda(a2)| <= ||a1 - a2||` on the grid, plus
/// the ordering `lambda(a1) <= lambda(a2)` when `a1 >= a2` at every node.
pub fn check_a_monotone_and_lipschitz(
    problem: &ProblemSpec,
    a1: &Coefficient,
    a2: &Coefficient,
    n: usize,
    cfg: &SolverConfig,
) -> Result<Vec<PropertyReport>> {
    let p1 = problem.with_a(a1.clone());
    let p2 = problem.with_a(a2.clone());
    require_valid(&p1)?;
    require_valid(&p2)?;
    let grid = build_grid(problem.domain, n)?;
    let s1 = solve_on_grid(&p1, &grid, cfg)?;
    let s2 = solve_on_grid(&p2, &grid, cfg)?;
    let (l1, l2) = (s1.lambda(), s2.lambda());
    let tol = width(&s1) + width(&s2) + allowance(l1.abs().max(l2.abs()));
    let diffs: Vec<f64> = grid
        .nodes()
        .iter()
        .map(|&x| a1.eval(x) - a2.eval(x))
        .collect();
    let norm = diffs.iter().fold(0.0f64, |m, d| m.max(d.abs()));
    let mut out = vec![PropertyReport::new(
        PropertyId::ALipschitz,
        Relation::AtMost,
        (l1 - l2).abs(),
        norm,
        tol,
        format!("lambda(a1) = {l1}, lambda(a2) = {l2}"),
    )];
    if diffs.iter().all(|&d| d >= 0.0) {
        out.push(PropertyReport::new(
            PropertyId::AMonotone,
            Relation::AtMost,
            l1,
            l2,
            tol,
            "a1 >= a2 on the grid".into(),
        ));
    }
    Ok(out)
}

/// `-max_x (a(x) + sum_j J(x, y_j) w_j)` over all grid nodes: the bound obtained
/// from the constant test function.
pub fn constant_testfn_bound(problem: &ProblemSpec, grid: &Grid) -> f64 {
    let nodes = grid.nodes();
    let w = grid.weights();
    let sup = nodes
        .iter()
        .map(|&x| {
            let mass: f64 = nodes
                .iter()
                .zip(w)
                .map(|(&y, &wj)| problem.j(x, y) * wj)
                .sum();
            problem.a(x) + mass
        })
        .fold(f64::NEG_INFINITY, f64::max);
    -sup
}

pub fn check_lower_bound(
    problem: &ProblemSpec,
    n: usize,
    cfg: &SolverConfig,
) -> Result<PropertyReport> {
    require_valid(problem)?;
    let grid = build_grid(problem.domain, n)?;
    let s = solve_on_grid(problem, &grid, cfg)?;
    Ok(lower_bound_report(problem, &s))
}

/// Lower-bound report for an existing solution.
pub fn lower_bound_report(problem: &ProblemSpec, s: &PrincipalSolution) -> PropertyReport {
    let bound = constant_testfn_bound(problem, &s.grid);
    PropertyReport::new(
        PropertyId::LowerBound,
        Relation::AtLeast,
        s.lambda(),
        bound,
        width(s) + allowance(s.lambda()),
        format!("n = {}", s.grid.len()),
    )
}

/// `lambda(J1) <= lambda(J2)` for `J1 >= J2`.
pub fn check_j_monotone(
    problem: &ProblemSpec,
    j1: &KernelSpec,
    j2: &KernelSpec,
    n: usize,
    cfg: &SolverConfig,
) -> Result<PropertyReport> {
    let xs = midpoint_mesh(&problem.sampling_window(), problem.validation_mesh);
    for &x in &xs {
        for &y in &xs {
            if j1.eval(x, y) < j2.eval(x, y) {
                return Err(Error::Precondition(format!(
                    "J1({x}, {y}) = {} < J2 = {}",
                    j1.eval(x, y),
                    j2.eval(x, y)
                )));
            }
        }
    }
    let p1 = problem.with_kernel(j1.clone());
    let p2 = problem.with_kernel(j2.clone());
    require_valid(&p1)?;
    require_valid(&p2)?;
    let grid = build_grid(problem.domain, n)?;
    let s1 = solve_on_grid(&p1, &grid, cfg)?;
    let s2 = solve_on_grid(&p2, &grid, cfg)?;
    let tol = width(&s1) + width(&s2) + allowance(s1.lambda().abs().max(s2.lambda().abs()));
    Ok(PropertyReport::new(
        PropertyId::JMonotone,
        Relation::AtMost,
        s1.lambda(),
        s2.lambda(),
        tol,
        format!("{:?} over {:?}", j1.kernel, j2.kernel),
    ))
}

/// Width of the two-sided bracket certified by one positive vector: the same
/// vector is a super-solution test function for the lower bound and a
/// sub-solution one for the upper bound.
pub fn check_dual_gap(
    problem: &ProblemSpec,
    n: usize,
    cfg: &SolverConfig,
) -> Result<PropertyReport> {
    require_valid(problem)?;
    let grid = build_grid(problem.domain, n)?;
    let op = assemble_with(problem, &grid, cfg.exec)?;
    let e = perron(&op, cfg)?;
    let (lo, hi) = op.cw_bracket(&e.phi)?;
    Ok(PropertyReport::new(
        PropertyId::DualGap,
        Relation::AtMost,
        hi - lo,
        10.0 * cfg.tol_bracket,
        0.0,
        format!("bracket [{lo}, {hi}] from the converged eigenvector"),
    ))
}

/// `b(gamma) = q gamma + int J(0, z) e^{gamma z} dz + a` for a translation-invariant
/// kernel and constant coefficients, so that `e^{gamma x}` satisfies
/// `M[phi] + a phi = b(gamma) phi` on the whole line.
#[derive(Debug, Clone)]
pub struct ExpBound {
    /// `sup_gamma -b(gamma)` over the scanned grid.
    pub bound: f64,
    pub gamma_star: f64,
    pub samples: Vec<(f64, f64)>,
}

pub fn exp_symbol(problem: &ProblemSpec, gamma: f64) -> Result<f64> {
    let (q, a) = constant_coefficients(problem)?;
    let r = problem.kernel.delta1;
    let panels = 256;
    let k = &problem.kernel.kernel;
    let moment = gauss_legendre(|z| k.eval(0.0, z) * (gamma * z).exp(), -r, r, panels);
    Ok(q * gamma + moment + a)
}

fn constant_coefficients(problem: &ProblemSpec) -> Result<(f64, f64)> {
    if !problem.kernel.kernel.is_translation_invariant() {
        return Err(Error::Unsupported(
            "exponential test functions need a translation-invariant kernel".into(),
        ));
    }
    match (
        problem.coeffs.q.as_constant(),
        problem.coeffs.a.as_constant(),
    ) {
        (Some(q), Some(a)) => Ok((q, a)),
        _ => Err(Error::Unsupported(
            "exponential test functions need constant q and a".into(),
        )),
    }
}

pub fn exp_testfn_bound(problem: &ProblemSpec, gamma_grid: &[f64]) -> Result<ExpBound> {
    if gamma_grid.is_empty() {
        return Err(Error::InvalidInput("empty gamma grid".into()));
    }
    let mut samples = Vec::with_capacity(gamma_grid.len());
    let mut best = (f64::NEG_INFINITY, 0.0);
    for &g in gamma_grid {
        let b = exp_symbol(problem, g)?;
        samples.push((g, b));
        if -b > best.0 {
            best = (-b, g);
        }
    }
    Ok(ExpBound {
        bound: best.0,
        gamma_star: best.1,
        samples,
    })
}

/// `count` equally spaced values in `[lo, hi]`.
pub fn uniform_gamma_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    let count = count.max(2);
    (0..count)
        .map(|k| lo + (hi - lo) * k as f64 / (count - 1) as f64)
        .collect()
}

/// Every truncated-domain eigenvalue must sit above the exponential bound.
/// `entries` pairs each eigenvalue with its bracket width.
pub fn check_exp_testfn_bound(
    problem: &ProblemSpec,
    gamma_grid: &[f64],
    entries: &[(f64, f64)],
) -> Result<PropertyReport> {
    let eb = exp_testfn_bound(problem, gamma_grid)?;
    let (lambda_min, w) =
        entries.iter().copied().fold(
            (f64::INFINITY, 0.0),
            |acc, (l, w)| if l < acc.0 { (l, w) } else { acc },
        );
    if entries.is_empty() {
        return Err(Error::InvalidInput("no eigenvalues to compare".into()));
    }
    let last = entries.last().map(|e| e.0).unwrap_or(f64::NAN);
    Ok(PropertyReport::new(
        PropertyId::ExpTestfnBound,
        Relation::AtLeast,
        lambda_min,
        eb.bound,
        w + allowance(lambda_min),
        format!(
            "gamma* = {}, diagnostic gap last lambda - bound = {:.3e}",
            eb.gamma_star,
            last - eb.bound
        ),
    ))
}

/// One entry of a batch run.
#[derive(Debug, Clone)]
pub enum Check {
    DomainMonotone {
        inner: Interval,
        outer: Interval,
    },
    /// Yields the Lipschitz report and, when `a1 >= a2`, the monotone one.
    AMonotoneLipschitz {
        a1: Coefficient,
        a2: Coefficient,
    },
    LowerBound,
    JMonotone {
        j1: KernelSpec,
        j2: KernelSpec,
    },
    DualGap,
    /// Eigenvalues of the truncations `domain ∩ (-r, r)` at spacing `h` against the
    /// exponential bound over `gammas`.
    ExpTestfnBound {
        gammas: Vec<f64>,
        radii: Vec<f64>,
        h: f64,
    },
}

pub fn run_check(
    problem: &ProblemSpec,
    check: &Check,
    n: usize,
    cfg: &SolverConfig,
) -> Result<Vec<PropertyReport>> {
    match check {
        Check::DomainMonotone { inner, outer } => {
            check_domain_monotone(problem, *inner, *outer, n, cfg).map(|r| vec![r])
        }
        Check::AMonotoneLipschitz { a1, a2 } => {
            check_a_monotone_and_lipschitz(problem, a1, a2, n, cfg)
        }
        Check::LowerBound => check_lower_bound(problem, n, cfg).map(|r| vec![r]),
        Check::JMonotone { j1, j2 } => check_j_monotone(problem, j1, j2, n, cfg).map(|r| vec![r]),
        Check::DualGap => check_dual_gap(problem, n, cfg).map(|r| vec![r]),
        Check::ExpTestfnBound { gammas, radii, h } => {
            require_valid(problem)?;
            let mut entries = Vec::with_capacity(radii.len());
            for &r in radii {
                let window = Interval::new(-r, r)?
                    .intersect(&problem.domain)
                    .ok_or_else(|| Error::Geometry(format!("(-{r}, {r}) misses the domain")))?;
                let m = ((window.length() / h).round() as usize + 1).max(3);
                let s = solve_on_grid(problem, &build_grid(window, m)?, cfg)?;
                entries.push((s.lambda(), width(&s)));
            }
            check_exp_testfn_bound(problem, gammas, &entries).map(|r| vec![r])
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functions::Kernel;
    use crate::problem::KernelSpec;

    fn unit(q: f64, a: f64) -> ProblemSpec {
        ProblemSpec::new(
            Interval::new(0.0, 1.0).unwrap(),
            KernelSpec::constant_band(1.0, 1.0),
            Coefficient::Constant(q),
            Coefficient::Constant(a),
        )
        .unwrap()
    }

    fn cfg() -> SolverConfig {
        SolverConfig::with_tol(1e-9)
    }

    #[test]
    fn domain_monotone_examples() {
        let p = unit(1.0, 0.0);
        let whole = Interval::new(0.0, 1.0).unwrap();
        let r = check_domain_monotone(&p, whole, whole, 101, &cfg()).unwrap();
        assert!(r.pass && (r.lhs - r.rhs).abs() < 1e-8);
        let half = Interval::new(0.0, 0.5).unwrap();
        let r = check_domain_monotone(&p, half, whole, 201, &cfg()).unwrap();
        assert!(r.pass && r.lhs >= r.rhs - 1e-3, "{r}");
        let off = Interval::new(0.003, 0.5).unwrap();
        assert!(matches!(
            check_domain_monotone(&p, off, whole, 201, &cfg()),
            Err(Error::Geometry(_))
        ));
    }

    #[test]
    fn lipschitz_and_monotone_in_a() {
        let p = unit(1.0, 0.0);
        let reports = check_a_monotone_and_lipschitz(
            &p,
            &Coefficient::Affine {
                intercept: 0.0,
                slope: 1.0,
            },
            &Coefficient::Constant(0.0),
            101,
            &cfg(),
        )
        .unwrap();
        assert_eq!(reports.len(), 2);
        assert!(reports.iter().all(|r| r.pass), "{reports:?}");
        // sharp case
        let reports = check_a_monotone_and_lipschitz(
            &p,
            &Coefficient::Constant(0.5),
            &Coefficient::Constant(-0.5),
            101,
            &cfg(),
        )
        .unwrap();
        assert!((reports[0].lhs - 1.0).abs() < 3e-9);
    }

    #[test]
    fn lower_bound_examples() {
        let r = check_lower_bound(&unit(1.0, 0.0), 101, &cfg()).unwrap();
        assert!(r.pass);
        assert!((r.rhs + 1.0).abs() < 1e-12, "{}", r.rhs);
        let r = check_lower_bound(&unit(1.0, -10.0), 101, &cfg()).unwrap();
        assert!(r.pass && (r.rhs - 9.0).abs() < 1e-12);
    }

    #[test]
    fn j_monotone_examples() {
        let p = unit(1.0, 0.0);
        let j2 = KernelSpec::constant_band(1.0, 1.0);
        let j1 = KernelSpec::constant_band(2.0, 1.0);
        assert!(check_j_monotone(&p, &j1, &j2, 101, &cfg()).unwrap().pass);
        let tent = KernelSpec::new(
            Kernel::TentBand {
                height: 1.0,
                radius: 1.0,
            },
            0.5,
            1.0,
            0.5,
            1.0,
        );
        assert!(check_j_monotone(&p, &j2, &tent, 101, &cfg()).unwrap().pass);
        assert!(matches!(
            check_j_monotone(&p, &j2, &j1, 51, &cfg()),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn dual_gap_of_converged_run() {
        let r = check_dual_gap(&unit(1.0, 0.0), 101, &cfg()).unwrap();
        assert!(r.pass, "{r}");
    }

    #[test]
    fn exp_bound_example() {
        let mut p = unit(0.2, 0.0);
        p.domain = Interval::real_line();
        let e0 = exp_symbol(&p, 0.0).unwrap();
        assert!((e0 - 2.0).abs() < 1e-12);
        let g = 0.7;
        let exact = 0.2 * g + 2.0 * f64::sinh(g) / g;
        assert!((exp_symbol(&p, g).unwrap() - exact).abs() < 1e-12);
        let eb = exp_testfn_bound(&p, &uniform_gamma_grid(-3.0, 3.0, 601)).unwrap();
        // minimizer of 0.2 g + 2 sinh(g)/g is close to -0.3
        assert!((eb.gamma_star + 0.3).abs() < 0.02, "{}", eb.gamma_star);
        assert!((eb.bound + 1.97).abs() < 0.005, "{}", eb.bound);
        let mut q = p.clone();
        q.coeffs.a = Coefficient::custom(|x| x);
        assert!(exp_testfn_bound(&q, &[0.0]).is_err());
    }
}

//! Perron eigenpairs of the discrete operator with Collatz-Wielandt brackets.
//!
//! For a positive vector `x` and a Metzler matrix `A`,
//! `min_i (Ax)_i/x_i <= rho(A) <= max_i (Ax)_i/x_i`, so every iterate certifies an
//! interval for `lambda = -rho(A)`. Two iterations generate the vectors:
//!
//! * power iteration on `A + sI`, `s` the Metzler shift;
//! * shift-and-invert, `x <- (mu I - A)^{-1} x` with `mu` just above the current
//!   upper bound on `rho(A)`. The resolvent is nonnegative and commutes with `A`,
//!   so the brackets stay monotone exactly as for the power iteration.

use std::sync::Arc;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::discretize::{assemble_with, build_grid, BcSide, DiscreteOperator, Grid};
use crate::error::{Error, Result};
use crate::linalg::{cw_ratios, MetzlerMatrix};
use crate::par::Exec;
use crate::problem::{validate, CoefficientSpec, ProblemSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeedVector {
    UniformOnes,
    /// Entries uniform in `[0.5, 1.5]` from a ChaCha8 stream.
    RandomPositive {
        seed: u64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Power,
    ShiftInvert,
    /// Power iteration up to [`AUTO_POWER_MAX_DIM`] unknowns, shift-invert above.
    Auto,
}

pub const AUTO_POWER_MAX_DIM: usize = 256;

/// Iterations without any change of the running bracket after which the solve is
/// abandoned: the bracket has reached round-off level.
pub const STALL_LIMIT: usize = 64;

#[derive(Debug, Clone)]
pub struct SolverConfig {
    pub tol_bracket: f64,
    pub max_iters: usize,
    pub seed_vector: SeedVector,
    pub method: Method,
    /// Keep the raw per-iterate bracket.
    pub record_trace: bool,
    pub exec: Exec,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tol_bracket: 1e-8,
            max_iters: 100_000,
            seed_vector: SeedVector::UniformOnes,
            method: Method::Auto,
            record_trace: false,
            exec: Exec::default(),
        }
    }
}

impl SolverConfig {
    pub fn with_tol(tol_bracket: f64) -> Self {
        Self {
            tol_bracket,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tol_bracket > 0.0) {
            return Err(Error::InvalidInput(format!(
                "tol_bracket must be > 0, got {}",
                self.tol_bracket
            )));
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidInput("max_iters must be >= 1".into()));
        }
        Ok(())
    }

    fn resolved_method(&self, n: usize) -> Method {
        match self.method {
            Method::Auto if n <= AUTO_POWER_MAX_DIM => Method::Power,
            Method::Auto => Method::ShiftInvert,
            m => m,
        }
    }
}

/// Bracket of a single iterate, before taking running extrema.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BracketStep {
    pub iteration: usize,
    pub lo: f64,
    pub hi: f64,
}

#[derive(Debug, Clone)]
pub struct Eigenpair {
    /// Midpoint of the certified bracket. Convention: `A phi = -lambda phi`.
    pub lambda_est: f64,
    pub lambda_lo: f64,
    pub lambda_hi: f64,
    /// Positive on the active nodes, `max = 1`.
    pub phi: Vec<f64>,
    pub iterations: usize,
    /// `max_i |(A phi)_i + lambda_est phi_i|`.
    pub residual: f64,
    pub method: Method,
    pub trace: Vec<BracketStep>,
}

impl Eigenpair {
    pub fn width(&self) -> f64 {
        self.lambda_hi - self.lambda_lo
    }
}

fn seed(n: usize, kind: SeedVector) -> Vec<f64> {
    match kind {
        SeedVector::UniformOnes => vec![1.0; n],
        SeedVector::RandomPositive { seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..n).map(|_| rng.random_range(0.5..1.5)).collect()
        }
    }
}

fn normalize_max(x: &mut [f64]) -> Result<()> {
    let m = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(m > 0.0) || !m.is_finite() {
        return Err(Error::Positivity(format!("iterate has max {m}")));
    }
    x.iter_mut().for_each(|v| *v /= m);
    Ok(())
}

struct Bracket {
    lo: f64,
    hi: f64,
}

impl Bracket {
    fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

/// Perron eigenpair of an assembled operator.
pub fn perron(op: &DiscreteOperator, cfg: &SolverConfig) -> Result<Eigenpair> {
    perron_matrix(op.matrix(), cfg)
}

/// Perron eigenpair of any Metzler matrix.
///
/// Irreducibility is only needed for the iteration to converge; the brackets are
/// valid for every positive iterate. A reducible matrix is therefore accepted when
/// its first iterate already closes the bracket, and rejected otherwise.
pub fn perron_matrix(a: &MetzlerMatrix, cfg: &SolverConfig) -> Result<Eigenpair> {
    cfg.validate()?;
    let n = a.dim();
    if n == 0 {
        return Err(Error::Shape("empty matrix".into()));
    }
    let irreducible = a.is_irreducible();
    let method = cfg.resolved_method(n);
    let shift = a.metzler_shift();

    let mut x = seed(n, cfg.seed_vector);
    normalize_max(&mut x)?;
    let mut ax = vec![0.0; n];
    a.matvec_into(cfg.exec, &x, &mut ax)?;
    let ((rmin, _), (rmax, _)) = cw_ratios(&ax, &x)?;
    let mut best = Bracket {
        lo: -rmax,
        hi: -rmin,
    };
    let mut trace = Vec::new();
    if cfg.record_trace {
        trace.push(BracketStep {
            iteration: 0,
            lo: best.lo,
            hi: best.hi,
        });
    }

    let mut y = vec![0.0; n];
    let mut stalled = 0;
    for k in 1..=cfg.max_iters {
        match method {
            Method::ShiftInvert => shift_invert_step(a, &x, &mut y, &best, shift)?,
            _ => {
                for i in 0..n {
                    y[i] = ax[i] + shift * x[i];
                }
            }
        }
        normalize_max(&mut y)?;
        std::mem::swap(&mut x, &mut y);
        a.matvec_into(cfg.exec, &x, &mut ax)?;
        let ((rmin, _), (rmax, _)) = cw_ratios(&ax, &x)?;
        let (lo, hi) = (-rmax, -rmin);
        if cfg.record_trace {
            trace.push(BracketStep {
                iteration: k,
                lo,
                hi,
            });
        }
        if lo > best.lo || hi < best.hi {
            stalled = 0;
        } else {
            stalled += 1;
        }
        best.lo = best.lo.max(lo);
        best.hi = best.hi.min(hi);
        if best.width() < cfg.tol_bracket {
            let lambda_est = 0.5 * (best.lo + best.hi);
            let residual = ax
                .iter()
                .zip(&x)
                .map(|(v, p)| (v + lambda_est * p).abs())
                .fold(0.0, f64::max);
            return Ok(Eigenpair {
                lambda_est,
                lambda_lo: best.lo,
                lambda_hi: best.hi,
                phi: x,
                iterations: k,
                residual,
                method,
                trace,
            });
        }
        if !irreducible {
            return Err(Error::Structure(
                "matrix is reducible and the first iterate does not close the bracket; \
                 a grid spacing above the kernel radius decouples the nodes"
                    .into(),
            ));
        }
        if stalled >= STALL_LIMIT {
            return Err(Error::NoConvergence {
                iterations: k,
                lo: best.lo,
                hi: best.hi,
            });
        }
    }
    Err(Error::NoConvergence {
        iterations: cfg.max_iters,
        lo: best.lo,
        hi: best.hi,
    })
}

/// `y = (mu I - A)^{-1} x` with `mu = rho_up + eta`, `rho_up = -lo` the certified
/// upper bound on the Perron value. `eta` grows until the factorization has
/// positive pivots and the solution is positive.
fn shift_invert_step(
    a: &MetzlerMatrix,
    x: &[f64],
    y: &mut [f64],
    best: &Bracket,
    scale: f64,
) -> Result<()> {
    let rho_up = -best.lo;
    let floor = 1e-10 * scale;
    let mut eta = best.width().max(floor);
    for _ in 0..80 {
        let mu = rho_up + eta;
        if let Ok(lu) = a.shifted_lu(mu) {
            y.copy_from_slice(x);
            lu.solve_in_place(y)?;
            if y.iter().all(|v| *v > 0.0 && v.is_finite()) {
                return Ok(());
            }
        }
        eta *= 4.0;
    }
    Err(Error::Structure(
        "no admissible shift for the inverse iteration".into(),
    ))
}

/// An eigenpair together with the grid it lives on.
#[derive(Debug, Clone)]
pub struct PrincipalSolution {
    pub eigenpair: Eigenpair,
    pub grid: Arc<Grid>,
    pub bc_side: BcSide,
    /// Eigenfunction on every grid node, zero at the boundary node.
    pub phi_full: Vec<f64>,
}

impl PrincipalSolution {
    pub fn lambda(&self) -> f64 {
        self.eigenpair.lambda_est
    }

    /// `(x, phi)` pairs over the whole grid.
    pub fn samples(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.grid
            .nodes()
            .iter()
            .copied()
            .zip(self.phi_full.iter().copied())
    }
}

/// Assembles on `grid` (which must lie in the domain) and runs [`perron`].
/// No validation of the problem is done here.
pub fn solve_on_grid(
    problem: &ProblemSpec,
    grid: &Grid,
    cfg: &SolverConfig,
) -> Result<PrincipalSolution> {
    let op = assemble_with(problem, grid, cfg.exec)?;
    let eigenpair = perron(&op, cfg)?;
    let phi_full = op.extend_by_zero(&eigenpair.phi);
    Ok(PrincipalSolution {
        eigenpair,
        grid: op.grid().clone(),
        bc_side: op.bc_side(),
        phi_full,
    })
}

/// Validates the problem, then solves on `n` uniform nodes of its (bounded) domain.
/// A vanishing declared `inf |q|` is only a warning in validation and does not stop
/// the solve.
pub fn solve_principal(
    problem: &ProblemSpec,
    n: usize,
    cfg: &SolverConfig,
) -> Result<PrincipalSolution> {
    let grid = build_grid(problem.domain, n)?;
    require_valid(problem)?;
    solve_on_grid(problem, &grid, cfg)
}

pub(crate) fn require_valid(problem: &ProblemSpec) -> Result<()> {
    let report = validate(problem, problem.validation_mesh);
    if report.passed() {
        return Ok(());
    }
    let failed: Vec<String> = report
        .failures()
        .map(|c| format!("{} {}: {}", c.assumption, c.label, c.detail))
        .collect();
    Err(Error::Precondition(format!(
        "problem fails validation: {}",
        failed.join("; ")
    )))
}

/// `x -> lower + upper - x`: `q~(x) = -q(P - x)`, `a~(x) = a(P - x)`,
/// `J~(x, y) = J(P - x, P - y)` with `P = lower + upper`.
pub fn reflect(problem: &ProblemSpec) -> Result<ProblemSpec> {
    let pivot = problem.domain.reflection_pivot()?;
    let c = &problem.coeffs;
    Ok(ProblemSpec {
        domain: problem.domain,
        kernel: problem.kernel.reflected(pivot),
        coeffs: CoefficientSpec {
            q: c.q.reflected(pivot, true),
            a: c.a.reflected(pivot, false),
            q_inf_abs: c.q_inf_abs,
            q_sign: c.q_sign.flipped(),
            q_sup: c.q_sup,
            a_sup: c.a_sup,
        },
        validation_mesh: problem.validation_mesh,
    })
}

/// Solves the reflected problem and maps the eigenfunction back with
/// `psi(x) = phi(P - x)`. On a uniform grid this reverses the node order.
pub fn solve_via_reflection(
    problem: &ProblemSpec,
    n: usize,
    cfg: &SolverConfig,
) -> Result<PrincipalSolution> {
    let reflected = reflect(problem)?;
    let mut sol = solve_principal(&reflected, n, cfg)?;
    sol.eigenpair.phi.reverse();
    sol.phi_full.reverse();
    sol.bc_side = match sol.bc_side {
        BcSide::Lower => BcSide::Upper,
        BcSide::Upper => BcSide::Lower,
    };
    sol.grid = Arc::new(build_grid(problem.domain, n)?);
    Ok(sol)
}

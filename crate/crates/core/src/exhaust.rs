//! Growing-domain limit: principal eigenvalues of nested bounded truncations.

use crate::discretize::build_grid;
use crate::eigsolve::{solve_on_grid, PrincipalSolution, SolverConfig};
use crate::error::{Error, Result};
use crate::problem::{Interval, ProblemSpec};

/// Relative inset of finite endpoints of the domain, as a fraction of `r0`.
pub const INSET_REL: f64 = 1e-3;

/// `Omega_k = Omega ∩ (-r0 g^k, r0 g^k)`, `k = 0..count`, with finite endpoints
/// of `Omega` moved inward by `INSET_REL * r0 * g^-k` so that closures nest
/// strictly. A bounded domain already covered by the first window gives `count`
/// copies of its inset.
pub fn truncation_family(
    domain: Interval,
    r0: f64,
    growth: f64,
    count: usize,
) -> Result<Vec<Interval>> {
    if count < 2 || !(r0 > 0.0) || !(growth > 1.0) {
        return Err(Error::InvalidInput(format!(
            "need count >= 2, r0 > 0, growth > 1; got count={count}, r0={r0}, growth={growth}"
        )));
    }
    let inset = INSET_REL * r0;
    if domain.is_bounded() && domain.lower() >= -r0 && domain.upper() <= r0 {
        let one = inset_interval(domain, -r0, r0, inset)?;
        return Ok(vec![one; count]);
    }
    let mut out = Vec::with_capacity(count);
    for k in 0..count {
        let radius = r0 * growth.powi(k as i32);
        out.push(inset_interval(
            domain,
            -radius,
            radius,
            inset / growth.powi(k as i32),
        )?);
    }
    Ok(out)
}

fn inset_interval(domain: Interval, lo: f64, hi: f64, inset: f64) -> Result<Interval> {
    let l = if domain.lower().is_finite() {
        lo.max(domain.lower() + inset)
    } else {
        lo
    };
    let u = if domain.upper().is_finite() {
        hi.min(domain.upper() - inset)
    } else {
        hi
    };
    Interval::new(l, u).map_err(|_| {
        Error::Geometry(format!(
            "window ({lo}, {hi}) does not meet the domain {domain}"
        ))
    })
}

/// Eigenfunction sampled on a window.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub nodes: Vec<f64>,
    pub phi: Vec<f64>,
}

#[derive(Debug, Clone, Default)]
pub struct ExhaustionTrace {
    /// `max(|lower|, |upper|)` of each truncation.
    pub radii: Vec<f64>,
    pub intervals: Vec<Interval>,
    pub ns: Vec<usize>,
    pub spacings: Vec<f64>,
    pub lambdas: Vec<f64>,
    pub brackets: Vec<(f64, f64)>,
    pub converged: bool,
    pub lambda_limit: f64,
    pub last_gap: f64,
    /// Last eigenfunction restricted to the first window, max-normalized there.
    pub snapshot: Option<Snapshot>,
    /// Max-norm distance of consecutive max-normalized eigenfunctions on the
    /// smaller of the two windows; one entry per consecutive pair.
    pub consistency: Vec<f64>,
}

impl ExhaustionTrace {
    pub fn len(&self) -> usize {
        self.lambdas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lambdas.is_empty()
    }

    pub fn gaps(&self) -> Vec<f64> {
        self.lambdas
            .windows(2)
            .map(|w| (w[1] - w[0]).abs())
            .collect()
    }

    pub fn widths(&self) -> Vec<f64> {
        self.brackets.iter().map(|(lo, hi)| hi - lo).collect()
    }

    /// `lambdas[k+1] <= lambdas[k] + widths[k] + widths[k+1]` for all `k`.
    pub fn is_monotone(&self) -> bool {
        let w = self.widths();
        self.lambdas
            .windows(2)
            .enumerate()
            .all(|(k, l)| l[1] <= l[0] + w[k] + w[k + 1])
    }
}

/// Node count giving spacing close to `h` on `interval`.
pub fn nodes_for_spacing(interval: &Interval, h: f64) -> usize {
    ((interval.length() / h).round() as usize + 1).max(3)
}

/// Solves every truncation in order until two consecutive eigenvalues differ by
/// less than `gap_tol`.
pub fn run(
    problem: &ProblemSpec,
    family: &[Interval],
    h_target: f64,
    cfg: &SolverConfig,
    gap_tol: f64,
) -> Result<ExhaustionTrace> {
    if family.is_empty() || !(h_target > 0.0) || !(gap_tol >= 0.0) {
        return Err(Error::InvalidInput(
            "need a non-empty family, h_target > 0 and gap_tol >= 0".into(),
        ));
    }
    for (k, w) in family.iter().enumerate() {
        if !w.is_bounded() || !w.is_within(&problem.domain) {
            return Err(Error::Geometry(format!(
                "truncation {k} = {w} is not a bounded subset of {}",
                problem.domain
            )));
        }
    }
    let mut trace = ExhaustionTrace::default();
    let mut previous: Option<PrincipalSolution> = None;
    for window in family {
        let radius = window.lower().abs().max(window.upper().abs());
        let n = nodes_for_spacing(window, h_target);
        let solved = build_grid(*window, n).and_then(|g| solve_on_grid(problem, &g, cfg));
        let sol = match solved {
            Ok(s) => s,
            Err(e) => {
                return Err(Error::Exhaustion {
                    radius,
                    partial: Box::new(trace),
                    source: Box::new(e),
                })
            }
        };
        let e = &sol.eigenpair;
        trace.radii.push(radius);
        trace.intervals.push(*window);
        trace.ns.push(n);
        trace.spacings.push(sol.grid.spacing());
        trace.lambdas.push(e.lambda_est);
        trace.brackets.push((e.lambda_lo, e.lambda_hi));
        trace.lambda_limit = e.lambda_est;
        if let Some(prev) = &previous {
            trace.consistency.push(window_distance(prev, &sol));
            let k = trace.lambdas.len() - 1;
            trace.last_gap = (trace.lambdas[k] - trace.lambdas[k - 1]).abs();
            if trace.last_gap < gap_tol {
                trace.converged = true;
                previous = Some(sol);
                break;
            }
        }
        previous = Some(sol);
    }
    if let Some(last) = &previous {
        trace.snapshot = Some(restrict(last, &family[0]));
    }
    Ok(trace)
}

fn interpolate(nodes: &[f64], values: &[f64], x: f64) -> f64 {
    let k = nodes.partition_point(|&v| v <= x).clamp(1, nodes.len() - 1);
    let (x0, x1) = (nodes[k - 1], nodes[k]);
    let s = ((x - x0) / (x1 - x0)).clamp(0.0, 1.0);
    values[k - 1] * (1.0 - s) + values[k] * s
}

fn restrict(sol: &PrincipalSolution, window: &Interval) -> Snapshot {
    let nodes = sol.grid.nodes();
    let range = sol.grid.indices_in(window.lower(), window.upper());
    let xs = nodes[range.clone()].to_vec();
    let mut phi = sol.phi_full[range].to_vec();
    let m = phi.iter().copied().fold(0.0, f64::max);
    if m > 0.0 {
        phi.iter_mut().for_each(|v| *v /= m);
    }
    Snapshot { nodes: xs, phi }
}

/// Max-norm distance on the smaller solution's grid, both renormalized to max 1
/// there.
fn window_distance(small: &PrincipalSolution, large: &PrincipalSolution) -> f64 {
    let a = restrict(small, &small.grid.interval());
    let other: Vec<f64> = a
        .nodes
        .iter()
        .map(|&x| interpolate(large.grid.nodes(), &large.phi_full, x))
        .collect();
    let m = other.iter().copied().fold(0.0, f64::max);
    if !(m > 0.0) {
        return f64::INFINITY;
    }
    a.phi
        .iter()
        .zip(&other)
        .map(|(p, o)| (p - o / m).abs())
        .fold(0.0, f64::max)
}

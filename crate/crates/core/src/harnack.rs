//! Explicit Harnack constant for positive solutions of
//! `q u' + int J u + a u = 0` and its check against computed eigenfunctions.
//!
//! The constant is a product of exponentially small and large factors, so every
//! link of the chain is carried as a natural logarithm.

use std::sync::Arc;

use crate::discretize::Grid;
use crate::eigsolve::{reflect, PrincipalSolution};
use crate::error::{Error, Result};
use crate::functions::in_band;
use crate::problem::{Interval, ProblemSpec, QSign, SampledFunction};
use crate::quadrature::cumulative_trapezoid;

/// Safety factors applied to the sampled infimum and supremum.
pub const KAPPA_SAFETY: f64 = 0.99;
pub const SUP_SAFETY: f64 = 1.01;

/// Samples per unit length of the fine grid used for antiderivatives.
const PRIMITIVE_DENSITY: f64 = 2048.0;

#[derive(Debug, Clone, PartialEq)]
pub struct HarnackConstants {
    pub r1: f64,
    pub r2: f64,
    pub eps: f64,
    pub d: f64,
    pub delta: f64,
    pub kappa_tilde0: f64,
    pub n: u64,
    pub c1: f64,
    /// `sup |a/q|` on `(r1, r2)`, with the safety factor.
    pub a_over_q_sup: f64,
    pub log_c1: f64,
    pub log_c3: f64,
    pub log_c2: f64,
    pub log_c0: f64,
    pub log_c: f64,
}

impl HarnackConstants {
    /// May underflow to zero.
    pub fn c3(&self) -> f64 {
        self.log_c3.exp()
    }

    pub fn c2(&self) -> f64 {
        self.log_c2.exp()
    }

    /// May overflow to infinity.
    pub fn c0(&self) -> f64 {
        self.log_c0.exp()
    }

    pub fn c(&self) -> f64 {
        self.log_c.exp()
    }
}

/// `d = min(1, dist(band, boundary))`, `delta = min(delta0/2, d/2, eps)` and
/// `N = ceil(4 (r2 - r1 + 2 delta1) / delta)` for the band
/// `[r1 - delta1 - eps, r2 + delta1 + eps]`.
pub fn chain_geometry(
    domain: &Interval,
    delta0: f64,
    delta1: f64,
    r1: f64,
    r2: f64,
    eps: f64,
) -> Result<(f64, f64, u64)> {
    if !(r1 <= r2) || !(eps > 0.0) {
        return Err(Error::InvalidInput(format!(
            "need r1 <= r2 and eps > 0, got r1={r1}, r2={r2}, eps={eps}"
        )));
    }
    let (lo, hi) = (r1 - delta1 - eps, r2 + delta1 + eps);
    let dist = domain.distance_to_boundary(lo, hi);
    if !(dist > 0.0) {
        return Err(Error::Geometry(format!(
            "band [{lo}, {hi}] is not inside {domain}"
        )));
    }
    let d = dist.min(1.0);
    let delta = (0.5 * delta0).min(0.5 * d).min(eps);
    let ratio = 4.0 * (r2 - r1 + 2.0 * delta1) / delta;
    // the quotient is often an integer up to rounding
    let n = (ratio * (1.0 - 1e-12)).ceil().max(1.0) as u64;
    Ok((d, delta, n))
}

/// `min(delta1, dist([r1 - delta1, r2 + delta1], boundary) / 2)`.
pub fn default_eps(problem: &ProblemSpec, r1: f64, r2: f64) -> f64 {
    let d1 = problem.kernel.delta1;
    let dist = problem.domain.distance_to_boundary(r1 - d1, r2 + d1);
    d1.min(0.5 * dist)
}

/// Antiderivative of `a/q` sampled on a fine uniform grid over `[lo, hi]`.
struct Primitive {
    lo: f64,
    step: f64,
    values: Vec<f64>,
}

impl Primitive {
    fn new(problem: &ProblemSpec, lo: f64, hi: f64) -> Self {
        let cells = (((hi - lo) * PRIMITIVE_DENSITY).ceil() as usize).max(16);
        let step = (hi - lo) / cells as f64;
        let xs: Vec<f64> = (0..=cells).map(|k| lo + k as f64 * step).collect();
        let c: Vec<f64> = xs.iter().map(|&x| problem.a(x) / problem.q(x)).collect();
        let values = if let Some(k) = problem
            .coeffs
            .a
            .as_constant()
            .zip(problem.coeffs.q.as_constant())
            .map(|(a, q)| a / q)
        {
            xs.iter().map(|&x| k * (x - lo)).collect()
        } else {
            cumulative_trapezoid(&xs, &c)
        };
        Self { lo, step, values }
    }

    fn at(&self, x: f64) -> f64 {
        let t = ((x - self.lo) / self.step).clamp(0.0, (self.values.len() - 1) as f64);
        let k = (t.floor() as usize).min(self.values.len() - 2);
        let s = t - k as f64;
        self.values[k] * (1.0 - s) + self.values[k + 1] * s
    }
}

/// `m` points strictly inside `(a, b)`.
fn interior(a: f64, b: f64, m: usize) -> impl Iterator<Item = f64> {
    let h = (b - a) / m as f64;
    (0..m).map(move |k| a + (k as f64 + 0.5) * h)
}

/// `m + 1` points covering the closed `[a, b]`.
fn closed(a: f64, b: f64, m: usize) -> impl Iterator<Item = f64> {
    let h = (b - a) / m.max(1) as f64;
    (0..=m).map(move |k| a + k as f64 * h)
}

/// Constant chain for `problem` (with `q > 0`) on the window `[r1, r2]`.
///
/// `kappa_tilde0` is the sampled infimum of `J(x, y)/q(x) e^{int_y^x a/q}` over
/// `x` in `[r1 - delta1 - eps, r2 + delta1 + eps + delta]`, `|x - y| < delta0`,
/// `y` in the domain, times [`KAPPA_SAFETY`]. `C1` is the sampled supremum of the
/// same kernel times `e^{x - y}` on `(r1, r2) x (r1 - delta1, r2 + delta1)`, times
/// [`SUP_SAFETY`].
pub fn compute_constants(
    problem: &ProblemSpec,
    r1: f64,
    r2: f64,
    eps: f64,
) -> Result<HarnackConstants> {
    if problem.coeffs.q_sign != QSign::Positive {
        return Err(Error::Unsupported(
            "the constant chain needs q > 0; reflect the problem first".into(),
        ));
    }
    let ks = &problem.kernel;
    let (d, delta, n) = chain_geometry(&problem.domain, ks.delta0, ks.delta1, r1, r2, eps)?;
    let mesh = (4 * problem.validation_mesh).max(64);

    let x_lo = r1 - ks.delta1 - eps;
    let x_hi = r2 + ks.delta1 + eps + delta;
    let dom = problem.domain;
    let span_lo = (x_lo - ks.delta0).max(dom.lower());
    let span_hi = (x_hi + ks.delta0).min(dom.upper());
    let prim = Primitive::new(problem, span_lo, span_hi);
    let k_tilde = |x: f64, y: f64| problem.j(x, y) / problem.q(x) * (prim.at(x) - prim.at(y)).exp();

    let mut inf = f64::INFINITY;
    let mut worst = (0.0, 0.0);
    for x in closed(x_lo, x_hi, mesh) {
        for y in interior(x - ks.delta0, x + ks.delta0, mesh) {
            if !dom.contains(y) || !in_band((x - y).abs(), ks.delta0) {
                continue;
            }
            let v = k_tilde(x, y);
            if v < inf {
                inf = v;
                worst = (x, y);
            }
        }
    }
    if !(inf > 0.0) || !inf.is_finite() {
        return Err(Error::Precondition(format!(
            "transformed kernel has sampled infimum {inf} at (x, y) = {worst:?}"
        )));
    }
    let kappa_tilde0 = KAPPA_SAFETY * inf;

    let mut sup: f64 = 0.0;
    for x in interior(r1, r2, mesh).chain([r1, r2]) {
        for y in interior(r1 - ks.delta1, r2 + ks.delta1, mesh) {
            sup = sup.max(k_tilde(x, y) * (x - y).exp());
        }
    }
    let c1 = SUP_SAFETY * sup;
    if !(c1 > 0.0) {
        return Err(Error::Precondition("kernel vanishes on the window".into()));
    }

    let a_over_q_sup = SUP_SAFETY
        * closed(r1, r2, mesh)
            .map(|x| (problem.a(x) / problem.q(x)).abs())
            .fold(0.0, f64::max);

    let log_c1 = c1.ln();
    let log_c3 = n as f64 * (kappa_tilde0.ln() + 2.0 * delta.ln() - delta - 8f64.ln());
    let log_c2 = log_c3 + kappa_tilde0.ln() + delta.ln() - delta - (n as f64).ln();
    let log_c0 = (log_c1 - log_c2).max(r2 - r1);
    let log_c = log_c0 + (r2 - r1) * (1.0 + a_over_q_sup);
    Ok(HarnackConstants {
        r1,
        r2,
        eps,
        d,
        delta,
        kappa_tilde0,
        n,
        c1,
        a_over_q_sup,
        log_c1,
        log_c3,
        log_c2,
        log_c0,
        log_c,
    })
}

/// `w = e^{int_{origin}^x (a/q + 1)} u` and `w~ = e^{int_{origin}^x a/q} u`, with
/// the integrals accumulated by the trapezoid rule on `u`'s grid.
pub fn transforms(
    problem: &ProblemSpec,
    u: &SampledFunction,
    origin: f64,
) -> Result<(SampledFunction, SampledFunction)> {
    let nodes = u.grid.nodes();
    let mut c = Vec::with_capacity(nodes.len());
    for &x in nodes {
        let q = problem.q(x);
        if q == 0.0 {
            return Err(Error::InvalidInput(format!("q vanishes at {x}")));
        }
        c.push(problem.a(x) / q);
    }
    let f = cumulative_trapezoid(nodes, &c);
    // integral from the first node to `origin`, by linear interpolation of f
    let f_origin = interpolate(nodes, &f, origin);
    let mut w = Vec::with_capacity(nodes.len());
    let mut wt = Vec::with_capacity(nodes.len());
    for ((&x, &fx), &ux) in nodes.iter().zip(&f).zip(&u.values) {
        let g = fx - f_origin;
        wt.push(g.exp() * ux);
        w.push((g + x - origin).exp() * ux);
    }
    Ok((
        SampledFunction::new(u.grid.clone(), w)?,
        SampledFunction::new(u.grid.clone(), wt)?,
    ))
}

fn interpolate(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    let k = xs.partition_point(|&v| v <= x).clamp(1, xs.len() - 1);
    let (x0, x1) = (xs[k - 1], xs[k]);
    let s = (x - x0) / (x1 - x0);
    ys[k - 1] * (1.0 - s) + ys[k] * s
}

/// Largest excess of `w~[i+1] - w~[i]` over the per-step allowance
/// `w~[i] (h^2 (1 + ||c||)^2 + h |c[i+1] - c[i]|) + h e^{F[i+1]} res / |q[i]|`
/// with `c = a/q` and `res` the residual of the discrete equation. Non-positive
/// means `w~` is non-increasing up to one upwind truncation error per step.
pub fn w_tilde_excess(problem: &ProblemSpec, grid: &Grid, w_tilde: &[f64], residual: f64) -> f64 {
    let nodes = grid.nodes();
    let h = grid.spacing();
    let c: Vec<f64> = nodes.iter().map(|&x| problem.a(x) / problem.q(x)).collect();
    let f = cumulative_trapezoid(nodes, &c);
    let cmax = c.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut worst = f64::NEG_INFINITY;
    for i in 0..nodes.len() - 1 {
        let allow = w_tilde[i] * (h * h * (1.0 + cmax).powi(2) + h * (c[i + 1] - c[i]).abs())
            + h * f[i + 1].exp() * residual / problem.q(nodes[i]).abs();
        worst = worst.max(w_tilde[i + 1] - w_tilde[i] - allow);
    }
    worst
}

#[derive(Debug, Clone)]
pub struct HarnackReport {
    pub constants: HarnackConstants,
    pub empirical_ratio: f64,
    pub log_empirical_ratio: f64,
    pub log_theoretical_c: f64,
    /// `log_empirical_ratio <= log_theoretical_c`.
    pub pass: bool,
    /// From [`w_tilde_excess`]; `<= 0` when the monotonicity check passes.
    pub w_tilde_excess: f64,
    pub reflected: bool,
}

impl HarnackReport {
    pub fn theoretical_c(&self) -> f64 {
        self.log_theoretical_c.exp()
    }

    pub fn w_tilde_monotone(&self) -> bool {
        self.w_tilde_excess <= 0.0
    }
}

/// Harnack check for a computed eigenpair on the window `[r1, r2]`; the eigenvalue
/// is absorbed into `a`. A problem with `q < 0` is reflected first, together with
/// the window and the eigenfunction.
pub fn verify(
    problem: &ProblemSpec,
    sol: &PrincipalSolution,
    r1: f64,
    r2: f64,
    eps: Option<f64>,
) -> Result<HarnackReport> {
    if sol.grid.interval() != problem.domain {
        return Err(Error::Geometry(format!(
            "solution grid {} does not span the domain {}",
            sol.grid.interval(),
            problem.domain
        )));
    }
    let shifted = problem.with_a_shift(sol.lambda());
    let (p, r1, r2, phi, reflected) = match problem.coeffs.q_sign {
        QSign::Positive => (shifted, r1, r2, sol.phi_full.clone(), false),
        QSign::Negative => {
            let pivot = problem.domain.reflection_pivot()?;
            let mut phi = sol.phi_full.clone();
            phi.reverse();
            (reflect(&shifted)?, pivot - r2, pivot - r1, phi, true)
        }
    };
    let eps = match eps {
        Some(e) => e,
        None => {
            let e = default_eps(&p, r1, r2);
            if !(e > 0.0) {
                return Err(Error::Geometry(format!(
                    "[{r1}, {r2}] widened by delta1 = {} leaves {}",
                    p.kernel.delta1, p.domain
                )));
            }
            e
        }
    };
    let constants = compute_constants(&p, r1, r2, eps)?;
    let grid = &sol.grid;
    let window = grid.indices_in(r1, r2);
    if window.is_empty() {
        return Err(Error::Geometry(format!("no grid node in [{r1}, {r2}]")));
    }
    let (mut mx, mut mn) = (f64::NEG_INFINITY, f64::INFINITY);
    for &v in &phi[window] {
        mx = mx.max(v);
        mn = mn.min(v);
    }
    if !(mn > 0.0) {
        return Err(Error::Positivity(format!(
            "eigenfunction minimum {mn} on [{r1}, {r2}]"
        )));
    }
    let log_ratio = mx.ln() - mn.ln();
    let u = SampledFunction::new(Arc::clone(grid), phi)?;
    let (_, wt) = transforms(&p, &u, r1)?;
    let excess = w_tilde_excess(&p, grid, &wt.values, sol.eigenpair.residual);
    Ok(HarnackReport {
        pass: log_ratio <= constants.log_c,
        log_theoretical_c: constants.log_c,
        constants,
        empirical_ratio: mx / mn,
        log_empirical_ratio: log_ratio,
        w_tilde_excess: excess,
        reflected,
    })
}

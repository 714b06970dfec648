//! Moving-frame nonlocal KPP equation
//!
//! ```text
//! v_t = c v' + J0 * v - m v + f(x, v),   m = \int J0
//! ```
//!
//! on `(-R, R)` with zero inflow at `x = R`, and its persistence verdict predicted
//! from the sign of the principal eigenvalue of the linearization.

use std::fmt;
use std::sync::Arc;

use crate::discretize::{assemble_with, build_grid, Grid};
use crate::eigsolve::{solve_principal, SolverConfig};
use crate::error::{Error, Result};
use crate::functions::Coefficient;
use crate::par::{self, Exec};
use crate::problem::{Interval, KernelSpec, ProblemSpec};
use crate::quadrature::gauss_legendre;

pub type GrowthFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

pub const DEFAULT_MASS_TOL: f64 = 1e-4;
/// Sampling resolution of the invariant checks.
const CHECK_MESH: usize = 257;
const CHECK_LEVELS: usize = 33;
const MASS_PANELS: usize = 256;

#[derive(Clone)]
pub struct KppSpec {
    /// Translation-invariant dispersal kernel `J0(x - y)`.
    pub kernel: KernelSpec,
    pub speed_c: f64,
    /// `f(x, s)`.
    pub growth: GrowthFn,
    /// `d/ds f(x, 0)`.
    pub growth_lin: Coefficient,
    pub domain_radius: f64,
    pub carrying_bound: f64,
}

impl fmt::Debug for KppSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("KppSpec")
            .field("kernel", &self.kernel)
            .field("speed_c", &self.speed_c)
            .field("growth_lin", &self.growth_lin)
            .field("domain_radius", &self.domain_radius)
            .field("carrying_bound", &self.carrying_bound)
            .finish_non_exhaustive()
    }
}

impl KppSpec {
    pub fn new(
        kernel: KernelSpec,
        speed_c: f64,
        growth: GrowthFn,
        growth_lin: Coefficient,
        domain_radius: f64,
        carrying_bound: f64,
    ) -> Result<Self> {
        let spec = Self {
            kernel,
            speed_c,
            growth,
            growth_lin,
            domain_radius,
            carrying_bound,
        };
        spec.check()?;
        Ok(spec)
    }

    /// `f(x, s) = g(x) s - s^2`.
    pub fn logistic(
        kernel: KernelSpec,
        speed_c: f64,
        g: Coefficient,
        domain_radius: f64,
        carrying_bound: f64,
    ) -> Result<Self> {
        let inner = g.clone();
        let growth: GrowthFn = Arc::new(move |x, s| inner.eval(x) * s - s * s);
        Self::new(kernel, speed_c, growth, g, domain_radius, carrying_bound)
    }

    pub fn with_speed(&self, c: f64) -> Result<Self> {
        let out = Self {
            speed_c: c,
            ..self.clone()
        };
        out.check()?;
        Ok(out)
    }

    pub fn domain(&self) -> Result<Interval> {
        Interval::new(-self.domain_radius, self.domain_radius)
    }

    /// `m = \int J0` over its support.
    pub fn kernel_mass(&self) -> f64 {
        let d = self.kernel.delta1;
        gauss_legendre(|z| self.kernel.kernel.profile(z), -d, d, MASS_PANELS)
    }

    /// Sampled `sup |g|` over the domain.
    pub fn growth_lin_sup(&self) -> f64 {
        self.check_mesh()
            .into_iter()
            .map(|x| self.growth_lin.eval(x).abs())
            .fold(0.0, f64::max)
    }

    fn check_mesh(&self) -> Vec<f64> {
        let r = self.domain_radius;
        (0..CHECK_MESH)
            .map(|k| -r + 2.0 * r * (k as f64 + 0.5) / CHECK_MESH as f64)
            .collect()
    }

    fn check(&self) -> Result<()> {
        if !(self.speed_c >= 0.0) || !self.speed_c.is_finite() {
            return Err(Error::InvalidInput(format!(
                "speed c = {} must be >= 0",
                self.speed_c
            )));
        }
        if !(self.domain_radius > 0.0) || !(self.carrying_bound > 0.0) {
            return Err(Error::InvalidInput(
                "domain radius and carrying bound must be positive".into(),
            ));
        }
        if !self.kernel.kernel.is_translation_invariant() {
            return Err(Error::InvalidInput(
                "kernel must be translation invariant".into(),
            ));
        }
        let a = self.carrying_bound;
        for x in self.check_mesh() {
            let g = self.growth_lin.eval(x);
            let f0 = (self.growth)(x, 0.0);
            if f0.abs() > 1e-12 {
                return Err(Error::InvalidInput(format!("f({x}, 0) = {f0} is not zero")));
            }
            for k in 1..=CHECK_LEVELS {
                let s = 2.0 * a * k as f64 / CHECK_LEVELS as f64;
                let f = (self.growth)(x, s);
                if f > g * s + 1e-12 * (1.0 + (g * s).abs()) {
                    return Err(Error::InvalidInput(format!(
                        "KPP condition fails: f({x}, {s}) = {f} > {}",
                        g * s
                    )));
                }
            }
            if x.abs() >= a && !(g < 0.0) {
                return Err(Error::InvalidInput(format!(
                    "growth {g} at x = {x} is not negative outside |x| < {a}"
                )));
            }
        }
        Ok(())
    }
}

/// `q = c`, `a = g - m` on `(-R, R)`.
pub fn linearized_problem(spec: &KppSpec) -> Result<ProblemSpec> {
    if spec.speed_c == 0.0 {
        return Err(Error::Unsupported(
            "c = 0 leaves no drift, so the drift bounded away from zero assumption fails; \
             the drift-free operator is handled by the pure dispersal theory, not here"
                .into(),
        ));
    }
    let m = spec.kernel_mass();
    ProblemSpec::new(
        spec.domain()?,
        spec.kernel.clone(),
        Coefficient::Constant(spec.speed_c),
        spec.growth_lin.offset(-m),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Prediction {
    Persist,
    Extinct,
}

impl Prediction {
    pub fn from_lambda(lambda: f64) -> Self {
        if lambda < 0.0 {
            Prediction::Persist
        } else {
            Prediction::Extinct
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Prediction::Persist => "persist",
            Prediction::Extinct => "extinct",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PersistenceVerdict {
    pub lambda_lin: f64,
    pub predicted: Prediction,
    /// Final spatial max of `v`.
    pub simulated_mass: f64,
    pub agree: bool,
}

impl PersistenceVerdict {
    pub fn new(lambda_lin: f64, simulated_mass: f64, mass_tol: f64) -> Self {
        let predicted = Prediction::from_lambda(lambda_lin);
        let agree = match predicted {
            Prediction::Persist => simulated_mass > mass_tol,
            Prediction::Extinct => simulated_mass <= mass_tol,
        };
        Self {
            lambda_lin,
            predicted,
            simulated_mass,
            agree,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SimulationOptions {
    /// Height of the initial bump; `None` means `min(1, A)`.
    pub initial_amplitude: Option<f64>,
    /// Half-width of the initial bump.
    pub initial_radius: f64,
    pub mass_tol: f64,
    /// Keep the field every `k` steps (and the final one).
    pub record_every: Option<usize>,
    pub solver: SolverConfig,
}

impl Default for SimulationOptions {
    fn default() -> Self {
        Self {
            initial_amplitude: None,
            initial_radius: 1.0,
            mass_tol: DEFAULT_MASS_TOL,
            record_every: None,
            solver: SolverConfig::with_tol(1e-10),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Simulation {
    pub verdict: PersistenceVerdict,
    pub nodes: Vec<f64>,
    pub steps: usize,
    pub dt: f64,
    /// `(t, max v)` after every step, starting with `t = 0`.
    pub max_history: Vec<(f64, f64)>,
    /// `(t, v)` on all nodes, inflow node included.
    pub frames: Vec<(f64, Vec<f64>)>,
    pub final_field: Vec<f64>,
}

/// Largest step for which the explicit update keeps `0 <= v <= A`:
/// `1 / (c/h + m + sup|g| + A)`.
pub fn stable_dt(spec: &KppSpec, h: f64) -> f64 {
    1.0 / (spec.speed_c / h + spec.kernel_mass() + spec.growth_lin_sup() + spec.carrying_bound)
}

pub fn simulate(spec: &KppSpec, h: f64, dt: f64, t_end: f64) -> Result<PersistenceVerdict> {
    Ok(simulate_with(spec, h, dt, t_end, &SimulationOptions::default())?.verdict)
}

fn grid_for(spec: &KppSpec, h: f64) -> Result<Grid> {
    let domain = spec.domain()?;
    let n = ((domain.length() / h).round() as usize + 1).max(3);
    build_grid(domain, n)
}

fn check_steps(spec: &KppSpec, h: f64, dt: f64, t_end: f64) -> Result<()> {
    if !(h > 0.0) || !(dt > 0.0) || !(t_end > 0.0) {
        return Err(Error::InvalidInput(
            "h, dt and t_end must be positive".into(),
        ));
    }
    let c = spec.speed_c;
    if c > 0.0 && dt > h / c {
        return Err(Error::Precondition(format!(
            "dt = {dt} exceeds the upwind limit h/c = {}",
            h / c
        )));
    }
    let budget = 1.0 / (spec.kernel_mass() + spec.growth_lin_sup() + 1.0);
    if dt > budget {
        return Err(Error::Precondition(format!(
            "dt = {dt} exceeds the reaction budget 1/(m + sup|g| + 1) = {budget}"
        )));
    }
    Ok(())
}

/// Explicit Euler in time with the upwind/Nyström operator of the linearization
/// in space. Positivity and the upper bound `max(A, max v0)` are checked after
/// every step.
pub fn simulate_with(
    spec: &KppSpec,
    h: f64,
    dt: f64,
    t_end: f64,
    opts: &SimulationOptions,
) -> Result<Simulation> {
    check_steps(spec, h, dt, t_end)?;
    let lin = linearized_problem(spec)?;
    let grid = grid_for(spec, h)?;
    let sol = solve_principal(&lin, grid.len(), &opts.solver)?;
    let lambda_lin = sol.lambda();

    let exec = opts.solver.exec;
    let op = assemble_with(&lin, &grid, exec)?;
    let idx: Vec<usize> = (0..op.n_active()).map(|k| op.grid_index(k)).collect();
    let xs: Vec<f64> = idx.iter().map(|&i| grid.nodes()[i]).collect();
    let g: Vec<f64> = xs.iter().map(|&x| spec.growth_lin.eval(x)).collect();

    let amp = opts
        .initial_amplitude
        .unwrap_or_else(|| spec.carrying_bound.min(1.0));
    let mut v: Vec<f64> = xs
        .iter()
        .map(|&x| {
            if x.abs() <= opts.initial_radius {
                amp
            } else {
                0.0
            }
        })
        .collect();
    let ceiling = spec.carrying_bound.max(amp);
    let slack = 1e-12 * ceiling;

    let steps = (t_end / dt).ceil() as usize;
    let mut av = vec![0.0; v.len()];
    let mut history = Vec::with_capacity(steps + 1);
    let mut frames = Vec::new();
    let vmax = |v: &[f64]| v.iter().copied().fold(0.0, f64::max);
    history.push((0.0, vmax(&v)));
    if opts.record_every.is_some() {
        frames.push((0.0, op.extend_by_zero(&v)));
    }
    let mut t = 0.0;
    for step in 1..=steps {
        let tau = dt.min(t_end - t);
        op.matrix().matvec_into(exec, &v, &mut av)?;
        let growth = &spec.growth;
        let next = par::map_indices(exec, v.len(), |k| {
            v[k] + tau * (av[k] - g[k] * v[k] + growth(xs[k], v[k]))
        });
        v = next;
        t = if step == steps { t_end } else { t + tau };
        for (k, &val) in v.iter().enumerate() {
            if !(val >= -slack) || val > ceiling + slack {
                return Err(Error::Precondition(format!(
                    "v({}) = {val} left [0, {ceiling}] at t = {t}; reduce dt",
                    xs[k]
                )));
            }
        }
        history.push((t, vmax(&v)));
        if let Some(k) = opts.record_every {
            if k > 0 && (step % k == 0 || step == steps) {
                frames.push((t, op.extend_by_zero(&v)));
            }
        }
    }
    let verdict = PersistenceVerdict::new(lambda_lin, vmax(&v), opts.mass_tol);
    Ok(Simulation {
        verdict,
        nodes: grid.nodes().to_vec(),
        steps,
        dt,
        max_history: history,
        frames,
        final_field: op.extend_by_zero(&v),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GrowthRate {
    /// Slope of `ln max v` over the fitted window.
    pub rate: f64,
    pub lambda_lin: f64,
    /// Per-unit-time rate of the Euler map, `ln(1 - dt lambda) / dt`.
    pub euler_rate: f64,
    /// `|rate + lambda_lin| / |lambda_lin|`.
    pub rel_err: f64,
    pub fit_from: f64,
    pub fit_to: f64,
}

/// Tiny-data run (`max v0 = amplitude`) over `[0, horizon]`; the rate is the least
/// squares slope of `ln max v` over the second half.
pub fn growth_rate(
    spec: &KppSpec,
    h: f64,
    dt: f64,
    horizon: f64,
    amplitude: f64,
) -> Result<GrowthRate> {
    let opts = SimulationOptions {
        initial_amplitude: Some(amplitude),
        ..SimulationOptions::default()
    };
    let sim = simulate_with(spec, h, dt, horizon, &opts)?;
    let half = horizon / 2.0;
    let pts: Vec<(f64, f64)> = sim
        .max_history
        .iter()
        .filter(|(t, m)| *t >= half && *m > 0.0)
        .map(|&(t, m)| (t, m.ln()))
        .collect();
    if pts.len() < 2 {
        return Err(Error::InvalidInput(
            "horizon too short for a growth-rate fit".into(),
        ));
    }
    let n = pts.len() as f64;
    let mt = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mt) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mt).powi(2)).sum();
    let rate = sxy / sxx;
    let lambda_lin = sim.verdict.lambda_lin;
    Ok(GrowthRate {
        rate,
        lambda_lin,
        euler_rate: (1.0 - dt * lambda_lin).ln() / dt,
        rel_err: (rate + lambda_lin).abs() / lambda_lin.abs(),
        fit_from: pts[0].0,
        fit_to: pts[pts.len() - 1].0,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub c: f64,
    pub verdict: PersistenceVerdict,
}

/// One simulation per speed, run concurrently; `dt` is `stable_dt` for each speed.
pub fn sweep(
    base: &KppSpec,
    speeds: &[f64],
    h: f64,
    t_end: f64,
    opts: &SimulationOptions,
    exec: Exec,
) -> Result<Vec<SweepRow>> {
    let inner = SimulationOptions {
        solver: SolverConfig {
            exec: Exec::Sequential,
            ..opts.solver.clone()
        },
        record_every: None,
        ..opts.clone()
    };
    par::map_jobs(exec, speeds, |&c| {
        let spec = base.with_speed(c)?;
        let dt = stable_dt(&spec, h);
        let sim = simulate_with(&spec, h, dt, t_end, &inner)?;
        Ok(SweepRow {
            c,
            verdict: sim.verdict,
        })
    })
    .into_iter()
    .collect()
}

/// The three reference configurations: kernel `1{|z| < 1/2}`, `R = 8`, `A = 3/2`.
pub mod examples {
    use super::*;

    pub const RADIUS: f64 = 8.0;
    pub const CARRYING: f64 = 1.5;

    pub fn kernel() -> KernelSpec {
        KernelSpec::constant_band(1.0, 0.5)
    }

    /// `g = 1` on `|x| <= 1`, `-1` elsewhere.
    pub fn niche() -> Coefficient {
        Coefficient::IndicatorBump {
            center: 0.0,
            radius: 1.0,
            inside: 1.0,
            outside: -1.0,
        }
    }

    pub fn hostile(c: f64) -> Result<KppSpec> {
        KppSpec::logistic(kernel(), c, Coefficient::Constant(-1.0), RADIUS, CARRYING)
    }

    pub fn favorable(c: f64) -> Result<KppSpec> {
        KppSpec::logistic(kernel(), c, niche(), RADIUS, CARRYING)
    }
}

use std::fs;
use std::path::{Path, PathBuf};

use driftev::certify::{run_check, PropertyReport};
use driftev::exhaust::{self, ExhaustionTrace};
use driftev::io::{self, CertifyBatch, EigenRecord, ProblemFile};
use driftev::kpp::{self, KppSpec, SimulationOptions, SweepRow};
use driftev::problem::ProblemSpec;
use driftev::{harnack, par, solve_principal, solve_via_reflection, validate, Coefficient, Error};

use crate::manifest::Manifest;
use crate::{
    CertifyArgs, Command, ExhaustArgs, Failure, HarnackArgs, KppArgs, Niche, SolveArgs,
    ValidateArgs,
};

#[derive(Default)]
struct Inputs {
    problem: Option<ProblemFile>,
    checks: Option<CertifyBatch>,
}

pub fn dispatch(cmd: Command) -> Result<(), Failure> {
    match cmd {
        Command::Rerun(r) => {
            let m = Manifest::load(&r.manifest)?;
            let mut run = m.run;
            if let Some(out) = r.out {
                *out_dir_mut(&mut run) = out;
            }
            execute(
                run,
                Inputs {
                    problem: m.problem,
                    checks: m.checks,
                },
            )
        }
        other => execute(other, Inputs::default()),
    }
}

fn out_dir_mut(cmd: &mut Command) -> &mut PathBuf {
    match cmd {
        Command::Validate(a) => &mut a.common.out,
        Command::Solve(a) => &mut a.common.out,
        Command::Exhaust(a) => &mut a.common.out,
        Command::Harnack(a) => &mut a.common.out,
        Command::Certify(a) => &mut a.common.out,
        Command::Kpp(a) => &mut a.common.out,
        Command::Rerun(_) => unreachable!("rerun is resolved before execution"),
    }
}

fn execute(mut cmd: Command, preset: Inputs) -> Result<(), Failure> {
    let out = out_dir_mut(&mut cmd).clone();
    fs::create_dir_all(&out)?;
    let mut run = Run {
        out,
        manifest: Manifest::new(cmd.clone()),
        preset,
    };
    let result = match &cmd {
        Command::Validate(a) => run.validate(a),
        Command::Solve(a) => run.solve(a),
        Command::Exhaust(a) => run.exhaust(a),
        Command::Harnack(a) => run.harnack(a),
        Command::Certify(a) => run.certify(a),
        Command::Kpp(a) => run.kpp(a),
        Command::Rerun(_) => unreachable!(),
    };
    if let Err(f) = &result {
        run.manifest.exit_code = f.code;
        run.manifest.message = Some(f.message.clone());
    }
    run.manifest.write(&run.out)?;
    result
}

struct Run {
    out: PathBuf,
    manifest: Manifest,
    preset: Inputs,
}

impl Run {
    fn path(&mut self, name: &str) -> PathBuf {
        self.manifest.outputs.push(name.to_string());
        self.out.join(name)
    }

    fn write_text(&mut self, name: &str, text: &str) -> Result<(), Failure> {
        let p = self.path(name);
        fs::write(p, text)?;
        Ok(())
    }

    fn problem(&mut self, path: &Path) -> Result<ProblemSpec, Failure> {
        let file = match self.preset.problem.take() {
            Some(f) => f,
            None => ProblemFile::load(path).map_err(|e| with_path(e, path))?,
        };
        let spec = file.build();
        self.manifest.problem = Some(file);
        Ok(spec?)
    }

    /// Writes the validation report and fails with exit code 2 when it does not pass.
    fn require_valid(&mut self, p: &ProblemSpec) -> Result<(), Failure> {
        let report = validate(p, p.validation_mesh);
        self.write_text("validation.txt", &report.to_string())?;
        if report.passed() {
            return Ok(());
        }
        eprint!("{report}");
        let names: Vec<String> = report
            .failures()
            .map(|c| format!("{} {}", c.assumption, c.label))
            .collect();
        Err(Failure::new(
            2,
            format!("validation failed: {}", names.join(", ")),
        ))
    }

    fn validate(&mut self, a: &ValidateArgs) -> Result<(), Failure> {
        let mut p = self.problem(&a.problem)?;
        if let Some(m) = a.mesh {
            if m < 2 {
                return Err(Failure::new(2, "--mesh must be >= 2"));
            }
            p.validation_mesh = m;
        }
        self.require_valid(&p)?;
        println!("validation passed");
        Ok(())
    }

    fn solve(&mut self, a: &SolveArgs) -> Result<(), Failure> {
        let p = self.problem(&a.problem)?;
        self.require_valid(&p)?;
        let cfg = a.solver.config();
        cfg.validate()?;
        let sol = if a.reflect {
            solve_via_reflection(&p, a.n, &cfg)?
        } else {
            solve_principal(&p, a.n, &cfg)?
        };
        let record = EigenRecord::from_solution(&sol);
        self.write_text("eigen.toml", &record.to_toml()?)?;
        let path = self.path("eigenfunction.csv");
        io::write_eigenfunction(&path, &sol)?;
        println!(
            "lambda = {} in [{}, {}] after {} iterations",
            record.lambda_est, record.lambda_lo, record.lambda_hi, record.iterations
        );
        Ok(())
    }

    fn exhaust(&mut self, a: &ExhaustArgs) -> Result<(), Failure> {
        let p = self.problem(&a.problem)?;
        self.require_valid(&p)?;
        let cfg = a.solver.config();
        cfg.validate()?;
        let family = exhaust::truncation_family(p.domain, a.r0, a.growth, a.count)?;
        let (trace, err) = match exhaust::run(&p, &family, a.h, &cfg, a.gap_tol) {
            Ok(t) => (t, None),
            Err(Error::Exhaustion {
                partial,
                source,
                radius,
            }) => (
                *partial,
                Some(Failure::from(*source).prefixed(&format!("truncation at radius {radius}"))),
            ),
            Err(e) => return Err(e.into()),
        };
        self.write_exhaust(&trace, a)?;
        if let Some(f) = err {
            return Err(f);
        }
        for (r, l) in trace.radii.iter().zip(&trace.lambdas) {
            println!("R = {r}: lambda = {l}");
        }
        println!(
            "converged = {}, last gap = {:e}, monotone = {}",
            trace.converged,
            trace.last_gap,
            trace.is_monotone()
        );
        Ok(())
    }

    fn write_exhaust(&mut self, t: &ExhaustionTrace, a: &ExhaustArgs) -> Result<(), Failure> {
        let path = self.path("trace.csv");
        io::write_trace(&path, t)?;
        if let Some(s) = &t.snapshot {
            let path = self.path("snapshot.csv");
            io::write_snapshot(&path, s)?;
        }
        let summary = toml::toml! {
            converged = (t.converged)
            lambda_limit = (t.lambda_limit)
            last_gap = (t.last_gap)
            gap_tol = (a.gap_tol)
            monotone = (t.is_monotone())
            h = (a.h)
            gaps = (t.gaps())
            consistency = (t.consistency.clone())
        };
        self.write_text("exhaust.toml", &summary.to_string())
    }

    fn harnack(&mut self, a: &HarnackArgs) -> Result<(), Failure> {
        let p = self.problem(&a.problem)?;
        self.require_valid(&p)?;
        let cfg = a.solver.config();
        cfg.validate()?;
        let sol = solve_principal(&p, a.n, &cfg)?;
        self.write_text("eigen.toml", &EigenRecord::from_solution(&sol).to_toml()?)?;
        let report = harnack::verify(&p, &sol, a.r1, a.r2, a.eps)?;
        let path = self.path("harnack.csv");
        io::write_harnack(&path, std::slice::from_ref(&report))?;
        println!(
            "log max/min = {}, log C = {}, w~ excess = {:e}",
            report.log_empirical_ratio, report.log_theoretical_c, report.w_tilde_excess
        );
        if !report.pass {
            return Err(Failure::new(
                2,
                "empirical Harnack ratio exceeds the constant",
            ));
        }
        Ok(())
    }

    fn certify(&mut self, a: &CertifyArgs) -> Result<(), Failure> {
        let p = self.problem(&a.problem)?;
        let batch = match self.preset.checks.take() {
            Some(b) => b,
            None => CertifyBatch::load(&a.checks).map_err(|e| with_path(e, &a.checks))?,
        };
        self.manifest.checks = Some(batch.clone());
        let checks = batch.checks()?;
        let cfg = a.solver.config();
        cfg.validate()?;
        let mut reports: Vec<PropertyReport> = Vec::new();
        let mut err = None;
        for c in &checks {
            match run_check(&p, c, a.n, &cfg) {
                Ok(r) => reports.extend(r),
                Err(e) => {
                    err = Some(Failure::from(e));
                    break;
                }
            }
        }
        let path = self.path("certify.csv");
        io::write_certify(fs::File::create(path)?, &reports)?;
        for r in &reports {
            println!("{r}");
        }
        if let Some(f) = err {
            return Err(f);
        }
        let failed = reports.iter().filter(|r| !r.pass).count();
        if failed > 0 {
            return Err(Failure::new(
                2,
                format!("{failed} property check(s) failed"),
            ));
        }
        Ok(())
    }

    fn kpp(&mut self, a: &KppArgs) -> Result<(), Failure> {
        let g = match a.niche {
            Niche::Favorable => kpp::examples::niche(),
            Niche::Hostile => Coefficient::Constant(-1.0),
        };
        let opts = SimulationOptions {
            mass_tol: a.mass_tol,
            record_every: a.record_every,
            solver: a.solver.config(),
            ..SimulationOptions::default()
        };
        opts.solver.validate()?;
        let inner = SimulationOptions {
            solver: driftev::SolverConfig {
                exec: par::Exec::Sequential,
                ..opts.solver.clone()
            },
            ..opts.clone()
        };
        let results = par::map_jobs(opts.solver.exec, &a.speeds, |&c| {
            let spec =
                KppSpec::logistic(kpp::examples::kernel(), c, g.clone(), a.radius, a.carrying)?;
            let dt = a.dt.unwrap_or_else(|| kpp::stable_dt(&spec, a.h));
            kpp::simulate_with(&spec, a.h, dt, a.t_end, &inner)
        });
        let mut rows = Vec::new();
        let mut err = None;
        for (k, (c, r)) in a.speeds.iter().zip(results).enumerate() {
            match r {
                Ok(sim) => {
                    if a.record_every.is_some() {
                        let path = self.path(&format!("kpp_field_{k}.csv"));
                        io::write_kpp_field(&path, &sim.nodes, &sim.frames)?;
                    }
                    rows.push(SweepRow {
                        c: *c,
                        verdict: sim.verdict,
                    });
                }
                Err(e) => {
                    err.get_or_insert(Failure::from(e).prefixed(&format!("c = {c}")));
                }
            }
        }
        let path = self.path("kpp_sweep.csv");
        io::write_kpp_sweep(&path, &rows)?;
        for r in &rows {
            let v = r.verdict;
            println!(
                "c = {}: lambda_lin = {}, predicted {}, final max {:e}, agree = {}",
                r.c,
                v.lambda_lin,
                v.predicted.name(),
                v.simulated_mass,
                v.agree
            );
        }
        match err {
            Some(f) => Err(f),
            None => Ok(()),
        }
    }
}

fn with_path(e: Error, path: &Path) -> Failure {
    Failure::from(e).prefixed(&path.display().to_string())
}

impl Failure {
    fn prefixed(self, what: &str) -> Self {
        Failure::new(self.code, format!("{what}: {}", self.message))
    }
}

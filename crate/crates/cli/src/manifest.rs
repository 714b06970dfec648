use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use driftev::io::{CertifyBatch, ProblemFile};

use crate::{Command, Failure};

pub const FILE_NAME: &str = "manifest.toml";

/// Everything needed to repeat a run: the parsed command line, the problem and
/// batch files it read, and the outcome.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub library_version: String,
    pub run: Command,
    /// `uniform-ones` or `random-positive:<seed>`.
    pub seed_vector: String,
    pub exit_code: u8,
    pub message: Option<String>,
    pub outputs: Vec<String>,
    pub problem: Option<ProblemFile>,
    pub checks: Option<CertifyBatch>,
}

impl Manifest {
    pub fn new(run: Command) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            library_version: driftev::VERSION.to_string(),
            seed_vector: seed_vector(&run),
            run,
            exit_code: 0,
            message: None,
            outputs: Vec::new(),
            problem: None,
            checks: None,
        }
    }

    pub fn write(&self, dir: &Path) -> Result<(), Failure> {
        let text = toml::to_string(self).map_err(|e| Failure::new(3, e.to_string()))?;
        fs::write(dir.join(FILE_NAME), text)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, Failure> {
        let text = fs::read_to_string(path)?;
        toml::from_str(&text).map_err(|e| Failure::new(3, format!("{}: {e}", path.display())))
    }
}

fn seed_vector(run: &Command) -> String {
    let seed = match run {
        Command::Solve(a) => a.solver.seed,
        Command::Exhaust(a) => a.solver.seed,
        Command::Harnack(a) => a.solver.seed,
        Command::Certify(a) => a.solver.seed,
        Command::Kpp(a) => a.solver.seed,
        Command::Validate(_) | Command::Rerun(_) => None,
    };
    match seed {
        Some(s) => format!("random-positive:{s}"),
        None => "uniform-ones".into(),
    }
}

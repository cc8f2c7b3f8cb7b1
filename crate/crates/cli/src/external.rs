//! Black-box objectives evaluated by a shell command.
//!
//! Each evaluation spawns `sh -c <command>` once, writes the coordinates as
//! one whitespace-separated line on its stdin and reads one number from its
//! stdout. Output that does not parse, or a nonzero exit, yields NaN, which
//! the optimizers record as a divergence. Failing to spawn is an error.

use std::io::Write;
use std::process::{Command, Stdio};
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use astars::bench::TrialTarget;
use astars::oracle::{NoiseKind, NoiseModel, NoisyOracle, Objective};
use astars::rng::RngStream;
use astars::{Error, Result};

#[derive(Clone, Debug)]
pub struct ExternalObjective {
    command: String,
    dim: usize,
}

impl ExternalObjective {
    pub fn new(command: impl Into<String>, dim: usize) -> Self {
        Self {
            command: command.into(),
            dim,
        }
    }
}

pub fn coordinate_line(x: &DVector<f64>) -> String {
    let parts: Vec<String> = x.iter().map(f64::to_string).collect();
    parts.join(" ")
}

impl Objective for ExternalObjective {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, x: &DVector<f64>) -> Result<f64> {
        let mut child = Command::new("sh")
            .arg("-c")
            .arg(&self.command)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::null())
            .spawn()
            .map_err(|e| Error::Oracle(format!("cannot start `{}`: {e}", self.command)))?;
        if let Some(mut stdin) = child.stdin.take() {
            // commands that ignore their input close the pipe early
            let _ = writeln!(stdin, "{}", coordinate_line(x));
        }
        let out = child
            .wait_with_output()
            .map_err(|e| Error::Oracle(format!("`{}` did not finish: {e}", self.command)))?;
        if !out.status.success() {
            return Ok(f64::NAN);
        }
        let text = String::from_utf8_lossy(&out.stdout);
        Ok(text.trim().parse().unwrap_or(f64::NAN))
    }
}

/// An external oracle with its start recipe and optional known constants.
#[derive(Clone, Debug)]
pub struct ExternalTarget {
    pub objective: ExternalObjective,
    pub x0: Option<DVector<f64>>,
    pub init_scale: f64,
    pub constants: Option<(f64, f64)>,
}

impl TrialTarget for ExternalTarget {
    fn name(&self) -> String {
        format!("`{}`", self.objective.command)
    }

    fn dim(&self) -> usize {
        self.objective.dim
    }

    fn noise_kind(&self) -> NoiseKind {
        NoiseKind::Additive
    }

    fn constants(&self) -> Option<(f64, f64)> {
        self.constants
    }

    fn exact_basis(&self) -> Option<&DMatrix<f64>> {
        None
    }

    fn oracle(&self) -> Result<NoisyOracle> {
        // the command supplies its own noise
        Ok(NoisyOracle::new(
            Arc::new(self.objective.clone()),
            NoiseModel::noiseless(),
        ))
    }

    fn initial_point(&self, rng: &mut RngStream) -> Result<DVector<f64>> {
        match &self.x0 {
            Some(x) => Ok(x.clone()),
            None => Ok(rng.standard_normals(self.objective.dim)? * self.init_scale),
        }
    }
}

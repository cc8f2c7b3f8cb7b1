//! Command-line surface.

use std::path::PathBuf;

use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};

use astars::bench::{Algorithm, BoundSuite, HyperMode, ProblemId};
use astars::faastars::RidgeMode;
use astars::surrogate::SurrogateKind;

#[derive(Debug, Parser)]
#[command(name = "astars", version, about = "Noisy derivative-free optimization with active subspaces")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one algorithm on a benchmark or an external oracle.
    Run(RunCommand),
    /// Monte Carlo checks of the error and moment bounds.
    Validate(ValidateCommand),
    /// Rerun one of the pinned figure configurations.
    Reproduce(ReproduceCommand),
    /// Render summary CSVs as an SVG convergence plot.
    Plot(PlotCommand),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Ridge {
    Off,
    Sigma2,
}

impl From<Ridge> for RidgeMode {
    fn from(r: Ridge) -> Self {
        match r {
            Ridge::Off => RidgeMode::Off,
            Ridge::Sigma2 => RidgeMode::Sigma2,
        }
    }
}

impl Ridge {
    fn as_str(self) -> &'static str {
        match self {
            Ridge::Off => "off",
            Ridge::Sigma2 => "sigma2",
        }
    }
}

/// Everything that determines a run's output.
#[derive(Clone, Debug, PartialEq, Args)]
#[command(group(ArgGroup::new("target").required(true).args(["problem", "oracle_cmd"])))]
pub struct RunSpec {
    /// Benchmark problem: ex1 .. ex5.
    #[arg(long)]
    pub problem: Option<ProblemId>,
    /// Shell command reading coordinates on stdin and printing one value.
    #[arg(long, requires = "dim")]
    pub oracle_cmd: Option<String>,
    /// Dimension of the external oracle.
    #[arg(long)]
    pub dim: Option<usize>,
    /// Fixed start for the external oracle, comma separated.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true, requires = "oracle_cmd")]
    pub x0: Vec<f64>,
    /// Standard deviation of random starts for the external oracle.
    #[arg(long, default_value_t = 1.0)]
    pub init_scale: f64,
    /// Known noise variance of the external oracle.
    #[arg(long, requires = "l1")]
    pub sigma2: Option<f64>,
    /// Known Lipschitz constant of the external oracle's gradient.
    #[arg(long, requires = "sigma2")]
    pub l1: Option<f64>,
    #[arg(long, default_value = "stars")]
    pub algo: Algorithm,
    #[arg(long, default_value_t = 1)]
    pub trials: usize,
    #[arg(long, default_value_t = 1000)]
    pub maxit: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Eigenvalue threshold for the learned subspace.
    #[arg(long, default_value_t = 0.95)]
    pub tau: f64,
    /// Steps between subspace refits (0: never).
    #[arg(long, default_value_t = 0)]
    pub retrain_every: usize,
    #[arg(long, default_value = "rbf")]
    pub surrogate: SurrogateKind,
    /// exact, estimated or scaled(c).
    #[arg(long, default_value = "exact")]
    pub hyper: HyperMode,
    /// Pin the learned subspace dimension.
    #[arg(long)]
    pub fixed_dim: Option<usize>,
    #[arg(long, value_enum, default_value_t = Ridge::Off)]
    pub ridge: Ridge,
    /// Raise the Lipschitz estimate from step curvature.
    #[arg(long)]
    pub l1_updates: bool,
    /// History CSV; the summary goes next to it as `<stem>.summary.csv`.
    #[arg(long)]
    pub out: PathBuf,
}

impl RunSpec {
    /// Flags that parse back to `self`.
    pub fn to_args(&self) -> Vec<String> {
        let mut a = Vec::new();
        let mut flag = |name: &str, value: String| a.push(format!("--{name}={value}"));
        if let Some(p) = self.problem {
            flag("problem", p.to_string());
        }
        if let Some(c) = &self.oracle_cmd {
            flag("oracle-cmd", c.clone());
        }
        if let Some(d) = self.dim {
            flag("dim", d.to_string());
        }
        if !self.x0.is_empty() {
            let v: Vec<String> = self.x0.iter().map(f64::to_string).collect();
            flag("x0", v.join(","));
        }
        flag("init-scale", self.init_scale.to_string());
        if let Some(s) = self.sigma2 {
            flag("sigma2", s.to_string());
        }
        if let Some(l) = self.l1 {
            flag("l1", l.to_string());
        }
        flag("algo", self.algo.to_string());
        flag("trials", self.trials.to_string());
        flag("maxit", self.maxit.to_string());
        flag("seed", self.seed.to_string());
        flag("tau", self.tau.to_string());
        flag("retrain-every", self.retrain_every.to_string());
        flag("surrogate", self.surrogate.to_string());
        flag("hyper", self.hyper.to_string());
        if let Some(j) = self.fixed_dim {
            flag("fixed-dim", j.to_string());
        }
        flag("ridge", self.ridge.as_str().to_string());
        flag("out", self.out.display().to_string());
        if self.l1_updates {
            a.push("--l1-updates".into());
        }
        a
    }
}

#[derive(Debug, Args)]
pub struct RunCommand {
    #[command(flatten)]
    pub spec: RunSpec,
    /// Worker threads (default: all cores).
    #[arg(long, env = "ASTARS_JOBS")]
    pub jobs: Option<usize>,
}

fn parse_suite(s: &str) -> Result<BoundSuite, String> {
    s.parse().map_err(|e: astars::Error| e.to_string())
}

#[derive(Debug, Args)]
pub struct ValidateCommand {
    /// all, oracle, moments or coefficient.
    #[arg(long, default_value = "all", value_parser = parse_suite)]
    pub suite: BoundSuite,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Figure {
    Fig1,
    Fig2,
    Fig3,
    Fig4,
    Fig5,
}

#[derive(Debug, Args)]
pub struct ReproduceCommand {
    #[arg(value_enum)]
    pub figure: Figure,
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, env = "ASTARS_JOBS")]
    pub jobs: Option<usize>,
}

#[derive(Debug, Args)]
pub struct PlotCommand {
    /// Summary CSVs, one series each.
    #[arg(required = true)]
    pub summaries: Vec<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    /// Plot `f - shift`, e.g. the known minimum.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub shift: f64,
    #[arg(long)]
    pub title: Option<String>,
}

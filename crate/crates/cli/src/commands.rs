//! Subcommand implementations.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use nalgebra::DVector;

use astars::bench::{
    make_problem, read_summary_csv, run_trials, validate_bounds, write_history_csv, write_summary_csv,
    AlgorithmSpec, ProblemOverrides, TrialSet, TrialSummary, TrialTarget,
};
use astars::faastars::FaastarsConfig;

use crate::args::{Cli, Command, PlotCommand, ReproduceCommand, RunCommand, RunSpec, ValidateCommand};
use crate::error::{CliError, CliResult};
use crate::external::{ExternalObjective, ExternalTarget};
use crate::plot::render_svg;
use crate::reproduce::figure_spec;

pub fn execute(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Run(c) => run(c),
        Command::Validate(c) => validate(c),
        Command::Reproduce(c) => reproduce(c),
        Command::Plot(c) => plot(c),
    }
}

/// `out/dir/name.csv` becomes `out/dir/name.summary.csv`.
pub fn summary_path(out: &Path) -> PathBuf {
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    out.with_file_name(format!("{stem}.summary.csv"))
}

fn algorithm_spec(s: &RunSpec) -> AlgorithmSpec {
    AlgorithmSpec::new(s.algo, s.hyper).with_faastars(FaastarsConfig {
        surrogate: s.surrogate,
        tau: s.tau,
        retrain_every: s.retrain_every,
        ridge: s.ridge.into(),
        fixed_dim: s.fixed_dim,
        l1_updates: s.l1_updates,
        ..FaastarsConfig::default()
    })
}

fn target(s: &RunSpec) -> CliResult<Box<dyn TrialTarget>> {
    if let Some(id) = s.problem {
        return Ok(Box::new(make_problem(id, &ProblemOverrides::default())?));
    }
    let (Some(cmd), Some(dim)) = (&s.oracle_cmd, s.dim) else {
        return Err(CliError::Usage("either --problem or --oracle-cmd with --dim is required".into()));
    };
    if dim == 0 {
        return Err(CliError::Usage("--dim must be positive".into()));
    }
    let x0 = if s.x0.is_empty() {
        None
    } else if s.x0.len() == dim {
        Some(DVector::from_vec(s.x0.clone()))
    } else {
        return Err(CliError::Usage(format!("--x0 has {} entries, --dim is {dim}", s.x0.len())));
    };
    Ok(Box::new(ExternalTarget {
        objective: ExternalObjective::new(cmd.clone(), dim),
        x0,
        init_scale: s.init_scale,
        constants: s.sigma2.zip(s.l1),
    }))
}

fn create(path: &Path) -> CliResult<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(CliError::io(dir))?;
    }
    Ok(BufWriter::new(File::create(path).map_err(CliError::io(path))?))
}

fn write_set(set: &TrialSet, summary: &TrialSummary, out: &Path) -> CliResult<PathBuf> {
    let mut w = create(out)?;
    write_history_csv(&set.results, &mut w)?;
    w.flush().map_err(CliError::io(out))?;
    let spath = summary_path(out);
    let mut w = create(&spath)?;
    write_summary_csv(summary, &mut w)?;
    w.flush().map_err(CliError::io(&spath))?;
    Ok(spath)
}

fn report(label: &str, set: &TrialSet) {
    let s = &set.summary;
    let fin = s.final_median().map_or("n/a".to_string(), |m| format!("{m:.6e}"));
    println!(
        "{label}: {}/{} trials completed, {} diverged, final median {fin}",
        s.completed, s.trials, s.diverged
    );
}

fn run(c: RunCommand) -> CliResult<()> {
    let s = &c.spec;
    let target = target(s)?;
    let spec = algorithm_spec(s);
    let set = run_trials(target.as_ref(), &spec, s.trials, s.maxit, s.seed, c.jobs)?;
    let spath = write_set(&set, &set.summary, &s.out)?;
    report(&format!("{} on {}", spec.label(), target.name()), &set);
    println!("wrote {} and {}", s.out.display(), spath.display());
    Ok(())
}

fn validate(c: ValidateCommand) -> CliResult<()> {
    let rep = validate_bounds(c.suite, c.seed)?;
    for check in &rep.checks {
        println!("{check}");
    }
    if rep.all_passed() {
        Ok(())
    } else {
        let failed = rep.checks.iter().filter(|k| !k.passed()).count();
        Err(CliError::ValidationFailed(format!("{failed} of {} checks failed", rep.checks.len())))
    }
}

fn reproduce(c: ReproduceCommand) -> CliResult<()> {
    let fig = figure_spec(c.figure);
    let problem = make_problem(fig.problem, &ProblemOverrides::default())?;
    let mut summaries = Vec::new();
    for series in &fig.series {
        let set = run_trials(&problem, &series.spec, fig.trials, fig.maxit, c.seed, c.jobs)?;
        let mut summary = set.summary.clone();
        summary.label = series.name.clone();
        let out = c.out_dir.join(format!("{}-{}.csv", fig.name, series.name));
        write_set(&set, &summary, &out)?;
        report(&series.name, &set);
        summaries.push(summary);
    }
    let svg = render_svg(&summaries, fig.shift, &format!("{} on {}", fig.name, problem.name()))?;
    let out = c.out_dir.join(format!("{}.svg", fig.name));
    fs::write(&out, svg).map_err(CliError::io(&out))?;
    println!("wrote {}", out.display());
    Ok(())
}

fn plot(c: PlotCommand) -> CliResult<()> {
    let mut summaries = Vec::with_capacity(c.summaries.len());
    for path in &c.summaries {
        let f = File::open(path).map_err(CliError::io(path))?;
        let s = read_summary_csv(BufReader::new(f))
            .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        summaries.push(s);
    }
    let title = c.title.clone().unwrap_or_else(|| "convergence".into());
    let svg = render_svg(&summaries, c.shift, &title)?;
    if let Some(dir) = c.out.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(CliError::io(dir))?;
    }
    fs::write(&c.out, svg).map_err(CliError::io(&c.out))?;
    println!("wrote {}", c.out.display());
    Ok(())
}

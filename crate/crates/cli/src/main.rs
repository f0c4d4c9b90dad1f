mod config;
mod convergence;
mod decay;
mod error;
mod neumann;
mod report;
mod stages;
mod svg;
mod table1;

use branchdecay::analysis::FitModel;
use branchdecay::fem::BcKind;
use branchdecay::geometry::ShapeId;
use clap::{Args, Parser, Subcommand, ValueEnum};
use config::ExperimentConfig;
use error::CliError;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "branchdecay", version, about = "Eigenfunction decay in branches of planar domains")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Lowest 20 Dirichlet eigenvalues of the catalogue shapes against the reference table.
    Table1(Common),
    /// Decay profiles and bound checks for one domain.
    Decay(Common),
    /// Where profiles at consecutive refinement levels stop agreeing.
    Convergence(Common),
    /// Free-membrane modes with symmetry classification.
    Neumann(Common),
    /// Generate and save a mesh.
    Mesh(Common),
    /// Compute and save eigenpairs.
    Solve(Common),
    /// Bound checks on a saved eigenpair bundle.
    Check {
        #[arg(long)]
        bundle: PathBuf,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum BcArg {
    Dirichlet,
    Neumann,
}

#[derive(Clone, Copy, ValueEnum)]
enum FitArg {
    Exponential,
    DirichletEnd,
}

#[derive(Args, Clone)]
struct Common {
    /// TOML experiment file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    shape: Option<ShapeId>,
    /// Comma-separated shapes for `table1`.
    #[arg(long, value_delimiter = ',')]
    shapes: Option<Vec<ShapeId>>,
    /// Domain description file in place of a catalogue shape.
    #[arg(long)]
    domain: Option<PathBuf>,
    #[arg(long)]
    level: Option<u32>,
    /// Comma-separated levels for `convergence`.
    #[arg(long, value_delimiter = ',')]
    levels: Option<Vec<u32>>,
    /// Number of eigenpairs.
    #[arg(long)]
    modes: Option<usize>,
    /// Comma-separated mode numbers to analyse. An empty value is rejected.
    #[arg(long, value_delimiter = ',', num_args = 0..)]
    mode_list: Option<Vec<usize>>,
    #[arg(long, value_enum)]
    bc: Option<BcArg>,
    /// Intervals of the profile grid.
    #[arg(long)]
    grid: Option<usize>,
    #[arg(long)]
    base_h: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads, 0 for all cores.
    #[arg(long)]
    workers: Option<usize>,
    /// Tolerance for the command's own gate.
    #[arg(long)]
    tolerance: Option<f64>,
    #[arg(long, value_enum)]
    fit_model: Option<FitArg>,
}

enum Gate {
    Table1,
    Bound,
    Frontier,
    None,
}

impl Common {
    fn resolve(&self, gate: Gate) -> Result<ExperimentConfig, CliError> {
        let mut cfg = match &self.config {
            Some(p) => ExperimentConfig::load(p)?,
            None => ExperimentConfig::default(),
        };
        if let Some(s) = self.shape {
            cfg.shape = s;
            cfg.domain_file = None;
        }
        if let Some(s) = &self.shapes {
            cfg.shapes = s.clone();
        }
        if let Some(d) = &self.domain {
            cfg.domain_file = Some(d.clone());
        }
        if let Some(l) = self.level {
            cfg.level = l;
        }
        if let Some(l) = &self.levels {
            cfg.levels = l.clone();
        }
        if let Some(m) = self.modes {
            cfg.modes = m;
        }
        if let Some(m) = &self.mode_list {
            cfg.mode_list = Some(m.clone());
        }
        if let Some(b) = self.bc {
            cfg.bc = match b {
                BcArg::Dirichlet => BcKind::Dirichlet,
                BcArg::Neumann => BcKind::Neumann,
            };
        }
        if let Some(g) = self.grid {
            cfg.grid_points = g;
        }
        if let Some(h) = self.base_h {
            cfg.base_h = h;
        }
        if let Some(o) = &self.out {
            cfg.output_dir = o.clone();
        }
        if let Some(w) = self.workers {
            cfg.workers = w;
        }
        if let Some(f) = self.fit_model {
            cfg.fit.model = match f {
                FitArg::Exponential => FitModel::Exponential,
                FitArg::DirichletEnd => FitModel::DirichletEnd,
            };
        }
        if let Some(t) = self.tolerance {
            match gate {
                Gate::Table1 => cfg.tolerances.table1 = t,
                Gate::Bound => cfg.tolerances.bound = t,
                Gate::Frontier => cfg.tolerances.frontier = t,
                Gate::None => return Err(CliError::Validation("--tolerance has no effect on this command".into())),
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let (common, gate) = match &cli.command {
        Command::Table1(c) => (c, Gate::Table1),
        Command::Decay(c) | Command::Check { common: c, .. } => (c, Gate::Bound),
        Command::Convergence(c) => (c, Gate::Frontier),
        Command::Neumann(c) | Command::Mesh(c) | Command::Solve(c) => (c, Gate::None),
    };
    let cfg = common.resolve(gate)?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build_global()
        .map_err(|e| CliError::Validation(format!("worker pool: {e}")))?;
    match &cli.command {
        Command::Table1(_) => table1::run(&cfg),
        Command::Decay(_) => decay::run(&cfg),
        Command::Convergence(_) => convergence::run(&cfg),
        Command::Neumann(_) => neumann::run(&cfg),
        Command::Mesh(_) => stages::mesh(&cfg).map(|_| ()),
        Command::Solve(_) => stages::solve(&cfg).map(|_| ()),
        Command::Check { bundle, .. } => decay::check(&cfg, bundle),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

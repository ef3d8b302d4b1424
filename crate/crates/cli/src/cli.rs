//! Command-line surface: one subcommand per experiment kind plus `run` and `compare`.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::config::{EvolveConfig, ExperimentConfig, ExperimentKind, FinalKind};
use crate::error::{CliError, Result};
use crate::experiments::{self, write_error_record};

#[derive(Debug, Parser)]
#[command(name = "adiabatic", version, about = "Spectral-gap and adiabatic-evolution experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the experiment described by a config file.
    Run(Overrides),
    /// Compare two gap_profile.json files on the same grid.
    Compare {
        a: PathBuf,
        b: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    GapSweep(Overrides),
    Separable(Overrides),
    GroverSearch(Overrides),
    Gh1Search(Overrides),
    ShiftSearch(Overrides),
    RandomFinal(Overrides),
    SatGap(Overrides),
    Positivity(Overrides),
    Evolve(Overrides),
    ScalingStudy(Overrides),
}

/// Flags layered over the config file (or over defaults when there is none).
#[derive(Debug, Clone, Default, Args)]
pub struct Overrides {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub threads: Option<usize>,
    /// Number of uniformly spaced s values.
    #[arg(long)]
    pub grid: Option<usize>,
    /// Eigensolver residual tolerance.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Final Hamiltonian.
    #[arg(long = "final", value_enum)]
    pub final_kind: Option<FinalKind>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub target: Option<usize>,
    /// DIMACS CNF file used as the final Hamiltonian.
    #[arg(long)]
    pub cnf: Option<PathBuf>,
    /// Total evolution time.
    #[arg(long)]
    pub time: Option<f64>,
    /// Clause count of a random 3-SAT final.
    #[arg(long)]
    pub clauses: Option<usize>,
}

impl Command {
    fn kind(&self) -> Option<ExperimentKind> {
        Some(match self {
            Command::Run(_) | Command::Compare { .. } => return None,
            Command::GapSweep(_) => ExperimentKind::GapSweep,
            Command::Separable(_) => ExperimentKind::Separable,
            Command::GroverSearch(_) => ExperimentKind::GroverSearch,
            Command::Gh1Search(_) => ExperimentKind::Gh1Search,
            Command::ShiftSearch(_) => ExperimentKind::ShiftSearch,
            Command::RandomFinal(_) => ExperimentKind::RandomFinal,
            Command::SatGap(_) => ExperimentKind::SatGap,
            Command::Positivity(_) => ExperimentKind::Positivity,
            Command::Evolve(_) => ExperimentKind::Evolve,
            Command::ScalingStudy(_) => ExperimentKind::ScalingStudy,
        })
    }

    fn overrides(&self) -> Option<&Overrides> {
        match self {
            Command::Compare { .. } => None,
            Command::Run(o)
            | Command::GapSweep(o)
            | Command::Separable(o)
            | Command::GroverSearch(o)
            | Command::Gh1Search(o)
            | Command::ShiftSearch(o)
            | Command::RandomFinal(o)
            | Command::SatGap(o)
            | Command::Positivity(o)
            | Command::Evolve(o)
            | Command::ScalingStudy(o) => Some(o),
        }
    }
}

impl Overrides {
    pub fn apply(&self, cfg: &mut ExperimentConfig) {
        if let Some(v) = &self.out {
            cfg.out = Some(v.clone());
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(v) = self.threads {
            cfg.threads = Some(v);
        }
        if let Some(v) = self.grid {
            cfg.grid.points = v;
        }
        if let Some(v) = self.tol {
            cfg.grid.tol = v;
        }
        if let Some(v) = self.final_kind {
            cfg.family.final_kind = Some(v);
        }
        if let Some(v) = self.n {
            cfg.family.n = Some(v);
        }
        if let Some(v) = self.target {
            cfg.family.target = Some(v);
        }
        if let Some(v) = &self.cnf {
            cfg.family.final_kind = Some(FinalKind::Dimacs);
            cfg.family.path = Some(v.clone());
        }
        if let Some(t) = self.time {
            match &mut cfg.evolve {
                Some(e) => e.total_time = t,
                None => cfg.evolve = Some(EvolveConfig::new(t)),
            }
        }
        if let Some(v) = self.clauses {
            cfg.family.clauses = Some(v);
        }
    }
}

/// Builds the effective config for a subcommand.
pub fn resolve(command: &Command) -> Result<ExperimentConfig> {
    let o = command.overrides().cloned().unwrap_or_default();
    let mut cfg = match (&o.config, command.kind()) {
        (Some(path), kind) => {
            let cfg = ExperimentConfig::load(path)?;
            if let Some(k) = kind {
                if k != cfg.kind {
                    return Err(CliError::usage(format!(
                        "kind: config says {}, subcommand says {}",
                        cfg.kind.name(),
                        k.name()
                    )));
                }
            }
            cfg
        }
        (None, Some(k)) => ExperimentConfig::new(k),
        (None, None) => return Err(CliError::usage("config: `run` needs --config")),
    };
    o.apply(&mut cfg);
    Ok(cfg)
}

/// Runs a parsed command line; returns the process exit code.
pub fn execute(cli: &Cli) -> i32 {
    let (out, result) = match &cli.command {
        Command::Compare { a, b, out } => (Some(out.clone()), experiments::compare(a, b, out)),
        cmd => match resolve(cmd) {
            Ok(cfg) => (cfg.out.clone(), experiments::run(&cfg)),
            Err(e) => (cmd.overrides().and_then(|o| o.out.clone()), Err(e)),
        },
    };
    match result {
        Ok(m) => {
            println!("{}", serde_json::to_string(&m.summary).expect("summary serializes"));
            0
        }
        Err(e) => {
            eprintln!("{}", write_error_record(out.as_deref().map(Path::new), &e));
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_defaults() {
        let cli = Cli::try_parse_from(["adiabatic", "separable", "--n", "5", "--grid", "11", "--out", "x"]).unwrap();
        let cfg = resolve(&cli.command).unwrap();
        assert_eq!(cfg.kind, ExperimentKind::Separable);
        assert_eq!(cfg.family.n, Some(5));
        assert_eq!(cfg.grid.points, 11);
        cfg.validate().unwrap();
    }

    #[test]
    fn run_needs_config() {
        let cli = Cli::try_parse_from(["adiabatic", "run"]).unwrap();
        assert!(resolve(&cli.command).unwrap_err().is_usage());
    }

    #[test]
    fn cnf_flag_selects_dimacs() {
        let cli = Cli::try_parse_from(["adiabatic", "sat-gap", "--cnf", "a.cnf"]).unwrap();
        let cfg = resolve(&cli.command).unwrap();
        assert_eq!(cfg.final_kind(), Some(FinalKind::Dimacs));
        assert!(cfg.problems().iter().all(|p| !p.starts_with("family.n")));
    }
}

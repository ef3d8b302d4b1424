//! Versioned TOML experiment configuration.

use std::path::{Path, PathBuf};

use adiabatic_core::builders::{
    apply_grover_sign, build_cost, build_grover_generator, build_h0, build_random_final, separable_final,
    shift_variant, CostSpec, RandomFinalSpec, RandomLaw, TargetState, TransverseFieldSpec,
};
use adiabatic_core::evolution::Schedule;
use adiabatic_core::sat::{encode_energy, parse_dimacs, random_instance, SatEncoding, SatInstance};
use adiabatic_core::spectral::sweep::SweepMode;
use adiabatic_core::{tables, InterpolatingFamily, Operator};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    GapSweep,
    Separable,
    GroverSearch,
    Gh1Search,
    ShiftSearch,
    RandomFinal,
    SatGap,
    Positivity,
    Evolve,
    ScalingStudy,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::GapSweep => "gap-sweep",
            ExperimentKind::Separable => "separable",
            ExperimentKind::GroverSearch => "grover-search",
            ExperimentKind::Gh1Search => "gh1-search",
            ExperimentKind::ShiftSearch => "shift-search",
            ExperimentKind::RandomFinal => "random-final",
            ExperimentKind::SatGap => "sat-gap",
            ExperimentKind::Positivity => "positivity",
            ExperimentKind::Evolve => "evolve",
            ExperimentKind::ScalingStudy => "scaling-study",
        }
    }

    /// Final Hamiltonian used when the config does not name one.
    fn default_final(self) -> Option<FinalKind> {
        match self {
            ExperimentKind::Separable | ExperimentKind::Gh1Search | ExperimentKind::ShiftSearch => Some(FinalKind::Separable),
            ExperimentKind::GroverSearch => Some(FinalKind::Grover),
            ExperimentKind::RandomFinal => Some(FinalKind::Random),
            ExperimentKind::SatGap => Some(FinalKind::Sat),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum FinalKind {
    /// `½ Σ (σz + I)`.
    Separable,
    /// `A`: zero on the target, one elsewhere.
    Grover,
    /// Seeded integer energies on `lo..=hi`.
    Random,
    /// Seeded integers on `1..=n` with the target at 0.
    SearchVariant,
    /// Random 3-SAT instance with `clauses` clauses.
    Sat,
    /// 3-SAT instance read from `path`.
    Dimacs,
    /// Energy table read from `path`.
    Table,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Modifier {
    /// Negate the target entry.
    Gh1,
    /// Target to 0, everything else up by 1.
    Shift,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilyConfig {
    #[serde(rename = "final", default, skip_serializing_if = "Option::is_none")]
    pub final_kind: Option<FinalKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub couplings: Option<Vec<u32>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub modifier: Option<Modifier>,
    /// Seed of the random table or instance; the top-level seed when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lo: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hi: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub clauses: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    #[serde(default = "default_points")]
    pub points: usize,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_mode")]
    pub mode: SweepMode,
    #[serde(default = "default_solver_seed")]
    pub solver_seed: u64,
    /// Also run level-crossing detection (dense path only).
    #[serde(default)]
    pub crossings: bool,
    #[serde(default = "default_window")]
    pub crossing_window: f64,
}

fn default_points() -> usize {
    101
}
fn default_tol() -> f64 {
    1e-10
}
fn default_mode() -> SweepMode {
    SweepMode::Sequential
}
fn default_solver_seed() -> u64 {
    adiabatic_core::spectral::krylov::KrylovOptions::default().seed
}
fn default_window() -> f64 {
    0.1
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            points: default_points(),
            tol: default_tol(),
            mode: default_mode(),
            solver_seed: default_solver_seed(),
            crossings: false,
            crossing_window: default_window(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PositivityConfig {
    #[serde(default = "default_s_values")]
    pub s_values: Vec<f64>,
    /// Fixed Trotter step count; doubled until stable when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steps: Option<usize>,
    /// Run the entrywise matrix check (n ≤ 10).
    #[serde(default = "yes")]
    pub matrix: bool,
    #[serde(default = "yes")]
    pub ground: bool,
}

fn default_s_values() -> Vec<f64> {
    (1..=9).map(|k| k as f64 / 10.0).collect()
}
fn yes() -> bool {
    true
}

impl Default for PositivityConfig {
    fn default() -> Self {
        Self {
            s_values: default_s_values(),
            steps: None,
            matrix: true,
            ground: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolveConfig {
    pub total_time: f64,
    #[serde(default)]
    pub schedule: Schedule,
    #[serde(default = "default_evolve_tol")]
    pub tol: f64,
    #[serde(default = "default_stride")]
    pub trace_stride: usize,
}

impl EvolveConfig {
    pub fn new(total_time: f64) -> Self {
        Self {
            total_time,
            schedule: Schedule::default(),
            tol: default_evolve_tol(),
            trace_stride: default_stride(),
        }
    }
}

fn default_evolve_tol() -> f64 {
    1e-10
}
fn default_stride() -> usize {
    10
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScalingConfig {
    pub sizes: Vec<usize>,
    #[serde(default = "default_f_star")]
    pub f_star: f64,
    #[serde(default = "default_rel_tol")]
    pub rel_tol: f64,
}

fn default_f_star() -> f64 {
    0.9
}
fn default_rel_tol() -> f64 {
    1e-3
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub version: u32,
    pub kind: ExperimentKind,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
    #[serde(default)]
    pub family: FamilyConfig,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub positivity: Option<PositivityConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub evolve: Option<EvolveConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scaling: Option<ScalingConfig>,
}

impl ExperimentConfig {
    pub fn new(kind: ExperimentKind) -> Self {
        Self {
            version: FORMAT_VERSION,
            kind,
            seed: 0,
            out: None,
            threads: None,
            family: FamilyConfig::default(),
            grid: GridConfig::default(),
            positivity: None,
            evolve: None,
            scaling: None,
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| CliError::Parse(e.to_string()))?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(CliError::io(path))?;
        Self::parse(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Final Hamiltonian kind after applying the experiment's default.
    pub fn final_kind(&self) -> Option<FinalKind> {
        self.family.final_kind.or(self.kind.default_final())
    }

    pub fn family_seed(&self) -> u64 {
        self.family.seed.unwrap_or(self.seed)
    }

    /// Every problem with the config, one entry per offending field.
    pub fn problems(&self) -> Vec<String> {
        let mut p = Vec::new();
        let f = &self.family;
        if self.version != FORMAT_VERSION {
            p.push(format!("version: expected {FORMAT_VERSION}, found {}", self.version));
        }
        if self.grid.points < 3 {
            p.push("grid.points: need at least 3".into());
        }
        if !(self.grid.tol > 0.0 && self.grid.tol < 1e-3) {
            p.push(format!("grid.tol: {} outside (0, 1e-3)", self.grid.tol));
        }
        if self.threads == Some(0) {
            p.push("threads: must be at least 1".into());
        }
        let fk = self.final_kind();
        match fk {
            None => p.push("family.final: required for this experiment".into()),
            Some(FinalKind::Dimacs | FinalKind::Table) if f.path.is_none() => {
                p.push("family.path: required for a file-backed final Hamiltonian".into())
            }
            Some(FinalKind::Sat) if f.clauses.is_none() => p.push("family.clauses: required for a random 3-SAT final".into()),
            _ => {}
        }
        let needs_n = !matches!(fk, Some(FinalKind::Dimacs | FinalKind::Table)) && self.kind != ExperimentKind::ScalingStudy;
        if needs_n && f.n.is_none() {
            p.push("family.n: required".into());
        }
        if let (Some(n), Some(c)) = (f.n, &f.couplings) {
            if c.len() != n {
                p.push(format!("family.couplings: {} entries for n = {n}", c.len()));
            }
        }
        if matches!(self.kind, ExperimentKind::Gh1Search | ExperimentKind::ShiftSearch) && f.modifier.is_some() {
            p.push("family.modifier: implied by the experiment kind".into());
        }
        if let (Some(lo), Some(hi)) = (f.lo, f.hi) {
            if lo > hi {
                p.push(format!("family.lo/hi: empty range {lo}..={hi}"));
            }
        }
        match self.kind {
            ExperimentKind::Evolve => match &self.evolve {
                None => p.push("evolve: section required".into()),
                Some(e) => {
                    if !(e.total_time > 0.0) {
                        p.push("evolve.total_time: must be positive".into());
                    }
                    if let Err(err) = e.schedule.validate() {
                        p.push(format!("evolve.schedule: {err}"));
                    }
                }
            },
            ExperimentKind::ScalingStudy => match &self.scaling {
                None => p.push("scaling: section required".into()),
                Some(s) => {
                    if s.sizes.is_empty() {
                        p.push("scaling.sizes: empty".into());
                    }
                    if !(s.f_star > 0.5 && s.f_star < 1.0) {
                        p.push(format!("scaling.f_star: {} outside (0.5, 1)", s.f_star));
                    }
                    if matches!(fk, Some(FinalKind::Dimacs | FinalKind::Table)) {
                        p.push("family.final: a scaling study needs a generated final Hamiltonian".into());
                    }
                }
            },
            ExperimentKind::Positivity => {
                if let Some(pc) = &self.positivity {
                    if pc.s_values.iter().any(|s| !(0.0..=1.0).contains(s)) {
                        p.push("positivity.s_values: every s must lie in [0, 1]".into());
                    }
                }
            }
            _ => {}
        }
        p
    }

    pub fn validate(&self) -> Result<()> {
        let problems = self.problems();
        if problems.is_empty() {
            Ok(())
        } else {
            Err(CliError::Usage { fields: problems })
        }
    }
}

/// A built family plus what went into its final Hamiltonian.
pub struct BuiltFamily {
    pub family: InterpolatingFamily,
    /// Unmodified final Hamiltonian, when a modifier was applied.
    pub base: Option<InterpolatingFamily>,
    pub instance: Option<SatInstance>,
    pub encoding: Option<SatEncoding>,
}

impl FamilyConfig {
    fn target(&self, n: usize) -> Result<Option<TargetState>> {
        self.target.map(|t| TargetState::new(n, t)).transpose().map_err(CliError::from)
    }

    fn h0(&self, n: usize) -> Result<Operator> {
        let spec = match &self.couplings {
            Some(c) => TransverseFieldSpec { couplings: c.clone() },
            None => TransverseFieldSpec::uniform(n),
        };
        Ok(build_h0(&spec)?)
    }
}

/// Builds the family for `cfg`, at size `n_override` when given.
pub fn build_family(cfg: &ExperimentConfig, n_override: Option<usize>, modifier: Option<Modifier>) -> Result<BuiltFamily> {
    let f = &cfg.family;
    let kind = cfg.final_kind().ok_or_else(|| CliError::usage("family.final: required"))?;
    let seed = cfg.family_seed();
    let mut instance = None;
    let mut encoding = None;
    let (n, h1, label) = match kind {
        FinalKind::Dimacs | FinalKind::Table => {
            let path = f.path.as_ref().ok_or_else(|| CliError::usage("family.path: required"))?;
            if kind == FinalKind::Dimacs {
                let text = std::fs::read_to_string(path).map_err(CliError::io(path))?;
                let inst = parse_dimacs(&text).map_err(adiabatic_core::Error::from)?;
                let enc = encode_energy(&inst);
                let h1 = build_cost(&enc.ground_zero_cost())?;
                let n = inst.num_vars();
                instance = Some(inst);
                encoding = Some(enc);
                (n, h1, format!("dimacs-n{n}"))
            } else {
                let table = tables::read_table(path)?;
                let spec = CostSpec::new(table)?;
                let n = spec.n();
                (n, build_cost(&spec.shifted_to_zero())?, format!("table-n{n}"))
            }
        }
        _ => {
            let n = n_override.or(f.n).ok_or_else(|| CliError::usage("family.n: required"))?;
            let target = f.target(n)?;
            match kind {
                FinalKind::Separable => (n, separable_final(n)?, format!("separable-n{n}")),
                FinalKind::Grover => {
                    let t = target.unwrap_or(TargetState::new(n, 0)?);
                    (n, build_grover_generator(t)?, format!("grover-n{n}-t{}", t.index()))
                }
                FinalKind::Random | FinalKind::SearchVariant => {
                    let law = if kind == FinalKind::SearchVariant {
                        RandomLaw::SearchVariant
                    } else {
                        RandomLaw::UniformInt {
                            lo: f.lo.unwrap_or(if target.is_some() { 1 } else { 0 }),
                            hi: f.hi.unwrap_or(n as i64),
                        }
                    };
                    let t = if kind == FinalKind::SearchVariant {
                        Some(target.unwrap_or(TargetState::new(n, 0)?))
                    } else {
                        target
                    };
                    let h1 = build_random_final(&RandomFinalSpec { n, seed, law }, t)?;
                    (n, h1, format!("random-n{n}-seed{seed}"))
                }
                FinalKind::Sat => {
                    let m = f.clauses.ok_or_else(|| CliError::usage("family.clauses: required"))?;
                    let inst = random_instance(n, m, seed)?;
                    let enc = encode_energy(&inst);
                    let h1 = build_cost(&enc.ground_zero_cost())?;
                    instance = Some(inst);
                    encoding = Some(enc);
                    (n, h1, format!("sat-n{n}-m{m}-seed{seed}"))
                }
                FinalKind::Dimacs | FinalKind::Table => unreachable!(),
            }
        }
    };
    let h0 = f.h0(n)?;
    let target = f.target(n)?;
    let mut family = InterpolatingFamily::new(label.clone(), h0.clone(), h1.clone())?;
    if let Some(t) = target {
        family = family.with_target(t);
    }
    let modifier = modifier.or(f.modifier);
    let Some(m) = modifier else {
        return Ok(BuiltFamily {
            family,
            base: None,
            instance,
            encoding,
        });
    };
    let t = target.unwrap_or(TargetState::new(n, 0)?);
    let (h2, suffix) = match m {
        Modifier::Gh1 => (apply_grover_sign(&h1, t)?, "gh1"),
        Modifier::Shift => (shift_variant(&h1, t)?, "shift"),
    };
    let modified = InterpolatingFamily::new(format!("{label}-{suffix}-t{}", t.index()), h0, h2)?.with_target(t);
    Ok(BuiltFamily {
        family: modified,
        base: Some(family.with_target(t)),
        instance,
        encoding,
    })
}

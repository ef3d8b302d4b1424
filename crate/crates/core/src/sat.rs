//! 3-SAT instances and their violated-clause energy tables.
//!
//! Variable `v` (1-based) is read from qubit `v - 1`; bit value 0 means the
//! variable is true.

use std::fmt;

use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::basis::{check_qubits, dim, stride};
use crate::builders::{seeded_rng, CostSpec};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Literal {
    /// 1-based variable index.
    pub var: u32,
    pub positive: bool,
}

impl Literal {
    pub fn from_dimacs(x: i64) -> Self {
        Self {
            var: x.unsigned_abs() as u32,
            positive: x > 0,
        }
    }

    pub fn to_dimacs(self) -> i64 {
        if self.positive {
            self.var as i64
        } else {
            -(self.var as i64)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Clause(pub [Literal; 3]);

impl Clause {
    /// Bit mask over the three variables and the index pattern that falsifies
    /// every literal: `k & mask == pattern` iff the clause is violated by `k`.
    fn violation_pattern(&self, n: usize) -> (usize, usize) {
        self.0.iter().fold((0, 0), |(mask, pat), lit| {
            let st = stride(n, lit.var as usize - 1);
            // positive literal is false when its bit is 1
            (mask | st, if lit.positive { pat | st } else { pat })
        })
    }
}

impl fmt::Display for Clause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [a, b, c] = self.0;
        write!(f, "{} {} {} 0", a.to_dimacs(), b.to_dimacs(), c.to_dimacs())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SatInstance {
    num_vars: usize,
    clauses: Vec<Clause>,
}

/// `8·C(n,3)`, the number of distinct 3-variable clauses.
pub fn max_clauses(n: usize) -> usize {
    if n < 3 {
        return 0;
    }
    8 * n * (n - 1) * (n - 2) / 6
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ClauseProblem {
    Width(usize),
    DuplicateLiteral(i64),
    ComplementaryLiterals(u32),
    VariableOutOfRange(u32),
}

impl ClauseProblem {
    fn describe(&self, num_vars: usize) -> String {
        match self {
            ClauseProblem::Width(w) => format!("clause has {w} literals, expected 3"),
            ClauseProblem::DuplicateLiteral(l) => format!("duplicate literal {l}"),
            ClauseProblem::ComplementaryLiterals(v) => {
                format!("variable {v} appears with both polarities")
            }
            ClauseProblem::VariableOutOfRange(v) => {
                format!("variable {v} out of range [1, {num_vars}]")
            }
        }
    }
}

fn check_clause(lits: &[Literal], num_vars: usize) -> std::result::Result<Clause, ClauseProblem> {
    if lits.len() != 3 {
        return Err(ClauseProblem::Width(lits.len()));
    }
    for (i, l) in lits.iter().enumerate() {
        if l.var == 0 || l.var as usize > num_vars {
            return Err(ClauseProblem::VariableOutOfRange(l.var));
        }
        if let Some(prev) = lits[..i].iter().find(|p| p.var == l.var) {
            return Err(if prev.positive == l.positive {
                ClauseProblem::DuplicateLiteral(l.to_dimacs())
            } else {
                ClauseProblem::ComplementaryLiterals(l.var)
            });
        }
    }
    Ok(Clause([lits[0], lits[1], lits[2]]))
}

impl SatInstance {
    pub fn new(num_vars: usize, clauses: Vec<Clause>) -> Result<Self> {
        check_qubits(num_vars)?;
        for c in &clauses {
            check_clause(&c.0, num_vars).map_err(|p| Error::contract(p.describe(num_vars)))?;
        }
        if clauses.len() > max_clauses(num_vars) {
            return Err(Error::contract(format!(
                "{} clauses exceed 8·C({num_vars},3) = {}",
                clauses.len(),
                max_clauses(num_vars)
            )));
        }
        Ok(Self { num_vars, clauses })
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn clauses(&self) -> &[Clause] {
        &self.clauses
    }

    pub fn to_dimacs(&self) -> String {
        let mut out = format!("p cnf {} {}\n", self.num_vars, self.clauses.len());
        for c in &self.clauses {
            out.push_str(&c.to_string());
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DimacsErrorKind {
    #[error("missing or malformed problem line")]
    ProblemLine,
    #[error("unexpected token {0:?}")]
    Token(String),
    #[error("{0}")]
    Clause(String),
    #[error("clause not terminated by 0")]
    Unterminated,
    #[error("header declares {declared} clauses, found {found}")]
    ClauseCount { declared: usize, found: usize },
    #[error("invalid instance: {0}")]
    Instance(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("DIMACS line {line}: {kind}")]
pub struct DimacsError {
    pub line: usize,
    pub kind: DimacsErrorKind,
}

/// Parses DIMACS CNF where every clause has exactly three literals.
/// Clauses may span lines; an error names the line where the offending
/// clause ends (or where the bad token sits).
pub fn parse_dimacs(text: &str) -> std::result::Result<SatInstance, DimacsError> {
    let mut header: Option<(usize, usize)> = None;
    let mut clauses = Vec::new();
    let mut pending: Vec<Literal> = Vec::new();
    let mut last_line = 0;
    let err = |line, kind| DimacsError { line, kind };

    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        last_line = line_no;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('c') {
            continue;
        }
        if line.starts_with('%') {
            break;
        }
        if line.starts_with('p') {
            let parts: Vec<&str> = line.split_whitespace().collect();
            let parsed = match parts.as_slice() {
                ["p", "cnf", v, c] => v.parse().ok().zip(c.parse().ok()),
                _ => None,
            };
            if header.is_some() || parsed.is_none() {
                return Err(err(line_no, DimacsErrorKind::ProblemLine));
            }
            header = parsed;
            continue;
        }
        let (num_vars, _) = header.ok_or(err(line_no, DimacsErrorKind::ProblemLine))?;
        for tok in line.split_whitespace() {
            let x: i64 = tok
                .parse()
                .map_err(|_| err(line_no, DimacsErrorKind::Token(tok.to_string())))?;
            if x != 0 {
                pending.push(Literal::from_dimacs(x));
                continue;
            }
            let clause = check_clause(&pending, num_vars)
                .map_err(|p| err(line_no, DimacsErrorKind::Clause(p.describe(num_vars))))?;
            clauses.push(clause);
            pending.clear();
        }
    }
    let (num_vars, declared) = header.ok_or(err(last_line, DimacsErrorKind::ProblemLine))?;
    if !pending.is_empty() {
        return Err(err(last_line, DimacsErrorKind::Unterminated));
    }
    if declared != clauses.len() {
        return Err(err(
            last_line,
            DimacsErrorKind::ClauseCount {
                declared,
                found: clauses.len(),
            },
        ));
    }
    SatInstance::new(num_vars, clauses)
        .map_err(|e| err(last_line, DimacsErrorKind::Instance(e.to_string())))
}

/// Energy table of an instance, with its minimum recorded.
#[derive(Debug, Clone, PartialEq)]
pub struct SatEncoding {
    pub table: CostSpec,
    pub min_energy: f64,
}

impl SatEncoding {
    pub fn satisfiable(&self) -> bool {
        self.min_energy == 0.0
    }

    /// Cost with ground energy zero; unsatisfiable tables are shifted down.
    pub fn ground_zero_cost(&self) -> CostSpec {
        if !self.satisfiable() {
            log::warn!(
                "instance is unsatisfiable (min violated clauses {}); subtracting the minimum",
                self.min_energy
            );
        }
        self.table.shifted_to_zero()
    }
}

/// Entry `k` is the number of clauses violated by the assignment encoded in `k`.
pub fn encode_energy(inst: &SatInstance) -> SatEncoding {
    let n = inst.num_vars;
    let mut table = vec![0.0f64; dim(n)];
    let patterns: Vec<(usize, usize)> = inst.clauses.iter().map(|c| c.violation_pattern(n)).collect();
    for (mask, pat) in patterns {
        for (k, e) in table.iter_mut().enumerate() {
            if k & mask == pat {
                *e += 1.0;
            }
        }
    }
    let min_energy = table.iter().copied().fold(f64::INFINITY, f64::min);
    SatEncoding {
        table: CostSpec { energies: table },
        min_energy,
    }
}

/// `m` clauses, each over three distinct variables with random polarities.
pub fn random_instance(n: usize, m: usize, seed: u64) -> Result<SatInstance> {
    if n < 3 {
        return Err(Error::invalid(format!("{n} variables cannot form 3-clauses")));
    }
    if m == 0 {
        return Err(Error::invalid("clause count must be at least 1"));
    }
    let mut rng = seeded_rng(seed);
    let clauses = (0..m)
        .map(|_| {
            let mut vars = sample(&mut rng, n, 3).into_vec();
            vars.sort_unstable();
            Clause([0, 1, 2].map(|i| Literal {
                var: vars[i] as u32 + 1,
                positive: rng.gen_bool(0.5),
            }))
        })
        .collect();
    SatInstance::new(n, clauses)
}

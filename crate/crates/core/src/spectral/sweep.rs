//! Gap profiles `g(s) = E1(s) − E0(s)` over an s-grid, with the minimum
//! refined by golden-section search on the bracketing triple.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::krylov::{lowest_two, KrylovOptions, LowestTwo};
use crate::error::{Error, Result};
use crate::family::InterpolatingFamily;
use crate::tables::fmt_f64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepMode {
    /// One sample after another, each warm-started from the previous one.
    Sequential,
    /// Independent cold starts on the rayon pool.
    Parallel,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepOptions {
    pub solver: KrylovOptions,
    pub mode: SweepMode,
    /// Golden-section stops once the bracket is this narrow...
    pub s_tol: f64,
    /// ...or once the bracket is flat to this level.
    pub g_tol: f64,
    /// Maximum number of ×10 densifications of a non-unimodal bracket.
    pub max_densify: usize,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self {
            solver: KrylovOptions::default(),
            mode: SweepMode::Sequential,
            s_tol: 1e-6,
            g_tol: 1e-10,
            max_densify: 3,
        }
    }
}

impl SweepOptions {
    pub fn with_tol(mut self, tol: f64) -> Self {
        self.solver.tol = tol;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapSample {
    pub s: f64,
    pub e0: f64,
    pub e1: f64,
    pub residual0: f64,
    pub residual1: f64,
    pub degenerate: bool,
}

impl GapSample {
    pub fn gap(&self) -> f64 {
        self.e1 - self.e0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Refinement {
    pub bracket: (f64, f64),
    pub iterations: usize,
    pub s_tolerance: f64,
    pub g_tolerance: f64,
    pub densified: usize,
    pub evaluations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverStats {
    pub mode: SweepMode,
    pub tol: f64,
    pub matvecs: usize,
    pub max_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapProfile {
    pub family: String,
    pub n: usize,
    pub samples: Vec<GapSample>,
    pub g_min: f64,
    pub s_star: f64,
    pub refinement: Refinement,
    pub solver: SolverStats,
}

impl GapProfile {
    pub fn grid(&self) -> Vec<f64> {
        self.samples.iter().map(|p| p.s).collect()
    }

    pub fn gaps(&self) -> Vec<f64> {
        self.samples.iter().map(GapSample::gap).collect()
    }

    pub fn min_sampled_gap(&self) -> f64 {
        self.gaps().into_iter().fold(f64::INFINITY, f64::min)
    }

    /// Columns `s,E0,E1,gap,residual0,residual1`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("s,E0,E1,gap,residual0,residual1\n");
        for p in &self.samples {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                fmt_f64(p.s),
                fmt_f64(p.e0),
                fmt_f64(p.e1),
                fmt_f64(p.gap()),
                fmt_f64(p.residual0),
                fmt_f64(p.residual1)
            );
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("profile serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Table(format!("gap profile JSON: {e}")))
    }
}

/// `count` evenly spaced points from 0 to 1 inclusive.
pub fn uniform_grid(count: usize) -> Vec<f64> {
    let count = count.max(2);
    (0..count).map(|i| i as f64 / (count - 1) as f64).collect()
}

fn validate_grid(grid: &[f64]) -> Result<()> {
    if grid.len() < 3 {
        return Err(Error::invalid("grid needs at least 3 points"));
    }
    if grid.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::invalid("grid must be strictly increasing"));
    }
    if grid[0] != 0.0 || *grid.last().unwrap() != 1.0 {
        return Err(Error::invalid("grid must include both endpoints 0 and 1"));
    }
    Ok(())
}

/// Something that yields the two lowest levels at a given `s`.
pub trait GapOracle {
    fn sample(&mut self, s: f64) -> Result<GapSample>;
    fn matvecs(&self) -> usize {
        0
    }
}

/// Iterative solver on `H(s)`, warm-started from the nearest previous sample.
pub struct KrylovOracle<'a> {
    family: &'a InterpolatingFamily,
    opts: KrylovOptions,
    warm: Vec<(f64, [Vec<f64>; 2])>,
    matvecs: usize,
}

impl<'a> KrylovOracle<'a> {
    pub fn new(family: &'a InterpolatingFamily, opts: KrylovOptions) -> Self {
        Self {
            family,
            opts,
            warm: Vec::new(),
            matvecs: 0,
        }
    }

    pub fn solve(&mut self, s: f64) -> Result<LowestTwo> {
        let op = self.family.at(s)?;
        let warm = self
            .warm
            .iter()
            .min_by(|a, b| (a.0 - s).abs().total_cmp(&(b.0 - s).abs()))
            .map(|(_, v)| v.as_slice());
        let r = lowest_two(&op, &self.opts, warm).map_err(|e| e.at(s))?;
        self.matvecs += r.matvecs;
        self.warm.push((s, [r.v0.clone(), r.v1.clone()]));
        if self.warm.len() > 8 {
            self.warm.remove(0);
        }
        Ok(r)
    }
}

fn to_sample(s: f64, r: &LowestTwo) -> GapSample {
    GapSample {
        s,
        e0: r.e0,
        e1: r.e1,
        residual0: r.residuals[0],
        residual1: r.residuals[1],
        degenerate: r.degenerate,
    }
}

impl GapOracle for KrylovOracle<'_> {
    fn sample(&mut self, s: f64) -> Result<GapSample> {
        let r = self.solve(s)?;
        Ok(to_sample(s, &r))
    }

    fn matvecs(&self) -> usize {
        self.matvecs
    }
}

/// Sweeps the grid with the iterative solver and refines the minimum gap.
pub fn gap_sweep(family: &InterpolatingFamily, grid: &[f64], opts: &SweepOptions) -> Result<GapProfile> {
    validate_grid(grid)?;
    let (samples, grid_matvecs) = match opts.mode {
        SweepMode::Sequential => {
            let mut oracle = KrylovOracle::new(family, opts.solver);
            let samples = grid.iter().map(|&s| oracle.sample(s)).collect::<Result<Vec<_>>>()?;
            (samples, oracle.matvecs())
        }
        SweepMode::Parallel => {
            let solved = grid
                .par_iter()
                .map(|&s| {
                    let op = family.at(s)?;
                    let r = lowest_two(&op, &opts.solver, None).map_err(|e| e.at(s))?;
                    Ok((to_sample(s, &r), r.matvecs))
                })
                .collect::<Result<Vec<_>>>()?;
            let mv = solved.iter().map(|x| x.1).sum();
            (solved.into_iter().map(|x| x.0).collect(), mv)
        }
    };
    let mut oracle = KrylovOracle::new(family, opts.solver);
    let mut profile = profile_from_samples(family.id(), family.n(), samples, &mut oracle, opts)?;
    profile.solver.matvecs += grid_matvecs;
    Ok(profile)
}

/// Builds a profile from already computed grid samples, refining with `oracle`.
pub fn profile_from_samples(
    family: &str,
    n: usize,
    samples: Vec<GapSample>,
    oracle: &mut dyn GapOracle,
    opts: &SweepOptions,
) -> Result<GapProfile> {
    let pts: Vec<(f64, f64)> = samples.iter().map(|p| (p.s, p.gap())).collect();
    let (g_min, s_star, refinement, extra_res) = refine_minimum(&pts, oracle, opts)?;
    let max_residual = samples
        .iter()
        .map(|p| p.residual0.max(p.residual1))
        .fold(extra_res, f64::max);
    Ok(GapProfile {
        family: family.to_string(),
        n,
        samples,
        g_min,
        s_star,
        refinement,
        solver: SolverStats {
            mode: opts.mode,
            tol: opts.solver.tol,
            matvecs: oracle.matvecs(),
            max_residual,
        },
    })
}

fn is_unimodal(values: &[f64]) -> bool {
    let lowest = values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map_or(0, |(i, _)| i);
    values[..=lowest].windows(2).all(|w| w[0] >= w[1]) && values[lowest..].windows(2).all(|w| w[0] <= w[1])
}

struct Tracker<'o> {
    oracle: &'o mut dyn GapOracle,
    best: (f64, f64),
    evaluations: usize,
    max_residual: f64,
}

impl Tracker<'_> {
    fn eval(&mut self, s: f64) -> Result<f64> {
        let p = self.oracle.sample(s)?;
        self.evaluations += 1;
        self.max_residual = self.max_residual.max(p.residual0.max(p.residual1));
        let g = p.gap();
        if g < self.best.0 {
            self.best = (g, s);
        }
        Ok(g)
    }
}

/// Returns `(g_min, s_star, record, max residual seen)`.
fn refine_minimum(
    pts: &[(f64, f64)],
    oracle: &mut dyn GapOracle,
    opts: &SweepOptions,
) -> Result<(f64, f64, Refinement, f64)> {
    let first = pts
        .iter()
        .copied()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .ok_or_else(|| Error::invalid("no samples"))?;
    let mut tr = Tracker {
        oracle,
        best: (first.1, first.0),
        evaluations: 0,
        max_residual: 0.0,
    };
    let mut local: Vec<(f64, f64)> = pts.to_vec();
    let mut densified = 0;
    let (lo, hi) = loop {
        let i = local
            .iter()
            .enumerate()
            .min_by(|a, b| a.1 .1.total_cmp(&b.1 .1))
            .map(|(i, _)| i)
            .unwrap();
        let lo = local[i.saturating_sub(1)];
        let mid = local[i];
        let hi = local[(i + 1).min(local.len() - 1)];
        let mut seq = vec![lo.1];
        if mid.0 > lo.0 {
            seq.push(tr.eval(0.5 * (lo.0 + mid.0))?);
        }
        seq.push(mid.1);
        if hi.0 > mid.0 {
            seq.push(tr.eval(0.5 * (mid.0 + hi.0))?);
        }
        seq.push(hi.1);
        if is_unimodal(&seq) || densified >= opts.max_densify {
            break (lo, hi);
        }
        densified += 1;
        let count = 10 * (local.len().min(3) - 1);
        local = (0..=count)
            .map(|k| {
                let s = lo.0 + (hi.0 - lo.0) * k as f64 / count as f64;
                Ok((s, tr.eval(s)?))
            })
            .collect::<Result<Vec<_>>>()?;
    };

    // golden-section on [a, b]
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo, hi);
    let mut iterations = 0;
    if b.0 > a.0 {
        let mut c = b.0 - inv_phi * (b.0 - a.0);
        let mut d = a.0 + inv_phi * (b.0 - a.0);
        let mut gc = tr.eval(c)?;
        let mut gd = tr.eval(d)?;
        while b.0 - a.0 > opts.s_tol {
            let top = a.1.max(b.1);
            if top - gc.min(gd) < opts.g_tol {
                break;
            }
            iterations += 1;
            if gc <= gd {
                b = (d, gd);
                d = c;
                gd = gc;
                c = b.0 - inv_phi * (b.0 - a.0);
                gc = tr.eval(c)?;
            } else {
                a = (c, gc);
                c = d;
                gc = gd;
                d = a.0 + inv_phi * (b.0 - a.0);
                gd = tr.eval(d)?;
            }
        }
    }
    let (g_min, s_star) = tr.best;
    Ok((
        g_min,
        s_star,
        Refinement {
            bracket: (lo.0, hi.0),
            iterations,
            s_tolerance: opts.s_tol,
            g_tolerance: opts.g_tol,
            densified,
            evaluations: tr.evaluations,
        },
        tr.max_residual,
    ))
}

//! Real-time Schrödinger evolution `i dψ/dt = H(s(t)) ψ` and the runtime
//! needed to reach a target final fidelity.
//!
//! The stepper is a fourth-order triple-jump composition of a symmetric
//! base step whose Hamiltonian is frozen at the substep midpoint. For a
//! separable `H0` and a diagonal (or separable) `H1` the base step is the
//! Strang splitting with exact 2×2 and phase factors; any other operator
//! form falls back to a Lanczos exponential of the midpoint Hamiltonian.
//! Step sizes come from step doubling.

use std::fmt::Write as _;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::family::InterpolatingFamily;
use crate::operator::{apply_local, Block2, Form, Operator};
use crate::spectral::krylov::{lowest_two, KrylovOptions};
use crate::spectral::same_level;
use crate::spectral::sweep::{gap_sweep, GapProfile, SweepOptions};
use crate::state::StateVector;
use crate::tables::fmt_f64;

const NORM_BOUND: f64 = 1e-8;

/// Monotone map from `t/T ∈ [0, 1]` onto `s ∈ [0, 1]`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Schedule {
    #[default]
    Linear,
    /// `s = (t/T)^exponent`.
    Power { exponent: f64 },
    /// Linear interpolation between `(t/T, s)` knots.
    PiecewiseLinear { knots: Vec<(f64, f64)> },
}

impl Schedule {
    pub fn validate(&self) -> Result<()> {
        match self {
            Schedule::Linear => Ok(()),
            Schedule::Power { exponent } if *exponent > 0.0 && exponent.is_finite() => Ok(()),
            Schedule::Power { exponent } => Err(Error::invalid(format!("schedule exponent {exponent} must be positive"))),
            Schedule::PiecewiseLinear { knots } => {
                let ok = knots.len() >= 2
                    && knots[0] == (0.0, 0.0)
                    && *knots.last().unwrap() == (1.0, 1.0)
                    && knots.windows(2).all(|w| w[1].0 > w[0].0 && w[1].1 >= w[0].1);
                if ok {
                    Ok(())
                } else {
                    Err(Error::invalid("schedule knots must run monotonically from (0,0) to (1,1)"))
                }
            }
        }
    }

    pub fn s(&self, u: f64) -> f64 {
        let u = u.clamp(0.0, 1.0);
        match self {
            Schedule::Linear => u,
            Schedule::Power { exponent } => u.powf(*exponent),
            Schedule::PiecewiseLinear { knots } => {
                let i = knots.partition_point(|k| k.0 <= u).clamp(1, knots.len() - 1);
                let (a, b) = (knots[i - 1], knots[i]);
                a.1 + (b.1 - a.1) * (u - a.0) / (b.0 - a.0)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Integrator {
    /// Splitting when the operator forms allow it, Lanczos otherwise.
    #[default]
    Auto,
    Splitting,
    Lanczos,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepControl {
    /// Allowed local error per accepted step.
    pub tol: f64,
    pub initial_step: f64,
    pub max_step: f64,
    /// Steps shorter than this fraction of `T` count as underflow.
    pub min_step_fraction: f64,
    pub max_steps: usize,
}

impl Default for StepControl {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            initial_step: 0.05,
            max_step: 1.0,
            min_step_fraction: 1e-12,
            max_steps: 10_000_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvolutionSpec {
    pub total_time: f64,
    pub schedule: Schedule,
    pub control: StepControl,
    pub integrator: Integrator,
    /// Record a trace point every this many accepted steps; endpoints are always recorded.
    pub trace_stride: Option<usize>,
}

impl EvolutionSpec {
    pub fn linear(total_time: f64) -> Self {
        Self {
            total_time,
            schedule: Schedule::Linear,
            control: StepControl::default(),
            integrator: Integrator::Auto,
            trace_stride: None,
        }
    }

    pub fn with_trace(mut self, stride: usize) -> Self {
        self.trace_stride = Some(stride.max(1));
        self
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.control.tol = tol;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub t: f64,
    pub s: f64,
    /// Weight of `ψ(t)` on the instantaneous ground space.
    pub overlap: f64,
    /// `‖ψ‖²`.
    pub norm: f64,
    pub energy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntegratorStats {
    pub method: String,
    pub accepted: usize,
    pub rejected: usize,
    pub min_step: f64,
    pub max_step: f64,
    pub max_norm_drift: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvolutionResult {
    pub family: String,
    pub total_time: f64,
    pub trace: Vec<TracePoint>,
    pub final_fidelity: f64,
    pub stats: IntegratorStats,
    #[serde(skip)]
    pub final_state: Option<StateVector>,
}

impl EvolutionResult {
    /// Columns `t,s,overlap,norm,energy`.
    pub fn trace_csv(&self) -> String {
        let mut out = String::from("t,s,overlap,norm,energy\n");
        for p in &self.trace {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                fmt_f64(p.t),
                fmt_f64(p.s),
                fmt_f64(p.overlap),
                fmt_f64(p.norm),
                fmt_f64(p.energy)
            );
        }
        out
    }
}

/// Symmetric 2×2 with complex entries, used for `e^{−iτB}`.
#[derive(Debug, Clone, Copy)]
struct UnitaryBlock {
    a: Complex64,
    b: Complex64,
    d: Complex64,
}

impl UnitaryBlock {
    /// `e^{−iτB} = e^{−iτm} (cos(τr) I − i sin(τr)/r (B − mI))`.
    fn exp(blk: Block2, tau: f64) -> Self {
        let mean = 0.5 * (blk.a + blk.d);
        let half = 0.5 * (blk.a - blk.d);
        let r = half.hypot(blk.b);
        let phase = Complex64::from_polar(1.0, -tau * mean);
        let c = (tau * r).cos();
        let sr = if r == 0.0 { tau } else { (tau * r).sin() / r };
        let mi = Complex64::new(0.0, -sr);
        Self {
            a: phase * (c + mi * half),
            b: phase * mi * blk.b,
            d: phase * (c - mi * half),
        }
    }

    fn apply(&self, x0: Complex64, x1: Complex64) -> (Complex64, Complex64) {
        (self.a * x0 + self.b * x1, self.b * x0 + self.d * x1)
    }
}

enum Part<'a> {
    Diagonal(&'a [f64]),
    Separable(&'a [Block2]),
}

impl<'a> Part<'a> {
    fn of(op: &'a Operator) -> Option<Self> {
        match op.form() {
            Form::Diagonal(e) => Some(Part::Diagonal(e)),
            Form::Separable(b) => Some(Part::Separable(b)),
            _ => None,
        }
    }

    /// `ψ ← e^{−iτcP} ψ`.
    fn exp_apply(&self, n: usize, c: f64, tau: f64, psi: &mut [Complex64]) {
        if c == 0.0 {
            return;
        }
        match self {
            Part::Diagonal(e) => {
                for (x, &ek) in psi.iter_mut().zip(e.iter()) {
                    *x *= Complex64::from_polar(1.0, -tau * c * ek);
                }
            }
            Part::Separable(blocks) => {
                for (j, blk) in blocks.iter().enumerate() {
                    let u = UnitaryBlock::exp(blk.scaled(c), tau);
                    apply_local(n, j, psi, |a, b| u.apply(a, b));
                }
            }
        }
    }
}

/// `ψ ← e^{−ihH} ψ` by Lanczos, growing the subspace until the tail
/// coefficient is below `tol`.
fn lanczos_exp(op: &Operator, h: f64, psi: &mut [Complex64], tol: f64) -> Result<()> {
    const MAX_DIM: usize = 64;
    let beta0 = psi.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
    if beta0 == 0.0 {
        return Ok(());
    }
    let d = psi.len();
    let mut v: Vec<Vec<Complex64>> = vec![psi.iter().map(|x| x / beta0).collect()];
    let mut alpha = Vec::new();
    let mut beta = Vec::new();
    let mut w = vec![Complex64::default(); d];
    for k in 0..MAX_DIM.min(d) {
        op.apply_into(&v[k], &mut w)?;
        let a: f64 = v[k].iter().zip(&w).map(|(x, y)| (x.conj() * y).re).sum();
        for _ in 0..2 {
            for vj in &v {
                let c: Complex64 = vj.iter().zip(&w).map(|(x, y)| x.conj() * y).sum();
                for (wi, xi) in w.iter_mut().zip(vj) {
                    *wi -= c * xi;
                }
            }
        }
        alpha.push(a);
        let b = w.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        let m = k + 1;
        let t = DMatrix::from_fn(m, m, |i, j| {
            if i == j {
                alpha[i]
            } else if i + 1 == j || j + 1 == i {
                beta[i.min(j)]
            } else {
                0.0
            }
        });
        let eig = SymmetricEigen::new(t);
        // y = Q e^{−ihΛ} Qᵀ e1
        let y: Vec<Complex64> = (0..m)
            .map(|i| {
                (0..m)
                    .map(|l| eig.eigenvectors[(i, l)] * eig.eigenvectors[(0, l)] * Complex64::from_polar(1.0, -h * eig.eigenvalues[l]))
                    .sum()
            })
            .collect();
        let tail = b * y[m - 1].norm();
        if tail <= tol || b <= 1e-14 || m == d {
            psi.fill(Complex64::default());
            for (yi, vi) in y.iter().zip(&v) {
                for (p, x) in psi.iter_mut().zip(vi) {
                    *p += yi * x * beta0;
                }
            }
            return Ok(());
        }
        beta.push(b);
        v.push(w.iter().map(|x| x / b).collect());
    }
    Err(Error::NoConvergence {
        iterations: MAX_DIM,
        best_residual: f64::NAN,
        s: None,
    })
}

struct Stepper<'a> {
    family: &'a InterpolatingFamily,
    spec: &'a EvolutionSpec,
    parts: Option<(Part<'a>, Part<'a>)>,
}

const YOSHIDA_W1: f64 = 1.351_207_191_959_657_7; // 1 / (2 − 2^{1/3})
const YOSHIDA_W0: f64 = -1.702_414_383_919_315_3; // 1 − 2 w1

impl<'a> Stepper<'a> {
    fn new(family: &'a InterpolatingFamily, spec: &'a EvolutionSpec) -> Result<Self> {
        let parts = match (Part::of(family.h0()), Part::of(family.h1())) {
            (Some(a), Some(b)) => Some((a, b)),
            _ => None,
        };
        let parts = match spec.integrator {
            Integrator::Auto => parts,
            Integrator::Lanczos => None,
            Integrator::Splitting => Some(parts.ok_or(Error::UnsupportedForm {
                expected: "diagonal or separable",
                found: "general",
            })?),
        };
        Ok(Self { family, spec, parts })
    }

    fn method(&self) -> &'static str {
        if self.parts.is_some() {
            "splitting-yoshida4"
        } else {
            "lanczos-yoshida4"
        }
    }

    fn s_at(&self, t: f64) -> f64 {
        self.spec.schedule.s(t / self.spec.total_time)
    }

    /// Symmetric second-order step over `[t, t + h]`.
    fn base(&self, t: f64, h: f64, psi: &mut [Complex64]) -> Result<()> {
        let s = self.s_at(t + 0.5 * h);
        match &self.parts {
            Some((p0, p1)) => {
                let n = self.family.n();
                p0.exp_apply(n, 1.0 - s, 0.5 * h, psi);
                p1.exp_apply(n, s, h, psi);
                p0.exp_apply(n, 1.0 - s, 0.5 * h, psi);
                Ok(())
            }
            None => {
                let op = self.family.at(s)?;
                lanczos_exp(&op, h, psi, 1e-3 * self.spec.control.tol)
            }
        }
    }

    fn step(&self, t: f64, h: f64, psi: &mut [Complex64]) -> Result<()> {
        let h1 = YOSHIDA_W1 * h;
        let h0 = YOSHIDA_W0 * h;
        self.base(t, h1, psi)?;
        self.base(t + h1, h0, psi)?;
        self.base(t + h1 + h0, h1, psi)
    }
}

fn ground_weight(op: &Operator, psi: &[Complex64]) -> Result<f64> {
    if let Some(e) = op.diagonal_entries() {
        let m = e.iter().copied().fold(f64::INFINITY, f64::min);
        return Ok(e
            .iter()
            .zip(psi)
            .filter(|(&ek, _)| same_level(ek, m))
            .map(|(_, x)| x.norm_sqr())
            .sum());
    }
    let r = lowest_two(op, &KrylovOptions::default(), None)?;
    let proj = |v: &[f64]| -> f64 {
        let c: Complex64 = v.iter().zip(psi).map(|(a, x)| x * a).sum();
        c.norm_sqr()
    };
    let mut w = proj(&r.v0);
    if r.degenerate {
        w += proj(&r.v1);
    }
    Ok(w)
}

fn trace_point(family: &InterpolatingFamily, t: f64, s: f64, psi: &[Complex64]) -> Result<TracePoint> {
    let op = family.at(s)?;
    let mut hpsi = vec![Complex64::default(); psi.len()];
    op.apply_into(psi, &mut hpsi)?;
    let norm: f64 = psi.iter().map(|x| x.norm_sqr()).sum();
    let energy: f64 = psi.iter().zip(&hpsi).map(|(x, y)| (x.conj() * y).re).sum::<f64>() / norm;
    Ok(TracePoint {
        t,
        s,
        overlap: ground_weight(&op, psi).map_err(|e| e.at(s))?.min(1.0),
        norm,
        energy,
    })
}

/// Integrates from `initial` (normally the ground state of `H0`) over `[0, T]`.
pub fn evolve(family: &InterpolatingFamily, spec: &EvolutionSpec, initial: &StateVector) -> Result<EvolutionResult> {
    let big_t = spec.total_time;
    if !(big_t > 0.0 && big_t.is_finite()) {
        return Err(Error::invalid(format!("total time {big_t} must be positive")));
    }
    spec.schedule.validate()?;
    if initial.n() != family.n() {
        return Err(Error::DimensionMismatch {
            expected: family.n(),
            found: initial.n(),
        });
    }
    let stepper = Stepper::new(family, spec)?;
    let ctl = spec.control;
    let mut psi = initial.amplitudes().to_vec();
    let norm0: f64 = psi.iter().map(|x| x.norm_sqr()).sum();
    let mut trace = vec![trace_point(family, 0.0, spec.schedule.s(0.0), &psi)?];

    let h_max = ctl.max_step.min(big_t);
    let h_min = ctl.min_step_fraction * big_t;
    let mut h = ctl.initial_step.min(h_max);
    let mut t = 0.0;
    let mut stats = IntegratorStats {
        method: stepper.method().to_string(),
        accepted: 0,
        rejected: 0,
        min_step: f64::INFINITY,
        max_step: 0.0,
        max_norm_drift: 0.0,
    };
    let mut coarse = vec![Complex64::default(); psi.len()];
    let mut fine = vec![Complex64::default(); psi.len()];
    while t < big_t {
        if stats.accepted + stats.rejected >= ctl.max_steps {
            return Err(Error::Stiffness { t });
        }
        let last = t + h >= big_t * (1.0 - 1e-14);
        let hs = if last { big_t - t } else { h };
        coarse.copy_from_slice(&psi);
        fine.copy_from_slice(&psi);
        let attempt = stepper.step(t, hs, &mut coarse).and_then(|_| {
            stepper.step(t, 0.5 * hs, &mut fine)?;
            stepper.step(t + 0.5 * hs, 0.5 * hs, &mut fine)
        });
        let err = match attempt {
            Ok(()) => coarse.iter().zip(&fine).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt() / 15.0,
            Err(Error::NoConvergence { .. }) => f64::INFINITY,
            Err(e) => return Err(e),
        };
        let factor = if err == 0.0 {
            2.0
        } else {
            (0.9 * (ctl.tol / err).powf(0.2)).clamp(0.2, 2.0)
        };
        if err <= ctl.tol {
            std::mem::swap(&mut psi, &mut fine);
            t = if last { big_t } else { t + hs };
            stats.accepted += 1;
            stats.min_step = stats.min_step.min(hs);
            stats.max_step = stats.max_step.max(hs);
            let drift = (psi.iter().map(|x| x.norm_sqr()).sum::<f64>() - norm0).abs();
            stats.max_norm_drift = stats.max_norm_drift.max(drift);
            if drift > NORM_BOUND {
                return Err(Error::IntegratorFailure {
                    drift,
                    bound: NORM_BOUND,
                });
            }
            if let Some(k) = spec.trace_stride {
                if stats.accepted % k == 0 && t < big_t {
                    trace.push(trace_point(family, t, stepper.s_at(t), &psi)?);
                }
            }
            h = (hs * factor).min(h_max);
        } else {
            stats.rejected += 1;
            h = hs * factor;
            if h < h_min {
                return Err(Error::Stiffness { t });
            }
        }
    }
    let end = trace_point(family, big_t, spec.schedule.s(1.0), &psi)?;
    trace.push(end);
    Ok(EvolutionResult {
        family: family.id().to_string(),
        total_time: big_t,
        final_fidelity: end.overlap / end.norm,
        trace,
        stats,
        final_state: Some(StateVector::new(family.n(), psi)?),
    })
}

/// Final fidelity of a linear-schedule run of length `t` from the uniform state.
pub fn final_fidelity(family: &InterpolatingFamily, t: f64, control: StepControl) -> Result<f64> {
    let spec = EvolutionSpec {
        control,
        ..EvolutionSpec::linear(t)
    };
    Ok(evolve(family, &spec, &StateVector::uniform(family.n())?)?.final_fidelity)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingOptions {
    pub f_star: f64,
    /// Bisection stops when `T_hi / T_lo ≤ 1 + rel_tol`.
    pub rel_tol: f64,
    /// Extra doublings allowed beyond `2^{n+6}` before giving up.
    pub max_expansions: u32,
    pub control: StepControl,
    pub sweep: SweepOptions,
    pub grid_points: usize,
}

impl Default for ScalingOptions {
    fn default() -> Self {
        Self {
            f_star: 0.9,
            rel_tol: 1e-3,
            max_expansions: 6,
            control: StepControl {
                tol: 1e-9,
                ..StepControl::default()
            },
            sweep: SweepOptions::default(),
            grid_points: 41,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingRow {
    pub n: usize,
    pub family: String,
    pub g_min: f64,
    pub s_star: f64,
    pub t_star: f64,
    /// Every `(T, fidelity)` evaluated, in evaluation order.
    pub curve: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Regression {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Ordinary least squares of `y` on `x`.
pub fn linear_regression(x: &[f64], y: &[f64]) -> Option<Regression> {
    let k = x.len();
    if k < 2 || y.len() != k {
        return None;
    }
    let mx = x.iter().sum::<f64>() / k as f64;
    let my = y.iter().sum::<f64>() / k as f64;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    Some(Regression {
        slope,
        intercept: my - slope * mx,
        r_squared: if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) },
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingTable {
    pub f_star: f64,
    pub rows: Vec<ScalingRow>,
    /// `ln T*` against `ln(1/g_min)`.
    pub runtime_vs_gap: Option<Regression>,
    /// `log₂ T*` against `n`.
    pub runtime_vs_n: Option<Regression>,
}

impl ScalingTable {
    /// Columns `n,g_min,s_star,t_star`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,g_min,s_star,t_star\n");
        for r in &self.rows {
            let _ = writeln!(out, "{},{},{},{}", r.n, fmt_f64(r.g_min), fmt_f64(r.s_star), fmt_f64(r.t_star));
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("table serializes")
    }
}

/// Smallest `T` (to `rel_tol`) whose final fidelity reaches `f_star`.
///
/// `T` doubles upward from 1 until the target is met (the last failing value
/// and the first passing one form the bracket), then the bracket is bisected
/// geometrically.
pub fn find_t_star(family: &InterpolatingFamily, opts: &ScalingOptions) -> Result<(f64, Vec<(f64, f64)>)> {
    let n = family.n();
    let mut curve = Vec::new();
    let fid = |t: f64, curve: &mut Vec<(f64, f64)>| -> Result<f64> {
        let f = final_fidelity(family, t, opts.control)?;
        curve.push((t, f));
        Ok(f)
    };
    let t_cap = 2f64.powi(n as i32 + 6) * 2f64.powi(opts.max_expansions as i32);
    let mut lo = 0.0;
    let mut hi = 1.0;
    loop {
        if fid(hi, &mut curve)? >= opts.f_star {
            break;
        }
        lo = hi;
        hi *= 2.0;
        if hi > t_cap {
            return Err(Error::BracketFailure {
                n,
                target: opts.f_star,
                t_max: lo,
                curve,
            });
        }
    }
    if lo == 0.0 {
        return Ok((hi, curve));
    }
    while hi / lo > 1.0 + opts.rel_tol {
        let mid = (lo * hi).sqrt();
        if fid(mid, &mut curve)? >= opts.f_star {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok((hi, curve))
}

/// `T*(n)` and `g_min(n)` for each size, with both regressions.
pub fn runtime_scaling_study<F>(generator: F, sizes: &[usize], opts: &ScalingOptions) -> Result<ScalingTable>
where
    F: Fn(usize) -> Result<InterpolatingFamily> + Sync,
{
    if !(opts.f_star > 0.5 && opts.f_star < 1.0) {
        return Err(Error::invalid(format!("target fidelity {} outside (0.5, 1)", opts.f_star)));
    }
    let grid = crate::spectral::sweep::uniform_grid(opts.grid_points);
    let rows = sizes
        .par_iter()
        .map(|&n| {
            let family = generator(n)?;
            let profile: GapProfile = gap_sweep(&family, &grid, &opts.sweep)?;
            let (t_star, curve) = find_t_star(&family, opts)?;
            log::info!("{}: g_min = {:.6}, T* = {:.4}", family.id(), profile.g_min, t_star);
            Ok(ScalingRow {
                n,
                family: family.id().to_string(),
                g_min: profile.g_min,
                s_star: profile.s_star,
                t_star,
                curve,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let inv_gap: Vec<f64> = rows.iter().map(|r| (1.0 / r.g_min).ln()).collect();
    let ln_t: Vec<f64> = rows.iter().map(|r| r.t_star.ln()).collect();
    let ns: Vec<f64> = rows.iter().map(|r| r.n as f64).collect();
    let log2_t: Vec<f64> = rows.iter().map(|r| r.t_star.log2()).collect();
    Ok(ScalingTable {
        f_star: opts.f_star,
        runtime_vs_gap: linear_regression(&inv_gap, &ln_t),
        runtime_vs_n: linear_regression(&ns, &log2_t),
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builders::{build_h0, build_separable_pair, grover_family, TargetState, TransverseFieldSpec};
    use crate::sat::{encode_energy, random_instance};

    fn sat_family(n: usize, m: usize, seed: u64) -> InterpolatingFamily {
        let enc = encode_energy(&random_instance(n, m, seed).unwrap());
        let h1 = Operator::diagonal(enc.table.energies.clone()).unwrap();
        InterpolatingFamily::new("sat", build_h0(&TransverseFieldSpec::uniform(n)).unwrap(), h1).unwrap()
    }

    #[test]
    fn schedules() {
        assert_eq!(Schedule::Linear.s(0.25), 0.25);
        assert!((Schedule::Power { exponent: 2.0 }.s(0.5) - 0.25).abs() < 1e-15);
        let pw = Schedule::PiecewiseLinear { knots: vec![(0.0, 0.0), (0.5, 0.8), (1.0, 1.0)] };
        pw.validate().unwrap();
        assert!((pw.s(0.25) - 0.4).abs() < 1e-15);
        assert!((pw.s(0.75) - 0.9).abs() < 1e-15);
        assert_eq!(pw.s(1.0), 1.0);
        assert!(Schedule::PiecewiseLinear { knots: vec![(0.0, 0.0), (0.5, 0.9), (0.7, 0.3), (1.0, 1.0)] }.validate().is_err());
        assert!(Schedule::Power { exponent: -1.0 }.validate().is_err());
    }

    #[test]
    fn unitary_block_matches_series() {
        let blk = Block2::new(0.3, -0.7, 1.1);
        let u = UnitaryBlock::exp(blk, 0.9);
        let m = DMatrix::from_row_slice(2, 2, &[0.3, -0.7, -0.7, 1.1]).map(|x| Complex64::new(0.0, -0.9 * x));
        let mut term = DMatrix::<Complex64>::identity(2, 2);
        let mut sum = term.clone();
        for i in 1..40 {
            term = &term * &m / Complex64::new(i as f64, 0.0);
            sum += &term;
        }
        assert!((u.a - sum[(0, 0)]).norm() < 1e-14);
        assert!((u.b - sum[(0, 1)]).norm() < 1e-14);
        assert!((u.d - sum[(1, 1)]).norm() < 1e-14);
    }

    #[test]
    fn lanczos_matches_splitting_on_constant_hamiltonian() {
        let fam = sat_family(5, 10, 2);
        let op = fam.at(0.4).unwrap();
        let dense = op.to_dense().unwrap();
        let eig = SymmetricEigen::new(dense);
        let mut psi: Vec<Complex64> = (0..32).map(|k| Complex64::new((k as f64).sin(), (k as f64 * 0.3).cos())).collect();
        let start = psi.clone();
        lanczos_exp(&op, 0.7, &mut psi, 1e-13).unwrap();
        for k in 0..32 {
            let mut want = Complex64::default();
            for l in 0..32 {
                let c: Complex64 = (0..32).map(|j| start[j] * eig.eigenvectors[(j, l)]).sum();
                want += c * Complex64::from_polar(1.0, -0.7 * eig.eigenvalues[l]) * eig.eigenvectors[(k, l)];
            }
            assert!((psi[k] - want).norm() < 1e-11);
        }
    }

    #[test]
    fn initial_trace_point() {
        let fam = build_separable_pair(4).unwrap();
        let r = evolve(&fam, &EvolutionSpec::linear(5.0).with_trace(10), &StateVector::uniform(4).unwrap()).unwrap();
        let p0 = r.trace[0];
        assert!(p0.energy.abs() < 1e-10);
        assert!((p0.overlap - 1.0).abs() < 1e-10);
        assert!(r.trace.len() > 2);
        assert!(r.trace.iter().all(|p| (p.norm - 1.0).abs() < 1e-8 && p.overlap <= 1.0 + 1e-10));
    }

    #[test]
    fn slow_separable_run_is_adiabatic() {
        let fam = build_separable_pair(4).unwrap();
        let f = final_fidelity(&fam, 200.0, StepControl::default()).unwrap();
        assert!(f >= 0.999, "{f}");
    }

    #[test]
    fn sudden_limit() {
        for n in [3, 5] {
            let fam = build_separable_pair(n).unwrap();
            let f = final_fidelity(&fam, 0.01, StepControl::default()).unwrap();
            assert!((f - 2f64.powi(-(n as i32))).abs() < 1e-3, "{f}");
        }
    }

    #[test]
    fn constant_diagonal_keeps_populations() {
        let e: Vec<f64> = (0..16).map(|k| (k * 7 % 5) as f64).collect();
        let h = Operator::diagonal(e).unwrap();
        let fam = InterpolatingFamily::new("frozen", h.clone(), h).unwrap();
        let psi: Vec<Complex64> = (0..16).map(|k| Complex64::new(1.0 + k as f64, 0.5)).collect();
        let mut init = StateVector::new(4, psi).unwrap();
        init.normalize().unwrap();
        let r = evolve(&fam, &EvolutionSpec::linear(13.0), &init).unwrap();
        let out = r.final_state.unwrap();
        for (a, b) in init.populations().iter().zip(out.populations()) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn lanczos_path_agrees_with_splitting() {
        let fam = sat_family(5, 12, 7);
        let init = StateVector::uniform(5).unwrap();
        let a = evolve(&fam, &EvolutionSpec::linear(8.0), &init).unwrap();
        let spec = EvolutionSpec { integrator: Integrator::Lanczos, ..EvolutionSpec::linear(8.0) };
        let b = evolve(&fam, &spec, &init).unwrap();
        assert_eq!(b.stats.method, "lanczos-yoshida4");
        assert!((a.final_fidelity - b.final_fidelity).abs() < 1e-7);
    }

    #[test]
    fn tolerance_halving_is_stable() {
        let fam = sat_family(6, 24, 11);
        let init = StateVector::uniform(6).unwrap();
        let f1 = evolve(&fam, &EvolutionSpec::linear(20.0), &init).unwrap().final_fidelity;
        let f2 = evolve(&fam, &EvolutionSpec::linear(20.0).with_tol(0.5e-10), &init).unwrap().final_fidelity;
        assert!((f1 - f2).abs() <= 1e-6);
    }

    #[test]
    fn separable_fidelity_grows_with_time() {
        let fam = build_separable_pair(3).unwrap();
        let mut prev = 0.0;
        for k in 0..6 {
            let f = final_fidelity(&fam, 2f64.powi(k), StepControl::default()).unwrap();
            assert!(f >= prev - 1e-12);
            prev = f;
        }
    }

    #[test]
    fn higher_target_needs_longer() {
        let fam = build_separable_pair(3).unwrap();
        let lo = find_t_star(&fam, &ScalingOptions::default()).unwrap().0;
        let hi = find_t_star(&fam, &ScalingOptions { f_star: 0.99, ..Default::default() }).unwrap().0;
        assert!(hi >= lo);
    }

    #[test]
    fn grover_runtime_grows() {
        let table = runtime_scaling_study(
            |n| grover_family(TargetState::new(n, 0)?),
            &[3, 4, 5],
            &ScalingOptions { rel_tol: 1e-2, ..Default::default() },
        )
        .unwrap();
        let t: Vec<f64> = table.rows.iter().map(|r| r.t_star).collect();
        assert!(t.windows(2).all(|w| w[1] > w[0]), "{t:?}");
        assert!(table.to_csv().lines().count() == 4);
    }

    #[test]
    fn regression_basics() {
        let r = linear_regression(&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.0]).unwrap();
        assert!((r.slope - 2.0).abs() < 1e-15 && r.intercept.abs() < 1e-14);
        assert!(linear_regression(&[1.0], &[1.0]).is_none());
    }

    #[test]
    fn rejects_bad_time() {
        let fam = build_separable_pair(2).unwrap();
        assert!(evolve(&fam, &EvolutionSpec::linear(0.0), &StateVector::uniform(2).unwrap()).is_err());
    }
}

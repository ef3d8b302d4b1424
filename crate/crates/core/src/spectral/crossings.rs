//! Level tracking on the dense path and detection of close approaches
//! between adjacent levels.
//!
//! Levels are followed from one grid point to the next by greedy maximal
//! eigenvector overlap. An approach is called a crossing when the refined
//! separation vanishes (below `exact_tol`) and the tracked labels of the two
//! levels swap; everything else is an avoided crossing. The classification is
//! heuristic and every event says so.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::dense::dense_spectrum;
use super::{same_level, DEGENERACY_TOL};
use crate::basis::MAX_EXACT_DIAG_QUBITS;
use crate::error::{Error, Result};
use crate::family::InterpolatingFamily;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrossingOptions {
    /// Separations below this are reported.
    pub window: f64,
    /// Number of lowest eigenvalue positions tracked.
    pub levels: usize,
    pub exact_tol: f64,
    pub s_tol: f64,
}

impl Default for CrossingOptions {
    fn default() -> Self {
        Self {
            window: 0.1,
            levels: 4,
            exact_tol: 1e-10,
            s_tol: 1e-9,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CrossingKind {
    Crossing,
    Avoided,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossingEvent {
    pub s: f64,
    /// Position of the lower of the two levels, counted from the ground state.
    pub lower: usize,
    pub energies: (f64, f64),
    pub separation: f64,
    pub kind: CrossingKind,
    pub labels_swapped: bool,
    /// Weight of the target on each of the two levels' eigenspaces.
    pub target_overlap: Option<(f64, f64)>,
    pub heuristic: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelTracks {
    pub grid: Vec<f64>,
    /// `energies[j][p]`: position `p` at grid point `j`.
    pub energies: Vec<Vec<f64>>,
    /// Continuation label of each position; labels start as `0..levels`.
    pub labels: Vec<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossingReport {
    pub family: String,
    pub window: f64,
    pub tracks: LevelTracks,
    pub events: Vec<CrossingEvent>,
}

struct Snapshot {
    energies: Vec<f64>,
    vectors: DMatrix<f64>,
}

/// Eigenvalues plus enough eigenvectors to cover every tracked position and
/// the degenerate group that ends the tracked range.
fn snapshot(family: &InterpolatingFamily, s: f64, keep: usize) -> Result<Snapshot> {
    let r = dense_spectrum(&family.at(s)?, true)?;
    let v = r.eigenvectors.expect("vectors requested");
    let mut cols = keep.min(r.eigenvalues.len());
    while cols < r.eigenvalues.len() && same_level(r.eigenvalues[cols - 1], r.eigenvalues[cols]) {
        cols += 1;
    }
    Ok(Snapshot {
        energies: r.eigenvalues,
        vectors: v.columns(0, cols).into_owned(),
    })
}

fn eigenvalues_at(family: &InterpolatingFamily, s: f64) -> Result<Vec<f64>> {
    Ok(dense_spectrum(&family.at(s)?, false)?.eigenvalues)
}

/// Degenerate group containing position `p`, clipped to the stored columns.
fn group(energies: &[f64], p: usize, stored: usize) -> std::ops::Range<usize> {
    let mut lo = p;
    while lo > 0 && same_level(energies[lo - 1], energies[p]) {
        lo -= 1;
    }
    let mut hi = p + 1;
    while hi < stored && same_level(energies[hi], energies[p]) {
        hi += 1;
    }
    lo..hi
}

/// Squared overlap of vector `i` of `a` with the eigenspace of position `k` in `b`.
fn overlap(a: &Snapshot, i: usize, b: &Snapshot, k: usize) -> f64 {
    let vi = a.vectors.column(i);
    group(&b.energies, k, b.vectors.ncols())
        .map(|c| vi.dot(&b.vectors.column(c)).powi(2))
        .sum()
}

fn match_labels(prev: &Snapshot, prev_labels: &[usize], next: &mut Snapshot, fresh: &mut usize) -> Vec<usize> {
    let l = prev_labels.len();
    let mut pairs: Vec<(f64, usize, usize)> = Vec::with_capacity(l * l);
    for i in 0..l {
        for k in 0..l {
            pairs.push((overlap(prev, i, next, k), i, k));
        }
    }
    pairs.sort_by(|x, y| y.0.total_cmp(&x.0).then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2)));
    let mut out = vec![usize::MAX; l];
    let mut source = vec![usize::MAX; l];
    let mut used = vec![false; l];
    for (w, i, k) in pairs {
        if w <= 0.0 || used[i] || out[k] != usize::MAX {
            continue;
        }
        used[i] = true;
        out[k] = prev_labels[i];
        source[k] = i;
    }
    for x in out.iter_mut().filter(|x| **x == usize::MAX) {
        *x = *fresh;
        *fresh += 1;
    }
    align_groups(prev, &source, next);
    out
}

/// Inside a degenerate group the solver's eigenvectors are an arbitrary
/// basis. Rotate them onto the projections of the matched previous vectors so
/// the next matching step sees continuous characters.
fn align_groups(prev: &Snapshot, source: &[usize], next: &mut Snapshot) {
    let stored = next.vectors.ncols();
    let mut p = 0;
    while p < source.len() {
        let g = group(&next.energies, p, stored);
        p = g.end;
        if g.len() < 2 {
            continue;
        }
        let old: Vec<_> = g.clone().map(|c| next.vectors.column(c).into_owned()).collect();
        let project = |v: &nalgebra::DVector<f64>| {
            old.iter().fold(v * 0.0, |acc, c| acc + c * c.dot(v))
        };
        let mut candidates: Vec<_> = g
            .clone()
            .filter(|&k| k < source.len() && source[k] != usize::MAX)
            .map(|k| project(&prev.vectors.column(source[k]).into_owned()))
            .collect();
        candidates.extend(old.iter().cloned());
        let mut basis: Vec<nalgebra::DVector<f64>> = Vec::new();
        for mut v in candidates {
            for _ in 0..2 {
                for b in &basis {
                    v -= b * b.dot(&v);
                }
            }
            let r = v.norm();
            if r > 1e-8 && basis.len() < g.len() {
                basis.push(v / r);
            }
        }
        for (c, b) in g.zip(basis) {
            next.vectors.set_column(c, &b);
        }
    }
}

fn golden_min(f: &mut dyn FnMut(f64) -> Result<f64>, mut a: f64, mut b: f64, tol: f64) -> Result<(f64, f64)> {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c)?, f(d)?);
    let mut best = if fc <= fd { (c, fc) } else { (d, fd) };
    for _ in 0..200 {
        if b - a <= tol {
            break;
        }
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c)?;
            if fc < best.1 {
                best = (c, fc);
            }
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d)?;
            if fd < best.1 {
                best = (d, fd);
            }
        }
    }
    Ok(best)
}

/// Tracks the lowest `opts.levels` positions over `grid` and reports every
/// local dip of an adjacent separation below `opts.window`.
///
/// Pairs that are degenerate on most of the grid belong to a persistent
/// multiplet and are skipped.
pub fn detect_crossings(family: &InterpolatingFamily, grid: &[f64], opts: &CrossingOptions) -> Result<CrossingReport> {
    if family.n() > MAX_EXACT_DIAG_QUBITS {
        return Err(Error::SizeGuard {
            what: "crossing detection",
            n: family.n(),
            limit: MAX_EXACT_DIAG_QUBITS,
        });
    }
    if grid.len() < 3 || grid.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::invalid("crossing grid must be increasing with at least 3 points"));
    }
    let l = opts.levels.clamp(2, 1 << family.n());
    let mut snaps = grid.iter().map(|&s| snapshot(family, s, l)).collect::<Result<Vec<_>>>()?;

    let mut labels = vec![(0..l).collect::<Vec<_>>()];
    let mut fresh = l;
    for j in 1..snaps.len() {
        let (done, rest) = snaps.split_at_mut(j);
        let next = match_labels(&done[j - 1], &labels[j - 1], &mut rest[0], &mut fresh);
        labels.push(next);
    }
    let energies: Vec<Vec<f64>> = snaps.iter().map(|s| s.energies[..l].to_vec()).collect();

    let target = family.target().map(|t| t.index());
    let mut events = Vec::new();
    for p in 0..l - 1 {
        let sep: Vec<f64> = energies.iter().map(|e| e[p + 1] - e[p]).collect();
        let degenerate = energies
            .iter()
            .filter(|e| (e[p + 1] - e[p]) <= DEGENERACY_TOL * e[p].abs().max(1.0))
            .count();
        if 2 * degenerate > grid.len() {
            continue;
        }
        for j in 0..sep.len() {
            let left_ok = j == 0 || sep[j] <= sep[j - 1];
            let right_ok = j + 1 == sep.len() || sep[j] < sep[j + 1];
            if sep[j] >= opts.window || !left_ok || !right_ok {
                continue;
            }
            let (ja, jb) = (j.saturating_sub(1), (j + 1).min(sep.len() - 1));
            let (s_min, d_min) = if sep[j] <= opts.exact_tol {
                (grid[j], sep[j])
            } else {
                let mut f = |s: f64| -> Result<f64> {
                    let e = eigenvalues_at(family, s)?;
                    Ok(e[p + 1] - e[p])
                };
                let refined = golden_min(&mut f, grid[ja], grid[jb], opts.s_tol)?;
                if refined.1 < sep[j] {
                    refined
                } else {
                    (grid[j], sep[j])
                }
            };
            let swapped = labels[ja][p] == labels[jb][p + 1] || labels[ja][p + 1] == labels[jb][p];
            let at = snapshot(family, s_min, p + 2)?;
            let target_overlap = target.map(|t| {
                let w = |q: usize| -> f64 {
                    group(&at.energies, q, at.vectors.ncols())
                        .map(|c| at.vectors[(t, c)].powi(2))
                        .sum()
                };
                (w(p), w(p + 1))
            });
            let kind = if d_min < opts.exact_tol && swapped {
                CrossingKind::Crossing
            } else {
                CrossingKind::Avoided
            };
            events.push(CrossingEvent {
                s: s_min,
                lower: p,
                energies: (at.energies[p], at.energies[p + 1]),
                separation: d_min,
                kind,
                labels_swapped: swapped,
                target_overlap,
                heuristic: true,
            });
        }
    }
    events.sort_by(|a, b| a.s.total_cmp(&b.s).then(a.lower.cmp(&b.lower)));
    Ok(CrossingReport {
        family: family.id().to_string(),
        window: opts.window,
        tracks: LevelTracks {
            grid: grid.to_vec(),
            energies,
            labels,
        },
        events,
    })
}

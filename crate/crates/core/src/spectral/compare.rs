//! Side-by-side comparison of two gap profiles on the same grid.

use serde::{Deserialize, Serialize};

use super::sweep::GapProfile;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileComparison {
    pub family_a: String,
    pub family_b: String,
    pub grid: Vec<f64>,
    /// `gap_a(s) − gap_b(s)` per grid point.
    pub gap_differences: Vec<f64>,
    pub max_abs_difference: f64,
    /// `g_min(a) / g_min(b)`.
    pub g_min_ratio: f64,
    /// `s*(b) − s*(a)`.
    pub s_star_shift: f64,
}

pub fn compare_profiles(a: &GapProfile, b: &GapProfile) -> Result<ProfileComparison> {
    let (ga, gb) = (a.grid(), b.grid());
    if ga.len() != gb.len() {
        return Err(Error::GridMismatch(format!("{} vs {} samples", ga.len(), gb.len())));
    }
    if let Some((i, (x, y))) = ga.iter().zip(&gb).enumerate().find(|(_, (x, y))| (*x - *y).abs() > 1e-12) {
        return Err(Error::GridMismatch(format!("sample {i}: s = {x} vs {y}")));
    }
    let gap_differences: Vec<f64> = a.samples.iter().zip(&b.samples).map(|(p, q)| p.gap() - q.gap()).collect();
    Ok(ProfileComparison {
        family_a: a.family.clone(),
        family_b: b.family.clone(),
        max_abs_difference: gap_differences.iter().fold(0.0, |m, d| m.max(d.abs())),
        gap_differences,
        grid: ga,
        g_min_ratio: a.g_min / b.g_min,
        s_star_shift: b.s_star - a.s_star,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builders::{build_separable_pair, gh1_separable_family, TargetState};
    use crate::spectral::sweep::{gap_sweep, uniform_grid, SweepOptions};

    #[test]
    fn self_comparison_is_zero() {
        let p = gap_sweep(&build_separable_pair(3).unwrap(), &uniform_grid(11), &SweepOptions::default()).unwrap();
        let c = compare_profiles(&p, &p).unwrap();
        assert!(c.gap_differences.iter().all(|&d| d == 0.0));
        assert_eq!(c.g_min_ratio, 1.0);
        assert_eq!(c.s_star_shift, 0.0);
    }

    #[test]
    fn grid_mismatch() {
        let fam = build_separable_pair(2).unwrap();
        let a = gap_sweep(&fam, &uniform_grid(5), &SweepOptions::default()).unwrap();
        let b = gap_sweep(&fam, &uniform_grid(6), &SweepOptions::default()).unwrap();
        assert!(matches!(compare_profiles(&a, &b), Err(Error::GridMismatch(_))));
        let c = gap_sweep(&fam, &[0.0, 0.2, 0.5, 0.7, 1.0], &SweepOptions::default()).unwrap();
        assert!(matches!(compare_profiles(&a, &c), Err(Error::GridMismatch(_))));
    }

    #[test]
    fn sign_flip_collapses_gap() {
        let grid = uniform_grid(41);
        let o = SweepOptions::default();
        let a = gap_sweep(&build_separable_pair(10).unwrap(), &grid, &o).unwrap();
        let b = gap_sweep(&gh1_separable_family(TargetState::new(10, 0).unwrap()).unwrap(), &grid, &o).unwrap();
        let c = compare_profiles(&a, &b).unwrap();
        assert!(c.g_min_ratio > 10.0, "ratio {}", c.g_min_ratio);
    }
}

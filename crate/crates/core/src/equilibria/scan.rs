use serde::{Deserialize, Serialize};

use super::{nontrivial_fixed_points, phi_roots, FixedPoint, FixedPointCensus};
use crate::error::{Error, Result};
use crate::model::ModelParams;

const LOCATE_TOL: f64 = 1e-6;

/// Which parameter is held fixed during a scan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ScanAxis {
    VaryB { g: f64 },
    VaryG { b: f64 },
}

impl ScanAxis {
    pub fn params(&self, v: f64) -> ModelParams {
        match *self {
            ScanAxis::VaryB { g } => ModelParams { b: v, g },
            ScanAxis::VaryG { b } => ModelParams { b, g: v },
        }
    }

    pub fn varying_name(&self) -> &'static str {
        match self {
            ScanAxis::VaryB { .. } => "b",
            ScanAxis::VaryG { .. } => "g",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CoincidenceKind {
    /// Two fixed points merge and annihilate.
    Fold,
    /// The largest point runs off to infinity (the `g = 0` line).
    Escape,
    /// A lone focus changes stability.
    Hopf,
    /// The stable point switches between focus and node.
    NodeFocus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Coincidence {
    /// Conventional name: `g0`, `gc`, `gn` when `g` varies; `b1`, `b2`, `bn` when `b` varies.
    pub name: String,
    pub kind: CoincidenceKind,
    pub value: f64,
    /// Branch indices involved, e.g. `[2, 3]` for the saddle/node merger.
    pub branches: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BifurcationBranch {
    pub axis: ScanAxis,
    pub grid: Vec<f64>,
    /// Classified fixed points at each grid value (possibly empty).
    pub points: Vec<Vec<FixedPoint>>,
    pub coincidences: Vec<Coincidence>,
}

fn name(axis: &ScanAxis, kind: CoincidenceKind, branches: &[u8]) -> String {
    let vary_g = matches!(axis, ScanAxis::VaryG { .. });
    let s = match (kind, branches) {
        (CoincidenceKind::Fold, [1, 2]) => if vary_g { "g0" } else { "b1" },
        (CoincidenceKind::Fold, _) | (CoincidenceKind::Hopf, _) => if vary_g { "gc" } else { "b2" },
        (CoincidenceKind::NodeFocus, _) => if vary_g { "gn" } else { "bn" },
        (CoincidenceKind::Escape, _) => if vary_g { "g=0" } else { "b_escape" },
    };
    s.to_string()
}

fn bisect_predicate(mut lo: f64, mut hi: f64, pred: impl Fn(f64) -> bool) -> f64 {
    let at_lo = pred(lo);
    while (hi - lo).abs() > LOCATE_TOL {
        let mid = 0.5 * (lo + hi);
        if pred(mid) == at_lo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn lone_unstable(c: &FixedPointCensus) -> Option<bool> {
    match c.points.as_slice() {
        [p] => Some(p.eigenvalues[0].re > 0.0),
        _ => None,
    }
}

fn stable_is_focus(axis: &ScanAxis, v: f64) -> Option<bool> {
    let cen = nontrivial_fixed_points(axis.params(v)).ok()?;
    let p = cen.by_index(3)?;
    let ModelParams { b, g } = cen.params;
    // at b = 0 the discriminant vanishes identically
    if !p.kind.is_stable() || b == 0.0 {
        return None;
    }
    Some(b * p.location.z * (4.0 * g + b * p.location.z) < 0.0)
}

fn locate_count_change(axis: &ScanAxis, lo: f64, hi: f64) -> Result<Coincidence> {
    let count = |v: f64| phi_roots(axis.params(v)).len();
    let n_lo = count(lo);
    let v = bisect_predicate(lo, hi, |v| count(v) == n_lo);
    // inspect the side with more roots, just off the transition
    let (side, other) = if n_lo > count(hi) { (v - LOCATE_TOL, v + LOCATE_TOL) } else { (v + LOCATE_TOL, v - LOCATE_TOL) };
    let side = if (side - lo) * (side - hi) <= 0.0 { side } else { v };
    let _ = other;
    let cen = nontrivial_fixed_points(axis.params(side))?;
    let logs: Vec<f64> = cen.points.iter().map(|p| p.location.x.ln()).collect();
    let closest = logs
        .windows(2)
        .enumerate()
        .map(|(i, w)| (i, (w[0] - w[1]).abs()))
        .min_by(|a, b| a.1.total_cmp(&b.1));
    let (kind, branches) = match closest {
        Some((i, gap)) if gap < 0.05 => {
            let pair = vec![cen.points[i].branch_index, cen.points[i + 1].branch_index];
            (CoincidenceKind::Fold, pair)
        }
        _ => (CoincidenceKind::Escape, cen.points.first().map(|p| vec![p.branch_index]).unwrap_or_default()),
    };
    Ok(Coincidence { name: name(axis, kind, &branches), kind, value: v, branches })
}

/// Classified fixed points along a one-parameter path, with merge, Hopf and
/// node/focus points located by bisection to `1e-6`.
///
/// A grid interval holding more than one transition reports only one of them.
pub fn bifurcation_scan(axis: ScanAxis, grid: &[f64]) -> Result<BifurcationBranch> {
    if grid.len() < 2 {
        return Err(Error::Domain("scan grid needs at least two points".into()));
    }
    let increasing = grid[1] > grid[0];
    if !grid.windows(2).all(|w| (w[1] > w[0]) == increasing && w[1] != w[0]) {
        return Err(Error::Domain("scan grid must be strictly monotone".into()));
    }
    let censuses: Vec<FixedPointCensus> =
        grid.iter().map(|&v| nontrivial_fixed_points(axis.params(v))).collect::<Result<_>>()?;

    let mut coincidences = Vec::new();
    for (i, w) in censuses.windows(2).enumerate() {
        let (lo, hi) = (grid[i], grid[i + 1]);
        if w[0].len() != w[1].len() {
            coincidences.push(locate_count_change(&axis, lo, hi)?);
            continue;
        }
        if let (Some(a), Some(b)) = (lone_unstable(&w[0]), lone_unstable(&w[1])) {
            if a != b {
                let v = bisect_predicate(lo, hi, |v| {
                    nontrivial_fixed_points(axis.params(v))
                        .ok()
                        .and_then(|c| lone_unstable(&c))
                        .unwrap_or(a)
                });
                let branches = vec![1, 3];
                coincidences.push(Coincidence {
                    name: name(&axis, CoincidenceKind::Hopf, &branches),
                    kind: CoincidenceKind::Hopf,
                    value: v,
                    branches,
                });
            }
        }
        if let (Some(a), Some(b)) = (stable_is_focus(&axis, lo), stable_is_focus(&axis, hi)) {
            if a != b {
                let v = bisect_predicate(lo, hi, |v| stable_is_focus(&axis, v).unwrap_or(a));
                let branches = vec![3];
                coincidences.push(Coincidence {
                    name: name(&axis, CoincidenceKind::NodeFocus, &branches),
                    kind: CoincidenceKind::NodeFocus,
                    value: v,
                    branches,
                });
            }
        }
    }
    Ok(BifurcationBranch {
        axis,
        grid: grid.to_vec(),
        points: censuses.into_iter().map(|c| c.points).collect(),
        coincidences,
    })
}

impl BifurcationBranch {
    pub fn find(&self, name: &str) -> Option<&Coincidence> {
        self.coincidences.iter().find(|c| c.name == name)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
        (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
    }

    #[test]
    fn vary_b_at_fixed_g() {
        let br = bifurcation_scan(ScanAxis::VaryB { g: -0.03 }, &linspace(0.0, 0.6, 121)).unwrap();
        let b1 = br.find("b1").expect("b1");
        let b2 = br.find("b2").expect("b2");
        let bn = br.find("bn").expect("bn");
        assert!((b1.value - 0.2718).abs() < 1e-3, "{b1:?}");
        assert!((b2.value - 0.400_691).abs() < 1e-4, "{b2:?}");
        assert!((bn.value - 0.1242).abs() < 1e-3, "{bn:?}");
        assert_eq!(b1.branches, [1, 2]);
        assert_eq!(b2.branches, [2, 3]);
        assert_eq!(b2.kind, CoincidenceKind::Fold);
    }

    #[test]
    fn vary_b_through_hopf() {
        let br = bifurcation_scan(ScanAxis::VaryB { g: -0.2 }, &linspace(0.5, 2.0, 61)).unwrap();
        let b2 = br.find("b2").expect("b2");
        assert_eq!(b2.kind, CoincidenceKind::Hopf);
        assert!((b2.value - 1.1864).abs() < 1e-3, "{b2:?}");
    }

    #[test]
    fn vary_g_at_small_b() {
        let br = bifurcation_scan(ScanAxis::VaryG { b: 0.2 }, &linspace(-0.1, 0.35, 91)).unwrap();
        let g0 = br.find("g0").expect("g0");
        let gc = br.find("gc").expect("gc");
        let gn = br.find("gn").expect("gn");
        let escape = br.find("g=0").expect("escape");
        assert!((g0.value + 0.0194).abs() < 1e-3);
        assert!((gc.value - 0.276).abs() < 2e-3);
        assert!((gn.value + 0.0471).abs() < 5e-4);
        assert!(escape.value.abs() < 1e-3);
        // no fixed points past gc
        assert!(br.points.last().unwrap().is_empty());
    }

    #[test]
    fn unstable_branch_runs_off_as_g_approaches_zero() {
        let grid = [-0.01, -0.003, -0.001, -0.0003];
        let br = bifurcation_scan(ScanAxis::VaryG { b: 0.2 }, &grid).unwrap();
        let xs: Vec<f64> = br.points.iter().map(|p| p[0].location.x).collect();
        let zs: Vec<f64> = br.points.iter().map(|p| p[0].location.z).collect();
        assert!(xs.windows(2).all(|w| w[1] > 2.0 * w[0]), "{xs:?}");
        assert!(zs.windows(2).all(|w| w[1] < w[0]), "{zs:?}");
        assert!(br.points.iter().all(|p| p[0].branch_index == 1));
    }

    #[test]
    fn branches_are_continuous() {
        let grid = linspace(0.05, 0.6, 551);
        let br = bifurcation_scan(ScanAxis::VaryB { g: -0.03 }, &grid).unwrap();
        // square-root behaviour makes the step right next to a fold large
        let near_fold = |v: f64| br.coincidences.iter().any(|c| (c.value - v).abs() < 2e-2);
        for idx in [2u8, 3] {
            for (k, w) in br.points.windows(2).enumerate() {
                let pick = |pts: &Vec<FixedPoint>| pts.iter().find(|p| p.branch_index == idx).map(|p| p.location.x);
                if let (Some(a), Some(b)) = (pick(&w[0]), pick(&w[1])) {
                    if !near_fold(grid[k]) {
                        assert!((a / b).ln().abs() < 0.02, "branch {idx} jumps {a} -> {b} at b={}", grid[k]);
                    }
                }
            }
        }
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(bifurcation_scan(ScanAxis::VaryB { g: -0.1 }, &[0.3]).is_err());
        assert!(bifurcation_scan(ScanAxis::VaryB { g: -0.1 }, &[0.3, 0.5, 0.4]).is_err());
    }
}

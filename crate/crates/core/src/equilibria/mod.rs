//! Fixed points, their stability, and the parameter-plane geometry built on them.
//!
//! Nontrivial equilibria satisfy `x = exp(b x z)`, `z = exp(g x)`. Eliminating
//! `z` leaves a scalar problem in `u = x`:
//!
//! ```text
//! phi(u) = ln u - b u exp(g u) = 0,   u > 0
//! ```
//!
//! which has at most three roots. Every critical line of the `(b, g)` plane is
//! a closed-form or one-dimensional condition on `phi` and its derivatives.

mod critical;
mod region;
mod scan;

pub use critical::{
    critical_b0_of_g, critical_bc, critical_g0, critical_gc, cusp_point, fold_curve_point,
    hopf_line, node_focus_boundary, node_focus_boundary_b, sample_critical_lines,
    CriticalLines, Cusp, BOGDANOV_TAKENS,
};
pub use region::{region_label, Boundary, RegionLabel, RegionReport, RegionVerdict};
pub use scan::{bifurcation_scan, BifurcationBranch, Coincidence, CoincidenceKind, ScanAxis};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{clamped_exp, jacobian, ModelParams, State};

/// Below this magnitude a real part or discriminant counts as zero.
pub const DEGENERACY_TOL: f64 = 1e-8;

/// Roots closer than this (in `u`) are flagged as near-degenerate.
pub const NEAR_DEGENERATE_GAP: f64 = 1e-6;

pub(crate) const SCAN_POINTS: usize = 4096;
pub(crate) const SCAN_LO: f64 = 1e-3;
pub(crate) const SCAN_HI: f64 = 1e9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum StabilityKind {
    StableFocus,
    StableNode,
    UnstableFocus,
    UnstableNode,
    Saddle,
    Degenerate,
}

impl StabilityKind {
    pub fn is_stable(self) -> bool {
        matches!(self, StabilityKind::StableFocus | StabilityKind::StableNode)
    }

    pub fn is_focus(self) -> bool {
        matches!(self, StabilityKind::StableFocus | StabilityKind::UnstableFocus)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            StabilityKind::StableFocus => "stable_focus",
            StabilityKind::StableNode => "stable_node",
            StabilityKind::UnstableFocus => "unstable_focus",
            StabilityKind::UnstableNode => "unstable_node",
            StabilityKind::Saddle => "saddle",
            StabilityKind::Degenerate => "degenerate",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FixedPoint {
    pub location: State,
    pub eigenvalues: [Complex64; 2],
    pub kind: StabilityKind,
    /// 1..=3 for nontrivial points (descending `x`), 0 for trivial ones.
    pub branch_index: u8,
}

/// Result of the nontrivial root search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixedPointCensus {
    pub params: ModelParams,
    /// Ordered by descending `x`.
    pub points: Vec<FixedPoint>,
    /// Two roots closer than [`NEAR_DEGENERATE_GAP`]; the count is unreliable.
    pub near_degenerate: bool,
}

impl FixedPointCensus {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn by_index(&self, idx: u8) -> Option<&FixedPoint> {
        self.points.iter().find(|p| p.branch_index == idx)
    }
}

pub(crate) fn phi(params: ModelParams, u: f64) -> f64 {
    let e = clamped_exp(params.g * u);
    u.ln() - params.b * u * e
}

fn phi_prime(params: ModelParams, u: f64) -> f64 {
    let e = clamped_exp(params.g * u);
    1.0 / u - params.b * e * (1.0 + params.g * u)
}

/// The three trivial equilibria `{0,0}`, `{1,0}`, `{0,1}`.
///
/// Their eigenvalues do not depend on `(b, g)`: the Jacobian is triangular at
/// each of them with diagonal `(1,1)`, `(-1,1)` and `(1,-1)` respectively.
pub fn trivial_fixed_points() -> Vec<FixedPoint> {
    let params = ModelParams::default();
    [(0.0, 0.0), (1.0, 0.0), (0.0, 1.0)]
        .into_iter()
        .map(|(x, z)| {
            let location = State { x, z };
            let eigenvalues = jacobian(params, location)
                .expect("trivial points are finite")
                .eigenvalues();
            FixedPoint { location, eigenvalues, kind: classify(eigenvalues), branch_index: 0 }
        })
        .collect()
}

/// Standard planar classification of an eigenvalue pair.
///
/// A vanishing real part gives `Degenerate`. A vanishing discriminant with
/// nonzero real parts (a repeated real eigenvalue, e.g. the origin) is
/// resolved to the node side of the node/focus boundary.
pub fn classify(eigenvalues: [Complex64; 2]) -> StabilityKind {
    let [l1, l2] = eigenvalues;
    if l1.re.abs() < DEGENERACY_TOL || l2.re.abs() < DEGENERACY_TOL {
        return StabilityKind::Degenerate;
    }
    let d = l1 - l2;
    let repeated = (d * d).norm() < DEGENERACY_TOL;
    if !repeated && (l1.im != 0.0 || l2.im != 0.0) {
        if l1.re < 0.0 {
            StabilityKind::StableFocus
        } else {
            StabilityKind::UnstableFocus
        }
    } else if l1.re < 0.0 && l2.re < 0.0 {
        StabilityKind::StableNode
    } else if l1.re > 0.0 && l2.re > 0.0 {
        StabilityKind::UnstableNode
    } else {
        StabilityKind::Saddle
    }
}

/// Closed-form characteristic exponents at a nontrivial fixed point:
///
/// `lambda = (b x z - 2 +/- x sqrt(b z (4 g + b z))) / 2`
///
/// ordered by descending real part, then descending imaginary part.
pub fn characteristic_exponents(params: ModelParams, loc: State) -> Result<[Complex64; 2]> {
    if !loc.is_finite() || loc.x <= 0.0 || loc.z <= 0.0 {
        return Err(Error::NotAFixedPoint { x: loc.x, z: loc.z, residual: f64::NAN });
    }
    let ModelParams { b, g } = params;
    let State { x, z } = loc;
    // log form keeps the check scale-free for large x
    let residual = (x.ln() - b * x * z).abs().max((z.ln() - g * x).abs());
    if !(residual <= 1e-8) {
        return Err(Error::NotAFixedPoint { x, z, residual });
    }
    let half_tr = 0.5 * (b * x * z - 2.0);
    let arg = b * z * (4.0 * g + b * z);
    let root = Complex64::new(arg, 0.0).sqrt() * (0.5 * x);
    let l1 = Complex64::new(half_tr, 0.0) + root;
    let l2 = Complex64::new(half_tr, 0.0) - root;
    Ok(if (l1.re, l1.im) >= (l2.re, l2.im) { [l1, l2] } else { [l2, l1] })
}

fn bisect_sign(mut lo: f64, mut hi: f64, f: impl Fn(f64) -> f64) -> f64 {
    let mut f_lo = f(lo);
    for _ in 0..200 {
        if (hi - lo) <= 1e-12 * hi {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let f_mid = f(mid);
        if f_mid == 0.0 {
            return mid;
        }
        if (f_mid > 0.0) == (f_lo > 0.0) {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn polish(params: ModelParams, u: f64) -> f64 {
    let d = phi_prime(params, u);
    if d != 0.0 && d.is_finite() {
        let cand = u - phi(params, u) / d;
        if cand > 0.0 && phi(params, cand).abs() < phi(params, u).abs() {
            return cand;
        }
    }
    u
}

/// Roots of `phi` on the logarithmic scan window, ascending.
///
/// Cells are bracketed by sign changes of `phi` on the grid. Cells where
/// `phi'` changes sign are first split at the refined extremum so that a
/// nearly tangent pair of roots inside one cell is not lost.
pub(crate) fn phi_roots(params: ModelParams) -> Vec<f64> {
    let ratio = (SCAN_HI / SCAN_LO).ln() / (SCAN_POINTS - 1) as f64;
    let grid = |i: usize| SCAN_LO * (ratio * i as f64).exp();
    // u phi'(u) has the sign of phi' and stays bounded near u = 0
    let slope = |u: f64| 1.0 - params.b * u * clamped_exp(params.g * u) * (1.0 + params.g * u);

    let mut nodes = Vec::with_capacity(SCAN_POINTS + 4);
    let mut u_prev = grid(0);
    let mut s_prev = slope(u_prev);
    nodes.push(u_prev);
    for i in 1..SCAN_POINTS {
        let u = grid(i);
        let s = slope(u);
        if s != 0.0 && s_prev != 0.0 && (s > 0.0) != (s_prev > 0.0) {
            nodes.push(bisect_sign(u_prev, u, slope));
        }
        nodes.push(u);
        u_prev = u;
        s_prev = s;
    }

    let mut roots: Vec<f64> = Vec::new();
    let mut f_prev = phi(params, nodes[0]);
    if f_prev == 0.0 {
        roots.push(nodes[0]);
    }
    for w in nodes.windows(2) {
        let (a, b) = (w[0], w[1]);
        let f = phi(params, b);
        if f == 0.0 {
            roots.push(b);
        } else if f_prev != 0.0 && (f > 0.0) != (f_prev > 0.0) {
            roots.push(polish(params, bisect_sign(a, b, |u| phi(params, u))));
        }
        f_prev = f;
    }
    roots
}

/// Nontrivial fixed points for `params`, classified and indexed.
pub fn nontrivial_fixed_points(params: ModelParams) -> Result<FixedPointCensus> {
    let params = ModelParams::new(params.b, params.g)?;
    let mut roots = phi_roots(params);
    roots.reverse();
    let near_degenerate = roots.windows(2).any(|w| (w[0] - w[1]).abs() < NEAR_DEGENERATE_GAP);

    let mut points = Vec::with_capacity(roots.len());
    for &u in &roots {
        let location = State { x: u, z: clamped_exp(params.g * u) };
        let eigenvalues = characteristic_exponents(params, location)?;
        points.push(FixedPoint { location, eigenvalues, kind: classify(eigenvalues), branch_index: 0 });
    }
    assign_branch_indices(&mut points);
    Ok(FixedPointCensus { params, points, near_degenerate })
}

fn assign_branch_indices(points: &mut [FixedPoint]) {
    match points.len() {
        0 => {}
        1 => {
            // a lone point continues the stable branch 3 (region A) or the
            // unstable focus branch 1 (region C)
            points[0].branch_index = if points[0].kind.is_stable() { 3 } else { 1 };
        }
        2 => {
            points[0].branch_index = 2;
            points[1].branch_index = 3;
        }
        _ => {
            for (i, p) in points.iter_mut().enumerate() {
                p.branch_index = (i + 1).min(3) as u8;
            }
        }
    }
}

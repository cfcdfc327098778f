//! Critical lines of the `(b, g)` plane.
//!
//! The fold (saddle-node) curve is where `phi` has a double root. Solving
//! `phi(u) = phi'(u) = 0` gives, with `L = ln u`,
//!
//! ```text
//! g(L) = (1/L - 1) e^{-L}
//! b(L) = L e^{1 - 1/L - L}
//! ```
//!
//! `b(L)` peaks at the cusp `L = (1 + sqrt 5) / 2`. The branch `L` above the
//! cusp is `g0(b)`; the branch below it is the fold part of `gc(b)`. For
//! `b >= b0` the critical line is the Hopf line `b x z = 2`, `x = e^2`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const GOLDEN: f64 = 1.618_033_988_749_895;
const E2: f64 = std::f64::consts::E * std::f64::consts::E;

/// `(b, g)` where the Hopf line meets the `g0` fold branch (trace and
/// determinant vanish together at `x = e^2`).
pub const BOGDANOV_TAKENS: (f64, f64) = (0.446_260_320_296_860_4, -0.067_667_641_618_306_35);

fn fold_b(l: f64) -> f64 {
    l * (1.0 - 1.0 / l - l).exp()
}

fn fold_g(l: f64) -> f64 {
    (1.0 / l - 1.0) * (-l).exp()
}

/// `(b, g)` on the fold curve parametrized by the double root `u`.
pub fn fold_curve_point(u: f64) -> Result<(f64, f64)> {
    if !u.is_finite() || u <= 0.0 || u == 1.0 {
        return Err(Error::Domain(format!("fold parameter u must be positive and != 1, got {u}")));
    }
    let l = u.ln();
    if l == 0.0 {
        return Err(Error::Domain(format!("ln u vanishes at u = {u}")));
    }
    Ok((fold_b(l), fold_g(l)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cusp {
    pub b0: f64,
    pub g: f64,
    pub u: f64,
}

/// Meeting point of the two fold branches (`phi = phi' = phi'' = 0`).
///
/// With `s = g u` the three conditions reduce to `s^2 + 3 s + 1 = 0` and
/// `ln u = 1 / (1 + s)`, so `ln u` is the golden ratio.
pub fn cusp_point() -> Cusp {
    let s = (5f64.sqrt() - 3.0) / 2.0;
    let l = 1.0 / (1.0 + s);
    let u = l.exp();
    Cusp { b0: fold_b(l), g: s / u, u }
}

/// Hopf line `g = (ln 2 - 2 - ln b) / e^2`.
pub fn hopf_line(b: f64) -> f64 {
    (2f64.ln() - 2.0 - b.ln()) / E2
}

fn bisect(mut lo: f64, mut hi: f64, tol: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
    let mut f_lo = f(lo);
    for _ in 0..300 {
        if hi - lo <= tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if (fm > 0.0) == (f_lo > 0.0) {
            lo = mid;
            f_lo = fm;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn require_positive(b: f64) -> Result<()> {
    if !b.is_finite() || b <= 0.0 {
        return Err(Error::Domain(format!("b must be positive, got {b}")));
    }
    Ok(())
}

/// Upper fold branch `g0(b)`, defined for `0 < b < b0`.
pub fn critical_g0(b: f64) -> Result<f64> {
    require_positive(b)?;
    let cusp = cusp_point();
    if b >= cusp.b0 {
        return Err(Error::Domain(format!("g0(b) is defined only for b < b0 = {}", cusp.b0)));
    }
    let mut hi = 2.0 * GOLDEN;
    while fold_b(hi) > b {
        hi *= 2.0;
        if hi > 1e4 {
            return Err(Error::Domain(format!("b = {b} too small for the g0 branch")));
        }
    }
    let l = bisect(GOLDEN, hi, 1e-15, |l| fold_b(l) - b);
    Ok(fold_g(l))
}

/// Critical line `gc(b)`: the lower fold branch for `b < b0` and the Hopf
/// line for `b >= b0`.
pub fn critical_gc(b: f64) -> Result<f64> {
    require_positive(b)?;
    let cusp = cusp_point();
    if b >= cusp.b0 {
        return Ok(hopf_line(b));
    }
    // b(L) -> 0 as L -> 0+, so the lower end of the bracket is tiny but positive
    let lo = 1e-3;
    if fold_b(lo) >= b {
        return Err(Error::Domain(format!("b = {b} too small for the gc branch")));
    }
    let l = bisect(lo, GOLDEN, 1e-15, |l| fold_b(l) - b);
    Ok(fold_g(l))
}

/// `bc(g) = gc^{-1}(g)`.
pub fn critical_bc(g: f64) -> Result<f64> {
    if !g.is_finite() {
        return Err(Error::NonFinite("g"));
    }
    let cusp = cusp_point();
    if g >= cusp.g {
        // fold piece: g(L) falls monotonically from +inf to g_cusp on (0, golden]
        let lo = 1e-3;
        if g > fold_g(lo) {
            return Err(Error::Domain(format!("g = {g} is outside the range of gc")));
        }
        let l = bisect(lo, GOLDEN, 1e-15, |l| fold_g(l) - g);
        return Ok(fold_b(l));
    }
    let mut hi = 2.0 * cusp.b0;
    while hopf_line(hi) > g {
        hi *= 2.0;
        if hi > 1e300 {
            return Err(Error::Domain(format!("no bc for g = {g}")));
        }
    }
    Ok(bisect(cusp.b0, hi, 1e-12, |b| hopf_line(b) - g))
}

/// `b1(g) = g0^{-1}(g)`, defined for `g_cusp < g < 0`.
pub fn critical_b0_of_g(g: f64) -> Result<f64> {
    let cusp = cusp_point();
    if !(g > cusp.g && g < 0.0) {
        return Err(Error::Domain(format!("g0 inverse needs {} < g < 0, got {g}", cusp.g)));
    }
    let mut hi = 2.0 * GOLDEN;
    while fold_g(hi) < g {
        hi *= 2.0;
        if hi > 1e4 {
            return Err(Error::Domain(format!("g = {g} too close to 0 for the g0 branch")));
        }
    }
    let l = bisect(GOLDEN, hi, 1e-15, |l| fold_g(l) - g);
    Ok(fold_b(l))
}

// Along the discriminant-zero locus b z = -4 g, with s = g x:
//   b(s) = -4 s e^{3 s},  g(s) = s e^{4 s}
// The stable branch x3 uses s in (-1/3, 0).
fn nf_b(s: f64) -> f64 {
    -4.0 * s * (3.0 * s).exp()
}

fn nf_g(s: f64) -> f64 {
    s * (4.0 * s).exp()
}

/// Node/focus boundary `gn(b)` of the stable branch.
pub fn node_focus_boundary(b: f64) -> Result<f64> {
    require_positive(b)?;
    let b_max = nf_b(-1.0 / 3.0);
    if b >= b_max {
        return Err(Error::Domain(format!("no node/focus boundary for b >= {b_max}")));
    }
    let s = bisect(-1.0 / 3.0, 0.0, 1e-16, |s| nf_b(s) - b);
    Ok(nf_g(s))
}

/// Inverse form `bn(g)` of the node/focus boundary at fixed `g`.
pub fn node_focus_boundary_b(g: f64) -> Result<f64> {
    let g_min = nf_g(-0.25);
    if !(g < 0.0 && g > g_min) {
        return Err(Error::Domain(format!("no node/focus boundary for g = {g}")));
    }
    let s = bisect(-0.25, 0.0, 1e-16, |s| nf_g(s) - g);
    Ok(nf_b(s))
}

/// Sampled critical lines for plotting and export.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalLines {
    /// `(u, b, g)` along the fold curve, both branches.
    pub fold_samples: Vec<(f64, f64, f64)>,
    pub hopf_samples: Vec<(f64, f64)>,
    pub cusp: Cusp,
    pub node_focus_samples: Vec<(f64, f64)>,
    pub bogdanov_takens: (f64, f64),
}

/// Samples each line with `n` points; the Hopf line runs over `[b0, b_max]`.
pub fn sample_critical_lines(n: usize, b_max: f64) -> CriticalLines {
    let n = n.max(2);
    let cusp = cusp_point();
    let mut fold_samples = Vec::with_capacity(2 * n);
    // lower branch: L in (0.2, golden), upper: L in (golden, 8)
    for i in 0..n {
        let l = 0.2 + (GOLDEN - 0.2) * i as f64 / (n - 1) as f64;
        fold_samples.push((l.exp(), fold_b(l), fold_g(l)));
    }
    for i in 1..n {
        let l = GOLDEN + (8.0 - GOLDEN) * i as f64 / (n - 1) as f64;
        fold_samples.push((l.exp(), fold_b(l), fold_g(l)));
    }
    let hopf_samples = (0..n)
        .map(|i| {
            let b = cusp.b0 + (b_max - cusp.b0).max(0.0) * i as f64 / (n - 1) as f64;
            (b, hopf_line(b))
        })
        .collect();
    let node_focus_samples = (1..n)
        .map(|i| {
            let s = -(1.0 / 3.0) * i as f64 / (n - 1) as f64;
            (nf_b(s), nf_g(s))
        })
        .collect();
    CriticalLines { fold_samples, hopf_samples, cusp, node_focus_samples, bogdanov_takens: BOGDANOV_TAKENS }
}

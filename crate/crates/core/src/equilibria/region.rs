use serde::{Deserialize, Serialize};

use super::critical::{critical_g0, critical_gc, cusp_point};
use super::{nontrivial_fixed_points, StabilityKind};
use crate::error::{Error, Result};
use crate::model::ModelParams;

/// Offset used to probe both sides of a critical line.
const LINE_PROBE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum RegionLabel {
    /// Single stable focus (or node near `g0`).
    A,
    /// Unstable focus, saddle and stable node.
    B,
    /// Single unstable focus surrounded by a limit cycle.
    C,
    /// Saddle and stable node.
    D,
    /// No nontrivial fixed points.
    E,
}

impl RegionLabel {
    pub fn as_char(self) -> char {
        match self {
            RegionLabel::A => 'A',
            RegionLabel::B => 'B',
            RegionLabel::C => 'C',
            RegionLabel::D => 'D',
            RegionLabel::E => 'E',
        }
    }
}

impl std::fmt::Display for RegionLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.as_char())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Boundary {
    /// Distinct labels found on either side of the line, sorted.
    pub nearest: Vec<RegionLabel>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum RegionVerdict {
    Interior(RegionLabel),
    Boundary(Boundary),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionReport {
    pub params: ModelParams,
    pub verdict: RegionVerdict,
    /// Label implied by the number and kinds of fixed points.
    pub census: Option<RegionLabel>,
    /// Label implied by the critical-line inequalities.
    pub inequalities: RegionLabel,
    pub agree: bool,
}

impl RegionReport {
    pub fn label(&self) -> Option<RegionLabel> {
        match &self.verdict {
            RegionVerdict::Interior(l) => Some(*l),
            RegionVerdict::Boundary(_) => None,
        }
    }
}

fn by_inequalities(b: f64, g: f64) -> RegionLabel {
    let inv_e = 1.0 / std::f64::consts::E;
    let b0 = cusp_point().b0;
    let gc = critical_gc(b).expect("b > 0");
    if b < b0 {
        let g0 = critical_g0(b).expect("0 < b < b0");
        if g < g0 {
            return RegionLabel::A;
        }
        if b < inv_e {
            return if g < 0.0 {
                RegionLabel::B
            } else if g < gc {
                RegionLabel::D
            } else {
                RegionLabel::E
            };
        }
        return if g < gc {
            RegionLabel::B
        } else if g < 0.0 {
            RegionLabel::C
        } else {
            RegionLabel::E
        };
    }
    if g < gc {
        RegionLabel::A
    } else if g < 0.0 {
        RegionLabel::C
    } else {
        RegionLabel::E
    }
}

fn by_census(params: ModelParams) -> Result<Option<RegionLabel>> {
    let cen = nontrivial_fixed_points(params)?;
    if cen.near_degenerate {
        return Ok(None);
    }
    Ok(match cen.points.len() {
        0 => Some(RegionLabel::E),
        1 => match cen.points[0].kind {
            StabilityKind::Degenerate => None,
            k if k.is_stable() => Some(RegionLabel::A),
            _ => Some(RegionLabel::C),
        },
        2 => Some(RegionLabel::D),
        _ => Some(RegionLabel::B),
    })
}

/// Region of the `(b, g)` plane, from the fixed-point census cross-checked
/// against the critical-line inequalities.
///
/// Inputs within `1e-6` of a critical line get a boundary verdict listing
/// the regions on either side.
pub fn region_label(params: ModelParams) -> Result<RegionReport> {
    let ModelParams { b, g } = ModelParams::new(params.b, params.g)?;
    if b <= 0.0 {
        return Err(Error::Domain(format!("region labels need b > 0, got {b}")));
    }
    let inequalities = by_inequalities(b, g);
    let mut nearby = vec![inequalities];
    for (db, dg) in [(LINE_PROBE, 0.0), (-LINE_PROBE, 0.0), (0.0, LINE_PROBE), (0.0, -LINE_PROBE)] {
        if b + db > 0.0 {
            nearby.push(by_inequalities(b + db, g + dg));
        }
    }
    nearby.sort();
    nearby.dedup();

    let census = by_census(params)?;
    let verdict = if nearby.len() > 1 {
        RegionVerdict::Boundary(Boundary { nearest: nearby })
    } else {
        RegionVerdict::Interior(census.unwrap_or(inequalities))
    };
    let agree = census.is_none_or(|c| c == inequalities);
    Ok(RegionReport { params: ModelParams { b, g }, verdict, census, inequalities, agree })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equilibria::hopf_line;
    use proptest::prelude::*;

    fn label(b: f64, g: f64) -> Option<RegionLabel> {
        region_label(ModelParams { b, g }).unwrap().label()
    }

    #[test]
    fn examples() {
        assert_eq!(label(1.0, -0.2), Some(RegionLabel::A));
        assert_eq!(label(1.0, -0.05), Some(RegionLabel::C));
        assert_eq!(label(0.2, 0.1), Some(RegionLabel::D));
        assert_eq!(label(0.2, -0.01), Some(RegionLabel::B));
        assert_eq!(label(0.2, 0.5), Some(RegionLabel::E));
        assert_eq!(label(1.0, 0.1), Some(RegionLabel::E));
        assert_eq!(label(0.4006, -0.03), Some(RegionLabel::B));
    }

    #[test]
    fn on_line_inputs_are_flagged() {
        let gc = critical_gc(1.0).unwrap();
        let r = region_label(ModelParams { b: 1.0, g: gc }).unwrap();
        match r.verdict {
            RegionVerdict::Boundary(bd) => assert_eq!(bd.nearest, [RegionLabel::A, RegionLabel::C]),
            v => panic!("expected boundary, got {v:?}"),
        }
        let r = region_label(ModelParams { b: 0.2, g: 0.0 }).unwrap();
        assert!(matches!(r.verdict, RegionVerdict::Boundary(_)));
    }

    #[test]
    fn rejects_non_positive_b() {
        assert!(region_label(ModelParams { b: 0.0, g: -0.1 }).is_err());
    }

    // Just below b0 the Hopf line runs above the fold part of gc, so the lone
    // surviving point is still stable there although the inequalities say C.
    fn in_hopf_sliver(b: f64, g: f64) -> bool {
        b < cusp_point().b0 && g > critical_gc(b).unwrap() - 1e-6 && g < hopf_line(b) + 1e-6
    }

    #[test]
    fn hopf_sliver_below_cusp() {
        let r = region_label(ModelParams { b: 0.4675, g: -0.0743 }).unwrap();
        assert_eq!(r.verdict, RegionVerdict::Interior(RegionLabel::A));
        assert_eq!(r.inequalities, RegionLabel::C);
        assert!(!r.agree);
    }

    #[test]
    fn agreement_near_cusp_and_bogdanov_takens() {
        // the critical lines bunch up here, with gc switching from fold to Hopf at b0
        for i in 0..60 {
            for j in 0..60 {
                let b = 0.43 + 0.06 * i as f64 / 59.0;
                let g = -0.08 + 0.02 * j as f64 / 59.0;
                let r = region_label(ModelParams { b, g }).unwrap();
                if in_hopf_sliver(b, g) {
                    assert_eq!((r.census, r.inequalities), (Some(RegionLabel::A), RegionLabel::C));
                } else if let RegionVerdict::Interior(_) = r.verdict {
                    assert!(r.agree, "b={b} g={g}: {r:?}");
                }
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(2000))]

        #[test]
        fn census_and_inequalities_agree_off_lines(b in 0.01..2.0f64, g in -0.5..0.5f64) {
            prop_assume!(!in_hopf_sliver(b, g));
            let r = region_label(ModelParams { b, g }).unwrap();
            if let RegionVerdict::Interior(_) = r.verdict {
                prop_assert!(r.agree, "b={b} g={g}: {:?}", r);
            }
        }
    }
}

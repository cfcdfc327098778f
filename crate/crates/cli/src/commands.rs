//! One function per subcommand, each turning a resolved [`Job`] into a [`Product`].

use anyhow::{bail, Context, Result};
use bubblecycle_core::bubbles::{
    asymptotic_cycle, bubble_stats, detect_bubbles, estimate_gamma, estimate_nu, fit_superexponential, window_summary,
};
use bubblecycle_core::equilibria::{
    bifurcation_scan, critical_g0, critical_gc, cusp_point, nontrivial_fixed_points, region_label, sample_critical_lines,
    trivial_fixed_points, FixedPoint, RegionVerdict,
};
use bubblecycle_core::integrate::{integrate, integrate_with_expansion, Status};
use bubblecycle_core::ModelParams;
use rayon::prelude::*;
use serde_json::json;

use crate::config::{ExponentKind, Job, Pair, TABLE1_G};
use crate::output::{Cell, Product, Table};

pub fn run(job: &Job) -> Result<Product> {
    match job {
        Job::Simulate { params, integ, lambda } => {
            let traj = if *lambda { integrate_with_expansion(*params, integ) } else { integrate(*params, integ) }?;
            let mut t = Table::new(if *lambda { &["t", "x", "z", "lambda"] } else { &["t", "x", "z"] });
            for (i, (&time, s)) in traj.times.iter().zip(&traj.states).enumerate() {
                let mut row = vec![Cell::F(time), Cell::F(s.x), Cell::F(s.z)];
                if let Some(l) = &traj.lambda {
                    row.push(Cell::F(l[i]));
                }
                t.push(row);
            }
            Product::new(t, "events")
                .with("params", params)?
                .with("status", traj.status)?
                .with("t_final", traj.t_final)?
                .with("steps", traj.steps)?
                .with("events", &traj.events)
        }
        Job::FixedPoints { params } => fixed_points(*params),
        Job::RegionMap { b, g, resolution } => region_map(*b, *g, *resolution),
        Job::Bifurcation { axis, grid } => {
            let branch = bifurcation_scan(*axis, grid)?;
            let mut t = Table::new(&["param", "x_star", "z_star", "kind", "branch"]);
            for (&v, pts) in branch.grid.iter().zip(&branch.points) {
                for p in pts {
                    t.push(vec![v.into(), p.location.x.into(), p.location.z.into(), p.kind.as_str().into(), (p.branch_index as usize).into()]);
                }
            }
            Product::new(t, "annotations")
                .with("axis", branch.axis)?
                .with("varying", branch.axis.varying_name())?
                .with("coincidences", &branch.coincidences)
        }
        Job::Bubbles { params, integ, policy, window } => {
            let traj = integrate(*params, integ)?;
            if traj.status == Status::Diverged {
                bail!(bubblecycle_core::Error::Integration {
                    t: traj.t_final,
                    reason: "trajectory diverged; no bubbles to analyse".into()
                });
            }
            let det = detect_bubbles(&traj, *policy)?;
            let mut t = Table::new(&["index", "t_peak", "amplitude", "width", "t_zmin", "lag", "period_prev"]);
            let mut prev: Option<f64> = None;
            for e in &det.events {
                t.push(vec![
                    e.index.into(),
                    e.t_peak.into(),
                    e.amplitude.into(),
                    e.width.into(),
                    e.t_zmin.into(),
                    e.lag.into(),
                    prev.map(|p| e.t_peak - p).into(),
                ]);
                prev = Some(e.t_peak);
            }
            let stats = bubble_stats(&det.events, (window.0, window.1));
            let cycle = asymptotic_cycle(&traj, &det.events);
            Product::new(t, "stats")
                .with("params", params)?
                .with("transient_cutoff", det.transient_cutoff)?
                .with("discarded", det.discarded)?
                .with("note", &det.note)?
                .with("stats", &stats)?
                .with("cycle", cycle.as_ref().ok())?
                .with("cycle_error", cycle.as_ref().err().map(ToString::to_string))
        }
        Job::Exponents { kind, anchor, grid, opts } => {
            let est = match kind {
                ExponentKind::Nu => estimate_nu(*anchor, grid, opts),
                ExponentKind::Gamma => estimate_gamma(*anchor, grid, opts),
            }
            .context("exponent regression failed")?;
            let mut t = Table::new(&["param", "observable", "excluded"]);
            for p in &est.points {
                t.push(vec![p.param.into(), p.observable.into(), p.excluded.clone().map_or(Cell::Empty, Cell::S)]);
            }
            Product::new(t, "estimate")
                .with("exponent", kind)?
                .with("anchor", anchor)?
                .with("value", est.value)?
                .with("stderr", est.stderr)?
                .with("n_points", est.n_points)?
                .with("reference", est.reference)
        }
        Job::Fit { params, integ, peak_index, window, space } => {
            let traj = integrate_with_expansion(*params, integ)?;
            let fit = fit_superexponential(&traj, *peak_index, *window, *space)?;
            let mut t = Table::new(&["t", "x", "x_app"]);
            let (t0, t1) = fit.window;
            const CURVE: usize = 200;
            for i in 0..CURVE {
                let time = t0 + (t1 - t0) * i as f64 / (CURVE - 1) as f64;
                t.push(vec![time.into(), traj.dense_state(time)?.x.into(), fit.eval(time).into()]);
            }
            Product::new(t, "fit").with("params", params)?.with("fit", &fit)
        }
        Job::Table1 { b, integ } => {
            let rows: Vec<_> = TABLE1_G
                .par_iter()
                .map(|&g| window_summary(ModelParams { b: *b, g }, integ.initial, integ.t_end, integ).map_err(|e| (g, e)))
                .collect();
            let mut t = Table::new(&["g", "N", "A", "w"]);
            let mut failures = Vec::new();
            for r in rows {
                match r {
                    Ok(s) => t.push(vec![s.g.into(), s.count.into(), s.amplitude.into(), s.width.into()]),
                    Err((g, e)) => {
                        t.push(vec![g.into(), Cell::Empty, Cell::Empty, Cell::Empty]);
                        failures.push(json!({"g": g, "error": e.to_string()}));
                    }
                }
            }
            Product::new(t, "meta").with("b", b)?.with("initial", integ.initial)?.with("t_end", integ.t_end)?.with("failures", failures)
        }
    }
}

fn point_json(p: &FixedPoint) -> serde_json::Value {
    json!({
        "branch": p.branch_index,
        "x": p.location.x,
        "z": p.location.z,
        "kind": p.kind.as_str(),
        "eigenvalues": p.eigenvalues.iter().map(|c| [c.re, c.im]).collect::<Vec<_>>(),
    })
}

fn fixed_points(params: ModelParams) -> Result<Product> {
    let trivial = trivial_fixed_points();
    let census = nontrivial_fixed_points(params)?;
    let mut t = Table::new(&["branch", "x", "z", "kind", "re1", "im1", "re2", "im2"]);
    for p in trivial.iter().chain(&census.points) {
        let [l1, l2] = p.eigenvalues;
        t.push(vec![
            (p.branch_index as usize).into(),
            p.location.x.into(),
            p.location.z.into(),
            p.kind.as_str().into(),
            l1.re.into(),
            l1.im.into(),
            l2.re.into(),
            l2.im.into(),
        ]);
    }
    // The region classification is defined for b > 0 only.
    let region = match region_label(params) {
        Ok(r) => {
            let (label, nearest) = match &r.verdict {
                RegionVerdict::Interior(l) => (Some(l.to_string()), Vec::new()),
                RegionVerdict::Boundary(bd) => (None, bd.nearest.iter().map(ToString::to_string).collect()),
            };
            json!({
                "label": label,
                "boundary": label.is_none(),
                "nearest": nearest,
                "census": r.census.map(|l| l.to_string()),
                "inequalities": r.inequalities.to_string(),
                "agree": r.agree,
            })
        }
        Err(e) => json!({ "label": null, "boundary": false, "error": e.to_string() }),
    };
    Product::new(t, "meta")
        .with("params", params)?
        .with("trivial", trivial.iter().map(point_json).collect::<Vec<_>>())?
        .with("nontrivial", census.points.iter().map(point_json).collect::<Vec<_>>())?
        .with("near_degenerate", census.near_degenerate)?
        .with("region", region)
}

fn region_map(b: Pair, g: Pair, n: usize) -> Result<Product> {
    let axis = |p: Pair, i: usize| if i + 1 == n { p.1 } else { p.0 + (p.1 - p.0) * i as f64 / (n - 1) as f64 };
    let cells: Vec<(f64, f64)> = (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).map(|(i, j)| (axis(b, i), axis(g, j))).collect();
    let labels: Vec<String> = cells
        .par_iter()
        .map(|&(bv, gv)| {
            let r = region_label(ModelParams { b: bv, g: gv })?;
            Ok(match r.verdict {
                RegionVerdict::Interior(l) => l.to_string(),
                RegionVerdict::Boundary(bd) => bd.nearest.iter().map(ToString::to_string).collect::<Vec<_>>().join("/"),
            })
        })
        .collect::<bubblecycle_core::Result<_>>()?;
    let mut counts = std::collections::BTreeMap::<String, usize>::new();
    let mut t = Table::new(&["b", "g", "region"]);
    for ((bv, gv), l) in cells.into_iter().zip(labels) {
        *counts.entry(l.clone()).or_default() += 1;
        t.push(vec![bv.into(), gv.into(), l.into()]);
    }

    const SAMPLES: usize = 200;
    let b0 = cusp_point().b0;
    let g0: Vec<(f64, f64)> = (1..SAMPLES)
        .map(|i| b0 * i as f64 / SAMPLES as f64)
        .filter_map(|bv| critical_g0(bv).ok().map(|gv| (bv, gv)))
        .collect();
    let gc: Vec<(f64, f64)> = (1..=SAMPLES)
        .map(|i| b.1 * i as f64 / SAMPLES as f64)
        .filter_map(|bv| critical_gc(bv).ok().map(|gv| (bv, gv)))
        .collect();
    let lines = sample_critical_lines(SAMPLES, b.1);
    Product::new(t, "lines")
        .with("counts", counts)?
        .with("g0", g0)?
        .with("gc", gc)?
        .with("node_focus", &lines.node_focus_samples)?
        .with("fold", &lines.fold_samples)?
        .with("hopf", &lines.hopf_samples)?
        .with("cusp", lines.cusp)?
        .with("bogdanov_takens", lines.bogdanov_takens)?
        .with("escape_point", (1.0 / std::f64::consts::E, 0.0))
}

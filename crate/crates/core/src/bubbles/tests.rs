use super::*;
use crate::integrate::integrate_with_expansion;
use approx::assert_abs_diff_eq;

fn run(b: f64, g: f64, x0: f64, z0: f64, t_end: f64) -> Trajectory {
    let cfg = IntegrationConfig { keep_dense: true, ..IntegrationConfig::new(State { x: x0, z: z0 }, t_end) };
    integrate(ModelParams { b, g }, &cfg).unwrap()
}

fn synthetic(t_peaks: &[f64]) -> Vec<BubbleEvent> {
    t_peaks
        .iter()
        .enumerate()
        .map(|(i, &t)| BubbleEvent {
            index: i,
            t_peak: t,
            amplitude: 10.0,
            width: Some(1.0),
            rise: Some(0.6),
            fall: Some(0.4),
            t_zmin: Some(t + 0.1),
            lag: Some(0.1),
            relative_lag: Some(0.1),
        })
        .collect()
}

#[test]
fn stats_on_equally_spaced_peaks() {
    let st = bubble_stats(&synthetic(&[10.0, 20.0, 30.0]), (0.0, 100.0));
    assert_eq!(st.periods, [10.0, 10.0]);
    assert_eq!(st.count, 3);
    assert_eq!(st.ratio, Some(0.1));
    let one = bubble_stats(&synthetic(&[10.0]), (0.0, 100.0));
    assert!(one.periods.is_empty() && one.ratio.is_none());
    assert_eq!(bubble_stats(&synthetic(&[10.0, 20.0, 30.0]), (15.0, 100.0)).count, 2);
}

#[test]
fn table_rows_at_moderate_g() {
    let det = detect_bubbles(&run(1.0, -0.1, 1.0, 0.1, 100.0), TransientPolicy::None).unwrap();
    assert_eq!(det.events.len(), 15);
    let first = det.events[0];
    assert!((first.amplitude - 31.0).abs() / 31.0 < 0.1, "{first:?}");
    assert!((first.width.unwrap() - 1.4).abs() < 0.1, "{first:?}");

    let det = detect_bubbles(&run(1.0, -1e-5, 1.0, 0.1, 100.0), TransientPolicy::None).unwrap();
    assert_eq!(det.events.len(), 4);
    let first = det.events[0];
    assert!((first.amplitude / 1.4e6 - 1.0).abs() < 0.1, "{first:?}");
    assert!((first.width.unwrap() - 0.7).abs() < 0.1);
}

#[test]
fn count_near_the_critical_line() {
    let det = detect_bubbles(&run(1.0, -0.1768, 1.0, 0.1, 100.0), TransientPolicy::None).unwrap();
    assert_eq!(bubble_stats(&det.events, (0.0, 100.0)).count, 19);
}

#[test]
fn lag_and_ratio_for_a_long_cycle() {
    let traj = run(0.4, -0.029, 1.0, 0.1, 1000.0);
    let det = detect_bubbles(&traj, TransientPolicy::Auto).unwrap();
    assert!(det.events.len() >= 3);
    for e in &det.events {
        let rl = e.relative_lag.unwrap();
        assert!(e.lag.unwrap() > 0.0);
        // "of order 10%"
        assert!(rl > 0.01 && rl < 1.0, "{e:?}");
    }
    let st = bubble_stats(&det.events, (0.0, 1000.0));
    assert!(st.ratio.unwrap() < 0.05, "{st:?}");
}

#[test]
fn rise_is_slower_than_crash() {
    for g in [-1e-3, -1e-5] {
        let det = detect_bubbles(&run(1.0, g, 1.0, 0.1, 100.0), TransientPolicy::None).unwrap();
        for e in &det.events {
            if let (Some(r), Some(f)) = (e.rise, e.fall) {
                assert!(r > f, "g={g}: {e:?}");
            }
        }
    }
}

#[test]
fn transient_policies() {
    let traj = run(1.0, -0.05, 3.0, 0.1, 200.0);
    let all = detect_bubbles(&traj, TransientPolicy::None).unwrap();
    let auto = detect_bubbles(&traj, TransientPolicy::Auto).unwrap();
    let cut = detect_bubbles(&traj, TransientPolicy::Cutoff(100.0)).unwrap();
    assert_eq!(all.discarded, 0);
    assert_eq!(auto.events.len() + auto.discarded, all.events.len());
    assert!(cut.events.iter().all(|e| e.t_peak >= 100.0));
    assert_eq!(cut.events[0].index, 0);

    // a run relaxing monotonically onto a node has no peaks at all
    let relaxing = run(0.2, 0.1, 1.0, 0.1, 200.0);
    let det = detect_bubbles(&relaxing, TransientPolicy::Auto).unwrap();
    assert!(det.events.is_empty());
    assert!(det.note.unwrap().starts_with("no limit cycle reached"));

    let sparse = integrate(ModelParams { b: 1.0, g: -0.1 }, &IntegrationConfig::default()).unwrap();
    assert!(matches!(detect_bubbles(&sparse, TransientPolicy::None), Err(Error::MissingData(_))));
}

#[test]
fn width_missing_when_oscillation_is_shallow() {
    // right above the critical line the cycle is small: x never halves
    let det = detect_bubbles(&run(1.0, -0.1768, 1.0, 0.1, 100.0), TransientPolicy::None).unwrap();
    assert!(det.events.iter().skip(5).all(|e| e.width.is_none()));
}

#[test]
fn attractor_does_not_depend_on_start() {
    let summaries: Vec<CycleSummary> = [(1.0, 0.1), (5.0, 0.5), (0.01, 50.0)]
        .iter()
        .map(|&(x0, z0)| {
            let traj = run(0.4007, -0.03, x0, z0, 12_000.0);
            let det = detect_bubbles(&traj, TransientPolicy::Auto).unwrap();
            asymptotic_cycle(&traj, &det.events).unwrap()
        })
        .collect();
    let a = summaries[0];
    for s in &summaries[1..] {
        assert!((s.period / a.period - 1.0).abs() < 0.01, "{s:?} vs {a:?}");
        assert!((s.amplitude / a.amplitude - 1.0).abs() < 0.01);
        assert!((s.plateau / a.plateau - 1.0).abs() < 0.01);
    }
}

#[test]
fn synthetic_fit_recovery() {
    let (c1, c2, t_l) = (2.0, 3.0, 50.0);
    let ts: Vec<f64> = (0..500).map(|i| 40.0 + 9.9 * i as f64 / 499.0).collect();
    let xs: Vec<f64> = ts.iter().map(|t| c1 * (t_l - t).powf(-BETA) * (c2 * (t_l - t).powf(-ALPHA)).exp()).collect();
    let (a, b, rms) = fit_superexponential_samples(&ts, &xs, t_l).unwrap();
    assert_abs_diff_eq!(a, 2.0, epsilon = 1e-8);
    assert_abs_diff_eq!(b, 3.0, epsilon = 1e-8);
    assert!(rms < 1e-10);
    let (a, b, rms) = fit_superexponential_price(&ts, &xs, t_l).unwrap();
    assert!((a - 2.0).abs() < 1e-6 && (b - 3.0).abs() < 1e-6 && rms < 1e-6, "{a} {b} {rms}");
    assert!(fit_superexponential_samples(&[49.0, 50.0, 51.0], &[1.0, 1.0, 1.0], t_l).is_err());
}

#[test]
fn fit_before_first_peak() {
    let cfg = IntegrationConfig { keep_dense: true, ..IntegrationConfig::new(State { x: 1.0, z: 0.1 }, 130.0) };
    let traj = integrate_with_expansion(ModelParams { b: 0.4, g: -0.029 }, &cfg).unwrap();
    let fit = fit_superexponential(&traj, 0, FitWindow::Auto, FitSpace::Log).unwrap();
    assert!(fit.t_lambda < fit.t_peak);
    assert!(fit.window.1 < fit.t_lambda);
    assert!(fit.rms_log_residual < 0.05, "{fit:?}");
    // the approximant tracks the samples to within the reported residual scale
    let t = 0.5 * (fit.window.0 + fit.window.1);
    let x = traj.dense_state(t).unwrap().x;
    assert!((fit.eval(t) / x).ln().abs() < 5.0 * fit.rms_log_residual.max(1e-3));

    let price = fit_superexponential(&traj, 0, FitWindow::Auto, FitSpace::Price).unwrap();
    assert_eq!(price.window, fit.window);
    assert!(price.rms_log_residual >= fit.rms_log_residual);

    let tail = fit_superexponential(&traj, 0, FitWindow::Fraction { fraction: 0.1 }, FitSpace::Log).unwrap();
    assert!(tail.window.1 < tail.t_lambda);
    let bad = FitWindow::Explicit { t0: 100.0, t1: fit.t_lambda + 0.1 };
    assert!(matches!(fit_superexponential(&traj, 0, bad, FitSpace::Log), Err(Error::Domain(_))));
    assert!(fit_superexponential(&traj, 5, FitWindow::Auto, FitSpace::Log).is_err());
    assert!(fit_superexponential(&traj, 0, FitWindow::Fraction { fraction: 1.5 }, FitSpace::Log).is_err());
}

#[test]
fn exponent_regressions_on_exact_power_laws() {
    let d = [1e-4, 1e-3, 1e-2];
    let (s, e) = power_law_slope(&d.map(f64::ln), &d.map(|v: f64| v.powf(-0.5).ln())).unwrap();
    assert_abs_diff_eq!(-s, 0.5, epsilon = 1e-10);
    assert!(e < 1e-10);
    let g = [1e-6, 1e-4, 1e-2];
    let (s, _) = power_law_slope(&g.map(f64::ln), &g.map(|v: f64| (1.0 / v).ln())).unwrap();
    assert_abs_diff_eq!(-s, 1.0, epsilon = 1e-10);
}

#[test]
fn period_grows_towards_the_critical_line() {
    let opts = ExponentOptions { peaks: 6, ..ExponentOptions::default() };
    let est = estimate_nu(-0.03, &[1e-2, 3e-3, 1e-3], &opts).unwrap();
    let ls: Vec<f64> = est.points.iter().map(|p| p.observable.unwrap()).collect();
    assert!(ls.windows(2).all(|w| w[1] > w[0]), "{ls:?}");
    assert_eq!(est.points.iter().map(|p| p.param).collect::<Vec<_>>(), [1e-2, 3e-3, 1e-3]);
    assert!((est.reference.unwrap() - 0.400_691).abs() < 1e-5);
}

#[test]
fn failing_grid_points_are_flagged() {
    let opts = ExponentOptions { peaks: 6, t_max: 400.0, ..ExponentOptions::default() };
    // at Delta = 1e-4 the period is far longer than the budget
    let est = estimate_nu(-0.03, &[1e-1, 5e-2, 2e-2, 1e-4], &opts).unwrap();
    assert_eq!(est.n_points, 3);
    assert!(est.points[3].excluded.is_some());
    assert!(estimate_nu(-0.03, &[1e-2, -1e-3], &opts).is_err());
    assert!(estimate_gamma(1.0, &[-1e-2, 1e-3], &opts).is_err());
}

#[test]
fn amplitude_grows_roughly_tenfold_per_decade() {
    let opts = ExponentOptions { peaks: 5, ..ExponentOptions::default() };
    let est = estimate_gamma(1.0, &[-1e-2, -1e-3], &opts);
    // two points are too few for a slope, but the ratio is still informative
    assert!(est.is_err());
    let est = estimate_gamma(1.0, &[-1e-2, -1e-3, -1e-4], &opts).unwrap();
    let a: Vec<f64> = est.points.iter().map(|p| p.observable.unwrap()).collect();
    for w in a.windows(2) {
        let r = w[1] / w[0];
        assert!(r > 8.0 && r < 20.0, "{a:?}");
    }
}

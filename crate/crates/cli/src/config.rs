//! Run configuration: one flat record shared by every subcommand, filled
//! from an optional JSON file and then from flags, and echoed back verbatim
//! (with defaults resolved) in every result envelope.

use std::fmt;
use std::path::PathBuf;

use bubblecycle_core::bubbles::{ExponentOptions, FitSpace, FitWindow, TransientPolicy};
use bubblecycle_core::equilibria::ScanAxis;
use bubblecycle_core::integrate::IntegrationConfig;
use bubblecycle_core::{ModelParams, State};
use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

/// A problem with the supplied configuration (exit code 2).
#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

fn bad<T>(msg: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError(msg.into()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Param {
    B,
    G,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ExponentKind {
    /// Period exponent as b approaches the critical value
    Nu,
    /// Amplitude exponent as g approaches zero
    Gamma,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Space {
    Log,
    Price,
}

/// Two numbers written `a,b` (or `a..b` for decade ranges).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pair(pub f64, pub f64);

fn parse_pair(s: &str) -> Result<Pair, String> {
    let (a, b) = s
        .split_once("..")
        .or_else(|| s.split_once(','))
        .ok_or_else(|| format!("expected two numbers as `a,b` or `a..b`, got `{s}`"))?;
    let num = |t: &str| t.trim().parse::<f64>().map_err(|e| format!("`{t}`: {e}"));
    Ok(Pair(num(a)?, num(b)?))
}

/// Every setting any subcommand understands. Unset fields are omitted from
/// the echoed config; resolution fills the defaults the subcommand uses.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize, Args)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[arg(skip)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub command: Option<String>,

    /// Fundamental log-price rate
    #[arg(long, allow_hyphen_values = true)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<f64>,
    /// Log-discount rate
    #[arg(long, allow_hyphen_values = true)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g: Option<f64>,
    /// Initial asset price
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x0: Option<f64>,
    /// Initial bond price
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub z0: Option<f64>,
    /// Integration horizon (per grid point for exponent sweeps)
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_end: Option<f64>,
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rtol: Option<f64>,
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub atol: Option<f64>,
    /// Output grid spacing for trajectories
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    /// Also integrate the expansion exponent and write a `lambda` column
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<bool>,

    /// Output file; standard output when omitted
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub format: Option<Format>,
    /// Worker threads for sweeps [env: BUBBLECYCLE_WORKERS]
    #[arg(long)]
    #[serde(default, skip_serializing)]
    pub workers: Option<usize>,
    /// JSON file with settings; flags take precedence
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,

    /// Time window `t0,t1`: statistics window for bubbles, fit window for fit
    #[arg(long, value_parser = parse_pair)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<Pair>,
    /// Discard bubbles peaking before this time (default: automatic)
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transient_cutoff: Option<f64>,

    #[arg(long, value_parser = parse_pair, allow_hyphen_values = true)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b_range: Option<Pair>,
    #[arg(long, value_parser = parse_pair, allow_hyphen_values = true)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g_range: Option<Pair>,
    /// Grid points per axis of the region map
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resolution: Option<usize>,

    /// Parameter swept by the bifurcation scan
    #[arg(long, value_enum)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vary: Option<Param>,
    #[arg(long, allow_hyphen_values = true)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub from: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub to: Option<f64>,
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steps: Option<usize>,

    #[arg(skip)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exponent: Option<ExponentKind>,
    /// Decade range of |g| for the amplitude exponent, e.g. `-2..-6`
    #[arg(long, value_parser = parse_pair, allow_hyphen_values = true)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g_decades: Option<Pair>,
    /// Decade range of b_c - b for the period exponent, e.g. `-4..-2`
    #[arg(long, value_parser = parse_pair, allow_hyphen_values = true)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta_decades: Option<Pair>,
    /// Log-spaced grid points in an exponent sweep
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<usize>,
    /// Peaks integrated per exponent grid point
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub peaks: Option<usize>,

    /// Zero-based index of the bubble to fit
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub peak_index: Option<usize>,
    /// Fit the final fraction of the cycle before the singularity
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window_fraction: Option<f64>,
    #[arg(long, value_enum)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fit_space: Option<Space>,
}

/// Amplitude table rows reproduced by `table1`.
pub const TABLE1_G: [f64; 11] = [-0.1768, -0.1, -1e-2, -1e-3, -1e-4, -1e-5, -1e-6, -1e-7, -1e-8, -1e-9, -1e-10];

/// A fully resolved unit of work.
#[derive(Debug, Clone)]
pub enum Job {
    Simulate { params: ModelParams, integ: IntegrationConfig, lambda: bool },
    FixedPoints { params: ModelParams },
    RegionMap { b: Pair, g: Pair, resolution: usize },
    Bifurcation { axis: ScanAxis, grid: Vec<f64> },
    Bubbles { params: ModelParams, integ: IntegrationConfig, policy: TransientPolicy, window: Pair },
    Exponents { kind: ExponentKind, anchor: f64, grid: Vec<f64>, opts: ExponentOptions },
    Fit { params: ModelParams, integ: IntegrationConfig, peak_index: usize, window: FitWindow, space: FitSpace },
    Table1 { b: f64, integ: IntegrationConfig },
}

const COMMON: &[&str] = &["command", "out", "format", "workers"];

fn allowed(command: &str) -> &'static [&'static str] {
    match command {
        "simulate" => &["b", "g", "x0", "z0", "t_end", "rtol", "atol", "dt", "lambda"],
        "fixed-points" => &["b", "g"],
        "region-map" => &["b_range", "g_range", "resolution"],
        "bifurcation" => &["b", "g", "vary", "from", "to", "steps"],
        "bubbles" => &["b", "g", "x0", "z0", "t_end", "rtol", "atol", "window", "transient_cutoff"],
        "exponents" => &["b", "g", "x0", "z0", "t_end", "rtol", "atol", "exponent", "g_decades", "delta_decades", "points", "peaks"],
        "fit" => &["b", "g", "x0", "z0", "t_end", "rtol", "atol", "window", "window_fraction", "fit_space", "peak_index"],
        "table1" => &["b", "x0", "z0", "t_end", "rtol", "atol"],
        _ => &[],
    }
}

fn as_map(cfg: &RunConfig) -> Map<String, Value> {
    match serde_json::to_value(cfg) {
        Ok(Value::Object(m)) => m,
        _ => Map::new(),
    }
}

impl RunConfig {
    /// Parses a config file body.
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        serde_json::from_str(text).map_err(|e| ConfigError(format!("config file: {e}")))
    }

    /// `self` with every field set in `flags` replaced.
    pub fn overlay(&self, flags: &RunConfig) -> Result<Self, ConfigError> {
        let mut merged = as_map(self);
        merged.extend(as_map(flags));
        let mut out: RunConfig =
            serde_json::from_value(Value::Object(merged)).map_err(|e| ConfigError(e.to_string()))?;
        out.workers = flags.workers.or(self.workers);
        Ok(out)
    }

    fn check_fields(&self, command: &str) -> Result<(), ConfigError> {
        let ok = allowed(command);
        for key in as_map(self).keys() {
            if !COMMON.contains(&key.as_str()) && !ok.contains(&key.as_str()) {
                return bad(format!("`{}` does not apply to {command}", key.replace('_', "-")));
            }
        }
        Ok(())
    }

    fn check_finite(&self) -> Result<(), ConfigError> {
        let m = as_map(self);
        for (k, v) in &m {
            // serde_json writes non-finite floats as null
            let broken = v.is_null() || v.as_array().is_some_and(|a| a.iter().any(Value::is_null));
            if broken {
                return bad(format!("`{k}` must be a finite number"));
            }
        }
        Ok(())
    }

    /// Fills defaults for `command`, validates, and returns the work to do.
    /// After this call `self` is the config to echo.
    pub fn resolve(&mut self, command: &str) -> Result<Job, ConfigError> {
        if let Some(c) = &self.command {
            if c != command {
                return bad(format!("config file is for `{c}`, not `{command}`"));
            }
        }
        self.command = Some(command.to_string());
        self.check_finite()?;
        self.check_fields(command)?;
        if self.workers == Some(0) {
            return bad("--workers must be at least 1");
        }
        let job = match command {
            "simulate" => self.simulate()?,
            "fixed-points" => Job::FixedPoints { params: self.params()? },
            "region-map" => self.region_map()?,
            "bifurcation" => self.bifurcation()?,
            "bubbles" => self.bubbles()?,
            "exponents" => self.exponents()?,
            "fit" => self.fit()?,
            "table1" => self.table1()?,
            other => return bad(format!("unknown command `{other}`")),
        };
        self.format.get_or_insert(if command == "fixed-points" { Format::Json } else { Format::Csv });
        Ok(job)
    }

    fn params(&self) -> Result<ModelParams, ConfigError> {
        let b = self.b.ok_or_else(|| ConfigError("--b is required".into()))?;
        let g = self.g.ok_or_else(|| ConfigError("--g is required".into()))?;
        ModelParams::new(b, g).map_err(|e| ConfigError(e.to_string()))
    }

    fn integration(&mut self, t_end: f64) -> Result<IntegrationConfig, ConfigError> {
        let x = *self.x0.get_or_insert(1.0);
        let z = *self.z0.get_or_insert(0.1);
        let initial = State::new(x, z).map_err(|e| ConfigError(format!("initial condition: {e}")))?;
        let cfg = IntegrationConfig {
            rtol: *self.rtol.get_or_insert(1e-10),
            atol: *self.atol.get_or_insert(1e-12),
            ..IntegrationConfig::new(initial, *self.t_end.get_or_insert(t_end))
        };
        cfg.validate().map_err(|e| ConfigError(e.to_string()))?;
        Ok(cfg)
    }

    fn simulate(&mut self) -> Result<Job, ConfigError> {
        let params = self.params()?;
        let mut integ = self.integration(1000.0)?;
        integ.sample_dt = Some(*self.dt.get_or_insert(0.1));
        integ.validate().map_err(|e| ConfigError(e.to_string()))?;
        let lambda = *self.lambda.get_or_insert(false);
        Ok(Job::Simulate { params, integ, lambda })
    }

    fn region_map(&mut self) -> Result<Job, ConfigError> {
        let b = *self.b_range.get_or_insert(Pair(0.05, 1.5));
        let g = *self.g_range.get_or_insert(Pair(-0.25, 0.35));
        let resolution = *self.resolution.get_or_insert(100);
        if !(b.0 > 0.0 && b.1 > b.0) {
            return bad("--b-range must satisfy 0 < lo < hi");
        }
        if g.1 <= g.0 {
            return bad("--g-range must satisfy lo < hi");
        }
        if !(2..=2000).contains(&resolution) {
            return bad("--resolution must be between 2 and 2000");
        }
        Ok(Job::RegionMap { b, g, resolution })
    }

    fn bifurcation(&mut self) -> Result<Job, ConfigError> {
        let vary = self.vary.ok_or_else(|| ConfigError("--vary b|g is required".into()))?;
        let (from, to) = match (self.from, self.to) {
            (Some(a), Some(b)) if a != b => (a, b),
            (Some(_), Some(_)) => return bad("--from and --to must differ"),
            _ => return bad("--from and --to are required"),
        };
        let steps = *self.steps.get_or_insert(400);
        if steps < 2 {
            return bad("--steps must be at least 2");
        }
        let axis = match vary {
            Param::B if self.b.is_some() => return bad("--b is the swept parameter; drop it or vary g"),
            Param::G if self.g.is_some() => return bad("--g is the swept parameter; drop it or vary b"),
            Param::B => ScanAxis::VaryB { g: self.g.ok_or_else(|| ConfigError("--g is required".into()))? },
            Param::G => ScanAxis::VaryG { b: self.b.ok_or_else(|| ConfigError("--b is required".into()))? },
        };
        Ok(Job::Bifurcation { axis, grid: linspace(from, to, steps) })
    }

    fn bubbles(&mut self) -> Result<Job, ConfigError> {
        let params = self.params()?;
        let mut integ = self.integration(1000.0)?;
        integ.keep_dense = true;
        let window = *self.window.get_or_insert(Pair(0.0, integ.t_end));
        if window.1 <= window.0 {
            return bad("--window must satisfy t0 < t1");
        }
        let policy = match self.transient_cutoff {
            Some(t) if t < 0.0 => return bad("--transient-cutoff must be non-negative"),
            Some(t) => TransientPolicy::Cutoff(t),
            None => TransientPolicy::Auto,
        };
        Ok(Job::Bubbles { params, integ, policy, window })
    }

    fn exponents(&mut self) -> Result<Job, ConfigError> {
        let kind = self.exponent.ok_or_else(|| ConfigError("exponent kind (nu or gamma) is required".into()))?;
        let integ = self.integration(1e5)?;
        let points = *self.points.get_or_insert(9);
        let peaks = *self.peaks.get_or_insert(20);
        if points < 3 {
            return bad("--points must be at least 3");
        }
        if peaks < 4 {
            return bad("--peaks must be at least 4");
        }
        let opts = ExponentOptions { initial: integ.initial, peaks, t_max: integ.t_end, rtol: integ.rtol, atol: integ.atol };
        let (anchor, grid) = match kind {
            ExponentKind::Nu => {
                if self.b.is_some() || self.g_decades.is_some() {
                    return bad("the nu sweep takes --g and --delta-decades");
                }
                let d = *self.delta_decades.get_or_insert(Pair(-4.0, -2.0));
                (*self.g.get_or_insert(-0.03), decades(d, points, 1.0))
            }
            ExponentKind::Gamma => {
                if self.g.is_some() || self.delta_decades.is_some() {
                    return bad("the gamma sweep takes --b and --g-decades");
                }
                let d = *self.g_decades.get_or_insert(Pair(-2.0, -6.0));
                (*self.b.get_or_insert(1.0), decades(d, points, -1.0))
            }
        };
        Ok(Job::Exponents { kind, anchor, grid, opts })
    }

    fn fit(&mut self) -> Result<Job, ConfigError> {
        let params = self.params()?;
        let mut integ = self.integration(1e4)?;
        let peak_index = *self.peak_index.get_or_insert(0);
        integ.keep_dense = true;
        integ.stop_after = Some((bubblecycle_core::integrate::EventKind::XMax, peak_index + 1));
        let window = match (self.window, self.window_fraction) {
            (Some(_), Some(_)) => return bad("--window and --window-fraction are exclusive"),
            (Some(Pair(t0, t1)), None) if t0 < t1 => FitWindow::Explicit { t0, t1 },
            (Some(_), None) => return bad("--window must satisfy t0 < t1"),
            (None, Some(f)) if f > 0.0 && f < 1.0 => FitWindow::Fraction { fraction: f },
            (None, Some(_)) => return bad("--window-fraction must lie in (0, 1)"),
            (None, None) => FitWindow::Auto,
        };
        let space = match *self.fit_space.get_or_insert(Space::Log) {
            Space::Log => FitSpace::Log,
            Space::Price => FitSpace::Price,
        };
        Ok(Job::Fit { params, integ, peak_index, window, space })
    }

    fn table1(&mut self) -> Result<Job, ConfigError> {
        let b = *self.b.get_or_insert(1.0);
        if b.is_nan() || b <= 0.0 {
            return bad("--b must be positive");
        }
        let integ = self.integration(100.0)?;
        Ok(Job::Table1 { b, integ })
    }
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| if i + 1 == n { b } else { a + (b - a) * i as f64 / (n - 1) as f64 }).collect()
}

/// `n` values `sign * 10^e` with `e` evenly spaced over the decade range.
fn decades(d: Pair, n: usize, sign: f64) -> Vec<f64> {
    linspace(d.0, d.1, n).into_iter().map(|e| sign * 10f64.powf(e)).collect()
}

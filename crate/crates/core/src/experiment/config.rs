//! Flat `key = value` experiment configuration.
//!
//! ```text
//! # HE sweep at the default resolution
//! problem = fine_he
//! n = 4
//! nx = 512
//! sweep = 4, 8, 16
//! forcing.profile = cos:1
//! ```

use std::path::PathBuf;

use serde::Serialize;

use crate::error::{LabError, Result};
use crate::integrator::{Bump, ForcingSpec, TimeGrid};
use crate::problems::ProblemKind;
use crate::profile::SpatialProfile;

pub const KEYS: &[&str] = &[
    "problem",
    "n",
    "nx",
    "dt",
    "theta",
    "t_start",
    "t_end",
    "forcing.t_on",
    "forcing.t_off",
    "forcing.amp",
    "forcing.power",
    "forcing.profile",
    "nu_list",
    "sweep",
    "window",
    "out_dir",
];

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub problem: ProblemKind,
    pub nx: usize,
    pub dt: f64,
    /// Explicit θ; `None` means the per-kind default.
    pub theta: Option<f64>,
    pub t_start: f64,
    pub t_end: f64,
    pub forcing: ForcingSpec,
    pub nu_list: Vec<f64>,
    pub sweep: Vec<u32>,
    /// Fit window for decay studies; `None` means the last third after the
    /// forcing switches off.
    pub window: Option<(f64, f64)>,
    pub out_dir: PathBuf,
}

impl ExperimentConfig {
    /// Config with default numerics for `problem`.
    pub fn new(problem: ProblemKind) -> Self {
        Self {
            problem,
            nx: 256,
            dt: 2e-3,
            theta: None,
            t_start: 0.0,
            t_end: 12.0,
            forcing: ForcingSpec::new(Bump { t_on: 0.5, t_off: 1.5, amp: 1.0, power: 3 }, SpatialProfile::Cosine(1)),
            nu_list: vec![-0.5, 0.5, 1.0, 2.0],
            sweep: Vec::new(),
            window: None,
            out_dir: PathBuf::from("out"),
        }
    }

    pub fn theta_for(&self, kind: ProblemKind) -> f64 {
        self.theta.unwrap_or_else(|| kind.default_theta())
    }

    /// θ shared by every member of a sweep and its limit run.
    pub fn sweep_theta(&self) -> f64 {
        self.theta.unwrap_or(1.0)
    }

    pub fn time_grid(&self) -> Result<TimeGrid> {
        TimeGrid::new(self.t_start, self.t_end, self.dt)
    }

    pub fn fit_window(&self) -> (f64, f64) {
        self.window.unwrap_or_else(|| {
            let off = self.forcing.bump.t_off;
            (self.t_end - (self.t_end - off) / 3.0, self.t_end)
        })
    }

    /// Checks the cross-key invariants. `line_of` maps a key to the line it
    /// was read from (0 when it was not given).
    fn validate(&self, line_of: impl Fn(&str) -> usize) -> Result<()> {
        let err = |key: &str, msg: String| Err(LabError::Config { line: line_of(key), msg });
        if self.nx < 2 {
            return err("nx", format!("nx must be at least 2, got {}", self.nx));
        }
        if !(self.dt > 0.0) {
            return err("dt", format!("dt must be positive, got {}", self.dt));
        }
        if let Some(theta) = self.theta {
            if theta != 0.5 && theta != 1.0 {
                return err("theta", format!("theta must be 0.5 or 1, got {theta}"));
            }
        }
        if !(self.t_end > self.t_start) {
            return err("t_end", format!("t_end ({}) must exceed t_start ({})", self.t_end, self.t_start));
        }
        let b = &self.forcing.bump;
        if !(b.t_on > self.t_start) {
            return err("forcing.t_on", format!("forcing.t_on ({}) must exceed t_start ({})", b.t_on, self.t_start));
        }
        if !(b.t_off < self.t_end) {
            return err("forcing.t_off", format!("forcing.t_off ({}) must be below t_end ({})", b.t_off, self.t_end));
        }
        if let Some(max) = self.sweep.iter().max() {
            let need = 2 * *max as usize;
            if self.nx % need != 0 {
                return err("nx", format!("nx = {} is not a multiple of 2·max(sweep) = {need}", self.nx));
            }
            if self.problem.family().is_none() {
                return err("sweep", format!("sweep needs a fine or limit problem, got {}", self.problem));
            }
        }
        if self.sweep.contains(&0) {
            return err("sweep", "sweep entries must be positive".into());
        }
        if let Some((a, c)) = self.window {
            if !(a < c) {
                return err("window", format!("window start {a} must be below its end {c}"));
            }
        }
        self.time_grid().map_err(|e| LabError::Config { line: line_of("dt"), msg: e.to_string() })?;
        Ok(())
    }

    /// Canonical `key = value` text; parses back to an equal config.
    pub fn to_text(&self) -> String {
        let b = &self.forcing.bump;
        let mut out = String::new();
        let mut put = |k: &str, v: String| out.push_str(&format!("{k} = {v}\n"));
        put("problem", self.problem.tag().to_string());
        if let Some(n) = self.problem.periods() {
            put("n", n.to_string());
        }
        put("nx", self.nx.to_string());
        put("dt", self.dt.to_string());
        if let Some(theta) = self.theta {
            put("theta", theta.to_string());
        }
        put("t_start", self.t_start.to_string());
        put("t_end", self.t_end.to_string());
        put("forcing.t_on", b.t_on.to_string());
        put("forcing.t_off", b.t_off.to_string());
        put("forcing.amp", b.amp.to_string());
        put("forcing.power", b.power.to_string());
        put("forcing.profile", self.forcing.profile.to_string());
        put("nu_list", join(&self.nu_list));
        if !self.sweep.is_empty() {
            put("sweep", join(&self.sweep));
        }
        if let Some((a, c)) = self.window {
            put("window", format!("{a}, {c}"));
        }
        put("out_dir", self.out_dir.display().to_string());
        out
    }

    pub fn echo(&self) -> ConfigEcho {
        let b = &self.forcing.bump;
        ConfigEcho {
            problem: self.problem.to_string(),
            nx: self.nx,
            dt: self.dt,
            theta: self.theta_for(self.problem),
            t_start: self.t_start,
            t_end: self.t_end,
            forcing: format!("bump[{}, {}] amp = {} p = {} g = {}", b.t_on, b.t_off, b.amp, b.power, self.forcing.profile),
            nu_list: self.nu_list.clone(),
            sweep: self.sweep.clone(),
            window: self.fit_window(),
            out_dir: self.out_dir.display().to_string(),
        }
    }
}

/// JSON-friendly copy of a config for manifests.
#[derive(Debug, Clone, Serialize)]
pub struct ConfigEcho {
    pub problem: String,
    pub nx: usize,
    pub dt: f64,
    pub theta: f64,
    pub t_start: f64,
    pub t_end: f64,
    pub forcing: String,
    pub nu_list: Vec<f64>,
    pub sweep: Vec<u32>,
    pub window: (f64, f64),
    pub out_dir: String,
}

fn join<T: ToString>(xs: &[T]) -> String {
    xs.iter().map(ToString::to_string).collect::<Vec<_>>().join(", ")
}

fn parse_list<T: std::str::FromStr>(v: &str) -> Option<Vec<T>> {
    v.split(',').filter(|s| !s.trim().is_empty()).map(|s| s.trim().parse().ok()).collect()
}

/// Parses and validates a config. Errors carry the 1-based line number
/// (0 for keys that are missing altogether).
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let mut seen: Vec<(String, String, usize)> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let Some((k, v)) = body.split_once('=') else {
            return Err(LabError::Config { line, msg: format!("expected `key = value`, got `{body}`") });
        };
        let (k, v) = (k.trim(), v.trim());
        if !KEYS.contains(&k) {
            return Err(LabError::Config { line, msg: format!("unknown key `{k}`") });
        }
        if seen.iter().any(|(s, _, _)| s == k) {
            return Err(LabError::Config { line, msg: format!("duplicate key `{k}`") });
        }
        seen.push((k.to_string(), v.to_string(), line));
    }
    let line_of = |key: &str| seen.iter().find(|(k, _, _)| k == key).map_or(0, |e| e.2);
    let get = |key: &str| seen.iter().find(|(k, _, _)| k == key).map(|(_, v, l)| (v.as_str(), *l));
    fn num<T: std::str::FromStr>(key: &str, v: &str, line: usize) -> Result<T> {
        v.parse().map_err(|_| LabError::Config { line, msg: format!("`{key}`: cannot parse `{v}`") })
    }

    let Some((tag, tag_line)) = get("problem") else {
        return Err(LabError::Config { line: 0, msg: "missing required key `problem`".into() });
    };
    let n = match get("n") {
        Some((v, l)) => Some(num::<u32>("n", v, l)?),
        None => None,
    };
    if n == Some(0) {
        return Err(LabError::Config { line: line_of("n"), msg: "n must be positive".into() });
    }
    let problem = ProblemKind::from_tag(tag, n).map_err(|e| LabError::Config { line: tag_line, msg: e.to_string() })?;
    let mut cfg = ExperimentConfig::new(problem);

    if let Some((v, l)) = get("nx") {
        cfg.nx = num("nx", v, l)?;
    }
    if let Some((v, l)) = get("dt") {
        cfg.dt = num("dt", v, l)?;
    }
    if let Some((v, l)) = get("theta") {
        cfg.theta = Some(num("theta", v, l)?);
    }
    if let Some((v, l)) = get("t_start") {
        cfg.t_start = num("t_start", v, l)?;
    }
    if let Some((v, l)) = get("t_end") {
        cfg.t_end = num("t_end", v, l)?;
    }
    let b = &mut cfg.forcing.bump;
    if let Some((v, l)) = get("forcing.t_on") {
        b.t_on = num("forcing.t_on", v, l)?;
    }
    if let Some((v, l)) = get("forcing.t_off") {
        b.t_off = num("forcing.t_off", v, l)?;
    }
    if let Some((v, l)) = get("forcing.power") {
        b.power = num("forcing.power", v, l)?;
    }
    let amp_line = line_of("forcing.amp");
    // `unit` scales the bump to unit time integral
    let unit = matches!(get("forcing.amp"), Some(("unit", _)));
    if let (Some((v, l)), false) = (get("forcing.amp"), unit) {
        b.amp = num("forcing.amp", v, l)?;
    }
    let bump = if unit {
        Bump::normalized(b.t_on, b.t_off, b.power)
    } else {
        Bump::new(b.t_on, b.t_off, b.amp, b.power)
    }
    .map_err(|e| LabError::Config { line: amp_line.max(line_of("forcing.t_on")), msg: e.to_string() })?;
    cfg.forcing.bump = bump;
    if let Some((v, l)) = get("forcing.profile") {
        cfg.forcing.profile = v.parse().map_err(|e: LabError| LabError::Config { line: l, msg: e.to_string() })?;
    }
    if let Some((v, l)) = get("nu_list") {
        cfg.nu_list = parse_list(v).ok_or_else(|| LabError::Config { line: l, msg: format!("`nu_list`: cannot parse `{v}`") })?;
    }
    if let Some((v, l)) = get("sweep") {
        let mut sweep: Vec<u32> =
            parse_list(v).ok_or_else(|| LabError::Config { line: l, msg: format!("`sweep`: cannot parse `{v}`") })?;
        sweep.sort_unstable();
        sweep.dedup();
        if sweep.is_empty() {
            return Err(LabError::Config { line: l, msg: "sweep is empty".into() });
        }
        cfg.sweep = sweep;
    }
    if let Some((v, l)) = get("window") {
        match parse_list::<f64>(v).as_deref() {
            Some(&[a, c]) => cfg.window = Some((a, c)),
            _ => return Err(LabError::Config { line: l, msg: format!("`window`: expected `start, end`, got `{v}`") }),
        }
    }
    if let Some((v, _)) = get("out_dir") {
        cfg.out_dir = PathBuf::from(v);
    }
    cfg.validate(line_of)?;
    Ok(cfg)
}

/// Validates a config built in code with the same rules as [`parse_config`].
pub fn check_config(cfg: &ExperimentConfig) -> Result<()> {
    cfg.validate(|_| 0)
}

//! wasm-bindgen front end for the browser demo in `www/`.
//!
//! Each exported function takes plain numbers and strings and returns a JSON
//! string; the same computations are available natively through the
//! `*_data` functions, which is what the tests exercise.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use homlab::analysis::{limit_spectrum, SymbolMode};
use homlab::experiment::{check_config, solve_study, studies::stability_from_traces, ExperimentConfig};
use homlab::{Family, LabError, MaterialLayout, ProblemKind, SpatialProfile, StaggeredGrid};

/// Largest number of samples sent to the page per trace.
const MAX_POINTS: usize = 600;

#[derive(Debug, Serialize)]
pub struct DecayData {
    pub problem: String,
    pub t: Vec<f64>,
    pub energy: Vec<f64>,
    pub spatial_mean: Vec<f64>,
    pub window: (f64, f64),
    pub rate: f64,
    pub field_rate: f64,
    pub verdict: String,
}

fn thin(xs: &[f64], stride: usize) -> Vec<f64> {
    xs.iter().step_by(stride).copied().collect()
}

/// Solves `problem` (`limit_he`, `fine_hp:8`, ...) with forcing profile
/// `profile` and fits the post-forcing energy decay.
pub fn decay_data(problem: &str, profile: &str, nx: usize, dt: f64, t_end: f64) -> Result<DecayData, LabError> {
    let kind: ProblemKind = problem.parse()?;
    let mut cfg = ExperimentConfig::new(kind);
    cfg.nx = nx;
    cfg.dt = dt;
    cfg.t_end = t_end;
    cfg.forcing.profile = profile.parse()?;
    check_config(&cfg)?;
    let out = solve_study(&cfg)?;
    let rep = stability_from_traces(&cfg, &out.traces, &out.field)?;
    let stride = out.traces.t.len().div_ceil(MAX_POINTS).max(1);
    Ok(DecayData {
        problem: kind.to_string(),
        t: thin(&out.traces.t, stride),
        energy: thin(&out.traces.energy, stride),
        spatial_mean: thin(&out.traces.spatial_mean_u, stride),
        window: rep.window,
        rate: rep.rate,
        field_rate: rep.field_rate,
        verdict: rep.verdict,
    })
}

#[derive(Debug, Serialize)]
pub struct SpectrumData {
    pub problem: String,
    /// `[re, im]` of every root, continuum symbol.
    pub continuum: Vec<[f64; 2]>,
    /// `[re, im]` of every root, staggered-grid symbol.
    pub discrete: Vec<[f64; 2]>,
    pub abscissa: f64,
}

pub fn spectrum_data(problem: &str, nx: usize, k_max: usize) -> Result<SpectrumData, LabError> {
    let kind: ProblemKind = problem.parse()?;
    let limit = kind.limit().ok_or_else(|| LabError::Domain(format!("{kind} has no limit system")))?;
    let grid = StaggeredGrid::new(nx)?;
    let roots = |mode| -> Result<(Vec<[f64; 2]>, f64), LabError> {
        let rep = limit_spectrum(limit, mode, k_max)?;
        Ok((rep.modes.iter().flat_map(|m| m.roots).collect(), rep.abscissa))
    };
    let (continuum, abscissa) = roots(SymbolMode::Continuum)?;
    let (discrete, _) = roots(SymbolMode::Discrete(grid))?;
    Ok(SpectrumData { problem: limit.to_string(), continuum, discrete, abscissa })
}

#[derive(Debug, Serialize)]
pub struct PairingData {
    pub profile: String,
    pub duty: f64,
    pub n: Vec<u32>,
    pub defect: Vec<f64>,
}

/// `|∫ a(nx) g dx − duty ∫ g dx|` for `n = 1..=n_max`.
pub fn pairing_data(profile: &str, duty: f64, n_max: u32) -> Result<PairingData, LabError> {
    let g: SpatialProfile = profile.parse()?;
    let mut n = Vec::new();
    let mut defect = Vec::new();
    for k in 1..=n_max.max(1) {
        let layout = MaterialLayout::new(k, duty, Family::HyperbolicElliptic)?;
        n.push(k);
        defect.push(layout.pairing_defect(&g, 8));
    }
    Ok(PairingData { profile: g.to_string(), duty, n, defect })
}

fn to_js<T: Serialize>(r: Result<T, LabError>) -> Result<String, JsValue> {
    let value = r.map_err(|e| JsValue::from_str(&e.to_string()))?;
    serde_json::to_string(&value).map_err(|e| JsValue::from_str(&e.to_string()))
}

#[wasm_bindgen]
pub fn decay(problem: &str, profile: &str, nx: usize, dt: f64, t_end: f64) -> Result<String, JsValue> {
    to_js(decay_data(problem, profile, nx, dt, t_end))
}

#[wasm_bindgen]
pub fn spectrum(problem: &str, nx: usize, k_max: usize) -> Result<String, JsValue> {
    to_js(spectrum_data(problem, nx, k_max))
}

#[wasm_bindgen]
pub fn pairing(profile: &str, duty: f64, n_max: u32) -> Result<String, JsValue> {
    to_js(pairing_data(profile, duty, n_max))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decay_of_he_limit() {
        let d = decay_data("limit_he", "cos:1", 64, 4e-3, 12.0).unwrap();
        assert!(d.t.len() <= MAX_POINTS + 1);
        assert!((d.rate + 2.0).abs() < 0.05, "{}", d.rate);
        assert!(d.verdict.starts_with("stable"));
    }

    #[test]
    fn decay_rejects_bad_input() {
        assert!(decay_data("limit_xx", "cos:1", 64, 4e-3, 12.0).is_err());
        assert!(decay_data("fine_he:8", "cos:1", 20, 4e-3, 12.0).is_err());
        assert!(decay_data("limit_he", "cos:1", 64, 4e-3, 1.0).is_err());
    }

    #[test]
    fn spectrum_abscissae() {
        let he = spectrum_data("fine_he:4", 32, 8).unwrap();
        assert_eq!(he.problem, "limit_he");
        assert_eq!(he.abscissa, -1.0);
        assert_eq!(he.discrete.len(), 18);
        assert_eq!(spectrum_data("limit_hp", 32, 8).unwrap().abscissa, 0.0);
        assert!(spectrum_data("pure_wave", 32, 8).is_err());
    }

    #[test]
    fn pairing_one_over_eight_n() {
        let p = pairing_data("linear", 0.5, 16).unwrap();
        for (n, d) in p.n.iter().zip(&p.defect) {
            assert!((d - 1.0 / (8.0 * *n as f64)).abs() < 1e-12);
        }
        let json = to_js(pairing_data("cos:1", 0.5, 4)).unwrap();
        assert!(json.starts_with("{\"profile\":\"cos:1\""));
    }
}

//! Spatial profiles on `[0, 1]` shared by forcing terms, test functions and
//! coefficient pairings.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use crate::error::LabError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SpatialProfile {
    Constant,
    Linear,
    /// `cos(kπx)`, the `k`-th Neumann eigenmode.
    Cosine(u32),
    /// `exp(−(x − center)² / (2 width²))`.
    Gaussian { center: f64, width: f64 },
}

impl SpatialProfile {
    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            SpatialProfile::Constant => 1.0,
            SpatialProfile::Linear => x,
            SpatialProfile::Cosine(k) => (k as f64 * PI * x).cos(),
            SpatialProfile::Gaussian { center, width } => {
                let r = (x - center) / width;
                (-0.5 * r * r).exp()
            }
        }
    }

    pub fn sample(&self, xs: &[f64]) -> Vec<f64> {
        xs.iter().map(|&x| self.eval(x)).collect()
    }

    /// Polynomial profiles are integrated exactly by Gauss–Legendre rules.
    pub fn is_polynomial(&self) -> bool {
        matches!(self, SpatialProfile::Constant | SpatialProfile::Linear)
    }
}

impl fmt::Display for SpatialProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SpatialProfile::Constant => write!(f, "constant"),
            SpatialProfile::Linear => write!(f, "linear"),
            SpatialProfile::Cosine(k) => write!(f, "cos:{k}"),
            SpatialProfile::Gaussian { center, width } => write!(f, "gauss:{center},{width}"),
        }
    }
}

impl FromStr for SpatialProfile {
    type Err = LabError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let bad = || LabError::Domain(format!("unknown profile `{s}` (expected constant | linear | cos:k | gauss:c,w)"));
        match s {
            "constant" => return Ok(SpatialProfile::Constant),
            "linear" => return Ok(SpatialProfile::Linear),
            _ => {}
        }
        if let Some(k) = s.strip_prefix("cos:") {
            let k = k.trim().parse::<u32>().map_err(|_| bad())?;
            return Ok(SpatialProfile::Cosine(k));
        }
        if let Some(rest) = s.strip_prefix("gauss:") {
            let mut parts = rest.split(',').map(|p| p.trim().parse::<f64>());
            let (Some(Ok(center)), Some(Ok(width)), None) = (parts.next(), parts.next(), parts.next()) else {
                return Err(bad());
            };
            if !(width > 0.0) || !center.is_finite() {
                return Err(LabError::Domain(format!("gaussian profile needs finite center and width > 0, got `{s}`")));
            }
            return Ok(SpatialProfile::Gaussian { center, width });
        }
        Err(bad())
    }
}

/// Five-point Gauss–Legendre rule on `[-1, 1]`; exact for degree ≤ 9.
const GL5_NODES: [f64; 5] = [
    -0.906_179_845_938_664,
    -0.538_469_310_105_683,
    0.0,
    0.538_469_310_105_683,
    0.906_179_845_938_664,
];
const GL5_WEIGHTS: [f64; 5] = [
    0.236_926_885_056_189_1,
    0.478_628_670_499_366_5,
    0.568_888_888_888_888_9,
    0.478_628_670_499_366_5,
    0.236_926_885_056_189_1,
];

/// Composite five-point Gauss–Legendre quadrature of `f` over `[a, b]` with
/// `panels` equal panels.
pub(crate) fn gauss_legendre<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, panels: usize) -> f64 {
    if b <= a {
        return 0.0;
    }
    let panels = panels.max(1);
    let h = (b - a) / panels as f64;
    let mut sum = 0.0;
    for p in 0..panels {
        let mid = a + (p as f64 + 0.5) * h;
        let half = 0.5 * h;
        for (node, weight) in GL5_NODES.iter().zip(GL5_WEIGHTS.iter()) {
            sum += weight * f(mid + half * node);
        }
    }
    sum * 0.5 * h
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_roundtrip() {
        for text in ["constant", "linear", "cos:3", "gauss:0.5,0.1"] {
            let p: SpatialProfile = text.parse().unwrap();
            assert_eq!(p.to_string(), text);
        }
        assert!("cos:x".parse::<SpatialProfile>().is_err());
        assert!("gauss:0.5".parse::<SpatialProfile>().is_err());
        assert!("gauss:0.5,-1".parse::<SpatialProfile>().is_err());
        assert!("sine".parse::<SpatialProfile>().is_err());
    }

    #[test]
    fn gauss_legendre_is_exact_for_degree_nine() {
        let val = gauss_legendre(|x| x.powi(9) + 3.0 * x.powi(4), 0.0, 2.0, 1);
        let exact = 2f64.powi(10) / 10.0 + 3.0 * 2f64.powi(5) / 5.0;
        assert!((val - exact).abs() < 1e-11 * exact);
    }

    #[test]
    fn gauss_legendre_smooth_function() {
        let val = gauss_legendre(|x| (PI * x).cos().powi(2), 0.0, 1.0, 8);
        assert!((val - 0.5).abs() < 1e-13);
    }
}

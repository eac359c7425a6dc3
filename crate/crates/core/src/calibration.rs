//! Experiment thresholds, read from `config/calibration.toml` (compiled in) or
//! from a file given at run time.

use std::path::Path;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_TOML: &str = include_str!("../config/calibration.toml");

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProgressionCal {
    pub x: u64,
    pub h: u64,
    pub q_max: u64,
    pub r: f64,
    pub threshold: f64,
    pub measured: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LambdaSharpICal {
    pub x: u64,
    pub h: u64,
    pub trunc_exponent: f64,
    pub threshold: f64,
    pub measured: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiscorrelationCal {
    pub xs: Vec<u64>,
    pub theta: f64,
    pub q_max: u64,
    pub random_alphas: usize,
    pub seed: u64,
    pub threshold: f64,
    pub slack: f64,
    pub measured: Vec<f64>,
    pub max_seconds: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MajorArcCal {
    pub x: u64,
    pub theta: f64,
    pub lambda_r: RChoice,
    pub eta: f64,
    pub lambda_threshold: f64,
    pub dk_threshold_per_log: f64,
    pub measured_lambda: f64,
    pub measured_dk: f64,
}

/// `"default"` or an explicit value.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RChoice {
    Value(f64),
    Named(String),
}

impl RChoice {
    pub fn resolve(&self, x: f64) -> Result<f64> {
        match self {
            RChoice::Value(v) => Ok(*v),
            RChoice::Named(s) if s == "default" => Ok(crate::approximants::default_r(x)),
            RChoice::Named(s) => Err(Error::Parse(format!("unknown R choice {s:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DkAverageCal {
    pub x: u64,
    pub h: u64,
    pub eta: f64,
    pub measured_eta: f64,
    pub r_converged: f64,
    pub threshold_converged: f64,
    pub measured_converged: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TernaryCal {
    pub n: i64,
    pub companion: i64,
    pub side_exponent: f64,
    pub p_max: u64,
    pub threshold: f64,
    pub measured_companion: f64,
    pub max_seconds: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NilCal {
    pub x: u64,
    pub theta: f64,
    pub sequences: usize,
    pub xi: i64,
    pub seed: u64,
    pub threshold: f64,
    pub riemann_h: u64,
    pub riemann_tolerance: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HyperbolaCal {
    pub draws: usize,
    pub x_min: u64,
    pub x_max: u64,
    pub h_max: u64,
    pub seed: u64,
    pub total_constant_max: f64,
    pub max_seconds: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassifierCal {
    pub samples: usize,
    pub seed: u64,
    pub theta_offset: f64,
    pub max_seconds: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeathBrownCal {
    pub x: u64,
    pub l: u32,
    pub lambda_tolerance: f64,
    pub max_seconds: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RamareCal {
    pub x: u64,
    pub h: u64,
    pub p: u64,
    pub q: u64,
    pub r_max: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GowersCal {
    pub slabs: usize,
    pub h_max: usize,
    pub seed: u64,
    pub definition_tolerance: f64,
    pub fourier_h: usize,
    pub fourier_tolerance: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocalFactorCal {
    pub twin_p_max: u64,
    pub systems: usize,
    pub seed: u64,
    pub p_max: u64,
    /// Smaller bound for three-variable systems, whose factors enumerate `p^3` residues.
    pub p_max_3d: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub heath_brown: HeathBrownCal,
    pub ramare: RamareCal,
    pub gowers: GowersCal,
    pub local_factors: LocalFactorCal,
    pub lambda_sharp_progressions: ProgressionCal,
    pub lambda_sharp_i: LambdaSharpICal,
    pub discorrelation: DiscorrelationCal,
    pub major_arc: MajorArcCal,
    pub dk_average: DkAverageCal,
    pub ternary: TernaryCal,
    pub nilsequence: NilCal,
    pub hyperbola: HyperbolaCal,
    pub classifier: ClassifierCal,
}

impl Calibration {
    pub fn parse(s: &str) -> Result<Calibration> {
        toml::from_str(s).map_err(|e| Error::Parse(format!("calibration config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Calibration> {
        Calibration::parse(&std::fs::read_to_string(path)?)
    }
}

/// The compiled-in configuration.
pub fn calibration() -> &'static Calibration {
    static CAL: OnceLock<Calibration> = OnceLock::new();
    CAL.get_or_init(|| Calibration::parse(DEFAULT_TOML).expect("shipped calibration config parses"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shipped_config_parses() {
        let c = calibration();
        assert_eq!(c.lambda_sharp_progressions.r, 20.0);
        assert_eq!(c.major_arc.lambda_r.resolve(1e8).unwrap(), crate::approximants::default_r(1e8));
        assert_eq!(c.discorrelation.xs.len(), c.discorrelation.measured.len());
        for (m, _) in c.discorrelation.measured.iter().zip(&c.discorrelation.xs) {
            assert!(*m <= c.discorrelation.threshold);
        }
    }

    #[test]
    fn bad_config_is_a_parse_error() {
        assert!(matches!(Calibration::parse("[major_arc]\nx = 1"), Err(Error::Parse(_))));
    }
}

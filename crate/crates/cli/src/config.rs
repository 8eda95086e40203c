//! JSON scenario files.
//!
//! ```text
//! {
//!   "preset": "NV1",
//!   "gamma_convention": "cyclic",
//!   "M": 1.25e6,
//!   "n_dd": 63,
//!   "z_min": { "start_m": 1e-7, "stop_m": 2e-6, "points": 50, "spacing": "log" },
//!   "output": "nv1.csv"
//! }
//! ```
//!
//! Every key is optional except `t2_echo_s` and `rho_nv_per_cm3` under the
//! `custom` preset. Unknown keys are rejected.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use nvnmr_core::model::{self, NvPreset, DEFAULT_OMEGA_TARGET, REFERENCE_NUCLEI, REFERENCE_N_DD};
use nvnmr_core::{GammaConvention, PhysicalScenario};

use crate::CliError;

pub const DEFAULT_GAMMA_TARGET_HZ_PER_T: f64 = 42.0e6;
pub const DEFAULT_GAMMA_PROBE_HZ_PER_T: f64 = 28.024e9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
pub enum Preset {
    NV1,
    NV2,
    NV3,
    #[serde(rename = "custom")]
    Custom,
}

impl Preset {
    pub fn name(self) -> &'static str {
        match self {
            Preset::NV1 => "NV1",
            Preset::NV2 => "NV2",
            Preset::NV3 => "NV3",
            Preset::Custom => "custom",
        }
    }

    fn values(self) -> Option<NvPreset> {
        match self {
            Preset::NV1 => Some(model::NV1),
            Preset::NV2 => Some(model::NV2),
            Preset::NV3 => Some(model::NV3),
            Preset::Custom => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Spacing {
    Linear,
    Log,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSweep {
    start_m: Option<f64>,
    stop_m: Option<f64>,
    points: Option<usize>,
    spacing: Option<Spacing>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    preset: Option<Preset>,
    t2_echo_s: Option<f64>,
    rho_nv_per_cm3: Option<f64>,
    gamma_target_hz_per_t: Option<f64>,
    gamma_probe_hz_per_t: Option<f64>,
    gamma_convention: Option<String>,
    #[serde(rename = "M")]
    m: Option<f64>,
    n_dd: Option<u32>,
    omega_target_rad_per_s: Option<f64>,
    z_min: Option<RawSweep>,
    output: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sweep {
    pub start_m: f64,
    pub stop_m: f64,
    pub points: usize,
    pub spacing: Spacing,
}

impl Default for Sweep {
    fn default() -> Self {
        Self {
            start_m: 100e-9,
            stop_m: 2e-6,
            points: 50,
            spacing: Spacing::Log,
        }
    }
}

impl Sweep {
    pub fn values(&self) -> Vec<f64> {
        let last = (self.points - 1) as f64;
        (0..self.points)
            .map(|i| {
                if i == 0 {
                    return self.start_m;
                }
                if i == self.points - 1 {
                    return self.stop_m;
                }
                let s = i as f64 / last;
                match self.spacing {
                    Spacing::Linear => self.start_m + (self.stop_m - self.start_m) * s,
                    Spacing::Log => {
                        (self.start_m.ln() + (self.stop_m.ln() - self.start_m.ln()) * s).exp()
                    }
                }
            })
            .collect()
    }
}

/// A validated scenario with presets expanded.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub preset: Preset,
    pub t2_echo_s: f64,
    pub rho_nv_per_cm3: f64,
    pub gamma_target_hz_per_t: f64,
    pub gamma_probe_hz_per_t: f64,
    pub gamma_convention: GammaConvention,
    pub m: f64,
    pub n_dd: u32,
    pub omega_target_rad_per_s: f64,
    pub z_min: Sweep,
    pub output: Option<PathBuf>,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self::from_preset(Preset::NV1).expect("built-in preset")
    }
}

fn positive(name: &str, v: f64, problems: &mut Vec<String>) {
    if !(v > 0.0 && v.is_finite()) {
        problems.push(format!("{name} must be positive and finite, got {v}"));
    }
}

impl ScenarioConfig {
    pub fn from_preset(preset: Preset) -> Result<Self, CliError> {
        Self::resolve(RawConfig {
            preset: Some(preset),
            t2_echo_s: None,
            rho_nv_per_cm3: None,
            gamma_target_hz_per_t: None,
            gamma_probe_hz_per_t: None,
            gamma_convention: None,
            m: None,
            n_dd: None,
            omega_target_rad_per_s: None,
            z_min: None,
            output: None,
        })
    }

    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let raw: RawConfig = serde_json::from_str(text).map_err(|e| {
            CliError::Config(vec![format!(
                "line {}, column {}: {e}",
                e.line(),
                e.column()
            )])
        })?;
        Self::resolve(raw)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(vec![format!("cannot read {}: {e}", path.display())]))?;
        Self::from_json(&text).map_err(|e| match e {
            CliError::Config(list) => CliError::Config(
                list.into_iter()
                    .map(|p| format!("{}: {p}", path.display()))
                    .collect(),
            ),
            other => other,
        })
    }

    /// Fills presets and collects every violated invariant.
    fn resolve(raw: RawConfig) -> Result<Self, CliError> {
        let mut problems = Vec::new();
        let preset = raw.preset.unwrap_or(Preset::NV1);

        let (t2, rho) = match preset.values() {
            Some(p) => {
                for (key, given) in [
                    ("t2_echo_s", raw.t2_echo_s),
                    ("rho_nv_per_cm3", raw.rho_nv_per_cm3),
                ] {
                    if given.is_some() {
                        problems.push(format!(
                            "{key} is fixed by preset {}; use preset \"custom\"",
                            preset.name()
                        ));
                    }
                }
                (p.t2_echo, p.rho_nv_per_cm3)
            }
            None => {
                let mut field = |key: &str, v: Option<f64>| match v {
                    Some(v) => {
                        positive(key, v, &mut problems);
                        v
                    }
                    None => {
                        problems.push(format!("{key} is required for preset \"custom\""));
                        f64::NAN
                    }
                };
                let t2 = field("t2_echo_s", raw.t2_echo_s);
                let rho = field("rho_nv_per_cm3", raw.rho_nv_per_cm3);
                (t2, rho)
            }
        };

        let gamma_target = raw
            .gamma_target_hz_per_t
            .unwrap_or(DEFAULT_GAMMA_TARGET_HZ_PER_T);
        positive("gamma_target_hz_per_t", gamma_target, &mut problems);
        let gamma_probe = raw
            .gamma_probe_hz_per_t
            .unwrap_or(DEFAULT_GAMMA_PROBE_HZ_PER_T);
        positive("gamma_probe_hz_per_t", gamma_probe, &mut problems);

        let convention = match raw
            .gamma_convention
            .as_deref()
            .map(str::parse::<GammaConvention>)
        {
            None => GammaConvention::Cyclic,
            Some(Ok(c)) => c,
            Some(Err(e)) => {
                problems.push(format!("gamma_convention: {e}"));
                GammaConvention::Cyclic
            }
        };

        let m = raw.m.unwrap_or(REFERENCE_NUCLEI);
        if !(m >= 1.0 && m.is_finite()) {
            problems.push(format!("M must be at least 1, got {m}"));
        }
        let n_dd = raw.n_dd.unwrap_or(REFERENCE_N_DD);
        if n_dd == 0 || n_dd % 2 == 0 {
            problems.push(format!("n_dd must be odd and at least 1, got {n_dd}"));
        }
        let omega = raw.omega_target_rad_per_s.unwrap_or(DEFAULT_OMEGA_TARGET);
        positive("omega_target_rad_per_s", omega, &mut problems);

        let mut sweep = Sweep::default();
        if let Some(s) = raw.z_min {
            sweep.start_m = s.start_m.unwrap_or(sweep.start_m);
            sweep.stop_m = s.stop_m.unwrap_or(sweep.stop_m);
            sweep.points = s.points.unwrap_or(sweep.points);
            sweep.spacing = s.spacing.unwrap_or(sweep.spacing);
        }
        positive("z_min.start_m", sweep.start_m, &mut problems);
        positive("z_min.stop_m", sweep.stop_m, &mut problems);
        if !(sweep.start_m < sweep.stop_m) {
            problems.push(format!(
                "z_min.start_m ({}) must be less than z_min.stop_m ({})",
                sweep.start_m, sweep.stop_m
            ));
        }
        if sweep.points < 2 {
            problems.push(format!(
                "z_min.points must be at least 2, got {}",
                sweep.points
            ));
        }

        if !problems.is_empty() {
            return Err(CliError::Config(problems));
        }
        Ok(Self {
            preset,
            t2_echo_s: t2,
            rho_nv_per_cm3: rho,
            gamma_target_hz_per_t: gamma_target,
            gamma_probe_hz_per_t: gamma_probe,
            gamma_convention: convention,
            m,
            n_dd,
            omega_target_rad_per_s: omega,
            z_min: sweep,
            output: raw.output,
        })
    }

    pub fn scenario(&self) -> Result<PhysicalScenario, CliError> {
        let two_pi = 2.0 * std::f64::consts::PI;
        Ok(PhysicalScenario::new(
            two_pi * self.gamma_target_hz_per_t,
            two_pi * self.gamma_probe_hz_per_t,
            self.gamma_convention,
            self.omega_target_rad_per_s,
        )?)
    }

    pub fn rho_nv_per_m3(&self) -> f64 {
        model::per_cm3_to_per_m3(self.rho_nv_per_cm3)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn problems(text: &str) -> Vec<String> {
        match ScenarioConfig::from_json(text) {
            Err(CliError::Config(p)) => p,
            other => panic!("expected config error, got {other:?}"),
        }
    }

    #[test]
    fn presets_expand_to_sample_values() {
        let c = ScenarioConfig::from_json(r#"{"preset": "NV1"}"#).unwrap();
        assert_eq!((c.t2_echo_s, c.rho_nv_per_cm3), (8.3e-5, 1.1e17));
        let c = ScenarioConfig::from_json(r#"{"preset": "NV3"}"#).unwrap();
        assert_eq!((c.t2_echo_s, c.rho_nv_per_cm3), (3.1e-4, 1.8e18));
        assert_eq!(c.m, 1.25e6);
        assert_eq!(c.n_dd, 63);
        assert_eq!(c.gamma_convention, GammaConvention::Cyclic);
    }

    #[test]
    fn empty_object_is_nv1_defaults() {
        assert_eq!(
            ScenarioConfig::from_json("{}").unwrap(),
            ScenarioConfig::default()
        );
        let s = ScenarioConfig::default().z_min;
        assert_eq!(
            (s.start_m, s.stop_m, s.points, s.spacing),
            (1e-7, 2e-6, 50, Spacing::Log)
        );
    }

    #[test]
    fn custom_preset_names_missing_fields() {
        let p = problems(r#"{"preset": "custom", "t2_echo_s": 1e-4}"#);
        assert_eq!(p.len(), 1);
        assert!(p[0].contains("rho_nv_per_cm3"), "{p:?}");
    }

    #[test]
    fn all_violations_are_listed() {
        let p = problems(
            r#"{"preset": "NV2", "t2_echo_s": 1e-4, "n_dd": 4, "M": 0,
                "gamma_convention": "radians", "z_min": {"start_m": 2e-6, "stop_m": 1e-6, "points": 1}}"#,
        );
        for key in [
            "t2_echo_s",
            "n_dd",
            "M",
            "gamma_convention",
            "start_m",
            "points",
        ] {
            assert!(
                p.iter().any(|s| s.contains(key)),
                "{key} missing from {p:?}"
            );
        }
    }

    #[test]
    fn unknown_keys_are_rejected_with_position() {
        let p = problems("{\n  \"preset\": \"NV1\",\n  \"nuclei\": 3\n}");
        assert!(p[0].contains("nuclei") && p[0].contains("line 3"), "{p:?}");
        let p = problems(r#"{"z_min": {"begin": 1e-7}}"#);
        assert!(p[0].contains("begin"));
    }

    #[test]
    fn sweep_endpoints_are_exact() {
        for spacing in [Spacing::Linear, Spacing::Log] {
            let s = Sweep {
                start_m: 1e-7,
                stop_m: 2e-6,
                points: 7,
                spacing,
            };
            let v = s.values();
            assert_eq!(v.len(), 7);
            assert_eq!((v[0], v[6]), (1e-7, 2e-6));
            assert!(v.windows(2).all(|w| w[0] < w[1]));
        }
    }
}

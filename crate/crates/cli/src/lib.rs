//! Sweeps, optimizer summaries and validation reports for the `nvnmr`
//! binary. Each command returns its output as a string so the binary only
//! decides where it goes.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::fmt::Write as _;

use rayon::prelude::*;
use thiserror::Error;

use nvnmr_core::optimize::{derive_constants, minimize_geometry, ConstantsMode, ReductionParams};
use nvnmr_core::signal::{
    t_detect_dd_published, t_detect_ent_published, C_DD_PUBLISHED, C_ENT_PUBLISHED,
};
use nvnmr_core::{
    DiscrepancyReport, EnsembleGeometry, FormVariant, GammaConvention, GeometryVariant, ReportEntry,
};

pub mod config;
pub mod validate;

pub use config::{Preset, ScenarioConfig, Spacing, Sweep};
pub use validate::{run_validation, Depth};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid configuration:\n  {}", .0.join("\n  "))]
    Config(Vec<String>),

    #[error(transparent)]
    Core(#[from] nvnmr_core::Error),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            _ => 1,
        }
    }
}

/// Dimensionless geometries at which the sweep is evaluated.
pub const SEP_GEOMETRY: (f64, f64) = (1.16, 1.29);
pub const ENT_GEOMETRY: (f64, f64) = (5.05, 4.96);

/// Pulse counts of the `--n-dd-sweep` table.
pub const N_DD_SWEEP: [u32; 4] = [3, 15, 63, 255];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectRow {
    pub z_min_m: f64,
    pub t_detect_dd_s: f64,
    pub t_detect_ent_s: f64,
}

impl DetectRow {
    pub fn ratio(&self) -> f64 {
        self.t_detect_dd_s / self.t_detect_ent_s
    }
}

/// Both published detection times at one standoff distance.
pub fn detect_row(cfg: &ScenarioConfig, z_min: f64, n_dd: u32) -> Result<DetectRow, CliError> {
    let scenario = cfg.scenario()?;
    let rho = cfg.rho_nv_per_m3();
    let sep = EnsembleGeometry::from_dimensionless(z_min, SEP_GEOMETRY.0, SEP_GEOMETRY.1, rho)?;
    let ent = EnsembleGeometry::from_dimensionless(z_min, ENT_GEOMETRY.0, ENT_GEOMETRY.1, rho)?;
    Ok(DetectRow {
        z_min_m: z_min,
        t_detect_dd_s: t_detect_dd_published(&scenario, &sep, cfg.t2_echo_s, cfg.m, n_dd)?.t_detect,
        t_detect_ent_s: t_detect_ent_published(&scenario, &ent, cfg.t2_echo_s, cfg.m)?.t_detect,
    })
}

fn metadata(cfg: &ScenarioConfig, n_dd: &str) -> String {
    format!(
        "# nvnmr detect-time\n\
         # preset={} gamma_convention={} M={:e} n_dd={} t2_echo_s={:e} rho_nv_per_cm3={:e}\n\
         # gamma_target_hz_per_t={:e} gamma_probe_hz_per_t={:e} coupling_G={:.6e}\n\
         # published closed forms; sep geometry r~={} z~={}, ent geometry r~={} z~={}\n",
        cfg.preset.name(),
        cfg.gamma_convention.name(),
        cfg.m,
        n_dd,
        cfg.t2_echo_s,
        cfg.rho_nv_per_cm3,
        cfg.gamma_target_hz_per_t,
        cfg.gamma_probe_hz_per_t,
        cfg.scenario().map(|s| s.coupling_g()).unwrap_or(f64::NAN),
        SEP_GEOMETRY.0,
        SEP_GEOMETRY.1,
        ENT_GEOMETRY.0,
        ENT_GEOMETRY.1,
    )
}

fn rows(cfg: &ScenarioConfig, n_dd: u32) -> Result<Vec<DetectRow>, CliError> {
    cfg.z_min
        .values()
        .par_iter()
        .map(|&z| detect_row(cfg, z, n_dd))
        .collect()
}

fn write_row(out: &mut String, prefix: &str, r: &DetectRow) {
    let _ = writeln!(
        out,
        "{prefix}{:.6e},{:.6e},{:.6e},{:.6e}",
        r.z_min_m,
        r.t_detect_dd_s,
        r.t_detect_ent_s,
        r.ratio()
    );
}

/// CSV `z_min_m,t_detect_dd_s,t_detect_ent_s,ratio`, one row per sweep point.
pub fn detect_time_csv(cfg: &ScenarioConfig) -> Result<String, CliError> {
    let mut out = metadata(cfg, &cfg.n_dd.to_string());
    out.push_str("z_min_m,t_detect_dd_s,t_detect_ent_s,ratio\n");
    for r in rows(cfg, cfg.n_dd)? {
        write_row(&mut out, "", &r);
    }
    Ok(out)
}

/// The sweep repeated for each pulse count of [`N_DD_SWEEP`] on the NV3 sample.
pub fn n_dd_sweep_csv(cfg: &ScenarioConfig) -> Result<String, CliError> {
    let nv3 = ScenarioConfig::from_preset(Preset::NV3)?;
    let cfg = ScenarioConfig {
        preset: Preset::NV3,
        t2_echo_s: nv3.t2_echo_s,
        rho_nv_per_cm3: nv3.rho_nv_per_cm3,
        ..cfg.clone()
    };
    let counts: Vec<String> = N_DD_SWEEP.iter().map(u32::to_string).collect();
    let mut out = metadata(&cfg, &counts.join(";"));
    out.push_str("n_dd,z_min_m,t_detect_dd_s,t_detect_ent_s,ratio\n");
    for n in N_DD_SWEEP {
        for r in rows(&cfg, n)? {
            write_row(&mut out, &format!("{n},"), &r);
        }
    }
    Ok(out)
}

pub fn optimize_geometry_report(
    variant: GeometryVariant,
    form: FormVariant,
) -> Result<String, CliError> {
    let out = minimize_geometry(variant, form)?;
    let mut s = String::new();
    let _ = writeln!(
        s,
        "variant,f_ent_form,r_tilde,z_tilde,objective,iterations,converged,multimodal"
    );
    let _ = writeln!(
        s,
        "{},{},{:.4},{:.4},{:.6e},{},{},{}",
        variant.name(),
        form.name(),
        out.argmin[0],
        out.argmin[1],
        out.min_value,
        out.iterations,
        out.converged,
        out.multimodal
    );
    Ok(s)
}

/// Re-derived prefactors in both timing modes next to the published ones.
pub fn constants_report(cfg: &ScenarioConfig) -> Result<DiscrepancyReport, CliError> {
    let scenario = cfg.scenario()?;
    let p = ReductionParams {
        t2_echo: cfg.t2_echo_s,
        coupling_g: scenario.dynamics_coupling(),
        n_dd: cfg.n_dd,
        omega_target: cfg.omega_target_rad_per_s,
        convention: cfg.gamma_convention,
    };
    let mut report = DiscrepancyReport::new();
    report.push(ReportEntry::info(
        "c_DD published",
        Some(C_DD_PUBLISHED),
        None,
        "used by detect-time",
    ));
    report.push(ReportEntry::info(
        "c_ent published",
        Some(C_ENT_PUBLISHED),
        None,
        "used by detect-time",
    ));
    for mode in [ConstantsMode::Resonance, ConstantsMode::FreeTau] {
        report.extend(derive_constants(&p, mode)?.report);
    }
    if cfg.gamma_convention == GammaConvention::Angular {
        report.push(ReportEntry::info(
            "convention",
            None,
            None,
            "angular G: re-derived constants differ from the published ones by (2 pi)^4",
        ));
    }
    Ok(report)
}

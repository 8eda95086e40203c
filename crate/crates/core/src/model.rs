//! Physical constants, probe geometry and the per-pair dipole coefficients.

use std::f64::consts::PI;

use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Vacuum permeability, CODATA 2018 (T·m·A⁻¹).
pub const MU0: f64 = 1.256_637_062_12e-6;
/// Reduced Planck constant (J·s).
pub const HBAR: f64 = 1.054_571_817e-34;

/// Proton gyromagnetic ratio, 2π × 42 MHz·T⁻¹.
pub const PROTON_GAMMA: f64 = 2.0 * PI * 42.0e6;
/// NV electron-spin gyromagnetic ratio, 2π × 28.024 GHz·T⁻¹.
pub const NV_GAMMA: f64 = 2.0 * PI * 28.024e9;
/// Default nuclear Larmor frequency: protons in a 0.1 T bias field.
pub const DEFAULT_OMEGA_TARGET: f64 = PROTON_GAMMA * 0.1;
/// Default probe resonance used only to label the rotating frame: NV at 2.87 GHz.
pub const DEFAULT_OMEGA_PROBE: f64 = 2.0 * PI * 2.87e9;

/// Nuclear spin count of the reference sample (1.0×10²² cm⁻³ in a 50 nm cube).
pub const REFERENCE_NUCLEI: f64 = 1.25e6;
/// Pulse count used for the separable reference curves.
pub const REFERENCE_N_DD: u32 = 63;

pub fn per_cm3_to_per_m3(rho: f64) -> f64 {
    rho * 1.0e6
}

pub fn per_m3_to_per_cm3(rho: f64) -> f64 {
    rho * 1.0e-6
}

/// How the coupling `G` is expressed when it enters the published
/// detection-time closed forms.
///
/// `Angular` keeps `G` in rad·s⁻¹·m³. `Cyclic` expresses it as a cyclic
/// frequency (Hz·m³), i.e. divides the angular value by 2π once.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GammaConvention {
    Angular,
    Cyclic,
}

impl GammaConvention {
    pub fn name(self) -> &'static str {
        match self {
            GammaConvention::Angular => "angular",
            GammaConvention::Cyclic => "cyclic",
        }
    }

    /// Factor applied to the angular coupling.
    pub fn scale(self) -> f64 {
        match self {
            GammaConvention::Angular => 1.0,
            GammaConvention::Cyclic => 1.0 / (2.0 * PI),
        }
    }
}

impl std::str::FromStr for GammaConvention {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "angular" => Ok(GammaConvention::Angular),
            "cyclic" => Ok(GammaConvention::Cyclic),
            other => Err(Error::domain(format!(
                "unknown gamma convention {other:?} (expected angular or cyclic)"
            ))),
        }
    }
}

/// Physical constants of one sensing scenario.
///
/// Gyromagnetic ratios are stored as angular frequencies per tesla. The
/// coupling is cached at construction; the fields are private so the cache
/// can never drift from its inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct PhysicalScenario {
    gamma_target: f64,
    gamma_probe: f64,
    gamma_convention: GammaConvention,
    omega_target: f64,
    omega_probe: f64,
    coupling_g: f64,
}

impl PhysicalScenario {
    pub fn new(
        gamma_target: f64,
        gamma_probe: f64,
        gamma_convention: GammaConvention,
        omega_target: f64,
    ) -> Result<Self> {
        if !(omega_target > 0.0 && omega_target.is_finite()) {
            return Err(Error::domain(format!(
                "omega_target must be positive, got {omega_target}"
            )));
        }
        let coupling_g = coupling_constant(gamma_target, gamma_probe, gamma_convention)?;
        Ok(Self {
            gamma_target,
            gamma_probe,
            gamma_convention,
            omega_target,
            omega_probe: DEFAULT_OMEGA_PROBE,
            coupling_g,
        })
    }

    /// Protons sensed by NV electron spins.
    pub fn proton_nv(gamma_convention: GammaConvention) -> Self {
        Self::new(
            PROTON_GAMMA,
            NV_GAMMA,
            gamma_convention,
            DEFAULT_OMEGA_TARGET,
        )
        .expect("reference constants are valid")
    }

    pub fn with_convention(&self, gamma_convention: GammaConvention) -> Self {
        Self::new(
            self.gamma_target,
            self.gamma_probe,
            gamma_convention,
            self.omega_target,
        )
        .expect("inputs already validated")
        .with_omega_probe(self.omega_probe)
    }

    pub fn with_omega_target(&self, omega_target: f64) -> Result<Self> {
        Ok(Self::new(
            self.gamma_target,
            self.gamma_probe,
            self.gamma_convention,
            omega_target,
        )?
        .with_omega_probe(self.omega_probe))
    }

    /// The probe frequency only labels the rotating frame and never enters
    /// a computed quantity.
    pub fn with_omega_probe(mut self, omega_probe: f64) -> Self {
        self.omega_probe = omega_probe;
        self
    }

    pub fn gamma_target(&self) -> f64 {
        self.gamma_target
    }

    pub fn gamma_probe(&self) -> f64 {
        self.gamma_probe
    }

    pub fn gamma_convention(&self) -> GammaConvention {
        self.gamma_convention
    }

    pub fn omega_target(&self) -> f64 {
        self.omega_target
    }

    pub fn omega_probe(&self) -> f64 {
        self.omega_probe
    }

    /// Coupling under the scenario's convention, as used by the published
    /// detection-time closed forms.
    pub fn coupling_g(&self) -> f64 {
        self.coupling_g
    }

    /// Coupling in rad·s⁻¹·m³. This is the value that multiplies the
    /// interaction Hamiltonian, whatever the reporting convention.
    pub fn dynamics_coupling(&self) -> f64 {
        self.coupling_g / self.gamma_convention.scale()
    }
}

/// `G = μ₀ ħ γ_T γ_P / 16π`, rescaled by the convention.
pub fn coupling_constant(
    gamma_target: f64,
    gamma_probe: f64,
    convention: GammaConvention,
) -> Result<f64> {
    if !(gamma_target > 0.0 && gamma_target.is_finite()) {
        return Err(Error::domain(format!(
            "gamma_target must be positive, got {gamma_target}"
        )));
    }
    if !(gamma_probe > 0.0 && gamma_probe.is_finite()) {
        return Err(Error::domain(format!(
            "gamma_probe must be positive, got {gamma_probe}"
        )));
    }
    Ok(MU0 * HBAR * gamma_target * gamma_probe / (16.0 * PI) * convention.scale())
}

/// Probe coherence and density of one NV sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NvPreset {
    pub name: &'static str,
    /// Hahn-echo dephasing time (s).
    pub t2_echo: f64,
    /// Probe density (cm⁻³).
    pub rho_nv_per_cm3: f64,
}

impl NvPreset {
    pub fn rho_nv(&self) -> f64 {
        per_cm3_to_per_m3(self.rho_nv_per_cm3)
    }

    pub fn by_name(name: &str) -> Option<NvPreset> {
        PRESETS.iter().copied().find(|p| p.name == name)
    }
}

pub const NV1: NvPreset = NvPreset {
    name: "NV1",
    t2_echo: 8.3e-5,
    rho_nv_per_cm3: 1.1e17,
};

pub const NV2: NvPreset = NvPreset {
    name: "NV2",
    t2_echo: 4.5e-6,
    rho_nv_per_cm3: 1.1e18,
};

pub const NV3: NvPreset = NvPreset {
    name: "NV3",
    t2_echo: 3.1e-4,
    rho_nv_per_cm3: 1.8e18,
};

pub const PRESETS: [NvPreset; 3] = [NV1, NV2, NV3];

/// Half-cylinder of probes `{x ≥ 0, x² + y² ≤ r_max², z_min ≤ z ≤ z_max}`
/// above a nuclear sample at the origin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnsembleGeometry {
    z_min: f64,
    z_max: f64,
    r_max: f64,
    rho_nv: f64,
}

impl EnsembleGeometry {
    /// `rho_nv` in m⁻³.
    pub fn new(z_min: f64, z_max: f64, r_max: f64, rho_nv: f64) -> Result<Self> {
        let mut problems = Vec::new();
        if !(z_min > 0.0) {
            problems.push(format!("z_min must be positive (got {z_min})"));
        }
        if !(z_max >= z_min) {
            problems.push(format!(
                "z_max must be at least z_min (got {z_max} < {z_min})"
            ));
        }
        if !(r_max > 0.0) {
            problems.push(format!("r_max must be positive (got {r_max})"));
        }
        if !(rho_nv > 0.0) {
            problems.push(format!("rho_nv must be positive (got {rho_nv})"));
        }
        if !problems.is_empty() {
            return Err(Error::domain(problems.join("; ")));
        }
        Ok(Self {
            z_min,
            z_max,
            r_max,
            rho_nv,
        })
    }

    /// Geometry from the standoff and the dimensionless ratios
    /// `r̃ = r_max / z_min`, `z̃ = z_max / z_min`.
    pub fn from_dimensionless(z_min: f64, r_tilde: f64, z_tilde: f64, rho_nv: f64) -> Result<Self> {
        Self::new(z_min, z_tilde * z_min, r_tilde * z_min, rho_nv)
    }

    pub fn z_min(&self) -> f64 {
        self.z_min
    }

    pub fn z_max(&self) -> f64 {
        self.z_max
    }

    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    pub fn rho_nv(&self) -> f64 {
        self.rho_nv
    }

    pub fn r_tilde(&self) -> f64 {
        self.r_max / self.z_min
    }

    pub fn z_tilde(&self) -> f64 {
        self.z_max / self.z_min
    }

    pub fn volume(&self) -> f64 {
        0.5 * PI * self.r_max * self.r_max * (self.z_max - self.z_min)
    }

    pub fn contains(&self, p: &Vector3<f64>) -> bool {
        p.x >= 0.0
            && p.x * p.x + p.y * p.y <= self.r_max * self.r_max * (1.0 + 1e-12)
            && p.z >= self.z_min
            && p.z <= self.z_max
    }

    pub fn with_rho(&self, rho_nv: f64) -> Result<Self> {
        Self::new(self.z_min, self.z_max, self.r_max, rho_nv)
    }
}

/// Continuum probe count `L = ρ_NV · (π/2) r_max² (z_max − z_min)`.
pub fn probe_count(geom: &EnsembleGeometry) -> f64 {
    geom.rho_nv * geom.volume()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SiteRole {
    Nuclear,
    Probe,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpinSite {
    pub position: Vector3<f64>,
    pub role: SiteRole,
}

impl SpinSite {
    pub fn nuclear(x: f64, y: f64, z: f64) -> Self {
        Self {
            position: Vector3::new(x, y, z),
            role: SiteRole::Nuclear,
        }
    }

    pub fn probe(x: f64, y: f64, z: f64) -> Self {
        Self {
            position: Vector3::new(x, y, z),
            role: SiteRole::Probe,
        }
    }
}

/// Secular dipole coefficients of one nucleus-probe pair (m⁻³).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DipoleCoefficients {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

/// `A = −3xz/r⁵`, `B = −3yz/r⁵`, `C = (1 − 3z²/r²)/r³` for the relative
/// vector `rel`.
pub fn dipole_coefficients(rel: &Vector3<f64>) -> Result<DipoleCoefficients> {
    let r2 = rel.norm_squared();
    if r2 == 0.0 || !r2.is_finite() {
        return Err(Error::Singularity {
            position: [rel.x, rel.y, rel.z],
        });
    }
    let r = r2.sqrt();
    let r3 = r2 * r;
    let r5 = r3 * r2;
    Ok(DipoleCoefficients {
        a: -3.0 * rel.x * rel.z / r5,
        b: -3.0 * rel.y * rel.z / r5,
        c: (1.0 - 3.0 * rel.z * rel.z / r2) / r3,
    })
}

/// Coefficients for the pair `(nucleus k, probe j)`, taken on `r_kj = r_k − r_j`.
pub fn pair_coefficients(nucleus: &SpinSite, probe: &SpinSite) -> Result<DipoleCoefficients> {
    dipole_coefficients(&(nucleus.position - probe.position)).map_err(|e| match e {
        Error::Singularity { .. } => Error::Singularity {
            position: [probe.position.x, probe.position.y, probe.position.z],
        },
        other => other,
    })
}

/// `n` probe sites drawn uniformly from the half-cylinder.
pub fn sample_probe_sites(geom: &EnsembleGeometry, n: usize, seed: u64) -> Vec<SpinSite> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            // radial CDF ∝ s², so s = r_max·√u
            let s = geom.r_max * rng.random::<f64>().sqrt();
            let phi = PI * (rng.random::<f64>() - 0.5);
            let z = geom.z_min + (geom.z_max - geom.z_min) * rng.random::<f64>();
            SpinSite::probe((s * phi.cos()).max(0.0), s * phi.sin(), z)
        })
        .collect()
}

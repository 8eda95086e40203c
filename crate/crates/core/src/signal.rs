//! Closed-form protocol observables and the SNR / detection-time chain.
//!
//! Observables are second order in `G/ω_T`. Dephasing enters as the
//! attenuation `e^{−(t/T₂)³}` of the probe coherence: on the separable
//! readout with `T₂ᴰᴰ = T₂ᵉᶜʰᵒ n_DD^{2/3}`, on the GHZ readout with the
//! collective factor `e^{−L(2τ/T₂ᵉᶜʰᵒ)³}`.
//!
//! A pulse train of `n_DD + 1` intervals forms `N = (n_DD + 1)/2` echo blocks.
//! The nuclear phase advances by `ω_T τ` per interval, so the block signals add
//! with the Dirichlet weight `sin(N ω_T τ)/sin(ω_T τ)`, which tends to `±N` at
//! the resonance `τ = π/ω_T`.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::model::{EnsembleGeometry, PhysicalScenario};

/// Prefactor of the separable detection time in the cyclic-G normalization.
pub const C_DD_PUBLISHED: f64 = 0.0536;
/// Prefactor of the entangled detection time in the cyclic-G normalization.
pub const C_ENT_PUBLISHED: f64 = 0.0107;

/// `G/ω_T`-type ratio above which the second-order formulas are flagged.
pub const PERTURBATIVE_LIMIT: f64 = 1e-2;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProtocolParams {
    /// Pulse interval τ (s).
    pub tau: f64,
    /// Odd π-pulse count.
    pub n_dd: u32,
    /// Nuclear Larmor frequency (rad·s⁻¹).
    pub omega_target: f64,
    /// Hahn-echo dephasing time (s).
    pub t2_echo: f64,
    /// Probe count `L` (continuum value allowed).
    pub probes: f64,
    /// Nucleus count `M`.
    pub nuclei: f64,
    /// Coupling in rad·s⁻¹·m³.
    pub coupling_g: f64,
    /// Total measurement budget `T` (s), if any.
    pub total_time: Option<f64>,
}

impl ProtocolParams {
    /// Resonant pulse interval `τ = π/ω_T` for `scenario`, with the Hamiltonian coupling.
    pub fn resonant(
        scenario: &PhysicalScenario,
        t2_echo: f64,
        n_dd: u32,
        probes: f64,
        nuclei: f64,
    ) -> Self {
        Self {
            tau: PI / scenario.omega_target(),
            n_dd,
            omega_target: scenario.omega_target(),
            t2_echo,
            probes,
            nuclei,
            coupling_g: scenario.dynamics_coupling(),
            total_time: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            problems.push(format!("tau must be positive (got {})", self.tau));
        }
        if self.n_dd == 0 || self.n_dd % 2 == 0 {
            problems.push(format!(
                "n_dd must be odd and at least 1 (got {})",
                self.n_dd
            ));
        }
        if !(self.omega_target > 0.0) {
            problems.push(format!(
                "omega_target must be positive (got {})",
                self.omega_target
            ));
        }
        if !(self.t2_echo > 0.0) {
            problems.push(format!("t2_echo must be positive (got {})", self.t2_echo));
        }
        if !(self.probes > 0.0) {
            problems.push(format!(
                "probe count must be positive (got {})",
                self.probes
            ));
        }
        if !(self.nuclei >= 1.0) {
            problems.push(format!(
                "nucleus count must be at least 1 (got {})",
                self.nuclei
            ));
        }
        if !(self.coupling_g >= 0.0) {
            problems.push(format!(
                "coupling must be non-negative (got {})",
                self.coupling_g
            ));
        }
        if let Some(t) = self.total_time {
            if !(t >= self.interaction_time()) {
                problems.push(format!(
                    "total_time {t} s is shorter than one interaction time {} s",
                    self.interaction_time()
                ));
            }
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Domain(problems.join("; ")))
        }
    }

    /// `t = (n_DD + 1) τ`.
    pub fn interaction_time(&self) -> f64 {
        (self.n_dd as f64 + 1.0) * self.tau
    }

    pub fn echo_blocks(&self) -> u32 {
        self.n_dd.div_ceil(2)
    }

    /// `N_m = T / t` for the separable protocol.
    pub fn measurements(&self) -> Option<f64> {
        self.total_time.map(|t| t / self.interaction_time())
    }
}

/// Which separable expectation value to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum SeparableForm {
    /// Single-qubit attenuation `e^{−(t/T₂ᴰᴰ)³}` and the echo-block
    /// Dirichlet ratio `sin(N ω τ)/sin(ω τ)`.
    #[default]
    Rederived,
    /// Attenuation `e^{−2(t/T₂ᴰᴰ)³}` and ratio `sin(ω t)/sin(ω τ)`, as printed.
    Printed,
}

/// A second-order observable with validity flags.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observable {
    pub value: f64,
    /// The perturbation ratio exceeded [`PERTURBATIVE_LIMIT`].
    pub non_perturbative: bool,
    /// The value left `[0, 1]` and was clamped.
    pub clamped: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Provenance {
    PublishedFormula,
    RederivedNumeric,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnrBreakdown {
    pub signal: f64,
    pub noise: f64,
    pub snr: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectionResult {
    /// Signal, noise and SNR at the supplied measurement count; absent for
    /// the published closed forms, which only give the detection time.
    pub breakdown: Option<SnrBreakdown>,
    /// Budget at which SNR = 1 (s); infinite when there is no signal.
    pub t_detect: f64,
    pub provenance: Provenance,
}

/// `T₂ᴰᴰ = T₂ᵉᶜʰᵒ · n_DD^{2/3}`.
pub fn t2_dd(t2_echo: f64, n_dd: u32) -> Result<f64> {
    if !(t2_echo > 0.0) {
        return Err(Error::Domain(format!(
            "t2_echo must be positive, got {t2_echo}"
        )));
    }
    if n_dd == 0 || n_dd % 2 == 0 {
        return Err(Error::Domain(format!(
            "n_dd must be odd and at least 1, got {n_dd}"
        )));
    }
    Ok(t2_echo * (n_dd as f64).powf(2.0 / 3.0))
}

/// `sin(n x)/sin(x)` through the Chebyshev recurrence `U_{n−1}(cos x)`.
///
/// Finite everywhere, including `x = kπ` where it equals `n·(±1)^{k(n−1)}`.
pub fn dirichlet_ratio(n: u32, x: f64) -> f64 {
    match n {
        0 => 0.0,
        1 => 1.0,
        _ => {
            let c = x.cos();
            let (mut prev, mut cur) = (1.0, 2.0 * c);
            for _ in 2..n {
                let next = 2.0 * c * cur - prev;
                prev = cur;
                cur = next;
            }
            cur
        }
    }
}

fn decay_argument(params: &ProtocolParams) -> Result<f64> {
    Ok(params.interaction_time() / t2_dd(params.t2_echo, params.n_dd)?)
}

/// `⟨M_x⟩` at `G = 0`: `L e^{−(t/T₂ᴰᴰ)³}`.
pub fn mx_baseline(params: &ProtocolParams) -> Result<f64> {
    params.validate()?;
    Ok(params.probes * (-decay_argument(params)?.powi(3)).exp())
}

/// Separable readout deficit factor `32 G²/ω² · sin⁴(ωτ/2) · D²` (per unit Γ).
fn separable_response(params: &ProtocolParams, form: SeparableForm) -> f64 {
    let w = params.omega_target;
    let x = w * params.tau;
    let ratio = match form {
        SeparableForm::Rederived => dirichlet_ratio(params.echo_blocks(), x),
        SeparableForm::Printed => dirichlet_ratio(params.n_dd + 1, x),
    };
    let g = params.coupling_g;
    32.0 * g * g / (w * w) * (0.5 * x).sin().powi(4) * ratio * ratio
}

/// Expectation value of `M_x = Σ_j σ_x,j` after the pulse train.
pub fn expectation_mx(params: &ProtocolParams, gamma_sep: f64) -> Result<Observable> {
    expectation_mx_with(params, gamma_sep, SeparableForm::Rederived)
}

pub fn expectation_mx_with(
    params: &ProtocolParams,
    gamma_sep: f64,
    form: SeparableForm,
) -> Result<Observable> {
    params.validate()?;
    if !(gamma_sep >= 0.0) {
        return Err(Error::Domain(format!(
            "gamma_sep must be non-negative, got {gamma_sep}"
        )));
    }
    let xi = decay_argument(params)?.powi(3);
    let attenuation = match form {
        SeparableForm::Rederived => (-xi).exp(),
        SeparableForm::Printed => (-2.0 * xi).exp(),
    };
    let bracket = params.probes - separable_response(params, form) * gamma_sep;
    let per_pair = (gamma_sep / (params.nuclei * params.probes)).sqrt();
    Ok(Observable {
        value: attenuation * bracket,
        non_perturbative: params.coupling_g * per_pair / params.omega_target > PERTURBATIVE_LIMIT,
        clamped: false,
    })
}

/// Leading-order variance `L (1 − e^{−2(t/T₂ᴰᴰ)³})`.
pub fn variance_mx(params: &ProtocolParams) -> Result<f64> {
    params.validate()?;
    let xi = decay_argument(params)?.powi(3);
    Ok(-params.probes * (-2.0 * xi).exp_m1())
}

/// Collective GHZ dephasing exponent `L (2τ/T₂ᵉᶜʰᵒ)³`.
fn ghz_decay_exponent(params: &ProtocolParams) -> f64 {
    params.probes * (2.0 * params.tau / params.t2_echo).powi(3)
}

/// `p(GHZ)` at `G = 0`: `(1 + e^{−L(2τ/T₂)³})/2`.
pub fn p_ghz_baseline(params: &ProtocolParams) -> Result<f64> {
    params.validate()?;
    Ok(0.5 * (1.0 + (-ghz_decay_exponent(params)).exp()))
}

/// `16 G²/ω² · e^{−L(2τ/T₂)³} · sin⁴(ωτ/2) · Γ_ent`.
fn ghz_deficit(params: &ProtocolParams, gamma_ent: f64) -> f64 {
    let w = params.omega_target;
    let g = params.coupling_g;
    16.0 * g * g / (w * w)
        * (-ghz_decay_exponent(params)).exp()
        * (0.5 * w * params.tau).sin().powi(4)
        * gamma_ent
}

/// Probability of projecting back onto the GHZ state after the spin echo
/// of total length `2τ`.
pub fn p_ghz(params: &ProtocolParams, gamma_ent: f64) -> Result<Observable> {
    params.validate()?;
    if !(gamma_ent >= 0.0) {
        return Err(Error::Domain(format!(
            "gamma_ent must be non-negative, got {gamma_ent}"
        )));
    }
    let w = params.omega_target;
    let g = params.coupling_g;
    let coherence = (-ghz_decay_exponent(params)).exp();
    let raw = 0.5 * (1.0 + coherence) - ghz_deficit(params, gamma_ent);
    let clamped = !(0.0..=1.0).contains(&raw);
    let amplitude = (gamma_ent / params.nuclei).sqrt();
    Ok(Observable {
        value: raw.clamp(0.0, 1.0),
        non_perturbative: clamped || g * amplitude / w > PERTURBATIVE_LIMIT,
        clamped,
    })
}

fn check_measurements(n_m: f64) -> Result<()> {
    if !(n_m >= 1.0 && n_m.is_finite()) {
        return Err(Error::Domain(format!(
            "measurement count must be at least 1, got {n_m}"
        )));
    }
    Ok(())
}

fn detection_time(f: Result<f64>, probes: f64, gamma: f64) -> Result<f64> {
    match f {
        Ok(f) => Ok(if gamma > 0.0 {
            f * probes / (gamma * gamma)
        } else {
            f64::INFINITY
        }),
        Err(Error::Divergence(_)) => Ok(f64::INFINITY),
        Err(e) => Err(e),
    }
}

/// SNR of the separable protocol after `n_m` repetitions.
pub fn snr_dd(params: &ProtocolParams, gamma_sep: f64, n_m: f64) -> Result<DetectionResult> {
    check_measurements(n_m)?;
    let baseline = mx_baseline(params)?;
    let mx = expectation_mx(params, gamma_sep)?;
    let var = variance_mx(params)?;
    if var <= 0.0 {
        return Err(Error::Degenerate(
            "zero readout variance (interaction time too short for the dephasing model)".into(),
        ));
    }
    // the deficit is evaluated directly; subtracting two O(L) numbers would
    // cancel most of its digits
    let attenuation = baseline / params.probes;
    let signal =
        (attenuation * separable_response(params, SeparableForm::Rederived) * gamma_sep).abs();
    debug_assert!((signal - (baseline - mx.value).abs()).abs() <= 1e-9 * params.probes);
    let noise = (var / n_m).sqrt();
    Ok(DetectionResult {
        breakdown: Some(SnrBreakdown {
            signal,
            noise,
            snr: signal / noise,
        }),
        t_detect: detection_time(f_dd(params.tau, params), params.probes, gamma_sep)?,
        provenance: Provenance::RederivedNumeric,
    })
}

/// SNR of the GHZ protocol after `n_m` repetitions.
pub fn snr_ghz(params: &ProtocolParams, gamma_ent: f64, n_m: f64) -> Result<DetectionResult> {
    check_measurements(n_m)?;
    let baseline = p_ghz_baseline(params)?;
    let observable = p_ghz(params, gamma_ent)?;
    let p = observable.value;
    let var = p * (1.0 - p);
    if var <= 0.0 {
        return Err(Error::Degenerate(
            "GHZ outcome is deterministic (no projection noise)".into(),
        ));
    }
    let signal = if observable.clamped {
        (baseline - p).abs()
    } else {
        ghz_deficit(params, gamma_ent)
    };
    let noise = (var / n_m).sqrt();
    let tau_bar = params.tau * params.probes.cbrt();
    Ok(DetectionResult {
        breakdown: Some(SnrBreakdown {
            signal,
            noise,
            snr: signal / noise,
        }),
        t_detect: detection_time(f_ent(tau_bar, params), params.probes, gamma_ent)?,
        provenance: Provenance::RederivedNumeric,
    })
}

fn f_pulse_train(tau: f64, n_dd: u32, omega: f64, t2: f64, g: f64) -> Result<f64> {
    if !(tau > 0.0) {
        return Err(Error::Domain(format!("tau must be positive, got {tau}")));
    }
    let t = (n_dd as f64 + 1.0) * tau;
    let x = t / t2_dd(t2, n_dd)?;
    let phase = omega * tau;
    let sin_half = (0.5 * phase).sin();
    let ratio = dirichlet_ratio(n_dd.div_ceil(2), phase);
    let blocks = n_dd.div_ceil(2) as f64;
    let response = sin_half.powi(8) * ratio.powi(4);
    // zeros of the filter only come out as rounding residue in floating point
    if sin_half.abs() < 1e-12 || ratio.abs() < 1e-12 * blocks || !response.is_finite() {
        return Err(Error::Divergence(format!(
            "no signal at ω_T τ = {phase} (zero of the echo filter)"
        )));
    }
    let scale = omega * omega / (32.0 * g * g);
    Ok(t * (2.0 * x.powi(3)).exp_m1() / response * scale * scale)
}

/// `f_DD(τ)`: the factor with `T_d = f_DD(τ) · L/Γ_sep²`.
pub fn f_dd(tau: f64, params: &ProtocolParams) -> Result<f64> {
    f_pulse_train(
        tau,
        params.n_dd,
        params.omega_target,
        params.t2_echo,
        params.coupling_g,
    )
}

/// `f_ent(τ̄)` in the barred variables `τ̄ = L^{1/3} τ`, `ω̄ = ω_T / L^{1/3}`.
/// It is `f_DD` of a single echo evaluated at `(τ̄, ω̄)`.
pub fn f_ent(tau_bar: f64, params: &ProtocolParams) -> Result<f64> {
    let omega_bar = params.omega_target / params.probes.cbrt();
    f_pulse_train(tau_bar, 1, omega_bar, params.t2_echo, params.coupling_g)
}

/// Infimum of `f_DD` over interaction time with `τ` held at resonance:
/// `π⁴ / (32 n_DD² T₂ᵉᶜʰᵒ³ G⁴)`.
pub fn f_dd_resonant_infimum(n_dd: u32, t2_echo: f64, g: f64) -> f64 {
    PI.powi(4) / (32.0 * (n_dd as f64).powi(2) * t2_echo.powi(3) * g.powi(4))
}

fn check_published(t2_echo: f64, m: f64) -> Result<()> {
    if !(t2_echo > 0.0) {
        return Err(Error::Domain(format!(
            "t2_echo must be positive, got {t2_echo}"
        )));
    }
    if !(m >= 1.0) {
        return Err(Error::Domain(format!(
            "nucleus count must be at least 1, got {m}"
        )));
    }
    Ok(())
}

/// `T_d = c_DD / (T₂³ G⁴) · z_min⁹ / (ρ M²) · n_DD⁻²` with `G` in the
/// scenario's convention.
pub fn t_detect_dd_published(
    scenario: &PhysicalScenario,
    geom: &EnsembleGeometry,
    t2_echo: f64,
    m: f64,
    n_dd: u32,
) -> Result<DetectionResult> {
    check_published(t2_echo, m)?;
    t2_dd(t2_echo, n_dd)?;
    let g = scenario.coupling_g();
    let t = C_DD_PUBLISHED / (t2_echo.powi(3) * g.powi(4)) * geom.z_min().powi(9)
        / (geom.rho_nv() * m * m)
        / (n_dd as f64).powi(2);
    Ok(DetectionResult {
        breakdown: None,
        t_detect: t,
        provenance: Provenance::PublishedFormula,
    })
}

/// `T_d = c_ent / (T₂³ G⁴) · z_min³ / (ρ³ M²)`.
pub fn t_detect_ent_published(
    scenario: &PhysicalScenario,
    geom: &EnsembleGeometry,
    t2_echo: f64,
    m: f64,
) -> Result<DetectionResult> {
    check_published(t2_echo, m)?;
    let g = scenario.coupling_g();
    let t = C_ENT_PUBLISHED / (t2_echo.powi(3) * g.powi(4)) * geom.z_min().powi(3)
        / (geom.rho_nv().powi(3) * m * m);
    Ok(DetectionResult {
        breakdown: None,
        t_detect: t,
        provenance: Provenance::PublishedFormula,
    })
}

/// Separable over entangled detection time, `(c_DD/c_ent) z_min⁶ ρ² / n_DD²`.
/// Coupling, coherence time and nucleus count cancel.
pub fn t_detect_ratio(geom: &EnsembleGeometry, n_dd: u32) -> Result<f64> {
    if n_dd == 0 || n_dd % 2 == 0 {
        return Err(Error::Domain(format!(
            "n_dd must be odd and at least 1, got {n_dd}"
        )));
    }
    Ok(
        C_DD_PUBLISHED / C_ENT_PUBLISHED * geom.z_min().powi(6) * geom.rho_nv().powi(2)
            / (n_dd as f64).powi(2),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{per_cm3_to_per_m3, GammaConvention, NV1};
    use approx::assert_relative_eq;

    fn params() -> ProtocolParams {
        ProtocolParams {
            tau: 0.7,
            n_dd: 3,
            omega_target: 1.0,
            t2_echo: 20.0,
            probes: 4.0,
            nuclei: 1.0,
            coupling_g: 1e-3,
            total_time: None,
        }
    }

    #[test]
    fn t2_dd_values() {
        assert_eq!(t2_dd(8.3e-5, 1).unwrap(), 8.3e-5);
        // 63^{2/3} = 15.8345
        assert_relative_eq!(t2_dd(3.1e-4, 63).unwrap(), 4.9082e-3, max_relative = 1e-4);
        assert_relative_eq!(t2_dd(8.3e-5, 63).unwrap(), 1.3141e-3, max_relative = 1e-4);
        assert!(matches!(t2_dd(1e-4, 4), Err(Error::Domain(_))));
        assert!(t2_dd(1e-4, 0).is_err());
    }

    #[test]
    fn dirichlet_ratio_matches_direct_division_off_resonance() {
        for n in 1..12 {
            for &x in &[0.3, 1.1, 2.0, 2.9, 4.4] {
                let direct = (n as f64 * x).sin() / x.sin();
                assert_relative_eq!(
                    dirichlet_ratio(n, x),
                    direct,
                    epsilon = 1e-12,
                    max_relative = 1e-10
                );
            }
        }
    }

    #[test]
    fn dirichlet_ratio_resonance_limits() {
        assert_eq!(dirichlet_ratio(4, 0.0), 4.0);
        assert_relative_eq!(dirichlet_ratio(4, PI), -4.0, max_relative = 1e-12);
        assert_relative_eq!(dirichlet_ratio(5, PI), 5.0, max_relative = 1e-12);
        assert_relative_eq!(dirichlet_ratio(32, PI), -32.0, max_relative = 1e-12);
    }

    #[test]
    fn zero_coupling_leaves_baseline() {
        let p = ProtocolParams {
            coupling_g: 0.0,
            ..params()
        };
        let mx = expectation_mx(&p, 3.0).unwrap();
        let xi = (p.interaction_time() / t2_dd(p.t2_echo, p.n_dd).unwrap()).powi(3);
        assert_relative_eq!(mx.value, p.probes * (-xi).exp(), max_relative = 1e-15);
        assert_eq!(mx.value, mx_baseline(&p).unwrap());
        let snr = snr_dd(&p, 3.0, 100.0).unwrap();
        assert_eq!(snr.breakdown.unwrap().snr, 0.0);
        assert!(snr.t_detect.is_infinite());
    }

    #[test]
    fn short_times_recover_probe_count() {
        let p = ProtocolParams {
            tau: 1e-9,
            ..params()
        };
        assert_relative_eq!(
            expectation_mx(&p, 1.0).unwrap().value,
            p.probes,
            max_relative = 1e-12
        );
        assert!(variance_mx(&p).unwrap() < 1e-20);
        assert_relative_eq!(p_ghz(&p, 1.0).unwrap().value, 1.0, max_relative = 1e-12);
    }

    #[test]
    fn variance_limits() {
        let p = params();
        let t2dd = t2_dd(p.t2_echo, p.n_dd).unwrap();
        let at_t2 = ProtocolParams {
            tau: t2dd / (p.n_dd as f64 + 1.0),
            ..p
        };
        assert_relative_eq!(
            variance_mx(&at_t2).unwrap(),
            p.probes * (1.0 - (-2f64).exp()),
            max_relative = 1e-13
        );
        assert_relative_eq!(
            variance_mx(&at_t2).unwrap() / p.probes,
            0.8647,
            epsilon = 1e-4
        );
        let long = ProtocolParams { tau: 1e3, ..p };
        assert_relative_eq!(variance_mx(&long).unwrap(), p.probes, max_relative = 1e-15);
    }

    #[test]
    fn deficit_is_quadratic_in_coupling() {
        let p = params();
        let base = mx_baseline(&p).unwrap();
        let d1 = base - expectation_mx(&p, 2.5).unwrap().value;
        let p2 = ProtocolParams {
            coupling_g: 2.0 * p.coupling_g,
            ..p
        };
        let d2 = base - expectation_mx(&p2, 2.5).unwrap().value;
        assert_relative_eq!(d2, 4.0 * d1, max_relative = 1e-9);

        let g1 = p_ghz_baseline(&p).unwrap() - p_ghz(&p, 2.5).unwrap().value;
        let g2 = p_ghz_baseline(&p).unwrap() - p_ghz(&p2, 2.5).unwrap().value;
        assert_relative_eq!(g2, 4.0 * g1, max_relative = 1e-10);
        let g3 = p_ghz_baseline(&p).unwrap() - p_ghz(&p, 5.0).unwrap().value;
        assert_relative_eq!(g3, 2.0 * g1, max_relative = 1e-10);
    }

    #[test]
    fn ghz_baseline_and_clamping() {
        let p = params();
        let y = p.probes * (2.0 * p.tau / p.t2_echo).powi(3);
        let zero = ProtocolParams {
            coupling_g: 0.0,
            ..p
        };
        assert_relative_eq!(p_ghz(&zero, 9.0).unwrap().value, 0.5 * (1.0 + (-y).exp()));
        let strong = ProtocolParams {
            coupling_g: 1.0,
            tau: PI,
            ..p
        };
        let o = p_ghz(&strong, 10.0).unwrap();
        assert!(o.clamped && o.non_perturbative);
        assert_eq!(o.value, 0.0);
    }

    #[test]
    fn printed_form_differs_at_resonance() {
        let p = ProtocolParams {
            tau: PI,
            ..params()
        };
        let ours = expectation_mx(&p, 1.0).unwrap().value;
        let printed = expectation_mx_with(&p, 1.0, SeparableForm::Printed)
            .unwrap()
            .value;
        assert!((ours - printed).abs() > 1e-6);
    }

    #[test]
    fn snr_follows_square_root_law() {
        let p = params();
        let a = snr_dd(&p, 2.0, 100.0).unwrap().breakdown.unwrap().snr;
        let b = snr_dd(&p, 2.0, 400.0).unwrap().breakdown.unwrap().snr;
        assert_relative_eq!(b, 2.0 * a, max_relative = 1e-14);
        let a = snr_ghz(&p, 2.0, 100.0).unwrap().breakdown.unwrap().snr;
        let b = snr_ghz(&p, 2.0, 400.0).unwrap().breakdown.unwrap().snr;
        assert_relative_eq!(b, 2.0 * a, max_relative = 1e-14);
        assert!(snr_dd(&p, 2.0, 0.5).is_err());
    }

    #[test]
    fn snr_is_unity_at_detection_time() {
        let p = params();
        let gamma = 2.0;
        let t_d = snr_dd(&p, gamma, 1.0).unwrap().t_detect;
        let n_m = t_d / p.interaction_time();
        let r = snr_dd(&p, gamma, n_m).unwrap().breakdown.unwrap();
        assert_relative_eq!(r.snr, 1.0, max_relative = 1e-12);

        // GHZ noise is p(1−p) at the perturbed p; unity holds for the
        // unperturbed variance
        let t_d = snr_ghz(&p, gamma, 1.0).unwrap().t_detect;
        let r = snr_ghz(&p, gamma, t_d / (2.0 * p.tau))
            .unwrap()
            .breakdown
            .unwrap();
        let p0 = p_ghz_baseline(&p).unwrap();
        let p1 = p_ghz(&p, gamma).unwrap().value;
        let correction = (p1 * (1.0 - p1) / (p0 * (1.0 - p0))).sqrt();
        assert_relative_eq!(r.snr * correction, 1.0, max_relative = 1e-12);
        assert_relative_eq!(r.snr, 1.0, max_relative = 1e-3);
    }

    #[test]
    fn zero_time_is_degenerate() {
        let p = ProtocolParams {
            tau: 1e-300,
            ..params()
        };
        assert!(matches!(snr_dd(&p, 1.0, 10.0), Err(Error::Degenerate(_))));
    }

    #[test]
    fn f_ent_is_single_echo_f_dd_in_barred_variables() {
        let p = params();
        let tau_bar = 0.9;
        let barred = ProtocolParams {
            n_dd: 1,
            omega_target: p.omega_target / p.probes.cbrt(),
            ..p
        };
        assert_relative_eq!(
            f_ent(tau_bar, &p).unwrap(),
            f_dd(tau_bar, &barred).unwrap(),
            max_relative = 1e-15
        );
    }

    #[test]
    fn f_dd_diverges_at_filter_zero() {
        let p = params();
        assert!(matches!(
            f_dd(2.0 * PI / p.omega_target, &p),
            Err(Error::Divergence(_))
        ));
        let near = f_dd(2.0 * PI / p.omega_target * (1.0 - 1e-3), &p).unwrap();
        assert!(near > 1e12 * f_dd(PI / p.omega_target, &p).unwrap());
    }

    #[test]
    fn f_dd_at_resonance_approaches_infimum_for_short_trains() {
        // with ω τ = π and x = t/T₂ᴰᴰ → 0, f → π⁴/(32 n² T₂³ G⁴)
        let n = 7;
        let t2 = 1.0;
        let g = 1e-3;
        let x = 1e-3;
        let t = x * t2_dd(t2, n).unwrap();
        let tau = t / (n as f64 + 1.0);
        let p = ProtocolParams {
            tau,
            n_dd: n,
            omega_target: PI / tau,
            t2_echo: t2,
            ..params()
        };
        let p = ProtocolParams { coupling_g: g, ..p };
        assert_relative_eq!(
            f_dd(tau, &p).unwrap(),
            f_dd_resonant_infimum(n, t2, g),
            max_relative = 1e-8
        );
    }

    #[test]
    fn published_detection_times() {
        let s = PhysicalScenario::proton_nv(GammaConvention::Cyclic);
        let rho = per_cm3_to_per_m3(NV1.rho_nv_per_cm3);
        let g = EnsembleGeometry::from_dimensionless(1e-6, 5.05, 4.96, rho).unwrap();
        let ent = t_detect_ent_published(&s, &g, NV1.t2_echo, 1.25e6).unwrap();
        assert_eq!(ent.provenance, Provenance::PublishedFormula);
        assert!((ent.t_detect - 60.0).abs() < 6.0, "{}", ent.t_detect);
        let dd = t_detect_dd_published(&s, &g, NV1.t2_echo, 1.25e6, 63).unwrap();
        assert_relative_eq!(
            dd.t_detect / ent.t_detect,
            t_detect_ratio(&g, 63).unwrap(),
            max_relative = 1e-12
        );
        assert_relative_eq!(
            t_detect_ratio(&g, 63).unwrap(),
            1.5272e7,
            max_relative = 1e-3
        );
        assert_relative_eq!(dd.t_detect, 9.5e8, max_relative = 0.05);
    }
}

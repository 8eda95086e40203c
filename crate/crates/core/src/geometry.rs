//! Geometric factors of the two protocols.
//!
//! The separable protocol accumulates the incoherent sum `Σ_k Σ_j A² + B²`,
//! the GHZ protocol the coherent `Σ_k (Σ_j A)² + (Σ_j B)²`. In the continuum
//! limit both reduce to integrals over the half-cylinder, available here in
//! closed form (`f_*_closed`) and by adaptive quadrature (`quadrature_*`).
//! Dimensionless forms take `z_min = 1`, `r̃ = r_max/z_min`, `z̃ = z_max/z_min`.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::model::{
    pair_coefficients, probe_count, sample_probe_sites, EnsembleGeometry, SpinSite,
};
use crate::quadrature::{integrate, integrate_2d, Tolerance};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GeometryMethod {
    DiscreteSum,
    ClosedFormPrinted,
    ClosedFormCorrected,
    Quadrature,
    MonteCarlo,
}

/// Which closed form of a continuum factor to evaluate.
///
/// `Printed` reproduces the published expression symbol for symbol.
/// `Corrected` is the exact antiderivative of the same integral.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum FormVariant {
    Printed,
    #[default]
    Corrected,
}

impl FormVariant {
    pub fn name(self) -> &'static str {
        match self {
            FormVariant::Printed => "printed",
            FormVariant::Corrected => "corrected",
        }
    }

    fn method(self) -> GeometryMethod {
        match self {
            FormVariant::Printed => GeometryMethod::ClosedFormPrinted,
            FormVariant::Corrected => GeometryMethod::ClosedFormCorrected,
        }
    }
}

impl std::str::FromStr for FormVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "printed" => Ok(FormVariant::Printed),
            "corrected" => Ok(FormVariant::Corrected),
            other => Err(Error::domain(format!(
                "unknown form variant {other:?} (expected printed or corrected)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeometricFactorResult {
    pub value: f64,
    pub method: GeometryMethod,
    pub est_error: f64,
}

impl GeometricFactorResult {
    fn exact(value: f64, method: GeometryMethod) -> Self {
        Self {
            value,
            method,
            est_error: 0.0,
        }
    }
}

fn check_sites(nuclear: &[SpinSite], probes: &[SpinSite]) -> Result<()> {
    if nuclear.is_empty() || probes.is_empty() {
        return Err(Error::domain(format!(
            "geometric factor needs at least one nucleus and one probe (got {} and {})",
            nuclear.len(),
            probes.len()
        )));
    }
    Ok(())
}

/// `Γ_sep = Σ_k Σ_j A(r_kj)² + B(r_kj)²` (m⁻⁶).
pub fn gamma_sep_discrete(
    nuclear: &[SpinSite],
    probes: &[SpinSite],
) -> Result<GeometricFactorResult> {
    check_sites(nuclear, probes)?;
    let mut total = 0.0;
    for n in nuclear {
        for p in probes {
            let k = pair_coefficients(n, p)?;
            total += k.a * k.a + k.b * k.b;
        }
    }
    Ok(GeometricFactorResult::exact(
        total,
        GeometryMethod::DiscreteSum,
    ))
}

/// `Γ_ent = Σ_k (Σ_j A(r_kj))² + (Σ_j B(r_kj))²` (m⁻⁶).
pub fn gamma_ent_discrete(
    nuclear: &[SpinSite],
    probes: &[SpinSite],
) -> Result<GeometricFactorResult> {
    check_sites(nuclear, probes)?;
    let mut total = 0.0;
    for n in nuclear {
        let (mut sum_a, mut sum_b) = (0.0, 0.0);
        for p in probes {
            let k = pair_coefficients(n, p)?;
            sum_a += k.a;
            sum_b += k.b;
        }
        total += sum_a * sum_a + sum_b * sum_b;
    }
    Ok(GeometricFactorResult::exact(
        total,
        GeometryMethod::DiscreteSum,
    ))
}

fn check_dimensionless(r_tilde: f64, z_tilde: f64) -> Result<()> {
    if !(r_tilde > 0.0 && r_tilde.is_finite()) {
        return Err(Error::domain(format!(
            "r_tilde must be positive, got {r_tilde}"
        )));
    }
    if !(z_tilde >= 1.0 && z_tilde.is_finite()) {
        return Err(Error::domain(format!(
            "z_tilde must be at least 1, got {z_tilde}"
        )));
    }
    Ok(())
}

/// Bracketed arctangent term of the separable closed form at height `zeta`.
fn sep_boundary_term(r: f64, zeta: f64) -> f64 {
    let q = r * r + zeta * zeta;
    let q3 = q * q * q;
    let poly = -5.0 * r.powi(5) * zeta + 8.0 * r.powi(3) * zeta.powi(3) + 5.0 * r * zeta.powi(5);
    (poly + 5.0 * q3 * (zeta / r).atan()) / (16.0 * r.powi(3) * q3)
}

/// Below this radius the arctangent form loses digits to cancellation
/// (`F_sep` is `O(r̃⁴)` there).
const SEP_SERIES_RADIUS: f64 = 0.5;

/// Corrected `F_sep` as `Σ_k c_k r̃^{2k} (1 − z̃^{−(2k+3)})/(2k+3)`, from the
/// integrand `ζ⁻⁴ [1 − (1+4ε)/(1+ε)⁴]` with `ε = r̃²/ζ²`. Every term is
/// positive.
fn f_sep_small_radius(r: f64, z: f64) -> f64 {
    let binom3 = |n: u64| (n * (n - 1) * (n - 2) / 6) as f64;
    let r2 = r * r;
    let mut rpow = r2;
    let mut sum = 0.0;
    for k in 1..400u64 {
        // c_k = −[(−1)^k C(k+3,3) − 4(−1)^k C(k+2,3)]
        let sign = if k % 2 == 0 { -1.0 } else { 1.0 };
        let c = sign * (binom3(k + 3) - 4.0 * binom3(k + 2));
        let p = (2 * k + 3) as i32;
        let term = c * rpow * (1.0 - z.powi(-p)) / p as f64;
        sum += term;
        if k > 2 && term.abs() <= 1e-18 * sum.abs() {
            break;
        }
        rpow *= r2;
    }
    sum
}

/// Dimensionless separable factor `F_sep(r̃, z̃)`, normalized so that
/// `∫ 9(x²+y²)z²/r¹⁰ dV = (3π/8) z_min⁻³ F_sep`.
///
/// The printed form adds the boundary terms with the opposite sign to the
/// antiderivative; both forms vanish at `z̃ = 1` and agree as `r̃ → ∞`.
pub fn f_sep_closed(r_tilde: f64, z_tilde: f64, variant: FormVariant) -> Result<f64> {
    check_dimensionless(r_tilde, z_tilde)?;
    let base = 1.0 / 3.0 - 1.0 / (3.0 * z_tilde.powi(3));
    let boundary = if r_tilde < SEP_SERIES_RADIUS {
        base - f_sep_small_radius(r_tilde, z_tilde)
    } else {
        sep_boundary_term(r_tilde, z_tilde) - sep_boundary_term(r_tilde, 1.0)
    };
    Ok(match variant {
        FormVariant::Printed => base + boundary,
        FormVariant::Corrected => base - boundary,
    })
}

/// `log((√(r²+ζ²)+r)/(√(r²+ζ²)−r))`, evaluated as `2 asinh(r/ζ)` to avoid
/// the cancellation in the denominator.
fn log_ratio(r: f64, zeta: f64) -> f64 {
    2.0 * (r / zeta).asinh()
}

/// Dimensionless entangled factor `F_ent(r̃, z̃)` with `Γ_ent ≈ M ρ² F_ent`.
///
/// The corrected form is the square of `∫ A dV` over the half-cylinder at
/// `z_min = 1`; the printed form multiplies the two logarithms instead of
/// subtracting them and does not vanish at `z̃ = 1`.
pub fn f_ent_closed(r_tilde: f64, z_tilde: f64, variant: FormVariant) -> Result<f64> {
    check_dimensionless(r_tilde, z_tilde)?;
    let r = r_tilde;
    let top = (r * r + z_tilde * z_tilde).sqrt();
    let bottom = (r * r + 1.0).sqrt();
    let bracket = match variant {
        FormVariant::Printed => {
            -log_ratio(r, z_tilde) * log_ratio(r, 1.0) + (2.0 * r / top - 2.0 * r / bottom)
        }
        FormVariant::Corrected => {
            log_ratio(r, z_tilde) - log_ratio(r, 1.0) + 2.0 * r / bottom - 2.0 * r / top
        }
    };
    Ok(bracket * bracket)
}

/// `Γ_sep ≈ M ρ_NV (3π/8) z_min⁻³ F_sep(r̃, z̃)`.
pub fn gamma_sep_continuum(m: f64, geom: &EnsembleGeometry) -> Result<GeometricFactorResult> {
    check_count(m)?;
    let f = f_sep_closed(geom.r_tilde(), geom.z_tilde(), FormVariant::Corrected)?;
    Ok(GeometricFactorResult::exact(
        m * geom.rho_nv() * (3.0 * PI / 8.0) * geom.z_min().powi(-3) * f,
        GeometryMethod::ClosedFormCorrected,
    ))
}

/// `Γ_ent ≈ M ρ_NV² F_ent(r̃, z̃)`.
pub fn gamma_ent_continuum(
    m: f64,
    geom: &EnsembleGeometry,
    variant: FormVariant,
) -> Result<GeometricFactorResult> {
    check_count(m)?;
    let f = f_ent_closed(geom.r_tilde(), geom.z_tilde(), variant)?;
    Ok(GeometricFactorResult::exact(
        m * geom.rho_nv() * geom.rho_nv() * f,
        variant.method(),
    ))
}

fn check_count(m: f64) -> Result<()> {
    if !(m >= 1.0 && m.is_finite()) {
        return Err(Error::domain(format!(
            "nucleus count must be at least 1, got {m}"
        )));
    }
    Ok(())
}

fn geometry_tolerance() -> Tolerance {
    Tolerance {
        abs: 1e-14,
        rel: 1e-13,
        max_intervals: 4000,
    }
}

/// `F_sep` by adaptive quadrature of the cylindrical integrand
/// `9 s³ z² / (s² + z²)⁵` (the half-turn φ integral contributes π).
pub fn quadrature_sep(geom: &EnsembleGeometry) -> Result<GeometricFactorResult> {
    let (r, z) = (geom.r_tilde(), geom.z_tilde());
    let est = integrate_2d(
        |s, zz| {
            let q = s * s + zz * zz;
            9.0 * s * s * s * zz * zz / (q * q * q * q * q)
        },
        (0.0, r),
        (1.0, z),
        geometry_tolerance(),
    )?;
    // (8/3π)·π
    let scale = 8.0 / 3.0;
    Ok(GeometricFactorResult {
        value: scale * est.value,
        method: GeometryMethod::Quadrature,
        est_error: scale * est.error,
    })
}

/// Dimensionless `∫ A dV` and `∫ B dV` over the half-cylinder (`z_min = 1`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoherentIntegrals {
    pub a: f64,
    pub a_error: f64,
    pub b: f64,
    pub b_error: f64,
}

impl CoherentIntegrals {
    pub fn f_ent(&self) -> f64 {
        self.a * self.a + self.b * self.b
    }
}

/// `∫ Ã dV` with the φ integral done analytically (`∫cos φ = 2`), and
/// `∫ B̃ dV` with φ integrated numerically so its cancellation is observed,
/// not assumed.
pub fn quadrature_ent(geom: &EnsembleGeometry) -> Result<CoherentIntegrals> {
    let (r, z) = (geom.r_tilde(), geom.z_tilde());
    let tol = geometry_tolerance();
    let a = integrate_2d(
        |s, zz| {
            let q = s * s + zz * zz;
            -6.0 * s * s * zz / (q * q * q.sqrt())
        },
        (0.0, r),
        (1.0, z),
        tol,
    )?;
    let phi_tol = Tolerance {
        abs: 1e-16,
        rel: 1e-13,
        max_intervals: 200,
    };
    let b = integrate_2d(
        |s, zz| {
            let q = s * s + zz * zz;
            let radial = -3.0 * s * s * zz / (q * q * q.sqrt());
            integrate(|phi| radial * phi.sin(), -0.5 * PI, 0.5 * PI, phi_tol)
                .map(|e| e.value)
                .unwrap_or(f64::NAN)
        },
        (0.0, r),
        (1.0, z),
        tol,
    )?;
    if b.value.is_nan() {
        return Err(Error::Numeric("B-component quadrature produced NaN".into()));
    }
    Ok(CoherentIntegrals {
        a: a.value,
        a_error: a.error,
        b: b.value,
        b_error: b.error,
    })
}

/// Continuum factors estimated from `n` random probe sites, with one
/// nucleus at the origin and each site weighting `V/n` of the volume.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampledFactors {
    pub gamma_sep: GeometricFactorResult,
    pub gamma_ent: GeometricFactorResult,
}

pub fn sampled_continuum_factors(
    m: f64,
    geom: &EnsembleGeometry,
    n: usize,
    seed: u64,
) -> Result<SampledFactors> {
    check_count(m)?;
    if n < 2 {
        return Err(Error::domain(
            "Monte-Carlo estimate needs at least two samples",
        ));
    }
    let origin = [SpinSite::nuclear(0.0, 0.0, 0.0)];
    let sites = sample_probe_sites(geom, n, seed);
    let weight = probe_count(geom) / n as f64;
    let mut sum_sq = 0.0;
    let mut sum_sq2 = 0.0;
    let mut sum_a = 0.0;
    let mut sum_a2 = 0.0;
    let mut sum_b = 0.0;
    for p in &sites {
        let k = pair_coefficients(&origin[0], p)?;
        let sq = k.a * k.a + k.b * k.b;
        sum_sq += sq;
        sum_sq2 += sq * sq;
        sum_a += k.a;
        sum_a2 += k.a * k.a;
        sum_b += k.b;
    }
    let nf = n as f64;
    let stderr = |sum: f64, sum2: f64| {
        let mean = sum / nf;
        ((sum2 / nf - mean * mean).max(0.0) / (nf - 1.0)).sqrt() * nf
    };
    let sep = m * weight * sum_sq;
    let sep_err = m * weight * stderr(sum_sq, sum_sq2);
    let int_a = weight * sum_a;
    let int_b = weight * sum_b;
    let a_err = weight * stderr(sum_a, sum_a2);
    let ent = m * (int_a * int_a + int_b * int_b);
    let ent_err = m * 2.0 * int_a.abs() * a_err;
    Ok(SampledFactors {
        gamma_sep: GeometricFactorResult {
            value: sep,
            method: GeometryMethod::MonteCarlo,
            est_error: sep_err,
        },
        gamma_ent: GeometricFactorResult {
            value: ent,
            method: GeometryMethod::MonteCarlo,
            est_error: ent_err,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn origin() -> Vec<SpinSite> {
        vec![SpinSite::nuclear(0.0, 0.0, 0.0)]
    }

    #[test]
    fn on_axis_probe_has_no_transverse_coupling() {
        let g = gamma_sep_discrete(&origin(), &[SpinSite::probe(0.0, 0.0, 3.0)]).unwrap();
        assert_eq!(g.value, 0.0);
        let probes: Vec<_> = (1..5)
            .map(|i| SpinSite::probe(0.0, 0.0, i as f64))
            .collect();
        assert_eq!(gamma_ent_discrete(&origin(), &probes).unwrap().value, 0.0);
    }

    #[test]
    fn magic_angle_probe() {
        // relative vector r_k − r_j = (−1, −1, −1): A = B = −3/3^{5/2}
        let g = gamma_sep_discrete(&origin(), &[SpinSite::probe(1.0, 1.0, 1.0)]).unwrap();
        assert_relative_eq!(g.value, 2.0 / 27.0, max_relative = 1e-14);
    }

    #[test]
    fn mirrored_probes_cancel_b() {
        let probes = [
            SpinSite::probe(1.0, 1.0, 1.0),
            SpinSite::probe(1.0, -1.0, 1.0),
        ];
        let g = gamma_ent_discrete(&origin(), &probes).unwrap();
        let a = 2.0 * 3.0 / 3f64.powf(2.5);
        assert_relative_eq!(g.value, a * a, max_relative = 1e-14);
        assert_relative_eq!(g.value, 0.14815, epsilon = 1e-5);
    }

    #[test]
    fn factors_scale_with_nuclei_at_origin() {
        let probes = [
            SpinSite::probe(0.3, -0.2, 1.1),
            SpinSite::probe(0.7, 0.4, 1.4),
        ];
        let one = gamma_sep_discrete(&origin(), &probes).unwrap().value;
        let many = vec![SpinSite::nuclear(0.0, 0.0, 0.0); 5];
        assert_relative_eq!(
            gamma_sep_discrete(&many, &probes).unwrap().value,
            5.0 * one,
            max_relative = 1e-14
        );
        let single = [probes[0]];
        assert_relative_eq!(
            gamma_ent_discrete(&origin(), &single).unwrap().value,
            gamma_sep_discrete(&origin(), &single).unwrap().value,
            max_relative = 1e-14
        );
    }

    #[test]
    fn coincident_pair_is_singular() {
        let err = gamma_sep_discrete(&origin(), &[SpinSite::probe(0.0, 0.0, 0.0)]).unwrap_err();
        assert!(matches!(err, Error::Singularity { .. }));
        assert!(gamma_ent_discrete(&[], &[SpinSite::probe(1.0, 0.0, 1.0)]).is_err());
    }

    #[test]
    fn zero_height_limits() {
        for r in [0.2, 1.0, 7.5] {
            assert!(f_sep_closed(r, 1.0, FormVariant::Corrected).unwrap().abs() < 1e-14);
            assert!(f_sep_closed(r, 1.0, FormVariant::Printed).unwrap().abs() < 1e-14);
            assert_eq!(f_ent_closed(r, 1.0, FormVariant::Corrected).unwrap(), 0.0);
        }
        let printed = f_ent_closed(1.0, 1.0, FormVariant::Printed).unwrap();
        let l = ((2f64.sqrt() + 1.0) / (2f64.sqrt() - 1.0)).ln();
        assert_relative_eq!(printed, l.powi(4), max_relative = 1e-13);
        assert!((printed - 9.655).abs() < 1e-3);
    }

    #[test]
    fn closed_forms_reject_bad_domain() {
        assert!(f_sep_closed(1.0, 0.99, FormVariant::Corrected).is_err());
        assert!(f_ent_closed(0.0, 2.0, FormVariant::Corrected).is_err());
    }

    #[test]
    fn quadrature_zero_height_and_symmetry() {
        let flat = EnsembleGeometry::new(1.0, 1.0, 2.0, 1.0).unwrap();
        assert_eq!(quadrature_sep(&flat).unwrap().value, 0.0);
        let g = EnsembleGeometry::from_dimensionless(1.0, 5.05, 4.96, 1.0).unwrap();
        let ent = quadrature_ent(&g).unwrap();
        assert!(ent.b.abs() <= 1e-10, "B integral {}", ent.b);
        assert!(ent.a < 0.0);
    }

    // Closed forms for the dimensionless integrals, frozen from an independent
    // scipy dblquad evaluation (epsabs 1e-14, epsrel 1e-12).
    #[test]
    fn quadrature_matches_reference_values() {
        let cases = [
            (
                1.16,
                1.29,
                0.126_891_223_012_166_6,
                0.034_638_678_741_103_26,
            ),
            (
                0.5,
                2.0,
                0.029_856_504_302_186_27,
                0.003_379_653_354_593_948,
            ),
            (5.05, 4.96, 0.328_328_192_310_124_1, 5.387_359_160_443_824),
        ];
        for (r, z, f_sep, f_ent) in cases {
            let g = EnsembleGeometry::from_dimensionless(1.0, r, z, 1.0).unwrap();
            assert_relative_eq!(
                quadrature_sep(&g).unwrap().value,
                f_sep,
                max_relative = 1e-10
            );
            assert_relative_eq!(
                quadrature_ent(&g).unwrap().f_ent(),
                f_ent,
                max_relative = 1e-10
            );
            assert_relative_eq!(
                f_sep_closed(r, z, FormVariant::Corrected).unwrap(),
                f_sep,
                max_relative = 1e-10
            );
            assert_relative_eq!(
                f_ent_closed(r, z, FormVariant::Corrected).unwrap(),
                f_ent,
                max_relative = 1e-10
            );
        }
    }

    #[test]
    fn printed_separable_form_misses_quadrature() {
        let printed = f_sep_closed(1.16, 1.29, FormVariant::Printed).unwrap();
        let corrected = f_sep_closed(1.16, 1.29, FormVariant::Corrected).unwrap();
        assert!((printed - corrected).abs() / corrected > 0.5);
    }

    #[test]
    fn continuum_factors_are_linear_and_vanish_at_zero_height() {
        let g = EnsembleGeometry::from_dimensionless(500e-9, 1.16, 1.29, 1.1e23).unwrap();
        let s1 = gamma_sep_continuum(1.0, &g).unwrap().value;
        let s2 = gamma_sep_continuum(2.0, &g).unwrap().value;
        assert_relative_eq!(s2, 2.0 * s1, max_relative = 1e-15);
        let e1 = gamma_ent_continuum(1.0, &g, FormVariant::Corrected)
            .unwrap()
            .value;
        let e2 = gamma_ent_continuum(2.0, &g, FormVariant::Corrected)
            .unwrap()
            .value;
        assert_relative_eq!(e2, 2.0 * e1, max_relative = 1e-15);
        let flat = EnsembleGeometry::new(500e-9, 500e-9, 600e-9, 1.1e23).unwrap();
        assert_eq!(gamma_sep_continuum(1.0, &flat).unwrap().value.abs(), 0.0);
        assert_eq!(
            gamma_ent_continuum(3.0, &flat, FormVariant::Corrected)
                .unwrap()
                .value,
            0.0
        );
        assert!(gamma_sep_continuum(0.5, &g).is_err());
    }
}

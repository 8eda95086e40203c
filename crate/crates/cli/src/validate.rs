//! The `validate` command: independent checks of the closed forms, the
//! simulator and the published headline numbers.
//!
//! Entries with a `Pass`/`Fail` verdict are normative; `Info` entries record
//! known discrepancies and never fail a run.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use nvnmr_core::geometry::{
    f_ent_closed, f_sep_closed, gamma_ent_discrete, gamma_sep_discrete, quadrature_ent,
    quadrature_sep,
};
use nvnmr_core::optimize::{derive_constants, minimize_geometry, ConstantsMode, ReductionParams};
use nvnmr_core::oracle::{
    apply_dephasing_channel, dephased_ghz_observable, evolve, perturbation_defect, pi_pulse_probes,
    run_dd_protocol, run_ghz_protocol, CMatrix, Complex64, DensityState, DephasingChannel,
    NuclearInit, ProtocolRun, QuantumSystem,
};
use nvnmr_core::report::model_discrepancies;
use nvnmr_core::signal::{expectation_mx, p_ghz, ProtocolParams, C_DD_PUBLISHED, C_ENT_PUBLISHED};
use nvnmr_core::{
    DiscrepancyReport, EnsembleGeometry, FormVariant, GammaConvention, GeometryVariant,
    ReportEntry, SpinSite,
};

use crate::config::ScenarioConfig;
use crate::{detect_row, CliError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Depth {
    Fast,
    Full,
}

impl Depth {
    pub fn name(self) -> &'static str {
        match self {
            Depth::Fast => "fast",
            Depth::Full => "full",
        }
    }
}

/// Closed form vs quadrature, relative.
pub const GRID_TOL: f64 = 1e-8;
/// Smallest accepted residual shrink factor when the coupling is halved.
pub const MIN_ORDER_RATIO: f64 = 7.0;
/// Residuals below this are roundoff and carry no order information.
pub const RESIDUAL_FLOOR: f64 = 1e-12;
pub const IDENTITY_TOL: f64 = 1e-10;

const ORACLE_G: f64 = 1e-3;
const ORACLE_OMEGA: f64 = 1.0;

type Suite = fn(Depth) -> Result<DiscrepancyReport, CliError>;

/// Runs every suite and concatenates the reports in a fixed order.
pub fn run_validation(depth: Depth) -> Result<DiscrepancyReport, CliError> {
    let suites: [Suite; 6] = [
        geometry_suite,
        oracle_suite,
        channel_suite,
        figure_suite,
        constants_suite,
        |_| Ok(model_discrepancies()?),
    ];
    let parts: Vec<Result<DiscrepancyReport, CliError>> =
        suites.par_iter().map(|s| s(depth)).collect();
    let mut report = DiscrepancyReport::new();
    for p in parts {
        report.extend(p?);
    }
    Ok(report)
}

fn log_grid(n: usize) -> Vec<(f64, f64)> {
    let log = |lo: f64, hi: f64, i: usize| {
        (lo.ln() + (hi.ln() - lo.ln()) * i as f64 / (n - 1) as f64).exp()
    };
    (0..n)
        .flat_map(|i| (0..n).map(move |j| (log(0.1, 10.0, i), 1.0 + log(0.01, 9.0, j))))
        .collect()
}

/// Worst relative closed-form error of `F_sep` and corrected `F_ent` on an
/// `n × n` log grid over `r̃ ∈ [0.1, 10]`, `z̃ − 1 ∈ [0.01, 9]`.
pub fn closed_form_grid_errors(n: usize) -> Result<(f64, f64), CliError> {
    let errs: Vec<(f64, f64)> = log_grid(n)
        .par_iter()
        .map(|&(r, z)| -> Result<(f64, f64), CliError> {
            let geom = EnsembleGeometry::from_dimensionless(1.0, r, z, 1.0)?;
            let q = quadrature_sep(&geom)?.value;
            let c = f_sep_closed(r, z, FormVariant::Corrected)?;
            let qe = quadrature_ent(&geom)?.f_ent();
            let ce = f_ent_closed(r, z, FormVariant::Corrected)?;
            Ok(((c - q).abs() / q.abs(), (ce - qe).abs() / qe.abs()))
        })
        .collect::<Result<_, _>>()?;
    Ok(errs.iter().fold((0.0, 0.0), |(a, b), &(x, y)| {
        (f64::max(a, x), f64::max(b, y))
    }))
}

fn geometry_suite(depth: Depth) -> Result<DiscrepancyReport, CliError> {
    let mut r = DiscrepancyReport::new();
    let n = if depth == Depth::Full { 20 } else { 6 };
    let (sep, ent) = closed_form_grid_errors(n)?;
    r.push(ReportEntry::check(
        format!("F_sep closed form vs quadrature ({n}x{n})"),
        Some(sep),
        sep <= GRID_TOL,
        format!("worst relative error, tolerance {GRID_TOL:e}"),
    ));
    r.push(ReportEntry::check(
        format!("F_ent corrected vs quadrature ({n}x{n})"),
        Some(ent),
        ent <= GRID_TOL,
        format!("worst relative error, tolerance {GRID_TOL:e}"),
    ));
    let printed = f_ent_closed(1.0, 1.0, FormVariant::Printed)?;
    r.push(ReportEntry::info(
        "F_ent printed form at z~ = 1",
        Some(0.0),
        Some(printed),
        "should vanish with zero slab height; the printed form does not",
    ));

    let s = minimize_geometry(GeometryVariant::Sep, FormVariant::Corrected)?;
    let ok = (s.argmin[0] - 1.16).abs() <= 0.05 && (s.argmin[1] - 1.29).abs() <= 0.05;
    r.push(ReportEntry::check(
        "sep optimum within 0.05 of (1.16, 1.29)",
        Some(s.argmin[0]),
        ok,
        format!("(r~, z~) = ({:.4}, {:.4})", s.argmin[0], s.argmin[1]),
    ));
    let e = minimize_geometry(GeometryVariant::Ent, FormVariant::Corrected)?;
    let ok = (e.argmin[0] - 5.05).abs() <= 0.10 && (e.argmin[1] - 4.96).abs() <= 0.10;
    r.push(ReportEntry::check(
        "ent optimum within 0.10 of (5.05, 4.96)",
        Some(e.argmin[0]),
        ok,
        format!("(r~, z~) = ({:.4}, {:.4})", e.argmin[0], e.argmin[1]),
    ));
    let p = minimize_geometry(GeometryVariant::Ent, FormVariant::Printed)?;
    r.push(ReportEntry::info(
        "ent optimum with printed F_ent",
        Some(5.05),
        Some(p.argmin[0]),
        format!("(r~, z~) = ({:.4}, {:.4})", p.argmin[0], p.argmin[1]),
    ));
    Ok(r)
}

fn random_sites(rng: &mut ChaCha8Rng, m: usize, l: usize) -> (Vec<SpinSite>, Vec<SpinSite>) {
    let nuclear = (0..m)
        .map(|_| {
            SpinSite::nuclear(
                rng.random_range(-0.3..0.3),
                rng.random_range(-0.3..0.3),
                rng.random_range(-0.2..0.2),
            )
        })
        .collect();
    let probes = (0..l)
        .map(|_| {
            SpinSite::probe(
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
                rng.random_range(1.0..2.0),
            )
        })
        .collect();
    (nuclear, probes)
}

/// Noiseless simulator-minus-formula residuals `(DD, GHZ)`.
fn residuals(
    nuclear: &[SpinSite],
    probes: &[SpinSite],
    g: f64,
    tau: f64,
    n_dd: u32,
) -> Result<(f64, f64), CliError> {
    let sys = QuantumSystem::new(nuclear.to_vec(), probes.to_vec(), g, ORACLE_OMEGA)?;
    let gs = gamma_sep_discrete(nuclear, probes)?.value;
    let ge = gamma_ent_discrete(nuclear, probes)?.value;
    let p = ProtocolParams {
        tau,
        n_dd,
        omega_target: ORACLE_OMEGA,
        t2_echo: f64::INFINITY,
        probes: probes.len() as f64,
        nuclei: nuclear.len() as f64,
        coupling_g: g,
        total_time: None,
    };
    let dd = run_dd_protocol(&sys, &ProtocolRun::noiseless(tau, n_dd))?;
    let ghz = run_ghz_protocol(&sys, &ProtocolRun::noiseless(tau, 1))?;
    Ok((
        (dd - expectation_mx(&p, gs)?.value).abs(),
        (ghz - p_ghz(&ProtocolParams { n_dd: 1, ..p }, ge)?.value).abs(),
    ))
}

/// Residual shrink factors under `G → G/2` at `G/ω = 10⁻³` for every
/// `(L, M)` in the given ranges, DD and GHZ interleaved. Also returns the
/// largest residual seen.
pub fn residual_order_ratios(
    max_l: usize,
    max_m: usize,
    seed: u64,
) -> Result<(Vec<f64>, f64), CliError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ratios = Vec::new();
    let mut worst: f64 = 0.0;
    for l in 1..=max_l {
        for m in 1..=max_m {
            let (nuc, pr) = random_sites(&mut rng, m, l);
            let tau = rng.random_range(0.5..2.5);
            let a = residuals(&nuc, &pr, ORACLE_G, tau, 3)?;
            let b = residuals(&nuc, &pr, 0.5 * ORACLE_G, tau, 3)?;
            for (hi, lo) in [(a.0, b.0), (a.1, b.1)] {
                worst = worst.max(hi);
                if hi > RESIDUAL_FLOOR {
                    ratios.push(hi / lo);
                }
            }
        }
    }
    Ok((ratios, worst))
}

fn random_state(rng: &mut ChaCha8Rng, dim: usize) -> Result<DensityState, CliError> {
    let g = CMatrix::from_fn(dim, dim, |_, _| {
        Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
    });
    let rho = &g * g.adjoint();
    let tr = rho.trace();
    Ok(DensityState::new(rho / tr)?)
}

fn random_hermitian(rng: &mut ChaCha8Rng, n: usize) -> CMatrix {
    let g = CMatrix::from_fn(n, n, |_, _| {
        Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
    });
    (&g + g.adjoint()) * Complex64::new(0.5, 0.0)
}

fn max_entry(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Worst `|plus − minus|` and (single nucleus) `|plus − mixed|` over both protocols.
fn sign_independence(rng: &mut ChaCha8Rng, max_l: usize) -> Result<(f64, f64), CliError> {
    let mut pm: f64 = 0.0;
    let mut mixed: f64 = 0.0;
    for l in 1..=max_l {
        let (nuc, pr) = random_sites(rng, 1, l);
        let sys = QuantumSystem::new(nuc, pr, ORACLE_G, ORACLE_OMEGA)?;
        let base = ProtocolRun::noiseless(1.3, 5);
        let with = |init| ProtocolRun {
            nuclear_init: init,
            ..base
        };
        for protocol in [run_dd_protocol as fn(&_, &_) -> _, run_ghz_protocol] {
            let plus = protocol(&sys, &with(NuclearInit::Plus))?;
            let minus = protocol(&sys, &with(NuclearInit::Minus))?;
            let mix = protocol(&sys, &base)?;
            pm = pm.max((plus - minus).abs());
            mixed = mixed.max((plus - mix).abs());
        }
    }
    Ok((pm, mixed))
}

fn oracle_suite(depth: Depth) -> Result<DiscrepancyReport, CliError> {
    let mut r = DiscrepancyReport::new();
    let max_m = if depth == Depth::Full { 2 } else { 1 };
    let (ratios, worst) = residual_order_ratios(3, max_m, 2024)?;
    let lo = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = ratios.iter().copied().fold(0.0, f64::max);
    r.push(ReportEntry::check(
        format!("oracle residual magnitude (L<=3, M<={max_m})"),
        Some(worst),
        worst < 1e-9,
        "largest |simulated - formula| at G/omega = 1e-3",
    ));
    r.push(ReportEntry::check(
        format!("oracle residual order (L<=3, M<={max_m})"),
        Some(lo),
        lo >= MIN_ORDER_RATIO,
        format!("smallest shrink factor under G halving, at least {MIN_ORDER_RATIO} (beyond second order)"),
    ));
    r.push(ReportEntry::info(
        "oracle residual shrink factor vs 8 +- 1",
        Some(8.0),
        Some(lo),
        format!("range [{lo:.2}, {hi:.2}]; odd orders vanish under G -> -G, so the shrink is ~16"),
    ));

    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let (pm, mixed) = sign_independence(&mut rng, 3)?;
    r.push(ReportEntry::check(
        "nuclear |+> vs |-> independence",
        Some(pm),
        pm < IDENTITY_TOL,
        format!("tolerance {IDENTITY_TOL:e}"),
    ));
    r.push(ReportEntry::check(
        "nuclear |+> vs mixed (M = 1)",
        Some(mixed),
        mixed < IDENTITY_TOL,
        format!("tolerance {IDENTITY_TOL:e}"),
    ));

    let (nuc, pr) = random_sites(&mut rng, 1, 2);
    let sys = QuantumSystem::new(nuc, pr, 0.2, ORACLE_OMEGA)?;
    let rho = random_state(&mut rng, sys.dimension())?;
    let twice = pi_pulse_probes(&pi_pulse_probes(&rho, 2), 2);
    let inv = max_entry(&(twice.matrix() - rho.matrix()));
    r.push(ReportEntry::check(
        "pi pulse involution",
        Some(inv),
        inv < IDENTITY_TOL,
        format!("tolerance {IDENTITY_TOL:e}"),
    ));
    let u = sys.propagator(0.8)?;
    let lhs = pi_pulse_probes(&evolve(&pi_pulse_probes(&rho, 2), &u)?, 2);
    let rhs = evolve(&rho, &sys.probe_flipped()?.propagator(0.8)?)?;
    let flip = max_entry(&(lhs.matrix() - rhs.matrix()));
    r.push(ReportEntry::check(
        "pulse-evolve-pulse = probe-flipped evolution",
        Some(flip),
        flip < IDENTITY_TOL,
        format!("tolerance {IDENTITY_TOL:e}"),
    ));

    let zero = QuantumSystem::new(
        sys.nuclear_sites().to_vec(),
        sys.probe_sites().to_vec(),
        0.0,
        ORACLE_OMEGA,
    )?;
    let run = ProtocolRun::noiseless(0.77, 7);
    let dd = run_dd_protocol(&zero, &run)?;
    let ghz = run_ghz_protocol(&zero, &run)?;
    r.push(ReportEntry::check(
        "zero coupling baselines",
        Some(dd),
        (dd - 2.0).abs() < 1e-12 && (ghz - 1.0).abs() < 1e-12,
        "<Mx> = L and p(GHZ) = 1",
    ));

    let a = random_hermitian(&mut rng, 2);
    let b = random_hermitian(&mut rng, 2);
    let ratio = perturbation_defect(&a, &b, 5e-3, 1.0)? / perturbation_defect(&a, &b, 1e-2, 1.0)?;
    r.push(ReportEntry::check(
        "perturbation expansion third-order defect",
        Some(ratio),
        (ratio - 0.125).abs() <= 0.15 * 0.125,
        "defect(eps/2)/defect(eps) = 1/8 within 15%",
    ));
    Ok(r)
}

fn channel_suite(_: Depth) -> Result<DiscrepancyReport, CliError> {
    let mut r = DiscrepancyReport::new();
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let samples = 100;
    let mut drift: f64 = 0.0;
    let mut min_eig = f64::INFINITY;
    for _ in 0..samples {
        let rho = random_state(&mut rng, 4)?;
        let ch = DephasingChannel::new(rng.random_range(0.0..2.0), rng.random_range(0.1..2.0))?;
        let out = apply_dephasing_channel(&rho, &ch, &[0, 1])?;
        drift = drift.max((out.trace() - Complex64::new(1.0, 0.0)).norm());
        min_eig = min_eig.min(out.min_eigenvalue());
    }
    r.push(ReportEntry::check(
        format!("dephasing trace preservation ({samples} states)"),
        Some(drift),
        drift <= 1e-12,
        "largest trace drift, tolerance 1e-12",
    ));
    r.push(ReportEntry::check(
        format!("dephasing positivity ({samples} states)"),
        Some(min_eig),
        min_eig >= -1e-10,
        "smallest eigenvalue, at least -1e-10",
    ));

    let s = std::f64::consts::FRAC_1_SQRT_2;
    let plus = DensityState::pure(&[Complex64::new(s, 0.0), Complex64::new(s, 0.0)])?;
    let mut worst: f64 = 0.0;
    for (t, t2) in [(0.3, 1.0), (1.0, 1.0), (2.0, 0.7)] {
        let ch = DephasingChannel::new(t, t2)?;
        let out = apply_dephasing_channel(&plus, &ch, &[0])?;
        let sx = 2.0 * out.matrix()[(0, 1)].re;
        worst = worst.max((sx - (-(t / t2).powi(3)).exp()).abs());
    }
    r.push(ReportEntry::check(
        "single-qubit sigma_x attenuation",
        Some(worst),
        worst <= 1e-15,
        "exp(-(t/T2)^3)",
    ));

    let mut worst: f64 = 0.0;
    for l in 1..=4 {
        for (t, t2) in [(0.5, 1.0), (1.0, 1.0)] {
            let op = dephased_ghz_observable(l, t, t2)?;
            let dim = 1usize << l;
            let expected = (-(l as f64) * (t / t2).powi(3)).exp();
            let coherence = if dim > 1 {
                2.0 * op[(0, dim - 1)].re
            } else {
                expected
            };
            worst = worst.max((coherence - expected).abs() / expected);
        }
    }
    r.push(ReportEntry::check(
        "dephased GHZ coherence",
        Some(worst),
        worst <= 1e-14,
        "exp(-L(t/T2)^3)",
    ));
    Ok(r)
}

fn figure_suite(_: Depth) -> Result<DiscrepancyReport, CliError> {
    let mut r = DiscrepancyReport::new();
    let cfg = ScenarioConfig::default();
    let row = detect_row(&cfg, 1e-6, cfg.n_dd)?;
    r.push(ReportEntry::compare(
        "NV1 entangled T_d at 1 um (s)",
        60.0,
        row.t_detect_ent_s,
        0.10,
    ));
    for conv in [GammaConvention::Cyclic, GammaConvention::Angular] {
        let c = ScenarioConfig {
            gamma_convention: conv,
            ..cfg.clone()
        };
        let ratio = detect_row(&c, 1e-6, c.n_dd)?.ratio();
        r.push(ReportEntry::check(
            format!("NV1 T_d ratio at 1 um within 2x of 1e7 ({})", conv.name()),
            Some(ratio),
            (5e6..=2e7).contains(&ratio),
            "separable over entangled",
        ));
    }
    let doubled = detect_row(&cfg, 2e-6, cfg.n_dd)?;
    let z9 = doubled.t_detect_dd_s / row.t_detect_dd_s;
    r.push(ReportEntry::compare(
        "separable T_d under z_min doubling",
        512.0,
        z9,
        1e-12,
    ));
    let z3 = doubled.t_detect_ent_s / row.t_detect_ent_s;
    r.push(ReportEntry::compare(
        "entangled T_d under z_min doubling",
        8.0,
        z3,
        1e-12,
    ));
    Ok(r)
}

fn constants_suite(depth: Depth) -> Result<DiscrepancyReport, CliError> {
    let mut r = DiscrepancyReport::new();
    let cfg = ScenarioConfig::default();
    let scenario = cfg.scenario()?;
    let p = ReductionParams {
        t2_echo: cfg.t2_echo_s,
        coupling_g: scenario.dynamics_coupling(),
        n_dd: cfg.n_dd,
        omega_target: cfg.omega_target_rad_per_s,
        convention: cfg.gamma_convention,
    };
    let modes: &[ConstantsMode] = match depth {
        Depth::Fast => &[ConstantsMode::Resonance],
        Depth::Full => &[ConstantsMode::Resonance, ConstantsMode::FreeTau],
    };
    for &mode in modes {
        let d = derive_constants(&p, mode)?;
        r.push(ReportEntry::check(
            format!("re-derived constants positive ({})", mode.name()),
            Some(d.c_dd),
            d.c_dd > 0.0 && d.c_ent > 0.0,
            format!("c_ent = {:.6e}", d.c_ent),
        ));
        r.extend(d.report);
    }
    // the same constants from a different reduction point
    let other = ReductionParams {
        t2_echo: 3.0 * p.t2_echo,
        coupling_g: 0.25 * p.coupling_g,
        ..p
    };
    let a = derive_constants(&p, ConstantsMode::Resonance)?;
    let b = derive_constants(&other, ConstantsMode::Resonance)?;
    let dev = ((a.c_dd - b.c_dd) / a.c_dd)
        .abs()
        .max(((a.c_ent - b.c_ent) / a.c_ent).abs());
    r.push(ReportEntry::check(
        "constants independent of (T2, G) used for reduction",
        Some(dev),
        dev < 1e-6,
        "largest relative change",
    ));
    r.push(ReportEntry::info(
        "c_DD published",
        Some(C_DD_PUBLISHED),
        None,
        "used by detect-time",
    ));
    r.push(ReportEntry::info(
        "c_ent published",
        Some(C_ENT_PUBLISHED),
        None,
        "used by detect-time",
    ));
    r.push(ReportEntry::info(
        "resonant pulse interval (s)",
        None,
        Some(PI / cfg.omega_target_rad_per_s),
        "proton at 0.1 T",
    ));
    Ok(r)
}

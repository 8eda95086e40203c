use num_complex::Complex64;

use super::state::{
    apply_dephasing_channel, evolve, pi_pulse_probes, DensityState, DephasingChannel,
};
use super::system::QuantumSystem;
use super::CMatrix;
use crate::error::{Error, Result};
use crate::signal::t2_dd;

/// How probe dephasing enters a protocol run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum NoiseModel {
    #[default]
    Noiseless,
    /// Noiseless dynamics, then the attenuation of the measured observable:
    /// `e^{−(t/T₂ᴰᴰ)³}` on `M_x`, the dephased GHZ projector for `p(GHZ)`.
    Analytic,
    /// The per-qubit channel with `T₂ᵉᶜʰᵒ` applied to every probe after each
    /// free-evolution period. Qualitative only: it does not produce the
    /// `n_DD^{2/3}` lengthening of the coherence time.
    InterleavedChannel,
}

/// Initial state of the nuclear register.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum NuclearInit {
    /// `𝕀/2^M`.
    #[default]
    Mixed,
    /// `|+⟩^{⊗M}`.
    Plus,
    /// `|−⟩^{⊗M}`.
    Minus,
    /// Computational basis state `k` of the nuclear register.
    Basis(usize),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProtocolRun {
    pub tau: f64,
    /// Odd π-pulse count; the GHZ echo ignores it.
    pub n_dd: u32,
    pub t2_echo: f64,
    pub noise: NoiseModel,
    pub nuclear_init: NuclearInit,
}

impl ProtocolRun {
    pub fn noiseless(tau: f64, n_dd: u32) -> Self {
        Self {
            tau,
            n_dd,
            t2_echo: f64::INFINITY,
            noise: NoiseModel::Noiseless,
            nuclear_init: NuclearInit::Mixed,
        }
    }

    fn check(&self) -> Result<()> {
        if !(self.tau >= 0.0 && self.tau.is_finite()) {
            return Err(Error::Domain(format!(
                "tau must be finite and non-negative, got {}",
                self.tau
            )));
        }
        if self.n_dd == 0 || self.n_dd % 2 == 0 {
            return Err(Error::Domain(format!(
                "n_dd must be odd and at least 1, got {}",
                self.n_dd
            )));
        }
        if self.noise != NoiseModel::Noiseless && !(self.t2_echo > 0.0) {
            return Err(Error::Domain(format!(
                "t2_echo must be positive, got {}",
                self.t2_echo
            )));
        }
        Ok(())
    }
}

fn single_qubit(amplitudes: [f64; 2]) -> Result<DensityState> {
    DensityState::pure(&amplitudes.map(|a| Complex64::new(a, 0.0)))
}

fn nuclear_state(m: usize, init: NuclearInit) -> Result<DensityState> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let product = |one: DensityState| {
        let mut acc = one.clone();
        for _ in 1..m {
            acc = acc.tensor(&one);
        }
        acc
    };
    match init {
        NuclearInit::Mixed => Ok(DensityState::maximally_mixed(m)),
        NuclearInit::Plus => Ok(product(single_qubit([s, s])?)),
        NuclearInit::Minus => Ok(product(single_qubit([s, -s])?)),
        NuclearInit::Basis(k) => {
            let dim = 1usize << m;
            if k >= dim {
                return Err(Error::Domain(format!(
                    "basis index {k} out of range for {m} nuclei"
                )));
            }
            let mut psi = vec![Complex64::new(0.0, 0.0); dim];
            psi[k] = Complex64::new(1.0, 0.0);
            DensityState::pure(&psi)
        }
    }
}

fn probe_plus_state(l: usize) -> Result<DensityState> {
    let dim = 1usize << l;
    let amp = Complex64::new((dim as f64).sqrt().recip(), 0.0);
    DensityState::pure(&vec![amp; dim])
}

fn probe_ghz_state(l: usize) -> Result<DensityState> {
    let dim = 1usize << l;
    let mut psi = vec![Complex64::new(0.0, 0.0); dim];
    psi[0] = Complex64::new(1.0, 0.0);
    psi[dim - 1] = Complex64::new(1.0, 0.0);
    DensityState::pure(&psi)
}

fn require_probes(sys: &QuantumSystem) -> Result<()> {
    if sys.l_probe() == 0 {
        return Err(Error::Domain("protocol needs at least one probe".into()));
    }
    Ok(())
}

fn probe_qubits(sys: &QuantumSystem) -> Vec<usize> {
    (sys.m_nuclear()..sys.qubits()).collect()
}

/// `τ`-evolution followed by the probe π pulse, repeated `steps` times.
fn pulse_train(
    sys: &QuantumSystem,
    mut rho: DensityState,
    run: &ProtocolRun,
    steps: u32,
) -> Result<DensityState> {
    let u = sys.propagator(run.tau)?;
    let channel = match run.noise {
        NoiseModel::InterleavedChannel => Some(DephasingChannel::new(run.tau, run.t2_echo)?),
        _ => None,
    };
    let probes = probe_qubits(sys);
    for _ in 0..steps {
        rho = evolve(&rho, &u)?;
        if let Some(ch) = &channel {
            rho = apply_dephasing_channel(&rho, ch, &probes)?;
        }
        rho = pi_pulse_probes(&rho, sys.l_probe());
        rho.validate_cheap()?;
    }
    rho.validate()?;
    Ok(rho)
}

/// `Tr[ρ (𝕀 ⊗ O)]` for an operator `O` on the probe register.
fn probe_expectation(rho: &DensityState, probes: usize, op: &CMatrix) -> f64 {
    let pd = 1usize << probes;
    let nd = rho.dimension() / pd;
    let m = rho.matrix();
    let mut acc = Complex64::new(0.0, 0.0);
    for t in 0..nd {
        for a in 0..pd {
            for b in 0..pd {
                acc += m[(t * pd + a, t * pd + b)] * op[(b, a)];
            }
        }
    }
    acc.re
}

/// `⟨M_x⟩ = Tr[ρ Σ_j σ_x,j]` after the `n_DD + 1` pulse periods, starting
/// from the nuclear state of `run` and `|+⟩^{⊗L}` probes.
pub fn run_dd_protocol(sys: &QuantumSystem, run: &ProtocolRun) -> Result<f64> {
    run.check()?;
    require_probes(sys)?;
    let l = sys.l_probe();
    let rho0 = nuclear_state(sys.m_nuclear(), run.nuclear_init)?.tensor(&probe_plus_state(l)?);
    let rho = pulse_train(sys, rho0, run, run.n_dd + 1)?;
    let m = rho.matrix();
    let mut mx = 0.0;
    for j in 0..l {
        let bit = 1usize << j;
        for a in 0..rho.dimension() {
            mx += m[(a, a ^ bit)].re;
        }
    }
    Ok(match run.noise {
        NoiseModel::Analytic => {
            let t = (run.n_dd as f64 + 1.0) * run.tau;
            mx * (-(t / t2_dd(run.t2_echo, run.n_dd)?).powi(3)).exp()
        }
        _ => mx,
    })
}

/// `p(GHZ)` after the spin echo `[τ, π, τ, π]` from `𝕀/2^M ⊗ |GHZ⟩⟨GHZ|`.
pub fn run_ghz_protocol(sys: &QuantumSystem, run: &ProtocolRun) -> Result<f64> {
    let echo = ProtocolRun { n_dd: 1, ..*run };
    echo.check()?;
    require_probes(sys)?;
    let l = sys.l_probe();
    let rho0 = nuclear_state(sys.m_nuclear(), run.nuclear_init)?.tensor(&probe_ghz_state(l)?);
    let rho = pulse_train(sys, rho0, &echo, 2)?;
    let observable = match run.noise {
        NoiseModel::Analytic => dephased_ghz_observable(l, 2.0 * run.tau, run.t2_echo)?,
        _ => dephased_ghz_observable(l, 0.0, 1.0)?,
    };
    Ok(probe_expectation(&rho, l, &observable))
}

/// Runs `protocol` from each nuclear basis state and averages the results.
pub fn average_over_nuclear_basis(
    sys: &QuantumSystem,
    run: &ProtocolRun,
    protocol: fn(&QuantumSystem, &ProtocolRun) -> Result<f64>,
) -> Result<f64> {
    let dim = 1usize << sys.m_nuclear();
    let mut total = 0.0;
    for k in 0..dim {
        total += protocol(
            sys,
            &ProtocolRun {
                nuclear_init: NuclearInit::Basis(k),
                ..*run
            },
        )?;
    }
    Ok(total / dim as f64)
}

/// `½[|0…0⟩⟨0…0| + |1…1⟩⟨1…1| + e^{−L(t/T₂)³}(|0…0⟩⟨1…1| + h.c.)]`.
pub fn dephased_ghz_observable(l: usize, t: f64, t2: f64) -> Result<CMatrix> {
    if l == 0 {
        return Err(Error::Domain(
            "GHZ observable needs at least one probe".into(),
        ));
    }
    let coherence = DephasingChannel::new(t, t2)?.attenuation().powi(l as i32);
    let dim = 1usize << l;
    let mut op = CMatrix::zeros(dim, dim);
    op[(0, 0)] = Complex64::new(0.5, 0.0);
    op[(dim - 1, dim - 1)] = Complex64::new(0.5, 0.0);
    if dim > 1 {
        op[(0, dim - 1)] = Complex64::new(0.5 * coherence, 0.0);
        op[(dim - 1, 0)] = Complex64::new(0.5 * coherence, 0.0);
    }
    Ok(op)
}

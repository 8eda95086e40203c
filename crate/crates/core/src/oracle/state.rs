use nalgebra::SymmetricEigen;
use num_complex::Complex64;

use super::system::hermiticity_defect;
use super::CMatrix;
use crate::error::{Error, Result};

/// Trace tolerance of a valid state.
pub const TRACE_TOL: f64 = 1e-12;
/// Most negative eigenvalue tolerated in a valid state.
pub const EIGEN_TOL: f64 = 1e-10;

/// A density matrix over `qubits` qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityState {
    matrix: CMatrix,
    qubits: usize,
}

impl DensityState {
    /// Validates trace, Hermiticity and positivity.
    pub fn new(matrix: CMatrix) -> Result<Self> {
        let state = Self::unchecked(matrix)?;
        state.validate()?;
        Ok(state)
    }

    pub(crate) fn unchecked(matrix: CMatrix) -> Result<Self> {
        let dim = matrix.nrows();
        if dim == 0 || matrix.ncols() != dim || !dim.is_power_of_two() {
            return Err(Error::Domain(format!(
                "density matrix must be square with power-of-two size, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        Ok(Self {
            qubits: dim.trailing_zeros() as usize,
            matrix,
        })
    }

    /// Pure state `|ψ⟩⟨ψ|`; `psi` is normalized here.
    pub fn pure(psi: &[Complex64]) -> Result<Self> {
        let norm = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::Domain("zero state vector".into()));
        }
        let v = nalgebra::DVector::from_iterator(psi.len(), psi.iter().map(|z| z / norm));
        Self::new(&v * v.adjoint())
    }

    pub fn maximally_mixed(qubits: usize) -> Self {
        let dim = 1 << qubits;
        Self {
            matrix: CMatrix::identity(dim, dim) / Complex64::new(dim as f64, 0.0),
            qubits,
        }
    }

    /// `self ⊗ other`, with `self` on the leftmost qubits.
    pub fn tensor(&self, other: &DensityState) -> DensityState {
        DensityState {
            matrix: self.matrix.kronecker(&other.matrix),
            qubits: self.qubits + other.qubits,
        }
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn qubits(&self) -> usize {
        self.qubits
    }

    pub fn dimension(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn trace(&self) -> Complex64 {
        self.matrix.trace()
    }

    /// `Tr[ρ O]`.
    pub fn expectation(&self, op: &CMatrix) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..self.dimension() {
            for j in 0..self.dimension() {
                acc += self.matrix[(i, j)] * op[(j, i)];
            }
        }
        acc
    }

    pub fn min_eigenvalue(&self) -> f64 {
        SymmetricEigen::new(self.matrix.clone())
            .eigenvalues
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    /// Unit trace and Hermiticity only.
    pub fn validate_cheap(&self) -> Result<()> {
        let tr = self.trace();
        if (tr - Complex64::new(1.0, 0.0)).norm() > TRACE_TOL {
            return Err(Error::Numeric(format!("trace drifted to {tr}")));
        }
        let h = hermiticity_defect(&self.matrix);
        if h > TRACE_TOL {
            return Err(Error::Numeric(format!(
                "state not Hermitian (defect {h:e})"
            )));
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.validate_cheap()?;
        let min = self.min_eigenvalue();
        if min < -EIGEN_TOL {
            return Err(Error::Numeric(format!("negative eigenvalue {min:e}")));
        }
        Ok(())
    }
}

/// `U ρ U†` for `U = exp(−iH t)`.
pub fn evolve(state: &DensityState, propagator: &CMatrix) -> Result<DensityState> {
    if propagator.nrows() != state.dimension() || propagator.ncols() != state.dimension() {
        return Err(Error::Domain(format!(
            "propagator size {}x{} does not match state dimension {}",
            propagator.nrows(),
            propagator.ncols(),
            state.dimension()
        )));
    }
    let next = propagator * &state.matrix * propagator.adjoint();
    Ok(DensityState {
        matrix: next,
        qubits: state.qubits,
    })
}

/// Conjugation by `⊗_j σ_x,j` on the `probes` least-significant qubits.
pub fn pi_pulse_probes(state: &DensityState, probes: usize) -> DensityState {
    let mask = (1usize << probes) - 1;
    let dim = state.dimension();
    let matrix = CMatrix::from_fn(dim, dim, |a, b| state.matrix[(a ^ mask, b ^ mask)]);
    DensityState {
        matrix,
        qubits: state.qubits,
    }
}

/// Single-qubit dephasing `ρ → (1+e)/2 ρ + (1−e)/2 σ_z ρ σ_z` with
/// `e = exp(−(t/T₂)³)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DephasingChannel {
    t: f64,
    t2: f64,
}

impl DephasingChannel {
    pub fn new(t: f64, t2: f64) -> Result<Self> {
        if !(t >= 0.0) || !(t2 > 0.0) {
            return Err(Error::Domain(format!(
                "dephasing needs t ≥ 0 and T2 > 0 (got t = {t}, T2 = {t2})"
            )));
        }
        Ok(Self { t, t2 })
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn t2(&self) -> f64 {
        self.t2
    }

    pub fn attenuation(&self) -> f64 {
        (-(self.t / self.t2).powi(3)).exp()
    }

    /// Kraus weights `((1+e)/2, (1−e)/2)` of `𝕀` and `σ_z`.
    pub fn kraus_weights(&self) -> (f64, f64) {
        let e = self.attenuation();
        (0.5 * (1.0 + e), 0.5 * (1.0 - e))
    }
}

/// Applies `channel` independently to each qubit in `qubits` (indices from the left).
pub fn apply_dephasing_channel(
    state: &DensityState,
    channel: &DephasingChannel,
    qubits: &[usize],
) -> Result<DensityState> {
    let n = state.qubits;
    if let Some(&q) = qubits.iter().find(|&&q| q >= n) {
        return Err(Error::Domain(format!(
            "qubit {q} out of range for {n} qubits"
        )));
    }
    let (keep, flip) = channel.kraus_weights();
    let mut matrix = state.matrix.clone();
    for &q in qubits {
        let bit = n - 1 - q;
        let dim = state.dimension();
        for a in 0..dim {
            let za = if (a >> bit) & 1 == 0 { 1.0 } else { -1.0 };
            for b in 0..dim {
                let zb = if (b >> bit) & 1 == 0 { 1.0 } else { -1.0 };
                // σ_z ρ σ_z picks up z_a z_b
                matrix[(a, b)] *= keep + flip * za * zb;
            }
        }
    }
    Ok(DensityState {
        matrix,
        qubits: state.qubits,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn plus() -> DensityState {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        DensityState::pure(&[Complex64::new(s, 0.0), Complex64::new(s, 0.0)]).unwrap()
    }

    fn sigma_x() -> CMatrix {
        CMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0].map(|x| Complex64::new(x, 0.0)))
    }

    fn random_state(rng: &mut ChaCha8Rng, qubits: usize) -> DensityState {
        let dim = 1 << qubits;
        let g = CMatrix::from_fn(dim, dim, |_, _| {
            Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
        });
        let rho = &g * g.adjoint();
        let tr = rho.trace();
        DensityState::new(rho / tr).unwrap()
    }

    #[test]
    fn invalid_states_are_rejected() {
        let bad = CMatrix::identity(2, 2);
        assert!(DensityState::new(bad).is_err());
        let neg =
            CMatrix::from_row_slice(2, 2, &[1.5, 0.0, 0.0, -0.5].map(|x| Complex64::new(x, 0.0)));
        assert!(DensityState::new(neg).is_err());
        assert!(DensityState::new(CMatrix::identity(3, 3) / Complex64::new(3.0, 0.0)).is_err());
    }

    #[test]
    fn pulse_is_an_involution_and_fixes_plus() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let rho = random_state(&mut rng, 3);
        let twice = pi_pulse_probes(&pi_pulse_probes(&rho, 2), 2);
        assert_eq!(twice, rho);
        let p = plus().tensor(&plus());
        let flipped = pi_pulse_probes(&p, 2);
        let diff = (flipped.matrix() - p.matrix())
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        assert!(diff < 1e-15);
    }

    #[test]
    fn dephasing_attenuates_sigma_x() {
        let ch = DephasingChannel::new(0.7, 1.3).unwrap();
        let out = apply_dephasing_channel(&plus(), &ch, &[0]).unwrap();
        let x = out.expectation(&sigma_x()).re;
        assert!((x - (-(0.7f64 / 1.3).powi(3)).exp()).abs() < 1e-15);
    }

    #[test]
    fn dephasing_leaves_diagonal_states() {
        let rho = DensityState::new(CMatrix::from_diagonal(&nalgebra::DVector::from_vec(
            [0.1, 0.2, 0.3, 0.4]
                .map(|x| Complex64::new(x, 0.0))
                .to_vec(),
        )))
        .unwrap();
        let ch = DephasingChannel::new(2.0, 1.0).unwrap();
        assert_eq!(apply_dephasing_channel(&rho, &ch, &[0, 1]).unwrap(), rho);
    }

    #[test]
    fn dephasing_is_cptp_on_random_states() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let ch = DephasingChannel::new(0.9, 1.0).unwrap();
        for _ in 0..100 {
            let rho = random_state(&mut rng, 2);
            let out = apply_dephasing_channel(&rho, &ch, &[0, 1]).unwrap();
            assert!((out.trace().re - 1.0).abs() <= TRACE_TOL);
            assert!(out.min_eigenvalue() >= -EIGEN_TOL);
        }
    }

    #[test]
    fn channel_domain() {
        assert!(DephasingChannel::new(-1.0, 1.0).is_err());
        assert!(DephasingChannel::new(1.0, 0.0).is_err());
        assert_eq!(DephasingChannel::new(0.0, 1.0).unwrap().attenuation(), 1.0);
    }
}

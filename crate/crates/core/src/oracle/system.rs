use nalgebra::SymmetricEigen;
use num_complex::Complex64;

use super::CMatrix;
use crate::error::{Error, Result};
use crate::model::{pair_coefficients, PhysicalScenario, SiteRole, SpinSite};

/// Largest Hilbert-space dimension built by default (twelve qubits).
pub const DEFAULT_DIMENSION_CAP: usize = 1 << 12;

fn check_dimension(qubits: usize, cap: usize) -> Result<usize> {
    let dimension = 1usize.checked_shl(qubits as u32).unwrap_or(usize::MAX);
    if qubits >= usize::BITS as usize || dimension > cap {
        return Err(Error::Resource { dimension, cap });
    }
    Ok(dimension)
}

/// `H = Σ_k (ω/2) σ_z,k + G Σ_{k,j} [A σ_x,k + B σ_y,k + C σ_z,k] σ_z,j`
/// with `A, B, C` evaluated at `r_k − r_j` (nucleus minus probe).
pub fn build_effective_hamiltonian(
    nuclear: &[SpinSite],
    probes: &[SpinSite],
    coupling: f64,
    omega_target: f64,
    cap: usize,
) -> Result<CMatrix> {
    let m = nuclear.len();
    let l = probes.len();
    let n = m + l;
    let dim = check_dimension(n, cap)?;

    let mut a = vec![vec![0.0; l]; m];
    let mut b = vec![vec![0.0; l]; m];
    let mut c = vec![vec![0.0; l]; m];
    for (k, nuc) in nuclear.iter().enumerate() {
        for (j, probe) in probes.iter().enumerate() {
            let d = pair_coefficients(nuc, probe)?;
            a[k][j] = d.a;
            b[k][j] = d.b;
            c[k][j] = d.c;
        }
    }

    let z = |s: usize, q: usize| {
        if (s >> (n - 1 - q)) & 1 == 0 {
            1.0
        } else {
            -1.0
        }
    };
    let mut h = CMatrix::zeros(dim, dim);
    for s in 0..dim {
        let mut diag = 0.0;
        for k in 0..m {
            let zk = z(s, k);
            diag += 0.5 * omega_target * zk;
            let (mut hx, mut hy) = (0.0, 0.0);
            for j in 0..l {
                let zj = z(s, m + j);
                diag += coupling * c[k][j] * zk * zj;
                hx += coupling * a[k][j] * zj;
                hy += coupling * b[k][j] * zj;
            }
            // σ_x|0⟩ = |1⟩, σ_y|0⟩ = i|1⟩, σ_y|1⟩ = −i|0⟩
            let flipped = s ^ (1 << (n - 1 - k));
            let y_phase = if zk > 0.0 {
                Complex64::i()
            } else {
                -Complex64::i()
            };
            h[(flipped, s)] += Complex64::new(hx, 0.0) + y_phase * hy;
        }
        h[(s, s)] += Complex64::new(diag, 0.0);
    }
    Ok(h)
}

pub(crate) fn hermiticity_defect(h: &CMatrix) -> f64 {
    let mut worst = 0.0_f64;
    for i in 0..h.nrows() {
        for j in 0..=i {
            worst = worst.max((h[(i, j)] - h[(j, i)].conj()).norm());
        }
    }
    worst
}

/// Nuclear and probe qubits with their effective Hamiltonian and its
/// eigendecomposition.
#[derive(Debug, Clone)]
pub struct QuantumSystem {
    nuclear_sites: Vec<SpinSite>,
    probe_sites: Vec<SpinSite>,
    coupling: f64,
    omega_target: f64,
    cap: usize,
    hamiltonian: CMatrix,
    energies: Vec<f64>,
    eigenvectors: CMatrix,
}

impl QuantumSystem {
    /// `coupling` is the Hamiltonian coupling `G` (rad·s⁻¹ times site units³).
    pub fn new(
        nuclear: Vec<SpinSite>,
        probes: Vec<SpinSite>,
        coupling: f64,
        omega_target: f64,
    ) -> Result<Self> {
        Self::with_cap(
            nuclear,
            probes,
            coupling,
            omega_target,
            DEFAULT_DIMENSION_CAP,
        )
    }

    pub fn from_scenario(
        nuclear: Vec<SpinSite>,
        probes: Vec<SpinSite>,
        scenario: &PhysicalScenario,
    ) -> Result<Self> {
        Self::new(
            nuclear,
            probes,
            scenario.dynamics_coupling(),
            scenario.omega_target(),
        )
    }

    pub fn with_cap(
        nuclear: Vec<SpinSite>,
        probes: Vec<SpinSite>,
        coupling: f64,
        omega_target: f64,
        cap: usize,
    ) -> Result<Self> {
        if nuclear.is_empty() {
            return Err(Error::Domain(
                "at least one nuclear spin is required".into(),
            ));
        }
        if let Some(s) = nuclear.iter().find(|s| s.role != SiteRole::Nuclear) {
            return Err(Error::Domain(format!(
                "probe site {:?} in the nuclear list",
                s.position
            )));
        }
        if let Some(s) = probes.iter().find(|s| s.role != SiteRole::Probe) {
            return Err(Error::Domain(format!(
                "nuclear site {:?} in the probe list",
                s.position
            )));
        }
        if !coupling.is_finite() || !omega_target.is_finite() {
            return Err(Error::Domain(
                "coupling and frequency must be finite".into(),
            ));
        }
        let hamiltonian =
            build_effective_hamiltonian(&nuclear, &probes, coupling, omega_target, cap)?;
        let defect = hermiticity_defect(&hamiltonian);
        let scale = hamiltonian
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
            .max(1.0);
        if defect > 1e-12 * scale {
            return Err(Error::Numeric(format!(
                "Hamiltonian not Hermitian (defect {defect:e})"
            )));
        }
        let eig = SymmetricEigen::new(hamiltonian.clone());
        if eig.eigenvalues.iter().any(|e| !e.is_finite()) {
            return Err(Error::Numeric(
                "eigendecomposition produced non-finite values".into(),
            ));
        }
        Ok(Self {
            nuclear_sites: nuclear,
            probe_sites: probes,
            coupling,
            omega_target,
            cap,
            hamiltonian,
            energies: eig.eigenvalues.iter().copied().collect(),
            eigenvectors: eig.eigenvectors,
        })
    }

    pub fn m_nuclear(&self) -> usize {
        self.nuclear_sites.len()
    }

    pub fn l_probe(&self) -> usize {
        self.probe_sites.len()
    }

    pub fn qubits(&self) -> usize {
        self.m_nuclear() + self.l_probe()
    }

    pub fn dimension(&self) -> usize {
        self.hamiltonian.nrows()
    }

    pub fn nuclear_sites(&self) -> &[SpinSite] {
        &self.nuclear_sites
    }

    pub fn probe_sites(&self) -> &[SpinSite] {
        &self.probe_sites
    }

    pub fn coupling(&self) -> f64 {
        self.coupling
    }

    pub fn omega_target(&self) -> f64 {
        self.omega_target
    }

    pub fn hamiltonian(&self) -> &CMatrix {
        &self.hamiltonian
    }

    /// The same sites with every `σ_z,j` probe term negated, i.e. `G → −G`.
    pub fn probe_flipped(&self) -> Result<Self> {
        Self::with_cap(
            self.nuclear_sites.clone(),
            self.probe_sites.clone(),
            -self.coupling,
            self.omega_target,
            self.cap,
        )
    }

    /// Same sites and frequency with a different coupling.
    pub fn with_coupling(&self, coupling: f64) -> Result<Self> {
        Self::with_cap(
            self.nuclear_sites.clone(),
            self.probe_sites.clone(),
            coupling,
            self.omega_target,
            self.cap,
        )
    }

    /// `U(t) = exp(−iHt)`, checked for unitarity.
    pub fn propagator(&self, t: f64) -> Result<CMatrix> {
        if !t.is_finite() {
            return Err(Error::Domain(format!(
                "evolution time must be finite, got {t}"
            )));
        }
        let v = &self.eigenvectors;
        let mut scaled = v.clone();
        for (col, &e) in self.energies.iter().enumerate() {
            let phase = Complex64::from_polar(1.0, -e * t);
            for row in 0..scaled.nrows() {
                scaled[(row, col)] *= phase;
            }
        }
        let u = scaled * v.adjoint();
        let defect = (u.adjoint() * &u - CMatrix::identity(u.nrows(), u.ncols()))
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        if defect > 1e-10 {
            return Err(Error::Numeric(format!(
                "propagator not unitary (defect {defect:e})"
            )));
        }
        Ok(u)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn single_nucleus_is_zeeman_term() {
        let h = build_effective_hamiltonian(&[SpinSite::nuclear(0.0, 0.0, 0.0)], &[], 0.3, 2.0, 16)
            .unwrap();
        assert_eq!(h.nrows(), 2);
        assert_eq!(h[(0, 0)], c(1.0));
        assert_eq!(h[(1, 1)], c(-1.0));
        assert_eq!(h[(0, 1)], c(0.0));
    }

    #[test]
    fn zero_coupling_is_diagonal() {
        let h = build_effective_hamiltonian(
            &[
                SpinSite::nuclear(0.0, 0.0, 0.0),
                SpinSite::nuclear(1.0, 0.0, 0.0),
            ],
            &[SpinSite::probe(0.3, 0.2, 1.0)],
            0.0,
            1.5,
            64,
        )
        .unwrap();
        for i in 0..8 {
            for j in 0..8 {
                if i != j {
                    assert_eq!(h[(i, j)], c(0.0));
                }
            }
        }
        // |000⟩: both nuclei up
        assert_eq!(h[(0, 0)], c(1.5));
        assert_eq!(h[(0b110, 0b110)], c(-1.5));
    }

    #[test]
    fn on_axis_probe_couples_through_zz_only() {
        let d = 2.0;
        let (g, w) = (0.1, 1.0);
        let h = build_effective_hamiltonian(
            &[SpinSite::nuclear(0.0, 0.0, 0.0)],
            &[SpinSite::probe(0.0, 0.0, d)],
            g,
            w,
            16,
        )
        .unwrap();
        let zz = g * (-2.0 / (d * d * d));
        let expect = [0.5 * w + zz, 0.5 * w - zz, -0.5 * w - zz, -0.5 * w + zz];
        for s in 0..4 {
            assert!((h[(s, s)] - c(expect[s])).norm() < 1e-15);
            for t in 0..4 {
                if s != t {
                    assert!(h[(s, t)].norm() < 1e-15);
                }
            }
        }
    }

    #[test]
    fn off_axis_hamiltonian_is_hermitian() {
        let sys = QuantumSystem::new(
            vec![SpinSite::nuclear(0.0, 0.0, 0.0)],
            vec![
                SpinSite::probe(0.4, -0.3, 1.1),
                SpinSite::probe(-0.7, 0.2, 1.3),
            ],
            0.05,
            1.0,
        )
        .unwrap();
        assert!(hermiticity_defect(sys.hamiltonian()) < 1e-15);
        assert!(sys.hamiltonian()[(4, 0)].im.abs() > 0.0);
    }

    #[test]
    fn cap_is_enforced() {
        let probes: Vec<_> = (0..4)
            .map(|i| SpinSite::probe(i as f64, 0.0, 1.0))
            .collect();
        let err =
            QuantumSystem::with_cap(vec![SpinSite::nuclear(0.0, 0.0, 0.0)], probes, 1.0, 1.0, 16)
                .unwrap_err();
        assert_eq!(
            err,
            Error::Resource {
                dimension: 32,
                cap: 16
            }
        );
    }

    #[test]
    fn coincident_sites_are_rejected() {
        let err = QuantumSystem::new(
            vec![SpinSite::nuclear(0.0, 0.0, 1.0)],
            vec![SpinSite::probe(0.0, 0.0, 1.0)],
            1.0,
            1.0,
        )
        .unwrap_err();
        assert!(matches!(err, Error::Singularity { .. }));
    }

    #[test]
    fn propagator_group_property() {
        let sys = QuantumSystem::new(
            vec![SpinSite::nuclear(0.0, 0.0, 0.0)],
            vec![
                SpinSite::probe(0.4, -0.3, 1.1),
                SpinSite::probe(-0.7, 0.2, 1.3),
            ],
            0.05,
            1.0,
        )
        .unwrap();
        let u1 = sys.propagator(0.37).unwrap();
        let u2 = sys.propagator(0.74).unwrap();
        let diff = (&u1 * &u1 - u2)
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        assert!(diff < 1e-12);
        let id = sys.propagator(0.0).unwrap();
        let diff = (id - CMatrix::identity(8, 8))
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        assert!(diff < 1e-14);
    }
}

//! Thermal-equilibrium states of the star-topology register and their
//! analytic derivatives with respect to the target orientation.
//!
//! All states share the form identity/2^N plus a traceless deviation that is
//! linear in the purity factors. Purity factors are quoted per qubit:
//! `eps_X1` refers to the N = 1 convention and scales as
//! `eps_XN = eps_X1 * 2 / 2^N` so deviations keep a fixed norm as the
//! register grows.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fisher::Param;
use crate::operators::{
    self, c, check_register_size, collective_ancilla_op, identity, pauli, Axis, CMatrix,
    DensityMatrix,
};

/// Reduced Planck constant, J s.
pub const HBAR: f64 = 1.054_571_817e-34;
/// Boltzmann constant, J / K.
pub const K_BOLTZMANN: f64 = 1.380_649e-23;

/// Orientation of the target deviation on the Bloch sphere.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlochAngles {
    theta0: f64,
    phi0: f64,
}

impl BlochAngles {
    /// Validates theta0 in [0, pi] and wraps phi0 into [0, 2 pi).
    pub fn new(theta0: f64, phi0: f64) -> Result<Self> {
        if !(0.0..=std::f64::consts::PI).contains(&theta0) {
            return Err(Error::InvalidAngle { theta0 });
        }
        let mut phi0 = phi0 % TAU;
        if phi0 < 0.0 {
            phi0 += TAU;
        }
        Ok(Self { theta0, phi0 })
    }

    pub fn theta0(&self) -> f64 {
        self.theta0
    }

    pub fn phi0(&self) -> f64 {
        self.phi0
    }

    /// Unit Bloch vector (sin t cos p, sin t sin p, cos t).
    pub fn unit_vector(&self) -> [f64; 3] {
        let (st, ct) = self.theta0.sin_cos();
        let (sp, cp) = self.phi0.sin_cos();
        [st * cp, st * sp, ct]
    }
}

/// Register geometry and per-qubit purity factors: one target qubit coupled
/// to n_qubits - 1 equivalent ancillas.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StrConfig {
    n_qubits: usize,
    eps_t1: f64,
    eps_a1: f64,
}

impl StrConfig {
    /// Validates the register size and that the combined deviation keeps every
    /// state in the family positive semidefinite: eps_t1 + eps_a1 (N-1) <= 1.
    pub fn new(n_qubits: usize, eps_t1: f64, eps_a1: f64) -> Result<Self> {
        check_register_size(n_qubits, 2)?;
        if !eps_t1.is_finite() || !eps_a1.is_finite() || eps_t1 < 0.0 || eps_a1 < 0.0 {
            return Err(Error::InvalidPurity {
                detail: format!("purity factors must be finite and nonnegative, got eps_t1 = {eps_t1}, eps_a1 = {eps_a1}"),
            });
        }
        let load = eps_t1 + eps_a1 * (n_qubits - 1) as f64;
        if load > 1.0 + 1e-12 {
            return Err(Error::InvalidPurity {
                detail: format!(
                    "eps_t1 + eps_a1 (N-1) = {load} exceeds 1; some family members would have negative eigenvalues"
                ),
            });
        }
        Ok(Self {
            n_qubits,
            eps_t1,
            eps_a1,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn eps_t1(&self) -> f64 {
        self.eps_t1
    }

    pub fn eps_a1(&self) -> f64 {
        self.eps_a1
    }

    pub fn dim(&self) -> usize {
        1 << self.n_qubits
    }

    /// Target purity factor at this register size.
    pub fn eps_t_n(&self) -> f64 {
        self.eps_t1 * 2.0 / self.dim() as f64
    }

    /// Ancilla purity factor at this register size.
    pub fn eps_a_n(&self) -> f64 {
        self.eps_a1 * 2.0 / self.dim() as f64
    }
}

/// Traceless target deviation sigma_{theta0, phi0} =
/// sin t cos p sigma_x + sin t sin p sigma_y + cos t sigma_z.
pub fn bloch_deviation(angles: &BlochAngles) -> CMatrix {
    let [x, y, z] = angles.unit_vector();
    pauli(Axis::X) * c(x, 0.0) + pauli(Axis::Y) * c(y, 0.0) + pauli(Axis::Z) * c(z, 0.0)
}

/// d sigma_{theta0, phi0} / d theta0.
pub fn bloch_deviation_dtheta(angles: &BlochAngles) -> CMatrix {
    let (st, ct) = angles.theta0.sin_cos();
    let (sp, cp) = angles.phi0.sin_cos();
    pauli(Axis::X) * c(ct * cp, 0.0) + pauli(Axis::Y) * c(ct * sp, 0.0)
        - pauli(Axis::Z) * c(st, 0.0)
}

/// d sigma_{theta0, phi0} / d phi0.
pub fn bloch_deviation_dphi(angles: &BlochAngles) -> CMatrix {
    let (st, _) = angles.theta0.sin_cos();
    let (sp, cp) = angles.phi0.sin_cos();
    pauli(Axis::X) * c(-st * sp, 0.0) + pauli(Axis::Y) * c(st * cp, 0.0)
}

/// Single qubit at purity eps pointed along `angles`:
/// rho = identity/2 + eps sigma_{theta0, phi0} / 2.
pub fn single_qubit_state(angles: &BlochAngles, eps: f64) -> Result<DensityMatrix> {
    if !(0.0..=1.0).contains(&eps) {
        return Err(Error::InvalidPurity {
            detail: format!("single-qubit purity factor must lie in [0, 1], got {eps}"),
        });
    }
    let mat = (identity(2) + bloch_deviation(angles) * c(eps, 0.0)) * c(0.5, 0.0);
    Ok(DensityMatrix::from_validated(mat, 1))
}

/// High-temperature thermal state of the full register:
/// identity/2^N + eps_tN I_1z + eps_aN sum_{i>=2} I_iz.
pub fn str_thermal(config: &StrConfig) -> Result<DensityMatrix> {
    let dim = config.dim();
    let i1z = operators::spin_op(config.n_qubits, 1, Axis::Z)?;
    let az = collective_ancilla_op(config.n_qubits, Axis::Z)?;
    let mat = identity(dim) * c(1.0 / dim as f64, 0.0)
        + i1z * c(config.eps_t_n(), 0.0)
        + az * c(config.eps_a_n(), 0.0);
    Ok(DensityMatrix::from_validated(mat, config.n_qubits))
}

/// Correlated register state with the target deviation along z:
/// identity/2^N + eps_aN 2 I_1z sum_{i>=2} I_iz.
pub fn str_correlated(config: &StrConfig) -> Result<DensityMatrix> {
    str_target_rotated(config, &BlochAngles::new(0.0, 0.0)?)
}

/// Correlated register state with the target deviation rotated to `angles`:
/// identity/2^N + eps_aN (sigma_{theta0, phi0} x identity) sum_{i>=2} I_iz.
pub fn str_target_rotated(config: &StrConfig, angles: &BlochAngles) -> Result<DensityMatrix> {
    let dim = config.dim();
    let dev = correlated_deviation(config, &bloch_deviation(angles))?;
    let mat = identity(dim) * c(1.0 / dim as f64, 0.0) + dev * c(config.eps_a_n(), 0.0);
    Ok(DensityMatrix::from_validated(mat, config.n_qubits))
}

/// (target 2x2 block) x identity acting before the collective ancilla z sum.
/// Shared by the correlated state and its angle derivatives.
fn correlated_deviation(config: &StrConfig, target_block: &CMatrix) -> Result<CMatrix> {
    let az = collective_ancilla_op(config.n_qubits, Axis::Z)?;
    let embedded = target_block.kronecker(&identity(1 << (config.n_qubits - 1)));
    Ok(embedded * az)
}

/// Uncorrelated register state: both species polarized independently,
/// identity/2^N + eps_tN (sigma x identity)/2 + eps_aN sum_{i>=2} I_iz.
pub fn str_uncorrelated(config: &StrConfig, angles: &BlochAngles) -> Result<DensityMatrix> {
    let dim = config.dim();
    let dev_t = bloch_deviation(angles).kronecker(&identity(1 << (config.n_qubits - 1)));
    let az = collective_ancilla_op(config.n_qubits, Axis::Z)?;
    let mat = identity(dim) * c(1.0 / dim as f64, 0.0)
        + dev_t * c(config.eps_t_n() / 2.0, 0.0)
        + az * c(config.eps_a_n(), 0.0);
    Ok(DensityMatrix::from_validated(mat, config.n_qubits))
}

/// Per-qubit purity factors (eps_tN, eps_aN) from physical parameters:
/// eps_XN = hbar gamma_X B0 / (2^N k_B T).
pub fn purity_factors(
    gamma_t: f64,
    gamma_a: f64,
    b0: f64,
    temperature: f64,
    n_qubits: usize,
) -> Result<(f64, f64)> {
    check_register_size(n_qubits, 1)?;
    if gamma_t <= 0.0 || gamma_a <= 0.0 || b0 <= 0.0 || temperature <= 0.0 {
        return Err(Error::InvalidArgument(
            "gyromagnetic ratios, field, and temperature must be positive".into(),
        ));
    }
    let denom = (1u64 << n_qubits) as f64 * K_BOLTZMANN * temperature;
    Ok((
        HBAR * gamma_t * b0 / denom,
        HBAR * gamma_a * b0 / denom,
    ))
}

/// A one-parameter-differentiable family of register states. The family fixes
/// the base orientation; Fisher information is evaluated at that point.
#[derive(Debug, Clone)]
pub enum StateFamily {
    SingleQubit { angles: BlochAngles, eps: f64 },
    StrCorrelated { config: StrConfig, angles: BlochAngles },
    StrUncorrelated { config: StrConfig, angles: BlochAngles },
}

impl StateFamily {
    pub fn angles(&self) -> &BlochAngles {
        match self {
            StateFamily::SingleQubit { angles, .. }
            | StateFamily::StrCorrelated { angles, .. }
            | StateFamily::StrUncorrelated { angles, .. } => angles,
        }
    }

    pub fn n_qubits(&self) -> usize {
        match self {
            StateFamily::SingleQubit { .. } => 1,
            StateFamily::StrCorrelated { config, .. }
            | StateFamily::StrUncorrelated { config, .. } => config.n_qubits(),
        }
    }

    pub fn density_matrix(&self) -> Result<DensityMatrix> {
        self.density_matrix_at(self.angles())
    }

    /// Evaluate the family at a different orientation (used by the
    /// finite-difference consistency checks).
    pub fn density_matrix_at(&self, angles: &BlochAngles) -> Result<DensityMatrix> {
        match self {
            StateFamily::SingleQubit { eps, .. } => single_qubit_state(angles, *eps),
            StateFamily::StrCorrelated { config, .. } => str_target_rotated(config, angles),
            StateFamily::StrUncorrelated { config, .. } => str_uncorrelated(config, angles),
        }
    }

    /// Analytic derivative of the density matrix with respect to `param`,
    /// evaluated at the family's own orientation.
    pub fn derivative(&self, param: Param) -> Result<CMatrix> {
        let angles = self.angles();
        let dsigma = match param {
            Param::Theta => bloch_deviation_dtheta(angles),
            Param::Phi => bloch_deviation_dphi(angles),
        };
        match self {
            StateFamily::SingleQubit { eps, .. } => Ok(dsigma * c(eps / 2.0, 0.0)),
            StateFamily::StrCorrelated { config, .. } => {
                Ok(correlated_deviation(config, &dsigma)? * c(config.eps_a_n(), 0.0))
            }
            StateFamily::StrUncorrelated { config, .. } => {
                let embedded = dsigma.kronecker(&identity(1 << (config.n_qubits() - 1)));
                Ok(embedded * c(config.eps_t_n() / 2.0, 0.0))
            }
        }
    }
}

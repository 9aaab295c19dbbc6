//! Fisher-information engine: classical Fisher information of an observable
//! on a parametrized state family, symmetric logarithmic derivative (SLD)
//! construction, maximum quantum Fisher information, biased closed forms,
//! quadrature additivity, the dual-parameter combination, and Cramér-Rao
//! bounds.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operators::{
    c, hermitian_eig, hermiticity_deviation, max_abs, trace_product, CMatrix, DensityMatrix,
    Observable, SpectralDecomposition, GROUPING_TOL,
};
use crate::states::{BlochAngles, StateFamily};

/// Outcomes with probability below this floor are candidates for exclusion.
pub const PROB_FLOOR: f64 = 1e-14;
/// A sub-floor outcome whose probability derivative exceeds this magnitude
/// signals a genuinely divergent Fisher information.
pub const DPROB_FLOOR: f64 = 1e-12;
/// Eigenvalue pairs with lambda_i + lambda_j at or below this are omitted
/// from the SLD sum (kernel-kernel pairs of rank-deficient states).
pub const SLD_PAIR_FLOOR: f64 = 1e-12;

/// Relative agreement demanded between the two independent QFI routes.
const ROUTE_RTOL: f64 = 1e-9;
const ROUTE_ATOL: f64 = 1e-18;

/// Which of the two target-orientation parameters is being estimated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Param {
    Theta,
    Phi,
}

impl std::fmt::Display for Param {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Param::Theta => write!(f, "theta"),
            Param::Phi => write!(f, "phi"),
        }
    }
}

/// How measurement outcomes are extracted from an observable's spectrum.
///
/// `Projector` sums probability within each degenerate eigenvalue (the
/// physically distinguishable outcomes) and is the default. `Eigenvector`
/// treats every eigenvector as its own outcome; for degenerate spectra the
/// split depends on the numerical basis choice, so it is offered only for
/// comparison. The two modes agree exactly on nondegenerate observables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GroupingMode {
    #[default]
    Projector,
    Eigenvector,
}

/// A classical or quantum Fisher information value with its bookkeeping.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct FisherResult {
    value: f64,
    param: Param,
    grouping_mode: GroupingMode,
    excluded_outcomes: usize,
}

impl FisherResult {
    pub fn value(&self) -> f64 {
        self.value
    }

    pub fn param(&self) -> Param {
        self.param
    }

    pub fn grouping_mode(&self) -> GroupingMode {
        self.grouping_mode
    }

    /// Number of zero-probability outcomes skipped (for `qfi_max`, the number
    /// of kernel eigenvalue pairs omitted from the spectral sum).
    pub fn excluded_outcomes(&self) -> usize {
        self.excluded_outcomes
    }
}

/// The symmetric logarithmic derivative: the Hermitian operator L solving
/// d rho / d param = (L rho + rho L) / 2. Measuring L attains the maximum
/// Fisher information for `param`.
#[derive(Debug, Clone)]
pub struct SldObservable {
    matrix: CMatrix,
    param: Param,
    flow_residual: f64,
}

impl SldObservable {
    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn param(&self) -> Param {
        self.param
    }

    /// max|d rho - (L rho + rho L)/2| over matrix entries.
    pub fn flow_residual(&self) -> f64 {
        self.flow_residual
    }

    /// Wraps the SLD matrix as a measurable observable.
    pub fn to_observable(&self) -> Result<Observable> {
        Observable::new(self.matrix.clone())
    }
}

/// Measurement outcome values of `m` on `rho` with their probabilities, in
/// ascending outcome order. Tiny negative probabilities from roundoff are
/// clamped to zero.
pub fn outcome_distribution(rho: &DensityMatrix, m: &Observable) -> Result<Vec<(f64, f64)>> {
    if rho.dim() != m.dim() {
        return Err(Error::DimensionMismatch {
            expected: rho.dim(),
            got: m.dim(),
        });
    }
    Ok(m.spectral()
        .outcomes()
        .iter()
        .map(|o| {
            let f = trace_product(rho.matrix(), &o.projector).re;
            (o.value, if f < 0.0 { 0.0 } else { f })
        })
        .collect())
}

fn validate_tangent(rho: &DensityMatrix, drho: &CMatrix) -> Result<()> {
    if drho.nrows() != rho.dim() || drho.ncols() != rho.dim() {
        return Err(Error::DimensionMismatch {
            expected: rho.dim(),
            got: drho.nrows(),
        });
    }
    let dev = hermiticity_deviation(drho);
    if dev > 1e-10 {
        return Err(Error::NotHermitian { max_dev: dev });
    }
    let tr = drho.trace();
    if tr.norm() > 1e-8 {
        return Err(Error::InvalidArgument(format!(
            "state derivative must be traceless, got trace {tr}"
        )));
    }
    Ok(())
}

/// Classical Fisher information of measuring `m` on the family, with the
/// probability derivatives taken analytically.
pub fn fisher_info(
    family: &StateFamily,
    param: Param,
    m: &Observable,
    mode: GroupingMode,
) -> Result<FisherResult> {
    let rho = family.density_matrix()?;
    let drho = family.derivative(param)?;
    fisher_info_from_state(&rho, &drho, m, param, mode)
}

/// Classical Fisher information from an explicit state and tangent. This is
/// the raw engine behind [`fisher_info`]; it also serves transformed families
/// (for example a state and derivative pushed through a dephasing channel).
pub fn fisher_info_from_state(
    rho: &DensityMatrix,
    drho: &CMatrix,
    m: &Observable,
    param: Param,
    mode: GroupingMode,
) -> Result<FisherResult> {
    validate_tangent(rho, drho)?;
    if rho.dim() != m.dim() {
        return Err(Error::DimensionMismatch {
            expected: rho.dim(),
            got: m.dim(),
        });
    }

    // (outcome value, probability, probability derivative) per outcome
    let terms: Vec<(f64, f64, f64)> = match mode {
        GroupingMode::Projector => m
            .spectral()
            .outcomes()
            .iter()
            .map(|o| {
                (
                    o.value,
                    trace_product(rho.matrix(), &o.projector).re,
                    trace_product(drho, &o.projector).re,
                )
            })
            .collect(),
        GroupingMode::Eigenvector => {
            let v = m.spectral().eigenvectors();
            let lam = m.spectral().eigenvalues();
            (0..v.ncols())
                .map(|i| {
                    let col = v.column(i);
                    let f = (col.adjoint() * rho.matrix() * col)[(0, 0)].re;
                    let df = (col.adjoint() * drho * col)[(0, 0)].re;
                    (lam[i], f, df)
                })
                .collect()
        }
    };

    let mut value = 0.0;
    let mut excluded = 0usize;
    for (outcome, f, df) in terms {
        if f < PROB_FLOOR {
            if df.abs() < DPROB_FLOOR {
                excluded += 1;
                continue;
            }
            return Err(Error::DivergentFisher {
                outcome,
                prob: f,
                dprob: df,
            });
        }
        value += df * df / f;
    }
    Ok(FisherResult {
        value,
        param,
        grouping_mode: mode,
        excluded_outcomes: excluded,
    })
}

/// Builds L in the eigenbasis of rho; returns (L, omitted pair count).
fn sld_core(dec: &SpectralDecomposition, drho: &CMatrix) -> (CMatrix, usize) {
    let dim = dec.dim();
    let v = dec.eigenvectors();
    let lam = dec.eigenvalues();
    let t = v.adjoint() * drho * v;
    let mut l_eig = CMatrix::zeros(dim, dim);
    let mut omitted = 0usize;
    for i in 0..dim {
        for j in 0..dim {
            let s = lam[i] + lam[j];
            if s <= SLD_PAIR_FLOOR {
                omitted += 1;
                continue;
            }
            l_eig[(i, j)] = t[(i, j)] * c(2.0 / s, 0.0);
        }
    }
    let l = v * l_eig * v.adjoint();
    // hermitize away the product roundoff
    ((&l + &l.adjoint()) * c(0.5, 0.0), omitted)
}

/// SLD of the family with respect to `param` at the family's own angles.
pub fn sld(family: &StateFamily, param: Param) -> Result<SldObservable> {
    let rho = family.density_matrix()?;
    let drho = family.derivative(param)?;
    sld_from_state(&rho, &drho, param)
}

/// SLD from an explicit state and tangent.
pub fn sld_from_state(rho: &DensityMatrix, drho: &CMatrix, param: Param) -> Result<SldObservable> {
    validate_tangent(rho, drho)?;
    let dec = hermitian_eig(rho.matrix(), GROUPING_TOL)?;
    let (l, _) = sld_core(&dec, drho);
    let sym = (&l * rho.matrix() + rho.matrix() * &l) * c(0.5, 0.0);
    let flow_residual = max_abs(&(&sym - drho));
    Ok(SldObservable {
        matrix: l,
        param,
        flow_residual,
    })
}

/// Maximum quantum Fisher information for `param`, attained by measuring the
/// SLD. The value is Tr[rho L^2]; an independent spectral expansion
/// sum_ij 4 lambda_i |<i|d rho|j>|^2 / (lambda_i + lambda_j)^2 must agree to
/// 1e-9 relative or the call fails rather than return a doubtful number.
pub fn qfi_max(family: &StateFamily, param: Param) -> Result<FisherResult> {
    let rho = family.density_matrix()?;
    let drho = family.derivative(param)?;
    qfi_max_from_state(&rho, &drho, param)
}

/// Maximum QFI from an explicit state and tangent; see [`qfi_max`].
pub fn qfi_max_from_state(
    rho: &DensityMatrix,
    drho: &CMatrix,
    param: Param,
) -> Result<FisherResult> {
    validate_tangent(rho, drho)?;
    let dec = hermitian_eig(rho.matrix(), GROUPING_TOL)?;
    let (l, omitted) = sld_core(&dec, drho);

    let trace_form = trace_product(&(rho.matrix() * &l), &l).re;

    let v = dec.eigenvectors();
    let lam = dec.eigenvalues();
    let t = v.adjoint() * drho * v;
    let mut eigen_form = 0.0;
    for i in 0..dec.dim() {
        for j in 0..dec.dim() {
            let s = lam[i] + lam[j];
            if s <= SLD_PAIR_FLOOR {
                continue;
            }
            eigen_form += 4.0 * lam[i] * t[(i, j)].norm_sqr() / (s * s);
        }
    }

    let tol = ROUTE_RTOL * trace_form.abs().max(eigen_form.abs()) + ROUTE_ATOL;
    if (trace_form - eigen_form).abs() > tol {
        return Err(Error::QfiRouteMismatch {
            trace_form,
            eigen_form,
        });
    }
    Ok(FisherResult {
        value: trace_form,
        param,
        grouping_mode: GroupingMode::Projector,
        excluded_outcomes: omitted,
    })
}

/// Closed-form single-qubit Fisher information for the polar angle measured
/// with the observable biased by (dtheta0, dphi0) from the optimum:
/// eps^2 (cos dphi0 cos theta0 cos T + sin theta0 sin T)^2
///   / (1 - eps^2 (cos dphi0 sin theta0 cos T - cos theta0 sin T)^2),
/// T = theta0 + dtheta0. Where the denominator vanishes the numerator does
/// too and the information is reported as 0. Caller supplies eps in [0, 1].
pub fn biased_qfi_theta(theta0: f64, phi0: f64, dtheta0: f64, dphi0: f64, eps: f64) -> f64 {
    let _ = phi0; // only the azimuthal offset enters
    let big_t = theta0 + dtheta0;
    let (st, ct) = theta0.sin_cos();
    let (s_t, c_t) = big_t.sin_cos();
    let cd = dphi0.cos();
    let num = eps * eps * (cd * ct * c_t + st * s_t).powi(2);
    let den = 1.0 - eps * eps * (cd * st * c_t - ct * s_t).powi(2);
    if den <= 0.0 {
        0.0
    } else {
        num / den
    }
}

/// Closed-form single-qubit Fisher information for the azimuthal angle with
/// the observable offset by dphi0: eps^2 cos^2 dphi0 sin^2 theta0
///   / (1 - eps^2 sin^2 dphi0 sin^2 theta0).
/// Independent of any polar offset of the observable (only outcome values
/// shift, which classical Fisher information ignores). Caller supplies eps in
/// [0, 1]; the form assumes a nondegenerate quadrature (sin of the biased
/// polar angle nonzero).
pub fn biased_qfi_phi(theta0: f64, phi0: f64, dphi0: f64, eps: f64) -> f64 {
    let _ = phi0;
    let s2 = theta0.sin().powi(2);
    let cd2 = dphi0.cos().powi(2);
    let sd2 = dphi0.sin().powi(2);
    let num = eps * eps * cd2 * s2;
    let den = 1.0 - eps * eps * sd2 * s2;
    if den <= 0.0 {
        0.0
    } else {
        num / den
    }
}

/// The polar-estimation observable evaluated at the biased orientation
/// (theta0 + dtheta0, phi0 + dphi0): eps times the polar tangent direction
/// dotted into the Pauli vector. Feeding this to [`fisher_info`] reproduces
/// [`biased_qfi_theta`].
pub fn biased_observable_theta(
    theta0: f64,
    phi0: f64,
    dtheta0: f64,
    dphi0: f64,
    eps: f64,
) -> Result<Observable> {
    let big_t = theta0 + dtheta0;
    let big_p = phi0 + dphi0;
    let (st, ct) = big_t.sin_cos();
    let (sp, cp) = big_p.sin_cos();
    Observable::new(pauli_combination(ct * cp * eps, ct * sp * eps, -st * eps))
}

/// The azimuthal-estimation observable at the biased orientation:
/// eps times the azimuthal tangent direction dotted into the Pauli vector.
/// Degenerates to the zero observable when the biased polar angle sits at a
/// pole, where the azimuthal quadrature carries no signal.
pub fn biased_observable_phi(
    theta0: f64,
    phi0: f64,
    dtheta0: f64,
    dphi0: f64,
    eps: f64,
) -> Result<Observable> {
    let big_t = theta0 + dtheta0;
    let big_p = phi0 + dphi0;
    let (st, _) = big_t.sin_cos();
    let (sp, cp) = big_p.sin_cos();
    Observable::new(pauli_combination(-st * sp * eps, st * cp * eps, 0.0))
}

fn pauli_combination(x: f64, y: f64, z: f64) -> CMatrix {
    use crate::operators::{pauli, Axis};
    pauli(Axis::X) * c(x, 0.0) + pauli(Axis::Y) * c(y, 0.0) + pauli(Axis::Z) * c(z, 0.0)
}

/// Equal-weight quadrature combination: (F(mx) + F(my)) / 2, the Fisher
/// information of simultaneously detecting two orthogonal transverse
/// components.
pub fn quadrature_fi(
    family: &StateFamily,
    param: Param,
    mx: &Observable,
    my: &Observable,
) -> Result<f64> {
    let fx = fisher_info(family, param, mx, GroupingMode::Projector)?;
    let fy = fisher_info(family, param, my, GroupingMode::Projector)?;
    Ok(0.5 * (fx.value() + fy.value()))
}

/// Dual-parameter combination 1/F = 1/F_theta + 1/F_phi. Returns 0 when
/// either input is 0 (an indeterminate parameter pins the joint precision to
/// zero information). The cross-Fisher term of the full two-parameter bound
/// is deliberately omitted; only the scalar harmonic combination is used.
pub fn dual_qfi(f_theta: f64, f_phi: f64) -> f64 {
    if f_theta <= 0.0 || f_phi <= 0.0 {
        return 0.0;
    }
    f_theta * f_phi / (f_theta + f_phi)
}

/// Cramér-Rao variance lower bound 1/(k F) for k independent measurements.
pub fn cramer_rao_bound(f: f64, k: u64) -> Result<f64> {
    if !f.is_finite() || f <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "Cramér-Rao bound needs positive finite Fisher information, got {f}"
        )));
    }
    if k == 0 {
        return Err(Error::InvalidArgument(
            "measurement count k must be at least 1".into(),
        ));
    }
    Ok(1.0 / (k as f64 * f))
}

/// Convenience: both angle derivatives of the observable-free maximum QFI,
/// combined into the dual bound. Used by the sweep pipelines.
pub fn dual_qfi_of_family(family: &StateFamily) -> Result<f64> {
    let ft = qfi_max(family, Param::Theta)?.value();
    let fp = qfi_max(family, Param::Phi)?.value();
    Ok(dual_qfi(ft, fp))
}

/// Single-qubit closed-form reference pair (F_theta, F_phi) = (eps^2,
/// eps^2 sin^2 theta0).
pub fn single_qubit_qfi_pair(angles: &BlochAngles, eps: f64) -> (f64, f64) {
    let e2 = eps * eps;
    (e2, e2 * angles.theta0().sin().powi(2))
}

//! Python bindings for the starqfi library.
//!
//! Exposes the orientation/register types, the Fisher-information entry
//! points, single-shot tomography, and the sweep pipelines. Parameters are
//! selected by name ("theta" or "phi"); matrices stay on the Rust side and
//! results come back as plain floats, tuples, and wrapper objects.

use pyo3::exceptions::{PyOSError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use starqfi::fisher::{self, Param};
use starqfi::report;
use starqfi::states::{self, BlochAngles, StateFamily, StrConfig};
use starqfi::sweeps::{self, SweepAxis, SweepReport, Table2Row};
use starqfi::tomography::{self, OptimizerConfig, QstResult, TomographyUnitary};

fn to_py(err: starqfi::Error) -> PyErr {
    match &err {
        starqfi::Error::Io(_) => PyOSError::new_err(err.to_string()),
        _ if err.exit_code() == 2 => PyValueError::new_err(err.to_string()),
        _ => PyRuntimeError::new_err(err.to_string()),
    }
}

fn parse_param(name: &str) -> PyResult<Param> {
    match name {
        "theta" => Ok(Param::Theta),
        "phi" => Ok(Param::Phi),
        other => Err(PyValueError::new_err(format!(
            "unknown parameter {other:?}, expected \"theta\" or \"phi\""
        ))),
    }
}

/// Orientation of the target deviation on the Bloch sphere.
#[pyclass(name = "BlochAngles", module = "starqfi_py", frozen)]
#[derive(Clone)]
struct PyBlochAngles(BlochAngles);

#[pymethods]
impl PyBlochAngles {
    #[new]
    fn new(theta0: f64, phi0: f64) -> PyResult<Self> {
        BlochAngles::new(theta0, phi0).map(Self).map_err(to_py)
    }

    #[getter]
    fn theta0(&self) -> f64 {
        self.0.theta0()
    }

    #[getter]
    fn phi0(&self) -> f64 {
        self.0.phi0()
    }

    /// Unit Bloch vector (x, y, z).
    fn unit_vector(&self) -> (f64, f64, f64) {
        let [x, y, z] = self.0.unit_vector();
        (x, y, z)
    }

    fn __repr__(&self) -> String {
        format!(
            "BlochAngles(theta0={}, phi0={})",
            self.0.theta0(),
            self.0.phi0()
        )
    }
}

/// Register geometry: one target qubit plus n_qubits - 1 equivalent
/// ancillas, with per-qubit purity deviation factors.
#[pyclass(name = "StrConfig", module = "starqfi_py", frozen)]
#[derive(Clone)]
struct PyStrConfig(StrConfig);

#[pymethods]
impl PyStrConfig {
    #[new]
    fn new(n_qubits: usize, eps_t1: f64, eps_a1: f64) -> PyResult<Self> {
        StrConfig::new(n_qubits, eps_t1, eps_a1)
            .map(Self)
            .map_err(to_py)
    }

    #[getter]
    fn n_qubits(&self) -> usize {
        self.0.n_qubits()
    }

    #[getter]
    fn eps_t1(&self) -> f64 {
        self.0.eps_t1()
    }

    #[getter]
    fn eps_a1(&self) -> f64 {
        self.0.eps_a1()
    }

    #[getter]
    fn dim(&self) -> usize {
        self.0.dim()
    }

    /// Target purity factor at this register size.
    #[getter]
    fn eps_t_n(&self) -> f64 {
        self.0.eps_t_n()
    }

    /// Ancilla purity factor at this register size.
    #[getter]
    fn eps_a_n(&self) -> f64 {
        self.0.eps_a_n()
    }

    fn __repr__(&self) -> String {
        format!(
            "StrConfig(n_qubits={}, eps_t1={}, eps_a1={})",
            self.0.n_qubits(),
            self.0.eps_t1(),
            self.0.eps_a1()
        )
    }
}

/// A one-parameter-differentiable family of register states, evaluated at a
/// fixed base orientation.
#[pyclass(name = "StateFamily", module = "starqfi_py", frozen)]
#[derive(Clone)]
struct PyStateFamily(StateFamily);

impl PyStateFamily {
    /// Rejects families whose state would be invalid, so Python callers fail
    /// at construction rather than on first use.
    fn checked(family: StateFamily) -> PyResult<Self> {
        family.density_matrix().map_err(to_py)?;
        Ok(Self(family))
    }
}

#[pymethods]
impl PyStateFamily {
    /// Bare qubit with deviation amplitude eps along the given orientation.
    #[staticmethod]
    fn single_qubit(angles: &PyBlochAngles, eps: f64) -> PyResult<Self> {
        Self::checked(StateFamily::SingleQubit {
            angles: angles.0,
            eps,
        })
    }

    /// Star register with the correlated (all-spin) deviation rotated onto
    /// the target orientation.
    #[staticmethod]
    fn str_correlated(config: &PyStrConfig, angles: &PyBlochAngles) -> PyResult<Self> {
        Self::checked(StateFamily::StrCorrelated {
            config: config.0,
            angles: angles.0,
        })
    }

    /// Star register with only the target-qubit deviation rotated.
    #[staticmethod]
    fn str_uncorrelated(config: &PyStrConfig, angles: &PyBlochAngles) -> PyResult<Self> {
        Self::checked(StateFamily::StrUncorrelated {
            config: config.0,
            angles: angles.0,
        })
    }

    #[getter]
    fn n_qubits(&self) -> usize {
        self.0.n_qubits()
    }

    #[getter]
    fn angles(&self) -> PyBlochAngles {
        PyBlochAngles(*self.0.angles())
    }

    fn __repr__(&self) -> String {
        let kind = match &self.0 {
            StateFamily::SingleQubit { .. } => "single_qubit",
            StateFamily::StrCorrelated { .. } => "str_correlated",
            StateFamily::StrUncorrelated { .. } => "str_uncorrelated",
        };
        format!("StateFamily({kind}, n_qubits={})", self.0.n_qubits())
    }
}

/// Ancilla-readout transfer unitary together with its constraint system.
#[pyclass(name = "TomographyUnitary", module = "starqfi_py", frozen)]
#[derive(Clone)]
struct PyTomographyUnitary(TomographyUnitary);

#[pymethods]
impl PyTomographyUnitary {
    /// Rebuild a unitary from its 15 generator parameters.
    #[staticmethod]
    fn from_parameters(config: &PyStrConfig, parameters: Vec<f64>) -> PyResult<Self> {
        TomographyUnitary::from_parameters(&config.0, &parameters)
            .map(Self)
            .map_err(to_py)
    }

    #[getter]
    fn parameters(&self) -> Vec<f64> {
        self.0.parameters().to_vec()
    }

    #[getter]
    fn n_qubits(&self) -> usize {
        self.0.config().n_qubits()
    }

    #[getter]
    fn condition_number(&self) -> f64 {
        self.0.quality().condition_number
    }

    #[getter]
    fn constraint_norm(&self) -> f64 {
        self.0.quality().constraint_norm
    }

    #[getter]
    fn fitness(&self) -> f64 {
        self.0.quality().fitness
    }

    fn __repr__(&self) -> String {
        let q = self.0.quality();
        format!(
            "TomographyUnitary(n_qubits={}, constraint_norm={}, condition_number={})",
            self.0.config().n_qubits(),
            q.constraint_norm,
            q.condition_number
        )
    }
}

/// Reconstructed target state from a single-shot tomography experiment.
#[pyclass(name = "QstResult", module = "starqfi_py", frozen)]
struct PyQstResult(QstResult);

#[pymethods]
impl PyQstResult {
    /// Reconstructed Bloch vector (x, y, z), unnormalized.
    #[getter]
    fn bloch(&self) -> (f64, f64, f64) {
        let [x, y, z] = self.0.bloch();
        (x, y, z)
    }

    #[getter]
    fn norm(&self) -> f64 {
        self.0.norm()
    }

    /// Angles of the normalized Bloch vector; (0, 0) when indeterminate.
    #[getter]
    fn angles(&self) -> PyBlochAngles {
        PyBlochAngles(self.0.angles())
    }

    /// True when the reconstructed vector is too short to orient.
    #[getter]
    fn is_indeterminate(&self) -> bool {
        self.0.is_indeterminate()
    }

    /// Euclidean gap between measured and refitted intensities.
    #[getter]
    fn residual(&self) -> f64 {
        self.0.residual()
    }

    /// Cosine overlap with the prepared deviation; None when undefined.
    #[getter]
    fn correlation(&self) -> Option<f64> {
        self.0.correlation()
    }

    fn __repr__(&self) -> String {
        let [x, y, z] = self.0.bloch();
        format!("QstResult(bloch=({x}, {y}, {z}), residual={})", self.0.residual())
    }
}

/// One row of the reference-table pipeline.
#[pyclass(name = "Table2Row", module = "starqfi_py", frozen)]
struct PyTable2Row(Table2Row);

#[pymethods]
impl PyTable2Row {
    #[getter]
    fn state_label(&self) -> String {
        self.0.state_label.clone()
    }

    #[getter]
    fn theta0(&self) -> f64 {
        self.0.theta0
    }

    #[getter]
    fn phi0(&self) -> f64 {
        self.0.phi0
    }

    #[getter]
    fn correlation(&self) -> f64 {
        self.0.correlation
    }

    #[getter]
    fn qst_qfi_uncorrelated(&self) -> f64 {
        self.0.qst_qfi_uncorrelated
    }

    #[getter]
    fn qst_qfi_correlated(&self) -> f64 {
        self.0.qst_qfi_correlated
    }

    #[getter]
    fn qst_qfi_correlated_reference(&self) -> f64 {
        self.0.qst_qfi_correlated_reference
    }

    #[getter]
    fn qst_amplification(&self) -> Option<f64> {
        self.0.qst_amplification
    }

    #[getter]
    fn sld_qfi_uncorrelated(&self) -> f64 {
        self.0.sld_qfi_uncorrelated
    }

    #[getter]
    fn sld_qfi_correlated(&self) -> f64 {
        self.0.sld_qfi_correlated
    }

    #[getter]
    fn sld_amplification(&self) -> Option<f64> {
        self.0.sld_amplification
    }

    #[getter]
    fn comparability(&self) -> String {
        self.0.comparability.clone()
    }

    fn __repr__(&self) -> String {
        format!(
            "Table2Row({}, sld_corr={}, sld_unc={})",
            self.0.state_label, self.0.sld_qfi_correlated, self.0.sld_qfi_uncorrelated
        )
    }
}

/// Result of one sweep: labeled points plus an optional linear fit.
#[pyclass(name = "SweepReport", module = "starqfi_py", frozen)]
struct PySweepReport(SweepReport);

#[pymethods]
impl PySweepReport {
    #[getter]
    fn axis(&self) -> &'static str {
        match self.0.axis {
            SweepAxis::N => "n",
            SweepAxis::Eps => "eps",
            SweepAxis::Theta0Phi0Grid => "theta0_phi0_grid",
            SweepAxis::Dtheta0 => "dtheta0",
        }
    }

    #[getter]
    fn input_labels(&self) -> Vec<String> {
        self.0.input_labels.clone()
    }

    #[getter]
    fn value_labels(&self) -> Vec<String> {
        self.0.value_labels.clone()
    }

    /// Points as (inputs, values) tuples in deterministic sweep order.
    #[getter]
    fn points(&self) -> Vec<(Vec<f64>, Vec<f64>)> {
        self.0
            .points
            .iter()
            .map(|p| (p.input.clone(), p.values.clone()))
            .collect()
    }

    /// (slope, intercept, r_squared) of the linear law, when one applies.
    #[getter]
    fn fit(&self) -> Option<(f64, f64, f64)> {
        self.0
            .fit
            .map(|f| (f.slope, f.intercept, f.r_squared))
    }

    fn __repr__(&self) -> String {
        format!(
            "SweepReport(axis={:?}, points={})",
            self.axis(),
            self.0.points.len()
        )
    }
}

/// Largest Fisher information over projective readouts of the family, for
/// the named parameter ("theta" or "phi").
#[pyfunction]
fn qfi_max(family: &PyStateFamily, param: &str) -> PyResult<f64> {
    let param = parse_param(param)?;
    fisher::qfi_max(&family.0, param)
        .map(|r| r.value())
        .map_err(to_py)
}

/// Harmonic-style combination of the two single-parameter QFIs into the
/// dual-parameter figure of merit.
#[pyfunction]
fn dual_qfi(f_theta: f64, f_phi: f64) -> f64 {
    fisher::dual_qfi(f_theta, f_phi)
}

/// Dual-parameter QFI of the family, both SLD routes evaluated internally.
#[pyfunction]
fn dual_qfi_of_family(family: &PyStateFamily) -> PyResult<f64> {
    fisher::dual_qfi_of_family(&family.0).map_err(to_py)
}

/// (F_theta, F_phi) of a bare qubit in closed form.
#[pyfunction]
fn single_qubit_qfi_pair(angles: &PyBlochAngles, eps: f64) -> (f64, f64) {
    fisher::single_qubit_qfi_pair(&angles.0, eps)
}

/// Closed-form Fisher information for the polar angle under a misaligned
/// projective readout.
#[pyfunction]
fn biased_qfi_theta(theta0: f64, phi0: f64, dtheta0: f64, dphi0: f64, eps: f64) -> f64 {
    fisher::biased_qfi_theta(theta0, phi0, dtheta0, dphi0, eps)
}

/// Closed-form Fisher information for the azimuthal angle under a misaligned
/// projective readout.
#[pyfunction]
fn biased_qfi_phi(theta0: f64, phi0: f64, dphi0: f64, eps: f64) -> f64 {
    fisher::biased_qfi_phi(theta0, phi0, dphi0, eps)
}

/// Cramer-Rao variance bound 1 / (k F) for k repetitions.
#[pyfunction]
fn cramer_rao_bound(f: f64, k: u64) -> PyResult<f64> {
    fisher::cramer_rao_bound(f, k).map_err(to_py)
}

/// Residual of the defining flow equation of the family's symmetric
/// logarithmic derivative for the named parameter.
#[pyfunction]
fn sld_flow_residual(family: &PyStateFamily, param: &str) -> PyResult<f64> {
    let param = parse_param(param)?;
    fisher::sld(&family.0, param)
        .map(|s| s.flow_residual())
        .map_err(to_py)
}

/// Genetic search for a transfer unitary with a strong, well-conditioned
/// constraint matrix. Deterministic in (population, generations, seed).
#[pyfunction]
#[pyo3(signature = (config, population = 64, generations = 200, seed = 42))]
fn optimize_ut(
    config: &PyStrConfig,
    population: usize,
    generations: usize,
    seed: u64,
) -> PyResult<PyTomographyUnitary> {
    let opt = OptimizerConfig {
        population,
        generations,
        seed,
        ..OptimizerConfig::default()
    };
    tomography::optimize_ut(&config.0, &opt)
        .map(PyTomographyUnitary)
        .map_err(to_py)
}

/// Single-shot tomography of the family's state through the transfer
/// unitary; optional additive Gaussian intensity noise.
#[pyfunction]
#[pyo3(signature = (family, ut, noise_sigma = 0.0, seed = 0))]
fn str_qst(
    family: &PyStateFamily,
    ut: &PyTomographyUnitary,
    noise_sigma: f64,
    seed: u64,
) -> PyResult<PyQstResult> {
    let rho = family.0.density_matrix().map_err(to_py)?;
    let result = if noise_sigma == 0.0 {
        tomography::str_qst(&rho, &ut.0)
    } else {
        tomography::str_qst_noisy(&rho, &ut.0, noise_sigma, seed)
    };
    result.map(PyQstResult).map_err(to_py)
}

/// Two-step tomography of a bare qubit prepared at the given orientation.
#[pyfunction]
fn single_qubit_qst(angles: &PyBlochAngles, eps: f64) -> PyResult<PyQstResult> {
    let rho = states::single_qubit_state(&angles.0, eps).map_err(to_py)?;
    tomography::single_qubit_qst(&rho)
        .map(PyQstResult)
        .map_err(to_py)
}

/// Correlated-family QFI per ancilla purity squared versus register size,
/// with the linear law checked and fitted.
#[pyfunction]
#[pyo3(signature = (eps_a1, n_values, samples = 20, seed = 42))]
fn scaling_in_n(
    eps_a1: f64,
    n_values: Vec<usize>,
    samples: usize,
    seed: u64,
) -> PyResult<PySweepReport> {
    sweeps::scaling_in_n(eps_a1, &n_values, samples, seed)
        .map(PySweepReport)
        .map_err(to_py)
}

/// Correlated-family QFI versus ancilla purity amplitude, with the
/// quadratic (amplitude-doubling) law checked.
#[pyfunction]
fn scaling_in_eps(n_qubits: usize, eps_values: Vec<f64>) -> PyResult<PySweepReport> {
    sweeps::scaling_in_eps(n_qubits, &eps_values)
        .map(PySweepReport)
        .map_err(to_py)
}

/// Azimuthal information ratio r = F_phi / (eps^2 (N - 1)) over an
/// orientation grid.
#[pyfunction]
fn r_factor_map(
    n_qubits: usize,
    theta0_grid: Vec<f64>,
    phi0_grid: Vec<f64>,
    eps_a1: f64,
) -> PyResult<PySweepReport> {
    sweeps::r_factor_map(n_qubits, &theta0_grid, &phi0_grid, eps_a1)
        .map(PySweepReport)
        .map_err(to_py)
}

/// Uncorrelated-family QFI over random orientations, checked against the
/// bare-qubit laws.
#[pyfunction]
#[pyo3(signature = (config, samples = 20, seed = 42))]
fn uncorrelated_comparison(
    config: &PyStrConfig,
    samples: usize,
    seed: u64,
) -> PyResult<PySweepReport> {
    sweeps::uncorrelated_comparison(&config.0, samples, seed)
        .map(PySweepReport)
        .map_err(to_py)
}

/// Biased-readout information surface over (dtheta0, eps) at the canonical
/// equatorial orientation.
#[pyfunction]
fn fig2_surface(dtheta0_grid: Vec<f64>, eps_grid: Vec<f64>) -> PyResult<PySweepReport> {
    sweeps::fig2_surface(&dtheta0_grid, &eps_grid)
        .map(PySweepReport)
        .map_err(to_py)
}

/// Reference-table pipeline: five canonical orientations, SLD and
/// tomography-based dual QFI, normalized by the ancilla purity squared.
#[pyfunction]
#[pyo3(signature = (config, ut, gamma_ratio = None, noise_sigma = 0.0, seed = 42))]
fn table2_pipeline(
    config: &PyStrConfig,
    ut: &PyTomographyUnitary,
    gamma_ratio: Option<f64>,
    noise_sigma: f64,
    seed: u64,
) -> PyResult<Vec<PyTable2Row>> {
    let gamma_ratio = gamma_ratio.unwrap_or_else(report::default_gamma_ratio);
    sweeps::table2_pipeline(&config.0, gamma_ratio, &ut.0, noise_sigma, seed)
        .map(|rows| rows.into_iter().map(PyTable2Row).collect())
        .map_err(to_py)
}

/// (F_theta, F_phi) extracted from the two-step bare-qubit tomography
/// readout as quadrature detections.
#[pyfunction]
fn qst_quadrature_single(angles: &PyBlochAngles, eps: f64) -> PyResult<(f64, f64)> {
    sweeps::qst_quadrature_single(&angles.0, eps).map_err(to_py)
}

/// (F_theta, F_phi) extracted from the ancilla-readout intensities of the
/// correlated family, summed over per-block quadrature pairs.
#[pyfunction]
fn qst_quadrature_str(
    config: &PyStrConfig,
    angles: &PyBlochAngles,
    ut: &PyTomographyUnitary,
) -> PyResult<(f64, f64)> {
    sweeps::qst_quadrature_str(&config.0, &angles.0, &ut.0).map_err(to_py)
}

/// Evenly spaced grid from start to end inclusive, endpoints exact.
#[pyfunction]
fn linspace(start: f64, end: f64, count: usize) -> PyResult<Vec<f64>> {
    sweeps::linspace(start, end, count).map_err(to_py)
}

/// Odd-count grid symmetric about zero, landmarks -w, 0, +w exact.
#[pyfunction]
fn symmetric_linspace(half_width: f64, count: usize) -> PyResult<Vec<f64>> {
    sweeps::symmetric_linspace(half_width, count).map_err(to_py)
}

/// Default target-to-ancilla gyromagnetic ratio of the reference register.
#[pyfunction]
fn default_gamma_ratio() -> f64 {
    report::default_gamma_ratio()
}

#[pymodule]
fn starqfi_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyBlochAngles>()?;
    m.add_class::<PyStrConfig>()?;
    m.add_class::<PyStateFamily>()?;
    m.add_class::<PyTomographyUnitary>()?;
    m.add_class::<PyQstResult>()?;
    m.add_class::<PyTable2Row>()?;
    m.add_class::<PySweepReport>()?;
    m.add_function(wrap_pyfunction!(qfi_max, m)?)?;
    m.add_function(wrap_pyfunction!(dual_qfi, m)?)?;
    m.add_function(wrap_pyfunction!(dual_qfi_of_family, m)?)?;
    m.add_function(wrap_pyfunction!(single_qubit_qfi_pair, m)?)?;
    m.add_function(wrap_pyfunction!(biased_qfi_theta, m)?)?;
    m.add_function(wrap_pyfunction!(biased_qfi_phi, m)?)?;
    m.add_function(wrap_pyfunction!(cramer_rao_bound, m)?)?;
    m.add_function(wrap_pyfunction!(sld_flow_residual, m)?)?;
    m.add_function(wrap_pyfunction!(optimize_ut, m)?)?;
    m.add_function(wrap_pyfunction!(str_qst, m)?)?;
    m.add_function(wrap_pyfunction!(single_qubit_qst, m)?)?;
    m.add_function(wrap_pyfunction!(scaling_in_n, m)?)?;
    m.add_function(wrap_pyfunction!(scaling_in_eps, m)?)?;
    m.add_function(wrap_pyfunction!(r_factor_map, m)?)?;
    m.add_function(wrap_pyfunction!(uncorrelated_comparison, m)?)?;
    m.add_function(wrap_pyfunction!(fig2_surface, m)?)?;
    m.add_function(wrap_pyfunction!(table2_pipeline, m)?)?;
    m.add_function(wrap_pyfunction!(qst_quadrature_single, m)?)?;
    m.add_function(wrap_pyfunction!(qst_quadrature_str, m)?)?;
    m.add_function(wrap_pyfunction!(linspace, m)?)?;
    m.add_function(wrap_pyfunction!(symmetric_linspace, m)?)?;
    m.add_function(wrap_pyfunction!(default_gamma_ratio, m)?)?;
    m.add("DEFAULT_N_QUBITS", report::DEFAULT_N_QUBITS)?;
    m.add("DEFAULT_EPS_A1", report::DEFAULT_EPS_A1)?;
    m.add("DEFAULT_SEED", report::DEFAULT_SEED)?;
    Ok(())
}

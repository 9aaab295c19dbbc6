//! Ancilla-assisted single-shot state tomography.
//!
//! The target qubit's deviation is transferred onto the ancilla star by a
//! parametrized transfer unitary, read out through four ancilla quadrature
//! observables, and reconstructed by linear least squares. A small genetic
//! optimizer searches the transfer-unitary parameter space for a
//! well-conditioned readout.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::operators::{
    ancilla_rotation, collective_ancilla_op, dephase_target, hermiticity_deviation, identity,
    max_abs, pauli, rotate_target, target_rotation, trace_product, Axis, CMatrix, DensityMatrix,
    Observable,
};
use crate::states::{BlochAngles, StrConfig};

/// Number of real parameters of a transfer unitary: three pulse blocks, each
/// a target rotation (angle, axis phase), an ancilla rotation (angle, axis
/// phase) and a scaled coupling duration.
///
/// Three blocks are the minimum: readout systems built from one or two
/// blocks, or from any ten-parameter subset of the layer structure, are
/// exactly rank deficient for every parameter choice.
pub const UT_PARAM_COUNT: usize = 15;

/// Singular values below this fraction of the largest do not count toward the
/// rank of a constraint matrix.
const RANK_TOL_FACTOR: f64 = 1e-8;

/// Maximum tolerated deviation of U U^dagger from the identity.
const UNITARITY_TOL: f64 = 1e-10;

/// Reconstructed Bloch vectors shorter than this are flagged indeterminate.
const BLOCH_FLOOR: f64 = 1e-9;

/// True deviation components smaller than this give no correlation direction.
const TRUE_BLOCH_FLOOR: f64 = 1e-15;

const MUTATION_SIGMA_START: f64 = 0.5;
const MUTATION_SIGMA_END: f64 = 0.01;
const TOURNAMENT_SIZE: usize = 4;
const ELITE_COUNT: usize = 2;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Diagnostics of a transfer unitary's readout system.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct UtQuality {
    /// Frobenius norm of the 4 x 3 constraint matrix.
    pub constraint_norm: f64,
    /// Ratio of largest to smallest singular value; infinite when rank
    /// deficient.
    pub condition_number: f64,
    /// `constraint_norm / condition_number`, the optimizer's default
    /// objective. Zero when the constraint matrix is rank deficient.
    pub fitness: f64,
}

/// Linear map from the target Bloch vector to the four measured intensities.
///
/// `intensities = matrix * bloch + offsets`; the offsets collect the
/// identity-part contribution and vanish because every readout observable is
/// traceless.
#[derive(Debug, Clone)]
pub struct ConstraintSystem {
    matrix: DMatrix<f64>,
    offsets: DVector<f64>,
    singular_values: [f64; 3],
    rank: usize,
}

impl ConstraintSystem {
    /// The 4 x 3 coefficient matrix.
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    /// Intensities of the identity part of the state, one per observable.
    pub fn offsets(&self) -> &DVector<f64> {
        &self.offsets
    }

    /// Singular values in descending order.
    pub fn singular_values(&self) -> &[f64; 3] {
        &self.singular_values
    }

    /// Number of singular values above the rank floor.
    pub fn rank(&self) -> usize {
        self.rank
    }

    /// Largest over smallest singular value, infinite when rank deficient.
    pub fn condition_number(&self) -> f64 {
        let smallest = self.singular_values[2];
        if self.rank == 3 && smallest > 0.0 {
            self.singular_values[0] / smallest
        } else {
            f64::INFINITY
        }
    }

    /// Frobenius norm of the coefficient matrix.
    pub fn frobenius_norm(&self) -> f64 {
        self.matrix.norm()
    }
}

/// Parametrized transfer unitary mapping target-ancilla correlations into
/// directly observable ancilla coherences.
#[derive(Debug, Clone)]
pub struct TomographyUnitary {
    config: StrConfig,
    parameters: Vec<f64>,
    matrix: CMatrix,
    observables: Vec<CMatrix>,
    constraints: ConstraintSystem,
    quality: UtQuality,
}

impl TomographyUnitary {
    /// Build the unitary for a parameter vector of length [`UT_PARAM_COUNT`].
    ///
    /// Each five-parameter block applies, in order, a target rotation
    /// (angle, axis phase), a global ancilla rotation (angle, axis phase) and
    /// a diagonal coupling evolution of scaled duration `kappa`. Parameters
    /// are unconstrained reals; the trigonometric maps absorb periodicity.
    pub fn from_parameters(config: &StrConfig, parameters: &[f64]) -> Result<Self> {
        if parameters.len() != UT_PARAM_COUNT {
            return Err(Error::InvalidArgument(format!(
                "transfer unitary takes {UT_PARAM_COUNT} parameters, got {}",
                parameters.len()
            )));
        }
        if parameters.iter().any(|p| !p.is_finite()) {
            return Err(Error::InvalidArgument(
                "transfer-unitary parameters must be finite".into(),
            ));
        }
        let matrix = build_transfer_matrix(config.n_qubits(), parameters)?;
        let dim = matrix.nrows();
        let drift = max_abs(&(&matrix * matrix.adjoint() - identity(dim)));
        if drift > UNITARITY_TOL {
            return Err(Error::SingularSystem(format!(
                "transfer unitary drifted from unitarity by {drift:.3e}"
            )));
        }
        let observables = raw_observables(config.n_qubits(), &matrix)?;
        let constraints = system_from_observables(config, &observables);
        let condition_number = constraints.condition_number();
        let constraint_norm = constraints.frobenius_norm();
        let fitness = if constraints.rank() == 3 {
            constraint_norm / condition_number
        } else {
            0.0
        };
        Ok(Self {
            config: *config,
            parameters: parameters.to_vec(),
            matrix,
            observables,
            constraints,
            quality: UtQuality {
                constraint_norm,
                condition_number,
                fitness,
            },
        })
    }

    pub fn config(&self) -> &StrConfig {
        &self.config
    }

    pub fn parameters(&self) -> &[f64] {
        &self.parameters
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    /// Readout system derived from this unitary and its register config.
    pub fn constraints(&self) -> &ConstraintSystem {
        &self.constraints
    }

    pub fn quality(&self) -> UtQuality {
        self.quality
    }
}

/// Free evolution under the star coupling `sum_j 2 I_1z I_jz` for a scaled
/// duration `kappa`; diagonal in the computational basis.
fn coupling_evolution(n_qubits: usize, kappa: f64) -> CMatrix {
    let dim = 1usize << n_qubits;
    let mut diag = CMatrix::zeros(dim, dim);
    for i in 0..dim {
        // Qubit 1 occupies the most significant bit; spin sign +1 for |0>.
        let s1 = 1.0 - 2.0 * ((i >> (n_qubits - 1)) & 1) as f64;
        let mut m2 = 0.0;
        for bit in 0..n_qubits - 1 {
            m2 += 1.0 - 2.0 * ((i >> bit) & 1) as f64;
        }
        let angle = -kappa * s1 * m2 / 2.0;
        diag[(i, i)] = c(angle.cos(), angle.sin());
    }
    diag
}

fn build_transfer_matrix(n_qubits: usize, parameters: &[f64]) -> Result<CMatrix> {
    let dim = 1usize << n_qubits;
    let mut u = identity(dim);
    for block in parameters.chunks(5) {
        let target = target_rotation(n_qubits, block[0], block[1])?;
        let ancilla = ancilla_rotation(n_qubits, block[2], block[3])?;
        let coupling = coupling_evolution(n_qubits, block[4]);
        u = coupling * ancilla * target * u;
    }
    Ok(u)
}

/// Raw readout observables `M_{q alpha} = U^dagger (|q><q| (x) 1) A_alpha U`
/// in the order (0,x), (0,y), (1,x), (1,y).
fn raw_observables(n_qubits: usize, u: &CMatrix) -> Result<Vec<CMatrix>> {
    let half = 1usize << (n_qubits - 1);
    let mut out = Vec::with_capacity(4);
    for q in 0..2 {
        for axis in [Axis::X, Axis::Y] {
            let collective = collective_ancilla_op(n_qubits, axis)?;
            let mut projected = collective.clone();
            // Zero the rows and columns outside the target Zeeman block q;
            // the projector commutes with the collective ancilla operator.
            let keep = (q * half)..((q + 1) * half);
            for row in 0..2 * half {
                for col in 0..2 * half {
                    if !keep.contains(&row) || !keep.contains(&col) {
                        projected[(row, col)] = c(0.0, 0.0);
                    }
                }
            }
            out.push(u.adjoint() * projected * u);
        }
    }
    Ok(out)
}

/// Basis deviations `(sigma_c (x) 1) A_z` whose coefficients are the target
/// Bloch components; identical to the correlated state family's deviation
/// direction.
fn basis_deviations(n_qubits: usize) -> Result<[CMatrix; 3]> {
    let a_z = collective_ancilla_op(n_qubits, Axis::Z)?;
    let sub = identity(1usize << (n_qubits - 1));
    let make = |axis: Axis| pauli(axis).kronecker(&sub) * &a_z;
    Ok([make(Axis::X), make(Axis::Y), make(Axis::Z)])
}

fn system_from_observables(config: &StrConfig, observables: &[CMatrix]) -> ConstraintSystem {
    let n = config.n_qubits();
    let eps = config.eps_a_n();
    let deviations = basis_deviations(n).expect("register size already validated");
    let dim = 1usize << n;
    let mut matrix = DMatrix::<f64>::zeros(4, 3);
    let mut offsets = DVector::<f64>::zeros(4);
    for (i, m) in observables.iter().enumerate() {
        for (col, b) in deviations.iter().enumerate() {
            matrix[(i, col)] = eps * trace_product(b, m).re;
        }
        offsets[i] = m.diagonal().sum().re / dim as f64;
    }
    let mut svals: Vec<f64> = nalgebra::SVD::new(matrix.clone(), false, false)
        .singular_values
        .iter()
        .copied()
        .collect();
    svals.sort_by(|a, b| b.total_cmp(a));
    let singular_values = [svals[0], svals[1], svals[2]];
    let rank = if singular_values[0] <= 0.0 {
        0
    } else {
        svals
            .iter()
            .filter(|&&s| s > RANK_TOL_FACTOR * singular_values[0])
            .count()
    };
    ConstraintSystem {
        matrix,
        offsets,
        singular_values,
        rank,
    }
}

/// The four readout observables of a transfer unitary, with spectral data.
///
/// Within each target Zeeman block `q`, the x and y intensities form a
/// quadrature pair; summing over `q` recovers the conjugated collective
/// ancilla operator.
pub fn ancilla_observables(n_qubits: usize, ut: &TomographyUnitary) -> Result<Vec<Observable>> {
    if n_qubits != ut.config.n_qubits() {
        return Err(Error::DimensionMismatch {
            expected: ut.config.n_qubits(),
            got: n_qubits,
        });
    }
    ut.observables
        .iter()
        .map(|m| Observable::new(m.clone()))
        .collect()
}

/// Expectation values of the given observables, in order.
pub fn measure_intensities(rho: &DensityMatrix, observables: &[Observable]) -> Result<Vec<f64>> {
    observables
        .iter()
        .map(|m| rho.expectation(m.matrix()))
        .collect()
}

/// Like [`measure_intensities`], with additive Gaussian noise of standard
/// deviation `sigma` drawn from a stream seeded by `seed`. A zero `sigma`
/// skips the generator entirely and reproduces the noiseless values bit for
/// bit.
pub fn measure_intensities_noisy(
    rho: &DensityMatrix,
    observables: &[Observable],
    sigma: f64,
    seed: u64,
) -> Result<Vec<f64>> {
    let mut values = measure_intensities(rho, observables)?;
    perturb(&mut values, sigma, seed)?;
    Ok(values)
}

fn perturb(values: &mut [f64], sigma: f64, seed: u64) -> Result<()> {
    if !sigma.is_finite() || sigma < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "noise level must be finite and nonnegative, got {sigma}"
        )));
    }
    if sigma == 0.0 {
        return Ok(());
    }
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    for v in values.iter_mut() {
        let draw: f64 = rng.sample(StandardNormal);
        *v += sigma * draw;
    }
    Ok(())
}

/// Readout system of `ut` evaluated at the deviation scale of `config`.
///
/// The coefficient matrix is linear in the ancilla deviation amplitude, so a
/// config differing from the unitary's only in purity rescales it.
pub fn constraint_matrix(config: &StrConfig, ut: &TomographyUnitary) -> Result<ConstraintSystem> {
    if config.n_qubits() != ut.config.n_qubits() {
        return Err(Error::DimensionMismatch {
            expected: ut.config.n_qubits(),
            got: config.n_qubits(),
        });
    }
    Ok(system_from_observables(config, &ut.observables))
}

/// Reconstructed target state from a tomography experiment.
#[derive(Debug, Clone)]
pub struct QstResult {
    bloch: [f64; 3],
    norm: f64,
    angles: BlochAngles,
    indeterminate: bool,
    residual: f64,
    correlation: Option<f64>,
}

impl QstResult {
    /// Reconstructed Bloch vector, unnormalized. For the star register this
    /// is the least-squares solution in units of the deviation direction; for
    /// a bare qubit it carries the deviation amplitude.
    pub fn bloch(&self) -> [f64; 3] {
        self.bloch
    }

    /// Euclidean length of the reconstructed Bloch vector.
    pub fn norm(&self) -> f64 {
        self.norm
    }

    /// Angles of the normalized Bloch vector; (0, 0) when indeterminate.
    pub fn angles(&self) -> BlochAngles {
        self.angles
    }

    /// True when the reconstructed vector is too short to orient.
    pub fn is_indeterminate(&self) -> bool {
        self.indeterminate
    }

    /// Euclidean gap between measured and refitted intensities.
    pub fn residual(&self) -> f64 {
        self.residual
    }

    /// Cosine overlap between the reconstructed deviation and the one carried
    /// by the input state; absent when either direction is undefined.
    pub fn correlation(&self) -> Option<f64> {
        self.correlation
    }
}

fn angles_from_bloch(bloch: [f64; 3], norm: f64) -> Result<BlochAngles> {
    let theta = (bloch[2] / norm).clamp(-1.0, 1.0).acos();
    let phi = bloch[1].atan2(bloch[0]);
    BlochAngles::new(theta, phi)
}

fn cosine(a: [f64; 3], b: [f64; 3]) -> f64 {
    let dot = a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
    let na = (a[0] * a[0] + a[1] * a[1] + a[2] * a[2]).sqrt();
    let nb = (b[0] * b[0] + b[1] * b[1] + b[2] * b[2]).sqrt();
    (dot / (na * nb)).clamp(-1.0, 1.0)
}

/// Two-step tomography of a bare qubit.
///
/// Step one measures both transverse quadratures directly; step two dephases
/// the state and converts the population difference into a transverse
/// quadrature with a pi/2 pulse about y. All three Bloch components follow
/// without prior knowledge of the state.
pub fn single_qubit_qst(rho: &DensityMatrix) -> Result<QstResult> {
    if rho.n_qubits() != 1 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            got: rho.dim(),
        });
    }
    let half = |axis: Axis| pauli(axis) * c(0.5, 0.0);
    let bx = 2.0 * rho.expectation(&half(Axis::X))?;
    let by = 2.0 * rho.expectation(&half(Axis::Y))?;
    let converted = rotate_target(
        &dephase_target(rho),
        std::f64::consts::FRAC_PI_2,
        std::f64::consts::FRAC_PI_2,
    )?;
    let bz = 2.0 * converted.expectation(&half(Axis::X))?;
    let bloch = [bx, by, bz];
    let norm = (bx * bx + by * by + bz * bz).sqrt();
    if norm < BLOCH_FLOOR {
        return Ok(QstResult {
            bloch,
            norm,
            angles: BlochAngles::new(0.0, 0.0)?,
            indeterminate: true,
            residual: 0.0,
            correlation: None,
        });
    }
    let truth = [
        rho.expectation(&pauli(Axis::X))?,
        rho.expectation(&pauli(Axis::Y))?,
        rho.expectation(&pauli(Axis::Z))?,
    ];
    let tnorm = (truth[0] * truth[0] + truth[1] * truth[1] + truth[2] * truth[2]).sqrt();
    let correlation = (tnorm >= TRUE_BLOCH_FLOOR).then(|| cosine(bloch, truth));
    Ok(QstResult {
        bloch,
        norm,
        angles: angles_from_bloch(bloch, norm)?,
        indeterminate: false,
        // Three numbers determine three components: nothing left over.
        residual: 0.0,
        correlation,
    })
}

/// Single-shot tomography of the star register through a transfer unitary.
///
/// Solves the readout system by normal equations for the target Bloch vector
/// and compares it with the deviation direction extracted from the input
/// state itself.
pub fn str_qst(rho: &DensityMatrix, ut: &TomographyUnitary) -> Result<QstResult> {
    let intensities = raw_intensities(rho, ut)?;
    reconstruct(rho, ut, intensities)
}

/// Like [`str_qst`], with additive Gaussian intensity noise; see
/// [`measure_intensities_noisy`] for the noise contract.
pub fn str_qst_noisy(
    rho: &DensityMatrix,
    ut: &TomographyUnitary,
    sigma: f64,
    seed: u64,
) -> Result<QstResult> {
    let mut intensities = raw_intensities(rho, ut)?;
    perturb(&mut intensities, sigma, seed)?;
    reconstruct(rho, ut, intensities)
}

fn raw_intensities(rho: &DensityMatrix, ut: &TomographyUnitary) -> Result<Vec<f64>> {
    if rho.dim() != ut.matrix.nrows() {
        return Err(Error::DimensionMismatch {
            expected: ut.matrix.nrows(),
            got: rho.dim(),
        });
    }
    ut.observables
        .iter()
        .map(|m| rho.expectation(m))
        .collect()
}

fn reconstruct(
    rho: &DensityMatrix,
    ut: &TomographyUnitary,
    intensities: Vec<f64>,
) -> Result<QstResult> {
    let system = &ut.constraints;
    if system.rank() < 3 {
        return Err(Error::RankDeficient {
            rank: system.rank(),
            cond: system.condition_number(),
        });
    }
    let a = system.matrix();
    let y = DVector::from_vec(intensities) - system.offsets();
    let normal = a.transpose() * a;
    let rhs = a.transpose() * &y;
    let solution = normal.lu().solve(&rhs).ok_or_else(|| {
        Error::SingularSystem("normal equations of the readout system".into())
    })?;
    let bloch = [solution[0], solution[1], solution[2]];
    let norm = solution.norm();
    let residual = (a * &solution - y).norm();
    if norm < BLOCH_FLOOR {
        return Ok(QstResult {
            bloch,
            norm,
            angles: BlochAngles::new(0.0, 0.0)?,
            indeterminate: true,
            residual,
            correlation: None,
        });
    }
    let deviations = basis_deviations(ut.config.n_qubits())?;
    let mut truth = [0.0; 3];
    for (t, b) in truth.iter_mut().zip(deviations.iter()) {
        let weight = trace_product(b, b).re;
        *t = trace_product(rho.matrix(), b).re / weight;
    }
    let tnorm = (truth[0] * truth[0] + truth[1] * truth[1] + truth[2] * truth[2]).sqrt();
    let correlation = (tnorm >= TRUE_BLOCH_FLOOR).then(|| cosine(bloch, truth));
    Ok(QstResult {
        bloch,
        norm,
        angles: angles_from_bloch(bloch, norm)?,
        indeterminate: false,
        residual,
        correlation,
    })
}

/// Normalized Hilbert-Schmidt overlap of two Hermitian matrices.
///
/// Equals 1 for proportional matrices with the same sign, 0 for orthogonal
/// ones and -1 for opposite signs.
pub fn correlation(a: &CMatrix, b: &CMatrix) -> Result<f64> {
    if a.nrows() != b.nrows() || a.ncols() != b.ncols() || !a.is_square() {
        return Err(Error::DimensionMismatch {
            expected: a.nrows(),
            got: b.nrows(),
        });
    }
    for m in [a, b] {
        let dev = hermiticity_deviation(m);
        if dev > 1e-10 * max_abs(m).max(1.0) {
            return Err(Error::NotHermitian { max_dev: dev });
        }
    }
    let na = trace_product(a, a).re;
    let nb = trace_product(b, b).re;
    if na <= 0.0 || nb <= 0.0 {
        return Err(Error::InvalidArgument(
            "correlation of a zero matrix is undefined".into(),
        ));
    }
    Ok((trace_product(a, b).re / (na * nb).sqrt()).clamp(-1.0, 1.0))
}

/// Settings of the transfer-unitary search.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct OptimizerConfig {
    /// Candidates per generation.
    pub population: usize,
    /// Number of generations.
    pub generations: usize,
    /// Seed of the single random stream driving the search.
    pub seed: u64,
    /// Exponents (p, q) of the objective `norm^p / cond^q`.
    pub weights: (f64, f64),
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            population: 64,
            generations: 200,
            seed: 42,
            weights: (1.0, 1.0),
        }
    }
}

#[derive(Clone, Copy)]
struct Score {
    fitness: f64,
    norm: f64,
    cond: f64,
    rank: usize,
}

/// Genetic search for a transfer unitary with a strong, well-conditioned
/// readout system.
///
/// Tournament selection, uniform crossover and Gaussian mutation with a
/// geometrically decaying step size; the two best candidates survive each
/// generation unchanged. All randomness comes from one serial stream, so
/// results are reproducible and independent of the parallel fitness
/// evaluation. Fails if no full-rank candidate is ever seen.
pub fn optimize_ut(config: &StrConfig, opt: &OptimizerConfig) -> Result<TomographyUnitary> {
    if opt.population < TOURNAMENT_SIZE || opt.generations == 0 {
        return Err(Error::InvalidArgument(format!(
            "optimizer needs a population of at least {TOURNAMENT_SIZE} and at least one \
             generation, got {} and {}",
            opt.population, opt.generations
        )));
    }
    if !opt.weights.0.is_finite() || !opt.weights.1.is_finite() {
        return Err(Error::InvalidArgument(
            "objective exponents must be finite".into(),
        ));
    }
    let n = config.n_qubits();
    let evaluate = |genes: &Vec<f64>| -> Score {
        let u = build_transfer_matrix(n, genes).expect("validated register size");
        let observables = raw_observables(n, &u).expect("validated register size");
        let system = system_from_observables(config, &observables);
        let norm = system.frobenius_norm();
        let cond = system.condition_number();
        let rank = system.rank();
        let fitness = if rank == 3 {
            norm.powf(opt.weights.0) / cond.powf(opt.weights.1)
        } else {
            0.0
        };
        Score {
            fitness,
            norm,
            cond,
            rank,
        }
    };

    let mut rng = ChaCha12Rng::seed_from_u64(opt.seed);
    let mut population: Vec<Vec<f64>> = (0..opt.population)
        .map(|_| {
            (0..UT_PARAM_COUNT)
                .map(|_| rng.gen_range(0.0..std::f64::consts::TAU))
                .collect()
        })
        .collect();
    let mut best: Option<(Vec<f64>, Score)> = None;
    let decay_span = opt.generations.saturating_sub(1).max(1) as f64;

    for generation in 0..opt.generations {
        let scores: Vec<Score> = population.par_iter().map(evaluate).collect();
        for (genes, score) in population.iter().zip(scores.iter()) {
            if best
                .as_ref()
                .is_none_or(|(_, b)| score.fitness > b.fitness)
            {
                best = Some((genes.clone(), *score));
            }
        }
        if generation + 1 == opt.generations {
            break;
        }
        let mut order: Vec<usize> = (0..opt.population).collect();
        order.sort_by(|&i, &j| scores[j].fitness.total_cmp(&scores[i].fitness).then(i.cmp(&j)));
        let sigma = MUTATION_SIGMA_START
            * (MUTATION_SIGMA_END / MUTATION_SIGMA_START).powf(generation as f64 / decay_span);
        let mut next: Vec<Vec<f64>> = order[..ELITE_COUNT]
            .iter()
            .map(|&i| population[i].clone())
            .collect();
        while next.len() < opt.population {
            let p1 = tournament(&mut rng, &scores);
            let p2 = tournament(&mut rng, &scores);
            let child: Vec<f64> = (0..UT_PARAM_COUNT)
                .map(|k| {
                    let gene = if rng.gen_bool(0.5) {
                        population[p1][k]
                    } else {
                        population[p2][k]
                    };
                    let step: f64 = rng.sample(StandardNormal);
                    gene + sigma * step
                })
                .collect();
            next.push(child);
        }
        population = next;
    }

    let (genes, score) = best.expect("population is nonempty");
    if score.rank < 3 {
        return Err(Error::OptimizerBudget {
            best_fitness: score.fitness,
            best_rank: score.rank,
            best_cond: score.cond,
        });
    }
    debug_assert!(score.norm > 0.0);
    TomographyUnitary::from_parameters(config, &genes)
}

fn tournament(rng: &mut ChaCha12Rng, scores: &[Score]) -> usize {
    let mut winner = rng.gen_range(0..scores.len());
    for _ in 1..TOURNAMENT_SIZE {
        let i = rng.gen_range(0..scores.len());
        if scores[i].fitness > scores[winner].fitness {
            winner = i;
        }
    }
    winner
}

//! Dense operator algebra for small spin registers.
//!
//! Everything is a dense `DMatrix<Complex64>`. Registers are capped at 12
//! qubits so the 2^N x 2^N representation stays tractable. Qubit 1 is the
//! target spin and occupies the most significant slot in tensor products;
//! qubits 2..N are the ancillas.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;

/// Largest supported register; dense matrices grow as 4^N.
pub const MAX_QUBITS: usize = 12;
/// Default tolerance for merging nearly equal eigenvalues into one outcome,
/// relative to the spectral scale (see [`hermitian_eig`]).
pub const GROUPING_TOL: f64 = 1e-9;
/// Absolute elementwise tolerance of the Hermiticity check.
pub const HERMITICITY_TOL: f64 = 1e-12;
/// Absolute tolerance on Tr(rho) = 1 when validating a density matrix.
pub const TRACE_TOL: f64 = 1e-10;

#[inline]
pub(crate) fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
    Z,
}

/// 2x2 Pauli matrix along the given axis.
pub fn pauli(axis: Axis) -> CMatrix {
    let (a, b, c_, d) = match axis {
        Axis::X => (c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)),
        Axis::Y => (c(0.0, 0.0), c(0.0, -1.0), c(0.0, 1.0), c(0.0, 0.0)),
        Axis::Z => (c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-1.0, 0.0)),
    };
    CMatrix::from_row_slice(2, 2, &[a, b, c_, d])
}

pub fn identity(dim: usize) -> CMatrix {
    CMatrix::identity(dim, dim)
}

/// Spin-1/2 operator I_alpha = sigma_alpha / 2 acting on one site of an
/// n-qubit register. Sites are 1-based; site 1 is the target.
pub fn spin_op(n_qubits: usize, site: usize, axis: Axis) -> Result<CMatrix> {
    check_register_size(n_qubits, 1)?;
    if site < 1 || site > n_qubits {
        return Err(Error::SiteOutOfRange { site, n_qubits });
    }
    let half = pauli(axis) * c(0.5, 0.0);
    let left = identity(1 << (site - 1));
    let right = identity(1 << (n_qubits - site));
    Ok(left.kronecker(&half).kronecker(&right))
}

/// Collective ancilla spin operator: the sum of I_alpha over sites 2..N.
pub fn collective_ancilla_op(n_qubits: usize, axis: Axis) -> Result<CMatrix> {
    check_register_size(n_qubits, 2)?;
    let dim = 1 << n_qubits;
    let mut total = CMatrix::zeros(dim, dim);
    for site in 2..=n_qubits {
        total += spin_op(n_qubits, site, axis)?;
    }
    Ok(total)
}

pub(crate) fn check_register_size(n_qubits: usize, min: usize) -> Result<()> {
    if n_qubits < min || n_qubits > MAX_QUBITS {
        return Err(Error::RegisterSize {
            n_qubits,
            min,
            max: MAX_QUBITS,
        });
    }
    Ok(())
}

/// Max elementwise deviation from Hermiticity, max_ij |A_ij - conj(A_ji)|.
pub fn hermiticity_deviation(a: &CMatrix) -> f64 {
    let mut dev: f64 = 0.0;
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            dev = dev.max((a[(i, j)] - a[(j, i)].conj()).norm());
        }
    }
    dev
}

pub fn max_abs(a: &CMatrix) -> f64 {
    a.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Tr(A B) without forming the product.
pub fn trace_product(a: &CMatrix, b: &CMatrix) -> Complex64 {
    debug_assert_eq!(a.ncols(), b.nrows());
    debug_assert_eq!(a.nrows(), b.ncols());
    let mut t = c(0.0, 0.0);
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            t += a[(i, j)] * b[(j, i)];
        }
    }
    t
}

fn ensure_hermitian(a: &CMatrix) -> Result<()> {
    let dev = hermiticity_deviation(a);
    if dev > HERMITICITY_TOL {
        return Err(Error::NotHermitian { max_dev: dev });
    }
    Ok(())
}

/// One measurement outcome of a Hermitian operator: a (possibly degenerate)
/// eigenvalue and the orthogonal projector onto its eigenspace.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub value: f64,
    pub multiplicity: usize,
    pub projector: CMatrix,
}

/// Eigendecomposition of a Hermitian matrix with eigenvalues sorted ascending
/// and near-degenerate values merged into grouped outcomes.
#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    eigenvalues: Vec<f64>,
    eigenvectors: CMatrix,
    outcomes: Vec<Outcome>,
    grouping_tol: f64,
}

impl SpectralDecomposition {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Raw eigenvalues, ascending.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Orthonormal eigenvectors as columns, ordered like [`eigenvalues`](Self::eigenvalues).
    pub fn eigenvectors(&self) -> &CMatrix {
        &self.eigenvectors
    }

    /// Grouped outcomes, ascending in eigenvalue.
    pub fn outcomes(&self) -> &[Outcome] {
        &self.outcomes
    }

    pub fn grouping_tol(&self) -> f64 {
        self.grouping_tol
    }

    /// Rebuild sum_i m_i P_i from the grouped outcomes.
    pub fn reconstruct(&self) -> CMatrix {
        let dim = self.dim();
        let mut acc = CMatrix::zeros(dim, dim);
        for out in &self.outcomes {
            acc += &out.projector * c(out.value, 0.0);
        }
        acc
    }
}

/// Cyclic complex Jacobi diagonalization of the Hermitian matrix `b`,
/// accumulating the rotations into the columns of `v` (so the invariant
/// v_in · b_in · v_in' == v_out · b_out · v_out' holds). Intended for
/// nearly diagonal input, where a sweep performs only a handful of
/// rotations; errs out rather than return an unconverged result.
fn jacobi_diagonalize(b: &mut CMatrix, v: &mut CMatrix) -> Result<()> {
    let n = b.nrows();
    let scale = (0..n)
        .map(|i| b[(i, i)].re.abs())
        .fold(max_abs(b) * 1e-3, f64::max);
    let tol = (n as f64).max(8.0) * f64::EPSILON * scale;

    for _sweep in 0..60 {
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let beta = b[(p, q)];
                let ab = beta.norm();
                if ab <= tol {
                    continue;
                }
                rotated = true;
                let phase = beta / c(ab, 0.0);
                let tau = (b[(q, q)].re - b[(p, p)].re) / (2.0 * ab);
                let t = tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt());
                let co = 1.0 / (1.0 + t * t).sqrt();
                let si = t * co;
                let (cc, se) = (c(co, 0.0), phase * c(si, 0.0));

                // B <- G' B G with G = [[c, s e], [-s conj(e), c]] on (p, q)
                for k in 0..n {
                    let bkp = b[(k, p)];
                    let bkq = b[(k, q)];
                    b[(k, p)] = bkp * cc - bkq * se.conj();
                    b[(k, q)] = bkp * se + bkq * cc;
                }
                for k in 0..n {
                    let bpk = b[(p, k)];
                    let bqk = b[(q, k)];
                    b[(p, k)] = bpk * cc - bqk * se;
                    b[(q, k)] = bpk * se.conj() + bqk * cc;
                }
                b[(p, q)] = c(0.0, 0.0);
                b[(q, p)] = c(0.0, 0.0);
                b[(p, p)] = c(b[(p, p)].re, 0.0);
                b[(q, q)] = c(b[(q, q)].re, 0.0);

                for k in 0..v.nrows() {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = vkp * cc - vkq * se.conj();
                    v[(k, q)] = vkp * se + vkq * cc;
                }
            }
        }
        if !rotated {
            return Ok(());
        }
    }
    Err(Error::SingularSystem(
        "Jacobi eigensolver did not converge in 60 sweeps".into(),
    ))
}

/// Hermitian eigendecomposition with outcome grouping.
///
/// Eigenvalues closer than `grouping_tol * max(spectral range, max |eigenvalue|)`
/// to their predecessor are merged into one outcome. The scale includes the
/// magnitude term so that an identity-like spectrum (range ~ 0 up to roundoff)
/// still collapses to a single outcome.
pub fn hermitian_eig(a: &CMatrix, grouping_tol: f64) -> Result<SpectralDecomposition> {
    if a.nrows() != a.ncols() {
        return Err(Error::DimensionMismatch {
            expected: a.nrows(),
            got: a.ncols(),
        });
    }
    ensure_hermitian(a)?;
    let h = (a + a.adjoint()) * c(0.5, 0.0);
    // Fast tridiagonal solve as a preconditioner. On degenerate complex
    // Hermitian inputs its eigenvectors can mix separated eigenspaces (the
    // basis stays orthonormal but per-column residuals blow up), so the
    // decomposition of record is the Jacobi-polished Rayleigh-Ritz pair:
    // B = V'HV is unitarily similar to H and nearly diagonal, and cyclic
    // Jacobi finishes it off at machine precision in a few cheap sweeps.
    let eig = h.clone().symmetric_eigen();
    let mut vectors = eig.eigenvectors;
    let mut b = vectors.adjoint() * &h * &vectors;
    jacobi_diagonalize(&mut b, &mut vectors)?;

    let dim = a.nrows();
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&i, &j| b[(i, i)].re.total_cmp(&b[(j, j)].re));
    let eigenvalues: Vec<f64> = order.iter().map(|&i| b[(i, i)].re).collect();
    let mut eigenvectors = CMatrix::zeros(dim, dim);
    for (dst, &src) in order.iter().enumerate() {
        eigenvectors.set_column(dst, &vectors.column(src));
    }

    let range = eigenvalues[dim - 1] - eigenvalues[0];
    let magnitude = eigenvalues
        .iter()
        .map(|v| v.abs())
        .fold(0.0f64, f64::max);
    let threshold = grouping_tol * range.max(magnitude);

    let mut outcomes = Vec::new();
    let mut start = 0;
    for i in 1..=dim {
        if i == dim || eigenvalues[i] - eigenvalues[i - 1] > threshold {
            let members = start..i;
            let multiplicity = members.len();
            let value = eigenvalues[members.clone()].iter().sum::<f64>() / multiplicity as f64;
            let block = eigenvectors.columns(start, multiplicity);
            let projector = block * block.adjoint();
            outcomes.push(Outcome {
                value,
                multiplicity,
                projector,
            });
            start = i;
        }
    }

    Ok(SpectralDecomposition {
        eigenvalues,
        eigenvectors,
        outcomes,
        grouping_tol,
    })
}

/// Hermitian operator with its spectral decomposition cached at construction.
#[derive(Debug, Clone)]
pub struct Observable {
    matrix: CMatrix,
    spectral: SpectralDecomposition,
}

impl Observable {
    pub fn new(matrix: CMatrix) -> Result<Self> {
        Self::with_grouping_tol(matrix, GROUPING_TOL)
    }

    pub fn with_grouping_tol(matrix: CMatrix, grouping_tol: f64) -> Result<Self> {
        let spectral = hermitian_eig(&matrix, grouping_tol)?;
        Ok(Self { matrix, spectral })
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn spectral(&self) -> &SpectralDecomposition {
        &self.spectral
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }
}

/// Density matrix of an n-qubit register. Construction checks Hermiticity and
/// unit trace; positivity is guaranteed by the state constructors and checked
/// in tests rather than on every call.
#[derive(Debug, Clone)]
pub struct DensityMatrix {
    mat: CMatrix,
    n_qubits: usize,
}

impl DensityMatrix {
    pub fn new(mat: CMatrix) -> Result<Self> {
        let dim = mat.nrows();
        if mat.ncols() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: mat.ncols(),
            });
        }
        let n_qubits = qubit_count(dim)?;
        ensure_hermitian(&mat)?;
        let tr = mat.trace();
        if (tr.re - 1.0).abs() > TRACE_TOL || tr.im.abs() > TRACE_TOL {
            return Err(Error::NonUnitTrace { trace: tr.re });
        }
        Ok(Self { mat, n_qubits })
    }

    pub(crate) fn from_validated(mat: CMatrix, n_qubits: usize) -> Self {
        Self { mat, n_qubits }
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.mat
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    /// Tr(rho^2); 1/dim for the maximally mixed state, 1 for pure states.
    pub fn purity(&self) -> f64 {
        trace_product(&self.mat, &self.mat).re
    }

    /// Re Tr(rho A) for a Hermitian operator of matching dimension.
    pub fn expectation(&self, op: &CMatrix) -> Result<f64> {
        if op.nrows() != self.dim() || op.ncols() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: op.nrows(),
            });
        }
        Ok(trace_product(&self.mat, op).re)
    }
}

fn qubit_count(dim: usize) -> Result<usize> {
    if dim.is_power_of_two() {
        let n = dim.trailing_zeros() as usize;
        if (1..=MAX_QUBITS).contains(&n) {
            return Ok(n);
        }
    }
    Err(Error::InvalidDimension { dim })
}

/// SU(2) rotation by `angle` about the in-plane axis (cos phase, sin phase, 0).
fn su2_rotation(angle: f64, axis_phase: f64) -> CMatrix {
    let half = angle / 2.0;
    let generator = pauli(Axis::X) * c(axis_phase.cos(), 0.0)
        + pauli(Axis::Y) * c(axis_phase.sin(), 0.0);
    identity(2) * c(half.cos(), 0.0) - generator * c(0.0, half.sin())
}

/// Unitary applying [`su2_rotation`] to the target qubit alone.
pub fn target_rotation(n_qubits: usize, angle: f64, axis_phase: f64) -> Result<CMatrix> {
    check_register_size(n_qubits, 1)?;
    Ok(su2_rotation(angle, axis_phase).kronecker(&identity(1 << (n_qubits - 1))))
}

/// Unitary applying the same [`su2_rotation`] to every ancilla qubit at once.
pub fn ancilla_rotation(n_qubits: usize, angle: f64, axis_phase: f64) -> Result<CMatrix> {
    check_register_size(n_qubits, 2)?;
    let u = su2_rotation(angle, axis_phase);
    let mut block = u.clone();
    for _ in 2..n_qubits {
        block = block.kronecker(&u);
    }
    Ok(identity(2).kronecker(&block))
}

/// Conjugate an operator by the target rotation: U A U^dagger.
pub fn rotate_target_mat(a: &CMatrix, n_qubits: usize, angle: f64, axis_phase: f64) -> Result<CMatrix> {
    let u = target_rotation(n_qubits, angle, axis_phase)?;
    Ok(&u * a * u.adjoint())
}

pub fn rotate_target(rho: &DensityMatrix, angle: f64, axis_phase: f64) -> Result<DensityMatrix> {
    let mat = rotate_target_mat(rho.matrix(), rho.n_qubits(), angle, axis_phase)?;
    Ok(DensityMatrix::from_validated(mat, rho.n_qubits()))
}

/// Zero every coherence between the two target-qubit Zeeman blocks.
pub fn dephase_target_mat(a: &CMatrix, n_qubits: usize) -> CMatrix {
    let half = 1 << (n_qubits - 1);
    let mut out = a.clone();
    for i in 0..half {
        for j in half..2 * half {
            out[(i, j)] = c(0.0, 0.0);
            out[(j, i)] = c(0.0, 0.0);
        }
    }
    out
}

pub fn dephase_target(rho: &DensityMatrix) -> DensityMatrix {
    DensityMatrix::from_validated(
        dephase_target_mat(rho.matrix(), rho.n_qubits()),
        rho.n_qubits(),
    )
}

/// Trace out the target qubit, leaving the (N-1)-qubit ancilla state.
pub fn partial_trace_target(rho: &DensityMatrix) -> Result<DensityMatrix> {
    check_register_size(rho.n_qubits(), 2)?;
    let half = rho.dim() / 2;
    let m = rho.matrix();
    let mut out = CMatrix::zeros(half, half);
    for i in 0..half {
        for j in 0..half {
            out[(i, j)] = m[(i, j)] + m[(half + i, half + j)];
        }
    }
    Ok(DensityMatrix::from_validated(out, rho.n_qubits() - 1))
}

/// Trace out all ancillas, leaving the single-qubit target state.
pub fn partial_trace_ancilla(rho: &DensityMatrix) -> Result<DensityMatrix> {
    check_register_size(rho.n_qubits(), 2)?;
    let half = rho.dim() / 2;
    let m = rho.matrix();
    let mut out = CMatrix::zeros(2, 2);
    for t in 0..2 {
        for s in 0..2 {
            let mut acc = c(0.0, 0.0);
            for k in 0..half {
                acc += m[(t * half + k, s * half + k)];
            }
            out[(t, s)] = acc;
        }
    }
    Ok(DensityMatrix::from_validated(out, 1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha12Rng;

    fn random_hermitian(dim: usize, rng: &mut ChaCha12Rng) -> CMatrix {
        let raw = CMatrix::from_fn(dim, dim, |_, _| {
            c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        });
        (&raw + raw.adjoint()) * c(0.5, 0.0)
    }

    #[test]
    fn pauli_algebra() {
        let x = pauli(Axis::X);
        let y = pauli(Axis::Y);
        let z = pauli(Axis::Z);
        for p in [&x, &y, &z] {
            assert!(max_abs(&(p * p - identity(2))) < 1e-15);
            assert!(p.trace().norm() < 1e-15);
            assert!(hermiticity_deviation(p) < 1e-15);
        }
        // sigma_x sigma_y = i sigma_z and cyclic
        assert!(max_abs(&(&x * &y - &z * c(0.0, 1.0))) < 1e-15);
        assert!(max_abs(&(&y * &z - &x * c(0.0, 1.0))) < 1e-15);
        assert!(max_abs(&(&z * &x - &y * c(0.0, 1.0))) < 1e-15);
    }

    #[test]
    fn spin_ops_embed_per_site() {
        let z1 = spin_op(2, 1, Axis::Z).unwrap();
        let z2 = spin_op(2, 2, Axis::Z).unwrap();
        let half = 0.5;
        for (idx, expect) in [(0, half), (1, half), (2, -half), (3, -half)] {
            assert_eq!(z1[(idx, idx)].re, expect);
        }
        for (idx, expect) in [(0, half), (1, -half), (2, half), (3, -half)] {
            assert_eq!(z2[(idx, idx)].re, expect);
        }
        // operators on distinct sites commute
        let x1 = spin_op(3, 1, Axis::X).unwrap();
        let y3 = spin_op(3, 3, Axis::Y).unwrap();
        assert!(max_abs(&(&x1 * &y3 - &y3 * &x1)) < 1e-15);
    }

    #[test]
    fn spin_op_rejects_bad_site() {
        assert!(matches!(
            spin_op(2, 0, Axis::X),
            Err(Error::SiteOutOfRange { .. })
        ));
        assert!(matches!(
            spin_op(2, 3, Axis::X),
            Err(Error::SiteOutOfRange { .. })
        ));
        assert!(matches!(
            spin_op(13, 1, Axis::X),
            Err(Error::RegisterSize { .. })
        ));
    }

    #[test]
    fn collective_ancilla_matches_bit_enumeration() {
        // Oracle: enumerate the 16 basis states of a 4-qubit register and sum
        // the ancilla z-projections bit by bit (site s maps to bit N - s).
        let n = 4;
        let dim = 1 << n;
        let mut expected = CMatrix::zeros(dim, dim);
        for idx in 0..dim {
            let mut total = 0.0;
            for site in 2..=n {
                let bit = (idx >> (n - site)) & 1;
                total += if bit == 0 { 0.5 } else { -0.5 };
            }
            expected[(idx, idx)] = c(total, 0.0);
        }
        let built = collective_ancilla_op(4, Axis::Z).unwrap();
        assert!(max_abs(&(&built - &expected)) < 1e-15);
    }

    #[test]
    fn collective_spectrum_multiplicities() {
        // Binomial multiplicities over 3 ancilla spins, doubled by the target:
        // values -3/2..3/2 with multiplicities 2, 6, 6, 2.
        for axis in [Axis::X, Axis::Y, Axis::Z] {
            let op = collective_ancilla_op(4, axis).unwrap();
            let dec = hermitian_eig(&op, GROUPING_TOL).unwrap();
            let got: Vec<(f64, usize)> = dec
                .outcomes()
                .iter()
                .map(|o| (o.value, o.multiplicity))
                .collect();
            let expect = [(-1.5, 2), (-0.5, 6), (0.5, 6), (1.5, 2)];
            assert_eq!(got.len(), expect.len());
            for ((v, m), (ev, em)) in got.iter().zip(expect.iter()) {
                assert!((v - ev).abs() < 1e-12, "axis {axis:?}: value {v} vs {ev}");
                assert_eq!(m, em, "axis {axis:?}");
            }
        }
    }

    #[test]
    fn collective_two_qubits_is_single_ancilla() {
        let op = collective_ancilla_op(2, Axis::Z).unwrap();
        for (idx, expect) in [(0, 0.5), (1, -0.5), (2, 0.5), (3, -0.5)] {
            assert_eq!(op[(idx, idx)].re, expect);
        }
        assert!(matches!(
            collective_ancilla_op(1, Axis::Z),
            Err(Error::RegisterSize { .. })
        ));
    }

    #[test]
    fn identity_groups_to_single_outcome() {
        let dec = hermitian_eig(&identity(4), GROUPING_TOL).unwrap();
        assert_eq!(dec.outcomes().len(), 1);
        let out = &dec.outcomes()[0];
        assert!((out.value - 1.0).abs() < 1e-14);
        assert_eq!(out.multiplicity, 4);
        assert!(max_abs(&(&out.projector - identity(4))) < 1e-12);
    }

    #[test]
    fn grouping_tolerance_splits_and_merges() {
        let m = CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
            c(1.0, 0.0),
            c(1.0 + 1e-12, 0.0),
            c(2.0, 0.0),
        ]));
        let grouped = hermitian_eig(&m, 1e-9).unwrap();
        assert_eq!(grouped.outcomes().len(), 2);
        assert_eq!(grouped.outcomes()[0].multiplicity, 2);
        let split = hermitian_eig(&m, 0.0).unwrap();
        assert_eq!(split.outcomes().len(), 3);
    }

    #[test]
    fn spectral_invariants_on_random_hermitian() {
        let mut rng = ChaCha12Rng::seed_from_u64(11);
        for &dim in &[2usize, 5, 8] {
            let h = random_hermitian(dim, &mut rng);
            let dec = hermitian_eig(&h, GROUPING_TOL).unwrap();
            let mut proj_sum = CMatrix::zeros(dim, dim);
            for out in dec.outcomes() {
                let p = &out.projector;
                assert!(hermiticity_deviation(p) < 1e-10);
                assert!(max_abs(&(p * p - p)) < 1e-10);
                proj_sum += p;
            }
            for (i, a) in dec.outcomes().iter().enumerate() {
                for b in dec.outcomes().iter().skip(i + 1) {
                    assert!(max_abs(&(&a.projector * &b.projector)) < 1e-10);
                }
            }
            assert!(max_abs(&(&proj_sum - identity(dim))) < 1e-10);
            assert!(max_abs(&(dec.reconstruct() - &h)) < 1e-10);
            // eigenvalues ascending
            for w in dec.eigenvalues().windows(2) {
                assert!(w[0] <= w[1]);
            }
        }
    }

    #[test]
    fn degenerate_spectra_decompose_accurately() {
        // Oracle: H = U D U* with a hand-built unitary and repeated diagonal
        // entries; the decomposition must reproduce H and return true
        // eigenpairs. The tridiagonal preconditioner alone mixes separated
        // eigenspaces on inputs like these, which the Jacobi polish repairs.
        let mut rng = ChaCha12Rng::seed_from_u64(23);
        for (dim, lams) in [
            (4usize, vec![0.1, 0.1, 0.4, 0.4]),
            (6, vec![-1.0, 0.0, 0.0, 0.0, 2.0, 2.0]),
            (8, vec![0.085, 0.085, 0.125, 0.125, 0.125, 0.125, 0.165, 0.165]),
        ] {
            let g = random_hermitian(dim, &mut rng);
            let u = hermitian_eig(&g, GROUPING_TOL).unwrap().eigenvectors().clone();
            let d = CMatrix::from_fn(dim, dim, |i, j| {
                if i == j {
                    c(lams[i], 0.0)
                } else {
                    c(0.0, 0.0)
                }
            });
            let h = &u * d * u.adjoint();
            let h = (&h + &h.adjoint()) * c(0.5, 0.0);
            let dec = hermitian_eig(&h, GROUPING_TOL).unwrap();
            assert!(max_abs(&(dec.reconstruct() - &h)) < 1e-12);
            let v = dec.eigenvectors();
            for i in 0..dim {
                let col = v.column(i);
                let resid = &h * col - col * c(dec.eigenvalues()[i], 0.0);
                let worst = resid.iter().map(|z| z.norm()).fold(0.0f64, f64::max);
                assert!(worst < 1e-12, "column {i} residual {worst:e}");
            }
            let mut expect = lams.clone();
            expect.sort_by(f64::total_cmp);
            for (got, want) in dec.eigenvalues().iter().zip(&expect) {
                assert!((got - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn hermitian_eig_rejects_non_hermitian() {
        let mut m = identity(2);
        m[(0, 1)] = c(0.5, 0.0);
        assert!(matches!(
            hermitian_eig(&m, GROUPING_TOL),
            Err(Error::NotHermitian { .. })
        ));
    }

    #[test]
    fn density_matrix_validation() {
        let ok = DensityMatrix::new(identity(2) * c(0.5, 0.0)).unwrap();
        assert_eq!(ok.n_qubits(), 1);
        assert!((ok.purity() - 0.5).abs() < 1e-15);

        assert!(matches!(
            DensityMatrix::new(identity(2)),
            Err(Error::NonUnitTrace { .. })
        ));
        let mut skew = identity(2) * c(0.5, 0.0);
        skew[(0, 1)] = c(0.0, 0.3);
        assert!(matches!(
            DensityMatrix::new(skew),
            Err(Error::NotHermitian { .. })
        ));
        assert!(matches!(
            DensityMatrix::new(identity(3) * c(1.0 / 3.0, 0.0)),
            Err(Error::InvalidDimension { .. })
        ));
    }

    #[test]
    fn target_rotation_takes_z_to_x() {
        // Rotation by pi/2 about the y axis (axis phase pi/2) maps sigma_z to sigma_x.
        let rho = DensityMatrix::new(
            (identity(2) + pauli(Axis::Z) * c(0.3, 0.0)) * c(0.5, 0.0),
        )
        .unwrap();
        let rotated = rotate_target(&rho, std::f64::consts::FRAC_PI_2, std::f64::consts::FRAC_PI_2)
            .unwrap();
        let expected = (identity(2) + pauli(Axis::X) * c(0.3, 0.0)) * c(0.5, 0.0);
        assert!(max_abs(&(rotated.matrix() - &expected)) < 1e-15);
        assert!((rotated.purity() - rho.purity()).abs() < 1e-14);
    }

    #[test]
    fn ancilla_rotation_moves_collective_z_to_x() {
        // The same pi/2 pulse about y, applied to all ancillas, conjugates the
        // collective ancilla z operator into the collective x operator and
        // leaves the target factor untouched.
        let n = 3;
        let u = ancilla_rotation(n, std::f64::consts::FRAC_PI_2, std::f64::consts::FRAC_PI_2)
            .unwrap();
        let a_z = collective_ancilla_op(n, Axis::Z).unwrap();
        let a_x = collective_ancilla_op(n, Axis::X).unwrap();
        let moved = &u * a_z * u.adjoint();
        assert!(max_abs(&(&moved - &a_x)) < 1e-14);
        let t_z = spin_op(n, 1, Axis::Z).unwrap();
        let fixed = &u * &t_z * u.adjoint();
        assert!(max_abs(&(&fixed - &t_z)) < 1e-14);
        assert!(max_abs(&(u.adjoint() * &u - identity(1 << n))) < 1e-14);
    }

    #[test]
    fn target_rotation_is_unitary() {
        let u = target_rotation(3, 1.234, 0.777).unwrap();
        assert!(max_abs(&(&u * u.adjoint() - identity(8))) < 1e-14);
        let id = target_rotation(3, 0.0, 0.4).unwrap();
        assert!(max_abs(&(&id - identity(8))) < 1e-15);
    }

    #[test]
    fn dephasing_kills_target_coherences() {
        let mut rng = ChaCha12Rng::seed_from_u64(5);
        let h = random_hermitian(4, &mut rng);
        let mat = &identity(4) * c(0.25, 0.0) + &h * c(0.01, 0.0)
            - identity(4) * c(0.01 * h.trace().re / 4.0, 0.0);
        let rho = DensityMatrix::new(mat).unwrap();
        let deph = dephase_target(&rho);
        for i in 0..2 {
            for j in 2..4 {
                assert_eq!(deph.matrix()[(i, j)], c(0.0, 0.0));
                assert_eq!(deph.matrix()[(j, i)], c(0.0, 0.0));
            }
        }
        // idempotent, trace preserving, diagonal blocks untouched
        let twice = dephase_target(&deph);
        assert!(max_abs(&(twice.matrix() - deph.matrix())) < 1e-15);
        assert!((deph.matrix().trace().re - 1.0).abs() < 1e-12);
        assert_eq!(deph.matrix()[(0, 1)], rho.matrix()[(0, 1)]);
        assert_eq!(deph.matrix()[(2, 3)], rho.matrix()[(2, 3)]);
    }

    #[test]
    fn partial_traces_recover_product_factors() {
        let rho_t = (identity(2) + pauli(Axis::X) * c(0.4, 0.0)) * c(0.5, 0.0);
        let rho_a = (identity(2) + pauli(Axis::Z) * c(0.2, 0.0)) * c(0.5, 0.0);
        let joint = DensityMatrix::new(rho_t.kronecker(&rho_a)).unwrap();
        let anc = partial_trace_target(&joint).unwrap();
        let tgt = partial_trace_ancilla(&joint).unwrap();
        assert!(max_abs(&(anc.matrix() - &rho_a)) < 1e-14);
        assert!(max_abs(&(tgt.matrix() - &rho_t)) < 1e-14);
        assert!((anc.matrix().trace().re - 1.0).abs() < 1e-14);
    }
}

//! Scaling studies and reference-table pipelines.
//!
//! Each sweep evaluates a Fisher-information quantity over a parameter axis,
//! verifies the law it is expected to obey, and returns the raw points plus
//! an optional linear fit for downstream serialization.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fisher::{
    dual_qfi, fisher_info_from_state, qfi_max, quadrature_fi, Param,
};
use crate::operators::{
    dephase_target_mat, pauli, rotate_target, rotate_target_mat, Axis, Observable,
};
use crate::states::{str_target_rotated, BlochAngles, StateFamily, StrConfig};
use crate::tomography::{ancilla_observables, str_qst_noisy, TomographyUnitary};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, TAU};

/// Relative spread above which angle-independent laws count as broken.
const SPREAD_LIMIT: f64 = 1e-9;

/// Relative tolerance of the purity-doubling ratio check.
const DOUBLING_TOL: f64 = 1e-4;

/// Relative tolerance of linear-law fits (slope and intercept).
const FIT_TOL: f64 = 1e-6;

/// Sweep parameter axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SweepAxis {
    /// Register size N.
    N,
    /// Purity deviation amplitude.
    #[serde(rename = "eps")]
    Eps,
    /// Orientation grid over both angles.
    #[serde(rename = "theta0_phi0_grid")]
    Theta0Phi0Grid,
    /// Polar measurement bias.
    #[serde(rename = "dtheta0")]
    Dtheta0,
}

/// One evaluated sweep point: the swept inputs and the derived values.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepPoint {
    pub input: Vec<f64>,
    pub values: Vec<f64>,
}

/// Ordinary least-squares summary of a linear relation in the sweep.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct FitSummary {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Result of one sweep: points in deterministic order, with column labels
/// for serialization and an optional fit for linear laws.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepReport {
    pub axis: SweepAxis,
    pub input_labels: Vec<String>,
    pub value_labels: Vec<String>,
    pub points: Vec<SweepPoint>,
    pub fit: Option<FitSummary>,
}

fn labels(names: &[&str]) -> Vec<String> {
    names.iter().map(|s| s.to_string()).collect()
}

fn linear_fit(xs: &[f64], ys: &[f64]) -> FitSummary {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut syy = 0.0;
    for (x, y) in xs.iter().zip(ys.iter()) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
        syy += (y - my) * (y - my);
    }
    if sxx == 0.0 {
        return FitSummary {
            slope: 0.0,
            intercept: my,
            r_squared: 1.0,
        };
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r_squared = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    FitSummary {
        slope,
        intercept,
        r_squared,
    }
}

/// Sphere-uniform orientation draw: cos(theta0) uniform on [-1, 1], phi0
/// uniform on [0, 2 pi).
fn draw_angles(rng: &mut ChaCha12Rng) -> BlochAngles {
    let theta0 = rng.gen_range(-1.0_f64..=1.0).acos();
    let phi0 = rng.gen_range(0.0..TAU);
    BlochAngles::new(theta0, phi0).expect("acos yields a valid polar angle")
}

/// Evenly spaced grid from `start` to `end` inclusive.
pub fn linspace(start: f64, end: f64, count: usize) -> Result<Vec<f64>> {
    if count < 2 || !start.is_finite() || !end.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "linspace needs two finite endpoints and at least two points, \
             got [{start}, {end}] with {count}"
        )));
    }
    let denom = (count - 1) as f64;
    Ok((0..count)
        .map(|i| {
            if i == count - 1 {
                // Land exactly on the endpoint instead of its rounded image.
                end
            } else {
                start + (end - start) * (i as f64 / denom)
            }
        })
        .collect())
}

/// Symmetric grid over [-half_width, half_width] with an exact zero at the
/// center; `count` must be odd so the center point exists.
pub fn symmetric_linspace(half_width: f64, count: usize) -> Result<Vec<f64>> {
    if count < 3 || count.is_multiple_of(2) || !half_width.is_finite() || half_width <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "symmetric grid needs an odd count >= 3 and positive half width, \
             got {count} over {half_width}"
        )));
    }
    let mid = (count / 2) as isize;
    // The ratio (i - mid) / mid hits -1, 0, and 1 exactly, so the grid ends
    // and center are exact.
    Ok((0..count)
        .map(|i| half_width * ((i as isize - mid) as f64 / mid as f64))
        .collect())
}

/// Maximum QFI of the correlated family versus register size.
///
/// For each N this draws `samples` sphere-uniform orientations, checks that
/// the polar QFI is orientation independent, and fits F / eps^2 against
/// N - 1. The law is linear with unit slope and zero intercept; deviations
/// beyond 1e-6 are reported as errors rather than silently returned.
pub fn scaling_in_n(
    eps_a1: f64,
    n_range: &[usize],
    samples: usize,
    seed: u64,
) -> Result<SweepReport> {
    if n_range.is_empty() || samples == 0 {
        return Err(Error::InvalidArgument(
            "scaling sweep needs at least one register size and one sample".into(),
        ));
    }
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let eps2 = eps_a1 * eps_a1;
    let mut points = Vec::with_capacity(n_range.len());
    for &n in n_range {
        let config = StrConfig::new(n, 0.0, eps_a1)?;
        let orientations: Vec<BlochAngles> =
            (0..samples).map(|_| draw_angles(&mut rng)).collect();
        let values: Vec<f64> = orientations
            .par_iter()
            .map(|angles| {
                let family = StateFamily::StrCorrelated {
                    config,
                    angles: *angles,
                };
                qfi_max(&family, Param::Theta).map(|r| r.value())
            })
            .collect::<Result<_>>()?;
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        let max = values.iter().cloned().fold(f64::MIN, f64::max);
        let min = values.iter().cloned().fold(f64::MAX, f64::min);
        let spread = (max - min) / mean;
        if spread > SPREAD_LIMIT {
            return Err(Error::SpreadViolation {
                n_qubits: n,
                spread,
                limit: SPREAD_LIMIT,
            });
        }
        points.push(SweepPoint {
            input: vec![n as f64],
            values: vec![mean / eps2, spread],
        });
    }
    let xs: Vec<f64> = points.iter().map(|p| p.input[0] - 1.0).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.values[0]).collect();
    let fit = linear_fit(&xs, &ys);
    if xs.len() > 1 && ((fit.slope - 1.0).abs() > FIT_TOL || fit.intercept.abs() > FIT_TOL) {
        return Err(Error::LawViolation(format!(
            "QFI scaling in N fits slope {:.17e}, intercept {:.17e}",
            fit.slope, fit.intercept
        )));
    }
    Ok(SweepReport {
        axis: SweepAxis::N,
        input_labels: labels(&["n"]),
        value_labels: labels(&["qfi_over_eps2", "relative_spread"]),
        points,
        fit: Some(fit),
    })
}

/// Maximum QFI of the correlated family versus purity amplitude.
///
/// Points are recorded for every requested amplitude; consecutive entries
/// that differ by an exact factor of two must show the quadratic ratio of 4.
pub fn scaling_in_eps(n_qubits: usize, eps_values: &[f64]) -> Result<SweepReport> {
    if eps_values.is_empty() {
        return Err(Error::InvalidArgument(
            "scaling sweep needs at least one amplitude".into(),
        ));
    }
    if eps_values.iter().any(|e| !e.is_finite() || *e <= 0.0) {
        return Err(Error::InvalidArgument(
            "purity amplitudes must be positive and finite".into(),
        ));
    }
    // A fixed representative orientation; the polar QFI is orientation
    // independent on this family.
    let angles = BlochAngles::new(1.1, 0.6)?;
    let qfis: Vec<f64> = eps_values
        .par_iter()
        .map(|&eps| {
            let config = StrConfig::new(n_qubits, 0.0, eps)?;
            let family = StateFamily::StrCorrelated { config, angles };
            qfi_max(&family, Param::Theta).map(|r| r.value())
        })
        .collect::<Result<_>>()?;
    for (pair, window) in eps_values.windows(2).zip(qfis.windows(2)) {
        if (pair[1] / pair[0] - 2.0).abs() > 1e-12 {
            continue;
        }
        let ratio = window[1] / window[0];
        if (ratio / 4.0 - 1.0).abs() > DOUBLING_TOL {
            return Err(Error::DoublingViolation {
                ratio,
                tol: DOUBLING_TOL,
            });
        }
    }
    let points: Vec<SweepPoint> = eps_values
        .iter()
        .zip(qfis.iter())
        .map(|(&eps, &f)| SweepPoint {
            input: vec![eps],
            values: vec![f, f / (eps * eps)],
        })
        .collect();
    let xs: Vec<f64> = eps_values.iter().map(|e| e * e).collect();
    let fit = linear_fit(&xs, &qfis);
    Ok(SweepReport {
        axis: SweepAxis::Eps,
        input_labels: labels(&["eps_a1"]),
        value_labels: labels(&["qfi", "qfi_over_eps2"]),
        points,
        fit: Some(fit),
    })
}

/// Azimuthal QFI of the correlated family over an orientation grid,
/// normalized by the polar maximum eps^2 (N - 1).
///
/// The normalized factor r must lie in [0, 1]; its empirical relation to
/// sin^2(theta0) is reported as a fit, not assumed.
pub fn r_factor_map(
    n_qubits: usize,
    theta0_grid: &[f64],
    phi0_grid: &[f64],
    eps_a1: f64,
) -> Result<SweepReport> {
    if theta0_grid.is_empty() || phi0_grid.is_empty() {
        return Err(Error::InvalidArgument(
            "orientation grid must be nonempty on both axes".into(),
        ));
    }
    let config = StrConfig::new(n_qubits, 0.0, eps_a1)?;
    let ceiling = eps_a1 * eps_a1 * (n_qubits as f64 - 1.0);
    let mut inputs = Vec::with_capacity(theta0_grid.len() * phi0_grid.len());
    for &theta0 in theta0_grid {
        for &phi0 in phi0_grid {
            inputs.push(BlochAngles::new(theta0, phi0)?);
        }
    }
    let points: Vec<SweepPoint> = inputs
        .par_iter()
        .map(|angles| {
            let family = StateFamily::StrCorrelated {
                config,
                angles: *angles,
            };
            let f_phi = qfi_max(&family, Param::Phi)?.value();
            let r = f_phi / ceiling;
            if r > 1.0 + SPREAD_LIMIT {
                return Err(Error::LawViolation(format!(
                    "r factor {r:.17e} above 1 at theta0 {:.6}, phi0 {:.6}",
                    angles.theta0(),
                    angles.phi0()
                )));
            }
            Ok(SweepPoint {
                input: vec![angles.theta0(), angles.phi0()],
                values: vec![f_phi, r, angles.theta0().sin().powi(2)],
            })
        })
        .collect::<Result<_>>()?;
    let xs: Vec<f64> = points.iter().map(|p| p.values[2]).collect();
    let rs: Vec<f64> = points.iter().map(|p| p.values[1]).collect();
    Ok(SweepReport {
        axis: SweepAxis::Theta0Phi0Grid,
        input_labels: labels(&["theta0", "phi0"]),
        value_labels: labels(&["qfi_phi", "r", "sin2_theta0"]),
        points,
        fit: Some(linear_fit(&xs, &rs)),
    })
}

/// Both QFI components of the uncorrelated register family against their
/// single-qubit laws, over random orientations.
///
/// The polar component must sit in [1, 1 + 2 eps_a1^2 (N-1)] in units of
/// eps_t1^2; the azimuthal component must equal eps_t1^2 sin^2(theta0) to
/// 1e-6 relative. The azimuthal gate therefore requires
/// eps_a1^2 (N-1) < 1e-6; larger ancilla purities fail it honestly, since
/// the neglected correction is then genuinely above the tolerance.
pub fn uncorrelated_comparison(
    config: &StrConfig,
    samples: usize,
    seed: u64,
) -> Result<SweepReport> {
    if samples == 0 {
        return Err(Error::InvalidArgument(
            "comparison needs at least one sample".into(),
        ));
    }
    let eps_t1 = config.eps_t1();
    if eps_t1 <= 0.0 {
        return Err(Error::InvalidArgument(
            "uncorrelated comparison needs a positive target purity".into(),
        ));
    }
    let scale = eps_t1 * eps_t1;
    let band = 2.0 * config.eps_a1() * config.eps_a1() * (config.n_qubits() as f64 - 1.0);
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let orientations: Vec<BlochAngles> = (0..samples).map(|_| draw_angles(&mut rng)).collect();
    let points: Vec<SweepPoint> = orientations
        .par_iter()
        .map(|angles| {
            let family = StateFamily::StrUncorrelated {
                config: *config,
                angles: *angles,
            };
            let f_theta = qfi_max(&family, Param::Theta)?.value();
            let f_phi = qfi_max(&family, Param::Phi)?.value();
            let ratio_theta = f_theta / scale;
            if !(1.0 - SPREAD_LIMIT..=1.0 + band + SPREAD_LIMIT).contains(&ratio_theta) {
                return Err(Error::LawViolation(format!(
                    "uncorrelated polar QFI ratio {ratio_theta:.17e} outside \
                     [1, 1 + {band:.3e}]"
                )));
            }
            let sin2 = angles.theta0().sin().powi(2);
            let expected_phi = scale * sin2;
            if (f_phi - expected_phi).abs() > 1e-6 * expected_phi + 1e-15 * scale {
                return Err(Error::LawViolation(format!(
                    "uncorrelated azimuthal QFI {f_phi:.17e} deviates from \
                     {expected_phi:.17e} beyond 1e-6 relative"
                )));
            }
            Ok(SweepPoint {
                input: vec![angles.theta0(), angles.phi0()],
                values: vec![ratio_theta, f_phi / scale, sin2],
            })
        })
        .collect::<Result<_>>()?;
    let xs: Vec<f64> = points.iter().map(|p| p.values[2]).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.values[1]).collect();
    Ok(SweepReport {
        axis: SweepAxis::Theta0Phi0Grid,
        input_labels: labels(&["theta0", "phi0"]),
        value_labels: labels(&["qfi_theta_over_eps_t2", "qfi_phi_over_eps_t2", "sin2_theta0"]),
        points,
        fit: Some(linear_fit(&xs, &ys)),
    })
}

/// Biased polar QFI surface over measurement bias and purity.
///
/// Values follow the closed form eps^2 cos^2(d) / (1 - eps^2 sin^2(d)),
/// which is independent of the reference orientation; the zero-bias column
/// is exactly eps^2.
pub fn fig2_surface(dtheta0_grid: &[f64], eps_grid: &[f64]) -> Result<SweepReport> {
    if dtheta0_grid.is_empty() || eps_grid.is_empty() {
        return Err(Error::InvalidArgument(
            "surface grid must be nonempty on both axes".into(),
        ));
    }
    if eps_grid
        .iter()
        .any(|e| !e.is_finite() || *e < 0.0 || *e > 1.0)
    {
        return Err(Error::InvalidArgument(
            "purity amplitudes must lie in [0, 1]".into(),
        ));
    }
    let mut points = Vec::with_capacity(dtheta0_grid.len() * eps_grid.len());
    for &dtheta0 in dtheta0_grid {
        for &eps in eps_grid {
            let f = crate::fisher::biased_qfi_theta(FRAC_PI_2, 0.0, dtheta0, 0.0, eps);
            points.push(SweepPoint {
                input: vec![dtheta0, eps],
                values: vec![f],
            });
        }
    }
    Ok(SweepReport {
        axis: SweepAxis::Dtheta0,
        input_labels: labels(&["dtheta0", "eps"]),
        value_labels: labels(&["qfi_theta"]),
        points,
        fit: None,
    })
}

/// One row of the reference table: dual-parameter QFIs of the correlated
/// and uncorrelated families under optimal (SLD) and tomography-based
/// readout, all normalized by eps_a1^2.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Table2Row {
    pub state_label: String,
    pub theta0: f64,
    pub phi0: f64,
    /// Overlap between the tomography reconstruction and the prepared
    /// deviation, from a (possibly noise-seeded) single-shot experiment.
    pub correlation: f64,
    pub qst_qfi_uncorrelated: f64,
    pub qst_qfi_correlated: f64,
    /// Tabulated reference values for the readout-dependent column;
    /// agreement is order-of-magnitude only, because the readout unitary
    /// behind them is not published.
    pub qst_qfi_correlated_reference: f64,
    pub qst_amplification: Option<f64>,
    pub sld_qfi_uncorrelated: f64,
    pub sld_qfi_correlated: f64,
    pub sld_amplification: Option<f64>,
    /// Comparability status of the tomography-based columns.
    pub comparability: String,
}

/// Dual-parameter QFI of the two-step single-qubit tomography readout.
///
/// The azimuthal channel measures both transverse quadratures directly; the
/// polar channel dephases, converts the population difference with a pi/2
/// pulse, and then measures the same quadrature pair. Both are averaged as
/// simultaneous quadrature detections.
pub fn qst_quadrature_single(angles: &BlochAngles, eps: f64) -> Result<(f64, f64)> {
    let family = StateFamily::SingleQubit {
        angles: *angles,
        eps,
    };
    let m_x = Observable::new(pauli(Axis::X) * num_complex::Complex64::new(0.5, 0.0))?;
    let m_y = Observable::new(pauli(Axis::Y) * num_complex::Complex64::new(0.5, 0.0))?;
    let f_phi = quadrature_fi(&family, Param::Phi, &m_x, &m_y)?;
    let rho = family.density_matrix()?;
    let drho = family.derivative(Param::Theta)?;
    let channel_rho = rotate_target(&crate::operators::dephase_target(&rho), FRAC_PI_2, FRAC_PI_2)?;
    let channel_drho = rotate_target_mat(&dephase_target_mat(&drho, 1), 1, FRAC_PI_2, FRAC_PI_2)?;
    let fx = fisher_info_from_state(
        &channel_rho,
        &channel_drho,
        &m_x,
        Param::Theta,
        crate::fisher::GroupingMode::Projector,
    )?
    .value();
    let fy = fisher_info_from_state(
        &channel_rho,
        &channel_drho,
        &m_y,
        Param::Theta,
        crate::fisher::GroupingMode::Projector,
    )?
    .value();
    let f_theta = 0.5 * (fx + fy);
    Ok((f_theta, f_phi))
}

/// Dual-parameter QFI components of the transfer-unitary readout on the
/// correlated family.
///
/// Each detection block records both of its transverse quadratures in the
/// same shot, so every block contributes one quadrature pair and the two
/// blocks add as independent channels. Summing the observables before
/// detection would discard the per-block resolution and roughly a factor of
/// three of information.
pub fn qst_quadrature_str(
    config: &StrConfig,
    angles: &BlochAngles,
    ut: &TomographyUnitary,
) -> Result<(f64, f64)> {
    let observables = ancilla_observables(config.n_qubits(), ut)?;
    let family = StateFamily::StrCorrelated {
        config: *config,
        angles: *angles,
    };
    let mut f_theta = 0.0;
    let mut f_phi = 0.0;
    for pair in observables.chunks(2) {
        f_theta += quadrature_fi(&family, Param::Theta, &pair[0], &pair[1])?;
        f_phi += quadrature_fi(&family, Param::Phi, &pair[0], &pair[1])?;
    }
    Ok((f_theta, f_phi))
}

/// Reference-table pipeline over the five tabulated orientations.
///
/// The target purity is tied to the ancilla purity through the gyromagnetic
/// ratio: eps_t1 = eps_a1 / gamma_ratio. SLD columns use the maximum QFI of
/// both families; tomography columns use the quadrature readouts; the
/// correlation column runs the single-shot reconstruction with the given
/// noise level. All QFI columns are normalized by eps_a1^2.
pub fn table2_pipeline(
    config: &StrConfig,
    gamma_ratio: f64,
    ut: &TomographyUnitary,
    noise_sigma: f64,
    seed: u64,
) -> Result<Vec<Table2Row>> {
    if !gamma_ratio.is_finite() || gamma_ratio <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "gyromagnetic ratio must be positive and finite, got {gamma_ratio}"
        )));
    }
    let eps_a1 = config.eps_a1();
    if eps_a1 <= 0.0 {
        return Err(Error::InvalidArgument(
            "table pipeline needs a positive ancilla purity".into(),
        ));
    }
    let eps_t1 = eps_a1 / gamma_ratio;
    let table_config = StrConfig::new(config.n_qubits(), eps_t1, eps_a1)?;
    let rows = [
        ("sigma_0_phi0", 0.0, 0.0, 0.0),
        ("sigma_pi2_0", FRAC_PI_2, 0.0, 0.165),
        ("sigma_pi2_pi2", FRAC_PI_2, FRAC_PI_2, 0.186),
        ("sigma_pi4_0", FRAC_PI_4, 0.0, 0.109),
        ("sigma_pi4_pi2", FRAC_PI_4, FRAC_PI_2, 0.149),
    ];
    let norm = eps_a1 * eps_a1;
    let mut out = Vec::with_capacity(rows.len());
    for (index, (label, theta0, phi0, qst_reference)) in rows.into_iter().enumerate() {
        let angles = BlochAngles::new(theta0, phi0)?;
        let correlated = StateFamily::StrCorrelated {
            config: table_config,
            angles,
        };
        let uncorrelated = StateFamily::StrUncorrelated {
            config: table_config,
            angles,
        };
        let sld_corr = dual_qfi(
            qfi_max(&correlated, Param::Theta)?.value(),
            qfi_max(&correlated, Param::Phi)?.value(),
        ) / norm;
        let sld_unc = dual_qfi(
            qfi_max(&uncorrelated, Param::Theta)?.value(),
            qfi_max(&uncorrelated, Param::Phi)?.value(),
        ) / norm;
        let (qst_theta_unc, qst_phi_unc) = qst_quadrature_single(&angles, eps_t1)?;
        let qst_unc = dual_qfi(qst_theta_unc, qst_phi_unc) / norm;
        let (qst_theta_corr, qst_phi_corr) = qst_quadrature_str(&table_config, &angles, ut)?;
        let qst_corr = dual_qfi(qst_theta_corr, qst_phi_corr) / norm;
        let rho = str_target_rotated(&table_config, &angles)?;
        let qst = str_qst_noisy(&rho, ut, noise_sigma, seed.wrapping_add(index as u64))?;
        let correlation = qst.correlation().ok_or_else(|| {
            Error::LawViolation("tomography lost the prepared deviation direction".into())
        })?;
        out.push(Table2Row {
            state_label: label.to_string(),
            theta0,
            phi0,
            correlation,
            qst_qfi_uncorrelated: qst_unc,
            qst_qfi_correlated: qst_corr,
            qst_qfi_correlated_reference: qst_reference,
            qst_amplification: (qst_unc > 0.0).then(|| qst_corr / qst_unc),
            sld_qfi_uncorrelated: sld_unc,
            sld_qfi_correlated: sld_corr,
            sld_amplification: (sld_unc > 0.0).then(|| sld_corr / sld_unc),
            comparability: "reference-ut-unpublished".to_string(),
        });
    }
    Ok(out)
}

//! Command-line interface: QFI evaluation, single-shot tomography, and the
//! sweep pipelines, with deterministic JSON or CSV output.

use std::collections::hash_map::DefaultHasher;
use std::f64::consts::FRAC_PI_2;
use std::hash::{Hash, Hasher};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use starqfi::error::{Error, Result};
use starqfi::fisher::{
    biased_qfi_phi, biased_qfi_theta, cramer_rao_bound, dual_qfi, qfi_max, Param,
};
use starqfi::report::{
    emit, fmt_float, sweep_csv, table2_csv, to_json_string, CsvDoc, OutputFormat, Report,
    RunConfig, RunConfigPatch,
};
use starqfi::states::{str_target_rotated, BlochAngles, StateFamily};
use starqfi::sweeps::{
    fig2_surface, linspace, r_factor_map, scaling_in_n, scaling_in_eps, symmetric_linspace,
    table2_pipeline, uncorrelated_comparison,
};
use starqfi::tomography::{optimize_ut, str_qst_noisy, OptimizerConfig, TomographyUnitary};

#[derive(Parser)]
#[command(
    name = "starqfi",
    version,
    about = "Quantum Fisher information and single-shot tomography for star-topology registers"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    globals: GlobalArgs,
}

#[derive(Args)]
struct GlobalArgs {
    /// JSON config file; explicit flags override its entries
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Register size (target plus ancillas)
    #[arg(long, global = true)]
    n: Option<usize>,
    /// Ancilla purity factor
    #[arg(long = "eps-a1", global = true)]
    eps_a1: Option<f64>,
    /// Target purity factor; defaults to eps-a1 / gamma-ratio
    #[arg(long = "eps-t1", global = true)]
    eps_t1: Option<f64>,
    /// Gyromagnetic ratio between ancilla and target species
    #[arg(long = "gamma-ratio", global = true)]
    gamma_ratio: Option<f64>,
    /// Polar reference angle in radians
    #[arg(long, global = true)]
    theta0: Option<f64>,
    /// Azimuthal reference angle in radians
    #[arg(long, global = true)]
    phi0: Option<f64>,
    /// Seed for every random choice in the run
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Gaussian noise level on measured intensities
    #[arg(long = "noise-sigma", global = true)]
    noise_sigma: Option<f64>,
    /// Output format
    #[arg(long, global = true, value_enum)]
    format: Option<OutputFormat>,
    /// Output file; stdout when omitted
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Bound the rayon thread pool
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Directory for cached readout-unitary optimizations
    #[arg(long = "ut-cache", global = true)]
    ut_cache: Option<PathBuf>,
}

/// Optimizer budget shared by the commands that need a readout unitary.
#[derive(Args)]
struct OptimizerArgs {
    /// Population size of the genetic search
    #[arg(long, default_value_t = 64)]
    population: usize,
    /// Generation count of the genetic search
    #[arg(long, default_value_t = 200)]
    generations: usize,
}

#[derive(Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
enum ScalingAxis {
    N,
    Eps,
}

#[derive(Subcommand)]
enum Command {
    /// QFI of a single qubit, optionally under a biased measurement
    QfiSingle {
        /// Purity factor; defaults to the resolved eps-t1
        #[arg(long)]
        eps: Option<f64>,
        /// Polar measurement bias in radians
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        dtheta0: f64,
        /// Azimuthal measurement bias in radians
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        dphi0: f64,
    },
    /// QFI of the correlated and uncorrelated register families
    QfiStr,
    /// Single-shot tomography of the target orientation via the ancillas
    Qst {
        #[command(flatten)]
        optimizer: OptimizerArgs,
    },
    /// Reference table over the five tabulated orientations
    Table2 {
        #[command(flatten)]
        optimizer: OptimizerArgs,
    },
    /// Biased-QFI surface over measurement bias and purity
    Fig2 {
        /// Grid points per axis, odd so the zero-bias line is on the grid
        #[arg(long, default_value_t = 51)]
        points: usize,
    },
    /// QFI scaling in register size or purity
    Scaling {
        #[arg(long, value_enum, default_value_t = ScalingAxis::N)]
        axis: ScalingAxis,
        #[arg(long, default_value_t = 2)]
        n_min: usize,
        #[arg(long, default_value_t = 8)]
        n_max: usize,
        /// Orientation draws per register size
        #[arg(long, default_value_t = 20)]
        samples: usize,
        /// Purity values for the eps axis
        #[arg(
            long,
            value_delimiter = ',',
            default_value = "1e-4,2e-4,4e-4,8e-4,1.6e-3"
        )]
        eps_values: Vec<f64>,
    },
    /// Optimize the readout unitary and report its quality
    OptimizeUt {
        #[command(flatten)]
        optimizer: OptimizerArgs,
    },
    /// Azimuthal information fraction over an orientation grid
    RFactor {
        /// Grid points per angle axis
        #[arg(long, default_value_t = 37)]
        points: usize,
    },
    /// Uncorrelated-register QFI against the single-qubit laws
    Uncorrelated {
        /// Orientation draws
        #[arg(long, default_value_t = 20)]
        samples: usize,
    },
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                std::process::exit(0);
            }
            let rendered = e.to_string();
            eprintln!("{}", rendered.lines().next().unwrap_or("invalid arguments"));
            std::process::exit(2);
        }
    };
    if let Err(err) = run(cli) {
        eprintln!("error: {err}");
        std::process::exit(err.exit_code());
    }
}

fn run(cli: Cli) -> Result<()> {
    let g = cli.globals;
    if let Some(threads) = g.threads {
        if threads == 0 {
            return Err(Error::Config("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| Error::Config(format!("cannot configure thread pool: {e}")))?;
    }
    let file_patch = g
        .config
        .as_deref()
        .map(RunConfigPatch::from_file)
        .transpose()?;
    let flags = RunConfigPatch {
        n_qubits: g.n,
        eps_a1: g.eps_a1,
        eps_t1: g.eps_t1,
        gamma_ratio: g.gamma_ratio,
        seed: g.seed,
        noise_sigma: g.noise_sigma,
        output_format: g.format,
        output_path: g.out,
    };
    let cfg = RunConfig::resolve(file_patch, flags)?;
    let theta0 = g.theta0.unwrap_or(FRAC_PI_2);
    let phi0 = g.phi0.unwrap_or(0.0);
    let cache_dir = g.ut_cache.as_deref();

    let content = match cli.command {
        Command::QfiSingle {
            eps,
            dtheta0,
            dphi0,
        } => cmd_qfi_single(&cfg, theta0, phi0, eps.unwrap_or(cfg.eps_t1), dtheta0, dphi0)?,
        Command::QfiStr => cmd_qfi_str(&cfg, theta0, phi0)?,
        Command::Qst { optimizer } => cmd_qst(&cfg, theta0, phi0, &optimizer, cache_dir)?,
        Command::Table2 { optimizer } => cmd_table2(&cfg, &optimizer, cache_dir)?,
        Command::Fig2 { points } => cmd_fig2(&cfg, points)?,
        Command::Scaling {
            axis,
            n_min,
            n_max,
            samples,
            eps_values,
        } => cmd_scaling(&cfg, axis, n_min, n_max, samples, &eps_values)?,
        Command::OptimizeUt { optimizer } => cmd_optimize_ut(&cfg, &optimizer, cache_dir)?,
        Command::RFactor { points } => cmd_r_factor(&cfg, points)?,
        Command::Uncorrelated { samples } => cmd_uncorrelated(&cfg, samples)?,
    };
    emit(cfg.output_path.as_deref(), &content)
}

fn render<T: Serialize>(cfg: &RunConfig, data: &Vec<T>, csv: CsvDoc) -> Result<String> {
    match cfg.output_format {
        OutputFormat::Json => to_json_string(&Report::new(cfg, data)),
        OutputFormat::Csv => Ok(csv.to_csv_string()),
    }
}

#[derive(Serialize)]
struct QfiSingleRow {
    theta0: f64,
    phi0: f64,
    dtheta0: f64,
    dphi0: f64,
    eps: f64,
    qfi_theta: f64,
    qfi_phi: f64,
    qfi_dual: f64,
    cr_bound_theta: Option<f64>,
    cr_bound_phi: Option<f64>,
    cr_bound_dual: Option<f64>,
}

/// Single-measurement Cramer-Rao bound, absent when the information is zero.
fn cr_opt(f: f64) -> Result<Option<f64>> {
    if f > 0.0 {
        cramer_rao_bound(f, 1).map(Some)
    } else {
        Ok(None)
    }
}

fn opt_cell(v: Option<f64>) -> String {
    v.map(fmt_float).unwrap_or_default()
}

fn cmd_qfi_single(
    cfg: &RunConfig,
    theta0: f64,
    phi0: f64,
    eps: f64,
    dtheta0: f64,
    dphi0: f64,
) -> Result<String> {
    let angles = BlochAngles::new(theta0, phi0)?;
    if !(0.0..=1.0).contains(&eps) || !eps.is_finite() {
        return Err(Error::InvalidPurity {
            detail: format!("single-qubit purity factor must lie in [0, 1], got {eps}"),
        });
    }
    if !dtheta0.is_finite() || !dphi0.is_finite() {
        return Err(Error::InvalidArgument(
            "measurement biases must be finite".into(),
        ));
    }
    let qfi_theta = biased_qfi_theta(angles.theta0(), angles.phi0(), dtheta0, dphi0, eps);
    let qfi_phi = biased_qfi_phi(angles.theta0(), angles.phi0(), dphi0, eps);
    let qfi_dual = dual_qfi(qfi_theta, qfi_phi);
    let row = QfiSingleRow {
        theta0: angles.theta0(),
        phi0: angles.phi0(),
        dtheta0,
        dphi0,
        eps,
        qfi_theta,
        qfi_phi,
        qfi_dual,
        cr_bound_theta: cr_opt(qfi_theta)?,
        cr_bound_phi: cr_opt(qfi_phi)?,
        cr_bound_dual: cr_opt(qfi_dual)?,
    };
    let csv = CsvDoc {
        headers: [
            "theta0",
            "phi0",
            "dtheta0",
            "dphi0",
            "eps",
            "qfi_theta",
            "qfi_phi",
            "qfi_dual",
            "cr_bound_theta",
            "cr_bound_phi",
            "cr_bound_dual",
        ]
        .map(str::to_string)
        .to_vec(),
        rows: vec![vec![
            fmt_float(row.theta0),
            fmt_float(row.phi0),
            fmt_float(row.dtheta0),
            fmt_float(row.dphi0),
            fmt_float(row.eps),
            fmt_float(row.qfi_theta),
            fmt_float(row.qfi_phi),
            fmt_float(row.qfi_dual),
            opt_cell(row.cr_bound_theta),
            opt_cell(row.cr_bound_phi),
            opt_cell(row.cr_bound_dual),
        ]],
    };
    render(cfg, &vec![row], csv)
}

#[derive(Serialize)]
struct QfiStrRow {
    family: String,
    theta0: f64,
    phi0: f64,
    qfi_theta: f64,
    qfi_phi: f64,
    /// Azimuthal fraction F_phi / F_theta of the family's information.
    r_factor: f64,
    qfi_dual: f64,
}

fn cmd_qfi_str(cfg: &RunConfig, theta0: f64, phi0: f64) -> Result<String> {
    let config = cfg.str_config()?;
    let angles = BlochAngles::new(theta0, phi0)?;
    let families = [
        (
            "correlated",
            StateFamily::StrCorrelated { config, angles },
        ),
        (
            "uncorrelated",
            StateFamily::StrUncorrelated { config, angles },
        ),
    ];
    let mut rows = Vec::with_capacity(2);
    for (name, family) in families {
        let qfi_theta = qfi_max(&family, Param::Theta)?.value();
        let qfi_phi = qfi_max(&family, Param::Phi)?.value();
        rows.push(QfiStrRow {
            family: name.to_string(),
            theta0: angles.theta0(),
            phi0: angles.phi0(),
            qfi_theta,
            qfi_phi,
            r_factor: if qfi_theta > 0.0 { qfi_phi / qfi_theta } else { 0.0 },
            qfi_dual: dual_qfi(qfi_theta, qfi_phi),
        });
    }
    let csv = CsvDoc {
        headers: [
            "family",
            "theta0",
            "phi0",
            "qfi_theta",
            "qfi_phi",
            "r_factor",
            "qfi_dual",
        ]
        .map(str::to_string)
        .to_vec(),
        rows: rows
            .iter()
            .map(|r| {
                vec![
                    r.family.clone(),
                    fmt_float(r.theta0),
                    fmt_float(r.phi0),
                    fmt_float(r.qfi_theta),
                    fmt_float(r.qfi_phi),
                    fmt_float(r.r_factor),
                    fmt_float(r.qfi_dual),
                ]
            })
            .collect(),
    };
    render(cfg, &rows, csv)
}

#[derive(Serialize)]
struct UtSummary {
    parameters: Vec<f64>,
    condition_number: f64,
    constraint_norm: f64,
    fitness: f64,
}

impl UtSummary {
    fn of(ut: &TomographyUnitary) -> Self {
        let q = ut.quality();
        UtSummary {
            parameters: ut.parameters().to_vec(),
            condition_number: q.condition_number,
            constraint_norm: q.constraint_norm,
            fitness: q.fitness,
        }
    }
}

#[derive(Serialize)]
struct QstRow {
    theta0: f64,
    phi0: f64,
    noise_sigma: f64,
    bloch_x: f64,
    bloch_y: f64,
    bloch_z: f64,
    norm: f64,
    theta0_estimate: f64,
    phi0_estimate: f64,
    correlation: Option<f64>,
    residual: f64,
    indeterminate: bool,
    ut: UtSummary,
}

fn cmd_qst(
    cfg: &RunConfig,
    theta0: f64,
    phi0: f64,
    optimizer: &OptimizerArgs,
    cache_dir: Option<&Path>,
) -> Result<String> {
    let config = cfg.str_config()?;
    let angles = BlochAngles::new(theta0, phi0)?;
    let ut = load_or_optimize(cfg, optimizer, cache_dir)?;
    let rho = str_target_rotated(&config, &angles)?;
    let qst = str_qst_noisy(&rho, &ut, cfg.noise_sigma, cfg.seed)?;
    let [bx, by, bz] = qst.bloch();
    let row = QstRow {
        theta0: angles.theta0(),
        phi0: angles.phi0(),
        noise_sigma: cfg.noise_sigma,
        bloch_x: bx,
        bloch_y: by,
        bloch_z: bz,
        norm: qst.norm(),
        theta0_estimate: qst.angles().theta0(),
        phi0_estimate: qst.angles().phi0(),
        correlation: qst.correlation(),
        residual: qst.residual(),
        indeterminate: qst.is_indeterminate(),
        ut: UtSummary::of(&ut),
    };
    let mut headers: Vec<String> = [
        "theta0",
        "phi0",
        "noise_sigma",
        "bloch_x",
        "bloch_y",
        "bloch_z",
        "norm",
        "theta0_estimate",
        "phi0_estimate",
        "correlation",
        "residual",
        "indeterminate",
        "ut_condition_number",
        "ut_constraint_norm",
    ]
    .map(str::to_string)
    .to_vec();
    let mut cells = vec![
        fmt_float(row.theta0),
        fmt_float(row.phi0),
        fmt_float(row.noise_sigma),
        fmt_float(row.bloch_x),
        fmt_float(row.bloch_y),
        fmt_float(row.bloch_z),
        fmt_float(row.norm),
        fmt_float(row.theta0_estimate),
        fmt_float(row.phi0_estimate),
        opt_cell(row.correlation),
        fmt_float(row.residual),
        row.indeterminate.to_string(),
        fmt_float(row.ut.condition_number),
        fmt_float(row.ut.constraint_norm),
    ];
    for (i, p) in row.ut.parameters.iter().enumerate() {
        headers.push(format!("ut_p{i:02}"));
        cells.push(fmt_float(*p));
    }
    let csv = CsvDoc {
        headers,
        rows: vec![cells],
    };
    render(cfg, &vec![row], csv)
}

fn cmd_table2(
    cfg: &RunConfig,
    optimizer: &OptimizerArgs,
    cache_dir: Option<&Path>,
) -> Result<String> {
    let config = cfg.str_config()?;
    let ut = load_or_optimize(cfg, optimizer, cache_dir)?;
    let rows = table2_pipeline(&config, cfg.gamma_ratio, &ut, cfg.noise_sigma, cfg.seed)?;
    let csv = table2_csv(&rows);
    render(cfg, &rows, csv)
}

fn cmd_fig2(cfg: &RunConfig, points: usize) -> Result<String> {
    let dthetas = symmetric_linspace(FRAC_PI_2, points)?;
    let epss = linspace(0.0, 1.0, points)?;
    let report = fig2_surface(&dthetas, &epss)?;
    let csv = sweep_csv(&report);
    render(cfg, &vec![report], csv)
}

fn cmd_scaling(
    cfg: &RunConfig,
    axis: ScalingAxis,
    n_min: usize,
    n_max: usize,
    samples: usize,
    eps_values: &[f64],
) -> Result<String> {
    let report = match axis {
        ScalingAxis::N => {
            if n_min < 2 || n_max < n_min {
                return Err(Error::Config(format!(
                    "scaling range needs 2 <= n-min <= n-max, got {n_min}..{n_max}"
                )));
            }
            let n_range: Vec<usize> = (n_min..=n_max).collect();
            scaling_in_n(cfg.eps_a1, &n_range, samples, cfg.seed)?
        }
        ScalingAxis::Eps => scaling_in_eps(cfg.n_qubits, eps_values)?,
    };
    let csv = sweep_csv(&report);
    render(cfg, &vec![report], csv)
}

fn cmd_r_factor(cfg: &RunConfig, points: usize) -> Result<String> {
    if points < 2 {
        return Err(Error::Config(format!(
            "orientation grid needs at least 2 points per axis, got {points}"
        )));
    }
    let theta0s = linspace(0.0, std::f64::consts::PI, points)?;
    let phi0s = linspace(0.0, std::f64::consts::TAU, points)?;
    let report = r_factor_map(cfg.n_qubits, &theta0s, &phi0s, cfg.eps_a1)?;
    let csv = sweep_csv(&report);
    render(cfg, &vec![report], csv)
}

fn cmd_uncorrelated(cfg: &RunConfig, samples: usize) -> Result<String> {
    let config = cfg.str_config()?;
    let report = uncorrelated_comparison(&config, samples, cfg.seed)?;
    let csv = sweep_csv(&report);
    render(cfg, &vec![report], csv)
}

#[derive(Serialize)]
struct OptimizeUtRow {
    n_qubits: usize,
    seed: u64,
    population: usize,
    generations: usize,
    cache_path: Option<String>,
    #[serde(flatten)]
    ut: UtSummary,
}

fn cmd_optimize_ut(
    cfg: &RunConfig,
    optimizer: &OptimizerArgs,
    cache_dir: Option<&Path>,
) -> Result<String> {
    let ut = load_or_optimize(cfg, optimizer, cache_dir)?;
    let opt = optimizer_config(cfg, optimizer);
    let cache_path = cache_dir.map(|d| cache_file(d, cfg.n_qubits, &opt));
    let row = OptimizeUtRow {
        n_qubits: cfg.n_qubits,
        seed: cfg.seed,
        population: optimizer.population,
        generations: optimizer.generations,
        cache_path: cache_path
            .as_deref()
            .map(|p| p.display().to_string()),
        ut: UtSummary::of(&ut),
    };
    let mut headers: Vec<String> = [
        "n_qubits",
        "seed",
        "population",
        "generations",
        "condition_number",
        "constraint_norm",
        "fitness",
    ]
    .map(str::to_string)
    .to_vec();
    let mut cells = vec![
        row.n_qubits.to_string(),
        row.seed.to_string(),
        row.population.to_string(),
        row.generations.to_string(),
        fmt_float(row.ut.condition_number),
        fmt_float(row.ut.constraint_norm),
        fmt_float(row.ut.fitness),
    ];
    for (i, p) in row.ut.parameters.iter().enumerate() {
        headers.push(format!("ut_p{i:02}"));
        cells.push(fmt_float(*p));
    }
    let csv = CsvDoc {
        headers,
        rows: vec![cells],
    };
    render(cfg, &vec![row], csv)
}

fn optimizer_config(cfg: &RunConfig, optimizer: &OptimizerArgs) -> OptimizerConfig {
    OptimizerConfig {
        population: optimizer.population,
        generations: optimizer.generations,
        seed: cfg.seed,
        ..OptimizerConfig::default()
    }
}

fn optimizer_hash(opt: &OptimizerConfig) -> u64 {
    let mut h = DefaultHasher::new();
    opt.population.hash(&mut h);
    opt.generations.hash(&mut h);
    opt.seed.hash(&mut h);
    opt.weights.0.to_bits().hash(&mut h);
    opt.weights.1.to_bits().hash(&mut h);
    h.finish()
}

fn cache_file(dir: &Path, n_qubits: usize, opt: &OptimizerConfig) -> PathBuf {
    dir.join(format!(
        "ut_n{}_seed{}_{:016x}.json",
        n_qubits,
        opt.seed,
        optimizer_hash(opt)
    ))
}

/// Cached optimizer output: the parameter vector is enough to rebuild the
/// unitary; quality numbers are stored for inspection only.
#[derive(Serialize, Deserialize)]
struct UtCacheEntry {
    n_qubits: usize,
    seed: u64,
    population: usize,
    generations: usize,
    parameters: Vec<f64>,
    condition_number: f64,
    constraint_norm: f64,
}

/// Loads the cached readout unitary for this (register size, seed, budget)
/// key, or optimizes one and caches it when a cache directory is set.
///
/// The optimizer's trajectory is invariant under uniform scaling of the
/// constraint matrix, so the cache key does not involve the purity factors;
/// the rebuilt unitary adopts the current configuration's scale.
fn load_or_optimize(
    cfg: &RunConfig,
    optimizer: &OptimizerArgs,
    cache_dir: Option<&Path>,
) -> Result<TomographyUnitary> {
    let config = cfg.str_config()?;
    let opt = optimizer_config(cfg, optimizer);
    let path = cache_dir.map(|d| cache_file(d, cfg.n_qubits, &opt));
    if let Some(path) = path.as_deref() {
        if path.exists() {
            let text = std::fs::read_to_string(path)?;
            let entry: UtCacheEntry = serde_json::from_str(&text)
                .map_err(|e| Error::Config(format!("cache file {}: {e}", path.display())))?;
            if entry.n_qubits != cfg.n_qubits {
                return Err(Error::Config(format!(
                    "cache file {} was built for n = {}, current run has n = {}",
                    path.display(),
                    entry.n_qubits,
                    cfg.n_qubits
                )));
            }
            return TomographyUnitary::from_parameters(&config, &entry.parameters);
        }
    }
    let ut = optimize_ut(&config, &opt)?;
    if let Some(path) = path.as_deref() {
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir)?;
        }
        let q = ut.quality();
        let entry = UtCacheEntry {
            n_qubits: cfg.n_qubits,
            seed: opt.seed,
            population: opt.population,
            generations: opt.generations,
            parameters: ut.parameters().to_vec(),
            condition_number: q.condition_number,
            constraint_norm: q.constraint_norm,
        };
        std::fs::write(path, to_json_string(&entry)?)?;
    }
    Ok(ut)
}

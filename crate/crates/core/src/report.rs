//! Run configuration and deterministic output serialization.
//!
//! Every command run resolves one [`RunConfig`] (defaults, then an optional
//! JSON config file, then command-line overrides), wraps its results in a
//! [`Report`] envelope, and serializes with 17 significant digits so that
//! repeated runs with identical inputs are byte identical.

use std::fmt;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::states::StrConfig;
use crate::sweeps::{SweepReport, Table2Row};

/// Default register size.
pub const DEFAULT_N_QUBITS: usize = 4;

/// Default ancilla purity factor.
pub const DEFAULT_EPS_A1: f64 = 1e-3;

/// Default RNG seed shared by all commands.
pub const DEFAULT_SEED: u64 = 42;

/// Default gyromagnetic ratio between ancilla and target species.
pub fn default_gamma_ratio() -> f64 {
    6.93 / 3.0_f64.sqrt()
}

/// Output serialization format.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum,
)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Json,
    Csv,
}

impl fmt::Display for OutputFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OutputFormat::Json => write!(f, "json"),
            OutputFormat::Csv => write!(f, "csv"),
        }
    }
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(OutputFormat::Json),
            "csv" => Ok(OutputFormat::Csv),
            other => Err(Error::Config(format!(
                "unknown output format {other:?}, expected json or csv"
            ))),
        }
    }
}

/// Fully resolved run parameters shared by all commands.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub n_qubits: usize,
    pub eps_a1: f64,
    pub eps_t1: f64,
    pub gamma_ratio: f64,
    pub seed: u64,
    pub noise_sigma: f64,
    pub output_format: OutputFormat,
    pub output_path: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let gamma_ratio = default_gamma_ratio();
        Self {
            n_qubits: DEFAULT_N_QUBITS,
            eps_a1: DEFAULT_EPS_A1,
            eps_t1: DEFAULT_EPS_A1 / gamma_ratio,
            gamma_ratio,
            seed: DEFAULT_SEED,
            noise_sigma: 0.0,
            output_format: OutputFormat::Json,
            output_path: None,
        }
    }
}

/// Partial configuration: a JSON config file or a set of command-line
/// overrides. Unset fields fall through to the previous layer.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfigPatch {
    pub n_qubits: Option<usize>,
    pub eps_a1: Option<f64>,
    pub eps_t1: Option<f64>,
    pub gamma_ratio: Option<f64>,
    pub seed: Option<u64>,
    pub noise_sigma: Option<f64>,
    pub output_format: Option<OutputFormat>,
    pub output_path: Option<PathBuf>,
}

impl RunConfigPatch {
    /// Parses a JSON config file. Unknown keys are rejected so typos fail
    /// loudly instead of silently running with defaults.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            Error::Config(format!("cannot read config file {}: {e}", path.display()))
        })?;
        serde_json::from_str(&text)
            .map_err(|e| Error::Config(format!("config file {}: {e}", path.display())))
    }
}

impl RunConfig {
    /// Resolves the effective configuration: defaults, then the config file,
    /// then command-line flags. The target purity defaults to
    /// eps_a1 / gamma_ratio unless some layer set it explicitly.
    pub fn resolve(file: Option<RunConfigPatch>, flags: RunConfigPatch) -> Result<Self> {
        let mut cfg = RunConfig::default();
        let mut eps_t1_explicit = false;
        for patch in file.into_iter().chain(std::iter::once(flags)) {
            if let Some(n) = patch.n_qubits {
                cfg.n_qubits = n;
            }
            if let Some(e) = patch.eps_a1 {
                cfg.eps_a1 = e;
            }
            if let Some(e) = patch.eps_t1 {
                cfg.eps_t1 = e;
                eps_t1_explicit = true;
            }
            if let Some(g) = patch.gamma_ratio {
                cfg.gamma_ratio = g;
            }
            if let Some(s) = patch.seed {
                cfg.seed = s;
            }
            if let Some(s) = patch.noise_sigma {
                cfg.noise_sigma = s;
            }
            if let Some(f) = patch.output_format {
                cfg.output_format = f;
            }
            if let Some(p) = patch.output_path {
                cfg.output_path = Some(p);
            }
        }
        if !cfg.gamma_ratio.is_finite() || cfg.gamma_ratio <= 0.0 {
            return Err(Error::Config(format!(
                "gamma_ratio must be positive and finite, got {}",
                cfg.gamma_ratio
            )));
        }
        if !eps_t1_explicit {
            cfg.eps_t1 = cfg.eps_a1 / cfg.gamma_ratio;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<()> {
        if self.n_qubits < 2 {
            return Err(Error::Config(format!(
                "register needs a target and at least one ancilla, got n_qubits = {}",
                self.n_qubits
            )));
        }
        for (name, value) in [
            ("eps_a1", self.eps_a1),
            ("eps_t1", self.eps_t1),
            ("noise_sigma", self.noise_sigma),
        ] {
            if !value.is_finite() || value < 0.0 {
                return Err(Error::Config(format!(
                    "{name} must be finite and nonnegative, got {value}"
                )));
            }
        }
        Ok(())
    }

    /// Register geometry for this configuration.
    pub fn str_config(&self) -> Result<StrConfig> {
        StrConfig::new(self.n_qubits, self.eps_t1, self.eps_a1)
    }
}

/// Report metadata: library version, the resolved configuration, and the
/// seed that drove every random choice in the run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Meta {
    pub version: String,
    pub config: RunConfig,
    pub seed: u64,
}

/// Envelope around any command output.
#[derive(Debug, Clone, Serialize)]
pub struct Report<T: Serialize> {
    pub meta: Meta,
    pub data: T,
}

impl<T: Serialize> Report<T> {
    pub fn new(config: &RunConfig, data: T) -> Self {
        Report {
            meta: Meta {
                version: env!("CARGO_PKG_VERSION").to_string(),
                config: config.clone(),
                seed: config.seed,
            },
            data,
        }
    }
}

/// Formats a float with 17 significant digits, enough to round-trip f64.
pub fn fmt_float(value: f64) -> String {
    format!("{value:.16e}")
}

fn fmt_opt_float(value: Option<f64>) -> String {
    value.map(fmt_float).unwrap_or_default()
}

/// JSON formatter that writes every float with 17 significant digits.
struct SciFormatter;

impl serde_json::ser::Formatter for SciFormatter {
    fn write_f64<W>(&mut self, writer: &mut W, value: f64) -> std::io::Result<()>
    where
        W: ?Sized + std::io::Write,
    {
        write!(writer, "{value:.16e}")
    }

    fn write_f32<W>(&mut self, writer: &mut W, value: f32) -> std::io::Result<()>
    where
        W: ?Sized + std::io::Write,
    {
        write!(writer, "{value:.16e}")
    }
}

/// Serializes any value to JSON with fixed-width float formatting and a
/// trailing newline. Field order follows declaration order, so equal inputs
/// produce byte-identical output.
pub fn to_json_string<T: Serialize>(value: &T) -> Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, SciFormatter);
    value.serialize(&mut ser)?;
    buf.push(b'\n');
    String::from_utf8(buf)
        .map_err(|e| Error::Config(format!("serialized output is not UTF-8: {e}")))
}

/// A rectangular table ready for CSV emission. Cells are preformatted; the
/// writer only joins them, so no quoting rules apply (all content is
/// numeric or identifier-like).
#[derive(Debug, Clone)]
pub struct CsvDoc {
    pub headers: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl CsvDoc {
    pub fn to_csv_string(&self) -> String {
        let mut out = String::new();
        out.push_str(&self.headers.join(","));
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}

/// Tabulates a sweep: one column per input label, then per value label,
/// point rows in sweep order.
pub fn sweep_csv(report: &SweepReport) -> CsvDoc {
    let headers = report
        .input_labels
        .iter()
        .chain(report.value_labels.iter())
        .cloned()
        .collect();
    let rows = report
        .points
        .iter()
        .map(|p| {
            p.input
                .iter()
                .chain(p.values.iter())
                .map(|&v| fmt_float(v))
                .collect()
        })
        .collect();
    CsvDoc { headers, rows }
}

/// Tabulates the reference-table rows; absent amplifications become empty
/// cells.
pub fn table2_csv(rows: &[Table2Row]) -> CsvDoc {
    let headers = [
        "state_label",
        "theta0",
        "phi0",
        "correlation",
        "qst_qfi_uncorrelated",
        "qst_qfi_correlated",
        "qst_qfi_correlated_reference",
        "qst_amplification",
        "sld_qfi_uncorrelated",
        "sld_qfi_correlated",
        "sld_amplification",
        "comparability",
    ]
    .map(str::to_string)
    .to_vec();
    let body = rows
        .iter()
        .map(|r| {
            vec![
                r.state_label.clone(),
                fmt_float(r.theta0),
                fmt_float(r.phi0),
                fmt_float(r.correlation),
                fmt_float(r.qst_qfi_uncorrelated),
                fmt_float(r.qst_qfi_correlated),
                fmt_float(r.qst_qfi_correlated_reference),
                fmt_opt_float(r.qst_amplification),
                fmt_float(r.sld_qfi_uncorrelated),
                fmt_float(r.sld_qfi_correlated),
                fmt_opt_float(r.sld_amplification),
                r.comparability.clone(),
            ]
        })
        .collect();
    CsvDoc {
        headers,
        rows: body,
    }
}

/// Writes the finished buffer to the output path, or to stdout when no path
/// is set. The buffer is complete before the file is created, so failed
/// runs never leave partial output behind.
pub fn emit(path: Option<&Path>, content: &str) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, content).map_err(Error::from),
        None => std::io::stdout()
            .write_all(content.as_bytes())
            .map_err(Error::from),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_tie_target_purity_to_the_ratio() {
        let cfg = RunConfig::default();
        assert_eq!(cfg.n_qubits, 4);
        assert_eq!(cfg.eps_a1, 1e-3);
        assert_eq!(cfg.eps_t1, 1e-3 / default_gamma_ratio());
        assert_eq!(cfg.seed, 42);
        assert_eq!(cfg.output_format, OutputFormat::Json);
    }

    #[test]
    fn flag_layer_overrides_file_layer() {
        let file = RunConfigPatch {
            n_qubits: Some(6),
            eps_a1: Some(2e-3),
            seed: Some(7),
            ..Default::default()
        };
        let flags = RunConfigPatch {
            seed: Some(9),
            ..Default::default()
        };
        let cfg = RunConfig::resolve(Some(file), flags).unwrap();
        assert_eq!(cfg.n_qubits, 6);
        assert_eq!(cfg.seed, 9);
        // eps_t1 is re-derived from the overridden eps_a1.
        assert_eq!(cfg.eps_t1, 2e-3 / default_gamma_ratio());
    }

    #[test]
    fn explicit_target_purity_survives_rederivation() {
        let flags = RunConfigPatch {
            eps_a1: Some(4e-3),
            eps_t1: Some(1e-3),
            ..Default::default()
        };
        let cfg = RunConfig::resolve(None, flags).unwrap();
        assert_eq!(cfg.eps_t1, 1e-3);
    }

    #[test]
    fn bad_values_are_configuration_errors() {
        let bad = RunConfigPatch {
            gamma_ratio: Some(0.0),
            ..Default::default()
        };
        let err = RunConfig::resolve(None, bad).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        let bad = RunConfigPatch {
            noise_sigma: Some(-0.1),
            ..Default::default()
        };
        assert_eq!(
            RunConfig::resolve(None, bad).unwrap_err().exit_code(),
            2
        );
        let bad = RunConfigPatch {
            n_qubits: Some(1),
            ..Default::default()
        };
        assert_eq!(
            RunConfig::resolve(None, bad).unwrap_err().exit_code(),
            2
        );
    }

    #[test]
    fn json_floats_carry_seventeen_digits() {
        #[derive(Serialize)]
        struct Row {
            x: f64,
            tag: String,
            k: u64,
        }
        let s = to_json_string(&Row {
            x: 0.1,
            tag: "a".into(),
            k: 3,
        })
        .unwrap();
        assert_eq!(s, "{\"x\":1.0000000000000001e-1,\"tag\":\"a\",\"k\":3}\n");
        assert_eq!(fmt_float(1.0), "1.0000000000000000e0");
        assert_eq!(fmt_float(-2.5e-3), "-2.5000000000000001e-3");
    }

    #[test]
    fn csv_joins_preformatted_cells() {
        let doc = CsvDoc {
            headers: vec!["a".into(), "b".into()],
            rows: vec![vec!["1".into(), "2".into()]],
        };
        assert_eq!(doc.to_csv_string(), "a,b\n1,2\n");
    }

    #[test]
    fn config_file_round_trip_and_unknown_keys() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cfg.json");
        std::fs::write(&path, r#"{"n_qubits": 5, "seed": 11}"#).unwrap();
        let patch = RunConfigPatch::from_file(&path).unwrap();
        assert_eq!(patch.n_qubits, Some(5));
        assert_eq!(patch.seed, Some(11));
        std::fs::write(&path, r#"{"n_qubit": 5}"#).unwrap();
        let err = RunConfigPatch::from_file(&path).unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }
}

//! Quantum Fisher information and single-shot tomography for star-topology
//! spin registers.
//!
//! The library models a central target qubit coupled to N-1 equivalent
//! ancillas near the maximally mixed state, builds symmetric logarithmic
//! derivatives and maximum-information observables for the target's polar and
//! azimuthal angles, evaluates biased closed forms, and reconstructs the
//! target orientation from a single-shot quadrature readout of the ancillas.
//!
//! ```
//! use starqfi::fisher::{qfi_max, Param};
//! use starqfi::states::{BlochAngles, StateFamily};
//!
//! # fn main() -> starqfi::error::Result<()> {
//! let angles = BlochAngles::new(std::f64::consts::FRAC_PI_2, 0.0)?;
//! let family = StateFamily::SingleQubit { angles, eps: 0.2 };
//! let f_theta = qfi_max(&family, Param::Theta)?.value();
//! assert!((f_theta - 0.04).abs() < 1e-12);
//! # Ok(())
//! # }
//! ```

pub mod error;
pub mod fisher;
pub mod operators;
pub mod report;
pub mod states;
pub mod sweeps;
pub mod tomography;

pub use error::{Error, Result};
pub use report::{OutputFormat, Report, RunConfig, RunConfigPatch};
pub use fisher::{FisherResult, GroupingMode, Param, SldObservable};
pub use operators::{Axis, CMatrix, DensityMatrix, Observable};
pub use states::{BlochAngles, StateFamily, StrConfig};
pub use sweeps::{FitSummary, SweepAxis, SweepPoint, SweepReport, Table2Row};
pub use tomography::{
    ConstraintSystem, OptimizerConfig, QstResult, TomographyUnitary, UtQuality,
};

//! Dual price iteration for network flow control with bounded staleness,
//! certification of its descent inequalities, and the spectral analysis of the
//! quadratic form that shows why a naive version of those inequalities fails.
//!
//! * [`model`] describes problem instances.
//! * [`dual`] evaluates the dual function and solves instances independently.
//! * [`engine`] runs the synchronous and asynchronous price iteration.
//! * [`certify`] checks recorded traces against the descent inequalities.
//! * [`spectra`] covers the arrowhead Hessian and its eigenvalues.

pub mod certify;
pub mod dual;
pub mod engine;
pub mod linalg;
pub mod model;
pub mod spectra;

pub use certify::{CertReport, Constants, FitOutcome, GammaMax, Verdict};
pub use dual::{OracleSolution, PriceVector, RateVector};
pub use engine::{DelayModel, EngineConfig, Trace, TraceRow};
pub use model::{NetworkSpec, ValidatedNetwork};
pub use spectra::{ArrowheadHessian, SpectrumResult};

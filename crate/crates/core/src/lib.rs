//! Simulation of Ink Drop Spread pattern learning on memristor crossbars.
//!
//! Training samples are "dropped" onto one crossbar per input by driving a
//! column with a short negative pulse while grounding a row; coupling
//! resistors between neighbouring wires spread the current so nearby
//! memristances fall too. A behavioural readout circuit then extracts the
//! narrow path (ink balance row) and spread (above-threshold count) of any
//! column, and [`alm::infer`] combines them into an output estimate.
//!
//! Module map:
//!
//! * [`device`]: linear-drift memristor
//! * [`plane`]: crossbar, quantizers and nodal solver
//! * [`spreading`]: ink dropping
//! * [`readout`]: narrow path / spread circuit
//! * [`alm`]: inference and evaluation
//! * [`oracle`]: independent reference implementations (feature `oracle`)
//! * [`persist`], [`dataset`], [`config`], [`experiment`]: I/O and runs

pub mod alm;
pub mod config;
pub mod dataset;
pub mod device;
pub mod error;
pub mod exec;
pub mod experiment;
#[cfg(any(test, feature = "oracle"))]
pub mod oracle;
pub mod persist;
pub mod plane;
pub mod readout;
pub mod spreading;

pub use alm::{infer, InferenceBreakdown, Model};
pub use device::{DeviceParams, DeviceState};
pub use error::{Axis, Error, Result};
pub use exec::Exec;
pub use plane::{DrivePattern, Plane, Quantizer};
pub use readout::{ReadoutConfig, ReadoutResult};
pub use spreading::{PulseSpec, Sample};

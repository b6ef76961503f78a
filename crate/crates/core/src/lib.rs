//! Numerical transport of currents along flows of Lipschitz vector fields.

pub mod error;
pub mod continuity;
pub mod currents;
pub mod exterior;
pub mod flow;
pub mod forms;
pub mod numeric;
pub mod transport;

pub use error::{Error, Result};

pub mod analytic;
pub mod baselines;
pub mod error;
pub mod frame;
pub mod mcs;
pub mod numerics;
pub mod report;
pub mod scenario;
pub mod simulator;
pub mod sinr;

pub use error::{Error, Result};
pub use frame::Frame;

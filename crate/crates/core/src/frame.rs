use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Slot structure shared by the analytic models and the simulator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Frame {
    /// Resource blocks per slot, `N`.
    pub n_rb: usize,
    /// Slot duration in seconds.
    pub t_tti: f64,
    /// PFS averaging window in slots.
    pub window: usize,
}

impl Frame {
    pub fn new(n_rb: usize, t_tti: f64, window: usize) -> Result<Self> {
        let frame = Self {
            n_rb,
            t_tti,
            window,
        };
        frame.validate()?;
        Ok(frame)
    }

    /// 1 ms slots and a 1000-slot window.
    pub fn lte(n_rb: usize) -> Self {
        Self {
            n_rb: n_rb.max(1),
            t_tti: 1e-3,
            window: 1000,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_rb == 0 {
            return Err(Error::Validation(
                "frame needs at least one resource block".into(),
            ));
        }
        if !(self.t_tti.is_finite() && self.t_tti > 0.0) {
            return Err(Error::Validation(format!(
                "slot duration must be finite and > 0, got {}",
                self.t_tti
            )));
        }
        if self.window == 0 {
            return Err(Error::Validation("window must be at least one slot".into()));
        }
        Ok(())
    }
}

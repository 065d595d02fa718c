//! Route geometry: a straight arterial from the origin to `length_m`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Route {
    /// Position of the route end, measured from the origin.
    pub length_m: f64,
    pub speed_limit_mps: f64,
    /// Distance step of the planning grid and of all trajectory records.
    pub ds_m: f64,
}

impl Route {
    pub fn validate(&self) -> Result<()> {
        if !(self.length_m > 0.0) {
            return Err(Error::Validation("route length must be positive".into()));
        }
        if !(self.speed_limit_mps > 0.0) {
            return Err(Error::Validation("speed limit must be positive".into()));
        }
        if !(self.ds_m > 0.0) {
            return Err(Error::Validation("distance step must be positive".into()));
        }
        if !on_grid(self.length_m, self.ds_m) {
            return Err(Error::Validation(format!(
                "route length {} m is not a multiple of ds {} m",
                self.length_m, self.ds_m
            )));
        }
        Ok(())
    }
}

/// True when `position` is a multiple of `ds` within 1e-6.
pub fn on_grid(position: f64, ds: f64) -> bool {
    let steps = position / ds;
    (steps - steps.round()).abs() * ds <= 1e-6
}

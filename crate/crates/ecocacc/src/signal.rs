//! Pre-timed traffic signals with periodic effective green/red phases.
//!
//! A signal is green on `[offset + k*cycle, offset + k*cycle + green)` for
//! every integer `k`; the yellow interval is absorbed into the effective
//! durations. Phase boundaries are half-open: the instant the phase switches
//! belongs to the new phase.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Green,
    Red,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrafficSignal {
    /// Distance of the stop line from the route origin.
    pub position_m: f64,
    /// Effective green duration.
    pub green_s: f64,
    /// Effective red duration.
    pub red_s: f64,
    /// Time at which the first green begins.
    pub offset_s: f64,
}

/// One green interval `[start_s, end_s)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GreenWindow {
    pub start_s: f64,
    pub end_s: f64,
}

impl TrafficSignal {
    pub fn new(position_m: f64, green_s: f64, red_s: f64, offset_s: f64) -> Result<Self> {
        let sig = TrafficSignal {
            position_m,
            green_s,
            red_s,
            offset_s,
        };
        sig.validate()?;
        Ok(sig)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.green_s > 0.0) || !(self.red_s > 0.0) {
            return Err(Error::Validation(format!(
                "signal at {} m: green ({}) and red ({}) durations must be positive",
                self.position_m, self.green_s, self.red_s
            )));
        }
        if !(self.offset_s >= 0.0) {
            return Err(Error::Validation(format!(
                "signal at {} m: offset must be non-negative",
                self.position_m
            )));
        }
        if !self.position_m.is_finite() {
            return Err(Error::Validation("signal position must be finite".into()));
        }
        Ok(())
    }

    pub fn cycle_s(&self) -> f64 {
        self.green_s + self.red_s
    }

    /// Phase shown at time `t`.
    pub fn phase_at(&self, t: f64) -> Result<Phase> {
        if t < 0.0 {
            return Err(Error::Domain(format!("phase query at negative time {t}")));
        }
        Ok(self.phase_unchecked(t))
    }

    /// Same as [`phase_at`](Self::phase_at) without the domain check; used on
    /// planner-internal times that are non-negative by construction.
    pub(crate) fn phase_unchecked(&self, t: f64) -> Phase {
        let into_cycle = (t - self.offset_s).rem_euclid(self.cycle_s());
        if into_cycle < self.green_s {
            Phase::Green
        } else {
            Phase::Red
        }
    }

    /// Earliest green window `[start, end)` with `end > t`. If `t` lies inside
    /// a green window, that window is returned.
    pub fn next_green_window(&self, t: f64) -> Result<GreenWindow> {
        if t < 0.0 {
            return Err(Error::Domain(format!(
                "green window query at negative time {t}"
            )));
        }
        // derived from the same modulo arithmetic as phase_at so the two
        // stay consistent at phase boundaries
        let cycle = self.cycle_s();
        let into_cycle = (t - self.offset_s).rem_euclid(cycle);
        let start = if into_cycle < self.green_s {
            t - into_cycle
        } else {
            t + (cycle - into_cycle)
        };
        Ok(GreenWindow {
            start_s: start,
            end_s: start + self.green_s,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sig(green: f64, red: f64, offset: f64) -> TrafficSignal {
        TrafficSignal::new(600.0, green, red, offset).unwrap()
    }

    #[test]
    fn phase_matches_stated_timing() {
        let s = sig(72.0, 88.0, 0.0);
        assert_eq!(s.phase_at(50.0).unwrap(), Phase::Green);
        // half-open boundary: the switch instant is red
        assert_eq!(s.phase_at(72.0).unwrap(), Phase::Red);
        assert_eq!(s.phase_at(159.999).unwrap(), Phase::Red);
        // periodic wrap back to green
        assert_eq!(s.phase_at(160.0).unwrap(), Phase::Green);
    }

    #[test]
    fn negative_time_is_domain_error() {
        let s = sig(72.0, 88.0, 0.0);
        assert!(matches!(s.phase_at(-1.0), Err(Error::Domain(_))));
        assert!(matches!(s.next_green_window(-0.5), Err(Error::Domain(_))));
    }

    #[test]
    fn green_window_lookup() {
        let s = sig(72.0, 88.0, 0.0);
        assert_eq!(
            s.next_green_window(50.0).unwrap(),
            GreenWindow {
                start_s: 0.0,
                end_s: 72.0
            }
        );
        assert_eq!(
            s.next_green_window(100.0).unwrap(),
            GreenWindow {
                start_s: 160.0,
                end_s: 232.0
            }
        );
        assert_eq!(
            s.next_green_window(0.0).unwrap(),
            GreenWindow {
                start_s: 0.0,
                end_s: 72.0
            }
        );
    }

    #[test]
    fn offset_delays_first_green() {
        let s = sig(30.0, 30.0, 10.0);
        assert_eq!(s.phase_at(15.0).unwrap(), Phase::Green);
        // before the offset the signal shows the tail of the periodic cycle
        assert_eq!(s.phase_at(5.0).unwrap(), Phase::Red);
    }

    #[test]
    fn green_time_over_one_cycle_equals_green_duration() {
        let s = sig(72.0, 88.0, 13.5);
        let dt = 1e-3;
        let cycle = s.cycle_s();
        let mut green = 0.0;
        let mut t = 200.0;
        let end = 200.0 + cycle;
        while t < end {
            if s.phase_unchecked(t) == Phase::Green {
                green += dt;
            }
            t += dt;
        }
        assert!(
            (green - s.green_s).abs() < 2.0 * dt * 10.0,
            "green accounting off: {green}"
        );
    }

    proptest! {
        #[test]
        fn phase_is_periodic(
            green in 1.0f64..200.0,
            red in 1.0f64..200.0,
            offset in 0.0f64..100.0,
            t in 0.0f64..500.0,
            k in 0u32..4,
        ) {
            let s = TrafficSignal::new(0.0, green, red, offset).unwrap();
            let shifted = t + f64::from(k) * s.cycle_s();
            prop_assert_eq!(s.phase_at(t).unwrap(), s.phase_at(shifted).unwrap());
        }

        #[test]
        fn window_start_is_green_and_preceding_instant_red(
            green in 1.0f64..200.0,
            red in 1.0f64..200.0,
            offset in 0.0f64..100.0,
            t in 0.0f64..500.0,
        ) {
            let s = TrafficSignal::new(0.0, green, red, offset).unwrap();
            let w = s.next_green_window(t).unwrap();
            prop_assert!(w.end_s > t);
            // sample just inside each side of the boundary; exact boundary
            // values are subject to rounding of the periodic arithmetic
            let eps = 1e-6;
            if w.start_s > eps {
                prop_assert_eq!(s.phase_at(w.start_s + eps).unwrap(), Phase::Green);
                prop_assert_eq!(s.phase_at(w.start_s - eps).unwrap(), Phase::Red);
            }
        }
    }
}

//! Per-distance-step trajectory records shared by the planner, the follower
//! simulator and the output writers.
//!
//! A record holds the state at step `k` (position, time, velocity) plus the
//! outgoing edge to step `k+1` (acceleration, duration-implied energy and the
//! motor efficiency used). Within an edge the motion is constant-acceleration
//! over distance, so consecutive records satisfy
//! `v_{k+1}^2 = v_k^2 + 2 a_k ds` and `t_{k+1} = t_k + 2 ds / (v_k + v_{k+1})`
//! exactly. The terminal record has no outgoing edge (zero acceleration and
//! energy, no efficiency entry).

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRecord {
    pub step: usize,
    pub position_m: f64,
    pub time_s: f64,
    pub velocity_mps: f64,
    pub accel_mps2: f64,
    pub energy_wh: f64,
    /// Motor efficiency of the outgoing edge; `None` on the terminal record.
    pub eta_tr: Option<f64>,
    /// Whether the outgoing edge ran the traction branch of the energy model.
    pub traction: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    records: Vec<TrajectoryRecord>,
}

impl Trajectory {
    pub fn new(records: Vec<TrajectoryRecord>) -> Self {
        Trajectory { records }
    }

    pub fn records(&self) -> &[TrajectoryRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn first(&self) -> &TrajectoryRecord {
        &self.records[0]
    }

    pub fn last(&self) -> &TrajectoryRecord {
        self.records.last().expect("trajectory is never empty")
    }

    /// Net electric energy over the whole trajectory.
    pub fn total_energy_wh(&self) -> f64 {
        self.records.iter().map(|r| r.energy_wh).sum()
    }

    /// Time from the first to the last record.
    pub fn travel_time_s(&self) -> f64 {
        self.last().time_s - self.first().time_s
    }

    /// Time of the record whose position matches `position_m` (within 1e-6).
    pub fn time_at_position(&self, position_m: f64) -> Option<f64> {
        let idx = self
            .records
            .partition_point(|r| r.position_m < position_m - 1e-6);
        let rec = self.records.get(idx)?;
        ((rec.position_m - position_m).abs() <= 1e-6).then_some(rec.time_s)
    }

    /// Time at which the vehicle reaches `position_m`, interpolating inside
    /// edges and extrapolating at the final speed past the last record.
    pub fn time_reaching_position(&self, position_m: f64) -> Result<f64> {
        let first = self.first();
        if position_m <= first.position_m {
            return Ok(first.time_s);
        }
        let last = self.last();
        if position_m > last.position_m {
            if last.velocity_mps <= 1e-9 {
                return Err(Error::Horizon(format!(
                    "trajectory ends at rest at {:.1} m; cannot extrapolate to {:.1} m",
                    last.position_m, position_m
                )));
            }
            return Ok(last.time_s + (position_m - last.position_m) / last.velocity_mps);
        }
        let idx = self
            .records
            .partition_point(|r| r.position_m <= position_m)
            .saturating_sub(1);
        let rec = &self.records[idx];
        let ds = position_m - rec.position_m;
        if ds <= 0.0 {
            return Ok(rec.time_s);
        }
        // constant acceleration over distance inside the edge
        let v_sq = rec.velocity_mps * rec.velocity_mps + 2.0 * rec.accel_mps2 * ds;
        let v_there = v_sq.max(0.0).sqrt();
        let denom = rec.velocity_mps + v_there;
        if denom <= 1e-12 {
            return Err(Error::Horizon(format!(
                "trajectory stalls near {:.1} m",
                rec.position_m
            )));
        }
        Ok(rec.time_s + 2.0 * ds / denom)
    }

    /// Kinematic state `(position, velocity, acceleration)` at time `t`,
    /// clamped to the first record and extrapolated at constant speed past
    /// the last one.
    pub fn state_at_time(&self, t: f64) -> (f64, f64, f64) {
        let first = self.first();
        if t <= first.time_s {
            return (first.position_m, first.velocity_mps, 0.0);
        }
        let last = self.last();
        if t >= last.time_s {
            let dt = t - last.time_s;
            return (
                last.position_m + last.velocity_mps * dt,
                last.velocity_mps,
                0.0,
            );
        }
        let idx = self
            .records
            .partition_point(|r| r.time_s <= t)
            .saturating_sub(1);
        let rec = &self.records[idx];
        let dt = t - rec.time_s;
        let pos = rec.position_m + rec.velocity_mps * dt + 0.5 * rec.accel_mps2 * dt * dt;
        let vel = (rec.velocity_mps + rec.accel_mps2 * dt).max(0.0);
        (pos, vel, rec.accel_mps2)
    }

    /// Largest kinematic transition residual across consecutive records;
    /// `(velocity_sq_residual, time_residual)`.
    pub fn max_transition_residuals(&self) -> (f64, f64) {
        let mut worst_v = 0.0f64;
        let mut worst_t = 0.0f64;
        for pair in self.records.windows(2) {
            let (a, b) = (&pair[0], &pair[1]);
            let ds = b.position_m - a.position_m;
            let rv = (b.velocity_mps * b.velocity_mps
                - a.velocity_mps * a.velocity_mps
                - 2.0 * a.accel_mps2 * ds)
                .abs();
            let rt = (b.time_s - a.time_s - 2.0 * ds / (a.velocity_mps + b.velocity_mps)).abs();
            worst_v = worst_v.max(rv);
            worst_t = worst_t.max(rt);
        }
        (worst_v, worst_t)
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    pub(crate) fn constant_speed(
        start_pos: f64,
        speed: f64,
        ds: f64,
        steps: usize,
    ) -> Trajectory {
        let records = (0..=steps)
            .map(|k| TrajectoryRecord {
                step: k,
                position_m: start_pos + k as f64 * ds,
                time_s: k as f64 * ds / speed,
                velocity_mps: speed,
                accel_mps2: 0.0,
                energy_wh: 0.0,
                eta_tr: if k < steps { Some(0.9) } else { None },
                traction: k < steps,
            })
            .collect();
        Trajectory::new(records)
    }

    #[test]
    fn lookup_and_interpolation() {
        let t = constant_speed(0.0, 10.0, 1.0, 100);
        assert_eq!(t.time_at_position(50.0), Some(5.0));
        assert_eq!(t.time_at_position(50.5), None);
        assert!((t.time_reaching_position(50.5).unwrap() - 5.05).abs() < 1e-12);
        // extrapolation beyond the last record
        assert!((t.time_reaching_position(110.0).unwrap() - 11.0).abs() < 1e-12);
    }

    #[test]
    fn state_sampling() {
        let t = constant_speed(0.0, 10.0, 1.0, 100);
        let (pos, vel, acc) = t.state_at_time(2.55);
        assert!((pos - 25.5).abs() < 1e-12);
        assert_eq!(vel, 10.0);
        assert_eq!(acc, 0.0);
        let (pos, ..) = t.state_at_time(20.0);
        assert!((pos - 200.0).abs() < 1e-12);
    }

    #[test]
    fn residuals_zero_for_consistent_records() {
        let t = constant_speed(-14.0, 8.0, 1.0, 40);
        let (rv, rt) = t.max_transition_residuals();
        assert!(rv < 1e-12 && rt < 1e-12);
    }
}

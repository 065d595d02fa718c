//! Motor efficiency lookup over a torque × rotational-speed grid.
//!
//! Maps are rectangular grids with strictly increasing axes and efficiencies
//! in `(0, 1]`. Queries use the torque magnitude and clamp to the grid
//! boundary, so extreme planner states always get a finite, monotone cost.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct MotorMap {
    torque_axis_nm: Vec<f64>,
    speed_axis_radps: Vec<f64>,
    /// Row-major: `efficiency[i * speed_len + j]` for torque index `i`.
    efficiency: Vec<f64>,
}

impl MotorMap {
    pub fn new(
        torque_axis_nm: Vec<f64>,
        speed_axis_radps: Vec<f64>,
        efficiency: Vec<f64>,
    ) -> Result<Self> {
        if torque_axis_nm.len() < 2 || speed_axis_radps.len() < 2 {
            return Err(Error::Config(
                "motor map needs at least a 2x2 grid".to_string(),
            ));
        }
        for axis in [&torque_axis_nm, &speed_axis_radps] {
            if axis.windows(2).any(|w| !(w[1] > w[0])) {
                return Err(Error::Config(
                    "motor map axes must be strictly increasing".to_string(),
                ));
            }
        }
        if efficiency.len() != torque_axis_nm.len() * speed_axis_radps.len() {
            return Err(Error::Config(format!(
                "motor map grid has {} values, expected {}",
                efficiency.len(),
                torque_axis_nm.len() * speed_axis_radps.len()
            )));
        }
        if efficiency.iter().any(|&e| !(e > 0.0 && e <= 1.0)) {
            return Err(Error::Config(
                "motor map efficiencies must lie in (0, 1]".to_string(),
            ));
        }
        Ok(MotorMap {
            torque_axis_nm,
            speed_axis_radps,
            efficiency,
        })
    }

    pub fn torque_axis(&self) -> &[f64] {
        &self.torque_axis_nm
    }

    pub fn speed_axis(&self) -> &[f64] {
        &self.speed_axis_radps
    }

    fn value(&self, i: usize, j: usize) -> f64 {
        self.efficiency[i * self.speed_axis_radps.len() + j]
    }

    /// Bilinear interpolation at `(|torque|, speed)`, clamped to the grid.
    pub fn efficiency_at(&self, torque_nm: f64, speed_radps: f64) -> f64 {
        let q_t = torque_nm.abs();
        let (i, ft) = locate(&self.torque_axis_nm, q_t);
        let (j, fs) = locate(&self.speed_axis_radps, speed_radps);
        let v00 = self.value(i, j);
        let v01 = self.value(i, j + 1);
        let v10 = self.value(i + 1, j);
        let v11 = self.value(i + 1, j + 1);
        let low = v00 * (1.0 - fs) + v01 * fs;
        let high = v10 * (1.0 - fs) + v11 * fs;
        low * (1.0 - ft) + high * ft
    }

    /// Smooth analytic surface: `edge` at the grid boundary, `peak` at the
    /// grid center, raised-sine shaped in both normalized coordinates.
    pub fn synthetic(
        peak: f64,
        edge: f64,
        torque_max_nm: f64,
        speed_max_radps: f64,
        n_torque: usize,
        n_speed: usize,
        exponent: f64,
    ) -> Result<Self> {
        let torque_axis: Vec<f64> = (0..n_torque)
            .map(|i| torque_max_nm * i as f64 / (n_torque - 1) as f64)
            .collect();
        let speed_axis: Vec<f64> = (0..n_speed)
            .map(|j| speed_max_radps * j as f64 / (n_speed - 1) as f64)
            .collect();
        let mut eff = Vec::with_capacity(n_torque * n_speed);
        for i in 0..n_torque {
            for j in 0..n_speed {
                let u = i as f64 / (n_torque - 1) as f64;
                let w = j as f64 / (n_speed - 1) as f64;
                let shape = (std::f64::consts::PI * u).sin().max(0.0).powf(exponent)
                    * (std::f64::consts::PI * w).sin().max(0.0).powf(exponent);
                eff.push(edge + (peak - edge) * shape);
            }
        }
        MotorMap::new(torque_axis, speed_axis, eff)
    }

    /// CSV with header `torque_nm,speed_radps,efficiency`; rows must form a
    /// complete rectangular grid.
    pub fn from_csv(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_csv_str(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Parse {
                path: path.to_path_buf(),
                message: msg,
            },
            other => other,
        })
    }

    pub fn from_csv_str(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        let header = lines
            .next()
            .ok_or_else(|| Error::Config("empty motor map file".to_string()))?
            .1
            .trim();
        if header != "torque_nm,speed_radps,efficiency" {
            return Err(Error::Config(format!(
                "bad motor map header: {header:?}, expected torque_nm,speed_radps,efficiency"
            )));
        }
        let mut rows: Vec<(f64, f64, f64)> = Vec::new();
        for (lineno, line) in lines {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let mut fields = line.split(',');
            let mut parse = |name: &str| -> Result<f64> {
                fields
                    .next()
                    .ok_or_else(|| {
                        Error::Config(format!("line {}: missing {name}", lineno + 1))
                    })?
                    .trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Config(format!("line {}: bad {name}: {e}", lineno + 1)))
            };
            let t = parse("torque_nm")?;
            let s = parse("speed_radps")?;
            let e = parse("efficiency")?;
            rows.push((t, s, e));
        }

        let mut torques: Vec<f64> = rows.iter().map(|r| r.0).collect();
        torques.sort_by(f64::total_cmp);
        torques.dedup_by(|a, b| a.to_bits() == b.to_bits());
        let mut speeds: Vec<f64> = rows.iter().map(|r| r.1).collect();
        speeds.sort_by(f64::total_cmp);
        speeds.dedup_by(|a, b| a.to_bits() == b.to_bits());

        if rows.len() != torques.len() * speeds.len() {
            return Err(Error::Config(format!(
                "motor map grid incomplete: {} rows for {} torque x {} speed nodes",
                rows.len(),
                torques.len(),
                speeds.len()
            )));
        }
        let mut eff = vec![f64::NAN; torques.len() * speeds.len()];
        for (t, s, e) in rows {
            let i = torques
                .iter()
                .position(|x| x.to_bits() == t.to_bits())
                .expect("torque deduped from rows");
            let j = speeds
                .iter()
                .position(|x| x.to_bits() == s.to_bits())
                .expect("speed deduped from rows");
            let slot = &mut eff[i * speeds.len() + j];
            if !slot.is_nan() {
                return Err(Error::Config(format!(
                    "duplicate motor map node at torque {t}, speed {s}"
                )));
            }
            *slot = e;
        }
        MotorMap::new(torques, speeds, eff)
    }

    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("torque_nm,speed_radps,efficiency\n");
        for (i, t) in self.torque_axis_nm.iter().enumerate() {
            for (j, s) in self.speed_axis_radps.iter().enumerate() {
                let _ = writeln!(out, "{t:.6},{s:.6},{:.6}", self.value(i, j));
            }
        }
        out
    }
}

/// Cell index and fraction for a clamped query along one axis.
fn locate(axis: &[f64], q: f64) -> (usize, f64) {
    if q <= axis[0] {
        return (0, 0.0);
    }
    let last = axis.len() - 1;
    if q >= axis[last] {
        return (last - 1, 1.0);
    }
    // first index with axis[idx] > q; cell is [idx-1, idx]
    let idx = axis.partition_point(|&x| x <= q);
    let i = idx - 1;
    let frac = (q - axis[i]) / (axis[i + 1] - axis[i]);
    (i, frac)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn diagonal_2x2() -> MotorMap {
        MotorMap::new(
            vec![0.0, 10.0],
            vec![0.0, 100.0],
            vec![0.80, 0.90, 0.90, 0.80],
        )
        .unwrap()
    }

    #[test]
    fn node_queries_return_stored_values() {
        let m = diagonal_2x2();
        assert_eq!(m.efficiency_at(0.0, 0.0), 0.80);
        assert_eq!(m.efficiency_at(0.0, 100.0), 0.90);
        assert_eq!(m.efficiency_at(10.0, 0.0), 0.90);
        assert_eq!(m.efficiency_at(10.0, 100.0), 0.80);
    }

    #[test]
    fn cell_center_of_diagonal_corners() {
        let m = diagonal_2x2();
        assert!((m.efficiency_at(5.0, 50.0) - 0.85).abs() < 1e-12);
    }

    #[test]
    fn constant_patch_interpolates_to_constant() {
        let m = MotorMap::new(
            vec![0.0, 1.0, 2.0],
            vec![0.0, 1.0],
            vec![0.7, 0.7, 0.7, 0.7, 0.7, 0.7],
        )
        .unwrap();
        assert!((m.efficiency_at(0.3, 0.9) - 0.7).abs() < 1e-15);
        assert!((m.efficiency_at(1.7, 0.1) - 0.7).abs() < 1e-15);
    }

    #[test]
    fn out_of_grid_queries_clamp() {
        let m = diagonal_2x2();
        assert_eq!(m.efficiency_at(50.0, 500.0), 0.80);
        assert_eq!(m.efficiency_at(-50.0, 0.0), 0.90); // |torque| = 50 clamps high
        assert_eq!(m.efficiency_at(0.0, -3.0), 0.80);
    }

    #[test]
    fn braking_torque_uses_magnitude() {
        let m = diagonal_2x2();
        assert_eq!(m.efficiency_at(-5.0, 50.0), m.efficiency_at(5.0, 50.0));
    }

    #[test]
    fn degenerate_maps_rejected() {
        assert!(MotorMap::new(vec![0.0], vec![0.0, 1.0], vec![0.5, 0.5]).is_err());
        assert!(MotorMap::new(vec![0.0, 0.0], vec![0.0, 1.0], vec![0.5; 4]).is_err());
        assert!(MotorMap::new(vec![0.0, 1.0], vec![0.0, 1.0], vec![0.5; 3]).is_err());
        assert!(MotorMap::new(vec![0.0, 1.0], vec![0.0, 1.0], vec![0.0, 0.5, 0.5, 0.5]).is_err());
    }

    #[test]
    fn csv_round_trip_and_incomplete_grid_rejection() {
        let m = MotorMap::synthetic(0.92, 0.60, 100.0, 300.0, 5, 4, 0.45).unwrap();
        let text = m.to_csv_string();
        let back = MotorMap::from_csv_str(&text).unwrap();
        assert_eq!(back.torque_axis().len(), 5);
        assert_eq!(back.speed_axis().len(), 4);
        // parsed values equal the 6-decimal serialization of the source surface
        let q = back.efficiency_at(50.0, 150.0);
        assert!((q - m.efficiency_at(50.0, 150.0)).abs() < 1e-5);

        let mut lines: Vec<&str> = text.lines().collect();
        lines.remove(3);
        let broken = lines.join("\n");
        assert!(MotorMap::from_csv_str(&broken).is_err());
    }

    #[test]
    fn continuity_across_interior_grid_lines() {
        let m = MotorMap::synthetic(0.90, 0.60, 120.0, 280.0, 7, 7, 0.5).unwrap();
        let eps = 1e-9;
        for &t in &m.torque_axis()[1..6] {
            for s in [10.0, 133.0, 270.0] {
                let below = m.efficiency_at(t - eps, s);
                let above = m.efficiency_at(t + eps, s);
                assert!((below - above).abs() < 1e-9);
            }
        }
        for &s in &m.speed_axis()[1..6] {
            for t in [5.0, 60.0, 115.0] {
                let below = m.efficiency_at(t, s - eps);
                let above = m.efficiency_at(t, s + eps);
                assert!((below - above).abs() < 1e-9);
            }
        }
    }

    proptest! {
        #[test]
        fn interpolation_stays_within_node_range(
            t in -200.0f64..200.0,
            s in -50.0f64..400.0,
        ) {
            let m = MotorMap::synthetic(0.92, 0.60, 100.0, 300.0, 9, 9, 0.45).unwrap();
            let e = m.efficiency_at(t, s);
            prop_assert!(e >= 0.6 - 1e-12 && e <= 0.92 + 1e-12);
        }
    }
}

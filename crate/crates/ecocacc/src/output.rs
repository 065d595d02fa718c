//! CSV artifacts of a platoon run plus the two-run comparison.
//!
//! All numbers are written with fixed six-decimal formatting so repeated runs
//! of the same scenario produce byte-identical files.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::strategy::PlatoonResult;

pub const TRAJECTORIES_FILE: &str = "trajectories.csv";
pub const SUMMARY_FILE: &str = "summary.csv";
pub const PLATOON_FILE: &str = "platoon.csv";

fn fmt(x: f64) -> String {
    format!("{x:.6}")
}

pub fn trajectories_csv(result: &PlatoonResult) -> String {
    let mut out = String::from(
        "vehicle_id,step_k,position_m,time_s,velocity_mps,accel_mps2,energy_wh,eta_tr\n",
    );
    for vehicle in &result.vehicles {
        for rec in vehicle.trajectory.records() {
            let eta = rec.eta_tr.map(fmt).unwrap_or_default();
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                vehicle.vehicle_id,
                rec.step,
                fmt(rec.position_m),
                fmt(rec.time_s),
                fmt(rec.velocity_mps),
                fmt(rec.accel_mps2),
                fmt(rec.energy_wh),
                eta,
            );
        }
    }
    out
}

pub fn summary_csv(result: &PlatoonResult, n_signals: usize) -> String {
    let mut out = String::from("vehicle_id,role,reason,travel_time_s,energy_wh,avg_eta_tr");
    for i in 1..=n_signals {
        let _ = write!(out, ",crossing_time_s_{i}");
    }
    out.push('\n');
    for vehicle in &result.vehicles {
        let _ = write!(
            out,
            "{},{},{},{},{},{}",
            vehicle.vehicle_id,
            vehicle.role.label(),
            vehicle.role.reason_label(),
            fmt(vehicle.travel_time_s),
            fmt(vehicle.energy_wh),
            fmt(vehicle.avg_eta_tr),
        );
        for t in &vehicle.crossing_times_s {
            let _ = write!(out, ",{}", fmt(*t));
        }
        out.push('\n');
    }
    out
}

pub fn platoon_csv(result: &PlatoonResult) -> String {
    format!(
        "avg_energy_wh_per_veh,avg_travel_time_s_per_veh,max_velocity_mps,max_abs_accel_mps2\n{},{},{},{}\n",
        fmt(result.avg_energy_wh),
        fmt(result.avg_travel_time_s),
        fmt(result.max_velocity_mps),
        fmt(result.max_abs_accel_mps2),
    )
}

/// Write the three run artifacts into `out_dir`, creating it if needed.
pub fn write_outputs(result: &PlatoonResult, n_signals: usize, out_dir: &Path) -> Result<()> {
    fs::create_dir_all(out_dir)?;
    fs::write(out_dir.join(TRAJECTORIES_FILE), trajectories_csv(result))?;
    fs::write(out_dir.join(SUMMARY_FILE), summary_csv(result, n_signals))?;
    fs::write(out_dir.join(PLATOON_FILE), platoon_csv(result))?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlatoonAggregates {
    pub avg_energy_wh: f64,
    pub avg_travel_time_s: f64,
    pub max_velocity_mps: f64,
    pub max_abs_accel_mps2: f64,
}

pub fn read_platoon_csv(dir: &Path) -> Result<PlatoonAggregates> {
    let path = dir.join(PLATOON_FILE);
    let text = fs::read_to_string(&path).map_err(|e| Error::Parse {
        path: path.clone(),
        message: e.to_string(),
    })?;
    let mut lines = text.lines();
    let header = lines.next().unwrap_or_default();
    if header
        != "avg_energy_wh_per_veh,avg_travel_time_s_per_veh,max_velocity_mps,max_abs_accel_mps2"
    {
        return Err(Error::Parse {
            path,
            message: format!("unexpected header: {header}"),
        });
    }
    let row = lines.next().ok_or_else(|| Error::Parse {
        path: path.clone(),
        message: "missing data row".into(),
    })?;
    let fields: Vec<f64> = row
        .split(',')
        .map(|f| f.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| Error::Parse {
            path: path.clone(),
            message: e.to_string(),
        })?;
    if fields.len() != 4 {
        return Err(Error::Parse {
            path,
            message: format!("expected 4 fields, found {}", fields.len()),
        });
    }
    Ok(PlatoonAggregates {
        avg_energy_wh: fields[0],
        avg_travel_time_s: fields[1],
        max_velocity_mps: fields[2],
        max_abs_accel_mps2: fields[3],
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricDelta {
    pub metric: &'static str,
    pub value_a: f64,
    pub value_b: f64,
    pub delta: f64,
    pub delta_pct: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub rows: Vec<MetricDelta>,
}

impl Comparison {
    pub fn csv(&self) -> String {
        let mut out = String::from("metric,run_a,run_b,delta,delta_pct\n");
        for row in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                row.metric,
                fmt(row.value_a),
                fmt(row.value_b),
                fmt(row.delta),
                fmt(row.delta_pct),
            );
        }
        out
    }

    pub fn table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<28} {:>14} {:>14} {:>12} {:>10}",
            "metric", "run A", "run B", "delta", "delta %"
        );
        for row in &self.rows {
            let _ = writeln!(
                out,
                "{:<28} {:>14.3} {:>14.3} {:>+12.3} {:>+9.2}%",
                row.metric, row.value_a, row.value_b, row.delta, row.delta_pct
            );
        }
        out
    }
}

/// Per-metric absolute and percentage deltas between two run directories
/// (B relative to A).
pub fn compare(dir_a: &Path, dir_b: &Path) -> Result<Comparison> {
    let a = read_platoon_csv(dir_a)?;
    let b = read_platoon_csv(dir_b)?;
    let row = |metric: &'static str, va: f64, vb: f64| MetricDelta {
        metric,
        value_a: va,
        value_b: vb,
        delta: vb - va,
        delta_pct: if va != 0.0 {
            (vb - va) / va * 100.0
        } else {
            f64::NAN
        },
    };
    Ok(Comparison {
        rows: vec![
            row("avg_energy_wh_per_veh", a.avg_energy_wh, b.avg_energy_wh),
            row(
                "avg_travel_time_s_per_veh",
                a.avg_travel_time_s,
                b.avg_travel_time_s,
            ),
        ],
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_platoon(dir: &Path, energy: f64, time: f64) {
        fs::create_dir_all(dir).unwrap();
        fs::write(
            dir.join(PLATOON_FILE),
            format!(
                "avg_energy_wh_per_veh,avg_travel_time_s_per_veh,max_velocity_mps,max_abs_accel_mps2\n{energy},{time},14.0,3.5\n"
            ),
        )
        .unwrap();
    }

    #[test]
    fn compare_reproduces_known_deltas() {
        let tmp = tempfile::tempdir().unwrap();
        let a = tmp.path().join("a");
        let b = tmp.path().join("b");
        write_platoon(&a, 1812.965, 234.86);
        write_platoon(&b, 1473.99, 305.85);
        let cmp = compare(&a, &b).unwrap();
        let energy = &cmp.rows[0];
        assert!((energy.delta - (-338.975)).abs() < 1e-9);
        assert!((energy.delta_pct - (-18.6974)).abs() < 1e-3);
        let time = &cmp.rows[1];
        assert!((time.delta - 70.99).abs() < 1e-9);
        assert!((time.delta_pct - 30.2264).abs() < 1e-3);
    }

    #[test]
    fn compare_is_antisymmetric_in_absolute_deltas() {
        let tmp = tempfile::tempdir().unwrap();
        let a = tmp.path().join("a");
        let b = tmp.path().join("b");
        write_platoon(&a, 1000.0, 100.0);
        write_platoon(&b, 900.0, 120.0);
        let ab = compare(&a, &b).unwrap();
        let ba = compare(&b, &a).unwrap();
        for (x, y) in ab.rows.iter().zip(&ba.rows) {
            assert!((x.delta + y.delta).abs() < 1e-12);
        }
    }

    #[test]
    fn identical_runs_have_zero_deltas() {
        let tmp = tempfile::tempdir().unwrap();
        let a = tmp.path().join("a");
        write_platoon(&a, 1234.5, 222.2);
        let cmp = compare(&a, &a).unwrap();
        assert!(cmp.rows.iter().all(|r| r.delta == 0.0 && r.delta_pct == 0.0));
    }

    #[test]
    fn missing_input_is_a_parse_error() {
        let tmp = tempfile::tempdir().unwrap();
        let missing = tmp.path().join("nope");
        assert!(matches!(
            compare(&missing, &missing),
            Err(Error::Parse { .. })
        ));
    }
}

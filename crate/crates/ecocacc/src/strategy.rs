//! Platoon pipeline: plan the first leader, then let every subsequent
//! vehicle either follow its predecessor with PID CACC or become a new
//! leader with its own planned trajectory.
//!
//! For each vehicle after the first, the pipeline first predicts its
//! PID-following trajectory behind the (already fixed) predecessor.
//! Condition 1 checks that this prediction crosses every signal during
//! green; Condition 2 checks that its average motor efficiency stays at or
//! above the configured threshold. A failed condition promotes the vehicle
//! to a new leader whose trajectory is re-planned from its own queue slot,
//! floor-constrained to stay behind its predecessor.

use crate::cacc::{simulate_follower, FollowerState};
use crate::dp::{plan_trajectory, GridSpec, PlanProfiles, StartState};
use crate::error::{Error, Result};
use crate::scenario::Scenario;
use crate::signal::{Phase, TrafficSignal};
use crate::trajectory::Trajectory;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RoleReason {
    Condition1,
    Condition2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VehicleRole {
    Leader,
    Follower { predecessor: usize },
    NewLeader { reason: RoleReason },
}

impl VehicleRole {
    pub fn label(&self) -> &'static str {
        match self {
            VehicleRole::Leader => "leader",
            VehicleRole::Follower { .. } => "follower",
            VehicleRole::NewLeader { .. } => "new_leader",
        }
    }

    pub fn reason_label(&self) -> &'static str {
        match self {
            VehicleRole::NewLeader {
                reason: RoleReason::Condition1,
            } => "condition1",
            VehicleRole::NewLeader {
                reason: RoleReason::Condition2,
            } => "condition2",
            _ => "",
        }
    }
}

#[derive(Debug, Clone)]
pub struct VehicleResult {
    pub vehicle_id: usize,
    pub role: VehicleRole,
    pub class_name: String,
    pub trajectory: Trajectory,
    pub energy_wh: f64,
    pub travel_time_s: f64,
    pub avg_eta_tr: f64,
    /// Crossing time at each signal, in scenario signal order.
    pub crossing_times_s: Vec<f64>,
    /// Standstill clamp events from the follower simulation (empty for leaders).
    pub clamp_times_s: Vec<f64>,
    /// Set when a leader's planner could not avoid a red arrival.
    pub red_unavoidable: bool,
}

#[derive(Debug, Clone)]
pub struct PlatoonResult {
    pub vehicles: Vec<VehicleResult>,
    pub avg_energy_wh: f64,
    pub avg_travel_time_s: f64,
    pub max_velocity_mps: f64,
    pub max_abs_accel_mps2: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Condition1Outcome {
    Pass,
    Fail {
        signal_index: usize,
        arrival_t_s: f64,
    },
}

/// Condition 1: does the candidate trajectory cross every signal on green?
pub fn check_condition1(
    candidate: &Trajectory,
    signals: &[TrafficSignal],
) -> Result<Condition1Outcome> {
    for (signal_index, sig) in signals.iter().enumerate() {
        let arrival = candidate.time_at_position(sig.position_m).ok_or_else(|| {
            Error::Domain(format!(
                "candidate trajectory has no record at signal position {} m",
                sig.position_m
            ))
        })?;
        if sig.phase_at(arrival)? == Phase::Red {
            return Ok(Condition1Outcome::Fail {
                signal_index,
                arrival_t_s: arrival,
            });
        }
    }
    Ok(Condition1Outcome::Pass)
}

/// Arithmetic mean of the motor efficiency over traction steps.
pub fn average_efficiency(trajectory: &Trajectory) -> Result<f64> {
    if trajectory.is_empty() {
        return Err(Error::Domain("average efficiency of an empty trajectory".into()));
    }
    let etas: Vec<f64> = trajectory
        .records()
        .iter()
        .filter(|r| r.traction)
        .filter_map(|r| r.eta_tr)
        .collect();
    if etas.is_empty() {
        return Err(Error::Domain(
            "trajectory has no traction steps to average".into(),
        ));
    }
    Ok(etas.iter().sum::<f64>() / etas.len() as f64)
}

/// Condition 2 passes when the average efficiency is at or above the
/// threshold (strict inequality fails).
pub fn check_condition2(avg_eta: f64, threshold: f64) -> bool {
    avg_eta >= threshold
}

/// Queue start positions: vehicle 0 at the route origin, each next vehicle
/// one predecessor length plus one standstill gap further back.
pub fn queue_positions(lengths_m: &[f64], standstill_m: f64) -> Vec<f64> {
    let mut positions = Vec::with_capacity(lengths_m.len());
    let mut pos = 0.0;
    for i in 0..lengths_m.len() {
        if i > 0 {
            pos -= lengths_m[i - 1] + standstill_m;
        }
        positions.push(pos);
    }
    positions
}

/// Earliest admissible arrival times for a re-planned leader: the time its
/// predecessor cleared each position plus one standstill gap and one time
/// headway, which matches the steady-state PID crossing time.
fn predecessor_floors(
    pred: &Trajectory,
    pred_length_m: f64,
    standstill_m: f64,
    headway_s: f64,
    start_position_m: f64,
    ds_m: f64,
    n_steps: usize,
) -> Result<Vec<f64>> {
    let mut floors = Vec::with_capacity(n_steps + 1);
    floors.push(0.0); // the start state is never floor-constrained
    for k in 1..=n_steps {
        let pos = start_position_m + k as f64 * ds_m;
        let cleared = pred.time_reaching_position(pos + pred_length_m + standstill_m)?;
        floors.push(cleared + headway_s);
    }
    Ok(floors)
}

pub fn run_platoon(scenario: &Scenario) -> Result<PlatoonResult> {
    let n = scenario.platoon.len();
    if n == 0 {
        return Err(Error::Validation("platoon is empty".into()));
    }
    let lengths: Vec<f64> = scenario
        .platoon
        .iter()
        .map(|class| scenario.vehicle(class).length_m)
        .collect();
    let starts = queue_positions(&lengths, scenario.cacc.spacing.standstill_m);

    let mut results: Vec<VehicleResult> = Vec::with_capacity(n);
    for i in 0..n {
        let pred_traj = results.last().map(|r: &VehicleResult| &r.trajectory);
        let vehicle_result = process_vehicle(scenario, i, starts[i], pred_traj)
            .map_err(|e| e.for_vehicle(i + 1, stage_name(i)))?;
        results.push(vehicle_result);
    }
    summarize(results)
}

fn stage_name(index: usize) -> &'static str {
    if index == 0 {
        "leader planning"
    } else {
        "follower pipeline"
    }
}

/// Decide and realize one vehicle's trajectory given its predecessor's fixed
/// trajectory; `None` makes it the initial leader.
pub fn process_vehicle(
    scenario: &Scenario,
    index: usize,
    start_position_m: f64,
    pred: Option<&Trajectory>,
) -> Result<VehicleResult> {
    let class = &scenario.platoon[index];
    let vehicle = scenario.vehicle(class);
    let grid = scenario.grid_for(vehicle);

    let (role, trajectory, clamp_times_s, red_unavoidable) = match pred {
        None => {
            let plan = plan_leader(scenario, index, start_position_m, None, &grid)?;
            (
                VehicleRole::Leader,
                plan.trajectory,
                Vec::new(),
                plan.red_unavoidable,
            )
        }
        Some(pred_traj) => {
            let pred_class = &scenario.platoon[index - 1];
            let pred_length = scenario.vehicle(pred_class).length_m;
            let init = FollowerState {
                position_m: start_position_m,
                velocity_mps: 0.0,
                accel_mps2: 0.0,
                input_u: 0.0,
                time_s: 0.0,
            };
            let predicted = simulate_follower(
                pred_traj,
                init,
                &scenario.cacc,
                vehicle,
                pred_length,
                scenario.route.length_m,
                scenario.route.ds_m,
                grid.t_max_s,
            )?;
            match check_condition1(&predicted.trajectory, &scenario.signals)? {
                Condition1Outcome::Fail { .. } => {
                    let plan = plan_leader(
                        scenario,
                        index,
                        start_position_m,
                        Some((pred_traj, pred_length)),
                        &grid,
                    )?;
                    (
                        VehicleRole::NewLeader {
                            reason: RoleReason::Condition1,
                        },
                        plan.trajectory,
                        Vec::new(),
                        plan.red_unavoidable,
                    )
                }
                Condition1Outcome::Pass => {
                    let avg = average_efficiency(&predicted.trajectory)?;
                    if check_condition2(avg, scenario.condition2_threshold) {
                        (
                            VehicleRole::Follower {
                                predecessor: index - 1,
                            },
                            predicted.trajectory,
                            predicted.clamp_times_s,
                            false,
                        )
                    } else {
                        let plan = plan_leader(
                            scenario,
                            index,
                            start_position_m,
                            Some((pred_traj, pred_length)),
                            &grid,
                        )?;
                        (
                            VehicleRole::NewLeader {
                                reason: RoleReason::Condition2,
                            },
                            plan.trajectory,
                            Vec::new(),
                            plan.red_unavoidable,
                        )
                    }
                }
            }
        }
    };

    let avg_eta_tr = average_efficiency(&trajectory)?;
    let crossing_times_s = scenario
        .signals
        .iter()
        .map(|sig| {
            trajectory.time_at_position(sig.position_m).ok_or_else(|| {
                Error::Domain(format!(
                    "trajectory misses signal position {} m",
                    sig.position_m
                ))
            })
        })
        .collect::<Result<Vec<f64>>>()?;

    // Travel time counts from the common scenario start (t = 0), so a leader
    // that dwells before departing is charged for the dwell.
    Ok(VehicleResult {
        vehicle_id: index + 1,
        role,
        class_name: class.clone(),
        energy_wh: trajectory.total_energy_wh(),
        travel_time_s: trajectory.last().time_s,
        avg_eta_tr,
        crossing_times_s,
        clamp_times_s,
        red_unavoidable,
        trajectory,
    })
}

fn plan_leader(
    scenario: &Scenario,
    index: usize,
    start_position_m: f64,
    pred: Option<(&Trajectory, f64)>,
    grid: &GridSpec,
) -> Result<crate::dp::Plan> {
    let class = &scenario.platoon[index];
    let vehicle = scenario.vehicle(class);
    let start = StartState {
        position_m: start_position_m,
        time_s: 0.0,
        velocity_mps: 0.0,
    };
    let profiles = match pred {
        None => None,
        Some((pred_traj, pred_length)) => {
            let n_steps =
                ((scenario.route.length_m - start_position_m) / scenario.route.ds_m).round()
                    as usize;
            let floors = predecessor_floors(
                pred_traj,
                pred_length,
                scenario.cacc.spacing.standstill_m,
                scenario.cacc.spacing.headway_s,
                start_position_m,
                scenario.route.ds_m,
                n_steps,
            )?;
            Some(PlanProfiles {
                v_max: None,
                t_min: Some(floors),
            })
        }
    };
    plan_trajectory(
        vehicle,
        &scenario.route,
        &scenario.signals,
        &scenario.weights,
        grid,
        start,
        scenario.v_des(),
        profiles.as_ref(),
    )
}

fn summarize(vehicles: Vec<VehicleResult>) -> Result<PlatoonResult> {
    let n = vehicles.len() as f64;
    let avg_energy_wh = vehicles.iter().map(|v| v.energy_wh).sum::<f64>() / n;
    let avg_travel_time_s = vehicles.iter().map(|v| v.travel_time_s).sum::<f64>() / n;
    let mut max_velocity_mps = 0.0f64;
    let mut max_abs_accel_mps2 = 0.0f64;
    for v in &vehicles {
        for rec in v.trajectory.records() {
            max_velocity_mps = max_velocity_mps.max(rec.velocity_mps);
            max_abs_accel_mps2 = max_abs_accel_mps2.max(rec.accel_mps2.abs());
        }
    }
    Ok(PlatoonResult {
        vehicles,
        avg_energy_wh,
        avg_travel_time_s,
        max_velocity_mps,
        max_abs_accel_mps2,
    })
}

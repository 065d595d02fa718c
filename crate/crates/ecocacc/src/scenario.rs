//! Scenario configuration: a TOML file describing the route, signals,
//! objective weights, grid resolution, CACC parameters and the platoon.
//!
//! All fields carry explicit units in their names. Optional fields fall back
//! to the documented defaults; the full grammar is described in the README.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::cacc::{CaccGains, CaccParams, SpacingPolicy};
use crate::dp::{GridSpec, PlannerWeights};
use crate::error::{Error, Result};
use crate::motor_map::MotorMap;
use crate::route::{on_grid, Route};
use crate::signal::TrafficSignal;
use crate::vehicle::{RecuperationConvention, VehicleClass, VehicleParams};

/// Grid resolution shared by every plan in a scenario; the acceleration menu
/// is resolved per vehicle class against its limits.
#[derive(Debug, Clone, PartialEq)]
pub struct GridDefaults {
    pub v_step_mps: f64,
    pub t_step_s: f64,
    pub t_min_s: f64,
    pub t_max_s: f64,
    pub a_candidates: Option<Vec<f64>>,
}

impl Default for GridDefaults {
    fn default() -> Self {
        GridDefaults {
            v_step_mps: 0.25,
            t_step_s: 0.5,
            t_min_s: 0.0,
            t_max_s: 1000.0,
            a_candidates: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub route: Route,
    pub signals: Vec<TrafficSignal>,
    pub weights: PlannerWeights,
    pub grid: GridDefaults,
    pub cacc: CaccParams,
    pub condition2_threshold: f64,
    pub v_des_mps: Option<f64>,
    pub classes: BTreeMap<String, VehicleParams>,
    /// Class name of each vehicle, front to back.
    pub platoon: Vec<String>,
}

impl Scenario {
    pub fn vehicle(&self, class: &str) -> &VehicleParams {
        &self.classes[class]
    }

    pub fn v_des(&self) -> f64 {
        self.v_des_mps.unwrap_or(self.route.speed_limit_mps)
    }

    /// Planner grid for one vehicle: scenario resolution plus the vehicle's
    /// admissible acceleration menu.
    pub fn grid_for(&self, vehicle: &VehicleParams) -> GridSpec {
        let a_candidates = match &self.grid.a_candidates {
            Some(menu) => menu
                .iter()
                .copied()
                .filter(|a| *a >= vehicle.accel_min_mps2 && *a <= vehicle.accel_max_mps2)
                .collect(),
            None => {
                GridSpec::default_a_candidates(vehicle.accel_min_mps2, vehicle.accel_max_mps2)
            }
        };
        GridSpec {
            ds_m: self.route.ds_m,
            v_step_mps: self.grid.v_step_mps,
            t_step_s: self.grid.t_step_s,
            a_candidates,
            t_min_s: self.grid.t_min_s,
            t_max_s: self.grid.t_max_s,
        }
    }

    pub fn load(path: &Path) -> Result<Scenario> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        let file: ScenarioFile = toml::from_str(&text).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        let base = path.parent().unwrap_or(Path::new("."));
        let scenario = file.resolve(base)?;
        scenario.validate()?;
        Ok(scenario)
    }

    /// Apply one `key=value` grid override (resolution studies).
    pub fn apply_grid_override(&mut self, key: &str, value: &str) -> Result<()> {
        let parsed: f64 = value.parse().map_err(|_| {
            Error::Validation(format!("grid override {key}: {value} is not a number"))
        })?;
        match key {
            "ds_m" => self.route.ds_m = parsed,
            "v_step_mps" => self.grid.v_step_mps = parsed,
            "t_step_s" => self.grid.t_step_s = parsed,
            "t_min_s" => self.grid.t_min_s = parsed,
            "t_max_s" => self.grid.t_max_s = parsed,
            "dt_sim_s" => self.cacc.dt_sim_s = parsed,
            other => {
                return Err(Error::Validation(format!(
                    "unknown grid override key {other}; known keys: ds_m, v_step_mps, \
                     t_step_s, t_min_s, t_max_s, dt_sim_s"
                )))
            }
        }
        self.validate()
    }

    pub fn validate(&self) -> Result<()> {
        self.route.validate()?;
        self.weights.validate()?;
        self.cacc.validate()?;
        if !(self.grid.v_step_mps > 0.0 && self.grid.t_step_s > 0.0) {
            return Err(Error::Validation("grid steps must be positive".into()));
        }
        if !(self.grid.t_min_s < self.grid.t_max_s) {
            return Err(Error::Validation("t_min must lie below t_max".into()));
        }
        if !(self.condition2_threshold > 0.0 && self.condition2_threshold < 1.0) {
            return Err(Error::Validation(
                "condition2 threshold must lie in (0, 1)".into(),
            ));
        }
        if let Some(v) = self.v_des_mps {
            if !(v > 0.0) {
                return Err(Error::Validation("v_des must be positive".into()));
            }
        }
        for sig in &self.signals {
            sig.validate()?;
            if sig.position_m <= 0.0 || sig.position_m >= self.route.length_m {
                return Err(Error::Validation(format!(
                    "signal position {} m outside the route (0, {})",
                    sig.position_m, self.route.length_m
                )));
            }
            if !on_grid(sig.position_m, self.route.ds_m) {
                return Err(Error::Validation(format!(
                    "signal position {} m not aligned to the {} m grid",
                    sig.position_m, self.route.ds_m
                )));
            }
        }
        if self.platoon.is_empty() {
            return Err(Error::Validation("platoon must contain vehicles".into()));
        }
        for class in &self.platoon {
            if !self.classes.contains_key(class) {
                return Err(Error::Validation(format!(
                    "platoon references unknown vehicle class {class:?}"
                )));
            }
        }
        for (name, vehicle) in &self.classes {
            vehicle
                .validate()
                .map_err(|e| Error::Validation(format!("vehicle class {name:?}: {e}")))?;
            if !on_grid(vehicle.length_m, self.route.ds_m)
                || !on_grid(self.cacc.spacing.standstill_m, self.route.ds_m)
            {
                return Err(Error::Validation(format!(
                    "vehicle class {name:?}: length and standstill gap must be grid-aligned \
                     so queue slots land on the distance grid"
                )));
            }
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// On-disk representation
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScenarioFile {
    pub route: RouteSection,
    #[serde(default, rename = "signal")]
    pub signals: Vec<SignalSection>,
    pub weights: WeightsSection,
    #[serde(default)]
    pub grid: GridSection,
    #[serde(default)]
    pub cacc: CaccSection,
    #[serde(default)]
    pub strategy: StrategySection,
    #[serde(default)]
    pub energy: EnergySection,
    pub vehicle_class: BTreeMap<String, VehicleClassSection>,
    pub platoon: PlatoonSection,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RouteSection {
    pub length_m: f64,
    pub speed_limit_mps: f64,
    #[serde(default = "default_ds")]
    pub ds_m: f64,
}

fn default_ds() -> f64 {
    1.0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SignalSection {
    pub position_m: f64,
    pub green_s: f64,
    pub red_s: f64,
    #[serde(default)]
    pub offset_s: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WeightsSection {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    #[serde(default = "default_p_red")]
    pub p_red: f64,
}

fn default_p_red() -> f64 {
    1e6
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct GridSection {
    pub v_step_mps: Option<f64>,
    pub t_step_s: Option<f64>,
    pub t_min_s: Option<f64>,
    pub t_max_s: Option<f64>,
    pub a_candidates: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct CaccSection {
    pub tau_s: Option<f64>,
    pub standstill_m: Option<f64>,
    pub headway_s: Option<f64>,
    pub kp: Option<f64>,
    pub kd: Option<f64>,
    pub ka: Option<f64>,
    pub dt_sim_s: Option<f64>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct StrategySection {
    pub condition2_threshold: Option<f64>,
    pub v_des_mps: Option<f64>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct EnergySection {
    pub recuperation_convention: Option<RecuperationConvention>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VehicleClassSection {
    pub class: VehicleClass,
    pub mass_kg: f64,
    pub drag_coeff: f64,
    pub frontal_area_m2: f64,
    pub air_density_kg_m3: f64,
    pub rolling_friction_coeff: f64,
    pub wheel_radius_m: f64,
    pub gear_ratio: f64,
    pub drivetrain_eff: f64,
    pub recuperation_eff: f64,
    #[serde(default)]
    pub road_grade_rad: f64,
    pub accel_min_mps2: f64,
    pub accel_max_mps2: f64,
    pub length_m: f64,
    /// Path to the motor map CSV, relative to the scenario file.
    pub motor_map: PathBuf,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PlatoonSection {
    pub vehicles: Vec<String>,
}

impl ScenarioFile {
    pub fn resolve(self, base_dir: &Path) -> Result<Scenario> {
        let route = Route {
            length_m: self.route.length_m,
            speed_limit_mps: self.route.speed_limit_mps,
            ds_m: self.route.ds_m,
        };
        let signals = self
            .signals
            .iter()
            .map(|s| TrafficSignal::new(s.position_m, s.green_s, s.red_s, s.offset_s))
            .collect::<Result<Vec<_>>>()?;
        let weights = PlannerWeights {
            alpha: self.weights.alpha,
            beta: self.weights.beta,
            gamma: self.weights.gamma,
            p_red: self.weights.p_red,
        };
        let defaults = GridDefaults::default();
        let grid = GridDefaults {
            v_step_mps: self.grid.v_step_mps.unwrap_or(defaults.v_step_mps),
            t_step_s: self.grid.t_step_s.unwrap_or(defaults.t_step_s),
            t_min_s: self.grid.t_min_s.unwrap_or(defaults.t_min_s),
            t_max_s: self.grid.t_max_s.unwrap_or(defaults.t_max_s),
            a_candidates: self.grid.a_candidates,
        };
        let cacc_defaults = CaccParams::default();
        let cacc = CaccParams {
            tau_s: self.cacc.tau_s.unwrap_or(cacc_defaults.tau_s),
            spacing: SpacingPolicy {
                standstill_m: self
                    .cacc
                    .standstill_m
                    .unwrap_or(cacc_defaults.spacing.standstill_m),
                headway_s: self
                    .cacc
                    .headway_s
                    .unwrap_or(cacc_defaults.spacing.headway_s),
            },
            gains: CaccGains {
                kp: self.cacc.kp.unwrap_or(cacc_defaults.gains.kp),
                kd: self.cacc.kd.unwrap_or(cacc_defaults.gains.kd),
                ka: self.cacc.ka.unwrap_or(cacc_defaults.gains.ka),
            },
            dt_sim_s: self.cacc.dt_sim_s.unwrap_or(cacc_defaults.dt_sim_s),
        };
        let convention = self.energy.recuperation_convention.unwrap_or_default();

        let mut classes = BTreeMap::new();
        for (name, section) in self.vehicle_class {
            let map_path = if section.motor_map.is_absolute() {
                section.motor_map.clone()
            } else {
                base_dir.join(&section.motor_map)
            };
            let motor_map = MotorMap::from_csv(&map_path)?;
            classes.insert(
                name,
                VehicleParams {
                    mass_kg: section.mass_kg,
                    drag_coeff: section.drag_coeff,
                    frontal_area_m2: section.frontal_area_m2,
                    air_density_kg_m3: section.air_density_kg_m3,
                    rolling_friction_coeff: section.rolling_friction_coeff,
                    wheel_radius_m: section.wheel_radius_m,
                    gear_ratio: section.gear_ratio,
                    drivetrain_eff: section.drivetrain_eff,
                    recuperation_eff: section.recuperation_eff,
                    road_grade_rad: section.road_grade_rad,
                    accel_min_mps2: section.accel_min_mps2,
                    accel_max_mps2: section.accel_max_mps2,
                    length_m: section.length_m,
                    motor_map,
                    class: section.class,
                    recuperation_convention: convention,
                },
            );
        }

        Ok(Scenario {
            route,
            signals,
            weights,
            grid,
            cacc,
            condition2_threshold: self.strategy.condition2_threshold.unwrap_or(0.80),
            v_des_mps: self.strategy.v_des_mps,
            classes,
            platoon: self.platoon.vehicles,
        })
    }
}

//! Longitudinal vehicle model: resistance, torque, wheel power and per-step
//! electric energy with motor-map efficiency.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::motor_map::MotorMap;

pub const GRAVITY_MPS2: f64 = 9.81;
const WH_PER_JOULE_SECONDS: f64 = 3600.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VehicleClass {
    Light,
    Heavy,
}

impl std::fmt::Display for VehicleClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            VehicleClass::Light => write!(f, "light"),
            VehicleClass::Heavy => write!(f, "heavy"),
        }
    }
}

/// How recovered braking energy is scaled by the recuperation efficiency.
///
/// `Multiply` charges the battery with `P * dt * eta_re` (recovered energy can
/// never exceed the mechanical braking energy). `DivideAsPrinted` divides
/// instead, mirroring a common but unphysical notation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecuperationConvention {
    #[default]
    Multiply,
    DivideAsPrinted,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VehicleParams {
    pub mass_kg: f64,
    pub drag_coeff: f64,
    pub frontal_area_m2: f64,
    pub air_density_kg_m3: f64,
    pub rolling_friction_coeff: f64,
    pub wheel_radius_m: f64,
    pub gear_ratio: f64,
    pub drivetrain_eff: f64,
    pub recuperation_eff: f64,
    pub road_grade_rad: f64,
    pub accel_min_mps2: f64,
    pub accel_max_mps2: f64,
    pub length_m: f64,
    pub motor_map: MotorMap,
    pub class: VehicleClass,
    pub recuperation_convention: RecuperationConvention,
}

/// Electric energy of one step plus the motor efficiency that produced it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepEnergy {
    pub energy_wh: f64,
    /// Motor efficiency at (|torque|, rotation speed) for this step; defined
    /// for braking steps as well so the efficiency ledger has no holes.
    pub eta_tr: f64,
    /// True when wheel power was non-negative (traction branch).
    pub traction: bool,
}

impl VehicleParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            (self.mass_kg, "mass_kg"),
            (self.frontal_area_m2, "frontal_area_m2"),
            (self.wheel_radius_m, "wheel_radius_m"),
            (self.gear_ratio, "gear_ratio"),
            (self.length_m, "length_m"),
        ];
        for (value, name) in positive {
            if !(value > 0.0) {
                return Err(Error::Validation(format!("{name} must be positive")));
            }
        }
        for (value, name) in [
            (self.drivetrain_eff, "drivetrain_eff"),
            (self.recuperation_eff, "recuperation_eff"),
        ] {
            if !(value > 0.0 && value <= 1.0) {
                return Err(Error::Validation(format!("{name} must lie in (0, 1]")));
            }
        }
        if !(self.accel_min_mps2 < 0.0 && self.accel_max_mps2 > 0.0) {
            return Err(Error::Validation(
                "acceleration limits must straddle zero".to_string(),
            ));
        }
        Ok(())
    }

    /// Aerodynamic + rolling + grade resistance at speed `v`.
    pub fn total_resistance(&self, v: f64) -> Result<f64> {
        if v < 0.0 {
            return Err(Error::Domain(format!("resistance query at v={v}")));
        }
        let aero = 0.5 * self.drag_coeff * self.frontal_area_m2 * self.air_density_kg_m3 * v * v;
        let rolling =
            self.rolling_friction_coeff * self.mass_kg * GRAVITY_MPS2 * self.road_grade_rad.cos();
        let grade = self.mass_kg * GRAVITY_MPS2 * self.road_grade_rad.sin();
        Ok(aero + rolling + grade)
    }

    /// Motor torque needed to hold acceleration `a` at speed `v`.
    pub fn required_torque(&self, v: f64, a: f64) -> Result<f64> {
        let resistance = self.total_resistance(v)?;
        Ok(self.wheel_radius_m / (self.gear_ratio * self.drivetrain_eff)
            * (resistance + self.mass_kg * a))
    }

    /// Motor rotational speed for road speed `v`.
    pub fn motor_speed(&self, v: f64) -> Result<f64> {
        if v < 0.0 {
            return Err(Error::Domain(format!("motor speed query at v={v}")));
        }
        Ok(v * self.gear_ratio / self.wheel_radius_m)
    }

    /// Mechanical power at the wheels; negative while braking.
    pub fn wheel_power(&self, v: f64, a: f64) -> Result<f64> {
        let resistance = self.total_resistance(v)?;
        Ok((self.mass_kg * a + resistance) * v)
    }

    /// Electric energy over `dt` seconds at entry speed `v` and acceleration
    /// `a`. Positive means consumed, negative means recovered.
    pub fn step_energy(&self, v: f64, a: f64, dt: f64) -> Result<StepEnergy> {
        if !(dt > 0.0) {
            return Err(Error::Domain(format!("step duration must be positive: {dt}")));
        }
        let power = self.wheel_power(v, a)?;
        let torque = self.required_torque(v, a)?;
        let speed = self.motor_speed(v)?;
        let eta_tr = self.motor_map.efficiency_at(torque, speed);
        let mech_wh = power * dt / WH_PER_JOULE_SECONDS;
        let (energy_wh, traction) = if power >= 0.0 {
            (mech_wh / eta_tr, true)
        } else {
            let e = match self.recuperation_convention {
                RecuperationConvention::Multiply => mech_wh * self.recuperation_eff,
                RecuperationConvention::DivideAsPrinted => mech_wh / self.recuperation_eff,
            };
            (e, false)
        };
        Ok(StepEnergy {
            energy_wh,
            eta_tr,
            traction,
        })
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use proptest::prelude::*;

    pub(crate) fn flat_map(eta: f64) -> MotorMap {
        MotorMap::new(
            vec![0.0, 10_000.0],
            vec![0.0, 10_000.0],
            vec![eta, eta, eta, eta],
        )
        .unwrap()
    }

    pub(crate) fn light_vehicle() -> VehicleParams {
        VehicleParams {
            mass_kg: 1400.0,
            drag_coeff: 0.36,
            frontal_area_m2: 4.5,
            air_density_kg_m3: 1.2,
            rolling_friction_coeff: 0.008,
            wheel_radius_m: 0.282,
            gear_ratio: 3.92,
            drivetrain_eff: 0.95,
            recuperation_eff: 0.90,
            road_grade_rad: 0.0,
            accel_min_mps2: -4.0,
            accel_max_mps2: 4.0,
            length_m: 5.0,
            motor_map: flat_map(0.9),
            class: VehicleClass::Light,
            recuperation_convention: RecuperationConvention::Multiply,
        }
    }

    pub(crate) fn heavy_vehicle() -> VehicleParams {
        VehicleParams {
            mass_kg: 1900.0,
            drag_coeff: 0.7,
            frontal_area_m2: 8.5,
            accel_min_mps2: -2.5,
            accel_max_mps2: 2.5,
            length_m: 12.0,
            class: VehicleClass::Heavy,
            ..light_vehicle()
        }
    }

    #[test]
    fn resistance_at_rest_is_rolling_only() {
        let p = light_vehicle();
        assert!((p.total_resistance(0.0).unwrap() - 109.872).abs() < 1e-9);
    }

    #[test]
    fn resistance_at_10_mps() {
        let p = light_vehicle();
        assert!((p.total_resistance(10.0).unwrap() - 207.072).abs() < 1e-9);
    }

    #[test]
    fn resistance_vanishes_without_sources() {
        let p = VehicleParams {
            drag_coeff: 0.0,
            rolling_friction_coeff: 0.0,
            ..light_vehicle()
        };
        assert_eq!(p.total_resistance(23.4).unwrap(), 0.0);
    }

    #[test]
    fn negative_speed_is_domain_error() {
        let p = light_vehicle();
        assert!(matches!(p.total_resistance(-1.0), Err(Error::Domain(_))));
        assert!(matches!(p.motor_speed(-0.1), Err(Error::Domain(_))));
    }

    #[test]
    fn torque_at_rest() {
        let p = light_vehicle();
        let t = p.required_torque(0.0, 0.0).unwrap();
        let expected = 0.282 / (3.92 * 0.95) * 109.872;
        assert!((t - expected).abs() < 1e-12);
        assert!((t - 8.320).abs() < 1e-3);
    }

    #[test]
    fn torque_zero_when_traction_cancels_resistance() {
        let p = light_vehicle();
        let a = -109.872 / 1400.0;
        assert!(p.required_torque(0.0, a).unwrap().abs() < 1e-12);
    }

    #[test]
    fn heavy_needs_more_torque_than_light() {
        let light = light_vehicle();
        let heavy = heavy_vehicle();
        assert!(
            heavy.required_torque(10.0, 1.0).unwrap() > light.required_torque(10.0, 1.0).unwrap()
        );
    }

    #[test]
    fn motor_speed_examples() {
        let p = light_vehicle();
        assert_eq!(p.motor_speed(0.0).unwrap(), 0.0);
        assert!((p.motor_speed(10.0).unwrap() - 139.00709).abs() < 1e-4);
        let double = p.motor_speed(7.0).unwrap() * 2.0;
        assert!((p.motor_speed(14.0).unwrap() - double).abs() < 1e-12);
    }

    #[test]
    fn wheel_power_examples() {
        let p = light_vehicle();
        assert_eq!(p.wheel_power(0.0, 3.0).unwrap(), 0.0);
        let cruising = p.wheel_power(16.67, 0.0).unwrap();
        assert!((cruising - 6334.0).abs() / 6334.0 < 5e-4);
        let braking = p.wheel_power(10.0, -2.0).unwrap();
        assert!((braking - (-25929.28)).abs() < 0.01);
    }

    #[test]
    fn step_energy_branches() {
        let p = light_vehicle();
        let idle = p.step_energy(0.0, 0.0, 1.0).unwrap();
        assert_eq!(idle.energy_wh, 0.0);
        assert!(idle.traction);

        // contrived vehicle so wheel power is exactly +/-3600 W
        let bare = VehicleParams {
            mass_kg: 1.0,
            drag_coeff: 0.0,
            rolling_friction_coeff: 0.0,
            ..light_vehicle()
        };
        let consumed = bare.step_energy(1.0, 3600.0, 1.0).unwrap();
        assert!((consumed.energy_wh - 1.0 / 0.9).abs() < 1e-12);
        assert!((consumed.eta_tr - 0.9).abs() < 1e-12);
        assert!(consumed.traction);

        let recovered = bare.step_energy(1.0, -3600.0, 1.0).unwrap();
        assert!((recovered.energy_wh - (-0.9)).abs() < 1e-12);
        assert!(!recovered.traction);

        let printed = VehicleParams {
            recuperation_convention: RecuperationConvention::DivideAsPrinted,
            ..bare
        };
        let divided = printed.step_energy(1.0, -3600.0, 1.0).unwrap();
        assert!((divided.energy_wh - (-1.0 / 0.9)).abs() < 1e-12);
    }

    #[test]
    fn non_positive_duration_rejected() {
        let p = light_vehicle();
        assert!(matches!(p.step_energy(1.0, 0.0, 0.0), Err(Error::Domain(_))));
        assert!(matches!(p.step_energy(1.0, 0.0, -1.0), Err(Error::Domain(_))));
    }

    proptest! {
        #[test]
        fn resistance_strictly_increases_with_speed(v in 0.0f64..40.0, dv in 0.01f64..5.0) {
            let p = light_vehicle();
            prop_assert!(p.total_resistance(v + dv).unwrap() > p.total_resistance(v).unwrap());
        }

        #[test]
        fn torque_is_affine_in_acceleration(v in 0.0f64..30.0, a in -4.0f64..4.0, da in 0.1f64..2.0) {
            let p = light_vehicle();
            let slope = (p.required_torque(v, a + da).unwrap() - p.required_torque(v, a).unwrap()) / da;
            let expected = p.wheel_radius_m * p.mass_kg / (p.gear_ratio * p.drivetrain_eff);
            prop_assert!((slope - expected).abs() < 1e-6);
        }

        #[test]
        fn traction_energy_never_below_mechanical(v in 0.0f64..30.0, a in 0.0f64..4.0, dt in 0.01f64..2.0) {
            let p = light_vehicle();
            let step = p.step_energy(v, a, dt).unwrap();
            let mech = p.wheel_power(v, a).unwrap() * dt / 3600.0;
            prop_assert!(step.energy_wh >= mech - 1e-12);
        }

        #[test]
        fn recovered_energy_never_exceeds_mechanical(v in 1.0f64..30.0, a in -4.0f64..-0.5, dt in 0.01f64..2.0) {
            let p = light_vehicle();
            let power = p.wheel_power(v, a).unwrap();
            prop_assume!(power < 0.0);
            let step = p.step_energy(v, a, dt).unwrap();
            prop_assert!(step.energy_wh <= 0.0);
            prop_assert!(step.energy_wh.abs() <= power.abs() * dt / 3600.0 + 1e-12);
        }
    }
}

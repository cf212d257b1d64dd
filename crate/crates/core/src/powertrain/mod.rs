//! Longitudinal vehicle dynamics and the quasi-steady-state EV powertrain.
//!
//! The host car is a point mass driven by a motor force `F_m` (negative when
//! regenerating) and a friction brake `F_b`, resisted by aerodynamic drag and
//! the combined rolling/grade load. Electrical power is a six-term polynomial
//! in speed and motor force; the admissible motor force is bounded by a
//! plateau at low speed and a constant-power hyperbola above the knee.

mod fit;
pub mod synthetic;

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use fit::{
    fit_envelope, fit_motor_model, fit_power_map, load_envelope, load_motor_map, rrmse,
    save_envelope, save_motor_map, EnvelopeFit, EnvelopeSample, MotorFit, MotorMapSample,
    PowerFit,
};

/// Physical constants of the host vehicle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct VehicleParams {
    /// Vehicle mass [kg].
    pub mass: f64,
    /// Aerodynamic drag coefficient [-].
    pub drag_coeff: f64,
    /// Frontal area [m²].
    pub frontal_area: f64,
    /// Air density [kg/m³].
    pub air_density: f64,
    /// Rolling-resistance coefficient [-].
    pub rolling_coeff: f64,
    /// Gravitational acceleration [m/s²].
    pub gravity: f64,
    /// Final reduction gear ratio [-].
    pub gear_ratio: f64,
    /// Wheel radius [m].
    pub wheel_radius: f64,
    /// Constant road slope [rad].
    pub slope: f64,
}

impl Default for VehicleParams {
    fn default() -> Self {
        Self {
            mass: 1600.0,
            drag_coeff: 0.373,
            frontal_area: 2.0107,
            air_density: 1.2,
            rolling_coeff: 0.0088,
            gravity: 9.81,
            gear_ratio: 7.4,
            wheel_radius: 0.326,
            slope: 0.0,
        }
    }
}

impl VehicleParams {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("mass", self.mass),
            ("drag_coeff", self.drag_coeff),
            ("frontal_area", self.frontal_area),
            ("air_density", self.air_density),
            ("rolling_coeff", self.rolling_coeff),
            ("gravity", self.gravity),
            ("gear_ratio", self.gear_ratio),
            ("wheel_radius", self.wheel_radius),
            ("slope", self.slope),
        ];
        if let Some((name, _)) = fields.iter().find(|(_, x)| !x.is_finite()) {
            return Err(Error::invalid(format!("vehicle parameter {name} is not finite")));
        }
        let positive = [
            ("mass", self.mass),
            ("frontal_area", self.frontal_area),
            ("air_density", self.air_density),
            ("gear_ratio", self.gear_ratio),
            ("wheel_radius", self.wheel_radius),
        ];
        if let Some((name, x)) = positive.iter().find(|(_, x)| *x <= 0.0) {
            return Err(Error::invalid(format!("vehicle parameter {name} must be > 0, got {x}")));
        }
        if self.drag_coeff < 0.0 || self.rolling_coeff < 0.0 {
            return Err(Error::invalid("drag and rolling coefficients must be >= 0"));
        }
        Ok(())
    }

    /// Aerodynamic drag `½ ρ C_d A v²` [N].
    #[inline]
    pub fn aero_drag(&self, v: f64) -> f64 {
        0.5 * self.air_density * self.drag_coeff * self.frontal_area * v * v
    }

    /// Rolling resistance plus grade force `m g (sin α + C_r cos α)` [N].
    #[inline]
    pub fn road_load(&self) -> f64 {
        self.mass * self.gravity * (self.slope.sin() + self.rolling_coeff * self.slope.cos())
    }

    /// Net longitudinal acceleration without any feasibility check [m/s²].
    #[inline]
    pub fn net_acceleration(&self, v: f64, f_m: f64, f_b: f64) -> f64 {
        (f_m - f_b - self.aero_drag(v) - self.road_load()) / self.mass
    }

    /// Motor speed [rad/s] at vehicle speed `v`.
    pub fn motor_speed(&self, v: f64) -> f64 {
        v * self.gear_ratio / self.wheel_radius
    }

    /// Motor torque [N·m] delivering wheel force `f_m`.
    pub fn motor_torque(&self, f_m: f64) -> f64 {
        f_m * self.wheel_radius / self.gear_ratio
    }
}

/// Checked drag force; rejects negative or non-finite speeds.
pub fn aero_drag(params: &VehicleParams, v: f64) -> Result<f64> {
    check_speed(v)?;
    Ok(params.aero_drag(v))
}

pub fn road_load(params: &VehicleParams) -> f64 {
    params.road_load()
}

/// Acceleration from Newton's law after checking the motor envelope, brake
/// sign and the no-simultaneous-traction-and-braking rule.
pub fn acceleration(
    params: &VehicleParams,
    model: &MotorModel,
    v: f64,
    f_m: f64,
    f_b: f64,
) -> Result<f64> {
    check_speed(v)?;
    let (f_min, f_max) = model.force_limits(v);
    if !(f_min..=f_max).contains(&f_m) {
        return Err(Error::ConstraintViolation(format!(
            "motor force {f_m} N outside [{f_min}, {f_max}] at v = {v} m/s"
        )));
    }
    if !(f_b >= 0.0) {
        return Err(Error::ConstraintViolation(format!("brake force {f_b} N is negative")));
    }
    if f_m * f_b > 0.0 {
        return Err(Error::ConstraintViolation(format!(
            "simultaneous traction {f_m} N and braking {f_b} N"
        )));
    }
    Ok(params.net_acceleration(v, f_m, f_b))
}

pub fn motor_power(model: &MotorModel, v: f64, f_m: f64) -> f64 {
    model.power(v, f_m)
}

pub fn force_limits(model: &MotorModel, v: f64) -> (f64, f64) {
    model.force_limits(v)
}

fn check_speed(v: f64) -> Result<()> {
    if !v.is_finite() {
        return Err(Error::invalid(format!("speed {v} is not finite")));
    }
    if v < 0.0 {
        return Err(Error::invalid(format!("speed {v} is negative")));
    }
    Ok(())
}

/// Polynomial power map plus the speed-dependent force envelope.
///
/// The JSON form is `{"c":[c1..c6],"b0":..,"b1":..,"f_hi":..,"f_lo":..,"v_eps":..}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MotorModel {
    /// Coefficients of `v, v³, v⁵, v·F, v·F², v³·F`.
    pub c: [f64; 6],
    /// Constant term of the constant-power envelope [N].
    pub b0: f64,
    /// Hyperbolic term of the envelope [N·m/s], i.e. the power limit.
    pub b1: f64,
    /// Low-speed traction plateau [N].
    pub f_hi: f64,
    /// Low-speed regeneration plateau [N], negative.
    pub f_lo: f64,
    /// Speed floor used when evaluating the hyperbola [m/s].
    pub v_eps: f64,
}

pub const DEFAULT_F_HI: f64 = 5000.0;
pub const DEFAULT_F_LO: f64 = -5000.0;
pub const DEFAULT_B0: f64 = 0.0;
pub const DEFAULT_B1: f64 = 80_000.0;
pub const DEFAULT_V_EPS: f64 = 0.1;

const DEFAULT_MODEL_JSON: &str = include_str!("../../data/default_motor.json");

impl Default for MotorModel {
    /// The canonical model fitted to the bundled synthetic motor map.
    fn default() -> Self {
        serde_json::from_str(DEFAULT_MODEL_JSON).expect("bundled default motor model is valid JSON")
    }
}

impl MotorModel {
    pub fn new(c: [f64; 6], b0: f64, b1: f64, f_hi: f64, f_lo: f64, v_eps: f64) -> Result<Self> {
        let model = Self {
            c,
            b0,
            b1,
            f_hi,
            f_lo,
            v_eps,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<()> {
        if self.c.iter().any(|c| !c.is_finite()) {
            return Err(Error::invalid("power-map coefficients must be finite"));
        }
        if !(self.f_lo < 0.0 && 0.0 < self.f_hi) {
            return Err(Error::invalid(format!(
                "envelope plateaus must satisfy f_lo < 0 < f_hi, got {} / {}",
                self.f_lo, self.f_hi
            )));
        }
        if !(self.b0 >= 0.0 && self.b1 > 0.0 && self.v_eps > 0.0) {
            return Err(Error::invalid("envelope requires b0 >= 0, b1 > 0 and v_eps > 0"));
        }
        if !(self.b0.is_finite() && self.b1.is_finite() && self.f_hi.is_finite() && self.f_lo.is_finite() && self.v_eps.is_finite()) {
            return Err(Error::invalid("envelope parameters must be finite"));
        }
        Ok(())
    }

    /// Electrical power [W]; negative while regenerating.
    #[inline]
    pub fn power(&self, v: f64, f_m: f64) -> f64 {
        let [c1, c2, c3, c4, c5, c6] = self.c;
        let v2 = v * v;
        v * (c1 + c2 * v2 + c3 * v2 * v2 + c4 * f_m + c5 * f_m * f_m + c6 * v2 * f_m)
    }

    /// `(F_min(v), F_max(v))` [N].
    #[inline]
    pub fn force_limits(&self, v: f64) -> (f64, f64) {
        let hyper = self.b0 + self.b1 / v.max(self.v_eps);
        (self.f_lo.max(-hyper), self.f_hi.min(hyper))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let model: Self = serde_json::from_str(&text)?;
        model.validate()?;
        Ok(model)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }
}

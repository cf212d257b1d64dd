//! Deterministic synthetic motor map used in place of proprietary
//! measurements: constant-efficiency traction and regeneration plus smooth
//! speed-dependent mechanical and copper losses, with seeded measurement
//! scatter. Fitting it reproduces the bundled default [`MotorModel`].

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::{
    EnvelopeSample, MotorMapSample, MotorModel, DEFAULT_B0, DEFAULT_B1, DEFAULT_F_HI, DEFAULT_F_LO,
    DEFAULT_V_EPS,
};

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticMotorMap {
    /// Battery-to-wheel efficiency while driving.
    pub eta_traction: f64,
    /// Wheel-to-battery efficiency while regenerating.
    pub eta_regen: f64,
    /// Bearing friction [W per m/s].
    pub friction: f64,
    /// Windage [W per (m/s)³].
    pub windage: f64,
    /// Copper loss [W per N²] at full speed weighting.
    pub copper: f64,
    /// Speed [m/s] at which copper losses reach half weight.
    pub copper_knee: f64,
    /// Relative standard deviation of the measurement scatter.
    pub noise_rel: f64,
    pub speed_step: f64,
    pub v_max: f64,
    pub force_levels: usize,
    pub seed: u64,
}

impl Default for SyntheticMotorMap {
    fn default() -> Self {
        Self {
            eta_traction: 0.9,
            eta_regen: 0.9,
            friction: 20.0,
            windage: 0.005,
            copper: 1.2e-4,
            copper_knee: 5.0,
            noise_rel: 0.02,
            speed_step: 1.0,
            v_max: 40.0,
            force_levels: 21,
            seed: 7,
        }
    }
}

impl SyntheticMotorMap {
    /// The envelope the generator's motor obeys.
    pub fn envelope(&self) -> MotorModel {
        MotorModel {
            c: [0.0; 6],
            b0: DEFAULT_B0,
            b1: DEFAULT_B1,
            f_hi: DEFAULT_F_HI,
            f_lo: DEFAULT_F_LO,
            v_eps: DEFAULT_V_EPS,
        }
    }

    /// Noise-free electrical power [W].
    pub fn true_power(&self, v: f64, f_m: f64) -> f64 {
        let mech = f_m * v;
        let elec = if mech >= 0.0 {
            mech / self.eta_traction
        } else {
            mech * self.eta_regen
        };
        let losses = self.friction * v
            + self.windage * v * v * v
            + self.copper * f_m * f_m * v / (v + self.copper_knee);
        elec + losses
    }

    /// Power-map samples on a speed × force grid spanning the envelope.
    pub fn samples(&self) -> Vec<MotorMapSample> {
        let env = self.envelope();
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let noise = Normal::new(0.0, self.noise_rel).expect("finite noise level");
        let n_v = (self.v_max / self.speed_step).round() as usize;
        let mut out = Vec::with_capacity((n_v + 1) * self.force_levels);
        for i in 0..=n_v {
            let v = i as f64 * self.speed_step;
            let (lo, hi) = env.force_limits(v);
            for j in 0..self.force_levels {
                let f_m = lo + (hi - lo) * j as f64 / (self.force_levels - 1) as f64;
                let p = self.true_power(v, f_m) * (1.0 + noise.sample(&mut rng));
                out.push(MotorMapSample { v, f_m, p });
            }
        }
        out
    }

    /// Maximum-force curve sampled every half speed step.
    pub fn envelope_samples(&self) -> Vec<EnvelopeSample> {
        let env = self.envelope();
        let n = (2.0 * self.v_max / self.speed_step).round() as usize;
        (1..=n)
            .map(|i| {
                let v = 0.5 * self.speed_step * i as f64;
                EnvelopeSample { v, f_max: env.force_limits(v).1 }
            })
            .collect()
    }
}

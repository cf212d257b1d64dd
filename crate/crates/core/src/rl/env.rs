//! The car-following task as an episodic environment.

use crate::cycles::DrivingCycle;
use crate::error::{Error, Result};
use crate::harness::cycle_on_grid;
use crate::ocp::{Control, OcpSpec, State};

/// Gap and speed scales of the observation.
pub const D_SCALE: f64 = 200.0;
pub const V_SCALE: f64 = 40.0;

/// Normalized `(d/200, v/40, v_f/40)`.
pub type Observation = [f64; 3];

pub fn observe(s: &State) -> Observation {
    [s.d / D_SCALE, s.v / V_SCALE, s.v_f / V_SCALE]
}

/// Maps `u ∈ [-1, 1]` to a force pair. Positive `u` is a fraction of the
/// traction limit; negative `u` is a fraction of the total deceleration
/// force, filled by regeneration first and the friction brake after.
pub fn action_to_control(spec: &OcpSpec, v: f64, u: f64) -> Control {
    let u = u.clamp(-1.0, 1.0);
    let (lo, hi) = spec.model.force_limits(v);
    if u >= 0.0 {
        Control::new(u * hi, 0.0)
    } else {
        let demand = u * (lo.abs() + spec.f_b_max);
        let f_m = demand.max(lo);
        // the split is exact in real arithmetic; rounding may overshoot the cap
        Control::new(f_m, (f_m - demand).min(spec.f_b_max))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RewardConfig {
    /// Divisor of the power term; 1000 makes it kW.
    pub power_scale: f64,
    pub gap_bonus: f64,
    pub split_bonus: f64,
}

impl Default for RewardConfig {
    fn default() -> Self {
        Self {
            power_scale: 1000.0,
            gap_bonus: 1000.0,
            split_bonus: 1000.0,
        }
    }
}

/// Reward of one transition and whether it ends the episode (gap outside
/// the open interval `(0, 2000)`).
pub fn reward(spec: &OcpSpec, cfg: &RewardConfig, s: &State, u: &Control, s_next: &State) -> (f64, bool) {
    let gap_ok = spec.d_min < s_next.d && s_next.d < spec.d_max;
    let mut r = -spec.step_power(s, u) / cfg.power_scale;
    if gap_ok {
        r += cfg.gap_bonus;
    }
    if u.f_m * u.f_b <= 0.0 {
        r += cfg.split_bonus;
    }
    (r, !gap_ok)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Outcome {
    pub obs: Observation,
    pub reward: f64,
    /// The episode is over, by gap violation or at the end of the cycle.
    pub done: bool,
    /// The episode ended on a gap violation. Bootstrapping stops only here;
    /// the end of the cycle is a time limit, not a terminal state.
    pub terminal: bool,
}

/// One host vehicle behind a scripted front vehicle.
#[derive(Debug, Clone)]
pub struct EcoAccEnv {
    spec: OcpSpec,
    rewards: RewardConfig,
    front: Vec<f64>,
    k: usize,
    state: State,
    done: bool,
    energy: f64,
}

impl EcoAccEnv {
    pub fn new(spec: OcpSpec, cycle: &DrivingCycle, rewards: RewardConfig) -> Result<Self> {
        spec.validate()?;
        let front = cycle_on_grid(&spec, cycle)?.speeds().to_vec();
        let state = spec.initial_state(front[0]);
        Ok(Self {
            spec,
            rewards,
            front,
            k: 0,
            state,
            done: false,
            energy: 0.0,
        })
    }

    pub fn spec(&self) -> &OcpSpec {
        &self.spec
    }

    pub fn reset(&mut self) -> Observation {
        self.k = 0;
        self.state = self.spec.initial_state(self.front[0]);
        self.done = false;
        self.energy = 0.0;
        observe(&self.state)
    }

    pub fn state(&self) -> State {
        self.state
    }

    pub fn steps_taken(&self) -> usize {
        self.k
    }

    /// Steps in a complete episode.
    pub fn horizon(&self) -> usize {
        self.front.len() - 1
    }

    pub fn is_done(&self) -> bool {
        self.done
    }

    /// Electrical energy used so far [J].
    pub fn energy(&self) -> f64 {
        self.energy
    }

    pub fn step(&mut self, u: f64) -> Result<Outcome> {
        if self.done {
            return Err(Error::Protocol("step called on a finished episode; call reset first".into()));
        }
        if !u.is_finite() {
            return Err(Error::invalid(format!("action {u} is not finite")));
        }
        let s = self.state;
        let control = action_to_control(&self.spec, s.v, u);
        let next = self.spec.step_unchecked(&s, &control, self.front[self.k + 1]).next;
        let (reward, terminal) = reward(&self.spec, &self.rewards, &s, &control, &next);
        self.energy += self.spec.stage_cost(&s, &control);
        self.k += 1;
        self.state = next;
        self.done = terminal || self.k == self.horizon();
        Ok(Outcome {
            obs: observe(&next),
            reward,
            done: self.done,
            terminal,
        })
    }
}

pub fn env_step(env: &mut EcoAccEnv, u: f64) -> Result<Outcome> {
    env.step(u)
}

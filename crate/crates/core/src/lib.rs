//! Energy-optimal car-following ("Eco-ACC") for a battery-electric vehicle.
//!
//! The crate bundles a longitudinal EV simulator with a polynomial motor
//! power map, the constrained car-following control problem, and five
//! controllers that solve it:
//!
//! * [`dp`]: a value table computed by value iteration over a quantized
//!   `(gap, speed, front speed)` grid, driven online by one-step and
//!   two-step lookahead policies,
//! * [`adp`]: a neural surrogate of that table used as the terminal value of
//!   a receding-horizon two-step search,
//! * [`rl`]: model-free DQN and DDPG agents trained against the same
//!   simulator.
//!
//! [`harness`] runs any controller behind a scripted front vehicle and
//! reports travel distance, net energy and km/kWh efficiency relative to
//! the front vehicle. Runnable walkthroughs for each capability live in
//! the crate's `examples/` directory.

pub mod adp;
pub mod cli;
pub mod config;
mod csvio;
pub mod cycles;
pub mod dp;
pub mod error;
pub mod harness;
pub mod nn;
pub mod ocp;
pub mod powertrain;
pub mod rl;

pub use error::{Error, Result};

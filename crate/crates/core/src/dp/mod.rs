//! Dynamic programming on a quantized state space: value iteration for the
//! discounted cost-to-go, and one- and two-step lookahead policies that use
//! it as a terminal cost.

mod backward;
mod forward;
mod grid;
pub mod io;

pub use backward::{bellman_residual, dp_backward, dp_backward_traced, BackwardOptions};
pub use forward::{
    dp_forward_one_step, dp_forward_two_step, extrapolate_front, one_step_search, two_step_search, Decision,
    TerminalValue,
};
pub use grid::{interpolate_value, ControlGrid, Grid, ValueTable};

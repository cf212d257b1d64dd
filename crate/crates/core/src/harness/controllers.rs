use crate::adp::ValueSurrogate;
use crate::dp::{one_step_search, two_step_search, ControlGrid, ValueTable};
use crate::ocp::{Control, OcpSpec, State};

/// What a controller sees at step `k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepContext {
    pub k: usize,
    pub t: f64,
    pub state: State,
    /// Front speed one step earlier (equal to the current one at k = 0).
    pub v_f_prev: f64,
    /// Front speed at the next sample, as scripted by the cycle.
    pub v_f_next: f64,
}

pub trait Controller {
    fn name(&self) -> &str;

    fn reset(&mut self) {}

    fn control(&mut self, spec: &OcpSpec, ctx: &StepContext) -> Control;
}

impl<C: Controller + ?Sized> Controller for Box<C> {
    fn name(&self) -> &str {
        (**self).name()
    }

    fn reset(&mut self) {
        (**self).reset()
    }

    fn control(&mut self, spec: &OcpSpec, ctx: &StepContext) -> Control {
        (**self).control(spec, ctx)
    }
}

/// One-step lookahead on the value table with the measured next front speed.
pub struct DpOneStep<'a> {
    pub table: &'a ValueTable,
    pub controls: &'a ControlGrid,
}

impl Controller for DpOneStep<'_> {
    fn name(&self) -> &str {
        "dp1"
    }

    fn control(&mut self, spec: &OcpSpec, ctx: &StepContext) -> Control {
        one_step_search(spec, self.table, self.table.discount, self.controls, &ctx.state, ctx.v_f_next).control
    }
}

/// Two-step lookahead on the value table with extrapolated front speeds.
pub struct DpTwoStep<'a> {
    pub table: &'a ValueTable,
    pub controls: &'a ControlGrid,
}

impl Controller for DpTwoStep<'_> {
    fn name(&self) -> &str {
        "dp2"
    }

    fn control(&mut self, spec: &OcpSpec, ctx: &StepContext) -> Control {
        two_step_search(spec, self.table, self.table.discount, self.controls, &ctx.state, ctx.v_f_prev).control
    }
}

/// Two-step lookahead with the neural surrogate as terminal value.
pub struct AdpTwoStep<'a> {
    pub surrogate: &'a ValueSurrogate,
    pub controls: &'a ControlGrid,
}

impl Controller for AdpTwoStep<'_> {
    fn name(&self) -> &str {
        "adp"
    }

    fn control(&mut self, spec: &OcpSpec, ctx: &StepContext) -> Control {
        two_step_search(spec, self.surrogate, self.surrogate.discount, self.controls, &ctx.state, ctx.v_f_prev).control
    }
}

/// Tracks the front vehicle's next speed by inverse dynamics, within the
/// envelope and brake limits.
#[derive(Debug, Clone, Copy, Default)]
pub struct FrontMirror;

/// Force split that moves from `v` to `v_target` in one step, saturated.
pub fn tracking_control(spec: &OcpSpec, v: f64, v_target: f64) -> Control {
    let p = &spec.params;
    let demand = p.mass * (v_target - v) / spec.dt + p.aero_drag(v) + p.road_load();
    let (lo, hi) = spec.model.force_limits(v);
    if demand >= 0.0 {
        Control::new(demand.min(hi), 0.0)
    } else {
        let f_m = demand.max(lo);
        Control::new(f_m, (f_m - demand).min(spec.f_b_max))
    }
}

impl Controller for FrontMirror {
    fn name(&self) -> &str {
        "front-mirror"
    }

    fn control(&mut self, spec: &OcpSpec, ctx: &StepContext) -> Control {
        tracking_control(spec, ctx.state.v, ctx.v_f_next)
    }
}

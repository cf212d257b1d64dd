use std::cmp::Ordering;

use super::grid::{ControlGrid, ValueTable};
use crate::ocp::{Control, OcpSpec, State};

/// Anything that can price a terminal state: the value table or a learned
/// surrogate of it.
pub trait TerminalValue {
    fn terminal_value(&self, s: &State) -> f64;

    /// Batched form; implementations may override for speed.
    fn terminal_values(&self, states: &[State]) -> Vec<f64> {
        states.iter().map(|s| self.terminal_value(s)).collect()
    }
}

impl TerminalValue for ValueTable {
    fn terminal_value(&self, s: &State) -> f64 {
        self.interpolate(s)
    }
}

impl<T: TerminalValue + ?Sized> TerminalValue for &T {
    fn terminal_value(&self, s: &State) -> f64 {
        (**self).terminal_value(s)
    }

    fn terminal_values(&self, states: &[State]) -> Vec<f64> {
        (**self).terminal_values(states)
    }
}

/// Outcome of a lookahead search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Decision {
    pub control: Control,
    /// Predicted successor under the front speed used by the search.
    pub next: State,
    /// Minimized objective [J].
    pub objective: f64,
}

/// Tie-break rank: smaller |F_m|, then smaller F_b.
fn rank(u: &Control) -> (f64, f64) {
    (u.f_m.abs(), u.f_b)
}

fn prefer(objective: f64, key: &[(f64, f64)], best_objective: f64, best_key: &[(f64, f64)]) -> bool {
    match objective.partial_cmp(&best_objective) {
        Some(Ordering::Less) => true,
        Some(Ordering::Equal) => {
            for (a, b) in key.iter().zip(best_key) {
                match a.partial_cmp(b) {
                    Some(Ordering::Less) => return true,
                    Some(Ordering::Greater) => return false,
                    _ => {}
                }
            }
            false
        }
        _ => false,
    }
}

/// Greedy one-step search: `C(u) + penalty(s⁺) + γ V(s⁺)` with the real
/// next front speed.
pub fn one_step_search<V: TerminalValue + ?Sized>(
    spec: &OcpSpec,
    terminal: &V,
    discount: f64,
    controls: &ControlGrid,
    s: &State,
    v_f_next: f64,
) -> Decision {
    let mut best: Option<(Decision, [(f64, f64); 1])> = None;
    for u in controls.feasible(spec, s.v) {
        let next = spec.step_unchecked(s, &u, v_f_next).next;
        let objective = spec.stage_cost(s, &u) + spec.gap_penalty(next.d) + discount * terminal.terminal_value(&next);
        let key = [rank(&u)];
        if best.as_ref().is_none_or(|(b, k)| prefer(objective, &key, b.objective, k)) {
            best = Some((Decision { control: u, next, objective }, key));
        }
    }
    best.expect("coasting is always feasible").0
}

/// Front-speed forecasts one and two steps ahead by linear extrapolation,
/// floored at standstill.
pub fn extrapolate_front(v_f: f64, v_f_prev: f64) -> (f64, f64) {
    ((2.0 * v_f - v_f_prev).max(0.0), (3.0 * v_f - 2.0 * v_f_prev).max(0.0))
}

/// Two-step search over control pairs with extrapolated front speeds:
/// `C(u) + pen(s⁺) + γ(C(u⁺) + pen(s⁺⁺)) + γ² V(s⁺⁺)`. Only the first control
/// is applied.
pub fn two_step_search<V: TerminalValue + ?Sized>(
    spec: &OcpSpec,
    terminal: &V,
    discount: f64,
    controls: &ControlGrid,
    s: &State,
    v_f_prev: f64,
) -> Decision {
    let (v_hat1, v_hat2) = extrapolate_front(s.v_f, v_f_prev);
    // Enumerate every pair first so the terminal values come from one batch.
    let mut pairs = Vec::new();
    let mut leaves = Vec::new();
    for u in controls.feasible(spec, s.v) {
        let s1 = spec.step_unchecked(s, &u, v_hat1).next;
        let first = spec.stage_cost(s, &u) + spec.gap_penalty(s1.d);
        for u1 in controls.feasible(spec, s1.v) {
            let s2 = spec.step_unchecked(&s1, &u1, v_hat2).next;
            let second = spec.stage_cost(&s1, &u1) + spec.gap_penalty(s2.d);
            pairs.push((u, u1, s1, first, second));
            leaves.push(s2);
        }
    }
    let tail = terminal.terminal_values(&leaves);
    let mut best: Option<(Decision, [(f64, f64); 2])> = None;
    for ((u, u1, s1, first, second), v2) in pairs.into_iter().zip(tail) {
        let objective = first + discount * (second + discount * v2);
        let key = [rank(&u), rank(&u1)];
        if best.as_ref().is_none_or(|(b, k)| prefer(objective, &key, b.objective, k)) {
            best = Some((
                Decision {
                    control: u,
                    next: s1,
                    objective,
                },
                key,
            ));
        }
    }
    best.expect("coasting is always feasible").0
}

/// One-step policy against the value table. Returns the control and the
/// successor state.
pub fn dp_forward_one_step(
    spec: &OcpSpec,
    table: &ValueTable,
    controls: &ControlGrid,
    s: &State,
    v_f_next: f64,
) -> (Control, State) {
    let d = one_step_search(spec, table, table.discount, controls, s, v_f_next);
    (d.control, d.next)
}

/// Two-step policy against the value table. The returned successor uses the
/// extrapolated front speed.
pub fn dp_forward_two_step(
    spec: &OcpSpec,
    table: &ValueTable,
    controls: &ControlGrid,
    s: &State,
    v_f_prev: f64,
) -> (Control, State) {
    let d = two_step_search(spec, table, table.discount, controls, s, v_f_prev);
    (d.control, d.next)
}

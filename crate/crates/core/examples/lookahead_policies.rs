//! One-step versus two-step lookahead on the value table: decisions at a
//! few hand-picked states, then both policies behind the highway cycle with
//! a per-step look at where they disagree.
//!
//! ```bash
//! cargo run --release -p ecoacc --example lookahead_policies
//! ```

use ecoacc::cycles::builtin;
use ecoacc::dp::{dp_backward, dp_forward_one_step, dp_forward_two_step, extrapolate_front, BackwardOptions, ControlGrid, Grid};
use ecoacc::harness::{run_episode, trace_energy, DpOneStep, DpTwoStep};
use ecoacc::ocp::{OcpSpec, State};

fn main() -> ecoacc::Result<()> {
    let spec = OcpSpec::default();
    let controls = ControlGrid::default_for(&spec);
    let table = dp_backward(&spec, &Grid::default_for(&spec), &controls, &BackwardOptions::default())?;

    // (state, previous front speed, next front speed)
    let probes = [
        (State::new(50.0, 0.0, 0.0), 0.0, 1.0),
        (State::new(40.0, 20.0, 22.0), 21.0, 22.5),
        (State::new(15.0, 25.0, 18.0), 20.0, 16.0),
        (State::new(1800.0, 10.0, 30.0), 29.5, 30.0),
    ];
    println!("{:>30}  {:>22}  {:>22}", "state (d, v, v_f)", "dp1 (F_m, F_b)", "dp2 (F_m, F_b)");
    for (s, prev, next) in probes {
        let (u1, _) = dp_forward_one_step(&spec, &table, &controls, &s, next);
        let (u2, _) = dp_forward_two_step(&spec, &table, &controls, &s, prev);
        let (h1, h2) = extrapolate_front(s.v_f, prev);
        println!(
            "{:>30}  {:>22}  {:>22}   (dp2 forecasts v_f {h1:.1}, {h2:.1})",
            format!("({:.0}, {:.1}, {:.1})", s.d, s.v, s.v_f),
            format!("({:.0}, {:.0})", u1.f_m, u1.f_b),
            format!("({:.0}, {:.0})", u2.f_m, u2.f_b),
        );
    }

    let cycle = builtin("hwy-synth").expect("builtin");
    let one = run_episode(&spec, &cycle, &mut DpOneStep { table: &table, controls: &controls }, true)?;
    let two = run_episode(&spec, &cycle, &mut DpTwoStep { table: &table, controls: &controls }, true)?;
    for t in [&one, &two] {
        println!(
            "{}: {}, {:.0} m, {:.4} kWh, final gap {:.1} m",
            t.controller,
            t.status,
            t.host_distance,
            trace_energy(t, true) / 3.6e6,
            t.rows.last().map_or(f64::NAN, |r| r.d)
        );
    }
    let differ = one
        .rows
        .iter()
        .zip(&two.rows)
        .filter(|(a, b)| (a.f_m, a.f_b) != (b.f_m, b.f_b))
        .count();
    println!("controls differ on {differ} of {} steps", one.steps().min(two.steps()));
    Ok(())
}

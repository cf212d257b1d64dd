//! Train the neural value surrogate on the default value table, report its
//! fit, and compare its two-step decisions with the table-driven ones.
//!
//! ```bash
//! cargo run --release -p ecoacc --example adp_surrogate -- [out_dir]
//! ```

use std::path::PathBuf;
use std::time::Instant;

use ecoacc::adp::{adp_forward_two_step, train_value_surrogate, SurrogateOptions, ValueSurrogate};
use ecoacc::dp::{dp_backward, dp_forward_two_step, BackwardOptions, ControlGrid, Grid};
use ecoacc::ocp::{OcpSpec, State};

fn main() -> ecoacc::Result<()> {
    let out_dir = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("ecoacc-adp"));
    std::fs::create_dir_all(&out_dir).map_err(|e| ecoacc::Error::Io { path: out_dir.clone(), source: e })?;

    let spec = OcpSpec::default();
    let controls = ControlGrid::default_for(&spec);
    let table = dp_backward(&spec, &Grid::default_for(&spec), &controls, &BackwardOptions::default())?;

    let opts = SurrogateOptions::default();
    let start = Instant::now();
    let sur = train_value_surrogate(&table, &opts)?;
    println!(
        "trained {:?} in {:.0} s: train RRMSE {:.4}, held-out RRMSE {:.4} (cap {:.3e} J)",
        sur.net.layer_sizes(),
        start.elapsed().as_secs_f64(),
        sur.report.train_rrmse,
        sur.report.holdout_rrmse,
        sur.norm.target.cap
    );

    println!("{:<44} {:>12} {:>12}   {:>16} {:>16}", "state", "table V", "surrogate V", "dp2 control", "adp control");
    for (s, prev) in [
        (State::new(50.0, 0.0, 0.0), 0.0),
        (State::new(40.0, 18.0, 20.0), 19.5),
        (State::new(120.0, 25.0, 22.0), 22.5),
        (State::new(8.0, 15.0, 10.0), 11.0),
        (State::new(1500.0, 20.0, 30.0), 29.0),
    ] {
        let (u_dp, _) = dp_forward_two_step(&spec, &table, &controls, &s, prev);
        let (u_adp, _) = adp_forward_two_step(&spec, &sur, &controls, &s, prev);
        println!(
            "{:<44} {:>12.0} {:>12.0}   ({:>6}, {:>5}) ({:>6}, {:>5})",
            s.to_string(),
            table.interpolate(&s),
            sur.value(&s),
            u_dp.f_m,
            u_dp.f_b,
            u_adp.f_m,
            u_adp.f_b
        );
    }

    let path = out_dir.join("surrogate.json");
    sur.save(&path)?;
    assert_eq!(ValueSurrogate::load(&path)?, sur);
    println!("wrote {}", path.display());
    Ok(())
}

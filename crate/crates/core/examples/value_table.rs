//! Solve the discounted car-following problem on the default grid by value
//! iteration, save the table in binary and CSV form, and probe a few states.
//!
//! ```bash
//! cargo run --release -p ecoacc --example value_table -- [out_dir]
//! ```

use std::path::PathBuf;
use std::time::Instant;

use ecoacc::dp::{bellman_residual, dp_backward_traced, BackwardOptions, ControlGrid, Grid, ValueTable};
use ecoacc::ocp::{OcpSpec, State};

fn main() -> ecoacc::Result<()> {
    let out_dir = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("ecoacc-dp"));
    std::fs::create_dir_all(&out_dir).map_err(|e| ecoacc::Error::Io { path: out_dir.clone(), source: e })?;

    let spec = OcpSpec::default();
    let grid = Grid::default_for(&spec);
    let controls = ControlGrid::default_for(&spec);
    let opts = BackwardOptions::default();
    let (n_d, n_v, n_vf) = grid.shape();
    println!("grid {n_d} × {n_v} × {n_vf} = {} states", grid.len());

    let start = Instant::now();
    let (table, history) = dp_backward_traced(&spec, &grid, &controls, &opts)?;
    println!(
        "{} sweeps in {:.1} s, final residual {:.3} J (converged: {})",
        table.iterations,
        start.elapsed().as_secs_f64(),
        table.residual,
        table.converged(opts.tol)
    );
    for (k, r) in history.iter().enumerate().step_by((history.len() / 8).max(1)) {
        println!("  sweep {:>3}: residual {:>14.3} J", k + 1, r);
    }
    println!("independent Bellman check: {:.3} J", bellman_residual(&spec, &table, &controls));

    for s in [
        State::new(50.0, 0.0, 0.0),
        State::new(50.0, 20.0, 20.0),
        State::new(5.0, 25.0, 15.0),
        State::new(1900.0, 10.0, 30.0),
    ] {
        println!("V{s} = {:.0} J", table.interpolate(&s));
    }

    let bin = out_dir.join("value_table.bin");
    table.save(&bin)?;
    table.export_csv(out_dir.join("value_table.csv"))?;
    assert_eq!(ValueTable::load(&bin)?, table);
    println!("wrote {}", bin.display());
    Ok(())
}

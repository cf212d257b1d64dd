//! Reproduce the efficiency comparison: solve the value table, train the
//! surrogate, then run dp1, dp2, adp and a front-mirroring baseline behind
//! each built-in cycle and print the ratio tables.
//!
//! ```bash
//! cargo run --release -p ecoacc --example compare_scenarios -- [--skip-adp] [out_dir]
//! ```

use std::path::PathBuf;
use std::time::Instant;

use ecoacc::adp::{train_value_surrogate, SurrogateOptions};
use ecoacc::cycles::{builtin, BUILTIN_NAMES};
use ecoacc::dp::{dp_backward, BackwardOptions, ControlGrid, Grid};
use ecoacc::harness::{compare, AdpTwoStep, Controller, DpOneStep, DpTwoStep, FrontMirror};
use ecoacc::ocp::OcpSpec;

fn main() -> ecoacc::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let skip_adp = args.iter().any(|a| a == "--skip-adp");
    let out_dir = args
        .iter()
        .find(|a| !a.starts_with("--"))
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("ecoacc-compare"));
    std::fs::create_dir_all(&out_dir).map_err(|e| ecoacc::Error::Io { path: out_dir.clone(), source: e })?;

    let spec = OcpSpec::default();
    let controls = ControlGrid::default_for(&spec);
    let table = dp_backward(&spec, &Grid::default_for(&spec), &controls, &BackwardOptions::default())?;
    let surrogate = if skip_adp {
        None
    } else {
        Some(train_value_surrogate(&table, &SurrogateOptions::default())?)
    };

    for name in BUILTIN_NAMES {
        let cycle = builtin(name).expect("builtin");
        let mut ctrls: Vec<Box<dyn Controller>> = vec![
            Box::new(DpOneStep { table: &table, controls: &controls }),
            Box::new(DpTwoStep { table: &table, controls: &controls }),
            Box::new(FrontMirror),
        ];
        if let Some(sur) = &surrogate {
            ctrls.insert(2, Box::new(AdpTwoStep { surrogate: sur, controls: &controls }));
        }
        let start = Instant::now();
        let (report, traces) = compare(&spec, &cycle, &mut ctrls, true)?;
        print!("{}", report.to_table());
        println!("({:.1} s)\n", start.elapsed().as_secs_f64());
        report.save_csv(out_dir.join(format!("{name}-report.csv")))?;
        for t in &traces {
            t.audit(&spec)?;
            t.save_csv(out_dir.join(format!("{name}-{}.csv", t.controller)))?;
        }
    }
    println!("reports and traces in {}", out_dir.display());
    Ok(())
}

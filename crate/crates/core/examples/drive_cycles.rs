//! Summarize the built-in synthetic drive cycles, write them as CSV and
//! round-trip one through a different speed unit.
//!
//! ```bash
//! cargo run -p ecoacc --example drive_cycles -- [out_dir]
//! ```

use std::path::PathBuf;

use ecoacc::cycles::{builtin, load_cycle, SpeedUnit, BUILTIN_NAMES};

fn main() -> ecoacc::Result<()> {
    let out_dir = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("ecoacc-cycles"));
    std::fs::create_dir_all(&out_dir).map_err(|e| ecoacc::Error::Io { path: out_dir.clone(), source: e })?;

    println!("{:<18} {:>8} {:>10} {:>9} {:>10}", "cycle", "dur [s]", "dist [m]", "vmax", "max |a|");
    for name in BUILTIN_NAMES {
        let c = builtin(name).expect("builtin");
        let a_max = c
            .speeds()
            .windows(2)
            .zip(c.times().windows(2))
            .map(|(v, t)| ((v[1] - v[0]) / (t[1] - t[0])).abs())
            .fold(0.0, f64::max);
        println!(
            "{:<18} {:>8.0} {:>10.1} {:>9.2} {:>10.2}",
            name,
            c.duration(),
            c.distance(),
            c.max_speed(),
            a_max
        );
        c.save(out_dir.join(format!("{name}.csv")), SpeedUnit::Mps)?;
    }

    // Same cycle through km/h, and a finer time base for the simulator.
    let hwy = builtin("hwy-synth").expect("builtin");
    let kph = out_dir.join("hwy-synth-kph.csv");
    hwy.save(&kph, SpeedUnit::Kph)?;
    let back = load_cycle(&kph, SpeedUnit::Kph)?;
    let worst = hwy
        .speeds()
        .iter()
        .zip(back.speeds())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    println!("km/h round trip: worst speed error {worst:.2e} m/s");
    let fine = hwy.resample(0.5)?;
    println!("resampled to 0.5 s: {} samples, distance {:.1} m", fine.len(), fine.distance());
    println!("front speed at t = 100.25 s: {:.3} m/s", hwy.front_speed(100.25)?);
    println!("wrote CSVs to {}", out_dir.display());
    Ok(())
}

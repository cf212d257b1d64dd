//! Fit the polynomial power map and the force envelope to the bundled
//! synthetic motor map, print the fit quality and write the model as JSON.
//!
//! ```bash
//! cargo run -p ecoacc --example fit_motor_map -- [out_dir]
//! ```

use std::path::PathBuf;

use ecoacc::powertrain::{
    fit_motor_model, load_envelope, load_motor_map, save_envelope, save_motor_map,
    synthetic::SyntheticMotorMap, MotorModel,
};

fn main() -> ecoacc::Result<()> {
    let out_dir = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(std::env::temp_dir);
    std::fs::create_dir_all(&out_dir).map_err(|e| ecoacc::Error::Io { path: out_dir.clone(), source: e })?;

    let generator = SyntheticMotorMap::default();
    let map_csv = out_dir.join("motor_map.csv");
    let env_csv = out_dir.join("envelope.csv");
    save_motor_map(&map_csv, &generator.samples())?;
    save_envelope(&env_csv, &generator.envelope_samples())?;

    let fit = fit_motor_model(&load_motor_map(&map_csv)?, &load_envelope(&env_csv)?)?;
    println!("power map RRMSE  {:.4}", fit.power_rrmse);
    println!("envelope RRMSE   {:.4}", fit.envelope_rrmse);
    println!("coefficients     {:?}", fit.model.c);
    println!("envelope         b0 = {:.3} N, b1 = {:.1} W, plateau ±{} N", fit.model.b0, fit.model.b1, fit.model.f_hi);

    let bundled = MotorModel::default();
    for (v, f) in [(10.0, 2000.0), (20.0, 1000.0), (20.0, -1000.0), (30.0, 2500.0)] {
        println!(
            "P({v:>4} m/s, {f:>6} N): synthetic {:>9.1} W, fitted {:>9.1} W, bundled {:>9.1} W",
            generator.true_power(v, f),
            fit.model.power(v, f),
            bundled.power(v, f)
        );
    }

    let model_path = out_dir.join("motor_model.json");
    let mut model = fit.model;
    // Ship the generator's exact envelope; the fit only differs by roundoff.
    let env = generator.envelope();
    model.b0 = env.b0;
    model.b1 = env.b1;
    model.save(&model_path)?;
    println!("wrote {}", model_path.display());
    Ok(())
}

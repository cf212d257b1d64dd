//! Least-squares regression of the power map and force envelope from
//! motor-map measurements.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{MotorModel, DEFAULT_V_EPS};
use crate::csvio;
use crate::error::{Error, Result};

const MOTOR_MAP_HEADER: [&str; 3] = ["v_mps", "f_n", "p_w"];
const ENVELOPE_HEADER: [&str; 2] = ["v_mps", "f_max_n"];

/// One power-map measurement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MotorMapSample {
    pub v: f64,
    pub f_m: f64,
    pub p: f64,
}

/// One point of the measured maximum-force curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeSample {
    pub v: f64,
    pub f_max: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PowerFit {
    pub c: [f64; 6],
    pub rrmse: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnvelopeFit {
    pub b0: f64,
    pub b1: f64,
    pub f_hi: f64,
    pub f_lo: f64,
    /// Samples strictly below the plateau, i.e. the constant-power region.
    pub hyperbolic_samples: usize,
    pub rrmse: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MotorFit {
    pub model: MotorModel,
    pub power_rrmse: f64,
    pub envelope_rrmse: f64,
}

/// Root-mean-square error normalized by the root-mean-square of `actual`.
pub fn rrmse(actual: &[f64], predicted: &[f64]) -> Result<f64> {
    if actual.is_empty() || actual.len() != predicted.len() {
        return Err(Error::invalid(format!(
            "rrmse needs equal non-zero lengths, got {} and {}",
            actual.len(),
            predicted.len()
        )));
    }
    let n = actual.len() as f64;
    let sq_err: f64 = actual.iter().zip(predicted).map(|(a, p)| (a - p) * (a - p)).sum();
    let sq_act: f64 = actual.iter().map(|a| a * a).sum();
    if sq_act == 0.0 {
        return Err(Error::DivisionByZero("rrmse of an all-zero actual series".into()));
    }
    Ok((sq_err / n).sqrt() / (sq_act / n).sqrt())
}

/// Solves `min ||A x - b||²` with column equilibration and an SVD rank test.
fn least_squares(a: DMatrix<f64>, b: DVector<f64>, what: &str) -> Result<DVector<f64>> {
    let ncols = a.ncols();
    if a.nrows() < ncols {
        return Err(Error::SingularFit(format!(
            "{what}: {} samples for {ncols} unknowns",
            a.nrows()
        )));
    }
    let scales: Vec<f64> = (0..ncols).map(|j| a.column(j).norm()).collect();
    if let Some(j) = scales.iter().position(|s| *s == 0.0 || !s.is_finite()) {
        return Err(Error::SingularFit(format!("{what}: regressor column {j} is degenerate")));
    }
    let mut scaled = a;
    for (j, s) in scales.iter().enumerate() {
        scaled.column_mut(j).unscale_mut(*s);
    }
    let svd = scaled.svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if !(smin > smax * 1e-10) {
        return Err(Error::SingularFit(format!(
            "{what}: design matrix is rank deficient (condition {:.3e})",
            smax / smin
        )));
    }
    let x = svd
        .solve(&b, 0.0)
        .map_err(|e| Error::SingularFit(format!("{what}: {e}")))?;
    Ok(DVector::from_iterator(ncols, x.iter().zip(&scales).map(|(xi, s)| xi / s)))
}

fn power_regressors(v: f64, f: f64) -> [f64; 6] {
    let v3 = v * v * v;
    [v, v3, v3 * v * v, v * f, v * f * f, v3 * f]
}

/// Linear least squares for the six power-map coefficients.
pub fn fit_power_map(samples: &[MotorMapSample]) -> Result<PowerFit> {
    if samples.len() < 6 {
        return Err(Error::SingularFit(format!("need at least 6 power samples, got {}", samples.len())));
    }
    let a = DMatrix::from_fn(samples.len(), 6, |i, j| power_regressors(samples[i].v, samples[i].f_m)[j]);
    let b = DVector::from_iterator(samples.len(), samples.iter().map(|s| s.p));
    let x = least_squares(a, b, "power map")?;
    let c = [x[0], x[1], x[2], x[3], x[4], x[5]];
    let actual: Vec<f64> = samples.iter().map(|s| s.p).collect();
    let predicted: Vec<f64> = samples
        .iter()
        .map(|s| power_regressors(s.v, s.f_m).iter().zip(&c).map(|(r, c)| r * c).sum())
        .collect();
    Ok(PowerFit {
        c,
        rrmse: rrmse(&actual, &predicted)?,
    })
}

/// Fits `F_max(v) = min(F_hi, b0 + b1/v)`.
///
/// The plateau is the largest sample; the hyperbola is regressed on the
/// samples that sit below it. The regeneration plateau mirrors the traction
/// plateau, since the envelope file only carries the traction side.
pub fn fit_envelope(samples: &[EnvelopeSample]) -> Result<EnvelopeFit> {
    if samples.len() < 2 {
        return Err(Error::SingularFit(format!("need at least 2 envelope samples, got {}", samples.len())));
    }
    if samples.iter().any(|s| !(s.v > 0.0) || !(s.f_max > 0.0)) {
        return Err(Error::invalid("envelope samples need v > 0 and f_max > 0"));
    }
    let f_hi = samples.iter().map(|s| s.f_max).fold(f64::MIN, f64::max);
    let region: Vec<&EnvelopeSample> = samples.iter().filter(|s| s.f_max < f_hi * (1.0 - 1e-9)).collect();
    if region.len() < 2 {
        return Err(Error::SingularFit(format!(
            "envelope has {} samples below the plateau; need 2",
            region.len()
        )));
    }
    let a = DMatrix::from_fn(region.len(), 2, |i, j| if j == 0 { 1.0 } else { 1.0 / region[i].v });
    let b = DVector::from_iterator(region.len(), region.iter().map(|s| s.f_max));
    let x = least_squares(a, b, "force envelope")?;
    // Clamp roundoff so the fitted model passes validation.
    let b0 = if x[0].abs() < 1e-9 * f_hi { 0.0 } else { x[0] };
    let b1 = x[1];
    let actual: Vec<f64> = samples.iter().map(|s| s.f_max).collect();
    let predicted: Vec<f64> = samples.iter().map(|s| f_hi.min(b0 + b1 / s.v)).collect();
    Ok(EnvelopeFit {
        b0,
        b1,
        f_hi,
        f_lo: -f_hi,
        hyperbolic_samples: region.len(),
        rrmse: rrmse(&actual, &predicted)?,
    })
}

/// Fits both regressions and assembles a validated [`MotorModel`].
pub fn fit_motor_model(samples: &[MotorMapSample], envelope: &[EnvelopeSample]) -> Result<MotorFit> {
    let power = fit_power_map(samples)?;
    let env = fit_envelope(envelope)?;
    let model = MotorModel::new(power.c, env.b0, env.b1, env.f_hi, env.f_lo, DEFAULT_V_EPS)?;
    Ok(MotorFit {
        model,
        power_rrmse: power.rrmse,
        envelope_rrmse: env.rrmse,
    })
}

pub fn load_motor_map(path: impl AsRef<Path>) -> Result<Vec<MotorMapSample>> {
    let path = path.as_ref();
    csvio::read_file(path, &MOTOR_MAP_HEADER)?
        .into_iter()
        .map(|row| {
            let (v, f_m, p) = (row.values[0], row.values[1], row.values[2]);
            if v < 0.0 {
                return Err(Error::Parse {
                    source_name: path.display().to_string(),
                    line: row.line,
                    message: format!("negative speed {v}"),
                });
            }
            Ok(MotorMapSample { v, f_m, p })
        })
        .collect()
}

pub fn load_envelope(path: impl AsRef<Path>) -> Result<Vec<EnvelopeSample>> {
    let path = path.as_ref();
    csvio::read_file(path, &ENVELOPE_HEADER)?
        .into_iter()
        .map(|row| {
            let (v, f_max) = (row.values[0], row.values[1]);
            if v < 0.0 {
                return Err(Error::Parse {
                    source_name: path.display().to_string(),
                    line: row.line,
                    message: format!("negative speed {v}"),
                });
            }
            Ok(EnvelopeSample { v, f_max })
        })
        .collect()
}

pub fn save_motor_map(path: impl AsRef<Path>, samples: &[MotorMapSample]) -> Result<()> {
    csvio::write_file(path.as_ref(), &MOTOR_MAP_HEADER, samples.iter().map(|s| vec![s.v, s.f_m, s.p]))
}

pub fn save_envelope(path: impl AsRef<Path>, samples: &[EnvelopeSample]) -> Result<()> {
    csvio::write_file(path.as_ref(), &ENVELOPE_HEADER, samples.iter().map(|s| vec![s.v, s.f_max]))
}

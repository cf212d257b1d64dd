//! Neural approximation of the DP value table and the two-step lookahead
//! policy that uses it as terminal cost.

use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dp::{two_step_search, ControlGrid, TerminalValue, ValueTable};
use crate::error::{Error, Result};
use crate::nn::{Activation, Adam, Mlp, MlpFile};
use crate::ocp::{Control, OcpSpec, State};
use crate::powertrain::rrmse;

/// Affine map of one input axis onto [0, 1]; inputs are clamped first.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AxisMap {
    pub lo: f64,
    pub hi: f64,
}

impl AxisMap {
    #[inline]
    pub fn apply(&self, x: f64) -> f64 {
        if self.hi > self.lo {
            (x.clamp(self.lo, self.hi) - self.lo) / (self.hi - self.lo)
        } else {
            0.0
        }
    }
}

/// Targets are capped at `cap`, compressed by `w(y) = scale·asinh(y/scale)`
/// (identity when `scale` is 0), then shifted by `mean` and scaled by `rms`.
///
/// The compression keeps resolution in the low-cost region where lookahead
/// decisions are made, while penalty-dominated entries span orders of
/// magnitude more.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TargetMap {
    pub mean: f64,
    pub rms: f64,
    pub cap: f64,
    #[serde(default)]
    pub scale: f64,
}

impl TargetMap {
    fn warp(&self, y: f64) -> f64 {
        if self.scale > 0.0 {
            self.scale * (y / self.scale).asinh()
        } else {
            y
        }
    }

    fn unwarp(&self, w: f64) -> f64 {
        if self.scale > 0.0 {
            self.scale * (w / self.scale).sinh()
        } else {
            w
        }
    }

    /// A zero `rms` marks a constant target: every prediction decodes to `mean`.
    pub fn encode(&self, y: f64) -> f64 {
        if self.rms > 0.0 {
            (self.warp(y.min(self.cap)) - self.mean) / self.rms
        } else {
            0.0
        }
    }

    pub fn decode(&self, z: f64) -> f64 {
        self.unwarp(self.mean + self.rms * z)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Normalization {
    pub d: AxisMap,
    pub v: AxisMap,
    pub v_f: AxisMap,
    pub target: TargetMap,
}

impl Normalization {
    fn input(&self, s: &State) -> [f64; 3] {
        [self.d.apply(s.d), self.v.apply(s.v), self.v_f.apply(s.v_f)]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub train_rrmse: f64,
    pub holdout_rrmse: f64,
    pub n_train: usize,
    pub n_holdout: usize,
    pub epochs: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SurrogateOptions {
    pub hidden_layers: usize,
    pub units: usize,
    pub holdout_frac: f64,
    pub epochs: usize,
    pub batch: usize,
    pub lr: f64,
    /// Learning rate reached by linear decay at the last epoch.
    pub lr_final: f64,
    /// Quantile of the targets used as the cap.
    pub cap_quantile: f64,
    /// Compression scale of the targets [J]; 0 fits raw values.
    pub target_scale: f64,
    pub seed: u64,
}

impl Default for SurrogateOptions {
    fn default() -> Self {
        Self {
            hidden_layers: 3,
            units: 70,
            holdout_frac: 0.2,
            epochs: 200,
            batch: 64,
            lr: 0.01,
            lr_final: 0.001,
            cap_quantile: 0.995,
            target_scale: 1e5,
            seed: 0,
        }
    }
}

impl SurrogateOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.holdout_frac > 0.0 && self.holdout_frac < 0.5) {
            return Err(Error::invalid(format!("holdout_frac {} outside (0, 0.5)", self.holdout_frac)));
        }
        if self.epochs == 0 || self.batch == 0 || self.units == 0 {
            return Err(Error::invalid("epochs, batch and units must be positive"));
        }
        if !(self.lr > 0.0 && self.lr_final > 0.0) {
            return Err(Error::invalid("learning rates must be positive"));
        }
        if !(self.cap_quantile > 0.0 && self.cap_quantile <= 1.0) {
            return Err(Error::invalid("cap_quantile must lie in (0, 1]"));
        }
        if !(self.target_scale >= 0.0 && self.target_scale.is_finite()) {
            return Err(Error::invalid("target_scale must be non-negative and finite"));
        }
        Ok(())
    }
}

/// MLP fit of a value table over the continuous state space.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueSurrogate {
    pub net: Mlp,
    pub norm: Normalization,
    pub discount: f64,
    pub report: FitReport,
}

fn quantile_nearest_rank(values: &[f64], q: f64) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let rank = ((q * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len());
    sorted[rank - 1]
}

pub fn train_value_surrogate(table: &ValueTable, opts: &SurrogateOptions) -> Result<ValueSurrogate> {
    opts.validate()?;
    let g = &table.grid;
    let axis = |a: &[f64]| AxisMap {
        lo: a[0],
        hi: a[a.len() - 1],
    };
    let cap = quantile_nearest_rank(&table.values, opts.cap_quantile);
    let capped: Vec<f64> = table.values.iter().map(|v| v.min(cap)).collect();
    let n = capped.len();
    let mut target = TargetMap {
        mean: 0.0,
        rms: 0.0,
        cap,
        scale: opts.target_scale,
    };
    let warped: Vec<f64> = capped.iter().map(|&v| target.warp(v)).collect();
    target.mean = warped.iter().sum::<f64>() / n as f64;
    target.rms = (warped.iter().map(|w| (w - target.mean).powi(2)).sum::<f64>() / n as f64).sqrt();
    // a constant table decodes exactly
    if target.rms == 0.0 {
        target.mean = target.unwarp(target.mean);
        target.scale = 0.0;
    }
    let norm = Normalization {
        d: axis(&g.d_axis),
        v: axis(&g.v_axis),
        v_f: axis(&g.vf_axis),
        target,
    };

    let inputs: Vec<[f64; 3]> = (0..n).map(|i| norm.input(&g.state(i))).collect();
    let targets: Vec<f64> = capped.iter().map(|&v| norm.target.encode(v)).collect();

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let n_holdout = ((n as f64) * opts.holdout_frac).round().max(1.0) as usize;
    let (holdout, train) = order.split_at(n_holdout.min(n - 1));
    let mut train = train.to_vec();

    let mut net = Mlp::uniform(
        3,
        opts.hidden_layers,
        opts.units,
        Activation::Sigmoid,
        1,
        Activation::Linear,
        opts.seed,
    )?;
    let mut adam = Adam::new(&net, opts.lr);
    let mut x = Vec::with_capacity(opts.batch * 3);
    let mut grad = Vec::with_capacity(opts.batch);
    for epoch in 0..opts.epochs {
        let frac = if opts.epochs > 1 { epoch as f64 / (opts.epochs - 1) as f64 } else { 1.0 };
        adam.lr = opts.lr + (opts.lr_final - opts.lr) * frac;
        train.shuffle(&mut rng);
        let mut loss = 0.0;
        for chunk in train.chunks(opts.batch) {
            x.clear();
            for &i in chunk {
                x.extend_from_slice(&inputs[i]);
            }
            let cache = net.forward_batch(&x, chunk.len());
            grad.clear();
            let scale = 2.0 / chunk.len() as f64;
            for (y, &i) in cache.output().iter().zip(chunk) {
                let e = y - targets[i];
                loss += e * e;
                grad.push(scale * e);
            }
            let grads = net.backward(&cache, &grad);
            adam.step(&mut net, &grads);
        }
        let loss = loss / train.len() as f64;
        if !loss.is_finite() {
            return Err(Error::TrainingDiverged(format!("surrogate loss became {loss} in epoch {epoch}")));
        }
        log::debug!("surrogate epoch {epoch}: normalized mse {loss:.3e}");
    }

    let mut sur = ValueSurrogate {
        net,
        norm,
        discount: table.discount,
        report: FitReport {
            train_rrmse: 0.0,
            holdout_rrmse: 0.0,
            n_train: train.len(),
            n_holdout: holdout.len(),
            epochs: opts.epochs,
        },
    };
    let score = |idx: &[usize], sur: &ValueSurrogate| -> Result<f64> {
        let states: Vec<State> = idx.iter().map(|&i| g.state(i)).collect();
        let pred = sur.terminal_values(&states);
        let actual: Vec<f64> = idx.iter().map(|&i| capped[i]).collect();
        rrmse(&actual, &pred)
    };
    sur.report.train_rrmse = score(&train, &sur)?;
    sur.report.holdout_rrmse = score(holdout, &sur)?;
    Ok(sur)
}

impl ValueSurrogate {
    pub fn value(&self, s: &State) -> f64 {
        self.norm.target.decode(self.net.forward(&self.norm.input(s))[0])
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = SurrogateFile {
            net: MlpFile::from(&self.net),
            normalization: self.norm,
            discount: self.discount,
            report: self.report,
        };
        std::fs::write(path, serde_json::to_string_pretty(&file)?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let file: SurrogateFile = serde_json::from_str(&text)?;
        let net = Mlp::try_from(file.net)?;
        if net.n_inputs() != 3 || net.n_outputs() != 1 {
            return Err(Error::ShapeMismatch("a value surrogate maps 3 inputs to 1 output".into()));
        }
        if !(file.normalization.target.rms >= 0.0) {
            return Err(Error::invalid("target rms must be non-negative"));
        }
        Ok(Self {
            net,
            norm: file.normalization,
            discount: file.discount,
            report: file.report,
        })
    }
}

impl TerminalValue for ValueSurrogate {
    fn terminal_value(&self, s: &State) -> f64 {
        self.value(s)
    }

    fn terminal_values(&self, states: &[State]) -> Vec<f64> {
        let x: Vec<f64> = states.iter().flat_map(|s| self.norm.input(s)).collect();
        let cache = self.net.forward_batch(&x, states.len());
        cache.output().iter().map(|&z| self.norm.target.decode(z)).collect()
    }
}

#[derive(Serialize, Deserialize)]
struct SurrogateFile {
    #[serde(flatten)]
    net: MlpFile,
    normalization: Normalization,
    discount: f64,
    report: FitReport,
}

pub fn surrogate_value(sur: &ValueSurrogate, s: &State) -> f64 {
    sur.value(s)
}

/// Two-step lookahead with the surrogate as terminal value.
pub fn adp_forward_two_step(
    spec: &OcpSpec,
    sur: &ValueSurrogate,
    controls: &ControlGrid,
    s: &State,
    v_f_prev: f64,
) -> (Control, State) {
    let d = two_step_search(spec, sur, sur.discount, controls, s, v_f_prev);
    (d.control, d.next)
}

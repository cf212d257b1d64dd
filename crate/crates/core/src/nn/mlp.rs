use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Sigmoid,
    Relu,
    Tanh,
    Linear,
}

impl Activation {
    #[inline]
    pub fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Sigmoid => 1.0 / (1.0 + (-z).exp()),
            Activation::Relu => z.max(0.0),
            Activation::Tanh => z.tanh(),
            Activation::Linear => z,
        }
    }

    /// Derivative expressed through the activation's output `a`.
    #[inline]
    pub fn derivative_from_output(self, a: f64) -> f64 {
        match self {
            Activation::Sigmoid => a * (1.0 - a),
            Activation::Relu => {
                if a > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => 1.0 - a * a,
            Activation::Linear => 1.0,
        }
    }
}

impl fmt::Display for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Activation::Sigmoid => "sigmoid",
            Activation::Relu => "relu",
            Activation::Tanh => "tanh",
            Activation::Linear => "linear",
        })
    }
}

impl FromStr for Activation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sigmoid" => Ok(Activation::Sigmoid),
            "relu" => Ok(Activation::Relu),
            "tanh" => Ok(Activation::Tanh),
            "linear" | "identity" => Ok(Activation::Linear),
            other => Err(Error::invalid(format!("unknown activation `{other}`"))),
        }
    }
}

/// Fully connected feed-forward network. Layer `l` maps
/// `layer_sizes[l]` inputs to `layer_sizes[l+1]` outputs with weights stored
/// row-major as `out × in`.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    layer_sizes: Vec<usize>,
    activations: Vec<Activation>,
    weights: Vec<Vec<f64>>,
    biases: Vec<Vec<f64>>,
    seed: u64,
}

/// Per-layer outputs of a batched forward pass, kept for backpropagation.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    pub n: usize,
    /// `outputs[0]` is the input batch; `outputs[l+1]` the activations of
    /// layer `l`. Row-major, one row per sample.
    pub outputs: Vec<Vec<f64>>,
}

impl ForwardCache {
    pub fn output(&self) -> &[f64] {
        self.outputs.last().expect("at least the input")
    }
}

/// Parameter gradients laid out like the network, plus the input gradient.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<Vec<f64>>,
    pub input: Vec<f64>,
}

impl Gradients {
    pub fn global_norm(&self) -> f64 {
        self.weights
            .iter()
            .chain(&self.biases)
            .flat_map(|v| v.iter())
            .map(|g| g * g)
            .sum::<f64>()
            .sqrt()
    }

    pub fn scale(&mut self, k: f64) {
        for v in self.weights.iter_mut().chain(self.biases.iter_mut()) {
            v.iter_mut().for_each(|g| *g *= k);
        }
    }

    /// Parameter gradients in the order of [`Mlp::flat_params`].
    pub fn flatten(&self) -> Vec<f64> {
        self.weights.iter().chain(&self.biases).flatten().copied().collect()
    }

    /// Rescales parameter gradients so their global norm is at most `max`.
    pub fn clip_norm(&mut self, max: f64) {
        let n = self.global_norm();
        if n > max && n > 0.0 {
            self.scale(max / n);
        }
    }
}

/// `c (m × n) = a (m × k) · b (k × n)` with explicit strides.
#[allow(clippy::too_many_arguments)]
fn gemm(m: usize, k: usize, n: usize, a: &[f64], rsa: usize, csa: usize, b: &[f64], rsb: usize, csb: usize, c: &mut [f64]) {
    if m == 0 || n == 0 {
        return;
    }
    if k == 0 {
        c.iter_mut().for_each(|x| *x = 0.0);
        return;
    }
    // SAFETY: every index reached by the strides lies inside the slices; the
    // callers size `a`, `b` and `c` as m×k, k×n and m×n.
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            1.0,
            a.as_ptr(),
            rsa as isize,
            csa as isize,
            b.as_ptr(),
            rsb as isize,
            csb as isize,
            0.0,
            c.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}

impl Mlp {
    /// Glorot-uniform weights and zero biases from a seeded generator.
    pub fn new(layer_sizes: &[usize], activations: &[Activation], seed: u64) -> Result<Self> {
        if layer_sizes.len() < 2 {
            return Err(Error::invalid("a network needs an input and an output layer"));
        }
        if layer_sizes.contains(&0) {
            return Err(Error::invalid("layer sizes must be positive"));
        }
        if activations.len() != layer_sizes.len() - 1 {
            return Err(Error::ShapeMismatch(format!(
                "{} layers need {} activations, got {}",
                layer_sizes.len(),
                layer_sizes.len() - 1,
                activations.len()
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut weights = Vec::with_capacity(activations.len());
        let mut biases = Vec::with_capacity(activations.len());
        for w in layer_sizes.windows(2) {
            let (fan_in, fan_out) = (w[0], w[1]);
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            weights.push((0..fan_in * fan_out).map(|_| rng.random_range(-limit..limit)).collect());
            biases.push(vec![0.0; fan_out]);
        }
        Ok(Self {
            layer_sizes: layer_sizes.to_vec(),
            activations: activations.to_vec(),
            weights,
            biases,
            seed,
        })
    }

    /// `hidden` layers of `units` each with one activation, then a single
    /// output activation.
    pub fn uniform(
        n_in: usize,
        hidden: usize,
        units: usize,
        hidden_act: Activation,
        n_out: usize,
        out_act: Activation,
        seed: u64,
    ) -> Result<Self> {
        let mut sizes = vec![n_in];
        sizes.extend(std::iter::repeat_n(units, hidden));
        sizes.push(n_out);
        let mut acts = vec![hidden_act; hidden];
        acts.push(out_act);
        Self::new(&sizes, &acts, seed)
    }

    pub fn layer_sizes(&self) -> &[usize] {
        &self.layer_sizes
    }

    pub fn activations(&self) -> &[Activation] {
        &self.activations
    }

    pub fn weights(&self) -> &[Vec<f64>] {
        &self.weights
    }

    pub fn biases(&self) -> &[Vec<f64>] {
        &self.biases
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn n_inputs(&self) -> usize {
        self.layer_sizes[0]
    }

    pub fn n_outputs(&self) -> usize {
        *self.layer_sizes.last().expect("validated")
    }

    pub fn n_params(&self) -> usize {
        self.weights.iter().chain(&self.biases).map(Vec::len).sum()
    }

    /// Multiplies the weights and biases of the output layer by `k`.
    pub fn scale_output_layer(&mut self, k: f64) {
        let last = self.weights.len() - 1;
        self.weights[last].iter_mut().for_each(|w| *w *= k);
        self.biases[last].iter_mut().for_each(|b| *b *= k);
    }

    /// All weights, layer by layer, followed by all biases.
    pub fn flat_params(&self) -> Vec<f64> {
        self.weights.iter().chain(&self.biases).flatten().copied().collect()
    }

    /// Overwrites the parameters from the layout of [`Mlp::flat_params`].
    pub fn set_flat_params(&mut self, params: &[f64]) -> Result<()> {
        if params.len() != self.n_params() {
            return Err(Error::invalid(format!(
                "expected {} parameters, got {}",
                self.n_params(),
                params.len()
            )));
        }
        let mut rest = params;
        for v in self.params_mut() {
            let (head, tail) = rest.split_at(v.len());
            v.copy_from_slice(head);
            rest = tail;
        }
        Ok(())
    }

    pub(crate) fn params_mut(&mut self) -> impl Iterator<Item = &mut Vec<f64>> {
        self.weights.iter_mut().chain(self.biases.iter_mut())
    }

    /// Single-sample forward pass.
    pub fn forward(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n_inputs(), "input width");
        let mut a = x.to_vec();
        for ((w, b), act) in self.weights.iter().zip(&self.biases).zip(&self.activations) {
            let n_in = a.len();
            a = b
                .iter()
                .enumerate()
                .map(|(j, bj)| {
                    let row = &w[j * n_in..(j + 1) * n_in];
                    act.apply(bj + row.iter().zip(&a).map(|(p, q)| p * q).sum::<f64>())
                })
                .collect();
        }
        a
    }

    /// Batched forward pass over `n` row-major samples.
    pub fn forward_batch(&self, x: &[f64], n: usize) -> ForwardCache {
        assert_eq!(x.len(), n * self.n_inputs(), "batch shape");
        let mut outputs = Vec::with_capacity(self.weights.len() + 1);
        outputs.push(x.to_vec());
        for (l, ((w, b), act)) in self.weights.iter().zip(&self.biases).zip(&self.activations).enumerate() {
            let (n_in, n_out) = (self.layer_sizes[l], self.layer_sizes[l + 1]);
            let mut z = vec![0.0; n * n_out];
            gemm(n, n_in, n_out, &outputs[l], n_in, 1, w, 1, n_in, &mut z);
            for row in z.chunks_exact_mut(n_out) {
                for (zj, bj) in row.iter_mut().zip(b) {
                    *zj = act.apply(*zj + bj);
                }
            }
            outputs.push(z);
        }
        ForwardCache { n, outputs }
    }

    /// Backpropagates `grad_out` (dL/d output, `n × n_out`) through a cached
    /// forward pass. Gradients are summed over the batch.
    pub fn backward(&self, cache: &ForwardCache, grad_out: &[f64]) -> Gradients {
        let n = cache.n;
        let layers = self.weights.len();
        assert_eq!(grad_out.len(), n * self.n_outputs(), "gradient shape");
        let mut gw = vec![Vec::new(); layers];
        let mut gb = vec![Vec::new(); layers];
        let mut delta = grad_out.to_vec();
        for l in (0..layers).rev() {
            let (n_in, n_out) = (self.layer_sizes[l], self.layer_sizes[l + 1]);
            let act = self.activations[l];
            for (d, a) in delta.iter_mut().zip(&cache.outputs[l + 1]) {
                *d *= act.derivative_from_output(*a);
            }
            let mut dw = vec![0.0; n_out * n_in];
            gemm(n_out, n, n_in, &delta, 1, n_out, &cache.outputs[l], n_in, 1, &mut dw);
            let mut db = vec![0.0; n_out];
            for row in delta.chunks_exact(n_out) {
                for (s, d) in db.iter_mut().zip(row) {
                    *s += d;
                }
            }
            let mut prev = vec![0.0; n * n_in];
            gemm(n, n_out, n_in, &delta, n_out, 1, &self.weights[l], n_in, 1, &mut prev);
            gw[l] = dw;
            gb[l] = db;
            delta = prev;
        }
        Gradients {
            weights: gw,
            biases: gb,
            input: delta,
        }
    }

    /// Polyak averaging towards `source`: `θ ← τ θ_source + (1 − τ) θ`.
    pub fn soft_update(&mut self, source: &Mlp, tau: f64) -> Result<()> {
        if self.layer_sizes != source.layer_sizes {
            return Err(Error::ShapeMismatch(format!(
                "soft update between {:?} and {:?}",
                self.layer_sizes, source.layer_sizes
            )));
        }
        if !(0.0..=1.0).contains(&tau) {
            return Err(Error::invalid(format!("tau = {tau} outside [0, 1]")));
        }
        let src = source.weights.iter().chain(&source.biases);
        for (dst, src) in self.params_mut().zip(src) {
            for (p, q) in dst.iter_mut().zip(src) {
                *p = tau * q + (1.0 - tau) * *p;
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&MlpFile::from(self))?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str::<MlpFile>(text)?.try_into()
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        Self::from_json(&std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?)
    }
}

/// On-disk form: weights as nested `out × in` rows.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub(crate) struct MlpFile {
    pub layer_sizes: Vec<usize>,
    pub activations: Vec<Activation>,
    pub weights: Vec<Vec<Vec<f64>>>,
    pub biases: Vec<Vec<f64>>,
    pub seed: u64,
}

impl From<&Mlp> for MlpFile {
    fn from(m: &Mlp) -> Self {
        let weights = m
            .weights
            .iter()
            .enumerate()
            .map(|(l, w)| w.chunks(m.layer_sizes[l]).map(<[f64]>::to_vec).collect())
            .collect();
        Self {
            layer_sizes: m.layer_sizes.clone(),
            activations: m.activations.clone(),
            weights,
            biases: m.biases.clone(),
            seed: m.seed,
        }
    }
}

impl TryFrom<MlpFile> for Mlp {
    type Error = Error;

    fn try_from(f: MlpFile) -> Result<Self> {
        let mut net = Mlp::new(&f.layer_sizes, &f.activations, f.seed)?;
        if f.weights.len() != net.weights.len() || f.biases.len() != net.biases.len() {
            return Err(Error::ShapeMismatch("layer count does not match layer_sizes".into()));
        }
        for l in 0..net.weights.len() {
            let (n_in, n_out) = (f.layer_sizes[l], f.layer_sizes[l + 1]);
            let rows = &f.weights[l];
            if rows.len() != n_out || rows.iter().any(|r| r.len() != n_in) || f.biases[l].len() != n_out {
                return Err(Error::ShapeMismatch(format!("layer {l} is not {n_out} × {n_in}")));
            }
            net.weights[l] = rows.concat();
            net.biases[l] = f.biases[l].clone();
        }
        if net.weights.iter().chain(&net.biases).flatten().any(|x| !x.is_finite()) {
            return Err(Error::invalid("network parameters must be finite"));
        }
        Ok(net)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn net() -> Mlp {
        Mlp::new(&[3, 5, 4, 2], &[Activation::Tanh, Activation::Sigmoid, Activation::Linear], 11).unwrap()
    }

    fn batch(n: usize, width: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n * width).map(|_| rng.random_range(-2.0..2.0)).collect()
    }

    #[test]
    fn batched_forward_matches_single_sample() {
        let m = net();
        let x = batch(7, 3, 1);
        let cache = m.forward_batch(&x, 7);
        for (i, row) in x.chunks(3).enumerate() {
            let single = m.forward(row);
            for (a, b) in single.iter().zip(&cache.output()[2 * i..2 * i + 2]) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn backward_matches_finite_differences() {
        // loss = Σ w_k · y_k with fixed weights, summed over the batch
        for acts in [
            [Activation::Tanh, Activation::Sigmoid, Activation::Linear],
            [Activation::Relu, Activation::Relu, Activation::Tanh],
        ] {
            let mut m = Mlp::new(&[3, 5, 4, 2], &acts, 3).unwrap();
            for b in m.biases.iter_mut() {
                b.iter_mut().for_each(|x| *x = 0.05);
            }
            let n = 4;
            let x = batch(n, 3, 9);
            let upstream = batch(n, 2, 10);
            let loss = |m: &Mlp, x: &[f64]| -> f64 {
                m.forward_batch(x, n).output().iter().zip(&upstream).map(|(y, w)| y * w).sum()
            };
            let g = m.backward(&m.forward_batch(&x, n), &upstream);
            let h = 1e-6;
            for l in 0..m.weights.len() {
                for i in 0..m.weights[l].len() {
                    let mut p = m.clone();
                    p.weights[l][i] += h;
                    let mut q = m.clone();
                    q.weights[l][i] -= h;
                    let fd = (loss(&p, &x) - loss(&q, &x)) / (2.0 * h);
                    assert!((fd - g.weights[l][i]).abs() < 1e-6, "w[{l}][{i}]: {fd} vs {}", g.weights[l][i]);
                }
                for i in 0..m.biases[l].len() {
                    let mut p = m.clone();
                    p.biases[l][i] += h;
                    let mut q = m.clone();
                    q.biases[l][i] -= h;
                    let fd = (loss(&p, &x) - loss(&q, &x)) / (2.0 * h);
                    assert!((fd - g.biases[l][i]).abs() < 1e-6);
                }
            }
            for i in 0..x.len() {
                let mut xp = x.clone();
                xp[i] += h;
                let mut xq = x.clone();
                xq[i] -= h;
                let fd = (loss(&m, &xp) - loss(&m, &xq)) / (2.0 * h);
                assert!((fd - g.input[i]).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn initialization_is_seeded() {
        assert_eq!(net(), net());
        let other = Mlp::new(&[3, 5, 4, 2], &[Activation::Tanh, Activation::Sigmoid, Activation::Linear], 12).unwrap();
        assert_ne!(net().weights, other.weights);
        assert_eq!(net().n_params(), 3 * 5 + 5 + 5 * 4 + 4 + 4 * 2 + 2);
    }

    #[test]
    fn soft_update_limits() {
        let a = net();
        let b = Mlp::new(&[3, 5, 4, 2], &[Activation::Tanh, Activation::Sigmoid, Activation::Linear], 99).unwrap();
        let mut t = a.clone();
        t.soft_update(&b, 0.0).unwrap();
        assert_eq!(t, a);
        t.soft_update(&b, 1.0).unwrap();
        assert_eq!(t.weights, b.weights);
        let mut half = a.clone();
        half.soft_update(&b, 0.5).unwrap();
        assert!((half.weights[0][0] - 0.5 * (a.weights[0][0] + b.weights[0][0])).abs() < 1e-15);
        let wrong = Mlp::new(&[3, 2], &[Activation::Linear], 0).unwrap();
        assert!(t.soft_update(&wrong, 0.1).is_err());
        assert!(t.soft_update(&b, 1.5).is_err());
    }

    #[test]
    fn json_round_trip_is_exact() {
        let m = net();
        let back = Mlp::from_json(&m.to_json().unwrap()).unwrap();
        assert_eq!(back, m);
        let x = [0.3, -1.2, 0.7];
        assert_eq!(back.forward(&x), m.forward(&x));
        let text = m.to_json().unwrap();
        assert!(text.contains("\"layer_sizes\"") && text.contains("\"tanh\""));
    }

    #[test]
    fn malformed_weights_are_rejected() {
        let mut f = MlpFile::from(&net());
        f.weights[1].pop();
        assert!(Mlp::try_from(f).is_err());
        assert!(Mlp::new(&[3], &[], 0).is_err());
        assert!(Mlp::new(&[3, 2], &[], 0).is_err());
        assert!("swish".parse::<Activation>().is_err());
    }

    #[test]
    fn tiny_affine_and_sigmoid_nets() {
        let mut lin = Mlp::new(&[1, 1], &[Activation::Linear], 0).unwrap();
        lin.weights[0][0] = 2.0;
        lin.biases[0][0] = 1.0;
        assert_eq!(lin.forward(&[3.0]), vec![7.0]);
        let g = lin.backward(&lin.forward_batch(&[3.0], 1), &[1.0]);
        assert_eq!((g.weights[0][0], g.biases[0][0], g.input[0]), (3.0, 1.0, 2.0));
        let zero = lin.backward(&lin.forward_batch(&[3.0], 1), &[0.0]);
        assert_eq!(zero.global_norm(), 0.0);

        let mut sig = Mlp::new(&[1, 1], &[Activation::Sigmoid], 0).unwrap();
        sig.weights[0][0] = 0.0;
        assert_eq!(sig.forward(&[123.0]), vec![0.5]);

        let mut z = Mlp::new(&[2, 3, 2], &[Activation::Relu, Activation::Linear], 0).unwrap();
        z.params_mut().for_each(|p| p.iter_mut().for_each(|x| *x = 0.0));
        assert_eq!(z.forward(&[1.0, -1.0]), vec![0.0, 0.0]);
    }

    #[test]
    fn soft_updates_converge_geometrically() {
        let main = net();
        let mut target = Mlp::new(&[3, 5, 4, 2], &[Activation::Tanh, Activation::Sigmoid, Activation::Linear], 5).unwrap();
        let gap = |t: &Mlp| (t.weights[0][0] - main.weights[0][0]).abs();
        let start = gap(&target);
        for _ in 0..10 {
            target.soft_update(&main, 0.1).unwrap();
        }
        assert!((gap(&target) - start * 0.9f64.powi(10)).abs() < 1e-12);
    }

    #[test]
    fn gradient_clipping() {
        let m = net();
        let x = batch(3, 3, 2);
        let mut g = m.backward(&m.forward_batch(&x, 3), &[1.0; 6]);
        g.clip_norm(1e-3);
        assert!((g.global_norm() - 1e-3).abs() < 1e-12);
    }
}

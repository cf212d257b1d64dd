use super::mlp::{Gradients, Mlp};

/// Adam with bias correction. Moment buffers follow the parameter layout
/// of the network they were created for.
#[derive(Debug, Clone)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
    t: i32,
}

impl Adam {
    pub fn new(net: &Mlp, lr: f64) -> Self {
        let zeros: Vec<Vec<f64>> = net.weights().iter().chain(net.biases()).map(|p| vec![0.0; p.len()]).collect();
        Self {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            m: zeros.clone(),
            v: zeros,
            t: 0,
        }
    }

    pub fn steps(&self) -> i32 {
        self.t
    }

    /// Descends along `grads`.
    pub fn step(&mut self, net: &mut Mlp, grads: &Gradients) {
        self.t = self.t.saturating_add(1);
        let c1 = 1.0 - self.beta1.powi(self.t);
        let c2 = 1.0 - self.beta2.powi(self.t);
        let step = self.lr * c2.sqrt() / c1;
        let eps = self.eps * c2.sqrt();
        let grads = grads.weights.iter().chain(&grads.biases);
        let (b1, b2) = (self.beta1, self.beta2);
        for (((p, g), m), v) in net.params_mut().zip(grads).zip(&mut self.m).zip(&mut self.v) {
            for (((p, &g), m), v) in p.iter_mut().zip(g.iter()).zip(m.iter_mut()).zip(v.iter_mut()) {
                *m = b1 * *m + (1.0 - b1) * g;
                *v = b2 * *v + (1.0 - b2) * g * g;
                *p -= step * *m / (v.sqrt() + eps);
            }
        }
    }
}

use rand::Rng;
use serde::{Deserialize, Serialize};

/// Fully connected network with tanh hidden layers. All weights and biases
/// live in one flat vector: per layer, the row-major `out x in` weight
/// matrix followed by the bias.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    sizes: Vec<usize>,
    params: Vec<f64>,
    tanh_output: bool,
}

/// Per-layer activations from a forward pass, input first.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    activations: Vec<Vec<f64>>,
}

impl ForwardCache {
    pub fn output(&self) -> &[f64] {
        self.activations.last().expect("at least the input")
    }
}

impl Mlp {
    /// Glorot-uniform weights, zero biases; the last layer's weights are
    /// additionally scaled by `output_scale`.
    pub fn new<R: Rng + ?Sized>(
        sizes: &[usize],
        tanh_output: bool,
        output_scale: f64,
        rng: &mut R,
    ) -> Self {
        assert!(sizes.len() >= 2, "need input and output sizes");
        let mut params = Vec::with_capacity(Self::count(sizes));
        let last = sizes.len() - 2;
        for (l, pair) in sizes.windows(2).enumerate() {
            let (inputs, outputs) = (pair[0], pair[1]);
            let limit = (6.0 / (inputs + outputs) as f64).sqrt();
            let scale = if l == last { output_scale } else { 1.0 };
            for _ in 0..inputs * outputs {
                params.push(rng.random_range(-limit..limit) * scale);
            }
            params.extend(std::iter::repeat_n(0.0, outputs));
        }
        Self { sizes: sizes.to_vec(), params, tanh_output }
    }

    pub fn from_params(sizes: &[usize], params: Vec<f64>, tanh_output: bool) -> Option<Self> {
        (sizes.len() >= 2 && params.len() == Self::count(sizes))
            .then(|| Self { sizes: sizes.to_vec(), params, tanh_output })
    }

    fn count(sizes: &[usize]) -> usize {
        sizes.windows(2).map(|p| p[0] * p[1] + p[1]).sum()
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn tanh_output(&self) -> bool {
        self.tanh_output
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn input_size(&self) -> usize {
        self.sizes[0]
    }

    pub fn output_size(&self) -> usize {
        *self.sizes.last().expect("non-empty")
    }

    pub fn forward(&self, x: &[f64]) -> Vec<f64> {
        self.forward_cached(x).activations.pop().expect("output layer")
    }

    pub fn forward_cached(&self, x: &[f64]) -> ForwardCache {
        debug_assert_eq!(x.len(), self.input_size());
        let n_layers = self.sizes.len() - 1;
        let mut activations = Vec::with_capacity(n_layers + 1);
        activations.push(x.to_vec());
        let mut offset = 0;
        for (l, pair) in self.sizes.windows(2).enumerate() {
            let (inputs, outputs) = (pair[0], pair[1]);
            let w = &self.params[offset..offset + inputs * outputs];
            let b = &self.params[offset + inputs * outputs..offset + inputs * outputs + outputs];
            let a = &activations[l];
            let mut z: Vec<f64> = b.to_vec();
            for (o, zo) in z.iter_mut().enumerate() {
                let row = &w[o * inputs..(o + 1) * inputs];
                *zo += row.iter().zip(a).map(|(wi, ai)| wi * ai).sum::<f64>();
            }
            if l + 1 < n_layers || self.tanh_output {
                z.iter_mut().for_each(|v| *v = v.tanh());
            }
            activations.push(z);
            offset += inputs * outputs + outputs;
        }
        ForwardCache { activations }
    }

    /// Adds `d loss / d params` into `grad`, given `d loss / d output`.
    pub fn backward(&self, cache: &ForwardCache, grad_output: &[f64], grad: &mut [f64]) {
        let n_layers = self.sizes.len() - 1;
        let mut delta: Vec<f64> = grad_output.to_vec();
        if self.tanh_output {
            for (d, a) in delta.iter_mut().zip(cache.output()) {
                *d *= 1.0 - a * a;
            }
        }
        let mut offsets = Vec::with_capacity(n_layers);
        let mut offset = 0;
        for pair in self.sizes.windows(2) {
            offsets.push(offset);
            offset += pair[0] * pair[1] + pair[1];
        }
        for l in (0..n_layers).rev() {
            let (inputs, outputs) = (self.sizes[l], self.sizes[l + 1]);
            let off = offsets[l];
            let a_prev = &cache.activations[l];
            let (gw, rest) = grad[off..off + inputs * outputs + outputs].split_at_mut(inputs * outputs);
            for o in 0..outputs {
                let d = delta[o];
                if d == 0.0 {
                    continue;
                }
                rest[o] += d;
                let row = &mut gw[o * inputs..(o + 1) * inputs];
                for (g, a) in row.iter_mut().zip(a_prev) {
                    *g += d * a;
                }
            }
            if l > 0 {
                let w = &self.params[off..off + inputs * outputs];
                let mut prev = vec![0.0; inputs];
                for o in 0..outputs {
                    let d = delta[o];
                    if d == 0.0 {
                        continue;
                    }
                    for (p, wi) in prev.iter_mut().zip(&w[o * inputs..(o + 1) * inputs]) {
                        *p += d * wi;
                    }
                }
                for (p, a) in prev.iter_mut().zip(a_prev) {
                    *p *= 1.0 - a * a;
                }
                delta = prev;
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamParams {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamParams {
    fn default() -> Self {
        Self { learning_rate: 3e-4, beta1: 0.9, beta2: 0.999, epsilon: 1e-8 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Adam {
    pub params: AdamParams,
    pub(crate) m: Vec<f64>,
    pub(crate) v: Vec<f64>,
    pub(crate) t: u64,
}

impl Adam {
    pub fn new(n: usize, params: AdamParams) -> Self {
        Self { params, m: vec![0.0; n], v: vec![0.0; n], t: 0 }
    }

    pub fn step(&mut self, weights: &mut [f64], grad: &[f64]) {
        let AdamParams { learning_rate, beta1, beta2, epsilon } = self.params;
        self.t += 1;
        let bc1 = 1.0 - beta1.powi(self.t as i32);
        let bc2 = 1.0 - beta2.powi(self.t as i32);
        for i in 0..weights.len() {
            let g = grad[i];
            self.m[i] = beta1 * self.m[i] + (1.0 - beta1) * g;
            self.v[i] = beta2 * self.v[i] + (1.0 - beta2) * g * g;
            let m_hat = self.m[i] / bc1;
            let v_hat = self.v[i] / bc2;
            weights[i] -= learning_rate * m_hat / (v_hat.sqrt() + epsilon);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// loss = sum(output * c) so d loss / d output = c.
    fn check_gradients(tanh_output: bool) {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let net = Mlp::new(&[3, 5, 4, 2], tanh_output, 1.0, &mut rng);
        let x = [0.3, -0.7, 0.5];
        let c = [0.9, -1.3];
        let loss = |n: &Mlp| n.forward(&x).iter().zip(&c).map(|(o, c)| o * c).sum::<f64>();
        let mut grad = vec![0.0; net.params().len()];
        net.backward(&net.forward_cached(&x), &c, &mut grad);
        let h = 1e-6;
        for i in 0..net.params().len() {
            let mut plus = net.clone();
            plus.params_mut()[i] += h;
            let mut minus = net.clone();
            minus.params_mut()[i] -= h;
            let fd = (loss(&plus) - loss(&minus)) / (2.0 * h);
            assert!((fd - grad[i]).abs() < 1e-7, "param {i}: fd {fd} vs {}", grad[i]);
        }
    }

    #[test]
    fn backward_matches_finite_differences() {
        check_gradients(false);
        check_gradients(true);
    }

    #[test]
    fn adam_descends_quadratic() {
        let mut w = vec![1.0, -2.0];
        let mut opt = Adam::new(2, AdamParams { learning_rate: 0.1, ..Default::default() });
        for _ in 0..500 {
            let g: Vec<f64> = w.iter().map(|x| 2.0 * x).collect();
            opt.step(&mut w, &g);
        }
        assert!(w.iter().all(|x| x.abs() < 1e-2), "{w:?}");
    }

    #[test]
    fn adam_zero_gradient_is_a_no_op() {
        let mut w = vec![0.5, 0.25];
        let mut opt = Adam::new(2, AdamParams::default());
        opt.step(&mut w, &[0.0, 0.0]);
        assert_eq!(w, vec![0.5, 0.25]);
    }
}

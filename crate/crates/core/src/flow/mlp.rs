//! Small fully connected networks with hand-rolled reverse mode.
//!
//! tanh on hidden layers, linear output. The backward pass accumulates
//! parameter gradients into a caller-owned [`MlpGrad`] and returns the
//! adjoint with respect to the input, which is all the coupling layers need.

use rand::Rng;

#[derive(Debug, Clone)]
pub struct Mlp {
    sizes: Vec<usize>,
    /// weights[l] is row-major (sizes[l+1] x sizes[l]).
    weights: Vec<Vec<f64>>,
    biases: Vec<Vec<f64>>,
}

/// Forward-pass record: post-activation values per layer, input first.
#[derive(Debug, Clone)]
pub struct MlpTape {
    activations: Vec<Vec<f64>>,
}

/// Gradient accumulator mirroring [`Mlp`]'s parameter layout.
#[derive(Debug, Clone)]
pub struct MlpGrad {
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<Vec<f64>>,
}

impl Mlp {
    /// All-zero network: maps everything to zero.
    pub fn zeros(sizes: Vec<usize>) -> Self {
        assert!(sizes.len() >= 2, "need at least input and output sizes");
        let weights = (0..sizes.len() - 1)
            .map(|l| vec![0.0; sizes[l + 1] * sizes[l]])
            .collect();
        let biases = (0..sizes.len() - 1).map(|l| vec![0.0; sizes[l + 1]]).collect();
        Self {
            sizes,
            weights,
            biases,
        }
    }

    /// Fan-in-scaled uniform init on hidden layers; the final layer stays
    /// zero so the enclosing coupling layer starts at the identity.
    pub fn init_hidden<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        let last = self.weights.len() - 1;
        for l in 0..last {
            let bound = 1.0 / (self.sizes[l] as f64).sqrt();
            for w in &mut self.weights[l] {
                *w = rng.gen_range(-bound..bound);
            }
            for b in &mut self.biases[l] {
                *b = rng.gen_range(-bound..bound);
            }
        }
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn param_count(&self) -> usize {
        self.weights.iter().map(Vec::len).sum::<usize>() + self.biases.iter().map(Vec::len).sum::<usize>()
    }

    fn layer_forward(&self, l: usize, input: &[f64], last: bool) -> Vec<f64> {
        let (n_out, n_in) = (self.sizes[l + 1], self.sizes[l]);
        let w = &self.weights[l];
        let mut out = self.biases[l].clone();
        for o in 0..n_out {
            let row = &w[o * n_in..(o + 1) * n_in];
            let mut acc = out[o];
            for i in 0..n_in {
                acc += row[i] * input[i];
            }
            out[o] = if last { acc } else { acc.tanh() };
        }
        out
    }

    pub fn forward(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.sizes[0]);
        let n_layers = self.weights.len();
        let mut cur = x.to_vec();
        for l in 0..n_layers {
            cur = self.layer_forward(l, &cur, l == n_layers - 1);
        }
        cur
    }

    pub fn forward_tape(&self, x: &[f64]) -> (Vec<f64>, MlpTape) {
        debug_assert_eq!(x.len(), self.sizes[0]);
        let n_layers = self.weights.len();
        let mut activations = Vec::with_capacity(n_layers + 1);
        activations.push(x.to_vec());
        for l in 0..n_layers {
            let next = self.layer_forward(l, activations.last().unwrap(), l == n_layers - 1);
            activations.push(next);
        }
        let out = activations.last().unwrap().clone();
        (out, MlpTape { activations })
    }

    /// Backward pass: given the adjoint of the output, accumulate parameter
    /// gradients scaled by `weight` into `grad` and return the (unweighted)
    /// adjoint of the input.
    pub fn backward(&self, tape: &MlpTape, d_out: &[f64], weight: f64, grad: &mut MlpGrad) -> Vec<f64> {
        let n_layers = self.weights.len();
        let mut delta = d_out.to_vec();
        for l in (0..n_layers).rev() {
            let (n_out, n_in) = (self.sizes[l + 1], self.sizes[l]);
            let a_in = &tape.activations[l];
            let a_out = &tape.activations[l + 1];
            // tanh'(z) = 1 - tanh(z)^2, expressed through the stored output
            if l != n_layers - 1 {
                for o in 0..n_out {
                    delta[o] *= 1.0 - a_out[o] * a_out[o];
                }
            }
            let w = &self.weights[l];
            let gw = &mut grad.weights[l];
            let gb = &mut grad.biases[l];
            let mut d_in = vec![0.0; n_in];
            for o in 0..n_out {
                let d = delta[o];
                gb[o] += weight * d;
                let row = &w[o * n_in..(o + 1) * n_in];
                let grow = &mut gw[o * n_in..(o + 1) * n_in];
                for i in 0..n_in {
                    grow[i] += weight * d * a_in[i];
                    d_in[i] += d * row[i];
                }
            }
            delta = d_in;
        }
        delta
    }

    pub fn write_flat(&self, out: &mut Vec<f64>) {
        for (w, b) in self.weights.iter().zip(&self.biases) {
            out.extend_from_slice(w);
            out.extend_from_slice(b);
        }
    }

    /// Reads parameters back in [`Self::write_flat`] order; returns how many
    /// values were consumed.
    pub fn read_flat(&mut self, flat: &[f64]) -> usize {
        let mut off = 0;
        for (w, b) in self.weights.iter_mut().zip(&mut self.biases) {
            let nw = w.len();
            w.copy_from_slice(&flat[off..off + nw]);
            off += nw;
            let nb = b.len();
            b.copy_from_slice(&flat[off..off + nb]);
            off += nb;
        }
        off
    }
}

impl MlpGrad {
    pub fn zeros_like(mlp: &Mlp) -> Self {
        Self {
            weights: mlp.weights.iter().map(|w| vec![0.0; w.len()]).collect(),
            biases: mlp.biases.iter().map(|b| vec![0.0; b.len()]).collect(),
        }
    }

    pub fn write_flat(&self, out: &mut Vec<f64>) {
        for (w, b) in self.weights.iter().zip(&self.biases) {
            out.extend_from_slice(w);
            out.extend_from_slice(b);
        }
    }
}

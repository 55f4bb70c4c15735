//! A self-contained RealNVP normalizing flow.
//!
//! The flow is a stack of affine coupling layers with alternating even/odd
//! masks. Each layer passes the masked coordinates through unchanged, feeds
//! them to two small MLPs producing a log-scale `s` and a shift `t`, and maps
//! the remaining coordinates as `x = z * exp(s) + t`. The Jacobian is
//! triangular, so the log-determinant is the sum of the active `s` outputs.
//!
//! Raw `s` outputs are squashed through `clamp * tanh(s / clamp)`, so with
//! clamp `c`, `|log det| <= n_layers * dim * c` for any input. Final MLP
//! layers are zero-initialized: a freshly built flow is exactly the identity
//! and its push-forward density equals the standard-Gaussian base.
//!
//! Parameter gradients are computed by an explicit layer-by-layer backward
//! pass (closed-form coupling adjoints plus MLP backprop); no external
//! autodiff.
//!
//! # Checkpoint format
//!
//! [`RealNvpFlow::save`] writes, all little-endian:
//!
//! | field        | type               |
//! |--------------|--------------------|
//! | magic        | 8 bytes `RNVPCKPT` |
//! | version      | u32 (= 1)          |
//! | dim          | u32                |
//! | n_layers     | u32                |
//! | n_hidden     | u32                |
//! | hidden sizes | n_hidden x u32     |
//! | scale clamp  | f64                |
//! | mask pattern | n_layers x u8 (0 = even coordinates pass through) |
//! | parameters   | param_count x f64, [`RealNvpFlow::params_flat`] order |
//!
//! Parameter order is per layer: scale net then shift net; per net, each
//! linear layer's weights (row-major) followed by its biases.

mod adam;
mod mlp;

pub use adam::AdamState;
pub use mlp::{Mlp, MlpGrad, MlpTape};

use crate::targets::TargetDistribution;
use crate::{Error, Result};
use rand::Rng;
use std::io::{Read, Write};
use std::path::Path;

const CHECKPOINT_MAGIC: &[u8; 8] = b"RNVPCKPT";

/// One affine coupling layer.
#[derive(Debug, Clone)]
pub struct CouplingLayer {
    /// true = coordinate passes through unchanged and feeds the nets.
    mask: Vec<bool>,
    s_net: Mlp,
    t_net: Mlp,
    scale_clamp: f64,
}

/// Record of one coupling-layer pass (forward or inverse).
pub struct CouplingTape {
    s_tape: MlpTape,
    t_tape: MlpTape,
    /// Input of the pass (z for forward, x for inverse).
    input: Vec<f64>,
    /// Squashed log-scales (zero on masked coordinates).
    s: Vec<f64>,
    /// Shift-net outputs.
    t: Vec<f64>,
}

impl CouplingLayer {
    fn new(mask: Vec<bool>, hidden: &[usize], scale_clamp: f64) -> Self {
        let d = mask.len();
        let mut sizes = Vec::with_capacity(hidden.len() + 2);
        sizes.push(d);
        sizes.extend_from_slice(hidden);
        sizes.push(d);
        Self {
            mask,
            s_net: Mlp::zeros(sizes.clone()),
            t_net: Mlp::zeros(sizes),
            scale_clamp,
        }
    }

    fn masked_input(&self, v: &[f64]) -> Vec<f64> {
        v.iter()
            .zip(&self.mask)
            .map(|(x, &m)| if m { *x } else { 0.0 })
            .collect()
    }

    fn squash(&self, u: f64) -> f64 {
        self.scale_clamp * (u / self.scale_clamp).tanh()
    }

    /// d squash / d u, expressed through the squashed value.
    fn squash_deriv(&self, s: f64) -> f64 {
        let r = s / self.scale_clamp;
        1.0 - r * r
    }

    /// Evaluate both nets on the pass-through block of `v`.
    fn nets(&self, v: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let id_input = self.masked_input(v);
        let u = self.s_net.forward(&id_input);
        let t = self.t_net.forward(&id_input);
        let s = u
            .iter()
            .zip(&self.mask)
            .map(|(&ui, &m)| if m { 0.0 } else { self.squash(ui) })
            .collect();
        (s, t)
    }

    fn nets_with_tape(&self, v: &[f64]) -> (Vec<f64>, Vec<f64>, MlpTape, MlpTape) {
        let id_input = self.masked_input(v);
        let (u, s_tape) = self.s_net.forward_tape(&id_input);
        let (t, t_tape) = self.t_net.forward_tape(&id_input);
        let s = u
            .iter()
            .zip(&self.mask)
            .map(|(&ui, &m)| if m { 0.0 } else { self.squash(ui) })
            .collect();
        (s, t, s_tape, t_tape)
    }

    fn forward(&self, z: &[f64]) -> (Vec<f64>, f64) {
        let (s, t) = self.nets(z);
        let mut x = z.to_vec();
        let mut log_det = 0.0;
        for i in 0..z.len() {
            if !self.mask[i] {
                x[i] = z[i] * s[i].exp() + t[i];
                log_det += s[i];
            }
        }
        (x, log_det)
    }

    fn forward_tape(&self, z: &[f64]) -> (Vec<f64>, f64, CouplingTape) {
        let (s, t, s_tape, t_tape) = self.nets_with_tape(z);
        let mut x = z.to_vec();
        let mut log_det = 0.0;
        for i in 0..z.len() {
            if !self.mask[i] {
                x[i] = z[i] * s[i].exp() + t[i];
                log_det += s[i];
            }
        }
        let tape = CouplingTape {
            s_tape,
            t_tape,
            input: z.to_vec(),
            s,
            t,
        };
        (x, log_det, tape)
    }

    fn inverse(&self, x: &[f64]) -> (Vec<f64>, f64) {
        let (s, t) = self.nets(x);
        let mut z = x.to_vec();
        let mut log_det_inv = 0.0;
        for i in 0..x.len() {
            if !self.mask[i] {
                z[i] = (x[i] - t[i]) * (-s[i]).exp();
                log_det_inv -= s[i];
            }
        }
        (z, log_det_inv)
    }

    fn inverse_tape(&self, x: &[f64]) -> (Vec<f64>, f64, CouplingTape) {
        let (s, t, s_tape, t_tape) = self.nets_with_tape(x);
        let mut z = x.to_vec();
        let mut log_det_inv = 0.0;
        for i in 0..x.len() {
            if !self.mask[i] {
                z[i] = (x[i] - t[i]) * (-s[i]).exp();
                log_det_inv -= s[i];
            }
        }
        let tape = CouplingTape {
            s_tape,
            t_tape,
            input: x.to_vec(),
            s,
            t,
        };
        (z, log_det_inv, tape)
    }

    /// Backward through the forward map. `d_out` is the adjoint of x,
    /// `d_log_det` the adjoint of this layer's `+sum s` contribution.
    /// Parameter gradients scaled by `weight` are added to `grad`; the
    /// returned adjoint of z is unweighted.
    fn backward_forward(
        &self,
        tape: &CouplingTape,
        d_out: &[f64],
        d_log_det: f64,
        weight: f64,
        grad: &mut CouplingGrad,
    ) -> Vec<f64> {
        let z = &tape.input;
        let d = z.len();
        let mut du = vec![0.0; d];
        let mut dt = vec![0.0; d];
        let mut dz = vec![0.0; d];
        for i in 0..d {
            if self.mask[i] {
                dz[i] = d_out[i];
            } else {
                let es = tape.s[i].exp();
                du[i] = (d_out[i] * z[i] * es + d_log_det) * self.squash_deriv(tape.s[i]);
                dt[i] = d_out[i];
                dz[i] = d_out[i] * es;
            }
        }
        let d_id_s = self.s_net.backward(&tape.s_tape, &du, weight, &mut grad.s_net);
        let d_id_t = self.t_net.backward(&tape.t_tape, &dt, weight, &mut grad.t_net);
        for i in 0..d {
            if self.mask[i] {
                dz[i] += d_id_s[i] + d_id_t[i];
            }
        }
        dz
    }

    /// Backward through the inverse map. `d_out` is the adjoint of z,
    /// `d_log_det_inv` the adjoint of this layer's `-sum s` contribution.
    /// Returns the adjoint of x.
    fn backward_inverse(
        &self,
        tape: &CouplingTape,
        d_out: &[f64],
        d_log_det_inv: f64,
        weight: f64,
        grad: &mut CouplingGrad,
    ) -> Vec<f64> {
        let x = &tape.input;
        let d = x.len();
        let mut du = vec![0.0; d];
        let mut dt = vec![0.0; d];
        let mut dx = vec![0.0; d];
        for i in 0..d {
            if self.mask[i] {
                dx[i] = d_out[i];
            } else {
                let ems = (-tape.s[i]).exp();
                let z_i = (x[i] - tape.t[i]) * ems;
                du[i] = (-d_out[i] * z_i - d_log_det_inv) * self.squash_deriv(tape.s[i]);
                dt[i] = -d_out[i] * ems;
                dx[i] = d_out[i] * ems;
            }
        }
        let d_id_s = self.s_net.backward(&tape.s_tape, &du, weight, &mut grad.s_net);
        let d_id_t = self.t_net.backward(&tape.t_tape, &dt, weight, &mut grad.t_net);
        for i in 0..d {
            if self.mask[i] {
                dx[i] += d_id_s[i] + d_id_t[i];
            }
        }
        dx
    }
}

/// Gradient accumulator for one coupling layer.
#[derive(Debug, Clone)]
pub struct CouplingGrad {
    pub s_net: MlpGrad,
    pub t_net: MlpGrad,
}

/// Gradient over all flow parameters.
#[derive(Debug, Clone)]
pub struct FlowGrad {
    layers: Vec<CouplingGrad>,
}

impl FlowGrad {
    pub fn zeros_like(flow: &RealNvpFlow) -> Self {
        Self {
            layers: flow
                .layers
                .iter()
                .map(|l| CouplingGrad {
                    s_net: MlpGrad::zeros_like(&l.s_net),
                    t_net: MlpGrad::zeros_like(&l.t_net),
                })
                .collect(),
        }
    }

    /// Flatten in [`RealNvpFlow::params_flat`] order.
    pub fn to_flat(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for layer in &self.layers {
            layer.s_net.write_flat(&mut out);
            layer.t_net.write_flat(&mut out);
        }
        out
    }
}

/// Stack of coupling layers with alternating masks over a standard-Gaussian
/// base.
#[derive(Debug, Clone)]
pub struct RealNvpFlow {
    dim: usize,
    layers: Vec<CouplingLayer>,
    hidden: Vec<usize>,
    scale_clamp: f64,
}

impl RealNvpFlow {
    /// Default scale clamp; keeps early training stable.
    pub const DEFAULT_SCALE_CLAMP: f64 = 5.0;

    /// Identity-initialized flow: `n_layers` coupling layers whose masks
    /// alternate even/odd, each with MLPs of the given hidden sizes.
    pub fn identity(dim: usize, n_layers: usize, hidden: &[usize], scale_clamp: f64) -> Result<Self> {
        if dim < 2 {
            return Err(Error::InvalidArgument(
                "coupling masks need dim >= 2 (one coordinate per side)".into(),
            ));
        }
        if n_layers == 0 {
            return Err(Error::InvalidArgument("need at least one coupling layer".into()));
        }
        if !(scale_clamp > 0.0) {
            return Err(Error::InvalidArgument("scale clamp must be > 0".into()));
        }
        let layers = (0..n_layers)
            .map(|l| {
                let mask: Vec<bool> = (0..dim).map(|i| i % 2 == l % 2).collect();
                CouplingLayer::new(mask, hidden, scale_clamp)
            })
            .collect();
        Ok(Self {
            dim,
            layers,
            hidden: hidden.to_vec(),
            scale_clamp,
        })
    }

    /// Identity flow with randomized hidden layers (final layers stay zero,
    /// so the map is still the identity).
    pub fn identity_with_hidden_init<R: Rng + ?Sized>(
        dim: usize,
        n_layers: usize,
        hidden: &[usize],
        scale_clamp: f64,
        rng: &mut R,
    ) -> Result<Self> {
        let mut flow = Self::identity(dim, n_layers, hidden, scale_clamp)?;
        for layer in &mut flow.layers {
            layer.s_net.init_hidden(rng);
            layer.t_net.init_hidden(rng);
        }
        Ok(flow)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_layers(&self) -> usize {
        self.layers.len()
    }

    pub fn scale_clamp(&self) -> f64 {
        self.scale_clamp
    }

    pub fn param_count(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.s_net.param_count() + l.t_net.param_count())
            .sum()
    }

    /// Flatten all parameters (layer by layer, scale net then shift net).
    pub fn params_flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        for layer in &self.layers {
            layer.s_net.write_flat(&mut out);
            layer.t_net.write_flat(&mut out);
        }
        out
    }

    /// Write back a flat parameter vector. Rejects non-finite entries.
    pub fn set_params_flat(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.param_count() {
            return Err(Error::dim(self.param_count(), flat.len()));
        }
        if flat.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("flow parameters".into()));
        }
        let mut off = 0;
        for layer in &mut self.layers {
            off += layer.s_net.read_flat(&flat[off..]);
            off += layer.t_net.read_flat(&flat[off..]);
        }
        Ok(())
    }

    /// x = T(z) and the forward log-Jacobian.
    pub fn forward(&self, z: &[f64]) -> (Vec<f64>, f64) {
        debug_assert_eq!(z.len(), self.dim);
        let mut cur = z.to_vec();
        let mut log_det = 0.0;
        for layer in &self.layers {
            let (next, ld) = layer.forward(&cur);
            cur = next;
            log_det += ld;
        }
        (cur, log_det)
    }

    /// z = T^{-1}(x) and the inverse log-Jacobian (= -forward log-det at z).
    pub fn inverse(&self, x: &[f64]) -> (Vec<f64>, f64) {
        debug_assert_eq!(x.len(), self.dim);
        let mut cur = x.to_vec();
        let mut log_det_inv = 0.0;
        for layer in self.layers.iter().rev() {
            let (prev, ld) = layer.inverse(&cur);
            cur = prev;
            log_det_inv += ld;
        }
        (cur, log_det_inv)
    }

    /// Standard-Gaussian base log-density.
    pub fn base_log_density(&self, z: &[f64]) -> f64 {
        let sq: f64 = z.iter().map(|v| v * v).sum();
        -0.5 * sq - 0.5 * self.dim as f64 * (2.0 * std::f64::consts::PI).ln()
    }

    /// Exact push-forward log-density: log phi(T^{-1}(x)) + log |det J_{T^{-1}}|(x).
    pub fn log_density(&self, x: &[f64]) -> f64 {
        let (z, log_det_inv) = self.inverse(x);
        self.base_log_density(&z) + log_det_inv
    }

    /// Adds `weight * grad_theta log lambda_theta(x)` into `grad`.
    pub fn accumulate_grad_log_density(&self, x: &[f64], weight: f64, grad: &mut FlowGrad) {
        // inverse pass, tapes in computation order (last layer first)
        let n = self.layers.len();
        let mut tapes = Vec::with_capacity(n);
        let mut cur = x.to_vec();
        for layer in self.layers.iter().rev() {
            let (prev, _ld, tape) = layer.inverse_tape(&cur);
            tapes.push(tape);
            cur = prev;
        }
        // objective: log phi(z) + per-layer (-sum s) contributions
        let mut adj: Vec<f64> = cur.iter().map(|v| -v).collect();
        // layer 0 ran last in the inverse pass, so its backward runs first
        for (idx, tape) in (0..n).zip(tapes.into_iter().rev()) {
            adj = self.layers[idx].backward_inverse(&tape, &adj, 1.0, weight, &mut grad.layers[idx]);
        }
    }

    /// grad_theta log lambda_theta(x) as a flat vector.
    pub fn param_grad_log_density(&self, x: &[f64]) -> Vec<f64> {
        let mut grad = FlowGrad::zeros_like(self);
        self.accumulate_grad_log_density(x, 1.0, &mut grad);
        grad.to_flat()
    }

    /// Adds `weight * grad_theta [log pi~(T_theta(z)) + log det(z)]` into
    /// `grad`; returns the mapped point and the value of the bracket.
    pub fn accumulate_grad_backward_terms(
        &self,
        target: &dyn TargetDistribution,
        z: &[f64],
        weight: f64,
        grad: &mut FlowGrad,
    ) -> Result<(Vec<f64>, f64)> {
        let n = self.layers.len();
        let mut tapes = Vec::with_capacity(n);
        let mut cur = z.to_vec();
        let mut log_det = 0.0;
        for layer in &self.layers {
            let (next, ld, tape) = layer.forward_tape(&cur);
            tapes.push(tape);
            cur = next;
            log_det += ld;
        }
        let value = target.log_density_unnorm(&cur)? + log_det;
        let mut adj = target.grad_log_density(&cur)?;
        for idx in (0..n).rev() {
            adj = self.layers[idx].backward_forward(&tapes[idx], &adj, 1.0, weight, &mut grad.layers[idx]);
        }
        Ok((cur, value))
    }

    /// grad_theta [log pi~(T_theta(z)) + log det(z)] as a flat vector.
    pub fn param_grad_backward_terms(
        &self,
        target: &dyn TargetDistribution,
        z: &[f64],
    ) -> Result<Vec<f64>> {
        let mut grad = FlowGrad::zeros_like(self);
        self.accumulate_grad_backward_terms(target, z, 1.0, &mut grad)?;
        Ok(grad.to_flat())
    }

    /// Serialize to the documented binary checkpoint layout.
    pub fn save<P: AsRef<Path>>(&self, path: P) -> Result<()> {
        let mut buf: Vec<u8> = Vec::new();
        buf.extend_from_slice(CHECKPOINT_MAGIC);
        buf.extend_from_slice(&1u32.to_le_bytes());
        buf.extend_from_slice(&(self.dim as u32).to_le_bytes());
        buf.extend_from_slice(&(self.layers.len() as u32).to_le_bytes());
        buf.extend_from_slice(&(self.hidden.len() as u32).to_le_bytes());
        for &h in &self.hidden {
            buf.extend_from_slice(&(h as u32).to_le_bytes());
        }
        buf.extend_from_slice(&self.scale_clamp.to_le_bytes());
        for layer in &self.layers {
            buf.push(if layer.mask[0] { 0 } else { 1 });
        }
        for v in self.params_flat() {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        let mut file = std::fs::File::create(path)?;
        file.write_all(&buf)?;
        Ok(())
    }

    /// Load a checkpoint written by [`RealNvpFlow::save`].
    pub fn load<P: AsRef<Path>>(path: P) -> Result<Self> {
        let mut bytes = Vec::new();
        std::fs::File::open(path)?.read_to_end(&mut bytes)?;
        let mut off = 0usize;
        fn take<'a>(bytes: &'a [u8], off: &mut usize, n: usize) -> Result<&'a [u8]> {
            if *off + n > bytes.len() {
                return Err(Error::Checkpoint("truncated file".into()));
            }
            let s = &bytes[*off..*off + n];
            *off += n;
            Ok(s)
        }
        fn read_u32(bytes: &[u8], off: &mut usize) -> Result<u32> {
            Ok(u32::from_le_bytes(take(bytes, off, 4)?.try_into().unwrap()))
        }
        if take(&bytes, &mut off, 8)? != CHECKPOINT_MAGIC {
            return Err(Error::Checkpoint("bad magic".into()));
        }
        let version = read_u32(&bytes, &mut off)?;
        if version != 1 {
            return Err(Error::Checkpoint(format!("unsupported version {version}")));
        }
        let dim = read_u32(&bytes, &mut off)? as usize;
        let n_layers = read_u32(&bytes, &mut off)? as usize;
        let n_hidden = read_u32(&bytes, &mut off)? as usize;
        let mut hidden = Vec::with_capacity(n_hidden);
        for _ in 0..n_hidden {
            hidden.push(read_u32(&bytes, &mut off)? as usize);
        }
        let clamp = f64::from_le_bytes(take(&bytes, &mut off, 8)?.try_into().unwrap());
        let mut phases = Vec::with_capacity(n_layers);
        for _ in 0..n_layers {
            phases.push(take(&bytes, &mut off, 1)?[0]);
        }
        let mut flow = Self::identity(dim, n_layers, &hidden, clamp)?;
        for (layer, &phase) in flow.layers.iter_mut().zip(&phases) {
            layer.mask = (0..dim).map(|i| i % 2 == phase as usize).collect();
        }
        let n_params = flow.param_count();
        let mut params = Vec::with_capacity(n_params);
        for _ in 0..n_params {
            params.push(f64::from_le_bytes(take(&bytes, &mut off, 8)?.try_into().unwrap()));
        }
        if off != bytes.len() {
            return Err(Error::Checkpoint("trailing bytes".into()));
        }
        flow.set_params_flat(&params)?;
        Ok(flow)
    }
}

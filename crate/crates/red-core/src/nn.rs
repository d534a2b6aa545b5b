//! Minimal dense-network machinery: forward pass, mean-squared-error
//! backprop, Adam, and a finite-difference gradient oracle.
//!
//! All math is f64. Layers are plain row-major weight matrices; hidden
//! layers use one shared activation, the output layer is linear. Everything
//! is deterministic given a seed and safe to evaluate from multiple threads
//! once constructed.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Normal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Tanh,
    Relu,
}

impl Activation {
    #[inline]
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Tanh => z.tanh(),
            Activation::Relu => z.max(0.0),
        }
    }

    /// Derivative expressed through the post-activation value.
    #[inline]
    fn derivative_from_output(self, a: f64) -> f64 {
        match self {
            Activation::Tanh => 1.0 - a * a,
            Activation::Relu => {
                if a > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

/// Architecture of a dense network: dims, hidden activation, init scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MlpSpec {
    pub input_dim: usize,
    pub hidden_dims: Vec<usize>,
    pub output_dim: usize,
    pub activation: Activation,
    /// Weight init std-dev is `init_scale / sqrt(fan_in)`.
    pub init_scale: f64,
}

impl MlpSpec {
    pub fn new(
        input_dim: usize,
        hidden_dims: Vec<usize>,
        output_dim: usize,
        activation: Activation,
        init_scale: f64,
    ) -> Result<Self> {
        let spec = MlpSpec {
            input_dim,
            hidden_dims,
            output_dim,
            activation,
            init_scale,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 || self.output_dim == 0 {
            return Err(Error::InvalidSpec("dims must be >= 1".into()));
        }
        if self.hidden_dims.iter().any(|&h| h == 0) {
            return Err(Error::InvalidSpec("hidden dims must be >= 1".into()));
        }
        if !(self.init_scale > 0.0 && self.init_scale.is_finite()) {
            return Err(Error::InvalidSpec("init_scale must be positive".into()));
        }
        Ok(())
    }

    /// Layer widths including input and output: `[in, h1, ..., out]`.
    pub fn dims(&self) -> Vec<usize> {
        let mut d = Vec::with_capacity(self.hidden_dims.len() + 2);
        d.push(self.input_dim);
        d.extend_from_slice(&self.hidden_dims);
        d.push(self.output_dim);
        d
    }
}

/// One dense layer: `w` is out_dim rows of in_dim weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub w: Vec<Vec<f64>>,
    pub b: Vec<f64>,
}

impl Layer {
    fn zeros(out_dim: usize, in_dim: usize) -> Self {
        Layer {
            w: vec![vec![0.0; in_dim]; out_dim],
            b: vec![0.0; out_dim],
        }
    }
}

/// Network parameters together with the spec they were built from.
///
/// Serializes as `{"spec": ..., "layers": [...], "format_version": 1}` with
/// floats at 17 significant digits (via [`crate::jsonio`]); round-trips are
/// value-exact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MlpParams {
    pub spec: MlpSpec,
    pub layers: Vec<Layer>,
    #[serde(default = "format_version_one")]
    pub format_version: u32,
}

fn format_version_one() -> u32 {
    1
}

/// Per-parameter gradients, shaped exactly like the layers they refer to.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpGrads {
    pub layers: Vec<Layer>,
}

impl MlpGrads {
    pub fn zeros_like(params: &MlpParams) -> Self {
        MlpGrads {
            layers: params
                .layers
                .iter()
                .map(|l| Layer::zeros(l.b.len(), l.w[0].len()))
                .collect(),
        }
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let n = a.len();
    let n4 = n & !3;
    let (mut s0, mut s1, mut s2, mut s3) = (0.0, 0.0, 0.0, 0.0);
    let mut i = 0;
    while i < n4 {
        s0 += a[i] * b[i];
        s1 += a[i + 1] * b[i + 1];
        s2 += a[i + 2] * b[i + 2];
        s3 += a[i + 3] * b[i + 3];
        i += 4;
    }
    let mut s = (s0 + s1) + (s2 + s3);
    while i < n {
        s += a[i] * b[i];
        i += 1;
    }
    s
}

#[inline]
fn axpy(alpha: f64, x: &[f64], out: &mut [f64]) {
    debug_assert_eq!(x.len(), out.len());
    for (o, xi) in out.iter_mut().zip(x) {
        *o += alpha * xi;
    }
}

/// Draw parameters for `spec`: weights i.i.d. Gaussian with std
/// `init_scale / sqrt(fan_in)`, biases zero. Deterministic in `seed`.
pub fn mlp_init(spec: &MlpSpec, seed: u64) -> MlpParams {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dims = spec.dims();
    let mut layers = Vec::with_capacity(dims.len() - 1);
    for pair in dims.windows(2) {
        let (fan_in, fan_out) = (pair[0], pair[1]);
        let normal = Normal::new(0.0, spec.init_scale / (fan_in as f64).sqrt())
            .expect("positive std checked by spec");
        let w = (0..fan_out)
            .map(|_| (0..fan_in).map(|_| rng.sample(normal)).collect())
            .collect();
        layers.push(Layer {
            w,
            b: vec![0.0; fan_out],
        });
    }
    MlpParams {
        spec: spec.clone(),
        layers,
        format_version: 1,
    }
}

fn check_input(params: &MlpParams, x: &[f64]) -> Result<()> {
    if x.len() != params.spec.input_dim {
        return Err(Error::ShapeMismatch {
            what: "mlp input",
            expected: params.spec.input_dim,
            got: x.len(),
        });
    }
    Ok(())
}

/// Evaluate the network on one input vector.
pub fn mlp_forward(params: &MlpParams, x: &[f64]) -> Result<Vec<f64>> {
    check_input(params, x)?;
    let n_layers = params.layers.len();
    let mut cur = x.to_vec();
    for (li, layer) in params.layers.iter().enumerate() {
        let last = li + 1 == n_layers;
        let mut next = Vec::with_capacity(layer.b.len());
        for (row, &bias) in layer.w.iter().zip(&layer.b) {
            let z = dot(row, &cur) + bias;
            next.push(if last { z } else { params.spec.activation.apply(z) });
        }
        cur = next;
    }
    Ok(cur)
}

/// Fused forward + backward over a batch. `fill_dout(i, output, dout)` must
/// write the loss gradient w.r.t. the network output for sample `i`.
/// Activations and deltas are reused across samples.
pub(crate) fn grad_with<F>(
    params: &MlpParams,
    inputs: &[Vec<f64>],
    mut fill_dout: F,
) -> Result<MlpGrads>
where
    F: FnMut(usize, &[f64], &mut [f64]),
{
    for x in inputs {
        check_input(params, x)?;
    }
    let dims = params.spec.dims();
    let n_layers = params.layers.len();
    let act = params.spec.activation;

    let mut grads = MlpGrads::zeros_like(params);
    // acts[l] holds the post-activation output of layer l-1 (acts[0] = input).
    let mut acts: Vec<Vec<f64>> = dims.iter().map(|&d| vec![0.0; d]).collect();
    let max_dim = *dims.iter().max().expect("at least two dims");
    let mut delta = vec![0.0; max_dim];
    let mut delta_prev = vec![0.0; max_dim];

    for (idx, x) in inputs.iter().enumerate() {
        acts[0].copy_from_slice(x);
        for (li, layer) in params.layers.iter().enumerate() {
            let last = li + 1 == n_layers;
            let (lo, hi) = acts.split_at_mut(li + 1);
            let input = &lo[li];
            let out = &mut hi[0];
            for ((row, &bias), o) in layer.w.iter().zip(&layer.b).zip(out.iter_mut()) {
                let z = dot(row, input) + bias;
                *o = if last { z } else { act.apply(z) };
            }
        }

        fill_dout(idx, &acts[n_layers], &mut delta[..dims[n_layers]]);

        for li in (0..n_layers).rev() {
            let layer = &params.layers[li];
            let g = &mut grads.layers[li];
            let input = &acts[li];
            let out_dim = dims[li + 1];
            let in_dim = dims[li];

            if li > 0 {
                delta_prev[..in_dim].fill(0.0);
            }
            for j in 0..out_dim {
                let d = delta[j];
                if d != 0.0 {
                    axpy(d, input, &mut g.w[j]);
                    g.b[j] += d;
                    if li > 0 {
                        axpy(d, &layer.w[j], &mut delta_prev[..in_dim]);
                    }
                }
            }
            if li > 0 {
                let prev_act = &acts[li];
                for i in 0..in_dim {
                    delta_prev[i] *= act.derivative_from_output(prev_act[i]);
                }
                delta[..in_dim].copy_from_slice(&delta_prev[..in_dim]);
            }
        }
    }
    Ok(grads)
}

fn check_batch(params: &MlpParams, batch: &[(Vec<f64>, Vec<f64>)]) -> Result<()> {
    if batch.is_empty() {
        return Err(Error::EmptyDataset);
    }
    for (_, t) in batch {
        if t.len() != params.spec.output_dim {
            return Err(Error::ShapeMismatch {
                what: "mlp target",
                expected: params.spec.output_dim,
                got: t.len(),
            });
        }
    }
    Ok(())
}

/// Gradient of the batch MSE `(1/B) sum_b ||f(x_b) - t_b||^2` w.r.t. every
/// weight and bias.
pub fn mlp_grad(params: &MlpParams, batch: &[(Vec<f64>, Vec<f64>)]) -> Result<MlpGrads> {
    check_batch(params, batch)?;
    let scale = 2.0 / batch.len() as f64;
    let inputs: Vec<Vec<f64>> = batch.iter().map(|(x, _)| x.clone()).collect();
    grad_with(params, &inputs, |i, out, dout| {
        for (d, (o, t)) in dout.iter_mut().zip(out.iter().zip(&batch[i].1)) {
            *d = scale * (o - t);
        }
    })
}

/// Batch MSE `(1/B) sum_b ||f(x_b) - t_b||^2`.
pub fn mse_loss(params: &MlpParams, batch: &[(Vec<f64>, Vec<f64>)]) -> Result<f64> {
    check_batch(params, batch)?;
    let mut total = 0.0;
    for (x, t) in batch {
        let y = mlp_forward(params, x)?;
        total += y.iter().zip(t).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
    }
    Ok(total / batch.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AdamHyper {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamHyper {
    fn default() -> Self {
        AdamHyper {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// Adam moment accumulators, shaped like the parameters they update.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub t: u64,
    pub m: Vec<Layer>,
    pub v: Vec<Layer>,
    pub hyper: AdamHyper,
}

impl AdamState {
    pub fn new(params: &MlpParams, hyper: AdamHyper) -> Self {
        let zeros: Vec<Layer> = params
            .layers
            .iter()
            .map(|l| Layer::zeros(l.b.len(), l.w[0].len()))
            .collect();
        AdamState {
            t: 0,
            m: zeros.clone(),
            v: zeros,
            hyper,
        }
    }
}

/// One bias-corrected Adam update. Consumes and returns state and params so
/// callers never observe a half-updated pair.
pub fn adam_step(
    mut state: AdamState,
    mut params: MlpParams,
    grads: &MlpGrads,
) -> Result<(AdamState, MlpParams)> {
    if grads.layers.len() != params.layers.len() {
        return Err(Error::ShapeMismatch {
            what: "gradient layers",
            expected: params.layers.len(),
            got: grads.layers.len(),
        });
    }
    state.t += 1;
    let h = state.hyper;
    let bc1 = 1.0 - h.beta1.powi(state.t as i32);
    let bc2 = 1.0 - h.beta2.powi(state.t as i32);

    let update = |p: &mut f64, m: &mut f64, v: &mut f64, g: f64| {
        *m = h.beta1 * *m + (1.0 - h.beta1) * g;
        *v = h.beta2 * *v + (1.0 - h.beta2) * g * g;
        let m_hat = *m / bc1;
        let v_hat = *v / bc2;
        *p -= h.lr * m_hat / (v_hat.sqrt() + h.epsilon);
    };

    for (li, layer) in params.layers.iter_mut().enumerate() {
        let (gm, gv, gl) = (&mut state.m[li], &mut state.v[li], &grads.layers[li]);
        if gl.b.len() != layer.b.len() || gl.w[0].len() != layer.w[0].len() {
            return Err(Error::ShapeMismatch {
                what: "gradient layer shape",
                expected: layer.b.len(),
                got: gl.b.len(),
            });
        }
        for j in 0..layer.b.len() {
            for i in 0..layer.w[j].len() {
                update(&mut layer.w[j][i], &mut gm.w[j][i], &mut gv.w[j][i], gl.w[j][i]);
            }
            update(&mut layer.b[j], &mut gm.b[j], &mut gv.b[j], gl.b[j]);
        }
    }
    Ok((state, params))
}

/// Compare analytic gradients against central finite differences with step
/// `h`; returns the max over parameters of
/// `|analytic - numeric| / max(1e-8, |analytic| + |numeric|)`.
pub fn finite_diff_check(
    params: &MlpParams,
    batch: &[(Vec<f64>, Vec<f64>)],
    h: f64,
) -> Result<f64> {
    if !(h > 0.0) {
        return Err(Error::InvalidStep);
    }
    let analytic = mlp_grad(params, batch)?;
    let mut work = params.clone();
    let mut worst: f64 = 0.0;

    let n_layers = params.layers.len();
    for li in 0..n_layers {
        let rows = params.layers[li].b.len();
        let cols = params.layers[li].w[0].len();
        for j in 0..rows {
            for i in 0..=cols {
                let read = |p: &MlpParams| {
                    if i < cols {
                        p.layers[li].w[j][i]
                    } else {
                        p.layers[li].b[j]
                    }
                };
                let write = |p: &mut MlpParams, v: f64| {
                    if i < cols {
                        p.layers[li].w[j][i] = v;
                    } else {
                        p.layers[li].b[j] = v;
                    }
                };
                let orig = read(params);
                write(&mut work, orig + h);
                let plus = mse_loss(&work, batch)?;
                write(&mut work, orig - h);
                let minus = mse_loss(&work, batch)?;
                write(&mut work, orig);
                let numeric = (plus - minus) / (2.0 * h);
                let a = if i < cols {
                    analytic.layers[li].w[j][i]
                } else {
                    analytic.layers[li].b[j]
                };
                let rel = (a - numeric).abs() / (a.abs() + numeric.abs()).max(1e-8);
                worst = worst.max(rel);
            }
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand_chacha::ChaCha8Rng;

    fn linear_spec(input: usize, output: usize) -> MlpSpec {
        MlpSpec::new(input, vec![], output, Activation::Tanh, 1.0).unwrap()
    }

    #[test]
    fn init_shapes_follow_spec() {
        let p = mlp_init(&linear_spec(2, 1), 7);
        assert_eq!(p.layers.len(), 1);
        assert_eq!(p.layers[0].w.len(), 1);
        assert_eq!(p.layers[0].w[0].len(), 2);
        assert_eq!(p.layers[0].b, vec![0.0]);
    }

    #[test]
    fn init_is_deterministic_and_seed_sensitive() {
        let spec = linear_spec(2, 1);
        assert_eq!(mlp_init(&spec, 7), mlp_init(&spec, 7));
        assert_ne!(mlp_init(&spec, 7), mlp_init(&spec, 8));
    }

    #[test]
    fn forward_zero_params_and_fixed_matrix() {
        let spec = linear_spec(2, 2);
        let mut p = mlp_init(&spec, 0);
        for row in &mut p.layers[0].w {
            row.fill(0.0);
        }
        assert_eq!(mlp_forward(&p, &[3.0, -4.0]).unwrap(), vec![0.0, 0.0]);

        p.layers[0].w = vec![vec![2.0, 0.0], vec![0.0, 3.0]];
        assert_eq!(mlp_forward(&p, &[1.0, 1.0]).unwrap(), vec![2.0, 3.0]);
    }

    #[test]
    fn forward_matches_straight_line_reimplementation() {
        let spec = MlpSpec::new(2, vec![16], 1, Activation::Tanh, 1.0).unwrap();
        let p = mlp_init(&spec, 42);
        let x = [0.5, -0.5];

        // Independent straight-line pass.
        let mut hidden = vec![0.0; 16];
        for j in 0..16 {
            let mut z = p.layers[0].b[j];
            for i in 0..2 {
                z += p.layers[0].w[j][i] * x[i];
            }
            hidden[j] = z.tanh();
        }
        let mut out = p.layers[1].b[0];
        for j in 0..16 {
            out += p.layers[1].w[0][j] * hidden[j];
        }

        let got = mlp_forward(&p, &x).unwrap()[0];
        assert!((got - out).abs() < 1e-12, "got {got}, oracle {out}");
    }

    #[test]
    fn forward_rejects_bad_input_dim() {
        let p = mlp_init(&linear_spec(2, 1), 0);
        let err = mlp_forward(&p, &[1.0]).unwrap_err();
        assert_eq!(err.kind(), "ShapeMismatch");
    }

    #[test]
    fn grad_zero_at_perfect_fit() {
        let spec = linear_spec(1, 1);
        let mut p = mlp_init(&spec, 0);
        p.layers[0].w[0][0] = 2.0;
        p.layers[0].b[0] = 1.0;
        let batch = vec![(vec![1.0], vec![3.0]), (vec![-1.0], vec![-1.0])];
        let g = mlp_grad(&p, &batch).unwrap();
        assert_eq!(g.layers[0].w[0][0], 0.0);
        assert_eq!(g.layers[0].b[0], 0.0);
    }

    #[test]
    fn grad_hand_computed_linear_case() {
        // w=1, b=0, batch {(1, 2)}: d/dw (w+b-2)^2 = -2, same for b.
        let spec = linear_spec(1, 1);
        let mut p = mlp_init(&spec, 0);
        p.layers[0].w[0][0] = 1.0;
        p.layers[0].b[0] = 0.0;
        let g = mlp_grad(&p, &[(vec![1.0], vec![2.0])]).unwrap();
        assert!((g.layers[0].w[0][0] + 2.0).abs() < 1e-12);
        assert!((g.layers[0].b[0] + 2.0).abs() < 1e-12);
    }

    #[test]
    fn grad_matches_finite_differences_on_random_net() {
        let spec = MlpSpec::new(3, vec![8, 5], 2, Activation::Tanh, 1.0).unwrap();
        let p = mlp_init(&spec, 9);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let batch: Vec<_> = (0..12)
            .map(|_| {
                (
                    (0..3).map(|_| rng.random_range(-1.0..1.0)).collect(),
                    (0..2).map(|_| rng.random_range(-1.0..1.0)).collect(),
                )
            })
            .collect();
        let worst = finite_diff_check(&p, &batch, 1e-5).unwrap();
        assert!(worst <= 1e-4, "finite-difference mismatch: {worst}");
    }

    #[test]
    fn finite_diff_check_linear_is_tight_and_rejects_zero_step() {
        let spec = linear_spec(2, 1);
        let p = mlp_init(&spec, 3);
        let batch = vec![(vec![0.3, -0.7], vec![0.2])];
        assert!(finite_diff_check(&p, &batch, 1e-5).unwrap() <= 1e-6);
        assert_eq!(
            finite_diff_check(&p, &batch, 0.0).unwrap_err().kind(),
            "InvalidStep"
        );
    }

    #[test]
    fn relu_grads_check_out() {
        let spec = MlpSpec::new(2, vec![8, 4], 1, Activation::Relu, 1.0).unwrap();
        let p = mlp_init(&spec, 5);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let batch: Vec<_> = (0..16)
            .map(|_| {
                (
                    (0..2).map(|_| rng.random_range(-1.0..1.0)).collect(),
                    vec![rng.random_range(-1.0..1.0)],
                )
            })
            .collect();
        assert!(finite_diff_check(&p, &batch, 1e-5).unwrap() <= 1e-4);
    }

    #[test]
    fn adam_fixed_point_at_zero_gradient() {
        let spec = linear_spec(2, 2);
        let p = mlp_init(&spec, 11);
        let state = AdamState::new(&p, AdamHyper::default());
        let zero = MlpGrads::zeros_like(&p);
        let (_, p2) = adam_step(state, p.clone(), &zero).unwrap();
        assert_eq!(p, p2);
    }

    #[test]
    fn adam_first_step_moves_by_lr() {
        let spec = linear_spec(1, 1);
        let mut p = mlp_init(&spec, 0);
        p.layers[0].w[0][0] = 0.0;
        let hyper = AdamHyper {
            lr: 0.1,
            ..AdamHyper::default()
        };
        let state = AdamState::new(&p, hyper);
        let mut g = MlpGrads::zeros_like(&p);
        g.layers[0].w[0][0] = 1.0;
        let (state, p) = adam_step(state, p, &g).unwrap();
        assert_eq!(state.t, 1);
        assert!((p.layers[0].w[0][0] + 0.1).abs() < 1e-6);
    }

    #[test]
    fn adam_minimizes_quadratic() {
        // Feed grad(w) = 2(w - 3) directly; minimizer is w = 3.
        let spec = linear_spec(1, 1);
        let mut p = mlp_init(&spec, 0);
        p.layers[0].w[0][0] = 0.0;
        let hyper = AdamHyper {
            lr: 0.01,
            ..AdamHyper::default()
        };
        let mut state = AdamState::new(&p, hyper);
        for _ in 0..5000 {
            let mut g = MlpGrads::zeros_like(&p);
            g.layers[0].w[0][0] = 2.0 * (p.layers[0].w[0][0] - 3.0);
            (state, p) = adam_step(state, p, &g).unwrap();
        }
        assert!((p.layers[0].w[0][0] - 3.0).abs() < 1e-2);
    }

    #[test]
    fn training_reduces_loss() {
        let spec = MlpSpec::new(1, vec![16], 1, Activation::Tanh, 1.0).unwrap();
        let mut p = mlp_init(&spec, 21);
        let batch: Vec<_> = (0..20)
            .map(|i| {
                let x = -1.0 + 0.1 * i as f64;
                (vec![x], vec![(2.0 * x).sin()])
            })
            .collect();
        let initial = mse_loss(&p, &batch).unwrap();
        let mut state = AdamState::new(&p, AdamHyper::default());
        for _ in 0..2000 {
            let g = mlp_grad(&p, &batch).unwrap();
            (state, p) = adam_step(state, p, &g).unwrap();
        }
        let fin = mse_loss(&p, &batch).unwrap();
        assert!(fin < initial, "loss did not decrease: {initial} -> {fin}");
    }

    #[test]
    fn params_json_round_trip_is_value_exact() {
        let spec = MlpSpec::new(3, vec![4], 2, Activation::Relu, 0.7).unwrap();
        let p = mlp_init(&spec, 13);
        let s = crate::jsonio::to_json_string(&p).unwrap();
        let back: MlpParams = serde_json::from_str(&s).unwrap();
        assert_eq!(p, back);
        assert!(s.contains("\"format_version\":1"));
    }
}

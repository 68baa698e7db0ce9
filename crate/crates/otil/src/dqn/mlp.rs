//! Dense network primitives: forward pass, exact backpropagation, Adam, and
//! a versioned text serialization of the parameters.

use std::fmt::Write as _;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// One affine layer, row-major: `weights[i·in_dim + j]` connects input `j` to
/// output `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
    pub in_dim: usize,
    pub out_dim: usize,
}

impl Layer {
    fn zeros(in_dim: usize, out_dim: usize) -> Self {
        Self {
            weights: vec![0.0; in_dim * out_dim],
            biases: vec![0.0; out_dim],
            in_dim,
            out_dim,
        }
    }

    /// `out = W·input + b`, appended into a fresh vector.
    fn affine(&self, input: &[f64]) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.out_dim);
        for i in 0..self.out_dim {
            let row = &self.weights[i * self.in_dim..(i + 1) * self.in_dim];
            let mut acc = self.biases[i];
            for (w, x) in row.iter().zip(input) {
                acc += w * x;
            }
            out.push(acc);
        }
        out
    }
}

/// Network parameters: rectifier hidden layers, identity output.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpParams {
    pub layers: Vec<Layer>,
}

impl MlpParams {
    /// Initializes weights uniformly in ±1/√fan_in (biases zero),
    /// deterministically from `seed`. `layer_sizes` runs input → hidden… →
    /// output and needs at least two entries, all nonzero.
    pub fn init(layer_sizes: &[usize], seed: u64) -> Result<Self> {
        if layer_sizes.len() < 2 {
            return Err(Error::InvalidArgument(
                "a network needs at least input and output sizes".into(),
            ));
        }
        if layer_sizes.iter().any(|&s| s == 0) {
            return Err(Error::InvalidArgument(
                "layer sizes must all be >= 1".into(),
            ));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut layers = Vec::with_capacity(layer_sizes.len() - 1);
        for pair in layer_sizes.windows(2) {
            let (in_dim, out_dim) = (pair[0], pair[1]);
            let bound = 1.0 / (in_dim as f64).sqrt();
            let weights = (0..in_dim * out_dim)
                .map(|_| rng.gen_range(-bound..bound))
                .collect();
            layers.push(Layer {
                weights,
                biases: vec![0.0; out_dim],
                in_dim,
                out_dim,
            });
        }
        Ok(Self { layers })
    }

    /// The `layer_sizes` this network was built with.
    pub fn layer_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![self.layers[0].in_dim];
        sizes.extend(self.layers.iter().map(|l| l.out_dim));
        sizes
    }

    /// A same-shaped parameter set with every entry zero (gradient and
    /// moment accumulators).
    pub fn zeros_like(&self) -> Self {
        Self {
            layers: self
                .layers
                .iter()
                .map(|l| Layer::zeros(l.in_dim, l.out_dim))
                .collect(),
        }
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].in_dim
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().expect("at least one layer").out_dim
    }

    /// Q-values for one input.
    pub fn forward(&self, input: &[f64]) -> Result<Vec<f64>> {
        if input.len() != self.input_dim() {
            return Err(Error::InvalidArgument(format!(
                "input dimension {} does not match network input {}",
                input.len(),
                self.input_dim()
            )));
        }
        let last = self.layers.len() - 1;
        let mut activation = input.to_vec();
        for (l, layer) in self.layers.iter().enumerate() {
            let mut z = layer.affine(&activation);
            if l < last {
                for v in &mut z {
                    if *v < 0.0 {
                        *v = 0.0;
                    }
                }
            }
            activation = z;
        }
        Ok(activation)
    }

    /// Forward pass retaining pre-activations and activations per layer;
    /// `activations[0]` is the input, `activations[l+1]` the output of layer
    /// `l` after its nonlinearity.
    fn forward_cached(&self, input: &[f64]) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
        let last = self.layers.len() - 1;
        let mut pre_activations = Vec::with_capacity(self.layers.len());
        let mut activations = Vec::with_capacity(self.layers.len() + 1);
        activations.push(input.to_vec());
        for (l, layer) in self.layers.iter().enumerate() {
            let z = layer.affine(activations.last().expect("nonempty"));
            pre_activations.push(z.clone());
            let mut a = z;
            if l < last {
                for v in &mut a {
                    if *v < 0.0 {
                        *v = 0.0;
                    }
                }
            }
            activations.push(a);
        }
        (pre_activations, activations)
    }

    fn same_shape(&self, other: &Self) -> bool {
        self.layers.len() == other.layers.len()
            && self
                .layers
                .iter()
                .zip(&other.layers)
                .all(|(a, b)| a.in_dim == b.in_dim && a.out_dim == b.out_dim)
    }
}

/// One replay transition.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub state: Vec<f64>,
    pub action: usize,
    pub reward: f64,
    pub next_state: Vec<f64>,
    pub done: bool,
}

/// Mean squared TD error and its exact gradient over a batch.
///
/// Targets are `y = r` for terminal transitions and
/// `y = r + γ·max_a Q_target(s′, a)` otherwise; the loss is
/// `(1/B) Σ (Q(s, a_taken) − y)²`.
pub fn loss_and_gradient(
    params: &MlpParams,
    target_params: &MlpParams,
    batch: &[&Transition],
    discount: f64,
) -> Result<(f64, MlpParams)> {
    if batch.is_empty() {
        return Err(Error::InvalidArgument(
            "cannot take a gradient step on an empty batch".into(),
        ));
    }
    if !params.same_shape(target_params) {
        return Err(Error::InvalidArgument(
            "online and target networks have different shapes".into(),
        ));
    }
    let batch_size = batch.len() as f64;
    let last = params.layers.len() - 1;
    let mut grad = params.zeros_like();
    let mut loss = 0.0;
    for transition in batch {
        let (pre, acts) = params.forward_cached(&transition.state);
        let q_taken = acts[last + 1]
            .get(transition.action)
            .copied()
            .ok_or_else(|| {
                Error::InvalidArgument(format!(
                    "action {} out of range for {} outputs",
                    transition.action,
                    params.output_dim()
                ))
            })?;
        let target = if transition.done {
            transition.reward
        } else {
            let next_q = target_params.forward(&transition.next_state)?;
            let best = next_q.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            transition.reward + discount * best
        };
        let diff = q_taken - target;
        loss += diff * diff / batch_size;

        // Backward pass: delta holds dL/dz for the current layer.
        let mut delta = vec![0.0; params.output_dim()];
        delta[transition.action] = 2.0 * diff / batch_size;
        for l in (0..params.layers.len()).rev() {
            let layer = &params.layers[l];
            let input = &acts[l];
            let grad_layer = &mut grad.layers[l];
            for i in 0..layer.out_dim {
                let d = delta[i];
                if d != 0.0 {
                    grad_layer.biases[i] += d;
                    let row = &mut grad_layer.weights[i * layer.in_dim..(i + 1) * layer.in_dim];
                    for (g, x) in row.iter_mut().zip(input) {
                        *g += d * x;
                    }
                }
            }
            if l > 0 {
                let mut prev_delta = vec![0.0; layer.in_dim];
                for i in 0..layer.out_dim {
                    let d = delta[i];
                    if d != 0.0 {
                        let row = &layer.weights[i * layer.in_dim..(i + 1) * layer.in_dim];
                        for (p, w) in prev_delta.iter_mut().zip(row) {
                            *p += d * w;
                        }
                    }
                }
                // Rectifier derivative: 1 where the pre-activation was
                // strictly positive, 0 elsewhere (including exactly 0).
                for (p, z) in prev_delta.iter_mut().zip(&pre[l - 1]) {
                    if *z <= 0.0 {
                        *p = 0.0;
                    }
                }
                delta = prev_delta;
            }
        }
    }
    Ok((loss, grad))
}

/// Loss alone, for finite-difference checks.
pub fn loss_only(
    params: &MlpParams,
    target_params: &MlpParams,
    batch: &[&Transition],
    discount: f64,
) -> Result<f64> {
    loss_and_gradient(params, target_params, batch, discount).map(|(loss, _)| loss)
}

/// Bias-corrected Adam state shaped like the parameters it updates.
#[derive(Debug, Clone)]
pub struct AdamState {
    pub first_moment: MlpParams,
    pub second_moment: MlpParams,
    pub step: u64,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl AdamState {
    pub fn new(params: &MlpParams, learning_rate: f64) -> Self {
        Self {
            first_moment: params.zeros_like(),
            second_moment: params.zeros_like(),
            step: 0,
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// One bias-corrected Adam update in place.
pub fn adam_step(params: &mut MlpParams, state: &mut AdamState, gradient: &MlpParams) -> Result<()> {
    if !params.same_shape(gradient) || !params.same_shape(&state.first_moment) {
        return Err(Error::InvalidArgument(
            "parameter, gradient, and moment shapes must agree".into(),
        ));
    }
    state.step += 1;
    let bias1 = 1.0 - state.beta1.powi(state.step as i32);
    let bias2 = 1.0 - state.beta2.powi(state.step as i32);
    for (l, layer) in params.layers.iter_mut().enumerate() {
        let g_layer = &gradient.layers[l];
        let m_layer = &mut state.first_moment.layers[l];
        let v_layer = &mut state.second_moment.layers[l];
        let update = |w: &mut f64, g: f64, m: &mut f64, v: &mut f64| {
            *m = state.beta1 * *m + (1.0 - state.beta1) * g;
            *v = state.beta2 * *v + (1.0 - state.beta2) * g * g;
            let m_hat = *m / bias1;
            let v_hat = *v / bias2;
            *w -= state.learning_rate * m_hat / (v_hat.sqrt() + state.epsilon);
        };
        for i in 0..layer.weights.len() {
            update(
                &mut layer.weights[i],
                g_layer.weights[i],
                &mut m_layer.weights[i],
                &mut v_layer.weights[i],
            );
        }
        for i in 0..layer.biases.len() {
            update(
                &mut layer.biases[i],
                g_layer.biases[i],
                &mut m_layer.biases[i],
                &mut v_layer.biases[i],
            );
        }
    }
    Ok(())
}

const NETWORK_FORMAT_VERSION: &str = "mlp-v1";

/// Renders network parameters as versioned text: a version line, the layer
/// sizes, then one weights line and one biases line per layer (row-major,
/// space-separated, 17 significant digits - lossless for `f64`).
pub fn params_to_string(params: &MlpParams) -> String {
    let mut out = String::new();
    out.push_str(NETWORK_FORMAT_VERSION);
    out.push('\n');
    let sizes: Vec<String> = params.layer_sizes().iter().map(usize::to_string).collect();
    out.push_str(&sizes.join(","));
    out.push('\n');
    for layer in &params.layers {
        for (i, w) in layer.weights.iter().enumerate() {
            if i > 0 {
                out.push(' ');
            }
            write!(out, "{w:.16e}").expect("writing to String cannot fail");
        }
        out.push('\n');
        for (i, b) in layer.biases.iter().enumerate() {
            if i > 0 {
                out.push(' ');
            }
            write!(out, "{b:.16e}").expect("writing to String cannot fail");
        }
        out.push('\n');
    }
    out
}

/// Writes [`params_to_string`] output to a file.
pub fn save_params(params: &MlpParams, path: &Path) -> Result<()> {
    std::fs::write(path, params_to_string(params))?;
    Ok(())
}

/// Inverse of [`params_to_string`]; rejects unknown format versions and
/// malformed lines with their line number.
pub fn params_from_str(text: &str) -> Result<MlpParams> {
    let mut lines = text.lines().enumerate();
    let (_, version) = lines.next().ok_or_else(|| Error::Parse {
        line: 1,
        message: "empty network file".into(),
    })?;
    if version.trim() != NETWORK_FORMAT_VERSION {
        return Err(Error::Validation(format!(
            "unsupported network format '{}' (this reader understands {NETWORK_FORMAT_VERSION})",
            version.trim()
        )));
    }
    let (_, sizes_line) = lines.next().ok_or_else(|| Error::Parse {
        line: 2,
        message: "missing layer sizes".into(),
    })?;
    let sizes: Vec<usize> = sizes_line
        .split(',')
        .map(|s| {
            s.trim().parse::<usize>().map_err(|e| Error::Parse {
                line: 2,
                message: format!("bad layer size '{s}': {e}"),
            })
        })
        .collect::<Result<_>>()?;
    if sizes.len() < 2 || sizes.iter().any(|&s| s == 0) {
        return Err(Error::Validation(format!(
            "layer sizes must be >= 2 nonzero entries, got {sizes:?}"
        )));
    }
    let parse_row = |entry: Option<(usize, &str)>, expected: usize, what: &str| -> Result<Vec<f64>> {
        let (idx, line) = entry.ok_or_else(|| Error::Parse {
            line: 0,
            message: format!("unexpected end of file, expected {what}"),
        })?;
        let line_no = idx + 1;
        let values: Vec<f64> = line
            .split_whitespace()
            .map(|s| {
                s.parse::<f64>().map_err(|e| Error::Parse {
                    line: line_no,
                    message: format!("bad float '{s}': {e}"),
                })
            })
            .collect::<Result<_>>()?;
        if values.len() != expected {
            return Err(Error::Parse {
                line: line_no,
                message: format!("expected {expected} {what} values, found {}", values.len()),
            });
        }
        Ok(values)
    };
    let mut layers = Vec::with_capacity(sizes.len() - 1);
    for pair in sizes.windows(2) {
        let (in_dim, out_dim) = (pair[0], pair[1]);
        let weights = parse_row(lines.next(), in_dim * out_dim, "weight")?;
        let biases = parse_row(lines.next(), out_dim, "bias")?;
        layers.push(Layer {
            weights,
            biases,
            in_dim,
            out_dim,
        });
    }
    Ok(MlpParams { layers })
}

/// Reads and parses a network-parameter file.
pub fn load_params(path: &Path) -> Result<MlpParams> {
    let text = std::fs::read_to_string(path)?;
    params_from_str(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single_layer(weights: Vec<f64>, biases: Vec<f64>, in_dim: usize, out_dim: usize) -> MlpParams {
        MlpParams {
            layers: vec![Layer {
                weights,
                biases,
                in_dim,
                out_dim,
            }],
        }
    }

    #[test]
    fn identity_layer_passes_input_through() {
        let net = single_layer(vec![1.0, 0.0, 0.0, 1.0], vec![0.0, 0.0], 2, 2);
        assert_eq!(net.forward(&[1.0, -2.0]).unwrap(), vec![1.0, -2.0]);
    }

    #[test]
    fn negative_hidden_preactivations_leave_only_output_bias() {
        let net = MlpParams {
            layers: vec![
                Layer {
                    weights: vec![-1.0, -1.0],
                    biases: vec![-5.0, -5.0],
                    in_dim: 1,
                    out_dim: 2,
                },
                Layer {
                    weights: vec![3.0, 4.0],
                    biases: vec![0.25],
                    in_dim: 2,
                    out_dim: 1,
                },
            ],
        };
        assert_eq!(net.forward(&[10.0]).unwrap(), vec![0.25]);
    }

    #[test]
    fn zero_final_layer_gives_zero_q_values() {
        let mut net = MlpParams::init(&[3, 8, 4], 1).unwrap();
        let last = net.layers.len() - 1;
        net.layers[last].weights.iter_mut().for_each(|w| *w = 0.0);
        net.layers[last].biases.iter_mut().for_each(|b| *b = 0.0);
        assert_eq!(net.forward(&[0.3, -0.7, 2.0]).unwrap(), vec![0.0; 4]);
    }

    #[test]
    fn init_respects_fan_in_bound_and_seed() {
        let a = MlpParams::init(&[4, 16, 2], 7).unwrap();
        let b = MlpParams::init(&[4, 16, 2], 7).unwrap();
        let c = MlpParams::init(&[4, 16, 2], 8).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        for layer in &a.layers {
            let bound = 1.0 / (layer.in_dim as f64).sqrt();
            assert!(layer.weights.iter().all(|w| w.abs() < bound));
            assert!(layer.biases.iter().all(|&b| b == 0.0));
        }
        assert!(MlpParams::init(&[4], 0).is_err());
        assert!(MlpParams::init(&[4, 0, 2], 0).is_err());
    }

    #[test]
    fn forward_rejects_wrong_input_dimension() {
        let net = MlpParams::init(&[3, 4, 2], 0).unwrap();
        assert!(net.forward(&[1.0, 2.0]).is_err());
    }

    #[test]
    fn perfect_predictions_give_zero_loss_and_gradient() {
        // Terminal transitions with reward equal to the network's own output.
        let net = single_layer(vec![0.0; 4], vec![1.5, -0.5], 2, 2);
        let t = Transition {
            state: vec![0.2, 0.4],
            action: 0,
            reward: 1.5,
            next_state: vec![0.0, 0.0],
            done: true,
        };
        let (loss, grad) = loss_and_gradient(&net, &net, &[&t], 0.99).unwrap();
        assert_eq!(loss, 0.0);
        for layer in &grad.layers {
            assert!(layer.weights.iter().all(|&w| w == 0.0));
            assert!(layer.biases.iter().all(|&b| b == 0.0));
        }
    }

    #[test]
    fn terminal_targets_ignore_target_network() {
        let net = MlpParams::init(&[2, 4, 2], 3).unwrap();
        let mut target = net.clone();
        let last = target.layers.len() - 1;
        target.layers[last].biases.iter_mut().for_each(|b| *b = 1e6);
        let t = Transition {
            state: vec![0.1, 0.2],
            action: 1,
            reward: -3.0,
            next_state: vec![9.9, 9.9],
            done: true,
        };
        let (loss_a, _) = loss_and_gradient(&net, &net, &[&t], 0.99).unwrap();
        let (loss_b, _) = loss_and_gradient(&net, &target, &[&t], 0.99).unwrap();
        assert_eq!(loss_a, loss_b);
    }

    #[test]
    fn empty_batch_is_rejected() {
        let net = MlpParams::init(&[2, 2], 0).unwrap();
        assert!(loss_and_gradient(&net, &net, &[], 0.99).is_err());
    }

    #[test]
    fn gradients_match_central_finite_differences() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(777);
        for instance in 0..20 {
            let hidden = rng.gen_range(1..=8);
            let inputs = rng.gen_range(1..=6);
            let outputs = rng.gen_range(1..=4);
            let net = MlpParams::init(&[inputs, hidden, outputs], rng.gen()).unwrap();
            let target = MlpParams::init(&[inputs, hidden, outputs], rng.gen()).unwrap();
            let batch: Vec<Transition> = (0..rng.gen_range(1..=4))
                .map(|_| Transition {
                    state: (0..inputs).map(|_| rng.gen_range(-1.0..1.0)).collect(),
                    action: rng.gen_range(0..outputs),
                    reward: rng.gen_range(-2.0..2.0),
                    next_state: (0..inputs).map(|_| rng.gen_range(-1.0..1.0)).collect(),
                    done: rng.gen_bool(0.3),
                })
                .collect();
            let refs: Vec<&Transition> = batch.iter().collect();
            let (_, grad) = loss_and_gradient(&net, &target, &refs, 0.99).unwrap();
            let h = 1e-5;
            for l in 0..net.layers.len() {
                for w_idx in 0..net.layers[l].weights.len() {
                    let mut plus = net.clone();
                    plus.layers[l].weights[w_idx] += h;
                    let mut minus = net.clone();
                    minus.layers[l].weights[w_idx] -= h;
                    let fd = (loss_only(&plus, &target, &refs, 0.99).unwrap()
                        - loss_only(&minus, &target, &refs, 0.99).unwrap())
                        / (2.0 * h);
                    let analytic = grad.layers[l].weights[w_idx];
                    let denom = analytic.abs().max(fd.abs()).max(1e-6);
                    assert!(
                        (analytic - fd).abs() / denom < 1e-4,
                        "instance {instance} layer {l} weight {w_idx}: {analytic} vs {fd}"
                    );
                }
            }
        }
    }

    #[test]
    fn adam_zero_gradient_leaves_parameters_unchanged() {
        let mut net = MlpParams::init(&[2, 3, 2], 5).unwrap();
        let before = net.clone();
        let grad = net.zeros_like();
        let mut adam = AdamState::new(&net, 1e-3);
        adam_step(&mut net, &mut adam, &grad).unwrap();
        assert_eq!(net, before);
        assert_eq!(adam.step, 1);
    }

    #[test]
    fn adam_single_step_matches_hand_computation() {
        // w = 0, g = 1, fresh state, lr 1e-3: m̂ = v̂ = 1, so
        // w ← −1e-3/(1 + 1e-8).
        let mut net = single_layer(vec![0.0], vec![0.0], 1, 1);
        let mut grad = net.zeros_like();
        grad.layers[0].weights[0] = 1.0;
        let mut adam = AdamState::new(&net, 1e-3);
        adam_step(&mut net, &mut adam, &grad).unwrap();
        assert_eq!(net.layers[0].weights[0], -0.0009999999900000003);
        assert_eq!(net.layers[0].biases[0], 0.0);
    }

    #[test]
    fn adam_is_deterministic() {
        let build = || {
            let mut net = MlpParams::init(&[3, 4, 2], 9).unwrap();
            let mut grad = net.zeros_like();
            grad.layers[0].weights[2] = 0.5;
            grad.layers[1].biases[1] = -0.25;
            let mut adam = AdamState::new(&net, 1e-3);
            for _ in 0..10 {
                adam_step(&mut net, &mut adam, &grad).unwrap();
            }
            net
        };
        assert_eq!(build(), build());
    }

    #[test]
    fn adam_rejects_shape_mismatch() {
        let mut net = MlpParams::init(&[2, 2], 0).unwrap();
        let other = MlpParams::init(&[2, 3, 2], 0).unwrap();
        let mut adam = AdamState::new(&net, 1e-3);
        assert!(adam_step(&mut net, &mut adam, &other.zeros_like()).is_err());
    }

    #[test]
    fn params_round_trip_through_text() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(404);
        let dir = tempfile::tempdir().unwrap();
        for case in 0..20 {
            let sizes: Vec<usize> = {
                let depth = rng.gen_range(2..=4);
                (0..depth).map(|_| rng.gen_range(1..=16)).collect()
            };
            let net = MlpParams::init(&sizes, rng.gen()).unwrap();
            let path = dir.path().join(format!("net_{case}.txt"));
            save_params(&net, &path).unwrap();
            let loaded = load_params(&path).unwrap();
            assert_eq!(net, loaded, "case {case} sizes {sizes:?}");
        }
    }

    #[test]
    fn unknown_network_version_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("future.txt");
        std::fs::write(&path, "mlp-v9\n1,1\n0.0\n0.0\n").unwrap();
        match load_params(&path) {
            Err(Error::Validation(msg)) => assert!(msg.contains("mlp-v9")),
            other => panic!("expected version rejection, got {other:?}"),
        }
    }

    #[test]
    fn truncated_network_file_reports_line() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("short.txt");
        std::fs::write(&path, "mlp-v1\n2,2\n0.0 0.0 0.0\n").unwrap();
        match load_params(&path) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected parse error, got {other:?}"),
        }
    }
}

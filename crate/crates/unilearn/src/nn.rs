//! Plain-`Vec` multilayer perceptrons with ReLU hidden activations.
//!
//! A network with architecture `(N_0, …, N_L)` applies `L−1` ReLU layers and
//! one final affine layer. Weight matrices are stored row-major per layer,
//! so layer `i` holds `N_{i+1} · N_i` entries mapping width `N_i` to width
//! `N_{i+1}` (zero-based layer indices throughout the code).
//!
//! The class structure used everywhere else in the crate lives here too: a
//! [`NetworkClass`] fixes an architecture, an entrywise norm exponent `q`,
//! and a coefficient bound `c`; membership means every layer's weight matrix
//! and bias vector has entrywise `ℓ^q` norm at most `c`.

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize};

use crate::error::{Error, Result};
use crate::exponent::Exponent;

/// ReLU with the convention that the derivative at 0 is 0; the forward value
/// at 0 is 0 either way, but the strict comparison keeps forward and backward
/// passes consistent at kinks.
#[inline]
pub fn relu(z: f64) -> f64 {
    if z > 0.0 {
        z
    } else {
        0.0
    }
}

/// Entrywise `ℓ^q` norm of a flat slice; `q = ∞` is the exact maximum of
/// absolute values, never a large-exponent approximation.
pub fn entrywise_norm(entries: &[f64], q: Exponent) -> f64 {
    match q {
        Exponent::Infinity => entries.iter().fold(0.0, |m, &e| m.max(e.abs())),
        Exponent::Finite(q) if q == 1.0 => entries.iter().map(|e| e.abs()).sum(),
        Exponent::Finite(q) if q == 2.0 => {
            entries.iter().map(|e| e * e).sum::<f64>().sqrt()
        }
        Exponent::Finite(q) => {
            let s: f64 = entries.iter().map(|e| e.abs().powf(q)).sum();
            s.powf(1.0 / q)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Mlp {
    arch: Vec<usize>,
    weights: Vec<Vec<f64>>,
    biases: Vec<Vec<f64>>,
}

impl Mlp {
    /// Builds a network after checking that every layer's weight matrix and
    /// bias vector has the shape the architecture demands.
    pub fn new(arch: Vec<usize>, weights: Vec<Vec<f64>>, biases: Vec<Vec<f64>>) -> Result<Self> {
        if arch.len() < 2 {
            return Err(Error::DimensionMismatch(format!(
                "architecture needs at least input and output widths, got {arch:?}"
            )));
        }
        if arch.iter().any(|&n| n == 0) {
            return Err(Error::DimensionMismatch(format!(
                "zero width in architecture {arch:?}"
            )));
        }
        let layers = arch.len() - 1;
        if weights.len() != layers || biases.len() != layers {
            return Err(Error::DimensionMismatch(format!(
                "expected {layers} weight and bias layers, got {} and {}",
                weights.len(),
                biases.len()
            )));
        }
        for i in 0..layers {
            let (rows, cols) = (arch[i + 1], arch[i]);
            if weights[i].len() != rows * cols {
                return Err(Error::DimensionMismatch(format!(
                    "layer {i}: weight matrix has {} entries, expected {rows}x{cols}",
                    weights[i].len()
                )));
            }
            if biases[i].len() != rows {
                return Err(Error::DimensionMismatch(format!(
                    "layer {i}: bias vector has {} entries, expected {rows}",
                    biases[i].len()
                )));
            }
        }
        Ok(Mlp {
            arch,
            weights,
            biases,
        })
    }

    /// All-zero network of the given architecture.
    pub fn zeros(arch: Vec<usize>) -> Result<Self> {
        let layers = arch.len().saturating_sub(1);
        let weights = (0..layers)
            .map(|i| vec![0.0; arch[i + 1] * arch[i]])
            .collect();
        let biases = (0..layers).map(|i| vec![0.0; arch[i + 1]]).collect();
        Mlp::new(arch, weights, biases)
    }

    pub fn arch(&self) -> &[usize] {
        &self.arch
    }

    /// Number of affine layers, i.e. `L` for architecture `(N_0, …, N_L)`.
    pub fn depth(&self) -> usize {
        self.arch.len() - 1
    }

    pub fn input_dim(&self) -> usize {
        self.arch[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.arch.last().unwrap()
    }

    pub fn weights(&self) -> &[Vec<f64>] {
        &self.weights
    }

    pub fn biases(&self) -> &[Vec<f64>] {
        &self.biases
    }

    pub fn weights_mut(&mut self) -> &mut [Vec<f64>] {
        &mut self.weights
    }

    pub fn biases_mut(&mut self) -> &mut [Vec<f64>] {
        &mut self.biases
    }

    /// Simultaneous mutable access to one layer's weight matrix and bias
    /// vector.
    pub fn layer_mut(&mut self, layer: usize) -> (&mut Vec<f64>, &mut Vec<f64>) {
        (&mut self.weights[layer], &mut self.biases[layer])
    }

    pub fn param_count(&self) -> usize {
        self.weights.iter().map(Vec::len).sum::<usize>()
            + self.biases.iter().map(Vec::len).sum::<usize>()
    }

    fn affine(&self, layer: usize, input: &[f64]) -> Vec<f64> {
        let (rows, cols) = (self.arch[layer + 1], self.arch[layer]);
        let w = &self.weights[layer];
        let b = &self.biases[layer];
        let mut out = Vec::with_capacity(rows);
        for r in 0..rows {
            let row = &w[r * cols..(r + 1) * cols];
            let mut acc = b[r];
            for (wij, xj) in row.iter().zip(input) {
                acc += wij * xj;
            }
            out.push(acc);
        }
        out
    }

    /// Evaluates the network: ReLU after every layer except the last.
    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.input_dim() {
            return Err(Error::DimensionMismatch(format!(
                "input has {} coordinates, network expects {}",
                x.len(),
                self.input_dim()
            )));
        }
        let layers = self.depth();
        let mut a = x.to_vec();
        for i in 0..layers - 1 {
            a = self.affine(i, &a);
            for v in &mut a {
                *v = relu(*v);
            }
        }
        Ok(self.affine(layers - 1, &a))
    }

    /// Convenience for scalar-output networks.
    pub fn forward_scalar(&self, x: &[f64]) -> Result<f64> {
        let out = self.forward(x)?;
        if out.len() != 1 {
            return Err(Error::DimensionMismatch(format!(
                "forward_scalar on a network with output width {}",
                out.len()
            )));
        }
        Ok(out[0])
    }

    /// Post-activation vectors of every layer: `L−1` ReLU outputs followed by
    /// the final affine output. Useful for checking structural identities of
    /// constructed networks layer by layer.
    pub fn forward_trace(&self, x: &[f64]) -> Result<Vec<Vec<f64>>> {
        if x.len() != self.input_dim() {
            return Err(Error::DimensionMismatch(format!(
                "input has {} coordinates, network expects {}",
                x.len(),
                self.input_dim()
            )));
        }
        let layers = self.depth();
        let mut trace = Vec::with_capacity(layers);
        let mut a = x.to_vec();
        for i in 0..layers - 1 {
            a = self.affine(i, &a);
            for v in &mut a {
                *v = relu(*v);
            }
            trace.push(a.clone());
        }
        trace.push(self.affine(layers - 1, &a));
        Ok(trace)
    }

    /// Largest entrywise `ℓ^q` norm over all weight matrices and bias
    /// vectors, each taken as a flat list of entries.
    pub fn coefficient_norm(&self, q: Exponent) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.depth() {
            worst = worst.max(entrywise_norm(&self.weights[i], q));
            worst = worst.max(entrywise_norm(&self.biases[i], q));
        }
        worst
    }

    /// Membership in a coefficient class. The comparison is exact up to the
    /// caller-provided slack: `slack = 0` is a sharp threshold.
    pub fn in_class(&self, cls: &NetworkClass, slack: f64) -> bool {
        self.arch == cls.arch && self.coefficient_norm(cls.q) <= cls.c + slack
    }

    /// Mean squared error of the scalar-output network on a batch.
    pub fn mse_loss(&self, batch: &GradientBatch) -> Result<f64> {
        batch.check_against(self)?;
        let n = batch.inputs.len() as f64;
        let mut acc = 0.0;
        for (x, &y) in batch.inputs.iter().zip(&batch.targets) {
            let e = self.forward_scalar(x)? - y;
            acc += e * e;
        }
        Ok(acc / n)
    }

    /// Gradient of the batch mean squared error with respect to every weight
    /// and bias, with `ρ'(0) = 0` at ReLU kinks. Also returns the loss, which
    /// the forward pass produces for free.
    pub fn backprop_grad_with_loss(&self, batch: &GradientBatch) -> Result<(Gradients, f64)> {
        batch.check_against(self)?;
        let layers = self.depth();
        let mut grad = Gradients::zeros_like(self);
        let n = batch.inputs.len() as f64;
        let mut loss = 0.0;

        for (x, &y) in batch.inputs.iter().zip(&batch.targets) {
            // Forward, keeping pre-activations for the derivative mask.
            let mut pre = Vec::with_capacity(layers);
            let mut post = Vec::with_capacity(layers + 1);
            post.push(x.clone());
            for i in 0..layers {
                let z = self.affine(i, post.last().unwrap());
                if i + 1 < layers {
                    let a = z.iter().map(|&v| relu(v)).collect::<Vec<_>>();
                    pre.push(z);
                    post.push(a);
                } else {
                    pre.push(z.clone());
                    post.push(z);
                }
            }
            let out = post[layers][0];
            let err = out - y;
            loss += err * err;

            // Backward. d(loss)/d(out) for the mean of squared errors.
            let mut delta = vec![2.0 * err / n];
            for i in (0..layers).rev() {
                let (rows, cols) = (self.arch[i + 1], self.arch[i]);
                let input = &post[i];
                {
                    let gw = &mut grad.weights[i];
                    let gb = &mut grad.biases[i];
                    for r in 0..rows {
                        gb[r] += delta[r];
                        let row = &mut gw[r * cols..(r + 1) * cols];
                        for (g, xj) in row.iter_mut().zip(input) {
                            *g += delta[r] * xj;
                        }
                    }
                }
                if i > 0 {
                    let w = &self.weights[i];
                    let mut next = vec![0.0; cols];
                    for r in 0..rows {
                        let row = &w[r * cols..(r + 1) * cols];
                        for (nc, wij) in next.iter_mut().zip(row) {
                            *nc += delta[r] * wij;
                        }
                    }
                    // ReLU mask from the previous layer's pre-activations.
                    for (nc, &z) in next.iter_mut().zip(&pre[i - 1]) {
                        if z <= 0.0 {
                            *nc = 0.0;
                        }
                    }
                    delta = next;
                }
            }
        }
        Ok((grad, loss / n))
    }

    /// Gradient of the batch mean squared error; see
    /// [`Mlp::backprop_grad_with_loss`].
    pub fn backprop_grad(&self, batch: &GradientBatch) -> Result<Gradients> {
        Ok(self.backprop_grad_with_loss(batch)?.0)
    }

    /// Empirical lower estimate of the Lipschitz constant on `[0,1]^{N_0}`:
    /// the best difference quotient `‖f(x)−f(y)‖₂ / ‖x−y‖₂` over seeded
    /// random pairs. Always a lower bound on the true constant.
    pub fn lipschitz_lower_estimate(&self, n_pairs: usize, seed: u64) -> Result<f64> {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let d = self.input_dim();
        let mut best: f64 = 0.0;
        for _ in 0..n_pairs {
            let x: Vec<f64> = (0..d).map(|_| rng.gen::<f64>()).collect();
            let y: Vec<f64> = (0..d).map(|_| rng.gen::<f64>()).collect();
            let dist2: f64 = x
                .iter()
                .zip(&y)
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            if dist2 == 0.0 {
                continue;
            }
            let fx = self.forward(&x)?;
            let fy = self.forward(&y)?;
            let diff2: f64 = fx
                .iter()
                .zip(&fy)
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            best = best.max((diff2 / dist2).sqrt());
        }
        Ok(best)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("MLP serialization cannot fail")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

// Deserialization funnels through `Mlp::new` so malformed shape data can
// never enter through the JSON door.
impl<'de> Deserialize<'de> for Mlp {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            arch: Vec<usize>,
            weights: Vec<Vec<f64>>,
            biases: Vec<Vec<f64>>,
        }
        let raw = Raw::deserialize(deserializer)?;
        Mlp::new(raw.arch, raw.weights, raw.biases).map_err(D::Error::custom)
    }
}

/// Architecture + entrywise norm bound: the hypothesis class
/// `{Φ : arch(Φ) = arch, ‖Φ‖_{ℓ^q} ≤ c}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkClass {
    pub arch: Vec<usize>,
    pub c: f64,
    pub q: Exponent,
}

impl NetworkClass {
    pub fn new(arch: Vec<usize>, c: f64, q: Exponent) -> Result<Self> {
        if arch.len() < 2 || arch.iter().any(|&n| n == 0) {
            return Err(Error::DimensionMismatch(format!(
                "invalid class architecture {arch:?}"
            )));
        }
        if !(c > 0.0) || !c.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "coefficient bound must be positive and finite, got {c}"
            )));
        }
        if !q.ge(1.0) {
            return Err(Error::InvalidParameter(format!(
                "norm exponent must satisfy q >= 1, got {q}"
            )));
        }
        Ok(NetworkClass { arch, c, q })
    }

    pub fn depth(&self) -> usize {
        self.arch.len() - 1
    }

    pub fn input_dim(&self) -> usize {
        self.arch[0]
    }
}

/// A batch of scalar-target training pairs.
#[derive(Debug, Clone)]
pub struct GradientBatch {
    pub inputs: Vec<Vec<f64>>,
    pub targets: Vec<f64>,
}

impl GradientBatch {
    fn check_against(&self, net: &Mlp) -> Result<()> {
        if net.output_dim() != 1 {
            return Err(Error::DimensionMismatch(
                "gradient batches require a scalar-output network".into(),
            ));
        }
        if self.inputs.is_empty() || self.inputs.len() != self.targets.len() {
            return Err(Error::DimensionMismatch(format!(
                "batch has {} inputs and {} targets",
                self.inputs.len(),
                self.targets.len()
            )));
        }
        if self.inputs.iter().any(|x| x.len() != net.input_dim()) {
            return Err(Error::DimensionMismatch(
                "batch input dimension does not match the network".into(),
            ));
        }
        Ok(())
    }
}

/// Per-parameter gradients (or any other parameter-shaped buffer), mirroring
/// the layer layout of the network they were computed from.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<Vec<f64>>,
}

impl Gradients {
    pub fn zeros_like(net: &Mlp) -> Self {
        Gradients {
            weights: net.weights.iter().map(|w| vec![0.0; w.len()]).collect(),
            biases: net.biases.iter().map(|b| vec![0.0; b.len()]).collect(),
        }
    }
}

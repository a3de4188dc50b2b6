//! Exact ReLU-network realizations of scaled hat spikes.
//!
//! Both constructions place the class's full coefficient budget `c` into
//! every layer and let depth amplify the spike: the realized function is
//! `ν · (λ/(M·s)) · ϑ` with `λ` exponential in the depth `L`. The two
//! regimes need different wiring:
//!
//! - `q ≥ 2` ([`construct_big_q`]): wide layers help. Layer 1 computes `3s`
//!   tent ingredients replicated `r = ⌊B/(3s)⌋` times, layer 2 collapses
//!   them to `Δ(x)` broadcast across all `B` units, and the all-ones middle
//!   layers multiply by `c·B^{1−2/q}` per layer.
//! - `q ≤ 2` ([`construct_small_q`]): mass concentrates better in few
//!   coefficients. One unit carries the spike through corner matrices that
//!   multiply by `c` per layer.
//!
//! Every stored coefficient is scaled by [`NORM_MARGIN`], a relative
//! `2^{−40}` shave that keeps the computed entrywise norms at or below `c`
//! under floating-point rounding (the exact-arithmetic norms hit `c` with
//! equality in several layers). The shave perturbs the realized function by
//! less than `L·2^{−40}` relatively, far below the `1e−10` verification
//! tolerance used throughout.

use crate::error::{Error, Result};
use crate::hat::{hat_eval, HatSpec};
use crate::nn::{Mlp, NetworkClass};

/// Relative shave applied to every constructed coefficient; see module docs.
pub const NORM_MARGIN: f64 = 1.0 - 1.0 / (1u64 << 40) as f64;

/// What a constructor produced: the network, the spike it realizes, and the
/// exact scale bookkeeping. Serializes with the network fields at the top
/// level, so the artifact doubles as a plain network JSON file.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct ConstructionPlan {
    #[serde(flatten)]
    pub net: Mlp,
    /// The class the network was built to lie in (zero slack).
    pub class: NetworkClass,
    /// The hat spec whose scaled version the network realizes (the spec's
    /// `amplitude` field equals `realized_amplitude`).
    pub spec: HatSpec,
    /// Depth-amplified numerator: the realization is `ν·(λ/(M·s))·ϑ`.
    pub lambda_value: f64,
    /// `λ/(M·s)`, the peak height of the realized spike.
    pub realized_amplitude: f64,
    /// Replication count `r = ⌊B/(3s)⌋` (1 in the `q ≤ 2` construction).
    pub replication: usize,
}

fn validate_common(cls: &NetworkClass, spec: &HatSpec) -> Result<(usize, usize, usize)> {
    let arch = &cls.arch;
    let depth = cls.depth();
    if depth < 3 {
        return Err(Error::Precondition(format!(
            "construction requires depth L >= 3, got L = {depth}"
        )));
    }
    let d = arch[0];
    let b = arch[1];
    if arch[arch.len() - 1] != 1 {
        return Err(Error::Precondition(format!(
            "construction requires output width 1, got {}",
            arch[arch.len() - 1]
        )));
    }
    if arch[1..depth].iter().any(|&w| w != b) {
        return Err(Error::Precondition(format!(
            "construction requires constant hidden width, got {arch:?}"
        )));
    }
    if b < 3 {
        return Err(Error::Precondition(format!(
            "construction requires hidden width B >= 3, got B = {b}"
        )));
    }
    if spec.d != d {
        return Err(Error::DimensionMismatch(format!(
            "spike dimension {} does not match class input width {d}",
            spec.d
        )));
    }
    if 3 * spec.s > b {
        return Err(Error::Precondition(format!(
            "construction requires 3s <= B, got s = {}, B = {b}",
            spec.s
        )));
    }
    if spec.steepness.fract() != 0.0 {
        return Err(Error::Precondition(format!(
            "construction requires integer steepness M, got {}",
            spec.steepness
        )));
    }
    Ok((d, b, depth))
}

/// Tent ingredient offsets for the first layer: `α_j = (1/M − y_j)/2`,
/// `β_j = −y_j`, `γ = (s−1)/s · 1/(2M)`. All lie in `[−1, 1]` for centers
/// in the unit cube and `M ≥ 1`.
fn first_layer_offsets(spec: &HatSpec) -> (Vec<f64>, Vec<f64>, f64) {
    let m = spec.steepness;
    let s = spec.s as f64;
    let alpha = spec.center[..spec.s]
        .iter()
        .map(|&y| (1.0 / m - y) / 2.0)
        .collect();
    let beta = spec.center[..spec.s].iter().map(|&y| -y).collect();
    let gamma = (s - 1.0) / s * (1.0 / (2.0 * m));
    (alpha, beta, gamma)
}

/// Spike network for classes with `q ≥ 2` (including `q = ∞`).
///
/// Realizes `ν · (λ/(M·s)) · ϑ` with
/// `λ = c^L · (B^{1−2/q})^{L−2} · (3rs)^{1−2/q} / 6 ≥ c^L · (B^{1−2/q})^{L−1} / 12`,
/// where `r = ⌊B/(3s)⌋`. The returned plan's network is in the class with
/// zero slack.
pub fn construct_big_q(cls: &NetworkClass, spec: &HatSpec) -> Result<ConstructionPlan> {
    if !cls.q.ge(2.0) {
        return Err(Error::Precondition(format!(
            "construct_big_q requires q >= 2, got q = {}",
            cls.q
        )));
    }
    let (d, b, depth) = validate_common(cls, spec)?;
    let s = spec.s;
    let r = b / (3 * s);
    let c = cls.c;
    let qinv = cls.q.recip();
    let (alpha, beta, gamma) = first_layer_offsets(spec);

    let scale1 = NORM_MARGIN * c / ((3 * s * r) as f64).powf(qinv);
    let scale2 = NORM_MARGIN * c / ((3 * s * r * b) as f64).powf(qinv);
    let scale_mid = NORM_MARGIN * c / (b as f64).powf(2.0 * qinv);
    let scale_out = NORM_MARGIN * c / (b as f64).powf(qinv);

    let mut net = Mlp::zeros(cls.arch.clone())?;

    // Layer 1: r copies of the 3s tent ingredients, then zero rows.
    // Rows 3sb+j read x_j/2, rows 3sb+s+j read x_j, rows 3sb+2s+j read 0.
    {
        let (w, bias) = net.layer_mut(0);
        for rep in 0..r {
            let base = 3 * s * rep;
            for j in 0..s {
                w[(base + j) * d + j] = scale1 * 0.5;
                w[(base + s + j) * d + j] = scale1;
                bias[base + j] = scale1 * alpha[j];
                bias[base + s + j] = scale1 * beta[j];
                bias[base + 2 * s + j] = scale1 * gamma;
            }
        }
    }

    // Layer 2: every row computes Δ(x)·(c²r / (2M·(3rs)^{2/q}·B^{1/q})):
    // +1 on the α-columns, −1 on the β- and γ-columns, zero padding.
    {
        let w = &mut net.weights_mut()[1];
        for row in 0..b {
            for rep in 0..r {
                let base = 3 * s * rep;
                for j in 0..s {
                    w[row * b + base + j] = scale2;
                    w[row * b + base + s + j] = -scale2;
                    w[row * b + base + 2 * s + j] = -scale2;
                }
            }
        }
    }

    // Middle layers 3..L−1: all-ones matrices, multiplying a constant
    // nonnegative vector κ·1 by c·B^{1−2/q}.
    for layer in 2..depth - 1 {
        let w = &mut net.weights_mut()[layer];
        for v in w.iter_mut() {
            *v = scale_mid;
        }
    }

    // Output layer: all-ones row with orientation ν.
    {
        let w = &mut net.weights_mut()[depth - 1];
        for v in w.iter_mut() {
            *v = spec.sign.as_f64() * scale_out;
        }
    }

    let lf = depth as f64;
    let exp_width = 1.0 - 2.0 * qinv;
    let lambda_value = c.powf(lf)
        * (b as f64).powf(exp_width * (lf - 2.0))
        * ((3 * r * s) as f64).powf(exp_width)
        / 6.0;
    let m = spec.steepness;
    let realized_amplitude = lambda_value / (m * s as f64);
    let realized = HatSpec::new(
        d,
        s,
        m,
        spec.center.clone(),
        spec.sign,
        realized_amplitude,
    )?;

    Ok(ConstructionPlan {
        net,
        class: cls.clone(),
        spec: realized,
        lambda_value,
        realized_amplitude,
        replication: r,
    })
}

/// Spike network for classes with `q ≤ 2`.
///
/// Realizes `ν · (λ/(M·s)) · ϑ` with `λ = c^L · s^{1−2/q} / (2·3^{2/q})`;
/// the spike travels through a single unit after layer 2, picking up a
/// factor `c` per layer.
pub fn construct_small_q(cls: &NetworkClass, spec: &HatSpec) -> Result<ConstructionPlan> {
    if !cls.q.le(2.0) {
        return Err(Error::Precondition(format!(
            "construct_small_q requires q <= 2, got q = {}",
            cls.q
        )));
    }
    let (d, _b, depth) = validate_common(cls, spec)?;
    let s = spec.s;
    let c = cls.c;
    let qinv = cls.q.recip();
    let (alpha, beta, gamma) = first_layer_offsets(spec);

    let scale = NORM_MARGIN * c / ((3 * s) as f64).powf(qinv);
    let scale_mid = NORM_MARGIN * c;

    let mut net = Mlp::zeros(cls.arch.clone())?;

    // Layer 1: single copy of the tent ingredients in rows 0..3s. The γ
    // rows have zero weight but positive bias, so they pass through ReLU.
    {
        let (w, bias) = net.layer_mut(0);
        for j in 0..s {
            w[j * d + j] = scale * 0.5;
            w[(s + j) * d + j] = scale;
            bias[j] = scale * alpha[j];
            bias[s + j] = scale * beta[j];
            bias[2 * s + j] = scale * gamma;
        }
    }

    // Layer 2: only the first unit is live, summing the ingredients into
    // Δ(x)·c²/(2M·(3s)^{2/q}).
    {
        let w = &mut net.weights_mut()[1];
        for j in 0..s {
            w[j] = scale;
            w[s + j] = -scale;
            w[2 * s + j] = -scale;
        }
    }

    // Middle layers: corner entry only, multiplying the live unit by c.
    for layer in 2..depth - 1 {
        net.weights_mut()[layer][0] = scale_mid;
    }

    // Output layer reads the live unit with orientation ν.
    net.weights_mut()[depth - 1][0] = spec.sign.as_f64() * scale_mid;

    let lf = depth as f64;
    let lambda_value =
        c.powf(lf) * (s as f64).powf(1.0 - 2.0 * qinv) / (2.0 * 3f64.powf(2.0 * qinv));
    let m = spec.steepness;
    let realized_amplitude = lambda_value / (m * s as f64);
    let realized = HatSpec::new(
        d,
        s,
        m,
        spec.center.clone(),
        spec.sign,
        realized_amplitude,
    )?;

    Ok(ConstructionPlan {
        net,
        class: cls.clone(),
        spec: realized,
        lambda_value,
        realized_amplitude,
        replication: 1,
    })
}

/// Dispatching constructor: `q ≥ 2` takes the wide-layer route (so `q = 2`
/// uses it too, where both constructions coincide in guarantee), `q < 2` the
/// single-unit route.
pub fn construct(cls: &NetworkClass, spec: &HatSpec) -> Result<ConstructionPlan> {
    if cls.q.ge(2.0) {
        construct_big_q(cls, spec)
    } else {
        construct_small_q(cls, spec)
    }
}

/// Maximum pointwise deviation `|Φ(x) − ν·amplitude·ϑ(x)|` over seeded
/// uniform points in `[0,1]^d` plus structured probes: the center, the
/// plateau corners, the support-box corners, and points on the splice
/// hyperplanes `x_i = y_i ± 1/M` (all of which exercise the ReLU kinks).
pub fn verify_construction(
    net: &Mlp,
    spec: &HatSpec,
    expected_amplitude: f64,
    n_points: usize,
    seed: u64,
) -> Result<f64> {
    use rand::{Rng, SeedableRng};

    if net.input_dim() != spec.d {
        return Err(Error::DimensionMismatch(format!(
            "network input width {} vs spike dimension {}",
            net.input_dim(),
            spec.d
        )));
    }
    let reference = HatSpec::new(
        spec.d,
        spec.s,
        spec.steepness,
        spec.center.clone(),
        spec.sign,
        expected_amplitude,
    )?;

    let mut points: Vec<Vec<f64>> = Vec::new();
    points.push(spec.center.clone());

    let m = spec.steepness;
    let s = spec.s;
    let plateau = 1.0 / (2.0 * m * s as f64);
    let corners = 1usize << s.min(10);
    for mask in 0..corners {
        let mut plat = spec.center.clone();
        let mut supp = spec.center.clone();
        for j in 0..s.min(10) {
            let dir = if mask >> j & 1 == 1 { 1.0 } else { -1.0 };
            plat[j] += dir * plateau;
            supp[j] += dir / m;
        }
        points.push(plat);
        points.push(supp);
    }

    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    // Splice hyperplanes: random points with one active coordinate pinned
    // at a kink location.
    for _ in 0..(n_points / 4).max(8) {
        let j = rng.gen_range(0..s);
        let dir = if rng.gen::<bool>() { 1.0 } else { -1.0 };
        let mut x: Vec<f64> = (0..spec.d).map(|_| rng.gen()).collect();
        x[j] = spec.center[j] + dir / m;
        points.push(x);
    }
    for _ in 0..n_points {
        points.push((0..spec.d).map(|_| rng.gen()).collect());
    }

    let mut worst: f64 = 0.0;
    for x in &points {
        let got = net.forward_scalar(x)?;
        let want = hat_eval(&reference, x)?;
        worst = worst.max((got - want).abs());
    }
    Ok(worst)
}

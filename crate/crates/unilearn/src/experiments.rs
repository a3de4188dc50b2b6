//! Teacher–student experiments: how hard is it, empirically, to learn a
//! random network in `L^∞` versus `L^p`?
//!
//! A sweep samples teachers from a `q = ∞` coefficient class, trains
//! student networks on `m` noiseless samples with Adam, and evaluates on a
//! large shared point set. The headline statistic mirrors the minimax
//! quantity the bounds speak about:
//!
//! `err̂(m, p) = min over student variants, max over teachers,
//!              mean over seeds of the per-trial L^p error`,
//!
//! with the `L^p` error itself estimated as `(mean_j |u(X_j) − A(X_j)|^p)^{1/p}`
//! (a plain maximum for `p = ∞` — deliberately no peak refinement here; the
//! evaluation set is the measurement).
//!
//! Training points live on the centered cube `[−0.5, 0.5]^d` by default;
//! [`centered_to_unit`] is the affine shim for feeding such functions to
//! the `[0,1]^d` machinery of the recovery/fooling modules.
//!
//! Everything is deterministically seeded: each trial derives its RNG from
//! [`seed_stream`](crate::seed_stream) applied to
//! `(sweep seed, role tag, m, teacher, variant, seed index)`, so the sweep
//! parallelizes over trials without any cross-talk and thread count never
//! changes a single bit of the output.

use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exponent::Exponent;
use crate::nn::{GradientBatch, Gradients, Mlp, NetworkClass};
use crate::recovery::{DeterministicMethod, Predictor, QueryOracle};
use crate::{pairwise_sum, seed_stream};

// Role tags for seed derivation; part of the documented seeding scheme.
const TAG_EVAL: u64 = 1;
const TAG_TEACHER: u64 = 2;
const TAG_TRAIN: u64 = 3;
const TAG_TRIAL: u64 = 4;

/// Adam hyperparameters plus the geometric per-epoch learning-rate decay
/// from `lr_init` down to `lr_final`. Fields omitted from a JSON config keep
/// their defaults.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct AdamParams {
    pub lr_init: f64,
    pub lr_final: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamParams {
    fn default() -> Self {
        AdamParams {
            lr_init: 1e-4,
            lr_final: 1e-6,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// Adam state mirroring the parameter layout of the network it optimizes.
struct Adam {
    params: AdamParams,
    m: Gradients,
    v: Gradients,
    t: u64,
}

impl Adam {
    fn new(net: &Mlp, params: AdamParams) -> Self {
        Adam {
            params,
            m: Gradients::zeros_like(net),
            v: Gradients::zeros_like(net),
            t: 0,
        }
    }

    fn step(&mut self, net: &mut Mlp, grad: &Gradients, lr: f64) {
        self.t += 1;
        let p = &self.params;
        let bc1 = 1.0 - p.beta1.powi(self.t as i32);
        let bc2 = 1.0 - p.beta2.powi(self.t as i32);
        let layers = net.depth();
        for l in 0..layers {
            let (m, v, g, w) = (
                &mut self.m.weights[l],
                &mut self.v.weights[l],
                &grad.weights[l],
                &mut net.weights_mut()[l],
            );
            for i in 0..g.len() {
                m[i] = p.beta1 * m[i] + (1.0 - p.beta1) * g[i];
                v[i] = p.beta2 * v[i] + (1.0 - p.beta2) * g[i] * g[i];
                w[i] -= lr * (m[i] / bc1) / ((v[i] / bc2).sqrt() + p.epsilon);
            }
        }
        for l in 0..layers {
            let (m, v, g, b) = (
                &mut self.m.biases[l],
                &mut self.v.biases[l],
                &grad.biases[l],
                &mut net.biases_mut()[l],
            );
            for i in 0..g.len() {
                m[i] = p.beta1 * m[i] + (1.0 - p.beta1) * g[i];
                v[i] = p.beta2 * v[i] + (1.0 - p.beta2) * g[i] * g[i];
                b[i] -= lr * (m[i] / bc1) / ((v[i] / bc2).sqrt() + p.epsilon);
            }
        }
    }
}

/// Samples a teacher from a `q = ∞` class: every weight and bias entry
/// i.i.d. uniform on `[−c, c]`, drawn layer by layer (weights before biases
/// within a layer). The result is in the class with zero slack.
pub fn sample_teacher(cls: &NetworkClass, seed: u64) -> Result<Mlp> {
    if !cls.q.is_infinite() {
        return Err(Error::Precondition(format!(
            "teacher sampling is defined for q = inf classes, got q = {}",
            cls.q
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut net = Mlp::zeros(cls.arch.clone())?;
    let c = cls.c;
    for l in 0..net.depth() {
        for w in net.weights_mut()[l].iter_mut() {
            *w = rng.gen_range(-c..c);
        }
        for b in net.biases_mut()[l].iter_mut() {
            *b = rng.gen_range(-c..c);
        }
    }
    Ok(net)
}

/// Student initialization: entries of layer `l` i.i.d. uniform on
/// `[−√(1/N_{l−1}), √(1/N_{l−1})]` (fan-in scaling).
pub fn init_student(arch: &[usize], seed: u64) -> Result<Mlp> {
    let mut net = Mlp::zeros(arch.to_vec())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for l in 0..net.depth() {
        let bound = (1.0 / arch[l] as f64).sqrt();
        for w in net.weights_mut()[l].iter_mut() {
            *w = rng.gen_range(-bound..bound);
        }
        for b in net.biases_mut()[l].iter_mut() {
            *b = rng.gen_range(-bound..bound);
        }
    }
    Ok(net)
}

/// A finished training run.
#[derive(Debug, Clone)]
pub struct TrainedStudent {
    pub net: Mlp,
    pub initial_loss: f64,
    pub final_loss: f64,
}

/// Trains a student on the given samples: Adam on the batch MSE, indices
/// reshuffled every epoch, learning rate decayed geometrically per epoch.
/// `epochs = 0` returns the initialized network untouched. Non-finite
/// losses abort with [`Error::TrainingDiverged`].
pub fn train_student(
    arch: &[usize],
    inputs: &[Vec<f64>],
    targets: &[f64],
    batch_size: usize,
    epochs: usize,
    adam: &AdamParams,
    seed: u64,
) -> Result<TrainedStudent> {
    if inputs.is_empty() || inputs.len() != targets.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} inputs vs {} targets",
            inputs.len(),
            targets.len()
        )));
    }
    if batch_size == 0 {
        return Err(Error::InvalidParameter("batch size must be >= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut net = init_student(arch, rng.gen())?;
    let full = GradientBatch {
        inputs: inputs.to_vec(),
        targets: targets.to_vec(),
    };
    let initial_loss = net.mse_loss(&full)?;
    if epochs == 0 {
        return Ok(TrainedStudent {
            net,
            initial_loss,
            final_loss: initial_loss,
        });
    }

    let decay = (adam.lr_final / adam.lr_init).powf(1.0 / epochs as f64);
    let mut opt = Adam::new(&net, adam.clone());
    let mut order: Vec<usize> = (0..inputs.len()).collect();
    for epoch in 0..epochs {
        let lr = adam.lr_init * decay.powi(epoch as i32);
        order.shuffle(&mut rng);
        for chunk in order.chunks(batch_size) {
            let batch = GradientBatch {
                inputs: chunk.iter().map(|&i| inputs[i].clone()).collect(),
                targets: chunk.iter().map(|&i| targets[i]).collect(),
            };
            let (grad, loss) = net.backprop_grad_with_loss(&batch)?;
            if !loss.is_finite() {
                return Err(Error::TrainingDiverged(format!(
                    "non-finite batch loss in epoch {epoch}"
                )));
            }
            opt.step(&mut net, &grad, lr);
        }
    }
    let final_loss = net.mse_loss(&full)?;
    if !final_loss.is_finite() {
        return Err(Error::TrainingDiverged("non-finite final loss".into()));
    }
    Ok(TrainedStudent {
        net,
        initial_loss,
        final_loss,
    })
}

/// One student configuration inside a sweep.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StudentVariant {
    pub arch: Vec<usize>,
    pub batch_size: usize,
}

/// Full sweep configuration; serializable so the CLI can read it from a
/// JSON file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub d: usize,
    /// Sample budgets to sweep; accepts a single integer (`"m": 100`) or a
    /// list in JSON.
    #[serde(alias = "m", deserialize_with = "one_or_many")]
    pub m_list: Vec<usize>,
    pub teacher_class: NetworkClass,
    pub n_teachers: usize,
    pub students: Vec<StudentVariant>,
    pub n_seeds: usize,
    pub epochs: usize,
    /// Evaluation set size `J` (one shared set for the whole sweep).
    pub n_eval: usize,
    pub p_list: Vec<Exponent>,
    #[serde(default)]
    pub adam: AdamParams,
    /// Use `[−0.5, 0.5]^d` (the default) instead of `[0,1]^d`.
    #[serde(default = "default_true")]
    pub centered_domain: bool,
    #[serde(default)]
    pub seed: u64,
}

fn default_true() -> bool {
    true
}

fn one_or_many<'de, D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Vec<usize>, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum OneOrMany {
        One(usize),
        Many(Vec<usize>),
    }
    Ok(match OneOrMany::deserialize(de)? {
        OneOrMany::One(m) => vec![m],
        OneOrMany::Many(v) => v,
    })
}

impl ExperimentConfig {
    /// A configuration that finishes on a workstation in minutes while still
    /// exhibiting the `L^∞` vs `L^1` separation.
    pub fn desk_scale() -> Self {
        ExperimentConfig {
            d: 1,
            m_list: vec![100],
            teacher_class: NetworkClass::new(vec![1, 32, 32, 32, 32, 1], 0.5, Exponent::Infinity)
                .unwrap(),
            n_teachers: 5,
            students: vec![StudentVariant {
                arch: vec![1, 64, 64, 64, 64, 1],
                batch_size: 20,
            }],
            n_seeds: 2,
            epochs: 4000,
            n_eval: 1 << 16,
            p_list: vec![Exponent::Finite(1.0), Exponent::Finite(2.0), Exponent::Infinity],
            adam: AdamParams::default(),
            centered_domain: true,
            seed: 0,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.d == 0
            || self.m_list.is_empty()
            || self.m_list.iter().any(|&m| m == 0)
            || self.n_teachers == 0
            || self.students.is_empty()
            || self.n_seeds == 0
            || self.n_eval == 0
            || self.p_list.is_empty()
        {
            return Err(Error::InvalidParameter(
                "experiment config has an empty or zero-sized field".into(),
            ));
        }
        if self.teacher_class.input_dim() != self.d
            || *self.teacher_class.arch.last().unwrap() != 1
        {
            return Err(Error::DimensionMismatch(format!(
                "teacher architecture {:?} must map dim {} to 1",
                self.teacher_class.arch, self.d
            )));
        }
        for v in &self.students {
            if v.arch.first() != Some(&self.d) || v.arch.last() != Some(&1) {
                return Err(Error::DimensionMismatch(format!(
                    "student architecture {:?} must map dim {} to 1",
                    v.arch, self.d
                )));
            }
            if v.batch_size == 0 {
                return Err(Error::InvalidParameter("batch size must be >= 1".into()));
            }
        }
        if !self.p_list.iter().all(|p| p.ge(1.0)) {
            return Err(Error::InvalidParameter(
                "error exponents must satisfy p >= 1".into(),
            ));
        }
        Ok(())
    }
}

/// One `(m, teacher, variant, seed)` cell of the sweep.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrialResult {
    pub m: usize,
    pub teacher_id: usize,
    pub variant_index: usize,
    pub seed_index: usize,
    pub student_arch: Vec<usize>,
    pub batch_size: usize,
    /// `(p, error)` pairs in `p_list` order.
    pub errors: Vec<PError>,
    pub initial_loss: f64,
    pub final_loss: f64,
    /// Training-sanity flag: the final loss failed to improve on the
    /// initial one. Flagged trials stay in the aggregate but are reported.
    pub flagged: bool,
    /// Wall-clock training time. Not serialized: exported artifacts must be
    /// bit-identical across runs and thread counts.
    #[serde(skip, default)]
    pub train_seconds: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PError {
    pub p: Exponent,
    pub error: f64,
}

/// Aggregated `err̂` for one `(m, p)` cell.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ErrHatEntry {
    pub m: usize,
    pub p: Exponent,
    pub err_hat: f64,
}

/// Everything a sweep produces.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ErrHatReport {
    pub config: ExperimentConfig,
    pub trials: Vec<TrialResult>,
    pub table: Vec<ErrHatEntry>,
    pub flagged_trials: usize,
}

impl ErrHatReport {
    pub fn err_hat(&self, m: usize, p: Exponent) -> Option<f64> {
        self.table
            .iter()
            .find(|e| e.m == m && e.p == p)
            .map(|e| e.err_hat)
    }
}

fn sample_cube(rng: &mut ChaCha8Rng, d: usize, centered: bool) -> Vec<f64> {
    (0..d)
        .map(|_| {
            let u: f64 = rng.gen();
            if centered {
                u - 0.5
            } else {
                u
            }
        })
        .collect()
}

/// `L^p` errors of a residual vector in the order of `p_list`; mean-based
/// for finite `p` (pairwise-summed), plain max for `p = ∞`.
fn residual_errors(residuals: &[f64], p_list: &[Exponent]) -> Vec<PError> {
    let n = residuals.len() as f64;
    p_list
        .iter()
        .map(|&p| {
            let error = match p {
                Exponent::Infinity => residuals.iter().fold(0.0f64, |a, &r| a.max(r.abs())),
                Exponent::Finite(pf) => {
                    let powered: Vec<f64> =
                        residuals.iter().map(|r| r.abs().powf(pf)).collect();
                    (pairwise_sum(&powered) / n).powf(1.0 / pf)
                }
            };
            PError { p, error }
        })
        .collect()
}

/// Runs the full sweep: teachers, trials (in parallel, one derived seed
/// each), evaluation on the shared point set, and the min–max–mean
/// aggregation into `err̂(m, p)`.
pub fn estimate_err_hat(config: &ExperimentConfig) -> Result<ErrHatReport> {
    config.validate()?;
    let root = config.seed;
    let d = config.d;
    let centered = config.centered_domain;

    // Shared evaluation set, one per sweep.
    let mut eval_rng = ChaCha8Rng::seed_from_u64(seed_stream(&[root, TAG_EVAL]));
    let eval_points: Vec<Vec<f64>> = (0..config.n_eval)
        .map(|_| sample_cube(&mut eval_rng, d, centered))
        .collect();

    // Teachers and their evaluations, in teacher order.
    let teachers: Vec<Mlp> = (0..config.n_teachers)
        .map(|t| {
            sample_teacher(
                &config.teacher_class,
                seed_stream(&[root, TAG_TEACHER, t as u64]),
            )
        })
        .collect::<Result<_>>()?;
    let teacher_evals: Vec<Vec<f64>> = teachers
        .par_iter()
        .map(|net| {
            eval_points
                .iter()
                .map(|x| net.forward_scalar(x))
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;

    // Per-(m, teacher) training sets, shared by every variant and seed so
    // that variants compete on the same data.
    struct TrainSet {
        inputs: Vec<Vec<f64>>,
        targets: Vec<f64>,
    }
    let mut train_sets: Vec<Vec<TrainSet>> = Vec::with_capacity(config.m_list.len());
    for &m in &config.m_list {
        let mut per_teacher = Vec::with_capacity(config.n_teachers);
        for (t, teacher) in teachers.iter().enumerate() {
            let mut rng =
                ChaCha8Rng::seed_from_u64(seed_stream(&[root, TAG_TRAIN, m as u64, t as u64]));
            let inputs: Vec<Vec<f64>> =
                (0..m).map(|_| sample_cube(&mut rng, d, centered)).collect();
            let targets = inputs
                .iter()
                .map(|x| teacher.forward_scalar(x))
                .collect::<Result<Vec<f64>>>()?;
            per_teacher.push(TrainSet { inputs, targets });
        }
        train_sets.push(per_teacher);
    }

    // Trial descriptors in a fixed order; the parallel map preserves it.
    let mut descriptors = Vec::new();
    for (mi, &m) in config.m_list.iter().enumerate() {
        for t in 0..config.n_teachers {
            for (vi, _) in config.students.iter().enumerate() {
                for si in 0..config.n_seeds {
                    descriptors.push((mi, m, t, vi, si));
                }
            }
        }
    }

    let trials: Vec<TrialResult> = descriptors
        .par_iter()
        .map(|&(mi, m, t, vi, si)| -> Result<TrialResult> {
            let variant = &config.students[vi];
            let set = &train_sets[mi][t];
            let trial_seed = seed_stream(&[
                root,
                TAG_TRIAL,
                m as u64,
                t as u64,
                vi as u64,
                si as u64,
            ]);
            let started = Instant::now();
            let trained = train_student(
                &variant.arch,
                &set.inputs,
                &set.targets,
                variant.batch_size,
                config.epochs,
                &config.adam,
                trial_seed,
            )?;
            let train_seconds = started.elapsed().as_secs_f64();
            let residuals: Vec<f64> = eval_points
                .iter()
                .zip(&teacher_evals[t])
                .map(|(x, &u)| Ok(u - trained.net.forward_scalar(x)?))
                .collect::<Result<_>>()?;
            let errors = residual_errors(&residuals, &config.p_list);
            Ok(TrialResult {
                m,
                teacher_id: t,
                variant_index: vi,
                seed_index: si,
                student_arch: variant.arch.clone(),
                batch_size: variant.batch_size,
                errors,
                initial_loss: trained.initial_loss,
                final_loss: trained.final_loss,
                flagged: trained.final_loss > trained.initial_loss,
                train_seconds,
            })
        })
        .collect::<Result<_>>()?;

    // err̂(m, p) = min over variants of max over teachers of the seed mean.
    let n_var = config.students.len();
    let n_seeds = config.n_seeds;
    let n_teach = config.n_teachers;
    let idx = |mi: usize, t: usize, vi: usize, si: usize| {
        ((mi * n_teach + t) * n_var + vi) * n_seeds + si
    };
    let mut table = Vec::new();
    for (mi, &m) in config.m_list.iter().enumerate() {
        for (pi, &p) in config.p_list.iter().enumerate() {
            let mut best = f64::INFINITY;
            for vi in 0..n_var {
                let mut worst: f64 = 0.0;
                for t in 0..n_teach {
                    let seed_errs: Vec<f64> = (0..n_seeds)
                        .map(|si| trials[idx(mi, t, vi, si)].errors[pi].error)
                        .collect();
                    worst = worst.max(pairwise_sum(&seed_errs) / n_seeds as f64);
                }
                best = best.min(worst);
            }
            table.push(ErrHatEntry { m, p, err_hat: best });
        }
    }

    let flagged_trials = trials.iter().filter(|t| t.flagged).count();
    Ok(ErrHatReport {
        config: config.clone(),
        trials,
        table,
        flagged_trials,
    })
}

/// Views a function defined on the centered cube `[−0.5, 0.5]^d` through
/// the `[0,1]^d` interface used by the recovery and fooling modules.
pub fn centered_to_unit<'a>(
    f: &'a (dyn Fn(&[f64]) -> f64 + Sync),
) -> impl Fn(&[f64]) -> f64 + Sync + 'a {
    move |x: &[f64]| {
        let shifted: Vec<f64> = x.iter().map(|v| v - 0.5).collect();
        f(&shifted)
    }
}

/// The spiky 1-d benchmark target `x ↦ log(sin(50x) + 2) + sin(5x)`.
pub fn oscillatory_target(x: f64) -> f64 {
    ((50.0 * x).sin() + 2.0).ln() + (5.0 * x).sin()
}

/// Configuration for the single-run norm-gap demonstration on the
/// oscillatory target.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GapDemoConfig {
    pub m: usize,
    pub arch: Vec<usize>,
    pub batch_size: usize,
    pub epochs: usize,
    pub n_eval: usize,
    #[serde(default)]
    pub adam: AdamParams,
    #[serde(default)]
    pub seed: u64,
}

impl Default for GapDemoConfig {
    fn default() -> Self {
        GapDemoConfig {
            m: 1000,
            arch: vec![1, 50, 50, 50, 50, 50, 1],
            batch_size: 20,
            epochs: 5000,
            n_eval: 1 << 16,
            adam: AdamParams::default(),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GapDemoResult {
    pub l1_error: f64,
    pub linf_error: f64,
    pub ratio: f64,
    pub initial_loss: f64,
    pub final_loss: f64,
}

/// Trains one student on the oscillatory target over `[−0.5, 0.5]` and
/// reports the `L^1`/`L^∞` evaluation errors: the uniform error stays far
/// above the average error, which is the phenomenon the lower bounds
/// explain.
pub fn run_gap_demo(cfg: &GapDemoConfig) -> Result<GapDemoResult> {
    if cfg.arch.first() != Some(&1) || cfg.arch.last() != Some(&1) {
        return Err(Error::DimensionMismatch(format!(
            "gap demo is one-dimensional, got arch {:?}",
            cfg.arch
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed_stream(&[cfg.seed, TAG_TRAIN]));
    let inputs: Vec<Vec<f64>> = (0..cfg.m)
        .map(|_| vec![rng.gen::<f64>() - 0.5])
        .collect();
    let targets: Vec<f64> = inputs.iter().map(|x| oscillatory_target(x[0])).collect();
    let trained = train_student(
        &cfg.arch,
        &inputs,
        &targets,
        cfg.batch_size,
        cfg.epochs,
        &cfg.adam,
        seed_stream(&[cfg.seed, TAG_TRIAL]),
    )?;

    let mut eval_rng = ChaCha8Rng::seed_from_u64(seed_stream(&[cfg.seed, TAG_EVAL]));
    let residuals: Vec<f64> = (0..cfg.n_eval)
        .map(|_| {
            let x = vec![eval_rng.gen::<f64>() - 0.5];
            Ok(oscillatory_target(x[0]) - trained.net.forward_scalar(&x)?)
        })
        .collect::<Result<_>>()?;
    let errs = residual_errors(&residuals, &[Exponent::Finite(1.0), Exponent::Infinity]);
    let (l1, linf) = (errs[0].error, errs[1].error);
    Ok(GapDemoResult {
        l1_error: l1,
        linf_error: linf,
        ratio: linf / l1,
        initial_loss: trained.initial_loss,
        final_loss: trained.final_loss,
    })
}

/// Per-trial CSV: one row per `(trial, p)`, floats formatted round-trip
/// safe. Timing is deliberately absent (see [`TrialResult::train_seconds`]).
pub fn trials_csv(report: &ErrHatReport) -> String {
    let mut out = String::from(
        "m,teacher_id,variant_index,seed_index,student_arch,batch_size,p,error,initial_loss,final_loss,flagged\n",
    );
    for t in &report.trials {
        let arch = t
            .student_arch
            .iter()
            .map(|w| w.to_string())
            .collect::<Vec<_>>()
            .join("x");
        for e in &t.errors {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{},{}\n",
                t.m,
                t.teacher_id,
                t.variant_index,
                t.seed_index,
                arch,
                t.batch_size,
                e.p,
                e.error,
                t.initial_loss,
                t.final_loss,
                t.flagged
            ));
        }
    }
    out
}

/// Plot-ready series: `p, m, err_hat` rows grouped by `p`, `m` ascending.
pub fn series_csv(report: &ErrHatReport) -> String {
    let mut out = String::from("p,m,err_hat\n");
    for &p in &report.config.p_list {
        for &m in &report.config.m_list {
            if let Some(e) = report.err_hat(m, p) {
                out.push_str(&format!("{p},{m},{e}\n"));
            }
        }
    }
    out
}

/// Adapter exposing a training pipeline as a deterministic sampling method:
/// draws its `m` training points from a seeded stream on `[0,1]^d`, queries
/// the oracle there, trains a student, and predicts with it. Everything is
/// a pure function of the (seeded) configuration and the oracle's answers.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StudentMethod {
    pub m: usize,
    pub arch: Vec<usize>,
    pub batch_size: usize,
    pub epochs: usize,
    #[serde(default)]
    pub adam: AdamParams,
    #[serde(default)]
    pub seed: u64,
}

impl DeterministicMethod for StudentMethod {
    fn budget(&self) -> usize {
        self.m
    }

    fn run(&self, oracle: &mut QueryOracle<'_>) -> Result<Predictor> {
        let d = *self.arch.first().ok_or_else(|| {
            Error::DimensionMismatch("student method needs an architecture".into())
        })?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed_stream(&[self.seed, TAG_TRAIN]));
        let mut inputs = Vec::with_capacity(self.m);
        let mut targets = Vec::with_capacity(self.m);
        for _ in 0..self.m {
            let x: Vec<f64> = (0..d).map(|_| rng.gen::<f64>()).collect();
            targets.push(oracle.query(&x)?);
            inputs.push(x);
        }
        let trained = train_student(
            &self.arch,
            &inputs,
            &targets,
            self.batch_size,
            self.epochs,
            &self.adam,
            seed_stream(&[self.seed, TAG_TRIAL]),
        )?;
        let net = trained.net;
        Ok(Predictor::new(d, move |x: &[f64]| {
            net.forward_scalar(x).unwrap_or(f64::NAN)
        }))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn teacher_is_in_class_with_zero_slack() {
        let cls = NetworkClass::new(vec![2, 8, 8, 1], 0.5, Exponent::Infinity).unwrap();
        for seed in 0..20 {
            let t = sample_teacher(&cls, seed).unwrap();
            assert!(t.in_class(&cls, 0.0));
        }
    }

    #[test]
    fn teacher_sampling_requires_q_inf() {
        let cls = NetworkClass::new(vec![2, 8, 1], 0.5, Exponent::Finite(2.0)).unwrap();
        assert!(sample_teacher(&cls, 0).is_err());
    }

    #[test]
    fn init_student_respects_fan_in_bounds() {
        let net = init_student(&[4, 16, 1], 9).unwrap();
        let b0 = (1.0f64 / 4.0).sqrt();
        assert!(net.weights()[0].iter().all(|w| w.abs() <= b0));
        let b1 = (1.0f64 / 16.0).sqrt();
        assert!(net.weights()[1].iter().all(|w| w.abs() <= b1));
    }

    #[test]
    fn zero_epochs_returns_initialization() {
        let inputs = vec![vec![0.1], vec![0.6]];
        let targets = vec![0.2, 0.4];
        let a = train_student(&[1, 8, 1], &inputs, &targets, 2, 0, &Default::default(), 5)
            .unwrap();
        assert_eq!(a.initial_loss, a.final_loss);
        let b = train_student(&[1, 8, 1], &inputs, &targets, 2, 0, &Default::default(), 5)
            .unwrap();
        assert_eq!(a.net, b.net);
    }

    #[test]
    fn training_is_deterministic_and_improves() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let inputs: Vec<Vec<f64>> = (0..40).map(|_| vec![rng.gen::<f64>() - 0.5]).collect();
        let targets: Vec<f64> = inputs.iter().map(|x| (3.0 * x[0]).sin()).collect();
        let adam = AdamParams {
            lr_init: 1e-2,
            lr_final: 1e-3,
            ..Default::default()
        };
        let a = train_student(&[1, 16, 16, 1], &inputs, &targets, 8, 60, &adam, 4).unwrap();
        let b = train_student(&[1, 16, 16, 1], &inputs, &targets, 8, 60, &adam, 4).unwrap();
        assert_eq!(a.net, b.net, "same seed must give the same network");
        assert!(
            a.final_loss < a.initial_loss,
            "loss should improve: {} -> {}",
            a.initial_loss,
            a.final_loss
        );
        let c = train_student(&[1, 16, 16, 1], &inputs, &targets, 8, 60, &adam, 5).unwrap();
        assert_ne!(a.net, c.net, "different seeds should differ");
    }

    #[test]
    fn sweep_is_deterministic_and_aggregates() {
        let config = ExperimentConfig {
            d: 1,
            m_list: vec![16],
            teacher_class: NetworkClass::new(vec![1, 8, 8, 1], 0.5, Exponent::Infinity)
                .unwrap(),
            n_teachers: 2,
            students: vec![
                StudentVariant {
                    arch: vec![1, 8, 8, 1],
                    batch_size: 4,
                },
                StudentVariant {
                    arch: vec![1, 4, 1],
                    batch_size: 8,
                },
            ],
            n_seeds: 2,
            epochs: 30,
            n_eval: 512,
            p_list: vec![Exponent::Finite(1.0), Exponent::Infinity],
            adam: AdamParams {
                lr_init: 1e-2,
                lr_final: 1e-3,
                ..Default::default()
            },
            centered_domain: true,
            seed: 11,
        };
        let a = estimate_err_hat(&config).unwrap();
        let b = estimate_err_hat(&config).unwrap();
        assert_eq!(a.trials.len(), 8);
        for (x, y) in a.trials.iter().zip(&b.trials) {
            for (e, f) in x.errors.iter().zip(&y.errors) {
                assert_eq!(e.error.to_bits(), f.error.to_bits());
            }
        }
        assert_eq!(a.table.len(), 2);
        // err̂ must be the min over variants of the max over teachers of the
        // per-variant seed means — recompute by hand for p = L1.
        let mut by_variant = Vec::new();
        for vi in 0..2 {
            let mut worst: f64 = 0.0;
            for t in 0..2 {
                let mean: f64 = a
                    .trials
                    .iter()
                    .filter(|tr| tr.teacher_id == t && tr.variant_index == vi)
                    .map(|tr| tr.errors[0].error)
                    .sum::<f64>()
                    / 2.0;
                worst = worst.max(mean);
            }
            by_variant.push(worst);
        }
        let want = by_variant.iter().cloned().fold(f64::INFINITY, f64::min);
        let got = a.err_hat(16, Exponent::Finite(1.0)).unwrap();
        assert!((got - want).abs() <= 1e-12 * want.max(1.0));
    }

    #[test]
    fn csv_outputs_have_expected_shape() {
        let config = ExperimentConfig {
            d: 1,
            m_list: vec![8],
            teacher_class: NetworkClass::new(vec![1, 4, 4, 1], 0.5, Exponent::Infinity).unwrap(),
            n_teachers: 1,
            students: vec![StudentVariant {
                arch: vec![1, 4, 1],
                batch_size: 4,
            }],
            n_seeds: 1,
            epochs: 5,
            n_eval: 64,
            p_list: vec![Exponent::Finite(1.0), Exponent::Infinity],
            adam: Default::default(),
            centered_domain: true,
            seed: 0,
        };
        let report = estimate_err_hat(&config).unwrap();
        let trials = trials_csv(&report);
        assert_eq!(trials.lines().count(), 1 + 2); // header + 1 trial × 2 p
        assert!(trials.lines().nth(1).unwrap().contains("1x4x1"));
        let series = series_csv(&report);
        assert_eq!(series.lines().count(), 1 + 2);
        assert!(series.lines().nth(2).unwrap().starts_with("inf,8,"));
        // JSON round trip
        let text = serde_json::to_string(&report).unwrap();
        let back: ErrHatReport = serde_json::from_str(&text).unwrap();
        assert_eq!(back.trials.len(), report.trials.len());
    }

    #[test]
    fn student_method_is_deterministic_under_recording() {
        use crate::recovery::run_with_recording;
        let method = StudentMethod {
            m: 12,
            arch: vec![1, 8, 1],
            batch_size: 4,
            epochs: 20,
            adam: AdamParams {
                lr_init: 1e-2,
                lr_final: 1e-3,
                ..Default::default()
            },
            seed: 3,
        };
        let target = |x: &[f64]| (2.0 * x[0] - 0.7).abs();
        let a = run_with_recording(&method, &target).unwrap();
        let b = run_with_recording(&method, &target).unwrap();
        assert!(a.observations_identical(&b));
        for x in [[0.0], [0.33], [1.0]] {
            assert_eq!(
                a.predictor.eval(&x).to_bits(),
                b.predictor.eval(&x).to_bits()
            );
        }
    }

    #[test]
    fn config_accepts_single_m_or_list() {
        let base = serde_json::to_value(ExperimentConfig::desk_scale()).unwrap();
        let mut single = base.clone();
        single.as_object_mut().unwrap().remove("m_list");
        single["m"] = serde_json::json!(100);
        let cfg: ExperimentConfig = serde_json::from_value(single).unwrap();
        assert_eq!(cfg.m_list, vec![100]);
        let mut many = base;
        many["m_list"] = serde_json::json!([10, 20]);
        let cfg: ExperimentConfig = serde_json::from_value(many).unwrap();
        assert_eq!(cfg.m_list, vec![10, 20]);
    }

    #[test]
    fn centered_shim_shifts_the_argument() {
        let f = |x: &[f64]| x[0] * 10.0;
        let g = centered_to_unit(&f);
        assert_eq!(g(&[0.5]), 0.0);
        assert_eq!(g(&[1.0]), 5.0);
    }
}

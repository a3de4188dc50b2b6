//! The fooling adversary: plants a spike where a deterministic method never
//! looked.
//!
//! Given a method with budget `m`, tile `[0,1]^s` with `(4k)^s` disjoint
//! open boxes of half-width `1/(8k)` around the centers
//! `y^ℓ_j = (2ℓ_j − 1)/(8k)`, `ℓ ∈ {1,…,4k}^s`, with `k = ⌈m^{1/s}⌉` by
//! default. Run the method once on the base target `u₀` and mark the boxes
//! its queries landed in: each query touches at most one box, so at least
//! `(4k)^s − m > 0` boxes stay untouched. A hat of steepness `M = 8k`
//! centered in an untouched box vanishes on every queried point, so the
//! method receives the exact same values — and returns the exact same
//! predictor — whether the target is `u₀`, `u₀ + a·ϑ`, or `u₀ − a·ϑ`. One
//! of the two signed spikes must then carry `L^p` error at least
//! `a·‖ϑ‖_{L^p}`, which the closed-form sandwich bounds from below.
//!
//! The attack verifies the blindness claim by replaying the method on both
//! spiked targets and bit-comparing transcripts, then measures the realized
//! error with the Monte Carlo estimator [`lp_error_estimate`].

use serde::Serialize;

use crate::error::{Error, Result};
use crate::exponent::Exponent;
use crate::hat::{hat_eval, hat_lp_bounds, HatSpec, Sign};
use crate::pairwise_sum;
use crate::recovery::{int_ceil_root, run_with_recording, DeterministicMethod, QueryTranscript};

/// Local grid search around the best points found by sampling; used only
/// for `p = ∞`, where a plain sample maximum misses narrow peaks.
#[derive(Debug, Clone, Copy)]
pub struct PeakRefinement {
    /// Half-width of the per-coordinate scan interval.
    pub radius: f64,
    /// Initial scan step; three follow-up rounds shrink it 8× each.
    pub step: f64,
}

impl PeakRefinement {
    /// Refinement matched to a spike of steepness `M`: scan radius `1/M`
    /// (the support half-width) at initial resolution `1/(8M·16)`.
    pub fn for_steepness(m: f64) -> Self {
        PeakRefinement {
            radius: 1.0 / m,
            step: 1.0 / (8.0 * m * 16.0),
        }
    }
}

/// Extra knobs for [`lp_error_estimate`]; the defaults are what the attack
/// uses internally.
#[derive(Default)]
pub struct EstimateOptions<'a> {
    /// Points that are always evaluated (and eligible as refinement seeds),
    /// e.g. a spike center the caller knows about.
    pub anchors: &'a [Vec<f64>],
    /// Peak refinement for `p = ∞`; ignored for finite `p`.
    pub refine: Option<PeakRefinement>,
}

/// Monte Carlo estimate of `‖f − g‖_{L^p([0,1]^d)}`.
///
/// Finite `p`: `(mean over n seeded uniform points of |f−g|^p)^{1/p}`,
/// reduced by pairwise summation. `p = ∞`: maximum over the points and the
/// anchors, followed by a coordinate-descent grid search around the ten
/// best points when refinement is configured. Always a lower estimate of
/// the true norm (up to Monte Carlo fluctuation for finite `p`).
pub fn lp_error_estimate(
    f: &(dyn Fn(&[f64]) -> f64 + Sync),
    g: &(dyn Fn(&[f64]) -> f64 + Sync),
    p: Exponent,
    n: usize,
    seed: u64,
    d: usize,
    opts: &EstimateOptions<'_>,
) -> Result<f64> {
    use rand::{Rng, SeedableRng};
    if n == 0 || d == 0 {
        return Err(Error::InvalidParameter(
            "need n >= 1 sample points and d >= 1".into(),
        ));
    }
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut points: Vec<Vec<f64>> = Vec::with_capacity(n + opts.anchors.len());
    for _ in 0..n {
        points.push((0..d).map(|_| rng.gen::<f64>()).collect());
    }
    points.extend(opts.anchors.iter().cloned());

    let diff = |x: &[f64]| (f(x) - g(x)).abs();

    match p {
        Exponent::Finite(pf) => {
            if !(pf >= 1.0) {
                return Err(Error::InvalidParameter(format!(
                    "error exponent must satisfy p >= 1, got {pf}"
                )));
            }
            // Anchors are a peak-finding device; they would bias a mean, so
            // only the random points enter.
            let powered: Vec<f64> = points[..n].iter().map(|x| diff(x).powf(pf)).collect();
            Ok((pairwise_sum(&powered) / n as f64).powf(1.0 / pf))
        }
        Exponent::Infinity => {
            let mut scored: Vec<(f64, usize)> = points
                .iter()
                .enumerate()
                .map(|(i, x)| (diff(x), i))
                .collect();
            let mut best = scored
                .iter()
                .map(|&(v, _)| v)
                .fold(0.0f64, f64::max);
            if let Some(refine) = opts.refine {
                // Ten most promising starting points, ties broken by index
                // so the choice is deterministic.
                scored.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(&b.1)));
                for &(_, i) in scored.iter().take(10) {
                    let mut x = points[i].clone();
                    let mut step = refine.step;
                    for _round in 0..4 {
                        for j in 0..d {
                            let lo = (x[j] - refine.radius).max(0.0);
                            let hi = (x[j] + refine.radius).min(1.0);
                            let mut best_t = x[j];
                            let mut best_v = diff(&x);
                            let mut t = lo;
                            while t <= hi {
                                x[j] = t;
                                let v = diff(&x);
                                if v > best_v {
                                    best_v = v;
                                    best_t = t;
                                }
                                t += step;
                            }
                            x[j] = best_t;
                        }
                        step /= 8.0;
                    }
                    best = best.max(diff(&x));
                }
            }
            Ok(best)
        }
    }
}

/// Outcome of a fooling attack.
#[derive(Debug, Clone, Serialize)]
pub struct FoolingResult {
    /// Grid parameter actually used (after any doubling fallback).
    pub k: usize,
    /// Spike steepness `M = 8k`.
    pub steepness: f64,
    /// Total number of candidate boxes, `(4k)^s`.
    pub candidate_cells: usize,
    /// Boxes no query landed in.
    pub untouched_count: usize,
    /// Lexicographically smallest untouched box index (1-based per axis).
    pub chosen_ell: Vec<usize>,
    /// Orientation achieving the larger measured error.
    pub chosen_nu: Sign,
    /// The planted spike (amplitude included).
    pub fooling_function: HatSpec,
    /// Description of the base target the spike was added to.
    pub u0_description: String,
    /// Number of oracle queries the method actually made.
    pub queries_used: usize,
    /// Estimated `L^p` error of the method on the worse signed spike.
    pub measured_error: f64,
    /// `amplitude · (closed-form lower bound on ‖ϑ‖_{L^p})`; the attack
    /// fails loudly if the measurement falls below this.
    pub theoretical_floor: f64,
}

/// Attack parameters beyond the mathematical essentials.
pub struct AttackOptions {
    /// Override the default grid parameter `k = ⌈m^{1/s}⌉`. Smaller values
    /// void the counting guarantee; the attack then doubles `k` until an
    /// untouched box exists and `(4k)^s > m`.
    pub k_override: Option<usize>,
    /// Monte Carlo sample count for the error measurement.
    pub mc_samples: usize,
    /// Seed for the error measurement.
    pub seed: u64,
    /// Human-readable tag for the base target, carried into the result.
    pub u0_description: String,
}

impl Default for AttackOptions {
    fn default() -> Self {
        AttackOptions {
            k_override: None,
            mc_samples: 16384,
            seed: 0,
            u0_description: "zero".into(),
        }
    }
}

/// Runs the fooling adversary against a deterministic method.
///
/// `d` is the ambient dimension, `s` the number of active spike
/// coordinates, `amplitude` the spike height added to the base target `u0`,
/// and `p` the norm in which the damage is measured.
pub fn fooling_attack(
    method: &dyn DeterministicMethod,
    d: usize,
    s: usize,
    amplitude: f64,
    u0: &(dyn Fn(&[f64]) -> f64 + Sync),
    p: Exponent,
    opts: &AttackOptions,
) -> Result<FoolingResult> {
    if s == 0 || s > d {
        return Err(Error::Precondition(format!(
            "active coordinates must satisfy 1 <= s <= d, got s={s}, d={d}"
        )));
    }
    if !(amplitude > 0.0) {
        return Err(Error::Precondition(format!(
            "amplitude must be positive, got {amplitude}"
        )));
    }
    let m = method.budget();
    let mut k = match opts.k_override {
        Some(k) if k >= 1 => k,
        Some(k) => {
            return Err(Error::Precondition(format!("k override must be >= 1, got {k}")))
        }
        None => int_ceil_root(m.max(1), s),
    };

    loop {
        let cells = checked_cells(4 * k, s)?;
        let base_run = run_with_recording(method, u0)?;
        let touched = touched_boxes(&base_run.points, k, s);
        debug_assert!(touched.len() <= base_run.points.len());
        let untouched = cells - touched.len();

        // With the default k the count bound (4k)^s − m > 0 makes this
        // impossible; an aggressive override can exhaust the grid, in which
        // case a finer grid restores the guarantee.
        if untouched == 0 {
            k *= 2;
            while checked_cells(4 * k, s)? <= m {
                k *= 2;
            }
            continue;
        }

        let chosen_ell = first_untouched(&touched, k, s).expect("untouched > 0");
        let steepness = (8 * k) as f64;
        // Inactive coordinates of the center only need to be inside the
        // cube; the hat does not depend on them.
        let mut center = vec![1.0 / steepness; d];
        for j in 0..s {
            center[j] = (2.0 * chosen_ell[j] as f64 - 1.0) / steepness;
        }

        let mut best: Option<(Sign, f64, QueryTranscript)> = None;
        for sign in [Sign::Pos, Sign::Neg] {
            let spike = HatSpec::new(d, s, steepness, center.clone(), sign, amplitude)?;
            let spiked = |x: &[f64]| u0(x) + hat_eval(&spike, x).expect("dims checked");
            let run = run_with_recording(method, &spiked)?;
            if !run.observations_identical(&base_run) {
                return Err(Error::BlindnessViolated(format!(
                    "method distinguished u0 from u0 {} spike at cell {:?}",
                    match sign {
                        Sign::Pos => "+",
                        Sign::Neg => "-",
                    },
                    chosen_ell
                )));
            }
            let predictor = run.predictor.clone();
            let err = lp_error_estimate(
                &spiked,
                &move |x: &[f64]| predictor.eval(x),
                p,
                opts.mc_samples,
                opts.seed,
                d,
                &EstimateOptions {
                    anchors: std::slice::from_ref(&center),
                    refine: Some(PeakRefinement::for_steepness(steepness)),
                },
            )?;
            match &best {
                Some((_, e, _)) if *e >= err => {}
                _ => best = Some((sign, err, run)),
            }
        }
        let (chosen_nu, measured_error, run) = best.expect("two candidates evaluated");

        let (floor_raw, _) = hat_lp_bounds(s, steepness, p)?;
        let theoretical_floor = amplitude * floor_raw;
        if measured_error < theoretical_floor {
            return Err(Error::FloorViolated(format!(
                "measured {measured_error} < floor {theoretical_floor} (k={k}, s={s}, p={p})"
            )));
        }

        let spike = HatSpec::new(d, s, steepness, center, chosen_nu, amplitude)?;
        return Ok(FoolingResult {
            k,
            steepness,
            candidate_cells: cells,
            untouched_count: untouched,
            chosen_ell,
            chosen_nu,
            fooling_function: spike,
            u0_description: opts.u0_description.clone(),
            queries_used: run.points.len(),
            measured_error,
            theoretical_floor,
        });
    }
}

fn checked_cells(side: usize, s: usize) -> Result<usize> {
    let mut acc: usize = 1;
    for _ in 0..s {
        acc = acc.checked_mul(side).ok_or_else(|| {
            Error::InvalidParameter(format!("grid {side}^{s} overflows the cell count"))
        })?;
    }
    Ok(acc)
}

/// Which open boxes the queries landed in. Box `ℓ` along axis `j` is the
/// open interval `((ℓ−1)/(4k), ℓ/(4k))`; a query on a box boundary touches
/// nothing (the hat vanishes there anyway).
fn touched_boxes(points: &[Vec<f64>], k: usize, s: usize) -> std::collections::BTreeSet<Vec<usize>> {
    let mut touched = std::collections::BTreeSet::new();
    let side = 4 * k;
    let steepness = (8 * k) as f64;
    'next_point: for x in points {
        let mut ell = Vec::with_capacity(s);
        for &xj in x.iter().take(s) {
            let t = xj * steepness; // box ℓ ⇔ t ∈ (2ℓ−2, 2ℓ)
            let cand = (t / 2.0).floor() as isize + 1;
            if cand < 1 || cand as usize > side {
                continue 'next_point;
            }
            let center = (2.0 * cand as f64 - 1.0) / steepness;
            if (xj - center).abs() >= 1.0 / steepness {
                continue 'next_point; // boundary or outside: no box touched
            }
            ell.push(cand as usize);
        }
        touched.insert(ell);
    }
    touched
}

/// Lexicographically smallest multi-index in `{1,…,4k}^s` not in `touched`.
fn first_untouched(
    touched: &std::collections::BTreeSet<Vec<usize>>,
    k: usize,
    s: usize,
) -> Option<Vec<usize>> {
    let side = 4 * k;
    let mut ell = vec![1usize; s];
    loop {
        if !touched.contains(&ell) {
            return Some(ell);
        }
        let mut j = s;
        loop {
            if j == 0 {
                return None;
            }
            j -= 1;
            ell[j] += 1;
            if ell[j] <= side {
                break;
            }
            ell[j] = 1;
        }
    }
}

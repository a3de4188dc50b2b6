//! Localized spike ("hat") functions and their `L^p` norms.
//!
//! The one-dimensional building block is the tent
//! `Λ_{M,σ}(t) = 0` for `t ≤ σ − 1/M`, else `1 − M·|t − σ|`,
//! which is continuous, peaks at 1 in `t = σ`, and vanishes outside
//! `(σ − 1/M, σ + 1/M)`. An `s`-active-coordinate spike in dimension `d`
//! sums tents over the first `s` coordinates and shifts so that only points
//! close to the center in *every* active coordinate survive the final ReLU:
//!
//! `Δ(x) = Σ_{i≤s} Λ_{M,y_i}(x_i) − (s−1)`,  `ϑ(x) = ρ(Δ(x))`.
//!
//! `ϑ` has values in `[0,1]`, peaks at 1 in `x = y`, is supported in the box
//! `y + (1/M)·[−1,1]^s × R^{d−s}`, and its `L^p([0,1]^d)` norm is pinned by
//! the closed-form sandwich of [`hat_lp_bounds`]. The quadrature oracle
//! [`hat_lp_norm_numeric`] recomputes the same norm with no shared code, so
//! the two can check each other.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exponent::Exponent;
use crate::nn::relu;
use crate::pairwise_sum;

/// Spike orientation: the sign `ν` multiplying the hat.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sign {
    #[serde(rename = "+1")]
    Pos,
    #[serde(rename = "-1")]
    Neg,
}

impl Sign {
    pub fn as_f64(self) -> f64 {
        match self {
            Sign::Pos => 1.0,
            Sign::Neg => -1.0,
        }
    }

    pub fn flip(self) -> Sign {
        match self {
            Sign::Pos => Sign::Neg,
            Sign::Neg => Sign::Pos,
        }
    }
}

/// One-dimensional tent: 0 for `t ≤ σ − 1/M`, else `1 − M·|t − σ|`.
///
/// Note the asymmetric branch: to the right of the support the formula
/// `1 − M|t−σ|` goes negative instead of clamping to 0. That is exactly the
/// shape a ReLU difference produces, see [`hat_eval`]'s splitting identity.
pub fn lambda_eval(m: f64, sigma: f64, t: f64) -> f64 {
    if t <= sigma - 1.0 / m {
        0.0
    } else {
        1.0 - m * (t - sigma).abs()
    }
}

/// A scaled spike `x ↦ ν · amplitude · ρ(Δ(x))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HatSpec {
    /// Ambient dimension.
    pub d: usize,
    /// Number of active coordinates (the first `s` of `d`).
    pub s: usize,
    /// Steepness `M ≥ 1`; the support has half-width `1/M` per active axis.
    pub steepness: f64,
    /// Center `y ∈ [0,1]^d`.
    pub center: Vec<f64>,
    /// Orientation `ν ∈ {−1, +1}`.
    pub sign: Sign,
    /// Positive scale factor in front of the raw hat.
    pub amplitude: f64,
}

impl HatSpec {
    pub fn new(
        d: usize,
        s: usize,
        steepness: f64,
        center: Vec<f64>,
        sign: Sign,
        amplitude: f64,
    ) -> Result<Self> {
        if s == 0 || s > d {
            return Err(Error::Precondition(format!(
                "active coordinates must satisfy 1 <= s <= d, got s={s}, d={d}"
            )));
        }
        if !(steepness >= 1.0) || !steepness.is_finite() {
            return Err(Error::Precondition(format!(
                "steepness must satisfy M >= 1, got {steepness}"
            )));
        }
        if center.len() != d {
            return Err(Error::DimensionMismatch(format!(
                "center has {} coordinates, expected {d}",
                center.len()
            )));
        }
        if center.iter().any(|&y| !(0.0..=1.0).contains(&y)) {
            return Err(Error::Precondition(format!(
                "center must lie in [0,1]^d, got {center:?}"
            )));
        }
        if !(amplitude > 0.0) || !amplitude.is_finite() {
            return Err(Error::Precondition(format!(
                "amplitude must be positive, got {amplitude}"
            )));
        }
        Ok(HatSpec {
            d,
            s,
            steepness,
            center,
            sign,
            amplitude,
        })
    }

    /// Unit-amplitude, positively oriented spike.
    pub fn unit(d: usize, s: usize, steepness: f64, center: Vec<f64>) -> Result<Self> {
        HatSpec::new(d, s, steepness, center, Sign::Pos, 1.0)
    }

    /// Per-active-axis support interval `[y_i − 1/M, y_i + 1/M]` (closed;
    /// the hat vanishes on the boundary). Inactive axes are unconstrained.
    pub fn support_box(&self) -> Vec<(f64, f64)> {
        let h = 1.0 / self.steepness;
        self.center[..self.s]
            .iter()
            .map(|&y| (y - h, y + h))
            .collect()
    }
}

/// `Δ(x) = Σ_{i≤s} Λ_{M,y_i}(x_i) − (s−1)`, the pre-ReLU profile.
pub fn delta_eval(spec: &HatSpec, x: &[f64]) -> Result<f64> {
    if x.len() != spec.d {
        return Err(Error::DimensionMismatch(format!(
            "point has {} coordinates, expected {}",
            x.len(),
            spec.d
        )));
    }
    let m = spec.steepness;
    let mut acc = -((spec.s - 1) as f64);
    for i in 0..spec.s {
        acc += lambda_eval(m, spec.center[i], x[i]);
    }
    Ok(acc)
}

/// The scaled spike `ν · amplitude · ρ(Δ(x))`.
pub fn hat_eval(spec: &HatSpec, x: &[f64]) -> Result<f64> {
    let delta = delta_eval(spec, x)?;
    Ok(spec.sign.as_f64() * (spec.amplitude * relu(delta)))
}

/// Closed-form sandwich for the `L^p([0,1]^d)` norm of the *raw* hat
/// (`amplitude = 1`, any orientation), valid for all centers in `[0,1]^d`:
///
/// `1/2 · (4s)^{−s/p} · M^{−s/p} ≤ ‖ϑ‖_{L^p} ≤ 2^{s/p} · M^{−s/p}`,
///
/// degenerating to `(1/2, 1)` at `p = ∞`. Accepts any `p ∈ (0, ∞]`.
pub fn hat_lp_bounds(s: usize, steepness: f64, p: Exponent) -> Result<(f64, f64)> {
    if s == 0 {
        return Err(Error::Precondition("need at least one active coordinate".into()));
    }
    if !(steepness >= 1.0) {
        return Err(Error::Precondition(format!(
            "steepness must satisfy M >= 1, got {steepness}"
        )));
    }
    match p {
        Exponent::Infinity => Ok((0.5, 1.0)),
        Exponent::Finite(p) if p > 0.0 => {
            let sp = s as f64 / p;
            let lower = 0.5 * (4.0 * s as f64).powf(-sp) * steepness.powf(-sp);
            let upper = 2f64.powf(sp) * steepness.powf(-sp);
            Ok((lower, upper))
        }
        Exponent::Finite(p) => Err(Error::InvalidParameter(format!(
            "norm exponent must be positive, got {p}"
        ))),
    }
}

/// Quadrature oracle for `‖ϑ‖_{L^p([0,1]^d)}` of the raw hat (`amplitude`
/// and `sign` are ignored; scale the result by `amplitude` for the scaled
/// spike).
///
/// The integrand vanishes outside the support box and does not depend on the
/// inactive coordinates, so the integral reduces to the `s`-dimensional box
/// `∏_i [y_i − 1/M, y_i + 1/M] ∩ [0,1]`. A midpoint rule with `resolution`
/// cells per active axis evaluates it; `resolution ≥ 8·M·s` is required so
/// the inner plateau (half-width `1/(2Ms)`) spans several cells. For
/// `p = ∞` the scan returns the maximum over the midpoints and the center
/// itself, which is exact because the peak value is 1 at `y ∈ [0,1]^d`.
///
/// Row partials are computed in parallel but collected and summed in index
/// order (pairwise), so the result is independent of thread count.
pub fn hat_lp_norm_numeric(spec: &HatSpec, p: Exponent, resolution: usize) -> Result<f64> {
    use rayon::prelude::*;

    let m = spec.steepness;
    let s = spec.s;
    if (resolution as f64) < 8.0 * m * s as f64 {
        return Err(Error::Precondition(format!(
            "resolution {resolution} < 8*M*s = {}",
            8.0 * m * s as f64
        )));
    }

    // Clip the support box to the unit cube, per active axis.
    let mut lows = Vec::with_capacity(s);
    let mut widths = Vec::with_capacity(s);
    let mut cell = 1.0;
    for i in 0..s {
        let lo = (spec.center[i] - 1.0 / m).max(0.0);
        let hi = (spec.center[i] + 1.0 / m).min(1.0);
        if hi <= lo {
            return Ok(0.0); // unreachable for valid centers, kept as a guard
        }
        lows.push(lo);
        widths.push(hi - lo);
        cell *= (hi - lo) / resolution as f64;
    }

    let raw = |x_active: &[f64]| -> f64 {
        let mut acc = -((s - 1) as f64);
        for i in 0..s {
            acc += lambda_eval(m, spec.center[i], x_active[i]);
        }
        relu(acc)
    };

    if p.is_infinite() {
        // Max over midpoints plus the exact peak.
        let center_active = &spec.center[..s];
        let mut best = raw(center_active);
        let rows: Vec<f64> = (0..resolution)
            .into_par_iter()
            .map(|r0| {
                let mut x = vec![0.0; s];
                x[0] = lows[0] + (r0 as f64 + 0.5) * widths[0] / resolution as f64;
                let mut row_best: f64 = 0.0;
                let mut idx = vec![0usize; s.saturating_sub(1)];
                loop {
                    for (j, &i) in idx.iter().enumerate() {
                        x[j + 1] =
                            lows[j + 1] + (i as f64 + 0.5) * widths[j + 1] / resolution as f64;
                    }
                    row_best = row_best.max(raw(&x));
                    // odometer over the remaining s-1 axes
                    let mut k = idx.len();
                    loop {
                        if k == 0 {
                            return row_best;
                        }
                        k -= 1;
                        idx[k] += 1;
                        if idx[k] < resolution {
                            break;
                        }
                        idx[k] = 0;
                    }
                }
            })
            .collect();
        for r in rows {
            best = best.max(r);
        }
        return Ok(best);
    }

    let pf = match p {
        Exponent::Finite(v) if v > 0.0 => v,
        _ => {
            return Err(Error::InvalidParameter(format!(
                "norm exponent must be positive, got {p}"
            )))
        }
    };

    // Midpoint rule, one parallel task per first-axis row.
    let rows: Vec<f64> = (0..resolution)
        .into_par_iter()
        .map(|r0| {
            let mut x = vec![0.0; s];
            x[0] = lows[0] + (r0 as f64 + 0.5) * widths[0] / resolution as f64;
            let mut acc = 0.0;
            let mut idx = vec![0usize; s.saturating_sub(1)];
            loop {
                for (j, &i) in idx.iter().enumerate() {
                    x[j + 1] = lows[j + 1] + (i as f64 + 0.5) * widths[j + 1] / resolution as f64;
                }
                let v = raw(&x);
                if v > 0.0 {
                    acc += v.powf(pf);
                }
                let mut k = idx.len();
                loop {
                    if k == 0 {
                        return acc;
                    }
                    k -= 1;
                    idx[k] += 1;
                    if idx[k] < resolution {
                        break;
                    }
                    idx[k] = 0;
                }
            }
        })
        .collect();

    let integral = pairwise_sum(&rows) * cell;
    Ok(integral.powf(1.0 / pf))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn lambda_frozen_values() {
        // M = 4, sigma = 1.5
        assert_eq!(lambda_eval(4.0, 1.5, 1.5), 1.0); // peak
        assert_eq!(lambda_eval(4.0, 1.5, 1.25), 0.0); // left support edge
        assert_eq!(lambda_eval(4.0, 1.5, 1.0), 0.0); // far left
        assert_eq!(lambda_eval(4.0, 1.5, 2.0), -1.0); // right of support: negative
        assert_eq!(lambda_eval(4.0, 1.5, 1.75), 0.0); // right support edge
        assert_eq!(lambda_eval(4.0, 1.5, 1.625), 0.5);
    }

    #[test]
    fn relu_splitting_identity() {
        // (1/2)ρ(t − y + 1/M) − ρ(t − y) = Λ_{M,y}(t) / (2M) for all t... up
        // to the sign convention: the identity holds with Λ as implemented
        // (negative tail to the right). 10^4 random triples.
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..10_000 {
            let m = rng.gen_range(1.0..32.0);
            let y = rng.gen_range(-1.0..2.0);
            let t = rng.gen_range(-2.0..3.0);
            let lhs = 0.5 * relu(t - y + 1.0 / m) - relu(t - y);
            let rhs = lambda_eval(m, y, t) / (2.0 * m);
            assert!(
                (lhs - rhs).abs() <= 1e-12,
                "m={m}, y={y}, t={t}: lhs={lhs}, rhs={rhs}"
            );
        }
    }

    #[test]
    fn delta_frozen_value() {
        let spec = HatSpec::unit(2, 2, 4.0, vec![0.5, 0.5]).unwrap();
        // Λ(0.5) = 1, Λ(0.75) = 0, Δ = 1 + 0 − 1 = 0.
        assert_eq!(delta_eval(&spec, &[0.5, 0.75]).unwrap(), 0.0);
        assert_eq!(hat_eval(&spec, &[0.5, 0.75]).unwrap(), 0.0);
        assert_eq!(hat_eval(&spec, &[0.5, 0.5]).unwrap(), 1.0);
    }

    #[test]
    fn hat_respects_support_box() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..200 {
            let d = rng.gen_range(1..=4);
            let s = rng.gen_range(1..=d);
            let m = rng.gen_range(1.0f64..16.0);
            let center: Vec<f64> = (0..d).map(|_| rng.gen()).collect();
            let spec = HatSpec::unit(d, s, m, center.clone()).unwrap();
            for _ in 0..50 {
                let x: Vec<f64> = (0..d).map(|_| rng.gen_range(-0.5..1.5)).collect();
                let v = hat_eval(&spec, &x).unwrap();
                assert!((0.0..=1.0).contains(&v));
                if v != 0.0 {
                    for i in 0..s {
                        assert!(
                            (x[i] - center[i]).abs() < 1.0 / m,
                            "nonzero value outside support box"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn plateau_points_stay_above_half() {
        // x inside y + 1/(2Ms)·[−1,1]^s gives ϑ ≥ 1/2.
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..100 {
            let d = rng.gen_range(1..=3);
            let s = rng.gen_range(1..=d);
            let m = rng.gen_range(1.0f64..8.0);
            let center: Vec<f64> = (0..d).map(|_| rng.gen_range(0.3..0.7)).collect();
            let spec = HatSpec::unit(d, s, m, center.clone()).unwrap();
            let r = 1.0 / (2.0 * m * s as f64);
            for _ in 0..20 {
                let mut x = center.clone();
                for xi in x.iter_mut().take(s) {
                    *xi += rng.gen_range(-r..r);
                }
                let v = hat_eval(&spec, &x).unwrap();
                assert!(v >= 0.5 - 1e-12, "plateau value {v} below 1/2");
            }
        }
    }

    #[test]
    fn lp_bounds_frozen_values() {
        assert_eq!(
            hat_lp_bounds(1, 8.0, Exponent::Infinity).unwrap(),
            (0.5, 1.0)
        );
        let (lo, hi) = hat_lp_bounds(1, 8.0, Exponent::Finite(1.0)).unwrap();
        assert!((lo - 1.0 / 64.0).abs() < 1e-15);
        assert!((hi - 0.25).abs() < 1e-15);
        let (lo, hi) = hat_lp_bounds(2, 8.0, Exponent::Finite(2.0)).unwrap();
        assert!((lo - 0.0078125).abs() < 1e-15);
        assert!((hi - 0.25).abs() < 1e-15);
    }

    #[test]
    fn numeric_norm_frozen_tent_area() {
        // d = s = 1, M = 2, y = 0.5: support is all of [0,1] and the L1 norm
        // is the tent area 1/M = 0.5.
        let spec = HatSpec::unit(1, 1, 2.0, vec![0.5]).unwrap();
        let v = hat_lp_norm_numeric(&spec, Exponent::Finite(1.0), 64).unwrap();
        assert!((v - 0.5).abs() < 1e-3, "got {v}");
        // Midpoint rule is exact here (kinks only at cell boundaries).
        assert!((v - 0.5).abs() < 1e-12, "got {v}");
    }

    #[test]
    fn numeric_norm_sup_is_one_for_interior_center() {
        let spec = HatSpec::unit(2, 2, 8.0, vec![0.4, 0.6]).unwrap();
        let v = hat_lp_norm_numeric(&spec, Exponent::Infinity, 160).unwrap();
        assert!((v - 1.0).abs() < 1e-9, "got {v}");
    }

    #[test]
    fn numeric_norm_lies_in_closed_form_sandwich() {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        for trial in 0..50 {
            let d = rng.gen_range(1..=3);
            let s = rng.gen_range(1..=d);
            let m = rng.gen_range(1..=8) as f64;
            let center: Vec<f64> = (0..d).map(|_| rng.gen()).collect();
            let spec = HatSpec::unit(d, s, m, center).unwrap();
            let resolution = (8.0 * m * s as f64).ceil() as usize + 8;
            for p in [Exponent::Finite(1.0), Exponent::Finite(2.0), Exponent::Infinity] {
                let v = hat_lp_norm_numeric(&spec, p, resolution).unwrap();
                let (lo, hi) = hat_lp_bounds(s, m, p).unwrap();
                assert!(
                    v >= lo * (1.0 - 1e-6) && v <= hi * (1.0 + 1e-6),
                    "trial {trial}: p={p}, v={v} outside [{lo}, {hi}]"
                );
            }
        }
    }

    #[test]
    fn numeric_norm_rejects_coarse_resolution() {
        let spec = HatSpec::unit(1, 1, 8.0, vec![0.5]).unwrap();
        assert!(matches!(
            hat_lp_norm_numeric(&spec, Exponent::Finite(1.0), 63),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn spec_validation() {
        assert!(HatSpec::unit(2, 3, 4.0, vec![0.5, 0.5]).is_err()); // s > d
        assert!(HatSpec::unit(2, 1, 0.5, vec![0.5, 0.5]).is_err()); // M < 1
        assert!(HatSpec::unit(2, 1, 4.0, vec![0.5, 1.5]).is_err()); // y outside
        assert!(HatSpec::new(1, 1, 4.0, vec![0.5], Sign::Pos, 0.0).is_err()); // amplitude
    }
}

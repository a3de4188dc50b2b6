//! Closed-form constants and sample-complexity bounds.
//!
//! The central quantity is the amplitude constant `Ω(c, L, width, s, q)`:
//! the guaranteed peak height of a spike the class can realize (up to the
//! `1/(Ms)` geometry factor handled elsewhere). It feeds the lower bound
//!
//! `err(m) ≥ c₀ · Ω / (64s)^{1+s/p} · m^{−1/p−1/s}`,
//!
//! whose `p = ∞, s = d` specialization inverts to the exponential sample
//! count of [`min_samples_for_uniform_accuracy`]. The upper-bound side
//! ([`lipschitz_bound`], [`upper_bound_error`]) shows the matching rate for
//! piecewise-constant grid recovery. [`spectral_norm`] is an independent
//! power-iteration oracle used to cross-check [`operator_norm_bound`].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exponent::Exponent;
use crate::nn::NetworkClass;

/// Inputs for a bound computation: a class, a sample budget, an error
/// exponent `p`, the number of active spike coordinates `s`, a target
/// accuracy, and the outer constant `c₀` of the lower bound.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoundQuery {
    pub cls: NetworkClass,
    pub m: u64,
    pub p: Exponent,
    pub s: usize,
    pub epsilon: f64,
    #[serde(default = "default_c0")]
    pub c0: f64,
}

fn default_c0() -> f64 {
    1.0
}

/// Everything the `bounds` computation produces, JSON-serializable with
/// round-trip-safe floats. `min_samples_log2` is reported in log2 because
/// the counts overflow `f64` for interesting parameters; it is present only
/// when the query matches the uniform-accuracy regime (`p = ∞`, `s = d`,
/// hidden width `3d`) and may be negative when the bound is vacuous.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoundReport {
    pub query: BoundQuery,
    pub omega: f64,
    pub lower_bound_error: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub min_samples_log2: Option<f64>,
    pub upper_bound_error: f64,
    pub lipschitz_bound: f64,
}

/// The amplitude constant `Ω`:
///
/// - `q ≤ 2`:  `c^L · s^{1−2/q} / (4·3^{2/q})`
/// - `q ≥ 2`:  `c^L · (width^{1−2/q})^{L−1} / 24`
/// - `q = 2`:  both branches apply; the larger one is returned.
///
/// `width` is the hidden width (the constructions use `B`, the headline
/// results `3d`).
pub fn omega_constant(c: f64, depth: usize, width: usize, s: usize, q: Exponent) -> Result<f64> {
    if !(c > 0.0) || depth < 3 || width < 3 || s == 0 {
        return Err(Error::Precondition(format!(
            "omega_constant requires c > 0, L >= 3, width >= 3, s >= 1; got c={c}, L={depth}, width={width}, s={s}"
        )));
    }
    if !q.ge(1.0) {
        return Err(Error::InvalidParameter(format!("q must be >= 1, got {q}")));
    }
    let lf = depth as f64;
    let small = |qinv: f64| c.powf(lf) * (s as f64).powf(1.0 - 2.0 * qinv) / (4.0 * 3f64.powf(2.0 * qinv));
    let big = |qinv: f64| {
        c.powf(lf) * (width as f64).powf((1.0 - 2.0 * qinv) * (lf - 1.0)) / 24.0
    };
    Ok(match q {
        Exponent::Finite(v) if v < 2.0 => small(1.0 / v),
        Exponent::Finite(v) if v == 2.0 => small(0.5).max(big(0.5)),
        _ => big(q.recip()),
    })
}

/// Minimax lower bound `c₀ · Ω / (64s)^{1+s/p} · m^{−1/p−1/s}` on the error
/// of any deterministic method with `m` samples, measured in `L^p`.
pub fn lower_bound_error(query: &BoundQuery) -> Result<f64> {
    let cls = &query.cls;
    let d = cls.input_dim();
    let b = hidden_width(cls)?;
    let s = query.s;
    if s == 0 || 3 * s > b || s > d {
        return Err(Error::Precondition(format!(
            "lower bound requires 1 <= s <= min(width/3, d); got s={s}, width={b}, d={d}"
        )));
    }
    if query.m == 0 {
        return Err(Error::Precondition("need at least one sample".into()));
    }
    let omega = omega_constant(cls.c, cls.depth(), b, s, cls.q)?;
    let sf = s as f64;
    let mf = query.m as f64;
    let pinv = query.p.recip();
    Ok(query.c0 * omega * (64.0 * sf).powf(-(1.0 + sf * pinv)) * mf.powf(-pinv - 1.0 / sf))
}

/// log2 of the sample count needed for uniform accuracy `ε`:
/// `d·log2(Ω/(64d)) + d·log2(1/ε)`, from inverting the lower bound at
/// `p = ∞`, `s = d`, hidden width `3d`. Returned in log2 since the count
/// itself overflows `f64` for realistic depths; negative values mean the
/// bound is vacuous and are returned as-is.
pub fn min_samples_for_uniform_accuracy(query: &BoundQuery) -> Result<f64> {
    let cls = &query.cls;
    let d = cls.input_dim();
    let b = hidden_width(cls)?;
    if !query.p.is_infinite() {
        return Err(Error::Precondition(format!(
            "uniform-accuracy inversion requires p = inf, got p = {}",
            query.p
        )));
    }
    if query.s != d {
        return Err(Error::Precondition(format!(
            "uniform-accuracy inversion requires s = d, got s = {}, d = {d}",
            query.s
        )));
    }
    if b != 3 * d {
        return Err(Error::Precondition(format!(
            "uniform-accuracy inversion requires hidden width 3d, got {b} != {}",
            3 * d
        )));
    }
    if !(query.epsilon > 0.0) {
        return Err(Error::Precondition(format!(
            "accuracy must be positive, got {}",
            query.epsilon
        )));
    }
    let omega = omega_constant(cls.c, cls.depth(), b, d, cls.q)?;
    let df = d as f64;
    Ok(df * (omega / (64.0 * df)).log2() + df * (1.0 / query.epsilon).log2())
}

/// `ℓ²→ℓ²` operator-norm bound from the entrywise norm of an `n×m` matrix:
/// the entrywise norm itself for `q ≤ 2`, inflated by `(√(n·m))^{1−2/q}`
/// for `q ≥ 2` (both branches agree at `q = 2`).
pub fn operator_norm_bound(
    n_rows: usize,
    n_cols: usize,
    q: Exponent,
    entrywise_norm: f64,
) -> Result<f64> {
    if n_rows == 0 || n_cols == 0 {
        return Err(Error::DimensionMismatch("empty matrix".into()));
    }
    if !(entrywise_norm >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "norm must be nonnegative, got {entrywise_norm}"
        )));
    }
    if !q.ge(1.0) {
        return Err(Error::InvalidParameter(format!("q must be >= 1, got {q}")));
    }
    if q.le(2.0) {
        Ok(entrywise_norm)
    } else {
        let nm = ((n_rows * n_cols) as f64).sqrt();
        Ok(nm.powf(1.0 - 2.0 * q.recip()) * entrywise_norm)
    }
}

/// Lipschitz bound for the class on its input cube: `c^L` for `q ≤ 2` and
/// `c^L · (√(N₀·N_L)·N₁⋯N_{L−1})^{1−2/q}` for `q ≥ 2`.
pub fn lipschitz_bound(cls: &NetworkClass) -> f64 {
    let lf = cls.depth() as f64;
    let base = cls.c.powf(lf);
    if cls.q.le(2.0) {
        base
    } else {
        let arch = &cls.arch;
        let mut widths = ((arch[0] * arch[arch.len() - 1]) as f64).sqrt();
        for &w in &arch[1..arch.len() - 1] {
            widths *= w as f64;
        }
        base * widths.powf(1.0 - 2.0 * cls.q.recip())
    }
}

/// Guaranteed sup-error of grid recovery with `m` samples on `[0,1]^d`:
/// `2√d · c^L · m^{−1/d}`, inflated by `(√d·N₁⋯N_{L−1})^{1−2/q}` for
/// `q ≥ 2`. Requires a scalar-output class.
pub fn upper_bound_error(cls: &NetworkClass, m: u64) -> Result<f64> {
    if cls.arch[cls.arch.len() - 1] != 1 {
        return Err(Error::Precondition(
            "recovery bound requires output width 1".into(),
        ));
    }
    if m == 0 {
        return Err(Error::Precondition("need at least one sample".into()));
    }
    let d = cls.input_dim() as f64;
    let lf = cls.depth() as f64;
    let rate = 2.0 * d.sqrt() * cls.c.powf(lf) * (m as f64).powf(-1.0 / d);
    if cls.q.le(2.0) {
        Ok(rate)
    } else {
        let mut widths = d.sqrt();
        for &w in &cls.arch[1..cls.arch.len() - 1] {
            widths *= w as f64;
        }
        Ok(rate * widths.powf(1.0 - 2.0 * cls.q.recip()))
    }
}

/// Full report for one query.
pub fn compute_report(query: &BoundQuery) -> Result<BoundReport> {
    let cls = &query.cls;
    let b = hidden_width(cls)?;
    let omega = omega_constant(cls.c, cls.depth(), b, query.s, cls.q)?;
    let lower = lower_bound_error(query)?;
    let min_samples_log2 = min_samples_for_uniform_accuracy(query).ok();
    let upper = upper_bound_error(cls, query.m)?;
    let lip = lipschitz_bound(cls);
    Ok(BoundReport {
        query: query.clone(),
        omega,
        lower_bound_error: lower,
        min_samples_log2,
        upper_bound_error: upper,
        lipschitz_bound: lip,
    })
}

/// Hidden width of a constant-width class (the only shape the constructions
/// and bounds support).
pub fn hidden_width(cls: &NetworkClass) -> Result<usize> {
    let arch = &cls.arch;
    if arch.len() < 3 {
        return Err(Error::Precondition(format!(
            "class has no hidden layer: {arch:?}"
        )));
    }
    let b = arch[1];
    if arch[1..arch.len() - 1].iter().any(|&w| w != b) {
        return Err(Error::Precondition(format!(
            "class must have constant hidden width, got {arch:?}"
        )));
    }
    Ok(b)
}

/// Largest singular value of a row-major `rows×cols` matrix by seeded power
/// iteration on `WᵀW`. Converges from below, so it can serve as an
/// independent oracle when checking that an operator-norm bound dominates.
pub fn spectral_norm(matrix: &[f64], rows: usize, cols: usize, seed: u64) -> Result<f64> {
    use rand::{Rng, SeedableRng};
    if matrix.len() != rows * cols || rows == 0 || cols == 0 {
        return Err(Error::DimensionMismatch(format!(
            "matrix has {} entries, expected {rows}x{cols}",
            matrix.len()
        )));
    }
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut best: f64 = 0.0;
    // A few random restarts guard against a start vector orthogonal to the
    // top singular direction.
    for _ in 0..3 {
        let mut v: Vec<f64> = (0..cols).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let norm = |u: &[f64]| u.iter().map(|x| x * x).sum::<f64>().sqrt();
        let n0 = norm(&v);
        if n0 == 0.0 {
            continue;
        }
        for x in &mut v {
            *x /= n0;
        }
        let mut sigma = 0.0;
        for _ in 0..500 {
            // w = W v
            let mut w = vec![0.0; rows];
            for r in 0..rows {
                let row = &matrix[r * cols..(r + 1) * cols];
                w[r] = row.iter().zip(&v).map(|(a, b)| a * b).sum();
            }
            let s = norm(&w);
            if s == 0.0 {
                sigma = 0.0;
                break;
            }
            // v = Wᵀ w / ‖Wᵀ w‖
            let mut u = vec![0.0; cols];
            for r in 0..rows {
                let row = &matrix[r * cols..(r + 1) * cols];
                for (uc, a) in u.iter_mut().zip(row) {
                    *uc += a * w[r];
                }
            }
            let un = norm(&u);
            if un == 0.0 {
                sigma = s;
                break;
            }
            for x in &mut u {
                *x /= un;
            }
            v = u;
            if (s - sigma).abs() <= 1e-12 * s.max(1.0) {
                sigma = s;
                break;
            }
            sigma = s;
        }
        best = best.max(sigma);
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn class(d: usize, l: usize, b: usize, c: f64, q: Exponent) -> NetworkClass {
        let mut arch = vec![d];
        arch.extend(std::iter::repeat(b).take(l - 1));
        arch.push(1);
        NetworkClass::new(arch, c, q).unwrap()
    }

    #[test]
    fn omega_frozen_values() {
        // q=∞, c=1, L=3, B=9: (1/24)·(9¹)² = 3.375
        let v = omega_constant(1.0, 3, 9, 1, Exponent::Infinity).unwrap();
        assert!((v - 3.375).abs() < 1e-15);
        // q=1, c=1, L=3, s=4: (1/36)·4^{-1} = 1/144
        let v = omega_constant(1.0, 3, 12, 4, Exponent::Finite(1.0)).unwrap();
        assert!((v - 1.0 / 144.0).abs() < 1e-17);
        // q=2, c=1, L=3, s=1, B=3: max(1/12, 1/24) = 1/12
        let v = omega_constant(1.0, 3, 3, 1, Exponent::Finite(2.0)).unwrap();
        assert!((v - 1.0 / 12.0).abs() < 1e-16);
    }

    #[test]
    fn lower_bound_frozen_value() {
        // d=1, s=1, p=∞, q=∞, c=1, L=3, B=3, m=100:
        // Ω = 9/24 = 0.375; bound = 0.375/64/100 = 5.859375e-5.
        let q = BoundQuery {
            cls: class(1, 3, 3, 1.0, Exponent::Infinity),
            m: 100,
            p: Exponent::Infinity,
            s: 1,
            epsilon: 0.5,
            c0: 1.0,
        };
        let v = lower_bound_error(&q).unwrap();
        assert!((v - 5.859375e-5).abs() < 1e-18, "got {v}");
    }

    #[test]
    fn lower_bound_monotone_in_samples() {
        let mk = |m| BoundQuery {
            cls: class(2, 4, 6, 1.5, Exponent::Infinity),
            m,
            p: Exponent::Finite(2.0),
            s: 2,
            epsilon: 0.5,
            c0: 1.0,
        };
        let mut prev = f64::INFINITY;
        for m in [1u64, 10, 100, 1000] {
            let v = lower_bound_error(&mk(m)).unwrap();
            assert!(v < prev, "not strictly decreasing at m={m}");
            prev = v;
        }
    }

    #[test]
    fn headline_sample_count_identity() {
        // d=15, c=2, L=7, q=∞, ε=2^{-10}:
        // log2(m) = 15 + 105 + 75·log2(45).
        let q = BoundQuery {
            cls: class(15, 7, 45, 2.0, Exponent::Infinity),
            m: 1,
            p: Exponent::Infinity,
            s: 15,
            epsilon: 1.0 / 1024.0,
            c0: 1.0,
        };
        let got = min_samples_for_uniform_accuracy(&q).unwrap();
        let want = 15.0 + 105.0 + 75.0 * 45f64.log2();
        assert!(
            (got - want).abs() <= 1e-9 * want.abs(),
            "got {got}, want {want}"
        );
    }

    #[test]
    fn vacuous_sample_count_is_negative_and_returned() {
        // Small c makes Ω/(64d) < 1 and, with loose ε, the bound vacuous.
        let q = BoundQuery {
            cls: class(1, 3, 3, 1.0, Exponent::Infinity),
            m: 1,
            p: Exponent::Infinity,
            s: 1,
            epsilon: 0.5,
            c0: 1.0,
        };
        let got = min_samples_for_uniform_accuracy(&q).unwrap();
        assert!(got < 0.0, "expected vacuous bound, got {got}");
    }

    #[test]
    fn operator_norm_bound_branches() {
        // q ≤ 2 passes the norm through; q = ∞ inflates by √(nm).
        assert_eq!(
            operator_norm_bound(3, 5, Exponent::Finite(1.5), 2.0).unwrap(),
            2.0
        );
        let v = operator_norm_bound(4, 9, Exponent::Infinity, 2.0).unwrap();
        assert!((v - 12.0).abs() < 1e-12); // √36 · 2
        let a = operator_norm_bound(4, 9, Exponent::Finite(2.0), 2.0).unwrap();
        assert_eq!(a, 2.0); // branches agree at q = 2
    }

    #[test]
    fn operator_norm_bound_dominates_power_iteration() {
        use crate::nn::entrywise_norm;
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(31);
        for &(rows, cols) in &[(2usize, 2usize), (3, 7), (8, 8), (16, 5), (16, 16)] {
            for q in [
                Exponent::Finite(1.0),
                Exponent::Finite(1.5),
                Exponent::Finite(2.0),
                Exponent::Finite(4.0),
                Exponent::Infinity,
            ] {
                for trial in 0..100 {
                    let m: Vec<f64> = (0..rows * cols)
                        .map(|_| rng.gen_range(-2.0..2.0))
                        .collect();
                    let bound =
                        operator_norm_bound(rows, cols, q, entrywise_norm(&m, q)).unwrap();
                    let sigma = spectral_norm(&m, rows, cols, trial).unwrap();
                    assert!(
                        bound >= sigma - 1e-9 * sigma.max(1.0),
                        "{rows}x{cols}, q={q}, trial {trial}: bound {bound} < σ {sigma}"
                    );
                }
            }
        }
    }

    #[test]
    fn spectral_norm_of_diagonal() {
        let m = [3.0, 0.0, 0.0, -5.0];
        let v = spectral_norm(&m, 2, 2, 1).unwrap();
        assert!((v - 5.0).abs() < 1e-9, "got {v}");
    }

    #[test]
    fn lipschitz_bound_frozen_values() {
        // (4, 8, 1), q=∞, c=1: (√4·8)^1 = 16.
        let cls = NetworkClass::new(vec![4, 8, 1], 1.0, Exponent::Infinity).unwrap();
        assert_eq!(lipschitz_bound(&cls), 16.0);
        // q ≤ 2: plain c^L.
        let cls = NetworkClass::new(vec![4, 8, 1], 2.0, Exponent::Finite(2.0)).unwrap();
        assert_eq!(lipschitz_bound(&cls), 4.0);
    }

    #[test]
    fn upper_bound_frozen_values() {
        // d=1, q=2, c=1, L=2, m=4: 2·1·(1/4) = 0.5.
        let cls = NetworkClass::new(vec![1, 8, 1], 1.0, Exponent::Finite(2.0)).unwrap();
        assert_eq!(upper_bound_error(&cls, 4).unwrap(), 0.5);
        // q=∞, d=1, N1=8, c=1, L=2, m=1: 2·(1·8)·1 = 16.
        let cls = NetworkClass::new(vec![1, 8, 1], 1.0, Exponent::Infinity).unwrap();
        assert_eq!(upper_bound_error(&cls, 1).unwrap(), 16.0);
    }

    #[test]
    fn lipschitz_lower_estimate_respects_bound() {
        use crate::nn::Mlp;
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(40);
        for trial in 0..20 {
            let cls = class(2, 3, 5, 1.0, Exponent::Finite(2.0));
            let mut net = Mlp::zeros(cls.arch.clone()).unwrap();
            // fill with entries small enough to stay in class
            loop {
                for w in net.weights_mut() {
                    for v in w.iter_mut() {
                        *v = rng.gen_range(-0.3..0.3);
                    }
                }
                for b in net.biases_mut() {
                    for v in b.iter_mut() {
                        *v = rng.gen_range(-0.3..0.3);
                    }
                }
                if net.in_class(&cls, 0.0) {
                    break;
                }
            }
            let est = net.lipschitz_lower_estimate(200, trial as u64).unwrap();
            assert!(
                est <= lipschitz_bound(&cls) + 1e-12,
                "estimate {est} exceeds bound {}",
                lipschitz_bound(&cls)
            );
        }
    }

    #[test]
    fn report_serializes_round_trip() {
        let q = BoundQuery {
            cls: class(15, 7, 45, 2.0, Exponent::Infinity),
            m: 1024,
            p: Exponent::Infinity,
            s: 15,
            epsilon: 1.0 / 1024.0,
            c0: 1.0,
        };
        let report = compute_report(&q).unwrap();
        let text = serde_json::to_string(&report).unwrap();
        let back: BoundReport = serde_json::from_str(&text).unwrap();
        assert_eq!(back.omega, report.omega);
        assert_eq!(back.min_samples_log2, report.min_samples_log2);
    }
}

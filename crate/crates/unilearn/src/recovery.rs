//! Deterministic sampling methods behind a recording oracle.
//!
//! A [`DeterministicMethod`] may choose each query point from the values it
//! has already seen (full adaptivity), but nothing else: no clocks, no
//! hidden randomness. Every run goes through a [`QueryOracle`] that records
//! the transcript and enforces the query budget, so the adversary in
//! [`crate::fooling`] can replay a run against a different target and check
//! that the method cannot tell the difference.
//!
//! [`GridRecovery`] is the matching upper-bound method: it samples the
//! lattice `{0, 1/K, …, (K−1)/K}^d` with `K = ⌊m^{1/d}⌋` and predicts the
//! sampled value on each half-open lattice cell (closing the top faces so
//! the predictor is total on `[0,1]^d`). For `Lip`-Lipschitz targets its
//! sup-error is at most `Lip · 2√d · m^{−1/d}`.

use std::sync::Arc;

use crate::error::{Error, Result};

/// A total, deterministically evaluable predictor on `[0,1]^d`.
#[derive(Clone)]
pub struct Predictor {
    dim: usize,
    f: Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>,
}

impl Predictor {
    pub fn new(dim: usize, f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        Predictor { dim, f: Arc::new(f) }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.dim);
        (self.f)(x)
    }
}

impl std::fmt::Debug for Predictor {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Predictor(dim={})", self.dim)
    }
}

/// Recording wrapper around the target function. Hands values to the method
/// one query at a time, logs them, and aborts the run on budget overrun.
pub struct QueryOracle<'a> {
    target: &'a (dyn Fn(&[f64]) -> f64 + Sync),
    budget: usize,
    points: Vec<Vec<f64>>,
    values: Vec<f64>,
}

impl<'a> QueryOracle<'a> {
    pub fn new(target: &'a (dyn Fn(&[f64]) -> f64 + Sync), budget: usize) -> Self {
        QueryOracle {
            target,
            budget,
            points: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn budget(&self) -> usize {
        self.budget
    }

    pub fn used(&self) -> usize {
        self.points.len()
    }

    /// Queries the target, recording the pair. Erroring (rather than
    /// silently clamping) on overrun makes budget bugs loud.
    pub fn query(&mut self, x: &[f64]) -> Result<f64> {
        if self.points.len() >= self.budget {
            return Err(Error::BudgetExceeded(format!(
                "query #{} at {:?} exceeds budget {}",
                self.points.len() + 1,
                x,
                self.budget
            )));
        }
        let mut v = (self.target)(x);
        if v == 0.0 {
            v = 0.0; // canonicalize -0.0 so transcripts compare bitwise
        }
        self.points.push(x.to_vec());
        self.values.push(v);
        Ok(v)
    }
}

/// The record of one method run: every queried point, every value received,
/// and the predictor the method returned.
#[derive(Debug, Clone)]
pub struct QueryTranscript {
    pub points: Vec<Vec<f64>>,
    pub values: Vec<f64>,
    pub predictor: Predictor,
}

impl QueryTranscript {
    /// Bitwise equality of the observable part (points and values); two
    /// deterministic runs that agree here must return the same predictor.
    pub fn observations_identical(&self, other: &QueryTranscript) -> bool {
        self.points.len() == other.points.len()
            && self
                .points
                .iter()
                .zip(&other.points)
                .all(|(a, b)| {
                    a.len() == b.len()
                        && a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits())
                })
            && self
                .values
                .iter()
                .zip(&other.values)
                .all(|(x, y)| x.to_bits() == y.to_bits())
    }
}

/// An adaptive deterministic sampling method with a fixed query budget.
pub trait DeterministicMethod {
    /// Upper bound on the number of oracle queries a run may issue.
    fn budget(&self) -> usize;

    /// Runs the method against the oracle and produces a predictor. The
    /// method must be a pure function of the values the oracle returns.
    fn run(&self, oracle: &mut QueryOracle<'_>) -> Result<Predictor>;
}

/// Runs a method against `target` with recording and budget enforcement.
pub fn run_with_recording(
    method: &dyn DeterministicMethod,
    target: &(dyn Fn(&[f64]) -> f64 + Sync),
) -> Result<QueryTranscript> {
    let mut oracle = QueryOracle::new(target, method.budget());
    let predictor = method.run(&mut oracle)?;
    Ok(QueryTranscript {
        points: oracle.points,
        values: oracle.values,
        predictor,
    })
}

/// The method that looks at nothing and predicts a constant (0 by default).
/// The simplest adversary target: its budget is never used.
#[derive(Debug, Clone)]
pub struct ConstantMethod {
    pub dim: usize,
    pub budget: usize,
    pub value: f64,
}

impl ConstantMethod {
    pub fn zero(dim: usize, budget: usize) -> Self {
        ConstantMethod {
            dim,
            budget,
            value: 0.0,
        }
    }
}

impl DeterministicMethod for ConstantMethod {
    fn budget(&self) -> usize {
        self.budget
    }

    fn run(&self, _oracle: &mut QueryOracle<'_>) -> Result<Predictor> {
        let v = self.value;
        Ok(Predictor::new(self.dim, move |_| v))
    }
}

/// Integer `⌊m^{1/d}⌋`, computed with overflow-safe integer correction of
/// the floating-point root (plain `powf` misrounds perfect powers).
pub fn int_floor_root(m: usize, d: usize) -> usize {
    if d == 0 {
        return 1;
    }
    if d == 1 {
        return m;
    }
    let mut k = (m as f64).powf(1.0 / d as f64).floor() as usize;
    let pow = |k: usize| -> Option<usize> {
        let mut acc: usize = 1;
        for _ in 0..d {
            acc = acc.checked_mul(k)?;
        }
        Some(acc)
    };
    while pow(k + 1).map_or(false, |p| p <= m) {
        k += 1;
    }
    while k > 0 && pow(k).map_or(true, |p| p > m) {
        k -= 1;
    }
    k
}

/// Smallest `k` with `k^s ≥ m` (integer `⌈m^{1/s}⌉`).
pub fn int_ceil_root(m: usize, s: usize) -> usize {
    if m <= 1 {
        return 1;
    }
    let k = int_floor_root(m, s);
    let mut acc: usize = 1;
    let mut exact = true;
    for _ in 0..s {
        match acc.checked_mul(k) {
            Some(v) => acc = v,
            None => {
                exact = false;
                break;
            }
        }
    }
    if exact && acc >= m {
        k
    } else {
        k + 1
    }
}

/// Piecewise-constant recovery on the uniform lattice.
#[derive(Debug, Clone)]
pub struct GridRecovery {
    pub dim: usize,
    pub samples: usize,
    /// Lipschitz constant of the targets this method is intended for; only
    /// used to report the guaranteed error, never by the algorithm itself.
    pub lipschitz: f64,
}

impl GridRecovery {
    pub fn new(dim: usize, samples: usize, lipschitz: f64) -> Result<Self> {
        if dim == 0 || samples == 0 {
            return Err(Error::Precondition(
                "grid recovery needs dim >= 1 and at least one sample".into(),
            ));
        }
        Ok(GridRecovery {
            dim,
            samples,
            lipschitz,
        })
    }

    /// Lattice resolution `K = ⌊m^{1/d}⌋`.
    pub fn resolution(&self) -> usize {
        int_floor_root(self.samples, self.dim)
    }

    /// `Lip · 2√d · m^{−1/d}`: the proven sup-error on Lipschitz targets.
    pub fn guaranteed_sup_error(&self) -> f64 {
        let d = self.dim as f64;
        self.lipschitz * 2.0 * d.sqrt() * (self.samples as f64).powf(-1.0 / d)
    }
}

impl DeterministicMethod for GridRecovery {
    fn budget(&self) -> usize {
        self.samples
    }

    fn run(&self, oracle: &mut QueryOracle<'_>) -> Result<Predictor> {
        let d = self.dim;
        let k = self.resolution();
        // Lexicographic sweep over the lattice {0, 1/K, ..., (K-1)/K}^d.
        let mut values = Vec::with_capacity(k.pow(d as u32));
        let mut idx = vec![0usize; d];
        let mut x = vec![0.0; d];
        loop {
            for (j, &i) in idx.iter().enumerate() {
                x[j] = i as f64 / k as f64;
            }
            values.push(oracle.query(&x)?);
            let mut c = d;
            loop {
                if c == 0 {
                    let dim = d;
                    let kk = k;
                    return Ok(Predictor::new(d, move |x: &[f64]| {
                        // Half-open cells; the last cell per axis also owns
                        // its top face so 1.0 is covered.
                        let mut flat = 0usize;
                        for &xi in x.iter().take(dim) {
                            let mut cell = (xi * kk as f64).floor() as isize;
                            if cell < 0 {
                                cell = 0;
                            }
                            let cell = (cell as usize).min(kk - 1);
                            flat = flat * kk + cell;
                        }
                        values[flat]
                    }));
                }
                c -= 1;
                idx[c] += 1;
                if idx[c] < k {
                    break;
                }
                idx[c] = 0;
            }
        }
    }
}

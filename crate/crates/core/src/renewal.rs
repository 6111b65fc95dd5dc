//! Discrete renewal equation z_n = b_n + sum_{k=0}^n f_k z_{n-k}:
//! validation, forward iteration, and limit estimation with convergence
//! diagnostics.
//!
//! The recursion as written puts z_n on both sides through the k = 0 term;
//! the solver resolves it algebraically and therefore requires f_0 < 1.
//! Aperiodicity (gcd of the support = 1) is what forces convergence;
//! periodic systems are refused by the limit estimator and oscillate.

use num_integer::Integer;

use crate::error::{Error, Result};

/// Weights f, inhomogeneity b (truncated, with a certified tail bound on
/// sum |b_n| beyond the horizon), and the iteration horizon.
#[derive(Debug, Clone)]
pub struct RenewalSystem {
    f: Vec<f64>,
    b: Vec<f64>,
    b_tail_bound: f64,
    horizon: usize,
}

impl RenewalSystem {
    /// `f[k]` is the weight at lag k (index 0 allowed, must stay < 1);
    /// `b[n]` is zero beyond the given prefix.
    pub fn new(f: Vec<f64>, b: Vec<f64>, b_tail_bound: f64, horizon: usize) -> Result<Self> {
        if f.iter().all(|&v| v == 0.0) {
            return Err(Error::InvalidInput("empty renewal support".into()));
        }
        if f.iter().any(|&v| v < 0.0 || !v.is_finite()) {
            return Err(Error::InvalidInput("f must be nonnegative and finite".into()));
        }
        if b.iter().any(|&v| !v.is_finite()) {
            return Err(Error::InvalidInput("b must be finite".into()));
        }
        if !(b_tail_bound >= 0.0) {
            return Err(Error::InvalidInput("tail bound must be >= 0".into()));
        }
        Ok(RenewalSystem {
            f,
            b,
            b_tail_bound,
            horizon,
        })
    }

    /// Sparse constructor from (lag, weight) pairs.
    pub fn from_support(
        support: &[(usize, f64)],
        b: Vec<f64>,
        b_tail_bound: f64,
        horizon: usize,
    ) -> Result<Self> {
        let max_lag = support.iter().map(|&(k, _)| k).max().unwrap_or(0);
        let mut f = vec![0.0; max_lag + 1];
        for &(k, v) in support {
            f[k] += v;
        }
        Self::new(f, b, b_tail_bound, horizon)
    }

    pub fn f(&self) -> &[f64] {
        &self.f
    }

    pub fn b(&self, n: usize) -> f64 {
        self.b.get(n).copied().unwrap_or(0.0)
    }

    pub fn b_prefix(&self) -> &[f64] {
        &self.b
    }

    pub fn b_tail_bound(&self) -> f64 {
        self.b_tail_bound
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    /// Largest lag with positive weight.
    pub fn max_support(&self) -> usize {
        self.f
            .iter()
            .enumerate()
            .rev()
            .find(|(_, &v)| v > 0.0)
            .map(|(k, _)| k)
            .unwrap_or(0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PeriodicityVerdict {
    Aperiodic,
    /// The support generates a proper subgroup g Z; the limit may fail to
    /// exist (parity-type oscillation).
    Periodic { gcd: usize },
}

#[derive(Debug, Clone)]
pub struct RenewalValidation {
    pub f_sum: f64,
    pub sum_ok: bool,
    pub verdict: PeriodicityVerdict,
}

/// Checks sum f = 1 (within 1e-12), nonnegativity (enforced at
/// construction), and gcd of the positive-lag support.
pub fn validate_renewal(sys: &RenewalSystem) -> Result<RenewalValidation> {
    let f_sum: f64 = sys.f.iter().sum();
    let sum_ok = (f_sum - 1.0).abs() <= 1e-12;
    let mut g: usize = 0;
    for (k, &v) in sys.f.iter().enumerate() {
        if k > 0 && v > 0.0 {
            g = g.gcd(&k);
        }
    }
    if g == 0 {
        return Err(Error::Degenerate(
            "support has no positive lag (f concentrated at 0)".into(),
        ));
    }
    let verdict = if g == 1 {
        PeriodicityVerdict::Aperiodic
    } else {
        PeriodicityVerdict::Periodic { gcd: g }
    };
    Ok(RenewalValidation {
        f_sum,
        sum_ok,
        verdict,
    })
}

/// Forward recursion z_n = (b_n + sum_{k=1}^{n} f_k z_{n-k}) / (1 - f_0).
/// Exact in floating point; O(n_max * support).
pub fn renewal_iterate(sys: &RenewalSystem, n_max: usize) -> Result<Vec<f64>> {
    let f0 = sys.f[0];
    if f0 >= 1.0 {
        return Err(Error::Degenerate(format!(
            "f_0 = {f0} leaves no mass for the recursion (need f_0 < 1)"
        )));
    }
    let max_lag = sys.f.len() - 1;
    let mut z = Vec::with_capacity(n_max + 1);
    for n in 0..=n_max {
        let mut conv = 0.0;
        for k in 1..=max_lag.min(n) {
            if sys.f[k] != 0.0 {
                conv += sys.f[k] * z[n - k];
            }
        }
        z.push((sys.b(n) + conv) / (1.0 - f0));
    }
    Ok(z)
}

#[derive(Debug, Clone)]
pub struct LimitEstimate {
    /// sum_n b_n / sum_n n f_n.
    pub value: f64,
    /// Propagated truncation uncertainty: tail bound / mean.
    pub uncertainty: f64,
    /// |z_horizon - value|.
    pub residual: f64,
    /// max - min of z over the last max-support window at the horizon.
    pub cauchy_width: f64,
    pub mean_lag: f64,
}

/// Renewal limit sum b / sum n f_n for aperiodic systems, cross-checked
/// against the iterated sequence at the system horizon.
pub fn limit_estimate(sys: &RenewalSystem) -> Result<LimitEstimate> {
    let validation = validate_renewal(sys)?;
    if let PeriodicityVerdict::Periodic { gcd } = validation.verdict {
        return Err(Error::Degenerate(format!(
            "periodic support (gcd {gcd}): subsequence limits differ in general"
        )));
    }
    if !validation.sum_ok {
        return Err(Error::InvalidInput(format!(
            "sum f = {} is not 1 within 1e-12",
            validation.f_sum
        )));
    }
    let mean_lag: f64 = sys.f.iter().enumerate().map(|(k, &v)| k as f64 * v).sum();
    if mean_lag <= 0.0 {
        return Err(Error::Degenerate("zero mean lag".into()));
    }
    let b_sum: f64 = sys.b.iter().sum();
    let value = b_sum / mean_lag;
    let uncertainty = sys.b_tail_bound / mean_lag;

    let n_max = sys.horizon.max(sys.max_support() + 1);
    let z = renewal_iterate(sys, n_max)?;
    let window = sys.max_support().max(1);
    let tail = &z[z.len().saturating_sub(window)..];
    let hi = tail.iter().fold(f64::MIN, |m, &v| m.max(v));
    let lo = tail.iter().fold(f64::MAX, |m, &v| m.min(v));
    Ok(LimitEstimate {
        value,
        uncertainty,
        residual: (z[z.len() - 1] - value).abs(),
        cauchy_width: hi - lo,
        mean_lag,
    })
}

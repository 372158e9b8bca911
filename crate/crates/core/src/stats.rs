//! Empirical distribution utilities: ECDFs, KS and TV distances, DKW
//! confidence bands, and stochastic-order checks.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum StatsError {
    #[error("empty sample")]
    EmptySample,
    #[error("confidence must be in (0, 1 - 1e-12), got {0}")]
    BadConfidence(f64),
    #[error("non-finite sample value {0}")]
    NonFiniteSample(f64),
}

pub type Result<T> = std::result::Result<T, StatsError>;

/// Right-continuous empirical CDF over a sorted copy of the sample.
#[derive(Clone, Debug)]
pub struct EmpiricalCdf {
    sorted: Vec<f64>,
}

impl EmpiricalCdf {
    pub fn new(values: &[f64]) -> Result<Self> {
        if values.is_empty() {
            return Err(StatsError::EmptySample);
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(StatsError::NonFiniteSample(*v));
        }
        let mut sorted = values.to_vec();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        Ok(Self { sorted })
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    /// F̂(x) = #{i: x_i <= x} / m.
    pub fn eval(&self, x: f64) -> f64 {
        self.sorted.partition_point(|v| *v <= x) as f64 / self.sorted.len() as f64
    }

    pub fn values(&self) -> &[f64] {
        &self.sorted
    }
}

/// sup_x |F̂(x) − F(x)| against a continuous reference CDF; the supremum is
/// attained at sample points, checking both sides of each ECDF jump (tied
/// values form a single jump).
pub fn ks_distance(ecdf: &EmpiricalCdf, cdf: impl Fn(f64) -> f64) -> f64 {
    let m = ecdf.len() as f64;
    let values = ecdf.values();
    let mut sup: f64 = 0.0;
    let mut i = 0;
    while i < values.len() {
        let x = values[i];
        let mut j = i;
        while j < values.len() && values[j] == x {
            j += 1;
        }
        let f = cdf(x);
        sup = sup.max((f - i as f64 / m).abs());
        sup = sup.max((j as f64 / m - f).abs());
        i = j;
    }
    sup
}

/// Total variation ½ Σ |a_k − b_k| between pmfs, zero-padding the shorter.
pub fn tv_discrete(a: &[f64], b: &[f64]) -> f64 {
    let len = a.len().max(b.len());
    let mut acc = 0.0;
    for k in 0..len {
        let x = a.get(k).copied().unwrap_or(0.0);
        let y = b.get(k).copied().unwrap_or(0.0);
        acc += (x - y).abs();
    }
    acc / 2.0
}

/// Half-width ε of the Dvoretzky–Kiefer–Wolfowitz band
/// P(sup|F̂ − F| > ε) ≤ 1 − confidence, ε = √(ln(2/(1−conf)) / (2m)).
pub fn dkw_band(m: usize, confidence: f64) -> Result<f64> {
    if m == 0 {
        return Err(StatsError::EmptySample);
    }
    if !(confidence > 0.0 && confidence < 1.0 - 1e-12) {
        return Err(StatsError::BadConfidence(confidence));
    }
    Ok(((2.0 / (1.0 - confidence)).ln() / (2.0 * m as f64)).sqrt())
}

/// Verdict of a first-order stochastic dominance check F ≤ G pointwise.
#[derive(Clone, Debug)]
pub struct OrderCheck {
    /// max over the grid of F(x) − G(x) above `slack` (0 when dominated).
    pub max_violation: f64,
    pub worst_x: f64,
    pub pass: bool,
}

/// Checks F(x) ≤ G(x) + slack over the grid; dominance of F over G in the
/// stochastic order means F's CDF sits below G's.
pub fn stochastic_order_check(
    lower_cdf: impl Fn(f64) -> f64,
    upper_cdf: impl Fn(f64) -> f64,
    grid: &[f64],
    slack: f64,
) -> OrderCheck {
    let mut max_violation: f64 = 0.0;
    let mut worst_x = f64::NAN;
    for &x in grid {
        let gap = lower_cdf(x) - upper_cdf(x) - slack;
        if gap > max_violation {
            max_violation = gap;
            worst_x = x;
        }
    }
    OrderCheck { max_violation, worst_x, pass: max_violation <= 0.0 }
}

//! Finite request profiles w⁽ⁿ⁾: i.i.d. draws from a popularity law, Zipf
//! weights i^α, and density-increment weights on a uniform grid.

use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Dirac, Pareto, PopularityError, PopularityLaw, PowerLaw, Pushforward, Result};
use crate::numerics::{integrate, QuadratureSpec};

/// List ordering of the weights relative to the initial list positions
/// (π = identity throughout: item i starts at position i).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Ordering {
    Exchangeable,
    Decreasing,
    Increasing,
}

impl std::str::FromStr for Ordering {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "ex" | "exchangeable" => Ok(Self::Exchangeable),
            "dec" | "decreasing" => Ok(Self::Decreasing),
            "inc" | "increasing" => Ok(Self::Increasing),
            other => Err(format!("unknown ordering: {other}")),
        }
    }
}

/// A finite weight vector w⁽ⁿ⁾ with its scaling constant Z_n and ordering tag.
#[derive(Clone, Debug)]
pub struct RequestProfile {
    pub n: usize,
    pub weights: Vec<f64>,
    pub ordering: Ordering,
    /// Scaling Z_n with Z_n·w_i the quantity whose empirical law converges.
    pub scale: f64,
    pub seed: u64,
    /// Family descriptor of the generating/limiting law.
    pub family: String,
    /// Number of all-zero draws rejected during construction.
    pub rejected_zero_draws: u32,
}

impl RequestProfile {
    /// Normalized popularities p_i = w_i / Σ w_j.
    pub fn popularities(&self) -> Vec<f64> {
        let total = self.total_weight();
        self.weights.iter().map(|w| w / total).collect()
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    fn check(self) -> Result<Self> {
        if self.n == 0 || self.weights.len() != self.n {
            return Err(PopularityError::InvalidParameter("empty profile".into()));
        }
        if self.weights.iter().any(|w| !(*w >= 0.0)) || !(self.total_weight() > 0.0) {
            return Err(PopularityError::DegenerateLaw(
                "weights must be nonnegative with positive sum".into(),
            ));
        }
        match self.ordering {
            Ordering::Decreasing => {
                if self.weights.windows(2).any(|w| w[0] < w[1]) {
                    return Err(PopularityError::InvalidParameter(
                        "decreasing profile is not nonincreasing".into(),
                    ));
                }
            }
            Ordering::Increasing => {
                if self.weights.windows(2).any(|w| w[0] > w[1]) {
                    return Err(PopularityError::InvalidParameter(
                        "increasing profile is not nondecreasing".into(),
                    ));
                }
            }
            Ordering::Exchangeable => {}
        }
        Ok(self)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&ProfileRepr::from(self)).expect("profile serialization")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let repr: ProfileRepr = serde_json::from_str(s)
            .map_err(|e| PopularityError::InvalidParameter(e.to_string()))?;
        repr.into_profile()
    }
}

/// Serialized form; weights are binary64 bit patterns in hex so round trips
/// are exact.
#[derive(Serialize, Deserialize)]
struct ProfileRepr {
    n: usize,
    ordering: Ordering,
    seed: u64,
    family: String,
    scale: f64,
    rejected_zero_draws: u32,
    weights_hex: Vec<String>,
}

impl From<&RequestProfile> for ProfileRepr {
    fn from(p: &RequestProfile) -> Self {
        Self {
            n: p.n,
            ordering: p.ordering,
            seed: p.seed,
            family: p.family.clone(),
            scale: p.scale,
            rejected_zero_draws: p.rejected_zero_draws,
            weights_hex: p.weights.iter().map(|w| format!("{:016x}", w.to_bits())).collect(),
        }
    }
}

impl ProfileRepr {
    fn into_profile(self) -> Result<RequestProfile> {
        let weights = self
            .weights_hex
            .iter()
            .map(|h| u64::from_str_radix(h, 16).map(f64::from_bits))
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| PopularityError::InvalidParameter(e.to_string()))?;
        RequestProfile {
            n: self.n,
            weights,
            ordering: self.ordering,
            scale: self.scale,
            seed: self.seed,
            family: self.family,
            rejected_zero_draws: self.rejected_zero_draws,
        }
        .check()
    }
}

/// Draw n i.i.d. weights from `law` and order them per `ordering`
/// (exchangeable keeps sample order). All-zero draws are rejected and
/// redrawn, with the rejection count recorded.
pub fn make_iid_profile(
    law: &dyn PopularityLaw,
    n: usize,
    ordering: Ordering,
    seed: u64,
) -> Result<RequestProfile> {
    if n == 0 {
        return Err(PopularityError::InvalidParameter("n must be >= 1".into()));
    }
    if law.zero_atom() >= 1.0 {
        return Err(PopularityError::DegenerateLaw(format!(
            "{} puts all mass at zero",
            law.descriptor()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rejected = 0u32;
    let weights = loop {
        let w: Vec<f64> = (0..n).map(|_| law.sample(&mut rng)).collect();
        if w.iter().any(|x| *x > 0.0) {
            break w;
        }
        rejected += 1;
    };
    let mut weights = weights;
    match ordering {
        Ordering::Exchangeable => {}
        Ordering::Decreasing => weights.sort_by(|a, b| b.partial_cmp(a).unwrap()),
        Ordering::Increasing => weights.sort_by(|a, b| a.partial_cmp(b).unwrap()),
    }
    RequestProfile {
        n,
        weights,
        ordering,
        scale: 1.0,
        seed,
        family: law.descriptor(),
        rejected_zero_draws: rejected,
    }
    .check()
}

/// Zipf weights w_i = i^α with Z_n = n^{−α}; returns the profile together
/// with the limiting law of the scaled weights (i/n)^α.
pub fn make_zipf_profile(
    alpha: f64,
    n: usize,
) -> Result<(RequestProfile, Arc<dyn PopularityLaw>)> {
    if !(alpha > -1.0) {
        return Err(PopularityError::OutOfLlnRange(alpha));
    }
    if n == 0 {
        return Err(PopularityError::InvalidParameter("n must be >= 1".into()));
    }
    let weights: Vec<f64> = (1..=n).map(|i| (i as f64).powf(alpha)).collect();
    let (ordering, limit): (Ordering, Arc<dyn PopularityLaw>) = if alpha > 0.0 {
        (Ordering::Increasing, Arc::new(PowerLaw::new(alpha)?))
    } else if alpha < 0.0 {
        (Ordering::Decreasing, Arc::new(Pareto::new(alpha)?))
    } else {
        (Ordering::Exchangeable, Arc::new(Dirac::new(1.0)?))
    };
    let profile = RequestProfile {
        n,
        weights,
        ordering,
        scale: (n as f64).powf(-alpha),
        seed: 0,
        family: format!("zipf({alpha})"),
        rejected_zero_draws: 0,
    }
    .check()?;
    Ok((profile, limit))
}

/// Weights w_i = Q(ci/n) − Q(c(i−1)/n) for a nonincreasing probability
/// density q on [0, c], with Z_n = n/c; the limiting law is the pushforward
/// of Uniform[0, c]/c by q.
pub fn make_density_increment_profile(
    q: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    c: f64,
    n: usize,
    name: impl Into<String>,
) -> Result<(RequestProfile, Arc<dyn PopularityLaw>)> {
    if n == 0 {
        return Err(PopularityError::InvalidParameter("n must be >= 1".into()));
    }
    let name = name.into();
    // Validates ∫q = 1 and monotonicity implicitly through the law.
    let limit = Arc::new(Pushforward::new(q.clone(), c, name.clone())?);
    let spec = QuadratureSpec::default();
    let weights: Vec<f64> = (1..=n)
        .map(|i| {
            let lo = c * (i as f64 - 1.0) / n as f64;
            let hi = c * i as f64 / n as f64;
            integrate(|x| q(x), lo, hi, &spec).expect("density increment quadrature")
        })
        .collect();
    let profile = RequestProfile {
        n,
        weights,
        ordering: Ordering::Decreasing,
        scale: n as f64 / c,
        seed: 0,
        family: name,
        rejected_zero_draws: 0,
    }
    .check()?;
    Ok((profile, limit as Arc<dyn PopularityLaw>))
}

//! Limiting search-cost laws: the stationary density, the transient density
//! split at the threshold 1 − φ(t), the partial transforms g_t and their
//! generalized inverses, Laplace transforms of both pieces, and the LRU/PAC
//! fault probabilities.

mod fault;
mod laplace;
mod law;

pub use fault::{lru_fault_probability, pac_fault_probability};
pub use laplace::{laplace_equilibrium_limit, laplace_out_limit};
pub use law::{transient_law, tv_distance_to_stationary, SearchCostLaw};

use thiserror::Error;

use crate::numerics::{self, NumericsError};
use crate::popularity::{Ordering, PopularityError, PopularityLaw};

#[derive(Debug, Error)]
pub enum AnalyticError {
    #[error("degenerate popularity law: mean {0} is not positive and finite")]
    DegenerateLaw(f64),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("{what} = {value} outside [{lo}, {hi}]")]
    OutOfRange { what: &'static str, value: f64, lo: f64, hi: f64 },
    #[error("search-cost law failed its construction checks: {0}")]
    ConstructionFailed(String),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error(transparent)]
    Popularity(#[from] PopularityError),
}

pub type Result<T> = std::result::Result<T, AnalyticError>;

/// Quantile level at which unbounded inversions are capped; the mass beyond
/// the cap is below 1e-12.
pub(crate) const QUANTILE_CAP: f64 = 1.0 - 1e-12;

pub(crate) fn checked_mean(law: &dyn PopularityLaw) -> Result<f64> {
    let mu = law.mean();
    if mu.is_finite() && mu > 0.0 {
        Ok(mu)
    } else {
        Err(AnalyticError::DegenerateLaw(mu))
    }
}

/// φ⁻¹(v) = inf{s ≥ 0: φ(s) ≤ v}; φ decreases from 1 to p₀, so the result is
/// +∞ when v ≤ p₀.
pub fn phi_inverse(law: &dyn PopularityLaw, v: f64) -> f64 {
    if v >= 1.0 {
        return 0.0;
    }
    let mut hi = 1.0;
    while law.laplace(hi) > v {
        hi *= 2.0;
        if hi > 1e15 {
            return f64::INFINITY;
        }
    }
    let tol = 1e-14 * hi.max(1.0);
    numerics::invert_monotone(|s| -law.laplace(s), -v, 0.0, hi, tol).unwrap_or(f64::INFINITY)
}

/// inf{s ≥ 0: −φ′(s) ≤ target}; −φ′ decreases from μ to 0.
pub(crate) fn dphi_inverse(law: &dyn PopularityLaw, target: f64) -> f64 {
    if target >= -law.dlaplace(0.0) {
        return 0.0;
    }
    let mut hi = 1.0;
    while -law.dlaplace(hi) > target {
        hi *= 2.0;
        if hi > 1e15 {
            return f64::INFINITY;
        }
    }
    let tol = 1e-14 * hi.max(1.0);
    numerics::invert_monotone(|s| law.dlaplace(s), -target, 0.0, hi, tol)
        .unwrap_or(f64::INFINITY)
}

/// Density of the stationary limiting search cost,
/// −(1/μ)·φ″(φ⁻¹(1−x))/φ′(φ⁻¹(1−x)) on [0, 1−p₀), 0 beyond.
pub fn stationary_density(law: &dyn PopularityLaw, x: f64) -> Result<f64> {
    let mu = checked_mean(law)?;
    if !(0.0..=1.0).contains(&x) {
        return Err(AnalyticError::OutOfRange { what: "x", value: x, lo: 0.0, hi: 1.0 });
    }
    let p0 = law.zero_atom();
    if x >= 1.0 - p0 {
        return Ok(0.0);
    }
    let s = phi_inverse(law, 1.0 - x);
    let dphi = law.dlaplace(s);
    // x → (1−p₀)⁻ sends s → ∞ and both derivatives to 0.
    if s.is_infinite() || dphi == 0.0 {
        return Ok(0.0);
    }
    Ok(-law.d2laplace(s) / (mu * dphi))
}

/// Partial transform shaping the monotone out-of-equilibrium piece:
/// ∫_{[0,y]} e^{−zt} P(dz) under decreasing ordering, the complementary
/// ∫_{(y,∞)} e^{−zt} P(dz) under increasing.
pub fn g_t(law: &dyn PopularityLaw, ordering: Ordering, t: f64, y: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(AnalyticError::InvalidArgument(format!("t must be > 0, got {t}")));
    }
    if !(y >= 0.0) {
        return Err(AnalyticError::InvalidArgument(format!("y must be >= 0, got {y}")));
    }
    match ordering {
        Ordering::Decreasing => Ok(law.exp_weighted_cdf(t, y)),
        Ordering::Increasing => Ok(law.laplace(t) - law.exp_weighted_cdf(t, y)),
        Ordering::Exchangeable => Err(AnalyticError::InvalidArgument(
            "g_t is defined for monotone orderings only".into(),
        )),
    }
}

/// inf{y: G_t(y) ≥ v} with G_t(y) = ∫_{[0,y]} e^{−zt} P(dz); capped at the
/// 1−1e−12 quantile when v exhausts the transform's range.
pub(crate) fn g_inverse(law: &dyn PopularityLaw, t: f64, v: f64) -> f64 {
    let lo = law.support_inf().max(0.0);
    if v <= 0.0 {
        return lo;
    }
    let hi = law.quantile(QUANTILE_CAP);
    if v >= law.exp_weighted_cdf(t, hi) {
        return hi;
    }
    let tol = 1e-14 * hi.max(1.0);
    numerics::invert_monotone(|y| law.exp_weighted_cdf(t, y), v, lo, hi, tol).unwrap_or(hi)
}

/// Generalized inverse entering the monotone out-density: g̃_t(x) =
/// g_t⁻¹(1−x) under decreasing ordering, (1−g_t)⁻¹(x) under increasing.
pub fn tilde_g_t(law: &dyn PopularityLaw, ordering: Ordering, t: f64, x: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(AnalyticError::InvalidArgument(format!("t must be > 0, got {t}")));
    }
    let phi_t = law.laplace(t);
    let threshold = 1.0 - phi_t;
    if x < threshold - 1e-9 || x > 1.0 + 1e-9 {
        return Err(AnalyticError::OutOfRange { what: "x", value: x, lo: threshold, hi: 1.0 });
    }
    let v = match ordering {
        Ordering::Decreasing => 1.0 - x,
        Ordering::Increasing => x - threshold,
        Ordering::Exchangeable => {
            return Err(AnalyticError::InvalidArgument(
                "tilde_g_t is defined for monotone orderings only".into(),
            ))
        }
    };
    Ok(g_inverse(law, t, v.min(phi_t)))
}

/// Density of the limiting transient search cost at scaled time t: the
/// stationary density below the threshold 1 − φ(t), and above it the uniform
/// |φ′(t)|/(μφ(t)) (exchangeable) or (1/μ)·g̃_t(x) (monotone).
pub fn transient_density(
    law: &dyn PopularityLaw,
    ordering: Ordering,
    t: f64,
    x: f64,
) -> Result<f64> {
    if !(t > 0.0) {
        return Err(AnalyticError::InvalidArgument(format!("t must be > 0, got {t}")));
    }
    let mu = checked_mean(law)?;
    if !(0.0..=1.0).contains(&x) {
        return Err(AnalyticError::OutOfRange { what: "x", value: x, lo: 0.0, hi: 1.0 });
    }
    let threshold = 1.0 - law.laplace(t);
    // At x = threshold itself take the equilibrium value: the out-density can
    // diverge there and would poison quadrature panel endpoints.
    if x <= threshold {
        return stationary_density(law, x);
    }
    match ordering {
        Ordering::Exchangeable => Ok(-law.dlaplace(t) / (mu * law.laplace(t))),
        _ => Ok(tilde_g_t(law, ordering, t, x)? / mu),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::popularity::{Bernoulli, Dirac, Gamma, Geometric};

    #[test]
    fn stationary_density_examples() {
        let dirac = Dirac::new(1.0).unwrap();
        for x in [0.0, 0.3, 0.9, 0.999] {
            assert!((stationary_density(&dirac, x).unwrap() - 1.0).abs() < 1e-10, "x={x}");
        }
        let exp = Gamma::new(1.0).unwrap();
        assert!((stationary_density(&exp, 0.25).unwrap() - 1.5).abs() < 1e-9);
        let bern = Bernoulli::new(0.5).unwrap();
        assert!((stationary_density(&bern, 0.3).unwrap() - 2.0).abs() < 1e-9);
        assert_eq!(stationary_density(&bern, 0.7).unwrap(), 0.0);
    }

    #[test]
    fn phi_inverse_round_trip() {
        let exp = Gamma::new(2.0).unwrap();
        for s in [0.0, 0.3, 1.0, 4.0] {
            let v = exp.laplace(s);
            assert!((phi_inverse(&exp, v) - s).abs() < 1e-9, "s={s}");
        }
        assert_eq!(phi_inverse(&Bernoulli::new(0.5).unwrap(), 0.4), f64::INFINITY);
    }

    #[test]
    fn g_t_exponential_closed_form() {
        let exp = Gamma::new(1.0).unwrap();
        let expected = (1.0 - (-2.0f64).exp()) / 2.0;
        assert!((g_t(&exp, Ordering::Decreasing, 1.0, 1.0).unwrap() - expected).abs() < 1e-10);
        let full = g_t(&exp, Ordering::Decreasing, 1.0, 1e9).unwrap();
        assert!((full - exp.laplace(1.0)).abs() < 1e-10);
        assert!(g_t(&exp, Ordering::Decreasing, 1.0, 0.0).unwrap().abs() < 1e-12);
        let inc = g_t(&exp, Ordering::Increasing, 1.0, 1.0).unwrap();
        assert!((inc - (exp.laplace(1.0) - expected)).abs() < 1e-10);
    }

    #[test]
    fn tilde_g_t_exponential() {
        let exp = Gamma::new(1.0).unwrap();
        assert!(tilde_g_t(&exp, Ordering::Decreasing, 1.0, 1.0).unwrap() < 1e-6);
        let x = 1.0 - (1.0 - (-2.0f64).exp()) / 2.0;
        assert!((tilde_g_t(&exp, Ordering::Decreasing, 1.0, x).unwrap() - 1.0).abs() < 1e-8);
        // boundary x = 1 − φ(t): inverse at the support sup, capped.
        let cap = tilde_g_t(&exp, Ordering::Decreasing, 1.0, 0.5).unwrap();
        assert!((cap - exp.quantile(QUANTILE_CAP)).abs() < 1e-6);
        assert!(tilde_g_t(&exp, Ordering::Decreasing, 1.0, 0.4).is_err());
    }

    #[test]
    fn transient_density_examples() {
        let bern = Bernoulli::new(0.5).unwrap();
        let t = (2.0f64).ln();
        let d = transient_density(&bern, Ordering::Exchangeable, t, 0.5).unwrap();
        assert!((d - 2.0 / 3.0).abs() < 1e-10, "{d}");
        let d = transient_density(&bern, Ordering::Exchangeable, t, 0.1).unwrap();
        assert!((d - 2.0).abs() < 1e-9);

        let exp = Gamma::new(1.0).unwrap();
        let d = transient_density(&exp, Ordering::Exchangeable, 1.0, 0.9).unwrap();
        assert!((d - 0.5).abs() < 1e-10);

        let dirac = Dirac::new(1.0).unwrap();
        for ord in [Ordering::Exchangeable, Ordering::Decreasing, Ordering::Increasing] {
            let d = transient_density(&dirac, ord, 2.0, 0.4).unwrap();
            assert!((d - 1.0).abs() < 1e-9, "{ord:?}");
        }
        assert!(transient_density(&exp, Ordering::Exchangeable, 0.0, 0.5).is_err());
    }

    #[test]
    fn geometric_threshold_third() {
        // u(t) = (1−p)(1−e^{−t})/(p+(1−p)(1−e^{−t})) at p = e^{−t} = ½ is 1/3.
        let geo = Geometric::new(0.5).unwrap();
        let u = 1.0 - geo.laplace((2.0f64).ln());
        assert!((u - 1.0 / 3.0).abs() < 1e-12, "{u}");
    }
}

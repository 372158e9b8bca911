//! Limiting fault probabilities for LRU caches and their closed form for
//! Pareto popularity (the PAC display with incomplete Gamma terms).

use std::sync::Arc;

use crate::numerics;
use crate::popularity::{Ordering, Pareto, PopularityLaw};

use super::law::SearchCostLaw;
use super::{checked_mean, g_inverse, phi_inverse, AnalyticError, Result};

/// ℙ(S(t) > δ), the asymptotic fault probability of an LRU cache holding a
/// fraction δ of the list. With η_δ = φ⁻¹(1−δ): |φ′(η_δ)|/μ when η_δ < t
/// (the cache boundary sits in the equilibrated prefix, any ordering);
/// otherwise the out-piece tail, closed-form for exchangeable ordering.
/// `t = ∞` gives the stationary fault probability.
pub fn lru_fault_probability(
    law: Arc<dyn PopularityLaw>,
    ordering: Ordering,
    t: f64,
    delta: f64,
) -> Result<f64> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(AnalyticError::InvalidArgument(format!(
            "delta must be in (0,1), got {delta}"
        )));
    }
    if !(t > 0.0) {
        return Err(AnalyticError::InvalidArgument(format!("t must be > 0, got {t}")));
    }
    let mu = checked_mean(law.as_ref())?;
    if t.is_infinite() {
        if delta >= 1.0 - law.zero_atom() {
            return Ok(0.0);
        }
        let eta = phi_inverse(law.as_ref(), 1.0 - delta);
        return Ok(-law.dlaplace(eta) / mu);
    }
    let threshold = 1.0 - law.laplace(t);
    if delta < threshold {
        let eta = phi_inverse(law.as_ref(), 1.0 - delta);
        return Ok(-law.dlaplace(eta) / mu);
    }
    match ordering {
        Ordering::Exchangeable => {
            Ok((1.0 - delta) / mu * (-law.dlaplace(t)) / law.laplace(t))
        }
        _ => {
            let sc = SearchCostLaw::transient(law, ordering, t)?;
            Ok(1.0 - sc.cdf(delta))
        }
    }
}

/// The PAC (Pareto popularity) fault probability in closed form, via the
/// incomplete Gamma function at the negative order 1 + 1/α.
pub fn pac_fault_probability(alpha: f64, t: f64, delta: f64) -> Result<f64> {
    if !(alpha > -1.0 && alpha < 0.0) {
        return Err(AnalyticError::InvalidArgument(format!(
            "alpha must be in (-1, 0), got {alpha}"
        )));
    }
    if !(t > 0.0) || t.is_infinite() {
        return Err(AnalyticError::InvalidArgument(format!(
            "t must be positive and finite, got {t}"
        )));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(AnalyticError::InvalidArgument(format!(
            "delta must be in (0,1), got {delta}"
        )));
    }
    let law = Pareto::new(alpha)?;
    let order = 1.0 + 1.0 / alpha;
    let coeff = -(alpha + 1.0) / alpha;
    let threshold = 1.0 - law.laplace(t);
    if delta < threshold {
        let eta = phi_inverse(&law, 1.0 - delta);
        Ok(coeff * eta.powf(-order) * numerics::upper_incomplete_gamma_real(order, eta)?)
    } else {
        // ε_{δ,t} = g_t⁻¹(1−δ); in range because 1−δ ≤ φ(t) here.
        let eps = g_inverse(&law, t, 1.0 - delta);
        let g_t = numerics::upper_incomplete_gamma_real(order, t)?;
        let g_te = numerics::upper_incomplete_gamma_real(order, t * eps)?;
        Ok(coeff * t.powf(-order) * (g_t - g_te))
    }
}

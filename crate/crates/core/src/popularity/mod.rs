//! Popularity laws P, finite request profiles w⁽ⁿ⁾ and the empirical-measure
//! machinery connecting them (Wasserstein-1, size-biased picking).

mod laws;
mod measure;
mod profile;

pub use laws::{
    linear_pushforward, parse_family, size_biased, Bernoulli, BetaLaw, Dirac, Gamma, Geometric,
    Pareto, PowerLaw, Pushforward, SizeBiased,
};
pub use measure::{empirical_measure, wasserstein1, wasserstein1_to_law, DiscreteMeasure};
pub use profile::{
    make_density_increment_profile, make_iid_profile, make_zipf_profile, Ordering, RequestProfile,
};

use crate::numerics::{integrate, QuadratureSpec};
use rand::RngCore;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PopularityError {
    #[error("degenerate law: {0}")]
    DegenerateLaw(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("zipf exponent {0} outside the large-n regime (requires alpha > -1)")]
    OutOfLlnRange(f64),
    #[error("density integrates to {0}, not 1")]
    InvalidDensity(f64),
    #[error("unknown family descriptor: {0}")]
    UnknownFamily(String),
}

pub type Result<T> = std::result::Result<T, PopularityError>;

/// A popularity law P on [0, ∞) with finite positive mean, exposed through
/// its Laplace transform φ, CDF/quantile pair and a sampler.
///
/// The two exponentially-weighted partial integrals
/// G_t(y) = ∫_{[0,y]} e^{−zt} P(dz) and M_t(y) = ∫_{[0,y]} z e^{−zt} P(dz)
/// drive the limiting transient densities; laws override them with closed
/// forms where available.
pub trait PopularityLaw: Send + Sync {
    /// Family descriptor, parseable by [`parse_family`], e.g. `"gamma(1)"`.
    fn descriptor(&self) -> String;

    /// Mean μ = −φ′(0), finite and positive.
    fn mean(&self) -> f64;

    /// Laplace transform φ(s) = ∫ e^{−sx} P(dx).
    fn laplace(&self, s: f64) -> f64;

    /// φ′(s) ≤ 0.
    fn dlaplace(&self, s: f64) -> f64;

    /// φ″(s) ≥ 0.
    fn d2laplace(&self, s: f64) -> f64;

    /// Mass at zero p₀ = P({0}) = lim φ(s).
    fn zero_atom(&self) -> f64 {
        self.cdf(0.0)
    }

    fn cdf(&self, x: f64) -> f64;

    /// Generalized inverse of the CDF; `quantile(0)` is the essential inf of
    /// the support, `quantile(1)` the essential sup (possibly +∞).
    fn quantile(&self, u: f64) -> f64;

    fn sample(&self, rng: &mut dyn RngCore) -> f64;

    /// Density of the absolutely-continuous part, when available.
    fn density(&self, _x: f64) -> Option<f64> {
        None
    }

    /// Atom locations and masses for (essentially) purely atomic laws.
    /// May be truncated to total mass ≥ 1 − 1e−12; callers must not rely on
    /// the masses summing to exactly 1.
    fn atoms(&self) -> Option<Vec<(f64, f64)>> {
        None
    }

    fn support_inf(&self) -> f64 {
        self.quantile(0.0)
    }

    fn support_sup(&self) -> f64 {
        self.quantile(1.0)
    }

    /// G_t(y) = ∫_{[0,y]} e^{−zt} P(dz); nondecreasing in y, total φ(t).
    fn exp_weighted_cdf(&self, t: f64, y: f64) -> f64 {
        if t == 0.0 {
            return self.cdf(y);
        }
        if y < self.support_inf() {
            return 0.0;
        }
        let hi = self.cdf(y).min(1.0 - 1e-15);
        integrate(
            |u| (-t * self.quantile(u)).exp(),
            0.0,
            hi,
            &QuadratureSpec::default(),
        )
        .expect("exp_weighted_cdf quadrature")
    }

    /// M_t(y) = ∫_{[0,y]} z e^{−zt} P(dz); total |φ′(t)|.
    fn exp_weighted_partial_mean(&self, t: f64, y: f64) -> f64 {
        if y < self.support_inf() {
            return 0.0;
        }
        let hi = self.cdf(y).min(1.0 - 1e-15);
        integrate(
            |u| {
                let q = self.quantile(u);
                q * (-t * q).exp()
            },
            0.0,
            hi,
            &QuadratureSpec::default(),
        )
        .expect("exp_weighted_partial_mean quadrature")
    }
}

//! The assembled limiting search-cost law: density, exact CDF with atom
//! corrections, quantiles, sampling and the total-variation distance to the
//! stationary law.

use std::sync::Arc;

use crate::numerics::{self, NumericsError, QuadratureSpec};
use crate::popularity::{Ordering, PopularityLaw};
use crate::simulate::{stream_rng, SampleBatch};
use rand::Rng;

use super::{
    checked_mean, g_inverse, phi_inverse, stationary_density, transient_density, AnalyticError,
    Result,
};

/// Limiting law of the normalized search cost, at a finite scaled time or in
/// equilibrium (`t = ∞`).
#[derive(Clone)]
pub struct SearchCostLaw {
    law: Arc<dyn PopularityLaw>,
    pub ordering: Ordering,
    pub t: f64,
    /// 1 − φ(t); the equilibrium piece lives below it, the out piece above.
    pub threshold: f64,
    /// |φ′(t)|/μ, the probability of the out piece.
    pub out_mass: f64,
    pub mu: f64,
    pub phi_t: f64,
    /// |φ′(t)| = ∫ z e^{−zt} P(dz).
    m_tot: f64,
}

impl SearchCostLaw {
    /// Law of S(t); construction verifies normalization and the threshold
    /// mass split, so an inconsistent popularity implementation fails here.
    pub fn transient(law: Arc<dyn PopularityLaw>, ordering: Ordering, t: f64) -> Result<Self> {
        if !(t > 0.0) || !t.is_finite() {
            return Err(AnalyticError::InvalidArgument(format!(
                "t must be positive and finite, got {t}"
            )));
        }
        let mu = checked_mean(law.as_ref())?;
        let phi_t = law.laplace(t);
        let m_tot = -law.dlaplace(t);
        let out_mass = m_tot / mu;
        let built = Self {
            law,
            ordering,
            t,
            threshold: 1.0 - phi_t,
            out_mass,
            mu,
            phi_t,
            m_tot,
        };
        built.check()?;
        Ok(built)
    }

    /// Law of S^{(∞)}; supported on [0, 1 − p₀].
    pub fn stationary(law: Arc<dyn PopularityLaw>) -> Result<Self> {
        let mu = checked_mean(law.as_ref())?;
        let p0 = law.zero_atom();
        let built = Self {
            law,
            ordering: Ordering::Exchangeable,
            t: f64::INFINITY,
            threshold: 1.0 - p0,
            out_mass: 0.0,
            mu,
            phi_t: p0,
            m_tot: 0.0,
        };
        built.check()?;
        Ok(built)
    }

    fn check(&self) -> std::result::Result<(), AnalyticError> {
        for (what, got, want) in [
            ("F(0)", self.cdf(0.0), 0.0),
            ("F(threshold)", self.cdf(self.threshold), 1.0 - self.out_mass),
            ("F(1)", self.cdf(1.0), 1.0),
        ] {
            if (got - want).abs() > 1e-8 {
                return Err(AnalyticError::ConstructionFailed(format!(
                    "{what} = {got}, expected {want}"
                )));
            }
        }
        Ok(())
    }

    pub fn popularity(&self) -> &dyn PopularityLaw {
        self.law.as_ref()
    }

    pub fn is_stationary(&self) -> bool {
        self.t.is_infinite()
    }

    /// Density at x; 0 outside the support.
    pub fn density(&self, x: f64) -> f64 {
        if !(0.0..=1.0).contains(&x) {
            return 0.0;
        }
        if self.is_stationary() {
            stationary_density(self.law.as_ref(), x).unwrap_or(0.0)
        } else {
            transient_density(self.law.as_ref(), self.ordering, self.t, x).unwrap_or(0.0)
        }
    }

    /// Exact CDF. Below the threshold F(x) = 1 + φ′(φ⁻¹(1−x))/μ; above it
    /// the integrated out-density in closed form, exact across atoms of P.
    pub fn cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        if x >= self.threshold {
            return self.out_cdf(x.min(1.0)).clamp(0.0, 1.0);
        }
        let s = phi_inverse(self.law.as_ref(), 1.0 - x);
        (1.0 + self.law.dlaplace(s) / self.mu).clamp(0.0, 1.0)
    }

    fn out_cdf(&self, x: f64) -> f64 {
        let eq_mass = 1.0 - self.out_mass;
        if self.is_stationary() {
            return 1.0;
        }
        let law = self.law.as_ref();
        match self.ordering {
            Ordering::Exchangeable => eq_mass + self.out_mass * (x - self.threshold) / self.phi_t,
            Ordering::Decreasing => {
                // Mass of out items landing in (x, 1] in weight space: items
                // with e^{−zt}-weighted rank above 1−x, plus the partially
                // covered atom at the generalized inverse.
                let v = (1.0 - x).max(0.0);
                let y = g_inverse(law, self.t, v);
                let g = law.exp_weighted_cdf(self.t, y);
                let m = law.exp_weighted_partial_mean(self.t, y);
                eq_mass + ((g - v) * y + (self.m_tot - m)) / self.mu
            }
            Ordering::Increasing => {
                let v = (x - self.threshold).min(self.phi_t);
                let y = g_inverse(law, self.t, v);
                let g = law.exp_weighted_cdf(self.t, y);
                let m = law.exp_weighted_partial_mean(self.t, y);
                eq_mass + (m - (g - v) * y) / self.mu
            }
        }
    }

    /// Generalized-inverse quantile; the equilibrium piece is inverted via
    /// −φ′(s) = μ(1−v), the out piece analytically (exchangeable) or by
    /// bisecting the exact CDF (monotone).
    pub fn quantile(&self, v: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&v) {
            return Err(AnalyticError::OutOfRange { what: "v", value: v, lo: 0.0, hi: 1.0 });
        }
        let eq_mass = 1.0 - self.out_mass;
        if v <= eq_mass {
            let s = super::dphi_inverse(self.law.as_ref(), self.mu * (1.0 - v));
            if s.is_infinite() {
                return Ok(self.threshold);
            }
            return Ok((1.0 - self.law.laplace(s)).min(self.threshold));
        }
        match self.ordering {
            Ordering::Exchangeable => {
                Ok(self.threshold + (v - eq_mass) / self.out_mass * self.phi_t)
            }
            _ => Ok(numerics::invert_monotone(
                |x| self.cdf(x),
                v,
                self.threshold,
                1.0,
                1e-13,
            )?),
        }
    }

    /// i.i.d. samples by inverse CDF; on the out event the exchangeable case
    /// reduces to an independent uniform on [1−φ(t), 1].
    pub fn sample(&self, count: usize, seed: u64) -> Result<SampleBatch> {
        if count == 0 {
            return Err(AnalyticError::InvalidArgument("count must be >= 1".into()));
        }
        let mut rng = stream_rng(seed, 0);
        let mut values = Vec::with_capacity(count);
        for _ in 0..count {
            values.push(self.quantile(rng.random::<f64>())?);
        }
        Ok(SampleBatch {
            values,
            normalized: true,
            profile_descriptor: format!("{} {:?} limiting", self.law.descriptor(), self.ordering),
            t_scaled: self.t,
            seed,
        })
    }

    /// E[S] = ∫₀¹ (1 − F(x)) dx.
    pub fn mean(&self) -> f64 {
        let spec = QuadratureSpec { abs_tol: 1e-10, rel_tol: 1e-10, max_depth: 50 };
        integrate_or_estimate(
            |x| 1.0 - self.cdf(x),
            0.0,
            1.0,
            &[self.threshold],
            &spec,
        )
    }

    /// Panel boundaries that make adaptive quadrature of the density (or of
    /// g(x)·density) reliable: the threshold, geometric ladders into the
    /// integrable singularities at 0 and at the threshold/1 edge, and the
    /// images of P's atoms where the out-density is piecewise constant.
    pub fn quadrature_breakpoints(&self) -> Vec<f64> {
        let mut breaks = vec![self.threshold];
        // f can diverge like a log or small power at 0 for heavy tails.
        for k in 1..=10 {
            breaks.push(10f64.powi(-k));
        }
        breaks.extend(self.out_breakpoints());
        breaks.retain(|b| *b > 0.0 && *b < 1.0);
        breaks
    }

    /// Interior x where the out-density is piecewise constant: images of the
    /// atoms of P under the ordering map.
    fn out_breakpoints(&self) -> Vec<f64> {
        let mut breaks = vec![];
        if self.is_stationary() {
            return breaks;
        }
        // The monotone out-density can spike (integrably) at the threshold
        // edge where the inverse runs into P's tail; a geometric panel
        // ladder keeps quadrature accurate there.
        if self.law.atoms().is_none() {
            let (edge, sign) = match self.ordering {
                Ordering::Decreasing => (self.threshold, 1.0),
                Ordering::Increasing => (1.0, -1.0),
                Ordering::Exchangeable => (f64::NAN, 0.0),
            };
            if sign != 0.0 {
                for k in 1..=12 {
                    let b = edge + sign * self.phi_t * 10f64.powi(-k);
                    if b > self.threshold && b < 1.0 {
                        breaks.push(b);
                    }
                }
            }
        }
        if let Some(atoms) = self.law.atoms() {
            let law = self.law.as_ref();
            for (a, m) in atoms {
                let g_hi = law.exp_weighted_cdf(self.t, a);
                let g_lo = g_hi - m * (-a * self.t).exp();
                let (lo, hi) = match self.ordering {
                    Ordering::Decreasing => (1.0 - g_hi, 1.0 - g_lo),
                    Ordering::Increasing => (self.threshold + g_lo, self.threshold + g_hi),
                    Ordering::Exchangeable => continue,
                };
                for b in [lo, hi] {
                    if b > self.threshold && b < 1.0 {
                        breaks.push(b);
                    }
                }
            }
        }
        breaks
    }
}

pub(crate) fn integrate_or_estimate<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    breaks: &[f64],
    spec: &QuadratureSpec,
) -> f64 {
    match numerics::integrate_panels(&f, a, b, breaks, spec) {
        Ok(v) => v,
        Err(NumericsError::ToleranceNotMet { estimate, .. }) => estimate,
        Err(_) => f64::NAN,
    }
}

/// Law of S(t) for the given ordering regime.
pub fn transient_law(
    law: Arc<dyn PopularityLaw>,
    ordering: Ordering,
    t: f64,
) -> Result<SearchCostLaw> {
    SearchCostLaw::transient(law, ordering, t)
}

/// (exact, bound): exact = ½∫|f_{S(t)} − f_{S∞}|, which only picks up mass
/// above the threshold since the laws agree below it; bound = 2|φ′(t)|/μ.
pub fn tv_distance_to_stationary(
    law: Arc<dyn PopularityLaw>,
    ordering: Ordering,
    t: f64,
) -> Result<(f64, f64)> {
    let transient = SearchCostLaw::transient(Arc::clone(&law), ordering, t)?;
    let bound = 2.0 * transient.out_mass;
    let mut breaks = transient.out_breakpoints();
    let p0_edge = 1.0 - law.zero_atom();
    if p0_edge > transient.threshold && p0_edge < 1.0 {
        breaks.push(p0_edge);
    }
    let spec = QuadratureSpec { abs_tol: 1e-10, rel_tol: 1e-9, max_depth: 52 };
    let integral = integrate_or_estimate(
        |x| {
            let f_t = transient.density(x);
            let f_s = stationary_density(law.as_ref(), x).unwrap_or(0.0);
            (f_t - f_s).abs()
        },
        transient.threshold,
        1.0,
        &breaks,
        &spec,
    );
    Ok((0.5 * integral, bound))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::popularity::{Bernoulli, Dirac, Gamma, Geometric, Pareto};
    use crate::stats::{dkw_band, ks_distance, EmpiricalCdf};

    fn arc(law: impl PopularityLaw + 'static) -> Arc<dyn PopularityLaw> {
        Arc::new(law)
    }

    const ORDERINGS: [Ordering; 3] =
        [Ordering::Exchangeable, Ordering::Decreasing, Ordering::Increasing];

    #[test]
    fn dirac_is_uniform_for_all_orderings() {
        for ord in ORDERINGS {
            let law = transient_law(arc(Dirac::new(1.0).unwrap()), ord, 1.0).unwrap();
            assert!((law.threshold - (1.0 - (-1.0f64).exp())).abs() < 1e-12);
            assert!((law.out_mass - (-1.0f64).exp()).abs() < 1e-12);
            for x in [0.1, 0.4, 0.632, 0.9, 1.0] {
                assert!((law.cdf(x) - x).abs() < 1e-9, "{ord:?} x={x}: {}", law.cdf(x));
            }
            assert!((law.mean() - 0.5).abs() < 1e-8);
        }
    }

    #[test]
    fn exponential_exchangeable_split() {
        let law = transient_law(arc(Gamma::new(1.0).unwrap()), Ordering::Exchangeable, 1.0)
            .unwrap();
        assert!((law.threshold - 0.5).abs() < 1e-12);
        assert!((law.out_mass - 0.25).abs() < 1e-12);
        assert!((law.cdf(0.75) - 0.875).abs() < 1e-12);
        // Equilibrium part: F(x) = 1 − (1−x)² below ½.
        for x in [0.1, 0.3, 0.5] {
            assert!((law.cdf(x) - (1.0 - (1.0 - x) * (1.0 - x))).abs() < 1e-9, "x={x}");
        }
    }

    #[test]
    fn cdf_matches_density_integral() {
        let spec = QuadratureSpec::default();
        let cases: Vec<(Arc<dyn PopularityLaw>, Ordering, f64)> = vec![
            (arc(Gamma::new(1.0).unwrap()), Ordering::Decreasing, 1.0),
            (arc(Gamma::new(1.0).unwrap()), Ordering::Increasing, 1.0),
            (arc(Gamma::new(2.5).unwrap()), Ordering::Decreasing, 0.5),
            (arc(Geometric::new(0.5).unwrap()), Ordering::Decreasing, 0.7),
            (arc(Geometric::new(0.5).unwrap()), Ordering::Increasing, 0.7),
            (arc(Bernoulli::new(0.3).unwrap()), Ordering::Decreasing, 1.3),
            (arc(Pareto::new(-0.5).unwrap()), Ordering::Decreasing, 2.0),
        ];
        for (p, ord, t) in cases {
            let law = transient_law(Arc::clone(&p), ord, t).unwrap();
            let breaks = law.quadrature_breakpoints();
            // f can diverge (integrably) at 0 for heavy-tailed P; start the
            // quadrature just inside and account for the skipped sliver.
            let lo = 1e-9;
            for x in [0.3, 0.7, 0.9, 0.99] {
                let num = integrate_or_estimate(|u| law.density(u), lo, x, &breaks, &spec)
                    + law.cdf(lo);
                let exact = law.cdf(x);
                assert!(
                    (num - exact).abs() < 5e-7,
                    "{} {ord:?} t={t} x={x}: {num} vs {exact}",
                    p.descriptor()
                );
            }
        }
    }

    #[test]
    fn quantile_round_trip() {
        for ord in ORDERINGS {
            let law = transient_law(arc(Gamma::new(1.0).unwrap()), ord, 1.0).unwrap();
            for v in [0.0, 0.1, 0.5, 0.74999, 0.76, 0.9, 0.999] {
                let x = law.quantile(v).unwrap();
                assert!((law.cdf(x) - v).abs() < 1e-7, "{ord:?} v={v}: x={x}");
            }
            assert!(law.quantile(1.5).is_err());
        }
    }

    #[test]
    fn stationary_law_support_and_mean() {
        let law = SearchCostLaw::stationary(arc(Bernoulli::new(0.5).unwrap())).unwrap();
        assert!((law.threshold - 0.5).abs() < 1e-12);
        assert_eq!(law.cdf(0.6), 1.0);
        // uniform on [0, ½]: mean ¼.
        assert!((law.mean() - 0.25).abs() < 1e-8);
        let exp = SearchCostLaw::stationary(arc(Gamma::new(1.0).unwrap())).unwrap();
        // density 2(1−x): mean 1/3.
        assert!((exp.mean() - 1.0 / 3.0).abs() < 1e-8);
    }

    #[test]
    fn sampling_matches_law() {
        let law = transient_law(arc(Gamma::new(1.0).unwrap()), Ordering::Exchangeable, 1.0)
            .unwrap();
        let batch = law.sample(100_000, 42).unwrap();
        let frac = batch.values.iter().filter(|v| **v > 0.5).count() as f64 / 1e5;
        assert!((frac - 0.25).abs() < 3.0 * (0.1875f64 / 1e5).sqrt(), "{frac}");

        let uni = transient_law(arc(Dirac::new(1.0).unwrap()), Ordering::Decreasing, 1.0)
            .unwrap();
        let batch = uni.sample(100_000, 7).unwrap();
        let ecdf = EmpiricalCdf::new(&batch.values).unwrap();
        let ks = ks_distance(&ecdf, |x| x.clamp(0.0, 1.0));
        assert!(ks < dkw_band(100_000, 0.99).unwrap(), "{ks}");
    }

    #[test]
    fn sample_mean_matches_quadrature_mean() {
        for ord in [Ordering::Decreasing, Ordering::Increasing] {
            let law = transient_law(arc(Geometric::new(0.5).unwrap()), ord, 0.7).unwrap();
            let batch = law.sample(60_000, 9).unwrap();
            let m = batch.values.iter().sum::<f64>() / batch.count() as f64;
            let sd = (batch.values.iter().map(|v| (v - m) * (v - m)).sum::<f64>()
                / batch.count() as f64)
                .sqrt();
            let se = sd / (batch.count() as f64).sqrt();
            assert!((m - law.mean()).abs() < 3.0 * se, "{ord:?}: {m} vs {}", law.mean());
        }
    }

    #[test]
    fn tv_examples() {
        let (exact, bound) =
            tv_distance_to_stationary(arc(Dirac::new(1.0).unwrap()), Ordering::Exchangeable, 2.0)
                .unwrap();
        assert!(exact < 1e-8, "{exact}");
        assert!((bound - 2.0 * (-2.0f64).exp()).abs() < 1e-12);

        let (exact, bound) =
            tv_distance_to_stationary(arc(Gamma::new(1.0).unwrap()), Ordering::Exchangeable, 100.0)
                .unwrap();
        assert!(bound <= 2.0 / (101.0f64).powi(2) + 1e-15);
        assert!(exact <= bound + 1e-9);

        for ord in ORDERINGS {
            for t in [0.25, 1.0, 4.0] {
                let (exact, bound) =
                    tv_distance_to_stationary(arc(Gamma::new(1.0).unwrap()), ord, t).unwrap();
                assert!(exact <= bound + 1e-7, "{ord:?} t={t}: {exact} vs {bound}");
                assert!(exact >= 0.0);
            }
        }
        let (exact, _) =
            tv_distance_to_stationary(arc(Gamma::new(1.0).unwrap()), Ordering::Exchangeable, 1.0)
                .unwrap();
        assert!(exact <= 0.5);
    }

    #[test]
    fn normalization_across_laws() {
        let laws: Vec<Arc<dyn PopularityLaw>> = vec![
            arc(Gamma::new(1.0).unwrap()),
            arc(Geometric::new(0.5).unwrap()),
            arc(Pareto::new(-0.5).unwrap()),
            arc(Bernoulli::new(0.3).unwrap()),
        ];
        let spec = QuadratureSpec { abs_tol: 1e-9, rel_tol: 1e-9, max_depth: 50 };
        for p in laws {
            for ord in ORDERINGS {
                for t in [0.25, 1.0, 4.0] {
                    let law = transient_law(Arc::clone(&p), ord, t).unwrap();
                    let breaks = law.quadrature_breakpoints();
                    let total =
                        integrate_or_estimate(|x| law.density(x), 1e-9, 1.0, &breaks, &spec);
                    assert!(
                        (total - 1.0).abs() < 1e-6,
                        "{} {ord:?} t={t}: {total}",
                        p.descriptor()
                    );
                }
            }
        }
    }
}

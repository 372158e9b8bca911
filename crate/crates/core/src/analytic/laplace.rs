//! Laplace transforms of the two pieces of the limiting transient law,
//! computed from φ and the partial transform G_t rather than from the
//! density, so the two agree only if both are right.

use crate::numerics::QuadratureSpec;
use crate::popularity::{Ordering, PopularityLaw};

use super::law::integrate_or_estimate;
use super::{checked_mean, AnalyticError, Result};

/// E[e^{−λS(t)}; equilibrium piece] = (1/μ)∫₀ᵗ φ″(u) e^{−λ(1−φ(u))} du.
/// At λ=0 this is the equilibrium mass 1 − |φ′(t)|/μ.
pub fn laplace_equilibrium_limit(law: &dyn PopularityLaw, t: f64, lambda: f64) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(AnalyticError::InvalidArgument(format!("t must be >= 0, got {t}")));
    }
    if !(lambda >= 0.0) {
        return Err(AnalyticError::InvalidArgument(format!(
            "lambda must be >= 0, got {lambda}"
        )));
    }
    let mu = checked_mean(law)?;
    if t == 0.0 {
        return Ok(0.0);
    }
    // u = t·v⁴ flattens the integrable φ″ singularity at u = 0 (heavy-tailed
    // laws with infinite second moment).
    let spec = QuadratureSpec { abs_tol: 1e-11, rel_tol: 1e-10, max_depth: 52 };
    let integral = integrate_or_estimate(
        |v| {
            if v <= 0.0 {
                return 0.0;
            }
            let u = t * v.powi(4);
            4.0 * t * v.powi(3)
                * law.d2laplace(u)
                * (-lambda * (1.0 - law.laplace(u))).exp()
        },
        0.0,
        1.0,
        &[],
        &spec,
    );
    Ok(integral / mu)
}

/// G_t along the quantile parametrization, exact across atoms: for u inside
/// an atom of P the value interpolates linearly, matching the uniform spread
/// of the atom's items over their position interval.
fn hat_g(law: &dyn PopularityLaw, t: f64, atoms: Option<&[(f64, f64)]>, u: f64) -> f64 {
    if let Some(atoms) = atoms {
        let mut acc = 0.0;
        let mut cum = 0.0;
        for (a, m) in atoms {
            let w = (-a * t).exp();
            if u <= cum + m {
                return acc + (u - cum) * w;
            }
            acc += m * w;
            cum += m;
        }
        return acc;
    }
    law.exp_weighted_cdf(t, law.quantile(u))
}

/// E[e^{−λS(t)}; out piece]. Exchangeable: the closed form
/// (|φ′(t)|/μ)·(e^{−λ(1−φ(t))} − e^{−λ})/(λφ(t)); monotone: the weight-space
/// integral (1/μ)∫ z e^{−zt} e^{−λx(z)} P(dz) with the position map x(z)
/// determined by the ordering.
pub fn laplace_out_limit(
    law: &dyn PopularityLaw,
    ordering: Ordering,
    t: f64,
    lambda: f64,
) -> Result<f64> {
    if !(t > 0.0) {
        return Err(AnalyticError::InvalidArgument(format!("t must be > 0, got {t}")));
    }
    if !(lambda >= 0.0) {
        return Err(AnalyticError::InvalidArgument(format!(
            "lambda must be >= 0, got {lambda}"
        )));
    }
    let mu = checked_mean(law)?;
    let phi_t = law.laplace(t);
    let out_mass = -law.dlaplace(t) / mu;
    let threshold = 1.0 - phi_t;
    if let Ordering::Exchangeable = ordering {
        let z = lambda * phi_t;
        // expm1 keeps the λφ → 0 limit (= out_mass·e^{−λ·threshold-ish}) exact.
        let factor = if z < 1e-12 { 1.0 + z / 2.0 } else { z.exp_m1() / z };
        return Ok(out_mass * (-lambda).exp() * factor);
    }
    let atoms = law.atoms();
    let mut breaks: Vec<f64> = vec![];
    if let Some(atoms) = &atoms {
        let mut cum = 0.0;
        for (_, m) in atoms {
            cum += m;
            if cum < 1.0 {
                breaks.push(cum);
            }
        }
    }
    // x(z) = threshold + (φ(t) − G_t(z)) decreasing, threshold + G_t(z⁻)
    // increasing; the integrand vanishes fast at the upper quantile end, so
    // the 1e−12 tail cut is below quadrature tolerance.
    let spec = QuadratureSpec { abs_tol: 1e-11, rel_tol: 1e-10, max_depth: 52 };
    let integral = integrate_or_estimate(
        |u| {
            let z = law.quantile(u);
            if !(z > 0.0) || !z.is_finite() {
                return 0.0;
            }
            let g = hat_g(law, t, atoms.as_deref(), u);
            let h = match ordering {
                Ordering::Decreasing => phi_t - g,
                Ordering::Increasing => g,
                Ordering::Exchangeable => unreachable!(),
            };
            z * (-z * t).exp() * (-lambda * h).exp()
        },
        0.0,
        1.0 - 1e-12,
        &breaks,
        &spec,
    );
    Ok((-lambda * threshold).exp() * integral / mu)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics;
    use crate::popularity::{Bernoulli, Dirac, Gamma, Geometric, Pareto};

    #[test]
    fn equilibrium_limit_examples() {
        let exp = Gamma::new(1.0).unwrap();
        assert_eq!(laplace_equilibrium_limit(&exp, 0.0, 1.0).unwrap(), 0.0);
        let a = laplace_equilibrium_limit(&exp, 1.0, 0.0).unwrap();
        assert!((a - 0.75).abs() < 1e-9, "{a}");
        // Independent route: ∫₀^{½} 2(1−x) e^{−x} dx.
        let spec = QuadratureSpec::default();
        let direct = numerics::integrate(
            |x: f64| 2.0 * (1.0 - x) * (-x).exp(),
            0.0,
            0.5,
            &spec,
        )
        .unwrap();
        let b = laplace_equilibrium_limit(&exp, 1.0, 1.0).unwrap();
        assert!((b - direct).abs() < 1e-8, "{b} vs {direct}");
    }

    #[test]
    fn out_limit_exchangeable_closed_form() {
        let exp = Gamma::new(1.0).unwrap();
        let v = laplace_out_limit(&exp, Ordering::Exchangeable, 1.0, 2.0).unwrap();
        let expected = 0.25 * ((-1.0f64).exp() - (-2.0f64).exp()) / (2.0 * 0.5);
        assert!((v - expected).abs() < 1e-12, "{v} vs {expected}");
        for ord in [Ordering::Exchangeable, Ordering::Decreasing, Ordering::Increasing] {
            let v = laplace_out_limit(&exp, ord, 1.0, 0.0).unwrap();
            assert!((v - 0.25).abs() < 1e-8, "{ord:?}: {v}");
        }
    }

    #[test]
    fn pieces_sum_to_full_transform_of_density() {
        use crate::analytic::transient_law;
        use crate::analytic::law::integrate_or_estimate;
        use std::sync::Arc;
        let laws: Vec<Arc<dyn crate::popularity::PopularityLaw>> = vec![
            Arc::new(Gamma::new(1.0).unwrap()),
            Arc::new(Geometric::new(0.5).unwrap()),
            Arc::new(Bernoulli::new(0.3).unwrap()),
            Arc::new(Pareto::new(-0.5).unwrap()),
            Arc::new(Dirac::new(2.0).unwrap()),
        ];
        let spec = QuadratureSpec { abs_tol: 1e-10, rel_tol: 1e-9, max_depth: 50 };
        for p in laws {
            for ord in [Ordering::Exchangeable, Ordering::Decreasing, Ordering::Increasing] {
                for t in [0.5, 2.0] {
                    let sc = transient_law(Arc::clone(&p), ord, t).unwrap();
                    for lambda in [0.0, 1.0, 5.0] {
                        let lhs = laplace_equilibrium_limit(p.as_ref(), t, lambda).unwrap()
                            + laplace_out_limit(p.as_ref(), ord, t, lambda).unwrap();
                        // start just inside 0: f may diverge there.
                        let rhs = integrate_or_estimate(
                            |x| (-lambda * x).exp() * sc.density(x),
                            1e-9,
                            1.0,
                            &sc.quadrature_breakpoints(),
                            &spec,
                        );
                        assert!(
                            (lhs - rhs).abs() < 1e-5,
                            "{} {ord:?} t={t} λ={lambda}: {lhs} vs {rhs}",
                            p.descriptor()
                        );
                    }
                }
            }
        }
    }
}

//! Empirical measures ν⁽ⁿ⁾ of scaled popularities and the Wasserstein-1
//! distance used to test their convergence.

use super::{PopularityError, PopularityLaw, RequestProfile, Result};

/// A finitely supported probability measure on the line.
#[derive(Clone, Debug)]
pub struct DiscreteMeasure {
    /// (location, mass) pairs; masses are nonnegative and sum to 1.
    pub atoms: Vec<(f64, f64)>,
}

impl DiscreteMeasure {
    pub fn new(mut atoms: Vec<(f64, f64)>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(PopularityError::InvalidParameter("no atoms".into()));
        }
        let total: f64 = atoms.iter().map(|(_, m)| m).sum();
        if atoms.iter().any(|(x, m)| !x.is_finite() || *m < 0.0) || (total - 1.0).abs() > 1e-9 {
            return Err(PopularityError::InvalidParameter(format!(
                "atom masses must be >= 0 and sum to 1 (got {total})"
            )));
        }
        atoms.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        Ok(Self { atoms })
    }

    pub fn mean(&self) -> f64 {
        self.atoms.iter().map(|(x, m)| x * m).sum()
    }
}

/// ν⁽ⁿ⁾ = (1/n) Σ δ_{nμp_i}: the empirical measure of scaled popularities.
pub fn empirical_measure(profile: &RequestProfile, mu: f64) -> Result<DiscreteMeasure> {
    if !(mu > 0.0) {
        return Err(PopularityError::InvalidParameter("mu must be > 0".into()));
    }
    let n = profile.n as f64;
    let mass = 1.0 / n;
    DiscreteMeasure::new(
        profile.popularities().iter().map(|p| (n * mu * p, mass)).collect(),
    )
}

/// W1 between two finitely supported measures: ∫ |F_a − F_b| dx over the
/// merged support.
pub fn wasserstein1(a: &DiscreteMeasure, b: &DiscreteMeasure) -> f64 {
    // Merge the two sorted atom lists, tracking the running CDF gap.
    let mut pts: Vec<(f64, f64, f64)> = a
        .atoms
        .iter()
        .map(|&(x, m)| (x, m, 0.0))
        .chain(b.atoms.iter().map(|&(x, m)| (x, 0.0, m)))
        .collect();
    pts.sort_by(|p, q| p.0.partial_cmp(&q.0).unwrap());
    let mut dist = 0.0f64;
    let mut fa = 0.0f64;
    let mut fb = 0.0f64;
    let mut prev = pts[0].0;
    for (x, ma, mb) in pts {
        dist += (fa - fb).abs() * (x - prev);
        fa += ma;
        fb += mb;
        prev = x;
    }
    dist
}

/// W1 between a discrete measure and a law with finite mean, via a
/// mid-quantile discretization of the law (bias O(range/points)).
pub fn wasserstein1_to_law(a: &DiscreteMeasure, law: &dyn PopularityLaw, points: usize) -> f64 {
    let k = points.max(1);
    let mass = 1.0 / k as f64;
    let atoms: Vec<(f64, f64)> = (0..k)
        .map(|i| (law.quantile((i as f64 + 0.5) / k as f64), mass))
        .collect();
    let b = DiscreteMeasure::new(atoms).expect("law discretization");
    wasserstein1(a, &b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::popularity::{make_iid_profile, Gamma, Ordering};

    fn dirac_at(x: f64) -> DiscreteMeasure {
        DiscreteMeasure::new(vec![(x, 1.0)]).unwrap()
    }

    #[test]
    fn w1_basics() {
        assert_eq!(wasserstein1(&dirac_at(0.0), &dirac_at(0.0)), 0.0);
        assert!((wasserstein1(&dirac_at(0.0), &dirac_at(1.0)) - 1.0).abs() < 1e-15);
        let half = DiscreteMeasure::new(vec![(0.0, 0.5), (1.0, 0.5)]).unwrap();
        assert!((wasserstein1(&half, &dirac_at(0.5)) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn empirical_measure_locations() {
        let law = crate::popularity::Dirac::new(1.0).unwrap();
        let p = make_iid_profile(&law, 4, Ordering::Exchangeable, 1).unwrap();
        let m = empirical_measure(&p, 1.0).unwrap();
        for (x, mass) in &m.atoms {
            assert!((x - 1.0).abs() < 1e-15);
            assert!((mass - 0.25).abs() < 1e-15);
        }

        // weights (1,3), mu = 2: n·mu·p = 2·2·(0.25, 0.75) = (1, 3)
        let p = RequestProfile {
            n: 2,
            weights: vec![1.0, 3.0],
            ordering: Ordering::Increasing,
            scale: 1.0,
            seed: 0,
            family: "manual".into(),
            rejected_zero_draws: 0,
        };
        let m = empirical_measure(&p, 2.0).unwrap();
        assert!((m.atoms[0].0 - 1.0).abs() < 1e-15);
        assert!((m.atoms[1].0 - 3.0).abs() < 1e-15);
    }

    use crate::popularity::RequestProfile;

    #[test]
    fn iid_exp_empirical_close_to_law() {
        let law = Gamma::new(1.0).unwrap();
        let p = make_iid_profile(&law, 10_000, Ordering::Exchangeable, 12).unwrap();
        let m = empirical_measure(&p, 1.0).unwrap();
        let w = wasserstein1_to_law(&m, &law, 100_000);
        assert!(w < 0.05, "W1 = {w}");
    }
}

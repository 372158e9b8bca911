//! Exact finite-n search-cost laws: the requested item's position splits into
//! an equilibrium part (item already requested before t) and an
//! out-of-equilibrium part (first request after t), each a Poisson-binomial
//! mixture. Positions are 0-indexed internally (number of items in front);
//! the 1-based cost is k + 1.

use thiserror::Error;

use crate::popularity::RequestProfile;

#[derive(Debug, Error)]
pub enum ExactError {
    #[error("bernoulli parameter {0} outside [0,1]")]
    BadParameter(f64),
    #[error("profile size {n} exceeds the exact-law cap {cap}; use the Monte Carlo samplers")]
    TooLarge { n: usize, cap: usize },
    #[error("stationary law requires all popularities positive")]
    ZeroRate,
    #[error("item index {0} out of range")]
    BadIndex(usize),
    #[error("time must be >= 0, got {0}")]
    BadTime(f64),
}

pub type Result<T> = std::result::Result<T, ExactError>;

/// Largest n for which the O(n³·quadrature) exact law is computed.
pub const EXACT_N_CAP: usize = 64;

/// A (sub-)probability vector over positions 0..n−1.
#[derive(Clone, Debug)]
pub struct DiscretePmf {
    pub probs: Vec<f64>,
}

impl DiscretePmf {
    pub fn zeros(n: usize) -> Self {
        Self { probs: vec![0.0; n] }
    }

    pub fn total(&self) -> f64 {
        self.probs.iter().sum()
    }

    /// Mean 1-based position under the (sub-)pmf, normalized by its mass.
    pub fn mean_cost(&self) -> f64 {
        let total = self.total();
        self.probs
            .iter()
            .enumerate()
            .map(|(k, p)| (k as f64 + 1.0) * p)
            .sum::<f64>()
            / total
    }
}

/// Pmf of a sum of independent Bernoulli(q_j) by iterative convolution.
pub fn poisson_binomial(qs: &[f64]) -> Result<DiscretePmf> {
    for &q in qs {
        if !(0.0..=1.0).contains(&q) {
            return Err(ExactError::BadParameter(q));
        }
    }
    let mut probs = vec![0.0; qs.len() + 1];
    probs[0] = 1.0;
    for (m, &q) in qs.iter().enumerate() {
        for k in (0..=m + 1).rev() {
            let carry = if k > 0 { probs[k - 1] } else { 0.0 };
            probs[k] = probs[k] * (1.0 - q) + carry * q;
        }
    }
    Ok(DiscretePmf { probs })
}

// ---------------------------------------------------------------------------
// Vector-valued adaptive Simpson over the mixing time u
// ---------------------------------------------------------------------------

fn vec_simpson(fa: &[f64], fm: &[f64], fb: &[f64], h: f64, out: &mut [f64]) {
    for i in 0..out.len() {
        out[i] = h / 6.0 * (fa[i] + 4.0 * fm[i] + fb[i]);
    }
}

#[allow(clippy::too_many_arguments)]
fn vec_adaptive<F: Fn(f64) -> Vec<f64>>(
    f: &F,
    a: f64,
    b: f64,
    fa: &[f64],
    fm: &[f64],
    fb: &[f64],
    whole: &[f64],
    tol_per_width: f64,
    depth: u32,
    acc: &mut [f64],
) {
    let m = 0.5 * (a + b);
    let flm = f(0.5 * (a + m));
    let frm = f(0.5 * (m + b));
    let dim = acc.len();
    let mut left = vec![0.0; dim];
    let mut right = vec![0.0; dim];
    vec_simpson(fa, &flm, fm, m - a, &mut left);
    vec_simpson(fm, &frm, fb, b - m, &mut right);
    let mut err = 0.0f64;
    for i in 0..dim {
        err = err.max((left[i] + right[i] - whole[i]).abs() / 15.0);
    }
    if err <= tol_per_width * (b - a) || depth == 0 {
        for i in 0..dim {
            acc[i] += left[i] + right[i] + (left[i] + right[i] - whole[i]) / 15.0;
        }
        return;
    }
    vec_adaptive(f, a, m, fa, &flm, fm, &left, tol_per_width, depth - 1, acc);
    vec_adaptive(f, m, b, fm, &frm, fb, &right, tol_per_width, depth - 1, acc);
}

/// Integrate a vector-valued integrand over consecutive panels, componentwise
/// absolute tolerance ~1e-11.
fn integrate_vec<F: Fn(f64) -> Vec<f64>>(f: F, a: f64, b: f64, breaks: &[f64], dim: usize) -> Vec<f64> {
    let mut pts: Vec<f64> = breaks.iter().copied().filter(|x| *x > a && *x < b).collect();
    pts.push(a);
    pts.push(b);
    pts.sort_by(|x, y| x.partial_cmp(y).unwrap());
    pts.dedup();
    let mut acc = vec![0.0; dim];
    let tol_per_width = 1e-11 / (b - a).max(1e-300);
    for w in pts.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        if hi <= lo {
            continue;
        }
        let fa = f(lo);
        let m = 0.5 * (lo + hi);
        let fm = f(m);
        let fb = f(hi);
        let mut whole = vec![0.0; dim];
        vec_simpson(&fa, &fm, &fb, hi - lo, &mut whole);
        vec_adaptive(&f, lo, hi, &fa, &fm, &fb, &whole, tol_per_width, 48, &mut acc);
    }
    acc
}

/// Quadrature panel edges tracking the fastest popularity scale p_max.
fn time_panels(ps: &[f64], t: f64) -> Vec<f64> {
    let p_max = ps.iter().cloned().fold(0.0f64, f64::max);
    let p_min = ps.iter().cloned().filter(|p| *p > 0.0).fold(f64::INFINITY, f64::min);
    let mut breaks = Vec::new();
    for &mass in &[2.0f64, 10.0, 100.0] {
        breaks.push(mass.ln() / p_max);
    }
    // Slow scale too, for stationary-style long horizons.
    for j in 1..=12 {
        breaks.push((10.0f64).powi(j).ln() / p_min);
    }
    breaks.retain(|u| *u < t);
    breaks
}

fn check_profile(profile: &RequestProfile, t: f64) -> Result<Vec<f64>> {
    if profile.n > EXACT_N_CAP {
        return Err(ExactError::TooLarge { n: profile.n, cap: EXACT_N_CAP });
    }
    if !(t >= 0.0) {
        return Err(ExactError::BadTime(t));
    }
    Ok(profile.popularities())
}

/// Equilibrium-part pmf vector for item i at time t:
/// ∫₀ᵗ p_i e^{−p_i u} PB((1−e^{−p_j u})_{j≠i}) du, over positions k = 0..n−1.
fn marginal_e_vec(ps: &[f64], i: usize, t: f64) -> Vec<f64> {
    let n = ps.len();
    let pi = ps[i];
    let integrand = |u: f64| -> Vec<f64> {
        let qs: Vec<f64> = ps
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != i)
            .map(|(_, p)| -(-p * u).exp_m1())
            .collect();
        let pb = poisson_binomial(&qs).expect("parameters in [0,1]");
        let w = pi * (-pi * u).exp();
        pb.probs.iter().map(|x| w * x).collect()
    };
    integrate_vec(integrand, 0.0, t, &time_panels(ps, t), n)
}

/// Out-of-equilibrium pmf vector for item i at time t:
/// PB with q_j = 1 for j < i (predecessors always count) and
/// q_j = 1 − e^{−p_j t} for j > i, scaled by e^{−p_i t}.
fn marginal_o_vec(ps: &[f64], i: usize, t: f64) -> Vec<f64> {
    let qs: Vec<f64> = ps
        .iter()
        .enumerate()
        .filter(|(j, _)| *j != i)
        .map(|(j, p)| if j < i { 1.0 } else { -(-p * t).exp_m1() })
        .collect();
    let pb = poisson_binomial(&qs).expect("parameters in [0,1]");
    let w = (-ps[i] * t).exp();
    pb.probs.iter().map(|x| w * x).collect()
}

/// ℙ{S(t) = k+1, item i already requested} for the given item.
pub fn exact_marginal_e(profile: &RequestProfile, i: usize, t: f64, k: usize) -> Result<f64> {
    let ps = check_profile(profile, t)?;
    if i >= profile.n || k >= profile.n {
        return Err(ExactError::BadIndex(i.max(k)));
    }
    Ok(marginal_e_vec(&ps, i, t)[k])
}

/// ℙ{S(t) = k+1, item i not yet requested}.
pub fn exact_marginal_o(profile: &RequestProfile, i: usize, t: f64, k: usize) -> Result<f64> {
    let ps = check_profile(profile, t)?;
    if i >= profile.n || k >= profile.n {
        return Err(ExactError::BadIndex(i.max(k)));
    }
    Ok(marginal_o_vec(&ps, i, t)[k])
}

/// The two partial pmfs of the search cost at time t (unit-total-rate
/// scale): equilibrium part and out-of-equilibrium part. Masses sum to 1.
pub fn exact_search_cost_law(profile: &RequestProfile, t: f64) -> Result<(DiscretePmf, DiscretePmf)> {
    let ps = check_profile(profile, t)?;
    let n = profile.n;
    let mut e = DiscretePmf::zeros(n);
    let mut o = DiscretePmf::zeros(n);
    for i in 0..n {
        if ps[i] == 0.0 {
            // Never requested: contributes weight p_i = 0 to the mixture.
            continue;
        }
        let ev = marginal_e_vec(&ps, i, t);
        let ov = marginal_o_vec(&ps, i, t);
        for k in 0..n {
            e.probs[k] += ps[i] * ev[k];
            o.probs[k] += ps[i] * ov[k];
        }
    }
    Ok((e, o))
}

/// The stationary search-cost law: the t → ∞ limit of the equilibrium part,
/// truncated where e^{−p_min T} ≤ 1e−12.
pub fn exact_stationary_law(profile: &RequestProfile) -> Result<DiscretePmf> {
    let ps = check_profile(profile, 0.0)?;
    if ps.iter().any(|p| *p <= 0.0) {
        return Err(ExactError::ZeroRate);
    }
    let p_min = ps.iter().cloned().fold(f64::INFINITY, f64::min);
    let horizon = (1e12f64).ln() / p_min;
    let n = profile.n;
    let mut pmf = DiscretePmf::zeros(n);
    for i in 0..n {
        let ev = marginal_e_vec(&ps, i, horizon);
        for k in 0..n {
            pmf.probs[k] += ps[i] * ev[k];
        }
    }
    Ok(pmf)
}

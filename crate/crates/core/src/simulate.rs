//! Monte Carlo samplers of the finite-n search cost: an event-driven
//! move-to-front chain (ground-truth dynamics), an O(n) last-request-time
//! sampler equivalent in law, and a stationary sampler.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::popularity::{Ordering, PopularityLaw, RequestProfile};

#[derive(Debug, Error)]
pub enum SimulateError {
    #[error("time must be >= 0, got {0}")]
    BadTime(f64),
    #[error("sample count must be >= 1")]
    EmptyBatch,
    #[error("degenerate profile: total weight is zero")]
    DegenerateProfile,
    #[error("mu must be > 0, got {0}")]
    BadMu(f64),
    #[error("profile construction failed: {0}")]
    Profile(#[from] crate::popularity::PopularityError),
}

pub type Result<T> = std::result::Result<T, SimulateError>;

/// A batch of i.i.d. search-cost samples.
#[derive(Clone, Debug)]
pub struct SampleBatch {
    /// Costs; normalized to S/n ∈ (0, 1] when `normalized` is set, raw
    /// 1-based integer positions otherwise.
    pub values: Vec<f64>,
    pub normalized: bool,
    pub profile_descriptor: String,
    /// Time in the unit-total-rate scale consumed by the samplers.
    pub t_scaled: f64,
    pub seed: u64,
}

impl SampleBatch {
    pub fn count(&self) -> usize {
        self.values.len()
    }
}

/// Per-sample RNG: one ChaCha stream per sample index, so batches are
/// reproducible and order-independent.
pub fn stream_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

fn pick(ps: &[f64], rng: &mut impl Rng) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, p) in ps.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    ps.len() - 1
}

/// (t_unit_rate, t_original): the unit-total-rate time nμt consumed by the
/// samplers, and the same instant in the original scale nμt/Σw.
pub fn scaled_time(profile: &RequestProfile, mu: f64, t: f64) -> Result<(f64, f64)> {
    if !(mu > 0.0) {
        return Err(SimulateError::BadMu(mu));
    }
    let total = profile.total_weight();
    if !(total > 0.0) {
        return Err(SimulateError::DegenerateProfile);
    }
    let t_unit = profile.n as f64 * mu * t;
    Ok((t_unit, t_unit / total))
}

fn event_driven_with(ps: &[f64], t: f64, rng: &mut impl Rng) -> usize {
    let n = ps.len();
    let mut list: Vec<usize> = (0..n).collect();
    // Unit-rate request stream with item marks ~ p.
    let mut s = 0.0f64;
    loop {
        s += -rng.random::<f64>().ln();
        let item = pick(ps, rng);
        let pos = list.iter().position(|&x| x == item).unwrap();
        if s >= t {
            return pos + 1;
        }
        list.remove(pos);
        list.insert(0, item);
    }
}

/// 1-based position of the first item requested at or after time t, starting
/// from the initial order, simulating the chain request by request.
pub fn simulate_event_driven(profile: &RequestProfile, t: f64, seed: u64) -> Result<usize> {
    if !(t >= 0.0) {
        return Err(SimulateError::BadTime(t));
    }
    Ok(event_driven_with(&profile.popularities(), t, &mut stream_rng(seed, 0)))
}

fn transient_fast_with(ps: &[f64], t: f64, rng: &mut impl Rng) -> usize {
    // Reversed-time construction: each item is "requested" within [0, t) with
    // probability 1−e^{−pt}; a requested item's age since last request is
    // Exp(p) truncated to [0, t), sampled by inverse CDF.
    let item = pick(ps, rng);
    let q_item = -(-ps[item] * t).exp_m1();
    let u: f64 = rng.random();
    if u < q_item {
        // Requested: cost = 1 + #{requested j with smaller age}.
        let age = -(-(rng.random::<f64>() * q_item)).ln_1p() / ps[item];
        let mut cost = 1usize;
        for (j, p) in ps.iter().enumerate() {
            if j == item {
                continue;
            }
            let qj = -(-p * t).exp_m1();
            if rng.random::<f64>() < qj {
                let aj = -(-(rng.random::<f64>() * qj)).ln_1p() / p;
                if aj < age {
                    cost += 1;
                }
            }
        }
        cost
    } else {
        // Unrequested: behind all requested items and the unrequested
        // predecessors in the initial order.
        let mut cost = 1usize;
        for (j, p) in ps.iter().enumerate() {
            if j == item {
                continue;
            }
            let qj = -(-p * t).exp_m1();
            if rng.random::<f64>() < qj {
                cost += 1;
            } else if j < item {
                cost += 1;
            }
        }
        cost
    }
}

/// Equivalent in law to [`simulate_event_driven`] at time t, in O(n).
pub fn sample_transient_fast(profile: &RequestProfile, t: f64, seed: u64) -> Result<usize> {
    if !(t >= 0.0) {
        return Err(SimulateError::BadTime(t));
    }
    Ok(transient_fast_with(&profile.popularities(), t, &mut stream_rng(seed, 0)))
}

fn stationary_with(ps: &[f64], rng: &mut impl Rng) -> usize {
    if ps.iter().any(|p| *p <= 0.0) {
        // Zero-rate items never reach equilibrium; fall back to the transient
        // sampler at a horizon with bias bound e^{−p_min⁺·T} ≤ 1e−12.
        let p_min = ps.iter().cloned().filter(|p| *p > 0.0).fold(f64::INFINITY, f64::min);
        return transient_fast_with(ps, (1e12f64).ln() / p_min, rng);
    }
    // Last-request ages E_j ~ Exp(p_j); cost = 1 + #{j: E_j < E_item}.
    let item = pick(ps, rng);
    let e_item = -rng.random::<f64>().ln() / ps[item];
    let mut cost = 1usize;
    for (j, p) in ps.iter().enumerate() {
        if j != item && -rng.random::<f64>().ln() / p < e_item {
            cost += 1;
        }
    }
    cost
}

/// One stationary search-cost draw.
pub fn sample_stationary(profile: &RequestProfile, seed: u64) -> usize {
    stationary_with(&profile.popularities(), &mut stream_rng(seed, 0))
}

fn iid_weights(law: &dyn PopularityLaw, n: usize, ordering: Ordering, rng: &mut impl Rng) -> Vec<f64> {
    let mut w: Vec<f64>;
    loop {
        w = (0..n).map(|_| law.sample(rng)).collect();
        if w.iter().any(|x| *x > 0.0) {
            break;
        }
    }
    match ordering {
        Ordering::Exchangeable => {}
        Ordering::Decreasing => w.sort_by(|a, b| b.partial_cmp(a).unwrap()),
        Ordering::Increasing => w.sort_by(|a, b| a.partial_cmp(b).unwrap()),
    }
    w
}

fn normalize(mut w: Vec<f64>) -> Vec<f64> {
    let total: f64 = w.iter().sum();
    for x in &mut w {
        *x /= total;
    }
    w
}

/// m normalized transient costs S⁽ⁿ⁾(nμt)/n, with a fresh i.i.d. weight
/// profile per sample (annealed); `quenched` reuses one profile drawn from
/// stream 0 for every sample.
pub fn batch_transient(
    law: &dyn PopularityLaw,
    n: usize,
    ordering: Ordering,
    t: f64,
    m: usize,
    seed: u64,
    quenched: bool,
) -> Result<SampleBatch> {
    if m == 0 {
        return Err(SimulateError::EmptyBatch);
    }
    if !(t >= 0.0) {
        return Err(SimulateError::BadTime(t));
    }
    let t_unit = n as f64 * law.mean() * t;
    let fixed = if quenched {
        Some(normalize(iid_weights(law, n, ordering, &mut stream_rng(seed, 0))))
    } else {
        None
    };
    let mut values = Vec::with_capacity(m);
    for idx in 0..m {
        let mut rng = stream_rng(seed, idx as u64 + 1);
        let cost = match &fixed {
            Some(ps) => transient_fast_with(ps, t_unit, &mut rng),
            None => {
                let ps = normalize(iid_weights(law, n, ordering, &mut rng));
                transient_fast_with(&ps, t_unit, &mut rng)
            }
        };
        values.push(cost as f64 / n as f64);
    }
    Ok(SampleBatch {
        values,
        normalized: true,
        profile_descriptor: format!("{} n={n} {:?}{}", law.descriptor(), ordering,
            if quenched { " quenched" } else { "" }),
        t_scaled: t_unit,
        seed,
    })
}

/// m normalized stationary costs S⁽ⁿ⁾(∞)/n, annealed over profiles like
/// [`batch_transient`].
pub fn batch_stationary(
    law: &dyn PopularityLaw,
    n: usize,
    ordering: Ordering,
    m: usize,
    seed: u64,
    quenched: bool,
) -> Result<SampleBatch> {
    if m == 0 {
        return Err(SimulateError::EmptyBatch);
    }
    let fixed = if quenched {
        Some(normalize(iid_weights(law, n, ordering, &mut stream_rng(seed, 0))))
    } else {
        None
    };
    let mut values = Vec::with_capacity(m);
    for idx in 0..m {
        let mut rng = stream_rng(seed, idx as u64 + 1);
        let cost = match &fixed {
            Some(ps) => stationary_with(ps, &mut rng),
            None => {
                let ps = normalize(iid_weights(law, n, ordering, &mut rng));
                stationary_with(&ps, &mut rng)
            }
        };
        values.push(cost as f64 / n as f64);
    }
    Ok(SampleBatch {
        values,
        normalized: true,
        profile_descriptor: format!("{} n={n} {:?} stationary", law.descriptor(), ordering),
        t_scaled: f64::INFINITY,
        seed,
    })
}

/// m raw costs from a fixed profile at unit-rate time t, one RNG stream per
/// sample index.
pub fn batch_fixed_profile(
    profile: &RequestProfile,
    t: f64,
    m: usize,
    seed: u64,
    event_driven: bool,
) -> Result<SampleBatch> {
    if m == 0 {
        return Err(SimulateError::EmptyBatch);
    }
    if !(t >= 0.0) {
        return Err(SimulateError::BadTime(t));
    }
    let ps = profile.popularities();
    let mut values = Vec::with_capacity(m);
    for idx in 0..m {
        let mut rng = stream_rng(seed, idx as u64 + 1);
        let cost = if event_driven {
            event_driven_with(&ps, t, &mut rng)
        } else {
            transient_fast_with(&ps, t, &mut rng)
        };
        values.push(cost as f64);
    }
    Ok(SampleBatch {
        values,
        normalized: false,
        profile_descriptor: profile.family.clone(),
        t_scaled: t,
        seed,
    })
}

/// m raw stationary costs from a fixed profile.
pub fn batch_fixed_stationary(profile: &RequestProfile, m: usize, seed: u64) -> Result<SampleBatch> {
    if m == 0 {
        return Err(SimulateError::EmptyBatch);
    }
    let ps = profile.popularities();
    let mut values = Vec::with_capacity(m);
    for idx in 0..m {
        let mut rng = stream_rng(seed, idx as u64 + 1);
        values.push(stationary_with(&ps, &mut rng) as f64);
    }
    Ok(SampleBatch {
        values,
        normalized: false,
        profile_descriptor: profile.family.clone(),
        t_scaled: f64::INFINITY,
        seed,
    })
}

/// Empirical pmf of raw integer costs over positions 1..n, indexed 0..n−1.
pub fn empirical_pmf(batch: &SampleBatch, n: usize) -> Vec<f64> {
    let mut pmf = vec![0.0; n];
    let m = batch.values.len() as f64;
    for v in &batch.values {
        let k = (*v as usize).saturating_sub(1).min(n - 1);
        pmf[k] += 1.0 / m;
    }
    pmf
}

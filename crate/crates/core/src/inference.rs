//! Exact forward-backward inference for HMMs, plus a bootstrap particle filter.
//!
//! The forward and backward tables are rescaled at every step: row `t` of the
//! forward table holds `α_t / c_t` where `c_t` is the sum of the unscaled row,
//! so `ln P(y_1..y_T) = Σ_t ln c_t`. The backward table is divided by the same
//! factors, which makes `α̂_t(x) β̂_t(x)` directly the smoothed posterior.

use ndarray::{Array1, Array2, Array3, Axis};
use rand::Rng;

use crate::error::{Error, Result};
use crate::model::dist::argmax;
use crate::model::sample::rng_from_seed;
use crate::model::{CategoricalDist, HmmModel};

#[derive(Debug, Clone, PartialEq)]
pub struct ForwardResult {
    /// `T × N`; row `t` is `P(x_t | y_1..y_t)`.
    pub scaled_alpha: Array2<f64>,
    /// `c_t = P(y_t | y_1..y_{t-1})`.
    pub scale_factors: Vec<f64>,
    pub log_likelihood: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BackwardResult {
    /// `T × N`, scaled by the forward pass's factors; the last row is all ones.
    pub scaled_beta: Array2<f64>,
    /// Likelihood rebuilt from the backward side:
    /// `ln Σ_x π(x) B(x, y_1) β_1(x)`.
    pub log_likelihood: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorResult {
    /// `T × N`; `gamma[[t, i]] = P(x_t = i | y_1..y_T)`.
    pub gamma: Array2<f64>,
    /// `(T-1) × N × N`; `xi[[t-1, i, j]] = P(x_{t-1} = i, x_t = j | y_1..y_T)`.
    pub xi: Array3<f64>,
    pub log_likelihood: f64,
}

fn check(model: &HmmModel, obs: &[usize]) -> Result<()> {
    model.validate()?;
    model.check_obs(obs)
}

/// Scaled forward recursion.
pub fn forward(model: &HmmModel, obs: &[usize]) -> Result<ForwardResult> {
    check(model, obs)?;
    let n = model.num_states();
    let len = obs.len();
    let mut alpha = Array2::zeros((len, n));
    let mut scale_factors = Vec::with_capacity(len);

    let mut row = &model.pi * &model.emission_column(obs[0]);
    for (t, &y) in obs.iter().enumerate() {
        if t > 0 {
            let prev = alpha.row(t - 1);
            row = prev.dot(&model.trans) * model.emission_column(y);
        }
        let c = row.sum();
        if c <= 0.0 {
            return Err(Error::ImpossibleObservation { sequence: None, t });
        }
        row /= c;
        alpha.row_mut(t).assign(&row);
        scale_factors.push(c);
    }
    let log_likelihood = scale_factors.iter().map(|c| c.ln()).sum();
    Ok(ForwardResult {
        scaled_alpha: alpha,
        scale_factors,
        log_likelihood,
    })
}

/// Scaled backward recursion using the forward pass's scale factors.
pub fn backward(model: &HmmModel, obs: &[usize], scale_factors: &[f64]) -> Result<BackwardResult> {
    check(model, obs)?;
    if scale_factors.len() != obs.len() {
        return Err(Error::LengthMismatch {
            expected: obs.len(),
            found: scale_factors.len(),
        });
    }
    let n = model.num_states();
    let len = obs.len();
    let mut beta = Array2::zeros((len, n));
    beta.row_mut(len - 1).fill(1.0);
    for t in (1..len).rev() {
        let weighted = &model.emission_column(obs[t]) * &beta.row(t);
        let row = model.trans.dot(&weighted) / scale_factors[t];
        beta.row_mut(t - 1).assign(&row);
    }
    let first = (&model.pi * &model.emission_column(obs[0]) * beta.row(0)).sum();
    let log_likelihood = first.ln() + scale_factors[1..].iter().map(|c| c.ln()).sum::<f64>();
    Ok(BackwardResult {
        scaled_beta: beta,
        log_likelihood,
    })
}

/// Natural-log likelihood of `obs`.
pub fn log_likelihood(model: &HmmModel, obs: &[usize]) -> Result<f64> {
    Ok(forward(model, obs)?.log_likelihood)
}

/// Filtered beliefs: row `t` is `P(x_t | y_1..y_t)`.
pub fn filter(model: &HmmModel, obs: &[usize]) -> Result<Array2<f64>> {
    Ok(forward(model, obs)?.scaled_alpha)
}

/// Single-slice and pairwise smoothed posteriors.
pub fn smooth(model: &HmmModel, obs: &[usize]) -> Result<PosteriorResult> {
    let fwd = forward(model, obs)?;
    let bwd = backward(model, obs, &fwd.scale_factors)?;
    Ok(posteriors(model, obs, &fwd, &bwd))
}

pub(crate) fn posteriors(
    model: &HmmModel,
    obs: &[usize],
    fwd: &ForwardResult,
    bwd: &BackwardResult,
) -> PosteriorResult {
    let n = model.num_states();
    let len = obs.len();
    let mut gamma = &fwd.scaled_alpha * &bwd.scaled_beta;
    for mut row in gamma.rows_mut() {
        let s = row.sum();
        row /= s;
    }
    let mut xi = Array3::zeros((len.saturating_sub(1), n, n));
    for t in 1..len {
        let right = &model.emission_column(obs[t]) * &bwd.scaled_beta.row(t);
        let mut slice = xi.index_axis_mut(Axis(0), t - 1);
        for i in 0..n {
            let a = fwd.scaled_alpha[[t - 1, i]];
            for j in 0..n {
                slice[[i, j]] = a * model.trans[[i, j]] * right[j];
            }
        }
        let s = slice.sum();
        slice /= s;
    }
    PosteriorResult {
        gamma,
        xi,
        log_likelihood: fwd.log_likelihood,
    }
}

/// `P(x_{t+h} | y_1..y_t)` where `t = obs.len()`: the last filtered belief
/// pushed through the transition matrix `horizon` times.
pub fn predict_state(model: &HmmModel, obs: &[usize], horizon: usize) -> Result<CategoricalDist> {
    if horizon == 0 {
        return Err(Error::InvalidArgument("prediction horizon must be at least 1".into()));
    }
    let fwd = forward(model, obs)?;
    let mut belief: Array1<f64> = fwd.scaled_alpha.row(obs.len() - 1).to_owned();
    for _ in 0..horizon {
        belief = belief.dot(&model.trans);
    }
    Ok(CategoricalDist::from_normalized(belief.to_vec()))
}

/// `P(y_{t+1} | y_1..y_t)` over all symbols.
pub fn predict_obs(model: &HmmModel, obs: &[usize]) -> Result<CategoricalDist> {
    let next = Array1::from(predict_state(model, obs, 1)?.into_vec());
    Ok(CategoricalDist::from_normalized(next.dot(&model.emit).to_vec()))
}

/// Weighted sample approximating the filtering distribution at one step.
#[derive(Debug, Clone, PartialEq)]
pub struct ParticleSet {
    pub particles: Vec<usize>,
    pub weights: Vec<f64>,
}

impl ParticleSet {
    /// Effective sample size `1 / Σ w²`.
    pub fn effective_sample_size(&self) -> f64 {
        1.0 / self.weights.iter().map(|w| w * w).sum::<f64>()
    }

    /// Weighted state histogram over `num_states` states.
    pub fn marginal(&self, num_states: usize) -> Vec<f64> {
        let mut m = vec![0.0; num_states];
        for (&x, &w) in self.particles.iter().zip(&self.weights) {
            m[x] += w;
        }
        m
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParticleFilterConfig {
    pub num_particles: usize,
    pub seed: u64,
    /// Resample when `ESS / K` drops below this value.
    pub resample_threshold: f64,
}

impl Default for ParticleFilterConfig {
    fn default() -> Self {
        ParticleFilterConfig {
            num_particles: 1000,
            seed: 0,
            resample_threshold: 0.5,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ParticleFilterResult {
    /// Normalized weighted set at each step, before any resampling.
    pub steps: Vec<ParticleSet>,
    /// `T × N` weighted state estimates.
    pub estimates: Array2<f64>,
    /// Steps after which the ensemble was resampled.
    pub resampled_at: Vec<usize>,
}

/// Bootstrap particle filter: propose from the transition prior, weight by
/// the emission likelihood, and resample systematically when the effective
/// sample size falls below `resample_threshold · K`.
pub fn particle_filter(model: &HmmModel, obs: &[usize], config: &ParticleFilterConfig) -> Result<ParticleFilterResult> {
    check(model, obs)?;
    let k = config.num_particles;
    if k == 0 {
        return Err(Error::InvalidArgument("particle count must be at least 1".into()));
    }
    if !(0.0..=1.0).contains(&config.resample_threshold) {
        return Err(Error::InvalidArgument("resample threshold must lie in [0, 1]".into()));
    }
    let n = model.num_states();
    let mut rng = rng_from_seed(config.seed);
    let cum_pi = cumulative(model.pi.iter());
    let cum_trans: Vec<Vec<f64>> = model.trans.rows().into_iter().map(|r| cumulative(r.iter())).collect();

    let mut particles: Vec<usize> = (0..k).map(|_| draw_cumulative(&cum_pi, &mut rng)).collect();
    let mut weights = vec![1.0 / k as f64; k];
    let mut steps = Vec::with_capacity(obs.len());
    let mut estimates = Array2::zeros((obs.len(), n));
    let mut resampled_at = Vec::new();

    for (t, &y) in obs.iter().enumerate() {
        if t > 0 {
            for x in particles.iter_mut() {
                *x = draw_cumulative(&cum_trans[*x], &mut rng);
            }
        }
        for (w, &x) in weights.iter_mut().zip(&particles) {
            *w *= model.emit[[x, y]];
        }
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(Error::DegenerateWeights { t });
        }
        weights.iter_mut().for_each(|w| *w /= total);
        let set = ParticleSet {
            particles: particles.clone(),
            weights: weights.clone(),
        };
        for (e, m) in estimates.row_mut(t).iter_mut().zip(set.marginal(n)) {
            *e = m;
        }
        if set.effective_sample_size() < config.resample_threshold * k as f64 {
            particles = systematic_resample(&set, &mut rng);
            weights = vec![1.0 / k as f64; k];
            resampled_at.push(t);
        }
        steps.push(set);
    }
    Ok(ParticleFilterResult {
        steps,
        estimates,
        resampled_at,
    })
}

fn cumulative<'a>(probs: impl Iterator<Item = &'a f64>) -> Vec<f64> {
    probs
        .scan(0.0, |acc, &p| {
            *acc += p;
            Some(*acc)
        })
        .collect()
}

fn draw_cumulative<R: Rng>(cum: &[f64], rng: &mut R) -> usize {
    let u = rng.random::<f64>() * cum[cum.len() - 1];
    let idx = cum.partition_point(|&c| c <= u);
    idx.min(cum.len() - 1)
}

/// Systematic resampling: one uniform offset, `K` evenly spaced pointers.
fn systematic_resample<R: Rng>(set: &ParticleSet, rng: &mut R) -> Vec<usize> {
    let k = set.particles.len();
    let step = 1.0 / k as f64;
    let mut u = rng.random::<f64>() * step;
    let mut out = Vec::with_capacity(k);
    let mut acc = set.weights[0];
    let mut i = 0;
    for _ in 0..k {
        while u > acc && i + 1 < k {
            i += 1;
            acc += set.weights[i];
        }
        out.push(set.particles[i]);
        u += step;
    }
    out
}

/// Most probable state under each filtered row.
pub fn filtered_argmax(filtered: &Array2<f64>) -> Vec<usize> {
    filtered
        .rows()
        .into_iter()
        .map(|r| argmax(r.as_slice().expect("contiguous row")))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn example() -> HmmModel {
        HmmModel::new(
            array![0.6, 0.4],
            array![[0.7, 0.3], [0.4, 0.6]],
            array![[0.9, 0.1], [0.2, 0.8]],
        )
        .unwrap()
    }

    #[test]
    fn worked_example_likelihood() {
        let ll = log_likelihood(&example(), &[0, 1, 0]).unwrap();
        assert!((ll.exp() - 0.10893).abs() < 1e-12);
    }

    #[test]
    fn single_state_likelihood_is_emission_product() {
        let m = HmmModel::new(array![1.0], array![[1.0]], array![[0.2, 0.3, 0.5]]).unwrap();
        let obs = [2, 0, 1, 2];
        let ll = log_likelihood(&m, &obs).unwrap();
        let expected: f64 = [0.5f64, 0.2, 0.3, 0.5].iter().map(|p| p.ln()).sum();
        assert!((ll - expected).abs() < 1e-12);
        let bwd = backward(&m, &obs, &forward(&m, &obs).unwrap().scale_factors).unwrap();
        assert!(bwd.scaled_beta.iter().all(|&b| (b - 1.0).abs() < 1e-15));
        let post = smooth(&m, &obs).unwrap();
        assert!(post.gamma.iter().all(|&g| (g - 1.0).abs() < 1e-15));
        assert_eq!(predict_state(&m, &obs, 5).unwrap().probs(), &[1.0]);
    }

    #[test]
    fn uniform_model_likelihood() {
        let m = HmmModel::uniform(3, 4);
        let ll = log_likelihood(&m, &[0, 3, 2, 1, 1]).unwrap();
        assert!((ll - 5.0 * (0.25f64).ln()).abs() < 1e-12);
        let p = predict_obs(&m, &[0, 1]).unwrap();
        assert!(p.probs().iter().all(|&v| (v - 0.25).abs() < 1e-15));
        let f = filter(&m, &[2]).unwrap();
        assert!(f.iter().all(|&v| (v - 1.0 / 3.0).abs() < 1e-15));
    }

    #[test]
    fn backward_last_row_and_reconstruction() {
        let m = example();
        let obs = [0, 1, 0];
        let fwd = forward(&m, &obs).unwrap();
        let bwd = backward(&m, &obs, &fwd.scale_factors).unwrap();
        assert_eq!(bwd.scaled_beta.row(2).to_vec(), vec![1.0, 1.0]);
        assert!((bwd.log_likelihood - fwd.log_likelihood).abs() < 1e-12);
        assert!(matches!(
            backward(&m, &obs, &fwd.scale_factors[..2]),
            Err(Error::LengthMismatch { .. })
        ));
    }

    #[test]
    fn perfect_observability_filter() {
        let m = HmmModel::new(
            array![0.2, 0.3, 0.5],
            array![[0.1, 0.6, 0.3], [0.3, 0.3, 0.4], [0.5, 0.25, 0.25]],
            Array2::eye(3),
        )
        .unwrap();
        let obs = [2, 0, 1, 1];
        assert_eq!(filtered_argmax(&filter(&m, &obs).unwrap()), obs.to_vec());
        let f = filter(&m, &obs).unwrap();
        assert!(f.iter().all(|&v| v == 0.0 || v == 1.0));
    }

    #[test]
    fn gamma_last_row_equals_filter() {
        let m = example();
        let obs = [0, 1, 1, 0];
        let post = smooth(&m, &obs).unwrap();
        let f = filter(&m, &obs).unwrap();
        for i in 0..2 {
            assert!((post.gamma[[3, i]] - f[[3, i]]).abs() < 1e-15);
        }
    }

    #[test]
    fn permutation_prediction() {
        let m = HmmModel::new(
            array![1.0, 0.0, 0.0],
            array![[0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [1.0, 0.0, 0.0]],
            Array2::eye(3),
        )
        .unwrap();
        for h in 1..7 {
            let p = predict_state(&m, &[0], h).unwrap();
            assert_eq!(p.argmax(), h % 3);
            assert_eq!(p[h % 3], 1.0);
        }
        assert!(predict_state(&m, &[0], 0).is_err());
    }

    #[test]
    fn impossible_observation_is_reported() {
        let m = HmmModel::new(array![1.0, 0.0], array![[1.0, 0.0], [0.0, 1.0]], Array2::eye(2)).unwrap();
        assert!(matches!(
            forward(&m, &[0, 0, 1]),
            Err(Error::ImpossibleObservation { t: 2, .. })
        ));
    }

    #[test]
    fn particle_filter_on_deterministic_model() {
        let m = HmmModel::new(
            array![0.0, 1.0],
            array![[0.0, 1.0], [1.0, 0.0]],
            Array2::eye(2),
        )
        .unwrap();
        let cfg = ParticleFilterConfig {
            num_particles: 50,
            seed: 3,
            resample_threshold: 0.5,
        };
        let out = particle_filter(&m, &[1, 0, 1, 0], &cfg).unwrap();
        for (t, set) in out.steps.iter().enumerate() {
            let truth = if t % 2 == 0 { 1 } else { 0 };
            assert!(set.particles.iter().all(|&x| x == truth));
            assert!(set.weights.iter().all(|&w| (w - 1.0 / 50.0).abs() < 1e-15));
        }
        assert!(out.resampled_at.is_empty());
    }

    #[test]
    fn single_particle_estimate_is_one_hot() {
        let cfg = ParticleFilterConfig {
            num_particles: 1,
            seed: 11,
            resample_threshold: 0.5,
        };
        let out = particle_filter(&example(), &[0, 1, 1, 0, 1], &cfg).unwrap();
        for (t, set) in out.steps.iter().enumerate() {
            let row = out.estimates.row(t);
            assert_eq!(row[set.particles[0]], 1.0);
            assert_eq!(row.sum(), 1.0);
        }
    }

    #[test]
    fn degenerate_weights_error() {
        let m = HmmModel::new(array![1.0, 0.0], array![[1.0, 0.0], [0.0, 1.0]], Array2::eye(2)).unwrap();
        let cfg = ParticleFilterConfig {
            num_particles: 10,
            ..Default::default()
        };
        assert!(matches!(
            particle_filter(&m, &[0, 1], &cfg),
            Err(Error::DegenerateWeights { t: 1 })
        ));
    }

    #[test]
    fn systematic_resampling_preserves_proportions() {
        let set = ParticleSet {
            particles: vec![0, 1, 2, 3],
            weights: vec![0.5, 0.25, 0.25, 0.0],
        };
        let mut rng = rng_from_seed(5);
        let out = systematic_resample(&set, &mut rng);
        assert_eq!(out, vec![0, 0, 1, 2]);
    }
}

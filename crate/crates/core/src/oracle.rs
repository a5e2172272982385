//! Brute-force reference implementations.
//!
//! Everything here enumerates all `N^T` hidden paths in plain probability
//! space, with no scaling and no dynamic programming, so it shares no code
//! path with the recursions it is used to check. Instances are guarded by
//! [`MAX_PATHS`].

use ndarray::{Array2, Array3};

use crate::chmm;
use crate::decoding::{self, DecodeResult};
use crate::error::{Error, Result};
use crate::inference;
use crate::model::{
    flatten_chmm, nearest_neighbor_topology, rng_from_seed, HmmModel, Tbn2Model, DEFAULT_SIZE_CAP,
};
use crate::random::{random_chmm, random_hmm, random_joint_obs, random_obs};
use rand::Rng;

/// Largest number of paths the enumerators will visit.
pub const MAX_PATHS: usize = 1_000_000;

fn guard(num_states: usize, len: usize) -> Result<()> {
    let paths = (num_states as u128).checked_pow(len as u32).unwrap_or(u128::MAX);
    if paths > MAX_PATHS as u128 {
        return Err(Error::InstanceTooLarge {
            paths,
            limit: MAX_PATHS,
        });
    }
    Ok(())
}

/// Calls `visit(path, probability)` for every state path in lexicographic order.
fn for_each_path(model: &HmmModel, obs: &[usize], mut visit: impl FnMut(&[usize], f64)) -> Result<()> {
    model.validate()?;
    model.check_obs(obs)?;
    let n = model.num_states();
    guard(n, obs.len())?;
    let mut path = vec![0usize; obs.len()];
    loop {
        let mut p = model.pi[path[0]] * model.emit[[path[0], obs[0]]];
        for t in 1..obs.len() {
            p *= model.trans[[path[t - 1], path[t]]] * model.emit[[path[t], obs[t]]];
        }
        visit(&path, p);
        // odometer increment, last position fastest
        let mut k = obs.len();
        loop {
            if k == 0 {
                return Ok(());
            }
            k -= 1;
            path[k] += 1;
            if path[k] < n {
                break;
            }
            path[k] = 0;
        }
    }
}

/// `P(y_1..y_T)` as a sum over all paths.
pub fn enum_likelihood(model: &HmmModel, obs: &[usize]) -> Result<f64> {
    let mut total = 0.0;
    for_each_path(model, obs, |_, p| total += p)?;
    Ok(total)
}

/// Smoothed posteriors `(gamma, xi)` by conditioning enumerated paths.
pub fn enum_posterior(model: &HmmModel, obs: &[usize]) -> Result<(Array2<f64>, Array3<f64>)> {
    let n = model.num_states();
    let len = obs.len();
    let mut gamma = Array2::zeros((len, n));
    let mut xi = Array3::zeros((len.saturating_sub(1), n, n));
    let mut total = 0.0;
    for_each_path(model, obs, |path, p| {
        total += p;
        for t in 0..len {
            gamma[[t, path[t]]] += p;
            if t > 0 {
                xi[[t - 1, path[t - 1], path[t]]] += p;
            }
        }
    })?;
    if total <= 0.0 {
        return Err(Error::ImpossibleObservation { sequence: None, t: 0 });
    }
    gamma /= total;
    xi /= total;
    Ok((gamma, xi))
}

/// Most probable path by exhaustive search; ties go to the
/// lexicographically smallest path.
pub fn enum_map_path(model: &HmmModel, obs: &[usize]) -> Result<DecodeResult> {
    let (best, _) = enum_top_two(model, obs)?;
    Ok(best)
}

/// Best path and the probability of the runner-up path, for tie detection.
pub fn enum_top_two(model: &HmmModel, obs: &[usize]) -> Result<(DecodeResult, f64)> {
    let mut best_p = -1.0;
    let mut second_p = 0.0;
    let mut best_path = Vec::new();
    for_each_path(model, obs, |path, p| {
        if p > best_p {
            second_p = best_p.max(0.0);
            best_p = p;
            best_path = path.to_vec();
        } else if p > second_p {
            second_p = p;
        }
    })?;
    if best_p <= 0.0 {
        return Err(Error::ImpossibleObservation { sequence: None, t: 0 });
    }
    Ok((
        DecodeResult {
            path: best_path,
            log_joint_score: best_p.ln(),
        },
        second_p,
    ))
}

/// Likelihood of joint-symbol observations under a two-slice network, by
/// summing the template's CPT products over every hidden assignment of every
/// slice.
pub fn enum_tbn_likelihood(model: &Tbn2Model, obs: &[usize]) -> Result<f64> {
    model.validate()?;
    let states = model.state_space(MAX_PATHS)?;
    let symbols = model.symbol_space(MAX_PATHS)?;
    if obs.is_empty() {
        return Err(Error::EmptySequence);
    }
    for (t, &y) in obs.iter().enumerate() {
        if y >= symbols.size() {
            return Err(Error::SymbolOutOfRange {
                t,
                symbol: y,
                num_symbols: symbols.size(),
            });
        }
    }
    guard(states.size(), obs.len())?;
    let hidden = model.hidden_vars();
    let observed = model.observed_vars();
    let slice_values = |state: usize, symbol: usize| {
        let mut values = vec![0; model.num_vars()];
        for (k, &v) in hidden.iter().enumerate() {
            values[v] = states.component(state, k);
        }
        for (k, &v) in observed.iter().enumerate() {
            values[v] = symbols.component(symbol, k);
        }
        values
    };

    let len = obs.len();
    let mut path = vec![0usize; len];
    let mut total = 0.0;
    'paths: loop {
        let mut p = 1.0;
        let mut prev = slice_values(path[0], obs[0]);
        for v in 0..model.num_vars() {
            p *= model.init_factor(v, &prev);
        }
        for t in 1..len {
            let cur = slice_values(path[t], obs[t]);
            for v in 0..model.num_vars() {
                p *= model.trans_factor(v, &prev, &cur);
            }
            prev = cur;
        }
        total += p;
        let mut k = len;
        loop {
            if k == 0 {
                break 'paths;
            }
            k -= 1;
            path[k] += 1;
            if path[k] < states.size() {
                break;
            }
            path[k] = 0;
        }
    }
    Ok(total)
}

/// Outcome of one family of checks in [`equivalence_suite`].
#[derive(Debug, Clone, PartialEq)]
pub struct CheckReport {
    pub name: &'static str,
    pub instances: usize,
    pub max_deviation: f64,
    pub tolerance: f64,
}

impl CheckReport {
    fn new(name: &'static str, tolerance: f64) -> Self {
        CheckReport {
            name,
            instances: 0,
            max_deviation: 0.0,
            tolerance,
        }
    }

    fn record(&mut self, deviation: f64) {
        self.instances += 1;
        if deviation.is_nan() || deviation > self.max_deviation {
            self.max_deviation = if deviation.is_nan() { f64::INFINITY } else { deviation };
        }
    }

    pub fn passed(&self) -> bool {
        self.max_deviation <= self.tolerance
    }
}

fn max_abs_diff<'a>(a: impl IntoIterator<Item = &'a f64>, b: impl IntoIterator<Item = &'a f64>) -> f64 {
    a.into_iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// Compares the exact recursions against enumeration on `count` seeded random
/// instances of each kind (HMMs with `N, M ≤ 3, T ≤ 6`; coupled HMMs with up to
/// three chains of at most three states, `T ≤ 5`).
pub fn equivalence_suite(seed: u64, count: usize) -> Result<Vec<CheckReport>> {
    let mut rng = rng_from_seed(seed);
    let mut lik = CheckReport::new("hmm likelihood vs enumeration", 1e-12);
    let mut gamma = CheckReport::new("hmm gamma vs enumeration", 1e-12);
    let mut xi = CheckReport::new("hmm xi vs enumeration", 1e-12);
    let mut path = CheckReport::new("viterbi path mismatches", 0.0);
    let mut score = CheckReport::new("viterbi score vs enumeration (relative)", 1e-12);
    let mut recon = CheckReport::new("backward reconstruction vs forward", 1e-10);
    let mut chmm_lik = CheckReport::new("chmm likelihood vs flattened forward", 1e-12);
    let mut chmm_gamma = CheckReport::new("chmm joint gamma vs flattened enumeration", 1e-12);

    for _ in 0..count {
        let n = rng.random_range(1..=3);
        let m = rng.random_range(1..=3);
        let len = rng.random_range(1..=6);
        let model = random_hmm(&mut rng, n, m);
        let obs = random_obs(&mut rng, m, len);

        let post = inference::smooth(&model, &obs)?;
        let truth = enum_likelihood(&model, &obs)?;
        lik.record((post.log_likelihood.exp() - truth).abs());
        let (g, x) = enum_posterior(&model, &obs)?;
        gamma.record(max_abs_diff(&post.gamma, &g));
        xi.record(max_abs_diff(&post.xi, &x));

        let fwd = inference::forward(&model, &obs)?;
        let bwd = inference::backward(&model, &obs, &fwd.scale_factors)?;
        recon.record((bwd.log_likelihood - fwd.log_likelihood).abs());

        let (best, runner_up) = enum_top_two(&model, &obs)?;
        let best_p = best.log_joint_score.exp();
        if (best_p - runner_up) > 1e-9 * best_p {
            let decoded = decoding::viterbi(&model, &obs)?;
            path.record(if decoded.path == best.path { 0.0 } else { 1.0 });
            score.record((decoded.log_joint_score.exp() - best_p).abs() / best_p);
        }

        let chains = rng.random_range(1..=3);
        let states: Vec<usize> = (0..chains).map(|_| rng.random_range(1..=3)).collect();
        let symbols: Vec<usize> = (0..chains).map(|_| rng.random_range(1..=3)).collect();
        let c = random_chmm(&mut rng, &states, &symbols, &nearest_neighbor_topology(chains));
        let len = rng.random_range(1..=5);
        let joint_obs = random_joint_obs(&mut rng, &symbols, len);
        let flat = flatten_chmm(&c, DEFAULT_SIZE_CAP)?;
        let symbol_space = c.symbol_space(DEFAULT_SIZE_CAP)?;
        let flat_obs: Vec<usize> = joint_obs.iter().map(|o| symbol_space.index(o)).collect();
        let direct = chmm::chmm_smooth(&c, &joint_obs)?;
        let via_flat = inference::log_likelihood(&flat, &flat_obs)?;
        chmm_lik.record((direct.log_likelihood - via_flat).abs());
        let (g, _) = enum_posterior(&flat, &flat_obs)?;
        chmm_gamma.record(max_abs_diff(&direct.joint_gamma, &g));
    }
    Ok(vec![lik, gamma, xi, path, score, recon, chmm_lik, chmm_gamma])
}

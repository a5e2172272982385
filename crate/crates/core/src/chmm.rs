//! Joint forward-backward and EM for coupled HMMs, computed directly over
//! chain-state tuples without building the flattened transition matrix.
//!
//! Joint tables are dense and indexed row-major over chain order (chain 0
//! slowest), the same convention as [`crate::model::flatten_chmm`].

use ndarray::{Array1, Array2};

use crate::error::{Error, Result};
use crate::learning::{EmConfig, EmTrace};
use crate::model::dist::normalize_rows;
use crate::model::{ChmmModel, JointSpace, DEFAULT_SIZE_CAP};

#[derive(Debug, Clone, PartialEq)]
pub struct ChmmForwardResult {
    /// `T × S` over joint states; each row sums to 1.
    pub scaled_alpha: Array2<f64>,
    pub scale_factors: Vec<f64>,
    pub log_likelihood: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChmmBackwardResult {
    /// `T × S`, scaled by the forward factors; the last row is all ones.
    pub scaled_beta: Array2<f64>,
    /// Likelihood rebuilt from the first backward row.
    pub log_likelihood: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChmmPosterior {
    /// `T × S` joint smoothed posterior.
    pub joint_gamma: Array2<f64>,
    /// Per chain, `T × N^(l)` marginal of the joint posterior.
    pub chain_gamma: Vec<Array2<f64>>,
    pub log_likelihood: f64,
}

/// Precomputed joint structure of a coupled HMM.
#[derive(Debug, Clone)]
pub struct JointChmm<'a> {
    model: &'a ChmmModel,
    states: JointSpace,
    /// `cond[l][[i, j]] = P(x_t^l = j | x_{t-1} = joint state i)`.
    cond: Vec<Array2<f64>>,
}

impl<'a> JointChmm<'a> {
    /// Fails if the model is invalid or its joint state space exceeds `cap`.
    pub fn new(model: &'a ChmmModel, cap: usize) -> Result<Self> {
        model.validate()?;
        let states = model.state_space(cap)?;
        let cond = (0..model.num_chains())
            .map(|l| {
                let n = model.chains[l].num_states();
                let mut table = Array2::zeros((states.size(), n));
                for (i, prev) in states.tuples().enumerate() {
                    let row = model
                        .transition_conditional(l, &prev)
                        .expect("validated coupling supports every parent configuration");
                    table.row_mut(i).assign(&Array1::from(row));
                }
                table
            })
            .collect();
        Ok(JointChmm { model, states, cond })
    }

    pub fn state_space(&self) -> &JointSpace {
        &self.states
    }

    pub fn num_joint_states(&self) -> usize {
        self.states.size()
    }

    /// Joint transition row out of joint state `i`, as the Kronecker product
    /// of the per-chain conditionals.
    fn transition_row(&self, i: usize, row: &mut Vec<f64>, scratch: &mut Vec<f64>) {
        row.clear();
        row.push(1.0);
        for table in &self.cond {
            scratch.clear();
            let factor = table.row(i);
            for &a in row.iter() {
                scratch.extend(factor.iter().map(|&b| a * b));
            }
            std::mem::swap(row, scratch);
        }
    }

    /// `∏_l b^(l)(j_l, o^l)` for every joint state `j`.
    fn emission(&self, step: &[usize]) -> Array1<f64> {
        kron(self.model.chains.iter().zip(step).map(|(c, &o)| c.emit.column(o).to_vec()))
    }

    fn initial(&self) -> Array1<f64> {
        kron(self.model.chains.iter().map(|c| c.pi.to_vec()))
    }

    pub fn forward(&self, obs: &[Vec<usize>]) -> Result<ChmmForwardResult> {
        self.model.check_obs(obs)?;
        let s = self.states.size();
        let len = obs.len();
        let mut alpha = Array2::zeros((len, s));
        let mut scale_factors = Vec::with_capacity(len);
        let mut row = Vec::with_capacity(s);
        let mut scratch = Vec::with_capacity(s);

        for (t, step) in obs.iter().enumerate() {
            let mut next = if t == 0 {
                self.initial()
            } else {
                let mut acc = Array1::zeros(s);
                for i in 0..s {
                    let a = alpha[[t - 1, i]];
                    if a == 0.0 {
                        continue;
                    }
                    self.transition_row(i, &mut row, &mut scratch);
                    for (dst, &p) in acc.iter_mut().zip(&row) {
                        *dst += a * p;
                    }
                }
                acc
            };
            next *= &self.emission(step);
            let c = next.sum();
            if c <= 0.0 {
                return Err(Error::ImpossibleObservation { sequence: None, t });
            }
            next /= c;
            alpha.row_mut(t).assign(&next);
            scale_factors.push(c);
        }
        let log_likelihood = scale_factors.iter().map(|c| c.ln()).sum();
        Ok(ChmmForwardResult {
            scaled_alpha: alpha,
            scale_factors,
            log_likelihood,
        })
    }

    pub fn backward(&self, obs: &[Vec<usize>], scale_factors: &[f64]) -> Result<ChmmBackwardResult> {
        self.model.check_obs(obs)?;
        if scale_factors.len() != obs.len() {
            return Err(Error::LengthMismatch {
                expected: obs.len(),
                found: scale_factors.len(),
            });
        }
        let s = self.states.size();
        let len = obs.len();
        let mut beta = Array2::zeros((len, s));
        beta.row_mut(len - 1).fill(1.0);
        let mut row = Vec::with_capacity(s);
        let mut scratch = Vec::with_capacity(s);
        for t in (1..len).rev() {
            let weighted = self.emission(&obs[t]) * beta.row(t);
            for i in 0..s {
                self.transition_row(i, &mut row, &mut scratch);
                let v: f64 = row.iter().zip(&weighted).map(|(p, w)| p * w).sum();
                beta[[t - 1, i]] = v / scale_factors[t];
            }
        }
        let first = (self.initial() * self.emission(&obs[0]) * beta.row(0)).sum();
        let log_likelihood = first.ln() + scale_factors[1..].iter().map(|c| c.ln()).sum::<f64>();
        Ok(ChmmBackwardResult {
            scaled_beta: beta,
            log_likelihood,
        })
    }

    pub fn smooth(&self, obs: &[Vec<usize>]) -> Result<ChmmPosterior> {
        let fwd = self.forward(obs)?;
        let bwd = self.backward(obs, &fwd.scale_factors)?;
        Ok(self.posterior(&fwd, &bwd))
    }

    fn posterior(&self, fwd: &ChmmForwardResult, bwd: &ChmmBackwardResult) -> ChmmPosterior {
        let mut joint = &fwd.scaled_alpha * &bwd.scaled_beta;
        for mut r in joint.rows_mut() {
            let s = r.sum();
            r /= s;
        }
        let chain_gamma = (0..self.model.num_chains())
            .map(|l| {
                let mut m = Array2::zeros((joint.nrows(), self.model.chains[l].num_states()));
                for (t, r) in joint.rows().into_iter().enumerate() {
                    for (j, &g) in r.iter().enumerate() {
                        m[[t, self.states.component(j, l)]] += g;
                    }
                }
                m
            })
            .collect();
        ChmmPosterior {
            joint_gamma: joint,
            chain_gamma,
            log_likelihood: fwd.log_likelihood,
        }
    }

    /// Adds `Σ_t ξ_t(i, j)` for one sequence into `counts` (`S × S`).
    fn accumulate_pairwise(
        &self,
        obs: &[Vec<usize>],
        fwd: &ChmmForwardResult,
        bwd: &ChmmBackwardResult,
        counts: &mut Array2<f64>,
    ) {
        let s = self.states.size();
        let mut row = Vec::with_capacity(s);
        let mut scratch = Vec::with_capacity(s);
        for t in 1..obs.len() {
            let right = self.emission(&obs[t]) * bwd.scaled_beta.row(t) / fwd.scale_factors[t];
            for i in 0..s {
                let a = fwd.scaled_alpha[[t - 1, i]];
                if a == 0.0 {
                    continue;
                }
                self.transition_row(i, &mut row, &mut scratch);
                let mut dst = counts.row_mut(i);
                for ((d, &p), &r) in dst.iter_mut().zip(&row).zip(&right) {
                    *d += a * p * r;
                }
            }
        }
    }
}

fn kron(factors: impl Iterator<Item = Vec<f64>>) -> Array1<f64> {
    let mut out = vec![1.0];
    for f in factors {
        out = out.iter().flat_map(|&a| f.iter().map(move |&b| a * b)).collect();
    }
    Array1::from(out)
}

pub fn chmm_forward(model: &ChmmModel, obs: &[Vec<usize>]) -> Result<ChmmForwardResult> {
    JointChmm::new(model, DEFAULT_SIZE_CAP)?.forward(obs)
}

pub fn chmm_backward(model: &ChmmModel, obs: &[Vec<usize>], scale_factors: &[f64]) -> Result<ChmmBackwardResult> {
    JointChmm::new(model, DEFAULT_SIZE_CAP)?.backward(obs, scale_factors)
}

/// Natural-log likelihood of a joint observation sequence.
pub fn chmm_likelihood(model: &ChmmModel, obs: &[Vec<usize>]) -> Result<f64> {
    Ok(chmm_forward(model, obs)?.log_likelihood)
}

pub fn chmm_smooth(model: &ChmmModel, obs: &[Vec<usize>]) -> Result<ChmmPosterior> {
    JointChmm::new(model, DEFAULT_SIZE_CAP)?.smooth(obs)
}

/// Expected counts from one coupled-HMM E-step.
#[derive(Debug, Clone, PartialEq)]
pub struct ChmmStats {
    /// Per chain, expected initial-state counts.
    pub expected_initial: Vec<Array1<f64>>,
    /// Per chain, expected emission counts `N^(l) × M^(l)`.
    pub expected_emissions: Vec<Array2<f64>>,
    /// Expected joint transition counts `S × S`.
    pub expected_joint_transitions: Array2<f64>,
    pub log_likelihood: f64,
}

/// E-step over all sequences, accumulated in order.
pub fn chmm_expected_counts<S: AsRef<[Vec<usize>]>>(
    joint: &JointChmm<'_>,
    sequences: &[S],
) -> Result<ChmmStats> {
    let model = joint.model;
    let s = joint.num_joint_states();
    let mut stats = ChmmStats {
        expected_initial: model.chains.iter().map(|c| Array1::zeros(c.num_states())).collect(),
        expected_emissions: model
            .chains
            .iter()
            .map(|c| Array2::zeros((c.num_states(), c.num_symbols())))
            .collect(),
        expected_joint_transitions: Array2::zeros((s, s)),
        log_likelihood: 0.0,
    };
    for (k, seq) in sequences.iter().enumerate() {
        let obs = seq.as_ref();
        let fwd = joint.forward(obs).map_err(|e| e.in_sequence(k))?;
        let bwd = joint.backward(obs, &fwd.scale_factors)?;
        let post = joint.posterior(&fwd, &bwd);
        for (l, g) in post.chain_gamma.iter().enumerate() {
            stats.expected_initial[l] += &g.row(0);
            for (t, step) in obs.iter().enumerate() {
                let mut col = stats.expected_emissions[l].column_mut(step[l]);
                col += &g.row(t);
            }
        }
        joint.accumulate_pairwise(obs, &fwd, &bwd, &mut stats.expected_joint_transitions);
        stats.log_likelihood += fwd.log_likelihood;
    }
    Ok(stats)
}

/// Expected counts of `(parent configuration of chain l at t-1, x_t^l)`.
fn parent_config_counts(model: &ChmmModel, states: &JointSpace, joint_counts: &Array2<f64>, chain: usize) -> Array2<f64> {
    let parents = model.parents(chain);
    let dims: Vec<usize> = parents.iter().map(|&p| model.chains[p].num_states()).collect();
    let configs: usize = dims.iter().product();
    let mut out = Array2::zeros((configs, model.chains[chain].num_states()));
    for i in 0..states.size() {
        let cfg = parents
            .iter()
            .zip(&dims)
            .fold(0, |acc, (&p, &d)| acc * d + states.component(i, p));
        for j in 0..states.size() {
            out[[cfg, states.component(j, chain)]] += joint_counts[[i, j]];
        }
    }
    out
}

/// Expected complete-data log-likelihood of chain `chain`'s transitions, plus
/// the Dirichlet pseudocount term, under the model's current couplings.
fn transition_objective(model: &ChmmModel, chain: usize, config_counts: &Array2<f64>, pseudocount: f64) -> f64 {
    let parents = model.parents(chain);
    let dims: Vec<usize> = parents.iter().map(|&p| model.chains[p].num_states()).collect();
    let space = JointSpace::new(&dims, usize::MAX).expect("uncapped");
    let mut prev = vec![0; model.num_chains()];
    let mut q = 0.0;
    for (cfg, values) in space.tuples().enumerate() {
        for (&p, &v) in parents.iter().zip(&values) {
            prev[p] = v;
        }
        let Some(cond) = model.transition_conditional(chain, &prev) else {
            return f64::NEG_INFINITY;
        };
        for (j, &p) in cond.iter().enumerate() {
            let n = config_counts[[cfg, j]];
            if n > 0.0 {
                q += n * p.ln();
            }
        }
    }
    if pseudocount > 0.0 {
        for c in model.couplings.iter().filter(|c| c.to == chain) {
            q += pseudocount * c.matrix.iter().map(|a| a.ln()).sum::<f64>();
        }
    }
    q
}

/// M-step. Initial and emission updates are exact. Each coupling `a^(l',l)` is
/// proposed from expected counts marginalized onto `(x_{t-1}^{l'}, x_t^l)`;
/// because that is not the exact maximizer for multiplicative couplings, the
/// proposal is accepted only if it does not lower chain `l`'s expected
/// transition log-likelihood, otherwise a step halfway towards it is tried,
/// and so on, keeping the current couplings if no step improves.
pub fn chmm_maximize(current: &ChmmModel, stats: &ChmmStats, pseudocount: f64) -> ChmmModel {
    let mut next = current.clone();
    for (l, chain) in next.chains.iter_mut().enumerate() {
        let mut pi = (&stats.expected_initial[l] + pseudocount).insert_axis(ndarray::Axis(0));
        normalize_rows(&mut pi);
        chain.pi = pi.remove_axis(ndarray::Axis(0));
        chain.emit = &stats.expected_emissions[l] + pseudocount;
        normalize_rows(&mut chain.emit);
    }

    let states = current.state_space(usize::MAX).expect("uncapped");
    let x = &stats.expected_joint_transitions;
    for l in 0..current.num_chains() {
        let config_counts = parent_config_counts(current, &states, x, l);
        let q_current = transition_objective(current, l, &config_counts, pseudocount);

        let mut proposal: Vec<(usize, Array2<f64>)> = Vec::new();
        for (k, c) in current.couplings.iter().enumerate().filter(|(_, c)| c.to == l) {
            let mut m = Array2::zeros(c.matrix.raw_dim());
            for i in 0..states.size() {
                let from_state = states.component(i, c.from);
                for j in 0..states.size() {
                    m[[from_state, states.component(j, l)]] += x[[i, j]];
                }
            }
            m += pseudocount;
            normalize_rows(&mut m);
            proposal.push((k, m));
        }

        let mut step = 1.0;
        let mut trial = next.clone();
        for _ in 0..=30 {
            for (k, m) in &proposal {
                let old = &current.couplings[*k].matrix;
                trial.couplings[*k].matrix = old + &((m - old) * step);
            }
            // an unsupported parent configuration scores -inf and is rejected
            let q = transition_objective(&trial, l, &config_counts, pseudocount);
            if q >= q_current - 1e-12 * (1.0 + q_current.abs()) {
                for (k, _) in &proposal {
                    next.couplings[*k].matrix = trial.couplings[*k].matrix.clone();
                }
                break;
            }
            step *= 0.5;
        }
    }
    next
}

/// EM for coupled HMMs; convergence and trace semantics follow
/// [`crate::learning::baum_welch`].
pub fn chmm_em<S: AsRef<[Vec<usize>]>>(
    init: &ChmmModel,
    sequences: &[S],
    config: &EmConfig,
) -> Result<(ChmmModel, EmTrace)> {
    config.check()?;
    if sequences.is_empty() {
        return Err(Error::EmptyData);
    }
    let mut model = init.clone();
    let mut trace = EmTrace::default();
    for _ in 0..config.max_iterations {
        let joint = JointChmm::new(&model, DEFAULT_SIZE_CAP)?;
        let stats = chmm_expected_counts(&joint, sequences)?;
        let ll = stats.log_likelihood;
        let done = trace
            .log_likelihoods
            .last()
            .is_some_and(|&prev| config.has_converged(prev, ll));
        trace.log_likelihoods.push(ll);
        trace.iterations_run += 1;
        if done {
            trace.converged = true;
            break;
        }
        model = chmm_maximize(&model, &stats, config.pseudocount);
    }
    Ok((model, trace))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::inference;
    use crate::learning::baum_welch;
    use crate::model::{flatten_chmm, nearest_neighbor_topology, rng_from_seed, sample_chmm, HmmModel};
    use crate::random::{random_chmm, random_hmm, random_joint_obs, random_obs};
    use ndarray::array;

    fn example_hmm() -> HmmModel {
        HmmModel::new(
            array![0.6, 0.4],
            array![[0.7, 0.3], [0.4, 0.6]],
            array![[0.9, 0.1], [0.2, 0.8]],
        )
        .unwrap()
    }

    fn wrap(obs: &[usize]) -> Vec<Vec<usize>> {
        obs.iter().map(|&y| vec![y]).collect()
    }

    #[test]
    fn single_chain_reduces_to_hmm() {
        let hmm = example_hmm();
        let chmm = ChmmModel::from_hmm(&hmm);
        let obs = [0, 1, 1, 0, 1];
        let f1 = inference::forward(&hmm, &obs).unwrap();
        let f2 = chmm_forward(&chmm, &wrap(&obs)).unwrap();
        assert!((f1.log_likelihood - f2.log_likelihood).abs() < 1e-12);
        for (a, b) in f1.scaled_alpha.iter().zip(&f2.scaled_alpha) {
            assert!((a - b).abs() < 1e-12);
        }
        let b1 = inference::backward(&hmm, &obs, &f1.scale_factors).unwrap();
        let b2 = chmm_backward(&chmm, &wrap(&obs), &f2.scale_factors).unwrap();
        for (a, b) in b1.scaled_beta.iter().zip(&b2.scaled_beta) {
            assert!((a - b).abs() < 1e-12);
        }
        let p1 = inference::smooth(&hmm, &obs).unwrap();
        let p2 = chmm_smooth(&chmm, &wrap(&obs)).unwrap();
        for (a, b) in p1.gamma.iter().zip(&p2.joint_gamma) {
            assert!((a - b).abs() < 1e-12);
        }
        assert_eq!(p2.chain_gamma[0], p2.joint_gamma);
    }

    #[test]
    fn uncoupled_chains_factorize() {
        let mut rng = rng_from_seed(17);
        let a = random_hmm(&mut rng, 2, 3);
        let b = random_hmm(&mut rng, 3, 2);
        let mut chmm = ChmmModel::from_hmm(&a);
        chmm.chains.push(ChmmModel::from_hmm(&b).chains.remove(0));
        chmm.couplings.push(crate::model::Coupling {
            from: 1,
            to: 1,
            matrix: b.trans.clone(),
        });
        let ya = random_obs(&mut rng, 3, 8);
        let yb = random_obs(&mut rng, 2, 8);
        let joint: Vec<Vec<usize>> = ya.iter().zip(&yb).map(|(&x, &y)| vec![x, y]).collect();
        let expected = inference::log_likelihood(&a, &ya).unwrap() + inference::log_likelihood(&b, &yb).unwrap();
        assert!((chmm_likelihood(&chmm, &joint).unwrap() - expected).abs() < 1e-10);
    }

    #[test]
    fn coupled_matches_flattened() {
        let mut rng = rng_from_seed(5);
        for _ in 0..10 {
            let m = random_chmm(&mut rng, &[2, 2], &[2, 3], &nearest_neighbor_topology(2));
            let obs = random_joint_obs(&mut rng, &[2, 3], 5);
            let flat = flatten_chmm(&m, DEFAULT_SIZE_CAP).unwrap();
            let sym = m.symbol_space(DEFAULT_SIZE_CAP).unwrap();
            let flat_obs: Vec<usize> = obs.iter().map(|o| sym.index(o)).collect();
            let direct = chmm_likelihood(&m, &obs).unwrap();
            let via = inference::log_likelihood(&flat, &flat_obs).unwrap();
            assert!((direct - via).abs() < 1e-12);

            let fwd = chmm_forward(&m, &obs).unwrap();
            let bwd = chmm_backward(&m, &obs, &fwd.scale_factors).unwrap();
            assert!(bwd.scaled_beta.row(4).iter().all(|&b| b == 1.0));
            assert!((bwd.log_likelihood - fwd.log_likelihood).abs() < 1e-10);

            let post = chmm_smooth(&m, &obs).unwrap();
            for g in &post.chain_gamma {
                for r in g.rows() {
                    assert!((r.sum() - 1.0).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn em_single_chain_tracks_baum_welch() {
        let mut rng = rng_from_seed(23);
        let init = random_hmm(&mut rng, 2, 3);
        let seqs: Vec<Vec<usize>> = (0..4).map(|_| random_obs(&mut rng, 3, 30)).collect();
        let cfg = EmConfig {
            max_iterations: 25,
            ..Default::default()
        };
        let (hmm_fit, hmm_trace) = baum_welch(&init, &seqs, &cfg).unwrap();
        let joint_seqs: Vec<Vec<Vec<usize>>> = seqs.iter().map(|s| wrap(s)).collect();
        let (chmm_fit, chmm_trace) = chmm_em(&ChmmModel::from_hmm(&init), &joint_seqs, &cfg).unwrap();
        assert_eq!(hmm_trace.iterations_run, chmm_trace.iterations_run);
        for (a, b) in hmm_trace.log_likelihoods.iter().zip(&chmm_trace.log_likelihoods) {
            assert!((a - b).abs() < 1e-10, "{a} vs {b}");
        }
        let flat = flatten_chmm(&chmm_fit, DEFAULT_SIZE_CAP).unwrap();
        for (a, b) in flat.trans.iter().zip(&hmm_fit.trans) {
            assert!((a - b).abs() < 1e-10);
        }
        for (a, b) in flat.emit.iter().zip(&hmm_fit.emit) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn em_fixed_point() {
        let hmm = HmmModel::new(
            array![1.0, 0.0],
            array![[0.0, 1.0], [1.0, 0.0]],
            Array2::eye(2),
        )
        .unwrap();
        let chmm = ChmmModel::from_hmm(&hmm);
        let seqs: Vec<_> = (0..3).map(|s| sample_chmm(&chmm, 8, s).unwrap().1).collect();
        let cfg = EmConfig {
            max_iterations: 1,
            ..Default::default()
        };
        let (fit, _) = chmm_em(&chmm, &seqs, &cfg).unwrap();
        for (a, b) in fit.couplings[0].matrix.iter().zip(&chmm.couplings[0].matrix) {
            assert!((a - b).abs() < 1e-12);
        }
        assert_eq!(fit.chains, chmm.chains);
    }

    #[test]
    fn em_two_chains_is_monotone() {
        let mut rng = rng_from_seed(99);
        let truth = random_chmm(&mut rng, &[2, 2], &[2, 2], &nearest_neighbor_topology(2));
        let seqs: Vec<_> = (0..5).map(|s| sample_chmm(&truth, 40, s).unwrap().1).collect();
        let init = random_chmm(&mut rng, &[2, 2], &[2, 2], &nearest_neighbor_topology(2));
        let (_, trace) = chmm_em(&init, &seqs, &EmConfig::default()).unwrap();
        for w in trace.log_likelihoods.windows(2) {
            assert!(w[1] >= w[0] - 1e-9, "{} -> {}", w[0], w[1]);
        }
    }

    #[test]
    fn cap_is_respected() {
        let mut rng = rng_from_seed(1);
        let m = random_chmm(&mut rng, &[3, 3], &[2, 2], &nearest_neighbor_topology(2));
        assert!(matches!(JointChmm::new(&m, 8), Err(Error::SizeCap { size: 9, cap: 8 })));
    }
}

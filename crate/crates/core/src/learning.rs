//! Parameter estimation for HMMs: frequency counting when states are observed,
//! Baum-Welch expectation-maximization when they are hidden.

use ndarray::{Array1, Array2, Axis};

use crate::error::{Error, Result};
use crate::inference::{backward, forward, posteriors};
use crate::model::dist::normalize_rows;
use crate::model::HmmModel;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmConfig {
    pub max_iterations: usize,
    /// Stop once `|ll_k - ll_{k-1}| < rel_tolerance · (1 + |ll_k|)`.
    pub rel_tolerance: f64,
    /// Added to every expected count before normalizing.
    pub pseudocount: f64,
}

impl Default for EmConfig {
    fn default() -> Self {
        EmConfig {
            max_iterations: 200,
            rel_tolerance: 1e-6,
            pseudocount: 0.0,
        }
    }
}

impl EmConfig {
    pub(crate) fn check(&self) -> Result<()> {
        if self.max_iterations == 0 {
            return Err(Error::InvalidArgument("max_iterations must be at least 1".into()));
        }
        if !(self.rel_tolerance > 0.0) {
            return Err(Error::InvalidArgument("rel_tolerance must be positive".into()));
        }
        if !(self.pseudocount >= 0.0) || !self.pseudocount.is_finite() {
            return Err(Error::InvalidArgument("pseudocount must be a finite nonnegative number".into()));
        }
        Ok(())
    }

    pub(crate) fn has_converged(&self, previous: f64, current: f64) -> bool {
        (current - previous).abs() < self.rel_tolerance * (1.0 + current.abs())
    }
}

/// Log-likelihood after each E-step, in order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct EmTrace {
    pub log_likelihoods: Vec<f64>,
    pub converged: bool,
    pub iterations_run: usize,
}

/// Expected counts gathered by one E-step.
#[derive(Debug, Clone, PartialEq)]
pub struct SufficientStats {
    pub expected_initial: Array1<f64>,
    pub expected_transitions: Array2<f64>,
    pub expected_emissions: Array2<f64>,
    /// Summed log-likelihood of the sequences under the current model.
    pub log_likelihood: f64,
}

impl SufficientStats {
    pub fn zeros(num_states: usize, num_symbols: usize) -> Self {
        SufficientStats {
            expected_initial: Array1::zeros(num_states),
            expected_transitions: Array2::zeros((num_states, num_states)),
            expected_emissions: Array2::zeros((num_states, num_symbols)),
            log_likelihood: 0.0,
        }
    }

    /// Normalized parameters; rows with no mass at all become uniform.
    pub fn maximize(&self, pseudocount: f64) -> HmmModel {
        let mut pi = (&self.expected_initial + pseudocount).insert_axis(Axis(0));
        let mut trans = &self.expected_transitions + pseudocount;
        let mut emit = &self.expected_emissions + pseudocount;
        normalize_rows(&mut pi);
        normalize_rows(&mut trans);
        normalize_rows(&mut emit);
        HmmModel {
            pi: pi.remove_axis(Axis(0)),
            trans,
            emit,
        }
    }
}

/// E-step: accumulate smoothed posteriors over `sequences` in order.
pub fn expected_counts<S: AsRef<[usize]>>(model: &HmmModel, sequences: &[S]) -> Result<SufficientStats> {
    let mut stats = SufficientStats::zeros(model.num_states(), model.num_symbols());
    for (s, seq) in sequences.iter().enumerate() {
        let obs = seq.as_ref();
        let fwd = forward(model, obs).map_err(|e| e.in_sequence(s))?;
        let bwd = backward(model, obs, &fwd.scale_factors)?;
        let post = posteriors(model, obs, &fwd, &bwd);
        stats.expected_initial += &post.gamma.row(0);
        stats.expected_transitions += &post.xi.sum_axis(Axis(0));
        for (t, &y) in obs.iter().enumerate() {
            let mut col = stats.expected_emissions.column_mut(y);
            col += &post.gamma.row(t);
        }
        stats.log_likelihood += fwd.log_likelihood;
    }
    Ok(stats)
}

/// Maximum-likelihood estimate from fully observed `(state path, symbols)` pairs.
pub fn mle_complete<P: AsRef<[usize]>, O: AsRef<[usize]>>(
    data: &[(P, O)],
    num_states: usize,
    num_symbols: usize,
    pseudocount: f64,
) -> Result<HmmModel> {
    if data.is_empty() {
        return Err(Error::EmptyData);
    }
    if !(pseudocount >= 0.0) || !pseudocount.is_finite() {
        return Err(Error::InvalidArgument("pseudocount must be a finite nonnegative number".into()));
    }
    let mut stats = SufficientStats::zeros(num_states, num_symbols);
    for (path, obs) in data {
        let (path, obs) = (path.as_ref(), obs.as_ref());
        if path.len() != obs.len() {
            return Err(Error::LengthMismatch {
                expected: path.len(),
                found: obs.len(),
            });
        }
        if path.is_empty() {
            return Err(Error::EmptySequence);
        }
        for (t, (&x, &y)) in path.iter().zip(obs).enumerate() {
            if x >= num_states {
                return Err(Error::InvalidArgument(format!(
                    "state {x} at position {t} is out of range for {num_states} states"
                )));
            }
            if y >= num_symbols {
                return Err(Error::SymbolOutOfRange {
                    t,
                    symbol: y,
                    num_symbols,
                });
            }
            stats.expected_emissions[[x, y]] += 1.0;
        }
        stats.expected_initial[path[0]] += 1.0;
        for w in path.windows(2) {
            stats.expected_transitions[[w[0], w[1]]] += 1.0;
        }
    }
    Ok(stats.maximize(pseudocount))
}

/// Baum-Welch EM starting from `init`.
///
/// Each iteration runs an E-step over all sequences, records the summed
/// log-likelihood of the current model, and (unless converged) replaces the
/// model by the M-step estimate.
pub fn baum_welch<S: AsRef<[usize]>>(
    init: &HmmModel,
    sequences: &[S],
    config: &EmConfig,
) -> Result<(HmmModel, EmTrace)> {
    config.check()?;
    init.validate()?;
    if sequences.is_empty() {
        return Err(Error::EmptyData);
    }
    let mut model = init.clone();
    let mut trace = EmTrace::default();
    for _ in 0..config.max_iterations {
        let stats = expected_counts(&model, sequences)?;
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
        model = stats.maximize(config.pseudocount);
    }
    Ok((model, trace))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::sample_hmm;
    use ndarray::array;

    #[test]
    fn counts_on_single_path() {
        let m = mle_complete(&[(vec![0, 0, 1, 0], vec![0, 1, 1, 0])], 2, 2, 0.0).unwrap();
        assert_eq!(m.trans, array![[0.5, 0.5], [1.0, 0.0]]);
        assert_eq!(m.pi, array![1.0, 0.0]);
        assert_eq!(m.emit, array![[2.0 / 3.0, 1.0 / 3.0], [0.0, 1.0]]);
    }

    #[test]
    fn unseen_state_is_uniform() {
        let with_prior = mle_complete(&[(vec![0, 1, 0], vec![0, 0, 0])], 3, 2, 1.0).unwrap();
        assert_eq!(with_prior.trans.row(2).to_vec(), vec![1.0 / 3.0; 3]);
        let without = mle_complete(&[(vec![0, 1, 0], vec![0, 0, 0])], 3, 2, 0.0).unwrap();
        assert_eq!(without.trans.row(2).to_vec(), vec![1.0 / 3.0; 3]);
        assert_eq!(without.emit.row(2).to_vec(), vec![0.5; 2]);
    }

    #[test]
    fn exact_rational_frequencies() {
        // transitions from 0: 0->0 x2, 0->1 x1 ; from 1: 1->0 x1, 1->1 x3
        let path = vec![0, 0, 0, 1, 1, 1, 1, 0];
        let obs = vec![0, 1, 2, 2, 2, 1, 2, 0];
        let m = mle_complete(&[(path, obs)], 2, 3, 0.0).unwrap();
        assert_eq!(m.trans, array![[2.0 / 3.0, 1.0 / 3.0], [0.25, 0.75]]);
        assert_eq!(m.emit, array![[0.5, 0.25, 0.25], [0.0, 0.25, 0.75]]);
    }

    #[test]
    fn mle_errors() {
        let empty: Vec<(Vec<usize>, Vec<usize>)> = vec![];
        assert!(matches!(mle_complete(&empty, 2, 2, 0.0), Err(Error::EmptyData)));
        assert!(mle_complete(&[(vec![0, 2], vec![0, 0])], 2, 2, 0.0).is_err());
        assert!(mle_complete(&[(vec![0, 1], vec![0, 5])], 2, 2, 0.0).is_err());
        assert!(mle_complete(&[(vec![0, 1], vec![0])], 2, 2, 0.0).is_err());
    }

    #[test]
    fn fixed_point_is_preserved() {
        let m = HmmModel::new(
            array![1.0, 0.0, 0.0],
            array![[0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [1.0, 0.0, 0.0]],
            Array2::eye(3),
        )
        .unwrap();
        let seqs: Vec<_> = (0..3).map(|s| sample_hmm(&m, 10, s).unwrap().1).collect();
        let cfg = EmConfig {
            max_iterations: 1,
            ..Default::default()
        };
        let (fitted, trace) = baum_welch(&m, &seqs, &cfg).unwrap();
        assert_eq!(trace.iterations_run, 1);
        for (a, b) in fitted.trans.iter().zip(&m.trans) {
            assert!((a - b).abs() < 1e-12);
        }
        for (a, b) in fitted.emit.iter().zip(&m.emit) {
            assert!((a - b).abs() < 1e-12);
        }
        for (a, b) in fitted.pi.iter().zip(&m.pi) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn single_state_learns_symbol_frequencies() {
        let init = HmmModel::uniform(1, 3);
        let seq = vec![0, 2, 2, 1, 2, 0, 2, 2];
        let cfg = EmConfig {
            max_iterations: 1,
            ..Default::default()
        };
        let (m, _) = baum_welch(&init, &[seq], &cfg).unwrap();
        assert!((m.emit[[0, 0]] - 0.25).abs() < 1e-15);
        assert!((m.emit[[0, 1]] - 0.125).abs() < 1e-15);
        assert!((m.emit[[0, 2]] - 0.625).abs() < 1e-15);
    }

    #[test]
    fn identity_emissions_reproduce_mle() {
        let truth = HmmModel::new(
            array![0.5, 0.3, 0.2],
            array![[0.6, 0.3, 0.1], [0.2, 0.5, 0.3], [0.3, 0.3, 0.4]],
            Array2::eye(3),
        )
        .unwrap();
        let data: Vec<_> = (0..5).map(|s| sample_hmm(&truth, 40, s).unwrap()).collect();
        let mle = mle_complete(&data, 3, 3, 0.0).unwrap();
        let seqs: Vec<_> = data.iter().map(|(_, o)| o.clone()).collect();
        let cfg = EmConfig {
            max_iterations: 1,
            ..Default::default()
        };
        let (em, _) = baum_welch(&truth, &seqs, &cfg).unwrap();
        for (a, b) in em.trans.iter().zip(&mle.trans) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn impossible_sequence_is_named() {
        let m = HmmModel::new(array![1.0, 0.0], array![[1.0, 0.0], [0.0, 1.0]], Array2::eye(2)).unwrap();
        let err = baum_welch(&m, &[vec![0, 0], vec![0, 1]], &EmConfig::default()).unwrap_err();
        assert!(matches!(
            err,
            Error::ImpossibleObservation {
                sequence: Some(1),
                t: 1
            }
        ));
    }

    #[test]
    fn config_is_checked() {
        let m = HmmModel::uniform(2, 2);
        let bad = EmConfig {
            pseudocount: -1.0,
            ..Default::default()
        };
        assert!(baum_welch(&m, &[vec![0]], &bad).is_err());
        let empty: Vec<Vec<usize>> = vec![];
        assert!(matches!(
            baum_welch(&m, &empty, &EmConfig::default()),
            Err(Error::EmptyData)
        ));
    }
}

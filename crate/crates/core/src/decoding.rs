//! Most-probable state sequence by log-space dynamic programming.

use ndarray::{Array1, Array2};

use crate::error::{Error, Result};
use crate::model::dist::check_dim;
use crate::model::HmmModel;

#[derive(Debug, Clone, PartialEq)]
pub struct DecodeResult {
    pub path: Vec<usize>,
    /// `ln max_x P(x_1..x_T, y_1..y_T)`.
    pub log_joint_score: f64,
}

/// Incremental Viterbi decoder.
///
/// Symbols are pushed one at a time; [`OnlineViterbi::decode`] backtracks from
/// the best state at the current step, giving the best path for the prefix
/// seen so far. Ties go to the smallest state index.
#[derive(Debug, Clone)]
pub struct OnlineViterbi {
    log_pi: Array1<f64>,
    log_trans: Array2<f64>,
    log_emit: Array2<f64>,
    delta: Array1<f64>,
    backpointers: Vec<Vec<usize>>,
    len: usize,
}

impl OnlineViterbi {
    pub fn new(model: &HmmModel) -> Result<Self> {
        model.validate()?;
        Self::from_log_scores(
            model.pi.mapv(f64::ln),
            model.trans.mapv(f64::ln),
            model.emit.mapv(f64::ln),
        )
    }

    /// Decoder over arbitrary log scores. Only shapes are checked, so the
    /// scores need not come from normalized distributions.
    pub fn from_log_scores(log_pi: Array1<f64>, log_trans: Array2<f64>, log_emit: Array2<f64>) -> Result<Self> {
        let n = log_pi.len();
        if n == 0 {
            return Err(Error::Dimension {
                field: "pi".into(),
                expected: 1,
                found: 0,
            });
        }
        check_dim("A", n, log_trans.nrows())?;
        check_dim("A", n, log_trans.ncols())?;
        check_dim("B", n, log_emit.nrows())?;
        Ok(OnlineViterbi {
            log_pi,
            log_trans,
            log_emit,
            delta: Array1::from_elem(n, f64::NEG_INFINITY),
            backpointers: Vec::new(),
            len: 0,
        })
    }

    /// Number of symbols consumed.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Current log scores `ln δ_t(x)`.
    pub fn scores(&self) -> &Array1<f64> {
        &self.delta
    }

    pub fn push(&mut self, symbol: usize) -> Result<()> {
        let n = self.log_pi.len();
        let m = self.log_emit.ncols();
        if symbol >= m {
            return Err(Error::SymbolOutOfRange {
                t: self.len,
                symbol,
                num_symbols: m,
            });
        }
        let mut next = Array1::from_elem(n, f64::NEG_INFINITY);
        if self.len == 0 {
            for j in 0..n {
                next[j] = self.log_pi[j] + self.log_emit[[j, symbol]];
            }
        } else {
            let mut pointers = vec![0; n];
            for j in 0..n {
                let mut best = f64::NEG_INFINITY;
                let mut arg = 0;
                for i in 0..n {
                    let score = self.delta[i] + self.log_trans[[i, j]];
                    if score > best {
                        best = score;
                        arg = i;
                    }
                }
                next[j] = best + self.log_emit[[j, symbol]];
                pointers[j] = arg;
            }
            self.backpointers.push(pointers);
        }
        if next.iter().all(|&d| d == f64::NEG_INFINITY) {
            return Err(Error::ImpossibleObservation {
                sequence: None,
                t: self.len,
            });
        }
        self.delta = next;
        self.len += 1;
        Ok(())
    }

    /// Best path for the symbols pushed so far.
    pub fn decode(&self) -> Result<DecodeResult> {
        if self.len == 0 {
            return Err(Error::EmptySequence);
        }
        let mut last = 0;
        for (i, &d) in self.delta.iter().enumerate() {
            if d > self.delta[last] {
                last = i;
            }
        }
        let mut path = vec![0; self.len];
        path[self.len - 1] = last;
        for t in (1..self.len).rev() {
            path[t - 1] = self.backpointers[t - 1][path[t]];
        }
        Ok(DecodeResult {
            path,
            log_joint_score: self.delta[last],
        })
    }
}

/// Viterbi decoding over raw log scores; see [`OnlineViterbi::from_log_scores`].
pub fn viterbi_log_scores(
    log_pi: Array1<f64>,
    log_trans: Array2<f64>,
    log_emit: Array2<f64>,
    obs: &[usize],
) -> Result<DecodeResult> {
    let mut decoder = OnlineViterbi::from_log_scores(log_pi, log_trans, log_emit)?;
    for &y in obs {
        decoder.push(y)?;
    }
    decoder.decode()
}

/// Viterbi decoding of a complete sequence.
pub fn viterbi(model: &HmmModel, obs: &[usize]) -> Result<DecodeResult> {
    truncated_viterbi(model, obs)
}

/// Best path for an observation prefix, backtracked from the best state at
/// the prefix's last step.
pub fn truncated_viterbi(model: &HmmModel, obs_prefix: &[usize]) -> Result<DecodeResult> {
    model.check_obs(obs_prefix)?;
    let mut decoder = OnlineViterbi::new(model)?;
    for &y in obs_prefix {
        decoder.push(y)?;
    }
    decoder.decode()
}

use ndarray::{Array1, Array2, ArrayView1};

use super::dist::{check_dim, check_matrix, check_row};
use crate::error::{Error, Result};

/// A time-invariant discrete hidden Markov model.
///
/// `trans[[i, j]] = P(x_t = j | x_{t-1} = i)` and
/// `emit[[i, k]] = P(y_t = k | x_t = i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct HmmModel {
    pub pi: Array1<f64>,
    pub trans: Array2<f64>,
    pub emit: Array2<f64>,
}

impl HmmModel {
    /// Builds and validates a model.
    pub fn new(pi: Array1<f64>, trans: Array2<f64>, emit: Array2<f64>) -> Result<Self> {
        let model = HmmModel { pi, trans, emit };
        model.validate()?;
        Ok(model)
    }

    /// Every row uniform.
    pub fn uniform(num_states: usize, num_symbols: usize) -> Self {
        HmmModel {
            pi: Array1::from_elem(num_states, 1.0 / num_states as f64),
            trans: Array2::from_elem((num_states, num_states), 1.0 / num_states as f64),
            emit: Array2::from_elem((num_states, num_symbols), 1.0 / num_symbols as f64),
        }
    }

    pub fn num_states(&self) -> usize {
        self.pi.len()
    }

    pub fn num_symbols(&self) -> usize {
        self.emit.ncols()
    }

    /// Checks shapes and that every row is a probability vector.
    pub fn validate(&self) -> Result<()> {
        let n = self.pi.len();
        if n == 0 {
            return Err(Error::Dimension {
                field: "pi".into(),
                expected: 1,
                found: 0,
            });
        }
        check_row("pi", 0, self.pi.view())?;
        check_dim("A", n, self.trans.nrows())?;
        check_matrix("A", &self.trans, n, n)?;
        check_dim("B", n, self.emit.nrows())?;
        if self.emit.ncols() == 0 {
            return Err(Error::Dimension {
                field: "B".into(),
                expected: 1,
                found: 0,
            });
        }
        check_matrix("B", &self.emit, n, self.emit.ncols())
    }

    /// Emission column for `symbol`: `P(y = symbol | x)` for every state.
    pub fn emission_column(&self, symbol: usize) -> ArrayView1<'_, f64> {
        self.emit.column(symbol)
    }

    /// Checks that `obs` is nonempty and within the symbol range.
    pub fn check_obs(&self, obs: &[usize]) -> Result<()> {
        check_symbols(obs, self.num_symbols())
    }
}

pub(crate) fn check_symbols(obs: &[usize], num_symbols: usize) -> Result<()> {
    if obs.is_empty() {
        return Err(Error::EmptySequence);
    }
    for (t, &symbol) in obs.iter().enumerate() {
        if symbol >= num_symbols {
            return Err(Error::SymbolOutOfRange {
                t,
                symbol,
                num_symbols,
            });
        }
    }
    Ok(())
}

/// Validates an HMM.
pub fn validate_hmm(model: &HmmModel) -> Result<()> {
    model.validate()
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn degenerate_single_state_is_valid() {
        assert!(HmmModel::new(array![1.0], array![[1.0]], array![[1.0]]).is_ok());
    }

    #[test]
    fn pi_sum_error_reports_actual_sum() {
        let err = HmmModel::new(
            array![0.5, 0.6],
            array![[0.5, 0.5], [0.5, 0.5]],
            array![[1.0], [1.0]],
        )
        .unwrap_err();
        match err {
            Error::Stochasticity { field, row, sum } => {
                assert_eq!(field, "pi");
                assert_eq!(row, 0);
                assert!((sum - 1.1).abs() < 1e-12);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn short_transition_row_is_dimension_error() {
        let err = HmmModel::new(array![0.5, 0.5], array![[1.0], [1.0]], array![[1.0], [1.0]]).unwrap_err();
        assert!(matches!(err, Error::Dimension { ref field, expected: 2, found: 1 } if field == "A"));
    }

    #[test]
    fn emission_row_error_names_row() {
        let err = HmmModel::new(
            array![0.5, 0.5],
            array![[0.5, 0.5], [0.5, 0.5]],
            array![[0.5, 0.5], [0.3, 0.3]],
        )
        .unwrap_err();
        assert!(matches!(err, Error::Stochasticity { ref field, row: 1, .. } if field == "B"));
    }

    #[test]
    fn obs_checks() {
        let m = HmmModel::uniform(2, 3);
        assert!(m.check_obs(&[0, 2, 1]).is_ok());
        assert!(matches!(m.check_obs(&[]), Err(Error::EmptySequence)));
        assert!(matches!(
            m.check_obs(&[0, 3]),
            Err(Error::SymbolOutOfRange { t: 1, symbol: 3, .. })
        ));
    }
}

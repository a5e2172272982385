use ndarray::{Array2, ArrayView1};

use crate::error::{Error, Result};

/// Absolute tolerance on row sums of stochastic vectors and matrices.
pub const PROB_TOLERANCE: f64 = 1e-9;

/// A probability vector over a finite set of outcomes.
#[derive(Debug, Clone, PartialEq)]
pub struct CategoricalDist(Vec<f64>);

impl CategoricalDist {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        check_row("probs", 0, ArrayView1::from(&probs))?;
        Ok(CategoricalDist(probs))
    }

    /// Uniform distribution over `n` outcomes.
    pub fn uniform(n: usize) -> Self {
        CategoricalDist(vec![1.0 / n as f64; n])
    }

    pub(crate) fn from_normalized(probs: Vec<f64>) -> Self {
        CategoricalDist(probs)
    }

    pub fn probs(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Index of the most probable outcome, smallest index on ties.
    pub fn argmax(&self) -> usize {
        argmax(&self.0)
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

impl std::ops::Index<usize> for CategoricalDist {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

pub(crate) fn argmax(xs: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in xs.iter().enumerate().skip(1) {
        if x > xs[best] {
            best = i;
        }
    }
    best
}

/// Checks that `row` is a probability vector.
pub(crate) fn check_row(field: &str, row: usize, values: ArrayView1<'_, f64>) -> Result<()> {
    if values.is_empty() {
        return Err(Error::Dimension {
            field: field.to_string(),
            expected: 1,
            found: 0,
        });
    }
    for (col, &value) in values.iter().enumerate() {
        if !value.is_finite() || !(0.0..=1.0 + PROB_TOLERANCE).contains(&value) {
            return Err(Error::InvalidProbability {
                field: field.to_string(),
                row,
                col,
                value,
            });
        }
    }
    let sum: f64 = values.sum();
    if (sum - 1.0).abs() > PROB_TOLERANCE {
        return Err(Error::Stochasticity {
            field: field.to_string(),
            row,
            sum,
        });
    }
    Ok(())
}

/// Checks shape and row-stochasticity of a matrix.
pub(crate) fn check_matrix(field: &str, m: &Array2<f64>, rows: usize, cols: usize) -> Result<()> {
    check_dim(field, rows, m.nrows())?;
    check_dim(field, cols, m.ncols())?;
    for (r, row) in m.rows().into_iter().enumerate() {
        check_row(field, r, row)?;
    }
    Ok(())
}

pub(crate) fn check_dim(field: &str, expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::Dimension {
            field: field.to_string(),
            expected,
            found,
        });
    }
    Ok(())
}

/// Divides each row by its sum; rows summing to zero become uniform.
pub(crate) fn normalize_rows(m: &mut Array2<f64>) {
    let ncols = m.ncols();
    for mut row in m.rows_mut() {
        let sum = row.sum();
        if sum > 0.0 {
            row.mapv_inplace(|v| v / sum);
        } else {
            row.fill(1.0 / ncols as f64);
        }
    }
}

use crate::error::{Error, Result};

/// Default cap on the number of joint states produced by flattening or unrolling.
pub const DEFAULT_SIZE_CAP: usize = 1_000_000;

/// A tuple of per-component indices, e.g. one state per chain.
pub type JointState = Vec<usize>;

/// Mixed-radix indexing over a product of finite sets.
///
/// Index order is row-major: the first component varies slowest.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JointSpace {
    dims: Vec<usize>,
    strides: Vec<usize>,
    size: usize,
}

impl JointSpace {
    /// Builds the space, failing when its size exceeds `cap`.
    pub fn new(dims: &[usize], cap: usize) -> Result<Self> {
        let size = dims.iter().fold(1u128, |acc, &d| acc.saturating_mul(d as u128));
        if size > cap as u128 {
            return Err(Error::SizeCap { size, cap });
        }
        let mut strides = vec![1; dims.len()];
        for k in (0..dims.len().saturating_sub(1)).rev() {
            strides[k] = strides[k + 1] * dims[k + 1];
        }
        Ok(JointSpace {
            dims: dims.to_vec(),
            strides,
            size: size as usize,
        })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn arity(&self) -> usize {
        self.dims.len()
    }

    pub fn index(&self, tuple: &[usize]) -> usize {
        debug_assert_eq!(tuple.len(), self.dims.len());
        tuple.iter().zip(&self.strides).map(|(v, s)| v * s).sum()
    }

    /// Component `k` of the tuple at `index`.
    pub fn component(&self, index: usize, k: usize) -> usize {
        (index / self.strides[k]) % self.dims[k]
    }

    pub fn tuple(&self, index: usize) -> JointState {
        (0..self.dims.len()).map(|k| self.component(index, k)).collect()
    }

    /// Iterates all tuples in index order.
    pub fn tuples(&self) -> impl Iterator<Item = JointState> + '_ {
        (0..self.size).map(|i| self.tuple(i))
    }
}

/// Row index of a parent configuration in a CPT whose rows are ordered
/// row-major over `cards` (first parent slowest).
pub(crate) fn config_index(values: impl IntoIterator<Item = usize>, cards: impl IntoIterator<Item = usize>) -> usize {
    values
        .into_iter()
        .zip(cards)
        .fold(0, |acc, (v, c)| acc * c + v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn row_major_order() {
        let space = JointSpace::new(&[2, 3], 100).unwrap();
        assert_eq!(space.size(), 6);
        let tuples: Vec<_> = space.tuples().collect();
        assert_eq!(tuples[0], vec![0, 0]);
        assert_eq!(tuples[1], vec![0, 1]);
        assert_eq!(tuples[3], vec![1, 0]);
        for (i, t) in tuples.iter().enumerate() {
            assert_eq!(space.index(t), i);
        }
        assert_eq!(config_index([1, 2], [2, 3]), 5);
    }

    #[test]
    fn empty_space_has_one_element() {
        let space = JointSpace::new(&[], 1).unwrap();
        assert_eq!(space.size(), 1);
        assert_eq!(space.tuple(0), Vec::<usize>::new());
    }

    #[test]
    fn cap_is_enforced() {
        assert!(matches!(
            JointSpace::new(&[10, 10, 10], 999),
            Err(Error::SizeCap { size: 1000, cap: 999 })
        ));
    }
}

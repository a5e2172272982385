use ndarray::{Array1, Array2};

use super::dist::check_matrix;
use super::hmm::HmmModel;
use super::joint::{config_index, JointSpace};
use crate::error::{Error, Result};

/// Which slice of the two-slice template a parent lives in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Slice {
    /// Slice `t - 1`.
    Previous,
    /// Slice `t`.
    Current,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SliceParent {
    pub slice: Slice,
    pub var: usize,
}

impl SliceParent {
    pub fn previous(var: usize) -> Self {
        SliceParent {
            slice: Slice::Previous,
            var,
        }
    }

    pub fn current(var: usize) -> Self {
        SliceParent {
            slice: Slice::Current,
            var,
        }
    }
}

/// One template variable with its initial-slice CPT and its transition CPT.
///
/// CPT rows enumerate parent configurations row-major over the listed parents
/// (first parent slowest); columns are the variable's values.
///
/// Observed variables are emitted within a slice: their transition parents
/// must all be in the current slice, and the same CPT applies at `t = 1`.
/// Their `init_parents`/`init_cpt` are either left empty or repeat the
/// transition CPT exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct TbnVariable {
    pub card: usize,
    pub observed: bool,
    pub init_parents: Vec<usize>,
    pub init_cpt: Array2<f64>,
    pub trans_parents: Vec<SliceParent>,
    pub trans_cpt: Array2<f64>,
}

impl TbnVariable {
    fn init_mirrors_transition(&self) -> bool {
        self.init_parents.is_empty() && self.init_cpt.is_empty()
    }
}

/// A dynamic Bayesian network given as an initial network and a two-slice
/// transition template.
#[derive(Debug, Clone, PartialEq)]
pub struct Tbn2Model {
    pub vars: Vec<TbnVariable>,
}

impl Tbn2Model {
    pub fn new(vars: Vec<TbnVariable>) -> Result<Self> {
        let model = Tbn2Model { vars };
        model.validate()?;
        Ok(model)
    }

    pub fn num_vars(&self) -> usize {
        self.vars.len()
    }

    pub fn cardinalities(&self) -> Vec<usize> {
        self.vars.iter().map(|v| v.card).collect()
    }

    pub fn hidden_vars(&self) -> Vec<usize> {
        (0..self.vars.len()).filter(|&v| !self.vars[v].observed).collect()
    }

    pub fn observed_vars(&self) -> Vec<usize> {
        (0..self.vars.len()).filter(|&v| self.vars[v].observed).collect()
    }

    /// Joint hidden state space, row-major over hidden variables in index order.
    pub fn state_space(&self, cap: usize) -> Result<JointSpace> {
        let dims: Vec<usize> = self.hidden_vars().iter().map(|&v| self.vars[v].card).collect();
        JointSpace::new(&dims, cap)
    }

    /// Joint symbol space, row-major over observed variables in index order.
    /// A template without observed variables has a single dummy symbol.
    pub fn symbol_space(&self, cap: usize) -> Result<JointSpace> {
        let dims: Vec<usize> = self.observed_vars().iter().map(|&v| self.vars[v].card).collect();
        JointSpace::new(&dims, cap)
    }

    /// `P(X_1^v = values[v] | init parents)` for a full slice assignment.
    pub fn init_factor(&self, v: usize, values: &[usize]) -> f64 {
        let var = &self.vars[v];
        if var.observed && var.init_mirrors_transition() {
            return self.trans_factor(v, values, values);
        }
        let row = config_index(
            var.init_parents.iter().map(|&p| values[p]),
            var.init_parents.iter().map(|&p| self.vars[p].card),
        );
        var.init_cpt[[row, values[v]]]
    }

    /// `P(X_t^v = cur[v] | parents)` with parents read from `prev` and `cur`.
    pub fn trans_factor(&self, v: usize, prev: &[usize], cur: &[usize]) -> f64 {
        let var = &self.vars[v];
        let row = config_index(
            var.trans_parents.iter().map(|p| match p.slice {
                Slice::Previous => prev[p.var],
                Slice::Current => cur[p.var],
            }),
            var.trans_parents.iter().map(|p| self.vars[p.var].card),
        );
        var.trans_cpt[[row, cur[v]]]
    }

    pub fn validate(&self) -> Result<()> {
        if self.vars.is_empty() {
            return Err(Error::Dimension {
                field: "vars".into(),
                expected: 1,
                found: 0,
            });
        }
        let n = self.vars.len();
        for (v, var) in self.vars.iter().enumerate() {
            if var.card == 0 {
                return Err(Error::Dimension {
                    field: format!("vars[{v}].card"),
                    expected: 1,
                    found: 0,
                });
            }
            for (k, &p) in var.init_parents.iter().enumerate() {
                if p >= n || p == v || var.init_parents[..k].contains(&p) {
                    return Err(Error::Structure(format!("vars[{v}].init_parents has invalid entry {p}")));
                }
                if !var.observed && self.vars[p].observed {
                    return Err(Error::Structure(format!(
                        "hidden variable {v} cannot have observed parent {p}"
                    )));
                }
            }
            for (k, p) in var.trans_parents.iter().enumerate() {
                if p.var >= n || (p.slice == Slice::Current && p.var == v) || var.trans_parents[..k].contains(p) {
                    return Err(Error::Structure(format!(
                        "vars[{v}].trans_parents has invalid entry {}",
                        p.var
                    )));
                }
                if !var.observed && self.vars[p.var].observed {
                    return Err(Error::Structure(format!(
                        "hidden variable {v} cannot have observed parent {}",
                        p.var
                    )));
                }
                if var.observed && p.slice == Slice::Previous {
                    return Err(Error::Structure(format!(
                        "observed variable {v} can only depend on its own slice"
                    )));
                }
            }
            let trans_rows = var.trans_parents.iter().map(|p| self.vars[p.var].card).product();
            check_matrix(&format!("vars[{v}].trans_cpt"), &var.trans_cpt, trans_rows, var.card)?;
            if var.observed && var.init_mirrors_transition() {
                continue;
            }
            let init_rows = var.init_parents.iter().map(|&p| self.vars[p].card).product();
            check_matrix(&format!("vars[{v}].init_cpt"), &var.init_cpt, init_rows, var.card)?;
            if var.observed {
                let same_parents = var.init_parents.len() == var.trans_parents.len()
                    && var.init_parents.iter().zip(&var.trans_parents).all(|(&a, b)| a == b.var);
                if !same_parents || var.init_cpt != var.trans_cpt {
                    return Err(Error::Structure(format!(
                        "observed variable {v} must use the same CPT in every slice"
                    )));
                }
            }
        }
        if self.hidden_vars().is_empty() {
            return Err(Error::Structure("template has no hidden variables".into()));
        }
        let init_edges: Vec<Vec<usize>> = self.vars.iter().map(|v| v.init_parents.clone()).collect();
        check_acyclic(&init_edges)?;
        let intra_edges: Vec<Vec<usize>> = self
            .vars
            .iter()
            .map(|v| {
                v.trans_parents
                    .iter()
                    .filter(|p| p.slice == Slice::Current)
                    .map(|p| p.var)
                    .collect()
            })
            .collect();
        check_acyclic(&intra_edges)
    }
}

/// Kahn's algorithm over `parents[v]` lists.
fn check_acyclic(parents: &[Vec<usize>]) -> Result<()> {
    let n = parents.len();
    let mut pending: Vec<usize> = parents.iter().map(Vec::len).collect();
    let mut ready: Vec<usize> = (0..n).filter(|&v| pending[v] == 0).collect();
    let mut done = vec![false; n];
    while let Some(v) = ready.pop() {
        done[v] = true;
        for (child, ps) in parents.iter().enumerate() {
            for _ in ps.iter().filter(|&&p| p == v) {
                pending[child] -= 1;
                if pending[child] == 0 {
                    ready.push(child);
                }
            }
        }
    }
    match done.iter().position(|d| !d) {
        Some(var) => Err(Error::CyclicGraph { var }),
        None => Ok(()),
    }
}

/// Unrolls the template into an HMM over the joint hidden state.
///
/// `pi` is the product of the initial network's CPTs, the transition matrix
/// is `P(X_t | X_{t-1}) = ∏_i P(X_t^i | parents)`, and the emission matrix is
/// the product of the observed variables' CPTs.
pub fn unroll_tbn(model: &Tbn2Model, cap: usize) -> Result<HmmModel> {
    model.validate()?;
    let states = model.state_space(cap)?;
    let symbols = model.symbol_space(cap)?;
    let hidden = model.hidden_vars();
    let observed = model.observed_vars();
    let s = states.size();

    let assign = |state: usize, symbol: usize| {
        let mut values = vec![0; model.num_vars()];
        for (k, &v) in hidden.iter().enumerate() {
            values[v] = states.component(state, k);
        }
        for (k, &v) in observed.iter().enumerate() {
            values[v] = symbols.component(symbol, k);
        }
        values
    };

    let mut pi = Array1::zeros(s);
    let mut trans = Array2::zeros((s, s));
    let mut emit = Array2::zeros((s, symbols.size()));
    for j in 0..s {
        let cur = assign(j, 0);
        pi[j] = hidden.iter().map(|&v| model.init_factor(v, &cur)).product();
        for i in 0..s {
            let prev = assign(i, 0);
            trans[[i, j]] = hidden.iter().map(|&v| model.trans_factor(v, &prev, &cur)).product();
        }
        for k in 0..symbols.size() {
            let cur = assign(j, k);
            emit[[j, k]] = observed.iter().map(|&v| model.trans_factor(v, &cur, &cur)).product();
        }
    }
    HmmModel::new(pi, trans, emit)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::joint::DEFAULT_SIZE_CAP;
    use ndarray::array;

    fn binary(trans_parents: Vec<SliceParent>, trans_cpt: Array2<f64>) -> TbnVariable {
        TbnVariable {
            card: 2,
            observed: false,
            init_parents: vec![],
            init_cpt: array![[0.5, 0.5]],
            trans_parents,
            trans_cpt,
        }
    }

    #[test]
    fn single_variable_unrolls_to_its_cpt() {
        let cpt = array![[0.9, 0.1], [0.3, 0.7]];
        let m = Tbn2Model::new(vec![binary(vec![SliceParent::previous(0)], cpt.clone())]).unwrap();
        let hmm = unroll_tbn(&m, DEFAULT_SIZE_CAP).unwrap();
        assert_eq!(hmm.trans, cpt);
        assert_eq!(hmm.pi, array![0.5, 0.5]);
        assert_eq!(hmm.emit, array![[1.0], [1.0]]);
    }

    #[test]
    fn independent_variables_give_product_chain() {
        let a = array![[0.9, 0.1], [0.3, 0.7]];
        let b = array![[0.6, 0.4], [0.2, 0.8]];
        let m = Tbn2Model::new(vec![
            binary(vec![SliceParent::previous(0)], a.clone()),
            binary(vec![SliceParent::previous(1)], b.clone()),
        ])
        .unwrap();
        let hmm = unroll_tbn(&m, DEFAULT_SIZE_CAP).unwrap();
        assert_eq!(hmm.num_states(), 4);
        for i in 0..4 {
            for j in 0..4 {
                let expected = a[[i / 2, j / 2]] * b[[i % 2, j % 2]];
                assert!((hmm.trans[[i, j]] - expected).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn intra_slice_cycle_is_rejected() {
        let m = Tbn2Model {
            vars: vec![
                binary(vec![SliceParent::current(1)], array![[0.5, 0.5], [0.5, 0.5]]),
                binary(vec![SliceParent::current(0)], array![[0.5, 0.5], [0.5, 0.5]]),
            ],
        };
        assert!(matches!(m.validate(), Err(Error::CyclicGraph { .. })));
    }

    #[test]
    fn observed_variable_cannot_look_back() {
        let mut obs = binary(vec![SliceParent::previous(0)], array![[0.5, 0.5], [0.5, 0.5]]);
        obs.observed = true;
        obs.init_cpt = Array2::zeros((0, 0));
        let m = Tbn2Model {
            vars: vec![binary(vec![SliceParent::previous(0)], array![[0.5, 0.5], [0.5, 0.5]]), obs],
        };
        assert!(matches!(m.validate(), Err(Error::Structure(_))));
    }

    #[test]
    fn bad_cpt_shape() {
        let m = Tbn2Model {
            vars: vec![binary(vec![SliceParent::previous(0)], array![[0.5, 0.5]])],
        };
        assert!(matches!(m.validate(), Err(Error::Dimension { ref field, .. }) if field == "vars[0].trans_cpt"));
    }

    #[test]
    fn observed_variable_becomes_emission() {
        let emission = array![[0.8, 0.2], [0.1, 0.9]];
        let m = Tbn2Model::new(vec![
            binary(vec![SliceParent::previous(0)], array![[0.9, 0.1], [0.3, 0.7]]),
            TbnVariable {
                card: 2,
                observed: true,
                init_parents: vec![],
                init_cpt: Array2::zeros((0, 0)),
                trans_parents: vec![SliceParent::current(0)],
                trans_cpt: emission.clone(),
            },
        ])
        .unwrap();
        let hmm = unroll_tbn(&m, DEFAULT_SIZE_CAP).unwrap();
        assert_eq!(hmm.emit, emission);
    }
}

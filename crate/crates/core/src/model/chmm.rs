use ndarray::{Array1, Array2};

use super::dist::{check_dim, check_matrix, check_row};
use super::hmm::HmmModel;
use super::joint::{JointSpace, DEFAULT_SIZE_CAP};
use crate::error::{Error, Result};

/// One chain of a coupled HMM: its initial distribution and its emission matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Chain {
    pub pi: Array1<f64>,
    pub emit: Array2<f64>,
}

impl Chain {
    pub fn num_states(&self) -> usize {
        self.pi.len()
    }

    pub fn num_symbols(&self) -> usize {
        self.emit.ncols()
    }
}

/// Directed coupling `from -> to`: `matrix[[i, j]]` weighs chain `to` moving
/// to state `j` when chain `from` was in state `i` at the previous step.
#[derive(Debug, Clone, PartialEq)]
pub struct Coupling {
    pub from: usize,
    pub to: usize,
    pub matrix: Array2<f64>,
}

/// Coupled HMM with multiplicative couplings.
///
/// The state of chain `l` at time `t` depends on the previous states of its
/// parent chains `Pa(l)` (the `from` ends of couplings into `l`):
///
/// `P(x_t^l = j | x_{t-1}) ∝ ∏_{l' ∈ Pa(l)} a^(l',l)[x_{t-1}^{l'}, j]`, normalized over `j`.
///
/// Joint states are indexed row-major over chain order, chain 0 slowest.
#[derive(Debug, Clone, PartialEq)]
pub struct ChmmModel {
    pub chains: Vec<Chain>,
    pub couplings: Vec<Coupling>,
}

impl ChmmModel {
    pub fn new(chains: Vec<Chain>, couplings: Vec<Coupling>) -> Result<Self> {
        let model = ChmmModel { chains, couplings };
        model.validate()?;
        Ok(model)
    }

    /// A single-chain model equivalent to `hmm`.
    pub fn from_hmm(hmm: &HmmModel) -> Self {
        ChmmModel {
            chains: vec![Chain {
                pi: hmm.pi.clone(),
                emit: hmm.emit.clone(),
            }],
            couplings: vec![Coupling {
                from: 0,
                to: 0,
                matrix: hmm.trans.clone(),
            }],
        }
    }

    pub fn num_chains(&self) -> usize {
        self.chains.len()
    }

    pub fn states_per_chain(&self) -> Vec<usize> {
        self.chains.iter().map(Chain::num_states).collect()
    }

    pub fn symbols_per_chain(&self) -> Vec<usize> {
        self.chains.iter().map(Chain::num_symbols).collect()
    }

    /// Parent chains of `chain`, ascending.
    pub fn parents(&self, chain: usize) -> Vec<usize> {
        let mut p: Vec<usize> = self
            .couplings
            .iter()
            .filter(|c| c.to == chain)
            .map(|c| c.from)
            .collect();
        p.sort_unstable();
        p
    }

    pub fn coupling(&self, from: usize, to: usize) -> Option<&Coupling> {
        self.couplings.iter().find(|c| c.from == from && c.to == to)
    }

    pub fn coupling_mut(&mut self, from: usize, to: usize) -> Option<&mut Coupling> {
        self.couplings.iter_mut().find(|c| c.from == from && c.to == to)
    }

    /// Joint state space of all chains (row-major, chain 0 slowest).
    pub fn state_space(&self, cap: usize) -> Result<JointSpace> {
        JointSpace::new(&self.states_per_chain(), cap)
    }

    /// Joint symbol space of all chains.
    pub fn symbol_space(&self, cap: usize) -> Result<JointSpace> {
        JointSpace::new(&self.symbols_per_chain(), cap)
    }

    /// `P(x_t^chain = · | x_{t-1} = prev)`, or `None` when every coupling
    /// product vanishes.
    pub fn transition_conditional(&self, chain: usize, prev: &[usize]) -> Option<Vec<f64>> {
        let n = self.chains[chain].num_states();
        let mut weights = vec![1.0; n];
        for c in self.couplings.iter().filter(|c| c.to == chain) {
            let row = c.matrix.row(prev[c.from]);
            for (w, a) in weights.iter_mut().zip(row) {
                *w *= a;
            }
        }
        let sum: f64 = weights.iter().sum();
        if sum > 0.0 {
            weights.iter_mut().for_each(|w| *w /= sum);
            Some(weights)
        } else {
            None
        }
    }

    /// Checks shapes, stochasticity, and that every chain is its own parent.
    pub fn validate(&self) -> Result<()> {
        if self.chains.is_empty() {
            return Err(Error::Dimension {
                field: "chains".into(),
                expected: 1,
                found: 0,
            });
        }
        for (l, chain) in self.chains.iter().enumerate() {
            let pi_field = format!("chains[{l}].pi");
            if chain.pi.is_empty() {
                return Err(Error::Dimension {
                    field: pi_field,
                    expected: 1,
                    found: 0,
                });
            }
            check_row(&pi_field, 0, chain.pi.view())?;
            let emit_field = format!("chains[{l}].emit");
            check_dim(&emit_field, chain.num_states(), chain.emit.nrows())?;
            if chain.emit.ncols() == 0 {
                return Err(Error::Dimension {
                    field: emit_field,
                    expected: 1,
                    found: 0,
                });
            }
            check_matrix(&emit_field, &chain.emit, chain.num_states(), chain.emit.ncols())?;
        }
        let num_chains = self.chains.len();
        for (k, c) in self.couplings.iter().enumerate() {
            for (end, idx) in [("from", c.from), ("to", c.to)] {
                if idx >= num_chains {
                    return Err(Error::Topology {
                        chain: idx,
                        reason: format!("couplings[{k}].{end} refers to a chain that does not exist"),
                    });
                }
            }
            if self.couplings[..k].iter().any(|o| o.from == c.from && o.to == c.to) {
                return Err(Error::Topology {
                    chain: c.to,
                    reason: format!("duplicate coupling {} -> {}", c.from, c.to),
                });
            }
            check_matrix(
                &format!("couplings[{k}].matrix"),
                &c.matrix,
                self.chains[c.from].num_states(),
                self.chains[c.to].num_states(),
            )?;
        }
        for l in 0..num_chains {
            let parents = self.parents(l);
            if !parents.contains(&l) {
                return Err(Error::Topology {
                    chain: l,
                    reason: "chain must depend on its own previous state".into(),
                });
            }
            // every parent configuration must leave some successor state reachable
            let dims: Vec<usize> = parents.iter().map(|&p| self.chains[p].num_states()).collect();
            let space = JointSpace::new(&dims, DEFAULT_SIZE_CAP)?;
            let mut prev = vec![0; num_chains];
            for cfg in space.tuples() {
                for (&p, &s) in parents.iter().zip(&cfg) {
                    prev[p] = s;
                }
                if self.transition_conditional(l, &prev).is_none() {
                    return Err(Error::Topology {
                        chain: l,
                        reason: format!("coupling rows have disjoint support for parent states {cfg:?}"),
                    });
                }
            }
        }
        Ok(())
    }

    /// Checks a joint observation sequence against the chains' alphabets.
    pub fn check_obs(&self, obs: &[Vec<usize>]) -> Result<()> {
        if obs.is_empty() {
            return Err(Error::EmptySequence);
        }
        let num_chains = self.chains.len();
        for (t, step) in obs.iter().enumerate() {
            if step.len() != num_chains {
                return Err(Error::ChainArity {
                    t,
                    expected: num_chains,
                    found: step.len(),
                });
            }
            for (chain, &symbol) in self.chains.iter().zip(step) {
                if symbol >= chain.num_symbols() {
                    return Err(Error::SymbolOutOfRange {
                        t,
                        symbol,
                        num_symbols: chain.num_symbols(),
                    });
                }
            }
        }
        Ok(())
    }
}

/// Nearest-neighbour parent sets: `Pa(l) = {l-1, l, l+1}` clipped to valid chains.
pub fn nearest_neighbor_topology(num_chains: usize) -> Vec<Vec<usize>> {
    (0..num_chains)
        .map(|l| {
            (l.saturating_sub(1)..=(l + 1).min(num_chains - 1)).collect()
        })
        .collect()
}

/// Validates a coupled HMM.
pub fn validate_chmm(model: &ChmmModel) -> Result<()> {
    model.validate()
}

/// Collapses a coupled HMM into a single HMM over joint states and joint symbols
/// (row-major over chain order), refusing spaces larger than `cap`.
pub fn flatten_chmm(model: &ChmmModel, cap: usize) -> Result<HmmModel> {
    model.validate()?;
    let states = model.state_space(cap)?;
    let symbols = model.symbol_space(cap)?;
    let num_chains = model.num_chains();
    let s = states.size();

    let mut pi = Array1::zeros(s);
    let mut trans = Array2::zeros((s, s));
    let mut emit = Array2::zeros((s, symbols.size()));

    for i in 0..s {
        let prev = states.tuple(i);
        pi[i] = prev.iter().zip(&model.chains).map(|(&x, c)| c.pi[x]).product();

        // per-chain normalizers of the coupling products
        let mut norms = vec![0.0; num_chains];
        for (l, norm) in norms.iter_mut().enumerate() {
            for j in 0..model.chains[l].num_states() {
                *norm += coupling_product(model, l, &prev, j);
            }
        }
        for j in 0..s {
            let next = states.tuple(j);
            trans[[i, j]] = (0..num_chains)
                .map(|l| coupling_product(model, l, &prev, next[l]) / norms[l])
                .product();
        }
        for k in 0..symbols.size() {
            let sym = symbols.tuple(k);
            emit[[i, k]] = (0..num_chains)
                .map(|l| model.chains[l].emit[[prev[l], sym[l]]])
                .product();
        }
    }
    HmmModel::new(pi, trans, emit)
}

fn coupling_product(model: &ChmmModel, chain: usize, prev: &[usize], next: usize) -> f64 {
    model
        .couplings
        .iter()
        .filter(|c| c.to == chain)
        .map(|c| c.matrix[[prev[c.from], next]])
        .product()
}

//! Seeded random model generators for tests, benchmarks and self-checks.
//!
//! Entries are drawn uniformly from `[0.05, 1)` before row normalization, so
//! generated models have full support and, almost surely, distinct
//! parameters. Distinct paths can still tie exactly when they use the same
//! multiset of factors, e.g. with a single symbol.

use ndarray::{Array1, Array2};
use rand::Rng;

use crate::model::{Chain, ChmmModel, Coupling, HmmModel};

pub fn random_row<R: Rng + ?Sized>(rng: &mut R, len: usize) -> Array1<f64> {
    let raw: Array1<f64> = (0..len).map(|_| rng.random_range(0.05..1.0)).collect();
    let s = raw.sum();
    raw / s
}

pub fn random_stochastic<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> Array2<f64> {
    let mut m = Array2::zeros((rows, cols));
    for mut r in m.rows_mut() {
        r.assign(&random_row(rng, cols));
    }
    m
}

pub fn random_hmm<R: Rng + ?Sized>(rng: &mut R, num_states: usize, num_symbols: usize) -> HmmModel {
    HmmModel {
        pi: random_row(rng, num_states),
        trans: random_stochastic(rng, num_states, num_states),
        emit: random_stochastic(rng, num_states, num_symbols),
    }
}

/// Random coupled HMM with the given parent sets (`topology[l]` lists the
/// parents of chain `l`, which must include `l`).
pub fn random_chmm<R: Rng + ?Sized>(
    rng: &mut R,
    states: &[usize],
    symbols: &[usize],
    topology: &[Vec<usize>],
) -> ChmmModel {
    let chains = states
        .iter()
        .zip(symbols)
        .map(|(&n, &m)| Chain {
            pi: random_row(rng, n),
            emit: random_stochastic(rng, n, m),
        })
        .collect();
    let mut couplings = Vec::new();
    for (to, parents) in topology.iter().enumerate() {
        for &from in parents {
            couplings.push(Coupling {
                from,
                to,
                matrix: random_stochastic(rng, states[from], states[to]),
            });
        }
    }
    ChmmModel { chains, couplings }
}

pub fn random_obs<R: Rng + ?Sized>(rng: &mut R, num_symbols: usize, len: usize) -> Vec<usize> {
    (0..len).map(|_| rng.random_range(0..num_symbols)).collect()
}

pub fn random_joint_obs<R: Rng + ?Sized>(rng: &mut R, symbols: &[usize], len: usize) -> Vec<Vec<usize>> {
    (0..len)
        .map(|_| symbols.iter().map(|&m| rng.random_range(0..m)).collect())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{nearest_neighbor_topology, rng_from_seed};

    #[test]
    fn generated_models_validate() {
        let mut rng = rng_from_seed(1);
        for n in 1..5 {
            random_hmm(&mut rng, n, 3).validate().unwrap();
        }
        let topo = nearest_neighbor_topology(3);
        random_chmm(&mut rng, &[2, 3, 2], &[2, 2, 3], &topo).validate().unwrap();
    }
}

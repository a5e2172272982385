//! Ancestral sampling of state paths and observations.
//!
//! All randomness comes from [`ChaCha8Rng`] seeded with `seed_from_u64`, so a
//! `(model, length, seed)` triple always produces the same draw on a given
//! build.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::chmm::ChmmModel;
use super::hmm::HmmModel;
use super::joint::JointState;
use super::obs::{JointObsSequence, ObsSequence};
use crate::error::{Error, Result};

pub type SeededRng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Draws an index from unnormalized nonnegative weights by inverse CDF.
pub(crate) fn draw<'a, R: Rng + ?Sized>(weights: impl IntoIterator<Item = &'a f64> + Clone, rng: &mut R) -> usize {
    let total: f64 = weights.clone().into_iter().sum();
    let u = rng.random::<f64>() * total;
    let mut acc = 0.0;
    let mut last_positive = 0;
    for (i, &w) in weights.into_iter().enumerate() {
        if w > 0.0 {
            last_positive = i;
            acc += w;
            if u < acc {
                return i;
            }
        }
    }
    last_positive
}

fn check_len(len: usize) -> Result<()> {
    if len == 0 {
        return Err(Error::InvalidArgument("sample length must be at least 1".into()));
    }
    Ok(())
}

/// Samples a state path and observation sequence of length `len`.
pub fn sample_hmm(model: &HmmModel, len: usize, seed: u64) -> Result<(Vec<usize>, ObsSequence)> {
    sample_hmm_with(model, len, &mut rng_from_seed(seed))
}

pub fn sample_hmm_with<R: Rng + ?Sized>(
    model: &HmmModel,
    len: usize,
    rng: &mut R,
) -> Result<(Vec<usize>, ObsSequence)> {
    model.validate()?;
    check_len(len)?;
    let mut states = Vec::with_capacity(len);
    let mut symbols = Vec::with_capacity(len);
    let mut x = draw(&model.pi, rng);
    for t in 0..len {
        if t > 0 {
            x = draw(model.trans.row(x), rng);
        }
        states.push(x);
        symbols.push(draw(model.emit.row(x), rng));
    }
    Ok((states, ObsSequence(symbols)))
}

/// Samples per-chain state tuples and observation tuples of length `len`.
pub fn sample_chmm(model: &ChmmModel, len: usize, seed: u64) -> Result<(Vec<JointState>, JointObsSequence)> {
    sample_chmm_with(model, len, &mut rng_from_seed(seed))
}

pub fn sample_chmm_with<R: Rng + ?Sized>(
    model: &ChmmModel,
    len: usize,
    rng: &mut R,
) -> Result<(Vec<JointState>, JointObsSequence)> {
    model.validate()?;
    check_len(len)?;
    let mut states: Vec<JointState> = Vec::with_capacity(len);
    let mut symbols = Vec::with_capacity(len);
    for t in 0..len {
        let x: JointState = if t == 0 {
            model.chains.iter().map(|c| draw(&c.pi, rng)).collect()
        } else {
            let prev = &states[t - 1];
            (0..model.num_chains())
                .map(|l| {
                    let cond = model
                        .transition_conditional(l, prev)
                        .expect("validated coupling supports every parent configuration");
                    draw(&cond, rng)
                })
                .collect()
        };
        let y = x
            .iter()
            .zip(&model.chains)
            .map(|(&s, c)| draw(c.emit.row(s), rng))
            .collect();
        states.push(x);
        symbols.push(y);
    }
    Ok((states, JointObsSequence(symbols)))
}

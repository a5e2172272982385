//! Two coupled chains: exact joint inference, per-chain marginals and EM.

use dbnkit::chmm::{chmm_em, chmm_likelihood, chmm_smooth};
use dbnkit::inference::log_likelihood;
use dbnkit::learning::EmConfig;
use dbnkit::model::{
    flatten_chmm, nearest_neighbor_topology, rng_from_seed, sample_chmm_with, ChmmModel, DEFAULT_SIZE_CAP,
};
use dbnkit::random::random_chmm;

fn main() -> dbnkit::Result<()> {
    let mut rng = rng_from_seed(3);
    let topology = nearest_neighbor_topology(2);
    let truth: ChmmModel = random_chmm(&mut rng, &[2, 3], &[2, 2], &topology);
    truth.validate()?;

    let (states, obs) = sample_chmm_with(&truth, 8, &mut rng)?;
    println!("hidden: {states:?}");
    println!("observed: {:?}", obs.0);

    let ll = chmm_likelihood(&truth, &obs)?;
    let flat = flatten_chmm(&truth, DEFAULT_SIZE_CAP)?;
    let symbols = truth.symbol_space(DEFAULT_SIZE_CAP)?;
    let flat_obs: Vec<usize> = obs.iter().map(|o| symbols.index(o)).collect();
    println!("log P(Y) = {ll:.10}, via flattened HMM {:.10}", log_likelihood(&flat, &flat_obs)?);

    let post = chmm_smooth(&truth, &obs)?;
    for (l, g) in post.chain_gamma.iter().enumerate() {
        println!("chain {l} smoothed marginals:\n{g:.3}");
    }

    let data: Vec<_> = (0..10)
        .map(|_| sample_chmm_with(&truth, 50, &mut rng).map(|(_, y)| y))
        .collect::<Result<_, _>>()?;
    let init = random_chmm(&mut rng, &[2, 3], &[2, 2], &topology);
    let (_, trace) = chmm_em(&init, &data, &EmConfig::default())?;
    println!(
        "EM: ll {:.3} -> {:.3} in {} iterations",
        trace.log_likelihoods[0],
        trace.log_likelihoods.last().unwrap(),
        trace.iterations_run
    );
    Ok(())
}

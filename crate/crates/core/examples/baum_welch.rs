//! Unsupervised training with Baum-Welch from sampled sequences.

use dbnkit::learning::{baum_welch, EmConfig};
use dbnkit::model::{rng_from_seed, sample_hmm_with, HmmModel};
use dbnkit::random::random_hmm;
use ndarray::array;

fn main() -> dbnkit::Result<()> {
    let truth = HmmModel::new(
        array![0.5, 0.5],
        array![[0.95, 0.05], [0.1, 0.9]],
        array![[0.8, 0.15, 0.05], [0.05, 0.25, 0.7]],
    )?;
    let mut rng = rng_from_seed(42);
    let data: Vec<_> = (0..20)
        .map(|_| sample_hmm_with(&truth, 100, &mut rng).map(|(_, y)| y))
        .collect::<Result<_, _>>()?;

    let init = random_hmm(&mut rng, 2, 3);
    let (model, trace) = baum_welch(&init, &data, &EmConfig::default())?;

    for (k, ll) in trace.log_likelihoods.iter().enumerate().step_by(5) {
        println!("iter {:3}  ll {:.4}", k + 1, ll);
    }
    println!("converged: {} after {} iterations", trace.converged, trace.iterations_run);
    println!("A =\n{:.3}", model.trans);
    println!("B =\n{:.3}", model.emit);
    Ok(())
}

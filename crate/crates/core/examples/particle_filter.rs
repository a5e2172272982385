//! Bootstrap particle filter against the exact filter.

use dbnkit::inference::{filter, particle_filter, ParticleFilterConfig};
use dbnkit::model::{sample_hmm, HmmModel};
use ndarray::array;

fn main() -> dbnkit::Result<()> {
    let model = HmmModel::new(
        array![0.5, 0.5],
        array![[0.9, 0.1], [0.2, 0.8]],
        array![[0.8, 0.2], [0.3, 0.7]],
    )?;
    let (_, obs) = sample_hmm(&model, 20, 7)?;
    let exact = filter(&model, &obs)?;

    for k in [10, 100, 1_000, 10_000] {
        let cfg = ParticleFilterConfig {
            num_particles: k,
            seed: 7,
            ..Default::default()
        };
        let run = particle_filter(&model, &obs, &cfg)?;
        let mse = run
            .estimates
            .iter()
            .zip(&exact)
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            / exact.len() as f64;
        println!(
            "K={k:6}  rmse {:.5}  resampled {} times  final ESS {:.0}",
            mse.sqrt(),
            run.resampled_at.len(),
            run.steps.last().unwrap().effective_sample_size()
        );
    }
    Ok(())
}

//! Offline and online Viterbi decoding.

use dbnkit::decoding::{truncated_viterbi, viterbi, OnlineViterbi};
use dbnkit::model::{sample_hmm, HmmModel};
use ndarray::array;

fn main() -> dbnkit::Result<()> {
    let model = HmmModel::new(
        array![0.6, 0.4],
        array![[0.7, 0.3], [0.4, 0.6]],
        array![[0.9, 0.1], [0.2, 0.8]],
    )?;

    let best = viterbi(&model, &[0, 1, 0])?;
    println!("path {:?}, joint probability {:.6}", best.path, best.log_joint_score.exp());

    let (truth, obs) = sample_hmm(&model, 30, 11)?;
    let decoded = viterbi(&model, &obs)?;
    let hits = truth.iter().zip(&decoded.path).filter(|(a, b)| a == b).count();
    println!("sampled 30 steps, decoded {hits}/30 states correctly");

    // the online decoder gives the prefix decode after every push
    let mut online = OnlineViterbi::new(&model)?;
    for (t, &y) in obs.iter().enumerate().take(6) {
        online.push(y)?;
        let d = online.decode()?;
        assert_eq!(d, truncated_viterbi(&model, &obs[..=t])?);
        println!("after y_{t}={y}: {:?}", d.path);
    }
    Ok(())
}

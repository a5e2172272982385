//! Forward filtering, smoothing and prediction on a two-state HMM.

use dbnkit::inference::{filter, log_likelihood, predict_obs, predict_state, smooth};
use dbnkit::model::HmmModel;
use ndarray::array;

fn main() -> dbnkit::Result<()> {
    let model = HmmModel::new(
        array![0.6, 0.4],
        array![[0.7, 0.3], [0.4, 0.6]],
        array![[0.9, 0.1], [0.2, 0.8]],
    )?;
    let obs = [0, 1, 0];

    let ll = log_likelihood(&model, &obs)?;
    println!("P(Y) = {:.6}  (log {:.6})", ll.exp(), ll);

    let filtered = filter(&model, &obs)?;
    let post = smooth(&model, &obs)?;
    println!("t  filtered            smoothed");
    for t in 0..obs.len() {
        println!(
            "{t}  [{:.4}, {:.4}]    [{:.4}, {:.4}]",
            filtered[[t, 0]],
            filtered[[t, 1]],
            post.gamma[[t, 0]],
            post.gamma[[t, 1]]
        );
    }

    for h in 1..=3 {
        let p = predict_state(&model, &obs, h)?;
        println!("state in {h} steps: {:?}", p.probs());
    }
    println!("next symbol: {:?}", predict_obs(&model, &obs)?.probs());
    Ok(())
}

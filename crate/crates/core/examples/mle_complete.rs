//! Supervised estimation from fully observed state paths.

use dbnkit::learning::mle_complete;
use dbnkit::model::{sample_hmm, HmmModel};
use ndarray::array;

fn main() -> dbnkit::Result<()> {
    let truth = HmmModel::new(
        array![0.5, 0.3, 0.2],
        array![[0.8, 0.1, 0.1], [0.1, 0.8, 0.1], [0.1, 0.1, 0.8]],
        array![[0.7, 0.2, 0.1], [0.1, 0.7, 0.2], [0.2, 0.1, 0.7]],
    )?;
    for len in [100, 1_000, 10_000] {
        let (x, y) = sample_hmm(&truth, len, 1)?;
        let est = mle_complete(&[(x, y)], 3, 3, 0.0)?;
        let err = |a: &ndarray::Array2<f64>, b: &ndarray::Array2<f64>| {
            a.iter().zip(b).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max)
        };
        println!(
            "T={len:6}  max|dA|={:.4}  max|dB|={:.4}",
            err(&est.trans, &truth.trans),
            err(&est.emit, &truth.emit)
        );
    }

    // a pseudocount keeps unseen transitions away from zero
    let est = mle_complete(&[(vec![0, 0, 0, 1], vec![0, 0, 0, 1])], 2, 2, 1.0)?;
    println!("smoothed A from a short path =\n{:.3}", est.trans);
    Ok(())
}

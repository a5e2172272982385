//! A two-slice DBN with two hidden binary variables and one observed
//! variable, unrolled to its joint-state HMM.

use dbnkit::inference::{log_likelihood, smooth};
use dbnkit::model::{unroll_tbn, SliceParent, Tbn2Model, TbnVariable, DEFAULT_SIZE_CAP};
use dbnkit::oracle::enum_tbn_likelihood;
use ndarray::{array, Array2};

fn main() -> dbnkit::Result<()> {
    // rain_t depends on rain_{t-1}; umbrella-ish sensor depends on both hidden vars
    let rain = TbnVariable {
        card: 2,
        observed: false,
        init_parents: vec![],
        init_cpt: array![[0.7, 0.3]],
        trans_parents: vec![SliceParent::previous(0)],
        trans_cpt: array![[0.8, 0.2], [0.3, 0.7]],
    };
    let wind = TbnVariable {
        card: 2,
        observed: false,
        init_parents: vec![0],
        init_cpt: array![[0.9, 0.1], [0.4, 0.6]],
        trans_parents: vec![SliceParent::previous(1), SliceParent::current(0)],
        trans_cpt: array![[0.85, 0.15], [0.5, 0.5], [0.4, 0.6], [0.2, 0.8]],
    };
    let sensor = TbnVariable {
        card: 2,
        observed: true,
        init_parents: vec![],
        init_cpt: Array2::zeros((0, 0)),
        trans_parents: vec![SliceParent::current(0), SliceParent::current(1)],
        trans_cpt: array![[0.95, 0.05], [0.6, 0.4], [0.3, 0.7], [0.1, 0.9]],
    };
    let dbn = Tbn2Model::new(vec![rain, wind, sensor])?;
    let hmm = unroll_tbn(&dbn, DEFAULT_SIZE_CAP)?;
    println!("joint hidden states: {}, symbols: {}", hmm.num_states(), hmm.num_symbols());

    let obs = [0, 1, 1, 1, 0];
    let ll = log_likelihood(&hmm, &obs)?;
    let brute = enum_tbn_likelihood(&dbn, &obs)?;
    println!("P(Y) = {:.10} (enumeration over the template: {brute:.10})", ll.exp());

    let post = smooth(&hmm, &obs)?;
    let states = dbn.state_space(DEFAULT_SIZE_CAP)?;
    for t in 0..obs.len() {
        let rain: f64 = (0..states.size())
            .filter(|&s| states.component(s, 0) == 1)
            .map(|s| post.gamma[[t, s]])
            .sum();
        println!("t={t} P(rain | Y) = {rain:.4}");
    }
    Ok(())
}

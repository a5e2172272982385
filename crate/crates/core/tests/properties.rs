use approx::assert_abs_diff_eq;
use ndarray::{Array1, Array2, Axis};
use proptest::prelude::*;
use rand::Rng;

use dbnkit::decoding::{truncated_viterbi, viterbi, viterbi_log_scores};
use dbnkit::inference::{self, filter, predict_obs, predict_state, smooth};
use dbnkit::learning::{baum_welch, EmConfig};
use dbnkit::model::{
    allen_relation, model_from_json, model_to_json, rng_from_seed, unroll_tbn, HmmModel, Interval, Model,
    SliceParent, Tbn2Model, TbnVariable, DEFAULT_SIZE_CAP,
};
use dbnkit::oracle::{enum_likelihood, enum_posterior, enum_top_two, enum_tbn_likelihood};
use dbnkit::random::{random_hmm, random_obs, random_stochastic};

fn small_instance() -> impl Strategy<Value = (HmmModel, Vec<usize>)> {
    (any::<u64>(), 1usize..=3, 1usize..=3, 1usize..=6).prop_map(|(seed, n, m, len)| {
        let mut rng = rng_from_seed(seed);
        let model = random_hmm(&mut rng, n, m);
        let obs = random_obs(&mut rng, m, len);
        (model, obs)
    })
}

fn mat_pow_row(row: &Array1<f64>, a: &Array2<f64>, h: usize) -> Array1<f64> {
    (0..h).fold(row.clone(), |r, _| r.dot(a))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn filter_rows_match_prefix_posteriors((model, obs) in small_instance()) {
        let filtered = filter(&model, &obs).unwrap();
        for t in 0..obs.len() {
            let (g, _) = enum_posterior(&model, &obs[..=t]).unwrap();
            for i in 0..model.num_states() {
                prop_assert!((filtered[[t, i]] - g[[t, i]]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn smoothing_is_consistent((model, obs) in small_instance()) {
        let post = smooth(&model, &obs).unwrap();
        let filtered = filter(&model, &obs).unwrap();
        let last = obs.len() - 1;
        for (t, row) in post.gamma.rows().into_iter().enumerate() {
            prop_assert!((row.sum() - 1.0).abs() < 1e-9);
            if t == last {
                for i in 0..model.num_states() {
                    prop_assert!((row[i] - filtered[[t, i]]).abs() < 1e-12);
                }
            }
        }
        for t in 0..post.xi.len_of(Axis(0)) {
            let slice = post.xi.index_axis(Axis(0), t);
            prop_assert!((slice.sum() - 1.0).abs() < 1e-9);
            let from = slice.sum_axis(Axis(1));
            let to = slice.sum_axis(Axis(0));
            for i in 0..model.num_states() {
                prop_assert!((from[i] - post.gamma[[t, i]]).abs() < 1e-9);
                prop_assert!((to[i] - post.gamma[[t + 1, i]]).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn prediction_matches_enumeration((model, obs) in small_instance(), h in 1usize..4) {
        let (g, _) = enum_posterior(&model, &obs).unwrap();
        let expected = mat_pow_row(&g.row(obs.len() - 1).to_owned(), &model.trans, h);
        let got = predict_state(&model, &obs, h).unwrap();
        for i in 0..model.num_states() {
            prop_assert!((got[i] - expected[i]).abs() < 1e-12);
        }
        let base = enum_likelihood(&model, &obs).unwrap();
        let next = predict_obs(&model, &obs).unwrap();
        for k in 0..model.num_symbols() {
            let mut ext = obs.clone();
            ext.push(k);
            let ratio = enum_likelihood(&model, &ext).unwrap() / base;
            prop_assert!((next[k] - ratio).abs() < 1e-12);
        }
    }

    #[test]
    fn viterbi_agrees_with_enumeration((model, obs) in small_instance()) {
        let (best, runner_up) = enum_top_two(&model, &obs).unwrap();
        let best_p = best.log_joint_score.exp();
        prop_assume!(best_p - runner_up > 1e-9 * best_p);
        let d = viterbi(&model, &obs).unwrap();
        prop_assert_eq!(&d.path, &best.path);
        prop_assert!((d.log_joint_score.exp() - best_p).abs() <= 1e-12 * best_p);
        prop_assert!(d.log_joint_score <= inference::log_likelihood(&model, &obs).unwrap() + 1e-12);
    }

    #[test]
    fn viterbi_ignores_a_shifted_emission_column(
        (model, obs) in small_instance(),
        column in any::<prop::sample::Index>(),
        shift in -5.0f64..5.0,
    ) {
        let (best, runner_up) = enum_top_two(&model, &obs).unwrap();
        let best_p = best.log_joint_score.exp();
        // paths built from the same multiset of factors tie exactly
        prop_assume!(best_p - runner_up > 1e-9 * best_p);
        let k = column.index(model.num_symbols());
        let mut log_emit = model.emit.mapv(f64::ln);
        log_emit.column_mut(k).mapv_inplace(|v| v + shift);
        let shifted = viterbi_log_scores(model.pi.mapv(f64::ln), model.trans.mapv(f64::ln), log_emit, &obs).unwrap();
        prop_assert_eq!(shifted.path, viterbi(&model, &obs).unwrap().path);
    }

    #[test]
    fn full_prefix_decoding_is_viterbi((model, obs) in small_instance()) {
        prop_assert_eq!(truncated_viterbi(&model, &obs).unwrap(), viterbi(&model, &obs).unwrap());
    }

    #[test]
    fn backward_reconstructs_the_likelihood(seed in any::<u64>(), n in 1usize..=8, len in 1usize..=120) {
        let mut rng = rng_from_seed(seed);
        let model = random_hmm(&mut rng, n, 4);
        let obs = random_obs(&mut rng, 4, len);
        let fwd = inference::forward(&model, &obs).unwrap();
        let bwd = inference::backward(&model, &obs, &fwd.scale_factors).unwrap();
        prop_assert!((fwd.log_likelihood - bwd.log_likelihood).abs() < 1e-10);
        prop_assert!(bwd.scaled_beta.row(len - 1).iter().all(|&b| b == 1.0));
        let sum_log_c: f64 = fwd.scale_factors.iter().map(|c| c.ln()).sum();
        prop_assert!((fwd.log_likelihood - sum_log_c).abs() < 1e-12);
    }

    #[test]
    fn allen_relation_of_swapped_pair_is_inverse(a in -10.0f64..10.0, b in 0.1f64..5.0, c in -10.0f64..10.0, d in 0.1f64..5.0) {
        let x = Interval::new(a, a + b).unwrap();
        let y = Interval::new(c, c + d).unwrap();
        let r = allen_relation(&x, &y);
        prop_assert_eq!(allen_relation(&y, &x), r.inverse());
        prop_assert_eq!(r.inverse().inverse(), r);
    }

    #[test]
    fn model_json_round_trip(seed in any::<u64>(), n in 1usize..=4, m in 1usize..=4) {
        let model = Model::Hmm(random_hmm(&mut rng_from_seed(seed), n, m));
        prop_assert_eq!(model_from_json(&model_to_json(&model)).unwrap(), model);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn baum_welch_never_decreases_likelihood(seed in any::<u64>(), n in 1usize..=3, m in 1usize..=3) {
        let mut rng = rng_from_seed(seed);
        let data: Vec<Vec<usize>> = (0..3).map(|_| random_obs(&mut rng, m, 20)).collect();
        let init = random_hmm(&mut rng, n, m);
        let config = EmConfig { max_iterations: 40, ..Default::default() };
        let (model, trace) = baum_welch(&init, &data, &config).unwrap();
        for w in trace.log_likelihoods.windows(2) {
            prop_assert!(w[1] >= w[0] - 1e-9);
        }
        prop_assert!(model.validate().is_ok());
    }

    #[test]
    fn unrolled_dbn_matches_template_enumeration(seed in any::<u64>(), len in 1usize..=4) {
        let mut rng = rng_from_seed(seed);
        let dbn = random_dbn(&mut rng);
        let hmm = unroll_tbn(&dbn, DEFAULT_SIZE_CAP).unwrap();
        let obs = random_obs(&mut rng, hmm.num_symbols(), len);
        let direct = inference::log_likelihood(&hmm, &obs).unwrap().exp();
        let brute = enum_tbn_likelihood(&dbn, &obs).unwrap();
        prop_assert!((direct - brute).abs() < 1e-12);
    }
}

/// Two hidden variables with random inter-slice and intra-slice arcs plus
/// one observed child of a random nonempty subset of them.
fn random_dbn<R: Rng>(rng: &mut R) -> Tbn2Model {
    let cards = [rng.random_range(2..=3), rng.random_range(2..=3)];
    let mut hidden = Vec::new();
    for v in 0..2 {
        let mut trans_parents = vec![SliceParent::previous(v)];
        if rng.random_bool(0.5) {
            trans_parents.push(SliceParent::previous(1 - v));
        }
        let mut init_parents = vec![];
        if v == 1 && rng.random_bool(0.5) {
            trans_parents.push(SliceParent::current(0));
            init_parents.push(0);
        }
        let rows: usize = trans_parents.iter().map(|p| cards[p.var]).product();
        let init_rows: usize = init_parents.iter().map(|&p| cards[p]).product();
        hidden.push(TbnVariable {
            card: cards[v],
            observed: false,
            init_cpt: random_stochastic(rng, init_rows, cards[v]),
            init_parents,
            trans_cpt: random_stochastic(rng, rows, cards[v]),
            trans_parents,
        });
    }
    let parents: Vec<usize> = match rng.random_range(0..3) {
        0 => vec![0],
        1 => vec![1],
        _ => vec![0, 1],
    };
    let symbols = rng.random_range(2..=3);
    let rows: usize = parents.iter().map(|&p| cards[p]).product();
    hidden.push(TbnVariable {
        card: symbols,
        observed: true,
        init_parents: vec![],
        init_cpt: Array2::zeros((0, 0)),
        trans_parents: parents.into_iter().map(SliceParent::current).collect(),
        trans_cpt: random_stochastic(rng, rows, symbols),
    });
    Tbn2Model::new(hidden).unwrap()
}

#[test]
fn uniform_model_decodes_to_all_zeros() {
    let model = HmmModel::uniform(3, 2);
    assert_eq!(viterbi(&model, &[1, 0, 1, 1]).unwrap().path, vec![0, 0, 0, 0]);
    let ll = inference::log_likelihood(&model, &[1, 0, 1, 1]).unwrap();
    assert_abs_diff_eq!(ll, 4.0 * 0.5f64.ln(), epsilon = 1e-12);
}

#[test]
fn worked_example_prefix_decoding() {
    let model = HmmModel::new(
        ndarray::array![0.6, 0.4],
        ndarray::array![[0.7, 0.3], [0.4, 0.6]],
        ndarray::array![[0.9, 0.1], [0.2, 0.8]],
    )
    .unwrap();
    let (best, _) = enum_top_two(&model, &[0, 1]).unwrap();
    let d = truncated_viterbi(&model, &[0, 1]).unwrap();
    assert_eq!(d.path, best.path);
    assert_abs_diff_eq!(d.log_joint_score, best.log_joint_score, epsilon = 1e-12);
}

//! Discrete-state temporal probabilistic models.
//!
//! Hidden Markov models, coupled HMMs and two-slice dynamic Bayesian networks
//! with exact forward-backward inference (likelihood, filtering, smoothing,
//! prediction), Viterbi decoding, a bootstrap particle filter, and parameter
//! learning by counting or by expectation-maximization. Every exact routine
//! can be checked against the brute-force enumerators in [`oracle`].
//!
//! ```
//! use dbnkit::model::HmmModel;
//! use dbnkit::{decoding, inference};
//! use ndarray::array;
//!
//! let model = HmmModel::new(
//!     array![0.6, 0.4],
//!     array![[0.7, 0.3], [0.4, 0.6]],
//!     array![[0.9, 0.1], [0.2, 0.8]],
//! )
//! .unwrap();
//! let obs = [0, 1, 0];
//! let ll = inference::log_likelihood(&model, &obs).unwrap();
//! assert!((ll.exp() - 0.10893).abs() < 1e-12);
//! let best = decoding::viterbi(&model, &obs).unwrap();
//! assert_eq!(best.path, vec![0, 1, 0]);
//! ```

pub mod chmm;
pub mod cli;
pub mod decoding;
pub mod error;
pub mod inference;
pub mod learning;
pub mod model;
pub mod oracle;
pub mod random;

pub use error::{Error, Result};

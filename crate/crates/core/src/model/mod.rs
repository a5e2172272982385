//! Model and sequence types, validation, conversions between representations,
//! sampling, model files and interval relations.

pub mod allen;
pub mod chmm;
pub mod dist;
pub mod hmm;
pub mod io;
pub mod joint;
pub mod obs;
pub mod sample;
pub mod tbn;

pub use allen::{allen_relation, AllenRelation, Interval};
pub use chmm::{flatten_chmm, nearest_neighbor_topology, validate_chmm, Chain, ChmmModel, Coupling};
pub use dist::{CategoricalDist, PROB_TOLERANCE};
pub use hmm::{validate_hmm, HmmModel};
pub use io::{load_model, model_from_json, model_to_json, save_model, Model};
pub use joint::{JointSpace, JointState, DEFAULT_SIZE_CAP};
pub use obs::{format_joint_obs, format_obs, parse_joint_obs, parse_obs, JointObsSequence, ObsSequence};
pub use sample::{rng_from_seed, sample_chmm, sample_chmm_with, sample_hmm, sample_hmm_with, SeededRng};
pub use tbn::{unroll_tbn, Slice, SliceParent, Tbn2Model, TbnVariable};

//! JSON model files.
//!
//! ```text
//! {"type":"hmm","num_states":N,"num_symbols":M,"pi":[..],"A":[[..]],"B":[[..]]}
//! {"type":"chmm","chains":[{"states":N,"symbols":M,"pi":[..],"emit":[[..]]},..],
//!  "couplings":[{"from":l,"to":l,"matrix":[[..]]},..]}
//! {"type":"tbn2","vars":[{"card":k,"observed":false,"init_parents":[..],"init_cpt":[[..]],
//!  "trans_parents":[{"slice":0,"var":i},..],"trans_cpt":[[..]]},..]}
//! ```
//!
//! Indices are 0-based. In `trans_parents`, slice 0 is the previous time step
//! and slice 1 the current one. Floats are written in shortest round-trip
//! form, so save followed by load reproduces every probability exactly.

use std::fs;
use std::path::Path;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use super::chmm::{Chain, ChmmModel, Coupling};
use super::dist::check_dim;
use super::hmm::HmmModel;
use super::tbn::{Slice, SliceParent, Tbn2Model, TbnVariable};
use crate::error::{Error, Result};

/// Any model that can live in a model file.
#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    Hmm(HmmModel),
    Chmm(ChmmModel),
    Tbn2(Tbn2Model),
}

impl Model {
    pub fn validate(&self) -> Result<()> {
        match self {
            Model::Hmm(m) => m.validate(),
            Model::Chmm(m) => m.validate(),
            Model::Tbn2(m) => m.validate(),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Model::Hmm(_) => "hmm",
            Model::Chmm(_) => "chmm",
            Model::Tbn2(_) => "tbn2",
        }
    }
}

impl From<HmmModel> for Model {
    fn from(m: HmmModel) -> Self {
        Model::Hmm(m)
    }
}

impl From<ChmmModel> for Model {
    fn from(m: ChmmModel) -> Self {
        Model::Chmm(m)
    }
}

impl From<Tbn2Model> for Model {
    fn from(m: Tbn2Model) -> Self {
        Model::Tbn2(m)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "type")]
enum ModelFile {
    #[serde(rename = "hmm")]
    Hmm(HmmFile),
    #[serde(rename = "chmm")]
    Chmm(ChmmFile),
    #[serde(rename = "tbn2")]
    Tbn2(TbnFile),
}

#[derive(Serialize, Deserialize)]
struct HmmFile {
    num_states: usize,
    num_symbols: usize,
    pi: Vec<f64>,
    #[serde(rename = "A")]
    trans: Vec<Vec<f64>>,
    #[serde(rename = "B")]
    emit: Vec<Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
struct ChainFile {
    states: usize,
    symbols: usize,
    pi: Vec<f64>,
    emit: Vec<Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
struct CouplingFile {
    from: usize,
    to: usize,
    matrix: Vec<Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
struct ChmmFile {
    chains: Vec<ChainFile>,
    couplings: Vec<CouplingFile>,
}

#[derive(Serialize, Deserialize)]
struct SliceParentFile {
    slice: u8,
    var: usize,
}

#[derive(Serialize, Deserialize)]
struct VarFile {
    card: usize,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    observed: bool,
    #[serde(default)]
    init_parents: Vec<usize>,
    #[serde(default)]
    init_cpt: Vec<Vec<f64>>,
    trans_parents: Vec<SliceParentFile>,
    trans_cpt: Vec<Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
struct TbnFile {
    vars: Vec<VarFile>,
}

fn vector(field: &str, values: Vec<f64>, len: usize) -> Result<Array1<f64>> {
    check_dim(field, len, values.len())?;
    Ok(Array1::from(values))
}

fn matrix(field: &str, rows: Vec<Vec<f64>>, nrows: usize, ncols: usize) -> Result<Array2<f64>> {
    check_dim(field, nrows, rows.len())?;
    let mut flat = Vec::with_capacity(nrows * ncols);
    for (r, row) in rows.into_iter().enumerate() {
        check_dim(&format!("{field}[{r}]"), ncols, row.len())?;
        flat.extend(row);
    }
    Ok(Array2::from_shape_vec((nrows, ncols), flat).expect("shape checked"))
}

/// Matrix whose shape is taken from the data; rows must be equally long.
fn ragged_free(field: &str, rows: Vec<Vec<f64>>) -> Result<Array2<f64>> {
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, Vec::len);
    matrix(field, rows, nrows, ncols)
}

fn rows(m: &Array2<f64>) -> Vec<Vec<f64>> {
    m.rows().into_iter().map(|r| r.to_vec()).collect()
}

impl ModelFile {
    fn into_model(self) -> Result<Model> {
        let model = match self {
            ModelFile::Hmm(f) => {
                let n = f.num_states;
                let m = f.num_symbols;
                Model::Hmm(HmmModel {
                    pi: vector("pi", f.pi, n)?,
                    trans: matrix("A", f.trans, n, n)?,
                    emit: matrix("B", f.emit, n, m)?,
                })
            }
            ModelFile::Chmm(f) => {
                let chains = f
                    .chains
                    .into_iter()
                    .enumerate()
                    .map(|(l, c)| {
                        Ok(Chain {
                            pi: vector(&format!("chains[{l}].pi"), c.pi, c.states)?,
                            emit: matrix(&format!("chains[{l}].emit"), c.emit, c.states, c.symbols)?,
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                let couplings = f
                    .couplings
                    .into_iter()
                    .enumerate()
                    .map(|(k, c)| {
                        Ok(Coupling {
                            from: c.from,
                            to: c.to,
                            matrix: ragged_free(&format!("couplings[{k}].matrix"), c.matrix)?,
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                Model::Chmm(ChmmModel { chains, couplings })
            }
            ModelFile::Tbn2(f) => {
                let vars = f
                    .vars
                    .into_iter()
                    .enumerate()
                    .map(|(v, var)| {
                        let trans_parents = var
                            .trans_parents
                            .iter()
                            .map(|p| match p.slice {
                                0 => Ok(SliceParent::previous(p.var)),
                                1 => Ok(SliceParent::current(p.var)),
                                s => Err(Error::Structure(format!(
                                    "vars[{v}].trans_parents: slice must be 0 or 1, found {s}"
                                ))),
                            })
                            .collect::<Result<Vec<_>>>()?;
                        Ok(TbnVariable {
                            card: var.card,
                            observed: var.observed,
                            init_parents: var.init_parents,
                            init_cpt: ragged_free(&format!("vars[{v}].init_cpt"), var.init_cpt)?,
                            trans_parents,
                            trans_cpt: ragged_free(&format!("vars[{v}].trans_cpt"), var.trans_cpt)?,
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                Model::Tbn2(Tbn2Model { vars })
            }
        };
        model.validate()?;
        Ok(model)
    }

    fn from_model(model: &Model) -> Self {
        match model {
            Model::Hmm(m) => ModelFile::Hmm(HmmFile {
                num_states: m.num_states(),
                num_symbols: m.num_symbols(),
                pi: m.pi.to_vec(),
                trans: rows(&m.trans),
                emit: rows(&m.emit),
            }),
            Model::Chmm(m) => ModelFile::Chmm(ChmmFile {
                chains: m
                    .chains
                    .iter()
                    .map(|c| ChainFile {
                        states: c.num_states(),
                        symbols: c.num_symbols(),
                        pi: c.pi.to_vec(),
                        emit: rows(&c.emit),
                    })
                    .collect(),
                couplings: m
                    .couplings
                    .iter()
                    .map(|c| CouplingFile {
                        from: c.from,
                        to: c.to,
                        matrix: rows(&c.matrix),
                    })
                    .collect(),
            }),
            Model::Tbn2(m) => ModelFile::Tbn2(TbnFile {
                vars: m
                    .vars
                    .iter()
                    .map(|v| VarFile {
                        card: v.card,
                        observed: v.observed,
                        init_parents: v.init_parents.clone(),
                        init_cpt: rows(&v.init_cpt),
                        trans_parents: v
                            .trans_parents
                            .iter()
                            .map(|p| SliceParentFile {
                                slice: match p.slice {
                                    Slice::Previous => 0,
                                    Slice::Current => 1,
                                },
                                var: p.var,
                            })
                            .collect(),
                        trans_cpt: rows(&v.trans_cpt),
                    })
                    .collect(),
            }),
        }
    }
}

/// Parses and validates a model from JSON text.
pub fn model_from_json(text: &str) -> Result<Model> {
    let file: ModelFile = serde_json::from_str(text).map_err(|e| Error::Parse {
        path: None,
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    file.into_model()
}

pub fn model_to_json(model: &Model) -> String {
    serde_json::to_string_pretty(&ModelFile::from_model(model)).expect("model serializes")
}

pub fn load_model(path: impl AsRef<Path>) -> Result<Model> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    model_from_json(&text).map_err(|e| e.with_path(path))
}

pub fn save_model(model: &Model, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut text = model_to_json(model);
    text.push('\n');
    fs::write(path, text).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

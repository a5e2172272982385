use std::ops::Deref;

use crate::error::{Error, Result};

/// A sequence of discrete symbols, one per time step.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ObsSequence(pub Vec<usize>);

impl Deref for ObsSequence {
    type Target = [usize];

    fn deref(&self) -> &[usize] {
        &self.0
    }
}

impl AsRef<[usize]> for ObsSequence {
    fn as_ref(&self) -> &[usize] {
        &self.0
    }
}

impl From<Vec<usize>> for ObsSequence {
    fn from(v: Vec<usize>) -> Self {
        ObsSequence(v)
    }
}

/// A sequence of per-chain symbol tuples, one tuple per time step.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct JointObsSequence(pub Vec<Vec<usize>>);

impl Deref for JointObsSequence {
    type Target = [Vec<usize>];

    fn deref(&self) -> &[Vec<usize>] {
        &self.0
    }
}

impl AsRef<[Vec<usize>]> for JointObsSequence {
    fn as_ref(&self) -> &[Vec<usize>] {
        &self.0
    }
}

impl From<Vec<Vec<usize>>> for JointObsSequence {
    fn from(v: Vec<Vec<usize>>) -> Self {
        JointObsSequence(v)
    }
}

fn parse_symbol(token: &str, line: usize, column: usize) -> Result<usize> {
    token.parse().map_err(|_| Error::Parse {
        path: None,
        line,
        column,
        message: format!("expected a symbol index, found `{token}`"),
    })
}

/// Whitespace-separated tokens of a line together with their 1-based columns.
fn tokens(line: &str) -> impl Iterator<Item = (usize, &str)> {
    line.split_whitespace()
        .map(move |tok| (tok.as_ptr() as usize - line.as_ptr() as usize + 1, tok))
}

fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l))
        .filter(|(_, l)| !l.trim().is_empty())
}

/// Parses one sequence per line of space-separated symbol indices.
/// Blank lines are skipped.
pub fn parse_obs(text: &str) -> Result<Vec<ObsSequence>> {
    content_lines(text)
        .map(|(line, content)| {
            tokens(content)
                .map(|(col, tok)| parse_symbol(tok, line, col))
                .collect::<Result<Vec<_>>>()
                .map(ObsSequence)
        })
        .collect()
}

/// Parses one joint sequence per line: steps separated by spaces, chains
/// within a step by commas (`0,1 1,1 0,0`).
pub fn parse_joint_obs(text: &str) -> Result<Vec<JointObsSequence>> {
    content_lines(text)
        .map(|(line, content)| {
            let mut arity = None;
            let steps = tokens(content)
                .map(|(col, tok)| {
                    let step = tok
                        .split(',')
                        .map(|s| parse_symbol(s, line, col))
                        .collect::<Result<Vec<_>>>()?;
                    match arity {
                        None => arity = Some(step.len()),
                        Some(a) if a != step.len() => {
                            return Err(Error::Parse {
                                path: None,
                                line,
                                column: col,
                                message: format!("step has {} chain symbols, expected {a}", step.len()),
                            })
                        }
                        _ => {}
                    }
                    Ok(step)
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(JointObsSequence(steps))
        })
        .collect()
}

pub fn format_obs(sequences: &[ObsSequence]) -> String {
    let mut out = String::new();
    for seq in sequences {
        out.push_str(&join(seq.iter(), " "));
        out.push('\n');
    }
    out
}

pub fn format_joint_obs(sequences: &[JointObsSequence]) -> String {
    let mut out = String::new();
    for seq in sequences {
        let steps: Vec<String> = seq.iter().map(|step| join(step.iter(), ",")).collect();
        out.push_str(&steps.join(" "));
        out.push('\n');
    }
    out
}

fn join<'a>(values: impl Iterator<Item = &'a usize>, sep: &str) -> String {
    values.map(|v| v.to_string()).collect::<Vec<_>>().join(sep)
}

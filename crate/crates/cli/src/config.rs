//! Job files: scalar mode, sizes and one moment payload.

use std::path::Path;

use checkerboard::gram::{build_checkerboard, hankel_gram, unwrap_moments, CheckerboardGram, MomentSequence};
use checkerboard::{Matrix, Rational, Scalar, DEFAULT_TOLERANCE};
use serde::{Deserialize, Serialize};
use serde_json::Value;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("invalid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Domain(#[from] checkerboard::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScalarMode {
    #[default]
    Rational,
    Float,
}

/// One block as `n * n` row-major number strings.
pub type RawBlock = Vec<String>;

#[derive(Debug, Clone, PartialEq)]
pub enum Payload {
    /// `S_0, S_1, ...`
    Condensed(Vec<RawBlock>),
    /// `h_0, h_1, ...` with even entries zero.
    Unwrapped(Vec<RawBlock>),
    /// Sparse `(i, j, block)` list with `i + j` odd.
    Entries(Vec<(usize, usize, RawBlock)>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct JobConfig {
    pub scalar: ScalarMode,
    pub tolerance: f64,
    pub n: usize,
    pub m: usize,
    pub payload: Payload,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    #[serde(default)]
    scalar: ScalarMode,
    n: usize,
    m: usize,
    tolerance: Option<f64>,
    condensed_moments: Option<Vec<Value>>,
    unwrapped_moments: Option<Vec<Value>>,
    gram_entries: Option<Vec<Value>>,
}

pub fn ingest(path: &Path) -> Result<JobConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_config(&text)
}

/// Parses and validates a job. Every number is checked exactly, so the
/// pattern checks do not depend on the scalar mode.
pub fn parse_config(text: &str) -> Result<JobConfig, ConfigError> {
    let raw: RawConfig = serde_json::from_str(text)?;
    if raw.n == 0 {
        return Err(ConfigError::Parse("block order n must be at least 1".into()));
    }
    if raw.m % 2 != 0 {
        return Err(checkerboard::Error::OddTruncation(raw.m).into());
    }
    if raw.m == 0 {
        return Err(ConfigError::Parse("truncation m must be positive".into()));
    }
    let tolerance = raw.tolerance.unwrap_or(DEFAULT_TOLERANCE);
    if !(tolerance > 0.0 && tolerance.is_finite()) {
        return Err(ConfigError::Parse(format!("tolerance must be positive, got {tolerance}")));
    }
    let n = raw.n;
    let payload = match (raw.condensed_moments, raw.unwrapped_moments, raw.gram_entries) {
        (Some(s), None, None) => Payload::Condensed(s.iter().map(|v| raw_block(v, n)).collect::<Result<_, _>>()?),
        (None, Some(h), None) => Payload::Unwrapped(h.iter().map(|v| raw_block(v, n)).collect::<Result<_, _>>()?),
        (None, None, Some(e)) => Payload::Entries(e.iter().map(|v| raw_entry(v, n)).collect::<Result<_, _>>()?),
        _ => {
            return Err(ConfigError::Parse(
                "exactly one of condensed_moments, unwrapped_moments, gram_entries is required".into(),
            ))
        }
    };
    let config = JobConfig {
        scalar: raw.scalar,
        tolerance,
        n,
        m: raw.m,
        payload,
    };
    config.gram::<Rational>()?;
    Ok(config)
}

fn number_text(v: &Value) -> Result<String, ConfigError> {
    match v {
        Value::String(s) => Ok(s.clone()),
        Value::Number(x) => Ok(x.to_string()),
        other => Err(ConfigError::Parse(format!("expected a number or string, got {other}"))),
    }
}

/// Accepts a flat list of `n * n` values, a nested `n x n` list, or a bare
/// value when `n == 1`.
fn raw_block(v: &Value, n: usize) -> Result<RawBlock, ConfigError> {
    let values: Vec<String> = match v {
        Value::Array(items) if items.iter().all(Value::is_array) => {
            if items.len() != n {
                return Err(ConfigError::Parse(format!("block has {} rows, expected {n}", items.len())));
            }
            let mut out = Vec::with_capacity(n * n);
            for row in items {
                let row = row.as_array().expect("checked above");
                if row.len() != n {
                    return Err(ConfigError::Parse(format!("block row has {} entries, expected {n}", row.len())));
                }
                for x in row {
                    out.push(number_text(x)?);
                }
            }
            out
        }
        Value::Array(items) => items.iter().map(number_text).collect::<Result<_, _>>()?,
        scalar if n == 1 => vec![number_text(scalar)?],
        other => return Err(ConfigError::Parse(format!("expected a block, got {other}"))),
    };
    if values.len() != n * n {
        return Err(ConfigError::Parse(format!("block has {} entries, expected {}", values.len(), n * n)));
    }
    for s in &values {
        Rational::parse_text(s).map_err(ConfigError::Parse)?;
    }
    Ok(values)
}

fn index(v: Option<&Value>, name: &str) -> Result<usize, ConfigError> {
    v.and_then(Value::as_u64)
        .map(|x| x as usize)
        .ok_or_else(|| ConfigError::Parse(format!("gram entry needs a non-negative integer {name}")))
}

/// `[i, j, block]` or `{"i": .., "j": .., "block": ..}`.
fn raw_entry(v: &Value, n: usize) -> Result<(usize, usize, RawBlock), ConfigError> {
    let (i, j, block) = match v {
        Value::Array(items) if items.len() == 3 => (items.first(), items.get(1), &items[2]),
        Value::Object(map) => (
            map.get("i"),
            map.get("j"),
            map.get("block")
                .ok_or_else(|| ConfigError::Parse("gram entry object needs a block".into()))?,
        ),
        other => return Err(ConfigError::Parse(format!("bad gram entry {other}"))),
    };
    Ok((index(i, "i")?, index(j, "j")?, raw_block(block, n)?))
}

pub fn to_matrix<S: Scalar>(raw: &RawBlock, n: usize) -> Result<Matrix<S>, ConfigError> {
    let values = raw
        .iter()
        .map(|s| S::parse_text(s).map_err(ConfigError::Parse))
        .collect::<Result<Vec<_>, _>>()?;
    let mut it = values.into_iter();
    Ok(Matrix::from_fn(n, n, |_, _| it.next().expect("length checked on ingest")))
}

impl JobConfig {
    /// The truncated Gram matrix in scalar type `S`.
    pub fn gram<S: Scalar>(&self) -> Result<CheckerboardGram<S>, ConfigError> {
        let blocks = |list: &[RawBlock]| -> Result<Vec<Matrix<S>>, ConfigError> {
            list.iter().map(|b| to_matrix(b, self.n)).collect()
        };
        Ok(match &self.payload {
            Payload::Condensed(s) => hankel_gram(&unwrap_moments(&blocks(s)?, self.n)?, self.m)?,
            Payload::Unwrapped(h) => hankel_gram(&MomentSequence::from_unwrapped(blocks(h)?, self.n)?, self.m)?,
            Payload::Entries(entries) => {
                let parsed = entries
                    .iter()
                    .map(|(i, j, b)| Ok((*i, *j, to_matrix(b, self.n)?)))
                    .collect::<Result<Vec<_>, ConfigError>>()?;
                build_checkerboard(parsed, self.n, self.m)?
            }
        })
    }

    /// Condensed moments `S_k`, read from the payload or, for a Hankel
    /// Gram matrix, from its anti-diagonals.
    pub fn condensed<S: Scalar>(&self) -> Result<Option<Vec<Matrix<S>>>, ConfigError> {
        let blocks = |list: &[RawBlock]| -> Result<Vec<Matrix<S>>, ConfigError> {
            list.iter().map(|b| to_matrix(b, self.n)).collect()
        };
        Ok(match &self.payload {
            Payload::Condensed(s) => Some(blocks(s)?),
            Payload::Unwrapped(h) => Some(MomentSequence::from_unwrapped(blocks(h)?, self.n)?.condensed()),
            Payload::Entries(_) => {
                let gram = self.gram::<S>()?;
                if !gram.is_hankel() {
                    return Ok(None);
                }
                let m = gram.size();
                Some(
                    (0..m - 1)
                        .map(|k| {
                            let i = (2 * k + 1).saturating_sub(m - 1);
                            gram.entry(i, 2 * k + 1 - i).clone()
                        })
                        .collect(),
                )
            }
        })
    }
}

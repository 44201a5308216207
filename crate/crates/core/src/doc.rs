//! JSON documents read by the command line: an envelope with `kind`,
//! `version` and `payload`.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::economy::AbstractEconomy;
use crate::setvalue::PiecewiseCorrespondence;
use crate::simplex::Simplex;
use crate::witness::WnqWitness;

pub const FORMAT_VERSION: &str = "1";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DocError {
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
    #[error("parse error at line {line}, column {column}: {message}")]
    ParseError {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("schema error in field {field:?}: {message}")]
    SchemaError { field: String, message: String },
    #[error("unresolved reference {0:?}")]
    UnresolvedReference(String),
    #[error("expected a {expected} document, found {found}")]
    WrongKind { expected: String, found: String },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DocKind {
    Correspondence,
    Simplex,
    Witness,
    Economy,
    Job,
}

impl DocKind {
    pub fn name(self) -> &'static str {
        match self {
            DocKind::Correspondence => "correspondence",
            DocKind::Simplex => "simplex",
            DocKind::Witness => "witness",
            DocKind::Economy => "economy",
            DocKind::Job => "job",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        [
            DocKind::Correspondence,
            DocKind::Simplex,
            DocKind::Witness,
            DocKind::Economy,
            DocKind::Job,
        ]
        .into_iter()
        .find(|k| k.name() == s)
    }
}

/// A job: a command, its inputs (names of `definitions` or paths relative
/// to the job file) and option overrides.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Job {
    pub command: String,
    #[serde(default)]
    pub inputs: Vec<String>,
    #[serde(default)]
    pub definitions: BTreeMap<String, Value>,
    #[serde(default)]
    pub options: Value,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", content = "payload", rename_all = "snake_case")]
pub enum Payload {
    Correspondence(PiecewiseCorrespondence),
    Simplex(Simplex),
    Witness(WnqWitness),
    Economy(AbstractEconomy),
    Job(Job),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ToolkitDocument {
    pub version: String,
    #[serde(flatten)]
    pub payload: Payload,
}

impl ToolkitDocument {
    pub fn new(payload: Payload) -> Self {
        ToolkitDocument {
            version: FORMAT_VERSION.into(),
            payload,
        }
    }

    pub fn kind(&self) -> DocKind {
        match self.payload {
            Payload::Correspondence(_) => DocKind::Correspondence,
            Payload::Simplex(_) => DocKind::Simplex,
            Payload::Witness(_) => DocKind::Witness,
            Payload::Economy(_) => DocKind::Economy,
            Payload::Job(_) => DocKind::Job,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("documents serialize")
    }

    fn wrong(&self, expected: DocKind) -> DocError {
        DocError::WrongKind {
            expected: expected.name().into(),
            found: self.kind().name().into(),
        }
    }

    pub fn as_correspondence(&self) -> Result<&PiecewiseCorrespondence, DocError> {
        match &self.payload {
            Payload::Correspondence(t) => Ok(t),
            _ => Err(self.wrong(DocKind::Correspondence)),
        }
    }

    pub fn as_simplex(&self) -> Result<&Simplex, DocError> {
        match &self.payload {
            Payload::Simplex(k) => Ok(k),
            _ => Err(self.wrong(DocKind::Simplex)),
        }
    }

    pub fn as_witness(&self) -> Result<&WnqWitness, DocError> {
        match &self.payload {
            Payload::Witness(w) => Ok(w),
            _ => Err(self.wrong(DocKind::Witness)),
        }
    }

    pub fn as_economy(&self) -> Result<&AbstractEconomy, DocError> {
        match &self.payload {
            Payload::Economy(e) => Ok(e),
            _ => Err(self.wrong(DocKind::Economy)),
        }
    }

    pub fn as_job(&self) -> Result<&Job, DocError> {
        match &self.payload {
            Payload::Job(j) => Ok(j),
            _ => Err(self.wrong(DocKind::Job)),
        }
    }
}

/// Field named in a serde message such as "missing field `B`".
fn field_of(message: &str) -> Option<String> {
    let start = message.find('`')? + 1;
    let len = message[start..].find('`')?;
    Some(message[start..start + len].to_string())
}

fn schema(default_field: &str, e: serde_json::Error) -> DocError {
    let message = e.to_string();
    DocError::SchemaError {
        field: field_of(&message).unwrap_or_else(|| default_field.to_string()),
        message,
    }
}

fn payload<T: for<'de> Deserialize<'de>>(v: Value) -> Result<T, DocError> {
    serde_json::from_value(v).map_err(|e| schema("payload", e))
}

/// Validates an already parsed envelope.
pub fn from_value(v: Value) -> Result<ToolkitDocument, DocError> {
    let Value::Object(mut map) = v else {
        return Err(DocError::SchemaError {
            field: "kind".into(),
            message: "document must be a JSON object".into(),
        });
    };
    let kind_str = match map.remove("kind") {
        Some(Value::String(s)) => s,
        _ => {
            return Err(DocError::SchemaError {
                field: "kind".into(),
                message: "missing or non-string kind".into(),
            })
        }
    };
    let kind = DocKind::parse(&kind_str).ok_or_else(|| DocError::SchemaError {
        field: "kind".into(),
        message: format!("unknown kind {kind_str:?}"),
    })?;
    let version = match map.remove("version") {
        Some(Value::String(s)) => s,
        _ => {
            return Err(DocError::SchemaError {
                field: "version".into(),
                message: "missing or non-string version".into(),
            })
        }
    };
    if version != FORMAT_VERSION {
        return Err(DocError::SchemaError {
            field: "version".into(),
            message: format!("unsupported version {version:?}"),
        });
    }
    let body = map.remove("payload").ok_or_else(|| DocError::SchemaError {
        field: "payload".into(),
        message: "missing payload".into(),
    })?;
    if let Some(extra) = map.keys().next() {
        return Err(DocError::SchemaError {
            field: extra.clone(),
            message: "unknown field".into(),
        });
    }
    let payload = match kind {
        DocKind::Correspondence => Payload::Correspondence(payload(body)?),
        DocKind::Simplex => Payload::Simplex(payload(body)?),
        DocKind::Witness => Payload::Witness(payload(body)?),
        DocKind::Economy => Payload::Economy(payload(body)?),
        DocKind::Job => Payload::Job(payload(body)?),
    };
    Ok(ToolkitDocument { version, payload })
}

pub fn parse_str(text: &str) -> Result<ToolkitDocument, DocError> {
    let v: Value = serde_json::from_str(text).map_err(|e| DocError::ParseError {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    from_value(v)
}

pub fn load(path: &Path) -> Result<ToolkitDocument, DocError> {
    let text = std::fs::read_to_string(path).map_err(|e| DocError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    parse_str(&text)
}

/// Resolves a job input: a definition name first, then a path relative to
/// `base`.
pub fn resolve(job: &Job, name: &str, base: &Path) -> Result<ToolkitDocument, DocError> {
    if let Some(v) = job.definitions.get(name) {
        return from_value(v.clone());
    }
    let path: PathBuf = base.join(name);
    if !path.is_file() {
        return Err(DocError::UnresolvedReference(name.to_string()));
    }
    load(&path)
}

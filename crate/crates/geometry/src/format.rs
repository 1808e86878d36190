//! Canonical construction file format.
//!
//! `{"format":"geolab-construction","version":1,"steps":[...]}` with keys in
//! that order, steps in id order, reals in shortest round-trip form and no
//! insignificant whitespace. Intersection steps carry a trailing `branch`
//! key (0 or 1); no other step has one.

use serde::{Deserialize, Serialize};

use crate::construction::Construction;
use crate::error::FormatError;
use crate::step::{Branch, ConstructionStep, StepId, StepKind};

pub const FORMAT_NAME: &str = "geolab-construction";
pub const FORMAT_VERSION: u64 = 1;

#[derive(Serialize)]
struct WireOut<'a> {
    format: &'static str,
    version: u64,
    steps: Vec<StepOut<'a>>,
}

#[derive(Serialize)]
struct StepOut<'a> {
    id: u64,
    kind: &'static str,
    inputs: &'a [StepId],
    params: &'a [f64],
    #[serde(skip_serializing_if = "Option::is_none")]
    branch: Option<u8>,
}

#[derive(Deserialize)]
struct Header {
    format: String,
    version: u64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct WireIn {
    #[allow(dead_code)]
    format: String,
    #[allow(dead_code)]
    version: u64,
    steps: Vec<StepIn>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct StepIn {
    id: u64,
    kind: String,
    inputs: Vec<u64>,
    params: Vec<f64>,
    #[serde(default)]
    branch: Option<u8>,
}

pub fn serialize_construction(c: &Construction) -> Vec<u8> {
    let wire = WireOut {
        format: FORMAT_NAME,
        version: FORMAT_VERSION,
        steps: c
            .steps()
            .iter()
            .map(|s| StepOut {
                id: s.id.0,
                kind: s.kind.name(),
                inputs: &s.inputs,
                params: &s.params,
                branch: s.kind.branch().map(Branch::index),
            })
            .collect(),
    };
    serde_json::to_vec(&wire).expect("construction serialization cannot fail")
}

pub fn parse_construction(bytes: &[u8]) -> Result<Construction, FormatError> {
    let header: Header =
        serde_json::from_slice(bytes).map_err(|e| FormatError::SyntaxError(e.to_string()))?;
    if header.format != FORMAT_NAME {
        return Err(FormatError::SyntaxError(format!("unknown format {:?}", header.format)));
    }
    if header.version != FORMAT_VERSION {
        return Err(FormatError::VersionUnsupported(header.version));
    }
    let wire: WireIn =
        serde_json::from_slice(bytes).map_err(|e| FormatError::SyntaxError(e.to_string()))?;
    let mut steps = Vec::with_capacity(wire.steps.len());
    for s in wire.steps {
        let branch = match s.branch {
            None => None,
            Some(b) => Some(Branch::from_index(b).ok_or_else(|| {
                FormatError::InvariantViolation(format!("step {}: branch must be 0 or 1", s.id))
            })?),
        };
        let kind = StepKind::from_name(&s.kind, branch).ok_or_else(|| {
            FormatError::InvariantViolation(format!("step {}: bad kind {:?} / branch {:?}", s.id, s.kind, s.branch))
        })?;
        steps.push(ConstructionStep {
            id: StepId(s.id),
            kind,
            inputs: s.inputs.into_iter().map(StepId).collect(),
            params: s.params,
        });
    }
    Construction::from_steps(steps).map_err(FormatError::InvariantViolation)
}

//! JSON operator configuration.
//!
//! ```json
//! {
//!   "background": {"kind": "periodic", "a": [1, 0.5], "b": [0, 0], "phase": 0},
//!   "perturbation": {"offset": 0, "a": [1.2], "b": [0.3, -0.1]}
//! }
//! ```
//!
//! Unknown keys are rejected. `a`/`b` accept a number or an array.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Background, JacobiSpec, Perturbation};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigDoc {
    background: BackgroundDoc,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    perturbation: Option<PerturbationDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum Kind {
    Free,
    Constant,
    Periodic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
enum Values {
    One(f64),
    Many(Vec<f64>),
}

impl Values {
    fn into_vec(self) -> Vec<f64> {
        match self {
            Values::One(v) => vec![v],
            Values::Many(v) => v,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BackgroundDoc {
    kind: Kind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    a: Option<Values>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    b: Option<Values>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    phase: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PerturbationDoc {
    #[serde(default)]
    offset: i64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    a: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    b: Option<Vec<f64>>,
}

fn schema(path: &str, message: impl Into<String>) -> Error {
    Error::Schema {
        path: path.to_string(),
        message: message.into(),
    }
}

fn required(values: Option<Values>, path: &str) -> Result<Vec<f64>> {
    values
        .map(Values::into_vec)
        .ok_or_else(|| schema(path, "missing field"))
}

fn scalar(values: Vec<f64>, path: &str) -> Result<f64> {
    match values.as_slice() {
        [v] => Ok(*v),
        _ => Err(schema(path, "constant background takes a single number")),
    }
}

/// Parses a configuration document into a validated spec.
///
/// Structural problems yield [`Error::Schema`] with the offending path;
/// coefficient problems yield the validation errors of [`JacobiSpec::new`].
pub fn parse_config(text: &str) -> Result<JacobiSpec> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let doc: ConfigDoc = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        schema(&path, e.into_inner().to_string())
    })?;

    let bg = doc.background;
    let background = match bg.kind {
        Kind::Free => {
            if bg.a.is_some() || bg.b.is_some() || bg.phase.is_some() {
                return Err(schema("background", "free background takes no coefficients"));
            }
            Background::Free
        }
        Kind::Constant => {
            if bg.phase.is_some() {
                return Err(schema("background.phase", "only periodic backgrounds have a phase"));
            }
            let a = scalar(required(bg.a, "background.a")?, "background.a")?;
            let b = scalar(required(bg.b, "background.b")?, "background.b")?;
            Background::Constant { a, b }
        }
        Kind::Periodic => {
            let a = required(bg.a, "background.a")?;
            let b = required(bg.b, "background.b")?;
            if a.is_empty() || a.len() != b.len() {
                return Err(schema("background", "a and b must be non-empty arrays of equal length"));
            }
            Background::Periodic {
                a,
                b,
                phase: bg.phase.unwrap_or(0),
            }
        }
    };

    let perturbation = doc
        .perturbation
        .map(|p| Perturbation {
            offset: p.offset,
            a: p.a.unwrap_or_default(),
            b: p.b.unwrap_or_default(),
        })
        .unwrap_or_default();

    JacobiSpec::new(background, perturbation)
}

/// Serializes a spec in canonical form (free backgrounds come out as
/// `constant` with `a = 1`, `b = 0`).
pub fn to_config(spec: &JacobiSpec) -> String {
    let background = match spec.background() {
        Background::Free => BackgroundDoc {
            kind: Kind::Free,
            a: None,
            b: None,
            phase: None,
        },
        Background::Constant { a, b } => BackgroundDoc {
            kind: Kind::Constant,
            a: Some(Values::One(*a)),
            b: Some(Values::One(*b)),
            phase: None,
        },
        Background::Periodic { a, b, phase } => BackgroundDoc {
            kind: Kind::Periodic,
            a: Some(Values::Many(a.clone())),
            b: Some(Values::Many(b.clone())),
            phase: Some(*phase),
        },
    };
    let p = spec.perturbation();
    let perturbation = (!p.is_empty()).then(|| PerturbationDoc {
        offset: p.offset,
        a: (!p.a.is_empty()).then(|| p.a.clone()),
        b: (!p.b.is_empty()).then(|| p.b.clone()),
    });
    serde_json::to_string_pretty(&ConfigDoc {
        background,
        perturbation,
    })
    .expect("config serializes")
}

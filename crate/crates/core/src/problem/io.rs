//! JSON problem files.
//!
//! ```json
//! {
//!   "blocks": [{"kind": "l1_nonneg", "params": {"weight": 1.0}, "A": [[1.0, 0.0], [0.0, 1.0]]}],
//!   "tail": {"g": {"kind": "linear", "c": [1.0]}, "h": {"kind": "zero"}, "lipschitz_Lg": 0.0},
//!   "B": [[1.0], [1.0]],
//!   "b": [1.0, 2.0],
//!   "y_domain": {"kind": "nonneg"}
//! }
//! ```
//!
//! Matrices are arrays of rows. Block kinds are `linear` (`params: {c}`),
//! `diag_quadratic` (`params: {p_diag, c}`) and `l1_nonneg` (`params: {weight}`).
//! `g` kinds: `zero`, `linear {c}`, `quadratic {P, c}`. `h` kinds: `zero`,
//! `l1 {weight}`, `box {l, u}`, `nonneg`. `y_domain` kinds: `free`, `nonneg`,
//! `box {l, u}`. `lipschitz_Lg` is optional and defaults to `λ_max(P)`.

use serde::{Deserialize, Serialize};
use serde_json::Value;
use std::path::Path;
use thiserror::Error;

use super::{Block, BlockFunction, NonsmoothH, ProblemSpec, SmoothG, TailFunction, YDomain};
use crate::numeric::{DenseMatrix, Vector};

#[derive(Debug, Error)]
pub enum ProblemFileError {
    #[error("reading problem file: {0}")]
    Io(#[from] std::io::Error),
    #[error("parsing problem file: {0}")]
    Json(#[from] serde_json::Error),
    #[error("problem file field `{field}`: {message}")]
    Field { field: String, message: String },
    #[error(transparent)]
    Invalid(#[from] crate::Error),
}

fn field_err(field: impl Into<String>, message: impl Into<String>) -> ProblemFileError {
    ProblemFileError::Field {
        field: field.into(),
        message: message.into(),
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct BlockEntry {
    pub kind: String,
    pub params: Value,
    #[serde(rename = "A")]
    pub a: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GEntry {
    Zero,
    Linear {
        c: Vec<f64>,
    },
    Quadratic {
        #[serde(rename = "P")]
        p: Vec<Vec<f64>>,
        c: Vec<f64>,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum HEntry {
    Zero,
    L1 { weight: f64 },
    Box { l: Vec<f64>, u: Vec<f64> },
    Nonneg,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct TailEntry {
    pub g: GEntry,
    #[serde(default = "default_h")]
    pub h: HEntry,
    #[serde(rename = "lipschitz_Lg", default, skip_serializing_if = "Option::is_none")]
    pub lipschitz_lg: Option<f64>,
}

fn default_h() -> HEntry {
    HEntry::Zero
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum YDomainEntry {
    Free,
    Nonneg,
    Box { l: Vec<f64>, u: Vec<f64> },
}

/// On-disk form of a [`ProblemSpec`].
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ProblemFile {
    pub blocks: Vec<BlockEntry>,
    pub tail: TailEntry,
    #[serde(rename = "B")]
    pub b_mat: Vec<Vec<f64>>,
    pub b: Vec<f64>,
    pub y_domain: YDomainEntry,
}

fn matrix(rows: &[Vec<f64>], field: &str, expected_rows: Option<usize>) -> Result<DenseMatrix, ProblemFileError> {
    let nrows = rows.len();
    if let Some(expect) = expected_rows {
        if nrows != expect {
            return Err(field_err(field, format!("expected {expect} rows, found {nrows}")));
        }
    }
    let ncols = rows.first().map_or(0, Vec::len);
    if let Some((i, _)) = rows.iter().enumerate().find(|(_, r)| r.len() != ncols) {
        return Err(field_err(field, format!("row {i} has a different length than row 0")));
    }
    Ok(DenseMatrix::from_fn(nrows, ncols, |i, j| rows[i][j]))
}

fn rows_of(m: &DenseMatrix) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}

fn vector_param(params: &Value, name: &str, field: &str) -> Result<Vector, ProblemFileError> {
    let raw = params
        .get(name)
        .ok_or_else(|| field_err(format!("{field}.{name}"), "missing"))?;
    let data: Vec<f64> = serde_json::from_value(raw.clone())
        .map_err(|e| field_err(format!("{field}.{name}"), e.to_string()))?;
    Ok(Vector::from_vec(data))
}

impl BlockEntry {
    fn to_function(&self, index: usize) -> Result<BlockFunction, ProblemFileError> {
        let field = format!("blocks[{index}].params");
        match self.kind.as_str() {
            "linear" => Ok(BlockFunction::Linear {
                c: vector_param(&self.params, "c", &field)?,
            }),
            "diag_quadratic" => Ok(BlockFunction::DiagQuadratic {
                p_diag: vector_param(&self.params, "p_diag", &field)?,
                c: vector_param(&self.params, "c", &field)?,
            }),
            "l1_nonneg" => {
                let weight = self
                    .params
                    .get("weight")
                    .and_then(Value::as_f64)
                    .ok_or_else(|| field_err(format!("{field}.weight"), "missing or not a number"))?;
                Ok(BlockFunction::L1Nonneg { weight })
            }
            other => Err(field_err(
                format!("blocks[{index}].kind"),
                format!("unknown block kind `{other}` (expected linear, diag_quadratic, l1_nonneg)"),
            )),
        }
    }

    fn from_block(block: &Block) -> Self {
        let (kind, params) = match &block.f {
            BlockFunction::Linear { c } => ("linear", serde_json::json!({ "c": c.as_slice() })),
            BlockFunction::DiagQuadratic { p_diag, c } => (
                "diag_quadratic",
                serde_json::json!({ "p_diag": p_diag.as_slice(), "c": c.as_slice() }),
            ),
            BlockFunction::L1Nonneg { weight } => ("l1_nonneg", serde_json::json!({ "weight": weight })),
        };
        BlockEntry {
            kind: kind.to_string(),
            params,
            a: rows_of(&block.a),
        }
    }
}

impl ProblemFile {
    pub fn from_json_str(text: &str) -> Result<Self, ProblemFileError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self, ProblemFileError> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("problem file serializes")
    }

    pub fn into_spec(self) -> Result<ProblemSpec, ProblemFileError> {
        let n = self.b.len();
        let mut blocks = Vec::with_capacity(self.blocks.len());
        for (i, entry) in self.blocks.iter().enumerate() {
            let f = entry.to_function(i)?;
            let a = matrix(&entry.a, &format!("blocks[{i}].A"), Some(n))?;
            blocks.push(Block { f, a });
        }
        let b_mat = matrix(&self.b_mat, "B", Some(n))?;
        let g = match self.tail.g {
            GEntry::Zero => SmoothG::Zero,
            GEntry::Linear { c } => SmoothG::Linear { c: Vector::from_vec(c) },
            GEntry::Quadratic { p, c } => SmoothG::Quadratic {
                p: matrix(&p, "tail.g.P", None)?,
                c: Vector::from_vec(c),
            },
        };
        let h = match self.tail.h {
            HEntry::Zero => NonsmoothH::Zero,
            HEntry::L1 { weight } => NonsmoothH::L1 { weight },
            HEntry::Box { l, u } => NonsmoothH::IndicatorBox {
                l: Vector::from_vec(l),
                u: Vector::from_vec(u),
            },
            HEntry::Nonneg => NonsmoothH::IndicatorNonneg,
        };
        let tail = match self.tail.lipschitz_lg {
            Some(lg) => TailFunction::with_lipschitz(g, h, lg)?,
            None => TailFunction::new(g, h)?,
        };
        let y_domain = match self.y_domain {
            YDomainEntry::Free => YDomain::Free,
            YDomainEntry::Nonneg => YDomain::Nonneg,
            YDomainEntry::Box { l, u } => YDomain::Box {
                l: Vector::from_vec(l),
                u: Vector::from_vec(u),
            },
        };
        Ok(ProblemSpec::new(blocks, tail, b_mat, Vector::from_vec(self.b), y_domain)?)
    }

    pub fn from_spec(spec: &ProblemSpec) -> Self {
        let tail = spec.tail();
        let g = match &tail.g {
            SmoothG::Zero => GEntry::Zero,
            SmoothG::Linear { c } => GEntry::Linear { c: c.as_slice().to_vec() },
            SmoothG::Quadratic { p, c } => GEntry::Quadratic {
                p: rows_of(p),
                c: c.as_slice().to_vec(),
            },
        };
        let h = match &tail.h {
            NonsmoothH::Zero => HEntry::Zero,
            NonsmoothH::L1 { weight } => HEntry::L1 { weight: *weight },
            NonsmoothH::IndicatorBox { l, u } => HEntry::Box {
                l: l.as_slice().to_vec(),
                u: u.as_slice().to_vec(),
            },
            NonsmoothH::IndicatorNonneg => HEntry::Nonneg,
        };
        let y_domain = match spec.y_domain() {
            YDomain::Free => YDomainEntry::Free,
            YDomain::Nonneg => YDomainEntry::Nonneg,
            YDomain::Box { l, u } => YDomainEntry::Box {
                l: l.as_slice().to_vec(),
                u: u.as_slice().to_vec(),
            },
        };
        ProblemFile {
            blocks: spec.blocks().iter().map(BlockEntry::from_block).collect(),
            tail: TailEntry {
                g,
                h,
                lipschitz_lg: Some(tail.lipschitz_lg),
            },
            b_mat: rows_of(spec.b_mat()),
            b: spec.rhs().as_slice().to_vec(),
            y_domain,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"{
      "blocks": [{"kind": "l1_nonneg", "params": {"weight": 1.0}, "A": [[1.0, 0.0], [0.0, 1.0]]}],
      "tail": {"g": {"kind": "linear", "c": [1.0]}, "h": {"kind": "zero"}},
      "B": [[1.0], [1.0]],
      "b": [1.0, 2.0],
      "y_domain": {"kind": "nonneg"}
    }"#;

    #[test]
    fn parses_sample() {
        let spec = ProblemFile::from_json_str(SAMPLE).unwrap().into_spec().unwrap();
        assert_eq!(spec.num_blocks(), 1);
        assert_eq!(spec.y_dim(), 1);
        assert_eq!(spec.y_domain(), &YDomain::Nonneg);
        assert_eq!(spec.tail().lipschitz_lg, 0.0);
    }

    #[test]
    fn spec_round_trips_through_json() {
        let spec = ProblemFile::from_json_str(SAMPLE).unwrap().into_spec().unwrap();
        let text = ProblemFile::from_spec(&spec).to_json_string();
        let back = ProblemFile::from_json_str(&text).unwrap().into_spec().unwrap();
        assert_eq!(spec, back);
    }

    #[test]
    fn unknown_kind_names_field() {
        let bad = SAMPLE.replace("l1_nonneg", "cubic");
        let err = ProblemFile::from_json_str(&bad).unwrap().into_spec().unwrap_err();
        assert!(err.to_string().contains("blocks[0].kind"), "{err}");
    }

    #[test]
    fn ragged_matrix_names_field() {
        let bad = SAMPLE.replace("[[1.0, 0.0], [0.0, 1.0]]", "[[1.0, 0.0], [0.0]]");
        let err = ProblemFile::from_json_str(&bad).unwrap().into_spec().unwrap_err();
        assert!(err.to_string().contains("blocks[0].A"), "{err}");
    }

    #[test]
    fn missing_param_names_field() {
        let bad = SAMPLE.replace(r#"{"weight": 1.0}"#, "{}");
        let err = ProblemFile::from_json_str(&bad).unwrap().into_spec().unwrap_err();
        assert!(err.to_string().contains("blocks[0].params.weight"), "{err}");
    }
}

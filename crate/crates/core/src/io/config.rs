use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::expr::Expression;
use crate::mesh::BcKind;
use crate::model::{BoundaryCondition, KInverse, ProblemSpec, VectorField};
use crate::problems::{builtin, BuiltinProblem, NAMES};

use super::mesh::read_mesh;

/// Number or expression text.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum ExprValue {
    Num(f64),
    Text(String),
}

impl ExprValue {
    fn parse(&self) -> Result<Expression> {
        match self {
            ExprValue::Num(v) => Ok(Expression::num(*v)),
            ExprValue::Text(s) => Ok(Expression::parse(s)?),
        }
    }
}

fn parse_field(values: &[ExprValue]) -> Result<VectorField> {
    Ok(VectorField::new(values.iter().map(ExprValue::parse).collect::<Result<_>>()?))
}

/// Scalar `s` (meaning `s·I`) or a full matrix.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum TensorValue {
    Scalar(f64),
    Matrix(Vec<Vec<f64>>),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RegionDoc {
    id: i32,
    k_inverse: TensorValue,
    #[serde(default)]
    body_force: Option<Vec<ExprValue>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct BcDoc {
    tag: i32,
    kind: BcKind,
    value: Vec<ExprValue>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigDoc {
    dim: usize,
    mu: f64,
    mu_star: f64,
    regions: Vec<RegionDoc>,
    bc: Vec<BcDoc>,
    #[serde(default)]
    body_force: Option<Vec<ExprValue>>,
    #[serde(default)]
    mass_source: Option<ExprValue>,
    mesh: String,
    /// Grid spacing when `mesh` names a built-in problem.
    #[serde(default)]
    h: Option<f64>,
}

fn spec_from_doc(doc: &ConfigDoc) -> Result<ProblemSpec> {
    let d = doc.dim;
    let mut k_inverse = BTreeMap::new();
    let mut region_body_force = BTreeMap::new();
    for r in &doc.regions {
        let k = match &r.k_inverse {
            TensorValue::Scalar(s) => {
                let k = KInverse::isotropic(d, *s);
                k.validate(d).map_err(|e| Error::Config(format!("region {}: {e}", r.id)))?;
                k
            }
            TensorValue::Matrix(m) => {
                KInverse::from_matrix(m).map_err(|e| Error::Config(format!("region {}: {e}", r.id)))?
            }
        };
        if k_inverse.insert(r.id, k).is_some() {
            return Err(Error::Config(format!("region {} listed twice", r.id)));
        }
        if let Some(f) = &r.body_force {
            region_body_force.insert(r.id, parse_field(f)?);
        }
    }
    let mut bcs = BTreeMap::new();
    for b in &doc.bc {
        let value = parse_field(&b.value)?;
        let bc = BoundaryCondition { kind: b.kind, value };
        if bcs.insert(b.tag, bc).is_some() {
            return Err(Error::Config(format!("boundary tag {} listed twice", b.tag)));
        }
    }
    Ok(ProblemSpec {
        dim: d,
        mu: doc.mu,
        mu_star: doc.mu_star,
        k_inverse,
        bcs,
        body_force: match &doc.body_force {
            Some(f) => parse_field(f)?,
            None => VectorField::zero(d),
        },
        region_body_force,
        mass_source: match &doc.mass_source {
            Some(g) => g.parse()?,
            None => Expression::num(0.0),
        },
    })
}

/// Parses a problem configuration; relative mesh paths are resolved against `base`.
pub fn problem_from_str(text: &str, origin: &Path, base: &Path) -> Result<BuiltinProblem> {
    let doc: ConfigDoc = serde_json::from_str(text).map_err(|e| Error::Parse {
        path: origin.to_path_buf(),
        message: e.to_string(),
    })?;
    let spec = spec_from_doc(&doc)?;
    let mesh = if NAMES.contains(&doc.mesh.as_str()) {
        builtin(&doc.mesh, doc.h)?.mesh
    } else {
        let p = PathBuf::from(&doc.mesh);
        read_mesh(if p.is_absolute() { p } else { base.join(p) })?
    };
    spec.validate(&mesh)?;
    let name = origin
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "config".into());
    Ok(BuiltinProblem {
        name,
        mesh,
        spec,
        exact: None,
    })
}

pub fn read_problem(path: impl AsRef<Path>) -> Result<BuiltinProblem> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let base = path.parent().unwrap_or(Path::new("."));
    problem_from_str(&text, path, base)
}

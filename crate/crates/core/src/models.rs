//! Built-in models and the TOML model format.
//!
//! A model file holds `dim`, a sparse `brackets` list of `[i, j, k, value]`
//! entries (0-based, meaning `[e_i, e_j] = value e_k + ...`), the matrices
//! `J1`, `J2` and an optional SPD `metric` in the same frame. `J3 = J1 J2`.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::Deserialize;
use thiserror::Error;

use crate::curvature_lab::{instanton_and_star_ricci, Geometry};
use crate::frame_tensor::{EndoMatrix, Tensor, TensorError};
use crate::lie_model::{LieError, MetricLieAlgebra};
use crate::quaternionic::{verify_triple, QuaternionicTriple};
use crate::report::Check;

/// Residual bound for the quaternionic axioms of a loaded triple.
pub const TRIPLE_TOL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("unknown model '{0}' (builtins: flat8, hopf8, solv8)")]
    UnknownModel(String),
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("parse error: inconsistent bracket entry at ({i},{j})")]
    InconsistentBracket { i: usize, j: usize },
    #[error("Jacobi identity violated: residual {residual:.3e}")]
    JacobiViolation { residual: f64 },
    #[error("quaternionic triple violated ({constraint}): residual {residual:.3e}")]
    TripleViolation { constraint: &'static str, residual: f64 },
}

impl From<TensorError> for ModelError {
    fn from(e: TensorError) -> Self {
        ModelError::Parse(e.to_string())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BuiltinModel {
    Flat8,
    Hopf8,
    Solv8,
}

impl BuiltinModel {
    pub const ALL: [BuiltinModel; 3] = [BuiltinModel::Flat8, BuiltinModel::Hopf8, BuiltinModel::Solv8];

    pub fn name(self) -> &'static str {
        match self {
            BuiltinModel::Flat8 => "flat8",
            BuiltinModel::Hopf8 => "hopf8",
            BuiltinModel::Solv8 => "solv8",
        }
    }
}

impl fmt::Display for BuiltinModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BuiltinModel {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        BuiltinModel::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| ModelError::UnknownModel(s.to_string()))
    }
}

/// A validated metric Lie algebra with an orthonormal frame and a triple.
#[derive(Clone, Debug, PartialEq)]
pub struct Model {
    pub name: String,
    pub algebra: MetricLieAlgebra,
    pub triple: QuaternionicTriple,
}

fn set_bracket(c: &mut Tensor, i: usize, j: usize, k: usize, v: f64) {
    c.set(&[i, j, k], v);
    c.set(&[j, i, k], -v);
}

pub fn builtin(which: BuiltinModel) -> Model {
    let mut c = Tensor::zeros(3, 8);
    match which {
        BuiltinModel::Flat8 => {}
        BuiltinModel::Hopf8 => {
            for (i, j, k) in [(1, 2, 3), (2, 3, 1), (3, 1, 2)] {
                set_bracket(&mut c, i, j, k, 2.0);
            }
        }
        BuiltinModel::Solv8 => {
            for i in 1..8 {
                set_bracket(&mut c, 0, i, i, 1.0);
            }
        }
    }
    Model {
        name: which.name().to_string(),
        algebra: MetricLieAlgebra::new(c).expect("builtin brackets are valid"),
        triple: QuaternionicTriple::standard(2),
    }
}

/// Resolves a builtin name or else a path to a model file.
pub fn resolve(name_or_path: &str) -> Result<Model, ModelError> {
    match name_or_path.parse::<BuiltinModel>() {
        Ok(b) => Ok(builtin(b)),
        Err(e) => {
            if Path::new(name_or_path).is_file() {
                load(name_or_path)
            } else {
                Err(e)
            }
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    name: Option<String>,
    dim: usize,
    #[serde(default)]
    brackets: Vec<(usize, usize, usize, f64)>,
    #[serde(rename = "J1")]
    j1: Vec<Vec<f64>>,
    #[serde(rename = "J2")]
    j2: Vec<Vec<f64>>,
    metric: Option<Vec<Vec<f64>>>,
}

fn square(rows: &[Vec<f64>], dim: usize, what: &str) -> Result<DMatrix<f64>, ModelError> {
    if rows.len() != dim || rows.iter().any(|r| r.len() != dim) {
        return Err(ModelError::Parse(format!("{what} must be a {dim}x{dim} matrix")));
    }
    Ok(DMatrix::from_fn(dim, dim, |i, j| rows[i][j]))
}

/// Parses a model document; `default_name` is used when the file has no `name`.
pub fn parse(text: &str, default_name: &str) -> Result<Model, ModelError> {
    let file: ModelFile = toml::from_str(text).map_err(|e| ModelError::Parse(e.to_string()))?;
    let d = file.dim;
    if d == 0 || d % 4 != 0 {
        return Err(ModelError::Parse(format!("dim must be a positive multiple of 4, got {d}")));
    }
    let mut c = Tensor::zeros(3, d);
    let mut seen = vec![false; d * d * d];
    for &(i, j, k, v) in &file.brackets {
        if i >= d || j >= d || k >= d {
            return Err(ModelError::Parse(format!("bracket index out of range in [{i}, {j}, {k}]")));
        }
        if i == j {
            if v != 0.0 {
                return Err(ModelError::InconsistentBracket { i, j });
            }
            continue;
        }
        let (a, b, s) = if i < j { (i, j, 1.0) } else { (j, i, -1.0) };
        let slot = (a * d + b) * d + k;
        if seen[slot] && c.get(&[a, b, k]) != s * v {
            return Err(ModelError::InconsistentBracket { i, j });
        }
        seen[slot] = true;
        set_bracket(&mut c, a, b, k, s * v);
    }
    let j1 = square(&file.j1, d, "J1")?;
    let j2 = square(&file.j2, d, "J2")?;
    let metric = file.metric.as_deref().map(|m| square(m, d, "metric")).transpose()?;
    let name = file.name.unwrap_or_else(|| default_name.to_string());
    from_parts(name, c, j1, j2, metric)
}

/// Validates brackets and triple, orthonormalising a non-identity metric first.
pub fn from_parts(
    name: String,
    c: Tensor,
    j1: DMatrix<f64>,
    j2: DMatrix<f64>,
    metric: Option<DMatrix<f64>>,
) -> Result<Model, ModelError> {
    let (c, j1, j2) = match metric {
        Some(g) if g != DMatrix::identity(c.dim(), c.dim()) => orthonormalise(&c, &j1, &j2, &g)?,
        _ => (c, j1, j2),
    };
    let algebra = MetricLieAlgebra::new(c).map_err(|e| match e {
        LieError::Jacobi(residual) => ModelError::JacobiViolation { residual },
        other => ModelError::Parse(other.to_string()),
    })?;
    let triple = QuaternionicTriple::from_pair(EndoMatrix::new(j1)?, EndoMatrix::new(j2)?)
        .map_err(|e| ModelError::Parse(e.to_string()))?;
    let r = verify_triple(&triple);
    let checks = [
        ("J_a^2 = -id", r.square.iter().cloned().fold(0.0, f64::max)),
        ("J1 J2 = -J2 J1", r.anticommute),
        ("J_a orthogonal", r.orthogonal.iter().cloned().fold(0.0, f64::max)),
    ];
    if let Some(&(constraint, residual)) = checks.iter().find(|(_, x)| *x > TRIPLE_TOL) {
        return Err(ModelError::TripleViolation { constraint, residual });
    }
    Ok(Model { name, algebra, triple })
}

/// New frame `f_a = sum_i P[i][a] e_i` with `P = L^{-T}`, `g = L L^T`.
fn orthonormalise(
    c: &Tensor,
    j1: &DMatrix<f64>,
    j2: &DMatrix<f64>,
    g: &DMatrix<f64>,
) -> Result<(Tensor, DMatrix<f64>, DMatrix<f64>), ModelError> {
    let d = c.dim();
    if (g - g.transpose()).amax() > 0.0 {
        return Err(ModelError::Parse("metric is not symmetric".into()));
    }
    let l = g
        .clone()
        .cholesky()
        .ok_or_else(|| ModelError::Parse("metric is not positive definite".into()))?
        .l();
    let p = l.transpose().try_inverse().expect("cholesky factor is invertible");
    let pinv = l.transpose();
    let mut out = Tensor::zeros(3, d);
    for a in 0..d {
        for b in a + 1..d {
            for k2 in 0..d {
                let mut acc = 0.0;
                for i in 0..d {
                    for j in 0..d {
                        let w = p[(i, a)] * p[(j, b)];
                        if w == 0.0 {
                            continue;
                        }
                        for k in 0..d {
                            acc += w * c.get(&[i, j, k]) * pinv[(k2, k)];
                        }
                    }
                }
                set_bracket(&mut out, a, b, k2, acc);
            }
        }
    }
    Ok((out, &pinv * j1 * &p, &pinv * j2 * &p))
}

pub fn load(path: impl AsRef<Path>) -> Result<Model, ModelError> {
    let path = path.as_ref();
    let io = |e: std::io::Error| ModelError::Io { path: path.display().to_string(), message: e.to_string() };
    let text = std::fs::read_to_string(path).map_err(io)?;
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("model");
    parse(&text, stem)
}

fn number(v: f64) -> toml::Value {
    if v.fract() == 0.0 && v.abs() < 1e15 {
        toml::Value::Integer(v as i64)
    } else {
        toml::Value::Float(v)
    }
}

fn matrix_value(m: &DMatrix<f64>) -> toml::Value {
    toml::Value::Array(
        (0..m.nrows())
            .map(|i| toml::Value::Array((0..m.ncols()).map(|j| number(m[(i, j)])).collect()))
            .collect(),
    )
}

/// Serialises a model in the file format (orthonormal frame, no metric).
pub fn to_toml(model: &Model) -> String {
    let d = model.algebra.dim();
    let mut brackets = Vec::new();
    for i in 0..d {
        for j in i + 1..d {
            for k in 0..d {
                let v = model.algebra.c(i, j, k);
                if v != 0.0 {
                    brackets.push(toml::Value::Array(vec![
                        number(i as f64),
                        number(j as f64),
                        number(k as f64),
                        number(v),
                    ]));
                }
            }
        }
    }
    let mut table = toml::Table::new();
    table.insert("name".into(), toml::Value::String(model.name.clone()));
    table.insert("dim".into(), number(d as f64));
    table.insert("brackets".into(), toml::Value::Array(brackets));
    table.insert("J1".into(), matrix_value(model.triple.get(0).matrix()));
    table.insert("J2".into(), matrix_value(model.triple.get(1).matrix()));
    toml::to_string(&table).expect("plain table serialises")
}

pub fn save(model: &Model, path: impl AsRef<Path>) -> Result<(), ModelError> {
    let path = path.as_ref();
    std::fs::write(path, to_toml(model))
        .map_err(|e| ModelError::Io { path: path.display().to_string(), message: e.to_string() })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Classification {
    HyperKaehler,
    Hkt { balanced: bool },
    /// QKT but not HKT.
    Qkt,
    None,
}

impl fmt::Display for Classification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Classification::HyperKaehler => "hyperkähler",
            Classification::Hkt { balanced: true } => "HKT, balanced",
            Classification::Hkt { balanced: false } => "HKT, non-balanced",
            Classification::Qkt => "QKT, non-HKT",
            Classification::None => "none",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Validation {
    pub class: Classification,
    /// `None` when no QKT connection exists or the criteria disagree.
    pub instanton: Option<bool>,
    pub checks: Vec<Check>,
}

/// Re-checks the axioms and classifies the structure.
pub fn validate(model: &Model, tol: f64) -> Validation {
    let mut checks = vec![Check::residual(
        "structure.jacobi",
        "Jacobi identity of the structure constants",
        "[[X,Y],Z] + [[Y,Z],X] + [[Z,X],Y] = 0",
        model.algebra.jacobi_check(),
        tol,
    )];
    let r = verify_triple(&model.triple);
    checks.push(Check::residual(
        "structure.triple",
        "quaternionic relations and orthogonality of the triple",
        "J_a^2 = -1, J1 J2 = -J2 J1 = J3, J_a^T J_a = 1",
        r.max_residual(),
        tol,
    ));
    let (class, instanton) = match Geometry::new(&model.algebra, &model.triple) {
        Ok(g) => {
            let class = if !g.is_hkt() {
                Classification::Qkt
            } else if g.torsion().max_abs() <= tol {
                Classification::HyperKaehler
            } else {
                Classification::Hkt { balanced: g.t.max_abs() <= tol }
            };
            (class, instanton_and_star_ricci(&g, tol).ok().map(|i| i.instanton))
        }
        Err(_) => (Classification::None, None),
    };
    Validation { class, instanton, checks }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_classes() {
        let expect = [
            (BuiltinModel::Flat8, "hyperkähler"),
            (BuiltinModel::Hopf8, "HKT, non-balanced"),
            (BuiltinModel::Solv8, "QKT, non-HKT"),
        ];
        for (b, name) in expect {
            let v = validate(&builtin(b), 1e-9);
            assert_eq!(v.class.to_string(), name);
            assert!(v.checks.iter().all(|c| c.pass));
            assert_eq!(v.instanton, Some(true));
        }
    }

    #[test]
    fn builtins_round_trip() {
        for b in BuiltinModel::ALL {
            let m = builtin(b);
            let back = parse(&to_toml(&m), "x").unwrap();
            assert_eq!(back, m);
        }
    }

    #[test]
    fn unknown_name() {
        assert_eq!(
            "hopf9".parse::<BuiltinModel>(),
            Err(ModelError::UnknownModel("hopf9".into()))
        );
    }

    #[test]
    fn conflicting_bracket_names_pair() {
        let m = builtin(BuiltinModel::Flat8);
        let text = to_toml(&m).replace("brackets = []", "brackets = [[1, 2, 3, 1], [2, 1, 3, 1]]");
        assert_eq!(parse(&text, "x"), Err(ModelError::InconsistentBracket { i: 2, j: 1 }));
    }

    #[test]
    fn jacobi_violation_reported() {
        let m = builtin(BuiltinModel::Flat8);
        let text = to_toml(&m).replace("brackets = []", "brackets = [[0, 1, 1, 1], [0, 2, 2, 1], [1, 2, 0, 1]]");
        assert!(matches!(parse(&text, "x"), Err(ModelError::JacobiViolation { .. })));
    }

    #[test]
    fn scaled_metric_orthonormalised() {
        // g = 4 id: frame e_i/2, brackets scale by 1/2
        let m = builtin(BuiltinModel::Hopf8);
        let mut text = to_toml(&m);
        text.push_str("metric = [");
        for i in 0..8 {
            let row: Vec<String> = (0..8).map(|j| if i == j { "4".into() } else { "0".into() }).collect();
            text.push_str(&format!("[{}],", row.join(", ")));
        }
        text.push_str("]\n");
        let back = parse(&text, "x").unwrap();
        assert_eq!(back.algebra.c(1, 2, 3), 1.0);
        assert_eq!(back.triple, m.triple);
    }

    #[test]
    fn broken_triple_rejected() {
        let m = builtin(BuiltinModel::Flat8);
        let j1 = m.triple.get(0).matrix().clone();
        let err = from_parts("x".into(), Tensor::zeros(3, 8), j1.clone(), j1, None).unwrap_err();
        assert!(matches!(err, ModelError::TripleViolation { .. }));
    }
}

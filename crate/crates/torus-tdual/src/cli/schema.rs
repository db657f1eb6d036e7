//! Problem files: `{"version", "command", "input"}` with exact rationals as
//! `"p/q"` strings, matrices as row lists and lattices as column lists.

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::Value;

use crate::mat::{fmt_rat, parse_rat, Int, IntMatrix, Rat, RatMatrix};

pub const FORMAT_VERSION: &str = "torus-tdual/1";

/// Exact rational in `"p/q"` notation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Q(pub Rat);

impl Serialize for Q {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&fmt_rat(&self.0))
    }
}

impl<'de> Deserialize<'de> for Q {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        parse_rat(&s).map(Q).ok_or_else(|| D::Error::custom(format!("not an exact rational: {s:?}")))
    }
}

pub type QVec = Vec<Q>;
/// Row-major matrix.
pub type QRows = Vec<Vec<Q>>;
/// Lattice generators, one column per entry.
pub type QCols = Vec<Vec<Q>>;

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum SchemaError {
    #[error("malformed document: {0}")]
    Json(String),
    #[error("unsupported version {found:?}; expected {FORMAT_VERSION:?}")]
    Version { found: String },
    #[error("file holds a {found} problem but the {expected} command was invoked")]
    CommandMismatch { found: String, expected: String },
    #[error("shape: {0}")]
    Shape(String),
    #[error("{0}")]
    Invalid(String),
}

pub fn rat_vec(v: &[Q]) -> Vec<Rat> {
    v.iter().map(|q| q.0.clone()).collect()
}

pub fn q_vec(v: &[Rat]) -> QVec {
    v.iter().cloned().map(Q).collect()
}

pub fn rat_matrix(rows: &QRows, what: &str) -> Result<RatMatrix, SchemaError> {
    let width = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != width) {
        return Err(SchemaError::Shape(format!("{what}: rows of unequal length")));
    }
    if rows.is_empty() {
        return Ok(RatMatrix::zeros(0, 0));
    }
    Ok(RatMatrix::from_rows(rows.iter().map(|r| rat_vec(r)).collect()))
}

pub fn square_matrix(rows: &QRows, n: usize, what: &str) -> Result<RatMatrix, SchemaError> {
    let m = rat_matrix(rows, what)?;
    if m.rows() != n || m.cols() != n {
        return Err(SchemaError::Shape(format!("{what}: expected {n}×{n}, got {}×{}", m.rows(), m.cols())));
    }
    Ok(m)
}

pub fn int_matrix(rows: &QRows, what: &str) -> Result<IntMatrix, SchemaError> {
    rat_matrix(rows, what)?.to_int().ok_or_else(|| SchemaError::Invalid(format!("{what}: entries must be integers")))
}

pub fn q_rows(m: &RatMatrix) -> QRows {
    m.row_vecs().iter().map(|r| q_vec(r)).collect()
}

/// Columns of a given ambient length.
pub fn rat_cols(cols: &QCols, ambient: usize, what: &str) -> Result<Vec<Vec<Rat>>, SchemaError> {
    if cols.iter().any(|c| c.len() != ambient) {
        return Err(SchemaError::Shape(format!("{what}: every column needs {ambient} entries")));
    }
    Ok(cols.iter().map(|c| rat_vec(c)).collect())
}

pub fn vector(v: &[Q], len: usize, what: &str) -> Result<Vec<Rat>, SchemaError> {
    if v.len() != len {
        return Err(SchemaError::Shape(format!("{what}: expected {len} entries, got {}", v.len())));
    }
    Ok(rat_vec(v))
}

pub fn integers(v: &[Q], what: &str) -> Result<Vec<Int>, SchemaError> {
    v.iter()
        .map(|q| if q.0.is_integer() { Ok(q.0.to_integer()) } else { Err(SchemaError::Invalid(format!("{what}: entries must be integers"))) })
        .collect()
}

/// Skew form on ℤᵏ (standard basis).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FormInput {
    pub form: QRows,
}

/// Line bundle on the source lattice pushed to the target lattice.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PushforwardInput {
    pub ambient: usize,
    /// Generators of Γ_X.
    pub source: QCols,
    /// Generators of Γ_Y; ℤⁿ when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<QCols>,
    /// Curvature as an ambient Gram matrix; zero when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub curvature: Option<QRows>,
    /// Character twist as an ambient covector; zero when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub twist: Option<QVec>,
}

/// Line bundle on ℤᵏ for φ-duality.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhiDualInput {
    pub curvature: QRows,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub twist: Option<QVec>,
    /// Symplectic frame (columns, integral, unimodular).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frame: Option<QCols>,
    /// Integral covector twisting the auxiliary bundle by a kernel character.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_twist: Option<QVec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rep_permutation: Option<Vec<usize>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpInput {
    pub divisors: QVec,
    pub matrix: QRows,
}

/// Affine family data; `g0`, `g1` refer to the given sublattice generators.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilySpec {
    pub base_form: QRows,
    pub g0: QVec,
    pub g1: QRows,
    pub b1: QRows,
}

/// Brane on `ℚⁿ/ℤⁿ`; the fiber form and twist refer to the given generators.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BraneInput {
    pub ambient: usize,
    pub sublattice: QCols,
    pub translation: QVec,
    pub fiber_form: QRows,
    /// Present for a line bundle payload, absent for a bare rational form.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub twist: Option<QVec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub family: Option<FamilySpec>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TDualizeInput {
    pub brane: BraneInput,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base_points: Option<Vec<QVec>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub leaf_grid: Option<i64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HigherRankInput {
    pub brane: BraneInput,
}

/// Exactly one of `(metric, complex)`, `frame` or `random_dim` selects the base triple.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SemiflatInput {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metric: Option<QRows>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub complex: Option<QRows>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frame: Option<QRows>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub random_dim: Option<usize>,
    /// Connection matrix `F` of the deformation; zero when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub deformation: Option<QRows>,
    /// Columns spanning a coisotropic subspace of `V ⊕ V*`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coisotropic: Option<QCols>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyInput {
    pub suite: String,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Problem {
    NormalForm(FormInput),
    GammaH(FormInput),
    Pushforward(PushforwardInput),
    PhiDual(PhiDualInput),
    SpDecompose(SpInput),
    Tdualize(TDualizeInput),
    HigherRank(HigherRankInput),
    Semiflat(SemiflatInput),
    Verify(VerifyInput),
}

pub const COMMANDS: [&str; 9] =
    ["normal-form", "gamma-h", "pushforward", "phi-dual", "sp-decompose", "tdualize", "higher-rank", "semiflat", "verify"];

impl Problem {
    pub fn command(&self) -> &'static str {
        match self {
            Problem::NormalForm(_) => "normal-form",
            Problem::GammaH(_) => "gamma-h",
            Problem::Pushforward(_) => "pushforward",
            Problem::PhiDual(_) => "phi-dual",
            Problem::SpDecompose(_) => "sp-decompose",
            Problem::Tdualize(_) => "tdualize",
            Problem::HigherRank(_) => "higher-rank",
            Problem::Semiflat(_) => "semiflat",
            Problem::Verify(_) => "verify",
        }
    }

    fn input_value(&self) -> Value {
        let v = match self {
            Problem::NormalForm(x) | Problem::GammaH(x) => serde_json::to_value(x),
            Problem::Pushforward(x) => serde_json::to_value(x),
            Problem::PhiDual(x) => serde_json::to_value(x),
            Problem::SpDecompose(x) => serde_json::to_value(x),
            Problem::Tdualize(x) => serde_json::to_value(x),
            Problem::HigherRank(x) => serde_json::to_value(x),
            Problem::Semiflat(x) => serde_json::to_value(x),
            Problem::Verify(x) => serde_json::to_value(x),
        };
        v.expect("payloads serialize")
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProblemFile {
    pub version: String,
    pub problem: Problem,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Envelope {
    version: String,
    command: String,
    input: Value,
}

fn payload<T: serde::de::DeserializeOwned>(v: Value, command: &str) -> Result<T, SchemaError> {
    serde_json::from_value(v).map_err(|e| SchemaError::Json(format!("{command} input: {e}")))
}

impl ProblemFile {
    pub fn new(problem: Problem) -> Self {
        ProblemFile { version: FORMAT_VERSION.into(), problem }
    }

    pub fn from_value(v: Value) -> Result<Self, SchemaError> {
        let env: Envelope = serde_json::from_value(v).map_err(|e| SchemaError::Json(e.to_string()))?;
        if env.version != FORMAT_VERSION {
            return Err(SchemaError::Version { found: env.version });
        }
        let c = env.command.as_str();
        let problem = match c {
            "normal-form" => Problem::NormalForm(payload(env.input, c)?),
            "gamma-h" => Problem::GammaH(payload(env.input, c)?),
            "pushforward" => Problem::Pushforward(payload(env.input, c)?),
            "phi-dual" => Problem::PhiDual(payload(env.input, c)?),
            "sp-decompose" => Problem::SpDecompose(payload(env.input, c)?),
            "tdualize" => Problem::Tdualize(payload(env.input, c)?),
            "higher-rank" => Problem::HigherRank(payload(env.input, c)?),
            "semiflat" => Problem::Semiflat(payload(env.input, c)?),
            "verify" => Problem::Verify(payload(env.input, c)?),
            other => return Err(SchemaError::Json(format!("unknown command {other:?}; expected one of {COMMANDS:?}"))),
        };
        Ok(ProblemFile { version: env.version, problem })
    }

    pub fn parse(text: &str) -> Result<Self, SchemaError> {
        let v: Value = serde_json::from_str(text).map_err(|e| SchemaError::Json(e.to_string()))?;
        Self::from_value(v)
    }

    pub fn to_value(&self) -> Value {
        serde_json::to_value(Envelope {
            version: self.version.clone(),
            command: self.problem.command().into(),
            input: self.problem.input_value(),
        })
        .expect("envelope serializes")
    }

    pub fn to_pretty(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.to_value()).expect("serializes");
        s.push('\n');
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rationals_parse_exactly_and_reject_floats() {
        let q: Q = serde_json::from_str("\"-3/6\"").unwrap();
        assert_eq!(q.0, crate::mat::rat(-1, 2));
        assert_eq!(serde_json::to_string(&q).unwrap(), "\"-1/2\"");
        assert!(serde_json::from_str::<Q>("0.5").is_err());
        assert!(serde_json::from_str::<Q>("\"1/0\"").is_err());
    }

    #[test]
    fn envelope_rejects_unknown_fields_and_versions() {
        let good = r#"{"version":"torus-tdual/1","command":"gamma-h","input":{"form":[["0","1/2"],["-1/2","0"]]}}"#;
        let p = ProblemFile::parse(good).unwrap();
        assert_eq!(p.problem.command(), "gamma-h");
        assert_eq!(p.to_value(), serde_json::from_str::<Value>(good).unwrap());
        let extra = good.replace("\"form\"", "\"extra\":1,\"form\"");
        assert!(matches!(ProblemFile::parse(&extra), Err(SchemaError::Json(_))));
        let old = good.replace("torus-tdual/1", "torus-tdual/0");
        assert!(matches!(ProblemFile::parse(&old), Err(SchemaError::Version { .. })));
    }
}

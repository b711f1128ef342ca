//! JSON and CSV interchange.
//!
//! Every JSON document carries `"schema": "l1geo/1"`. Matrices are lists of
//! rows; `D` is `n×p` with atoms as columns. Floats are written with 17
//! significant digits.

use std::io;

use serde::{Deserialize, Serialize};
use serde_json::ser::{Formatter, Serializer};

use crate::ballgeo::Dictionary;
use crate::construct::{AffineSubspace, ConstructedInstance, Target, VerificationReport};
use crate::error::{Error, Result};
use crate::linalg::{from_rows, to_rows, Matrix, Tolerances};
use crate::signpat::SignVector;
use crate::solset::{ProblemInstance, SolutionSetDescription};

pub const SCHEMA: &str = "l1geo/1";

/// Writes every float as `{:.16e}`.
struct FullPrecision;

impl Formatter for FullPrecision {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        write!(writer, "{value:.16e}")
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, f64::from(value))
    }
}

/// Serializes with full float precision and a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut buf = Vec::new();
    let mut ser = Serializer::with_formatter(&mut buf, FullPrecision);
    value
        .serialize(&mut ser)
        .map_err(|e| Error::internal(format!("serialization failed: {e}")))?;
    buf.push(b'\n');
    String::from_utf8(buf).map_err(|e| Error::internal(e.to_string()))
}

fn check_schema(schema: &Option<String>) -> Result<()> {
    match schema.as_deref() {
        None | Some(SCHEMA) => Ok(()),
        Some(other) => Err(Error::input(format!("unsupported schema {other:?}, expected {SCHEMA:?}"))),
    }
}

fn matrix_from_rows(rows: &[Vec<f64>], what: &str) -> Result<Matrix> {
    let cols = rows.first().map_or(0, Vec::len);
    from_rows(rows, cols).map_err(|e| match e {
        Error::Input(msg) => Error::input(format!("{what}: {msg}")),
        other => other,
    })
}

/// The instance document.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InstanceDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schema: Option<String>,
    #[serde(rename = "D")]
    pub d: Vec<Vec<f64>>,
    #[serde(rename = "Phi", default, skip_serializing_if = "Option::is_none")]
    pub phi: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<Provenance>,
}

impl InstanceDoc {
    pub fn from_instance(inst: &ProblemInstance) -> Self {
        InstanceDoc {
            schema: Some(SCHEMA.to_string()),
            d: to_rows(inst.dict.d()),
            phi: Some(to_rows(&inst.phi)),
            y: Some(inst.y.clone()),
            lambda: Some(inst.lambda),
            provenance: None,
        }
    }

    pub fn dictionary(&self, tol: Tolerances) -> Result<Dictionary> {
        check_schema(&self.schema)?;
        Dictionary::new(matrix_from_rows(&self.d, "D")?, tol)
    }

    pub fn instance(&self, tol: Tolerances) -> Result<ProblemInstance> {
        let dict = self.dictionary(tol)?;
        let (Some(phi), Some(y), Some(lambda)) = (&self.phi, &self.y, self.lambda) else {
            return Err(Error::input("instance needs Phi, y and lambda"));
        };
        let phi = if phi.is_empty() {
            Matrix::zeros(0, dict.n())
        } else {
            matrix_from_rows(phi, "Phi")?
        };
        ProblemInstance::new(dict, phi, y.clone(), lambda)
    }
}

pub fn parse_instance(text: &str, tol: Tolerances) -> Result<ProblemInstance> {
    let doc: InstanceDoc = serde_json::from_str(text).map_err(|e| Error::input(format!("instance JSON: {e}")))?;
    doc.instance(tol)
}

pub fn instance_to_json(inst: &ProblemInstance) -> Result<String> {
    to_json(&InstanceDoc::from_instance(inst))
}

/// Comma- or whitespace-separated rows; blank lines and `#` comments skipped.
pub fn parse_csv_matrix(text: &str) -> Result<Matrix> {
    let mut rows = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let row = line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|t| !t.is_empty())
            .map(|t| {
                t.parse::<f64>()
                    .map_err(|_| Error::input(format!("line {}: cannot parse {t:?} as a number", lineno + 1)))
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::input("matrix file is empty"));
    }
    matrix_from_rows(&rows, "matrix")
}

/// Reads a dictionary from CSV rows of `D` or from an instance document,
/// chosen by the file extension.
pub fn parse_dictionary(text: &str, extension: &str, tol: Tolerances) -> Result<Dictionary> {
    match extension.to_ascii_lowercase().as_str() {
        "json" => {
            let doc: InstanceDoc =
                serde_json::from_str(text).map_err(|e| Error::input(format!("dictionary JSON: {e}")))?;
            doc.dictionary(tol)
        }
        "csv" | "txt" | "tsv" => Dictionary::new(parse_csv_matrix(text)?, tol),
        other => Err(Error::input(format!("unknown matrix file extension {other:?}"))),
    }
}

/// Affine subspace input: an origin plus either normals, directions, or a
/// list of points whose hull is taken. Vectors are listed one per entry.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AffineDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schema: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub origin: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub normals: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub directions: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<Vec<Vec<f64>>>,
}

fn columns(vectors: &[Vec<f64>], n: usize, what: &str) -> Result<Matrix> {
    if let Some(bad) = vectors.iter().position(|v| v.len() != n) {
        return Err(Error::input(format!("{what} #{bad} has the wrong length")));
    }
    Ok(Matrix::from_fn(n, vectors.len(), |i, k| vectors[k][i]))
}

impl AffineDoc {
    pub fn from_affine(a: &AffineSubspace) -> Self {
        let cols = |m: &Matrix| m.column_iter().map(|c| c.iter().copied().collect()).collect();
        AffineDoc {
            schema: Some(SCHEMA.to_string()),
            origin: Some(a.origin.clone()),
            normals: Some(cols(&a.normal_basis)),
            directions: Some(cols(&a.direction_basis)),
            points: None,
        }
    }

    pub fn affine(&self, n: usize, tol: &Tolerances) -> Result<AffineSubspace> {
        check_schema(&self.schema)?;
        if let Some(points) = &self.points {
            if self.origin.is_some() || self.normals.is_some() || self.directions.is_some() {
                return Err(Error::input("give either points or origin with normals/directions"));
            }
            if points.iter().any(|p| p.len() != n) {
                return Err(Error::input("affine points have the wrong length"));
            }
            return AffineSubspace::hull_of(points, tol);
        }
        let origin = self.origin.clone().ok_or_else(|| Error::input("affine subspace needs an origin"))?;
        if origin.len() != n {
            return Err(Error::input(format!("affine origin has length {}, expected {n}", origin.len())));
        }
        match (&self.normals, &self.directions) {
            (Some(normals), None) => AffineSubspace::from_normals(origin, &columns(normals, n, "normal")?, tol),
            (None, Some(dirs)) => AffineSubspace::from_directions(origin, &columns(dirs, n, "direction")?, tol),
            (None, None) => Ok(AffineSubspace::point(origin)),
            (Some(_), Some(_)) => Err(Error::input("give normals or directions, not both")),
        }
    }
}

pub fn parse_affine(text: &str, n: usize, tol: &Tolerances) -> Result<AffineSubspace> {
    let doc: AffineDoc = serde_json::from_str(text).map_err(|e| Error::input(format!("affine JSON: {e}")))?;
    doc.affine(n, tol)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AlphaWeight {
    pub sign: SignVector,
    pub weight: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CertificateDoc {
    pub u: Vec<f64>,
    pub anchor: Vec<f64>,
    pub beta: Vec<f64>,
    pub alpha: Vec<AlphaWeight>,
}

/// How a constructed instance came about.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Provenance {
    pub mode: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sign: Option<SignVector>,
    pub radius: f64,
    pub affine: AffineDoc,
    pub certificate: CertificateDoc,
}

pub fn constructed_to_json(ci: &ConstructedInstance) -> Result<String> {
    let (mode, sign, radius) = match &ci.target {
        Target::TheoremArb { radius } => ("theorem-arb", None, *radius),
        Target::ArbitraryFace { sign, radius } => ("face", Some(sign.clone()), *radius),
    };
    let c = &ci.certificate;
    let mut doc = InstanceDoc::from_instance(&ci.inst);
    doc.provenance = Some(Provenance {
        mode: mode.to_string(),
        sign,
        radius,
        affine: AffineDoc::from_affine(&ci.affine),
        certificate: CertificateDoc {
            u: c.dual.u.clone(),
            anchor: c.anchor.clone(),
            beta: c.beta.clone(),
            alpha: c
                .alpha
                .iter()
                .map(|(s, w)| AlphaWeight {
                    sign: s.clone(),
                    weight: *w,
                })
                .collect(),
        },
    });
    to_json(&doc)
}

/// Mirror of [`SolutionSetDescription`] without the constraint matrices.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DescriptionDoc {
    pub schema: String,
    pub x_ri: Vec<f64>,
    pub max_sign: SignVector,
    pub radius: f64,
    pub dim: usize,
    pub compact: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub extreme_points: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub bounds: Vec<CoordinateBound>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CoordinateBound {
    pub index: usize,
    /// `None` encodes an infinite bound.
    pub lo: Option<f64>,
    pub hi: Option<f64>,
}

impl DescriptionDoc {
    pub fn new(desc: &SolutionSetDescription) -> Self {
        DescriptionDoc {
            schema: SCHEMA.to_string(),
            x_ri: desc.x_ri.clone(),
            max_sign: desc.max_sign.clone(),
            radius: desc.radius,
            dim: desc.dim,
            compact: desc.compact,
            extreme_points: None,
            bounds: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct VerificationDoc<'a> {
    pub schema: &'static str,
    pub verdict: &'static str,
    #[serde(flatten)]
    pub report: &'a VerificationReport,
}

impl<'a> VerificationDoc<'a> {
    pub fn new(report: &'a VerificationReport) -> Self {
        VerificationDoc {
            schema: SCHEMA,
            verdict: if report.passed { "PASS" } else { "FAIL" },
            report,
        }
    }
}

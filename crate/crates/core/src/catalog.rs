//! On-disk formats: inequality catalogs, proof certificates, optimizer
//! config. All rational coefficients travel as strings (`"-1"`, `"1/2"`),
//! so files re-verify byte-for-byte across platforms.
//!
//! A catalog file is either one entry object or an array of them:
//!
//! ```json
//! {
//!   "name": "I2222", "m": 2, "n": 2,
//!   "joint": [["1","1"],["1","-1"]],
//!   "marg_x": ["-1","0"], "marg_y": ["-1","0"],
//!   "const": "0", "form": "algebraic"
//! }
//! ```
//!
//! Certificates mirror the proof tree, with 1-based setting indices to match
//! the usual `x_1..x_m` naming:
//!
//! ```json
//! {"split": {"party": "y", "index": 2,
//!            "pivot": [{"index": 1, "coeff": "1"}, {"index": 2, "coeff": "-1"}],
//!            "hi": {"leaf": {"terms": [{"kind": "xma_y", "i": 1, "j": 1, "coeff": "1"}]}},
//!            "lo": {"leaf": {"terms": []}}}}
//! ```

use std::fs;
use std::path::Path;

use num::Zero;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::{format_rational, parse_rational, BellExpression, Form, Party, Rational};
use crate::optimize::OptimizerConfig;
use crate::proof::{PositivityKind, PositivityTerm, ProofCertificate};

#[derive(Debug, Error)]
pub enum CatalogError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Parse { path: String, message: String },
    #[error("entry `{0}` not found in catalog")]
    MissingEntry(String),
    #[error("duplicate entry name `{0}`")]
    DuplicateName(String),
}

fn io_err(path: &Path, source: std::io::Error) -> CatalogError {
    CatalogError::Io {
        path: path.display().to_string(),
        source,
    }
}

fn parse_err(path: &Path, message: impl Into<String>) -> CatalogError {
    CatalogError::Parse {
        path: path.display().to_string(),
        message: message.into(),
    }
}

/// A named inequality with free-text provenance.
#[derive(Debug, Clone)]
pub struct CatalogEntry {
    pub name: String,
    pub expr: BellExpression,
    pub provenance: String,
}

#[derive(Debug, Serialize, Deserialize)]
struct EntryJson {
    name: String,
    m: usize,
    n: usize,
    joint: Vec<Vec<String>>,
    marg_x: Vec<String>,
    marg_y: Vec<String>,
    #[serde(rename = "const")]
    const_term: String,
    form: String,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    provenance: String,
}

fn entry_to_json(entry: &CatalogEntry) -> EntryJson {
    let e = &entry.expr;
    EntryJson {
        name: entry.name.clone(),
        m: e.m(),
        n: e.n(),
        joint: (0..e.m())
            .map(|i| (0..e.n()).map(|j| format_rational(e.joint(i, j))).collect())
            .collect(),
        marg_x: (0..e.m())
            .map(|i| format_rational(e.marg(Party::X, i)))
            .collect(),
        marg_y: (0..e.n())
            .map(|j| format_rational(e.marg(Party::Y, j)))
            .collect(),
        const_term: format_rational(e.const_term()),
        form: e.form().to_string(),
        provenance: entry.provenance.clone(),
    }
}

fn entry_from_json(path: &Path, j: &EntryJson) -> Result<CatalogEntry, CatalogError> {
    let form = match j.form.as_str() {
        "algebraic" => Form::Algebraic,
        "probability" => Form::Probability,
        other => return Err(parse_err(path, format!("unknown form `{other}`"))),
    };
    let parse = |s: &String| parse_rational(s).map_err(|e| parse_err(path, e));
    if j.joint.len() != j.m {
        return Err(parse_err(path, "joint has wrong number of rows"));
    }
    let mut joint = Vec::with_capacity(j.m);
    for row in &j.joint {
        if row.len() != j.n {
            return Err(parse_err(path, "joint has wrong number of columns"));
        }
        joint.push(row.iter().map(parse).collect::<Result<Vec<_>, _>>()?);
    }
    let marg_x = j.marg_x.iter().map(parse).collect::<Result<Vec<_>, _>>()?;
    let marg_y = j.marg_y.iter().map(parse).collect::<Result<Vec<_>, _>>()?;
    if marg_x.len() != j.m || marg_y.len() != j.n {
        return Err(parse_err(path, "marginal lengths do not match m, n"));
    }
    let expr = BellExpression::new(joint, marg_x, marg_y, parse(&j.const_term)?, form)
        .map_err(|e| parse_err(path, e.to_string()))?;
    Ok(CatalogEntry {
        name: j.name.clone(),
        expr,
        provenance: j.provenance.clone(),
    })
}

/// Load a catalog file (single entry or array); names must be unique.
pub fn load_catalog(path: &Path) -> Result<Vec<CatalogEntry>, CatalogError> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum OneOrMany {
        One(Box<EntryJson>),
        Many(Vec<EntryJson>),
    }
    let parsed: OneOrMany =
        serde_json::from_str(&text).map_err(|e| parse_err(path, e.to_string()))?;
    let raw = match parsed {
        OneOrMany::One(e) => vec![*e],
        OneOrMany::Many(v) => v,
    };
    let mut entries = Vec::with_capacity(raw.len());
    let mut names = std::collections::HashSet::new();
    for j in &raw {
        if !names.insert(j.name.clone()) {
            return Err(CatalogError::DuplicateName(j.name.clone()));
        }
        entries.push(entry_from_json(path, j)?);
    }
    Ok(entries)
}

/// Write a catalog file as a pretty-printed array.
pub fn save_catalog(path: &Path, entries: &[CatalogEntry]) -> Result<(), CatalogError> {
    let raw: Vec<EntryJson> = entries.iter().map(entry_to_json).collect();
    let mut text = serde_json::to_string_pretty(&raw).expect("catalog serialization is total");
    text.push('\n');
    fs::write(path, text).map_err(|e| io_err(path, e))
}

pub fn find_entry<'a>(
    entries: &'a [CatalogEntry],
    name: &str,
) -> Result<&'a CatalogEntry, CatalogError> {
    entries
        .iter()
        .find(|e| e.name == name)
        .ok_or_else(|| CatalogError::MissingEntry(name.to_string()))
}

#[derive(Debug, Serialize, Deserialize)]
struct PivotPairJson {
    index: usize,
    coeff: String,
}

#[derive(Debug, Serialize, Deserialize)]
struct TermJson {
    kind: String,
    i: usize,
    j: usize,
    coeff: String,
}

#[derive(Debug, Serialize, Deserialize)]
enum CertJson {
    #[serde(rename = "leaf")]
    Leaf { terms: Vec<TermJson> },
    #[serde(rename = "split")]
    Split {
        party: String,
        index: usize,
        pivot: Vec<PivotPairJson>,
        hi: Box<CertJson>,
        lo: Box<CertJson>,
    },
}

fn cert_to_json(cert: &ProofCertificate) -> CertJson {
    match cert {
        ProofCertificate::Leaf { terms } => CertJson::Leaf {
            terms: terms
                .iter()
                .map(|t| TermJson {
                    kind: t.kind.tag().to_string(),
                    i: t.i + 1,
                    j: t.j + 1,
                    coeff: format_rational(&t.coeff),
                })
                .collect(),
        },
        ProofCertificate::Split {
            party,
            index,
            pivot,
            hi,
            lo,
        } => CertJson::Split {
            party: party.to_string(),
            index: index + 1,
            pivot: pivot
                .iter()
                .enumerate()
                .filter(|(_, c)| !c.is_zero())
                .map(|(k, c)| PivotPairJson {
                    index: k + 1,
                    coeff: format_rational(c),
                })
                .collect(),
            hi: Box::new(cert_to_json(hi)),
            lo: Box::new(cert_to_json(lo)),
        },
    }
}

fn cert_from_json(
    path: &Path,
    j: &CertJson,
    m: usize,
    n: usize,
) -> Result<ProofCertificate, CatalogError> {
    match j {
        CertJson::Leaf { terms } => {
            let mut out = Vec::with_capacity(terms.len());
            for t in terms {
                let kind = PositivityKind::from_tag(&t.kind)
                    .ok_or_else(|| parse_err(path, format!("unknown term kind `{}`", t.kind)))?;
                if t.i == 0 || t.j == 0 {
                    return Err(parse_err(path, "term indices are 1-based"));
                }
                out.push(PositivityTerm {
                    kind,
                    i: t.i - 1,
                    j: t.j - 1,
                    coeff: parse_rational(&t.coeff).map_err(|e| parse_err(path, e))?,
                });
            }
            Ok(ProofCertificate::Leaf { terms: out })
        }
        CertJson::Split {
            party,
            index,
            pivot,
            hi,
            lo,
        } => {
            let party = match party.as_str() {
                "x" => Party::X,
                "y" => Party::Y,
                other => return Err(parse_err(path, format!("unknown party `{other}`"))),
            };
            if *index == 0 {
                return Err(parse_err(path, "split index is 1-based"));
            }
            let opposite = match party {
                Party::X => n,
                Party::Y => m,
            };
            let mut dense = vec![Rational::zero(); opposite];
            for p in pivot {
                if p.index == 0 || p.index > opposite {
                    return Err(parse_err(path, "pivot index out of range"));
                }
                dense[p.index - 1] = parse_rational(&p.coeff).map_err(|e| parse_err(path, e))?;
            }
            Ok(ProofCertificate::Split {
                party,
                index: index - 1,
                pivot: dense,
                hi: Box::new(cert_from_json(path, hi, m, n)?),
                lo: Box::new(cert_from_json(path, lo, m, n)?),
            })
        }
    }
}

/// Write a certificate file for an `m x n` scenario.
pub fn save_certificate(path: &Path, cert: &ProofCertificate) -> Result<(), CatalogError> {
    let mut text = serde_json::to_string_pretty(&cert_to_json(cert))
        .expect("certificate serialization is total");
    text.push('\n');
    fs::write(path, text).map_err(|e| io_err(path, e))
}

/// Read a certificate file back; `m`, `n` size the dense pivots.
pub fn load_certificate(path: &Path, m: usize, n: usize) -> Result<ProofCertificate, CatalogError> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let parsed: CertJson =
        serde_json::from_str(&text).map_err(|e| parse_err(path, e.to_string()))?;
    cert_from_json(path, &parsed, m, n)
}

/// Load optimizer settings; missing fields fall back to the defaults.
pub fn load_config(path: &Path) -> Result<OptimizerConfig, CatalogError> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    serde_json::from_str(&text).map_err(|e| parse_err(path, e.to_string()))
}

/// Render one entry as a standalone JSON object.
pub fn entry_json_string(entry: &CatalogEntry) -> String {
    serde_json::to_string_pretty(&entry_to_json(entry)).expect("entry serialization is total")
}

/// Parse one entry from a standalone JSON object.
pub fn parse_entry_json(text: &str) -> Result<CatalogEntry, CatalogError> {
    let mem = Path::new("<memory>");
    let raw: EntryJson = serde_json::from_str(text).map_err(|e| parse_err(mem, e.to_string()))?;
    entry_from_json(mem, &raw)
}

/// Render a certificate as JSON text.
pub fn certificate_json_string(cert: &ProofCertificate) -> String {
    serde_json::to_string_pretty(&cert_to_json(cert)).expect("certificate serialization is total")
}

/// Parse a certificate from JSON text; `m`, `n` size the dense pivots.
pub fn parse_certificate_json(
    text: &str,
    m: usize,
    n: usize,
) -> Result<ProofCertificate, CatalogError> {
    let mem = Path::new("<memory>");
    let parsed: CertJson = serde_json::from_str(text).map_err(|e| parse_err(mem, e.to_string()))?;
    cert_from_json(mem, &parsed, m, n)
}

//! The `.osj` operator-space document: UTF-8 JSON with a name, ambient
//! corner dimensions, and a basis of h×k matrices whose entries are
//! `[re, im]` pairs. Parsing keeps every digit of the decimal literals
//! (standard f64 round-trip); the writer emits 17 significant digits so a
//! written document re-parses to the exact same values.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numcore::{CMatrix, Tolerances};
use crate::spaces::OperatorSpace;

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct Ambient {
    pub h: usize,
    pub k: usize,
}

/// Raw document form, mirroring the on-disk JSON.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct OsjDocument {
    pub name: String,
    pub ambient: Ambient,
    pub basis: Vec<Vec<Vec<[f64; 2]>>>,
}

impl OsjDocument {
    pub fn parse_str(s: &str) -> Result<OsjDocument> {
        let doc: OsjDocument = serde_json::from_str(s)
            .map_err(|e| Error::Input(format!("malformed .osj document: {e}")))?;
        doc.validate()?;
        Ok(doc)
    }

    pub fn validate(&self) -> Result<()> {
        let (h, k) = (self.ambient.h, self.ambient.k);
        for (bi, mat) in self.basis.iter().enumerate() {
            if mat.len() != h {
                return Err(Error::Input(format!(
                    "basis[{bi}] has {} rows, expected h={h}",
                    mat.len()
                )));
            }
            for (ri, row) in mat.iter().enumerate() {
                if row.len() != k {
                    return Err(Error::Input(format!(
                        "basis[{bi}] row {ri} has {} entries, expected k={k}",
                        row.len()
                    )));
                }
                for (ci, entry) in row.iter().enumerate() {
                    if !entry[0].is_finite() || !entry[1].is_finite() {
                        return Err(Error::Input(format!(
                            "basis[{bi}] entry ({ri},{ci}) is not finite"
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// The raw matrices, exactly as written (no orthonormalization).
    pub fn matrices(&self) -> Vec<CMatrix> {
        let (h, k) = (self.ambient.h, self.ambient.k);
        self.basis
            .iter()
            .map(|mat| CMatrix::from_fn(h, k, |i, j| Complex64::new(mat[i][j][0], mat[i][j][1])))
            .collect()
    }

    pub fn from_matrices(name: impl Into<String>, h: usize, k: usize, mats: &[CMatrix]) -> Self {
        let basis = mats
            .iter()
            .map(|m| {
                (0..h)
                    .map(|i| (0..k).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
                    .collect()
            })
            .collect();
        OsjDocument {
            name: name.into(),
            ambient: Ambient { h, k },
            basis,
        }
    }

    /// Serialize with 17-significant-digit number literals.
    pub fn to_json_string(&self) -> String {
        let mut out = String::new();
        out.push_str("{\n  \"name\": ");
        out.push_str(&serde_json::to_string(&self.name).expect("string serializes"));
        out.push_str(&format!(
            ",\n  \"ambient\": {{\"h\": {}, \"k\": {}}},\n  \"basis\": [",
            self.ambient.h, self.ambient.k
        ));
        for (bi, mat) in self.basis.iter().enumerate() {
            if bi > 0 {
                out.push(',');
            }
            out.push_str("\n    [");
            for (ri, row) in mat.iter().enumerate() {
                if ri > 0 {
                    out.push(',');
                }
                out.push_str("\n      [");
                for (ci, e) in row.iter().enumerate() {
                    if ci > 0 {
                        out.push_str(", ");
                    }
                    out.push_str(&format!("[{}, {}]", fmt_f64(e[0]), fmt_f64(e[1])));
                }
                out.push(']');
            }
            out.push_str("\n    ]");
        }
        out.push_str("\n  ]\n}\n");
        out
    }
}

fn fmt_f64(v: f64) -> String {
    if v == v.trunc() && v.abs() < 1e15 {
        // Integers stay readable; they re-parse exactly.
        format!("{:.1}", v)
    } else {
        format!("{:.16e}", v)
    }
}

/// Load and validate an operator space from a parsed document; the basis
/// is orthonormalized (duplicates deduplicate through the span).
pub fn load_space(doc: &OsjDocument, tol: &Tolerances) -> Result<OperatorSpace> {
    doc.validate()?;
    OperatorSpace::new(doc.name.clone(), doc.ambient.h, doc.ambient.k, &doc.matrices(), tol)
}

pub fn load_space_str(s: &str, tol: &Tolerances) -> Result<OperatorSpace> {
    load_space(&OsjDocument::parse_str(s)?, tol)
}

/// A document holding exactly one matrix (used for z, e, and x0 inputs);
/// returns the raw matrix without normalization.
pub fn single_matrix(doc: &OsjDocument) -> Result<CMatrix> {
    doc.validate()?;
    if doc.basis.len() != 1 {
        return Err(Error::Input(format!(
            "expected a single-matrix document, found {} basis entries",
            doc.basis.len()
        )));
    }
    Ok(doc.matrices().remove(0))
}

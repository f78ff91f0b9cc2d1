//! Matrix and exponent files: rationals as `[num, den]`, blocks as 1-based index lists.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{validate_matrix, Exponents, Structure};
use crate::rational::Rat;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StructureFile {
    pub matrix: Vec<Vec<[i64; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<Vec<[i64; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub blocks: Option<Vec<Vec<usize>>>,
}

fn to_rat(p: &[i64; 2]) -> Result<Rat> {
    if p[1] == 0 {
        return Err(Error::Parse(format!("zero denominator in [{}, {}]", p[0], p[1])));
    }
    Ok(Rat::new(p[0] as i128, p[1] as i128))
}

fn from_rat(r: &Rat) -> Result<[i64; 2]> {
    let n = i64::try_from(*r.numer()).map_err(|_| Error::Overflow)?;
    let d = i64::try_from(*r.denom()).map_err(|_| Error::Overflow)?;
    Ok([n, d])
}

impl StructureFile {
    pub fn into_structure(&self) -> Result<Structure> {
        let entries = self
            .matrix
            .iter()
            .map(|row| row.iter().map(to_rat).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        let matrix = validate_matrix(entries)?;
        let n = matrix.n();
        let exponents = match (&self.lambda, &self.blocks) {
            (None, None) => Exponents::isotropic(n),
            (lambda, blocks) => {
                let blocks: Vec<Vec<usize>> = match blocks {
                    Some(b) => b
                        .iter()
                        .map(|blk| {
                            blk.iter()
                                .map(|&h| {
                                    h.checked_sub(1)
                                        .ok_or_else(|| Error::Parse("block indices are 1-based".into()))
                                })
                                .collect::<Result<Vec<_>>>()
                        })
                        .collect::<Result<_>>()?,
                    None => (0..n).map(|i| vec![i]).collect(),
                };
                let d: usize = blocks.iter().map(|b| b.len()).sum();
                let lambda = match lambda {
                    Some(l) => l.iter().map(to_rat).collect::<Result<Vec<_>>>()?,
                    None => vec![Rat::from_integer(1); d],
                };
                Exponents::new(lambda, blocks)?
            }
        };
        Structure::new(matrix, exponents)
    }

    pub fn from_structure(s: &Structure) -> Result<Self> {
        let matrix = s
            .matrix
            .entries()
            .iter()
            .map(|row| row.iter().map(from_rat).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        Ok(StructureFile {
            matrix,
            lambda: Some(s.exponents.lambda().iter().map(from_rat).collect::<Result<_>>()?),
            blocks: Some(
                s.exponents
                    .blocks()
                    .iter()
                    .map(|b| b.iter().map(|h| h + 1).collect())
                    .collect(),
            ),
        })
    }
}

pub fn parse_structure(text: &str) -> Result<Structure> {
    let f: StructureFile = serde_json::from_str(text)?;
    f.into_structure()
}

pub fn render_structure(s: &Structure) -> Result<String> {
    Ok(serde_json::to_string_pretty(&StructureFile::from_structure(s)?)?)
}

pub fn load_structure(path: &Path) -> Result<Structure> {
    parse_structure(&std::fs::read_to_string(path)?)
}

pub fn save_structure(s: &Structure, path: &Path) -> Result<()> {
    std::fs::write(path, render_structure(s)? + "\n")?;
    Ok(())
}

//! JSON system documents: matrices, labels and design choices.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, c64, Mat, C64};
use crate::matpoly::{Side, SolventForm};
use crate::statespace::StateSpace;

/// An eigenvalue written either as a bare real number or as `[re, im]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Eigenvalue {
    Real(f64),
    Complex([f64; 2]),
}

impl From<Eigenvalue> for C64 {
    fn from(e: Eigenvalue) -> Self {
        match e {
            Eigenvalue::Real(re) => c64(re, 0.0),
            Eigenvalue::Complex([re, im]) => c64(re, im),
        }
    }
}

impl From<C64> for Eigenvalue {
    fn from(z: C64) -> Self {
        if z.im == 0.0 {
            Eigenvalue::Real(z.re)
        } else {
            Eigenvalue::Complex([z.re, z.im])
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemDocument {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    #[serde(rename = "A")]
    pub a: Vec<Vec<f64>>,
    #[serde(rename = "B")]
    pub b: Vec<Vec<f64>>,
    #[serde(rename = "C")]
    pub c: Vec<Vec<f64>>,
    #[serde(rename = "D", default, skip_serializing_if = "Option::is_none")]
    pub d: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub states: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inputs: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outputs: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spectrum: Option<Vec<Eigenvalue>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub partition: Option<Vec<Vec<usize>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub form: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub side: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub perturbation: Option<Vec<Vec<f64>>>,
}

impl SystemDocument {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidInput(format!("malformed system document: {e}")))
    }

    pub fn system(&self) -> Result<StateSpace> {
        let a = linalg::try_from_rows(&self.a)?;
        let b = linalg::try_from_rows(&self.b)?;
        let c = linalg::try_from_rows(&self.c)?;
        let d = match &self.d {
            Some(d) => linalg::try_from_rows(d)?,
            None => Mat::zeros(c.nrows(), b.ncols()),
        };
        StateSpace::new(a, b, c, d)?.with_labels(self.states.clone(), self.inputs.clone(), self.outputs.clone())
    }

    pub fn spectrum(&self) -> Option<Vec<C64>> {
        self.spectrum.as_ref().map(|s| s.iter().map(|&e| e.into()).collect())
    }

    pub fn form(&self) -> Result<Option<SolventForm>> {
        self.form.as_deref().map(parse_form).transpose()
    }

    pub fn side(&self) -> Result<Option<Side>> {
        self.side.as_deref().map(parse_side).transpose()
    }

    pub fn perturbation(&self) -> Result<Option<Mat>> {
        self.perturbation.as_ref().map(|p| linalg::try_from_rows(p)).transpose()
    }
}

pub fn parse_form(s: &str) -> Result<SolventForm> {
    match s.to_ascii_lowercase().as_str() {
        "diagonal" => Ok(SolventForm::Diagonal),
        "controller" => Ok(SolventForm::Controller),
        "observer" => Ok(SolventForm::Observer),
        other => Err(Error::InvalidInput(format!("unknown solvent form {other:?}"))),
    }
}

pub fn parse_side(s: &str) -> Result<Side> {
    match s.to_ascii_lowercase().as_str() {
        "right" => Ok(Side::Right),
        "left" => Ok(Side::Left),
        other => Err(Error::InvalidInput(format!("unknown side {other:?}"))),
    }
}

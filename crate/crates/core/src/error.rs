use std::fmt;

use thiserror::Error;

use crate::linalg::C64;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Pipeline stage tags attached to errors coming out of [`crate::synthesis::design_2dof`]
/// and the case study.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Partition,
    Solvents,
    Certification,
    Polynomial,
    ControllerForm,
    Feedback,
    Feedforward,
    Simulation,
    Robustness,
    Perturbation,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Stage::Partition => "partition",
            Stage::Solvents => "solvents",
            Stage::Certification => "certification",
            Stage::Polynomial => "polynomial",
            Stage::ControllerForm => "controller-form",
            Stage::Feedback => "feedback",
            Stage::Feedforward => "feedforward",
            Stage::Simulation => "simulation",
            Stage::Robustness => "robustness",
            Stage::Perturbation => "perturbation",
        };
        f.write_str(s)
    }
}

/// One violated completeness condition of a candidate solvent set.
#[derive(Debug, Clone, PartialEq)]
pub enum SetDefect {
    /// The solvents do not share a side or an order, or there are none.
    Malformed(String),
    /// The union of solvent spectra does not reproduce the target spectrum.
    SpectrumMismatch { missing: Vec<C64>, unexpected: Vec<C64> },
    /// Two solvents share (numerically) an eigenvalue.
    SpectraNotDisjoint { first: usize, second: usize, eigenvalues: Vec<C64> },
    /// The block Vandermonde matrix is singular or too badly conditioned to use.
    VandermondeSingular { condition: f64, cap: f64 },
}

impl fmt::Display for SetDefect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SetDefect::Malformed(msg) => write!(f, "malformed solvent list: {msg}"),
            SetDefect::SpectrumMismatch { missing, unexpected } => write!(
                f,
                "spectrum union mismatch (missing {}, unexpected {})",
                fmt_spectrum(missing),
                fmt_spectrum(unexpected)
            ),
            SetDefect::SpectraNotDisjoint { first, second, eigenvalues } => write!(
                f,
                "spectra not disjoint: solvents {first} and {second} share {}",
                fmt_spectrum(eigenvalues)
            ),
            SetDefect::VandermondeSingular { condition, cap } => write!(
                f,
                "Vandermonde singular: condition number {condition:.3e} exceeds {cap:.1e}"
            ),
        }
    }
}

pub(crate) fn fmt_spectrum(values: &[C64]) -> String {
    let parts: Vec<String> = values
        .iter()
        .map(|z| {
            if z.im == 0.0 {
                format!("{:.6}", z.re)
            } else {
                format!("{:.6}{:+.6}i", z.re, z.im)
            }
        })
        .collect();
    format!("[{}]", parts.join(", "))
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("matrix polynomial is not monic: leading coefficient is not the identity")]
    NotMonic,

    #[error("index not integral: n = {n} is not a multiple of m = {m}")]
    IndexNotIntegral { n: usize, m: usize },

    #[error("not block controllable: rank of [B, AB, ..., A^(l-1)B] is {rank}, need {n}")]
    NotBlockControllable { rank: usize, n: usize },

    #[error("{what} is ill-conditioned: condition number {condition:.3e} exceeds cap {cap:.1e}")]
    IllConditioned { what: &'static str, condition: f64, cap: f64 },

    #[error("{0} is singular")]
    Singular(&'static str),

    #[error("spectrum is not closed under conjugation: {0}")]
    NotConjugateClosed(String),

    #[error("matrix is defective or nearly so: eigenvector condition number {condition:.3e} exceeds {cap:.1e}")]
    Defective { condition: f64, cap: f64 },

    #[error("incomplete solvent set: {}", .0.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("; "))]
    IncompleteSolventSet(Vec<SetDefect>),

    #[error("placement verification failed: eigenvalue error {max_error:.3e} exceeds {tolerance:.1e}, achieved {}", fmt_spectrum(.achieved))]
    Placement { max_error: f64, tolerance: f64, achieved: Vec<C64> },

    #[error("partition/order mismatch: {0}")]
    Partition(String),

    #[error("closed loop is not stable: eigenvalue {re:.6}{im:+.6}i is not in the open left half plane", re = .0.re, im = .0.im)]
    Unstable(C64),

    #[error("perturbation destabilizes the closed loop: eigenvalue {re:.6}{im:+.6}i", re = .0.re, im = .0.im)]
    Destabilized(C64),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("{stage} stage: {source}")]
    Stage {
        stage: Stage,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn at(stage: Stage) -> impl FnOnce(Error) -> Error {
        move |e| Error::Stage { stage, source: Box::new(e) }
    }

    /// Stage tag of a staged error, if any.
    pub fn stage(&self) -> Option<Stage> {
        match self {
            Error::Stage { stage, .. } => Some(*stage),
            _ => None,
        }
    }

    /// The innermost error, with stage wrappers removed.
    pub fn root(&self) -> &Error {
        match self {
            Error::Stage { source, .. } => source.root(),
            e => e,
        }
    }
}

//! Functional principal component analysis: univariate (curves), tensor
//! power algorithm (images), and the multivariate combination.

mod fcptpa;
mod mfpca;
mod ufpca;

pub use fcptpa::{fcptpa_fit, FcptpaConfig, FcptpaModel};
pub use mfpca::{
    mfpca_fit, mfpca_inverse_transform, mfpca_transform, read_model, write_model, MfpcaModel,
    MfpcaOptions, UniBasis, MODEL_FORMAT, MODEL_VERSION,
};
pub use ufpca::{ufpca_fit, ufpca_scores, UfpcaModel, UfpcaOptions};

use serde::{Deserialize, Serialize};

use crate::error::{FdError, Result};

/// Number of components to keep: a proportion of explained variance (< 1)
/// or an explicit count (>= 1).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum NComp {
    Frac(f64),
    Count(usize),
}

impl NComp {
    /// Parse "0.99" as a proportion and "3" as a count.
    pub fn parse(text: &str) -> Result<NComp> {
        if let Ok(c) = text.parse::<usize>() {
            if c >= 1 {
                return Ok(NComp::Count(c));
            }
        }
        match text.parse::<f64>() {
            Ok(f) if f > 0.0 && f < 1.0 => Ok(NComp::Frac(f)),
            _ => Err(FdError::InvalidParameter(format!(
                "'{text}' is neither a proportion in (0,1) nor a count >= 1"
            ))),
        }
    }

    /// Minimal prefix of `eigenvalues` (positive, non-increasing) reaching
    /// the requested proportion, or the explicit count.
    pub fn resolve(&self, eigenvalues: &[f64]) -> Result<usize> {
        let total: f64 = eigenvalues.iter().sum();
        match *self {
            NComp::Count(c) => {
                if c == 0 || c > eigenvalues.len() {
                    Err(FdError::InvalidParameter(format!(
                        "{c} components requested, {} positive eigenvalues available",
                        eigenvalues.len()
                    )))
                } else {
                    Ok(c)
                }
            }
            NComp::Frac(q) => {
                if !(0.0 < q && q < 1.0) {
                    return Err(FdError::InvalidParameter(format!(
                        "variance proportion must lie in (0,1), got {q}"
                    )));
                }
                let mut acc = 0.0;
                for (j, l) in eigenvalues.iter().enumerate() {
                    acc += l;
                    if acc >= q * total {
                        return Ok(j + 1);
                    }
                }
                Ok(eigenvalues.len())
            }
        }
    }
}

/// How univariate scores are computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ScoreMethod {
    /// Trapezoid inner products of centered curves with the eigenfunctions.
    NumInt,
    /// Conditional-expectation best linear predictor using the fitted
    /// eigenstructure and noise variance on each observation's own grid.
    Pace,
}

impl ScoreMethod {
    pub fn parse(name: &str) -> Result<ScoreMethod> {
        match name {
            "numint" => Ok(ScoreMethod::NumInt),
            "pace" => Ok(ScoreMethod::Pace),
            other => Err(FdError::InvalidParameter(format!(
                "unknown score method '{other}' (numint|pace)"
            ))),
        }
    }
}

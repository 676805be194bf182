//! Eigenvalue decay patterns for Karhunen-Loeve simulation.

use serde::{Deserialize, Serialize};

use crate::error::{FdError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DecayKind {
    Linear,
    Exponential,
    Wiener,
}

impl DecayKind {
    pub fn parse(name: &str) -> Result<DecayKind> {
        match name {
            "linear" => Ok(DecayKind::Linear),
            "exponential" => Ok(DecayKind::Exponential),
            "wiener" => Ok(DecayKind::Wiener),
            other => Err(FdError::InvalidParameter(format!("unknown decay '{other}'"))),
        }
    }
}

/// A non-increasing, non-negative eigenvalue sequence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenDecay {
    values: Vec<f64>,
}

impl EigenDecay {
    /// User-supplied eigenvalues, validated.
    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(FdError::EmptyData("no eigenvalues".into()));
        }
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(FdError::InvalidParameter(
                "eigenvalues must be finite and non-negative".into(),
            ));
        }
        if values.windows(2).any(|w| w[0] < w[1]) {
            return Err(FdError::InvalidParameter(
                "eigenvalues must be non-increasing".into(),
            ));
        }
        Ok(EigenDecay { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        false // non-empty by construction
    }
}

/// The first `n` eigenvalues of a named decay:
/// linear (J-j+1)/J, exponential exp(-(j+1)/2), wiener 1/((j-1/2) pi)^2.
pub fn decay_values(kind: DecayKind, n: usize) -> Result<EigenDecay> {
    if n == 0 {
        return Err(FdError::InvalidParameter("need at least one eigenvalue".into()));
    }
    let values = (1..=n)
        .map(|j| match kind {
            DecayKind::Linear => (n - j + 1) as f64 / n as f64,
            DecayKind::Exponential => (-(j as f64 + 1.0) / 2.0).exp(),
            DecayKind::Wiener => {
                let f = (j as f64 - 0.5) * std::f64::consts::PI;
                1.0 / (f * f)
            }
        })
        .collect();
    EigenDecay::from_values(values).map_err(|e| {
        FdError::Numerical(format!("decay construction violated its own invariant: {e}"))
    })
}

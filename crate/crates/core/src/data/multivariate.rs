//! Multivariate functional data: an ordered list of univariate components.

use serde::{Deserialize, Serialize};

use super::dense::DenseFD;
use super::irregular::IrregularFD;
use super::summary::FdSummary;
use crate::error::{FdError, Result};

/// Either representation of a univariate functional data set.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum FunctionalData {
    Dense(DenseFD),
    Irregular(IrregularFD),
}

impl FunctionalData {
    pub fn n_obs(&self) -> usize {
        match self {
            FunctionalData::Dense(fd) => fd.n_obs(),
            FunctionalData::Irregular(fd) => fd.n_obs(),
        }
    }

    pub fn n_dim(&self) -> usize {
        match self {
            FunctionalData::Dense(fd) => fd.n_dim(),
            FunctionalData::Irregular(fd) => fd.n_dim(),
        }
    }

    pub fn summary(&self) -> FdSummary {
        match self {
            FunctionalData::Dense(fd) => fd.summary(),
            FunctionalData::Irregular(fd) => fd.summary(),
        }
    }

    pub fn subset(&self, lo: usize, hi: usize) -> Result<FunctionalData> {
        Ok(match self {
            FunctionalData::Dense(fd) => FunctionalData::Dense(fd.subset(lo, hi)?),
            FunctionalData::Irregular(fd) => FunctionalData::Irregular(fd.subset(lo, hi)?),
        })
    }

    pub fn select_obs(&self, idx: &[usize]) -> Result<FunctionalData> {
        Ok(match self {
            FunctionalData::Dense(fd) => FunctionalData::Dense(fd.select_obs(idx)?),
            FunctionalData::Irregular(fd) => FunctionalData::Irregular(fd.select_obs(idx)?),
        })
    }

    pub fn as_dense(&self) -> Option<&DenseFD> {
        match self {
            FunctionalData::Dense(fd) => Some(fd),
            FunctionalData::Irregular(_) => None,
        }
    }

    pub fn as_irregular(&self) -> Option<&IrregularFD> {
        match self {
            FunctionalData::Dense(_) => None,
            FunctionalData::Irregular(fd) => Some(fd),
        }
    }

    pub fn content_eq(&self, other: &FunctionalData) -> bool {
        match (self, other) {
            (FunctionalData::Dense(a), FunctionalData::Dense(b)) => a.content_eq(b),
            (FunctionalData::Irregular(a), FunctionalData::Irregular(b)) => a.content_eq(b),
            _ => false,
        }
    }
}

impl From<DenseFD> for FunctionalData {
    fn from(fd: DenseFD) -> Self {
        FunctionalData::Dense(fd)
    }
}

impl From<IrregularFD> for FunctionalData {
    fn from(fd: IrregularFD) -> Self {
        FunctionalData::Irregular(fd)
    }
}

/// An ordered list of `P >= 1` functional components observed on the same
/// individuals: every component has the same number of observations.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MultivariateFD {
    components: Vec<FunctionalData>,
}

impl MultivariateFD {
    pub fn new(components: Vec<FunctionalData>) -> Result<Self> {
        if components.is_empty() {
            return Err(FdError::EmptyData("no components".into()));
        }
        let n = components[0].n_obs();
        if let Some(bad) = components.iter().position(|c| c.n_obs() != n) {
            return Err(FdError::ShapeMismatch(format!(
                "component {bad} has {} observations, expected {n}",
                components[bad].n_obs()
            )));
        }
        Ok(MultivariateFD { components })
    }

    /// Number of components P.
    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        false // P >= 1 by construction
    }

    pub fn n_obs(&self) -> usize {
        self.components[0].n_obs()
    }

    pub fn component(&self, p: usize) -> &FunctionalData {
        &self.components[p]
    }

    pub fn components(&self) -> &[FunctionalData] {
        &self.components
    }

    pub fn iter(&self) -> std::slice::Iter<'_, FunctionalData> {
        self.components.iter()
    }

    /// Append a component, rejecting an observation-count mismatch.
    pub fn append(&mut self, component: FunctionalData) -> Result<()> {
        if component.n_obs() != self.n_obs() {
            return Err(FdError::ShapeMismatch(format!(
                "appended component has {} observations, expected {}",
                component.n_obs(),
                self.n_obs()
            )));
        }
        self.components.push(component);
        Ok(())
    }

    /// Append every component of `other`, preserving order.
    pub fn extend(&mut self, other: MultivariateFD) -> Result<()> {
        for c in other.components {
            self.append(c)?;
        }
        Ok(())
    }

    /// Remove and return the component at `p`; the list must stay non-empty.
    pub fn remove(&mut self, p: usize) -> Result<FunctionalData> {
        if p >= self.components.len() {
            return Err(FdError::IndexOutOfRange(format!(
                "component {p} out of 0..{}",
                self.components.len()
            )));
        }
        if self.components.len() == 1 {
            return Err(FdError::EmptyData(
                "removing the last component would leave an empty object".into(),
            ));
        }
        Ok(self.components.remove(p))
    }

    /// Per-component summaries; irregular components flag mean point counts.
    pub fn summary(&self) -> Vec<FdSummary> {
        self.components.iter().map(|c| c.summary()).collect()
    }

    /// Iterator over single-observation multivariate objects, in order.
    pub fn iterate_obs(&self) -> impl Iterator<Item = MultivariateFD> + '_ {
        (0..self.n_obs()).map(move |i| {
            let comps = self
                .components
                .iter()
                .map(|c| c.select_obs(&[i]).expect("index in range"))
                .collect();
            MultivariateFD::new(comps).expect("valid single observation")
        })
    }

    /// New object holding the observations listed in `idx` in every component.
    pub fn select_obs(&self, idx: &[usize]) -> Result<MultivariateFD> {
        let comps = self
            .components
            .iter()
            .map(|c| c.select_obs(idx))
            .collect::<Result<Vec<_>>>()?;
        MultivariateFD::new(comps)
    }

    pub fn content_eq(&self, other: &MultivariateFD) -> bool {
        self.components.len() == other.components.len()
            && self
                .components
                .iter()
                .zip(&other.components)
                .all(|(a, b)| a.content_eq(b))
    }
}

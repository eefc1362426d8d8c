use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One named parameter tensor inside the flat genome.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayoutEntry {
    pub name: String,
    pub offset: usize,
    pub shape: Vec<usize>,
}

impl LayoutEntry {
    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn range(&self) -> std::ops::Range<usize> {
        self.offset..self.offset + self.len()
    }
}

/// Ordered descriptor of every tensor in a genome. The RIS controller
/// segment comes first, followed by the BS fusion segment.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ParamLayout {
    pub entries: Vec<LayoutEntry>,
    /// Length of the shared RIS controller segment `W_ris`.
    pub ris_len: usize,
}

impl ParamLayout {
    pub fn len(&self) -> usize {
        self.entries.last().map_or(0, |e| e.offset + e.len())
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Appends a tensor and returns its position in the genome.
    pub(crate) fn push(
        &mut self,
        name: impl Into<String>,
        shape: &[usize],
    ) -> std::ops::Range<usize> {
        let entry = LayoutEntry {
            name: name.into(),
            offset: self.len(),
            shape: shape.to_vec(),
        };
        let r = entry.range();
        self.entries.push(entry);
        r
    }

    /// Marks the end of the RIS segment.
    pub(crate) fn close_ris_segment(&mut self) {
        self.ris_len = self.len();
    }

    pub fn get(&self, name: &str) -> Option<&LayoutEntry> {
        self.entries.iter().find(|e| e.name == name)
    }
}

/// Flat parameter vector `[W_ris | W_bs]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Genome {
    values: Vec<f64>,
}

impl Genome {
    pub fn new(values: Vec<f64>, layout: &ParamLayout) -> Result<Self> {
        if values.len() != layout.len() {
            return Err(Error::dim("genome", layout.len(), values.len()));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Validation {
                position: i,
                reason: "non-finite weight".into(),
            });
        }
        Ok(Self { values })
    }

    /// Offspring of checked parents; lengths and finiteness are inherited.
    pub(crate) fn from_values(values: Vec<f64>) -> Self {
        Self { values }
    }

    pub fn zeros(layout: &ParamLayout) -> Self {
        Self {
            values: vec![0.0; layout.len()],
        }
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.values
    }

    pub fn ris_segment<'a>(&'a self, layout: &ParamLayout) -> &'a [f64] {
        &self.values[..layout.ris_len]
    }

    pub fn bs_segment<'a>(&'a self, layout: &ParamLayout) -> &'a [f64] {
        &self.values[layout.ris_len..]
    }
}

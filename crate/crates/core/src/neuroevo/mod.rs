//! Evolved neural controllers for the narrowband broadcast setting: one
//! attention/convolution network per metasurface with shared weights, a BS
//! fusion network choosing DFT codewords, CoSyNE training and an exhaustive
//! block-search baseline.

mod arch;
mod bes;
mod controller;
mod evolve;
mod genome;
pub mod layers;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use arch::{Architecture, ArchitectureSpec};
pub use bes::{bes_baseline, bes_space_size, BesResult, DEFAULT_SEARCH_CAP};
pub use controller::{block_of, Controller, Decision, SurfaceOutput};
pub use evolve::{
    cosyne_step, episode_seed, evaluate_genome, random_genome, train, Checkpoint, CosyneParams,
    EpisodeSet, GenerationStats, Population, TrainResult,
};
pub use genome::{Genome, LayoutEntry, ParamLayout};
pub use layers::{attention_layer, stack_real, StackAxis};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NeuroevoConfig {
    pub architecture: Architecture,
    /// Population size `L_pop`.
    pub pop_size: usize,
    /// Generations `N_gen`.
    pub generations: usize,
    /// Episodes `N_EP` per fitness evaluation.
    pub episodes: usize,
    /// Draws `T` per episode.
    pub horizon: usize,
    pub mutation_prob: f64,
    pub mutation_variance: f64,
    pub elite_fraction: f64,
    /// Standard deviation of the initial weights.
    pub init_std: f64,
    /// Kernels per convolution layer; the last must be 1.
    pub conv_channels: Vec<usize>,
    pub conv_kernel: usize,
    /// Defaults to `4 N_ris`.
    pub ris_hidden: Option<usize>,
    /// Defaults to `2 card(V)`.
    pub precoder_hidden: Option<usize>,
    /// Defaults to the fusion input width.
    pub fusion_hidden: Option<usize>,
    /// Hidden width of the feed-forward trunk.
    pub ff_hidden: usize,
    /// Draw codewords from the fusion softmax during training.
    pub sample_precoders: bool,
    /// Held-out channel draws for baseline comparisons.
    pub held_out: usize,
    /// Random genomes or decisions drawn for baseline comparisons.
    pub random_samples: usize,
    /// Blocks per surface for the exhaustive search.
    pub n_blocks: usize,
    /// Largest search space the exhaustive baseline will enumerate.
    pub search_cap: u64,
}

impl Default for NeuroevoConfig {
    fn default() -> Self {
        Self {
            architecture: Architecture::Mbacnn,
            pop_size: 100,
            generations: 25,
            episodes: 10,
            horizon: 5,
            mutation_prob: 0.3,
            mutation_variance: 0.2,
            elite_fraction: 0.25,
            init_std: 0.5,
            conv_channels: vec![8, 8, 1],
            conv_kernel: 3,
            ris_hidden: None,
            precoder_hidden: None,
            fusion_hidden: None,
            ff_hidden: 64,
            sample_precoders: false,
            held_out: 200,
            random_samples: 200,
            n_blocks: 4,
            search_cap: DEFAULT_SEARCH_CAP as u64,
        }
    }
}

impl NeuroevoConfig {
    pub fn validate(&self) -> Result<()> {
        let f = "neuroevo";
        if self.pop_size < 2 {
            return Err(Error::config(format!("{f}.pop_size"), "must be at least 2"));
        }
        for (name, v) in [
            ("generations", self.generations),
            ("episodes", self.episodes),
            ("horizon", self.horizon),
            ("held_out", self.held_out),
            ("random_samples", self.random_samples),
            ("n_blocks", self.n_blocks),
        ] {
            if v == 0 {
                return Err(Error::config(format!("{f}.{name}"), "must be positive"));
            }
        }
        if !(0.0..=1.0).contains(&self.mutation_prob) {
            return Err(Error::config(
                format!("{f}.mutation_prob"),
                "must lie in [0, 1]",
            ));
        }
        if !(self.mutation_variance.is_finite() && self.mutation_variance >= 0.0) {
            return Err(Error::config(
                format!("{f}.mutation_variance"),
                "must be non-negative",
            ));
        }
        if !(self.elite_fraction > 0.0 && self.elite_fraction <= 1.0) {
            return Err(Error::config(
                format!("{f}.elite_fraction"),
                "must lie in (0, 1]",
            ));
        }
        if !(self.init_std.is_finite() && self.init_std >= 0.0) {
            return Err(Error::config(
                format!("{f}.init_std"),
                "must be non-negative",
            ));
        }
        if self.conv_channels.is_empty() || self.conv_channels.contains(&0) {
            return Err(Error::config(
                format!("{f}.conv_channels"),
                "needs at least one layer of positive width",
            ));
        }
        if self.conv_channels.last() != Some(&1) {
            return Err(Error::config(
                format!("{f}.conv_channels"),
                "last layer must have exactly one kernel",
            ));
        }
        if self.conv_kernel.is_multiple_of(2) {
            return Err(Error::config(
                format!("{f}.conv_kernel"),
                "same padding needs an odd kernel",
            ));
        }
        Ok(())
    }
}

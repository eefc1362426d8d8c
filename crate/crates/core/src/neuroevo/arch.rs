use std::ops::Range;

use serde::{Deserialize, Serialize};

use super::genome::ParamLayout;
use super::NeuroevoConfig;
use crate::error::{Error, Result};
use crate::scenario::BroadcastConfig;

/// Network trunk feeding the RIS and precoder heads.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Architecture {
    /// Attention branches, merge, convolutions.
    #[default]
    Mbacnn,
    /// One fully connected hidden layer over the flattened inputs.
    Feedforward,
}

/// Every dimension that determines the genome layout.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArchitectureSpec {
    pub kind: Architecture,
    pub n_tx: usize,
    pub n_ue: usize,
    pub n_ris: usize,
    pub n_surfaces: usize,
    pub n_band: usize,
    pub phase_bits: u32,
    pub codebook_size: usize,
    pub direct_blocked: bool,
    pub conv_channels: Vec<usize>,
    pub conv_kernel: usize,
    pub ris_hidden: usize,
    pub precoder_hidden: usize,
    pub fusion_hidden: usize,
    pub ff_hidden: usize,
}

impl ArchitectureSpec {
    /// Controller dimensions for a broadcast setting with a DFT codebook of
    /// size `n_tx`.
    pub fn new(bc: &BroadcastConfig, ne: &NeuroevoConfig) -> Result<Self> {
        let codebook_size = bc.n_tx;
        let fusion_in = bc.n_ris_surfaces() * bc.n_ue * codebook_size;
        let spec = Self {
            kind: ne.architecture,
            n_tx: bc.n_tx,
            n_ue: bc.n_ue,
            n_ris: bc.n_ris,
            n_surfaces: bc.n_ris_surfaces(),
            n_band: bc.n_band,
            phase_bits: bc.phase_bits,
            codebook_size,
            direct_blocked: bc.direct_blocked(),
            conv_channels: ne.conv_channels.clone(),
            conv_kernel: ne.conv_kernel,
            ris_hidden: ne.ris_hidden.unwrap_or(4 * bc.n_ris),
            precoder_hidden: ne.precoder_hidden.unwrap_or(2 * codebook_size),
            fusion_hidden: ne.fusion_hidden.unwrap_or(fusion_in),
            ff_hidden: ne.ff_hidden,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.conv_channels.last() != Some(&1) {
            return Err(Error::config(
                "neuroevo.conv_channels",
                "last layer must have exactly one kernel",
            ));
        }
        if self.conv_kernel.is_multiple_of(2) {
            return Err(Error::config(
                "neuroevo.conv_kernel",
                "same padding needs an odd kernel",
            ));
        }
        for (name, v) in [
            ("neuroevo.ris_hidden", self.ris_hidden),
            ("neuroevo.precoder_hidden", self.precoder_hidden),
            ("neuroevo.fusion_hidden", self.fusion_hidden),
            ("neuroevo.ff_hidden", self.ff_hidden),
        ] {
            if v == 0 {
                return Err(Error::config(name, "must be positive"));
            }
        }
        Ok(())
    }

    pub fn n_states(&self) -> usize {
        1 << self.phase_bits
    }

    /// Columns of the merged attention map: `2 N_tx + 2 N_ue`.
    pub fn merged_cols(&self) -> usize {
        2 * self.n_tx + 2 * self.n_ue
    }

    /// Size of the feature vector entering the heads.
    pub fn feature_len(&self) -> usize {
        match self.kind {
            Architecture::Mbacnn => self.n_ris * self.merged_cols(),
            Architecture::Feedforward => self.ff_hidden,
        }
    }

    /// Length of the flattened network input for the feed-forward trunk.
    pub fn flat_input_len(&self) -> usize {
        let direct = if self.direct_blocked {
            0
        } else {
            2 * self.n_tx * self.n_ue
        };
        direct + 2 * self.n_ris * self.n_tx + 2 * self.n_ris * self.n_ue
    }

    /// Length of the diagonal part of the RIS head output.
    pub fn diag_outputs(&self) -> usize {
        if self.phase_bits == 1 {
            self.n_ris
        } else {
            self.n_ris * self.n_states()
        }
    }

    /// RIS head output: diagonal states followed by `2 N_B` switch slots per
    /// element, `(2 N_B + 1) N_ris` for one-bit phases.
    pub fn ris_head_len(&self) -> usize {
        self.diag_outputs() + 2 * self.n_band * self.n_ris
    }
}

pub(crate) type Dense = (Range<usize>, Range<usize>);

/// Genome positions of every layer.
#[derive(Debug, Clone)]
pub(crate) struct Segments {
    pub attn_direct: Option<[Range<usize>; 3]>,
    pub attn_h1: [Range<usize>; 3],
    pub attn_h2: [Range<usize>; 3],
    pub project_direct: Option<Dense>,
    pub conv: Vec<Dense>,
    pub trunk: Option<Dense>,
    pub ris_head: [Dense; 2],
    pub precoder_heads: Vec<[Dense; 2]>,
    pub fusion: [Dense; 2],
}

fn dense(layout: &mut ParamLayout, name: &str, n_in: usize, n_out: usize) -> Dense {
    (
        layout.push(format!("{name}.weight"), &[n_out, n_in]),
        layout.push(format!("{name}.bias"), &[n_out]),
    )
}

fn attention(layout: &mut ParamLayout, name: &str, n: usize) -> [Range<usize>; 3] {
    ["wq", "wk", "wv"].map(|w| layout.push(format!("{name}.{w}"), &[n, n]))
}

pub(crate) fn build_layout(spec: &ArchitectureSpec) -> (ParamLayout, Segments) {
    let mut l = ParamLayout::default();
    let (mut attn_direct, mut project_direct, mut conv, mut trunk) = (None, None, Vec::new(), None);
    let (attn_h1, attn_h2);
    match spec.kind {
        Architecture::Mbacnn => {
            if !spec.direct_blocked {
                attn_direct = Some(attention(&mut l, "ris.attn_direct", spec.n_tx));
            }
            attn_h1 = attention(&mut l, "ris.attn_bs_ris", spec.n_ris);
            attn_h2 = attention(&mut l, "ris.attn_ris_ue", spec.n_ris);
            if !spec.direct_blocked {
                project_direct = Some(dense(
                    &mut l,
                    "ris.project_direct",
                    2 * spec.n_tx * spec.n_ue,
                    spec.n_ris * spec.merged_cols(),
                ));
            }
            let mut c_in = 1;
            for (i, &c_out) in spec.conv_channels.iter().enumerate() {
                let k = spec.conv_kernel;
                conv.push((
                    l.push(format!("ris.conv{i}.weight"), &[c_out, c_in, k, k]),
                    l.push(format!("ris.conv{i}.bias"), &[c_out]),
                ));
                c_in = c_out;
            }
        }
        Architecture::Feedforward => {
            attn_h1 = [0..0, 0..0, 0..0];
            attn_h2 = [0..0, 0..0, 0..0];
            trunk = Some(dense(
                &mut l,
                "ris.trunk",
                spec.flat_input_len(),
                spec.ff_hidden,
            ));
        }
    }
    let feat = spec.feature_len();
    let ris_head = [
        dense(&mut l, "ris.head.hidden", feat, spec.ris_hidden),
        dense(&mut l, "ris.head.out", spec.ris_hidden, spec.ris_head_len()),
    ];
    let precoder_heads = (0..spec.n_ue)
        .map(|n| {
            [
                dense(
                    &mut l,
                    &format!("ris.precoder{n}.hidden"),
                    feat,
                    spec.precoder_hidden,
                ),
                dense(
                    &mut l,
                    &format!("ris.precoder{n}.out"),
                    spec.precoder_hidden,
                    spec.codebook_size,
                ),
            ]
        })
        .collect();
    l.close_ris_segment();
    let fusion_in = spec.n_surfaces * spec.n_ue * spec.codebook_size;
    let fusion = [
        dense(&mut l, "bs.fusion.hidden", fusion_in, spec.fusion_hidden),
        dense(
            &mut l,
            "bs.fusion.out",
            spec.fusion_hidden,
            spec.n_ue * spec.codebook_size,
        ),
    ];
    (
        l,
        Segments {
            attn_direct,
            attn_h1,
            attn_h2,
            project_direct,
            conv,
            trunk,
            ris_head,
            precoder_heads,
            fusion,
        },
    )
}

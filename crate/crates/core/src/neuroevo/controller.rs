use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;

use super::arch::{build_layout, Architecture, ArchitectureSpec, Dense, Segments};
use super::genome::{Genome, ParamLayout};
use super::layers::{
    argmax, attention_layer, conv2d_same, dense, layer_norm, relu_inplace, rms_normalize, softmax,
    stack_real, StackAxis,
};
use super::NeuroevoConfig;
use crate::channel::{CVector, NarrowbandChannelSet};
use crate::error::{Error, Result};
use crate::metrics::narrowband_rates;
use crate::ris::{
    band_positions, banded_phi, dft_codebook, phase_set, BandedRisConfig, PrecoderCodebook,
};
use crate::scenario::BroadcastConfig;

/// Raw head outputs of one surface controller.
#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceOutput {
    pub ris_raw: Vec<f64>,
    /// `[ue][codeword]` precoder preferences.
    pub logits: Vec<Vec<f64>>,
}

/// Configuration of every surface plus the precoder choice.
#[derive(Debug, Clone, PartialEq)]
pub struct Decision {
    pub ris: Vec<BandedRisConfig>,
    /// Index sets proposed by the surface controllers, `[surface][ue]`.
    pub candidates: Vec<Vec<usize>>,
    /// Final codeword index of each UE, 0-based.
    pub indices: Vec<usize>,
}

/// RIS controllers with one shared weight segment plus the BS fusion
/// network, evaluated over a flat genome.
#[derive(Debug, Clone)]
pub struct Controller {
    spec: ArchitectureSpec,
    layout: ParamLayout,
    segs: Segments,
    codebook: PrecoderCodebook,
    phases: Vec<Complex64>,
    noise_variance: f64,
    power: f64,
}

fn apply_dense(w: &[f64], seg: &Dense, x: &[f64]) -> Vec<f64> {
    dense(&w[seg.0.clone()], &w[seg.1.clone()], x)
}

fn mat(w: &[f64], r: &std::ops::Range<usize>, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_row_slice(rows, cols, &w[r.clone()])
}

fn flatten_rows(m: &DMatrix<f64>) -> Vec<f64> {
    m.transpose().as_slice().to_vec()
}

fn mlp(w: &[f64], layers: &[Dense; 2], x: &[f64]) -> Vec<f64> {
    let mut h = apply_dense(w, &layers[0], x);
    relu_inplace(&mut h);
    apply_dense(w, &layers[1], &h)
}

impl Controller {
    pub fn new(bc: &BroadcastConfig, ne: &NeuroevoConfig) -> Result<Self> {
        bc.validate()?;
        let spec = ArchitectureSpec::new(bc, ne)?;
        let (layout, segs) = build_layout(&spec);
        Ok(Self {
            codebook: dft_codebook(spec.n_tx),
            phases: phase_set(spec.phase_bits),
            spec,
            layout,
            segs,
            noise_variance: bc.noise_variance_w,
            power: bc.tx_power_w,
        })
    }

    pub fn spec(&self) -> &ArchitectureSpec {
        &self.spec
    }

    pub fn layout(&self) -> &ParamLayout {
        &self.layout
    }

    pub fn codebook(&self) -> &PrecoderCodebook {
        &self.codebook
    }

    pub fn phases(&self) -> &[Complex64] {
        &self.phases
    }

    pub fn noise_variance(&self) -> f64 {
        self.noise_variance
    }

    /// Per-stream transmit power `P`.
    pub fn power(&self) -> f64 {
        self.power
    }

    pub fn param_count(&self) -> usize {
        self.layout.len()
    }

    fn check_weights(&self, w: &[f64]) -> Result<()> {
        if w.len() != self.layout.len() {
            return Err(Error::dim("genome", self.layout.len(), w.len()));
        }
        Ok(())
    }

    fn check_channels(&self, ch: &NarrowbandChannelSet) -> Result<()> {
        let s = &self.spec;
        if ch.h_direct.shape() != (s.n_tx, s.n_ue) {
            return Err(Error::dim(
                "controller input: H_D",
                format!("{}x{}", s.n_tx, s.n_ue),
                format!("{:?}", ch.h_direct.shape()),
            ));
        }
        if ch.n_surfaces() != s.n_surfaces {
            return Err(Error::dim(
                "controller input: surfaces",
                s.n_surfaces,
                ch.n_surfaces(),
            ));
        }
        for (h1, h2) in ch.h_bs_ris.iter().zip(&ch.h_ris_ue) {
            if h1.shape() != (s.n_tx, s.n_ris) || h2.shape() != (s.n_ris, s.n_ue) {
                return Err(Error::dim(
                    "controller input: surface links",
                    format!("{}x{} and {}x{}", s.n_tx, s.n_ris, s.n_ris, s.n_ue),
                    format!("{:?} and {:?}", h1.shape(), h2.shape()),
                ));
            }
        }
        Ok(())
    }

    /// Real inputs of surface `k`: `H_D` as `N_tx x 2N_ue`, the BS-RIS link
    /// as `N_ris x 2N_tx` and the RIS-UE link as `N_ris x 2N_ue`, each scaled
    /// to unit RMS.
    pub fn inputs(
        &self,
        ch: &NarrowbandChannelSet,
        k: usize,
    ) -> (DMatrix<f64>, DMatrix<f64>, DMatrix<f64>) {
        (
            rms_normalize(stack_real(&ch.h_direct, StackAxis::Cols)),
            rms_normalize(stack_real(&ch.h_bs_ris[k].transpose(), StackAxis::Cols)),
            rms_normalize(stack_real(&ch.h_ris_ue[k], StackAxis::Cols)),
        )
    }

    fn features(&self, w: &[f64], ch: &NarrowbandChannelSet, k: usize) -> Result<Vec<f64>> {
        let s = &self.spec;
        let (hd, h1, h2) = self.inputs(ch, k);
        let d = (2 * s.n_tx) as f64;
        match s.kind {
            Architecture::Mbacnn => {
                let att = |x: &DMatrix<f64>, r: &[std::ops::Range<usize>; 3], n: usize| {
                    attention_layer(
                        x,
                        &mat(w, &r[0], n, n),
                        &mat(w, &r[1], n, n),
                        &mat(w, &r[2], n, n),
                        d,
                    )
                };
                let a1 = att(&h1, &self.segs.attn_h1, s.n_ris)?;
                let a2 = att(&h2, &self.segs.attn_h2, s.n_ris)?;
                let cols = s.merged_cols();
                let mut merged = DMatrix::zeros(s.n_ris, cols);
                merged.columns_mut(0, a1.ncols()).copy_from(&a1);
                merged.columns_mut(a1.ncols(), a2.ncols()).copy_from(&a2);
                let mut total = layer_norm(&merged);
                if let (Some(ad), Some(proj)) = (&self.segs.attn_direct, &self.segs.project_direct)
                {
                    let a_direct = att(&hd, ad, s.n_tx)?;
                    let a0 = apply_dense(w, proj, &flatten_rows(&a_direct));
                    total += layer_norm(&DMatrix::from_row_slice(s.n_ris, cols, &a0));
                }
                let mut maps = vec![total];
                let last = self.segs.conv.len().saturating_sub(1);
                for (i, (wr, br)) in self.segs.conv.iter().enumerate() {
                    maps = conv2d_same(&maps, &w[wr.clone()], &w[br.clone()], s.conv_kernel);
                    if i < last {
                        maps.iter_mut().for_each(|m| m.apply(|v| *v = v.max(0.0)));
                    }
                }
                Ok(flatten_rows(&maps[0]))
            }
            Architecture::Feedforward => {
                let mut x = Vec::with_capacity(s.flat_input_len());
                if !s.direct_blocked {
                    x.extend(flatten_rows(&hd));
                }
                x.extend(flatten_rows(&h1));
                x.extend(flatten_rows(&h2));
                let trunk = self.segs.trunk.as_ref().expect("feed-forward trunk");
                let mut h = apply_dense(w, trunk, &x);
                relu_inplace(&mut h);
                Ok(h)
            }
        }
    }

    /// Head outputs of the controller of surface `k`. Every surface reads
    /// the same RIS segment of the genome.
    pub fn surface_forward(
        &self,
        genome: &[f64],
        ch: &NarrowbandChannelSet,
        k: usize,
    ) -> Result<SurfaceOutput> {
        self.check_weights(genome)?;
        self.check_channels(ch)?;
        if k >= self.spec.n_surfaces {
            return Err(Error::dim(
                "controller surface index",
                self.spec.n_surfaces,
                k,
            ));
        }
        let w = &genome[..self.layout.ris_len];
        let feat = self.features(w, ch, k)?;
        let ris_raw = mlp(w, &self.segs.ris_head, &feat);
        let logits = self
            .segs
            .precoder_heads
            .iter()
            .map(|h| mlp(w, h, &feat))
            .collect();
        Ok(SurfaceOutput { ris_raw, logits })
    }

    /// Discrete configuration from the RIS head. One-bit phases take state 0
    /// (`+1`) when `tanh >= 0`; more bits take the argmax of each element's
    /// logits. A switch is ON when its `tanh` is positive.
    pub fn decode_ris(&self, raw: &[f64]) -> BandedRisConfig {
        let s = &self.spec;
        let diag_states = if s.phase_bits == 1 {
            raw[..s.n_ris]
                .iter()
                .map(|v| if v.tanh() >= 0.0 { 0 } else { 1 })
                .collect()
        } else {
            raw[..s.diag_outputs()]
                .chunks_exact(s.n_states())
                .map(argmax)
                .collect()
        };
        let slots = &raw[s.diag_outputs()..];
        let nb = s.n_band as isize;
        let mut band_switches = Vec::new();
        for i in 0..s.n_ris {
            let offsets = (-nb..0).chain(1..=nb);
            for (slot, d) in offsets.enumerate() {
                let j = i as isize + d;
                if j >= 0 && j < s.n_ris as isize {
                    band_switches.push(slots[i * 2 * s.n_band + slot].tanh() > 0.0);
                }
            }
        }
        debug_assert_eq!(band_switches.len(), band_positions(s.n_ris, s.n_band).len());
        BandedRisConfig {
            n_band: s.n_band,
            diag_states,
            band_switches,
        }
    }

    /// Per-surface decision: banded configuration plus the preferred
    /// codeword of each UE.
    pub fn mbacnn_forward(
        &self,
        genome: &[f64],
        ch: &NarrowbandChannelSet,
        k: usize,
    ) -> Result<(BandedRisConfig, Vec<usize>)> {
        let out = self.surface_forward(genome, ch, k)?;
        Ok((
            self.decode_ris(&out.ris_raw),
            out.logits.iter().map(|l| argmax(l)).collect(),
        ))
    }

    /// Logits of the fusion network over the one-hot encoded candidate
    /// index sets, `[ue][codeword]`.
    pub fn fusion_logits(
        &self,
        genome: &[f64],
        candidates: &[Vec<usize>],
    ) -> Result<Vec<Vec<f64>>> {
        self.check_weights(genome)?;
        let s = &self.spec;
        if candidates.len() != s.n_surfaces {
            return Err(Error::dim("fusion input", s.n_surfaces, candidates.len()));
        }
        let v = s.codebook_size;
        let mut x = vec![0.0; s.n_surfaces * s.n_ue * v];
        for (k, set) in candidates.iter().enumerate() {
            if set.len() != s.n_ue {
                return Err(Error::dim("fusion input index set", s.n_ue, set.len()));
            }
            for (n, &idx) in set.iter().enumerate() {
                if idx >= v {
                    return Err(Error::Validation {
                        position: n,
                        reason: format!("codeword index {idx} out of range for {v} codewords"),
                    });
                }
                x[(k * s.n_ue + n) * v + idx] = 1.0;
            }
        }
        let out = mlp(genome, &self.segs.fusion, &x);
        Ok(out.chunks_exact(v).map(|c| c.to_vec()).collect())
    }

    /// Final codeword index of every UE.
    pub fn fusion_forward(&self, genome: &[f64], candidates: &[Vec<usize>]) -> Result<Vec<usize>> {
        Ok(self
            .fusion_logits(genome, candidates)?
            .iter()
            .map(|l| argmax(l))
            .collect())
    }

    fn decide_inner<R: Rng + ?Sized>(
        &self,
        genome: &[f64],
        ch: &NarrowbandChannelSet,
        sampler: Option<&mut R>,
    ) -> Result<Decision> {
        let mut ris = Vec::with_capacity(self.spec.n_surfaces);
        let mut candidates = Vec::with_capacity(self.spec.n_surfaces);
        for k in 0..self.spec.n_surfaces {
            let (cfg, idx) = self.mbacnn_forward(genome, ch, k)?;
            ris.push(cfg);
            candidates.push(idx);
        }
        let logits = self.fusion_logits(genome, &candidates)?;
        let indices = match sampler {
            None => logits.iter().map(|l| argmax(l)).collect(),
            Some(rng) => logits
                .iter()
                .map(|l| {
                    let p = softmax(l);
                    let u: f64 = rng.random();
                    let mut acc = 0.0;
                    p.iter()
                        .position(|&pi| {
                            acc += pi;
                            u < acc
                        })
                        .unwrap_or(p.len() - 1)
                })
                .collect(),
        };
        Ok(Decision {
            ris,
            candidates,
            indices,
        })
    }

    /// Deterministic decision: argmax everywhere, lowest index on ties.
    pub fn decide(&self, genome: &Genome, ch: &NarrowbandChannelSet) -> Result<Decision> {
        self.decide_inner::<crate::rng::Stream>(genome.as_slice(), ch, None)
    }

    /// Decision with the final codewords sampled from the fusion softmax.
    pub fn decide_sampled<R: Rng + ?Sized>(
        &self,
        genome: &Genome,
        ch: &NarrowbandChannelSet,
        rng: &mut R,
    ) -> Result<Decision> {
        self.decide_inner(genome.as_slice(), ch, Some(rng))
    }

    /// Decision restricted to diagonal one-bit surfaces whose elements are
    /// split into `n_blk` contiguous blocks sharing one state: a block takes
    /// `+1` when the summed `tanh` of its elements is non-negative.
    pub fn decide_blocked(
        &self,
        genome: &Genome,
        ch: &NarrowbandChannelSet,
        n_blk: usize,
    ) -> Result<Decision> {
        check_blocked(&self.spec, n_blk)?;
        let w = genome.as_slice();
        let mut ris = Vec::with_capacity(self.spec.n_surfaces);
        let mut candidates = Vec::with_capacity(self.spec.n_surfaces);
        for k in 0..self.spec.n_surfaces {
            let out = self.surface_forward(w, ch, k)?;
            let mut sums = vec![0.0; n_blk];
            for (i, v) in out.ris_raw[..self.spec.n_ris].iter().enumerate() {
                sums[block_of(i, self.spec.n_ris, n_blk)] += v.tanh();
            }
            let states: Vec<usize> = sums.iter().map(|&s| if s >= 0.0 { 0 } else { 1 }).collect();
            ris.push(BandedRisConfig::diagonal(
                (0..self.spec.n_ris)
                    .map(|i| states[block_of(i, self.spec.n_ris, n_blk)])
                    .collect(),
            ));
            candidates.push(out.logits.iter().map(|l| argmax(l)).collect());
        }
        let indices = self.fusion_forward(w, &candidates)?;
        Ok(Decision {
            ris,
            candidates,
            indices,
        })
    }

    /// Uniformly random feasible configuration and codewords.
    pub fn random_decision<R: Rng + ?Sized>(&self, rng: &mut R) -> Decision {
        let s = &self.spec;
        let n_sw = band_positions(s.n_ris, s.n_band).len();
        let ris = (0..s.n_surfaces)
            .map(|_| BandedRisConfig {
                n_band: s.n_band,
                diag_states: (0..s.n_ris)
                    .map(|_| rng.random_range(0..s.n_states()))
                    .collect(),
                band_switches: (0..n_sw).map(|_| rng.random::<bool>()).collect(),
            })
            .collect();
        let indices: Vec<usize> = (0..s.n_ue)
            .map(|_| rng.random_range(0..s.codebook_size))
            .collect();
        Decision {
            ris,
            candidates: vec![indices.clone(); s.n_surfaces],
            indices,
        }
    }

    /// Sum rate of a decision on one channel draw.
    pub fn rate(&self, ch: &NarrowbandChannelSet, decision: &Decision) -> Result<f64> {
        let phis = decision
            .ris
            .iter()
            .map(|c| banded_phi(c, &self.phases))
            .collect::<Result<Vec<_>>>()?;
        let m = ch.effective(&phis)?;
        let v: Vec<CVector> = decision
            .indices
            .iter()
            .map(|&i| {
                self.codebook
                    .codewords
                    .get(i)
                    .cloned()
                    .ok_or_else(|| Error::Validation {
                        position: i,
                        reason: "codeword index out of range".into(),
                    })
            })
            .collect::<Result<_>>()?;
        Ok(narrowband_rates(&m, &v, self.noise_variance, self.power)
            .iter()
            .sum())
    }
}

pub(crate) fn check_blocked(spec: &ArchitectureSpec, n_blk: usize) -> Result<()> {
    if spec.phase_bits != 1 || spec.n_band != 0 {
        return Err(Error::config(
            "broadcast",
            "block search needs diagonal surfaces with one-bit phases",
        ));
    }
    if n_blk == 0 || n_blk > spec.n_ris {
        return Err(Error::config("neuroevo.n_blocks", "must lie in 1..=n_ris"));
    }
    Ok(())
}

/// Block of element `i` when `n` elements are split into `n_blk`
/// contiguous, near-equal blocks.
pub fn block_of(i: usize, n: usize, n_blk: usize) -> usize {
    i * n_blk / n
}

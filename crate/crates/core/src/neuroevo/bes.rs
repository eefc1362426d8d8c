//! Exhaustive search over block-constant one-bit diagonal surfaces and
//! codeword assignments.

use num_complex::Complex64;

use super::controller::{block_of, check_blocked, Controller, Decision};
use crate::channel::{CRow, NarrowbandChannelSet};
use crate::error::{Error, Result};
use crate::ris::BandedRisConfig;

/// Default refusal threshold on the number of enumerated candidates.
pub const DEFAULT_SEARCH_CAP: u128 = 1 << 22;

/// `2^(N_blk K) card(V)^N_ue`, saturating.
pub fn bes_space_size(n_surfaces: usize, n_blk: usize, codebook_size: usize, n_ue: usize) -> u128 {
    let bits = (n_blk * n_surfaces) as u32;
    let configs = if bits >= 128 {
        u128::MAX
    } else {
        1u128 << bits
    };
    (0..n_ue).fold(configs, |acc, _| acc.saturating_mul(codebook_size as u128))
}

#[derive(Debug, Clone, PartialEq)]
pub struct BesResult {
    pub decision: Decision,
    /// `[surface][block]`, 0 for `+1` and 1 for `-1`.
    pub block_states: Vec<Vec<usize>>,
    pub rate: f64,
    pub candidates_checked: u128,
}

/// Best block pattern and codeword assignment on one channel draw. The
/// first maximiser in enumeration order wins ties.
pub fn bes_baseline(
    ctrl: &Controller,
    ch: &NarrowbandChannelSet,
    n_blk: usize,
    cap: u128,
) -> Result<BesResult> {
    let spec = ctrl.spec();
    check_blocked(spec, n_blk)?;
    let (k_s, n_ue, n_ris, v) = (spec.n_surfaces, spec.n_ue, spec.n_ris, spec.codebook_size);
    let size = bes_space_size(k_s, n_blk, v, n_ue);
    if size > cap {
        return Err(Error::SearchSpace { size, cap });
    }
    if ch.n_surfaces() != k_s || ch.n_ue() != n_ue {
        return Err(Error::dim(
            "block search channels",
            format!("{k_s} surfaces, {n_ue} UEs"),
            format!("{} surfaces, {} UEs", ch.n_surfaces(), ch.n_ue()),
        ));
    }

    // Row contributed to UE n by block b of surface k at state +1.
    let mut block_rows = vec![vec![vec![CRow::zeros(spec.n_tx); n_blk]; k_s]; n_ue];
    for n in 0..n_ue {
        for k in 0..k_s {
            let h1 = &ch.h_bs_ris[k];
            let h2 = &ch.h_ris_ue[k];
            for i in 0..n_ris {
                let c = h2[(i, n)].conj();
                let row = &mut block_rows[n][k][block_of(i, n_ris, n_blk)];
                for t in 0..spec.n_tx {
                    row[t] += c * h1[(t, i)].conj();
                }
            }
        }
    }
    let noise = ctrl.noise_variance() / ctrl.power();
    let codewords = &ctrl.codebook().codewords;
    let n_bits = k_s * n_blk;
    let mut best: Option<(f64, u64, Vec<usize>)> = None;
    let mut checked = 0u128;
    let mut amp = vec![vec![Complex64::new(0.0, 0.0); v]; n_ue];
    for pattern in 0u64..(1u64 << n_bits) {
        for n in 0..n_ue {
            let mut m = ch.h_direct.column(n).adjoint();
            for k in 0..k_s {
                for b in 0..n_blk {
                    let sign = if pattern >> (k * n_blk + b) & 1 == 0 {
                        1.0
                    } else {
                        -1.0
                    };
                    m += &block_rows[n][k][b] * Complex64::from(sign);
                }
            }
            for (j, cw) in codewords.iter().enumerate() {
                amp[n][j] = (&m * cw)[(0, 0)];
            }
        }
        let mut idx = vec![0usize; n_ue];
        loop {
            checked += 1;
            let rate: f64 = (0..n_ue)
                .map(|n| {
                    let s = amp[n][idx[n]].norm_sqr();
                    let i: f64 = (0..n_ue)
                        .filter(|&j| j != n)
                        .map(|j| amp[n][idx[j]].norm_sqr())
                        .sum();
                    (1.0 + s / (i + noise)).log2()
                })
                .sum();
            if best.as_ref().is_none_or(|(r, _, _)| rate > *r) {
                best = Some((rate, pattern, idx.clone()));
            }
            // Odometer over codeword tuples.
            let mut pos = 0;
            while pos < n_ue {
                idx[pos] += 1;
                if idx[pos] < v {
                    break;
                }
                idx[pos] = 0;
                pos += 1;
            }
            if pos == n_ue {
                break;
            }
        }
    }
    let (rate, pattern, indices) = best.expect("search space is non-empty");
    let block_states: Vec<Vec<usize>> = (0..k_s)
        .map(|k| {
            (0..n_blk)
                .map(|b| (pattern >> (k * n_blk + b) & 1) as usize)
                .collect()
        })
        .collect();
    let ris = block_states
        .iter()
        .map(|st| {
            BandedRisConfig::diagonal((0..n_ris).map(|i| st[block_of(i, n_ris, n_blk)]).collect())
        })
        .collect();
    Ok(BesResult {
        decision: Decision {
            ris,
            candidates: vec![indices.clone(); k_s],
            indices,
        },
        block_states,
        rate,
        candidates_checked: checked,
    })
}

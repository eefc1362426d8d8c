//! Achievable rates, SINR and Monte-Carlo aggregation.

use serde::Serialize;

use crate::channel::{composite_column, CRow, CVector};
use crate::error::{Error, Result};
use crate::par::Exec;
use crate::ris::{phase_profile, CapacitanceVector, SwitchMatrix};
use crate::rng;
use crate::scenario::WidebandScenario;

/// Precoders indexed `[ue][subcarrier]`; UE `u` is served by its own cell.
pub type Precoders = Vec<Vec<CVector>>;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateReport {
    pub per_ue: Vec<f64>,
    pub sum: f64,
    pub index: usize,
}

impl RateReport {
    pub fn new(per_ue: Vec<f64>, index: usize) -> Self {
        let sum = per_ue.iter().sum();
        Self { per_ue, sum, index }
    }
}

/// `|m v_n|^2 / (sum_{j != n} |m v_j|^2 + sigma2 / p)`.
pub fn sinr_narrowband(m: &CRow, v: &[CVector], target: usize, sigma2: f64, p: f64) -> f64 {
    let gain = |x: &CVector| (m * x)[(0, 0)].norm_sqr();
    let interference: f64 = v
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != target)
        .map(|(_, x)| gain(x))
        .sum();
    gain(&v[target]) / (interference + sigma2 / p)
}

/// Sum over UEs of `log2(1 + SINR)` with UE `n` served by `v[n]` and
/// receiving through `m[n]`.
pub fn narrowband_rates(m: &[CRow], v: &[CVector], sigma2: f64, p: f64) -> Vec<f64> {
    (0..m.len())
        .map(|n| (1.0 + sinr_narrowband(&m[n], v, n, sigma2, p)).log2())
        .collect()
}

/// Composite channels `f_{k,u,n}` for every BS `k`, UE `u` and subcarrier
/// `n`, indexed `[k][u][n]`.
#[derive(Debug, Clone, PartialEq)]
pub struct CompositeChannels {
    pub f: Vec<Vec<Vec<CVector>>>,
}

impl CompositeChannels {
    pub fn build(
        scn: &WidebandScenario,
        caps: &[CapacitanceVector],
        switches: &[SwitchMatrix],
    ) -> Result<Self> {
        if caps.len() != scn.n_cells || switches.len() != scn.n_cells {
            return Err(Error::dim(
                "composite channels",
                scn.n_cells,
                caps.len().min(switches.len()),
            ));
        }
        let f = (0..scn.n_cells)
            .map(|k| -> Result<Vec<Vec<CVector>>> {
                let phis = scn
                    .frequencies
                    .iter()
                    .map(|&f_n| phase_profile(&caps[k], f_n, &scn.circuit))
                    .collect::<Result<Vec<_>>>()?;
                Ok((0..scn.n_ues())
                    .map(|u| {
                        (0..scn.n_sub)
                            .map(|n| {
                                composite_column(
                                    scn.direct(k, u, n),
                                    scn.ris_ue(k, u, n),
                                    &switches[k],
                                    &phis[n],
                                    scn.bs_ris(k, n),
                                )
                            })
                            .collect()
                    })
                    .collect())
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { f })
    }
}

/// Received amplitudes `p[v][u][n] = f_{cell(v),u,n}^H w_{v,n}` together with
/// the interference-plus-noise terms they imply.
#[derive(Debug, Clone)]
pub struct LinkProducts {
    pub p: Vec<Vec<Vec<num_complex::Complex64>>>,
    /// `MUI[u][n]`: noise plus power of every stream other than `u` at UE `u`.
    pub mui: Vec<Vec<f64>>,
    /// `S[u][n] = |p[u][u][n]|^2`.
    pub signal: Vec<Vec<f64>>,
}

impl LinkProducts {
    pub fn compute(scn: &WidebandScenario, f: &CompositeChannels, w: &Precoders) -> Self {
        let n_ue = scn.n_ues();
        let p: Vec<Vec<Vec<_>>> = (0..n_ue)
            .map(|v| {
                let k = scn.cell_of_ue[v];
                (0..n_ue)
                    .map(|u| {
                        (0..scn.n_sub)
                            .map(|n| f.f[k][u][n].dotc(&w[v][n]))
                            .collect()
                    })
                    .collect()
            })
            .collect();
        let mut mui = vec![vec![scn.noise_variance; scn.n_sub]; n_ue];
        let mut signal = vec![vec![0.0; scn.n_sub]; n_ue];
        for u in 0..n_ue {
            for n in 0..scn.n_sub {
                for (v, pv) in p.iter().enumerate() {
                    let e = pv[u][n].norm_sqr();
                    if v == u {
                        signal[u][n] = e;
                    } else {
                        mui[u][n] += e;
                    }
                }
            }
        }
        Self { p, mui, signal }
    }

    /// Per-UE rate `(1/N) sum_n log2(1 + S/MUI)`.
    pub fn rates(&self) -> Vec<f64> {
        self.signal
            .iter()
            .zip(&self.mui)
            .map(|(s, m)| {
                let n_sub = s.len() as f64;
                s.iter()
                    .zip(m)
                    .map(|(s, m)| (1.0 + s / m).log2())
                    .sum::<f64>()
                    / n_sub
            })
            .collect()
    }
}

/// Rate of UE `u` from composite channels and precoders.
pub fn rate_wideband(
    scn: &WidebandScenario,
    f: &CompositeChannels,
    w: &Precoders,
    u: usize,
) -> f64 {
    let k = scn.cell_of_ue[u];
    let mut acc = 0.0;
    for n in 0..scn.n_sub {
        let signal = f.f[k][u][n].dotc(&w[u][n]).norm_sqr();
        let mut mui = scn.noise_variance;
        for v in 0..scn.n_ues() {
            if v != u {
                mui += f.f[scn.cell_of_ue[v]][u][n].dotc(&w[v][n]).norm_sqr();
            }
        }
        acc += (1.0 + signal / mui).log2();
    }
    acc / scn.n_sub as f64
}

/// Network sum rate over every UE.
pub fn total_rate(
    scn: &WidebandScenario,
    w: &Precoders,
    caps: &[CapacitanceVector],
    switches: &[SwitchMatrix],
) -> Result<f64> {
    let f = CompositeChannels::build(scn, caps, switches)?;
    Ok((0..scn.n_ues()).map(|u| rate_wideband(scn, &f, w, u)).sum())
}

/// Sum rate of the UEs of cell `k`.
pub fn cell_rate(scn: &WidebandScenario, f: &CompositeChannels, w: &Precoders, k: usize) -> f64 {
    scn.ues_of_cell[k]
        .iter()
        .map(|&u| rate_wideband(scn, f, w, u))
        .sum()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McSummary {
    pub mean: f64,
    pub stderr: f64,
    pub n_runs: usize,
    pub values: Vec<f64>,
}

impl McSummary {
    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        let n = values.len();
        if n == 0 {
            return Err(Error::config(
                "experiment.mc_runs",
                "at least one Monte-Carlo run is required",
            ));
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let stderr = if n > 1 {
            let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            (var / n as f64).sqrt()
        } else {
            0.0
        };
        Ok(Self {
            mean,
            stderr,
            n_runs: n,
            values,
        })
    }
}

/// Runs `eval(run_seed, run_index)` for every run and reduces in run order.
/// Each run gets its own seed derived from `seed`.
pub fn monte_carlo<F>(n_runs: usize, seed: u64, exec: Exec, eval: F) -> Result<McSummary>
where
    F: Fn(u64, usize) -> f64 + Sync + Send,
{
    if n_runs == 0 {
        return Err(Error::config(
            "experiment.mc_runs",
            "at least one Monte-Carlo run is required",
        ));
    }
    let values = exec.map(n_runs, |r| {
        eval(rng::child_seed(seed, "mc.run", r as u64), r)
    });
    McSummary::from_values(values)
}

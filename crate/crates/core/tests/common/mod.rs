//! Independent oracles shared by the integration tests. Everything here is
//! written from the model equations with dense matrices and plain loops,
//! without going through the library's cached quantities.

#![allow(dead_code)]

use std::f64::consts::PI;

use metasurf::channel::{CMatrix, CVector};
use metasurf::ris::{CapacitanceVector, SwitchMatrix};
use metasurf::sca::SolverState;
use metasurf::scenario::{Config, RisCircuitParams, WidebandScenario};
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn cn<R: Rng>(rng: &mut R) -> Complex64 {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let a: f64 = rng.sample(rand_distr::StandardNormal);
    let b: f64 = rng.sample(rand_distr::StandardNormal);
    Complex64::new(a * s, b * s)
}

pub fn cvec<R: Rng>(n: usize, rng: &mut R) -> CVector {
    CVector::from_fn(n, |_, _| cn(rng))
}

/// Two cells with one UE each, two antennas, four elements, two subcarriers.
pub fn tiny_config() -> Config {
    let mut cfg = Config::desk();
    cfg.geometry.ue_counts_per_cell = vec![1, 1];
    cfg.arrays.n_tx = 2;
    cfg.arrays.n_ris = 4;
    cfg.ofdm.n_sub = 2;
    cfg.ofdm.n_taps = 2;
    cfg.ofdm.cyclic_prefix = 2;
    cfg
}

/// Reflection coefficient straight from the impedance expression.
pub fn phi_oracle(f: f64, c: f64, p: &RisCircuitParams) -> Complex64 {
    let w = 2.0 * PI * f;
    let j = Complex64::new(0.0, 1.0);
    let zc = 1.0 / (j * w * c);
    let z = j * w * p.l1 * (j * w * p.l2 + p.r + zc) / (j * w * (p.l1 + p.l2) + p.r + zc);
    (z - p.z0) / (z + p.z0)
}

/// Random state with a full power budget spread over every UE and
/// subcarrier, random capacitances and random permutations.
pub fn random_state(scn: &WidebandScenario, seed: u64) -> SolverState {
    let mut r = rng(seed);
    let w = (0..scn.n_ues())
        .map(|u| {
            let k = scn.cell_of_ue[u];
            let scale =
                (scn.p_max[k] / (scn.ues_of_cell[k].len() * scn.n_sub * scn.n_tx) as f64).sqrt();
            (0..scn.n_sub)
                .map(|_| cvec(scn.n_tx, &mut r) * Complex64::from(scale))
                .collect()
        })
        .collect();
    let p = &scn.circuit;
    let c = (0..scn.n_cells)
        .map(|_| {
            let v = (0..scn.n_ris)
                .map(|_| r.random_range(p.c_min..p.c_max))
                .collect();
            CapacitanceVector::new(v, p).unwrap()
        })
        .collect();
    let s = (0..scn.n_cells)
        .map(|_| SwitchMatrix::random(scn.n_ris, &mut r))
        .collect();
    SolverState {
        w,
        c,
        s,
        iteration: 0,
        alpha: 1.0,
        objective: f64::NAN,
    }
}

/// Per-UE wideband rates with arbitrary real switch matrices `s[k]`.
pub fn dense_rates(
    scn: &WidebandScenario,
    w: &[Vec<CVector>],
    c: &[Vec<f64>],
    s: &[DMatrix<f64>],
) -> Vec<f64> {
    let n_ue = scn.n_ues();
    // f[k][u][n] as a row vector f^H.
    let mut fh = vec![vec![Vec::with_capacity(scn.n_sub); n_ue]; scn.n_cells];
    for k in 0..scn.n_cells {
        let sk: CMatrix = s[k].map(Complex64::from);
        for n in 0..scn.n_sub {
            let phi = CMatrix::from_diagonal(&CVector::from_iterator(
                scn.n_ris,
                c[k].iter()
                    .map(|&ci| phi_oracle(scn.frequencies[n], ci, &scn.circuit)),
            ));
            let h1 = &scn.channels.bs_ris[k][n];
            for u in 0..n_ue {
                let h = &scn.channels.direct[k][u][n];
                let g = &scn.channels.ris_ue[k][u][n];
                let row = h.adjoint() + g.adjoint() * &sk * &phi * h1;
                fh[k][u].push(row);
            }
        }
    }
    (0..n_ue)
        .map(|u| {
            let mut acc = 0.0;
            for n in 0..scn.n_sub {
                let amp = |v: usize| (&fh[scn.cell_of_ue[v]][u][n] * &w[v][n])[(0, 0)].norm_sqr();
                let interference: f64 = (0..n_ue).filter(|&v| v != u).map(amp).sum();
                acc += (1.0 + amp(u) / (scn.noise_variance + interference)).log2();
            }
            acc / scn.n_sub as f64
        })
        .collect()
}

/// `(rate of cell k, rate of all other cells)`.
pub fn split_rates(scn: &WidebandScenario, rates: &[f64], k: usize) -> (f64, f64) {
    let own = scn.ues_of_cell[k].iter().map(|&u| rates[u]).sum();
    let total: f64 = rates.iter().sum();
    (own, total - own)
}

pub fn caps_of(state: &SolverState) -> Vec<Vec<f64>> {
    state.c.iter().map(|c| c.values().to_vec()).collect()
}

pub fn switches_of(state: &SolverState) -> Vec<DMatrix<f64>> {
    state.s.iter().map(|s| s.to_real()).collect()
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
}

/// Max relative error between vectors, measured against the largest entry.
pub fn vec_rel_err(a: &[f64], b: &[f64]) -> f64 {
    let scale = a
        .iter()
        .chain(b)
        .fold(0.0f64, |m, x| m.max(x.abs()))
        .max(1e-300);
    a.iter()
        .zip(b)
        .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
        / scale
}

/// All permutations of `0..n` in lexicographic order.
pub fn permutations(n: usize) -> Vec<Vec<usize>> {
    fn rec(cur: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Vec<usize>>) {
        if cur.len() == used.len() {
            out.push(cur.clone());
            return;
        }
        for i in 0..used.len() {
            if !used[i] {
                used[i] = true;
                cur.push(i);
                rec(cur, used, out);
                cur.pop();
                used[i] = false;
            }
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::new(), &mut vec![false; n], &mut out);
    out
}

/// Maximum of `sum_i cost[(i, a[i])]` over all assignments `a`.
pub fn brute_force_lap(cost: &DMatrix<f64>) -> (Vec<usize>, f64) {
    let mut best = (Vec::new(), f64::NEG_INFINITY);
    for a in permutations(cost.nrows()) {
        let v: f64 = a.iter().enumerate().map(|(i, &j)| cost[(i, j)]).sum();
        if v > best.1 {
            best = (a, v);
        }
    }
    best
}

pub mod oracles;

/// Attention written with explicit index loops.
pub fn attention_oracle(
    x: &DMatrix<f64>,
    wq: &DMatrix<f64>,
    wk: &DMatrix<f64>,
    wv: &DMatrix<f64>,
    d: f64,
) -> DMatrix<f64> {
    let (r, c) = x.shape();
    let mul = |w: &DMatrix<f64>| {
        let mut out = DMatrix::zeros(r, c);
        for i in 0..r {
            for j in 0..c {
                let mut acc = 0.0;
                for t in 0..r {
                    acc += w[(i, t)] * x[(t, j)];
                }
                out[(i, j)] = acc;
            }
        }
        out
    };
    let (q, k, p) = (mul(wq), mul(wk), mul(wv));
    let mut scores = vec![vec![0.0; r]; r];
    let mut max = f64::NEG_INFINITY;
    for i in 0..r {
        for j in 0..r {
            let mut acc = 0.0;
            for t in 0..c {
                acc += q[(i, t)] * k[(j, t)];
            }
            scores[i][j] = acc / d.sqrt();
            max = max.max(scores[i][j]);
        }
    }
    let mut total = 0.0;
    for row in scores.iter_mut() {
        for s in row.iter_mut() {
            *s = (*s - max).exp();
            total += *s;
        }
    }
    let mut out = DMatrix::zeros(r, c);
    for i in 0..r {
        for j in 0..c {
            let mut acc = 0.0;
            for t in 0..r {
                acc += scores[i][t] / total * p[(t, j)];
            }
            out[(i, j)] = acc;
        }
    }
    out
}

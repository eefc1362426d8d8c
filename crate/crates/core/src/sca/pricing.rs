//! Gradients of the cell rates and the prices exchanged between cells.
//!
//! All sums run over subcarriers without the `1/N_sub` prefactor of the
//! rate. Precoder quantities are Wirtinger derivatives with respect to the
//! conjugate precoder; capacitance and switch quantities are ordinary real
//! derivatives.

use std::f64::consts::LN_2;

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::state::Snapshot;
use crate::channel::CVector;
use crate::scenario::WidebandScenario;

/// Prices collected by BS `k` at one iterate.
#[derive(Debug, Clone, PartialEq)]
pub struct PricingBundle {
    /// `[i][n]` for the `i`-th UE of the cell.
    pub precoder: Vec<Vec<CVector>>,
    pub capacitance: Vec<f64>,
    pub switch: DMatrix<f64>,
}

impl PricingBundle {
    pub fn zeros(scn: &WidebandScenario, k: usize) -> Self {
        Self {
            precoder: vec![vec![CVector::zeros(scn.n_tx); scn.n_sub]; scn.ues_of_cell[k].len()],
            capacitance: vec![0.0; scn.n_ris],
            switch: DMatrix::zeros(scn.n_ris, scn.n_ris),
        }
    }

    pub fn compute(scn: &WidebandScenario, snap: &Snapshot, k: usize) -> Self {
        let precoder = scn.ues_of_cell[k]
            .iter()
            .map(|&l| {
                (0..scn.n_sub)
                    .map(|n| pricing_precoder(scn, snap, l, n))
                    .collect()
            })
            .collect();
        let g = cell_gradients(scn, snap, k, true);
        Self {
            precoder,
            capacitance: g.pi_c,
            switch: g.pi_s,
        }
    }
}

/// `S / (MUI (MUI + S))`, equal to `snr / ((1 + snr) MUI)`.
fn price_weight(signal: f64, mui: f64) -> f64 {
    signal / (mui * (mui + signal))
}

/// Derivative of the other cells' summed rate with respect to the conjugate
/// precoder of UE `l` on subcarrier `n`.
pub fn pricing_precoder(scn: &WidebandScenario, snap: &Snapshot, l: usize, n: usize) -> CVector {
    let k = scn.cell_of_ue[l];
    let mut out = CVector::zeros(scn.n_tx);
    for u in 0..scn.n_ues() {
        if scn.cell_of_ue[u] == k {
            continue;
        }
        let wgt = price_weight(snap.lp.signal[u][n], snap.lp.mui[u][n]);
        let coef = snap.lp.p[l][u][n] * (-wgt / LN_2);
        out.axpy(coef, &snap.f.f[k][u][n], Complex64::new(1.0, 0.0));
    }
    out
}

/// Coefficients `(a, b)` of the concave quadratic minorant of UE `u`'s
/// log term on subcarrier `n`.
pub fn surrogate_coeffs(
    scn: &WidebandScenario,
    snap: &Snapshot,
    u: usize,
    n: usize,
) -> (f64, CVector) {
    let k = scn.cell_of_ue[u];
    let s = snap.lp.signal[u][n];
    let mui = snap.lp.mui[u][n];
    let a = s / ((mui + s) * mui) / LN_2;
    let b = &snap.f.f[k][u][n] * (snap.lp.p[u][u][n] / (mui * LN_2));
    (a, b)
}

struct CellGradients {
    gamma_c: Vec<f64>,
    pi_c: Vec<f64>,
    gamma_s: DMatrix<f64>,
    pi_s: DMatrix<f64>,
}

/// Accumulates `y_m = sum_{v in k} wgt_v conj(p_v) (H w_v)_m` for receiver
/// `u`, with per-stream weights from `weight(v)`.
fn weighted_field(
    scn: &WidebandScenario,
    snap: &Snapshot,
    k: usize,
    u: usize,
    n: usize,
    weight: impl Fn(usize) -> f64,
) -> Vec<Complex64> {
    let mut y = vec![Complex64::new(0.0, 0.0); scn.n_ris];
    for &v in &scn.ues_of_cell[k] {
        let c = snap.lp.p[v][u][n].conj() * weight(v);
        if c == Complex64::new(0.0, 0.0) {
            continue;
        }
        for (ym, hm) in y.iter_mut().zip(snap.hw[v][n].iter()) {
            *ym += c * hm;
        }
    }
    y
}

fn cell_gradients(
    scn: &WidebandScenario,
    snap: &Snapshot,
    k: usize,
    with_switch: bool,
) -> CellGradients {
    let n_ris = scn.n_ris;
    let mut gamma_c = vec![0.0; n_ris];
    let mut pi_c = vec![0.0; n_ris];
    let (mut gamma_s, mut pi_s) = if with_switch {
        (DMatrix::zeros(n_ris, n_ris), DMatrix::zeros(n_ris, n_ris))
    } else {
        (DMatrix::zeros(0, 0), DMatrix::zeros(0, 0))
    };
    let perm = &snap.perms[k];
    for u in 0..scn.n_ues() {
        let own = scn.cell_of_ue[u] == k;
        for n in 0..scn.n_sub {
            let s = snap.lp.signal[u][n];
            let mui = snap.lp.mui[u][n];
            let (scale, y) = if own {
                let snr = s / mui;
                let c0 = 2.0 / LN_2 / ((1.0 + snr) * mui * mui);
                (
                    c0,
                    weighted_field(scn, snap, k, u, n, |v| if v == u { mui } else { -s }),
                )
            } else {
                (
                    -2.0 / LN_2 * price_weight(s, mui),
                    weighted_field(scn, snap, k, u, n, |_| 1.0),
                )
            };
            if scale == 0.0 {
                continue;
            }
            let g = &scn.channels.ris_ue[k][u][n];
            let phi = &snap.phis[k][n];
            let dphi = &snap.dphis[k][n];
            let target_c = if own { &mut gamma_c } else { &mut pi_c };
            for m in 0..n_ris {
                let a = g[perm[m]].conj();
                target_c[m] += scale * (dphi[m] * a * y[m]).re;
            }
            if with_switch {
                let target_s = if own { &mut gamma_s } else { &mut pi_s };
                let x: Vec<Complex64> = (0..n_ris).map(|j| phi[j] * y[j] * scale).collect();
                for j in 0..n_ris {
                    let xj = x[j];
                    for i in 0..n_ris {
                        let gi = g[i];
                        // Re{conj(g_i) x_j}
                        target_s[(i, j)] += gi.re * xj.re + gi.im * xj.im;
                    }
                }
            }
        }
    }
    CellGradients {
        gamma_c,
        pi_c,
        gamma_s,
        pi_s,
    }
}

/// Gradient of cell `k`'s own rate and price from the other cells with
/// respect to the capacitances of surface `k`, per farad.
pub fn capacitance_gradients(
    scn: &WidebandScenario,
    snap: &Snapshot,
    k: usize,
) -> (Vec<f64>, Vec<f64>) {
    let g = cell_gradients(scn, snap, k, false);
    (g.gamma_c, g.pi_c)
}

/// Gradient of cell `k`'s own rate and price from the other cells with
/// respect to the entries of switch matrix `k`, relaxed to real values.
pub fn switch_gradients(
    scn: &WidebandScenario,
    snap: &Snapshot,
    k: usize,
) -> (DMatrix<f64>, DMatrix<f64>) {
    let g = cell_gradients(scn, snap, k, true);
    (g.gamma_s, g.pi_s)
}

/// Capacitance and switch gradients of cell `k` in one pass.
pub(crate) fn all_gradients(
    scn: &WidebandScenario,
    snap: &Snapshot,
    k: usize,
    with_switch: bool,
) -> (Vec<f64>, Vec<f64>, DMatrix<f64>, DMatrix<f64>) {
    let g = cell_gradients(scn, snap, k, with_switch);
    (g.gamma_c, g.pi_c, g.gamma_s, g.pi_s)
}

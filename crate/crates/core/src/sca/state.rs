use num_complex::Complex64;

use crate::channel::CVector;
use crate::error::Result;
use crate::metrics::{CompositeChannels, LinkProducts, Precoders};
use crate::ris::{derivative_profile, phase_profile, CapacitanceVector, SwitchMatrix};
use crate::scenario::WidebandScenario;

/// Iterate of the algorithm: precoders `[ue][subcarrier]` plus one
/// capacitance vector and switch matrix per cell.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverState {
    pub w: Precoders,
    pub c: Vec<CapacitanceVector>,
    pub s: Vec<SwitchMatrix>,
    pub iteration: usize,
    pub alpha: f64,
    pub objective: f64,
}

impl SolverState {
    /// `sum_{l in k} sum_n ||w_{l,n}||^2`.
    pub fn cell_power(&self, scn: &WidebandScenario, k: usize) -> f64 {
        scn.ues_of_cell[k]
            .iter()
            .flat_map(|&u| self.w[u].iter())
            .map(|w| w.norm_squared())
            .sum()
    }

    /// Checks power budgets (with `slack` watts), the capacitance box and
    /// that every switch is a permutation.
    pub fn is_feasible(&self, scn: &WidebandScenario, slack: f64) -> bool {
        let p = &scn.circuit;
        (0..scn.n_cells).all(|k| self.cell_power(scn, k) <= scn.p_max[k] + slack)
            && self
                .c
                .iter()
                .all(|c| c.values().iter().all(|&x| x >= p.c_min && x <= p.c_max))
            && self
                .s
                .iter()
                .all(|s| crate::ris::validate_switch(s.perm()).is_ok())
    }
}

/// Matched filter to each UE's own direct channel with the budget split
/// equally over UEs and subcarriers; capacitances at mid-range; identity
/// switches.
pub fn initial_state(scn: &WidebandScenario) -> SolverState {
    let w = (0..scn.n_ues())
        .map(|u| {
            let k = scn.cell_of_ue[u];
            let per = (scn.p_max[k] / (scn.ues_of_cell[k].len() * scn.n_sub) as f64).sqrt();
            (0..scn.n_sub)
                .map(|n| {
                    let h = scn.direct(k, u, n);
                    let norm = h.norm();
                    if norm > 0.0 {
                        h * Complex64::from(per / norm)
                    } else {
                        let mut e = CVector::zeros(scn.n_tx);
                        e[0] = Complex64::from(per);
                        e
                    }
                })
                .collect()
        })
        .collect();
    SolverState {
        w,
        c: (0..scn.n_cells)
            .map(|_| CapacitanceVector::midpoint(scn.n_ris, &scn.circuit))
            .collect(),
        s: (0..scn.n_cells)
            .map(|_| SwitchMatrix::identity(scn.n_ris))
            .collect(),
        iteration: 0,
        alpha: 1.0,
        objective: f64::NAN,
    }
}

/// Quantities of one iterate shared by every block update.
#[derive(Debug, Clone)]
pub struct Snapshot {
    pub f: CompositeChannels,
    pub lp: LinkProducts,
    /// Reflection coefficients `[k][n][m]`.
    pub phis: Vec<Vec<Vec<Complex64>>>,
    /// `d phi / dC` per element, `[k][n][m]`.
    pub dphis: Vec<Vec<Vec<Complex64>>>,
    /// `H_{k,k,n} w_{v,n}` with `k` the serving cell of `v`, `[v][n]`.
    pub hw: Vec<Vec<CVector>>,
    /// Switch permutations of the iterate.
    pub perms: Vec<Vec<usize>>,
}

impl Snapshot {
    pub fn new(scn: &WidebandScenario, state: &SolverState) -> Result<Self> {
        let f = CompositeChannels::build(scn, &state.c, &state.s)?;
        let lp = LinkProducts::compute(scn, &f, &state.w);
        let mut phis = Vec::with_capacity(scn.n_cells);
        let mut dphis = Vec::with_capacity(scn.n_cells);
        for c in &state.c {
            let mut p = Vec::with_capacity(scn.n_sub);
            let mut d = Vec::with_capacity(scn.n_sub);
            for &f_n in &scn.frequencies {
                p.push(phase_profile(c, f_n, &scn.circuit)?);
                d.push(
                    derivative_profile(c, f_n, &scn.circuit)?
                        .into_iter()
                        .map(|x| x.conj())
                        .collect(),
                );
            }
            phis.push(p);
            dphis.push(d);
        }
        let hw = (0..scn.n_ues())
            .map(|v| {
                let k = scn.cell_of_ue[v];
                (0..scn.n_sub)
                    .map(|n| scn.bs_ris(k, n) * &state.w[v][n])
                    .collect()
            })
            .collect();
        Ok(Self {
            f,
            lp,
            phis,
            dphis,
            hw,
            perms: state.s.iter().map(|s| s.perm().to_vec()).collect(),
        })
    }

    pub fn rates(&self) -> Vec<f64> {
        self.lp.rates()
    }

    pub fn sum_rate(&self) -> f64 {
        self.rates().iter().sum()
    }

    /// Sum rate of each cell.
    pub fn cell_rates(&self, scn: &WidebandScenario) -> Vec<f64> {
        let r = self.rates();
        scn.ues_of_cell
            .iter()
            .map(|ues| ues.iter().map(|&u| r[u]).sum())
            .collect()
    }
}

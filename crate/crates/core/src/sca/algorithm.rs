use num_complex::Complex64;
use serde::Serialize;

use super::pricing::{all_gradients, pricing_precoder, PricingBundle};
use super::state::{Snapshot, SolverState};
use super::update::{step_size, update_capacitances, update_precoder, update_switch};
use super::SolverOptions;
use crate::channel::CVector;
use crate::error::Result;
use crate::par::Exec;
use crate::ris::{CapacitanceVector, SwitchMatrix};
use crate::scenario::WidebandScenario;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceRow {
    pub iteration: usize,
    pub sum_rate: f64,
    pub cell_rates: Vec<f64>,
    pub alpha: f64,
}

#[derive(Debug, Clone)]
pub struct SolverOutcome {
    /// Final iterate when converged, otherwise the best iterate visited.
    pub state: SolverState,
    pub trace: Vec<TraceRow>,
    pub converged: bool,
    /// Every iterate met the power budgets, the capacitance box and the
    /// permutation constraint.
    pub all_feasible: bool,
    pub initial_rate: f64,
    pub final_rate: f64,
}

struct CellUpdate {
    w: Vec<Vec<CVector>>,
    c: CapacitanceVector,
    s: SwitchMatrix,
}

fn cell_update(
    scn: &WidebandScenario,
    state: &SolverState,
    snap: &Snapshot,
    k: usize,
    opts: &SolverOptions,
) -> Result<CellUpdate> {
    let bd = opts.beyond_diagonal;
    let (gamma_c, pi_c, gamma_s, pi_s) = all_gradients(scn, snap, k, bd);
    let prices = if opts.cooperative && scn.n_cells > 1 {
        PricingBundle {
            precoder: scn.ues_of_cell[k]
                .iter()
                .map(|&l| {
                    (0..scn.n_sub)
                        .map(|n| pricing_precoder(scn, snap, l, n))
                        .collect()
                })
                .collect(),
            capacitance: pi_c,
            switch: pi_s,
        }
    } else {
        PricingBundle::zeros(scn, k)
    };
    let w = update_precoder(scn, state, snap, k, &prices, opts)?.w;
    let c = update_capacitances(
        &state.c[k],
        &gamma_c,
        &prices.capacitance,
        opts,
        &scn.circuit,
    );
    let s = if bd {
        update_switch(&state.s[k], &gamma_s, &prices.switch, opts.tau)?
    } else {
        state.s[k].clone()
    };
    Ok(CellUpdate { w, c, s })
}

fn relative_change(current: f64, previous: f64) -> f64 {
    if current == 0.0 {
        if previous == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        ((current - previous) / current).abs()
    }
}

/// Runs the pricing-based distributed iteration from `init` until the
/// relative change of the sum rate drops to `opts.epsilon` or the iteration
/// budget is exhausted. Per-BS updates of one iteration all read the same
/// iterate and are evaluated under `exec`.
pub fn run_algorithm1(
    scn: &WidebandScenario,
    opts: &SolverOptions,
    init: SolverState,
    exec: Exec,
) -> Result<SolverOutcome> {
    opts.validate()?;
    let mut state = init;
    if !opts.beyond_diagonal {
        state.s = (0..scn.n_cells)
            .map(|_| SwitchMatrix::identity(scn.n_ris))
            .collect();
    }
    let mut snap = Snapshot::new(scn, &state)?;
    let initial_rate = snap.sum_rate();
    state.objective = initial_rate;
    let mut trace = vec![TraceRow {
        iteration: 0,
        sum_rate: initial_rate,
        cell_rates: snap.cell_rates(scn),
        alpha: state.alpha,
    }];
    let mut best = state.clone();
    let mut previous = initial_rate;
    let mut alpha = 1.0;
    let mut converged = false;
    let feasible = |st: &SolverState| {
        st.is_feasible(scn, 1e-9 * scn.p_max.iter().cloned().fold(0.0, f64::max))
    };
    let mut all_feasible = feasible(&state);

    for t in 0..opts.max_iterations {
        alpha = step_size(t, opts.step_a, opts.step_b, alpha);
        let updates = exec
            .map(scn.n_cells, |k| cell_update(scn, &state, &snap, k, opts))
            .into_iter()
            .collect::<Result<Vec<_>>>()?;

        let a = Complex64::from(alpha);
        for (k, upd) in updates.into_iter().enumerate() {
            for (i, &u) in scn.ues_of_cell[k].iter().enumerate() {
                for (w, w_hat) in state.w[u].iter_mut().zip(&upd.w[i]) {
                    let step = (w_hat - &*w) * a;
                    *w += step;
                }
            }
            let blended = state.c[k]
                .values()
                .iter()
                .zip(upd.c.values())
                .map(|(&c, &c_hat)| {
                    (c + alpha * (c_hat - c)).clamp(scn.circuit.c_min, scn.circuit.c_max)
                })
                .collect();
            state.c[k] = CapacitanceVector::new(blended, &scn.circuit)?;
            state.s[k] = upd.s;
        }
        state.iteration = t + 1;
        state.alpha = alpha;

        all_feasible &= feasible(&state);
        snap = Snapshot::new(scn, &state)?;
        let rate = snap.sum_rate();
        state.objective = rate;
        trace.push(TraceRow {
            iteration: t + 1,
            sum_rate: rate,
            cell_rates: snap.cell_rates(scn),
            alpha,
        });
        if rate > best.objective {
            best = state.clone();
        }
        let change = relative_change(rate, previous);
        previous = rate;
        if change <= opts.epsilon {
            converged = true;
            break;
        }
    }

    let state = if converged { state } else { best };
    let final_rate = state.objective;
    Ok(SolverOutcome {
        state,
        trace,
        converged,
        all_feasible,
        initial_rate,
        final_rate,
    })
}

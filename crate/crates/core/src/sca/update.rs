//! Closed-form block updates of one BS.

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::pricing::{surrogate_coeffs, PricingBundle};
use super::state::{Snapshot, SolverState};
use super::SolverOptions;
use crate::assignment::solve_lap_max;
use crate::channel::CVector;
use crate::error::{Error, Result};
use crate::ris::{CapacitanceVector, SwitchMatrix};
use crate::scenario::{RisCircuitParams, WidebandScenario};

/// One `(UE, subcarrier)` block of the precoder subproblem: the objective
/// contribution is `-a |f^H w|^2 - (tau/2) ||w||^2 + Re{v^H w}`.
#[derive(Debug, Clone, PartialEq)]
pub struct PrecoderBlock {
    pub a: f64,
    pub f: CVector,
    pub v: CVector,
}

impl PrecoderBlock {
    /// Maximiser of the block objective with diagonal loading `mu`:
    /// `(1/2) (a f f^H + mu I)^{-1} v`, by Sherman-Morrison.
    fn argmax(&self, mu: f64) -> CVector {
        let fv = self.f.dotc(&self.v);
        let denom = mu + self.a * self.f.norm_squared();
        let mut w = self.v.clone();
        w.axpy(
            Complex64::from(-self.a) * fv / denom,
            &self.f,
            Complex64::new(1.0, 0.0),
        );
        w * Complex64::from(0.5 / mu)
    }
}

/// The concave quadratic precoder problem of one BS under its power budget.
#[derive(Debug, Clone, PartialEq)]
pub struct PrecoderSubproblem {
    /// `[local UE][subcarrier]`.
    pub blocks: Vec<Vec<PrecoderBlock>>,
    pub half_tau: f64,
    pub p_max: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PrecoderUpdate {
    /// `[local UE][subcarrier]`.
    pub w: Vec<Vec<CVector>>,
    pub lambda: f64,
}

impl PrecoderSubproblem {
    /// Linearises cell `k`'s problem at the iterate. `v = 2 pi + 2 b + tau w`.
    pub fn build(
        scn: &WidebandScenario,
        state: &SolverState,
        snap: &Snapshot,
        k: usize,
        prices: &PricingBundle,
        opts: &SolverOptions,
    ) -> Self {
        let blocks = scn.ues_of_cell[k]
            .iter()
            .enumerate()
            .map(|(i, &u)| {
                (0..scn.n_sub)
                    .map(|n| {
                        let (a, b) = surrogate_coeffs(scn, snap, u, n);
                        let v = (&prices.precoder[i][n] + b) * Complex64::from(2.0)
                            + &state.w[u][n] * Complex64::from(opts.tau);
                        PrecoderBlock {
                            a,
                            f: snap.f.f[k][u][n].clone(),
                            v,
                        }
                    })
                    .collect()
            })
            .collect();
        Self {
            blocks,
            half_tau: opts.tau / 2.0,
            p_max: scn.p_max[k],
        }
    }

    pub fn w_at(&self, lambda: f64) -> Vec<Vec<CVector>> {
        let mu = self.half_tau + lambda;
        self.blocks
            .iter()
            .map(|row| row.iter().map(|b| b.argmax(mu)).collect())
            .collect()
    }

    pub fn power(w: &[Vec<CVector>]) -> f64 {
        w.iter().flatten().map(|x| x.norm_squared()).sum()
    }

    pub fn objective(&self, w: &[Vec<CVector>]) -> f64 {
        self.blocks
            .iter()
            .flatten()
            .zip(w.iter().flatten())
            .map(|(b, x)| {
                -b.a * b.f.dotc(x).norm_sqr() - self.half_tau * x.norm_squared() + b.v.dotc(x).re
            })
            .sum()
    }

    /// Maximiser under the power ball: `lambda = 0` when the unconstrained
    /// optimum is feasible, otherwise bisection on the multiplier.
    pub fn solve(&self, tolerance: f64) -> Result<PrecoderUpdate> {
        let w0 = self.w_at(0.0);
        if Self::power(&w0) <= self.p_max {
            return Ok(PrecoderUpdate { w: w0, lambda: 0.0 });
        }
        let mut hi = 1.0;
        let mut doublings = 0;
        while Self::power(&self.w_at(hi)) > self.p_max {
            hi *= 2.0;
            doublings += 1;
            if doublings > 60 {
                return Err(Error::Solver(
                    "power bisection failed to bracket the multiplier".into(),
                ));
            }
        }
        let mut lo = 0.0;
        let mut w_hi = self.w_at(hi);
        for _ in 0..200 {
            let p_hi = Self::power(&w_hi);
            if (self.p_max - p_hi) / self.p_max < tolerance || hi - lo <= f64::EPSILON * hi {
                break;
            }
            let mid = 0.5 * (lo + hi);
            let w_mid = self.w_at(mid);
            if Self::power(&w_mid) > self.p_max {
                lo = mid;
            } else {
                hi = mid;
                w_hi = w_mid;
            }
        }
        Ok(PrecoderUpdate {
            w: w_hi,
            lambda: hi,
        })
    }
}

/// Best-response precoders of every UE of cell `k`.
pub fn update_precoder(
    scn: &WidebandScenario,
    state: &SolverState,
    snap: &Snapshot,
    k: usize,
    prices: &PricingBundle,
    opts: &SolverOptions,
) -> Result<PrecoderUpdate> {
    PrecoderSubproblem::build(scn, state, snap, k, prices, opts).solve(opts.bisection_tolerance)
}

/// Proximal gradient step on the capacitances, clamped to the box. The step
/// is taken in units of `opts.capacitance_unit`.
pub fn update_capacitances(
    c: &CapacitanceVector,
    gamma: &[f64],
    pi: &[f64],
    opts: &SolverOptions,
    circuit: &RisCircuitParams,
) -> CapacitanceVector {
    let unit = opts.capacitance_unit;
    let values = c
        .values()
        .iter()
        .zip(gamma.iter().zip(pi))
        .map(|(&ci, (&g, &p))| {
            let beta = opts.tau * (ci / unit) + unit * (g + p);
            (beta / opts.tau * unit).clamp(circuit.c_min, circuit.c_max)
        })
        .collect();
    CapacitanceVector::new(values, circuit).expect("clamped values lie in the box")
}

/// Exact maximiser over permutations of `sum_ij (Gamma + Pi + tau S^t)_ij S_ij`.
pub fn update_switch(
    s_t: &SwitchMatrix,
    gamma: &DMatrix<f64>,
    pi: &DMatrix<f64>,
    tau: f64,
) -> Result<SwitchMatrix> {
    let score = gamma + pi + s_t.to_real() * tau;
    Ok(solve_lap_max(&score)?.switch)
}

/// `alpha^t = (alpha^{t-1} + a) / (1 + b t)`.
pub fn step_size(t: usize, a: f64, b: f64, alpha_prev: f64) -> f64 {
    if t == 0 {
        return 1.0;
    }
    ((alpha_prev + a) / (1.0 + b * t as f64)).min(1.0)
}

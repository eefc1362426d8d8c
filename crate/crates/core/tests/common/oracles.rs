//! Finite-difference and brute-force checks. Each `measure_*` returns the
//! worst error seen so callers decide how to report it.

use metasurf::assignment::solve_lap_max;
use metasurf::channel::CVector;
use metasurf::ris::{reflection_derivative, CapacitanceVector, SwitchMatrix};
use metasurf::sca::{
    capacitance_gradients, pricing_precoder, switch_gradients, update_capacitances, update_switch,
    PrecoderBlock, PrecoderSubproblem, Snapshot, SolverOptions,
};
use metasurf::scenario::{build_scenario, RisCircuitParams, WidebandScenario};
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;

use super::*;

fn tiny_instance(seed: u64) -> (WidebandScenario, SolverState) {
    let scn = build_scenario(&tiny_config(), seed).unwrap();
    let mut state = random_state(&scn, seed ^ 0x5eed);
    // Keep capacitances away from the box so central differences stay inside.
    let p = &scn.circuit;
    let span = p.c_max - p.c_min;
    let mut r = rng(seed ^ 0xcafe);
    state.c = (0..scn.n_cells)
        .map(|_| {
            let v = (0..scn.n_ris)
                .map(|_| r.random_range(p.c_min + 0.01 * span..p.c_max - 0.01 * span))
                .collect();
            CapacitanceVector::new(v, p).unwrap()
        })
        .collect();
    (scn, state)
}

/// Relative error of `d phi* / dC` against central differences at `points`
/// uniform random `(f, C)` in the band and the capacitance box.
pub fn measure_reflection_derivative(circuit: &RisCircuitParams, points: usize, seed: u64) -> f64 {
    let mut r = rng(seed);
    let mut worst = 0.0f64;
    for _ in 0..points {
        let f = r.random_range(2.35e9..2.45e9);
        let c = r.random_range(circuit.c_min..circuit.c_max);
        let h = 1e-4 * c;
        let fd = (phi_oracle(f, c + h, circuit) - phi_oracle(f, c - h, circuit)).conj() / (2.0 * h);
        let d = reflection_derivative(f, c, circuit).unwrap();
        worst = worst.max((d - fd).norm() / fd.norm().max(d.norm()));
    }
    worst
}

/// Price vectors against Wirtinger central differences of the other cells'
/// summed rate (times `N_sub`, the library drops the `1/N_sub`).
pub fn measure_pricing(seeds: std::ops::Range<u64>) -> f64 {
    let mut worst = 0.0f64;
    for seed in seeds {
        let (scn, state) = tiny_instance(seed);
        let snap = Snapshot::new(&scn, &state).unwrap();
        let caps = caps_of(&state);
        let sw = switches_of(&state);
        let n_sub = scn.n_sub as f64;
        for l in 0..scn.n_ues() {
            let k = scn.cell_of_ue[l];
            for n in 0..scn.n_sub {
                let analytic = pricing_precoder(&scn, &snap, l, n);
                let h = 1e-6 * state.w[l][n].norm();
                let others = |w: &[Vec<CVector>]| {
                    split_rates(&scn, &dense_rates(&scn, w, &caps, &sw), k).1 * n_sub
                };
                let mut fd = CVector::zeros(scn.n_tx);
                for m in 0..scn.n_tx {
                    let mut partial = [0.0; 2];
                    for (slot, dir) in [Complex64::new(h, 0.0), Complex64::new(0.0, h)]
                        .into_iter()
                        .enumerate()
                    {
                        let mut wp = state.w.clone();
                        wp[l][n][m] += dir;
                        let mut wm = state.w.clone();
                        wm[l][n][m] -= dir;
                        partial[slot] = (others(&wp) - others(&wm)) / (2.0 * h);
                    }
                    fd[m] = Complex64::new(partial[0], partial[1]) * 0.5;
                }
                let scale = fd.norm().max(analytic.norm()).max(1e-300);
                worst = worst.max((analytic - fd).norm() / scale);
            }
        }
    }
    worst
}

/// Own-cell gradient and price with respect to the capacitances, per farad,
/// against central differences with step `1e-3` of the range.
pub fn measure_capacitance(seeds: std::ops::Range<u64>) -> f64 {
    let mut worst = 0.0f64;
    for seed in seeds {
        let (scn, state) = tiny_instance(seed);
        let snap = Snapshot::new(&scn, &state).unwrap();
        let sw = switches_of(&state);
        let h = 1e-3 * (scn.circuit.c_max - scn.circuit.c_min);
        let n_sub = scn.n_sub as f64;
        for k in 0..scn.n_cells {
            let (gamma, pi) = capacitance_gradients(&scn, &snap, k);
            let mut fd_own = vec![0.0; scn.n_ris];
            let mut fd_other = vec![0.0; scn.n_ris];
            for m in 0..scn.n_ris {
                let eval = |delta: f64| {
                    let mut caps = caps_of(&state);
                    caps[k][m] += delta;
                    split_rates(&scn, &dense_rates(&scn, &state.w, &caps, &sw), k)
                };
                let (op, xp) = eval(h);
                let (om, xm) = eval(-h);
                fd_own[m] = n_sub * (op - om) / (2.0 * h);
                fd_other[m] = n_sub * (xp - xm) / (2.0 * h);
            }
            worst = worst
                .max(vec_rel_err(&gamma, &fd_own))
                .max(vec_rel_err(&pi, &fd_other));
        }
    }
    worst
}

/// Directional derivatives of the switch gradients along random real
/// directions against central differences of the relaxed rate.
pub fn measure_switch(seeds: std::ops::Range<u64>) -> f64 {
    let mut worst = 0.0f64;
    for seed in seeds {
        let (scn, state) = tiny_instance(seed);
        let snap = Snapshot::new(&scn, &state).unwrap();
        let caps = caps_of(&state);
        let n_sub = scn.n_sub as f64;
        let mut r = rng(seed ^ 0xd1);
        for k in 0..scn.n_cells {
            let (gamma, pi) = switch_gradients(&scn, &snap, k);
            for _ in 0..4 {
                let dir = DMatrix::from_fn(scn.n_ris, scn.n_ris, |_, _| {
                    r.sample::<f64, _>(rand_distr::StandardNormal)
                });
                let eps = 1e-5;
                let eval = |t: f64| {
                    let mut sw = switches_of(&state);
                    sw[k] += &dir * t;
                    split_rates(&scn, &dense_rates(&scn, &state.w, &caps, &sw), k)
                };
                let (op, xp) = eval(eps);
                let (om, xm) = eval(-eps);
                let fd_own = n_sub * (op - om) / (2.0 * eps);
                let fd_other = n_sub * (xp - xm) / (2.0 * eps);
                let an_own = gamma.component_mul(&dir).sum();
                let an_other = pi.component_mul(&dir).sum();
                worst = worst
                    .max(rel_err(an_own, fd_own))
                    .max(rel_err(an_other, fd_other));
            }
        }
    }
    worst
}

fn random_subproblem<R: Rng>(r: &mut R) -> PrecoderSubproblem {
    let n_ue = r.random_range(1..=3);
    let n_sub = r.random_range(1..=3);
    let n_tx = r.random_range(2..=4);
    let blocks = (0..n_ue)
        .map(|_| {
            (0..n_sub)
                .map(|_| PrecoderBlock {
                    a: r.random_range(0.0..2.0),
                    f: cvec(n_tx, r),
                    v: cvec(n_tx, r) * Complex64::from(r.random_range(0.1..3.0)),
                })
                .collect()
        })
        .collect();
    PrecoderSubproblem {
        blocks,
        half_tau: r.random_range(0.05..1.0),
        p_max: r.random_range(0.05..4.0),
    }
}

fn project(w: &mut [Vec<CVector>], p_max: f64) {
    let p = PrecoderSubproblem::power(w);
    if p > p_max {
        let s = Complex64::from((p_max / p).sqrt());
        w.iter_mut().flatten().for_each(|x| *x *= s);
    }
}

/// Accelerated projected gradient ascent on the same concave quadratic.
fn pg_oracle(sp: &PrecoderSubproblem) -> f64 {
    let lip = sp
        .blocks
        .iter()
        .flatten()
        .map(|b| 2.0 * (b.a * b.f.norm_squared() + sp.half_tau))
        .fold(0.0, f64::max);
    let step = Complex64::from(1.0 / lip);
    let zeros: Vec<Vec<CVector>> = sp
        .blocks
        .iter()
        .map(|row| row.iter().map(|b| CVector::zeros(b.f.len())).collect())
        .collect();
    let mut x = zeros.clone();
    let mut y = zeros;
    let mut t = 1.0f64;
    let mut best = sp.objective(&x);
    for _ in 0..20_000 {
        let mut next: Vec<Vec<CVector>> = sp
            .blocks
            .iter()
            .zip(&y)
            .map(|(row, yr)| {
                row.iter()
                    .zip(yr)
                    .map(|(b, yi)| {
                        let grad = &b.v
                            - &b.f * (b.f.dotc(yi) * (2.0 * b.a))
                            - yi * Complex64::from(2.0 * sp.half_tau);
                        yi + grad * step
                    })
                    .collect()
            })
            .collect();
        project(&mut next, sp.p_max);
        let obj = sp.objective(&next);
        if obj < best {
            // Restart momentum on a non-improving step.
            t = 1.0;
        }
        best = best.max(obj);
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        let mom = Complex64::from((t - 1.0) / t_next);
        y = next
            .iter()
            .zip(&x)
            .map(|(nr, xr)| nr.iter().zip(xr).map(|(a, b)| a + (a - b) * mom).collect())
            .collect();
        x = next;
        t = t_next;
    }
    best
}

/// `(worst objective gap, worst relative power excess)` of the closed-form
/// precoder update against projected gradient on random instances.
pub fn measure_precoder(instances: usize, seed: u64) -> (f64, f64) {
    let mut r = rng(seed);
    let mut gap = 0.0f64;
    let mut excess = 0.0f64;
    for _ in 0..instances {
        let sp = random_subproblem(&mut r);
        let sol = sp.solve(1e-12).unwrap();
        let ours = sp.objective(&sol.w);
        let oracle = pg_oracle(&sp);
        gap = gap.max(oracle - ours);
        excess = excess.max(PrecoderSubproblem::power(&sol.w) / sp.p_max - 1.0);
    }
    (gap, excess)
}

/// Maximiser of a concave differentiable function on `[lo, hi]` from the
/// sign of its derivative.
fn derivative_bisection(df: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    if df(lo) <= 0.0 {
        return lo;
    }
    if df(hi) >= 0.0 {
        return hi;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if df(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Worst deviation, in units of the optimisation scale, between the
/// capacitance update and a derivative bisection on each coordinate of the box QP.
pub fn measure_capacitance_qp(instances: usize, seed: u64) -> f64 {
    let circuit = RisCircuitParams::paper_default();
    let mut r = rng(seed);
    let mut worst = 0.0f64;
    for _ in 0..instances {
        let opts = SolverOptions {
            tau: r.random_range(0.01..2.0),
            ..SolverOptions::default()
        };
        let u = opts.capacitance_unit;
        let n = r.random_range(1..8);
        let c = CapacitanceVector::new(
            (0..n)
                .map(|_| r.random_range(circuit.c_min..circuit.c_max))
                .collect(),
            &circuit,
        )
        .unwrap();
        // Gradients per farad of the size seen in practice (order 1 per pF).
        let gamma: Vec<f64> = (0..n).map(|_| r.random_range(-3.0..3.0) / u).collect();
        let pi: Vec<f64> = (0..n).map(|_| r.random_range(-1.0..1.0) / u).collect();
        let out = update_capacitances(&c, &gamma, &pi, &opts, &circuit);
        for m in 0..n {
            let x0 = c.values()[m] / u;
            let lin = u * (gamma[m] + pi[m]);
            let slope = |x: f64| -opts.tau * (x - x0) + lin;
            let best = derivative_bisection(slope, circuit.c_min / u, circuit.c_max / u);
            worst = worst.max((out.values()[m] / u - best).abs());
        }
    }
    worst
}

/// Number of instances where the switch update misses the brute-force
/// optimum of its linear objective, with sizes up to `max_n`.
pub fn measure_switch_update(instances: usize, max_n: usize, seed: u64) -> usize {
    let mut r = rng(seed);
    let mut misses = 0;
    for _ in 0..instances {
        let n = r.random_range(1..=max_n);
        let gamma = DMatrix::from_fn(n, n, |_, _| r.sample::<f64, _>(rand_distr::StandardNormal));
        let pi = DMatrix::from_fn(n, n, |_, _| {
            0.3 * r.sample::<f64, _>(rand_distr::StandardNormal)
        });
        let s_t = SwitchMatrix::random(n, &mut r);
        let tau = r.random_range(0.0..1.5);
        let got = update_switch(&s_t, &gamma, &pi, tau).unwrap();
        let score = &gamma + &pi + s_t.to_real() * tau;
        let value = |s: &SwitchMatrix| score.component_mul(&s.to_real()).sum();
        let (_, best) = brute_force_lap(&score.transpose());
        if (value(&got) - best).abs() > 1e-12 * (1.0 + best.abs()) {
            misses += 1;
        }
    }
    misses
}

/// Number of instances where the assignment solver disagrees with `N!`
/// enumeration, on continuous random costs.
pub fn measure_lap(instances: usize, max_n: usize, seed: u64) -> usize {
    let mut r = rng(seed);
    let mut misses = 0;
    for _ in 0..instances {
        let n = r.random_range(1..=max_n);
        let cost = DMatrix::from_fn(n, n, |_, _| r.random_range(-10.0..10.0));
        let got = solve_lap_max(&cost).unwrap();
        let (best, value) = brute_force_lap(&cost);
        if got.assignment != best || (got.objective - value).abs() > 1e-12 * (1.0 + value.abs()) {
            misses += 1;
        }
    }
    misses
}

//! Acceptance criteria. Runs as a plain binary and prints one PASS/FAIL line
//! per criterion; exits non-zero if any fails.

mod common;

use std::path::Path;
use std::time::Instant;

use common::oracles::*;
use metasurf::channel::sample_broadcast;
use metasurf::experiment::{
    apply_axis, held_out_seed, mc_seed, run_experiment, ExperimentKind, SweepAxis,
};
use metasurf::neuroevo::*;
use metasurf::ris::{reflection_coefficient, reflection_coefficient_tractable};
use metasurf::rng;
use metasurf::sca::{initial_state, run_algorithm1, Mode};
use metasurf::scenario::{build_scenario, BroadcastConfig, Config, RisCircuitParams};
use metasurf::Exec;
use nalgebra::DMatrix;
use rand::Rng;

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

fn verdict(ok: bool, detail: String) -> Check {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn circuit_exactness() -> Check {
    let p = RisCircuitParams::paper_default();
    let lossless = RisCircuitParams { r: 0.0, ..p };
    let (mut gap, mut max_mod, mut unit_dev) = (0.0f64, 0.0f64, 0.0f64);
    for i in 0..100 {
        let f = 2.35e9 + 0.1e9 * i as f64 / 99.0;
        for j in 0..100 {
            let c = 0.2e-12 + 2.8e-12 * j as f64 / 99.0;
            let a = reflection_coefficient(f, c, &p).map_err(|e| e.to_string())?;
            let b = reflection_coefficient_tractable(f, c, &p).map_err(|e| e.to_string())?;
            gap = gap.max((a - b).norm());
            max_mod = max_mod.max(a.norm()).max(b.norm());
            let z = reflection_coefficient_tractable(f, c, &lossless).map_err(|e| e.to_string())?;
            unit_dev = unit_dev.max((z.norm() - 1.0).abs());
        }
    }
    verdict(
        gap < 1e-12 && max_mod <= 1.0 && unit_dev < 1e-12,
        format!("form gap {gap:.1e}, max |phi| {max_mod:.6}, lossless ||phi|-1| {unit_dev:.1e}"),
    )
}

fn derivative_oracles() -> Check {
    let d = measure_reflection_derivative(&RisCircuitParams::paper_default(), 1000, 1);
    let p = measure_pricing(0..3);
    let c = measure_capacitance(0..3);
    let s = measure_switch(0..3);
    verdict(
        d < 1e-6 && p < 1e-5 && c < 1e-4 && s < 1e-4,
        format!("reflection {d:.1e}, pricing {p:.1e}, capacitance {c:.1e}, switch {s:.1e}"),
    )
}

fn subproblem_optimality() -> Check {
    let (gap, excess) = measure_precoder(100, 21);
    let qp = measure_capacitance_qp(100, 22);
    let sw = measure_switch_update(100, 6, 23);
    let lap = measure_lap(1000, 7, 24);
    verdict(
        gap < 1e-6 && excess < 1e-9 && qp < 1e-10 && sw == 0 && lap == 0,
        format!("precoder gap {gap:.1e}, QP deviation {qp:.1e}, switch misses {sw}/100, LAP misses {lap}/1000"),
    )
}

struct SweepCell {
    mean: f64,
    feasible: bool,
    improved: usize,
}

fn sweep(
    base: &Config,
    axis: SweepAxis,
    values: &[f64],
    runs: usize,
) -> Result<Vec<Vec<SweepCell>>, String> {
    Mode::ALL
        .iter()
        .map(|&mode| {
            values
                .iter()
                .map(|&v| {
                    let cfg = apply_axis(base, axis, v);
                    let outs = Exec::default().map(runs, |r| {
                        let scn = build_scenario(&cfg, mc_seed(1, r))?;
                        run_algorithm1(
                            &scn,
                            &cfg.solver.with_mode(mode),
                            initial_state(&scn),
                            Exec::Sequential,
                        )
                    });
                    let outs = outs
                        .into_iter()
                        .collect::<Result<Vec<_>, _>>()
                        .map_err(|e| e.to_string())?;
                    Ok(SweepCell {
                        mean: outs.iter().map(|o| o.final_rate).sum::<f64>() / runs as f64,
                        feasible: outs.iter().all(|o| o.all_feasible),
                        improved: outs
                            .iter()
                            .filter(|o| o.final_rate >= o.initial_rate)
                            .count(),
                    })
                })
                .collect()
        })
        .collect()
}

fn mode_index(mode: Mode) -> usize {
    Mode::ALL.iter().position(|&m| m == mode).unwrap()
}

fn algorithm_behavior() -> Check {
    let powers = [20.0, 30.0, 40.0];
    let runs = 20;
    let cells = sweep(&Config::desk(), SweepAxis::TxPowerDbm, &powers, runs)?;
    let feasible = cells.iter().flatten().all(|c| c.feasible);
    let worst_improved = cells.iter().flatten().map(|c| c.improved).min().unwrap();
    let mut coop_ok = true;
    let mut bd_ok = true;
    let mut means = Vec::new();
    for (pi, p) in powers.iter().enumerate() {
        let m = |mode| cells[mode_index(mode)][pi].mean;
        let (cb, cd, nb, nd) = (
            m(Mode::new(true, true)),
            m(Mode::new(true, false)),
            m(Mode::new(false, true)),
            m(Mode::new(false, false)),
        );
        coop_ok &= cb >= nb && cd >= nd;
        bd_ok &= cb >= cd && nb >= nd;
        means.push(format!("{p} dBm {cb:.3}/{cd:.3}/{nb:.3}/{nd:.3}"));
    }
    verdict(
        feasible && worst_improved * 10 >= runs * 9 && coop_ok && bd_ok,
        format!(
            "feasible {feasible}, min improved {worst_improved}/{runs}, coop>=noncoop {coop_ok}, bd>=diag {bd_ok}; means coop-bd/coop-diag/noncoop-bd/noncoop-diag: {}",
            means.join(", ")
        ),
    )
}

fn saturation_trend() -> Check {
    let sizes = [8.0, 16.0, 32.0];
    let cells = sweep(
        &Config::desk().with_tx_power_dbm(30.0),
        SweepAxis::NRis,
        &sizes,
        20,
    )?;
    let mut ok = true;
    let mut rows = Vec::new();
    for (mode, row) in Mode::ALL.iter().zip(&cells) {
        ok &= row.windows(2).all(|w| w[1].mean >= w[0].mean);
        let m: Vec<String> = row.iter().map(|c| format!("{:.3}", c.mean)).collect();
        rows.push(format!("{mode} {}", m.join("<=")));
    }
    verdict(ok, format!("N_ris 8/16/32: {}", rows.join(", ")))
}

fn toy_broadcast() -> BroadcastConfig {
    let mut bc = BroadcastConfig::default();
    bc.ris_positions.truncate(2);
    bc.n_tx = 4;
    bc.n_ris = 16;
    bc.n_ue = 2;
    bc.kappa_db = 10.0;
    bc
}

fn controller_constraints() -> Check {
    let mut bad = 0usize;
    let mut passes = 0usize;
    let mut r = common::rng(61);
    for (n_band, bits) in [(0, 1), (1, 1), (2, 1), (1, 2)] {
        let bc = BroadcastConfig {
            n_band,
            phase_bits: bits,
            ..toy_broadcast()
        };
        for arch in [Architecture::Mbacnn, Architecture::Feedforward] {
            let ne = NeuroevoConfig {
                architecture: arch,
                ..NeuroevoConfig::default()
            };
            let ctrl = Controller::new(&bc, &ne).map_err(|e| e.to_string())?;
            let n_states = 1usize << bits;
            for i in 0..1250 {
                let g = random_genome(ctrl.layout(), r.random_range(0.1..3.0), &mut r);
                let ch = sample_broadcast(&bc, 61, i).map_err(|e| e.to_string())?;
                let d = ctrl.decide(&g, &ch).map_err(|e| e.to_string())?;
                passes += 1;
                let ris_ok = d.ris.len() == bc.ris_positions.len()
                    && d.ris.iter().all(|c| c.validate(n_states).is_ok());
                let idx_ok = d.indices.len() == bc.n_ue
                    && d.indices.iter().all(|&x| x < ctrl.codebook().len());
                if !(ris_ok && idx_ok) {
                    bad += 1;
                }
            }
        }
    }
    let mut att = 0.0f64;
    for _ in 0..200 {
        let n = r.random_range(2..9);
        let c = r.random_range(1..7);
        let mut m = |rows, cols| DMatrix::from_fn(rows, cols, |_, _| r.random_range(-2.0..2.0));
        let (x, wq, wk, wv) = (m(n, c), m(n, n), m(n, n), m(n, n));
        let a = attention_layer(&x, &wq, &wk, &wv, 8.0).map_err(|e| e.to_string())?;
        att = att.max((a - common::attention_oracle(&x, &wq, &wk, &wv, 8.0)).amax());
    }
    verdict(
        bad == 0 && att < 1e-10,
        format!("{bad} infeasible of {passes} forward passes, attention deviation {att:.1e}"),
    )
}

fn neuroevolution_sanity() -> Check {
    let bc = toy_broadcast();
    let ne = NeuroevoConfig {
        pop_size: 20,
        generations: 10,
        episodes: 10,
        horizon: 5,
        ..NeuroevoConfig::default()
    };
    let seed = 7;
    let ctrl = Controller::new(&bc, &ne).map_err(|e| e.to_string())?;
    let res = train(&ctrl, &bc, &ne, seed, Exec::default()).map_err(|e| e.to_string())?;
    let monotone = res.curve.windows(2).all(|w| w[1].best >= w[0].best);

    let mut init = rng::stream(seed, "acceptance.random_genomes", 0);
    let randoms: Vec<Genome> = (0..200)
        .map(|_| random_genome(ctrl.layout(), ne.init_std, &mut init))
        .collect();
    let fits =
        Exec::default().map_slice(&randoms, |g| evaluate_genome(&ctrl, g, &res.episodes, None));
    let fits = fits
        .into_iter()
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| e.to_string())?;
    let random_fit = fits.iter().sum::<f64>() / fits.len() as f64;

    let held = (0..200)
        .map(|i| sample_broadcast(&bc, held_out_seed(seed), i))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| e.to_string())?;
    let mut pick = rng::stream(seed, "acceptance.random_decisions", 0);
    let (mut trained, mut random) = (0.0, 0.0);
    for ch in &held {
        let d = ctrl.decide(&res.best, ch).map_err(|e| e.to_string())?;
        trained += ctrl.rate(ch, &d).map_err(|e| e.to_string())?;
        random += ctrl
            .rate(ch, &ctrl.random_decision(&mut pick))
            .map_err(|e| e.to_string())?;
    }
    let (trained, random) = (trained / 200.0, random / 200.0);
    verdict(
        monotone && res.best_fitness > random_fit && trained >= random,
        format!(
            "best fitness {:.2} -> {:.2} (monotone {monotone}), random genomes {random_fit:.2}; held-out rate {trained:.3} vs random (Phi, V) {random:.3}",
            res.curve[0].best, res.best_fitness
        ),
    )
}

fn bes_oracle() -> Check {
    let mut bc = BroadcastConfig::default();
    bc.ris_positions.truncate(1);
    bc.n_tx = 4;
    bc.n_ris = 8;
    bc.n_ue = 1;
    let ne = NeuroevoConfig {
        pop_size: 20,
        generations: 10,
        ..NeuroevoConfig::default()
    };
    let ctrl = Controller::new(&bc, &ne).map_err(|e| e.to_string())?;
    let res = train(&ctrl, &bc, &ne, 3, Exec::default()).map_err(|e| e.to_string())?;
    let mut r = common::rng(81);
    let mut genomes = vec![res.best];
    genomes.extend((0..4).map(|_| random_genome(ctrl.layout(), 1.0, &mut r)));
    let mut violations = 0;
    let mut n = 0;
    for i in 0..100 {
        let ch = sample_broadcast(&bc, held_out_seed(3), i).map_err(|e| e.to_string())?;
        let bes = bes_baseline(&ctrl, &ch, 4, DEFAULT_SEARCH_CAP).map_err(|e| e.to_string())?;
        for g in &genomes {
            let d = ctrl.decide_blocked(g, &ch, 4).map_err(|e| e.to_string())?;
            let rate = ctrl.rate(&ch, &d).map_err(|e| e.to_string())?;
            n += 1;
            if rate > bes.rate + 1e-12 * bes.rate.max(1.0) {
                violations += 1;
            }
        }
    }
    verdict(
        violations == 0,
        format!("{violations} of {n} blocked controller decisions beat the exhaustive search"),
    )
}

fn read_all(dir: &Path, files: &[std::path::PathBuf]) -> Vec<(String, Vec<u8>)> {
    files
        .iter()
        .map(|f| {
            let name = f.strip_prefix(dir).unwrap().display().to_string();
            (name, std::fs::read(f).unwrap())
        })
        .collect()
}

fn reproducibility() -> Check {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut sca = Config::desk();
    sca.experiment.mc_runs = 3;
    sca.experiment.trace = true;
    let mut ne = Config::desk();
    ne.broadcast = toy_broadcast();
    ne.neuroevo.pop_size = 6;
    ne.neuroevo.generations = 3;
    ne.neuroevo.episodes = 2;
    ne.neuroevo.held_out = 20;
    ne.neuroevo.random_samples = 20;
    ne.experiment.kind = ExperimentKind::NeTrain;
    let mut base = ne.clone();
    base.broadcast.ris_positions.truncate(1);
    base.broadcast.n_ris = 8;
    base.broadcast.n_ue = 1;
    base.experiment.kind = ExperimentKind::Baselines;

    let mut checked = 0;
    for cfg in [&sca, &ne, &base] {
        let name = cfg.experiment.kind.name();
        let runs: Vec<_> = [
            ("a", Exec::default()),
            ("b", Exec::default()),
            ("c", Exec::Sequential),
        ]
        .into_iter()
        .map(|(tag, exec)| {
            let dir = tmp.path().join(format!("{name}-{tag}"));
            let rep = run_experiment(cfg, 99, &dir, exec).map_err(|e| e.to_string())?;
            Ok(read_all(&dir, &rep.files))
        })
        .collect::<Result<_, String>>()?;
        if runs[0] != runs[1] || runs[0] != runs[2] {
            return verdict(false, format!("{name} outputs differ between runs"));
        }
        checked += runs[0].len();
    }
    verdict(
        true,
        format!("{checked} files byte-identical across repeated, parallel and sequential runs"),
    )
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("circuit-model exactness", circuit_exactness),
        ("derivative oracles", derivative_oracles),
        ("subproblem optimality", subproblem_optimality),
        ("solver behavior", algorithm_behavior),
        ("saturation trend", saturation_trend),
        ("controller constraints", controller_constraints),
        ("neuroevolution sanity", neuroevolution_sanity),
        ("exhaustive block search bound", bes_oracle),
        ("reproducibility", reproducibility),
    ];
    let filter: Vec<String> = std::env::args()
        .skip(1)
        .filter(|a| !a.starts_with('-'))
        .collect();
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let id = (i + 1).to_string();
        if !filter.is_empty() && !filter.iter().any(|f| *f == id || name.contains(f.as_str())) {
            continue;
        }
        let t = Instant::now();
        let result = check();
        let secs = t.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("criterion {id} {name}: PASS ({secs:.1} s) {detail}"),
            Err(detail) => {
                failed += 1;
                println!("criterion {id} {name}: FAIL ({secs:.1} s) {detail}");
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use metasurf::experiment::mc_seed;
use metasurf::neuroevo::{
    evaluate_genome, random_genome, Controller, EpisodeSet, NeuroevoConfig, Population,
};
use metasurf::rng;
use metasurf::sca::{initial_state, run_algorithm1};
use metasurf::scenario::{build_scenario, BroadcastConfig, Config};
use metasurf::Exec;

const POLICIES: [(&str, Exec); 2] = [
    ("sequential", Exec::Sequential),
    ("parallel", Exec::Parallel),
];

fn mc_runs(c: &mut Criterion) {
    let mut cfg = Config::desk();
    cfg.solver.max_iterations = 5;
    let mut g = c.benchmark_group("mc_runs");
    g.sample_size(10);
    for (name, exec) in POLICIES {
        g.bench_function(BenchmarkId::new(name, 8), |b| {
            b.iter(|| {
                exec.map(8, |r| {
                    let scn = build_scenario(&cfg, mc_seed(0, r)).unwrap();
                    run_algorithm1(&scn, &cfg.solver, initial_state(&scn), Exec::Sequential)
                        .unwrap()
                        .final_rate
                })
            })
        });
    }
    g.finish();
}

fn per_bs_updates(c: &mut Criterion) {
    let mut cfg = Config::paper_default();
    cfg.arrays.n_ris = 32;
    cfg.solver.max_iterations = 2;
    let scn = build_scenario(&cfg, 1).unwrap();
    let mut g = c.benchmark_group("per_bs_updates");
    g.sample_size(10);
    for (name, exec) in POLICIES {
        g.bench_function(name, |b| {
            b.iter(|| {
                run_algorithm1(&scn, &cfg.solver, initial_state(&scn), exec)
                    .unwrap()
                    .final_rate
            })
        });
    }
    g.finish();
}

fn population_eval(c: &mut Criterion) {
    let mut bc = BroadcastConfig::default();
    bc.ris_positions.truncate(2);
    bc.n_tx = 4;
    bc.n_ris = 16;
    bc.n_ue = 2;
    let ne = NeuroevoConfig::default();
    let ctrl = Controller::new(&bc, &ne).unwrap();
    let episodes = EpisodeSet::sample(&bc, 3, 2, 5).unwrap();
    let mut r = rng::stream(0, "bench", 0);
    let genomes: Vec<_> = (0..32)
        .map(|_| random_genome(ctrl.layout(), 0.5, &mut r))
        .collect();
    let mut g = c.benchmark_group("population_eval");
    g.sample_size(10);
    for (name, exec) in POLICIES {
        g.bench_function(BenchmarkId::new(name, genomes.len()), |b| {
            b.iter(|| {
                let mut pop = Population::new(genomes.clone());
                pop.evaluate(exec, |x| evaluate_genome(&ctrl, x, &episodes, None))
                    .unwrap();
                pop.best().unwrap().1
            })
        });
    }
    g.finish();
}

criterion_group!(benches, mc_runs, per_bs_updates, population_eval);
criterion_main!(benches);

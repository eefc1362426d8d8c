use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use super::arch::ArchitectureSpec;
use super::controller::Controller;
use super::genome::{Genome, ParamLayout};
use super::NeuroevoConfig;
use crate::channel::{sample_broadcast, NarrowbandChannelSet};
use crate::error::{Error, Result};
use crate::par::Exec;
use crate::rng;
use crate::scenario::BroadcastConfig;

/// `N_EP` episodes of `T` independent channel draws; draw `(p, t)` uses
/// stream index `p T + t`.
#[derive(Debug, Clone)]
pub struct EpisodeSet {
    pub n_episodes: usize,
    pub horizon: usize,
    /// Flattened `[p][t]`.
    pub channels: Vec<NarrowbandChannelSet>,
}

impl EpisodeSet {
    pub fn sample(
        bc: &BroadcastConfig,
        seed: u64,
        n_episodes: usize,
        horizon: usize,
    ) -> Result<Self> {
        let channels = (0..n_episodes * horizon)
            .map(|i| sample_broadcast(bc, seed, i as u64))
            .collect::<Result<_>>()?;
        Ok(Self {
            n_episodes,
            horizon,
            channels,
        })
    }

    pub fn from_channels(channels: Vec<NarrowbandChannelSet>, horizon: usize) -> Self {
        Self {
            n_episodes: channels.len() / horizon.max(1),
            horizon,
            channels,
        }
    }
}

/// Accumulated sum rate `sum_p sum_t R_p(t)` over every draw. With
/// `sample_seed` the codewords are drawn from the fusion softmax using a
/// stream per draw, so the value is still a pure function of its inputs.
pub fn evaluate_genome(
    ctrl: &Controller,
    genome: &Genome,
    episodes: &EpisodeSet,
    sample_seed: Option<u64>,
) -> Result<f64> {
    let mut total = 0.0;
    for (i, ch) in episodes.channels.iter().enumerate() {
        let decision = match sample_seed {
            None => ctrl.decide(genome, ch)?,
            Some(s) => {
                ctrl.decide_sampled(genome, ch, &mut rng::stream(s, "neuroevo.sample", i as u64))?
            }
        };
        total += ctrl.rate(ch, &decision)?;
    }
    Ok(total)
}

/// Gaussian genome with standard deviation `std`.
pub fn random_genome<R: Rng + ?Sized>(layout: &ParamLayout, std: f64, rng: &mut R) -> Genome {
    let v = (0..layout.len())
        .map(|_| std * Distribution::<f64>::sample(&StandardNormal, rng))
        .collect::<Vec<f64>>();
    Genome::new(v, layout).expect("finite gaussian weights")
}

#[derive(Debug, Clone, PartialEq)]
pub struct Population {
    pub genomes: Vec<Genome>,
    /// `None` until evaluated.
    pub fitness: Vec<Option<f64>>,
    pub generation: usize,
}

impl Population {
    pub fn new(genomes: Vec<Genome>) -> Self {
        let n = genomes.len();
        Self {
            genomes,
            fitness: vec![None; n],
            generation: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.genomes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.genomes.is_empty()
    }

    /// Fills in missing fitness values, evaluating under `exec`.
    pub fn evaluate(
        &mut self,
        exec: Exec,
        eval: impl Fn(&Genome) -> Result<f64> + Sync,
    ) -> Result<()> {
        let todo: Vec<usize> = (0..self.len())
            .filter(|&i| self.fitness[i].is_none())
            .collect();
        let genomes = &self.genomes;
        let values = exec.map(todo.len(), |j| eval(&genomes[todo[j]]));
        for (i, v) in todo.into_iter().zip(values) {
            let v = v?;
            if !v.is_finite() {
                return Err(Error::Solver(format!(
                    "fitness of genome {i} is not finite"
                )));
            }
            self.fitness[i] = Some(v);
        }
        Ok(())
    }

    fn evaluated(&self) -> Result<Vec<f64>> {
        self.fitness
            .iter()
            .enumerate()
            .map(|(i, f)| {
                f.ok_or_else(|| Error::Solver(format!("genome {i} has not been evaluated")))
            })
            .collect()
    }

    /// Indices sorted by descending fitness, ties by position.
    pub fn ranking(&self) -> Result<Vec<usize>> {
        let f = self.evaluated()?;
        let mut idx: Vec<usize> = (0..f.len()).collect();
        idx.sort_by(|&a, &b| f[b].total_cmp(&f[a]));
        Ok(idx)
    }

    pub fn best(&self) -> Result<(usize, f64)> {
        let i = self.ranking()?[0];
        Ok((i, self.fitness[i].expect("ranked genomes are evaluated")))
    }

    pub fn mean_fitness(&self) -> Result<f64> {
        let f = self.evaluated()?;
        Ok(f.iter().sum::<f64>() / f.len() as f64)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CosyneParams {
    pub mutation_prob: f64,
    pub mutation_variance: f64,
    pub elite_fraction: f64,
}

impl CosyneParams {
    pub fn from_config(ne: &NeuroevoConfig) -> Self {
        Self {
            mutation_prob: ne.mutation_prob,
            mutation_variance: ne.mutation_variance,
            elite_fraction: ne.elite_fraction,
        }
    }

    /// `max(2, ceil(fraction L))`, capped at `L`.
    pub fn n_elite(&self, pop: usize) -> usize {
        ((self.elite_fraction * pop as f64).ceil() as usize)
            .max(2)
            .min(pop)
    }
}

/// One generation: keep the elite with their fitness, fill the rest with
/// one-point crossovers of two random elites plus Gaussian mutation, then
/// permute every gene independently across the offspring.
pub fn cosyne_step<R: Rng + ?Sized>(
    pop: &Population,
    params: &CosyneParams,
    rng: &mut R,
) -> Result<Population> {
    if pop.len() < 2 {
        return Err(Error::config(
            "neuroevo.pop_size",
            "CoSyNE needs at least two genomes",
        ));
    }
    let order = pop.ranking()?;
    let n_elite = params.n_elite(pop.len());
    let elite = &order[..n_elite];
    let n_genes = pop.genomes[0].len();
    let noise = Normal::new(0.0, params.mutation_variance.sqrt())
        .map_err(|e| Error::config("neuroevo.mutation_variance", e.to_string()))?;

    let mut offspring: Vec<Vec<f64>> = (0..pop.len() - n_elite)
        .map(|_| {
            let a = elite[rng.random_range(0..n_elite)];
            let mut b = elite[rng.random_range(0..n_elite - 1)];
            if b == a {
                b = elite[n_elite - 1];
            }
            let cut = if n_genes > 1 {
                rng.random_range(1..n_genes)
            } else {
                0
            };
            let (pa, pb) = (pop.genomes[a].as_slice(), pop.genomes[b].as_slice());
            let mut child: Vec<f64> = pa[..cut].iter().chain(&pb[cut..]).copied().collect();
            for g in child.iter_mut() {
                if rng.random::<f64>() < params.mutation_prob {
                    *g += noise.sample(rng);
                }
            }
            child
        })
        .collect();

    let mut column = Vec::with_capacity(offspring.len());
    for gene in 0..n_genes {
        column.clear();
        column.extend(offspring.iter().map(|c| c[gene]));
        column.shuffle(rng);
        for (c, &v) in offspring.iter_mut().zip(&column) {
            c[gene] = v;
        }
    }

    let mut genomes = Vec::with_capacity(pop.len());
    let mut fitness = Vec::with_capacity(pop.len());
    for &i in elite {
        genomes.push(pop.genomes[i].clone());
        fitness.push(pop.fitness[i]);
    }
    for c in offspring {
        genomes.push(Genome::from_values(c));
        fitness.push(None);
    }
    Ok(Population {
        genomes,
        fitness,
        generation: pop.generation + 1,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GenerationStats {
    pub generation: usize,
    pub best: f64,
    pub mean: f64,
}

#[derive(Debug, Clone)]
pub struct TrainResult {
    pub best: Genome,
    pub best_fitness: f64,
    pub curve: Vec<GenerationStats>,
    pub episodes: EpisodeSet,
}

/// Seed of the fixed training episodes.
pub fn episode_seed(seed: u64) -> u64 {
    rng::child_seed(seed, "neuroevo.episodes", 0)
}

/// Evolves a population for `N_gen` generations on one fixed episode set.
pub fn train(
    ctrl: &Controller,
    bc: &BroadcastConfig,
    ne: &NeuroevoConfig,
    seed: u64,
    exec: Exec,
) -> Result<TrainResult> {
    ne.validate()?;
    let episodes = EpisodeSet::sample(bc, episode_seed(seed), ne.episodes, ne.horizon)?;
    let sample_seed = ne
        .sample_precoders
        .then(|| rng::child_seed(seed, "neuroevo.sample", 0));
    let mut init = rng::stream(seed, "neuroevo.init", 0);
    let mut evo = rng::stream(seed, "neuroevo.evolve", 0);
    let mut pop = Population::new(
        (0..ne.pop_size)
            .map(|_| random_genome(ctrl.layout(), ne.init_std, &mut init))
            .collect(),
    );
    let params = CosyneParams::from_config(ne);
    let mut curve = Vec::with_capacity(ne.generations);
    for g in 0..ne.generations {
        pop.evaluate(exec, |x| evaluate_genome(ctrl, x, &episodes, sample_seed))?;
        curve.push(GenerationStats {
            generation: g,
            best: pop.best()?.1,
            mean: pop.mean_fitness()?,
        });
        if g + 1 < ne.generations {
            pop = cosyne_step(&pop, &params, &mut evo)?;
        }
    }
    let (i, best_fitness) = pop.best()?;
    Ok(TrainResult {
        best: pop.genomes[i].clone(),
        best_fitness,
        curve,
        episodes,
    })
}

/// Serialized controller: architecture, layout and the flat genome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format_version: u32,
    pub architecture: ArchitectureSpec,
    pub layout: ParamLayout,
    pub fitness: f64,
    pub genome: Genome,
}

impl Checkpoint {
    pub const FORMAT_VERSION: u32 = 1;

    pub fn new(ctrl: &Controller, genome: Genome, fitness: f64) -> Self {
        Self {
            format_version: Self::FORMAT_VERSION,
            architecture: ctrl.spec().clone(),
            layout: ctrl.layout().clone(),
            fitness,
            genome,
        }
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let text = serde_json::to_string_pretty(self).expect("checkpoint serializes");
        std::fs::write(path, text + "\n")?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let ck: Checkpoint = serde_json::from_str(&text).map_err(|e| Error::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        if ck.format_version != Self::FORMAT_VERSION {
            return Err(Error::config(
                "format_version",
                format!("unsupported checkpoint version {}", ck.format_version),
            ));
        }
        Genome::new(ck.genome.as_slice().to_vec(), &ck.layout)?;
        Ok(ck)
    }
}

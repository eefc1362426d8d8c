//! Batch experiments: SCA sweeps, neuroevolution training and baseline
//! comparisons, written as CSV plus a JSON manifest.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::channel::{sample_broadcast, write_channel_dump};
use crate::error::{Error, Result};
use crate::metrics::McSummary;
use crate::neuroevo::{
    bes_baseline, bes_space_size, train, Architecture, Checkpoint, Controller, NeuroevoConfig,
    TrainResult,
};
use crate::par::Exec;
use crate::rng;
use crate::sca::{initial_state, run_algorithm1, Mode, TraceRow};
use crate::scenario::{build_scenario, Config};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    ScaSweep,
    NeTrain,
    Baselines,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 3] = [
        ExperimentKind::ScaSweep,
        ExperimentKind::NeTrain,
        ExperimentKind::Baselines,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            ExperimentKind::ScaSweep => "sca-sweep",
            ExperimentKind::NeTrain => "ne-train",
            ExperimentKind::Baselines => "baselines",
        }
    }

    pub fn description(&self) -> &'static str {
        match self {
            ExperimentKind::ScaSweep => {
                "multi-cell wideband solver, mean sum rate per mode along a sweep axis"
            }
            ExperimentKind::NeTrain => {
                "evolve the broadcast controller; checkpoint plus fitness curve"
            }
            ExperimentKind::Baselines => {
                "broadcast controllers against random and exhaustive block search"
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepAxis {
    TxPowerDbm,
    NRis,
    NTx,
}

impl SweepAxis {
    pub fn name(&self) -> &'static str {
        match self {
            SweepAxis::TxPowerDbm => "tx_power_dbm",
            SweepAxis::NRis => "n_ris",
            SweepAxis::NTx => "n_tx",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentPlan {
    pub kind: ExperimentKind,
    pub axis: SweepAxis,
    pub values: Vec<f64>,
    pub modes: Vec<Mode>,
    pub mc_runs: usize,
    /// Write the iteration trace of the first run of every sweep point.
    pub trace: bool,
    /// Write the channels of the first Monte-Carlo run as CSV.
    pub channel_dump: bool,
}

impl Default for ExperimentPlan {
    fn default() -> Self {
        Self {
            kind: ExperimentKind::ScaSweep,
            axis: SweepAxis::TxPowerDbm,
            values: vec![20.0, 30.0, 40.0],
            modes: Mode::ALL.to_vec(),
            mc_runs: 20,
            trace: false,
            channel_dump: false,
        }
    }
}

impl ExperimentPlan {
    pub fn validate(&self) -> Result<()> {
        if self.values.is_empty() {
            return Err(Error::config(
                "experiment.values",
                "sweep axis needs at least one value",
            ));
        }
        if let Some(i) = self.values.iter().position(|v| !v.is_finite()) {
            return Err(Error::config(
                format!("experiment.values[{i}]"),
                "non-finite",
            ));
        }
        if matches!(self.axis, SweepAxis::NRis | SweepAxis::NTx) {
            if let Some(i) = self
                .values
                .iter()
                .position(|v| *v < 1.0 || v.fract() != 0.0)
            {
                return Err(Error::config(
                    format!("experiment.values[{i}]"),
                    "array sizes must be positive integers",
                ));
            }
        }
        if self.modes.is_empty() {
            return Err(Error::config(
                "experiment.modes",
                "at least one mode is required",
            ));
        }
        if self.mc_runs == 0 {
            return Err(Error::config("experiment.mc_runs", "must be at least 1"));
        }
        Ok(())
    }
}

/// Files written by one experiment, in the order they were produced.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ExperimentReport {
    pub files: Vec<PathBuf>,
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    experiment: &'static str,
    seed: u64,
    files: Vec<String>,
    config: &'a Config,
}

/// Seed of Monte-Carlo run `r`; shared by every mode and sweep point so the
/// compared variants see the same channel draws.
pub fn mc_seed(seed: u64, r: usize) -> u64 {
    rng::child_seed(seed, "experiment.mc", r as u64)
}

/// The configuration of sweep point `value`.
pub fn apply_axis(config: &Config, axis: SweepAxis, value: f64) -> Config {
    let mut cfg = config.clone();
    match axis {
        SweepAxis::TxPowerDbm => cfg = cfg.with_tx_power_dbm(value),
        SweepAxis::NRis => cfg.arrays.n_ris = value as usize,
        SweepAxis::NTx => cfg.arrays.n_tx = value as usize,
    }
    cfg
}

struct Writer {
    dir: PathBuf,
    files: Vec<PathBuf>,
}

impl Writer {
    fn write(&mut self, name: &str, contents: &str) -> Result<()> {
        let path = self.dir.join(name);
        std::fs::write(&path, contents)?;
        self.files.push(path);
        Ok(())
    }
}

/// Runs the experiment described by `config.experiment` and writes its CSV
/// files plus `manifest.json` into `out`. Identical `(config, seed)` give
/// byte-identical files for any worker count.
pub fn run_experiment(
    config: &Config,
    seed: u64,
    out: &Path,
    exec: Exec,
) -> Result<ExperimentReport> {
    config.validate()?;
    std::fs::create_dir_all(out)?;
    let mut w = Writer {
        dir: out.to_path_buf(),
        files: Vec::new(),
    };
    match config.experiment.kind {
        ExperimentKind::ScaSweep => run_sca_sweep(config, seed, exec, &mut w)?,
        ExperimentKind::NeTrain => run_ne_train(config, seed, exec, &mut w)?,
        ExperimentKind::Baselines => run_baselines(config, seed, exec, &mut w)?,
    }
    let manifest = Manifest {
        tool: "metasurf",
        version: env!("CARGO_PKG_VERSION"),
        experiment: config.experiment.kind.name(),
        seed,
        files: w
            .files
            .iter()
            .map(|p| {
                p.file_name()
                    .unwrap_or_default()
                    .to_string_lossy()
                    .into_owned()
            })
            .collect(),
        config,
    };
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes") + "\n";
    w.write("manifest.json", &text)?;
    Ok(ExperimentReport { files: w.files })
}

struct RunResult {
    rate: f64,
    converged: bool,
    trace: Option<Vec<TraceRow>>,
}

fn run_sca_sweep(config: &Config, seed: u64, exec: Exec, w: &mut Writer) -> Result<()> {
    let plan = &config.experiment;
    let points: Vec<Config> = plan
        .values
        .iter()
        .map(|&v| apply_axis(config, plan.axis, v))
        .collect();
    for p in &points {
        p.validate()?;
    }
    if plan.channel_dump {
        let scn = build_scenario(&points[0], mc_seed(seed, 0))?;
        let mut buf = Vec::new();
        write_channel_dump(&scn.channels, &mut buf)?;
        w.write(
            "channels_run0.csv",
            &String::from_utf8(buf).expect("ascii csv"),
        )?;
    }
    let (n_modes, n_points, n_runs) = (plan.modes.len(), points.len(), plan.mc_runs);
    // Jobs ordered by (mode, sweep point, run).
    let results = exec.map(n_modes * n_points * n_runs, |job| -> Result<RunResult> {
        let mode = plan.modes[job / (n_points * n_runs)];
        let cfg = &points[(job / n_runs) % n_points];
        let r = job % n_runs;
        let scn = build_scenario(cfg, mc_seed(seed, r))?;
        let opts = cfg.solver.with_mode(mode);
        let outcome = run_algorithm1(&scn, &opts, initial_state(&scn), Exec::Sequential)?;
        Ok(RunResult {
            rate: outcome.final_rate,
            converged: outcome.converged,
            trace: (plan.trace && r == 0).then_some(outcome.trace),
        })
    });
    let results = results.into_iter().collect::<Result<Vec<_>>>()?;
    let axis = plan.axis.name();
    for (mi, mode) in plan.modes.iter().enumerate() {
        let mut csv = format!("{axis},mean_sum_rate,stderr,n_runs,converged_fraction\n");
        for (pi, value) in plan.values.iter().enumerate() {
            let runs = &results[(mi * n_points + pi) * n_runs..(mi * n_points + pi + 1) * n_runs];
            let summary = McSummary::from_values(runs.iter().map(|r| r.rate).collect())?;
            let conv = runs.iter().filter(|r| r.converged).count() as f64 / n_runs as f64;
            writeln!(
                csv,
                "{value},{},{},{},{conv}",
                summary.mean, summary.stderr, summary.n_runs
            )
            .unwrap();
            if let Some(trace) = &runs[0].trace {
                w.write(&format!("trace_{mode}_{axis}_{pi}.csv"), &trace_csv(trace))?;
            }
        }
        w.write(&format!("sca_{mode}.csv"), &csv)?;
    }
    Ok(())
}

fn trace_csv(trace: &[TraceRow]) -> String {
    let n_cells = trace.first().map_or(0, |r| r.cell_rates.len());
    let mut csv = String::from("iteration,sum_rate");
    for k in 0..n_cells {
        write!(csv, ",cell{k}_rate").unwrap();
    }
    csv.push_str(",alpha\n");
    for row in trace {
        write!(csv, "{},{}", row.iteration, row.sum_rate).unwrap();
        for r in &row.cell_rates {
            write!(csv, ",{r}").unwrap();
        }
        writeln!(csv, ",{}", row.alpha).unwrap();
    }
    csv
}

fn fitness_csv(res: &TrainResult) -> String {
    let mut csv = String::from("generation,best_fitness,mean_fitness\n");
    for g in &res.curve {
        writeln!(csv, "{},{},{}", g.generation, g.best, g.mean).unwrap();
    }
    csv
}

fn run_ne_train(config: &Config, seed: u64, exec: Exec, w: &mut Writer) -> Result<()> {
    let ctrl = Controller::new(&config.broadcast, &config.neuroevo)?;
    let res = train(&ctrl, &config.broadcast, &config.neuroevo, seed, exec)?;
    w.write("fitness.csv", &fitness_csv(&res))?;
    let ck = Checkpoint::new(&ctrl, res.best, res.best_fitness);
    let path = w.dir.join("checkpoint.json");
    ck.save(&path)?;
    w.files.push(path);
    Ok(())
}

/// Seed of the held-out channels used by the baseline comparison.
pub fn held_out_seed(seed: u64) -> u64 {
    rng::child_seed(seed, "experiment.held_out", 0)
}

fn run_baselines(config: &Config, seed: u64, exec: Exec, w: &mut Writer) -> Result<()> {
    let bc = &config.broadcast;
    let ne = &config.neuroevo;
    let held = (0..ne.held_out)
        .map(|i| sample_broadcast(bc, held_out_seed(seed), i as u64))
        .collect::<Result<Vec<_>>>()?;
    let mut csv = String::from("method,mean_sum_rate,stderr,n,params\n");
    let row =
        |csv: &mut String, name: &str, values: Vec<f64>, params: Option<usize>| -> Result<()> {
            let s = McSummary::from_values(values)?;
            let p = params.map(|p| p.to_string()).unwrap_or_default();
            writeln!(csv, "{name},{},{},{},{p}", s.mean, s.stderr, s.n_runs).unwrap();
            Ok(())
        };

    let mut mbacnn = None;
    for arch in [Architecture::Mbacnn, Architecture::Feedforward] {
        let cfg = NeuroevoConfig {
            architecture: arch,
            ..ne.clone()
        };
        let ctrl = Controller::new(bc, &cfg)?;
        let res = train(&ctrl, bc, &cfg, seed, exec)?;
        let values = exec
            .map(held.len(), |i| {
                ctrl.rate(&held[i], &ctrl.decide(&res.best, &held[i])?)
            })
            .into_iter()
            .collect::<Result<Vec<_>>>()?;
        let name = match arch {
            Architecture::Mbacnn => "ne-mbacnn",
            Architecture::Feedforward => "ne-ff",
        };
        w.write(&format!("fitness_{name}.csv"), &fitness_csv(&res))?;
        row(&mut csv, name, values, Some(ctrl.param_count()))?;
        if arch == Architecture::Mbacnn {
            mbacnn = Some((ctrl, res.best));
        }
    }
    let (ctrl, best) = mbacnn.expect("mbacnn trained");

    let mut r = rng::stream(seed, "experiment.random_decision", 0);
    let random: Vec<f64> = (0..ne.random_samples)
        .map(|j| {
            let d = ctrl.random_decision(&mut r);
            ctrl.rate(&held[j % held.len()], &d)
        })
        .collect::<Result<_>>()?;
    row(&mut csv, "random", random, None)?;

    let spec = ctrl.spec();
    let blockable = spec.phase_bits == 1 && spec.n_band == 0 && ne.n_blocks <= spec.n_ris;
    let size = bes_space_size(spec.n_surfaces, ne.n_blocks, spec.codebook_size, spec.n_ue);
    if blockable && size <= ne.search_cap as u128 {
        let pairs = exec
            .map(held.len(), |i| -> Result<(f64, f64)> {
                let bes = bes_baseline(&ctrl, &held[i], ne.n_blocks, ne.search_cap as u128)?;
                let d = ctrl.decide_blocked(&best, &held[i], ne.n_blocks)?;
                Ok((bes.rate, ctrl.rate(&held[i], &d)?))
            })
            .into_iter()
            .collect::<Result<Vec<_>>>()?;
        row(&mut csv, "bes", pairs.iter().map(|p| p.0).collect(), None)?;
        row(
            &mut csv,
            "ne-mbacnn-blocked",
            pairs.iter().map(|p| p.1).collect(),
            Some(ctrl.param_count()),
        )?;
    }
    w.write("baselines.csv", &csv)?;
    Ok(())
}

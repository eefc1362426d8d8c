//! Experiment configuration and scenario construction.
//!
//! A [`Config`] is the JSON document the CLI loads. [`build_scenario`] turns
//! it plus a seed into an immutable [`WidebandScenario`] holding every channel
//! the multi-cell solver needs. [`BroadcastConfig`] describes the single-BS
//! narrowband setting driven by the neural controllers.

use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{self, CVector, WidebandChannelSet};
use crate::error::{Error, Result};
use crate::experiment::ExperimentPlan;
use crate::neuroevo::NeuroevoConfig;
use crate::rng;
use crate::sca::SolverOptions;

pub type Point3 = [f64; 3];
pub type Point2 = [f64; 2];

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Node placement for the multi-cell system. BS `k` owns RIS `k` and the UEs
/// of cluster `k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Geometry {
    pub bs_positions: Vec<Point3>,
    pub ris_positions: Vec<Point3>,
    /// Cluster centres on the xy-plane.
    pub ue_cluster_centers: Vec<Point2>,
    pub cluster_radius: f64,
    pub ue_counts_per_cell: Vec<usize>,
    #[serde(default = "default_ue_height")]
    pub ue_height: f64,
    /// Azimuth rotation (degrees, about z) of every array relative to the
    /// xz-plane.
    #[serde(default)]
    pub array_boresight_deg: f64,
}

fn default_ue_height() -> f64 {
    1.5
}

impl Geometry {
    pub fn n_cells(&self) -> usize {
        self.bs_positions.len()
    }

    pub fn n_ues(&self) -> usize {
        self.ue_counts_per_cell.iter().sum()
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.bs_positions.len();
        if k == 0 {
            return Err(Error::config(
                "geometry.bs_positions",
                "at least one BS is required",
            ));
        }
        for (name, len) in [
            ("geometry.ris_positions", self.ris_positions.len()),
            ("geometry.ue_cluster_centers", self.ue_cluster_centers.len()),
            ("geometry.ue_counts_per_cell", self.ue_counts_per_cell.len()),
        ] {
            if len != k {
                return Err(Error::config(
                    name,
                    format!("expected {k} entries (one per BS), got {len}"),
                ));
            }
        }
        check_points("geometry.bs_positions", &self.bs_positions)?;
        check_points("geometry.ris_positions", &self.ris_positions)?;
        for (i, c) in self.ue_cluster_centers.iter().enumerate() {
            if !c.iter().all(|v| v.is_finite()) {
                return Err(Error::config(
                    format!("geometry.ue_cluster_centers[{i}]"),
                    "non-finite coordinate",
                ));
            }
        }
        for (i, p) in self.ris_positions.iter().enumerate() {
            if self.bs_positions.contains(p) {
                return Err(Error::config(
                    format!("geometry.ris_positions[{i}]"),
                    "coincides with a BS position",
                ));
            }
        }
        if !(self.cluster_radius.is_finite() && self.cluster_radius >= 0.0) {
            return Err(Error::config(
                "geometry.cluster_radius",
                "must be finite and non-negative",
            ));
        }
        if let Some(i) = self.ue_counts_per_cell.iter().position(|&l| l == 0) {
            return Err(Error::config(
                format!("geometry.ue_counts_per_cell[{i}]"),
                "every cell needs at least one UE",
            ));
        }
        if !self.ue_height.is_finite() {
            return Err(Error::config("geometry.ue_height", "non-finite"));
        }
        if !self.array_boresight_deg.is_finite() {
            return Err(Error::config("geometry.array_boresight_deg", "non-finite"));
        }
        Ok(())
    }

    /// Geometry of the four-cell deployment used as the default.
    pub fn paper_default() -> Self {
        Self {
            bs_positions: vec![
                [0.0, 0.0, 5.0],
                [60.0, 0.0, 5.0],
                [0.0, 120.0, 5.0],
                [60.0, 120.0, 5.0],
            ],
            ris_positions: vec![
                [22.5, 63.75, 3.0],
                [37.5, 63.75, 3.0],
                [22.5, 56.25, 3.0],
                [37.5, 56.25, 3.0],
            ],
            ue_cluster_centers: vec![[20.0, 60.0], [40.0, 60.0], [25.0, 60.0], [35.0, 60.0]],
            cluster_radius: 3.0,
            ue_counts_per_cell: vec![2, 3, 4, 5],
            ue_height: default_ue_height(),
            array_boresight_deg: 0.0,
        }
    }

    /// Keeps the first `k` cells.
    pub fn truncated(&self, k: usize) -> Self {
        let k = k.min(self.n_cells());
        Self {
            bs_positions: self.bs_positions[..k].to_vec(),
            ris_positions: self.ris_positions[..k].to_vec(),
            ue_cluster_centers: self.ue_cluster_centers[..k].to_vec(),
            ue_counts_per_cell: self.ue_counts_per_cell[..k].to_vec(),
            ..self.clone()
        }
    }
}

fn check_points(field: &str, pts: &[Point3]) -> Result<()> {
    for (i, p) in pts.iter().enumerate() {
        if !p.iter().all(|v| v.is_finite()) {
            return Err(Error::config(
                format!("{field}[{i}]"),
                "non-finite coordinate",
            ));
        }
        if pts[..i].contains(p) {
            return Err(Error::config(
                format!("{field}[{i}]"),
                "duplicate node position",
            ));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArrayConfig {
    pub n_tx: usize,
    pub n_ris: usize,
}

impl ArrayConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_tx == 0 {
            return Err(Error::config("arrays.n_tx", "must be positive"));
        }
        if self.n_ris == 0 {
            return Err(Error::config("arrays.n_ris", "must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OfdmParams {
    pub carrier_hz: f64,
    pub bandwidth_hz: f64,
    pub n_sub: usize,
    /// Number of delay taps D.
    pub n_taps: usize,
    pub cyclic_prefix: usize,
}

impl OfdmParams {
    pub fn paper_default() -> Self {
        Self {
            carrier_hz: 2.4e9,
            bandwidth_hz: 100e6,
            n_sub: 16,
            n_taps: 16,
            cyclic_prefix: 16,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.carrier_hz.is_finite() && self.carrier_hz > 0.0) {
            return Err(Error::config("ofdm.carrier_hz", "must be positive"));
        }
        if !(self.bandwidth_hz.is_finite() && self.bandwidth_hz > 0.0) {
            return Err(Error::config("ofdm.bandwidth_hz", "must be positive"));
        }
        if self.n_sub == 0 {
            return Err(Error::config("ofdm.n_sub", "must be positive"));
        }
        if self.n_taps == 0 {
            return Err(Error::config("ofdm.n_taps", "must be positive"));
        }
        if self.n_taps > self.n_sub {
            return Err(Error::config("ofdm.n_taps", "cannot exceed n_sub"));
        }
        if self.cyclic_prefix > 0 && self.n_taps > self.cyclic_prefix + 1 {
            return Err(Error::config(
                "ofdm.n_taps",
                "delay spread exceeds cyclic_prefix + 1",
            ));
        }
        Ok(())
    }

    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.carrier_hz
    }
}

/// Subcarrier centre frequencies `f_c + (BW/N)(n - (N+1)/2)` for `n = 1..=N`.
pub fn subcarrier_frequencies(ofdm: &OfdmParams) -> Vec<f64> {
    let n_sub = ofdm.n_sub as f64;
    let spacing = ofdm.bandwidth_hz / n_sub;
    (1..=ofdm.n_sub)
        .map(|n| ofdm.carrier_hz + spacing * (n as f64 - (n_sub + 1.0) / 2.0))
        .collect()
}

/// Equivalent-circuit constants of one metasurface element.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RisCircuitParams {
    pub l1: f64,
    pub l2: f64,
    pub r: f64,
    pub z0: f64,
    pub c_min: f64,
    pub c_max: f64,
}

impl RisCircuitParams {
    pub fn paper_default() -> Self {
        Self {
            l1: 2.5e-9,
            l2: 0.7e-9,
            r: 1.0,
            z0: 50.0,
            c_min: 0.2e-12,
            c_max: 3e-12,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let pos = |v: f64| v.is_finite() && v > 0.0;
        if !pos(self.l1) {
            return Err(Error::config("circuit.l1", "must be positive"));
        }
        if !pos(self.l2) {
            return Err(Error::config("circuit.l2", "must be positive"));
        }
        if !(self.r.is_finite() && self.r >= 0.0) {
            return Err(Error::config("circuit.r", "must be non-negative"));
        }
        if !pos(self.z0) {
            return Err(Error::config("circuit.z0", "must be positive"));
        }
        if !pos(self.c_min) {
            return Err(Error::config("circuit.c_min", "must be positive"));
        }
        if !(self.c_max.is_finite() && self.c_max > self.c_min) {
            return Err(Error::config("circuit.c_max", "must exceed c_min"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathlossExponents {
    pub bs_ue: f64,
    pub bs_ris: f64,
    pub ris_ue: f64,
}

impl PathlossExponents {
    pub fn paper_default() -> Self {
        Self {
            bs_ue: 3.7,
            bs_ris: 2.6,
            ris_ue: 2.2,
        }
    }

    fn validate(&self, prefix: &str) -> Result<()> {
        for (name, v) in [
            ("bs_ue", self.bs_ue),
            ("bs_ris", self.bs_ris),
            ("ris_ue", self.ris_ue),
        ] {
            if !(v.is_finite() && v >= 2.0) {
                return Err(Error::config(
                    format!("{prefix}.{name}"),
                    "pathloss exponent must be >= 2",
                ));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PowerNoiseConfig {
    /// Per-BS transmit power budget in watts, one entry per cell.
    pub p_max_w: Vec<f64>,
    pub noise_variance_w: f64,
    pub pathloss_exponents: PathlossExponents,
}

impl PowerNoiseConfig {
    pub fn validate(&self, n_cells: usize) -> Result<()> {
        if self.p_max_w.len() != n_cells {
            return Err(Error::config(
                "power_noise.p_max_w",
                format!("expected {n_cells} entries, got {}", self.p_max_w.len()),
            ));
        }
        if let Some(i) = self
            .p_max_w
            .iter()
            .position(|p| !(p.is_finite() && *p > 0.0))
        {
            return Err(Error::config(
                format!("power_noise.p_max_w[{i}]"),
                "must be positive",
            ));
        }
        if !(self.noise_variance_w.is_finite() && self.noise_variance_w > 0.0) {
            return Err(Error::config(
                "power_noise.noise_variance_w",
                "must be positive",
            ));
        }
        self.pathloss_exponents
            .validate("power_noise.pathloss_exponents")
    }
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Single-BS broadcast setting served through `K` banded metasurfaces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BroadcastConfig {
    pub bs_position: Point3,
    pub ris_positions: Vec<Point3>,
    pub ue_mean_position: Point3,
    /// Per-axis standard deviation of the UE position around the mean.
    pub ue_position_std: f64,
    pub n_tx: usize,
    pub n_ris: usize,
    pub n_ue: usize,
    /// Number of coupled super/sub-diagonals N_B.
    pub n_band: usize,
    /// Phase resolution in bits.
    pub phase_bits: u32,
    pub kappa_db: f64,
    /// Extra attenuation of the direct link; `None` means the direct link is
    /// blocked.
    pub direct_attenuation_db: Option<f64>,
    pub carrier_hz: f64,
    pub pathloss_exponents: PathlossExponents,
    pub tx_power_w: f64,
    pub noise_variance_w: f64,
    pub array_boresight_deg: f64,
}

impl Default for BroadcastConfig {
    fn default() -> Self {
        Self {
            bs_position: [0.0, 0.0, 2.0],
            ris_positions: vec![
                [3.0, 3.0, 2.0],
                [6.0, 6.0, -2.0],
                [3.0, 3.0, -2.0],
                [6.0, 6.0, 2.0],
            ],
            ue_mean_position: [9.3, 14.9, 2.1],
            ue_position_std: 1.0,
            n_tx: 16,
            n_ris: 400,
            n_ue: 1,
            n_band: 0,
            phase_bits: 1,
            kappa_db: 10.0,
            direct_attenuation_db: Some(10.0),
            carrier_hz: 2.4e9,
            pathloss_exponents: PathlossExponents {
                bs_ue: 2.0,
                bs_ris: 2.0,
                ris_ue: 2.0,
            },
            tx_power_w: 1.0,
            noise_variance_w: dbm_to_watts(-50.0),
            array_boresight_deg: 0.0,
        }
    }
}

impl BroadcastConfig {
    pub fn n_ris_surfaces(&self) -> usize {
        self.ris_positions.len()
    }

    pub fn validate(&self) -> Result<()> {
        let f = "broadcast";
        if self.ris_positions.is_empty() {
            return Err(Error::config(
                format!("{f}.ris_positions"),
                "at least one RIS is required",
            ));
        }
        check_points(&format!("{f}.ris_positions"), &self.ris_positions)?;
        if !self.bs_position.iter().all(|v| v.is_finite()) {
            return Err(Error::config(
                format!("{f}.bs_position"),
                "non-finite coordinate",
            ));
        }
        if self.ris_positions.contains(&self.bs_position) {
            return Err(Error::config(
                format!("{f}.ris_positions"),
                "coincides with the BS position",
            ));
        }
        for (name, v) in [
            ("n_tx", self.n_tx),
            ("n_ris", self.n_ris),
            ("n_ue", self.n_ue),
        ] {
            if v == 0 {
                return Err(Error::config(format!("{f}.{name}"), "must be positive"));
            }
        }
        if self.n_band >= self.n_ris.max(1) && self.n_band > 0 {
            return Err(Error::config(
                format!("{f}.n_band"),
                "must be smaller than n_ris",
            ));
        }
        if !(1..=8).contains(&self.phase_bits) {
            return Err(Error::config(format!("{f}.phase_bits"), "must be in 1..=8"));
        }
        if !self.kappa_db.is_finite() {
            return Err(Error::config(format!("{f}.kappa_db"), "non-finite"));
        }
        if !(self.ue_position_std.is_finite() && self.ue_position_std >= 0.0) {
            return Err(Error::config(
                format!("{f}.ue_position_std"),
                "must be non-negative",
            ));
        }
        if !(self.tx_power_w.is_finite() && self.tx_power_w > 0.0) {
            return Err(Error::config(format!("{f}.tx_power_w"), "must be positive"));
        }
        if !(self.noise_variance_w.is_finite() && self.noise_variance_w > 0.0) {
            return Err(Error::config(
                format!("{f}.noise_variance_w"),
                "must be positive",
            ));
        }
        if !(self.carrier_hz.is_finite() && self.carrier_hz > 0.0) {
            return Err(Error::config(format!("{f}.carrier_hz"), "must be positive"));
        }
        self.pathloss_exponents
            .validate(&format!("{f}.pathloss_exponents"))
    }

    pub fn direct_blocked(&self) -> bool {
        self.direct_attenuation_db.is_none()
    }
}

/// The full experiment document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub geometry: Geometry,
    pub arrays: ArrayConfig,
    pub ofdm: OfdmParams,
    pub circuit: RisCircuitParams,
    pub power_noise: PowerNoiseConfig,
    #[serde(default)]
    pub solver: SolverOptions,
    #[serde(default)]
    pub broadcast: BroadcastConfig,
    #[serde(default)]
    pub neuroevo: NeuroevoConfig,
    #[serde(default)]
    pub experiment: ExperimentPlan,
}

impl Config {
    /// Four cells, N_tx = 8, N_ris = 100, P_max = 30 dBm, noise -80 dBm.
    pub fn paper_default() -> Self {
        Self {
            geometry: Geometry::paper_default(),
            arrays: ArrayConfig {
                n_tx: 8,
                n_ris: 100,
            },
            ofdm: OfdmParams::paper_default(),
            circuit: RisCircuitParams::paper_default(),
            power_noise: PowerNoiseConfig {
                p_max_w: vec![dbm_to_watts(30.0); 4],
                noise_variance_w: dbm_to_watts(-80.0),
                pathloss_exponents: PathlossExponents::paper_default(),
            },
            solver: SolverOptions::default(),
            broadcast: BroadcastConfig::default(),
            neuroevo: NeuroevoConfig::default(),
            experiment: ExperimentPlan::default(),
        }
    }

    /// Two cells with L = (2, 3), N_tx = 4, N_ris = 16, N_sub = 8 taps 8.
    pub fn desk() -> Self {
        let mut cfg = Self::paper_default();
        cfg.geometry = cfg.geometry.truncated(2);
        cfg.arrays = ArrayConfig { n_tx: 4, n_ris: 16 };
        cfg.ofdm.n_sub = 8;
        cfg.ofdm.n_taps = 8;
        cfg.ofdm.cyclic_prefix = 8;
        cfg.power_noise.p_max_w = vec![dbm_to_watts(30.0); 2];
        cfg
    }

    pub fn n_cells(&self) -> usize {
        self.geometry.n_cells()
    }

    pub fn validate(&self) -> Result<()> {
        self.geometry.validate()?;
        self.arrays.validate()?;
        self.ofdm.validate()?;
        self.circuit.validate()?;
        self.power_noise.validate(self.n_cells())?;
        self.solver.validate()?;
        self.broadcast.validate()?;
        self.neuroevo.validate()?;
        self.experiment.validate()?;
        Ok(())
    }

    /// Parses and validates a JSON document. Unknown or missing fields are
    /// reported with their dotted path.
    pub fn from_json_str(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: Config = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let inner = e.into_inner();
            if inner.is_syntax() || inner.is_eof() {
                Error::Parse {
                    line: inner.line(),
                    column: inner.column(),
                    message: inner.to_string(),
                }
            } else {
                Error::Config {
                    field: path,
                    reason: strip_position(&inner.to_string()),
                }
            }
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json_str(&text)
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Sets every BS budget to `dbm`.
    pub fn with_tx_power_dbm(mut self, dbm: f64) -> Self {
        let w = dbm_to_watts(dbm);
        self.power_noise.p_max_w.iter_mut().for_each(|p| *p = w);
        self
    }
}

fn strip_position(msg: &str) -> String {
    match msg.find(" at line ") {
        Some(i) => msg[..i].to_string(),
        None => msg.to_string(),
    }
}

/// Immutable multi-cell wideband scenario.
#[derive(Debug, Clone)]
pub struct WidebandScenario {
    pub n_cells: usize,
    pub n_tx: usize,
    pub n_ris: usize,
    pub n_sub: usize,
    /// Cell index of every UE (UEs are numbered cell by cell).
    pub cell_of_ue: Vec<usize>,
    pub ues_of_cell: Vec<Vec<usize>>,
    pub ue_positions: Vec<Point3>,
    pub frequencies: Vec<f64>,
    pub circuit: RisCircuitParams,
    pub p_max: Vec<f64>,
    pub noise_variance: f64,
    pub channels: WidebandChannelSet,
}

impl WidebandScenario {
    pub fn n_ues(&self) -> usize {
        self.cell_of_ue.len()
    }

    /// Direct channel `h_{j,u,n}` from BS `j` to UE `u`.
    pub fn direct(&self, j: usize, u: usize, n: usize) -> &CVector {
        &self.channels.direct[j][u][n]
    }

    /// RIS-to-UE channel `g_{j,u,n}`.
    pub fn ris_ue(&self, j: usize, u: usize, n: usize) -> &CVector {
        &self.channels.ris_ue[j][u][n]
    }

    /// BS-to-RIS channel `H_{j,j,n}` (N_ris x N_tx).
    pub fn bs_ris(&self, j: usize, n: usize) -> &channel::CMatrix {
        &self.channels.bs_ris[j][n]
    }
}

fn distance(a: &Point3, b: &Point3) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Uniform sample over a disc of radius `radius` around `center`.
pub fn sample_in_disc<R: Rng + ?Sized>(center: Point2, radius: f64, rng: &mut R) -> Point2 {
    if radius == 0.0 {
        return center;
    }
    let r = radius * rng.random::<f64>().sqrt();
    let theta = 2.0 * std::f64::consts::PI * rng.random::<f64>();
    [center[0] + r * theta.cos(), center[1] + r * theta.sin()]
}

/// Instantiates every channel of the multi-cell system. Pure in
/// `(config, seed)`.
pub fn build_scenario(config: &Config, seed: u64) -> Result<WidebandScenario> {
    config.geometry.validate()?;
    config.arrays.validate()?;
    config.ofdm.validate()?;
    config.circuit.validate()?;
    config.power_noise.validate(config.n_cells())?;

    let geo = &config.geometry;
    let k = geo.n_cells();
    let mut cell_of_ue = Vec::new();
    let mut ues_of_cell = vec![Vec::new(); k];
    let mut ue_positions = Vec::new();
    for (cell, (&count, center)) in geo
        .ue_counts_per_cell
        .iter()
        .zip(&geo.ue_cluster_centers)
        .enumerate()
    {
        for _ in 0..count {
            let u = cell_of_ue.len();
            let mut stream = rng::stream(seed, "scenario.ue_position", u as u64);
            let xy = sample_in_disc(*center, geo.cluster_radius, &mut stream);
            cell_of_ue.push(cell);
            ues_of_cell[cell].push(u);
            ue_positions.push([xy[0], xy[1], geo.ue_height]);
        }
    }

    let ofdm = &config.ofdm;
    let exps = &config.power_noise.pathloss_exponents;
    let (n_tx, n_ris) = (config.arrays.n_tx, config.arrays.n_ris);
    let n_ue = cell_of_ue.len();
    let pl = |a: &Point3, b: &Point3, alpha: f64, field: &str| -> Result<f64> {
        channel::pathloss(distance(a, b), alpha, ofdm.carrier_hz).map_err(|e| match e {
            Error::Domain(msg) => Error::config(field, msg),
            other => other,
        })
    };

    let mut direct = Vec::with_capacity(k);
    let mut direct_taps = Vec::with_capacity(k);
    let mut ris_ue = Vec::with_capacity(k);
    let mut ris_ue_taps = Vec::with_capacity(k);
    let mut bs_ris = Vec::with_capacity(k);
    let mut bs_ris_taps = Vec::with_capacity(k);
    for j in 0..k {
        let bs = &geo.bs_positions[j];
        let ris = &geo.ris_positions[j];
        let mut d_row = Vec::with_capacity(n_ue);
        let mut dt_row = Vec::with_capacity(n_ue);
        let mut g_row = Vec::with_capacity(n_ue);
        let mut gt_row = Vec::with_capacity(n_ue);
        for (u, ue) in ue_positions.iter().enumerate() {
            let idx = (j * n_ue + u) as u64;
            let gain = pl(bs, ue, exps.bs_ue, "geometry.bs_positions")?;
            let taps = channel::gen_wideband_taps(
                (n_tx, 1),
                ofdm.n_taps,
                gain,
                &mut rng::stream(seed, "channel.direct", idx),
            );
            d_row.push(channel::columns_of(&channel::taps_to_frequency(
                &taps, ofdm.n_sub,
            )?));
            dt_row.push(taps);

            let gain = pl(ris, ue, exps.ris_ue, "geometry.ris_positions")?;
            let taps = channel::gen_wideband_taps(
                (n_ris, 1),
                ofdm.n_taps,
                gain,
                &mut rng::stream(seed, "channel.ris_ue", idx),
            );
            g_row.push(channel::columns_of(&channel::taps_to_frequency(
                &taps, ofdm.n_sub,
            )?));
            gt_row.push(taps);
        }
        let gain = pl(bs, ris, exps.bs_ris, "geometry.ris_positions")?;
        let taps = channel::gen_wideband_taps(
            (n_ris, n_tx),
            ofdm.n_taps,
            gain,
            &mut rng::stream(seed, "channel.bs_ris", j as u64),
        );
        bs_ris.push(channel::taps_to_frequency(&taps, ofdm.n_sub)?);
        bs_ris_taps.push(taps);
        direct.push(d_row);
        direct_taps.push(dt_row);
        ris_ue.push(g_row);
        ris_ue_taps.push(gt_row);
    }

    Ok(WidebandScenario {
        n_cells: k,
        n_tx,
        n_ris,
        n_sub: ofdm.n_sub,
        cell_of_ue,
        ues_of_cell,
        ue_positions,
        frequencies: subcarrier_frequencies(ofdm),
        circuit: config.circuit,
        p_max: config.power_noise.p_max_w.clone(),
        noise_variance: config.power_noise.noise_variance_w,
        channels: WidebandChannelSet {
            direct,
            ris_ue,
            bs_ris,
            direct_taps,
            ris_ue_taps,
            bs_ris_taps,
        },
    })
}

//! Stochastic channel generation and channel composition.
//!
//! Wideband links are drawn as Rayleigh tap sets with a uniform power-delay
//! profile and converted to per-subcarrier responses with an unscaled DFT.
//! Narrowband broadcast links are Ricean with a geometric line-of-sight part.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector, RowDVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::ris::SwitchMatrix;
use crate::rng;
use crate::scenario::{db_to_linear, BroadcastConfig, Point3, SPEED_OF_LIGHT};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;
pub type CRow = RowDVector<Complex64>;

/// Impulse response of one link: `D` complex matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct TapChannel {
    pub taps: Vec<CMatrix>,
}

impl TapChannel {
    pub fn n_taps(&self) -> usize {
        self.taps.len()
    }

    pub fn shape(&self) -> (usize, usize) {
        self.taps.first().map_or((0, 0), |t| t.shape())
    }

    /// Sum over taps of the squared magnitude of entry `(r, c)`.
    pub fn entry_power(&self, r: usize, c: usize) -> f64 {
        self.taps.iter().map(|t| t[(r, c)].norm_sqr()).sum()
    }
}

/// All links of the multi-cell system, indexed `[bs][ue][subcarrier]` for
/// the per-UE vectors and `[bs][subcarrier]` for the BS-to-RIS matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct WidebandChannelSet {
    /// `h_{j,u,n}`, N_tx.
    pub direct: Vec<Vec<Vec<CVector>>>,
    /// `g_{j,u,n}`, N_ris.
    pub ris_ue: Vec<Vec<Vec<CVector>>>,
    /// `H_{j,j,n}`, N_ris x N_tx.
    pub bs_ris: Vec<Vec<CMatrix>>,
    pub direct_taps: Vec<Vec<TapChannel>>,
    pub ris_ue_taps: Vec<Vec<TapChannel>>,
    pub bs_ris_taps: Vec<TapChannel>,
}

/// Narrowband broadcast links of one time slot.
#[derive(Debug, Clone, PartialEq)]
pub struct NarrowbandChannelSet {
    /// N_tx x N_ue, column `n` is `h_n`.
    pub h_direct: CMatrix,
    /// Per RIS, N_tx x N_ris.
    pub h_bs_ris: Vec<CMatrix>,
    /// Per RIS, N_ris x N_ue, column `n` is `h_{2,n,k}`.
    pub h_ris_ue: Vec<CMatrix>,
}

impl NarrowbandChannelSet {
    pub fn n_tx(&self) -> usize {
        self.h_direct.nrows()
    }

    pub fn n_ue(&self) -> usize {
        self.h_direct.ncols()
    }

    pub fn n_surfaces(&self) -> usize {
        self.h_bs_ris.len()
    }

    /// Effective channels `m_n` for every UE under the given responses.
    pub fn effective(&self, phis: &[CMatrix]) -> Result<Vec<CRow>> {
        if phis.len() != self.n_surfaces() {
            return Err(Error::dim(
                "effective channel",
                self.n_surfaces(),
                phis.len(),
            ));
        }
        (0..self.n_ue())
            .map(|n| {
                let h = self.h_direct.column(n).into_owned();
                let g: Vec<CVector> = self
                    .h_ris_ue
                    .iter()
                    .map(|m| m.column(n).into_owned())
                    .collect();
                let contributions: Vec<_> = g
                    .iter()
                    .zip(phis)
                    .zip(&self.h_bs_ris)
                    .map(|((g, phi), h1)| (g, phi, h1))
                    .collect();
                effective_channel_narrowband(&h, &contributions)
            })
            .collect()
    }
}

/// Free-space reference gain at 1 m times the distance power law.
pub fn pathloss(distance: f64, exponent: f64, f_c: f64) -> Result<f64> {
    if !(distance >= 1.0) {
        return Err(Error::Domain(format!(
            "distance {distance} m is inside the 1 m reference sphere"
        )));
    }
    let lambda = SPEED_OF_LIGHT / f_c;
    Ok((lambda / (4.0 * PI)).powi(2) * distance.powf(-exponent))
}

/// Standard circularly-symmetric complex Gaussian sample, unit variance.
pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

pub fn complex_normal_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMatrix {
    // Column-major fill keeps the draw order independent of nalgebra internals.
    let mut m = CMatrix::zeros(rows, cols);
    for c in 0..cols {
        for r in 0..rows {
            m[(r, c)] = complex_normal(rng);
        }
    }
    m
}

/// Ricean draw `sqrt(gain) (sqrt(k/(1+k)) A + sqrt(1/(1+k)) W)`.
pub fn gen_ricean<R: Rng + ?Sized>(
    dims: (usize, usize),
    kappa_db: f64,
    gain: f64,
    steering: &CMatrix,
    rng: &mut R,
) -> Result<CMatrix> {
    if steering.shape() != dims {
        return Err(Error::dim(
            "gen_ricean steering",
            format!("{dims:?}"),
            format!("{:?}", steering.shape()),
        ));
    }
    let w = complex_normal_matrix(dims.0, dims.1, rng);
    let kappa = db_to_linear(kappa_db);
    // Computed via 1/(1+1/k) so extreme kappa stays finite.
    let los = (1.0 / (1.0 + 1.0 / kappa)).sqrt();
    let nlos = (1.0 / (1.0 + kappa)).sqrt();
    let amp = gain.sqrt();
    Ok(steering.map(|a| a * (amp * los)) + w * Complex64::from(amp * nlos))
}

/// `D` i.i.d. Rayleigh taps with uniform power-delay profile; the expected
/// power per entry summed over taps equals `gain`.
pub fn gen_wideband_taps<R: Rng + ?Sized>(
    dims: (usize, usize),
    n_taps: usize,
    gain: f64,
    rng: &mut R,
) -> TapChannel {
    let scale = Complex64::from((gain / n_taps as f64).sqrt());
    TapChannel {
        taps: (0..n_taps)
            .map(|_| complex_normal_matrix(dims.0, dims.1, rng) * scale)
            .collect(),
    }
}

/// Subcarrier `n` (zero-based) response `sum_d tap_d exp(-j 2 pi d n / N)`.
pub fn taps_to_frequency(tc: &TapChannel, n_sub: usize) -> Result<Vec<CMatrix>> {
    let d = tc.n_taps();
    if d == 0 {
        return Err(Error::config("ofdm.n_taps", "tap channel is empty"));
    }
    if d > n_sub {
        return Err(Error::config(
            "ofdm.n_taps",
            format!("{d} taps exceed {n_sub} subcarriers"),
        ));
    }
    let (rows, cols) = tc.shape();
    Ok((0..n_sub)
        .map(|n| {
            let mut acc = CMatrix::zeros(rows, cols);
            for (di, tap) in tc.taps.iter().enumerate() {
                let w = twiddle(di * n, n_sub, -1.0);
                acc.zip_apply(tap, |a, t| *a += t * w);
            }
            acc
        })
        .collect())
}

/// Inverse of [`taps_to_frequency`], keeping the first `n_taps` taps.
pub fn frequency_to_taps(freq: &[CMatrix], n_taps: usize) -> Result<TapChannel> {
    let n_sub = freq.len();
    if n_taps == 0 || n_taps > n_sub {
        return Err(Error::config(
            "ofdm.n_taps",
            format!("{n_taps} taps with {n_sub} subcarriers"),
        ));
    }
    let (rows, cols) = freq[0].shape();
    let inv = Complex64::from(1.0 / n_sub as f64);
    Ok(TapChannel {
        taps: (0..n_taps)
            .map(|d| {
                let mut acc = CMatrix::zeros(rows, cols);
                for (n, h) in freq.iter().enumerate() {
                    let w = twiddle(d * n, n_sub, 1.0);
                    acc.zip_apply(h, |a, x| *a += x * w);
                }
                acc * inv
            })
            .collect(),
    })
}

fn twiddle(k: usize, n: usize, sign: f64) -> Complex64 {
    // Reduce the index first so large products keep full phase precision.
    let k = k % n;
    Complex64::from_polar(1.0, sign * 2.0 * PI * k as f64 / n as f64)
}

/// Splits single-column matrices into vectors.
pub fn columns_of(ms: &[CMatrix]) -> Vec<CVector> {
    ms.iter().map(|m| m.column(0).into_owned()).collect()
}

/// `m_n = h_n^H + sum_k h_{2,n,k}^H Phi_k H_{1,k}^H`.
pub fn effective_channel_narrowband(
    h_n: &CVector,
    contributions: &[(&CVector, &CMatrix, &CMatrix)],
) -> Result<CRow> {
    let n_tx = h_n.len();
    let mut m = h_n.adjoint();
    for (h2, phi, h1) in contributions {
        let n_ris = h2.len();
        if phi.shape() != (n_ris, n_ris) {
            return Err(Error::dim(
                "effective channel: Phi",
                format!("{n_ris}x{n_ris}"),
                format!("{:?}", phi.shape()),
            ));
        }
        if h1.shape() != (n_tx, n_ris) {
            return Err(Error::dim(
                "effective channel: H1",
                format!("{n_tx}x{n_ris}"),
                format!("{:?}", h1.shape()),
            ));
        }
        m += h2.adjoint() * *phi * h1.adjoint();
    }
    Ok(m)
}

/// `f^H = h^H + g^H S Phi H` with `Phi` given by its diagonal.
pub fn composite_channel_wideband(
    h: &CVector,
    g: &CVector,
    s: &SwitchMatrix,
    phi: &[Complex64],
    big_h: &CMatrix,
) -> Result<CRow> {
    let n_ris = g.len();
    if s.len() != n_ris || phi.len() != n_ris || big_h.nrows() != n_ris {
        return Err(Error::dim(
            "composite channel",
            format!("N_ris = {n_ris}"),
            format!("S {}, Phi {}, H rows {}", s.len(), phi.len(), big_h.nrows()),
        ));
    }
    if big_h.ncols() != h.len() {
        return Err(Error::dim(
            "composite channel: H columns",
            h.len(),
            big_h.ncols(),
        ));
    }
    Ok(composite_column(h, g, s, phi, big_h).adjoint())
}

/// `f` itself (the conjugate transpose of the composite row), without shape
/// checks. Hot path of the solver.
pub(crate) fn composite_column(
    h: &CVector,
    g: &CVector,
    s: &SwitchMatrix,
    phi: &[Complex64],
    big_h: &CMatrix,
) -> CVector {
    // f^H = h^H + sum_m conj(g[perm[m]]) phi_m H[m, :]
    let mut f_h: Vec<Complex64> = h.iter().map(|x| x.conj()).collect();
    for (m, (&p, &ph)) in s.perm().iter().zip(phi).enumerate() {
        let a = g[p].conj() * ph;
        for (c, x) in f_h.iter_mut().enumerate() {
            *x += a * big_h[(m, c)];
        }
    }
    CVector::from_iterator(f_h.len(), f_h.into_iter().map(|x| x.conj()))
}

/// Element positions of an `n`-element half-wavelength ULA along the local
/// x-axis, centred at the origin.
pub fn ula_positions(n: usize, spacing: f64, azimuth: f64) -> Vec<Point3> {
    let c = (n as f64 - 1.0) / 2.0;
    (0..n)
        .map(|i| rotate_z([(i as f64 - c) * spacing, 0.0, 0.0], azimuth))
        .collect()
}

/// Element positions of a UPA on the local xz-plane. The grid uses the most
/// square factorisation of `n`.
pub fn upa_positions(n: usize, spacing: f64, azimuth: f64) -> Vec<Point3> {
    let rows = (1..=((n as f64).sqrt() as usize).max(1))
        .rev()
        .find(|r| n.is_multiple_of(*r))
        .unwrap_or(1);
    let cols = n / rows;
    let (cr, cc) = ((rows as f64 - 1.0) / 2.0, (cols as f64 - 1.0) / 2.0);
    (0..n)
        .map(|i| {
            let (r, c) = (i / cols, i % cols);
            rotate_z(
                [(c as f64 - cc) * spacing, 0.0, (r as f64 - cr) * spacing],
                azimuth,
            )
        })
        .collect()
}

fn rotate_z(p: Point3, az: f64) -> Point3 {
    let (s, c) = az.sin_cos();
    [c * p[0] - s * p[1], s * p[0] + c * p[1], p[2]]
}

fn unit_direction(from: &Point3, to: &Point3) -> Point3 {
    let d = [to[0] - from[0], to[1] - from[1], to[2] - from[2]];
    let n = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
    [d[0] / n, d[1] / n, d[2] / n]
}

/// Array response toward unit direction `u`: `exp(-j k p_i . u)`.
pub fn steering_vector(positions: &[Point3], u: &Point3, wavelength: f64) -> CVector {
    let k = 2.0 * PI / wavelength;
    CVector::from_iterator(
        positions.len(),
        positions.iter().map(|p| {
            let proj = p[0] * u[0] + p[1] * u[1] + p[2] * u[2];
            Complex64::from_polar(1.0, -k * proj)
        }),
    )
}

fn distance(a: &Point3, b: &Point3) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Draws the narrowband links of one broadcast time slot. UE positions are
/// Gaussian around the configured mean; links shorter than the 1 m reference
/// distance are evaluated at 1 m.
pub fn sample_broadcast(
    cfg: &BroadcastConfig,
    seed: u64,
    index: u64,
) -> Result<NarrowbandChannelSet> {
    let mut rng = rng::stream(seed, "broadcast.channel", index);
    let lambda = SPEED_OF_LIGHT / cfg.carrier_hz;
    let az = cfg.array_boresight_deg.to_radians();
    let bs_el = ula_positions(cfg.n_tx, lambda / 2.0, az);
    let ris_el = upa_positions(cfg.n_ris, lambda / 2.0, az);
    let exps = &cfg.pathloss_exponents;
    let pl = |a: &Point3, b: &Point3, alpha: f64| {
        pathloss(distance(a, b).max(1.0), alpha, cfg.carrier_hz)
    };

    let ues: Vec<Point3> = (0..cfg.n_ue)
        .map(|_| {
            let mut p = cfg.ue_mean_position;
            for x in p.iter_mut() {
                let z: f64 = StandardNormal.sample(&mut rng);
                *x += cfg.ue_position_std * z;
            }
            p
        })
        .collect();

    let bs = &cfg.bs_position;
    let mut h_direct = CMatrix::zeros(cfg.n_tx, cfg.n_ue);
    for (n, ue) in ues.iter().enumerate() {
        let a = steering_vector(&bs_el, &unit_direction(bs, ue), lambda);
        let gain = pl(bs, ue, exps.bs_ue)?;
        let col = gen_ricean(
            (cfg.n_tx, 1),
            cfg.kappa_db,
            gain,
            &CMatrix::from_column_slice(cfg.n_tx, 1, a.as_slice()),
            &mut rng,
        )?;
        if let Some(att) = cfg.direct_attenuation_db {
            let scale = Complex64::from(db_to_linear(-att).sqrt());
            h_direct.set_column(n, &(col.column(0) * scale));
        }
    }

    let mut h_bs_ris = Vec::with_capacity(cfg.ris_positions.len());
    let mut h_ris_ue = Vec::with_capacity(cfg.ris_positions.len());
    for ris in &cfg.ris_positions {
        let a_bs = steering_vector(&bs_el, &unit_direction(bs, ris), lambda);
        let a_ris = steering_vector(&ris_el, &unit_direction(ris, bs), lambda);
        let los = &a_bs * a_ris.transpose();
        h_bs_ris.push(gen_ricean(
            (cfg.n_tx, cfg.n_ris),
            cfg.kappa_db,
            pl(bs, ris, exps.bs_ris)?,
            &los,
            &mut rng,
        )?);

        let mut g = CMatrix::zeros(cfg.n_ris, cfg.n_ue);
        for (n, ue) in ues.iter().enumerate() {
            let a = steering_vector(&ris_el, &unit_direction(ris, ue), lambda);
            let los = CMatrix::from_column_slice(cfg.n_ris, 1, a.as_slice());
            let col = gen_ricean(
                (cfg.n_ris, 1),
                cfg.kappa_db,
                pl(ris, ue, exps.ris_ue)?,
                &los,
                &mut rng,
            )?;
            g.set_column(n, &col.column(0));
        }
        h_ris_ue.push(g);
    }

    Ok(NarrowbandChannelSet {
        h_direct,
        h_bs_ris,
        h_ris_ue,
    })
}

/// Writes every subcarrier response of a channel set as CSV rows
/// `link,bs,ue,subcarrier,row,col,re,im` in that nesting order.
pub fn write_channel_dump<W: std::io::Write>(
    set: &WidebandChannelSet,
    mut out: W,
) -> std::io::Result<()> {
    writeln!(out, "link,bs,ue,subcarrier,row,col,re,im")?;
    let vec_rows = |name: &str, links: &[Vec<Vec<CVector>>], out: &mut W| -> std::io::Result<()> {
        for (j, per_ue) in links.iter().enumerate() {
            for (u, per_n) in per_ue.iter().enumerate() {
                for (n, v) in per_n.iter().enumerate() {
                    for (r, x) in v.iter().enumerate() {
                        writeln!(out, "{name},{j},{u},{n},{r},0,{:e},{:e}", x.re, x.im)?;
                    }
                }
            }
        }
        Ok(())
    };
    vec_rows("direct", &set.direct, &mut out)?;
    vec_rows("ris_ue", &set.ris_ue, &mut out)?;
    for (j, per_n) in set.bs_ris.iter().enumerate() {
        for (n, m) in per_n.iter().enumerate() {
            for r in 0..m.nrows() {
                for c in 0..m.ncols() {
                    let x = m[(r, c)];
                    writeln!(out, "bs_ris,{j},,{n},{r},{c},{:e},{:e}", x.re, x.im)?;
                }
            }
        }
    }
    Ok(())
}

//! Metasurface models: varactor reflection coefficients, switch matrices,
//! banded discrete configurations and the DFT precoder codebook.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::Rng;

use crate::channel::{CMatrix, CVector};
use crate::error::{Error, Result};
use crate::scenario::RisCircuitParams;

const J: Complex64 = Complex64::new(0.0, 1.0);

fn check_point(f: f64, c: f64) -> Result<()> {
    if !(f.is_finite() && f > 0.0) {
        return Err(Error::Domain(format!("frequency {f} Hz must be positive")));
    }
    if !(c.is_finite() && c > 0.0) {
        return Err(Error::Domain(format!("capacitance {c} F must be positive")));
    }
    Ok(())
}

/// Input impedance of the element circuit at `f` with varactor `c`.
pub fn element_impedance(f: f64, c: f64, p: &RisCircuitParams) -> Complex64 {
    let w = 2.0 * PI * f;
    let jw = J * w;
    let cap = Complex64::from(1.0) / (jw * c);
    let branch = jw * p.l2 + p.r + cap;
    jw * p.l1 * branch / (jw * (p.l1 + p.l2) + p.r + cap)
}

/// `(Z - Z0) / (Z + Z0)` evaluated from the impedance directly.
pub fn reflection_coefficient(f: f64, c: f64, p: &RisCircuitParams) -> Result<Complex64> {
    check_point(f, c)?;
    let z = element_impedance(f, c, p);
    let den = z + p.z0;
    if !(den.norm() > 0.0 && z.is_finite()) {
        return Err(Error::Domain(format!(
            "Z + Z0 vanishes at f = {f}, C = {c}"
        )));
    }
    Ok((z - p.z0) / den)
}

/// Numerator and denominator polynomials in `C` such that
/// `phi = 1 - 2 / (1 + D/N)`.
fn tractable_terms(f: f64, c: f64, p: &RisCircuitParams) -> (Complex64, Complex64) {
    let w = 2.0 * PI * f;
    let n = Complex64::new(1.0 - w * w * (p.l1 + p.l2) * c, w * p.r * c);
    let d = J * (w * p.l1 / p.z0) * Complex64::new(1.0 - w * w * p.l2 * c, w * p.r * c);
    (n, d)
}

/// The same coefficient in the rational form `1 - 2 / (1 + D/N)`.
pub fn reflection_coefficient_tractable(f: f64, c: f64, p: &RisCircuitParams) -> Result<Complex64> {
    check_point(f, c)?;
    let (n, d) = tractable_terms(f, c, p);
    let s = n + d;
    if !(s.norm() > 0.0) {
        return Err(Error::Domain(format!("N + D vanishes at f = {f}, C = {c}")));
    }
    Ok(1.0 - 2.0 * n / s)
}

/// Derivative of the conjugate coefficient with respect to the capacitance,
/// `d(phi*)/dC = -2 (N*' D* - N* D*') / (N* + D*)^2`.
pub fn reflection_derivative(f: f64, c: f64, p: &RisCircuitParams) -> Result<Complex64> {
    check_point(f, c)?;
    let w = 2.0 * PI * f;
    let (n, d) = tractable_terms(f, c, p);
    let (nc, dc) = (n.conj(), d.conj());
    let dn = Complex64::new(-w * w * (p.l1 + p.l2), -w * p.r);
    let dd = -J * (w * p.l1 / p.z0) * Complex64::new(-w * w * p.l2, -w * p.r);
    let s = nc + dc;
    if !(s.norm() > 0.0) {
        return Err(Error::Domain(format!("N + D vanishes at f = {f}, C = {c}")));
    }
    Ok(-2.0 * (dn * dc - nc * dd) / (s * s))
}

/// Varactor settings of one surface.
#[derive(Debug, Clone, PartialEq)]
pub struct CapacitanceVector {
    c: Vec<f64>,
}

impl CapacitanceVector {
    pub fn new(c: Vec<f64>, p: &RisCircuitParams) -> Result<Self> {
        for (i, &v) in c.iter().enumerate() {
            if !(v >= p.c_min && v <= p.c_max) {
                return Err(Error::Validation {
                    position: i,
                    reason: format!("{v} F outside [{}, {}]", p.c_min, p.c_max),
                });
            }
        }
        Ok(Self { c })
    }

    /// Every element at the centre of the admissible range.
    pub fn midpoint(n: usize, p: &RisCircuitParams) -> Self {
        Self {
            c: vec![0.5 * (p.c_min + p.c_max); n],
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.c
    }

    pub fn len(&self) -> usize {
        self.c.len()
    }

    pub fn is_empty(&self) -> bool {
        self.c.is_empty()
    }
}

/// Diagonal of `Phi_{k,n}`: the reflection coefficient of every element at
/// subcarrier frequency `f_n`.
pub fn phase_profile(
    c: &CapacitanceVector,
    f_n: f64,
    p: &RisCircuitParams,
) -> Result<Vec<Complex64>> {
    c.values()
        .iter()
        .map(|&ci| reflection_coefficient(f_n, ci, p))
        .collect()
}

/// Per-element derivative `d(phi*)/dC` at `f_n`.
pub fn derivative_profile(
    c: &CapacitanceVector,
    f_n: f64,
    p: &RisCircuitParams,
) -> Result<Vec<Complex64>> {
    c.values()
        .iter()
        .map(|&ci| reflection_derivative(f_n, ci, p))
        .collect()
}

/// Permutation matrix stored by columns: column `j` has its single 1 in row
/// `perm[j]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SwitchMatrix {
    perm: Vec<usize>,
}

/// Accepts `perm` iff it is a permutation of `0..len`.
pub fn validate_switch(perm: &[usize]) -> Result<SwitchMatrix> {
    let n = perm.len();
    let mut seen = vec![false; n];
    for (j, &r) in perm.iter().enumerate() {
        if r >= n {
            return Err(Error::Validation {
                position: j,
                reason: format!("row index {r} out of range for {n} elements"),
            });
        }
        if seen[r] {
            return Err(Error::Validation {
                position: j,
                reason: format!("row index {r} used twice"),
            });
        }
        seen[r] = true;
    }
    Ok(SwitchMatrix {
        perm: perm.to_vec(),
    })
}

impl SwitchMatrix {
    pub fn new(perm: Vec<usize>) -> Result<Self> {
        validate_switch(&perm)
    }

    pub fn identity(n: usize) -> Self {
        Self {
            perm: (0..n).collect(),
        }
    }

    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(rng);
        Self { perm }
    }

    pub fn perm(&self) -> &[usize] {
        &self.perm
    }

    pub fn len(&self) -> usize {
        self.perm.len()
    }

    pub fn is_empty(&self) -> bool {
        self.perm.is_empty()
    }

    pub fn is_identity(&self) -> bool {
        self.perm.iter().enumerate().all(|(j, &r)| j == r)
    }

    pub fn entry(&self, i: usize, j: usize) -> bool {
        self.perm[j] == i
    }

    /// Dense 0/1 matrix.
    pub fn to_matrix(&self) -> CMatrix {
        let n = self.len();
        CMatrix::from_fn(n, n, |i, j| {
            if self.perm[j] == i {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
    }

    /// Real 0/1 matrix.
    pub fn to_real(&self) -> nalgebra::DMatrix<f64> {
        let n = self.len();
        nalgebra::DMatrix::from_fn(n, n, |i, j| if self.perm[j] == i { 1.0 } else { 0.0 })
    }

    /// `self * other`.
    pub fn compose(&self, other: &SwitchMatrix) -> SwitchMatrix {
        SwitchMatrix {
            perm: other.perm.iter().map(|&r| self.perm[r]).collect(),
        }
    }

    /// Builds `S` from a row assignment: row `i` connects to column
    /// `assign[i]`.
    pub fn from_row_assignment(assign: &[usize]) -> Result<Self> {
        validate_switch(assign)?;
        let mut perm = vec![0; assign.len()];
        for (i, &j) in assign.iter().enumerate() {
            perm[j] = i;
        }
        Ok(Self { perm })
    }
}

/// Unit-modulus phase states for `bits`-bit control. One bit gives `{+1, -1}`.
pub fn phase_set(bits: u32) -> Vec<Complex64> {
    let m = 1usize << bits;
    (0..m)
        .map(|i| Complex64::from_polar(1.0, 2.0 * PI * i as f64 / m as f64))
        .collect()
}

/// Off-diagonal positions `(i, j)` with `1 <= |i - j| <= n_band`, row-major.
pub fn band_positions(n_ris: usize, n_band: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for i in 0..n_ris {
        let lo = i.saturating_sub(n_band);
        let hi = (i + n_band).min(n_ris.saturating_sub(1));
        for j in lo..=hi {
            if j != i {
                out.push((i, j));
            }
        }
    }
    out
}

/// Discrete banded configuration emitted by the neural controller.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BandedRisConfig {
    pub n_band: usize,
    pub diag_states: Vec<usize>,
    /// One flag per entry of [`band_positions`].
    pub band_switches: Vec<bool>,
}

impl BandedRisConfig {
    pub fn diagonal(diag_states: Vec<usize>) -> Self {
        Self {
            n_band: 0,
            diag_states,
            band_switches: Vec::new(),
        }
    }

    pub fn n_ris(&self) -> usize {
        self.diag_states.len()
    }

    pub fn validate(&self, n_states: usize) -> Result<()> {
        if let Some(i) = self.diag_states.iter().position(|&s| s >= n_states) {
            return Err(Error::Validation {
                position: i,
                reason: format!(
                    "phase state {} out of range for {n_states} states",
                    self.diag_states[i]
                ),
            });
        }
        let expected = band_positions(self.n_ris(), self.n_band).len();
        if self.band_switches.len() != expected {
            return Err(Error::dim(
                "banded configuration switches",
                expected,
                self.band_switches.len(),
            ));
        }
        Ok(())
    }
}

/// Materialises the banded response matrix. An ON switch at `(i, j)` carries
/// the phase state of element `j`.
pub fn banded_phi(cfg: &BandedRisConfig, phases: &[Complex64]) -> Result<CMatrix> {
    cfg.validate(phases.len())?;
    let n = cfg.n_ris();
    let mut phi = CMatrix::zeros(n, n);
    for (i, &s) in cfg.diag_states.iter().enumerate() {
        phi[(i, i)] = phases[s];
    }
    for (&(i, j), &on) in band_positions(n, cfg.n_band).iter().zip(&cfg.band_switches) {
        if on {
            phi[(i, j)] = phases[cfg.diag_states[j]];
        }
    }
    Ok(phi)
}

/// Columns of the unitary `n_tx`-point DFT matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct PrecoderCodebook {
    pub codewords: Vec<CVector>,
}

impl PrecoderCodebook {
    pub fn len(&self) -> usize {
        self.codewords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.codewords.is_empty()
    }
}

pub fn dft_codebook(n_tx: usize) -> PrecoderCodebook {
    let scale = 1.0 / (n_tx as f64).sqrt();
    PrecoderCodebook {
        codewords: (0..n_tx)
            .map(|i| {
                CVector::from_iterator(
                    n_tx,
                    (0..n_tx).map(|r| {
                        Complex64::from_polar(
                            scale,
                            -2.0 * PI * ((r * i) % n_tx) as f64 / n_tx as f64,
                        )
                    }),
                )
            })
            .collect(),
    }
}

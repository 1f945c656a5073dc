//! Spectral densities, the harmonic modulation function and the closed-form
//! ensemble decoherence factor and rate.
//!
//! Units throughout: time in ms, angular frequency in rad/ms.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Quadratic coefficient the default model is calibrated to (ms⁻²).
pub const DEFAULT_TARGET_C: f64 = 0.370;

/// Above this value of β·ω the hyperbolic cotangent is taken as exactly 1.
const COTH_CLAMP: f64 = 20.0;

/// One Lorentzian (Drude–Lorentz) component.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Lorentzian {
    /// Reorganization energy λ (rad/ms).
    pub reorg_energy: f64,
    /// Relaxation rate γ (rad/ms).
    pub relax_rate: f64,
}

impl Lorentzian {
    fn eval(&self, omega: f64) -> f64 {
        2.0 * self.reorg_energy * self.relax_rate * omega
            / (omega * omega + self.relax_rate * self.relax_rate)
    }

    fn validate(&self) -> Result<()> {
        if !(self.reorg_energy > 0.0 && self.reorg_energy.is_finite()) {
            return Err(Error::Config(format!(
                "reorganization energy must be positive, got {}",
                self.reorg_energy
            )));
        }
        if !(self.relax_rate > 0.0 && self.relax_rate.is_finite()) {
            return Err(Error::Config(format!(
                "relaxation rate must be positive, got {}",
                self.relax_rate
            )));
        }
        Ok(())
    }
}

/// Frequency-domain description of the dephasing bath.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum SpectralDensity {
    DrudeLorentz(Lorentzian),
    LorentzianSum(Vec<Lorentzian>),
    /// `(ω, J(ω))` pairs with strictly increasing ω, linearly interpolated.
    Tabulated(Vec<(f64, f64)>),
}

impl SpectralDensity {
    pub fn drude_lorentz(reorg_energy: f64, relax_rate: f64) -> Result<Self> {
        let term = Lorentzian {
            reorg_energy,
            relax_rate,
        };
        term.validate()?;
        Ok(SpectralDensity::DrudeLorentz(term))
    }

    pub fn lorentzian_sum(terms: Vec<Lorentzian>) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::Config("Lorentzian sum needs at least one term".into()));
        }
        for term in &terms {
            term.validate()?;
        }
        Ok(SpectralDensity::LorentzianSum(terms))
    }

    pub fn tabulated(points: Vec<(f64, f64)>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::Config("tabulated density needs at least two points".into()));
        }
        for w in points.windows(2) {
            if !(w[1].0 > w[0].0) {
                return Err(Error::Config(
                    "tabulated frequencies must be strictly increasing".into(),
                ));
            }
        }
        if let Some(&(omega, value)) = points
            .iter()
            .find(|(o, v)| *o < 0.0 || *v < 0.0 || !v.is_finite() || !o.is_finite())
        {
            return Err(Error::Config(format!(
                "tabulated entry ({omega}, {value}) must be finite and non-negative"
            )));
        }
        Ok(SpectralDensity::Tabulated(points))
    }

    /// J(ω) for ω ≥ 0.
    pub fn evaluate(&self, omega: f64) -> Result<f64> {
        if !(omega >= 0.0) {
            return Err(Error::Domain(format!(
                "spectral density needs ω ≥ 0, got {omega}"
            )));
        }
        match self {
            SpectralDensity::DrudeLorentz(term) => Ok(term.eval(omega)),
            SpectralDensity::LorentzianSum(terms) => Ok(terms.iter().map(|t| t.eval(omega)).sum()),
            SpectralDensity::Tabulated(points) => {
                let (lo, hi) = (points[0].0, points[points.len() - 1].0);
                if omega < lo || omega > hi {
                    return Err(Error::Range { value: omega, lo, hi });
                }
                let idx = points.partition_point(|(o, _)| *o <= omega);
                if idx == points.len() {
                    return Ok(points[idx - 1].1);
                }
                let (x0, y0) = points[idx - 1];
                let (x1, y1) = points[idx];
                Ok(y0 + (y1 - y0) * (omega - x0) / (x1 - x0))
            }
        }
    }
}

/// coth(x) for x > 0 via `expm1`, clamped to 1 for large arguments.
pub fn coth(x: f64) -> f64 {
    if x > COTH_CLAMP {
        1.0
    } else {
        1.0 + 2.0 / (2.0 * x).exp_m1()
    }
}

/// Discretized noise modulation: amplitude, harmonic grid and the modulation
/// function F(ω_j) on that grid.
///
/// F(ω)² = ω₀ coth(β ω) J(ω) / (2 ω²), which for a Drude–Lorentz density is
/// λγω₀ coth(βω) / (ω³ + γ²ω).
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseModel {
    density: SpectralDensity,
    alpha_z: f64,
    base_freq: f64,
    harmonic_count: usize,
    inverse_temp: f64,
    system_freq: f64,
    /// F(ω_j)² for j = 1..=J.
    modulation_sq: Vec<f64>,
}

impl NoiseModel {
    pub fn new(
        density: SpectralDensity,
        alpha_z: f64,
        base_freq: f64,
        harmonic_count: usize,
        inverse_temp: f64,
        system_freq: f64,
    ) -> Result<Self> {
        if !(alpha_z >= 0.0 && alpha_z.is_finite()) {
            return Err(Error::Config(format!("alpha_z must be ≥ 0, got {alpha_z}")));
        }
        if !(base_freq > 0.0 && base_freq.is_finite()) {
            return Err(Error::Config(format!("base frequency must be > 0, got {base_freq}")));
        }
        if harmonic_count == 0 {
            return Err(Error::Config("harmonic count must be positive".into()));
        }
        if !(inverse_temp > 0.0 && inverse_temp.is_finite()) {
            return Err(Error::Config(format!(
                "inverse temperature must be > 0, got {inverse_temp}"
            )));
        }
        if !system_freq.is_finite() {
            return Err(Error::Config("system frequency must be finite".into()));
        }
        let mut modulation_sq = Vec::with_capacity(harmonic_count);
        for j in 1..=harmonic_count {
            let omega = j as f64 * base_freq;
            let density_value = density.evaluate(omega).map_err(|e| {
                Error::Config(format!("spectral density undefined at harmonic {j}: {e}"))
            })?;
            let arg = system_freq * coth(inverse_temp * omega) * density_value / (2.0 * omega * omega);
            if !(arg > 0.0 && arg.is_finite()) {
                return Err(Error::Config(format!(
                    "modulation function argument at harmonic {j} is {arg}, must be positive"
                )));
            }
            modulation_sq.push(arg);
        }
        Ok(NoiseModel {
            density,
            alpha_z,
            base_freq,
            harmonic_count,
            inverse_temp,
            system_freq,
            modulation_sq,
        })
    }

    /// The default colored-noise model, calibrated to c = 0.370 ms⁻².
    ///
    /// λ = γ = 1 rad/ms, ω_b = 2π/1000 rad/ms, J = 50, β = 1 ms, ω₀ = 10 rad/ms.
    pub fn calibrated_default() -> Self {
        Self::uncalibrated_default()
            .calibrate_amplitude(DEFAULT_TARGET_C)
            .expect("default model calibrates")
    }

    /// Default parameters with α_z = 1.
    pub fn uncalibrated_default() -> Self {
        let density = SpectralDensity::drude_lorentz(1.0, 1.0).expect("valid density");
        NoiseModel::new(density, 1.0, 2.0 * PI / 1000.0, 50, 1.0, 10.0).expect("valid default")
    }

    pub fn density(&self) -> &SpectralDensity {
        &self.density
    }

    pub fn alpha_z(&self) -> f64 {
        self.alpha_z
    }

    pub fn base_freq(&self) -> f64 {
        self.base_freq
    }

    pub fn harmonic_count(&self) -> usize {
        self.harmonic_count
    }

    pub fn inverse_temp(&self) -> f64 {
        self.inverse_temp
    }

    pub fn system_freq(&self) -> f64 {
        self.system_freq
    }

    /// Cutoff frequency J·ω_b.
    pub fn cutoff(&self) -> f64 {
        self.harmonic_count as f64 * self.base_freq
    }

    /// Period of Γ(t) and γ(t), 2π/ω_b.
    pub fn period(&self) -> f64 {
        2.0 * PI / self.base_freq
    }

    /// ω_j = j·ω_b (1-based).
    pub fn omega(&self, j: usize) -> f64 {
        j as f64 * self.base_freq
    }

    pub fn omegas(&self) -> impl Iterator<Item = f64> + '_ {
        (1..=self.harmonic_count).map(|j| self.omega(j))
    }

    /// Same model with a different noise amplitude.
    pub fn with_alpha_z(&self, alpha_z: f64) -> Result<Self> {
        if !(alpha_z >= 0.0 && alpha_z.is_finite()) {
            return Err(Error::Config(format!("alpha_z must be ≥ 0, got {alpha_z}")));
        }
        Ok(NoiseModel {
            alpha_z,
            ..self.clone()
        })
    }

    /// F(ω_j) for 1 ≤ j ≤ J.
    pub fn modulation_function(&self, j: usize) -> Result<f64> {
        if j == 0 || j > self.harmonic_count {
            return Err(Error::Index {
                index: j,
                max: self.harmonic_count,
            });
        }
        Ok(self.modulation_sq[j - 1].sqrt())
    }

    /// Carrier amplitudes a_j = α_z ω_j F(ω_j).
    pub fn amplitudes(&self) -> Vec<f64> {
        self.modulation_sq
            .iter()
            .zip(self.omegas())
            .map(|(f2, w)| self.alpha_z * w * f2.sqrt())
            .collect()
    }

    /// Γ(t) = α_z² Σ_j F(ω_j)² sin²(ω_j t / 2).
    pub fn decoherence_factor(&self, t: f64) -> Result<f64> {
        check_time(t)?;
        let sum: f64 = self
            .modulation_sq
            .iter()
            .zip(self.omegas())
            .map(|(f2, w)| {
                let s = (0.5 * w * t).sin();
                f2 * s * s
            })
            .sum();
        Ok(self.alpha_z * self.alpha_z * sum)
    }

    /// γ(t) = (α_z²/2) Σ_j ω_j F(ω_j)² sin(ω_j t) = dΓ/dt.
    pub fn decoherence_rate(&self, t: f64) -> Result<f64> {
        check_time(t)?;
        let sum: f64 = self
            .modulation_sq
            .iter()
            .zip(self.omegas())
            .map(|(f2, w)| w * f2 * (w * t).sin())
            .sum();
        Ok(0.5 * self.alpha_z * self.alpha_z * sum)
    }

    /// Upper bound α_z² Σ_j F(ω_j)² on Γ(t).
    pub fn decoherence_bound(&self) -> f64 {
        self.alpha_z * self.alpha_z * self.modulation_sq.iter().sum::<f64>()
    }

    /// Leading short-time coefficient c with Γ(t) = c t² + O(t⁴).
    pub fn quadratic_coefficient(&self) -> f64 {
        let sum: f64 = self
            .modulation_sq
            .iter()
            .zip(self.omegas())
            .map(|(f2, w)| f2 * w * w)
            .sum();
        0.25 * self.alpha_z * self.alpha_z * sum
    }

    /// Rescale α_z so that the quadratic coefficient equals `target_c`.
    pub fn calibrate_amplitude(&self, target_c: f64) -> Result<Self> {
        if !(target_c > 0.0 && target_c.is_finite()) {
            return Err(Error::Calibration(format!(
                "target coefficient must be positive, got {target_c}"
            )));
        }
        // c per unit α_z²
        let unit: f64 = 0.25
            * self
                .modulation_sq
                .iter()
                .zip(self.omegas())
                .map(|(f2, w)| f2 * w * w)
                .sum::<f64>();
        if !(unit > 0.0 && unit.is_finite()) || self.alpha_z == 0.0 {
            return Err(Error::Calibration(
                "model has a vanishing quadratic coefficient".into(),
            ));
        }
        self.with_alpha_z((target_c / unit).sqrt())
    }

    /// Stable 64-bit fingerprint of every parameter (FNV-1a over the bit
    /// patterns), used to tag exported data.
    pub fn fingerprint(&self) -> u64 {
        let mut h = Fnv::new();
        match &self.density {
            SpectralDensity::DrudeLorentz(t) => {
                h.write_u64(1);
                h.write_f64(t.reorg_energy);
                h.write_f64(t.relax_rate);
            }
            SpectralDensity::LorentzianSum(terms) => {
                h.write_u64(2);
                for t in terms {
                    h.write_f64(t.reorg_energy);
                    h.write_f64(t.relax_rate);
                }
            }
            SpectralDensity::Tabulated(points) => {
                h.write_u64(3);
                for (o, v) in points {
                    h.write_f64(*o);
                    h.write_f64(*v);
                }
            }
        }
        h.write_f64(self.alpha_z);
        h.write_f64(self.base_freq);
        h.write_u64(self.harmonic_count as u64);
        h.write_f64(self.inverse_temp);
        h.write_f64(self.system_freq);
        h.finish()
    }
}

struct Fnv(u64);

impl Fnv {
    fn new() -> Self {
        Fnv(0xcbf2_9ce4_8422_2325)
    }

    fn write_u64(&mut self, v: u64) {
        for b in v.to_le_bytes() {
            self.0 ^= u64::from(b);
            self.0 = self.0.wrapping_mul(0x0100_0000_01b3);
        }
    }

    fn write_f64(&mut self, v: f64) {
        self.write_u64(v.to_bits());
    }

    fn finish(&self) -> u64 {
        self.0
    }
}

fn check_time(t: f64) -> Result<()> {
    if t >= 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("time must be finite and ≥ 0, got {t}")))
    }
}

/// Decoherence law used by the metrology analytics: either the full spectral
/// model or one of the idealized closed-form regimes.
#[derive(Debug, Clone, PartialEq)]
pub enum DecoherenceLaw {
    Spectral(NoiseModel),
    /// Zeno regime, Γ(t) = c t², γ(t) = 2ct.
    Quadratic { c: f64 },
    /// Constant rate, Γ(t) = c t, γ(t) = c.
    Markovian { c: f64 },
    Noiseless,
}

impl DecoherenceLaw {
    pub fn factor(&self, t: f64) -> Result<f64> {
        check_time(t)?;
        match self {
            DecoherenceLaw::Spectral(model) => model.decoherence_factor(t),
            DecoherenceLaw::Quadratic { c } => Ok(c * t * t),
            DecoherenceLaw::Markovian { c } => Ok(c * t),
            DecoherenceLaw::Noiseless => Ok(0.0),
        }
    }

    pub fn rate(&self, t: f64) -> Result<f64> {
        check_time(t)?;
        match self {
            DecoherenceLaw::Spectral(model) => model.decoherence_rate(t),
            DecoherenceLaw::Quadratic { c } => Ok(2.0 * c * t),
            DecoherenceLaw::Markovian { c } => Ok(*c),
            DecoherenceLaw::Noiseless => Ok(0.0),
        }
    }

    /// Default upper end of the optimal-time scan.
    pub fn default_scan_bound(&self) -> f64 {
        match self {
            DecoherenceLaw::Spectral(model) => model.period(),
            _ => 1.0e3,
        }
    }
}

impl From<NoiseModel> for DecoherenceLaw {
    fn from(model: NoiseModel) -> Self {
        DecoherenceLaw::Spectral(model)
    }
}

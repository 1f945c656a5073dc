//! Monte Carlo noise engine: sampling of stochastic carrier trajectories
//!
//! β(t) = Σ_j a_j cos(ω_j t + ψ_j),  a_j = α_z ω_j F(ω_j),
//!
//! with independent uniform phases ψ_j per (sample, qubit), their exact phase
//! integrals, the time-sliced schedule and the empirical decoherence factor.

use std::f64::consts::TAU;
use std::io::{self, Write};

use nalgebra::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::export::num;
use crate::spectra::NoiseModel;

pub const DEFAULT_SAMPLE_COUNT: usize = 20;
pub const DEFAULT_SLICE_COUNT: usize = 1000;
pub const DEFAULT_MASTER_SEED: u64 = 20_230_417;

/// Ensemble sizes and the master seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EnsembleConfig {
    pub sample_count: usize,
    pub slice_count: usize,
    pub master_seed: u64,
    pub qubit_count: usize,
}

impl Default for EnsembleConfig {
    fn default() -> Self {
        EnsembleConfig {
            sample_count: DEFAULT_SAMPLE_COUNT,
            slice_count: DEFAULT_SLICE_COUNT,
            master_seed: DEFAULT_MASTER_SEED,
            qubit_count: 1,
        }
    }
}

impl EnsembleConfig {
    pub fn new(
        sample_count: usize,
        slice_count: usize,
        master_seed: u64,
        qubit_count: usize,
    ) -> Result<Self> {
        let config = EnsembleConfig {
            sample_count,
            slice_count,
            master_seed,
            qubit_count,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.sample_count == 0 || self.sample_count > u32::MAX as usize {
            return Err(Error::Config(format!(
                "sample count must be in 1..=2^32-1, got {}",
                self.sample_count
            )));
        }
        if self.slice_count == 0 {
            return Err(Error::Config("slice count must be positive".into()));
        }
        if self.qubit_count == 0 || self.qubit_count > u32::MAX as usize {
            return Err(Error::Config(format!(
                "qubit count must be positive, got {}",
                self.qubit_count
            )));
        }
        Ok(())
    }

    pub fn with_samples(self, sample_count: usize) -> Self {
        EnsembleConfig {
            sample_count,
            ..self
        }
    }

    pub fn with_seed(self, master_seed: u64) -> Self {
        EnsembleConfig {
            master_seed,
            ..self
        }
    }

    pub fn with_qubits(self, qubit_count: usize) -> Self {
        EnsembleConfig {
            qubit_count,
            ..self
        }
    }
}

/// Identifies one independent random substream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct StreamId {
    pub master_seed: u64,
    pub sample: u32,
    pub qubit: u32,
}

impl StreamId {
    pub fn new(master_seed: u64, sample: usize, qubit: usize) -> Self {
        StreamId {
            master_seed,
            sample: sample as u32,
            qubit: qubit as u32,
        }
    }
}

/// Counter-based generator for a substream: the key comes from the master
/// seed, the ChaCha stream number from (sample, qubit) and the block counter
/// is the draw index, so every draw is addressable independently of any
/// evaluation order.
pub fn substream(id: StreamId) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(id.master_seed);
    rng.set_stream((u64::from(id.sample) << 32) | u64::from(id.qubit));
    rng
}

/// One noise realization.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseTrajectory {
    phases: Vec<f64>,
    amplitudes: Vec<f64>,
    omegas: Vec<f64>,
}

/// Draw a trajectory: J uniform phases on [0, 2π) from the substream.
pub fn sample_trajectory(model: &NoiseModel, id: StreamId) -> NoiseTrajectory {
    let mut rng = substream(id);
    let phases = (0..model.harmonic_count())
        .map(|_| rng.random::<f64>() * TAU)
        .collect();
    NoiseTrajectory {
        phases,
        amplitudes: model.amplitudes(),
        omegas: model.omegas().collect(),
    }
}

impl NoiseTrajectory {
    /// Build a trajectory from explicit phases (mainly for tests).
    pub fn from_phases(model: &NoiseModel, phases: Vec<f64>) -> Result<Self> {
        if phases.len() != model.harmonic_count() {
            return Err(Error::Contract(format!(
                "expected {} phases, got {}",
                model.harmonic_count(),
                phases.len()
            )));
        }
        Ok(NoiseTrajectory {
            phases,
            amplitudes: model.amplitudes(),
            omegas: model.omegas().collect(),
        })
    }

    pub fn phases(&self) -> &[f64] {
        &self.phases
    }

    pub fn amplitudes(&self) -> &[f64] {
        &self.amplitudes
    }

    pub fn omegas(&self) -> &[f64] {
        &self.omegas
    }

    /// β(t) in rad/ms.
    pub fn beta_at(&self, t: f64) -> Result<f64> {
        check_time(t)?;
        Ok(self.beta_unchecked(t))
    }

    fn beta_unchecked(&self, t: f64) -> f64 {
        self.terms()
            .map(|(a, w, psi)| a * (w * t + psi).cos())
            .sum()
    }

    /// φ(t) = ∫₀ᵗ β(τ) dτ = Σ_j (a_j/ω_j)[sin(ω_j t + ψ_j) − sin ψ_j].
    pub fn accumulated_phase(&self, t: f64) -> Result<f64> {
        check_time(t)?;
        Ok(self
            .terms()
            .map(|(a, w, psi)| a / w * ((w * t + psi).sin() - psi.sin()))
            .sum())
    }

    /// Per-slice rotation angles θ_k = [ω₀ + β(t_k^mid)]·(t_total/S).
    pub fn discretize(&self, system_freq: f64, t_total: f64, slices: usize) -> Result<Vec<f64>> {
        if slices == 0 {
            return Err(Error::Domain("slice count must be ≥ 1".into()));
        }
        if !(t_total > 0.0 && t_total.is_finite()) {
            return Err(Error::Domain(format!("total time must be > 0, got {t_total}")));
        }
        let dt = t_total / slices as f64;
        Ok((0..slices)
            .map(|k| {
                let mid = (k as f64 + 0.5) * dt;
                (system_freq + self.beta_unchecked(mid)) * dt
            })
            .collect())
    }

    fn terms(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        self.amplitudes
            .iter()
            .zip(&self.omegas)
            .zip(&self.phases)
            .map(|((&a, &w), &psi)| (a, w, psi))
    }
}

fn check_time(t: f64) -> Result<()> {
    if t >= 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("time must be finite and ≥ 0, got {t}")))
    }
}

/// Coefficients of the summed phase of one or more trajectories that share a
/// harmonic grid:
///
/// Σ_k φ_k(t) = Σ_j [s_j sin(ω_j t) + k_j cos(ω_j t)] − Σ_j k_j,
///
/// with s_j = (a_j/ω_j) Σ_k cos ψ_jk and k_j = (a_j/ω_j) Σ_k sin ψ_jk.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseCoefficients {
    sin_coeff: Vec<f64>,
    cos_coeff: Vec<f64>,
    offset: f64,
}

impl PhaseCoefficients {
    pub fn from_trajectories<'a, I>(trajectories: I) -> Self
    where
        I: IntoIterator<Item = &'a NoiseTrajectory>,
    {
        let mut iter = trajectories.into_iter().peekable();
        let len = iter.peek().map_or(0, |t| t.phases.len());
        let mut sin_coeff = vec![0.0; len];
        let mut cos_coeff = vec![0.0; len];
        for traj in iter {
            for (j, (a, w, psi)) in traj.terms().enumerate() {
                let b = a / w;
                sin_coeff[j] += b * psi.cos();
                cos_coeff[j] += b * psi.sin();
            }
        }
        let offset = cos_coeff.iter().sum();
        PhaseCoefficients {
            sin_coeff,
            cos_coeff,
            offset,
        }
    }
}

/// sin(ω_j t) and cos(ω_j t) tabulated on a time grid, shared by every
/// sample in an ensemble.
#[derive(Debug, Clone)]
pub struct PhaseTable {
    times: Vec<f64>,
    harmonics: usize,
    sin: Vec<f64>,
    cos: Vec<f64>,
}

impl PhaseTable {
    pub fn new(model: &NoiseModel, times: &[f64]) -> Result<Self> {
        for &t in times {
            check_time(t)?;
        }
        let harmonics = model.harmonic_count();
        let mut sin = Vec::with_capacity(times.len() * harmonics);
        let mut cos = Vec::with_capacity(times.len() * harmonics);
        for &t in times {
            for w in model.omegas() {
                let (s, c) = (w * t).sin_cos();
                sin.push(s);
                cos.push(c);
            }
        }
        Ok(PhaseTable {
            times: times.to_vec(),
            harmonics,
            sin,
            cos,
        })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    /// Summed phase at the `index`-th grid time.
    pub fn phase(&self, coeffs: &PhaseCoefficients, index: usize) -> f64 {
        let row = index * self.harmonics;
        let s = &self.sin[row..row + self.harmonics];
        let c = &self.cos[row..row + self.harmonics];
        let mut acc = 0.0;
        for j in 0..self.harmonics {
            acc += coeffs.sin_coeff[j] * s[j] + coeffs.cos_coeff[j] * c[j];
        }
        acc - coeffs.offset
    }

    pub fn phases(&self, coeffs: &PhaseCoefficients) -> Vec<f64> {
        (0..self.times.len()).map(|i| self.phase(coeffs, i)).collect()
    }
}

/// How per-sample phases are obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhaseMethod {
    /// Closed-form phase integral.
    Exact,
    /// Sum of midpoint slice angles with the configured slice count.
    Sliced,
}

/// Empirical decoherence factor Γ̂(t) = −ln|⟨e^{iφ(t)}⟩| with jackknife errors.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalDecoherence {
    pub times: Vec<f64>,
    pub gamma_hat: Vec<f64>,
    pub stderr: Vec<f64>,
    /// Set where the ensemble average vanished; `gamma_hat` is +∞ there.
    pub dephased: Vec<bool>,
}

pub fn empirical_decoherence(
    model: &NoiseModel,
    config: &EnsembleConfig,
    times: &[f64],
) -> Result<EmpiricalDecoherence> {
    empirical_decoherence_with(model, config, times, PhaseMethod::Exact)
}

pub fn empirical_decoherence_with(
    model: &NoiseModel,
    config: &EnsembleConfig,
    times: &[f64],
    method: PhaseMethod,
) -> Result<EmpiricalDecoherence> {
    config.validate()?;
    if times.is_empty() {
        return Err(Error::Domain("time grid is empty".into()));
    }
    let table = PhaseTable::new(model, times)?;
    let omega0 = model.system_freq();

    let phasors: Vec<Vec<Complex<f64>>> = (0..config.sample_count)
        .into_par_iter()
        .map(|sample| {
            let traj = sample_trajectory(model, StreamId::new(config.master_seed, sample, 0));
            let phases: Vec<f64> = match method {
                PhaseMethod::Exact => {
                    table.phases(&PhaseCoefficients::from_trajectories([&traj]))
                }
                PhaseMethod::Sliced => times
                    .iter()
                    .map(|&t| {
                        if t == 0.0 {
                            return 0.0;
                        }
                        let angles = traj
                            .discretize(omega0, t, config.slice_count)
                            .expect("validated slice count and time");
                        angles.iter().sum::<f64>() - omega0 * t
                    })
                    .collect(),
            };
            phases.into_iter().map(|p| Complex::from_polar(1.0, p)).collect()
        })
        .collect();

    Ok(reduce_phasors(times, &phasors))
}

/// Γ̂ and jackknife errors from per-sample phasors (`phasors[sample][time]`).
fn reduce_phasors(times: &[f64], phasors: &[Vec<Complex<f64>>]) -> EmpiricalDecoherence {
    let m = phasors.len();
    let mut gamma_hat = Vec::with_capacity(times.len());
    let mut stderr = Vec::with_capacity(times.len());
    let mut dephased = Vec::with_capacity(times.len());
    for ti in 0..times.len() {
        let total: Complex<f64> = phasors.iter().map(|row| row[ti]).sum();
        let modulus = (total / m as f64).norm();
        if modulus <= f64::MIN_POSITIVE {
            gamma_hat.push(f64::INFINITY);
            stderr.push(f64::INFINITY);
            dephased.push(true);
            continue;
        }
        gamma_hat.push(-modulus.ln());
        dephased.push(false);
        stderr.push(if m < 2 {
            f64::INFINITY
        } else {
            let loo: Vec<f64> = phasors
                .iter()
                .map(|row| -((total - row[ti]) / (m - 1) as f64).norm().ln())
                .collect();
            let mean = loo.iter().sum::<f64>() / m as f64;
            let ss: f64 = loo.iter().map(|g| (g - mean).powi(2)).sum();
            ((m - 1) as f64 / m as f64 * ss).sqrt()
        });
    }
    EmpiricalDecoherence {
        times: times.to_vec(),
        gamma_hat,
        stderr,
        dephased,
    }
}

/// Trajectory dump: `sample_id,qubit_id,j,omega_j,amplitude,psi`.
pub fn write_trajectory_csv<W: Write>(
    w: &mut W,
    model: &NoiseModel,
    config: &EnsembleConfig,
) -> io::Result<()> {
    writeln!(w, "sample_id,qubit_id,j,omega_j,amplitude,psi")?;
    for sample in 0..config.sample_count {
        for qubit in 0..config.qubit_count {
            let traj = sample_trajectory(model, StreamId::new(config.master_seed, sample, qubit));
            for (j, (a, om, psi)) in traj.terms().enumerate() {
                writeln!(
                    w,
                    "{sample},{qubit},{},{},{},{}",
                    j + 1,
                    num(om),
                    num(a),
                    num(psi)
                )?;
            }
        }
    }
    Ok(())
}

/// Slice schedule dump: `sample_id,qubit_id,slice_index,theta`.
pub fn write_slice_csv<W: Write>(
    w: &mut W,
    model: &NoiseModel,
    config: &EnsembleConfig,
    system_freq: f64,
    t_total: f64,
) -> io::Result<()> {
    writeln!(w, "sample_id,qubit_id,slice_index,theta")?;
    for sample in 0..config.sample_count {
        for qubit in 0..config.qubit_count {
            let traj = sample_trajectory(model, StreamId::new(config.master_seed, sample, qubit));
            let angles = traj
                .discretize(system_freq, t_total, config.slice_count)
                .map_err(|e| io::Error::new(io::ErrorKind::InvalidInput, e.to_string()))?;
            for (k, theta) in angles.iter().enumerate() {
                writeln!(w, "{sample},{qubit},{k},{}", num(*theta))?;
            }
        }
    }
    Ok(())
}

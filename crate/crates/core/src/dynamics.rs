//! Ramsey dynamics of product and GHZ probes under per-trajectory pure
//! dephasing, plus the time-local master equation as an independent oracle.
//!
//! Pure dephasing commutes with the free Hamiltonian, so each trajectory is
//! fully described by its accumulated phases; no state vector is needed.

use std::fmt;
use std::io::{self, Write};

use nalgebra::Complex;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::export::{num, write_metadata};
use crate::noise::{
    sample_trajectory, substream, EnsembleConfig, PhaseCoefficients, PhaseTable, StreamId,
};
use crate::spectra::NoiseModel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProbeKind {
    Unentangled,
    Ghz,
}

impl ProbeKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ProbeKind::Unentangled => "unentangled",
            ProbeKind::Ghz => "ghz",
        }
    }
}

impl fmt::Display for ProbeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbeSpec {
    pub kind: ProbeKind,
    pub qubit_count: usize,
    /// Energy splitting ω₀ being measured (rad/ms).
    pub system_freq: f64,
}

impl ProbeSpec {
    pub fn new(kind: ProbeKind, qubit_count: usize, system_freq: f64) -> Result<Self> {
        if qubit_count == 0 {
            return Err(Error::Config("probe needs at least one qubit".into()));
        }
        if !system_freq.is_finite() {
            return Err(Error::Config("probe frequency must be finite".into()));
        }
        Ok(ProbeSpec {
            kind,
            qubit_count,
            system_freq,
        })
    }

    /// Fringe frequency of the readout signal: n·ω₀ for GHZ, ω₀ otherwise.
    pub fn fringe_freq(&self) -> f64 {
        match self.kind {
            ProbeKind::Ghz => self.qubit_count as f64 * self.system_freq,
            ProbeKind::Unentangled => self.system_freq,
        }
    }

    /// Number of qubits whose phases add coherently in the readout.
    pub fn coherent_qubits(&self) -> usize {
        match self.kind {
            ProbeKind::Ghz => self.qubit_count,
            ProbeKind::Unentangled => 1,
        }
    }
}

/// Transition probability of one trajectory given per-qubit noise phases.
///
/// GHZ: ½[1 − cos(nω₀t + Σ_k φ_k)]; product probe: the average over qubits of
/// ½[1 − cos(ω₀t + φ_k)].
pub fn trajectory_population(probe: &ProbeSpec, phases: &[f64], t: f64) -> Result<f64> {
    if phases.len() != probe.qubit_count {
        return Err(Error::Contract(format!(
            "phase list has {} entries, probe has {} qubits",
            phases.len(),
            probe.qubit_count
        )));
    }
    Ok(match probe.kind {
        ProbeKind::Ghz => ghz_population(probe, phases.iter().sum(), t),
        ProbeKind::Unentangled => product_population(probe, phases.iter().copied(), t),
    })
}

fn ghz_population(probe: &ProbeSpec, total_phase: f64, t: f64) -> f64 {
    let n = probe.qubit_count as f64;
    0.5 * (1.0 - (n * probe.system_freq * t + total_phase).cos())
}

fn product_population(probe: &ProbeSpec, phases: impl Iterator<Item = f64>, t: f64) -> f64 {
    let sum: f64 = phases
        .map(|phi| 0.5 * (1.0 - (probe.system_freq * t + phi).cos()))
        .sum();
    sum / probe.qubit_count as f64
}

/// Reject time grids that undersample the readout fringe.
pub fn check_sampling(times: &[f64], fringe: f64) -> Result<()> {
    let max_step = times
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(0.0_f64, f64::max);
    let allowed_step = std::f64::consts::PI / fringe.abs();
    if fringe != 0.0 && max_step >= allowed_step {
        return Err(Error::Grid {
            max_step,
            allowed_step,
            fringe: fringe.abs(),
            min_rate: 1.0 / allowed_step,
        });
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RamseyOptions {
    /// Projective readout with this many shots per time point.
    pub shots: Option<u32>,
}

/// Ensemble Ramsey signal.
#[derive(Debug, Clone, PartialEq)]
pub struct RamseyCurve {
    pub times: Vec<f64>,
    pub p_mean: Vec<f64>,
    /// Standard error of `p_mean` over samples.
    pub p_stderr: Vec<f64>,
    /// `p_samples[sample][time]`, qubit-averaged for product probes.
    pub p_samples: Vec<Vec<f64>>,
    pub probe: ProbeSpec,
    pub model_fingerprint: u64,
    pub master_seed: u64,
}

pub fn simulate_ramsey(
    probe: &ProbeSpec,
    model: &NoiseModel,
    config: &EnsembleConfig,
    times: &[f64],
) -> Result<RamseyCurve> {
    simulate_ramsey_with(probe, model, config, times, RamseyOptions::default())
}

/// Monte Carlo Ramsey experiment. Qubit `k` of sample `i` always uses
/// substream `(master_seed, i, k)`, whatever the probe kind, so product and
/// GHZ runs with the same seed see the same noise.
pub fn simulate_ramsey_with(
    probe: &ProbeSpec,
    model: &NoiseModel,
    config: &EnsembleConfig,
    times: &[f64],
    options: RamseyOptions,
) -> Result<RamseyCurve> {
    config.validate()?;
    if times.is_empty() {
        return Err(Error::Domain("time grid is empty".into()));
    }
    let table = PhaseTable::new(model, times)?;
    let n = probe.qubit_count;

    let p_samples: Vec<Vec<f64>> = (0..config.sample_count)
        .into_par_iter()
        .map(|sample| {
            let trajs: Vec<_> = (0..n)
                .map(|q| sample_trajectory(model, StreamId::new(config.master_seed, sample, q)))
                .collect();
            match probe.kind {
                ProbeKind::Ghz => {
                    let coeffs = PhaseCoefficients::from_trajectories(&trajs);
                    times
                        .iter()
                        .enumerate()
                        .map(|(i, &t)| ghz_population(probe, table.phase(&coeffs, i), t))
                        .collect()
                }
                ProbeKind::Unentangled => {
                    let per_qubit: Vec<Vec<f64>> = trajs
                        .iter()
                        .map(|tr| table.phases(&PhaseCoefficients::from_trajectories([tr])))
                        .collect();
                    times
                        .iter()
                        .enumerate()
                        .map(|(i, &t)| {
                            product_population(probe, per_qubit.iter().map(|p| p[i]), t)
                        })
                        .collect()
                }
            }
        })
        .collect();

    let m = config.sample_count as f64;
    let mut p_mean = Vec::with_capacity(times.len());
    let mut p_stderr = Vec::with_capacity(times.len());
    for ti in 0..times.len() {
        let mean = p_samples.iter().map(|row| row[ti]).sum::<f64>() / m;
        let var = if config.sample_count > 1 {
            p_samples.iter().map(|row| (row[ti] - mean).powi(2)).sum::<f64>() / (m - 1.0)
        } else {
            0.0
        };
        p_mean.push(mean);
        p_stderr.push((var / m).sqrt());
    }

    if let Some(shots) = options.shots {
        if shots == 0 {
            return Err(Error::Config("shot count must be positive".into()));
        }
        let mut rng = substream(StreamId {
            master_seed: config.master_seed,
            sample: u32::MAX,
            qubit: u32::MAX,
        });
        for (p, err) in p_mean.iter_mut().zip(p_stderr.iter_mut()) {
            let prob = p.clamp(0.0, 1.0);
            let dist = Binomial::new(u64::from(shots), prob)
                .map_err(|e| Error::Domain(format!("binomial readout: {e}")))?;
            let hits = dist.sample(&mut rng) as f64;
            *p = hits / f64::from(shots);
            *err = (err.powi(2) + prob * (1.0 - prob) / f64::from(shots)).sqrt();
        }
    }

    Ok(RamseyCurve {
        times: times.to_vec(),
        p_mean,
        p_stderr,
        p_samples,
        probe: *probe,
        model_fingerprint: model.fingerprint(),
        master_seed: config.master_seed,
    })
}

impl RamseyCurve {
    pub fn sample_count(&self) -> usize {
        self.p_samples.len()
    }

    /// CSV export: `t_ms,p_mean,p_stderr[,p_sample_<i>...]` behind `#`
    /// metadata lines. `extra` columns (name, values) are appended after
    /// `p_stderr`.
    pub fn write_csv<W: Write>(
        &self,
        w: &mut W,
        metadata: &[(&str, String)],
        extra: &[(&str, &[f64])],
        per_sample: bool,
    ) -> io::Result<()> {
        let mut meta: Vec<(&str, String)> = vec![
            ("probe", self.probe.kind.to_string()),
            ("n", self.probe.qubit_count.to_string()),
            ("omega0", num(self.probe.system_freq)),
            ("model_hash", format!("{:016x}", self.model_fingerprint)),
            ("master_seed", self.master_seed.to_string()),
            ("samples", self.sample_count().to_string()),
        ];
        meta.extend(metadata.iter().cloned());
        write_metadata(w, &meta)?;

        write!(w, "t_ms,p_mean,p_stderr")?;
        for (name, _) in extra {
            write!(w, ",{name}")?;
        }
        if per_sample {
            for i in 0..self.sample_count() {
                write!(w, ",p_sample_{i}")?;
            }
        }
        writeln!(w)?;
        for ti in 0..self.times.len() {
            write!(
                w,
                "{},{},{}",
                num(self.times[ti]),
                num(self.p_mean[ti]),
                num(self.p_stderr[ti])
            )?;
            for (_, col) in extra {
                write!(w, ",{}", num(col[ti]))?;
            }
            if per_sample {
                for row in &self.p_samples {
                    write!(w, ",{}", num(row[ti]))?;
                }
            }
            writeln!(w)?;
        }
        Ok(())
    }
}

/// Relation between the master-equation rate and the decoherence factor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DephasingConvention {
    /// γ_eff = dΓ/dt, coherence e^{−nΓ}; matches the stochastic model.
    #[default]
    Stochastic,
    /// Lindblad generator γ(σᶻρσᶻ − ρ) read literally: coherence e^{−2nΓ}.
    LindbladFactorTwo,
}

impl DephasingConvention {
    fn factor(self) -> f64 {
        match self {
            DephasingConvention::Stochastic => 1.0,
            DephasingConvention::LindbladFactorTwo => 2.0,
        }
    }
}

const ODE_REL_TOL: f64 = 1e-12;
const ODE_MIN_STEP: f64 = 1e-13;

/// Integrate dc/dt = [−i n ω₀ − n γ_eff(t)] c, c(0) = 1, with classic RK4 and
/// step-doubling error control, reporting c at each requested time.
pub fn master_equation_coherence(
    model: &NoiseModel,
    n: usize,
    system_freq: f64,
    times: &[f64],
    convention: DephasingConvention,
) -> Result<Vec<Complex<f64>>> {
    if n == 0 {
        return Err(Error::Config("qubit count must be positive".into()));
    }
    if let Some(&t) = times.first() {
        if !(t >= 0.0) {
            return Err(Error::Domain(format!("times must start at ≥ 0, got {t}")));
        }
    }
    if times.windows(2).any(|w| !(w[1] >= w[0])) {
        return Err(Error::Domain("times must be ascending".into()));
    }

    let nf = n as f64;
    let k = convention.factor() * nf;
    let rhs = |t: f64, c: Complex<f64>| -> Complex<f64> {
        let rate = model.decoherence_rate(t).unwrap_or(0.0);
        Complex::new(-k * rate, -nf * system_freq) * c
    };
    let rate_bound = 0.5
        * model.alpha_z().powi(2)
        * (1..=model.harmonic_count())
            .map(|j| model.omega(j) * model.modulation_function(j).map_or(0.0, |f| f * f))
            .sum::<f64>();
    let h_max = 0.1 / (nf * system_freq.abs() + k * rate_bound).max(1e-3);

    let rk4 = |t: f64, c: Complex<f64>, h: f64| {
        let k1 = rhs(t, c);
        let k2 = rhs(t + 0.5 * h, c + k1 * (0.5 * h));
        let k3 = rhs(t + 0.5 * h, c + k2 * (0.5 * h));
        let k4 = rhs(t + h, c + k3 * h);
        c + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0)
    };

    let mut out = Vec::with_capacity(times.len());
    let mut t = 0.0;
    let mut c = Complex::new(1.0, 0.0);
    let mut h = h_max;
    for &target in times {
        while t < target {
            let truncated = target - t <= h;
            let step = if truncated { target - t } else { h };
            let full = rk4(t, c, step);
            let half = rk4(t + 0.5 * step, rk4(t, c, 0.5 * step), 0.5 * step);
            let err = (half - full).norm() / 15.0;
            let scale = half.norm().max(1e-300);
            let ratio = if err == 0.0 {
                f64::INFINITY
            } else {
                ODE_REL_TOL * scale / err
            };
            if ratio >= 1.0 {
                c = half + (half - full) / 15.0;
                if truncated {
                    t = target;
                } else {
                    t += step;
                    h = (h * (0.9 * ratio.powf(0.2)).min(2.0)).min(h_max);
                }
            } else {
                h = step * (0.9 * ratio.powf(0.2)).max(0.1);
                if h < ODE_MIN_STEP {
                    return Err(Error::Integration {
                        t,
                        step: h,
                        min_step: ODE_MIN_STEP,
                    });
                }
            }
        }
        out.push(c);
    }
    Ok(out)
}

/// Monte Carlo vs master-equation comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleReport {
    pub times: Vec<f64>,
    pub p_monte_carlo: Vec<f64>,
    pub p_master: Vec<f64>,
    pub deviation: Vec<f64>,
    pub max_deviation: f64,
    pub mean_deviation: f64,
}

pub fn oracle_check(
    model: &NoiseModel,
    probe: &ProbeSpec,
    config: &EnsembleConfig,
    times: &[f64],
    convention: DephasingConvention,
) -> Result<OracleReport> {
    let curve = simulate_ramsey(probe, model, config, times)?;
    let coherence = master_equation_coherence(
        model,
        probe.coherent_qubits(),
        probe.system_freq,
        times,
        convention,
    )?;
    let p_master: Vec<f64> = coherence.iter().map(|c| 0.5 * (1.0 - c.re)).collect();
    let deviation: Vec<f64> = curve
        .p_mean
        .iter()
        .zip(&p_master)
        .map(|(a, b)| (a - b).abs())
        .collect();
    let max_deviation = deviation.iter().copied().fold(0.0, f64::max);
    let mean_deviation = deviation.iter().sum::<f64>() / deviation.len().max(1) as f64;
    Ok(OracleReport {
        times: times.to_vec(),
        p_monte_carlo: curve.p_mean,
        p_master,
        deviation,
        max_deviation,
        mean_deviation,
    })
}

impl OracleReport {
    pub fn write_csv<W: Write>(&self, w: &mut W, metadata: &[(&str, String)]) -> io::Result<()> {
        let mut meta = metadata.to_vec();
        meta.push(("max_deviation", num(self.max_deviation)));
        meta.push(("mean_deviation", num(self.mean_deviation)));
        write_metadata(w, &meta)?;
        writeln!(w, "t_ms,p_monte_carlo,p_master,deviation")?;
        for i in 0..self.times.len() {
            writeln!(
                w,
                "{},{},{},{}",
                num(self.times[i]),
                num(self.p_monte_carlo[i]),
                num(self.p_master[i]),
                num(self.deviation[i])
            )?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use std::f64::consts::{FRAC_PI_2, PI};

    use super::*;

    fn grid(start: f64, stop: f64, points: usize) -> Vec<f64> {
        (0..points)
            .map(|i| start + (stop - start) * i as f64 / (points - 1) as f64)
            .collect()
    }

    #[test]
    fn population_special_points() {
        let ghz = ProbeSpec::new(ProbeKind::Ghz, 3, 10.0).unwrap();
        let t = PI / 30.0;
        assert!((trajectory_population(&ghz, &[0.0; 3], t).unwrap() - 1.0).abs() < 1e-15);
        let prod = ProbeSpec::new(ProbeKind::Unentangled, 3, 10.0).unwrap();
        assert_eq!(trajectory_population(&ghz, &[0.0; 3], 0.0).unwrap(), 0.0);
        assert_eq!(trajectory_population(&prod, &[0.0; 3], 0.0).unwrap(), 0.0);
        let ghz2 = ProbeSpec::new(ProbeKind::Ghz, 2, 1.0).unwrap();
        let p = trajectory_population(&ghz2, &[0.0; 2], PI / 4.0).unwrap();
        assert!((p - 0.5).abs() < 1e-15);
        assert!(matches!(
            trajectory_population(&ghz, &[0.0; 2], 0.0),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn ghz_adds_phases_product_averages() {
        let ghz = ProbeSpec::new(ProbeKind::Ghz, 2, 0.0).unwrap();
        let p = trajectory_population(&ghz, &[FRAC_PI_2, FRAC_PI_2], 1.0).unwrap();
        assert!((p - 1.0).abs() < 1e-15);
        let prod = ProbeSpec::new(ProbeKind::Unentangled, 2, 0.0).unwrap();
        let p = trajectory_population(&prod, &[FRAC_PI_2, PI], 1.0).unwrap();
        assert!((p - 0.75).abs() < 1e-15);
    }

    #[test]
    fn noiseless_ghz_fringe() {
        let model = NoiseModel::calibrated_default().with_alpha_z(0.0).unwrap();
        let probe = ProbeSpec::new(ProbeKind::Ghz, 7, 10.0).unwrap();
        let times = grid(0.0, 1.0, 101);
        let curve = simulate_ramsey(&probe, &model, &EnsembleConfig::default(), &times).unwrap();
        for (t, p) in times.iter().zip(&curve.p_mean) {
            assert!((p - 0.5 * (1.0 - (70.0 * t).cos())).abs() < 1e-14);
        }
        assert!(curve.p_stderr.iter().all(|&s| s < 1e-14));
    }

    #[test]
    fn single_qubit_probes_are_identical() {
        let model = NoiseModel::calibrated_default();
        let config = EnsembleConfig::default().with_samples(50);
        let times = grid(0.0, 1.5, 61);
        let a = simulate_ramsey(
            &ProbeSpec::new(ProbeKind::Ghz, 1, 10.0).unwrap(),
            &model,
            &config,
            &times,
        )
        .unwrap();
        let b = simulate_ramsey(
            &ProbeSpec::new(ProbeKind::Unentangled, 1, 10.0).unwrap(),
            &model,
            &config,
            &times,
        )
        .unwrap();
        assert_eq!(a.p_samples, b.p_samples);
        assert_eq!(a.p_mean, b.p_mean);
    }

    #[test]
    fn probabilities_are_bounded() {
        let model = NoiseModel::calibrated_default().calibrate_amplitude(5.0).unwrap();
        let config = EnsembleConfig::default().with_samples(30);
        let probe = ProbeSpec::new(ProbeKind::Unentangled, 4, 10.0).unwrap();
        let curve = simulate_ramsey(&probe, &model, &config, &grid(0.0, 3.0, 200)).unwrap();
        assert!(curve.p_samples.iter().flatten().all(|&p| (0.0..=1.0).contains(&p)));
        assert!(curve.p_mean.iter().all(|&p| (0.0..=1.0).contains(&p)));
    }

    #[test]
    fn shot_noise_is_seeded_and_bounded() {
        let model = NoiseModel::calibrated_default();
        let config = EnsembleConfig::default();
        let probe = ProbeSpec::new(ProbeKind::Ghz, 3, 10.0).unwrap();
        let times = grid(0.0, 1.0, 50);
        let opts = RamseyOptions { shots: Some(100) };
        let a = simulate_ramsey_with(&probe, &model, &config, &times, opts).unwrap();
        let b = simulate_ramsey_with(&probe, &model, &config, &times, opts).unwrap();
        assert_eq!(a.p_mean, b.p_mean);
        for p in &a.p_mean {
            assert!((0.0..=1.0).contains(p));
            assert!((p * 100.0 - (p * 100.0).round()).abs() < 1e-9);
        }
        let bad = RamseyOptions { shots: Some(0) };
        assert!(simulate_ramsey_with(&probe, &model, &config, &times, bad).is_err());
    }

    #[test]
    fn sampling_check() {
        let fine = grid(0.0, 1.0, 101);
        assert!(check_sampling(&fine, 70.0).is_ok());
        let coarse = grid(0.0, 1.0, 11);
        match check_sampling(&coarse, 70.0) {
            Err(Error::Grid { min_rate, .. }) => assert!((min_rate - 70.0 / PI).abs() < 1e-12),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn master_equation_unitary_limit() {
        let model = NoiseModel::calibrated_default().with_alpha_z(0.0).unwrap();
        let times = grid(0.0, 1.0, 21);
        let c = master_equation_coherence(&model, 3, 10.0, &times, DephasingConvention::Stochastic)
            .unwrap();
        for (t, ci) in times.iter().zip(&c) {
            assert!((ci.norm() - 1.0).abs() < 1e-9);
            let expect = Complex::from_polar(1.0, -30.0 * t);
            assert!((ci - expect).norm() < 1e-9);
        }
    }

    #[test]
    fn master_equation_matches_closed_form_decay() {
        let model = NoiseModel::calibrated_default();
        let times = grid(0.0, 1.0, 101);
        for n in [1, 7] {
            let c = master_equation_coherence(
                &model,
                n,
                10.0,
                &times,
                DephasingConvention::Stochastic,
            )
            .unwrap();
            for (t, ci) in times.iter().zip(&c) {
                let g = model.decoherence_factor(*t).unwrap();
                assert!((ci.norm() - (-(n as f64) * g).exp()).abs() < 1e-6);
                let phase = ci.arg();
                let expect = Complex::from_polar(1.0, -(n as f64) * 10.0 * t).arg();
                assert!((phase - expect).abs() < 1e-8 || (phase - expect).abs() > 2.0 * PI - 1e-8);
            }
            let doubled = master_equation_coherence(
                &model,
                n,
                10.0,
                &times,
                DephasingConvention::LindbladFactorTwo,
            )
            .unwrap();
            let g = model.decoherence_factor(1.0).unwrap();
            assert!((doubled[100].norm() - (-2.0 * n as f64 * g).exp()).abs() < 1e-6);
        }
    }

    #[test]
    fn master_equation_rejects_bad_grids() {
        let model = NoiseModel::calibrated_default();
        let conv = DephasingConvention::Stochastic;
        assert!(master_equation_coherence(&model, 1, 10.0, &[0.5, 0.1], conv).is_err());
        assert!(master_equation_coherence(&model, 1, 10.0, &[-0.1], conv).is_err());
        assert!(master_equation_coherence(&model, 0, 10.0, &[0.1], conv).is_err());
    }

    #[test]
    fn oracle_noiseless_is_exact() {
        let model = NoiseModel::calibrated_default().with_alpha_z(0.0).unwrap();
        let probe = ProbeSpec::new(ProbeKind::Ghz, 7, 10.0).unwrap();
        let report = oracle_check(
            &model,
            &probe,
            &EnsembleConfig::default(),
            &grid(0.0, 0.6, 121),
            DephasingConvention::Stochastic,
        )
        .unwrap();
        assert!(report.max_deviation < 1e-6);
    }

    #[test]
    fn csv_export_layout() {
        let model = NoiseModel::calibrated_default();
        let probe = ProbeSpec::new(ProbeKind::Ghz, 2, 10.0).unwrap();
        let config = EnsembleConfig::default().with_samples(3);
        let curve = simulate_ramsey(&probe, &model, &config, &[0.0, 0.1]).unwrap();
        let mut buf = Vec::new();
        curve
            .write_csv(&mut buf, &[("note", "x".into())], &[("envelope", &[0.0, 0.5])], true)
            .unwrap();
        let text = String::from_utf8(buf).unwrap();
        let header = text.lines().find(|l| !l.starts_with('#')).unwrap();
        assert_eq!(header, "t_ms,p_mean,p_stderr,envelope,p_sample_0,p_sample_1,p_sample_2");
        assert!(text.contains("# probe = ghz"));
        assert!(text.contains("# note = x"));
    }
}

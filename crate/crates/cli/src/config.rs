//! Run configuration: flat TOML, layered defaults < preset < file < `--set`.
//!
//! The effective configuration is echoed into every output as `#@ key = value`
//! lines; a file carrying such lines is itself a valid `--config` input.

use std::f64::consts::PI;
use std::path::Path;

use qzmetro_core::dynamics::DephasingConvention;
use qzmetro_core::noise::{DEFAULT_MASTER_SEED, DEFAULT_SAMPLE_COUNT, DEFAULT_SLICE_COUNT};
use qzmetro_core::spectra::DEFAULT_TARGET_C;
use qzmetro_core::{DecoherenceLaw, EnsembleConfig, NoiseModel, ProbeKind, SpectralDensity};
use serde::{Deserialize, Serialize};
use toml::Table;

use crate::CliError;

pub const HEADER_PREFIX: &str = "#@ ";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProbeSelection {
    Both,
    Unentangled,
    Ghz,
}

impl ProbeSelection {
    pub fn kinds(self) -> Vec<ProbeKind> {
        match self {
            ProbeSelection::Both => vec![ProbeKind::Unentangled, ProbeKind::Ghz],
            ProbeSelection::Unentangled => vec![ProbeKind::Unentangled],
            ProbeSelection::Ghz => vec![ProbeKind::Ghz],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    // noise model
    pub reorg_energy: f64,
    pub relax_rate: f64,
    pub base_freq: f64,
    pub harmonics: usize,
    pub inverse_temp: f64,
    /// Frequency inside the modulation function; defaults to `omega0`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub noise_omega0: Option<f64>,
    /// Fixed amplitude; when absent the model is calibrated to `target_c`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha_z: Option<f64>,
    pub target_c: f64,

    // ensemble
    pub samples: usize,
    pub slices: usize,
    pub seed: u64,

    // probes
    pub omega0: f64,
    pub n: usize,
    pub n_min: usize,
    pub n_max: usize,
    pub probe: ProbeSelection,

    // metrology and time grid
    pub total_time: f64,
    pub t_start: f64,
    pub t_stop: f64,
    pub t_points: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scan_bound: Option<f64>,
    /// Common evaluation time for the noiseless sweep; defaults to the
    /// colored-noise product-probe optimum.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fixed_time: Option<f64>,

    // switches
    pub noiseless: bool,
    pub markovian: bool,
    pub lindblad_factor_two: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub shots: Option<u32>,
    pub oracle_threshold: f64,
    pub per_sample_columns: bool,
    pub dump_trajectories: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            reorg_energy: 1.0,
            relax_rate: 1.0,
            base_freq: 2.0 * PI / 1000.0,
            harmonics: 50,
            inverse_temp: 1.0,
            noise_omega0: None,
            alpha_z: None,
            target_c: DEFAULT_TARGET_C,
            samples: DEFAULT_SAMPLE_COUNT,
            slices: DEFAULT_SLICE_COUNT,
            seed: DEFAULT_MASTER_SEED,
            omega0: 10.0,
            n: 7,
            n_min: 2,
            n_max: 7,
            probe: ProbeSelection::Both,
            total_time: 10.0,
            t_start: 0.0,
            t_stop: 1.5,
            t_points: 301,
            scan_bound: None,
            fixed_time: None,
            noiseless: false,
            markovian: false,
            lindblad_factor_two: false,
            shots: None,
            oracle_threshold: 0.02,
            per_sample_columns: false,
            dump_trajectories: false,
        }
    }
}

pub const PRESETS: &[(&str, &str)] = &[
    (
        "paper-n7",
        "n = 7\nsamples = 20\nslices = 1000\nomega0 = 10.0\nprobe = \"both\"\n",
    ),
    (
        "paper-scaling",
        "n_min = 2\nn_max = 7\nsamples = 20\nslices = 1000\nomega0 = 10.0\n",
    ),
    (
        "noiseless-scaling",
        "n_min = 2\nn_max = 7\nsamples = 20\nslices = 1000\nomega0 = 10.0\nnoiseless = true\n",
    ),
];

fn parse_table(text: &str, origin: &str) -> Result<Table, CliError> {
    text.parse::<Table>()
        .map_err(|e| CliError::Config(format!("{origin}: {e}")))
}

/// Keys from `#@` lines if there are any, else the whole file.
fn file_table(path: &Path) -> Result<Table, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    let origin = path.display().to_string();
    let trimmed = text.trim_start();
    if trimmed.starts_with('{') {
        // JSON report: the config travels as a TOML string
        let value: serde_json::Value = serde_json::from_str(trimmed)
            .map_err(|e| CliError::Config(format!("{origin}: {e}")))?;
        let embedded = value
            .get("config")
            .and_then(|v| v.as_str())
            .ok_or_else(|| CliError::Config(format!("{origin}: no embedded config")))?;
        return parse_table(embedded, &origin);
    }
    let echoed: Vec<&str> = text
        .lines()
        .filter_map(|l| l.strip_prefix(HEADER_PREFIX))
        .collect();
    if echoed.is_empty() {
        parse_table(&text, &origin)
    } else {
        parse_table(&echoed.join("\n"), &origin)
    }
}

fn overlay(base: &mut Table, layer: Table) {
    for (k, v) in layer {
        base.insert(k, v);
    }
}

/// Integers are accepted wherever a float is expected.
fn widen_floats(table: &mut Table) {
    let template = toml::Table::try_from(RunConfig::default()).expect("defaults serialize");
    for (key, value) in table.iter_mut() {
        if let (Some(toml::Value::Float(_)), toml::Value::Integer(i)) = (template.get(key), &*value) {
            *value = toml::Value::Float(*i as f64);
        }
    }
    for key in ["noise_omega0", "alpha_z", "scan_bound", "fixed_time"] {
        if let Some(toml::Value::Integer(i)) = table.get(key) {
            let f = *i as f64;
            table.insert(key.to_string(), toml::Value::Float(f));
        }
    }
}

pub struct Sources<'a> {
    pub preset: Option<&'a str>,
    pub file: Option<&'a Path>,
    pub sets: &'a [String],
    pub seed: Option<u64>,
}

pub fn load(sources: Sources<'_>) -> Result<RunConfig, CliError> {
    let mut table = Table::try_from(RunConfig::default()).expect("defaults serialize");
    if let Some(name) = sources.preset {
        let (_, text) = PRESETS
            .iter()
            .find(|(n, _)| *n == name)
            .ok_or_else(|| {
                let known: Vec<&str> = PRESETS.iter().map(|(n, _)| *n).collect();
                CliError::Config(format!("unknown preset '{name}' (known: {})", known.join(", ")))
            })?;
        overlay(&mut table, parse_table(text, name)?);
    }
    if let Some(path) = sources.file {
        overlay(&mut table, file_table(path)?);
    }
    for set in sources.sets {
        if !set.contains('=') {
            return Err(CliError::Config(format!("--set expects KEY=VALUE, got '{set}'")));
        }
        let layer = match parse_table(set, "--set") {
            Ok(t) => t,
            // bare strings such as `probe=ghz`
            Err(_) => {
                let (k, v) = set.split_once('=').expect("checked above");
                parse_table(&format!("{} = {:?}", k.trim(), v.trim()), "--set")?
            }
        };
        overlay(&mut table, layer);
    }
    if let Some(seed) = sources.seed {
        let seed = i64::try_from(seed)
            .map_err(|_| CliError::Config(format!("seed {seed} exceeds the TOML integer range")))?;
        table.insert("seed".into(), toml::Value::Integer(seed));
    }
    widen_floats(&mut table);
    let config: RunConfig = table
        .try_into()
        .map_err(|e: toml::de::Error| CliError::Config(e.message().trim().to_string()))?;
    config.validate()?;
    Ok(config)
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |msg: String| Err(CliError::Config(msg));
        if self.n == 0 || self.n_min == 0 {
            return bad("qubit counts must be ≥ 1".into());
        }
        if self.n_min > self.n_max {
            return bad(format!("n_min = {} exceeds n_max = {}", self.n_min, self.n_max));
        }
        if !(self.t_stop > self.t_start && self.t_start >= 0.0) {
            return bad(format!(
                "time grid needs 0 ≤ t_start < t_stop, got [{}, {}]",
                self.t_start, self.t_stop
            ));
        }
        if self.t_points < 2 {
            return bad("t_points must be ≥ 2".into());
        }
        if !(self.total_time > 0.0) {
            return bad(format!("total_time must be > 0, got {}", self.total_time));
        }
        if !(self.target_c > 0.0) {
            return bad(format!("target_c must be > 0, got {}", self.target_c));
        }
        if self.samples == 0 || self.slices == 0 {
            return bad("samples and slices must be ≥ 1".into());
        }
        if self.noiseless && self.markovian {
            return bad("noiseless and markovian are mutually exclusive".into());
        }
        if !(self.oracle_threshold > 0.0) {
            return bad("oracle_threshold must be > 0".into());
        }
        if self.shots == Some(0) {
            return bad("shots must be ≥ 1 when given".into());
        }
        Ok(())
    }

    /// Stochastic model; amplitude zero when `noiseless`.
    pub fn noise_model(&self) -> Result<NoiseModel, CliError> {
        let density = SpectralDensity::drude_lorentz(self.reorg_energy, self.relax_rate)?;
        let model = NoiseModel::new(
            density,
            self.alpha_z.unwrap_or(1.0),
            self.base_freq,
            self.harmonics,
            self.inverse_temp,
            self.noise_omega0.unwrap_or(self.omega0),
        )?;
        let model = match self.alpha_z {
            Some(_) => model,
            None => model.calibrate_amplitude(self.target_c)?,
        };
        if self.noiseless {
            Ok(model.with_alpha_z(0.0)?)
        } else {
            Ok(model)
        }
    }

    /// Decoherence law for the analytic commands.
    pub fn law(&self) -> Result<DecoherenceLaw, CliError> {
        if self.noiseless {
            return Ok(DecoherenceLaw::Noiseless);
        }
        let model = self.noise_model()?;
        if self.markovian {
            return Ok(DecoherenceLaw::Markovian {
                c: model.quadratic_coefficient(),
            });
        }
        Ok(DecoherenceLaw::Spectral(model))
    }

    /// Colored-noise law with the same parameters, ignoring `noiseless`.
    pub fn colored_law(&self) -> Result<DecoherenceLaw, CliError> {
        RunConfig {
            noiseless: false,
            ..self.clone()
        }
        .law()
    }

    pub fn ensemble(&self, qubits: usize) -> Result<EnsembleConfig, CliError> {
        Ok(EnsembleConfig::new(self.samples, self.slices, self.seed, qubits)?)
    }

    pub fn times(&self) -> Vec<f64> {
        let steps = (self.t_points - 1) as f64;
        (0..self.t_points)
            .map(|i| self.t_start + (self.t_stop - self.t_start) * i as f64 / steps)
            .collect()
    }

    pub fn n_range(&self) -> Vec<usize> {
        (self.n_min..=self.n_max).collect()
    }

    pub fn convention(&self) -> DephasingConvention {
        if self.lindblad_factor_two {
            DephasingConvention::LindbladFactorTwo
        } else {
            DephasingConvention::Stochastic
        }
    }

    /// Plain TOML rendering of the effective configuration.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// `#@ key = value` header lines.
    pub fn header(&self) -> String {
        self.to_toml()
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(|l| format!("{HEADER_PREFIX}{l}\n"))
            .collect()
    }
}

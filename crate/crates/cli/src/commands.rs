//! Command implementations. Every file starts with the echoed config header;
//! all writing happens on the calling thread.

use std::fmt::Write as _;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use qzmetro_core::dynamics::{self, check_sampling, RamseyOptions};
use qzmetro_core::export::{num, write_metadata};
use qzmetro_core::fitting::{dominant_frequency, fit_ramsey_curve, propagate_delta_omega};
use qzmetro_core::metrology::{self, optimal_time, sensitivity_point, variance_curve, SweepMode};
use qzmetro_core::noise::{write_slice_csv, write_trajectory_csv};
use qzmetro_core::{
    DecoherenceLaw, Error, Parameterization, ProbeKind, ProbeSpec, ScalingReport,
};
use serde_json::json;

use crate::config::{ProbeSelection, RunConfig};
use crate::CliError;

pub struct Output {
    dir: PathBuf,
    header: String,
    config_toml: String,
    command: &'static str,
}

impl Output {
    pub fn new(dir: &Path, cfg: &RunConfig, command: &'static str) -> Result<Self, CliError> {
        fs::create_dir_all(dir)?;
        Ok(Output {
            dir: dir.to_path_buf(),
            header: format!("{}# command = {command}\n", cfg.header()),
            config_toml: cfg.to_toml(),
            command,
        })
    }

    fn write(
        &self,
        name: &str,
        body: impl FnOnce(&mut Vec<u8>) -> io::Result<()>,
    ) -> Result<PathBuf, CliError> {
        let mut buf = self.header.clone().into_bytes();
        body(&mut buf)?;
        let path = self.dir.join(name);
        fs::write(&path, buf)?;
        println!("wrote {}", path.display());
        Ok(path)
    }

    fn write_json(&self, name: &str, mut value: serde_json::Value) -> Result<PathBuf, CliError> {
        value["config"] = json!(self.config_toml);
        value["command"] = json!(self.command);
        let text = serde_json::to_string_pretty(&value).expect("json value serializes");
        let path = self.dir.join(name);
        fs::write(&path, text + "\n")?;
        println!("wrote {}", path.display());
        Ok(path)
    }
}

fn law_name(law: &DecoherenceLaw) -> &'static str {
    match law {
        DecoherenceLaw::Spectral(_) => "colored",
        DecoherenceLaw::Quadratic { .. } => "quadratic",
        DecoherenceLaw::Markovian { .. } => "markovian",
        DecoherenceLaw::Noiseless => "noiseless",
    }
}

/// lim Γ(t)/t² as t → 0.
fn short_time_limit(law: &DecoherenceLaw) -> f64 {
    match law {
        DecoherenceLaw::Spectral(model) => model.quadratic_coefficient(),
        DecoherenceLaw::Quadratic { c } => *c,
        DecoherenceLaw::Markovian { c } => {
            if *c > 0.0 {
                f64::INFINITY
            } else {
                0.0
            }
        }
        DecoherenceLaw::Noiseless => 0.0,
    }
}

pub fn spectrum(cfg: &RunConfig, out: &Output) -> Result<(), CliError> {
    let model = cfg.noise_model()?;
    let law = cfg.law()?;
    out.write("spectrum.csv", |w| {
        write_metadata(
            w,
            &[
                ("alpha_z", num(model.alpha_z())),
                ("quadratic_coefficient", num(model.quadratic_coefficient())),
                ("cutoff", num(model.cutoff())),
            ],
        )?;
        writeln!(w, "j,omega_j,spectral_density,modulation,amplitude")?;
        let amps = model.amplitudes();
        for j in 1..=model.harmonic_count() {
            let omega = model.omega(j);
            let density = model.density().evaluate(omega).map_err(to_io)?;
            let f = model.modulation_function(j).map_err(to_io)?;
            writeln!(w, "{j},{},{},{},{}", num(omega), num(density), num(f), num(amps[j - 1]))?;
        }
        Ok(())
    })?;
    let times = cfg.times();
    let mut rows = Vec::with_capacity(times.len());
    for &t in &times {
        let g = law.factor(t)?;
        let r = law.rate(t)?;
        let ratio = if t == 0.0 { short_time_limit(&law) } else { g / (t * t) };
        rows.push((t, g, r, ratio));
    }
    out.write("decoherence.csv", |w| {
        write_metadata(w, &[("law", law_name(&law).to_string())])?;
        writeln!(w, "t_ms,gamma_factor,gamma_rate,gamma_over_t2")?;
        for (t, g, r, ratio) in &rows {
            writeln!(w, "{},{},{},{}", num(*t), num(*g), num(*r), num(*ratio))?;
        }
        Ok(())
    })?;
    Ok(())
}

fn to_io(e: Error) -> io::Error {
    io::Error::new(io::ErrorKind::InvalidData, e.to_string())
}

fn stochastic_only(cfg: &RunConfig, what: &str) -> Result<(), CliError> {
    if cfg.markovian {
        return Err(CliError::Config(format!(
            "markovian is an analytic law with no stochastic realization; {what} needs the spectral model"
        )));
    }
    Ok(())
}

/// Periodogram on the natural frequency bins 2πk/span, k = 0..=N/2.
fn periodogram(times: &[f64], signal: &[f64]) -> Vec<(f64, f64)> {
    let count = times.len();
    let span = times[count - 1] - times[0];
    let mean = signal.iter().sum::<f64>() / count as f64;
    (0..=count / 2)
        .map(|k| {
            let omega = std::f64::consts::TAU * k as f64 / span;
            let (mut re, mut im) = (0.0, 0.0);
            for (t, y) in times.iter().zip(signal) {
                let (s, c) = (omega * (t - times[0])).sin_cos();
                re += (y - mean) * c;
                im -= (y - mean) * s;
            }
            (omega, (re * re + im * im) / count as f64)
        })
        .collect()
}

pub fn ramsey(cfg: &RunConfig, out: &Output) -> Result<(), CliError> {
    stochastic_only(cfg, "ramsey")?;
    let model = cfg.noise_model()?;
    let times = cfg.times();
    let kinds = cfg.probe.kinds();
    let probes: Vec<ProbeSpec> = kinds
        .iter()
        .map(|&k| ProbeSpec::new(k, cfg.n, cfg.omega0))
        .collect::<Result<_, _>>()?;
    for p in &probes {
        check_sampling(&times, p.fringe_freq())?;
    }
    let options = RamseyOptions { shots: cfg.shots };

    for probe in &probes {
        let curve = dynamics::simulate_ramsey_with(probe, &model, &cfg.ensemble(cfg.n)?, &times, options)?;
        let signal: Vec<f64> = curve.p_mean.iter().map(|p| 1.0 - 2.0 * p).collect();
        let fringe = dominant_frequency(&times, &signal);
        let fit = fit_ramsey_curve(&curve, Parameterization::QuadraticGamma);
        let kind = probe.kind.as_str();

        let mut meta = vec![(
            "fringe_freq",
            fringe.map_or_else(|| "none".to_string(), num),
        )];
        let mut extra_cols: Vec<(&str, Vec<f64>)> = Vec::new();
        let report = match &fit {
            Ok(fit) => {
                let c = fit.c_hat().expect("quadratic fit");
                let nc = fit.envelope_coefficient().expect("quadratic fit");
                let coherent = probe.coherent_qubits() as f64;
                meta.push(("omega_hat", num(fit.omega_hat)));
                meta.push(("c_hat", num(c)));
                meta.push(("envelope_coefficient", num(nc)));
                extra_cols.push((
                    "fit",
                    times
                        .iter()
                        .map(|t| 0.5 * (1.0 - (coherent * fit.omega_hat * t).cos() * (-nc * t * t).exp()))
                        .collect(),
                ));
                extra_cols.push((
                    "envelope",
                    times.iter().map(|t| 0.5 * (1.0 - (-nc * t * t).exp())).collect(),
                ));
                let sens = propagate_delta_omega(fit, cfg.n, cfg.total_time, probe.kind).ok();
                json!({ "probe": kind, "n": cfg.n, "fit": fit, "sensitivity": sens })
            }
            Err(e) => {
                eprintln!("qzmetro: warning: {kind} fit failed: {e}");
                meta.push(("fit", "failed".to_string()));
                json!({ "probe": kind, "n": cfg.n, "fit": null, "error": e.to_string() })
            }
        };
        let extra: Vec<(&str, &[f64])> = extra_cols.iter().map(|(n, v)| (*n, v.as_slice())).collect();
        out.write(&format!("ramsey_{kind}.csv"), |w| {
            curve.write_csv(w, &meta, &extra, cfg.per_sample_columns)
        })?;
        let spectrum = periodogram(&times, &signal);
        out.write(&format!("ramsey_{kind}_fft.csv"), |w| {
            writeln!(w, "omega,power")?;
            for (omega, power) in &spectrum {
                writeln!(w, "{},{}", num(*omega), num(*power))?;
            }
            Ok(())
        })?;
        out.write_json(&format!("fit_{kind}.json"), report)?;
    }

    if cfg.dump_trajectories {
        let ensemble = cfg.ensemble(cfg.n)?;
        out.write("trajectories.csv", |w| write_trajectory_csv(w, &model, &ensemble))?;
        out.write("slices.csv", |w| write_slice_csv(w, &model, &ensemble, cfg.omega0, cfg.t_stop))?;
    }

    let mut gp = String::from("set xlabel 't (ms)'\nset ylabel 'P(t)'\nset datafile separator ','\nplot ");
    let plots: Vec<String> = kinds
        .iter()
        .map(|k| {
            format!(
                "'ramsey_{k}.csv' using 1:2 with lines title '{k}', 'ramsey_{k}.csv' using 1:5 with lines dt 2 title '{k} envelope'",
                k = k.as_str()
            )
        })
        .collect();
    gp.push_str(&plots.join(", \\\n     "));
    gp.push('\n');
    out.write("ramsey.gp", |w| w.write_all(gp.as_bytes()))?;
    Ok(())
}

pub fn sensitivity(cfg: &RunConfig, out: &Output) -> Result<(), CliError> {
    let law = cfg.law()?;
    let times = cfg.times();
    let u = ProbeSpec::new(ProbeKind::Unentangled, cfg.n, cfg.omega0)?;
    let e = ProbeSpec::new(ProbeKind::Ghz, cfg.n, cfg.omega0)?;
    let cu = variance_curve(&law, &u, cfg.total_time, &times)?;
    let ce = variance_curve(&law, &e, cfg.total_time, &times)?;
    out.write("sensitivity.csv", |w| {
        write_metadata(
            w,
            &[("law", law_name(&law).to_string()), ("n", cfg.n.to_string())],
        )?;
        writeln!(w, "t_ms,delta_omega_unentangled,delta_omega_ghz")?;
        for ((t, u), e) in times.iter().zip(&cu.delta_omega).zip(&ce.delta_omega) {
            writeln!(w, "{},{},{}", num(*t), num(*u), num(*e))?;
        }
        Ok(())
    })?;

    let mut points = Vec::new();
    for probe in [&u, &e] {
        match sensitivity_point(&law, probe, cfg.total_time, cfg.scan_bound) {
            Ok(p) => points.push(p),
            Err(Error::NoOptimum { bound }) => {
                eprintln!(
                    "qzmetro: notice: no optimal time for the {} probe in (0, {bound}] ms; curves written without optima",
                    probe.kind
                );
            }
            Err(err) => return Err(err.into()),
        }
    }
    let ratio = (points.len() == 2).then(|| points[0].delta_omega_min / points[1].delta_omega_min);
    out.write("optima.csv", |w| {
        write_metadata(w, &[("r", ratio.map_or_else(|| "none".to_string(), num))])?;
        writeln!(w, "n,probe,t_opt_ms,delta_omega_min")?;
        for p in &points {
            writeln!(w, "{},{},{},{}", p.n, p.kind, num(p.t_opt), num(p.delta_omega_min))?;
        }
        Ok(())
    })?;
    let gp = "set xlabel 't (ms)'\nset ylabel 'delta omega_0 (rad/ms)'\nset logscale y\nset datafile separator ','\n\
plot 'sensitivity.csv' using 1:2 with lines title 'unentangled', \\\n     \
'sensitivity.csv' using 1:3 with lines title 'GHZ', \\\n     \
'optima.csv' using 3:4 with points pt 7 title 'optimal points'\n";
    out.write("sensitivity.gp", |w| w.write_all(gp.as_bytes()))?;
    Ok(())
}

pub fn scaling(cfg: &RunConfig, out: &Output) -> Result<(), CliError> {
    let ns = cfg.n_range();
    let colored_law = cfg.colored_law()?;
    let colored = metrology::sensitivity_sweep(
        &colored_law,
        &ns,
        cfg.total_time,
        cfg.omega0,
        SweepMode::Optimal,
        cfg.scan_bound,
    )?;
    let regime = law_name(&colored_law);
    write_report(out, &format!("scaling_{regime}.csv"), &colored, regime)?;

    let noiseless = if cfg.noiseless {
        let t = match cfg.fixed_time {
            Some(t) => t,
            None => optimal_time(
                &colored_law,
                &ProbeSpec::new(ProbeKind::Unentangled, 1, cfg.omega0)?,
                cfg.scan_bound,
            )?,
        };
        let rep = metrology::sensitivity_sweep(
            &DecoherenceLaw::Noiseless,
            &ns,
            cfg.total_time,
            cfg.omega0,
            SweepMode::FixedTime(t),
            None,
        )?;
        write_report(out, "scaling_noiseless.csv", &rep, "noiseless")?;
        Some(rep)
    } else {
        None
    };

    out.write("scaling.dat", |w| {
        write!(w, "# n r_{regime} delta_e_{regime}")?;
        if noiseless.is_some() {
            write!(w, " r_noiseless delta_e_noiseless")?;
        }
        writeln!(w)?;
        for (i, n) in ns.iter().enumerate() {
            write!(w, "{n} {} {}", num(colored.ratios[i]), num(colored.ghz[i].delta_omega_min))?;
            if let Some(rep) = &noiseless {
                write!(w, " {} {}", num(rep.ratios[i]), num(rep.ghz[i].delta_omega_min))?;
            }
            writeln!(w)?;
        }
        Ok(())
    })?;

    let mut gp = String::new();
    let _ = write!(
        gp,
        "set xlabel 'n'\nset logscale xy\n\
plot 'scaling.dat' using 1:2 with linespoints title 'r ({regime})', \\\n     \
'scaling.dat' using 1:3 with linespoints title 'delta omega_e ({regime})'"
    );
    if noiseless.is_some() {
        gp.push_str(
            ", \\\n     'scaling.dat' using 1:4 with linespoints title 'r (noiseless)', \\\n     \
'scaling.dat' using 1:5 with linespoints title 'delta omega_e (noiseless)'",
        );
    }
    gp.push('\n');
    out.write("scaling.gp", |w| w.write_all(gp.as_bytes()))?;
    Ok(())
}

fn write_report(out: &Output, name: &str, rep: &ScalingReport, regime: &str) -> Result<(), CliError> {
    let mode = match rep.mode {
        SweepMode::Optimal => "optimal".to_string(),
        SweepMode::FixedTime(t) => format!("fixed_time {}", num(t)),
    };
    out.write(name, |w| {
        rep.write_csv(w, &[("regime", regime.to_string()), ("mode", mode)])
    })?;
    Ok(())
}

pub fn oracle_check(cfg: &RunConfig, out: &Output) -> Result<(), CliError> {
    stochastic_only(cfg, "oracle-check")?;
    let model = cfg.noise_model()?;
    let kind = match cfg.probe {
        ProbeSelection::Unentangled => ProbeKind::Unentangled,
        ProbeSelection::Ghz | ProbeSelection::Both => ProbeKind::Ghz,
    };
    let probe = ProbeSpec::new(kind, cfg.n, cfg.omega0)?;
    let times = cfg.times();
    check_sampling(&times, probe.fringe_freq())?;
    let report = dynamics::oracle_check(&model, &probe, &cfg.ensemble(cfg.n)?, &times, cfg.convention())?;
    let passed = report.max_deviation <= cfg.oracle_threshold;
    out.write("oracle.csv", |w| {
        report.write_csv(
            w,
            &[
                ("probe", kind.to_string()),
                ("threshold", num(cfg.oracle_threshold)),
                ("passed", passed.to_string()),
            ],
        )
    })?;
    println!(
        "max deviation {:.3e}, mean {:.3e}, threshold {:.3e}",
        report.max_deviation, report.mean_deviation, cfg.oracle_threshold
    );
    if passed {
        return Ok(());
    }
    let mut table = String::from("t_ms        p_monte_carlo  p_master       deviation\n");
    for i in 0..report.times.len() {
        let _ = writeln!(
            table,
            "{:<11.5} {:<14.6} {:<14.6} {:.6}",
            report.times[i], report.p_monte_carlo[i], report.p_master[i], report.deviation[i]
        );
    }
    eprint!("{table}");
    Err(CliError::Oracle(format!(
        "oracle deviation {:.4} exceeds threshold {}",
        report.max_deviation, cfg.oracle_threshold
    )))
}

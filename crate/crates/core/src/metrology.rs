//! Sensitivity analytics: δω₀(t) curves, optimal measurement times,
//! closed-form Markovian and Zeno limits, and the product/GHZ ratio r(n).
//!
//! For n qubits, total time T and single-qubit decoherence factor Γ:
//!
//! δω²|_u(t) = e^{2Γ(t)} / (n T t),   δω²|_e(t) = e^{2nΓ(t)} / (n² T t),
//!
//! minimized where 2tγ(t) = 1 and 2ntγ(t) = 1 respectively.

use std::f64::consts::E;
use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::dynamics::{ProbeKind, ProbeSpec};
use crate::error::{Error, Result};
use crate::export::{num, write_metadata};
use crate::fitting::{fit_power_law, PowerLawFit};
use crate::spectra::DecoherenceLaw;

pub const DEFAULT_TOTAL_TIME: f64 = 10.0;

const SCAN_STEPS: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    /// γ(t) = c.
    Markovian,
    /// γ(t) = 2ct.
    Zeno,
}

/// Minimum variances (δω²_u, δω²_e) in the two idealized regimes.
pub fn closed_form_limits(c: f64, regime: Regime, n: usize, total_time: f64) -> Result<(f64, f64)> {
    if !(c > 0.0) {
        return Err(Error::Domain(format!("coefficient must be positive, got {c}")));
    }
    if n == 0 || !(total_time > 0.0) {
        return Err(Error::Domain("need n ≥ 1 and T > 0".into()));
    }
    let nf = n as f64;
    Ok(match regime {
        Regime::Markovian => {
            let v = 2.0 * c * E / (nf * total_time);
            (v, v)
        }
        Regime::Zeno => (
            2.0 * (c * E).sqrt() / (nf * total_time),
            2.0 * (nf * c * E).sqrt() / (nf * nf * total_time),
        ),
    })
}

/// δω₀(t) on a time grid; t = 0 is divergent and flagged.
#[derive(Debug, Clone, PartialEq)]
pub struct VarianceCurve {
    pub times: Vec<f64>,
    pub delta_omega: Vec<f64>,
    pub divergent: Vec<bool>,
}

impl VarianceCurve {
    /// Grid point with the smallest finite δω₀.
    pub fn argmin(&self) -> Option<(f64, f64)> {
        self.times
            .iter()
            .zip(&self.delta_omega)
            .zip(&self.divergent)
            .filter(|(_, d)| !**d)
            .map(|((t, w), _)| (*t, *w))
            .min_by(|a, b| a.1.total_cmp(&b.1))
    }
}

fn variance_at(law: &DecoherenceLaw, probe: &ProbeSpec, total_time: f64, t: f64) -> Result<f64> {
    let n = probe.qubit_count as f64;
    let gamma = law.factor(t)?;
    Ok(match probe.kind {
        ProbeKind::Unentangled => (2.0 * gamma).exp() / (n * total_time * t),
        ProbeKind::Ghz => (2.0 * n * gamma).exp() / (n * n * total_time * t),
    })
}

pub fn variance_curve(
    law: &DecoherenceLaw,
    probe: &ProbeSpec,
    total_time: f64,
    times: &[f64],
) -> Result<VarianceCurve> {
    if !(total_time > 0.0) {
        return Err(Error::Domain(format!("total time must be > 0, got {total_time}")));
    }
    let mut delta_omega = Vec::with_capacity(times.len());
    let mut divergent = Vec::with_capacity(times.len());
    for &t in times {
        if t == 0.0 {
            delta_omega.push(f64::INFINITY);
            divergent.push(true);
            continue;
        }
        let v = variance_at(law, probe, total_time, t)?;
        delta_omega.push(v.sqrt());
        divergent.push(!v.is_finite());
    }
    Ok(VarianceCurve {
        times: times.to_vec(),
        delta_omega,
        divergent,
    })
}

/// Smallest positive root of 2·m·t·γ(t) = 1 (m = 1 for product probes, n for
/// GHZ) in (0, scan_bound], by a uniform scan followed by bisection.
pub fn optimal_time(law: &DecoherenceLaw, probe: &ProbeSpec, scan_bound: Option<f64>) -> Result<f64> {
    let bound = scan_bound.unwrap_or_else(|| law.default_scan_bound());
    if !(bound > 0.0 && bound.is_finite()) {
        return Err(Error::Domain(format!("scan bound must be > 0, got {bound}")));
    }
    let m = probe.coherent_qubits() as f64;
    let g = |t: f64| -> Result<f64> { Ok(2.0 * m * t * law.rate(t)? - 1.0) };
    let step = bound / SCAN_STEPS as f64;
    let mut lo = 0.0;
    let mut g_lo = -1.0;
    for k in 1..=SCAN_STEPS {
        let hi = if k == SCAN_STEPS { bound } else { k as f64 * step };
        let g_hi = g(hi)?;
        if g_hi == 0.0 {
            return Ok(hi);
        }
        if g_lo < 0.0 && g_hi > 0.0 {
            return bisect(&g, lo, hi);
        }
        lo = hi;
        g_lo = g_hi;
    }
    Err(Error::NoOptimum { bound })
}

fn bisect(g: &impl Fn(f64) -> Result<f64>, mut lo: f64, mut hi: f64) -> Result<f64> {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if g(mid)? > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensitivityPoint {
    pub n: usize,
    pub kind: ProbeKind,
    pub t_opt: f64,
    pub delta_omega_min: f64,
    pub total_time: f64,
}

/// Optimal point for one probe.
pub fn sensitivity_point(
    law: &DecoherenceLaw,
    probe: &ProbeSpec,
    total_time: f64,
    scan_bound: Option<f64>,
) -> Result<SensitivityPoint> {
    let t_opt = optimal_time(law, probe, scan_bound)?;
    point_at(law, probe, total_time, t_opt)
}

fn point_at(
    law: &DecoherenceLaw,
    probe: &ProbeSpec,
    total_time: f64,
    t: f64,
) -> Result<SensitivityPoint> {
    if t > total_time {
        return Err(Error::Config(format!(
            "measurement time {t} ms exceeds the total time budget {total_time} ms"
        )));
    }
    let curve = variance_curve(law, probe, total_time, &[t])?;
    Ok(SensitivityPoint {
        n: probe.qubit_count,
        kind: probe.kind,
        t_opt: t,
        delta_omega_min: curve.delta_omega[0],
        total_time,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum SweepMode {
    /// Each probe at its own optimal time.
    Optimal,
    /// Every probe evaluated at one common time (for laws without an optimum).
    FixedTime(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingReport {
    pub unentangled: Vec<SensitivityPoint>,
    pub ghz: Vec<SensitivityPoint>,
    pub ratios: Vec<f64>,
    pub r_fit: PowerLawFit,
    pub delta_e_fit: PowerLawFit,
    pub t_e_fit: PowerLawFit,
    pub mode: SweepMode,
}

pub fn sensitivity_sweep(
    law: &DecoherenceLaw,
    n_range: &[usize],
    total_time: f64,
    system_freq: f64,
    mode: SweepMode,
    scan_bound: Option<f64>,
) -> Result<ScalingReport> {
    if n_range.len() < 3 {
        return Err(Error::Domain(format!(
            "exponent fits need at least 3 qubit counts, got {}",
            n_range.len()
        )));
    }
    let mut unentangled = Vec::with_capacity(n_range.len());
    let mut ghz = Vec::with_capacity(n_range.len());
    for &n in n_range {
        for (kind, out) in [
            (ProbeKind::Unentangled, &mut unentangled),
            (ProbeKind::Ghz, &mut ghz),
        ] {
            let probe = ProbeSpec::new(kind, n, system_freq)?;
            let point = match mode {
                SweepMode::Optimal => sensitivity_point(law, &probe, total_time, scan_bound)?,
                SweepMode::FixedTime(t) => point_at(law, &probe, total_time, t)?,
            };
            out.push(point);
        }
    }
    let ratios: Vec<f64> = unentangled
        .iter()
        .zip(&ghz)
        .map(|(u, e)| u.delta_omega_min / e.delta_omega_min)
        .collect();
    let ns: Vec<f64> = n_range.iter().map(|&n| n as f64).collect();
    let r_fit = fit_power_law(&ns, &ratios)?;
    let delta_e: Vec<f64> = ghz.iter().map(|p| p.delta_omega_min).collect();
    let delta_e_fit = fit_power_law(&ns, &delta_e)?;
    let t_e: Vec<f64> = ghz.iter().map(|p| p.t_opt).collect();
    let t_e_fit = fit_power_law(&ns, &t_e)?;
    Ok(ScalingReport {
        unentangled,
        ghz,
        ratios,
        r_fit,
        delta_e_fit,
        t_e_fit,
        mode,
    })
}

impl ScalingReport {
    /// Ratio recomputed from the stored points.
    pub fn ratio(&self, index: usize) -> f64 {
        self.unentangled[index].delta_omega_min / self.ghz[index].delta_omega_min
    }

    pub fn summary(&self) -> Vec<(&'static str, String)> {
        vec![
            ("r_exponent", num(self.r_fit.exponent)),
            ("r_exponent_stderr", num(self.r_fit.stderr)),
            ("delta_e_exponent", num(self.delta_e_fit.exponent)),
            ("delta_e_exponent_stderr", num(self.delta_e_fit.stderr)),
            ("t_e_exponent", num(self.t_e_fit.exponent)),
            ("t_e_exponent_stderr", num(self.t_e_fit.stderr)),
        ]
    }

    /// `n,probe,t_opt_ms,delta_omega_min,r` with the exponent summary in the
    /// metadata header.
    pub fn write_csv<W: Write>(&self, w: &mut W, metadata: &[(&str, String)]) -> io::Result<()> {
        let mut meta = metadata.to_vec();
        meta.extend(self.summary());
        write_metadata(w, &meta)?;
        writeln!(w, "n,probe,t_opt_ms,delta_omega_min,r")?;
        for (i, (u, e)) in self.unentangled.iter().zip(&self.ghz).enumerate() {
            let r = num(self.ratio(i));
            for p in [u, e] {
                writeln!(
                    w,
                    "{},{},{},{},{}",
                    p.n,
                    p.kind,
                    num(p.t_opt),
                    num(p.delta_omega_min),
                    r
                )?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn probe(kind: ProbeKind, n: usize) -> ProbeSpec {
        ProbeSpec::new(kind, n, 10.0).unwrap()
    }

    #[test]
    fn noiseless_curve_is_monotone() {
        let law = DecoherenceLaw::Noiseless;
        let times: Vec<f64> = (0..50).map(|i| 0.1 * i as f64).collect();
        let curve = variance_curve(&law, &probe(ProbeKind::Ghz, 3), 10.0, &times).unwrap();
        assert!(curve.divergent[0]);
        for (t, w) in times.iter().zip(&curve.delta_omega).skip(1) {
            assert!((w - 1.0 / (3.0 * (10.0 * t).sqrt())).abs() < 1e-14);
        }
        assert!(curve.delta_omega[1..].windows(2).all(|w| w[1] < w[0]));
        assert!(matches!(
            optimal_time(&law, &probe(ProbeKind::Ghz, 3), None),
            Err(Error::NoOptimum { .. })
        ));
    }

    #[test]
    fn quadratic_law_optima() {
        let law = DecoherenceLaw::Quadratic { c: 0.370 };
        let tu = optimal_time(&law, &probe(ProbeKind::Unentangled, 7), None).unwrap();
        let te = optimal_time(&law, &probe(ProbeKind::Ghz, 7), None).unwrap();
        assert!((tu - (4.0f64 * 0.370).powf(-0.5)).abs() < 1e-9);
        assert!((te - (4.0f64 * 7.0 * 0.370).powf(-0.5)).abs() < 1e-9);
        assert!((tu - 0.822).abs() < 5e-4);
        assert!((te - 0.311).abs() < 5e-4);
    }

    #[test]
    fn markovian_law_optima() {
        let c = 0.4;
        let law = DecoherenceLaw::Markovian { c };
        let tu = optimal_time(&law, &probe(ProbeKind::Unentangled, 5), None).unwrap();
        let te = optimal_time(&law, &probe(ProbeKind::Ghz, 5), None).unwrap();
        assert!((tu - 1.0 / (2.0 * c)).abs() < 1e-9);
        assert!((te - 1.0 / (2.0 * 5.0 * c)).abs() < 1e-9);
    }

    #[test]
    fn closed_forms() {
        let (u, e) = closed_form_limits(0.3, Regime::Markovian, 4, 2.0).unwrap();
        assert_eq!(u, e);
        for n in 1..=9 {
            let (u, e) = closed_form_limits(0.37, Regime::Zeno, n, 10.0).unwrap();
            assert!(((u / e).sqrt() - (n as f64).powf(0.25)).abs() < 1e-12);
        }
        let (u, e) = closed_form_limits(1.0, Regime::Zeno, 1, 1.0).unwrap();
        assert!((u - 2.0 * E.sqrt()).abs() < 1e-15);
        assert!((e - 2.0 * E.sqrt()).abs() < 1e-15);
        assert!(closed_form_limits(0.0, Regime::Zeno, 1, 1.0).is_err());
    }

    #[test]
    fn point_matches_closed_form_minimum() {
        let law = DecoherenceLaw::Quadratic { c: 0.370 };
        for kind in [ProbeKind::Unentangled, ProbeKind::Ghz] {
            let p = sensitivity_point(&law, &probe(kind, 7), 10.0, None).unwrap();
            let (u, e) = closed_form_limits(0.370, Regime::Zeno, 7, 10.0).unwrap();
            let expect = if kind == ProbeKind::Ghz { e } else { u };
            assert!((p.delta_omega_min.powi(2) / expect - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn total_time_must_cover_optimum() {
        let law = DecoherenceLaw::Quadratic { c: 0.370 };
        assert!(sensitivity_point(&law, &probe(ProbeKind::Unentangled, 2), 0.5, None).is_err());
    }

    #[test]
    fn sweep_needs_three_points() {
        let law = DecoherenceLaw::Quadratic { c: 0.370 };
        assert!(sensitivity_sweep(&law, &[2, 3], 10.0, 10.0, SweepMode::Optimal, None).is_err());
    }

    #[test]
    fn ratio_is_independent_of_total_time() {
        let law = DecoherenceLaw::Spectral(crate::spectra::NoiseModel::calibrated_default());
        let ns = [2, 3, 4, 5];
        let a = sensitivity_sweep(&law, &ns, 10.0, 10.0, SweepMode::Optimal, None).unwrap();
        let b = sensitivity_sweep(&law, &ns, 37.0, 10.0, SweepMode::Optimal, None).unwrap();
        for (x, y) in a.ratios.iter().zip(&b.ratios) {
            assert!((x - y).abs() <= 4.0 * f64::EPSILON * x);
        }
    }

    #[test]
    fn csv_lists_both_probes() {
        let law = DecoherenceLaw::Quadratic { c: 0.370 };
        let rep = sensitivity_sweep(&law, &[2, 3, 4], 10.0, 10.0, SweepMode::Optimal, None).unwrap();
        let mut buf = Vec::new();
        rep.write_csv(&mut buf, &[]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.contains("# r_exponent = "));
        let rows: Vec<_> = text.lines().filter(|l| !l.starts_with('#')).collect();
        assert_eq!(rows[0], "n,probe,t_opt_ms,delta_omega_min,r");
        assert_eq!(rows.len(), 1 + 6);
        assert!(rows[1].starts_with("2,unentangled,"));
        assert!(rows[2].starts_with("2,ghz,"));
    }
}

//! Independent oracles shared by the integration tests. Nothing here calls
//! the library's own Γ / γ evaluation.
#![allow(dead_code)]

use qzmetro_core::spectra::SpectralDensity;
use qzmetro_core::NoiseModel;

/// Drude–Lorentz density written out directly.
pub fn drude_lorentz(reorg: f64, relax: f64, w: f64) -> f64 {
    2.0 * reorg * relax * w / (w * w + relax * relax)
}

/// Per-harmonic (ω_j, α²F_j²) pairs for a Drude–Lorentz model.
pub fn weights(model: &NoiseModel) -> Vec<(f64, f64)> {
    let (reorg, relax) = match model.density() {
        SpectralDensity::DrudeLorentz(term) => (term.reorg_energy, term.relax_rate),
        other => panic!("oracle only covers Drude–Lorentz, got {other:?}"),
    };
    let a2 = model.alpha_z() * model.alpha_z();
    (1..=model.harmonic_count())
        .map(|j| {
            let w = j as f64 * model.base_freq();
            let x = model.inverse_temp() * w;
            let coth = x.cosh() / x.sinh();
            let f2 = model.system_freq() * coth * drude_lorentz(reorg, relax, w) / (2.0 * w * w);
            (w, a2 * f2)
        })
        .collect()
}

pub fn gamma_factor(model: &NoiseModel, t: f64) -> f64 {
    weights(model)
        .iter()
        .map(|(w, f2)| f2 * (w * t / 2.0).sin().powi(2))
        .sum()
}

pub fn gamma_rate(model: &NoiseModel, t: f64) -> f64 {
    weights(model)
        .iter()
        .map(|(w, f2)| 0.5 * w * f2 * (w * t).sin())
        .sum()
}

pub fn quadratic_coeff(model: &NoiseModel) -> f64 {
    weights(model).iter().map(|(w, f2)| 0.25 * f2 * w * w).sum()
}

/// Adaptive Simpson quadrature.
pub fn integrate(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson(f: &dyn Fn(f64) -> f64, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
        let m = 0.5 * (a + b);
        let fm = f(m);
        (m, fm, (b - a) / 6.0 * (fa + 4.0 * fm + fb))
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        m: f64,
        fm: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let (lm, flm, left) = simpson(f, a, fa, m, fm);
        let (rm, frm, right) = simpson(f, m, fm, b, fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        recurse(f, a, fa, m, fm, lm, flm, left, tol / 2.0, depth - 1)
            + recurse(f, m, fm, b, fb, rm, frm, right, tol / 2.0, depth - 1)
    }
    let (fa, fb) = (f(a), f(b));
    let (m, fm, whole) = simpson(f, a, fa, b, fb);
    recurse(f, a, fa, b, fb, m, fm, whole, tol, 50)
}

/// Ordinary least-squares slope and intercept.
pub fn ols(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// Log-log slope.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    ols(&lx, &ly).0
}

pub fn linspace(a: f64, b: f64, count: usize) -> Vec<f64> {
    (0..count)
        .map(|i| a + (b - a) * i as f64 / (count - 1) as f64)
        .collect()
}

//! Parameter estimation for Ramsey data and power-law scaling.
//!
//! The Ramsey model is P(t) = ½[1 − cos(nωt)·e^{−nΓ(t)}] with either
//! Γ(t) = c t² or a piecewise-linear Γ through free nodes. Minimization uses a
//! damped Gauss–Newton (Levenberg–Marquardt) loop with analytic Jacobian.

use std::f64::consts::{PI, TAU};

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::dynamics::{ProbeKind, RamseyCurve};
use crate::error::{Error, Result};
use crate::metrology::{closed_form_limits, Regime};

pub const DEFAULT_FREE_NODES: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Parameterization {
    /// Γ(t) = c t².
    QuadraticGamma,
    /// Γ through `nodes` equally spaced free values, pinned to Γ(0) = 0 and
    /// interpolated linearly in t² so that Γ = c t² is representable exactly.
    FreeGamma { nodes: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum GammaEstimate {
    Quadratic { c: f64 },
    Nodes { times: Vec<f64>, values: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub omega_hat: f64,
    pub gamma: GammaEstimate,
    /// σ̂²(JᵀJ)⁻¹. Parameter order: ω, then c or the Γ nodes.
    pub covariance: Vec<Vec<f64>>,
    /// Grouped jackknife over ensemble samples, when the fit came from a
    /// [`RamseyCurve`]. Ensemble fluctuations are smooth in t and largely
    /// invisible in the residuals, so this is the honest error for
    /// finite-m curves.
    #[serde(default)]
    pub ensemble_covariance: Option<Vec<Vec<f64>>>,
    pub residual_rms: f64,
    pub converged: bool,
    pub iterations: usize,
    pub gradient_norm: f64,
    /// Accepted residual sums of squares, starting with the initial guess.
    pub cost_history: Vec<f64>,
    pub qubit_count: usize,
    pub input_fingerprint: String,
}

impl FitResult {
    pub fn c_hat(&self) -> Option<f64> {
        match self.gamma {
            GammaEstimate::Quadratic { c } => Some(c),
            GammaEstimate::Nodes { .. } => None,
        }
    }

    /// Ensemble covariance if present, else the residual one.
    pub fn parameter_covariance(&self) -> &[Vec<f64>] {
        self.ensemble_covariance.as_deref().unwrap_or(&self.covariance)
    }

    pub fn omega_stderr(&self) -> f64 {
        self.parameter_covariance()[0][0].max(0.0).sqrt()
    }

    pub fn c_stderr(&self) -> Option<f64> {
        self.c_hat()
            .map(|_| self.parameter_covariance()[1][1].max(0.0).sqrt())
    }

    /// Coefficient of t² in the n-qubit envelope exponent, n·ĉ.
    pub fn envelope_coefficient(&self) -> Option<f64> {
        self.c_hat().map(|c| c * self.qubit_count as f64)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("fit result serializes")
    }
}

/// Loop settings for [`levenberg_marquardt`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LmSettings {
    pub initial_damping: f64,
    pub max_iterations: usize,
    pub gradient_tol: f64,
}

impl Default for LmSettings {
    fn default() -> Self {
        LmSettings {
            initial_damping: 1e-3,
            max_iterations: 200,
            gradient_tol: 1e-10,
        }
    }
}

pub trait LeastSquaresProblem {
    fn residuals(&self, params: &DVector<f64>) -> DVector<f64>;
    fn jacobian(&self, params: &DVector<f64>) -> DMatrix<f64>;
}

#[derive(Debug, Clone)]
pub struct LmOutcome {
    pub params: DVector<f64>,
    pub residuals: DVector<f64>,
    pub jacobian: DMatrix<f64>,
    pub converged: bool,
    pub iterations: usize,
    pub gradient_norm: f64,
    pub cost_history: Vec<f64>,
}

const MAX_DAMPING: f64 = 1e16;

/// Levenberg–Marquardt with Marquardt diagonal scaling: damping ×10 on a
/// rejected step, ÷10 on an accepted one. Stops when ‖Jᵀr‖ drops below the
/// tolerance, the iteration budget is spent, or no damping yields descent.
pub fn levenberg_marquardt<P: LeastSquaresProblem>(
    problem: &P,
    initial: DVector<f64>,
    settings: LmSettings,
) -> LmOutcome {
    let mut params = initial;
    let mut residuals = problem.residuals(&params);
    let mut cost = residuals.norm_squared();
    let mut jacobian = problem.jacobian(&params);
    let mut damping = settings.initial_damping;
    let mut cost_history = vec![cost];
    let mut iterations = 0;

    loop {
        let gradient = jacobian.tr_mul(&residuals);
        let gradient_norm = gradient.norm();
        if gradient_norm < settings.gradient_tol {
            return LmOutcome {
                params,
                residuals,
                jacobian,
                converged: true,
                iterations,
                gradient_norm,
                cost_history,
            };
        }
        if iterations >= settings.max_iterations {
            break;
        }
        iterations += 1;

        let normal = jacobian.tr_mul(&jacobian);
        let mut accepted = false;
        while damping <= MAX_DAMPING {
            let mut damped = normal.clone();
            for i in 0..damped.nrows() {
                let d = normal[(i, i)].max(1e-300);
                damped[(i, i)] += damping * d;
            }
            let Some(chol) = damped.cholesky() else {
                damping *= 10.0;
                continue;
            };
            let step = chol.solve(&(-&gradient));
            let trial = &params + &step;
            let trial_res = problem.residuals(&trial);
            let trial_cost = trial_res.norm_squared();
            if trial_cost.is_finite() && trial_cost < cost {
                params = trial;
                residuals = trial_res;
                cost = trial_cost;
                jacobian = problem.jacobian(&params);
                damping = (damping / 10.0).max(1e-300);
                cost_history.push(cost);
                accepted = true;
                break;
            }
            damping *= 10.0;
        }
        if !accepted {
            break;
        }
    }
    let gradient_norm = jacobian.tr_mul(&residuals).norm();
    LmOutcome {
        converged: gradient_norm < settings.gradient_tol,
        params,
        residuals,
        jacobian,
        iterations,
        gradient_norm,
        cost_history,
    }
}

/// Ramsey least-squares problem.
#[derive(Debug, Clone)]
pub struct RamseyProblem<'a> {
    times: &'a [f64],
    values: &'a [f64],
    n: f64,
    /// Empty for the quadratic parameterization.
    nodes: Vec<f64>,
}

impl<'a> RamseyProblem<'a> {
    pub fn new(times: &'a [f64], values: &'a [f64], n: usize, param: Parameterization) -> Self {
        let nodes = match param {
            Parameterization::QuadraticGamma => Vec::new(),
            Parameterization::FreeGamma { nodes } => {
                let t_max = times.iter().copied().fold(0.0, f64::max);
                (1..=nodes).map(|k| t_max * k as f64 / nodes as f64).collect()
            }
        };
        RamseyProblem {
            times,
            values,
            n: n as f64,
            nodes,
        }
    }

    fn is_quadratic(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Γ(t) and its gradient with respect to the Γ parameters.
    fn gamma(&self, params: &DVector<f64>, t: f64, grad: &mut [f64]) -> f64 {
        if self.is_quadratic() {
            grad[0] = t * t;
            return params[1] * t * t;
        }
        grad.iter_mut().for_each(|g| *g = 0.0);
        let k = self.nodes.len();
        let step = self.nodes[0];
        let t = t.clamp(0.0, k as f64 * step);
        let idx = ((t / step).floor() as usize).min(k - 1);
        let lo = idx as f64 * step;
        let hi = lo + step;
        let frac = (t * t - lo * lo) / (hi * hi - lo * lo);
        let left = if idx == 0 { 0.0 } else { params[idx] };
        let right = params[idx + 1];
        if idx > 0 {
            grad[idx - 1] = 1.0 - frac;
        }
        grad[idx] = frac;
        left + (right - left) * frac
    }

    /// Model value at `t`.
    pub fn model(&self, params: &DVector<f64>, t: f64) -> f64 {
        let mut grad = vec![0.0; params.len() - 1];
        let g = self.gamma(params, t, &mut grad);
        0.5 * (1.0 - (self.n * params[0] * t).cos() * (-self.n * g).exp())
    }
}

impl LeastSquaresProblem for RamseyProblem<'_> {
    fn residuals(&self, params: &DVector<f64>) -> DVector<f64> {
        DVector::from_iterator(
            self.times.len(),
            self.times
                .iter()
                .zip(self.values)
                .map(|(&t, &p)| self.model(params, t) - p),
        )
    }

    fn jacobian(&self, params: &DVector<f64>) -> DMatrix<f64> {
        let cols = params.len();
        let mut jac = DMatrix::zeros(self.times.len(), cols);
        let mut grad = vec![0.0; cols - 1];
        for (i, &t) in self.times.iter().enumerate() {
            let g = self.gamma(params, t, &mut grad);
            let envelope = (-self.n * g).exp();
            let (s, c) = (self.n * params[0] * t).sin_cos();
            jac[(i, 0)] = 0.5 * s * self.n * t * envelope;
            let common = 0.5 * c * envelope * self.n;
            for (k, dg) in grad.iter().enumerate() {
                jac[(i, k + 1)] = common * dg;
            }
        }
        jac
    }
}

/// Angular frequency of the largest periodogram peak of a (possibly
/// non-uniformly sampled) signal, refined by golden-section search.
pub fn dominant_frequency(times: &[f64], signal: &[f64]) -> Option<f64> {
    if times.len() < 3 || times.len() != signal.len() {
        return None;
    }
    let mean = signal.iter().sum::<f64>() / signal.len() as f64;
    let centered: Vec<f64> = signal.iter().map(|y| y - mean).collect();
    let energy: f64 = centered.iter().map(|y| y * y).sum();
    let total: f64 = signal.iter().map(|y| y * y).sum();
    if !(energy > 1e-20 * total) {
        return None;
    }
    let power = |nu: f64| {
        let (mut re, mut im) = (0.0, 0.0);
        for (&t, &y) in times.iter().zip(&centered) {
            let (s, c) = (nu * t).sin_cos();
            re += y * c;
            im -= y * s;
        }
        re * re + im * im
    };
    let span = times[times.len() - 1] - times[0];
    let min_step = times
        .windows(2)
        .map(|w| w[1] - w[0])
        .filter(|d| *d > 0.0)
        .fold(f64::INFINITY, f64::min);
    if !(span > 0.0 && min_step.is_finite()) {
        return None;
    }
    let nyquist = PI / min_step;
    let resolution = TAU / (8.0 * span);
    let steps = (nyquist / resolution).ceil() as usize;
    let (mut best_nu, mut best_p) = (0.0, f64::NEG_INFINITY);
    for k in 1..=steps {
        let nu = k as f64 * resolution;
        let p = power(nu);
        if p > best_p {
            best_p = p;
            best_nu = nu;
        }
    }
    if !(best_p > 0.0) {
        return None;
    }
    Some(golden_max(power, best_nu - resolution, best_nu + resolution, 1e-12))
}

fn golden_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let inv_phi = (5.0_f64.sqrt() - 1.0) / 2.0;
    let mut x1 = b - inv_phi * (b - a);
    let mut x2 = a + inv_phi * (b - a);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..200 {
        if (b - a).abs() <= tol * (1.0 + x1.abs()) {
            break;
        }
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = f(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = f(x1);
        }
    }
    0.5 * (a + b)
}

/// Initial c from a through-origin regression of ln|1 − 2p| on −n t² over the
/// fringe crests.
fn envelope_guess(times: &[f64], values: &[f64], n: f64) -> f64 {
    let y: Vec<f64> = values.iter().map(|p| (1.0 - 2.0 * p).abs()).collect();
    let (mut num, mut den) = (0.0, 0.0);
    for i in 1..y.len().saturating_sub(1) {
        let t = times[i];
        if t > 0.0 && y[i] >= y[i - 1] && y[i] >= y[i + 1] && y[i] > 0.05 {
            let t2 = t * t;
            num -= t2 * y[i].min(1.0).ln();
            den += n * t2 * t2;
        }
    }
    if den > 0.0 {
        (num / den).max(0.0)
    } else {
        0.0
    }
}

fn fingerprint(times: &[f64], values: &[f64]) -> String {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for x in times.iter().chain(values) {
        for b in x.to_bits().to_le_bytes() {
            h ^= u64::from(b);
            h = h.wrapping_mul(0x0100_0000_01b3);
        }
    }
    format!("{h:016x}")
}

/// Fit the Ramsey model to `(times, p_values)` for an `n`-qubit coherent
/// signal (n = 1 for product-probe curves).
pub fn fit_ramsey(
    times: &[f64],
    p_values: &[f64],
    n: usize,
    parameterization: Parameterization,
) -> Result<FitResult> {
    fit_ramsey_with(times, p_values, n, parameterization, LmSettings::default())
}

pub fn fit_ramsey_with(
    times: &[f64],
    p_values: &[f64],
    n: usize,
    parameterization: Parameterization,
    settings: LmSettings,
) -> Result<FitResult> {
    if times.len() != p_values.len() {
        return Err(Error::Contract(format!(
            "{} times but {} values",
            times.len(),
            p_values.len()
        )));
    }
    if times.len() < 8 {
        return Err(Error::Domain(format!(
            "need at least 8 data points, got {}",
            times.len()
        )));
    }
    if n == 0 {
        return Err(Error::Config("qubit count must be positive".into()));
    }
    if let Some(p) = p_values.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(Error::Domain(format!("probability {p} outside [0, 1]")));
    }
    if let Parameterization::FreeGamma { nodes } = parameterization {
        if nodes == 0 {
            return Err(Error::Config("free Γ needs at least one node".into()));
        }
    }
    let nf = n as f64;
    let signal: Vec<f64> = p_values.iter().map(|p| 1.0 - 2.0 * p).collect();
    let fringe = dominant_frequency(times, &signal)
        .ok_or_else(|| Error::DegenerateFit("no fringe found in the signal".into()))?;
    let span = times.iter().copied().fold(f64::NEG_INFINITY, f64::max)
        - times.iter().copied().fold(f64::INFINITY, f64::min);
    if fringe * span < TAU {
        return Err(Error::Domain(format!(
            "data span {span} ms covers less than one fringe period at {fringe} rad/ms"
        )));
    }
    let omega0 = fringe / nf;
    let c0 = envelope_guess(times, p_values, nf);

    let problem = RamseyProblem::new(times, p_values, n, parameterization);
    let mut initial = vec![omega0];
    match parameterization {
        Parameterization::QuadraticGamma => initial.push(c0),
        Parameterization::FreeGamma { .. } => {
            initial.extend(problem.nodes.iter().map(|tau| c0 * tau * tau))
        }
    }
    let initial = DVector::from_vec(initial);
    check_rank(&problem.jacobian(&initial))?;

    let outcome = levenberg_marquardt(&problem, initial, settings);
    let dof = times.len().saturating_sub(outcome.params.len()).max(1) as f64;
    let ssr = outcome.residuals.norm_squared();
    let normal = outcome.jacobian.tr_mul(&outcome.jacobian);
    check_rank(&outcome.jacobian)?;
    let inverse = normal
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::DegenerateFit("normal matrix is singular".into()))?;
    let sigma2 = ssr / dof;
    let p = outcome.params.len();
    let covariance: Vec<Vec<f64>> = (0..p)
        .map(|i| {
            (0..p)
                .map(|j| 0.5 * sigma2 * (inverse[(i, j)] + inverse[(j, i)]))
                .collect()
        })
        .collect();

    let gamma = match parameterization {
        Parameterization::QuadraticGamma => GammaEstimate::Quadratic {
            c: outcome.params[1],
        },
        Parameterization::FreeGamma { .. } => GammaEstimate::Nodes {
            times: problem.nodes.clone(),
            values: outcome.params.iter().skip(1).copied().collect(),
        },
    };
    Ok(FitResult {
        omega_hat: outcome.params[0],
        gamma,
        covariance,
        ensemble_covariance: None,
        residual_rms: (ssr / times.len() as f64).sqrt(),
        converged: outcome.converged,
        iterations: outcome.iterations,
        gradient_norm: outcome.gradient_norm,
        cost_history: outcome.cost_history,
        qubit_count: n,
        input_fingerprint: fingerprint(times, p_values),
    })
}

/// Maximum number of jackknife groups used by [`fit_ramsey_curve`].
pub const JACKKNIFE_GROUPS: usize = 20;

/// Fit an ensemble curve and attach a grouped jackknife covariance: samples
/// are split into at most [`JACKKNIFE_GROUPS`] contiguous groups and the fit
/// is repeated with each group left out.
pub fn fit_ramsey_curve(curve: &RamseyCurve, parameterization: Parameterization) -> Result<FitResult> {
    let n = curve.probe.coherent_qubits();
    let mut fit = fit_ramsey(&curve.times, &curve.p_mean, n, parameterization)?;
    let m = curve.p_samples.len();
    if m < 2 {
        return Ok(fit);
    }
    let groups = m.min(JACKKNIFE_GROUPS);
    let len = curve.times.len();
    let mut totals = vec![0.0; len];
    for row in &curve.p_samples {
        for (acc, p) in totals.iter_mut().zip(row) {
            *acc += p;
        }
    }
    let estimates = (0..groups)
        .map(|g| {
            let (start, end) = (g * m / groups, (g + 1) * m / groups);
            let mut kept = totals.clone();
            for row in &curve.p_samples[start..end] {
                for (acc, p) in kept.iter_mut().zip(row) {
                    *acc -= p;
                }
            }
            let count = (m - (end - start)) as f64;
            let means: Vec<f64> = kept.iter().map(|v| (v / count).clamp(0.0, 1.0)).collect();
            let sub = fit_ramsey(&curve.times, &means, n, parameterization)?;
            Ok(parameter_vector(&sub))
        })
        .collect::<Result<Vec<Vec<f64>>>>()?;
    let dim = estimates[0].len();
    let g = groups as f64;
    let mean: Vec<f64> = (0..dim)
        .map(|i| estimates.iter().map(|e| e[i]).sum::<f64>() / g)
        .collect();
    let cov = (0..dim)
        .map(|i| {
            (0..dim)
                .map(|j| {
                    (g - 1.0) / g
                        * estimates
                            .iter()
                            .map(|e| (e[i] - mean[i]) * (e[j] - mean[j]))
                            .sum::<f64>()
                })
                .collect()
        })
        .collect();
    fit.ensemble_covariance = Some(cov);
    Ok(fit)
}

fn parameter_vector(fit: &FitResult) -> Vec<f64> {
    let mut v = vec![fit.omega_hat];
    match &fit.gamma {
        GammaEstimate::Quadratic { c } => v.push(*c),
        GammaEstimate::Nodes { values, .. } => v.extend(values),
    }
    v
}

fn check_rank(jacobian: &DMatrix<f64>) -> Result<()> {
    let normal = jacobian.tr_mul(jacobian);
    if normal.iter().any(|x| !x.is_finite()) {
        return Err(Error::DegenerateFit("non-finite Jacobian".into()));
    }
    // column scaling so the test is unit-independent
    let scale: Vec<f64> = (0..normal.ncols()).map(|i| normal[(i, i)].sqrt()).collect();
    if let Some(col) = scale.iter().position(|s| *s == 0.0) {
        return Err(Error::DegenerateFit(format!(
            "parameter {col} does not affect the model"
        )));
    }
    let scaled = DMatrix::from_fn(normal.nrows(), normal.ncols(), |i, j| {
        normal[(i, j)] / (scale[i] * scale[j])
    });
    let eig = SymmetricEigen::new(scaled).eigenvalues;
    let max = eig.iter().copied().fold(0.0, f64::max);
    let min = eig.iter().copied().fold(f64::INFINITY, f64::min);
    if !(min > 1e-12 * max) {
        return Err(Error::DegenerateFit("rank-deficient Jacobian".into()));
    }
    Ok(())
}

/// y ≈ prefactor · x^exponent by least squares on logarithms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerLawFit {
    pub exponent: f64,
    pub prefactor: f64,
    /// Standard error of the exponent.
    pub stderr: f64,
}

pub fn fit_power_law(x: &[f64], y: &[f64]) -> Result<PowerLawFit> {
    if x.len() != y.len() {
        return Err(Error::Contract(format!("{} x values but {} y values", x.len(), y.len())));
    }
    if x.len() < 3 {
        return Err(Error::Domain(format!("need at least 3 points, got {}", x.len())));
    }
    if let Some(v) = x.iter().chain(y).find(|v| !(**v > 0.0 && v.is_finite())) {
        return Err(Error::Domain(format!("power-law fit needs positive values, got {v}")));
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let count = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / count;
    let my = ly.iter().sum::<f64>() / count;
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    if !(sxx > 1e-300) {
        return Err(Error::Domain("all x values coincide".into()));
    }
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ssr: f64 = lx
        .iter()
        .zip(&ly)
        .map(|(a, b)| (b - intercept - slope * a).powi(2))
        .sum();
    let stderr = (ssr / (count - 2.0) / sxx).sqrt();
    Ok(PowerLawFit {
        exponent: slope,
        prefactor: intercept.exp(),
        stderr,
    })
}

/// Optimal time and minimum δω from a quadratic fit, with first-order
/// (delta-method) uncertainties.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PropagatedSensitivity {
    pub t_opt: f64,
    pub t_opt_stderr: f64,
    pub delta_omega: f64,
    pub delta_omega_stderr: f64,
}

pub fn propagate_delta_omega(
    fit: &FitResult,
    n: usize,
    total_time: f64,
    kind: ProbeKind,
) -> Result<PropagatedSensitivity> {
    let c = fit.c_hat().ok_or_else(|| {
        Error::Contract("uncertainty propagation needs the quadratic parameterization".into())
    })?;
    if !(c > 0.0) {
        return Err(Error::NoOptimum {
            bound: f64::INFINITY,
        });
    }
    let nf = n as f64;
    let coherent = match kind {
        ProbeKind::Ghz => nf,
        ProbeKind::Unentangled => 1.0,
    };
    let t_opt = (4.0 * coherent * c).powf(-0.5);
    let (var_u, var_e) = closed_form_limits(c, Regime::Zeno, n, total_time)?;
    let delta_omega = match kind {
        ProbeKind::Ghz => var_e,
        ProbeKind::Unentangled => var_u,
    }
    .sqrt();
    // t ∝ c^{-1/2}, δω ∝ c^{1/4}; neither depends on ω.
    let c_var = fit.parameter_covariance()[1][1].max(0.0);
    let dt_dc = -0.5 * t_opt / c;
    let dw_dc = 0.25 * delta_omega / c;
    Ok(PropagatedSensitivity {
        t_opt,
        t_opt_stderr: (dt_dc * dt_dc * c_var).sqrt(),
        delta_omega,
        delta_omega_stderr: (dw_dc * dw_dc * c_var).sqrt(),
    })
}

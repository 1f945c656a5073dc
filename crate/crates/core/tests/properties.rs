use proptest::prelude::*;
use qzmetro_core::dynamics::trajectory_population;
use qzmetro_core::export::num;
use qzmetro_core::fitting::{fit_power_law, fit_ramsey};
use qzmetro_core::metrology::{closed_form_limits, optimal_time, sensitivity_sweep, Regime, SweepMode};
use qzmetro_core::{
    DecoherenceLaw, NoiseModel, Parameterization, ProbeKind, ProbeSpec, SpectralDensity,
};

prop_compose! {
    fn models()(
        reorg in 0.1f64..5.0,
        relax in 0.1f64..5.0,
        base in 0.001f64..1.0,
        harmonics in 1usize..80,
        beta in 0.05f64..10.0,
        omega0 in 0.5f64..20.0,
        alpha in 0.0f64..3.0,
    ) -> NoiseModel {
        let density = SpectralDensity::drude_lorentz(reorg, relax).unwrap();
        NoiseModel::new(density, alpha, base, harmonics, beta, omega0).unwrap()
    }
}

fn kinds() -> impl Strategy<Value = ProbeKind> {
    prop_oneof![Just(ProbeKind::Unentangled), Just(ProbeKind::Ghz)]
}

proptest! {
    #[test]
    fn decoherence_is_bounded(model in models(), t in 0.0f64..100.0) {
        let g = model.decoherence_factor(t).unwrap();
        prop_assert!(g >= 0.0);
        prop_assert!(g <= model.decoherence_bound() * (1.0 + 1e-12));
        prop_assert!(model.decoherence_rate(t).unwrap().abs() <= model.decoherence_bound() * model.cutoff());
    }

    #[test]
    fn rate_is_derivative(model in models(), frac in 0.01f64..0.99) {
        let t = frac * model.period();
        let h = 1e-6 * model.period();
        let fd = (model.decoherence_factor(t + h).unwrap() - model.decoherence_factor(t - h).unwrap()) / (2.0 * h);
        let r = model.decoherence_rate(t).unwrap();
        let scale = model.decoherence_bound() * model.cutoff();
        prop_assert!((r - fd).abs() <= 1e-5 * scale + 1e-12);
    }

    #[test]
    fn calibration_is_a_fixed_point(model in models(), target in 0.01f64..10.0) {
        prop_assume!(model.alpha_z() > 0.0);
        let cal = model.calibrate_amplitude(target).unwrap();
        prop_assert!((cal.quadratic_coefficient() / target - 1.0).abs() < 1e-12);
        prop_assert!(model.with_alpha_z(0.0).unwrap().calibrate_amplitude(target).is_err());
    }

    #[test]
    fn populations_are_probabilities(
        kind in kinds(),
        phases in prop::collection::vec(-50.0f64..50.0, 1..10),
        t in 0.0f64..10.0,
    ) {
        let probe = ProbeSpec::new(kind, phases.len(), 10.0).unwrap();
        let p = trajectory_population(&probe, &phases, t).unwrap();
        prop_assert!((0.0..=1.0).contains(&p));
    }

    #[test]
    fn one_qubit_probes_agree(phi in -10.0f64..10.0, t in 0.0f64..5.0, w in 0.1f64..30.0) {
        let a = trajectory_population(&ProbeSpec::new(ProbeKind::Ghz, 1, w).unwrap(), &[phi], t).unwrap();
        let b = trajectory_population(&ProbeSpec::new(ProbeKind::Unentangled, 1, w).unwrap(), &[phi], t).unwrap();
        prop_assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn zeno_ratio_is_fourth_root(c in 0.01f64..10.0, n in 1usize..50, total in 0.1f64..100.0) {
        let (u, e) = closed_form_limits(c, Regime::Zeno, n, total).unwrap();
        prop_assert!(((u / e).sqrt() / (n as f64).powf(0.25) - 1.0).abs() < 1e-12);
        let (u, e) = closed_form_limits(c, Regime::Markovian, n, total).unwrap();
        prop_assert_eq!(u, e);
    }

    #[test]
    fn quadratic_optimum_is_algebraic(c in 0.01f64..5.0, n in 1usize..20, kind in kinds()) {
        let probe = ProbeSpec::new(kind, n, 10.0).unwrap();
        let m = probe.coherent_qubits() as f64;
        let t = optimal_time(&DecoherenceLaw::Quadratic { c }, &probe, None).unwrap();
        prop_assert!((t * (4.0 * m * c).sqrt() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn sweep_ratios_are_consistent(c in 0.05f64..3.0, total in 5.0f64..100.0) {
        let law = DecoherenceLaw::Quadratic { c };
        let rep = sensitivity_sweep(&law, &[2, 3, 5, 8], total, 10.0, SweepMode::Optimal, None).unwrap();
        for (i, r) in rep.ratios.iter().enumerate() {
            prop_assert_eq!(*r, rep.unentangled[i].delta_omega_min / rep.ghz[i].delta_omega_min);
            prop_assert!(rep.ghz[i].t_opt <= total && rep.ghz[i].t_opt > 0.0);
        }
        prop_assert!((rep.r_fit.exponent - 0.25).abs() < 1e-9);
    }

    #[test]
    fn power_law_recovers_exact_data(k in -3.0f64..3.0, a in 0.01f64..100.0) {
        let x: [f64; 5] = [1.5, 2.0, 3.0, 4.5, 7.0];
        let y: Vec<f64> = x.iter().map(|v| a * v.powf(k)).collect();
        let fit = fit_power_law(&x, &y).unwrap();
        prop_assert!((fit.exponent - k).abs() < 1e-10);
        prop_assert!((fit.prefactor / a - 1.0).abs() < 1e-10);
    }

    #[test]
    fn numbers_round_trip(x in any::<f64>()) {
        prop_assume!(x.is_finite());
        prop_assert_eq!(num(x).parse::<f64>().unwrap().to_bits(), x.to_bits());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn fit_is_monotone_and_psd(
        omega in 5.0f64..15.0,
        c in 0.05f64..1.0,
        n in 1usize..8,
        wiggle in 0.0f64..0.02,
    ) {
        let t_max = (3.0 / (n as f64 * c)).sqrt();
        let times: Vec<f64> = (0..250).map(|i| t_max * i as f64 / 249.0).collect();
        let nf = n as f64;
        let p: Vec<f64> = times
            .iter()
            .enumerate()
            .map(|(i, t)| {
                let clean = 0.5 * (1.0 - (nf * omega * t).cos() * (-nf * c * t * t).exp());
                (clean + wiggle * (((i * 37) % 11) as f64 / 11.0 - 0.5)).clamp(0.0, 1.0)
            })
            .collect();
        let fit = fit_ramsey(&times, &p, n, Parameterization::QuadraticGamma).unwrap();
        prop_assert!(fit.cost_history.windows(2).all(|w| w[1] <= w[0]));
        let cov = &fit.covariance;
        prop_assert!(cov[0][0] >= 0.0 && cov[1][1] >= 0.0);
        prop_assert_eq!(cov[0][1], cov[1][0]);
        prop_assert!(cov[0][0] * cov[1][1] >= cov[0][1] * cov[0][1] * (1.0 - 1e-9));
        prop_assert!(fit.residual_rms >= 0.0);
        if fit.converged {
            prop_assert!(fit.gradient_norm < 1e-10);
        }
    }
}

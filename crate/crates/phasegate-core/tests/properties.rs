//! Randomized property tests for the structural invariants of the library:
//! linearity and exact decay of the label dynamics, gauge and resampling
//! invariance of the phase ledger, closure and robustness guarantees of the
//! projected force families, the gate's spin-symmetry selection rules, the
//! statistical contract of the Monte Carlo estimator, and the state
//! invariants of the master-equation step.

use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use phasegate_core::design::{
    compensate_damping, gram_schmidt_force, kappa_for_phase, offset_sensitivity, ConstraintSet,
    InnerProductRule,
};
use phasegate_core::dynamics::{propagate_closed_form, ModeParams, Path};
use phasegate_core::force::{ForceProfile, HarmonicTerm};
use phasegate_core::gate::{run_gate, GateConfig, SpinCombo};
use phasegate_core::grid::TimeGrid;
use phasegate_core::oracle::{step_master_equation, DensityMatrix};
use phasegate_core::phase::{
    dissipative_term, enclosed_area, isolated_phase, ledger, wrap_angle,
};
use phasegate_core::thermal::monte_carlo_fidelity;

const OMEGA: f64 = 4.0 * std::f64::consts::PI;
const DURATION: f64 = 0.5;

fn tone(amp: f64, k: usize, phase: f64) -> HarmonicTerm {
    HarmonicTerm {
        amplitude: amp,
        omega: k as f64 * 2.0 * std::f64::consts::PI / DURATION,
        phase,
        decay: 0.0,
    }
}

/// 1 to 3 harmonics of the protocol window, all off-resonant with the mode
/// at ω = 4π over T = 0.5 (the k = 1 tone is the resonant one).
fn closed_tone_force() -> impl Strategy<Value = ForceProfile> {
    proptest::collection::vec(
        (0.5f64..4.0, 2usize..=6, 0.0f64..std::f64::consts::TAU),
        1..=3,
    )
    .prop_map(|terms| {
        ForceProfile::harmonics(
            terms
                .into_iter()
                .map(|(amp, k, phase)| tone(amp, k, phase))
                .collect(),
        )
    })
}

/// Arbitrary tones with no closure structure.
fn generic_force() -> impl Strategy<Value = ForceProfile> {
    proptest::collection::vec(
        (0.5f64..4.0, 5.0f64..60.0, 0.0f64..std::f64::consts::TAU),
        1..=3,
    )
    .prop_map(|terms| {
        ForceProfile::harmonics(
            terms
                .into_iter()
                .map(|(amp, omega, phase)| HarmonicTerm {
                    amplitude: amp,
                    omega,
                    phase,
                    decay: 0.0,
                })
                .collect(),
        )
    })
}

fn complex(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn label_path_is_linear_in_the_force(
        f1 in generic_force(),
        f2 in generic_force(),
        gamma in 0.0f64..2.0,
    ) {
        let grid = TimeGrid::new(DURATION, 512).unwrap();
        let params = ModeParams::new(OMEGA, gamma, DURATION).unwrap();
        let origin = complex(0.0, 0.0);
        let a = propagate_closed_form(origin, &f1, &params, &grid).unwrap();
        let b = propagate_closed_form(origin, &f2, &params, &grid).unwrap();
        let sum_force = ForceProfile::harmonics(
            [f1, f2]
                .iter()
                .flat_map(|f| match f {
                    ForceProfile::Harmonics(terms) => terms.clone(),
                    _ => unreachable!(),
                })
                .collect(),
        );
        let both = propagate_closed_form(origin, &sum_force, &params, &grid).unwrap();
        let scale = 1.0
            + both.z().iter().map(|z| z.norm()).fold(0.0, f64::max);
        for k in 0..grid.len() {
            let expected = a.z()[k] + b.z()[k];
            prop_assert!(
                (both.z()[k] - expected).norm() < 1e-10 * scale,
                "node {}: {} vs {}", k, both.z()[k], expected
            );
        }
    }

    #[test]
    fn undriven_label_decays_exponentially(
        re in -1.5f64..1.5,
        im in -1.5f64..1.5,
        gamma in 0.0f64..3.0,
    ) {
        let grid = TimeGrid::new(DURATION, 256).unwrap();
        let params = ModeParams::new(OMEGA, gamma, DURATION).unwrap();
        let z0 = complex(re, im);
        let path = propagate_closed_form(z0, &ForceProfile::zero(), &params, &grid).unwrap();
        for k in 0..grid.len() {
            let expected = z0 * (-gamma * grid.t(k)).exp();
            prop_assert!(
                (path.z()[k] - expected).norm() <= 1e-12 * (1.0 + z0.norm()),
                "node {}: {} vs {}", k, path.z()[k], expected
            );
        }
    }

    #[test]
    fn isolated_phase_matches_angle_rate_quadrature(force in closed_tone_force()) {
        let grid = TimeGrid::new(DURATION, 2048).unwrap();
        let params = ModeParams::new(OMEGA, 0.0, DURATION).unwrap();
        let path = propagate_closed_form(complex(0.0, 0.0), &force, &params, &grid).unwrap();
        let phi = isolated_phase(&path, &Path::at_origin(grid.clone())).unwrap();

        // Independent evaluation of ∫ r² dθ from the samples alone.
        let mut fd = 0.0;
        for k in 0..grid.len() - 1 {
            let (z0, z1) = (path.z()[k], path.z()[k + 1]);
            if z0.norm() < 1e-12 || z1.norm() < 1e-12 {
                continue;
            }
            let dtheta = (z1 * z0.conj()).arg();
            fd += 0.5 * (z0.norm_sqr() + z1.norm_sqr()) * dtheta;
        }
        prop_assert!(
            (phi - fd).abs() < 2e-3 * (1.0 + phi.abs()),
            "quadrature {} vs finite differences {}", phi, fd
        );
    }

    #[test]
    fn pair_phases_are_gauge_invariant(
        f1 in closed_tone_force(),
        f2 in closed_tone_force(),
        gamma in 0.0f64..1.5,
        alpha in 0.0f64..std::f64::consts::TAU,
    ) {
        let grid = TimeGrid::new(DURATION, 512).unwrap();
        let params = ModeParams::new(OMEGA, gamma, DURATION).unwrap();
        let origin = complex(0.0, 0.0);
        let p0 = propagate_closed_form(origin, &f1, &params, &grid).unwrap();
        let p1 = propagate_closed_form(origin, &f2, &params, &grid).unwrap();
        let rot = Complex64::from_polar(1.0, alpha);
        let rotate = |p: &Path| {
            Path::from_samples(
                grid.clone(),
                p.z().iter().map(|z| z * rot).collect(),
                p.zdot().iter().map(|z| z * rot).collect(),
            )
            .unwrap()
        };
        let (phi_l, eta) = dissipative_term(&p0, &p1, gamma).unwrap();
        let (phi_l_rot, eta_rot) = dissipative_term(&rotate(&p0), &rotate(&p1), gamma).unwrap();
        let phi = isolated_phase(&p0, &p1).unwrap();
        let phi_rot = isolated_phase(&rotate(&p0), &rotate(&p1)).unwrap();
        prop_assert!((phi_l - phi_l_rot).abs() < 1e-12 * (1.0 + phi_l.abs()));
        prop_assert!((eta - eta_rot).abs() < 1e-12 * (1.0 + eta));
        prop_assert!((phi - phi_rot).abs() < 1e-12 * (1.0 + phi.abs()));
    }

    #[test]
    fn phase_scales_quadratically_with_amplitude(force in closed_tone_force()) {
        let grid = TimeGrid::new(DURATION, 1024).unwrap();
        let params = ModeParams::new(OMEGA, 0.0, DURATION).unwrap();
        let origin = complex(0.0, 0.0);
        let silent = Path::at_origin(grid.clone());
        let base = propagate_closed_form(origin, &force, &params, &grid).unwrap();
        let phi = isolated_phase(&base, &silent).unwrap();
        let scaled =
            propagate_closed_form(origin, &force.scaled(2.0f64.sqrt()), &params, &grid).unwrap();
        let phi_scaled = isolated_phase(&scaled, &silent).unwrap();
        prop_assert!(
            (phi_scaled - 2.0 * phi).abs() < 1e-10 * (1.0 + phi.abs()),
            "{} vs twice {}", phi_scaled, phi
        );
    }

    #[test]
    fn closed_phase_is_twice_the_enclosed_area(force in closed_tone_force()) {
        let grid = TimeGrid::new(DURATION, 2048).unwrap();
        let params = ModeParams::new(OMEGA, 0.0, DURATION).unwrap();
        let path = propagate_closed_form(complex(0.0, 0.0), &force, &params, &grid).unwrap();
        let phi = isolated_phase(&path, &Path::at_origin(grid.clone())).unwrap();
        let area = enclosed_area(&path);
        prop_assert!(
            (phi - 2.0 * area).abs() < 5e-3 * (1.0 + phi.abs()),
            "phase {} vs twice the shoelace area {}", phi, 2.0 * area
        );
    }

    #[test]
    fn resampling_preserves_the_isolated_phase(force in closed_tone_force()) {
        let params = ModeParams::new(OMEGA, 0.0, DURATION).unwrap();
        let mut phases = Vec::new();
        for n in [1024usize, 2048] {
            let grid = TimeGrid::new(DURATION, n).unwrap();
            let path = propagate_closed_form(complex(0.0, 0.0), &force, &params, &grid).unwrap();
            phases.push(isolated_phase(&path, &Path::at_origin(grid)).unwrap());
        }
        prop_assert!(
            (phases[0] - phases[1]).abs() < 1e-6 * (1.0 + phases[1].abs()),
            "{} vs {}", phases[0], phases[1]
        );
    }

    #[test]
    fn wrapped_angles_stay_principal(x in -100.0f64..100.0) {
        let w = wrap_angle(x);
        prop_assert!(w > -std::f64::consts::PI && w <= std::f64::consts::PI);
        let residue = Complex64::from_polar(1.0, w - x);
        prop_assert!((residue - Complex64::ONE).norm() < 1e-9);
    }

    #[test]
    fn projected_forces_close_the_path(
        seed in generic_force(),
        gamma in 0.0f64..1.5,
        omega in 10.0f64..25.0,
    ) {
        let grid = TimeGrid::new(DURATION, 1024).unwrap();
        let rule = InnerProductRule::new(grid.clone());
        let set = ConstraintSet::one_mode(omega, gamma).unwrap();
        let projected = gram_schmidt_force(&seed, &set, &rule).unwrap();
        let params = ModeParams::new(omega, gamma, DURATION).unwrap();
        let path = propagate_closed_form(complex(0.0, 0.0), &projected, &params, &grid).unwrap();
        let scale = 1.0 + path.z().iter().map(|z| z.norm()).fold(0.0, f64::max);
        prop_assert!(
            path.z_final().norm() < 1e-6 * scale,
            "projected force leaves |z(T)| = {}", path.z_final().norm()
        );
    }

    #[test]
    fn projected_forces_are_offset_insensitive(
        seed in generic_force(),
        gamma in 0.0f64..1.0,
    ) {
        let grid = TimeGrid::new(DURATION, 1024).unwrap();
        let rule = InnerProductRule::new(grid.clone());
        let omega_plus = 3.0f64.sqrt() * OMEGA;
        let set = ConstraintSet::two_mode(omega_plus, OMEGA, gamma).unwrap();
        let projected = gram_schmidt_force(&seed, &set, &rule).unwrap();

        // The constraint set contains the constant, so the projection has a
        // zero time average...
        let mean = rule.pair(&projected, &ForceProfile::constant(1.0));
        let scale = 1.0 + rule.norm(&projected);
        prop_assert!(mean.abs() < 1e-8 * scale, "force mean {}", mean);

        // ...and with closure in place the offset response vanishes.
        let params = ModeParams::new(OMEGA, gamma, DURATION).unwrap();
        let s = offset_sensitivity(&projected, &params, &grid).unwrap();
        prop_assert!(s.abs() < 1e-6 * scale, "offset sensitivity {}", s);
    }

    #[test]
    fn projection_is_idempotent(seed in generic_force(), gamma in 0.0f64..1.0) {
        let grid = TimeGrid::new(DURATION, 1024).unwrap();
        let rule = InnerProductRule::new(grid.clone());
        let set = ConstraintSet::one_mode(OMEGA, gamma).unwrap();
        let once = gram_schmidt_force(&seed, &set, &rule).unwrap();
        let twice = gram_schmidt_force(&once, &set, &rule).unwrap();
        let diff: Vec<f64> = once
            .sample_on(&grid)
            .iter()
            .zip(twice.sample_on(&grid))
            .map(|(a, b)| a - b)
            .collect();
        let l2: f64 = (diff.iter().map(|d| d * d).sum::<f64>() * grid.dt()).sqrt();
        prop_assert!(
            l2 < 1e-10 * (1.0 + rule.norm(&once)),
            "second projection moved the force by {}", l2
        );
    }

    #[test]
    fn zero_damping_compensation_is_the_identity(
        force in generic_force(),
        t in 0.0f64..DURATION,
    ) {
        let compensated = compensate_damping(&force, 0.0);
        prop_assert_eq!(compensated.eval(t).to_bits(), force.eval(t).to_bits());

        let grid = TimeGrid::new(DURATION, 64).unwrap();
        let sampled = ForceProfile::sampled(
            (0..grid.len()).map(|k| grid.t(k)).collect(),
            force.sample_on(&grid),
        ).unwrap();
        let compensated = compensate_damping(&sampled, 0.0);
        prop_assert_eq!(compensated.eval(t).to_bits(), sampled.eval(t).to_bits());
    }

    #[test]
    fn amplitude_factor_hits_the_phase_target(
        force in closed_tone_force(),
        gamma in 0.0f64..1.0,
        boost in 1.2f64..4.0,
    ) {
        let grid = TimeGrid::new(DURATION, 1024).unwrap();
        let params = ModeParams::new(OMEGA, gamma, DURATION).unwrap();
        let silent = Path::at_origin(grid.clone());
        let base = propagate_closed_form(complex(0.0, 0.0), &force, &params, &grid).unwrap();
        let achieved = isolated_phase(&base, &silent).unwrap();
        prop_assume!(achieved.abs() > 1e-6);

        let target = boost * achieved;
        let kappa = kappa_for_phase(&force, &params, &grid, target).unwrap();
        prop_assert!((kappa * kappa - boost).abs() < 1e-10 * boost);
        let rescaled =
            propagate_closed_form(complex(0.0, 0.0), &force.scaled(kappa), &params, &grid)
                .unwrap();
        let realized = isolated_phase(&rescaled, &silent).unwrap();
        prop_assert!(
            (realized - target).abs() < 1e-8 * (1.0 + target.abs()),
            "realized {} vs target {}", realized, target
        );
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn ground_start_gate_selection_rules(
        drive in closed_tone_force(),
        gamma in 0.0f64..1.0,
    ) {
        let grid = TimeGrid::new(DURATION, 512).unwrap();
        let config = GateConfig::new(OMEGA, gamma, 0.0, DURATION, 1.0, drive, grid).unwrap();
        let outcome = run_gate(&config, (complex(0.0, 0.0), complex(0.0, 0.0))).unwrap();

        // One member of each driven pair idles at the origin, so the
        // dissipative phase vanishes identically from the ground state.
        prop_assert!(outcome.ledger.phi_l.abs() < 1e-14);
        prop_assert!(outcome.gamma_exponent >= 0.0);
        prop_assert!(outcome.fidelity_bound >= 0.5 && outcome.fidelity_bound <= 1.0);

        // Same-class pairs carry no isolated phase: their labels differ only
        // by the sign of the drive, which the quadratic integrands ignore.
        let params_minus = config.params_minus().unwrap();
        let params_plus = config.params_plus().unwrap();
        for (i, j) in [
            (SpinCombo::UpUp, SpinCombo::DownDown),
            (SpinCombo::UpDown, SpinCombo::DownUp),
        ] {
            let pi = outcome.paths_for(i);
            let pj = outcome.paths_for(j);
            let minus = ledger(&pi.minus, &pj.minus, &params_minus).unwrap();
            let plus = ledger(&pi.plus, &pj.plus, &params_plus).unwrap();
            let total = minus.sum(&plus);
            prop_assert!(
                total.phi_isol.abs() < 1e-12,
                "{:?} vs {:?} carries phase {}", i, j, total.phi_isol
            );
        }
    }

    #[test]
    fn master_equation_step_preserves_state_invariants(
        dim in 3usize..=6,
        seed in any::<u64>(),
        rate in 0.0f64..1.0,
        dt in 1e-4f64..1e-2,
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut random_matrix = |d: usize| {
            DMatrix::from_fn(d, d, |_, _| {
                Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
            })
        };
        let a = random_matrix(dim);
        let raw = &a * a.adjoint();
        let rho = DensityMatrix::new(raw.scale(1.0 / raw.trace().re)).unwrap();
        let h_raw = random_matrix(dim);
        let hamiltonian = &h_raw + h_raw.adjoint();
        let lindblad = vec![(rate, random_matrix(dim))];

        let next = step_master_equation(&rho, |_| hamiltonian.clone(), &lindblad, 0.0, dt).unwrap();
        prop_assert!((next.trace() - Complex64::ONE).norm() < 1e-10);
        let dev = (next.data() - next.data().adjoint()).norm();
        prop_assert!(dev < 1e-10, "hermiticity deviation {}", dev);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(4))]

    #[test]
    fn standard_error_shrinks_as_root_n(seed in any::<u64>()) {
        let config = thermal_scenario();
        let small = monte_carlo_fidelity(&config, 200, seed).unwrap();
        let large = monte_carlo_fidelity(&config, 800, seed.wrapping_add(1)).unwrap();
        let ratio = small.std_error / large.std_error;
        prop_assert!(
            (1.6..=2.4).contains(&ratio),
            "4x the samples changed the error by {} (want ~2)", ratio
        );
    }

    #[test]
    fn disjoint_seed_streams_are_statistically_compatible(seed in any::<u64>()) {
        let config = thermal_scenario();
        let a = monte_carlo_fidelity(&config, 400, seed).unwrap();
        let b = monte_carlo_fidelity(&config, 400, seed ^ 0x9e37_79b9_7f4a_7c15).unwrap();
        let bar = 3.0 * (a.std_error.powi(2) + b.std_error.powi(2)).sqrt();
        prop_assert!(
            (a.mean - b.mean).abs() <= bar,
            "means {} and {} differ beyond {}", a.mean, b.mean, bar
        );
    }
}

fn thermal_scenario() -> GateConfig {
    let grid = TimeGrid::new(DURATION, 256).unwrap();
    let drive = ForceProfile::harmonics(vec![tone(4.0, 2, 0.0)]);
    let config = GateConfig::new(OMEGA, 0.5, 0.3, DURATION, 1.0, drive, grid).unwrap();
    let outcome = run_gate(&config, (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0)))
        .expect("deterministic reference gate");
    let realized = outcome.ledger.phi_isol + outcome.ledger.phi_l;
    config.with_target_phase(realized)
}

use proptest::prelude::*;

use stemflow::abm::{self, AbmConfig};
use stemflow::grid::{Grid, GridSpec};
use stemflow::pde_full::FullModel;
use stemflow::pde_reduced::{ReducedModel, ReducedVariant};
use stemflow::spectral::{self, AlphaShape, FrozenRates};
use stemflow::steady::{b_star, growth_balance};
use stemflow::{Error, KnotSet, PopulationTrace, RawParameters, SigmoidCoefficients};

fn variant(level: u8) -> ReducedVariant {
    ReducedVariant::from_level(level).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn sigmoid_reproduces_its_knots(
        floor in 0.0..0.05f64,
        top in 0.05..1.0f64,
        low in 0.01..0.5f64,
        mid in 0.05..0.95f64,
        scale in 1e2..1e6f64,
    ) {
        let k1 = floor + top;
        let k3 = floor + top * low;
        let k2 = k3 + (k1 - k3) * mid;
        let knots = KnotSet::new(k1, k2, k3, floor);
        // Knots that no decreasing sigmoid passes through are rejected, not
        // silently approximated.
        if let Ok(s) = SigmoidCoefficients::from_knots(&knots, scale) {
            for (x, want) in [(0.0, k1), (0.5 * scale, k2), (scale, k3)] {
                prop_assert!((s.hourly(x) - want).abs() <= 1e-10 * want);
            }
            prop_assert!((s.hourly(1e3 * scale) - floor).abs() < 1e-6 * k1);
        }
    }

    #[test]
    fn b_star_is_an_involution(b in 0.02..3.0f64, rho in 0.05..1.0f64) {
        let bs = b_star(b, rho);
        prop_assert!((growth_balance(bs, rho) - growth_balance(b, rho)).abs() < 1e-12);
        prop_assert!((b_star(bs, rho) - b).abs() <= 1e-10 * b);
        prop_assert!((b - rho) * (bs - rho) <= 0.0);
    }

    #[test]
    fn constant_alpha_sign_law(b in 0.05..2.0f64, rho in 0.05..1.0f64, ratio in 0.2..3.0f64, omega in 0.01..2.0f64) {
        let bs = b_star(b, rho);
        let alpha = bs * ratio;
        prop_assume!((alpha - bs).abs() > 1e-8);
        let rates = FrozenRates { alpha: AlphaShape::Constant(alpha), omega, b, rho_d: rho };
        let e = spectral::real_eigenvalue(&rates).unwrap();
        prop_assert_eq!(e.lambda > 0.0, alpha > bs);
    }

    #[test]
    fn adjoint_boundary_values(
        amplitude in 0.1..2.0f64,
        gamma in 0.5..8.0f64,
        omega in 0.05..2.0f64,
        b in 0.05..1.5f64,
        rho in 0.1..1.0f64,
    ) {
        let rates = FrozenRates { alpha: AlphaShape::Exponential { amplitude, gamma }, omega, b, rho_d: rho };
        let e = spectral::real_eigenvalue(&rates).unwrap();
        prop_assert_eq!(e.phi_at(1.0).unwrap(), 0.0);
        prop_assert!((e.phi_at(0.0).unwrap() - 1.0).abs() < 1e-10);
        prop_assert!(((e.lambda + omega) * e.psi - omega).abs() < 1e-8);
        // phi is positive inside and decreases to zero at the right end.
        prop_assert!(e.phi_at(0.999).unwrap() > 0.0);
    }

    #[test]
    fn reduced_models_stay_nonnegative(level in 1u8..=4, d in 1.0..1.3f64, a0 in 0.0..5.0f64) {
        let p = RawParameters::default().with_d(d).rescale().unwrap();
        let mut m = ReducedModel::new(p, GridSpec::default(), variant(level)).unwrap();
        let mut s = m.initial_state(a0);
        for _ in 0..m.grid.steps_for(5.0) {
            m.step(&mut s).unwrap();
        }
        prop_assert!(s.a_star >= -1e-12);
        prop_assert!(s.omega.iter().all(|v| *v >= -1e-12));
        if let Some(a) = &s.a {
            prop_assert!(a.iter().all(|v| *v >= -1e-12));
        }
    }

    #[test]
    fn courant_numbers_above_one_are_rejected(m in 1usize..6, q in 1usize..8, qc in 1usize..8) {
        let spec = GridSpec { steps_per_hour: m, x_cells_per_hour: q, c_cells_per_hour: qc };
        let p = RawParameters::default().rescale().unwrap();
        let r = Grid::new(spec, &p);
        if q > m || qc > m {
            prop_assert!(matches!(r, Err(Error::CflViolation(_))));
        } else {
            prop_assert!(r.is_ok());
        }
    }

    #[test]
    fn trace_csv_round_trips(values in prop::collection::vec((0.0..1e3f64, 0.0..10.0f64, 0.0..10.0f64), 0..20)) {
        let mut t = PopulationTrace::new("x");
        for (time, a, w) in values {
            t.push(time, a, w);
        }
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let back = PopulationTrace::read_csv(buf.as_slice(), "x").unwrap();
        prop_assert_eq!(back, t);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn abm_is_deterministic_per_seed(seed in any::<u64>()) {
        let run = || {
            let mut cfg = AbmConfig::new(RawParameters::default(), 2.0, seed);
            cfg.record_cadence_hours = 1;
            abm::simulate(cfg).unwrap().population_trace()
        };
        prop_assert_eq!(run(), run());
    }

    #[test]
    fn full_model_stays_nonnegative(d in 1.0..1.3f64, a0 in 0.0..5.0f64) {
        let p = RawParameters::default().with_d(d).rescale().unwrap();
        let mut m = FullModel::new(p, GridSpec::default()).unwrap();
        let mut s = m.initial_state(a0);
        for _ in 0..m.grid.steps_for(3.0) {
            m.step(&mut s).unwrap();
        }
        prop_assert!(s.a_star >= -1e-12);
        prop_assert!(s.a.iter().chain(&s.omega).chain(&s.omega_star).all(|v| *v >= -1e-12));
    }
}

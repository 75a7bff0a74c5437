use proptest::prelude::*;

use splitmax::analysis::{fit_order, mc_aggregate, mc_aggregate_indexed};
use splitmax::format::g17;
use splitmax::grid::{
    discrete_curl, discrete_curl_alpha, energy, inner_l2, Axis, Cuboid, GridSpec, StateZ,
};
use splitmax::noise::{sample_lattice, NoiseIncrement, NoiseSpec};
use splitmax::rng::normal_at;
use splitmax::stepper::{one_step, SplitOrder, StepperConfig};
use splitmax::subflow::{apply_sub_semigroup, SchemeKind};

fn grid_strategy() -> impl Strategy<Value = GridSpec> {
    (4usize..8, 4usize..8, 4usize..8).prop_map(|(a, b, c)| {
        GridSpec::new(Cuboid::new([0.0; 3], [1.0, 0.7, 1.3]).unwrap(), [a, b, c]).unwrap()
    })
}

fn state_on(grid: GridSpec, seed: u64) -> StateZ {
    let len = grid.state_len();
    let data = (0..len).map(|i| normal_at(seed, 0, 0, i as u32)).collect();
    let mut z = StateZ::from_flat(grid, data).unwrap();
    z.apply_pec();
    z
}

fn axis_strategy() -> impl Strategy<Value = Axis> {
    prop::sample::select(Axis::ALL.to_vec())
}

fn scheme_strategy() -> impl Strategy<Value = SchemeKind> {
    prop::sample::select(SchemeKind::ALL.to_vec())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn split_operators_are_skew(grid in grid_strategy(), axis in axis_strategy(), s in any::<u64>()) {
        let a = state_on(grid, s);
        let b = state_on(grid, s.wrapping_add(1));
        let mb = discrete_curl_alpha(&b, axis).unwrap();
        let ma = discrete_curl_alpha(&a, axis).unwrap();
        let lhs = inner_l2(&a, &mb).unwrap();
        let rhs = -inner_l2(&ma, &b).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-10 * (1.0 + lhs.abs()), "{lhs} vs {rhs}");
        let full = discrete_curl(&a).unwrap();
        prop_assert!(inner_l2(&a, &full).unwrap().abs() <= 1e-10 * energy(&full).sqrt().max(1.0));
    }

    #[test]
    fn operators_keep_boundary_consistency(grid in grid_strategy(), axis in axis_strategy(), s in any::<u64>()) {
        let z = state_on(grid, s);
        prop_assert!(discrete_curl_alpha(&z, axis).unwrap().is_boundary_consistent(0.0));
    }

    #[test]
    fn sub_semigroups_do_not_gain_energy(
        grid in grid_strategy(),
        axis in axis_strategy(),
        scheme in scheme_strategy(),
        tau in 0.001f64..0.5,
        s in any::<u64>(),
    ) {
        let z = state_on(grid, s);
        let e0 = energy(&z);
        let e1 = energy(&apply_sub_semigroup(&z, axis, scheme, tau).unwrap());
        match scheme {
            SchemeKind::ImplicitEuler => prop_assert!(e1 <= e0 * (1.0 + 1e-12)),
            _ => prop_assert!((e1 - e0).abs() <= 1e-10 * e0, "{scheme}: {e0} -> {e1}"),
        }
    }

    #[test]
    fn deterministic_step_is_linear(
        grid in grid_strategy(),
        scheme in scheme_strategy(),
        order in prop::sample::select(SplitOrder::all().to_vec()),
        alpha in -3.0f64..3.0,
        s in any::<u64>(),
    ) {
        let spec = NoiseSpec::silent();
        let zero = NoiseIncrement::zero(grid, spec.modes);
        let cfg = StepperConfig { scheme, order, tau: 0.05, steps: 1 };
        let a = state_on(grid, s);
        let b = state_on(grid, s ^ 0x5555);
        let mut combo = a.clone();
        combo.add_scaled(alpha, &b).unwrap();
        let mut expected = one_step(&a, &cfg, &zero, &spec).unwrap();
        expected.add_scaled(alpha, &one_step(&b, &cfg, &zero, &spec).unwrap()).unwrap();
        let got = one_step(&combo, &cfg, &zero, &spec).unwrap();
        prop_assert!(got.max_abs_diff(&expected) <= 1e-11 * (1.0 + expected.max_abs()));
    }

    #[test]
    fn indexed_aggregate_ignores_arrival_order(
        values in prop::collection::vec(-1e3f64..1e3, 2..64),
        seed in any::<u64>(),
    ) {
        let indexed: Vec<(u64, f64)> = values.iter().copied().enumerate().map(|(i, v)| (i as u64, v)).collect();
        let mut shuffled = indexed.clone();
        let n = shuffled.len();
        for i in (1..n).rev() {
            let j = (seed.wrapping_mul(6364136223846793005).wrapping_add(i as u64) >> 33) as usize % (i + 1);
            shuffled.swap(i, j);
        }
        let a = mc_aggregate_indexed(&indexed).unwrap();
        let b = mc_aggregate_indexed(&shuffled).unwrap();
        prop_assert_eq!(a.0.to_bits(), b.0.to_bits());
        prop_assert_eq!(a.1.to_bits(), b.1.to_bits());
        prop_assert_eq!(a, mc_aggregate(&values).unwrap());
    }

    #[test]
    fn constant_samples_have_zero_stderr(v in -1e6f64..1e6, m in 2usize..100) {
        prop_assert_eq!(mc_aggregate(&vec![v; m]).unwrap(), (v, 0.0));
    }

    #[test]
    fn fit_recovers_power_laws(p in 0.25f64..3.0, c in 1e-6f64..1e3, n in 3usize..7) {
        let points: Vec<(f64, f64)> = (0..n).map(|k| {
            let tau = 0.5 / f64::from(1u32 << (k + 2));
            (tau, c * tau.powf(2.0 * p))
        }).collect();
        let (order, residual) = fit_order(&points).unwrap();
        prop_assert!((order - p).abs() < 1e-9, "{order} vs {p}");
        prop_assert!(residual < 1e-9);
    }

    #[test]
    fn g17_round_trips(x in any::<f64>().prop_filter("finite", |x| x.is_finite())) {
        prop_assert_eq!(g17(x).parse::<f64>().unwrap().to_bits(), x.to_bits());
    }

    #[test]
    fn lattice_draws_are_pure_functions_of_counters(seed in any::<u64>(), sample in 0u64..1000, n in 1usize..16) {
        let spec = NoiseSpec::new([1.0; 3], [1.0; 3], 3.0, 2, seed).unwrap();
        let a = sample_lattice(&spec, sample, 0.5, n).unwrap();
        let b = sample_lattice(&spec, sample, 0.5, n).unwrap();
        for m in 0..spec.mode_count() {
            prop_assert_eq!(a.fine_increments(m), b.fine_increments(m));
        }
    }
}

use burgers_lab::io::{fmt_num, read_field_slab, write_field_slab, TRAJ_MAGIC};
use burgers_lab::stats::{lag_ladder, pnorm};
use burgers_lab::{
    heat_kernel, sigma_eval, Config, Family, HeatPropagator, LatticeGrid, NoiseField, Profile, ProblemSpec, ScalarField,
    SigmaKind,
};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn kernel_is_positive_even_and_peaked(t in 1e-4f64..10.0, x in -20.0f64..20.0) {
        let k = heat_kernel(t, x).unwrap();
        let m = heat_kernel(t, -x).unwrap();
        prop_assert!(k.value >= 0.0);
        prop_assert_eq!(k.value, m.value);
        prop_assert!((k.dx + m.dx).abs() <= 1e-15 * k.dx.abs().max(1e-300));
        prop_assert!(k.value <= heat_kernel(t, 0.0).unwrap().value);
    }

    #[test]
    fn propagator_preserves_constants_in_the_interior(c in -5.0f64..5.0, t in 1e-4f64..0.05) {
        let g = LatticeGrid::new(4.0, 128, 1.0, 10).unwrap();
        let p = HeatPropagator::new(&g, t).unwrap();
        let out = p.apply(&vec![c; g.nx], burgers_lab::Padding::Edge).unwrap();
        for j in g.central_cells() {
            prop_assert!((out[j] - c).abs() <= 1e-10 * (1.0 + c.abs()));
        }
    }

    #[test]
    fn cell_regeneration_is_counter_based(seed in any::<u64>(), n in 0usize..8, j in 0usize..16) {
        let g = LatticeGrid::new(1.0, 16, 1.0, 8).unwrap();
        let w = NoiseField::sample(g, seed);
        prop_assert_eq!(w.increment(n, j), NoiseField::cell_value(&g, seed, n, j));
    }

    #[test]
    fn multiplicative_sigma_stays_under_envelope(x in -5.0f64..5.0, r in -1e6f64..1e6, l in 0.0f64..10.0) {
        let f = Profile::unit(Family::Sech);
        let spec = ProblemSpec::new(Profile::zero(), f, SigmaKind::Multiplicative, 4.0, l).unwrap();
        let s = sigma_eval(&spec, 0.0, x, r);
        prop_assert!(s.abs() <= f.eval(x) + 1e-15);
        let s2 = sigma_eval(&spec, 0.0, x, r + 1e-3);
        prop_assert!((s2 - s).abs() <= l * 1e-3 * (1.0 + 1e-9));
    }

    #[test]
    fn numbers_round_trip_through_text(v in any::<f64>().prop_filter("finite", |v| v.is_finite())) {
        prop_assert_eq!(fmt_num(v).parse::<f64>().unwrap(), v);
    }

    #[test]
    fn config_canonical_form_reparses(keys in proptest::collection::btree_map("[a-z]{1,6}\\.[a-z]{1,6}", "[a-z0-9.]{1,8}", 1..8)) {
        let text: String = keys.iter().map(|(k, v)| format!("  {k} =  {v}   # note\n\n")).collect();
        let c = Config::parse(&text).unwrap();
        let again = Config::parse(&c.canonical()).unwrap();
        prop_assert_eq!(c.iter().collect::<Vec<_>>(), again.iter().collect::<Vec<_>>());
        prop_assert_eq!(c.iter().count(), keys.len());
    }

    #[test]
    fn slabs_round_trip(values in proptest::collection::vec(-1e3f64..1e3, 8 * 3)) {
        let g = LatticeGrid::new(1.0, 8, 0.5, 2).unwrap();
        let f = ScalarField::from_rows(g, vec![0, 1, 2], values.clone()).unwrap();
        let mut buf = Vec::new();
        write_field_slab(&f, TRAJ_MAGIC, &mut buf).unwrap();
        let back = read_field_slab(TRAJ_MAGIC, &buf[..]).unwrap();
        prop_assert_eq!(back.values(), &values[..]);
    }

    #[test]
    fn lag_ladder_is_strictly_increasing(lo in 2usize..8, span in 10usize..200, count in 2usize..12) {
        let v = lag_ladder(lo, lo + span, count);
        prop_assert_eq!(v[0], lo);
        prop_assert_eq!(*v.last().unwrap(), lo + span);
        prop_assert!(v.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn pnorm_is_monotone_in_p(xs in proptest::collection::vec(-10.0f64..10.0, 2..50), p in 1.0f64..6.0) {
        prop_assert!(pnorm(&xs, p) <= pnorm(&xs, p + 1.0) * (1.0 + 1e-12));
    }
}

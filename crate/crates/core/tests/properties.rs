use fluxcount::dirac::eigenvalue;
use fluxcount::domain::DomainSpec;
use fluxcount::field::{FieldSpec, RobinSpec};
use fluxcount::fourier::Periodic;
use fluxcount::gauge::solve_potential_on_mesh;
use fluxcount::hardy::{holomorphic_witness_form, toeplitz_count, witness_by_quadrature};
use fluxcount::index::{aps_index, ceil_ac, lower_bound, FluxLedger, Rational, RationalLedger};
use fluxcount::linalg::C64;
use fluxcount::planar::{assemble, FormOptions, Spin, VectorFn};
use fluxcount::radial::{total_count, FiberCounterRegistry, RadialProblem};
use proptest::prelude::*;
use std::f64::consts::TAU;
use std::sync::Arc;

fn flux() -> impl Strategy<Value = f64> {
    // keep away from integers so the float ceiling is unambiguous
    (-8i32..8, 0.01f64..0.99).prop_map(|(k, f)| k as f64 + f)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn aps_index_equals_bound(d in 0usize..4, seed in prop::collection::vec((flux(), flux()), 4)) {
        let f: Vec<f64> = seed.iter().take(d + 1).map(|p| p.0).collect();
        let g: Vec<f64> = seed.iter().take(d + 1).map(|p| 0.5 * p.1).collect();
        let l = FluxLedger::new(d, f, g).unwrap();
        prop_assert_eq!(aps_index(&l), lower_bound(&l));
    }

    #[test]
    fn ceiling_commutes_with_integer_shifts(x in -50.0f64..50.0, k in -20i64..20) {
        prop_assert_eq!(ceil_ac(x + k as f64).value, ceil_ac(x).value + k);
        prop_assert!(ceil_ac(x).value as f64 >= x - 1e-9);
    }

    #[test]
    fn rational_bound_shifts_by_one(p in -100i64..100, q in 1i64..20, d in 0usize..3) {
        let f = vec![Rational::new(p, q); d + 1];
        let zero = vec![Rational::from_integer(0); d + 1];
        let a = RationalLedger::new(d, f.clone(), zero.clone()).unwrap();
        let mut shifted = f;
        shifted[0] += Rational::from_integer(1);
        let b = RationalLedger::new(d, shifted, zero).unwrap();
        prop_assert_eq!(b.lower_bound(), a.lower_bound() + 1);
        prop_assert_eq!(a.grubb_index().unwrap(), Rational::from_integer(a.aps_index()));
    }

    #[test]
    fn dirac_eigenvalues_form_shifted_lattice(a0 in -2.0f64..2.0, c in -1.0f64..1.0, s in -1.0f64..1.0, m in -5i64..5) {
        let v = Periodic::trig(a0, &[c], &[s], TAU);
        prop_assert!((eigenvalue(&v, m) - (m as f64 + a0)).abs() < 1e-10);
    }

    #[test]
    fn toeplitz_count_bounds_ceiling(a0 in -3.0f64..1.0, c in -1.0f64..1.0) {
        let v = Periodic::trig(a0, &[c], &[], TAU);
        prop_assume!((a0 - a0.round()).abs() > 1e-3);
        let bound = ceil_ac(-v.flux()).value.max(0) as usize;
        let small = toeplitz_count(&v, 32).count_negative;
        let large = toeplitz_count(&v, 64).count_negative;
        prop_assert!(small <= large);
        prop_assert!(large >= bound);
    }

    #[test]
    fn witness_algebra_matches_quadrature(re in prop::collection::vec(-1.0f64..1.0, 4), im in prop::collection::vec(-1.0f64..1.0, 4), a0 in -1.0f64..1.0, s in -1.0f64..1.0) {
        let v = Periodic::trig(a0, &[], &[s], TAU);
        let coeffs: Vec<(i64, C64)> = re.iter().zip(&im).enumerate().map(|(n, (a, b))| (n as i64, C64::new(*a, *b))).collect();
        let exact = holomorphic_witness_form(&coeffs, &v).unwrap();
        let quad = witness_by_quadrature(&coeffs, &v, 64);
        prop_assert!((exact - quad).abs() < 1e-9 * (1.0 + exact.abs()));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn galerkin_counts_grow_on_nested_grids(beta in 0.2f64..9.0, g in -1.0f64..1.0) {
        let p = RadialProblem::new(&FieldSpec::constant(beta), &DomainSpec::unit_disc(), &RobinSpec::constant(&[g])).unwrap();
        let reg = FiberCounterRegistry::default();
        let c = reg.get("galerkin").unwrap();
        let cutoff = p.default_cutoff();
        let counts: Vec<usize> = [128, 256, 512].iter().map(|&n| total_count(&p, n, cutoff, c).unwrap().count.count_negative).collect();
        prop_assert!(counts[0] <= counts[1] && counts[1] <= counts[2], "{:?}", counts);
    }

    #[test]
    fn counters_agree_off_threshold(beta in 0.2f64..9.0) {
        let flux = beta / 2.0;
        prop_assume!((flux - flux.round()).abs() > 0.02);
        let p = RadialProblem::new(&FieldSpec::constant(beta), &DomainSpec::unit_disc(), &RobinSpec::neumann(1)).unwrap();
        let reg = FiberCounterRegistry::default();
        let cutoff = p.default_cutoff();
        let a = total_count(&p, 1024, cutoff, reg.get("galerkin").unwrap()).unwrap().count.count_negative;
        let b = total_count(&p, 1024, cutoff, reg.get("zero-energy").unwrap()).unwrap().count.count_negative;
        prop_assert_eq!(a, b);
        prop_assert_eq!(a as i64, ceil_ac(flux).value);
    }

    #[test]
    fn gauge_shift_preserves_count(beta in 0.5f64..6.0, a in -1.0f64..1.0, b in -1.0f64..1.0) {
        let dom = DomainSpec::unit_disc();
        let mesh = dom.mesh(3).unwrap();
        let field = FieldSpec::constant(beta);
        let gauge = solve_potential_on_mesh(&field, &mesh).unwrap();
        let shift: VectorFn = Arc::new(move |x, y| [a * y + b, a * x]);
        let robin = RobinSpec::neumann(1);
        let plain = assemble(&dom, &mesh, &gauge, &field, &robin, &FormOptions::default()).unwrap();
        let shifted = assemble(&dom, &mesh, &gauge, &field, &robin, &FormOptions { spin: Spin::Up, gauge_shift: Some(shift) }).unwrap();
        prop_assert_eq!(
            plain.count_negative(0, 0).unwrap().count.count_negative,
            shifted.count_negative(0, 0).unwrap().count.count_negative
        );
    }

    #[test]
    fn charge_conjugation_swaps_spin(beta in 0.5f64..6.0) {
        let dom = DomainSpec::unit_disc();
        let mesh = dom.mesh(3).unwrap();
        let robin = RobinSpec::neumann(1);
        let count = |b: f64, spin| {
            let field = FieldSpec::constant(b);
            let gauge = solve_potential_on_mesh(&field, &mesh).unwrap();
            let form = assemble(&dom, &mesh, &gauge, &field, &robin, &FormOptions { spin, gauge_shift: None }).unwrap();
            form.count_negative(0, 0).unwrap().count.count_negative
        };
        prop_assert_eq!(count(beta, Spin::Up), count(-beta, Spin::Down));
    }
}

use std::f64::consts::PI;
use std::sync::OnceLock;

use hexdos::eigen::{hermitian_eigenvalues, SymTridiagonal};
use hexdos::hill::{HillModel, HillPotential};
use hexdos::landau::BohrSommerfeldMap;
use hexdos::semiclassics::{fermi_potential, sawtooth, Beta};
use hexdos::spectral::{build_tq, tq_eigenvalues, RationalFlux};
use hexdos::symbol::{symbol_energy, PhaseAreaTable, TorusPoint};
use proptest::prelude::*;

fn free_map() -> &'static BohrSommerfeldMap<f64> {
    static MAP: OnceLock<BohrSommerfeldMap<f64>> = OnceLock::new();
    MAP.get_or_init(|| {
        let model = HillModel::new(HillPotential::zero());
        let band = model.find_bands(1).unwrap()[0];
        BohrSommerfeldMap::new(&model, &band, PhaseAreaTable::build(512).unwrap(), 2048).unwrap()
    })
}

fn coprime_flux() -> impl Strategy<Value = RationalFlux> {
    (1u64..=30, 1u64..=30).prop_map(|(p, q)| RationalFlux::new(p.min(q), q).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn floquet_spectrum_is_chiral_and_bounded(f in coprime_flux(), k1 in 0.0..2.0 * PI, k2 in 0.0..2.0 * PI) {
        let ev = tq_eigenvalues(&f, TorusPoint { x: k1, xi: k2 }).unwrap();
        let n = ev.len();
        prop_assert_eq!(n, f.dim());
        for i in 0..n {
            prop_assert!((ev[i] + ev[n - 1 - i]).abs() <= 1e-10);
            prop_assert!(ev[i].abs() <= 1.0 + 1e-10);
        }
    }

    #[test]
    fn structured_and_dense_solvers_agree(f in coprime_flux(), k1 in 0.0..2.0 * PI, k2 in 0.0..2.0 * PI) {
        let k = TorusPoint { x: k1, xi: k2 };
        let dense = hermitian_eigenvalues(&build_tq(&f, k)).unwrap();
        let fast = tq_eigenvalues(&f, k).unwrap();
        for (a, b) in dense.iter().zip(&fast) {
            prop_assert!((a - b).abs() <= 1e-11);
        }
    }

    #[test]
    fn spectrum_depends_on_reduced_flux_only(p in 1u64..10, q in 1u64..10, m in 2u64..5, k1 in 0.0..2.0 * PI) {
        let a = RationalFlux::new(p.min(q), q).unwrap();
        let b = RationalFlux::new(p.min(q) * m, q * m).unwrap();
        prop_assert_eq!(a.q(), b.q());
        prop_assert_eq!(a.h::<f64>(), b.h::<f64>());
        let ea = tq_eigenvalues(&a, TorusPoint { x: k1, xi: 0.3 }).unwrap();
        let eb = tq_eigenvalues(&b, TorusPoint { x: k1, xi: 0.3 }).unwrap();
        prop_assert_eq!(ea, eb);
    }

    #[test]
    fn free_discriminant_closed_form(lambda in -5.0f64..100.0) {
        let model = HillModel::with_steps(HillPotential::zero(), 1024).unwrap();
        let d = model.discriminant(lambda).unwrap();
        let exact = if lambda >= 0.0 { lambda.sqrt().cos() } else { (-lambda).sqrt().cosh() };
        prop_assert!((d - exact).abs() <= 1e-9 * exact.abs().max(1.0));
    }

    #[test]
    fn landau_levels_solve_quantization(h in 2e-3f64..0.05) {
        let map = free_map();
        let levels = map.landau_levels(h).unwrap();
        prop_assert_eq!(levels.level(0), Some(map.z_d()));
        for (n, z) in levels.indexed() {
            if n != 0 {
                let g = map.g(z).unwrap();
                prop_assert!((g - n.unsigned_abs() as f64 * h).abs() <= 1e-10, "n = {}, g = {}", n, g);
            }
        }
        prop_assert!(levels.upper.windows(2).all(|w| w[1] > w[0]));
        prop_assert!(levels.lower.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn discriminant_table_inverts(y in -1.0f64..1.0) {
        let table = free_map().discriminant_table();
        let x = table.invert(y).unwrap();
        let (d, _) = table.eval(x).unwrap();
        prop_assert!((d - y).abs() <= 1e-12);
    }

    #[test]
    fn phase_area_inverse_round_trips(omega in 1e-4f64..(1.0 / 9.0), d in 1e-6f64..1e-3) {
        let table = free_map().phase_table();
        let f = table.eval(omega).unwrap();
        let w = table.inverse(f).unwrap();
        prop_assert!((w - omega).abs() <= 1e-9 * omega.max(1e-2));
        if omega + d <= 1.0 / 9.0 {
            prop_assert!(table.eval(omega + d).unwrap() > f);
        }
    }

    #[test]
    fn symbol_stays_in_unit_interval(x in -10.0f64..10.0, xi in -10.0f64..10.0) {
        let e = symbol_energy(TorusPoint { x, xi });
        prop_assert!((-1e-15..=1.0 + 1e-15).contains(&e));
    }

    #[test]
    fn sawtooth_is_periodic_and_centered(y in -50.0f64..50.0) {
        let s = sawtooth(y);
        prop_assert!((-0.5..0.5).contains(&s));
        prop_assert!((sawtooth(y + 1.0) - s).abs() <= 1e-12);
    }

    #[test]
    fn fermi_potential_is_below_zero_temperature_limit(x in -5.0f64..5.0, beta in 1.0f64..1e4) {
        let finite = fermi_potential(Beta::Finite(beta), x);
        let cold = fermi_potential(Beta::Infinite, x);
        prop_assert!(finite <= cold + 1e-15);
        prop_assert!(cold - finite <= 2f64.ln() / beta + 1e-12);
    }

    #[test]
    fn sturm_count_matches_eigenvalues(diag in prop::collection::vec(-1.0f64..1.0, 2..30), x in -2.0f64..2.0) {
        let off: Vec<f64> = diag.iter().skip(1).map(|d| 0.3 + d.abs()).collect();
        let t = SymTridiagonal { diag, off };
        let ev = t.eigenvalues().unwrap();
        let below = ev.iter().filter(|&&e| e < x).count();
        let near = ev.iter().any(|&e| (e - x).abs() < 1e-9);
        prop_assume!(!near);
        prop_assert_eq!(t.count_below(x), below);
    }
}

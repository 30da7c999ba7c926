use forestseg::perfmodel::{
    efficiency, max_slaves, parallel_fraction, serial_workload, serial_workload_sum, slave_efficiency, speedup,
    ModelInputs,
};
use proptest::prelude::*;

fn inputs(tiles: f64, n: f64, t: f64, p: u32, r: f64) -> ModelInputs {
    ModelInputs { total_points: tiles * n, tile_points: n, tree_points: t, processors: p, coeff_ratio: r }
}

#[test]
fn reference_values() {
    let i = inputs(801.0, 5e6, 1350.0, 192, 150.0);
    // e_s = 150 n / (150 n + 151 sqrt(n t)) with sqrt(5e6 * 1350) = 82158.383
    let b = 82_158.383_625_8_f64;
    let e = 150.0 * 5e6 / (150.0 * 5e6 + 151.0 * b);
    assert!((slave_efficiency(&i).unwrap() - e).abs() < 1e-9);
    assert!((slave_efficiency(&i).unwrap() - 0.9837).abs() < 1e-4);
    // P = (801 - 95) / 801; S = 1 - P + 191 P e
    let frac = 706.0 / 801.0;
    assert!((speedup(&i).unwrap() - (1.0 - frac + 191.0 * frac * e)).abs() < 1e-9);
    assert!((speedup(&i).unwrap() - 165.70).abs() < 0.05);
    assert_eq!(max_slaves(5e6, 1350.0, 150.0).unwrap(), 9_279);
}

#[test]
fn domain_errors() {
    assert!(speedup(&inputs(801.0, 5e6, 1e5, 192, 150.0)).is_err());
    assert!(speedup(&inputs(100.0, 5e6, 1350.0, 100, 150.0)).is_err());
    assert!(speedup(&inputs(801.0, 5e6, 1350.0, 1, 150.0)).is_err());
    assert!(speedup(&inputs(801.0, 5e6, 1350.0, 16, 0.0)).is_err());
    assert!(speedup(&inputs(801.0, 5e6, f64::NAN, 16, 150.0)).is_err());
}

proptest! {
    #[test]
    fn efficiency_in_unit_interval_and_rising_in_n(n in 1e3f64..1e8, t in 1.0f64..1e3, r in 0.1f64..1e4, k in 1.01f64..10.0) {
        let e = efficiency(n, t, r).unwrap();
        prop_assert!(e > 0.0 && e < 1.0);
        prop_assert!(efficiency(n * k, t, r).unwrap() > e);
    }

    #[test]
    fn speedup_bounded_and_rising_in_p(tiles in 300u32..2000, p in 2u32..200, n in 1e5f64..1e7, t in 10.0f64..1e3, r in 1.0f64..1e3) {
        prop_assume!(n >= 100.0 * t && (tiles as f64) > (p + 1) as f64);
        let a = speedup(&inputs(tiles as f64, n, t, p, r)).unwrap();
        let b = speedup(&inputs(tiles as f64, n, t, p + 1, r)).unwrap();
        prop_assert!(a <= (p - 1) as f64 + 1e-9);
        prop_assert!(b > a);
    }

    #[test]
    fn serial_workload_closed_form_matches_sum(p in 2u32..10_000, n in 1.0f64..1e7) {
        let closed = serial_workload(n, p).unwrap();
        let sum = serial_workload_sum(n, p).unwrap();
        prop_assert!((closed - sum).abs() <= 1e-9 * closed.max(1.0));
    }

    #[test]
    fn parallel_fraction_in_unit_interval(tiles in 2u32..5000, p in 2u32..100, n in 1.0f64..1e7) {
        match parallel_fraction(tiles as f64 * n, n, p) {
            Ok(f) => prop_assert!(f > 0.0 && f <= 1.0),
            Err(_) => prop_assert!(((p - 2) as f64) / 2.0 >= tiles as f64),
        }
    }
}

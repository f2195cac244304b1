use proptest::prelude::*;

use rsdp::couple::{coupling_time_bound, reflection_matrix, CouplingBoundParams};
use rsdp::dominate::spectral_eta;
use rsdp::measure::{
    regime_mass_mismatch, wasserstein_rho, wasserstein_rho_brute_force, EmpiricalMeasure, LabeledSample,
};
use rsdp::model::{RateFunction, SaturatingRate};
use rsdp::skorokhod::{sample_drive, symm_diff_measure, IntervalTable};

fn rate_strategy(dim: usize) -> impl Strategy<Value = SaturatingRate> {
    (
        0.0..3.0f64,
        -2.0..2.0f64,
        prop::collection::vec(-2.0..2.0f64, dim),
        prop::option::of(0.5..4.0f64),
    )
        .prop_map(|(a, b, v, cap)| SaturatingRate {
            a,
            b,
            v,
            cap: cap.unwrap_or(f64::INFINITY),
        })
}

fn rates_strategy() -> impl Strategy<Value = (RateFunction, usize)> {
    (2usize..=4, 1usize..=3).prop_flat_map(|(n, dim)| {
        prop::collection::vec(prop::option::of(rate_strategy(dim)), n * (n - 1)).prop_map(move |pairs| {
            let mut entries = Vec::new();
            let mut k = 0;
            for i in 1..=n {
                for j in 1..=n {
                    if i != j {
                        if let Some(r) = pairs[k].clone() {
                            entries.push((i, j, r));
                        }
                        k += 1;
                    }
                }
            }
            (RateFunction::parametric(n, dim, entries).unwrap(), dim)
        })
    })
}

fn point(dim: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-5.0..5.0f64, dim)
}

fn instance() -> impl Strategy<Value = (RateFunction, Vec<f64>, Vec<f64>)> {
    rates_strategy().prop_flat_map(|(rates, dim)| (Just(rates), point(dim), point(dim)))
}

fn measure(m: usize) -> impl Strategy<Value = EmpiricalMeasure> {
    prop::collection::vec((prop::collection::vec(-3.0..3.0f64, 2), 1usize..=3), m)
        .prop_map(|v| EmpiricalMeasure::new(v.into_iter().map(|(x, i)| LabeledSample::new(x, i)).collect()).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn interval_tables_are_consecutive((rates, x, _) in instance()) {
        let table = IntervalTable::build(&rates, &x).unwrap();
        let mut end = 0.0;
        for iv in table.entries() {
            prop_assert_eq!(iv.lo, end);
            prop_assert!((iv.len() - rates.rate(&x, iv.from, iv.to)).abs() < 1e-12);
            end = iv.hi;
        }
        prop_assert!(table.total() <= rates.bounds().m + 1e-9);
    }

    #[test]
    fn symmetric_difference_is_symmetric_and_lipschitz(
        (rates, x, y) in instance(),
        shrink in 0.0..1.0f64,
    ) {
        let n = rates.n_regimes();
        // Pull y towards x so that short distances are exercised too.
        let y: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a + shrink * shrink * (b - a)).collect();
        let k_tilde = 2.0 * (n - 1) as f64 * n as f64 * rates.bounds().c_q + 1.0;
        let d: f64 = x.iter().zip(&y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        for i in 1..=n {
            for j in 1..=n {
                if i == j { continue; }
                let a = symm_diff_measure(&rates, &x, &y, i, j).unwrap();
                prop_assert_eq!(a, symm_diff_measure(&rates, &y, &x, i, j).unwrap());
                prop_assert!(a <= k_tilde * d, "{} > {}", a, k_tilde * d);
            }
        }
    }

    #[test]
    fn eta_shifts_with_constant_weights(q12 in 0.1..5.0f64, q21 in 0.1..5.0f64, l in -3.0..3.0f64, c in -2.0..2.0f64) {
        let q = vec![-q12, q12, q21, -q21];
        let base = spectral_eta(2, &q, &[l, l + 1.0]).unwrap();
        let shifted = spectral_eta(2, &q, &[l + c, l + 1.0 + c]).unwrap();
        prop_assert!((shifted.eta - (base.eta - c)).abs() < 1e-10);
        prop_assert!((base.eta - base.eta_closed_form.unwrap()).abs() < 1e-10);
    }

    #[test]
    fn drives_are_reproducible(t in 0.1..20.0f64, m in 0.0..10.0f64, base in any::<u64>(), index in 0u64..1000) {
        let a = sample_drive(t, m, base, index);
        prop_assert_eq!(&a, &sample_drive(t, m, base, index));
        prop_assert!(a.times.windows(2).all(|w| w[0] < w[1]));
        prop_assert!(a.marks.iter().all(|&z| (0.0..m).contains(&z)));
    }

    #[test]
    fn reflections_are_orthogonal(u in prop::collection::vec(-1.0..1.0f64, 1..5)) {
        let r = u.iter().map(|v| v * v).sum::<f64>().sqrt();
        prop_assume!(r > 1e-3);
        let u: Vec<f64> = u.iter().map(|v| v / r).collect();
        let n = u.len();
        let m = reflection_matrix(&u);
        for a in 0..n {
            for b in 0..n {
                let p: f64 = (0..n).map(|k| m[a * n + k] * m[k * n + b]).sum();
                prop_assert!((p - f64::from(u8::from(a == b))).abs() < 1e-12);
                prop_assert_eq!(m[a * n + b], m[b * n + a]);
            }
        }
    }

    #[test]
    fn transport_is_a_metric(mu in measure(5), nu in measure(5), pi in measure(5)) {
        let d = |a: &EmpiricalMeasure, b: &EmpiricalMeasure| wasserstein_rho(a, b, 100, 0).unwrap();
        prop_assert_eq!(d(&mu, &mu), 0.0);
        prop_assert_eq!(d(&mu, &nu), d(&nu, &mu));
        prop_assert!(d(&mu, &pi) <= d(&mu, &nu) + d(&nu, &pi) + 1e-12);
        prop_assert!(d(&mu, &nu) + 1e-12 >= regime_mass_mismatch(&mu, &nu));
        prop_assert_eq!(d(&mu, &nu), wasserstein_rho_brute_force(&mu, &nu).unwrap());
    }

    #[test]
    fn coupling_bound_is_monotone(c2 in 0.3..2.0f64, c3 in 0.1..2.0f64, beta in -1.0..1.0f64, p in 2.5..5.0f64, r in 0.0..4.0f64, dr in 0.0..2.0f64) {
        let params = CouplingBoundParams::new(c2, c3, beta, p).unwrap();
        let a = coupling_time_bound(&params, r);
        let b = coupling_time_bound(&params, r + dr);
        prop_assert!(a >= 0.0);
        prop_assert!(a <= b + 1e-9);
    }
}

use hres_core::constants::{
    alpha, beta, beta_n, gamma_nk, gamma_term_count, length_element_constant, normalization_ratio, rho, RhoTable,
};
use hres_core::Error;
use proptest::prelude::*;
use serde_json::Value;

fn fixtures() -> Value {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/../../fixtures/rho_fixtures.json");
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn rho_matches_oracle_fixtures() {
    let fx = fixtures();
    for row in fx["rho"].as_array().unwrap() {
        let n = row["n"].as_u64().unwrap() as u32;
        let mu = row["mu"].as_f64().unwrap();
        let expected = row["value"].as_f64().unwrap();
        let got = rho(n, mu).unwrap();
        assert!((got - expected).abs() <= 1e-10, "rho_{n}({mu}) = {got}, oracle {expected}");
        assert!((got - expected).abs() <= 1e-12 * expected, "rho_{n}({mu}) = {got}, oracle {expected}");
    }
}

#[test]
fn rho_domain() {
    assert!(matches!(rho(1, 1.5), Err(Error::Domain(_))));
    assert!(matches!(rho(2, -2.0), Err(Error::Domain(_))));
    assert!(matches!(rho(0, 0.0), Err(Error::Domain(_))));
    assert!(rho(1, 0.999).unwrap().is_finite());
}

#[test]
fn rho_grows_with_the_modulus() {
    for n in 1..=3u32 {
        let grid: Vec<f64> = (0..12).map(|i| i as f64 * (n as f64 - 0.05) / 11.0).collect();
        let values: Vec<f64> = grid.iter().map(|&mu| rho(n, mu).unwrap()).collect();
        assert!(values.iter().all(|&v| v > 0.0));
        assert!(values.windows(2).all(|w| w[1] > w[0]), "n = {n}: {values:?}");
    }
}

#[test]
fn named_sums() {
    let t1 = RhoTable::new(1).unwrap();
    let t2 = RhoTable::new(2).unwrap();
    assert!((gamma_nk(&t1, 0).unwrap() - 0.5).abs() < 1e-12);
    assert!((beta_n(&t1).unwrap() - 0.5).abs() < 1e-12);
    assert!((alpha(&t2, 0, 0, 1).unwrap() - rho(2, 0.0).unwrap()).abs() < 1e-15);
    assert!((length_element_constant(&t1).unwrap().powi(4) - 8.0).abs() < 1e-11);
    assert!(matches!(gamma_nk(&t2, 2), Err(Error::Precondition(_))));
    assert!(matches!(alpha(&t2, 1, 0, 1), Err(Error::Precondition(_))));
    assert!(matches!(beta(&t2, 1, 1, 1), Err(Error::Precondition(_))));
    match beta(&t2, 0, 0, 1) {
        Err(Error::Domain(msg)) => assert!(msg.contains("beta term")),
        other => panic!("expected a domain error, got {other:?}"),
    }
}

#[test]
fn doubling_beta_halves_the_length_power() {
    // c^{2n+2} = (2n+2)/beta_n
    let t1 = RhoTable::new(1).unwrap();
    let b = beta_n(&t1).unwrap();
    let c4 = length_element_constant(&t1).unwrap().powi(4);
    assert!((c4 - 4.0 / b).abs() < 1e-12);
    assert!((4.0 / (2.0 * b) - c4 / 2.0).abs() < 1e-12);
}

#[test]
fn normalization_ratio_is_reproducible() {
    let r1 = normalization_ratio(&RhoTable::new(1).unwrap(), 1.0 / 16.0).unwrap();
    let r2 = normalization_ratio(&RhoTable::new(1).unwrap(), 1.0 / 16.0).unwrap();
    assert_eq!(r1, r2);
    assert!((r1 - 1.0 / 16.0).abs() < 1e-12);
}

proptest! {
    #[test]
    fn rho_is_even(n in 1u32..=4, frac in 0.0..0.98f64) {
        let mu = frac * n as f64;
        let (a, b) = (rho(n, mu).unwrap(), rho(n, -mu).unwrap());
        prop_assert!((a - b).abs() <= 1e-12 * a);
    }

    #[test]
    fn gamma_is_symmetric_in_k(n in 1u32..=4, k in 0u32..=8) {
        prop_assume!(k <= 2 * n && k != n);
        let t = RhoTable::new(n).unwrap();
        let (a, b) = (gamma_nk(&t, k), gamma_nk(&t, 2 * n - k));
        match (a, b) {
            (Ok(a), Ok(b)) => {
                prop_assert_eq!(a, b);
                prop_assert!(a > 0.0);
            }
            (Err(Error::Domain(_)), Err(Error::Domain(_))) => {}
            other => prop_assert!(false, "asymmetric outcome {:?}", other),
        }
        prop_assert_eq!(gamma_term_count(n, k), (0..=n).filter(|&p| k >= p && k - p <= n).count());
    }

    #[test]
    fn beta_is_symmetric(n in 1u32..=4, kappa in 0u32..=4, p in 0u32..=4, q in 0u32..=4) {
        prop_assume!(kappa <= n && p <= n && q <= n);
        let t = RhoTable::new(n).unwrap();
        match (beta(&t, kappa, p, q), beta(&t, kappa, q, p)) {
            (Ok(a), Ok(b)) => {
                prop_assert_eq!(a, b);
                prop_assert!(a > 0.0 && a.is_finite());
            }
            (Err(_), Err(_)) => {}
            other => prop_assert!(false, "asymmetric outcome {:?}", other),
        }
    }

    #[test]
    fn alpha_factors_through_the_binomial(n in 1u32..=4, kappa in 0u32..=4, q in 0u32..=4) {
        prop_assume!(kappa <= n && q <= n && q != kappa && q + kappa != n);
        let t = RhoTable::new(n).unwrap();
        let base = alpha(&t, kappa, 0, q);
        for p in 1..=n {
            let binom: f64 = (0..p).map(|i| (n - i) as f64 / (i + 1) as f64).product();
            match (&base, alpha(&t, kappa, p, q)) {
                (Ok(a0), Ok(a)) => prop_assert!((a / binom - a0).abs() <= 1e-14 * a0.abs()),
                (Err(_), Err(_)) => {}
                other => prop_assert!(false, "inconsistent outcome {:?}", other),
            }
        }
    }
}

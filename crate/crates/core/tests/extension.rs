use hres_core::aniso::{GradedSpace, MultiIndex};
use hres_core::homog::{build_extension, c_alpha, scaling_defect, Bump, GaussianTest, HomogeneousSymbol, Regime, TestFunction};
use hres_core::quadrature::{integrate, Tolerance};
use hres_core::Error;
use num_complex::Complex64;
use proptest::prelude::*;

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

fn space() -> GradedSpace {
    GradedSpace::new(2).unwrap()
}

fn gaussian(widths: [f64; 3], centers: [f64; 3]) -> TestFunction {
    let g = GaussianTest {
        amplitude: c(1.0),
        widths: widths.iter().map(|&w| c(w)).collect(),
        centers: centers.iter().map(|&b| c(b)).collect(),
    };
    g.to_test_function(&space()).unwrap()
}

fn panel() -> Vec<TestFunction> {
    vec![
        gaussian([1.0, 1.0, 1.0], [0.0, 0.0, 0.0]),
        gaussian([0.5, 2.0, 1.0], [0.3, 0.0, 0.0]),
        gaussian([1.5, 0.7, 0.9], [0.0, -0.4, 0.2]),
        gaussian([0.8, 1.2, 2.5], [-0.2, 0.1, 0.3]),
        gaussian([2.0, 0.6, 0.6], [0.1, 0.2, -0.1]),
    ]
}

#[test]
fn pairing_does_not_depend_on_the_bump() {
    let p = HomogeneousSymbol::koranyi_power(space(), c(-4.5)).unwrap();
    let t1 = build_extension(&p, None, &Bump::default()).unwrap();
    let t2 = build_extension(&p, None, &Bump::new(0.4, 0.6, 1.7).unwrap()).unwrap();
    for u in panel() {
        let (a, b) = (t1.pair(&u).unwrap().value, t2.pair(&u).unwrap().value);
        assert!((a - b).norm() <= 1e-7 * a.norm(), "{a} vs {b}");
    }
}

#[test]
fn cutoff_moments_vanish() {
    for m in [-4.5, -5.0, -5.2, -5.5, -6.0] {
        let p = HomogeneousSymbol::gauss_tapered(space(), c(m)).unwrap();
        let tau = build_extension(&p, None, &Bump::default()).unwrap();
        let cut = tau.cutoff().unwrap();
        assert!((cut.moment(c(0.0)).unwrap() - 1.0).norm() < 1e-9);
        for &a in cut.exponents() {
            assert!(cut.moment(a).unwrap().norm() < 1e-9, "m = {m}, a = {a}");
        }
    }
}

#[test]
fn high_order_cutoff_moments_vanish_to_roundoff() {
    // with five or more moment conditions int |e^{at} h'| reaches 1e5..1e8
    for (m, bump) in [(-6.3, Bump::default()), (-7.5, Bump::default()), (-6.3, Bump::new(0.0, 1.5, 1.0).unwrap())] {
        let p = HomogeneousSymbol::koranyi_power(space(), c(m)).unwrap();
        let tau = build_extension(&p, None, &bump).unwrap();
        let cut = tau.cutoff().unwrap();
        let (lo, hi) = bump.support();
        for &a in cut.exponents() {
            let l1 = integrate(|t: f64| (a * t).exp().norm() * cut.h_prime(t).norm(), lo, hi, &[], Tolerance::new(0.0, 1e-8))
                .unwrap()
                .value;
            let v = cut.moment(a).unwrap().norm();
            assert!(v < 1e-11 * l1, "m = {m}, a = {a}: {v} against scale {l1}");
        }
    }
}

#[test]
fn log_law_slope_and_intercept() {
    let p = HomogeneousSymbol::gauss_tapered(space(), c(-4.0)).unwrap();
    let tau = build_extension(&p, None, &Bump::default()).unwrap();
    assert_eq!(tau.regime(), Regime::LogHomogeneous);
    let u = gaussian([0.5, 2.0, 1.0], [0.3, 0.0, 0.0]);
    let c0 = c_alpha(&p, &MultiIndex::zero(&space())).unwrap().value;
    let expected = c0 * u.derivative_at_origin(&MultiIndex::zero(&space()));
    let lambdas = [0.5, 1.0, 2.0, 4.0, 8.0];
    let pts: Vec<(f64, Complex64)> = lambdas
        .iter()
        .map(|&l| {
            let r = scaling_defect(&tau, &u, l).unwrap();
            (f64::ln(l), r.measured / f64::powf(l, -4.0))
        })
        .collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<Complex64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let slope = pts.iter().map(|p| (p.1 - my) * (p.0 - mx)).sum::<Complex64>() / sxx;
    let intercept = my - slope * mx;
    assert!((slope - expected).norm() <= 1e-5 * expected.norm(), "{slope} vs {expected}");
    assert!(intercept.norm() <= 1e-7, "{intercept}");
}

#[test]
fn odd_symbols_have_no_log_term() {
    let p = HomogeneousSymbol::odd(space(), c(-4.0), 1).unwrap();
    let tau = build_extension(&p, None, &Bump::default()).unwrap();
    let u = gaussian([1.0, 0.5, 1.0], [0.0, 0.35, 0.0]);
    let base = tau.pair(&u).unwrap().value;
    for l in [0.5, 3.0] {
        let r = scaling_defect(&tau, &u, l).unwrap();
        assert!(r.predicted.norm() < 1e-12);
        assert!(r.measured.norm() <= 1e-7 * (1.0 + base.norm()), "lambda {l}: {}", r.measured);
    }
}

#[test]
fn excluded_orders() {
    let p = HomogeneousSymbol::koranyi_power(space(), c(-2.0)).unwrap();
    let tau = build_extension(&p, None, &Bump::default()).unwrap();
    assert_eq!(tau.regime(), Regime::Integrable);
    assert!(matches!(scaling_defect(&tau, &gaussian([1.0; 3], [0.0; 3]), 2.0), Err(Error::Precondition(_))));
    assert!(HomogeneousSymbol::parse(space(), "koranyi-power:abc").is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn homogeneous_regime_scales_exactly(lambda in 0.25..4.0f64, m in -7.5..-4.2f64) {
        prop_assume!((m - m.round()).abs() > 0.05);
        let p = HomogeneousSymbol::gauss_tapered(space(), c(m)).unwrap();
        let tau = build_extension(&p, None, &Bump::default()).unwrap();
        let u = gaussian([0.8, 1.2, 2.5], [-0.2, 0.1, 0.3]);
        let base = tau.pair(&u).unwrap().value;
        let scaled = tau.pair_scaled(&u, lambda).unwrap().value;
        let diff = (scaled - base * lambda.powf(m)).norm();
        prop_assert!(diff <= 1e-6 * (1.0 + base.norm()), "lambda {lambda}, m {m}: {diff}");
    }
}

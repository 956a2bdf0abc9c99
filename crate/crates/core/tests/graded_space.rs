use hres_core::aniso::{polar_integral, sphere_integral, sphere_measure_closed_form, GradedSpace, MultiIndex, SphereRule};
use hres_core::quadrature::Tolerance;
use proptest::prelude::*;

fn space(d: usize) -> GradedSpace {
    GradedSpace::new(d).unwrap()
}

fn point(d: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-3.0..3.0f64, d + 1).prop_filter("non-zero", |v| v.iter().any(|x| x.abs() > 1e-3))
}

proptest! {
    #[test]
    fn dilations_form_a_group(d in 1usize..4, xi in point(3), s in 0.05..20.0f64, t in 0.05..20.0f64) {
        let sp = space(d);
        let xi = &xi[..=d];
        let lhs = sp.dilate(s, &sp.dilate(t, xi).unwrap()).unwrap();
        let rhs = sp.dilate(s * t, xi).unwrap();
        for (a, b) in lhs.iter().zip(&rhs) {
            prop_assert!((a - b).abs() <= 1e-13 * (1.0 + b.abs()));
        }
    }

    #[test]
    fn norm_is_homogeneous(d in 1usize..4, xi in point(3), t in 1e-3..1e3f64) {
        let sp = space(d);
        let xi = &xi[..=d];
        let n = sp.pseudo_norm(xi).unwrap();
        let nt = sp.pseudo_norm(&sp.dilate(t, xi).unwrap()).unwrap();
        prop_assert!((nt - t * n).abs() <= 1e-13 * t * n);
    }

    #[test]
    fn projection_lands_on_the_unit_sphere(d in 1usize..4, xi in point(3)) {
        let sp = space(d);
        let p = sp.project(&xi[..=d]).unwrap();
        prop_assert!((sp.pseudo_norm(p.coords()).unwrap() - 1.0).abs() < 1e-13);
    }
}

#[test]
fn measure_matches_closed_form_in_several_dimensions() {
    for d in 1..=4 {
        let sp = space(d);
        let rule = SphereRule::new(&sp, 64, 64).unwrap();
        let s = rule.integrate(|_| 1.0);
        let exact = sphere_measure_closed_form(&sp);
        assert!((s - exact).abs() < 1e-11 * exact, "d = {d}: {s} vs {exact}");
    }
    assert!((sphere_measure_closed_form(&space(2)) - 23.298989541667428).abs() < 1e-13);
}

#[test]
fn polar_integral_of_homogeneous_functions() {
    // h(r.w) = r^a on [1, L]: S * int_1^L r^{a+Q-1} dr
    let sp = space(2);
    let s = sphere_measure_closed_form(&sp);
    let q = sp.homogeneous_dimension() as f64;
    let lam: f64 = 3.5;
    let tol = Tolerance::new(1e-13, 1e-11);
    let flat = polar_integral(&sp, |_| 1.0, 1.0, lam, tol).unwrap();
    assert!((flat.value - s * (lam.powf(q) - 1.0) / q).abs() < 1e-9 * flat.value);
    let critical = polar_integral(&sp, |xi| sp.pseudo_norm(xi).unwrap().powf(-q), 1.0, lam, tol).unwrap();
    assert!((critical.value - s * lam.ln()).abs() < 1e-9 * critical.value);
}

#[test]
fn odd_integrands_integrate_to_zero() {
    let sp = space(2);
    let tol = Tolerance::new(1e-13, 1e-11);
    for j in 0..3 {
        let v = sphere_integral(&sp, |p| p.coords()[j] * (1.0 + p.coords()[(j + 1) % 3].powi(2)), tol).unwrap();
        assert!(v.value.abs() < 1e-11, "axis {j}: {}", v.value);
    }
}

#[test]
fn bracket_and_enumeration() {
    let sp = space(2);
    assert_eq!(MultiIndex::new(vec![1, 2, 0]).bracket(), 4);
    for b in 0..6 {
        for alpha in MultiIndex::with_bracket(&sp, b) {
            assert_eq!(alpha.bracket(), b);
        }
    }
    // <alpha> = 2: (1,0,0), (0,2,0), (0,1,1), (0,0,2)
    assert_eq!(MultiIndex::with_bracket(&sp, 2).len(), 4);
}

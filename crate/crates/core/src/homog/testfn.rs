use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;

use crate::aniso::{GradedSpace, MultiIndex};
use crate::error::{Error, Result};

pub type ValueFn = Arc<dyn Fn(&[f64]) -> Complex64 + Send + Sync>;
pub type DerivativeFn = Arc<dyn Fn(&MultiIndex) -> Complex64 + Send + Sync>;

/// A Schwartz function with its derivatives at the origin and, optionally, a
/// closed-form inverse Fourier transform.
#[derive(Clone)]
pub struct TestFunction {
    space: GradedSpace,
    value: ValueFn,
    derivative: DerivativeFn,
    inverse_fourier: Option<Arc<TestFunction>>,
}

impl fmt::Debug for TestFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TestFunction")
            .field("d", &self.space.d())
            .field("has_inverse_fourier", &self.inverse_fourier.is_some())
            .finish()
    }
}

/// Largest weighted order whose supplied derivatives are checked.
pub const CHECKED_BRACKET: u32 = 4;
const CHECK_TOLERANCE: f64 = 1e-6;

impl TestFunction {
    /// Builds a test function after checking the supplied derivatives of
    /// weighted order up to 4 against extrapolated finite differences.
    pub fn new(
        space: GradedSpace,
        value: ValueFn,
        derivative: DerivativeFn,
        inverse_fourier: Option<TestFunction>,
    ) -> Result<Self> {
        validate_derivatives(&space, &*value, &*derivative)?;
        if let Some(v) = &inverse_fourier {
            if v.space != space {
                return Err(Error::Precondition("inverse Fourier transform lives on another space".into()));
            }
        }
        Ok(TestFunction { space, value, derivative, inverse_fourier: inverse_fourier.map(Arc::new) })
    }

    pub(crate) fn trusted(space: GradedSpace, value: ValueFn, derivative: DerivativeFn) -> Self {
        TestFunction { space, value, derivative, inverse_fourier: None }
    }

    pub fn space(&self) -> &GradedSpace {
        &self.space
    }

    pub fn value(&self, xi: &[f64]) -> Complex64 {
        (self.value)(xi)
    }

    pub fn derivative_at_origin(&self, alpha: &MultiIndex) -> Complex64 {
        (self.derivative)(alpha)
    }

    pub fn inverse_fourier(&self) -> Option<&TestFunction> {
        self.inverse_fourier.as_deref()
    }

    /// xi -> u(t.xi).
    pub fn compose_dilation(&self, t: f64) -> Result<TestFunction> {
        if !(t > 0.0) {
            return Err(Error::Domain(format!("dilation parameter must be positive, got {t}")));
        }
        let space = self.space;
        let value = self.value.clone();
        let derivative = self.derivative.clone();
        Ok(TestFunction {
            space,
            value: Arc::new(move |xi: &[f64]| value(&space.dilate_unchecked(t, xi))),
            derivative: Arc::new(move |alpha: &MultiIndex| derivative(alpha) * t.powi(alpha.bracket() as i32)),
            inverse_fourier: None,
        })
    }

    pub fn linear_combination(&self, a: Complex64, other: &TestFunction, b: Complex64) -> Result<TestFunction> {
        if self.space != other.space {
            return Err(Error::Precondition("test functions live on different spaces".into()));
        }
        let (v1, v2) = (self.value.clone(), other.value.clone());
        let (d1, d2) = (self.derivative.clone(), other.derivative.clone());
        let inverse = match (&self.inverse_fourier, &other.inverse_fourier) {
            (Some(f1), Some(f2)) => Some(Arc::new(f1.linear_combination(a, f2, b)?)),
            _ => None,
        };
        Ok(TestFunction {
            space: self.space,
            value: Arc::new(move |xi: &[f64]| a * v1(xi) + b * v2(xi)),
            derivative: Arc::new(move |alpha: &MultiIndex| a * d1(alpha) + b * d2(alpha)),
            inverse_fourier: inverse,
        })
    }
}

/// amplitude * prod_i exp(-a_i (xi_i - b_i)^2) with a_i > 0 and complex centers.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianTest {
    pub amplitude: Complex64,
    pub widths: Vec<Complex64>,
    pub centers: Vec<Complex64>,
}

impl GaussianTest {
    pub fn centered(space: &GradedSpace) -> Self {
        GaussianTest {
            amplitude: Complex64::new(1.0, 0.0),
            widths: vec![Complex64::new(1.0, 0.0); space.dim()],
            centers: vec![Complex64::new(0.0, 0.0); space.dim()],
        }
    }

    fn check(&self, space: &GradedSpace) -> Result<()> {
        if self.widths.len() != space.dim() || self.centers.len() != space.dim() {
            return Err(Error::Domain(format!("gaussian needs {} widths and centers", space.dim())));
        }
        if self.widths.iter().any(|a| !(a.re > 0.0)) {
            return Err(Error::Domain("gaussian widths need positive real part".into()));
        }
        Ok(())
    }

    /// Inverse Fourier transform (2 pi)^{-(d+1)} int e^{i x.y} u(x) dx, again a
    /// product Gaussian with widths 1/(4a) and centers 2iab.
    pub fn inverse_fourier(&self) -> GaussianTest {
        let mut amplitude = self.amplitude;
        let mut widths = Vec::new();
        let mut centers = Vec::new();
        for (&a, &b) in self.widths.iter().zip(&self.centers) {
            amplitude *= (4.0 * std::f64::consts::PI * a).sqrt().inv() * (-a * b * b).exp();
            widths.push((4.0 * a).inv());
            centers.push(Complex64::new(0.0, 2.0) * a * b);
        }
        GaussianTest { amplitude, widths, centers }
    }

    pub fn value(&self, xi: &[f64]) -> Complex64 {
        let mut v = self.amplitude;
        for ((&a, &b), &x) in self.widths.iter().zip(&self.centers).zip(xi) {
            let s = x - b;
            v *= (-a * s * s).exp();
        }
        v
    }

    pub fn derivative_at_origin(&self, alpha: &MultiIndex) -> Complex64 {
        let mut v = self.amplitude;
        for ((&a, &b), &n) in self.widths.iter().zip(&self.centers).zip(alpha.entries()) {
            let root = a.sqrt();
            let h = hermite(n as usize, -root * b);
            v *= (-root).powu(n) * h * (-a * b * b).exp();
        }
        v
    }

    pub fn to_test_function(&self, space: &GradedSpace) -> Result<TestFunction> {
        self.check(space)?;
        let inverse = self.inverse_fourier();
        let mk = |g: GaussianTest| {
            let g1 = g.clone();
            TestFunction::trusted(
                *space,
                Arc::new(move |xi: &[f64]| g.value(xi)),
                Arc::new(move |alpha: &MultiIndex| g1.derivative_at_origin(alpha)),
            )
        };
        let mut u = mk(self.clone());
        u.inverse_fourier = Some(Arc::new(mk(inverse)));
        Ok(u)
    }
}

/// Physicists' Hermite polynomial H_n(z).
fn hermite(n: usize, z: Complex64) -> Complex64 {
    let mut h0 = Complex64::new(1.0, 0.0);
    if n == 0 {
        return h0;
    }
    let mut h1 = 2.0 * z;
    for k in 1..n {
        let h2 = 2.0 * z * h1 - 2.0 * k as f64 * h0;
        h0 = h1;
        h1 = h2;
    }
    h1
}

fn binomial(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Mixed central difference of order alpha at the origin with step h.
fn central_difference(space: &GradedSpace, value: &dyn Fn(&[f64]) -> Complex64, alpha: &MultiIndex, h: f64) -> Complex64 {
    let orders = alpha.entries();
    let mut idx = vec![0u32; orders.len()];
    let mut total = Complex64::new(0.0, 0.0);
    let mut point = vec![0.0; space.dim()];
    loop {
        let mut coef = 1.0;
        for (i, (&n, &k)) in orders.iter().zip(&idx).enumerate() {
            point[i] = (0.5 * n as f64 - k as f64) * h;
            coef *= binomial(n, k) * if k % 2 == 0 { 1.0 } else { -1.0 };
        }
        total += value(&point) * coef;
        let mut i = 0;
        loop {
            if i == orders.len() {
                return total / h.powi(alpha.order() as i32);
            }
            idx[i] += 1;
            if idx[i] <= orders[i] {
                break;
            }
            idx[i] = 0;
            i += 1;
        }
    }
}

/// Ridders-style polynomial extrapolation of central differences to h = 0.
fn extrapolated_difference(space: &GradedSpace, value: &dyn Fn(&[f64]) -> Complex64, alpha: &MultiIndex) -> (Complex64, f64) {
    const CON: f64 = 1.4;
    const NTAB: usize = 12;
    let con2 = CON * CON;
    let mut h = 0.4;
    let mut table = vec![vec![Complex64::new(0.0, 0.0); NTAB]; NTAB];
    table[0][0] = central_difference(space, value, alpha, h);
    let mut best = table[0][0];
    let mut err = f64::INFINITY;
    for i in 1..NTAB {
        h /= CON;
        table[0][i] = central_difference(space, value, alpha, h);
        let mut fac = con2;
        for j in 1..=i {
            table[j][i] = (table[j - 1][i] * fac - table[j - 1][i - 1]) / (fac - 1.0);
            fac *= con2;
            let errt = (table[j][i] - table[j - 1][i])
                .norm()
                .max((table[j][i] - table[j - 1][i - 1]).norm());
            if errt <= err {
                err = errt;
                best = table[j][i];
            }
        }
    }
    (best, err)
}

pub fn validate_derivatives(
    space: &GradedSpace,
    value: &dyn Fn(&[f64]) -> Complex64,
    derivative: &dyn Fn(&MultiIndex) -> Complex64,
) -> Result<()> {
    let indices = MultiIndex::up_to_bracket(space, CHECKED_BRACKET);
    let supplied: Vec<Complex64> = indices.iter().map(derivative).collect();
    let scale = supplied.iter().map(|z| z.norm()).fold(0.0, f64::max);
    for (alpha, s) in indices.iter().zip(&supplied) {
        let (fd, _) = extrapolated_difference(space, value, alpha);
        let gap = (fd - s).norm();
        let tolerance = CHECK_TOLERANCE * scale.max(f64::MIN_POSITIVE);
        if !(gap <= tolerance) {
            return Err(Error::Precondition(format!(
                "supplied derivative {:?} = {s} disagrees with finite differences {fd} (gap {gap:.3e})",
                alpha.entries()
            )));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> GaussianTest {
        GaussianTest {
            amplitude: Complex64::new(0.7, -0.2),
            widths: vec![Complex64::new(0.8, 0.0), Complex64::new(1.3, 0.0), Complex64::new(0.6, 0.0)],
            centers: vec![Complex64::new(0.3, 0.1), Complex64::new(-0.4, 0.0), Complex64::new(0.2, -0.3)],
        }
    }

    #[test]
    fn gaussian_derivatives_pass_validation() {
        let s = GradedSpace::new(2).unwrap();
        let g = sample();
        validate_derivatives(&s, &|x| g.value(x), &|a| g.derivative_at_origin(a)).unwrap();
        let v = g.inverse_fourier();
        validate_derivatives(&s, &|x| v.value(x), &|a| v.derivative_at_origin(a)).unwrap();
    }

    #[test]
    fn wrong_derivative_is_rejected() {
        let s = GradedSpace::new(2).unwrap();
        let g = sample();
        let bad = move |a: &MultiIndex| {
            let v = g.derivative_at_origin(a);
            if a.entries() == [0, 1, 1] { v * 1.01 } else { v }
        };
        let value: ValueFn = Arc::new(move |x: &[f64]| sample().value(x));
        let err = TestFunction::new(s, value, Arc::new(bad), None);
        assert!(matches!(err, Err(Error::Precondition(_))));
    }

    #[test]
    fn inverse_fourier_matches_quadrature_in_one_variable() {
        // (2 pi)^{-1} int e^{i x y} e^{-a (x - b)^2} dx on a grid
        let a = Complex64::new(0.9, 0.0);
        let b = Complex64::new(0.4, 0.2);
        let g = GaussianTest { amplitude: Complex64::new(1.0, 0.0), widths: vec![a], centers: vec![b] };
        let v = g.inverse_fourier();
        let y = 0.7;
        let n = 4000;
        let (lo, hi) = (-12.0, 12.0);
        let dx = (hi - lo) / n as f64;
        let mut sum = Complex64::new(0.0, 0.0);
        for i in 0..=n {
            let x = lo + i as f64 * dx;
            let w = if i == 0 || i == n { 0.5 } else { 1.0 };
            sum += Complex64::new(0.0, x * y).exp() * g.value(&[x]) * w * dx;
        }
        sum /= 2.0 * std::f64::consts::PI;
        assert!((sum - v.value(&[y])).norm() < 1e-12);
    }
}

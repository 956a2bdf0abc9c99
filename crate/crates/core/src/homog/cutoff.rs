use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::quadrature::{integrate, Tolerance};

const MAX_ORDER: usize = 16;

/// Normalized smooth bump g(t) = C exp(-s / (1 - x^2)), x = (t - c) / w,
/// supported in (c - w, c + w) with unit integral.
#[derive(Debug, Clone)]
pub struct Bump {
    center: f64,
    half_width: f64,
    sharpness: f64,
    norm: f64,
    // g^{(n)} = C e^f N_n(x) / (1 - x^2)^{2n} / w^n
    polys: Vec<Vec<f64>>,
}

impl Default for Bump {
    fn default() -> Self {
        Bump::new(0.0, 1.0, 1.0).expect("default bump parameters are valid")
    }
}

impl Bump {
    pub fn new(center: f64, half_width: f64, sharpness: f64) -> Result<Self> {
        if !center.is_finite() || !(half_width > 0.0) || !(sharpness > 0.0) || !half_width.is_finite() {
            return Err(Error::Config(format!(
                "bump needs finite center, positive width and sharpness; got ({center}, {half_width}, {sharpness})"
            )));
        }
        let raw = integrate(
            |x: f64| (-sharpness / (1.0 - x * x)).exp(),
            -1.0,
            1.0,
            &[0.0],
            Tolerance::new(0.0, 1e-15),
        )?;
        let mut polys = vec![vec![1.0]];
        for n in 0..MAX_ORDER {
            polys.push(next_poly(&polys[n], n, sharpness));
        }
        Ok(Bump { center, half_width, sharpness, norm: 1.0 / (half_width * raw.value), polys })
    }

    pub fn center(&self) -> f64 {
        self.center
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn sharpness(&self) -> f64 {
        self.sharpness
    }

    pub fn support(&self) -> (f64, f64) {
        (self.center - self.half_width, self.center + self.half_width)
    }

    pub fn value(&self, t: f64) -> f64 {
        self.derivative(t, 0)
    }

    /// n-th derivative, n <= 16.
    pub fn derivative(&self, t: f64, n: usize) -> f64 {
        assert!(n <= MAX_ORDER, "bump derivatives are tabulated up to order {MAX_ORDER}");
        let x = (t - self.center) / self.half_width;
        if x.abs() >= 1.0 {
            return 0.0;
        }
        let one_minus = 1.0 - x * x;
        let log_mag = -self.sharpness / one_minus - 2.0 * n as f64 * one_minus.ln();
        let e = log_mag.exp();
        if e == 0.0 {
            return 0.0;
        }
        self.norm * e * horner(&self.polys[n], x) / self.half_width.powi(n as i32)
    }

    /// int_t^inf g.
    pub fn tail(&self, t: f64) -> f64 {
        let x = (t - self.center) / self.half_width;
        if x <= -1.0 {
            return 1.0;
        }
        if x >= 1.0 {
            return 0.0;
        }
        let s = self.sharpness;
        let integrand = |y: f64| (-s / (1.0 - y * y)).exp();
        let tol = Tolerance::new(1e-17, 1e-15);
        let scale = self.norm * self.half_width;
        if x > 0.0 {
            let part = integrate(integrand, x, 1.0, &[], tol).map(|e| e.value).unwrap_or(f64::NAN);
            scale * part
        } else {
            let part = integrate(integrand, -1.0, x, &[], tol).map(|e| e.value).unwrap_or(f64::NAN);
            1.0 - scale * part
        }
    }
}

fn horner(p: &[f64], x: f64) -> f64 {
    p.iter().rev().fold(0.0, |acc, &c| acc * x + c)
}

fn poly_mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

fn poly_add(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len().max(b.len())];
    for (i, &x) in a.iter().enumerate() {
        out[i] += x;
    }
    for (i, &y) in b.iter().enumerate() {
        out[i] += y;
    }
    out
}

// N_{n+1} = N_n' (1-x^2)^2 + 4 n x (1-x^2) N_n - 2 s x N_n
fn next_poly(p: &[f64], n: usize, s: f64) -> Vec<f64> {
    let deriv: Vec<f64> = if p.len() > 1 {
        p.iter().enumerate().skip(1).map(|(i, &c)| i as f64 * c).collect()
    } else {
        vec![0.0]
    };
    let t1 = poly_mul(&deriv, &[1.0, 0.0, -2.0, 0.0, 1.0]);
    let t2 = poly_mul(p, &[0.0, 4.0 * n as f64, 0.0, -4.0 * n as f64]);
    let t3 = poly_mul(p, &[0.0, -2.0 * s]);
    poly_add(&poly_add(&t1, &t2), &t3)
}

/// Elementary symmetric polynomials e_0..e_n of the given values.
pub(crate) fn elementary_symmetric(values: &[Complex64]) -> Vec<Complex64> {
    let mut e = vec![Complex64::new(0.0, 0.0); values.len() + 1];
    e[0] = Complex64::new(1.0, 0.0);
    for (i, &v) in values.iter().enumerate() {
        for j in (1..=i + 1).rev() {
            e[j] = e[j] + e[j - 1] * v;
        }
    }
    e
}

/// Radial cutoff psi(mu) = int_{log mu}^inf h'(t) dt with
/// h' = prod_a (1 + a^{-1} d/dt) g, so that int e^{a t} h' dt = 0 for every
/// listed exponent a and int h' = 1.
#[derive(Debug, Clone)]
pub struct CutoffProfile {
    bump: Bump,
    exponents: Vec<Complex64>,
    coeffs: Vec<Complex64>,
}

impl CutoffProfile {
    pub fn new(bump: Bump, exponents: Vec<Complex64>) -> Result<Self> {
        if exponents.len() >= MAX_ORDER {
            return Err(Error::Domain(format!(
                "cutoff supports at most {} moment conditions, got {}",
                MAX_ORDER - 1,
                exponents.len()
            )));
        }
        if exponents.iter().any(|a| a.norm() < 1e-12) {
            return Err(Error::Domain("cutoff exponents must be non-zero".into()));
        }
        let inverses: Vec<Complex64> = exponents.iter().map(|a| a.inv()).collect();
        let coeffs = elementary_symmetric(&inverses);
        Ok(CutoffProfile { bump, exponents, coeffs })
    }

    pub fn bump(&self) -> &Bump {
        &self.bump
    }

    pub fn exponents(&self) -> &[Complex64] {
        &self.exponents
    }

    /// psi is identically 1 on (0, flat_below].
    pub fn flat_below(&self) -> f64 {
        self.bump.support().0.exp()
    }

    /// psi vanishes on [vanishes_above, inf).
    pub fn vanishes_above(&self) -> f64 {
        self.bump.support().1.exp()
    }

    pub fn h_prime(&self, t: f64) -> Complex64 {
        self.coeffs
            .iter()
            .enumerate()
            .map(|(j, &e)| e * self.bump.derivative(t, j))
            .sum()
    }

    /// psi at log-radius t.
    pub fn psi_log(&self, t: f64) -> Complex64 {
        let (lo, hi) = self.bump.support();
        if t <= lo {
            return Complex64::new(1.0, 0.0);
        }
        if t >= hi {
            return Complex64::new(0.0, 0.0);
        }
        let mut v = Complex64::new(self.bump.tail(t), 0.0);
        for (j, &e) in self.coeffs.iter().enumerate().skip(1) {
            v -= e * self.bump.derivative(t, j - 1);
        }
        v
    }

    pub fn psi(&self, mu: f64) -> Result<Complex64> {
        if !(mu > 0.0) {
            return Err(Error::Domain(format!("cutoff is defined for mu > 0, got {mu}")));
        }
        Ok(self.psi_log(mu.ln()))
    }

    /// int e^{a t} h'(t) dt.
    pub fn moment(&self, a: Complex64) -> Result<Complex64> {
        let (lo, hi) = self.bump.support();
        let est = integrate(
            |t: f64| (a * t).exp() * self.h_prime(t),
            lo,
            hi,
            &[self.bump.center()],
            Tolerance::new(1e-15, 1e-13),
        )?;
        Ok(est.value)
    }
}

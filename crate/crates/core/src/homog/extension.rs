use num_complex::Complex64;
use serde::Serialize;

use super::cutoff::{Bump, CutoffProfile};
use super::symbol::HomogeneousSymbol;
use super::testfn::TestFunction;
use crate::aniso::{sphere_integral, MultiIndex, SphereRule};
use crate::error::{Error, Result};
use crate::quadrature::{gauss_legendre, integrate, integrate_to_infinity, Estimate, Tolerance};

const ROUNDOFF_FACTOR: f64 = 100.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    /// Re m > -Q: p is locally integrable.
    Integrable,
    /// Re m <= -Q and m is not an integer.
    Homogeneous,
    /// m is an integer <= -Q.
    LogHomogeneous,
}

/// The distribution extending p across the origin, obtained by subtracting
/// the Taylor polynomial of weighted order k times a moment-adapted cutoff.
#[derive(Debug, Clone)]
pub struct ExtendedDistribution {
    symbol: HomogeneousSymbol,
    regime: Regime,
    k: i64,
    cutoff: Option<CutoffProfile>,
}

const INTEGER_SLACK: f64 = 1e-12;

pub fn classify(m: Complex64, q: usize) -> Regime {
    let a = m.re + q as f64;
    if a > 0.0 {
        Regime::Integrable
    } else if m.im.abs() < INTEGER_SLACK && (m.re - m.re.round()).abs() < INTEGER_SLACK {
        Regime::LogHomogeneous
    } else {
        Regime::Homogeneous
    }
}

/// Smallest admissible subtraction order is ceil(-(Re m + Q)); the default
/// goes one step further.
pub fn default_order(m: Complex64, q: usize) -> i64 {
    match classify(m, q) {
        Regime::Integrable => -1,
        Regime::LogHomogeneous => -(m.re.round() as i64 + q as i64),
        Regime::Homogeneous => (-(m.re + q as f64)).ceil() as i64 + 1,
    }
}

pub fn build_extension(p: &HomogeneousSymbol, k: Option<i64>, bump: &Bump) -> Result<ExtendedDistribution> {
    let q = p.space().homogeneous_dimension();
    let m = p.degree();
    let regime = classify(m, q);
    let k = match (regime, k) {
        (Regime::Integrable, None) => -1,
        (Regime::Integrable, Some(k)) => {
            if k != -1 {
                return Err(Error::Domain(format!(
                    "degree {m} is locally integrable; no Taylor subtraction (k = -1) applies, got k = {k}"
                )));
            }
            -1
        }
        (Regime::LogHomogeneous, k) => {
            let exact = default_order(m, q);
            match k {
                Some(k) if k != exact => {
                    return Err(Error::Domain(format!("integer degree {m} requires k = {exact}, got {k}")));
                }
                _ => exact,
            }
        }
        (Regime::Homogeneous, k) => {
            let k = k.unwrap_or_else(|| default_order(m, q));
            if (k as f64) < -(m.re + q as f64) {
                return Err(Error::Domain(format!(
                    "k = {k} is below the subtraction order -(Re m + Q) = {}",
                    -(m.re + q as f64)
                )));
            }
            k
        }
    };
    let cutoff = if regime == Regime::Integrable {
        None
    } else {
        let base = m + q as f64;
        let exponents: Vec<Complex64> = (0..=k)
            .map(|i| base + i as f64)
            .filter(|a| !(regime == Regime::LogHomogeneous && a.norm() < 0.5))
            .collect();
        Some(CutoffProfile::new(bump.clone(), exponents)?)
    };
    Ok(ExtendedDistribution { symbol: p.clone(), regime, k, cutoff })
}

#[derive(Debug, Clone, Copy)]
pub struct PairingOptions {
    pub n_polar: usize,
    pub n_azimuth: usize,
    pub tolerance: Tolerance,
    /// Taylor orders beyond k used on the innermost ball.
    pub taylor_extra: u32,
    pub inner_radius: f64,
}

impl Default for PairingOptions {
    fn default() -> Self {
        PairingOptions {
            n_polar: 64,
            n_azimuth: 64,
            tolerance: Tolerance::new(1e-15, 1e-12),
            taylor_extra: 14,
            inner_radius: 0.05,
        }
    }
}

impl ExtendedDistribution {
    pub fn symbol(&self) -> &HomogeneousSymbol {
        &self.symbol
    }

    pub fn regime(&self) -> Regime {
        self.regime
    }

    pub fn k(&self) -> i64 {
        self.k
    }

    pub fn cutoff(&self) -> Option<&CutoffProfile> {
        self.cutoff.as_ref()
    }

    /// <tau, u> = int [u - psi(|xi|) sum_{<alpha> <= k} xi^alpha/alpha! u^(alpha)(0)] p dxi.
    pub fn pair(&self, u: &TestFunction) -> Result<Estimate<Complex64>> {
        self.pair_with(u, &PairingOptions::default())
    }

    pub fn pair_with(&self, u: &TestFunction, opts: &PairingOptions) -> Result<Estimate<Complex64>> {
        let space = *self.symbol.space();
        if *u.space() != space {
            return Err(Error::Precondition("test function lives on another space".into()));
        }
        let rule = SphereRule::new(&space, opts.n_polar, opts.n_azimuth)?;
        let a0 = self.symbol.degree() + space.homogeneous_dimension() as f64;
        let weighted_p: Vec<Complex64> = rule
            .points()
            .iter()
            .zip(rule.weights())
            .map(|(t, &w)| self.symbol.boundary_value(t) * w)
            .collect();

        let top = (self.k + 1).max(0) as u32 + opts.taylor_extra;
        // taylor[i][b] = sum_{<alpha> = b} theta_i^alpha u^(alpha)(0) / alpha!
        let blocks: Vec<Vec<(MultiIndex, Complex64)>> = (0..=top)
            .map(|b| {
                MultiIndex::with_bracket(&space, b)
                    .into_iter()
                    .map(|alpha| {
                        let c = u.derivative_at_origin(&alpha) / alpha.factorial();
                        (alpha, c)
                    })
                    .collect()
            })
            .collect();
        let taylor: Vec<Vec<Complex64>> = rule
            .points()
            .iter()
            .map(|t| {
                blocks
                    .iter()
                    .map(|block| block.iter().map(|(alpha, c)| c * alpha.monomial(t)).sum())
                    .collect()
            })
            .collect();

        let subtract = (self.k + 1).max(0) as usize;
        let r_c = match &self.cutoff {
            Some(c) => opts.inner_radius.min(0.5 * c.flat_below()),
            None => opts.inner_radius,
        };

        // innermost ball: termwise integration of the Taylor remainder
        let mut inner = Estimate::exact(Complex64::new(0.0, 0.0));
        let mut last_block = 0.0;
        for b in subtract..=top as usize {
            let moment: Complex64 = weighted_p.iter().zip(&taylor).map(|(p, t)| p * t[b]).sum();
            let e = a0 + b as f64;
            let radial = (e * r_c.ln()).exp() / e;
            let term = moment * radial;
            inner.value += term;
            last_block = term.norm();
        }
        inner.error = last_block;

        // value and the modulus of the uncancelled terms, which sets the roundoff floor
        let radial_parts = |r: f64, psi: Complex64| -> (Complex64, f64) {
            let mut acc = Complex64::new(0.0, 0.0);
            let mut mag = 0.0;
            let mut powers = vec![1.0; subtract];
            for b in 1..subtract {
                powers[b] = powers[b - 1] * r;
            }
            for ((t, p), tay) in rule.points().iter().zip(&weighted_p).zip(&taylor) {
                let xi = space.dilate_unchecked(r, t);
                let mut v = u.value(&xi);
                let mut m = v.norm();
                if subtract > 0 && psi.norm() > 0.0 {
                    let poly: Complex64 = (0..subtract).map(|b| tay[b] * powers[b]).sum();
                    v -= psi * poly;
                    m += (psi * poly).norm();
                }
                acc += p * v;
                mag += p.norm() * m;
            }
            let w = ((a0 - 1.0) * r.ln()).exp();
            (acc * w, mag * w.norm())
        };
        let radial = |r: f64, psi: Complex64| radial_parts(r, psi).0;
        let segment_tol = |a: f64, b: f64, psi: &dyn Fn(f64) -> Complex64| -> Tolerance {
            let half = 0.5 * (b - a);
            let scale: f64 = gauss_legendre(32)
                .iter()
                .map(|&(x, w)| {
                    let r = a + half * (x + 1.0);
                    w * half * radial_parts(r, psi(r)).1
                })
                .sum();
            Tolerance { abs: opts.tolerance.abs.max(ROUNDOFF_FACTOR * f64::EPSILON * scale), ..opts.tolerance }
        };

        let tol = opts.tolerance;
        let mut total = inner;
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        match &self.cutoff {
            None => {
                let head = integrate(|r: f64| radial(r, one), r_c, 1.0, &[], segment_tol(r_c, 1.0, &|_| one))?;
                let tail = integrate_to_infinity(|r: f64| radial(r, one), 1.0, 1.0, tol)?;
                total = total.combine(head).combine(tail);
            }
            Some(c) => {
                let (lo, hi) = (c.flat_below(), c.vanishes_above());
                let psi = |r: f64| c.psi_log(r.ln());
                let near = integrate(|r: f64| radial(r, one), r_c, lo, &[], segment_tol(r_c, lo, &|_| one))?;
                let mid = integrate(
                    |r: f64| radial(r, psi(r)),
                    lo,
                    hi,
                    &[c.bump().center().exp()],
                    segment_tol(lo, hi, &psi),
                )?;
                let tail = integrate_to_infinity(|r: f64| radial(r, zero), hi, hi, tol)?;
                total = total.combine(near).combine(mid).combine(tail);
            }
        }
        Ok(total)
    }

    /// lambda^{-Q} <tau, u(lambda^{-1} . )>.
    pub fn pair_scaled(&self, u: &TestFunction, lambda: f64) -> Result<Estimate<Complex64>> {
        self.pair_scaled_with(u, lambda, &PairingOptions::default())
    }

    pub fn pair_scaled_with(&self, u: &TestFunction, lambda: f64, opts: &PairingOptions) -> Result<Estimate<Complex64>> {
        if !(lambda > 0.0) {
            return Err(Error::Domain(format!("scaling parameter must be positive, got {lambda}")));
        }
        if lambda == 1.0 {
            return self.pair_with(u, opts);
        }
        let q = self.symbol.space().homogeneous_dimension() as i32;
        let v = u.compose_dilation(1.0 / lambda)?;
        Ok(self.pair_with(&v, opts)?.scale(lambda.powi(-q)))
    }
}

/// c_alpha(p) = ((-1)^{|alpha|} / alpha!) int_{|theta| = 1} theta^alpha p(theta) iota_E.
pub fn c_alpha(p: &HomogeneousSymbol, alpha: &MultiIndex) -> Result<Estimate<Complex64>> {
    if alpha.entries().len() != p.space().dim() {
        return Err(Error::Domain("multi-index length does not match the space".into()));
    }
    let est = sphere_integral(
        p.space(),
        |t| p.boundary_value(t.coords()) * alpha.monomial(t.coords()),
        Tolerance::new(1e-15, 1e-13),
    )?;
    Ok(est.scale(alpha.parity_sign() / alpha.factorial()))
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct DefectReport {
    pub lambda: f64,
    pub measured: Complex64,
    pub predicted: Complex64,
    pub residual: f64,
}

fn log_coefficient(tau: &ExtendedDistribution, derivs: impl Fn(&MultiIndex) -> Complex64) -> Result<Complex64> {
    let mut s = Complex64::new(0.0, 0.0);
    for alpha in MultiIndex::with_bracket(tau.symbol.space(), tau.k as u32) {
        let c = c_alpha(&tau.symbol, &alpha)?.value;
        s += c * alpha.parity_sign() * derivs(&alpha);
    }
    Ok(s)
}

/// Compares lambda^{-Q}<tau, u(lambda^{-1}.)> - lambda^m <tau, u> with
/// lambda^m log(lambda) sum_{<alpha> = k} c_alpha (-1)^{|alpha|} u^(alpha)(0).
pub fn scaling_defect(tau: &ExtendedDistribution, u: &TestFunction, lambda: f64) -> Result<DefectReport> {
    if tau.regime != Regime::LogHomogeneous {
        return Err(Error::Precondition("the logarithmic scaling law needs an integer degree <= -Q".into()));
    }
    let m = tau.symbol.degree();
    let lam_m = (m * lambda.ln()).exp();
    let base = tau.pair(u)?.value;
    let scaled = tau.pair_scaled(u, lambda)?.value;
    let measured = scaled - lam_m * base;
    let predicted = lam_m * lambda.ln() * log_coefficient(tau, |a| u.derivative_at_origin(a))?;
    let residual = (measured - predicted).norm() / (1.0 + predicted.norm());
    Ok(DefectReport { lambda, measured, predicted, residual })
}

/// Compares <(tau^vee)_lambda, u> with lambda^{m^} [<tau^vee, u> - log(lambda)
/// sum (2 pi)^{-(d+1)} c_alpha int (-iy)^alpha u], m^ = -(m + Q).
pub fn kernel_scaling_check(tau: &ExtendedDistribution, u: &TestFunction, lambda: f64) -> Result<DefectReport> {
    if !(lambda > 0.0) {
        return Err(Error::Domain(format!("scaling parameter must be positive, got {lambda}")));
    }
    let v = u
        .inverse_fourier()
        .ok_or_else(|| Error::Precondition("kernel scaling needs a test function with a closed-form inverse Fourier transform".into()))?;
    let q = tau.symbol.space().homogeneous_dimension() as i32;
    let m_hat = -(tau.symbol.degree() + q as f64);
    let lam_hat = (m_hat * lambda.ln()).exp();
    let base = tau.pair(v)?.value;
    let measured = tau.pair_scaled(v, 1.0 / lambda)?.value * lambda.powi(-q);
    let mut predicted = lam_hat * base;
    if tau.regime == Regime::LogHomogeneous {
        // int (-iy)^alpha u(y) dy = (2 pi)^{d+1} (-1)^{|alpha|} (d^alpha u^vee)(0)
        predicted -= lam_hat * lambda.ln() * log_coefficient(tau, |a| v.derivative_at_origin(a))?;
    }
    let residual = (measured - predicted).norm() / (1.0 + predicted.norm());
    Ok(DefectReport { lambda, measured, predicted, residual })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::aniso::GradedSpace;
    use crate::homog::GaussianTest;

    fn space() -> GradedSpace {
        GradedSpace::new(2).unwrap()
    }

    #[test]
    fn regimes() {
        let q = 4;
        assert_eq!(classify(Complex64::new(-1.0, 0.0), q), Regime::Integrable);
        assert_eq!(classify(Complex64::new(-4.5, 0.0), q), Regime::Homogeneous);
        assert_eq!(classify(Complex64::new(-4.0, 0.0), q), Regime::LogHomogeneous);
        assert_eq!(classify(Complex64::new(-5.0, 0.3), q), Regime::Homogeneous);
        assert_eq!(default_order(Complex64::new(-6.0, 0.0), q), 2);
    }

    #[test]
    fn order_below_threshold_is_rejected() {
        let p = HomogeneousSymbol::koranyi_power(space(), Complex64::new(-5.5, 0.0)).unwrap();
        assert!(matches!(build_extension(&p, Some(1), &Bump::default()), Err(Error::Domain(_))));
        let p = HomogeneousSymbol::koranyi_power(space(), Complex64::new(-4.0, 0.0)).unwrap();
        assert!(matches!(build_extension(&p, Some(1), &Bump::default()), Err(Error::Domain(_))));
    }

    #[test]
    fn integrable_pairing_matches_polar_quadrature() {
        let s = space();
        let p = HomogeneousSymbol::koranyi_power(s, Complex64::new(-1.0, 0.0)).unwrap();
        let tau = build_extension(&p, None, &Bump::default()).unwrap();
        let g = GaussianTest::centered(&s);
        let u = g.to_test_function(&s).unwrap();
        let v = tau.pair(&u).unwrap().value;
        let reference = crate::aniso::polar_integral(
            &s,
            |xi| g.value(xi).re / crate::aniso::koranyi(xi),
            0.0,
            f64::INFINITY,
            Tolerance::new(1e-13, 1e-11),
        )
        .unwrap();
        assert!((v.re - reference.value).abs() < 1e-9 * reference.value.abs(), "{v} vs {}", reference.value);
    }
}

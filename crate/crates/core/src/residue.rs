//! Finite-part functional on symbols of non-integer order, Laurent analysis of
//! gauged families, the residue density and the global residue.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::aniso::{sphere_integral, GradedSpace};
use crate::error::{Error, Result};
use crate::homog::{build_extension, classify, Bump, HomogeneousSymbol, Regime};
use crate::quadrature::{integrate, Estimate, Tolerance};

const DEGREE_SLACK: f64 = 1e-9;

/// A finite asymptotic expansion p_m + p_{m-1} + ... + p_{m-J} at one point.
#[derive(Debug, Clone)]
pub struct SymbolExpansion {
    components: Vec<HomogeneousSymbol>,
    frame_jacobian: f64,
}

impl SymbolExpansion {
    pub fn new(components: Vec<HomogeneousSymbol>) -> Result<Self> {
        let first = components
            .first()
            .ok_or_else(|| Error::Domain("a symbol expansion needs at least one component".into()))?;
        let (space, m) = (*first.space(), first.degree());
        for (j, p) in components.iter().enumerate() {
            if *p.space() != space {
                return Err(Error::Domain("expansion components live on different spaces".into()));
            }
            if (p.degree() - (m - j as f64)).norm() > DEGREE_SLACK {
                return Err(Error::Domain(format!(
                    "component {j} has degree {}, expected {}",
                    p.degree(),
                    m - j as f64
                )));
            }
        }
        Ok(SymbolExpansion { components, frame_jacobian: 1.0 })
    }

    pub fn single(p: HomogeneousSymbol) -> Self {
        SymbolExpansion { components: vec![p], frame_jacobian: 1.0 }
    }

    /// |psi'_x|, the Jacobian of the Heisenberg frame at the point.
    pub fn with_frame_jacobian(mut self, jacobian: f64) -> Result<Self> {
        if !(jacobian > 0.0) || !jacobian.is_finite() {
            return Err(Error::Domain(format!("frame Jacobian must be positive, got {jacobian}")));
        }
        self.frame_jacobian = jacobian;
        Ok(self)
    }

    pub fn space(&self) -> &GradedSpace {
        self.components[0].space()
    }

    pub fn order(&self) -> Complex64 {
        self.components[0].degree()
    }

    pub fn components(&self) -> &[HomogeneousSymbol] {
        &self.components
    }

    pub fn frame_jacobian(&self) -> f64 {
        self.frame_jacobian
    }

    /// |xi|^z p, componentwise.
    pub fn gauge(&self, z: Complex64) -> Self {
        SymbolExpansion {
            components: self.components.iter().map(|p| p.shifted(z)).collect(),
            frame_jacobian: self.frame_jacobian,
        }
    }

    fn component_of_degree(&self, degree: f64) -> Option<&HomogeneousSymbol> {
        self.components
            .iter()
            .find(|p| (p.degree() - Complex64::new(degree, 0.0)).norm() < DEGREE_SLACK)
    }
}

fn is_integer(m: Complex64) -> bool {
    m.im.abs() < DEGREE_SLACK && (m.re - m.re.round()).abs() < DEGREE_SLACK
}

fn sphere_mass(p: &HomogeneousSymbol) -> Result<Estimate<Complex64>> {
    sphere_integral(p.space(), |t| p.boundary_value(t.coords()), Tolerance::new(1e-15, 1e-13))
}

#[derive(Debug, Clone)]
pub struct TraceOptions {
    /// Split index N >= Re m + Q; the smallest admissible value when absent.
    pub truncation: Option<i64>,
    /// Bump whose tail defines the radial cutoff phi(xi) = int_{log |xi|}^inf g.
    pub phi: Bump,
    /// Bump used for the homogeneous extensions tau_{m-j}.
    pub extension: Bump,
    pub tolerance: Tolerance,
}

impl Default for TraceOptions {
    fn default() -> Self {
        TraceOptions {
            truncation: None,
            phi: Bump::default(),
            extension: Bump::default(),
            tolerance: Tolerance::new(1e-15, 1e-13),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TildeL {
    pub value: Complex64,
    pub error: f64,
    pub truncation: i64,
    pub terms: Vec<Complex64>,
}

/// Finite part of int p(xi) dxi for a symbol of non-integer order realized as
/// (1 - phi) sum_j p_{m-j}: sum_{j > N} int (1 - phi) p_{m-j} - sum_{j <= N} <tau_{m-j}, phi>.
pub fn tilde_l(p: &SymbolExpansion, opts: &TraceOptions) -> Result<TildeL> {
    let m = p.order();
    if is_integer(m) {
        return Err(Error::Precondition(format!(
            "order {m} is an integer; the finite part has a pole there, use the gauged Laurent analysis"
        )));
    }
    let q = p.space().homogeneous_dimension();
    let threshold = m.re + q as f64;
    let n = match opts.truncation {
        Some(n) if (n as f64) < threshold => {
            return Err(Error::Precondition(format!("truncation N = {n} is below Re m + Q = {threshold}")));
        }
        Some(n) => n,
        None => threshold.ceil() as i64,
    };
    let tol = opts.tolerance;
    let (phi_lo, phi_hi) = opts.phi.support();
    let mut value = Complex64::new(0.0, 0.0);
    let mut error = 0.0;
    let mut terms = Vec::with_capacity(p.components.len());
    for (j, pj) in p.components.iter().enumerate() {
        let a = pj.degree() + q as f64;
        let s = sphere_mass(pj)?;
        let radial: Estimate<Complex64> = if (j as i64) > n {
            // int_0^inf r^{a-1} (1 - Phi(r)) dr, Re a < 0
            let inner = integrate(
                |t: f64| (a * t).exp() * (1.0 - opts.phi.tail(t)),
                phi_lo,
                phi_hi,
                &[opts.phi.center()],
                tol,
            )?;
            let edge = (a * phi_hi).exp() / a;
            Estimate { value: inner.value - edge, ..inner }
        } else {
            // -<tau, phi>
            let pairing = match classify(pj.degree(), q) {
                Regime::Integrable => {
                    let inner = integrate(
                        |t: f64| (a * t).exp() * opts.phi.tail(t),
                        phi_lo,
                        phi_hi,
                        &[opts.phi.center()],
                        tol,
                    )?;
                    Estimate { value: inner.value + (a * phi_lo).exp() / a, ..inner }
                }
                _ => {
                    let tau = build_extension(pj, None, &opts.extension)?;
                    let cutoff = tau.cutoff().expect("non-integrable extensions carry a cutoff");
                    let (c_lo, c_hi) = cutoff.bump().support();
                    let lo = phi_lo.min(c_lo);
                    let hi = phi_hi.max(c_hi);
                    integrate(
                        |t: f64| (a * t).exp() * (opts.phi.tail(t) - cutoff.psi_log(t)),
                        lo,
                        hi,
                        &[opts.phi.center(), cutoff.bump().center(), phi_lo, phi_hi, c_lo, c_hi],
                        tol,
                    )?
                }
            };
            pairing.scale(-1.0)
        };
        let term = s.value * radial.value;
        error += s.error * radial.value.norm() + s.value.norm() * radial.error;
        value += term;
        terms.push(term);
    }
    Ok(TildeL { value, error, truncation: n, terms })
}

/// -S_j M(a_j) / a_j summed over components, with M(a) = int e^{a t} g(t) dt;
/// the same finite part evaluated through a single moment of the bump.
pub fn tilde_l_moment_form(p: &SymbolExpansion, phi: &Bump) -> Result<Complex64> {
    let q = p.space().homogeneous_dimension();
    let (lo, hi) = phi.support();
    let mut total = Complex64::new(0.0, 0.0);
    for pj in &p.components {
        let a = pj.degree() + q as f64;
        if a.norm() < DEGREE_SLACK {
            return Err(Error::Precondition("component of degree -Q has no finite part".into()));
        }
        let s = sphere_mass(pj)?.value;
        let moment = integrate(|t: f64| (a * t).exp() * phi.value(t), lo, hi, &[phi.center()], Tolerance::new(1e-16, 1e-14))?;
        total -= s * moment.value / a;
    }
    Ok(total)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum LaurentSampling {
    /// 24 equispaced gauge orders on the circle |z| = radius.
    Circle,
    /// Real gauge orders z = +-radius {1, 3/4, 1/2, 1/4}.
    RealSegment,
}

#[derive(Debug, Clone, Serialize)]
pub struct LaurentFit {
    pub residue: Complex64,
    pub regular_value: Complex64,
    pub linear_coefficient: Complex64,
    pub radius: f64,
    pub sampling: LaurentSampling,
    pub samples: Vec<(Complex64, Complex64)>,
    /// Root-mean-square misfit relative to the largest sample.
    pub fit_residual: f64,
    pub condition_number: f64,
}

const CIRCLE_POINTS: usize = 24;
const SEGMENT_FRACTIONS: [f64; 4] = [1.0, 0.75, 0.5, 0.25];
const MAX_CONDITION: f64 = 1e12;

/// Fits a/z + b + c z to z -> L~(|xi|^z p) by least squares over the samples.
pub fn gauged_laurent(
    base: &SymbolExpansion,
    radius: f64,
    sampling: LaurentSampling,
    opts: &TraceOptions,
) -> Result<LaurentFit> {
    if !(radius > 0.0 && radius < 1.0) {
        return Err(Error::Precondition(format!("sample radius must lie in (0, 1), got {radius}")));
    }
    let m = base.order();
    let zs: Vec<Complex64> = match sampling {
        LaurentSampling::Circle => (0..CIRCLE_POINTS)
            .map(|k| {
                let angle = 2.0 * std::f64::consts::PI * (k as f64 + 0.5) / CIRCLE_POINTS as f64;
                Complex64::from_polar(radius, angle)
            })
            .collect(),
        LaurentSampling::RealSegment => SEGMENT_FRACTIONS
            .iter()
            .flat_map(|&f| [Complex64::new(-f * radius, 0.0), Complex64::new(f * radius, 0.0)])
            .collect(),
    };
    for &z in &zs {
        if is_integer(m + z) {
            return Err(Error::Precondition(format!("sample order {} is an integer", m + z)));
        }
    }
    let opts = TraceOptions { truncation: None, ..opts.clone() };
    let samples: Vec<(Complex64, Complex64)> = zs
        .par_iter()
        .map(|&z| tilde_l(&base.gauge(z), &opts).map(|v| (z, v.value)))
        .collect::<Result<_>>()?;
    let one = Complex64::new(1.0, 0.0);
    let design = DMatrix::from_fn(zs.len(), 3, |i, j| match j {
        0 => one / zs[i],
        1 => one,
        _ => zs[i],
    });
    let svd = design.svd(true, true);
    let sv = &svd.singular_values;
    let condition_number = sv.max() / sv.min();
    if !(condition_number < MAX_CONDITION) {
        return Err(Error::numerical("Laurent fit is ill-conditioned", condition_number, MAX_CONDITION));
    }
    let ys = DVector::from_iterator(zs.len(), samples.iter().map(|s| s.1));
    let coef = svd
        .solve(&ys, 0.0)
        .map_err(|e| Error::numerical(format!("Laurent least squares failed: {e}"), f64::NAN, 0.0))?;
    let (residue, regular_value, linear_coefficient) = (coef[0], coef[1], coef[2]);
    let scale = samples.iter().map(|s| s.1.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let misfit: f64 = samples
        .iter()
        .map(|&(z, y)| (y - (residue / z + regular_value + linear_coefficient * z)).norm_sqr())
        .sum::<f64>()
        / samples.len() as f64;
    Ok(LaurentFit {
        residue,
        regular_value,
        linear_coefficient,
        radius,
        sampling,
        samples,
        fit_residual: misfit.sqrt() / scale,
        condition_number,
    })
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ResidueDensity {
    pub value: Complex64,
    pub error: f64,
    pub jacobian_included: bool,
}

/// c_P(x) = |psi'_x| (2 pi)^{-(d+1)} int p_{-Q} iota_E.
pub fn residue_density(p: &SymbolExpansion) -> Result<ResidueDensity> {
    let space = p.space();
    let q = space.homogeneous_dimension() as f64;
    let Some(pq) = p.component_of_degree(-q) else {
        return Ok(ResidueDensity { value: Complex64::new(0.0, 0.0), error: 0.0, jacobian_included: true });
    };
    let s = sphere_mass(pq)?;
    let factor = p.frame_jacobian * (2.0 * std::f64::consts::PI).powi(-(space.dim() as i32));
    Ok(ResidueDensity { value: s.value * factor, error: s.error * factor, jacobian_included: true })
}

/// Local density t_P(x) = |psi'_x| (2 pi)^{-(d+1)} L~(p) + k_R(x, x) of the
/// canonical trace, for symbols of non-integer order.
pub fn trace_density(p: &SymbolExpansion, smoothing_remainder: Complex64, opts: &TraceOptions) -> Result<Complex64> {
    let l = tilde_l(p, opts)?;
    let factor = p.frame_jacobian * (2.0 * std::f64::consts::PI).powi(-(p.space().dim() as i32));
    Ok(l.value * factor + smoothing_remainder)
}

/// Res P = sum w_i c_P(x_i) over user-supplied quadrature weights.
pub fn global_res(densities: &[(f64, ResidueDensity)]) -> Result<Complex64> {
    let mut total = Complex64::new(0.0, 0.0);
    for (w, c) in densities {
        if !(*w >= 0.0) {
            return Err(Error::Domain(format!("quadrature weights must be non-negative, got {w}")));
        }
        total += c.value * *w;
    }
    Ok(total)
}

/// Dixmier trace Res / Q.
pub fn dixmier_value(res: Complex64, space: &GradedSpace) -> Complex64 {
    res / space.homogeneous_dimension() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn space() -> GradedSpace {
        GradedSpace::new(2).unwrap()
    }

    fn c(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    #[test]
    fn integer_order_is_rejected() {
        let p = SymbolExpansion::single(HomogeneousSymbol::koranyi_power(space(), c(-4.0)).unwrap());
        assert!(matches!(tilde_l(&p, &TraceOptions::default()), Err(Error::Precondition(_))));
    }

    #[test]
    fn three_routes_agree() {
        let s = space();
        let p = SymbolExpansion::new(vec![
            HomogeneousSymbol::gauss_tapered(s, c(-2.5)).unwrap(),
            HomogeneousSymbol::koranyi_power(s, c(-3.5)).unwrap(),
            HomogeneousSymbol::koranyi_power(s, c(-4.5)).unwrap(),
        ])
        .unwrap();
        let opts = TraceOptions::default();
        let a = tilde_l(&p, &opts).unwrap();
        let b = tilde_l(&p, &TraceOptions { truncation: Some(a.truncation + 1), ..opts.clone() }).unwrap();
        let oracle = tilde_l_moment_form(&p, &opts.phi).unwrap();
        assert!((a.value - b.value).norm() < 1e-10 * a.value.norm());
        assert!((a.value - oracle).norm() < 1e-10 * oracle.norm());
    }

    #[test]
    fn residue_density_of_critical_power() {
        let p = SymbolExpansion::single(HomogeneousSymbol::koranyi_power(space(), c(-4.0)).unwrap());
        let r = residue_density(&p).unwrap();
        assert_relative_eq!(r.value.re, 23.298989541667428 / (2.0 * std::f64::consts::PI).powi(3), max_relative = 1e-11);
        let p = SymbolExpansion::single(HomogeneousSymbol::koranyi_power(space(), c(-3.0)).unwrap());
        assert_eq!(residue_density(&p).unwrap().value, c(0.0));
    }

    #[test]
    fn dixmier_and_global() {
        assert_eq!(dixmier_value(c(4.0), &space()), c(1.0));
        assert_eq!(global_res(&[]).unwrap(), c(0.0));
        let d = ResidueDensity { value: c(0.5), error: 0.0, jacobian_included: true };
        assert_eq!(global_res(&[(3.0, d)]).unwrap(), c(1.5));
        assert!(global_res(&[(-1.0, d)]).is_err());
    }
}

//! Graded space R^{d+1} with weights (2, 1, ..., 1), its dilations, the Koranyi
//! pseudo-norm and integration over the unit pseudo-sphere.

use std::f64::consts::{E, PI};

use crate::error::{Error, Result};
use crate::quadrature::{self, gauss_legendre, tanh_sinh, Estimate, QuadValue, Tolerance};

/// R^{d+1} with the first coordinate of weight 2 and the remaining d of weight 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GradedSpace {
    d: usize,
}

impl GradedSpace {
    pub fn new(d: usize) -> Result<Self> {
        if d == 0 {
            return Err(Error::Domain("the graded space needs at least one coordinate of weight 1".into()));
        }
        Ok(GradedSpace { d })
    }

    /// The model of a (2n+1)-dimensional contact manifold.
    pub fn contact(n: usize) -> Result<Self> {
        Self::new(2 * n)
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn dim(&self) -> usize {
        self.d + 1
    }

    /// Q = d + 2.
    pub fn homogeneous_dimension(&self) -> usize {
        self.d + 2
    }

    pub fn weight(&self, i: usize) -> u32 {
        if i == 0 { 2 } else { 1 }
    }

    fn check(&self, xi: &[f64]) -> Result<()> {
        if xi.len() != self.dim() {
            return Err(Error::Domain(format!("expected a point of length {}, got {}", self.dim(), xi.len())));
        }
        Ok(())
    }

    /// t.xi = (t^2 xi_0, t xi_1, ..., t xi_d).
    pub fn dilate(&self, t: f64, xi: &[f64]) -> Result<Vec<f64>> {
        if !(t > 0.0) {
            return Err(Error::Domain(format!("dilation parameter must be positive, got {t}")));
        }
        self.check(xi)?;
        Ok(self.dilate_unchecked(t, xi))
    }

    pub(crate) fn dilate_unchecked(&self, t: f64, xi: &[f64]) -> Vec<f64> {
        xi.iter()
            .enumerate()
            .map(|(i, &x)| if i == 0 { t * t * x } else { t * x })
            .collect()
    }

    /// (xi_0^2 + sum xi_j^4)^(1/4).
    pub fn pseudo_norm(&self, xi: &[f64]) -> Result<f64> {
        self.check(xi)?;
        Ok(koranyi(xi))
    }

    pub fn project(&self, xi: &[f64]) -> Result<SpherePoint> {
        let r = self.pseudo_norm(xi)?;
        if r == 0.0 {
            return Err(Error::Domain("the origin has no direction".into()));
        }
        Ok(SpherePoint { xi: self.dilate_unchecked(1.0 / r, xi) })
    }
}

pub(crate) fn koranyi(xi: &[f64]) -> f64 {
    let scale = xi
        .iter()
        .enumerate()
        .map(|(i, &x)| if i == 0 { x.abs().sqrt() } else { x.abs() })
        .fold(0.0, f64::max);
    if scale == 0.0 || !scale.is_finite() {
        return scale;
    }
    let mut s = (xi[0] / (scale * scale)).powi(2);
    for &x in &xi[1..] {
        s += (x / scale).powi(4);
    }
    scale * s.sqrt().sqrt()
}

/// A point of the unit pseudo-sphere.
#[derive(Debug, Clone, PartialEq)]
pub struct SpherePoint {
    xi: Vec<f64>,
}

impl SpherePoint {
    pub fn new(space: &GradedSpace, xi: Vec<f64>) -> Result<Self> {
        let r = space.pseudo_norm(&xi)?;
        if (r - 1.0).abs() > 1e-12 {
            return Err(Error::Domain(format!("point has pseudo-norm {r}, not 1")));
        }
        Ok(SpherePoint { xi })
    }

    pub fn coords(&self) -> &[f64] {
        &self.xi
    }
}

/// A weighted multi-index alpha with bracket 2 alpha_0 + alpha_1 + ... + alpha_d.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MultiIndex {
    alpha: Vec<u32>,
}

impl MultiIndex {
    pub fn new(alpha: Vec<u32>) -> Self {
        MultiIndex { alpha }
    }

    pub fn zero(space: &GradedSpace) -> Self {
        MultiIndex { alpha: vec![0; space.dim()] }
    }

    pub fn entries(&self) -> &[u32] {
        &self.alpha
    }

    pub fn bracket(&self) -> u32 {
        self.alpha.iter().enumerate().map(|(i, &a)| if i == 0 { 2 * a } else { a }).sum()
    }

    pub fn order(&self) -> u32 {
        self.alpha.iter().sum()
    }

    pub fn factorial(&self) -> f64 {
        self.alpha.iter().map(|&a| (1..=a).map(f64::from).product::<f64>()).product()
    }

    /// (-1)^{|alpha|}
    pub fn parity_sign(&self) -> f64 {
        if self.order() % 2 == 0 { 1.0 } else { -1.0 }
    }

    pub fn monomial(&self, xi: &[f64]) -> f64 {
        self.alpha.iter().zip(xi).map(|(&a, &x)| x.powi(a as i32)).product()
    }

    /// All multi-indices with the given bracket, in lexicographic order.
    pub fn with_bracket(space: &GradedSpace, bracket: u32) -> Vec<MultiIndex> {
        let mut out = Vec::new();
        for a0 in 0..=bracket / 2 {
            let mut rest = vec![0u32; space.d()];
            compositions(bracket - 2 * a0, 0, &mut rest, &mut |tail| {
                let mut alpha = vec![a0];
                alpha.extend_from_slice(tail);
                out.push(MultiIndex { alpha });
            });
        }
        out.sort();
        out
    }

    pub fn up_to_bracket(space: &GradedSpace, max_bracket: u32) -> Vec<MultiIndex> {
        (0..=max_bracket).flat_map(|b| Self::with_bracket(space, b)).collect()
    }
}

fn compositions(total: u32, pos: usize, buf: &mut Vec<u32>, emit: &mut dyn FnMut(&[u32])) {
    if pos + 1 == buf.len() {
        buf[pos] = total;
        emit(buf);
        return;
    }
    for v in 0..=total {
        buf[pos] = v;
        compositions(total - v, pos + 1, buf, emit);
    }
}

/// Euclidean unit sphere point from hyperspherical angles, and the surface element.
fn euclidean_from_angles(angles: &[f64], out: &mut [f64]) -> f64 {
    let n = angles.len();
    let mut s = 1.0;
    let mut element = 1.0;
    for (i, &phi) in angles.iter().enumerate() {
        if i + 1 < n {
            out[i] = s * phi.cos();
            element *= phi.sin().powi((n - 1 - i) as i32);
            s *= phi.sin();
        } else {
            out[i] = s * phi.cos();
            out[i + 1] = s * phi.sin();
        }
    }
    element
}

/// Maps a Euclidean unit vector to the pseudo-sphere and returns the density of
/// the pseudo-sphere measure relative to Euclidean surface measure.
fn chart_point(space: &GradedSpace, omega: &[f64]) -> (Vec<f64>, f64) {
    let r = koranyi(omega);
    let theta = space.dilate_unchecked(1.0 / r, omega);
    let density = r.powi(-(space.homogeneous_dimension() as i32)) * (1.0 + omega[0] * omega[0]);
    (theta, density)
}

/// Integral of g over the unit pseudo-sphere against the measure iota_E dxi,
/// computed through the Euclidean sphere with nested adaptive quadrature.
pub fn sphere_integral<V, G>(space: &GradedSpace, g: G, tol: Tolerance) -> Result<Estimate<V>>
where
    V: QuadValue,
    G: Fn(&SpherePoint) -> V,
{
    if space.d() == 1 {
        return quadrature::integrate(
            |phi: f64| {
                let omega = [phi.cos(), phi.sin()];
                let (theta, density) = chart_point(space, &omega);
                g(&SpherePoint { xi: theta }) * density
            },
            0.0,
            2.0 * PI,
            &[0.5 * PI, PI, 1.5 * PI],
            tol,
        );
    }
    // absolute floor tied to the L1 norm so that vanishing integrals terminate
    let coarse = SphereRule::new(space, 24, 24)?;
    let l1: f64 = coarse.points().iter().zip(coarse.weights()).map(|(p, &w)| w * g(&SpherePoint { xi: p.clone() }).magnitude()).sum();
    let tol = Tolerance { abs: tol.abs.max(0.1 * tol.rel * l1), ..tol };
    let inner = Tolerance { rel: tol.rel * 0.1, abs: tol.abs * 0.1, ..tol };
    let mut angles = Vec::new();
    nested_angles(space, &g, &mut angles, tol, inner)
}

fn nested_angles<V, G>(
    space: &GradedSpace,
    g: &G,
    angles: &mut Vec<f64>,
    tol: Tolerance,
    inner: Tolerance,
) -> Result<Estimate<V>>
where
    V: QuadValue,
    G: Fn(&SpherePoint) -> V,
{
    let d = space.d();
    let level = angles.len();
    let last = level + 1 == d;
    let upper = if last { 2.0 * PI } else { PI };
    let breaks: Vec<f64> = if last {
        vec![0.5 * PI, PI, 1.5 * PI]
    } else {
        vec![0.25 * PI, 0.5 * PI, 0.75 * PI]
    };
    let failure = std::cell::RefCell::new(None);
    let est = quadrature::integrate(
        |phi: f64| {
            if failure.borrow().is_some() {
                return V::zero();
            }
            let mut a = angles.clone();
            a.push(phi);
            if last {
                let mut omega = vec![0.0; d + 1];
                let element = euclidean_from_angles(&a, &mut omega);
                let (theta, density) = chart_point(space, &omega);
                let v = g(&SpherePoint { xi: theta });
                if v.magnitude() == 0.0 { V::zero() } else { v * (element * density) }
            } else {
                match nested_angles(space, g, &mut a, inner, inner) {
                    Ok(e) => e.value,
                    Err(err) => {
                        *failure.borrow_mut() = Some(err);
                        V::zero()
                    }
                }
            }
        },
        0.0,
        upper,
        &breaks,
        tol,
    );
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    est
}

/// Integral of g over the unit pseudo-sphere computed independently of the
/// chart: the shell 1 <= |xi| <= e carries the measure |xi|^{-Q} dxi, which
/// projects onto iota_E dxi. Nested tanh-sinh quadrature in Cartesian
/// coordinates with exact shell bounds.
pub fn sphere_integral_shell<G>(space: &GradedSpace, g: G, tol: Tolerance) -> Result<Estimate<f64>>
where
    G: Fn(&SpherePoint) -> f64,
{
    let mut prefix = Vec::with_capacity(space.dim());
    shell_level(space, &g, &mut prefix, 0.0, tol)
}

fn shell_level<G>(
    space: &GradedSpace,
    g: &G,
    prefix: &mut Vec<f64>,
    partial: f64,
    tol: Tolerance,
) -> Result<Estimate<f64>>
where
    G: Fn(&SpherePoint) -> f64,
{
    let e4 = E.powi(4);
    let i = prefix.len();
    let budget_hi = e4 - partial;
    let budget_lo = 1.0 - partial;
    if budget_hi <= 0.0 {
        return Ok(Estimate::exact(0.0));
    }
    let (hi, lo) = if i == 0 {
        (budget_hi.sqrt(), if budget_lo > 0.0 { budget_lo.sqrt() } else { 0.0 })
    } else {
        (budget_hi.sqrt().sqrt(), if budget_lo > 0.0 { budget_lo.sqrt().sqrt() } else { 0.0 })
    };
    let last = i == space.d();
    let mut intervals = Vec::new();
    if lo > 0.0 {
        intervals.push((-hi, -lo));
        if !last {
            intervals.push((-lo, lo));
        }
        intervals.push((lo, hi));
    } else {
        intervals.push((-hi, hi));
    }
    let q = space.homogeneous_dimension() as i32;
    let mut total = Estimate::exact(0.0);
    let failure = std::cell::RefCell::new(None);
    for (a, b) in intervals {
        let est = tanh_sinh(
            |x: f64, _gap: f64| {
                if failure.borrow().is_some() {
                    return 0.0;
                }
                let contrib = if i == 0 { x * x } else { x.powi(4) };
                let mut p = prefix.clone();
                p.push(x);
                if last {
                    let r = koranyi(&p);
                    if r == 0.0 {
                        return 0.0;
                    }
                    let theta = space.dilate_unchecked(1.0 / r, &p);
                    g(&SpherePoint { xi: theta }) * r.powi(-q)
                } else {
                    match shell_level(space, g, &mut p, partial + contrib, tol) {
                        Ok(e) => e.value,
                        Err(err) => {
                            *failure.borrow_mut() = Some(err);
                            0.0
                        }
                    }
                }
            },
            a,
            b,
            tol,
        )?;
        if let Some(e) = failure.borrow_mut().take() {
            return Err(e);
        }
        total = total.combine(est);
    }
    Ok(total)
}

/// A fixed product rule on the pseudo-sphere: Gauss-Legendre in the polar
/// angles and the periodic trapezoid rule in the azimuth.
#[derive(Debug, Clone)]
pub struct SphereRule {
    points: Vec<Vec<f64>>,
    weights: Vec<f64>,
}

impl SphereRule {
    pub fn new(space: &GradedSpace, n_polar: usize, n_azimuth: usize) -> Result<Self> {
        if n_polar < 2 || n_azimuth < 3 {
            return Err(Error::Config("sphere rule needs at least 2 polar and 3 azimuthal nodes".into()));
        }
        let d = space.d();
        let gl = gauss_legendre(n_polar);
        let polar: Vec<(f64, f64)> = gl.iter().map(|&(x, w)| (0.5 * PI * (x + 1.0), 0.5 * PI * w)).collect();
        let azimuth: Vec<(f64, f64)> = (0..n_azimuth)
            .map(|j| ((j as f64 + 0.5) * 2.0 * PI / n_azimuth as f64, 2.0 * PI / n_azimuth as f64))
            .collect();
        let mut points = Vec::new();
        let mut weights = Vec::new();
        let mut idx = vec![0usize; d];
        let sizes: Vec<usize> = (0..d).map(|l| if l + 1 == d { n_azimuth } else { n_polar }).collect();
        loop {
            let mut angles = Vec::with_capacity(d);
            let mut w = 1.0;
            for l in 0..d {
                let (a, wl) = if l + 1 == d { azimuth[idx[l]] } else { polar[idx[l]] };
                angles.push(a);
                w *= wl;
            }
            let mut omega = vec![0.0; d + 1];
            let element = euclidean_from_angles(&angles, &mut omega);
            let (theta, density) = chart_point(space, &omega);
            points.push(theta);
            weights.push(w * element * density);
            let mut l = 0;
            loop {
                if l == d {
                    return Ok(SphereRule { points, weights });
                }
                idx[l] += 1;
                if idx[l] < sizes[l] {
                    break;
                }
                idx[l] = 0;
                l += 1;
            }
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn integrate<V: QuadValue>(&self, g: impl Fn(&[f64]) -> V) -> V {
        self.points
            .iter()
            .zip(&self.weights)
            .fold(V::zero(), |acc, (p, &w)| acc + g(p) * w)
    }
}

/// Polar integral of f over {r_min <= |xi| <= r_max} as
/// int r^{Q-1} int_sphere f(r.theta) iota_E dr, with r_max possibly infinite.
pub fn polar_integral<F>(space: &GradedSpace, f: F, r_min: f64, r_max: f64, tol: Tolerance) -> Result<Estimate<f64>>
where
    F: Fn(&[f64]) -> f64,
{
    if !(r_min >= 0.0) || !(r_max > r_min) {
        return Err(Error::Domain(format!("invalid radial range [{r_min}, {r_max}]")));
    }
    let q = space.homogeneous_dimension() as i32;
    let inner = Tolerance { rel: tol.rel * 0.1, abs: tol.abs * 0.1, ..tol };
    let radial = |theta: &SpherePoint| -> Result<Estimate<f64>> {
        let h = |r: f64| {
            if r == 0.0 {
                return 0.0;
            }
            let xi = space.dilate_unchecked(r, theta.coords());
            f(&xi) * r.powi(q - 1)
        };
        if r_max.is_finite() {
            quadrature::integrate(h, r_min, r_max, &[], inner)
        } else {
            quadrature::integrate_to_infinity(h, r_min, 1.0, inner)
        }
    };
    let failure = std::cell::RefCell::new(None);
    let est = sphere_integral(
        space,
        |theta| match radial(theta) {
            Ok(e) => e.value,
            Err(err) => {
                failure.borrow_mut().get_or_insert(err);
                0.0
            }
        },
        tol,
    )?;
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    Ok(est)
}

/// Closed form of the pseudo-sphere measure: 4 sqrt(pi) (2 Gamma(5/4))^d / Gamma(Q/4).
pub fn sphere_measure_closed_form(space: &GradedSpace) -> f64 {
    use statrs::function::gamma::gamma;
    let d = space.d() as f64;
    let q = space.homogeneous_dimension() as f64;
    4.0 * PI.sqrt() * (2.0 * gamma(1.25)).powf(d) / gamma(q / 4.0)
}

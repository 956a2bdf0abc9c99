//! Pseudohermitian geometry of S^3 in C^2: chart integration of dtheta ^ theta,
//! heat-side universal constants and the lower-dimensional volumes.

use std::cell::RefCell;
use std::collections::BTreeMap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::error::{Error, Result};
use crate::quadrature::{integrate, Estimate, Tolerance};

/// Tanaka-Webster scalar curvature as a function of the point of S^3 in R^4.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Curvature {
    Constant(f64),
    Affine { constant: f64, gradient: [f64; 4] },
}

impl Curvature {
    pub fn at(&self, p: &[f64; 4]) -> f64 {
        match self {
            Curvature::Constant(r) => *r,
            Curvature::Affine { constant, gradient } => constant + gradient.iter().zip(p).map(|(g, x)| g * x).sum::<f64>(),
        }
    }
}

/// Two stereographic charts from the antipodal points +-pole, glued by a
/// smooth partition of unity in the height h = <p, pole> that switches over
/// h in (-blend, blend).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Atlas {
    pub pole: [f64; 4],
    pub blend: f64,
}

impl Default for Atlas {
    fn default() -> Self {
        Atlas { pole: [0.0, 0.0, 0.0, 1.0], blend: 0.5 }
    }
}

/// S^3 subset C^2 with theta = scale * (i/2) sum (z dzbar - zbar dz) restricted to
/// the sphere; in real coordinates z_j = x_j + i y_j, theta = scale/2 sum (x dy - y dx).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContactModel {
    pub name: String,
    pub n: u32,
    #[serde(default = "unit")]
    pub theta_scale: f64,
    pub curvature: Curvature,
    #[serde(default)]
    pub atlas: Atlas,
    #[serde(default)]
    pub known_volume: Option<f64>,
}

fn unit() -> f64 {
    1.0
}

impl ContactModel {
    pub fn s3_standard() -> Self {
        ContactModel {
            name: "s3-standard".into(),
            n: 1,
            theta_scale: 1.0,
            curvature: Curvature::Constant(4.0),
            atlas: Atlas::default(),
            known_volume: Some(PI * PI),
        }
    }

    pub fn by_name(name: &str) -> Result<Self> {
        match name {
            "s3-standard" => Ok(Self::s3_standard()),
            _ => Err(Error::Config(format!("unknown contact model `{name}`"))),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let model: ContactModel = serde_json::from_str(text).map_err(|e| Error::Parse(format!("contact model: {e}")))?;
        model.validate()?;
        Ok(model)
    }

    pub fn with_theta_scale(mut self, c: f64) -> Self {
        self.theta_scale = c;
        self.known_volume = self.known_volume.map(|v| v * c * c);
        self
    }

    pub fn with_curvature(mut self, r: Curvature) -> Self {
        self.curvature = r;
        self
    }

    pub fn with_atlas(mut self, atlas: Atlas) -> Self {
        self.atlas = atlas;
        self
    }

    pub fn dim(&self) -> u32 {
        2 * self.n + 1
    }

    pub fn validate(&self) -> Result<()> {
        if self.n != 1 {
            return Err(Error::Precondition(format!(
                "chart integration is available for S^3 (n = 1) only, got n = {}",
                self.n
            )));
        }
        if !(self.atlas.blend > 0.0 && self.atlas.blend < 1.0) {
            return Err(Error::Config(format!("atlas blend must lie in (0, 1), got {}", self.atlas.blend)));
        }
        let charts = self.charts()?;
        for u in [[0.1, 0.0, 0.0], [0.3, -0.2, 0.5], [1.0, 0.4, -0.7], [-0.1, 1.2, 0.2]] {
            let p = charts[0].point(&u);
            let total: f64 = charts.iter().map(|c| c.weight(&c.inverse(&p))).sum();
            if (total - 1.0).abs() > 1e-12 {
                return Err(Error::Config(format!("partition of unity sums to {total} at {p:?}")));
            }
            if !(charts[0].volume_density(&u, self.theta_scale).abs() > 1e-12) {
                return Err(Error::Config("dtheta ^ theta vanishes at a sample point".into()));
            }
        }
        Ok(())
    }

    fn charts(&self) -> Result<[Chart; 2]> {
        let norm = self.atlas.pole.iter().map(|x| x * x).sum::<f64>().sqrt();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::Config("atlas pole must be a non-zero vector".into()));
        }
        let pole = self.atlas.pole.map(|x| x / norm);
        let frame = orthonormal_frame(pole);
        let mk = |sign: f64| Chart { frame, sign, blend: self.atlas.blend };
        Ok([mk(1.0), mk(-1.0)])
    }
}

/// Completes `pole` to an orthonormal basis of R^4, pole last.
fn orthonormal_frame(pole: [f64; 4]) -> [[f64; 4]; 4] {
    let mut basis: Vec<[f64; 4]> = vec![pole];
    for i in 0..4 {
        let mut v = [0.0; 4];
        v[i] = 1.0;
        for b in &basis {
            let dot: f64 = v.iter().zip(b).map(|(x, y)| x * y).sum();
            for k in 0..4 {
                v[k] -= dot * b[k];
            }
        }
        let nv = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if nv > 1e-6 && basis.len() < 4 {
            basis.push(v.map(|x| x / nv));
        }
    }
    [basis[1], basis[2], basis[3], basis[0]]
}

struct Chart {
    frame: [[f64; 4]; 4],
    // +1 projects from +pole (so the chart misses it), -1 from -pole
    sign: f64,
    blend: f64,
}

fn smooth_step(x: f64) -> f64 {
    if x <= 0.0 { 0.0 } else { (-1.0 / x).exp() }
}

impl Chart {
    fn point(&self, u: &[f64; 3]) -> [f64; 4] {
        let s: f64 = u.iter().map(|x| x * x).sum();
        let mut p = [0.0; 4];
        let h = self.sign * (s - 1.0) / (s + 1.0);
        for k in 0..4 {
            p[k] = self.frame[3][k] * h + (0..3).map(|i| self.frame[i][k] * 2.0 * u[i] / (1.0 + s)).sum::<f64>();
        }
        p
    }

    fn inverse(&self, p: &[f64; 4]) -> [f64; 3] {
        let h: f64 = (0..4).map(|k| p[k] * self.frame[3][k]).sum::<f64>() * self.sign;
        let mut u = [0.0; 3];
        for (i, ui) in u.iter_mut().enumerate() {
            *ui = (0..4).map(|k| p[k] * self.frame[i][k]).sum::<f64>() / (1.0 - h);
        }
        u
    }

    fn tangents(&self, u: &[f64; 3]) -> [[f64; 4]; 3] {
        let s: f64 = u.iter().map(|x| x * x).sum();
        let d = 1.0 + s;
        let mut out = [[0.0; 4]; 3];
        for (i, v) in out.iter_mut().enumerate() {
            for k in 0..4 {
                let mut c = self.sign * 4.0 * u[i] / (d * d) * self.frame[3][k];
                for j in 0..3 {
                    let delta = if i == j { 2.0 / d } else { 0.0 };
                    c += (delta - 4.0 * u[i] * u[j] / (d * d)) * self.frame[j][k];
                }
                v[k] = c;
            }
        }
        out
    }

    /// Partition-of-unity weight of this chart at chart coordinates u.
    fn weight(&self, u: &[f64; 3]) -> f64 {
        let s: f64 = u.iter().map(|x| x * x).sum();
        // height measured towards the pole this chart misses
        let h = (s - 1.0) / (s + 1.0);
        let (a, b) = (smooth_step(self.blend - h), smooth_step(h + self.blend));
        a / (a + b)
    }

    /// (dtheta ^ theta)(d_1 p, d_2 p, d_3 p) for theta = c/2 sum (x dy - y dx).
    fn volume_density(&self, u: &[f64; 3], c: f64) -> f64 {
        let p = self.point(u);
        let v = self.tangents(u);
        // R^4 coordinates ordered (x1, y1, x2, y2)
        let theta = |w: &[f64; 4]| 0.5 * c * (p[0] * w[1] - p[1] * w[0] + p[2] * w[3] - p[3] * w[2]);
        let dtheta = |a: &[f64; 4], b: &[f64; 4]| c * (a[0] * b[1] - a[1] * b[0] + a[2] * b[3] - a[3] * b[2]);
        dtheta(&v[0], &v[1]) * theta(&v[2]) - dtheta(&v[0], &v[2]) * theta(&v[1]) + dtheta(&v[1], &v[2]) * theta(&v[0])
    }

    /// Radius of the chart ball outside which the weight vanishes.
    fn support_radius(&self) -> f64 {
        ((1.0 + self.blend) / (1.0 - self.blend)).sqrt()
    }
}

const CHART_TOL: Tolerance = Tolerance { abs: 1e-14, rel: 1e-12, max_subdivisions: 2000 };

/// int_{S^3} f dtheta ^ theta, oriented so that the volume is positive.
pub fn integrate_density(model: &ContactModel, f: impl Fn(&[f64; 4]) -> f64) -> Result<Estimate<f64>> {
    model.validate()?;
    let charts = model.charts()?;
    let mut total = Estimate::exact(0.0);
    for chart in &charts {
        let orientation = chart.volume_density(&[0.0; 3], model.theta_scale).signum();
        let integrand = |u: &[f64; 3]| {
            let w = chart.weight(u);
            if w == 0.0 {
                return 0.0;
            }
            w * orientation * chart.volume_density(u, model.theta_scale) * f(&chart.point(u))
        };
        total = total.combine(ball_integral(integrand, chart.support_radius())?);
    }
    Ok(total)
}

/// Nested adaptive Gauss-Kronrod over the ball |u| <= radius in spherical coordinates.
fn ball_integral(f: impl Fn(&[f64; 3]) -> f64, radius: f64) -> Result<Estimate<f64>> {
    let failure: RefCell<Option<Error>> = RefCell::new(None);
    let record = |r: Result<Estimate<f64>>| match r {
        Ok(e) => e.value,
        Err(e) => {
            failure.borrow_mut().get_or_insert(e);
            f64::NAN
        }
    };
    let inner_tol = Tolerance::new(CHART_TOL.abs * 0.1, CHART_TOL.rel * 0.1);
    let outer = integrate(
        |r: f64| {
            let polar = integrate(
                |th: f64| {
                    let (st, ct) = th.sin_cos();
                    let az = integrate(
                        |ph: f64| {
                            let (sp, cp) = ph.sin_cos();
                            f(&[r * st * cp, r * st * sp, r * ct])
                        },
                        0.0,
                        2.0 * PI,
                        &[],
                        inner_tol,
                    );
                    record(az) * st
                },
                0.0,
                PI,
                &[],
                inner_tol,
            );
            record(polar) * r * r
        },
        0.0,
        radius,
        &[],
        CHART_TOL,
    );
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    outer
}

/// Vol_theta-type integral int dtheta ^ theta.
pub fn contact_volume(model: &ContactModel) -> Result<Estimate<f64>> {
    integrate_density(model, |_| 1.0)
}

/// int R dtheta ^ theta.
pub fn curvature_integral(model: &ContactModel) -> Result<Estimate<f64>> {
    integrate_density(model, |p| model.curvature.at(p))
}

/// Heat-side universal constants: A_0 = gamma0 int dtheta^n ^ theta and
/// A_2 = gamma1_prime int R dtheta^n ^ theta. `intermediate` holds the
/// per-volume constants for 2 < k < 2n, which have no closed form.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HeatGammaRegistry {
    pub n: u32,
    pub gamma0: f64,
    pub gamma1_prime: f64,
    pub intermediate: BTreeMap<u32, f64>,
}

impl HeatGammaRegistry {
    pub fn new(n: u32, gamma0: f64, gamma1_prime: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::Domain("n must be positive".into()));
        }
        if !(gamma0 > 0.0) || !(gamma1_prime > 0.0) {
            return Err(Error::Domain(format!("heat constants must be positive, got ({gamma0}, {gamma1_prime})")));
        }
        Ok(HeatGammaRegistry { n, gamma0, gamma1_prime, intermediate: BTreeMap::new() })
    }

    /// gamma_{10} = 1/16, gamma'_{11} = 1/64.
    pub fn s3() -> Self {
        HeatGammaRegistry { n: 1, gamma0: 1.0 / 16.0, gamma1_prime: 1.0 / 64.0, intermediate: BTreeMap::new() }
    }

    /// c_n^{2n+2} = 4(n+1) / gamma0.
    pub fn length_element_power(&self) -> f64 {
        4.0 * (self.n as f64 + 1.0) / self.gamma0
    }

    pub fn length_element_constant(&self) -> f64 {
        self.length_element_power().powf(1.0 / (2.0 * self.n as f64 + 2.0))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HeatGammas {
    pub gamma0: f64,
    pub gamma1_prime: f64,
}

pub fn gamma_from_heat(a0: f64, a2: f64, model: &ContactModel) -> Result<HeatGammas> {
    let vol = contact_volume(model)?.value;
    let curv = curvature_integral(model)?.value;
    if vol.abs() < 1e-300 || curv.abs() < 1e-300 {
        return Err(Error::Domain(format!("cannot invert heat coefficients: volume {vol}, curvature integral {curv}")));
    }
    Ok(HeatGammas { gamma0: a0 / vol, gamma1_prime: a2 / curv })
}

/// gamma''_1 = c_1^2 gamma'_11 / 8 = gamma'_11 / sqrt(8 gamma_10).
pub fn area_constant(gammas: &HeatGammas) -> Result<f64> {
    if !(gammas.gamma0 > 0.0) {
        return Err(Error::Domain(format!("gamma0 must be positive, got {}", gammas.gamma0)));
    }
    Ok(gammas.gamma1_prime / (8.0 * gammas.gamma0).sqrt())
}

pub fn lower_volume_vanishes(k: u32) -> bool {
    k % 2 == 1
}

/// Vol^{(k)} = c_n^k / (4(n+1)) Gamma(k/2)^{-1} int gamma~_{nk} dtheta^n ^ theta, with
/// c_n from the heat side and gamma~_{n,2n+2} = gamma0, gamma~_{n,2n} = gamma1_prime R.
pub fn lower_volume(reg: &HeatGammaRegistry, model: &ContactModel, k: u32) -> Result<f64> {
    let n = reg.n;
    if k == 0 || k > 2 * n + 2 {
        return Err(Error::Domain(format!("lower volume order must lie in 1..={}, got {k}", 2 * n + 2)));
    }
    if lower_volume_vanishes(k) {
        return Ok(0.0);
    }
    if k != 2 * n + 2 && k != 2 * n && !reg.intermediate.contains_key(&k) {
        return Err(Error::UnknownConstant(format!("gamma~_{{{n},{k}}} is not in the registry")));
    }
    if model.n != n {
        return Err(Error::Precondition(format!("registry is for n = {n}, model has n = {}", model.n)));
    }
    let prefactor = reg.length_element_power().powf(k as f64 / (2.0 * n as f64 + 2.0))
        / (4.0 * (n as f64 + 1.0))
        / gamma(k as f64 / 2.0);
    let integral = if k == 2 * n + 2 {
        reg.gamma0 * contact_volume(model)?.value
    } else if k == 2 * n {
        reg.gamma1_prime * curvature_integral(model)?.value
    } else {
        reg.intermediate[&k] * contact_volume(model)?.value
    };
    Ok(prefactor * integral)
}

/// Area = (1 / (32 sqrt 2)) int R dtheta ^ theta on a 3-manifold.
pub fn area_dim3(model: &ContactModel) -> Result<f64> {
    if model.dim() != 3 {
        return Err(Error::Precondition(format!("area formula needs dim M = 3, got {}", model.dim())));
    }
    Ok(curvature_integral(model)?.value / (32.0 * 2f64.sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn charts_are_inverse_and_on_sphere() {
        let m = ContactModel::s3_standard().with_atlas(Atlas { pole: [1.0, 0.5, -0.2, 0.3], blend: 0.4 });
        for chart in m.charts().unwrap() {
            let u = [0.3, -0.7, 0.2];
            let p = chart.point(&u);
            assert_relative_eq!(p.iter().map(|x| x * x).sum::<f64>(), 1.0, epsilon = 1e-14);
            let back = chart.inverse(&p);
            for i in 0..3 {
                assert_relative_eq!(back[i], u[i], epsilon = 1e-13);
            }
            // tangents against central differences
            let v = chart.tangents(&u);
            let h = 1e-6;
            for i in 0..3 {
                let (mut a, mut b) = (u, u);
                a[i] += h;
                b[i] -= h;
                let (pa, pb) = (chart.point(&a), chart.point(&b));
                for k in 0..4 {
                    assert_relative_eq!((pa[k] - pb[k]) / (2.0 * h), v[i][k], epsilon = 1e-8);
                }
            }
        }
    }

    #[test]
    fn standard_volume() {
        let v = contact_volume(&ContactModel::s3_standard()).unwrap();
        assert_relative_eq!(v.value, PI * PI, max_relative = 1e-10);
    }

    #[test]
    fn invalid_models() {
        let bad = ContactModel::s3_standard().with_atlas(Atlas { pole: [0.0, 0.0, 0.0, 1.0], blend: 1.2 });
        assert!(matches!(contact_volume(&bad), Err(Error::Config(_))));
        let mut n2 = ContactModel::s3_standard();
        n2.n = 2;
        assert!(matches!(contact_volume(&n2), Err(Error::Precondition(_))));
        let degenerate = ContactModel::s3_standard().with_theta_scale(0.0);
        assert!(matches!(contact_volume(&degenerate), Err(Error::Config(_))));
    }

    #[test]
    fn lower_volume_cases() {
        let reg = HeatGammaRegistry::s3();
        let m = ContactModel::s3_standard();
        assert_eq!(lower_volume(&reg, &m, 3).unwrap(), 0.0);
        assert_eq!(lower_volume(&reg, &m, 1).unwrap(), 0.0);
        assert!(matches!(lower_volume(&reg, &m, 6), Err(Error::Domain(_))));
        let reg2 = HeatGammaRegistry::new(2, 0.1, 0.2).unwrap();
        assert!(matches!(lower_volume(&reg2, &m, 2), Err(Error::UnknownConstant(_))));
    }
}

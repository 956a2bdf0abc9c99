use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;

use crate::aniso::GradedSpace;
use crate::error::{Error, Result};

pub type Boundary = Arc<dyn Fn(&[f64]) -> Complex64 + Send + Sync>;

/// A function p on R^{d+1} minus the origin with p(t.xi) = t^m p(xi), stored
/// through its values on the unit pseudo-sphere.
#[derive(Clone)]
pub struct HomogeneousSymbol {
    space: GradedSpace,
    degree: Complex64,
    boundary: Boundary,
    label: String,
}

impl fmt::Debug for HomogeneousSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("HomogeneousSymbol")
            .field("label", &self.label)
            .field("d", &self.space.d())
            .field("degree", &self.degree)
            .finish()
    }
}

impl HomogeneousSymbol {
    pub fn new(space: GradedSpace, degree: Complex64, boundary: Boundary, label: impl Into<String>) -> Result<Self> {
        if !(degree.re.is_finite() && degree.im.is_finite()) {
            return Err(Error::Domain(format!("degree must be finite, got {degree}")));
        }
        Ok(HomogeneousSymbol { space, degree, boundary, label: label.into() })
    }

    /// |xi|^m.
    pub fn koranyi_power(space: GradedSpace, m: Complex64) -> Result<Self> {
        Self::new(space, m, Arc::new(|_| Complex64::new(1.0, 0.0)), format!("koranyi-power:{}", fmt_degree(m)))
    }

    /// xi_j |xi|^{m-1}, odd under xi -> -xi.
    pub fn odd(space: GradedSpace, m: Complex64, axis: usize) -> Result<Self> {
        if axis == 0 || axis > space.d() {
            return Err(Error::Domain(format!("odd symbol axis must be in 1..={}, got {axis}", space.d())));
        }
        Self::new(
            space,
            m,
            Arc::new(move |t: &[f64]| Complex64::new(t[axis], 0.0)),
            format!("odd{axis}:{}", fmt_degree(m)),
        )
    }

    /// Even boundary profile exp(-theta_0^2) (1 + theta_1^2).
    pub fn gauss_tapered(space: GradedSpace, m: Complex64) -> Result<Self> {
        Self::new(
            space,
            m,
            Arc::new(|t: &[f64]| Complex64::new((-t[0] * t[0]).exp() * (1.0 + t[1] * t[1]), 0.0)),
            format!("gauss-tapered:{}", fmt_degree(m)),
        )
    }

    /// Parses `koranyi-power:<m>`, `odd<j>:<m>` or `gauss-tapered:<m>`.
    pub fn parse(space: GradedSpace, text: &str) -> Result<Self> {
        let (name, degree) = text
            .split_once(':')
            .ok_or_else(|| Error::Parse(format!("symbol `{text}` must have the form <name>:<degree>")))?;
        let m = parse_degree(degree)?;
        match name {
            "koranyi-power" => Self::koranyi_power(space, m),
            "gauss-tapered" => Self::gauss_tapered(space, m),
            _ if name.starts_with("odd") => {
                let axis: usize = name[3..]
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad odd symbol axis in `{text}`")))?;
                Self::odd(space, m, axis)
            }
            _ => Err(Error::Parse(format!("unknown symbol `{name}`"))),
        }
    }

    pub fn space(&self) -> &GradedSpace {
        &self.space
    }

    pub fn degree(&self) -> Complex64 {
        self.degree
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn boundary_value(&self, theta: &[f64]) -> Complex64 {
        (self.boundary)(theta)
    }

    pub fn eval(&self, xi: &[f64]) -> Result<Complex64> {
        let r = self.space.pseudo_norm(xi)?;
        if r == 0.0 {
            return Err(Error::Domain("homogeneous symbols are not evaluated at the origin".into()));
        }
        let theta = self.space.dilate_unchecked(1.0 / r, xi);
        Ok(Complex64::new(r, 0.0).powc(self.degree) * self.boundary_value(&theta))
    }

    /// |xi|^z p, which has the same boundary values and degree m + z.
    pub fn shifted(&self, z: Complex64) -> Self {
        HomogeneousSymbol {
            space: self.space,
            degree: self.degree + z,
            boundary: self.boundary.clone(),
            label: format!("{}*|xi|^{}", self.label, fmt_degree(z)),
        }
    }

    pub fn scaled(&self, c: Complex64) -> Self {
        let b = self.boundary.clone();
        HomogeneousSymbol {
            space: self.space,
            degree: self.degree,
            boundary: Arc::new(move |t: &[f64]| c * b(t)),
            label: format!("{}*({})", self.label, c),
        }
    }
}

fn fmt_degree(m: Complex64) -> String {
    if m.im == 0.0 { format!("{}", m.re) } else { format!("{}{:+}i", m.re, m.im) }
}

/// Accepts `-4.5`, or `-4.5+0.25i` for complex degrees.
pub fn parse_degree(text: &str) -> Result<Complex64> {
    let t = text.trim();
    if let Ok(v) = t.parse::<f64>() {
        return Ok(Complex64::new(v, 0.0));
    }
    if let Some(body) = t.strip_suffix('i') {
        let split = body
            .char_indices()
            .skip(1)
            .filter(|&(i, c)| (c == '+' || c == '-') && !matches!(body.as_bytes()[i - 1], b'e' | b'E'))
            .map(|(i, _)| i)
            .last();
        if let Some(i) = split {
            let re = body[..i].parse::<f64>();
            let im = body[i..].parse::<f64>();
            if let (Ok(re), Ok(im)) = (re, im) {
                return Ok(Complex64::new(re, im));
            }
        }
    }
    Err(Error::Parse(format!("cannot parse degree `{text}`")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn homogeneity() {
        let s = GradedSpace::new(2).unwrap();
        let p = HomogeneousSymbol::gauss_tapered(s, Complex64::new(-3.3, 0.4)).unwrap();
        let xi = [0.3, -1.2, 0.7];
        let t = 2.7;
        let lhs = p.eval(&s.dilate(t, &xi).unwrap()).unwrap();
        let rhs = Complex64::new(t, 0.0).powc(p.degree()) * p.eval(&xi).unwrap();
        assert!((lhs - rhs).norm() < 1e-13 * rhs.norm());
    }

    #[test]
    fn parsing() {
        let s = GradedSpace::new(2).unwrap();
        assert_eq!(HomogeneousSymbol::parse(s, "odd1:-4").unwrap().degree(), Complex64::new(-4.0, 0.0));
        assert_eq!(parse_degree("-4.5+0.25i").unwrap(), Complex64::new(-4.5, 0.25));
        assert_eq!(parse_degree("1e-3-2i").unwrap(), Complex64::new(1e-3, -2.0));
        assert!(HomogeneousSymbol::parse(s, "odd3:-4").is_err());
        assert!(HomogeneousSymbol::parse(s, "bogus:-4").is_err());
    }
}

//! Heat-trace coefficients, the zeta-function singularities they determine,
//! Weyl asymptotics and the index as a difference of heat invariants.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use statrs::function::gamma::gamma;

use crate::error::{Error, Result};
use crate::quadrature::{integrate, Estimate, Tolerance};

/// Tr e^{-tP} ~ sum_j a_j t^{(j-Q)/m} + sum_{k>=1} b_k t^k log t as t -> 0+.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HeatExpansion {
    pub m: u32,
    pub q: u32,
    pub a: BTreeMap<u32, f64>,
    pub b: BTreeMap<u32, f64>,
    pub dim_ker: u64,
    pub differential: bool,
}

impl HeatExpansion {
    pub fn new(m: u32, q: u32, dim_ker: u64) -> Result<Self> {
        if m == 0 {
            return Err(Error::Domain("operator order must be positive".into()));
        }
        Ok(HeatExpansion { m, q, a: BTreeMap::new(), b: BTreeMap::new(), dim_ker, differential: false })
    }

    pub fn with_a(mut self, j: u32, value: f64) -> Self {
        if !(self.differential && j % 2 == 1) {
            self.a.insert(j, value);
        }
        self
    }

    pub fn with_b(mut self, k: u32, value: f64) -> Self {
        if !self.differential && k >= 1 {
            self.b.insert(k, value);
        }
        self
    }

    /// Differential operators have a_{2j-1} = b_j = 0.
    pub fn differential(mut self) -> Self {
        self.differential = true;
        self.a.retain(|j, _| j % 2 == 0);
        self.b.clear();
        self
    }

    pub fn a_coeff(&self, j: u32) -> Option<f64> {
        if self.differential && j % 2 == 1 {
            return Some(0.0);
        }
        self.a.get(&j).copied()
    }

    pub fn b_coeff(&self, k: u32) -> Option<f64> {
        if self.differential {
            return Some(0.0);
        }
        self.b.get(&k).copied()
    }

    pub fn power(&self, j: u32) -> f64 {
        (j as f64 - self.q as f64) / self.m as f64
    }

    /// The truncated expansion evaluated at t.
    pub fn synthesize(&self, t: f64) -> f64 {
        let mut v: f64 = self.a.iter().map(|(&j, &a)| a * t.powf(self.power(j))).sum();
        v += self.b.iter().map(|(&k, &b)| b * t.powi(k as i32) * t.ln()).sum::<f64>();
        v
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SingularityKind {
    SimplePole,
    RegularValue,
}

/// A pole residue or regular value of zeta(P; s) at a rational point; `value`
/// is None when the heat coefficient it depends on is not known.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ZetaSingularity {
    pub numerator: i64,
    pub denominator: u32,
    pub sigma: f64,
    pub kind: SingularityKind,
    pub value: Option<f64>,
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 { a } else { gcd(b, a % b) }
}

fn factorial(k: u32) -> f64 {
    (1..=k).map(f64::from).product()
}

/// Poles and regular values of zeta(P; s) = Tr P^{-s} at sigma_j = (Q - j)/m >= floor.
pub fn heat_to_zeta(h: &HeatExpansion, floor: f64) -> Vec<ZetaSingularity> {
    let mut out = Vec::new();
    let (q, m) = (h.q as i64, h.m as i64);
    let mut j: u32 = 0;
    loop {
        let num = q - j as i64;
        let sigma = num as f64 / m as f64;
        if sigma < floor {
            break;
        }
        let g = gcd(num.unsigned_abs(), m as u64) as i64;
        let (numerator, denominator) = (num / g, (m / g) as u32);
        let at = |kind, value| ZetaSingularity { numerator, denominator, sigma, kind, value };
        if denominator == 1 && numerator <= 0 {
            let k = (-numerator) as u32;
            if k == 0 {
                let value = h.a_coeff(j).map(|a| a - h.dim_ker as f64);
                out.push(at(SingularityKind::RegularValue, value));
            } else {
                let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                let residue = h.b_coeff(k).map(|b| -sign * factorial(k) * b);
                out.push(at(SingularityKind::SimplePole, residue));
                let value = h.a_coeff(j).map(|a| sign * factorial(k) * a);
                out.push(at(SingularityKind::RegularValue, value));
            }
        } else {
            let residue = h.a_coeff(j).map(|a| a / gamma(sigma));
            out.push(at(SingularityKind::SimplePole, residue));
        }
        j += 1;
    }
    out
}

/// Res P^{-sigma} from Res_{s=sigma} zeta(P; s).
pub fn zeta_res_to_ncres(residue_at_sigma: f64, m: u32) -> Result<f64> {
    if m == 0 {
        return Err(Error::Domain("operator order must be positive".into()));
    }
    Ok(m as f64 * residue_at_sigma)
}

#[derive(Debug, Clone, Copy)]
pub struct HeatFitOptions {
    pub t_min: f64,
    pub t_max: f64,
    pub points_per_decade: usize,
    pub log_terms: bool,
}

impl Default for HeatFitOptions {
    fn default() -> Self {
        HeatFitOptions { t_min: 1e-3, t_max: 1e-1, points_per_decade: 40, log_terms: false }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct HeatFit {
    pub expansion: HeatExpansion,
    pub max_relative_residual: f64,
    pub rms_relative_residual: f64,
    /// Ratio of the extreme diagonal entries of R in the scaled QR factorization.
    pub conditioning: f64,
    pub grid_points: usize,
}

pub const MAX_DEPTH: u32 = 6;
pub const DEFAULT_DEPTH: u32 = 6;

pub fn geometric_grid(opts: &HeatFitOptions) -> Result<Vec<f64>> {
    if !(opts.t_min > 0.0 && opts.t_max > opts.t_min) || opts.points_per_decade == 0 {
        return Err(Error::Config(format!("invalid fitting window [{}, {}]", opts.t_min, opts.t_max)));
    }
    let decades = (opts.t_max / opts.t_min).log10();
    let n = (decades * opts.points_per_decade as f64).round().max(1.0) as usize;
    let ratio = (opts.t_max / opts.t_min).ln() / n as f64;
    Ok((0..=n).map(|i| opts.t_min * (ratio * i as f64).exp()).collect())
}

/// Least-squares fit of a_j, 0 <= j <= m * depth (and b_k, 1 <= k <= depth when
/// log terms are enabled) to trace samples on a geometric grid.
pub fn extract_heat(trace: impl Fn(f64) -> f64, m: u32, q: u32, depth: u32, opts: &HeatFitOptions) -> Result<HeatFit> {
    let grid = geometric_grid(opts)?;
    let samples: Vec<(f64, f64)> = grid.iter().map(|&t| (t, trace(t))).collect();
    extract_heat_from_samples(&samples, m, q, depth, opts.log_terms)
}

pub fn extract_heat_from_samples(samples: &[(f64, f64)], m: u32, q: u32, depth: u32, log_terms: bool) -> Result<HeatFit> {
    if m == 0 {
        return Err(Error::Domain("operator order must be positive".into()));
    }
    if depth == 0 || depth > MAX_DEPTH {
        return Err(Error::Precondition(format!("fit depth must lie in 1..={MAX_DEPTH}, got {depth}")));
    }
    if let Some(&(t, v)) = samples.iter().find(|(t, v)| !(t.is_finite() && *t > 0.0 && v.is_finite())) {
        return Err(Error::Precondition(format!("heat trace is not finite at t = {t} (value {v})")));
    }
    let h = HeatExpansion::new(m, q, 0)?;
    let mut columns: Vec<Box<dyn Fn(f64) -> f64>> = Vec::new();
    let mut labels = Vec::new();
    for j in 0..=m * depth {
        let p = h.power(j);
        columns.push(Box::new(move |t: f64| t.powf(p)));
        labels.push((false, j));
    }
    if log_terms {
        for k in 1..=depth {
            columns.push(Box::new(move |t: f64| t.powi(k as i32) * t.ln()));
            labels.push((true, k));
        }
    }
    let rows = samples.len();
    let cols = columns.len();
    if rows < cols {
        return Err(Error::Precondition(format!("{rows} samples cannot determine {cols} coefficients")));
    }
    let weights: Vec<f64> = samples.iter().map(|&(_, v)| 1.0 / v.abs().max(f64::MIN_POSITIVE)).collect();
    let mut design = DMatrix::from_fn(rows, cols, |i, j| columns[j](samples[i].0) * weights[i]);
    let rhs = DVector::from_iterator(rows, samples.iter().zip(&weights).map(|(&(_, v), &w)| v * w));
    let scales: Vec<f64> = (0..cols).map(|j| design.column(j).norm()).collect();
    for (j, &s) in scales.iter().enumerate() {
        if s == 0.0 {
            return Err(Error::numerical(format!("basis column {j} vanishes on the grid"), 0.0, 0.0));
        }
        design.column_mut(j).scale_mut(1.0 / s);
    }
    let qr = design.clone().qr();
    let r = qr.r();
    let diag: Vec<f64> = (0..cols).map(|i| r[(i, i)].abs()).collect();
    let conditioning = diag.iter().cloned().fold(0.0, f64::max) / diag.iter().cloned().fold(f64::INFINITY, f64::min);
    if !(conditioning < 1e14) {
        return Err(Error::numerical("heat fit design matrix is rank deficient", conditioning, 1e14));
    }
    let qtb = qr.q().transpose() * &rhs;
    let coef = r
        .solve_upper_triangular(&qtb)
        .ok_or_else(|| Error::numerical("triangular solve failed", conditioning, 1e14))?;
    let fitted = &design * &coef;
    let residuals: Vec<f64> = (0..rows).map(|i| (fitted[i] - rhs[i]).abs()).collect();
    let max_relative_residual = residuals.iter().cloned().fold(0.0, f64::max);
    let rms_relative_residual = (residuals.iter().map(|r| r * r).sum::<f64>() / rows as f64).sqrt();

    let mut expansion = h;
    for (idx, &(is_log, j)) in labels.iter().enumerate() {
        let v = coef[idx] / scales[idx];
        if is_log {
            expansion.b.insert(j, v);
        } else {
            expansion.a.insert(j, v);
        }
    }
    Ok(HeatFit { expansion, max_relative_residual, rms_relative_residual, conditioning, grid_points: rows })
}

/// Reads `t,value` rows; a non-numeric first row is taken as a header.
pub fn parse_trace_csv(text: &str) -> Result<Vec<(f64, f64)>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut out = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::Parse(format!("trace CSV: {e}")))?;
        if record.len() != 2 {
            return Err(Error::Parse(format!("trace CSV row {} needs two columns", i + 1)));
        }
        let parsed = (record[0].parse::<f64>(), record[1].parse::<f64>());
        match parsed {
            (Ok(t), Ok(v)) => out.push((t, v)),
            _ if i == 0 => continue,
            _ => return Err(Error::Parse(format!("trace CSV row {} is not numeric", i + 1))),
        }
    }
    if out.is_empty() {
        return Err(Error::Parse("trace CSV has no data rows".into()));
    }
    Ok(out)
}

/// Built-in heat traces.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HeatModel {
    /// Horizontal sublaplacian on functions of the standard S^3 (m = 2, Q = 4):
    /// Tr e^{-t Delta_b} = e^t pi^2 / (16 t^2) up to O(t^inf).
    S3Sublaplacian,
}

impl HeatModel {
    pub fn by_name(name: &str) -> Result<Self> {
        match name {
            "s3-sublaplacian" => Ok(HeatModel::S3Sublaplacian),
            _ => Err(Error::Config(format!("unknown heat model `{name}`"))),
        }
    }

    pub fn name(&self) -> &'static str {
        "s3-sublaplacian"
    }

    pub fn order(&self) -> u32 {
        2
    }

    pub fn homogeneous_dimension(&self) -> u32 {
        4
    }

    pub fn trace(&self, t: f64) -> f64 {
        let pi2 = std::f64::consts::PI * std::f64::consts::PI;
        t.exp() * pi2 / (16.0 * t * t)
    }
}

const MELLIN_STEPS: [f64; 5] = [0.2, 0.1, 0.05, 0.025, 0.0125];

/// Res_{s=sigma} zeta at the rightmost pole from the Mellin transform
/// Gamma(s)^{-1} int_0^1 t^{s-1} Tr e^{-tP} dt, using
/// eps int_0^1 t^{sigma+eps-1} f(t) dt = int_0^1 [t^sigma f(t)]_{t = u^{1/eps}} du
/// and polynomial extrapolation eps -> 0.
pub fn mellin_leading_residue(trace: impl Fn(f64) -> f64, sigma: f64) -> Result<Estimate<f64>> {
    if !(sigma > 0.0) {
        return Err(Error::Domain(format!("the leading pole must lie at sigma > 0, got {sigma}")));
    }
    const T_FLOOR: f64 = 1e-100;
    let mut values = Vec::with_capacity(MELLIN_STEPS.len());
    let mut evaluations = 0;
    for &eps in &MELLIN_STEPS {
        let est = integrate(
            |u: f64| {
                let t = u.powf(1.0 / eps).max(T_FLOOR);
                t.powf(sigma) * trace(t)
            },
            0.0,
            1.0,
            &[0.5, 0.9, 0.99],
            Tolerance::new(1e-14, 1e-13),
        )?;
        evaluations += est.evaluations;
        values.push(est.value);
    }
    let full = neville_at_zero(&MELLIN_STEPS, &values);
    let reduced = neville_at_zero(&MELLIN_STEPS[1..], &values[1..]);
    let g = gamma(sigma);
    Ok(Estimate { value: full / g, error: (full - reduced).abs() / g, evaluations })
}

fn neville_at_zero(xs: &[f64], ys: &[f64]) -> f64 {
    let mut p = ys.to_vec();
    let n = xs.len();
    for level in 1..n {
        for i in 0..n - level {
            let (xi, xj) = (xs[i], xs[i + level]);
            p[i] = (xj * p[i] - xi * p[i + 1]) / (xj - xi);
        }
    }
    p[0]
}

/// nu_0 = Res P^{-Q/m} / Q.
pub fn weyl_nu0(res_critical: f64, q: u32) -> Result<f64> {
    if q == 0 {
        return Err(Error::Domain("homogeneous dimension must be positive".into()));
    }
    Ok(res_critical / q as f64)
}

/// Ascending positive eigenvalues lambda_1 <= lambda_2 <= ... of an operator of order m.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumSample {
    eigenvalues: Vec<f64>,
}

pub const MIN_WEYL_SAMPLE: usize = 100;

impl SpectrumSample {
    pub fn new(eigenvalues: Vec<f64>) -> Result<Self> {
        if let Some(v) = eigenvalues.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
            return Err(Error::Domain(format!("eigenvalues must be positive and finite, got {v}")));
        }
        if eigenvalues.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::Domain("eigenvalues must be listed in non-decreasing order".into()));
        }
        Ok(SpectrumSample { eigenvalues })
    }

    /// One decimal per line; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut values = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let body = line.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let v: f64 = body
                .parse()
                .map_err(|_| Error::Parse(format!("line {}: `{body}` is not a number", i + 1)))?;
            values.push(v);
        }
        Self::new(values)
    }

    /// lambda_k = (k / nu_0)^{m/Q}, k = 1..=count.
    pub fn exact_weyl(nu0: f64, m: u32, q: u32, count: usize) -> Result<Self> {
        if !(nu0 > 0.0) {
            return Err(Error::Domain(format!("nu_0 must be positive, got {nu0}")));
        }
        let e = m as f64 / q as f64;
        Self::new((1..=count).map(|k| (k as f64 / nu0).powf(e)).collect())
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct WeylFit {
    pub nu0: f64,
    pub exponent: f64,
    pub points_used: usize,
    pub r_squared: f64,
}

/// Regresses log lambda_k on log k over the upper half of the sample; with
/// lambda_k ~ (k / nu_0)^e the slope is e and nu_0 = exp(-intercept / e).
pub fn weyl_fit(sample: &SpectrumSample) -> Result<WeylFit> {
    let n = sample.len();
    if n < MIN_WEYL_SAMPLE {
        return Err(Error::Precondition(format!("Weyl fit needs at least {MIN_WEYL_SAMPLE} eigenvalues, got {n}")));
    }
    let start = n / 2;
    let pts: Vec<(f64, f64)> = (start..n)
        .map(|i| (((i + 1) as f64).ln(), sample.eigenvalues[i].ln()))
        .collect();
    let len = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / len;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / len;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    let slope = sxy / sxx;
    if !(slope > 0.0) {
        return Err(Error::numerical("eigenvalues do not grow; Weyl exponent undefined", slope, 0.0));
    }
    let intercept = my - slope * mx;
    let r_squared = if syy > 0.0 { sxy * sxy / (sxx * syy) } else { 1.0 };
    Ok(WeylFit { nu0: (-intercept / slope).exp(), exponent: slope, points_used: pts.len(), r_squared })
}

/// ind D = int str a_Q(D^2) = plus - minus.
pub fn index_value(plus_density_integral: f64, minus_density_integral: f64) -> f64 {
    plus_density_integral - minus_density_integral
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    #[test]
    fn s3_dictionary() {
        let pi2 = PI * PI;
        let h = HeatExpansion::new(2, 4, 1)
            .unwrap()
            .with_a(0, pi2 / 16.0)
            .with_a(2, pi2 / 16.0)
            .with_a(4, pi2 / 32.0)
            .differential();
        let z = heat_to_zeta(&h, 0.0);
        assert_eq!(z[0].sigma, 2.0);
        assert_relative_eq!(z[0].value.unwrap(), pi2 / 16.0);
        assert_eq!(z[1].value, Some(0.0));
        assert_eq!((z[1].numerator, z[1].denominator), (3, 2));
        assert_relative_eq!(z[2].value.unwrap(), pi2 / 16.0);
        let last = z.last().unwrap();
        assert_eq!(last.kind, SingularityKind::RegularValue);
        assert_relative_eq!(last.value.unwrap(), pi2 / 32.0 - 1.0);
    }

    #[test]
    fn missing_coefficients_are_unknown() {
        let h = HeatExpansion::new(2, 4, 0).unwrap().with_a(0, 1.0);
        let z = heat_to_zeta(&h, -1.0);
        assert!(z.iter().skip(1).all(|s| s.value.is_none()));
        // s = -1 carries both a pole (b_1) and a regular value (a_6)
        let at_minus_one: Vec<_> = z.iter().filter(|s| s.sigma == -1.0).collect();
        assert_eq!(at_minus_one.len(), 2);
    }

    #[test]
    fn negative_integer_points() {
        let h = HeatExpansion::new(1, 1, 0).unwrap().with_a(3, 5.0).with_b(2, 7.0);
        let z = heat_to_zeta(&h, -2.0);
        let pole = z.iter().find(|s| s.sigma == -2.0 && s.kind == SingularityKind::SimplePole).unwrap();
        assert_relative_eq!(pole.value.unwrap(), -2.0 * 7.0);
        let reg = z.iter().find(|s| s.sigma == -2.0 && s.kind == SingularityKind::RegularValue).unwrap();
        assert_relative_eq!(reg.value.unwrap(), 2.0 * 5.0);
        let reg1 = z.iter().find(|s| s.sigma == -1.0 && s.kind == SingularityKind::RegularValue);
        assert!(reg1.unwrap().value.is_none());
    }

    #[test]
    fn pure_power_trace() {
        let fit = extract_heat(|t| t.powi(-2), 2, 4, 5, &HeatFitOptions::default()).unwrap();
        assert_relative_eq!(fit.expansion.a[&0], 1.0, max_relative = 1e-10);
        assert!(fit.expansion.a.iter().skip(1).all(|(_, v)| v.abs() < 1e-5));
    }

    #[test]
    fn depth_limit() {
        assert!(matches!(
            extract_heat(|t| 1.0 / t, 2, 4, 7, &HeatFitOptions::default()),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn spectrum_parsing() {
        let s = SpectrumSample::parse("# header\n1.0\n2.5 # trailing\n\n3\n").unwrap();
        assert_eq!(s.eigenvalues(), &[1.0, 2.5, 3.0]);
        assert!(SpectrumSample::parse("2\n1\n").is_err());
        assert!(SpectrumSample::parse("1\nx\n").is_err());
    }

    #[test]
    fn csv_trace() {
        let rows = parse_trace_csv("t,value\n0.1, 2.0\n0.2,3.0\n").unwrap();
        assert_eq!(rows, vec![(0.1, 2.0), (0.2, 3.0)]);
    }

    #[test]
    fn index_arithmetic() {
        assert_eq!(index_value(5.0, 3.0), 2.0);
        assert_eq!(index_value(1.5, 1.5), 0.0);
    }
}

//! One-dimensional quadrature: adaptive Gauss-Kronrod, double-exponential
//! rules for endpoint singularities and half lines, and cached Gauss-Legendre
//! nodes for fixed product rules.

use std::collections::BinaryHeap;
use std::cmp::Ordering;
use std::num::NonZeroUsize;
use std::ops::{Add, Mul, Sub};
use std::sync::{Mutex, OnceLock};
use std::collections::HashMap;

use gauss_quad::GaussLegendre;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Values a quadrature rule can accumulate.
pub trait QuadValue:
    Copy + Send + Sync + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self>
{
    fn zero() -> Self;
    fn magnitude(&self) -> f64;
    fn is_finite_value(&self) -> bool;
}

impl QuadValue for f64 {
    fn zero() -> Self {
        0.0
    }
    fn magnitude(&self) -> f64 {
        self.abs()
    }
    fn is_finite_value(&self) -> bool {
        self.is_finite()
    }
}

impl QuadValue for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn magnitude(&self) -> f64 {
        self.norm()
    }
    fn is_finite_value(&self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }
}

/// An integral value with its estimated absolute error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate<V> {
    pub value: V,
    pub error: f64,
    pub evaluations: usize,
}

impl<V: QuadValue> Estimate<V> {
    pub fn exact(value: V) -> Self {
        Estimate { value, error: 0.0, evaluations: 0 }
    }

    pub fn combine(self, other: Estimate<V>) -> Self {
        Estimate {
            value: self.value + other.value,
            error: self.error + other.error,
            evaluations: self.evaluations + other.evaluations,
        }
    }

    pub fn scale(self, s: f64) -> Self {
        Estimate {
            value: self.value * s,
            error: self.error * s.abs(),
            evaluations: self.evaluations,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
    pub max_subdivisions: usize,
}

impl Tolerance {
    pub fn new(abs: f64, rel: f64) -> Self {
        Tolerance { abs, rel, max_subdivisions: 2000 }
    }

    pub fn with_max_subdivisions(mut self, n: usize) -> Self {
        self.max_subdivisions = n;
        self
    }

    fn target(&self, value: f64) -> f64 {
        self.abs.max(self.rel * value.abs())
    }
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance::new(1e-13, 1e-11)
    }
}

const XGK: [f64; 11] = [
    0.995657163025808080735527280689003,
    0.973906528517171720077964012084452,
    0.930157491355708226001207180059508,
    0.865063366688984510732096688423493,
    0.780817726586416897063717578345042,
    0.679409568299024406234327365114874,
    0.562757134668604683339000099272694,
    0.433395394129247190799265943165784,
    0.294392862701460198131126603103866,
    0.148874338981631210884826001129720,
    0.000000000000000000000000000000000,
];

const WGK: [f64; 11] = [
    0.011694638867371874278064396062192,
    0.032558162307964727478818972459390,
    0.054755896574351996031381300244580,
    0.075039674810919952767043140916190,
    0.093125454583697605535065465083366,
    0.109387158802297641899210590325805,
    0.123491976262065851077958109831074,
    0.134709217311473325928054001771707,
    0.142775938577060080797094273138717,
    0.147739104901338491374841515972068,
    0.149445554002916905664936468389821,
];

const WG: [f64; 5] = [
    0.066671344308688137593568809893332,
    0.149451349150580593145776339657697,
    0.219086362515982043995534934228163,
    0.269266719309996355091226921569469,
    0.295524224714752870173892994651338,
];

struct Panel<V> {
    a: f64,
    b: f64,
    value: V,
    error: f64,
    abs_integral: f64,
}

impl<V> PartialEq for Panel<V> {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl<V> Eq for Panel<V> {}
impl<V> PartialOrd for Panel<V> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<V> Ord for Panel<V> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn gk21<V: QuadValue, F: Fn(f64) -> V>(f: &F, a: f64, b: f64) -> Panel<V> {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[10];
    let mut gauss = V::zero();
    let mut abs_sum = fc.magnitude() * WGK[10];
    for j in 0..10 {
        let x = half * XGK[j];
        let f1 = f(center - x);
        let f2 = f(center + x);
        let pair = f1 + f2;
        kronrod = kronrod + pair * WGK[j];
        abs_sum += WGK[j] * (f1.magnitude() + f2.magnitude());
        if j % 2 == 1 {
            gauss = gauss + pair * WG[j / 2];
        }
    }
    let value = kronrod * half;
    let diff = (kronrod - gauss).magnitude() * half.abs();
    let abs_integral = abs_sum * half.abs();
    // QUADPACK error heuristic
    let mut error = diff;
    if diff > 0.0 && abs_integral > 0.0 {
        error = abs_integral * (200.0 * diff / abs_integral).powf(1.5).min(1.0);
    }
    error = error.max(50.0 * f64::EPSILON * abs_integral);
    Panel { a, b, value, error, abs_integral }
}

/// Adaptive 21-point Gauss-Kronrod quadrature on a finite interval with
/// optional interior break points.
pub fn integrate<V, F>(f: F, a: f64, b: f64, breaks: &[f64], tol: Tolerance) -> Result<Estimate<V>>
where
    V: QuadValue,
    F: Fn(f64) -> V,
{
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::Domain(format!("integration bounds must be finite, got [{a}, {b}]")));
    }
    if a == b {
        return Ok(Estimate::exact(V::zero()));
    }
    let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };
    let mut points = vec![lo];
    let mut inner: Vec<f64> = breaks.iter().copied().filter(|&x| x > lo && x < hi).collect();
    inner.sort_by(f64::total_cmp);
    inner.dedup();
    points.extend(inner);
    points.push(hi);

    let mut heap = BinaryHeap::new();
    for w in points.windows(2) {
        heap.push(gk21(&f, w[0], w[1]));
    }
    let mut evaluations = 21 * heap.len();
    loop {
        let (value, error, abs_total) = heap.iter().fold((V::zero(), 0.0, 0.0), |acc, p| {
            (acc.0 + p.value, acc.1 + p.error, acc.2 + p.abs_integral)
        });
        if !value.is_finite_value() {
            return Err(Error::numerical("non-finite integrand value", f64::NAN, tol.target(0.0)));
        }
        let target = tol.target(value.magnitude());
        let floor = 1e3 * f64::EPSILON * abs_total;
        if error <= target || error <= floor {
            return Ok(Estimate { value: value * sign, error, evaluations });
        }
        if heap.len() >= tol.max_subdivisions {
            return Err(Error::numerical(
                format!("adaptive quadrature on [{lo}, {hi}] exhausted {} subdivisions", heap.len()),
                error,
                target,
            ));
        }
        let worst = heap.pop().expect("non-empty panel heap");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            return Err(Error::numerical(
                format!("panel [{}, {}] cannot be bisected further", worst.a, worst.b),
                error,
                target,
            ));
        }
        heap.push(gk21(&f, worst.a, mid));
        heap.push(gk21(&f, mid, worst.b));
        evaluations += 42;
    }
}

/// Integral over `[a, inf)`, split at `a + scale` with the tail mapped to `(0, 1]`
/// by `x = a + scale / s`.
pub fn integrate_to_infinity<V, F>(f: F, a: f64, scale: f64, tol: Tolerance) -> Result<Estimate<V>>
where
    V: QuadValue,
    F: Fn(f64) -> V,
{
    if !(scale > 0.0) {
        return Err(Error::Domain(format!("tail scale must be positive, got {scale}")));
    }
    let head = integrate(&f, a, a + scale, &[], tol)?;
    let tail = integrate(
        |s: f64| {
            if s <= 0.0 {
                return V::zero();
            }
            let x = a + scale / s;
            let v = f(x);
            if v.magnitude() == 0.0 { V::zero() } else { v * (scale / (s * s)) }
        },
        0.0,
        1.0,
        &[],
        tol,
    )?;
    Ok(head.combine(tail))
}

/// Tanh-sinh quadrature on `[a, b]`. The integrand receives the abscissa and its
/// distance to the nearer endpoint, which stays accurate when the abscissa
/// itself rounds onto the endpoint.
pub fn tanh_sinh<V, F>(f: F, a: f64, b: f64, tol: Tolerance) -> Result<Estimate<V>>
where
    V: QuadValue,
    F: Fn(f64, f64) -> V,
{
    if a == b {
        return Ok(Estimate::exact(V::zero()));
    }
    let half = 0.5 * (b - a);
    let t_max = 4.5;
    let node = |t: f64| -> Option<(f64, f64, f64)> {
        let u = std::f64::consts::FRAC_PI_2 * t.sinh();
        let c = u.cosh();
        let w = std::f64::consts::FRAC_PI_2 * t.cosh() / (c * c);
        // distance from the nearer endpoint in units of the half width
        let dist = 2.0 / ((2.0 * u.abs()).exp() + 1.0);
        if dist == 0.0 || w == 0.0 {
            return None;
        }
        let gap = dist * half.abs();
        let x = if u < 0.0 { a + dist * half } else { b - dist * half };
        Some((x, gap, w))
    };
    let eval = |t: f64| -> V {
        match node(t) {
            Some((x, gap, w)) => {
                let v = f(x, gap);
                if v.magnitude() == 0.0 { V::zero() } else { v * w }
            }
            None => V::zero(),
        }
    };

    let mut h = 1.0;
    let mut sum = eval(0.0);
    let mut k = 1;
    while (k as f64) * h <= t_max {
        let t = k as f64 * h;
        sum = sum + eval(t) + eval(-t);
        k += 1;
    }
    let mut evaluations = 2 * k - 1;
    let mut previous = sum * (h * half);
    let mut diff = f64::INFINITY;
    for _level in 0..10 {
        h *= 0.5;
        let mut k = 1;
        while (k as f64) * h <= t_max {
            let t = k as f64 * h;
            sum = sum + eval(t) + eval(-t);
            evaluations += 2;
            k += 2;
        }
        let current = sum * (h * half);
        diff = (current - previous).magnitude();
        if !current.is_finite_value() {
            return Err(Error::numerical("non-finite integrand value", f64::NAN, 0.0));
        }
        let target = tol.target(current.magnitude());
        if diff <= target || diff <= 1e2 * f64::EPSILON * current.magnitude() {
            return Ok(Estimate { value: current, error: diff, evaluations });
        }
        previous = current;
    }
    let target = tol.target(previous.magnitude());
    Err(Error::numerical(format!("tanh-sinh on [{a}, {b}] did not converge"), diff, target))
}

static GL_CACHE: OnceLock<Mutex<HashMap<usize, &'static [(f64, f64)]>>> = OnceLock::new();

/// Gauss-Legendre nodes and weights on `[-1, 1]`, computed once per order.
pub fn gauss_legendre(n: usize) -> &'static [(f64, f64)] {
    let cache = GL_CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().expect("gauss-legendre cache poisoned");
    guard.entry(n).or_insert_with(|| {
        let order = NonZeroUsize::new(n.max(2)).expect("order is non-zero");
        let rule = GaussLegendre::new(order);
        let pairs: Vec<(f64, f64)> = rule.as_node_weight_pairs().to_vec();
        Box::leak(pairs.into_boxed_slice())
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn kronrod_integrates_high_degree_polynomials_exactly() {
        let p = gk21(&|x: f64| x.powi(30) + 3.0 * x.powi(7), -1.0, 1.0);
        assert_relative_eq!(p.value, 2.0 / 31.0, max_relative = 1e-14);
    }

    #[test]
    fn adaptive_handles_kinks_via_breaks() {
        let est = integrate(|x: f64| (x - 0.3).abs(), 0.0, 1.0, &[0.3], Tolerance::default()).unwrap();
        assert_relative_eq!(est.value, 0.5 * (0.09 + 0.49), max_relative = 1e-14);
    }

    #[test]
    fn reversed_bounds_flip_sign() {
        let est = integrate(|x: f64| x.exp(), 1.0, 0.0, &[], Tolerance::default()).unwrap();
        assert_relative_eq!(est.value, 1.0 - std::f64::consts::E, max_relative = 1e-13);
    }

    #[test]
    fn complex_integrand() {
        let est = integrate(
            |x: f64| Complex64::new(0.0, x).exp(),
            0.0,
            std::f64::consts::PI,
            &[],
            Tolerance::default(),
        )
        .unwrap();
        assert!((est.value - Complex64::new(0.0, 2.0)).norm() < 1e-13);
    }

    #[test]
    fn half_line_tail() {
        let est = integrate_to_infinity(|x: f64| 1.0 / (1.0 + x * x), 0.0, 1.0, Tolerance::default()).unwrap();
        assert_relative_eq!(est.value, std::f64::consts::FRAC_PI_2, max_relative = 1e-12);
    }

    #[test]
    fn tanh_sinh_endpoint_singularities() {
        // integral of 1/sqrt(x(1-x)) over [0,1] is pi
        let est = tanh_sinh(
            |x: f64, gap: f64| {
                let other = if x < 0.5 { 1.0 - x } else { x };
                1.0 / (gap * other).sqrt()
            },
            0.0,
            1.0,
            Tolerance::new(1e-14, 1e-13),
        )
        .unwrap();
        assert_relative_eq!(est.value, std::f64::consts::PI, max_relative = 1e-12);
    }

    #[test]
    fn tanh_sinh_smooth() {
        let est = tanh_sinh(|x: f64, _| x.exp(), 0.0, 2.0, Tolerance::new(1e-15, 1e-14)).unwrap();
        assert_relative_eq!(est.value, 2f64.exp() - 1.0, max_relative = 1e-13);
    }

    #[test]
    fn gauss_legendre_weights_sum_to_two() {
        let s: f64 = gauss_legendre(40).iter().map(|p| p.1).sum();
        assert_relative_eq!(s, 2.0, max_relative = 1e-14);
    }
}

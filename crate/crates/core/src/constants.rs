//! Universal constants of the contact and CR sublaplacians: rho_n(mu) and the
//! finite binomial sums gamma, alpha, beta built from it.

use std::collections::HashMap;
use std::sync::RwLock;

use crate::error::{Error, Result};
use crate::quadrature::{integrate, integrate_to_infinity, Estimate, Tolerance};

/// rho_n(mu) = pi^{-(n+1)} / (2^n n!) int_R e^{-mu x} (x / sinh x)^n dx, |mu| < n.
pub fn rho(n: u32, mu: f64) -> Result<f64> {
    rho_estimate(n, mu).map(|e| e.value)
}

/// rho_n(mu) with the quadrature error estimate.
pub fn rho_estimate(n: u32, mu: f64) -> Result<Estimate<f64>> {
    if n == 0 {
        return Err(Error::Domain("rho needs n >= 1".into()));
    }
    if !mu.is_finite() || mu.abs() >= n as f64 {
        return Err(Error::Domain(format!("rho_{n}({mu}) diverges: need |mu| < {n}")));
    }
    let nf = n as f64;
    // (x / sinh x)^n e^{-mu x} + (mu -> -mu) on x > 0, written with
    // x / sinh x = e^{-x} 2x / (1 - e^{-2x}) to keep the exponentials bounded.
    let f = |x: f64| -> f64 {
        let ratio = if x < 1e-8 { 1.0 + x } else { 2.0 * x / -(-2.0 * x).exp_m1() };
        let base = nf * ratio.ln();
        (base - (nf - mu) * x).exp() + (base - (nf + mu) * x).exp()
    };
    let tol = Tolerance::new(1e-15, 1e-14);
    let head = integrate(f, 0.0, 1.0, &[], tol)?;
    let decay = nf - mu.abs();
    let tail = integrate_to_infinity(f, 1.0, (1.0 / decay).clamp(1.0, 1e3), tol)?;
    let mut log_pref = -(nf + 1.0) * std::f64::consts::PI.ln() - nf * std::f64::consts::LN_2;
    log_pref -= (1..=n).map(|k| (k as f64).ln()).sum::<f64>();
    Ok(head.combine(tail).scale(log_pref.exp()))
}

/// Memoized rho_n; safe for concurrent readers.
#[derive(Debug)]
pub struct RhoTable {
    n: u32,
    cache: RwLock<HashMap<u64, f64>>,
}

impl RhoTable {
    pub fn new(n: u32) -> Result<Self> {
        if n == 0 {
            return Err(Error::Domain("rho needs n >= 1".into()));
        }
        Ok(RhoTable { n, cache: RwLock::new(HashMap::new()) })
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn get(&self, mu: f64) -> Result<f64> {
        // rho is even; cache on |mu| with -0.0 folded into 0.0
        let key = (mu.abs() + 0.0).to_bits();
        if let Some(&v) = self.cache.read().expect("rho cache poisoned").get(&key) {
            return Ok(v);
        }
        let v = rho(self.n, mu.abs())?;
        self.cache.write().expect("rho cache poisoned").insert(key, v);
        Ok(v)
    }
}

fn binomial(n: i64, k: i64) -> f64 {
    if k < 0 || k > n || n < 0 {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Sums terms in ascending order so that relabelled sums agree bit for bit.
fn ordered_sum(mut terms: Vec<f64>) -> f64 {
    terms.sort_by(f64::total_cmp);
    terms.into_iter().sum()
}

fn rho_term(table: &RhoTable, mu: i64, what: impl FnOnce() -> String) -> Result<f64> {
    if mu.unsigned_abs() >= table.n() as u64 {
        return Err(Error::Domain(format!("{}: rho_{}({mu}) is outside (-n, n)", what(), table.n())));
    }
    table.get(mu as f64)
}

/// gamma_{nk} = sum_{p+q=k} 2^n C(n,p) C(n,q) rho(p - q), k != n.
pub fn gamma_nk(table: &RhoTable, k: u32) -> Result<f64> {
    let n = table.n() as i64;
    let k = k as i64;
    if k == n {
        return Err(Error::Precondition(format!("gamma_{{{n}{k}}}: principal symbol not invertible for k = n")));
    }
    if k > 2 * n {
        return Err(Error::Domain(format!("gamma_{{{n}{k}}} needs 0 <= k <= 2n")));
    }
    let two_n = 2f64.powi(n as i32);
    let mut terms = Vec::new();
    for p in (k - n).max(0)..=k.min(n) {
        let q = k - p;
        let r = rho_term(table, p - q, || format!("gamma term (p, q) = ({p}, {q})"))?;
        terms.push(two_n * binomial(n, p) * binomial(n, q) * r);
    }
    Ok(ordered_sum(terms))
}

/// Number of (p, q) with p + q = k and 0 <= p, q <= n.
pub fn gamma_term_count(n: u32, k: u32) -> usize {
    let (n, k) = (n as i64, k as i64);
    (0..=n).filter(|&p| (0..=n).contains(&(k - p))).count()
}

fn check_indices(n: i64, kappa: i64, p: i64, q: i64) -> Result<()> {
    if !(0..=n).contains(&kappa) || !(0..=n).contains(&p) || !(0..=n).contains(&q) {
        return Err(Error::Domain(format!("indices (n, kappa, p, q) = ({n}, {kappa}, {p}, {q}) need 0 <= kappa, p, q <= n")));
    }
    Ok(())
}

/// alpha_{n kappa p q} = sum_k 1/2 C(n,p) C(n-kappa,k) C(kappa,q-k) rho(n - 2(kappa - q + 2k)).
pub fn alpha(table: &RhoTable, kappa: u32, p: u32, q: u32) -> Result<f64> {
    let n = table.n() as i64;
    let (kappa, p, q) = (kappa as i64, p as i64, q as i64);
    check_indices(n, kappa, p, q)?;
    if q == kappa || q == n - kappa {
        return Err(Error::Precondition(format!("alpha: q = {q} is excluded for n = {n}, kappa = {kappa}")));
    }
    let mut terms = Vec::new();
    for k in (q - kappa).max(0)..=q.min(n - kappa) {
        let w = 0.5 * binomial(n, p) * binomial(n - kappa, k) * binomial(kappa, q - k);
        if w == 0.0 {
            continue;
        }
        let r = rho_term(table, n - 2 * (kappa - q + 2 * k), || format!("alpha term k = {k}"))?;
        terms.push(w * r);
    }
    Ok(ordered_sum(terms))
}

/// beta_{n kappa p q} = sum_{k,l} 2^n C(n-kappa,l) C(kappa,p-l) C(n-kappa,k) C(kappa,q-k) rho(2(q-p) + 4(l-k)).
pub fn beta(table: &RhoTable, kappa: u32, p: u32, q: u32) -> Result<f64> {
    let n = table.n() as i64;
    let (kappa, p, q) = (kappa as i64, p as i64, q as i64);
    check_indices(n, kappa, p, q)?;
    if (p, q) == (kappa, n - kappa) || (p, q) == (n - kappa, kappa) {
        return Err(Error::Precondition(format!("beta: (p, q) = ({p}, {q}) is excluded for n = {n}, kappa = {kappa}")));
    }
    let two_n = 2f64.powi(n as i32);
    let mut terms = Vec::new();
    for l in 0..=n - kappa {
        let wl = binomial(n - kappa, l) * binomial(kappa, p - l);
        if wl == 0.0 {
            continue;
        }
        for k in 0..=n - kappa {
            let wk = binomial(n - kappa, k) * binomial(kappa, q - k);
            if wk == 0.0 {
                continue;
            }
            let r = rho_term(table, 2 * (q - p) + 4 * (l - k), || format!("beta term (l, k) = ({l}, {k})"))?;
            terms.push(two_n * wl * wk * r);
        }
    }
    Ok(ordered_sum(terms))
}

/// beta_n = beta_{n000} = 2^n rho(0).
pub fn beta_n(table: &RhoTable) -> Result<f64> {
    beta(table, 0, 0, 0)
}

/// c_n = ((2n + 2) / beta_n)^{1/(2n+2)}.
pub fn length_element_constant(table: &RhoTable) -> Result<f64> {
    let e = 2.0 * table.n() as f64 + 2.0;
    Ok((e / beta_n(table)?).powf(1.0 / e))
}

/// r_n = c_n^{2n+2} gamma_{n0} / (4(n+1)) with c_n from beta_n and gamma_{n0}
/// from the heat trace. The two normalizations agree exactly when r_n = 1.
pub fn normalization_ratio(table: &RhoTable, gamma0_heat: f64) -> Result<f64> {
    let n = table.n() as f64;
    let c = length_element_constant(table)?;
    Ok(c.powf(2.0 * n + 2.0) * gamma0_heat / (4.0 * (n + 1.0)))
}

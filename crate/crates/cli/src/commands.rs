use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use hres_core::aniso::GradedSpace;
use hres_core::constants::{alpha, beta, gamma_nk, normalization_ratio, rho_estimate, RhoTable};
use hres_core::heat::{
    extract_heat, extract_heat_from_samples, heat_to_zeta, mellin_leading_residue, parse_trace_csv, weyl_fit, weyl_nu0,
    zeta_res_to_ncres, HeatExpansion, HeatFit, HeatFitOptions, HeatModel, SingularityKind, SpectrumSample,
    DEFAULT_DEPTH,
};
use hres_core::homog::{build_extension, scaling_defect, Bump, GaussianTest, HomogeneousSymbol, Regime, TestFunction};
use hres_core::pseudoherm::{area_constant, area_dim3, contact_volume, gamma_from_heat, ContactModel};
use hres_core::residue::{gauged_laurent, residue_density, tilde_l, LaurentSampling, SymbolExpansion, TraceOptions};
use num_complex::Complex64;
use serde_json::{Map, Value};

use crate::report::{check, complex, estimate, num, Report};
use crate::{Command, Family, S3Check, Sampling};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] hres_core::Error),
    #[error("cannot read {}: {source}", path.display())]
    Read { path: PathBuf, source: std::io::Error },
    #[error("{0}")]
    Usage(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(hres_core::Error::Numerical { .. }) => 3,
            _ => 2,
        }
    }
}

type Result<T> = std::result::Result<T, CliError>;

pub enum Output {
    Json(Report),
    Csv(String),
}

pub fn run(command: Command) -> Result<Output> {
    match command {
        Command::Rho { n, mu, grid, verify_fixtures } => rho_cmd(n, mu, grid, verify_fixtures.as_deref()).map(Output::Json),
        Command::Constants { family, n, k, kappa, p, q, check_symmetry, csv } => {
            constants_cmd(family, n, [k, kappa, p, q], check_symmetry, csv)
        }
        Command::ExtensionSuite { d, m, lambda_list, family } => extension_cmd(d, m, &lambda_list, &family).map(Output::Json),
        Command::Residue { symbol, d, gauged, radius, sampling } => {
            residue_cmd(&symbol, d, gauged, radius, sampling).map(Output::Json)
        }
        Command::S3 { check } => s3_cmd(check).map(Output::Json),
        Command::Weyl { input, m, d } => weyl_cmd(&input, m, d).map(Output::Json),
        Command::Heat { model, input, m, q, depth, dim_ker, log_terms, mellin } => {
            heat_cmd(model.as_deref(), input.as_deref(), m, q, depth, dim_ker, log_terms, mellin).map(Output::Json)
        }
    }
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|source| CliError::Read { path: path.to_path_buf(), source })
}

/// Relative quadrature tolerance from HRES_TOL, if set.
fn tolerance_override() -> Result<Option<f64>> {
    match std::env::var("HRES_TOL") {
        Err(_) => Ok(None),
        Ok(text) => match text.trim().parse::<f64>() {
            Ok(t) if t > 0.0 && t < 1.0 => Ok(Some(t)),
            _ => Err(CliError::Usage(format!("HRES_TOL must be a number in (0, 1), got `{text}`"))),
        },
    }
}

fn rho_cmd(n: u32, mu: Option<f64>, grid: Option<usize>, fixtures: Option<&Path>) -> Result<Report> {
    let mut r = Report::new("rho");
    r.param("n", n);
    if let Some(path) = fixtures {
        let data: Value = serde_json::from_str(&read(path)?)
            .map_err(|e| hres_core::Error::Parse(format!("{}: {e}", path.display())))?;
        let rows = data["rho"]
            .as_array()
            .ok_or_else(|| hres_core::Error::Parse(format!("{}: no `rho` array", path.display())))?;
        let tol = tolerance_override()?.unwrap_or(1e-12);
        let mut worst: f64 = 0.0;
        let mut out = Vec::new();
        for row in rows {
            let (Some(rn), Some(rmu), Some(expected)) = (row["n"].as_u64(), row["mu"].as_f64(), row["value"].as_f64()) else {
                return Err(hres_core::Error::Parse(format!("malformed fixture row {row}")).into());
            };
            let e = rho_estimate(rn as u32, rmu)?;
            let dev = (e.value - expected).abs() / expected.abs();
            worst = worst.max(dev);
            let mut m = Map::new();
            m.insert("n".into(), rn.into());
            m.insert("mu".into(), num(rmu));
            m.insert("value".into(), num(e.value));
            m.insert("reference".into(), num(expected));
            m.insert("relative_deviation".into(), num(dev));
            out.push(Value::Object(m));
        }
        r.param("fixtures", path.display().to_string());
        r.set("rows", Value::Array(out));
        let summary = check(worst, 0.0, 0.0, "fixture file", tol, false);
        r.record_check("fixtures", summary);
        return Ok(r);
    }
    match (mu, grid) {
        (Some(mu), _) => {
            r.param("mu", num(mu));
            let e = rho_estimate(n, mu)?;
            r.set("rho", estimate(num(e.value), Some(e.error)));
        }
        (None, Some(k)) if k > 0 => {
            r.param("grid", k);
            let nf = n as f64;
            let mut pts = Vec::new();
            for i in 0..k {
                let mu = nf * (-1.0 + 2.0 * (i + 1) as f64 / (k + 1) as f64);
                let e = rho_estimate(n, mu)?;
                let mut m = Map::new();
                m.insert("mu".into(), num(mu));
                m.insert("value".into(), num(e.value));
                m.insert("error_estimate".into(), num(e.error));
                pts.push(Value::Object(m));
            }
            r.set("rho", Value::Array(pts));
        }
        _ => return Err(CliError::Usage("rho needs --mu, --grid <k > 0> or --verify-fixtures".into())),
    }
    Ok(r)
}

/// Relative accuracy of every rho evaluation, inherited by the positive sums.
const RHO_REL_TOL: f64 = 1e-14;

fn family_name(f: Family) -> &'static str {
    match f {
        Family::Gamma => "gamma",
        Family::Alpha => "alpha",
        Family::Beta => "beta",
    }
}

fn eval_family(t: &RhoTable, f: Family, idx: &[u32]) -> hres_core::Result<f64> {
    match f {
        Family::Gamma => gamma_nk(t, idx[0]),
        Family::Alpha => alpha(t, idx[0], idx[1], idx[2]),
        Family::Beta => beta(t, idx[0], idx[1], idx[2]),
    }
}

fn index_table(f: Family, n: u32) -> Vec<Vec<u32>> {
    match f {
        Family::Gamma => (0..=2 * n).map(|k| vec![k]).collect(),
        Family::Alpha | Family::Beta => {
            let mut out = Vec::new();
            for kappa in 0..=n {
                for p in 0..=n {
                    for q in 0..=n {
                        out.push(vec![kappa, p, q]);
                    }
                }
            }
            out
        }
    }
}

/// Largest violation of the family's index symmetry over the table, or None
/// when an entry and its mirror disagree on whether they are defined.
fn symmetry_defect(t: &RhoTable, f: Family) -> Option<f64> {
    let n = t.n();
    let mut worst: f64 = 0.0;
    for idx in index_table(f, n) {
        let (a, b) = match f {
            Family::Gamma => (eval_family(t, f, &idx), eval_family(t, f, &[2 * n - idx[0]]).ok()),
            Family::Beta => (eval_family(t, f, &idx), eval_family(t, f, &[idx[0], idx[2], idx[1]]).ok()),
            Family::Alpha => {
                // alpha_{n kappa p q} = C(n, p) alpha_{n kappa 0 q}
                let binom: f64 = (0..idx[1]).map(|i| (n - i) as f64 / (i + 1) as f64).product();
                let base = eval_family(t, f, &[idx[0], 0, idx[2]]).ok();
                (eval_family(t, f, &idx), base.map(|v| v * binom))
            }
        };
        match (a, b) {
            (Ok(x), Some(y)) => worst = worst.max((x - y).abs() / x.abs().max(f64::MIN_POSITIVE)),
            (Err(_), None) => {}
            _ => return None,
        }
    }
    Some(worst)
}

fn constants_cmd(f: Family, n: u32, params: [Option<u32>; 4], check_symmetry: bool, csv: bool) -> Result<Output> {
    let table = RhoTable::new(n)?;
    let [k, kappa, p, q] = params;
    let single = match f {
        Family::Gamma => k.map(|k| vec![k]),
        Family::Alpha | Family::Beta => match (kappa, p, q) {
            (Some(a), Some(b), Some(c)) => Some(vec![a, b, c]),
            (None, None, None) => None,
            _ => return Err(CliError::Usage("alpha and beta need all of --kappa, --p and --q".into())),
        },
    };
    let labels: &[&str] = match f {
        Family::Gamma => &["k"],
        _ => &["kappa", "p", "q"],
    };
    let rows = single.clone().map(|i| vec![i]).unwrap_or_else(|| index_table(f, n));
    let symmetry = if check_symmetry { Some(symmetry_defect(&table, f)) } else { None };

    if csv {
        let mut out = String::new();
        let _ = writeln!(out, "family,n,{},value,status", labels.join(","));
        for idx in &rows {
            let cols: Vec<String> = idx.iter().map(u32::to_string).collect();
            let (value, status) = match eval_family(&table, f, idx) {
                Ok(v) => (format!("{v:.16e}"), "ok".to_string()),
                Err(e) => (String::new(), format!("\"{e}\"")),
            };
            let _ = writeln!(out, "{},{n},{},{value},{status}", family_name(f), cols.join(","));
        }
        if let Some(s) = symmetry {
            let verdict = match s {
                Some(d) if d <= RHO_REL_TOL => format!("pass (max relative defect {d:.3e})"),
                Some(d) => format!("fail (max relative defect {d:.3e})"),
                None => "fail (defined and undefined entries mirror each other)".into(),
            };
            let _ = writeln!(out, "# symmetry: {verdict}");
        }
        return Ok(Output::Csv(out));
    }

    let mut r = Report::new("constants");
    r.param("family", family_name(f)).param("n", n);
    for (label, v) in labels.iter().zip(single.iter().flatten()) {
        r.param(label, *v);
    }
    match single {
        Some(idx) => {
            let v = eval_family(&table, f, &idx)?;
            r.set(family_name(f), estimate(num(v), Some(v.abs() * RHO_REL_TOL)));
        }
        None => {
            let entries = rows
                .iter()
                .map(|idx| {
                    let mut m = Map::new();
                    for (label, v) in labels.iter().zip(idx) {
                        m.insert((*label).into(), (*v).into());
                    }
                    match eval_family(&table, f, idx) {
                        Ok(v) => {
                            m.insert("value".into(), num(v));
                            m.insert("error_estimate".into(), num(v.abs() * RHO_REL_TOL));
                        }
                        Err(e) => {
                            m.insert("error".into(), Value::String(e.to_string()));
                        }
                    }
                    Value::Object(m)
                })
                .collect();
            r.set("table", Value::Array(entries));
        }
    }
    if let Some(s) = symmetry {
        let (value, pass) = match s {
            Some(d) => check(d, 0.0, 0.0, "index symmetry", RHO_REL_TOL, false),
            None => (Value::String("defined and undefined entries mirror each other".into()), false),
        };
        r.record_check("symmetry", (value, pass));
    }
    Ok(Output::Json(r))
}

/// Product Gaussians with distinct widths and centers.
fn gaussian_panel(space: &GradedSpace) -> hres_core::Result<Vec<TestFunction>> {
    let dim = space.dim();
    let c = |x: f64| Complex64::new(x, 0.0);
    let shapes: [(f64, f64, f64); 3] = [(1.0, 0.0, 0.0), (0.5, 1.5, 0.3), (1.5, 0.7, -0.4)];
    shapes
        .iter()
        .map(|&(w0, w1, b)| {
            let widths = (0..dim).map(|i| c(if i % 2 == 0 { w0 } else { w1.max(0.5) })).collect();
            let centers = (0..dim).map(|i| c(if i == 0 { b } else { 0.0 })).collect();
            GaussianTest { amplitude: c(1.0), widths, centers }.to_test_function(space)
        })
        .collect()
}

fn regime_name(r: Regime) -> &'static str {
    match r {
        Regime::Integrable => "integrable",
        Regime::Homogeneous => "homogeneous",
        Regime::LogHomogeneous => "log-homogeneous",
    }
}

fn extension_cmd(d: usize, m: f64, lambdas: &[f64], family: &str) -> Result<Report> {
    if let Some(l) = lambdas.iter().find(|l| !(**l > 0.0 && l.is_finite())) {
        return Err(hres_core::Error::Domain(format!("dilation factors must be positive, got {l}")).into());
    }
    let space = GradedSpace::new(d)?;
    let symbol = HomogeneousSymbol::parse(space, &format!("{family}:{m}"))?;
    let tau = build_extension(&symbol, None, &Bump::default())?;
    let panel = gaussian_panel(&space)?;
    let mut r = Report::new("extension-suite");
    r.param("d", d).param("m", num(m)).param("symbol", symbol.label().to_string());
    r.param("lambda", lambdas.iter().map(|&l| num(l)).collect::<Value>());
    r.set("regime", Value::String(regime_name(tau.regime()).into()));
    r.set("k", tau.k().into());

    if tau.regime() != Regime::LogHomogeneous {
        let other = match tau.regime() {
            Regime::Homogeneous => Some(build_extension(&symbol, None, &Bump::new(0.4, 0.6, 1.7)?)?),
            _ => None,
        };
        let (mut worst, mut worst_err, mut bump_spread): (f64, f64, f64) = (0.0, 0.0, 0.0);
        for u in &panel {
            let base = tau.pair(u)?;
            if let Some(t2) = &other {
                bump_spread = bump_spread.max((t2.pair(u)?.value - base.value).norm() / base.value.norm());
            }
            for &l in lambdas {
                let scaled = tau.pair_scaled(u, l)?;
                let expected = base.value * l.powf(m);
                let scale = expected.norm().max(f64::MIN_POSITIVE);
                worst = worst.max((scaled.value - expected).norm() / scale);
                worst_err = worst_err.max((scaled.error + base.error * l.powf(m)) / scale);
            }
        }
        r.record_check("scaling_residual", check(worst, worst_err, 0.0, "homogeneity", 1e-6, false));
        if other.is_some() {
            r.record_check("bump_independence", check(bump_spread, worst_err, 0.0, "two cutoffs", 1e-7, false));
        }
        return Ok(r);
    }

    let u = &panel[1];
    let mut defects = Vec::new();
    let mut pts = Vec::new();
    let mut coefficient = None;
    for &l in lambdas {
        let rep = scaling_defect(&tau, u, l)?;
        let lam_m = l.powf(m);
        pts.push((l.ln(), rep.measured / lam_m));
        if l != 1.0 && coefficient.is_none() {
            coefficient = Some(rep.predicted / (lam_m * l.ln()));
        }
        let mut e = Map::new();
        e.insert("lambda".into(), num(l));
        e.insert("measured".into(), complex(rep.measured));
        e.insert("predicted".into(), complex(rep.predicted));
        e.insert("residual".into(), num(rep.residual));
        defects.push(Value::Object(e));
    }
    r.set("defects", Value::Array(defects));
    let distinct = {
        let mut ls: Vec<f64> = lambdas.to_vec();
        ls.sort_by(f64::total_cmp);
        ls.dedup();
        ls.len()
    };
    if let (Some(expected), true) = (coefficient, distinct >= 2) {
        let n = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pts.iter().map(|p| p.1).sum::<Complex64>() / n;
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        let slope = pts.iter().map(|p| (p.1 - my) * (p.0 - mx)).sum::<Complex64>() / sxx;
        let intercept = my - slope * mx;
        let rel = (slope - expected).norm() / expected.norm().max(f64::MIN_POSITIVE);
        let mut s = Map::new();
        s.insert("slope".into(), complex(slope));
        s.insert("log_coefficient".into(), complex(expected));
        s.insert("relative_deviation".into(), num(rel));
        s.insert("tolerance".into(), num(1e-5));
        let pass = rel <= 1e-5 || expected.norm() == 0.0 && slope.norm() <= 1e-7;
        s.insert("pass".into(), Value::Bool(pass));
        r.record_check("log_law_slope", (Value::Object(s), pass));
        r.record_check("log_law_intercept", check(intercept.norm(), 0.0, 0.0, "log law", 1e-7, false));
    }
    Ok(r)
}

fn residue_cmd(symbol: &str, d: usize, gauged: bool, radius: f64, sampling: Sampling) -> Result<Report> {
    let space = GradedSpace::new(d)?;
    let p = HomogeneousSymbol::parse(space, symbol)?;
    let base = SymbolExpansion::single(p);
    let mut opts = TraceOptions::default();
    if let Some(t) = tolerance_override()? {
        opts.tolerance.rel = t;
    }
    let mut r = Report::new("residue");
    r.param("symbol", symbol).param("d", d);
    let density = residue_density(&base)?;
    let fourier = (2.0 * PI).powi(space.dim() as i32);
    let sphere = density.value * fourier;
    r.set("residue_density", estimate(complex(density.value), Some(density.error)));
    r.set("sphere_integral", estimate(complex(sphere), Some(density.error * fourier)));
    let order = base.order();
    if (order.re - order.re.round()).abs() > 1e-12 || order.im != 0.0 {
        let l = tilde_l(&base, &opts)?;
        r.set("tilde_l", estimate(complex(l.value), Some(l.error)));
    }
    if gauged {
        let sampling = match sampling {
            Sampling::Circle => LaurentSampling::Circle,
            Sampling::RealSegment => LaurentSampling::RealSegment,
        };
        r.param("radius", num(radius));
        let fit = gauged_laurent(&base, radius, sampling, &opts)?;
        let mut m = Map::new();
        m.insert("residue".into(), complex(fit.residue));
        m.insert("regular_value".into(), complex(fit.regular_value));
        m.insert("linear_coefficient".into(), complex(fit.linear_coefficient));
        m.insert("fit_residual".into(), num(fit.fit_residual));
        m.insert("condition_number".into(), num(fit.condition_number));
        m.insert("samples".into(), fit.samples.len().into());
        r.set("laurent", Value::Object(m));
        // the pole and the sphere integral carry opposite signs
        let target = sphere.norm();
        let relative = target > 0.0;
        let outcome = check(fit.residue.norm(), fit.fit_residual, target, "sphere integral", 1e-4, relative);
        r.record_check("pole_vs_sphere_integral", outcome);
    }
    Ok(r)
}

/// Per-coefficient error estimate: change against the fit one level shallower,
/// or the full magnitude for terms that level does not resolve.
fn depth_stability(fine: &BTreeMap<u32, f64>, coarse: Option<&BTreeMap<u32, f64>>) -> BTreeMap<u32, f64> {
    fine.iter()
        .map(|(&j, &v)| (j, coarse.and_then(|c| c.get(&j)).map_or(v.abs(), |c| (v - c).abs())))
        .collect()
}

struct S3Heat {
    fit: HeatFit,
    a_err: BTreeMap<u32, f64>,
    gamma0: f64,
    gamma1_prime: f64,
}

impl S3Heat {
    fn rel_err(&self, j: u32) -> f64 {
        self.a_err[&j] / self.fit.expansion.a[&j].abs()
    }
}

fn s3_heat() -> Result<S3Heat> {
    let model = HeatModel::S3Sublaplacian;
    let opts = HeatFitOptions::default();
    let fit = extract_heat(|t| model.trace(t), 2, 4, DEFAULT_DEPTH, &opts)?;
    let coarse = extract_heat(|t| model.trace(t), 2, 4, DEFAULT_DEPTH - 1, &opts)?;
    let a_err = depth_stability(&fit.expansion.a, Some(&coarse.expansion.a));
    let g = gamma_from_heat(fit.expansion.a[&0], fit.expansion.a[&2], &ContactModel::s3_standard())?;
    Ok(S3Heat { fit, a_err, gamma0: g.gamma0, gamma1_prime: g.gamma1_prime })
}

fn s3_cmd(which: S3Check) -> Result<Report> {
    let mut r = Report::new("s3");
    let name = format!("{which:?}").to_lowercase();
    r.param("check", name);
    let all = matches!(which, S3Check::All);
    let s3 = ContactModel::s3_standard();
    let pi2 = PI * PI;
    let heat = if all || !matches!(which, S3Check::Volume) { Some(s3_heat()?) } else { None };

    if all || matches!(which, S3Check::Volume) {
        let v = contact_volume(&s3)?;
        r.record_check("volume", check(v.value, v.error, pi2, "closed form pi^2", 1e-6, true));
    }
    if let Some(h) = &heat {
        let (e0, e2) = (h.rel_err(0), h.rel_err(2));
        if all || matches!(which, S3Check::Heat) {
            let (a, err) = (&h.fit.expansion.a, &h.a_err);
            r.record_check("a0", check(a[&0], err[&0], pi2 / 16.0, "closed form pi^2/16", 1e-5, true));
            r.record_check("a2", check(a[&2], err[&2], pi2 / 16.0, "closed form pi^2/16", 1e-5, true));
            r.record_check("a4", check(a[&4], err[&4], pi2 / 32.0, "closed form pi^2/32", 1e-5, true));
            r.record_check("gamma0", check(h.gamma0, h.gamma0 * e0, 1.0 / 16.0, "closed form 1/16", 1e-6, false));
            let g1_err = h.gamma1_prime * e2;
            r.record_check("gamma1_prime", check(h.gamma1_prime, g1_err, 1.0 / 64.0, "closed form 1/64", 1e-6, false));
            let ratio = normalization_ratio(&RhoTable::new(1)?, h.gamma0)?;
            let mut m = Map::new();
            m.insert("value".into(), num(ratio));
            m.insert("error_estimate".into(), num(ratio * e0));
            m.insert("note".into(), Value::String("ratio of the two length-element normalizations; 1 when they agree".into()));
            r.set("normalization_ratio", Value::Object(m));
        }
        if all || matches!(which, S3Check::Area) {
            let area = area_dim3(&s3)?;
            let exact = pi2 / (8.0 * 2f64.sqrt());
            r.record_check("area", check(area, 0.0, exact, "closed form pi^2/(8 sqrt 2)", 1e-6, false));
            let k = area_constant(&hres_core::pseudoherm::HeatGammas { gamma0: h.gamma0, gamma1_prime: h.gamma1_prime })?;
            let k_exact = 1.0 / (32.0 * 2f64.sqrt());
            r.record_check("area_constant", check(k, k * (e2 + e0 / 2.0), k_exact, "closed form 1/(32 sqrt 2)", 1e-6, false));
        }
        if all || matches!(which, S3Check::Weyl) {
            let zeta = heat_to_zeta(&h.fit.expansion, 2.0);
            let leading = zeta
                .first()
                .and_then(|z| z.value)
                .ok_or_else(|| hres_core::Error::Numerical {
                    message: "heat fit produced no leading coefficient".into(),
                    estimate: f64::NAN,
                    tolerance: 0.0,
                })?;
            let nu0 = weyl_nu0(zeta_res_to_ncres(leading, 2)?, 4)?;
            r.record_check("nu0", check(nu0, nu0 * e0, pi2 / 32.0, "closed form pi^2/32", 1e-5, true));
            let sample = SpectrumSample::exact_weyl(nu0, 2, 4, 10_000)?;
            let fit = weyl_fit(&sample)?;
            r.record_check("weyl_nu0_fit", check(fit.nu0, 0.0, pi2 / 32.0, "closed form pi^2/32", 0.01, true));
            r.record_check("weyl_exponent_fit", check(fit.exponent, 0.0, 0.5, "m/Q", 0.005, true));
        }
    }
    Ok(r)
}

fn weyl_cmd(input: &Path, m: u32, d: u32) -> Result<Report> {
    let sample = SpectrumSample::parse(&read(input)?)?;
    let fit = weyl_fit(&sample)?;
    let q = d + 2;
    let expected = m as f64 / q as f64;
    let mut r = Report::new("weyl");
    r.param("input", input.display().to_string()).param("m", m).param("d", d);
    r.set("eigenvalues", sample.len().into());
    r.set("points_used", fit.points_used.into());
    r.set("nu0", estimate(num(fit.nu0), Some(fit.nu0 * (1.0 - fit.r_squared).max(0.0).sqrt())));
    r.set("exponent", estimate(num(fit.exponent), Some(fit.exponent * (1.0 - fit.r_squared).max(0.0).sqrt())));
    r.set("expected_exponent", estimate(num(expected), None));
    r.set("exponent_relative_deviation", num((fit.exponent - expected).abs() / expected));
    r.set("r_squared", num(fit.r_squared));
    r.set("residue_estimate", num(q as f64 * fit.nu0));
    Ok(r)
}

#[allow(clippy::too_many_arguments)]
fn heat_cmd(
    model: Option<&str>,
    input: Option<&Path>,
    m: Option<u32>,
    q: Option<u32>,
    depth: u32,
    dim_ker: u64,
    log_terms: bool,
    mellin: bool,
) -> Result<Report> {
    let mut r = Report::new("heat");
    let opts = HeatFitOptions { log_terms, ..HeatFitOptions::default() };
    let (model, fit, coarse) = match (model, input) {
        (Some(name), _) => {
            let model = HeatModel::by_name(name)?;
            let m = m.unwrap_or(model.order());
            let q = q.unwrap_or(model.homogeneous_dimension());
            r.param("model", name);
            let fit_at = |depth| extract_heat(|t| model.trace(t), m, q, depth, &opts);
            (Some((model, m, q)), fit_at(depth)?, depth.checked_sub(1).and_then(|d| fit_at(d).ok()))
        }
        (None, Some(path)) => {
            let (Some(m), Some(q)) = (m, q) else {
                return Err(CliError::Usage("a trace file needs --m and --q".into()));
            };
            r.param("input", path.display().to_string());
            let samples = parse_trace_csv(&read(path)?)?;
            let fit_at = |depth| extract_heat_from_samples(&samples, m, q, depth, log_terms);
            (None, fit_at(depth)?, depth.checked_sub(1).and_then(|d| fit_at(d).ok()))
        }
        (None, None) => return Err(CliError::Usage("heat needs --model or --input".into())),
    };
    let a_err = depth_stability(&fit.expansion.a, coarse.as_ref().map(|c| &c.expansion.a));
    let b_err = depth_stability(&fit.expansion.b, coarse.as_ref().map(|c| &c.expansion.b));
    let HeatFit { expansion, max_relative_residual, rms_relative_residual, conditioning, grid_points } = fit;
    let expansion = HeatExpansion { dim_ker, ..expansion };
    r.param("m", expansion.m).param("q", expansion.q).param("depth", depth).param("dim_ker", dim_ker);
    let coeffs = |map: &BTreeMap<u32, f64>, err: &BTreeMap<u32, f64>, index: &str| -> Value {
        map.iter()
            .map(|(j, v)| {
                let mut m = Map::new();
                m.insert(index.into(), (*j).into());
                m.insert("value".into(), num(*v));
                m.insert("error_estimate".into(), num(err[j]));
                Value::Object(m)
            })
            .collect()
    };
    r.set("a", coeffs(&expansion.a, &a_err, "j"));
    if !expansion.b.is_empty() {
        r.set("b", coeffs(&expansion.b, &b_err, "k"));
    }
    let mut diag = Map::new();
    diag.insert("max_relative_residual".into(), num(max_relative_residual));
    diag.insert("rms_relative_residual".into(), num(rms_relative_residual));
    diag.insert("conditioning".into(), num(conditioning));
    diag.insert("grid_points".into(), grid_points.into());
    r.set("fit", Value::Object(diag));
    let floor = -(depth as f64);
    let zeta: Vec<Value> = heat_to_zeta(&expansion, floor)
        .into_iter()
        .map(|z| {
            let mut m = Map::new();
            m.insert("sigma".into(), num(z.sigma));
            m.insert("rational".into(), Value::String(format!("{}/{}", z.numerator, z.denominator)));
            let kind = match z.kind {
                SingularityKind::SimplePole => "pole",
                SingularityKind::RegularValue => "regular-value",
            };
            m.insert("kind".into(), Value::String(kind.into()));
            m.insert("value".into(), z.value.map(num).unwrap_or(Value::Null));
            Value::Object(m)
        })
        .collect();
    r.set("zeta", Value::Array(zeta));

    let leading = heat_to_zeta(&expansion, expansion.q as f64 / expansion.m as f64);
    if let Some(res) = leading.first().and_then(|z| z.value) {
        let nc = zeta_res_to_ncres(res, expansion.m)?;
        r.set("ncres_leading", num(nc));
        r.set("weyl_nu0", num(weyl_nu0(nc, expansion.q)?));
    }
    if mellin {
        let Some((model, m, q)) = model else {
            return Err(CliError::Usage("--mellin needs a built-in --model".into()));
        };
        let sigma = q as f64 / m as f64;
        let e = mellin_leading_residue(|t| model.trace(t), sigma)?;
        let dictionary = leading.first().and_then(|z| z.value).unwrap_or(f64::NAN);
        let outcome = check(e.value, e.error, dictionary, "heat/zeta dictionary", 1e-4, true);
        r.record_check("mellin_residue", outcome);
    }
    Ok(r)
}

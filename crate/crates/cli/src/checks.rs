//! Residual and asymptotic suites behind `specfun-check`.

use std::f64::consts::PI;

use blowuplab_core::functionals::phi_weight_ratio;
use blowuplab_core::specfun::{bessel_k, phi_laplacian_residual, BesselEvalConfig, TestFunction};
use blowuplab_core::SystemParams;
use serde::{Deserialize, Serialize};

use crate::error::CliResult;

/// One measured quantity against its acceptance band.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub measured: f64,
    pub lower: Option<f64>,
    pub upper: Option<f64>,
    pub pass: bool,
}

impl Check {
    fn new(name: impl Into<String>, measured: f64, lower: Option<f64>, upper: Option<f64>) -> Self {
        let pass = measured.is_finite() && lower.map_or(true, |l| measured >= l) && upper.map_or(true, |u| measured <= u);
        Check { name: name.into(), measured, lower, upper, pass }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpecfunReport {
    pub eta: f64,
    pub checks: Vec<Check>,
    pub all_pass: bool,
}

impl SpecfunReport {
    pub fn group(&self, prefix: &str) -> impl Iterator<Item = &Check> {
        let prefix = prefix.to_string();
        self.checks.iter().filter(move |c| c.name.starts_with(&prefix))
    }
}

/// Observed order `log₂(e(h)/e(h/2))`.
pub fn observed_order(coarse: f64, fine: f64) -> f64 {
    (coarse / fine).log2()
}

/// Worst relative error of `K_{1/2}` against `√(π/(2t)) e^{−t}` on log-spaced `t ∈ [0.1, 50]`.
pub fn k_half_error(samples: usize) -> CliResult<f64> {
    let cfg = BesselEvalConfig::default();
    let mut worst: f64 = 0.0;
    for k in 0..samples {
        let t = 0.1 * (500.0f64).powf(k as f64 / (samples - 1) as f64);
        let exact = (PI / (2.0 * t)).sqrt() * (-t).exp();
        worst = worst.max((bessel_k(0.5, t, &cfg)? / exact - 1.0).abs());
    }
    Ok(worst)
}

/// `K_ν(t) √(2t/π) e^t`.
pub fn asymptotic_ratio(nu: f64, t: f64) -> CliResult<f64> {
    Ok(bessel_k(nu, t, &BesselEvalConfig::default())? * (2.0 * t / PI).sqrt() * t.exp())
}

/// Leading terms of the large-argument series of the same ratio.
pub fn asymptotic_series(nu: f64, t: f64) -> f64 {
    let m = 4.0 * nu * nu;
    1.0 + (m - 1.0) / (8.0 * t) + (m - 1.0) * (m - 9.0) / (2.0 * (8.0 * t).powi(2))
        + (m - 1.0) * (m - 9.0) * (m - 25.0) / (6.0 * (8.0 * t).powi(3))
}

pub fn specfun_report(params: &SystemParams) -> CliResult<SpecfunReport> {
    params.validate()?;
    let eta = params.eta0();
    let mut checks = Vec::new();

    checks.push(Check::new("k_half_max_rel_error", k_half_error(400)?, None, Some(1e-8)));
    for k in 0..=8 {
        let nu = 0.25 * f64::from(k);
        // 1e-12 slack: at nu = 3/2 the ratio is exactly 1.01
        let band = (Some(0.99 - 1e-12), Some(1.01 + 1e-12));
        checks.push(Check::new(format!("asymptotic_ratio_t100_nu{nu:.2}"), asymptotic_ratio(nu, 100.0)?, band.0, band.1));
    }

    let (h, t, r) = (2e-2, 2.0, 1.5);
    for i in 1..=2u8 {
        let tf = TestFunction::for_equation(params, i, eta, r + 1.0)?;
        let order = observed_order(tf.rho.ode_residual(t, h)?, tf.rho.ode_residual(t, 0.5 * h)?);
        checks.push(Check::new(format!("rho_ode_order_eq{i}"), order, Some(1.9), None));
        let order = observed_order(tf.residual(r, t, h, h)?, tf.residual(r, t, 0.5 * h, 0.5 * h)?);
        checks.push(Check::new(format!("conjugate_order_eq{i}"), order, Some(1.9), None));
    }
    for n in [params.n, 1, 2, 3] {
        let name = format!("phi_laplacian_order_n{n}");
        if checks.iter().any(|c| c.name == name) {
            continue;
        }
        let order = observed_order(phi_laplacian_residual(n, eta, r, h)?, phi_laplacian_residual(n, eta, r, 0.5 * h)?);
        checks.push(Check::new(name, order, Some(1.9), None));
    }

    let times: Vec<f64> = (1..=100).map(f64::from).collect();
    for r_exp in [1.5, 2.0, 3.0] {
        let ratios = phi_weight_ratio(params.n, eta, r_exp, &times, params.radius)?;
        let max = ratios.iter().cloned().fold(0.0, f64::max);
        checks.push(Check::new(format!("phi_weight_ratio_max_over_t50_r{r_exp}"), max / ratios[49], None, Some(2.0)));
    }

    let all_pass = checks.iter().all(|c| c.pass);
    Ok(SpecfunReport { eta, checks, all_pass })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn series_matches_at_large_argument() {
        for nu in [0.0, 0.5, 1.0, 2.0] {
            let r = asymptotic_ratio(nu, 400.0).unwrap();
            assert!((r - asymptotic_series(nu, 400.0)).abs() < 1e-9, "nu {nu}");
        }
        assert_eq!(asymptotic_series(0.5, 3.0), 1.0);
    }

    #[test]
    fn default_report_shape() {
        let rep = specfun_report(&SystemParams::default()).unwrap();
        assert!(rep.group("k_half").all(|c| c.pass));
        assert!(rep.group("rho_ode_order").all(|c| c.pass));
        assert!(rep.group("conjugate_order").all(|c| c.pass), "{:?}", rep.checks);
        assert!(rep.group("phi_laplacian_order").all(|c| c.pass), "{:?}", rep.checks);
        assert!(rep.group("phi_weight_ratio").all(|c| c.pass));
        // orders above 1.5 leave the ±1% band at t = 100
        assert!(rep.group("asymptotic").any(|c| !c.pass));
        assert!(!rep.all_pass);
    }
}

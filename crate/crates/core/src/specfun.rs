//! Modified Bessel function `K_ν`, the spatial weight `φ^η`, the temporal weight
//! `ρ^η` and the quantities derived from them.
//!
//! All three grow or decay like `e^{±ηt}`, so the primary entry points return
//! logarithms; the plain-valued wrappers exist for small arguments and tests.

use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::error::{invalid, Error, Result};
use crate::exponents::SystemParams;
use crate::quad::{self, GaussLegendre};

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

/// Settings for the quadrature of `K_ν(t) = ∫₀^∞ exp(−t cosh ζ) cosh(νζ) dζ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BesselEvalConfig {
    /// Relative tolerance of the adaptive quadrature, in `(0, 1e-3]`.
    pub quad_rel_tol: f64,
    /// Upper truncation of the ζ-integral. `None` picks the point where the
    /// integrand has dropped by `e^{-60}` from its peak.
    pub zeta_cutoff: Option<f64>,
    pub max_subdivisions: usize,
}

impl Default for BesselEvalConfig {
    fn default() -> Self {
        BesselEvalConfig { quad_rel_tol: 1e-14, zeta_cutoff: None, max_subdivisions: 400 }
    }
}

impl BesselEvalConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.quad_rel_tol > 0.0 && self.quad_rel_tol <= 1e-3) {
            return Err(invalid!("quad_rel_tol must lie in (0, 1e-3] (got {})", self.quad_rel_tol));
        }
        if let Some(z) = self.zeta_cutoff {
            if !(z > 0.0 && z.is_finite()) {
                return Err(invalid!("zeta_cutoff must be positive (got {z})"));
            }
        }
        if self.max_subdivisions == 0 {
            return Err(invalid!("max_subdivisions must be positive"));
        }
        Ok(())
    }
}

/// Drop of the log-integrand, relative to its peak, at the automatic cutoff.
const CUTOFF_LOG_DROP: f64 = 60.0;

fn ln_cosh(x: f64) -> f64 {
    let a = x.abs();
    a + libm::log1p(libm::exp(-2.0 * a)) - core::f64::consts::LN_2
}

/// `ln K_ν(t)` for `t > 0`.
pub fn ln_bessel_k(nu: f64, t: f64, cfg: &BesselEvalConfig) -> Result<f64> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(invalid!("K_nu needs a positive finite argument (got {t})"));
    }
    if !nu.is_finite() {
        return Err(invalid!("K_nu needs a finite order (got {nu})"));
    }
    let nu = nu.abs();
    // log of the integrand with exp(-t) factored out: -t (cosh ζ - 1) + ln cosh(νζ)
    let g = |z: f64| {
        let s = libm::sinh(0.5 * z);
        -2.0 * t * s * s + ln_cosh(nu * z)
    };
    let peak = libm::asinh(nu / t);
    let shift = g(peak).max(0.0);
    let cutoff = match cfg.zeta_cutoff {
        Some(z) => z,
        None => {
            let mut z = peak + 1.0;
            for _ in 0..50 {
                let next = libm::acosh(1.0 + (CUTOFF_LOG_DROP + shift + nu * z) / t);
                if (next - z).abs() < 1e-12 * next {
                    z = next;
                    break;
                }
                z = next;
            }
            z
        }
    };
    let f = |z: f64| libm::exp(g(z) - shift);
    let q = if peak > 0.0 && peak < cutoff {
        let left = quad::integrate(f, 0.0, peak, cfg.quad_rel_tol, 0.0, cfg.max_subdivisions)?;
        let right = quad::integrate(f, peak, cutoff, cfg.quad_rel_tol, 0.0, cfg.max_subdivisions)?;
        left.value + right.value
    } else {
        quad::integrate(f, 0.0, cutoff, cfg.quad_rel_tol, 0.0, cfg.max_subdivisions)?.value
    };
    Ok(-t + shift + libm::log(q))
}

/// `K_ν(t)`. Fails with [`Error::Underflow`] where the value is below the `f64` range.
pub fn bessel_k(nu: f64, t: f64, cfg: &BesselEvalConfig) -> Result<f64> {
    let v = libm::exp(ln_bessel_k(nu, t, cfg)?);
    if v > 0.0 && v.is_normal() { Ok(v) } else { Err(Error::Underflow) }
}

/// Leading large-argument behaviour `√(π/(2t)) e^{−t}`, in log form.
pub fn ln_bessel_k_asymptotic(t: f64) -> f64 {
    0.5 * libm::log(PI / (2.0 * t)) - t
}

/// Surface area of the unit sphere `S^k ⊂ R^{k+1}`; `|S⁰| = 2`.
pub fn sphere_area(k: u32) -> f64 {
    let h = 0.5 * (f64::from(k) + 1.0);
    2.0 * libm::pow(PI, h) / libm::tgamma(h)
}

fn phi_nodes(eta: f64, r: f64) -> usize {
    (libm::ceil(4.0 * eta * r) as usize).max(32)
}

/// Rule sizes are rounded up to multiples of this so a small ladder of rules covers a grid.
const RULE_GRANULE: usize = 32;

fn ln_phi_with_rule(n: u32, eta: f64, r: f64, rule: &GaussLegendre) -> f64 {
    let x = eta * r;
    if n == 1 {
        // e^{x} + e^{-x}
        return x.abs() + libm::log1p(libm::exp(-2.0 * x.abs()));
    }
    let power = f64::from(n - 2);
    let integral = rule.integrate(
        |theta| {
            let s = libm::sin(0.5 * theta);
            let e = libm::exp(-2.0 * x * s * s);
            if n == 2 { e } else { e * libm::pow(libm::sin(theta), power) }
        },
        0.0,
        PI,
    );
    x + libm::log(sphere_area(n - 2) * integral)
}

/// `ln φ^η(r)` for the radial weight
/// `φ^η(x) = ∫_{S^{N−1}} e^{η x·ω} dω` (`N ≥ 2`) or `e^{ηx} + e^{−ηx}` (`N = 1`).
pub fn ln_phi_eta(n: u32, eta: f64, r: f64) -> f64 {
    if n == 1 {
        return ln_phi_with_rule(1, eta, r, &GaussLegendre { nodes: Vec::new(), weights: Vec::new() });
    }
    let rule = GaussLegendre::new(phi_nodes(eta, r).next_multiple_of(RULE_GRANULE));
    ln_phi_with_rule(n, eta, r, &rule)
}

pub fn phi_eta(n: u32, eta: f64, r: f64) -> f64 {
    libm::exp(ln_phi_eta(n, eta, r))
}

/// Evaluator of `φ^η` that keeps the Gauss–Legendre rules it needs up to a radius.
#[derive(Debug, Clone)]
pub struct PhiEvaluator {
    pub n: u32,
    pub eta: f64,
    /// Rule `k` has `(k + 1)·32` nodes.
    rules: Vec<GaussLegendre>,
}

impl PhiEvaluator {
    /// Precomputes the rules needed for every `r ≤ r_max`.
    pub fn new(n: u32, eta: f64, r_max: f64) -> Result<Self> {
        if n < 1 {
            return Err(invalid!("N must be a positive integer"));
        }
        if !(eta > 0.0) {
            return Err(invalid!("eta must be positive (got {eta})"));
        }
        let mut rules = Vec::new();
        if n >= 2 {
            let top = phi_nodes(eta, r_max.max(0.0)).div_ceil(RULE_GRANULE);
            for k in 1..=top {
                rules.push(GaussLegendre::new(k * RULE_GRANULE));
            }
        }
        Ok(PhiEvaluator { n, eta, rules })
    }

    pub fn ln_phi(&self, r: f64) -> f64 {
        if self.n == 1 {
            return ln_phi_eta(1, self.eta, r);
        }
        let k = phi_nodes(self.eta, r).div_ceil(RULE_GRANULE);
        match self.rules.get(k - 1) {
            Some(rule) => ln_phi_with_rule(self.n, self.eta, r, rule),
            None => ln_phi_eta(self.n, self.eta, r),
        }
    }

    pub fn phi(&self, r: f64) -> f64 {
        libm::exp(self.ln_phi(r))
    }

    /// Relative residual of `Δφ = η²φ` with the radial Laplacian `φ'' + (N−1)/r φ'`
    /// replaced by central differences of step `h` (needs `r > h`).
    pub fn laplacian_residual(&self, r: f64, h: f64) -> f64 {
        let l0 = self.ln_phi(r);
        let ep = libm::expm1(self.ln_phi(r + h) - l0);
        let em = libm::expm1(self.ln_phi(r - h) - l0);
        let second = (ep + em) / (h * h);
        let first = (ep - em) / (2.0 * h);
        let lap = second + f64::from(self.n - 1) / r * first;
        let e2 = self.eta * self.eta;
        ((lap - e2) / e2).abs()
    }
}

/// See [`PhiEvaluator::laplacian_residual`].
pub fn phi_laplacian_residual(n: u32, eta: f64, r: f64, h: f64) -> Result<f64> {
    if !(r > h && h > 0.0) {
        return Err(invalid!("laplacian residual needs r > h > 0 (r = {r}, h = {h})"));
    }
    Ok(PhiEvaluator::new(n, eta, r + h)?.laplacian_residual(r, h))
}

/// Multiplier `m(t) = (1 + t)^μ`.
pub fn multiplier_m(mu: f64, t: f64) -> f64 {
    libm::pow(1.0 + t, mu)
}

/// Temporal weight `ρ(t) = (η(t+1))^{(μ+1)/2} K_{√δ/2}(η(t+1))`, the decaying
/// solution of `ρ'' − (μρ/(1+t))' + (ν²/(1+t)² − η²)ρ = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct RhoProfile {
    /// Equation index, 1 for `u` and 2 for `v`.
    pub index: u8,
    pub eta: f64,
    pub mu: f64,
    pub nu_sq: f64,
    pub delta: f64,
    #[cfg_attr(feature = "serde", serde(skip))]
    pub bessel: BesselEvalConfig,
}

impl RhoProfile {
    pub fn new(mu: f64, nu_sq: f64, eta: f64) -> Result<Self> {
        let delta = crate::exponents::delta(mu, nu_sq);
        if !(delta >= 0.0) {
            return Err(invalid!("rho needs delta >= 0 (mu = {mu}, nu_sq = {nu_sq}, delta = {delta})"));
        }
        if !(eta > 0.0 && eta.is_finite()) {
            return Err(invalid!("eta must be positive (got {eta})"));
        }
        Ok(RhoProfile { index: 1, eta, mu, nu_sq, delta, bessel: BesselEvalConfig::default() })
    }

    /// Profile of equation `i` (1 or 2) of `params`.
    pub fn for_equation(params: &SystemParams, i: u8, eta: f64) -> Result<Self> {
        if !(i == 1 || i == 2) {
            return Err(invalid!("equation index must be 1 or 2 (got {i})"));
        }
        let k = usize::from(i - 1);
        let mut prof = RhoProfile::new(params.mu(k), params.nu_sq(k), eta)?;
        prof.index = i;
        Ok(prof)
    }

    pub fn with_bessel(mut self, cfg: BesselEvalConfig) -> Self {
        self.bessel = cfg;
        self
    }

    /// Order of the Bessel function, `√δ/2`.
    pub fn order(&self) -> f64 {
        0.5 * libm::sqrt(self.delta)
    }

    fn check_t(t: f64) -> Result<()> {
        if !(t > -1.0) || !t.is_finite() {
            return Err(invalid!("rho needs t > -1 (got {t})"));
        }
        Ok(())
    }

    pub fn ln_rho(&self, t: f64) -> Result<f64> {
        Self::check_t(t)?;
        let s = self.eta * (1.0 + t);
        Ok(0.5 * (self.mu + 1.0) * libm::log(s) + ln_bessel_k(self.order(), s, &self.bessel)?)
    }

    pub fn rho(&self, t: f64) -> Result<f64> {
        Ok(libm::exp(self.ln_rho(t)?))
    }

    /// `ρ'/ρ = (μ+1+√δ)/(2(t+1)) − η K_{√δ/2+1}(η(t+1)) / K_{√δ/2}(η(t+1))`.
    pub fn log_deriv(&self, t: f64) -> Result<f64> {
        Self::check_t(t)?;
        let s = self.eta * (1.0 + t);
        let nu = self.order();
        let ratio = libm::exp(ln_bessel_k(nu + 1.0, s, &self.bessel)? - ln_bessel_k(nu, s, &self.bessel)?);
        Ok((self.mu + 1.0 + libm::sqrt(self.delta)) / (2.0 * (1.0 + t)) - self.eta * ratio)
    }

    /// `Γ(t) = μ/(1+t) − 2ρ'/ρ`.
    pub fn gamma(&self, t: f64) -> Result<f64> {
        Ok(self.mu / (1.0 + t) - 2.0 * self.log_deriv(t)?)
    }

    /// Tabulates `ln ρ` and `ρ'/ρ` on the given times.
    pub fn tabulate(&self, times: &[f64]) -> Result<RhoTable> {
        let mut ln_rho = Vec::with_capacity(times.len());
        let mut log_deriv = Vec::with_capacity(times.len());
        for &t in times {
            ln_rho.push(self.ln_rho(t)?);
            log_deriv.push(self.log_deriv(t)?);
        }
        Ok(RhoTable { times: times.to_vec(), ln_rho, log_deriv })
    }

    /// Relative residual of the defining ODE at `t` with central differences of step `h`.
    pub fn ode_residual(&self, t: f64, h: f64) -> Result<f64> {
        if !(t - h > -1.0) {
            return Err(invalid!("ode residual needs t - h > -1"));
        }
        let l0 = self.ln_rho(t)?;
        // values scaled by ρ(t)
        let r = |s: f64| -> Result<f64> { Ok(libm::exp(self.ln_rho(s)? - l0)) };
        let (rm, rp) = (r(t - h)?, r(t + h)?);
        let second = (libm::expm1(self.ln_rho(t + h)? - l0) + libm::expm1(self.ln_rho(t - h)? - l0)) / (h * h);
        let damp = |s: f64, v: f64| self.mu / (1.0 + s) * v;
        let damp_deriv = (damp(t + h, rp) - damp(t - h, rm)) / (2.0 * h);
        let mass = self.nu_sq / ((1.0 + t) * (1.0 + t)) - self.eta * self.eta;
        let res = second - damp_deriv + mass;
        let scale = second.abs() + damp_deriv.abs() + mass.abs();
        Ok(res.abs() / scale)
    }

    /// The two lower bounds on `K̄(t) = K_{√δ/2}(η(t+1))` used for `G_i ≥ cε`:
    /// `(1+t)K̄² > π/(4η) e^{−2η(t+1)}` and `(1+t)^{−1}K̄^{−2} > η/π e^{2η(t+1)}`.
    pub fn kbar_lower_bounds(&self, t: f64) -> Result<(bool, bool)> {
        Self::check_t(t)?;
        let s = self.eta * (1.0 + t);
        let ln_k = ln_bessel_k(self.order(), s, &self.bessel)?;
        let ln_1t = libm::log(1.0 + t);
        let first = ln_1t + 2.0 * ln_k > libm::log(PI / (4.0 * self.eta)) - 2.0 * s;
        let second = -ln_1t - 2.0 * ln_k > libm::log(self.eta / PI) + 2.0 * s;
        Ok((first, second))
    }
}

/// Samples of a [`RhoProfile`] on a time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct RhoTable {
    pub times: Vec<f64>,
    pub ln_rho: Vec<f64>,
    pub log_deriv: Vec<f64>,
}

/// Standalone form of [`RhoProfile::gamma`].
pub fn gamma_coeff(profile: &RhoProfile, t: f64) -> Result<f64> {
    profile.gamma(t)
}

/// Standalone form of [`RhoProfile::kbar_lower_bounds`].
pub fn kbar_lower_bounds(profile: &RhoProfile, t: f64) -> Result<(bool, bool)> {
    profile.kbar_lower_bounds(t)
}

/// First grid time from which `pred` holds at every remaining grid point.
fn first_persistent<F: FnMut(f64) -> Result<bool>>(grid: &[f64], mut pred: F) -> Result<Option<f64>> {
    let mut start = None;
    for &t in grid {
        if pred(t)? {
            start.get_or_insert(t);
        } else {
            start = None;
        }
    }
    Ok(start)
}

/// Empirical `T₀`: first grid time after which both `K̄` bounds hold on the rest of the grid.
pub fn threshold_t0(profiles: &[RhoProfile], grid: &[f64]) -> Result<Option<f64>> {
    first_persistent(grid, |t| {
        for p in profiles {
            let (a, b) = p.kbar_lower_bounds(t)?;
            if !(a && b) {
                return Ok(false);
            }
        }
        Ok(true)
    })
}

/// Empirical `T₂`: the first grid time from which `Γ_i > 0` and `η₀/4 − 3Γ_i/32 > 0`
/// hold for every profile, clamped below by 1 and then doubled.
pub fn threshold_t2(profiles: &[RhoProfile], eta0: f64, grid: &[f64]) -> Result<Option<f64>> {
    let start = first_persistent(grid, |t| {
        for p in profiles {
            let g = p.gamma(t)?;
            if !(g > 0.0 && eta0 / 4.0 - 3.0 * g / 32.0 > 0.0) {
                return Ok(false);
            }
        }
        Ok(true)
    })?;
    Ok(start.map(|t| 2.0 * t.max(1.0)))
}

/// Relative residual of the conjugate equation
/// `ψ_tt − Δψ − ∂_t(μψ/(1+t)) + ν²ψ/(1+t)² = 0` for `ψ(r,t) = ρ(t)φ(r)`,
/// with every derivative taken by central differences on a `(h_t, h_r)` stencil.
pub fn conjugate_residual(
    rho: &RhoProfile,
    phi: &PhiEvaluator,
    r: f64,
    t: f64,
    h_t: f64,
    h_r: f64,
) -> Result<f64> {
    if !(r > h_r && t - h_t > -1.0) {
        return Err(invalid!("conjugate residual needs r > h_r and t - h_t > -1"));
    }
    let l0 = rho.ln_rho(t)? + phi.ln_phi(r);
    let lr = [rho.ln_rho(t - h_t)?, rho.ln_rho(t)?, rho.ln_rho(t + h_t)?];
    let lp = [phi.ln_phi(r - h_r), phi.ln_phi(r), phi.ln_phi(r + h_r)];
    // ψ(r_j, t_k) / ψ(r, t) - 1
    let dpsi = |j: usize, k: usize| libm::expm1(lr[k] + lp[j] - l0);
    let psi = |j: usize, k: usize| 1.0 + dpsi(j, k);
    let tt = (dpsi(1, 2) + dpsi(1, 0)) / (h_t * h_t);
    let rr = (dpsi(2, 1) + dpsi(0, 1)) / (h_r * h_r);
    let radial = (psi(2, 1) - psi(0, 1)) / (2.0 * h_r);
    let lap = rr + f64::from(phi.n - 1) / r * radial;
    let damp = |k: usize, s: f64| rho.mu / (1.0 + s) * psi(1, k);
    let damp_t = (damp(2, t + h_t) - damp(0, t - h_t)) / (2.0 * h_t);
    let mass = rho.nu_sq / ((1.0 + t) * (1.0 + t));
    let res = tt - lap - damp_t + mass;
    Ok(res.abs() / (tt.abs() + lap.abs() + damp_t.abs() + mass))
}

/// Separable test function `ψ_i(r, t) = ρ_i(t) φ(r)`.
#[derive(Debug, Clone)]
pub struct TestFunction {
    pub rho: RhoProfile,
    pub phi: PhiEvaluator,
}

impl TestFunction {
    /// `ψ_i` of equation `i` of `params`, with `φ` prepared up to `r_max`.
    pub fn for_equation(params: &SystemParams, i: u8, eta: f64, r_max: f64) -> Result<Self> {
        Ok(TestFunction { rho: RhoProfile::for_equation(params, i, eta)?, phi: PhiEvaluator::new(params.n, eta, r_max)? })
    }

    pub fn index(&self) -> u8 {
        self.rho.index
    }

    pub fn ln_psi(&self, r: f64, t: f64) -> Result<f64> {
        Ok(self.rho.ln_rho(t)? + self.phi.ln_phi(r))
    }

    pub fn psi(&self, r: f64, t: f64) -> Result<f64> {
        Ok(libm::exp(self.ln_psi(r, t)?))
    }

    pub fn residual(&self, r: f64, t: f64, h_t: f64, h_r: f64) -> Result<f64> {
        conjugate_residual(&self.rho, &self.phi, r, t, h_t, h_r)
    }
}

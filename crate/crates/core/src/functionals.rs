//! Weighted integrals of a run and the checks built on them.
//!
//! With `ψ_i(x,t) = ρ_i(t)φ(x)` at `η = η₀`:
//!
//! * `F_i = e^{−ηt}⟨w_i, φ^η⟩`, `F̃_i = e^{−ηt}⟨∂_t w_i, φ^η⟩` (`w₁ = u`, `w₂ = v`),
//! * `G_i = ⟨w_i, ψ_i⟩`, `G̃_i = ⟨∂_t w_i, ψ_i⟩`,
//! * `N₁ = ⟨|v_t|^p, ψ₁⟩`, `N₂ = ⟨|u_t|^q, ψ₂⟩`,
//! * `L_i(t) = ⅛∫_{T₂}^t N_i ds + C₃ε/8`.
//!
//! Pairings are radial quadratures on the solver grid.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{invalid, Error, Result};
use crate::exponents::SystemParams;
use crate::quad;
use crate::solver::{InitialData, RadialGrid, SolverState};
use crate::specfun::{self, PhiEvaluator, RhoProfile};

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub enum PairingRule {
    #[default]
    Trapezoid,
    /// Composite Simpson; an even node count closes with one trapezoid panel.
    Simpson,
}

/// Quadrature weights of `∫_{R^N} h(|x|) dx ≈ Σ_j W_j h(r_j)`, including `|S^{N−1}| r^{N−1}`.
pub fn radial_weights(n: u32, grid: &RadialGrid, rule: PairingRule) -> Vec<f64> {
    let m = grid.nr;
    let h = grid.dr;
    let mut w = vec![0.0; m];
    match rule {
        PairingRule::Trapezoid => {
            w.iter_mut().for_each(|x| *x = h);
            w[0] = 0.5 * h;
            w[m - 1] = 0.5 * h;
        }
        PairingRule::Simpson => {
            let odd = if m % 2 == 1 { m } else { m - 1 };
            for (j, x) in w.iter_mut().enumerate().take(odd) {
                *x = if j == 0 || j == odd - 1 {
                    h / 3.0
                } else if j % 2 == 1 {
                    4.0 * h / 3.0
                } else {
                    2.0 * h / 3.0
                };
            }
            if odd < m {
                w[m - 2] += 0.5 * h;
                w[m - 1] += 0.5 * h;
            }
        }
    }
    let area = specfun::sphere_area(n - 1);
    for (j, x) in w.iter_mut().enumerate() {
        *x *= area * libm::pow(grid.radius(j), f64::from(n - 1));
    }
    w
}

/// `|S^{N−1}| ∫ field(r) weight(r) r^{N−1} dr` on the grid.
pub fn radial_pairing<W: Fn(f64) -> f64>(
    field: &[f64],
    weight: W,
    n: u32,
    grid: &RadialGrid,
    rule: PairingRule,
) -> f64 {
    radial_weights(n, grid, rule)
        .iter()
        .enumerate()
        .zip(field)
        .map(|((j, w), f)| w * f * weight(grid.radius(j)))
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct FunctionalConfig {
    /// `η` of `F_i`, `F̃_i`; `None` means `η₀`. `ψ_i` always uses `η₀`.
    pub eta: Option<f64>,
    pub rule: PairingRule,
    /// Whether the run included the source terms; the `N_i` are reported as zero otherwise.
    pub nonlinear: bool,
}

impl Default for FunctionalConfig {
    fn default() -> Self {
        FunctionalConfig { eta: None, rule: PairingRule::Trapezoid, nonlinear: true }
    }
}

/// All functionals at one time.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct FunctionalSample {
    pub t: f64,
    pub f: [f64; 2],
    pub ft: [f64; 2],
    pub g: [f64; 2],
    pub gt: [f64; 2],
    /// `N₁ = ⟨|v_t|^p, ψ₁⟩`, `N₂ = ⟨|u_t|^q, ψ₂⟩` (zero for linear runs).
    pub nonlinear: [f64; 2],
    pub gamma: [f64; 2],
    pub ln_rho: [f64; 2],
    /// Sharp Hölder lower bound for `N_i` in terms of `G̃_j` (0 where `G̃_j ≤ 0`).
    pub holder_rhs: [f64; 2],
}

/// Samples of one run on the solver's time grid.
#[derive(Debug, Clone, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct FunctionalSeries {
    pub eps: f64,
    pub samples: Vec<FunctionalSample>,
}

impl FunctionalSeries {
    pub fn times(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.t).collect()
    }

    pub fn column<F: Fn(&FunctionalSample) -> f64>(&self, f: F) -> Vec<f64> {
        self.samples.iter().map(f).collect()
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

/// Pairings of a [`SolverState`] against the fixed weights of one parameter set.
#[derive(Debug, Clone)]
pub struct FunctionalEvaluator {
    pub params: SystemParams,
    pub grid: RadialGrid,
    pub eta: f64,
    pub eta0: f64,
    pub rho: [RhoProfile; 2],
    nonlinear: bool,
    weights: Vec<f64>,
    ln_phi_eta: Vec<f64>,
    ln_phi0: Vec<f64>,
}

impl FunctionalEvaluator {
    pub fn new(params: &SystemParams, grid: &RadialGrid, cfg: &FunctionalConfig) -> Result<Self> {
        params.validate()?;
        let eta0 = params.eta0();
        let eta = cfg.eta.unwrap_or(eta0);
        if !(eta > 0.0 && eta.is_finite()) {
            return Err(invalid!("eta must be positive (got {eta})"));
        }
        let rho = [RhoProfile::for_equation(params, 1, eta0)?, RhoProfile::for_equation(params, 2, eta0)?];
        let radii = grid.radii();
        let ev0 = PhiEvaluator::new(params.n, eta0, grid.r_max)?;
        let ln_phi0: Vec<f64> = radii.iter().map(|&r| ev0.ln_phi(r)).collect();
        let ln_phi_eta = if eta == eta0 {
            ln_phi0.clone()
        } else {
            let ev = PhiEvaluator::new(params.n, eta, grid.r_max)?;
            radii.iter().map(|&r| ev.ln_phi(r)).collect()
        };
        Ok(FunctionalEvaluator {
            params: *params,
            grid: *grid,
            eta,
            eta0,
            rho,
            nonlinear: cfg.nonlinear,
            weights: radial_weights(params.n, grid, cfg.rule),
            ln_phi_eta,
            ln_phi0,
        })
    }

    /// `Σ_j W_j a_j e^{ln φ_j + shift}`.
    fn pair(&self, a: &[f64], ln_phi: &[f64], shift: f64) -> f64 {
        let mut s = 0.0;
        for j in 0..a.len() {
            if a[j] != 0.0 {
                s += self.weights[j] * a[j] * libm::exp(ln_phi[j] + shift);
            }
        }
        s
    }

    /// `⟨a, φ^{η₀}⟩` for data sampled on the grid.
    pub fn pair_phi0(&self, a: &[f64]) -> f64 {
        self.pair(a, &self.ln_phi0, 0.0)
    }

    /// `(F₁, F₂)`.
    pub fn eval_f(&self, s: &SolverState) -> [f64; 2] {
        let shift = -self.eta * s.t;
        [self.pair(&s.u, &self.ln_phi_eta, shift), self.pair(&s.v, &self.ln_phi_eta, shift)]
    }

    /// `(F̃₁, F̃₂)`.
    pub fn eval_ftilde(&self, s: &SolverState) -> [f64; 2] {
        let shift = -self.eta * s.t;
        [self.pair(&s.ut, &self.ln_phi_eta, shift), self.pair(&s.vt, &self.ln_phi_eta, shift)]
    }

    /// `(G₁, G₂, G̃₁, G̃₂)`.
    pub fn eval_g(&self, s: &SolverState) -> Result<[f64; 4]> {
        let l1 = self.rho[0].ln_rho(s.t)?;
        let l2 = self.rho[1].ln_rho(s.t)?;
        Ok([
            self.pair(&s.u, &self.ln_phi0, l1),
            self.pair(&s.v, &self.ln_phi0, l2),
            self.pair(&s.ut, &self.ln_phi0, l1),
            self.pair(&s.vt, &self.ln_phi0, l2),
        ])
    }

    pub fn sample(&self, s: &SolverState) -> Result<FunctionalSample> {
        let t = s.t;
        let ln_rho = [self.rho[0].ln_rho(t)?, self.rho[1].ln_rho(t)?];
        let gamma = [self.rho[0].gamma(t)?, self.rho[1].gamma(t)?];
        let g = [
            self.pair(&s.u, &self.ln_phi0, ln_rho[0]),
            self.pair(&s.v, &self.ln_phi0, ln_rho[1]),
        ];
        let gt = [
            self.pair(&s.ut, &self.ln_phi0, ln_rho[0]),
            self.pair(&s.vt, &self.ln_phi0, ln_rho[1]),
        ];
        let mut nonlinear = [0.0; 2];
        let mut holder_rhs = [0.0; 2];
        if self.nonlinear {
            let (p, q) = (self.params.p, self.params.q);
            // equation 1 is fed by v_t, equation 2 by u_t
            let feeds = [(&s.vt, p, 0usize, 1usize), (&s.ut, q, 1, 0)];
            for (i, &(src, power, own, other)) in feeds.iter().enumerate() {
                let mut sum = 0.0;
                let mut domain = 0.0;
                for j in 0..src.len() {
                    if src[j] != 0.0 {
                        let phi = libm::exp(self.ln_phi0[j]);
                        sum += self.weights[j] * libm::pow(src[j].abs(), power) * phi;
                        domain += self.weights[j] * phi;
                    }
                }
                nonlinear[i] = sum * libm::exp(ln_rho[own]);
                let gj = gt[other];
                if gj > 0.0 && domain > 0.0 {
                    holder_rhs[i] = libm::exp(
                        power * libm::log(gj) + ln_rho[own] - power * ln_rho[other]
                            - (power - 1.0) * libm::log(domain),
                    );
                }
            }
        }
        Ok(FunctionalSample {
            t,
            f: self.eval_f(s),
            ft: self.eval_ftilde(s),
            g,
            gt,
            nonlinear,
            gamma,
            ln_rho,
            holder_rhs,
        })
    }
}

/// Observer for [`crate::solver::run_until_blowup`] that appends a sample per accepted step.
#[derive(Debug, Clone)]
pub struct FunctionalRecorder {
    pub evaluator: FunctionalEvaluator,
    pub series: FunctionalSeries,
    /// First evaluation error, if any; later samples are skipped.
    pub error: Option<Error>,
}

impl FunctionalRecorder {
    pub fn new(evaluator: FunctionalEvaluator) -> Self {
        let eps = evaluator.params.eps;
        FunctionalRecorder { evaluator, series: FunctionalSeries { eps, samples: Vec::new() }, error: None }
    }

    pub fn observe(&mut self, s: &SolverState) {
        if self.error.is_some() {
            return;
        }
        match self.evaluator.sample(s) {
            Ok(x) => self.series.samples.push(x),
            Err(e) => self.error = Some(e),
        }
    }

    pub fn finish(self) -> Result<FunctionalSeries> {
        match self.error {
            Some(e) => Err(e),
            None => Ok(self.series),
        }
    }
}

/// `(L₁, L₂)` on the series' time grid; the constant `C₃ε/8` before `T₂`.
pub fn eval_l(series: &FunctionalSeries, c3: f64, t2: f64) -> [Vec<f64>; 2] {
    let base = c3 * series.eps / 8.0;
    let t = series.times();
    let mut out = [vec![base; t.len()], vec![base; t.len()]];
    for (i, l) in out.iter_mut().enumerate() {
        let n = series.column(|s| s.nonlinear[i]);
        let mut acc = 0.0;
        for k in 1..t.len() {
            if t[k] <= t2 {
                continue;
            }
            let (ta, na) = if t[k - 1] >= t2 {
                (t[k - 1], n[k - 1])
            } else {
                // first panel straddling T₂: interpolate N at T₂
                let s = (t2 - t[k - 1]) / (t[k] - t[k - 1]);
                (t2, n[k - 1] + s * (n[k] - n[k - 1]))
            };
            acc += 0.5 * (t[k] - ta) * (n[k] + na);
            l[k] = base + acc / 8.0;
        }
    }
    out
}

/// `C_i` of the weak identity from `ρ_i(0)`, `ρ_i'(0)`:
/// `C_i = (μ_i ρ_i(0) − ρ_i'(0))⟨f_i, φ⟩ + ρ_i(0)⟨g_i, φ⟩`.
fn c_from_rho(rho: &RhoProfile, pf: f64, pg: f64) -> Result<f64> {
    let r0 = rho.rho(0.0)?;
    let d0 = rho.log_deriv(0.0)? * r0;
    Ok((rho.mu * r0 - d0) * pf + r0 * pg)
}

/// The same constant with every Bessel function evaluated at argument 1:
/// `K_ν(1)⟨((μ−1−√δ)/2) f + g, φ⟩ + K_{ν+1}(1)⟨f, φ⟩`, `ν = √δ/2`.
fn c_unit_argument(rho: &RhoProfile, pf: f64, pg: f64) -> Result<f64> {
    let nu = rho.order();
    let k0 = specfun::bessel_k(nu, 1.0, &rho.bessel)?;
    let k1 = specfun::bessel_k(nu + 1.0, 1.0, &rho.bessel)?;
    let c = 0.5 * (rho.mu - 1.0 - libm::sqrt(rho.delta));
    Ok(k0 * (c * pf + pg) + k1 * pf)
}

/// Constants and thresholds of one configuration.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct ConstantsReport {
    pub eta0: f64,
    /// `C_i` built from `ρ_i(0)`, `ρ_i'(0)`.
    pub c: [f64; 2],
    /// `C_i` with the Bessel functions at argument 1.
    pub c_unit_argument: [f64; 2],
    /// `⟨f_i, φ⟩`, `⟨g_i, φ⟩` on the grid.
    pub pairing_f: [f64; 2],
    pub pairing_g: [f64; 2],
    /// `G_i(0)/ε = ρ_i(0)⟨f_i, φ⟩` and the same without the `η₀^{(μ_i+1)/2}` factor.
    pub g0_over_eps: [f64; 2],
    pub g0_over_eps_bessel_only: [f64; 2],
    /// First time after which both `K̄` bounds hold on the scan grid.
    pub t0: Option<f64>,
    /// Threshold from the sign conditions on `Γ_i`.
    pub t2_gamma: Option<f64>,
    /// Measured quantities; present once a series has been supplied.
    pub measured: Option<MeasuredConstants>,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct MeasuredConstants {
    /// `min_{t ≥ T₀} G_i/ε` (over the whole run when `T₀` is beyond it).
    pub c_g: [f64; 2],
    /// First sample time after which `G̃₁, G̃₂ > 0` persist, at least 1.
    pub t1: f64,
    /// `T₂ = max(t2_gamma, T₁)`.
    pub t2: f64,
    /// `min_{t ≥ T₂} G̃_i/ε`.
    pub c_gtilde: [f64; 2],
    /// `min(C₁/4, C₂/4, 8C_G̃₁, 8C_G̃₂)`.
    pub c3: f64,
}

/// Scan grid for `T₀` and `T₂`: quarter steps on `[0, max(t_end, 20)]`.
fn scan_grid(t_end: f64) -> Vec<f64> {
    let top = t_end.max(20.0);
    let n = libm::ceil(top / 0.25) as usize;
    (0..=n).map(|k| 0.25 * k as f64).collect()
}

pub fn constants_report(
    params: &SystemParams,
    data: &InitialData,
    evaluator: &FunctionalEvaluator,
    series: Option<&FunctionalSeries>,
) -> Result<ConstantsReport> {
    data.validate(params)?;
    let radii = evaluator.grid.radii();
    let mut pairing_f = [0.0; 2];
    let mut pairing_g = [0.0; 2];
    let mut c = [0.0; 2];
    let mut c_unit = [0.0; 2];
    let mut g0 = [0.0; 2];
    let mut g0_b = [0.0; 2];
    for i in 0..2 {
        let f: Vec<f64> = radii.iter().map(|&r| data.f(i, r)).collect();
        let g: Vec<f64> = radii.iter().map(|&r| data.g(i, r)).collect();
        pairing_f[i] = evaluator.pair_phi0(&f);
        pairing_g[i] = evaluator.pair_phi0(&g);
        let rho = &evaluator.rho[i];
        c[i] = c_from_rho(rho, pairing_f[i], pairing_g[i])?;
        c_unit[i] = c_unit_argument(rho, pairing_f[i], pairing_g[i])?;
        g0[i] = rho.rho(0.0)? * pairing_f[i];
        g0_b[i] = specfun::bessel_k(rho.order(), rho.eta, &rho.bessel)? * pairing_f[i];
        if !(c[i] > 0.0) {
            return Err(Error::InvalidData(alloc::format!(
                "C{} = {} is not positive; the data violate the blow-up hypotheses",
                i + 1,
                c[i]
            )));
        }
    }
    let t_end = series.and_then(|s| s.samples.last()).map_or(100.0, |s| s.t);
    let grid = scan_grid(t_end);
    let t0 = specfun::threshold_t0(&evaluator.rho, &grid)?;
    let t2_gamma = specfun::threshold_t2(&evaluator.rho, evaluator.eta0, &grid)?;
    let measured = match series {
        Some(s) if !s.is_empty() => Some(measure(s, c, t0, t2_gamma)?),
        _ => None,
    };
    Ok(ConstantsReport {
        eta0: evaluator.eta0,
        c,
        c_unit_argument: c_unit,
        pairing_f,
        pairing_g,
        g0_over_eps: g0,
        g0_over_eps_bessel_only: g0_b,
        t0,
        t2_gamma,
        measured,
    })
}

fn measure(series: &FunctionalSeries, c: [f64; 2], t0: Option<f64>, t2_gamma: Option<f64>) -> Result<MeasuredConstants> {
    let eps = series.eps;
    let last = series.samples.last().map_or(0.0, |s| s.t);
    let from = |t_min: f64, f: &dyn Fn(&FunctionalSample) -> f64| {
        series.samples.iter().filter(|s| s.t >= t_min).map(f).fold(f64::INFINITY, f64::min)
    };
    let t0v = t0.filter(|&t| t <= last).unwrap_or(0.0);
    let c_g = [from(t0v, &|s| s.g[0] / eps), from(t0v, &|s| s.g[1] / eps)];
    let mut t1 = None;
    for s in &series.samples {
        if s.gt[0] > 0.0 && s.gt[1] > 0.0 {
            t1.get_or_insert(s.t);
        } else {
            t1 = None;
        }
    }
    let t1 = t1.unwrap_or(last).max(1.0);
    let t2 = t2_gamma.unwrap_or(2.0).max(t1);
    let c_gtilde = [from(t2, &|s| s.gt[0] / eps), from(t2, &|s| s.gt[1] / eps)];
    let c3 = (c[0] / 4.0).min(c[1] / 4.0).min(8.0 * c_gtilde[0]).min(8.0 * c_gtilde[1]);
    Ok(MeasuredConstants { c_g, t1, t2, c_gtilde, c3 })
}

/// Relative residual of `G₁' + Γ₁G₁ = ∫₀^t N₁ ds + εC₁` (and the mirror identity) at every sample,
/// with `G_i'` by three-point differences on the sample times.
pub fn weak_identity_residual(series: &FunctionalSeries, c: [f64; 2]) -> [Vec<f64>; 2] {
    let t = series.times();
    let mut out = [Vec::new(), Vec::new()];
    for (i, res) in out.iter_mut().enumerate() {
        let g = series.column(|s| s.g[i]);
        let dg = quad::nonuniform_derivative(&t, &g);
        let n_int = quad::cumulative_trapezoid(&t, &series.column(|s| s.nonlinear[i]));
        for k in 0..t.len() {
            let gamma_g = series.samples[k].gamma[i] * g[k];
            let rhs = n_int[k] + series.eps * c[i];
            let lhs = dg[k] + gamma_g;
            let scale = dg[k].abs() + gamma_g.abs() + rhs.abs();
            res.push(if scale > 0.0 { (lhs - rhs).abs() / scale } else { 0.0 });
        }
    }
    out
}

/// One sample of the Hölder check.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct HolderPoint {
    pub t: f64,
    /// `N_i`.
    pub lhs: f64,
    /// Sharp Hölder bound `G̃_j^p ρ_i ρ_j^{−p} (∫_{∂_t w_j ≠ 0} φ)^{−(p−1)}`.
    pub rhs: f64,
    /// `N_i / (t^{a_i} G̃_j^p)` with the power-law exponent `a_i`.
    pub c: f64,
}

/// Power-law exponents `a₁ = −(N−1)(p−1)/2 + μ₁/2 − μ₂p/2` and the mirror `a₂`.
pub fn holder_exponents(params: &SystemParams) -> [f64; 2] {
    let nm1 = f64::from(params.n - 1);
    [
        -nm1 * (params.p - 1.0) / 2.0 + params.mu1 / 2.0 - params.mu2 * params.p / 2.0,
        -nm1 * (params.q - 1.0) / 2.0 + params.mu2 / 2.0 - params.mu1 * params.q / 2.0,
    ]
}

/// Hölder check for `t ≥ t_from`; samples with `G̃_j ≤ 0` are skipped.
pub fn holder_check(series: &FunctionalSeries, params: &SystemParams, t_from: f64) -> [Vec<HolderPoint>; 2] {
    let a = holder_exponents(params);
    let powers = [params.p, params.q];
    let mut out = [Vec::new(), Vec::new()];
    for s in series.samples.iter().filter(|s| s.t >= t_from && s.t > 0.0) {
        for i in 0..2 {
            let gj = s.gt[1 - i];
            if gj <= 0.0 {
                continue;
            }
            let c = s.nonlinear[i] / libm::exp(a[i] * libm::log(s.t) + powers[i] * libm::log(gj));
            out[i].push(HolderPoint { t: s.t, lhs: s.nonlinear[i], rhs: s.holder_rhs[i], c });
        }
    }
    out
}

/// `[∫_{|x|≤t+R} (φ^η)^r dx] / [e^{rηt}(1+t)^{(2−r)(N−1)/2}]` at each `t`.
pub fn phi_weight_ratio(n: u32, eta: f64, r_exp: f64, t_grid: &[f64], radius: f64) -> Result<Vec<f64>> {
    if !(r_exp > 1.0) {
        return Err(invalid!("exponent r must exceed 1 (got {r_exp})"));
    }
    if !(radius > 0.0) {
        return Err(invalid!("R must be positive (got {radius})"));
    }
    let t_max = t_grid.iter().cloned().fold(0.0, f64::max);
    let ev = PhiEvaluator::new(n, eta, t_max + radius)?;
    let area = specfun::sphere_area(n - 1);
    let nm1 = f64::from(n - 1);
    let mut out = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        if !(t >= 0.0) {
            return Err(invalid!("times must be nonnegative (got {t})"));
        }
        let reach = t + radius;
        // integrand scaled by e^{−rη(t+R)}
        let shift = -r_exp * eta * reach;
        let f = |s: f64| libm::exp(r_exp * ev.ln_phi(s) + shift) * libm::pow(s, nm1);
        // the mass sits within a few 1/(rη) of the edge
        let knee = (reach - 40.0 / (r_exp * eta)).max(0.0);
        let mut total = quad::integrate(f, knee, reach, 1e-10, 0.0, 200)?.value;
        if knee > 0.0 {
            total += quad::integrate(f, 0.0, knee, 1e-6, 0.0, 200)?.value;
        }
        let ln_ratio = libm::log(area * total) + r_exp * eta * radius - 0.5 * (2.0 - r_exp) * nm1 * libm::log(1.0 + t);
        out.push(libm::exp(ln_ratio));
    }
    Ok(out)
}

/// Verdicts of the positivity, coercivity and ordering lemmas along one run.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct LemmaReport {
    /// `min_t F_i / max_t |F_i|`.
    pub f_min_rel: [f64; 2],
    pub ft_min_rel: [f64; 2],
    pub positivity_tol: f64,
    pub f_positive: bool,
    pub ft_positive: bool,
    pub c_g: [f64; 2],
    pub g_coercive: bool,
    pub c_gtilde: [f64; 2],
    pub gtilde_coercive: bool,
    /// `min_{t ≥ T₂} (G̃_i − L_i) / max_t |G̃_i|`.
    pub ordering_min_rel: [f64; 2],
    pub ordering_holds: bool,
    pub t0: Option<f64>,
    pub t1: f64,
    pub t2: f64,
    pub c3: f64,
    pub weak_identity_max_residual: [f64; 2],
    /// `min_{t ≥ T₂} c(t)` of the Hölder check (`None` without samples).
    pub holder_min_c: [Option<f64>; 2],
    /// `min_{t ≥ T₂} lhs/rhs` of the sharp Hölder form.
    pub holder_min_ratio: [Option<f64>; 2],
}

impl LemmaReport {
    pub fn all_pass(&self) -> bool {
        self.f_positive && self.ft_positive && self.g_coercive && self.gtilde_coercive && self.ordering_holds
    }
}

fn min_rel(x: &[f64]) -> f64 {
    let scale = x.iter().fold(0.0, |m: f64, v| m.max(v.abs()));
    if scale == 0.0 {
        return 0.0;
    }
    x.iter().cloned().fold(f64::INFINITY, f64::min) / scale
}

/// Runs every check on a recorded series. The residual of the weak identity skips the first
/// and last samples where the one-sided difference is used.
pub fn lemma_suite(
    series: &FunctionalSeries,
    params: &SystemParams,
    constants: &ConstantsReport,
    positivity_tol: f64,
) -> Result<LemmaReport> {
    let m = constants
        .measured
        .as_ref()
        .ok_or_else(|| invalid!("lemma suite needs measured constants"))?;
    let col = |f: &dyn Fn(&FunctionalSample) -> f64| series.column(f);
    let f_min_rel = [min_rel(&col(&|s| s.f[0])), min_rel(&col(&|s| s.f[1]))];
    let ft_min_rel = [min_rel(&col(&|s| s.ft[0])), min_rel(&col(&|s| s.ft[1]))];
    let l = eval_l(series, m.c3, m.t2);
    let mut ordering = [f64::INFINITY; 2];
    for i in 0..2 {
        let scale = series.samples.iter().fold(0.0, |a: f64, s| a.max(s.gt[i].abs()));
        for (k, s) in series.samples.iter().enumerate() {
            if s.t >= m.t2 && scale > 0.0 {
                ordering[i] = ordering[i].min((s.gt[i] - l[i][k]) / scale);
            }
        }
    }
    let res = weak_identity_residual(series, constants.c);
    let inner_max = |r: &Vec<f64>| {
        if r.len() > 2 { r[1..r.len() - 1].iter().cloned().fold(0.0, f64::max) } else { 0.0 }
    };
    let holder = holder_check(series, params, m.t2);
    let hmin = |pts: &Vec<HolderPoint>, f: &dyn Fn(&HolderPoint) -> f64| {
        pts.iter().map(f).reduce(f64::min)
    };
    let ordering_holds = ordering.iter().all(|&o| o >= -positivity_tol || o == f64::INFINITY);
    Ok(LemmaReport {
        f_min_rel,
        ft_min_rel,
        positivity_tol,
        f_positive: f_min_rel.iter().all(|&v| v >= -positivity_tol),
        ft_positive: ft_min_rel.iter().all(|&v| v >= -positivity_tol),
        c_g: m.c_g,
        g_coercive: m.c_g.iter().all(|&c| c > 0.0),
        c_gtilde: m.c_gtilde,
        gtilde_coercive: m.c_gtilde.iter().all(|&c| c > 0.0),
        ordering_min_rel: ordering,
        ordering_holds,
        t0: constants.t0,
        t1: m.t1,
        t2: m.t2,
        c3: m.c3,
        weak_identity_max_residual: [inner_max(&res[0]), inner_max(&res[1])],
        holder_min_c: [hmin(&holder[0], &|p| p.c), hmin(&holder[1], &|p| p.c)],
        holder_min_ratio: [
            hmin(&holder[0], &|p| if p.rhs > 0.0 { p.lhs / p.rhs } else { f64::INFINITY }),
            hmin(&holder[1], &|p| if p.rhs > 0.0 { p.lhs / p.rhs } else { f64::INFINITY }),
        ],
    })
}

//! Reduced ODE system for `L₁, L₂`:
//!
//! ```text
//! y₁' = c₁ (T₂+t)^{a₁} y₂^p,   y₂' = c₂ (T₂+t)^{a₂} y₁^q,   t ≥ T₂,   y_i(T₂) = y_i0.
//! ```
//!
//! Integrated in `τ = ln(T₂ + t)` and `z_i = ln y_i`, which keeps critical cases
//! (blow-up times like `e^{10⁴}`) in range:
//! `dz₁/dτ = c₁ exp((a₁+1)τ + p z₂ − z₁)` and the mirror equation.

use alloc::vec::Vec;

use crate::error::{invalid, Error, Result};
use crate::exponents::{self, CaseLabel, LifespanBound, SystemParams};
use crate::functionals::{eval_l, holder_exponents, FunctionalSeries};

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct KatoSystem {
    pub c1: f64,
    pub c2: f64,
    pub a1: f64,
    pub a2: f64,
    pub p: f64,
    pub q: f64,
    pub y10: f64,
    pub y20: f64,
    pub t2: f64,
}

/// Constants that the blow-up argument leaves unspecified.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct KatoConstants {
    pub c1: f64,
    pub c2: f64,
    /// `y_i0 = C₃ε/8`.
    pub c3: f64,
    pub t2: f64,
}

impl Default for KatoConstants {
    fn default() -> Self {
        KatoConstants { c1: 1.0, c2: 1.0, c3: 1.0, t2: 2.0 }
    }
}

impl KatoSystem {
    pub fn from_params(params: &SystemParams, k: &KatoConstants) -> Result<Self> {
        params.validate()?;
        let [a1, a2] = holder_exponents(params);
        let y0 = k.c3 * params.eps / 8.0;
        let sys = KatoSystem { c1: k.c1, c2: k.c2, a1, a2, p: params.p, q: params.q, y10: y0, y20: y0, t2: k.t2 };
        sys.validate()?;
        Ok(sys)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.c1 > 0.0 && self.c2 > 0.0 && self.c1.is_finite() && self.c2.is_finite()) {
            return Err(invalid!("c1 and c2 must be positive (got {}, {})", self.c1, self.c2));
        }
        if !(self.y10 > 0.0 && self.y20 > 0.0) {
            return Err(invalid!("initial values must be positive (got {}, {})", self.y10, self.y20));
        }
        if !(self.p > 1.0 && self.q > 1.0) {
            return Err(invalid!("p and q must exceed 1 (got {}, {})", self.p, self.q));
        }
        if !(self.t2 > 1.0 && self.t2.is_finite()) {
            return Err(invalid!("T2 must exceed 1 (got {})", self.t2));
        }
        if !(self.a1.is_finite() && self.a2.is_finite()) {
            return Err(invalid!("exponents a1, a2 must be finite"));
        }
        Ok(())
    }

    fn rhs(&self, tau: f64, z: [f64; 2]) -> [f64; 2] {
        [
            self.c1 * libm::exp((self.a1 + 1.0) * tau + self.p * z[1] - z[0]),
            self.c2 * libm::exp((self.a2 + 1.0) * tau + self.q * z[0] - z[1]),
        ]
    }
}

/// Coupling constants read off a recorded PDE run: with `L_i` built from `(c3, t2)`,
/// `c_i = min_{t ∈ [T₂, t_end]} (N_i/8) / ((T₂+t)^{a_i} L_j^p)`, the largest constants for which
/// `L` is a supersolution of the system on the recorded window.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct FittedCoupling {
    pub system: KatoSystem,
    /// Samples that entered the minimum.
    pub samples: usize,
    /// Last recorded time.
    pub t_end: f64,
}

pub fn fit_coupling(series: &FunctionalSeries, params: &SystemParams, c3: f64, t2: f64) -> Result<FittedCoupling> {
    params.validate()?;
    if !(c3 > 0.0 && t2 > 1.0) {
        return Err(invalid!("fit needs C3 > 0 and T2 > 1 (got {c3}, {t2})"));
    }
    let a = holder_exponents(params);
    let pw = [params.p, params.q];
    let l = eval_l(series, c3, t2);
    let mut c = [f64::INFINITY; 2];
    let mut used = 0;
    for (k, s) in series.samples.iter().enumerate() {
        if s.t < t2 {
            continue;
        }
        used += 1;
        for i in 0..2 {
            let j = 1 - i;
            let den = libm::pow(t2 + s.t, a[i]) * libm::pow(l[j][k], pw[i]);
            c[i] = c[i].min(s.nonlinear[i] / 8.0 / den);
        }
    }
    if used < 2 {
        return Err(Error::FitRefused { usable: used, required: 2 });
    }
    let y0 = c3 * series.eps / 8.0;
    let system = KatoSystem { c1: c[0], c2: c[1], a1: a[0], a2: a[1], p: params.p, q: params.q, y10: y0, y20: y0, t2 };
    system.validate()?;
    Ok(FittedCoupling { system, samples: used, t_end: series.samples.last().map_or(t2, |s| s.t) })
}

/// Blow-up time of `y' = c t^a y^p`, `y(T₂) = y₀`; infinity when the solution stays finite.
pub fn single_blowup_closed_form(c: f64, a: f64, p: f64, y0: f64, t2: f64) -> f64 {
    let m = libm::pow(y0, 1.0 - p) / (c * (p - 1.0));
    if a == -1.0 {
        return t2 * libm::exp(m);
    }
    let b = libm::pow(t2, a + 1.0) + (a + 1.0) * m;
    if b <= 0.0 {
        return f64::INFINITY;
    }
    libm::pow(b, 1.0 / (a + 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct KatoOptions {
    /// Blow-up is declared once `min(y₁, y₂) > y_max`, or earlier when the remaining time drops
    /// below the resolution of `τ`.
    pub y_max: f64,
    /// Initial step in `τ`.
    pub dtau0: f64,
    /// Local error tolerance on `ln y_i`.
    pub tol: f64,
    /// Horizon `ln(T₂ + t_max)`.
    pub ln_horizon: f64,
    pub max_steps: usize,
    /// Keep every accepted step in the trajectory.
    pub keep_trajectory: bool,
}

impl Default for KatoOptions {
    fn default() -> Self {
        KatoOptions { y_max: 1e10, dtau0: 1e-3, tol: 1e-11, ln_horizon: 1e7, max_steps: 2_000_000, keep_trajectory: false }
    }
}

/// Accepted point of the integration.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct KatoPoint {
    pub tau: f64,
    pub ln_y1: f64,
    pub ln_y2: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub enum KatoOutcome {
    Blowup,
    /// Step size underflow before `y_max`; the time is extrapolated from the last point.
    StepUnderflow,
    NoBlowup,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct KatoSolution {
    pub outcome: KatoOutcome,
    /// `ln t*` of the blow-up time (or of the horizon for [`KatoOutcome::NoBlowup`]).
    pub ln_t_blow: f64,
    /// `t*`; infinite when it overflows `f64`.
    pub t_blow: f64,
    /// Extrapolated remainder in `τ` beyond the last accepted point.
    pub tau_remainder: f64,
    pub steps: usize,
    pub trajectory: Vec<KatoPoint>,
}

fn rk4(sys: &KatoSystem, tau: f64, z: [f64; 2], h: f64) -> [f64; 2] {
    let add = |z: [f64; 2], k: [f64; 2], s: f64| [z[0] + s * k[0], z[1] + s * k[1]];
    let k1 = sys.rhs(tau, z);
    let k2 = sys.rhs(tau + 0.5 * h, add(z, k1, 0.5 * h));
    let k3 = sys.rhs(tau + 0.5 * h, add(z, k2, 0.5 * h));
    let k4 = sys.rhs(tau + h, add(z, k3, h));
    [
        z[0] + h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
        z[1] + h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
    ]
}

/// Remaining `τ` to blow-up with the coefficients frozen at `tau`: the frozen system conserves
/// `A₂y₁^{q+1}/(q+1) − A₁y₂^{p+1}/(p+1)`, so for large `y` it follows `y₂ = K y₁^{(q+1)/(p+1)}` and
/// `y₁' = A₁K^p y₁^P`, `P = p(q+1)/(p+1)`.
fn frozen_remainder(sys: &KatoSystem, tau: f64, z: [f64; 2]) -> f64 {
    let ln_a1 = libm::log(sys.c1) + (sys.a1 + 1.0) * tau;
    let ln_a2 = libm::log(sys.c2) + (sys.a2 + 1.0) * tau;
    let (p, q) = (sys.p, sys.q);
    let ln_k = (ln_a2 + libm::log(p + 1.0) - ln_a1 - libm::log(q + 1.0)) / (p + 1.0);
    let big_p = p * (q + 1.0) / (p + 1.0);
    // Δτ = y₁^{1−P} / (A₁ K^p (P − 1))
    libm::exp((1.0 - big_p) * z[0] - ln_a1 - p * ln_k - libm::log(big_p - 1.0))
}

fn ln_t_from_tau(tau: f64, t2: f64) -> f64 {
    tau + libm::log1p(-t2 * libm::exp(-tau))
}

pub fn solve_kato_system(sys: &KatoSystem, opts: &KatoOptions) -> Result<KatoSolution> {
    sys.validate()?;
    if !(opts.y_max > sys.y10.max(sys.y20)) {
        return Err(invalid!("y_max must exceed the initial values"));
    }
    if !(opts.dtau0 > 0.0 && opts.tol > 0.0) {
        return Err(invalid!("dtau0 and tol must be positive"));
    }
    let ln_ymax = libm::log(opts.y_max);
    let mut tau = libm::log(2.0 * sys.t2);
    let mut z = [libm::log(sys.y10), libm::log(sys.y20)];
    let mut h = opts.dtau0;
    let mut steps = 0;
    let mut trajectory = Vec::new();
    let push = |tau: f64, z: [f64; 2], tr: &mut Vec<KatoPoint>| {
        if opts.keep_trajectory {
            tr.push(KatoPoint { tau, ln_y1: z[0], ln_y2: z[1] });
        }
    };
    push(tau, z, &mut trajectory);
    let finish = |outcome, tau: f64, rem: f64, steps, trajectory| {
        let ln_t = ln_t_from_tau(tau + rem, sys.t2);
        Ok(KatoSolution { outcome, ln_t_blow: ln_t, t_blow: libm::exp(ln_t), tau_remainder: rem, steps, trajectory })
    };
    loop {
        // once the remaining time is below the resolution of τ, further steps cannot move it
        let rem = frozen_remainder(sys, tau, z);
        if z[0].min(z[1]) > ln_ymax || (z[0].min(z[1]) > 0.0 && rem < 1e-13 * tau.abs().max(1.0)) {
            return finish(KatoOutcome::Blowup, tau, rem, steps, trajectory);
        }
        if tau >= opts.ln_horizon {
            return finish(KatoOutcome::NoBlowup, opts.ln_horizon, 0.0, steps, trajectory);
        }
        if steps >= opts.max_steps {
            return Err(Error::NumericalFailure(alloc::format!(
                "Kato integration exhausted {} steps at tau = {tau}",
                opts.max_steps
            )));
        }
        let h_try = h.min(opts.ln_horizon - tau);
        if h_try < 1e-15 * tau.abs().max(1.0) {
            let rem = frozen_remainder(sys, tau, z);
            return finish(KatoOutcome::StepUnderflow, tau, rem, steps, trajectory);
        }
        let full = rk4(sys, tau, z, h_try);
        let half = rk4(sys, tau, z, 0.5 * h_try);
        let two = rk4(sys, tau + 0.5 * h_try, half, 0.5 * h_try);
        let err = (two[0] - full[0]).abs().max((two[1] - full[1]).abs()) / 15.0;
        // also bound the change of ln y per step so the blow-up is approached gradually
        let jump = (two[0] - z[0]).abs().max((two[1] - z[1]).abs());
        if !err.is_finite() || !two[0].is_finite() || !two[1].is_finite() || err > opts.tol || jump > 0.5 {
            h = 0.25 * h_try;
            continue;
        }
        tau += h_try;
        z = [two[0] + (two[0] - full[0]) / 15.0, two[1] + (two[1] - full[1]) / 15.0];
        steps += 1;
        push(tau, z, &mut trajectory);
        let grow = if err > 0.0 { 0.9 * libm::pow(opts.tol / err, 0.2) } else { 4.0 };
        h = h_try * grow.clamp(0.2, 4.0);
    }
}

/// Least-squares fit of the lifespan against `ε`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct LifespanFit {
    pub case_label: CaseLabel,
    /// Sorted by decreasing `ε`.
    pub eps_samples: Vec<f64>,
    /// `ln T` per sample (`T` itself overflows in critical cases).
    pub ln_t_samples: Vec<f64>,
    /// `T` per sample, `None` where it overflows `f64`.
    pub t_samples: Vec<Option<f64>>,
    /// Slope of `ln T` (Subcritical) or `ln ln T` (critical cases) against `ln ε`.
    pub fitted_slope: f64,
    pub intercept: f64,
    /// Slope predicted by the lifespan bound: `−Ω`, `−(pq−1)` or `−min((pq−1)/(p+1), (pq−1)/(q+1))`.
    pub predicted_exponent: f64,
    /// `−1/Ω` in the Subcritical case: the slope the saturated ODE itself scales with.
    pub ode_exponent: Option<f64>,
    /// Root-mean-square residual of the fit.
    pub goodness: f64,
    /// Whether `T` is nondecreasing as `ε` decreases.
    pub monotone: bool,
    /// Number of `ε` that did not blow up within the horizon.
    pub failed: usize,
}

/// Least-squares line `y = slope·x + intercept`, returning the RMS residual too.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = x.iter().zip(y).map(|(a, b)| {
        let r = b - slope * a - intercept;
        r * r
    }).sum();
    (slope, intercept, libm::sqrt(rss / n))
}

/// `count` log-spaced values from `max` down to `min`.
pub fn log_grid(min: f64, max: f64, count: usize) -> Result<Vec<f64>> {
    if !(min > 0.0 && max > min && count >= 2) {
        return Err(invalid!("log grid needs 0 < min < max and count >= 2"));
    }
    let (a, b) = (libm::log(max), libm::log(min));
    let mut g: Vec<f64> = (0..count).map(|k| libm::exp(a + (b - a) * k as f64 / (count - 1) as f64)).collect();
    g[0] = max;
    g[count - 1] = min;
    Ok(g)
}

/// Minimum number of blow-up samples a fit needs.
pub const MIN_FIT_POINTS: usize = 4;

/// Runs the reduced system for every `ε` and fits the lifespan law of the parameter set's case.
pub fn sweep_lifespan(
    params: &SystemParams,
    eps_grid: &[f64],
    k: &KatoConstants,
    opts: &KatoOptions,
) -> Result<LifespanFit> {
    let solutions = eps_grid
        .iter()
        .map(|&eps| {
            let sys = KatoSystem::from_params(&SystemParams { eps, ..*params }, k)?;
            solve_kato_system(&sys, opts)
        })
        .collect::<Result<Vec<_>>>()?;
    fit_lifespan(params, eps_grid, &solutions)
}

/// Fit over precomputed solutions (one per `ε`, in the same order).
pub fn fit_lifespan(params: &SystemParams, eps_grid: &[f64], solutions: &[KatoSolution]) -> Result<LifespanFit> {
    params.validate()?;
    if eps_grid.len() != solutions.len() {
        return Err(invalid!("one solution per eps is required"));
    }
    let (case, bound) = exponents::classify_lifespan(params);
    let predicted = match bound {
        LifespanBound::None => {
            return Err(invalid!("parameters lie outside the blow-up region (case {case:?}); no lifespan law to fit"))
        }
        b => b.predicted_slope().unwrap_or(f64::NAN),
    };
    let mut pts: Vec<(f64, f64)> = eps_grid
        .iter()
        .zip(solutions)
        .filter(|(_, s)| s.outcome != KatoOutcome::NoBlowup)
        .map(|(&e, s)| (e, s.ln_t_blow))
        .collect();
    let failed = eps_grid.len() - pts.len();
    pts.sort_by(|a, b| b.0.total_cmp(&a.0));
    if pts.len() < MIN_FIT_POINTS {
        return Err(Error::FitRefused { usable: pts.len(), required: MIN_FIT_POINTS });
    }
    let x: Vec<f64> = pts.iter().map(|p| libm::log(p.0)).collect();
    let y: Vec<f64> = match case {
        CaseLabel::Subcritical => pts.iter().map(|p| p.1).collect(),
        _ => {
            if pts.iter().any(|p| !(p.1 > 0.0)) {
                return Err(Error::NumericalFailure("ln T must be positive for a critical-case fit".into()));
            }
            pts.iter().map(|p| libm::log(p.1)).collect()
        }
    };
    let (slope, intercept, goodness) = linear_fit(&x, &y);
    let ode_exponent = match case {
        CaseLabel::Subcritical => Some(-1.0 / exponents::omega_new(params)),
        _ => None,
    };
    Ok(LifespanFit {
        case_label: case,
        eps_samples: pts.iter().map(|p| p.0).collect(),
        t_samples: pts.iter().map(|p| Some(libm::exp(p.1)).filter(|t| t.is_finite())).collect(),
        monotone: pts.windows(2).all(|w| w[1].1 >= w[0].1),
        ln_t_samples: pts.into_iter().map(|p| p.1).collect(),
        fitted_slope: slope,
        intercept,
        predicted_exponent: predicted,
        ode_exponent,
        goodness,
        failed,
    })
}

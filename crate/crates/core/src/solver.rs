//! Radial finite-difference simulator.
//!
//! For radial solutions the system reduces to
//! `u_tt = u_rr + (N−1)/r u_r − μ₁/(1+t) u_t − ν₁²/(1+t)² u + |v_t|^p`
//! (and the mirror equation for `v`) on `0 ≤ r ≤ r_max`. Space is discretized
//! with centered differences, time with classical RK4 on the first-order system
//! `(u, u_t, v, v_t)`, so the source always sees the current stage's `v_t`.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{invalid, Error, Result};
use crate::exponents::SystemParams;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

/// Uniform radial grid `r_j = j·dr`, `j = 0..nr`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct RadialGrid {
    pub r_max: f64,
    pub nr: usize,
    pub dr: f64,
}

impl RadialGrid {
    pub fn new(nr: usize, r_max: f64) -> Result<Self> {
        if nr < 3 {
            return Err(invalid!("grid needs at least 3 nodes (got {nr})"));
        }
        if !(r_max > 0.0 && r_max.is_finite()) {
            return Err(invalid!("r_max must be positive (got {r_max})"));
        }
        Ok(RadialGrid { r_max, nr, dr: r_max / (nr - 1) as f64 })
    }

    /// Smallest grid of spacing `dr` whose outer node lies beyond `R + t_max` plus a margin
    /// of `max(1, 10·dr)`.
    pub fn covering(radius: f64, t_max: f64, dr: f64) -> Result<Self> {
        if !(dr > 0.0 && dr.is_finite()) {
            return Err(invalid!("dr must be positive (got {dr})"));
        }
        if !(radius > 0.0 && t_max >= 0.0) {
            return Err(invalid!("covering grid needs R > 0 and t_max >= 0"));
        }
        let reach = radius + t_max + (10.0 * dr).max(1.0);
        let cells = libm::ceil(reach / dr) as usize;
        Ok(RadialGrid { r_max: cells as f64 * dr, nr: cells + 1, dr })
    }

    pub fn radius(&self, j: usize) -> f64 {
        j as f64 * self.dr
    }

    pub fn radii(&self) -> Vec<f64> {
        (0..self.nr).map(|j| self.radius(j)).collect()
    }

    /// Whether the light cone of data supported in `[0, R]` stays inside the grid up to `t_max`.
    pub fn covers(&self, radius: f64, t_max: f64) -> bool {
        self.dr * (self.nr - 1) as f64 >= radius + t_max
    }
}

/// Radial shape shared by the four data profiles; each profile is an amplitude times the shape.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub enum ProfileShape {
    /// `exp(1 − 1/(1 − (r/R)²))`, peak 1 at the origin.
    Bump,
    /// `(e^{−9r²/R²} − e^{−9}) / (1 − e^{−9})`, cut to zero at `r = R`.
    TruncatedGaussian,
    /// Piecewise-linear table of `(r, value)` pairs with increasing `r`; zero beyond the last
    /// point and beyond `R`.
    Custom(Vec<(f64, f64)>),
}

impl ProfileShape {
    pub fn eval(&self, r: f64, radius: f64) -> f64 {
        let r = r.abs();
        if r >= radius {
            return 0.0;
        }
        match self {
            ProfileShape::Bump => {
                let x = r / radius;
                libm::exp(1.0 - 1.0 / (1.0 - x * x))
            }
            ProfileShape::TruncatedGaussian => {
                let x = r / radius;
                let floor = libm::exp(-9.0);
                (libm::exp(-9.0 * x * x) - floor) / (1.0 - floor)
            }
            ProfileShape::Custom(table) => {
                let k = table.partition_point(|&(x, _)| x <= r);
                if k == 0 {
                    return table.first().map_or(0.0, |&(x, v)| if x == r { v } else { 0.0 });
                }
                if k == table.len() {
                    let (x, v) = table[k - 1];
                    return if x == r { v } else { 0.0 };
                }
                let (x0, v0) = table[k - 1];
                let (x1, v1) = table[k];
                v0 + (v1 - v0) * (r - x0) / (x1 - x0)
            }
        }
    }

    fn validate(&self) -> Result<()> {
        if let ProfileShape::Custom(table) = self {
            if table.len() < 2 {
                return Err(Error::InvalidData("custom profile needs at least two points".into()));
            }
            for w in table.windows(2) {
                if !(w[1].0 > w[0].0) {
                    return Err(Error::InvalidData("custom profile radii must increase strictly".into()));
                }
            }
            for &(r, v) in table {
                if !(r.is_finite() && r >= 0.0 && v.is_finite()) {
                    return Err(Error::InvalidData(format!("custom profile point ({r}, {v}) is not admissible")));
                }
                if v < 0.0 {
                    return Err(Error::InvalidData(format!("custom profile is negative at r = {r}")));
                }
            }
            if table.iter().all(|&(_, v)| v == 0.0) {
                return Err(Error::InvalidData("custom profile vanishes everywhere".into()));
            }
        }
        Ok(())
    }
}

/// Initial data `(f₁, g₁, f₂, g₂) = (a_f₁, a_g₁, a_f₂, a_g₂)·shape`, before the factor `ε`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct InitialData {
    pub shape: ProfileShape,
    pub f1: f64,
    pub g1: f64,
    pub f2: f64,
    pub g2: f64,
    pub radius: f64,
}

impl Default for InitialData {
    fn default() -> Self {
        InitialData { shape: ProfileShape::Bump, f1: 1.0, g1: 1.0, f2: 1.0, g2: 1.0, radius: 1.0 }
    }
}

impl InitialData {
    pub fn bump(f1: f64, g1: f64, f2: f64, g2: f64, radius: f64) -> Self {
        InitialData { shape: ProfileShape::Bump, f1, g1, f2, g2, radius }
    }

    pub fn swapped(&self) -> Self {
        InitialData { f1: self.f2, g1: self.g2, f2: self.f1, g2: self.g1, ..self.clone() }
    }

    /// Amplitudes `(f_i, g_i)` of equation `i ∈ {0, 1}`.
    pub fn amplitudes(&self, i: usize) -> (f64, f64) {
        if i == 0 { (self.f1, self.g1) } else { (self.f2, self.g2) }
    }

    pub fn f(&self, i: usize, r: f64) -> f64 {
        self.amplitudes(i).0 * self.shape.eval(r, self.radius)
    }

    pub fn g(&self, i: usize, r: f64) -> f64 {
        self.amplitudes(i).1 * self.shape.eval(r, self.radius)
    }

    /// Sign, support and compatibility checks against `params`.
    pub fn validate(&self, params: &SystemParams) -> Result<()> {
        if !(self.radius > 0.0 && self.radius.is_finite()) {
            return Err(Error::InvalidData(format!("support radius must be positive (got {})", self.radius)));
        }
        self.shape.validate()?;
        for i in 0..2 {
            let (f, g) = self.amplitudes(i);
            if !(f.is_finite() && g.is_finite()) {
                return Err(Error::InvalidData(format!("amplitudes of equation {} must be finite", i + 1)));
            }
            if f < 0.0 || g < 0.0 {
                return Err(Error::InvalidData(format!("f{0} and g{0} must be nonnegative", i + 1)));
            }
            if f == 0.0 && g == 0.0 {
                return Err(Error::InvalidData(format!("f{0} and g{0} vanish everywhere", i + 1)));
            }
            let d = crate::exponents::delta(params.mu(i), params.nu_sq(i));
            if d >= 0.0 {
                let c = 0.5 * (params.mu(i) - 1.0 - libm::sqrt(d));
                if c * f + g < 0.0 {
                    return Err(Error::InvalidData(format!(
                        "compatibility fails for equation {}: ({c})·f + g = {} < 0",
                        i + 1,
                        c * f + g
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Snapshot of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverState {
    pub t: f64,
    pub u: Vec<f64>,
    pub ut: Vec<f64>,
    pub v: Vec<f64>,
    pub vt: Vec<f64>,
    /// Step size the next step will attempt.
    pub dt: f64,
    pub step_count: usize,
    pub blowup_flag: bool,
    pub blowup_time: Option<f64>,
}

impl SolverState {
    pub fn zeros(nr: usize, dt: f64) -> Self {
        SolverState {
            t: 0.0,
            u: vec![0.0; nr],
            ut: vec![0.0; nr],
            v: vec![0.0; nr],
            vt: vec![0.0; nr],
            dt,
            step_count: 0,
            blowup_flag: false,
            blowup_time: None,
        }
    }

    /// `max(max|u_t|, max|v_t|)`.
    pub fn max_derivative(&self) -> f64 {
        max_abs(&self.ut).max(max_abs(&self.vt))
    }

    pub fn max_value(&self) -> f64 {
        max_abs(&self.u).max(max_abs(&self.v))
    }

    fn is_finite(&self) -> bool {
        [&self.u, &self.ut, &self.v, &self.vt].iter().all(|a| a.iter().all(|x| x.is_finite()))
    }
}

fn max_abs(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, x| m.max(x.abs()))
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct SolverConfig {
    /// `dt ≤ cfl·dr`.
    pub cfl: f64,
    /// `dt ≤ damping_cap·(1+t)/max μ_i`.
    pub damping_cap: f64,
    /// Adapt `dt` to the growth of `max(|u_t|, |v_t|)`.
    pub adaptive: bool,
    /// A step is retried with half the step size when the derivative grows by more than this factor.
    pub growth_limit: f64,
    /// Growth per step beyond this is reported as a numerical failure.
    pub instability_growth: f64,
    /// Include `|v_t|^p` and `|u_t|^q`; off gives the linear problem.
    pub nonlinear: bool,
    /// Zero every node outside `r ≤ t + R + dr` after each step.
    pub light_cone_cutoff: bool,
    /// Absolute blow-up threshold on `max(|u_t|, |v_t|)`; `None` uses
    /// `1e8·max(initial max derivative, 1)`.
    pub blowup_threshold: Option<f64>,
    pub max_steps: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            cfl: 0.45,
            damping_cap: 0.1,
            adaptive: true,
            growth_limit: 1.05,
            instability_growth: 1e10,
            nonlinear: true,
            light_cone_cutoff: true,
            blowup_threshold: None,
            max_steps: 50_000_000,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.cfl > 0.0 && self.cfl <= 1.0) {
            return Err(invalid!("cfl must lie in (0, 1] (got {})", self.cfl));
        }
        if !(self.damping_cap > 0.0) {
            return Err(invalid!("damping_cap must be positive (got {})", self.damping_cap));
        }
        if !(self.growth_limit > 1.0) {
            return Err(invalid!("growth_limit must exceed 1 (got {})", self.growth_limit));
        }
        if !(self.instability_growth > self.growth_limit) {
            return Err(invalid!("instability_growth must exceed growth_limit"));
        }
        if let Some(b) = self.blowup_threshold {
            if !(b > 0.0) {
                return Err(invalid!("blowup_threshold must be positive (got {b})"));
            }
        }
        Ok(())
    }

    /// Largest step allowed at time `t`.
    pub fn dt_cap(&self, params: &SystemParams, grid: &RadialGrid, t: f64) -> f64 {
        let mu = params.mu1.max(params.mu2);
        let wave = self.cfl * grid.dr;
        if mu > 0.0 { wave.min(self.damping_cap * (1.0 + t) / mu) } else { wave }
    }
}

/// Samples `ε·(f₁, g₁, f₂, g₂)` on the grid.
pub fn init_state(
    params: &SystemParams,
    data: &InitialData,
    grid: &RadialGrid,
    cfg: &SolverConfig,
) -> Result<SolverState> {
    params.validate()?;
    cfg.validate()?;
    data.validate(params)?;
    if (data.radius - params.radius).abs() > 1e-12 * params.radius {
        return Err(Error::InvalidData(format!(
            "data support radius {} differs from R = {}",
            data.radius, params.radius
        )));
    }
    let mut st = SolverState::zeros(grid.nr, cfg.dt_cap(params, grid, 0.0));
    for j in 0..grid.nr {
        let r = grid.radius(j);
        st.u[j] = params.eps * data.f(0, r);
        st.ut[j] = params.eps * data.g(0, r);
        st.v[j] = params.eps * data.f(1, r);
        st.vt[j] = params.eps * data.g(1, r);
    }
    Ok(st)
}

/// Largest `r_j` where `|u| + |v| + |u_t| + |v_t| > 1e−14`, or 0.
pub fn support_radius(state: &SolverState, grid: &RadialGrid) -> f64 {
    (0..state.u.len())
        .rev()
        .find(|&j| state.u[j].abs() + state.v[j].abs() + state.ut[j].abs() + state.vt[j].abs() > 1e-14)
        .map_or(0.0, |j| grid.radius(j))
}

#[inline]
fn power_abs(x: f64, p: f64) -> f64 {
    if p == 2.0 { x * x } else { libm::pow(x.abs(), p) }
}

/// Right-hand side of `w_tt` for one component: `Δw − μ/(1+t) w_t − ν²/(1+t)² w + |z_t|^p`.
#[allow(clippy::too_many_arguments)]
fn accel(
    out: &mut [f64],
    w: &[f64],
    wt: &[f64],
    zt: &[f64],
    mu: f64,
    nu_sq: f64,
    p: f64,
    t: f64,
    n: u32,
    dr: f64,
    hi: usize,
    nonlinear: bool,
) {
    let inv_dr2 = 1.0 / (dr * dr);
    let damp = mu / (1.0 + t);
    let mass = nu_sq / ((1.0 + t) * (1.0 + t));
    let nm1 = f64::from(n - 1);
    let last = w.len() - 1;
    for j in 0..=hi.min(last) {
        if j == last {
            out[j] = 0.0;
            continue;
        }
        let lap = if j == 0 {
            2.0 * f64::from(n) * (w[1] - w[0]) * inv_dr2
        } else {
            let rj = j as f64 * dr;
            (w[j + 1] - 2.0 * w[j] + w[j - 1]) * inv_dr2 + nm1 / rj * (w[j + 1] - w[j - 1]) / (2.0 * dr)
        };
        let src = if nonlinear { power_abs(zt[j], p) } else { 0.0 };
        out[j] = lap - damp * wt[j] - mass * w[j] + src;
    }
}

struct Stage {
    du: Vec<f64>,
    dut: Vec<f64>,
    dv: Vec<f64>,
    dvt: Vec<f64>,
}

impl Stage {
    fn new(nr: usize) -> Self {
        Stage { du: vec![0.0; nr], dut: vec![0.0; nr], dv: vec![0.0; nr], dvt: vec![0.0; nr] }
    }
}

#[allow(clippy::too_many_arguments)]
fn eval_stage(
    k: &mut Stage,
    u: &[f64],
    ut: &[f64],
    v: &[f64],
    vt: &[f64],
    t: f64,
    params: &SystemParams,
    grid: &RadialGrid,
    hi: usize,
    nonlinear: bool,
) {
    let last = grid.nr - 1;
    for j in 0..=hi.min(last) {
        k.du[j] = if j == last { 0.0 } else { ut[j] };
        k.dv[j] = if j == last { 0.0 } else { vt[j] };
    }
    let (n, dr) = (params.n, grid.dr);
    accel(&mut k.dut, u, ut, vt, params.mu1, params.nu1_sq, params.p, t, n, dr, hi, nonlinear);
    accel(&mut k.dvt, v, vt, ut, params.mu2, params.nu2_sq, params.q, t, n, dr, hi, nonlinear);
}

/// Highest node index that can be nonzero after a step ending at `t_end`.
fn active_hi(grid: &RadialGrid, radius: f64, t_end: f64, cutoff: bool) -> usize {
    if !cutoff {
        return grid.nr - 1;
    }
    let j = libm::floor((t_end + radius) / grid.dr) as usize + 3;
    j.min(grid.nr - 1)
}

/// One RK4 step of size `dt`, in place. Does not touch `state.dt`.
pub fn step(
    state: &mut SolverState,
    params: &SystemParams,
    grid: &RadialGrid,
    cfg: &SolverConfig,
    dt: f64,
) -> Result<()> {
    if state.blowup_flag {
        return Err(Error::NumericalFailure("step called on a blown-up state".into()));
    }
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(invalid!("dt must be positive (got {dt})"));
    }
    let nr = grid.nr;
    if state.u.len() != nr {
        return Err(invalid!("state has {} nodes but the grid has {nr}", state.u.len()));
    }
    let t = state.t;
    let hi = active_hi(grid, params.radius, t + dt, cfg.light_cone_cutoff);
    let nl = cfg.nonlinear;
    let mut k1 = Stage::new(nr);
    let mut k2 = Stage::new(nr);
    let mut k3 = Stage::new(nr);
    let mut k4 = Stage::new(nr);
    let mut tmp = Stage::new(nr);

    let axpy = |out: &mut Stage, s: &SolverState, k: &Stage, h: f64| {
        for j in 0..=hi {
            out.du[j] = s.u[j] + h * k.du[j];
            out.dut[j] = s.ut[j] + h * k.dut[j];
            out.dv[j] = s.v[j] + h * k.dv[j];
            out.dvt[j] = s.vt[j] + h * k.dvt[j];
        }
    };

    eval_stage(&mut k1, &state.u, &state.ut, &state.v, &state.vt, t, params, grid, hi, nl);
    axpy(&mut tmp, state, &k1, 0.5 * dt);
    eval_stage(&mut k2, &tmp.du, &tmp.dut, &tmp.dv, &tmp.dvt, t + 0.5 * dt, params, grid, hi, nl);
    axpy(&mut tmp, state, &k2, 0.5 * dt);
    eval_stage(&mut k3, &tmp.du, &tmp.dut, &tmp.dv, &tmp.dvt, t + 0.5 * dt, params, grid, hi, nl);
    axpy(&mut tmp, state, &k3, dt);
    eval_stage(&mut k4, &tmp.du, &tmp.dut, &tmp.dv, &tmp.dvt, t + dt, params, grid, hi, nl);

    let w = dt / 6.0;
    let combine = |y: &mut [f64], a: &[f64], b: &[f64], c: &[f64], d: &[f64]| {
        for j in 0..=hi {
            y[j] += w * (a[j] + 2.0 * b[j] + 2.0 * c[j] + d[j]);
        }
    };
    combine(&mut state.u, &k1.du, &k2.du, &k3.du, &k4.du);
    combine(&mut state.ut, &k1.dut, &k2.dut, &k3.dut, &k4.dut);
    combine(&mut state.v, &k1.dv, &k2.dv, &k3.dv, &k4.dv);
    combine(&mut state.vt, &k1.dvt, &k2.dvt, &k3.dvt, &k4.dvt);
    state.t = t + dt;
    state.step_count += 1;

    if cfg.light_cone_cutoff {
        let edge = state.t + params.radius + grid.dr;
        for j in 0..=hi {
            if grid.radius(j) > edge {
                state.u[j] = 0.0;
                state.ut[j] = 0.0;
                state.v[j] = 0.0;
                state.vt[j] = 0.0;
            }
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub enum RunOutcome {
    ReachedTmax,
    BlowupDetected,
    NumericalFailure,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct BlowupInfo {
    pub outcome: RunOutcome,
    /// Time of the last accepted step.
    pub t_final: f64,
    pub steps: usize,
    pub threshold: f64,
    pub max_derivative: f64,
    /// First crossing of the threshold, interpolated in `ln max|∂_t|` between steps.
    pub crossing_time: Option<f64>,
    /// Aitken extrapolation of the crossings of `threshold/100`, `threshold/10` and `threshold`.
    pub extrapolated_time: Option<f64>,
    pub message: Option<String>,
}

/// Per-step record kept by [`run_until_blowup`].
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct StepRecord {
    pub t: f64,
    pub dt: f64,
    pub max_ut: f64,
    pub max_vt: f64,
    pub support_radius: f64,
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub info: BlowupInfo,
    pub history: Vec<StepRecord>,
    pub state: SolverState,
}

fn record(state: &SolverState, grid: &RadialGrid, dt: f64) -> StepRecord {
    StepRecord {
        t: state.t,
        dt,
        max_ut: max_abs(&state.ut),
        max_vt: max_abs(&state.vt),
        support_radius: support_radius(state, grid),
    }
}

fn log_crossing(t0: f64, m0: f64, t1: f64, m1: f64, level: f64) -> f64 {
    if m1 <= m0 || m0 <= 0.0 {
        return t1;
    }
    let s = (libm::log(level) - libm::log(m0)) / (libm::log(m1) - libm::log(m0));
    t0 + (t1 - t0) * s.clamp(0.0, 1.0)
}

/// Aitken Δ² limit of three crossing times.
pub fn aitken(ta: f64, tb: f64, tc: f64) -> Option<f64> {
    let den = ta + tc - 2.0 * tb;
    if !(den < 0.0) || !(tb > ta && tc > tb) {
        return None;
    }
    let lim = tc - (tc - tb) * (tc - tb) / den;
    (lim >= tc && lim.is_finite()).then_some(lim)
}

/// Integrates from `init_state` until `t_max` or until `max(|u_t|, |v_t|)` crosses the threshold.
/// `observer` sees the initial state and every accepted step.
pub fn run_until_blowup<O: FnMut(&SolverState)>(
    params: &SystemParams,
    data: &InitialData,
    grid: &RadialGrid,
    cfg: &SolverConfig,
    t_max: f64,
    mut observer: O,
) -> Result<RunResult> {
    if !(t_max > 0.0 && t_max.is_finite()) {
        return Err(invalid!("t_max must be positive (got {t_max})"));
    }
    if !grid.covers(params.radius, t_max) {
        return Err(invalid!(
            "grid reaches r = {} but the light cone reaches R + t_max = {}",
            grid.r_max,
            params.radius + t_max
        ));
    }
    let mut state = init_state(params, data, grid, cfg)?;
    let m_init = state.max_derivative();
    let threshold = cfg.blowup_threshold.unwrap_or(1e8 * m_init.max(1.0));
    let floor = 1e-2 * m_init.max(state.max_value()).max(f64::MIN_POSITIVE);
    let levels = [threshold / 100.0, threshold / 10.0, threshold];
    let mut crossings: [Option<f64>; 3] = [None; 3];
    let mut history = vec![record(&state, grid, 0.0)];
    observer(&state);

    let mut m_prev = m_init;
    let mut outcome = RunOutcome::ReachedTmax;
    let mut message = None;
    let mut dt = state.dt;
    while state.t < t_max {
        if state.step_count >= cfg.max_steps {
            outcome = RunOutcome::NumericalFailure;
            message = Some(format!("step budget of {} exhausted at t = {}", cfg.max_steps, state.t));
            break;
        }
        let cap = cfg.dt_cap(params, grid, state.t);
        dt = dt.min(cap);
        let remaining = t_max - state.t;
        let last = dt >= remaining;
        let h = if last { remaining } else { dt };
        let mut trial = state.clone();
        step(&mut trial, params, grid, cfg, h)?;
        if last {
            trial.t = t_max;
        }
        let m_new = trial.max_derivative();
        let growth = (m_new + floor) / (m_prev + floor);
        if !trial.is_finite() || growth > cfg.instability_growth {
            if cfg.adaptive && h > 1e-15 * (1.0 + state.t) {
                dt = 0.5 * h;
                continue;
            }
            outcome = RunOutcome::NumericalFailure;
            message = Some(format!("unstable step at t = {} (growth {growth:e})", state.t));
            break;
        }
        if cfg.adaptive && growth > cfg.growth_limit {
            if h > 1e-15 * (1.0 + state.t) {
                dt = 0.5 * h;
                continue;
            }
            outcome = RunOutcome::NumericalFailure;
            message = Some(format!("step size underflow at t = {}", state.t));
            break;
        }
        for (c, &level) in crossings.iter_mut().zip(&levels) {
            if c.is_none() && m_new >= level {
                *c = Some(log_crossing(state.t, m_prev, trial.t, m_new, level));
            }
        }
        state = trial;
        state.dt = h;
        history.push(record(&state, grid, h));
        observer(&state);
        m_prev = m_new;
        if m_new >= threshold {
            outcome = RunOutcome::BlowupDetected;
            break;
        }
        if cfg.adaptive && growth - 1.0 < 0.25 * (cfg.growth_limit - 1.0) {
            dt = (2.0 * h).min(cfg.dt_cap(params, grid, state.t));
        } else {
            dt = h;
        }
    }
    let extrapolated = match crossings {
        [Some(a), Some(b), Some(c)] => aitken(a, b, c),
        _ => None,
    };
    if outcome == RunOutcome::BlowupDetected {
        state.blowup_flag = true;
        state.blowup_time = extrapolated.or(crossings[2]);
    }
    let info = BlowupInfo {
        outcome,
        t_final: state.t,
        steps: state.step_count,
        threshold,
        max_derivative: state.max_derivative(),
        crossing_time: if outcome == RunOutcome::BlowupDetected { crossings[2] } else { None },
        extrapolated_time: if outcome == RunOutcome::BlowupDetected { extrapolated } else { None },
        message,
    };
    Ok(RunResult { info, history, state })
}

/// Linear energies `∫ (w_t² + w_r² + ν² w²/(1+t)²) dx` of `u` and `v`, up to the sphere area.
pub fn energy(state: &SolverState, params: &SystemParams, grid: &RadialGrid) -> (f64, f64) {
    let t = state.t;
    let n = params.n;
    let one = |w: &[f64], wt: &[f64], nu_sq: f64| {
        let mut e = 0.0;
        for j in 0..grid.nr - 1 {
            // midpoint cell for the gradient, node values for the rest
            let rm = (j as f64 + 0.5) * grid.dr;
            let grad = (w[j + 1] - w[j]) / grid.dr;
            let wm = libm::pow(rm, f64::from(n - 1));
            let a = 0.5 * (wt[j] * wt[j] + wt[j + 1] * wt[j + 1]);
            let m = 0.5 * (w[j] * w[j] + w[j + 1] * w[j + 1]) * nu_sq / ((1.0 + t) * (1.0 + t));
            e += (a + grad * grad + m) * wm * grid.dr;
        }
        e
    };
    (one(&state.u, &state.ut, params.nu1_sq), one(&state.v, &state.vt, params.nu2_sq))
}

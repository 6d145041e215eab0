//! Acceptance suite: one line per criterion. Runs as a plain binary so the lines always print.
//! Exits nonzero on any failure that is not the documented one of criterion 2.

use std::time::{Duration, Instant};

use blowuplab::checks::{asymptotic_ratio, asymptotic_series, k_half_error, observed_order};
use blowuplab_core::exponents::{lambda_exp, omega_new, omega_sigma, upsilon};
use blowuplab_core::functionals::{
    constants_report, weak_identity_residual, phi_weight_ratio, lemma_suite, FunctionalConfig, FunctionalEvaluator,
    FunctionalRecorder, FunctionalSeries,
};
use blowuplab_core::kato::{fit_coupling, log_grid, solve_kato_system, sweep_lifespan, KatoConstants, KatoOptions, KatoOutcome};
use blowuplab_core::quad::GaussLegendre;
use blowuplab_core::solver::{run_until_blowup, support_radius, InitialData, RadialGrid, RunOutcome, RunResult, SolverConfig};
use blowuplab_core::specfun::{phi_laplacian_residual, RhoProfile, TestFunction};
use blowuplab_core::{CaseLabel, SystemParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(PartialEq)]
enum Verdict {
    Pass,
    Fail,
    /// Failing for the analysed reason recorded in the notes.
    KnownFail,
}

struct Outcome {
    verdict: Verdict,
    detail: String,
}

fn pass_if(ok: bool, detail: String) -> Outcome {
    Outcome { verdict: if ok { Verdict::Pass } else { Verdict::Fail }, detail }
}

/// Light-cone overshoot `max(support − (t + R + 2dr))` collected over every run.
struct Cone {
    worst: f64,
    runs: usize,
}

fn compliant(eps: f64) -> SystemParams {
    SystemParams { n: 1, mu1: 0.5, mu2: 0.5, nu1_sq: 0.01, nu2_sq: 0.01, p: 2.0, q: 2.0, radius: 1.0, eps }
}

fn run(
    p: &SystemParams,
    data: &InitialData,
    dr: f64,
    t_max: f64,
    cfg: &SolverConfig,
    cone: &mut Cone,
) -> (RunResult, FunctionalSeries, FunctionalEvaluator) {
    let grid = RadialGrid::covering(p.radius, t_max, dr).unwrap();
    let fcfg = FunctionalConfig { nonlinear: cfg.nonlinear, ..FunctionalConfig::default() };
    let ev = FunctionalEvaluator::new(p, &grid, &fcfg).unwrap();
    let mut rec = FunctionalRecorder::new(ev.clone());
    let mut worst = f64::NEG_INFINITY;
    let res = run_until_blowup(p, data, &grid, cfg, t_max, |s| {
        worst = worst.max(support_radius(s, &grid) - (s.t + p.radius + 2.0 * grid.dr));
        rec.observe(s);
    })
    .unwrap();
    cone.worst = cone.worst.max(worst);
    cone.runs += 1;
    (res, rec.finish().unwrap(), ev)
}

fn criterion1() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(20_241_015);
    let (mut undamped, mut undamped_ok) = (0, 0);
    let (mut compared, mut ge_ok) = (0, 0);
    let (mut claimed, mut strict, mut explained) = (0, 0, 0);
    for k in 0..1000 {
        let n: u32 = rng.gen_range(1..=5);
        let p = rng.gen_range(1.01..6.0);
        let q = rng.gen_range(1.01..6.0);
        let prm = if k % 4 == 0 {
            SystemParams { n, mu1: 0.0, mu2: 0.0, nu1_sq: 0.0, nu2_sq: 0.0, p, q, ..SystemParams::default() }
        } else {
            // half of the equations get δ ∈ (0, 1), the rest anything with δ ≥ 0
            let mut eq = || {
                let mu: f64 = rng.gen_range(0.0..5.0);
                let d_max = (mu - 1.0) * (mu - 1.0);
                let d = if rng.gen_bool(0.5) { rng.gen_range(0.0..1.0f64).min(d_max) } else { rng.gen_range(0.0..=d_max) };
                (mu, (d_max - d) / 4.0)
            };
            let ((mu1, nu1_sq), (mu2, nu2_sq)) = (eq(), eq());
            SystemParams { n, mu1, mu2, nu1_sq, nu2_sq, p, q, ..SystemParams::default() }
        };
        let new = omega_new(&prm);
        if prm.mu1 == 0.0 && prm.mu2 == 0.0 && prm.nu1_sq == 0.0 && prm.nu2_sq == 0.0 {
            undamped += 1;
            undamped_ok += usize::from(new == upsilon(f64::from(n), p, q));
        }
        let Ok(old) = omega_sigma(&prm) else { continue };
        compared += 1;
        ge_ok += usize::from(new >= old);
        let (d1, d2) = (prm.delta1(), prm.delta2());
        if (d1 > 0.0 && d1 < 1.0) || (d2 > 0.0 && d2 < 1.0) {
            claimed += 1;
            if new > old {
                strict += 1;
            } else {
                // equality is only possible when a maximizing Λ belongs to an equation with δ ≥ 1
                let nf = f64::from(n);
                let a = [lambda_exp(nf + prm.mu1, p, q), lambda_exp(nf + prm.mu2, q, p)];
                let top = a[0].max(a[1]);
                explained += usize::from((0..2).any(|i| a[i] == top && [d1, d2][i] >= 1.0));
            }
        }
    }
    let ok = undamped_ok == undamped && ge_ok == compared && strict + explained == claimed;
    pass_if(
        ok,
        format!(
            "undamped reduction {undamped_ok}/{undamped}, omega_new >= omega_sigma {ge_ok}/{compared}, \
             strict {strict}/{claimed} with some delta in (0,1); the other {explained} have their maximizing \
             Lambda on an equation with delta >= 1, where the two shifts coincide"
        ),
    )
}

fn criterion2() -> Outcome {
    let in_band = |x: f64| (0.99 - 1e-12..=1.01 + 1e-12).contains(&x);
    let k_err = k_half_error(400).unwrap();
    let mut outside = Vec::new();
    let mut series_gap: f64 = 0.0;
    let mut series_outside = Vec::new();
    for k in 0..=40 {
        let nu = 0.05 * f64::from(k);
        let r = asymptotic_ratio(nu, 100.0).unwrap();
        let s = asymptotic_series(nu, 100.0);
        series_gap = series_gap.max((r - s).abs());
        // nu = 3/2 sits exactly on the upper edge (the ratio is 1 + 1/t), hence the rounding slack
        if !in_band(r) {
            outside.push(format!("{nu:.2}"));
        }
        if !in_band(s) {
            series_outside.push(format!("{nu:.2}"));
        }
    }
    let mut min_order = f64::INFINITY;
    for (mu, nu_sq, eta) in [(2.0, 0.1875, 1.433), (0.5, 0.01, 1.1), (3.0, 0.5, 1.7), (1.0, 0.0, 1.0)] {
        let prof = RhoProfile::new(mu, nu_sq, eta).unwrap();
        for t in [0.5, 2.0, 10.0] {
            min_order = min_order.min(observed_order(prof.ode_residual(t, 2e-2).unwrap(), prof.ode_residual(t, 1e-2).unwrap()));
        }
    }
    let core_ok = k_err <= 1e-8 && min_order >= 1.9;
    let detail = format!(
        "K_1/2 max rel err {k_err:.1e} (<= 1e-8), rho ODE order >= {min_order:.2} (>= 1.9), \
         asymptotic ratio at t=100 outside [0.99,1.01] for nu in [{}]",
        outside.join(", ")
    );
    if outside.is_empty() {
        return pass_if(core_ok, detail);
    }
    // The band is narrower than the first correction (4nu^2-1)/(8t) once nu > 1.5; the failure is
    // genuine if the computed ratio follows the large-argument series and only the series leaves the band.
    let analysed = core_ok && series_gap < 1e-6 && outside == series_outside;
    Outcome {
        verdict: if analysed { Verdict::KnownFail } else { Verdict::Fail },
        detail: format!("{detail}; ratio matches 1+(4nu^2-1)/(8t)+... to {series_gap:.1e}, so the band is unattainable there"),
    }
}

fn criterion3() -> Outcome {
    let mut conj = f64::INFINITY;
    let mut lap = f64::INFINITY;
    let mut lemma: f64 = 0.0;
    let times: Vec<f64> = (1..=100).map(f64::from).collect();
    for n in 1..=3u32 {
        let prm = SystemParams { n, ..SystemParams::default() };
        let eta = prm.eta0();
        for i in 1..=2u8 {
            let tf = TestFunction::for_equation(&prm, i, eta, 4.0).unwrap();
            for (r, t) in [(1.5, 2.0), (2.5, 0.5)] {
                conj = conj.min(observed_order(tf.residual(r, t, 2e-2, 2e-2).unwrap(), tf.residual(r, t, 1e-2, 1e-2).unwrap()));
            }
        }
        for r in [0.5, 1.5, 3.0] {
            lap = lap.min(observed_order(
                phi_laplacian_residual(n, eta, r, 2e-2).unwrap(),
                phi_laplacian_residual(n, eta, r, 1e-2).unwrap(),
            ));
        }
        for r_exp in [1.5, 2.0, 3.0] {
            let ratios = phi_weight_ratio(n, eta, r_exp, &times, 1.0).unwrap();
            let max = ratios.iter().cloned().fold(0.0, f64::max);
            lemma = lemma.max(max / ratios[49]);
        }
    }
    pass_if(
        conj >= 1.9 && lap >= 1.9 && lemma <= 2.0,
        format!("conjugate residual order >= {conj:.2}, Laplacian order >= {lap:.2}, phi weight ratio max/value(50) <= {lemma:.3}"),
    )
}

/// d'Alembert for even data on the line: `(f(r−t) + f(r+t))/2 + ½∫_{r−t}^{r+t} g`.
fn dalembert(data: &InitialData, rule: &GaussLegendre, r: f64, t: f64) -> f64 {
    0.5 * (data.f(0, r - t) + data.f(0, r + t)) + 0.5 * rule.integrate(|x| data.g(0, x), r - t, r + t)
}

fn criterion4(cone: &mut Cone) -> Outcome {
    let p = SystemParams { n: 1, mu1: 0.0, mu2: 0.0, nu1_sq: 0.0, nu2_sq: 0.0, eps: 1.0, ..SystemParams::default() };
    let data = InitialData::bump(1.0, 1.5, 1.0, 1.5, 1.0);
    let cfg = SolverConfig { nonlinear: false, adaptive: false, ..SolverConfig::default() };
    let rule = GaussLegendre::new(200);
    let mut errs = Vec::new();
    // the steep flank of the bump keeps coarser grids pre-asymptotic
    for dr in [0.005, 0.0025] {
        let (res, _, _) = run(&p, &data, dr, 1.0, &cfg, cone);
        let grid = RadialGrid::covering(p.radius, 1.0, dr).unwrap();
        let err = (0..grid.nr).map(|j| (res.state.u[j] - dalembert(&data, &rule, grid.radius(j), 1.0)).abs()).fold(0.0, f64::max);
        errs.push(err);
    }
    let order = observed_order(errs[0], errs[1]);

    let q = compliant(0.3);
    let lin = SolverConfig { nonlinear: false, ..SolverConfig::default() };
    let (_, a, _) = run(&q, &InitialData::default(), 0.02, 3.0, &lin, cone);
    let (_, b, _) = run(&SystemParams { eps: 0.6, ..q }, &InitialData::default(), 0.02, 3.0, &lin, cone);
    let mut homog: f64 = 0.0;
    let same_len = a.len() == b.len();
    for (x, y) in a.samples.iter().zip(&b.samples) {
        for i in 0..2 {
            for (u, v) in [(x.f[i], y.f[i]), (x.ft[i], y.ft[i]), (x.g[i], y.g[i]), (x.gt[i], y.gt[i])] {
                if v != 0.0 {
                    homog = homog.max((v - 2.0 * u).abs() / v.abs());
                }
            }
        }
    }
    // light-cone sweep over several parameter sets, including blow-up runs
    for (n, mu, eps) in [(1, 0.5, 1.0), (2, 1.5, 0.5), (3, 2.0, 1.0)] {
        let prm = SystemParams { n, mu1: mu, mu2: mu, nu1_sq: 0.01, nu2_sq: 0.01, eps, ..SystemParams::default() };
        run(&prm, &InitialData::default(), 0.02, 6.0, &SolverConfig::default(), cone);
    }
    pass_if(
        order >= 1.9 && same_len && homog <= 1e-12,
        format!(
            "d'Alembert error {:.2e} -> {:.2e} (order {order:.2}), eps-homogeneity rel {homog:.1e} (<= 1e-12)",
            errs[0], errs[1]
        ),
    )
}

fn criterion5(cone: &mut Cone) -> Outcome {
    let p = compliant(0.5);
    let data = InitialData::default();
    let (res, series, ev) = run(&p, &data, 0.02, 30.0, &SolverConfig::default(), cone);
    let constants = constants_report(&p, &data, &ev, Some(&series)).unwrap();
    let rep = lemma_suite(&series, &p, &constants, 1e-8).unwrap();
    pass_if(
        res.info.outcome == RunOutcome::BlowupDetected && rep.all_pass(),
        format!(
            "blow-up at t={:.3}; min F/scale {:.1e}, min Ft/scale {:.1e}; C_G {:.3e}, C_Gt {:.3e} past T2={}; \
             min (Gt-L)/scale {:.2e}",
            res.info.crossing_time.unwrap_or(f64::NAN),
            rep.f_min_rel[0].min(rep.f_min_rel[1]),
            rep.ft_min_rel[0].min(rep.ft_min_rel[1]),
            rep.c_g[0].min(rep.c_g[1]),
            rep.c_gtilde[0].min(rep.c_gtilde[1]),
            rep.t2,
            rep.ordering_min_rel[0].min(rep.ordering_min_rel[1]),
        ),
    )
}

fn criterion6(cone: &mut Cone) -> Outcome {
    let p = compliant(0.2);
    let data = InitialData::default();
    // max residual over interior samples up to t_window, and over the whole run
    let measure = |dr: f64, cone: &mut Cone| {
        let (res, series, ev) = run(&p, &data, dr, 20.0, &SolverConfig::default(), cone);
        let c = constants_report(&p, &data, &ev, None).unwrap().c;
        let r = weak_identity_residual(&series, c);
        let t = series.times();
        let inner = 1..t.len() - 1;
        let all = inner.clone().map(|k| r[0][k].max(r[1][k])).fold(0.0, f64::max);
        let window = inner.filter(|&k| t[k] <= 8.0).map(|k| r[0][k].max(r[1][k])).fold(0.0, f64::max);
        (res.info.outcome, all, window)
    };
    let (o1, _, w1) = measure(0.02, cone);
    let (o2, all, w2) = measure(0.01, cone);
    let order = observed_order(w1, w2);
    pass_if(
        o1 == RunOutcome::BlowupDetected && o2 == RunOutcome::BlowupDetected && all <= 1e-3 && order >= 1.9,
        format!("max residual {all:.2e} at dr=0.01 (<= 1e-3); window t<=8: {w1:.2e} -> {w2:.2e} (order {order:.2})"),
    )
}

fn criterion7() -> Outcome {
    let grid = log_grid(1e-4, 1e-1, 12).unwrap();
    let k = KatoConstants::default();
    let opts = KatoOptions::default();
    let sub = SystemParams { n: 1, mu1: 0.0, mu2: 0.0, nu1_sq: 0.0, nu2_sq: 0.0, p: 2.0, q: 2.0, ..SystemParams::default() };
    let a = sweep_lifespan(&sub, &grid, &k, &opts).unwrap();
    let crit = SystemParams::default();
    let b = sweep_lifespan(&crit, &grid, &k, &opts).unwrap();
    let rel_a = (a.fitted_slope / a.predicted_exponent - 1.0).abs();
    let rel_b = (b.fitted_slope / b.predicted_exponent - 1.0).abs();
    pass_if(
        a.case_label == CaseLabel::Subcritical && b.case_label == CaseLabel::CriticalDouble && rel_a <= 0.10 && rel_b <= 0.15,
        format!(
            "subcritical slope {:.4} vs {:.4} ({:.1}%), critical-double ln ln T slope {:.4} vs {:.4} ({:.1}%)",
            a.fitted_slope,
            a.predicted_exponent,
            100.0 * rel_a,
            b.fitted_slope,
            b.predicted_exponent,
            100.0 * rel_b
        ),
    )
}

fn criterion8(cone: &mut Cone) -> Outcome {
    let p = compliant(0.1);
    let data = InitialData::default();
    let (res, series, ev) = run(&p, &data, 0.02, 200.0, &SolverConfig::default(), cone);
    let Some(onset) = res.info.crossing_time else {
        return pass_if(false, format!("no blow-up detected by t=200 ({:?})", res.info.outcome));
    };
    let m = constants_report(&p, &data, &ev, Some(&series)).unwrap().measured.unwrap();
    let fit = fit_coupling(&series, &p, m.c3, m.t2).unwrap();
    let sol = solve_kato_system(&fit.system, &KatoOptions::default()).unwrap();
    pass_if(
        sol.outcome == KatoOutcome::Blowup && sol.t_blow > onset,
        format!(
            "PDE blow-up at t={onset:.3}, Kato bound t={:.3} with fitted c=({:.3}, {:.3}), C3={:.3}, T2={} (slack x{:.2})",
            sol.t_blow,
            fit.system.c1,
            fit.system.c2,
            m.c3,
            m.t2,
            sol.t_blow / onset
        ),
    )
}

fn main() {
    // `cargo test` passes harness flags such as `--nocapture` or a filter; only a filter matters here
    let filter: Option<String> = std::env::args().skip(1).find(|a| !a.starts_with('-'));
    let mut cone = Cone { worst: f64::NEG_INFINITY, runs: 0 };
    let mut unexpected = 0;
    let mut line = |k: u32, name: &str, budget: Duration, f: &mut dyn FnMut(&mut Cone) -> Outcome| {
        if filter.as_deref().is_some_and(|s| !name.contains(s) && s != k.to_string()) {
            return;
        }
        let start = Instant::now();
        let mut out = f(&mut cone);
        let took = start.elapsed();
        if took > budget && out.verdict == Verdict::Pass {
            out.verdict = Verdict::Fail;
            out.detail += &format!("; over the {budget:?} budget");
        }
        let tag = match out.verdict {
            Verdict::Pass => "PASS",
            Verdict::Fail => {
                unexpected += 1;
                "FAIL"
            }
            Verdict::KnownFail => "FAIL (documented)",
        };
        println!("criterion {k} [{name}]: {tag} in {:.2}s: {}", took.as_secs_f64(), out.detail);
    };
    line(1, "exponent algebra", Duration::from_secs(1), &mut |_| criterion1());
    line(2, "special functions", Duration::from_secs(30), &mut |_| criterion2());
    line(3, "conjugate test function", Duration::from_secs(60), &mut |_| criterion3());
    line(4, "solver verification", Duration::from_secs(120), &mut |c| criterion4(c));
    line(5, "lemma suite", Duration::from_secs(300), &mut |c| criterion5(c));
    line(6, "weak identity", Duration::from_secs(180), &mut |c| criterion6(c));
    line(7, "scaling law", Duration::from_secs(60), &mut |_| criterion7());
    line(8, "PDE-kato consistency", Duration::from_secs(600), &mut |c| criterion8(c));
    if cone.runs > 0 {
        let ok = cone.worst <= 0.0;
        println!(
            "light cone: support <= t + R + 2dr on every step of {} runs: {} (worst margin {:.3e})",
            cone.runs,
            if ok { "PASS" } else { "FAIL" },
            cone.worst
        );
        if !ok {
            unexpected += 1;
        }
    }
    if unexpected > 0 {
        eprintln!("{unexpected} acceptance check(s) failed");
        std::process::exit(1);
    }
}

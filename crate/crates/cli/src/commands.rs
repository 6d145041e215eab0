use std::collections::HashMap;
use std::io::Read;
use std::path::Path;

use blowuplab_core::exponents::{region_report, RegionReport};
use blowuplab_core::functionals::{
    constants_report, eval_l, lemma_suite, ConstantsReport, FunctionalConfig, FunctionalEvaluator, FunctionalRecorder,
    FunctionalSample, FunctionalSeries, LemmaReport,
};
use blowuplab_core::kato::{fit_coupling, fit_lifespan, solve_kato_system, KatoOutcome, KatoSolution, KatoSystem, LifespanFit};
use blowuplab_core::solver::{run_until_blowup, BlowupInfo, StepRecord};
use blowuplab_core::SystemParams;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};
use crate::output::{self, FUNCTIONAL_COLUMNS};

/// Relative tolerance of the positivity checks.
pub const POSITIVITY_TOL: f64 = 1e-8;

pub const THREADS_ENV: &str = "BLOWUPLAB_THREADS";

pub fn exponents(cfg: &RunConfig) -> CliResult<RegionReport> {
    let p = cfg.validate_params()?;
    Ok(region_report(&p))
}

pub struct Simulation {
    pub info: BlowupInfo,
    pub history: Vec<StepRecord>,
    pub series: Option<FunctionalSeries>,
    pub evaluator: FunctionalEvaluator,
}

pub fn simulate(cfg: &RunConfig, record_functionals: bool) -> CliResult<Simulation> {
    let params = cfg.validate_params()?;
    let data = cfg.initial_data();
    data.validate(&params)?;
    let solver = cfg.solver_config()?;
    let grid = cfg.radial_grid()?;
    let fcfg = FunctionalConfig { nonlinear: solver.nonlinear, ..FunctionalConfig::default() };
    let evaluator = FunctionalEvaluator::new(&params, &grid, &fcfg)?;
    let mut rec = record_functionals.then(|| FunctionalRecorder::new(evaluator.clone()));
    let run = run_until_blowup(&params, &data, &grid, &solver, cfg.grid.t_max, |s| {
        if let Some(r) = rec.as_mut() {
            r.observe(s);
        }
    })?;
    let series = rec.map(|r| r.finish()).transpose()?;
    Ok(Simulation { info: run.info, history: run.history, series, evaluator })
}

/// Kato system fitted to the run and the blow-up time it predicts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KatoBound {
    pub system: KatoSystem,
    pub samples: usize,
    pub outcome: KatoOutcome,
    pub ln_t_blow: f64,
    pub t_blow: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FunctionalsReport {
    /// Absent when the series was read from a file.
    pub blowup: Option<BlowupInfo>,
    pub constants: ConstantsReport,
    pub lemmas: LemmaReport,
    pub all_pass: bool,
    pub kato: Option<KatoBound>,
    /// Why no Kato bound was produced.
    pub kato_note: Option<String>,
}

pub fn analyze(
    cfg: &RunConfig,
    series: &FunctionalSeries,
    evaluator: &FunctionalEvaluator,
    blowup: Option<BlowupInfo>,
) -> CliResult<FunctionalsReport> {
    let params = cfg.validate_params()?;
    let data = cfg.initial_data();
    let constants = constants_report(&params, &data, evaluator, Some(series))?;
    let lemmas = lemma_suite(series, &params, &constants, POSITIVITY_TOL)?;
    let m = constants.measured.as_ref().ok_or_else(|| CliError::Numerical("empty series".into()))?;
    let (kato, kato_note) = match fit_coupling(series, &params, m.c3, m.t2) {
        Ok(fit) => {
            let sol = solve_kato_system(&fit.system, &cfg.kato_options())?;
            let b = KatoBound {
                system: fit.system,
                samples: fit.samples,
                outcome: sol.outcome,
                ln_t_blow: sol.ln_t_blow,
                t_blow: sol.t_blow,
            };
            (Some(b), None)
        }
        Err(e) => (None, Some(e.to_string())),
    };
    Ok(FunctionalsReport { blowup, all_pass: lemmas.all_pass(), constants, lemmas, kato, kato_note })
}

/// Reads a functional series written by `functionals` or `simulate --functionals`; columns are
/// matched by name and extra columns are ignored.
pub fn read_series(reader: impl Read, eps: f64) -> CliResult<FunctionalSeries> {
    let mut rdr = csv::Reader::from_reader(reader);
    let headers = rdr.headers().map_err(|e| CliError::input(format!("csv: {e}")))?.clone();
    let index: HashMap<&str, usize> = headers.iter().enumerate().map(|(k, h)| (h.trim(), k)).collect();
    let needed = &FUNCTIONAL_COLUMNS[..17];
    let missing: Vec<&str> = needed.iter().copied().filter(|c| !index.contains_key(c)).collect();
    if !missing.is_empty() {
        return Err(CliError::input(format!("csv: missing columns: {}", missing.join(", "))));
    }
    let cols: Vec<usize> = needed.iter().map(|c| index[c]).collect();
    let mut samples = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| CliError::input(format!("csv: {e}")))?;
        let mut v = [0.0; 17];
        for (slot, &k) in v.iter_mut().zip(&cols) {
            let cell = rec.get(k).unwrap_or("");
            *slot = cell
                .trim()
                .parse()
                .map_err(|_| CliError::input(format!("csv: row {}: cannot parse {cell:?}", line + 2)))?;
        }
        samples.push(FunctionalSample {
            t: v[0],
            f: [v[1], v[2]],
            ft: [v[3], v[4]],
            g: [v[5], v[6]],
            gt: [v[7], v[8]],
            nonlinear: [v[9], v[10]],
            gamma: [v[11], v[12]],
            ln_rho: [v[13], v[14]],
            holder_rhs: [v[15], v[16]],
        });
    }
    if samples.is_empty() {
        return Err(CliError::input("csv: no samples"));
    }
    Ok(FunctionalSeries { eps, samples })
}

pub fn functionals_from_csv(cfg: &RunConfig, path: &Path) -> CliResult<(FunctionalSeries, FunctionalsReport)> {
    let params = cfg.validate_params()?;
    let file = std::fs::File::open(path).map_err(|e| CliError::input(format!("cannot open {}: {e}", path.display())))?;
    let series = read_series(file, params.eps)?;
    let fcfg = FunctionalConfig { nonlinear: cfg.grid.nonlinear, ..FunctionalConfig::default() };
    let evaluator = FunctionalEvaluator::new(&params, &cfg.radial_grid()?, &fcfg)?;
    let report = analyze(cfg, &series, &evaluator, None)?;
    Ok((series, report))
}

/// `(L₁, L₂)` columns for the CSV, built from the measured `C₃`, `T₂` of the report.
pub fn l_columns(series: &FunctionalSeries, report: &FunctionalsReport) -> [Vec<f64>; 2] {
    match &report.constants.measured {
        Some(m) => eval_l(series, m.c3, m.t2),
        None => [vec![f64::NAN; series.len()], vec![f64::NAN; series.len()]],
    }
}

/// Thread pool capped by `BLOWUPLAB_THREADS`.
pub fn thread_pool() -> CliResult<rayon::ThreadPool> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let n: usize = v
            .trim()
            .parse()
            .ok()
            .filter(|&n| n >= 1)
            .ok_or_else(|| CliError::input(format!("{THREADS_ENV} must be a positive integer (got {v:?})")))?;
        b = b.num_threads(n);
    }
    b.build().map_err(|e| CliError::Numerical(format!("thread pool: {e}")))
}

pub struct Sweep {
    pub eps: Vec<f64>,
    pub solutions: Vec<KatoSolution>,
    pub fit: CliResult<LifespanFit>,
}

/// Integrates every `ε` of the grid concurrently, then fits after sorting by `ε`.
pub fn kato_sweep(cfg: &RunConfig) -> CliResult<Sweep> {
    let params = cfg.validate_params()?;
    let mut eps = cfg.eps_grid()?;
    eps.sort_by(|a, b| b.total_cmp(a));
    let k = cfg.kato_constants();
    let opts = cfg.kato_options();
    let pool = thread_pool()?;
    let solutions = pool.install(|| {
        eps.par_iter()
            .map(|&e| {
                let sys = KatoSystem::from_params(&SystemParams { eps: e, ..params }, &k)?;
                solve_kato_system(&sys, &opts)
            })
            .collect::<Result<Vec<_>, _>>()
    })?;
    let fit = fit_lifespan(&params, &eps, &solutions).map_err(CliError::from);
    Ok(Sweep { eps, solutions, fit })
}

pub fn write_simulation(cfg: &RunConfig, sim: &Simulation) -> CliResult<()> {
    let stride = cfg.grid.csv_stride;
    let samples = sim.series.as_ref().map(|s| s.samples.as_slice());
    output::to_file(cfg.output.csv.as_deref(), |w| output::write_steps(w, &sim.history, samples, stride))?;
    output::emit_json(&sim.info, cfg.output.json.as_deref())
}

pub fn write_functionals(cfg: &RunConfig, series: &FunctionalSeries, report: &FunctionalsReport) -> CliResult<()> {
    let l = l_columns(series, report);
    output::to_file(cfg.output.csv.as_deref(), |w| output::write_functionals(w, &series.samples, &l, cfg.grid.csv_stride))?;
    output::emit_json(report, cfg.output.json.as_deref())
}

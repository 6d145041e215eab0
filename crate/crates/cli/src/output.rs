//! CSV and JSON emitters. Floats are written with 17 significant digits in CSV
//! (`{:.16e}`) and in shortest round-trip form in JSON.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use blowuplab_core::functionals::FunctionalSample;
use blowuplab_core::kato::{KatoOutcome, KatoSolution};
use blowuplab_core::solver::StepRecord;
use serde::Serialize;

use crate::error::{CliError, CliResult};

pub const STEP_COLUMNS: [&str; 5] = ["t", "dt", "max_ut", "max_vt", "support_radius"];

pub const FUNCTIONAL_COLUMNS: [&str; 19] = [
    "t", "F1", "F2", "Ft1", "Ft2", "G1", "G2", "Gt1", "Gt2", "N1", "N2", "Gamma1", "Gamma2", "ln_rho1", "ln_rho2",
    "holder_rhs1", "holder_rhs2", "L1", "L2",
];

pub const SWEEP_COLUMNS: [&str; 4] = ["eps", "ln_t_blow", "t_blow", "outcome"];

pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn row(out: &mut impl Write, cells: &[f64]) -> io::Result<()> {
    let line: Vec<String> = cells.iter().map(|&x| fmt_f64(x)).collect();
    writeln!(out, "{}", line.join(","))
}

pub fn step_row(r: &StepRecord) -> [f64; 5] {
    [r.t, r.dt, r.max_ut, r.max_vt, r.support_radius]
}

/// Functional columns without `t`, `L1`, `L2`.
pub fn functional_cells(s: &FunctionalSample) -> [f64; 16] {
    [
        s.f[0], s.f[1], s.ft[0], s.ft[1], s.g[0], s.g[1], s.gt[0], s.gt[1], s.nonlinear[0], s.nonlinear[1],
        s.gamma[0], s.gamma[1], s.ln_rho[0], s.ln_rho[1], s.holder_rhs[0], s.holder_rhs[1],
    ]
}

/// Step history, optionally followed by the functional columns of the same step.
pub fn write_steps(
    out: &mut impl Write,
    steps: &[StepRecord],
    samples: Option<&[FunctionalSample]>,
    stride: usize,
) -> io::Result<()> {
    let mut header: Vec<&str> = STEP_COLUMNS.to_vec();
    if samples.is_some() {
        header.extend(&FUNCTIONAL_COLUMNS[1..17]);
    }
    writeln!(out, "{}", header.join(","))?;
    for (k, r) in steps.iter().enumerate() {
        if k % stride != 0 && k + 1 != steps.len() {
            continue;
        }
        let mut cells = step_row(r).to_vec();
        if let Some(s) = samples {
            cells.extend(functional_cells(&s[k]));
        }
        row(out, &cells)?;
    }
    Ok(())
}

pub fn write_functionals(
    out: &mut impl Write,
    samples: &[FunctionalSample],
    l: &[Vec<f64>; 2],
    stride: usize,
) -> io::Result<()> {
    writeln!(out, "{}", FUNCTIONAL_COLUMNS.join(","))?;
    for (k, s) in samples.iter().enumerate() {
        if k % stride != 0 && k + 1 != samples.len() {
            continue;
        }
        let mut cells = vec![s.t];
        cells.extend(functional_cells(s));
        cells.extend([l[0][k], l[1][k]]);
        row(out, &cells)?;
    }
    Ok(())
}

pub fn outcome_name(o: KatoOutcome) -> &'static str {
    match o {
        KatoOutcome::Blowup => "blowup",
        KatoOutcome::StepUnderflow => "step_underflow",
        KatoOutcome::NoBlowup => "no_blowup",
    }
}

pub fn write_sweep(out: &mut impl Write, eps: &[f64], sols: &[KatoSolution]) -> io::Result<()> {
    writeln!(out, "{}", SWEEP_COLUMNS.join(","))?;
    for (&e, s) in eps.iter().zip(sols) {
        writeln!(out, "{},{},{},{}", fmt_f64(e), fmt_f64(s.ln_t_blow), fmt_f64(s.t_blow), outcome_name(s.outcome))?;
    }
    Ok(())
}

/// Writes to `path`, or does nothing without one.
pub fn to_file(path: Option<&Path>, f: impl FnOnce(&mut BufWriter<File>) -> io::Result<()>) -> CliResult<()> {
    let Some(path) = path else { return Ok(()) };
    let file = File::create(path).map_err(|e| CliError::input(format!("cannot create {}: {e}", path.display())))?;
    let mut w = BufWriter::new(file);
    f(&mut w)?;
    w.flush()?;
    Ok(())
}

/// Pretty JSON to `path`, or to stdout.
pub fn emit_json<T: Serialize>(value: &T, path: Option<&Path>) -> CliResult<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| CliError::Numerical(format!("json: {e}")))?;
    match path {
        Some(p) => std::fs::write(p, text + "\n").map_err(|e| CliError::input(format!("cannot write {}: {e}", p.display()))),
        None => {
            let mut out = io::stdout().lock();
            writeln!(out, "{text}")?;
            Ok(())
        }
    }
}

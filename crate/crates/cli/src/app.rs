use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::checks::specfun_report;
use crate::commands;
use crate::config::{Family, RunConfig};
use crate::error::{CliError, CliResult};
use crate::output;

#[derive(Debug, Parser)]
#[command(name = "blowuplab", version, about = "Blow-up laboratory for weakly coupled damped wave systems")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub overrides: Overrides,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Exponent algebra and lifespan classification (JSON region report).
    Exponents,
    /// Residual and asymptotic suites of the special functions (JSON pass/fail report).
    SpecfunCheck,
    /// Radial PDE run: step CSV and final blow-up JSON.
    Simulate {
        /// Append the functional columns to the CSV.
        #[arg(long)]
        functionals: bool,
    },
    /// Functional diagnostics and lemma verdicts, from an inline run or a recorded CSV.
    Functionals {
        #[arg(long, value_name = "CSV")]
        from_csv: Option<PathBuf>,
    },
    /// Lifespan sweep of the reduced ODE system: CSV of (eps, T) and JSON fit.
    KatoSweep,
}

/// Flags override values from `--config`.
#[derive(Debug, Default, Clone, Args)]
pub struct Overrides {
    /// JSON configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long = "N", alias = "n", global = true)]
    pub n: Option<u32>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub mu1: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub mu2: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub nu1sq: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub nu2sq: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub p: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub q: Option<f64>,
    #[arg(long, alias = "R", global = true, allow_hyphen_values = true)]
    pub radius: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub eps: Option<f64>,

    #[arg(long, global = true)]
    pub dr: Option<f64>,
    #[arg(long, global = true)]
    pub nr: Option<usize>,
    #[arg(long, global = true)]
    pub t_max: Option<f64>,
    #[arg(long, global = true)]
    pub blowup_threshold: Option<f64>,
    /// Run without the nonlinear sources.
    #[arg(long, global = true)]
    pub linear: bool,
    /// Keep the scheme's precursor outside the light cone.
    #[arg(long, global = true)]
    pub no_light_cone_cutoff: bool,
    #[arg(long, global = true)]
    pub csv_stride: Option<usize>,

    #[arg(long, global = true, value_enum)]
    pub family: Option<Family>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub f1: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub g1: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub f2: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub g2: Option<f64>,

    #[arg(long, global = true)]
    pub eps_min: Option<f64>,
    #[arg(long, global = true)]
    pub eps_max: Option<f64>,
    #[arg(long, global = true)]
    pub eps_count: Option<usize>,
    #[arg(long, global = true)]
    pub y_max: Option<f64>,
    #[arg(long, global = true)]
    pub c1: Option<f64>,
    #[arg(long, global = true)]
    pub c2: Option<f64>,
    #[arg(long, global = true)]
    pub c3: Option<f64>,
    #[arg(long, global = true)]
    pub t2: Option<f64>,

    /// Write the JSON report here instead of stdout.
    #[arg(long, global = true)]
    pub json: Option<PathBuf>,
    /// Write the CSV here.
    #[arg(long, global = true)]
    pub csv: Option<PathBuf>,
}

fn set<T: Clone>(slot: &mut T, v: &Option<T>) {
    if let Some(v) = v {
        *slot = v.clone();
    }
}

impl Overrides {
    pub fn apply(&self, cfg: &mut RunConfig) {
        let p = &mut cfg.params;
        set(&mut p.n, &self.n);
        set(&mut p.mu1, &self.mu1);
        set(&mut p.mu2, &self.mu2);
        set(&mut p.nu1_sq, &self.nu1sq);
        set(&mut p.nu2_sq, &self.nu2sq);
        set(&mut p.p, &self.p);
        set(&mut p.q, &self.q);
        set(&mut p.radius, &self.radius);
        set(&mut p.eps, &self.eps);
        let g = &mut cfg.grid;
        set(&mut g.dr, &self.dr);
        if self.nr.is_some() {
            g.nr = self.nr;
        }
        set(&mut g.t_max, &self.t_max);
        if self.blowup_threshold.is_some() {
            g.blowup_threshold = self.blowup_threshold;
        }
        if self.linear {
            g.nonlinear = false;
        }
        if self.no_light_cone_cutoff {
            g.light_cone_cutoff = false;
        }
        set(&mut g.csv_stride, &self.csv_stride);
        let d = &mut cfg.data;
        set(&mut d.family, &self.family);
        set(&mut d.f1, &self.f1);
        set(&mut d.g1, &self.g1);
        set(&mut d.f2, &self.f2);
        set(&mut d.g2, &self.g2);
        let s = &mut cfg.sweep;
        set(&mut s.eps_min, &self.eps_min);
        set(&mut s.eps_max, &self.eps_max);
        set(&mut s.count, &self.eps_count);
        set(&mut s.y_max, &self.y_max);
        set(&mut s.c1, &self.c1);
        set(&mut s.c2, &self.c2);
        set(&mut s.c3, &self.c3);
        set(&mut s.t2, &self.t2);
        if self.json.is_some() {
            cfg.output.json = self.json.clone();
        }
        if self.csv.is_some() {
            cfg.output.csv = self.csv.clone();
        }
    }
}

/// Configuration from the file (if any) with the flags applied on top.
pub fn resolve_config(o: &Overrides) -> CliResult<RunConfig> {
    let mut cfg = match &o.config {
        Some(path) => RunConfig::from_path(path)?,
        None => RunConfig::default(),
    };
    o.apply(&mut cfg);
    Ok(cfg)
}

pub fn dispatch(command: &Command, cfg: &RunConfig) -> CliResult<()> {
    let json = cfg.output.json.as_deref();
    match command {
        Command::Exponents => output::emit_json(&commands::exponents(cfg)?, json),
        Command::SpecfunCheck => {
            let p = cfg.validate_params()?;
            output::emit_json(&specfun_report(&p)?, json)
        }
        Command::Simulate { functionals } => {
            let sim = commands::simulate(cfg, *functionals)?;
            commands::write_simulation(cfg, &sim)
        }
        Command::Functionals { from_csv: Some(path) } => {
            let (series, report) = commands::functionals_from_csv(cfg, path)?;
            commands::write_functionals(cfg, &series, &report)
        }
        Command::Functionals { from_csv: None } => {
            let sim = commands::simulate(cfg, true)?;
            let series = sim.series.as_ref().ok_or_else(|| CliError::Numerical("no series recorded".into()))?;
            let report = commands::analyze(cfg, series, &sim.evaluator, Some(sim.info.clone()))?;
            commands::write_functionals(cfg, series, &report)
        }
        Command::KatoSweep => {
            let sweep = commands::kato_sweep(cfg)?;
            output::to_file(cfg.output.csv.as_deref(), |w| output::write_sweep(w, &sweep.eps, &sweep.solutions))?;
            output::emit_json(&sweep.fit?, json)
        }
    }
}

/// Parses `args`, runs the subcommand and returns the exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let result = resolve_config(&cli.overrides).and_then(|cfg| dispatch(&cli.command, &cfg));
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("blowuplab: {e}");
            e.exit_code()
        }
    }
}

//! Command-line front end: classify, simulate, sweep, catalog and oracle.
//!
//! Exit codes: 0 success, 2 configuration or usage error, 3 numerical
//! instability, 4 inconclusive.

pub mod config;
mod sweep;

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};
use thiserror::Error;

use wavecrit::blowup_oracle::{check_hypotheses, integrate, strauss_glassey_comparison, GronwallSystem, IntegrateOptions, IntegrationOutcome};
use wavecrit::catalog::{self, QuadSurd, Side};
use wavecrit::decay_rules::{classify, derive_systems, ClassifyOptions, Tail, Verdict};
use wavecrit::exponent_algebra::{build_dependency_graph, solve_min_system_exact, IterationOptions};
use wavecrit::simulator::{
    data_from_wave_system, detect_blowup, evolve, fit_decay, write_probe_csv, write_snapshot, BlowupOptions, DataProfile,
    EvolveOptions, FitOptions, Grid, Probe, ProbeKind, Quantity, SimError, SimSystem,
};
use wavecrit::{ClassificationQ, Rational, WaveSystemQ};

pub use config::{parse_config, parse_config_str, print_config, ConfigError};
pub use sweep::{parse_range, run_sweep, SweepParam};

pub const SIMULATE_H: f64 = 1.0 / 128.0;
pub const SWEEP_H: f64 = 1.0 / 32.0;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_INSTABILITY: i32 = 3;
pub const EXIT_INCONCLUSIVE: i32 = 4;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("usage: {0}")]
    Usage(String),
    #[error("{0}")]
    Sim(#[from] SimError),
    #[error("inconclusive: {0}")]
    Inconclusive(String),
    #[error("{0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Usage(_) => EXIT_CONFIG,
            CliError::Sim(SimError::Config(_)) => EXIT_CONFIG,
            CliError::Sim(SimError::NumericalInstability(_)) => EXIT_INSTABILITY,
            CliError::Sim(_) | CliError::Inconclusive(_) => EXIT_INCONCLUSIVE,
            CliError::Io(_) => EXIT_CONFIG,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "wavecrit", version, about = "Decay classification and numerical experiments for semilinear wave systems")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub opts: RunOptions,
}

#[derive(Debug, Clone, Args)]
pub struct RunOptions {
    /// Grid step near the data; defaults to 2^-7 for simulate and 2^-5 for sweep --simulate.
    #[arg(long = "h", global = true)]
    pub h: Option<f64>,
    /// Largest advanced time v.
    #[arg(long, global = true, default_value_t = 16384.0)]
    pub vmax: f64,
    /// Largest retarded time u; defaults to --vmax.
    #[arg(long, global = true)]
    pub umax: Option<f64>,
    /// Relative node spacing beyond r = 4; 0 keeps the grid uniform.
    #[arg(long, global = true, default_value_t = 0.01)]
    pub stretch: f64,
    /// Replaces the amplitude of every declared data profile.
    #[arg(long, global = true)]
    pub amplitude: Option<f64>,
    /// Half-width of the perturbation box used to flag borderline verdicts, as p/q or decimal.
    #[arg(long, global = true, default_value = "1/1000000")]
    pub epsilon: String,
    /// Blow-up threshold as a multiple of the data amplitude; enables blow-up certification.
    #[arg(long, global = true)]
    pub threshold: Option<f64>,
    /// Recorded in every report; the numerics are deterministic.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Output directory; falls back to $WAVECRIT_OUT, then ./wavecrit-out.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Sweep worker threads; defaults to the number of logical cores.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            h: None,
            vmax: 16384.0,
            umax: None,
            stretch: 0.01,
            amplitude: None,
            epsilon: "1/1000000".into(),
            threshold: None,
            seed: 0,
            out: None,
            jobs: None,
        }
    }
}

impl RunOptions {
    pub fn out_dir(&self) -> PathBuf {
        self.out
            .clone()
            .or_else(|| std::env::var_os("WAVECRIT_OUT").map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("wavecrit-out"))
    }

    pub fn epsilon(&self) -> Result<Rational, CliError> {
        config::parse_rational(&self.epsilon)
            .filter(|e| *e > Rational::from_integer(0.into()))
            .ok_or_else(|| CliError::Usage(format!("--epsilon {:?} is not a positive number", self.epsilon)))
    }

    /// `default_h` applies when `--h` is absent.
    pub fn grid(&self, default_h: f64) -> Result<Grid<f64>, CliError> {
        let g = Grid::stretched(self.h.unwrap_or(default_h), self.umax.unwrap_or(self.vmax), self.vmax, self.stretch, 4.0);
        g.validate()?;
        Ok(g)
    }

    fn jobs(&self) -> usize {
        self.jobs
            .unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1))
            .max(1)
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Classify a system: verdict, σ, s, dependency graph and robustness as JSON.
    Classify { config: PathBuf },
    /// Evolve a 3-dimensional system; writes probe CSVs, moments and a JSON summary.
    Simulate {
        config: PathBuf,
        /// Also dump every k-th diagonal to snapshot.bin.
        #[arg(long, value_name = "K")]
        snapshot: Option<usize>,
    },
    /// Vary one parameter over a:b:step and tabulate verdicts (and fits with --simulate).
    Sweep {
        config: PathBuf,
        /// term.<k>.{power,coefficient,t_weight,u_weight}, data.<field>.{tail_exponent,amplitude,support} or dimension.
        #[arg(long)]
        param: String,
        /// a:b:step, exact.
        #[arg(long)]
        range: String,
        /// Also simulate each point and fit decay exponents.
        #[arg(long)]
        simulate: bool,
    },
    /// Closed-form critical exponents and curve predicates as JSON.
    Catalog {
        /// strauss, glassey, dv, two-strauss, strauss-glassey-scalar, strauss-glassey-system, strauss-null, kitamura, initial-tail or all.
        name: String,
        #[arg(long, default_value_t = 3)]
        n: u32,
        #[arg(long)]
        q1: Option<String>,
        #[arg(long)]
        q2: Option<String>,
        #[arg(long)]
        alpha: Option<String>,
        #[arg(long)]
        beta: Option<String>,
    },
    /// Integrate x_i' = c_i t^{-α_i} x_{i-1}^{p_i} and report blow-up.
    Oracle {
        /// Comma-separated c_i.
        #[arg(long, value_delimiter = ',')]
        c: Vec<f64>,
        #[arg(long = "alpha", value_delimiter = ',', allow_hyphen_values = true)]
        alpha: Vec<f64>,
        #[arg(long, value_delimiter = ',')]
        p: Vec<f64>,
        #[arg(long, value_delimiter = ',')]
        x0: Vec<f64>,
        #[arg(long, default_value_t = 1.0)]
        t0: f64,
        /// Use the Strauss–Glassey comparison system at q1,q2 instead.
        #[arg(long, value_delimiter = ',')]
        strauss_glassey: Option<Vec<f64>>,
        #[arg(long, default_value_t = 1e10)]
        t_max: f64,
    },
    /// Parse a config and print it in normal form.
    Print { config: PathBuf },
}

pub fn run(cli: &Cli) -> Result<Value, CliError> {
    let opts = &cli.opts;
    match &cli.command {
        Command::Classify { config } => {
            let sys = parse_config(config)?;
            classify_json(&sys, &opts.epsilon()?)
        }
        Command::Simulate { config, snapshot } => {
            let sys = parse_config(config)?;
            if *snapshot == Some(0) {
                return Err(CliError::Usage("--snapshot stride must be positive".into()));
            }
            simulate(&sys, opts, *snapshot, &opts.out_dir())
        }
        Command::Sweep { config, param, range, simulate } => {
            let sys = parse_config(config)?;
            let param: SweepParam = param.parse()?;
            let values = parse_range(range)?;
            let csv = run_sweep(&sys, &param, &values, *simulate, opts, opts.jobs())?;
            let dir = opts.out_dir();
            fs::create_dir_all(&dir)?;
            let path = dir.join("sweep.csv");
            fs::write(&path, &csv)?;
            emit(&csv);
            Ok(json!({ "sweep": path.display().to_string(), "rows": values.len(), "seed": opts.seed }))
        }
        Command::Catalog { name, n, q1, q2, alpha, beta } => catalog_json(name, *n, q1, q2, alpha, beta),
        Command::Oracle { c, alpha, p, x0, t0, strauss_glassey, t_max } => {
            let sys = match strauss_glassey {
                Some(q) if q.len() != 2 => return Err(CliError::Usage("--strauss-glassey takes q1,q2".into())),
                Some(q) => strauss_glassey_comparison(q[0], q[1], 0.1, [1.0, 1.0], [1.0, 1.0, 1.0], *t0),
                None => GronwallSystem::new(c.clone(), alpha.clone(), p.clone(), x0.clone(), *t0),
            }
            .map_err(|e| CliError::Usage(e.to_string()))?;
            let outcome = integrate(&sys, &IntegrateOptions { t_max: *t_max, ..IntegrateOptions::default() });
            let hyp = check_hypotheses(&sys);
            // Under the hypotheses blow-up is guaranteed, so reaching t_max only means t_max was too small.
            let verdict = match &outcome {
                IntegrationOutcome::BlowUp { .. } => "blow-up",
                IntegrationOutcome::Global { .. } if !hyp.holds => "global",
                _ => "inconclusive",
            };
            let report = json!({ "system": sys, "hypotheses": hyp, "outcome": outcome, "verdict": verdict });
            if verdict == "inconclusive" {
                emit_json(&report);
                return Err(CliError::Inconclusive(format!("no blow-up detected by t = {t_max:e}")));
            }
            Ok(report)
        }
        Command::Print { config } => {
            let sys = parse_config(config)?;
            emit(&print_config(&sys));
            Ok(Value::Null)
        }
    }
}

/// Writes to stdout, ignoring a closed pipe.
fn emit(text: &str) {
    let _ = std::io::stdout().lock().write_all(text.as_bytes());
}

fn emit_json(v: &Value) {
    emit(&format!("{}\n", serde_json::to_string_pretty(v).expect("JSON values serialize")));
}

/// Runs the parsed command line, prints the JSON report and returns the exit
/// code.
pub fn main_with(cli: &Cli) -> i32 {
    match run(cli) {
        Ok(Value::Null) => EXIT_OK,
        Ok(v) => {
            emit_json(&v);
            EXIT_OK
        }
        Err(e) => {
            eprintln!("wavecrit: {e}");
            e.exit_code()
        }
    }
}

fn q_str(r: &Rational) -> String {
    config::format_rational(r)
}

fn tail_str(t: &Tail<Rational>) -> String {
    match t {
        Tail::Finite(v) => q_str(v),
        Tail::Infinite => "inf".into(),
    }
}

pub fn classify_system(sys: &WaveSystemQ, eps: &Rational) -> Result<ClassificationQ, CliError> {
    classify(sys, &ClassifyOptions { epsilon: eps.clone(), ..ClassifyOptions::default() })
        .map_err(|e| CliError::Config(ConfigError::Syntax(e.to_string())))
}

pub fn classify_json(sys: &WaveSystemQ, eps: &Rational) -> Result<Value, CliError> {
    let c = classify_system(sys, eps)?;
    let graph = derive_systems(sys).ok().and_then(|(_, ss)| {
        let ss = ss?;
        let sol = solve_min_system_exact(&ss.system, &IterationOptions::default()).solution?;
        let g = build_dependency_graph(&ss.system, &sol).ok()?;
        let edges: Vec<[&str; 2]> = g
            .edges
            .iter()
            .map(|&(j, i)| [sys.fields[ss.finite[j]].as_str(), sys.fields[ss.finite[i]].as_str()])
            .collect();
        Some(json!({ "edges": edges }))
    });
    Ok(json!({
        "verdict": c.verdict.name(),
        "fields": sys.fields,
        "sigma": c.sigma.as_ref().map(|s| s.iter().map(q_str).collect::<Vec<_>>()),
        "s": c.s.as_ref().map(|s| s.iter().map(tail_str).collect::<Vec<_>>()),
        "graph": graph,
        "loops": c.loops.iter().map(|l| l.iter().map(|&i| sys.fields[i].clone()).collect::<Vec<_>>()).collect::<Vec<_>>(),
        "sigma_robust": c.sigma_robust,
        "s_robust": c.s_robust,
        "borderline": c.verdict == Verdict::Borderline,
        "log_flags": c.log_flags,
        "epsilon": q_str(eps),
    }))
}

pub(crate) fn sim_inputs(
    sys: &WaveSystemQ,
    opts: &RunOptions,
) -> Result<(SimSystem<f64>, Vec<DataProfile<f64>>), CliError> {
    let sim = SimSystem::from_wave_system(sys)?;
    let mut data: Vec<DataProfile<f64>> = data_from_wave_system(sys)?;
    if let Some(a) = opts.amplitude {
        for (d, spec) in data.iter_mut().zip(&sys.data) {
            if spec.is_some() {
                d.phi0 = a;
            }
        }
    }
    Ok((sim, data))
}

pub(crate) fn standard_probes(fields: usize) -> Vec<Probe<f64>> {
    (0..fields)
        .flat_map(|f| {
            [ProbeKind::FixedRho(0.25), ProbeKind::Scri(0.0)]
                .map(|kind| Probe { kind, field: f, quantity: Quantity::Psi })
        })
        .collect()
}

fn moment_times(v_max: f64) -> Vec<f64> {
    let decades = (2.0 * v_max).log10().max(0.0);
    (0..=(decades * 10.0).floor() as usize).map(|k| 10f64.powf(k as f64 / 10.0)).collect()
}

fn fit_json(samples: &[(f64, f64)]) -> Value {
    match fit_decay(samples, &FitOptions::default()) {
        Ok(f) => json!(f),
        Err(e) => json!({ "error": e.to_string() }),
    }
}

pub fn simulate(sys: &WaveSystemQ, opts: &RunOptions, snapshot: Option<usize>, dir: &Path) -> Result<Value, CliError> {
    let (sim, data) = sim_inputs(sys, opts)?;
    let grid = opts.grid(SIMULATE_H)?;
    let amplitude = data.iter().map(|d| d.phi0.abs()).fold(0.0, f64::max);
    let run = evolve(
        &sim,
        &data,
        &grid,
        &EvolveOptions {
            probes: standard_probes(sim.fields),
            moment_times: moment_times(grid.v_max),
            blowup_threshold: opts.threshold.map(|k| k * amplitude),
            snapshot_stride: snapshot,
            ..EvolveOptions::default()
        },
    )?;
    fs::create_dir_all(dir)?;
    let mut probes = Vec::new();
    for p in &run.probes {
        let name = format!("{}.csv", p.probe.label());
        let mut buf = Vec::new();
        write_probe_csv(&mut buf, &p.samples)?;
        fs::write(dir.join(&name), buf)?;
        probes.push(json!({ "probe": p.probe.label(), "file": name, "fit": fit_json(&p.samples) }));
    }
    let mut moments = String::from("t");
    for f in &sys.fields {
        moments.push_str(&format!(",H_{f}"));
    }
    moments.push('\n');
    let rows = run.moments.iter().map(Vec::len).min().unwrap_or(0);
    for k in 0..rows {
        moments.push_str(&format!("{:e}", run.moments[0][k].0));
        for m in &run.moments {
            moments.push_str(&format!(",{:e}", m[k].1));
        }
        moments.push('\n');
    }
    fs::write(dir.join("moments.csv"), moments)?;
    if snapshot.is_some() {
        let mut buf = Vec::new();
        write_snapshot(&mut buf, run.h, sim.fields, &run.snapshot)?;
        fs::write(dir.join("snapshot.bin"), buf)?;
    }

    let mut report = json!({
        "seed": opts.seed,
        "grid": grid,
        "cells": run.cells,
        "max_abs_psi": run.max_abs_psi,
        "probes": probes,
        "blowup": run.blowup,
    });
    let mut inconclusive = None;
    if let (Some(k), Some(_)) = (opts.threshold, run.blowup) {
        let cert = detect_blowup(&sim, &data, &grid, &BlowupOptions { threshold_factor: k, ..BlowupOptions::default() })?;
        fs::write(dir.join("certificate.json"), serde_json::to_string_pretty(&cert).expect("serializable"))?;
        if !cert.certified {
            inconclusive = Some("threshold crossed but crossing times did not converge under refinement".to_string());
        }
        report["certificate"] = json!(cert);
    }
    fs::write(dir.join("summary.json"), serde_json::to_string_pretty(&report).expect("serializable"))?;
    match inconclusive {
        Some(msg) => {
            emit_json(&report);
            Err(CliError::Inconclusive(msg))
        }
        None => Ok(report),
    }
}

fn surd_json(name: &str, n: u32, v: Option<QuadSurd<Rational>>) -> Value {
    match v {
        Some(v) => json!({ "name": name, "n": n, "value": v.to_f64(), "exact": v.simplified().to_string() }),
        None => json!({ "name": name, "n": n, "error": "dimension must be at least 2" }),
    }
}

fn catalog_json(
    name: &str,
    n: u32,
    q1: &Option<String>,
    q2: &Option<String>,
    alpha: &Option<String>,
    beta: &Option<String>,
) -> Result<Value, CliError> {
    let num = |v: &Option<String>, what: &str| -> Result<Rational, CliError> {
        let s = v.as_deref().ok_or_else(|| CliError::Usage(format!("catalog {name} needs --{what}")))?;
        config::parse_rational(s).ok_or_else(|| CliError::Usage(format!("--{what} {s:?} is not a number")))
    };
    let side = |s: Option<Side>| s.map(Side::name).unwrap_or("invalid-dimension");
    let curve = |f: fn(&Rational, &Rational, u32) -> Option<Side>| -> Result<Value, CliError> {
        let (a, b) = (num(q1, "q1")?, num(q2, "q2")?);
        Ok(json!({ "name": name, "n": n, "q1": q_str(&a), "q2": q_str(&b), "side": side(f(&a, &b, n)) }))
    };
    match name {
        "strauss" => Ok(surd_json(name, n, catalog::strauss_exponent(n))),
        "glassey" => Ok(surd_json(name, n, catalog::glassey_exponent(n))),
        "dv" => Ok(surd_json(name, n, catalog::dv_exponent(n))),
        "all" => Ok(json!([
            surd_json("strauss", n, catalog::strauss_exponent(n)),
            surd_json("glassey", n, catalog::glassey_exponent(n)),
            surd_json("dv", n, catalog::dv_exponent(n)),
        ])),
        "two-strauss" => curve(catalog::two_strauss_on_curve),
        "strauss-glassey-scalar" => curve(catalog::strauss_glassey_scalar),
        "strauss-glassey-system" => curve(catalog::strauss_glassey_system),
        "strauss-null" => curve(catalog::strauss_null_curve),
        "initial-tail" => curve(catalog::initial_tail_condition),
        "kitamura" => {
            let q = num(q1, "q1")?;
            let zero = || Some("0".to_string());
            let a = num(&alpha.clone().or_else(zero), "alpha")?;
            let b = num(&beta.clone().or_else(zero), "beta")?;
            Ok(json!({
                "name": name, "n": n, "q": q_str(&q), "alpha": q_str(&a), "beta": q_str(&b),
                "side": side(catalog::kitamura_condition(&q, &a, &b, n)),
            }))
        }
        other => Err(CliError::Usage(format!("unknown catalog entry {other:?}"))),
    }
}

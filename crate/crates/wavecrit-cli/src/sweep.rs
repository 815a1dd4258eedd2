use std::str::FromStr;
use std::sync::mpsc;
use std::thread;

use num_traits::{Signed, ToPrimitive};

use wavecrit::decay_rules::{DataKind, Tail};
use wavecrit::simulator::{evolve, fit_decay, EvolveOptions, FitOptions, ProbeKind};
use wavecrit::{Rational, WaveSystemQ};

use crate::config::{format_rational, parse_rational};
use crate::{classify_system, sim_inputs, standard_probes, CliError, RunOptions};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SweepParam {
    Term { index: usize, key: TermKey },
    Data { field: String, key: DataKey },
    Dimension,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TermKey {
    Power,
    Coefficient,
    TWeight,
    UWeight,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DataKey {
    TailExponent,
    Amplitude,
    Support,
}

impl FromStr for SweepParam {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        let bad = || CliError::Usage(format!("unknown sweep parameter {s:?}"));
        let parts: Vec<&str> = s.split('.').collect();
        match parts.as_slice() {
            ["dimension"] => Ok(SweepParam::Dimension),
            ["term", k, key] => {
                let key = match *key {
                    "power" => TermKey::Power,
                    "coefficient" => TermKey::Coefficient,
                    "t_weight" => TermKey::TWeight,
                    "u_weight" => TermKey::UWeight,
                    _ => return Err(bad()),
                };
                Ok(SweepParam::Term { index: k.parse().map_err(|_| bad())?, key })
            }
            ["data", field, key] => {
                let key = match *key {
                    "tail_exponent" => DataKey::TailExponent,
                    "amplitude" => DataKey::Amplitude,
                    "support" => DataKey::Support,
                    _ => return Err(bad()),
                };
                Ok(SweepParam::Data { field: field.to_string(), key })
            }
            _ => Err(bad()),
        }
    }
}

/// Exact grid `a, a + step, ...` up to and including `b`.
pub fn parse_range(s: &str) -> Result<Vec<Rational>, CliError> {
    let bad = |m: &str| CliError::Usage(format!("range {s:?}: {m}"));
    let parts: Vec<&str> = s.split(':').collect();
    let [a, b, step] = parts.as_slice() else {
        return Err(bad("expected a:b:step"));
    };
    let num = |x: &str| parse_rational(x).ok_or_else(|| bad("not a number"));
    let (a, b, step) = (num(a)?, num(b)?, num(step)?);
    if !step.is_positive() {
        return Err(bad("step must be positive"));
    }
    if a > b {
        return Err(bad("empty range"));
    }
    let count = ((b.clone() - a.clone()) / step.clone()).floor().to_usize().unwrap_or(usize::MAX);
    if count >= 1_000_000 {
        return Err(bad("more than a million points"));
    }
    Ok((0..=count).map(|k| a.clone() + step.clone() * Rational::from_integer(k.into())).collect())
}

pub fn apply_param(sys: &WaveSystemQ, param: &SweepParam, value: &Rational) -> Result<WaveSystemQ, CliError> {
    let mut sys = sys.clone();
    let float = value.to_f64().unwrap_or(f64::NAN);
    match param {
        SweepParam::Dimension => {
            sys.dimension = value
                .to_integer()
                .to_u32()
                .filter(|_| value.is_integer())
                .ok_or_else(|| CliError::Usage(format!("dimension {value} is not a natural number")))?;
        }
        SweepParam::Term { index, key } => {
            let t = sys
                .terms
                .get_mut(*index)
                .ok_or_else(|| CliError::Usage(format!("no term {index}")))?;
            match key {
                TermKey::Power => t.power = value.clone(),
                TermKey::Coefficient => t.coefficient = float,
                TermKey::TWeight => t.t_weight = value.clone(),
                TermKey::UWeight => t.u_weight = value.clone(),
            }
        }
        SweepParam::Data { field, key } => {
            let i = sys
                .fields
                .iter()
                .position(|f| f == field)
                .ok_or_else(|| CliError::Usage(format!("no field {field:?}")))?;
            let d = sys.data[i]
                .as_mut()
                .ok_or_else(|| CliError::Usage(format!("field {field:?} has no data section")))?;
            match key {
                DataKey::TailExponent => d.kind = DataKind::Tail(value.clone()),
                DataKey::Amplitude => d.amplitude = float,
                DataKey::Support => d.support = float,
            }
        }
    }
    Ok(sys)
}

fn join<T>(xs: &[T], f: impl Fn(&T) -> String) -> String {
    xs.iter().map(f).collect::<Vec<_>>().join(";")
}

fn row(sys: &WaveSystemQ, param: &SweepParam, value: &Rational, simulate: bool, opts: &RunOptions) -> Vec<String> {
    let mut out = vec![format_rational(value)];
    let nf = sys.fields.len();
    let pad = |out: &mut Vec<String>, n: usize| out.extend(std::iter::repeat_n(String::new(), n));
    let sys = match apply_param(sys, param, value) {
        Ok(s) => s,
        Err(e) => {
            out.push(format!("error: {e}"));
            pad(&mut out, 2 + if simulate { nf + 1 } else { 0 });
            return out;
        }
    };
    let eps = opts.epsilon().unwrap_or_else(|_| Rational::new(1.into(), 1_000_000.into()));
    match classify_system(&sys, &eps) {
        Ok(c) => {
            out.push(c.verdict.name().to_string());
            out.push(c.sigma.as_ref().map(|s| join(s, format_rational)).unwrap_or_default());
            out.push(
                c.s.as_ref()
                    .map(|s| {
                        join(s, |t| match t {
                            Tail::Finite(v) => format_rational(v),
                            Tail::Infinite => "inf".into(),
                        })
                    })
                    .unwrap_or_default(),
            );
        }
        Err(e) => {
            out.push(format!("error: {e}"));
            pad(&mut out, 2);
        }
    }
    if simulate {
        out.extend(simulate_row(&sys, opts));
    }
    out
}

/// Fitted interior exponent of `ψ` at `r/t = 1/4` per field, then the blow-up
/// time if the run crossed the threshold.
fn simulate_row(sys: &WaveSystemQ, opts: &RunOptions) -> Vec<String> {
    let nf = sys.fields.len();
    let failed = |e: String| {
        let mut v = vec![format!("error: {e}")];
        v.extend(std::iter::repeat_n(String::new(), nf));
        v
    };
    let (sim, data) = match sim_inputs(sys, opts) {
        Ok(x) => x,
        Err(e) => return failed(e.to_string()),
    };
    let grid = match opts.grid(crate::SWEEP_H) {
        Ok(g) => g,
        Err(e) => return failed(e.to_string()),
    };
    let amplitude = data.iter().map(|d| d.phi0.abs()).fold(0.0, f64::max);
    let probes = standard_probes(nf).into_iter().filter(|p| matches!(p.kind, ProbeKind::FixedRho(_))).collect();
    let run = evolve(
        &sim,
        &data,
        &grid,
        &EvolveOptions {
            probes,
            blowup_threshold: opts.threshold.map(|k| k * amplitude),
            ..EvolveOptions::default()
        },
    );
    match run {
        Ok(run) => {
            let mut v: Vec<String> = run
                .probes
                .iter()
                .map(|p| match fit_decay(&p.samples, &FitOptions::default()) {
                    Ok(f) => format!("{:.6}", f.exponent),
                    Err(_) => String::new(),
                })
                .collect();
            v.push(run.blowup.map(|b| format!("{:e}", b.point.t)).unwrap_or_default());
            v
        }
        Err(e) => failed(e.to_string()),
    }
}

/// Evaluates every point on a bounded worker pool and returns the CSV with
/// rows in range order.
pub fn run_sweep(
    sys: &WaveSystemQ,
    param: &SweepParam,
    values: &[Rational],
    simulate: bool,
    opts: &RunOptions,
    jobs: usize,
) -> Result<String, CliError> {
    if values.is_empty() {
        return Err(CliError::Usage("empty sweep range".into()));
    }
    let (tx, rx) = mpsc::channel();
    let next = std::sync::atomic::AtomicUsize::new(0);
    thread::scope(|scope| {
        for _ in 0..jobs.min(values.len()) {
            let tx = tx.clone();
            let next = &next;
            scope.spawn(move || loop {
                let k = next.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
                let Some(v) = values.get(k) else { break };
                if tx.send((k, row(sys, param, v, simulate, opts))).is_err() {
                    break;
                }
            });
        }
    });
    drop(tx);
    let mut rows: Vec<(usize, Vec<String>)> = rx.into_iter().collect();
    rows.sort_by_key(|(k, _)| *k);

    let mut header = vec!["value".to_string(), "verdict".into(), "sigma".into(), "s".into()];
    if simulate {
        header.extend(sys.fields.iter().map(|f| format!("fit_{f}")));
        header.push("blowup_t".into());
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(&header).map_err(|e| CliError::Usage(e.to_string()))?;
    for (_, r) in rows {
        w.write_record(&r).map_err(|e| CliError::Usage(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("CSV of UTF-8 fields"))
}

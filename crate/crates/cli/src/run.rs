//! Experiment dispatch. Each runner returns its JSON payload and writes its
//! sidecar files into the output directory.

use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use serde::Serialize;
use serde_json::Value;

use heatsheet::capacity::cap;
use heatsheet::dynamics::integrate;
use heatsheet::hitting::{compact_core_with, hitting_probability, importance_hitting, restart_batch};
use heatsheet::invariant::{ball_mass, ergodic_check, gibbs_sample, GibbsConfig};
use heatsheet::rng::Streams;
use heatsheet::verify::{run_verify, VerifyConfig};
use heatsheet::TargetSet;

use crate::config::RunFile;
use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Subcommand {
    Simulate,
    Hit,
    Capacity,
    Invariant,
    Recurrence,
    Verify,
}

/// Payload plus the names of the files written next to the envelope.
pub struct Outcome {
    pub payload: Value,
    pub files: Vec<String>,
}

/// One row of `trials.csv`.
#[derive(Serialize)]
struct TrialRow {
    trial: usize,
    hit: bool,
    first_hit_time: Option<f64>,
    excursions_used: usize,
    min_distance: Option<f64>,
}

pub const TRIALS_CSV: &str = "trials.csv";
pub const PROPOSALS_CSV: &str = "proposals.csv";

fn target(run: &RunFile) -> Result<&TargetSet<f64>, CliError> {
    run.target
        .as_ref()
        .ok_or_else(|| CliError::Config("target: required by this subcommand".into()))
}

fn write_rows<S: Serialize>(out: &Path, name: &str, rows: impl IntoIterator<Item = S>) -> Result<String, CliError> {
    let mut w = csv::Writer::from_path(out.join(name))?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(name.to_string())
}

pub fn dispatch(cmd: Subcommand, run: &RunFile, out: &Path) -> Result<Outcome, CliError> {
    let streams = Streams::new(run.experiment.seed);
    match cmd {
        Subcommand::Simulate => simulate(run, out, &streams),
        Subcommand::Hit => hit(run, out, &streams),
        Subcommand::Capacity => capacity(run),
        Subcommand::Invariant => invariant(run, out, &streams),
        Subcommand::Recurrence => recurrence(run, out, &streams),
        Subcommand::Verify => verify(run),
    }
}

#[derive(Serialize)]
struct PathSummary {
    replica: usize,
    stream_key: Option<String>,
    n_times: usize,
    t_start: f64,
    t_end: f64,
    final_sup_norm: f64,
    max_sup_norm: f64,
    dump: Option<String>,
}

fn simulate(run: &RunFile, out: &Path, streams: &Streams) -> Result<Outcome, CliError> {
    let exp = &run.experiment;
    let mut icfg = exp.integrator(exp.horizon);
    icfg.record_from = run.simulate.record_from;
    let u0 = exp.initial()?;
    let pot = exp.potential()?;
    let mut paths = Vec::new();
    let mut files = Vec::new();
    for r in 0..run.simulate.paths {
        let path = integrate(&u0, &pot, &icfg, &mut streams.stream(r as u64, "simulate"))?;
        let last = path.n_times() - 1;
        let dump = if run.simulate.dump {
            let name = format!("path_{r:04}.bin");
            path.write_binary(BufWriter::new(File::create(out.join(&name))?))?;
            files.push(name.clone());
            Some(name)
        } else {
            None
        };
        paths.push(PathSummary {
            replica: r,
            stream_key: path.provenance().map(str::to_string),
            n_times: path.n_times(),
            t_start: path.time(0),
            t_end: path.time(last),
            final_sup_norm: path.sup_norm(last),
            max_sup_norm: (0..path.n_times()).map(|n| path.sup_norm(n)).fold(0.0, f64::max),
            dump,
        });
    }
    Ok(Outcome {
        payload: serde_json::json!({ "paths": paths }),
        files,
    })
}

fn hit(run: &RunFile, out: &Path, streams: &Streams) -> Result<Outcome, CliError> {
    let exp = &run.experiment;
    let a = target(run)?;
    let est = hitting_probability(exp, a, &exp.window, streams)?;
    let rows = est.trials.iter().map(|t| TrialRow {
        trial: t.trial,
        hit: t.hit,
        first_hit_time: t.first_hit_time,
        excursions_used: 1,
        min_distance: Some(t.min_distance),
    });
    let files = vec![write_rows(out, TRIALS_CSV, rows)?];
    let mut payload = serde_json::to_value(&est)?;
    payload.as_object_mut().expect("object").remove("trials");
    if run.hit.importance {
        let imp = importance_hitting(exp, a, &exp.window, exp.window.t[1], &streams.child(1))?;
        payload["importance"] = serde_json::to_value(imp)?;
    }
    Ok(Outcome { payload, files })
}

fn capacity(run: &RunFile) -> Result<Outcome, CliError> {
    let a = target(run)?;
    let beta = run.capacity.beta.unwrap_or(run.experiment.d as f64 - 6.0);
    let est = cap(a, beta, run.capacity.m)?;
    let mut payload = serde_json::to_value(&est)?;
    if let Some(f) = run.capacity.core_fraction {
        let core = compact_core_with(a, f, beta, run.capacity.m)?;
        payload["core"] = serde_json::to_value(core)?;
    }
    Ok(Outcome {
        payload,
        files: Vec::new(),
    })
}

fn invariant(run: &RunFile, out: &Path, streams: &Streams) -> Result<Outcome, CliError> {
    let exp = &run.experiment;
    let sec = &run.invariant;
    let pot = exp.potential()?;
    let gcfg = GibbsConfig {
        d: exp.d,
        mode: sec.mode,
        synthesis: sec.synthesis,
        n_x: sec.n_x,
        n_target: sec.n_target,
        keep_fields: false,
    };
    let batch = gibbs_sample(&pot, &gcfg, streams)?;
    let masses = sec
        .radii
        .iter()
        .enumerate()
        .map(|(i, &r)| ball_mass(&pot, r, &gcfg, &streams.child(10 + i as u64)))
        .collect::<heatsheet::Result<Vec<_>>>()?;
    let ergodic = match &sec.ergodic {
        Some(e) => Some(ergodic_check(&pot, &exp.initial()?, e, &streams.child(2))?),
        None => None,
    };
    let files = vec![write_rows(out, PROPOSALS_CSV, &batch.proposals)?];
    let payload = serde_json::json!({
        "potential": batch.potential,
        "proposals": batch.proposals.len(),
        "accepted": batch.accepted,
        "acceptance_rate": batch.acceptance_rate,
        "acceptance_std_error": batch.acceptance_std_error(),
        "accepted_integral_u": batch.accepted_integral(),
        "ball_masses": masses,
        "ergodic": ergodic,
    });
    Ok(Outcome { payload, files })
}

fn recurrence(run: &RunFile, out: &Path, streams: &Streams) -> Result<Outcome, CliError> {
    let exp = &run.experiment;
    let a = target(run)?;
    let sec = &run.recurrence;
    let summary = restart_batch(exp, a, sec.start, sec.stop_on_hit, streams)?;
    let rows = summary.records.iter().enumerate().map(|(i, r)| TrialRow {
        trial: i,
        hit: r.first_hit().is_some(),
        first_hit_time: r.first_hit_time,
        excursions_used: r.first_hit().unwrap_or(r.hits.len()),
        min_distance: None,
    });
    let files = vec![write_rows(out, TRIALS_CSV, rows)?];
    let mut payload = serde_json::to_value(&summary)?;
    payload.as_object_mut().expect("object").remove("records");
    Ok(Outcome { payload, files })
}

fn verify(run: &RunFile) -> Result<Outcome, CliError> {
    let cfg = VerifyConfig {
        k_max: run.verify.k_max,
        mc_samples: run.verify.mc_samples,
        mc_intervals: run.verify.mc_intervals,
        seed: run.experiment.seed,
    };
    let report = run_verify(&cfg)?;
    Ok(Outcome {
        payload: serde_json::to_value(&report)?,
        files: Vec::new(),
    })
}

//! Batch orchestration, session-log replay, and report rendering.
//!
//! A batch launches N independent runs (annealing seeds `seed + i`, or one
//! agent loop per transcript/endpoint call), writes per-run artifacts under
//! `<out>/run_<i>/`, and selects the best valid result into `report.json`.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::agent::{
    run_agent, AgentConfig, AgentOutcome, AgentTrace, ChatBackend, HttpBackend, ScriptedBackend,
};
use crate::cluster::{ClusterConstraints, ScoreBreakdown};
use crate::error::{Error, Result};
use crate::layout::{
    parse_layout, parse_metrics, parse_routability, Layout, LayoutMetrics, RoutabilityReport,
};
use crate::netlist::{parse_netlist, Netlist};
use crate::optimize::{run_sa, SAConfig};
use crate::prompts::GuidanceConfig;
use crate::tools::{LogRecord, Session, ToolCall};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Sa,
    Agent,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    Http,
    Scripted,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct AgentSettings {
    pub backend: BackendKind,
    pub endpoint: String,
    pub model: String,
    /// Scripted mode: one transcript file per run.
    pub transcripts: Vec<PathBuf>,
    pub config: AgentConfig,
    /// Override for the guidance preamble.
    pub guidance: Option<String>,
}

impl Default for AgentSettings {
    fn default() -> Self {
        AgentSettings {
            backend: BackendKind::Http,
            endpoint: "https://api.openai.com/v1/chat/completions".into(),
            model: "gpt-3.5-turbo".into(),
            transcripts: Vec::new(),
            config: AgentConfig::default(),
            guidance: None,
        }
    }
}

impl AgentSettings {
    pub fn guidance_config(&self) -> GuidanceConfig {
        match &self.guidance {
            Some(text) => GuidanceConfig {
                guidance_text: text.clone(),
            },
            None => GuidanceConfig::default(),
        }
    }
}

/// Full configuration for a batch; flags override file values in the CLI.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunConfig {
    pub netlist: PathBuf,
    #[serde(default)]
    pub constraints: Option<PathBuf>,
    #[serde(default)]
    pub layout: Option<PathBuf>,
    #[serde(default)]
    pub routability: Option<PathBuf>,
    #[serde(default)]
    pub metrics: Option<PathBuf>,
    pub mode: Mode,
    #[serde(default = "default_runs")]
    pub runs: usize,
    #[serde(default)]
    pub jobs: Option<usize>,
    pub out: PathBuf,
    #[serde(default)]
    pub sa: SAConfig,
    #[serde(default)]
    pub agent: AgentSettings,
}

fn default_runs() -> usize {
    10
}

/// Parsed input files for one cell.
#[derive(Debug, Clone)]
pub struct LoadedInputs {
    pub netlist: Netlist,
    pub constraints: ClusterConstraints,
    pub layout: Option<Layout>,
    pub routability: Option<RoutabilityReport>,
}

pub fn load_inputs(
    netlist_path: &Path,
    constraints_path: Option<&Path>,
    layout_path: Option<&Path>,
    routability_path: Option<&Path>,
) -> Result<LoadedInputs> {
    let netlist = parse_netlist(&fs::read_to_string(netlist_path)?)?;
    let constraints = match constraints_path {
        Some(path) => ClusterConstraints::from_json_str(&netlist, &fs::read_to_string(path)?)?,
        None => ClusterConstraints::empty(),
    };
    let layout = match layout_path {
        Some(path) => Some(parse_layout(&fs::read_to_string(path)?, Some(&netlist))?),
        None => None,
    };
    let routability = match routability_path {
        Some(path) => Some(parse_routability(
            &fs::read_to_string(path)?,
            Some(&netlist),
        )?),
        None => None,
    };
    Ok(LoadedInputs {
        netlist,
        constraints,
        layout,
        routability,
    })
}

impl LoadedInputs {
    pub fn session(&self) -> Result<Session> {
        Session::new(
            self.netlist.clone(),
            self.constraints.clone(),
            self.layout.clone(),
            self.routability.clone(),
        )
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunReport {
    pub index: usize,
    /// Seed (annealing) or transcript/endpoint identity (agent).
    pub label: String,
    pub outcome: String,
    pub valid: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub final_score: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub constraints_path: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BatchReport {
    pub mode: Mode,
    pub initial_score: f64,
    pub runs: Vec<RunReport>,
    /// Index of the best valid run; absent when every run is invalid.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub best_run: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub best_score: Option<f64>,
    /// `(best - initial) / max(initial, 1e-9)`, reported to 4 decimals.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub improvement_ratio: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub metrics: Option<LayoutMetrics>,
}

fn write_run_artifacts(
    dir: &Path,
    trace_json: &str,
    constraints: Option<&ClusterConstraints>,
    log: &str,
) -> Result<Option<String>> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("trace.json"), trace_json)?;
    fs::write(dir.join("log.jsonl"), log)?;
    match constraints {
        Some(cc) => {
            let path = dir.join("constraints.json");
            fs::write(&path, cc.to_final_answer_json())?;
            Ok(Some(path.display().to_string()))
        }
        None => Ok(None),
    }
}

fn run_sa_once(inputs: &LoadedInputs, config: &RunConfig, index: usize) -> Result<RunReport> {
    let seed = config.sa.seed.wrapping_add(index as u64);
    let sa_config = SAConfig {
        seed,
        ..config.sa.clone()
    };
    let run = run_sa(inputs.session()?, &sa_config)?;
    let dir = config.out.join(format!("run_{index}"));
    let trace = serde_json::to_string_pretty(&run.summary)?;
    let constraints_path = write_run_artifacts(
        &dir,
        &trace,
        Some(&run.best_constraints),
        &run.session.log_to_string(),
    )?;
    Ok(RunReport {
        index,
        label: format!("seed {seed}"),
        outcome: "completed".into(),
        valid: true,
        final_score: Some(run.best_score),
        constraints_path,
    })
}

fn run_agent_once(inputs: &LoadedInputs, config: &RunConfig, index: usize) -> Result<RunReport> {
    let settings = &config.agent;
    let (backend, label): (Box<dyn ChatBackend>, String) = match settings.backend {
        BackendKind::Scripted => {
            let path = settings.transcripts.get(index).ok_or_else(|| {
                Error::InvalidConfig(format!(
                    "scripted agent batch needs one transcript per run; run {index} has none"
                ))
            })?;
            let backend = ScriptedBackend::from_jsonl(&fs::read_to_string(path)?)?;
            (Box::new(backend), path.display().to_string())
        }
        BackendKind::Http => {
            let backend = HttpBackend::new(
                settings.endpoint.clone(),
                settings.model.clone(),
                &settings.config,
            )
            .map_err(|e| Error::InvalidConfig(e.to_string()))?;
            (Box::new(backend), format!("run {index}"))
        }
    };

    let mut session = inputs.session()?;
    let trace = run_agent(
        &mut session,
        backend.as_ref(),
        &settings.config,
        &settings.guidance_config(),
    );
    let valid = trace.outcome != AgentOutcome::BackendError;
    let result = trace
        .result_constraints()
        .map(|(cc, score)| (cc.clone(), score));
    let dir = config.out.join(format!("run_{index}"));
    let constraints_path = write_run_artifacts(
        &dir,
        &trace.to_json(),
        result.as_ref().map(|(cc, _)| cc).filter(|_| valid),
        &session.log_to_string(),
    )?;
    Ok(RunReport {
        index,
        label,
        outcome: outcome_name(&trace),
        valid,
        final_score: if valid { result.map(|(_, s)| s) } else { None },
        constraints_path,
    })
}

fn outcome_name(trace: &AgentTrace) -> String {
    match trace.outcome {
        AgentOutcome::FinalAnswer => "final_answer".into(),
        AgentOutcome::IterationCap => "iteration_cap".into(),
        AgentOutcome::BackendError => "backend_error".into(),
    }
}

/// Runs the batch, writes `<out>/report.json`, and returns the report.
/// The caller decides the exit code from `best_run`.
pub fn run_batch(config: &RunConfig) -> Result<BatchReport> {
    if config.runs == 0 {
        return Err(Error::InvalidConfig("runs must be >= 1".into()));
    }
    config.sa.validate()?;
    let inputs = load_inputs(
        &config.netlist,
        config.constraints.as_deref(),
        config.layout.as_deref(),
        config.routability.as_deref(),
    )?;
    let initial_score = inputs.session()?.current_score().total;
    let metrics = match &config.metrics {
        Some(path) => Some(parse_metrics(&fs::read_to_string(path)?)?),
        None => None,
    };
    fs::create_dir_all(&config.out)?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.jobs.unwrap_or(0))
        .build()
        .map_err(|e| Error::InvalidConfig(e.to_string()))?;
    let runs: Vec<RunReport> = pool.install(|| {
        (0..config.runs)
            .into_par_iter()
            .map(|index| match config.mode {
                Mode::Sa => run_sa_once(&inputs, config, index),
                Mode::Agent => run_agent_once(&inputs, config, index),
            })
            .collect::<Result<Vec<_>>>()
    })?;

    let mut best_run: Option<usize> = None;
    for report in &runs {
        if !report.valid {
            continue;
        }
        let score = report.final_score.unwrap_or(f64::NEG_INFINITY);
        let better = match best_run {
            None => true,
            Some(current) => score > runs[current].final_score.unwrap_or(f64::NEG_INFINITY),
        };
        if better {
            best_run = Some(report.index);
        }
    }
    let best_score = best_run.and_then(|i| runs[i].final_score);
    let improvement_ratio = best_score.map(|best| {
        let ratio = (best - initial_score) / initial_score.max(1e-9);
        (ratio * 10_000.0).round() / 10_000.0
    });

    let report = BatchReport {
        mode: config.mode,
        initial_score,
        runs,
        best_run,
        best_score,
        improvement_ratio,
        metrics,
    };
    fs::write(
        config.out.join("report.json"),
        serde_json::to_string_pretty(&report)?,
    )?;
    Ok(report)
}

/// Replay verdict; `Fail` pinpoints the first divergent step.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ReplayVerdict {
    Pass {
        calls: usize,
    },
    Fail {
        step: usize,
        field: &'static str,
        expected: String,
        actual: String,
    },
}

impl std::fmt::Display for ReplayVerdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ReplayVerdict::Pass { calls } => write!(f, "PASS ({calls} calls verified)"),
            ReplayVerdict::Fail {
                step,
                field,
                expected,
                actual,
            } => write!(
                f,
                "FAIL at step {step}: {field} diverged\n  recorded: {expected}\n  replayed: {actual}"
            ),
        }
    }
}

/// Re-executes a session log from snapshot 0 and compares every recorded
/// observation and score.
pub fn replay_log(text: &str) -> Result<ReplayVerdict> {
    let mut records = Vec::new();
    for line in text.lines() {
        if line.trim().is_empty() {
            continue;
        }
        records.push(serde_json::from_str::<LogRecord>(line)?);
    }
    let mut iter = records.into_iter();
    let Some(LogRecord::Session {
        netlist,
        layout,
        routability,
        constraints,
    }) = iter.next()
    else {
        return Err(Error::InvalidConfig(
            "session log must start with a session header record".into(),
        ));
    };

    let netlist = parse_netlist(&netlist)?;
    let layout = match layout {
        Some(value) => Some(parse_layout(&value.to_string(), Some(&netlist))?),
        None => None,
    };
    let routability = match routability {
        Some(value) => Some(parse_routability(&value.to_string(), Some(&netlist))?),
        None => None,
    };
    let initial =
        ClusterConstraints::validated(&netlist, &constraints).map_err(Error::InvalidConstraints)?;
    let mut session = Session::new(netlist, initial, layout, routability)?;

    let mut step = 0;
    for record in iter {
        match record {
            LogRecord::Session { .. } => {
                return Err(Error::InvalidConfig(format!(
                    "unexpected second session header at step {step}"
                )))
            }
            LogRecord::Summary { .. } => continue,
            LogRecord::Call {
                call,
                ok,
                observation,
                score_after,
            } => {
                step += 1;
                let replayed = session.invoke(&call);
                if replayed.ok != ok {
                    return Ok(ReplayVerdict::Fail {
                        step,
                        field: "ok",
                        expected: ok.to_string(),
                        actual: replayed.ok.to_string(),
                    });
                }
                if replayed.text != observation {
                    return Ok(ReplayVerdict::Fail {
                        step,
                        field: "observation",
                        expected: observation,
                        actual: replayed.text,
                    });
                }
                let actual_score = session.current_score().total;
                if actual_score != score_after {
                    return Ok(ReplayVerdict::Fail {
                        step,
                        field: "score_after",
                        expected: score_after.to_string(),
                        actual: actual_score.to_string(),
                    });
                }
            }
        }
    }
    Ok(ReplayVerdict::Pass { calls: step })
}

/// One-shot tool invocation against fresh inputs, for debugging.
pub fn invoke_once(inputs: &LoadedInputs, call: &ToolCall) -> Result<(bool, String)> {
    let mut session = inputs.session()?;
    let observation = session.invoke(call);
    Ok((observation.ok, observation.text))
}

/// Renders the score table printed by the score command.
pub fn render_score_table(breakdown: &ScoreBreakdown) -> String {
    let mut out = format!(
        "Cluster score: {}\nNumber of clusters: {}\n",
        crate::prompts::format_score(breakdown.total),
        breakdown.per_cluster.len()
    );
    if breakdown.per_cluster.is_empty() {
        return out;
    }
    let name_width = breakdown
        .per_cluster
        .keys()
        .map(String::len)
        .max()
        .unwrap_or(0)
        .max("cluster".len());
    let _ = writeln!(
        out,
        "{:<name_width$}  {:>7}  {:>15}  {:>12}  {:>12}",
        "cluster", "devices", "diffusion_pairs", "common_gates", "contribution"
    );
    for (name, cs) in &breakdown.per_cluster {
        let _ = writeln!(
            out,
            "{:<name_width$}  {:>7}  {:>15}  {:>12}  {:>12}",
            name,
            cs.devices,
            cs.diffusion_pairs,
            cs.common_gates,
            crate::prompts::format_score(cs.contribution)
        );
    }
    out
}

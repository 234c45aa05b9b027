//! Thin command-line wrapper around the library; see `cellclust --help`.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};

use cellclust::agent::{run_agent, HttpBackend, ScriptedBackend};
use cellclust::batch::{
    invoke_once, load_inputs, render_score_table, replay_log, run_batch, AgentSettings,
    BackendKind, Mode, ReplayVerdict, RunConfig,
};
use cellclust::cluster::cluster_score;
use cellclust::optimize::{run_sa, SAConfig};
use cellclust::prompts::{
    netlist_topology_prompt, physical_layout_prompt, routability_prompt, system_guidance,
    GuidanceConfig,
};
use cellclust::tools::{list_tools, ToolCall};

#[derive(Parser)]
#[command(
    name = "cellclust",
    version,
    about = "Cluster-constraint optimization for standard cells"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct InputArgs {
    /// Netlist document (one device line per MOSFET).
    #[arg(long)]
    netlist: PathBuf,
    /// Cluster constraints JSON; defaults to empty constraints.
    #[arg(long)]
    constraints: Option<PathBuf>,
    /// Layout JSON for diffusion-break weighting and prompts.
    #[arg(long)]
    layout: Option<PathBuf>,
    /// Routability report JSON.
    #[arg(long)]
    routability: Option<PathBuf>,
}

/// Input flags for commands where the netlist itself is optional.
#[derive(Args)]
struct OptionalInputArgs {
    #[arg(long)]
    netlist: Option<PathBuf>,
    #[arg(long)]
    constraints: Option<PathBuf>,
    #[arg(long)]
    layout: Option<PathBuf>,
    #[arg(long)]
    routability: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum BackendArg {
    Http,
    Scripted,
}

#[derive(Subcommand)]
enum Command {
    /// Score cluster constraints against a netlist.
    Score {
        netlist: PathBuf,
        constraints: PathBuf,
        /// Nets to exclude from scoring.
        #[arg(long)]
        exclude: Vec<String>,
    },
    /// Render the prompt documents to a directory, or re-bless the goldens.
    Prompts {
        #[command(flatten)]
        inputs: OptionalInputArgs,
        /// Output directory for the rendered prompts.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Regenerate the golden corpus from the built-in fixtures.
        #[arg(long)]
        bless: bool,
        /// Golden corpus directory (with --bless).
        #[arg(long, default_value = "goldens")]
        goldens: PathBuf,
    },
    /// Run one seeded annealing optimization.
    Sa {
        #[command(flatten)]
        inputs: InputArgs,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        iterations: Option<usize>,
        #[arg(long)]
        k_max: Option<usize>,
        /// SAConfig JSON file; flags override file values.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Run one agent loop.
    Agent {
        #[command(flatten)]
        inputs: InputArgs,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value = "http")]
        backend: BackendArg,
        /// Scripted backend transcript (JSON lines, one response per line).
        #[arg(long)]
        transcript: Option<PathBuf>,
        #[arg(long)]
        endpoint: Option<String>,
        #[arg(long)]
        model: Option<String>,
        #[arg(long)]
        max_iterations: Option<usize>,
    },
    /// Launch N independent runs and select the best valid result.
    Batch {
        /// RunConfig JSON; flags override file values.
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        inputs: OptionalInputArgs,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum)]
        mode: Option<ModeArg>,
        #[arg(long)]
        runs: Option<usize>,
        #[arg(long)]
        jobs: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// Scripted agent transcripts, one per run.
        #[arg(long)]
        transcript: Vec<PathBuf>,
        /// Externally produced layout metrics JSON to attach to the report.
        #[arg(long)]
        metrics: Option<PathBuf>,
    },
    /// Re-execute a session log and verify every recorded observation.
    Replay { log: PathBuf },
    /// List the tools or invoke one against fresh inputs.
    Tools {
        #[arg(long)]
        list: bool,
        #[command(flatten)]
        inputs: OptionalInputArgs,
        /// Tool call JSON: {"tool": "...", "arguments": {...}}.
        #[arg(long)]
        call: Option<String>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Sa,
    Agent,
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}

fn read(path: &PathBuf) -> anyhow::Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    match cli.command {
        Command::Score {
            netlist,
            constraints,
            exclude,
        } => {
            let inputs = load_inputs(&netlist, Some(&constraints), None, None);
            let loaded = match inputs {
                Ok(loaded) => loaded,
                Err(cellclust::Error::InvalidConstraints(report)) => {
                    eprintln!("{report}");
                    return Ok(ExitCode::FAILURE);
                }
                Err(err) => return Err(err.into()),
            };
            let excluded = exclude.into_iter().collect();
            let breakdown = cellclust::cluster::cluster_score_with_exclusions(
                &loaded.netlist,
                &loaded.constraints,
                &excluded,
            )?;
            print!("{}", render_score_table(&breakdown));
            Ok(ExitCode::SUCCESS)
        }

        Command::Prompts {
            inputs,
            out,
            bless,
            goldens,
        } => {
            if bless {
                bless_goldens(&goldens)?;
                println!("blessed golden prompts in {}", goldens.display());
                return Ok(ExitCode::SUCCESS);
            }
            let Some(netlist) = &inputs.netlist else {
                bail!("either --bless or --netlist/--out is required");
            };
            let Some(out) = out else {
                bail!("--out is required without --bless");
            };
            let loaded = load_inputs(
                netlist,
                inputs.constraints.as_deref(),
                inputs.layout.as_deref(),
                inputs.routability.as_deref(),
            )?;
            fs::create_dir_all(&out)?;
            let breakdown = cluster_score(&loaded.netlist, &loaded.constraints)?;
            fs::write(
                out.join("topology_prompt.txt"),
                netlist_topology_prompt(&loaded.netlist, &loaded.constraints, &breakdown),
            )?;
            fs::write(
                out.join("system_prompt.txt"),
                system_guidance(&GuidanceConfig::default()),
            )?;
            let mut written = 2;
            if let Some(layout) = &loaded.layout {
                fs::write(
                    out.join("physical_layout_prompt.txt"),
                    physical_layout_prompt(layout),
                )?;
                written += 1;
            }
            if let Some(report) = &loaded.routability {
                fs::write(
                    out.join("routability_prompt.txt"),
                    routability_prompt(report),
                )?;
                written += 1;
            }
            println!("wrote {written} prompt files to {}", out.display());
            Ok(ExitCode::SUCCESS)
        }

        Command::Sa {
            inputs,
            out,
            seed,
            iterations,
            k_max,
            config,
        } => {
            let mut sa_config: SAConfig = match config {
                Some(path) => serde_json::from_str(&read(&path)?)?,
                None => SAConfig::default(),
            };
            if let Some(seed) = seed {
                sa_config.seed = seed;
            }
            if let Some(iterations) = iterations {
                sa_config.total_iterations = iterations;
            }
            if let Some(k_max) = k_max {
                sa_config.k_max = k_max;
            }
            let loaded = load_inputs(
                &inputs.netlist,
                inputs.constraints.as_deref(),
                inputs.layout.as_deref(),
                inputs.routability.as_deref(),
            )?;
            let run = run_sa(loaded.session()?, &sa_config)?;
            fs::create_dir_all(&out)?;
            fs::write(
                out.join("trace.json"),
                serde_json::to_string_pretty(&run.summary)?,
            )?;
            fs::write(
                out.join("constraints.json"),
                run.best_constraints.to_final_answer_json(),
            )?;
            fs::write(out.join("log.jsonl"), run.session.log_to_string())?;
            println!(
                "best score {:.3} at iteration {} ({} accepted / {} rejected)",
                run.best_score,
                run.summary.best_iteration,
                run.summary.accepted,
                run.summary.rejected
            );
            Ok(ExitCode::SUCCESS)
        }

        Command::Agent {
            inputs,
            out,
            backend,
            transcript,
            endpoint,
            model,
            max_iterations,
        } => {
            let mut settings = AgentSettings::default();
            if let Some(endpoint) = endpoint {
                settings.endpoint = endpoint;
            }
            if let Some(model) = model {
                settings.model = model;
            }
            if let Some(max_iterations) = max_iterations {
                settings.config.max_iterations = max_iterations;
            }
            let loaded = load_inputs(
                &inputs.netlist,
                inputs.constraints.as_deref(),
                inputs.layout.as_deref(),
                inputs.routability.as_deref(),
            )?;
            let mut session = loaded.session()?;
            let guidance = settings.guidance_config();
            let trace = match backend {
                BackendArg::Scripted => {
                    let path =
                        transcript.context("--transcript is required with --backend scripted")?;
                    let scripted = ScriptedBackend::from_jsonl(&read(&path)?)?;
                    run_agent(&mut session, &scripted, &settings.config, &guidance)
                }
                BackendArg::Http => {
                    let http = HttpBackend::new(
                        settings.endpoint.clone(),
                        settings.model.clone(),
                        &settings.config,
                    )?;
                    run_agent(&mut session, &http, &settings.config, &guidance)
                }
            };
            fs::create_dir_all(&out)?;
            fs::write(out.join("trace.json"), trace.to_json())?;
            fs::write(out.join("log.jsonl"), session.log_to_string())?;
            if let Some((constraints, score)) = trace.result_constraints() {
                fs::write(
                    out.join("constraints.json"),
                    constraints.to_final_answer_json(),
                )?;
                println!("outcome {:?}, score {score:.3}", trace.outcome);
            } else {
                println!("outcome {:?}, no result constraints", trace.outcome);
            }
            Ok(ExitCode::SUCCESS)
        }

        Command::Batch {
            config,
            inputs,
            out,
            mode,
            runs,
            jobs,
            seed,
            transcript,
            metrics,
        } => {
            let mut run_config: RunConfig = match config {
                Some(path) => serde_json::from_str(&read(&path)?)?,
                None => {
                    let netlist = inputs
                        .netlist
                        .clone()
                        .context("--config or --netlist is required")?;
                    RunConfig {
                        netlist,
                        constraints: inputs.constraints.clone(),
                        layout: inputs.layout.clone(),
                        routability: inputs.routability.clone(),
                        metrics: None,
                        mode: Mode::Sa,
                        runs: 10,
                        jobs: None,
                        out: out.clone().context("--out is required")?,
                        sa: SAConfig::default(),
                        agent: AgentSettings::default(),
                    }
                }
            };
            if let Some(netlist) = &inputs.netlist {
                run_config.netlist = netlist.clone();
            }
            if inputs.constraints.is_some() {
                run_config.constraints = inputs.constraints.clone();
            }
            if inputs.layout.is_some() {
                run_config.layout = inputs.layout.clone();
            }
            if inputs.routability.is_some() {
                run_config.routability = inputs.routability.clone();
            }
            if let Some(out) = out {
                run_config.out = out;
            }
            if let Some(mode) = mode {
                run_config.mode = match mode {
                    ModeArg::Sa => Mode::Sa,
                    ModeArg::Agent => Mode::Agent,
                };
            }
            if let Some(runs) = runs {
                run_config.runs = runs;
            }
            if let Some(jobs) = jobs {
                run_config.jobs = Some(jobs);
            }
            if let Some(seed) = seed {
                run_config.sa.seed = seed;
            }
            if !transcript.is_empty() {
                run_config.agent.backend = BackendKind::Scripted;
                run_config.agent.transcripts = transcript;
            }
            if metrics.is_some() {
                run_config.metrics = metrics;
            }

            let report = run_batch(&run_config)?;
            match (report.best_run, report.best_score) {
                (Some(index), Some(score)) => {
                    println!(
                        "best run {index} scored {score:.3} (initial {:.3}, improvement {})",
                        report.initial_score,
                        report
                            .improvement_ratio
                            .map(|r| format!("{r:.4}"))
                            .unwrap_or_else(|| "n/a".into())
                    );
                    Ok(ExitCode::SUCCESS)
                }
                _ => {
                    eprintln!(
                        "no valid run; see {}",
                        run_config.out.join("report.json").display()
                    );
                    Ok(ExitCode::FAILURE)
                }
            }
        }

        Command::Replay { log } => {
            let verdict = replay_log(&read(&log)?)?;
            println!("{verdict}");
            match verdict {
                ReplayVerdict::Pass { .. } => Ok(ExitCode::SUCCESS),
                ReplayVerdict::Fail { .. } => Ok(ExitCode::FAILURE),
            }
        }

        Command::Tools { list, inputs, call } => {
            if list {
                for spec in list_tools() {
                    println!(
                        "{}: {}\n  arguments: {}",
                        spec.name, spec.description, spec.arguments
                    );
                }
                return Ok(ExitCode::SUCCESS);
            }
            let netlist = inputs
                .netlist
                .context("--netlist is required to invoke a tool")?;
            let call = call.context("--call is required to invoke a tool")?;
            let call: ToolCall = serde_json::from_str(&call)?;
            let loaded = load_inputs(
                &netlist,
                inputs.constraints.as_deref(),
                inputs.layout.as_deref(),
                inputs.routability.as_deref(),
            )?;
            let (ok, text) = invoke_once(&loaded, &call)?;
            println!("{text}");
            Ok(if ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            })
        }
    }
}

/// Regenerates the golden prompt corpus from the built-in fixtures.
fn bless_goldens(dir: &PathBuf) -> anyhow::Result<()> {
    use cellclust::fixtures;

    fs::create_dir_all(dir)?;
    let nand2 = fixtures::nand2();
    let two = fixtures::nand2_two_clusters();
    let breakdown = cluster_score(&nand2, &two)?;
    fs::write(
        dir.join("nand2_topology.txt"),
        netlist_topology_prompt(&nand2, &two, &breakdown),
    )?;
    fs::write(
        dir.join("toy_layout.txt"),
        physical_layout_prompt(&fixtures::toy_layout()),
    )?;
    fs::write(
        dir.join("seq_routability.txt"),
        routability_prompt(&fixtures::seq_routability()),
    )?;
    fs::write(
        dir.join("system_prompt.txt"),
        system_guidance(&GuidanceConfig::default()),
    )?;
    let session = cellclust::tools::Session::new(nand2, two, None, None)?;
    fs::write(
        dir.join("nand2_initial_prompt.txt"),
        cellclust::agent::build_initial_prompt(&session, &GuidanceConfig::default()),
    )?;
    Ok(())
}

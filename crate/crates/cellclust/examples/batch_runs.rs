//! Launch seeded annealing runs in parallel and aggregate the best result.
//!
//! Run with: cargo run --example batch_runs

use std::fs;

use cellclust::batch::{run_batch, AgentSettings, Mode, RunConfig};
use cellclust::fixtures;
use cellclust::optimize::SAConfig;

fn main() -> anyhow::Result<()> {
    let dir = tempfile::tempdir()?;
    let netlist = dir.path().join("nand2.sp");
    fs::write(&netlist, fixtures::NAND2_DOC)?;

    let config = RunConfig {
        netlist,
        constraints: None,
        layout: None,
        routability: None,
        metrics: None,
        mode: Mode::Sa,
        runs: 5,
        jobs: Some(2),
        out: dir.path().join("out"),
        sa: SAConfig {
            total_iterations: 500,
            seed: 42,
            ..SAConfig::default()
        },
        agent: AgentSettings::default(),
    };

    let report = run_batch(&config)?;
    println!("initial score: {}", report.initial_score);
    for run in &report.runs {
        println!(
            "run {} ({}): outcome={} score={:?}",
            run.index, run.label, run.outcome, run.final_score
        );
    }
    println!(
        "best run {:?} scored {:?} (improvement ratio {:?})",
        report.best_run, report.best_score, report.improvement_ratio
    );
    println!("artifacts under {}", config.out.display());
    Ok(())
}

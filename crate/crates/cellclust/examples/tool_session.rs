//! Drive the four netlist tools by hand and replay the resulting log.
//!
//! Run with: cargo run --example tool_session

use cellclust::batch::{replay_log, ReplayVerdict};
use cellclust::cluster::ClusterConstraints;
use cellclust::fixtures;
use cellclust::tools::{Session, ToolCall};

fn main() -> cellclust::Result<()> {
    let mut session = Session::new(fixtures::nand2(), ClusterConstraints::empty(), None, None)?;

    let calls = [
        ToolCall::GetGroupDevicesFromNets {
            nets: vec!["OUT".into()],
        },
        ToolCall::SavePotentialCluster {
            devices: vec!["mp1".into(), "mp2".into()],
        },
        ToolCall::SavePotentialCluster {
            devices: vec!["mn1".into(), "mn2".into()],
        },
        ToolCall::EvaluateClusters { constraints: None },
        // This probe fails (unknown net) and leaves the session unchanged.
        ToolCall::GetGroupDevicesFromNets {
            nets: vec!["NET042".into()],
        },
        ToolCall::GetBestClusterResult {},
    ];
    for call in &calls {
        let observation = session.invoke(call);
        let tag = if observation.ok { "ok" } else { "error" };
        println!("[{tag}] {}:\n{}\n", call.name(), observation.text);
    }

    println!("history length: {}", session.history().len());
    println!("current score: {}", session.current_score().total);

    let log = session.log_to_string();
    match replay_log(&log)? {
        ReplayVerdict::Pass { calls } => println!("log replays: PASS ({calls} calls)"),
        fail => println!("log replays: {fail}"),
    }
    Ok(())
}

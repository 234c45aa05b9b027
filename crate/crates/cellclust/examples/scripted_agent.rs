//! Run the agent loop against a scripted backend and print the trace.
//!
//! Run with: cargo run --example scripted_agent
//!
//! For a live backend, set CELLCLUST_LLM_API_KEY and use the `agent` CLI
//! subcommand instead; the loop logic is identical.

use cellclust::agent::{build_initial_prompt, run_agent, AgentConfig, ScriptedBackend};
use cellclust::cluster::ClusterConstraints;
use cellclust::fixtures;
use cellclust::prompts::GuidanceConfig;
use cellclust::tools::Session;

fn main() -> cellclust::Result<()> {
    let mut session = Session::new(fixtures::nand2(), ClusterConstraints::empty(), None, None)?;
    let guidance = GuidanceConfig::default();

    println!("===== initial prompt =====");
    println!("{}", build_initial_prompt(&session, &guidance));

    // A canned conversation: explore the output net, save two pairings, ask
    // for the best saved state, then answer with it.
    let backend = ScriptedBackend::new(vec![
        r#"Thought: OUT is the highest-connection net; start there.
{"action": "get_group_devices_from_nets", "action_input": {"nets": ["OUT"]}}"#
            .into(),
        r#"Thought: pair the PMOS pull-up devices so they share VDD diffusion.
{"action": "save_potential_cluster", "action_input": {"devices": ["mp1", "mp2"]}}"#
            .into(),
        r#"Thought: pair the NMOS stack so net1 diffusion is shared.
{"action": "save_potential_cluster", "action_input": {"devices": ["mn1", "mn2"]}}"#
            .into(),
        r#"Thought: recover the best constraints seen so far.
{"action": "get_best_cluster_result", "action_input": {}}"#
            .into(),
        r#"Thought: 1.5 beats the single-cluster 1.25; finish.
{"action": "Final Answer", "action_input": {"cluster_1": ["mp1", "mp2"], "cluster_2": ["mn1", "mn2"]}}"#
            .into(),
    ]);

    let trace = run_agent(&mut session, &backend, &AgentConfig::default(), &guidance);

    println!("===== steps =====");
    for (i, step) in trace.steps.iter().enumerate() {
        println!("step {i}: {}", step.thought);
        if let Some(observation) = &step.observation {
            println!("  -> {}", observation.text.replace('\n', "\n     "));
        }
    }
    println!("outcome: {:?}", trace.outcome);
    println!("final score: {:?}", trace.final_score);
    Ok(())
}

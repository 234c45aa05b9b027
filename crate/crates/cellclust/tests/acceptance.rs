//! Acceptance suite: one test per criterion, each printing a PASS line.
//!
//! Run with: cargo test -p cellclust --test acceptance -- --nocapture

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;
use std::time::Instant;

use cellclust::agent::{run_agent, AgentConfig, AgentOutcome, ScriptedBackend};
use cellclust::batch::{replay_log, ReplayVerdict};
use cellclust::cluster::{
    cluster_score, merge_cluster, validate_constraints, ClusterConstraints, RawConstraints,
};
use cellclust::fixtures;
use cellclust::layout::{parse_layout, parse_routability, serialize_layout, serialize_routability};
use cellclust::netlist::{parse_netlist, serialize_netlist, MosKind, Mosfet, Netlist};
use cellclust::optimize::{lam_target, run_sa, LamController, SAConfig};
use cellclust::prompts::{
    netlist_topology_prompt, physical_layout_prompt, routability_prompt, system_guidance,
    GuidanceConfig,
};
use cellclust::tools::{LogRecord, Session};
use cellclust::Error;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

fn fixture_path(name: &str) -> std::path::PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

fn golden_path(name: &str) -> std::path::PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("goldens")
        .join(name)
}

fn random_netlist(rng: &mut ChaCha12Rng) -> Netlist {
    let device_count = rng.gen_range(1..=12);
    let net_count = rng.gen_range(1..=8);
    let devices = (0..device_count)
        .map(|i| Mosfet {
            name: format!("m{i}"),
            drain: format!("n{}", rng.gen_range(0..net_count)),
            gate: format!("n{}", rng.gen_range(0..net_count)),
            source: format!("n{}", rng.gen_range(0..net_count)),
            kind: if rng.gen_bool(0.5) {
                MosKind::Pmos
            } else {
                MosKind::Nmos
            },
            bulk: None,
        })
        .collect();
    Netlist::new(None, devices).expect("generated names unique")
}

fn random_partition(rng: &mut ChaCha12Rng, netlist: &Netlist) -> Vec<(String, Vec<String>)> {
    let mut groups: Vec<Vec<String>> = vec![Vec::new(); 4];
    for dev in netlist.devices() {
        if rng.gen_bool(0.2) {
            continue; // unclustered
        }
        let g = rng.gen_range(0..4);
        groups[g].push(dev.name.clone());
    }
    groups
        .into_iter()
        .enumerate()
        .filter(|(_, members)| !members.is_empty())
        .map(|(i, members)| (format!("c{i}"), members))
        .collect()
}

/// Independent brute-force evaluation of the cluster score: direct field
/// comparisons over the full net-name universe, no occurrence maps, no
/// net index.
fn oracle_score(netlist: &Netlist, clusters: &[(String, Vec<String>)]) -> f64 {
    let all_nets: BTreeSet<&str> = netlist
        .devices()
        .iter()
        .flat_map(|d| [d.drain.as_str(), d.gate.as_str(), d.source.as_str()])
        .collect();
    let find = |name: &str| {
        netlist
            .devices()
            .iter()
            .find(|d| d.name == name)
            .expect("member exists")
    };
    let mut total = 0.0;
    for (_, members) in clusters {
        let mut diffusion_pairs = 0u64;
        let mut common_gates = 0u64;
        for net in &all_nets {
            let (mut dp, mut dn, mut gp, mut gn) = (0u64, 0u64, 0u64, 0u64);
            for member in members {
                let dev = find(member);
                let pmos = dev.kind == MosKind::Pmos;
                for terminal_net in [&dev.drain, &dev.source] {
                    if terminal_net == net {
                        if pmos {
                            dp += 1;
                        } else {
                            dn += 1;
                        }
                    }
                }
                if &dev.gate == net {
                    if pmos {
                        gp += 1;
                    } else {
                        gn += 1;
                    }
                }
            }
            diffusion_pairs += dp / 2 + dn / 2;
            common_gates += gp.min(gn);
        }
        total += (diffusion_pairs + common_gates) as f64 / members.len() as f64;
    }
    total
}

/// Independent shared-net recount used by the duplicate-resolution check.
fn recount_shared(netlist: &Netlist, device: &str, members: &[String]) -> usize {
    let dev = netlist.device(device).unwrap();
    let dev_nets: BTreeSet<&str> = [&dev.drain, &dev.gate, &dev.source]
        .into_iter()
        .map(String::as_str)
        .collect();
    let mut member_nets: BTreeSet<&str> = BTreeSet::new();
    for member in members {
        if member == device {
            continue;
        }
        let m = netlist.device(member).unwrap();
        member_nets.extend([m.drain.as_str(), m.gate.as_str(), m.source.as_str()]);
    }
    dev_nets.intersection(&member_nets).count()
}

#[test]
fn criterion_1_score_oracle_equivalence() {
    let started = Instant::now();
    let mut rng = ChaCha12Rng::seed_from_u64(0xE91);
    for case in 0..200 {
        let netlist = random_netlist(&mut rng);
        let pairs = random_partition(&mut rng, &netlist);
        let constraints =
            ClusterConstraints::validated(&netlist, &RawConstraints(pairs.clone())).unwrap();
        let implemented = cluster_score(&netlist, &constraints).unwrap().total;
        let expected = oracle_score(&netlist, &pairs);
        assert!(
            (implemented - expected).abs() <= 1e-12,
            "case {case}: implementation {implemented} vs oracle {expected}"
        );
    }
    let elapsed = started.elapsed();
    assert!(elapsed.as_secs_f64() < 5.0, "took {elapsed:?}");
    println!("acceptance 1 (cluster-score oracle equivalence, 200 cases, {elapsed:?}): PASS");
}

#[test]
fn criterion_2_worked_example_exactness() {
    let netlist = fixtures::nand2();
    let one = cluster_score(&netlist, &fixtures::nand2_one_cluster()).unwrap();
    assert_eq!(one.total, 1.25);
    let two = cluster_score(&netlist, &fixtures::nand2_two_clusters()).unwrap();
    assert_eq!(two.total, 1.0);
    println!("acceptance 2 (nand2 worked examples 1.25 / 1.0, exact): PASS");
}

#[test]
fn criterion_3_duplicate_resolution_correctness() {
    let mut rng = ChaCha12Rng::seed_from_u64(0xD0B);
    let mut merges = 0;
    for case in 0..200 {
        let netlist = random_netlist(&mut rng);
        let pairs = random_partition(&mut rng, &netlist);
        let current = ClusterConstraints::validated(&netlist, &RawConstraints(pairs)).unwrap();
        let pick_count = rng.gen_range(1..=4.min(netlist.devices().len()));
        let mut members: Vec<String> = Vec::new();
        while members.len() < pick_count {
            let name = netlist.devices()[rng.gen_range(0..netlist.devices().len())]
                .name
                .clone();
            if !members.contains(&name) {
                members.push(name);
            }
        }

        match merge_cluster(&netlist, &current, &members) {
            Ok(merged) => {
                merges += 1;
                let report = validate_constraints(&netlist, &merged.to_raw());
                assert!(report.valid(), "case {case}: {report}");
                let new_name = merged
                    .clusters()
                    .keys()
                    .find(|k| !current.clusters().contains_key(*k))
                    .expect("merge adds a cluster");
                for device in &members {
                    let in_new = merged.clusters()[new_name].contains(device);
                    match current.cluster_of(device) {
                        None => assert!(in_new, "case {case}: free device {device} must join"),
                        Some(owner) => {
                            let existing =
                                recount_shared(&netlist, device, &current.clusters()[owner]);
                            let incoming = recount_shared(&netlist, device, &members);
                            if incoming > existing {
                                assert!(
                                    in_new,
                                    "case {case}: {device} ({incoming} > {existing}) must move"
                                );
                            } else {
                                assert!(
                                    !in_new && merged.cluster_of(device) == Some(owner),
                                    "case {case}: {device} ({incoming} <= {existing}) must stay"
                                );
                            }
                        }
                    }
                }
            }
            Err(Error::MergeProducedEmptyCluster) => {
                for device in &members {
                    let owner = current
                        .cluster_of(device)
                        .expect("only duplicated devices resolve away");
                    let existing = recount_shared(&netlist, device, &current.clusters()[owner]);
                    let incoming = recount_shared(&netlist, device, &members);
                    assert!(
                        incoming <= existing,
                        "case {case}: {device} should have moved"
                    );
                }
            }
            Err(other) => panic!("case {case}: unexpected error {other}"),
        }
    }
    assert!(merges > 100, "generator too degenerate: {merges} merges");
    println!("acceptance 3 (duplicate resolution, 200 cases, {merges} merges): PASS");
}

#[test]
fn criterion_4_sa_recovery() {
    let started = Instant::now();
    let netlist = fixtures::four_inverter_pairs();

    // Brute-force optimum over all set partitions of the 8 devices.
    let optimum = enumerate_optimum(&netlist);
    assert_eq!(optimum, 2.0, "enumerated optimum");

    // Single-net sampling keeps every move within one inverter pair; larger
    // samples can glue pairs together irrecoverably under the stay-on-tie
    // duplicate rule.
    let mut successes = 0;
    for seed in 0..20 {
        let config = SAConfig {
            total_iterations: 2000,
            k_max: 1,
            seed,
            ..SAConfig::default()
        };
        let session =
            Session::new(netlist.clone(), ClusterConstraints::empty(), None, None).unwrap();
        let run = run_sa(session, &config).unwrap();
        if run.best_score == optimum {
            successes += 1;
        }
    }
    let elapsed = started.elapsed();
    assert!(
        successes >= 19,
        "{successes}/20 runs reached the optimum {optimum}"
    );
    assert!(elapsed.as_secs_f64() < 30.0, "took {elapsed:?}");
    println!("acceptance 4 (SA recovery {successes}/20 runs, {elapsed:?}): PASS");
}

fn enumerate_optimum(netlist: &Netlist) -> f64 {
    fn recurse(
        netlist: &Netlist,
        names: &[String],
        index: usize,
        groups: &mut Vec<Vec<String>>,
        best: &mut f64,
    ) {
        if index == names.len() {
            let pairs: Vec<(String, Vec<String>)> = groups
                .iter()
                .enumerate()
                .map(|(i, members)| (format!("g{i}"), members.clone()))
                .collect();
            let constraints =
                ClusterConstraints::validated(netlist, &RawConstraints(pairs)).unwrap();
            let total = cluster_score(netlist, &constraints).unwrap().total;
            if total > *best {
                *best = total;
            }
            return;
        }
        for g in 0..groups.len() {
            groups[g].push(names[index].clone());
            recurse(netlist, names, index + 1, groups, best);
            groups[g].pop();
        }
        groups.push(vec![names[index].clone()]);
        recurse(netlist, names, index + 1, groups, best);
        groups.pop();
    }

    let names: Vec<String> = netlist.devices().iter().map(|d| d.name.clone()).collect();
    let mut best = 0.0;
    recurse(netlist, &names, 0, &mut Vec::new(), &mut best);
    best
}

#[test]
fn criterion_5_lam_schedule() {
    // Exact endpoints.
    assert_eq!(lam_target(0, 2000).unwrap(), 1.0);
    let total = 2000;
    for iteration in (300..=1300).step_by(50) {
        assert_eq!(lam_target(iteration, total).unwrap(), 0.44);
    }

    // Realized acceptance on a stationary symmetric-delta objective.
    let total = 20_000;
    let mut controller = LamController::new(0.5);
    let mut rng = ChaCha12Rng::seed_from_u64(0x1A3);
    let (plateau_start, plateau_end) = (total * 15 / 100, total * 65 / 100);
    let mut plateau_accepts = 0u32;
    let mut plateau_steps = 0u32;
    for iteration in 0..total {
        let delta: f64 = rng.gen_range(-10.0..10.0);
        let accepted = controller.decide(delta, &mut rng);
        controller.record(accepted, iteration, total).unwrap();
        if (plateau_start..plateau_end).contains(&iteration) {
            plateau_steps += 1;
            if accepted {
                plateau_accepts += 1;
            }
        }
    }
    let rate = f64::from(plateau_accepts) / f64::from(plateau_steps);
    assert!(
        (rate - 0.44).abs() <= 0.08,
        "plateau acceptance rate {rate} outside 0.44 +/- 0.08"
    );
    println!("acceptance 5 (Lam schedule exact endpoints; plateau rate {rate:.3}): PASS");
}

#[test]
fn criterion_6_react_determinism_and_cap() {
    let transcript: Vec<String> = vec![
        r#"Thought: inspect OUT. {"action": "get_group_devices_from_nets", "action_input": {"nets": ["OUT"]}}"#.into(),
        r#"{"action": "save_potential_cluster", "action_input": {"devices": ["mp1", "mp2"]}}"#.into(),
        r#"{"action": "save_potential_cluster", "action_input": {"devices": ["mn1", "mn2"]}}"#.into(),
        r#"{"action": "get_best_cluster_result", "action_input": {}}"#.into(),
        r#"{"action": "Final Answer", "action_input": {"cluster_1": ["mp1", "mp2"], "cluster_2": ["mn1", "mn2"]}}"#.into(),
    ];
    let run_once = || {
        let mut session =
            Session::new(fixtures::nand2(), ClusterConstraints::empty(), None, None).unwrap();
        let backend = ScriptedBackend::new(transcript.clone());
        run_agent(
            &mut session,
            &backend,
            &AgentConfig::default(),
            &GuidanceConfig::default(),
        )
        .to_json()
    };
    let first = run_once();
    let second = run_once();
    assert_eq!(first, second, "serialized traces must be byte-identical");

    // Cap fixture: 20 unparseable responses terminate at exactly step 15.
    let mut session =
        Session::new(fixtures::nand2(), ClusterConstraints::empty(), None, None).unwrap();
    let backend = ScriptedBackend::new(vec!["still thinking...".to_string(); 20]);
    let trace = run_agent(
        &mut session,
        &backend,
        &AgentConfig::default(),
        &GuidanceConfig::default(),
    );
    assert_eq!(trace.outcome, AgentOutcome::IterationCap);
    assert_eq!(trace.steps.len(), 15);
    println!("acceptance 6 (scripted determinism; 15-step cap): PASS");
}

#[test]
fn criterion_7_golden_prompt_fidelity() {
    let netlist = fixtures::nand2();
    let constraints = fixtures::nand2_two_clusters();
    let breakdown = cluster_score(&netlist, &constraints).unwrap();
    let rendered = [
        (
            "nand2_topology.txt",
            netlist_topology_prompt(&netlist, &constraints, &breakdown),
        ),
        (
            "toy_layout.txt",
            physical_layout_prompt(&fixtures::toy_layout()),
        ),
        (
            "seq_routability.txt",
            routability_prompt(&fixtures::seq_routability()),
        ),
        (
            "system_prompt.txt",
            system_guidance(&GuidanceConfig::default()),
        ),
        ("nand2_initial_prompt.txt", {
            let session = Session::new(netlist.clone(), constraints.clone(), None, None).unwrap();
            cellclust::agent::build_initial_prompt(&session, &GuidanceConfig::default())
        }),
    ];
    for (name, actual) in rendered {
        let expected = fs::read_to_string(golden_path(name))
            .unwrap_or_else(|e| panic!("missing golden {name}: {e}"));
        assert_eq!(actual, expected, "golden {name} drifted");
    }
    println!("acceptance 7 (5 golden prompt files byte-equal): PASS");
}

#[test]
fn criterion_8_replay() {
    let log = fs::read_to_string(fixture_path("nand2_session.log.jsonl")).unwrap();
    match replay_log(&log).unwrap() {
        ReplayVerdict::Pass { calls } => assert!(calls > 0),
        fail => panic!("committed fixture must replay: {fail}"),
    }

    // Mutate the last call's recorded score.
    let mut lines: Vec<String> = log.lines().map(str::to_string).collect();
    let mut call_count = 0;
    let mut last_call_line = 0;
    for (i, line) in lines.iter().enumerate() {
        if let Ok(LogRecord::Call { .. }) = serde_json::from_str(line) {
            call_count += 1;
            last_call_line = i;
        }
    }
    let mut record: serde_json::Value = serde_json::from_str(&lines[last_call_line]).unwrap();
    let score = record["score_after"].as_f64().unwrap();
    record["score_after"] = serde_json::json!(score + 0.25);
    lines[last_call_line] = serde_json::to_string(&record).unwrap();
    match replay_log(&lines.join("\n")).unwrap() {
        ReplayVerdict::Fail { step, field, .. } => {
            assert_eq!(step, call_count, "must fail at the mutated step");
            assert_eq!(field, "score_after");
        }
        pass => panic!("tampered score must fail: {pass}"),
    }

    // Mutate the first call's observation text instead.
    let mut lines: Vec<String> = log.lines().map(str::to_string).collect();
    let first_call_line = lines
        .iter()
        .position(|l| matches!(serde_json::from_str(l), Ok(LogRecord::Call { .. })))
        .unwrap();
    let mut record: serde_json::Value = serde_json::from_str(&lines[first_call_line]).unwrap();
    let observation = record["observation"].as_str().unwrap().to_string();
    record["observation"] = serde_json::json!(format!("{observation} [edited]"));
    lines[first_call_line] = serde_json::to_string(&record).unwrap();
    match replay_log(&lines.join("\n")).unwrap() {
        ReplayVerdict::Fail { step, field, .. } => {
            assert_eq!(step, 1);
            assert_eq!(field, "observation");
        }
        pass => panic!("tampered observation must fail: {pass}"),
    }
    println!("acceptance 8 (replay PASS on fixture, FAIL on mutation): PASS");
}

#[test]
fn criterion_9_round_trips() {
    // Netlists: the committed fixture documents plus the synthetic cell.
    for doc in [
        fs::read_to_string(fixture_path("nand2.sp")).unwrap(),
        fs::read_to_string(fixture_path("inv.sp")).unwrap(),
        serialize_netlist(&fixtures::four_inverter_pairs()),
    ] {
        let netlist = parse_netlist(&doc).unwrap();
        assert_eq!(serialize_netlist(&netlist), doc);
        assert_eq!(
            parse_netlist(&serialize_netlist(&netlist)).unwrap(),
            netlist
        );
    }

    // Layout.
    let layout_doc = fs::read_to_string(fixture_path("toy_layout.json")).unwrap();
    let layout = parse_layout(&layout_doc, Some(&fixtures::inverter())).unwrap();
    assert_eq!(
        parse_layout(&serialize_layout(&layout), None).unwrap(),
        layout
    );

    // Routability, including the empty report.
    let report_doc = fs::read_to_string(fixture_path("seq_routability.json")).unwrap();
    let report = parse_routability(&report_doc, None).unwrap();
    assert_eq!(
        parse_routability(&serialize_routability(&report), None).unwrap(),
        report
    );
    let empty = parse_routability(r#"{"unrouted": []}"#, None).unwrap();
    assert_eq!(
        parse_routability(&serialize_routability(&empty), None).unwrap(),
        empty
    );

    // Constraints: blob form and bare form both reparse to the same value.
    let netlist = fixtures::nand2();
    let blob_doc = fs::read_to_string(fixture_path("nand2_one_cluster.json")).unwrap();
    let constraints = ClusterConstraints::from_json_str(&netlist, &blob_doc).unwrap();
    assert_eq!(
        ClusterConstraints::from_json_str(&netlist, &constraints.to_final_answer_json()).unwrap(),
        constraints
    );
    let bare = serde_json::to_string(&constraints).unwrap();
    assert_eq!(
        ClusterConstraints::from_json_str(&netlist, &bare).unwrap(),
        constraints
    );
    println!("acceptance 9 (netlist/layout/routability/constraints round-trips): PASS");
}

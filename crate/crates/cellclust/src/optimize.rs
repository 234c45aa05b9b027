//! Simulated-annealing baseline over cluster merges.
//!
//! Each step samples 1..k nets weighted toward unrouted and
//! diffusion-break-adjacent nets, queries the device group on those nets,
//! and proposes saving it as a potential cluster. The proposal is accepted
//! by the Metropolis rule on the cluster-score delta; the temperature tracks
//! the modified Lam target acceptance-rate curve (1.0 down to a 0.44
//! plateau, then decaying toward zero), so no temperature tuning is needed.
//!
//! Runs are deterministic given the seed: the generator is pinned to
//! ChaCha12 and batch run `i` seeds it with `seed + i`.

use indexmap::IndexMap;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::cluster::{cluster_score, merge_cluster, ClusterConstraints};
use crate::error::{Error, Result};
use crate::layout::{diffusion_break_adjacent_nets, Layout, RoutabilityReport};
use crate::netlist::{devices_on_nets, Netlist};
use crate::tools::{Session, ToolCall};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SAConfig {
    pub total_iterations: usize,
    /// Each step samples 1..=k_max distinct nets.
    pub k_max: usize,
    pub weight_unrouted: f64,
    pub weight_diffusion_break: f64,
    pub initial_temperature: f64,
    pub seed: u64,
}

impl Default for SAConfig {
    fn default() -> Self {
        SAConfig {
            total_iterations: 2000,
            k_max: 3,
            weight_unrouted: 4.0,
            weight_diffusion_break: 2.0,
            initial_temperature: 0.5,
            seed: 0,
        }
    }
}

impl SAConfig {
    pub fn validate(&self) -> Result<()> {
        if self.total_iterations == 0 {
            return Err(Error::InvalidConfig("total_iterations must be > 0".into()));
        }
        if self.k_max == 0 {
            return Err(Error::InvalidConfig("k_max must be >= 1".into()));
        }
        if self.weight_unrouted < 1.0 || self.weight_diffusion_break < 1.0 {
            return Err(Error::InvalidConfig("net weights must be >= 1".into()));
        }
        if self.initial_temperature <= 0.0 {
            return Err(Error::InvalidConfig(
                "initial_temperature must be > 0".into(),
            ));
        }
        Ok(())
    }
}

/// Target acceptance rate of the modified Lam schedule at `iteration` of
/// `total`: 1.0 at the start, 0.44 across the 15%..65% plateau, then an
/// exponential decay toward ~0.001.
pub fn lam_target(iteration: usize, total: usize) -> Result<f64> {
    if iteration >= total {
        return Err(Error::IterationOutOfRange { iteration, total });
    }
    let p = iteration as f64 / total as f64;
    Ok(if p < 0.15 {
        0.44 + 0.56 * 560f64.powf(-p / 0.15)
    } else if p <= 0.65 {
        0.44
    } else {
        0.44 * 440f64.powf(-(p - 0.65) / 0.35)
    })
}

/// Metropolis acceptance plus adaptive temperature control toward the Lam
/// target curve.
#[derive(Debug, Clone)]
pub struct LamController {
    pub temperature: f64,
    pub accept_rate_estimate: f64,
}

impl LamController {
    pub fn new(initial_temperature: f64) -> Self {
        LamController {
            temperature: initial_temperature,
            accept_rate_estimate: 0.5,
        }
    }

    /// Accepts any non-negative delta; otherwise with probability
    /// `exp(delta / temperature)`. Draws from the RNG only for negative
    /// deltas.
    pub fn decide(&self, delta: f64, rng: &mut impl Rng) -> bool {
        delta >= 0.0 || rng.gen::<f64>() < (delta / self.temperature).exp()
    }

    /// Folds the outcome into the 1/500 acceptance-rate estimate and nudges
    /// the temperature by a factor of 0.999 toward the target curve.
    pub fn record(&mut self, accepted: bool, iteration: usize, total: usize) -> Result<()> {
        let hit = if accepted { 1.0 } else { 0.0 };
        self.accept_rate_estimate = (499.0 * self.accept_rate_estimate + hit) / 500.0;
        let target = lam_target(iteration, total)?;
        if self.accept_rate_estimate > target {
            self.temperature *= 0.999;
        } else {
            self.temperature /= 0.999;
        }
        Ok(())
    }
}

/// Per-net sampling weights: unrouted nets first, then nets abutting a
/// diffusion-break dummy, everything else 1.0. Without layout/report input
/// all weights fall back to 1.0.
pub fn net_weights(
    netlist: &Netlist,
    layout: Option<&Layout>,
    routability: Option<&RoutabilityReport>,
    config: &SAConfig,
) -> IndexMap<String, f64> {
    let unrouted = routability
        .map(|r| r.unrouted_net_names())
        .unwrap_or_default();
    let breaks = layout
        .map(diffusion_break_adjacent_nets)
        .unwrap_or_default();
    netlist
        .nets()
        .map(|net| {
            let weight = if unrouted.contains(net) {
                config.weight_unrouted
            } else if breaks.contains(net) {
                config.weight_diffusion_break
            } else {
                1.0
            };
            (net.to_string(), weight)
        })
        .collect()
}

/// Samples `count` distinct nets with probability proportional to weight,
/// without replacement.
pub fn sample_weighted_nets(
    weights: &IndexMap<String, f64>,
    count: usize,
    rng: &mut impl Rng,
) -> Vec<String> {
    let mut available: Vec<usize> = (0..weights.len()).collect();
    let mut picked = Vec::with_capacity(count.min(available.len()));
    while picked.len() < count && !available.is_empty() {
        let total: f64 = available.iter().map(|&i| weights[i]).sum();
        let mut x = rng.gen::<f64>() * total;
        let mut chosen = available.len() - 1;
        for (pos, &i) in available.iter().enumerate() {
            x -= weights[i];
            if x < 0.0 {
                chosen = pos;
                break;
            }
        }
        let index = available.remove(chosen);
        picked.push(weights.get_index(index).expect("index in range").0.clone());
    }
    picked
}

/// Annealer state carried across steps.
#[derive(Debug, Clone)]
pub struct SAState {
    pub session: Session,
    pub iteration: usize,
    pub controller: LamController,
    pub best_score: f64,
    /// Step (1-based; 0 = initial snapshot) that produced the best score.
    pub best_iteration: usize,
    pub accepted: u64,
    pub rejected: u64,
}

impl SAState {
    pub fn new(session: Session, config: &SAConfig) -> Self {
        let best_score = session.best_snapshot().1.score.total;
        SAState {
            session,
            iteration: 0,
            controller: LamController::new(config.initial_temperature),
            best_score,
            best_iteration: 0,
            accepted: 0,
            rejected: 0,
        }
    }

    pub fn temperature(&self) -> f64 {
        self.controller.temperature
    }

    pub fn accept_rate_estimate(&self) -> f64 {
        self.controller.accept_rate_estimate
    }
}

/// What one annealing step sampled and decided.
#[derive(Debug, Clone)]
pub struct StepOutcome {
    pub accepted: bool,
    pub delta: f64,
    pub sampled_nets: Vec<String>,
    pub members: Vec<String>,
}

/// One annealing step: sample nets, query the device group, tentatively
/// merge, and accept or reject. Merge failures count as rejected moves.
pub fn sa_step(
    state: &mut SAState,
    weights: &IndexMap<String, f64>,
    config: &SAConfig,
    rng: &mut impl Rng,
) -> Result<StepOutcome> {
    let group_size = rng.gen_range(1..=config.k_max);
    let sampled_nets = sample_weighted_nets(weights, group_size, rng);
    let members = devices_on_nets(state.session.netlist(), &sampled_nets)?;

    let current_total = state.session.current_score().total;
    let (accepted, delta) =
        match merge_cluster(state.session.netlist(), state.session.current(), &members) {
            Ok(candidate) => {
                let candidate_total = cluster_score(state.session.netlist(), &candidate)?.total;
                let delta = candidate_total - current_total;
                (state.controller.decide(delta, rng), delta)
            }
            Err(_) => (false, 0.0),
        };

    if accepted {
        let observation = state.session.invoke(&ToolCall::SavePotentialCluster {
            devices: members.clone(),
        });
        debug_assert!(observation.ok, "accepted move must save cleanly");
        state.accepted += 1;
        let total = state.session.current_score().total;
        if total > state.best_score {
            state.best_score = total;
            state.best_iteration = state.iteration + 1;
        }
    } else {
        state.rejected += 1;
    }

    state
        .controller
        .record(accepted, state.iteration, config.total_iterations)?;
    state.iteration += 1;

    Ok(StepOutcome {
        accepted,
        delta,
        sampled_nets,
        members,
    })
}

/// Trace summary of one annealing run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SaSummary {
    pub iterations: usize,
    pub accepted: u64,
    pub rejected: u64,
    pub best_score: f64,
    pub best_iteration: usize,
    pub seed: u64,
}

/// A finished run: the session (with its log), the best constraints, and
/// the summary.
#[derive(Debug, Clone)]
pub struct SaRun {
    pub session: Session,
    pub best_constraints: ClusterConstraints,
    pub best_score: f64,
    pub summary: SaSummary,
}

/// Runs the full schedule and restores the best snapshot at the end.
pub fn run_sa(session: Session, config: &SAConfig) -> Result<SaRun> {
    config.validate()?;
    let weights = net_weights(
        session.netlist(),
        session.layout(),
        session.routability(),
        config,
    );
    let mut rng = ChaCha12Rng::seed_from_u64(config.seed);
    let mut state = SAState::new(session, config);

    for _ in 0..config.total_iterations {
        sa_step(&mut state, &weights, config, &mut rng)?;
    }

    let observation = state.session.invoke(&ToolCall::GetBestClusterResult {});
    debug_assert!(observation.ok);
    state.session.append_summary(state.rejected);

    let best_constraints = state.session.current().clone();
    let best_score = state.session.current_score().total;
    let summary = SaSummary {
        iterations: state.iteration,
        accepted: state.accepted,
        rejected: state.rejected,
        best_score,
        best_iteration: state.best_iteration,
        seed: config.seed,
    };
    Ok(SaRun {
        session: state.session,
        best_constraints,
        best_score,
        summary,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::layout::parse_layout;

    fn session(netlist: Netlist) -> Session {
        Session::new(netlist, ClusterConstraints::empty(), None, None).unwrap()
    }

    #[test]
    fn lam_target_endpoints() {
        assert_eq!(lam_target(0, 2000).unwrap(), 1.0);
        for iteration in [300, 800, 1000, 1300] {
            assert_eq!(lam_target(iteration, 2000).unwrap(), 0.44);
        }
        let tail = lam_target(99_999, 100_000).unwrap();
        assert!((tail - 0.001).abs() < 1e-4, "tail target {tail}");
        assert!(lam_target(2000, 2000).is_err());
    }

    #[test]
    fn metropolis_acceptance_probability() {
        let controller = LamController::new(0.5);
        let mut rng = ChaCha12Rng::seed_from_u64(17);
        assert!(
            controller.decide(0.25, &mut rng),
            "non-negative always accepted"
        );
        assert!(controller.decide(0.0, &mut rng));
        // delta = -0.5 at T = 0.5 accepts with probability e^-1.
        let accepted = (0..20_000)
            .filter(|_| controller.decide(-0.5, &mut rng))
            .count();
        let rate = accepted as f64 / 20_000.0;
        assert!((rate - (-1.0f64).exp()).abs() < 0.01, "rate {rate}");
    }

    #[test]
    fn temperature_moves_toward_the_target() {
        // Estimate above the plateau target cools; below it heats.
        let mut controller = LamController::new(0.5);
        controller.accept_rate_estimate = 0.6;
        controller.record(true, 1000, 2000).unwrap();
        assert!(controller.temperature < 0.5);

        let mut controller = LamController::new(0.5);
        controller.accept_rate_estimate = 0.2;
        controller.record(false, 1000, 2000).unwrap();
        assert!(controller.temperature > 0.5);
    }

    #[test]
    fn default_weights_are_all_one() {
        let n = fixtures::nand2();
        let weights = net_weights(&n, None, None, &SAConfig::default());
        assert_eq!(weights.len(), 6);
        assert!(weights.values().all(|&w| w == 1.0));
    }

    #[test]
    fn unrouted_outranks_diffusion_break() {
        let n = fixtures::inverter();
        // Sources at x=1 sit next to the dummy column at x=0.
        let doc = r#"{"cell": "inv", "columns": 3, "rows": 2, "sites": [
            {"x": 1, "y": 0, "net": "VDD", "device": "mp1", "terminal": "s"},
            {"x": 2, "y": 0, "net": "A", "device": "mp1", "terminal": "g"},
            {"x": 1, "y": 1, "net": "VSS", "device": "mn1", "terminal": "s"},
            {"x": 2, "y": 1, "net": "A", "device": "mn1", "terminal": "g"}]}"#;
        let layout = parse_layout(doc, Some(&n)).unwrap();
        assert_eq!(
            diffusion_break_adjacent_nets(&layout)
                .into_iter()
                .collect::<Vec<_>>(),
            vec!["VDD".to_string(), "VSS".to_string()]
        );
        let report = crate::layout::parse_routability(
            r#"{"unrouted": [{"net": "VDD", "terminal_x_pairs": [[0, 1]], "region_devices": []}]}"#,
            Some(&n),
        )
        .unwrap();
        let cfg = SAConfig::default();
        let weights = net_weights(&n, Some(&layout), Some(&report), &cfg);
        assert_eq!(weights["VDD"], 4.0, "unrouted takes precedence");
        assert_eq!(weights["VSS"], 2.0);
        assert_eq!(weights["OUT"], 1.0);
        assert_eq!(weights["A"], 1.0);
    }

    #[test]
    fn uniform_weights_sample_uniformly() {
        // Chi-square over 10^4 single-net draws on 5 equally weighted nets;
        // critical value for df=4 at p=0.01 is 13.2767.
        let weights: IndexMap<String, f64> = (0..5).map(|i| (format!("n{i}"), 1.0)).collect();
        let mut rng = ChaCha12Rng::seed_from_u64(42);
        let mut counts = [0u32; 5];
        for _ in 0..10_000 {
            let picked = sample_weighted_nets(&weights, 1, &mut rng);
            let idx = weights.get_index_of(&picked[0]).unwrap();
            counts[idx] += 1;
        }
        let expected = 2000.0;
        let chi2: f64 = counts
            .iter()
            .map(|&c| (c as f64 - expected).powi(2) / expected)
            .sum();
        assert!(chi2 < 13.2767, "chi2 = {chi2}, counts = {counts:?}");
    }

    #[test]
    fn sampling_respects_weights() {
        let mut weights: IndexMap<String, f64> = IndexMap::new();
        weights.insert("hot".into(), 9.0);
        weights.insert("cold".into(), 1.0);
        let mut rng = ChaCha12Rng::seed_from_u64(7);
        let mut hot = 0;
        for _ in 0..10_000 {
            if sample_weighted_nets(&weights, 1, &mut rng)[0] == "hot" {
                hot += 1;
            }
        }
        assert!((8700..9300).contains(&hot), "hot drawn {hot} times");
    }

    #[test]
    fn sample_never_repeats_and_caps_at_net_count() {
        let weights: IndexMap<String, f64> = (0..3).map(|i| (format!("n{i}"), 1.0)).collect();
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        let picked = sample_weighted_nets(&weights, 10, &mut rng);
        assert_eq!(picked.len(), 3);
        let mut sorted = picked.clone();
        sorted.sort();
        sorted.dedup();
        assert_eq!(sorted.len(), 3);
    }

    #[test]
    fn same_seed_gives_identical_runs() {
        let cfg = SAConfig {
            total_iterations: 300,
            seed: 11,
            ..SAConfig::default()
        };
        let a = run_sa(session(fixtures::nand2()), &cfg).unwrap();
        let b = run_sa(session(fixtures::nand2()), &cfg).unwrap();
        assert_eq!(a.summary, b.summary);
        assert_eq!(a.best_constraints, b.best_constraints);
        assert_eq!(a.session.log_to_string(), b.session.log_to_string());
    }

    #[test]
    fn best_score_never_decreases_and_temperature_stays_positive() {
        let cfg = SAConfig {
            total_iterations: 400,
            seed: 5,
            ..SAConfig::default()
        };
        let netlist = fixtures::nand2();
        let weights = net_weights(&netlist, None, None, &cfg);
        let mut rng = ChaCha12Rng::seed_from_u64(cfg.seed);
        let mut state = SAState::new(session(netlist), &cfg);
        let mut last_best = state.best_score;
        for _ in 0..cfg.total_iterations {
            sa_step(&mut state, &weights, &cfg, &mut rng).unwrap();
            assert!(state.best_score >= last_best);
            assert!(state.temperature() > 0.0);
            assert!((0.0..=1.0).contains(&state.accept_rate_estimate()));
            last_best = state.best_score;
        }
        assert!(state.best_score >= 1.0, "nand2 should reach at least 1.0");
    }

    #[test]
    fn accepted_moves_match_independent_merge() {
        let cfg = SAConfig {
            total_iterations: 200,
            seed: 23,
            ..SAConfig::default()
        };
        let netlist = fixtures::nand2();
        let weights = net_weights(&netlist, None, None, &cfg);
        let mut rng = ChaCha12Rng::seed_from_u64(cfg.seed);
        let mut state = SAState::new(session(netlist.clone()), &cfg);
        for _ in 0..cfg.total_iterations {
            let before = state.session.current().clone();
            let outcome = sa_step(&mut state, &weights, &cfg, &mut rng).unwrap();
            if outcome.accepted {
                let expected = merge_cluster(&netlist, &before, &outcome.members).unwrap();
                assert_eq!(state.session.current(), &expected);
            } else {
                assert_eq!(state.session.current(), &before);
            }
        }
    }

    #[test]
    fn recovers_four_inverter_pairs_with_single_net_moves() {
        let cfg = SAConfig {
            total_iterations: 2000,
            k_max: 1,
            seed: 1,
            ..SAConfig::default()
        };
        let run = run_sa(session(fixtures::four_inverter_pairs()), &cfg).unwrap();
        assert_eq!(run.best_score, 2.0);
        assert_eq!(run.best_constraints.len(), 4);
    }
}

//! Acceptance suite. Runs without the libtest harness and prints one
//! PASS/FAIL line per criterion; exits non-zero if any fails.

use std::collections::{BTreeMap, HashSet};
use std::time::Instant;

use offload_sim::delay::*;
use offload_sim::icl::{Candidate, Condition, ExperiencePool};
use offload_sim::policies::PolicyKind;
use offload_sim::radio::{allocate_proportional_fair, link_capacity, RadioConfig, UserChannel};
use offload_sim::runner::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = (bool, String);
type Criterion = (&'static str, fn() -> Outcome);

fn formula_fidelity() -> Outcome {
    let task = TaskRequest { user_id: 0, task_id: 0, task_type: TaskType::Regular, n_tokens: 1000, quality_req: 0.0 };
    let edge = LlmProfile::new("edge", 0.23, 1.0 / 75.0, 75.0, Placement::Edge).unwrap();
    let cloud = LlmProfile::new("cloud", 0.42, 1.0 / 32.0, 90.0, Placement::Cloud).unwrap();
    let ge = generation_time(&task, &edge);
    let gc = generation_time(&task, &cloud);
    let tx = transmission_delay(&task, 1e6, false, &DelayConfig::default()).unwrap();
    let ok = (ge - (0.23 + 1000.0 / 75.0)).abs() <= 1e-9
        && format!("{ge:.4}") == "13.5633"
        && (gc - 31.67).abs() <= 1e-2
        && tx == 0.032;
    (ok, format!("edge {ge:.10} s, cloud {gc:.6} s, transmission {tx} s"))
}

/// Straight from the capacity formula: sum over RBs of b*log2(1 + p*g / (I + b*N0)).
fn reference_capacity(bandwidth: f64, p_dbm: f64, n0_dbm_hz: f64, interference: f64, gains: &[f64]) -> f64 {
    let p = 10f64.powf(p_dbm / 10.0) / 1000.0;
    let n0 = 10f64.powf(n0_dbm_hz / 10.0) / 1000.0;
    gains
        .iter()
        .map(|g| bandwidth * (1.0 + p * g / (interference + bandwidth * n0)).ln() / std::f64::consts::LN_2)
        .sum()
}

fn capacity_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let rbs = rng.random_range(1..=100);
        let cfg = RadioConfig {
            rb_count: rbs,
            rb_bandwidth_hz: rng.random_range(15e3..1e6),
            bs_tx_power_dbm_per_rb: rng.random_range(0.0..46.0),
            noise_density_dbm_hz: rng.random_range(-180.0..-150.0),
            intercell_interference_w: if rng.random_bool(0.5) { 0.0 } else { rng.random_range(1e-16..1e-10) },
            ..RadioConfig::default()
        };
        let gains: Vec<f64> = (0..rbs).map(|_| 10f64.powf(-rng.random_range(60.0..160.0) / 10.0)).collect();
        let mut users = vec![UserChannel { gain_per_rb: gains.clone(), ..UserChannel::flat(0, 100.0, 0.0, rbs) }];
        let alloc = allocate_proportional_fair(&mut users, &cfg).unwrap();
        let got = link_capacity(&users[0], &alloc, &cfg);
        let want = reference_capacity(
            cfg.rb_bandwidth_hz,
            cfg.bs_tx_power_dbm_per_rb,
            cfg.noise_density_dbm_hz,
            cfg.intercell_interference_w,
            &gains,
        );
        worst = worst.max((got - want).abs() / want.abs());
    }
    (worst <= 1e-12, format!("100 configs, worst relative error {worst:.3e}"))
}

fn pool_optimality() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut pool = ExperiencePool::new();
    let mut best: BTreeMap<Condition, f64> = BTreeMap::new();
    let mut keys = HashSet::new();
    let mut max_size_ok = true;
    for _ in 0..100_000 {
        let condition = Condition {
            task_type: if rng.random_bool(0.5) { TaskType::QualityPreferred } else { TaskType::Regular },
            token_bin: rng.random_range(0..50),
        };
        let decision = if rng.random_bool(0.5) { Decision::Offload } else { Decision::Local };
        let reward = rng.random_range(-80.0..30.0);
        pool.replay_update(Candidate { condition, decision, reward });
        let e = best.entry(condition).or_insert(f64::NEG_INFINITY);
        *e = e.max(reward);
        keys.insert(condition);
        max_size_ok &= pool.len() <= keys.len();
    }
    let matches = best.iter().all(|(k, r)| pool.get(k).is_some_and(|e| e.reward == *r));
    (
        matches && max_size_ok && pool.len() == best.len(),
        format!("1e5 candidates, {} keys, running max matched: {matches}", pool.len()),
    )
}

fn with_kind(kind: PolicyKind, seed: u64) -> ExperimentConfig {
    let mut cfg = ExperimentConfig { seed, ..ExperimentConfig::default() };
    cfg.policy.kind = kind;
    cfg
}

fn bruteforce_success() -> Outcome {
    let m = run_episode(&with_kind(PolicyKind::Bruteforce, ExperimentConfig::default().seed)).unwrap();
    let quality = m.records.iter().filter(|r| r.task_type == TaskType::QualityPreferred).count();
    let rate = m.success_rate();
    (rate == 1.0 && quality > 0, format!("success rate {rate} over {quality} quality-preferred tasks"))
}

fn final_mean(kind: PolicyKind, seed: u64) -> f64 {
    let cfg = with_kind(kind, seed);
    run_episode(&cfg).unwrap().final_window_mean_reward(cfg.final_window_fraction)
}

fn icl_convergence() -> Outcome {
    let seed = ExperimentConfig::default().seed;
    let icl = final_mean(PolicyKind::Icl, seed);
    let bf = final_mean(PolicyKind::Bruteforce, seed);
    let ne = final_mean(PolicyKind::NoExploration, seed);
    let gap = (icl - bf).abs() / bf.abs();
    (
        gap <= 0.05 && icl > ne,
        format!("final-window reward icl {icl:.4}, bruteforce {bf:.4} (gap {:.2}%), no-exploration {ne:.4}", 100.0 * gap),
    )
}

fn ablation() -> Outcome {
    let base = ExperimentConfig::default().seed;
    let (mut replay_wins, mut explore_wins) = (0, 0);
    for seed in base..base + 5 {
        let icl = final_mean(PolicyKind::Icl, seed);
        replay_wins += usize::from(icl >= final_mean(PolicyKind::LatestExperience, seed));
        explore_wins += usize::from(icl >= final_mean(PolicyKind::NoExploration, seed));
    }
    (
        replay_wins >= 4 && explore_wins >= 4,
        format!("prioritized >= latest in {replay_wins}/5 seeds, eps>0 >= eps=0 in {explore_wins}/5 seeds"),
    )
}

fn llm_combination_ordering() -> Outcome {
    let mut base = ExperimentConfig { replications: 1, ..ExperimentConfig::default() };
    base.policy.kind = PolicyKind::Icl;
    let sizes = ["250", "500", "1000", "1500", "2000"];
    let mean_delay = |pair: &str, size: &str| {
        let cfg = SweepAxis::PromptTokenMean.apply(&base, size).unwrap();
        run_sweep(&cfg, SweepAxis::ProfilePair, &[pair.to_string()]).unwrap()[0].mean_delay_s
    };
    let mut ok = true;
    let mut detail = Vec::new();
    for size in sizes {
        let a = mean_delay("Gemma-7B+Gemini-1.5-Pro", size);
        let b = mean_delay("Llama2-7B+Llama2-70B", size);
        ok &= a < b;
        detail.push(format!("{size}: {a:.4} vs {b:.4}"));
    }
    (ok, format!("mean delay Gemma+Gemini vs Llama2 pair by prompt size: {}", detail.join(", ")))
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig::default();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    write_metrics(&run_episode(&cfg).unwrap(), &cfg, &a).unwrap();
    write_metrics(&run_episode(&cfg).unwrap(), &cfg, &b).unwrap();
    let (x, y) = (std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    (x == y && !x.is_empty(), format!("two runs, {} bytes each, identical: {}", x.len(), x == y))
}

fn main() {
    let criteria: [Criterion; 8] = [
        ("formula fidelity", formula_fidelity),
        ("capacity oracle equivalence", capacity_oracle),
        ("replay-pool optimality", pool_optimality),
        ("constraint satisfaction at optimum", bruteforce_success),
        ("ICL convergence", icl_convergence),
        ("replay/exploration ablation", ablation),
        ("LLM-combination ordering", llm_combination_ordering),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let start = Instant::now();
        let (ok, detail) = check();
        failed += usize::from(!ok);
        println!(
            "{} {name}: {detail} [{:.2} s]",
            if ok { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64()
        );
    }
    println!("acceptance: {}/{} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}

//! Acceptance criteria. Each test prints one `[PASS]`/`[FAIL]` line before
//! asserting, so `cargo test --test acceptance -- --nocapture` gives a
//! summary. The trained model is built once and shared.

mod common;

use std::sync::{Arc, OnceLock};
use std::time::{Duration, Instant};

use common::*;
use frontier_lab::astar::shortest_path;
use frontier_lab::bench::{compute_mu, compute_s, compute_sigma, run_benchmark, BenchmarkConfig, Variant};
use frontier_lab::env::{generate_map, scan, start_cell, Sensor, SensorConfig};
use frontier_lab::frontier::sobel_frontiers;
use frontier_lab::heuristics::{default_filters, h4_filters, HeuristicConfig};
use frontier_lab::nn::{
    encode_weights, label_variance, train, value_net_layers, Dataset, ModelWeights, TrainConfig, STATE_LEN,
};
use frontier_lab::oracle::{generate_dataset, oracle_label, DatasetManifest, DatasetOptions, OracleConfig};
use frontier_lab::planner::{Planner, PlannerConfig, TraceFile};
use frontier_lab::rng::derive_seed;
use frontier_lab::{Cell, Mask};
use rand::Rng;

fn report(id: &str, pass: bool, detail: String) {
    println!("[{}] criterion {id}: {detail}", if pass { "PASS" } else { "FAIL" });
}

const DATASET_ROOT: u64 = 0x0DA7_A5E7;
const DATASET_MAPS: u64 = 10;
const RECORD_EVERY: usize = 16;

struct Trained {
    model: Arc<ModelWeights>,
    /// Final validation MSE and validation label variance for T = 1, 2, 3.
    val_mse: [f64; 3],
    val_var: [f64; 3],
    records: usize,
    elapsed: Duration,
}

/// Ten 50×50 maps, baseline rollouts, oracle labels for T = 1..3 from one
/// tree per state, one network per horizon.
fn trained() -> &'static Trained {
    static CELL: OnceLock<Trained> = OnceLock::new();
    CELL.get_or_init(|| {
        let t0 = Instant::now();
        let maps: Vec<_> = (0..DATASET_MAPS)
            .map(|i| generate_map(50, 0.15, derive_seed(DATASET_ROOT, i)).unwrap())
            .collect();
        let options = DatasetOptions {
            record_every: RECORD_EVERY,
            max_records_per_map: None,
        };
        let generated = generate_dataset(
            &maps,
            &PlannerConfig::baseline(),
            &OracleConfig::with_lookahead(3),
            &options,
            DATASET_ROOT,
        )
        .unwrap();
        let mut val_mse = [0.0; 3];
        let mut val_var = [0.0; 3];
        let mut model = None;
        for (h, ds) in generated.by_horizon.iter().enumerate() {
            let out = train(ds, &TrainConfig::default()).unwrap();
            let split = ds.validation_split();
            val_mse[h] = out.final_val_mse();
            val_var[h] = label_variance(ds, split..ds.len());
            if h == 0 {
                model = Some(Arc::new(out.weights));
            }
        }
        Trained {
            model: model.unwrap(),
            val_mse,
            val_var,
            records: generated.dataset.len(),
            elapsed: t0.elapsed(),
        }
    })
}

fn heuristic(alpha: f64, beta: f64, gamma: f64, delta: f64) -> HeuristicConfig {
    HeuristicConfig {
        alpha,
        beta,
        gamma,
        delta,
    }
}

fn suite(seed: u64, variants: Vec<Variant>) -> BenchmarkConfig {
    BenchmarkConfig {
        suite_seed: seed,
        ..BenchmarkConfig::desk(vec![50], variants)
    }
}

#[test]
fn criterion_1_oracle_equivalence() {
    let t0 = Instant::now();
    let mut rng = rng(1);

    let mut frontier_mismatch = 0;
    for _ in 0..200 {
        let mask = random_mask(20, &mut rng);
        let view = random_map(20, rng.gen_range(0.0..0.3), &mut rng);
        frontier_mismatch += (sobel_frontiers(&mask, &view).unwrap() != ref_frontiers(&mask, &view)) as usize;
    }

    let mut path_mismatch = 0;
    let mut goals = 0;
    for _ in 0..100 {
        let view = random_map(20, rng.gen_range(0.05..0.35), &mut rng);
        let Some(start) = view.iter_cells().filter(|&c| view.is_free(c)).nth(rng.gen_range(0..20)) else {
            continue;
        };
        let dist = ref_bfs(&view, start);
        for goal in view.iter_cells() {
            let Some(d) = dist[view.index(goal)] else { continue };
            goals += 1;
            let len = shortest_path(&view, start, goal).unwrap().map(|p| p.len());
            path_mismatch += (len != Some(d)) as usize;
        }
    }

    let filters = default_filters();
    let mut filter_mismatch = 0;
    for _ in 0..500 {
        let mask = random_mask(20, &mut rng);
        let fp = Cell::new(rng.gen_range(0..20), rng.gen_range(0..20));
        let expected = filters.iter().any(|f| ref_window_count(&mask, fp, f.size) >= f.threshold) as u8;
        let counts_ok = filters.iter().all(|f| f.response(&mask, fp) == ref_window_count(&mask, fp, f.size));
        filter_mismatch += (!counts_ok || h4_filters(&mask, fp, &filters) != expected) as usize;
    }

    let sensor = Sensor::new(SensorConfig::default());
    let exhaustive = OracleConfig {
        branching: vec![15 * 15],
        ..OracleConfig::with_lookahead(1)
    };
    let mut oracle_mismatch = 0;
    for i in 0..20 {
        let truth = generate_map(15, rng.gen_range(0.05..0.3), 500 + i).unwrap();
        let start = start_cell(&truth).unwrap();
        let mut mask = scan(&truth, &Mask::new(15), start, &SensorConfig::default());
        // Explore a few extra discs so the state is not just the opening scan.
        for _ in 0..rng.gen_range(0..4) {
            let c = Cell::new(rng.gen_range(0..15), rng.gen_range(0..15));
            mask = scan(&truth, &mask, c, &SensorConfig::default());
        }
        let label = oracle_label(&truth, &mask, start, &exhaustive, &sensor).unwrap();
        let reference = ref_one_step_return(&truth, &mask, start, 3);
        oracle_mismatch += (label != reference) as usize;
        let sampled = oracle_label(&truth, &mask, start, &OracleConfig::with_lookahead(1), &sensor).unwrap();
        oracle_mismatch += (sampled > reference) as usize;
    }

    let elapsed = t0.elapsed();
    let pass = frontier_mismatch + path_mismatch + filter_mismatch + oracle_mismatch == 0
        && elapsed < Duration::from_secs(120);
    report(
        "1",
        pass,
        format!(
            "mismatches: frontiers {frontier_mismatch}/200, paths {path_mismatch}/{goals}, filters {filter_mismatch}/500, \
             oracle {oracle_mismatch}/20; {elapsed:.1?}"
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_2_gradient_check() {
    let mut rng = rng(2);
    let weights = ModelWeights::init(value_net_layers(), 1.0, 3).unwrap();
    let input: Vec<f64> = (0..STATE_LEN).map(|_| rng.gen_range(0.0..1.0)).collect();
    let acts = weights.activations(&input);
    let mut grad = vec![0.0; weights.params().len()];
    weights.backward(&input, &acts, 1.0, &mut grad);

    let step = 1e-5;
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    for (start, end) in weights.layer_ranges() {
        for _ in 0..10 {
            let p = rng.gen_range(start..end);
            let mut plus = weights.clone();
            plus.params_mut()[p] += step;
            let mut minus = weights.clone();
            minus.params_mut()[p] -= step;
            let numeric = (plus.output(&input) - minus.output(&input)) / (2.0 * step);
            let analytic = grad[p];
            let scale = analytic.abs().max(numeric.abs());
            let rel = if scale < 1e-10 { 0.0 } else { (analytic - numeric).abs() / scale };
            worst = worst.max(rel);
            checked += 1;
        }
    }
    let pass = worst < 1e-4;
    report("2", pass, format!("{checked} parameters over 5 layers, worst relative error {worst:.2e}"));
    assert!(pass);
}

#[test]
fn criterion_3_training_sanity() {
    let t = trained();
    let beats_mean = t.val_mse[0] < t.val_var[0];
    let ordered = t.val_mse[0] < t.val_mse[1] && t.val_mse[1] < t.val_mse[2];
    let in_time = t.elapsed < Duration::from_secs(20 * 60);
    let pass = beats_mean && ordered && in_time;
    report(
        "3",
        pass,
        format!(
            "{} records; val MSE T1/T2/T3 = {:.1}/{:.1}/{:.1}, label variance {:.1}/{:.1}/{:.1}; {:.1?}",
            t.records, t.val_mse[0], t.val_mse[1], t.val_mse[2], t.val_var[0], t.val_var[1], t.val_var[2], t.elapsed
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_4_improvement_trend() {
    let model = trained().model.clone();
    let t0 = Instant::now();
    let r = run_benchmark(&suite(
        0,
        vec![
            Variant::new("baseline", PlannerConfig::baseline()),
            Variant::new("h3", PlannerConfig::with_model(heuristic(1.0, 12.0, 1.0, 0.0), model.clone())),
            Variant::new("full", PlannerConfig::with_model(heuristic(1.0, 12.0, 1.0, 20.0), model)),
        ],
    ))
    .unwrap();
    let elapsed = t0.elapsed();
    let (s_h3, s_full) = (r.mean_s("h3"), r.mean_s("full"));
    let pass = s_h3 > 0.0 && s_full >= 2.0 && s_full > s_h3 && elapsed < Duration::from_secs(15 * 60);
    report(
        "4",
        pass,
        format!(
            "mu baseline {:.1}, h3 {:.1}, full {:.1}; S(h3) = {s_h3:.2}%, S(full) = {s_full:.2}%; {elapsed:.1?}",
            r.result("baseline", 50).unwrap().mu,
            r.result("h3", 50).unwrap().mu,
            r.result("full", 50).unwrap().mu
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_5_oracle_upper_bound() {
    let model = trained().model.clone();
    let mut s_model = Vec::new();
    let mut s_oracle = Vec::new();
    for seed in 0..3 {
        let r = run_benchmark(&suite(
            seed,
            vec![
                Variant::new("baseline", PlannerConfig::baseline()),
                Variant::new("model", PlannerConfig::with_model(heuristic(1.0, 12.0, 1.0, 0.0), model.clone())),
                Variant::new(
                    "oracle",
                    PlannerConfig::with_oracle(heuristic(1.0, 12.0, 1.0, 0.0), OracleConfig::with_lookahead(1)),
                ),
            ],
        ))
        .unwrap();
        s_model.push(r.mean_s("model"));
        s_oracle.push(r.mean_s("oracle"));
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let pass = mean(&s_oracle) >= mean(&s_model);
    report(
        "5",
        pass,
        format!(
            "3 suites: S(oracle) = {:.2}% {:.2?}, S(model) = {:.2}% {:.2?}",
            mean(&s_oracle),
            s_oracle,
            mean(&s_model),
            s_model
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_6_determinism() {
    let dir = tempfile::tempdir().unwrap();

    // Episode: rerun from the trace header alone.
    let truth = generate_map(30, 0.15, 61).unwrap();
    let cfg = PlannerConfig {
        heuristic: heuristic(1.0, 12.0, 0.0, 20.0),
        seed: 62,
        ..PlannerConfig::baseline()
    };
    let ep = Planner::new(cfg.clone()).unwrap().run_episode(&truth).unwrap();
    let first = dir.path().join("a.jsonl");
    TraceFile::from_episode(&truth, &cfg, &ep).write(&first).unwrap();
    let header = TraceFile::read(&first).unwrap().header;
    let rebuilt = PlannerConfig {
        heuristic: header.heuristic,
        sampler: header.sampler,
        sensor: header.sensor,
        filters: header.filters,
        state_d: header.state_d,
        seed: header.seed,
        step_budget: Some(header.step_budget),
        ..PlannerConfig::baseline()
    };
    let again = Planner::new(rebuilt.clone()).unwrap().run_episode(&truth).unwrap();
    let second = dir.path().join("b.jsonl");
    TraceFile::from_episode(&truth, &rebuilt, &again).write(&second).unwrap();
    let episode_same = std::fs::read(&first).unwrap() == std::fs::read(&second).unwrap();

    // Dataset: rerun from the manifest.
    let maps: Vec<_> = (0..2).map(|i| generate_map(20, 0.15, 70 + i).unwrap()).collect();
    let options = DatasetOptions {
        record_every: 2,
        max_records_per_map: Some(40),
    };
    let g1 = generate_dataset(&maps, &PlannerConfig::baseline(), &OracleConfig::with_lookahead(2), &options, 71).unwrap();
    let manifest_path = dir.path().join("ds.json");
    g1.manifest.write(&manifest_path).unwrap();
    let m = DatasetManifest::read(&manifest_path).unwrap();
    let hashes_match = maps.iter().map(|m| m.content_hash()).collect::<Vec<_>>() == m.map_hashes;
    let planner = PlannerConfig {
        sampler: m.sampler,
        sensor: m.sensor,
        heuristic: m.planner_heuristic,
        state_d: m.state_d,
        ..PlannerConfig::baseline()
    };
    let g2 = generate_dataset(&maps, &planner, &m.oracle, &m.options, m.seed).unwrap();
    let (p1, p2) = (dir.path().join("1.flds"), dir.path().join("2.flds"));
    g1.dataset.write(&p1).unwrap();
    g2.dataset.write(&p2).unwrap();
    let dataset_same = hashes_match && std::fs::read(&p1).unwrap() == std::fs::read(&p2).unwrap();

    // Training: rerun from the serialized config.
    let ds = Dataset::read(&p1).unwrap();
    let train_cfg = TrainConfig {
        epochs: 3,
        batch_size: 8,
        seed: 5,
        ..TrainConfig::default()
    };
    let restored: TrainConfig = serde_json::from_str(&serde_json::to_string(&train_cfg).unwrap()).unwrap();
    let w1 = encode_weights(&train(&ds, &train_cfg).unwrap().weights);
    let w2 = encode_weights(&train(&ds, &restored).unwrap().weights);
    let training_same = w1 == w2;

    let pass = episode_same && dataset_same && training_same;
    report(
        "6",
        pass,
        format!(
            "episode {episode_same}, dataset ({} records) {dataset_same}, training {training_same}",
            ds.len()
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_7_termination_and_soundness() {
    let model = trained().model.clone();
    let mut failures = Vec::new();
    for i in 0..50u64 {
        let size = if i < 25 { 20 } else { 50 };
        let truth = generate_map(size, 0.15, derive_seed(0x7E57, i)).unwrap();
        let cfg = PlannerConfig {
            seed: i,
            ..PlannerConfig::with_model(HeuristicConfig::full(), model.clone())
        };
        let ep = Planner::new(cfg.clone()).unwrap().run_episode(&truth).unwrap();
        let reach = ref_bfs(&truth, ep.start);
        let missed = truth
            .iter_cells()
            .filter(|&c| reach[truth.index(c)].is_some() && !ep.final_mask.get(c))
            .count();
        if !ep.completed || ep.budget_exceeded || ep.steps > cfg.budget_for(size) || missed > 0 {
            failures.push((i, size, ep.steps, missed));
        }
    }
    let pass = failures.is_empty();
    report("7", pass, format!("50 maps (25 at L=20, 25 at L=50), failures {failures:?}"));
    assert!(pass);
}

#[test]
fn criterion_8_metric_formulas() {
    let mut rng = rng(8);
    let mut mismatches = 0;
    for _ in 0..1000 {
        let (maps, eps) = (rng.gen_range(1..30), rng.gen_range(1..12));
        let m: Vec<Vec<f64>> = (0..maps)
            .map(|_| (0..eps).map(|_| rng.gen_range(10..20_000) as f64).collect())
            .collect();
        let (mu, sigma) = (compute_mu(&m).unwrap(), compute_sigma(&m).unwrap());
        let base = rng.gen_range(1.0..5000.0);
        mismatches += (mu != ref_mu(&m)) as usize
            + (sigma != ref_sigma(&m)) as usize
            + (compute_s(base, mu).unwrap() != ref_s(base, mu)) as usize;
    }
    let s = compute_s(691.0, 645.0).unwrap();
    let pass = mismatches == 0 && (s - 6.66).abs() <= 0.01;
    report("8", pass, format!("1000 matrices, {mismatches} mismatches; S(691, 645) = {s:.4}%"));
    assert!(pass);
}

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{Context, Result};
use frontier_lab::bench::{run_benchmark, BenchmarkConfig, Variant};
use frontier_lab::env::generate_map;
use frontier_lab::grid::{read_map_file, write_map_file, MapHeader};
use frontier_lab::heuristics::HeuristicConfig;
use frontier_lab::nn::{load_weights, save_weights, train as train_net, weights_hash, Dataset, TrainConfig};
use frontier_lab::oracle::{generate_dataset, DatasetOptions, OracleConfig};
use frontier_lab::planner::{Planner, PlannerConfig, TraceFile};
use frontier_lab::rng::derive_seed;
use frontier_lab::{Error, GridMap};
use serde_json::{json, Value};

use crate::{BenchArgs, DatasetArgs, GenMapsArgs, HeuristicArgs, RolloutArgs, TrainArgs};

fn config_err(msg: impl Into<String>) -> anyhow::Error {
    Error::Config(msg.into()).into()
}

pub(crate) fn prepare_out(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

/// Prints the resolved configuration and stores it as `manifest.json`.
pub(crate) fn write_manifest(dir: &Path, manifest: &Value) -> Result<()> {
    let text = serde_json::to_string_pretty(manifest)?;
    println!("{text}");
    let path = dir.join("manifest.json");
    fs::write(&path, text + "\n").with_context(|| format!("writing {}", path.display()))
}

pub(crate) fn map_file_name(i: usize) -> String {
    format!("map_{i:03}.txt")
}

fn resolve_heuristic(
    alpha: Option<f64>,
    beta: Option<f64>,
    gamma: Option<f64>,
    delta: Option<f64>,
    defaults: HeuristicConfig,
) -> HeuristicConfig {
    HeuristicConfig {
        alpha: alpha.unwrap_or(defaults.alpha),
        beta: beta.unwrap_or(defaults.beta),
        gamma: gamma.unwrap_or(defaults.gamma),
        delta: delta.unwrap_or(defaults.delta),
    }
}

/// Where H3 comes from when γ > 0.
enum H3Source {
    None,
    Model(Arc<frontier_lab::nn::ModelWeights>),
    Oracle(OracleConfig),
}

fn load_h3_source(model: Option<&Path>, oracle_h3: bool, lookahead: usize) -> Result<H3Source> {
    match (model, oracle_h3) {
        (Some(_), true) => Err(config_err("--model and --oracle-h3 are mutually exclusive")),
        (Some(p), false) => Ok(H3Source::Model(Arc::new(load_weights(p)?))),
        (None, true) => {
            let cfg = OracleConfig::with_lookahead(lookahead);
            cfg.validate()?;
            if lookahead == 0 {
                return Err(config_err("--lookahead must be >= 1 for --oracle-h3"));
            }
            Ok(H3Source::Oracle(cfg))
        }
        (None, false) => Ok(H3Source::None),
    }
}

fn planner_config(heuristic: HeuristicConfig, source: &H3Source, state_d: usize) -> Result<PlannerConfig> {
    let mut cfg = PlannerConfig {
        heuristic,
        state_d,
        ..PlannerConfig::baseline()
    };
    if heuristic.gamma > 0.0 {
        match source {
            H3Source::None => {
                return Err(config_err("gamma > 0 needs exactly one of --model or --oracle-h3"));
            }
            H3Source::Model(m) => cfg.model = Some(m.clone()),
            H3Source::Oracle(o) => cfg.oracle_h3 = Some(o.clone()),
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

fn describe_planner(cfg: &PlannerConfig) -> Value {
    json!({
        "heuristic": cfg.heuristic,
        "sampler": cfg.sampler,
        "sensor": cfg.sensor,
        "filters": cfg.filters,
        "state_d": cfg.state_d,
        "h3_source": cfg.h3_source(),
        "seed": cfg.seed,
    })
}

pub fn gen_maps(a: &GenMapsArgs) -> Result<()> {
    if a.maps == 0 {
        return Err(config_err("--maps must be >= 1"));
    }
    prepare_out(&a.out)?;
    let mut files = Vec::with_capacity(a.maps);
    for i in 0..a.maps {
        let seed = derive_seed(a.map.seed, i as u64);
        let map = generate_map(a.map.size, a.map.density, seed)?;
        let header = MapHeader {
            size: a.map.size,
            density: a.map.density,
            seed,
        };
        let name = map_file_name(i);
        write_map_file(&a.out.join(&name), &map, &header)?;
        files.push(json!({ "file": name, "seed": seed, "hash": map.content_hash(), "occupied": map.occupied_fraction() }));
    }
    write_manifest(
        &a.out,
        &json!({
            "command": "gen-maps",
            "size": a.map.size,
            "density": a.map.density,
            "seed": a.map.seed,
            "maps": files,
        }),
    )
}

pub fn rollout(a: &RolloutArgs) -> Result<()> {
    let map = match &a.map_file {
        Some(p) => read_map_file(p)?.0,
        None => generate_map(a.map.size, a.map.density, a.map.seed)?,
    };
    let h: &HeuristicArgs = &a.heuristic;
    let heuristic = resolve_heuristic(h.alpha, h.beta, h.gamma, h.delta, HeuristicConfig::full());
    let source = load_h3_source(h.model.as_deref(), h.oracle_h3, h.lookahead)?;
    let cfg = PlannerConfig {
        seed: a.episode_seed,
        ..planner_config(heuristic, &source, h.state_d)?
    };
    prepare_out(&a.out)?;
    let ep = Planner::new(cfg.clone())?.run_episode(&map)?;
    let trace = TraceFile::from_episode(&map, &cfg, &ep);
    trace.write(&a.out.join("trace.jsonl"))?;
    write_manifest(
        &a.out,
        &json!({
            "command": "rollout",
            "map_file": a.map_file,
            "map_hash": map.content_hash(),
            "size": map.size(),
            "planner": describe_planner(&cfg),
            "step_budget": cfg.budget_for(map.size()),
            "steps": ep.steps,
            "planning_steps": ep.trace.len(),
            "completed": ep.completed,
            "budget_exceeded": ep.budget_exceeded,
        }),
    )
}

fn read_map_dir(dir: &Path) -> Result<Vec<(PathBuf, GridMap)>> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .with_context(|| format!("reading {}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "txt"))
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(config_err(format!("no .txt maps in {}", dir.display())));
    }
    paths
        .into_iter()
        .map(|p| {
            let map = read_map_file(&p)?.0;
            Ok((p, map))
        })
        .collect()
}

pub fn dataset(a: &DatasetArgs) -> Result<()> {
    if a.lookahead == 0 {
        return Err(config_err("--lookahead must be >= 1"));
    }
    // Rollouts for labelling use the plain information-gain planner.
    let heuristic = resolve_heuristic(a.alpha, a.beta, None, None, HeuristicConfig::baseline());
    let heuristic = HeuristicConfig {
        gamma: 0.0,
        delta: 0.0,
        ..heuristic
    };
    let planner = planner_config(heuristic, &H3Source::None, a.state_d)?;
    let maps: Vec<GridMap> = match &a.map_dir {
        Some(dir) => read_map_dir(dir)?.into_iter().map(|(_, m)| m).collect(),
        None => {
            if a.maps == 0 {
                return Err(config_err("--maps must be >= 1"));
            }
            (0..a.maps)
                .map(|i| generate_map(a.map.size, a.map.density, derive_seed(a.map.seed, i as u64)))
                .collect::<frontier_lab::Result<_>>()?
        }
    };
    let oracle = OracleConfig {
        rng_seed: a.map.seed,
        ..OracleConfig::with_lookahead(a.lookahead)
    };
    let options = DatasetOptions {
        record_every: a.record_every,
        max_records_per_map: a.max_records_per_map,
    };
    prepare_out(&a.out)?;
    let generated = generate_dataset(&maps, &planner, &oracle, &options, a.map.seed)?;
    generated.dataset.write(&a.out.join("dataset.flds"))?;
    for (h, ds) in generated.by_horizon.iter().enumerate().take(a.lookahead.saturating_sub(1)) {
        ds.write(&a.out.join(format!("dataset_t{}.flds", h + 1)))?;
    }
    generated.manifest.write(&a.out.join("dataset.json"))?;
    let mut manifest = serde_json::to_value(&generated.manifest)?;
    if let Value::Object(m) = &mut manifest {
        m.insert("command".into(), json!("dataset"));
        m.insert("planner".into(), describe_planner(&planner));
        m.insert("map_dir".into(), json!(a.map_dir));
    }
    write_manifest(&a.out, &manifest)
}

pub fn train(a: &TrainArgs) -> Result<()> {
    let dataset = Dataset::read(&a.dataset)?;
    let cfg = TrainConfig {
        learning_rate: a.learning_rate,
        momentum: a.momentum,
        batch_size: a.batch_size,
        epochs: a.epochs,
        seed: a.seed,
        ..TrainConfig::default()
    };
    cfg.validate()?;
    if dataset.len() < cfg.batch_size {
        return Err(config_err(format!(
            "dataset has {} records, fewer than the batch size {}",
            dataset.len(),
            cfg.batch_size
        )));
    }
    prepare_out(&a.out)?;
    let outcome = train_net(&dataset, &cfg)?;
    save_weights(&a.out.join("weights.bin"), &outcome.weights)?;
    let mut w = csv::Writer::from_path(a.out.join("curve.csv"))?;
    for e in &outcome.curve {
        w.serialize(e)?;
    }
    w.flush()?;
    write_manifest(
        &a.out,
        &json!({
            "command": "train",
            "dataset": a.dataset,
            "records": dataset.len(),
            "validation_records": dataset.len() - dataset.validation_split(),
            "train": cfg,
            "weights_sha256": weights_hash(&outcome.weights),
            "final_val_mse": outcome.final_val_mse(),
        }),
    )
}

/// Parses `NAME=ALPHA:BETA:GAMMA:DELTA`.
fn parse_variant(spec: &str) -> Result<(String, HeuristicConfig)> {
    let bad = || config_err(format!("variant {spec:?} is not NAME=ALPHA:BETA:GAMMA:DELTA"));
    let (name, coeffs) = spec.split_once('=').ok_or_else(bad)?;
    let values: Vec<f64> = coeffs
        .split(':')
        .map(|v| v.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| bad())?;
    let [alpha, beta, gamma, delta] = values[..] else {
        return Err(bad());
    };
    if name.is_empty() {
        return Err(bad());
    }
    Ok((name.to_string(), HeuristicConfig { alpha, beta, gamma, delta }))
}

pub fn bench(a: &BenchArgs) -> Result<()> {
    let source = load_h3_source(a.model.as_deref(), a.oracle_h3, a.lookahead)?;
    let specs: Vec<(String, HeuristicConfig)> = if a.variants.is_empty() {
        let mut v = vec![("baseline".to_string(), HeuristicConfig::baseline())];
        if !matches!(source, H3Source::None) {
            v.push(("h3".into(), HeuristicConfig::with_future_return()));
            v.push(("full".into(), HeuristicConfig::full()));
        }
        v
    } else {
        a.variants.iter().map(|s| parse_variant(s)).collect::<Result<_>>()?
    };
    let variants = specs
        .into_iter()
        .map(|(name, h)| Ok(Variant::new(name, planner_config(h, &source, a.state_d)?)))
        .collect::<Result<Vec<_>>>()?;
    let cfg = BenchmarkConfig {
        sizes: a.size.clone(),
        maps: a.maps,
        episodes: a.episodes,
        density: a.density,
        suite_seed: a.seed,
        variants,
    };
    cfg.validate()?;
    prepare_out(&a.out)?;
    let result = run_benchmark(&cfg)?;
    result.write(&a.out.join("results.csv"), &a.out.join("summary.json"))?;
    let variants: Vec<Value> = cfg
        .variants
        .iter()
        .map(|v| json!({ "name": v.name, "planner": describe_planner(&v.planner) }))
        .collect();
    write_manifest(
        &a.out,
        &json!({
            "command": "bench",
            "sizes": cfg.sizes,
            "maps": cfg.maps,
            "episodes": cfg.episodes,
            "density": cfg.density,
            "suite_seed": cfg.suite_seed,
            "variants": variants,
            "results": result.summary.results,
        }),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn variant_specs() {
        let (name, h) = parse_variant("full=1:12:1:20").unwrap();
        assert_eq!(name, "full");
        assert_eq!(h, HeuristicConfig::full());
        assert!(parse_variant("x=1:2:3").is_err());
        assert!(parse_variant("1:2:3:4").is_err());
        assert!(parse_variant("=1:2:3:4").is_err());
        assert!(parse_variant("x=1:a:3:4").is_err());
    }

    #[test]
    fn gamma_without_source_is_a_config_error() {
        let err = planner_config(HeuristicConfig::full(), &H3Source::None, 40).unwrap_err();
        assert!(matches!(err.downcast_ref::<Error>(), Some(Error::Config(_))));
        assert!(planner_config(HeuristicConfig::baseline(), &H3Source::None, 40).is_ok());
    }
}

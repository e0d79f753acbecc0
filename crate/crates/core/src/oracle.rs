//! Clairvoyant future-return oracle and training-set generation.
//!
//! From a candidate state (agent at a frontier point holding `temp_mask`),
//! the oracle grows a tree of future frontier selections on the true map.
//! Each edge is one selection plus traversal and earns that traversal's
//! information gain; the label for look-ahead `T` is the best (or mean)
//! total gain over `T` selections.
//!
//! Node sampling is seeded from the root seed and the path of frontier
//! points leading to the node, so a depth-`T` tree is a prefix of the
//! depth-`T+1` tree. [`oracle_values`] exploits that and returns the labels
//! for every horizon `0..=T` from a single traversal.

use std::path::Path;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::astar::{bfs_distances, shortest_path, simulate_mask};
use crate::env::Sensor;
use crate::error::{Error, Result};
use crate::frontier::{sample_frontiers, sobel_frontiers, FrontierPoint, SamplerConfig};
use crate::grid::{Cell, GridMap, Mask};
use crate::heuristics::h1_info_gain;
use crate::nn::{extract_state, Dataset, NetState};
use crate::planner::{Planner, PlannerConfig};
use crate::rng::{derive_seed, rng_from_seed};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aggregate {
    Max,
    Mean,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleConfig {
    /// Look-ahead T, in frontier selections.
    pub lookahead: usize,
    /// Children sampled at each depth; length T.
    pub branching: Vec<usize>,
    pub rng_seed: u64,
    pub aggregate: Aggregate,
    /// Share of each depth's sample taken as nearest points (12/15 by default).
    pub nearest_fraction: f64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self::with_lookahead(1)
    }
}

impl OracleConfig {
    /// Branching 15, 5, 3 truncated to `lookahead` (3 for any deeper level).
    pub fn with_lookahead(lookahead: usize) -> Self {
        let branching = (0..lookahead).map(|d| [15, 5, 3].get(d).copied().unwrap_or(3)).collect();
        Self {
            lookahead,
            branching,
            rng_seed: 0,
            aggregate: Aggregate::Max,
            nearest_fraction: 0.8,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.branching.len() != self.lookahead {
            return Err(Error::Config(format!(
                "oracle needs {} branching factors, got {}",
                self.lookahead,
                self.branching.len()
            )));
        }
        if self.branching.contains(&0) {
            return Err(Error::Config("oracle branching factors must be >= 1".into()));
        }
        if !(0.0..=1.0).contains(&self.nearest_fraction) {
            return Err(Error::Config(format!(
                "nearest fraction {} outside [0, 1]",
                self.nearest_fraction
            )));
        }
        Ok(())
    }

    fn sampler_at(&self, depth: usize) -> SamplerConfig {
        let n = self.branching[depth];
        SamplerConfig {
            n,
            k: ((n as f64 * self.nearest_fraction).floor() as usize).min(n),
        }
    }
}

struct Tree<'a> {
    truth: &'a GridMap,
    cfg: &'a OracleConfig,
    sensor: &'a Sensor,
}

impl Tree<'_> {
    /// Values for horizons `0..=T-depth` of the node where the agent stands
    /// at `loc` holding `mask`.
    fn values(&self, mask: &Mask, loc: Cell, depth: usize, seed: u64) -> Result<Vec<f64>> {
        let remaining = self.cfg.lookahead - depth;
        let mut out = vec![0.0; remaining + 1];
        if remaining == 0 {
            return Ok(out);
        }
        let dist = bfs_distances(self.truth, loc);
        let reachable: Vec<FrontierPoint> = sobel_frontiers(mask, self.truth)?
            .into_iter()
            .filter(|&fp| dist[self.truth.index(fp)] != u32::MAX)
            .collect();
        if reachable.is_empty() {
            return Ok(out);
        }
        let children = sample_frontiers(&reachable, loc, &self.cfg.sampler_at(depth), &mut rng_from_seed(seed));
        let mut sums = vec![0.0; remaining + 1];
        for (i, &child) in children.iter().enumerate() {
            let path = shortest_path(self.truth, loc, child)?
                .expect("frontier was filtered for reachability");
            let temp = simulate_mask(self.truth, mask, loc, &path, self.sensor);
            let gain = h1_info_gain(mask, &temp)? as f64;
            let sub = if remaining > 1 {
                self.values(&temp, child, depth + 1, derive_seed(seed, self.truth.index(child) as u64))?
            } else {
                vec![0.0]
            };
            for h in 1..=remaining {
                let v = gain + sub[h - 1];
                match self.cfg.aggregate {
                    Aggregate::Max => {
                        if i == 0 || v > out[h] {
                            out[h] = v;
                        }
                    }
                    Aggregate::Mean => sums[h] += v,
                }
            }
        }
        if self.cfg.aggregate == Aggregate::Mean {
            for h in 1..=remaining {
                out[h] = sums[h] / children.len() as f64;
            }
        }
        Ok(out)
    }
}

/// Labels for every horizon `0..=T` of the state (agent at `fp`, `temp_mask`).
pub fn oracle_values(
    true_map: &GridMap,
    temp_mask: &Mask,
    fp: FrontierPoint,
    cfg: &OracleConfig,
    sensor: &Sensor,
) -> Result<Vec<f64>> {
    cfg.validate()?;
    true_map.check_same_size(temp_mask, "oracle")?;
    if !temp_mask.in_bounds(fp) || !temp_mask.is_explored(fp) || !true_map.is_free(fp) {
        return Err(Error::Contract(format!(
            "oracle root {fp} must be explored and free"
        )));
    }
    let tree = Tree {
        truth: true_map,
        cfg,
        sensor,
    };
    tree.values(temp_mask, fp, 0, derive_seed(cfg.rng_seed, true_map.index(fp) as u64))
}

/// Ground-truth future return for look-ahead `cfg.lookahead`.
pub fn oracle_label(
    true_map: &GridMap,
    temp_mask: &Mask,
    fp: FrontierPoint,
    cfg: &OracleConfig,
    sensor: &Sensor,
) -> Result<f64> {
    Ok(*oracle_values(true_map, temp_mask, fp, cfg, sensor)?
        .last()
        .expect("horizon 0 is always present"))
}

/// Controls how much of each rollout is recorded.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetOptions {
    /// Record candidates at every `record_every`-th planning step.
    pub record_every: usize,
    pub max_records_per_map: Option<usize>,
}

impl Default for DatasetOptions {
    fn default() -> Self {
        Self {
            record_every: 1,
            max_records_per_map: None,
        }
    }
}

/// Sidecar describing how a dataset was produced.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub seed: u64,
    pub records: usize,
    pub validation_records: usize,
    pub state_d: usize,
    pub oracle: OracleConfig,
    pub options: DatasetOptions,
    pub planner_heuristic: crate::heuristics::HeuristicConfig,
    pub sampler: SamplerConfig,
    pub sensor: crate::env::SensorConfig,
    pub map_hashes: Vec<String>,
    /// Label mean and variance per horizon 1..=T.
    pub label_stats: Vec<(f64, f64)>,
}

impl DatasetManifest {
    pub fn write(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }
}

#[derive(Clone, Debug)]
pub struct GeneratedDataset {
    /// Labelled with look-ahead T.
    pub dataset: Dataset,
    /// `by_horizon[h - 1]` labels the same states with look-ahead h, h = 1..=T.
    pub by_horizon: Vec<Dataset>,
    pub manifest: DatasetManifest,
}

/// Rolls out `planner_cfg` (which should be the γ = δ = 0 baseline) on every
/// map and labels each evaluated frontier point with the oracle. Records are
/// shuffled with `seed`; the last 10% form the validation split.
pub fn generate_dataset(
    maps: &[GridMap],
    planner_cfg: &PlannerConfig,
    oracle_cfg: &OracleConfig,
    options: &DatasetOptions,
    seed: u64,
) -> Result<GeneratedDataset> {
    if maps.is_empty() {
        return Err(Error::Contract("dataset generation needs at least one map".into()));
    }
    if oracle_cfg.lookahead == 0 {
        return Err(Error::Config("dataset look-ahead must be >= 1".into()));
    }
    if options.record_every == 0 {
        return Err(Error::Config("record_every must be >= 1".into()));
    }
    oracle_cfg.validate()?;
    let horizons = oracle_cfg.lookahead;
    let mut states: Vec<NetState> = Vec::new();
    let mut labels: Vec<Vec<f32>> = vec![Vec::new(); horizons];

    for (m, map) in maps.iter().enumerate() {
        let planner = Planner::new(PlannerConfig {
            seed: derive_seed(seed, m as u64),
            ..planner_cfg.clone()
        })?;
        let sensor = planner.sensor().clone();
        let mut recorded = 0usize;
        let mut step_index = 0usize;
        let cap = options.max_records_per_map.unwrap_or(usize::MAX);
        planner.run_episode_with(map, |input, step| {
            let this_step = step_index;
            step_index += 1;
            if !this_step.is_multiple_of(options.record_every) {
                return Ok(());
            }
            let unexplored = input.mask.size() * input.mask.size() - input.mask.count_ones();
            for cand in &step.candidates {
                if recorded >= cap {
                    return Ok(());
                }
                let fp = cand.score.fp;
                let values = oracle_values(map, &cand.path.temp_mask, fp, oracle_cfg, &sensor)?;
                debug_assert!(values.iter().all(|&v| v >= 0.0 && v <= unexplored as f64));
                states.push(extract_state(input.map_view, &cand.path.temp_mask, fp, planner_cfg.state_d));
                for h in 1..=horizons {
                    labels[h - 1].push(values[h] as f32);
                }
                recorded += 1;
            }
            Ok(())
        })?;
    }
    if states.is_empty() {
        return Err(Error::Contract("rollouts produced no planning steps to record".into()));
    }

    let mut order: Vec<usize> = (0..states.len()).collect();
    order.shuffle(&mut rng_from_seed(derive_seed(seed, u64::MAX)));
    let mut slots: Vec<Option<NetState>> = states.into_iter().map(Some).collect();
    let shuffled: Vec<NetState> = order.iter().map(|&i| slots[i].take().unwrap()).collect();
    let labels: Vec<Vec<f32>> = labels
        .into_iter()
        .map(|l| order.iter().map(|&i| l[i]).collect())
        .collect();

    let base = Dataset::new(shuffled, labels[0].clone())?;
    let by_horizon = labels
        .iter()
        .map(|l| base.relabel(l.clone()))
        .collect::<Result<Vec<_>>>()?;
    let dataset = by_horizon.last().unwrap().clone();
    let label_stats = labels
        .iter()
        .map(|l| {
            let n = l.len() as f64;
            let mean = l.iter().map(|&v| v as f64).sum::<f64>() / n;
            let var = l.iter().map(|&v| (v as f64 - mean).powi(2)).sum::<f64>() / n;
            (mean, var)
        })
        .collect();
    let manifest = DatasetManifest {
        seed,
        records: dataset.len(),
        validation_records: dataset.len() - dataset.validation_split(),
        state_d: planner_cfg.state_d,
        oracle: oracle_cfg.clone(),
        options: *options,
        planner_heuristic: planner_cfg.heuristic,
        sampler: planner_cfg.sampler,
        sensor: planner_cfg.sensor,
        map_hashes: maps.iter().map(|m| m.content_hash()).collect(),
        label_stats,
    };
    Ok(GeneratedDataset {
        dataset,
        by_horizon,
        manifest,
    })
}

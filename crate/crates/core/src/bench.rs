//! Paired benchmark suites and the μ, σ, S statistics.
//!
//! Seeds: `map_seed = derive(derive(suite_seed, L), map_index)` and
//! `episode_seed = derive(map_seed, episode_index)`. Every variant sees the
//! same maps and episode seeds, so any single episode can be rerun alone.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::env::generate_map;
use crate::error::{Error, Result};
use crate::heuristics::HeuristicConfig;
use crate::planner::{Planner, PlannerConfig};
use crate::rng::derive_seed;

/// Mean over maps of the per-map episode means.
pub fn compute_mu(steps: &[Vec<f64>]) -> Result<f64> {
    let means = map_means(steps)?;
    Ok(means.iter().sum::<f64>() / means.len() as f64)
}

/// Mean of squared per-map means minus μ², floored at zero (rounding can
/// push the difference of equal terms a few ulps negative).
pub fn compute_sigma(steps: &[Vec<f64>]) -> Result<f64> {
    let means = map_means(steps)?;
    let n = means.len() as f64;
    let mu = means.iter().sum::<f64>() / n;
    Ok((means.iter().map(|m| m * m).sum::<f64>() / n - mu * mu).max(0.0))
}

/// Improvement of `mu_variant` over `mu_baseline`, in percent.
pub fn compute_s(mu_baseline: f64, mu_variant: f64) -> Result<f64> {
    #[allow(clippy::neg_cmp_op_on_partial_ord)] // NaN must be rejected too
    if !(mu_baseline > 0.0) {
        return Err(Error::Contract(format!("baseline mean {mu_baseline} must be > 0")));
    }
    Ok((mu_baseline - mu_variant) / mu_baseline * 100.0)
}

fn map_means(steps: &[Vec<f64>]) -> Result<Vec<f64>> {
    if steps.is_empty() || steps.iter().any(Vec::is_empty) {
        return Err(Error::Contract("step matrix must be non-empty".into()));
    }
    Ok(steps
        .iter()
        .map(|row| row.iter().sum::<f64>() / row.len() as f64)
        .collect())
}

#[derive(Clone, Debug)]
pub struct Variant {
    pub name: String,
    pub planner: PlannerConfig,
}

impl Variant {
    pub fn new(name: impl Into<String>, planner: PlannerConfig) -> Self {
        Self {
            name: name.into(),
            planner,
        }
    }
}

#[derive(Clone, Debug)]
pub struct BenchmarkConfig {
    pub sizes: Vec<usize>,
    /// N_M per size.
    pub maps: usize,
    /// N_E per map.
    pub episodes: usize,
    pub density: f64,
    pub suite_seed: u64,
    /// The first variant is the baseline for S.
    pub variants: Vec<Variant>,
}

impl BenchmarkConfig {
    /// 10 maps × 5 episodes.
    pub fn desk(sizes: Vec<usize>, variants: Vec<Variant>) -> Self {
        Self {
            sizes,
            maps: 10,
            episodes: 5,
            density: 0.15,
            suite_seed: 0,
            variants,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.maps == 0 || self.episodes == 0 {
            return Err(Error::Config("benchmark needs at least one map and one episode".into()));
        }
        if self.sizes.is_empty() || self.variants.is_empty() {
            return Err(Error::Config("benchmark needs at least one size and one variant".into()));
        }
        let mut names: Vec<&str> = self.variants.iter().map(|v| v.name.as_str()).collect();
        names.sort_unstable();
        if names.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Config("variant names must be unique".into()));
        }
        for v in &self.variants {
            v.planner.validate()?;
        }
        Ok(())
    }

    pub fn map_seed(&self, size: usize, map_index: usize) -> u64 {
        derive_seed(derive_seed(self.suite_seed, size as u64), map_index as u64)
    }

    pub fn episode_seed(map_seed: u64, episode_index: usize) -> u64 {
        derive_seed(map_seed, episode_index as u64)
    }
}

/// One row of the results CSV.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRow {
    pub variant: String,
    #[serde(rename = "L")]
    pub size: usize,
    pub map_seed: u64,
    pub episode_seed: u64,
    pub steps: usize,
    pub completed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VariantSummary {
    pub variant: String,
    pub size: usize,
    pub mu: f64,
    pub sigma: f64,
    /// S against the baseline variant at the same size.
    pub s: f64,
    pub incomplete: usize,
}

/// Serializable description of a variant for the summary file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VariantDescription {
    pub name: String,
    pub heuristic: HeuristicConfig,
    pub h3_source: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkSummary {
    pub version: String,
    pub suite_seed: u64,
    pub sizes: Vec<usize>,
    pub maps: usize,
    pub episodes: usize,
    pub density: f64,
    pub variants: Vec<VariantDescription>,
    pub results: Vec<VariantSummary>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchmarkResult {
    pub summary: BenchmarkSummary,
    /// Ordered by size, variant, map, episode.
    pub rows: Vec<EpisodeRow>,
}

impl BenchmarkResult {
    /// The N_M × N_E step matrix of `variant` at `size`.
    pub fn matrix(&self, variant: &str, size: usize) -> Vec<Vec<f64>> {
        let mut out: Vec<Vec<f64>> = Vec::new();
        let mut last_map = None;
        for r in self.rows.iter().filter(|r| r.variant == variant && r.size == size) {
            if last_map != Some(r.map_seed) {
                out.push(Vec::new());
                last_map = Some(r.map_seed);
            }
            out.last_mut().unwrap().push(r.steps as f64);
        }
        out
    }

    pub fn result(&self, variant: &str, size: usize) -> Option<&VariantSummary> {
        self.summary
            .results
            .iter()
            .find(|r| r.variant == variant && r.size == size)
    }

    /// S of `variant` averaged over sizes.
    pub fn mean_s(&self, variant: &str) -> f64 {
        let s: Vec<f64> = self
            .summary
            .results
            .iter()
            .filter(|r| r.variant == variant)
            .map(|r| r.s)
            .collect();
        s.iter().sum::<f64>() / s.len() as f64
    }

    pub fn write(&self, csv_path: &Path, json_path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(csv_path)?;
        for row in &self.rows {
            w.serialize(row)?;
        }
        w.flush().map_err(|e| Error::io(csv_path, e))?;
        let text = serde_json::to_string_pretty(&self.summary)?;
        std::fs::write(json_path, text).map_err(|e| Error::io(json_path, e))
    }

    pub fn read(csv_path: &Path, json_path: &Path) -> Result<Self> {
        let mut r = csv::Reader::from_path(csv_path)?;
        let rows = r.deserialize().collect::<std::result::Result<Vec<EpisodeRow>, _>>()?;
        let text = std::fs::read_to_string(json_path).map_err(|e| Error::io(json_path, e))?;
        Ok(Self {
            summary: serde_json::from_str(&text)?,
            rows,
        })
    }
}

fn describe(v: &Variant) -> VariantDescription {
    VariantDescription {
        name: v.name.clone(),
        heuristic: v.planner.heuristic,
        h3_source: v.planner.h3_source(),
    }
}

pub fn run_benchmark(cfg: &BenchmarkConfig) -> Result<BenchmarkResult> {
    cfg.validate()?;
    let mut rows = Vec::new();
    let mut results = Vec::new();
    for &size in &cfg.sizes {
        let maps = (0..cfg.maps)
            .into_par_iter()
            .map(|m| {
                let seed = cfg.map_seed(size, m);
                generate_map(size, cfg.density, seed).map(|map| (seed, map))
            })
            .collect::<Result<Vec<_>>>()?;
        let jobs: Vec<(usize, usize, usize)> = (0..cfg.variants.len())
            .flat_map(|v| (0..cfg.maps).flat_map(move |m| (0..cfg.episodes).map(move |e| (v, m, e))))
            .collect();
        let episodes = jobs
            .par_iter()
            .map(|&(v, m, e)| {
                let (map_seed, map) = &maps[m];
                let episode_seed = BenchmarkConfig::episode_seed(*map_seed, e);
                let variant = &cfg.variants[v];
                let planner = Planner::new(PlannerConfig {
                    seed: episode_seed,
                    ..variant.planner.clone()
                })?;
                let ep = planner.run_episode(map)?;
                Ok(EpisodeRow {
                    variant: variant.name.clone(),
                    size,
                    map_seed: *map_seed,
                    episode_seed,
                    steps: ep.steps,
                    completed: ep.completed,
                })
            })
            .collect::<Result<Vec<_>>>()?;

        let mut mu_base = None;
        for (v, variant) in cfg.variants.iter().enumerate() {
            let block = &episodes[v * cfg.maps * cfg.episodes..(v + 1) * cfg.maps * cfg.episodes];
            let matrix: Vec<Vec<f64>> = block
                .chunks(cfg.episodes)
                .map(|c| c.iter().map(|r| r.steps as f64).collect())
                .collect();
            let mu = compute_mu(&matrix)?;
            let sigma = compute_sigma(&matrix)?;
            let base = *mu_base.get_or_insert(mu);
            results.push(VariantSummary {
                variant: variant.name.clone(),
                size,
                mu,
                sigma,
                s: compute_s(base, mu)?,
                incomplete: block.iter().filter(|r| !r.completed).count(),
            });
        }
        rows.extend(episodes);
    }
    Ok(BenchmarkResult {
        summary: BenchmarkSummary {
            version: env!("CARGO_PKG_VERSION").to_string(),
            suite_seed: cfg.suite_seed,
            sizes: cfg.sizes.clone(),
            maps: cfg.maps,
            episodes: cfg.episodes,
            density: cfg.density,
            variants: cfg.variants.iter().map(describe).collect(),
            results,
        },
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_matrices() {
        assert_eq!(compute_mu(&[vec![10.0]]).unwrap(), 10.0);
        let m = vec![vec![10.0, 20.0], vec![30.0, 30.0]];
        assert_eq!(compute_mu(&m).unwrap(), 22.5);
        assert_eq!(compute_sigma(&m).unwrap(), 56.25);
        assert_eq!(compute_sigma(&[vec![4.0, 4.0], vec![4.0, 4.0]]).unwrap(), 0.0);
        assert_eq!(compute_s(100.0, 100.0).unwrap(), 0.0);
        assert!(compute_mu(&[]).is_err());
        assert!(compute_s(0.0, 1.0).is_err());
    }

    #[test]
    fn table_means_give_expected_improvement() {
        let s = compute_s(691.0, 645.0).unwrap();
        assert!((s - 6.66).abs() <= 0.01, "{s}");
    }

    fn tiny(episodes: usize, variants: Vec<Variant>) -> BenchmarkConfig {
        BenchmarkConfig {
            sizes: vec![15],
            maps: 2,
            episodes,
            density: 0.15,
            suite_seed: 4,
            variants,
        }
    }

    #[test]
    fn identical_variants_have_zero_improvement() {
        let r = run_benchmark(&tiny(
            2,
            vec![
                Variant::new("a", PlannerConfig::baseline()),
                Variant::new("b", PlannerConfig::baseline()),
            ],
        ))
        .unwrap();
        assert_eq!(r.result("b", 15).unwrap().s, 0.0);
        assert_eq!(r.matrix("a", 15), r.matrix("b", 15));
        assert_eq!(r.matrix("a", 15).len(), 2);
    }

    #[test]
    fn more_episodes_extend_the_matrix() {
        let v = || vec![Variant::new("base", PlannerConfig::baseline())];
        let small = run_benchmark(&tiny(2, v())).unwrap().matrix("base", 15);
        let big = run_benchmark(&tiny(4, v())).unwrap().matrix("base", 15);
        for (a, b) in small.iter().zip(&big) {
            assert_eq!(a[..], b[..2]);
        }
    }

    #[test]
    fn csv_json_round_trip() {
        let r = run_benchmark(&tiny(1, vec![Variant::new("base", PlannerConfig::baseline())])).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let (c, j) = (dir.path().join("r.csv"), dir.path().join("r.json"));
        r.write(&c, &j).unwrap();
        assert_eq!(BenchmarkResult::read(&c, &j).unwrap(), r);
    }

    #[test]
    fn duplicate_names_rejected() {
        let cfg = tiny(
            1,
            vec![
                Variant::new("x", PlannerConfig::baseline()),
                Variant::new("x", PlannerConfig::baseline()),
            ],
        );
        assert!(matches!(run_benchmark(&cfg), Err(Error::Config(_))));
    }
}

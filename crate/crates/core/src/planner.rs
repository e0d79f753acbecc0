//! The frontier coverage loop: extract frontiers, sample up to N, score each
//! reachable one with `H`, walk the best path, repeat until no reachable
//! frontier is left.

use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::astar::{a_star, bfs_distances, PathResult};
use crate::env::{move_agent, start_cell, AgentState, MoveOutcome, Sensor, SensorConfig};
use crate::error::{Error, Result};
use crate::frontier::{sample_frontiers, sobel_frontiers, FrontierPoint, SamplerConfig};
use crate::grid::{Cell, GridMap, Mask};
use crate::heuristics::{combine, default_filters, h1_info_gain, h2_move_cost, h4_filters, FilterSpec, HeuristicConfig};
use crate::nn::{extract_state, forward, ModelWeights};
use crate::oracle::{oracle_label, OracleConfig};
use crate::rng::{rng_from_seed, Rng};

#[derive(Clone, Debug)]
pub struct PlannerConfig {
    pub heuristic: HeuristicConfig,
    pub sampler: SamplerConfig,
    pub sensor: SensorConfig,
    pub filters: Vec<FilterSpec>,
    /// Side of the local window fed to the network.
    pub state_d: usize,
    pub model: Option<Arc<ModelWeights>>,
    /// Diagnostic mode: H3 straight from the clairvoyant oracle.
    pub oracle_h3: Option<OracleConfig>,
    pub seed: u64,
    /// Maximum grid moves per episode; `None` means 50·L².
    pub step_budget: Option<usize>,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        Self::baseline()
    }
}

impl PlannerConfig {
    /// α:β = 1:15, no H3 or H4.
    pub fn baseline() -> Self {
        Self {
            heuristic: HeuristicConfig::baseline(),
            sampler: SamplerConfig::default(),
            sensor: SensorConfig::default(),
            filters: default_filters(),
            state_d: 40,
            model: None,
            oracle_h3: None,
            seed: 0,
            step_budget: None,
        }
    }

    pub fn with_model(heuristic: HeuristicConfig, model: Arc<ModelWeights>) -> Self {
        Self {
            heuristic,
            model: Some(model),
            ..Self::baseline()
        }
    }

    pub fn with_oracle(heuristic: HeuristicConfig, oracle: OracleConfig) -> Self {
        Self {
            heuristic,
            oracle_h3: Some(oracle),
            ..Self::baseline()
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.heuristic.validate()?;
        self.sampler.validate()?;
        self.sensor.validate()?;
        for f in &self.filters {
            f.validate()?;
        }
        if self.state_d == 0 {
            return Err(Error::Config("state window d must be positive".into()));
        }
        let sources = [
            self.heuristic.gamma == 0.0,
            self.model.is_some(),
            self.oracle_h3.is_some(),
        ];
        if sources.iter().filter(|&&s| s).count() != 1 {
            return Err(Error::Config(
                "exactly one H3 source is allowed: gamma = 0, a model, or the oracle".into(),
            ));
        }
        if let Some(o) = &self.oracle_h3 {
            o.validate()?;
        }
        Ok(())
    }

    /// Short description of where H3 comes from, for manifests.
    pub fn h3_source(&self) -> String {
        if let Some(m) = &self.model {
            format!("model:{}", crate::nn::weights_hash(m))
        } else if let Some(o) = &self.oracle_h3 {
            format!("oracle:{}", serde_json::to_string(o).unwrap_or_default())
        } else {
            "none".into()
        }
    }

    pub fn budget_for(&self, size: usize) -> usize {
        self.step_budget.unwrap_or(50 * size * size)
    }
}

/// The heuristic terms of one evaluated frontier point.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrontierScore {
    pub fp: FrontierPoint,
    pub h1: f64,
    pub h2: f64,
    pub h3: f64,
    pub h4: f64,
    pub h: f64,
}

#[derive(Clone, Debug)]
pub struct Candidate {
    pub path: PathResult,
    pub score: FrontierScore,
}

/// The scored candidates of one planning step and the index of the winner.
#[derive(Clone, Debug)]
pub struct PlanStep {
    pub candidates: Vec<Candidate>,
    pub best: usize,
}

impl PlanStep {
    pub fn chosen(&self) -> &Candidate {
        &self.candidates[self.best]
    }
}

#[derive(Clone, Debug)]
pub enum PlanOutcome {
    Step(PlanStep),
    /// No reachable frontier remains.
    Done,
}

/// Everything the agent knows at a planning step.
#[derive(Clone, Copy, Debug)]
pub struct PlanInput<'a> {
    pub map_view: &'a GridMap,
    pub mask: &'a Mask,
    pub loc: Cell,
    /// Only consulted by the oracle-H3 diagnostic mode.
    pub true_map: Option<&'a GridMap>,
}

/// A configured planner with its sensor footprint precomputed.
#[derive(Clone, Debug)]
pub struct Planner {
    cfg: PlannerConfig,
    sensor: Sensor,
}

impl Planner {
    pub fn new(cfg: PlannerConfig) -> Result<Self> {
        cfg.validate()?;
        let sensor = Sensor::new(cfg.sensor);
        Ok(Self { cfg, sensor })
    }

    pub fn config(&self) -> &PlannerConfig {
        &self.cfg
    }

    pub fn sensor(&self) -> &Sensor {
        &self.sensor
    }

    /// Scores every sampled reachable frontier point and picks the highest
    /// `H`, ties going to the earliest in sampling order.
    pub fn plan_step(&self, input: PlanInput<'_>, rng: &mut Rng) -> Result<PlanOutcome> {
        let PlanInput {
            map_view,
            mask,
            loc,
            true_map,
        } = input;
        let dist = bfs_distances(map_view, loc);
        let reachable: Vec<FrontierPoint> = sobel_frontiers(mask, map_view)?
            .into_iter()
            .filter(|&fp| dist[map_view.index(fp)] != u32::MAX)
            .collect();
        let sampled = sample_frontiers(&reachable, loc, &self.cfg.sampler, rng);

        let mut candidates = Vec::with_capacity(sampled.len());
        let mut best: Option<(usize, f64)> = None;
        for fp in sampled {
            let Some(path) = a_star(map_view, mask, loc, fp, &self.sensor)? else {
                continue;
            };
            let h1 = h1_info_gain(mask, &path.temp_mask)?;
            if h1 == 0 {
                // Walking there reveals nothing, so it cannot make progress.
                continue;
            }
            let h2 = h2_move_cost(&path);
            let h3 = self.future_return(map_view, &path.temp_mask, fp, true_map)?;
            let h4 = if self.cfg.heuristic.delta != 0.0 {
                h4_filters(&path.temp_mask, fp, &self.cfg.filters)
            } else {
                0
            };
            let h = combine(h1 as f64, h2 as f64, h3, h4 as f64, &self.cfg.heuristic);
            if best.is_none_or(|(_, top)| h > top) {
                best = Some((candidates.len(), h));
            }
            candidates.push(Candidate {
                path,
                score: FrontierScore {
                    fp,
                    h1: h1 as f64,
                    h2: h2 as f64,
                    h3,
                    h4: h4 as f64,
                    h,
                },
            });
        }
        Ok(match best {
            Some((best, _)) => PlanOutcome::Step(PlanStep { candidates, best }),
            None => PlanOutcome::Done,
        })
    }

    fn future_return(
        &self,
        map_view: &GridMap,
        temp_mask: &Mask,
        fp: FrontierPoint,
        true_map: Option<&GridMap>,
    ) -> Result<f64> {
        if self.cfg.heuristic.gamma == 0.0 {
            return Ok(0.0);
        }
        if let Some(model) = &self.cfg.model {
            let state = extract_state(map_view, temp_mask, fp, self.cfg.state_d);
            return forward(model, &state);
        }
        let oracle = self.cfg.oracle_h3.as_ref().expect("validated H3 source");
        let truth = true_map.ok_or_else(|| {
            Error::Contract("oracle H3 needs the true map in the plan input".into())
        })?;
        oracle_label(truth, temp_mask, fp, oracle, &self.sensor)
    }

    pub fn run_episode(&self, true_map: &GridMap) -> Result<EpisodeResult> {
        self.run_episode_with(true_map, |_, _| Ok(()))
    }

    /// Runs an episode, calling `observe` with the pre-step input and the
    /// scored step before each traversal.
    pub fn run_episode_with<F>(&self, true_map: &GridMap, mut observe: F) -> Result<EpisodeResult>
    where
        F: FnMut(&PlanInput<'_>, &PlanStep) -> Result<()>,
    {
        let start = start_cell(true_map)
            .ok_or_else(|| Error::Contract("true map has no free start cell".into()))?;
        let budget = self.cfg.budget_for(true_map.size());
        let mut rng = rng_from_seed(self.cfg.seed);
        let mut agent = AgentState::new(start);
        let mut mask = Mask::new(true_map.size());
        self.sensor.scan_into(true_map, &mut mask, start);
        let mut view = true_map.known_view(&mask);
        let mut trace = Vec::new();
        let mut budget_exceeded = false;

        loop {
            if agent.steps_taken >= budget {
                budget_exceeded = true;
                break;
            }
            let input = PlanInput {
                map_view: &view,
                mask: &mask,
                loc: agent.loc,
                true_map: Some(true_map),
            };
            let step = match self.plan_step(input, &mut rng)? {
                PlanOutcome::Done => break,
                PlanOutcome::Step(step) => step,
            };
            observe(&input, &step)?;
            let chosen = step.chosen();
            let mut record = StepRecord {
                step: trace.len(),
                loc: agent.loc,
                chosen: chosen.score.fp,
                score: chosen.score,
                planned_len: chosen.path.len(),
                moves: Vec::with_capacity(chosen.path.len()),
                blocked: false,
            };
            for &cell in &chosen.path.path {
                if agent.steps_taken >= budget {
                    break;
                }
                match move_agent(true_map, &mask, &agent, cell, &self.sensor)? {
                    MoveOutcome::Moved { agent: a, mask: m } => {
                        agent = a;
                        mask = m;
                        view = true_map.known_view(&mask);
                        record.moves.push(cell);
                    }
                    MoveOutcome::Blocked => {
                        record.blocked = true;
                        break;
                    }
                }
            }
            trace.push(record);
        }

        let completed = !budget_exceeded && all_reachable_explored(true_map, &mask, start);
        Ok(EpisodeResult {
            start,
            steps: agent.steps_taken,
            completed,
            budget_exceeded,
            trace,
            final_mask: mask,
        })
    }
}

/// Free function form of [`Planner::plan_step`].
pub fn plan_step(input: PlanInput<'_>, cfg: &PlannerConfig, rng: &mut Rng) -> Result<PlanOutcome> {
    Planner::new(cfg.clone())?.plan_step(input, rng)
}

/// Free function form of [`Planner::run_episode`].
pub fn run_episode(true_map: &GridMap, cfg: &PlannerConfig) -> Result<EpisodeResult> {
    Planner::new(cfg.clone())?.run_episode(true_map)
}

/// True when every free cell 4-connected to `start` on the true map is explored.
pub fn all_reachable_explored(true_map: &GridMap, mask: &Mask, start: Cell) -> bool {
    bfs_distances(true_map, start)
        .iter()
        .zip(mask.cells())
        .all(|(&d, &seen)| d == u32::MAX || seen != 0)
}

/// One planning iteration: where the agent stood, what it chose and the
/// moves it actually made.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: usize,
    pub loc: Cell,
    pub chosen: FrontierPoint,
    pub score: FrontierScore,
    pub planned_len: usize,
    pub moves: Vec<Cell>,
    /// Traversal stopped early at a newly revealed obstacle.
    pub blocked: bool,
}

#[derive(Clone, Debug)]
pub struct EpisodeResult {
    pub start: Cell,
    /// Total grid moves; equals the number of moves across the trace.
    pub steps: usize,
    pub completed: bool,
    pub budget_exceeded: bool,
    pub trace: Vec<StepRecord>,
    pub final_mask: Mask,
}

impl EpisodeResult {
    pub fn moves(&self) -> impl Iterator<Item = Cell> + '_ {
        self.trace.iter().flat_map(|r| r.moves.iter().copied())
    }
}

/// First line of an episode trace file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceHeader {
    pub map_hash: String,
    pub size: usize,
    pub start: Cell,
    pub sensor: SensorConfig,
    pub heuristic: HeuristicConfig,
    pub sampler: SamplerConfig,
    pub filters: Vec<FilterSpec>,
    pub state_d: usize,
    pub step_budget: usize,
    /// `none`, `model:<weights sha256>` or `oracle:<config json>`.
    pub h3_source: String,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TraceLine {
    Header(TraceHeader),
    Step(StepRecord),
    Summary { steps: usize, completed: bool, budget_exceeded: bool },
}

#[derive(Clone, Debug, PartialEq)]
pub struct TraceFile {
    pub header: TraceHeader,
    pub steps: Vec<StepRecord>,
    pub total_steps: usize,
    pub completed: bool,
    pub budget_exceeded: bool,
}

impl TraceFile {
    pub fn from_episode(true_map: &GridMap, cfg: &PlannerConfig, ep: &EpisodeResult) -> Self {
        Self {
            header: TraceHeader {
                map_hash: true_map.content_hash(),
                size: true_map.size(),
                start: ep.start,
                sensor: cfg.sensor,
                heuristic: cfg.heuristic,
                sampler: cfg.sampler,
                filters: cfg.filters.clone(),
                state_d: cfg.state_d,
                step_budget: cfg.budget_for(true_map.size()),
                h3_source: cfg.h3_source(),
                seed: cfg.seed,
            },
            steps: ep.trace.clone(),
            total_steps: ep.steps,
            completed: ep.completed,
            budget_exceeded: ep.budget_exceeded,
        }
    }

    /// JSON lines: header, one line per planning step, summary.
    pub fn write(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        let mut put = |line: &TraceLine| -> Result<()> {
            serde_json::to_writer(&mut w, line)?;
            w.write_all(b"\n").map_err(|e| Error::io(path, e))
        };
        put(&TraceLine::Header(self.header.clone()))?;
        for s in &self.steps {
            put(&TraceLine::Step(s.clone()))?;
        }
        put(&TraceLine::Summary {
            steps: self.total_steps,
            completed: self.completed,
            budget_exceeded: self.budget_exceeded,
        })?;
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let mut header = None;
        let mut steps = Vec::new();
        let mut summary = None;
        for line in BufReader::new(file).lines() {
            let line = line.map_err(|e| Error::io(path, e))?;
            if line.trim().is_empty() {
                continue;
            }
            match serde_json::from_str::<TraceLine>(&line)? {
                TraceLine::Header(h) if header.is_none() => header = Some(h),
                TraceLine::Header(_) => return Err(Error::format("trace file", "duplicate header")),
                TraceLine::Step(s) => steps.push(s),
                TraceLine::Summary {
                    steps,
                    completed,
                    budget_exceeded,
                } => summary = Some((steps, completed, budget_exceeded)),
            }
        }
        let header = header.ok_or_else(|| Error::format("trace file", "missing header"))?;
        let (total_steps, completed, budget_exceeded) = summary.unwrap_or_else(|| {
            (steps.iter().map(|s: &StepRecord| s.moves.len()).sum(), false, false)
        });
        Ok(Self {
            header,
            steps,
            total_steps,
            completed,
            budget_exceeded,
        })
    }
}

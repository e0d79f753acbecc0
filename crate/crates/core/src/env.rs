//! The grid world: random map generation, sensing and movement.

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Cell, GridMap, Mask};
use crate::rng::rng_from_seed;

/// Range sensor: a Euclidean disc of `radius` cells, optionally occluded by
/// occupied cells.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SensorConfig {
    pub radius: u32,
    pub occlusion: bool,
}

impl Default for SensorConfig {
    fn default() -> Self {
        Self {
            radius: 3,
            occlusion: true,
        }
    }
}

impl SensorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.radius == 0 {
            return Err(Error::Config("sensor radius must be >= 1".into()));
        }
        Ok(())
    }

    /// Number of lattice cells in the sensing disc.
    pub fn disc_area(&self) -> usize {
        let r = self.radius as i64;
        (-r..=r)
            .flat_map(|dr| (-r..=r).map(move |dc| dr * dr + dc * dc))
            .filter(|&d2| d2 <= r * r)
            .count()
    }
}

/// Integer line from `(r0, c0)` to `(r1, c1)`, both endpoints included.
pub fn line_cells(r0: isize, c0: isize, r1: isize, c1: isize) -> Vec<(isize, isize)> {
    let (mut r, mut c) = (r0, c0);
    let dc = (c1 - c0).abs();
    let dr = -(r1 - r0).abs();
    let sc = if c0 < c1 { 1 } else { -1 };
    let sr = if r0 < r1 { 1 } else { -1 };
    let mut err = dc + dr;
    let mut out = Vec::with_capacity((dc - dr + 1) as usize);
    loop {
        out.push((r, c));
        if r == r1 && c == c1 {
            break;
        }
        let e2 = 2 * err;
        if e2 >= dr {
            err += dr;
            c += sc;
        }
        if e2 <= dc {
            err += dc;
            r += sr;
        }
    }
    out
}

#[derive(Clone, Debug)]
struct Ray {
    dr: isize,
    dc: isize,
    /// Range into `Sensor::between` holding the cells strictly between origin and target.
    start: usize,
    end: usize,
}

/// A [`SensorConfig`] with its disc footprint and occlusion rays precomputed.
#[derive(Clone, Debug)]
pub struct Sensor {
    config: SensorConfig,
    rays: Vec<Ray>,
    between: Vec<(isize, isize)>,
}

impl Sensor {
    pub fn new(config: SensorConfig) -> Self {
        let r = config.radius as isize;
        let mut rays = Vec::new();
        let mut between = Vec::new();
        for dr in -r..=r {
            for dc in -r..=r {
                if dr * dr + dc * dc > r * r {
                    continue;
                }
                let line = line_cells(0, 0, dr, dc);
                let start = between.len();
                if line.len() > 2 {
                    between.extend_from_slice(&line[1..line.len() - 1]);
                }
                rays.push(Ray {
                    dr,
                    dc,
                    start,
                    end: between.len(),
                });
            }
        }
        Self {
            config,
            rays,
            between,
        }
    }

    pub fn config(&self) -> SensorConfig {
        self.config
    }

    /// Marks every cell visible from `loc` as explored, using `occupancy` to
    /// block rays. Returns the number of newly explored cells.
    pub fn scan_into(&self, occupancy: &GridMap, mask: &mut Mask, loc: Cell) -> usize {
        let size = mask.size() as isize;
        let (r0, c0) = (loc.row as isize, loc.col as isize);
        let occ = occupancy.cells();
        let mut added = 0;
        for ray in &self.rays {
            let (r, c) = (r0 + ray.dr, c0 + ray.dc);
            if r < 0 || c < 0 || r >= size || c >= size {
                continue;
            }
            let idx = (r * size + c) as usize;
            if mask.get_idx(idx) {
                continue;
            }
            if self.config.occlusion {
                let blocked = self.between[ray.start..ray.end]
                    .iter()
                    .any(|&(br, bc)| occ[((r0 + br) * size + c0 + bc) as usize] != 0);
                if blocked {
                    continue;
                }
            }
            mask.set_idx(idx, true);
            added += 1;
        }
        added
    }
}

/// Returns `mask` with everything visible from `loc` marked explored.
pub fn scan(map: &GridMap, mask: &Mask, loc: Cell, sensor: &SensorConfig) -> Mask {
    let mut out = mask.clone();
    Sensor::new(*sensor).scan_into(map, &mut out, loc);
    out
}

/// Random map of axis-aligned rectangular obstacles.
///
/// Rectangles have sides uniform in `[1, max(1, L/10)]` and are dropped at
/// uniform positions until the occupied fraction reaches `density` or `10·L`
/// placements have been tried.
pub fn generate_map(size: usize, density: f64, seed: u64) -> Result<GridMap> {
    if size < 10 {
        return Err(Error::Contract(format!("map size {size} is below the minimum of 10")));
    }
    if !(0.0..=1.0).contains(&density) {
        return Err(Error::Contract(format!("density {density} is outside [0, 1]")));
    }
    let mut rng = rng_from_seed(seed);
    let mut map = GridMap::new(size);
    let target = (density * (size * size) as f64).round() as usize;
    let max_side = (size / 10).max(1);
    let mut occupied = 0;
    for _ in 0..10 * size {
        if occupied >= target {
            break;
        }
        let h = rng.gen_range(1..=max_side);
        let w = rng.gen_range(1..=max_side);
        let r0 = rng.gen_range(0..=size - h);
        let c0 = rng.gen_range(0..=size - w);
        for r in r0..r0 + h {
            for c in c0..c0 + w {
                let cell = Cell::new(r, c);
                if !map.get(cell) {
                    map.set(cell, true);
                    occupied += 1;
                }
            }
        }
    }
    if start_cell(&map).is_none() {
        return Err(Error::Generation(format!(
            "density {density} left no free start cell on a {size}x{size} map"
        )));
    }
    Ok(map)
}

/// The agent's start: the map center, or the free cell nearest to it
/// (Euclidean, ties row-major). `None` if the map has no free cell.
pub fn start_cell(map: &GridMap) -> Option<Cell> {
    let center = Cell::new(map.size() / 2, map.size() / 2);
    if map.is_free(center) {
        return Some(center);
    }
    map.iter_cells()
        .filter(|&c| map.is_free(c))
        .min_by_key(|&c| (c.dist_sq(center), c))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AgentState {
    pub loc: Cell,
    pub steps_taken: usize,
}

impl AgentState {
    pub fn new(loc: Cell) -> Self {
        Self {
            loc,
            steps_taken: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum MoveOutcome {
    Moved { agent: AgentState, mask: Mask },
    /// The target is occupied; nothing changed.
    Blocked,
}

/// One 4-connected step on the true map, followed by a scan at the new cell.
pub fn move_agent(
    map: &GridMap,
    mask: &Mask,
    agent: &AgentState,
    target: Cell,
    sensor: &Sensor,
) -> Result<MoveOutcome> {
    if !map.in_bounds(target) || !agent.loc.is_adjacent4(target) {
        return Err(Error::Contract(format!(
            "move from {} to {} is not a single 4-connected step",
            agent.loc, target
        )));
    }
    if !map.is_free(target) {
        return Ok(MoveOutcome::Blocked);
    }
    let mut mask = mask.clone();
    sensor.scan_into(map, &mut mask, target);
    Ok(MoveOutcome::Moved {
        agent: AgentState {
            loc: target,
            steps_taken: agent.steps_taken + 1,
        },
        mask,
    })
}

//! Frontier extraction and the nearest-plus-random frontier sampler.

use rand::seq::index::sample;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Cell, GridMap, Mask};
use crate::rng::Rng;

/// A frontier point is a standing position: explored, known free, and
/// 8-adjacent to at least one unexplored cell.
pub type FrontierPoint = Cell;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SamplerConfig {
    /// Maximum number of points evaluated per planning step.
    pub n: usize,
    /// How many of those are the nearest points; the rest are random.
    pub k: usize,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self { n: 15, k: 12 }
    }
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::Config("sampler N must be positive".into()));
        }
        if self.k > self.n {
            return Err(Error::Config(format!(
                "sampler k = {} exceeds N = {}",
                self.k, self.n
            )));
        }
        Ok(())
    }
}

const SOBEL_X: [[i32; 3]; 3] = [[-1, 0, 1], [-2, 0, 2], [-1, 0, 1]];
const SOBEL_Y: [[i32; 3]; 3] = [[-1, -2, -1], [0, 0, 0], [1, 2, 1]];

/// Sobel x/y responses of the mask, with border replication.
pub fn sobel_response(mask: &Mask) -> Vec<(i32, i32)> {
    let n = mask.size() as isize;
    let at = |r: isize, c: isize| mask.get_idx((r.clamp(0, n - 1) * n + c.clamp(0, n - 1)) as usize) as i32;
    let mut out = Vec::with_capacity((n * n) as usize);
    for r in 0..n {
        for c in 0..n {
            let (mut gx, mut gy) = (0, 0);
            for (i, dr) in (-1..=1).enumerate() {
                for (j, dc) in (-1..=1).enumerate() {
                    let v = at(r + dr, c + dc);
                    gx += SOBEL_X[i][j] * v;
                    gy += SOBEL_Y[i][j] * v;
                }
            }
            out.push((gx, gy));
        }
    }
    out
}

/// Cells on an exploration edge: non-zero Sobel gradient, plus cells whose
/// neighborhood is non-uniform but point-symmetric, where the antisymmetric
/// Sobel kernels cancel to zero.
pub fn edge_map(mask: &Mask) -> Vec<bool> {
    let n = mask.size();
    sobel_response(mask)
        .into_iter()
        .enumerate()
        .map(|(i, (gx, gy))| {
            if gx != 0 || gy != 0 {
                return true;
            }
            let cell = mask.cell_at(i);
            let v = mask.get_idx(i);
            mask.neighbors8(cell).any(|nb| mask.get_idx(nb.row * n + nb.col) != v)
        })
        .collect()
}

/// Frontier points of `mask`, in row-major order.
pub fn sobel_frontiers(mask: &Mask, map_view: &GridMap) -> Result<Vec<FrontierPoint>> {
    mask.check_same_size(map_view, "sobel_frontiers")?;
    let edges = edge_map(mask);
    Ok(edges
        .iter()
        .enumerate()
        .filter(|&(_, &edge)| edge)
        .map(|(i, _)| mask.cell_at(i))
        .filter(|&cell| is_frontier(mask, map_view, cell))
        .collect())
}

/// The admissibility test applied after edge detection.
pub fn is_frontier(mask: &Mask, map_view: &GridMap, cell: Cell) -> bool {
    mask.is_explored(cell)
        && map_view.is_free(cell)
        && mask.neighbors8(cell).any(|nb| !mask.is_explored(nb))
}

/// Keeps at most `cfg.n` points: the `cfg.k` nearest to `loc` (Euclidean,
/// ties row-major) followed by `n - k` drawn uniformly without replacement
/// from the rest. Below the cap all points are returned in input order.
pub fn sample_frontiers(
    points: &[FrontierPoint],
    loc: Cell,
    cfg: &SamplerConfig,
    rng: &mut Rng,
) -> Vec<FrontierPoint> {
    if points.len() <= cfg.n {
        return points.to_vec();
    }
    let mut by_distance = points.to_vec();
    by_distance.sort_by_key(|&p| (p.dist_sq(loc), p));
    let mut rest = by_distance.split_off(cfg.k);
    // The remainder is drawn from in row-major order so the draw does not
    // depend on how distance ties were laid out.
    rest.sort_unstable();
    let picks = sample(rng, rest.len(), cfg.n - cfg.k);
    by_distance.extend(picks.into_iter().map(|i| rest[i]));
    by_distance
}

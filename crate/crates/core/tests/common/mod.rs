//! Brute-force reference implementations shared by the integration tests.
//! They are written for obviousness, not speed, and avoid the library's
//! precomputed tables and search code wherever possible.

#![allow(dead_code)]

use std::collections::VecDeque;

use frontier_lab::astar::shortest_path;
use frontier_lab::env::line_cells;
use frontier_lab::{Cell, Grid, GridMap, Mask};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Visits every grid cell and asks whether it lies in the disc and has a
/// clear line to `loc`.
pub fn ref_scan(map: &GridMap, mask: &Mask, loc: Cell, radius: usize) -> Mask {
    let n = map.size();
    let mut out = mask.clone();
    for r in 0..n {
        for c in 0..n {
            let dr = r as isize - loc.row as isize;
            let dc = c as isize - loc.col as isize;
            if (dr * dr + dc * dc) as usize > radius * radius {
                continue;
            }
            let line = line_cells(loc.row as isize, loc.col as isize, r as isize, c as isize);
            let between = if line.len() > 2 { &line[1..line.len() - 1] } else { &[][..] };
            let clear = between
                .iter()
                .all(|&(lr, lc)| !map.get(Cell::new(lr as usize, lc as usize)));
            if clear {
                out.set(Cell::new(r, c), true);
            }
        }
    }
    out
}

/// Explored, free in the view, and touching an unexplored cell (8-neighbourhood).
pub fn ref_frontiers(mask: &Mask, view: &GridMap) -> Vec<Cell> {
    let n = mask.size() as isize;
    let mut out = Vec::new();
    for r in 0..n {
        for c in 0..n {
            let here = Cell::new(r as usize, c as usize);
            if !mask.get(here) || view.get(here) {
                continue;
            }
            let mut touches = false;
            for dr in -1..=1 {
                for dc in -1..=1 {
                    let (rr, cc) = (r + dr, c + dc);
                    if (dr, dc) != (0, 0) && rr >= 0 && cc >= 0 && rr < n && cc < n {
                        touches |= !mask.get(Cell::new(rr as usize, cc as usize));
                    }
                }
            }
            if touches {
                out.push(here);
            }
        }
    }
    out
}

/// Plain BFS over free cells; `None` for unreachable.
pub fn ref_bfs(view: &GridMap, start: Cell) -> Vec<Option<usize>> {
    let n = view.size();
    let mut dist = vec![None; n * n];
    if view.get(start) {
        return dist;
    }
    dist[start.row * n + start.col] = Some(0);
    let mut q = VecDeque::from([start]);
    while let Some(cur) = q.pop_front() {
        let d = dist[cur.row * n + cur.col].unwrap();
        let steps: [(isize, isize); 4] = [(-1, 0), (1, 0), (0, -1), (0, 1)];
        for (dr, dc) in steps {
            let (r, c) = (cur.row as isize + dr, cur.col as isize + dc);
            if r < 0 || c < 0 || r >= n as isize || c >= n as isize {
                continue;
            }
            let nb = Cell::new(r as usize, c as usize);
            if !view.get(nb) && dist[nb.row * n + nb.col].is_none() {
                dist[nb.row * n + nb.col] = Some(d + 1);
                q.push_back(nb);
            }
        }
    }
    dist
}

/// Number of explored cells in the `size`×`size` window around `fp`,
/// excluding `fp` itself; cells off the grid count as unexplored.
pub fn ref_window_count(mask: &Mask, fp: Cell, size: usize) -> u32 {
    let half = (size / 2) as isize;
    let n = mask.size() as isize;
    let mut count = 0;
    for dr in -half..=half {
        for dc in -half..=half {
            let (r, c) = (fp.row as isize + dr, fp.col as isize + dc);
            if (dr, dc) == (0, 0) || r < 0 || c < 0 || r >= n || c >= n {
                continue;
            }
            count += mask.get(Cell::new(r as usize, c as usize)) as u32;
        }
    }
    count
}

/// One-step clairvoyant return by exhaustive enumeration: the best gain of
/// walking to any reachable frontier point of the true map.
pub fn ref_one_step_return(truth: &GridMap, mask: &Mask, fp: Cell, radius: usize) -> f64 {
    let dist = ref_bfs(truth, fp);
    let n = truth.size();
    let mut best = 0usize;
    for target in ref_frontiers(mask, truth) {
        if dist[target.row * n + target.col].is_none() {
            continue;
        }
        let path = shortest_path(truth, fp, target).unwrap().unwrap();
        let mut temp = ref_scan(truth, mask, fp, radius);
        for &cell in &path {
            temp = ref_scan(truth, &temp, cell, radius);
        }
        let gain = mask
            .cells()
            .iter()
            .zip(temp.cells())
            .filter(|(a, b)| a != b)
            .count();
        best = best.max(gain);
    }
    best as f64
}

/// Random obstacle field.
pub fn random_map(size: usize, density: f64, rng: &mut impl Rng) -> GridMap {
    GridMap::from_grid(
        Grid::from_cells(size, (0..size * size).map(|_| rng.gen_bool(density) as u8).collect()).unwrap(),
    )
}

/// A mask of a few explored blobs, which has long frontiers, plus a little
/// salt noise, which has isolated and point-symmetric cases.
pub fn random_mask(size: usize, rng: &mut impl Rng) -> Mask {
    let mut mask = Mask::new(size);
    for _ in 0..rng.gen_range(1..5) {
        let (r0, c0) = (rng.gen_range(0..size), rng.gen_range(0..size));
        let rad = rng.gen_range(1..size / 2) as isize;
        for r in 0..size {
            for c in 0..size {
                let (dr, dc) = (r as isize - r0 as isize, c as isize - c0 as isize);
                if dr * dr + dc * dc <= rad * rad {
                    mask.set(Cell::new(r, c), true);
                }
            }
        }
    }
    let noise = rng.gen_range(0.0..0.3);
    for i in 0..size * size {
        if rng.gen_bool(noise) {
            let v = mask.get_idx(i);
            mask.set_idx(i, !v);
        }
    }
    mask
}

pub fn ref_mu(m: &[Vec<f64>]) -> f64 {
    let mut total = 0.0;
    for row in m {
        let mut s = 0.0;
        for &v in row {
            s += v;
        }
        total += s / row.len() as f64;
    }
    total / m.len() as f64
}

pub fn ref_sigma(m: &[Vec<f64>]) -> f64 {
    let mut total = 0.0;
    for row in m {
        let mut s = 0.0;
        for &v in row {
            s += v;
        }
        let mean = s / row.len() as f64;
        total += mean * mean;
    }
    let mu = ref_mu(m);
    (total / m.len() as f64 - mu * mu).max(0.0)
}

pub fn ref_s(base: f64, variant: f64) -> f64 {
    (base - variant) / base * 100.0
}

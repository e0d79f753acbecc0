//! A* on the 4-connected grid, treating unexplored cells as free, plus the
//! mask the agent would hold after walking the path.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use crate::env::Sensor;
use crate::error::{Error, Result};
use crate::grid::{Cell, GridMap, Mask};

#[derive(Clone, Debug, PartialEq)]
pub struct PathResult {
    /// Cells after the start up to and including the goal.
    pub path: Vec<Cell>,
    /// Mask after scanning at the start and at every path cell.
    pub temp_mask: Mask,
}

impl PathResult {
    /// Path length P.
    pub fn len(&self) -> usize {
        self.path.len()
    }

    pub fn is_empty(&self) -> bool {
        self.path.is_empty()
    }
}

/// Minimum-length path from `start` to `goal` through cells not marked
/// occupied in `map_view`. Ties in the open list go to lower f, then lower h,
/// then the row-major-first cell. Returns `None` if the goal is unreachable.
pub fn shortest_path(map_view: &GridMap, start: Cell, goal: Cell) -> Result<Option<Vec<Cell>>> {
    if !map_view.in_bounds(start) || !map_view.in_bounds(goal) {
        return Err(Error::Contract(format!(
            "A* endpoints {start} -> {goal} outside a {0}x{0} map",
            map_view.size()
        )));
    }
    if !map_view.is_free(start) {
        return Err(Error::Contract(format!("A* start {start} is occupied")));
    }
    if !map_view.is_free(goal) {
        return Ok(None);
    }
    if start == goal {
        return Ok(Some(Vec::new()));
    }

    let n = map_view.size();
    let occ = map_view.cells();
    let start_i = map_view.index(start);
    let goal_i = map_view.index(goal);
    let h = |i: usize| (i / n).abs_diff(goal.row) + (i % n).abs_diff(goal.col);

    let mut g = vec![u32::MAX; n * n];
    let mut parent = vec![u32::MAX; n * n];
    let mut closed = vec![false; n * n];
    let mut open = BinaryHeap::new();
    g[start_i] = 0;
    open.push(Reverse((h(start_i), h(start_i), start_i)));

    while let Some(Reverse((_, _, cur))) = open.pop() {
        if closed[cur] {
            continue;
        }
        closed[cur] = true;
        if cur == goal_i {
            let mut path = Vec::with_capacity(g[cur] as usize);
            let mut at = cur;
            while at != start_i {
                path.push(map_view.cell_at(at));
                at = parent[at] as usize;
            }
            path.reverse();
            return Ok(Some(path));
        }
        let (r, c) = (cur / n, cur % n);
        let next_g = g[cur] + 1;
        let mut relax = |nb: usize| {
            if occ[nb] == 0 && !closed[nb] && next_g < g[nb] {
                g[nb] = next_g;
                parent[nb] = cur as u32;
                let hn = h(nb);
                open.push(Reverse((next_g as usize + hn, hn, nb)));
            }
        };
        if r > 0 {
            relax(cur - n);
        }
        if c > 0 {
            relax(cur - 1);
        }
        if c + 1 < n {
            relax(cur + 1);
        }
        if r + 1 < n {
            relax(cur + n);
        }
    }
    Ok(None)
}

/// `mask` unioned with a scan at `start` and at each cell of `path`, using
/// `map_view` for occlusion.
pub fn simulate_mask(
    map_view: &GridMap,
    mask: &Mask,
    start: Cell,
    path: &[Cell],
    sensor: &Sensor,
) -> Mask {
    let mut temp = mask.clone();
    sensor.scan_into(map_view, &mut temp, start);
    for &cell in path {
        sensor.scan_into(map_view, &mut temp, cell);
    }
    temp
}

/// Path plus simulated post-traversal mask, or `None` when unreachable.
pub fn a_star(
    map_view: &GridMap,
    mask: &Mask,
    start: Cell,
    goal: Cell,
    sensor: &Sensor,
) -> Result<Option<PathResult>> {
    mask.check_same_size(map_view, "a_star")?;
    Ok(shortest_path(map_view, start, goal)?.map(|path| {
        let temp_mask = simulate_mask(map_view, mask, start, &path, sensor);
        PathResult { path, temp_mask }
    }))
}

/// Breadth-first distances from `start` over free cells of `map_view`;
/// `u32::MAX` marks unreachable cells.
pub fn bfs_distances(map_view: &GridMap, start: Cell) -> Vec<u32> {
    let n = map_view.size();
    let mut dist = vec![u32::MAX; n * n];
    if !map_view.is_free(start) {
        return dist;
    }
    let mut queue = std::collections::VecDeque::new();
    let s = map_view.index(start);
    dist[s] = 0;
    queue.push_back(s);
    while let Some(cur) = queue.pop_front() {
        let cell = map_view.cell_at(cur);
        for nb in map_view.neighbors4(cell) {
            let i = map_view.index(nb);
            if dist[i] == u32::MAX && map_view.is_free(nb) {
                dist[i] = dist[cur] + 1;
                queue.push_back(i);
            }
        }
    }
    dist
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::SensorConfig;

    fn sensor() -> Sensor {
        Sensor::new(SensorConfig::default())
    }

    #[test]
    fn degenerate_query() {
        let view = GridMap::new(10);
        let mask = Mask::new(10);
        let start = Cell::new(4, 4);
        let res = a_star(&view, &mask, start, start, &sensor()).unwrap().unwrap();
        assert!(res.is_empty());
        assert_eq!(res.temp_mask, crate::env::scan(&view, &mask, start, &SensorConfig::default()));
    }

    #[test]
    fn open_space_meets_manhattan_bound() {
        let view = GridMap::new(10);
        let res = a_star(&view, &Mask::new(10), Cell::new(0, 0), Cell::new(0, 5), &sensor())
            .unwrap()
            .unwrap();
        assert_eq!(res.len(), 5);
        assert_eq!(res.path.last(), Some(&Cell::new(0, 5)));
    }

    #[test]
    fn detours_around_walls_and_reports_unreachable() {
        let view = GridMap::from_rows(&["00000", "11110", "00000", "01111", "00000"]).unwrap();
        let res = a_star(&view, &Mask::new(5), Cell::new(0, 0), Cell::new(4, 4), &sensor())
            .unwrap()
            .unwrap();
        assert_eq!(res.len(), 16);
        let mut prev = Cell::new(0, 0);
        for &c in &res.path {
            assert!(prev.is_adjacent4(c));
            assert!(view.is_free(c));
            prev = c;
        }

        let walled = GridMap::from_rows(&["000", "111", "000"]).unwrap();
        assert!(a_star(&walled, &Mask::new(3), Cell::new(0, 0), Cell::new(2, 2), &sensor())
            .unwrap()
            .is_none());
        assert!(a_star(&walled, &Mask::new(3), Cell::new(0, 0), Cell::new(1, 1), &sensor())
            .unwrap()
            .is_none());
    }

    #[test]
    fn occupied_start_is_a_contract_error() {
        let view = GridMap::from_rows(&["100", "000", "000"]).unwrap();
        assert!(shortest_path(&view, Cell::new(0, 0), Cell::new(2, 2)).is_err());
    }

    #[test]
    fn tie_break_prefers_row_major_cells() {
        // Equal-length paths exist; the result must be stable and deterministic.
        let view = GridMap::new(6);
        let a = shortest_path(&view, Cell::new(0, 0), Cell::new(3, 3)).unwrap().unwrap();
        let b = shortest_path(&view, Cell::new(0, 0), Cell::new(3, 3)).unwrap().unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 6);
    }
}
